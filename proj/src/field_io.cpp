#include "gridsel/field_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "gridsel/errors.hpp"

namespace gridsel {

std::string format_number(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_matrix(std::ostream& out, std::int64_t slot_index, const Grid<double>& values) {
  const int side = values.side();
  out << side << ' ' << slot_index << '\n';
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      if (c) out << ' ';
      out << format_number(values(r, c));
    }
    out << '\n';
  }
}

void write_matrix(std::ostream& out, std::int64_t slot_index, const Grid<std::int64_t>& values) {
  const int side = values.side();
  out << side << ' ' << slot_index << '\n';
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      if (c) out << ' ';
      out << values(r, c);
    }
    out << '\n';
  }
}

namespace {

class TokenReader {
 public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  bool next(std::string& tok) {
    while (pos_ >= line_.size() || line_.find_first_not_of(" \t\r", pos_) == std::string::npos) {
      if (!std::getline(in_, line_)) return false;
      ++line_no_;
      pos_ = 0;
    }
    const auto start = line_.find_first_not_of(" \t\r", pos_);
    auto end = line_.find_first_of(" \t\r", start);
    if (end == std::string::npos) end = line_.size();
    tok = line_.substr(start, end - start);
    pos_ = end;
    return true;
  }

  std::size_t line() const { return line_no_; }

 private:
  std::istream& in_;
  std::string line_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
};

template <typename T>
T parse_token(const std::string& tok, std::size_t line) {
  T v{};
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
    throw ParseError(line, "bad numeric token '" + tok + "'");
  }
  return v;
}

}  // namespace

std::vector<MatrixBlock> read_matrices(std::istream& in) {
  std::vector<MatrixBlock> blocks;
  TokenReader reader(in);
  std::string tok;
  while (reader.next(tok)) {
    const int side = parse_token<int>(tok, reader.line());
    if (side < 1) throw ParseError(reader.line(), "matrix side must be positive");
    if (!reader.next(tok)) throw ParseError(reader.line(), "missing slot index in header");
    const auto slot = parse_token<std::int64_t>(tok, reader.line());
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(side) * side);
    for (std::size_t i = 0; i < static_cast<std::size_t>(side) * side; ++i) {
      if (!reader.next(tok)) throw ParseError(reader.line(), "truncated matrix body");
      vals.push_back(parse_token<double>(tok, reader.line()));
    }
    blocks.push_back(MatrixBlock{slot, Grid<double>(side, std::move(vals))});
  }
  return blocks;
}

std::vector<MatrixBlock> read_matrix_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open matrix file: " + path.string());
  return read_matrices(in);
}

}  // namespace gridsel
