#include "gridsel/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace gridsel {

double round_sig(double v) {
  if (!std::isfinite(v)) return v;
  return std::strtod(format_sig(v).c_str(), nullptr);
}

std::string format_sig(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace gridsel
