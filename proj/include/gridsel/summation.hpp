#pragma once

#include <cmath>

namespace gridsel {

// Neumaier's variant of Kahan summation. Adding +0.0 leaves the state untouched,
// which the expression engines rely on when they skip underflowed tails.
class CompensatedSum {
 public:
  CompensatedSum& operator+=(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
    return *this;
  }

  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace gridsel
