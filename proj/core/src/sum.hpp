#pragma once

#include <cmath>

namespace fracac::detail {

// Plain or Neumaier-compensated running sum.
class Accumulator {
 public:
  explicit Accumulator(bool compensated) : comp_(compensated) {}
  void add(double x) {
    if (!comp_) {
      s_ += x;
      return;
    }
    const double t = s_ + x;
    if (std::abs(s_) >= std::abs(x))
      c_ += (s_ - t) + x;
    else
      c_ += (x - t) + s_;
    s_ = t;
  }
  double value() const { return s_ + c_; }

 private:
  bool comp_;
  double s_ = 0.0;
  double c_ = 0.0;
};

}  // namespace fracac::detail
