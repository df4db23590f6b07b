#pragma once

#include <functional>
#include <span>
#include <vector>

namespace nrbf {

/// Central-difference gradient verification. Returns the maximum per-coordinate
/// relative error between the analytic gradient and
/// (f(p + h e_i) - f(p - h e_i)) / 2h, with denominator max(1, |analytic_i|).
/// Throws if f evaluates to a non-finite value at any probe point.
double check_gradient(const std::function<double(std::span<const double>)>& f,
                      std::span<const double> analytic_grad,
                      std::span<const double> point, double step = 1e-5);

}  // namespace nrbf
