#include "nrbf/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

namespace nrbf {

double check_gradient(const std::function<double(std::span<const double>)>& f,
                      std::span<const double> analytic_grad,
                      std::span<const double> point, double step) {
    if (step <= 0.0 || step > 1e-2) {
        throw std::invalid_argument("check_gradient: step must be in (0, 1e-2]");
    }
    if (analytic_grad.size() != point.size()) {
        throw std::invalid_argument("check_gradient: gradient/point length mismatch");
    }
    std::vector<double> p(point.begin(), point.end());
    double max_rel = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double orig = p[i];
        p[i] = orig + step;
        const double fp = f(p);
        p[i] = orig - step;
        const double fm = f(p);
        p[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw std::runtime_error("check_gradient: non-finite function value");
        }
        const double numeric = (fp - fm) / (2.0 * step);
        const double denom = std::max(1.0, std::abs(analytic_grad[i]));
        max_rel = std::max(max_rel, std::abs(numeric - analytic_grad[i]) / denom);
    }
    return max_rel;
}

}  // namespace nrbf
