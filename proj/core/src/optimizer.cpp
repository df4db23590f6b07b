#include "nrbf/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace nrbf {

void RMSProp::step(const std::vector<std::vector<double>*>& params,
                   const std::vector<const std::vector<double>*>& grads) {
    if (params.size() != grads.size()) {
        throw std::invalid_argument("RMSProp: parameter/gradient tensor count mismatch");
    }
    if (accum_.empty()) {
        for (const auto* p : params) accum_.emplace_back(p->size(), 0.0);
    }
    if (accum_.size() != params.size()) {
        throw std::invalid_argument("RMSProp: tensor count changed between steps");
    }
    for (std::size_t t = 0; t < params.size(); ++t) {
        std::vector<double>& p = *params[t];
        const std::vector<double>& g = *grads[t];
        std::vector<double>& v = accum_[t];
        if (p.size() != g.size() || p.size() != v.size()) {
            throw std::invalid_argument("RMSProp: tensor shape mismatch");
        }
        for (std::size_t i = 0; i < p.size(); ++i) {
            v[i] = rho_ * v[i] + (1.0 - rho_) * g[i] * g[i];
            p[i] -= lr_ * g[i] / std::sqrt(v[i] + eps_);
        }
    }
}

}  // namespace nrbf
