#pragma once

#include <vector>

#include "nrbf/matrix.hpp"

namespace nrbf {

/// RMSProp: v <- rho v + (1-rho) g^2; p <- p - lr g / sqrt(v + eps).
class RMSProp {
public:
    RMSProp(double learning_rate, double decay_rho = 0.9, double epsilon = 1e-8)
        : lr_(learning_rate), rho_(decay_rho), eps_(epsilon) {}

    void step(const std::vector<std::vector<double>*>& params,
              const std::vector<const std::vector<double>*>& grads);

    double learning_rate() const { return lr_; }
    const std::vector<std::vector<double>>& accumulators() const { return accum_; }

private:
    double lr_;
    double rho_;
    double eps_;
    std::vector<std::vector<double>> accum_;  // lazily sized on first step
};

}  // namespace nrbf
