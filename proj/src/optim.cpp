#include "flexenc/optim.hpp"

#include <cctype>
#include <cmath>

#include "flexenc/errors.hpp"

namespace flexenc {

std::string optimizer_name(OptimizerKind kind) {
    switch (kind) {
        case OptimizerKind::SGD: return "SGD";
        case OptimizerKind::ADAM: return "ADAM";
        case OptimizerKind::ADAGRAD: return "ADAGRAD";
        case OptimizerKind::RMSPROP: return "RMSPROP";
    }
    return "SGD";
}

OptimizerKind optimizer_from_name(std::string_view name) {
    std::string up;
    up.reserve(name.size());
    for (char c : name) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    for (OptimizerKind k : kAllOptimizers) {
        if (optimizer_name(k) == up) return k;
    }
    throw ConfigError("unknown optimizer '" + std::string(name) + "'");
}

OptimState::OptimState(OptimizerKind kind, std::vector<std::size_t> param_sizes)
    : kind_(kind), sizes_(std::move(param_sizes)) {
    if (kind_ != OptimizerKind::SGD) {
        m_.reserve(sizes_.size());
        for (std::size_t n : sizes_) m_.emplace_back(n, 0.0);
    }
    if (kind_ == OptimizerKind::ADAM) {
        v_.reserve(sizes_.size());
        for (std::size_t n : sizes_) v_.emplace_back(n, 0.0);
    }
}

template <typename Scalar>
void OptimState::step(std::vector<ParamUpdate<Scalar>> params, double lr, double weight_decay) {
    if (params.size() != sizes_.size()) {
        throw ShapeError("optimizer_step: got " + std::to_string(params.size()) +
                         " parameter slots, state holds " + std::to_string(sizes_.size()));
    }
    for (std::size_t p = 0; p < params.size(); ++p) {
        if (params[p].value.size() != sizes_[p] || params[p].grad.size() != sizes_[p]) {
            throw ShapeError("optimizer_step: slot " + std::to_string(p) + " has size " +
                             std::to_string(params[p].value.size()) + "/" +
                             std::to_string(params[p].grad.size()) + ", state expects " +
                             std::to_string(sizes_[p]));
        }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(t_));

    for (std::size_t p = 0; p < params.size(); ++p) {
        Scalar* w = params[p].value.data();
        const double* g = params[p].grad.data();
        const double wd = params[p].apply_decay ? weight_decay : 0.0;
        const std::size_t n = sizes_[p];
        switch (kind_) {
            case OptimizerKind::SGD: {
                for (std::size_t i = 0; i < n; ++i) {
                    double wi = static_cast<double>(w[i]);
                    double gi = g[i] + wd * wi;
                    w[i] = static_cast<Scalar>(wi - lr * gi);
                }
                break;
            }
            case OptimizerKind::ADAM: {
                double* m = m_[p].data();
                double* v = v_[p].data();
                for (std::size_t i = 0; i < n; ++i) {
                    double wi = static_cast<double>(w[i]);
                    double gi = g[i] + wd * wi;
                    m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * gi;
                    v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * gi * gi;
                    double mhat = m[i] / bc1;
                    double vhat = v[i] / bc2;
                    w[i] = static_cast<Scalar>(wi - lr * mhat / (std::sqrt(vhat) + kOptimEps));
                }
                break;
            }
            case OptimizerKind::ADAGRAD: {
                double* acc = m_[p].data();
                for (std::size_t i = 0; i < n; ++i) {
                    double wi = static_cast<double>(w[i]);
                    double gi = g[i] + wd * wi;
                    acc[i] += gi * gi;
                    w[i] = static_cast<Scalar>(wi - lr * gi / (std::sqrt(acc[i]) + kOptimEps));
                }
                break;
            }
            case OptimizerKind::RMSPROP: {
                double* acc = m_[p].data();
                for (std::size_t i = 0; i < n; ++i) {
                    double wi = static_cast<double>(w[i]);
                    double gi = g[i] + wd * wi;
                    acc[i] = kRmspropRho * acc[i] + (1.0 - kRmspropRho) * gi * gi;
                    w[i] = static_cast<Scalar>(wi - lr * gi / (std::sqrt(acc[i]) + kOptimEps));
                }
                break;
            }
        }
    }
}

template void OptimState::step<float>(std::vector<ParamUpdate<float>>, double, double);
template void OptimState::step<double>(std::vector<ParamUpdate<double>>, double, double);

}  // namespace flexenc
