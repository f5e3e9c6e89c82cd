#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace flexenc {

enum class OptimizerKind { SGD, ADAM, ADAGRAD, RMSPROP };

inline constexpr OptimizerKind kAllOptimizers[] = {
    OptimizerKind::SGD, OptimizerKind::ADAM, OptimizerKind::ADAGRAD, OptimizerKind::RMSPROP};

// Conventional hyperconstants; only the kind is configurable.
inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kRmspropRho = 0.9;
inline constexpr double kOptimEps = 1e-8;

std::string optimizer_name(OptimizerKind kind);
OptimizerKind optimizer_from_name(std::string_view name);  // case-insensitive

// One parameter tensor in an update: storage, matching gradient, and whether
// the L2 decay term applies (weights yes, biases no).
template <typename Scalar>
struct ParamUpdate {
    std::span<Scalar> value;
    std::span<const double> grad;
    bool apply_decay = true;
};

// Per-parameter accumulators plus the shared step counter. Owned by exactly
// one training run.
class OptimState {
  public:
    OptimState() = default;
    OptimState(OptimizerKind kind, std::vector<std::size_t> param_sizes);

    OptimizerKind kind() const { return kind_; }
    std::int64_t step_count() const { return t_; }

    // Applies g' = g + weight_decay * w (decayed slots only) followed by the
    // update rule for the configured kind. All arithmetic runs in double; the
    // result is stored back at Scalar precision.
    template <typename Scalar>
    void step(std::vector<ParamUpdate<Scalar>> params, double lr, double weight_decay);

  private:
    OptimizerKind kind_ = OptimizerKind::SGD;
    std::vector<std::size_t> sizes_;
    std::vector<std::vector<double>> m_;  // first moment / squared-grad accumulator
    std::vector<std::vector<double>> v_;  // second moment (ADAM only)
    std::int64_t t_ = 0;
};

extern template void OptimState::step<float>(std::vector<ParamUpdate<float>>, double, double);
extern template void OptimState::step<double>(std::vector<ParamUpdate<double>>, double, double);

}  // namespace flexenc
