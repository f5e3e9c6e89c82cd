#pragma once

#include <string>
#include <string_view>

namespace flexenc {

enum class ActivationKind { SELU, RELU, RELU6, ELU, LRELU, SIGMOID, TANH, SWISH };

inline constexpr ActivationKind kAllActivations[] = {
    ActivationKind::SELU,    ActivationKind::RELU, ActivationKind::RELU6,
    ActivationKind::ELU,     ActivationKind::LRELU, ActivationKind::SIGMOID,
    ActivationKind::TANH,    ActivationKind::SWISH,
};

// Self-normalizing constants for SELU.
inline constexpr double kSeluLambda = 1.0507009873554805;
inline constexpr double kSeluAlpha = 1.6732632423543772;
// Negative slope for LRELU and alpha for ELU.
inline constexpr double kLreluSlope = 0.01;
inline constexpr double kEluAlpha = 1.0;

double activate(ActivationKind kind, double x);

// Exact analytic derivative; kink points (RELU family at 0, RELU6 at 6)
// take the right-hand derivative.
double activate_grad(ActivationKind kind, double x);

std::string activation_name(ActivationKind kind);
ActivationKind activation_from_name(std::string_view name);  // case-insensitive

}  // namespace flexenc
