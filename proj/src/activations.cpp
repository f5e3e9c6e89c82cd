#include "flexenc/activations.hpp"

#include <cctype>
#include <cmath>

#include "flexenc/errors.hpp"

namespace flexenc {

namespace {
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

double activate(ActivationKind kind, double x) {
    switch (kind) {
        case ActivationKind::RELU:
            return x > 0.0 ? x : 0.0;
        case ActivationKind::RELU6:
            return x > 0.0 ? (x < 6.0 ? x : 6.0) : 0.0;
        case ActivationKind::ELU:
            return x > 0.0 ? x : kEluAlpha * (std::exp(x) - 1.0);
        case ActivationKind::LRELU:
            return x > 0.0 ? x : kLreluSlope * x;
        case ActivationKind::SELU:
            return x > 0.0 ? kSeluLambda * x : kSeluLambda * kSeluAlpha * (std::exp(x) - 1.0);
        case ActivationKind::SIGMOID:
            return sigmoid(x);
        case ActivationKind::TANH:
            return std::tanh(x);
        case ActivationKind::SWISH:
            return x * sigmoid(x);
    }
    return x;
}

double activate_grad(ActivationKind kind, double x) {
    switch (kind) {
        case ActivationKind::RELU:
            return x >= 0.0 ? 1.0 : 0.0;
        case ActivationKind::RELU6:
            return (x >= 0.0 && x < 6.0) ? 1.0 : 0.0;
        case ActivationKind::ELU:
            return x >= 0.0 ? 1.0 : kEluAlpha * std::exp(x);
        case ActivationKind::LRELU:
            return x >= 0.0 ? 1.0 : kLreluSlope;
        case ActivationKind::SELU:
            return x >= 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(x);
        case ActivationKind::SIGMOID: {
            double s = sigmoid(x);
            return s * (1.0 - s);
        }
        case ActivationKind::TANH: {
            double t = std::tanh(x);
            return 1.0 - t * t;
        }
        case ActivationKind::SWISH: {
            double s = sigmoid(x);
            return s + x * s * (1.0 - s);
        }
    }
    return 1.0;
}

std::string activation_name(ActivationKind kind) {
    switch (kind) {
        case ActivationKind::SELU: return "SELU";
        case ActivationKind::RELU: return "RELU";
        case ActivationKind::RELU6: return "RELU6";
        case ActivationKind::ELU: return "ELU";
        case ActivationKind::LRELU: return "LRELU";
        case ActivationKind::SIGMOID: return "SIGMOID";
        case ActivationKind::TANH: return "TANH";
        case ActivationKind::SWISH: return "SWISH";
    }
    return "RELU";
}

ActivationKind activation_from_name(std::string_view name) {
    std::string up;
    up.reserve(name.size());
    for (char c : name) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    for (ActivationKind k : kAllActivations) {
        if (activation_name(k) == up) return k;
    }
    throw ConfigError("unknown activation '" + std::string(name) + "'");
}

}  // namespace flexenc
