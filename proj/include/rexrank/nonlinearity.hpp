#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "rexrank/matrix.hpp"

namespace rexrank {

enum class ActKind {
    Identity,  // no-nonlinearity control
    ReLU,
    ReLU6,
    LeakyReLU,
    ELU,
    SoftPlus,
    HardSwish,
    SiLU,
};

// Element-wise nonlinearity. `slope` applies to LeakyReLU only and `alpha`
// to ELU only; both are ignored for every other kind.
struct Nonlinearity {
    ActKind kind = ActKind::ReLU;
    double slope = 0.01;
    double alpha = 1.0;

    friend bool operator==(const Nonlinearity& a, const Nonlinearity& b) {
        if (a.kind != b.kind) return false;
        if (a.kind == ActKind::LeakyReLU) return a.slope == b.slope;
        if (a.kind == ActKind::ELU) return a.alpha == b.alpha;
        return true;
    }
};

inline double apply_scalar(const Nonlinearity& f, double x) {
    switch (f.kind) {
        case ActKind::Identity:
            return x;
        case ActKind::ReLU:
            return x > 0.0 ? x : 0.0;
        case ActKind::ReLU6:
            return std::min(std::max(x, 0.0), 6.0);
        case ActKind::LeakyReLU:
            return x >= 0.0 ? x : f.slope * x;
        case ActKind::ELU:
            return x >= 0.0 ? x : f.alpha * std::expm1(x);
        case ActKind::SoftPlus:
            // ln(1 + e^x), written to avoid overflow for large |x|.
            return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
        case ActKind::HardSwish:
            return x * std::min(std::max(x + 3.0, 0.0), 6.0) / 6.0;
        case ActKind::SiLU:
            return x / (1.0 + std::exp(-x));
    }
    return x;
}

inline Matrix apply_nonlinearity(const Nonlinearity& f, const Matrix& m) {
    if (f.kind == ActKind::Identity) return m;
    Matrix out = m;
    for (double& x : out.data) x = apply_scalar(f, x);
    return out;
}

inline const char* act_name(ActKind kind) {
    switch (kind) {
        case ActKind::Identity: return "identity";
        case ActKind::ReLU: return "relu";
        case ActKind::ReLU6: return "relu6";
        case ActKind::LeakyReLU: return "leaky_relu";
        case ActKind::ELU: return "elu";
        case ActKind::SoftPlus: return "softplus";
        case ActKind::HardSwish: return "hard_swish";
        case ActKind::SiLU: return "silu";
    }
    return "identity";
}

inline ActKind act_from_name(const std::string& name) {
    if (name == "identity") return ActKind::Identity;
    if (name == "relu") return ActKind::ReLU;
    if (name == "relu6") return ActKind::ReLU6;
    if (name == "leaky_relu") return ActKind::LeakyReLU;
    if (name == "elu") return ActKind::ELU;
    if (name == "softplus") return ActKind::SoftPlus;
    if (name == "hard_swish") return ActKind::HardSwish;
    if (name == "silu") return ActKind::SiLU;
    throw std::invalid_argument("unknown nonlinearity: " + name);
}

// The seven nonlinearities of the single-layer study plus the identity control.
inline const std::array<ActKind, 8>& all_act_kinds() {
    static const std::array<ActKind, 8> kinds = {
        ActKind::Identity,  ActKind::ReLU, ActKind::ReLU6,     ActKind::LeakyReLU,
        ActKind::ELU,       ActKind::SoftPlus, ActKind::HardSwish, ActKind::SiLU,
    };
    return kinds;
}

}  // namespace rexrank
