#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rexrank/costmodel.hpp"
#include "rexrank/io_util.hpp"
#include "rexrank/model_spec.hpp"

namespace rexrank {

inline constexpr const char* kModelSpecSchema = "rexrank-spec/1";

// Linear channel parameterization: c_i = round(a*i + b) for i = 1..d.
struct LinearParam {
    double slope_a = 0.0;
    double intercept_b = 8.0;
    int depth_d = 1;

    void validate() const {
        if (slope_a < 0.0) throw std::invalid_argument("LinearParam: slope must be >= 0");
        if (depth_d < 1) throw std::invalid_argument("LinearParam: depth must be >= 1");
    }
};

namespace detail {
// Round half away from zero; all channel values here are positive.
inline int round_channel(double x) { return static_cast<int>(std::llround(x)); }
}  // namespace detail

// Evaluates the linear parameterization, rounding half away from zero and
// clamping to the previous value so the sequence never decreases.
inline std::vector<int> channels_from_linear(const LinearParam& p) {
    p.validate();
    std::vector<int> channels(static_cast<std::size_t>(p.depth_d));
    int prev = 0;
    for (int i = 1; i <= p.depth_d; ++i) {
        int c = detail::round_channel(p.slope_a * i + p.intercept_b);
        if (c < 8)
            throw std::invalid_argument("channels_from_linear: channel " + std::to_string(i) +
                                        " would be " + std::to_string(c) + " (< 8)");
        c = std::max(c, prev);
        channels[static_cast<std::size_t>(i - 1)] = c;
        prev = c;
    }
    return channels;
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double rms_residual = 0.0;
};

// Ordinary least squares of c_i against the block index i = 1..d.
inline LinearFit fit_linear_real(const std::vector<double>& channels) {
    const std::size_t n = channels.size();
    if (n < 2) throw std::invalid_argument("fit_linear: need at least 2 channels");
    double mean_i = 0.0, mean_c = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        mean_i += static_cast<double>(k + 1);
        mean_c += channels[k];
    }
    mean_i /= n;
    mean_c /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double di = static_cast<double>(k + 1) - mean_i;
        sxx += di * di;
        sxy += di * (channels[k] - mean_c);
    }
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = mean_c - fit.slope * mean_i;
    double ssr = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double r = channels[k] - (fit.intercept + fit.slope * (k + 1));
        ssr += r * r;
    }
    fit.rms_residual = std::sqrt(ssr / n);
    return fit;
}

inline LinearFit fit_linear(const std::vector<int>& channels) {
    return fit_linear_real(std::vector<double>(channels.begin(), channels.end()));
}

// ---------------------------------------------------------------------------
// Family layouts: everything about a model family except its channels.
// ---------------------------------------------------------------------------

struct FamilyLayout {
    std::string family;
    BlockKind kind = BlockKind::InvertedBottleneck;
    int depth = 0;
    std::vector<int> strides;
    std::vector<double> expansions;
    std::vector<bool> use_se;
    int se_reduction = 12;
    int stem_channels = 32;
    int stem_stride = 2;
    Nonlinearity stem_act{ActKind::ReLU6};
    Nonlinearity act_after_expand{ActKind::SiLU};
    Nonlinearity act_after_dw{ActKind::ReLU6};
    int penultimate = 1280;
    std::optional<int> head_hidden;
    ShortcutKind stride1_shortcut = ShortcutKind::ZeroPad;
};

inline ModelSpec assemble_model(const FamilyLayout& layout, const std::vector<int>& channels,
                                std::string name) {
    if (static_cast<int>(channels.size()) != layout.depth)
        throw std::invalid_argument("assemble_model: channel count " +
                                    std::to_string(channels.size()) + " != depth " +
                                    std::to_string(layout.depth));
    ModelSpec spec;
    spec.name = std::move(name);
    spec.stem.out_channels = layout.stem_channels;
    spec.stem.stride = layout.stem_stride;
    spec.stem.act = layout.stem_act;
    spec.penultimate_channels = layout.penultimate;
    spec.head.hidden = layout.head_hidden;
    spec.se_reduction = layout.se_reduction;
    for (int i = 0; i < layout.depth; ++i) {
        BlockSpec b;
        b.kind = layout.kind;
        b.out_channels = channels[static_cast<std::size_t>(i)];
        b.stride = layout.strides[static_cast<std::size_t>(i)];
        b.expansion = layout.expansions[static_cast<std::size_t>(i)];
        b.use_se = layout.use_se[static_cast<std::size_t>(i)];
        b.act_after_expand = layout.act_after_expand;
        b.act_after_dw = layout.act_after_dw;
        b.shortcut = b.stride == 2 ? ShortcutKind::None : layout.stride1_shortcut;
        spec.blocks.push_back(b);
    }
    return spec;
}

struct BuilderOptions {
    std::optional<Budget> calibration_budget;  // overrides the family default targets
    int se_reduction = 12;
    bool se_on_first_block = true;  // rexnet family only
    std::optional<int> penultimate_override;
};

// MobileNetV2 stage layout: repeats 1,2,3,4,3,3,1 with stride 2 opening
// stages 2, 3, 4 and 6; first block expansion 1, the rest 6.
inline FamilyLayout rexnet_layout(double width_multiplier, const BuilderOptions& opt = {}) {
    static constexpr int kRepeats[7] = {1, 2, 3, 4, 3, 3, 1};
    FamilyLayout layout;
    layout.family = "rexnet";
    layout.kind = BlockKind::InvertedBottleneck;
    for (int stage = 1; stage <= 7; ++stage) {
        const bool downsamples = stage == 2 || stage == 3 || stage == 4 || stage == 6;
        for (int r = 0; r < kRepeats[stage - 1]; ++r) {
            layout.strides.push_back(r == 0 && downsamples ? 2 : 1);
            layout.expansions.push_back(layout.strides.size() == 1 ? 1.0 : 6.0);
            layout.use_se.push_back(layout.strides.size() == 1 ? opt.se_on_first_block : true);
        }
    }
    layout.depth = static_cast<int>(layout.strides.size());
    layout.se_reduction = opt.se_reduction;
    layout.stem_channels = detail::round_channel(32.0 * width_multiplier);
    layout.stem_act = Nonlinearity{ActKind::ReLU6};
    layout.act_after_expand = Nonlinearity{ActKind::SiLU};
    layout.act_after_dw = Nonlinearity{ActKind::ReLU6};
    layout.penultimate =
        opt.penultimate_override.value_or(std::max(1280, detail::round_channel(1280.0 * width_multiplier)));
    layout.stride1_shortcut = ShortcutKind::ZeroPad;
    return layout;
}

// MobileNetV1 layout: 13 depthwise-separable blocks, no shortcuts, no SE.
inline FamilyLayout plain_layout(double width_multiplier, const BuilderOptions& opt = {}) {
    FamilyLayout layout;
    layout.family = "rexnet-plain";
    layout.kind = BlockKind::DepthwiseSeparable;
    layout.depth = 13;
    layout.strides = {1, 2, 1, 2, 1, 2, 1, 1, 1, 1, 1, 2, 1};
    layout.expansions.assign(13, 1.0);
    layout.use_se.assign(13, false);
    layout.stem_channels = detail::round_channel(32.0 * width_multiplier);
    layout.stem_act = Nonlinearity{ActKind::ReLU};
    layout.act_after_expand = Nonlinearity{ActKind::SiLU};  // after each 1x1 conv
    layout.act_after_dw = Nonlinearity{ActKind::ReLU};
    layout.penultimate =
        opt.penultimate_override.value_or(std::max(1280, detail::round_channel(1280.0 * width_multiplier)));
    layout.stride1_shortcut = ShortcutKind::None;
    return layout;
}

inline FamilyLayout lite_layout(double width_multiplier, const BuilderOptions& opt = {}) {
    FamilyLayout layout = rexnet_layout(width_multiplier, opt);
    layout.family = "rexnet-lite";
    layout.use_se.assign(layout.use_se.size(), false);
    layout.stem_act = Nonlinearity{ActKind::ReLU6};
    layout.act_after_expand = Nonlinearity{ActKind::ReLU6};
    layout.act_after_dw = Nonlinearity{ActKind::ReLU6};
    layout.head_hidden = 1280;
    return layout;
}

// ---------------------------------------------------------------------------
// Budget calibration of the linear parameterization
// ---------------------------------------------------------------------------

struct CalibrationResult {
    LinearParam param;
    long long params = 0;
    long long macs = 0;
};

namespace detail {

inline std::optional<std::vector<int>> try_channels(double a, double b, int depth) {
    if (a < 0.0) return std::nullopt;
    std::vector<int> channels(static_cast<std::size_t>(depth));
    int prev = 0;
    for (int i = 1; i <= depth; ++i) {
        const int c = round_channel(a * i + b);
        if (c < 8) return std::nullopt;
        channels[static_cast<std::size_t>(i - 1)] = std::max(c, prev);
        prev = channels[static_cast<std::size_t>(i - 1)];
    }
    return channels;
}

struct CalibrationEval {
    bool valid = false;
    long long params = 0;
    long long macs = 0;
    double ratio_params = 0.0;
    double ratio_macs = 0.0;
};

inline CalibrationEval evaluate_linear(const FamilyLayout& layout, double a, double b,
                                       int resolution, long long target_params,
                                       long long target_macs) {
    CalibrationEval eval;
    const auto channels = try_channels(a, b, layout.depth);
    if (!channels) return eval;
    const ModelSpec spec = assemble_model(layout, *channels, layout.family + "-cal");
    const CostReport report = model_cost(spec, resolution, 1000);
    eval.valid = true;
    eval.params = report.params;
    eval.macs = report.macs;
    eval.ratio_params = static_cast<double>(report.params) / static_cast<double>(target_params);
    eval.ratio_macs = static_cast<double>(report.macs) / static_cast<double>(target_macs);
    return eval;
}

}  // namespace detail

// Searches (slope, intercept) so the assembled family fills the budget as
// tightly as possible: maximize min(params/P, macs/F) subject to both costs
// staying within budget and neither falling below 90% of its target.
// Coarse grid, then three local refinements; fully deterministic. Ties
// prefer smaller slope, then smaller intercept.
inline CalibrationResult calibrate_linear(const FamilyLayout& layout, const Budget& budget,
                                          int resolution) {
    budget.validate();
    if (!budget.max_params || !budget.max_macs)
        throw std::invalid_argument("calibrate_linear: both budget bounds must be set");
    const long long target_params = *budget.max_params;
    const long long target_macs = *budget.max_macs;
    constexpr double kLow = 0.90, kHigh = 1.00;

    const auto fits = [&](double a, double b) {
        const auto eval =
            detail::evaluate_linear(layout, a, b, resolution, target_params, target_macs);
        return eval.valid && eval.ratio_params <= 1.0 && eval.ratio_macs <= 1.0;
    };

    // Infeasible outright if the minimal configuration already busts the budget.
    {
        const auto minimal =
            detail::evaluate_linear(layout, 0.0, 8.0, resolution, target_params, target_macs);
        if (minimal.valid && (minimal.ratio_params > 1.0 || minimal.ratio_macs > 1.0))
            throw InfeasibleError("calibrate_linear: budget below the minimal configuration",
                                  minimal.params, minimal.macs);
    }

    // Search extents from the largest feasible constant line and steepest
    // feasible slope at the minimum intercept.
    double b_hi = 8.0;
    {
        double lo = 8.0, hi = 8.0;
        while (hi < 65536.0 && fits(0.0, hi)) hi *= 2.0;
        for (int it = 0; it < 48; ++it) {
            const double mid = 0.5 * (lo + hi);
            (fits(0.0, mid) ? lo : hi) = mid;
        }
        b_hi = hi;
    }
    // Steepest slope along the line pinned at c_1 = 8 (minimal intercept).
    double a_hi = 0.0;
    {
        double lo = 0.0, hi = 1.0;
        while (hi < 65536.0 && fits(hi, 8.0 - hi)) hi *= 2.0;
        for (int it = 0; it < 48; ++it) {
            const double mid = 0.5 * (lo + hi);
            (fits(mid, 8.0 - mid) ? lo : hi) = mid;
        }
        a_hi = hi;
    }

    struct Best {
        bool found = false;
        double objective = -1.0;
        double a = 0.0, b = 0.0;
        long long params = 0, macs = 0;
    };
    Best best;
    Best nearest;  // closest to the budget box, for error reporting
    double nearest_distance = 1e300;

    const auto consider = [&](double a, double b) {
        const auto eval =
            detail::evaluate_linear(layout, a, b, resolution, target_params, target_macs);
        if (!eval.valid) return;
        const double distance = std::max(std::abs(eval.ratio_params - 1.0),
                                         std::abs(eval.ratio_macs - 1.0));
        if (distance < nearest_distance) {
            nearest_distance = distance;
            nearest = {true, 0.0, a, b, eval.params, eval.macs};
        }
        if (eval.ratio_params > kHigh || eval.ratio_macs > kHigh) return;
        if (eval.ratio_params < kLow || eval.ratio_macs < kLow) return;
        const double objective = std::min(eval.ratio_params, eval.ratio_macs);
        constexpr double kTieEps = 1e-12;
        if (!best.found || objective > best.objective + kTieEps ||
            (objective > best.objective - kTieEps &&
             (a < best.a - kTieEps || (a < best.a + kTieEps && b < best.b - kTieEps)))) {
            best = {true, objective, a, b, eval.params, eval.macs};
        }
    };

    const double b_lo = 8.0 - a_hi;  // below this even c_1 falls under the floor
    double a_min = 0.0, a_max = a_hi * 1.05;
    double b_min = b_lo, b_max = b_hi * 1.05;
    constexpr int kCoarse = 48;
    constexpr int kFine = 24;
    for (int round = 0; round < 4; ++round) {
        const int steps = round == 0 ? kCoarse : kFine;
        const double da = (a_max - a_min) / steps;
        const double db = (b_max - b_min) / steps;
        for (int ia = 0; ia <= steps; ++ia)
            for (int ib = 0; ib <= steps; ++ib) consider(a_min + da * ia, b_min + db * ib);
        const Best& center = best.found ? best : nearest;
        if (!center.found) break;
        const double span_a = std::max(2.0 * da, 1e-4);
        const double span_b = std::max(2.0 * db, 1e-4);
        a_min = std::max(0.0, center.a - span_a);
        a_max = center.a + span_a;
        b_min = center.b - span_b;
        b_max = center.b + span_b;
    }

    if (!best.found)
        throw InfeasibleError("calibrate_linear: no (slope, intercept) meets the budget window",
                              nearest.found ? nearest.params : 0,
                              nearest.found ? nearest.macs : 0);

    CalibrationResult result;
    result.param = LinearParam{best.a, best.b, layout.depth};
    result.params = best.params;
    result.macs = best.macs;
    return result;
}

// ---------------------------------------------------------------------------
// Family builders
// ---------------------------------------------------------------------------

namespace detail {

// Calibrations are deterministic and reused heavily; memoize them.
inline const CalibrationResult& cached_calibration(const FamilyLayout& layout,
                                                   const Budget& budget, int resolution) {
    static std::mutex mutex;
    static std::map<std::string, CalibrationResult> cache;
    std::string key = layout.family + "|" + std::to_string(layout.depth) + "|" +
                      std::to_string(layout.stem_channels) + "|" +
                      std::to_string(layout.penultimate) + "|" +
                      std::to_string(budget.max_params.value_or(-1)) + "|" +
                      std::to_string(budget.max_macs.value_or(-1)) + "|" +
                      std::to_string(resolution) + "|" +
                      std::to_string(layout.se_reduction) + "|" +
                      std::to_string(layout.use_se.empty() ? 0 : (layout.use_se.front() ? 1 : 0));
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, calibrate_linear(layout, budget, resolution)).first;
    return it->second;
}

inline void check_multiplier(double m) {
    if (!(m >= 0.5 && m <= 3.0))
        throw std::invalid_argument("width multiplier " + std::to_string(m) +
                                    " outside [0.5, 3.0]");
}

inline std::vector<int> scale_channels(const std::vector<int>& base, double multiplier) {
    std::vector<int> scaled(base.size());
    int prev = 0;
    for (std::size_t i = 0; i < base.size(); ++i) {
        int c = std::max(8, round_channel(multiplier * base[i]));
        c = std::max(c, prev);
        scaled[i] = c;
        prev = c;
    }
    return scaled;
}

inline std::string multiplier_suffix(double m) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.2f", m);
    return buf;
}

}  // namespace detail

// Reference cost targets the base (x1.0) parameterizations are calibrated
// against; width multipliers then scale the calibrated channels.
inline Budget default_rexnet_budget() { return Budget{4'800'000, 400'000'000}; }
inline Budget default_plain_budget() { return Budget{4'200'000, 560'000'000}; }
inline constexpr int kCalibrationResolution = 224;

inline ModelSpec build_rexnet(double width_multiplier, const BuilderOptions& opt = {}) {
    detail::check_multiplier(width_multiplier);
    const FamilyLayout base = rexnet_layout(1.0, opt);
    const Budget budget = opt.calibration_budget.value_or(default_rexnet_budget());
    const CalibrationResult cal =
        detail::cached_calibration(base, budget, kCalibrationResolution);
    FamilyLayout layout = rexnet_layout(width_multiplier, opt);
    const std::vector<int> channels =
        detail::scale_channels(channels_from_linear(cal.param), width_multiplier);
    return assemble_model(layout, channels,
                          "rexnet-x" + detail::multiplier_suffix(width_multiplier));
}

inline ModelSpec build_rexnet_plain(double width_multiplier, const BuilderOptions& opt = {}) {
    detail::check_multiplier(width_multiplier);
    const FamilyLayout base = plain_layout(1.0, opt);
    const Budget budget = opt.calibration_budget.value_or(default_plain_budget());
    const CalibrationResult cal =
        detail::cached_calibration(base, budget, kCalibrationResolution);
    FamilyLayout layout = plain_layout(width_multiplier, opt);
    const std::vector<int> channels =
        detail::scale_channels(channels_from_linear(cal.param), width_multiplier);
    return assemble_model(layout, channels,
                          "rexnet-plain-x" + detail::multiplier_suffix(width_multiplier));
}

// Same skeleton and channels as build_rexnet, with SE removed, every
// activation ReLU6, and a fully connected layer before the classifier.
inline ModelSpec build_rexnet_lite(double width_multiplier, const BuilderOptions& opt = {}) {
    detail::check_multiplier(width_multiplier);
    const FamilyLayout base = rexnet_layout(1.0, opt);
    const Budget budget = opt.calibration_budget.value_or(default_rexnet_budget());
    const CalibrationResult cal =
        detail::cached_calibration(base, budget, kCalibrationResolution);
    FamilyLayout layout = lite_layout(width_multiplier, opt);
    const std::vector<int> channels =
        detail::scale_channels(channels_from_linear(cal.param), width_multiplier);
    return assemble_model(layout, channels,
                          "rexnet-lite-x" + detail::multiplier_suffix(width_multiplier));
}

// ---------------------------------------------------------------------------
// JSON export / import (schema "rexrank-spec/1")
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::ordered_json act_to_json(const Nonlinearity& act) {
    if (act.kind == ActKind::LeakyReLU && act.slope != 0.01)
        return {{"kind", act_name(act.kind)}, {"slope", act.slope}};
    if (act.kind == ActKind::ELU && act.alpha != 1.0)
        return {{"kind", act_name(act.kind)}, {"alpha", act.alpha}};
    return act_name(act.kind);
}

inline Nonlinearity act_from_json(const nlohmann::json& j, const std::string& path) {
    Nonlinearity act;
    if (j.is_string()) {
        act.kind = act_from_name(j.get<std::string>());
        return act;
    }
    if (!j.is_object() || !j.contains("kind"))
        throw std::invalid_argument("model spec: field '" + path + "' must be a nonlinearity");
    act.kind = act_from_name(j.at("kind").get<std::string>());
    if (j.contains("slope")) act.slope = j.at("slope").get<double>();
    if (j.contains("alpha")) act.alpha = j.at("alpha").get<double>();
    return act;
}

inline const nlohmann::json& require_field(const nlohmann::json& j, const char* name,
                                           const std::string& path) {
    if (!j.is_object() || !j.contains(name))
        throw std::invalid_argument("model spec: missing field '" +
                                    (path.empty() ? std::string(name) : path + "." + name) + "'");
    return j.at(name);
}

}  // namespace detail

inline nlohmann::ordered_json model_spec_to_json(const ModelSpec& spec) {
    nlohmann::ordered_json j;
    j["schema"] = kModelSpecSchema;
    j["name"] = spec.name;
    j["stem"] = {{"out_channels", spec.stem.out_channels},
                 {"stride", spec.stem.stride},
                 {"act", detail::act_to_json(spec.stem.act)}};
    j["blocks"] = nlohmann::ordered_json::array();
    for (const BlockSpec& b : spec.blocks) {
        j["blocks"].push_back({{"kind", block_kind_name(b.kind)},
                               {"out_channels", b.out_channels},
                               {"stride", b.stride},
                               {"expansion", b.expansion},
                               {"use_se", b.use_se},
                               {"act_after_expand", detail::act_to_json(b.act_after_expand)},
                               {"act_after_dw", detail::act_to_json(b.act_after_dw)},
                               {"shortcut", shortcut_name(b.shortcut)}});
    }
    j["penultimate"] = {{"out_channels", spec.penultimate_channels}};
    if (spec.head.hidden)
        j["head"] = {{"hidden", *spec.head.hidden}, {"classes", spec.head.classes}};
    else
        j["head"] = {{"hidden", nullptr}, {"classes", spec.head.classes}};
    j["se_reduction"] = spec.se_reduction;
    return j;
}

inline ModelSpec model_spec_from_json(const nlohmann::json& j) {
    using detail::require_field;
    if (!j.is_object()) throw std::invalid_argument("model spec: top level must be an object");
    const std::string schema = require_field(j, "schema", "").get<std::string>();
    if (schema != kModelSpecSchema)
        throw std::invalid_argument("model spec: unsupported schema '" + schema + "'");

    ModelSpec spec;
    spec.name = require_field(j, "name", "").get<std::string>();
    const auto& stem = require_field(j, "stem", "");
    spec.stem.out_channels = require_field(stem, "out_channels", "stem").get<int>();
    spec.stem.stride = require_field(stem, "stride", "stem").get<int>();
    spec.stem.act = detail::act_from_json(require_field(stem, "act", "stem"), "stem.act");

    const auto& blocks = require_field(j, "blocks", "");
    if (!blocks.is_array()) throw std::invalid_argument("model spec: field 'blocks' must be an array");
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const std::string path = "blocks[" + std::to_string(i) + "]";
        const auto& bj = blocks.at(i);
        BlockSpec b;
        b.kind = block_kind_from_name(require_field(bj, "kind", path).get<std::string>());
        b.out_channels = require_field(bj, "out_channels", path).get<int>();
        b.stride = require_field(bj, "stride", path).get<int>();
        b.expansion = require_field(bj, "expansion", path).get<double>();
        b.use_se = require_field(bj, "use_se", path).get<bool>();
        b.act_after_expand = detail::act_from_json(require_field(bj, "act_after_expand", path),
                                                   path + ".act_after_expand");
        b.act_after_dw =
            detail::act_from_json(require_field(bj, "act_after_dw", path), path + ".act_after_dw");
        b.shortcut = shortcut_from_name(require_field(bj, "shortcut", path).get<std::string>());
        spec.blocks.push_back(b);
    }

    spec.penultimate_channels =
        require_field(require_field(j, "penultimate", ""), "out_channels", "penultimate").get<int>();
    const auto& head = require_field(j, "head", "");
    const auto& hidden = require_field(head, "hidden", "head");
    if (!hidden.is_null()) spec.head.hidden = hidden.get<int>();
    spec.head.classes = require_field(head, "classes", "head").get<int>();
    if (j.contains("se_reduction")) spec.se_reduction = j.at("se_reduction").get<int>();
    spec.validate();
    return spec;
}

inline void export_spec(const ModelSpec& spec, const std::filesystem::path& path) {
    write_file_atomic(path, model_spec_to_json(spec).dump(2) + "\n");
}

inline ModelSpec import_spec(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument("model spec: invalid JSON in " + path.string() + ": " +
                                    e.what());
    }
    return model_spec_from_json(j);
}

}  // namespace rexrank
