#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rexrank/model_spec.hpp"

namespace rexrank {

// Cost conventions, stated once:
//  - "FLOPs" are multiply-accumulates (MACs), the lightweight-model
//    convention under which MobileNetV2 at 224x224 costs 0.30B.
//  - Convolutions carry no bias (batch norm absorbs it). Batch-norm affine
//    pairs and activations contribute neither parameters nor MACs; parameter
//    totals cover conv / fully-connected weights plus fc biases, which is
//    the counting that reproduces the published 3.4M for MobileNetV2.
//  - The SE unit counts its two projections (with biases) as params, the
//    same amount as MACs, plus the global-pool adds.

struct LayerCost {
    std::string name;
    long long params = 0;
    long long macs = 0;
};

struct CostReport {
    long long params = 0;
    long long macs = 0;
    std::vector<LayerCost> per_layer;

    void add(std::string name, long long p, long long m) {
        params += p;
        macs += m;
        per_layer.push_back({std::move(name), p, m});
    }
};

inline nlohmann::ordered_json cost_report_to_json(const CostReport& report) {
    nlohmann::ordered_json j;
    j["params"] = report.params;
    j["macs"] = report.macs;
    j["per_layer"] = nlohmann::ordered_json::array();
    for (const LayerCost& layer : report.per_layer)
        j["per_layer"].push_back(
            {{"name", layer.name}, {"params", layer.params}, {"macs", layer.macs}});
    return j;
}

struct Budget {
    std::optional<long long> max_params;  // empty = unbounded
    std::optional<long long> max_macs;

    void validate() const {
        if (max_params && *max_params <= 0)
            throw std::invalid_argument("Budget: max_params must be positive when bounded");
        if (max_macs && *max_macs <= 0)
            throw std::invalid_argument("Budget: max_macs must be positive when bounded");
    }
};

inline bool check_budget(const CostReport& report, const Budget& b) {
    if (b.max_params && report.params > *b.max_params) return false;
    if (b.max_macs && report.macs > *b.max_macs) return false;
    return true;
}

// Raised when no configuration can satisfy a budget; carries the closest
// costs that were achievable.
class InfeasibleError : public std::runtime_error {
public:
    InfeasibleError(const std::string& what, long long nearest_params, long long nearest_macs)
        : std::runtime_error(what + " (nearest achievable: params=" +
                             std::to_string(nearest_params) +
                             ", macs=" + std::to_string(nearest_macs) + ")"),
          nearest_params_(nearest_params),
          nearest_macs_(nearest_macs) {}

    long long nearest_params() const { return nearest_params_; }
    long long nearest_macs() const { return nearest_macs_; }

private:
    long long nearest_params_;
    long long nearest_macs_;
};

struct ConvCost {
    long long params = 0;
    long long macs = 0;
};

// k x k convolution, c_in -> c_out, evaluated on an h x w output grid.
inline ConvCost conv_cost(int k, int c_in, int c_out, int h, int w, int groups = 1) {
    if (groups < 1) throw std::invalid_argument("conv_cost: groups must be >= 1");
    if (c_in % groups != 0 || c_out % groups != 0)
        throw std::invalid_argument("conv_cost: channels (" + std::to_string(c_in) + "->" +
                                    std::to_string(c_out) + ") not divisible by groups=" +
                                    std::to_string(groups));
    if (h < 1 || w < 1) throw std::invalid_argument("conv_cost: output extent must be >= 1");
    ConvCost cost;
    cost.params = static_cast<long long>(k) * k * c_in * c_out / groups;
    cost.macs = cost.params * h * w;
    return cost;
}

struct BlockCost {
    long long params = 0;
    long long macs = 0;
    int out_resolution = 0;
};

namespace detail {
inline long long ceil_div(long long a, long long b) { return (a + b - 1) / b; }
}  // namespace detail

// Cost of one building block: optional 1x1 expansion at the input
// resolution, 3x3 depthwise carrying the stride, optional SE on the
// expanded width, and the 1x1 projection at the output resolution.
// Blocks with expansion 1 omit the expansion conv, which also covers the
// depthwise-separable (dw + pointwise) block.
inline BlockCost block_cost(const BlockSpec& block, int in_channels, int in_resolution,
                            int se_reduction = 12) {
    if (in_resolution % block.stride != 0)
        throw std::invalid_argument("block_cost: resolution " + std::to_string(in_resolution) +
                                    " not divisible by stride " + std::to_string(block.stride));
    const int out_res = in_resolution / block.stride;
    const bool has_expand = block.expansion != 1.0;
    const int expanded =
        has_expand ? static_cast<int>(std::llround(block.expansion * in_channels)) : in_channels;

    BlockCost cost;
    cost.out_resolution = out_res;
    if (has_expand) {
        const ConvCost e = conv_cost(1, in_channels, expanded, in_resolution, in_resolution);
        cost.params += e.params;
        cost.macs += e.macs;
    }
    const ConvCost dw = conv_cost(3, expanded, expanded, out_res, out_res, expanded);
    cost.params += dw.params;
    cost.macs += dw.macs;
    if (block.use_se) {
        const long long squeezed = detail::ceil_div(expanded, se_reduction);
        const long long se_params = 2LL * expanded * squeezed + expanded + squeezed;
        cost.params += se_params;
        cost.macs += se_params + static_cast<long long>(expanded) * out_res * out_res;
    }
    const ConvCost proj = conv_cost(1, expanded, block.out_channels, out_res, out_res);
    cost.params += proj.params;
    cost.macs += proj.macs;
    return cost;
}

// Whole-model accounting: stem (3x3, from RGB) + blocks + penultimate 1x1
// expansion + global average pool (free) + optional hidden fc + classifier.
inline CostReport model_cost(const ModelSpec& spec, int input_resolution, int num_classes) {
    spec.validate();
    if (num_classes < 1) throw std::invalid_argument("model_cost: num_classes must be >= 1");
    const int stride = spec.total_stride();
    if (input_resolution % stride != 0)
        throw std::invalid_argument("model_cost: resolution " + std::to_string(input_resolution) +
                                    " not divisible by total stride " + std::to_string(stride));

    CostReport report;
    int res = input_resolution / spec.stem.stride;
    const ConvCost stem = conv_cost(3, 3, spec.stem.out_channels, res, res);
    report.add("stem", stem.params, stem.macs);

    int channels = spec.stem.out_channels;
    for (std::size_t i = 0; i < spec.blocks.size(); ++i) {
        const BlockCost bc = block_cost(spec.blocks[i], channels, res, spec.se_reduction);
        char name[16];
        std::snprintf(name, sizeof(name), "block%02zu", i + 1);
        report.add(name, bc.params, bc.macs);
        channels = spec.blocks[i].out_channels;
        res = bc.out_resolution;
    }

    const ConvCost pen = conv_cost(1, channels, spec.penultimate_channels, res, res);
    report.add("penultimate", pen.params, pen.macs);
    report.add("global_pool", 0, 0);

    int head_in = spec.penultimate_channels;
    if (spec.head.hidden) {
        const long long p = static_cast<long long>(head_in) * *spec.head.hidden + *spec.head.hidden;
        report.add("hidden_fc", p, static_cast<long long>(head_in) * *spec.head.hidden);
        head_in = *spec.head.hidden;
    }
    const long long cls_params = static_cast<long long>(head_in) * num_classes + num_classes;
    report.add("classifier", cls_params, static_cast<long long>(head_in) * num_classes);
    return report;
}

// ---------------------------------------------------------------------------
// Channel-configuration strings: "<stem> / <c>(x<n>)-<c>(x<n>)-..."
// ---------------------------------------------------------------------------

// Stem width plus the ordered per-block output channels of a network.
struct ChannelConfig {
    struct Block {
        int out_channels = 0;
        int stride = 1;
        double expansion = 6.0;
        bool use_se = false;

        friend bool operator==(const Block&, const Block&) = default;
    };
    int stem = 32;
    std::vector<Block> blocks;

    friend bool operator==(const ChannelConfig&, const ChannelConfig&) = default;
};

class ConfigParseError : public std::runtime_error {
public:
    ConfigParseError(const std::string& what, std::size_t offset)
        : std::runtime_error("config parse error at byte " + std::to_string(offset) + ": " + what),
          offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

namespace detail {

struct ConfigCursor {
    const std::string& text;
    std::size_t pos = 0;

    void skip_spaces() {
        while (pos < text.size() && text[pos] == ' ') ++pos;
    }
    bool at_end() const { return pos >= text.size(); }
    char peek() const { return pos < text.size() ? text[pos] : '\0'; }

    int parse_int(const char* what) {
        skip_spaces();
        const std::size_t start = pos;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
        if (pos == start) throw ConfigParseError(std::string("expected ") + what, start);
        long long value = 0;
        for (std::size_t i = start; i < pos; ++i) {
            value = value * 10 + (text[i] - '0');
            if (value > 1'000'000) throw ConfigParseError(std::string(what) + " out of range", start);
        }
        return static_cast<int>(value);
    }

    void expect(char c) {
        if (at_end() || text[pos] != c)
            throw ConfigParseError(std::string("expected '") + c + "'", pos);
        ++pos;
    }

    // Accepts ASCII 'x'/'X' or the UTF-8 multiplication sign.
    void expect_times() {
        if (!at_end() && (text[pos] == 'x' || text[pos] == 'X')) {
            ++pos;
            return;
        }
        if (pos + 1 < text.size() && static_cast<unsigned char>(text[pos]) == 0xC3 &&
            static_cast<unsigned char>(text[pos + 1]) == 0x97) {
            pos += 2;
            return;
        }
        throw ConfigParseError("expected repeat marker 'x'", pos);
    }
};

}  // namespace detail

// Parses a stage-wise channel-configuration string. Default strides follow
// the MobileNetV2 stage pattern (the first block of stages 2, 3, 4 and 6 is
// stride 2); expansion defaults to 6 except for a leading expansion-1 block
// when the first stage width does not exceed the stem width.
inline ChannelConfig parse_config_string(const std::string& text) {
    detail::ConfigCursor cur{text};
    ChannelConfig config;
    config.stem = cur.parse_int("stem width");
    cur.skip_spaces();
    cur.expect('/');

    struct Stage {
        int width;
        int repeat;
    };
    std::vector<Stage> stages;
    for (;;) {
        cur.skip_spaces();
        const std::size_t width_offset = cur.pos;
        const int width = cur.parse_int("stage width");
        if (width < 8) throw ConfigParseError("block width must be >= 8", width_offset);
        cur.skip_spaces();
        cur.expect('(');
        cur.expect_times();
        const int repeat = cur.parse_int("repeat count");
        if (repeat < 1) throw ConfigParseError("repeat count must be >= 1", cur.pos);
        cur.expect(')');
        stages.push_back({width, repeat});
        cur.skip_spaces();
        if (cur.at_end()) break;
        cur.expect('-');
    }

    const bool leading_expansion1 = !stages.empty() && stages.front().width <= config.stem;
    for (std::size_t s = 0; s < stages.size(); ++s) {
        const int stage_index = static_cast<int>(s) + 1;
        const bool downsamples =
            stage_index == 2 || stage_index == 3 || stage_index == 4 || stage_index == 6;
        for (int r = 0; r < stages[s].repeat; ++r) {
            ChannelConfig::Block block;
            block.out_channels = stages[s].width;
            block.stride = (r == 0 && downsamples) ? 2 : 1;
            block.expansion = (s == 0 && r == 0 && leading_expansion1) ? 1.0 : 6.0;
            config.blocks.push_back(block);
        }
    }
    return config;
}

inline std::string format_config_string(const ChannelConfig& config) {
    std::string out = std::to_string(config.stem) + " / ";
    std::size_t i = 0;
    bool first = true;
    while (i < config.blocks.size()) {
        std::size_t j = i;
        while (j < config.blocks.size() &&
               config.blocks[j].out_channels == config.blocks[i].out_channels)
            ++j;
        if (!first) out += '-';
        out += std::to_string(config.blocks[i].out_channels) + "(\xC3\x97" +
               std::to_string(j - i) + ")";
        first = false;
        i = j;
    }
    return out;
}

// Builds the inverted-bottleneck model a configuration string describes.
inline ModelSpec model_spec_from_config(const ChannelConfig& config, std::string name,
                                        int penultimate = 1280) {
    ModelSpec spec;
    spec.name = std::move(name);
    spec.stem.out_channels = config.stem;
    spec.stem.stride = 2;
    spec.stem.act = Nonlinearity{ActKind::ReLU6};
    spec.penultimate_channels = penultimate;
    int prev = config.stem;
    for (const ChannelConfig::Block& b : config.blocks) {
        BlockSpec block;
        block.kind = BlockKind::InvertedBottleneck;
        block.out_channels = b.out_channels;
        block.stride = b.stride;
        block.expansion = b.expansion;
        block.use_se = b.use_se;
        block.act_after_expand = Nonlinearity{ActKind::ReLU6};
        block.act_after_dw = Nonlinearity{ActKind::ReLU6};
        block.shortcut = (b.stride == 1 && prev == b.out_channels) ? ShortcutKind::Identity
                                                                   : ShortcutKind::None;
        spec.blocks.push_back(block);
        prev = b.out_channels;
    }
    return spec;
}

}  // namespace rexrank
