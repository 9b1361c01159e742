#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rexrank/nonlinearity.hpp"

namespace rexrank {

enum class BlockKind {
    InvertedBottleneck,   // 1x1 expand -> 3x3 depthwise -> 1x1 project
    DepthwiseSeparable,   // 3x3 depthwise -> 1x1 pointwise
};

enum class ShortcutKind { None, Identity, ZeroPad };

inline const char* block_kind_name(BlockKind k) {
    return k == BlockKind::InvertedBottleneck ? "inverted_bottleneck" : "depthwise_separable";
}

inline BlockKind block_kind_from_name(const std::string& name) {
    if (name == "inverted_bottleneck") return BlockKind::InvertedBottleneck;
    if (name == "depthwise_separable") return BlockKind::DepthwiseSeparable;
    throw std::invalid_argument("unknown block kind: " + name);
}

inline const char* shortcut_name(ShortcutKind k) {
    switch (k) {
        case ShortcutKind::None: return "none";
        case ShortcutKind::Identity: return "identity";
        case ShortcutKind::ZeroPad: return "zero_pad";
    }
    return "none";
}

inline ShortcutKind shortcut_from_name(const std::string& name) {
    if (name == "none") return ShortcutKind::None;
    if (name == "identity") return ShortcutKind::Identity;
    if (name == "zero_pad") return ShortcutKind::ZeroPad;
    throw std::invalid_argument("unknown shortcut kind: " + name);
}

struct BlockSpec {
    BlockKind kind = BlockKind::InvertedBottleneck;
    int out_channels = 0;
    int stride = 1;
    double expansion = 6.0;
    bool use_se = false;
    Nonlinearity act_after_expand{ActKind::ReLU6};
    Nonlinearity act_after_dw{ActKind::ReLU6};
    ShortcutKind shortcut = ShortcutKind::None;

    friend bool operator==(const BlockSpec&, const BlockSpec&) = default;
};

struct StemSpec {
    int out_channels = 32;
    int stride = 2;
    Nonlinearity act{ActKind::ReLU6};

    friend bool operator==(const StemSpec&, const StemSpec&) = default;
};

struct HeadSpec {
    std::optional<int> hidden;  // extra fully connected layer before the classifier
    int classes = 1000;

    friend bool operator==(const HeadSpec&, const HeadSpec&) = default;
};

// Full layer-by-layer architecture description. Block output channels must
// be non-decreasing over the block index, and stride-2 blocks carry no
// shortcut (the spatial sizes would not match).
struct ModelSpec {
    std::string name;
    StemSpec stem;
    std::vector<BlockSpec> blocks;
    int penultimate_channels = 1280;
    HeadSpec head;
    int se_reduction = 12;  // SE bottleneck divisor, relative to the expanded width

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;

    void validate() const {
        if (name.empty()) throw std::invalid_argument("ModelSpec: name must not be empty");
        if (stem.out_channels < 1) throw std::invalid_argument("ModelSpec: stem.out_channels");
        if (stem.stride != 1 && stem.stride != 2)
            throw std::invalid_argument("ModelSpec: stem.stride must be 1 or 2");
        if (penultimate_channels < 1)
            throw std::invalid_argument("ModelSpec: penultimate.out_channels");
        if (head.classes < 1) throw std::invalid_argument("ModelSpec: head.classes");
        if (head.hidden && *head.hidden < 1) throw std::invalid_argument("ModelSpec: head.hidden");
        if (se_reduction < 1) throw std::invalid_argument("ModelSpec: se_reduction");
        int prev = 0;
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            const BlockSpec& b = blocks[i];
            const std::string where = "blocks[" + std::to_string(i) + "]";
            if (b.out_channels < 1) throw std::invalid_argument("ModelSpec: " + where + ".out_channels");
            if (b.out_channels < prev)
                throw std::invalid_argument("ModelSpec: " + where +
                                            ".out_channels decreases over block index");
            if (b.stride != 1 && b.stride != 2)
                throw std::invalid_argument("ModelSpec: " + where + ".stride must be 1 or 2");
            if (b.expansion < 1.0)
                throw std::invalid_argument("ModelSpec: " + where + ".expansion must be >= 1");
            if (b.stride == 2 && b.shortcut != ShortcutKind::None)
                throw std::invalid_argument("ModelSpec: " + where +
                                            " stride-2 block must have shortcut none");
            prev = b.out_channels;
        }
    }

    int total_stride() const {
        int s = stem.stride;
        for (const BlockSpec& b : blocks) s *= b.stride;
        return s;
    }
};

}  // namespace rexrank
