#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "rexrank/io_util.hpp"
#include "rexrank/matrix.hpp"
#include "rexrank/nonlinearity.hpp"
#include "rexrank/parallel.hpp"
#include "rexrank/rng.hpp"
#include "rexrank/standardize.hpp"
#include "rexrank/svd.hpp"

namespace rexrank {

enum class LayerArchKind {
    Conv1x1,
    Conv3x3,
    InvertedBottleneckConv,    // 1x1 expand -> 3x3 conv -> 1x1 project
    InvertedBottleneckDwConv,  // 1x1 expand -> 3x3 depthwise -> 1x1 project
};

struct LayerArch {
    LayerArchKind kind = LayerArchKind::Conv1x1;
    double expansion = 6.0;  // bottleneck kinds only

    bool is_bottleneck() const {
        return kind == LayerArchKind::InvertedBottleneckConv ||
               kind == LayerArchKind::InvertedBottleneckDwConv;
    }
    bool is_spatial() const { return kind != LayerArchKind::Conv1x1; }

    void validate() const {
        if (is_bottleneck() && expansion < 1.0)
            throw std::invalid_argument("LayerArch: bottleneck expansion must be >= 1");
    }
};

inline const char* arch_name(LayerArchKind kind) {
    switch (kind) {
        case LayerArchKind::Conv1x1: return "conv1x1";
        case LayerArchKind::Conv3x3: return "conv3x3";
        case LayerArchKind::InvertedBottleneckConv: return "ib-conv";
        case LayerArchKind::InvertedBottleneckDwConv: return "ib-dw";
    }
    return "conv1x1";
}

inline LayerArchKind arch_from_name(const std::string& name) {
    if (name == "conv1x1") return LayerArchKind::Conv1x1;
    if (name == "conv3x3") return LayerArchKind::Conv3x3;
    if (name == "ib-conv") return LayerArchKind::InvertedBottleneckConv;
    if (name == "ib-dw") return LayerArchKind::InvertedBottleneckDwConv;
    throw std::invalid_argument("unknown architecture: " + name);
}

inline std::vector<double> default_ratio_grid() {
    std::vector<double> grid(10);
    for (int i = 0; i < 10; ++i) grid[i] = 0.1 * (i + 1);
    return grid;
}

// One dimension-ratio sweep: a (architecture, nonlinearity) pair evaluated
// over the ratio grid, `trials` random-sized networks per grid point.
struct SweepSpec {
    LayerArch arch;
    Nonlinearity nonlinearity;
    std::vector<double> ratio_grid = default_ratio_grid();
    int trials = 200;
    int d_out_min = 32;
    int d_out_max = 128;
    int spatial = 7;  // H = W, spatial kinds only
    std::uint64_t master_seed = 42;

    void validate() const {
        arch.validate();
        if (trials < 1) throw std::invalid_argument("SweepSpec: trials must be >= 1");
        if (d_out_min < 8) throw std::invalid_argument("SweepSpec: d_out_range min must be >= 8");
        if (d_out_max < d_out_min) throw std::invalid_argument("SweepSpec: empty d_out_range");
        if (spatial < 1) throw std::invalid_argument("SweepSpec: spatial must be >= 1");
        if (ratio_grid.empty()) throw std::invalid_argument("SweepSpec: empty ratio grid");
        double prev = 0.0;
        for (double r : ratio_grid) {
            if (r < 0.1 - 1e-12 || r > 1.0 + 1e-12)
                throw std::invalid_argument("SweepSpec: ratios must lie in [0.1, 1.0]");
            if (r <= prev) throw std::invalid_argument("SweepSpec: ratios must strictly increase");
            prev = r;
        }
    }
};

struct RankCurvePoint {
    double ratio = 0.0;
    double mean_rank_ratio = 0.0;
    double std_rank_ratio = 0.0;
    double mean_nuclear_norm = 0.0;
};

struct RankCurve {
    SweepSpec spec;
    std::vector<RankCurvePoint> points;
};

// ---------------------------------------------------------------------------
// Spatial primitives (channels x (N*H*W) layout, column = (n*H + y)*W + x).
// ---------------------------------------------------------------------------

// Unfolds 3x3 neighborhoods (pad 1, stride 1) so the convolution becomes a
// plain matrix product against a (c_out x 9*channels) kernel matrix.
inline Matrix im2col_3x3(const Matrix& in, int channels, int n_images, int h, int w) {
    Matrix out(channels * 9, n_images * h * w);
    for (int c = 0; c < channels; ++c) {
        const double* src = in.row_ptr(c);
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                double* dst = out.row_ptr(c * 9 + ky * 3 + kx);
                for (int n = 0; n < n_images; ++n) {
                    for (int y = 0; y < h; ++y) {
                        const int sy = y + ky - 1;
                        double* drow = dst + (static_cast<std::size_t>(n) * h + y) * w;
                        if (sy < 0 || sy >= h) continue;  // zero padding row
                        const double* srow = src + (static_cast<std::size_t>(n) * h + sy) * w;
                        const int x_lo = std::max(0, 1 - kx);
                        const int x_hi = std::min(w, w + 1 - kx);
                        for (int x = x_lo; x < x_hi; ++x) drow[x] = srow[x + kx - 1];
                    }
                }
            }
        }
    }
    return out;
}

// Depthwise 3x3 convolution, pad 1, stride 1. kernels is channels x 9.
inline Matrix depthwise_conv3x3(const Matrix& in, const Matrix& kernels, int n_images, int h,
                                int w) {
    const int channels = in.rows;
    Matrix out(channels, in.cols);
    for (int c = 0; c < channels; ++c) {
        const double* src = in.row_ptr(c);
        const double* k = kernels.row_ptr(c);
        double* dst = out.row_ptr(c);
        for (int n = 0; n < n_images; ++n) {
            const double* img = src + static_cast<std::size_t>(n) * h * w;
            double* res = dst + static_cast<std::size_t>(n) * h * w;
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    double acc = 0.0;
                    for (int ky = 0; ky < 3; ++ky) {
                        const int sy = y + ky - 1;
                        if (sy < 0 || sy >= h) continue;
                        const double* srow = img + static_cast<std::size_t>(sy) * w;
                        for (int kx = 0; kx < 3; ++kx) {
                            const int sx = x + kx - 1;
                            if (sx < 0 || sx >= w) continue;
                            acc += k[ky * 3 + kx] * srow[sx];
                        }
                    }
                    res[y * w + x] = acc;
                }
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Random network instances
// ---------------------------------------------------------------------------

// A single randomly initialized building block. Weights are i.i.d. Gaussian
// with variance 2/fan_in, which keeps activation scale stable across the
// expansion so rank thresholds stay comparable across dimension ratios.
struct RandomNet {
    LayerArch arch;
    int d_in = 0;
    int d_out = 0;
    int expanded = 0;   // bottleneck kinds only
    Matrix w;           // single-conv kinds
    Matrix w_expand;    // e x d_in
    Matrix w_mid;       // e x 9e (full conv) or e x 9 (depthwise)
    Matrix w_project;   // d_out x e
};

inline RandomNet sample_network(LayerArch arch, int d_in, int d_out, std::uint64_t seed) {
    arch.validate();
    if (d_in < 1) throw std::invalid_argument("sample_network: d_in must be >= 1");
    if (d_in > d_out)
        throw std::invalid_argument("sample_network: d_in (" + std::to_string(d_in) +
                                    ") must not exceed d_out (" + std::to_string(d_out) + ")");
    Rng rng(seed);
    const auto he = [](int fan_in) { return std::sqrt(2.0 / fan_in); };

    RandomNet net;
    net.arch = arch;
    net.d_in = d_in;
    net.d_out = d_out;
    switch (arch.kind) {
        case LayerArchKind::Conv1x1:
            net.w = Matrix::gaussian(d_out, d_in, rng, he(d_in));
            break;
        case LayerArchKind::Conv3x3:
            net.w = Matrix::gaussian(d_out, 9 * d_in, rng, he(9 * d_in));
            break;
        case LayerArchKind::InvertedBottleneckConv: {
            const int e = static_cast<int>(std::llround(arch.expansion * d_in));
            net.expanded = e;
            net.w_expand = Matrix::gaussian(e, d_in, rng, he(d_in));
            net.w_mid = Matrix::gaussian(e, 9 * e, rng, he(9 * e));
            net.w_project = Matrix::gaussian(d_out, e, rng, he(e));
            break;
        }
        case LayerArchKind::InvertedBottleneckDwConv: {
            const int e = static_cast<int>(std::llround(arch.expansion * d_in));
            net.expanded = e;
            net.w_expand = Matrix::gaussian(e, d_in, rng, he(d_in));
            net.w_mid = Matrix::gaussian(e, 9, rng, he(9));
            net.w_project = Matrix::gaussian(d_out, e, rng, he(e));
            break;
        }
    }
    return net;
}

// Smallest multiple of 32 images such that the flattened sample dimension
// (N, or N*H*W for spatial kinds) is at least 4*d_out.
inline int default_batch(const LayerArch& arch, int d_out, int spatial) {
    const long long per_image = arch.is_spatial() ? static_cast<long long>(spatial) * spatial : 1;
    const long long needed = 4LL * d_out;
    const long long groups = (needed + 32 * per_image - 1) / (32 * per_image);
    return static_cast<int>(std::max(1LL, groups) * 32);
}

struct RankSample {
    double rank_ratio = 0.0;
    double nuclear_norm = 0.0;
};

// Feeds an i.i.d. standard-normal batch through the block and returns the
// d_out x samples feature. For bottlenecks the feature is the value after
// the shortcut addition (input zero-padded from d_in to d_out channels);
// no activation follows the projection.
inline Matrix forward_feature(const RandomNet& net, const Nonlinearity& f, int batch, int spatial,
                              std::uint64_t input_seed) {
    const int spp = net.arch.is_spatial() ? spatial * spatial : 1;
    const long long samples = static_cast<long long>(batch) * spp;
    if (samples <= net.d_out)
        throw std::invalid_argument("forward_feature: sample dimension " +
                                    std::to_string(samples) + " must exceed d_out " +
                                    std::to_string(net.d_out));
    Rng rng(input_seed);
    Matrix x = Matrix::gaussian(net.d_in, static_cast<int>(samples), rng);

    switch (net.arch.kind) {
        case LayerArchKind::Conv1x1:
            return apply_nonlinearity(f, batch_standardize(matmul(net.w, x)));
        case LayerArchKind::Conv3x3: {
            Matrix cols = im2col_3x3(x, net.d_in, batch, spatial, spatial);
            return apply_nonlinearity(f, batch_standardize(matmul(net.w, cols)));
        }
        case LayerArchKind::InvertedBottleneckConv:
        case LayerArchKind::InvertedBottleneckDwConv: {
            Matrix h = apply_nonlinearity(f, batch_standardize(matmul(net.w_expand, x)));
            if (net.arch.kind == LayerArchKind::InvertedBottleneckConv) {
                Matrix cols = im2col_3x3(h, net.expanded, batch, spatial, spatial);
                h = matmul(net.w_mid, cols);
            } else {
                h = depthwise_conv3x3(h, net.w_mid, batch, spatial, spatial);
            }
            h = apply_nonlinearity(f, batch_standardize(h));
            Matrix out = batch_standardize(matmul(net.w_project, h));
            // Shortcut: input channels zero-padded up to d_out.
            for (int c = 0; c < net.d_in; ++c) {
                double* dst = out.row_ptr(c);
                const double* src = x.row_ptr(c);
                for (int j = 0; j < out.cols; ++j) dst[j] += src[j];
            }
            return out;
        }
    }
    throw std::logic_error("forward_feature: unreachable");
}

inline RankSample forward_and_rank(const RandomNet& net, const Nonlinearity& f, int batch,
                                   const RankSettings& settings, std::uint64_t input_seed,
                                   int spatial = 7) {
    settings.validate();
    const Matrix feature = forward_feature(net, f, batch, spatial, input_seed);
    const std::vector<double> sigma = singular_values(feature);
    RankSample sample;
    sample.rank_ratio =
        static_cast<double>(rank_from_singular_values(sigma, settings)) / net.d_out;
    for (double s : sigma) sample.nuclear_norm += s;
    return sample;
}

// Full dimension-ratio sweep. Per-trial seeds are derived from
// (master_seed, ratio index, trial index) with a splittable hash, so trials
// can run concurrently with results keyed by index; aggregation always sums
// in trial-index order for bit-reproducibility.
inline RankCurve run_sweep(const SweepSpec& spec, const RankSettings& settings = {}) {
    spec.validate();
    settings.validate();

    RankCurve curve;
    curve.spec = spec;
    curve.points.resize(spec.ratio_grid.size());

    const std::size_t per_ratio = static_cast<std::size_t>(spec.trials);
    const std::size_t total = per_ratio * spec.ratio_grid.size();
    std::vector<RankSample> samples(total);

    parallel_for(total, [&](std::size_t idx) {
        const std::size_t ri = idx / per_ratio;
        const std::size_t trial = idx % per_ratio;
        const double ratio = spec.ratio_grid[ri];
        const std::uint64_t trial_seed = derive_seed(spec.master_seed, ri, trial);
        Rng rng(trial_seed);
        const int d_out = static_cast<int>(rng.uniform_int(spec.d_out_min, spec.d_out_max));
        const int d_in = std::max(1, static_cast<int>(std::llround(ratio * d_out)));
        const RandomNet net =
            sample_network(spec.arch, d_in, d_out, derive_seed(trial_seed, 1));
        const int batch = default_batch(spec.arch, d_out, spec.spatial);
        samples[idx] = forward_and_rank(net, spec.nonlinearity, batch, settings,
                                        derive_seed(trial_seed, 2), spec.spatial);
    });

    for (std::size_t ri = 0; ri < spec.ratio_grid.size(); ++ri) {
        double sum = 0.0, sum_nuc = 0.0;
        for (std::size_t t = 0; t < per_ratio; ++t) {
            sum += samples[ri * per_ratio + t].rank_ratio;
            sum_nuc += samples[ri * per_ratio + t].nuclear_norm;
        }
        const double mean = sum / spec.trials;
        double sq = 0.0;
        for (std::size_t t = 0; t < per_ratio; ++t) {
            const double d = samples[ri * per_ratio + t].rank_ratio - mean;
            sq += d * d;
        }
        RankCurvePoint& p = curve.points[ri];
        p.ratio = spec.ratio_grid[ri];
        p.mean_rank_ratio = mean;
        p.std_rank_ratio = std::sqrt(sq / spec.trials);
        p.mean_nuclear_norm = sum_nuc / spec.trials;
    }
    return curve;
}

inline void emit_curve_csv(const RankCurve& curve, const std::filesystem::path& path) {
    std::string out = "ratio,mean_rank_ratio,std_rank_ratio,mean_nuclear_norm\n";
    for (const RankCurvePoint& p : curve.points) {
        out += format_real(p.ratio);
        out += ',';
        out += format_real(p.mean_rank_ratio);
        out += ',';
        out += format_real(p.std_rank_ratio);
        out += ',';
        out += format_real(p.mean_nuclear_norm);
        out += '\n';
    }
    write_file_atomic(path, out);
}

}  // namespace rexrank
