#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "rexrank/archspec.hpp"
#include "rexrank/costmodel.hpp"
#include "rexrank/io_util.hpp"
#include "rexrank/parallel.hpp"
#include "rexrank/randnet.hpp"

namespace rexrank {

// Scores a candidate by the expressiveness of its final feature, averaged
// over `trials` random-weight instantiations of the skeleton. The score is
// the mean nuclear norm (the graded rank proxy); the mean rank ratio at
// `settings` is kept alongside it as a bounded statistic. Ratio-normalized
// rank saturates for monotone configurations and cannot order them.
struct RankScoreFitness {
    int trials = 16;
    RankSettings settings;
};

// Delegates scoring to an out-of-process evaluator through a synchronous
// file exchange: candidates.json is written into exchange_dir, then the run
// blocks until scores.json appears there.
struct ExternalFitness {
    std::filesystem::path exchange_dir;
    double poll_interval_s = 0.05;
    double timeout_s = 3600.0;
};

using FitnessKind = std::variant<RankScoreFitness, ExternalFitness>;

struct SearchSpec {
    int depth = 5;
    Budget budget;
    int num_candidates = 200;
    int max_pieces = 3;
    int stem = 16;
    int resolution = 32;
    int num_classes = 10;
    FitnessKind fitness = RankScoreFitness{};
    std::uint64_t master_seed = 42;
    // A candidate is accepted only when every bounded budget dimension is
    // at least this full, keeping the sampled population near the budget.
    double fill_floor = 0.85;

    void validate() const {
        if (depth < 1) throw std::invalid_argument("SearchSpec: depth must be >= 1");
        if (num_candidates < 10)
            throw std::invalid_argument("SearchSpec: need >= 10 candidates so deciles are nonempty");
        if (max_pieces < 1) throw std::invalid_argument("SearchSpec: max_pieces must be >= 1");
        if (stem < 1) throw std::invalid_argument("SearchSpec: stem must be >= 1");
        if (resolution < 8) throw std::invalid_argument("SearchSpec: resolution must be >= 8");
        if (num_classes < 1) throw std::invalid_argument("SearchSpec: num_classes must be >= 1");
        if (fill_floor < 0.0 || fill_floor > 1.0)
            throw std::invalid_argument("SearchSpec: fill_floor must lie in [0, 1]");
        budget.validate();
        if (const auto* rank = std::get_if<RankScoreFitness>(&fitness)) {
            if (rank->trials < 8)
                throw std::invalid_argument("SearchSpec: RankScore trials must be >= 8");
            rank->settings.validate();
        } else {
            const auto& ext = std::get<ExternalFitness>(fitness);
            if (ext.exchange_dir.empty())
                throw std::invalid_argument("SearchSpec: external fitness needs an exchange dir");
        }
    }
};

// Piecewise-linear channel function over block indices 1..d. Breakpoints
// mark the indices where a new slope segment begins.
struct PiecewiseLinear {
    double intercept = 8.0;          // value at block index 1
    std::vector<int> breakpoints;    // sorted, within {2..d}
    std::vector<double> slopes;      // breakpoints.size() + 1 entries

    double eval(int index) const {
        double value = intercept;
        std::size_t piece = 0;
        for (int i = 2; i <= index; ++i) {
            while (piece < breakpoints.size() && breakpoints[piece] <= i) ++piece;
            value += slopes[piece];
        }
        return value;
    }
};

struct Candidate {
    int id = 0;
    std::vector<int> channels;
    PiecewiseLinear pieces;
    CostReport cost;
    std::optional<double> score;
    std::optional<double> mean_rank_ratio;  // RankScore fitness only
};

struct DecileStats {
    std::vector<int> members;  // candidate ids, best rank first
    std::vector<double> mean_channel;
    std::vector<double> std_channel;
    double mean_score = 0.0;
    double std_score = 0.0;
    double mean_params = 0.0;
    double mean_macs = 0.0;
};

struct SearchRun {
    SearchSpec spec;
    std::vector<Candidate> candidates;  // in candidate-id order, all scored
    DecileStats top10, mid10, bottom10;
    Candidate best;
    Candidate worst;
};

// ---------------------------------------------------------------------------
// Proxy skeleton
// ---------------------------------------------------------------------------

// Small-resolution stride template {1,1,2,2,2} stretched over the depth:
// each stride-2 slot contributes one downsampling block at the start of its
// stretch of indices, so the total downsampling stays 8.
inline std::vector<int> proxy_strides(int depth) {
    std::vector<int> strides(static_cast<std::size_t>(depth), 1);
    for (int slot = 3; slot <= 5; ++slot) {
        const int index = depth * (slot - 1) / 5 + 1;  // first block of this slot
        if (index <= depth) strides[static_cast<std::size_t>(index - 1)] = 2;
    }
    return strides;
}

// The fixed skeleton every candidate shares: stem conv, expansion-6
// inverted bottlenecks, penultimate expansion; only the channels vary.
inline ModelSpec candidate_model_spec(const SearchSpec& spec, const std::vector<int>& channels) {
    FamilyLayout layout;
    layout.family = "search-proxy";
    layout.kind = BlockKind::InvertedBottleneck;
    layout.depth = spec.depth;
    layout.strides = proxy_strides(spec.depth);
    layout.expansions.assign(static_cast<std::size_t>(spec.depth), 6.0);
    layout.use_se.assign(static_cast<std::size_t>(spec.depth), false);
    layout.stem_channels = spec.stem;
    layout.stem_stride = 1;  // CIFAR-scale inputs are too small to halve at the stem
    layout.stem_act = Nonlinearity{ActKind::ReLU};
    layout.act_after_expand = Nonlinearity{ActKind::ReLU6};
    layout.act_after_dw = Nonlinearity{ActKind::ReLU6};
    layout.penultimate = 1280;
    layout.stride1_shortcut = ShortcutKind::ZeroPad;
    return assemble_model(layout, channels, "candidate-d" + std::to_string(spec.depth));
}

// ---------------------------------------------------------------------------
// Candidate sampling
// ---------------------------------------------------------------------------

namespace detail {

struct SamplerExtents {
    double max_constant = 8.0;  // largest feasible constant channel width
    double max_slope = 0.0;     // steepest feasible line pinned at c_1 = 8
};

inline CostReport cost_of_channels(const SearchSpec& spec, const std::vector<int>& channels) {
    return model_cost(candidate_model_spec(spec, channels), spec.resolution, spec.num_classes);
}

inline SamplerExtents sampler_extents(const SearchSpec& spec) {
    const auto feasible_constant = [&](double w) {
        std::vector<int> channels(static_cast<std::size_t>(spec.depth),
                                  std::max(8, round_channel(w)));
        return check_budget(cost_of_channels(spec, channels), spec.budget);
    };
    const auto feasible_slope = [&](double a) {
        const auto channels = try_channels(a, 8.0 - a, spec.depth);
        if (!channels) return false;
        return check_budget(cost_of_channels(spec, *channels), spec.budget);
    };

    SamplerExtents extents;
    if (!feasible_constant(8.0)) {
        const CostReport minimal =
            cost_of_channels(spec, std::vector<int>(static_cast<std::size_t>(spec.depth), 8));
        throw InfeasibleError("search: budget below the minimal 8-wide configuration",
                              minimal.params, minimal.macs);
    }
    double lo = 8.0, hi = 8.0;
    while (hi < 65536.0 && feasible_constant(hi)) hi *= 2.0;
    for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (lo + hi);
        (feasible_constant(mid) ? lo : hi) = mid;
    }
    extents.max_constant = lo;

    double alo = 0.0, ahi = 1.0;
    while (ahi < 65536.0 && feasible_slope(ahi)) ahi *= 2.0;
    for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (alo + ahi);
        (feasible_slope(mid) ? alo : ahi) = mid;
    }
    extents.max_slope = std::max(alo, 1e-3);
    return extents;
}

// Fraction of the budget used by the *least* filled bounded dimension;
// 1.0 when nothing is bounded. Requiring this to clear the floor keeps the
// accepted population close to the budget on every constrained axis.
inline double budget_fill(const CostReport& cost, const Budget& budget) {
    double fill = 2.0;
    if (budget.max_params)
        fill = std::min(fill, static_cast<double>(cost.params) /
                                  static_cast<double>(*budget.max_params));
    if (budget.max_macs)
        fill = std::min(fill,
                        static_cast<double>(cost.macs) / static_cast<double>(*budget.max_macs));
    return fill > 1.5 ? 1.0 : fill;
}

}  // namespace detail

// Draws one budget-feasible candidate: a piecewise-linear channel function
// with 1..max_pieces segments, non-negative slopes (log-uniform, with a
// point mass at zero so stage-wise plateaus occur) and intercept >= 8.
// Rejection-resamples until the candidate is feasible and fills the budget,
// bounded at 10,000 attempts.
inline Candidate sample_candidate(const SearchSpec& spec, std::uint64_t seed) {
    spec.validate();
    const detail::SamplerExtents extents = detail::sampler_extents(spec);
    Rng rng(seed);

    constexpr int kMaxAttempts = 10'000;
    double nearest_fill = 1e300;
    long long nearest_params = 0, nearest_macs = 0;

    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        const int max_pieces = std::min(spec.max_pieces, spec.depth);
        const int pieces = static_cast<int>(rng.uniform_int(1, max_pieces));

        PiecewiseLinear pl;
        // Distinct sorted breakpoints from {2..depth}.
        if (pieces > 1 && spec.depth >= 2) {
            std::vector<int> pool(static_cast<std::size_t>(spec.depth - 1));
            for (int i = 0; i < spec.depth - 1; ++i) pool[static_cast<std::size_t>(i)] = i + 2;
            for (int take = 0; take < pieces - 1 && !pool.empty(); ++take) {
                const std::size_t pick = static_cast<std::size_t>(
                    rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1));
                pl.breakpoints.push_back(pool[pick]);
                pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
            }
            std::sort(pl.breakpoints.begin(), pl.breakpoints.end());
        }
        for (std::size_t s = 0; s < pl.breakpoints.size() + 1; ++s) {
            const double u = rng.uniform01();
            const double gate = rng.uniform01();
            if (gate < 0.2) {
                pl.slopes.push_back(0.0);
            } else {
                // log-uniform over [0.01, 1] x max_slope
                pl.slopes.push_back(extents.max_slope * std::pow(10.0, -2.0 * u));
            }
        }
        pl.intercept = 8.0 + rng.uniform01() * std::max(0.0, extents.max_constant - 8.0);

        Candidate candidate;
        candidate.pieces = pl;
        candidate.channels.resize(static_cast<std::size_t>(spec.depth));
        int prev = 0;
        for (int i = 1; i <= spec.depth; ++i) {
            const int c = std::max(8, detail::round_channel(pl.eval(i)));
            candidate.channels[static_cast<std::size_t>(i - 1)] = std::max(c, prev);
            prev = candidate.channels[static_cast<std::size_t>(i - 1)];
        }
        candidate.cost = detail::cost_of_channels(spec, candidate.channels);

        const bool within = check_budget(candidate.cost, spec.budget);
        const double fill = detail::budget_fill(candidate.cost, spec.budget);
        if (within && fill >= spec.fill_floor) return candidate;

        const double miss = within ? (spec.fill_floor - fill) : fill;
        if (miss < nearest_fill) {
            nearest_fill = miss;
            nearest_params = candidate.cost.params;
            nearest_macs = candidate.cost.macs;
        }
    }
    throw InfeasibleError("search: no feasible candidate in 10000 attempts", nearest_params,
                          nearest_macs);
}

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

namespace detail {

// Random-weight instantiation of the proxy skeleton evaluated at a small
// fixed spatial extent (no strides; strides only matter for cost). Returns
// the final feature: last block output, c_d x samples.
inline Matrix score_forward(const ModelSpec& spec, int spatial, int batch,
                            std::uint64_t weight_seed, std::uint64_t input_seed) {
    Rng wrng(weight_seed);
    Rng xrng(input_seed);
    const int spp = spatial * spatial;
    const auto he = [](int fan_in) { return std::sqrt(2.0 / fan_in); };

    Matrix x = Matrix::gaussian(3, batch * spp, xrng);
    // stem 3x3
    {
        Matrix w = Matrix::gaussian(spec.stem.out_channels, 9 * 3, wrng, he(9 * 3));
        Matrix cols = im2col_3x3(x, 3, batch, spatial, spatial);
        x = apply_nonlinearity(spec.stem.act, batch_standardize(matmul(w, cols)));
    }
    for (const BlockSpec& block : spec.blocks) {
        const int c_in = x.rows;
        const bool has_expand = block.expansion != 1.0;
        const int expanded =
            has_expand ? static_cast<int>(std::llround(block.expansion * c_in)) : c_in;
        Matrix h = x;
        if (has_expand) {
            Matrix w = Matrix::gaussian(expanded, c_in, wrng, he(c_in));
            h = apply_nonlinearity(block.act_after_expand, batch_standardize(matmul(w, h)));
        }
        Matrix dw = Matrix::gaussian(expanded, 9, wrng, he(9));
        h = depthwise_conv3x3(h, dw, batch, spatial, spatial);
        h = apply_nonlinearity(block.act_after_dw, batch_standardize(h));
        Matrix wp = Matrix::gaussian(block.out_channels, expanded, wrng, he(expanded));
        Matrix out = batch_standardize(matmul(wp, h));
        if (block.shortcut == ShortcutKind::ZeroPad || block.shortcut == ShortcutKind::Identity) {
            const int carried = std::min(c_in, block.out_channels);
            for (int c = 0; c < carried; ++c) {
                double* dst = out.row_ptr(c);
                const double* src = x.row_ptr(c);
                for (int j = 0; j < out.cols; ++j) dst[j] += src[j];
            }
        }
        x = std::move(out);
    }
    return x;
}

inline void score_with_rank(const SearchSpec& spec, const RankScoreFitness& fitness,
                            std::vector<Candidate>& candidates) {
    constexpr int kSpatial = 7;
    parallel_for(candidates.size(), [&](std::size_t idx) {
        Candidate& cand = candidates[idx];
        const ModelSpec model = candidate_model_spec(spec, cand.channels);
        const int d_out = cand.channels.back();
        // Flattened sample dimension at least twice the scored width.
        const int batch =
            static_cast<int>((2LL * d_out + kSpatial * kSpatial) / (kSpatial * kSpatial));
        double rank_sum = 0.0, nuc_sum = 0.0;
        for (int t = 0; t < fitness.trials; ++t) {
            const std::uint64_t seed =
                derive_seed(spec.master_seed, 0x5C0BEULL, static_cast<std::uint64_t>(cand.id), t);
            const Matrix feature = score_forward(model, kSpatial, batch, derive_seed(seed, 1),
                                                 derive_seed(seed, 2));
            const std::vector<double> sigma = singular_values(feature);
            rank_sum += static_cast<double>(rank_from_singular_values(sigma, fitness.settings)) /
                        d_out;
            for (double s : sigma) nuc_sum += s;
        }
        cand.score = nuc_sum / fitness.trials;
        cand.mean_rank_ratio = rank_sum / fitness.trials;
    });
}

inline std::string run_id_for(const SearchSpec& spec) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "run-%016llx",
                  static_cast<unsigned long long>(derive_seed(
                      spec.master_seed, static_cast<std::uint64_t>(spec.depth),
                      static_cast<std::uint64_t>(spec.num_candidates))));
    return buf;
}

inline void score_with_external(const SearchSpec& spec, const ExternalFitness& fitness,
                                std::vector<Candidate>& candidates) {
    namespace fs = std::filesystem;
    fs::create_directories(fitness.exchange_dir);
    const std::string run_id = run_id_for(spec);

    nlohmann::ordered_json out;
    out["run_id"] = run_id;
    out["candidates"] = nlohmann::ordered_json::array();
    for (const Candidate& c : candidates) {
        nlohmann::ordered_json jc;
        jc["id"] = c.id;
        jc["channels"] = c.channels;
        jc["params"] = c.cost.params;
        jc["macs"] = c.cost.macs;
        out["candidates"].push_back(jc);
    }
    write_file_atomic(fitness.exchange_dir / "candidates.json", out.dump(2) + "\n");

    const fs::path scores_path = fitness.exchange_dir / "scores.json";
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                              std::chrono::duration<double>(fitness.timeout_s));
    while (!fs::exists(scores_path)) {
        if (std::chrono::steady_clock::now() > deadline)
            throw std::runtime_error("external fitness: timed out waiting for " +
                                     scores_path.string());
        std::this_thread::sleep_for(std::chrono::duration<double>(fitness.poll_interval_s));
    }

    nlohmann::json in;
    try {
        in = nlohmann::json::parse(read_file(scores_path));
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("external fitness: malformed scores.json: " +
                                 std::string(e.what()));
    }
    if (!in.is_object() || !in.contains("run_id") || !in.contains("scores"))
        throw std::runtime_error("external fitness: scores.json must carry run_id and scores");
    if (in.at("run_id").get<std::string>() != run_id)
        throw std::runtime_error("external fitness: scores.json run_id mismatch (expected " +
                                 run_id + ")");
    std::map<int, double> by_id;
    for (const auto& entry : in.at("scores")) {
        if (!entry.contains("id") || !entry.contains("score"))
            throw std::runtime_error("external fitness: score entry missing id or score");
        const double value = entry.at("score").get<double>();
        if (!std::isfinite(value))
            throw std::runtime_error("external fitness: non-finite score for id " +
                                     std::to_string(entry.at("id").get<int>()));
        by_id[entry.at("id").get<int>()] = value;
    }
    for (Candidate& c : candidates) {
        const auto it = by_id.find(c.id);
        if (it == by_id.end())
            throw std::runtime_error("external fitness: missing score for candidate id " +
                                     std::to_string(c.id));
        c.score = it->second;
    }
}

}  // namespace detail

inline std::string run_id(const SearchSpec& spec) { return detail::run_id_for(spec); }

inline void score_candidates(const SearchSpec& spec, std::vector<Candidate>& candidates) {
    spec.validate();
    for (const Candidate& c : candidates)
        if (!check_budget(c.cost, spec.budget))
            throw std::invalid_argument("score_candidates: candidate " + std::to_string(c.id) +
                                        " violates the budget");
    if (const auto* rank = std::get_if<RankScoreFitness>(&spec.fitness))
        detail::score_with_rank(spec, *rank, candidates);
    else
        detail::score_with_external(spec, std::get<ExternalFitness>(spec.fitness), candidates);
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

// Sorts descending by score (ties: fewer params, then lower id) and takes
// the top-10%, middle-10% (ranks just past the median) and bottom-10%
// buckets, each of round(0.1 * n) members.
inline SearchRun aggregate(const SearchSpec& spec, std::vector<Candidate> candidates) {
    spec.validate();
    for (const Candidate& c : candidates)
        if (!c.score)
            throw std::invalid_argument("aggregate: candidate " + std::to_string(c.id) +
                                        " has no score");

    const int n = static_cast<int>(candidates.size());
    std::vector<const Candidate*> ranked(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) ranked[i] = &candidates[i];
    std::sort(ranked.begin(), ranked.end(), [](const Candidate* a, const Candidate* b) {
        if (*a->score != *b->score) return *a->score > *b->score;
        if (a->cost.params != b->cost.params) return a->cost.params < b->cost.params;
        return a->id < b->id;
    });

    const int m = std::max(1, static_cast<int>(std::llround(0.1 * n)));
    const int mid_start = n / 2;
    if (mid_start + m > n)
        throw std::invalid_argument("aggregate: too few candidates for decile buckets");

    const auto bucket = [&](int first, int count) {
        DecileStats stats;
        const int depth = static_cast<int>(candidates.front().channels.size());
        stats.mean_channel.assign(static_cast<std::size_t>(depth), 0.0);
        stats.std_channel.assign(static_cast<std::size_t>(depth), 0.0);
        double score_sum = 0.0;
        for (int r = first; r < first + count; ++r) {
            const Candidate* c = ranked[static_cast<std::size_t>(r)];
            stats.members.push_back(c->id);
            score_sum += *c->score;
            stats.mean_params += static_cast<double>(c->cost.params);
            stats.mean_macs += static_cast<double>(c->cost.macs);
            for (int b = 0; b < depth; ++b)
                stats.mean_channel[static_cast<std::size_t>(b)] +=
                    c->channels[static_cast<std::size_t>(b)];
        }
        stats.mean_score = score_sum / count;
        stats.mean_params /= count;
        stats.mean_macs /= count;
        for (int b = 0; b < depth; ++b) stats.mean_channel[static_cast<std::size_t>(b)] /= count;
        double score_sq = 0.0;
        for (int r = first; r < first + count; ++r) {
            const Candidate* c = ranked[static_cast<std::size_t>(r)];
            const double ds = *c->score - stats.mean_score;
            score_sq += ds * ds;
            for (int b = 0; b < depth; ++b) {
                const double dc = c->channels[static_cast<std::size_t>(b)] -
                                  stats.mean_channel[static_cast<std::size_t>(b)];
                stats.std_channel[static_cast<std::size_t>(b)] += dc * dc;
            }
        }
        stats.std_score = std::sqrt(score_sq / count);
        for (int b = 0; b < depth; ++b)
            stats.std_channel[static_cast<std::size_t>(b)] =
                std::sqrt(stats.std_channel[static_cast<std::size_t>(b)] / count);
        return stats;
    };

    SearchRun run;
    run.spec = spec;
    run.top10 = bucket(0, m);
    run.mid10 = bucket(mid_start, m);
    run.bottom10 = bucket(n - m, m);
    run.best = *ranked.front();
    run.worst = *ranked.back();
    run.candidates = std::move(candidates);
    return run;
}

// Samples, scores and aggregates one full search run.
inline SearchRun run_search(const SearchSpec& spec) {
    spec.validate();
    std::vector<Candidate> candidates(static_cast<std::size_t>(spec.num_candidates));
    // Sampling is cheap (cost-model evaluations only); seeds are per-id.
    for (int id = 0; id < spec.num_candidates; ++id) {
        candidates[static_cast<std::size_t>(id)] =
            sample_candidate(spec, derive_seed(spec.master_seed, 0xCA4DULL, id));
        candidates[static_cast<std::size_t>(id)].id = id;
    }
    score_candidates(spec, candidates);
    return aggregate(spec, std::move(candidates));
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

inline std::string format_channels(const std::vector<int>& channels) {
    std::string out;
    for (std::size_t i = 0; i < channels.size(); ++i) {
        if (i) out += '-';
        out += std::to_string(channels[i]);
    }
    return out;
}

inline void emit_run(const SearchRun& run, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const int depth = run.spec.depth;

    std::string csv = "id";
    for (int b = 1; b <= depth; ++b) csv += ",c" + std::to_string(b);
    csv += ",params,macs,score\n";
    for (const Candidate& c : run.candidates) {
        csv += std::to_string(c.id);
        for (int value : c.channels) csv += "," + std::to_string(value);
        csv += "," + std::to_string(c.cost.params) + "," + std::to_string(c.cost.macs) + "," +
               format_real(*c.score) + "\n";
    }
    write_file_atomic(dir / "candidates.csv", csv);

    std::string deciles = "bucket,block_index,mean_channel,std_channel\n";
    const auto emit_bucket = [&](const char* name, const DecileStats& stats) {
        for (int b = 0; b < depth; ++b) {
            deciles += std::string(name) + "," + std::to_string(b + 1) + "," +
                       format_real(stats.mean_channel[static_cast<std::size_t>(b)]) + "," +
                       format_real(stats.std_channel[static_cast<std::size_t>(b)]) + "\n";
        }
    };
    emit_bucket("top10", run.top10);
    emit_bucket("mid10", run.mid10);
    emit_bucket("bottom10", run.bottom10);
    write_file_atomic(dir / "deciles.csv", deciles);

    const auto bucket_json = [](const DecileStats& stats) {
        nlohmann::ordered_json j;
        j["members"] = stats.members;
        j["mean_score"] = stats.mean_score;
        j["std_score"] = stats.std_score;
        j["mean_params"] = stats.mean_params;
        j["mean_macs"] = stats.mean_macs;
        return j;
    };
    const auto candidate_json = [](const Candidate& c) {
        nlohmann::ordered_json j;
        j["id"] = c.id;
        j["config"] = format_channels(c.channels);
        j["params"] = c.cost.params;
        j["macs"] = c.cost.macs;
        j["score"] = *c.score;
        return j;
    };
    nlohmann::ordered_json summary;
    summary["run_id"] = run_id(run.spec);
    summary["depth"] = depth;
    summary["num_candidates"] = run.spec.num_candidates;
    summary["seed"] = run.spec.master_seed;
    summary["best"] = candidate_json(run.best);
    summary["worst"] = candidate_json(run.worst);
    summary["top10"] = bucket_json(run.top10);
    summary["mid10"] = bucket_json(run.mid10);
    summary["bottom10"] = bucket_json(run.bottom10);
    write_file_atomic(dir / "summary.json", summary.dump(2) + "\n");
}

}  // namespace rexrank
