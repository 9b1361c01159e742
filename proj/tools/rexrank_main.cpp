// rexrank command-line tool: rank sweeps over random networks, channel
// searches under cost budgets, model-family construction and cost reports.
//
// Exit codes: 0 success, 2 usage or parse error, 3 infeasible budget,
// 1 internal error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rexrank/archspec.hpp"
#include "rexrank/costmodel.hpp"
#include "rexrank/randnet.hpp"
#include "rexrank/search.hpp"
#include "rexrank/version.hpp"

namespace fs = std::filesystem;
using namespace rexrank;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitInternal = 1;

// Every run records its seed and full flag set next to its outputs.
void write_run_meta(const fs::path& out_dir, const std::string& command, std::uint64_t seed,
                    int argc, char** argv, const std::vector<std::string>& outputs) {
    nlohmann::ordered_json meta;
    meta["tool"] = "rexrank";
    meta["version"] = kVersion;
    meta["command"] = command;
    meta["seed"] = seed;
    meta["argv"] = nlohmann::ordered_json::array();
    for (int i = 0; i < argc; ++i) meta["argv"].push_back(argv[i]);
    meta["outputs"] = outputs;
    write_file_atomic(out_dir / "run_meta.json", meta.dump(2) + "\n");
}

std::vector<double> parse_ratio_list(const std::string& text) {
    std::vector<double> ratios;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t next = text.find(',', pos);
        if (next == std::string::npos) next = text.size();
        ratios.push_back(std::stod(text.substr(pos, next - pos)));
        pos = next + 1;
    }
    return ratios;
}

std::string human_count(long long value) {
    char buf[32];
    if (value >= 1'000'000'000)
        std::snprintf(buf, sizeof(buf), "%.2fB", value / 1e9);
    else if (value >= 1'000'000)
        std::snprintf(buf, sizeof(buf), "%.2fM", value / 1e6);
    else
        std::snprintf(buf, sizeof(buf), "%.1fk", value / 1e3);
    return buf;
}

struct TrendLine {
    std::string text;
    bool pass = true;
};

// Directional checks a sweep set is expected to satisfy; written to
// trends.txt so a study run is self-auditing.
std::vector<TrendLine> trend_checks(const std::vector<RankCurve>& curves) {
    std::vector<TrendLine> lines;
    const RankCurve* identity = nullptr;
    const RankCurve* silu = nullptr;
    const RankCurve* elu = nullptr;
    const RankCurve* relu6 = nullptr;
    for (const RankCurve& c : curves) {
        switch (c.spec.nonlinearity.kind) {
            case ActKind::Identity: identity = &c; break;
            case ActKind::SiLU: silu = &c; break;
            case ActKind::ELU: elu = &c; break;
            case ActKind::ReLU6: relu6 = &c; break;
            default: break;
        }
    }
    char buf[160];
    for (const RankCurve& c : curves) {
        if (c.spec.nonlinearity.kind == ActKind::Identity) continue;
        const char* act = act_name(c.spec.nonlinearity.kind);
        const RankCurvePoint& lo = c.points.front();
        const RankCurvePoint& hi = c.points.back();
        const bool monotone = hi.mean_rank_ratio >= lo.mean_rank_ratio;
        std::snprintf(buf, sizeof(buf),
                      "low-ratio-expansion-loss %-10s mean(r=%.2f)=%.4f <= mean(r=%.2f)=%.4f",
                      act, lo.ratio, lo.mean_rank_ratio, hi.ratio, hi.mean_rank_ratio);
        lines.push_back({buf, monotone});

        // Rank expansion above d_in; checked at low ratios, where the effect
        // lives and the margin is robust to the tolerance choice.
        double worst = 1e9;
        for (const RankCurvePoint& p : c.points)
            if (p.ratio <= 0.5 + 1e-12)
                worst = std::min(worst, p.mean_rank_ratio - (p.ratio - 0.02));
        if (worst < 1e9) {
            std::snprintf(buf, sizeof(buf),
                          "rank-above-input-dim     %-10s min margin at r<=0.5 = %+.4f", act,
                          worst);
            lines.push_back({buf, worst >= 0.0});
        }
    }
    if (identity && identity->spec.arch.kind == LayerArchKind::Conv1x1) {
        // Only the 1x1 convolution pins the identity baseline to r; spatial
        // kernels mix the sample dimension and raise the linear baseline to
        // the structural cap.
        double worst = 0.0;
        for (const RankCurvePoint& p : identity->points)
            worst = std::max(worst, std::abs(p.mean_rank_ratio - p.ratio));
        std::snprintf(buf, sizeof(buf),
                      "identity-control         identity   max |mean - r| = %.4f (cap %.4f)",
                      worst, 1.0 / 32.0);
        lines.push_back({buf, worst <= 1.0 / 32.0});
    } else if (identity) {
        std::snprintf(buf, sizeof(buf),
                      "identity-baseline        identity   mean(r=%.2f)=%.4f (linear cap, "
                      "informational)",
                      identity->points.front().ratio, identity->points.front().mean_rank_ratio);
        lines.push_back({buf, true});
    }
    if (silu && elu && relu6) {
        const double s = silu->points.front().mean_rank_ratio;
        const double e = elu->points.front().mean_rank_ratio;
        const double r6 = relu6->points.front().mean_rank_ratio;
        std::snprintf(buf, sizeof(buf),
                      "smooth-vs-kinked at r=%.2f silu=%.4f elu=%.4f relu6=%.4f",
                      silu->points.front().ratio, s, e, r6);
        lines.push_back({buf, s >= r6 && e >= r6});
    }
    return lines;
}

int cmd_rank_study(const std::string& arch_name_flag, const std::string& act_flag, bool all_acts,
                   int trials, const std::string& ratios_flag, double tolerance,
                   std::uint64_t seed, const fs::path& out_dir, int argc, char** argv) {
    const LayerArchKind arch = arch_from_name(arch_name_flag);
    std::vector<ActKind> acts;
    if (all_acts) {
        acts.assign(all_act_kinds().begin(), all_act_kinds().end());
    } else {
        acts.push_back(act_from_name(act_flag));
    }

    fs::create_directories(out_dir);
    RankSettings settings;
    settings.rel_tolerance = tolerance;

    std::vector<RankCurve> curves;
    std::vector<std::string> outputs;
    for (ActKind act : acts) {
        SweepSpec spec;
        spec.arch.kind = arch;
        spec.nonlinearity = Nonlinearity{act};
        spec.trials = trials;
        spec.master_seed = seed;
        if (!ratios_flag.empty()) spec.ratio_grid = parse_ratio_list(ratios_flag);
        RankCurve curve = run_sweep(spec, settings);
        const std::string file =
            std::string("curve_") + arch_name(arch) + "_" + act_name(act) + ".csv";
        emit_curve_csv(curve, out_dir / file);
        outputs.push_back(file);
        std::printf("%-12s %-10s  rank ratio %.4f @ r=%.2f -> %.4f @ r=%.2f\n", arch_name(arch),
                    act_name(act), curve.points.front().mean_rank_ratio,
                    curve.points.front().ratio, curve.points.back().mean_rank_ratio,
                    curve.points.back().ratio);
        curves.push_back(std::move(curve));
    }

    std::string trends;
    bool all_pass = true;
    for (const TrendLine& line : trend_checks(curves)) {
        trends += std::string(line.pass ? "PASS " : "FAIL ") + line.text + "\n";
        all_pass = all_pass && line.pass;
    }
    write_file_atomic(out_dir / "trends.txt", trends);
    outputs.push_back("trends.txt");
    write_run_meta(out_dir, "rank-study", seed, argc, argv, outputs);
    std::printf("wrote %zu curve files + trends.txt to %s%s\n", curves.size(),
                out_dir.string().c_str(), all_pass ? "" : " (some trend checks failed)");
    return 0;
}

int cmd_search(int depth, long long max_params, long long max_macs, int n,
               const std::string& fitness_flag, const std::string& exchange_dir, int rank_trials,
               double tolerance, int stem, int resolution, int classes, int max_pieces,
               double fill_floor, std::uint64_t seed, const fs::path& out_dir, int argc,
               char** argv) {
    SearchSpec spec;
    spec.depth = depth;
    if (max_params > 0) spec.budget.max_params = max_params;
    if (max_macs > 0) spec.budget.max_macs = max_macs;
    spec.num_candidates = n;
    spec.max_pieces = max_pieces;
    spec.stem = stem;
    spec.resolution = resolution;
    spec.num_classes = classes;
    spec.master_seed = seed;
    spec.fill_floor = fill_floor;
    if (fitness_flag == "rank") {
        RankScoreFitness fitness;
        fitness.trials = rank_trials;
        fitness.settings.rel_tolerance = tolerance;
        spec.fitness = fitness;
    } else {
        ExternalFitness fitness;
        fitness.exchange_dir = exchange_dir;
        spec.fitness = fitness;
    }

    const SearchRun run = run_search(spec);
    fs::create_directories(out_dir);
    emit_run(run, out_dir);
    write_run_meta(out_dir, "search", seed, argc, argv,
                   {"candidates.csv", "deciles.csv", "summary.json"});

    std::printf("searched %d candidates at depth %d\n", n, depth);
    std::printf("best:  %s (score %.6g, params %s, macs %s)\n",
                format_channels(run.best.channels).c_str(), *run.best.score,
                human_count(run.best.cost.params).c_str(),
                human_count(run.best.cost.macs).c_str());
    std::printf("worst: %s (score %.6g, params %s, macs %s)\n",
                format_channels(run.worst.channels).c_str(), *run.worst.score,
                human_count(run.worst.cost.params).c_str(),
                human_count(run.worst.cost.macs).c_str());
    return 0;
}

int cmd_build(const std::string& family, double width, long long cal_params, long long cal_macs,
              int resolution, int classes, std::uint64_t seed, const fs::path& out_dir, int argc,
              char** argv) {
    BuilderOptions opt;
    if (cal_params > 0 || cal_macs > 0) {
        if (cal_params <= 0 || cal_macs <= 0)
            throw CLI::ValidationError("--calibrate-params and --calibrate-macs must be set together");
        opt.calibration_budget = Budget{cal_params, cal_macs};
    }
    ModelSpec spec;
    if (family == "rexnet")
        spec = build_rexnet(width, opt);
    else if (family == "plain")
        spec = build_rexnet_plain(width, opt);
    else
        spec = build_rexnet_lite(width, opt);

    const CostReport report = model_cost(spec, resolution, classes);
    fs::create_directories(out_dir);
    const std::string spec_file = spec.name + ".spec.json";
    const std::string cost_file = spec.name + ".cost.json";
    export_spec(spec, out_dir / spec_file);
    write_file_atomic(out_dir / cost_file, cost_report_to_json(report).dump(2) + "\n");
    write_run_meta(out_dir, "build", seed, argc, argv, {spec_file, cost_file});

    std::printf("%-18s blocks %zu  params %lld (%s)  macs %lld (%s)\n", spec.name.c_str(),
                spec.blocks.size(), report.params, human_count(report.params).c_str(), report.macs,
                human_count(report.macs).c_str());
    return 0;
}

int cmd_cost(const std::string& spec_path, const std::string& config, int resolution, int classes,
             std::uint64_t seed, const fs::path& out_dir, int argc, char** argv) {
    ModelSpec spec;
    if (!config.empty()) {
        if (resolution % 32 != 0)
            throw CLI::ValidationError("--resolution must be divisible by 32 for config strings");
        spec = model_spec_from_config(parse_config_string(config), "config-model");
    } else {
        spec = import_spec(spec_path);
    }
    const CostReport report = model_cost(spec, resolution, classes);
    fs::create_directories(out_dir);
    write_file_atomic(out_dir / "cost_report.json", cost_report_to_json(report).dump(2) + "\n");
    write_run_meta(out_dir, "cost", seed, argc, argv, {"cost_report.json"});
    std::printf("%s  resolution %d  classes %d\n", spec.name.c_str(), resolution, classes);
    std::printf("params %lld (%s)  macs %lld (%s)\n", report.params,
                human_count(report.params).c_str(), report.macs,
                human_count(report.macs).c_str());
    return 0;
}

int cmd_fit(const std::string& channels_flag) {
    std::vector<int> channels;
    std::size_t pos = 0;
    while (pos < channels_flag.size()) {
        std::size_t next = channels_flag.find(',', pos);
        if (next == std::string::npos) next = channels_flag.size();
        channels.push_back(std::stoi(channels_flag.substr(pos, next - pos)));
        pos = next + 1;
    }
    if (channels.size() < 2) throw CLI::ValidationError("--channels needs at least 2 integers");
    const LinearFit fit = fit_linear(channels);
    std::printf("slope %.6f  intercept %.6f  rms_residual %.6f\n", fit.slope, fit.intercept,
                fit.rms_residual);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rexrank: layer rank analysis and channel-configuration search"};
    app.require_subcommand(1);
    app.fallthrough();

    std::uint64_t seed = 42;
    std::string out_dir = "./out";
    app.add_option("--seed", seed, "master seed echoed into all outputs")->capture_default_str();
    app.add_option("--out", out_dir, "output directory")->capture_default_str();

    // rank-study
    auto* study = app.add_subcommand("rank-study", "dimension-ratio rank sweeps");
    std::string study_arch = "conv1x1";
    std::string study_act = "relu";
    bool study_all = false;
    int study_trials = 200;
    std::string study_ratios;
    double study_tol = 1e-2;
    study->add_option("--arch", study_arch, "conv1x1|conv3x3|ib-conv|ib-dw")
        ->required()
        ->check(CLI::IsMember({"conv1x1", "conv3x3", "ib-conv", "ib-dw"}));
    auto* act_opt = study->add_option("--nonlinearity", study_act,
                                      "identity|relu|relu6|leaky_relu|elu|softplus|hard_swish|silu");
    study->add_flag("--all", study_all, "sweep all eight nonlinearities")->excludes(act_opt);
    study->add_option("--trials", study_trials, "random networks per grid point")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    study->add_option("--ratios", study_ratios, "comma-separated dimension ratios");
    study->add_option("--tolerance", study_tol, "relative rank tolerance")->capture_default_str();

    // search
    auto* search = app.add_subcommand("search", "constrained channel-configuration search");
    int search_depth = 5;
    long long search_params = 0, search_macs = 0;
    int search_n = 200;
    std::string search_fitness = "rank";
    std::string search_exchange;
    int search_trials = 16;
    double search_tol = 1e-2;
    int search_stem = 16, search_res = 32, search_classes = 10, search_pieces = 3;
    double search_fill = 0.85;
    search->add_option("--depth", search_depth, "number of building blocks")->required();
    search->add_option("--max-params", search_params, "parameter budget")
        ->check(CLI::PositiveNumber);
    search->add_option("--max-macs", search_macs, "multiply-accumulate budget")
        ->check(CLI::PositiveNumber);
    search->add_option("--n", search_n, "candidates to sample")->capture_default_str();
    search->add_option("--fitness", search_fitness, "rank|external")
        ->capture_default_str()
        ->check(CLI::IsMember({"rank", "external"}));
    search->add_option("--exchange-dir", search_exchange, "directory for the external scorer");
    search->add_option("--trials", search_trials, "rank-score instantiations per candidate")
        ->capture_default_str();
    search->add_option("--tolerance", search_tol, "relative rank tolerance")
        ->capture_default_str();
    search->add_option("--stem", search_stem, "stem width")->capture_default_str();
    search->add_option("--resolution", search_res, "proxy input resolution")
        ->capture_default_str();
    search->add_option("--classes", search_classes, "proxy classifier classes")
        ->capture_default_str();
    search->add_option("--max-pieces", search_pieces, "max piecewise-linear segments")
        ->capture_default_str();
    search->add_option("--fill-floor", search_fill, "min budget fill of accepted candidates")
        ->capture_default_str();

    // build
    auto* build = app.add_subcommand("build", "construct a model family member");
    std::string build_family;
    double build_width = 1.0;
    long long build_cal_params = 0, build_cal_macs = 0;
    int build_res = 224, build_classes = 1000;
    build->add_option("--family", build_family, "rexnet|plain|lite")
        ->required()
        ->check(CLI::IsMember({"rexnet", "plain", "lite"}));
    build->add_option("--width", build_width, "width multiplier in [0.5, 3.0]")
        ->capture_default_str()
        ->check(CLI::Range(0.5, 3.0));
    build->add_option("--calibrate-params", build_cal_params, "parameter target for calibration");
    build->add_option("--calibrate-macs", build_cal_macs, "mac target for calibration");
    build->add_option("--resolution", build_res, "input resolution")->capture_default_str();
    build->add_option("--classes", build_classes, "classifier classes")->capture_default_str();

    // cost
    auto* cost = app.add_subcommand("cost", "parameter / mac accounting");
    std::string cost_spec, cost_config;
    int cost_res = 224, cost_classes = 1000;
    auto* spec_opt = cost->add_option("--spec", cost_spec, "model spec JSON path");
    auto* config_opt =
        cost->add_option("--config", cost_config, "channel-configuration string");
    spec_opt->excludes(config_opt);
    cost->add_option("--resolution", cost_res, "input resolution")->capture_default_str();
    cost->add_option("--classes", cost_classes, "classifier classes")->capture_default_str();

    // fit
    auto* fit = app.add_subcommand("fit", "least-squares linear fit of a channel sequence");
    std::string fit_channels;
    fit->add_option("--channels", fit_channels, "comma-separated channel widths")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (study->parsed()) {
            if (!study_all && act_opt->count() == 0)
                throw CLI::ValidationError("rank-study needs --nonlinearity or --all");
            return cmd_rank_study(study_arch, study_act, study_all, study_trials, study_ratios,
                                  study_tol, seed, out_dir, argc, argv);
        }
        if (search->parsed()) {
            if (search_fitness == "external" && search_exchange.empty())
                throw CLI::ValidationError("--fitness external requires --exchange-dir");
            if (search_params <= 0 && search_macs <= 0)
                throw CLI::ValidationError("search needs --max-params and/or --max-macs");
            return cmd_search(search_depth, search_params, search_macs, search_n, search_fitness,
                              search_exchange, search_trials, search_tol, search_stem, search_res,
                              search_classes, search_pieces, search_fill, seed, out_dir, argc,
                              argv);
        }
        if (build->parsed())
            return cmd_build(build_family, build_width, build_cal_params, build_cal_macs,
                             build_res, build_classes, seed, out_dir, argc, argv);
        if (cost->parsed()) {
            if ((cost_spec.empty()) == (cost_config.empty()))
                throw CLI::ValidationError("cost needs exactly one of --spec / --config");
            return cmd_cost(cost_spec, cost_config, cost_res, cost_classes, seed, out_dir, argc,
                            argv);
        }
        if (fit->parsed()) return cmd_fit(fit_channels);
        return kExitUsage;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConfigParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}
