#include <catch2/catch.hpp>

#include <filesystem>

#include "rexrank/archspec.hpp"
#include "test_support.hpp"

using namespace rexrank;
namespace fs = std::filesystem;

TEST_CASE("linear channel evaluation", "[archspec]") {
    CHECK(channels_from_linear({8.75, 15.25, 9}) ==
          std::vector<int>{24, 33, 42, 50, 59, 68, 77, 85, 94});
    CHECK(channels_from_linear({0.0, 36.0, 5}) == std::vector<int>{36, 36, 36, 36, 36});
    // round half away from zero
    CHECK(channels_from_linear({10.5, 5.0, 3}) == std::vector<int>{16, 26, 37});
    CHECK_THROWS_AS(channels_from_linear({0.0, 4.0, 3}), std::invalid_argument);
    CHECK_THROWS_AS(channels_from_linear({-1.0, 30.0, 3}), std::invalid_argument);
}

TEST_CASE("least-squares fit of channel sequences", "[archspec]") {
    const LinearFit fit = fit_linear({24, 33, 42, 50, 59, 68, 77, 85, 94});
    CHECK(fit.slope == Approx(8.733333).margin(1e-5));
    CHECK(fit.intercept == Approx(15.444444).margin(1e-5));
    CHECK(fit.rms_residual == Approx(0.262937).margin(1e-5));
    CHECK(fit.rms_residual < 0.6);

    const LinearFit flat = fit_linear({36, 36, 36, 36});
    CHECK(flat.slope == Approx(0.0).margin(1e-12));
    CHECK(flat.rms_residual == Approx(0.0).margin(1e-12));

    const LinearFit exact = fit_linear({10, 20, 30});
    CHECK(exact.slope == Approx(10.0).margin(1e-12));
    CHECK(exact.intercept == Approx(0.0).margin(1e-12));
    CHECK(exact.rms_residual == Approx(0.0).margin(1e-12));

    CHECK_THROWS_AS(fit_linear(std::vector<int>{10}), std::invalid_argument);
}

TEST_CASE("fit recovers random linear parameterizations", "[archspec]") {
    Rng rng(2024);
    for (int trial = 0; trial < 500; ++trial) {
        LinearParam p;
        p.slope_a = 20.0 * rng.uniform01();
        p.intercept_b = 8.0 + 52.0 * rng.uniform01();
        p.depth_d = static_cast<int>(rng.uniform_int(5, 30));
        const LinearFit fit = fit_linear(channels_from_linear(p));
        CHECK(std::abs(fit.slope - p.slope_a) <= 0.5);
        CHECK(std::abs(fit.intercept - p.intercept_b) <= 1.5);
    }
}

TEST_CASE("rexnet family structure", "[archspec]") {
    const ModelSpec spec = build_rexnet(1.0);
    REQUIRE(spec.blocks.size() == 17);
    spec.validate();
    CHECK(spec.stem.out_channels == 32);
    CHECK(spec.stem.act.kind == ActKind::ReLU6);
    CHECK(spec.penultimate_channels == 1280);
    CHECK(spec.blocks.front().expansion == 1.0);
    for (std::size_t i = 1; i < spec.blocks.size(); ++i) CHECK(spec.blocks[i].expansion == 6.0);

    // stride layout: stage starts of stages 2, 3, 4 and 6
    const int strides[17] = {1, 2, 1, 2, 1, 1, 2, 1, 1, 1, 1, 1, 1, 2, 1, 1, 1};
    int prev_channels = 0;
    for (int i = 0; i < 17; ++i) {
        const BlockSpec& b = spec.blocks[static_cast<std::size_t>(i)];
        CHECK(b.stride == strides[i]);
        CHECK(b.out_channels >= prev_channels);
        prev_channels = b.out_channels;
        CHECK(b.use_se);
        CHECK(b.act_after_expand.kind == ActKind::SiLU);
        CHECK(b.act_after_dw.kind == ActKind::ReLU6);
        CHECK(b.act_after_dw.kind != ActKind::SiLU);
        if (b.stride == 2)
            CHECK(b.shortcut == ShortcutKind::None);
        else
            CHECK(b.shortcut == ShortcutKind::ZeroPad);
    }

    std::vector<int> channels;
    for (const BlockSpec& b : spec.blocks) channels.push_back(b.out_channels);
    CHECK(fit_linear(channels).rms_residual < 1.0);
}

TEST_CASE("rexnet default calibration lands on the reference cost", "[archspec]") {
    const ModelSpec spec = build_rexnet(1.0);
    const CostReport report = model_cost(spec, 224, 1000);
    CHECK(std::abs(report.params - 4.8e6) / 4.8e6 < 0.05);
    CHECK(std::abs(report.macs - 4.0e8) / 4.0e8 < 0.05);
}

TEST_CASE("width multiplier doubles block widths within rounding", "[archspec]") {
    const ModelSpec one = build_rexnet(1.0);
    const ModelSpec two = build_rexnet(2.0);
    REQUIRE(one.blocks.size() == two.blocks.size());
    for (std::size_t i = 0; i < one.blocks.size(); ++i)
        CHECK(std::abs(two.blocks[i].out_channels - 2 * one.blocks[i].out_channels) <= 1);
    CHECK(two.stem.out_channels == 64);
    CHECK(two.penultimate_channels == 2560);

    // penultimate stays at 1280 for sub-1.0 multipliers
    CHECK(build_rexnet(0.5).penultimate_channels == 1280);

    CHECK_THROWS_AS(build_rexnet(9.0), std::invalid_argument);
    CHECK_THROWS_AS(build_rexnet(0.4), std::invalid_argument);
}

TEST_CASE("conv parameter mass scales quadratically with the multiplier", "[archspec]") {
    const ModelSpec base = build_rexnet(1.0);
    const CostReport base_report = model_cost(base, 224, 1000);
    const long long base_cls = base_report.per_layer.back().params;
    for (double m : {0.5, 1.5, 2.0, 3.0}) {
        ModelSpec scaled = base;
        scaled.stem.out_channels = static_cast<int>(std::llround(base.stem.out_channels * m));
        int prev = 0;
        for (auto& b : scaled.blocks) {
            b.out_channels = std::max(static_cast<int>(std::llround(b.out_channels * m)), prev);
            prev = b.out_channels;
        }
        scaled.penultimate_channels =
            static_cast<int>(std::llround(base.penultimate_channels * m));
        const CostReport report = model_cost(scaled, 224, 1000);
        const long long cls = report.per_layer.back().params;
        const double ratio = static_cast<double>(report.params - cls) /
                             static_cast<double>(base_report.params - base_cls);
        INFO("multiplier " << m);
        CHECK(ratio == Approx(m * m).epsilon(0.05));
    }
}

TEST_CASE("plain family structure", "[archspec]") {
    const ModelSpec spec = build_rexnet_plain(1.0);
    REQUIRE(spec.blocks.size() == 13);
    spec.validate();
    for (const BlockSpec& b : spec.blocks) {
        CHECK(b.kind == BlockKind::DepthwiseSeparable);
        CHECK(b.shortcut == ShortcutKind::None);
        CHECK_FALSE(b.use_se);
        CHECK(b.act_after_expand.kind == ActKind::SiLU);
        CHECK(b.act_after_dw.kind == ActKind::ReLU);
        CHECK(b.expansion == 1.0);
    }
    CHECK(spec.stem.act.kind == ActKind::ReLU);

    // channels come straight from the calibrated linear parameterization
    const CalibrationResult cal =
        calibrate_linear(plain_layout(1.0), default_plain_budget(), 224);
    const std::vector<int> expected = channels_from_linear(cal.param);
    REQUIRE(expected.size() == spec.blocks.size());
    for (std::size_t i = 0; i < expected.size(); ++i)
        CHECK(spec.blocks[i].out_channels == expected[i]);

    const CostReport report = model_cost(spec, 224, 1000);
    CHECK(std::abs(report.params - 4.2e6) / 4.2e6 < 0.05);
    CHECK(std::abs(report.macs - 5.6e8) / 5.6e8 < 0.05);
}

TEST_CASE("lite family structure", "[archspec]") {
    const ModelSpec spec = build_rexnet_lite(1.0);
    REQUIRE(spec.blocks.size() == 17);
    spec.validate();
    REQUIRE(spec.head.hidden.has_value());
    CHECK(*spec.head.hidden == 1280);
    for (const BlockSpec& b : spec.blocks) {
        CHECK_FALSE(b.use_se);
        CHECK(b.act_after_expand.kind == ActKind::ReLU6);
        CHECK(b.act_after_dw.kind == ActKind::ReLU6);
    }
    CHECK(spec.stem.act.kind != ActKind::SiLU);

    const CostReport lite_report = model_cost(spec, 224, 1000);
    bool found_hidden = false;
    long long hidden_params = 0;
    for (const LayerCost& l : lite_report.per_layer)
        if (l.name == "hidden_fc") {
            found_hidden = true;
            hidden_params = l.params;
        }
    CHECK(found_hidden);

    // at equal heads (hidden layer excluded) the SE removal makes lite
    // strictly smaller than rexnet
    const CostReport rexnet_report = model_cost(build_rexnet(1.0), 224, 1000);
    CHECK(lite_report.params - hidden_params < rexnet_report.params);
}

TEST_CASE("calibration is reproducible and reports its own costs", "[archspec]") {
    const FamilyLayout layout = rexnet_layout(1.0);
    const CalibrationResult cal = calibrate_linear(layout, default_rexnet_budget(), 224);
    const ModelSpec spec = assemble_model(layout, channels_from_linear(cal.param), "check");
    const CostReport report = model_cost(spec, 224, 1000);
    CHECK(report.params == cal.params);
    CHECK(report.macs == cal.macs);
    CHECK(report.params <= *default_rexnet_budget().max_params);
    CHECK(report.macs <= *default_rexnet_budget().max_macs);
}

TEST_CASE("calibration degenerates to slope zero when a constant config fits exactly",
          "[archspec]") {
    FamilyLayout layout = rexnet_layout(1.0);
    layout.depth = 5;
    layout.strides = {1, 2, 1, 2, 1};
    layout.expansions.assign(5, 6.0);
    layout.use_se.assign(5, false);
    const ModelSpec constant36 =
        assemble_model(layout, std::vector<int>(5, 36), "constant");
    const CostReport target = model_cost(constant36, 224, 1000);
    const CalibrationResult cal =
        calibrate_linear(layout, Budget{target.params, target.macs}, 224);
    CHECK(cal.param.slope_a == Approx(0.0).margin(1e-9));
    CHECK(channels_from_linear(cal.param) == std::vector<int>(5, 36));
    CHECK(cal.params == target.params);
}

TEST_CASE("calibration reports infeasible budgets with nearest costs", "[archspec]") {
    try {
        calibrate_linear(rexnet_layout(1.0), Budget{1000, 1'000'000'000}, 224);
        FAIL("expected InfeasibleError");
    } catch (const InfeasibleError& e) {
        CHECK(e.nearest_params() > 1000);
        CHECK(std::string(e.what()).find("nearest achievable") != std::string::npos);
    }
}

TEST_CASE("model spec JSON round-trips", "[archspec]") {
    const fs::path dir = fs::temp_directory_path() / "rexrank_spec_test";
    fs::create_directories(dir);
    for (const ModelSpec& spec :
         {build_rexnet(1.0), build_rexnet_plain(0.9), build_rexnet_lite(1.3)}) {
        const fs::path path = dir / (spec.name + ".json");
        export_spec(spec, path);
        const ModelSpec back = import_spec(path);
        CHECK(back == spec);
    }
    fs::remove_all(dir);
}

TEST_CASE("model spec import names missing fields", "[archspec]") {
    nlohmann::json j = model_spec_to_json(build_rexnet(1.0));
    j.erase("blocks");
    try {
        model_spec_from_json(j);
        FAIL("expected error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("blocks") != std::string::npos);
    }

    nlohmann::json j2 = model_spec_to_json(build_rexnet(1.0));
    j2["blocks"][3].erase("stride");
    try {
        model_spec_from_json(j2);
        FAIL("expected error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("blocks[3].stride") != std::string::npos);
    }

    nlohmann::json j3 = model_spec_to_json(build_rexnet(1.0));
    j3["schema"] = "other/9";
    CHECK_THROWS_AS(model_spec_from_json(j3), std::invalid_argument);
}

TEST_CASE("exported specs validate against the published schema", "[archspec]") {
    const fs::path schema_path = fs::path(__FILE__).parent_path().parent_path() / "docs" /
                                 "modelspec.schema.json";
    const nlohmann::json schema = nlohmann::json::parse(testsupport::slurp(schema_path));
    for (const ModelSpec& spec :
         {build_rexnet(1.0), build_rexnet_plain(1.0), build_rexnet_lite(1.0)}) {
        const std::string err =
            testsupport::validate_against_schema(model_spec_to_json(spec), schema);
        INFO(spec.name << ": " << err);
        CHECK(err.empty());
    }
}

TEST_CASE("builder specs respect the family invariants", "[archspec]") {
    for (double m : {0.5, 1.0, 2.0, 3.0}) {
        for (const ModelSpec& spec :
             {build_rexnet(m), build_rexnet_plain(m), build_rexnet_lite(m)}) {
            spec.validate();  // monotone channels + stride-2 shortcut rule
            const std::size_t expected =
                spec.name.find("plain") != std::string::npos ? 13 : 17;
            CHECK(spec.blocks.size() == expected);
            for (const BlockSpec& b : spec.blocks) CHECK(b.act_after_dw.kind != ActKind::SiLU);
        }
    }
}
