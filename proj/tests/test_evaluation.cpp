#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "tosmtl/metrics.hpp"
#include "tosmtl/phantom.hpp"
#include "tosmtl/surface.hpp"
#include "tosmtl/svg_render.hpp"

using namespace tosmtl;

namespace {

TosCurve curve(std::vector<double> v) {
    TosCurve c;
    c.tos_ms = std::move(v);
    return c;
}

}  // namespace

TEST_CASE("tos_mae_ms: exact prediction, constant offset, length mismatch") {
    auto gt = curve({17, 34, 51, 170});
    CHECK(tos_mae_ms(gt, gt) == 0.0);
    auto off = gt;
    for (double& v : off.tos_ms) v += 17.0;
    CHECK(tos_mae_ms(off, gt) == doctest::Approx(17.0));
    CHECK_THROWS_AS(tos_mae_ms(curve({1, 2}), gt), ConfigError);
}

TEST_CASE("tos_mae_ms is symmetric and satisfies the triangle inequality") {
    Rng rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        TosCurve a, b, c;
        for (int s = 0; s < 18; ++s) {
            a.tos_ms.push_back(rng.uniform(17, 340));
            b.tos_ms.push_back(rng.uniform(17, 340));
            c.tos_ms.push_back(rng.uniform(17, 340));
        }
        CHECK(tos_mae_ms(a, b) == doctest::Approx(tos_mae_ms(b, a)));
        CHECK(tos_mae_ms(a, c) <= tos_mae_ms(a, b) + tos_mae_ms(b, c) + 1e-12);
    }
}

TEST_CASE("classification metrics: perfect, all-negative, inverted") {
    std::vector<bool> truth = {false, true, true, false};
    auto gt = SectorLabels::hard(truth);
    auto m1 = classification_metrics(gt, gt);
    CHECK(m1.accuracy == 1.0);
    CHECK(m1.precision == 1.0);
    CHECK(m1.recall == 1.0);
    CHECK(m1.f1 == 1.0);

    auto none = SectorLabels::hard({false, false, false, false});
    auto m2 = classification_metrics(none, none);
    CHECK(m2.accuracy == 1.0);
    CHECK(m2.f1 == 1.0);
    CHECK(m2.degenerate_convention);

    std::vector<bool> inverted = {true, false, false, true};
    auto m3 = classification_metrics(SectorLabels::hard(inverted), gt);
    CHECK(m3.accuracy == 0.0);
}

TEST_CASE("scar_stratified_report: constructed 170 ms scar error fixture") {
    PhantomSpec spec;
    spec.rng_seed = 31;
    spec.scar_probability = 1.0;
    auto records = generate_phantom(spec, 1);
    records.resize(1);
    auto& rec = records[0];

    PredictionRecord pred;
    pred.id = rec.id;
    pred.method = "fixture";
    pred.tos = rec.tos;
    std::size_t scar_sectors = 0;
    for (std::size_t s = 0; s < rec.strain.n_sectors; ++s) {
        if (rec.scar_mask[s]) {
            pred.tos.tos_ms[s] += 170.0;
            ++scar_sectors;
        }
    }
    REQUIRE(scar_sectors > 0);

    auto report = scar_stratified_report({pred}, records);
    REQUIRE(report.methods.size() == 1);
    const auto& m = report.methods[0];
    CHECK(m.scar.sectors == scar_sectors);
    CHECK(m.scar.mae_ms == doctest::Approx(170.0));
    CHECK(m.normal.mae_ms == doctest::Approx(0.0));
    CHECK(m.lma.mae_ms == doctest::Approx(0.0));
}

TEST_CASE("scar_stratified_report: empty scar stratum is reported as absent, not zero") {
    PhantomSpec spec;
    spec.rng_seed = 32;
    spec.scar_probability = 0.0;
    auto records = generate_phantom(spec, 1);
    PredictionRecord pred;
    pred.id = records[0].id;
    pred.method = "m";
    pred.tos = records[0].tos;
    std::vector<PhantomRecord> one = {records[0]};
    auto report = scar_stratified_report({pred}, one);
    CHECK_FALSE(report.methods[0].scar.present());
    auto j = report_to_json(report);
    CHECK(j["methods"][0]["strata"]["scar"]["mae_ms"].is_null());
}

TEST_CASE("scar_stratified_report: perfect predictions give all-zero strata") {
    PhantomSpec spec;
    spec.rng_seed = 33;
    auto records = generate_phantom(spec, 2);
    std::vector<PredictionRecord> preds;
    for (const auto& rec : records) preds.push_back({rec.id, "exact", rec.tos, std::nullopt});
    auto report = scar_stratified_report(preds, records);
    CHECK(report.methods[0].all.mae_ms == 0.0);
}

TEST_CASE("scar_stratified_report: missing predictions are listed and excluded") {
    PhantomSpec spec;
    spec.rng_seed = 34;
    auto records = generate_phantom(spec, 1);  // 4 slices
    std::vector<PredictionRecord> preds;
    preds.push_back({records[0].id, "m", records[0].tos, std::nullopt});
    auto report = scar_stratified_report(preds, records);
    CHECK(report.methods[0].records == 1);
    CHECK(report.methods[0].missing_record_ids.size() == 3);
}

TEST_CASE("strata MAEs weighted by sizes recombine to the overall MAE") {
    PhantomSpec spec;
    spec.rng_seed = 35;
    spec.scar_probability = 0.7;
    auto records = generate_phantom(spec, 5);
    Rng rng(36);
    std::vector<PredictionRecord> preds;
    for (const auto& rec : records) {
        PredictionRecord p{rec.id, "noisy", rec.tos, std::nullopt};
        for (double& v : p.tos.tos_ms) v += rng.uniform(-40.0, 40.0);
        preds.push_back(std::move(p));
    }
    auto report = scar_stratified_report(preds, records);
    const auto& m = report.methods[0];
    const double recombined =
        (m.scar.mae_ms * static_cast<double>(m.scar.sectors) +
         m.lma.mae_ms * static_cast<double>(m.lma.sectors) +
         m.normal.mae_ms * static_cast<double>(m.normal.sectors)) /
        static_cast<double>(m.scar.sectors + m.lma.sectors + m.normal.sectors);
    CHECK(std::abs(recombined - m.all.mae_ms) < 1e-12);
}

TEST_CASE("prediction JSONL round-trip, with and without labels") {
    std::vector<PredictionRecord> preds;
    preds.push_back({"r1", "snake", curve({17, 34, 51}), std::nullopt});
    SectorLabels labels = SectorLabels::hard({false, true, false});
    preds.push_back({"r2", "mtl", curve({17, 300, 17}), labels});
    const std::string path = "test_predictions.jsonl";
    save_predictions(preds, path);
    auto loaded = load_predictions(path);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].method == "snake");
    CHECK_FALSE(loaded[0].labels.has_value());
    CHECK(loaded[1].labels.has_value());
    CHECK(loaded[1].tos.tos_ms == preds[1].tos.tos_ms);
    std::remove(path.c_str());
}

// ---------------------------------------------------------------------------
// surface map

TEST_CASE("surface_map: queries at slice z and sector angles reproduce inputs") {
    SurfaceGridConfig cfg;  // 72 x 32, z = {0, 0.33, 0.66, 1}
    Rng rng(41);
    std::vector<TosCurve> slices;
    for (int i = 0; i < 4; ++i) {
        TosCurve c;
        for (int s = 0; s < 18; ++s) c.tos_ms.push_back(rng.uniform(17, 340));
        slices.push_back(c);
    }
    for (std::size_t slice = 0; slice < 4; ++slice) {
        for (std::size_t s = 0; s < 18; ++s) {
            const double angle = 2.0 * M_PI * static_cast<double>(s) / 18.0;
            const double v = surface_sample(slices, cfg, angle, cfg.slice_z[slice]);
            CHECK(v == doctest::Approx(slices[slice].tos_ms[s]).epsilon(1e-12));
        }
    }
}

TEST_CASE("surface_map: constant slices give a constant grid") {
    SurfaceGridConfig cfg;
    std::vector<TosCurve> slices(4, curve(std::vector<double>(18, 123.0)));
    auto grid = surface_map(slices, cfg);
    for (double v : grid.values) CHECK(v == doctest::Approx(123.0).epsilon(1e-12));
}

TEST_CASE("surface_map: midway z at a sector angle is the mean of bracketing slices") {
    SurfaceGridConfig cfg;
    cfg.slice_z = {0.0, 0.5, 0.75, 1.0};
    Rng rng(42);
    std::vector<TosCurve> slices;
    for (int i = 0; i < 4; ++i) {
        TosCurve c;
        for (int s = 0; s < 18; ++s) c.tos_ms.push_back(rng.uniform(17, 340));
        slices.push_back(c);
    }
    const double angle = 2.0 * M_PI * 7.0 / 18.0;
    const double mid = surface_sample(slices, cfg, angle, 0.25);
    CHECK(mid == doctest::Approx(0.5 * (slices[0].tos_ms[7] + slices[1].tos_ms[7])).epsilon(1e-12));
}

TEST_CASE("surface_map: z outside the slice range clamps to the nearest slice") {
    SurfaceGridConfig cfg;
    cfg.slice_z = {0.2, 0.4, 0.6, 0.8};
    std::vector<TosCurve> slices;
    for (int i = 0; i < 4; ++i) slices.push_back(curve(std::vector<double>(18, 100.0 + i)));
    CHECK(surface_sample(slices, cfg, 0.0, 0.0) == doctest::Approx(100.0));
    CHECK(surface_sample(slices, cfg, 0.0, 1.0) == doctest::Approx(103.0));
}

TEST_CASE("surface_map rejects fewer than 2 slices and unsorted z") {
    SurfaceGridConfig cfg;
    cfg.slice_z = {0.0};
    CHECK_THROWS_AS(surface_map({curve(std::vector<double>(18, 1.0))}, cfg), ConfigError);
    SurfaceGridConfig cfg2;
    cfg2.slice_z = {0.5, 0.25, 0.75, 1.0};
    std::vector<TosCurve> slices(4, curve(std::vector<double>(18, 1.0)));
    CHECK_THROWS_AS(surface_map(slices, cfg2), ConfigError);
}

TEST_CASE("surface_map commutes with circular sector shift at aligned angles") {
    SurfaceGridConfig cfg;  // 72 angles, 18 sectors -> sector stride 4 grid cells
    Rng rng(43);
    std::vector<TosCurve> slices;
    for (int i = 0; i < 4; ++i) {
        TosCurve c;
        for (int s = 0; s < 18; ++s) c.tos_ms.push_back(rng.uniform(17, 340));
        slices.push_back(c);
    }
    auto grid = surface_map(slices, cfg);

    const std::size_t k = 5;  // shift sectors by k = rotate grid by 4k cells
    std::vector<TosCurve> shifted = slices;
    for (auto& c : shifted) {
        TosCurve rot;
        rot.tos_ms.resize(18);
        for (std::size_t s = 0; s < 18; ++s) rot.tos_ms[(s + k) % 18] = c.tos_ms[s];
        c = rot;
    }
    auto grid2 = surface_map(shifted, cfg);
    const std::size_t stride = 72 / 18;
    for (std::size_t zi = 0; zi < grid.zs.size(); ++zi) {
        for (std::size_t ai = 0; ai < 72; ++ai) {
            CHECK(grid2.at(zi, (ai + k * stride) % 72) ==
                  doctest::Approx(grid.at(zi, ai)).epsilon(1e-12));
        }
    }
}

// ---------------------------------------------------------------------------
// SVG emission

TEST_CASE("svg: zero strain renders the uniform midpoint color") {
    StrainMatrix m(4, 6);
    auto svg = render_strain_svg(m, {}, nullptr);
    CHECK(svg.find(strain_color(0.0)) != std::string::npos);
    // no other fill colors than the midpoint (plus text)
    CHECK(svg.find(strain_color(0.2)) == std::string::npos);
    CHECK(svg.find(strain_color(-0.2)) == std::string::npos);
}

TEST_CASE("svg: byte-identical output for identical inputs") {
    PhantomSpec spec;
    spec.rng_seed = 51;
    auto rec = generate_phantom(spec, 1)[0];
    std::vector<std::pair<TosCurve, CurveStyle>> curves = {
        {rec.tos, {"gt", "#000000"}}};
    auto a = render_strain_svg(rec.strain, curves, nullptr, "t");
    auto b = render_strain_svg(rec.strain, curves, nullptr, "t");
    CHECK(a == b);
}

TEST_CASE("svg: TOS of 170 ms at 17 ms frames lands on the cell-10 boundary") {
    StrainMatrix m(3, 20);
    TosCurve c = curve({170.0, 170.0, 170.0});
    auto svg = render_strain_svg(m, {{c, {"gt", "#112233"}}}, nullptr);
    // cell width 12, left margin 46 -> x = 46 + 10*12 = 166
    CHECK(svg.find("166,") != std::string::npos);
}

TEST_CASE("svg: strain colormap endpoints and monotone blue-red direction") {
    CHECK(strain_color(-0.2) == "#2166AC");
    CHECK(strain_color(0.2) == "#B2182B");
    CHECK(strain_color(-0.5) == strain_color(-0.2));  // clamped
    CHECK(strain_color(0.0) == "#F7F7F7");
}

TEST_CASE("svg: more than 4 curves rejected; overlay shape mismatch rejected") {
    StrainMatrix m(3, 4);
    std::vector<std::pair<TosCurve, CurveStyle>> five(5, {curve({1, 2, 3}), {"x", "#000"}});
    CHECK_THROWS_AS(render_strain_svg(m, five, nullptr), ConfigError);
    GradCamMap map;
    map.n_sectors = 2;
    map.n_frames = 2;
    map.values.assign(4, 0.5);
    CHECK_THROWS_AS(render_strain_svg(m, {}, &map), ConfigError);
}

TEST_CASE("surface svg renders deterministically") {
    SurfaceGridConfig cfg;
    cfg.angular_resolution = 24;
    cfg.axial_resolution = 8;
    Rng rng(52);
    std::vector<TosCurve> slices;
    for (int i = 0; i < 4; ++i) {
        TosCurve c;
        for (int s = 0; s < 18; ++s) c.tos_ms.push_back(rng.uniform(17, 340));
        slices.push_back(c);
    }
    auto grid = surface_map(slices, cfg);
    CHECK(render_surface_svg(grid) == render_surface_svg(grid));
}
