#include "doctest.h"

#include "error.hpp"
#include "scenario.hpp"

#include <cmath>
#include <string>

using namespace oledmag;

namespace {

std::string error_of(const std::string& text) {
    try {
        parse_scenario(text);
    } catch (const DataError& e) {
        return e.what();
    }
    return "";
}

void check_vec(const Vec3& a, const Vec3& b) {
    for (int k = 0; k < 3; ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-12).scale(1e-6));
}

}  // namespace

TEST_CASE("empty scenario is the default scenario") {
    const Scenario s = parse_scenario("{}");
    const Scenario d = default_scenario();
    CHECK(s.acquisition.width == d.acquisition.width);
    CHECK(s.acquisition.freqs == d.acquisition.freqs);
    CHECK(s.gyro.gamma == d.gyro.gamma);
    CHECK_FALSE(s.regions.has_value());
    CHECK(s.magnets.magnets.size() == 1);
}

TEST_CASE("bundled defaults file matches built-in defaults") {
    const Scenario f = load_scenario(std::string(OLEDMAG_SOURCE_DIR) + "/scenarios/paper-defaults.json");
    const Scenario d = default_scenario();

    CHECK(f.gyro.gamma == d.gyro.gamma);
    const auto& a = f.acquisition;
    const auto& b = d.acquisition;
    CHECK(a.width == b.width);
    CHECK(a.height == b.height);
    CHECK(a.pitch == b.pitch);
    REQUIRE(a.freqs.size() == b.freqs.size());
    for (std::size_t k = 0; k < a.freqs.size(); ++k) CHECK(a.freqs[k] == doctest::Approx(b.freqs[k]).epsilon(1e-14));
    CHECK(a.exposure == b.exposure);
    CHECK(a.sequences == b.sequences);
    CHECK(a.well_depth == b.well_depth);
    CHECK(a.quantum_efficiency == b.quantum_efficiency);
    CHECK(a.contrast_oled == b.contrast_oled);
    CHECK(a.contrast_diffusion == b.contrast_diffusion);
    CHECK(a.sigma1 == b.sigma1);
    CHECK(a.sigma2 == b.sigma2);
    CHECK(a.wobble.amplitude == b.wobble.amplitude);
    CHECK(a.wobble.period == b.wobble.period);
    CHECK(a.wobble.phase == b.wobble.phase);
    CHECK(a.noise_scale == b.noise_scale);
    CHECK(a.el_fluctuation == b.el_fluctuation);
    CHECK(a.brightness.plateau == b.brightness.plateau);
    CHECK(a.brightness.fade == b.brightness.fade);
    CHECK(a.brightness.far == b.brightness.far);
    CHECK(a.brightness.uniform == b.brightness.uniform);
    CHECK(a.outlier_fraction == b.outlier_fraction);
    CHECK(a.seed == b.seed);
    CHECK(a.gamma == b.gamma);

    REQUIRE(f.regions.has_value());
    const DeviceRegions rf = *f.regions;
    const DeviceRegions rd = d.device_regions();
    CHECK(rf.r1 == rd.r1);
    CHECK(rf.r_oled == rd.r_oled);
    CHECK(rf.r2 == rd.r2);
    CHECK(rf.r3 == rd.r3);
    CHECK(rf.center.x() == doctest::Approx(rd.center.x()).epsilon(1e-14));
    CHECK(rf.center.y() == doctest::Approx(rd.center.y()).epsilon(1e-14));

    CHECK(f.field.kind == d.field.kind);
    CHECK(f.field.center_t == doctest::Approx(d.field.center_t).epsilon(1e-15));
    CHECK(f.field.gradient_t_per_m == doctest::Approx(d.field.gradient_t_per_m).epsilon(1e-15));

    CHECK(f.analysis.binning == d.analysis.binning);
    CHECK(f.analysis.mode == d.analysis.mode);
    CHECK(f.analysis.min_peak_significance == d.analysis.min_peak_significance);
    CHECK(f.analysis.gate_low_hz == d.analysis.gate_low_hz);
    CHECK(f.analysis.gate_high_hz == d.analysis.gate_high_hz);
    CHECK(f.analysis.k_max == d.analysis.k_max);
    CHECK(f.analysis.t_total_s == d.analysis.t_total_s);
    CHECK(f.analysis.max_nonconverged_fraction == d.analysis.max_nonconverged_fraction);

    REQUIRE(f.magnets.magnets.size() == d.magnets.magnets.size());
    for (std::size_t k = 0; k < f.magnets.magnets.size(); ++k) {
        const auto& mf = f.magnets.magnets[k];
        const auto& md = d.magnets.magnets[k];
        CHECK(mf.diameter == md.diameter);
        CHECK(mf.length == md.length);
        CHECK(mf.remanence_br == md.remanence_br);
        check_vec(mf.center, md.center);
        check_vec(mf.axis, md.axis);
    }
    const auto& pf = f.magnets.plane;
    const auto& pd = d.magnets.plane;
    check_vec(pf.origin, pd.origin);
    check_vec(pf.u_axis, pd.u_axis);
    check_vec(pf.v_axis, pd.v_axis);
    CHECK(pf.pitch == pd.pitch);
    CHECK(pf.nu == pd.nu);
    CHECK(pf.nv == pd.nv);
    CHECK(f.magnets.quadrature_order == d.magnets.quadrature_order);

    const auto& sf = f.scan;
    const auto& sd = d.scan;
    CHECK(sf.direction == sd.direction);
    CHECK(sf.distance_m == sd.distance_m);
    CHECK(sf.x0_m == sd.x0_m);
    CHECK(sf.positions() == sd.positions());
    CHECK(sf.x0_grid() == sd.x0_grid());
    CHECK(sf.options.half_span == sd.options.half_span);
    CHECK(sf.options.points == sd.options.points);
    CHECK(sf.options.window_shift == sd.options.window_shift);
    CHECK(sf.sweep.amplitude == sd.sweep.amplitude);
    CHECK(sf.sweep.sigma1 == sd.sweep.sigma1);
    CHECK(sf.sweep.sigma2 == sd.sweep.sigma2);
    CHECK(sf.sweep.lockin_phase == sd.sweep.lockin_phase);
    CHECK(sf.sweep.wobble_amplitude == sd.sweep.wobble_amplitude);
    CHECK(sf.sweep.wobble_period == sd.sweep.wobble_period);
    CHECK(sf.sweep.wobble_phase == sd.sweep.wobble_phase);
    CHECK(sf.sweep.noise_sigma == sd.sweep.noise_sigma);
    CHECK(sf.sweep.angular.floor_fraction == sd.sweep.angular.floor_fraction);
    CHECK(sf.sweep.phi == sd.sweep.phi);
    CHECK(sf.sweep.gamma == sd.sweep.gamma);
    CHECK(sf.sweep.seed == sd.sweep.seed);
}

TEST_CASE("defaults describe the reference device") {
    const Scenario d = default_scenario();
    CHECK(d.acquisition.freqs.size() == 45);
    CHECK(d.acquisition.freqs.front() == 650e6);
    CHECK(d.acquisition.freqs.back() == doctest::Approx(870e6));
    CHECK(d.gyro.gamma * d.field.center_t == doctest::Approx(762.5e6));
    CHECK(d.analysis.gate_low_hz == 754e6);
    CHECK(d.analysis.gate_high_hz == 771e6);
    CHECK(d.scan.positions().size() == 29);
    CHECK(d.scan.x0_grid().size() == 21);
}

TEST_CASE("unknown keys are rejected with their path") {
    CHECK(error_of(R"({"acquisiton": {}})").find("acquisiton") != std::string::npos);
    const std::string nested = error_of(R"({"acquisition": {"wobble": {"amplitud": 0.1}}})");
    CHECK(nested.find("amplitud") != std::string::npos);
    CHECK(nested.find("wobble") != std::string::npos);
    CHECK_FALSE(error_of(R"({"scan": {"sweep": {"gain": 2}}})").empty());
}

TEST_CASE("wrongly typed values are rejected") {
    CHECK_FALSE(error_of(R"({"acquisition": {"width": "500"}})").empty());
    CHECK_FALSE(error_of(R"({"acquisition": {"width": 2.5}})").empty());
    CHECK_FALSE(error_of(R"({"acquisition": {"width": -3}})").empty());
    CHECK_FALSE(error_of(R"({"acquisition": {"exposure_s": true}})").empty());
    CHECK_FALSE(error_of(R"({"acquisition": {"brightness": {"uniform": 1}}})").empty());
    CHECK_FALSE(error_of(R"({"magnets": {"plane": {"origin_m": [0, 0]}}})").empty());
    CHECK_FALSE(error_of(R"({"analysis": {"gate_hz": [771e6, 754e6]}})").empty());
    CHECK_FALSE(error_of(R"({"field": {"kind": "dipole"}})").empty());
    CHECK_FALSE(error_of(R"([1, 2])").empty());
    CHECK(error_of("{").find("JSON") != std::string::npos);
}

TEST_CASE("invalid physics in a scenario is a data error") {
    CHECK_FALSE(error_of(R"({"acquisition": {"contrast_oled": 1.5}})").empty());
    CHECK_FALSE(error_of(R"({"regions": {"r1_m": 60e-6}})").empty());
    CHECK_FALSE(error_of(R"({"gyro": {"gamma_hz_per_t": -1}})").empty());
    CHECK_FALSE(error_of(R"({"magnets": {"quadrature_order": 0}})").empty());
    CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), IoError);
}

TEST_CASE("frequency lists and magnet stacks") {
    const Scenario s = parse_scenario(R"({
        "gyro": {"gamma_hz_per_t": 28e9},
        "acquisition": {"freqs": [700e6, 710e6, 730e6]},
        "magnets": {"list": [{"preset": "cylinder1_n48", "center_m": [0, 0, 0], "axis": [0, 0, 1], "count": 3}]}
    })");
    CHECK(s.acquisition.freqs == std::vector<double>{700e6, 710e6, 730e6});
    CHECK(s.acquisition.gamma == 28e9);
    CHECK(s.scan.sweep.gamma == 28e9);
    REQUIRE(s.magnets.magnets.size() == 3);
    const double len = s.magnets.magnets[0].length;
    CHECK(std::abs(s.magnets.magnets[1].center.z() - s.magnets.magnets[0].center.z()) == doctest::Approx(len));
    CHECK(std::abs(s.magnets.magnets[2].center.z() - s.magnets.magnets[1].center.z()) == doctest::Approx(len));
}

TEST_CASE("ground truth field kinds") {
    const Scenario small = parse_scenario(R"({
        "acquisition": {"width": 8, "height": 4},
        "field": {"kind": "uniform", "center_t": 0.025}
    })");
    const FieldGrid u = small.ground_truth_field(1);
    CHECK(u.nu == 8);
    CHECK(u.nv == 4);
    for (double v : u.values) CHECK(v == 0.025);

    const Scenario grad = parse_scenario(R"({
        "acquisition": {"width": 8, "height": 4},
        "field": {"kind": "gradient", "center_t": 0.025, "gradient_t_per_m": 100.0}
    })");
    const FieldGrid g = grad.ground_truth_field(1);
    const double pitch = grad.acquisition.pitch;
    CHECK(g.at(5, 2) - g.at(4, 2) == doctest::Approx(100.0 * pitch));
    CHECK(g.at(3, 0) == g.at(3, 3));
    CHECK(0.5 * (g.at(3, 1) + g.at(4, 1)) == doctest::Approx(0.025).epsilon(1e-14));

    const Scenario mag = parse_scenario(R"({
        "acquisition": {"width": 6, "height": 5},
        "field": {"kind": "magnets"}
    })");
    const FieldGrid m = mag.ground_truth_field(2);
    CHECK(m.nu == 6);
    CHECK(m.nv == 5);
    CHECK(m.pitch == mag.acquisition.pitch);
    FieldGrid probe = mag.magnets.plane;
    probe.pitch = mag.acquisition.pitch;
    probe.nu = 6;
    probe.nv = 5;
    const FieldGrid direct = field_map(mag.magnets.magnets, probe, mag.magnets.quadrature_order, 1);
    CHECK(m.values == direct.values);
    for (double v : m.values) CHECK(v > 0.0);
}
