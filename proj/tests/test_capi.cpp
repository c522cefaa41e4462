#include "doctest.h"

#include <oledmag/oledmag.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("oledmag_capi_" + std::to_string(::getpid()) + "_" + name))
        .string();
}

const char* kSmallScenario = R"({
    "acquisition": {
        "width": 30, "height": 30, "noise_scale": 0.0,
        "wobble": {"amplitude": 0.0},
        "brightness": {"uniform": true}
    },
    "field": {"kind": "gradient", "center_t": 0.0272, "gradient_t_per_m": 20.0}
})";

}  // namespace

TEST_CASE("version and status names") {
    CHECK(std::string(omg_version()).size() > 0);
    std::set<std::string> names;
    for (int s = OMG_OK; s <= OMG_ERR_INTERNAL; ++s) names.insert(omg_status_name(static_cast<omg_status>(s)));
    CHECK(names.size() == 7);
    CHECK(omg_resolve_threads(3) == 3);
    CHECK(omg_resolve_threads(0) >= 1);
}

TEST_CASE("failures set a status and a thread-local message") {
    double out = -7.0;
    CHECK(omg_min_detectable_gradient(1e-6, 1e-6, 1e-6, nullptr) == OMG_ERR_USAGE);
    CHECK(std::string(omg_last_error()).size() > 0);
    const omg_status s = omg_min_detectable_gradient(1e-6, 2e-6, 1e-6, &out);
    CHECK(s != OMG_OK);
    CHECK(out == -7.0);
    const std::string msg = omg_last_error();
    CHECK(msg.size() > 0);

    std::string other_thread;
    std::thread([&] { other_thread = omg_last_error(); }).join();
    CHECK(other_thread.empty());
    CHECK(omg_last_error() == msg);

    CHECK(omg_min_detectable_gradient(1e-6, 1e-6, 1e-6, &out) == OMG_OK);
    CHECK(std::string(omg_last_error()).empty());
}

TEST_CASE("gradient formulas") {
    double g = 0.0;
    REQUIRE(omg_min_detectable_gradient(1e-6, 1e-6, 1e-6, &g) == OMG_OK);
    CHECK(g == doctest::Approx(std::sqrt(6.0)).epsilon(1e-15));
    REQUIRE(omg_min_detectable_gradient(1e-6, 1e-6, 4e-6, &g) == OMG_OK);
    CHECK(g == doctest::Approx(std::sqrt(2.0) * 0.25 * std::sqrt(1.0 + 2.0 / 16.0)).epsilon(1e-14));

    const double widths[] = {1e-6, 2e-6};
    const double dbs[] = {1e-6, 0.5e-6};
    std::vector<omg_curve_point> pts(2 * 5);
    REQUIRE(omg_gradient_curves(widths, dbs, 2, 1e-4, 5, 1.0, pts.data()) == OMG_OK);
    CHECK(pts[0].dx_m == doctest::Approx(1e-6));
    CHECK(pts[4].dx_m == doctest::Approx(1e-4));
    CHECK(pts[5].w_m == 2e-6);
    for (int k = 1; k < 5; ++k) CHECK(pts[k].eta_g < pts[k - 1].eta_g);
}

TEST_CASE("similarity and offset search") {
    const double p[] = {1.0, 2.0, 4.0};
    double s = 0.0;
    REQUIRE(omg_similarity(p, p, 3, &s) == OMG_OK);
    CHECK(s == doctest::Approx(1.0));
    CHECK(omg_similarity(p, nullptr, 3, &s) == OMG_ERR_USAGE);

    omg_scenario* sc = nullptr;
    REQUIRE(omg_scenario_default(&sc) == OMG_OK);
    omg_scan* scan = nullptr;
    REQUIRE(omg_scan_run(sc, 2, &scan) == OMG_OK);
    omg_scan_info info{};
    REQUIRE(omg_scan_get_info(scan, &info) == OMG_OK);
    CHECK(info.points == 29);
    CHECK(info.true_x0_m == doctest::Approx(0.2e-3));
    CHECK(info.similarity > 0.99);
    std::vector<double> model(info.points);
    for (std::size_t k = 0; k < info.points; ++k) {
        omg_scan_point pt{};
        REQUIRE(omg_scan_get_point(scan, k, &pt) == OMG_OK);
        model[k] = pt.model_t;
    }
    omg_scan_point pt{};
    CHECK(omg_scan_get_point(scan, info.points, &pt) == OMG_ERR_USAGE);
    double x0 = -1.0, sim = -1.0;
    REQUIRE(omg_fit_offset(sc, model.data(), model.size(), &x0, &sim) == OMG_OK);
    CHECK(x0 == doctest::Approx(0.2e-3).epsilon(1e-9));
    CHECK(sim == doctest::Approx(1.0));
    CHECK(omg_fit_offset(sc, model.data(), model.size() - 1, &x0, &sim) != OMG_OK);
    omg_scan_free(scan);
    omg_scenario_free(sc);
}

TEST_CASE("scenarios") {
    omg_scenario* sc = nullptr;
    CHECK(omg_scenario_parse(R"({"acquisition": {"widht": 3}})", &sc) == OMG_ERR_DATA);
    CHECK(sc == nullptr);
    CHECK(std::string(omg_last_error()).find("widht") != std::string::npos);
    CHECK(omg_scenario_load("/nonexistent.json", &sc) == OMG_ERR_IO);

    REQUIRE(omg_scenario_default(&sc) == OMG_OK);
    omg_scenario_info info{};
    REQUIRE(omg_scenario_get_info(sc, &info) == OMG_OK);
    CHECK(info.gamma_hz_per_t == 28.03e9);
    CHECK(info.width == 500);
    CHECK(info.height == 500);
    CHECK(info.n_freq == 45);
    CHECK(info.binning == 3);
    CHECK(info.gate_low_hz == 754e6);
    CHECK(info.gate_high_hz == 771e6);
    REQUIRE(omg_scenario_set_seed(sc, 99) == OMG_OK);
    REQUIRE(omg_scenario_set_scan_x0(sc, 0.3e-3) == OMG_OK);
    REQUIRE(omg_scenario_get_info(sc, &info) == OMG_OK);
    CHECK(info.seed == 99);
    CHECK(info.scan_x0_m == 0.3e-3);
    omg_scenario_free(sc);
    omg_scenario_free(nullptr);
}

TEST_CASE("maps") {
    omg_map* m = nullptr;
    CHECK(omg_map_create(0, 3, 1e-6, &m) != OMG_OK);
    REQUIRE(omg_map_create(4, 3, 1e-6, &m) == OMG_OK);
    omg_map_info info{};
    REQUIRE(omg_map_get_info(m, &info) == OMG_OK);
    CHECK(info.nu == 4);
    CHECK(info.nv == 3);
    for (size_t i = 0; i < 4; ++i)
        for (size_t j = 0; j < 3; ++j) REQUIRE(omg_map_set(m, i, j, 0.02 + 1e-4 * i, 1e-6, 1) == OMG_OK);
    CHECK(omg_map_set(m, 4, 0, 1.0, 0.0, 1) == OMG_ERR_USAGE);
    double v = -1.0, se = -1.0;
    int valid = -1;
    CHECK(omg_map_get(m, 0, 3, &v, &se, &valid) == OMG_ERR_USAGE);
    CHECK(v == -1.0);
    REQUIRE(omg_map_get(m, 2, 1, &v, &se, &valid) == OMG_OK);
    CHECK(v == 0.02 + 2e-4);
    CHECK(se == 1e-6);
    CHECK(valid == 1);

    omg_gradient_estimate g{};
    REQUIRE(omg_gradient_between(m, 0, 0, 3, 0, &g) == OMG_OK);
    CHECK(g.dx_m == doctest::Approx(3e-6));
    CHECK(g.gradient_t_per_m == doctest::Approx(100.0));
    CHECK(g.se_delta_b_t == doctest::Approx(std::sqrt(2.0) * 1e-6));
    REQUIRE(omg_column_difference(m, 0, 3, &g) == OMG_OK);
    CHECK(g.gradient_t_per_m == doctest::Approx(100.0));
    CHECK(g.se_delta_b_t == doctest::Approx(std::sqrt(2.0 / 3.0) * 1e-6));

    const std::string path = temp_path("map.csv");
    REQUIRE(omg_map_write_csv(m, path.c_str()) == OMG_OK);
    omg_map* back = nullptr;
    REQUIRE(omg_map_read_csv(path.c_str(), &back) == OMG_OK);
    REQUIRE(omg_map_get(back, 2, 1, &v, &se, &valid) == OMG_OK);
    CHECK(v == 0.02 + 2e-4);
    std::remove(path.c_str());
    CHECK(omg_map_read_csv(path.c_str(), &back) == OMG_ERR_IO);
    omg_map_free(back);
    omg_map_free(m);
}

TEST_CASE("synthesize, store and analyze a small stack") {
    omg_scenario* sc = nullptr;
    REQUIRE(omg_scenario_parse(kSmallScenario, &sc) == OMG_OK);
    omg_stack* st = nullptr;
    REQUIRE(omg_stack_synthesize(sc, nullptr, 2, &st) == OMG_OK);
    omg_stack_info si{};
    REQUIRE(omg_stack_get_info(st, &si) == OMG_OK);
    CHECK(si.width == 30);
    CHECK(si.n_freq == 45);
    CHECK(si.freq_min_hz == 650e6);

    const std::string path = temp_path("small.stk");
    REQUIRE(omg_stack_write(st, path.c_str()) == OMG_OK);
    omg_stack* back = nullptr;
    REQUIRE(omg_stack_read(path.c_str(), &back) == OMG_OK);
    std::remove(path.c_str());

    omg_analysis* an = nullptr;
    REQUIRE(omg_analysis_run(back, sc, 0, 2, &an) == OMG_OK);
    omg_analysis_stats stats{};
    REQUIRE(omg_analysis_get_stats(an, &stats) == OMG_OK);
    CHECK(stats.nu == 10);
    CHECK(stats.nv == 10);
    CHECK(stats.converged == stats.fits);
    omg_map* field = nullptr;
    REQUIRE(omg_analysis_get_map(an, OMG_MAP_FIELD, &field) == OMG_OK);
    omg_gradient_estimate g{};
    REQUIRE(omg_column_difference(field, 0, 9, &g) == OMG_OK);
    CHECK(g.gradient_t_per_m == doctest::Approx(20.0).epsilon(1e-3));

    omg_map* res = nullptr;
    REQUIRE(omg_analysis_get_map(an, OMG_MAP_RESONANCE, &res) == OMG_OK);
    double b00 = 0.0, f00 = 0.0;
    REQUIRE(omg_map_get(field, 0, 0, &b00, nullptr, nullptr) == OMG_OK);
    REQUIRE(omg_map_get(res, 0, 0, &f00, nullptr, nullptr) == OMG_OK);
    CHECK(f00 / b00 == doctest::Approx(28.03e9).epsilon(1e-12));
    CHECK(omg_analysis_get_map(an, static_cast<omg_map_kind>(42), &res) == OMG_ERR_USAGE);

    omg_map_free(res);
    omg_map_free(field);
    omg_analysis_free(an);
    omg_stack_free(back);
    omg_stack_free(st);
    omg_scenario_free(sc);
}

TEST_CASE("sensitivity helpers") {
    double eta = 0.0;
    REQUIRE(omg_field_sensitivity(28.03e3, 1.0, 28.03e9, &eta) == OMG_OK);
    CHECK(eta == doctest::Approx(1e-6));
    CHECK(omg_field_sensitivity(1.0, -1.0, 28.03e9, &eta) != OMG_OK);

    const double sizes[] = {1e-6, 2e-6, 4e-6, 8e-6};
    double etas[4];
    for (int k = 0; k < 4; ++k) etas[k] = 3e-12 / sizes[k] + 2e-7;
    omg_inverse_law law{};
    REQUIRE(omg_fit_inverse_law(sizes, etas, 4, &law) == OMG_OK);
    CHECK(law.a == doctest::Approx(3e-12));
    CHECK(law.b == doctest::Approx(2e-7));
    CHECK(law.dof == 2);

    double rate = 0.0;
    REQUIRE(omg_photon_rate(3e4, 0.5, 1e-12, 1.0, &rate) == OMG_OK);
    CHECK(rate == doctest::Approx(6e16));
    double shot = 0.0;
    REQUIRE(omg_shot_noise_sensitivity(0.0039, 6.15e6, rate, 1e-12, &shot) == OMG_OK);
    CHECK(shot > 0.0);
}

TEST_CASE("numeric tables") {
    const std::string path = temp_path("table.csv");
    const char* cols[] = {"a", "b"};
    const double data[] = {1.0, 0.1, 2.0, 1.0 / 3.0};
    REQUIRE(omg_csv_write(path.c_str(), cols, 2, data, 2) == OMG_OK);
    omg_table* t = nullptr;
    REQUIRE(omg_table_read(path.c_str(), &t) == OMG_OK);
    std::remove(path.c_str());
    CHECK(omg_table_columns(t) == 2);
    CHECK(omg_table_rows(t) == 2);
    CHECK(std::string(omg_table_column_name(t, 1)) == "b");
    CHECK(omg_table_column_name(t, 2) == nullptr);
    size_t col = 99;
    REQUIRE(omg_table_find(t, "b", &col) == OMG_OK);
    CHECK(col == 1);
    CHECK(omg_table_find(t, "c", &col) != OMG_OK);
    double out[2];
    REQUIRE(omg_table_column(t, col, out) == OMG_OK);
    CHECK(out[0] == 0.1);
    CHECK(out[1] == 1.0 / 3.0);
    omg_table_free(t);
}

TEST_CASE("selftest registry") {
    CHECK(omg_selftest_count() >= 1);
    const int bogus = 12345;
    int failed = -1;
    CHECK(omg_selftest_run(&bogus, 1, 1, nullptr, nullptr, &failed) != OMG_OK);
}
