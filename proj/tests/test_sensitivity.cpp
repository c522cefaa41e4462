#include "doctest.h"

#include "error.hpp"
#include "pipeline.hpp"
#include "rng.hpp"
#include "sensitivity.hpp"
#include "synth.hpp"

#include <cmath>
#include <numeric>
#include <vector>

using namespace oledmag;

namespace {

Map2D make_map(std::size_t nu, std::size_t nv, double pitch, double value, double se = 0.0) {
    Map2D m;
    m.nu = nu;
    m.nv = nv;
    m.super_pixel_size = pitch;
    m.values.assign(nu * nv, value);
    m.se.assign(nu * nv, se);
    m.valid.assign(nu * nv, 1);
    return m;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("field sensitivity") {
    const GyroConstant gyro;
    const double se_f0 = 8.158e-6 * gyro.gamma;
    CHECK(field_sensitivity(se_f0, 400.0) == doctest::Approx(163.16e-6).epsilon(1e-4));
    CHECK(field_sensitivity(0.0, 400.0) == 0.0);
    CHECK(field_sensitivity(1e5, 800.0) == doctest::Approx(std::sqrt(2.0) * field_sensitivity(1e5, 400.0)).epsilon(1e-15));
    CHECK_THROWS_AS(field_sensitivity(1e5, 0.0), UsageError);
    CHECK_THROWS_AS(field_sensitivity(1e5, -1.0), UsageError);
    CHECK_THROWS_AS(field_sensitivity(-1.0, 400.0), UsageError);
    for (double eta : {233.04e-6, 163.16e-6, 136.88e-6, 40.75e-6})
        CHECK(rel(field_sensitivity(eta / 20.0 * gyro.gamma, 400.0), eta) <= 1e-12);
}

TEST_CASE("region sensitivity") {
    auto m = make_map(4, 3, 1e-6, 2e5);
    const std::vector<std::uint8_t> all(12, 1);
    CHECK(region_sensitivity(m, all, 400.0) == doctest::Approx(field_sensitivity(2e5, 400.0)).epsilon(1e-14));

    m.values[5] = 7e5;
    std::vector<std::uint8_t> one(12, 0);
    one[5] = 1;
    CHECK(region_sensitivity(m, one, 400.0) == field_sensitivity(7e5, 400.0));

    m.valid[5] = 0;
    CHECK_THROWS_AS(region_sensitivity(m, one, 400.0), UsageError);
    CHECK_THROWS_AS(region_sensitivity(m, std::vector<std::uint8_t>(11, 1), 400.0), UsageError);
    // Mean over the valid entries only.
    CHECK(region_sensitivity(m, all, 400.0) == doctest::Approx(field_sensitivity(2e5, 400.0)).epsilon(1e-14));
}

TEST_CASE("region sensitivity improves with binning") {
    AcquisitionConfig cfg;
    cfg.width = cfg.height = 144;
    cfg.brightness.uniform = true;
    cfg.seed = 5;
    const auto stack = generate_stack(uniform_field(cfg, 762e6 / cfg.gamma), DeviceRegions::centered(cfg), cfg, 0);
    auto eta = [&](int n) {
        AnalysisOptions opt;
        opt.binning = n;
        const auto ra = resonance_map(stack, opt);
        const std::vector<std::uint8_t> all(ra.resonance.size(), 1);
        return region_sensitivity(ra.se_map(), all, cfg.total_time());
    };
    const double e3 = eta(3), e48 = eta(48);
    MESSAGE("eta(3) " << e3 * 1e6 << " uT/sqrt(Hz), eta(48) " << e48 * 1e6);
    CHECK(e48 < e3);
}

TEST_CASE("inverse law fit recovers exact data") {
    const std::vector<double> w{0.915, 1.83, 2.745, 5.49, 10.98};
    for (auto [a, b] : {std::pair{127.55, 33.77}, std::pair{98.81, 132.33}}) {
        std::vector<double> eta;
        for (double x : w) eta.push_back(a / x + b);
        const auto fit = fit_inverse_law(w, eta);
        CHECK(rel(fit.a, a) <= 1e-9);
        CHECK(rel(fit.b, b) <= 1e-9);
        CHECK(fit.dof == 3);
        CHECK(fit.residual_norm <= 1e-9);
    }
}

TEST_CASE("inverse law standard errors are calibrated") {
    // With b = 0 the fitted b falls within one standard error of zero with the
    // Student t probability for 3 degrees of freedom (0.609).
    const std::vector<double> w{1.0, 2.0, 3.0, 6.0, 12.0};
    CounterRng rng(77);
    int inside = 0;
    const int reps = 2000;
    for (int r = 0; r < reps; ++r) {
        std::vector<double> eta;
        for (double x : w) eta.push_back(100.0 / x + 2.0 * rng.normal());
        const auto fit = fit_inverse_law(w, eta);
        inside += std::abs(fit.b) <= fit.se_b;
    }
    CHECK(static_cast<double>(inside) / reps == doctest::Approx(0.609).epsilon(0.06));
}

TEST_CASE("inverse law preconditions") {
    CHECK_THROWS_AS(fit_inverse_law(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0, 2.0}), UsageError);
    CHECK_THROWS_AS(fit_inverse_law(std::vector<double>{1.0, 2.0, 2.0}, std::vector<double>{1.0, 2.0, 3.0}), UsageError);
    CHECK_THROWS_AS(fit_inverse_law(std::vector<double>{1.0, 2.0, 3.0}, std::vector<double>{1.0, 2.0}), UsageError);
    CHECK_THROWS_AS(fit_inverse_law(std::vector<double>{0.0, 2.0, 3.0}, std::vector<double>{1.0, 2.0, 3.0}), UsageError);
}

TEST_CASE("photon rate") {
    const double r = photon_rate(3e4, 0.5, 0.31e-6 * 0.31e-6, 1.0) * 1e-12;  // per um^2
    CHECK(r == doctest::Approx(6.24e5).epsilon(0.01));
    CHECK(photon_rate(3e4, 0.5, 1e-12, 2.0) == 0.5 * photon_rate(3e4, 0.5, 1e-12, 1.0));
    CHECK(photon_rate(1234.0, 1.0, 1.0, 1.0) == 1234.0);
    CHECK_THROWS_AS(photon_rate(0.0, 0.5, 1.0, 1.0), UsageError);
    CHECK_THROWS_AS(photon_rate(1.0, 0.5, 1.0, -1.0), UsageError);
}

TEST_CASE("shot-noise sensitivity") {
    const double hbar = 1.054571817e-34, mu_b = 9.2740100783e-24, g = 2.0023;
    const double pi = 3.14159265358979323846;
    const double rate = 6.24e5 / 1e-12;
    const double eta = shot_noise_sensitivity_for_area(0.0039, 6.15e6, rate, 1e-12);
    CHECK(eta == doctest::Approx(54.80e-6).epsilon(0.005));
    const double oracle = 8.0 * pi / (3.0 * std::sqrt(3.0)) * hbar / (g * mu_b) * 6.15e6 / (0.0039 * std::sqrt(rate)) / 1e-6;
    CHECK(eta == doctest::Approx(oracle).epsilon(1e-13));

    const double base = shot_noise_sensitivity(0.0039, 6.15e6, rate);
    CHECK(shot_noise_sensitivity(2 * 0.0039, 6.15e6, rate) == base / 2);
    CHECK(shot_noise_sensitivity(4 * 0.0039, 6.15e6, rate) == base / 4);
    CHECK(shot_noise_sensitivity(3 * 0.0039, 6.15e6, rate) == doctest::Approx(base / 3).epsilon(1e-15));
    CHECK(shot_noise_sensitivity(0.0039, 6.15e6, 4 * rate) == base / 2);
    CHECK_THROWS_AS(shot_noise_sensitivity(0.0, 6.15e6, rate), UsageError);
    CHECK_THROWS_AS(shot_noise_sensitivity_for_area(0.0039, 6.15e6, rate, 0.0), UsageError);
}

TEST_CASE("gradient between two super-pixels") {
    auto m = make_map(2, 1, 151.0e-6, 25e-3, 1e-6);
    m.values[1] = 25e-3 + 555.7e-6;
    const auto g = gradient_estimate(m, 0, 0, 1, 0);
    CHECK(g.gradient * 1e6 * 1e-6 == doctest::Approx(3.68).epsilon(1e-3));
    CHECK(g.dx == 151.0e-6);
    CHECK(g.delta_b == doctest::Approx(555.7e-6).epsilon(1e-9));
    CHECK(g.se_delta_b == doctest::Approx(std::sqrt(2.0) * 1e-6));
    const auto back = gradient_estimate(m, 1, 0, 0, 0);
    CHECK(back.gradient == -g.gradient);

    const auto flat = make_map(5, 5, 1e-6, 0.027);
    CHECK(gradient_estimate(flat, 2, 2, 3, 2).gradient == 0.0);
    CHECK(gradient_estimate(flat, 0, 0, 3, 4).dx == doctest::Approx(5e-6));

    CHECK_THROWS_AS(gradient_estimate(flat, 1, 1, 1, 1), UsageError);
    CHECK_THROWS_AS(gradient_estimate(flat, 0, 0, 5, 0), UsageError);
    auto holes = flat;
    holes.valid[1] = 0;
    CHECK_THROWS_AS(gradient_estimate(holes, 1, 0, 3, 0), UsageError);
}

TEST_CASE("gradient differences are additive along a line") {
    auto m = make_map(3, 1, 1e-6, 0.0);
    m.values = {0.5, 0.75, 1.25};
    const auto g12 = gradient_estimate(m, 0, 0, 1, 0), g23 = gradient_estimate(m, 1, 0, 2, 0),
               g13 = gradient_estimate(m, 0, 0, 2, 0);
    CHECK(g13.delta_b == g12.delta_b + g23.delta_b);
    CounterRng rng(4);
    for (int r = 0; r < 100; ++r) {
        m.values = {0.02 + 1e-3 * rng.uniform(), 0.02 + 1e-3 * rng.uniform(), 0.02 + 1e-3 * rng.uniform()};
        const double sum = gradient_estimate(m, 0, 0, 1, 0).delta_b + gradient_estimate(m, 1, 0, 2, 0).delta_b;
        CHECK(gradient_estimate(m, 0, 0, 2, 0).delta_b == doctest::Approx(sum).epsilon(1e-12));
    }
}

TEST_CASE("column difference") {
    auto m = make_map(4, 3, 2e-6, 0.0, 0.5);
    // Column 0: 1, 2, 3 (scatter matches se = 1 would give chi^2 = 2 * ... ), column 3: 10, 10, 10.
    m.values[m.index(0, 0)] = 1.0;
    m.values[m.index(0, 1)] = 2.0;
    m.values[m.index(0, 2)] = 3.0;
    for (std::size_t j = 0; j < 3; ++j) m.values[m.index(3, j)] = 10.0;
    const auto g = column_difference(m, 0, 3);
    CHECK(g.delta_b == doctest::Approx(8.0));
    CHECK(g.dx == doctest::Approx(6e-6));
    CHECK(g.gradient == doctest::Approx(8.0 / 6e-6));
    // Column 0: se of the mean sqrt(3 * 0.25) / 3, Birge ratio sqrt(chi^2 / 2)
    // with chi^2 = (1 + 0 + 1) / 0.25 = 8. Column 3 has no scatter, ratio 1.
    const double se0 = std::sqrt(0.75) / 3.0 * 2.0;
    const double se3 = std::sqrt(0.75) / 3.0;
    CHECK(g.se_delta_b == doctest::Approx(std::hypot(se0, se3)).epsilon(1e-12));
    CHECK(column_difference(m, 3, 0).gradient == doctest::Approx(-g.gradient));

    m.valid[m.index(1, 0)] = 0;
    m.valid[m.index(1, 1)] = 0;
    CHECK_THROWS_AS(column_difference(m, 1, 3), DataError);
    CHECK_THROWS_AS(column_difference(m, 2, 2), UsageError);
    CHECK_THROWS_AS(column_difference(m, 0, 4), UsageError);
}

TEST_CASE("minimum detectable gradient") {
    for (double w : {0.3e-6, 1e-6, 7e-6}) {
        for (double db : {1e-7, 1e-6, 5e-5}) {
            CHECK(rel(min_detectable_gradient(db, w, w), std::sqrt(6.0) * db / w) <= 1e-12);
            CHECK(min_detectable_gradient(2 * db, w, 3 * w) == doctest::Approx(2 * min_detectable_gradient(db, w, 3 * w)).epsilon(1e-15));
            const double far = 15.0 * w;
            CHECK(rel(min_detectable_gradient(db, w, far), std::sqrt(2.0) * db / far) <= 0.01);
        }
    }
    CHECK_THROWS_AS(min_detectable_gradient(1e-6, 2e-6, 1e-6), DomainError);
    CHECK_THROWS_AS(min_detectable_gradient(0.0, 1e-6, 1e-6), UsageError);
}

TEST_CASE("gradient sensitivity") {
    const GradientQuery a{1e-6, 1e-6, 1e-6, 400.0};
    const GradientQuery b{1e-6, 2e-6, 1e-6, 400.0};
    CHECK(gradient_sensitivity(a) / gradient_sensitivity(b) == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-12));
    CHECK(gradient_sensitivity(a) == doctest::Approx(min_detectable_gradient(1e-6, 1e-6, 1e-6) * 20.0).epsilon(1e-14));
    GradientQuery t4 = a;
    t4.t_total = 1600.0;
    CHECK(gradient_sensitivity(t4) == doctest::Approx(2.0 * gradient_sensitivity(a)).epsilon(1e-14));
    double prev = gradient_sensitivity(a);
    for (int k = 1; k <= 100; ++k) {
        GradientQuery q = a;
        q.dx = a.w * (1.0 + 0.1 * k);
        const double v = gradient_sensitivity(q);
        CHECK(v < prev);
        prev = v;
    }
    GradientQuery bad = a;
    bad.t_total = 0.0;
    CHECK_THROWS_AS(gradient_sensitivity(bad), UsageError);
}

TEST_CASE("gradient curve family") {
    const std::vector<double> w{0.915e-6, 2.745e-6, 9.15e-6};
    const std::vector<double> db{40e-6, 10e-6, 3e-6};
    const auto pts = gradient_curves(w, db, 200e-6, 25, 400.0);
    REQUIRE(pts.size() == 75);
    for (std::size_t c = 0; c < 3; ++c) {
        CHECK(pts[c * 25].dx == w[c]);
        CHECK(pts[c * 25 + 24].dx == doctest::Approx(200e-6));
        for (std::size_t k = 1; k < 25; ++k) {
            CHECK(pts[c * 25 + k].w == w[c]);
            CHECK(pts[c * 25 + k].eta_g < pts[c * 25 + k - 1].eta_g);
            CHECK(pts[c * 25 + k].dx > pts[c * 25 + k - 1].dx);
        }
    }
    CHECK_THROWS_AS(gradient_curves(w, std::vector<double>{1.0}, 200e-6, 25, 400.0), UsageError);
    CHECK_THROWS_AS(gradient_curves(w, db, 5e-6, 25, 400.0), UsageError);
    CHECK_THROWS_AS(gradient_curves(w, db, 200e-6, 1, 400.0), UsageError);
}

TEST_CASE("minimum detectable gradient agrees with Monte Carlo error propagation") {
    // Two point sensors read B(x) = G x with field noise sigma = dB and a
    // position error of sigma = w each; the gradient sits at its own noise
    // floor sqrt(2) dB / dx.
    CounterRng rng(123);
    const double db = 1e-6;
    for (auto [w_um, dx_um] : {std::pair{1.0, 1.0}, std::pair{1.0, 4.0}, std::pair{4.0, 16.0}}) {
        const double w = w_um * 1e-6, dx = dx_um * 1e-6;
        const double g0 = std::sqrt(2.0) * db / dx;
        const int reps = 40000;
        double sum = 0.0, sq = 0.0;
        for (int r = 0; r < reps; ++r) {
            const double x1 = w * rng.normal(), x2 = dx + w * rng.normal();
            const double b1 = g0 * x1 + db * rng.normal();
            const double b2 = g0 * x2 + db * rng.normal();
            const double g = (b2 - b1) / dx;
            sum += g;
            sq += g * g;
        }
        const double mean = sum / reps;
        const double sd = std::sqrt(sq / reps - mean * mean);
        const double formula = min_detectable_gradient(db, w, dx);
        MESSAGE("w " << w_um << " dx " << dx_um << ": MC " << sd << " formula " << formula);
        CHECK(sd == doctest::Approx(formula).epsilon(0.35));
    }
}
