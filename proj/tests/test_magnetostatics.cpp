#include "doctest.h"

#include "error.hpp"
#include "magnetostatics.hpp"
#include "quadrature.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

using namespace oledmag;

namespace {

// Axial point at distance z beyond the north face.
Vec3 axial_point(const CylindricalMagnet& m, double z) { return m.center + (0.5 * m.length + z) * m.axis; }

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("gauss-legendre rules integrate polynomials exactly") {
    for (int order : {1, 2, 5, 16, 64}) {
        const auto& r = gauss_legendre(order);
        REQUIRE(r.nodes.size() == static_cast<std::size_t>(order));
        CHECK(std::accumulate(r.weights.begin(), r.weights.end(), 0.0) == doctest::Approx(2.0).epsilon(1e-14));
        for (int deg = 0; deg < 2 * order; ++deg) {
            double s = 0.0;
            for (int k = 0; k < order; ++k) s += r.weights[k] * std::pow(r.nodes[k], deg);
            const double exact = deg % 2 ? 0.0 : 2.0 / (deg + 1);
            CHECK(s == doctest::Approx(exact).epsilon(1e-13).scale(1.0));
        }
    }
    CHECK(&gauss_legendre(32) == &gauss_legendre(32));
}

TEST_CASE("on-axis field formula") {
    const auto m = cylinder2_n45();
    CHECK(on_axis_field(m, 0.0) == doctest::Approx(0.6548461875980991).epsilon(1e-12));
    CHECK(std::abs(on_axis_field(m, 100.0)) < 1e-9);
    auto m2 = m;
    m2.remanence_br *= 2.0;
    CHECK(on_axis_field(m2, m.length / 100) == 2.0 * on_axis_field(m, m.length / 100));
    CHECK_THROWS_AS(on_axis_field(m, -0.5 * m.length), DomainError);
    CHECK_NOTHROW(on_axis_field(m, -m.length - 1e-3));
}

TEST_CASE("magnet validation") {
    auto m = cylinder1_n48();
    CHECK_NOTHROW(m.validate());
    m.axis = Vec3(1.0, 1.0, 0.0);
    CHECK_THROWS_AS(m.validate(), DomainError);
    m = cylinder1_n48();
    m.diameter = 0.0;
    CHECK_THROWS_AS(m.validate(), DomainError);
}

TEST_CASE("quadrature field matches the on-axis oracle") {
    for (const auto& m : {cylinder1_n48(), cylinder2_n45()}) {
        for (double k : {0.1, 0.5, 1.0, 2.0, 5.0}) {
            const double z = k * m.diameter;
            const Vec3 b = field_at(m, axial_point(m, z));
            CHECK(rel(b.dot(m.axis), on_axis_field(m, z)) <= 1e-3);
            CHECK(b.cross(m.axis).norm() <= 1e-9 * b.norm());
        }
    }
}

TEST_CASE("field is axisymmetric") {
    const auto m = cylinder2_n45();
    const Vec3 e1 = Vec3::UnitX(), e2 = Vec3::UnitY();
    for (double r : {2e-3, 8e-3, 20e-3}) {
        const Vec3 base = axial_point(m, 7e-3);
        const double b0 = field_at(m, base + r * e1).norm();
        CHECK(rel(field_at(m, base - r * e1).norm(), b0) <= 1e-12);
        CHECK(rel(field_at(m, base + r * e2).norm(), b0) <= 1e-9);
    }
}

TEST_CASE("far field decays as a dipole") {
    const auto m = cylinder1_n48();
    const double z = 20.0 * m.length;
    const double ratio = field_at(m, axial_point(m, z)).norm() / field_at(m, axial_point(m, 2.0 * z)).norm();
    CHECK(ratio == doctest::Approx(8.0).epsilon(0.05));
}

TEST_CASE("points inside the magnet are rejected") {
    const auto m = cylinder1_n48();
    CHECK_THROWS_AS(field_at(m, m.center), DomainError);
    CHECK_THROWS_AS(field_at(m, axial_point(m, 0.0)), DomainError);
    CHECK_NOTHROW(field_at(m, axial_point(m, 1e-6)));
}

TEST_CASE("superposition of two magnets") {
    auto a = cylinder1_n48();
    auto b = cylinder2_n45();
    b.center = Vec3(0.03, 0.01, -0.005);
    b.axis = Vec3(0.0, 1.0, 1.0).normalized();
    const std::vector<CylindricalMagnet> both{a, b};
    for (const Vec3& p : {Vec3(0.01, 0.02, 0.03), Vec3(-0.02, 0.0, 0.015), Vec3(0.0, -0.03, -0.02)}) {
        const Vec3 sum = field_at(a, p) + field_at(b, p);
        CHECK((field_at(both, p) - sum).norm() <= 1e-12 * sum.norm());
    }
}

TEST_CASE("coaxial stack extends away from the north face") {
    const auto base = cylinder1_n48();
    const auto stack = coaxial_stack(base, 4);
    REQUIRE(stack.size() == 4);
    CHECK((stack[3].center - (base.center - 3.0 * base.length * base.axis)).norm() < 1e-15);
    CHECK_THROWS_AS(coaxial_stack(base, 0), UsageError);
    // Four magnets in contact act like one long magnet on axis.
    auto longer = base;
    longer.length = 4.0 * base.length;
    longer.center = base.center - 1.5 * base.length * base.axis;
    const Vec3 p = axial_point(base, 10e-3);
    CHECK(rel(field_at(stack, p).dot(base.axis), on_axis_field(longer, 10e-3)) <= 1e-3);
}

TEST_CASE("field map: symmetry, linearity, decay") {
    auto m = cylinder2_n45();
    m.axis = Vec3::UnitX();
    FieldGrid g;
    g.pitch = 0.5e-3;
    g.nu = 29;  // 14 mm along the axis
    g.nv = 73;  // 36 mm across
    g.origin = Vec3(0.5 * m.length + 10.0e-3, -18.0e-3, 0.0);
    const std::vector<CylindricalMagnet> ms{m};
    const auto map = field_map(ms, g, kDefaultQuadratureOrder, 2);
    REQUIRE(map.values.size() == g.nu * g.nv);

    const std::size_t mid = 36;
    for (std::size_t j = 0; j < mid; ++j)
        for (std::size_t i = 0; i < g.nu; ++i)
            CHECK(std::abs(map.at(i, j) - map.at(i, 2 * mid - j)) <= 1e-12 * map.at(i, mid));
    for (std::size_t i = 1; i < g.nu; ++i) CHECK(map.at(i, mid) < map.at(i - 1, mid));

    auto m2 = m;
    m2.remanence_br *= 2.0;
    const std::vector<CylindricalMagnet> ms2{m2};
    const auto doubled = field_map(ms2, g, kDefaultQuadratureOrder, 3);
    for (std::size_t k = 0; k < map.values.size(); ++k) CHECK(doubled.values[k] == doctest::Approx(2.0 * map.values[k]).epsilon(1e-14));

    const auto single = field_map(ms, g, kDefaultQuadratureOrder, 1);
    CHECK(single.values == map.values);
}

TEST_CASE("field map rejects grid points inside a magnet") {
    const auto m = cylinder1_n48();
    FieldGrid g;
    g.pitch = 1e-3;
    g.nu = 5;
    g.nv = 5;
    g.origin = Vec3(-2e-3, -2e-3, 0.0);
    const std::vector<CylindricalMagnet> ms{m};
    try {
        field_map(ms, g);
        FAIL("expected a domain error");
    } catch (const DomainError& e) {
        CHECK(std::string(e.what()).find("i=") != std::string::npos);
        CHECK(std::string(e.what()).find("j=") != std::string::npos);
    }
}

TEST_CASE("field map is invariant under a rigid rotation") {
    auto m = cylinder1_n48();
    FieldGrid g;
    g.pitch = 1e-3;
    g.nu = 6;
    g.nv = 5;
    g.origin = Vec3(-3e-3, -2e-3, 0.5 * m.length + 8e-3);
    const std::vector<CylindricalMagnet> ms{m};
    const auto ref = field_map(ms, g);

    const Eigen::Matrix3d r = Eigen::AngleAxisd(0.7, Vec3(1.0, -2.0, 0.5).normalized()).toRotationMatrix();
    auto mr = m;
    mr.center = r * m.center;
    mr.axis = (r * m.axis).normalized();
    FieldGrid gr = g;
    gr.origin = r * g.origin;
    gr.u_axis = r * g.u_axis;
    gr.v_axis = r * g.v_axis;
    const std::vector<CylindricalMagnet> msr{mr};
    const auto rot = field_map(msr, gr);
    for (std::size_t k = 0; k < ref.values.size(); ++k) CHECK(rel(rot.values[k], ref.values[k]) <= 1e-9);
}

TEST_CASE("similarity") {
    const std::vector<double> p{1.0, 1.0}, q{3.0, 1.0};
    CHECK(similarity(p, q) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(similarity(q, p) == similarity(p, q));
    CHECK(similarity(std::vector<double>{1.0}, std::vector<double>{3.0}) == doctest::Approx(0.0).scale(1.0));
    const std::vector<double> a{0.3, 2.0, 7.5, 1e-3};
    CHECK(similarity(a, a) == 1.0);
    CHECK_THROWS_AS(similarity(p, std::vector<double>{1.0}), UsageError);
    CHECK_THROWS_AS(similarity(std::vector<double>{1.0, -1.0}, std::vector<double>{2.0, 1.0}), DomainError);
    CHECK_THROWS_AS(similarity(std::vector<double>{}, std::vector<double>{}), UsageError);
}

TEST_CASE("similarity decreases as one entry moves away") {
    const std::vector<double> p{1.0, 2.0, 3.0, 4.0};
    for (std::size_t i = 0; i < p.size(); ++i) {
        double prev = 1.0;
        for (int k = 1; k <= 10; ++k) {
            auto q = p;
            q[i] = p[i] * (1.0 + 0.1 * k);
            const double s = similarity(p, q);
            CHECK(s < prev);
            prev = s;
        }
    }
}
