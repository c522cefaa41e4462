#include "magnetostatics.hpp"

#include "error.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>
#include <string>

namespace oledmag {

namespace {

constexpr double kInsideMargin = 1e-9;  // m

// Unit-disk nodes (x, y) and area weights for the radius x angle product rule.
struct DiskRule {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> w;
};

const DiskRule& disk_rule(int order) {
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<DiskRule>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[order];
    if (!slot) {
        const QuadratureRule& gl = gauss_legendre(order);
        auto rule = std::make_unique<DiskRule>();
        const auto n = static_cast<std::size_t>(order);
        rule->x.reserve(n * n);
        rule->y.reserve(n * n);
        rule->w.reserve(n * n);
        for (std::size_t a = 0; a < n; ++a) {
            const double rho = 0.5 * (gl.nodes[a] + 1.0);
            const double wr = 0.5 * gl.weights[a] * rho;
            for (std::size_t b = 0; b < n; ++b) {
                const double phi = std::numbers::pi * (gl.nodes[b] + 1.0);
                const double wphi = std::numbers::pi * gl.weights[b];
                rule->x.push_back(rho * std::cos(phi));
                rule->y.push_back(rho * std::sin(phi));
                rule->w.push_back(wr * wphi);
            }
        }
        slot = std::move(rule);
    }
    return *slot;
}

// Orthonormal frame (e1, e2, axis) attached to the magnet.
void local_frame(const Vec3& axis, Vec3& e1, Vec3& e2) {
    const Vec3 helper = std::abs(axis.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    e1 = axis.cross(helper).normalized();
    e2 = axis.cross(e1);
}

// Integral over a disk of radius r at axial height h (local coords) of
// (p - p') / |p - p'|^3 dA', returned in local coordinates.
Vec3 disk_integral(const DiskRule& rule, double radius, double h, const Vec3& p_local) {
    double sx = 0.0, sy = 0.0, sz = 0.0;
    const double dz = p_local.z() - h;
    const double dz2 = dz * dz;
    const std::size_t count = rule.w.size();
    for (std::size_t k = 0; k < count; ++k) {
        const double dx = p_local.x() - radius * rule.x[k];
        const double dy = p_local.y() - radius * rule.y[k];
        const double r2 = dx * dx + dy * dy + dz2;
        const double inv = rule.w[k] / (r2 * std::sqrt(r2));
        sx += dx * inv;
        sy += dy * inv;
        sz += dz * inv;
    }
    const double area_scale = radius * radius;
    return Vec3(sx, sy, sz) * area_scale;
}

}  // namespace

void CylindricalMagnet::validate() const {
    if (!(diameter > 0.0) || !(length > 0.0) || !(remanence_br > 0.0))
        throw DomainError("magnet diameter, length and remanence must be positive");
    if (!center.allFinite() || !axis.allFinite()) throw DomainError("magnet geometry must be finite");
    if (std::abs(axis.norm() - 1.0) > 1e-12) throw DomainError("magnet axis must be a unit vector");
}

bool CylindricalMagnet::contains(const Vec3& p, double margin) const {
    const Vec3 d = p - center;
    const double t = d.dot(axis);
    const double radial = (d - t * axis).norm();
    return std::abs(t) <= 0.5 * length + margin && radial <= 0.5 * diameter + margin;
}

CylindricalMagnet cylinder1_n48() {
    CylindricalMagnet m;
    m.diameter = 7.0e-3;
    m.length = 12.0e-3;
    m.remanence_br = 1.40;
    return m;
}

CylindricalMagnet cylinder2_n45() {
    CylindricalMagnet m;
    m.diameter = 12.7e-3;
    m.length = 25.4e-3;
    m.remanence_br = 1.35;
    return m;
}

std::vector<CylindricalMagnet> coaxial_stack(const CylindricalMagnet& base, int count) {
    if (count < 1) throw UsageError("magnet stack count must be >= 1");
    std::vector<CylindricalMagnet> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        CylindricalMagnet m = base;
        m.center = base.center - static_cast<double>(k) * base.length * base.axis;
        out.push_back(m);
    }
    return out;
}

double on_axis_field(const CylindricalMagnet& m, double z) {
    m.validate();
    if (z < 0.0 && z > -m.length)
        throw DomainError("on-axis point lies inside the magnet (z = " + std::to_string(z) + " m)");
    const double r = 0.5 * m.diameter;
    const double zl = z + m.length;
    return 0.5 * m.remanence_br * (zl / std::sqrt(zl * zl + r * r) - z / std::sqrt(z * z + r * r));
}

Vec3 field_at(const CylindricalMagnet& m, const Vec3& p, int order) {
    m.validate();
    if (!p.allFinite()) throw DomainError("field point must be finite");
    if (m.contains(p, kInsideMargin)) throw DomainError("field point lies inside or on the magnet");

    Vec3 e1, e2;
    local_frame(m.axis, e1, e2);
    const Vec3 d = p - m.center;
    const Vec3 local(d.dot(e1), d.dot(e2), d.dot(m.axis));

    const DiskRule& rule = disk_rule(order);
    const double radius = 0.5 * m.diameter;
    const Vec3 north = disk_integral(rule, radius, 0.5 * m.length, local);
    const Vec3 south = disk_integral(rule, radius, -0.5 * m.length, local);
    const Vec3 b_local = (m.remanence_br / (4.0 * std::numbers::pi)) * (north - south);
    return b_local.x() * e1 + b_local.y() * e2 + b_local.z() * m.axis;
}

Vec3 field_at(std::span<const CylindricalMagnet> magnets, const Vec3& p, int order) {
    Vec3 sum = Vec3::Zero();
    for (const auto& m : magnets) sum += field_at(m, p, order);
    return sum;
}

Vec3 FieldGrid::point(std::size_t i, std::size_t j) const {
    return origin + (static_cast<double>(i) * pitch) * u_axis + (static_cast<double>(j) * pitch) * v_axis;
}

void FieldGrid::validate() const {
    if (!(pitch > 0.0)) throw UsageError("grid pitch must be positive");
    if (nu == 0 || nv == 0) throw UsageError("grid must have at least one point per axis");
    if (!values.empty() && values.size() != nu * nv)
        throw UsageError("grid values must have nu*nv entries");
    for (double v : values)
        if (!(v >= 0.0)) throw DataError("grid values must be non-negative");
}

FieldGrid field_map(std::span<const CylindricalMagnet> magnets, FieldGrid grid, int order, int threads) {
    grid.values.clear();
    grid.validate();
    if (magnets.empty()) throw UsageError("field_map needs at least one magnet");
    for (const auto& m : magnets) m.validate();

    for (std::size_t j = 0; j < grid.nv; ++j) {
        for (std::size_t i = 0; i < grid.nu; ++i) {
            const Vec3 p = grid.point(i, j);
            for (std::size_t k = 0; k < magnets.size(); ++k) {
                if (magnets[k].contains(p, kInsideMargin)) {
                    std::ostringstream msg;
                    msg << "grid point (i=" << i << ", j=" << j << ") lies inside magnet " << k;
                    throw DomainError(msg.str());
                }
            }
        }
    }

    grid.values.assign(grid.nu * grid.nv, 0.0);
    parallel_for(grid.nv, threads, [&](std::size_t j) {
        for (std::size_t i = 0; i < grid.nu; ++i) grid.at(i, j) = field_at(magnets, grid.point(i, j), order).norm();
    });
    return grid;
}

double similarity(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size())
        throw UsageError("similarity needs equal-length series (" + std::to_string(p.size()) + " vs " +
                         std::to_string(q.size()) + ")");
    if (p.empty()) throw UsageError("similarity needs at least one sample");
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double mean = 0.5 * (p[i] + q[i]);
        if (mean == 0.0) throw DomainError("similarity undefined where p_i + q_i = 0 (index " + std::to_string(i) + ")");
        sum += std::abs(p[i] - q[i]) / mean;
    }
    return 1.0 - sum / static_cast<double>(p.size());
}

}  // namespace oledmag
