#pragma once

// Field of axially magnetized cylindrical permanent magnets using the
// equivalent surface-charge model: each end disk carries a uniform magnetic
// charge density +-M, and B outside the body is
//
//   B(p) = Br/(4 pi) * [ int_north - int_south ] (p - p') / |p - p'|^3 dA'
//
// integrated with a tensor-product Gauss-Legendre rule (radius x angle).

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <vector>

namespace oledmag {

using Vec3 = Eigen::Vector3d;

struct CylindricalMagnet {
    double diameter = 0.0;       // m
    double length = 0.0;         // m
    double remanence_br = 0.0;   // T
    Vec3 center = Vec3::Zero();  // m
    Vec3 axis = Vec3::UnitZ();   // unit vector, north face at center + axis * length / 2

    void validate() const;
    // Strictly inside or within `margin` of the body surface.
    bool contains(const Vec3& p, double margin = 0.0) const;
};

// Catalog magnets. Remanence values are grade-typical defaults, not measured.
CylindricalMagnet cylinder1_n48();  // 7.0 mm x 12.0 mm
CylindricalMagnet cylinder2_n45();  // 12.7 mm x 25.4 mm

// Coaxial stack of `count` identical magnets in contact; the first magnet keeps
// `base.center` and the rest extend toward -axis.
std::vector<CylindricalMagnet> coaxial_stack(const CylindricalMagnet& base, int count);

inline constexpr int kDefaultQuadratureOrder = 64;

// Analytic on-axis axial field. `z` is measured along the axis from the north
// face; valid for z >= 0 or z <= -length.
double on_axis_field(const CylindricalMagnet& m, double z);

Vec3 field_at(const CylindricalMagnet& m, const Vec3& p, int order = kDefaultQuadratureOrder);
Vec3 field_at(std::span<const CylindricalMagnet> magnets, const Vec3& p,
              int order = kDefaultQuadratureOrder);

// Planar sampling grid. Point (i, j) sits at origin + i*pitch*u_axis + j*pitch*v_axis;
// values are stored row-major with i fastest (values[j * nu + i]).
struct FieldGrid {
    Vec3 origin = Vec3::Zero();
    Vec3 u_axis = Vec3::UnitX();
    Vec3 v_axis = Vec3::UnitY();
    double pitch = 1.0;
    std::size_t nu = 0;
    std::size_t nv = 0;
    std::vector<double> values;  // |B| in tesla

    Vec3 point(std::size_t i, std::size_t j) const;
    double& at(std::size_t i, std::size_t j) { return values[j * nu + i]; }
    double at(std::size_t i, std::size_t j) const { return values[j * nu + i]; }
    void validate() const;
};

// Fills grid.values with |sum of fields|. Throws DomainError naming the first
// grid index that lies inside (or within 1 nm of) a magnet.
FieldGrid field_map(std::span<const CylindricalMagnet> magnets, FieldGrid grid,
                    int order = kDefaultQuadratureOrder, int threads = 0);

// s = 1 - (1/N) sum |p_i - q_i| / ((p_i + q_i) / 2)
double similarity(std::span<const double> p, std::span<const double> q);

}  // namespace oledmag
