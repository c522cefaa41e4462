#include "sensitivity.hpp"

#include "error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

namespace oledmag {

namespace {

constexpr double kHbar = 1.054571817e-34;   // J s
constexpr double kBohrMagneton = 9.2740100783e-24;  // J/T

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw UsageError(std::string(name) + " must be positive and finite");
}

}  // namespace

double field_sensitivity(double se_f0_hz, double t_total_s, GyroConstant gyro) {
    require_positive(t_total_s, "total measurement time");
    if (!(se_f0_hz >= 0.0)) throw UsageError("standard error must be non-negative");
    return se_f0_hz / gyro.gamma * std::sqrt(t_total_s);
}

double region_sensitivity(const Map2D& se_map, std::span<const std::uint8_t> mask, double t_total_s,
                          GyroConstant gyro) {
    se_map.validate();
    if (mask.size() != se_map.size()) throw UsageError("region mask does not match the map size");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < se_map.size(); ++k) {
        if (!mask[k] || !se_map.valid[k]) continue;
        sum += field_sensitivity(se_map.values[k], t_total_s, gyro);
        ++count;
    }
    if (count == 0) throw UsageError("region selects no valid super-pixels");
    return sum / static_cast<double>(count);
}

InverseLawFit fit_inverse_law(std::span<const double> sizes, std::span<const double> etas) {
    if (sizes.size() != etas.size()) throw UsageError("sizes and sensitivities differ in length");
    const auto n = static_cast<Eigen::Index>(sizes.size());
    if (n < 3) throw UsageError("inverse-law fit needs at least 3 points");
    Eigen::MatrixXd x(n, 2);
    Eigen::VectorXd y(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        require_positive(sizes[k], "super-pixel size");
        x(k, 0) = 1.0 / sizes[k];
        x(k, 1) = 1.0;
        y(k) = etas[k];
    }
    for (Eigen::Index k = 0; k < n; ++k)
        for (Eigen::Index q = k + 1; q < n; ++q)
            if (sizes[k] == sizes[q]) throw UsageError("inverse-law fit needs distinct sizes");

    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    const Eigen::Vector2d coef = qr.solve(y);
    const Eigen::VectorXd r = y - x * coef;
    InverseLawFit fit;
    fit.a = coef[0];
    fit.b = coef[1];
    fit.residual_norm = r.norm();
    fit.dof = static_cast<int>(n) - 2;
    const double s2 = r.squaredNorm() / fit.dof;
    const Eigen::Matrix2d cov = (x.transpose() * x).inverse() * s2;
    fit.se_a = std::sqrt(std::max(0.0, cov(0, 0)));
    fit.se_b = std::sqrt(std::max(0.0, cov(1, 1)));
    return fit;
}

double photon_rate(double well_depth, double qe, double pixel_area_m2, double exposure_s) {
    require_positive(well_depth, "well depth");
    require_positive(qe, "quantum efficiency");
    require_positive(pixel_area_m2, "pixel area");
    require_positive(exposure_s, "exposure");
    return well_depth / (qe * pixel_area_m2 * exposure_s);
}

double shot_noise_sensitivity(double contrast, double linewidth_hz, double rate_per_m2) {
    require_positive(contrast, "contrast");
    require_positive(linewidth_hz, "linewidth");
    require_positive(rate_per_m2, "photon rate");
    const double prefactor = 8.0 * std::numbers::pi / (3.0 * std::sqrt(3.0));
    return prefactor * kHbar / (kElectronG * kBohrMagneton) * linewidth_hz / (contrast * std::sqrt(rate_per_m2));
}

double shot_noise_sensitivity_for_area(double contrast, double linewidth_hz, double rate_per_m2, double area_m2) {
    require_positive(area_m2, "collection area");
    return shot_noise_sensitivity(contrast, linewidth_hz, rate_per_m2) / std::sqrt(area_m2);
}

GradientEstimate gradient_estimate(const Map2D& field_map, std::size_t i1, std::size_t j1, std::size_t i2,
                                   std::size_t j2) {
    field_map.validate();
    if (i1 >= field_map.nu || i2 >= field_map.nu || j1 >= field_map.nv || j2 >= field_map.nv)
        throw UsageError("gradient endpoints out of range");
    if (i1 == i2 && j1 == j2) throw UsageError("gradient endpoints must differ");
    const std::size_t a = field_map.index(i1, j1);
    const std::size_t b = field_map.index(i2, j2);
    if (!field_map.valid[a] || !field_map.valid[b]) throw UsageError("gradient endpoints must be valid map entries");
    GradientEstimate g;
    g.delta_b = field_map.values[b] - field_map.values[a];
    const double sx = (static_cast<double>(i2) - static_cast<double>(i1)) * field_map.super_pixel_size;
    const double sy = (static_cast<double>(j2) - static_cast<double>(j1)) * field_map.super_pixel_size;
    g.dx = std::hypot(sx, sy);
    g.gradient = g.delta_b / g.dx;
    g.se_delta_b = std::hypot(field_map.se[a], field_map.se[b]);
    return g;
}

GradientEstimate column_difference(const Map2D& field_map, std::size_t i1, std::size_t i2) {
    field_map.validate();
    if (i1 >= field_map.nu || i2 >= field_map.nu) throw UsageError("column index out of range");
    if (i1 == i2) throw UsageError("columns must differ");
    auto column_mean = [&](std::size_t i, double& se) {
        std::vector<double> v, e;
        for (std::size_t j = 0; j < field_map.nv; ++j) {
            const std::size_t k = field_map.index(i, j);
            if (!field_map.valid[k]) continue;
            v.push_back(field_map.values[k]);
            e.push_back(field_map.se[k]);
        }
        if (v.size() < 2) throw DataError("column " + std::to_string(i) + " has fewer than 2 valid entries");
        const double m = static_cast<double>(v.size());
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / m;
        double var = 0.0, chi2 = 0.0;
        bool weighted = true;
        for (std::size_t q = 0; q < v.size(); ++q) {
            var += e[q] * e[q];
            if (e[q] > 0.0)
                chi2 += (v[q] - mean) * (v[q] - mean) / (e[q] * e[q]);
            else
                weighted = false;
        }
        const double birge = weighted ? std::sqrt(chi2 / (m - 1.0)) : 1.0;
        se = std::sqrt(var) / m * std::max(1.0, birge);
        return mean;
    };
    double se1 = 0.0, se2 = 0.0;
    const double b1 = column_mean(i1, se1);
    const double b2 = column_mean(i2, se2);
    GradientEstimate g;
    g.delta_b = b2 - b1;
    g.dx = std::abs(static_cast<double>(i2) - static_cast<double>(i1)) * field_map.super_pixel_size;
    g.gradient = g.delta_b / g.dx;
    g.se_delta_b = std::hypot(se1, se2);
    return g;
}

double min_detectable_gradient(double delta_b_min, double w, double dx) {
    require_positive(delta_b_min, "field uncertainty");
    require_positive(w, "sensor size w");
    require_positive(dx, "gap distance");
    if (dx < w) throw DomainError("gap distance must satisfy dx >= w");
    const double ratio = w / dx;
    return std::numbers::sqrt2 * (delta_b_min / dx) * std::sqrt(1.0 + 2.0 * ratio * ratio);
}

double gradient_sensitivity(const GradientQuery& q) {
    require_positive(q.t_total, "total measurement time");
    return min_detectable_gradient(q.delta_b, q.w, q.dx) * std::sqrt(q.t_total);
}

std::vector<GradientCurvePoint> gradient_curves(std::span<const double> widths, std::span<const double> delta_b,
                                                double dx_max, int points, double t_total) {
    if (widths.size() != delta_b.size()) throw UsageError("one field uncertainty is needed per sensor size");
    if (points < 2) throw UsageError("a curve needs at least 2 points");
    std::vector<GradientCurvePoint> out;
    out.reserve(widths.size() * static_cast<std::size_t>(points));
    for (std::size_t c = 0; c < widths.size(); ++c) {
        const double w = widths[c];
        require_positive(w, "sensor size w");
        if (!(dx_max > w)) throw UsageError("dx_max must exceed every sensor size");
        const double step = std::log(dx_max / w) / (points - 1);
        for (int k = 0; k < points; ++k) {
            const double dx = k == 0 ? w : (k == points - 1 ? dx_max : w * std::exp(step * k));
            out.push_back({w, dx, gradient_sensitivity({w, dx, delta_b[c], t_total})});
        }
    }
    return out;
}

}  // namespace oledmag
