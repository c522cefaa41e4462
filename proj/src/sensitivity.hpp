#pragma once

// Field and gradient sensitivity. All quantities are SI: T, Hz, m, s.

#include "pipeline.hpp"
#include "spectral.hpp"

#include <span>
#include <vector>

namespace oledmag {

enum class RegionTag { oled, diffusion, other };

struct SensitivityPoint {
    double super_pixel_size = 0.0;  // m
    double eta = 0.0;               // T / sqrt(Hz)
    RegionTag region = RegionTag::other;
};

// eta = (se_f0 / gamma) * sqrt(t_total)
double field_sensitivity(double se_f0_hz, double t_total_s, GyroConstant gyro = {});

// Mean field sensitivity over valid entries selected by `mask`.
double region_sensitivity(const Map2D& se_map, std::span<const std::uint8_t> mask, double t_total_s,
                          GyroConstant gyro = {});

struct InverseLawFit {
    double a = 0.0;     // eta * m
    double b = 0.0;     // eta
    double se_a = 0.0;
    double se_b = 0.0;
    double residual_norm = 0.0;
    int dof = 0;
};

// Ordinary least squares fit of eta = a / w + b.
InverseLawFit fit_inverse_law(std::span<const double> sizes, std::span<const double> etas);

// R = well_depth / (qe * pixel_area * exposure), photons / s / m^2.
double photon_rate(double well_depth, double qe, double pixel_area_m2, double exposure_s);

inline constexpr double kElectronG = 2.0023;

// (8 pi / 3 sqrt 3) (hbar / (g_e mu_B)) (linewidth / (C sqrt(R))) with R per m^2.
// The result is in T m / sqrt(Hz); divide by sqrt(area) for a collection area.
double shot_noise_sensitivity(double contrast, double linewidth_hz, double rate_per_m2);

// Same formula normalized to a collection area, in T / sqrt(Hz).
double shot_noise_sensitivity_for_area(double contrast, double linewidth_hz, double rate_per_m2, double area_m2);

struct GradientEstimate {
    double gradient = 0.0;  // T/m
    double delta_b = 0.0;   // T
    double dx = 0.0;        // m
    double se_delta_b = 0.0;
};

// Super-pixels are given as (i, j) map indices. Returns B(p2) - B(p1) over
// their center distance; se_delta_b combines both entries' se in quadrature.
GradientEstimate gradient_estimate(const Map2D& field_map, std::size_t i1, std::size_t j1, std::size_t i2,
                                   std::size_t j2);

// Difference between the mean field of columns i2 and i1, each averaged over
// its m >= 2 valid entries. The column-mean se is sqrt(sum se^2) / m, scaled
// up by the Birge ratio sqrt(chi^2 / (m - 1)) when the scatter exceeds the
// entries' own se. As in gradient_estimate, dx is the unsigned column distance.
GradientEstimate column_difference(const Map2D& field_map, std::size_t i1, std::size_t i2);

// delta_G = sqrt(2) (dB / dx) sqrt(1 + 2 (w / dx)^2), requires dx >= w > 0.
double min_detectable_gradient(double delta_b_min, double w, double dx);

struct GradientQuery {
    double w = 0.0;
    double dx = 0.0;
    double delta_b = 0.0;
    double t_total = 0.0;
};

double gradient_sensitivity(const GradientQuery& q);

struct GradientCurvePoint {
    double w = 0.0;
    double dx = 0.0;
    double eta_g = 0.0;
};

// One curve per entry of `widths`, each sampled at `points` log-spaced gap
// distances from dx = w to dx = dx_max. delta_b[k] is the field uncertainty
// of a w[k] x w[k] sensor.
std::vector<GradientCurvePoint> gradient_curves(std::span<const double> widths, std::span<const double> delta_b,
                                                double dx_max, int points, double t_total);

}  // namespace oledmag
