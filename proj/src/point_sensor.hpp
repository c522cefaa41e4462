#pragma once

// Frequency-swept EDMR point sensor: demodulated lock-in X/Y sweeps with a
// wobbling background, background subtraction, peak-field extraction and
// stepped scans past a magnet.

#include "fit.hpp"
#include "magnetostatics.hpp"
#include "spectral.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace oledmag {

struct SweepConfig {
    std::vector<double> freqs;     // Hz, ascending
    double amplitude = 1.0;        // resonance height at orthogonal drive
    double sigma1 = 6.15e6;        // Hz
    double sigma2 = 31.23e6;       // Hz
    double lockin_phase = 0.0;     // rad; X gets cos, Y gets sin
    double wobble_amplitude = 0.3; // signal units
    double wobble_period = 150e6;  // Hz
    double wobble_phase = 0.0;     // rad
    double noise_sigma = 0.0;      // white noise per channel and sample
    AngularResponse angular;
    double phi = 1.5707963267948966;  // angle between B1 and B0
    double gamma = kDefaultGamma;
    std::uint64_t seed = 1;

    void validate() const;
};

// Evenly spaced sweep of `points` samples covering [center - half_span, center + half_span].
std::vector<double> centered_sweep(double center_hz, double half_span_hz, int points);

struct LockinSweep {
    std::vector<double> freqs;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> background_x;
    std::vector<double> background_y;

    void validate() const;
};

// `stream` separates independent sweeps that share a seed (e.g. scan positions).
LockinSweep simulate_sweep(double b_true_t, const SweepConfig& cfg, std::uint64_t stream = 0);

// delta_r[k] = -sqrt(dX^2 + dY^2)
std::vector<double> subtract_background(const LockinSweep& s);

struct PeakField {
    bool detected = false;
    std::string reason;  // why no resonance was reported
    double b = 0.0;      // T
    double se_b = 0.0;   // T
    double f0 = 0.0;     // Hz
    double se_f0 = 0.0;  // Hz
    FitResult fit;
};

// Fits |delta_r| with the double-Gaussian model. A resonance is reported only
// if the fit converges with f0 inside the sweep and the fitted peak height is
// at least 3 robust noise sigmas (MAD of the fit residuals).
PeakField peak_field(std::span<const double> freqs, std::span<const double> delta_r, GyroConstant gyro = {});

// Magnets plus a straight scan path. A scan point with nominal coordinate s
// and starting offset x0 sits at origin + x0 * offset_dir + s * scan_dir.
struct ScanGeometry {
    std::vector<CylindricalMagnet> magnets;
    Vec3 origin = Vec3::Zero();
    Vec3 offset_dir = Vec3::UnitX();
    Vec3 scan_dir = Vec3::UnitX();
    std::vector<double> positions;  // nominal coordinates s, m
    int quadrature_order = kDefaultQuadratureOrder;

    Vec3 point(double s, double x0) const { return origin + x0 * offset_dir + s * scan_dir; }
    std::vector<double> model(double x0) const;  // |B| at every position
};

// Scan along the axis of `magnets.front()` starting `distance` beyond its north face.
ScanGeometry axial_scan(std::vector<CylindricalMagnet> magnets, double distance, std::vector<double> positions);
// Scan perpendicular to the axis (along `lateral`, orthogonal to the axis) at a
// fixed `distance` beyond the north face; the offset moves away from the face.
ScanGeometry lateral_scan(std::vector<CylindricalMagnet> magnets, double distance, const Vec3& lateral,
                          std::vector<double> positions);

struct ScanOptions {
    double half_span = 150e6;  // sweep window around the expected resonance, Hz
    int points = 121;
    // Offset of the sweep window center from the true resonance, as a
    // fraction of half_span; keeps the resonance off the window center.
    double window_shift = 0.1;
    int threads = 0;
};

struct ScanResult {
    std::vector<double> positions;  // nominal s, m
    std::vector<double> measured_b;
    std::vector<double> model_b;    // ground truth at the true offset
    std::vector<double> se_b;
    std::vector<std::uint8_t> detected;
    double similarity_score = 0.0;  // detected points against model_b

    std::size_t size() const { return positions.size(); }
};

// Measures |B| at every scan position with the true starting offset x0_true.
ScanResult run_scan(const ScanGeometry& geometry, double x0_true, const SweepConfig& sweep,
                    const ScanOptions& options = {});

struct OffsetFit {
    double x0 = 0.0;
    double similarity = 0.0;
    std::vector<double> scores;  // one per grid entry
};

// Grid search maximizing similarity(measured, model(x0)); ties go to the
// smallest x0.
OffsetFit fit_offset(std::span<const double> measured, const std::function<std::vector<double>(double)>& model,
                     std::span<const double> x0_grid);

std::vector<double> offset_grid(double lo, double hi, double step);

}  // namespace oledmag
