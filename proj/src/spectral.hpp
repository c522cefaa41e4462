#pragma once

// Resonance condition, double-Gaussian lineshape and angular amplitude
// response. Everything here is pure and thread-safe.

namespace oledmag {

inline constexpr double kDefaultGamma = 28.03e9;  // Hz/T

struct GyroConstant {
    double gamma = kDefaultGamma;

    GyroConstant() = default;
    explicit GyroConstant(double gamma_hz_per_t);

    // Electron g-factor implied by gamma (g = gamma * h / mu_B).
    double g_factor() const;
};

// Two Gaussians sharing one center. sigma1 <= sigma2 after canonical().
struct LineshapeParams {
    double f0 = 0.0;
    double a1 = 0.0;
    double sigma1 = 1.0;
    double a2 = 0.0;
    double sigma2 = 1.0;
    double baseline = 0.0;

    // Swaps (a1, sigma1) with (a2, sigma2) if needed so sigma1 <= sigma2.
    LineshapeParams canonical() const;
    // Throws DomainError unless both widths are positive and finite.
    void validate() const;
};

struct AngularResponse {
    double max_amplitude = 1.0;
    double floor_fraction = 0.0;  // in [0, 1)
};

double field_to_frequency(double field_t, GyroConstant gyro = {});
double frequency_to_field(double freq_hz, GyroConstant gyro = {});

double double_gaussian(double freq_hz, const LineshapeParams& p);

// Equal-weight double Gaussian scaled so that its peak value is exactly 1.
double normalized_double_gaussian(double freq_hz, double f0, double sigma1, double sigma2);

double angular_amplitude(double phi_rad, const AngularResponse& r);

}  // namespace oledmag
