#include "spectral.hpp"

#include "error.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace oledmag {

namespace {
constexpr double kPlanck = 6.62607015e-34;        // J s
constexpr double kBohrMagneton = 9.2740100783e-24;  // J/T
}  // namespace

GyroConstant::GyroConstant(double gamma_hz_per_t) : gamma(gamma_hz_per_t) {
    if (!(gamma > 0.0) || !std::isfinite(gamma))
        throw DomainError("gyromagnetic ratio must be positive, got " + std::to_string(gamma));
}

double GyroConstant::g_factor() const { return gamma * kPlanck / kBohrMagneton; }

LineshapeParams LineshapeParams::canonical() const {
    LineshapeParams p = *this;
    if (p.sigma1 > p.sigma2) {
        std::swap(p.sigma1, p.sigma2);
        std::swap(p.a1, p.a2);
    }
    return p;
}

void LineshapeParams::validate() const {
    if (!(sigma1 > 0.0) || !(sigma2 > 0.0) || !std::isfinite(sigma1) || !std::isfinite(sigma2))
        throw DomainError("lineshape widths must be positive and finite");
}

double field_to_frequency(double field_t, GyroConstant gyro) {
    if (field_t < 0.0 || std::isnan(field_t))
        throw DomainError("field magnitude must be non-negative, got " + std::to_string(field_t));
    return gyro.gamma * field_t;
}

double frequency_to_field(double freq_hz, GyroConstant gyro) {
    if (freq_hz < 0.0 || std::isnan(freq_hz))
        throw DomainError("frequency must be non-negative, got " + std::to_string(freq_hz));
    return freq_hz / gyro.gamma;
}

double double_gaussian(double freq_hz, const LineshapeParams& p) {
    const double d = freq_hz - p.f0;
    const double d2 = d * d;
    return p.baseline + p.a1 * std::exp(-d2 / (2.0 * p.sigma1 * p.sigma1)) +
           p.a2 * std::exp(-d2 / (2.0 * p.sigma2 * p.sigma2));
}

double normalized_double_gaussian(double freq_hz, double f0, double sigma1, double sigma2) {
    const double d = freq_hz - f0;
    const double d2 = d * d;
    return 0.5 * std::exp(-d2 / (2.0 * sigma1 * sigma1)) + 0.5 * std::exp(-d2 / (2.0 * sigma2 * sigma2));
}

double angular_amplitude(double phi_rad, const AngularResponse& r) {
    return r.max_amplitude * (r.floor_fraction + (1.0 - r.floor_fraction) * std::abs(std::sin(phi_rad)));
}

}  // namespace oledmag
