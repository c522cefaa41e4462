#include "point_sensor.hpp"

#include "error.hpp"
#include "parallel.hpp"
#include "rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace oledmag {

namespace {

constexpr std::uint64_t kSweepStream = 0x53574550;  // "SWEP"
constexpr std::uint64_t kWindowStream = 0x57494e44;  // "WIND"

double median_of(std::vector<double> v) {
    const std::size_t n = v.size();
    std::nth_element(v.begin(), v.begin() + n / 2, v.end());
    double m = v[n / 2];
    if (n % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + n / 2));
    return m;
}

Vec3 unit_orthogonal(const Vec3& axis, const Vec3& hint) {
    Vec3 v = hint - hint.dot(axis) * axis;
    if (v.norm() < 1e-12) throw UsageError("lateral direction must not be parallel to the magnet axis");
    return v.normalized();
}

}  // namespace

void SweepConfig::validate() const {
    if (freqs.size() < 2) throw UsageError("sweep needs at least 2 frequencies");
    for (std::size_t k = 1; k < freqs.size(); ++k)
        if (!(freqs[k] > freqs[k - 1])) throw UsageError("sweep frequencies must be strictly increasing");
    if (!(sigma1 > 0.0) || !(sigma2 > 0.0)) throw UsageError("sweep linewidths must be positive");
    if (!(wobble_period > 0.0)) throw UsageError("wobble period must be positive");
    if (noise_sigma < 0.0 || amplitude < 0.0) throw UsageError("sweep amplitude and noise must be non-negative");
    if (!(gamma > 0.0)) throw UsageError("gamma must be positive");
    if (angular.floor_fraction < 0.0 || angular.floor_fraction >= 1.0)
        throw UsageError("angular floor fraction must be in [0, 1)");
}

std::vector<double> centered_sweep(double center_hz, double half_span_hz, int points) {
    if (points < 2) throw UsageError("a sweep needs at least 2 points");
    if (!(half_span_hz > 0.0)) throw UsageError("sweep half-span must be positive");
    std::vector<double> f(static_cast<std::size_t>(points));
    const double step = 2.0 * half_span_hz / (points - 1);
    for (int k = 0; k < points; ++k) f[static_cast<std::size_t>(k)] = center_hz - half_span_hz + step * k;
    return f;
}

void LockinSweep::validate() const {
    const std::size_t n = freqs.size();
    if (x.size() != n || y.size() != n || background_x.size() != n || background_y.size() != n)
        throw UsageError("lock-in sweep channels must all have the sweep length");
    for (std::size_t k = 1; k < n; ++k)
        if (!(freqs[k] > freqs[k - 1])) throw UsageError("sweep frequencies must be strictly increasing");
}

LockinSweep simulate_sweep(double b_true_t, const SweepConfig& cfg, std::uint64_t stream) {
    cfg.validate();
    const double f0 = field_to_frequency(b_true_t, GyroConstant(cfg.gamma));
    const double height = cfg.amplitude * angular_amplitude(cfg.phi, {1.0, cfg.angular.floor_fraction});
    const double c = std::cos(cfg.lockin_phase);
    const double s = std::sin(cfg.lockin_phase);
    const std::size_t n = cfg.freqs.size();

    LockinSweep out;
    out.freqs = cfg.freqs;
    out.x.resize(n);
    out.y.resize(n);
    out.background_x.resize(n);
    out.background_y.resize(n);
    CounterRng rng(cfg.seed ^ kSweepStream, stream);
    for (std::size_t k = 0; k < n; ++k) {
        const double f = cfg.freqs[k];
        const double wobble =
            cfg.wobble_amplitude * std::sin(2.0 * std::numbers::pi * f / cfg.wobble_period + cfg.wobble_phase);
        const double signal = height * normalized_double_gaussian(f, f0, cfg.sigma1, cfg.sigma2) + wobble;
        out.x[k] = signal * c;
        out.y[k] = signal * s;
        out.background_x[k] = wobble * c;
        out.background_y[k] = wobble * s;
        if (cfg.noise_sigma > 0.0) {
            out.x[k] += cfg.noise_sigma * rng.normal();
            out.y[k] += cfg.noise_sigma * rng.normal();
            out.background_x[k] += cfg.noise_sigma * rng.normal();
            out.background_y[k] += cfg.noise_sigma * rng.normal();
        }
    }
    return out;
}

std::vector<double> subtract_background(const LockinSweep& s) {
    s.validate();
    std::vector<double> r(s.freqs.size());
    for (std::size_t k = 0; k < r.size(); ++k)
        r[k] = -std::hypot(s.x[k] - s.background_x[k], s.y[k] - s.background_y[k]);
    return r;
}

PeakField peak_field(std::span<const double> freqs, std::span<const double> delta_r, GyroConstant gyro) {
    if (freqs.size() != delta_r.size()) throw UsageError("frequency and signal arrays differ in length");
    PeakField out;
    std::vector<double> mag(delta_r.size());
    for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::abs(delta_r[k]);

    out.fit = fit_double_gaussian(freqs, mag);
    const LineshapeParams& p = out.fit.params;
    if (!out.fit.converged) {
        out.reason = "fit did not converge";
        return out;
    }
    if (p.f0 < freqs.front() || p.f0 > freqs.back()) {
        out.reason = "fitted peak lies outside the sweep window";
        return out;
    }
    std::vector<double> resid(mag.size());
    for (std::size_t k = 0; k < mag.size(); ++k) resid[k] = mag[k] - double_gaussian(freqs[k], p);
    const double center = median_of(resid);
    for (double& r : resid) r = std::abs(r - center);
    const double noise = 1.4826 * median_of(std::move(resid));
    const double height = p.a1 + p.a2;
    if (!(height > 0.0) || height < 3.0 * noise) {
        out.reason = "peak below 3x robust noise";
        return out;
    }
    out.detected = true;
    out.f0 = p.f0;
    out.se_f0 = out.fit.se_f0;
    out.b = frequency_to_field(p.f0, gyro);
    out.se_b = out.fit.se_f0 / gyro.gamma;
    return out;
}

std::vector<double> ScanGeometry::model(double x0) const {
    std::vector<double> b(positions.size());
    for (std::size_t k = 0; k < positions.size(); ++k)
        b[k] = field_at(std::span<const CylindricalMagnet>(magnets), point(positions[k], x0), quadrature_order).norm();
    return b;
}

ScanGeometry axial_scan(std::vector<CylindricalMagnet> magnets, double distance, std::vector<double> positions) {
    if (magnets.empty()) throw UsageError("scan needs at least one magnet");
    const CylindricalMagnet& m = magnets.front();
    m.validate();
    ScanGeometry g;
    g.offset_dir = m.axis.normalized();
    g.scan_dir = g.offset_dir;
    g.origin = m.center + (0.5 * m.length + distance) * g.offset_dir;
    g.magnets = std::move(magnets);
    g.positions = std::move(positions);
    return g;
}

ScanGeometry lateral_scan(std::vector<CylindricalMagnet> magnets, double distance, const Vec3& lateral,
                          std::vector<double> positions) {
    ScanGeometry g = axial_scan(std::move(magnets), distance, std::move(positions));
    g.scan_dir = unit_orthogonal(g.offset_dir, lateral);
    return g;
}

ScanResult run_scan(const ScanGeometry& geometry, double x0_true, const SweepConfig& sweep,
                    const ScanOptions& options) {
    if (geometry.positions.empty()) throw UsageError("scan path is empty");
    if (options.points < 8) throw UsageError("scan sweeps need at least 8 points");
    for (const auto& m : geometry.magnets) m.validate();
    const GyroConstant gyro(sweep.gamma);
    const std::size_t n = geometry.positions.size();

    ScanResult out;
    out.positions = geometry.positions;
    out.measured_b.assign(n, std::numeric_limits<double>::quiet_NaN());
    out.model_b.assign(n, 0.0);
    out.se_b.assign(n, std::numeric_limits<double>::quiet_NaN());
    out.detected.assign(n, 0);

    for (std::size_t k = 0; k < n; ++k) {
        const Vec3 p = geometry.point(geometry.positions[k], x0_true);
        for (std::size_t q = 0; q < geometry.magnets.size(); ++q)
            if (geometry.magnets[q].contains(p, 1e-9))
                throw DomainError("scan point " + std::to_string(k) + " lies inside magnet " + std::to_string(q));
    }

    parallel_for(n, options.threads, [&](std::size_t k) {
        const Vec3 p = geometry.point(geometry.positions[k], x0_true);
        const double b = field_at(std::span<const CylindricalMagnet>(geometry.magnets), p,
                                  geometry.quadrature_order).norm();
        out.model_b[k] = b;
        const double f0 = field_to_frequency(b, gyro);
        CounterRng jitter(sweep.seed ^ kWindowStream, k);
        const double shift = options.window_shift * options.half_span * (2.0 * jitter.uniform() - 1.0);
        SweepConfig local = sweep;
        local.freqs = centered_sweep(f0 + shift, options.half_span, options.points);
        const LockinSweep s = simulate_sweep(b, local, k);
        const std::vector<double> dr = subtract_background(s);
        const PeakField pf = peak_field(s.freqs, dr, gyro);
        if (pf.detected) {
            out.measured_b[k] = pf.b;
            out.se_b[k] = pf.se_b;
            out.detected[k] = 1;
        }
    });

    std::vector<double> meas, model;
    for (std::size_t k = 0; k < n; ++k) {
        if (!out.detected[k]) continue;
        meas.push_back(out.measured_b[k]);
        model.push_back(out.model_b[k]);
    }
    out.similarity_score = meas.empty() ? std::numeric_limits<double>::quiet_NaN() : similarity(meas, model);
    return out;
}

OffsetFit fit_offset(std::span<const double> measured, const std::function<std::vector<double>(double)>& model,
                     std::span<const double> x0_grid) {
    if (x0_grid.empty()) throw UsageError("offset grid is empty");
    if (measured.size() < 3) throw UsageError("offset search needs at least 3 scan points");
    for (std::size_t k = 1; k < x0_grid.size(); ++k)
        if (!(x0_grid[k] > x0_grid[k - 1])) throw UsageError("offset grid must be ascending");
    OffsetFit out;
    out.similarity = -std::numeric_limits<double>::infinity();
    out.scores.reserve(x0_grid.size());
    for (double x0 : x0_grid) {
        const std::vector<double> q = model(x0);
        const double s = similarity(measured, q);
        out.scores.push_back(s);
        if (s > out.similarity) {
            out.similarity = s;
            out.x0 = x0;
        }
    }
    return out;
}

std::vector<double> offset_grid(double lo, double hi, double step) {
    if (!(step > 0.0) || !(hi >= lo)) throw UsageError("offset grid needs step > 0 and hi >= lo");
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    std::vector<double> g(count);
    for (std::size_t k = 0; k < count; ++k) g[k] = lo + step * static_cast<double>(k);
    return g;
}

}  // namespace oledmag
