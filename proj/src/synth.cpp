#include "synth.hpp"

#include "error.hpp"
#include "parallel.hpp"
#include "rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace oledmag {

namespace {

// Stream tags keep the synthesis and outlier streams disjoint for equal seeds.
constexpr std::uint64_t kFrameStream = 0x5354434b;     // "STCK"
constexpr std::uint64_t kOutlierPick = 0x4f55544c;     // "OUTL"
constexpr std::uint64_t kOutlierNoise = 0x4f55544e;    // "OUTN"

double frame_sigma(double mean, const AcquisitionConfig& cfg) {
    if (cfg.noise_scale == 0.0) return 0.0;
    const double per_exposure = mean + (cfg.el_fluctuation * mean) * (cfg.el_fluctuation * mean);
    return cfg.noise_scale * std::sqrt(per_exposure / cfg.sequences);
}

double radius_of(const DeviceRegions& regions, std::size_t row, std::size_t col, double pitch) {
    return (pixel_center(row, col, pitch) - regions.center).norm();
}

}  // namespace

double Wobble::factor(double freq_hz) const {
    return 1.0 + amplitude * std::sin(2.0 * std::numbers::pi * freq_hz / period + phase);
}

std::vector<double> default_sweep() {
    std::vector<double> f(45);
    for (std::size_t k = 0; k < f.size(); ++k) f[k] = 650e6 + 5e6 * static_cast<double>(k);
    return f;
}

void AcquisitionConfig::validate() const {
    if (width == 0 || height == 0) throw UsageError("image must have at least one pixel");
    if (!(pitch > 0.0)) throw UsageError("pixel pitch must be positive");
    if (freqs.empty()) throw UsageError("frequency list must not be empty");
    for (std::size_t k = 1; k < freqs.size(); ++k)
        if (!(freqs[k] > freqs[k - 1])) throw UsageError("frequencies must be strictly increasing");
    if (!(exposure > 0.0)) throw UsageError("exposure must be positive");
    if (sequences < 1) throw UsageError("sequences must be >= 1");
    if (!(well_depth > 0.0)) throw UsageError("well depth must be positive");
    if (!(quantum_efficiency > 0.0 && quantum_efficiency <= 1.0))
        throw UsageError("quantum efficiency must be in (0, 1]");
    if (contrast_oled < 0.0 || contrast_diffusion < 0.0 || contrast_oled >= 1.0 || contrast_diffusion >= 1.0)
        throw UsageError("contrast must be in [0, 1)");
    if (!(sigma1 > 0.0) || !(sigma2 > 0.0)) throw UsageError("lineshape widths must be positive");
    if (!(wobble.period > 0.0) || wobble.amplitude < 0.0 || wobble.amplitude >= 1.0)
        throw UsageError("wobble needs period > 0 and amplitude in [0, 1)");
    if (noise_scale < 0.0 || el_fluctuation < 0.0) throw UsageError("noise parameters must be non-negative");
    if (!(brightness.plateau > 0.0) || brightness.fade < 0.0 || brightness.far < 0.0)
        throw UsageError("brightness fractions must be non-negative (plateau positive)");
    if (outlier_fraction < 0.0 || outlier_fraction > 0.05) throw UsageError("outlier fraction must be in [0, 0.05]");
    if (!(gamma > 0.0)) throw UsageError("gamma must be positive");
}

DeviceRegions DeviceRegions::centered(const AcquisitionConfig& cfg) {
    DeviceRegions r;
    r.center = Eigen::Vector2d(0.5 * cfg.pitch * static_cast<double>(cfg.width),
                               0.5 * cfg.pitch * static_cast<double>(cfg.height));
    return r;
}

void DeviceRegions::validate() const {
    if (!(0.0 < r1 && r1 < r_oled && r_oled < r2 && r2 < r3))
        throw UsageError("device radii must satisfy 0 < r1 < r_oled < r2 < r3");
}

Eigen::Vector2d pixel_center(std::size_t row, std::size_t col, double pitch) {
    return {(static_cast<double>(col) + 0.5) * pitch, (static_cast<double>(row) + 0.5) * pitch};
}

void ImageStack::validate() const {
    config.validate();
    const std::size_t expected = n_freq() * frame_size();
    if (on.size() != expected || off.size() != expected)
        throw UsageError("stack frames must hold n_freq * height * width values");
    for (std::size_t i = 0; i < expected; ++i)
        if (!(on[i] >= 0.0) || !(off[i] >= 0.0)) throw DataError("stack counts must be non-negative");
}

std::vector<double> el_baseline_map(const DeviceRegions& regions, const AcquisitionConfig& cfg) {
    regions.validate();
    const BrightnessProfile& b = cfg.brightness;
    const double full = b.plateau * cfg.well_depth;
    std::vector<double> out(cfg.pixels());
    for (std::size_t row = 0; row < cfg.height; ++row) {
        for (std::size_t col = 0; col < cfg.width; ++col) {
            double level = full;
            if (!b.uniform) {
                const double r = radius_of(regions, row, col, cfg.pitch);
                if (r >= regions.r3) {
                    level = full * b.far;
                } else if (r > regions.r2) {
                    const double t = (r - regions.r2) / (regions.r3 - regions.r2);
                    level = full * (1.0 - (1.0 - b.fade) * t);
                }
            }
            out[row * cfg.width + col] = level;
        }
    }
    return out;
}

std::vector<double> contrast_map(const DeviceRegions& regions, const AcquisitionConfig& cfg) {
    regions.validate();
    std::vector<double> out(cfg.pixels());
    for (std::size_t row = 0; row < cfg.height; ++row) {
        for (std::size_t col = 0; col < cfg.width; ++col) {
            const double r = radius_of(regions, row, col, cfg.pitch);
            double c = cfg.contrast_diffusion;
            if (r <= regions.r1) {
                c = cfg.contrast_oled;
            } else if (r < regions.r2) {
                const double t = (r - regions.r1) / (regions.r2 - regions.r1);
                c = cfg.contrast_oled + (cfg.contrast_diffusion - cfg.contrast_oled) * t;
            }
            out[row * cfg.width + col] = c;
        }
    }
    return out;
}

ImageStack generate_stack(const FieldGrid& field, const DeviceRegions& regions, const AcquisitionConfig& cfg,
                          int threads) {
    cfg.validate();
    regions.validate();
    if (field.nu != cfg.width || field.nv != cfg.height || field.values.size() != cfg.pixels())
        throw UsageError("field grid " + std::to_string(field.nu) + "x" + std::to_string(field.nv) +
                         " does not match image " + std::to_string(cfg.width) + "x" + std::to_string(cfg.height));
    if (std::abs(field.pitch - cfg.pitch) > 1e-9 * cfg.pitch)
        throw UsageError("field grid pitch does not match the camera pitch");

    const std::vector<double> baseline = el_baseline_map(regions, cfg);
    const std::vector<double> contrast = contrast_map(regions, cfg);

    ImageStack stack{cfg, {}, {}};
    const std::size_t frame = cfg.pixels();
    const std::size_t nf = cfg.freqs.size();
    stack.on.assign(nf * frame, 0.0);
    stack.off.assign(nf * frame, 0.0);

    std::vector<double> wobble(nf);
    for (std::size_t k = 0; k < nf; ++k) wobble[k] = cfg.wobble.factor(cfg.freqs[k]);

    parallel_for(cfg.height, threads, [&](std::size_t row) {
        for (std::size_t col = 0; col < cfg.width; ++col) {
            const std::size_t px = row * cfg.width + col;
            const double f0 = cfg.gamma * field.values[px];
            const double base = baseline[px];
            const double c = contrast[px];
            for (std::size_t k = 0; k < nf; ++k) {
                const double g = normalized_double_gaussian(cfg.freqs[k], f0, cfg.sigma1, cfg.sigma2);
                const double off_mean = base;
                const double on_mean = base * wobble[k] * (1.0 - c * g);
                double off_v = off_mean;
                double on_v = on_mean;
                if (cfg.noise_scale != 0.0) {
                    CounterRng rng(cfg.seed ^ kFrameStream, px, k);
                    off_v += frame_sigma(off_mean, cfg) * rng.normal();
                    on_v += frame_sigma(on_mean, cfg) * rng.normal();
                }
                const std::size_t idx = k * frame + px;
                stack.off[idx] = std::max(0.0, off_v);
                stack.on[idx] = std::max(0.0, on_v);
            }
        }
    });

    if (cfg.outlier_fraction > 0.0) return inject_outliers(std::move(stack), cfg.outlier_fraction, cfg.seed);
    return stack;
}

std::vector<std::size_t> outlier_pixels(std::size_t width, std::size_t height, double fraction, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction <= 0.05)) throw UsageError("outlier fraction must be in [0, 0.05]");
    const std::size_t total = width * height;
    const auto count = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(total)));
    // Partial Fisher-Yates over a lazily materialized permutation.
    std::vector<std::size_t> perm(total);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    CounterRng rng(seed ^ kOutlierPick);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(total - i));
        std::swap(perm[i], perm[j]);
    }
    perm.resize(count);
    std::sort(perm.begin(), perm.end());
    return perm;
}

ImageStack inject_outliers(ImageStack stack, double fraction, std::uint64_t seed) {
    const AcquisitionConfig& cfg = stack.config;
    const std::vector<std::size_t> dead = outlier_pixels(cfg.width, cfg.height, fraction, seed);
    const std::size_t frame = stack.frame_size();
    const std::size_t nf = stack.n_freq();
    for (std::size_t px : dead) {
        double level = 0.0;
        for (std::size_t k = 0; k < nf; ++k) level += stack.off[k * frame + px];
        level /= static_cast<double>(nf);
        // Dead pixels keep their brightness but lose the resonance; give them
        // the same frame noise a live pixel at this level would have, falling
        // back to shot noise when the stack was generated noiselessly.
        double sigma = frame_sigma(level, cfg);
        if (sigma == 0.0) sigma = std::sqrt(level / cfg.sequences);
        CounterRng rng(seed ^ kOutlierNoise, px);
        for (std::size_t k = 0; k < nf; ++k) {
            stack.off[k * frame + px] = std::max(0.0, level + sigma * rng.normal());
            stack.on[k * frame + px] = std::max(0.0, level + sigma * rng.normal());
        }
    }
    return stack;
}

FieldGrid planar_gradient_field(const AcquisitionConfig& cfg, double center_field_t, double gradient_t_per_m) {
    FieldGrid g;
    g.pitch = cfg.pitch;
    g.nu = cfg.width;
    g.nv = cfg.height;
    g.values.resize(cfg.pixels());
    const double x_mid = 0.5 * cfg.pitch * static_cast<double>(cfg.width);
    for (std::size_t row = 0; row < cfg.height; ++row) {
        for (std::size_t col = 0; col < cfg.width; ++col) {
            const double x = pixel_center(row, col, cfg.pitch).x();
            const double b = center_field_t + gradient_t_per_m * (x - x_mid);
            if (b < 0.0) throw DomainError("planar gradient produces a negative field magnitude");
            g.at(col, row) = b;
        }
    }
    return g;
}

FieldGrid uniform_field(const AcquisitionConfig& cfg, double field_t) {
    return planar_gradient_field(cfg, field_t, 0.0);
}

}  // namespace oledmag
