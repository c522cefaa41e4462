#include "pipeline.hpp"

#include "error.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace oledmag {

namespace {

double median_inplace(std::vector<double>& v) {
    const std::size_t n = v.size();
    std::nth_element(v.begin(), v.begin() + n / 2, v.end());
    double m = v[n / 2];
    if (n % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + n / 2));
    return m;
}

}  // namespace

std::size_t Map2D::valid_count() const {
    return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

void Map2D::validate() const {
    if (values.size() != size() || se.size() != size() || valid.size() != size())
        throw UsageError("map arrays must hold nu * nv entries");
    if (!(super_pixel_size > 0.0)) throw UsageError("map super-pixel size must be positive");
}

ImageStack bin(const ImageStack& stack, int n) {
    const AcquisitionConfig& cfg = stack.config;
    if (n < 1) throw UsageError("binning size must be >= 1");
    const auto nn = static_cast<std::size_t>(n);
    if (nn > std::min(cfg.width, cfg.height))
        throw UsageError("binning size " + std::to_string(n) + " exceeds image dimensions");
    if (n == 1) return stack;

    ImageStack out;
    out.config = cfg;
    out.config.width = cfg.width / nn;
    out.config.height = cfg.height / nn;
    out.config.pitch = cfg.pitch * static_cast<double>(n);
    const std::size_t nf = stack.n_freq();
    const std::size_t frame = out.frame_size();
    out.on.assign(nf * frame, 0.0);
    out.off.assign(nf * frame, 0.0);
    const double inv = 1.0 / static_cast<double>(nn * nn);

    for (std::size_t k = 0; k < nf; ++k) {
        for (std::size_t bj = 0; bj < out.config.height; ++bj) {
            for (std::size_t bi = 0; bi < out.config.width; ++bi) {
                // Deviations from the block's first pixel keep constant blocks exact.
                const std::size_t first = stack.index(k, bj * nn, bi * nn);
                const double ref_on = stack.on[first];
                const double ref_off = stack.off[first];
                double s_on = 0.0, s_off = 0.0;
                for (std::size_t dj = 0; dj < nn; ++dj) {
                    const std::size_t base = stack.index(k, bj * nn + dj, bi * nn);
                    for (std::size_t di = 0; di < nn; ++di) {
                        s_on += stack.on[base + di] - ref_on;
                        s_off += stack.off[base + di] - ref_off;
                    }
                }
                const std::size_t o = out.index(k, bj, bi);
                out.on[o] = ref_on + s_on * inv;
                out.off[o] = ref_off + s_off * inv;
            }
        }
    }
    return out;
}

Spectrum contrast_spectrum(const ImageStack& stack, std::size_t i, std::size_t j, ContrastMode mode) {
    if (i >= stack.config.width || j >= stack.config.height)
        throw UsageError("super-pixel index (" + std::to_string(i) + ", " + std::to_string(j) + ") out of range");
    Spectrum s;
    s.freqs = stack.config.freqs;
    s.values.resize(stack.n_freq());
    for (std::size_t k = 0; k < stack.n_freq(); ++k) {
        const std::size_t idx = stack.index(k, j, i);
        const double off = stack.off[idx];
        const double diff = off - stack.on[idx];
        if (mode == ContrastMode::absolute) {
            s.values[k] = diff;
        } else if (off == 0.0) {
            s.values[k] = 0.0;
            s.valid = false;
        } else {
            s.values[k] = diff / off;
        }
    }
    return s;
}

Map2D ResonanceAnalysis::se_map() const {
    Map2D m = resonance;
    m.values = resonance.se;
    std::fill(m.se.begin(), m.se.end(), 0.0);
    return m;
}

ResonanceAnalysis resonance_map(const ImageStack& stack, const AnalysisOptions& options) {
    stack.config.validate();
    const ImageStack binned = bin(stack, options.binning);
    const AcquisitionConfig& cfg = binned.config;
    check_fit_domain(cfg.freqs, 30e6);

    ResonanceAnalysis out;
    Map2D& map = out.resonance;
    map.nu = cfg.width;
    map.nv = cfg.height;
    map.super_pixel_size = cfg.pitch;
    map.values.assign(map.size(), std::numeric_limits<double>::quiet_NaN());
    map.se.assign(map.size(), std::numeric_limits<double>::quiet_NaN());
    map.valid.assign(map.size(), 0);
    out.fits.resize(map.size());

    const double f_lo = cfg.freqs.front();
    const double f_hi = cfg.freqs.back();

    parallel_for(map.size(), options.threads, [&](std::size_t idx) {
        const std::size_t i = idx % map.nu;
        const std::size_t j = idx / map.nu;
        const Spectrum s = contrast_spectrum(binned, i, j, options.mode);
        if (!s.valid) return;
        FitResult fit = fit_double_gaussian(s.freqs, s.values, std::nullopt, options.fit);
        const double height = fit.params.a1 + fit.params.a2;
        const bool detected = height > options.min_peak_significance * fit.se_peak_height();
        const bool inside = fit.params.f0 >= f_lo && fit.params.f0 <= f_hi;
        map.values[idx] = fit.params.f0;
        map.se[idx] = fit.se_f0;
        map.valid[idx] = (fit.converged && detected && inside && std::isfinite(fit.se_f0)) ? 1 : 0;
        out.fits[idx] = std::move(fit);
    });
    out.converged = static_cast<std::size_t>(
        std::count_if(out.fits.begin(), out.fits.end(), [](const FitResult& f) { return f.converged; }));
    return out;
}

Map2D field_map_from_resonance(const Map2D& resonance, GyroConstant gyro) {
    resonance.validate();
    Map2D out = resonance;
    for (std::size_t k = 0; k < out.size(); ++k) {
        if (resonance.valid[k]) {
            out.values[k] = frequency_to_field(resonance.values[k], gyro);
            out.se[k] = resonance.se[k] / gyro.gamma;
        } else {
            out.values[k] = resonance.values[k] / gyro.gamma;
            out.se[k] = resonance.se[k] / gyro.gamma;
        }
    }
    return out;
}

GatedMap gate_and_interpolate(const Map2D& map, double low, double high, int k_max) {
    map.validate();
    if (!(low < high)) throw UsageError("gate needs low < high");
    if (k_max < 1) throw UsageError("interpolation radius k_max must be >= 1");

    std::vector<std::uint8_t> good(map.size(), 0);
    for (std::size_t k = 0; k < map.size(); ++k)
        good[k] = (map.valid[k] && map.values[k] >= low && map.values[k] <= high) ? 1 : 0;

    GatedMap out;
    out.map = map;
    out.fill_radius.assign(map.size(), 0);
    const auto nu = static_cast<long>(map.nu);
    const auto nv = static_cast<long>(map.nv);
    for (long j = 0; j < nv; ++j) {
        for (long i = 0; i < nu; ++i) {
            const std::size_t idx = map.index(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
            if (good[idx]) continue;
            ++out.outliers;
            out.map.valid[idx] = 0;
            out.fill_radius[idx] = -1;
            for (long k = 1; k <= k_max; ++k) {
                double sum_v = 0.0, sum_se = 0.0;
                std::size_t count = 0;
                for (long jj = std::max(0L, j - k); jj <= std::min(nv - 1, j + k); ++jj) {
                    for (long ii = std::max(0L, i - k); ii <= std::min(nu - 1, i + k); ++ii) {
                        const std::size_t n_idx = map.index(static_cast<std::size_t>(ii), static_cast<std::size_t>(jj));
                        if (!good[n_idx]) continue;
                        sum_v += map.values[n_idx];
                        sum_se += map.se[n_idx];
                        ++count;
                    }
                }
                if (count > 0) {
                    out.map.values[idx] = sum_v / static_cast<double>(count);
                    out.map.se[idx] = sum_se / static_cast<double>(count);
                    out.map.valid[idx] = 1;
                    out.fill_radius[idx] = static_cast<int>(k);
                    break;
                }
            }
        }
    }
    return out;
}

RegionMasks region_masks(const DeviceRegions& regions, const Map2D& geometry) {
    regions.validate();
    RegionMasks masks;
    masks.oled.assign(geometry.size(), 0);
    masks.diffusion.assign(geometry.size(), 0);
    for (std::size_t j = 0; j < geometry.nv; ++j) {
        for (std::size_t i = 0; i < geometry.nu; ++i) {
            const double r = std::hypot(geometry.x(i) - regions.center.x(), geometry.y(j) - regions.center.y());
            const std::size_t idx = geometry.index(i, j);
            masks.oled[idx] = r < regions.r1 ? 1 : 0;
            masks.diffusion[idx] = (r > regions.r2 && r < regions.r3) ? 1 : 0;
        }
    }
    return masks;
}

double spectrum_snr(const Spectrum& s, double f0, double exclusion) {
    std::vector<double> outside;
    std::size_t nearest = 0;
    for (std::size_t k = 0; k < s.freqs.size(); ++k) {
        if (std::abs(s.freqs[k] - f0) > exclusion) outside.push_back(s.values[k]);
        if (std::abs(s.freqs[k] - f0) < std::abs(s.freqs[nearest] - f0)) nearest = k;
    }
    if (outside.size() < 3) throw UsageError("too few off-resonance samples for an SNR estimate");
    const double level = median_inplace(outside);
    for (double& v : outside) v = std::abs(v - level);
    const double sigma = 1.4826 * median_inplace(outside);
    const double peak = s.values[nearest] - level;
    return sigma > 0.0 ? peak / sigma : std::numeric_limits<double>::infinity();
}

}  // namespace oledmag
