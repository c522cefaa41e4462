#pragma once

// ODMR analysis: pixel binning, per-super-pixel contrast spectra, batch
// double-Gaussian fitting into resonance / standard-error / field maps, and
// outlier gating with neighbour interpolation.

#include "fit.hpp"
#include "synth.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace oledmag {

// A 2D map over super-pixels. Entry (i, j) has i along image columns (x) and
// j along rows (y); storage is values[j * nu + i]. `se` holds the standard
// error of `values` in the same unit. Invalid entries keep whatever value the
// fit produced but are flagged; consumers must check `valid`.
struct Map2D {
    std::size_t nu = 0;
    std::size_t nv = 0;
    double super_pixel_size = 0.0;  // m
    std::vector<double> values;
    std::vector<double> se;
    std::vector<std::uint8_t> valid;

    std::size_t size() const { return nu * nv; }
    std::size_t index(std::size_t i, std::size_t j) const { return j * nu + i; }
    double x(std::size_t i) const { return (static_cast<double>(i) + 0.5) * super_pixel_size; }
    double y(std::size_t j) const { return (static_cast<double>(j) + 0.5) * super_pixel_size; }
    std::size_t valid_count() const;
    void validate() const;
};

// Mean over n x n blocks; trailing rows/columns that do not fill a block are
// dropped. The result is an ImageStack with width/height divided and pitch
// multiplied by n.
ImageStack bin(const ImageStack& stack, int n);

enum class ContrastMode {
    normalized,  // (off - on) / off
    absolute,    // off - on
};

struct Spectrum {
    std::vector<double> freqs;
    std::vector<double> values;
    bool valid = true;  // false when off == 0 somewhere in normalized mode
};

// (i, j) = (column, row) of the (binned) stack.
Spectrum contrast_spectrum(const ImageStack& stack, std::size_t i, std::size_t j,
                           ContrastMode mode = ContrastMode::normalized);

struct AnalysisOptions {
    int binning = 3;
    ContrastMode mode = ContrastMode::normalized;
    FitOptions fit;
    // A fit only counts as a detection when the fitted peak height exceeds
    // this many of its own standard errors.
    double min_peak_significance = 3.0;
    int threads = 0;
};

struct ResonanceAnalysis {
    Map2D resonance;  // Hz, se = standard error of the peak frequency
    std::vector<FitResult> fits;
    std::size_t converged = 0;

    Map2D se_map() const;  // values = se
};

ResonanceAnalysis resonance_map(const ImageStack& stack, const AnalysisOptions& options);

Map2D field_map_from_resonance(const Map2D& resonance, GyroConstant gyro = {});

struct GatedMap {
    Map2D map;
    std::vector<int> fill_radius;  // 0 = original entry, k > 0 = filled from radius k, -1 = unresolved
    std::size_t outliers = 0;      // entries that were out of range or invalid on input
};

// Entries outside [low, high] or invalid are replaced (value and se) by the mean
// over valid in-range neighbours within the smallest Chebyshev radius k <= k_max
// that contains at least one. Unresolvable entries stay invalid.
GatedMap gate_and_interpolate(const Map2D& map, double low, double high, int k_max);

struct RegionMasks {
    std::vector<std::uint8_t> oled;       // r < r1
    std::vector<std::uint8_t> diffusion;  // r2 < r < r3
};

RegionMasks region_masks(const DeviceRegions& regions, const Map2D& geometry);

// Peak contrast SNR of a spectrum: peak above the off-resonance median divided
// by a MAD-based noise estimate from the samples farther than `exclusion` from
// the given resonance frequency.
double spectrum_snr(const Spectrum& s, double f0, double exclusion);

}  // namespace oledmag
