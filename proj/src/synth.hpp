#pragma once

// Synthetic widefield ODMR acquisition: per-frequency microwave-on and
// microwave-off EL frames (sequence-averaged mean counts) generated from a
// ground-truth field grid.

#include "magnetostatics.hpp"
#include "spectral.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <vector>

namespace oledmag {

// Frequency-structured baseline artifact from the microwave line. It couples
// into the device only while the microwave is on, so it multiplies the on
// frames: factor(f) = 1 + amplitude * sin(2 pi f / period + phase).
struct Wobble {
    double amplitude = 2.0e-4;
    double period = 150e6;  // Hz
    double phase = 0.0;     // rad

    double factor(double freq_hz) const;
};

// Radial EL brightness profile as fractions of the well depth.
struct BrightnessProfile {
    double plateau = 0.9;  // r < r2
    double fade = 0.10;    // fraction of the plateau reached at r3
    double far = 0.02;     // fraction of the plateau beyond r3
    bool uniform = false;  // plateau everywhere (homogeneous test stacks)
};

std::vector<double> default_sweep();  // 45 points, 650-870 MHz

struct AcquisitionConfig {
    std::size_t width = 500;
    std::size_t height = 500;
    double pitch = 152.5e-6 / 500.0;  // m per pixel
    std::vector<double> freqs = default_sweep();
    double exposure = 0.98;  // s
    int sequences = 200;
    double well_depth = 3.0e4;  // electrons
    double quantum_efficiency = 0.5;
    double contrast_oled = 0.0039;
    double contrast_diffusion = 0.0039;
    double sigma1 = 6.15e6;   // Hz
    double sigma2 = 31.23e6;  // Hz
    Wobble wobble;
    // Overall noise multiplier; 0 produces noiseless mean frames.
    double noise_scale = 1.0;
    // Relative EL intensity fluctuation of a single exposure, on top of shot
    // noise. Calibrated so that 3x3 super-pixels in the bright plateau show a
    // peak contrast SNR of about 4.
    double el_fluctuation = 0.0287;
    BrightnessProfile brightness;
    double outlier_fraction = 0.0;
    std::uint64_t seed = 1;
    double gamma = kDefaultGamma;

    // One 0.5 Hz on/off square-wave cycle takes 2 s.
    double total_time() const { return 2.0 * sequences; }
    std::size_t pixels() const { return width * height; }
    void validate() const;
};

struct DeviceRegions {
    Eigen::Vector2d center = Eigen::Vector2d::Zero();  // image-plane metres
    double r1 = 30e-6;
    double r_oled = 40e-6;
    double r2 = 54e-6;
    double r3 = 72e-6;

    // Default radii, centered on the image.
    static DeviceRegions centered(const AcquisitionConfig& cfg);
    void validate() const;
};

// Image-plane position of a pixel center: ((col + 0.5) * pitch, (row + 0.5) * pitch).
Eigen::Vector2d pixel_center(std::size_t row, std::size_t col, double pitch);

// Frames are stored frequency-major, then row-major.
struct ImageStack {
    AcquisitionConfig config;
    std::vector<double> on;
    std::vector<double> off;

    std::size_t n_freq() const { return config.freqs.size(); }
    std::size_t frame_size() const { return config.width * config.height; }
    std::size_t index(std::size_t k, std::size_t row, std::size_t col) const {
        return (k * config.height + row) * config.width + col;
    }
    void validate() const;
};

// Mean off-resonance counts per pixel (height x width, row-major).
std::vector<double> el_baseline_map(const DeviceRegions& regions, const AcquisitionConfig& cfg);
// Peak contrast per pixel (height x width, row-major).
std::vector<double> contrast_map(const DeviceRegions& regions, const AcquisitionConfig& cfg);

// Field grid must have nu == width, nv == height and the same pitch.
ImageStack generate_stack(const FieldGrid& field, const DeviceRegions& regions, const AcquisitionConfig& cfg,
                          int threads = 0);

// Replaces the spectra of floor(fraction * pixels) distinct pixels with flat
// noise around the pixel's mean level. fraction must be within [0, 0.05].
ImageStack inject_outliers(ImageStack stack, double fraction, std::uint64_t seed);

// Indices (row * width + col) that inject_outliers picks for these arguments.
std::vector<std::size_t> outlier_pixels(std::size_t width, std::size_t height, double fraction, std::uint64_t seed);

// Field grid congruent with `cfg` holding B(x) = center_field + gradient * (x - x_mid),
// x along image columns.
FieldGrid planar_gradient_field(const AcquisitionConfig& cfg, double center_field_t, double gradient_t_per_m);
FieldGrid uniform_field(const AcquisitionConfig& cfg, double field_t);

}  // namespace oledmag
