#pragma once

// Scenario configuration: one JSON document holding everything a workflow
// needs. Unknown keys and wrongly typed values are rejected at load time.

#include "magnetostatics.hpp"
#include "pipeline.hpp"
#include "point_sensor.hpp"
#include "synth.hpp"

#include <optional>
#include <string>
#include <vector>

namespace oledmag {

struct GroundTruthField {
    enum class Kind { uniform, gradient, magnets } kind = Kind::gradient;
    double center_t = 762.5e6 / kDefaultGamma;  // field at the image center
    double gradient_t_per_m = 555.7e-6 / 151.0e-6;
};

struct AnalysisSettings {
    int binning = 3;
    ContrastMode mode = ContrastMode::normalized;
    double min_peak_significance = 3.0;
    double gate_low_hz = 754e6;
    double gate_high_hz = 771e6;
    int k_max = 3;
    double t_total_s = 400.0;
    // Above this fraction of non-converged fits `analyze` reports a numerical failure.
    double max_nonconverged_fraction = 0.5;
};

struct ScanSettings {
    enum class Direction { axial, lateral } direction = Direction::axial;
    double distance_m = 10.0e-3;
    Vec3 lateral = Vec3::UnitY();
    double x0_m = 0.20e-3;
    double start_m = 0.0;
    double stop_m = 14.0e-3;
    double step_m = 0.5e-3;
    double x0_lo_m = 0.0;
    double x0_hi_m = 1.0e-3;
    double x0_step_m = 0.05e-3;
    SweepConfig sweep;
    ScanOptions options;

    std::vector<double> positions() const;
    std::vector<double> x0_grid() const;
};

struct MagnetSettings {
    std::vector<CylindricalMagnet> magnets;
    // Field-map plane: origin, in-plane axes, pitch and counts.
    FieldGrid plane;
    int quadrature_order = kDefaultQuadratureOrder;
};

struct Scenario {
    GyroConstant gyro;
    AcquisitionConfig acquisition;
    std::optional<DeviceRegions> regions;  // defaults to DeviceRegions::centered(acquisition)
    GroundTruthField field;
    AnalysisSettings analysis;
    MagnetSettings magnets;
    ScanSettings scan;

    DeviceRegions device_regions() const;
    ScanGeometry scan_geometry() const;
    // Ground truth on the camera grid. For magnets the camera plane starts at
    // magnets.plane.origin and follows the plane axes at the camera pitch.
    FieldGrid ground_truth_field(int threads = 0) const;
};

Scenario default_scenario();
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::string& path);

}  // namespace oledmag
