#pragma once

// Damped nonlinear least squares (Levenberg-Marquardt with Marquardt diagonal
// scaling and gain-ratio damping control) for the double-Gaussian lineshape.

#include "spectral.hpp"

#include <Eigen/Core>

#include <optional>
#include <span>
#include <vector>

namespace oledmag {

using Matrix6 = Eigen::Matrix<double, 6, 6>;

// Parameter order used for the covariance matrix.
enum LineshapeIndex { kF0 = 0, kA1 = 1, kSigma1 = 2, kA2 = 3, kSigma2 = 4, kBaseline = 5 };

struct FitOptions {
    int max_iterations = 200;
    double step_tolerance = 1e-10;      // relative step, scaled units
    double gradient_tolerance = 1e-12;  // max-norm of J^T r, scaled units
    bool record_trace = false;
};

struct FitResult {
    LineshapeParams params;
    double se_f0 = 0.0;  // Hz
    Matrix6 covariance = Matrix6::Zero();
    double residual_norm = 0.0;  // sqrt of the sum of squared residuals, signal units
    bool converged = false;
    bool singular = false;
    bool degenerate_widths = false;
    int iterations = 0;
    std::vector<double> objective_trace;  // accepted objective values (scaled units), if recorded

    // Standard error of the peak height a1 + a2 above baseline.
    double se_peak_height() const;
};

// Starting point used when no explicit init is given: f0 at the maximum of a
// 5-point moving average, widths 6 and 30 MHz, peak height split evenly,
// baseline from the median of the outer 10% of samples on each side.
LineshapeParams default_initial_guess(std::span<const double> freqs, std::span<const double> values);

// Requires >= 8 samples spanning more than 4 * sigma2 of the initial guess and
// finite values; throws UsageError otherwise.
FitResult fit_double_gaussian(std::span<const double> freqs, std::span<const double> values,
                              std::optional<LineshapeParams> init = std::nullopt, const FitOptions& options = {});

// Validates the sweep once so per-pixel fits can skip it.
void check_fit_domain(std::span<const double> freqs, double sigma2_init);

}  // namespace oledmag
