#include "fit.hpp"

#include "error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace oledmag {

namespace {

using Vector6 = Eigen::Matrix<double, 6, 1>;

constexpr double kInitSigma1 = 6e6;
constexpr double kInitSigma2 = 30e6;

double median_of(std::vector<double> v) {
    const std::size_t n = v.size();
    std::nth_element(v.begin(), v.begin() + n / 2, v.end());
    double m = v[n / 2];
    if (n % 2 == 0) {
        const double lower = *std::max_element(v.begin(), v.begin() + n / 2);
        m = 0.5 * (m + lower);
    }
    return m;
}

// Problem expressed in standardized units: x = (f - x_mean) / x_scale,
// y = (v - y_mean) / y_scale.
struct ScaledProblem {
    std::vector<double> x;
    std::vector<double> y;
    double x_mean = 0.0, x_scale = 1.0;
    double y_mean = 0.0, y_scale = 1.0;
};

ScaledProblem standardize(std::span<const double> freqs, std::span<const double> values) {
    ScaledProblem s;
    const auto n = static_cast<double>(freqs.size());
    s.x_mean = std::accumulate(freqs.begin(), freqs.end(), 0.0) / n;
    s.y_mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double vx = 0.0, vy = 0.0;
    for (std::size_t k = 0; k < freqs.size(); ++k) {
        vx += (freqs[k] - s.x_mean) * (freqs[k] - s.x_mean);
        vy += (values[k] - s.y_mean) * (values[k] - s.y_mean);
    }
    s.x_scale = std::sqrt(vx / n);
    s.y_scale = std::sqrt(vy / n);
    if (!(s.x_scale > 0.0)) s.x_scale = 1.0;
    if (!(s.y_scale > 0.0)) s.y_scale = 1.0;
    s.x.resize(freqs.size());
    s.y.resize(values.size());
    for (std::size_t k = 0; k < freqs.size(); ++k) {
        s.x[k] = (freqs[k] - s.x_mean) / s.x_scale;
        s.y[k] = (values[k] - s.y_mean) / s.y_scale;
    }
    return s;
}

// Objective, gradient J^T r and normal matrix J^T J at p (residual r = y - model).
struct Linearization {
    double objective = 0.0;
    Vector6 jtr = Vector6::Zero();
    Matrix6 jtj = Matrix6::Zero();
};

double objective_at(const ScaledProblem& s, const Vector6& p) {
    const double inv1 = 1.0 / (2.0 * p[kSigma1] * p[kSigma1]);
    const double inv2 = 1.0 / (2.0 * p[kSigma2] * p[kSigma2]);
    double sum = 0.0;
    for (std::size_t k = 0; k < s.x.size(); ++k) {
        const double d = s.x[k] - p[kF0];
        const double d2 = d * d;
        const double m = p[kBaseline] + p[kA1] * std::exp(-d2 * inv1) + p[kA2] * std::exp(-d2 * inv2);
        const double r = s.y[k] - m;
        sum += r * r;
    }
    return sum;
}

Linearization linearize(const ScaledProblem& s, const Vector6& p) {
    Linearization lin;
    const double s1 = p[kSigma1], s2 = p[kSigma2];
    const double inv1 = 1.0 / (2.0 * s1 * s1);
    const double inv2 = 1.0 / (2.0 * s2 * s2);
    Vector6 j;
    for (std::size_t k = 0; k < s.x.size(); ++k) {
        const double d = s.x[k] - p[kF0];
        const double d2 = d * d;
        const double e1 = std::exp(-d2 * inv1);
        const double e2 = std::exp(-d2 * inv2);
        const double m = p[kBaseline] + p[kA1] * e1 + p[kA2] * e2;
        const double r = s.y[k] - m;
        j[kF0] = p[kA1] * e1 * d / (s1 * s1) + p[kA2] * e2 * d / (s2 * s2);
        j[kA1] = e1;
        j[kSigma1] = p[kA1] * e1 * d2 / (s1 * s1 * s1);
        j[kA2] = e2;
        j[kSigma2] = p[kA2] * e2 * d2 / (s2 * s2 * s2);
        j[kBaseline] = 1.0;
        lin.objective += r * r;
        lin.jtr += j * r;
        lin.jtj.selfadjointView<Eigen::Lower>().rankUpdate(j);
    }
    lin.jtj = lin.jtj.selfadjointView<Eigen::Lower>();
    return lin;
}

}  // namespace

double FitResult::se_peak_height() const {
    const double v = covariance(kA1, kA1) + covariance(kA2, kA2) + 2.0 * covariance(kA1, kA2);
    return v > 0.0 ? std::sqrt(v) : 0.0;
}

void check_fit_domain(std::span<const double> freqs, double sigma2_init) {
    if (freqs.size() < 8) throw UsageError("double-Gaussian fit needs at least 8 samples");
    for (std::size_t k = 1; k < freqs.size(); ++k)
        if (!(freqs[k] > freqs[k - 1])) throw UsageError("fit frequencies must be strictly increasing");
    const double span = freqs.back() - freqs.front();
    if (!(span > 4.0 * sigma2_init))
        throw UsageError("sweep span " + std::to_string(span) + " Hz must exceed 4 * sigma2 (" +
                         std::to_string(4.0 * sigma2_init) + " Hz)");
}

LineshapeParams default_initial_guess(std::span<const double> freqs, std::span<const double> values) {
    const std::size_t n = values.size();
    std::size_t best = 0;
    double best_avg = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t lo = k >= 2 ? k - 2 : 0;
        const std::size_t hi = std::min(n - 1, k + 2);
        double avg = 0.0;
        for (std::size_t q = lo; q <= hi; ++q) avg += values[q];
        avg /= static_cast<double>(hi - lo + 1);
        if (avg > best_avg) {
            best_avg = avg;
            best = k;
        }
    }
    const std::size_t edge = std::max<std::size_t>(1, n / 10);
    std::vector<double> outer;
    outer.reserve(2 * edge);
    for (std::size_t k = 0; k < edge; ++k) {
        outer.push_back(values[k]);
        outer.push_back(values[n - 1 - k]);
    }
    LineshapeParams p;
    p.baseline = median_of(std::move(outer));
    const double height = best_avg - p.baseline;
    p.f0 = freqs[best];
    p.sigma1 = kInitSigma1;
    p.sigma2 = kInitSigma2;
    p.a1 = 0.5 * height;
    p.a2 = 0.5 * height;
    return p;
}

FitResult fit_double_gaussian(std::span<const double> freqs, std::span<const double> values,
                              std::optional<LineshapeParams> init, const FitOptions& options) {
    if (freqs.size() != values.size()) throw UsageError("frequency and value arrays differ in length");
    for (double v : values)
        if (!std::isfinite(v)) throw UsageError("fit values must be finite");
    const LineshapeParams start = init ? *init : default_initial_guess(freqs, values);
    start.validate();
    check_fit_domain(freqs, start.sigma2);

    const ScaledProblem s = standardize(freqs, values);
    const double n_samples = static_cast<double>(freqs.size());

    Vector6 p;
    p[kF0] = (start.f0 - s.x_mean) / s.x_scale;
    p[kA1] = start.a1 / s.y_scale;
    p[kSigma1] = start.sigma1 / s.x_scale;
    p[kA2] = start.a2 / s.y_scale;
    p[kSigma2] = start.sigma2 / s.x_scale;
    p[kBaseline] = (start.baseline - s.y_mean) / s.y_scale;

    FitResult result;
    Linearization lin = linearize(s, p);
    if (options.record_trace) result.objective_trace.push_back(lin.objective);

    double lambda = 1e-3;
    double nu = 2.0;
    bool converged = lin.jtr.lpNorm<Eigen::Infinity>() < options.gradient_tolerance;
    int iter = 0;
    while (!converged && iter < options.max_iterations) {
        ++iter;
        Vector6 diag = lin.jtj.diagonal();
        const double floor = 1e-12 * std::max(1.0, diag.maxCoeff());
        diag = diag.cwiseMax(floor);
        Matrix6 a = lin.jtj;
        a.diagonal() += lambda * diag;
        Eigen::LDLT<Matrix6> ldlt(a);
        Vector6 step = ldlt.solve(lin.jtr);
        if (ldlt.info() != Eigen::Success || !step.allFinite()) {
            lambda *= nu;
            nu *= 2.0;
            continue;
        }
        const Vector6 trial = p + step;
        const double predicted = step.dot(lambda * diag.cwiseProduct(step) + lin.jtr);
        double actual = -1.0;
        if (std::abs(trial[kSigma1]) > 1e-9 && std::abs(trial[kSigma2]) > 1e-9) {
            const double f_new = objective_at(s, trial);
            if (std::isfinite(f_new)) actual = lin.objective - f_new;
        }
        const double rho = predicted > 0.0 ? actual / predicted : -1.0;
        if (rho > 0.0) {
            p = trial;
            lin = linearize(s, p);
            if (options.record_trace) result.objective_trace.push_back(lin.objective);
            lambda *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
            nu = 2.0;
            const double rel_step = step.norm() / (p.norm() + 1e-30);
            if (rel_step < options.step_tolerance || lin.jtr.lpNorm<Eigen::Infinity>() < options.gradient_tolerance)
                converged = true;
        } else {
            // A rejected step this small means rounding, not curvature, stops progress.
            if (step.norm() / (p.norm() + 1e-30) < options.step_tolerance) {
                converged = true;
                break;
            }
            lambda *= nu;
            nu *= 2.0;
            if (!std::isfinite(lambda) || lambda > 1e30) break;
        }
    }
    result.iterations = iter;

    // Covariance in scaled units: (J^T J)^-1 * RSS / (N - 6).
    Matrix6 cov_scaled = Matrix6::Zero();
    {
        Eigen::FullPivLU<Matrix6> lu(lin.jtj);
        lu.setThreshold(1e-14);
        if (!lu.isInvertible() || n_samples <= 6.0) {
            result.singular = true;
        } else {
            cov_scaled = lu.inverse() * (lin.objective / (n_samples - 6.0));
            cov_scaled = 0.5 * (cov_scaled + cov_scaled.transpose()).eval();
            if (!cov_scaled.allFinite()) result.singular = true;
        }
    }

    // Back to physical units. Widths enter squared, so their sign is immaterial.
    Vector6 scale;
    scale << s.x_scale, s.y_scale, s.x_scale * (p[kSigma1] < 0 ? -1.0 : 1.0), s.y_scale,
        s.x_scale * (p[kSigma2] < 0 ? -1.0 : 1.0), s.y_scale;
    LineshapeParams out;
    out.f0 = s.x_mean + s.x_scale * p[kF0];
    out.a1 = s.y_scale * p[kA1];
    out.sigma1 = s.x_scale * std::abs(p[kSigma1]);
    out.a2 = s.y_scale * p[kA2];
    out.sigma2 = s.x_scale * std::abs(p[kSigma2]);
    out.baseline = s.y_mean + s.y_scale * p[kBaseline];
    Matrix6 cov = scale.asDiagonal() * cov_scaled * scale.asDiagonal();

    if (out.sigma1 > out.sigma2) {
        constexpr int swapped[6] = {kF0, kA2, kSigma2, kA1, kSigma1, kBaseline};
        Matrix6 reordered;
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) reordered(i, j) = cov(swapped[i], swapped[j]);
        cov = reordered;
    }
    result.params = out.canonical();
    result.degenerate_widths = result.params.sigma1 == result.params.sigma2;
    result.covariance = cov;
    result.se_f0 = cov(kF0, kF0) > 0.0 ? std::sqrt(cov(kF0, kF0)) : 0.0;
    result.residual_norm = s.y_scale * std::sqrt(lin.objective);
    result.converged = converged && !result.singular;
    return result;
}

}  // namespace oledmag
