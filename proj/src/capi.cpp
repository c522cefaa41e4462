#include "oledmag/oledmag.h"

#include "acceptance.hpp"
#include "error.hpp"
#include "io.hpp"
#include "parallel.hpp"
#include "pipeline.hpp"
#include "point_sensor.hpp"
#include "scenario.hpp"
#include "sensitivity.hpp"
#include "synth.hpp"

#include <cmath>
#include <exception>
#include <new>
#include <string>
#include <vector>

using namespace oledmag;

struct omg_scenario {
    Scenario s;
};
struct omg_map {
    Map2D m;
};
struct omg_stack {
    ImageStack s;
};
struct omg_analysis {
    ResonanceAnalysis ra;
    GatedMap gated;
    GyroConstant gyro;
};
struct omg_scan {
    ScanResult r;
    omg_scan_info info{};
};
struct omg_table {
    CsvTable t;
};

namespace {

thread_local std::string g_last_error;

omg_status fail(omg_status status, const std::string& message) {
    g_last_error = message;
    return status;
}

omg_status status_of(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::usage: return OMG_ERR_USAGE;
        case ErrorKind::domain: return OMG_ERR_DOMAIN;
        case ErrorKind::data: return OMG_ERR_DATA;
        case ErrorKind::numerical: return OMG_ERR_NUMERICAL;
        case ErrorKind::io: return OMG_ERR_IO;
    }
    return OMG_ERR_INTERNAL;
}

template <class F>
omg_status guarded(F&& body) {
    try {
        body();
        g_last_error.clear();
        return OMG_OK;
    } catch (const Error& e) {
        return fail(status_of(e.kind()), e.what());
    } catch (const std::bad_alloc&) {
        return fail(OMG_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(OMG_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(OMG_ERR_INTERNAL, "unknown error");
    }
}

void need(const void* p, const char* what) {
    if (!p) throw UsageError(std::string(what) + " must not be NULL");
}

std::vector<double> series(const double* p, std::size_t n, const char* what) {
    if (n > 0) need(p, what);
    return n ? std::vector<double>(p, p + n) : std::vector<double>{};
}

Scenario scenario_or_default(const omg_scenario* s) { return s ? s->s : default_scenario(); }

omg_gradient_estimate to_c(const GradientEstimate& g) {
    return {g.gradient, g.delta_b, g.dx, g.se_delta_b};
}

}  // namespace

extern "C" {

const char* omg_version(void) { return "1.0.0"; }

const char* omg_status_name(omg_status status) {
    switch (status) {
        case OMG_OK: return "ok";
        case OMG_ERR_USAGE: return "usage error";
        case OMG_ERR_DOMAIN: return "domain error";
        case OMG_ERR_DATA: return "data error";
        case OMG_ERR_NUMERICAL: return "numerical failure";
        case OMG_ERR_IO: return "i/o error";
        case OMG_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* omg_last_error(void) { return g_last_error.c_str(); }

int omg_resolve_threads(int requested) {
    try {
        return resolve_threads(requested);
    } catch (...) {
        return 1;
    }
}

// ---- scenarios ----

omg_status omg_scenario_default(omg_scenario** out) {
    return guarded([&] {
        need(out, "out");
        *out = new omg_scenario{default_scenario()};
    });
}

omg_status omg_scenario_load(const char* path, omg_scenario** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new omg_scenario{load_scenario(path)};
    });
}

omg_status omg_scenario_parse(const char* json_text, omg_scenario** out) {
    return guarded([&] {
        need(json_text, "json_text");
        need(out, "out");
        *out = new omg_scenario{parse_scenario(json_text)};
    });
}

void omg_scenario_free(omg_scenario* scenario) { delete scenario; }

omg_status omg_scenario_get_info(const omg_scenario* scenario, omg_scenario_info* out) {
    return guarded([&] {
        need(scenario, "scenario");
        need(out, "out");
        const Scenario& s = scenario->s;
        omg_scenario_info info{};
        info.gamma_hz_per_t = s.gyro.gamma;
        info.width = s.acquisition.width;
        info.height = s.acquisition.height;
        info.n_freq = s.acquisition.freqs.size();
        info.pitch_m = s.acquisition.pitch;
        info.seed = s.acquisition.seed;
        info.binning = s.analysis.binning;
        info.gate_low_hz = s.analysis.gate_low_hz;
        info.gate_high_hz = s.analysis.gate_high_hz;
        info.k_max = s.analysis.k_max;
        info.t_total_s = s.analysis.t_total_s;
        info.max_nonconverged_fraction = s.analysis.max_nonconverged_fraction;
        info.scan_x0_m = s.scan.x0_m;
        info.scan_points = s.scan.positions().size();
        *out = info;
    });
}

omg_status omg_scenario_set_seed(omg_scenario* scenario, uint64_t seed) {
    return guarded([&] {
        need(scenario, "scenario");
        scenario->s.acquisition.seed = seed;
        scenario->s.scan.sweep.seed = seed;
    });
}

omg_status omg_scenario_set_scan_x0(omg_scenario* scenario, double x0_m) {
    return guarded([&] {
        need(scenario, "scenario");
        if (!std::isfinite(x0_m)) throw UsageError("x0 must be finite");
        scenario->s.scan.x0_m = x0_m;
    });
}

// ---- maps ----

omg_status omg_map_create(size_t nu, size_t nv, double super_pixel_size_m, omg_map** out) {
    return guarded([&] {
        need(out, "out");
        if (nu == 0 || nv == 0) throw UsageError("map dimensions must be positive");
        if (!(super_pixel_size_m > 0.0)) throw UsageError("super-pixel size must be positive");
        Map2D m;
        m.nu = nu;
        m.nv = nv;
        m.super_pixel_size = super_pixel_size_m;
        m.values.assign(nu * nv, 0.0);
        m.se.assign(nu * nv, 0.0);
        m.valid.assign(nu * nv, 0);
        *out = new omg_map{std::move(m)};
    });
}

void omg_map_free(omg_map* map) { delete map; }

omg_status omg_map_get_info(const omg_map* map, omg_map_info* out) {
    return guarded([&] {
        need(map, "map");
        need(out, "out");
        *out = {map->m.nu, map->m.nv, map->m.super_pixel_size, map->m.valid_count()};
    });
}

omg_status omg_map_get(const omg_map* map, size_t i, size_t j, double* value, double* se, int* valid) {
    return guarded([&] {
        need(map, "map");
        if (i >= map->m.nu || j >= map->m.nv) throw UsageError("map index out of range");
        const std::size_t k = map->m.index(i, j);
        if (value) *value = map->m.values[k];
        if (se) *se = map->m.se[k];
        if (valid) *valid = map->m.valid[k] ? 1 : 0;
    });
}

omg_status omg_map_set(omg_map* map, size_t i, size_t j, double value, double se, int valid) {
    return guarded([&] {
        need(map, "map");
        if (i >= map->m.nu || j >= map->m.nv) throw UsageError("map index out of range");
        const std::size_t k = map->m.index(i, j);
        map->m.values[k] = value;
        map->m.se[k] = se;
        map->m.valid[k] = valid ? 1 : 0;
    });
}

omg_status omg_map_read_csv(const char* path, omg_map** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new omg_map{read_map_csv(std::string(path))};
    });
}

omg_status omg_map_write_csv(const omg_map* map, const char* path) {
    return guarded([&] {
        need(map, "map");
        need(path, "path");
        write_map_csv(std::string(path), map->m);
    });
}

omg_status omg_map_write_pgm(const omg_map* map, const char* path, double low, double high) {
    return guarded([&] {
        need(map, "map");
        need(path, "path");
        write_pgm(std::string(path), map->m, low, high);
    });
}

omg_status omg_field_simulate(const omg_scenario* scenario, int threads, omg_map** out) {
    return guarded([&] {
        need(scenario, "scenario");
        need(out, "out");
        const MagnetSettings& ms = scenario->s.magnets;
        const FieldGrid g = field_map(ms.magnets, ms.plane, ms.quadrature_order, threads);
        *out = new omg_map{field_grid_as_map(g)};
    });
}

omg_status omg_field_ground_truth(const omg_scenario* scenario, int threads, omg_map** out) {
    return guarded([&] {
        need(scenario, "scenario");
        need(out, "out");
        *out = new omg_map{field_grid_as_map(scenario->s.ground_truth_field(threads))};
    });
}

// ---- stacks ----

omg_status omg_stack_synthesize(const omg_scenario* scenario, const omg_map* field, int threads, omg_stack** out) {
    return guarded([&] {
        need(scenario, "scenario");
        need(out, "out");
        const Scenario& s = scenario->s;
        FieldGrid grid;
        if (field) {
            grid = map_as_field_grid(field->m);
        } else {
            grid = s.ground_truth_field(threads);
        }
        ImageStack stack = generate_stack(grid, s.device_regions(), s.acquisition, threads);
        if (s.acquisition.outlier_fraction > 0.0)
            stack = inject_outliers(std::move(stack), s.acquisition.outlier_fraction, s.acquisition.seed);
        *out = new omg_stack{std::move(stack)};
    });
}

omg_status omg_stack_read(const char* path, omg_stack** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new omg_stack{read_stack(std::string(path))};
    });
}

omg_status omg_stack_write(const omg_stack* stack, const char* path) {
    return guarded([&] {
        need(stack, "stack");
        need(path, "path");
        write_stack(std::string(path), stack->s);
    });
}

omg_status omg_stack_get_info(const omg_stack* stack, omg_stack_info* out) {
    return guarded([&] {
        need(stack, "stack");
        need(out, "out");
        const AcquisitionConfig& c = stack->s.config;
        *out = {c.width, c.height, c.freqs.size(), c.pitch, c.freqs.front(), c.freqs.back(), c.seed};
    });
}

void omg_stack_free(omg_stack* stack) { delete stack; }

// ---- analysis ----

omg_status omg_analysis_run(const omg_stack* stack, const omg_scenario* scenario, int binning, int threads,
                            omg_analysis** out) {
    return guarded([&] {
        need(stack, "stack");
        need(out, "out");
        const Scenario s = scenario_or_default(scenario);
        AnalysisOptions opt;
        opt.binning = binning > 0 ? binning : s.analysis.binning;
        opt.mode = s.analysis.mode;
        opt.min_peak_significance = s.analysis.min_peak_significance;
        opt.threads = threads;
        auto* a = new omg_analysis{resonance_map(stack->s, opt), {}, s.gyro};
        try {
            a->gated = gate_and_interpolate(a->ra.resonance, s.analysis.gate_low_hz, s.analysis.gate_high_hz,
                                            s.analysis.k_max);
        } catch (...) {
            delete a;
            throw;
        }
        *out = a;
    });
}

omg_status omg_analysis_get_stats(const omg_analysis* analysis, omg_analysis_stats* out) {
    return guarded([&] {
        need(analysis, "analysis");
        need(out, "out");
        const Map2D& m = analysis->ra.resonance;
        omg_analysis_stats st{};
        st.nu = m.nu;
        st.nv = m.nv;
        st.fits = m.size();
        st.converged = analysis->ra.converged;
        st.valid = m.valid_count();
        st.gated = analysis->gated.outliers;
        for (int r : analysis->gated.fill_radius) st.unresolved += r < 0 ? 1 : 0;
        st.nonconverged_fraction =
            st.fits ? static_cast<double>(st.fits - st.converged) / static_cast<double>(st.fits) : 0.0;
        *out = st;
    });
}

omg_status omg_analysis_get_map(const omg_analysis* analysis, omg_map_kind kind, omg_map** out) {
    return guarded([&] {
        need(analysis, "analysis");
        need(out, "out");
        const ResonanceAnalysis& ra = analysis->ra;
        switch (kind) {
            case OMG_MAP_RESONANCE: *out = new omg_map{ra.resonance}; return;
            case OMG_MAP_SE: *out = new omg_map{ra.se_map()}; return;
            case OMG_MAP_FIELD: *out = new omg_map{field_map_from_resonance(ra.resonance, analysis->gyro)}; return;
            case OMG_MAP_GATED_RESONANCE: *out = new omg_map{analysis->gated.map}; return;
            case OMG_MAP_GATED_FIELD:
                *out = new omg_map{field_map_from_resonance(analysis->gated.map, analysis->gyro)};
                return;
        }
        throw UsageError("unknown map kind " + std::to_string(static_cast<int>(kind)));
    });
}

void omg_analysis_free(omg_analysis* analysis) { delete analysis; }

// ---- sensitivity ----

omg_status omg_field_sensitivity(double se_f0_hz, double t_total_s, double gamma_hz_per_t, double* out) {
    return guarded([&] {
        need(out, "out");
        *out = field_sensitivity(se_f0_hz, t_total_s, GyroConstant(gamma_hz_per_t));
    });
}

omg_status omg_region_sensitivity(const omg_map* se_map, const omg_scenario* scenario, omg_region region,
                                  double t_total_s, double* out) {
    return guarded([&] {
        need(se_map, "se_map");
        need(scenario, "scenario");
        need(out, "out");
        const Map2D& m = se_map->m;
        std::vector<std::uint8_t> mask;
        switch (region) {
            case OMG_REGION_ALL: mask.assign(m.size(), 1); break;
            case OMG_REGION_OLED: mask = region_masks(scenario->s.device_regions(), m).oled; break;
            case OMG_REGION_DIFFUSION: mask = region_masks(scenario->s.device_regions(), m).diffusion; break;
            default: throw UsageError("unknown region " + std::to_string(static_cast<int>(region)));
        }
        *out = region_sensitivity(m, mask, t_total_s, scenario->s.gyro);
    });
}

omg_status omg_fit_inverse_law(const double* sizes, const double* etas, size_t count, omg_inverse_law* out) {
    return guarded([&] {
        need(out, "out");
        const InverseLawFit f = fit_inverse_law(series(sizes, count, "sizes"), series(etas, count, "etas"));
        *out = {f.a, f.b, f.se_a, f.se_b, f.residual_norm, f.dof};
    });
}

omg_status omg_photon_rate(double well_depth, double quantum_efficiency, double pixel_area_m2, double exposure_s,
                           double* out) {
    return guarded([&] {
        need(out, "out");
        *out = photon_rate(well_depth, quantum_efficiency, pixel_area_m2, exposure_s);
    });
}

omg_status omg_shot_noise_sensitivity(double contrast, double linewidth_hz, double rate_per_m2, double area_m2,
                                      double* out) {
    return guarded([&] {
        need(out, "out");
        *out = shot_noise_sensitivity_for_area(contrast, linewidth_hz, rate_per_m2, area_m2);
    });
}

// ---- gradients ----

omg_status omg_min_detectable_gradient(double delta_b_t, double w_m, double dx_m, double* out) {
    return guarded([&] {
        need(out, "out");
        *out = min_detectable_gradient(delta_b_t, w_m, dx_m);
    });
}

omg_status omg_gradient_sensitivity(double delta_b_t, double w_m, double dx_m, double t_total_s, double* out) {
    return guarded([&] {
        need(out, "out");
        *out = gradient_sensitivity({w_m, dx_m, delta_b_t, t_total_s});
    });
}

omg_status omg_gradient_curves(const double* widths_m, const double* delta_b_t, size_t count, double dx_max_m,
                               int points, double t_total_s, omg_curve_point* out) {
    return guarded([&] {
        need(out, "out");
        const auto w = series(widths_m, count, "widths");
        const auto db = series(delta_b_t, count, "delta_b");
        const auto curves = gradient_curves(w, db, dx_max_m, points, t_total_s);
        for (std::size_t k = 0; k < curves.size(); ++k) out[k] = {curves[k].w, curves[k].dx, curves[k].eta_g};
    });
}

omg_status omg_gradient_between(const omg_map* field_map, size_t i1, size_t j1, size_t i2, size_t j2,
                                omg_gradient_estimate* out) {
    return guarded([&] {
        need(field_map, "field_map");
        need(out, "out");
        *out = to_c(gradient_estimate(field_map->m, i1, j1, i2, j2));
    });
}

omg_status omg_column_difference(const omg_map* field_map, size_t i1, size_t i2, omg_gradient_estimate* out) {
    return guarded([&] {
        need(field_map, "field_map");
        need(out, "out");
        *out = to_c(column_difference(field_map->m, i1, i2));
    });
}

// ---- scans ----

omg_status omg_scan_run(const omg_scenario* scenario, int threads, omg_scan** out) {
    return guarded([&] {
        need(scenario, "scenario");
        need(out, "out");
        const Scenario& s = scenario->s;
        ScanOptions opt = s.scan.options;
        opt.threads = threads;
        const ScanGeometry geom = s.scan_geometry();
        auto* scan = new omg_scan{run_scan(geom, s.scan.x0_m, s.scan.sweep, opt), {}};
        const ScanResult& r = scan->r;
        std::vector<std::size_t> hit;
        std::vector<double> meas;
        for (std::size_t k = 0; k < r.size(); ++k)
            if (r.detected[k]) {
                hit.push_back(k);
                meas.push_back(r.measured_b[k]);
            }
        omg_scan_info& info = scan->info;
        info.points = r.size();
        info.detected = hit.size();
        info.true_x0_m = s.scan.x0_m;
        info.similarity = r.similarity_score;
        info.fitted_x0_m = std::nan("");
        info.fitted_similarity = std::nan("");
        if (hit.size() >= 3) {
            try {
                const OffsetFit fit = fit_offset(
                    meas,
                    [&](double x0) {
                        const std::vector<double> full = geom.model(x0);
                        std::vector<double> sel;
                        sel.reserve(hit.size());
                        for (std::size_t k : hit) sel.push_back(full[k]);
                        return sel;
                    },
                    s.scan.x0_grid());
                info.fitted_x0_m = fit.x0;
                info.fitted_similarity = fit.similarity;
            } catch (...) {
                delete scan;
                throw;
            }
        }
        *out = scan;
    });
}

omg_status omg_scan_get_info(const omg_scan* scan, omg_scan_info* out) {
    return guarded([&] {
        need(scan, "scan");
        need(out, "out");
        *out = scan->info;
    });
}

omg_status omg_scan_get_point(const omg_scan* scan, size_t k, omg_scan_point* out) {
    return guarded([&] {
        need(scan, "scan");
        need(out, "out");
        const ScanResult& r = scan->r;
        if (k >= r.size()) throw UsageError("scan point index out of range");
        *out = {r.positions[k], r.measured_b[k], r.model_b[k], r.se_b[k], r.detected[k] ? 1 : 0};
    });
}

omg_status omg_scan_write_csv(const omg_scan* scan, const char* path) {
    return guarded([&] {
        need(scan, "scan");
        need(path, "path");
        const ScanResult& r = scan->r;
        CsvTable t;
        t.columns = {"position_m", "b_measured_T", "b_model_T", "se_T", "detected"};
        for (std::size_t k = 0; k < r.size(); ++k)
            t.rows.push_back({r.positions[k], r.measured_b[k], r.model_b[k], r.se_b[k], r.detected[k] ? 1.0 : 0.0});
        write_csv(std::string(path), t);
    });
}

void omg_scan_free(omg_scan* scan) { delete scan; }

omg_status omg_similarity(const double* p, const double* q, size_t count, double* out) {
    return guarded([&] {
        need(out, "out");
        *out = similarity(series(p, count, "p"), series(q, count, "q"));
    });
}

omg_status omg_fit_offset(const omg_scenario* scenario, const double* measured, size_t count, double* x0_m,
                          double* similarity_out) {
    return guarded([&] {
        need(scenario, "scenario");
        const Scenario& s = scenario->s;
        const ScanGeometry geom = s.scan_geometry();
        if (count != geom.positions.size())
            throw UsageError("series has " + std::to_string(count) + " entries but the scan path has " +
                             std::to_string(geom.positions.size()));
        const OffsetFit fit =
            fit_offset(series(measured, count, "measured"), [&](double x0) { return geom.model(x0); },
                       s.scan.x0_grid());
        if (x0_m) *x0_m = fit.x0;
        if (similarity_out) *similarity_out = fit.similarity;
    });
}

// ---- tables ----

omg_status omg_table_read(const char* path, omg_table** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new omg_table{read_csv(std::string(path))};
    });
}

void omg_table_free(omg_table* table) { delete table; }

size_t omg_table_columns(const omg_table* table) { return table ? table->t.columns.size() : 0; }

size_t omg_table_rows(const omg_table* table) { return table ? table->t.rows.size() : 0; }

const char* omg_table_column_name(const omg_table* table, size_t column) {
    if (!table || column >= table->t.columns.size()) return nullptr;
    return table->t.columns[column].c_str();
}

omg_status omg_table_find(const omg_table* table, const char* name, size_t* column) {
    return guarded([&] {
        need(table, "table");
        need(name, "name");
        need(column, "column");
        for (std::size_t k = 0; k < table->t.columns.size(); ++k)
            if (table->t.columns[k] == name) {
                *column = k;
                return;
            }
        throw UsageError(std::string("no column named ") + name);
    });
}

omg_status omg_table_column(const omg_table* table, size_t column, double* out) {
    return guarded([&] {
        need(table, "table");
        need(out, "out");
        const std::vector<double> c = table->t.column(column);
        for (std::size_t k = 0; k < c.size(); ++k) out[k] = c[k];
    });
}

omg_status omg_csv_write(const char* path, const char* const* columns, size_t n_columns, const double* data,
                         size_t n_rows) {
    return guarded([&] {
        need(path, "path");
        need(columns, "columns");
        if (n_columns == 0) throw UsageError("a table needs at least one column");
        if (n_rows > 0) need(data, "data");
        CsvTable t;
        for (std::size_t c = 0; c < n_columns; ++c) {
            need(columns[c], "column name");
            t.columns.emplace_back(columns[c]);
        }
        for (std::size_t r = 0; r < n_rows; ++r)
            t.rows.emplace_back(data + r * n_columns, data + (r + 1) * n_columns);
        write_csv(std::string(path), t);
    });
}

// ---- self-test ----

int omg_selftest_count(void) { return acceptance_criterion_count(); }

omg_status omg_selftest_run(const int* ids, size_t n_ids, int threads, omg_selftest_callback callback, void* user,
                            int* failed) {
    return guarded([&] {
        AcceptanceOptions opt;
        opt.threads = threads;
        if (n_ids > 0) {
            need(ids, "ids");
            opt.only.assign(ids, ids + n_ids);
        }
        int bad = 0;
        run_acceptance(opt, [&](const CriterionResult& r) {
            if (!r.pass) ++bad;
            if (callback) {
                const omg_selftest_result c{r.id, r.name.c_str(), r.pass ? 1 : 0, r.detail.c_str(), r.seconds};
                callback(&c, user);
            }
        });
        if (failed) *failed = bad;
    });
}

}  // extern "C"
