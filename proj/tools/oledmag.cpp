// Command-line front end. Everything goes through the C interface.

#include <oledmag/oledmag.h>

#include "CLI11.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

struct Failure {
    int code;
    std::string message;
};

int exit_code_of(omg_status s) {
    switch (s) {
        case OMG_OK: return kOk;
        case OMG_ERR_USAGE:
        case OMG_ERR_DOMAIN: return kUsage;
        case OMG_ERR_NUMERICAL: return kNumerical;
        default: return kData;
    }
}

void check(omg_status s) {
    if (s != OMG_OK) throw Failure{exit_code_of(s), std::string(omg_status_name(s)) + ": " + omg_last_error()};
}

template <class T, void (*Free)(T*)>
struct Deleter {
    void operator()(T* p) const { Free(p); }
};
using Scenario = std::unique_ptr<omg_scenario, Deleter<omg_scenario, omg_scenario_free>>;
using Map = std::unique_ptr<omg_map, Deleter<omg_map, omg_map_free>>;
using Stack = std::unique_ptr<omg_stack, Deleter<omg_stack, omg_stack_free>>;
using Analysis = std::unique_ptr<omg_analysis, Deleter<omg_analysis, omg_analysis_free>>;
using Scan = std::unique_ptr<omg_scan, Deleter<omg_scan, omg_scan_free>>;
using Table = std::unique_ptr<omg_table, Deleter<omg_table, omg_table_free>>;

std::string num(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

Scenario open_scenario(const std::string& path, std::optional<std::uint64_t> seed) {
    omg_scenario* s = nullptr;
    check(path.empty() ? omg_scenario_default(&s) : omg_scenario_load(path.c_str(), &s));
    Scenario sc(s);
    if (seed) check(omg_scenario_set_seed(sc.get(), *seed));
    return sc;
}

omg_scenario_info info_of(const omg_scenario* s) {
    omg_scenario_info i{};
    check(omg_scenario_get_info(s, &i));
    return i;
}

omg_map_info info_of(const omg_map* m) {
    omg_map_info i{};
    check(omg_map_get_info(m, &i));
    return i;
}

Map read_map(const std::string& path) {
    omg_map* m = nullptr;
    check(omg_map_read_csv(path.c_str(), &m));
    return Map(m);
}

Table read_table(const std::string& path) {
    omg_table* t = nullptr;
    check(omg_table_read(path.c_str(), &t));
    return Table(t);
}

std::vector<double> table_column(const omg_table* t, const std::string& name) {
    std::size_t col = 0;
    if (!name.empty()) {
        check(omg_table_find(t, name.c_str(), &col));
    } else if (omg_table_find(t, "value", &col) != OMG_OK) {
        col = omg_table_columns(t) >= 2 ? 1 : 0;
    }
    std::vector<double> out(omg_table_rows(t));
    check(omg_table_column(t, col, out.data()));
    return out;
}

void value_range(const omg_map* m, double& lo, double& hi) {
    const omg_map_info mi = info_of(m);
    lo = INFINITY;
    hi = -INFINITY;
    for (std::size_t j = 0; j < mi.nv; ++j)
        for (std::size_t i = 0; i < mi.nu; ++i) {
            double v = 0.0;
            int ok = 0;
            check(omg_map_get(m, i, j, &v, nullptr, &ok));
            if (!ok) continue;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
}

struct Common {
    int threads = 0;
};

// ---- simulate-field ----

struct FieldArgs {
    std::string scenario, out;
};

int simulate_field(const FieldArgs& a, const Common& c) {
    const Scenario sc = open_scenario(a.scenario, std::nullopt);
    omg_map* m = nullptr;
    check(omg_field_simulate(sc.get(), c.threads, &m));
    const Map map(m);
    check(omg_map_write_csv(map.get(), a.out.c_str()));
    const omg_map_info mi = info_of(map.get());
    double lo = 0.0, hi = 0.0;
    value_range(map.get(), lo, hi);
    std::cout << "field map " << mi.nu << "x" << mi.nv << " at " << num(mi.super_pixel_size_m) << " m, |B| "
              << num(lo) << " to " << num(hi) << " T -> " << a.out << "\n";
    return kOk;
}

// ---- synth ----

struct SynthArgs {
    std::string scenario, field, out;
    std::optional<std::uint64_t> seed;
};

int synth(const SynthArgs& a, const Common& c) {
    const Scenario sc = open_scenario(a.scenario, a.seed);
    Map field;
    if (!a.field.empty()) field = read_map(a.field);
    omg_stack* s = nullptr;
    check(omg_stack_synthesize(sc.get(), field.get(), c.threads, &s));
    const Stack stack(s);
    check(omg_stack_write(stack.get(), a.out.c_str()));
    omg_stack_info si{};
    check(omg_stack_get_info(stack.get(), &si));
    std::cout << "stack " << si.width << "x" << si.height << " px, " << si.n_freq << " frequencies "
              << num(si.freq_min_hz * 1e-6) << "-" << num(si.freq_max_hz * 1e-6) << " MHz, seed " << si.seed
              << " -> " << a.out << "\n";
    return kOk;
}

// ---- analyze ----

struct AnalyzeArgs {
    std::string stack, scenario, out_dir;
    int n = 0;
};

int analyze(const AnalyzeArgs& a, const Common& c) {
    const Scenario sc = open_scenario(a.scenario, std::nullopt);
    const omg_scenario_info si = info_of(sc.get());
    omg_stack* s = nullptr;
    check(omg_stack_read(a.stack.c_str(), &s));
    const Stack stack(s);
    omg_analysis* an = nullptr;
    check(omg_analysis_run(stack.get(), sc.get(), a.n, c.threads, &an));
    const Analysis analysis(an);
    omg_analysis_stats st{};
    check(omg_analysis_get_stats(analysis.get(), &st));

    if (!a.out_dir.empty()) {
        namespace fs = std::filesystem;
        std::error_code ec;
        fs::create_directories(a.out_dir, ec);
        if (ec) throw Failure{kData, "cannot create " + a.out_dir + ": " + ec.message()};
        const struct {
            omg_map_kind kind;
            const char* name;
        } outputs[] = {{OMG_MAP_RESONANCE, "resonance"},
                       {OMG_MAP_SE, "se"},
                       {OMG_MAP_FIELD, "field"},
                       {OMG_MAP_GATED_RESONANCE, "gated_resonance"},
                       {OMG_MAP_GATED_FIELD, "gated_field"}};
        for (const auto& o : outputs) {
            omg_map* m = nullptr;
            check(omg_analysis_get_map(analysis.get(), o.kind, &m));
            const Map map(m);
            const std::string base = (fs::path(a.out_dir) / o.name).string();
            check(omg_map_write_csv(map.get(), (base + ".csv").c_str()));
            if (o.kind == OMG_MAP_GATED_RESONANCE)
                check(omg_map_write_pgm(map.get(), (base + ".pgm").c_str(), si.gate_low_hz, si.gate_high_hz));
            if (o.kind == OMG_MAP_GATED_FIELD)
                check(omg_map_write_pgm(map.get(), (base + ".pgm").c_str(), si.gate_low_hz / si.gamma_hz_per_t,
                                        si.gate_high_hz / si.gamma_hz_per_t));
        }
    }

    std::cout << "map dims " << st.nu << "x" << st.nv << "\n"
              << "fits " << st.fits << ", converged " << st.converged << ", valid " << st.valid << ", gated "
              << st.gated << ", unresolved " << st.unresolved << "\n";
    if (st.nonconverged_fraction > si.max_nonconverged_fraction) {
        std::cerr << "error: " << num(100.0 * st.nonconverged_fraction, 4)
                  << "% of fits did not converge (limit " << num(100.0 * si.max_nonconverged_fraction, 4)
                  << "%)\n";
        return kNumerical;
    }
    return kOk;
}

// ---- sensitivity ----

struct SensitivityArgs {
    std::string scenario, se_map, stack, out;
    std::vector<int> sizes;
    std::optional<double> t, se_hz;
    bool shot_noise = false;
    double contrast = 0.0039, linewidth = 6.15e6, rate = 6.24e5 / 1e-12, area = 1e-12;
};

struct RegionEtas {
    double all = NAN, oled = NAN, diffusion = NAN;
};

RegionEtas region_etas(const omg_map* se, const omg_scenario* sc, double t) {
    RegionEtas r;
    double* slots[] = {&r.all, &r.oled, &r.diffusion};
    const omg_region regions[] = {OMG_REGION_ALL, OMG_REGION_OLED, OMG_REGION_DIFFUSION};
    for (int k = 0; k < 3; ++k) {
        const omg_status st = omg_region_sensitivity(se, sc, regions[k], t, slots[k]);
        if (st == OMG_ERR_USAGE) continue;  // empty region at this binning
        check(st);
    }
    return r;
}

std::string eta_text(double eta) { return std::isnan(eta) ? "n/a" : num(eta * 1e6, 6); }

int sensitivity(const SensitivityArgs& a, const Common& c) {
    const Scenario sc = open_scenario(a.scenario, std::nullopt);
    const omg_scenario_info si = info_of(sc.get());
    const double t = a.t.value_or(si.t_total_s);
    bool did = false;

    if (a.shot_noise) {
        double eta = 0.0;
        check(omg_shot_noise_sensitivity(a.contrast, a.linewidth, a.rate, a.area, &eta));
        std::cout << "shot-noise eta " << num(eta * 1e6, 6) << " uT/sqrt(Hz) for area " << num(a.area) << " m^2\n";
        did = true;
    }
    if (a.se_hz) {
        double eta = 0.0;
        check(omg_field_sensitivity(*a.se_hz, t, si.gamma_hz_per_t, &eta));
        std::cout << "eta " << num(eta * 1e6, 6) << " uT/sqrt(Hz) (se " << num(*a.se_hz) << " Hz, T " << num(t)
                  << " s)\n";
        did = true;
    }
    if (!a.se_map.empty()) {
        const Map se = read_map(a.se_map);
        const RegionEtas r = region_etas(se.get(), sc.get(), t);
        std::cout << "region,eta_uT_per_sqrtHz\nall," << eta_text(r.all) << "\noled," << eta_text(r.oled)
                  << "\ndiffusion," << eta_text(r.diffusion) << "\n";
        did = true;
    }
    if (!a.stack.empty()) {
        omg_stack* s = nullptr;
        check(omg_stack_read(a.stack.c_str(), &s));
        const Stack stack(s);
        const std::vector<int> ns = a.sizes.empty() ? std::vector<int>{1, 2, 3, 6, 12} : a.sizes;
        std::vector<double> widths, etas, rows;
        std::cout << "n,super_pixel_m,eta_all,eta_oled,eta_diffusion (uT/sqrt(Hz))\n";
        for (int n : ns) {
            omg_analysis* an = nullptr;
            check(omg_analysis_run(stack.get(), sc.get(), n, c.threads, &an));
            const Analysis analysis(an);
            omg_map* m = nullptr;
            check(omg_analysis_get_map(analysis.get(), OMG_MAP_SE, &m));
            const Map se(m);
            const double w = info_of(se.get()).super_pixel_size_m;
            const RegionEtas r = region_etas(se.get(), sc.get(), t);
            std::cout << n << "," << num(w) << "," << eta_text(r.all) << "," << eta_text(r.oled) << ","
                      << eta_text(r.diffusion) << "\n";
            widths.push_back(w);
            etas.push_back(r.all);
            rows.insert(rows.end(), {static_cast<double>(n), w, r.all, r.oled, r.diffusion});
        }
        if (widths.size() >= 3) {
            omg_inverse_law f{};
            check(omg_fit_inverse_law(widths.data(), etas.data(), widths.size(), &f));
            std::cout << "fit eta = a/w + b: a = " << num(f.a * 1e12, 6) << " uT/sqrt(Hz) um (se "
                      << num(f.se_a * 1e12, 3) << "), b = " << num(f.b * 1e6, 6) << " uT/sqrt(Hz) (se "
                      << num(f.se_b * 1e6, 3) << ")\n";
        }
        if (!a.out.empty()) {
            const char* cols[] = {"n", "super_pixel_m", "eta_all", "eta_oled", "eta_diffusion"};
            check(omg_csv_write(a.out.c_str(), cols, 5, rows.data(), ns.size()));
        }
        did = true;
    }
    if (!did) throw Failure{kUsage, "sensitivity needs --se-map, --stack, --se-hz or --shot-noise"};
    return kOk;
}

// ---- gradient ----

struct GradientArgs {
    bool eq7 = false;
    std::optional<double> delta_b, w, dx, t;
    std::string curves, map;
    std::vector<double> widths, delta_bs;
    double dx_max = 200e-6;
    int points = 50;
    std::vector<std::size_t> from, to;
};

int gradient(const GradientArgs& a, const Common&) {
    bool did = false;
    if (a.eq7) {
        if (!a.delta_b || !a.w || !a.dx) throw Failure{kUsage, "--eq7 needs --delta-b, --w and --dx"};
        double g = 0.0;
        check(omg_min_detectable_gradient(*a.delta_b, *a.w, *a.dx, &g));
        std::cout << "delta_G " << num(g, 17) << " T/m\n";
        if (a.t) {
            double eta = 0.0;
            check(omg_gradient_sensitivity(*a.delta_b, *a.w, *a.dx, *a.t, &eta));
            std::cout << "eta_G " << num(eta, 17) << " T/m/sqrt(Hz)\n";
        }
        did = true;
    }
    if (!a.curves.empty()) {
        if (a.widths.empty() || a.widths.size() != a.delta_bs.size())
            throw Failure{kUsage, "--curves needs --widths and --delta-bs of equal length"};
        const double t = a.t.value_or(400.0);
        std::vector<omg_curve_point> pts(a.widths.size() * static_cast<std::size_t>(std::max(a.points, 0)));
        check(omg_gradient_curves(a.widths.data(), a.delta_bs.data(), a.widths.size(), a.dx_max, a.points, t,
                                  pts.data()));
        std::vector<double> rows;
        for (const auto& p : pts) rows.insert(rows.end(), {p.w_m, p.dx_m, p.eta_g});
        const char* cols[] = {"w_m", "dx_m", "eta_g"};
        check(omg_csv_write(a.curves.c_str(), cols, 3, rows.data(), pts.size()));
        std::cout << a.widths.size() << " curves of " << a.points << " points -> " << a.curves << "\n";
        did = true;
    }
    if (!a.map.empty()) {
        const Map m = read_map(a.map);
        omg_gradient_estimate g{};
        if (!a.from.empty() || !a.to.empty()) {
            if (a.from.size() != 2 || a.to.size() != 2) throw Failure{kUsage, "--from and --to take i,j"};
            check(omg_gradient_between(m.get(), a.from[0], a.from[1], a.to[0], a.to[1], &g));
        } else {
            check(omg_column_difference(m.get(), 0, info_of(m.get()).nu - 1, &g));
        }
        std::cout << "delta_B " << num(g.delta_b_t * 1e6) << " uT (se " << num(g.se_delta_b_t * 1e6, 3)
                  << ") over " << num(g.dx_m * 1e6) << " um, G " << num(g.gradient_t_per_m)
                  << " T/m\n";
        did = true;
    }
    if (!did) throw Failure{kUsage, "gradient needs --eq7, --curves or --map"};
    return kOk;
}

// ---- scan ----

struct ScanArgs {
    std::string scenario, out;
    std::optional<double> x0;
    std::optional<std::uint64_t> seed;
};

int scan(const ScanArgs& a, const Common& c) {
    const Scenario sc = open_scenario(a.scenario, a.seed);
    if (a.x0) check(omg_scenario_set_scan_x0(sc.get(), *a.x0));
    omg_scan* s = nullptr;
    check(omg_scan_run(sc.get(), c.threads, &s));
    const Scan result(s);
    if (!a.out.empty()) check(omg_scan_write_csv(result.get(), a.out.c_str()));
    omg_scan_info si{};
    check(omg_scan_get_info(result.get(), &si));
    std::cout << "scan " << si.points << " points, " << si.detected << " detected\n"
              << "similarity " << num(si.similarity, 6) << " at x0 " << num(si.true_x0_m * 1e3) << " mm\n"
              << "fitted x0 " << num(si.fitted_x0_m * 1e3) << " mm, similarity " << num(si.fitted_similarity, 6)
              << "\n";
    return kOk;
}

// ---- compare ----

struct CompareArgs {
    std::string a, b, column, scenario;
    bool x0_search = false;
};

int compare(const CompareArgs& a, const Common&) {
    const Table ta = read_table(a.a);
    const Table tb = read_table(a.b);
    const std::vector<double> p = table_column(ta.get(), a.column);
    const std::vector<double> q = table_column(tb.get(), a.column);
    if (p.size() != q.size())
        throw Failure{kData, "series lengths differ: " + std::to_string(p.size()) + " vs " + std::to_string(q.size())};
    double s = 0.0;
    check(omg_similarity(p.data(), q.data(), p.size(), &s));
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", s);
    std::cout << "similarity " << buf << "\n";
    if (a.x0_search) {
        const Scenario sc = open_scenario(a.scenario, std::nullopt);
        double x0 = 0.0, best = 0.0;
        check(omg_fit_offset(sc.get(), p.data(), p.size(), &x0, &best));
        std::snprintf(buf, sizeof buf, "%.6f", best);
        std::cout << "x0 " << num(x0 * 1e3) << " mm, similarity " << buf << "\n";
    }
    return kOk;
}

// ---- selftest ----

void print_result(const omg_selftest_result* r, void*) {
    std::printf("[%s] %2d %-28s %7.2fs  %s\n", r->pass ? "PASS" : "FAIL", r->id, r->name, r->seconds, r->detail);
    std::fflush(stdout);
}

int selftest(const std::vector<int>& only, const Common& c) {
    int failed = 0;
    check(omg_selftest_run(only.data(), only.size(), c.threads, print_result, nullptr, &failed));
    std::printf("%d criteria failed\n", failed);
    return failed ? kData : kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"OLED-based magnetometry: simulation, ODMR map analysis and sensitivity tools"};
    app.require_subcommand(1);
    app.fallthrough();
    Common common;
    app.add_option("--threads", common.threads, "worker threads (0 = OLEDMAG_THREADS or all cores)")
        ->check(CLI::NonNegativeNumber);

    FieldArgs fa;
    auto* c_field = app.add_subcommand("simulate-field", "magnet field on the scenario plane -> field map CSV");
    c_field->add_option("--scenario", fa.scenario, "scenario JSON (default: built-in defaults)");
    c_field->add_option("--out", fa.out, "output CSV")->required();

    SynthArgs sa;
    auto* c_synth = app.add_subcommand("synth", "synthesize an ODMR image stack");
    c_synth->add_option("--scenario", sa.scenario, "scenario JSON");
    c_synth->add_option("--field", sa.field, "field map CSV on the camera grid (default: scenario ground truth)");
    c_synth->add_option("--seed", sa.seed, "override the scenario seed");
    c_synth->add_option("--out", sa.out, "output stack file")->required();

    AnalyzeArgs aa;
    auto* c_an = app.add_subcommand("analyze", "fit every super-pixel: resonance, SE and field maps");
    c_an->add_option("--stack", aa.stack, "stack file")->required();
    c_an->add_option("--n", aa.n, "binning size (default: scenario)")->check(CLI::PositiveNumber);
    c_an->add_option("--scenario", aa.scenario, "scenario JSON for gate, gamma and limits");
    c_an->add_option("--out-dir", aa.out_dir, "directory for map CSVs and PGM quick-looks");

    SensitivityArgs se;
    auto* c_se = app.add_subcommand("sensitivity", "field sensitivity from SE maps, stacks or shot-noise limits");
    c_se->add_option("--scenario", se.scenario, "scenario JSON (regions, gamma, T)");
    c_se->add_option("--se-map", se.se_map, "SE map CSV (Hz)");
    c_se->add_option("--stack", se.stack, "stack file; analysed at every --n");
    c_se->add_option("--n", se.sizes, "binning sizes for --stack")->delimiter(',');
    c_se->add_option("--out", se.out, "CSV of the per-n table");
    c_se->add_option("--t", se.t, "total measurement time, s");
    c_se->add_option("--se-hz", se.se_hz, "single standard error of the peak frequency, Hz");
    c_se->add_flag("--shot-noise", se.shot_noise, "shot-noise limit from --contrast --linewidth --rate --area");
    c_se->add_option("--contrast", se.contrast, "ODMR contrast")->capture_default_str();
    c_se->add_option("--linewidth", se.linewidth, "linewidth, Hz")->capture_default_str();
    c_se->add_option("--rate", se.rate, "photon rate, 1/(s m^2)")->capture_default_str();
    c_se->add_option("--area", se.area, "sensor area, m^2")->capture_default_str();

    GradientArgs ga;
    auto* c_gr = app.add_subcommand("gradient", "minimum detectable gradients and gradient estimates");
    c_gr->add_flag("--eq7", ga.eq7, "delta_G from --delta-b, --w and --dx");
    c_gr->add_option("--delta-b", ga.delta_b, "field uncertainty, T");
    c_gr->add_option("--w", ga.w, "sensor size, m");
    c_gr->add_option("--dx", ga.dx, "gap between the sensors, m");
    c_gr->add_option("--t", ga.t, "total measurement time, s");
    c_gr->add_option("--curves", ga.curves, "write curve family CSV (w_m,dx_m,eta_g)");
    c_gr->add_option("--widths", ga.widths, "sensor sizes for --curves, m")->delimiter(',');
    c_gr->add_option("--delta-bs", ga.delta_bs, "field uncertainty per size for --curves, T")->delimiter(',');
    c_gr->add_option("--dx-max", ga.dx_max, "largest gap, m")->capture_default_str();
    c_gr->add_option("--points", ga.points, "points per curve")->capture_default_str();
    c_gr->add_option("--map", ga.map, "field map CSV; end-column difference unless --from/--to");
    c_gr->add_option("--from", ga.from, "first entry i,j")->delimiter(',');
    c_gr->add_option("--to", ga.to, "second entry i,j")->delimiter(',');

    ScanArgs sc;
    auto* c_scan = app.add_subcommand("scan", "simulate a point-sensor scan past the scenario magnets");
    c_scan->add_option("--scenario", sc.scenario, "scenario JSON");
    c_scan->add_option("--x0", sc.x0, "starting offset, m");
    c_scan->add_option("--seed", sc.seed, "override the scenario seed");
    c_scan->add_option("--out", sc.out, "CSV: position_m,b_measured_T,b_model_T,se_T,detected");

    CompareArgs ca;
    auto* c_cmp = app.add_subcommand("compare", "similarity of two CSV series");
    c_cmp->add_option("a", ca.a, "first CSV")->required();
    c_cmp->add_option("b", ca.b, "second CSV")->required();
    c_cmp->add_option("--column", ca.column, "column to compare (default: value, else the second column, else the only one)");
    c_cmp->add_flag("--x0-search", ca.x0_search, "also fit the first series' starting offset against the scenario");
    c_cmp->add_option("--scenario", ca.scenario, "scenario JSON for --x0-search");

    std::vector<int> only;
    auto* c_self = app.add_subcommand("selftest", "run the acceptance suite");
    c_self->add_option("--only", only, "criterion ids")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n";
        const CLI::App* sub = nullptr;
        for (const CLI::App* s : app.get_subcommands()) sub = s;
        std::cerr << (sub ? sub->help() : app.help());
        return kUsage;
    }

    try {
        if (c_field->parsed()) return simulate_field(fa, common);
        if (c_synth->parsed()) return synth(sa, common);
        if (c_an->parsed()) return analyze(aa, common);
        if (c_se->parsed()) return sensitivity(se, common);
        if (c_gr->parsed()) return gradient(ga, common);
        if (c_scan->parsed()) return scan(sc, common);
        if (c_cmp->parsed()) return compare(ca, common);
        if (c_self->parsed()) return selftest(only, common);
    } catch (const Failure& f) {
        std::cerr << "error: " << f.message << "\n";
        return f.code;
    }
    return kUsage;
}
