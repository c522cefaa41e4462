#include "scenario.hpp"

#include "error.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace oledmag {

namespace {

using nlohmann::json;

// Reads optional members of one JSON object and rejects keys nobody asked for.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw DataError(path_ + " must be an object");
    }
    ~Section() noexcept(false) {
        if (std::uncaught_exceptions() > 0) return;
        for (const auto& [k, v] : j_.items())
            if (!used_.count(k)) throw DataError("unknown key " + path_ + "." + k);
    }
    Section(const Section&) = delete;
    Section& operator=(const Section&) = delete;

    const json* find(const std::string& key) {
        used_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }
    std::string where(const std::string& key) const { return path_ + "." + key; }

    void number(const std::string& key, double& out) {
        if (const json* v = find(key)) {
            if (!v->is_number()) throw DataError(where(key) + " must be a number");
            out = v->get<double>();
            if (!std::isfinite(out)) throw DataError(where(key) + " must be finite");
        }
    }
    template <class Int>
    void integer(const std::string& key, Int& out) {
        if (const json* v = find(key)) {
            if (!v->is_number_integer()) throw DataError(where(key) + " must be an integer");
            if (v->is_number_unsigned()) {
                out = static_cast<Int>(v->get<std::uint64_t>());
            } else {
                const auto s = v->get<std::int64_t>();
                if (s < 0 && std::is_unsigned_v<Int>) throw DataError(where(key) + " must be non-negative");
                out = static_cast<Int>(s);
            }
        }
    }
    void boolean(const std::string& key, bool& out) {
        if (const json* v = find(key)) {
            if (!v->is_boolean()) throw DataError(where(key) + " must be true or false");
            out = v->get<bool>();
        }
    }
    void string(const std::string& key, std::string& out) {
        if (const json* v = find(key)) {
            if (!v->is_string()) throw DataError(where(key) + " must be a string");
            out = v->get<std::string>();
        }
    }
    void vec3(const std::string& key, Vec3& out) {
        if (const json* v = find(key)) {
            if (!v->is_array() || v->size() != 3) throw DataError(where(key) + " must be a 3-element array");
            for (int i = 0; i < 3; ++i) {
                if (!(*v)[i].is_number()) throw DataError(where(key) + " must hold numbers");
                out[i] = (*v)[i].get<double>();
            }
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

std::vector<double> parse_freqs(const json& v, const std::string& path) {
    if (v.is_array()) {
        std::vector<double> f;
        for (const auto& x : v) {
            if (!x.is_number()) throw DataError(path + " must hold numbers");
            f.push_back(x.get<double>());
        }
        return f;
    }
    Section s(v, path);
    double start = 0.0, step = 0.0;
    std::size_t count = 0;
    if (!s.find("start_hz") || !s.find("step_hz") || !s.find("count"))
        throw DataError(path + " needs start_hz, step_hz and count");
    s.number("start_hz", start);
    s.number("step_hz", step);
    s.integer("count", count);
    if (count < 1 || !(step > 0.0)) throw DataError(path + " needs count >= 1 and step_hz > 0");
    std::vector<double> f(count);
    for (std::size_t k = 0; k < count; ++k) f[k] = start + step * static_cast<double>(k);
    return f;
}

void parse_acquisition(const json& j, AcquisitionConfig& c) {
    Section s(j, "acquisition");
    s.integer("width", c.width);
    s.integer("height", c.height);
    s.number("pitch_m", c.pitch);
    if (const json* f = s.find("freqs")) c.freqs = parse_freqs(*f, s.where("freqs"));
    s.number("exposure_s", c.exposure);
    s.integer("sequences", c.sequences);
    s.number("well_depth", c.well_depth);
    s.number("quantum_efficiency", c.quantum_efficiency);
    s.number("contrast_oled", c.contrast_oled);
    s.number("contrast_diffusion", c.contrast_diffusion);
    s.number("sigma1_hz", c.sigma1);
    s.number("sigma2_hz", c.sigma2);
    if (const json* w = s.find("wobble")) {
        Section ws(*w, s.where("wobble"));
        ws.number("amplitude", c.wobble.amplitude);
        ws.number("period_hz", c.wobble.period);
        ws.number("phase_rad", c.wobble.phase);
    }
    s.number("noise_scale", c.noise_scale);
    s.number("el_fluctuation", c.el_fluctuation);
    if (const json* b = s.find("brightness")) {
        Section bs(*b, s.where("brightness"));
        bs.number("plateau", c.brightness.plateau);
        bs.number("fade", c.brightness.fade);
        bs.number("far", c.brightness.far);
        bs.boolean("uniform", c.brightness.uniform);
    }
    s.number("outlier_fraction", c.outlier_fraction);
    s.integer("seed", c.seed);
}

CylindricalMagnet parse_magnet(const json& j, const std::string& path, int& count) {
    Section s(j, path);
    std::string preset = "cylinder2_n45";
    s.string("preset", preset);
    CylindricalMagnet m;
    if (preset == "cylinder1_n48") {
        m = cylinder1_n48();
    } else if (preset == "cylinder2_n45") {
        m = cylinder2_n45();
    } else if (preset == "custom") {
        m.diameter = m.length = m.remanence_br = 0.0;
    } else {
        throw DataError(s.where("preset") + " must be cylinder1_n48, cylinder2_n45 or custom");
    }
    s.number("diameter_m", m.diameter);
    s.number("length_m", m.length);
    s.number("br_t", m.remanence_br);
    s.vec3("center_m", m.center);
    s.vec3("axis", m.axis);
    s.integer("count", count);
    try {
        m.validate();
    } catch (const Error& e) {
        throw DataError(path + ": " + e.what());
    }
    return m;
}

void parse_sweep(const json& j, SweepConfig& c, const std::string& path) {
    Section s(j, path);
    s.number("amplitude", c.amplitude);
    s.number("sigma1_hz", c.sigma1);
    s.number("sigma2_hz", c.sigma2);
    s.number("lockin_phase_rad", c.lockin_phase);
    s.number("wobble_amplitude", c.wobble_amplitude);
    s.number("wobble_period_hz", c.wobble_period);
    s.number("wobble_phase_rad", c.wobble_phase);
    s.number("noise_sigma", c.noise_sigma);
    s.number("angular_floor", c.angular.floor_fraction);
    s.number("phi_rad", c.phi);
    s.integer("seed", c.seed);
}

}  // namespace

std::vector<double> ScanSettings::positions() const {
    if (!(step_m > 0.0) || !(stop_m >= start_m)) throw UsageError("scan needs step > 0 and stop >= start");
    const auto n = static_cast<std::size_t>(std::floor((stop_m - start_m) / step_m + 1e-9)) + 1;
    std::vector<double> p(n);
    for (std::size_t k = 0; k < n; ++k) p[k] = start_m + step_m * static_cast<double>(k);
    return p;
}

std::vector<double> ScanSettings::x0_grid() const { return offset_grid(x0_lo_m, x0_hi_m, x0_step_m); }

DeviceRegions Scenario::device_regions() const {
    return regions ? *regions : DeviceRegions::centered(acquisition);
}

ScanGeometry Scenario::scan_geometry() const {
    ScanGeometry g = scan.direction == ScanSettings::Direction::axial
                         ? axial_scan(magnets.magnets, scan.distance_m, scan.positions())
                         : lateral_scan(magnets.magnets, scan.distance_m, scan.lateral, scan.positions());
    g.quadrature_order = magnets.quadrature_order;
    return g;
}

FieldGrid Scenario::ground_truth_field(int threads) const {
    switch (field.kind) {
        case GroundTruthField::Kind::uniform:
            return uniform_field(acquisition, field.center_t);
        case GroundTruthField::Kind::gradient:
            return planar_gradient_field(acquisition, field.center_t, field.gradient_t_per_m);
        case GroundTruthField::Kind::magnets:
            break;
    }
    FieldGrid g = magnets.plane;
    g.pitch = acquisition.pitch;
    g.nu = acquisition.width;
    g.nv = acquisition.height;
    return field_map(magnets.magnets, g, magnets.quadrature_order, threads);
}

Scenario default_scenario() {
    Scenario s;
    s.magnets.magnets = {cylinder2_n45()};
    s.magnets.magnets[0].axis = Vec3::UnitX();
    const CylindricalMagnet& m = s.magnets.magnets[0];
    FieldGrid& g = s.magnets.plane;
    g.pitch = 0.25e-3;
    g.nu = 57;   // 14.0 mm along the axis
    g.nv = 145;  // 36.0 mm across it
    g.u_axis = Vec3::UnitX();
    g.v_axis = Vec3::UnitY();
    g.origin = m.center + Vec3(0.5 * m.length + 10.0e-3, -18.0e-3, 0.0);
    s.scan.sweep.gamma = s.gyro.gamma;
    s.scan.sweep.noise_sigma = 0.02;
    return s;
}

Scenario parse_scenario(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("scenario is not valid JSON: ") + e.what());
    }
    Scenario sc = default_scenario();
    Section s(root, "scenario");
    std::string name;
    s.string("name", name);
    s.string("description", name);

    if (const json* g = s.find("gyro")) {
        Section gs(*g, "gyro");
        double gamma = sc.gyro.gamma;
        gs.number("gamma_hz_per_t", gamma);
        if (!(gamma > 0.0)) throw DataError("gyro.gamma_hz_per_t must be positive");
        sc.gyro = GyroConstant(gamma);
    }
    sc.acquisition.gamma = sc.gyro.gamma;
    sc.scan.sweep.gamma = sc.gyro.gamma;

    if (const json* a = s.find("acquisition")) parse_acquisition(*a, sc.acquisition);
    try {
        sc.acquisition.validate();
    } catch (const Error& e) {
        throw DataError(std::string("acquisition: ") + e.what());
    }

    if (const json* r = s.find("regions")) {
        Section rs(*r, "regions");
        DeviceRegions reg = DeviceRegions::centered(sc.acquisition);
        rs.number("r1_m", reg.r1);
        rs.number("r_oled_m", reg.r_oled);
        rs.number("r2_m", reg.r2);
        rs.number("r3_m", reg.r3);
        if (const json* c = rs.find("center_m")) {
            if (!c->is_array() || c->size() != 2 || !(*c)[0].is_number() || !(*c)[1].is_number())
                throw DataError("regions.center_m must be a 2-element number array");
            reg.center = Eigen::Vector2d((*c)[0].get<double>(), (*c)[1].get<double>());
        }
        try {
            reg.validate();
        } catch (const Error& e) {
            throw DataError(std::string("regions: ") + e.what());
        }
        sc.regions = reg;
    }

    if (const json* f = s.find("field")) {
        Section fs(*f, "field");
        std::string kind = "gradient";
        fs.string("kind", kind);
        if (kind == "uniform") {
            sc.field.kind = GroundTruthField::Kind::uniform;
        } else if (kind == "gradient") {
            sc.field.kind = GroundTruthField::Kind::gradient;
        } else if (kind == "magnets") {
            sc.field.kind = GroundTruthField::Kind::magnets;
        } else {
            throw DataError("field.kind must be uniform, gradient or magnets");
        }
        fs.number("center_t", sc.field.center_t);
        fs.number("gradient_t_per_m", sc.field.gradient_t_per_m);
        if (sc.field.kind == GroundTruthField::Kind::uniform) sc.field.gradient_t_per_m = 0.0;
    }

    if (const json* a = s.find("analysis")) {
        Section as(*a, "analysis");
        AnalysisSettings& an = sc.analysis;
        as.integer("binning", an.binning);
        std::string mode = "normalized";
        as.string("contrast_mode", mode);
        if (mode == "normalized") {
            an.mode = ContrastMode::normalized;
        } else if (mode == "absolute") {
            an.mode = ContrastMode::absolute;
        } else {
            throw DataError("analysis.contrast_mode must be normalized or absolute");
        }
        as.number("min_peak_significance", an.min_peak_significance);
        if (const json* g = as.find("gate_hz")) {
            if (!g->is_array() || g->size() != 2 || !(*g)[0].is_number() || !(*g)[1].is_number())
                throw DataError("analysis.gate_hz must be [low, high]");
            an.gate_low_hz = (*g)[0].get<double>();
            an.gate_high_hz = (*g)[1].get<double>();
        }
        as.integer("k_max", an.k_max);
        as.number("t_total_s", an.t_total_s);
        as.number("max_nonconverged_fraction", an.max_nonconverged_fraction);
        if (an.binning < 1) throw DataError("analysis.binning must be >= 1");
        if (!(an.gate_low_hz < an.gate_high_hz)) throw DataError("analysis.gate_hz needs low < high");
        if (an.k_max < 1) throw DataError("analysis.k_max must be >= 1");
        if (!(an.t_total_s > 0.0)) throw DataError("analysis.t_total_s must be positive");
    }

    if (const json* m = s.find("magnets")) {
        Section ms(*m, "magnets");
        if (const json* list = ms.find("list")) {
            if (!list->is_array() || list->empty()) throw DataError("magnets.list must be a non-empty array");
            sc.magnets.magnets.clear();
            for (std::size_t k = 0; k < list->size(); ++k) {
                int count = 1;
                const CylindricalMagnet mag =
                    parse_magnet((*list)[k], "magnets.list[" + std::to_string(k) + "]", count);
                if (count < 1) throw DataError("magnets.list[" + std::to_string(k) + "].count must be >= 1");
                for (const auto& piece : coaxial_stack(mag, count)) sc.magnets.magnets.push_back(piece);
            }
        }
        if (const json* p = ms.find("plane")) {
            Section ps(*p, "magnets.plane");
            FieldGrid& g = sc.magnets.plane;
            ps.vec3("origin_m", g.origin);
            ps.vec3("u_axis", g.u_axis);
            ps.vec3("v_axis", g.v_axis);
            ps.number("pitch_m", g.pitch);
            ps.integer("nu", g.nu);
            ps.integer("nv", g.nv);
        }
        ms.integer("quadrature_order", sc.magnets.quadrature_order);
        if (sc.magnets.quadrature_order < 1 || sc.magnets.quadrature_order > 1024)
            throw DataError("magnets.quadrature_order must be within [1, 1024]");
    }

    if (const json* sj = s.find("scan")) {
        Section ss(*sj, "scan");
        ScanSettings& sn = sc.scan;
        std::string dir = "axial";
        ss.string("direction", dir);
        if (dir == "axial") {
            sn.direction = ScanSettings::Direction::axial;
        } else if (dir == "lateral") {
            sn.direction = ScanSettings::Direction::lateral;
        } else {
            throw DataError("scan.direction must be axial or lateral");
        }
        ss.number("distance_m", sn.distance_m);
        ss.vec3("lateral", sn.lateral);
        ss.number("x0_m", sn.x0_m);
        ss.number("start_m", sn.start_m);
        ss.number("stop_m", sn.stop_m);
        ss.number("step_m", sn.step_m);
        ss.number("x0_lo_m", sn.x0_lo_m);
        ss.number("x0_hi_m", sn.x0_hi_m);
        ss.number("x0_step_m", sn.x0_step_m);
        ss.number("half_span_hz", sn.options.half_span);
        ss.integer("points", sn.options.points);
        ss.number("window_shift", sn.options.window_shift);
        if (const json* sw = ss.find("sweep")) parse_sweep(*sw, sn.sweep, "scan.sweep");
        if (!(sn.step_m > 0.0) || !(sn.stop_m >= sn.start_m)) throw DataError("scan needs step_m > 0, stop_m >= start_m");
        if (!(sn.x0_step_m > 0.0) || !(sn.x0_hi_m >= sn.x0_lo_m)) throw DataError("scan x0 grid is empty");
    }
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open scenario '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_scenario(ss.str());
}

}  // namespace oledmag
