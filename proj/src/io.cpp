#include "io.hpp"

#include "error.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

namespace oledmag {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    return f;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for reading");
    return f;
}

void finish_write(std::ostream& f, const std::string& path) {
    f.flush();
    if (!f) throw IoError("write to '" + path + "' failed");
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::uint64_t parse_u64(std::string_view text, const std::string& what) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw DataError("invalid integer for " + what + ": '" + std::string(text) + "'");
    return v;
}

void put_f32(std::string& buf, double v) {
    auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    char bytes[4];
    std::memcpy(bytes, &bits, 4);
    buf.append(bytes, 4);
}

double get_f32(const char* p) {
    std::uint32_t bits;
    std::memcpy(&bits, p, 4);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    return static_cast<double>(std::bit_cast<float>(bits));
}

// Ordered (key, value) header lines for an acquisition config.
std::vector<std::pair<std::string, std::string>> header_fields(const AcquisitionConfig& c) {
    std::string freqs;
    for (std::size_t k = 0; k < c.freqs.size(); ++k) {
        if (k) freqs += ' ';
        freqs += format_double(c.freqs[k]);
    }
    const auto d = [](double v) { return format_double(v); };
    return {
        {"version", std::to_string(kStackVersion)},
        {"dims", std::to_string(c.freqs.size()) + " " + std::to_string(c.height) + " " + std::to_string(c.width)},
        {"pitch_m", d(c.pitch)},
        {"freqs_hz", freqs},
        {"exposure_s", d(c.exposure)},
        {"sequences", std::to_string(c.sequences)},
        {"well_depth", d(c.well_depth)},
        {"quantum_efficiency", d(c.quantum_efficiency)},
        {"contrast_oled", d(c.contrast_oled)},
        {"contrast_diffusion", d(c.contrast_diffusion)},
        {"sigma1_hz", d(c.sigma1)},
        {"sigma2_hz", d(c.sigma2)},
        {"wobble_amplitude", d(c.wobble.amplitude)},
        {"wobble_period_hz", d(c.wobble.period)},
        {"wobble_phase_rad", d(c.wobble.phase)},
        {"noise_scale", d(c.noise_scale)},
        {"el_fluctuation", d(c.el_fluctuation)},
        {"brightness_plateau", d(c.brightness.plateau)},
        {"brightness_fade", d(c.brightness.fade)},
        {"brightness_far", d(c.brightness.far)},
        {"brightness_uniform", c.brightness.uniform ? "1" : "0"},
        {"outlier_fraction", d(c.outlier_fraction)},
        {"gamma_hz_per_t", d(c.gamma)},
        {"seed", std::to_string(c.seed)},
    };
}

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
    while (!text.empty() && (text.back() == '\r' || text.back() == ' ')) text.remove_suffix(1);
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
        throw DataError("invalid number '" + std::string(text) + "'");
    return v;
}

void write_stack(std::ostream& out, const ImageStack& stack) {
    stack.validate();
    std::string header = std::string(kStackMagic) + "\n";
    for (const auto& [k, v] : header_fields(stack.config)) header += k + " " + v + "\n";
    header.push_back('\0');

    std::string payload;
    payload.reserve((stack.on.size() + stack.off.size()) * 4);
    for (double v : stack.on) put_f32(payload, v);
    for (double v : stack.off) put_f32(payload, v);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
}

void write_stack(const std::string& path, const ImageStack& stack) {
    auto f = open_out(path);
    write_stack(f, stack);
    finish_write(f, path);
}

ImageStack read_stack(std::istream& in) {
    const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::size_t magic_len = std::strlen(kStackMagic);
    if (data.size() < magic_len + 1 || data.compare(0, magic_len, kStackMagic) != 0 || data[magic_len] != '\n')
        throw DataError("bad stack magic at byte 0 (expected '" + std::string(kStackMagic) + "')");
    const std::size_t nul = data.find('\0');
    if (nul == std::string::npos) throw DataError("stack header is not NUL-terminated (read " +
                                                  std::to_string(data.size()) + " bytes)");
    if (nul == 0 || data[nul - 1] != '\n')
        throw DataError("stack header must end with a newline before the NUL at byte " + std::to_string(nul));

    std::map<std::string, std::string> fields;
    std::size_t pos = magic_len + 1;
    while (pos < nul) {
        const std::size_t eol = data.find('\n', pos);
        const std::string line = data.substr(pos, eol - pos);
        const std::size_t sp = line.find(' ');
        if (sp == std::string::npos)
            throw DataError("malformed stack header line at byte " + std::to_string(pos) + ": '" + line + "'");
        fields[line.substr(0, sp)] = line.substr(sp + 1);
        pos = eol + 1;
    }
    const auto get = [&](const std::string& key) -> const std::string& {
        const auto it = fields.find(key);
        if (it == fields.end()) throw DataError("stack header is missing '" + key + "'");
        return it->second;
    };

    const auto version = parse_u64(get("version"), "version");
    if (version != static_cast<std::uint64_t>(kStackVersion))
        throw DataError("unsupported stack version " + std::to_string(version) + " (this build reads version " +
                        std::to_string(kStackVersion) + ")");

    AcquisitionConfig c;
    const auto dims = split(get("dims"), ' ');
    if (dims.size() != 3) throw DataError("stack dims must hold n_freq height width");
    const std::size_t n_freq = parse_u64(dims[0], "n_freq");
    c.height = parse_u64(dims[1], "height");
    c.width = parse_u64(dims[2], "width");
    c.pitch = parse_double(get("pitch_m"));
    c.freqs.clear();
    for (auto t : split(get("freqs_hz"), ' ')) c.freqs.push_back(parse_double(t));
    if (c.freqs.size() != n_freq)
        throw DataError("stack lists " + std::to_string(c.freqs.size()) + " frequencies but dims say " +
                        std::to_string(n_freq));
    c.exposure = parse_double(get("exposure_s"));
    c.sequences = static_cast<int>(parse_u64(get("sequences"), "sequences"));
    c.well_depth = parse_double(get("well_depth"));
    c.quantum_efficiency = parse_double(get("quantum_efficiency"));
    c.contrast_oled = parse_double(get("contrast_oled"));
    c.contrast_diffusion = parse_double(get("contrast_diffusion"));
    c.sigma1 = parse_double(get("sigma1_hz"));
    c.sigma2 = parse_double(get("sigma2_hz"));
    c.wobble.amplitude = parse_double(get("wobble_amplitude"));
    c.wobble.period = parse_double(get("wobble_period_hz"));
    c.wobble.phase = parse_double(get("wobble_phase_rad"));
    c.noise_scale = parse_double(get("noise_scale"));
    c.el_fluctuation = parse_double(get("el_fluctuation"));
    c.brightness.plateau = parse_double(get("brightness_plateau"));
    c.brightness.fade = parse_double(get("brightness_fade"));
    c.brightness.far = parse_double(get("brightness_far"));
    c.brightness.uniform = parse_u64(get("brightness_uniform"), "brightness_uniform") != 0;
    c.outlier_fraction = parse_double(get("outlier_fraction"));
    c.gamma = parse_double(get("gamma_hz_per_t"));
    c.seed = parse_u64(get("seed"), "seed");
    try {
        c.validate();
    } catch (const UsageError& e) {
        throw DataError(std::string("stack header: ") + e.what());
    }

    ImageStack stack;
    stack.config = c;
    const std::size_t count = n_freq * c.height * c.width;
    const std::size_t expected = 2 * count * 4;
    const std::size_t actual = data.size() - (nul + 1);
    if (actual != expected)
        throw DataError("stack payload starting at byte " + std::to_string(nul + 1) + " has " +
                        std::to_string(actual) + " bytes, expected " + std::to_string(expected));
    const char* p = data.data() + nul + 1;
    stack.on.resize(count);
    stack.off.resize(count);
    for (std::size_t k = 0; k < count; ++k) stack.on[k] = get_f32(p + 4 * k);
    for (std::size_t k = 0; k < count; ++k) stack.off[k] = get_f32(p + 4 * (count + k));
    for (std::size_t k = 0; k < count; ++k)
        if (!(stack.on[k] >= 0.0) || !(stack.off[k] >= 0.0))
            throw DataError("negative or non-finite count in stack payload at value " + std::to_string(k));
    return stack;
}

ImageStack read_stack(const std::string& path) {
    auto f = open_in(path);
    return read_stack(f);
}

void write_map_csv(std::ostream& out, const Map2D& map) {
    map.validate();
    std::string text = "i,j,x_m,y_m,value,se,valid\n";
    for (std::size_t j = 0; j < map.nv; ++j) {
        for (std::size_t i = 0; i < map.nu; ++i) {
            const std::size_t k = map.index(i, j);
            text += std::to_string(i) + ',' + std::to_string(j) + ',' + format_double(map.x(i)) + ',' +
                    format_double(map.y(j)) + ',' + format_double(map.values[k]) + ',' + format_double(map.se[k]) +
                    ',' + (map.valid[k] ? '1' : '0') + '\n';
        }
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

void write_map_csv(const std::string& path, const Map2D& map) {
    auto f = open_out(path);
    write_map_csv(f, map);
    finish_write(f, path);
}

Map2D read_map_csv(std::istream& in) {
    const CsvTable t = read_csv(in);
    const std::vector<std::string> expected = {"i", "j", "x_m", "y_m", "value", "se", "valid"};
    if (t.columns != expected) throw DataError("map CSV header must be 'i,j,x_m,y_m,value,se,valid'");
    if (t.rows.empty()) throw DataError("map CSV has no rows");
    std::size_t nu = 0, nv = 0;
    for (const auto& r : t.rows) {
        if (r[0] < 0 || r[1] < 0 || r[0] != std::floor(r[0]) || r[1] != std::floor(r[1]))
            throw DataError("map CSV indices must be non-negative integers");
        nu = std::max(nu, static_cast<std::size_t>(r[0]) + 1);
        nv = std::max(nv, static_cast<std::size_t>(r[1]) + 1);
    }
    if (t.rows.size() != nu * nv)
        throw DataError("map CSV has " + std::to_string(t.rows.size()) + " rows for a " + std::to_string(nu) + "x" +
                        std::to_string(nv) + " map");
    Map2D m;
    m.nu = nu;
    m.nv = nv;
    m.values.assign(nu * nv, 0.0);
    m.se.assign(nu * nv, 0.0);
    m.valid.assign(nu * nv, 0);
    std::vector<std::uint8_t> seen(nu * nv, 0);
    for (const auto& r : t.rows) {
        const auto i = static_cast<std::size_t>(r[0]);
        const auto j = static_cast<std::size_t>(r[1]);
        const std::size_t k = m.index(i, j);
        if (seen[k]) throw DataError("map CSV repeats entry (" + std::to_string(i) + ", " + std::to_string(j) + ")");
        seen[k] = 1;
        if (i == 0 && j == 0) m.super_pixel_size = 2.0 * r[2];
        m.values[k] = r[4];
        m.se[k] = r[5];
        if (r[6] != 0.0 && r[6] != 1.0) throw DataError("map CSV valid flag must be 0 or 1");
        m.valid[k] = r[6] != 0.0 ? 1 : 0;
    }
    if (!(m.super_pixel_size > 0.0)) throw DataError("map CSV coordinates must be positive");
    return m;
}

Map2D read_map_csv(const std::string& path) {
    auto f = open_in(path);
    return read_map_csv(f);
}

Map2D field_grid_as_map(const FieldGrid& grid) {
    grid.validate();
    Map2D m;
    m.nu = grid.nu;
    m.nv = grid.nv;
    m.super_pixel_size = grid.pitch;
    m.values = grid.values;
    m.se.assign(grid.values.size(), 0.0);
    m.valid.assign(grid.values.size(), 1);
    return m;
}

FieldGrid map_as_field_grid(const Map2D& map) {
    map.validate();
    FieldGrid g;
    g.nu = map.nu;
    g.nv = map.nv;
    g.pitch = map.super_pixel_size;
    g.values = map.values;
    for (std::size_t k = 0; k < map.size(); ++k)
        if (!map.valid[k] || !(map.values[k] >= 0.0))
            throw DataError("field map entry " + std::to_string(k) + " is invalid or negative");
    return g;
}

void write_pgm(std::ostream& out, const Map2D& map, double low, double high) {
    map.validate();
    if (!(low < high)) throw UsageError("PGM scale needs low < high");
    std::string text = "P5\n" + std::to_string(map.nu) + " " + std::to_string(map.nv) + "\n65535\n";
    for (std::size_t k = 0; k < map.size(); ++k) {
        std::uint16_t v = 0;
        if (map.valid[k] && std::isfinite(map.values[k])) {
            const double t = std::clamp((map.values[k] - low) / (high - low), 0.0, 1.0);
            v = static_cast<std::uint16_t>(1 + std::lround(t * 65534.0));
        }
        text.push_back(static_cast<char>(v >> 8));
        text.push_back(static_cast<char>(v & 0xff));
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

void write_pgm(const std::string& path, const Map2D& map, double low, double high) {
    auto f = open_out(path);
    write_pgm(f, map, low, high);
    finish_write(f, path);
}

std::vector<double> CsvTable::column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw DataError("CSV has no column '" + name + "'");
    return column(static_cast<std::size_t>(it - columns.begin()));
}

std::vector<double> CsvTable::column(std::size_t index) const {
    if (index >= columns.size()) throw DataError("CSV has no column " + std::to_string(index));
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[index]);
    return out;
}

void write_csv(std::ostream& out, const CsvTable& table) {
    std::string text;
    for (std::size_t c = 0; c < table.columns.size(); ++c) text += (c ? "," : "") + table.columns[c];
    text += '\n';
    for (const auto& r : table.rows) {
        if (r.size() != table.columns.size()) throw UsageError("CSV row width does not match the header");
        for (std::size_t c = 0; c < r.size(); ++c) text += (c ? "," : "") + format_double(r[c]);
        text += '\n';
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

void write_csv(const std::string& path, const CsvTable& table) {
    auto f = open_out(path);
    write_csv(f, table);
    finish_write(f, path);
}

CsvTable read_csv(std::istream& in) {
    CsvTable t;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (t.columns.empty()) {
            for (auto c : cells) t.columns.emplace_back(c);
            continue;
        }
        if (cells.size() != t.columns.size())
            throw DataError("CSV line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                            " cells, expected " + std::to_string(t.columns.size()));
        std::vector<double> row;
        row.reserve(cells.size());
        for (auto c : cells) {
            try {
                row.push_back(parse_double(c));
            } catch (const DataError&) {
                throw DataError("CSV line " + std::to_string(line_no) + ": invalid number '" + std::string(c) + "'");
            }
        }
        t.rows.push_back(std::move(row));
    }
    if (t.columns.empty()) throw DataError("CSV is empty");
    return t;
}

CsvTable read_csv(const std::string& path) {
    auto f = open_in(path);
    return read_csv(f);
}

}  // namespace oledmag
