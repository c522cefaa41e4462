#pragma once

// File formats: the binary stack container, CSV maps and series, and 16-bit
// PGM quick-looks. Every writer is a deterministic function of its input.

#include "magnetostatics.hpp"
#include "pipeline.hpp"
#include "synth.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace oledmag {

inline constexpr const char* kStackMagic = "ODMRSTK1";
inline constexpr int kStackVersion = 1;

// Header: UTF-8 "key value" lines starting with the magic, terminated by "\n\0".
// Payload: little-endian float32, on frames then off frames, each
// frequency-major and row-major. Counts are narrowed to float32 on write.
void write_stack(std::ostream& out, const ImageStack& stack);
void write_stack(const std::string& path, const ImageStack& stack);
ImageStack read_stack(std::istream& in);
ImageStack read_stack(const std::string& path);

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);

// "i,j,x_m,y_m,value,se,valid" with one row per entry, j-major.
void write_map_csv(std::ostream& out, const Map2D& map);
void write_map_csv(const std::string& path, const Map2D& map);
Map2D read_map_csv(std::istream& in);
Map2D read_map_csv(const std::string& path);

// Field grids use the map layout with se = 0 and valid = 1.
Map2D field_grid_as_map(const FieldGrid& grid);
FieldGrid map_as_field_grid(const Map2D& map);

// 16-bit binary PGM. Valid values are scaled linearly from [low, high] onto
// [1, 65535] and clamped; invalid entries are written as 0. Row j = 0 comes first.
void write_pgm(std::ostream& out, const Map2D& map, double low, double high);
void write_pgm(const std::string& path, const Map2D& map, double low, double high);

// Simple CSV table with a header row; every cell must be numeric.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::vector<double> column(const std::string& name) const;
    std::vector<double> column(std::size_t index) const;
};

void write_csv(std::ostream& out, const CsvTable& table);
void write_csv(const std::string& path, const CsvTable& table);
CsvTable read_csv(std::istream& in);
CsvTable read_csv(const std::string& path);

}  // namespace oledmag
