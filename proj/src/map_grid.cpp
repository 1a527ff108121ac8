#include "magnav/map_grid.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "magnav/errors.hpp"

namespace magnav {
namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

double parse_number(const std::string& token, std::size_t line) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(token, &pos);
        if (pos != token.size()) {
            throw ParseError("trailing characters in number '" + token + "'", line);
        }
        return v;
    } catch (const std::invalid_argument&) {
        throw ParseError("not a number: '" + token + "'", line);
    } catch (const std::out_of_range&) {
        throw ParseError("number out of range: '" + token + "'", line);
    }
}

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string tok;
    std::istringstream in(line);
    while (std::getline(in, tok, ',')) {
        // trim
        const auto b = tok.find_first_not_of(" \t\r");
        const auto e = tok.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : tok.substr(b, e - b + 1));
    }
    return out;
}

/// Stores one parsed data row (north row first on disk) into south-first
/// storage order.
void store_row(std::vector<double>& values, const std::vector<std::string>& tokens, int file_row,
               int n_rows, int n_cols, std::size_t line_no) {
    if (static_cast<int>(tokens.size()) != n_cols) {
        throw ParseError("expected " + std::to_string(n_cols) + " values in row, got " +
                             std::to_string(tokens.size()),
                         line_no);
    }
    const int store_row_idx = n_rows - 1 - file_row;
    for (int col = 0; col < n_cols; ++col) {
        values[static_cast<std::size_t>(store_row_idx) * n_cols + col] =
            parse_number(tokens[col], line_no);
    }
}

std::vector<double> read_rows(std::istream& in, int n_rows, int n_cols, bool csv,
                              std::size_t& line_no) {
    std::vector<double> values(static_cast<std::size_t>(n_rows) * n_cols, 0.0);
    std::string line;
    for (int file_row = 0; file_row < n_rows; ++file_row) {
        if (!std::getline(in, line)) {
            throw ParseError("expected " + std::to_string(n_rows) + " data rows, got " +
                                 std::to_string(file_row),
                             line_no);
        }
        ++line_no;
        store_row(values, csv ? split_csv(line) : split_ws(line), file_row, n_rows, n_cols,
                  line_no);
    }
    return values;
}

MapGrid load_ascii(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open map file: " + path.string());

    double xll = 0.0, yll = 0.0, cell = 0.0, nodata = MapGrid::kDefaultNodata;
    int n_rows = -1, n_cols = -1;
    bool have_xll = false, have_yll = false, have_cell = false;

    std::size_t line_no = 0;
    std::string line;
    std::vector<std::string> first_data_row;
    // Header lines start with a keyword; the first line whose leading token
    // is numeric begins the data block.
    while (std::getline(in, line)) {
        ++line_no;
        const auto tokens = split_ws(line);
        if (tokens.empty()) continue;
        if (!std::isalpha(static_cast<unsigned char>(tokens[0][0]))) {
            first_data_row = tokens;
            break;
        }
        if (tokens.size() != 2) throw ParseError("malformed header line", line_no);
        const std::string key = lower(tokens[0]);
        const double v = parse_number(tokens[1], line_no);
        if (key == "ncols") n_cols = static_cast<int>(v);
        else if (key == "nrows") n_rows = static_cast<int>(v);
        else if (key == "xllcorner") { xll = v; have_xll = true; }
        else if (key == "yllcorner") { yll = v; have_yll = true; }
        else if (key == "cellsize") { cell = v; have_cell = true; }
        else if (key == "nodata_value") nodata = v;
        else throw ParseError("unknown header key '" + tokens[0] + "'", line_no);
    }
    if (n_cols < 0 || n_rows < 0 || !have_xll || !have_yll || !have_cell) {
        throw ParseError("incomplete header (need ncols, nrows, xllcorner, yllcorner, cellsize)",
                         line_no == 0 ? 1 : line_no);
    }
    if (n_rows < 2 || n_cols < 2) throw ParseError("grid must be at least 2x2", line_no);
    if (!(cell > 0.0)) throw ParseError("cellsize must be positive", line_no);
    if (first_data_row.empty()) throw ParseError("no data rows", line_no);

    std::vector<double> values(static_cast<std::size_t>(n_rows) * n_cols, 0.0);
    store_row(values, first_data_row, 0, n_rows, n_cols, line_no);
    for (int file_row = 1; file_row < n_rows; ++file_row) {
        if (!std::getline(in, line)) {
            throw ParseError("expected " + std::to_string(n_rows) + " data rows, got " +
                                 std::to_string(file_row),
                             line_no);
        }
        ++line_no;
        store_row(values, split_ws(line), file_row, n_rows, n_cols, line_no);
    }
    return MapGrid({yll, xll, 0.0}, cell, n_rows, n_cols, std::move(values), nodata);
}

MapGrid load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open map file: " + path.string());

    std::size_t line_no = 0;
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty file", 1);
    ++line_no;
    const auto header = split_csv(line);
    if (header.size() != 6) {
        throw ParseError("header must be lat0,lon0,cell_size,n_rows,n_cols,nodata", line_no);
    }
    const double lat0 = parse_number(header[0], line_no);
    const double lon0 = parse_number(header[1], line_no);
    const double cell = parse_number(header[2], line_no);
    const int n_rows = static_cast<int>(parse_number(header[3], line_no));
    const int n_cols = static_cast<int>(parse_number(header[4], line_no));
    const double nodata = parse_number(header[5], line_no);
    if (n_rows < 2 || n_cols < 2) throw ParseError("grid must be at least 2x2", line_no);
    if (!(cell > 0.0)) throw ParseError("cell_size must be positive", line_no);

    auto values = read_rows(in, n_rows, n_cols, /*csv=*/true, line_no);
    return MapGrid({lat0, lon0, 0.0}, cell, n_rows, n_cols, std::move(values), nodata);
}

void write_value(std::FILE* f, double v, char sep) {
    // %.17g survives a text round trip bit-for-bit for doubles.
    std::fprintf(f, "%.17g%c", v, sep);
}

}  // namespace

MapGrid::MapGrid(GeoPosition origin, double cell_size, int n_rows, int n_cols,
                 std::vector<double> values, double nodata)
    : origin_(origin),
      cell_size_(cell_size),
      n_rows_(n_rows),
      n_cols_(n_cols),
      nodata_(nodata),
      values_(std::move(values)) {
    validate(origin_);
    if (n_rows_ < 2 || n_cols_ < 2) throw ConfigError("map grid must be at least 2x2");
    if (!(cell_size_ > 0.0)) throw ConfigError("map cell size must be positive");
    if (values_.size() != static_cast<std::size_t>(n_rows_) * n_cols_) {
        throw ConfigError("map values length " + std::to_string(values_.size()) +
                          " does not match " + std::to_string(n_rows_) + "x" +
                          std::to_string(n_cols_));
    }
    refresh_stats();
}

void MapGrid::refresh_stats() {
    min_value_ = std::numeric_limits<double>::infinity();
    max_value_ = -std::numeric_limits<double>::infinity();
    nodata_count_ = 0;
    for (double v : values_) {
        if (v == nodata_) {
            ++nodata_count_;
            continue;
        }
        if (!std::isfinite(v)) throw ConfigError("map contains a non-finite value");
        min_value_ = std::min(min_value_, v);
        max_value_ = std::max(max_value_, v);
    }
    if (nodata_count_ == static_cast<long>(values_.size())) {
        throw ConfigError("map contains only nodata cells");
    }
}

MapGrid MapGrid::load(const std::filesystem::path& path, GridFormat format) {
    return format == GridFormat::kAsciiGrid ? load_ascii(path) : load_csv(path);
}

MapGrid MapGrid::load_auto(const std::filesystem::path& path) {
    return load(path, lower(path.extension().string()) == ".csv" ? GridFormat::kCsv
                                                                 : GridFormat::kAsciiGrid);
}

void MapGrid::save_csv(const std::filesystem::path& path) const {
    std::FILE* f = std::fopen(path.string().c_str(), "w");
    if (!f) throw ConfigError("cannot write " + path.string());
    std::fprintf(f, "%.17g,%.17g,%.17g,%d,%d,%.17g\n", origin_.lat, origin_.lon, cell_size_,
                 n_rows_, n_cols_, nodata_);
    for (int file_row = 0; file_row < n_rows_; ++file_row) {
        const int row = n_rows_ - 1 - file_row;  // north first on disk
        for (int col = 0; col < n_cols_; ++col) {
            write_value(f, value(row, col), col + 1 == n_cols_ ? '\n' : ',');
        }
    }
    std::fclose(f);
}

void MapGrid::save_ascii(const std::filesystem::path& path) const {
    std::FILE* f = std::fopen(path.string().c_str(), "w");
    if (!f) throw ConfigError("cannot write " + path.string());
    std::fprintf(f, "ncols %d\nnrows %d\nxllcorner %.17g\nyllcorner %.17g\ncellsize %.17g\n"
                 "NODATA_value %.17g\n",
                 n_cols_, n_rows_, origin_.lon, origin_.lat, cell_size_, nodata_);
    for (int file_row = 0; file_row < n_rows_; ++file_row) {
        const int row = n_rows_ - 1 - file_row;
        for (int col = 0; col < n_cols_; ++col) {
            write_value(f, value(row, col), col + 1 == n_cols_ ? '\n' : ' ');
        }
    }
    std::fclose(f);
}

std::pair<int, int> MapGrid::cell_containing(const Eigen::Vector2d& ne) const {
    const int row = std::clamp(static_cast<int>(std::floor(ne.x() / cell_size_)), 0, n_rows_ - 1);
    const int col = std::clamp(static_cast<int>(std::floor(ne.y() / cell_size_)), 0, n_cols_ - 1);
    return {row, col};
}

double MapGrid::sample(const Eigen::Vector2d& ne) const {
    if (!in_bounds(ne)) {
        throw BoundsError("sample point (" + std::to_string(ne.x()) + ", " +
                          std::to_string(ne.y()) + ") outside map extent");
    }
    // Continuous coordinates on the cell-centre lattice, clamped so the edge
    // margin extrapolates with the nearest centre value.
    const double gr = std::clamp(ne.x() / cell_size_ - 0.5, 0.0, static_cast<double>(n_rows_ - 1));
    const double gc = std::clamp(ne.y() / cell_size_ - 0.5, 0.0, static_cast<double>(n_cols_ - 1));
    const int r0 = std::min(static_cast<int>(gr), n_rows_ - 2);
    const int c0 = std::min(static_cast<int>(gc), n_cols_ - 2);
    const double fr = gr - r0;
    const double fc = gc - c0;

    const double w[4] = {(1 - fr) * (1 - fc), (1 - fr) * fc, fr * (1 - fc), fr * fc};
    const int rows[4] = {r0, r0, r0 + 1, r0 + 1};
    const int cols[4] = {c0, c0 + 1, c0, c0 + 1};
    double acc = 0.0;
    for (int i = 0; i < 4; ++i) {
        if (w[i] == 0.0) continue;
        if (is_nodata(rows[i], cols[i])) {
            throw NodataError("interpolation touches a nodata cell at row " +
                              std::to_string(rows[i]) + ", col " + std::to_string(cols[i]));
        }
        acc += w[i] * value(rows[i], cols[i]);
    }
    return acc;
}

Eigen::Vector2d MapGrid::gradient_at_cell(int row, int col) const {
    if (is_nodata(row, col)) return {0.0, 0.0};
    auto axis = [&](int dr, int dc) -> double {
        const int rp = row + dr, cp = col + dc;
        const int rm = row - dr, cm = col - dc;
        const bool has_p = rp >= 0 && rp < n_rows_ && cp >= 0 && cp < n_cols_ && !is_nodata(rp, cp);
        const bool has_m = rm >= 0 && rm < n_rows_ && cm >= 0 && cm < n_cols_ && !is_nodata(rm, cm);
        if (has_p && has_m) return (value(rp, cp) - value(rm, cm)) / (2.0 * cell_size_);
        if (has_p) return (value(rp, cp) - value(row, col)) / cell_size_;
        if (has_m) return (value(row, col) - value(rm, cm)) / cell_size_;
        return 0.0;
    };
    return {axis(1, 0), axis(0, 1)};
}

MapGrid MapGrid::downsample(int factor) const {
    if (factor < 2) throw ConfigError("downsample factor must be >= 2");
    const int out_rows = n_rows_ / factor;
    const int out_cols = n_cols_ / factor;
    if (out_rows < 2 || out_cols < 2) {
        throw ConfigError("downsample factor " + std::to_string(factor) +
                          " leaves fewer than 2 rows or columns");
    }
    std::vector<double> out(static_cast<std::size_t>(out_rows) * out_cols, nodata_);
    for (int br = 0; br < out_rows; ++br) {
        for (int bc = 0; bc < out_cols; ++bc) {
            double sum = 0.0;
            int n = 0;
            for (int r = br * factor; r < (br + 1) * factor; ++r) {
                for (int c = bc * factor; c < (bc + 1) * factor; ++c) {
                    if (is_nodata(r, c)) continue;
                    sum += value(r, c);
                    ++n;
                }
            }
            if (n > 0) out[static_cast<std::size_t>(br) * out_cols + bc] = sum / n;
        }
    }
    return MapGrid(origin_, cell_size_ * factor, out_rows, out_cols, std::move(out), nodata_);
}

MapGrid load_grid(const std::filesystem::path& path, GridFormat format) {
    return MapGrid::load(path, format);
}

}  // namespace magnav
