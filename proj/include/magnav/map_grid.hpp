#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <string>
#include <vector>

#include "magnav/geo.hpp"

namespace magnav {

enum class GridFormat { kAsciiGrid, kCsv };

/// Georeferenced raster of total-magnetic-intensity values (nanotesla).
///
/// Cells are square. The origin is the lower-left (south-west) corner of
/// the raster; local coordinates are (north, east) metres from that corner,
/// so the cell (row, col) has its centre at ((row+0.5)c, (col+0.5)c) with
/// row 0 the southernmost row. Files store rows north-first (the usual
/// raster order); loading flips them into this layout.
///
/// Immutable after construction; all read paths are safe for concurrent use.
class MapGrid {
public:
    MapGrid(GeoPosition origin, double cell_size, int n_rows, int n_cols,
            std::vector<double> values, double nodata = kDefaultNodata);

    static constexpr double kDefaultNodata = -99999.0;

    static MapGrid load(const std::filesystem::path& path, GridFormat format);
    /// Picks the format from the extension (.csv -> CSV, anything else ASCII grid).
    static MapGrid load_auto(const std::filesystem::path& path);
    void save_csv(const std::filesystem::path& path) const;
    void save_ascii(const std::filesystem::path& path) const;

    int n_rows() const { return n_rows_; }
    int n_cols() const { return n_cols_; }
    double cell_size() const { return cell_size_; }
    double nodata() const { return nodata_; }
    const GeoPosition& origin() const { return origin_; }
    const std::vector<double>& values() const { return values_; }

    double value(int row, int col) const { return values_[static_cast<std::size_t>(row) * n_cols_ + col]; }
    bool is_nodata(int row, int col) const { return value(row, col) == nodata_; }

    Eigen::Vector2d cell_center(int row, int col) const {
        return {(row + 0.5) * cell_size_, (col + 0.5) * cell_size_};
    }
    /// Row/col of the cell containing a local point (clamped to the grid).
    std::pair<int, int> cell_containing(const Eigen::Vector2d& north_east) const;

    double extent_north() const { return n_rows_ * cell_size_; }
    double extent_east() const { return n_cols_ * cell_size_; }
    bool in_bounds(const Eigen::Vector2d& north_east) const {
        return north_east.x() >= 0.0 && north_east.x() <= extent_north() &&
               north_east.y() >= 0.0 && north_east.y() <= extent_east();
    }

    /// Bilinear interpolation of the four surrounding cell-centre values.
    /// Points between the outer centre ring and the physical edge clamp to
    /// the centre lattice. Throws BoundsError outside the raster extent and
    /// NodataError if a contributing cell is nodata.
    double sample(const Eigen::Vector2d& north_east) const;

    /// Central-difference value gradient (d/dnorth, d/deast) in nT/m at a
    /// cell, falling back to one-sided differences at edges or next to
    /// nodata cells. Zero along an axis with no usable neighbours.
    Eigen::Vector2d gradient_at_cell(int row, int col) const;

    /// Block-mean reduction by an integer factor >= 2. Blocks are anchored at
    /// the south-west corner so the georeferenced origin is preserved;
    /// trailing partial blocks at the north and east edges are dropped.
    /// Nodata cells are excluded from each mean; all-nodata blocks stay nodata.
    MapGrid downsample(int factor) const;

    LocalFrame frame() const { return LocalFrame::at(origin_); }

    double min_value() const { return min_value_; }
    double max_value() const { return max_value_; }
    long nodata_count() const { return nodata_count_; }

private:
    void refresh_stats();

    GeoPosition origin_;
    double cell_size_ = 0.0;
    int n_rows_ = 0;
    int n_cols_ = 0;
    double nodata_ = kDefaultNodata;
    std::vector<double> values_;
    double min_value_ = 0.0;
    double max_value_ = 0.0;
    long nodata_count_ = 0;
};

/// File-loading entry point matching the CLI surface.
MapGrid load_grid(const std::filesystem::path& path, GridFormat format);

}  // namespace magnav
