#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "magnav/map_grid.hpp"
#include "magnav/pda.hpp"

namespace magnav {

/// Elliptical neighbourhood used for feature-variability statistics,
/// quantized to whole cells. Same parameterization as the gating ellipse:
/// offsets d with d' cov⁻¹ d <= gamma are inside.
struct SearchWindow {
    Eigen::Matrix2d cov = 230400.0 * Eigen::Matrix2d::Identity();  // (480 m)^2
    double gamma = kDefaultGamma;

    /// Circular window of the given metric radius.
    static SearchWindow circular(double radius_m);

    /// Integer (row, col) offsets whose cell-centre displacement lies inside
    /// the ellipse, excluding (0, 0). Throws ConfigError when empty.
    std::vector<std::pair<int, int>> offsets(double cell_size) const;
};

/// Map feature variability: for each cell i the mean squared value
/// difference against its window neighbours, using whatever neighbours the
/// map edge leaves available. Nodata cells (as centre or neighbour) are
/// skipped; a centre with no usable neighbour becomes nodata.
MapGrid mfv(const MapGrid& map, const SearchWindow& window);

/// Raster scaled by its maximum value into [0, 1]. A raster whose maximum
/// is zero (constant zero) is returned unchanged.
MapGrid normalized(const MapGrid& raster);

/// Per-cell mean association error distance over n_samples simulated
/// measurements s = map(cell) + N(0, sigma²), with the prior centred on the
/// cell. Draws whose gate comes back empty are skipped; a cell where every
/// draw fails becomes nodata. Deterministic in seed, independent of thread
/// scheduling.
MapGrid pda_error_map(const MapGrid& map, double sigma, const Eigen::Matrix2d& prior_cov,
                      double gamma, double kappa, int n_samples, std::uint64_t seed);

struct SweepResult {
    double sigma = 0.0;      // nT
    int factor = 1;          // downsample factor (1 = original grid)
    double mean_error = 0.0; // m
    double std_error = 0.0;  // m
    long n_samples = 0;      // samples that produced a fix
};

struct SweepParams {
    std::vector<double> sigmas;       // nT
    std::vector<int> factors;         // 1 keeps the original grid
    int n_samples = 1000;
    std::uint64_t seed = 0;
    double prior_sigma = 480.0;       // m, isotropic prior per sample point
    double gamma = kDefaultGamma;
    double kappa = kDefaultKappa;
};

/// Full factorial sigma × factor sweep of the association error.
///
/// Sample points are uniform over the interior (excluding a window-sized
/// margin); the simulated measurement is the bilinear map value at the
/// point plus N(0, sigma²). Each sample index reuses the same point and the
/// same noise draw across the whole factorial, so rows are directly
/// comparable (paired sampling).
///
/// The value gate is widened by half the grid's RMS adjacent-cell
/// difference, so a truth point between cell centres still matches its
/// neighbourhood when sigma is far below the grid's quantization step.
/// The low-noise error floor is then the cell quantization distance, which
/// is what makes resolutions comparable.
std::vector<SweepResult> noise_resolution_sweep(const MapGrid& map, const SweepParams& params);

/// RMS value difference between rook-adjacent valid cells; the grid's
/// vertical quantization step.
double rms_adjacent_difference(const MapGrid& map);

std::vector<SweepResult> noise_resolution_sweep(const MapGrid& map,
                                                const std::vector<double>& sigmas,
                                                const std::vector<int>& factors, int n_samples,
                                                std::uint64_t seed);

/// Smoothed Gaussian random field with a red spatial spectrum, for tests
/// and synthetic scenarios; real survey data stays out of the loop.
struct SyntheticMapSpec {
    int n_rows = 256;
    int n_cols = 256;
    double cell_size = 85.0;             // m
    double amplitude = 120.0;            // nT standard deviation of the field
    double base_correlation_cells = 3.0; // smallest octave's correlation length
    int octaves = 4;                     // each octave doubles the correlation length
    double persistence = 1.8;            // weight ratio between octaves (>1 favours large scales)
    double ramp_north = 0.0;             // nT per km, regional gradient
    double ramp_east = 0.0;              // nT per km
    GeoPosition origin{47.0, 9.0, 0.0};
    std::uint64_t seed = 0;
};

MapGrid synthetic_tmi_map(const SyntheticMapSpec& spec);

}  // namespace magnav
