#include "magnav/map_quality.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "magnav/errors.hpp"
#include "magnav/parallel.hpp"
#include "magnav/rng.hpp"

namespace magnav {

SearchWindow SearchWindow::circular(double radius_m) {
    if (!(radius_m > 0.0)) throw ConfigError("window radius must be positive");
    SearchWindow w;
    w.cov = (radius_m * radius_m / w.gamma) * Eigen::Matrix2d::Identity();
    return w;
}

std::vector<std::pair<int, int>> SearchWindow::offsets(double cell_size) const {
    if (!(gamma > 0.0)) throw ConfigError("window gamma must be positive");
    const Eigen::Matrix2d info = cov.inverse();
    const int reach_r = static_cast<int>(std::sqrt(gamma * cov(0, 0)) / cell_size) + 1;
    const int reach_c = static_cast<int>(std::sqrt(gamma * cov(1, 1)) / cell_size) + 1;

    std::vector<std::pair<int, int>> out;
    for (int dr = -reach_r; dr <= reach_r; ++dr) {
        for (int dc = -reach_c; dc <= reach_c; ++dc) {
            if (dr == 0 && dc == 0) continue;
            const Eigen::Vector2d d{dr * cell_size, dc * cell_size};
            if (d.dot(info * d) <= gamma) out.emplace_back(dr, dc);
        }
    }
    if (out.empty()) {
        throw ConfigError("search window smaller than one cell; no neighbours to compare");
    }
    return out;
}

MapGrid mfv(const MapGrid& map, const SearchWindow& window) {
    const auto offs = window.offsets(map.cell_size());
    const int rows = map.n_rows(), cols = map.n_cols();
    std::vector<double> out(static_cast<std::size_t>(rows) * cols, map.nodata());

    parallel_for(rows, [&](int r) {
        for (int c = 0; c < cols; ++c) {
            if (map.is_nodata(r, c)) continue;
            const double centre = map.value(r, c);
            double sum = 0.0;
            int n = 0;
            for (const auto& [dr, dc] : offs) {
                const int rr = r + dr, cc = c + dc;
                if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
                if (map.is_nodata(rr, cc)) continue;
                const double diff = centre - map.value(rr, cc);
                sum += diff * diff;
                ++n;
            }
            if (n > 0) out[static_cast<std::size_t>(r) * cols + c] = sum / n;
        }
    });
    return MapGrid(map.origin(), map.cell_size(), rows, cols, std::move(out), map.nodata());
}

MapGrid normalized(const MapGrid& raster) {
    const double max = raster.max_value();
    if (!(max > 0.0)) return raster;
    std::vector<double> out = raster.values();
    for (double& v : out) {
        if (v != raster.nodata()) v /= max;
    }
    return MapGrid(raster.origin(), raster.cell_size(), raster.n_rows(), raster.n_cols(),
                   std::move(out), raster.nodata());
}

MapGrid pda_error_map(const MapGrid& map, double sigma, const Eigen::Matrix2d& prior_cov,
                      double gamma, double kappa, int n_samples, std::uint64_t seed) {
    if (n_samples < 1) throw ConfigError("n_samples must be at least 1");
    if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
    const int rows = map.n_rows(), cols = map.n_cols();
    std::vector<double> out(static_cast<std::size_t>(rows) * cols, map.nodata());

    parallel_for(rows, [&](int r) {
        for (int c = 0; c < cols; ++c) {
            if (map.is_nodata(r, c)) continue;
            const std::size_t idx = static_cast<std::size_t>(r) * cols + c;
            Rng rng(Rng::derive(seed, idx));
            const Eigen::Vector2d truth = map.cell_center(r, c);
            const PriorPosition prior{truth, prior_cov};
            double sum = 0.0;
            int hits = 0;
            for (int k = 0; k < n_samples; ++k) {
                const MagMeasurement meas{map.value(r, c) + sigma * rng.gaussian(), sigma, 0.0};
                CandidateSet set = gate_candidates(map, prior, meas, gamma, kappa);
                if (set.empty()) continue;
                const PositionFix fix = pda_estimate(pda_weights(std::move(set), prior));
                sum += pda_error(fix, truth);
                ++hits;
            }
            if (hits > 0) out[idx] = sum / hits;
        }
    });
    return MapGrid(map.origin(), map.cell_size(), rows, cols, std::move(out), map.nodata());
}

std::vector<SweepResult> noise_resolution_sweep(const MapGrid& map, const SweepParams& params) {
    if (params.sigmas.empty() || params.factors.empty()) {
        throw ConfigError("sweep needs at least one sigma and one factor");
    }
    if (params.n_samples < 1) throw ConfigError("sweep needs at least one sample");
    for (double s : params.sigmas) {
        if (!(s > 0.0)) throw ConfigError("sweep sigmas must be positive");
    }

    // One grid per factor, shared read-only across the factorial.
    std::vector<MapGrid> grids;
    grids.reserve(params.factors.size());
    int max_factor = 1;
    for (int f : params.factors) {
        if (f < 1) throw ConfigError("downsample factor must be >= 1");
        grids.push_back(f == 1 ? map : map.downsample(f));
        max_factor = std::max(max_factor, f);
    }

    // Sample points stay clear of the window so gates never leave the map.
    const double margin = std::sqrt(params.gamma) * params.prior_sigma +
                          static_cast<double>(max_factor) * map.cell_size();
    const double lo_n = margin, hi_n = map.extent_north() - margin;
    const double lo_e = margin, hi_e = map.extent_east() - margin;
    if (!(hi_n > lo_n) || !(hi_e > lo_e)) {
        throw ConfigError("map too small for the sweep window margin");
    }

    const Eigen::Matrix2d prior_cov =
        params.prior_sigma * params.prior_sigma * Eigen::Matrix2d::Identity();

    // Shared draws per sample index: the same point and the same unit noise
    // feed every (sigma, factor) combination.
    std::vector<Eigen::Vector2d> points(static_cast<std::size_t>(params.n_samples));
    std::vector<double> noise(static_cast<std::size_t>(params.n_samples));
    for (int i = 0; i < params.n_samples; ++i) {
        Rng point_rng(Rng::derive(params.seed, static_cast<std::uint64_t>(i), 0));
        points[static_cast<std::size_t>(i)] = {point_rng.uniform(lo_n, hi_n),
                                               point_rng.uniform(lo_e, hi_e)};
        Rng noise_rng(Rng::derive(params.seed, static_cast<std::uint64_t>(i), 1));
        noise[static_cast<std::size_t>(i)] = noise_rng.gaussian();
    }

    // Quantization allowance per grid: far below this step, the noise gate
    // alone would reject every cell for truth points between centres.
    std::vector<double> quant_step(grids.size());
    for (std::size_t i = 0; i < grids.size(); ++i) {
        quant_step[i] = 0.5 * rms_adjacent_difference(grids[i]);
    }

    const int n_combos = static_cast<int>(params.sigmas.size() * params.factors.size());
    std::vector<SweepResult> results(static_cast<std::size_t>(n_combos));
    parallel_for(n_combos, [&](int combo) {
        const std::size_t si = static_cast<std::size_t>(combo) / params.factors.size();
        const std::size_t fi = static_cast<std::size_t>(combo) % params.factors.size();
        const double sigma = params.sigmas[si];
        const MapGrid& grid = grids[fi];
        const double kappa_eff = std::hypot(params.kappa * sigma, quant_step[fi]) / sigma;

        double sum = 0.0, sumsq = 0.0;
        long n = 0;
        for (int i = 0; i < params.n_samples; ++i) {
            const Eigen::Vector2d& truth = points[static_cast<std::size_t>(i)];
            double field = 0.0;
            try {
                field = grid.sample(truth);
            } catch (const NodataError&) {
                continue;
            }
            const PriorPosition prior{truth, prior_cov};
            const MagMeasurement meas{field + sigma * noise[static_cast<std::size_t>(i)], sigma,
                                      0.0};
            CandidateSet set = gate_candidates(grid, prior, meas, params.gamma, kappa_eff);
            if (set.empty()) continue;
            const PositionFix fix = pda_estimate(pda_weights(std::move(set), prior));
            const double err = pda_error(fix, truth);
            sum += err;
            sumsq += err * err;
            ++n;
        }

        SweepResult& r = results[static_cast<std::size_t>(combo)];
        r.sigma = sigma;
        r.factor = params.factors[fi];
        r.n_samples = n;
        if (n > 0) r.mean_error = sum / static_cast<double>(n);
        if (n > 1) {
            const double var =
                (sumsq - static_cast<double>(n) * r.mean_error * r.mean_error) /
                static_cast<double>(n - 1);
            r.std_error = std::sqrt(std::max(0.0, var));
        }
    });
    return results;
}

double rms_adjacent_difference(const MapGrid& map) {
    double sum = 0.0;
    long n = 0;
    for (int r = 0; r < map.n_rows(); ++r) {
        for (int c = 0; c < map.n_cols(); ++c) {
            if (map.is_nodata(r, c)) continue;
            if (c + 1 < map.n_cols() && !map.is_nodata(r, c + 1)) {
                const double d = map.value(r, c) - map.value(r, c + 1);
                sum += d * d;
                ++n;
            }
            if (r + 1 < map.n_rows() && !map.is_nodata(r + 1, c)) {
                const double d = map.value(r, c) - map.value(r + 1, c);
                sum += d * d;
                ++n;
            }
        }
    }
    return n > 0 ? std::sqrt(sum / static_cast<double>(n)) : 0.0;
}

std::vector<SweepResult> noise_resolution_sweep(const MapGrid& map,
                                                const std::vector<double>& sigmas,
                                                const std::vector<int>& factors, int n_samples,
                                                std::uint64_t seed) {
    SweepParams p;
    p.sigmas = sigmas;
    p.factors = factors;
    p.n_samples = n_samples;
    p.seed = seed;
    return noise_resolution_sweep(map, p);
}

namespace {

/// One box-blur pass along the given axis with edge replication. Three
/// passes approximate a Gaussian of sigma ~ radius.
void box_blur(std::vector<double>& v, int rows, int cols, int radius, bool along_rows) {
    if (radius < 1) return;
    const int len = along_rows ? cols : rows;
    const int lines = along_rows ? rows : cols;
    std::vector<double> line(static_cast<std::size_t>(len));
    const double inv = 1.0 / (2 * radius + 1);

    for (int l = 0; l < lines; ++l) {
        auto at = [&](int i) -> double& {
            const int r = along_rows ? l : i;
            const int c = along_rows ? i : l;
            return v[static_cast<std::size_t>(r) * cols + c];
        };
        auto clamped = [&](int i) { return at(std::clamp(i, 0, len - 1)); };

        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) acc += clamped(i);
        for (int i = 0; i < len; ++i) {
            line[static_cast<std::size_t>(i)] = acc * inv;
            acc += clamped(i + radius + 1) - clamped(i - radius);
        }
        for (int i = 0; i < len; ++i) at(i) = line[static_cast<std::size_t>(i)];
    }
}

}  // namespace

MapGrid synthetic_tmi_map(const SyntheticMapSpec& spec) {
    if (spec.n_rows < 2 || spec.n_cols < 2) throw ConfigError("synthetic map must be at least 2x2");
    if (!(spec.cell_size > 0.0)) throw ConfigError("synthetic map cell size must be positive");
    if (!(spec.amplitude >= 0.0)) throw ConfigError("synthetic map amplitude must be >= 0");
    if (spec.octaves < 1) throw ConfigError("synthetic map needs at least one octave");
    if (!(spec.base_correlation_cells > 0.0)) {
        throw ConfigError("base correlation length must be positive");
    }

    const std::size_t size = static_cast<std::size_t>(spec.n_rows) * spec.n_cols;
    std::vector<double> field(size, 0.0);

    for (int o = 0; o < spec.octaves; ++o) {
        Rng rng(Rng::derive(spec.seed, static_cast<std::uint64_t>(o)));
        std::vector<double> octave(size);
        for (double& x : octave) x = rng.gaussian();

        const double corr = spec.base_correlation_cells * std::pow(2.0, o);
        const int radius = std::max(1, static_cast<int>(std::lround(corr)));
        for (int pass = 0; pass < 3; ++pass) {
            box_blur(octave, spec.n_rows, spec.n_cols, radius, true);
            box_blur(octave, spec.n_rows, spec.n_cols, radius, false);
        }

        double mean = 0.0;
        for (double x : octave) mean += x;
        mean /= static_cast<double>(size);
        double var = 0.0;
        for (double x : octave) var += (x - mean) * (x - mean);
        var /= static_cast<double>(size);
        const double scale = var > 0.0 ? std::pow(spec.persistence, o) / std::sqrt(var) : 0.0;
        for (std::size_t i = 0; i < size; ++i) field[i] += scale * (octave[i] - mean);
    }

    double mean = 0.0;
    for (double x : field) mean += x;
    mean /= static_cast<double>(size);
    double var = 0.0;
    for (double x : field) var += (x - mean) * (x - mean);
    var /= static_cast<double>(size);
    const double scale = var > 0.0 ? spec.amplitude / std::sqrt(var) : 0.0;

    for (int r = 0; r < spec.n_rows; ++r) {
        for (int c = 0; c < spec.n_cols; ++c) {
            const std::size_t i = static_cast<std::size_t>(r) * spec.n_cols + c;
            const double north_km = (r + 0.5) * spec.cell_size / 1000.0;
            const double east_km = (c + 0.5) * spec.cell_size / 1000.0;
            field[i] = scale * (field[i] - mean) + spec.ramp_north * north_km +
                       spec.ramp_east * east_km;
        }
    }
    return MapGrid(spec.origin, spec.cell_size, spec.n_rows, spec.n_cols, std::move(field));
}

}  // namespace magnav
