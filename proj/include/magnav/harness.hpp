#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "magnav/ins_sim.hpp"
#include "magnav/integrator.hpp"
#include "magnav/map_grid.hpp"
#include "magnav/map_quality.hpp"
#include "magnav/mm_filter.hpp"

namespace magnav {

enum class MatchAlgorithm { kPmht, kViterbi };

struct MagnetometerConfig {
    double sigma = 0.015;  // nT, additive white noise on each reading
    double period = 10.0;  // s, sampling interval (a multiple of the IMU step)
};

struct MatchingConfig {
    bool enabled = true;  // false disables measurement collection entirely (INS-only run)
    MatchAlgorithm algorithm = MatchAlgorithm::kPmht;
    int batch_length = 30;
    double gamma = kDefaultGamma;
    double kappa = kDefaultKappa;
    /// Added in quadrature to the INS position sigma when building batch
    /// priors, so a freshly aligned (near-zero covariance) INS still opens a
    /// usable search region.
    double gate_sigma_floor = 0.0;  // m
    double tol = 1.0;               // m, matcher convergence threshold
    int max_iters = 20;
};

struct IntegrationConfig {
    bool enabled = true;  // false: matcher runs but fixes are never fused
    double reject_threshold = 13.815510557964274;  // chi-squared(2) at 99.9%
    bool mfv_weighting = false;
    double mfv_min_scale = 0.25;
    double mfv_max_scale = 9.0;
};

/// One-sigma initialization errors sampled into the starting estimate (the
/// covariance gets the same sigmas). Zero means a perfect start.
struct InitialErrors {
    double pos_sigma = 0.0;  // m, per horizontal axis
    double vel_sigma = 0.0;  // m/s, per horizontal axis
    double att_sigma = 0.0;  // rad, per axis
};

/// Everything a mission run needs: the map source, the flight, the sensor
/// suite, and the aiding chain. Serializable to/from versioned JSON.
struct ScenarioConfig {
    std::string map_path;                          // exactly one of path /
    std::optional<SyntheticMapSpec> map_synthetic; // synthetic must be set
    GeoPosition start{47.0, 9.0, 100.0};
    GeoPosition end{47.0, 9.1, 100.0};
    double speed = 22.0;  // m/s ground speed
    SensorSpec sensors;
    MagnetometerConfig magnetometer;
    MatchingConfig matching;
    IntegrationConfig integration;
    InitialErrors initial_errors;
    int n_runs = 1;
    std::uint64_t seed = 1;
    std::string out_csv;  // default report targets; CLI flags override
    std::string out_svg;

    void check() const;  // throws ConfigError on any invariant violation
};

ScenarioConfig parse_scenario(const std::string& json_text);
ScenarioConfig load_scenario(const std::filesystem::path& path);
std::string scenario_to_json(const ScenarioConfig& config);

/// Loads the map file or renders the synthetic spec.
MapGrid build_scenario_map(const ScenarioConfig& config);

struct TrackPoint {
    double time = 0.0;
    GeoPosition truth;
    GeoPosition estimate;
    double error = 0.0;  // m, horizontal
};

/// Time series of horizontal position error on the 1/rate grid (t = 0
/// included). A single run's `errors` are that run's |error|; after
/// aggregation they are the RMS across runs and `track` is empty.
struct RunMetrics {
    std::vector<double> times;
    std::vector<double> errors;
    std::vector<TrackPoint> track;
    long aiding_attempts = 0;
    long aiding_success = 0;
    long fix_rejections = 0;
    int n_runs = 1;
};

/// One validated scenario bound to its map, reusable across runs. Immutable
/// after construction; run() is safe to call from parallel workers.
///
/// Schedule per run: IMU at every step, a magnetometer reading at
/// t = j·period (j >= 1) taken from the map at the true position, an aiding
/// attempt whenever batch_length readings have accumulated. That gives
/// exactly floor(duration/period) readings and floor(readings/batch_length)
/// attempts; a trailing partial batch is discarded.
///
/// The value gate sees sigma and the grid quantization step
/// rms_adjacent_difference/(2·kappa) combined in quadrature instead of the
/// raw noise sigma, so a reading taken between cell centres still matches
/// its neighbourhood when the noise floor is below the quantization step.
class ScenarioEngine {
public:
    /// Throws ConfigError when the config is invalid or the trajectory
    /// leaves the map extent (checked against every truth sample upfront).
    ScenarioEngine(const ScenarioConfig& config, const MapGrid& map);

    RunMetrics run(std::uint64_t run_seed) const;

    const TruthTrajectory& truth() const { return truth_; }
    double matching_sigma() const { return sigma_eff_; }

private:
    void aid(NavState& state, Batch& batch, RunMetrics& metrics) const;

    ScenarioConfig config_;
    const MapGrid* map_;
    TruthTrajectory truth_;
    LocalFrame map_frame_;
    double sigma_eff_ = 0.0;
    long period_steps_ = 0;
    std::optional<MapGrid> mfv_map_;   // only built when mfv weighting is on
    MfvWeightConfig mfv_config_;
};

/// Builds the map and runs one seed.
RunMetrics run_scenario(const ScenarioConfig& config, std::uint64_t run_seed);

/// n_runs independent runs with seeds derived from (config.seed, run index),
/// reduced in run order. Deterministic for any worker count.
RunMetrics run_monte_carlo(const ScenarioConfig& config, int n_threads = 0);

/// RMS-combines per-run series (all runs must share the time base) and sums
/// the counters. A single run passes through with its track dropped.
RunMetrics aggregate_runs(const std::vector<RunMetrics>& runs);

/// CSV "t,rms_m,n_runs", one row per time step, %.17g so values round-trip.
void write_metrics_csv(const RunMetrics& metrics, const std::filesystem::path& path);
/// Inverse of write_metrics_csv; counters are not in the file and stay zero.
RunMetrics read_metrics_csv(const std::filesystem::path& path);

/// CSV "t,truth_lat,truth_lon,est_lat,est_lon,err_m" from a single-run track.
void write_track_csv(const RunMetrics& metrics, const std::filesystem::path& path);

/// CSV "sigma,factor,mean_error_m,std_error_m,n".
void write_sweep_csv(const std::vector<SweepResult>& results, const std::filesystem::path& path);

struct SvgSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Minimal SVG 1.1 line plot: axes, ticks, a legend, and one polyline per
/// series. log_x plots against log10(x) and requires positive x.
void write_line_svg(const std::vector<SvgSeries>& series, const std::filesystem::path& path,
                    bool log_x = false);

/// Metrics CSV plus, when svg_path is non-empty, an error-vs-time plot.
void emit_report(const RunMetrics& metrics, const std::filesystem::path& csv_path,
                 const std::filesystem::path& svg_path = {});

/// Measurement-batch JSON for the match CLI; everything in map-local metres.
Batch parse_batch_json(const std::string& json_text);
Batch load_batch(const std::filesystem::path& path);
std::string batch_to_json(const Batch& batch);

}  // namespace magnav
