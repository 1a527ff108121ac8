#include <cmath>
#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "magnav/errors.hpp"
#include "magnav/harness.hpp"
#include "magnav/map_grid.hpp"
#include "magnav/map_quality.hpp"
#include "magnav/mm_filter.hpp"
#include "magnav/pda.hpp"

namespace {

using nlohmann::json;

magnav::GridFormat parse_format(const std::string& name) {
    if (name == "ascii") return magnav::GridFormat::kAsciiGrid;
    if (name == "csv") return magnav::GridFormat::kCsv;
    throw magnav::ConfigError("unknown map format '" + name + "' (expected ascii or csv)");
}

magnav::MapGrid load_map(const std::string& path, const std::string& format) {
    if (format == "auto") return magnav::MapGrid::load_auto(path);
    return magnav::MapGrid::load(path, parse_format(format));
}

void save_map(const magnav::MapGrid& map, const std::string& path) {
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0)
        map.save_csv(path);
    else
        map.save_ascii(path);
}

json fix_json(const magnav::PositionFix& fix, const magnav::LocalFrame& frame) {
    const magnav::GeoPosition geo = frame.from_local(fix.mean);
    return {{"mean_ne_m", {fix.mean.x(), fix.mean.y()}},
            {"lat", geo.lat},
            {"lon", geo.lon},
            {"cov_m2",
             {{fix.cov(0, 0), fix.cov(0, 1)}, {fix.cov(1, 0), fix.cov(1, 1)}}},
            {"time", fix.time},
            {"n_candidates", fix.n_candidates}};
}

int cmd_map_info(const std::string& path, const std::string& format) {
    const magnav::MapGrid map = load_map(path, format);
    std::printf("rows:        %d\n", map.n_rows());
    std::printf("cols:        %d\n", map.n_cols());
    std::printf("cell_size_m: %.6g\n", map.cell_size());
    std::printf("origin_lat:  %.10g\n", map.origin().lat);
    std::printf("origin_lon:  %.10g\n", map.origin().lon);
    std::printf("extent_m:    %.6g x %.6g\n", map.extent_north(), map.extent_east());
    std::printf("min_nT:      %.6g\n", map.min_value());
    std::printf("max_nT:      %.6g\n", map.max_value());
    std::printf("nodata:      %ld cells\n", map.nodata_count());
    return 0;
}

int cmd_synth(const magnav::SyntheticMapSpec& spec, const std::string& out) {
    const magnav::MapGrid map = magnav::synthetic_tmi_map(spec);
    save_map(map, out);
    std::printf("wrote %dx%d grid (cell %.6g m, values %.6g..%.6g nT) to %s\n", map.n_rows(),
                map.n_cols(), map.cell_size(), map.min_value(), map.max_value(), out.c_str());
    return 0;
}

struct PdaArgs {
    std::string map_path;
    double lat = 0.0;
    double lon = 0.0;
    double sigma = 0.015;
    double gamma = magnav::kDefaultGamma;
    double kappa = magnav::kDefaultKappa;
    double prior_sigma = 480.0;
    std::optional<double> value;
};

int cmd_pda(const PdaArgs& args) {
    const magnav::MapGrid map = load_map(args.map_path, "auto");
    const magnav::LocalFrame frame = map.frame();
    const Eigen::Vector2d local = frame.to_local({args.lat, args.lon, 0.0});

    magnav::MagMeasurement meas;
    meas.value = args.value ? *args.value : map.sample(local);
    // Fold the grid's vertical quantization into the noise sigma (independent
    // sources, quadrature) so a query between cell centres still matches its
    // neighbourhood at low sigma.
    meas.sigma = std::hypot(args.sigma, 0.5 * magnav::rms_adjacent_difference(map) / args.kappa);

    magnav::PriorPosition prior;
    prior.mean = local;
    prior.cov = args.prior_sigma * args.prior_sigma * Eigen::Matrix2d::Identity();

    const magnav::CandidateSet gated =
        magnav::gate_candidates(map, prior, meas, args.gamma, args.kappa);
    json out = {{"measurement_nT", meas.value},
                {"sigma_eff_nT", meas.sigma},
                {"n_candidates", static_cast<long>(gated.size())},
                {"fix", nullptr}};
    if (!gated.empty()) {
        const magnav::CandidateSet weighted = magnav::pda_weights(gated, prior);
        out["weight_underflow"] = weighted.weight_underflow;
        out["fix"] = fix_json(magnav::pda_estimate(weighted), frame);
    }
    std::printf("%s\n", out.dump(2).c_str());
    return 0;
}

int cmd_mfv(const std::string& map_path, const std::string& out, double radius, bool normalize) {
    const magnav::MapGrid map = load_map(map_path, "auto");
    magnav::MapGrid raster = magnav::mfv(map, magnav::SearchWindow::circular(radius));
    if (normalize) raster = magnav::normalized(raster);
    save_map(raster, out);
    std::printf("wrote %dx%d MFV raster (max %.6g %s) to %s\n", raster.n_rows(), raster.n_cols(),
                raster.max_value(), normalize ? "normalized" : "nT^2", out.c_str());
    return 0;
}

struct SweepArgs {
    std::string map_path;
    magnav::SweepParams params;
    std::string out;
    std::string svg;
};

int cmd_sweep(const SweepArgs& args) {
    const magnav::MapGrid map = load_map(args.map_path, "auto");
    const std::vector<magnav::SweepResult> results =
        magnav::noise_resolution_sweep(map, args.params);
    magnav::write_sweep_csv(results, args.out);
    std::printf("wrote %zu sweep rows to %s\n", results.size(), args.out.c_str());
    if (args.svg.empty()) return 0;

    std::vector<magnav::SvgSeries> series;
    for (int factor : args.params.factors) {
        magnav::SvgSeries s;
        s.label = "factor " + std::to_string(factor);
        for (const magnav::SweepResult& r : results)
            if (r.factor == factor) {
                s.x.push_back(r.sigma);
                s.y.push_back(r.mean_error);
            }
        series.push_back(std::move(s));
    }
    magnav::write_line_svg(series, args.svg, /*log_x=*/true);
    std::printf("wrote sweep plot to %s\n", args.svg.c_str());
    return 0;
}

struct MatchArgs {
    std::string map_path;
    std::string batch_path;
    std::string algo = "pmht";
    magnav::MatchParams params;
};

int cmd_match(const MatchArgs& args) {
    const magnav::MapGrid map = load_map(args.map_path, "auto");
    const magnav::Batch batch = magnav::load_batch(args.batch_path);
    const std::optional<magnav::MatchResult> result =
        args.algo == "viterbi" ? magnav::viterbi_mm(batch, map, args.params)
                               : magnav::pmht_mm(batch, map, args.params);

    json out = {{"algo", args.algo}, {"fix", nullptr}};
    if (result) {
        out["fix"] = fix_json(result->fix, map.frame());
        out["iterations"] = result->iterations;
        out["converged"] = result->converged;
        json track = json::array();
        for (const Eigen::Vector2d& p : result->smoothed_track) track.push_back({p.x(), p.y()});
        out["smoothed_track_ne_m"] = std::move(track);
    }
    std::printf("%s\n", out.dump(2).c_str());
    return 0;
}

struct RunArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string svg;
    int threads = 0;
};

int cmd_simulate(const RunArgs& args) {
    magnav::ScenarioConfig config = magnav::load_scenario(args.config_path);
    if (args.seed) config.seed = *args.seed;
    const std::string out = args.out.empty() ? config.out_csv : args.out;
    const std::string svg = args.svg.empty() ? config.out_svg : args.svg;
    if (out.empty()) throw magnav::ConfigError("no output path (set --out or out_csv)");

    const magnav::RunMetrics metrics = magnav::run_scenario(config, config.seed);
    magnav::write_track_csv(metrics, out);
    if (!svg.empty())
        magnav::write_line_svg({{"error", metrics.times, metrics.errors}}, svg);
    std::printf("run of %.6g s: end error %.3f m, aiding %ld/%ld fixes (%ld rejected)\n",
                metrics.times.back(), metrics.errors.back(), metrics.aiding_success,
                metrics.aiding_attempts, metrics.fix_rejections);
    std::printf("wrote track to %s\n", out.c_str());
    return 0;
}

int cmd_montecarlo(const RunArgs& args) {
    magnav::ScenarioConfig config = magnav::load_scenario(args.config_path);
    if (args.seed) config.seed = *args.seed;
    const std::string out = args.out.empty() ? config.out_csv : args.out;
    const std::string svg = args.svg.empty() ? config.out_svg : args.svg;
    if (out.empty()) throw magnav::ConfigError("no output path (set --out or out_csv)");

    const magnav::RunMetrics metrics = magnav::run_monte_carlo(config, args.threads);
    magnav::emit_report(metrics, out, svg);
    std::printf("%d runs of %.6g s: end RMS %.3f m, aiding %ld/%ld fixes (%ld rejected)\n",
                metrics.n_runs, metrics.times.back(), metrics.errors.back(),
                metrics.aiding_success, metrics.aiding_attempts, metrics.fix_rejections);
    std::printf("wrote metrics to %s\n", out.c_str());
    if (!svg.empty()) std::printf("wrote error plot to %s\n", svg.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Magnetic anomaly map matching toolkit"};
    app.require_subcommand(1);

    std::string map_path;
    std::string map_format = "auto";

    auto* info = app.add_subcommand("map-info", "Print map grid metadata and statistics");
    info->add_option("map", map_path, "Map file (ESRI ASCII grid or CSV)")->required();
    info->add_option("--format", map_format, "Map format: auto, ascii, csv")
        ->check(CLI::IsMember({"auto", "ascii", "csv"}));

    magnav::SyntheticMapSpec synth_spec;
    std::string synth_out;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic anomaly map file");
    synth->add_option("--out", synth_out, "Output map file (.csv -> CSV, else ASCII grid)")
        ->required();
    synth->add_option("--rows", synth_spec.n_rows, "Grid rows")->check(CLI::PositiveNumber);
    synth->add_option("--cols", synth_spec.n_cols, "Grid columns")->check(CLI::PositiveNumber);
    synth->add_option("--cell", synth_spec.cell_size, "Cell size, m")->check(CLI::PositiveNumber);
    synth->add_option("--amplitude", synth_spec.amplitude, "Field standard deviation, nT");
    synth->add_option("--correlation", synth_spec.base_correlation_cells,
                      "Smallest octave correlation length, cells");
    synth->add_option("--octaves", synth_spec.octaves, "Octave count (each doubles the length)");
    synth->add_option("--persistence", synth_spec.persistence, "Octave weight ratio");
    synth->add_option("--ramp-north", synth_spec.ramp_north, "Regional gradient, nT/km");
    synth->add_option("--ramp-east", synth_spec.ramp_east, "Regional gradient, nT/km");
    synth->add_option("--lat", synth_spec.origin.lat, "South-west corner latitude, deg");
    synth->add_option("--lon", synth_spec.origin.lon, "South-west corner longitude, deg");
    synth->add_option("--seed", synth_spec.seed, "Field seed");

    PdaArgs pda_args;
    double pda_value = 0.0;
    auto* pda = app.add_subcommand("pda", "Single-measurement association fix as JSON");
    pda->add_option("--map", pda_args.map_path, "Map file")->required();
    pda->add_option("--lat", pda_args.lat, "Prior latitude, deg")->required();
    pda->add_option("--lon", pda_args.lon, "Prior longitude, deg")->required();
    pda->add_option("--sigma", pda_args.sigma, "Magnetometer noise sigma, nT");
    pda->add_option("--gamma", pda_args.gamma, "Prior gate, chi-squared threshold");
    pda->add_option("--kappa", pda_args.kappa, "Signal gate half-width, sigmas");
    pda->add_option("--prior-sigma", pda_args.prior_sigma, "Prior position sigma, m");
    auto* pda_value_opt = pda->add_option(
        "--value", pda_value, "Measured intensity, nT (default: map value at --lat/--lon)");

    std::string mfv_out;
    double mfv_radius = 480.0;
    bool mfv_normalized = false;
    auto* mfv = app.add_subcommand("mfv", "Feature-variability raster of a map");
    mfv->add_option("--map", map_path, "Map file")->required();
    mfv->add_option("--out", mfv_out, "Output raster file (.csv -> CSV, else ASCII grid)")
        ->required();
    mfv->add_option("--radius", mfv_radius, "Window radius, m")->check(CLI::PositiveNumber);
    mfv->add_flag("--normalized", mfv_normalized, "Scale the raster by its maximum");

    SweepArgs sweep_args;
    auto* sweep = app.add_subcommand("sweep", "Association error vs noise and grid resolution");
    sweep->add_option("--map", sweep_args.map_path, "Map file")->required();
    sweep->add_option("--sigmas", sweep_args.params.sigmas, "Noise sigmas, nT")->required();
    sweep->add_option("--factors", sweep_args.params.factors, "Downsample factors")->required();
    sweep->add_option("--samples", sweep_args.params.n_samples, "Sample points per cell")
        ->check(CLI::PositiveNumber);
    sweep->add_option("--seed", sweep_args.params.seed, "Sampling seed");
    sweep->add_option("--prior-sigma", sweep_args.params.prior_sigma, "Prior sigma, m");
    sweep->add_option("--gamma", sweep_args.params.gamma, "Prior gate, chi-squared threshold");
    sweep->add_option("--kappa", sweep_args.params.kappa, "Signal gate half-width, sigmas");
    sweep->add_option("--out", sweep_args.out, "Results CSV path")->required();
    sweep->add_option("--svg", sweep_args.svg, "Optional log-x error plot");

    MatchArgs match_args;
    auto* match = app.add_subcommand("match", "Batch map-matching fix as JSON");
    match->add_option("--map", match_args.map_path, "Map file")->required();
    match->add_option("--batch", match_args.batch_path, "Batch JSON file")->required();
    match->add_option("--algo", match_args.algo, "Matcher: pmht or viterbi")
        ->check(CLI::IsMember({"pmht", "viterbi"}));
    match->add_option("--gamma", match_args.params.gamma, "Prior gate, chi-squared threshold");
    match->add_option("--kappa", match_args.params.kappa, "Signal gate half-width, sigmas");
    match->add_option("--tol", match_args.params.tol, "Convergence threshold, m");
    match->add_option("--max-iters", match_args.params.max_iters, "Refinement pass limit");

    RunArgs sim_args;
    std::uint64_t seed_flag = 0;
    auto* sim = app.add_subcommand("simulate", "One mission run to a track CSV");
    sim->add_option("--config", sim_args.config_path, "Scenario JSON")->required();
    auto* sim_seed = sim->add_option("--seed", seed_flag, "Run seed (overrides the config)");
    sim->add_option("--out", sim_args.out, "Track CSV (overrides out_csv)");
    sim->add_option("--svg", sim_args.svg, "Error-vs-time plot (overrides out_svg)");

    RunArgs mc_args;
    auto* mc = app.add_subcommand("montecarlo", "Monte Carlo runs to an RMS metrics CSV");
    mc->add_option("--config", mc_args.config_path, "Scenario JSON")->required();
    auto* mc_seed = mc->add_option("--seed", seed_flag, "Master seed (overrides the config)");
    mc->add_option("--out", mc_args.out, "Metrics CSV (overrides out_csv)");
    mc->add_option("--svg", mc_args.svg, "RMS-vs-time plot (overrides out_svg)");
    mc->add_option("--threads", mc_args.threads, "Worker count (0 = hardware)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    if (pda_value_opt->count() > 0) pda_args.value = pda_value;
    if (sim_seed->count() > 0) sim_args.seed = seed_flag;
    if (mc_seed->count() > 0) mc_args.seed = seed_flag;

    try {
        if (info->parsed()) return cmd_map_info(map_path, map_format);
        if (synth->parsed()) return cmd_synth(synth_spec, synth_out);
        if (pda->parsed()) return cmd_pda(pda_args);
        if (mfv->parsed()) return cmd_mfv(map_path, mfv_out, mfv_radius, mfv_normalized);
        if (sweep->parsed()) return cmd_sweep(sweep_args);
        if (match->parsed()) return cmd_match(match_args);
        if (sim->parsed()) return cmd_simulate(sim_args);
        if (mc->parsed()) return cmd_montecarlo(mc_args);
    } catch (const magnav::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
