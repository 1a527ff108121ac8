#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "magnav/errors.hpp"
#include "magnav/geo.hpp"
#include "magnav/harness.hpp"
#include "magnav/ins_sim.hpp"
#include "magnav/integrator.hpp"
#include "magnav/map_grid.hpp"
#include "magnav/map_quality.hpp"
#include "magnav/mm_filter.hpp"
#include "magnav/pda.hpp"
#include "magnav/rng.hpp"

namespace py = pybind11;
using namespace magnav;

namespace {

void bind_geo(py::module_& m) {
    py::class_<GeoPosition>(m, "GeoPosition")
        .def(py::init<>())
        .def(py::init([](double lat, double lon, double height) {
                 return GeoPosition{lat, lon, height};
             }),
             py::arg("lat"), py::arg("lon"), py::arg("height") = 0.0)
        .def_readwrite("lat", &GeoPosition::lat)
        .def_readwrite("lon", &GeoPosition::lon)
        .def_readwrite("height", &GeoPosition::height)
        .def("__repr__", [](const GeoPosition& g) {
            return "GeoPosition(lat=" + std::to_string(g.lat) +
                   ", lon=" + std::to_string(g.lon) + ")";
        });

    py::class_<LocalFrame>(m, "LocalFrame")
        .def_static("at", &LocalFrame::at, py::arg("origin"))
        .def("to_local", &LocalFrame::to_local, py::arg("position"))
        .def("from_local", &LocalFrame::from_local, py::arg("north_east"),
             py::arg("height") = 0.0)
        .def_property_readonly("origin", &LocalFrame::origin)
        .def_property_readonly("metres_per_deg_lat", &LocalFrame::metres_per_deg_lat)
        .def_property_readonly("metres_per_deg_lon", &LocalFrame::metres_per_deg_lon);
}

void bind_map_grid(py::module_& m) {
    py::enum_<GridFormat>(m, "GridFormat")
        .value("ASCII_GRID", GridFormat::kAsciiGrid)
        .value("CSV", GridFormat::kCsv);

    py::class_<MapGrid>(m, "MapGrid")
        .def(py::init<GeoPosition, double, int, int, std::vector<double>, double>(),
             py::arg("origin"), py::arg("cell_size"), py::arg("n_rows"), py::arg("n_cols"),
             py::arg("values"), py::arg("nodata") = MapGrid::kDefaultNodata)
        .def_static("load", &MapGrid::load, py::arg("path"), py::arg("format"))
        .def_static("load_auto", &MapGrid::load_auto, py::arg("path"))
        .def("save_csv", &MapGrid::save_csv, py::arg("path"))
        .def("save_ascii", &MapGrid::save_ascii, py::arg("path"))
        .def_property_readonly("n_rows", &MapGrid::n_rows)
        .def_property_readonly("n_cols", &MapGrid::n_cols)
        .def_property_readonly("cell_size", &MapGrid::cell_size)
        .def_property_readonly("nodata", &MapGrid::nodata)
        .def_property_readonly("origin", &MapGrid::origin)
        .def_property_readonly("min_value", &MapGrid::min_value)
        .def_property_readonly("max_value", &MapGrid::max_value)
        .def_property_readonly("nodata_count", &MapGrid::nodata_count)
        .def_property_readonly("values", &MapGrid::values)
        .def("value", &MapGrid::value, py::arg("row"), py::arg("col"))
        .def("is_nodata", &MapGrid::is_nodata, py::arg("row"), py::arg("col"))
        .def("cell_center", &MapGrid::cell_center, py::arg("row"), py::arg("col"))
        .def("cell_containing", &MapGrid::cell_containing, py::arg("north_east"))
        .def("sample", &MapGrid::sample, py::arg("north_east"))
        .def("gradient_at_cell", &MapGrid::gradient_at_cell, py::arg("row"), py::arg("col"))
        .def("downsample", &MapGrid::downsample, py::arg("factor"))
        .def("frame", &MapGrid::frame)
        .def_property_readonly("extent_north", &MapGrid::extent_north)
        .def_property_readonly("extent_east", &MapGrid::extent_east);
}

void bind_pda(py::module_& m) {
    m.attr("DEFAULT_GAMMA") = kDefaultGamma;
    m.attr("DEFAULT_KAPPA") = kDefaultKappa;

    py::class_<MagMeasurement>(m, "MagMeasurement")
        .def(py::init<>())
        .def(py::init([](double value, double sigma, double time) {
                 MagMeasurement meas;
                 meas.value = value;
                 meas.sigma = sigma;
                 meas.time = time;
                 return meas;
             }),
             py::arg("value"), py::arg("sigma"), py::arg("time") = 0.0)
        .def_readwrite("value", &MagMeasurement::value)
        .def_readwrite("sigma", &MagMeasurement::sigma)
        .def_readwrite("time", &MagMeasurement::time);

    py::class_<PriorPosition>(m, "PriorPosition")
        .def(py::init<>())
        .def(py::init([](const Eigen::Vector2d& mean, const Eigen::Matrix2d& cov) {
                 PriorPosition p;
                 p.mean = mean;
                 p.cov = cov;
                 return p;
             }),
             py::arg("mean"), py::arg("cov"))
        .def_readwrite("mean", &PriorPosition::mean)
        .def_readwrite("cov", &PriorPosition::cov);

    py::class_<Candidate>(m, "Candidate")
        .def_readonly("location", &Candidate::location)
        .def_readonly("map_value", &Candidate::map_value)
        .def_readonly("weight", &Candidate::weight)
        .def_readonly("cov", &Candidate::cov)
        .def_readonly("row", &Candidate::row)
        .def_readonly("col", &Candidate::col);

    py::class_<CandidateSet>(m, "CandidateSet")
        .def_readonly("candidates", &CandidateSet::candidates)
        .def_readonly("time", &CandidateSet::time)
        .def_readonly("weight_underflow", &CandidateSet::weight_underflow)
        .def("__len__", &CandidateSet::size)
        .def("empty", &CandidateSet::empty);

    py::class_<PositionFix>(m, "PositionFix")
        .def_readonly("mean", &PositionFix::mean)
        .def_readonly("cov", &PositionFix::cov)
        .def_readonly("time", &PositionFix::time)
        .def_readonly("n_candidates", &PositionFix::n_candidates);

    m.def("gate_candidates", &gate_candidates, py::arg("map"), py::arg("prior"),
          py::arg("meas"), py::arg("gamma") = kDefaultGamma, py::arg("kappa") = kDefaultKappa);
    m.def("pda_weights", &pda_weights, py::arg("candidates"), py::arg("prior"));
    m.def("pda_estimate", &pda_estimate, py::arg("candidates"));
    m.def("pda_error", &pda_error, py::arg("fix"), py::arg("truth"));
}

void bind_map_quality(py::module_& m) {
    py::class_<SearchWindow>(m, "SearchWindow")
        .def(py::init<>())
        .def_static("circular", &SearchWindow::circular, py::arg("radius_m"))
        .def_readwrite("cov", &SearchWindow::cov)
        .def_readwrite("gamma", &SearchWindow::gamma)
        .def("offsets", &SearchWindow::offsets, py::arg("cell_size"));

    m.def("mfv", &mfv, py::arg("map"), py::arg("window") = SearchWindow{},
          py::call_guard<py::gil_scoped_release>());
    m.def("normalized", &normalized, py::arg("raster"));
    m.def("pda_error_map", &pda_error_map, py::arg("map"), py::arg("sigma"),
          py::arg("prior_cov"), py::arg("gamma") = kDefaultGamma,
          py::arg("kappa") = kDefaultKappa, py::arg("n_samples") = 1000, py::arg("seed") = 0,
          py::call_guard<py::gil_scoped_release>());
    m.def("rms_adjacent_difference", &rms_adjacent_difference, py::arg("map"));

    py::class_<SweepResult>(m, "SweepResult")
        .def_readonly("sigma", &SweepResult::sigma)
        .def_readonly("factor", &SweepResult::factor)
        .def_readonly("mean_error", &SweepResult::mean_error)
        .def_readonly("std_error", &SweepResult::std_error)
        .def_readonly("n_samples", &SweepResult::n_samples);

    py::class_<SweepParams>(m, "SweepParams")
        .def(py::init<>())
        .def_readwrite("sigmas", &SweepParams::sigmas)
        .def_readwrite("factors", &SweepParams::factors)
        .def_readwrite("n_samples", &SweepParams::n_samples)
        .def_readwrite("seed", &SweepParams::seed)
        .def_readwrite("prior_sigma", &SweepParams::prior_sigma)
        .def_readwrite("gamma", &SweepParams::gamma)
        .def_readwrite("kappa", &SweepParams::kappa);

    m.def("noise_resolution_sweep",
          py::overload_cast<const MapGrid&, const SweepParams&>(&noise_resolution_sweep),
          py::arg("map"), py::arg("params"), py::call_guard<py::gil_scoped_release>());

    py::class_<SyntheticMapSpec>(m, "SyntheticMapSpec")
        .def(py::init<>())
        .def_readwrite("n_rows", &SyntheticMapSpec::n_rows)
        .def_readwrite("n_cols", &SyntheticMapSpec::n_cols)
        .def_readwrite("cell_size", &SyntheticMapSpec::cell_size)
        .def_readwrite("amplitude", &SyntheticMapSpec::amplitude)
        .def_readwrite("base_correlation_cells", &SyntheticMapSpec::base_correlation_cells)
        .def_readwrite("octaves", &SyntheticMapSpec::octaves)
        .def_readwrite("persistence", &SyntheticMapSpec::persistence)
        .def_readwrite("ramp_north", &SyntheticMapSpec::ramp_north)
        .def_readwrite("ramp_east", &SyntheticMapSpec::ramp_east)
        .def_readwrite("origin", &SyntheticMapSpec::origin)
        .def_readwrite("seed", &SyntheticMapSpec::seed);

    m.def("synthetic_tmi_map", &synthetic_tmi_map, py::arg("spec"),
          py::call_guard<py::gil_scoped_release>());
}

void bind_mm_filter(py::module_& m) {
    py::class_<Batch>(m, "Batch")
        .def(py::init<>())
        .def_readwrite("measurements", &Batch::measurements)
        .def_readwrite("priors", &Batch::priors)
        .def_readwrite("velocity", &Batch::velocity)
        .def_readwrite("velocity_cov", &Batch::velocity_cov)
        .def("__len__", &Batch::size)
        .def("dt", &Batch::dt, py::arg("k"))
        .def("step", &Batch::step, py::arg("k"))
        .def("check", &Batch::check);

    py::class_<MatchParams>(m, "MatchParams")
        .def(py::init<>())
        .def_readwrite("gamma", &MatchParams::gamma)
        .def_readwrite("kappa", &MatchParams::kappa)
        .def_readwrite("tol", &MatchParams::tol)
        .def_readwrite("max_iters", &MatchParams::max_iters)
        .def_readwrite("near_optimal_window", &MatchParams::near_optimal_window);

    py::class_<MatchResult>(m, "MatchResult")
        .def_readonly("fix", &MatchResult::fix)
        .def_readonly("smoothed_track", &MatchResult::smoothed_track)
        .def_readonly("iterations", &MatchResult::iterations)
        .def_readonly("converged", &MatchResult::converged)
        .def_readonly("objectives", &MatchResult::objectives);

    m.def("pmht_mm", &pmht_mm, py::arg("batch"), py::arg("map"),
          py::arg("params") = MatchParams{}, py::call_guard<py::gil_scoped_release>());
    m.def("viterbi_mm", &viterbi_mm, py::arg("batch"), py::arg("map"),
          py::arg("params") = MatchParams{}, py::call_guard<py::gil_scoped_release>());
}

void bind_ins(py::module_& m) {
    m.attr("DEG_PER_HOUR") = kDegPerHour;

    py::class_<SensorSpec>(m, "SensorSpec")
        .def(py::init<>())
        .def_static("precision", &SensorSpec::precision)
        .def_static("tactical", &SensorSpec::tactical)
        .def_readwrite("accel_bias_horiz", &SensorSpec::accel_bias_horiz)
        .def_readwrite("accel_noise_horiz", &SensorSpec::accel_noise_horiz)
        .def_readwrite("accel_bias_vert", &SensorSpec::accel_bias_vert)
        .def_readwrite("accel_noise_vert", &SensorSpec::accel_noise_vert)
        .def_readwrite("gyro_bias_horiz", &SensorSpec::gyro_bias_horiz)
        .def_readwrite("gyro_noise_horiz", &SensorSpec::gyro_noise_horiz)
        .def_readwrite("gyro_bias_vert", &SensorSpec::gyro_bias_vert)
        .def_readwrite("gyro_noise_vert", &SensorSpec::gyro_noise_vert)
        .def_readwrite("rate", &SensorSpec::rate)
        .def("check", &SensorSpec::check);

    py::class_<ImuSample>(m, "ImuSample")
        .def(py::init<>())
        .def_readwrite("f_b", &ImuSample::f_b)
        .def_readwrite("omega_b", &ImuSample::omega_b)
        .def_readwrite("time", &ImuSample::time);

    py::class_<TruthTrajectory>(m, "TruthTrajectory")
        .def(py::init<const GeoPosition&, const GeoPosition&, double, double>(),
             py::arg("start"), py::arg("end"), py::arg("speed"), py::arg("rate"))
        .def_property_readonly("duration", &TruthTrajectory::duration)
        .def_property_readonly("rate", &TruthTrajectory::rate)
        .def_property_readonly("speed", &TruthTrajectory::speed)
        .def_property_readonly("height", &TruthTrajectory::height)
        .def_property_readonly("heading", &TruthTrajectory::heading)
        .def_property_readonly("n_samples", &TruthTrajectory::n_samples)
        .def("sample_time", &TruthTrajectory::sample_time, py::arg("i"))
        .def("frame", &TruthTrajectory::frame)
        .def("local_at", &TruthTrajectory::local_at, py::arg("t"))
        .def("position_at", &TruthTrajectory::position_at, py::arg("t"))
        .def("velocity_ned", &TruthTrajectory::velocity_ned)
        .def("c_nb", &TruthTrajectory::c_nb);

    m.def("generate_truth", &generate_truth, py::arg("start"), py::arg("end"),
          py::arg("speed"), py::arg("rate"));
    m.def("ideal_specific_force", &ideal_specific_force, py::arg("truth"), py::arg("t"));
    m.def("ideal_angular_rate", &ideal_angular_rate, py::arg("truth"), py::arg("t"));

    py::class_<ImuStream>(m, "ImuStream")
        .def(py::init<const TruthTrajectory&, const SensorSpec&, std::uint64_t>(),
             py::arg("truth"), py::arg("spec"), py::arg("seed"))
        .def("next", &ImuStream::next)
        .def("__len__", &ImuStream::size)
        .def_property_readonly("produced", &ImuStream::produced)
        .def_property_readonly("true_accel_bias", &ImuStream::true_accel_bias)
        .def_property_readonly("true_gyro_bias", &ImuStream::true_gyro_bias);

    py::class_<NavState>(m, "NavState")
        .def(py::init<>())
        .def_readwrite("position", &NavState::position)
        .def_readwrite("velocity_ned", &NavState::velocity_ned)
        .def_readwrite("attitude_rpy", &NavState::attitude_rpy)
        .def_readwrite("accel_bias", &NavState::accel_bias)
        .def_readwrite("gyro_bias", &NavState::gyro_bias)
        .def_readwrite("cov", &NavState::cov)
        .def_readwrite("time", &NavState::time);

    py::class_<InsPropagator>(m, "InsPropagator")
        .def(py::init<const TruthTrajectory&, const SensorSpec&>(), py::arg("truth"),
             py::arg("spec"))
        .def("initial_state", &InsPropagator::initial_state, py::arg("pos_sigma") = 0.0,
             py::arg("vel_sigma") = 0.0, py::arg("att_sigma") = 0.0)
        .def("propagate", &InsPropagator::propagate, py::arg("state"), py::arg("imu"),
             py::arg("dt"))
        .def("truth", &InsPropagator::truth)
        .def("error_of", &InsPropagator::error_of, py::arg("state"));
}

void bind_integrator(py::module_& m) {
    py::class_<AidingMeasurement>(m, "AidingMeasurement")
        .def(py::init<>())
        .def_readwrite("position", &AidingMeasurement::position)
        .def_readwrite("cov", &AidingMeasurement::cov)
        .def_readwrite("time", &AidingMeasurement::time)
        .def_readwrite("mfv_scale", &AidingMeasurement::mfv_scale);

    py::class_<UkfConfig>(m, "UkfConfig")
        .def(py::init<>())
        .def_readwrite("alpha", &UkfConfig::alpha)
        .def_readwrite("beta", &UkfConfig::beta)
        .def_readwrite("kappa", &UkfConfig::kappa)
        .def_readwrite("reject_threshold", &UkfConfig::reject_threshold);

    py::class_<UpdateResult>(m, "UpdateResult")
        .def_readonly("state", &UpdateResult::state)
        .def_readonly("accepted", &UpdateResult::accepted)
        .def_readonly("mahalanobis", &UpdateResult::mahalanobis);

    m.def("predict", &predict, py::arg("propagator"), py::arg("state"), py::arg("imu"),
          py::arg("dt"));
    m.def("ukf_update", &ukf_update, py::arg("pred"), py::arg("meas"), py::arg("frame"),
          py::arg("cfg") = UkfConfig{});

    py::class_<MfvWeightConfig>(m, "MfvWeightConfig")
        .def(py::init<>())
        .def_readwrite("reference", &MfvWeightConfig::reference)
        .def_readwrite("min_scale", &MfvWeightConfig::min_scale)
        .def_readwrite("max_scale", &MfvWeightConfig::max_scale);

    m.def("apply_mfv_weighting", &apply_mfv_weighting, py::arg("fix"), py::arg("mfv_value"),
          py::arg("cfg") = MfvWeightConfig{});
}

void bind_harness(py::module_& m) {
    py::enum_<MatchAlgorithm>(m, "MatchAlgorithm")
        .value("PMHT", MatchAlgorithm::kPmht)
        .value("VITERBI", MatchAlgorithm::kViterbi);

    py::class_<MagnetometerConfig>(m, "MagnetometerConfig")
        .def(py::init<>())
        .def_readwrite("sigma", &MagnetometerConfig::sigma)
        .def_readwrite("period", &MagnetometerConfig::period);

    py::class_<MatchingConfig>(m, "MatchingConfig")
        .def(py::init<>())
        .def_readwrite("enabled", &MatchingConfig::enabled)
        .def_readwrite("algorithm", &MatchingConfig::algorithm)
        .def_readwrite("batch_length", &MatchingConfig::batch_length)
        .def_readwrite("gamma", &MatchingConfig::gamma)
        .def_readwrite("kappa", &MatchingConfig::kappa)
        .def_readwrite("gate_sigma_floor", &MatchingConfig::gate_sigma_floor)
        .def_readwrite("tol", &MatchingConfig::tol)
        .def_readwrite("max_iters", &MatchingConfig::max_iters);

    py::class_<IntegrationConfig>(m, "IntegrationConfig")
        .def(py::init<>())
        .def_readwrite("enabled", &IntegrationConfig::enabled)
        .def_readwrite("reject_threshold", &IntegrationConfig::reject_threshold)
        .def_readwrite("mfv_weighting", &IntegrationConfig::mfv_weighting)
        .def_readwrite("mfv_min_scale", &IntegrationConfig::mfv_min_scale)
        .def_readwrite("mfv_max_scale", &IntegrationConfig::mfv_max_scale);

    py::class_<InitialErrors>(m, "InitialErrors")
        .def(py::init<>())
        .def_readwrite("pos_sigma", &InitialErrors::pos_sigma)
        .def_readwrite("vel_sigma", &InitialErrors::vel_sigma)
        .def_readwrite("att_sigma", &InitialErrors::att_sigma);

    py::class_<ScenarioConfig>(m, "ScenarioConfig")
        .def(py::init<>())
        .def_readwrite("map_path", &ScenarioConfig::map_path)
        .def_readwrite("map_synthetic", &ScenarioConfig::map_synthetic)
        .def_readwrite("start", &ScenarioConfig::start)
        .def_readwrite("end", &ScenarioConfig::end)
        .def_readwrite("speed", &ScenarioConfig::speed)
        .def_readwrite("sensors", &ScenarioConfig::sensors)
        .def_readwrite("magnetometer", &ScenarioConfig::magnetometer)
        .def_readwrite("matching", &ScenarioConfig::matching)
        .def_readwrite("integration", &ScenarioConfig::integration)
        .def_readwrite("initial_errors", &ScenarioConfig::initial_errors)
        .def_readwrite("n_runs", &ScenarioConfig::n_runs)
        .def_readwrite("seed", &ScenarioConfig::seed)
        .def_readwrite("out_csv", &ScenarioConfig::out_csv)
        .def_readwrite("out_svg", &ScenarioConfig::out_svg)
        .def("check", &ScenarioConfig::check);

    m.def("parse_scenario", &parse_scenario, py::arg("json_text"));
    m.def("load_scenario", &load_scenario, py::arg("path"));
    m.def("scenario_to_json", &scenario_to_json, py::arg("config"));
    m.def("build_scenario_map", &build_scenario_map, py::arg("config"),
          py::call_guard<py::gil_scoped_release>());

    py::class_<TrackPoint>(m, "TrackPoint")
        .def_readonly("time", &TrackPoint::time)
        .def_readonly("truth", &TrackPoint::truth)
        .def_readonly("estimate", &TrackPoint::estimate)
        .def_readonly("error", &TrackPoint::error);

    py::class_<RunMetrics>(m, "RunMetrics")
        .def(py::init<>())
        .def_readonly("times", &RunMetrics::times)
        .def_readonly("errors", &RunMetrics::errors)
        .def_readonly("track", &RunMetrics::track)
        .def_readonly("aiding_attempts", &RunMetrics::aiding_attempts)
        .def_readonly("aiding_success", &RunMetrics::aiding_success)
        .def_readonly("fix_rejections", &RunMetrics::fix_rejections)
        .def_readonly("n_runs", &RunMetrics::n_runs);

    py::class_<ScenarioEngine>(m, "ScenarioEngine")
        .def(py::init<const ScenarioConfig&, const MapGrid&>(), py::arg("config"),
             py::arg("map"), py::keep_alive<1, 3>())
        .def("run", &ScenarioEngine::run, py::arg("run_seed"),
             py::call_guard<py::gil_scoped_release>())
        .def("truth", &ScenarioEngine::truth)
        .def_property_readonly("matching_sigma", &ScenarioEngine::matching_sigma);

    m.def("run_scenario", &run_scenario, py::arg("config"), py::arg("run_seed"),
          py::call_guard<py::gil_scoped_release>());
    m.def("run_monte_carlo", &run_monte_carlo, py::arg("config"), py::arg("n_threads") = 0,
          py::call_guard<py::gil_scoped_release>());
    m.def("aggregate_runs", &aggregate_runs, py::arg("runs"));

    m.def("write_metrics_csv", &write_metrics_csv, py::arg("metrics"), py::arg("path"));
    m.def("read_metrics_csv", &read_metrics_csv, py::arg("path"));
    m.def("write_track_csv", &write_track_csv, py::arg("metrics"), py::arg("path"));
    m.def("write_sweep_csv", &write_sweep_csv, py::arg("results"), py::arg("path"));
    m.def("emit_report", &emit_report, py::arg("metrics"), py::arg("csv_path"),
          py::arg("svg_path") = std::filesystem::path{});

    m.def("parse_batch_json", &parse_batch_json, py::arg("json_text"));
    m.def("load_batch", &load_batch, py::arg("path"));
    m.def("batch_to_json", &batch_to_json, py::arg("batch"));
}

void bind_rng(py::module_& m) {
    py::class_<Rng>(m, "Rng")
        .def(py::init<std::uint64_t>(), py::arg("seed"))
        .def_static("derive", py::overload_cast<std::uint64_t, std::uint64_t>(&Rng::derive),
                    py::arg("seed"), py::arg("stream"))
        .def("next_u64", &Rng::next_u64)
        .def("uniform", py::overload_cast<>(&Rng::uniform))
        .def("uniform", py::overload_cast<double, double>(&Rng::uniform), py::arg("lo"),
             py::arg("hi"))
        .def("gaussian", &Rng::gaussian);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Magnetic anomaly map matching core";

    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<BoundsError>(m, "BoundsError");
    py::register_exception<NodataError>(m, "NodataError");

    bind_geo(m);
    bind_map_grid(m);
    bind_pda(m);
    bind_map_quality(m);
    bind_mm_filter(m);
    bind_ins(m);
    bind_integrator(m);
    bind_harness(m);
    bind_rng(m);
}
