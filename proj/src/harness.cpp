#include "magnav/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <string>

#include <json.hpp>

#include "magnav/errors.hpp"
#include "magnav/parallel.hpp"
#include "magnav/rng.hpp"

namespace magnav {
namespace {

using nlohmann::json;

[[noreturn]] void bad_key(const std::string& context, const std::string& key,
                          const std::string& why) {
    throw ConfigError(context + "." + key + ": " + why);
}

void require_object(const json& j, const std::string& context,
                    std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(context + ": expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const bool known =
            std::any_of(allowed.begin(), allowed.end(),
                        [&](const char* k) { return it.key() == k; });
        if (!known) throw ConfigError(context + ": unknown key '" + it.key() + "'");
    }
}

double get_num(const json& j, const std::string& context, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number()) bad_key(context, key, "expected a number");
    return v.get<double>();
}

int get_int(const json& j, const std::string& context, const char* key, int fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number_integer()) bad_key(context, key, "expected an integer");
    return v.get<int>();
}

std::uint64_t get_u64(const json& j, const std::string& context, const char* key,
                      std::uint64_t fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
        return static_cast<std::uint64_t>(v.get<std::int64_t>());
    bad_key(context, key, "expected a non-negative integer");
}

bool get_bool(const json& j, const std::string& context, const char* key, bool fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_boolean()) bad_key(context, key, "expected true or false");
    return v.get<bool>();
}

std::string get_str(const json& j, const std::string& context, const char* key,
                    const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_string()) bad_key(context, key, "expected a string");
    return v.get<std::string>();
}

Eigen::Vector2d parse_vec2(const json& j, const std::string& context) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ConfigError(context + ": expected [north, east]");
    return {j[0].get<double>(), j[1].get<double>()};
}

Eigen::Matrix2d parse_mat2(const json& j, const std::string& context) {
    if (!j.is_array() || j.size() != 2)
        throw ConfigError(context + ": expected a 2x2 row-major array");
    Eigen::Matrix2d m;
    for (int r = 0; r < 2; ++r) {
        const json& row = j[r];
        if (!row.is_array() || row.size() != 2 || !row[0].is_number() || !row[1].is_number())
            throw ConfigError(context + ": expected a 2x2 row-major array");
        m(r, 0) = row[0].get<double>();
        m(r, 1) = row[1].get<double>();
    }
    return m;
}

json vec2_json(const Eigen::Vector2d& v) { return json::array({v.x(), v.y()}); }

json mat2_json(const Eigen::Matrix2d& m) {
    return json::array({json::array({m(0, 0), m(0, 1)}), json::array({m(1, 0), m(1, 1)})});
}

GeoPosition parse_geo(const json& j, const std::string& context) {
    require_object(j, context, {"lat", "lon", "height"});
    if (!j.contains("lat") || !j.contains("lon"))
        throw ConfigError(context + ": lat and lon are required");
    GeoPosition g;
    g.lat = get_num(j, context, "lat", 0.0);
    g.lon = get_num(j, context, "lon", 0.0);
    g.height = get_num(j, context, "height", 0.0);
    return g;
}

json geo_json(const GeoPosition& g) {
    return json{{"lat", g.lat}, {"lon", g.lon}, {"height", g.height}};
}

SyntheticMapSpec parse_synthetic(const json& j) {
    const std::string ctx = "map.synthetic";
    require_object(j, ctx,
                   {"n_rows", "n_cols", "cell_size", "amplitude", "base_correlation_cells",
                    "octaves", "persistence", "ramp_north", "ramp_east", "origin", "seed"});
    SyntheticMapSpec s;
    s.n_rows = get_int(j, ctx, "n_rows", s.n_rows);
    s.n_cols = get_int(j, ctx, "n_cols", s.n_cols);
    s.cell_size = get_num(j, ctx, "cell_size", s.cell_size);
    s.amplitude = get_num(j, ctx, "amplitude", s.amplitude);
    s.base_correlation_cells = get_num(j, ctx, "base_correlation_cells", s.base_correlation_cells);
    s.octaves = get_int(j, ctx, "octaves", s.octaves);
    s.persistence = get_num(j, ctx, "persistence", s.persistence);
    s.ramp_north = get_num(j, ctx, "ramp_north", s.ramp_north);
    s.ramp_east = get_num(j, ctx, "ramp_east", s.ramp_east);
    if (j.contains("origin")) s.origin = parse_geo(j.at("origin"), ctx + ".origin");
    s.seed = get_u64(j, ctx, "seed", s.seed);
    return s;
}

json synthetic_json(const SyntheticMapSpec& s) {
    return json{{"n_rows", s.n_rows},
                {"n_cols", s.n_cols},
                {"cell_size", s.cell_size},
                {"amplitude", s.amplitude},
                {"base_correlation_cells", s.base_correlation_cells},
                {"octaves", s.octaves},
                {"persistence", s.persistence},
                {"ramp_north", s.ramp_north},
                {"ramp_east", s.ramp_east},
                {"origin", geo_json(s.origin)},
                {"seed", s.seed}};
}

SensorSpec parse_sensors(const json& j) {
    const std::string ctx = "imu";
    require_object(j, ctx,
                   {"grade", "rate", "accel_bias_horiz", "accel_noise_horiz", "accel_bias_vert",
                    "accel_noise_vert", "gyro_bias_horiz", "gyro_noise_horiz", "gyro_bias_vert",
                    "gyro_noise_vert"});
    const std::string grade = get_str(j, ctx, "grade", "precision");
    SensorSpec s;
    if (grade == "precision") {
        s = SensorSpec::precision();
    } else if (grade == "tactical") {
        s = SensorSpec::tactical();
    } else {
        bad_key(ctx, "grade", "expected 'precision' or 'tactical'");
    }
    s.accel_bias_horiz = get_num(j, ctx, "accel_bias_horiz", s.accel_bias_horiz);
    s.accel_noise_horiz = get_num(j, ctx, "accel_noise_horiz", s.accel_noise_horiz);
    s.accel_bias_vert = get_num(j, ctx, "accel_bias_vert", s.accel_bias_vert);
    s.accel_noise_vert = get_num(j, ctx, "accel_noise_vert", s.accel_noise_vert);
    s.gyro_bias_horiz = get_num(j, ctx, "gyro_bias_horiz", s.gyro_bias_horiz);
    s.gyro_noise_horiz = get_num(j, ctx, "gyro_noise_horiz", s.gyro_noise_horiz);
    s.gyro_bias_vert = get_num(j, ctx, "gyro_bias_vert", s.gyro_bias_vert);
    s.gyro_noise_vert = get_num(j, ctx, "gyro_noise_vert", s.gyro_noise_vert);
    s.rate = get_num(j, ctx, "rate", s.rate);
    return s;
}

json sensors_json(const SensorSpec& s) {
    return json{{"accel_bias_horiz", s.accel_bias_horiz},
                {"accel_noise_horiz", s.accel_noise_horiz},
                {"accel_bias_vert", s.accel_bias_vert},
                {"accel_noise_vert", s.accel_noise_vert},
                {"gyro_bias_horiz", s.gyro_bias_horiz},
                {"gyro_noise_horiz", s.gyro_noise_horiz},
                {"gyro_bias_vert", s.gyro_bias_vert},
                {"gyro_noise_vert", s.gyro_noise_vert},
                {"rate", s.rate}};
}

MatchAlgorithm parse_algorithm(const std::string& name) {
    if (name == "pmht") return MatchAlgorithm::kPmht;
    if (name == "viterbi") return MatchAlgorithm::kViterbi;
    throw ConfigError("matching.algorithm: expected 'pmht' or 'viterbi'");
}

const char* algorithm_name(MatchAlgorithm a) {
    return a == MatchAlgorithm::kPmht ? "pmht" : "viterbi";
}

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw ConfigError(std::string(what) + " must be finite");
}

std::FILE* open_for_write(const std::filesystem::path& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (f == nullptr) throw std::runtime_error("cannot write '" + path.string() + "'");
    return f;
}

}  // namespace

void ScenarioConfig::check() const {
    if (map_path.empty() == !map_synthetic.has_value())
        throw ConfigError("map: exactly one of 'path' and 'synthetic' must be given");
    for (const GeoPosition* g : {&start, &end}) {
        require_finite(g->lat, "trajectory latitude");
        require_finite(g->lon, "trajectory longitude");
        require_finite(g->height, "trajectory height");
        if (std::abs(g->lat) >= 90.0)
            throw ConfigError("trajectory latitude must lie strictly between -90 and 90");
    }
    require_finite(speed, "trajectory.speed");
    if (speed <= 0.0) throw ConfigError("trajectory.speed must be positive");
    sensors.check();
    require_finite(magnetometer.sigma, "magnetometer.sigma");
    if (magnetometer.sigma < 0.0) throw ConfigError("magnetometer.sigma must be >= 0");
    if (!(magnetometer.period > 0.0)) throw ConfigError("magnetometer.period must be positive");
    const double steps = magnetometer.period * sensors.rate;
    if (std::abs(steps - std::round(steps)) > 1e-9 || std::round(steps) < 1.0)
        throw ConfigError("magnetometer.period must be a whole number of IMU steps");
    if (matching.batch_length < 1) throw ConfigError("matching.batch_length must be >= 1");
    if (!(matching.gamma > 0.0)) throw ConfigError("matching.gamma must be positive");
    if (!(matching.kappa > 0.0)) throw ConfigError("matching.kappa must be positive");
    if (!(matching.gate_sigma_floor >= 0.0))
        throw ConfigError("matching.gate_sigma_floor must be >= 0");
    if (!(matching.tol > 0.0)) throw ConfigError("matching.tol must be positive");
    if (matching.max_iters < 1) throw ConfigError("matching.max_iters must be >= 1");
    if (!(integration.reject_threshold > 0.0))
        throw ConfigError("integration.reject_threshold must be positive");
    if (!(integration.mfv_min_scale > 0.0) ||
        !(integration.mfv_max_scale >= integration.mfv_min_scale))
        throw ConfigError("integration mfv scales need 0 < min <= max");
    if (!(initial_errors.pos_sigma >= 0.0) || !(initial_errors.vel_sigma >= 0.0) ||
        !(initial_errors.att_sigma >= 0.0))
        throw ConfigError("initial_errors sigmas must be >= 0");
    if (n_runs < 1) throw ConfigError("n_runs must be >= 1");
}

ScenarioConfig parse_scenario(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        const std::size_t upto = std::min(e.byte, json_text.size());
        const std::size_t line =
            1 + static_cast<std::size_t>(
                    std::count(json_text.begin(), json_text.begin() + upto, '\n'));
        throw ParseError(std::string("invalid JSON: ") + e.what(), line);
    }
    require_object(j, "scenario",
                   {"schema_version", "map", "trajectory", "imu", "magnetometer", "matching",
                    "integration", "initial_errors", "n_runs", "seed", "output"});
    if (get_int(j, "scenario", "schema_version", 0) != 1)
        throw ConfigError("scenario.schema_version: expected 1");
    if (!j.contains("map") || !j.contains("trajectory"))
        throw ConfigError("scenario: 'map' and 'trajectory' are required");

    ScenarioConfig c;

    const json& jm = j.at("map");
    require_object(jm, "map", {"path", "synthetic"});
    c.map_path = get_str(jm, "map", "path", "");
    if (jm.contains("synthetic")) c.map_synthetic = parse_synthetic(jm.at("synthetic"));

    const json& jt = j.at("trajectory");
    require_object(jt, "trajectory", {"start", "end", "speed"});
    if (!jt.contains("start") || !jt.contains("end"))
        throw ConfigError("trajectory: start and end are required");
    c.start = parse_geo(jt.at("start"), "trajectory.start");
    c.end = parse_geo(jt.at("end"), "trajectory.end");
    c.speed = get_num(jt, "trajectory", "speed", c.speed);

    if (j.contains("imu")) c.sensors = parse_sensors(j.at("imu"));

    if (j.contains("magnetometer")) {
        const json& p = j.at("magnetometer");
        require_object(p, "magnetometer", {"sigma", "period"});
        c.magnetometer.sigma = get_num(p, "magnetometer", "sigma", c.magnetometer.sigma);
        c.magnetometer.period = get_num(p, "magnetometer", "period", c.magnetometer.period);
    }

    if (j.contains("matching")) {
        const json& p = j.at("matching");
        require_object(p, "matching",
                       {"enabled", "algorithm", "batch_length", "gamma", "kappa",
                        "gate_sigma_floor", "tol", "max_iters"});
        c.matching.enabled = get_bool(p, "matching", "enabled", c.matching.enabled);
        c.matching.algorithm =
            parse_algorithm(get_str(p, "matching", "algorithm", algorithm_name(c.matching.algorithm)));
        c.matching.batch_length = get_int(p, "matching", "batch_length", c.matching.batch_length);
        c.matching.gamma = get_num(p, "matching", "gamma", c.matching.gamma);
        c.matching.kappa = get_num(p, "matching", "kappa", c.matching.kappa);
        c.matching.gate_sigma_floor =
            get_num(p, "matching", "gate_sigma_floor", c.matching.gate_sigma_floor);
        c.matching.tol = get_num(p, "matching", "tol", c.matching.tol);
        c.matching.max_iters = get_int(p, "matching", "max_iters", c.matching.max_iters);
    }

    if (j.contains("integration")) {
        const json& p = j.at("integration");
        require_object(p, "integration",
                       {"enabled", "reject_threshold", "mfv_weighting", "mfv_min_scale",
                        "mfv_max_scale"});
        c.integration.enabled = get_bool(p, "integration", "enabled", c.integration.enabled);
        c.integration.reject_threshold =
            get_num(p, "integration", "reject_threshold", c.integration.reject_threshold);
        c.integration.mfv_weighting =
            get_bool(p, "integration", "mfv_weighting", c.integration.mfv_weighting);
        c.integration.mfv_min_scale =
            get_num(p, "integration", "mfv_min_scale", c.integration.mfv_min_scale);
        c.integration.mfv_max_scale =
            get_num(p, "integration", "mfv_max_scale", c.integration.mfv_max_scale);
    }

    if (j.contains("initial_errors")) {
        const json& p = j.at("initial_errors");
        require_object(p, "initial_errors", {"pos_sigma", "vel_sigma", "att_sigma"});
        c.initial_errors.pos_sigma =
            get_num(p, "initial_errors", "pos_sigma", c.initial_errors.pos_sigma);
        c.initial_errors.vel_sigma =
            get_num(p, "initial_errors", "vel_sigma", c.initial_errors.vel_sigma);
        c.initial_errors.att_sigma =
            get_num(p, "initial_errors", "att_sigma", c.initial_errors.att_sigma);
    }

    c.n_runs = get_int(j, "scenario", "n_runs", c.n_runs);
    c.seed = get_u64(j, "scenario", "seed", c.seed);

    if (j.contains("output")) {
        const json& p = j.at("output");
        require_object(p, "output", {"csv", "svg"});
        c.out_csv = get_str(p, "output", "csv", "");
        c.out_svg = get_str(p, "output", "svg", "");
    }

    c.check();
    return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

std::string scenario_to_json(const ScenarioConfig& c) {
    json jm;
    if (!c.map_path.empty()) jm["path"] = c.map_path;
    if (c.map_synthetic) jm["synthetic"] = synthetic_json(*c.map_synthetic);
    json j{{"schema_version", 1},
           {"map", jm},
           {"trajectory",
            json{{"start", geo_json(c.start)}, {"end", geo_json(c.end)}, {"speed", c.speed}}},
           {"imu", sensors_json(c.sensors)},
           {"magnetometer",
            json{{"sigma", c.magnetometer.sigma}, {"period", c.magnetometer.period}}},
           {"matching",
            json{{"enabled", c.matching.enabled},
                 {"algorithm", algorithm_name(c.matching.algorithm)},
                 {"batch_length", c.matching.batch_length},
                 {"gamma", c.matching.gamma},
                 {"kappa", c.matching.kappa},
                 {"gate_sigma_floor", c.matching.gate_sigma_floor},
                 {"tol", c.matching.tol},
                 {"max_iters", c.matching.max_iters}}},
           {"integration",
            json{{"enabled", c.integration.enabled},
                 {"reject_threshold", c.integration.reject_threshold},
                 {"mfv_weighting", c.integration.mfv_weighting},
                 {"mfv_min_scale", c.integration.mfv_min_scale},
                 {"mfv_max_scale", c.integration.mfv_max_scale}}},
           {"initial_errors",
            json{{"pos_sigma", c.initial_errors.pos_sigma},
                 {"vel_sigma", c.initial_errors.vel_sigma},
                 {"att_sigma", c.initial_errors.att_sigma}}},
           {"n_runs", c.n_runs},
           {"seed", c.seed},
           {"output", json{{"csv", c.out_csv}, {"svg", c.out_svg}}}};
    return j.dump(2) + "\n";
}

MapGrid build_scenario_map(const ScenarioConfig& config) {
    config.check();
    if (config.map_synthetic) return synthetic_tmi_map(*config.map_synthetic);
    return MapGrid::load_auto(config.map_path);
}

ScenarioEngine::ScenarioEngine(const ScenarioConfig& config, const MapGrid& map)
    : config_(config),
      map_(&map),
      truth_(config.start, config.end, config.speed, config.sensors.rate),
      map_frame_(map.frame()) {
    config_.check();
    period_steps_ = std::llround(config_.magnetometer.period * config_.sensors.rate);
    sigma_eff_ = config_.magnetometer.sigma;
    if (!config_.matching.enabled) return;

    sigma_eff_ = std::hypot(sigma_eff_, 0.5 * rms_adjacent_difference(map) / config_.matching.kappa);
    if (!(sigma_eff_ > 0.0))
        throw ConfigError("matching needs a positive magnetometer sigma or a non-constant map");
    for (std::size_t i = 0; i < truth_.n_samples(); ++i) {
        const double t = truth_.sample_time(i);
        if (!map.in_bounds(map_frame_.to_local(truth_.position_at(t))))
            throw ConfigError("trajectory leaves the map extent at t=" + std::to_string(t) + " s");
    }
    if (config_.integration.enabled && config_.integration.mfv_weighting) {
        mfv_map_ = mfv(map, SearchWindow{});
        mfv_config_.reference = mfv_map_->max_value();
        mfv_config_.min_scale = config_.integration.mfv_min_scale;
        mfv_config_.max_scale = config_.integration.mfv_max_scale;
    }
}

void ScenarioEngine::aid(NavState& state, Batch& batch, RunMetrics& metrics) const {
    ++metrics.aiding_attempts;
    batch.velocity = state.velocity_ned.head<2>();
    batch.velocity_cov = state.cov.block<2, 2>(2, 2);
    MatchParams params;
    params.gamma = config_.matching.gamma;
    params.kappa = config_.matching.kappa;
    params.tol = config_.matching.tol;
    params.max_iters = config_.matching.max_iters;
    std::optional<MatchResult> result;
    try {
        result = config_.matching.algorithm == MatchAlgorithm::kPmht
                     ? pmht_mm(batch, *map_, params)
                     : viterbi_mm(batch, *map_, params);
    } catch (const BoundsError&) {
        // The INS prediction has drifted off the map; nothing to match against.
        result.reset();
    }
    if (!result) return;
    ++metrics.aiding_success;
    if (!config_.integration.enabled) return;

    AidingMeasurement fix;
    fix.position =
        truth_.frame().to_local(map_frame_.from_local(result->fix.mean, truth_.height()));
    fix.cov = result->fix.cov;
    fix.time = state.time;
    if (mfv_map_) {
        const auto [row, col] = mfv_map_->cell_containing(result->fix.mean);
        if (!mfv_map_->is_nodata(row, col))
            fix = apply_mfv_weighting(fix, mfv_map_->value(row, col), mfv_config_);
    }
    UkfConfig ukf;
    ukf.reject_threshold = config_.integration.reject_threshold;
    const UpdateResult update = ukf_update(state, fix, truth_.frame(), ukf);
    if (update.accepted)
        state = update.state;
    else
        ++metrics.fix_rejections;
}

RunMetrics ScenarioEngine::run(std::uint64_t run_seed) const {
    const InsPropagator prop(truth_, config_.sensors);
    NavState state = prop.initial_state(config_.initial_errors.pos_sigma,
                                        config_.initial_errors.vel_sigma,
                                        config_.initial_errors.att_sigma);
    {
        Rng init_rng(Rng::derive(run_seed, 2));
        Eigen::Vector2d dp, dv;
        Eigen::Vector3d da;
        for (int i = 0; i < 2; ++i) dp[i] = config_.initial_errors.pos_sigma * init_rng.gaussian();
        for (int i = 0; i < 2; ++i) dv[i] = config_.initial_errors.vel_sigma * init_rng.gaussian();
        for (int i = 0; i < 3; ++i) da[i] = config_.initial_errors.att_sigma * init_rng.gaussian();
        state.position =
            truth_.frame().from_local(truth_.frame().to_local(state.position) + dp, truth_.height());
        state.velocity_ned.head<2>() += dv;
        state.attitude_rpy += da;
    }
    ImuStream imu(truth_, config_.sensors, Rng::derive(run_seed, 0));
    Rng mag_rng(Rng::derive(run_seed, 1));

    RunMetrics metrics;
    const std::size_t steps = imu.size();
    metrics.times.reserve(steps + 1);
    metrics.errors.reserve(steps + 1);
    const auto record = [&](const NavState& s) {
        const double err = prop.error_of(s).head<2>().norm();
        metrics.times.push_back(s.time);
        metrics.errors.push_back(err);
        metrics.track.push_back({s.time, truth_.position_at(s.time), s.position, err});
    };
    record(state);

    const double dt = 1.0 / config_.sensors.rate;
    Batch batch;
    for (std::size_t i = 1; i <= steps; ++i) {
        state = prop.propagate(state, imu.next(), dt);
        if (config_.matching.enabled && static_cast<long>(i) % period_steps_ == 0) {
            const double noise = config_.magnetometer.sigma * mag_rng.gaussian();
            const Eigen::Vector2d at = map_frame_.to_local(truth_.position_at(state.time));
            bool usable = true;
            double value = 0.0;
            try {
                value = map_->sample(at) + noise;
            } catch (const NodataError&) {
                usable = false;  // a hole in the survey; this epoch contributes nothing
            }
            if (usable) {
                batch.measurements.push_back({value, sigma_eff_, state.time});
                const double floor_var =
                    config_.matching.gate_sigma_floor * config_.matching.gate_sigma_floor;
                batch.priors.push_back({map_frame_.to_local(state.position),
                                        state.cov.block<2, 2>(0, 0) +
                                            floor_var * Eigen::Matrix2d::Identity()});
            }
            if (static_cast<int>(batch.size()) == config_.matching.batch_length) {
                aid(state, batch, metrics);
                batch.measurements.clear();
                batch.priors.clear();
            }
        }
        record(state);
    }
    return metrics;
}

RunMetrics run_scenario(const ScenarioConfig& config, std::uint64_t run_seed) {
    const MapGrid map = build_scenario_map(config);
    return ScenarioEngine(config, map).run(run_seed);
}

RunMetrics aggregate_runs(const std::vector<RunMetrics>& runs) {
    if (runs.empty()) throw ConfigError("no runs to aggregate");
    RunMetrics out;
    out.times = runs.front().times;
    const std::size_t n_t = out.times.size();
    for (const RunMetrics& r : runs) {
        if (r.times.size() != n_t || r.errors.size() != n_t)
            throw ConfigError("runs disagree on the time base");
        out.aiding_attempts += r.aiding_attempts;
        out.aiding_success += r.aiding_success;
        out.fix_rejections += r.fix_rejections;
    }
    out.n_runs = static_cast<int>(runs.size());
    if (runs.size() == 1) {
        out.errors = runs.front().errors;  // RMS of one series is the series itself
        return out;
    }
    out.errors.resize(n_t);
    for (std::size_t t = 0; t < n_t; ++t) {
        double acc = 0.0;
        for (const RunMetrics& r : runs) acc += r.errors[t] * r.errors[t];
        out.errors[t] = std::sqrt(acc / static_cast<double>(runs.size()));
    }
    return out;
}

RunMetrics run_monte_carlo(const ScenarioConfig& config, int n_threads) {
    config.check();
    const MapGrid map = build_scenario_map(config);
    const ScenarioEngine engine(config, map);
    std::vector<RunMetrics> runs(static_cast<std::size_t>(config.n_runs));
    parallel_for(
        config.n_runs,
        [&](int i) {
            runs[static_cast<std::size_t>(i)] =
                engine.run(Rng::derive(config.seed, static_cast<std::uint64_t>(i)));
            runs[static_cast<std::size_t>(i)].track.clear();
        },
        n_threads);
    return aggregate_runs(runs);
}

void write_metrics_csv(const RunMetrics& metrics, const std::filesystem::path& path) {
    if (metrics.times.size() != metrics.errors.size())
        throw ConfigError("metrics series are misaligned");
    std::FILE* f = open_for_write(path);
    std::fprintf(f, "t,rms_m,n_runs\n");
    for (std::size_t i = 0; i < metrics.times.size(); ++i)
        std::fprintf(f, "%.17g,%.17g,%d\n", metrics.times[i], metrics.errors[i], metrics.n_runs);
    std::fclose(f);
}

RunMetrics read_metrics_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open metrics '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty metrics file", 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "t,rms_m,n_runs") throw ParseError("expected header 't,rms_m,n_runs'", 1);
    RunMetrics out;
    out.n_runs = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        double t = 0.0;
        double rms = 0.0;
        int n = 0;
        if (std::sscanf(line.c_str(), "%lf,%lf,%d", &t, &rms, &n) != 3)
            throw ParseError("expected 't,rms_m,n_runs' row", line_no);
        if (rms < 0.0) throw ParseError("rms_m must be >= 0", line_no);
        if (out.n_runs == 0)
            out.n_runs = n;
        else if (n != out.n_runs)
            throw ParseError("n_runs changed mid-file", line_no);
        out.times.push_back(t);
        out.errors.push_back(rms);
    }
    if (out.times.empty()) throw ParseError("metrics file has no data rows", line_no);
    return out;
}

void write_track_csv(const RunMetrics& metrics, const std::filesystem::path& path) {
    if (metrics.track.empty()) throw ConfigError("no track recorded (aggregated metrics?)");
    std::FILE* f = open_for_write(path);
    std::fprintf(f, "t,truth_lat,truth_lon,est_lat,est_lon,err_m\n");
    for (const TrackPoint& p : metrics.track)
        std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", p.time, p.truth.lat, p.truth.lon,
                     p.estimate.lat, p.estimate.lon, p.error);
    std::fclose(f);
}

void write_sweep_csv(const std::vector<SweepResult>& results, const std::filesystem::path& path) {
    std::FILE* f = open_for_write(path);
    std::fprintf(f, "sigma,factor,mean_error_m,std_error_m,n\n");
    for (const SweepResult& r : results)
        std::fprintf(f, "%.17g,%d,%.17g,%.17g,%ld\n", r.sigma, r.factor, r.mean_error, r.std_error,
                     r.n_samples);
    std::fclose(f);
}

void write_line_svg(const std::vector<SvgSeries>& series, const std::filesystem::path& path,
                    bool log_x) {
    if (series.empty()) throw ConfigError("nothing to plot");
    for (const SvgSeries& s : series) {
        if (s.x.size() != s.y.size() || s.x.empty())
            throw ConfigError("plot series '" + s.label + "' is empty or misaligned");
        for (double v : s.x) {
            if (!std::isfinite(v)) throw ConfigError("plot series '" + s.label + "' has non-finite x");
            if (log_x && v <= 0.0)
                throw ConfigError("log-axis plot needs positive x in series '" + s.label + "'");
        }
    }
    const auto tx = [log_x](double v) { return log_x ? std::log10(v) : v; };
    double xmin = std::numeric_limits<double>::infinity();
    double xmax = -xmin;
    double ymin = xmin;
    double ymax = -xmin;
    for (const SvgSeries& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.y[i])) continue;
            xmin = std::min(xmin, tx(s.x[i]));
            xmax = std::max(xmax, tx(s.x[i]));
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    if (!std::isfinite(xmin) || !std::isfinite(ymin))
        throw ConfigError("plot has no finite points");
    if (xmax - xmin < 1e-12) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (ymax - ymin < 1e-12) {
        ymin -= 1.0;
        ymax += 1.0;
    } else {
        const double pad = 0.05 * (ymax - ymin);
        ymin -= pad;
        ymax += pad;
    }

    constexpr double kLeft = 70.0;
    constexpr double kRight = 940.0;
    constexpr double kTop = 20.0;
    constexpr double kBottom = 495.0;
    const auto px = [&](double v) { return kLeft + (tx(v) - xmin) / (xmax - xmin) * (kRight - kLeft); };
    const auto py = [&](double v) { return kBottom - (v - ymin) / (ymax - ymin) * (kBottom - kTop); };
    static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                     "#ff7f0e", "#8c564b"};
    constexpr int kPaletteSize = 6;

    std::FILE* f = open_for_write(path);
    std::fprintf(f, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    std::fprintf(f,
                 "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"960\" "
                 "height=\"540\" viewBox=\"0 0 960 540\">\n");
    std::fprintf(f, "<rect width=\"960\" height=\"540\" fill=\"white\"/>\n");
    // axis ticks and grid
    for (int i = 0; i <= 4; ++i) {
        const double frac = i / 4.0;
        const double gx = kLeft + frac * (kRight - kLeft);
        const double gy = kBottom - frac * (kBottom - kTop);
        const double xv = xmin + frac * (xmax - xmin);
        const double yv = ymin + frac * (ymax - ymin);
        std::fprintf(f,
                     "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"#dddddd\"/>\n",
                     gx, kTop, gx, kBottom);
        std::fprintf(f,
                     "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"#dddddd\"/>\n",
                     kLeft, gy, kRight, gy);
        std::fprintf(f,
                     "<text x=\"%.2f\" y=\"515\" font-family=\"sans-serif\" font-size=\"12\" "
                     "text-anchor=\"middle\">%.4g</text>\n",
                     gx, log_x ? std::pow(10.0, xv) : xv);
        std::fprintf(f,
                     "<text x=\"%.2f\" y=\"%.2f\" font-family=\"sans-serif\" font-size=\"12\" "
                     "text-anchor=\"end\">%.4g</text>\n",
                     kLeft - 6.0, gy + 4.0, yv);
    }
    std::fprintf(f,
                 "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"black\"/>\n",
                 kLeft, kBottom, kRight, kBottom);
    std::fprintf(f, "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"black\"/>\n",
                 kLeft, kTop, kLeft, kBottom);

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* colour = kPalette[s % kPaletteSize];
        std::fprintf(f, "<polyline fill=\"none\" stroke=\"%s\" stroke-width=\"1.5\" points=\"",
                     colour);
        for (std::size_t i = 0; i < series[s].x.size(); ++i) {
            if (!std::isfinite(series[s].y[i])) continue;
            std::fprintf(f, "%.2f,%.2f ", px(series[s].x[i]), py(series[s].y[i]));
        }
        std::fprintf(f, "\"/>\n");
        const double ly = kTop + 16.0 + 18.0 * static_cast<double>(s);
        std::fprintf(f,
                     "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"%s\" "
                     "stroke-width=\"2\"/>\n",
                     kRight - 160.0, ly - 4.0, kRight - 130.0, ly - 4.0, colour);
        std::fprintf(f,
                     "<text x=\"%.2f\" y=\"%.2f\" font-family=\"sans-serif\" "
                     "font-size=\"12\">%s</text>\n",
                     kRight - 124.0, ly, series[s].label.c_str());
    }
    std::fprintf(f, "</svg>\n");
    std::fclose(f);
}

void emit_report(const RunMetrics& metrics, const std::filesystem::path& csv_path,
                 const std::filesystem::path& svg_path) {
    write_metrics_csv(metrics, csv_path);
    if (!svg_path.empty()) {
        SvgSeries s;
        s.label = "rms_m";
        s.x = metrics.times;
        s.y = metrics.errors;
        write_line_svg({s}, svg_path);
    }
}

Batch parse_batch_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        const std::size_t upto = std::min(e.byte, json_text.size());
        const std::size_t line =
            1 + static_cast<std::size_t>(
                    std::count(json_text.begin(), json_text.begin() + upto, '\n'));
        throw ParseError(std::string("invalid JSON: ") + e.what(), line);
    }
    require_object(j, "batch", {"schema_version", "velocity", "velocity_cov", "epochs"});
    if (get_int(j, "batch", "schema_version", 0) != 1)
        throw ConfigError("batch.schema_version: expected 1");
    Batch b;
    if (j.contains("velocity")) b.velocity = parse_vec2(j.at("velocity"), "batch.velocity");
    if (j.contains("velocity_cov"))
        b.velocity_cov = parse_mat2(j.at("velocity_cov"), "batch.velocity_cov");
    if (!j.contains("epochs") || !j.at("epochs").is_array())
        throw ConfigError("batch.epochs: expected an array");
    for (std::size_t i = 0; i < j.at("epochs").size(); ++i) {
        const json& e = j.at("epochs")[i];
        const std::string ctx = "batch.epochs[" + std::to_string(i) + "]";
        require_object(e, ctx, {"time", "value", "sigma", "prior_mean", "prior_cov"});
        for (const char* key : {"time", "value", "sigma", "prior_mean", "prior_cov"})
            if (!e.contains(key)) throw ConfigError(ctx + ": '" + key + "' is required");
        MagMeasurement m;
        m.time = get_num(e, ctx, "time", 0.0);
        m.value = get_num(e, ctx, "value", 0.0);
        m.sigma = get_num(e, ctx, "sigma", 0.0);
        PriorPosition p;
        p.mean = parse_vec2(e.at("prior_mean"), ctx + ".prior_mean");
        p.cov = parse_mat2(e.at("prior_cov"), ctx + ".prior_cov");
        b.measurements.push_back(m);
        b.priors.push_back(p);
    }
    b.check();
    return b;
}

Batch load_batch(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open batch '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_batch_json(buf.str());
}

std::string batch_to_json(const Batch& batch) {
    batch.check();
    json epochs = json::array();
    for (std::size_t i = 0; i < batch.size(); ++i) {
        epochs.push_back(json{{"time", batch.measurements[i].time},
                              {"value", batch.measurements[i].value},
                              {"sigma", batch.measurements[i].sigma},
                              {"prior_mean", vec2_json(batch.priors[i].mean)},
                              {"prior_cov", mat2_json(batch.priors[i].cov)}});
    }
    json j{{"schema_version", 1},
           {"velocity", vec2_json(batch.velocity)},
           {"velocity_cov", mat2_json(batch.velocity_cov)},
           {"epochs", epochs}};
    return j.dump(2) + "\n";
}

}  // namespace magnav
