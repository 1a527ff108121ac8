#include "magnav/ins_sim.hpp"

#include <cmath>
#include <numbers>

#include "magnav/errors.hpp"

namespace magnav {
namespace {

double wrap_angle(double a) {
    a = std::remainder(a, 2.0 * std::numbers::pi);
    return a == -std::numbers::pi ? std::numbers::pi : a;
}

}  // namespace

SensorSpec SensorSpec::tactical() {
    SensorSpec s;
    s.accel_bias_horiz = 5e-4;
    s.accel_noise_horiz = 1e-3;
    s.accel_bias_vert = 5e-4;
    s.accel_noise_vert = 1e-3;
    s.gyro_bias_horiz = 1.0;    // deg/h
    s.gyro_noise_horiz = 0.1;
    s.gyro_bias_vert = 1.0;
    s.gyro_noise_vert = 0.1;
    return s;
}

void SensorSpec::check() const {
    if (!(rate > 0.0)) throw ConfigError("sensor rate must be positive");
    const double budgets[] = {accel_bias_horiz, accel_noise_horiz, accel_bias_vert,
                              accel_noise_vert, gyro_bias_horiz,  gyro_noise_horiz,
                              gyro_bias_vert,   gyro_noise_vert};
    for (double b : budgets) {
        if (!(b >= 0.0) || !std::isfinite(b)) {
            throw ConfigError("sensor budgets must be finite and non-negative");
        }
    }
}

TruthTrajectory::TruthTrajectory(const GeoPosition& start, const GeoPosition& end, double speed,
                                 double rate)
    : start_(start), frame_(LocalFrame::at(start)), speed_(speed), rate_(rate) {
    validate(end);
    if (!(speed > 0.0)) throw ConfigError("truth speed must be positive");
    if (!(rate > 0.0)) throw ConfigError("truth sample rate must be positive");
    if (end.height != start.height) {
        throw ConfigError("truth path must stay at a fixed height");
    }
    const Eigen::Vector2d delta = frame_.to_local(end);
    const double dist = delta.norm();
    if (!(dist > 0.0)) throw ConfigError("truth path has zero length");
    velocity_ne_ = speed * delta / dist;
    duration_ = dist / speed;
    heading_ = std::atan2(delta.y(), delta.x());
}

Eigen::Matrix3d TruthTrajectory::c_nb() const {
    const double c = std::cos(heading_), s = std::sin(heading_);
    Eigen::Matrix3d m;
    m << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
    return m;
}

TruthTrajectory generate_truth(const GeoPosition& start, const GeoPosition& end, double speed,
                               double rate) {
    return TruthTrajectory(start, end, speed, rate);
}

Eigen::Vector3d ideal_specific_force(const TruthTrajectory&, double) {
    return {0.0, 0.0, -earth::kGravity};
}

Eigen::Vector3d ideal_angular_rate(const TruthTrajectory& truth, double t) {
    const double lat = truth.position_at(t).lat * std::numbers::pi / 180.0;
    const Eigen::Vector3d omega_n{earth::kRotationRate * std::cos(lat), 0.0,
                                  -earth::kRotationRate * std::sin(lat)};
    return truth.c_nb().transpose() * omega_n;
}

ImuStream::ImuStream(const TruthTrajectory& truth, const SensorSpec& spec, std::uint64_t seed)
    : truth_(truth), spec_(spec), rng_(seed) {
    spec_.check();
    count_ = truth.n_samples() > 0 ? truth.n_samples() - 1 : 0;
    accel_bias_ = {rng_.uniform(-spec_.accel_bias_horiz, spec_.accel_bias_horiz),
                   rng_.uniform(-spec_.accel_bias_horiz, spec_.accel_bias_horiz),
                   rng_.uniform(-spec_.accel_bias_vert, spec_.accel_bias_vert)};
    gyro_bias_ = {rng_.uniform(-spec_.gyro_bias_horiz, spec_.gyro_bias_horiz) * kDegPerHour,
                  rng_.uniform(-spec_.gyro_bias_horiz, spec_.gyro_bias_horiz) * kDegPerHour,
                  rng_.uniform(-spec_.gyro_bias_vert, spec_.gyro_bias_vert) * kDegPerHour};
}

ImuSample ImuStream::next() {
    const double t = static_cast<double>(index_) / spec_.rate;
    ++index_;
    const double root_rate = std::sqrt(spec_.rate);
    ImuSample s;
    s.time = t;
    s.f_b = ideal_specific_force(truth_, t) + accel_bias_ +
            root_rate * Eigen::Vector3d(spec_.accel_noise_horiz * rng_.gaussian(),
                                        spec_.accel_noise_horiz * rng_.gaussian(),
                                        spec_.accel_noise_vert * rng_.gaussian());
    s.omega_b =
        ideal_angular_rate(truth_, t) + gyro_bias_ +
        root_rate * kDegPerHour *
            Eigen::Vector3d(spec_.gyro_noise_horiz * rng_.gaussian(),
                            spec_.gyro_noise_horiz * rng_.gaussian(),
                            spec_.gyro_noise_vert * rng_.gaussian());
    return s;
}

InsPropagator::InsPropagator(const TruthTrajectory& truth, const SensorSpec& spec)
    : truth_(truth), spec_(spec), c_nb_(truth.c_nb()) {
    spec_.check();
    const double g = earth::kGravity;
    const double schuler = g / earth::kMeanRadius;

    a_.setZero();
    a_(0, 2) = 1.0;  // dp' = dv
    a_(1, 3) = 1.0;
    a_(2, 0) = -schuler;  // gravity feedback
    a_(3, 1) = -schuler;
    a_(2, 5) = g;   // tilt couples gravity into horizontal acceleration
    a_(3, 4) = -g;
    // Bias columns carry a minus sign: the kinematic states are
    // estimate-minus-truth errors, and a positive bias-estimate error means
    // the propagator subtracts too much from the measured specific force and
    // rate. Getting this sign right is what lets a position update steer the
    // bias estimates toward truth through the cross covariance.
    a_.block<2, 3>(2, 7) = -c_nb_.topRows<2>();  // accel bias, body to nav
    a_.block<3, 3>(4, 10) = -c_nb_;              // gyro bias, body to nav

    q_cont_.setZero();
    const double an = spec_.accel_noise_horiz;
    const double gn = spec_.gyro_noise_horiz * kDegPerHour;
    const double gv = spec_.gyro_noise_vert * kDegPerHour;
    q_cont_(2, 2) = an * an;
    q_cont_(3, 3) = an * an;
    q_cont_(4, 4) = gn * gn;
    q_cont_(5, 5) = gn * gn;
    q_cont_(6, 6) = gv * gv;
}

NavState InsPropagator::initial_state(double pos_sigma, double vel_sigma,
                                      double att_sigma) const {
    NavState s;
    s.time = 0.0;
    s.position = truth_.position_at(0.0);
    s.velocity_ned = truth_.velocity_ned();
    s.attitude_rpy = {0.0, 0.0, truth_.heading()};

    Eigen::Matrix<double, 13, 1> d = Eigen::Matrix<double, 13, 1>::Zero();
    d(0) = d(1) = pos_sigma * pos_sigma;
    d(2) = d(3) = vel_sigma * vel_sigma;
    d(4) = d(5) = d(6) = att_sigma * att_sigma;
    const double abh = spec_.accel_bias_horiz, abv = spec_.accel_bias_vert;
    const double gbh = spec_.gyro_bias_horiz * kDegPerHour;
    const double gbv = spec_.gyro_bias_vert * kDegPerHour;
    d(7) = d(8) = abh * abh / 3.0;  // uniform(-b, b) variance
    d(9) = abv * abv / 3.0;
    d(10) = d(11) = gbh * gbh / 3.0;
    d(12) = gbv * gbv / 3.0;
    s.cov = d.asDiagonal();
    return s;
}

Eigen::Matrix<double, 13, 1> InsPropagator::error_of(const NavState& state) const {
    Eigen::Matrix<double, 13, 1> d = Eigen::Matrix<double, 13, 1>::Zero();
    const Eigen::Vector2d dp =
        truth_.frame().to_local(state.position) - truth_.local_at(state.time);
    d(0) = dp.x();
    d(1) = dp.y();
    d(2) = state.velocity_ned.x() - truth_.velocity_ned().x();
    d(3) = state.velocity_ned.y() - truth_.velocity_ned().y();
    d(4) = state.attitude_rpy.x();
    d(5) = state.attitude_rpy.y();
    d(6) = wrap_angle(state.attitude_rpy.z() - truth_.heading());
    d.segment<3>(7) = state.accel_bias;
    d.segment<3>(10) = state.gyro_bias;
    return d;
}

NavState InsPropagator::propagate(const NavState& state, const ImuSample& imu, double dt) const {
    if (!(dt > 0.0)) throw ConfigError("propagation step must be positive");
    if (!state.cov.allFinite() || !state.velocity_ned.allFinite() ||
        !std::isfinite(state.position.lat)) {
        throw ConfigError("non-finite navigation state");
    }

    // Realized input error: measured minus ideal minus the current bias
    // estimate, resolved into the nav frame. Contains the true bias and the
    // noise without the propagator ever knowing them.
    const Eigen::Vector3d f_err =
        c_nb_ * (imu.f_b - ideal_specific_force(truth_, state.time) - state.accel_bias);
    const Eigen::Vector3d w_err =
        c_nb_ * (imu.omega_b - ideal_angular_rate(truth_, state.time) - state.gyro_bias);

    Eigen::Matrix<double, 7, 1> u = Eigen::Matrix<double, 7, 1>::Zero();
    u(2) = f_err.x();
    u(3) = f_err.y();
    u.segment<3>(4) = w_err;

    const Eigen::Matrix<double, 13, 13> phi =
        Eigen::Matrix<double, 13, 13>::Identity() + a_ * dt + 0.5 * (a_ * a_) * (dt * dt);
    const Eigen::Matrix<double, 7, 7> phi7 = phi.topLeftCorner<7, 7>();
    const Eigen::Matrix<double, 7, 7> a7 = a_.topLeftCorner<7, 7>();
    const Eigen::Matrix<double, 7, 7> gamma =
        Eigen::Matrix<double, 7, 7>::Identity() * dt + 0.5 * a7 * (dt * dt);

    const Eigen::Matrix<double, 13, 1> err = error_of(state);
    const Eigen::Matrix<double, 7, 1> kin = phi7 * err.head<7>() + gamma * u;

    const double t_next = state.time + dt;
    NavState out;
    out.time = t_next;
    out.position = truth_.frame().from_local(
        truth_.local_at(t_next) + Eigen::Vector2d(kin(0), kin(1)), truth_.height());
    out.velocity_ned = truth_.velocity_ned() + Eigen::Vector3d(kin(2), kin(3), 0.0);
    out.attitude_rpy = {wrap_angle(kin(4)), wrap_angle(kin(5)),
                        wrap_angle(truth_.heading() + kin(6))};
    out.accel_bias = state.accel_bias;
    out.gyro_bias = state.gyro_bias;

    out.cov = phi * state.cov * phi.transpose() + q_cont_ * dt;
    out.cov = ((out.cov + out.cov.transpose()) / 2.0).eval();
    return out;
}

}  // namespace magnav
