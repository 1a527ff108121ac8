#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <numbers>

#include "magnav/geo.hpp"
#include "magnav/rng.hpp"

namespace magnav {

/// Per-axis inertial error budget. Horizontal entries apply to the body x
/// and y axes, vertical to z. Defaults are the precision-grade budget; a
/// tactical() budget is provided for scenarios that need visible drift
/// inside an hour.
struct SensorSpec {
    double accel_bias_horiz = 2e-6;     // m/s^2
    double accel_noise_horiz = 8e-5;    // m/s^2/sqrt(Hz)
    double accel_bias_vert = 2.5e-8;    // m/s^2
    double accel_noise_vert = 1.6e-6;   // m/s^2/sqrt(Hz)
    double gyro_bias_horiz = 2e-5;      // deg/h
    double gyro_noise_horiz = 1e-3;     // deg/h/sqrt(Hz)
    double gyro_bias_vert = 1e-3;       // deg/h
    double gyro_noise_vert = 3e-2;      // deg/h/sqrt(Hz)
    double rate = 1.0;                  // Hz

    static SensorSpec precision() { return {}; }
    static SensorSpec tactical();

    void check() const;  // throws ConfigError on negative budgets or rate <= 0
};

/// deg/h to rad/s (also converts deg/h/sqrt(Hz) noise densities).
inline constexpr double kDegPerHour = std::numbers::pi / (180.0 * 3600.0);

struct ImuSample {
    Eigen::Vector3d f_b = Eigen::Vector3d::Zero();      // specific force, m/s^2
    Eigen::Vector3d omega_b = Eigen::Vector3d::Zero();  // angular rate, rad/s
    double time = 0.0;
};

/// Straight constant-velocity path at fixed height, analytic in time.
/// Body x points along track (yaw = track heading), level flight.
class TruthTrajectory {
public:
    TruthTrajectory(const GeoPosition& start, const GeoPosition& end, double speed, double rate);

    double duration() const { return duration_; }
    double rate() const { return rate_; }
    double speed() const { return speed_; }
    double height() const { return start_.height; }
    double heading() const { return heading_; }  // rad, from north
    std::size_t n_samples() const {
        return static_cast<std::size_t>(duration_ * rate_ + 1e-9) + 1;
    }
    double sample_time(std::size_t i) const { return static_cast<double>(i) / rate_; }

    const LocalFrame& frame() const { return frame_; }
    Eigen::Vector2d local_at(double t) const { return velocity_ne_ * t; }
    GeoPosition position_at(double t) const {
        return frame_.from_local(local_at(t), start_.height);
    }
    Eigen::Vector3d velocity_ned() const {
        return {velocity_ne_.x(), velocity_ne_.y(), 0.0};
    }
    /// Yaw-only body-to-nav rotation (roll = pitch = 0).
    Eigen::Matrix3d c_nb() const;

private:
    GeoPosition start_;
    LocalFrame frame_;
    Eigen::Vector2d velocity_ne_ = Eigen::Vector2d::Zero();
    double speed_ = 0.0;
    double rate_ = 0.0;
    double duration_ = 0.0;
    double heading_ = 0.0;
};

TruthTrajectory generate_truth(const GeoPosition& start, const GeoPosition& end, double speed,
                               double rate);

/// Error-free specific force along the truth path: gravity reaction only
/// (level, unaccelerated flight; transport curvature is negligible at
/// survey speeds).
Eigen::Vector3d ideal_specific_force(const TruthTrajectory& truth, double t);

/// Error-free gyro reading: earth rotation resolved into the body frame at
/// the instantaneous truth latitude.
Eigen::Vector3d ideal_angular_rate(const TruthTrajectory& truth, double t);

/// Sequential IMU sample generator: ideal kinematics plus a constant
/// per-run bias (drawn uniformly within the budget at construction) plus
/// white noise with per-sample std = density * sqrt(rate).
class ImuStream {
public:
    ImuStream(const TruthTrajectory& truth, const SensorSpec& spec, std::uint64_t seed);

    ImuSample next();
    std::size_t size() const { return count_; }      // samples the trajectory supports
    std::size_t produced() const { return index_; }

    const Eigen::Vector3d& true_accel_bias() const { return accel_bias_; }
    const Eigen::Vector3d& true_gyro_bias() const { return gyro_bias_; }

private:
    const TruthTrajectory truth_;
    SensorSpec spec_;
    Rng rng_;
    Eigen::Vector3d accel_bias_;
    Eigen::Vector3d gyro_bias_;
    std::size_t index_ = 0;
    std::size_t count_ = 0;
};

/// INS estimate with its 13-state error covariance. Error-state order:
/// [dp_n, dp_e, dv_n, dv_e, att_n, att_e, att_d, b_accel(xyz), b_gyro(xyz)].
/// attitude holds truth roll/pitch/yaw plus the nav-frame misalignment
/// vector; accel_bias/gyro_bias are the filter's estimates of the true
/// constant biases (start at zero).
struct NavState {
    GeoPosition position;
    Eigen::Vector3d velocity_ned = Eigen::Vector3d::Zero();
    Eigen::Vector3d attitude_rpy = Eigen::Vector3d::Zero();
    Eigen::Vector3d accel_bias = Eigen::Vector3d::Zero();
    Eigen::Vector3d gyro_bias = Eigen::Vector3d::Zero();
    Eigen::Matrix<double, 13, 13> cov = Eigen::Matrix<double, 13, 13>::Zero();
    double time = 0.0;
};

inline constexpr int kStateDim = 13;

/// Truth-referenced linearized error-state propagation.
///
/// The estimate is carried as truth plus an error vector; the error obeys
/// the local-level small-error dynamics with gravity feedback
/// (-g/R_e * dp), so an unaided run shows the Schuler oscillation, and
/// gyro bias integrates into the dominant long-term drift. The vertical
/// channel is pinned to truth height. Covariance uses the same transition
/// with continuous white-noise input from the sensor budget, symmetrized
/// every step.
class InsPropagator {
public:
    InsPropagator(const TruthTrajectory& truth, const SensorSpec& spec);

    /// Estimate at truth at t = 0. Kinematic covariance starts at the given
    /// sigmas; bias covariance comes from the budget (uniform draw variance
    /// b²/3).
    NavState initial_state(double pos_sigma = 0.0, double vel_sigma = 0.0,
                           double att_sigma = 0.0) const;

    NavState propagate(const NavState& state, const ImuSample& imu, double dt) const;

    const TruthTrajectory& truth() const { return truth_; }

    /// Error vector of an estimate against truth at its own time.
    Eigen::Matrix<double, 13, 1> error_of(const NavState& state) const;

private:
    TruthTrajectory truth_;
    SensorSpec spec_;
    Eigen::Matrix3d c_nb_;
    Eigen::Matrix<double, 13, 13> a_;       // continuous error dynamics
    Eigen::Matrix<double, 13, 13> q_cont_;  // continuous process noise density
};

}  // namespace magnav
