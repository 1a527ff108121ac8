#pragma once

#include <Eigen/Dense>
#include <vector>

#include "magnav/ins_sim.hpp"

namespace magnav {

/// Position fix ready for fusion, in the navigation local frame.
struct AidingMeasurement {
    Eigen::Vector2d position = Eigen::Vector2d::Zero();  // (north, east) m
    Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();   // m^2, symmetric PSD
    double time = 0.0;
    double mfv_scale = 1.0;  // last covariance scale applied, for logging
};

struct UkfConfig {
    // Unscented weights: alpha=1, beta=2, kappa=0 gives lambda=0, so the
    // centre point carries no mean weight and the spread is sqrt(n) sigma.
    double alpha = 1.0;
    double beta = 2.0;
    double kappa = 0.0;
    double reject_threshold = 13.815510557964274;  // chi-squared(2) at 99.9%
};

struct UpdateResult {
    NavState state;
    bool accepted = false;
    double mahalanobis = 0.0;  // innovation distance, reported even when rejected
};

/// Coast the state through a block of IMU samples (pure propagation).
NavState predict(const InsPropagator& prop, NavState state,
                 const std::vector<ImuSample>& imu, double dt);

/// Unscented update of the full navigation state with a position fix.
/// Sigma points are drawn in error space around the current estimate; the
/// observation picks the local (north, east) position, so the update is
/// linear and must agree with a Kalman update. Velocity, attitude and bias
/// states move through their covariance coupling.
///
/// A fix whose innovation Mahalanobis distance exceeds reject_threshold is
/// rejected: the returned state is the input, bit for bit.
UpdateResult ukf_update(const NavState& pred, const AidingMeasurement& meas,
                        const LocalFrame& frame, const UkfConfig& cfg = {});

struct MfvWeightConfig {
    double reference = 1.0;   // numerator c in c / mfv, nT^2
    double min_scale = 0.25;  // strongest trust gain a busy map can earn
    double max_scale = 9.0;   // strongest de-weighting of a featureless map
};

/// Scales the fix covariance by clamp(reference / mfv_value, min, max).
/// The mean is untouched. mfv_value = 0 clamps at max_scale.
AidingMeasurement apply_mfv_weighting(AidingMeasurement fix, double mfv_value,
                                      const MfvWeightConfig& cfg = {});

}  // namespace magnav
