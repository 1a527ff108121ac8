#include "magnav/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "magnav/errors.hpp"

namespace magnav {
namespace {

Eigen::Matrix<double, kStateDim, kStateDim> psd_sqrt(
    const Eigen::Matrix<double, kStateDim, kStateDim>& m) {
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, kStateDim, kStateDim>> eig(m);
    Eigen::Matrix<double, kStateDim, 1> root = eig.eigenvalues();
    for (int i = 0; i < kStateDim; ++i) root(i) = std::sqrt(std::max(root(i), 0.0));
    return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

double wrap_angle(double a) { return std::remainder(a, 2.0 * M_PI); }

}  // namespace

NavState predict(const InsPropagator& prop, NavState state, const std::vector<ImuSample>& imu,
                 double dt) {
    for (const ImuSample& s : imu) state = prop.propagate(state, s, dt);
    return state;
}

UpdateResult ukf_update(const NavState& pred, const AidingMeasurement& meas,
                        const LocalFrame& frame, const UkfConfig& cfg) {
    if ((meas.cov - meas.cov.transpose()).norm() > 1e-9 * (1.0 + meas.cov.norm()))
        throw ConfigError("aiding covariance must be symmetric");
    {
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(meas.cov);
        if (eig.eigenvalues().minCoeff() < -1e-9) throw ConfigError("aiding covariance must be PSD");
    }
    if (std::abs(meas.time - pred.time) > 1e-6)
        throw ConfigError("aiding fix time does not match the state time");

    constexpr int n = kStateDim;
    const double lambda = cfg.alpha * cfg.alpha * (n + cfg.kappa) - n;
    const double wm0 = lambda / (n + lambda);
    const double wc0 = wm0 + (1.0 - cfg.alpha * cfg.alpha + cfg.beta);
    const double wi = 1.0 / (2.0 * (n + lambda));

    const Eigen::Matrix<double, n, n> spread = std::sqrt(n + lambda) * psd_sqrt(pred.cov);
    const Eigen::Vector2d y0 = frame.to_local(pred.position);

    // h is linear in the error state: y_i = y0 + delta_i.head<2>()
    Eigen::Vector2d y_mean = wm0 * y0;
    for (int i = 0; i < n; ++i) {
        y_mean += wi * (y0 + spread.col(i).head<2>());
        y_mean += wi * (y0 - spread.col(i).head<2>());
    }
    Eigen::Matrix2d s_yy = wc0 * (y0 - y_mean) * (y0 - y_mean).transpose();
    Eigen::Matrix<double, n, 2> s_xy =
        Eigen::Matrix<double, n, 2>::Zero();  // centre deviation is zero in x
    for (int i = 0; i < n; ++i) {
        const Eigen::Vector2d dy_p = y0 + spread.col(i).head<2>() - y_mean;
        const Eigen::Vector2d dy_m = y0 - spread.col(i).head<2>() - y_mean;
        s_yy += wi * (dy_p * dy_p.transpose() + dy_m * dy_m.transpose());
        s_xy += wi * (spread.col(i) * dy_p.transpose() - spread.col(i) * dy_m.transpose());
    }
    const Eigen::Matrix2d s = s_yy + meas.cov;

    const Eigen::Vector2d innov = meas.position - y_mean;
    const double d2 = innov.dot(s.inverse() * innov);
    if (d2 > cfg.reject_threshold) return {pred, false, d2};

    const Eigen::Matrix<double, n, 2> gain = s_xy * s.inverse();
    const Eigen::Matrix<double, n, 1> dx = gain * innov;

    NavState out = pred;
    out.position = frame.from_local(y0 + dx.head<2>(), pred.position.height);
    out.velocity_ned.head<2>() += dx.segment<2>(2);
    out.attitude_rpy += dx.segment<3>(4);
    out.attitude_rpy.z() = wrap_angle(out.attitude_rpy.z());
    out.accel_bias += dx.segment<3>(7);
    out.gyro_bias += dx.segment<3>(10);
    out.cov = pred.cov - gain * s * gain.transpose();
    out.cov = (0.5 * (out.cov + out.cov.transpose())).eval();
    return {out, true, d2};
}

AidingMeasurement apply_mfv_weighting(AidingMeasurement fix, double mfv_value,
                                      const MfvWeightConfig& cfg) {
    if (!(mfv_value >= 0.0)) throw ConfigError("mfv value must be non-negative");
    if (!(cfg.reference > 0.0) || !(cfg.min_scale > 0.0) || !(cfg.max_scale >= cfg.min_scale))
        throw ConfigError("mfv weighting config must have 0 < min <= max and reference > 0");
    const double raw = mfv_value > 0.0 ? cfg.reference / mfv_value
                                       : std::numeric_limits<double>::infinity();
    const double scale = std::clamp(raw, cfg.min_scale, cfg.max_scale);
    fix.cov *= scale;
    fix.mfv_scale = scale;
    return fix;
}

}  // namespace magnav
