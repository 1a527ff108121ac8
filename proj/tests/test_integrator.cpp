#include <doctest.h>

#include <cmath>

#include "magnav/errors.hpp"
#include "magnav/integrator.hpp"
#include "magnav/rng.hpp"

using magnav::AidingMeasurement;
using magnav::LocalFrame;
using magnav::NavState;
using magnav::UkfConfig;

namespace {

constexpr int kN = magnav::kStateDim;

Eigen::Matrix<double, kN, kN> random_spd(magnav::Rng& rng, double scale) {
    Eigen::Matrix<double, kN, kN> a;
    for (int i = 0; i < kN; ++i)
        for (int j = 0; j < kN; ++j) a(i, j) = rng.gaussian();
    Eigen::Matrix<double, kN, kN> m = scale * (a * a.transpose()) / kN;
    m += 1e-6 * Eigen::Matrix<double, kN, kN>::Identity();
    return m;
}

NavState random_state(magnav::Rng& rng, const LocalFrame& frame, double t) {
    NavState s;
    s.position = frame.from_local({rng.uniform(-2000.0, 2000.0), rng.uniform(-2000.0, 2000.0)},
                                  100.0);
    s.velocity_ned = {rng.gaussian() * 10.0, rng.gaussian() * 10.0, 0.0};
    s.attitude_rpy = {0.01 * rng.gaussian(), 0.01 * rng.gaussian(), rng.uniform(-3.0, 3.0)};
    s.accel_bias = 1e-4 * Eigen::Vector3d(rng.gaussian(), rng.gaussian(), rng.gaussian());
    s.gyro_bias = 1e-7 * Eigen::Vector3d(rng.gaussian(), rng.gaussian(), rng.gaussian());
    s.cov = random_spd(rng, 100.0);
    s.time = t;
    return s;
}

}  // namespace

TEST_CASE("unscented update equals the Kalman update on the linear observation") {
    const LocalFrame frame = LocalFrame::at({45.0, 9.0, 100.0});
    magnav::Rng rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        const NavState pred = random_state(rng, frame, 300.0);
        AidingMeasurement meas;
        meas.position =
            frame.to_local(pred.position) + Eigen::Vector2d(rng.gaussian(), rng.gaussian()) * 5.0;
        const double r1 = rng.uniform(4.0, 100.0), r2 = rng.uniform(4.0, 100.0);
        const double c = rng.uniform(-0.5, 0.5) * std::sqrt(r1 * r2);
        meas.cov << r1, c, c, r2;
        meas.time = 300.0;

        const auto res = magnav::ukf_update(pred, meas, frame);
        REQUIRE(res.accepted);

        // dense Kalman oracle with H = [I2 0]
        const Eigen::Matrix2d s = pred.cov.topLeftCorner<2, 2>() + meas.cov;
        const Eigen::Matrix<double, kN, 2> gain = pred.cov.leftCols<2>() * s.inverse();
        const Eigen::Vector2d innov = meas.position - frame.to_local(pred.position);
        const Eigen::Matrix<double, kN, 1> dx = gain * innov;
        const Eigen::Matrix<double, kN, kN> cov_kf = pred.cov - gain * s * gain.transpose();

        CHECK((res.state.cov - cov_kf).norm() <= 1e-8 * cov_kf.norm());
        const Eigen::Vector2d pos_kf = frame.to_local(pred.position) + dx.head<2>();
        CHECK((frame.to_local(res.state.position) - pos_kf).norm() < 1e-7);
        CHECK((res.state.velocity_ned.head<2>() -
               (pred.velocity_ned.head<2>() + dx.segment<2>(2)))
                  .norm() < 1e-8);
        CHECK((res.state.accel_bias - (pred.accel_bias + dx.segment<3>(7))).norm() < 1e-8);
        CHECK((res.state.gyro_bias - (pred.gyro_bias + dx.segment<3>(10))).norm() < 1e-12);

        // posterior position covariance never exceeds the prior (PSD order)
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> order(
            pred.cov.topLeftCorner<2, 2>() - res.state.cov.topLeftCorner<2, 2>());
        CHECK(order.eigenvalues().minCoeff() >= -1e-9);
    }
}

TEST_CASE("zero innovation keeps the mean and shrinks the position block") {
    const LocalFrame frame = LocalFrame::at({45.0, 9.0, 100.0});
    magnav::Rng rng(7);
    const NavState pred = random_state(rng, frame, 10.0);
    AidingMeasurement meas;
    meas.position = frame.to_local(pred.position);
    meas.cov = 25.0 * Eigen::Matrix2d::Identity();
    meas.time = 10.0;

    const auto res = magnav::ukf_update(pred, meas, frame);
    REQUIRE(res.accepted);
    CHECK(res.mahalanobis < 1e-12);
    CHECK((frame.to_local(res.state.position) - meas.position).norm() < 1e-7);
    CHECK((res.state.velocity_ned - pred.velocity_ned).norm() < 1e-7);
    CHECK(res.state.cov.topLeftCorner<2, 2>().trace() <
          pred.cov.topLeftCorner<2, 2>().trace());
}

TEST_CASE("an uninformative fix is a no-op") {
    const LocalFrame frame = LocalFrame::at({45.0, 9.0, 100.0});
    magnav::Rng rng(8);
    const NavState pred = random_state(rng, frame, 10.0);
    AidingMeasurement meas;
    meas.position = frame.to_local(pred.position) + Eigen::Vector2d(40.0, -25.0);
    meas.cov = 1e12 * Eigen::Matrix2d::Identity();
    meas.time = 10.0;

    const auto res = magnav::ukf_update(pred, meas, frame);
    REQUIRE(res.accepted);
    CHECK((frame.to_local(res.state.position) - frame.to_local(pred.position)).norm() < 1e-6);
    CHECK((res.state.cov - pred.cov).norm() < 1e-9 * pred.cov.norm());
}

TEST_CASE("gated fixes leave the state bit-identical") {
    const LocalFrame frame = LocalFrame::at({45.0, 9.0, 100.0});
    NavState pred;
    pred.position = frame.from_local({500.0, 500.0}, 100.0);
    pred.velocity_ned = {22.0, 0.0, 0.0};
    pred.cov = Eigen::Matrix<double, kN, kN>::Identity();
    pred.cov.topLeftCorner<2, 2>() = 100.0 * Eigen::Matrix2d::Identity();
    pred.time = 60.0;

    AidingMeasurement meas;
    meas.cov = 44.0 * Eigen::Matrix2d::Identity();  // S = 144 I exactly
    meas.time = 60.0;

    // boundary: d2 = |innov|^2 / 144 against the chi-squared(2) 99.9% gate
    const double edge = std::sqrt(13.815510557964274 * 144.0);
    meas.position = frame.to_local(pred.position) + Eigen::Vector2d(edge - 1e-3, 0.0);
    CHECK(magnav::ukf_update(pred, meas, frame).accepted);

    meas.position = frame.to_local(pred.position) + Eigen::Vector2d(edge + 1e-3, 0.0);
    const auto rej = magnav::ukf_update(pred, meas, frame);
    CHECK(!rej.accepted);
    CHECK(rej.mahalanobis > 13.8);
    CHECK(rej.state.position.lat == pred.position.lat);
    CHECK(rej.state.position.lon == pred.position.lon);
    CHECK(rej.state.velocity_ned == pred.velocity_ned);
    CHECK(rej.state.cov == pred.cov);
    CHECK(rej.state.time == pred.time);
}

TEST_CASE("position fixes correct correlated velocity") {
    const LocalFrame frame = LocalFrame::at({45.0, 9.0, 100.0});
    NavState pred;
    pred.position = frame.from_local({0.0, 0.0}, 100.0);
    pred.velocity_ned = {22.0, 0.0, 0.0};
    pred.cov = 1e-8 * Eigen::Matrix<double, kN, kN>::Identity();
    pred.cov.topLeftCorner<2, 2>() = 400.0 * Eigen::Matrix2d::Identity();
    pred.cov(2, 2) = pred.cov(3, 3) = 1.0;
    pred.cov(0, 2) = pred.cov(2, 0) = 15.0;  // north position/velocity correlation
    pred.time = 30.0;

    AidingMeasurement meas;
    meas.position = {30.0, 0.0};
    meas.cov = 100.0 * Eigen::Matrix2d::Identity();
    meas.time = 30.0;

    const auto res = magnav::ukf_update(pred, meas, frame);
    REQUIRE(res.accepted);
    // K_v = 15/500 = 0.03 applied to the 30 m innovation
    CHECK(res.state.velocity_ned.x() ==
          doctest::Approx(22.0 + 0.03 * 30.0).epsilon(1e-6));
    CHECK(res.state.velocity_ned.y() == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
}

TEST_CASE("update validates its inputs") {
    const LocalFrame frame = LocalFrame::at({45.0, 9.0, 100.0});
    magnav::Rng rng(9);
    const NavState pred = random_state(rng, frame, 10.0);
    AidingMeasurement meas;
    meas.position = frame.to_local(pred.position);
    meas.time = 11.0;  // wrong epoch
    meas.cov = Eigen::Matrix2d::Identity();
    CHECK_THROWS_AS(magnav::ukf_update(pred, meas, frame), magnav::ConfigError);
    meas.time = 10.0;
    meas.cov << 1.0, 0.9, -0.9, 1.0;  // not symmetric
    CHECK_THROWS_AS(magnav::ukf_update(pred, meas, frame), magnav::ConfigError);
    meas.cov << 1.0, 2.0, 2.0, 1.0;  // indefinite
    CHECK_THROWS_AS(magnav::ukf_update(pred, meas, frame), magnav::ConfigError);
}

TEST_CASE("inverse feature-variability weighting") {
    magnav::Rng rng(11);
    magnav::MfvWeightConfig cfg;
    cfg.reference = 1234.5;

    AidingMeasurement fix;
    fix.position = {17.0, -3.0};
    fix.cov << 50.0, 5.0, 5.0, 80.0;

    // normalization point: mfv equal to the reference leaves R unchanged
    const auto same = magnav::apply_mfv_weighting(fix, 1234.5, cfg);
    CHECK(same.cov == fix.cov);
    CHECK(same.mfv_scale == 1.0);

    // featureless region: clamps at max_scale
    const auto flat = magnav::apply_mfv_weighting(fix, 0.0, cfg);
    CHECK(flat.mfv_scale == cfg.max_scale);
    CHECK(flat.cov(0, 0) == doctest::Approx(50.0 * cfg.max_scale));

    // busy region: clamps at min_scale
    const auto busy = magnav::apply_mfv_weighting(fix, 1e12, cfg);
    CHECK(busy.mfv_scale == cfg.min_scale);

    // the mean is never touched
    for (int i = 0; i < 20; ++i) {
        AidingMeasurement f;
        f.position = {rng.gaussian() * 100.0, rng.gaussian() * 100.0};
        f.cov = rng.uniform(1.0, 100.0) * Eigen::Matrix2d::Identity();
        const auto g = magnav::apply_mfv_weighting(f, rng.uniform(0.0, 5000.0), cfg);
        CHECK(g.position == f.position);
    }

    CHECK_THROWS_AS(magnav::apply_mfv_weighting(fix, -1.0, cfg), magnav::ConfigError);
}

TEST_CASE("predict folds propagation over a sample block") {
    const magnav::TruthTrajectory truth = magnav::generate_truth(
        {45.0, 9.0, 100.0},
        LocalFrame::at({45.0, 9.0, 100.0}).from_local({20000.0, 0.0}, 100.0), 22.0, 1.0);
    const magnav::SensorSpec spec = magnav::SensorSpec::precision();
    const magnav::InsPropagator prop(truth, spec);
    magnav::ImuStream stream(truth, spec, 77);

    std::vector<magnav::ImuSample> block;
    for (int i = 0; i < 300; ++i) block.push_back(stream.next());

    const NavState s0 = prop.initial_state(10.0, 0.1, 1e-4);
    const NavState folded = magnav::predict(prop, s0, block, 1.0);

    NavState manual = s0;
    for (const auto& s : block) manual = prop.propagate(manual, s, 1.0);
    CHECK(folded.position.lat == manual.position.lat);
    CHECK(folded.position.lon == manual.position.lon);
    CHECK(folded.cov == manual.cov);
    CHECK(folded.time == manual.time);
    CHECK(folded.cov.trace() > s0.cov.trace());  // coasting only grows uncertainty
}
