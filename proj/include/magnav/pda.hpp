#pragma once

#include <Eigen/Dense>
#include <vector>

#include "magnav/map_grid.hpp"

namespace magnav {

/// One scalar total-intensity magnetometer reading.
struct MagMeasurement {
    double value = 0.0;  // nT
    double sigma = 0.0;  // nT, standard deviation of the additive noise
    double time = 0.0;   // s
};

/// Gaussian position prior in map-local (north, east) metres.
struct PriorPosition {
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();  // symmetric positive definite
};

/// A gated map cell that could explain the measurement.
struct Candidate {
    Eigen::Vector2d location = Eigen::Vector2d::Zero();  // cell centre, local metres
    double map_value = 0.0;                              // nT
    double weight = 0.0;                                 // association probability
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();       // R_i, position noise metres^2
    int row = 0;
    int col = 0;
};

struct CandidateSet {
    std::vector<Candidate> candidates;
    double time = 0.0;             // measurement time, carried into the fix
    bool weight_underflow = false; // densities degenerated; weights fell back to uniform

    bool empty() const { return candidates.empty(); }
    std::size_t size() const { return candidates.size(); }
};

/// Weighted-association position estimate.
struct PositionFix {
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    double time = 0.0;
    int n_candidates = 0;
    double mfv_weight = 1.0;  // optional covariance scale applied by the integrator
};

inline constexpr double kDefaultKappa = 3.0;  // signal gate half-width, sigmas
inline constexpr double kDefaultGamma = 9.21; // chi-squared(2) at 99%

/// All map cell centres inside both gates: the prior ellipse
/// (z - x)' Σ⁻¹ (z - x) <= gamma and the signal band
/// |measurement - map value| <= kappa·sigma. Nodata cells never qualify.
///
/// Each candidate carries a position-noise covariance R_i = (σ/‖∇m‖)²·I,
/// clamped between (cell/2)² and gamma·λmax(Σ) so flat map regions saturate
/// at the window scale instead of diverging.
///
/// The empty set is a valid result (caller coasts); a prior mean outside
/// the map extent is a BoundsError.
CandidateSet gate_candidates(const MapGrid& map, const PriorPosition& prior,
                             const MagMeasurement& meas, double gamma = kDefaultGamma,
                             double kappa = kDefaultKappa);

/// Fills association weights w_i ∝ N(z_i; x, Σ + R_i), normalized to sum 1.
/// Densities are evaluated in log space; if every density degenerates the
/// weights fall back to uniform and weight_underflow is set.
CandidateSet pda_weights(CandidateSet cands, const PriorPosition& prior);

/// Weighted mean and spread-inflated covariance of a weighted candidate set:
/// z̄ = Σ w_i z_i,  R̄ = Σ w_i (R_i + (z_i - z̄)(z_i - z̄)').
PositionFix pda_estimate(const CandidateSet& cands);

/// Euclidean error distance of a fix against a reference position.
double pda_error(const PositionFix& fix, const Eigen::Vector2d& truth);

}  // namespace magnav
