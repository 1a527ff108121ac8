#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "magnav/map_grid.hpp"
#include "magnav/pda.hpp"

namespace magnav {

/// A window of magnetometer epochs with their dead-reckoned position priors
/// and the indicated platform motion, everything in map-local metres.
struct Batch {
    std::vector<MagMeasurement> measurements;
    std::vector<PriorPosition> priors;  // one per epoch, from the navigator's predictions
    Eigen::Vector2d velocity = Eigen::Vector2d::Zero();      // indicated (north, east) m/s
    Eigen::Matrix2d velocity_cov = Eigen::Matrix2d::Zero();  // its covariance

    std::size_t size() const { return measurements.size(); }
    double dt(std::size_t k) const {  // between epochs k and k+1
        return measurements[k + 1].time - measurements[k].time;
    }
    /// Indicated displacement over [t_k, t_{k+1}].
    Eigen::Vector2d step(std::size_t k) const { return velocity * dt(k); }

    /// Equal-length lists, at least one epoch, strictly increasing times,
    /// positive measurement sigmas, finite motion. ConfigError otherwise.
    void check() const;
};

struct MatchParams {
    double gamma = kDefaultGamma;  // prior gate, chi-squared(2)
    double kappa = kDefaultKappa;  // signal gate, sigmas
    double tol = 1.0;              // m; smaller per-iteration track movement counts as converged
    int max_iters = 20;
    double near_optimal_window = 5.0;  // log-likelihood span of final states kept for the fix covariance
};

struct MatchResult {
    PositionFix fix;                              // at the last epoch
    std::vector<Eigen::Vector2d> smoothed_track;  // one position per epoch, local metres
    int iterations = 1;              // accepted refinement passes (always 1 for the trellis path)
    bool converged = false;
    std::vector<double> objectives;  // objective after each accepted pass; single entry for viterbi
};

/// Iterative batch matcher: associate each epoch's measurement to gated map
/// cells (weights from pda), collapse them to a synthetic position
/// measurement, then re-estimate the whole track with a forward Kalman
/// filter and backward smoother over a constant-velocity model. Repeat,
/// re-gating around the refined track, until it moves less than tol.
///
/// The objective is the sum of synthetic-measurement log-likelihoods under
/// the smoothed track; a pass that lowers it is discarded and iteration
/// stops at the previous track, so the reported sequence never decreases.
///
/// Epochs that gate empty are coasted through; nullopt if every epoch is
/// empty on the first pass.
std::optional<MatchResult> pmht_mm(const Batch& batch, const MapGrid& map,
                                   const MatchParams& params = {});

/// Trellis matcher: per epoch the states are the gated map cells; emission
/// is Gaussian in (measurement - cell value) with the measurement sigma,
/// transition Gaussian in (cell displacement - indicated displacement) with
/// covariance velocity_cov dt^2 + (cell/4)^2 I. Returns the exact
/// maximum-likelihood cell sequence (ties broken toward the lower candidate
/// index). The fix sits on the final path state; its covariance comes from
/// pda_estimate over final states within near_optimal_window of the best.
///
/// nullopt if any epoch gates empty (the chain is broken).
std::optional<MatchResult> viterbi_mm(const Batch& batch, const MapGrid& map,
                                      const MatchParams& params = {});

}  // namespace magnav
