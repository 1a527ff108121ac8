#include "magnav/mm_filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "magnav/errors.hpp"

namespace magnav {
namespace {

constexpr double kLog2Pi = 1.8378770664093453;

Eigen::Matrix2d motion_cov(const Batch& batch, const MapGrid& map, std::size_t k) {
    const double dt = batch.dt(k);
    const double floor = 0.25 * map.cell_size();
    return batch.velocity_cov * (dt * dt) + floor * floor * Eigen::Matrix2d::Identity();
}

/// One epoch collapsed to a synthetic position measurement via gated PDA.
struct SyntheticMeas {
    bool present = false;
    Eigen::Vector2d z = Eigen::Vector2d::Zero();
    Eigen::Matrix2d r = Eigen::Matrix2d::Identity();
    int n_candidates = 0;
};

SyntheticMeas collapse_epoch(const MapGrid& map, const MagMeasurement& meas,
                             const Eigen::Vector2d& centre, const Eigen::Matrix2d& gate_cov,
                             const MatchParams& params) {
    SyntheticMeas out;
    const PriorPosition prior{centre, gate_cov};
    CandidateSet set;
    try {
        set = gate_candidates(map, prior, meas, params.gamma, params.kappa);
    } catch (const BoundsError&) {
        return out;  // track wandered off the raster; coast this epoch
    }
    if (set.empty()) return out;
    set = pda_weights(std::move(set), prior);
    const PositionFix fix = pda_estimate(set);
    out.present = true;
    out.z = fix.mean;
    out.r = fix.cov;
    out.n_candidates = static_cast<int>(set.size());
    return out;
}

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

struct SmoothedTrack {
    std::vector<Eigen::Vector2d> positions;
    std::vector<Eigen::Matrix2d> pos_covs;  // smoothed position marginals
    double objective = 0.0;
};

/// Forward Kalman filter and backward smoother over [p_n, p_e, v_n, v_e].
/// The first prior seeds the state; later priors only steer gating. The
/// velocity may random-walk by about one process floor over the batch span.
SmoothedTrack smooth(const Batch& batch, const MapGrid& map,
                     const std::vector<SyntheticMeas>& meas) {
    const std::size_t m = batch.size();
    const double floor = 0.25 * map.cell_size();
    const double span = batch.measurements.back().time - batch.measurements.front().time;
    const double qv = span > 0.0 ? (floor / span) * (floor / span) : 0.0;
    const Eigen::Matrix2d eye2 = Eigen::Matrix2d::Identity();

    std::vector<Vec4> x_pred(m), x_filt(m);
    std::vector<Mat4> p_pred(m), p_filt(m);

    for (std::size_t k = 0; k < m; ++k) {
        if (k == 0) {
            x_pred[0] << batch.priors[0].mean, batch.velocity;
            p_pred[0].setZero();
            p_pred[0].topLeftCorner<2, 2>() = batch.priors[0].cov;
            p_pred[0].bottomRightCorner<2, 2>() = batch.velocity_cov + qv * eye2;
        } else {
            const double dt = batch.dt(k - 1);
            Mat4 f = Mat4::Identity();
            f(0, 2) = f(1, 3) = dt;
            x_pred[k] = f * x_filt[k - 1];
            p_pred[k] = f * p_filt[k - 1] * f.transpose();
            p_pred[k].topLeftCorner<2, 2>() += floor * floor * eye2;
            p_pred[k].bottomRightCorner<2, 2>() += qv * eye2;
        }
        if (meas[k].present) {
            const Eigen::Matrix2d s = p_pred[k].topLeftCorner<2, 2>() + meas[k].r;
            const Eigen::Matrix<double, 4, 2> gain = p_pred[k].leftCols<2>() * s.inverse();
            x_filt[k] = x_pred[k] + gain * (meas[k].z - x_pred[k].head<2>());
            Mat4 imkh = Mat4::Identity();
            imkh.leftCols<2>() -= gain;
            p_filt[k] = imkh * p_pred[k] * imkh.transpose() + gain * meas[k].r * gain.transpose();
        } else {
            x_filt[k] = x_pred[k];
            p_filt[k] = p_pred[k];
        }
        p_filt[k] = (0.5 * (p_filt[k] + p_filt[k].transpose())).eval();
    }

    std::vector<Vec4> x_s(m);
    std::vector<Mat4> p_s(m);
    x_s[m - 1] = x_filt[m - 1];
    p_s[m - 1] = p_filt[m - 1];
    for (std::size_t k = m - 1; k-- > 0;) {
        const double dt = batch.dt(k);
        Mat4 f = Mat4::Identity();
        f(0, 2) = f(1, 3) = dt;
        const Mat4 c = p_filt[k] * f.transpose() * p_pred[k + 1].inverse();
        x_s[k] = x_filt[k] + c * (x_s[k + 1] - x_pred[k + 1]);
        p_s[k] = p_filt[k] + c * (p_s[k + 1] - p_pred[k + 1]) * c.transpose();
        p_s[k] = (0.5 * (p_s[k] + p_s[k].transpose())).eval();
    }

    SmoothedTrack out;
    out.positions.resize(m);
    out.pos_covs.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
        out.positions[k] = x_s[k].head<2>();
        out.pos_covs[k] = p_s[k].topLeftCorner<2, 2>();
    }
    for (std::size_t k = 0; k < m; ++k) {
        if (!meas[k].present) continue;
        const Eigen::Vector2d d = meas[k].z - out.positions[k];
        out.objective +=
            -0.5 * d.dot(meas[k].r.inverse() * d) - 0.5 * std::log(meas[k].r.determinant()) - kLog2Pi;
    }
    return out;
}

}  // namespace

void Batch::check() const {
    if (measurements.empty()) throw ConfigError("batch needs at least one epoch");
    if (priors.size() != measurements.size())
        throw ConfigError("batch epoch and prior counts differ");
    for (std::size_t k = 0; k < measurements.size(); ++k) {
        if (!(measurements[k].sigma > 0.0))
            throw ConfigError("measurement sigma must be positive");
        if (k > 0 && !(measurements[k].time > measurements[k - 1].time))
            throw ConfigError("batch times must be strictly increasing");
    }
    if (!velocity.allFinite() || !velocity_cov.allFinite())
        throw ConfigError("batch motion must be finite");
}

std::optional<MatchResult> pmht_mm(const Batch& batch, const MapGrid& map,
                                   const MatchParams& params) {
    batch.check();
    if (params.max_iters < 1 || !(params.tol >= 0.0))
        throw ConfigError("match params need max_iters >= 1 and tol >= 0");

    const std::size_t m = batch.size();
    std::vector<Eigen::Vector2d> centres(m);
    std::vector<Eigen::Matrix2d> gate_covs(m);
    for (std::size_t k = 0; k < m; ++k) {
        centres[k] = batch.priors[k].mean;
        gate_covs[k] = batch.priors[k].cov;
    }
    // Re-gating with the smoothed marginal (floored at one cell) is what makes
    // the association sharpen: a fixed-width gate has a stable fixed point
    // between competing hypotheses and never locks on.
    const double gate_floor = map.cell_size() * map.cell_size();

    std::optional<MatchResult> accepted;
    bool stopped_at_fixed_point = false;
    const int iter_cap = m == 1 ? 1 : params.max_iters;
    for (int it = 1; it <= iter_cap; ++it) {
        std::vector<SyntheticMeas> meas(m);
        bool any = false;
        for (std::size_t k = 0; k < m; ++k) {
            meas[k] = collapse_epoch(map, batch.measurements[k], centres[k], gate_covs[k], params);
            any = any || meas[k].present;
        }
        if (!any) {
            stopped_at_fixed_point = accepted.has_value();
            break;
        }

        const SmoothedTrack s = smooth(batch, map, meas);
        if (accepted) {
            const double prev = accepted->objectives.back();
            if (s.objective < prev - 1e-9 * std::max(1.0, std::abs(prev))) {
                stopped_at_fixed_point = true;  // refinement made the fit worse; keep the old track
                break;
            }
        }

        double moved = 0.0;
        for (std::size_t k = 0; k < m; ++k)
            moved = std::max(moved, (s.positions[k] - centres[k]).norm());

        MatchResult r;
        r.fix.mean = s.positions.back();
        r.fix.cov = s.pos_covs.back();
        r.fix.time = batch.measurements.back().time;
        r.fix.n_candidates = meas.back().n_candidates;
        r.smoothed_track = s.positions;
        r.iterations = it;
        if (accepted) r.objectives = std::move(accepted->objectives);
        r.objectives.push_back(s.objective);
        accepted = std::move(r);

        centres = accepted->smoothed_track;
        for (std::size_t k = 0; k < m; ++k)
            gate_covs[k] = s.pos_covs[k] + gate_floor * Eigen::Matrix2d::Identity();
        if (moved < params.tol || m == 1) {
            accepted->converged = true;
            break;
        }
    }
    if (accepted && stopped_at_fixed_point) accepted->converged = true;
    return accepted;
}

std::optional<MatchResult> viterbi_mm(const Batch& batch, const MapGrid& map,
                                      const MatchParams& params) {
    batch.check();
    const std::size_t m = batch.size();

    std::vector<CandidateSet> cols(m);
    for (std::size_t k = 0; k < m; ++k) {
        try {
            cols[k] = gate_candidates(map, batch.priors[k], batch.measurements[k],
                                      params.gamma, params.kappa);
        } catch (const BoundsError&) {
            return std::nullopt;
        }
        if (cols[k].empty()) return std::nullopt;
    }

    std::vector<std::vector<double>> emit(m);
    for (std::size_t k = 0; k < m; ++k) {
        const double sigma = batch.measurements[k].sigma;
        emit[k].reserve(cols[k].size());
        for (const Candidate& c : cols[k].candidates) {
            const double d = (batch.measurements[k].value - c.map_value) / sigma;
            emit[k].push_back(-0.5 * d * d - std::log(sigma) - 0.5 * kLog2Pi);
        }
    }

    std::vector<std::vector<double>> score(m);
    std::vector<std::vector<int>> parent(m);
    score[0] = emit[0];
    parent[0].assign(cols[0].size(), -1);
    for (std::size_t k = 0; k + 1 < m; ++k) {
        const Eigen::Matrix2d mc = motion_cov(batch, map, k);
        const Eigen::Matrix2d mc_inv = mc.inverse();
        const double log_norm = -0.5 * std::log(mc.determinant()) - kLog2Pi;
        const Eigen::Vector2d disp = batch.step(k);
        const std::size_t nj = cols[k + 1].size();
        score[k + 1].assign(nj, 0.0);
        parent[k + 1].assign(nj, 0);
        for (std::size_t j = 0; j < nj; ++j) {
            const Eigen::Vector2d zj = cols[k + 1].candidates[j].location;
            double best = -std::numeric_limits<double>::infinity();
            int arg = 0;
            for (std::size_t i = 0; i < cols[k].size(); ++i) {
                const Eigen::Vector2d d = zj - cols[k].candidates[i].location - disp;
                const double cand = score[k][i] + (-0.5 * d.dot(mc_inv * d) + log_norm);
                if (cand > best) {
                    best = cand;
                    arg = static_cast<int>(i);
                }
            }
            score[k + 1][j] = best + emit[k + 1][j];
            parent[k + 1][j] = arg;
        }
    }

    std::size_t best_j = 0;
    for (std::size_t j = 1; j < score[m - 1].size(); ++j)
        if (score[m - 1][j] > score[m - 1][best_j]) best_j = j;

    std::vector<int> path(m);
    path[m - 1] = static_cast<int>(best_j);
    for (std::size_t k = m - 1; k-- > 0;) path[k] = parent[k + 1][path[k + 1]];

    MatchResult r;
    r.smoothed_track.resize(m);
    for (std::size_t k = 0; k < m; ++k)
        r.smoothed_track[k] = cols[k].candidates[static_cast<std::size_t>(path[k])].location;

    const double best_score = score[m - 1][best_j];
    CandidateSet finals;
    finals.time = batch.measurements.back().time;
    double wsum = 0.0;
    for (std::size_t j = 0; j < cols[m - 1].size(); ++j) {
        if (score[m - 1][j] >= best_score - params.near_optimal_window) {
            Candidate c = cols[m - 1].candidates[j];
            c.weight = std::exp(score[m - 1][j] - best_score);
            wsum += c.weight;
            finals.candidates.push_back(c);
        }
    }
    for (Candidate& c : finals.candidates) c.weight /= wsum;
    const PositionFix spread = pda_estimate(finals);

    r.fix.mean = r.smoothed_track.back();
    r.fix.cov = spread.cov;
    r.fix.time = batch.measurements.back().time;
    r.fix.n_candidates = static_cast<int>(cols[m - 1].size());
    r.iterations = 1;
    r.converged = true;
    r.objectives = {best_score};
    return r;
}

}  // namespace magnav
