#include "magnav/pda.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "magnav/errors.hpp"

namespace magnav {
namespace {

void check_spd(const Eigen::Matrix2d& m, const char* name) {
    if (!m.allFinite() || std::abs(m(0, 1) - m(1, 0)) > 1e-9 * (1.0 + m.cwiseAbs().maxCoeff())) {
        throw ConfigError(std::string(name) + " must be finite and symmetric");
    }
    // 2x2 SPD iff both leading minors are positive.
    if (!(m(0, 0) > 0.0) || !(m.determinant() > 0.0)) {
        throw ConfigError(std::string(name) + " must be positive definite");
    }
}

double log_gaussian2(const Eigen::Vector2d& d, const Eigen::Matrix2d& cov) {
    const double det = cov.determinant();
    if (!(det > 0.0)) return -std::numeric_limits<double>::infinity();
    const double quad = d.dot(cov.inverse() * d);
    return -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(det) - 0.5 * quad;
}

}  // namespace

CandidateSet gate_candidates(const MapGrid& map, const PriorPosition& prior,
                             const MagMeasurement& meas, double gamma, double kappa) {
    if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
    if (!(kappa > 0.0)) throw ConfigError("kappa must be positive");
    if (!(meas.sigma > 0.0)) throw ConfigError("measurement sigma must be positive");
    if (!std::isfinite(meas.value)) throw ConfigError("measurement value must be finite");
    check_spd(prior.cov, "prior covariance");
    if (!map.in_bounds(prior.mean)) {
        throw BoundsError("prior mean (" + std::to_string(prior.mean.x()) + ", " +
                          std::to_string(prior.mean.y()) + ") outside map extent");
    }

    const Eigen::Matrix2d info = prior.cov.inverse();
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(prior.cov);
    const double lambda_max = eig.eigenvalues().maxCoeff();
    const double r_lo = (map.cell_size() / 2.0) * (map.cell_size() / 2.0);
    const double r_hi = std::max(gamma * lambda_max, r_lo);

    // Cell range covered by the ellipse's axis-aligned bounding box.
    const double half_n = std::sqrt(gamma * prior.cov(0, 0));
    const double half_e = std::sqrt(gamma * prior.cov(1, 1));
    const auto [r0, c0] = map.cell_containing({prior.mean.x() - half_n, prior.mean.y() - half_e});
    const auto [r1, c1] = map.cell_containing({prior.mean.x() + half_n, prior.mean.y() + half_e});

    CandidateSet out;
    out.time = meas.time;
    for (int row = r0; row <= r1; ++row) {
        for (int col = c0; col <= c1; ++col) {
            if (map.is_nodata(row, col)) continue;
            const Eigen::Vector2d z = map.cell_center(row, col);
            const Eigen::Vector2d d = z - prior.mean;
            if (d.dot(info * d) > gamma) continue;
            const double value = map.value(row, col);
            if (std::abs(meas.value - value) > kappa * meas.sigma) continue;

            const double slope2 = map.gradient_at_cell(row, col).squaredNorm();
            const double r = slope2 > 0.0
                                 ? std::clamp(meas.sigma * meas.sigma / slope2, r_lo, r_hi)
                                 : r_hi;
            Candidate c;
            c.location = z;
            c.map_value = value;
            c.cov = r * Eigen::Matrix2d::Identity();
            c.row = row;
            c.col = col;
            out.candidates.push_back(c);
        }
    }
    return out;
}

CandidateSet pda_weights(CandidateSet cands, const PriorPosition& prior) {
    if (cands.empty()) throw ConfigError("pda_weights on an empty candidate set");
    check_spd(prior.cov, "prior covariance");

    std::vector<double> logs(cands.size());
    double max_log = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cands.size(); ++i) {
        const Candidate& c = cands.candidates[i];
        logs[i] = log_gaussian2(c.location - prior.mean, prior.cov + c.cov);
        max_log = std::max(max_log, logs[i]);
    }

    if (!std::isfinite(max_log)) {
        const double w = 1.0 / static_cast<double>(cands.size());
        for (auto& c : cands.candidates) c.weight = w;
        cands.weight_underflow = true;
        return cands;
    }

    double sum = 0.0;
    for (std::size_t i = 0; i < cands.size(); ++i) {
        const double w = std::exp(logs[i] - max_log);
        cands.candidates[i].weight = w;
        sum += w;
    }
    for (auto& c : cands.candidates) c.weight /= sum;
    cands.weight_underflow = false;
    return cands;
}

PositionFix pda_estimate(const CandidateSet& cands) {
    if (cands.empty()) throw ConfigError("pda_estimate on an empty candidate set");

    PositionFix fix;
    fix.time = cands.time;
    fix.n_candidates = static_cast<int>(cands.size());
    for (const Candidate& c : cands.candidates) fix.mean += c.weight * c.location;
    for (const Candidate& c : cands.candidates) {
        const Eigen::Vector2d d = c.location - fix.mean;
        fix.cov += c.weight * (c.cov + d * d.transpose());
    }
    fix.cov = ((fix.cov + fix.cov.transpose()) / 2.0).eval();
    return fix;
}

double pda_error(const PositionFix& fix, const Eigen::Vector2d& truth) {
    return (fix.mean - truth).norm();
}

}  // namespace magnav
