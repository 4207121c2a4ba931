#pragma once
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string_view>
#include <vector>
#include <Eigen/Core>
#include <celer/datafit.hpp>
#include <celer/dataset.hpp>
#include <celer/errors.hpp>
#include <celer/extrapolation.hpp>
#include <celer/numeric.hpp>

namespace celer {

enum class Algorithm { CD, PG, BCD };

struct SolverParams
{
    int K = 5;                // extrapolation order
    int freq = 10;            // epochs between dual point / gap evaluations
    int max_epochs = 100000;
    double tol = 1e-8;        // absolute duality-gap target
    bool screening = false;   // Gap Safe screening at every gap evaluation
    bool extrapolation = true;
    Algorithm algorithm = Algorithm::CD;
};

/// Features not yet removed by screening.
class ActiveSet
{
public:
    explicit ActiveSet(Index p = 0)
        : mask_(static_cast<std::size_t>(p), 1)
        , remaining_(p)
    {}

    bool contains(Index j) const { return mask_[static_cast<std::size_t>(j)] != 0; }
    Index remaining() const { return remaining_; }
    Index size() const { return static_cast<Index>(mask_.size()); }

    void remove(Index j)
    {
        auto& m = mask_[static_cast<std::size_t>(j)];
        if (m) {
            m = 0;
            --remaining_;
        }
    }

private:
    std::vector<char> mask_;
    Index remaining_;
};

struct GapRecord
{
    long epoch = 0;
    double primal = 0;
    double dual_rescaled = 0;
    double dual_accel = std::numeric_limits<double>::quiet_NaN(); // NaN when not computed
    double dual_used = 0;
    bool sign_change = false; // sign pattern (row support for multitask) differs from previous check
};

struct ScreenRecord
{
    long epoch = 0;
    Index remaining = 0;
};

struct SolveReport
{
    Eigen::MatrixXd beta;
    DualCertificate theta;
    std::vector<GapRecord> gap_history;
    std::vector<ScreenRecord> screened_history;
    std::vector<Index> ws_sizes; // working-set sizes, one per outer iteration (celer only)
    long epochs_run = 0;
    long long coordinate_updates = 0;
    double gap = std::numeric_limits<double>::infinity();
    bool converged = false;
    Index screened = 0;
    std::vector<Index> screened_features; // in the order they were discarded
};

namespace detail {

inline std::vector<std::int8_t> sign_pattern(const Eigen::MatrixXd& beta)
{
    std::vector<std::int8_t> s(static_cast<std::size_t>(beta.rows()));
    for (Index j = 0; j < beta.rows(); ++j) {
        if (beta.cols() == 1) s[j] = static_cast<std::int8_t>(sign(beta(j, 0)));
        else s[j] = beta.row(j).squaredNorm() > 0 ? 1 : 0;
    }
    return s;
}

inline Algorithm effective_algorithm(ModelKind kind, Algorithm algo)
{
    if (kind == ModelKind::MultitaskQuadratic && algo == Algorithm::CD) return Algorithm::BCD;
    if (kind != ModelKind::MultitaskQuadratic && algo == Algorithm::BCD) {
        throw std::invalid_argument("block coordinate descent is for the multitask model");
    }
    return algo;
}

} // namespace detail

/**
 * One cyclic coordinate descent pass over the active features, in increasing
 * index order:
 *   beta_j <- ST(beta_j - gamma x_j^T grad F(X beta) / ||x_j||^2, gamma lambda / ||x_j||^2)
 * Xbeta is kept in sync after every coordinate. Returns the number of updates.
 */
inline long long cd_epoch(ModelKind kind,
                          const DesignMatrix& X,
                          const Targets& targets,
                          double lambda,
                          Eigen::MatrixXd& beta,
                          Eigen::MatrixXd& Xbeta,
                          const ActiveSet& active)
{
    if (beta.cols() != 1) throw std::invalid_argument("cd_epoch expects a single task");
    const double gamma = gamma_of(kind);
    const auto& y = targets.values();
    const Eigen::VectorXd& norms = X.column_norms();
    long long updates = 0;
    for (Index j = 0; j < X.cols(); ++j) {
        if (!active.contains(j) || norms[j] == 0.0) continue;
        const double lj = norms[j] * norms[j];
        double g = 0.0;
        X.for_each_in_column(j, [&](Index i, double x) { g += x * grad_entry(kind, Xbeta(i, 0), y(i, 0)); });
        const double old = beta(j, 0);
        const double upd = soft_threshold(old - gamma * g / lj, gamma * lambda / lj);
        ++updates;
        if (upd != old) {
            beta(j, 0) = upd;
            X.add_column(j, upd - old, Xbeta.col(0));
        }
    }
    return updates;
}

/// One proximal gradient step with step size gamma / L; Xbeta is recomputed.
inline long long pg_epoch(ModelKind kind,
                          const DesignMatrix& X,
                          const Targets& targets,
                          double lambda,
                          Eigen::MatrixXd& beta,
                          Eigen::MatrixXd& Xbeta,
                          double L,
                          const ActiveSet& active)
{
    if (!(L > 0.0)) throw std::invalid_argument("pg_epoch: Lipschitz constant must be positive");
    const double step = gamma_of(kind) / L;
    const Eigen::MatrixXd grad = grad_F(kind, Xbeta, targets);
    long long updates = 0;
    for (Index j = 0; j < X.cols(); ++j) {
        if (!active.contains(j)) continue;
        const Eigen::RowVectorXd gj = X.column_dot(j, grad);
        beta.row(j) = block_soft_threshold(Eigen::RowVectorXd(beta.row(j) - step * gj), lambda * step);
        ++updates;
    }
    Xbeta = X.multiply(beta);
    return updates;
}

/**
 * One cyclic block coordinate descent pass for the multitask model:
 *   R_j = B_j + x_j^T (Y - XB) / ||x_j||^2,  B_j <- (1 - (lambda / ||x_j||^2) / ||R_j||)_+ R_j
 */
inline long long bcd_epoch(const DesignMatrix& X,
                           const Targets& targets,
                           double lambda,
                           Eigen::MatrixXd& B,
                           Eigen::MatrixXd& XB,
                           const ActiveSet& active)
{
    const auto& Y = targets.values();
    const Eigen::VectorXd& norms = X.column_norms();
    const Index q = B.cols();
    long long updates = 0;
    Eigen::RowVectorXd corr(q);
    for (Index j = 0; j < X.cols(); ++j) {
        if (!active.contains(j) || norms[j] == 0.0) continue;
        const double lj = norms[j] * norms[j];
        corr.setZero();
        X.for_each_in_column(j, [&](Index i, double x) { corr += x * (Y.row(i) - XB.row(i)); });
        const Eigen::RowVectorXd old = B.row(j);
        const Eigen::RowVectorXd upd = block_soft_threshold(Eigen::RowVectorXd(old + corr / lj), lambda / lj);
        ++updates;
        if (upd != old) {
            B.row(j) = upd;
            X.add_column(j, Eigen::RowVectorXd(upd - old), XB);
        }
    }
    return updates;
}

/**
 * Gap Safe rule: discards feature j when
 *   (1 - ||x_j^T theta||) / ||x_j|| > sqrt(2 gap / (gamma lambda^2)).
 * Discarded coefficients are set to zero and Xbeta is adjusted. Returns the
 * number of newly screened features.
 */
inline Index gap_safe_screen(const DualCertificate& cert,
                             double gap,
                             const DesignMatrix& X,
                             double lambda,
                             double gamma,
                             ActiveSet& active,
                             Eigen::MatrixXd& beta,
                             Eigen::MatrixXd& Xbeta,
                             std::vector<Index>* removed = nullptr)
{
    if (gap < -1e-10) throw ContractViolation("gap_safe_screen: negative duality gap");
    gap = std::max(gap, 0.0);
    const double radius = std::sqrt(2.0 * gap / (gamma * lambda * lambda));
    const Eigen::VectorXd& norms = X.column_norms();
    Index screened = 0;
    for (Index j = 0; j < X.cols(); ++j) {
        if (!active.contains(j)) continue;
        double score = std::numeric_limits<double>::infinity();
        if (norms[j] > 0) score = (1.0 - X.column_dot(j, cert.theta).norm()) / norms[j];
        if (score > radius) {
            active.remove(j);
            ++screened;
            if (removed) removed->push_back(j);
            if (beta.row(j).squaredNorm() > 0) {
                X.add_column(j, Eigen::RowVectorXd(-beta.row(j)), Xbeta);
                beta.row(j).setZero();
            }
        }
    }
    return screened;
}

/**
 * First-order solver with dual extrapolation.
 *
 * Every `freq` epochs: Xbeta is recomputed, the residual-like vector is
 * pushed to the buffer, the rescaled and extrapolated dual points are built,
 * and the best of {previous, extrapolated, rescaled} is kept. Stops when the
 * duality gap drops below params.tol. The starting point's residual is also
 * buffered, so K epochs with freq = 1 fill the buffer.
 */
inline SolveReport solve(ModelKind kind,
                         const Dataset& ds,
                         double lambda,
                         const Eigen::MatrixXd& beta0,
                         const SolverParams& params)
{
    if (!(lambda > 0.0)) throw std::invalid_argument("solve: lambda must be positive");
    if (params.freq < 1 || params.K < 1 || !(params.tol > 0.0)) {
        throw std::invalid_argument("solve: need freq >= 1, K >= 1, tol > 0");
    }
    const DesignMatrix& X = ds.X;
    const Targets& targets = ds.targets;
    if (beta0.rows() != X.cols() || beta0.cols() != targets.q()) {
        throw std::invalid_argument("solve: beta0 has the wrong shape");
    }
    const Algorithm algo = detail::effective_algorithm(kind, params.algorithm);
    const double gamma = gamma_of(kind);

    SolveReport rep;
    rep.beta = beta0;
    Eigen::MatrixXd Xbeta = X.multiply(rep.beta);
    ActiveSet active(X.cols());
    ResidualBuffer buffer(params.K);
    if (params.extrapolation) buffer.push(residual_like(kind, Xbeta, targets));

    DualCertificate best = rescale_dual(kind, grad_F(kind, Xbeta, targets), X, targets, lambda);
    auto signs = detail::sign_pattern(rep.beta);

    // lambda >= lambda_max from a cold start: 0 is already certified, and CD
    // could otherwise leave a rounding-level coefficient on the tied feature
    if (rep.beta.squaredNorm() == 0.0) {
        GapRecord rec;
        rec.primal = primal_value(kind, rep.beta, Xbeta, targets, lambda);
        rec.dual_rescaled = rec.dual_used = best.dual_value;
        if (rec.primal - rec.dual_used <= params.tol) {
            rep.gap = rec.primal - rec.dual_used;
            rep.gap_history.push_back(rec);
            rep.converged = true;
            rep.theta = std::move(best);
            return rep;
        }
    }

    double L = 0.0;
    if (algo == Algorithm::PG) {
        // small inflation keeps 1/L a valid step despite power-iteration error
        L = spectral_norm_sq(X, 1e-10, 10000) * (1.0 + 1e-6);
        if (!(L > 0.0)) L = 1.0;
    }

    std::vector<DualCertificate> candidates;
    for (long epoch = 1; epoch <= params.max_epochs; ++epoch) {
        switch (algo) {
        case Algorithm::CD: rep.coordinate_updates += cd_epoch(kind, X, targets, lambda, rep.beta, Xbeta, active); break;
        case Algorithm::PG: rep.coordinate_updates += pg_epoch(kind, X, targets, lambda, rep.beta, Xbeta, L, active); break;
        case Algorithm::BCD: rep.coordinate_updates += bcd_epoch(X, targets, lambda, rep.beta, Xbeta, active); break;
        }
        rep.epochs_run = epoch;
        if (epoch % params.freq != 0) continue;

        Xbeta = X.multiply(rep.beta);
        candidates.clear();
        best.provenance = Provenance::Previous;
        candidates.push_back(std::move(best));
        candidates.push_back(rescale_dual(kind, grad_F(kind, Xbeta, targets), X, targets, lambda));

        GapRecord rec;
        rec.epoch = epoch;
        rec.dual_rescaled = candidates.back().dual_value;
        if (params.extrapolation) {
            buffer.push(residual_like(kind, Xbeta, targets));
            const ExtrapolationResult ex = extrapolate(buffer);
            candidates.push_back(accel_dual_point(kind, ex.r_acc, X, targets, lambda));
            rec.dual_accel = candidates.back().dual_value;
        }
        best = candidates[best_dual_index(candidates)];

        rec.primal = primal_value(kind, rep.beta, Xbeta, targets, lambda);
        rec.dual_used = best.dual_value;
        auto new_signs = detail::sign_pattern(rep.beta);
        rec.sign_change = new_signs != signs;
        signs = std::move(new_signs);
        rep.gap = rec.primal - rec.dual_used;
        rep.gap_history.push_back(rec);

        if (rep.gap <= params.tol) {
            rep.converged = true;
            break;
        }
        if (params.screening) {
            rep.screened += gap_safe_screen(best, rep.gap, X, lambda, gamma, active, rep.beta, Xbeta,
                                            &rep.screened_features);
            rep.screened_history.push_back({epoch, active.remaining()});
        }
    }
    if (!rep.converged) {
        Xbeta = X.multiply(rep.beta);
        rep.gap = primal_value(kind, rep.beta, Xbeta, targets, lambda) - best.dual_value;
    }
    rep.theta = std::move(best);
    return rep;
}

} // namespace celer
