#pragma once
#include <cmath>
#include <vector>
#include <Eigen/Core>
#include <celer/datafit.hpp>
#include <celer/dataset.hpp>
#include <celer/errors.hpp>
#include <celer/extrapolation.hpp>
#include <celer/solvers.hpp>

namespace celer {

struct PNParams
{
    int max_cd_iter = 20;   // CD passes per direction (forced to 1 for the first direction)
    int min_cd_iter = 2;
    int max_backtrack = 20;
    int K = 5;
    double tol = 1e-8;      // absolute duality-gap target
    int max_iter = 500;     // Newton iterations
};

/// Per-solve scratch for the Newton direction on the logistic model.
struct NewtonWorkspace
{
    Eigen::VectorXd delta_beta;   // p
    Eigen::VectorXd X_delta_beta; // n
    CurvatureDiag D;              // n, f_i''((X beta)_i)
    Eigen::VectorXd L;            // p, x_j^T D x_j

    void refresh_curvature(const DesignMatrix& X, const Eigen::MatrixXd& Xbeta, const Targets& targets)
    {
        D = hessian_diag(ModelKind::Logistic, Xbeta, targets);
        L.resize(X.cols());
        for (Index j = 0; j < X.cols(); ++j) L[j] = X.weighted_column_sq(j, D);
        delta_beta = Eigen::VectorXd::Zero(X.cols());
        X_delta_beta = Eigen::VectorXd::Zero(X.rows());
    }
};

/**
 * Approximate prox-Newton direction by cyclic coordinate descent on the
 * curvature-weighted Lasso in u = beta + delta:
 *   u_j <- ST(u_j - (x_j^T grad F(X beta) + <x_j, X delta>_D) / L_j, lambda / L_j)
 * Only X, the weights D and the gradient correlations are needed; the
 * weighted design and its pseudo-inverse never get formed.
 *
 * Stops after `max_cd_iter` passes, or earlier once
 * sum_j (change_j L_j)^2 <= tol and at least `min_cd_iter` passes ran.
 * Fills ws.delta_beta / ws.X_delta_beta and returns the number of passes.
 */
inline int newton_direction(const DesignMatrix& X,
                            const Eigen::VectorXd& grad_corr, // x_j^T grad F(X beta), length p
                            const Eigen::VectorXd& beta,
                            double lambda,
                            NewtonWorkspace& ws,
                            int max_cd_iter,
                            int min_cd_iter = 2,
                            double tol = 0.0)
{
    const Index p = X.cols();
    ws.delta_beta.setZero(p);
    ws.X_delta_beta.setZero(X.rows());
    int passes = 0;
    for (int k = 1; k <= max_cd_iter; ++k) {
        passes = k;
        double tau = 0.0;
        for (Index j = 0; j < p; ++j) {
            const double Lj = ws.L[j];
            if (!(Lj > 0.0)) continue;
            const double u = beta[j] + ws.delta_beta[j];
            const double curv = X.weighted_column_dot(j, ws.D, ws.X_delta_beta);
            const double u_new = soft_threshold(u - (grad_corr[j] + curv) / Lj, lambda / Lj);
            if (u_new != u) {
                ws.delta_beta[j] = u_new - beta[j];
                X.add_column(j, u_new - u, ws.X_delta_beta);
            }
            tau += (u_new - u) * (u_new - u) * Lj * Lj;
        }
        if (tau <= tol && k >= min_cd_iter) break;
    }
    ws.X_delta_beta = X.multiply(ws.delta_beta);
    return passes;
}

struct LineSearchResult
{
    double alpha = 1.0;
    bool accepted = false; // false when the descent test never passed
    int halvings = 0;
};

/**
 * Halves alpha (starting from 1) until the directional derivative of the
 * objective along delta, evaluated at beta + alpha delta, is negative:
 *   lambda * sum_j s_j(alpha) delta_j + (X delta)^T grad F(X beta + alpha X delta) < 0
 * where s_j is the sign of beta_j + alpha delta_j, and -|delta_j| is used at zero.
 */
inline LineSearchResult backtracking(const Eigen::VectorXd& delta_beta,
                                     const Eigen::VectorXd& X_delta_beta,
                                     const Eigen::VectorXd& beta,
                                     const Eigen::VectorXd& Xbeta,
                                     const Targets& targets,
                                     double lambda,
                                     int max_backtrack = 20)
{
    const auto& y = targets.values();
    LineSearchResult res;
    for (int k = 1; k <= max_backtrack; ++k) {
        double delta = 0.0;
        for (Index j = 0; j < beta.size(); ++j) {
            const double v = beta[j] + res.alpha * delta_beta[j];
            if (v < 0) delta -= lambda * delta_beta[j];
            else if (v > 0) delta += lambda * delta_beta[j];
            else delta -= lambda * std::abs(delta_beta[j]);
        }
        for (Index i = 0; i < Xbeta.size(); ++i) {
            const double t = Xbeta[i] + res.alpha * X_delta_beta[i];
            delta += X_delta_beta[i] * grad_entry(ModelKind::Logistic, t, y(i, 0));
        }
        if (delta < 0) {
            res.accepted = true;
            break;
        }
        res.alpha /= 2;
        ++res.halvings;
    }
    return res;
}

/// theta = -grad F(X beta) / lambda = y sigma(-y X beta) / lambda, then divided by max(1, ||X^T theta||_inf).
inline DualCertificate logistic_rescaled_dual(const DesignMatrix& X,
                                              const Targets& targets,
                                              const Eigen::VectorXd& Xbeta,
                                              double lambda)
{
    const auto& y = targets.values();
    Eigen::MatrixXd theta(Xbeta.size(), 1);
    for (Index i = 0; i < Xbeta.size(); ++i) theta(i, 0) = y(i, 0) * sigmoid(-y(i, 0) * Xbeta[i]) / lambda;
    theta /= std::max(1.0, dual_norm(X, theta));
    DualCertificate cert;
    cert.dual_value = dual_objective(ModelKind::Logistic, theta, targets, lambda);
    cert.theta = std::move(theta);
    cert.provenance = Provenance::Rescaled;
    return cert;
}

/**
 * Prox-Newton solver for sparse logistic regression. Each iteration
 * recomputes the curvature, takes a coordinate-descent Newton direction
 * (a single pass for the first one), line-searches it, and keeps the best
 * rescaled dual point. Stops when the gap drops below params.tol.
 */
inline SolveReport pn_solve(const Dataset& ds,
                            double lambda,
                            const Eigen::MatrixXd& beta0,
                            const PNParams& params)
{
    if (ds.targets.kind() != TargetKind::Classification) {
        throw UnsupportedOperation("prox-Newton is implemented for logistic regression only");
    }
    if (!(lambda > 0.0)) throw std::invalid_argument("pn_solve: lambda must be positive");
    const DesignMatrix& X = ds.X;
    const Targets& targets = ds.targets;
    if (beta0.rows() != X.cols() || beta0.cols() != 1) {
        throw std::invalid_argument("pn_solve: beta0 has the wrong shape");
    }

    SolveReport rep;
    Eigen::VectorXd beta = beta0.col(0);
    Eigen::VectorXd Xbeta = X.multiply(beta);

    DualCertificate best;
    best.theta = Eigen::MatrixXd::Zero(X.rows(), 1);
    best.dual_value = dual_objective(ModelKind::Logistic, best.theta, targets, lambda);

    NewtonWorkspace ws;
    std::vector<DualCertificate> candidates;
    auto signs = detail::sign_pattern(beta);
    const double cd_tol = params.tol * lambda * lambda;

    for (int t = 1; t <= params.max_iter; ++t) {
        ws.refresh_curvature(X, Xbeta, targets);
        const Eigen::MatrixXd grad = grad_F(ModelKind::Logistic, Xbeta, targets);
        const Eigen::VectorXd grad_corr = X.transpose_multiply(grad).col(0);
        const int max_cd = t == 1 ? 1 : params.max_cd_iter;
        const int passes = newton_direction(X, grad_corr, beta, lambda, ws, max_cd, params.min_cd_iter, cd_tol);
        rep.coordinate_updates += static_cast<long long>(passes) * X.cols();
        rep.epochs_run += passes;

        if (ws.delta_beta.squaredNorm() > 0) {
            const LineSearchResult ls = backtracking(ws.delta_beta, ws.X_delta_beta, beta, Xbeta,
                                                     targets, lambda, params.max_backtrack);
            beta += ls.alpha * ws.delta_beta;
            Xbeta = X.multiply(beta);
        }

        candidates.clear();
        best.provenance = Provenance::Previous;
        candidates.push_back(std::move(best));
        candidates.push_back(logistic_rescaled_dual(X, targets, Xbeta, lambda));
        best = candidates[best_dual_index(candidates)];

        GapRecord rec;
        rec.epoch = t;
        rec.dual_rescaled = candidates[1].dual_value;
        rec.dual_used = best.dual_value;
        rec.primal = primal_value(ModelKind::Logistic, beta, Xbeta, targets, lambda);
        auto new_signs = detail::sign_pattern(beta);
        rec.sign_change = new_signs != signs;
        signs = std::move(new_signs);
        rep.gap = rec.primal - rec.dual_used;
        rep.gap_history.push_back(rec);
        if (rep.gap <= params.tol) {
            rep.converged = true;
            break;
        }
    }
    rep.beta = beta;
    rep.theta = std::move(best);
    return rep;
}

/**
 * Runs K cyclic CD passes restricted to the support of beta (full-problem
 * lambda), buffering the residual-like vector before and after each pass,
 * and returns the extrapolated dual point, feasible for the full X.
 * beta and Xbeta keep the progress made by the passes. With an empty
 * support the rescaled point at the current iterate is returned.
 */
inline DualCertificate support_cd_extrapolation(ModelKind kind,
                                                const Dataset& ds,
                                                double lambda,
                                                Eigen::MatrixXd& beta,
                                                Eigen::MatrixXd& Xbeta,
                                                int K,
                                                long long* updates = nullptr)
{
    const DesignMatrix& X = ds.X;
    const Targets& targets = ds.targets;
    ActiveSet support(X.cols());
    for (Index j = 0; j < X.cols(); ++j) {
        if (beta.row(j).squaredNorm() == 0) support.remove(j);
    }
    if (support.remaining() == 0) {
        return rescale_dual(kind, grad_F(kind, Xbeta, targets), X, targets, lambda);
    }

    ResidualBuffer buffer(K);
    buffer.push(residual_like(kind, Xbeta, targets));
    for (int k = 0; k < K; ++k) {
        const long long u = kind == ModelKind::MultitaskQuadratic
                                ? bcd_epoch(X, targets, lambda, beta, Xbeta, support)
                                : cd_epoch(kind, X, targets, lambda, beta, Xbeta, support);
        if (updates) *updates += u;
        buffer.push(residual_like(kind, Xbeta, targets));
    }
    Xbeta = X.multiply(beta);
    const ExtrapolationResult ex = extrapolate(buffer);
    return accel_dual_point(kind, ex.r_acc, X, targets, lambda);
}

} // namespace celer
