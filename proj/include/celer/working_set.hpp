#pragma once
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>
#include <Eigen/Core>
#include <celer/datafit.hpp>
#include <celer/dataset.hpp>
#include <celer/errors.hpp>
#include <celer/prox_newton.hpp>
#include <celer/solvers.hpp>

namespace celer {

enum class InnerSolver { CD, ProxNewton };

struct CelerParams
{
    Index p1 = 100;          // first working-set size
    double rho = 0.3;        // subproblems are solved to rho * global gap
    int max_ws_iters = 50;
    double tol = 1e-8;       // absolute duality-gap target
    InnerSolver inner = InnerSolver::CD;
    int K = 5;
    bool extrapolation = true;
    int freq = 10;           // inner gap-check frequency (CD inner solver)
    int max_epochs = 100000; // per subproblem
    bool inner_screening = false;
    PNParams pn;
};

struct WorkingSet
{
    std::vector<Index> indices; // ascending
    double epsilon_inner = 0.0;

    Index size() const { return static_cast<Index>(indices.size()); }
};

/**
 * d_j = (1 - ||x_j^T theta||) / ||x_j|| for beta_j = 0, -1 on the support of
 * beta, +inf for zero columns. Small d means the dual constraint of feature
 * j is nearly active.
 */
inline Eigen::VectorXd feature_scores(const DesignMatrix& X,
                                      const DualCertificate& cert,
                                      const Eigen::MatrixXd& beta)
{
    const Index p = X.cols();
    Eigen::VectorXd d(p);
    const Eigen::VectorXd& norms = X.column_norms();
    for (Index j = 0; j < p; ++j) {
        if (beta.row(j).squaredNorm() > 0) d[j] = -1.0;
        else if (norms[j] == 0.0) d[j] = std::numeric_limits<double>::infinity();
        else d[j] = (1.0 - X.column_dot(j, cert.theta).norm()) / norms[j];
    }
    return d;
}

/// Working-set size for outer iteration t (1-based).
inline Index working_set_size(Index p, Index support, int t, Index p1)
{
    Index size;
    if (t == 1) size = support > 0 ? support : p1;
    else size = support > 0 ? 2 * support : p1; // empty support: restart from p1 rather than from nothing
    return std::clamp<Index>(size, std::min<Index>(1, p), p);
}

/**
 * Selects the working-set-size smallest scores (ties: lower index first).
 * On the first outer iteration a nonzero beta_prev counts as a warm start and
 * the set is sized to its support. min_size overrides the rule from below.
 */
inline WorkingSet create_working_set(const Eigen::VectorXd& d,
                                     const Eigen::MatrixXd& beta_prev,
                                     double global_gap,
                                     int t,
                                     const CelerParams& params,
                                     Index min_size = 0)
{
    if (!(global_gap > 0.0)) throw std::invalid_argument("create_working_set: gap must be positive");
    const Index p = d.size();
    Index support = 0;
    for (Index j = 0; j < beta_prev.rows(); ++j) support += beta_prev.row(j).squaredNorm() > 0;
    const Index size = std::min(p, std::max(min_size, working_set_size(p, support, t, params.p1)));

    std::vector<std::pair<double, Index>> order(static_cast<std::size_t>(p));
    for (Index j = 0; j < p; ++j) order[static_cast<std::size_t>(j)] = {d[j], j};
    std::nth_element(order.begin(), order.begin() + size, order.end());

    WorkingSet ws;
    ws.indices.reserve(static_cast<std::size_t>(size));
    for (Index k = 0; k < size; ++k) ws.indices.push_back(order[static_cast<std::size_t>(k)].second);
    std::sort(ws.indices.begin(), ws.indices.end());
    ws.epsilon_inner = params.rho * global_gap;
    return ws;
}

/**
 * Working-set solver. Each outer iteration keeps the best of the previous,
 * inner and rescaled dual points, stops when the global gap reaches
 * params.tol, and otherwise solves the problem restricted to the features
 * with the smallest scores to rho times the current gap. With the
 * prox-Newton inner solver, K CD passes on the support are run first and
 * their extrapolated dual point also competes.
 *
 * gap_history holds one record per outer iteration (epoch = cumulative
 * inner epochs); ws_sizes the working-set sizes.
 */
inline SolveReport celer_solve(ModelKind kind,
                               const Dataset& ds,
                               double lambda,
                               const Eigen::MatrixXd& beta0,
                               const CelerParams& params)
{
    if (!(lambda > 0.0)) throw std::invalid_argument("celer_solve: lambda must be positive");
    if (!(params.rho > 0.0 && params.rho < 1.0) || params.p1 < 1 || params.max_ws_iters < 1
        || !(params.tol > 0.0)) {
        throw std::invalid_argument("celer_solve: need 0 < rho < 1, p1 >= 1, max_ws_iters >= 1, tol > 0");
    }
    if (params.inner == InnerSolver::ProxNewton && kind != ModelKind::Logistic) {
        throw UnsupportedOperation("prox-Newton inner solver needs the logistic model");
    }
    const DesignMatrix& X = ds.X;
    const Targets& targets = ds.targets;
    if (beta0.rows() != X.cols() || beta0.cols() != targets.q()) {
        throw std::invalid_argument("celer_solve: beta0 has the wrong shape");
    }

    SolveReport rep;
    rep.beta = beta0;
    Eigen::MatrixXd Xbeta = X.multiply(rep.beta);
    DualCertificate best;
    bool have_best = false;
    DualCertificate inner;
    bool have_inner = false;
    auto signs = detail::sign_pattern(rep.beta);

    SolverParams sp;
    sp.K = params.K;
    sp.freq = params.freq;
    sp.max_epochs = params.max_epochs;
    sp.screening = params.inner_screening;
    sp.extrapolation = params.extrapolation;
    sp.algorithm = kind == ModelKind::MultitaskQuadratic ? Algorithm::BCD : Algorithm::CD;

    std::vector<DualCertificate> candidates;
    std::vector<Index> prev_ws;
    for (int t = 1; t <= params.max_ws_iters; ++t) {
        candidates.clear();
        if (have_best) {
            best.provenance = Provenance::Previous;
            candidates.push_back(std::move(best));
        }
        if (have_inner) candidates.push_back(std::move(inner));
        have_inner = false;

        GapRecord rec;
        rec.epoch = rep.epochs_run;
        if (params.inner == InnerSolver::ProxNewton && params.extrapolation) {
            long long upd = 0;
            candidates.push_back(support_cd_extrapolation(kind, ds, lambda, rep.beta, Xbeta, params.K, &upd));
            rec.dual_accel = candidates.back().dual_value;
            rep.coordinate_updates += upd;
            rep.epochs_run += upd > 0 ? params.K : 0;
        }
        candidates.push_back(rescale_dual(kind, grad_F(kind, Xbeta, targets), X, targets, lambda));
        rec.dual_rescaled = candidates.back().dual_value;
        best = candidates[best_dual_index(candidates)];
        have_best = true;

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

        const Eigen::VectorXd d = feature_scores(X, best, rep.beta);
        // the warm-start sizing only applies to the caller's beta0
        const Eigen::MatrixXd& size_ref = t == 1 ? beta0 : rep.beta;
        WorkingSet ws = create_working_set(d, size_ref, rep.gap, t, params);
        // a stale certificate can reproduce the previous set forever; force growth then
        if (ws.indices == prev_ws) ws = create_working_set(d, size_ref, rep.gap, t, params, 2 * ws.size());
        prev_ws = ws.indices;
        rep.ws_sizes.push_back(ws.size());

        Dataset sub(X.select_columns(ws.indices), targets, ds.provenance);
        Eigen::MatrixXd beta_sub(ws.size(), rep.beta.cols());
        for (Index k = 0; k < ws.size(); ++k) beta_sub.row(k) = rep.beta.row(ws.indices[static_cast<std::size_t>(k)]);

        SolveReport sub_rep;
        if (params.inner == InnerSolver::ProxNewton) {
            PNParams pn = params.pn;
            pn.tol = ws.epsilon_inner;
            sub_rep = pn_solve(sub, lambda, beta_sub, pn);
        } else {
            sp.tol = ws.epsilon_inner;
            sub_rep = solve(kind, sub, lambda, beta_sub, sp);
        }
        rep.epochs_run += sub_rep.epochs_run;
        rep.coordinate_updates += sub_rep.coordinate_updates;

        rep.beta.setZero();
        for (Index k = 0; k < ws.size(); ++k) rep.beta.row(ws.indices[static_cast<std::size_t>(k)]) = sub_rep.beta.row(k);
        Xbeta = X.multiply(rep.beta);

        // feasible for X_W only; restore feasibility for the full design
        inner.theta = sub_rep.theta.theta / std::max(1.0, dual_norm(X, sub_rep.theta.theta));
        inner.dual_value = dual_objective(kind, inner.theta, targets, lambda);
        inner.provenance = Provenance::Inner;
        have_inner = true;
    }
    if (!rep.converged) {
        // account for the last inner solve
        candidates.clear();
        best.provenance = Provenance::Previous;
        candidates.push_back(std::move(best));
        if (have_inner) candidates.push_back(std::move(inner));
        candidates.push_back(rescale_dual(kind, grad_F(kind, Xbeta, targets), X, targets, lambda));
        best = candidates[best_dual_index(candidates)];
        rep.gap = primal_value(kind, rep.beta, Xbeta, targets, lambda) - best.dual_value;
    }
    rep.theta = std::move(best);
    return rep;
}

} // namespace celer
