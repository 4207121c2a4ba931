#pragma once
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <Eigen/Core>
#include <celer/dataset.hpp>
#include <celer/errors.hpp>
#include <celer/numeric.hpp>

namespace celer {

/**
 * Data-fitting term of the sparse GLM.
 *
 * Quadratic:          f_i(t) = (y_i - t)^2 / 2,        gamma = 1
 * Logistic:           f_i(t) = log(1 + exp(-y_i t)),   gamma = 4
 * MultitaskQuadratic: ||Y - XB||_F^2 / 2 with the row-wise l2,1 penalty, gamma = 1
 *
 * Primal iterates, residuals and dual points are n x q / p x q matrices with
 * q = 1 for the single-task models, so the l1 penalty and the l2,1 penalty
 * are both "sum of row norms" and the dual constraint is max_j ||x_j^T Theta||_2 <= 1.
 */
enum class ModelKind { Quadratic, Logistic, MultitaskQuadratic };

inline double gamma_of(ModelKind kind) { return kind == ModelKind::Logistic ? 4.0 : 1.0; }

inline std::string_view to_string(ModelKind kind)
{
    switch (kind) {
    case ModelKind::Quadratic: return "lasso";
    case ModelKind::Logistic: return "logreg";
    case ModelKind::MultitaskQuadratic: return "mtl";
    }
    return "?";
}

inline ModelKind model_from_string(std::string_view s)
{
    if (s == "lasso") return ModelKind::Quadratic;
    if (s == "logreg") return ModelKind::Logistic;
    if (s == "mtl") return ModelKind::MultitaskQuadratic;
    throw std::invalid_argument("unknown model '" + std::string(s) + "'");
}

struct PrimalPoint
{
    Eigen::MatrixXd beta;  // p x q
    Eigen::MatrixXd Xbeta; // n x q

    static PrimalPoint at(const DesignMatrix& X, Eigen::MatrixXd beta)
    {
        PrimalPoint pt{std::move(beta), {}};
        pt.refresh(X);
        return pt;
    }

    void refresh(const DesignMatrix& X) { Xbeta = X.multiply(beta); }
};

enum class Provenance { Rescaled, Extrapolated, Previous, Inner };

inline std::string_view to_string(Provenance p)
{
    switch (p) {
    case Provenance::Rescaled: return "rescaled";
    case Provenance::Extrapolated: return "extrapolated";
    case Provenance::Previous: return "previous";
    case Provenance::Inner: return "inner";
    }
    return "?";
}

struct DualCertificate
{
    Eigen::MatrixXd theta; // n x q
    double dual_value = -std::numeric_limits<double>::infinity();
    Provenance provenance = Provenance::Rescaled;
};

// Diagonal of f_i''((X beta)_i).
using CurvatureDiag = Eigen::VectorXd;

namespace detail {

inline void check_dims(const Eigen::MatrixXd& Xbeta, const Targets& targets)
{
    if (Xbeta.rows() != targets.n() || Xbeta.cols() != targets.q()) {
        throw std::invalid_argument("prediction and target dimensions disagree");
    }
}

} // namespace detail

/// sum_j ||B_j||_2 (the l1 norm when q = 1).
inline double penalty(const Eigen::MatrixXd& beta)
{
    if (beta.cols() == 1) return beta.col(0).lpNorm<1>();
    return beta.rowwise().norm().sum();
}

/// F(X beta) = sum_i f_i((X beta)_i).
inline double data_term(ModelKind kind, const Eigen::MatrixXd& Xbeta, const Targets& targets)
{
    detail::check_dims(Xbeta, targets);
    const auto& Y = targets.values();
    if (kind != ModelKind::Logistic) return 0.5 * (Y - Xbeta).squaredNorm();
    double s = 0.0;
    for (Index i = 0; i < Y.rows(); ++i) s += log1p_exp(-Y(i, 0) * Xbeta(i, 0));
    return s;
}

inline double primal_value(ModelKind kind,
                           const Eigen::MatrixXd& beta,
                           const Eigen::MatrixXd& Xbeta,
                           const Targets& targets,
                           double lambda)
{
    return data_term(kind, Xbeta, targets) + lambda * penalty(beta);
}

inline double primal_value(ModelKind kind, const PrimalPoint& pt, const Targets& targets, double lambda)
{
    return primal_value(kind, pt.beta, pt.Xbeta, targets, lambda);
}

/// Entrywise f_i'((X beta)_i).
inline Eigen::MatrixXd grad_F(ModelKind kind, const Eigen::MatrixXd& Xbeta, const Targets& targets)
{
    detail::check_dims(Xbeta, targets);
    const auto& Y = targets.values();
    if (kind != ModelKind::Logistic) return Xbeta - Y;
    Eigen::MatrixXd g(Y.rows(), 1);
    for (Index i = 0; i < Y.rows(); ++i) g(i, 0) = -Y(i, 0) * sigmoid(-Y(i, 0) * Xbeta(i, 0));
    return g;
}

/// Scalar f_i'(t), used by coordinate kernels that only touch a few rows.
inline double grad_entry(ModelKind kind, double t, double y)
{
    if (kind != ModelKind::Logistic) return t - y;
    return -y * sigmoid(-y * t);
}

/**
 * D(theta) = -sum_i f_i^*(-lambda theta_i).
 *
 * Logistic: with u_i = lambda theta_i y_i, D = -sum_i [u_i log u_i + (1-u_i) log(1-u_i)],
 * finite only for u_i in [0, 1]; values within 1e-12 of the interval are clamped,
 * anything further out returns -infinity.
 */
inline double dual_objective(ModelKind kind,
                             const Eigen::MatrixXd& theta,
                             const Targets& targets,
                             double lambda)
{
    detail::check_dims(theta, targets);
    const auto& Y = targets.values();
    if (kind != ModelKind::Logistic) {
        return 0.5 * Y.squaredNorm() - 0.5 * lambda * lambda * (Y / lambda - theta).squaredNorm();
    }
    constexpr double slack = 1e-12;
    double s = 0.0;
    for (Index i = 0; i < Y.rows(); ++i) {
        double u = lambda * theta(i, 0) * Y(i, 0);
        if (u < -slack || u > 1.0 + slack) return -std::numeric_limits<double>::infinity();
        u = std::clamp(u, 0.0, 1.0);
        s -= xlogx(u) + xlogx(1.0 - u);
    }
    return s;
}

/// max_j ||x_j^T M||_2 (= ||X^T m||_inf for a single column).
inline double dual_norm(const DesignMatrix& X, const Eigen::MatrixXd& M)
{
    const Eigen::MatrixXd XtM = X.transpose_multiply(M);
    if (XtM.size() == 0) return 0.0;
    if (XtM.cols() == 1) return XtM.col(0).cwiseAbs().maxCoeff();
    return XtM.rowwise().norm().maxCoeff();
}

inline constexpr double feasibility_slack = 1e-12;

inline bool is_feasible(const DesignMatrix& X, const Eigen::MatrixXd& theta)
{
    return dual_norm(X, theta) <= 1.0 + feasibility_slack;
}

/// P(beta) - D(theta). Throws ContractViolation when theta is outside the dual feasible set.
inline double duality_gap(ModelKind kind,
                          const PrimalPoint& pt,
                          const DualCertificate& cert,
                          const DesignMatrix& X,
                          const Targets& targets,
                          double lambda)
{
    if (!is_feasible(X, cert.theta)) {
        throw ContractViolation("duality_gap: dual point is not feasible");
    }
    return primal_value(kind, pt, targets, lambda) - cert.dual_value;
}

/// theta = -grad / max(lambda, max_j ||x_j^T grad||).
inline DualCertificate rescale_dual(ModelKind kind,
                                    const Eigen::MatrixXd& grad,
                                    const DesignMatrix& X,
                                    const Targets& targets,
                                    double lambda)
{
    const double scale = std::max(lambda, dual_norm(X, grad));
    DualCertificate cert;
    cert.theta = -grad / scale;
    cert.dual_value = dual_objective(kind, cert.theta, targets, lambda);
    cert.provenance = Provenance::Rescaled;
    return cert;
}

/// Smallest lambda for which the zero vector solves the problem.
inline double lambda_max(ModelKind kind, const DesignMatrix& X, const Targets& targets)
{
    const double v = dual_norm(X, targets.values());
    return kind == ModelKind::Logistic ? 0.5 * v : v;
}

inline CurvatureDiag hessian_diag(ModelKind kind, const Eigen::MatrixXd& Xbeta, const Targets& targets)
{
    detail::check_dims(Xbeta, targets);
    if (kind == ModelKind::MultitaskQuadratic) {
        throw UnsupportedOperation("hessian_diag is not defined for the multitask model");
    }
    const Index n = Xbeta.rows();
    if (kind == ModelKind::Quadratic) return CurvatureDiag::Ones(n);
    CurvatureDiag d(n);
    for (Index i = 0; i < n; ++i) {
        // sigma(t) sigma(-t) = e / (1 + e)^2 with e = exp(-|t|); y_i = +-1 drops out
        const double e = std::exp(-std::abs(Xbeta(i, 0)));
        d[i] = e / ((1.0 + e) * (1.0 + e));
    }
    return d;
}

} // namespace celer
