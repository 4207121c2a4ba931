#pragma once
#include <cmath>
#include <deque>
#include <span>
#include <stdexcept>
#include <Eigen/Core>
#include <Eigen/QR>
#include <celer/datafit.hpp>

namespace celer {

/**
 * Ring buffer of the last K+1 residual-like vectors (n x q matrices).
 *
 * Extrapolation of order K uses the K differences between consecutive
 * stored vectors, hence the capacity of K+1.
 */
class ResidualBuffer
{
public:
    explicit ResidualBuffer(int order = 5)
        : order_(order)
    {
        if (order < 1) throw std::invalid_argument("extrapolation order must be >= 1");
    }

    void push(Eigen::MatrixXd r)
    {
        if (!store_.empty()
            && (r.rows() != store_.back().rows() || r.cols() != store_.back().cols())) {
            throw std::invalid_argument("ResidualBuffer::push: dimension mismatch");
        }
        store_.push_back(std::move(r));
        if (store_.size() > capacity()) store_.pop_front();
        ++pushes_;
    }

    void clear()
    {
        store_.clear();
        pushes_ = 0;
    }

    int order() const { return order_; }
    std::size_t capacity() const { return static_cast<std::size_t>(order_) + 1; }
    std::size_t size() const { return store_.size(); }
    std::size_t pushes() const { return pushes_; }
    bool empty() const { return store_.empty(); }
    bool full() const { return store_.size() == capacity(); }

    /// i = 0 is the oldest stored vector.
    const Eigen::MatrixXd& at(std::size_t i) const { return store_.at(i); }
    const Eigen::MatrixXd& latest() const { return store_.back(); }

private:
    int order_;
    std::deque<Eigen::MatrixXd> store_;
    std::size_t pushes_ = 0;
};

enum class ExtrapolationFlag { Ok, FallbackLast };

struct ExtrapolationResult
{
    Eigen::MatrixXd r_acc;
    Eigen::VectorXd coefficients; // c_1 weights the newest vector, c_K the K-th newest
    ExtrapolationFlag flag = ExtrapolationFlag::FallbackLast;
};

// Relative pivot threshold below which the coefficient system is treated as singular.
inline constexpr double extrapolation_rank_threshold = 1e-12;

/**
 * Extrapolated residual r_acc = sum_k c_k r^(t+1-k).
 *
 * Column k of U is the difference ending at r^(t+1-k), so c_k weights the
 * newer endpoint of its own difference column. c minimizes ||U c|| subject
 * to sum(c) = 1. When U^T U is invertible this is the closed form
 * (U^T U)^{-1} 1 / (1^T (U^T U)^{-1} 1); the constraint is eliminated and the
 * remaining least-squares problem is solved by a rank-revealing decomposition,
 * so a rank-deficient U (an exactly recovered VAR fixed point) still yields
 * the minimum-norm solution. Falls back to the newest vector when fewer than
 * K+1 vectors are stored or when the differences carry no usable information.
 */
inline ExtrapolationResult extrapolate(const ResidualBuffer& buf)
{
    if (buf.empty()) throw std::invalid_argument("extrapolate: empty residual buffer");
    const int K = buf.order();

    ExtrapolationResult res;
    res.coefficients = Eigen::VectorXd::Zero(K);
    res.coefficients[0] = 1.0;
    res.r_acc = buf.latest();
    res.flag = ExtrapolationFlag::FallbackLast;
    if (!buf.full()) return res;

    const Index dim = buf.latest().size();
    // newest(k) = r^(t+1-k), k = 1..K  ->  buffer index K + 1 - k
    auto newest = [&](int k) -> const Eigen::MatrixXd& { return buf.at(static_cast<std::size_t>(K + 1 - k)); };

    Eigen::MatrixXd U(dim, K);
    for (int k = 1; k <= K; ++k) {
        const Eigen::MatrixXd diff = newest(k) - buf.at(static_cast<std::size_t>(K - k));
        U.col(k - 1) = Eigen::Map<const Eigen::VectorXd>(diff.data(), dim);
    }
    const double unorm = U.norm();
    if (!(unorm > 0.0) || !std::isfinite(unorm)) return res;
    U /= unorm;

    Eigen::VectorXd c(K);
    if (K == 1) {
        c[0] = 1.0;
    } else {
        Eigen::MatrixXd W = U.rightCols(K - 1).colwise() - U.col(0);
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
        cod.setThreshold(extrapolation_rank_threshold);
        cod.compute(W);
        if (cod.rank() == 0) return res;
        const Eigen::VectorXd z = cod.solve(Eigen::VectorXd(-U.col(0)));
        c[0] = 1.0 - z.sum();
        c.tail(K - 1) = z;
    }
    if (!c.allFinite()) return res;

    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(buf.latest().rows(), buf.latest().cols());
    for (int k = 1; k <= K; ++k) acc += c[k - 1] * newest(k);
    if (!acc.allFinite()) return res;

    res.r_acc = std::move(acc);
    res.coefficients = std::move(c);
    res.flag = ExtrapolationFlag::Ok;
    return res;
}

/// What the solvers buffer: residuals Y - XB for the quadratic models, X beta for logistic.
inline Eigen::MatrixXd residual_like(ModelKind kind, const Eigen::MatrixXd& Xbeta, const Targets& targets)
{
    if (kind == ModelKind::Logistic) return Xbeta;
    return targets.values() - Xbeta;
}

/// Feasible dual point built from an extrapolated residual-like vector.
inline DualCertificate accel_dual_point(ModelKind kind,
                                        const Eigen::MatrixXd& r_acc,
                                        const DesignMatrix& X,
                                        const Targets& targets,
                                        double lambda)
{
    // quadratic: -grad F(X beta) is the residual itself
    DualCertificate cert = kind == ModelKind::Logistic
                               ? rescale_dual(kind, grad_F(kind, r_acc, targets), X, targets, lambda)
                               : rescale_dual(kind, Eigen::MatrixXd(-r_acc), X, targets, lambda);
    cert.provenance = Provenance::Extrapolated;
    return cert;
}

namespace detail {

inline int provenance_rank(Provenance p)
{
    switch (p) {
    case Provenance::Previous: return 3;
    case Provenance::Inner: return 2;
    case Provenance::Extrapolated: return 1;
    case Provenance::Rescaled: return 0;
    }
    return 0;
}

} // namespace detail

/// Index of the candidate with the largest dual value; ties go to previous > inner > extrapolated > rescaled.
inline std::size_t best_dual_index(std::span<const DualCertificate> candidates)
{
    if (candidates.empty()) throw std::invalid_argument("best_dual: no candidates");
    std::size_t best = 0;
    auto value = [](const DualCertificate& c) {
        return std::isnan(c.dual_value) ? -std::numeric_limits<double>::infinity() : c.dual_value;
    };
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        const double vi = value(candidates[i]);
        const double vb = value(candidates[best]);
        if (vi > vb
            || (vi == vb
                && detail::provenance_rank(candidates[i].provenance)
                       > detail::provenance_rank(candidates[best].provenance))) {
            best = i;
        }
    }
    return best;
}

inline DualCertificate best_dual(std::span<const DualCertificate> candidates)
{
    return candidates[best_dual_index(candidates)];
}

} // namespace celer
