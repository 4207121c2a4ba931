#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>
#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <celer/numeric.hpp>

namespace celer {

/**
 * Design matrix stored column-wise, either dense or compressed sparse column.
 *
 * All solver access goes through columns, so the class exposes column
 * kernels (dot products, axpy, weighted products) that work for both
 * storages. Column norms are computed once on construction.
 */
class DesignMatrix
{
public:
    using dense_t = Eigen::MatrixXd;
    using sparse_t = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

    DesignMatrix() = default;

    explicit DesignMatrix(dense_t X)
        : dense_(std::move(X))
        , sparse_storage_(false)
    {
        compute_norms();
    }

    explicit DesignMatrix(sparse_t X)
        : sparse_(std::move(X))
        , sparse_storage_(true)
    {
        sparse_.prune(0.0);
        sparse_.makeCompressed();
        compute_norms();
    }

    Index rows() const { return sparse_storage_ ? sparse_.rows() : dense_.rows(); }
    Index cols() const { return sparse_storage_ ? sparse_.cols() : dense_.cols(); }
    bool is_sparse() const { return sparse_storage_; }

    const Eigen::VectorXd& column_norms() const { return norms_; }
    double column_norm(Index j) const { return norms_[j]; }

    const dense_t& dense() const { return dense_; }
    const sparse_t& sparse() const { return sparse_; }

    Index nnz() const
    {
        if (sparse_storage_) return sparse_.nonZeros();
        return (dense_.array() != 0.0).count();
    }

    Index column_nnz(Index j) const
    {
        if (sparse_storage_) {
            return sparse_.outerIndexPtr()[j + 1] - sparse_.outerIndexPtr()[j];
        }
        return (dense_.col(j).array() != 0.0).count();
    }

    // Calls f(row, value) for every stored entry of column j.
    template <class F>
    void for_each_in_column(Index j, F&& f) const
    {
        if (sparse_storage_) {
            for (sparse_t::InnerIterator it(sparse_, j); it; ++it) f(it.index(), it.value());
        } else {
            const double* col = dense_.data() + j * dense_.rows();
            for (Index i = 0; i < dense_.rows(); ++i) f(i, col[i]);
        }
    }

    double column_dot(Index j, const Eigen::Ref<const Eigen::VectorXd>& v) const
    {
        if (sparse_storage_) return sparse_.col(j).dot(v);
        return dense_.col(j).dot(v);
    }

    // exact match, so a VectorXd argument does not also convert to MatrixXd below
    double column_dot(Index j, const Eigen::VectorXd& v) const
    {
        return column_dot(j, Eigen::Ref<const Eigen::VectorXd>(v));
    }

    /// Row vector x_j^T M, of length M.cols().
    Eigen::RowVectorXd column_dot(Index j, const Eigen::MatrixXd& M) const
    {
        Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(M.cols());
        for_each_in_column(j, [&](Index i, double v) { out += v * M.row(i); });
        return out;
    }

    // v += a * x_j
    void add_column(Index j, double a, Eigen::Ref<Eigen::VectorXd> v) const
    {
        if (sparse_storage_) {
            for (sparse_t::InnerIterator it(sparse_, j); it; ++it) v[it.index()] += a * it.value();
        } else {
            v += a * dense_.col(j);
        }
    }

    // M += x_j * a
    void add_column(Index j, const Eigen::RowVectorXd& a, Eigen::MatrixXd& M) const
    {
        for_each_in_column(j, [&](Index i, double v) { M.row(i) += v * a; });
    }

    /// sum_i w_i x_ij v_i
    double weighted_column_dot(Index j,
                               const Eigen::VectorXd& w,
                               const Eigen::VectorXd& v) const
    {
        double s = 0.0;
        for_each_in_column(j, [&](Index i, double x) { s += w[i] * x * v[i]; });
        return s;
    }

    /// sum_i w_i x_ij^2
    double weighted_column_sq(Index j, const Eigen::VectorXd& w) const
    {
        double s = 0.0;
        for_each_in_column(j, [&](Index i, double x) { s += w[i] * x * x; });
        return s;
    }

    /// X * B
    Eigen::MatrixXd multiply(const Eigen::MatrixXd& B) const
    {
        if (sparse_storage_) return sparse_ * B;
        return dense_ * B;
    }

    /// X^T * R
    Eigen::MatrixXd transpose_multiply(const Eigen::MatrixXd& R) const
    {
        if (sparse_storage_) return sparse_.transpose() * R;
        return dense_.transpose() * R;
    }

    DesignMatrix select_columns(std::span<const Index> cols) const
    {
        if (!sparse_storage_) {
            dense_t out(rows(), static_cast<Index>(cols.size()));
            for (std::size_t k = 0; k < cols.size(); ++k) out.col(k) = dense_.col(cols[k]);
            return DesignMatrix(std::move(out));
        }
        std::vector<Eigen::Triplet<double>> trip;
        for (std::size_t k = 0; k < cols.size(); ++k) {
            for (sparse_t::InnerIterator it(sparse_, cols[k]); it; ++it) {
                trip.emplace_back(it.index(), static_cast<Index>(k), it.value());
            }
        }
        sparse_t out(rows(), static_cast<Index>(cols.size()));
        out.setFromTriplets(trip.begin(), trip.end());
        return DesignMatrix(std::move(out));
    }

    /// Column j multiplied by factors[j].
    DesignMatrix scale_columns(const Eigen::VectorXd& factors) const
    {
        if (!sparse_storage_) return DesignMatrix(dense_t(dense_ * factors.asDiagonal()));
        sparse_t out = sparse_ * factors.asDiagonal();
        return DesignMatrix(std::move(out));
    }

    dense_t to_dense() const
    {
        if (sparse_storage_) return dense_t(sparse_);
        return dense_;
    }

private:
    void compute_norms()
    {
        norms_.resize(cols());
        for (Index j = 0; j < cols(); ++j) {
            norms_[j] = sparse_storage_ ? sparse_.col(j).norm() : dense_.col(j).norm();
        }
    }

    dense_t dense_;
    sparse_t sparse_;
    bool sparse_storage_ = false;
    Eigen::VectorXd norms_;
};

enum class TargetKind { Regression, Classification, Multitask };

/// Response stored as an n x q matrix; q = 1 for regression and classification.
class Targets
{
public:
    Targets() = default;

    static Targets regression(Eigen::VectorXd y)
    {
        return Targets(TargetKind::Regression, Eigen::MatrixXd(std::move(y)));
    }

    static Targets classification(Eigen::VectorXd y)
    {
        for (Index i = 0; i < y.size(); ++i) {
            if (y[i] != 1.0 && y[i] != -1.0) {
                throw std::invalid_argument("classification targets must be +1 or -1");
            }
        }
        return Targets(TargetKind::Classification, Eigen::MatrixXd(std::move(y)));
    }

    static Targets multitask(Eigen::MatrixXd Y)
    {
        if (Y.cols() < 1) throw std::invalid_argument("multitask targets need q >= 1");
        return Targets(TargetKind::Multitask, std::move(Y));
    }

    TargetKind kind() const { return kind_; }
    Index n() const { return values_.rows(); }
    Index q() const { return values_.cols(); }
    const Eigen::MatrixXd& values() const { return values_; }
    Eigen::VectorXd vector() const { return values_.col(0); }

private:
    Targets(TargetKind kind, Eigen::MatrixXd values)
        : kind_(kind)
        , values_(std::move(values))
    {}

    TargetKind kind_ = TargetKind::Regression;
    Eigen::MatrixXd values_;
};

struct Dataset
{
    DesignMatrix X;
    Targets targets;
    std::string provenance;

    Dataset() = default;
    Dataset(DesignMatrix X_, Targets targets_, std::string provenance_ = {})
        : X(std::move(X_))
        , targets(std::move(targets_))
        , provenance(std::move(provenance_))
    {
        if (X.rows() != targets.n()) {
            throw std::invalid_argument("design matrix and targets disagree on n");
        }
    }

    Index n() const { return X.rows(); }
    Index p() const { return X.cols(); }
};

struct NormalizedDataset
{
    Dataset data;
    Eigen::VectorXd scales; // original column norms, 0 for zero columns
};

/// Scales every nonzero column to unit Euclidean norm; zero columns are kept as-is.
inline NormalizedDataset normalize_columns(const Dataset& ds)
{
    const Eigen::VectorXd& norms = ds.X.column_norms();
    Eigen::VectorXd factors(norms.size());
    for (Index j = 0; j < norms.size(); ++j) factors[j] = norms[j] > 0 ? 1.0 / norms[j] : 1.0;
    return {Dataset(ds.X.scale_columns(factors), ds.targets, ds.provenance), norms};
}

struct PrunedDataset
{
    Dataset data;
    std::vector<Index> kept; // new column index -> original column index
};

/// Drops sparse columns with strictly fewer than min_nnz stored entries.
inline PrunedDataset prune_rare_features(const Dataset& ds, Index min_nnz = 4)
{
    std::vector<Index> kept;
    kept.reserve(ds.p());
    for (Index j = 0; j < ds.p(); ++j) {
        if (!ds.X.is_sparse() || ds.X.column_nnz(j) >= min_nnz) kept.push_back(j);
    }
    if (static_cast<Index>(kept.size()) == ds.p()) return {ds, std::move(kept)};
    return {Dataset(ds.X.select_columns(kept), ds.targets, ds.provenance), std::move(kept)};
}

struct SynthParams
{
    Index n = 100;
    Index p = 1000;
    double density = 1.0;
    Index support_size = 10;
    double snr = 10.0; // ||X beta|| / ||noise||; infinity disables noise
    std::uint64_t seed = 0;
    Index tasks = 1;   // q > 1 produces multitask targets with row-sparse coefficients
};

struct SyntheticProblem
{
    Dataset data;
    Eigen::MatrixXd coef; // ground-truth p x q coefficients
};

/**
 * Gaussian design with a planted sparse coefficient matrix.
 *
 * Entries are i.i.d. N(0, 1), each kept with probability `density`.
 * Storage is dense when density == 1 and sparse otherwise. Targets are
 * X * coef plus Gaussian noise scaled so that ||X coef||_F / ||noise||_F = snr.
 */
inline SyntheticProblem synth_gaussian(const SynthParams& prm)
{
    if (prm.n < 1 || prm.p < 1) throw std::invalid_argument("n and p must be positive");
    if (!(prm.density > 0.0 && prm.density <= 1.0)) {
        throw std::invalid_argument("density must lie in (0, 1]");
    }
    if (prm.support_size < 0 || prm.support_size > prm.p) {
        throw std::invalid_argument("support_size must lie in [0, p]");
    }
    if (!(prm.snr > 0.0)) throw std::invalid_argument("snr must be positive");
    if (prm.tasks < 1) throw std::invalid_argument("tasks must be >= 1");

    std::mt19937_64 rng(prm.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    DesignMatrix X;
    if (prm.density == 1.0) {
        Eigen::MatrixXd dense(prm.n, prm.p);
        for (Index j = 0; j < prm.p; ++j)
            for (Index i = 0; i < prm.n; ++i) dense(i, j) = gauss(rng);
        X = DesignMatrix(std::move(dense));
    } else {
        std::vector<Eigen::Triplet<double>> trip;
        for (Index j = 0; j < prm.p; ++j) {
            for (Index i = 0; i < prm.n; ++i) {
                const double keep = unif(rng);
                const double v = gauss(rng);
                if (keep < prm.density) trip.emplace_back(i, j, v);
            }
        }
        DesignMatrix::sparse_t sp(prm.n, prm.p);
        sp.setFromTriplets(trip.begin(), trip.end());
        X = DesignMatrix(std::move(sp));
    }

    std::vector<Index> perm(prm.p);
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::MatrixXd coef = Eigen::MatrixXd::Zero(prm.p, prm.tasks);
    for (Index k = 0; k < prm.support_size; ++k) {
        for (Index c = 0; c < prm.tasks; ++c) coef(perm[k], c) = gauss(rng);
    }

    Eigen::MatrixXd Y = X.multiply(coef);
    if (std::isfinite(prm.snr)) {
        Eigen::MatrixXd noise(prm.n, prm.tasks);
        for (Index c = 0; c < prm.tasks; ++c)
            for (Index i = 0; i < prm.n; ++i) noise(i, c) = gauss(rng);
        const double signal = Y.norm();
        const double nn = noise.norm();
        if (signal > 0 && nn > 0) Y += (signal / (prm.snr * nn)) * noise;
    }

    std::string prov = "synth:n=" + std::to_string(prm.n) + ",p=" + std::to_string(prm.p)
                       + ",density=" + std::to_string(prm.density)
                       + ",support=" + std::to_string(prm.support_size)
                       + ",snr=" + std::to_string(prm.snr) + ",q=" + std::to_string(prm.tasks)
                       + ",seed=" + std::to_string(prm.seed);
    Targets targets = prm.tasks == 1 ? Targets::regression(Y.col(0)) : Targets::multitask(std::move(Y));
    return {Dataset(std::move(X), std::move(targets), std::move(prov)), std::move(coef)};
}

/// Turns single-task regression targets into +-1 labels (y > 0 maps to +1).
inline Dataset as_classification(const Dataset& ds)
{
    if (ds.targets.q() != 1) throw std::invalid_argument("classification needs a single task");
    Eigen::VectorXd y = ds.targets.vector();
    for (Index i = 0; i < y.size(); ++i) y[i] = y[i] > 0 ? 1.0 : -1.0;
    return Dataset(ds.X, Targets::classification(std::move(y)), ds.provenance + ",labels=sign");
}

/**
 * Largest eigenvalue of X^T X by power iteration.
 *
 * Starts from the all-ones vector and stops when the Rayleigh quotient
 * changes by less than `tol` relatively, or after `max_iter` iterations.
 */
inline double spectral_norm_sq(const DesignMatrix& X, double tol = 1e-6, int max_iter = 1000)
{
    const Index p = X.cols();
    if (p == 0 || X.column_norms().maxCoeff() == 0.0) return 0.0;
    Eigen::MatrixXd v = Eigen::MatrixXd::Ones(p, 1) / std::sqrt(static_cast<double>(p));
    double est = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Eigen::MatrixXd Xv = X.multiply(v);
        const double rq = Xv.squaredNorm();
        Eigen::MatrixXd w = X.transpose_multiply(Xv);
        const double wn = w.norm();
        if (wn == 0.0) {
            // start vector in the null space; restart on the heaviest column
            Index jmax;
            X.column_norms().maxCoeff(&jmax);
            v.setZero();
            v(jmax, 0) = 1.0;
            continue;
        }
        v = w / wn;
        if (it > 0 && std::abs(rq - est) <= tol * std::abs(rq)) {
            est = rq;
            break;
        }
        est = rq;
    }
    return std::max(est, X.multiply(v).squaredNorm());
}

} // namespace celer
