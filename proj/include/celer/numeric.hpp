#pragma once
#include <cmath>
#include <Eigen/Core>

namespace celer {

using Index = Eigen::Index;

inline double soft_threshold(double x, double tau)
{
    if (x > tau) return x - tau;
    if (x < -tau) return x + tau;
    return 0.0;
}

/// Prox of tau * ||.||_2 applied to a row: (1 - tau / ||v||)_+ v.
template <class Row>
inline Eigen::RowVectorXd block_soft_threshold(const Row& v, double tau)
{
    const double nrm = v.norm();
    if (nrm <= tau) return Eigen::RowVectorXd::Zero(v.size());
    return (1.0 - tau / nrm) * v;
}

inline double sign(double x) { return (x > 0) - (x < 0); }

// Overflow-safe logistic sigmoid 1 / (1 + exp(-z)).
inline double sigmoid(double z)
{
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
inline double log1p_exp(double z)
{
    if (z > 0) return z + std::log1p(std::exp(-z));
    return std::log1p(std::exp(z));
}

// x log x with the 0 log 0 = 0 convention.
inline double xlogx(double x) { return x > 0 ? x * std::log(x) : 0.0; }

} // namespace celer
