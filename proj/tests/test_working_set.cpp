#include <gtest/gtest.h>
#include <algorithm>
#include "test_util.hpp"

using namespace celer;
using testutil::random_instance;
using testutil::rel_diff;
using testutil::zeros_like_beta;

namespace {

double objective(ModelKind kind, const Dataset& ds, const Eigen::MatrixXd& beta, double lambda)
{
    return primal_value(kind, beta, ds.X.multiply(beta), ds.targets, lambda);
}

Eigen::MatrixXd beta_with_support(Index p, Index support)
{
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(p, 1);
    for (Index j = 0; j < support; ++j) b(3 * j % p, 0) = 1.0 + j;
    return b;
}

} // namespace

TEST(FeatureScores, Examples)
{
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(3, 3);
    Eigen::MatrixXd D = I;
    D.col(2).setZero();
    const DesignMatrix X(D);
    DualCertificate zero{Eigen::MatrixXd::Zero(3, 1), 0.0, Provenance::Rescaled};
    Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(3, 1);
    Eigen::VectorXd d = feature_scores(X, zero, beta);
    EXPECT_EQ(d[0], 1.0);
    EXPECT_EQ(d[1], 1.0);
    EXPECT_EQ(d[2], std::numeric_limits<double>::infinity());

    DualCertificate bound{Eigen::MatrixXd(Eigen::Vector3d(1, 0.25, 0)), 0.0, Provenance::Rescaled};
    beta(1, 0) = 0.3;
    d = feature_scores(X, bound, beta);
    EXPECT_EQ(d[0], 0.0);
    EXPECT_EQ(d[1], -1.0);

    // multitask uses the row norm of x_j^T Theta
    Eigen::MatrixXd Theta(3, 2);
    Theta << 0.6, 0.0, 0.0, 0.8, 0.0, 0.0;
    const Eigen::VectorXd dm = feature_scores(DesignMatrix(I), {Theta, 0.0, Provenance::Rescaled}, Eigen::MatrixXd::Zero(3, 2));
    EXPECT_NEAR(dm[0], 0.4, 1e-15);
    EXPECT_NEAR(dm[1], 0.2, 1e-15);
    EXPECT_EQ(dm[2], 1.0);
}

TEST(CreateWorkingSet, GrowthRule)
{
    CelerParams prm;
    const Eigen::VectorXd d = Eigen::VectorXd::LinSpaced(100, 0.0, 1.0);
    EXPECT_EQ(create_working_set(d, beta_with_support(100, 7), 1.0, 2, prm).size(), 14);
    EXPECT_EQ(create_working_set(d, beta_with_support(100, 60), 1.0, 2, prm).size(), 100);
    EXPECT_EQ(create_working_set(d, Eigen::MatrixXd::Zero(100, 1), 1.0, 1, prm).size(), 100);
    prm.p1 = 10;
    EXPECT_EQ(create_working_set(d, Eigen::MatrixXd::Zero(100, 1), 1.0, 1, prm).size(), 10);
    // warm start sizes the first set to the support
    EXPECT_EQ(create_working_set(d, beta_with_support(100, 4), 1.0, 1, prm).size(), 4);
    // an empty support later on falls back to p1
    EXPECT_EQ(create_working_set(d, Eigen::MatrixXd::Zero(100, 1), 1.0, 3, prm).size(), 10);
    const auto ws = create_working_set(d, Eigen::MatrixXd::Zero(100, 1), 2.0, 1, prm);
    EXPECT_DOUBLE_EQ(ws.epsilon_inner, 0.3 * 2.0);
    EXPECT_THROW(create_working_set(d, Eigen::MatrixXd::Zero(100, 1), 0.0, 1, prm), std::invalid_argument);
}

TEST(CreateWorkingSet, TiesGoToLowestIndex)
{
    CelerParams prm;
    prm.p1 = 3;
    Eigen::VectorXd d(6);
    d << 0.5, 0.2, 0.5, 0.5, 0.1, 0.5;
    const auto ws = create_working_set(d, Eigen::MatrixXd::Zero(6, 1), 1.0, 1, prm);
    EXPECT_EQ(ws.indices, (std::vector<Index>{0, 1, 4}));
}

TEST(CreateWorkingSet, ContainsSupportAndSmallestScores)
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 200; ++trial) {
        const Index p = 5 + static_cast<Index>(rng() % 60);
        Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(p, 1);
        Eigen::VectorXd d(p);
        for (Index j = 0; j < p; ++j) {
            d[j] = std::floor(u(rng) * 10) / 10; // plenty of ties
            if (u(rng) < 0.1) {
                beta(j, 0) = 1;
                d[j] = -1;
            }
        }
        CelerParams prm;
        prm.p1 = 1 + static_cast<Index>(rng() % 20);
        const int t = 2 + trial % 3;
        const auto ws = create_working_set(d, beta, 0.5, t, prm);
        EXPECT_TRUE(std::is_sorted(ws.indices.begin(), ws.indices.end()));
        EXPECT_TRUE(std::adjacent_find(ws.indices.begin(), ws.indices.end()) == ws.indices.end());
        EXPECT_LE(ws.size(), p);
        for (Index j = 0; j < p; ++j) {
            const bool in = std::binary_search(ws.indices.begin(), ws.indices.end(), j);
            if (beta(j, 0) != 0) {
                EXPECT_TRUE(in);
            }
        }
        // brute force: the selection is the prefix of the (d, index) order
        std::vector<Index> order(static_cast<std::size_t>(p));
        std::iota(order.begin(), order.end(), Index{0});
        std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return d[a] < d[b]; });
        order.resize(static_cast<std::size_t>(ws.size()));
        std::sort(order.begin(), order.end());
        EXPECT_EQ(ws.indices, order);
    }
}

TEST(CelerSolve, NullSolution)
{
    for (ModelKind kind : {ModelKind::Quadratic, ModelKind::Logistic, ModelKind::MultitaskQuadratic}) {
        const Dataset ds = random_instance(kind, 20, 50, 2);
        CelerParams prm;
        prm.tol = 1e-12;
        const auto rep = celer_solve(kind, ds, lambda_max(kind, ds.X, ds.targets), zeros_like_beta(ds), prm);
        EXPECT_TRUE(rep.converged);
        EXPECT_EQ(rep.gap_history.size(), 1u);
        EXPECT_TRUE(rep.ws_sizes.empty());
        EXPECT_EQ(rep.beta.squaredNorm(), 0.0);
    }
}

TEST(CelerSolve, MatchesCoordinateDescent)
{
    const Dataset ds = random_instance(ModelKind::Quadratic, 50, 500, 3);
    const double lambda = lambda_max(ModelKind::Quadratic, ds.X, ds.targets) / 10;
    const double F0 = 0.5 * ds.targets.values().squaredNorm();
    CelerParams prm;
    prm.tol = 1e-8 * F0;
    const auto cel = celer_solve(ModelKind::Quadratic, ds, lambda, zeros_like_beta(ds), prm);
    SolverParams sp;
    sp.tol = 1e-8 * F0;
    const auto cd = solve(ModelKind::Quadratic, ds, lambda, zeros_like_beta(ds), sp);
    ASSERT_TRUE(cel.converged);
    ASSERT_TRUE(cd.converged);
    EXPECT_LT(rel_diff(objective(ModelKind::Quadratic, ds, cel.beta, lambda), objective(ModelKind::Quadratic, ds, cd.beta, lambda)),
              1e-9);
}

TEST(CelerSolve, AllKindsAndInnerSolversAgreeWithCd)
{
    struct Case
    {
        ModelKind kind;
        InnerSolver inner;
    };
    for (Case c : {Case{ModelKind::Quadratic, InnerSolver::CD}, Case{ModelKind::Logistic, InnerSolver::CD},
                   Case{ModelKind::Logistic, InnerSolver::ProxNewton}, Case{ModelKind::MultitaskQuadratic, InnerSolver::CD}}) {
        for (std::uint64_t s = 0; s < 3; ++s) {
            const Dataset ds = random_instance(c.kind, 30, 150, 20 + s);
            const double lambda = lambda_max(c.kind, ds.X, ds.targets) / 8;
            CelerParams prm;
            prm.tol = 1e-11;
            prm.inner = c.inner;
            prm.p1 = 20;
            const auto cel = celer_solve(c.kind, ds, lambda, zeros_like_beta(ds), prm);
            SolverParams sp;
            sp.tol = 1e-11;
            const auto cd = solve(c.kind, ds, lambda, zeros_like_beta(ds), sp);
            ASSERT_TRUE(cel.converged) << "kind " << to_string(c.kind) << " inner " << int(c.inner) << " seed " << s
                                       << " gap " << cel.gap << " outer " << cel.ws_sizes.size();
            EXPECT_LT(rel_diff(objective(c.kind, ds, cel.beta, lambda), objective(c.kind, ds, cd.beta, lambda)), 1e-9);

            // the inner certificate has been made feasible for the full design
            EXPECT_LE(dual_norm(ds.X, cel.theta.theta), 1 + 1e-12);
            for (std::size_t i = 1; i < cel.gap_history.size(); ++i) {
                const auto& a = cel.gap_history[i - 1];
                const auto& b = cel.gap_history[i];
                EXPECT_LE(b.primal - b.dual_used, a.primal - a.dual_used + 1e-12);
            }
            for (Index w : cel.ws_sizes) EXPECT_LE(w, ds.p());
        }
    }
}

TEST(CelerSolve, WarmStartSizesFirstWorkingSet)
{
    const Dataset ds = random_instance(ModelKind::Quadratic, 40, 200, 4);
    const double lmax = lambda_max(ModelKind::Quadratic, ds.X, ds.targets);
    CelerParams prm;
    prm.tol = 1e-10;
    const auto first = celer_solve(ModelKind::Quadratic, ds, lmax / 5, zeros_like_beta(ds), prm);
    Index support = 0;
    for (Index j = 0; j < ds.p(); ++j) support += first.beta(j, 0) != 0;
    ASSERT_GT(support, 0);
    const auto second = celer_solve(ModelKind::Quadratic, ds, lmax / 6, first.beta, prm);
    ASSERT_FALSE(second.ws_sizes.empty());
    EXPECT_EQ(second.ws_sizes.front(), support);
    EXPECT_TRUE(second.converged);
}

TEST(CelerSolve, ExhaustedOuterIterations)
{
    const Dataset ds = random_instance(ModelKind::Quadratic, 30, 300, 5);
    CelerParams prm;
    prm.tol = 1e-14;
    prm.max_ws_iters = 1;
    prm.p1 = 5;
    const auto rep = celer_solve(ModelKind::Quadratic, ds, lambda_max(ModelKind::Quadratic, ds.X, ds.targets) / 20,
                                 zeros_like_beta(ds), prm);
    EXPECT_FALSE(rep.converged);
    EXPECT_TRUE(std::isfinite(rep.gap));
    EXPECT_LE(dual_norm(ds.X, rep.theta.theta), 1 + 1e-12);
}

TEST(CelerSolve, RejectsBadArguments)
{
    const Dataset ds = random_instance(ModelKind::Quadratic, 10, 20, 6);
    CelerParams prm;
    prm.inner = InnerSolver::ProxNewton;
    EXPECT_THROW(celer_solve(ModelKind::Quadratic, ds, 1.0, zeros_like_beta(ds), prm), UnsupportedOperation);
    prm.inner = InnerSolver::CD;
    prm.rho = 1.0;
    EXPECT_THROW(celer_solve(ModelKind::Quadratic, ds, 1.0, zeros_like_beta(ds), prm), std::invalid_argument);
    prm.rho = 0.3;
    EXPECT_THROW(celer_solve(ModelKind::Quadratic, ds, -1.0, zeros_like_beta(ds), prm), std::invalid_argument);
}
