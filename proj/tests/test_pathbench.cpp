#include <gtest/gtest.h>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <nlohmann/json.hpp>
#include "test_util.hpp"

using namespace celer;

namespace {

PathConfig small_config(ModelKind model, Index n, Index p)
{
    PathConfig cfg;
    cfg.model = model;
    cfg.synth.n = n;
    cfg.synth.p = p;
    cfg.synth.support_size = 5;
    cfg.synth.snr = 3.0;
    cfg.synth.tasks = model == ModelKind::MultitaskQuadratic ? 3 : 1;
    cfg.seed = 11;
    cfg.grid = 5;
    cfg.divisor = 20;
    cfg.eps = {1e-6};
    return cfg;
}

std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, sep)) out.push_back(tok);
    return out;
}

} // namespace

TEST(LambdaGrid, GeometricWithInclusiveEndpoints)
{
    const auto g = lambda_grid(3.0, 10, 100.0);
    ASSERT_EQ(g.size(), 10u);
    EXPECT_EQ(g.front(), 3.0);
    EXPECT_NEAR(g.back(), 0.03, 1e-15);
    for (std::size_t k = 1; k < g.size(); ++k) EXPECT_NEAR(g[k] / g[k - 1], std::pow(100.0, -1.0 / 9), 1e-14);
    EXPECT_EQ(lambda_grid(2.0, 1, 10.0), std::vector<double>{2.0});
    EXPECT_THROW(lambda_grid(1.0, 0, 10.0), std::invalid_argument);
}

TEST(Validate, RejectsBadConfigs)
{
    PathConfig cfg;
    EXPECT_NO_THROW(validate(cfg));
    cfg.grid = 0;
    EXPECT_THROW(validate(cfg), std::invalid_argument);
    cfg = {};
    cfg.divisor = 1.0;
    EXPECT_THROW(validate(cfg), std::invalid_argument);
    cfg = {};
    cfg.eps = {};
    EXPECT_THROW(validate(cfg), std::invalid_argument);
    cfg.eps = {1e-3, -1.0};
    EXPECT_THROW(validate(cfg), std::invalid_argument);
    cfg = {};
    cfg.variants = {Variant::ProxNewton};
    EXPECT_THROW(validate(cfg), std::invalid_argument);
    cfg.model = ModelKind::Logistic;
    EXPECT_NO_THROW(validate(cfg));
    EXPECT_THROW(variant_from_string("lars"), std::invalid_argument);
    EXPECT_THROW(format_from_string("xml"), std::invalid_argument);
    for (Variant v : {Variant::CD, Variant::PG, Variant::CDScreen, Variant::CDScreenExtr, Variant::Celer, Variant::CelerNoExtr,
                      Variant::ProxNewton, Variant::CelerPN}) {
        EXPECT_EQ(variant_from_string(to_string(v)), v);
    }
}

TEST(LoadDataset, MissingFileFailsBeforeSolving)
{
    PathConfig cfg;
    cfg.data_path = "/nonexistent/file.svm";
    EXPECT_THROW(run_path(cfg), std::runtime_error);
}

TEST(LoadDataset, LibsvmFileIsPrunedAndNormalized)
{
    const std::string path = ::testing::TempDir() + "pathbench_small.svm";
    {
        std::ofstream f(path);
        // feature 3 appears twice only and gets pruned with min_nnz = 3
        f << "1 1:1 2:2 3:1\n-1 1:2 2:1\n1 1:1 2:1 3:2\n-1 1:3 2:2\n1 1:1 2:5\n";
    }
    PathConfig cfg;
    cfg.data_path = path;
    cfg.model = ModelKind::Logistic;
    cfg.min_nnz = 3;
    const Dataset ds = load_dataset(cfg);
    EXPECT_EQ(ds.p(), 2);
    EXPECT_EQ(ds.n(), 5);
    for (Index j = 0; j < ds.p(); ++j) EXPECT_NEAR(ds.X.column_norms()[j], 1.0, 1e-14);
    std::remove(path.c_str());
}

TEST(RunPath, FirstPointIsTheNullSolution)
{
    for (ModelKind m : {ModelKind::Quadratic, ModelKind::Logistic, ModelKind::MultitaskQuadratic}) {
        PathConfig cfg = small_config(m, 30, 80);
        cfg.variants = {Variant::CD, Variant::Celer, Variant::CDScreenExtr};
        const auto res = run_path(cfg);
        for (const auto& r : res.records) {
            if (r.lambda_idx != 0) continue;
            EXPECT_EQ(r.support, 0) << r.variant;
            EXPECT_TRUE(r.converged);
            EXPECT_NEAR(r.objective, res.F0, 1e-12 * res.F0);
            EXPECT_EQ(r.lambda, res.lambda_max);
        }
    }
}

TEST(RunPath, ConvergedRecordsMeetTheirTolerance)
{
    PathConfig cfg = small_config(ModelKind::Quadratic, 40, 120);
    cfg.variants = {Variant::CD, Variant::PG, Variant::CDScreen, Variant::CDScreenExtr, Variant::Celer, Variant::CelerNoExtr};
    cfg.eps = {1e-3, 1e-6};
    const auto res = run_path(cfg);
    ASSERT_EQ(res.records.size(), 6u * 2u * 5u);
    for (const auto& r : res.records) {
        ASSERT_TRUE(r.converged) << r.variant;
        EXPECT_LE(r.gap, r.epsilon * res.F0);
    }
}

TEST(RunPath, ScreeningDoesNotChangeObjectives)
{
    PathConfig cfg = small_config(ModelKind::Quadratic, 50, 200);
    cfg.variants = {Variant::CDScreen, Variant::CDScreenExtr};
    cfg.grid = 10;
    cfg.divisor = 100;
    cfg.eps = {1e-12};
    const auto res = run_path(cfg);
    ASSERT_EQ(res.records.size(), 20u);
    for (int k = 0; k < 10; ++k) {
        const auto& a = res.records[static_cast<std::size_t>(k)];
        const auto& b = res.records[static_cast<std::size_t>(10 + k)];
        EXPECT_LT(testutil::rel_diff(a.objective, b.objective), 1e-10) << "lambda index " << k;
    }
}

TEST(RunPath, SupportMatchesReferenceSolver)
{
    PathConfig cfg = small_config(ModelKind::Quadratic, 50, 200);
    cfg.variants = {Variant::CD, Variant::Celer};
    cfg.grid = 10;
    cfg.divisor = 100;
    const Dataset ds = load_dataset(cfg);
    cfg.eps = {1e-10 / data_term(ModelKind::Quadratic, Eigen::MatrixXd::Zero(50, 1), ds.targets)};
    const auto res = run_path(cfg, ds);
    const Eigen::MatrixXd X = ds.X.to_dense();
    const auto lambdas = lambda_grid(res.lambda_max, 10, 100);
    for (int k = 0; k < 10; ++k) {
        const Eigen::MatrixXd ref = testutil::reference_quadratic(X, ds.targets.values(), lambdas[static_cast<std::size_t>(k)], 200000);
        const Index ref_support = support_size(ref);
        EXPECT_EQ(res.records[static_cast<std::size_t>(k)].support, ref_support) << "cd, lambda index " << k;
        EXPECT_EQ(res.records[static_cast<std::size_t>(10 + k)].support, ref_support) << "celer, lambda index " << k;
    }
}

TEST(RunPath, AllLogisticVariantsAgree)
{
    // the stopping rule bounds every objective to within eps * F(0) of the optimum, so differences are measured on that scale
    PathConfig cfg = small_config(ModelKind::Logistic, 30, 100);
    cfg.variants = {Variant::CD, Variant::PG, Variant::CDScreenExtr, Variant::Celer, Variant::ProxNewton, Variant::CelerPN};
    cfg.eps = {1e-8};
    const auto res = run_path(cfg);
    const std::size_t nv = cfg.variants.size();
    for (std::size_t k = 0; k < 5; ++k) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t v = 0; v < nv; ++v) best = std::min(best, res.records[5 * v + k].objective);
        for (std::size_t v = 0; v < nv; ++v) {
            const auto& r = res.records[5 * v + k];
            EXPECT_LT(std::abs(r.objective - res.records[k].objective) / res.F0, 1e-8) << r.variant << " lambda index " << k;
            // weak duality: no solver can sit further above the optimum than its own certificate says
            EXPECT_LE(r.objective - best, r.gap + 1e-14 * res.F0) << r.variant << " lambda index " << k;
        }
    }
}

TEST(RunPath, Deterministic)
{
    PathConfig cfg = small_config(ModelKind::MultitaskQuadratic, 30, 60);
    cfg.variants = {Variant::CD, Variant::Celer, Variant::CDScreenExtr};
    const auto a = run_path(cfg);
    const auto b = run_path(cfg);
    ASSERT_EQ(a.records.size(), b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        EXPECT_EQ(a.records[i].lambda, b.records[i].lambda);
        EXPECT_EQ(a.records[i].epochs, b.records[i].epochs);
        EXPECT_EQ(a.records[i].gap, b.records[i].gap);
        EXPECT_EQ(a.records[i].objective, b.records[i].objective);
        EXPECT_EQ(a.records[i].support, b.records[i].support);
        EXPECT_EQ(a.records[i].screened, b.records[i].screened);
    }
}

TEST(RunPath, WarmStartNeedsNoMoreEpochs)
{
    PathConfig cfg = small_config(ModelKind::Quadratic, 60, 300);
    cfg.variants = {Variant::CD};
    cfg.grid = 30;
    cfg.divisor = 100;
    auto total = [](const PathResult& r) {
        double s = 0;
        for (const auto& rec : r.records) s += rec.epochs;
        return s;
    };
    const double warm = total(run_path(cfg));
    cfg.warm_start = false;
    const double cold = total(run_path(cfg));
    EXPECT_LE(warm, cold);
}

TEST(RunPath, TracesAreConsistent)
{
    PathConfig cfg = small_config(ModelKind::Quadratic, 40, 150);
    cfg.variants = {Variant::CDScreenExtr};
    cfg.trace = true;
    const auto res = run_path(cfg);
    ASSERT_FALSE(res.traces.empty());
    for (std::size_t i = 0; i < res.traces.size(); ++i) {
        const auto& t = res.traces[i];
        EXPECT_GE(t.rec.primal - t.rec.dual_used, -1e-10);
        if (i > 0 && res.traces[i - 1].lambda_idx == t.lambda_idx) {
            EXPECT_GE(t.rec.dual_used, res.traces[i - 1].rec.dual_used);
        }
    }
    std::ostringstream out;
    emit_trace(res, out);
    const auto lines = split(out.str(), '\n');
    EXPECT_EQ(lines.front(), trace_header);
    EXPECT_EQ(lines.size(), res.traces.size() + 1);
}

TEST(Report, EmptyResultIsHeaderOnly)
{
    std::ostringstream out;
    emit_report(PathResult{}, ReportFormat::CSV, out);
    EXPECT_EQ(out.str(), std::string(report_header) + "\n");
    std::ostringstream js;
    emit_report(PathResult{}, ReportFormat::JSON, js);
    EXPECT_EQ(nlohmann::json::parse(js.str()), nlohmann::json::array());
}

TEST(Report, JsonRoundTrip)
{
    PathRecord r;
    r.variant = "celer";
    r.model = "lasso";
    r.lambda_idx = 3;
    r.lambda = 0.1 / 3;
    r.epsilon = 1e-6;
    r.seconds = 0.123456789012345678;
    r.epochs = 17.0 / 7;
    r.gap = 3.3e-9;
    r.support = 12;
    r.screened = 1900;
    const PathRecord s = record_from_json(nlohmann::json::parse(to_json(r).dump()));
    EXPECT_EQ(s.variant, r.variant);
    EXPECT_EQ(s.model, r.model);
    EXPECT_EQ(s.lambda_idx, r.lambda_idx);
    EXPECT_EQ(s.lambda, r.lambda);
    EXPECT_EQ(s.epsilon, r.epsilon);
    EXPECT_EQ(s.seconds, r.seconds);
    EXPECT_EQ(s.epochs, r.epochs);
    EXPECT_EQ(s.gap, r.gap);
    EXPECT_EQ(s.support, r.support);
    EXPECT_EQ(s.screened, r.screened);

    r.gap = std::numeric_limits<double>::infinity();
    EXPECT_TRUE(to_json(r).at("gap").is_null());
    EXPECT_EQ(record_from_json(to_json(r)).gap, std::numeric_limits<double>::infinity());
}

TEST(Report, CsvMatchesRecords)
{
    PathConfig cfg = small_config(ModelKind::Quadratic, 30, 100);
    cfg.variants = {Variant::CD, Variant::Celer};
    cfg.eps = {1e-4, 1e-6};
    const auto res = run_path(cfg);
    std::ostringstream out;
    emit_report(res, ReportFormat::CSV, out);
    const auto lines = split(out.str(), '\n');
    ASSERT_EQ(lines.size(), 2u * 2u * 5u + 1u);
    EXPECT_EQ(lines[0], report_header);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = split(lines[i], ',');
        ASSERT_EQ(f.size(), 10u);
        const auto& r = res.records[i - 1];
        EXPECT_EQ(f[0], r.variant);
        EXPECT_EQ(f[1], r.model);
        EXPECT_EQ(std::stoi(f[2]), r.lambda_idx);
        // 17 significant digits round-trip exactly
        EXPECT_EQ(std::stod(f[3]), r.lambda);
        EXPECT_EQ(std::stod(f[6]), r.epochs);
        EXPECT_EQ(std::stod(f[7]), r.gap);
        EXPECT_EQ(std::stol(f[8]), r.support);
    }

    std::ostringstream js;
    emit_report(res, ReportFormat::JSON, js);
    const auto arr = nlohmann::json::parse(js.str());
    ASSERT_EQ(arr.size(), res.records.size());
    const std::set<std::string> keys{"variant", "model", "lambda_idx", "lambda", "epsilon", "seconds", "epochs", "gap", "support", "screened"};
    for (const auto& o : arr) {
        std::set<std::string> got;
        for (const auto& [k, v] : o.items()) got.insert(k);
        EXPECT_EQ(got, keys);
    }
}

TEST(Report, BadSinkThrows)
{
    std::ofstream bad("/nonexistent/dir/out.csv");
    EXPECT_THROW(emit_report(PathResult{}, ReportFormat::CSV, bad), std::ios_base::failure);
}
