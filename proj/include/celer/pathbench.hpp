#pragma once
#include <chrono>
#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>
#include <Eigen/Core>
#include <nlohmann/json.hpp>
#include <celer/datafit.hpp>
#include <celer/dataset.hpp>
#include <celer/libsvm.hpp>
#include <celer/prox_newton.hpp>
#include <celer/solvers.hpp>
#include <celer/working_set.hpp>

namespace celer {

enum class Variant { CD, PG, CDScreen, CDScreenExtr, Celer, CelerNoExtr, ProxNewton, CelerPN };

inline std::string_view to_string(Variant v)
{
    switch (v) {
    case Variant::CD: return "cd";
    case Variant::PG: return "pg";
    case Variant::CDScreen: return "cd+screen";
    case Variant::CDScreenExtr: return "cd+screen+extr";
    case Variant::Celer: return "celer";
    case Variant::CelerNoExtr: return "celer_no_extr";
    case Variant::ProxNewton: return "prox_newton";
    case Variant::CelerPN: return "celer_pn";
    }
    return "?";
}

inline Variant variant_from_string(std::string_view s)
{
    for (Variant v : {Variant::CD, Variant::PG, Variant::CDScreen, Variant::CDScreenExtr, Variant::Celer,
                      Variant::CelerNoExtr, Variant::ProxNewton, Variant::CelerPN}) {
        if (to_string(v) == s) return v;
    }
    throw std::invalid_argument("unknown variant '" + std::string(s) + "'");
}

/// Variants that only make sense for the logistic model.
inline bool logistic_only(Variant v) { return v == Variant::ProxNewton || v == Variant::CelerPN; }

struct PathConfig
{
    std::optional<std::string> data_path;    // LIBSVM file; otherwise `synth` is used
    std::optional<std::string> targets_path; // dense Y for the multitask model
    SynthParams synth;
    ModelKind model = ModelKind::Quadratic;
    int grid = 10;
    double divisor = 100.0;
    std::vector<double> eps{1e-2, 1e-4, 1e-6};
    std::vector<Variant> variants{Variant::CD, Variant::Celer};
    std::uint64_t seed = 0;
    bool warm_start = true;
    bool trace = false;
    Index min_nnz = 4;
    int freq = 10;
    int K = 5;
    int max_epochs = 100000;
};

struct PathRecord
{
    std::string variant;
    std::string model;
    int lambda_idx = 0;
    double lambda = 0;
    double epsilon = 0;
    double seconds = 0;
    double epochs = 0; // coordinate updates / p, i.e. full-pass equivalents
    double gap = 0;
    Index support = 0;
    Index screened = 0;
    // not part of the report schema
    double objective = 0;
    bool converged = false;
};

struct TraceRow
{
    std::string variant;
    double epsilon = 0;
    int lambda_idx = 0;
    GapRecord rec;
};

struct PathResult
{
    std::vector<PathRecord> records;
    std::vector<TraceRow> traces;
    double lambda_max = 0;
    double F0 = 0;
};

inline void validate(const PathConfig& cfg)
{
    if (cfg.grid < 1) throw std::invalid_argument("grid must be >= 1");
    if (!(cfg.divisor > 1.0)) throw std::invalid_argument("divisor must be > 1");
    if (cfg.eps.empty()) throw std::invalid_argument("need at least one epsilon");
    for (double e : cfg.eps) {
        if (!(e > 0.0)) throw std::invalid_argument("epsilon values must be positive");
    }
    for (Variant v : cfg.variants) {
        if (logistic_only(v) && cfg.model != ModelKind::Logistic) {
            throw std::invalid_argument("variant " + std::string(to_string(v)) + " needs --model logreg");
        }
    }
}

/// Loads (or generates) the data, prunes rare sparse features and normalizes columns.
inline Dataset load_dataset(const PathConfig& cfg)
{
    Dataset raw;
    if (cfg.data_path) {
        std::ifstream in(*cfg.data_path);
        if (!in) throw std::runtime_error("cannot open " + *cfg.data_path);
        const LabelMode mode = cfg.model == ModelKind::Logistic ? LabelMode::Classification : LabelMode::Regression;
        raw = parse_libsvm(in, mode);
        if (cfg.model == ModelKind::MultitaskQuadratic) {
            if (!cfg.targets_path) throw std::invalid_argument("the multitask model needs a targets file");
            std::ifstream tin(*cfg.targets_path);
            if (!tin) throw std::runtime_error("cannot open " + *cfg.targets_path);
            raw = Dataset(raw.X, Targets::multitask(read_dense_matrix(tin)), raw.provenance);
        }
    } else {
        SynthParams sp = cfg.synth;
        sp.seed = cfg.seed;
        if (cfg.model != ModelKind::MultitaskQuadratic) sp.tasks = 1;
        raw = synth_gaussian(sp).data;
        if (cfg.model == ModelKind::Logistic) raw = as_classification(raw);
        if (cfg.model == ModelKind::MultitaskQuadratic && sp.tasks == 1) {
            raw = Dataset(raw.X, Targets::multitask(raw.targets.values()), raw.provenance);
        }
    }
    if (raw.X.is_sparse()) raw = prune_rare_features(raw, cfg.min_nnz).data;
    return normalize_columns(raw).data;
}

/// lambda_k = lambda_max * divisor^(-k / (grid - 1)), k = 0 .. grid-1.
inline std::vector<double> lambda_grid(double lmax, int grid, double divisor)
{
    if (grid < 1) throw std::invalid_argument("grid must be >= 1");
    std::vector<double> out(static_cast<std::size_t>(grid));
    for (int k = 0; k < grid; ++k) {
        out[static_cast<std::size_t>(k)] = grid == 1 ? lmax : lmax * std::pow(divisor, -double(k) / (grid - 1));
    }
    return out;
}

/// One solve of a variant at absolute gap tolerance `tol`.
inline SolveReport run_variant(Variant v,
                               ModelKind kind,
                               const Dataset& ds,
                               double lambda,
                               const Eigen::MatrixXd& beta0,
                               double tol,
                               const PathConfig& cfg)
{
    switch (v) {
    case Variant::CD:
    case Variant::PG:
    case Variant::CDScreen:
    case Variant::CDScreenExtr: {
        SolverParams sp;
        sp.tol = tol;
        sp.freq = cfg.freq;
        sp.K = cfg.K;
        sp.max_epochs = cfg.max_epochs;
        sp.screening = v == Variant::CDScreen || v == Variant::CDScreenExtr;
        sp.extrapolation = v == Variant::CDScreenExtr;
        sp.algorithm = v == Variant::PG ? Algorithm::PG : Algorithm::CD;
        return solve(kind, ds, lambda, beta0, sp);
    }
    case Variant::Celer:
    case Variant::CelerNoExtr:
    case Variant::CelerPN: {
        CelerParams cp;
        cp.tol = tol;
        cp.K = cfg.K;
        cp.freq = cfg.freq;
        cp.max_epochs = cfg.max_epochs;
        cp.extrapolation = v != Variant::CelerNoExtr;
        cp.inner = v == Variant::CelerPN ? InnerSolver::ProxNewton : InnerSolver::CD;
        cp.pn.K = cfg.K;
        return celer_solve(kind, ds, lambda, beta0, cp);
    }
    case Variant::ProxNewton: {
        PNParams pn;
        pn.tol = tol;
        pn.K = cfg.K;
        return pn_solve(ds, lambda, beta0, pn);
    }
    }
    throw std::logic_error("unhandled variant");
}

inline Index support_size(const Eigen::MatrixXd& beta)
{
    Index s = 0;
    for (Index j = 0; j < beta.rows(); ++j) s += beta.row(j).squaredNorm() > 0;
    return s;
}

/**
 * Runs every (variant, epsilon) pair along the decreasing lambda grid with
 * warm starts; the stopping tolerance is epsilon * F(0). Rows come out
 * ordered by variant, then epsilon, then lambda index. The lambda_max
 * computation time is charged to the first grid point of each run.
 */
inline PathResult run_path(const PathConfig& cfg, const Dataset& ds)
{
    validate(cfg);
    using clock = std::chrono::steady_clock;
    const ModelKind kind = cfg.model;
    if (kind == ModelKind::Logistic && ds.targets.kind() != TargetKind::Classification) {
        throw std::invalid_argument("the logistic model needs +-1 labels");
    }

    PathResult res;
    const auto t0 = clock::now();
    res.lambda_max = lambda_max(kind, ds.X, ds.targets);
    const double lmax_seconds = std::chrono::duration<double>(clock::now() - t0).count();
    res.F0 = data_term(kind, Eigen::MatrixXd::Zero(ds.n(), ds.targets.q()), ds.targets);
    const std::vector<double> lambdas = lambda_grid(res.lambda_max, cfg.grid, cfg.divisor);
    const double p = std::max<double>(1.0, double(ds.p()));

    for (Variant v : cfg.variants) {
        for (double eps : cfg.eps) {
            Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(ds.p(), ds.targets.q());
            for (int k = 0; k < cfg.grid; ++k) {
                const double lambda = lambdas[static_cast<std::size_t>(k)];
                if (!cfg.warm_start) beta.setZero();
                const auto start = clock::now();
                SolveReport rep = run_variant(v, kind, ds, lambda, beta, eps * res.F0, cfg);
                double secs = std::chrono::duration<double>(clock::now() - start).count();
                if (k == 0) secs += lmax_seconds;

                PathRecord r;
                r.variant = std::string(to_string(v));
                r.model = std::string(to_string(kind));
                r.lambda_idx = k;
                r.lambda = lambda;
                r.epsilon = eps;
                r.seconds = secs;
                r.epochs = double(rep.coordinate_updates) / p;
                r.gap = rep.gap;
                r.support = support_size(rep.beta);
                r.screened = rep.screened;
                r.objective = primal_value(kind, rep.beta, ds.X.multiply(rep.beta), ds.targets, lambda);
                r.converged = rep.converged;
                res.records.push_back(std::move(r));
                if (cfg.trace) {
                    for (const GapRecord& g : rep.gap_history) res.traces.push_back({std::string(to_string(v)), eps, k, g});
                }
                beta = std::move(rep.beta);
            }
        }
    }
    return res;
}

inline PathResult run_path(const PathConfig& cfg)
{
    validate(cfg);
    return run_path(cfg, load_dataset(cfg));
}

/// Gap history of a single solve at one lambda.
inline std::vector<GapRecord> trace_gaps(Variant v,
                                         ModelKind kind,
                                         const Dataset& ds,
                                         double lambda,
                                         double tol,
                                         const PathConfig& cfg = {})
{
    const Eigen::MatrixXd beta0 = Eigen::MatrixXd::Zero(ds.p(), ds.targets.q());
    return run_variant(v, kind, ds, lambda, beta0, tol, cfg).gap_history;
}

enum class ReportFormat { CSV, JSON };

inline ReportFormat format_from_string(std::string_view s)
{
    if (s == "csv") return ReportFormat::CSV;
    if (s == "json") return ReportFormat::JSON;
    throw std::invalid_argument("unknown format '" + std::string(s) + "'");
}

inline constexpr std::string_view report_header = "variant,model,lambda_idx,lambda,epsilon,seconds,epochs,gap,support,screened";

namespace detail {

inline void check_sink(std::ostream& out)
{
    if (!out) throw std::ios_base::failure("report sink is not writable");
}

// numbers that JSON cannot hold (inf gaps of unconverged runs) become null
inline nlohmann::json json_number(double v)
{
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

} // namespace detail

inline nlohmann::json to_json(const PathRecord& r)
{
    return {{"variant", r.variant},
            {"model", r.model},
            {"lambda_idx", r.lambda_idx},
            {"lambda", detail::json_number(r.lambda)},
            {"epsilon", detail::json_number(r.epsilon)},
            {"seconds", detail::json_number(r.seconds)},
            {"epochs", detail::json_number(r.epochs)},
            {"gap", detail::json_number(r.gap)},
            {"support", r.support},
            {"screened", r.screened}};
}

inline PathRecord record_from_json(const nlohmann::json& j)
{
    auto num = [&](const char* key) {
        return j.at(key).is_null() ? std::numeric_limits<double>::infinity() : j.at(key).get<double>();
    };
    PathRecord r;
    r.variant = j.at("variant").get<std::string>();
    r.model = j.at("model").get<std::string>();
    r.lambda_idx = j.at("lambda_idx").get<int>();
    r.lambda = num("lambda");
    r.epsilon = num("epsilon");
    r.seconds = num("seconds");
    r.epochs = num("epochs");
    r.gap = num("gap");
    r.support = j.at("support").get<Index>();
    r.screened = j.at("screened").get<Index>();
    return r;
}

/// CSV with the fixed header, or a JSON array of objects with the same keys.
inline void emit_report(const PathResult& res, ReportFormat format, std::ostream& out)
{
    detail::check_sink(out);
    if (format == ReportFormat::CSV) {
        out << report_header << '\n';
        for (const PathRecord& r : res.records) {
            out << r.variant << ',' << r.model << ',' << r.lambda_idx << ',' << detail::format_double(r.lambda) << ','
                << detail::format_double(r.epsilon) << ',' << detail::format_double(r.seconds) << ','
                << detail::format_double(r.epochs) << ',' << detail::format_double(r.gap) << ',' << r.support << ','
                << r.screened << '\n';
        }
    } else {
        nlohmann::json arr = nlohmann::json::array();
        for (const PathRecord& r : res.records) arr.push_back(to_json(r));
        out << arr.dump(2) << '\n';
    }
    out.flush();
    detail::check_sink(out);
}

inline constexpr std::string_view trace_header =
    "variant,epsilon,lambda_idx,epoch,primal,dual_rescaled,dual_accel,dual_used,sign_change";

inline void emit_trace(const PathResult& res, std::ostream& out)
{
    detail::check_sink(out);
    out << trace_header << '\n';
    for (const TraceRow& t : res.traces) {
        out << t.variant << ',' << detail::format_double(t.epsilon) << ',' << t.lambda_idx << ',' << t.rec.epoch << ','
            << detail::format_double(t.rec.primal) << ',' << detail::format_double(t.rec.dual_rescaled) << ','
            << detail::format_double(t.rec.dual_accel) << ',' << detail::format_double(t.rec.dual_used) << ','
            << (t.rec.sign_change ? 1 : 0) << '\n';
    }
    out.flush();
    detail::check_sink(out);
}

} // namespace celer
