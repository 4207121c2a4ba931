// pathbench: runs lambda paths for a set of solver variants and writes a CSV/JSON report.
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>
#include <CLI11.hpp>
#include <celer/celer.hpp>

namespace {

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

celer::SynthParams parse_synth(const std::string& spec)
{
    const auto parts = split_list(spec);
    if (parts.size() != 5) throw CLI::ValidationError("--synth", "expected n,p,density,support,snr");
    celer::SynthParams sp;
    sp.n = std::stol(parts[0]);
    sp.p = std::stol(parts[1]);
    sp.density = std::stod(parts[2]);
    sp.support_size = std::stol(parts[3]);
    sp.snr = std::stod(parts[4]);
    return sp;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Regularization-path benchmark for sparse GLM solvers"};

    std::string data, synth, targets, model = "lasso", eps = "1e-2,1e-4,1e-6", variants = "cd,celer";
    std::string out_path, format = "csv", trace_path;
    int grid = 10;
    double div = 100.0;
    std::uint64_t seed = 0;
    long tasks = 1;
    long min_nnz = 4;
    bool no_warm = false;

    auto* data_opt = app.add_option("--data", data, "LIBSVM file")->check(CLI::ExistingFile);
    auto* synth_opt = app.add_option("--synth", synth, "synthetic data: n,p,density,support,snr");
    data_opt->excludes(synth_opt);
    app.add_option("--targets", targets, "dense target matrix for --model mtl (rows = samples)")->check(CLI::ExistingFile);
    app.add_option("--tasks", tasks, "number of tasks for synthetic multitask data")->check(CLI::PositiveNumber);
    app.add_option("--model", model, "lasso | logreg | mtl")->check(CLI::IsMember({"lasso", "logreg", "mtl"}));
    app.add_option("--grid", grid, "number of lambda values")->check(CLI::PositiveNumber);
    app.add_option("--div", div, "lambda_max / lambda_min");
    app.add_option("--eps", eps, "comma-separated relative tolerances");
    app.add_option("--variants", variants,
                   "comma-separated: cd,pg,cd+screen,cd+screen+extr,celer,celer_no_extr,prox_newton,celer_pn");
    app.add_option("--seed", seed, "RNG seed for synthetic data");
    app.add_option("--out", out_path, "output file (default: stdout)");
    app.add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--trace", trace_path, "write per-check gap histories (CSV) to this file");
    app.add_option("--min-nnz", min_nnz, "drop sparse features with fewer stored entries");
    app.add_flag("--no-warm-start", no_warm, "start every lambda from zero");

    CLI11_PARSE(app, argc, argv);

    try {
        celer::PathConfig cfg;
        if (!data.empty()) cfg.data_path = data;
        else if (!synth.empty()) cfg.synth = parse_synth(synth);
        if (!targets.empty()) cfg.targets_path = targets;
        cfg.synth.tasks = tasks;
        cfg.model = celer::model_from_string(model);
        cfg.grid = grid;
        cfg.divisor = div;
        cfg.eps.clear();
        for (const auto& e : split_list(eps)) cfg.eps.push_back(std::stod(e));
        cfg.variants.clear();
        for (const auto& v : split_list(variants)) cfg.variants.push_back(celer::variant_from_string(v));
        cfg.seed = seed;
        cfg.warm_start = !no_warm;
        cfg.trace = !trace_path.empty();
        cfg.min_nnz = min_nnz;

        // load before any timing starts
        celer::validate(cfg);
        const celer::Dataset ds = celer::load_dataset(cfg);
        const celer::PathResult res = celer::run_path(cfg, ds);

        const auto fmt = celer::format_from_string(format);
        if (out_path.empty()) {
            celer::emit_report(res, fmt, std::cout);
        } else {
            std::ofstream out(out_path);
            celer::emit_report(res, fmt, out);
        }
        if (cfg.trace) {
            std::ofstream tr(trace_path);
            celer::emit_trace(res, tr);
        }
    } catch (const std::exception& e) {
        std::cerr << "pathbench: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
