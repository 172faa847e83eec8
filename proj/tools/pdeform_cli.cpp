#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "pdeform/deformation.hpp"
#include "pdeform/errors.hpp"
#include "pdeform/harness.hpp"
#include "pdeform/hierarchy.hpp"
#include "pdeform/passivity.hpp"
#include "pdeform/protocols.hpp"

using namespace pdeform;

namespace {

struct Global {
    std::uint64_t seed = 1;
    double tol = 1e-9;
    std::string format = "csv";
    std::string out;
};

void write(const ScenarioResult& r, const Global& g)
{
    const OutputFormat fmt = parse_format(g.format);
    if (!g.out.empty())
        emit_results(r, fmt, g.out);
    else
        std::cout << (fmt == OutputFormat::Csv ? results_to_csv(r) : results_to_json(r));
    if (fmt == OutputFormat::Csv || !g.out.empty())
        for (const auto& [k, v] : r.summary)
            std::fprintf(stderr, "# %s = %.17g\n", k.c_str(), v);
}

ScenarioResult fresh(const std::string& name, const SetupSpec& spec, const Global& g, std::vector<std::string> cols)
{
    ScenarioResult r;
    r.scenario = name;
    r.columns = std::move(cols);
    r.metadata["setup_hash"] = setup_hash_hex(spec);
    r.metadata["setup_name"] = spec.name;
    r.metadata["seed"] = std::to_string(g.seed);
    return r;
}

std::vector<InequalityEvaluator> evaluators(const SetupSpec& spec, const DensityMatrix& rho0, const std::string& kind,
                                            const std::string& obs, double alpha)
{
    std::vector<InequalityEvaluator> out;
    const bool all = kind == "all";
    if (all || kind == "ci")
        out.push_back(ci_evaluator(rho0));
    if (all || kind == "gp")
        out.push_back(gp_evaluator(rho0, alpha));
    if ((all && !obs.empty()) || kind == "deformation") {
        if (obs.empty())
            throw ValidationError("--bound deformation needs --observable");
        const HermitianOperator b = build_B(spec, ZeroPopulationPolicy::Clamp).full;
        out.push_back(deformation_pair_evaluator(xi_thresholds(b, observable(spec, obs))));
        out.back().name = "deformation";
    }
    if (all || kind == "truncated")
        out.push_back(truncated_evaluator());
    if (all || kind == "binary")
        out.push_back(binary_evaluator());
    if (all || kind == "majorization")
        out.push_back(majorization_evaluator());
    if (out.empty())
        throw ValidationError("unknown bound kind '" + kind +
                              "' (ci, gp, deformation, truncated, binary, majorization, all)");
    return out;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"pdeform: passivity-deformation bounds for small isolated quantum setups"};
    app.require_subcommand(1);
    app.fallthrough();
    Global g;
    app.add_option("--seed", g.seed, "random seed")->capture_default_str();
    app.add_option("--tol", g.tol, "violation tolerance")->capture_default_str();
    app.add_option("--format", g.format, "csv or json")->capture_default_str();
    app.add_option("--out", g.out, "output file (stdout when omitted)");

    std::string scenario, setup_path, bound = "all", obs, part, demon_path, data_dir;
    double alpha = 2.0;
    int trials = -1;

    auto* run = app.add_subcommand("run", "run a bundled scenario");
    run->add_option("scenario", scenario, "scenario name")->required()->check(CLI::IsMember(scenario_names()));
    run->add_option("--setup", setup_path, "override the bundled setup file");
    run->add_option("--data-dir", data_dir, "directory of bundled setups");
    run->add_option("--trials", trials, "random trial count");

    auto* audit = app.add_subcommand("audit", "check bounds on random mixtures of unitaries");
    audit->add_option("setup", setup_path)->required()->check(CLI::ExistingFile);
    audit->add_option("--bound", bound, "ci, gp, deformation, truncated, binary, majorization, all")
        ->capture_default_str();
    audit->add_option("--observable", obs, "observable for the deformation bound");
    audit->add_option("--alpha", alpha, "generalized-passivity exponent")->capture_default_str();
    audit->add_option("--trials", trials, "random channel count (default 200)");

    auto* xi = app.add_subcommand("xi", "deformation thresholds of B + xi A");
    xi->add_option("setup", setup_path)->required()->check(CLI::ExistingFile);
    xi->add_option("--observable", obs)->required();
    xi->add_option("--partition", part, "restrict to a named partition");
    xi->add_option("--alpha", alpha, "use B^alpha of the generalized passive family");

    auto* thr = app.add_subcommand("threshold", "demon detection thresholds");
    thr->add_option("setup", setup_path)->required()->check(CLI::ExistingFile);
    thr->add_option("--demon", demon_path, "demon file (defaults to the setup's demon section)");
    thr->add_option("--observable", obs, "observable for the deformation bound");
    thr->add_option("--alpha", alpha, "generalized-passivity exponent")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 1;
    }

    try {
        ScenarioResult r;
        if (*run) {
            RunOptions o;
            o.seed = g.seed;
            o.tol = g.tol;
            o.trials = trials;
            o.data_dir = data_dir;
            if (!setup_path.empty())
                o.setup_path = setup_path;
            r = run_scenario(scenario, o);
        } else if (*audit) {
            const SetupSpec spec = parse_setup(setup_path);
            const DensityMatrix rho0 = initial_state(spec);
            const auto evals = evaluators(spec, rho0, bound, obs, alpha);
            std::vector<std::string> cols{"trial"};
            for (const auto& e : evals)
                cols.push_back(e.name);
            r = fresh("audit", spec, g, cols);
            Rng rng(g.seed);
            std::uniform_int_distribution<int> terms(1, 3);
            const int n = trials < 0 ? 200 : trials;
            for (int k = 0; k < n; ++k) {
                const DensityMatrix rf = evolve(rho0, random_mixture(rho0.dim(), terms(rng), rng));
                std::vector<double> row{double(k)};
                std::string bad;
                for (const auto& e : evals) {
                    row.push_back(e.slack(rho0, rf));
                    if (row.back() < -g.tol)
                        bad += (bad.empty() ? "" : ",") + e.name;
                }
                r.add_row(row, bad.empty() ? "satisfied" : "violated:" + bad);
            }
        } else if (*xi) {
            const SetupSpec spec = parse_setup(setup_path);
            const HermitianOperator base = xi->count("--alpha") ? gp_family(initial_state(spec), alpha)
                                                                : build_B(spec, ZeroPopulationPolicy::Clamp).full;
            std::optional<ManifoldPartition> p;
            if (!part.empty())
                p = partition(spec, part);
            const XiThresholds t = xi_thresholds(base, observable(spec, obs), p);
            r = fresh("xi", spec, g, {"i", "j", "xi_k"});
            for (const auto& c : t.xi_k_list)
                r.add_row({double(c.i), double(c.j), c.value}, std::string("candidate"));
            r.summary["xi_minus"] = t.xi_minus;
            r.summary["xi_plus"] = t.xi_plus;
            r.summary["restricted"] = t.restricted ? 1.0 : 0.0;
        } else if (*thr) {
            const SetupSpec spec = parse_setup(setup_path);
            std::optional<DemonSpec> d = spec.demon;
            if (!demon_path.empty())
                d = parse_demon(demon_path);
            if (!d)
                throw ValidationError("threshold: no demon in the setup and no --demon file");
            const DensityMatrix rho0 = initial_state(spec);
            const MixtureOfUnitaries pre = MixtureOfUnitaries::single(pre_evolution_unitary(spec));
            const DemonChannel demon = demon_channel(spec, *d);
            r = fresh("threshold", spec, g, {"threshold"});
            for (const auto& e : evaluators(spec, rho0, "all", obs, alpha)) {
                const double t = detection_threshold(rho0, pre, demon, e);
                r.add_row({t}, std::string(std::isfinite(t) ? "violated" : "satisfied"), e.name);
                r.summary["threshold_" + e.name] = t;
            }
        }
        write(r, g);
        return r.all_satisfied() ? 0 : 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
