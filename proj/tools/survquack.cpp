// survquack command-line front end.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "survquack/config.hpp"
#include "survquack/dataset.hpp"
#include "survquack/error.hpp"
#include "survquack/infer.hpp"
#include "survquack/report.hpp"
#include "survquack/sim.hpp"
#include "survquack/sme.hpp"

using namespace survquack;

namespace {

constexpr std::uint64_t kDefaultSeed = 20240917;

struct SeedChoice {
    std::uint64_t value;
    std::string source;
};

std::uint64_t parse_seed(const std::string& text, const std::string& what)
{
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        if (text.empty() || text[0] == '-') throw std::invalid_argument(text);
        v = std::stoull(text, &used, 10);
    } catch (const std::exception&) {
        throw ValidationError(what + ": expected a nonnegative integer, got '" + text + "'");
    }
    if (used != text.size()) throw ValidationError(what + ": expected a nonnegative integer, got '" + text + "'");
    return v;
}

// flag > config file > SURVQUACK_SEED > built-in default
SeedChoice choose_seed(const std::optional<std::string>& flag, std::optional<std::uint64_t> from_config)
{
    if (flag) return {parse_seed(*flag, "--seed"), "flag"};
    if (from_config) return {*from_config, "config"};
    if (const char* env = std::getenv("SURVQUACK_SEED"); env && *env) return {parse_seed(env, "SURVQUACK_SEED"), "env"};
    return {kDefaultSeed, "default"};
}

void emit(const Json& report, const std::string& out_path)
{
    const std::string text = dump_report(report);
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw ValidationError("cannot write report to '" + out_path + "'");
    out << text;
}

void write_table(const std::string& dir, const std::string& name, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows)
{
    std::filesystem::create_directories(dir);
    const auto path = std::filesystem::path(dir) / name;
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write table '" + path.string() + "'");
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << "\n";
    }
}

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::vector<std::string> split_list(const std::string& text)
{
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

// --------------------------------------------------------------------------
// analyze

struct AnalyzeOptions {
    std::string dataset;
    double alpha = 0.05;
    std::vector<std::string> strata;
    std::string measures = "HR,TR";
    std::string out;
    std::string tables;
    int workers = 0;
};

template <class F>
Json guarded(F&& f)
{
    try {
        return ok_section(f());
    } catch (const Error& e) {
        return error_section(e);
    }
}

Json cmd_analyze(const AnalyzeOptions& opt)
{
    if (!(opt.alpha > 0.0 && opt.alpha < 1.0)) throw ValidationError("--alpha must be in (0, 1)");
    std::vector<Measure> measures;
    for (const auto& m : split_list(opt.measures)) {
        if (m == "HR") measures.push_back(Measure::HR);
        else if (m == "TR") measures.push_back(Measure::TR);
        else throw ValidationError("--measure: stratified audit supports HR and TR, got '" + m + "'");
    }

    const LoadedDataset loaded = read_dataset_file(opt.dataset);
    const SurvivalSample& s = loaded.sample;
    std::vector<std::string> factors = opt.strata.empty() ? s.factors : opt.strata;
    for (const auto& f : factors) s.factor_index(f); // unknown factor is an input error, not a section error

    const auto rx_t = s.times(Arm::Rx), c_t = s.times(Arm::C);
    const auto rx_e = s.events(Arm::Rx), c_e = s.events(Arm::C);

    Json inputs = {{"dataset", opt.dataset},
                   {"rows", loaded.data_lines},
                   {"blank_lines", loaded.blank_lines},
                   {"n_rx", s.count(Arm::Rx)},
                   {"n_c", s.count(Arm::C)},
                   {"censored", s.censored()},
                   {"factors", s.factors},
                   {"alpha", opt.alpha},
                   {"strata", factors},
                   {"measures", split_list(opt.measures)}};

    Json results;
    results["logrank"] = guarded([&] {
        const auto lr = logrank_test(s);
        Json j = to_json(lr);
        j["rejected"] = lr.p_two_sided < opt.alpha;
        return j;
    });
    results["decision"] = guarded([&] {
        const auto d = decision_procedure(s, opt.alpha);
        return Json{{"claim", std::string(to_string(d.claim))}, {"tie", d.tie}, {"p_two_sided", d.logrank.p_two_sided}};
    });
    results["cox_wald"] = guarded([&] {
        Json j = to_json(cox_fit_two_arm(s));
        j["wald"] = to_json(wald_test_cox(s));
        return j;
    });
    const KMCurve km_rx = km_fit(rx_t, rx_e), km_c = km_fit(c_t, c_e);
    results["km_medians"] = guarded([&] {
        return Json{{"rx", optional_number(km_median(km_rx))}, {"c", optional_number(km_median(km_c))}};
    });
    results["time_ratio"] = guarded([&] { return to_json(sample_tr(rx_t, rx_e, c_t, c_e)); });
    results["llp"] = guarded([&] {
        Json j;
        double llp = 0.0;
        if (s.censored() == 0) {
            llp = empirical_llp(rx_t, c_t);
            j["method"] = "empirical";
            j["truncated"] = false;
        } else {
            const LlpResult r = llp_between(*km_rx.curve(), *km_c.curve());
            llp = r.llp;
            j["method"] = "kaplan-meier";
            j["truncated"] = r.truncated;
        }
        j["llp"] = llp;
        j["hr"] = hr_from_llp(llp);
        return j;
    });
    results["weibull"] = guarded([&] {
        const WeibullFit frx = weibull_mle(rx_t, rx_e);
        const WeibullFit fc = weibull_mle(c_t, c_e);
        return Json{{"rx", to_json(frx)}, {"c", to_json(fc)}, {"log_tr_wald", to_json(wald_test_weibull(frx, fc))}};
    });
    results["stratified"] = guarded([&] {
        Json comps = Json::array();
        Json warnings = Json::array();
        for (Measure m : measures) {
            const AuditResult audit = stratified_audit(s, factors, m, opt.workers);
            for (const auto& c : audit.comparisons) comps.push_back(to_json(c));
            for (const auto& w : audit.warnings) warnings.push_back(w);
        }
        return Json{{"comparisons", comps}, {"warnings", warnings}};
    });

    if (!opt.tables.empty() && results["stratified"]["ok"].get<bool>()) {
        std::vector<std::vector<std::string>> rows;
        for (const auto& c : results["stratified"]["comparisons"])
            rows.push_back({c["factor"].get<std::string>(), c["measure"].get<std::string>(),
                            num(c["naive_value"].get<double>()), num(c["sme_value"].get<double>()),
                            num(c["marginal_value"].get<double>())});
        write_table(opt.tables, "stratified.csv", {"factor", "measure", "naive", "sme", "marginal"}, rows);
    }
    return make_report("analyze", std::nullopt, std::move(inputs), std::move(results));
}

// --------------------------------------------------------------------------
// simulate

struct SimulateOptions {
    std::string config;
    std::optional<std::string> seed;
    std::optional<std::size_t> replications;
    std::optional<double> alpha;
    std::string out;
    std::string tables;
    int workers = 0;
};

Json cmd_simulate(const SimulateOptions& opt)
{
    SimulationConfig sc = simulation_config_from_ini(parse_ini_file(opt.config));
    const SeedChoice seed =
        choose_seed(opt.seed, sc.seed_from_file ? std::optional<std::uint64_t>(sc.scenario.master_seed) : std::nullopt);
    sc.scenario.master_seed = seed.value;
    if (opt.replications) sc.scenario.replications = *opt.replications;
    if (opt.alpha) sc.scenario.alpha = *opt.alpha;
    validate(sc.scenario);

    Json inputs = {{"config", opt.config}, {"seed_source", seed.source}, {"scenario", to_json(sc.scenario)}};
    Json scenarios = Json::array();
    Json studies = Json::array();

    if (!sc.sweep) {
        const ResolvedScenario resolved = resolve(sc.scenario);
        scenarios.push_back(to_json(resolved));
        studies.push_back({{"ok", true}, {"report", to_json(run_study(resolved, opt.workers))}});
    } else {
        inputs["sweep"] = {{"subgroup", sc.sweep->subgroup}, {"prevalences", sc.sweep->prevalences}};
        const auto configs = prevalence_sweep(sc.scenario, sc.sweep->subgroup, sc.sweep->prevalences);
        for (const auto& c : configs) {
            try {
                scenarios.push_back(to_json(resolve(c)));
            } catch (const Error& e) {
                scenarios.push_back(error_section(e));
            }
        }
        for (const auto& entry : sweep(configs, opt.workers)) {
            if (entry.report) studies.push_back({{"ok", true}, {"report", to_json(*entry.report)}});
            else studies.push_back({{"ok", false}, {"error", entry.error}});
        }
    }

    if (!opt.tables.empty()) {
        std::vector<std::vector<std::string>> rows;
        for (const auto& st : studies) {
            if (!st["ok"].get<bool>()) continue;
            const auto& r = st["report"];
            rows.push_back({r["scenario"].get<std::string>(), std::to_string(r["replications"].get<std::size_t>()),
                            num(r["rejection_rate"]["rate"].get<double>()),
                            num(r["rx_longer_rate"]["rate"].get<double>()),
                            num(r["c_longer_rate"]["rate"].get<double>()),
                            num(r["cox_wald_rejection_rate"]["rate"].get<double>())});
        }
        write_table(opt.tables, "studies.csv",
                    {"scenario", "replications", "rejection_rate", "rx_longer_rate", "c_longer_rate", "cox_wald_rate"},
                    rows);
    }
    return make_report("simulate", seed.value, std::move(inputs), {{"scenarios", scenarios}, {"studies", studies}});
}

// --------------------------------------------------------------------------
// pivot-ci

struct PivotOptions {
    std::string dataset;
    std::optional<std::string> seed;
    double level = 0.95;
    double grid_min = 1.0 / 50.0;
    double grid_max = 50.0;
    std::size_t grid_points = 200;
    std::size_t reps = 4000;
    std::string out;
    std::string tables;
    int workers = 0;
};

Json cmd_pivot(const PivotOptions& opt)
{
    if (!(opt.level > 0.0 && opt.level < 1.0)) throw ValidationError("--level must be in (0, 1)");
    if (!(opt.grid_min > 0.0 && opt.grid_max > opt.grid_min) || opt.grid_points < 2)
        throw ValidationError("grid needs 0 < grid-min < grid-max and at least 2 points");
    const SeedChoice seed = choose_seed(opt.seed, std::nullopt);
    const LoadedDataset loaded = read_dataset_file(opt.dataset);
    const SurvivalSample& s = loaded.sample;
    if (const std::size_t cens = s.censored(); cens > 0)
        throw UnsupportedCensoring("pivot-ci needs uncensored data; " + std::to_string(cens) + " censored rows", cens);

    const auto grid = log_grid(opt.grid_min, opt.grid_max, opt.grid_points);
    const ConfidenceSet cs =
        mw_pivot_ci(s.times(Arm::Rx), s.times(Arm::C), opt.level, grid, opt.reps, seed.value, opt.workers);

    if (!opt.tables.empty()) {
        std::vector<std::vector<std::string>> rows;
        for (double th : grid) {
            const bool acc = std::find(cs.accepted.begin(), cs.accepted.end(), th) != cs.accepted.end();
            rows.push_back({num(th), acc ? "1" : "0"});
        }
        write_table(opt.tables, "pivot_grid.csv", {"theta", "accepted"}, rows);
    }

    Json inputs = {{"dataset", opt.dataset},
                   {"n_rx", s.count(Arm::Rx)},
                   {"n_c", s.count(Arm::C)},
                   {"level", opt.level},
                   {"grid", {{"min", opt.grid_min}, {"max", opt.grid_max}, {"points", opt.grid_points}}},
                   {"reps", opt.reps},
                   {"seed_source", seed.source}};
    return make_report("pivot-ci", seed.value, std::move(inputs),
                       {{"parameter", "hazard ratio under proportional hazards (Lehmann alternative)"},
                        {"confidence_set", to_json(cs)}});
}

// --------------------------------------------------------------------------
// eq1-demo

Json cmd_eq1_demo()
{
    const std::vector<WeightedRatio> strata = {{0.521, 0.5}, {0.983, 0.5}};
    const double pooled = naive_stratified_ratio(strata);
    char rounded[16];
    std::snprintf(rounded, sizeof rounded, "%.3f", pooled);

    Json rows = Json::array({{{"level", "Female"}, {"hr", 0.521}, {"weight", 0.5}},
                             {{"level", "Male"}, {"hr", 0.983}, {"weight", 0.5}}});
    Json explanation = Json::array(
        {std::string("naive pooling: exp(0.5*log(0.521) + 0.5*log(0.983)) = ") + rounded,
         "the pooled value averages log hazard ratios and never looks at how long control patients live in each level",
         "when one level has a much better control prognosis, its share of deaths over time differs from its prevalence, "
         "so the population hazard ratio is a different quantity",
         "mixing each arm's survival curve over the prevalences first and comparing the mixtures afterwards "
         "(subgroup mixable estimation) accounts for that prognostic effect"});
    return make_report("eq1-demo", std::nullopt, Json::object(),
                       {{"strata", rows}, {"naive_pooled_hr", pooled}, {"rounded", rounded}, {"explanation", explanation}});
}

// --------------------------------------------------------------------------
// make-dataset

struct MakeDatasetOptions {
    std::string config;
    std::optional<std::string> seed;
    std::string out;
    std::string report;
};

Json cmd_make_dataset(const MakeDatasetOptions& opt)
{
    DatasetSpec spec = dataset_spec_from_ini(parse_ini_file(opt.config));
    const SeedChoice seed = choose_seed(opt.seed, spec.seed);
    spec.seed = seed.value;
    const SurvivalSample sample = generate_dataset(spec);

    if (opt.out.empty() || opt.out == "-") {
        write_dataset(std::cout, sample);
    } else {
        std::ofstream out(opt.out, std::ios::binary);
        if (!out) throw ValidationError("cannot write dataset to '" + opt.out + "'");
        write_dataset(out, sample);
    }
    return make_report("make-dataset", seed.value, {{"config", opt.config}, {"name", spec.name}},
                       {{"rows", sample.size()}, {"censored", sample.censored()}, {"path", opt.out}});
}

int fail(int code, const std::string& kind, const std::string& message)
{
    std::cerr << "survquack: " << kind << ": " << message << "\n";
    return code;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"survquack: efficacy measures for overall survival"};
    app.set_version_flag("--version", std::string(SURVQUACK_VERSION));
    app.require_subcommand(1);

    AnalyzeOptions an;
    std::string strata_text;
    auto* analyze = app.add_subcommand("analyze", "log-rank, Cox, KM medians, LLP and stratified audit of a dataset");
    analyze->add_option("dataset", an.dataset, "CSV dataset")->required();
    analyze->add_option("--alpha", an.alpha, "two-sided significance level");
    analyze->add_option("--strata", strata_text, "comma-separated factors to audit (default: all)");
    analyze->add_option("--measure", an.measures, "audit measures, comma-separated from HR,TR");
    analyze->add_option("--out", an.out, "report path (default stdout)");
    analyze->add_option("--tables", an.tables, "directory for CSV exports");
    analyze->add_option("--workers", an.workers, "OpenMP threads (0 = runtime default)");

    SimulateOptions si;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo study of the log-rank then medians procedure");
    simulate->add_option("config", si.config, "scenario config")->required();
    simulate->add_option("--seed", si.seed, "master seed");
    simulate->add_option("--replications", si.replications, "override the replication count");
    simulate->add_option("--alpha", si.alpha, "override the significance level");
    simulate->add_option("--out", si.out, "report path (default stdout)");
    simulate->add_option("--tables", si.tables, "directory for CSV exports");
    simulate->add_option("--workers", si.workers, "OpenMP threads (0 = runtime default)");

    PivotOptions pv;
    auto* pivot = app.add_subcommand("pivot-ci", "confidence set for the hazard ratio by Mann-Whitney pivoting");
    pivot->add_option("dataset", pv.dataset, "CSV dataset without censoring")->required();
    pivot->add_option("--seed", pv.seed, "Monte Carlo seed");
    pivot->add_option("--level", pv.level, "confidence level in (0, 1)");
    pivot->add_option("--grid-min", pv.grid_min, "smallest hazard ratio on the grid");
    pivot->add_option("--grid-max", pv.grid_max, "largest hazard ratio on the grid");
    pivot->add_option("--grid-points", pv.grid_points, "log-spaced grid size");
    pivot->add_option("--reps", pv.reps, "Monte Carlo replications per grid point (>= 2000)");
    pivot->add_option("--out", pv.out, "report path (default stdout)");
    pivot->add_option("--tables", pv.tables, "directory for CSV exports");
    pivot->add_option("--workers", pv.workers, "OpenMP threads (0 = runtime default)");

    std::string eq1_out;
    auto* eq1 = app.add_subcommand("eq1-demo", "naive pooling of the Female/Male hazard ratios");
    eq1->add_option("--out", eq1_out, "report path (default stdout)");

    MakeDatasetOptions md;
    auto* make = app.add_subcommand("make-dataset", "generate a synthetic dataset from a dataset config");
    make->add_option("config", md.config, "dataset config")->required();
    make->add_option("--seed", md.seed, "generator seed");
    make->add_option("--out", md.out, "CSV path (default stdout)");
    make->add_option("--report", md.report, "also write a JSON report here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*analyze) {
            an.strata = split_list(strata_text);
            emit(cmd_analyze(an), an.out);
        } else if (*simulate) {
            emit(cmd_simulate(si), si.out);
        } else if (*pivot) {
            emit(cmd_pivot(pv), pv.out);
        } else if (*eq1) {
            emit(cmd_eq1_demo(), eq1_out);
        } else if (*make) {
            const Json report = cmd_make_dataset(md);
            if (!md.report.empty()) emit(report, md.report);
        }
    } catch (const UnsupportedCensoring& e) {
        return fail(2, "unsupported censoring", e.what());
    } catch (const InputError& e) {
        return fail(2, "input error", e.what());
    } catch (const Error& e) {
        return fail(3, "numerical failure", e.what());
    } catch (const std::exception& e) {
        return fail(3, "error", e.what());
    }
    return 0;
}
