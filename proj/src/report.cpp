#include "survquack/report.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <typeinfo>

#include "survquack/error.hpp"

namespace survquack {

namespace {

Json opt(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::string utc_now()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string error_kind(const std::exception& e)
{
    if (dynamic_cast<const UnsupportedCensoring*>(&e)) return "UnsupportedCensoring";
    if (dynamic_cast<const InfeasibleScenario*>(&e)) return "InfeasibleScenario";
    if (dynamic_cast<const ValidationError*>(&e)) return "ValidationError";
    if (dynamic_cast<const DomainError*>(&e)) return "DomainError";
    if (dynamic_cast<const NotReached*>(&e)) return "NotReached";
    if (dynamic_cast<const DegenerateSample*>(&e)) return "DegenerateSample";
    if (dynamic_cast<const NumericalError*>(&e)) return "NumericalError";
    return "Error";
}

} // namespace

Json to_json(const LogRankResult& r)
{
    return {{"observed_minus_expected", r.observed_minus_expected},
            {"variance", r.variance},
            {"z", r.z},
            {"p_two_sided", r.p_two_sided},
            {"zero_variance", r.zero_variance}};
}

Json to_json(const WaldResult& r)
{
    return {{"estimate", r.estimate}, {"se", r.se}, {"z", r.z}, {"p_two_sided", r.p_two_sided}};
}

Json to_json(const CoxFit& f)
{
    return {{"log_hr", f.log_hr},       {"hr", std::exp(f.log_hr)}, {"se", f.se},
            {"loglik", f.loglik},       {"iterations", f.iterations}, {"strata", f.strata}};
}

Json to_json(const WeibullFit& f)
{
    return {{"shape", f.dist.shape()},
            {"scale", f.dist.scale()},
            {"cov_log_shape_log_scale", {{f.cov[0][0], f.cov[0][1]}, {f.cov[1][0], f.cov[1][1]}}},
            {"loglik", f.loglik},
            {"grad_norm", f.grad_norm},
            {"iterations", f.iterations}};
}

Json to_json(const EfficacySummary& e)
{
    return {{"measure", std::string(to_string(e.measure))}, {"value", e.value}, {"log_se", opt(e.log_se)}};
}

Json to_json(const ConfidenceSet& cs)
{
    return {{"lo", cs.lo},
            {"hi", cs.hi},
            {"level", cs.level},
            {"llp_observed", cs.llp_observed},
            {"accepted", cs.accepted},
            {"empty_acceptance", cs.empty_acceptance},
            {"nonconvex", cs.nonconvex},
            {"diagnostics", cs.diagnostics}};
}

Json to_json(const StratifiedComparison& c)
{
    Json levels = Json::array();
    for (std::size_t i = 0; i < c.levels.size(); ++i)
        levels.push_back({{"level", c.levels[i]}, {"prevalence", c.prevalences[i]}, {"value", c.level_values[i]}});
    return {{"factor", c.factor},
            {"measure", std::string(to_string(c.measure))},
            {"naive_value", c.naive_value},
            {"sme_value", c.sme_value},
            {"marginal_value", c.marginal_value},
            {"marginal_cox", opt(c.marginal_cox)},
            {"levels", levels}};
}

Json to_json(const RateEstimate& r) { return {{"rate", r.rate}, {"ci95", {r.ci_lo, r.ci_hi}}}; }

Json to_json(const DirectionalErrorReport& r)
{
    return {{"scenario", r.scenario},
            {"replications", r.replications},
            {"rejections", r.rejections},
            {"claims_rx_longer", r.claims_rx_longer},
            {"claims_c_longer", r.claims_c_longer},
            {"ties", r.ties},
            {"degenerate", r.degenerate},
            {"rejection_rate", to_json(r.rejection_rate)},
            {"rx_longer_rate", to_json(r.rx_longer_rate)},
            {"c_longer_rate", to_json(r.c_longer_rate)},
            {"directional_sum", r.directional_sum},
            {"max_directional_rate", r.max_directional_rate},
            {"directional_claims_are_errors", r.directional_claims_are_errors},
            {"cox_wald_rejections", r.cox_wald_rejections},
            {"cox_wald_failures", r.cox_wald_failures},
            {"cox_wald_rejection_rate", to_json(r.cox_wald_rejection_rate)},
            {"alpha", r.alpha},
            {"master_seed", r.master_seed},
            {"overall_median_rx", r.overall_median_rx},
            {"overall_median_c", r.overall_median_c}};
}

Json to_json(const ScenarioConfig& c)
{
    Json groups = Json::array();
    for (const auto& g : c.subgroups)
        groups.push_back({{"label", g.label},
                          {"prevalence", g.prevalence},
                          {"shape", g.shape},
                          {"rx_median", opt(g.rx_median)},
                          {"rx_scale", opt(g.rx_scale)},
                          {"c_median", opt(g.c_median)},
                          {"c_scale", opt(g.c_scale)}});
    Json constraint = nullptr;
    if (c.overall_median)
        constraint = {{"time", c.overall_median->time}, {"solved_subgroup", c.overall_median->solved_subgroup}};
    return {{"name", c.name},
            {"subgroups", groups},
            {"overall_median", constraint},
            {"n_total", c.n_total},
            {"allocation", c.allocation},
            {"membership", c.membership == Membership::Stochastic ? "stochastic" : "fixed"},
            {"censoring", c.censoring},
            {"alpha", c.alpha},
            {"replications", c.replications},
            {"master_seed", c.master_seed}};
}

Json to_json(const ResolvedScenario& s)
{
    Json groups = Json::array();
    for (const auto& g : s.subgroups)
        groups.push_back({{"label", g.label},
                          {"prevalence", g.prevalence},
                          {"rx", {{"shape", g.rx.shape()}, {"scale", g.rx.scale()}, {"median", g.rx.median()}}},
                          {"c", {{"shape", g.c.shape()}, {"scale", g.c.scale()}, {"median", g.c.median()}}}});
    return {{"name", s.config.name},
            {"subgroups", groups},
            {"overall_median_rx", s.overall_median_rx},
            {"overall_median_c", s.overall_median_c}};
}

Json ok_section(Json payload)
{
    Json out = {{"ok", true}};
    for (auto& [k, v] : payload.items()) out[k] = v;
    return out;
}

Json error_section(const std::exception& e)
{
    return {{"ok", false}, {"error", e.what()}, {"error_kind", error_kind(e)}};
}

Json make_report(const std::string& command, std::optional<std::uint64_t> seed, Json inputs, Json results)
{
    Json report;
    report["schema"] = kReportSchema;
    report["command"] = command;
    report["seed"] = seed ? Json(*seed) : Json(nullptr);
    report["tool"] = {{"name", "survquack"}, {"version", SURVQUACK_VERSION}, {"generated_at", utc_now()}};
    report["inputs"] = std::move(inputs);
    report["results"] = std::move(results);
    return report;
}

namespace {

struct Checker {
    std::vector<std::string> problems;

    const Json* field(const Json& obj, const std::string& path, const std::string& key)
    {
        if (!obj.is_object() || !obj.contains(key)) {
            problems.push_back(path + "." + key + ": missing");
            return nullptr;
        }
        return &obj.at(key);
    }

    void number(const Json& obj, const std::string& path, const std::string& key)
    {
        if (const Json* v = field(obj, path, key); v && !v->is_number())
            problems.push_back(path + "." + key + ": expected number");
    }

    void count(const Json& obj, const std::string& path, const std::string& key)
    {
        if (const Json* v = field(obj, path, key); v && !v->is_number_unsigned())
            problems.push_back(path + "." + key + ": expected nonnegative integer");
    }

    void string(const Json& obj, const std::string& path, const std::string& key)
    {
        if (const Json* v = field(obj, path, key); v && !v->is_string())
            problems.push_back(path + "." + key + ": expected string");
    }

    void boolean(const Json& obj, const std::string& path, const std::string& key)
    {
        if (const Json* v = field(obj, path, key); v && !v->is_boolean())
            problems.push_back(path + "." + key + ": expected boolean");
    }

    void probability(const Json& obj, const std::string& path, const std::string& key)
    {
        if (const Json* v = field(obj, path, key)) {
            if (!v->is_number() || v->get<double>() < 0.0 || v->get<double>() > 1.0)
                problems.push_back(path + "." + key + ": expected probability");
        }
    }

    void rate(const Json& obj, const std::string& path, const std::string& key)
    {
        if (const Json* v = field(obj, path, key)) {
            probability(*v, path + "." + key, "rate");
            const Json* ci = field(*v, path + "." + key, "ci95");
            if (ci && (!ci->is_array() || ci->size() != 2)) problems.push_back(path + "." + key + ".ci95: expected pair");
        }
    }

    void section(const Json& obj, const std::string& path, const std::string& key)
    {
        const Json* v = field(obj, path, key);
        if (!v) return;
        if (!v->is_object()) {
            problems.push_back(path + "." + key + ": expected object");
            return;
        }
        boolean(*v, path + "." + key, "ok");
        if (v->contains("ok") && v->at("ok").is_boolean() && !v->at("ok").get<bool>()) {
            string(*v, path + "." + key, "error");
            string(*v, path + "." + key, "error_kind");
        }
    }

    void study(const Json& s, const std::string& p)
    {
        string(s, p, "scenario");
        for (const char* k : {"replications", "rejections", "claims_rx_longer", "claims_c_longer", "ties", "degenerate",
                              "cox_wald_rejections", "cox_wald_failures", "master_seed"})
            count(s, p, k);
        for (const char* k : {"rejection_rate", "rx_longer_rate", "c_longer_rate", "cox_wald_rejection_rate"}) rate(s, p, k);
        for (const char* k : {"directional_sum", "max_directional_rate", "alpha"}) probability(s, p, k);
        number(s, p, "overall_median_rx");
        number(s, p, "overall_median_c");
        boolean(s, p, "directional_claims_are_errors");
        if (s.contains("rejections") && s.contains("claims_rx_longer") && s.contains("claims_c_longer") &&
            s.contains("ties") && s["rejections"].is_number_unsigned()) {
            const auto lhs = s["rejections"].get<std::uint64_t>();
            const auto rhs = s["claims_rx_longer"].get<std::uint64_t>() + s["claims_c_longer"].get<std::uint64_t>() +
                             s["ties"].get<std::uint64_t>();
            if (lhs != rhs) problems.push_back(p + ": rejections != claims + ties");
        }
    }
};

} // namespace

std::vector<std::string> validate_report(const Json& report)
{
    Checker ck;
    if (!report.is_object()) return {"report: expected object"};
    if (const Json* s = ck.field(report, "report", "schema"); s && (!s->is_string() || *s != kReportSchema))
        ck.problems.push_back(std::string("report.schema: expected '") + kReportSchema + "'");
    ck.string(report, "report", "command");
    if (const Json* seed = ck.field(report, "report", "seed"); seed && !seed->is_null() && !seed->is_number_unsigned())
        ck.problems.push_back("report.seed: expected null or nonnegative integer");
    if (const Json* tool = ck.field(report, "report", "tool")) {
        ck.string(*tool, "report.tool", "name");
        ck.string(*tool, "report.tool", "version");
        ck.string(*tool, "report.tool", "generated_at");
    }
    if (const Json* in = ck.field(report, "report", "inputs"); in && !in->is_object())
        ck.problems.push_back("report.inputs: expected object");
    const Json* res = ck.field(report, "report", "results");
    if (!res || !res->is_object() || !report.contains("command") || !report["command"].is_string()) {
        if (res && !res->is_object()) ck.problems.push_back("report.results: expected object");
        return ck.problems;
    }

    const std::string cmd = report["command"].get<std::string>();
    const std::string p = "report.results";
    if (cmd == "analyze") {
        for (const char* k : {"logrank", "cox_wald", "km_medians", "time_ratio", "llp", "weibull", "stratified"})
            ck.section(*res, p, k);
    } else if (cmd == "simulate") {
        if (const Json* studies = ck.field(*res, p, "studies")) {
            if (!studies->is_array() || studies->empty())
                ck.problems.push_back(p + ".studies: expected non-empty array");
            else
                for (std::size_t i = 0; i < studies->size(); ++i) {
                    const Json& entry = (*studies)[i];
                    const std::string ep = p + ".studies[" + std::to_string(i) + "]";
                    ck.boolean(entry, ep, "ok");
                    if (entry.value("ok", false)) {
                        if (const Json* r = ck.field(entry, ep, "report")) ck.study(*r, ep + ".report");
                    } else {
                        ck.string(entry, ep, "error");
                    }
                }
        }
    } else if (cmd == "pivot-ci") {
        if (const Json* cs = ck.field(*res, p, "confidence_set")) {
            const std::string cp = p + ".confidence_set";
            ck.number(*cs, cp, "lo");
            ck.number(*cs, cp, "hi");
            ck.probability(*cs, cp, "level");
            ck.probability(*cs, cp, "llp_observed");
            ck.boolean(*cs, cp, "empty_acceptance");
            ck.boolean(*cs, cp, "nonconvex");
            if (const Json* a = ck.field(*cs, cp, "accepted"); a && !a->is_array())
                ck.problems.push_back(cp + ".accepted: expected array");
            if (cs->contains("lo") && cs->contains("hi") && (*cs)["lo"].is_number() && (*cs)["hi"].is_number() &&
                (*cs)["lo"].get<double>() > (*cs)["hi"].get<double>())
                ck.problems.push_back(cp + ": lo > hi");
        }
    } else if (cmd == "eq1-demo") {
        ck.number(*res, p, "naive_pooled_hr");
        ck.string(*res, p, "rounded");
        if (const Json* s = ck.field(*res, p, "strata"); s && !s->is_array()) ck.problems.push_back(p + ".strata: expected array");
        if (const Json* e = ck.field(*res, p, "explanation"); e && !e->is_array())
            ck.problems.push_back(p + ".explanation: expected array");
    } else if (cmd == "make-dataset") {
        ck.count(*res, p, "rows");
        ck.count(*res, p, "censored");
    } else {
        ck.problems.push_back("report.command: unknown command '" + cmd + "'");
    }
    return ck.problems;
}

Json strip_nondeterministic(const Json& report)
{
    Json copy = report;
    if (copy.contains("tool") && copy["tool"].is_object()) {
        copy["tool"].erase("generated_at");
        copy["tool"].erase("version");
    }
    return copy;
}

std::string dump_report(const Json& report) { return report.dump(2) + "\n"; }

} // namespace survquack
