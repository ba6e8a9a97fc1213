#include "survquack/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "survquack/error.hpp"
#include "survquack/rng.hpp"

namespace survquack {

namespace {

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

// Collects problems while reading typed values so one error lists them all.
class Reader {
public:
    std::vector<std::string> problems;

    void bad(const IniEntry& e, const std::string& what)
    {
        problems.push_back("line " + std::to_string(e.line) + ": " + e.key + " = '" + e.value + "': " + what);
    }

    std::optional<double> number(const IniEntry& e)
    {
        double v = 0.0;
        const char* first = e.value.data();
        const char* last = first + e.value.size();
        const auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc{} || ptr != last || !std::isfinite(v)) {
            bad(e, "not a number");
            return std::nullopt;
        }
        return v;
    }

    std::optional<std::uint64_t> integer(const IniEntry& e)
    {
        std::uint64_t v = 0;
        const char* first = e.value.data();
        const char* last = first + e.value.size();
        const auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc{} || ptr != last) {
            bad(e, "not a nonnegative integer");
            return std::nullopt;
        }
        return v;
    }

    std::optional<bool> boolean(const IniEntry& e)
    {
        if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
        if (e.value == "false" || e.value == "0" || e.value == "no") return false;
        bad(e, "expected true or false");
        return std::nullopt;
    }

    std::vector<double> numbers(const IniEntry& e)
    {
        std::vector<double> out;
        for (const auto& item : split_list(e.value)) {
            IniEntry sub{e.key, item, e.line};
            if (auto v = number(sub)) out.push_back(*v);
        }
        return out;
    }

    using Handler = std::function<void(const IniEntry&)>;

    void dispatch(const IniSection& section, const std::map<std::string, Handler>& handlers)
    {
        for (const auto& e : section.entries) {
            const auto it = handlers.find(e.key);
            if (it == handlers.end()) {
                problems.push_back("line " + std::to_string(e.line) + ": unknown key '" + e.key + "'" +
                                   (section.name.empty() ? std::string{} : " in [" + section.name + "]"));
                continue;
            }
            it->second(e);
        }
    }

    void raise(const std::string& what) const
    {
        if (problems.empty()) return;
        std::ostringstream os;
        os << what << ":";
        for (const auto& p : problems) os << "\n  - " << p;
        throw ValidationError(os.str());
    }
};

} // namespace

const IniSection* IniDocument::find(const std::string& name) const
{
    for (const auto& s : sections)
        if (s.name == name) return &s;
    return nullptr;
}

IniDocument parse_ini(std::istream& in)
{
    IniDocument doc;
    doc.sections.push_back(IniSection{"", 0, {}});
    std::vector<std::string> problems;
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty() || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                problems.push_back("line " + std::to_string(lineno) + ": unterminated section header");
                continue;
            }
            std::string name = trim(std::string_view(line).substr(1, line.size() - 2));
            // Collapse inner whitespace: "subgroup   g+" -> "subgroup g+".
            std::stringstream ss(name);
            std::string word, joined;
            while (ss >> word) joined += (joined.empty() ? "" : " ") + word;
            doc.sections.push_back(IniSection{joined, lineno, {}});
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            problems.push_back("line " + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        IniEntry e{trim(std::string_view(line).substr(0, eq)), trim(std::string_view(line).substr(eq + 1)), lineno};
        if (e.key.empty()) {
            problems.push_back("line " + std::to_string(lineno) + ": empty key");
            continue;
        }
        for (const auto& prev : doc.sections.back().entries)
            if (prev.key == e.key) problems.push_back("line " + std::to_string(lineno) + ": duplicate key '" + e.key + "'");
        doc.sections.back().entries.push_back(std::move(e));
    }
    if (!problems.empty()) {
        std::ostringstream os;
        os << "config syntax error:";
        for (const auto& p : problems) os << "\n  - " << p;
        throw ValidationError(os.str());
    }
    return doc;
}

IniDocument parse_ini_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config '" + path + "'");
    return parse_ini(in);
}

SimulationConfig simulation_config_from_ini(const IniDocument& doc)
{
    Reader rd;
    SimulationConfig out;
    ScenarioConfig& sc = out.scenario;
    sc.subgroups.clear();
    std::optional<double> median_time;
    std::optional<std::string> solve_label;

    for (const auto& section : doc.sections) {
        if (section.name.empty()) {
            rd.dispatch(section, {
                {"name", [&](const IniEntry& e) { sc.name = e.value; }},
                {"n_total", [&](const IniEntry& e) { if (auto v = rd.integer(e)) sc.n_total = *v; }},
                {"allocation", [&](const IniEntry& e) { if (auto v = rd.number(e)) sc.allocation = *v; }},
                {"alpha", [&](const IniEntry& e) { if (auto v = rd.number(e)) sc.alpha = *v; }},
                {"replications", [&](const IniEntry& e) { if (auto v = rd.integer(e)) sc.replications = *v; }},
                {"master_seed", [&](const IniEntry& e) {
                     if (auto v = rd.integer(e)) {
                         sc.master_seed = *v;
                         out.seed_from_file = true;
                     }
                 }},
                {"censoring", [&](const IniEntry& e) { sc.censoring = e.value; }},
                {"membership", [&](const IniEntry& e) {
                     if (e.value == "stochastic")
                         sc.membership = Membership::Stochastic;
                     else if (e.value == "fixed")
                         sc.membership = Membership::FixedQuota;
                     else
                         rd.bad(e, "expected stochastic or fixed");
                 }},
                {"overall_median", [&](const IniEntry& e) { median_time = rd.number(e); }},
                {"solve_subgroup", [&](const IniEntry& e) { solve_label = e.value; }},
            });
        } else if (section.name.rfind("subgroup ", 0) == 0) {
            SubgroupSpec g;
            g.label = section.name.substr(9);
            const auto opt = [&](std::optional<double>& slot) {
                return [&](const IniEntry& e) { slot = rd.number(e); };
            };
            rd.dispatch(section, {
                {"prevalence", [&](const IniEntry& e) { if (auto v = rd.number(e)) g.prevalence = *v; }},
                {"shape", [&](const IniEntry& e) { if (auto v = rd.number(e)) g.shape = *v; }},
                {"rx_median", opt(g.rx_median)},
                {"rx_scale", opt(g.rx_scale)},
                {"c_median", opt(g.c_median)},
                {"c_scale", opt(g.c_scale)},
            });
            sc.subgroups.push_back(std::move(g));
        } else if (section.name == "sweep") {
            SweepSpec sw;
            rd.dispatch(section, {
                {"subgroup", [&](const IniEntry& e) { sw.subgroup = e.value; }},
                {"prevalences", [&](const IniEntry& e) { sw.prevalences = rd.numbers(e); }},
            });
            if (sw.subgroup.empty() || sw.prevalences.empty())
                rd.problems.push_back("line " + std::to_string(section.line) + ": [sweep] needs subgroup and prevalences");
            out.sweep = std::move(sw);
        } else {
            rd.problems.push_back("line " + std::to_string(section.line) + ": unknown section [" + section.name + "]");
        }
    }
    if (median_time.has_value() != solve_label.has_value())
        rd.problems.push_back("overall_median and solve_subgroup must be given together");
    else if (median_time)
        sc.overall_median = MedianConstraint{*median_time, *solve_label};
    rd.raise("invalid simulation config");
    return out;
}

DatasetSpec dataset_spec_from_ini(const IniDocument& doc)
{
    Reader rd;
    DatasetSpec spec;
    bool saw_dataset = false;
    for (const auto& section : doc.sections) {
        if (section.name.empty()) {
            if (!section.entries.empty())
                rd.problems.push_back("line " + std::to_string(section.entries.front().line) +
                                      ": dataset configs keep their keys under [dataset]");
        } else if (section.name == "dataset") {
            saw_dataset = true;
            rd.dispatch(section, {
                {"name", [&](const IniEntry& e) { spec.name = e.value; }},
                {"n_per_arm", [&](const IniEntry& e) { if (auto v = rd.integer(e)) spec.n_per_arm = *v; }},
                {"seed", [&](const IniEntry& e) { if (auto v = rd.integer(e)) spec.seed = *v; }},
                {"shape", [&](const IniEntry& e) { if (auto v = rd.number(e)) spec.shape = *v; }},
                {"control_median", [&](const IniEntry& e) { if (auto v = rd.number(e)) spec.control_median = *v; }},
                {"hr", [&](const IniEntry& e) { if (auto v = rd.number(e)) spec.hr = *v; }},
                {"mirror_arms", [&](const IniEntry& e) { if (auto v = rd.boolean(e)) spec.mirror_arms = *v; }},
                {"censor_after", [&](const IniEntry& e) { spec.censor_after = rd.number(e); }},
            });
        } else if (section.name.rfind("factor ", 0) == 0) {
            FactorSpec f;
            f.name = section.name.substr(7);
            rd.dispatch(section, {
                {"levels", [&](const IniEntry& e) { f.levels = split_list(e.value); }},
                {"probs", [&](const IniEntry& e) { f.probs = rd.numbers(e); }},
                {"log_hazard", [&](const IniEntry& e) { f.log_hazard = rd.numbers(e); }},
            });
            const std::string where = "line " + std::to_string(section.line) + ": [" + section.name + "] ";
            if (f.levels.empty() || f.probs.size() != f.levels.size() || f.log_hazard.size() != f.levels.size())
                rd.problems.push_back(where + "levels, probs and log_hazard must have equal non-zero length");
            double total = 0.0;
            for (double p : f.probs) {
                if (!(p > 0.0)) rd.problems.push_back(where + "probs must be positive");
                total += p;
            }
            if (std::abs(total - 1.0) > 1e-9) rd.problems.push_back(where + "probs must sum to 1");
            spec.factors.push_back(std::move(f));
        } else {
            rd.problems.push_back("line " + std::to_string(section.line) + ": unknown section [" + section.name + "]");
        }
    }
    if (!saw_dataset) rd.problems.push_back("missing [dataset] section");
    if (spec.n_per_arm < 1) rd.problems.push_back("n_per_arm must be at least 1");
    if (!(spec.shape > 0.0)) rd.problems.push_back("shape must be positive");
    if (!(spec.control_median > 0.0)) rd.problems.push_back("control_median must be positive");
    if (!(spec.hr > 0.0)) rd.problems.push_back("hr must be positive");
    if (spec.censor_after && !(*spec.censor_after > 0.0)) rd.problems.push_back("censor_after must be positive");
    rd.raise("invalid dataset config");
    return spec;
}

SurvivalSample generate_dataset(const DatasetSpec& spec)
{
    SplitMix64 level_rng = make_stream(spec.seed, "levels", 0);
    SplitMix64 time_rng = make_stream(spec.seed, "times", 0);
    const WeibullDist reference = weibull_from_median(spec.shape, spec.control_median);

    SurvivalSample sample;
    for (const auto& f : spec.factors) sample.factors.push_back(f.name);

    const auto draw_subject = [&](Arm arm) {
        Record r;
        r.arm = arm;
        double log_mult = 0.0;
        for (const auto& f : spec.factors) {
            const double u = level_rng.uniform();
            std::size_t k = 0;
            double acc = f.probs[0];
            while (k + 1 < f.levels.size() && u >= acc) acc += f.probs[++k];
            r.levels.push_back(f.levels[k]);
            log_mult += f.log_hazard[k];
        }
        // Hazard multiplier m rescales time by m^(-1/shape); the treated law
        // multiplies the hazard again by hr.
        double scale = reference.scale() * std::exp(-log_mult / spec.shape);
        if (arm == Arm::Rx) scale *= std::pow(spec.hr, -1.0 / spec.shape);
        r.time = WeibullDist(spec.shape, scale).sample(time_rng);
        r.event = true;
        if (spec.censor_after && r.time > *spec.censor_after) {
            r.time = *spec.censor_after;
            r.event = false;
        }
        return r;
    };

    for (std::size_t i = 0; i < spec.n_per_arm; ++i) sample.records.push_back(draw_subject(Arm::Rx));
    if (spec.mirror_arms) {
        for (std::size_t i = 0; i < spec.n_per_arm; ++i) {
            Record r = sample.records[i];
            r.arm = Arm::C;
            sample.records.push_back(std::move(r));
        }
    } else {
        for (std::size_t i = 0; i < spec.n_per_arm; ++i) sample.records.push_back(draw_subject(Arm::C));
    }
    return sample;
}

} // namespace survquack
