#include "survquack/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "survquack/error.hpp"

namespace survquack {

namespace {

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_fields(const std::string& line)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

bool parse_double(const std::string& s, double& out)
{
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

} // namespace

LoadedDataset read_dataset(std::istream& in)
{
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++lineno;
        if (!trim(line).empty()) {
            header = split_fields(line);
            break;
        }
    }
    if (header.empty()) throw ValidationError("dataset schema error: missing header row");

    int col_time = -1, col_event = -1, col_arm = -1;
    std::vector<std::pair<std::size_t, std::string>> strata_cols;
    std::vector<std::string> schema_problems;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const auto& h = header[i];
        const auto claim = [&](int& slot) {
            if (slot >= 0) schema_problems.push_back("duplicate column '" + h + "'");
            slot = static_cast<int>(i);
        };
        if (h == "time")
            claim(col_time);
        else if (h == "event")
            claim(col_event);
        else if (h == "arm")
            claim(col_arm);
        else if (h.rfind("s:", 0) == 0 && h.size() > 2)
            strata_cols.emplace_back(i, h.substr(2));
        else
            schema_problems.push_back("unknown column '" + h + "' (strata columns are named s:<factor>)");
    }
    if (col_time < 0) schema_problems.push_back("missing required column 'time'");
    if (col_event < 0) schema_problems.push_back("missing required column 'event'");
    if (col_arm < 0) schema_problems.push_back("missing required column 'arm'");
    if (!schema_problems.empty()) {
        std::ostringstream os;
        os << "dataset schema error (line " << lineno << "):";
        for (const auto& p : schema_problems) os << "\n  - " << p;
        throw ValidationError(os.str());
    }

    LoadedDataset out;
    for (const auto& [_, name] : strata_cols) out.sample.factors.push_back(name);

    std::vector<std::string> errors;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) {
            ++out.blank_lines;
            continue;
        }
        ++out.data_lines;
        const auto fields = split_fields(line);
        const auto fail = [&](const std::string& msg) { errors.push_back("line " + std::to_string(lineno) + ": " + msg); };
        if (fields.size() != header.size()) {
            fail("expected " + std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
            continue;
        }
        Record r;
        double t = 0.0;
        if (!parse_double(fields[static_cast<std::size_t>(col_time)], t) || !(t > 0.0) || !std::isfinite(t)) {
            fail("time '" + fields[static_cast<std::size_t>(col_time)] + "' is not a positive number");
            continue;
        }
        r.time = t;
        const auto& ev = fields[static_cast<std::size_t>(col_event)];
        if (ev == "1")
            r.event = true;
        else if (ev == "0")
            r.event = false;
        else {
            fail("event '" + ev + "' must be 0 or 1");
            continue;
        }
        const auto& arm = fields[static_cast<std::size_t>(col_arm)];
        if (arm == "Rx")
            r.arm = Arm::Rx;
        else if (arm == "C")
            r.arm = Arm::C;
        else {
            fail("arm '" + arm + "' must be Rx or C");
            continue;
        }
        bool ok = true;
        for (const auto& [col, name] : strata_cols) {
            if (fields[col].empty()) {
                fail("empty level for factor '" + name + "'");
                ok = false;
                break;
            }
            r.levels.push_back(fields[col]);
        }
        if (ok) out.sample.records.push_back(std::move(r));
    }

    if (!errors.empty()) {
        std::ostringstream os;
        os << errors.size() << " unparseable row(s):";
        for (std::size_t i = 0; i < errors.size() && i < 50; ++i) os << "\n  " << errors[i];
        if (errors.size() > 50) os << "\n  ... " << errors.size() - 50 << " more";
        throw ValidationError(os.str());
    }
    if (out.sample.records.empty()) throw ValidationError("dataset has no data rows");
    return out;
}

LoadedDataset read_dataset_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open dataset '" + path + "'");
    return read_dataset(in);
}

void write_dataset(std::ostream& out, const SurvivalSample& sample)
{
    out << "time,event,arm";
    for (const auto& f : sample.factors) out << ",s:" << f;
    out << '\n';
    char buf[64];
    for (const auto& r : sample.records) {
        std::snprintf(buf, sizeof buf, "%.10g", r.time);
        out << buf << ',' << (r.event ? 1 : 0) << ',' << to_string(r.arm);
        for (const auto& l : r.levels) out << ',' << l;
        out << '\n';
    }
}

} // namespace survquack
