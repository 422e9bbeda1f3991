#include "spde/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "spde/experiments.hpp"

namespace spde {

namespace {

const std::vector<std::pair<std::string, std::string>>& common_defaults() {
    static const std::vector<std::pair<std::string, std::string>> d{
        {"nx", "64"},         {"nt", "1024"},      {"T", "0.25"},       {"family", "additive"},
        {"family_params", ""}, {"cutoff", "5"},    {"u0_amplitude", "1"}, {"seeds", "1..1"},
        {"out_dir", "out"},   {"threads", "1"},
    };
    return d;
}

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    if (trim(s).empty()) return out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(trim(item));
    return out;
}

double to_number(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(t, &used);
    } catch (const std::exception&) {
        throw ConfigError("config: '" + key + "' expects a number, got '" + text + "'");
    }
    if (used != t.size() || !std::isfinite(v)) {
        throw ConfigError("config: '" + key + "' expects a finite number, got '" + text + "'");
    }
    return v;
}

int to_integer(const std::string& key, const std::string& text) {
    const double v = to_number(key, text);
    if (v != std::floor(v) || std::abs(v) > 2e9) {
        throw ConfigError("config: '" + key + "' expects an integer, got '" + text + "'");
    }
    return static_cast<int>(v);
}

std::vector<std::pair<std::string, std::string>> parse_lines(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::stringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: line " + std::to_string(number) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError("config: line " + std::to_string(number) + ": empty key");
        out.emplace_back(key, trim(line.substr(eq + 1)));
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> parse_json(const std::string& text) {
    nlohmann::ordered_json doc;
    try {
        doc = nlohmann::ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config: JSON config must be an object");
    std::vector<std::pair<std::string, std::string>> out;
    auto scalar = [](const nlohmann::ordered_json& v) -> std::string {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
        if (v.is_number_integer()) return std::to_string(v.get<long long>());
        if (v.is_number()) {
            std::ostringstream s;
            s.precision(17);
            s << v.get<double>();
            return s.str();
        }
        throw ConfigError("config: unsupported JSON value " + v.dump());
    };
    for (const auto& [key, v] : doc.items()) {
        if (v.is_array()) {
            std::string joined;
            for (std::size_t i = 0; i < v.size(); ++i) joined += (i ? "," : "") + scalar(v[i]);
            out.emplace_back(key, joined);
        } else {
            out.emplace_back(key, scalar(v));
        }
    }
    return out;
}

void assign(RunConfig& c, const std::string& key, const std::string& value) {
    if (key == "nx") {
        c.grid.nx = to_integer(key, value);
    } else if (key == "nt") {
        c.grid.nt = to_integer(key, value);
    } else if (key == "T") {
        c.grid.T = to_number(key, value);
    } else if (key == "family") {
        c.family = value;
    } else if (key == "family_params") {
        c.family_params.clear();
        for (const auto& s : split_list(value)) c.family_params.push_back(to_number(key, s));
    } else if (key == "cutoff") {
        c.cutoff = to_number(key, value);
    } else if (key == "u0_amplitude") {
        c.u0_amplitude = to_number(key, value);
    } else if (key == "seeds") {
        c.seeds = parse_seed_range(value);
    } else if (key == "out_dir") {
        c.out_dir = value;
    } else if (key == "threads") {
        c.threads = to_integer(key, value);
    } else {
        c.knobs[key] = value;
    }
}

RunConfig build(const std::vector<std::pair<std::string, std::string>>& entries) {
    std::set<std::string> seen;
    std::string experiment;
    for (const auto& [k, v] : entries) {
        if (!seen.insert(k).second) throw ConfigError("config: duplicate key '" + k + "'");
        if (k == "experiment") experiment = v;
    }
    if (experiment.empty()) throw ConfigError("config: missing 'experiment'");
    const ExperimentInfo* info = nullptr;
    try {
        info = &find_experiment(experiment);
    } catch (const ConfigError&) {
        throw;
    }
    RunConfig c;
    c.experiment = experiment;
    for (const auto& [k, v] : common_defaults()) assign(c, k, v);
    for (const auto& [k, v] : info->base_defaults) assign(c, k, v);
    for (const auto& knob : info->knobs) c.knobs[knob.key] = knob.default_value;
    for (const auto& [k, v] : entries) {
        if (k == "experiment") continue;
        assign(c, k, v);
    }
    c.entries = entries;
    validate_config(c);
    return c;
}

}  // namespace

SeedRange SeedRange::prefix(std::size_t count) const {
    if (count == 0 || count > size()) throw std::invalid_argument("SeedRange::prefix: bad count");
    return {first, first + count - 1};
}

SeedRange parse_seed_range(const std::string& text) {
    const std::string t = trim(text);
    SeedRange r;
    try {
        const auto dots = t.find("..");
        if (dots == std::string::npos) {
            r.first = r.last = parse_seed(t);
        } else {
            r.first = parse_seed(trim(t.substr(0, dots)));
            r.last = parse_seed(trim(t.substr(dots + 2)));
        }
    } catch (const std::exception&) {
        throw ConfigError("config: seeds must look like 'a..b', got '" + text + "'");
    }
    if (r.last < r.first) throw ConfigError("config: seed range '" + text + "' is empty");
    return r;
}

std::string format_seed_range(const SeedRange& range) {
    return std::to_string(range.first) + ".." + std::to_string(range.last);
}

double RunConfig::number(const std::string& key) const { return to_number(key, text(key)); }

int RunConfig::integer(const std::string& key) const { return to_integer(key, text(key)); }

std::vector<double> RunConfig::numbers(const std::string& key) const {
    std::vector<double> out;
    for (const auto& s : split_list(text(key))) out.push_back(to_number(key, s));
    return out;
}

std::vector<int> RunConfig::integers(const std::string& key) const {
    std::vector<int> out;
    for (const auto& s : split_list(text(key))) out.push_back(to_integer(key, s));
    return out;
}

const std::string& RunConfig::text(const std::string& key) const {
    const auto it = knobs.find(key);
    if (it == knobs.end()) throw ConfigError("config: experiment '" + experiment + "' has no key '" + key + "'");
    return it->second;
}

std::string RunConfig::canonical() const {
    std::ostringstream s;
    s.precision(17);
    s << "experiment=" << experiment << "\n";
    s << "nx=" << grid.nx << "\nnt=" << grid.nt << "\nT=" << grid.T << "\n";
    s << "family=" << family << "\nfamily_params=";
    for (std::size_t i = 0; i < family_params.size(); ++i) s << (i ? "," : "") << family_params[i];
    s << "\ncutoff=" << cutoff << "\nu0_amplitude=" << u0_amplitude << "\n";
    s << "seeds=" << format_seed_range(seeds) << "\n";
    for (const auto& [k, v] : knobs) s << k << "=" << v << "\n";
    return s.str();
}

RunConfig parse_config(const std::string& text) {
    const std::string t = trim(text);
    return build(!t.empty() && t.front() == '{' ? parse_json(t) : parse_lines(text));
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
    assign(config, key, value);
    validate_config(config);
}

void validate_config(const RunConfig& c) {
    const ExperimentInfo& info = find_experiment(c.experiment);
    try {
        c.grid.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: grid invalid (") + e.what() + ")");
    }
    if (c.threads < 1) throw ConfigError("config: threads must be >= 1");
    if (!(c.cutoff > 0.0)) throw ConfigError("config: cutoff level must be positive");
    if (c.seeds.last < c.seeds.first) throw ConfigError("config: seed range is empty");
    std::set<std::string> known;
    for (const auto& k : info.knobs) known.insert(k.key);
    for (const auto& [k, v] : c.knobs) {
        if (!known.count(k)) {
            throw ConfigError("config: unknown key '" + k + "' for experiment '" + c.experiment + "'");
        }
        for (const auto& s : split_list(v)) to_number(k, s);
    }
    CoefficientPair pair;
    try {
        pair = c.pair();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: coefficients: ") + e.what());
    }
    const auto us = linspace(-(c.cutoff + 1.0), c.cutoff + 1.0, 49);
    const auto xs = linspace(0.0, 1.0, 11);
    const AssumptionReport report = validate_assumptions(pair, us, xs);
    if (!report.passed) {
        std::string msg = "config: coefficients: assumptions violated";
        for (const auto& v : report.violations) msg += "; " + v;
        throw ConfigError(msg);
    }
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace spde
