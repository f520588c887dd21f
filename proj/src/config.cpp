#include "templink/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

extern char** environ;

namespace templink {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::string strip_inline_comment(const std::string& s) {
    bool in_str = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') in_str = !in_str;
        if (s[i] == '#' && !in_str) return s.substr(0, i);
    }
    return s;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

ConfigFile ConfigFile::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file: " + path);
    std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_string(body);
}

ConfigFile ConfigFile::parse_string(const std::string& body) {
    ConfigFile cf;
    std::istringstream ss(body);
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        line = trim(strip_inline_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw Error("config line " + std::to_string(lineno) + ": malformed section");
            section = lower(trim(line.substr(1, line.size() - 2)));
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw Error("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = lower(trim(line.substr(0, eq)));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw Error("config line " + std::to_string(lineno) + ": empty key or value");
        cf.values_[section][key] = value;
    }
    return cf;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
    auto s = values_.find(section);
    return s != values_.end() && s->second.count(key) > 0;
}

void ConfigFile::set(const std::string& section, const std::string& key,
                     const std::string& raw) {
    values_[section][key] = raw;
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key,
                                   const std::string& def) const {
    auto s = values_.find(section);
    if (s == values_.end()) return def;
    auto k = s->second.find(key);
    if (k == s->second.end()) return def;
    std::string v = k->second;
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
    return v;
}

std::int64_t ConfigFile::get_int(const std::string& section, const std::string& key,
                                 std::int64_t def) const {
    if (!has(section, key)) return def;
    std::string v = get_string(section, key, "");
    try {
        return std::stoll(v);
    } catch (...) {
        throw Error("config [" + section + "] " + key + ": expected integer, got '" + v + "'");
    }
}

double ConfigFile::get_double(const std::string& section, const std::string& key,
                              double def) const {
    if (!has(section, key)) return def;
    std::string v = get_string(section, key, "");
    try {
        return std::stod(v);
    } catch (...) {
        throw Error("config [" + section + "] " + key + ": expected number, got '" + v + "'");
    }
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key, bool def) const {
    if (!has(section, key)) return def;
    std::string v = lower(get_string(section, key, ""));
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw Error("config [" + section + "] " + key + ": expected boolean, got '" + v + "'");
}

std::vector<int> ConfigFile::get_int_list(const std::string& section, const std::string& key,
                                          const std::vector<int>& def) const {
    if (!has(section, key)) return def;
    std::string v = get_string(section, key, "");
    std::string raw = trim(v);
    if (raw.size() < 2 || raw.front() != '[' || raw.back() != ']')
        throw Error("config [" + section + "] " + key + ": expected [a, b, ...]");
    raw = raw.substr(1, raw.size() - 2);
    for (auto& c : raw)
        if (c == ',') c = ' ';
    std::istringstream ss(raw);
    std::vector<int> out;
    int x;
    while (ss >> x) out.push_back(x);
    return out;
}

void ConfigFile::apply_env_overrides() {
    for (char** e = environ; e && *e; ++e) {
        std::string entry(*e);
        if (entry.rfind("TEMPLINK_", 0) != 0) continue;
        std::size_t eq = entry.find('=');
        if (eq == std::string::npos) continue;
        std::string name = entry.substr(9, eq - 9);  // SECTION_KEY
        std::string value = entry.substr(eq + 1);
        std::size_t us = name.find('_');
        if (us == std::string::npos || us == 0 || us + 1 >= name.size()) continue;
        set(lower(name.substr(0, us)), lower(name.substr(us + 1)), value);
    }
}

PipelineConfig PipelineConfig::from_config(const ConfigFile& cf) {
    PipelineConfig c;
    c.records_file = cf.get_string("paths", "records", c.records_file);
    c.pairs_file = cf.get_string("paths", "pairs", c.pairs_file);
    c.labels_file = cf.get_string("paths", "labels", c.labels_file);
    c.out_dir = cf.get_string("paths", "out_dir", c.out_dir);

    c.t0 = cf.get_double("pipeline", "t0", c.t0);
    c.dt = cf.get_double("pipeline", "dt", c.dt);
    c.newborn_width = cf.get_double("pipeline", "newborn_width", c.newborn_width);
    c.t_cut = cf.get_double("pipeline", "t_cut", c.t_cut);
    c.inject_fraction = cf.get_double("pipeline", "inject_fraction", c.inject_fraction);
    c.fit_fraction = cf.get_double("pipeline", "fit_fraction", c.fit_fraction);
    c.k_folds = static_cast<int>(cf.get_int("pipeline", "k_folds", c.k_folds));
    c.imputation = cf.get_bool("pipeline", "imputation", c.imputation);
    c.impute_population = cf.get_string("pipeline", "impute_population", c.impute_population);
    c.threads = static_cast<int>(cf.get_int("pipeline", "threads", c.threads));
    c.deterministic = cf.get_bool("pipeline", "deterministic", c.deterministic);

    c.data_seed = static_cast<std::uint64_t>(cf.get_int("data", "seed",
                                                        static_cast<std::int64_t>(c.data_seed)));

    c.embed_dim = static_cast<int>(cf.get_int("embed", "dim", c.embed_dim));
    c.embed_max_hop = static_cast<int>(cf.get_int("embed", "max_hop", c.embed_max_hop));
    c.embed_walks_per_node =
        static_cast<int>(cf.get_int("embed", "walks_per_node", c.embed_walks_per_node));
    c.embed_negatives = static_cast<int>(cf.get_int("embed", "negatives", c.embed_negatives));
    c.embed_margin = cf.get_double("embed", "margin", c.embed_margin);
    c.embed_lr0 = cf.get_double("embed", "lr0", c.embed_lr0);
    c.embed_epochs = static_cast<int>(cf.get_int("embed", "epochs", c.embed_epochs));
    c.embed_seed = static_cast<std::uint64_t>(
        cf.get_int("embed", "seed", static_cast<std::int64_t>(c.embed_seed)));

    c.classifier = cf.get_string("model", "classifier", c.classifier);
    c.arch = cf.get_int_list("model", "arch", c.arch);
    c.mlp_lr = cf.get_double("model", "lr", c.mlp_lr);
    c.mlp_batch = static_cast<int>(cf.get_int("model", "batch", c.mlp_batch));
    c.mlp_max_epochs = static_cast<int>(cf.get_int("model", "max_epochs", c.mlp_max_epochs));
    c.mlp_patience = static_cast<int>(cf.get_int("model", "patience", c.mlp_patience));
    c.mlp_weight_decay = cf.get_double("model", "weight_decay", c.mlp_weight_decay);
    c.logistic_l2 = cf.get_double("model", "l2", c.logistic_l2);
    c.model_seed = static_cast<std::uint64_t>(
        cf.get_int("model", "seed", static_cast<std::int64_t>(c.model_seed)));

    c.synth_n_nodes = static_cast<std::size_t>(
        cf.get_int("synth", "n_nodes", static_cast<std::int64_t>(c.synth_n_nodes)));
    c.synth_horizon_days =
        static_cast<int>(cf.get_int("synth", "horizon_days", c.synth_horizon_days));
    c.synth_visible_fraction =
        cf.get_double("synth", "visible_fraction", c.synth_visible_fraction);
    c.synth_edges_per_day =
        static_cast<int>(cf.get_int("synth", "edges_per_day", c.synth_edges_per_day));
    c.synth_closure_prob = cf.get_double("synth", "closure_prob", c.synth_closure_prob);
    c.synth_n_test_pairs = static_cast<std::size_t>(
        cf.get_int("synth", "n_test_pairs", static_cast<std::int64_t>(c.synth_n_test_pairs)));
    c.synth_unseen_pair_fraction =
        cf.get_double("synth", "unseen_pair_fraction", c.synth_unseen_pair_fraction);
    c.synth_seed = static_cast<std::uint64_t>(
        cf.get_int("synth", "seed", static_cast<std::int64_t>(c.synth_seed)));

    if (!(c.t0 - 2.0 * c.dt > 0.0)) throw Error("config: need t0 - 2*dt > 0");
    auto in01 = [](double x) { return x >= 0.0 && x <= 1.0; };
    if (!in01(c.inject_fraction) || !in01(c.fit_fraction) || !in01(c.t_cut))
        throw Error("config: fractions must lie in [0,1]");
    if (c.classifier != "mlp" && c.classifier != "logistic")
        throw Error("config: classifier must be 'mlp' or 'logistic'");
    if (c.impute_population != "newborn" && c.impute_population != "seen")
        throw Error("config: impute_population must be 'newborn' or 'seen'");
    return c;
}

}  // namespace templink
