#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "templink/common.hpp"

namespace templink {

// Minimal TOML subset: [sections], `key = value` with string/int/float/bool
// and flat integer arrays, `#` comments. Enough for per-stage pipeline
// sections; nested tables are out of scope.
class ConfigFile {
public:
    ConfigFile() = default;
    static ConfigFile parse_file(const std::string& path);
    static ConfigFile parse_string(const std::string& body);

    bool has(const std::string& section, const std::string& key) const;
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& def) const;
    std::int64_t get_int(const std::string& section, const std::string& key,
                         std::int64_t def) const;
    double get_double(const std::string& section, const std::string& key, double def) const;
    bool get_bool(const std::string& section, const std::string& key, bool def) const;
    std::vector<int> get_int_list(const std::string& section, const std::string& key,
                                  const std::vector<int>& def) const;

    void set(const std::string& section, const std::string& key, const std::string& raw);

    // Environment overrides: TEMPLINK_<SECTION>_<KEY> replaces [section] key.
    void apply_env_overrides();

private:
    std::map<std::string, std::map<std::string, std::string>> values_;
};

// Resolved pipeline configuration; every knob defaults to the artifact's
// standard constants and can be overridden per section.
struct PipelineConfig {
    // [paths]
    std::string records_file;
    std::string pairs_file;
    std::string labels_file;
    std::string out_dir = "out";

    // [pipeline]
    double t0 = 0.9;
    double dt = 0.15;
    double newborn_width = 0.1;
    double t_cut = 0.5;
    double inject_fraction = 0.07;
    double fit_fraction = 0.75;
    int k_folds = 4;
    bool imputation = true;
    std::string impute_population = "newborn";  // or "seen"
    int threads = 1;
    bool deterministic = true;

    // [data]
    std::uint64_t data_seed = 101;

    // [embed]
    int embed_dim = 128;
    int embed_max_hop = 3;
    int embed_walks_per_node = 10;
    int embed_negatives = 5;
    double embed_margin = 0.5;
    double embed_lr0 = 0.025;
    int embed_epochs = 10;
    std::uint64_t embed_seed = 202;

    // [model]
    std::string classifier = "mlp";  // or "logistic"
    std::vector<int> arch = {13, 13, 13, 13, 13};
    double mlp_lr = 1e-3;
    int mlp_batch = 200;
    int mlp_max_epochs = 200;
    int mlp_patience = 10;
    double mlp_weight_decay = 1e-4;
    double logistic_l2 = 1.0;
    std::uint64_t model_seed = 303;

    // [synth]
    std::size_t synth_n_nodes = 2000;
    int synth_horizon_days = 1000;
    double synth_visible_fraction = 0.8;
    int synth_edges_per_day = 30;
    double synth_closure_prob = 0.9;
    std::size_t synth_n_test_pairs = 20000;
    double synth_unseen_pair_fraction = 0.0;
    std::uint64_t synth_seed = 7;

    int effective_threads() const { return deterministic ? 1 : threads; }

    static PipelineConfig from_config(const ConfigFile& cf);
};

}  // namespace templink
