#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "templink/config.hpp"
#include "templink/pipeline.hpp"
#include "templink/rng.hpp"

using namespace templink;

int main(int argc, char** argv) {
    CLI::App app{"templink — temporal semantic-network link prediction pipeline"};
    app.require_subcommand(1);

    std::string config_path, records, pairs, labels, out_dir;
    std::int64_t seed = -1;
    int threads = 0;
    bool deterministic = false;
    app.add_option("--config", config_path, "TOML config file");
    app.add_option("--seed", seed, "master seed; derives the data/embed/model/synth seeds");
    app.add_option("--threads", threads, "worker threads (deterministic mode forces 1)");
    app.add_flag("--deterministic", deterministic, "single-threaded, bit-stable artifacts");
    app.add_option("--records", records, "records file (overrides [paths] records)");
    app.add_option("--pairs", pairs, "prediction pairs file (overrides [paths] pairs)");
    app.add_option("--labels", labels, "labels file for evaluate (overrides [paths] labels)");
    app.add_option("--out", out_dir, "output directory (overrides [paths] out_dir)");

    auto* synth = app.add_subcommand("synth", "generate a synthetic benchmark");
    auto* ing = app.add_subcommand("ingest", "read records and build the temporal graph");
    auto* feat = app.add_subcommand("features", "compute 31-dim node features");
    auto* embed = app.add_subcommand("embed", "train random-walk embeddings");
    auto* build = app.add_subcommand("build-dataset", "assemble the training set");
    auto* train = app.add_subcommand("train", "fit the classifier");
    auto* predict = app.add_subcommand("predict", "score and rank candidate pairs");
    auto* evaluate = app.add_subcommand("evaluate", "AUC report against labels");
    auto* repro = app.add_subcommand("reproduce-check", "run predict twice and compare");

    std::vector<std::string> score_files, score_names;
    evaluate->add_option("--scores", score_files, "scores.csv files to compare");
    evaluate->add_option("--names", score_names, "display names for the score files");

    CLI11_PARSE(app, argc, argv);

    try {
        ConfigFile cf = config_path.empty() ? ConfigFile() : ConfigFile::parse_file(config_path);
        cf.apply_env_overrides();
        if (!records.empty()) cf.set("paths", "records", records);
        if (!pairs.empty()) cf.set("paths", "pairs", pairs);
        if (!labels.empty()) cf.set("paths", "labels", labels);
        if (!out_dir.empty()) cf.set("paths", "out_dir", out_dir);
        if (threads > 0) cf.set("pipeline", "threads", std::to_string(threads));
        if (deterministic) cf.set("pipeline", "deterministic", "true");
        if (seed >= 0) {
            auto s = static_cast<std::uint64_t>(seed);
            cf.set("data", "seed", std::to_string(derive_seed(s, 1) >> 1));
            cf.set("embed", "seed", std::to_string(derive_seed(s, 2) >> 1));
            cf.set("model", "seed", std::to_string(derive_seed(s, 3) >> 1));
            cf.set("synth", "seed", std::to_string(derive_seed(s, 4) >> 1));
        }
        PipelineConfig cfg = PipelineConfig::from_config(cf);

        if (synth->parsed()) stage_synth(cfg);
        if (ing->parsed()) stage_ingest(cfg);
        if (feat->parsed()) stage_features(cfg);
        if (embed->parsed()) stage_embed(cfg);
        if (build->parsed()) stage_build_dataset(cfg);
        if (train->parsed()) stage_train(cfg);
        if (predict->parsed()) stage_predict(cfg);
        if (evaluate->parsed()) stage_evaluate(cfg, score_files, score_names);
        if (repro->parsed()) {
            if (stage_reproduce_check(cfg) != 0) return 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
