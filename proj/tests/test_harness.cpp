#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include "oracles.hpp"
#include "templink/config.hpp"
#include "templink/pipeline.hpp"
#include "templink/synthetic.hpp"

using namespace templink;
namespace fs = std::filesystem;

TEST_CASE("config parser: sections, types, comments, arrays") {
    auto cf = ConfigFile::parse_string(R"(
# top comment
[pipeline]
t0 = 0.85            # inline comment
k_folds = 5
imputation = false
impute_population = "seen"

[model]
arch = [16, 16, 16]
classifier = "logistic"
)");
    CHECK(cf.get_double("pipeline", "t0", 0.9) == doctest::Approx(0.85));
    CHECK(cf.get_int("pipeline", "k_folds", 4) == 5);
    CHECK_FALSE(cf.get_bool("pipeline", "imputation", true));
    CHECK(cf.get_string("pipeline", "impute_population", "newborn") == "seen");
    CHECK(cf.get_int_list("model", "arch", {}) == std::vector<int>{16, 16, 16});
    CHECK(cf.get_string("model", "classifier", "mlp") == "logistic");
    CHECK(cf.get_int("missing", "key", 42) == 42);

    auto cfg = PipelineConfig::from_config(cf);
    CHECK(cfg.t0 == doctest::Approx(0.85));
    CHECK(cfg.k_folds == 5);
    CHECK(cfg.classifier == "logistic");
    CHECK(cfg.arch == std::vector<int>{16, 16, 16});
}

TEST_CASE("config validation rejects bad values") {
    auto cf = ConfigFile::parse_string("[pipeline]\nt0 = 0.2\ndt = 0.15\n");
    CHECK_THROWS_AS(PipelineConfig::from_config(cf), Error);
    auto cf2 = ConfigFile::parse_string("[model]\nclassifier = \"svm\"\n");
    CHECK_THROWS_AS(PipelineConfig::from_config(cf2), Error);
}

TEST_CASE("environment variables override config values") {
    auto cf = ConfigFile::parse_string("[pipeline]\nt0 = 0.9\n");
    setenv("TEMPLINK_PIPELINE_T0", "0.8", 1);
    setenv("TEMPLINK_EMBED_DIM", "16", 1);
    cf.apply_env_overrides();
    unsetenv("TEMPLINK_PIPELINE_T0");
    unsetenv("TEMPLINK_EMBED_DIM");
    auto cfg = PipelineConfig::from_config(cf);
    CHECK(cfg.t0 == doctest::Approx(0.8));
    CHECK(cfg.embed_dim == 16);
}

TEST_CASE("synthetic generator is deterministic per seed") {
    SyntheticSpec spec;
    spec.n_nodes = 200;
    spec.horizon_days = 150;
    spec.edges_per_day = 6;
    spec.seed = 12;
    auto a = generate_synthetic(spec);
    auto b = generate_synthetic(spec);
    REQUIRE(a.visible.size() == b.visible.size());
    for (std::size_t i = 0; i < a.visible.size(); ++i) {
        CHECK(a.visible[i].u == b.visible[i].u);
        CHECK(a.visible[i].v == b.visible[i].v);
        CHECK(a.visible[i].day == b.visible[i].day);
    }
    CHECK(a.test_pairs == b.test_pairs);
    CHECK(a.test_labels == b.test_labels);

    spec.seed = 13;
    auto c = generate_synthetic(spec);
    CHECK(a.visible.size() != c.visible.size());  // different stream shape almost surely
}

TEST_CASE("synthetic test pairs are balanced, labeled correctly, and days increase") {
    SyntheticSpec spec;
    spec.n_nodes = 300;
    spec.horizon_days = 200;
    spec.edges_per_day = 8;
    spec.n_test_pairs = 400;
    spec.unseen_pair_fraction = 0.3;
    spec.seed = 44;
    auto data = generate_synthetic(spec);

    std::size_t pos = 0;
    for (auto l : data.test_labels) pos += l;
    CHECK(pos * 2 == data.test_labels.size());  // balanced

    CHECK(data.n_unseen_test_pairs >=
          static_cast<std::size_t>(0.2 * static_cast<double>(data.test_pairs.size())));

    long last_day = -1;
    std::set<std::uint64_t> visible_edges;
    for (const auto& r : data.visible) {
        CHECK(r.day >= last_day);
        last_day = r.day;
        visible_edges.insert(
            canonical_edge_key(static_cast<NodeId>(r.u), static_cast<NodeId>(r.v)));
    }
    // no test pair may already be connected in the visible stream
    for (auto [u, v] : data.test_pairs)
        CHECK(visible_edges.count(
                  canonical_edge_key(static_cast<NodeId>(u), static_cast<NodeId>(v))) == 0);
}

namespace {

PipelineConfig small_pipeline_config(const std::string& out_dir) {
    PipelineConfig cfg;
    cfg.out_dir = out_dir;
    cfg.synth_n_nodes = 400;
    cfg.synth_horizon_days = 300;
    cfg.synth_edges_per_day = 10;
    cfg.synth_n_test_pairs = 600;
    cfg.synth_seed = 3;
    cfg.embed_dim = 16;
    cfg.embed_epochs = 4;
    cfg.embed_walks_per_node = 6;
    cfg.mlp_max_epochs = 60;
    cfg.t_cut = 0.4;
    return cfg;
}

}  // namespace

TEST_CASE("stages demand their upstream artifacts by name") {
    auto dir = (fs::temp_directory_path() / "templink_stage_errors").string();
    fs::remove_all(dir);
    fs::create_directories(dir);
    PipelineConfig cfg = small_pipeline_config(dir);

    CHECK_THROWS_WITH_AS(stage_features(cfg),
                         doctest::Contains("run `ingest` first"), Error);
    CHECK_THROWS_WITH_AS(stage_train(cfg),
                         doctest::Contains("run `build-dataset` first"), Error);
    fs::remove_all(dir);
}

TEST_CASE("full pipeline runs end to end on a small synthetic graph") {
    auto dir = (fs::temp_directory_path() / "templink_pipeline_smoke").string();
    fs::remove_all(dir);
    PipelineConfig cfg = small_pipeline_config(dir);

    stage_synth(cfg);
    stage_ingest(cfg);
    stage_features(cfg);
    stage_embed(cfg);
    stage_build_dataset(cfg);
    stage_train(cfg);
    auto scores = stage_predict(cfg);
    CHECK(scores.size() == 600);
    stage_evaluate(cfg);

    ArtifactPaths art(dir);
    CHECK(fs::exists(art.graph()));
    CHECK(fs::exists(art.dataset()));
    CHECK(fs::exists(art.model()));
    CHECK(fs::exists(art.submission()));
    CHECK(fs::exists(art.report()));
    CHECK(fs::exists(art.manifest("ingest")));
    CHECK(fs::exists(art.manifest("predict")));

    // manifests chain: the features manifest records the graph digest
    std::ifstream is(art.manifest("features"));
    std::string body((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    CHECK(body.find("graph.bin") != std::string::npos);

    // reproduce-check: identical artifacts, identical ranking
    CHECK(stage_reproduce_check(cfg) == 0);
    fs::remove_all(dir);
}

TEST_CASE("rerunning a stage with identical inputs yields identical artifacts") {
    auto dir = (fs::temp_directory_path() / "templink_stage_rerun").string();
    fs::remove_all(dir);
    PipelineConfig cfg = small_pipeline_config(dir);
    stage_synth(cfg);
    stage_ingest(cfg);
    ArtifactPaths art(dir);
    auto d1 = file_digest(art.graph());
    stage_ingest(cfg);
    CHECK(file_digest(art.graph()) == d1);

    stage_features(cfg);
    auto f1 = file_digest(art.features_train());
    stage_features(cfg);
    CHECK(file_digest(art.features_train()) == f1);

    stage_embed(cfg);
    auto e1 = file_digest(art.embeddings_train());
    stage_embed(cfg);
    CHECK(file_digest(art.embeddings_train()) == e1);
    fs::remove_all(dir);
}
