#include "templink/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "templink/cold_start.hpp"
#include "templink/dataset.hpp"
#include "templink/edge_features.hpp"
#include "templink/eval.hpp"
#include "templink/models.hpp"
#include "templink/node_features.hpp"
#include "templink/rng.hpp"
#include "templink/synthetic.hpp"
#include "templink/temporal_graph.hpp"

namespace templink {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t file_digest(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot digest missing file: " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (is) {
        is.read(buf, sizeof(buf));
        h = fnv1a64(buf, static_cast<std::size_t>(is.gcount()), h);
    }
    return h;
}

namespace {

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void require_artifact(const std::string& path, const std::string& what,
                      const std::string& producer) {
    if (!fs::exists(path))
        throw Error("missing " + what + " artifact '" + path + "' — run `" + producer +
                    "` first");
}

void write_manifest(const ArtifactPaths& art, const std::string& stage,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs, const json& params) {
    json m;
    m["stage"] = stage;
    m["params"] = params;
    m["inputs"] = json::object();
    for (const auto& p : inputs) m["inputs"][p] = hex64(file_digest(p));
    m["outputs"] = json::object();
    for (const auto& p : outputs) m["outputs"][p] = hex64(file_digest(p));
    std::ofstream os(art.manifest(stage));
    os << m.dump(2) << '\n';
}

EmbedParams embed_params(const PipelineConfig& cfg) {
    EmbedParams p;
    p.dim = cfg.embed_dim;
    p.max_hop = cfg.embed_max_hop;
    p.walks_per_node = cfg.embed_walks_per_node;
    p.negatives_per_positive = cfg.embed_negatives;
    p.margin = cfg.embed_margin;
    p.lr0 = cfg.embed_lr0;
    p.epochs = cfg.embed_epochs;
    p.seed = cfg.embed_seed;
    p.threads = cfg.effective_threads();
    return p;
}

ColdStartParams cold_start_params(const PipelineConfig& cfg) {
    ColdStartParams p;
    p.width = cfg.newborn_width;
    p.population = cfg.impute_population == "seen" ? ImputePopulation::Seen
                                                   : ImputePopulation::Newborn;
    return p;
}

}  // namespace

void stage_synth(const PipelineConfig& cfg) {
    ArtifactPaths art(cfg.out_dir);
    fs::create_directories(cfg.out_dir);
    SyntheticSpec spec;
    spec.n_nodes = cfg.synth_n_nodes;
    spec.horizon_days = cfg.synth_horizon_days;
    spec.visible_fraction = cfg.synth_visible_fraction;
    spec.edges_per_day = cfg.synth_edges_per_day;
    spec.closure_prob = cfg.synth_closure_prob;
    spec.n_test_pairs = cfg.synth_n_test_pairs;
    spec.unseen_pair_fraction = cfg.synth_unseen_pair_fraction;
    spec.seed = cfg.synth_seed;

    SyntheticData data = generate_synthetic(spec);
    write_records_file(art.records(), data.visible);
    write_pairs_file(art.test_pairs(), data.test_pairs);
    write_labels_file(art.test_labels(), data.test_labels);

    json params = {{"n_nodes", spec.n_nodes},
                   {"horizon_days", spec.horizon_days},
                   {"visible_fraction", spec.visible_fraction},
                   {"edges_per_day", spec.edges_per_day},
                   {"closure_prob", spec.closure_prob},
                   {"n_test_pairs", spec.n_test_pairs},
                   {"unseen_pair_fraction", spec.unseen_pair_fraction},
                   {"seed", spec.seed},
                   {"visible_records", data.visible.size()},
                   {"future_records", data.n_future_records},
                   {"unseen_test_pairs", data.n_unseen_test_pairs}};
    write_manifest(art, "synth", {}, {art.records(), art.test_pairs(), art.test_labels()},
                   params);
    std::cout << "synth: " << data.visible.size() << " visible records, "
              << data.test_pairs.size() << " test pairs (" << data.n_unseen_test_pairs
              << " touching unseen nodes)\n";
}

void stage_ingest(const PipelineConfig& cfg) {
    ArtifactPaths art(cfg.out_dir);
    fs::create_directories(cfg.out_dir);
    std::string records = cfg.records_file.empty() ? art.records() : cfg.records_file;
    require_artifact(records, "records", "synth (or point [paths] records at a file)");

    auto recs = read_records_file(records);
    TemporalGraph g = ingest(recs);
    save_graph(g, art.graph());

    json params = {{"records_file", records},
                   {"n_nodes", g.n_nodes()},
                   {"n_records", g.n_records()},
                   {"n_unique_edges", g.n_unique_edges()},
                   {"self_loops_rejected", g.stats().self_loops_rejected}};
    write_manifest(art, "ingest", {records}, {art.graph()}, params);
    std::cout << "ingest: " << g.n_nodes() << " nodes, " << g.n_records() << " records, "
              << g.n_unique_edges() << " unique edges";
    if (g.stats().self_loops_rejected)
        std::cout << " (" << g.stats().self_loops_rejected << " self-loops rejected)";
    std::cout << '\n';
}

void stage_features(const PipelineConfig& cfg) {
    ArtifactPaths art(cfg.out_dir);
    require_artifact(art.graph(), "graph", "ingest");
    TemporalGraph g = load_graph(art.graph());

    const int threads = cfg.threads;  // per-node outputs, schedule-independent
    FeatureContext train_ctx(g, cfg.t0, cfg.dt, PageRankParams{}, threads);
    FeatureMatrix train_fm = train_ctx.all_node_features(threads);
    write_feature_matrix(art.features_train(), train_fm, node_feature_names(), cfg.t0, cfg.dt);

    FeatureContext pred_ctx(g, 1.0, cfg.dt, PageRankParams{}, threads);
    FeatureMatrix pred_fm = pred_ctx.all_node_features(threads);
    write_feature_matrix(art.features_predict(), pred_fm, node_feature_names(), 1.0, cfg.dt);

    json params = {{"t0", cfg.t0}, {"dt", cfg.dt}, {"predict_t0", 1.0}, {"columns", 31}};
    write_manifest(art, "features", {art.graph()},
                   {art.features_train(), art.features_predict()}, params);
    std::cout << "features: " << train_fm.rows << " nodes x " << train_fm.cols
              << " at t0=" << cfg.t0 << " and t=1.0\n";
}

void stage_embed(const PipelineConfig& cfg) {
    ArtifactPaths art(cfg.out_dir);
    require_artifact(art.graph(), "graph", "ingest");
    TemporalGraph g = load_graph(art.graph());
    EmbedParams p = embed_params(cfg);

    TruncationStats train_stats;
    GraphView train_view = truncate_for_embedding(g, cfg.t_cut, cfg.t0, &train_stats);
    EmbeddingTable train_tbl = train_embeddings(train_view, p);
    save_embeddings(train_tbl, art.embeddings_train());

    TruncationStats pred_stats;
    GraphView pred_view = truncate_for_embedding(g, cfg.t_cut, 1.0, &pred_stats);
    EmbeddingTable pred_tbl = train_embeddings(pred_view, p);
    save_embeddings(pred_tbl, art.embeddings_predict());

    json params = {{"dim", p.dim},
                   {"max_hop", p.max_hop},
                   {"walks_per_node", p.walks_per_node},
                   {"negatives", p.negatives_per_positive},
                   {"margin", p.margin},
                   {"epochs", p.epochs},
                   {"seed", p.seed},
                   {"t_cut", cfg.t_cut},
                   {"train_edge_removed_fraction", train_stats.edge_removed_fraction()},
                   {"train_node_removed_fraction", train_stats.node_removed_fraction()},
                   {"predict_edge_removed_fraction", pred_stats.edge_removed_fraction()},
                   {"predict_node_removed_fraction", pred_stats.node_removed_fraction()},
                   {"train_first_epoch_loss",
                    train_tbl.epoch_loss().empty() ? 0.0 : train_tbl.epoch_loss().front()},
                   {"train_last_epoch_loss",
                    train_tbl.epoch_loss().empty() ? 0.0 : train_tbl.epoch_loss().back()}};
    write_manifest(art, "embed", {art.graph()},
                   {art.embeddings_train(), art.embeddings_predict()}, params);
    std::cout << "embed: dim " << p.dim << ", truncation at t=" << cfg.t_cut << " removed "
              << 100.0 * pred_stats.edge_removed_fraction() << "% of edges, "
              << 100.0 * pred_stats.node_removed_fraction() << "% of nodes\n";
}

void stage_build_dataset(const PipelineConfig& cfg) {
    ArtifactPaths art(cfg.out_dir);
    require_artifact(art.graph(), "graph", "ingest");
    require_artifact(art.features_train(), "node features", "features");
    require_artifact(art.embeddings_train(), "embeddings", "embed");

    TemporalGraph g = load_graph(art.graph());
    FeatureMatrix fm = read_feature_matrix(art.features_train());
    EmbeddingTable emb = load_embeddings(art.embeddings_train());
    GraphView t0_view = g.snapshot(0.0, cfg.t0);
    ImputedDefaults defaults =
        build_imputed_defaults(g, t0_view, fm, emb, cfg.t0, cold_start_params(cfg));
    {
        std::ofstream os(art.imputed_defaults());
        os << defaults.to_json_string() << '\n';
    }

    PairFeatureBuilder builder(g, t0_view, fm, emb, defaults, cfg.imputation);
    DatasetParams dp;
    dp.t0 = cfg.t0;
    dp.inject_fraction = cfg.inject_fraction;
    dp.k_folds = cfg.k_folds;
    dp.fit_fraction = cfg.fit_fraction;
    dp.seed = cfg.data_seed;
    dp.imputation_enabled = cfg.imputation;
    TrainingSet ts = build_training_set(g, builder, dp);
    save_training_set(ts, art.dataset());

    json params = {{"t0", dp.t0},
                   {"inject_fraction", dp.inject_fraction},
                   {"k_folds", dp.k_folds},
                   {"fit_fraction", dp.fit_fraction},
                   {"seed", dp.seed},
                   {"imputation", cfg.imputation},
                   {"population", cfg.impute_population},
                   {"rows", ts.n_rows},
                   {"base_positives", ts.n_base_positives},
                   {"base_negatives", ts.n_base_negatives},
                   {"injected_positives", ts.n_injected_positives},
                   {"injected_negatives", ts.n_injected_negatives},
                   {"injection_shortfall", ts.injection_shortfall}};
    write_manifest(art, "build-dataset",
                   {art.graph(), art.features_train(), art.embeddings_train()},
                   {art.dataset(), art.imputed_defaults()}, params);
    std::cout << "build-dataset: " << ts.n_rows << " rows (" << ts.n_base_positives << "+"
              << ts.n_base_negatives << " base, " << ts.n_injected_positives << "+"
              << ts.n_injected_negatives << " injected)";
    if (ts.injection_shortfall) std::cout << "  [warning: injection shortfall]";
    std::cout << '\n';
}

void stage_train(const PipelineConfig& cfg) {
    ArtifactPaths art(cfg.out_dir);
    require_artifact(art.dataset(), "dataset", "build-dataset");
    TrainingSet ts = load_training_set(art.dataset());

    std::vector<double> Xs = ts.standardized();
    auto fit_rows = ts.split.rows_not_in_fold(0);
    auto val_rows = ts.split.rows_in_fold(0);

    const std::size_t d = ts.n_cols;
    std::vector<double> X_fit(fit_rows.size() * d), X_val(val_rows.size() * d);
    std::vector<std::uint8_t> y_fit(fit_rows.size()), y_val(val_rows.size());
    for (std::size_t i = 0; i < fit_rows.size(); ++i) {
        std::copy_n(Xs.begin() + fit_rows[i] * d, d, X_fit.begin() + i * d);
        y_fit[i] = ts.y[fit_rows[i]];
    }
    for (std::size_t i = 0; i < val_rows.size(); ++i) {
        std::copy_n(Xs.begin() + val_rows[i] * d, d, X_val.begin() + i * d);
        y_val[i] = ts.y[val_rows[i]];
    }
    ConstMatrixMap Xf(X_fit.data(), static_cast<Eigen::Index>(fit_rows.size()),
                      static_cast<Eigen::Index>(d));

    ModelBundle bundle;
    bundle.scaler_mean = ts.scaler.mean;
    bundle.scaler_stdev = ts.scaler.stdev;
    bundle.n_scaled = ts.scaler.n_scaled;

    json params = {{"classifier", cfg.classifier}, {"fit_rows", fit_rows.size()},
                   {"val_rows", val_rows.size()}};
    if (cfg.classifier == "logistic") {
        LogisticParams lp;
        lp.l2 = cfg.logistic_l2;
        bundle.type = ModelBundle::Type::Logistic;
        bundle.logistic = train_logistic(Xf, y_fit, lp);
        params["iterations"] = bundle.logistic.iterations;
        params["final_loss"] = bundle.logistic.final_loss;
        std::cout << "train: logistic, " << bundle.logistic.iterations
                  << " iterations, loss " << bundle.logistic.final_loss << '\n';
        auto report = feature_report(bundle.logistic, pair_feature_names());
        std::cout << "  top weights:\n";
        for (std::size_t i = 0; i < std::min<std::size_t>(8, report.size()); ++i)
            std::cout << "    " << report[i].name << " = " << report[i].weight << '\n';
    } else {
        MlpParams mp;
        mp.hidden = cfg.arch;
        mp.lr = cfg.mlp_lr;
        mp.batch = cfg.mlp_batch;
        mp.max_epochs = cfg.mlp_max_epochs;
        mp.patience = cfg.mlp_patience;
        mp.weight_decay = cfg.mlp_weight_decay;
        mp.seed = cfg.model_seed;
        bundle.type = ModelBundle::Type::Mlp;
        bundle.mlp = train_mlp(Xf, y_fit, mp, X_val.data(), val_rows.size(), y_val.data());
        params["epochs_run"] = bundle.mlp.epochs_run;
        params["best_val_loss"] = bundle.mlp.best_val_loss;
        std::cout << "train: mlp";
        for (int h : cfg.arch) std::cout << " " << h;
        std::cout << ", " << bundle.mlp.epochs_run << " epochs, val loss "
                  << bundle.mlp.best_val_loss << '\n';
    }
    save_model(bundle, art.model());
    write_manifest(art, "train", {art.dataset()}, {art.model()}, params);
}

std::vector<double> stage_predict(const PipelineConfig& cfg,
                                  const std::string& artifact_suffix) {
    ArtifactPaths art(cfg.out_dir);
    require_artifact(art.graph(), "graph", "ingest");
    require_artifact(art.features_predict(), "node features", "features");
    require_artifact(art.embeddings_predict(), "embeddings", "embed");
    require_artifact(art.model(), "model", "train");
    std::string pairs_path = cfg.pairs_file.empty() ? art.test_pairs() : cfg.pairs_file;
    require_artifact(pairs_path, "pairs", "synth (or point [paths] pairs at a file)");

    TemporalGraph g = load_graph(art.graph());
    FeatureMatrix fm = read_feature_matrix(art.features_predict());
    EmbeddingTable emb = load_embeddings(art.embeddings_predict());
    ModelBundle model = load_model(art.model());
    auto pairs = read_pairs_file(pairs_path);
    if (pairs.empty()) throw Error("predict: empty pairs file");

    // Prediction-time reference is the end of the data (t = 1): every known
    // node is seen; unknown ids are the cold-start cases.
    const double t_ref = 1.0;
    GraphView view = g.snapshot(0.0, t_ref);
    ColdStartParams cs = cold_start_params(cfg);
    ImputedDefaults defaults = build_imputed_defaults(g, view, fm, emb, t_ref, cs);
    PairFeatureBuilder builder(g, view, fm, emb, defaults, cfg.imputation);

    const std::size_t n = pairs.size();
    std::vector<double> X(n * kPairFeatureDim);
    const int threads = cfg.threads;
    parallel_for(n, threads, [&](int, std::size_t i) {
        auto [ou, ov] = pairs[i];
        auto lu = g.lookup(ou), lv = g.lookup(ov);
        NodeId u = lu.value_or(0), v = lv.value_or(0);
        PairFeature f = builder.row(u, lu.has_value(), v, lv.has_value());
        std::copy(f.begin(), f.end(), X.begin() + i * kPairFeatureDim);
    });

    Scaler scaler;
    scaler.mean = model.scaler_mean;
    scaler.stdev = model.scaler_stdev;
    scaler.n_scaled = model.n_scaled;
    if (!scaler.mean.empty()) scaler.apply(X.data(), n, kPairFeatureDim);

    ConstMatrixMap Xm(X.data(), static_cast<Eigen::Index>(n), kPairFeatureDim);
    Eigen::VectorXd proba = model.predict(Xm);
    std::vector<double> scores(proba.data(), proba.data() + proba.size());

    RankingSubmission sub = rank_pairs(scores);
    std::string scores_path = art.scores() + artifact_suffix;
    std::string submission_path = art.submission() + artifact_suffix;
    write_scores_csv(scores_path, scores, pairs);
    write_submission_json(submission_path, sub);

    json params = {{"pairs_file", pairs_path},
                   {"n_pairs", n},
                   {"imputation", cfg.imputation},
                   {"t_ref", t_ref}};
    write_manifest(art, "predict" + artifact_suffix,
                   {art.graph(), art.features_predict(), art.embeddings_predict(), art.model(),
                    pairs_path},
                   {scores_path, submission_path}, params);
    std::cout << "predict: scored " << n << " pairs -> " << scores_path << '\n';
    return scores;
}

namespace {

std::vector<double> read_scores_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open scores file: " + path);
    std::vector<double> out;
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::size_t comma = line.rfind(',');
        if (comma == std::string::npos) throw Error("malformed scores row: " + line);
        out.push_back(std::stod(line.substr(comma + 1)));
    }
    return out;
}

}  // namespace

void stage_evaluate(const PipelineConfig& cfg, const std::vector<std::string>& score_files,
                    const std::vector<std::string>& names) {
    ArtifactPaths art(cfg.out_dir);
    std::string labels_path = cfg.labels_file.empty() ? art.test_labels() : cfg.labels_file;
    require_artifact(labels_path, "labels", "synth (or point [paths] labels at a file)");
    auto labels = read_labels_file(labels_path);

    std::vector<std::string> files = score_files;
    if (files.empty()) {
        require_artifact(art.scores(), "scores", "predict");
        files.push_back(art.scores());
    }

    std::vector<std::pair<std::string, AucReport>> reports;
    std::vector<std::string> inputs = {labels_path};
    for (std::size_t i = 0; i < files.size(); ++i) {
        auto scores = read_scores_csv(files[i]);
        if (scores.size() != labels.size())
            throw Error("evaluate: " + files[i] + " has " + std::to_string(scores.size()) +
                        " scores but labels file has " + std::to_string(labels.size()));
        std::string name = i < names.size() ? names[i] : files[i];
        reports.emplace_back(name, auc(scores, labels));
        inputs.push_back(files[i]);
    }
    ModelComparison cmp = compare_models(reports);
    write_report_json(art.report(), cmp);
    write_manifest(art, "evaluate", inputs, {art.report()},
                   json{{"labels", labels_path}, {"n_models", files.size()}});
    for (const auto& e : cmp.entries)
        std::cout << (e.best ? "  * " : "    ") << e.name << "  AUC=" << e.report.auc
                  << "  (P=" << e.report.n_pos << ", N=" << e.report.n_neg << ")\n";
    if (cmp.tie_for_best) std::cout << "    (tie for best)\n";
}

std::size_t stage_reproduce_check(const PipelineConfig& cfg) {
    ArtifactPaths art(cfg.out_dir);
    PipelineConfig run = cfg;
    run.deterministic = true;
    stage_predict(run, ".rc1");
    stage_predict(run, ".rc2");
    auto a = read_submission_json(art.submission() + ".rc1");
    auto b = read_submission_json(art.submission() + ".rc2");
    if (a.size() != b.size())
        throw Error("reproduce-check: submissions differ in length");
    std::size_t mismatches = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) ++mismatches;
    const double identical =
        a.empty() ? 1.0 : 1.0 - static_cast<double>(mismatches) / static_cast<double>(a.size());
    std::cout << "reproduce-check: " << 100.0 * identical << "% identical ranking ("
              << mismatches << " mismatches of " << a.size() << ")\n";
    return mismatches;
}

}  // namespace templink
