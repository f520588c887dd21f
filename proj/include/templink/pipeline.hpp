#pragma once

#include <string>
#include <vector>

#include "templink/config.hpp"

namespace templink {

// Artifact layout inside the output directory. Every stage writes its files
// plus `<stage>.manifest.json` carrying input/output digests, so reruns can
// be audited end to end.
struct ArtifactPaths {
    std::string dir;
    explicit ArtifactPaths(std::string out_dir) : dir(std::move(out_dir)) {}

    std::string records() const { return dir + "/records.txt"; }
    std::string test_pairs() const { return dir + "/test_pairs.txt"; }
    std::string test_labels() const { return dir + "/test_labels.txt"; }
    std::string graph() const { return dir + "/graph.bin"; }
    std::string features_train() const { return dir + "/node_features_train.bin"; }
    std::string features_predict() const { return dir + "/node_features_predict.bin"; }
    std::string embeddings_train() const { return dir + "/embeddings_train.bin"; }
    std::string embeddings_predict() const { return dir + "/embeddings_predict.bin"; }
    std::string imputed_defaults() const { return dir + "/imputed_defaults_train.json"; }
    std::string dataset() const { return dir + "/dataset.bin"; }
    std::string model() const { return dir + "/model.bin"; }
    std::string scores() const { return dir + "/scores.csv"; }
    std::string submission() const { return dir + "/submission.json"; }
    std::string report() const { return dir + "/report.json"; }
    std::string manifest(const std::string& stage) const {
        return dir + "/" + stage + ".manifest.json";
    }
};

void stage_synth(const PipelineConfig& cfg);
void stage_ingest(const PipelineConfig& cfg);
void stage_features(const PipelineConfig& cfg);
void stage_embed(const PipelineConfig& cfg);
void stage_build_dataset(const PipelineConfig& cfg);
void stage_train(const PipelineConfig& cfg);
// Returns the scores in pairs-file order; writes scores.csv + submission.json.
std::vector<double> stage_predict(const PipelineConfig& cfg,
                                  const std::string& artifact_suffix = "");
void stage_evaluate(const PipelineConfig& cfg,
                    const std::vector<std::string>& score_files = {},
                    const std::vector<std::string>& names = {});
// Runs predict twice and compares the submissions entry by entry; returns the
// number of mismatching rank positions (0 means fully reproducible).
std::size_t stage_reproduce_check(const PipelineConfig& cfg);

std::uint64_t file_digest(const std::string& path);

}  // namespace templink
