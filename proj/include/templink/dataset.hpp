#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "templink/cold_start.hpp"
#include "templink/edge_features.hpp"
#include "templink/node_features.hpp"
#include "templink/temporal_graph.hpp"

namespace templink {

inline constexpr std::size_t kPairFeatureDim = 64;   // min(31) | max(31) | hoprec | dice
inline constexpr std::size_t kScaledColumns = 62;    // edge columns stay raw

using PairFeature = std::array<double, kPairFeatureDim>;

// Fixed layout [element-wise min, element-wise max, hoprec, dice]; symmetric
// under swapping the two node vectors.
PairFeature pair_features(std::span<const double> fu, std::span<const double> fv,
                          const EdgeFeaturePair& edge);

const std::vector<std::string>& pair_feature_names();

// Unordered pairs whose earliest edge time is strictly after t0 with both
// endpoints born by t0, in canonical (min,max) ascending order.
std::vector<std::pair<NodeId, NodeId>> collect_positives(const TemporalGraph& g, double t0);

// Uniform rejection sample of n distinct unordered pairs over the nodes born
// by t0 that are non-edges in the final graph. Deterministic per seed.
std::vector<std::pair<NodeId, NodeId>> sample_negatives(const TemporalGraph& g, double t0,
                                                        std::size_t n, std::uint64_t seed);

// Per-column standardization statistics over the first n_scaled columns;
// zero-variance columns map to 0 (std floored at 1e-12).
struct Scaler {
    std::vector<double> mean, stdev;
    std::size_t n_scaled = kScaledColumns;

    void apply(double* X, std::size_t rows, std::size_t cols) const;
    void invert(double* X, std::size_t rows, std::size_t cols) const;
};

Scaler fit_scaler(const double* X, std::size_t cols, std::span<const std::size_t> fit_rows,
                  std::size_t n_scaled = kScaledColumns);

struct SplitPlan {
    int k = 4;
    double fit_fraction = 0.75;
    std::vector<int> fold;  // per-row fold id in [0, k)

    std::vector<std::size_t> rows_in_fold(int f) const;
    std::vector<std::size_t> rows_not_in_fold(int f) const;
};

// Class-stratified fold assignment, deterministic per seed; every fold's
// class count is within 1 of the exact proportional share.
SplitPlan stratified_kfold(std::span<const std::uint8_t> y, int k, std::uint64_t seed);

// Everything needed to turn a (u,v) pair into a 64-feature row, routing
// unseen endpoints through imputation.
class PairFeatureBuilder {
public:
    PairFeatureBuilder(const TemporalGraph& g, const GraphView& t0_view,
                       const FeatureMatrix& node_features, const EmbeddingTable& emb,
                       const ImputedDefaults& defaults, bool imputation_enabled = true);

    // Seen endpoints are looked up; unseen ones (unknown id or born after t0)
    // use the imputed node mean and the Eq.-style edge fallbacks. With
    // imputation disabled, unseen parts are zero-filled.
    PairFeature row(NodeId u, bool u_seen, NodeId v, bool v_seen) const;
    PairFeature row_seen(NodeId u, NodeId v) const { return row(u, true, v, true); }

    EdgeFeaturePair edge_features(NodeId u, bool u_seen, NodeId v, bool v_seen) const;

private:
    const TemporalGraph* g_;
    const GraphView* view_;
    const FeatureMatrix* feats_;
    const EmbeddingTable* emb_;
    const ImputedDefaults* defaults_;
    bool imputation_enabled_;
};

struct DatasetParams {
    double t0 = 0.9;
    double inject_fraction = 0.07;
    int k_folds = 4;
    double fit_fraction = 0.75;
    std::uint64_t seed = 13;
    bool imputation_enabled = true;
    std::size_t max_negative_attempts_factor = 200;
};

struct TrainingSet {
    std::size_t n_rows = 0, n_cols = kPairFeatureDim;
    std::vector<double> X;  // raw (unscaled), row-major
    std::vector<std::uint8_t> y;
    std::vector<std::pair<NodeId, NodeId>> pair_ids;
    std::size_t n_base_positives = 0, n_base_negatives = 0;
    std::size_t n_injected_positives = 0, n_injected_negatives = 0;
    bool injection_shortfall = false;
    Scaler scaler;
    SplitPlan split;

    // Standardized copy of X using the stored scaler.
    std::vector<double> standardized() const;
};

// Positives + equal sampled negatives + the unseen-seen injection, folds, and
// a scaler fit on the rows outside fold 0 (the fit partition).
TrainingSet build_training_set(const TemporalGraph& g, const PairFeatureBuilder& builder,
                               const DatasetParams& params);

void save_training_set(const TrainingSet& ts, const std::string& path);
TrainingSet load_training_set(const std::string& path);

// Prediction-pair input: one `u<sep>v` per line (original node ids).
std::vector<std::pair<std::int64_t, std::int64_t>> read_pairs_file(const std::string& path);
void write_pairs_file(const std::string& path,
                      std::span<const std::pair<std::int64_t, std::int64_t>> pairs);

}  // namespace templink
