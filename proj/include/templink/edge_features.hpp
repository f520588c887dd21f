#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "templink/temporal_graph.hpp"

namespace templink {

struct EdgeFeaturePair {
    double hoprec = 0.0;  // cosine similarity in [-1,1]
    double dice = 0.0;    // in [0,1]
};

// Exact integer numerator/denominator of a Dice-style ratio. The numerator
// already carries the factor 2.
struct DiceRatio {
    std::uint64_t num = 0;
    std::uint64_t den = 0;
    double value() const { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); }
};

// dice(u,v) = 2|N(u) ∩ N(v)| / (|N(u)| + |N(v)|); 0 on empty neighborhoods.
double dice(const GraphView& view, NodeId u, NodeId v);

// d(u,V) = 2 Σ_{v∈V} |N(u) ∩ N(v)| / (|N(u)|·|V| + Σ_v |N(v)|).
// u is dropped from V if present. Computed with one flag pass over N(u) and
// one sweep over the adjacency rows of V, never per-pair.
DiceRatio dice_node_set(const GraphView& view, NodeId u, std::span<const NodeId> V);

// d(V,V) = 2 Σ_w C(k_w,2) / (Σ_w k_w · (|V|-1)) with k_w = |N(w) ∩ V|,
// summing over all nodes w. One pass over the adjacency rows of V.
DiceRatio dice_set_set(const GraphView& view, std::span<const NodeId> V);

struct TruncationStats {
    std::size_t edges_total = 0, edges_removed = 0;
    std::size_t nodes_total = 0, nodes_removed = 0;
    double edge_removed_fraction() const {
        return edges_total ? static_cast<double>(edges_removed) / edges_total : 0.0;
    }
    double node_removed_fraction() const {
        return nodes_total ? static_cast<double>(nodes_removed) / nodes_total : 0.0;
    }
};

// View over the graph up to t_hi keeping exactly the edges with at least one
// record time in [t_cut, t_hi] (edges that re-appeared survive). Removed
// fractions are reported against the [0, t_hi] graph.
GraphView truncate_for_embedding(const TemporalGraph& g, double t_cut, double t_hi = 1.0,
                                 TruncationStats* stats = nullptr);

struct EmbedParams {
    int dim = 128;
    int max_hop = 3;                  // positives from walks of length <= max_hop
    int walks_per_node = 10;
    int negatives_per_positive = 5;
    double margin = 0.5;              // skip the update once cos_pos - cos_neg >= margin
    double lr0 = 0.025;               // linearly decayed to lr0 * lr_floor_ratio
    double lr_floor_ratio = 1e-4;
    int epochs = 10;
    std::uint64_t seed = 1;
    int threads = 1;                  // >1: parallel sampling, serial updates

    std::uint64_t digest() const;
};

// Per-node unit-norm embeddings from hop-weighted ranking training. Nodes
// absent from the training view have no vector (explicit missing state).
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    EmbeddingTable(std::size_t n_nodes, int dim);

    int dim() const { return dim_; }
    std::size_t n_nodes() const { return row_of_node_.size(); }
    std::size_t n_vectors() const { return n_rows_; }
    bool has_vector(NodeId u) const { return row_of_node_[u] >= 0; }
    std::span<const double> vector(NodeId u) const;
    std::span<double> mutable_vector(NodeId u);
    void add_vector(NodeId u);

    // Epoch-averaged training loss, one entry per epoch.
    const std::vector<double>& epoch_loss() const { return epoch_loss_; }
    std::uint64_t seed() const { return seed_; }
    double trained_t_cut() const { return t_cut_; }
    double trained_t_hi() const { return t_hi_; }

    friend EmbeddingTable train_embeddings(const GraphView& view, const EmbedParams& p);
    friend void save_embeddings(const EmbeddingTable& tbl, const std::string& path);
    friend EmbeddingTable load_embeddings(const std::string& path);
    void set_window(double t_cut, double t_hi) { t_cut_ = t_cut; t_hi_ = t_hi; }

private:
    int dim_ = 0;
    std::size_t n_rows_ = 0;
    std::vector<std::int32_t> row_of_node_;
    std::vector<double> data_;  // n_rows x dim, row-major
    std::vector<double> epoch_loss_;
    std::uint64_t seed_ = 0;
    std::uint64_t params_digest_ = 0;
    double t_cut_ = 0.0, t_hi_ = 1.0;
};

// Hop-weighted pairwise ranking trainer. Positives (s,c) are drawn from
// random walks of length <= max_hop with weight 1/k at hop k; negatives are
// sampled uniformly over present nodes. For each (positive, negative) the
// update is sigmoid-ranking on the cosine gap, skipped once the gap reaches
// the margin, and the touched vectors are re-normalized to unit length.
// Deterministic given the seed; with threads > 1, sampling is parallel and
// updates stay serial, so results are seed-stable per thread count.
EmbeddingTable train_embeddings(const GraphView& view, const EmbedParams& p);

// Cosine similarity of the trained vectors; 0 if either vector is all-zero.
// Throws MissingEmbeddingError when a node has no vector.
double hoprec_score(const EmbeddingTable& tbl, NodeId u, NodeId v);
std::optional<double> try_hoprec_score(const EmbeddingTable& tbl, NodeId u, NodeId v);

double cosine(std::span<const double> a, std::span<const double> b);

void save_embeddings(const EmbeddingTable& tbl, const std::string& path);
EmbeddingTable load_embeddings(const std::string& path);

}  // namespace templink
