#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "templink/common.hpp"

namespace templink {

// Raw input tuple: nodes u,v were linked by a paper on day `day`.
struct TemporalRecord {
    std::int64_t u = 0;
    std::int64_t v = 0;
    std::int64_t day = 0;
};

struct IngestStats {
    std::size_t accepted = 0;
    std::size_t self_loops_rejected = 0;
};

class GraphView;

// Immutable multigraph over dense node ids with quantile-transformed times.
// Every record time lies in (0,1); node and edge time lists are sorted.
class TemporalGraph {
public:
    struct Rec {
        NodeId u, v;
        double t;
    };

    std::size_t n_nodes() const { return n_nodes_; }
    std::size_t n_records() const { return records_.size(); }
    std::size_t n_unique_edges() const { return edge_keys_.size(); }
    const std::vector<Rec>& records() const { return records_; }
    const IngestStats& stats() const { return stats_; }

    double birth(NodeId u) const { return (*birth_)[u]; }
    const std::vector<double>& births() const { return *birth_; }
    std::shared_ptr<const std::vector<double>> birth_handle() const { return birth_; }

    std::span<const double> node_times(NodeId u) const {
        return {node_time_values_.data() + node_time_offsets_[u],
                node_time_offsets_[u + 1] - node_time_offsets_[u]};
    }

    // Sorted times of the unordered edge {u,v}; empty if the edge never appears.
    std::span<const double> edge_times(NodeId u, NodeId v) const;

    // Unique undirected edges in canonical (min,max) order, ascending.
    std::size_t edge_count() const { return edge_keys_.size(); }
    std::pair<NodeId, NodeId> edge(std::size_t i) const {
        std::uint64_t k = edge_keys_[i];
        return {static_cast<NodeId>(k >> 32), static_cast<NodeId>(k & 0xffffffffULL)};
    }
    std::span<const double> edge_times_by_index(std::size_t i) const {
        return {edge_time_values_.data() + edge_time_offsets_[i],
                edge_time_offsets_[i + 1] - edge_time_offsets_[i]};
    }

    // Number of distinct record times s of node u with t_lo <= s < t_hi.
    // The upper bound is strict, matching the times_t(u) attribute rule.
    std::size_t paper_count(NodeId u, double t_lo, double t_hi) const;
    std::size_t paper_count(NodeId u, double t0) const { return paper_count(u, 0.0, t0); }

    // Window snapshot; edge membership is closed [t_a, t_b]. See GraphView.
    GraphView snapshot(double t_a, double t_b, bool directed = false) const;

    std::int64_t original_id(NodeId u) const { return original_ids_[u]; }
    const std::vector<std::int64_t>& original_ids() const { return original_ids_; }
    std::optional<NodeId> lookup(std::int64_t original) const {
        auto it = id_map_.find(original);
        if (it == id_map_.end()) return std::nullopt;
        return it->second;
    }

    friend TemporalGraph ingest(std::span<const TemporalRecord> recs);
    friend void save_graph(const TemporalGraph& g, const std::string& path);
    friend TemporalGraph load_graph(const std::string& path);

private:
    std::size_t n_nodes_ = 0;
    std::vector<Rec> records_;
    std::vector<std::size_t> node_time_offsets_;
    std::vector<double> node_time_values_;
    std::vector<std::uint64_t> edge_keys_;  // sorted canonical keys
    std::vector<std::size_t> edge_time_offsets_;
    std::vector<double> edge_time_values_;
    std::unordered_map<std::uint64_t, std::uint32_t> edge_index_;
    std::shared_ptr<std::vector<double>> birth_;
    std::vector<std::int64_t> original_ids_;
    std::unordered_map<std::int64_t, NodeId> id_map_;
    IngestStats stats_;

    void build_indices();
};

// Deduplicated, symmetric, self-loop-free adjacency over a time window.
// Directedness is derived, not stored: each undirected edge {u,v} is oriented
// u -> v iff (birth[u], u) < (birth[v], v), so out/in degrees are available on
// any view and out-neighbors + in-neighbors partition the undirected list.
class GraphView {
public:
    GraphView() = default;

    double t_a() const { return t_a_; }
    double t_b() const { return t_b_; }
    bool directed() const { return directed_; }

    std::size_t n_nodes() const { return present_.size(); }
    std::size_t n_present() const { return n_present_; }
    std::size_t n_edges() const { return adj_.size() / 2; }

    bool contains(NodeId u) const { return present_[u] != 0; }
    std::span<const NodeId> neighbors(NodeId u) const {
        return {adj_.data() + offsets_[u], offsets_[u + 1] - offsets_[u]};
    }
    std::size_t degree(NodeId u) const { return offsets_[u + 1] - offsets_[u]; }
    bool has_edge(NodeId u, NodeId v) const;

    bool precedes(NodeId u, NodeId v) const {
        double bu = (*birth_)[u], bv = (*birth_)[v];
        if (bu != bv) return bu < bv;
        return u < v;
    }
    std::size_t out_degree(NodeId u) const;
    std::size_t in_degree(NodeId u) const { return degree(u) - out_degree(u); }

    const std::vector<std::uint8_t>& present() const { return present_; }
    std::vector<NodeId> present_nodes() const;

    // Build a view directly from an undirected edge list over nodes 0..n-1.
    // All n nodes are marked present (isolated nodes allowed). Births default
    // to node-id order. Intended for tests and synthetic fixtures.
    static GraphView from_edges(std::size_t n,
                                const std::vector<std::pair<NodeId, NodeId>>& edges,
                                std::vector<double> births = {});

    friend class TemporalGraph;
    friend GraphView truncate_for_embedding(const TemporalGraph&, double, double,
                                            struct TruncationStats*);

private:
    double t_a_ = 0.0, t_b_ = 1.0;
    bool directed_ = false;
    std::vector<std::size_t> offsets_;
    std::vector<NodeId> adj_;
    std::vector<std::uint8_t> present_;
    std::size_t n_present_ = 0;
    std::shared_ptr<const std::vector<double>> birth_;

    void finalize(std::vector<std::vector<NodeId>>&& lists);
};

// Quantile-transform the day stamps and build the multigraph.
// t(d) = |{records with day' <= d}| / (N+1) over all accepted records with
// multiplicity, so t is monotone in day, equal days share t, and t in (0,1).
// Self-loops are rejected and counted in stats. Throws Error on empty input.
TemporalGraph ingest(std::span<const TemporalRecord> recs);

// Text: one `u<sep>v<sep>day` per line, sep in {comma, tab, space}; lines
// starting with '#' ignored. JSON: array of [u,v,day] triples (detected when
// the first non-space byte is '[').
std::vector<TemporalRecord> read_records_file(const std::string& path);
void write_records_file(const std::string& path, std::span<const TemporalRecord> recs);

void save_graph(const TemporalGraph& g, const std::string& path);
TemporalGraph load_graph(const std::string& path);

}  // namespace templink
