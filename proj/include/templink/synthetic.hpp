#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "templink/temporal_graph.hpp"

namespace templink {

// Growing-network generator with a planted triadic-closure signal: each day
// new nodes attach uniformly and `edges_per_day` events either close a random
// wedge (probability closure_prob) or join a uniform pair. Future edges close
// triangles preferentially, so common-neighbor features are predictive; with
// closure_prob = 0 every edge is uniform and nothing is learnable.
struct SyntheticSpec {
    std::size_t n_nodes = 2000;
    int horizon_days = 1000;
    double visible_fraction = 0.8;      // records before this cut form the training stream
    int edges_per_day = 30;
    double closure_prob = 0.9;
    std::size_t n_test_pairs = 20000;   // half future-positives, half never-edges
    double unseen_pair_fraction = 0.0;  // test pairs forced to touch a future-born node
    std::uint64_t seed = 7;
};

struct SyntheticData {
    std::vector<TemporalRecord> visible;
    std::vector<std::pair<std::int64_t, std::int64_t>> test_pairs;
    std::vector<std::uint8_t> test_labels;
    std::size_t n_future_records = 0;
    std::size_t n_unseen_test_pairs = 0;  // pairs with a node outside the visible stream
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

void write_labels_file(const std::string& path, std::span<const std::uint8_t> labels);
std::vector<std::uint8_t> read_labels_file(const std::string& path);

}  // namespace templink
