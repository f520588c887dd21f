#include "templink/synthetic.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "templink/rng.hpp"

namespace templink {

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    if (spec.n_nodes < 8 || spec.horizon_days < 10)
        throw Error("generate_synthetic: spec too small");
    if (!(spec.visible_fraction > 0.0 && spec.visible_fraction < 1.0))
        throw Error("generate_synthetic: visible_fraction must be in (0,1)");

    Rng rng(spec.seed);
    const int visible_cut =
        static_cast<int>(spec.visible_fraction * static_cast<double>(spec.horizon_days));

    // Node i first appears on day i * horizon / n, so arrivals continue into
    // the future window and produce genuinely unseen nodes.
    std::vector<int> birth_day(spec.n_nodes);
    for (std::size_t i = 0; i < spec.n_nodes; ++i)
        birth_day[i] = static_cast<int>((static_cast<std::uint64_t>(i) *
                                         static_cast<std::uint64_t>(spec.horizon_days)) /
                                        spec.n_nodes);

    std::vector<TemporalRecord> all;
    std::vector<std::vector<NodeId>> adj(spec.n_nodes);
    std::unordered_map<std::uint64_t, int> first_day;  // unordered pair -> first day
    std::vector<NodeId> active;
    std::size_t next_node = 0;

    auto add_record = [&](NodeId u, NodeId v, int day) {
        all.push_back({static_cast<std::int64_t>(u), static_cast<std::int64_t>(v), day});
        std::uint64_t key = canonical_edge_key(u, v);
        if (first_day.emplace(key, day).second) {
            adj[u].push_back(v);
            adj[v].push_back(u);
        }
    };

    for (int day = 0; day < spec.horizon_days; ++day) {
        while (next_node < spec.n_nodes && birth_day[next_node] <= day) {
            NodeId fresh = static_cast<NodeId>(next_node++);
            if (!active.empty()) {
                NodeId target = active[rng.below(active.size())];
                add_record(fresh, target, day);
            }
            active.push_back(fresh);
        }
        if (active.size() < 3) continue;

        for (int e = 0; e < spec.edges_per_day; ++e) {
            bool closed = false;
            if (rng.uniform() < spec.closure_prob) {
                // close a wedge: two distinct neighbors of a random node
                for (int attempt = 0; attempt < 10 && !closed; ++attempt) {
                    NodeId w = active[rng.below(active.size())];
                    if (adj[w].size() < 2) continue;
                    std::size_t a = rng.below(adj[w].size());
                    std::size_t b = rng.below(adj[w].size());
                    if (a == b) continue;
                    add_record(adj[w][a], adj[w][b], day);
                    closed = true;
                }
            }
            if (!closed) {
                NodeId u = active[rng.below(active.size())];
                NodeId v = active[rng.below(active.size())];
                if (u == v) continue;
                add_record(u, v, day);
            }
        }
    }

    SyntheticData out;
    for (const auto& r : all) {
        if (r.day < visible_cut)
            out.visible.push_back(r);
        else
            ++out.n_future_records;
    }
    if (out.visible.empty()) throw Error("generate_synthetic: empty visible stream");

    std::unordered_set<NodeId> visible_nodes;
    for (const auto& r : out.visible) {
        visible_nodes.insert(static_cast<NodeId>(r.u));
        visible_nodes.insert(static_cast<NodeId>(r.v));
    }
    auto is_unseen = [&](NodeId u) { return visible_nodes.count(u) == 0; };

    // Future positives: first connected at or after the cut.
    std::vector<std::pair<NodeId, NodeId>> pos_seen, pos_unseen;
    for (const auto& [key, day] : first_day) {
        if (day < visible_cut) continue;
        NodeId u = static_cast<NodeId>(key >> 32), v = static_cast<NodeId>(key & 0xffffffffULL);
        (is_unseen(u) || is_unseen(v) ? pos_unseen : pos_seen).emplace_back(u, v);
    }
    auto canon_less = [](const std::pair<NodeId, NodeId>& a, const std::pair<NodeId, NodeId>& b) {
        return a < b;
    };
    std::sort(pos_seen.begin(), pos_seen.end(), canon_less);
    std::sort(pos_unseen.begin(), pos_unseen.end(), canon_less);
    rng.shuffle(pos_seen);
    rng.shuffle(pos_unseen);

    const std::size_t n_pos_target = spec.n_test_pairs / 2;
    const std::size_t pos_unseen_target = static_cast<std::size_t>(
        spec.unseen_pair_fraction * static_cast<double>(n_pos_target));

    std::vector<std::pair<NodeId, NodeId>> pairs;
    std::vector<std::uint8_t> labels;
    std::size_t unseen_count = 0;
    std::size_t take_unseen = std::min(pos_unseen_target, pos_unseen.size());
    for (std::size_t i = 0; i < take_unseen; ++i) {
        pairs.push_back(pos_unseen[i]);
        labels.push_back(1);
        ++unseen_count;
    }
    for (std::size_t i = 0; i < pos_seen.size() && pairs.size() < n_pos_target; ++i) {
        pairs.push_back(pos_seen[i]);
        labels.push_back(1);
    }
    const std::size_t n_pos = pairs.size();

    // Negatives: never connected over the whole horizon.
    const std::size_t n_neg_target = n_pos;  // keep the test set balanced
    const std::size_t neg_unseen_target = static_cast<std::size_t>(
        spec.unseen_pair_fraction * static_cast<double>(n_neg_target));
    std::vector<NodeId> unseen_pool;
    for (std::size_t u = 0; u < spec.n_nodes; ++u)
        if (is_unseen(static_cast<NodeId>(u)) && birth_day[u] < spec.horizon_days)
            unseen_pool.push_back(static_cast<NodeId>(u));

    std::unordered_set<std::uint64_t> taken;
    std::size_t n_neg = 0, attempts = 0;
    const std::size_t max_attempts = 400 * n_neg_target + 1000;
    while (n_neg < n_neg_target && attempts++ < max_attempts) {
        NodeId u, v;
        bool want_unseen = (n_neg < neg_unseen_target) && !unseen_pool.empty();
        if (want_unseen) {
            u = unseen_pool[rng.below(unseen_pool.size())];
            v = active[rng.below(active.size())];
        } else {
            u = active[rng.below(active.size())];
            v = active[rng.below(active.size())];
        }
        if (u == v) continue;
        std::uint64_t key = canonical_edge_key(u, v);
        if (first_day.count(key) || taken.count(key)) continue;
        taken.insert(key);
        pairs.emplace_back(std::min(u, v), std::max(u, v));
        labels.push_back(0);
        if (want_unseen) ++unseen_count;
        ++n_neg;
    }

    // Interleave deterministically so ranks are not trivially grouped by label.
    std::vector<std::size_t> order(pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    out.test_pairs.reserve(pairs.size());
    out.test_labels.reserve(pairs.size());
    for (std::size_t i : order) {
        out.test_pairs.emplace_back(static_cast<std::int64_t>(pairs[i].first),
                                    static_cast<std::int64_t>(pairs[i].second));
        out.test_labels.push_back(labels[i]);
    }
    out.n_unseen_test_pairs = unseen_count;
    return out;
}

void write_labels_file(const std::string& path, std::span<const std::uint8_t> labels) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write labels file: " + path);
    for (auto l : labels) os << static_cast<int>(l) << '\n';
}

std::vector<std::uint8_t> read_labels_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open labels file: " + path);
    std::vector<std::uint8_t> out;
    int v;
    while (is >> v) out.push_back(static_cast<std::uint8_t>(v != 0));
    return out;
}

}  // namespace templink
