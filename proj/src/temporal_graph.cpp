#include "templink/temporal_graph.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace templink {

namespace {

// Binary graph dump layout (little-endian):
//   magic "TLGR" | u32 version | u64 n_nodes | u64 n_records | u64 self_loops
//   i64 original_id[n_nodes]
//   (u32 u, u32 v, f64 t)[n_records]
constexpr char kGraphMagic[4] = {'T', 'L', 'G', 'R'};
constexpr std::uint32_t kGraphVersion = 1;

template <typename T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

}  // namespace

TemporalGraph ingest(std::span<const TemporalRecord> recs) {
    if (recs.empty()) throw Error("ingest: no records");

    TemporalGraph g;
    std::vector<std::size_t> kept;
    kept.reserve(recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const auto& r = recs[i];
        if (r.u == r.v) {
            ++g.stats_.self_loops_rejected;
            continue;
        }
        if (r.day < 0) throw Error("ingest: negative day index");
        kept.push_back(i);
    }
    if (kept.empty()) throw Error("ingest: no records (all rejected as self-loops)");
    g.stats_.accepted = kept.size();

    // Dense node-id remap in first-appearance order; inverse map retained.
    for (std::size_t i : kept) {
        for (std::int64_t orig : {recs[i].u, recs[i].v}) {
            if (g.id_map_.emplace(orig, static_cast<NodeId>(g.original_ids_.size())).second)
                g.original_ids_.push_back(orig);
        }
    }
    g.n_nodes_ = g.original_ids_.size();

    // Empirical-CDF transform over all accepted records with multiplicity:
    // t(d) = #{day' <= d} / (N+1).
    std::vector<std::int64_t> days;
    days.reserve(kept.size());
    for (std::size_t i : kept) days.push_back(recs[i].day);
    std::sort(days.begin(), days.end());
    const double denom = static_cast<double>(kept.size()) + 1.0;

    g.records_.reserve(kept.size());
    for (std::size_t i : kept) {
        const auto& r = recs[i];
        auto le = std::upper_bound(days.begin(), days.end(), r.day) - days.begin();
        double t = static_cast<double>(le) / denom;
        g.records_.push_back({g.id_map_.at(r.u), g.id_map_.at(r.v), t});
    }

    g.build_indices();
    return g;
}

void TemporalGraph::build_indices() {
    // Node time lists (with multiplicity), counting both endpoints.
    std::vector<std::size_t> counts(n_nodes_ + 1, 0);
    for (const auto& r : records_) {
        ++counts[r.u + 1];
        ++counts[r.v + 1];
    }
    node_time_offsets_.assign(counts.begin(), counts.end());
    for (std::size_t i = 1; i <= n_nodes_; ++i) node_time_offsets_[i] += node_time_offsets_[i - 1];
    node_time_values_.resize(node_time_offsets_[n_nodes_]);
    {
        std::vector<std::size_t> cursor(node_time_offsets_.begin(), node_time_offsets_.end() - 1);
        for (const auto& r : records_) {
            node_time_values_[cursor[r.u]++] = r.t;
            node_time_values_[cursor[r.v]++] = r.t;
        }
    }
    for (std::size_t u = 0; u < n_nodes_; ++u) {
        auto* lo = node_time_values_.data() + node_time_offsets_[u];
        auto* hi = node_time_values_.data() + node_time_offsets_[u + 1];
        std::sort(lo, hi);
    }

    birth_ = std::make_shared<std::vector<double>>(n_nodes_);
    for (std::size_t u = 0; u < n_nodes_; ++u)
        (*birth_)[u] = node_time_values_[node_time_offsets_[u]];

    // Edge time lists keyed by canonical unordered pair, keys ascending.
    std::vector<std::pair<std::uint64_t, double>> kv;
    kv.reserve(records_.size());
    for (const auto& r : records_) kv.emplace_back(canonical_edge_key(r.u, r.v), r.t);
    std::sort(kv.begin(), kv.end());
    edge_keys_.clear();
    edge_time_offsets_.clear();
    edge_time_values_.resize(kv.size());
    for (std::size_t i = 0; i < kv.size(); ++i) {
        if (i == 0 || kv[i].first != kv[i - 1].first) {
            edge_index_.emplace(kv[i].first, static_cast<std::uint32_t>(edge_keys_.size()));
            edge_keys_.push_back(kv[i].first);
            edge_time_offsets_.push_back(i);
        }
        edge_time_values_[i] = kv[i].second;
    }
    edge_time_offsets_.push_back(kv.size());
}

std::span<const double> TemporalGraph::edge_times(NodeId u, NodeId v) const {
    auto it = edge_index_.find(canonical_edge_key(u, v));
    if (it == edge_index_.end()) return {};
    return edge_times_by_index(it->second);
}

std::size_t TemporalGraph::paper_count(NodeId u, double t_lo, double t_hi) const {
    auto ts = node_times(u);
    auto lo = std::lower_bound(ts.begin(), ts.end(), t_lo);
    auto hi = std::lower_bound(lo, ts.end(), t_hi);
    std::size_t distinct = 0;
    double prev = -1.0;
    for (auto it = lo; it != hi; ++it) {
        if (*it != prev) ++distinct;
        prev = *it;
    }
    return distinct;
}

GraphView TemporalGraph::snapshot(double t_a, double t_b, bool directed) const {
    if (!(t_a >= 0.0 && t_a < t_b && t_b <= 1.0))
        throw Error("snapshot: invalid interval, need 0 <= t_a < t_b <= 1");

    GraphView view;
    view.t_a_ = t_a;
    view.t_b_ = t_b;
    view.directed_ = directed;
    view.birth_ = birth_;
    view.present_.assign(n_nodes_, 0);

    std::vector<std::vector<NodeId>> lists(n_nodes_);
    for (std::size_t i = 0; i < edge_keys_.size(); ++i) {
        auto ts = edge_times_by_index(i);
        // Edge in window iff some record time s satisfies t_a <= s <= t_b.
        auto it = std::lower_bound(ts.begin(), ts.end(), t_a);
        if (it == ts.end() || *it > t_b) continue;
        auto [u, v] = edge(i);
        lists[u].push_back(v);
        lists[v].push_back(u);
        view.present_[u] = 1;
        view.present_[v] = 1;
    }

    // For [0,t_b] windows the node set is everyone born by t_b; for clipped
    // windows only endpoints of surviving edges remain present.
    if (t_a == 0.0) {
        for (std::size_t u = 0; u < n_nodes_; ++u)
            if ((*birth_)[u] <= t_b) view.present_[u] = 1;
    }
    view.finalize(std::move(lists));
    return view;
}

void GraphView::finalize(std::vector<std::vector<NodeId>>&& lists) {
    const std::size_t n = present_.size();
    offsets_.assign(n + 1, 0);
    for (std::size_t u = 0; u < n; ++u) {
        auto& l = lists[u];
        std::sort(l.begin(), l.end());
        l.erase(std::unique(l.begin(), l.end()), l.end());
        offsets_[u + 1] = offsets_[u] + l.size();
    }
    adj_.resize(offsets_[n]);
    for (std::size_t u = 0; u < n; ++u)
        std::copy(lists[u].begin(), lists[u].end(), adj_.begin() + offsets_[u]);
    n_present_ = 0;
    for (auto p : present_) n_present_ += p;
}

bool GraphView::has_edge(NodeId u, NodeId v) const {
    auto nb = neighbors(u);
    return std::binary_search(nb.begin(), nb.end(), v);
}

std::size_t GraphView::out_degree(NodeId u) const {
    std::size_t out = 0;
    for (NodeId v : neighbors(u))
        if (precedes(u, v)) ++out;
    return out;
}

std::vector<NodeId> GraphView::present_nodes() const {
    std::vector<NodeId> out;
    out.reserve(n_present_);
    for (std::size_t u = 0; u < present_.size(); ++u)
        if (present_[u]) out.push_back(static_cast<NodeId>(u));
    return out;
}

GraphView GraphView::from_edges(std::size_t n,
                                const std::vector<std::pair<NodeId, NodeId>>& edges,
                                std::vector<double> births) {
    GraphView view;
    view.present_.assign(n, 1);
    if (births.empty()) {
        births.resize(n);
        for (std::size_t u = 0; u < n; ++u) births[u] = static_cast<double>(u + 1) / (n + 1);
    }
    view.birth_ = std::make_shared<const std::vector<double>>(std::move(births));
    std::vector<std::vector<NodeId>> lists(n);
    for (auto [u, v] : edges) {
        if (u == v) throw Error("GraphView::from_edges: self-loop");
        lists[u].push_back(v);
        lists[v].push_back(u);
    }
    view.finalize(std::move(lists));
    return view;
}

namespace {

std::vector<TemporalRecord> parse_json_records(const std::string& body) {
    auto j = nlohmann::json::parse(body);
    if (!j.is_array()) throw Error("records JSON: expected an array of [u,v,day] triples");
    std::vector<TemporalRecord> out;
    out.reserve(j.size());
    for (const auto& e : j) {
        if (!e.is_array() || e.size() != 3) throw Error("records JSON: malformed triple");
        out.push_back({e[0].get<std::int64_t>(), e[1].get<std::int64_t>(),
                       e[2].get<std::int64_t>()});
    }
    return out;
}

}  // namespace

std::vector<TemporalRecord> read_records_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open records file: " + path);
    std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    std::size_t first = body.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && body[first] == '[') return parse_json_records(body);

    std::vector<TemporalRecord> out;
    std::istringstream ss(body);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos || line[start] == '#') continue;
        for (auto& c : line)
            if (c == ',' || c == '\t') c = ' ';
        std::istringstream ls(line);
        TemporalRecord r;
        if (!(ls >> r.u >> r.v >> r.day))
            throw Error("records file " + path + ": parse error at line " + std::to_string(lineno));
        out.push_back(r);
    }
    return out;
}

void write_records_file(const std::string& path, std::span<const TemporalRecord> recs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write records file: " + path);
    for (const auto& r : recs)
        out << r.u << ' ' << r.v << ' ' << r.day << '\n';
}

void save_graph(const TemporalGraph& g, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write graph file: " + path);
    os.write(kGraphMagic, 4);
    put(os, kGraphVersion);
    put<std::uint64_t>(os, g.n_nodes_);
    put<std::uint64_t>(os, g.records_.size());
    put<std::uint64_t>(os, g.stats_.self_loops_rejected);
    for (auto id : g.original_ids_) put(os, id);
    for (const auto& r : g.records_) {
        put(os, r.u);
        put(os, r.v);
        put(os, r.t);
    }
    if (!os) throw Error("short write on graph file: " + path);
}

TemporalGraph load_graph(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open graph file: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kGraphMagic, 4) != 0)
        throw Error("bad graph file magic: " + path);
    if (get<std::uint32_t>(is) != kGraphVersion)
        throw Error("unsupported graph file version: " + path);

    TemporalGraph g;
    g.n_nodes_ = get<std::uint64_t>(is);
    std::uint64_t n_records = get<std::uint64_t>(is);
    g.stats_.self_loops_rejected = get<std::uint64_t>(is);
    g.stats_.accepted = n_records;
    g.original_ids_.resize(g.n_nodes_);
    for (auto& id : g.original_ids_) id = get<std::int64_t>(is);
    for (std::size_t u = 0; u < g.n_nodes_; ++u) g.id_map_.emplace(g.original_ids_[u], static_cast<NodeId>(u));
    g.records_.resize(n_records);
    for (auto& r : g.records_) {
        r.u = get<NodeId>(is);
        r.v = get<NodeId>(is);
        r.t = get<double>(is);
    }
    if (!is) throw Error("truncated graph file: " + path);
    g.build_indices();
    return g;
}

}  // namespace templink
