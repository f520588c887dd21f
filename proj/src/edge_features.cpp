#include "templink/edge_features.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <thread>

#include "templink/rng.hpp"

namespace templink {

namespace {

std::uint64_t sorted_intersection_size(std::span<const NodeId> a, std::span<const NodeId> b) {
    std::uint64_t count = 0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j])
            ++i;
        else if (a[i] > b[j])
            ++j;
        else {
            ++count;
            ++i;
            ++j;
        }
    }
    return count;
}

}  // namespace

double dice(const GraphView& view, NodeId u, NodeId v) {
    if (u == v) throw Error("dice: u == v");
    const std::uint64_t den = view.degree(u) + view.degree(v);
    if (den == 0) return 0.0;
    const std::uint64_t inter = sorted_intersection_size(view.neighbors(u), view.neighbors(v));
    return 2.0 * static_cast<double>(inter) / static_cast<double>(den);
}

DiceRatio dice_node_set(const GraphView& view, NodeId u, std::span<const NodeId> V) {
    std::vector<std::uint8_t> in_nu(view.n_nodes(), 0);
    for (NodeId w : view.neighbors(u)) in_nu[w] = 1;

    std::uint64_t inter_sum = 0, deg_sum = 0, m = 0;
    for (NodeId v : V) {
        if (v == u) continue;
        ++m;
        deg_sum += view.degree(v);
        for (NodeId w : view.neighbors(v)) inter_sum += in_nu[w];
    }
    DiceRatio r;
    r.num = 2 * inter_sum;
    r.den = static_cast<std::uint64_t>(view.degree(u)) * m + deg_sum;
    return r;
}

DiceRatio dice_set_set(const GraphView& view, std::span<const NodeId> V) {
    if (V.size() < 2) throw Error("dice_set_set: |V| >= 2 required");

    // k_w = |N(w) ∩ V| accumulated by sweeping the adjacency rows of V.
    std::vector<std::uint32_t> k(view.n_nodes(), 0);
    std::vector<NodeId> touched;
    std::uint64_t k_sum = 0;
    for (NodeId v : V) {
        for (NodeId w : view.neighbors(v)) {
            if (k[w]++ == 0) touched.push_back(w);
            ++k_sum;
        }
    }
    std::uint64_t pairs = 0;
    for (NodeId w : touched) {
        std::uint64_t kw = k[w];
        pairs += kw * (kw - 1) / 2;
    }
    DiceRatio r;
    r.num = 2 * pairs;
    r.den = k_sum * (static_cast<std::uint64_t>(V.size()) - 1);
    return r;
}

GraphView truncate_for_embedding(const TemporalGraph& g, double t_cut, double t_hi,
                                 TruncationStats* stats) {
    if (!(t_cut > 0.0 && t_cut < 1.0)) throw Error("truncate_for_embedding: need 0 < t_cut < 1");
    GraphView view = g.snapshot(t_cut, t_hi);
    if (stats) {
        TruncationStats s;
        std::vector<std::uint8_t> seen(g.n_nodes(), 0);
        for (std::size_t i = 0; i < g.edge_count(); ++i) {
            auto ts = g.edge_times_by_index(i);
            if (ts.front() > t_hi) continue;  // edge not in the [0, t_hi] graph
            ++s.edges_total;
            auto [u, v] = g.edge(i);
            seen[u] = seen[v] = 1;
            auto it = std::lower_bound(ts.begin(), ts.end(), t_cut);
            if (it == ts.end() || *it > t_hi) ++s.edges_removed;
        }
        for (std::size_t u = 0; u < g.n_nodes(); ++u) {
            if (!seen[u]) continue;
            ++s.nodes_total;
            if (!view.contains(static_cast<NodeId>(u))) ++s.nodes_removed;
        }
        *stats = s;
    }
    return view;
}

std::uint64_t EmbedParams::digest() const {
    std::uint64_t h = fnv1a64(&dim, sizeof(dim));
    h = fnv1a64(&max_hop, sizeof(max_hop), h);
    h = fnv1a64(&walks_per_node, sizeof(walks_per_node), h);
    h = fnv1a64(&negatives_per_positive, sizeof(negatives_per_positive), h);
    h = fnv1a64(&margin, sizeof(margin), h);
    h = fnv1a64(&lr0, sizeof(lr0), h);
    h = fnv1a64(&lr_floor_ratio, sizeof(lr_floor_ratio), h);
    h = fnv1a64(&epochs, sizeof(epochs), h);
    h = fnv1a64(&seed, sizeof(seed), h);
    return h;
}

EmbeddingTable::EmbeddingTable(std::size_t n_nodes, int dim)
    : dim_(dim), row_of_node_(n_nodes, -1) {}

std::span<const double> EmbeddingTable::vector(NodeId u) const {
    std::int32_t row = row_of_node_[u];
    if (row < 0)
        throw MissingEmbeddingError("no embedding for node " + std::to_string(u));
    return {data_.data() + static_cast<std::size_t>(row) * dim_, static_cast<std::size_t>(dim_)};
}

std::span<double> EmbeddingTable::mutable_vector(NodeId u) {
    std::int32_t row = row_of_node_[u];
    if (row < 0)
        throw MissingEmbeddingError("no embedding for node " + std::to_string(u));
    return {data_.data() + static_cast<std::size_t>(row) * dim_, static_cast<std::size_t>(dim_)};
}

void EmbeddingTable::add_vector(NodeId u) {
    if (row_of_node_[u] >= 0) return;
    row_of_node_[u] = static_cast<std::int32_t>(n_rows_++);
    data_.resize(n_rows_ * static_cast<std::size_t>(dim_), 0.0);
}

double cosine(std::span<const double> a, std::span<const double> b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

double hoprec_score(const EmbeddingTable& tbl, NodeId u, NodeId v) {
    return cosine(tbl.vector(u), tbl.vector(v));
}

std::optional<double> try_hoprec_score(const EmbeddingTable& tbl, NodeId u, NodeId v) {
    if (!tbl.has_vector(u) || !tbl.has_vector(v)) return std::nullopt;
    return hoprec_score(tbl, u, v);
}

namespace {

struct Sample {
    NodeId src, ctx;
    float weight;                    // 1/k for a hop-k positive
    std::array<NodeId, 16> negs;     // first `n_negs` entries used
};

void normalize(double* v, int dim) {
    double n = 0.0;
    for (int i = 0; i < dim; ++i) n += v[i] * v[i];
    if (n == 0.0) return;
    n = 1.0 / std::sqrt(n);
    for (int i = 0; i < dim; ++i) v[i] *= n;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Walks from the sources [lo, hi) of `order`; emits hop-weighted positives
// with uniform negatives. Consumes only its own rng, so chunks are
// independent of each other and of the update schedule.
void sample_chunk(const GraphView& view, const std::vector<NodeId>& order,
                  const std::vector<NodeId>& present, std::size_t lo, std::size_t hi,
                  const EmbedParams& p, Rng rng, std::vector<Sample>& out) {
    const int n_negs = std::min(p.negatives_per_positive, 16);
    for (std::size_t idx = lo; idx < hi; ++idx) {
        NodeId s = order[idx];
        for (int w = 0; w < p.walks_per_node; ++w) {
            NodeId cur = s;
            for (int k = 1; k <= p.max_hop; ++k) {
                auto nb = view.neighbors(cur);
                if (nb.empty()) break;
                cur = nb[rng.below(nb.size())];
                if (cur == s) continue;
                Sample smp;
                smp.src = s;
                smp.ctx = cur;
                smp.weight = 1.0f / static_cast<float>(k);
                for (int q = 0; q < n_negs; ++q) {
                    NodeId n;
                    do {
                        n = present[rng.below(present.size())];
                    } while (n == s || n == cur);
                    smp.negs[q] = n;
                }
                out.push_back(smp);
            }
        }
    }
}

}  // namespace

EmbeddingTable train_embeddings(const GraphView& view, const EmbedParams& p) {
    if (view.n_present() == 0) throw Error("train_embeddings: empty view");
    if (p.dim <= 0 || p.max_hop <= 0 || p.epochs <= 0)
        throw Error("train_embeddings: invalid params");
    if (p.negatives_per_positive < 1 || p.negatives_per_positive > 16)
        throw Error("train_embeddings: negatives_per_positive must be in [1,16]");

    const std::vector<NodeId> present = view.present_nodes();
    if (present.size() < 2) throw Error("train_embeddings: need at least 2 present nodes");

    EmbeddingTable tbl(view.n_nodes(), p.dim);
    tbl.seed_ = p.seed;
    tbl.params_digest_ = p.digest();
    tbl.set_window(view.t_a(), view.t_b());

    Rng init_rng(derive_seed(p.seed, 0));
    for (NodeId u : present) {
        tbl.add_vector(u);
        auto vec = tbl.mutable_vector(u);
        for (auto& x : vec) x = init_rng.uniform(-0.5 / p.dim, 0.5 / p.dim);
        normalize(vec.data(), p.dim);
    }

    std::vector<NodeId> sources;
    for (NodeId u : present)
        if (view.degree(u) > 0) sources.push_back(u);
    if (sources.empty()) return tbl;  // all isolated: keep the random unit vectors

    const int n_negs = std::min(p.negatives_per_positive, 16);
    const int threads = std::max(1, p.threads);
    std::vector<double> scratch(p.dim);

    for (int epoch = 1; epoch <= p.epochs; ++epoch) {
        double lr = p.lr0 * std::max(1.0 - static_cast<double>(epoch - 1) / p.epochs,
                                     p.lr_floor_ratio);

        std::vector<NodeId> order = sources;
        Rng shuffle_rng(derive_seed(p.seed, 1000 + static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        // Sampling is chunked per thread with independent derived seeds;
        // updates replay the chunks in order on this thread.
        std::vector<std::vector<Sample>> buffers(static_cast<std::size_t>(threads));
        const std::size_t chunk =
            (order.size() + static_cast<std::size_t>(threads) - 1) / static_cast<std::size_t>(threads);
        if (threads == 1) {
            sample_chunk(view, order, present, 0, order.size(), p,
                         Rng(derive_seed(p.seed, 2000000ULL + static_cast<std::uint64_t>(epoch))),
                         buffers[0]);
        } else {
            std::vector<std::thread> pool;
            for (int w = 0; w < threads; ++w) {
                std::size_t lo = static_cast<std::size_t>(w) * chunk;
                std::size_t hi = std::min(lo + chunk, order.size());
                if (lo >= hi) break;
                pool.emplace_back([&, w, lo, hi] {
                    sample_chunk(view, order, present, lo, hi, p,
                                 Rng(derive_seed(p.seed,
                                                 2000000ULL + static_cast<std::uint64_t>(epoch) * 64 +
                                                     static_cast<std::uint64_t>(w))),
                                 buffers[static_cast<std::size_t>(w)]);
                });
            }
            for (auto& th : pool) th.join();
        }

        double loss_sum = 0.0;
        std::size_t loss_count = 0;
        for (const auto& buf : buffers) {
            for (const Sample& smp : buf) {
                auto vs = tbl.mutable_vector(smp.src);
                auto vc = tbl.mutable_vector(smp.ctx);
                const double w = smp.weight;
                for (int q = 0; q < n_negs; ++q) {
                    auto vn = tbl.mutable_vector(smp.negs[q]);
                    double dot_pos = 0.0, dot_neg = 0.0;
                    for (int i = 0; i < p.dim; ++i) {
                        dot_pos += vs[i] * vc[i];
                        dot_neg += vs[i] * vn[i];
                    }
                    const double gap = dot_pos - dot_neg;
                    loss_sum += -w * std::log(std::max(sigmoid(gap), 1e-300));
                    ++loss_count;
                    if (gap >= p.margin) continue;
                    const double g = lr * w * sigmoid(-gap);
                    for (int i = 0; i < p.dim; ++i) scratch[i] = vs[i];
                    for (int i = 0; i < p.dim; ++i) {
                        vs[i] += g * (vc[i] - vn[i]);
                        vc[i] += g * scratch[i];
                        vn[i] -= g * scratch[i];
                    }
                    normalize(vs.data(), p.dim);
                    normalize(vc.data(), p.dim);
                    normalize(vn.data(), p.dim);
                }
            }
        }
        tbl.epoch_loss_.push_back(loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0);
    }
    return tbl;
}

namespace {
constexpr char kEmbMagic[4] = {'T', 'L', 'E', 'M'};
constexpr std::uint32_t kEmbVersion = 1;
}  // namespace

void save_embeddings(const EmbeddingTable& tbl, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write embeddings: " + path);
    os.write(kEmbMagic, 4);
    os.write(reinterpret_cast<const char*>(&kEmbVersion), sizeof(kEmbVersion));
    std::uint64_t n_nodes = tbl.row_of_node_.size(), n_rows = tbl.n_rows_;
    std::uint32_t dim = static_cast<std::uint32_t>(tbl.dim_);
    os.write(reinterpret_cast<const char*>(&n_nodes), sizeof(n_nodes));
    os.write(reinterpret_cast<const char*>(&n_rows), sizeof(n_rows));
    os.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
    os.write(reinterpret_cast<const char*>(&tbl.seed_), sizeof(tbl.seed_));
    os.write(reinterpret_cast<const char*>(&tbl.params_digest_), sizeof(tbl.params_digest_));
    os.write(reinterpret_cast<const char*>(&tbl.t_cut_), sizeof(tbl.t_cut_));
    os.write(reinterpret_cast<const char*>(&tbl.t_hi_), sizeof(tbl.t_hi_));
    os.write(reinterpret_cast<const char*>(tbl.row_of_node_.data()),
             static_cast<std::streamsize>(n_nodes * sizeof(std::int32_t)));
    os.write(reinterpret_cast<const char*>(tbl.data_.data()),
             static_cast<std::streamsize>(tbl.data_.size() * sizeof(double)));
    std::uint32_t n_loss = static_cast<std::uint32_t>(tbl.epoch_loss_.size());
    os.write(reinterpret_cast<const char*>(&n_loss), sizeof(n_loss));
    os.write(reinterpret_cast<const char*>(tbl.epoch_loss_.data()),
             static_cast<std::streamsize>(n_loss * sizeof(double)));
    if (!os) throw Error("short write on embeddings: " + path);
}

EmbeddingTable load_embeddings(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open embeddings: " + path);
    char magic[4];
    is.read(magic, 4);
    std::uint32_t version = 0;
    is.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (!is || std::memcmp(magic, kEmbMagic, 4) != 0 || version != kEmbVersion)
        throw Error("bad embeddings header: " + path);
    std::uint64_t n_nodes = 0, n_rows = 0;
    std::uint32_t dim = 0;
    is.read(reinterpret_cast<char*>(&n_nodes), sizeof(n_nodes));
    is.read(reinterpret_cast<char*>(&n_rows), sizeof(n_rows));
    is.read(reinterpret_cast<char*>(&dim), sizeof(dim));
    EmbeddingTable tbl(n_nodes, static_cast<int>(dim));
    tbl.n_rows_ = n_rows;
    is.read(reinterpret_cast<char*>(&tbl.seed_), sizeof(tbl.seed_));
    is.read(reinterpret_cast<char*>(&tbl.params_digest_), sizeof(tbl.params_digest_));
    is.read(reinterpret_cast<char*>(&tbl.t_cut_), sizeof(tbl.t_cut_));
    is.read(reinterpret_cast<char*>(&tbl.t_hi_), sizeof(tbl.t_hi_));
    is.read(reinterpret_cast<char*>(tbl.row_of_node_.data()),
            static_cast<std::streamsize>(n_nodes * sizeof(std::int32_t)));
    tbl.data_.resize(n_rows * dim);
    is.read(reinterpret_cast<char*>(tbl.data_.data()),
            static_cast<std::streamsize>(tbl.data_.size() * sizeof(double)));
    std::uint32_t n_loss = 0;
    is.read(reinterpret_cast<char*>(&n_loss), sizeof(n_loss));
    tbl.epoch_loss_.resize(n_loss);
    is.read(reinterpret_cast<char*>(tbl.epoch_loss_.data()),
            static_cast<std::streamsize>(n_loss * sizeof(double)));
    if (!is) throw Error("truncated embeddings file: " + path);
    return tbl;
}

}  // namespace templink
