#include "templink/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "templink/rng.hpp"

namespace templink {

PairFeature pair_features(std::span<const double> fu, std::span<const double> fv,
                          const EdgeFeaturePair& edge) {
    if (fu.size() != kNodeFeatureDim || fv.size() != kNodeFeatureDim)
        throw Error("pair_features: node vectors must have 31 entries");
    PairFeature out;
    for (std::size_t j = 0; j < kNodeFeatureDim; ++j) {
        out[j] = std::min(fu[j], fv[j]);
        out[kNodeFeatureDim + j] = std::max(fu[j], fv[j]);
    }
    out[62] = edge.hoprec;
    out[63] = edge.dice;
    return out;
}

const std::vector<std::string>& pair_feature_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& n : node_feature_names()) out.push_back("min_" + n);
        for (const auto& n : node_feature_names()) out.push_back("max_" + n);
        out.push_back("hoprec_score");
        out.push_back("dice");
        return out;
    }();
    return names;
}

std::vector<std::pair<NodeId, NodeId>> collect_positives(const TemporalGraph& g, double t0) {
    if (!(t0 > 0.0 && t0 < 1.0)) throw Error("collect_positives: t0 must be in (0,1)");
    std::vector<std::pair<NodeId, NodeId>> out;
    for (std::size_t i = 0; i < g.edge_count(); ++i) {
        if (g.edge_times_by_index(i).front() <= t0) continue;  // first appearance after t0
        auto [u, v] = g.edge(i);
        if (g.birth(u) > t0 || g.birth(v) > t0) continue;      // both endpoints seen
        out.emplace_back(u, v);
    }
    return out;  // canonical order inherited from the sorted edge keys
}

std::vector<std::pair<NodeId, NodeId>> sample_negatives(const TemporalGraph& g, double t0,
                                                        std::size_t n, std::uint64_t seed) {
    std::vector<NodeId> seen;
    for (std::size_t u = 0; u < g.n_nodes(); ++u)
        if (g.birth(static_cast<NodeId>(u)) <= t0) seen.push_back(static_cast<NodeId>(u));
    if (seen.size() < 2) throw Error("sample_negatives: fewer than 2 seen nodes");

    Rng rng(seed);
    std::unordered_set<std::uint64_t> taken;
    std::vector<std::pair<NodeId, NodeId>> out;
    out.reserve(n);
    std::size_t attempts = 0;
    const std::size_t max_attempts = 200 * n + 1000;
    while (out.size() < n) {
        if (++attempts > max_attempts)
            throw Error("sample_negatives: rejection sampling exhausted (no negatives exist?)");
        NodeId u = seen[rng.below(seen.size())];
        NodeId v = seen[rng.below(seen.size())];
        if (u == v) continue;
        std::uint64_t key = canonical_edge_key(u, v);
        if (taken.count(key)) continue;
        if (!g.edge_times(u, v).empty()) continue;  // edge exists somewhere in [0,1]
        taken.insert(key);
        out.emplace_back(std::min(u, v), std::max(u, v));
    }
    return out;
}

void Scaler::apply(double* X, std::size_t rows, std::size_t cols) const {
    for (std::size_t i = 0; i < rows; ++i) {
        double* row = X + i * cols;
        for (std::size_t j = 0; j < n_scaled; ++j) row[j] = (row[j] - mean[j]) / stdev[j];
    }
}

void Scaler::invert(double* X, std::size_t rows, std::size_t cols) const {
    for (std::size_t i = 0; i < rows; ++i) {
        double* row = X + i * cols;
        for (std::size_t j = 0; j < n_scaled; ++j) row[j] = row[j] * stdev[j] + mean[j];
    }
}

Scaler fit_scaler(const double* X, std::size_t cols, std::span<const std::size_t> fit_rows,
                  std::size_t n_scaled) {
    if (fit_rows.empty()) throw Error("fit_scaler: empty fit partition");
    Scaler s;
    s.n_scaled = n_scaled;
    s.mean.assign(n_scaled, 0.0);
    s.stdev.assign(n_scaled, 0.0);
    const double n = static_cast<double>(fit_rows.size());
    for (std::size_t i : fit_rows) {
        const double* row = X + i * cols;
        for (std::size_t j = 0; j < n_scaled; ++j) s.mean[j] += row[j];
    }
    for (auto& m : s.mean) m /= n;
    for (std::size_t i : fit_rows) {
        const double* row = X + i * cols;
        for (std::size_t j = 0; j < n_scaled; ++j) {
            double d = row[j] - s.mean[j];
            s.stdev[j] += d * d;
        }
    }
    for (auto& v : s.stdev) v = std::max(std::sqrt(v / n), 1e-12);
    return s;
}

std::vector<std::size_t> SplitPlan::rows_in_fold(int f) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold.size(); ++i)
        if (fold[i] == f) out.push_back(i);
    return out;
}

std::vector<std::size_t> SplitPlan::rows_not_in_fold(int f) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold.size(); ++i)
        if (fold[i] != f) out.push_back(i);
    return out;
}

SplitPlan stratified_kfold(std::span<const std::uint8_t> y, int k, std::uint64_t seed) {
    if (k < 2) throw Error("stratified_kfold: k >= 2 required");
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < y.size(); ++i) (y[i] ? pos : neg).push_back(i);
    if (pos.size() < static_cast<std::size_t>(k) || neg.size() < static_cast<std::size_t>(k))
        throw Error("stratified_kfold: a class has fewer members than folds");

    SplitPlan plan;
    plan.k = k;
    plan.fold.assign(y.size(), -1);
    Rng rng(seed);
    for (auto* cls : {&pos, &neg}) {
        rng.shuffle(*cls);
        // first (size % k) folds take one extra member
        std::size_t base = cls->size() / static_cast<std::size_t>(k);
        std::size_t extra = cls->size() % static_cast<std::size_t>(k);
        std::size_t idx = 0;
        for (int f = 0; f < k; ++f) {
            std::size_t take = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
            for (std::size_t q = 0; q < take; ++q) plan.fold[(*cls)[idx++]] = f;
        }
    }
    return plan;
}

PairFeatureBuilder::PairFeatureBuilder(const TemporalGraph& g, const GraphView& t0_view,
                                       const FeatureMatrix& node_features,
                                       const EmbeddingTable& emb,
                                       const ImputedDefaults& defaults,
                                       bool imputation_enabled)
    : g_(&g),
      view_(&t0_view),
      feats_(&node_features),
      emb_(&emb),
      defaults_(&defaults),
      imputation_enabled_(imputation_enabled) {}

EdgeFeaturePair PairFeatureBuilder::edge_features(NodeId u, bool u_seen, NodeId v,
                                                  bool v_seen) const {
    EdgeFeaturePair e;
    // Dice routes on graph visibility, hoprec on embedding presence (nodes
    // dropped by the truncation are cold-start cases for the score only).
    if (u_seen && v_seen) {
        e.dice = dice(*view_, u, v);
    } else if (!imputation_enabled_) {
        e.dice = 0.0;
    } else if (u_seen || v_seen) {
        e.dice = defaults_->dice_unseen_seen(*view_, u_seen ? u : v);
    } else {
        e.dice = defaults_->dice_uu;
    }

    const bool ue = u_seen && emb_->has_vector(u);
    const bool ve = v_seen && emb_->has_vector(v);
    if (ue && ve) {
        e.hoprec = hoprec_score(*emb_, u, v);
    } else if (!imputation_enabled_) {
        e.hoprec = 0.0;
    } else if (ue || ve) {
        e.hoprec = defaults_->hoprec_unseen_seen(*emb_, ue ? u : v);
    } else {
        e.hoprec = defaults_->hoprec_uu;
    }
    return e;
}

PairFeature PairFeatureBuilder::row(NodeId u, bool u_seen, NodeId v, bool v_seen) const {
    static const std::array<double, kNodeFeatureDim> zeros{};
    std::span<const double> fu, fv;
    if (u_seen)
        fu = {feats_->row(u), kNodeFeatureDim};
    else
        fu = imputation_enabled_ ? std::span<const double>(defaults_->node_mean)
                                 : std::span<const double>(zeros);
    if (v_seen)
        fv = {feats_->row(v), kNodeFeatureDim};
    else
        fv = imputation_enabled_ ? std::span<const double>(defaults_->node_mean)
                                 : std::span<const double>(zeros);
    return pair_features(fu, fv, edge_features(u, u_seen, v, v_seen));
}

TrainingSet build_training_set(const TemporalGraph& g, const PairFeatureBuilder& builder,
                               const DatasetParams& params) {
    const double t0 = params.t0;
    auto positives = collect_positives(g, t0);
    if (positives.empty()) throw Error("build_training_set: no positive examples after t0");
    auto negatives = sample_negatives(g, t0, positives.size(), derive_seed(params.seed, 1));

    struct RowSpec {
        NodeId u, v;
        bool u_seen, v_seen;
        std::uint8_t label;
    };
    std::vector<RowSpec> rows;
    rows.reserve(2 * positives.size() + 16);
    for (auto [u, v] : positives) rows.push_back({u, v, true, true, 1});
    for (auto [u, v] : negatives) rows.push_back({u, v, true, true, 0});

    TrainingSet ts;
    ts.n_base_positives = positives.size();
    ts.n_base_negatives = negatives.size();

    // Unseen-seen injection: `fraction` of the base set, split half positive
    // (real post-t0 first edges with exactly one unseen endpoint) and half
    // sampled unseen-seen non-edges.
    const std::size_t n_inject =
        static_cast<std::size_t>(std::llround(params.inject_fraction * static_cast<double>(rows.size())));
    if (n_inject > 0) {
        std::vector<std::pair<NodeId, NodeId>> unseen_seen_pos;  // (unseen, seen)
        for (std::size_t i = 0; i < g.edge_count(); ++i) {
            if (g.edge_times_by_index(i).front() <= t0) continue;
            auto [u, v] = g.edge(i);
            bool us = g.birth(u) <= t0, vs = g.birth(v) <= t0;
            if (us == vs) continue;
            unseen_seen_pos.emplace_back(us ? v : u, us ? u : v);
        }
        Rng rng(derive_seed(params.seed, 2));
        rng.shuffle(unseen_seen_pos);

        const std::size_t target = n_inject / 2;
        const std::size_t pos_used = std::min(target, unseen_seen_pos.size());
        if (pos_used < target) ts.injection_shortfall = true;

        for (std::size_t i = 0; i < pos_used; ++i) {
            auto [u, v] = unseen_seen_pos[i];
            rows.push_back({u, v, false, true, 1});
        }
        ts.n_injected_positives = pos_used;

        std::vector<NodeId> unseen, seen;
        for (std::size_t u = 0; u < g.n_nodes(); ++u)
            (g.birth(static_cast<NodeId>(u)) <= t0 ? seen : unseen)
                .push_back(static_cast<NodeId>(u));
        std::unordered_set<std::uint64_t> taken;
        std::size_t neg_used = 0, attempts = 0;
        const std::size_t max_attempts = 200 * (pos_used + 1) + 1000;
        while (neg_used < pos_used && !unseen.empty() && attempts++ < max_attempts) {
            NodeId u = unseen[rng.below(unseen.size())];
            NodeId v = seen[rng.below(seen.size())];
            std::uint64_t key = canonical_edge_key(u, v);
            if (taken.count(key)) continue;
            if (!g.edge_times(u, v).empty()) continue;
            taken.insert(key);
            rows.push_back({u, v, false, true, 0});
            ++neg_used;
        }
        if (neg_used < pos_used) ts.injection_shortfall = true;
        ts.n_injected_negatives = neg_used;
    }

    ts.n_rows = rows.size();
    ts.X.resize(ts.n_rows * kPairFeatureDim);
    ts.y.resize(ts.n_rows);
    ts.pair_ids.resize(ts.n_rows);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        PairFeature f = builder.row(r.u, r.u_seen, r.v, r.v_seen);
        std::copy(f.begin(), f.end(), ts.X.begin() + i * kPairFeatureDim);
        ts.y[i] = r.label;
        ts.pair_ids[i] = {r.u, r.v};
    }

    ts.split = stratified_kfold(ts.y, params.k_folds, derive_seed(params.seed, 3));
    ts.split.fit_fraction = params.fit_fraction;
    auto fit_rows = ts.split.rows_not_in_fold(0);
    ts.scaler = fit_scaler(ts.X.data(), kPairFeatureDim, fit_rows);
    return ts;
}

std::vector<double> TrainingSet::standardized() const {
    std::vector<double> out = X;
    scaler.apply(out.data(), n_rows, n_cols);
    return out;
}

namespace {
constexpr char kDatasetMagic[4] = {'T', 'L', 'D', 'S'};
constexpr std::uint32_t kDatasetVersion = 1;

template <typename T>
void put_vec(std::ostream& os, const std::vector<T>& v) {
    std::uint64_t n = v.size();
    os.write(reinterpret_cast<const char*>(&n), sizeof(n));
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(n * sizeof(T)));
}

template <typename T>
std::vector<T> get_vec(std::istream& is) {
    std::uint64_t n = 0;
    is.read(reinterpret_cast<char*>(&n), sizeof(n));
    std::vector<T> v(n);
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
    return v;
}
}  // namespace

void save_training_set(const TrainingSet& ts, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write dataset: " + path);
    os.write(kDatasetMagic, 4);
    os.write(reinterpret_cast<const char*>(&kDatasetVersion), sizeof(kDatasetVersion));
    std::uint64_t rows = ts.n_rows, cols = ts.n_cols;
    os.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    os.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
    std::uint64_t counts[4] = {ts.n_base_positives, ts.n_base_negatives,
                               ts.n_injected_positives, ts.n_injected_negatives};
    os.write(reinterpret_cast<const char*>(counts), sizeof(counts));
    std::uint8_t shortfall = ts.injection_shortfall ? 1 : 0;
    os.write(reinterpret_cast<const char*>(&shortfall), 1);
    put_vec(os, ts.X);
    put_vec(os, ts.y);
    std::vector<NodeId> flat;
    flat.reserve(2 * ts.pair_ids.size());
    for (auto [u, v] : ts.pair_ids) {
        flat.push_back(u);
        flat.push_back(v);
    }
    put_vec(os, flat);
    std::int32_t k = ts.split.k;
    os.write(reinterpret_cast<const char*>(&k), sizeof(k));
    double ff = ts.split.fit_fraction;
    os.write(reinterpret_cast<const char*>(&ff), sizeof(ff));
    put_vec(os, ts.split.fold);
    put_vec(os, ts.scaler.mean);
    put_vec(os, ts.scaler.stdev);
    if (!os) throw Error("short write on dataset: " + path);
}

TrainingSet load_training_set(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open dataset: " + path);
    char magic[4];
    is.read(magic, 4);
    std::uint32_t version = 0;
    is.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (!is || std::memcmp(magic, kDatasetMagic, 4) != 0 || version != kDatasetVersion)
        throw Error("bad dataset header: " + path);
    TrainingSet ts;
    std::uint64_t rows = 0, cols = 0;
    is.read(reinterpret_cast<char*>(&rows), sizeof(rows));
    is.read(reinterpret_cast<char*>(&cols), sizeof(cols));
    ts.n_rows = rows;
    ts.n_cols = cols;
    std::uint64_t counts[4];
    is.read(reinterpret_cast<char*>(counts), sizeof(counts));
    ts.n_base_positives = counts[0];
    ts.n_base_negatives = counts[1];
    ts.n_injected_positives = counts[2];
    ts.n_injected_negatives = counts[3];
    std::uint8_t shortfall = 0;
    is.read(reinterpret_cast<char*>(&shortfall), 1);
    ts.injection_shortfall = shortfall != 0;
    ts.X = get_vec<double>(is);
    ts.y = get_vec<std::uint8_t>(is);
    auto flat = get_vec<NodeId>(is);
    ts.pair_ids.resize(flat.size() / 2);
    for (std::size_t i = 0; i < ts.pair_ids.size(); ++i)
        ts.pair_ids[i] = {flat[2 * i], flat[2 * i + 1]};
    std::int32_t k = 0;
    is.read(reinterpret_cast<char*>(&k), sizeof(k));
    ts.split.k = k;
    is.read(reinterpret_cast<char*>(&ts.split.fit_fraction), sizeof(double));
    ts.split.fold = get_vec<int>(is);
    ts.scaler.mean = get_vec<double>(is);
    ts.scaler.stdev = get_vec<double>(is);
    if (!is) throw Error("truncated dataset: " + path);
    return ts;
}

std::vector<std::pair<std::int64_t, std::int64_t>> read_pairs_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open pairs file: " + path);
    std::vector<std::pair<std::int64_t, std::int64_t>> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos || line[start] == '#') continue;
        for (auto& c : line)
            if (c == ',' || c == '\t') c = ' ';
        std::istringstream ls(line);
        std::int64_t u, v;
        if (!(ls >> u >> v))
            throw Error("pairs file " + path + ": parse error at line " + std::to_string(lineno));
        out.emplace_back(u, v);
    }
    return out;
}

void write_pairs_file(const std::string& path,
                      std::span<const std::pair<std::int64_t, std::int64_t>> pairs) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write pairs file: " + path);
    for (auto [u, v] : pairs) out << u << ' ' << v << '\n';
}

}  // namespace templink
