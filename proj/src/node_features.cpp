#include "templink/node_features.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "templink/common.hpp"

namespace templink {

PageRankResult pagerank(const GraphView& view, const PageRankParams& params) {
    const std::size_t n = view.n_nodes();
    const std::size_t np = view.n_present();
    if (np == 0) throw Error("pagerank: view has no present nodes");

    PageRankResult res;
    res.scores.assign(n, 0.0);
    const auto nodes = view.present_nodes();
    const double d = params.damping;
    const double uniform = 1.0 / static_cast<double>(np);

    std::vector<double> x(n, 0.0), next(n, 0.0);
    for (NodeId u : nodes) x[u] = uniform;

    for (int it = 1; it <= params.max_iter; ++it) {
        double dangling = 0.0;
        for (NodeId u : nodes)
            if (view.degree(u) == 0) dangling += x[u];
        const double base = (1.0 - d) * uniform + d * dangling * uniform;
        for (NodeId u : nodes) {
            double acc = 0.0;
            for (NodeId v : view.neighbors(u))
                acc += x[v] / static_cast<double>(view.degree(v));
            next[u] = base + d * acc;
        }
        double delta = 0.0;
        for (NodeId u : nodes) delta += std::abs(next[u] - x[u]);
        for (NodeId u : nodes) x[u] = next[u];
        res.iterations = it;
        if (delta < params.tol) {
            res.converged = true;
            break;
        }
    }
    for (NodeId u : nodes) res.scores[u] = x[u];
    return res;
}

namespace {

// Edges among N(u), counting each once, via sorted-list intersections.
std::size_t neighborhood_edge_count(const GraphView& view, NodeId u) {
    auto nu = view.neighbors(u);
    std::size_t twice = 0;
    for (NodeId v : nu) {
        auto nv = view.neighbors(v);
        // |N(u) ∩ N(v)| by two-pointer merge
        std::size_t i = 0, j = 0;
        while (i < nu.size() && j < nv.size()) {
            if (nu[i] < nv[j])
                ++i;
            else if (nu[i] > nv[j])
                ++j;
            else {
                ++twice;
                ++i;
                ++j;
            }
        }
    }
    return twice / 2;  // each neighbor-edge {v,w} counted from both v and w
}

}  // namespace

double clustering_coefficient(const GraphView& view, NodeId u) {
    const std::size_t deg = view.degree(u);
    if (deg < 2) return 0.0;
    const std::size_t tri = neighborhood_edge_count(view, u);
    return 2.0 * static_cast<double>(tri) /
           (static_cast<double>(deg) * static_cast<double>(deg - 1));
}

std::array<double, 4> discrete_derivatives(double w0, double f1, double f2, double b1,
                                           double b2) {
    return {w0 - f1, w0 - b1, w0 - 2.0 * f1 + f2, w0 - 2.0 * b1 + b2};
}

FeatureContext::FeatureContext(const TemporalGraph& g, double t0, double dt,
                               const PageRankParams& pr, int threads)
    : graph_(&g), t0_(t0), dt_(dt) {
    if (!(t0 - 2.0 * dt > 0.0)) throw Error("FeatureContext: need t0 - 2*dt > 0");
    if (!(t0 <= 1.0)) throw Error("FeatureContext: t0 must be <= 1");
    bounds_ = {{{0.0, t0}, {0.0, t0 - dt}, {0.0, t0 - 2.0 * dt}, {dt, t0}, {2.0 * dt, t0}}};
    for (int k = 0; k < kViewCount; ++k)
        views_[k] = g.snapshot(bounds_[k].first, bounds_[k].second);
    parallel_for(kViewCount, threads, [&](int, std::size_t k) {
        pagerank_[k] = pagerank(views_[k], pr);
    });
}

std::array<double, kBaseFeatureDim> FeatureContext::base_features(ViewTag tag,
                                                                  NodeId u) const {
    const int k = static_cast<int>(tag);
    const GraphView& view = views_[k];
    const auto [ta, tb] = bounds_[k];

    if (!view.contains(u))
        return {0.0, 0.0, 0.0, std::log(kPagerankFloor), 0.0, 0.0};

    const double papers = static_cast<double>(graph_->paper_count(u, ta, tb));
    const double pr = std::max(pagerank_[k].scores[u], kPagerankFloor);
    const std::size_t deg = view.degree(u);
    const std::size_t out = view.out_degree(u);
    return {std::log1p(papers),
            clustering_coefficient(view, u),
            std::log1p(static_cast<double>(deg)),
            std::log(pr),
            std::log1p(static_cast<double>(deg - out)),
            std::log1p(static_cast<double>(out))};
}

std::array<double, kNodeFeatureDim> FeatureContext::node_feature_vector(NodeId u) const {
    std::array<std::array<double, kBaseFeatureDim>, kViewCount> f;
    for (int k = 0; k < kViewCount; ++k)
        f[k] = base_features(static_cast<ViewTag>(k), u);

    std::array<double, kNodeFeatureDim> out;
    out[0] = graph_->birth(u);
    for (std::size_t j = 0; j < kBaseFeatureDim; ++j) out[1 + j] = f[0][j];
    for (std::size_t j = 0; j < kBaseFeatureDim; ++j) {
        auto d = discrete_derivatives(f[0][j], f[1][j], f[2][j], f[3][j], f[4][j]);
        for (std::size_t q = 0; q < 4; ++q) out[1 + kBaseFeatureDim + 4 * j + q] = d[q];
    }
    return out;
}

FeatureMatrix FeatureContext::all_node_features(int threads) const {
    FeatureMatrix fm(graph_->n_nodes(), kNodeFeatureDim);
    parallel_for(fm.rows, threads, [&](int, std::size_t u) {
        auto vec = node_feature_vector(static_cast<NodeId>(u));
        std::copy(vec.begin(), vec.end(), fm.row(u));
    });
    return fm;
}

const std::vector<std::string>& node_feature_names() {
    static const std::vector<std::string> names = [] {
        const std::vector<std::string> base = {"log_paper_count", "clustering_coeff",
                                               "log_degree",      "log_pagerank",
                                               "log_in_degree",   "log_out_degree"};
        const std::vector<std::string> deriv = {"fwd1", "bwd1", "fwd2", "bwd2"};
        std::vector<std::string> out;
        out.push_back("birth_time");
        for (const auto& b : base) out.push_back(b);
        for (const auto& b : base)
            for (const auto& d : deriv) out.push_back(b + "_" + d);
        return out;
    }();
    return names;
}

namespace {
constexpr char kTableMagic[4] = {'T', 'L', 'T', 'B'};
constexpr std::uint32_t kTableVersion = 1;
}  // namespace

void write_feature_matrix(const std::string& path, const FeatureMatrix& fm,
                          const std::vector<std::string>& names, double t0, double dt) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write feature matrix: " + path);
    os.write(kTableMagic, 4);
    os.write(reinterpret_cast<const char*>(&kTableVersion), sizeof(kTableVersion));
    std::uint64_t rows = fm.rows, cols = fm.cols;
    os.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    os.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
    os.write(reinterpret_cast<const char*>(fm.data.data()),
             static_cast<std::streamsize>(fm.data.size() * sizeof(double)));
    if (!os) throw Error("short write on feature matrix: " + path);

    nlohmann::json side;
    side["columns"] = names;
    side["t0"] = t0;
    side["dt"] = dt;
    side["rows"] = fm.rows;
    std::ofstream js(path + ".json");
    js << side.dump(2) << '\n';
}

FeatureMatrix read_feature_matrix(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open feature matrix: " + path);
    char magic[4];
    is.read(magic, 4);
    std::uint32_t version = 0;
    is.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (!is || std::memcmp(magic, kTableMagic, 4) != 0 || version != kTableVersion)
        throw Error("bad feature matrix header: " + path);
    std::uint64_t rows = 0, cols = 0;
    is.read(reinterpret_cast<char*>(&rows), sizeof(rows));
    is.read(reinterpret_cast<char*>(&cols), sizeof(cols));
    FeatureMatrix fm(rows, cols);
    is.read(reinterpret_cast<char*>(fm.data.data()),
            static_cast<std::streamsize>(fm.data.size() * sizeof(double)));
    if (!is) throw Error("truncated feature matrix: " + path);
    return fm;
}

}  // namespace templink
