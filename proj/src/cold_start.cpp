#include "templink/cold_start.hpp"

#include <cmath>

#include <json.hpp>

namespace templink {

NewbornSet newborn_set(const TemporalGraph& g, double t0, double width) {
    if (!(width > 0.0 && width < t0)) throw Error("newborn_set: need 0 < width < t0");
    NewbornSet nb;
    nb.t0 = t0;
    nb.width = width;
    for (std::size_t u = 0; u < g.n_nodes(); ++u) {
        double b = g.birth(static_cast<NodeId>(u));
        // strict at t0 - width, inclusive at t0
        if (b > t0 - width && b <= t0) nb.members.push_back(static_cast<NodeId>(u));
    }
    if (nb.members.empty())
        throw Error("newborn_set: no node born in (" + std::to_string(t0 - width) + ", " +
                    std::to_string(t0) + "] — imputation undefined");
    return nb;
}

std::array<double, kNodeFeatureDim> impute_node_features(const NewbornSet& newborns,
                                                         const FeatureMatrix& features) {
    if (newborns.members.empty()) throw Error("impute_node_features: empty newborn set");
    if (features.cols != kNodeFeatureDim)
        throw Error("impute_node_features: feature matrix must have 31 columns");
    std::array<double, kNodeFeatureDim> mean{};
    for (NodeId u : newborns.members) {
        const double* row = features.row(u);
        for (std::size_t j = 0; j < kNodeFeatureDim; ++j) mean[j] += row[j];
    }
    for (auto& x : mean) x /= static_cast<double>(newborns.members.size());
    return mean;
}

double ImputedDefaults::dice_unseen_seen(const GraphView& view, NodeId v) const {
    return dice_node_set(view, v, population).value();
}

double ImputedDefaults::hoprec_unseen_seen(const EmbeddingTable& tbl, NodeId v) const {
    if (n_embedded == 0 || !tbl.has_vector(v)) return hoprec_uu;
    auto ev = tbl.vector(v);
    double norm = 0.0;
    for (double x : ev) norm += x * x;
    if (norm == 0.0) return 0.0;
    norm = std::sqrt(norm);
    double dot = 0.0;
    for (std::size_t i = 0; i < ev.size(); ++i) dot += unit_mean[i] * ev[i];
    // unit_mean already divides by n_embedded, so this is the exact mean cosine
    return dot / norm;
}

EdgeFeaturePair ImputedDefaults::impute_unseen_seen(const TemporalGraph& g,
                                                    const GraphView& view,
                                                    const EmbeddingTable& tbl,
                                                    NodeId v) const {
    if (g.birth(v) > t0)
        throw Error("impute_unseen_seen: node " + std::to_string(v) + " is unseen at t0");
    return {hoprec_unseen_seen(tbl, v), dice_unseen_seen(view, v)};
}

ImputedDefaults build_imputed_defaults(const TemporalGraph& g, const GraphView& t0_view,
                                       const FeatureMatrix& node_features,
                                       const EmbeddingTable& tbl, double t0,
                                       const ColdStartParams& params) {
    ImputedDefaults def;
    def.t0 = t0;
    def.width = params.width;

    NewbornSet nb = newborn_set(g, t0, params.width);
    if (params.population == ImputePopulation::Newborn) {
        def.population = nb.members;
    } else {
        for (std::size_t u = 0; u < g.n_nodes(); ++u)
            if (g.birth(static_cast<NodeId>(u)) <= t0)
                def.population.push_back(static_cast<NodeId>(u));
    }

    NewbornSet pop{t0, params.width, def.population};
    def.node_mean = impute_node_features(pop, node_features);

    def.dice_uu = def.population.size() >= 2
                      ? dice_set_set(t0_view, def.population).value()
                      : 0.0;

    // Mean cosine over unordered population pairs: with S = Σ unit vectors and
    // q = Σ ||unit||^2, the mean over m(m-1) ordered pairs is (||S||^2 - q)/(m(m-1)).
    def.unit_mean.assign(static_cast<std::size_t>(tbl.dim()), 0.0);
    std::vector<double> sum(static_cast<std::size_t>(tbl.dim()), 0.0);
    double sumsq = 0.0;
    std::size_t m = 0;
    for (NodeId u : def.population) {
        if (!tbl.has_vector(u)) continue;
        auto e = tbl.vector(u);
        double norm = 0.0;
        for (double x : e) norm += x * x;
        if (norm == 0.0) continue;
        norm = std::sqrt(norm);
        for (std::size_t i = 0; i < e.size(); ++i) sum[i] += e[i] / norm;
        sumsq += 1.0;
        ++m;
    }
    def.n_embedded = m;
    if (m >= 1)
        for (std::size_t i = 0; i < sum.size(); ++i)
            def.unit_mean[i] = sum[i] / static_cast<double>(m);
    if (m >= 2) {
        double s2 = 0.0;
        for (double x : sum) s2 += x * x;
        def.hoprec_uu = (s2 - sumsq) / (static_cast<double>(m) * (static_cast<double>(m) - 1.0));
    }
    return def;
}

std::string ImputedDefaults::to_json_string() const {
    nlohmann::json j;
    j["t0"] = t0;
    j["width"] = width;
    j["node_mean"] = node_mean;
    j["dice_unseen_unseen"] = dice_uu;
    j["hoprec_unseen_unseen"] = hoprec_uu;
    j["population_size"] = population.size();
    j["population_embedded"] = n_embedded;
    return j.dump(2);
}

}  // namespace templink
