#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "templink/cold_start.hpp"

using namespace templink;

namespace {

// 12 nodes appearing one day apart; with N=12 records node k is born at
// t = k/13 (nodes 0 and 1 share the first record).
TemporalGraph chain_fixture() {
    std::vector<TemporalRecord> recs;
    for (std::int64_t k = 1; k < 12; ++k) recs.push_back({k - 1, k, k});
    recs.push_back({0, 2, 12});
    return ingest(std::span<const TemporalRecord>(recs.data(), recs.size()));
}

// 16 nodes with a fixed arrival schedule (node k first appears on day 5k)
// plus extra edges that never move a birth. Births land on k-dependent
// quantiles, so the newborn window (0.4, 0.8] holds exactly nodes 7..13 and
// nodes 14,15 stay unseen at t0 = 0.8.
TemporalGraph spread_fixture() {
    std::vector<TemporalRecord> recs;
    for (std::int64_t k = 1; k <= 15; ++k) recs.push_back({k - 1, k, 5 * k});
    const std::vector<TemporalRecord> extras = {
        {0, 2, 12}, {1, 3, 18}, {0, 4, 22},  {2, 6, 33}, {3, 8, 44},
        {5, 10, 52}, {4, 12, 63}, {7, 13, 68}, {2, 14, 71},
    };
    recs.insert(recs.end(), extras.begin(), extras.end());
    return ingest(std::span<const TemporalRecord>(recs.data(), recs.size()));
}

struct Setup {
    TemporalGraph g;
    GraphView view;
    FeatureMatrix fm;
    EmbeddingTable tbl;
    ImputedDefaults def;
    double t0;
};

Setup build_setup(std::uint64_t seed, double t0 = 0.8, double width = 0.4) {
    Setup s{spread_fixture(), {}, {}, {}, {}, t0};
    s.view = s.g.snapshot(0.0, t0);
    FeatureContext ctx(s.g, t0, 0.1);
    s.fm = ctx.all_node_features(1);
    EmbedParams p;
    p.dim = 6;
    p.epochs = 3;
    p.seed = seed;
    s.tbl = train_embeddings(s.view, p);
    ColdStartParams cs;
    cs.width = width;
    s.def = build_imputed_defaults(s.g, s.view, s.fm, s.tbl, t0, cs);
    return s;
}

oracles::EdgeList view_edges(const Setup& s) {
    oracles::EdgeList edges;
    for (std::size_t u = 0; u < s.g.n_nodes(); ++u)
        for (NodeId v : s.view.neighbors(static_cast<NodeId>(u)))
            if (u < v) edges.emplace_back(static_cast<NodeId>(u), v);
    return edges;
}

}  // namespace

TEST_CASE("newborn_set membership: strict lower bound, inclusive upper") {
    auto g = chain_fixture();
    // births: node0 -> 1/13, node k -> k/13
    const double t0 = 9.0 / 13.0;
    auto nb = newborn_set(g, t0, 2.0 / 13.0);
    // window (7/13, 9/13]: nodes born at 8/13 and 9/13
    REQUIRE(nb.members.size() == 2);
    CHECK(g.birth(nb.members[0]) == doctest::Approx(8.0 / 13.0));
    CHECK(g.birth(nb.members[1]) == doctest::Approx(9.0 / 13.0));
    // a node born exactly at t0 - width is excluded
    for (NodeId u : nb.members) CHECK(g.birth(u) > t0 - 2.0 / 13.0);
}

TEST_CASE("newborn_set errors when the window is empty or malformed") {
    auto g = chain_fixture();
    // births sit exactly on k/13; this window dodges them all
    CHECK_THROWS_AS(newborn_set(g, 2.5 / 13.0, 0.4 / 13.0), Error);
    CHECK_THROWS_AS(newborn_set(g, 0.5, 0.9), Error);
}

TEST_CASE("spread fixture has the advertised newborn window and unseen nodes") {
    auto g = spread_fixture();
    auto nb = newborn_set(g, 0.8, 0.4);
    REQUIRE(nb.members.size() == 7);  // nodes 7..13
    for (NodeId u : nb.members) {
        CHECK(g.birth(u) > 0.4);
        CHECK(g.birth(u) <= 0.8);
    }
    CHECK(g.birth(14) > 0.8);
    CHECK(g.birth(15) > 0.8);
}

TEST_CASE("impute_node_features is the exact component-wise mean") {
    auto g = chain_fixture();
    auto nb = newborn_set(g, 9.0 / 13.0, 3.0 / 13.0);
    REQUIRE(nb.members.size() == 3);

    FeatureMatrix fm(g.n_nodes(), kNodeFeatureDim);
    Rng rng(17);
    for (auto& x : fm.data) x = rng.uniform(-5.0, 5.0);

    auto mean = impute_node_features(nb, fm);
    for (std::size_t j = 0; j < kNodeFeatureDim; ++j) {
        double acc = 0.0, lo = 1e300, hi = -1e300;
        for (NodeId u : nb.members) {
            acc += fm.row(u)[j];
            lo = std::min(lo, fm.row(u)[j]);
            hi = std::max(hi, fm.row(u)[j]);
        }
        CHECK(mean[j] == doctest::Approx(acc / 3.0).epsilon(1e-12));
        CHECK(mean[j] >= lo - 1e-12);  // mean stays inside the newborn range
        CHECK(mean[j] <= hi + 1e-12);
    }

    NewbornSet single{nb.t0, nb.width, {nb.members[0]}};
    auto own = impute_node_features(single, fm);
    for (std::size_t j = 0; j < kNodeFeatureDim; ++j)
        CHECK(own[j] == fm.row(nb.members[0])[j]);
}

TEST_CASE("unseen-unseen dice equals the Eq.-(4) ratio-of-sums oracle") {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        auto s = build_setup(seed);
        REQUIRE(s.def.population.size() >= 2);
        auto expect = oracles::dice_set_set(s.g.n_nodes(), view_edges(s), s.def.population);
        CHECK(s.def.dice_uu == doctest::Approx(expect.value()).epsilon(1e-15));
        CHECK(s.def.dice_uu >= 0.0);
        CHECK(s.def.dice_uu <= 1.0);
    }
}

TEST_CASE("unseen-seen dice equals the Eq.-(3) oracle for every seen node") {
    auto s = build_setup(3);
    auto edges = view_edges(s);
    for (std::size_t v = 0; v < s.g.n_nodes(); ++v) {
        if (s.g.birth(static_cast<NodeId>(v)) > s.def.t0) continue;
        auto expect = oracles::dice_node_set(s.g.n_nodes(), edges, static_cast<NodeId>(v),
                                             s.def.population);
        CHECK(s.def.dice_unseen_seen(s.view, static_cast<NodeId>(v)) ==
              doctest::Approx(expect.value()).epsilon(1e-15));
    }
}

TEST_CASE("hoprec_uu is the exact mean cosine over population pairs") {
    auto s = build_setup(4);
    std::vector<NodeId> embedded;
    for (NodeId u : s.def.population)
        if (s.tbl.has_vector(u)) embedded.push_back(u);
    REQUIRE(embedded.size() >= 2);
    double acc = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < embedded.size(); ++i)
        for (std::size_t j = i + 1; j < embedded.size(); ++j) {
            acc += hoprec_score(s.tbl, embedded[i], embedded[j]);
            ++cnt;
        }
    CHECK(s.def.hoprec_uu == doctest::Approx(acc / cnt).epsilon(1e-10));
}

TEST_CASE("identical embeddings give hoprec_uu of exactly 1") {
    auto g = chain_fixture();
    auto view = g.snapshot(0.0, 0.9);
    FeatureContext ctx(g, 0.9, 0.2);
    auto fm = ctx.all_node_features(1);
    EmbeddingTable tbl(g.n_nodes(), 4);
    for (std::size_t u = 0; u < g.n_nodes(); ++u) {
        tbl.add_vector(static_cast<NodeId>(u));
        auto v = tbl.mutable_vector(static_cast<NodeId>(u));
        v[0] = 0.5;
        v[1] = -0.25;
        v[2] = 1.0;
        v[3] = 2.0;
    }
    ColdStartParams cs;
    cs.width = 0.3;
    auto def = build_imputed_defaults(g, view, fm, tbl, 0.9, cs);
    CHECK(def.hoprec_uu == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("hoprec unseen-seen mean matches per-newborn averaging") {
    auto s = build_setup(5);
    std::vector<NodeId> embedded;
    for (NodeId u : s.def.population)
        if (s.tbl.has_vector(u)) embedded.push_back(u);
    REQUIRE(!embedded.empty());
    for (std::size_t v = 0; v < s.g.n_nodes(); ++v) {
        if (!s.tbl.has_vector(static_cast<NodeId>(v))) continue;
        double acc = 0.0;
        for (NodeId u : embedded) acc += hoprec_score(s.tbl, u, static_cast<NodeId>(v));
        double expect = acc / static_cast<double>(embedded.size());
        CHECK(s.def.hoprec_unseen_seen(s.tbl, static_cast<NodeId>(v)) ==
              doctest::Approx(expect).epsilon(1e-10));
    }
}

TEST_CASE("singleton population collapses unseen-seen to the single pair") {
    auto s = build_setup(6);
    ImputedDefaults def = s.def;
    NodeId only = s.def.population.front();
    REQUIRE(s.tbl.has_vector(only));
    def.population = {only};
    auto e = s.tbl.vector(only);
    double norm = 0.0;
    for (double x : e) norm += x * x;
    norm = std::sqrt(norm);
    def.unit_mean.assign(e.size(), 0.0);
    for (std::size_t i = 0; i < e.size(); ++i) def.unit_mean[i] = e[i] / norm;
    def.n_embedded = 1;
    for (std::size_t v = 0; v < s.g.n_nodes(); ++v) {
        NodeId vv = static_cast<NodeId>(v);
        if (vv == only || s.g.birth(vv) > def.t0 || !s.tbl.has_vector(vv)) continue;
        auto pair = def.impute_unseen_seen(s.g, s.view, s.tbl, vv);
        CHECK(pair.hoprec == doctest::Approx(hoprec_score(s.tbl, only, vv)).epsilon(1e-12));
        CHECK(pair.dice == doctest::Approx(dice(s.view, only, vv)).epsilon(1e-12));
    }
}

TEST_CASE("impute_unseen_seen rejects unseen v and imputation is deterministic") {
    auto s = build_setup(7);
    CHECK_THROWS_AS(s.def.impute_unseen_seen(s.g, s.view, s.tbl, 15), Error);

    auto s2 = build_setup(7);
    CHECK(s.def.dice_uu == s2.def.dice_uu);
    CHECK(s.def.hoprec_uu == s2.def.hoprec_uu);
    for (std::size_t j = 0; j < kNodeFeatureDim; ++j)
        CHECK(s.def.node_mean[j] == s2.def.node_mean[j]);
}

TEST_CASE("population switch widens the averaging set to all seen nodes") {
    auto s = build_setup(9);
    ColdStartParams cs;
    cs.width = 0.4;
    cs.population = ImputePopulation::Seen;
    auto def = build_imputed_defaults(s.g, s.view, s.fm, s.tbl, 0.8, cs);
    CHECK(def.population.size() == 14);  // every node born by t0
    CHECK(def.population.size() > s.def.population.size());
}

TEST_CASE("imputed defaults serialize to JSON") {
    auto s = build_setup(8);
    auto js = s.def.to_json_string();
    CHECK(js.find("node_mean") != std::string::npos);
    CHECK(js.find("dice_unseen_unseen") != std::string::npos);
}
