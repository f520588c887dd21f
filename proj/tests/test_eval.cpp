#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "oracles.hpp"
#include "templink/eval.hpp"

using namespace templink;

TEST_CASE("auc on the three-point example is one half") {
    std::vector<double> s = {0.9, 0.8, 0.3};
    std::vector<std::uint8_t> y = {1, 0, 1};
    auto r = auc(s, y);
    CHECK(r.auc == doctest::Approx(0.5));
    CHECK(r.n_pos == 2);
    CHECK(r.n_neg == 1);
    CHECK_FALSE(r.had_ties);
}

TEST_CASE("perfect ordering gives 1.0, all-equal gives 0.5") {
    std::vector<double> s = {0.9, 0.8, 0.2, 0.1};
    std::vector<std::uint8_t> y = {1, 1, 0, 0};
    CHECK(auc(s, y).auc == doctest::Approx(1.0));

    std::vector<double> eq = {0.4, 0.4, 0.4, 0.4};
    auto r = auc(eq, y);
    CHECK(r.auc == doctest::Approx(0.5));
    CHECK(r.had_ties);
}

TEST_CASE("auc errors: one class absent, non-finite scores") {
    std::vector<double> s = {0.1, 0.2};
    std::vector<std::uint8_t> ones = {1, 1};
    CHECK_THROWS_AS(auc(s, ones), Error);
    std::vector<double> bad = {0.1, std::numeric_limits<double>::infinity()};
    std::vector<std::uint8_t> y = {0, 1};
    CHECK_THROWS_AS(auc(bad, y), Error);
}

TEST_CASE("fast auc equals the brute-force pairwise count exactly") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(3000 + seed);
        std::size_t n = 5 + rng.below(196);
        std::vector<double> s(n);
        std::vector<std::uint8_t> y(n);
        for (auto& x : s) x = std::round(rng.uniform() * 20.0) / 20.0;  // force ties
        bool has0 = false, has1 = false;
        for (auto& l : y) {
            l = rng.uniform() < 0.5;
            (l ? has1 : has0) = true;
        }
        if (!has0) y[0] = 0;
        if (!has1) y[n - 1] = 1;

        auto r = auc(s, y);
        std::uint64_t wins2 = 0;
        double expect = oracles::auc_brute(s, y, &wins2);
        CHECK(2 * r.wins + r.ties == wins2);  // integer tallies agree
        CHECK(r.auc == expect);               // same integers, same division
    }
}

TEST_CASE("auc is invariant under strictly monotone score transforms") {
    Rng rng(9);
    std::size_t n = 150;
    std::vector<double> s(n);
    std::vector<std::uint8_t> y(n);
    for (auto& x : s) x = rng.uniform(-3.0, 3.0);
    for (std::size_t i = 0; i < n; ++i) y[i] = rng.uniform() < 0.4;
    y[0] = 0;
    y[1] = 1;
    auto base = auc(s, y);

    std::vector<double> exp_s(n), affine(n);
    for (std::size_t i = 0; i < n; ++i) {
        exp_s[i] = std::exp(s[i]);
        affine[i] = 2.5 * s[i] + 7.0;
    }
    CHECK(auc(exp_s, y).auc == base.auc);
    CHECK(auc(affine, y).auc == base.auc);
}

TEST_CASE("auc complement identity when no ties") {
    Rng rng(10);
    std::size_t n = 120;
    std::vector<double> s(n);
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = rng.uniform() + i * 1e-9;  // distinct
        y[i] = rng.uniform() < 0.5;
    }
    y[0] = 0;
    y[1] = 1;
    std::vector<double> neg(n);
    for (std::size_t i = 0; i < n; ++i) neg[i] = -s[i];
    CHECK(auc(s, y).auc + auc(neg, y).auc == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("rank_pairs sorts descending with index tie-break") {
    std::vector<double> s = {0.2, 0.9, 0.5};
    auto sub = rank_pairs(s);
    CHECK(sub.order == std::vector<std::size_t>{1, 2, 0});

    std::vector<double> eq = {0.4, 0.4, 0.4};
    CHECK(rank_pairs(eq).order == std::vector<std::size_t>{0, 1, 2});

    std::vector<double> bad = {0.4, std::numeric_limits<double>::quiet_NaN()};
    CHECK_THROWS_AS(rank_pairs(bad), Error);
}

TEST_CASE("rank_pairs output is a permutation and deterministic") {
    Rng rng(12);
    std::vector<double> s(5000);
    for (auto& x : s) x = std::round(rng.uniform() * 50.0) / 50.0;
    auto a = rank_pairs(s);
    auto b = rank_pairs(s);
    CHECK(a.order == b.order);
    std::vector<bool> seen(s.size(), false);
    for (auto i : a.order) {
        CHECK_FALSE(seen[i]);
        seen[i] = true;
    }
    for (bool x : seen) CHECK(x);
}

TEST_CASE("compare_models flags the best and notes ties") {
    AucReport a;
    a.auc = 0.9250;
    a.n_pos = a.n_neg = 10;
    AucReport b;
    b.auc = 0.92739;
    b.n_pos = b.n_neg = 10;
    auto cmp = compare_models({{"logistic", a}, {"mlp13x5", b}});
    CHECK(cmp.entries.front().name == "mlp13x5");
    CHECK(cmp.entries.front().best);
    CHECK_FALSE(cmp.entries.back().best);
    CHECK_FALSE(cmp.tie_for_best);

    auto solo = compare_models({{"only", a}});
    CHECK(solo.entries.front().best);

    auto tied = compare_models({{"x", a}, {"y", a}});
    CHECK(tied.tie_for_best);
    CHECK(tied.entries[0].best);
    CHECK(tied.entries[1].best);
}

TEST_CASE("submission and report files round-trip") {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "templink_eval_test";
    fs::create_directories(dir);

    std::vector<double> s = {0.1, 0.7, 0.4};
    auto sub = rank_pairs(s);
    auto sub_path = (dir / "submission.json").string();
    write_submission_json(sub_path, sub);
    auto order = read_submission_json(sub_path);
    CHECK(order == sub.order);

    std::vector<std::pair<std::int64_t, std::int64_t>> pairs = {{1, 2}, {3, 4}, {5, 6}};
    write_scores_csv((dir / "scores.csv").string(), s, pairs);
    std::ifstream is(dir / "scores.csv");
    std::string header;
    std::getline(is, header);
    CHECK(header == "pair_index,u,v,score");

    AucReport r;
    r.auc = 0.75;
    r.n_pos = 2;
    r.n_neg = 1;
    write_report_json((dir / "report.json").string(), compare_models({{"m", r}}));
    CHECK(fs::exists(dir / "report.json"));
    fs::remove_all(dir);
}
