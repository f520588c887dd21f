#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "templink/models.hpp"

using namespace templink;

namespace {

struct Toy {
    std::vector<double> X;
    std::vector<std::uint8_t> y;
    std::size_t rows, cols;
    ConstMatrixMap map() const {
        return ConstMatrixMap(X.data(), static_cast<Eigen::Index>(rows),
                              static_cast<Eigen::Index>(cols));
    }
};

Toy linearly_separable(std::size_t n, std::uint64_t seed) {
    Toy t;
    t.rows = n;
    t.cols = 2;
    t.X.resize(n * 2);
    t.y.resize(n);
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        bool pos = i % 2 == 0;
        t.X[2 * i] = rng.uniform(-1.0, 1.0) + (pos ? 2.0 : -2.0);
        t.X[2 * i + 1] = rng.uniform(-1.0, 1.0);
        t.y[i] = pos;
    }
    return t;
}

Toy xor_pattern(std::size_t n, std::uint64_t seed) {
    Toy t;
    t.rows = n;
    t.cols = 2;
    t.X.resize(n * 2);
    t.y.resize(n);
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        double a = rng.uniform(-1.0, 1.0), b = rng.uniform(-1.0, 1.0);
        t.X[2 * i] = a;
        t.X[2 * i + 1] = b;
        t.y[i] = (a > 0.0) != (b > 0.0);
    }
    return t;
}

Toy random_toy(std::size_t n, std::size_t d, std::uint64_t seed) {
    Toy t;
    t.rows = n;
    t.cols = d;
    t.X.resize(n * d);
    t.y.resize(n);
    Rng rng(seed);
    for (auto& x : t.X) x = rng.uniform(-2.0, 2.0);
    for (std::size_t i = 0; i < n; ++i) t.y[i] = rng.uniform() < 0.5;
    bool has0 = false, has1 = false;
    for (auto v : t.y) (v ? has1 : has0) = true;
    if (!has0) t.y[0] = 0;
    if (!has1) t.y[1] = 1;
    return t;
}

}  // namespace

TEST_CASE("logistic training separates a separable set with decreasing loss") {
    auto toy = linearly_separable(200, 1);
    auto m = train_logistic(toy.map(), toy.y, {1.0, 1e-7, 2000});
    auto p = predict_proba(m, toy.map());
    std::size_t correct = 0;
    for (std::size_t i = 0; i < toy.rows; ++i)
        correct += (p[static_cast<Eigen::Index>(i)] > 0.5) == (toy.y[i] == 1);
    CHECK(correct == toy.rows);
}

TEST_CASE("logistic rejects degenerate labels and non-finite features") {
    auto toy = linearly_separable(50, 2);
    std::vector<std::uint8_t> ones(toy.rows, 1);
    CHECK_THROWS_AS(train_logistic(toy.map(), ones, {}), Error);
    auto bad = toy;
    bad.X[3] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(train_logistic(bad.map(), bad.y, {}), Error);
}

TEST_CASE("logistic gradient matches central finite differences") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto toy = random_toy(10, 4, 100 + seed);
        Rng rng(seed);
        Eigen::VectorXd w(4);
        for (int j = 0; j < 4; ++j) w[j] = rng.uniform(-1.0, 1.0);
        double b = rng.uniform(-0.5, 0.5);

        double loss;
        Eigen::VectorXd grad_w(4);
        double grad_b;
        logistic_loss_grad(w, b, toy.map(), toy.y, 0.7, loss, grad_w, grad_b);

        const double step = 1e-5;
        for (int j = 0; j < 4; ++j) {
            double fd = oracles::central_diff(
                [&] { return logistic_loss(w, b, toy.map(), toy.y, 0.7); }, w[j], step);
            CHECK(std::abs(fd - grad_w[j]) < 1e-6);
        }
        double fd_b = oracles::central_diff(
            [&] { return logistic_loss(w, b, toy.map(), toy.y, 0.7); }, b, step);
        CHECK(std::abs(fd_b - grad_b) < 1e-6);
    }
}

TEST_CASE("logistic loss is convex: two starts converge to the same loss") {
    auto toy = random_toy(100, 5, 42);
    LogisticParams a;
    a.tol = 1e-10;
    a.max_iter = 5000;
    auto m1 = train_logistic(toy.map(), toy.y, a);
    LogisticParams bparams = a;
    bparams.init_w = {0.5, -0.3, 0.8, -0.9, 0.1};
    bparams.init_b = 0.7;
    auto m2 = train_logistic(toy.map(), toy.y, bparams);
    CHECK(m1.converged);
    CHECK(m2.converged);
    CHECK(std::abs(m1.final_loss - m2.final_loss) < 1e-8);
}

TEST_CASE("predict_proba closed forms") {
    LogisticModel m;
    m.w = Eigen::VectorXd::Zero(3);
    m.b = 0.0;
    std::vector<double> X = {1.0, 2.0, 3.0, -1.0, 0.0, 4.0};
    ConstMatrixMap Xm(X.data(), 2, 3);
    auto p = predict_proba(m, Xm);
    CHECK(p[0] == doctest::Approx(0.5));
    CHECK(p[1] == doctest::Approx(0.5));

    m.w[0] = 1.0;
    std::vector<double> X2 = {std::log(3.0), 0.0, 0.0};
    ConstMatrixMap Xm2(X2.data(), 1, 3);
    CHECK(predict_proba(m, Xm2)[0] == doctest::Approx(0.75).epsilon(1e-12));

    std::vector<double> Xw = {1.0, 2.0};
    ConstMatrixMap bad(Xw.data(), 1, 2);
    CHECK_THROWS_AS(predict_proba(m, bad), Error);
}

TEST_CASE("mlp learns the xor pattern") {
    auto toy = xor_pattern(600, 9);
    MlpParams p;
    p.hidden = {8, 8};
    p.max_epochs = 400;
    p.patience = 50;
    p.seed = 1;
    auto m = train_mlp(toy.map(), toy.y, p);
    auto proba = predict_proba(m, toy.map());
    std::size_t correct = 0;
    for (std::size_t i = 0; i < toy.rows; ++i)
        correct += (proba[static_cast<Eigen::Index>(i)] > 0.5) == (toy.y[i] == 1);
    CHECK(static_cast<double>(correct) / toy.rows > 0.95);
}

TEST_CASE("zero-epoch budget returns an initialized model with outputs in (0,1)") {
    auto toy = random_toy(40, 6, 3);
    MlpParams p;
    p.max_epochs = 0;
    p.seed = 2;
    auto m = train_mlp(toy.map(), toy.y, p);
    CHECK(m.epochs_run == 0);
    auto proba = predict_proba(m, toy.map());
    for (Eigen::Index i = 0; i < proba.size(); ++i) {
        CHECK(proba[i] > 0.0);
        CHECK(proba[i] < 1.0);
    }
}

TEST_CASE("mlp backprop matches central finite differences on all layers") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto toy = random_toy(5, 3, 500 + seed);
        auto m = init_mlp(3, {4, 3}, seed);
        std::vector<RowMatrix> gW;
        std::vector<Eigen::VectorXd> gb;
        const double wd = 1e-3;
        mlp_loss_grad(m, toy.map(), toy.y, wd, gW, gb);

        const double step = 1e-5;
        double max_rel = 0.0;
        for (std::size_t l = 0; l < m.W.size(); ++l) {
            for (Eigen::Index r = 0; r < m.W[l].rows(); ++r)
                for (Eigen::Index c = 0; c < m.W[l].cols(); ++c) {
                    double fd = oracles::central_diff(
                        [&] { return mlp_loss(m, toy.map(), toy.y, wd); }, m.W[l](r, c), step);
                    double denom = std::max({std::abs(fd), std::abs(gW[l](r, c)), 1e-8});
                    max_rel = std::max(max_rel, std::abs(fd - gW[l](r, c)) / denom);
                }
            for (Eigen::Index r = 0; r < m.b[l].size(); ++r) {
                double fd = oracles::central_diff(
                    [&] { return mlp_loss(m, toy.map(), toy.y, wd); }, m.b[l][r], step);
                double denom = std::max({std::abs(fd), std::abs(gb[l][r]), 1e-8});
                max_rel = std::max(max_rel, std::abs(fd - gb[l][r]) / denom);
            }
        }
        CHECK(max_rel < 1e-4);
    }
}

TEST_CASE("seeded mlp training is bit-reproducible") {
    auto toy = xor_pattern(200, 4);
    MlpParams p;
    p.hidden = {6, 6};
    p.max_epochs = 30;
    p.seed = 77;
    auto m1 = train_mlp(toy.map(), toy.y, p);
    auto m2 = train_mlp(toy.map(), toy.y, p);
    REQUIRE(m1.W.size() == m2.W.size());
    for (std::size_t l = 0; l < m1.W.size(); ++l) {
        for (Eigen::Index i = 0; i < m1.W[l].size(); ++i)
            CHECK(m1.W[l].data()[i] == m2.W[l].data()[i]);
        for (Eigen::Index i = 0; i < m1.b[l].size(); ++i) CHECK(m1.b[l][i] == m2.b[l][i]);
    }
}

TEST_CASE("mlp output is invariant to row order") {
    auto toy = random_toy(30, 5, 6);
    MlpParams p;
    p.hidden = {7};
    p.max_epochs = 5;
    p.seed = 5;
    auto m = train_mlp(toy.map(), toy.y, p);
    auto proba = predict_proba(m, toy.map());

    // reversed batch
    Toy rev = toy;
    for (std::size_t i = 0; i < toy.rows; ++i)
        for (std::size_t j = 0; j < toy.cols; ++j)
            rev.X[i * toy.cols + j] = toy.X[(toy.rows - 1 - i) * toy.cols + j];
    auto proba_rev = predict_proba(m, rev.map());
    for (std::size_t i = 0; i < toy.rows; ++i)
        CHECK(proba[static_cast<Eigen::Index>(i)] ==
              proba_rev[static_cast<Eigen::Index>(toy.rows - 1 - i)]);
}

TEST_CASE("feature_report ranks by |weight| with index tie-break") {
    LogisticModel m;
    m.w = Eigen::VectorXd(3);
    m.w << 0.1, -2.0, 0.5;
    std::vector<std::string> names = {"a", "b", "c"};
    auto rep = feature_report(m, names);
    REQUIRE(rep.size() == 3);
    CHECK(rep[0].name == "b");
    CHECK(rep[1].name == "c");
    CHECK(rep[2].name == "a");

    m.w << 0.5, -0.5, 0.5;
    auto tied = feature_report(m, names);
    CHECK(tied[0].index == 0);
    CHECK(tied[1].index == 1);
    CHECK(tied[2].index == 2);
}

TEST_CASE("planted signal puts the informative column first") {
    Toy t;
    t.rows = 400;
    t.cols = 4;
    t.X.resize(t.rows * t.cols);
    t.y.resize(t.rows);
    Rng rng(8);
    for (std::size_t i = 0; i < t.rows; ++i) {
        t.y[i] = rng.uniform() < 0.5;
        t.X[i * 4 + 0] = (t.y[i] ? 1.0 : -1.0) + rng.uniform(-0.2, 0.2);
        for (std::size_t j = 1; j < 4; ++j) t.X[i * 4 + j] = rng.uniform(-1.0, 1.0);
    }
    auto m = train_logistic(t.map(), t.y, {1.0, 1e-8, 2000});
    auto rep = feature_report(m, std::vector<std::string>{"signal", "n1", "n2", "n3"});
    CHECK(rep[0].name == "signal");
}

TEST_CASE("model bundles round-trip through the binary format") {
    namespace fs = std::filesystem;
    auto toy = xor_pattern(150, 12);
    MlpParams p;
    p.hidden = {5, 4};
    p.max_epochs = 10;
    p.seed = 21;
    ModelBundle bundle;
    bundle.type = ModelBundle::Type::Mlp;
    bundle.mlp = train_mlp(toy.map(), toy.y, p);
    bundle.scaler_mean = {0.5, -0.5};
    bundle.scaler_stdev = {1.0, 2.0};
    bundle.n_scaled = 2;

    auto path = (fs::temp_directory_path() / "templink_model.bin").string();
    save_model(bundle, path);
    auto back = load_model(path);
    REQUIRE(back.type == ModelBundle::Type::Mlp);
    REQUIRE(back.mlp.sizes == bundle.mlp.sizes);
    for (std::size_t l = 0; l < bundle.mlp.W.size(); ++l)
        for (Eigen::Index i = 0; i < bundle.mlp.W[l].size(); ++i)
            CHECK(back.mlp.W[l].data()[i] == bundle.mlp.W[l].data()[i]);
    CHECK(back.scaler_mean == bundle.scaler_mean);
    CHECK(back.n_scaled == 2);

    auto proba1 = predict_proba(bundle.mlp, toy.map());
    auto proba2 = predict_proba(back.mlp, toy.map());
    for (Eigen::Index i = 0; i < proba1.size(); ++i) CHECK(proba1[i] == proba2[i]);

    // logistic bundle too
    auto sep = linearly_separable(80, 30);
    ModelBundle lb;
    lb.type = ModelBundle::Type::Logistic;
    lb.logistic = train_logistic(sep.map(), sep.y, {});
    auto lpath = (fs::temp_directory_path() / "templink_logit.bin").string();
    save_model(lb, lpath);
    auto lback = load_model(lpath);
    CHECK(lback.type == ModelBundle::Type::Logistic);
    for (Eigen::Index i = 0; i < lb.logistic.w.size(); ++i)
        CHECK(lback.logistic.w[i] == lb.logistic.w[i]);
    CHECK(lback.logistic.b == lb.logistic.b);
    fs::remove(path);
    fs::remove(path + ".json");
    fs::remove(lpath);
    fs::remove(lpath + ".json");
}
