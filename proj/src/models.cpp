#include "templink/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "templink/rng.hpp"

namespace templink {

namespace {

inline double log1pexp(double z) {
    // log(1 + e^z) without overflow
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

inline double clamp_proba(double p) { return std::min(std::max(p, 1e-12), 1.0 - 1e-12); }

void check_finite(ConstMatrixMap X) {
    if (!X.allFinite()) throw Error("non-finite feature values");
}

void check_labels(std::span<const std::uint8_t> y) {
    bool has0 = false, has1 = false;
    for (auto v : y) (v ? has1 : has0) = true;
    if (!has0 || !has1) throw Error("degenerate labels: both classes required");
}

}  // namespace

double logistic_loss(const Eigen::VectorXd& w, double b, ConstMatrixMap X,
                     std::span<const std::uint8_t> y, double l2) {
    const auto n = X.rows();
    Eigen::VectorXd z = X * w;
    z.array() += b;
    double nll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        nll += log1pexp(z[i]) - (y[static_cast<std::size_t>(i)] ? z[i] : 0.0);
    return nll / static_cast<double>(n) +
           0.5 * l2 / static_cast<double>(n) * w.squaredNorm();
}

void logistic_loss_grad(const Eigen::VectorXd& w, double b, ConstMatrixMap X,
                        std::span<const std::uint8_t> y, double l2, double& loss,
                        Eigen::VectorXd& grad_w, double& grad_b) {
    const auto n = X.rows();
    const double inv_n = 1.0 / static_cast<double>(n);
    Eigen::VectorXd z = X * w;
    z.array() += b;
    Eigen::VectorXd resid(n);
    double nll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double p = 1.0 / (1.0 + std::exp(-z[i]));
        resid[i] = p - (y[static_cast<std::size_t>(i)] ? 1.0 : 0.0);
        nll += log1pexp(z[i]) - (y[static_cast<std::size_t>(i)] ? z[i] : 0.0);
    }
    loss = nll * inv_n + 0.5 * l2 * inv_n * w.squaredNorm();
    grad_w = (X.transpose() * resid) * inv_n + (l2 * inv_n) * w;
    grad_b = resid.sum() * inv_n;
}

LogisticModel train_logistic(ConstMatrixMap X, std::span<const std::uint8_t> y,
                             const LogisticParams& params) {
    if (static_cast<std::size_t>(X.rows()) != y.size())
        throw Error("train_logistic: X/y size mismatch");
    check_finite(X);
    check_labels(y);

    LogisticModel m;
    m.l2 = params.l2;
    m.w = Eigen::VectorXd::Zero(X.cols());
    if (!params.init_w.empty()) {
        if (params.init_w.size() != static_cast<std::size_t>(X.cols()))
            throw Error("train_logistic: init_w width mismatch");
        m.w = Eigen::Map<const Eigen::VectorXd>(params.init_w.data(), X.cols());
    }
    m.b = params.init_b;

    Eigen::VectorXd grad_w(X.cols());
    double grad_b = 0.0, loss = 0.0;
    double step = 1.0;
    for (int it = 1; it <= params.max_iter; ++it) {
        logistic_loss_grad(m.w, m.b, X, y, params.l2, loss, grad_w, grad_b);
        m.iterations = it;
        m.final_loss = loss;
        const double gnorm_inf = std::max(grad_w.cwiseAbs().maxCoeff(), std::abs(grad_b));
        if (gnorm_inf < params.tol) {
            m.converged = true;
            break;
        }
        const double gsq = grad_w.squaredNorm() + grad_b * grad_b;
        // Armijo backtracking along the negative gradient
        double t = std::min(step * 2.0, 1e6);
        bool moved = false;
        while (t > 1e-18) {
            Eigen::VectorXd w_try = m.w - t * grad_w;
            double b_try = m.b - t * grad_b;
            double loss_try = logistic_loss(w_try, b_try, X, y, params.l2);
            if (loss_try <= loss - 1e-4 * t * gsq) {
                m.w.swap(w_try);
                m.b = b_try;
                m.final_loss = loss_try;
                step = t;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if (!moved) break;  // no descent step representable
    }
    return m;
}

Eigen::VectorXd predict_proba(const LogisticModel& m, ConstMatrixMap X) {
    if (X.cols() != m.w.size()) throw Error("predict_proba: feature width mismatch");
    Eigen::VectorXd z = X * m.w;
    z.array() += m.b;
    Eigen::VectorXd p(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i)
        p[i] = clamp_proba(1.0 / (1.0 + std::exp(-z[i])));
    return p;
}

MlpModel init_mlp(int input_dim, const std::vector<int>& hidden, std::uint64_t seed) {
    MlpModel m;
    m.seed = seed;
    m.sizes.push_back(input_dim);
    for (int h : hidden) {
        if (h <= 0) throw Error("init_mlp: layer sizes must be positive");
        m.sizes.push_back(h);
    }
    m.sizes.push_back(1);

    Rng rng(derive_seed(seed, 0xA1));
    for (std::size_t l = 0; l + 1 < m.sizes.size(); ++l) {
        int fan_in = m.sizes[l], fan_out = m.sizes[l + 1];
        double limit = std::sqrt(6.0 / (fan_in + fan_out));
        RowMatrix W(fan_out, fan_in);
        for (int r = 0; r < fan_out; ++r)
            for (int c = 0; c < fan_in; ++c) W(r, c) = rng.uniform(-limit, limit);
        m.W.push_back(std::move(W));
        m.b.emplace_back(Eigen::VectorXd::Zero(fan_out));
    }
    return m;
}

namespace {

// Forward pass keeping pre-activations; returns output logits (batch x 1).
Eigen::VectorXd mlp_forward(const MlpModel& m, const Eigen::Ref<const RowMatrix>& X,
                            std::vector<RowMatrix>* activations) {
    RowMatrix a = X;
    if (activations) activations->push_back(a);
    const std::size_t L = m.W.size();
    for (std::size_t l = 0; l + 1 < L; ++l) {
        RowMatrix z = a * m.W[l].transpose();
        z.rowwise() += m.b[l].transpose();
        a = z.cwiseMax(0.0);
        if (activations) activations->push_back(a);
    }
    Eigen::VectorXd logits = (a * m.W[L - 1].transpose()).col(0);
    logits.array() += m.b[L - 1][0];
    return logits;
}

double penalty(const MlpModel& m, double weight_decay) {
    double s = 0.0;
    for (const auto& W : m.W) s += W.squaredNorm();
    return 0.5 * weight_decay * s;
}

}  // namespace

double mlp_loss(const MlpModel& m, ConstMatrixMap X, std::span<const std::uint8_t> y,
                double weight_decay) {
    Eigen::VectorXd z = mlp_forward(m, X, nullptr);
    double nll = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i)
        nll += log1pexp(z[i]) - (y[static_cast<std::size_t>(i)] ? z[i] : 0.0);
    return nll / static_cast<double>(z.size()) + penalty(m, weight_decay);
}

double mlp_loss_grad(const MlpModel& m, ConstMatrixMap X, std::span<const std::uint8_t> y,
                     double weight_decay, std::vector<RowMatrix>& grad_W,
                     std::vector<Eigen::VectorXd>& grad_b) {
    const std::size_t L = m.W.size();
    std::vector<RowMatrix> acts;
    acts.reserve(L);
    Eigen::VectorXd z = mlp_forward(m, X, &acts);

    const auto n = X.rows();
    const double inv_n = 1.0 / static_cast<double>(n);
    double nll = 0.0;
    Eigen::VectorXd delta(n);  // dL/dz for the sigmoid-BCE head
    for (Eigen::Index i = 0; i < n; ++i) {
        nll += log1pexp(z[i]) - (y[static_cast<std::size_t>(i)] ? z[i] : 0.0);
        double p = 1.0 / (1.0 + std::exp(-z[i]));
        delta[i] = (p - (y[static_cast<std::size_t>(i)] ? 1.0 : 0.0)) * inv_n;
    }

    grad_W.assign(L, RowMatrix());
    grad_b.assign(L, Eigen::VectorXd());
    RowMatrix d = delta;  // (n x 1)
    for (std::size_t l = L; l-- > 0;) {
        grad_W[l] = d.transpose() * acts[l] + weight_decay * m.W[l];
        grad_b[l] = d.colwise().sum().transpose();
        if (l > 0) {
            RowMatrix back = d * m.W[l];
            // ReLU mask from the stored post-activation
            d = back.cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
        }
    }
    return nll * inv_n + penalty(m, weight_decay);
}

MlpModel train_mlp(ConstMatrixMap X, std::span<const std::uint8_t> y, const MlpParams& params,
                   const double* X_val, std::size_t n_val, const std::uint8_t* y_val) {
    if (static_cast<std::size_t>(X.rows()) != y.size()) throw Error("train_mlp: X/y size mismatch");
    check_finite(X);
    check_labels(y);

    const std::size_t n = y.size();
    const auto d = X.cols();

    // Carve out a validation split when none is supplied.
    std::vector<std::size_t> train_rows(n);
    for (std::size_t i = 0; i < n; ++i) train_rows[i] = i;
    std::vector<double> val_store;
    std::vector<std::uint8_t> yval_store;
    Rng rng(derive_seed(params.seed, 0xB2));
    if (X_val == nullptr) {
        rng.shuffle(train_rows);
        std::size_t nv = std::max<std::size_t>(1, static_cast<std::size_t>(params.val_fraction * n));
        if (nv >= n) nv = n / 2;
        val_store.resize(nv * d);
        yval_store.resize(nv);
        for (std::size_t i = 0; i < nv; ++i) {
            std::size_t r = train_rows[n - nv + i];
            std::memcpy(val_store.data() + i * d, X.data() + r * d, sizeof(double) * d);
            yval_store[i] = y[r];
        }
        train_rows.resize(n - nv);
        X_val = val_store.data();
        n_val = nv;
        y_val = yval_store.data();
    }
    ConstMatrixMap Xv(X_val, static_cast<Eigen::Index>(n_val), d);
    std::span<const std::uint8_t> yv(y_val, n_val);

    MlpModel m = init_mlp(static_cast<int>(d), params.hidden, params.seed);
    const std::size_t L = m.W.size();

    // Adam state
    std::vector<RowMatrix> mW(L), vW(L);
    std::vector<Eigen::VectorXd> mb(L), vb(L);
    for (std::size_t l = 0; l < L; ++l) {
        mW[l] = RowMatrix::Zero(m.W[l].rows(), m.W[l].cols());
        vW[l] = mW[l];
        mb[l] = Eigen::VectorXd::Zero(m.b[l].size());
        vb[l] = mb[l];
    }
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long step = 0;

    MlpModel best = m;
    double best_val = mlp_loss(m, Xv, yv, params.weight_decay);
    int stall = 0;

    std::vector<RowMatrix> gW;
    std::vector<Eigen::VectorXd> gb;
    std::vector<double> batch_X;
    std::vector<std::uint8_t> batch_y;

    for (int epoch = 1; epoch <= params.max_epochs; ++epoch) {
        rng.shuffle(train_rows);
        double epoch_loss = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t off = 0; off < train_rows.size(); off += params.batch) {
            const std::size_t bs = std::min<std::size_t>(params.batch, train_rows.size() - off);
            batch_X.resize(bs * d);
            batch_y.resize(bs);
            for (std::size_t i = 0; i < bs; ++i) {
                std::size_t r = train_rows[off + i];
                std::memcpy(batch_X.data() + i * d, X.data() + r * d, sizeof(double) * d);
                batch_y[i] = y[r];
            }
            ConstMatrixMap Xb(batch_X.data(), static_cast<Eigen::Index>(bs), d);
            double loss = mlp_loss_grad(m, Xb, batch_y, params.weight_decay, gW, gb);
            if (!std::isfinite(loss))
                throw Error("train_mlp: NaN loss at epoch " + std::to_string(epoch) +
                            ", batch " + std::to_string(n_batches));
            epoch_loss += loss;
            ++n_batches;

            ++step;
            const double corr1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            const double corr2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            for (std::size_t l = 0; l < L; ++l) {
                mW[l] = beta1 * mW[l] + (1.0 - beta1) * gW[l];
                vW[l] = beta2 * vW[l] + (1.0 - beta2) * gW[l].cwiseProduct(gW[l]);
                m.W[l] -= (params.lr / corr1) *
                          mW[l].cwiseQuotient(((vW[l] / corr2).cwiseSqrt().array() + eps).matrix());
                mb[l] = beta1 * mb[l] + (1.0 - beta1) * gb[l];
                vb[l] = beta2 * vb[l] + (1.0 - beta2) * gb[l].cwiseProduct(gb[l]);
                m.b[l] -= (params.lr / corr1) *
                          mb[l].cwiseQuotient(((vb[l] / corr2).cwiseSqrt().array() + eps).matrix());
            }
        }
        m.epochs_run = epoch;
        m.train_loss_history.push_back(n_batches ? epoch_loss / n_batches : 0.0);

        double val = mlp_loss(m, Xv, yv, params.weight_decay);
        if (val < best_val - 1e-12) {
            best_val = val;
            best = m;
            best.epochs_run = epoch;
            best.train_loss_history = m.train_loss_history;
            stall = 0;
        } else if (++stall >= params.patience) {
            break;
        }
    }
    best.best_val_loss = best_val;
    return best;
}

Eigen::VectorXd predict_proba(const MlpModel& m, ConstMatrixMap X) {
    if (X.cols() != m.sizes.front()) throw Error("predict_proba: feature width mismatch");
    Eigen::VectorXd z = mlp_forward(m, X, nullptr);
    Eigen::VectorXd p(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i)
        p[i] = clamp_proba(1.0 / (1.0 + std::exp(-z[i])));
    return p;
}

std::vector<FeatureWeight> feature_report(const LogisticModel& m,
                                          std::span<const std::string> names) {
    std::vector<FeatureWeight> out;
    out.reserve(static_cast<std::size_t>(m.w.size()));
    for (Eigen::Index i = 0; i < m.w.size(); ++i) {
        std::string name = static_cast<std::size_t>(i) < names.size()
                               ? names[static_cast<std::size_t>(i)]
                               : "col" + std::to_string(i);
        out.push_back({static_cast<int>(i), name, m.w[i]});
    }
    std::sort(out.begin(), out.end(), [](const FeatureWeight& a, const FeatureWeight& b) {
        double ma = std::abs(a.weight), mb = std::abs(b.weight);
        if (ma != mb) return ma > mb;
        return a.index < b.index;
    });
    return out;
}

namespace {
constexpr char kModelMagic[4] = {'T', 'L', 'M', 'D'};
constexpr std::uint32_t kModelVersion = 1;
}  // namespace

void save_model(const ModelBundle& m, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write model: " + path);
    os.write(kModelMagic, 4);
    os.write(reinterpret_cast<const char*>(&kModelVersion), sizeof(kModelVersion));
    std::uint8_t type = static_cast<std::uint8_t>(m.type);
    os.write(reinterpret_cast<const char*>(&type), 1);

    nlohmann::json meta;
    meta["format_version"] = kModelVersion;
    meta["scaler"] = {{"mean", m.scaler_mean}, {"stdev", m.scaler_stdev}, {"n_scaled", m.n_scaled}};

    if (m.type == ModelBundle::Type::Logistic) {
        std::uint64_t seed = 0;
        os.write(reinterpret_cast<const char*>(&seed), sizeof(seed));
        std::uint32_t n_layers = 1;
        os.write(reinterpret_cast<const char*>(&n_layers), sizeof(n_layers));
        std::uint32_t width = static_cast<std::uint32_t>(m.logistic.w.size());
        os.write(reinterpret_cast<const char*>(&width), sizeof(width));
        os.write(reinterpret_cast<const char*>(m.logistic.w.data()),
                 static_cast<std::streamsize>(sizeof(double) * width));
        os.write(reinterpret_cast<const char*>(&m.logistic.b), sizeof(double));
        meta["type"] = "logistic";
        meta["iterations"] = m.logistic.iterations;
        meta["final_loss"] = m.logistic.final_loss;
        meta["l2"] = m.logistic.l2;
    } else {
        os.write(reinterpret_cast<const char*>(&m.mlp.seed), sizeof(m.mlp.seed));
        std::uint32_t n_layers = static_cast<std::uint32_t>(m.mlp.sizes.size());
        os.write(reinterpret_cast<const char*>(&n_layers), sizeof(n_layers));
        for (int s : m.mlp.sizes) {
            std::uint32_t v = static_cast<std::uint32_t>(s);
            os.write(reinterpret_cast<const char*>(&v), sizeof(v));
        }
        for (std::size_t l = 0; l < m.mlp.W.size(); ++l) {
            os.write(reinterpret_cast<const char*>(m.mlp.W[l].data()),
                     static_cast<std::streamsize>(sizeof(double) * m.mlp.W[l].size()));
            os.write(reinterpret_cast<const char*>(m.mlp.b[l].data()),
                     static_cast<std::streamsize>(sizeof(double) * m.mlp.b[l].size()));
        }
        meta["type"] = "mlp";
        meta["seed"] = m.mlp.seed;
        meta["arch"] = std::vector<int>(m.mlp.sizes.begin() + 1, m.mlp.sizes.end() - 1);
        meta["epochs_run"] = m.mlp.epochs_run;
        meta["best_val_loss"] = m.mlp.best_val_loss;
    }
    if (!os) throw Error("short write on model: " + path);

    std::ofstream js(path + ".json");
    js << meta.dump(2) << '\n';
}

ModelBundle load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open model: " + path);
    char magic[4];
    is.read(magic, 4);
    std::uint32_t version = 0;
    is.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (!is || std::memcmp(magic, kModelMagic, 4) != 0 || version != kModelVersion)
        throw Error("bad model header: " + path);
    std::uint8_t type = 0;
    is.read(reinterpret_cast<char*>(&type), 1);

    ModelBundle m;
    m.type = static_cast<ModelBundle::Type>(type);
    std::uint64_t seed = 0;
    is.read(reinterpret_cast<char*>(&seed), sizeof(seed));
    std::uint32_t n_layers = 0;
    is.read(reinterpret_cast<char*>(&n_layers), sizeof(n_layers));
    if (m.type == ModelBundle::Type::Logistic) {
        std::uint32_t width = 0;
        is.read(reinterpret_cast<char*>(&width), sizeof(width));
        m.logistic.w.resize(width);
        is.read(reinterpret_cast<char*>(m.logistic.w.data()),
                static_cast<std::streamsize>(sizeof(double) * width));
        is.read(reinterpret_cast<char*>(&m.logistic.b), sizeof(double));
    } else {
        m.mlp.seed = seed;
        m.mlp.sizes.resize(n_layers);
        for (auto& s : m.mlp.sizes) {
            std::uint32_t v = 0;
            is.read(reinterpret_cast<char*>(&v), sizeof(v));
            s = static_cast<int>(v);
        }
        for (std::size_t l = 0; l + 1 < m.mlp.sizes.size(); ++l) {
            RowMatrix W(m.mlp.sizes[l + 1], m.mlp.sizes[l]);
            is.read(reinterpret_cast<char*>(W.data()),
                    static_cast<std::streamsize>(sizeof(double) * W.size()));
            Eigen::VectorXd b(m.mlp.sizes[l + 1]);
            is.read(reinterpret_cast<char*>(b.data()),
                    static_cast<std::streamsize>(sizeof(double) * b.size()));
            m.mlp.W.push_back(std::move(W));
            m.mlp.b.push_back(std::move(b));
        }
    }
    if (!is) throw Error("truncated model file: " + path);

    std::ifstream js(path + ".json");
    if (js) {
        nlohmann::json meta = nlohmann::json::parse(js, nullptr, false);
        if (!meta.is_discarded() && meta.contains("scaler")) {
            m.scaler_mean = meta["scaler"]["mean"].get<std::vector<double>>();
            m.scaler_stdev = meta["scaler"]["stdev"].get<std::vector<double>>();
            m.n_scaled = meta["scaler"]["n_scaled"].get<std::size_t>();
        }
    }
    return m;
}

}  // namespace templink
