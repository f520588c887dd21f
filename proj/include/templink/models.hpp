#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "templink/common.hpp"

namespace templink {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

struct LogisticParams {
    double l2 = 1.0;       // penalty (l2 / (2n)) * ||w||^2, bias unpenalized
    double tol = 1e-8;     // stop when the gradient max-norm drops below tol
    int max_iter = 500;
    std::vector<double> init_w;  // optional warm start (default zeros)
    double init_b = 0.0;
};

struct LogisticModel {
    Eigen::VectorXd w;
    double b = 0.0;
    int iterations = 0;
    double final_loss = 0.0;
    bool converged = false;
    double l2 = 1.0;
};

// L2-regularized NLL and its gradient; shared by the trainer and the
// finite-difference tests.
double logistic_loss(const Eigen::VectorXd& w, double b, ConstMatrixMap X,
                     std::span<const std::uint8_t> y, double l2);
void logistic_loss_grad(const Eigen::VectorXd& w, double b, ConstMatrixMap X,
                        std::span<const std::uint8_t> y, double l2, double& loss,
                        Eigen::VectorXd& grad_w, double& grad_b);

// Full-batch gradient descent with Armijo backtracking; deterministic.
LogisticModel train_logistic(ConstMatrixMap X, std::span<const std::uint8_t> y,
                             const LogisticParams& params = {});

struct MlpParams {
    std::vector<int> hidden = {13, 13, 13, 13, 13};
    double lr = 1e-3;
    int batch = 200;
    int max_epochs = 200;
    int patience = 10;          // early stop after this many non-improving evals
    double weight_decay = 1e-4;
    double val_fraction = 0.1;  // used when no validation set is supplied
    std::uint64_t seed = 0;
};

// ReLU hidden layers, sigmoid output; weights W[l] are (out x in).
struct MlpModel {
    std::vector<int> sizes;  // [in, hidden..., 1]
    std::vector<RowMatrix> W;
    std::vector<Eigen::VectorXd> b;
    std::uint64_t seed = 0;
    int epochs_run = 0;
    double best_val_loss = 0.0;
    std::vector<double> train_loss_history;
};

MlpModel init_mlp(int input_dim, const std::vector<int>& hidden, std::uint64_t seed);

double mlp_loss(const MlpModel& m, ConstMatrixMap X, std::span<const std::uint8_t> y,
                double weight_decay);
// Gradients in the same layer order as the model; used by Adam and the tests.
double mlp_loss_grad(const MlpModel& m, ConstMatrixMap X, std::span<const std::uint8_t> y,
                     double weight_decay, std::vector<RowMatrix>& grad_W,
                     std::vector<Eigen::VectorXd>& grad_b);

// Mini-batch Adam on binary cross-entropy with early stopping on validation
// loss (the best parameters are restored). Deterministic given the seed.
// Throws on NaN loss with epoch/batch diagnostics.
MlpModel train_mlp(ConstMatrixMap X, std::span<const std::uint8_t> y,
                   const MlpParams& params, const double* X_val = nullptr,
                   std::size_t n_val = 0, const std::uint8_t* y_val = nullptr);

Eigen::VectorXd predict_proba(const LogisticModel& m, ConstMatrixMap X);
Eigen::VectorXd predict_proba(const MlpModel& m, ConstMatrixMap X);

struct FeatureWeight {
    int index;
    std::string name;
    double weight;
};

// Features ranked by |weight| descending, ties by column index.
std::vector<FeatureWeight> feature_report(const LogisticModel& m,
                                          std::span<const std::string> names);

// Serialized classifier plus the standardization the features were trained
// under. Binary parameters live in `path`, metadata in `path.json`.
struct ModelBundle {
    enum class Type : std::uint8_t { Logistic = 0, Mlp = 1 };
    Type type = Type::Logistic;
    LogisticModel logistic;
    MlpModel mlp;
    std::vector<double> scaler_mean, scaler_stdev;
    std::size_t n_scaled = 0;

    Eigen::VectorXd predict(ConstMatrixMap X_standardized) const {
        return type == Type::Logistic ? predict_proba(logistic, X_standardized)
                                      : predict_proba(mlp, X_standardized);
    }
};

void save_model(const ModelBundle& m, const std::string& path);
ModelBundle load_model(const std::string& path);

}  // namespace templink
