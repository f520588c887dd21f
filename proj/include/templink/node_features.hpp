#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "templink/temporal_graph.hpp"

namespace templink {

inline constexpr std::size_t kNodeFeatureDim = 31;
inline constexpr std::size_t kBaseFeatureDim = 6;
inline constexpr double kPagerankFloor = 1e-12;

struct PageRankParams {
    double damping = 0.85;
    double tol = 1e-10;
    int max_iter = 200;
};

struct PageRankResult {
    std::vector<double> scores;  // size n_nodes; 0 for nodes absent from the view
    bool converged = false;
    int iterations = 0;
};

// Power iteration on the undirected view restricted to present nodes.
// Present nodes with degree 0 (dangling) distribute uniformly over present
// nodes. Stops when the L1 change drops below tol.
PageRankResult pagerank(const GraphView& view, const PageRankParams& params = {});

// 2 * (#edges among N(u)) / (deg(u) * (deg(u)-1)); 0 when deg(u) < 2.
double clustering_coefficient(const GraphView& view, NodeId u);

// [fwd1, bwd1, fwd2, bwd2] finite differences of a windowed feature:
//   fwd1 = f[0,t0] - f[0,t0-dt]
//   bwd1 = f[0,t0] - f[dt,t0]
//   fwd2 = f[0,t0] - 2 f[0,t0-dt] + f[0,t0-2dt]
//   bwd2 = f[0,t0] - 2 f[dt,t0] + f[2dt,t0]
std::array<double, 4> discrete_derivatives(double w0, double f1, double f2, double b1, double b2);

// The five feature windows, in the order their values enter the derivatives.
enum class ViewTag : int { W0 = 0, F1 = 1, F2 = 2, B1 = 3, B2 = 4 };
inline constexpr int kViewCount = 5;

struct FeatureMatrix {
    std::size_t rows = 0, cols = 0;
    std::vector<double> data;  // row-major

    FeatureMatrix() = default;
    FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    double* row(std::size_t i) { return data.data() + i * cols; }
    const double* row(std::size_t i) const { return data.data() + i * cols; }
};

// Precomputed windows and PageRank vectors for feature extraction at a
// reference time t0 with derivative step dt. Requires t0 - 2*dt > 0.
class FeatureContext {
public:
    FeatureContext(const TemporalGraph& g, double t0, double dt,
                   const PageRankParams& pr = {}, int threads = 1);

    const TemporalGraph& graph() const { return *graph_; }
    double t0() const { return t0_; }
    double dt() const { return dt_; }
    const GraphView& view(ViewTag tag) const { return views_[static_cast<int>(tag)]; }
    const PageRankResult& pagerank_result(ViewTag tag) const {
        return pagerank_[static_cast<int>(tag)];
    }

    // [log1p(paper_count), clustering, log1p(degree), log(pagerank, floored),
    //  log1p(in_degree), log1p(out_degree)] on the tagged window. Nodes absent
    // from the window get count features 0, clustering 0, PageRank the floor.
    std::array<double, kBaseFeatureDim> base_features(ViewTag tag, NodeId u) const;

    // 31 entries: [birth, 6 base at t0, then per base feature fwd1,bwd1,fwd2,bwd2].
    std::array<double, kNodeFeatureDim> node_feature_vector(NodeId u) const;

    // n_nodes x 31 matrix; rows are independent, so the parallel schedule
    // cannot change any value.
    FeatureMatrix all_node_features(int threads = 1) const;

private:
    const TemporalGraph* graph_;
    double t0_, dt_;
    std::array<GraphView, kViewCount> views_;
    std::array<PageRankResult, kViewCount> pagerank_;
    std::array<std::pair<double, double>, kViewCount> bounds_;
};

const std::vector<std::string>& node_feature_names();

void write_feature_matrix(const std::string& path, const FeatureMatrix& fm,
                          const std::vector<std::string>& names, double t0, double dt);
FeatureMatrix read_feature_matrix(const std::string& path);

}  // namespace templink
