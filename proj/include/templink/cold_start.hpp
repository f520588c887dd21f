#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "templink/edge_features.hpp"
#include "templink/node_features.hpp"
#include "templink/temporal_graph.hpp"

namespace templink {

// Nodes whose first appearance falls in (t0 - width, t0]; the stand-in
// population for nodes unseen at t0.
struct NewbornSet {
    double t0 = 0.9;
    double width = 0.1;
    std::vector<NodeId> members;
};

// Throws when no births fall inside the window (imputation undefined).
NewbornSet newborn_set(const TemporalGraph& g, double t0, double width = 0.1);

// Component-wise mean of the newborn rows of a node-feature matrix.
std::array<double, kNodeFeatureDim> impute_node_features(const NewbornSet& newborns,
                                                         const FeatureMatrix& features);

enum class ImputePopulation { Newborn, Seen };

struct ColdStartParams {
    double width = 0.1;
    ImputePopulation population = ImputePopulation::Newborn;
};

// Frozen fallback values for pairs touching unseen nodes. Scalars are exact:
// dice_uu via the set-set closed form, dice_us(v) via the node-set closed
// form, and the hoprec means via sums of unit vectors (the mean cosine over
// pairs equals the mean pairwise dot of unit vectors).
class ImputedDefaults {
public:
    std::array<double, kNodeFeatureDim> node_mean{};
    double dice_uu = 0.0;
    double hoprec_uu = 0.0;
    double t0 = 0.9;
    double width = 0.1;
    std::vector<NodeId> population;        // newborns (or all seen nodes)
    std::vector<double> unit_mean;         // mean unit embedding over population
    std::size_t n_embedded = 0;            // population members with vectors

    // Eq.-(3) style dice between seen node v and the population.
    double dice_unseen_seen(const GraphView& view, NodeId v) const;
    // Mean cosine between v and the embedded population members.
    double hoprec_unseen_seen(const EmbeddingTable& tbl, NodeId v) const;

    EdgeFeaturePair impute_unseen_unseen() const { return {hoprec_uu, dice_uu}; }
    // Throws when v is unseen (birth after t0).
    EdgeFeaturePair impute_unseen_seen(const TemporalGraph& g, const GraphView& view,
                                       const EmbeddingTable& tbl, NodeId v) const;

    std::string to_json_string() const;
};

ImputedDefaults build_imputed_defaults(const TemporalGraph& g, const GraphView& t0_view,
                                       const FeatureMatrix& node_features,
                                       const EmbeddingTable& tbl, double t0,
                                       const ColdStartParams& params = {});

}  // namespace templink
