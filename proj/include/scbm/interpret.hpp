#pragma once

#include <string>
#include <vector>

#include "scbm/datagen.hpp"
#include "scbm/models.hpp"
#include "scbm/surv_core.hpp"

namespace scbm::interpret {

/// L2 distance between two survival curves on their union grid, up to the
/// larger last knot; beyond its own grid a curve holds its final value.
double sf_distance(const surv::StepSurvivalFunction& a, const surv::StepSurvivalFunction& b);

struct NeighborSet {
    std::vector<std::size_t> indices;                 // into the training set
    std::vector<double> distances;                    // ascending
    std::vector<std::vector<int>> neighbor_concepts;  // true training concepts, for inspection
};

enum class Method { NeighborMatch, CoxContribution };

struct ExplanationReport {
    Method method = Method::NeighborMatch;
    std::vector<double> scores;  // per concept, length m
    // neighbor-match support
    std::vector<std::size_t> match_counts;
    std::size_t k = 0;
    std::vector<int> instance_values;  // model-predicted concept values
    NeighborSet neighbors;
    // cox support
    std::vector<double> contributions;
    double total_contribution = 0.0;  // equals b^T pi
};

/// Fraction of neighbors sharing the instance's predicted value, per concept.
std::vector<double> neighbor_match_scores(const std::vector<int>& instance_values,
                                          const std::vector<std::vector<int>>& neighbor_values);

/// Example-based explanation for Beran-headed models: the K training
/// instances with the closest predicted survival curves, scored by how often
/// their predicted concept values match the instance's.
ExplanationReport explain_with_neighbors(const model::TrainedModel& model, const Tensor& instance,
                                         const data::ConceptSurvivalDataset& train, std::size_t K);

/// Linear-contribution explanation for SurvCBM with a Cox head:
/// score_i = b_i^T softmax(block_i); the scores sum to b^T pi.
ExplanationReport explain_cox_contributions(const model::TrainedModel& model,
                                            const Tensor& instance);

std::string report_to_text(const ExplanationReport& report, const ConceptSchema& schema);

}  // namespace scbm::interpret
