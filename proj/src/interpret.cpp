#include "scbm/interpret.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace scbm::interpret {

double sf_distance(const surv::StepSurvivalFunction& a, const surv::StepSurvivalFunction& b) {
    std::vector<double> grid;
    grid.reserve(a.knots().size() + b.knots().size() + 1);
    grid.push_back(0.0);
    grid.insert(grid.end(), a.knots().begin(), a.knots().end());
    grid.insert(grid.end(), b.knots().begin(), b.knots().end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const double len = grid[i + 1] - grid[i];
        const double diff = a.value_at(grid[i]) - b.value_at(grid[i]);
        acc += diff * diff * len;
    }
    return std::sqrt(acc);
}

std::vector<double> neighbor_match_scores(const std::vector<int>& instance_values,
                                          const std::vector<std::vector<int>>& neighbor_values) {
    if (neighbor_values.empty())
        throw std::invalid_argument("neighbor_match_scores: no neighbors");
    const std::size_t m = instance_values.size();
    std::vector<double> scores(m, 0.0);
    for (const auto& nv : neighbor_values) {
        if (nv.size() != m)
            throw std::invalid_argument("neighbor_match_scores: concept width mismatch");
        for (std::size_t c = 0; c < m; ++c)
            if (nv[c] == instance_values[c]) scores[c] += 1.0;
    }
    for (auto& s : scores) s /= static_cast<double>(neighbor_values.size());
    return scores;
}

ExplanationReport explain_with_neighbors(const model::TrainedModel& model, const Tensor& instance,
                                         const data::ConceptSurvivalDataset& train, std::size_t K) {
    if (model.spec.head.kind != model::HeadKind::Beran)
        throw std::invalid_argument("explain_with_neighbors: requires a beran survival head");
    if (!model.spec.uses_concepts())
        throw std::invalid_argument("explain_with_neighbors: model predicts no concepts");
    if (K < 1 || K > train.size())
        throw std::invalid_argument("explain_with_neighbors: K must lie in [1, training size]");

    const model::PredictionBundle target = model::predict(model, instance);
    const auto train_preds = model::predict_batch(model, train.images);

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> dist(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) dist[i] = sf_distance(target.sf, train_preds[i].sf);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        if (dist[x] != dist[y]) return dist[x] < dist[y];
        return x < y;
    });

    ExplanationReport rep;
    rep.method = Method::NeighborMatch;
    rep.k = K;
    rep.instance_values = target.concept_argmax;

    std::vector<std::vector<int>> neighbor_predicted;
    neighbor_predicted.reserve(K);
    for (std::size_t r = 0; r < K; ++r) {
        const std::size_t idx = order[r];
        rep.neighbors.indices.push_back(idx);
        rep.neighbors.distances.push_back(dist[idx]);
        rep.neighbors.neighbor_concepts.push_back(train.concepts[idx]);
        neighbor_predicted.push_back(train_preds[idx].concept_argmax);
    }
    rep.scores = neighbor_match_scores(rep.instance_values, neighbor_predicted);
    rep.match_counts.resize(rep.scores.size());
    for (std::size_t c = 0; c < rep.scores.size(); ++c)
        rep.match_counts[c] =
            static_cast<std::size_t>(std::llround(rep.scores[c] * static_cast<double>(K)));
    return rep;
}

ExplanationReport explain_cox_contributions(const model::TrainedModel& model,
                                            const Tensor& instance) {
    if (model.spec.head.kind != model::HeadKind::Cox)
        throw std::invalid_argument("explain_cox_contributions: requires a cox head");
    if (model.spec.arch != model::Architecture::SurvCBM)
        throw std::invalid_argument("explain_cox_contributions: requires the survcbm bottleneck");

    const model::PredictionBundle pred = model::predict(model, instance);
    const ConceptLogits& logits = *pred.concept_logits;
    const Tensor& b = model.params.value("cox.b");

    ExplanationReport rep;
    rep.method = Method::CoxContribution;
    rep.instance_values = pred.concept_argmax;
    std::size_t off = 0;
    for (const auto& block : logits.blocks) {
        // softmax of the block
        double mx = block[0];
        for (double v : block) mx = std::max(mx, v);
        double sum = 0.0;
        std::vector<double> pi(block.size());
        for (std::size_t j = 0; j < block.size(); ++j) {
            pi[j] = std::exp(block[j] - mx);
            sum += pi[j];
        }
        double score = 0.0;
        for (std::size_t j = 0; j < block.size(); ++j) score += b.vec()[off + j] * (pi[j] / sum);
        rep.scores.push_back(score);
        rep.contributions.push_back(score);
        rep.total_contribution += score;
        off += block.size();
    }
    return rep;
}

std::string report_to_text(const ExplanationReport& report, const ConceptSchema& schema) {
    std::ostringstream os;
    char buf[128];
    if (report.method == Method::NeighborMatch) {
        os << "method: neighbor-match\n";
        os << "neighbors: " << report.k << "\n";
        os << "concept\tpredicted_value\tmatches\tscore\n";
        for (std::size_t c = 0; c < report.scores.size(); ++c) {
            std::snprintf(buf, sizeof buf, "%s\t%d\t%zu/%zu\t%.6f\n", schema.names[c].c_str(),
                          report.instance_values[c], report.match_counts[c], report.k,
                          report.scores[c]);
            os << buf;
        }
    } else {
        os << "method: cox-contribution\n";
        os << "concept\tpredicted_value\tcontribution\n";
        for (std::size_t c = 0; c < report.scores.size(); ++c) {
            std::snprintf(buf, sizeof buf, "%s\t%d\t%.6f\n", schema.names[c].c_str(),
                          report.instance_values[c], report.scores[c]);
            os << buf;
        }
        std::snprintf(buf, sizeof buf, "total\t\t%.6f\n", report.total_contribution);
        os << buf;
    }
    return os.str();
}

}  // namespace scbm::interpret
