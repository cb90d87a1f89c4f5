#pragma once

#include <vector>

#include "scbm/concept_schema.hpp"

namespace scbm::surv {

/// One observation: time to event (or to censoring) and whether the event
/// was observed. time must be non-negative.
struct EventSample {
    double time = 0.0;
    bool event = false;
};

/// Right-continuous non-increasing step function on a sorted grid. Value is
/// 1 before the first knot and values[i] on [knots[i], knots[i+1]).
/// All values lie in [0,1].
class StepSurvivalFunction {
public:
    StepSurvivalFunction() = default;
    StepSurvivalFunction(std::vector<double> knots, std::vector<double> values);

    double value_at(double t) const;
    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& values() const { return values_; }
    bool empty() const { return knots_.empty(); }

private:
    std::vector<double> knots_;
    std::vector<double> values_;
};

/// Non-decreasing step function; 0 before the first knot.
class StepCumulativeHazard {
public:
    StepCumulativeHazard() = default;
    StepCumulativeHazard(std::vector<double> knots, std::vector<double> values);

    double value_at(double t) const;
    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& values() const { return values_; }

private:
    std::vector<double> knots_;
    std::vector<double> values_;
};

/// Normalized relevance weights aligned with a background sample list.
struct WeightVector {
    std::vector<double> values;
};

/// Product-limit estimate. Knots are the distinct observed times.
StepSurvivalFunction kaplan_meier(const std::vector<EventSample>& samples);

/// H(t) = sum over event times <= t of d_i / n_i.
StepCumulativeHazard nelson_aalen(const std::vector<EventSample>& samples);

/// S(t) = exp(-H(t)).
StepSurvivalFunction sf_from_cumhazard(const StepCumulativeHazard& chf);

/// S(t) = S0(t)^exp(risk_score), on the baseline's knots.
StepSurvivalFunction cox_survival(double risk_score, const StepSurvivalFunction& baseline);

/// Kernel-weighted product-limit estimate over a background sample list.
/// Censored samples contribute factor 1 but still consume weight mass in the
/// denominators. When the weight prefix sum reaches 1 early the denominator
/// is clamped at 1e-12.
StepSurvivalFunction beran_survival(const WeightVector& weights,
                                    const std::vector<EventSample>& background);

/// softmax(-||query - background_k||^2 / tau) over the background index.
WeightVector gaussian_weights(const std::vector<double>& query,
                              const std::vector<std::vector<double>>& background, double tau);

/// softmax(-sum_i sum_j (p_ij - p^k_ij)^2 / tau_ij) over the background index.
WeightVector per_value_weights(const ConceptLogits& query,
                               const std::vector<ConceptLogits>& background,
                               const PerValueBandwidths& tau);

/// Rectangle-rule mean of the SF from 0 to its last knot; no tail
/// extrapolation beyond the grid.
double expected_event_time(const StepSurvivalFunction& sf);

/// Fraction of comparable pairs ranked correctly. A pair (i, j) is
/// comparable when sample i is uncensored and T_i < T_j; prediction ties
/// count 0.
double concordance_index(const std::vector<double>& pred_times,
                         const std::vector<EventSample>& samples);

/// Sort order used by all estimators: time ascending, events before
/// censorings at tied times, original index as the final tie-break.
std::vector<std::size_t> sort_order_by_time(const std::vector<EventSample>& samples);

}  // namespace scbm::surv
