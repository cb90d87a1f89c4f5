#include "scbm/surv_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace scbm::surv {

namespace {

constexpr double kDenomFloor = 1e-12;

void check_samples(const std::vector<EventSample>& samples, const char* who) {
    if (samples.empty()) throw std::invalid_argument(std::string(who) + ": empty dataset");
    for (const auto& s : samples)
        if (!(s.time >= 0.0))
            throw std::invalid_argument(std::string(who) + ": negative or NaN time");
}

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// stable softmax of -d[k]
std::vector<double> softmax_neg(const std::vector<double>& d) {
    double mn = d[0];
    for (double v : d) mn = std::min(mn, v);
    std::vector<double> w(d.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k) {
        w[k] = std::exp(-(d[k] - mn));
        sum += w[k];
    }
    for (auto& v : w) v /= sum;
    return w;
}

double step_value_at(const std::vector<double>& knots, const std::vector<double>& values,
                     double t, double before_first) {
    // right-continuous: value at knots[i] is values[i]
    auto it = std::upper_bound(knots.begin(), knots.end(), t);
    if (it == knots.begin()) return before_first;
    return values[static_cast<std::size_t>(it - knots.begin()) - 1];
}

}  // namespace

StepSurvivalFunction::StepSurvivalFunction(std::vector<double> knots, std::vector<double> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
    if (knots_.size() != values_.size())
        throw std::invalid_argument("StepSurvivalFunction: knots/values length mismatch");
    double prev_knot = -1.0, prev_val = 1.0;
    for (std::size_t i = 0; i < knots_.size(); ++i) {
        if (!(knots_[i] >= 0.0) || (i > 0 && knots_[i] <= prev_knot))
            throw std::invalid_argument("StepSurvivalFunction: knots must be strictly increasing and non-negative");
        if (values_[i] < 0.0 || values_[i] > 1.0 || values_[i] > prev_val)
            throw std::invalid_argument("StepSurvivalFunction: values must be non-increasing within [0,1]");
        prev_knot = knots_[i];
        prev_val = values_[i];
    }
}

double StepSurvivalFunction::value_at(double t) const {
    return step_value_at(knots_, values_, t, 1.0);
}

StepCumulativeHazard::StepCumulativeHazard(std::vector<double> knots, std::vector<double> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
    if (knots_.size() != values_.size())
        throw std::invalid_argument("StepCumulativeHazard: knots/values length mismatch");
    double prev_knot = -1.0, prev_val = 0.0;
    for (std::size_t i = 0; i < knots_.size(); ++i) {
        if (!(knots_[i] >= 0.0) || (i > 0 && knots_[i] <= prev_knot))
            throw std::invalid_argument("StepCumulativeHazard: knots must be strictly increasing and non-negative");
        if (values_[i] < 0.0 || values_[i] < prev_val)
            throw std::invalid_argument("StepCumulativeHazard: values must be non-decreasing and non-negative");
        prev_knot = knots_[i];
        prev_val = values_[i];
    }
}

double StepCumulativeHazard::value_at(double t) const {
    return step_value_at(knots_, values_, t, 0.0);
}

std::vector<std::size_t> sort_order_by_time(const std::vector<EventSample>& samples) {
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (samples[a].time != samples[b].time) return samples[a].time < samples[b].time;
        return samples[a].event && !samples[b].event;  // events first at ties
    });
    return order;
}

StepSurvivalFunction kaplan_meier(const std::vector<EventSample>& samples) {
    check_samples(samples, "kaplan_meier");
    const auto order = sort_order_by_time(samples);
    const std::size_t n = samples.size();

    std::vector<double> knots, values;
    double s = 1.0;
    std::size_t at_risk = n;
    std::size_t i = 0;
    while (i < n) {
        const double t = samples[order[i]].time;
        std::size_t deaths = 0, leaving = 0;
        while (i < n && samples[order[i]].time == t) {
            if (samples[order[i]].event) ++deaths;
            ++leaving;
            ++i;
        }
        if (deaths > 0)
            s *= 1.0 - static_cast<double>(deaths) / static_cast<double>(at_risk);
        at_risk -= leaving;
        knots.push_back(t);
        values.push_back(clamp01(s));
    }
    // numeric hygiene: the product is monotone, keep it so under rounding
    for (std::size_t j = 1; j < values.size(); ++j) values[j] = std::min(values[j], values[j - 1]);
    return StepSurvivalFunction(std::move(knots), std::move(values));
}

StepCumulativeHazard nelson_aalen(const std::vector<EventSample>& samples) {
    check_samples(samples, "nelson_aalen");
    const auto order = sort_order_by_time(samples);
    const std::size_t n = samples.size();

    std::vector<double> knots, values;
    double h = 0.0;
    std::size_t at_risk = n;
    std::size_t i = 0;
    while (i < n) {
        const double t = samples[order[i]].time;
        std::size_t deaths = 0, leaving = 0;
        while (i < n && samples[order[i]].time == t) {
            if (samples[order[i]].event) ++deaths;
            ++leaving;
            ++i;
        }
        if (deaths > 0) {
            h += static_cast<double>(deaths) / static_cast<double>(at_risk);
            knots.push_back(t);
            values.push_back(h);
        }
        at_risk -= leaving;
    }
    return StepCumulativeHazard(std::move(knots), std::move(values));
}

StepSurvivalFunction sf_from_cumhazard(const StepCumulativeHazard& chf) {
    std::vector<double> values(chf.values().size());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = clamp01(std::exp(-chf.values()[i]));
    for (std::size_t i = 1; i < values.size(); ++i) values[i] = std::min(values[i], values[i - 1]);
    return StepSurvivalFunction(chf.knots(), std::move(values));
}

StepSurvivalFunction cox_survival(double risk_score, const StepSurvivalFunction& baseline) {
    if (!std::isfinite(risk_score))
        throw std::invalid_argument("cox_survival: risk score must be finite");
    const double e = std::exp(risk_score);
    std::vector<double> values(baseline.values().size());
    for (std::size_t i = 0; i < values.size(); ++i)
        values[i] = clamp01(std::pow(baseline.values()[i], e));
    for (std::size_t i = 1; i < values.size(); ++i) values[i] = std::min(values[i], values[i - 1]);
    return StepSurvivalFunction(baseline.knots(), std::move(values));
}

StepSurvivalFunction beran_survival(const WeightVector& weights,
                                    const std::vector<EventSample>& background) {
    check_samples(background, "beran_survival");
    if (weights.values.size() != background.size())
        throw std::invalid_argument("beran_survival: weights/background length mismatch");
    double wsum = 0.0;
    for (double w : weights.values) {
        if (w < 0.0) throw std::invalid_argument("beran_survival: negative weight");
        wsum += w;
    }
    if (std::fabs(wsum - 1.0) > 1e-6)
        throw std::invalid_argument("beran_survival: weights must sum to 1");

    const auto order = sort_order_by_time(background);
    const std::size_t n = background.size();

    std::vector<double> knots, values;
    double s = 1.0;
    double prefix = 0.0;  // sum of weights of samples strictly before the current one
    std::size_t i = 0;
    while (i < n) {
        const double t = background[order[i]].time;
        while (i < n && background[order[i]].time == t) {
            const double alpha = weights.values[order[i]];
            if (background[order[i]].event) {
                const double denom = std::max(1.0 - prefix, kDenomFloor);
                s *= clamp01(1.0 - alpha / denom);
            }
            prefix += alpha;
            ++i;
        }
        knots.push_back(t);
        values.push_back(clamp01(s));
    }
    for (std::size_t j = 1; j < values.size(); ++j) values[j] = std::min(values[j], values[j - 1]);
    return StepSurvivalFunction(std::move(knots), std::move(values));
}

WeightVector gaussian_weights(const std::vector<double>& query,
                              const std::vector<std::vector<double>>& background, double tau) {
    if (tau <= 0.0) throw std::invalid_argument("gaussian_weights: tau must be positive");
    if (background.empty()) throw std::invalid_argument("gaussian_weights: empty background");
    std::vector<double> d(background.size());
    for (std::size_t k = 0; k < background.size(); ++k) {
        if (background[k].size() != query.size())
            throw std::invalid_argument("gaussian_weights: dimension mismatch at background entry " +
                                        std::to_string(k));
        double s = 0.0;
        for (std::size_t j = 0; j < query.size(); ++j) {
            const double diff = query[j] - background[k][j];
            s += diff * diff;
        }
        d[k] = s / tau;
    }
    return WeightVector{softmax_neg(d)};
}

WeightVector per_value_weights(const ConceptLogits& query,
                               const std::vector<ConceptLogits>& background,
                               const PerValueBandwidths& tau) {
    if (background.empty()) throw std::invalid_argument("per_value_weights: empty background");
    if (!tau.matches(query.schema))
        throw std::invalid_argument("per_value_weights: bandwidth shape does not match schema");
    for (const auto& row : tau.tau)
        for (double v : row)
            if (!(v > 0.0)) throw std::invalid_argument("per_value_weights: every tau entry must be positive");

    std::vector<double> d(background.size());
    for (std::size_t k = 0; k < background.size(); ++k) {
        if (background[k].schema != query.schema)
            throw std::invalid_argument("per_value_weights: schema mismatch at background entry " +
                                        std::to_string(k));
        double s = 0.0;
        for (std::size_t i = 0; i < query.blocks.size(); ++i)
            for (std::size_t j = 0; j < query.blocks[i].size(); ++j) {
                const double diff = query.blocks[i][j] - background[k].blocks[i][j];
                s += diff * diff / tau.tau[i][j];
            }
        d[k] = s;
    }
    return WeightVector{softmax_neg(d)};
}

double expected_event_time(const StepSurvivalFunction& sf) {
    double t_prev = 0.0, v_prev = 1.0, acc = 0.0;
    for (std::size_t i = 0; i < sf.knots().size(); ++i) {
        acc += v_prev * (sf.knots()[i] - t_prev);
        t_prev = sf.knots()[i];
        v_prev = sf.values()[i];
    }
    return acc;
}

double concordance_index(const std::vector<double>& pred_times,
                         const std::vector<EventSample>& samples) {
    if (pred_times.size() != samples.size())
        throw std::invalid_argument("concordance_index: length mismatch");
    std::size_t total = 0, concordant = 0;
    const std::size_t n = samples.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (!samples[i].event) continue;
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j || !(samples[i].time < samples[j].time)) continue;
            ++total;
            if (pred_times[i] < pred_times[j]) ++concordant;
        }
    }
    if (total == 0) throw std::invalid_argument("concordance_index: no comparable pairs");
    return static_cast<double>(concordant) / static_cast<double>(total);
}

}  // namespace scbm::surv
