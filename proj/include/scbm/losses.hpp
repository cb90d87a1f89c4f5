#pragma once

#include <vector>

#include "scbm/autodiff.hpp"
#include "scbm/surv_core.hpp"

namespace scbm::loss {

struct LossConfig {
    double alpha = 0.5;  // weight of the survival term, in (0,1)
    double omega = 1.0;  // sigmoid temperature, positive

    void validate() const;
};

/// Mean over the batch of -(1/m) sum_i log softmax(block_i)[y_i].
/// blocks[i] is a (N, k_i) node; labels is N rows of m concept values.
int concept_cross_entropy(ad::Graph& g, const std::vector<int>& blocks,
                          const std::vector<std::vector<int>>& labels);

/// Differentiable concordance surrogate over all pairs in the batch:
///   sum_{i,j} 1[T_j < T_i] * sigmoid((That_i - That_j)/omega) * delta_j
///   / sum_{i,j} 1[T_j < T_i] * delta_j
/// pred is a (N,1) node of predicted time scores. Throws
/// "no comparable pairs" if the denominator is empty.
int smoothed_c_index(ad::Graph& g, int pred, const std::vector<surv::EventSample>& samples,
                     double omega);

/// L = -alpha * L_surv + (1 - alpha) * L_CE.
int total_loss(ad::Graph& g, int l_surv, int l_ce, double alpha);

/// Number of comparable (earlier-uncensored) ordered pairs in a batch.
std::size_t comparable_pair_count(const std::vector<surv::EventSample>& samples);

}  // namespace scbm::loss
