#include "scbm/losses.hpp"

#include <stdexcept>

namespace scbm::loss {

void LossConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("LossConfig: alpha must lie in (0,1)");
    if (!(omega > 0.0)) throw std::invalid_argument("LossConfig: omega must be positive");
}

int concept_cross_entropy(ad::Graph& g, const std::vector<int>& blocks,
                          const std::vector<std::vector<int>>& labels) {
    if (blocks.empty()) throw std::invalid_argument("concept_cross_entropy: no concept blocks");
    const std::size_t n = g.value(blocks[0]).rows();
    const std::size_t m = blocks.size();
    if (labels.size() != n) throw std::invalid_argument("concept_cross_entropy: label row count mismatch");

    int acc = -1;
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t k = g.value(blocks[i]).cols();
        Tensor onehot({n, k});
        for (std::size_t r = 0; r < n; ++r) {
            if (labels[r].size() != m)
                throw std::invalid_argument("concept_cross_entropy: label column count mismatch");
            const int y = labels[r][i];
            if (y < 0 || static_cast<std::size_t>(y) >= k)
                throw std::invalid_argument("concept_cross_entropy: label " + std::to_string(y) +
                                            " out of range for concept " + std::to_string(i));
            onehot.at2(r, static_cast<std::size_t>(y)) = 1.0;
        }
        const int picked = g.sum_all(g.mul(g.log_softmax(blocks[i]), g.constant(std::move(onehot))));
        acc = acc < 0 ? picked : g.add(acc, picked);
    }
    return g.scale(acc, -1.0 / (static_cast<double>(n) * static_cast<double>(m)));
}

std::size_t comparable_pair_count(const std::vector<surv::EventSample>& samples) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < samples.size(); ++i)
        for (std::size_t j = 0; j < samples.size(); ++j)
            if (samples[j].event && samples[j].time < samples[i].time) ++count;
    return count;
}

int smoothed_c_index(ad::Graph& g, int pred, const std::vector<surv::EventSample>& samples,
                     double omega) {
    if (!(omega > 0.0)) throw std::invalid_argument("smoothed_c_index: omega must be positive");
    const std::size_t n = samples.size();
    if (g.value(pred).rows() != n || g.value(pred).cols() != 1)
        throw std::invalid_argument("smoothed_c_index: pred must be (N,1) matching samples");

    Tensor mask({n, n});
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (samples[j].event && samples[j].time < samples[i].time) {
                mask.at2(i, j) = 1.0;
                ++pairs;
            }
    if (pairs == 0) throw std::invalid_argument("smoothed_c_index: no comparable pairs");

    const int ones_row = g.constant(Tensor::full({1, n}, 1.0));
    const int ones_col = g.constant(Tensor::full({n, 1}, 1.0));
    // D[i][j] = That_i - That_j
    const int diff = g.sub(g.matmul(pred, ones_row), g.matmul(ones_col, g.reshape(pred, {1, n})));
    const int sig = g.sigmoid(g.scale(diff, 1.0 / omega));
    const int num = g.sum_all(g.mul(sig, g.constant(std::move(mask))));
    return g.scale(num, 1.0 / static_cast<double>(pairs));
}

int total_loss(ad::Graph& g, int l_surv, int l_ce, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("total_loss: alpha must lie in (0,1)");
    return g.add(g.scale(l_surv, -alpha), g.scale(l_ce, 1.0 - alpha));
}

}  // namespace scbm::loss
