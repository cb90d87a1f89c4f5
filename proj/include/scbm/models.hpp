#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "scbm/autodiff.hpp"
#include "scbm/datagen.hpp"
#include "scbm/encoders.hpp"
#include "scbm/losses.hpp"
#include "scbm/surv_core.hpp"

namespace scbm::model {

enum class Architecture { SurvCBM, SurvRCM, SurvBase };
enum class HeadKind { Cox, Beran };
enum class BandwidthMode { Scalar, PerValue };

std::string to_string(Architecture a);
std::string to_string(HeadKind h);
Architecture architecture_from_string(const std::string& s);
HeadKind head_from_string(const std::string& s);

struct SurvivalHeadSpec {
    HeadKind kind = HeadKind::Cox;
    std::size_t background_size = 128;            // beran
    BandwidthMode bandwidth = BandwidthMode::Scalar;
    double tau = 1.0;  // fixed scalar bandwidth; per-value mode trains from this start
};

struct ModelSpec {
    Architecture arch = Architecture::SurvCBM;
    ConceptSchema schema;  // ignored by SurvBase
    nn::EncoderConfig encoder;
    std::size_t embedding_dim = 32;
    std::size_t concept_head_hidden = 32;  // SurvRCM dense heads
    SurvivalHeadSpec head;

    /// Width of the vector the survival head consumes: the concatenated
    /// logits for SurvCBM, the embedding for the other two.
    std::size_t head_input_dim() const;
    bool uses_concepts() const { return arch != Architecture::SurvBase; }
    void validate() const;
};

enum class OptimizerKind { Momentum, Adam };

struct TrainConfig {
    double alpha = 0.5;
    double omega = 1.0;
    double lr = 1e-3;
    double weight_decay = 0.0;
    std::size_t epochs = 30;
    std::size_t batch = 64;
    std::size_t background_resamples = 1;  // background redraws per epoch (beran)
    std::size_t batches_per_epoch = 0;     // 0 = full pass over the training set
    OptimizerKind optimizer = OptimizerKind::Momentum;
    std::uint64_t seed = 0;

    void validate() const;
};

struct EpochLog {
    double total = 0.0;
    double surv = 0.0;
    double ce = 0.0;
    std::size_t surv_skipped = 0;  // batches whose survival term had no pairs
};

struct TrainedModel {
    ModelSpec spec;
    ad::ParameterSet params;
    surv::StepSurvivalFunction baseline;               // cox heads
    Tensor background_rep;                             // beran heads: (B, dim), time-ascending
    std::vector<surv::EventSample> background_events;  // aligned with background_rep rows
    std::vector<EpochLog> log;
};

struct PredictionBundle {
    surv::StepSurvivalFunction sf;
    double expected_time = 0.0;
    std::optional<ConceptLogits> concept_logits;  // absent for SurvBase
    std::vector<int> concept_argmax;
};

struct Metrics {
    double c_index = 0.0;
    std::vector<double> f1_per_concept;  // empty for SurvBase
    std::optional<double> f1_mean;
};

/// SGD with momentum 0.9 or Adam; weight decay added to the raw gradient.
class Optimizer {
public:
    Optimizer(OptimizerKind kind, double lr, double weight_decay);
    void step(ad::ParameterSet& params, const ad::GradientMap& grads);

private:
    OptimizerKind kind_;
    double lr_, wd_;
    std::size_t t_ = 0;
    std::map<std::string, Tensor> m_, v_;
};

void init_params(const ModelSpec& spec, ad::ParameterSet& ps, Rng& rng);

struct ForwardNodes {
    int head_input = -1;
    std::vector<int> blocks;  // empty for SurvBase
};

/// Encoder forward for any architecture; x is a (N,H,W,C) node.
ForwardNodes build_forward(ad::Graph& g, const ad::ParameterSet& ps, const ModelSpec& spec, int x);

struct BatchLoss {
    int loss = -1;
    int surv = -1;  // -1 when the batch had no comparable pairs
    int ce = -1;    // -1 for SurvBase
    bool surv_skipped = false;
};

/// The full training objective for one batch, shared by fit() and the
/// gradient checks. Beran heads rank against `background_rep`, a constant
/// (B, dim) matrix aligned with time-ascending `background_events`.
BatchLoss build_batch_loss(ad::Graph& g, const ad::ParameterSet& ps, const ModelSpec& spec,
                           const TrainConfig& cfg, int x,
                           const std::vector<std::vector<int>>& labels,
                           const std::vector<surv::EventSample>& batch_events,
                           const Tensor& background_rep,
                           const std::vector<surv::EventSample>& background_events);

/// Differentiable expected event time of the Beran estimate over a sorted
/// background, given normalized weights alpha (N,B).
int beran_expected_time_node(ad::Graph& g, int alpha,
                             const std::vector<surv::EventSample>& background_sorted);

/// Kernel weight rows for queries (N,dim) against a constant background.
int beran_weight_node(ad::Graph& g, const ad::ParameterSet& ps, const ModelSpec& spec, int query,
                      const Tensor& background_rep);

TrainedModel fit(const ModelSpec& spec, const data::ConceptSurvivalDataset& train,
                 const TrainConfig& cfg, std::ostream* warnings = nullptr);

PredictionBundle predict(const TrainedModel& model, const Tensor& image);
std::vector<PredictionBundle> predict_batch(const TrainedModel& model,
                                            const std::vector<Tensor>& images);

Metrics evaluate(const TrainedModel& model, const data::ConceptSurvivalDataset& test);

/// Macro F1 over the classes present in truth or prediction.
double macro_f1(const std::vector<int>& truth, const std::vector<int>& pred, std::size_t k);

/// Stack per-image tensors (H,W,C) into one (N,H,W,C) batch.
Tensor stack_images(const std::vector<Tensor>& images, const std::vector<std::size_t>& indices);

}  // namespace scbm::model
