#pragma once

#include <string>
#include <vector>

#include "scbm/autodiff.hpp"
#include "scbm/concept_schema.hpp"
#include "scbm/rng.hpp"

namespace scbm::nn {

struct ConvSpec {
    std::size_t filters = 8;
    std::size_t kernel = 3;
    std::size_t stride = 1;
};

/// Convolutional trunk shared by all encoders: conv/ReLU/pool stack followed
/// by dense/ReLU layers; the output layer is appended per use with the
/// required width (concept cardinality k_i or embedding dim d).
struct EncoderConfig {
    std::size_t in_h = 28, in_w = 28, in_c = 1;
    std::vector<ConvSpec> convs = {{8, 3, 1}, {16, 3, 1}};
    std::size_t pool = 2;  // max-pool size after every conv layer; 0 disables
    std::vector<std::size_t> dense = {64};
};

/// Flattened width after the conv/pool stack.
std::size_t encoder_flat_dim(const EncoderConfig& cfg);

/// Uniform init in +-sqrt(6 / (fan_in + fan_out)).
Tensor glorot_init(std::vector<std::size_t> shape, std::size_t fan_in, std::size_t fan_out,
                   Rng& rng);

/// Glorot-uniform init for one trunk plus its output layer, parameters
/// registered under `prefix.`; biases start at zero.
void init_encoder_params(ad::ParameterSet& ps, const std::string& prefix, const EncoderConfig& cfg,
                         std::size_t out_dim, Rng& rng);

/// Apply the trunk registered under `prefix.` to images x (N,H,W,C);
/// returns a (N, out_dim) node.
int encoder_forward(ad::Graph& g, const ad::ParameterSet& ps, const std::string& prefix,
                    int x, const EncoderConfig& cfg, std::size_t out_dim);

/// One independent CNN per concept ("concept<i>." prefixes).
void init_concept_encoder_params(ad::ParameterSet& ps, const ConceptSchema& schema,
                                 const EncoderConfig& cfg, Rng& rng);
std::vector<int> concept_encoder_forward(ad::Graph& g, const ad::ParameterSet& ps, int x,
                                         const ConceptSchema& schema, const EncoderConfig& cfg);

/// Single shared CNN producing a d-dimensional embedding ("embed." prefix).
void init_embedding_encoder_params(ad::ParameterSet& ps, const EncoderConfig& cfg, std::size_t d,
                                   Rng& rng);
int embedding_encoder_forward(ad::Graph& g, const ad::ParameterSet& ps, int x,
                              const EncoderConfig& cfg, std::size_t d);

/// One small dense network per concept on top of an embedding
/// ("head<i>." prefixes): dense(hidden) -> ReLU -> dense(k_i).
void init_dense_head_params(ad::ParameterSet& ps, const ConceptSchema& schema, std::size_t d,
                            std::size_t hidden, Rng& rng);
std::vector<int> dense_head_forward(ad::Graph& g, const ad::ParameterSet& ps, int z,
                                    const ConceptSchema& schema, std::size_t hidden);

}  // namespace scbm::nn
