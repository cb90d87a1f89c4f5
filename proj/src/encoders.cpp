#include "scbm/encoders.hpp"

#include <cmath>
#include <stdexcept>

#include "scbm/kernels.hpp"

namespace scbm::nn {

Tensor glorot_init(std::vector<std::size_t> shape, std::size_t fan_in, std::size_t fan_out,
                   Rng& rng) {
    Tensor t(std::move(shape));
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& v : t.vec()) v = rng.uniform(-bound, bound);
    return t;
}

namespace {

Tensor glorot(std::vector<std::size_t> shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    return glorot_init(std::move(shape), fan_in, fan_out, rng);
}

struct StackDims {
    std::size_t h, w, c;
};

StackDims dims_after_convs(const EncoderConfig& cfg) {
    StackDims d{cfg.in_h, cfg.in_w, cfg.in_c};
    for (const auto& conv : cfg.convs) {
        if (d.h < conv.kernel || d.w < conv.kernel)
            throw std::invalid_argument("EncoderConfig: conv kernel larger than its input");
        d.h = kernels::conv_out_dim(d.h, conv.kernel, conv.stride);
        d.w = kernels::conv_out_dim(d.w, conv.kernel, conv.stride);
        d.c = conv.filters;
        if (cfg.pool > 0) {
            if (d.h < cfg.pool || d.w < cfg.pool)
                throw std::invalid_argument("EncoderConfig: pool larger than conv output");
            d.h /= cfg.pool;
            d.w /= cfg.pool;
        }
    }
    return d;
}

}  // namespace

std::size_t encoder_flat_dim(const EncoderConfig& cfg) {
    const StackDims d = dims_after_convs(cfg);
    return d.h * d.w * d.c;
}

void init_encoder_params(ad::ParameterSet& ps, const std::string& prefix, const EncoderConfig& cfg,
                         std::size_t out_dim, Rng& rng) {
    std::size_t cin = cfg.in_c;
    for (std::size_t li = 0; li < cfg.convs.size(); ++li) {
        const auto& conv = cfg.convs[li];
        const std::size_t rf = conv.kernel * conv.kernel;
        ps.add(prefix + ".conv" + std::to_string(li) + ".w",
               glorot({conv.kernel, conv.kernel, cin, conv.filters}, rf * cin, rf * conv.filters, rng));
        ps.add(prefix + ".conv" + std::to_string(li) + ".b", Tensor({conv.filters}));
        cin = conv.filters;
    }
    std::size_t width = encoder_flat_dim(cfg);
    for (std::size_t li = 0; li < cfg.dense.size(); ++li) {
        ps.add(prefix + ".dense" + std::to_string(li) + ".w",
               glorot({width, cfg.dense[li]}, width, cfg.dense[li], rng));
        ps.add(prefix + ".dense" + std::to_string(li) + ".b", Tensor({1, cfg.dense[li]}));
        width = cfg.dense[li];
    }
    ps.add(prefix + ".out.w", glorot({width, out_dim}, width, out_dim, rng));
    ps.add(prefix + ".out.b", Tensor({1, out_dim}));
}

int encoder_forward(ad::Graph& g, const ad::ParameterSet& ps, const std::string& prefix,
                    int x, const EncoderConfig& cfg, std::size_t out_dim) {
    const Tensor& xt = g.value(x);
    if (xt.ndim() != 4 || xt.dim(1) != cfg.in_h || xt.dim(2) != cfg.in_w || xt.dim(3) != cfg.in_c)
        throw std::invalid_argument("encoder: image shape " + xt.shape_str() + " does not match config");
    const std::size_t n = xt.dim(0);

    int h = x;
    for (std::size_t li = 0; li < cfg.convs.size(); ++li) {
        const std::string base = prefix + ".conv" + std::to_string(li);
        h = g.conv2d(h, g.param(base + ".w", ps), g.param(base + ".b", ps), cfg.convs[li].stride);
        h = g.relu(h);
        if (cfg.pool > 0) h = g.maxpool2(h, cfg.pool);
    }
    h = g.reshape(h, {n, encoder_flat_dim(cfg)});
    for (std::size_t li = 0; li < cfg.dense.size(); ++li) {
        const std::string base = prefix + ".dense" + std::to_string(li);
        h = g.dense(h, g.param(base + ".w", ps), g.param(base + ".b", ps));
        h = g.relu(h);
    }
    h = g.dense(h, g.param(prefix + ".out.w", ps), g.param(prefix + ".out.b", ps));
    if (g.value(h).cols() != out_dim)
        throw std::invalid_argument("encoder: configured output width mismatch");
    return h;
}

void init_concept_encoder_params(ad::ParameterSet& ps, const ConceptSchema& schema,
                                 const EncoderConfig& cfg, Rng& rng) {
    for (std::size_t i = 0; i < schema.concept_count(); ++i)
        init_encoder_params(ps, "concept" + std::to_string(i), cfg, schema.cardinalities[i], rng);
}

std::vector<int> concept_encoder_forward(ad::Graph& g, const ad::ParameterSet& ps, int x,
                                         const ConceptSchema& schema, const EncoderConfig& cfg) {
    std::vector<int> blocks;
    blocks.reserve(schema.concept_count());
    for (std::size_t i = 0; i < schema.concept_count(); ++i)
        blocks.push_back(encoder_forward(g, ps, "concept" + std::to_string(i), x, cfg,
                                         schema.cardinalities[i]));
    return blocks;
}

void init_embedding_encoder_params(ad::ParameterSet& ps, const EncoderConfig& cfg, std::size_t d,
                                   Rng& rng) {
    init_encoder_params(ps, "embed", cfg, d, rng);
}

int embedding_encoder_forward(ad::Graph& g, const ad::ParameterSet& ps, int x,
                              const EncoderConfig& cfg, std::size_t d) {
    return encoder_forward(g, ps, "embed", x, cfg, d);
}

void init_dense_head_params(ad::ParameterSet& ps, const ConceptSchema& schema, std::size_t d,
                            std::size_t hidden, Rng& rng) {
    for (std::size_t i = 0; i < schema.concept_count(); ++i) {
        const std::string base = "head" + std::to_string(i);
        ps.add(base + ".fc0.w", glorot({d, hidden}, d, hidden, rng));
        ps.add(base + ".fc0.b", Tensor({1, hidden}));
        const std::size_t k = schema.cardinalities[i];
        ps.add(base + ".fc1.w", glorot({hidden, k}, hidden, k, rng));
        ps.add(base + ".fc1.b", Tensor({1, k}));
    }
}

std::vector<int> dense_head_forward(ad::Graph& g, const ad::ParameterSet& ps, int z,
                                    const ConceptSchema& schema, std::size_t hidden) {
    (void)hidden;
    std::vector<int> blocks;
    blocks.reserve(schema.concept_count());
    for (std::size_t i = 0; i < schema.concept_count(); ++i) {
        const std::string base = "head" + std::to_string(i);
        int h = g.dense(z, g.param(base + ".fc0.w", ps), g.param(base + ".fc0.b", ps));
        h = g.relu(h);
        h = g.dense(h, g.param(base + ".fc1.w", ps), g.param(base + ".fc1.b", ps));
        blocks.push_back(h);
    }
    return blocks;
}

}  // namespace scbm::nn
