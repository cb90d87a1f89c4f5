#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>

#include "scbm/encoders.hpp"
#include "scbm/losses.hpp"
#include "scbm/rng.hpp"

using namespace scbm;
using namespace scbm::nn;

namespace {

EncoderConfig tiny_config() {
    EncoderConfig cfg;
    cfg.in_h = 8;
    cfg.in_w = 8;
    cfg.in_c = 1;
    cfg.convs = {{2, 3, 1}};
    cfg.pool = 2;
    cfg.dense = {6};
    return cfg;
}

Tensor random_images(std::size_t n, const EncoderConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    Tensor t({n, cfg.in_h, cfg.in_w, cfg.in_c});
    for (auto& v : t.vec()) v = rng.uniform(0.0, 1.0);
    return t;
}

}  // namespace

TEST_CASE("zero image with zeroed output layer gives zero logits") {
    const EncoderConfig cfg = tiny_config();
    const ConceptSchema schema({"c0", "c1"}, {3, 4});
    ad::ParameterSet ps;
    Rng rng(1);
    init_concept_encoder_params(ps, schema, cfg, rng);
    for (std::size_t i = 0; i < 2; ++i) {
        const std::string p = "concept" + std::to_string(i);
        for (auto& v : ps.value(p + ".out.w").vec()) v = 0.0;
        for (auto& v : ps.value(p + ".out.b").vec()) v = 0.0;
    }

    ad::Graph g;
    const int x = g.input(Tensor({1, 8, 8, 1}));
    const auto blocks = concept_encoder_forward(g, ps, x, schema, cfg);
    g.forward(ps);
    REQUIRE(blocks.size() == 2);
    for (int b : blocks)
        for (double v : g.value(b).vec()) CHECK(v == 0.0);
}

TEST_CASE("shape contracts hold across random configurations") {
    Rng meta(7);
    for (int trial = 0; trial < 12; ++trial) {
        EncoderConfig cfg;
        cfg.in_h = 8 + meta.below(9);
        cfg.in_w = 8 + meta.below(9);
        cfg.in_c = 1 + meta.below(2);
        cfg.convs = {{1 + meta.below(4), 3, 1 + meta.below(2)}};
        cfg.pool = 2;
        cfg.dense = {2 + meta.below(8)};
        std::vector<std::size_t> cards{2 + meta.below(5), 2 + meta.below(5)};
        const ConceptSchema schema({"a", "b"}, cards);

        ad::ParameterSet ps;
        Rng rng(100 + trial);
        init_concept_encoder_params(ps, schema, cfg, rng);
        ad::Graph g;
        const std::size_t n = 1 + meta.below(3);
        const int x = g.input(random_images(n, cfg, 200 + trial));
        const auto blocks = concept_encoder_forward(g, ps, x, schema, cfg);
        g.forward(ps);
        REQUIRE(blocks.size() == schema.concept_count());
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            CHECK(g.value(blocks[i]).rows() == n);
            CHECK(g.value(blocks[i]).cols() == schema.cardinalities[i]);
        }
    }
}

TEST_CASE("concept encoders are independent across concepts") {
    const EncoderConfig cfg = tiny_config();
    const ConceptSchema schema({"c0", "c1"}, {2, 3});
    ad::ParameterSet ps;
    Rng rng(11);
    init_concept_encoder_params(ps, schema, cfg, rng);
    const Tensor images = random_images(2, cfg, 12);

    auto run = [&](std::vector<Tensor>* blocks_out) {
        ad::Graph g;
        const int x = g.input(images);
        const auto blocks = concept_encoder_forward(g, ps, x, schema, cfg);
        g.forward(ps);
        blocks_out->clear();
        for (int b : blocks) blocks_out->push_back(g.value(b));
        return blocks;
    };
    std::vector<Tensor> before;
    run(&before);

    // perturbing network 1 leaves block 0 bit-identical
    ps.value("concept1.conv0.w").vec()[0] += 0.5;
    std::vector<Tensor> after;
    run(&after);
    CHECK(std::memcmp(before[0].data(), after[0].data(), before[0].size() * 8) == 0);
    bool changed = false;
    for (std::size_t i = 0; i < after[1].size(); ++i)
        if (after[1].vec()[i] != before[1].vec()[i]) changed = true;
    CHECK(changed);

    // gradient of a loss over block 0 never touches network 1
    ad::Graph g;
    const int x = g.input(images);
    const auto blocks = concept_encoder_forward(g, ps, x, schema, cfg);
    const int loss = g.sum_all(blocks[0]);
    g.forward(ps);
    const auto grads = g.backward(loss, ps);
    for (double v : grads.at("concept1.conv0.w").vec()) CHECK(v == 0.0);
    for (double v : grads.at("concept1.out.w").vec()) CHECK(v == 0.0);
}

TEST_CASE("cross-entropy gradient through a concept encoder matches finite differences") {
    EncoderConfig cfg = tiny_config();
    const ConceptSchema schema({"c0"}, {3});
    ad::ParameterSet ps;
    Rng rng(21);
    init_concept_encoder_params(ps, schema, cfg, rng);

    ad::Graph g;
    const int x = g.input(random_images(3, cfg, 22));
    const auto blocks = concept_encoder_forward(g, ps, x, schema, cfg);
    const int ce = loss::concept_cross_entropy(g, blocks, {{0}, {2}, {1}});
    const auto rep = ad::finite_difference_check(g, ce, ps, 1e-5);
    CHECK(rep.max_rel_err < 1e-4);
    CHECK(rep.checked > 0);
}

TEST_CASE("embedding encoder respects the configured dimension and is deterministic") {
    const EncoderConfig cfg = tiny_config();
    ad::ParameterSet ps;
    Rng rng(31);
    init_embedding_encoder_params(ps, cfg, 5, rng);

    const Tensor images = random_images(2, cfg, 32);
    auto run = [&]() {
        ad::Graph g;
        const int z = embedding_encoder_forward(g, ps, g.input(images), cfg, 5);
        g.forward(ps);
        return g.value(z);
    };
    const Tensor z1 = run(), z2 = run();
    CHECK(z1.rows() == 2);
    CHECK(z1.cols() == 5);
    CHECK(std::memcmp(z1.data(), z2.data(), z1.size() * 8) == 0);
}

TEST_CASE("perturbing a weight changes the embedding where gradient is nonzero") {
    const EncoderConfig cfg = tiny_config();
    ad::ParameterSet ps;
    Rng rng(41);
    init_embedding_encoder_params(ps, cfg, 4, rng);
    const Tensor images = random_images(1, cfg, 42);

    auto value_sum = [&]() {
        ad::Graph g;
        const int z = embedding_encoder_forward(g, ps, g.input(images), cfg, 4);
        const int s = g.sum_all(z);
        g.forward(ps);
        return std::pair<double, ad::GradientMap>(g.value(s).scalar_value(), g.backward(s, ps));
    };
    auto [base, grads] = value_sum();
    const std::string pname = "embed.dense0.w";
    const double g0 = grads.at(pname).vec()[0];
    ps.value(pname).vec()[0] += 1e-4;
    auto [moved, grads2] = value_sum();
    (void)grads2;
    if (g0 != 0.0) CHECK(moved != base);
}

TEST_CASE("dense heads: shapes, zero case, finite differences") {
    const ConceptSchema schema({"c0", "c1"}, {2, 4});
    ad::ParameterSet ps;
    Rng rng(51);
    init_dense_head_params(ps, schema, 6, 5, rng);

    SUBCASE("zero embedding and zero weights give zero logits") {
        ad::ParameterSet zero;
        Rng r2(52);
        init_dense_head_params(zero, schema, 6, 5, r2);
        for (const auto& name : zero.names())
            for (auto& v : zero.value(name).vec()) v = 0.0;
        ad::Graph g;
        const auto blocks = dense_head_forward(g, zero, g.input(Tensor({3, 6})), schema, 5);
        g.forward(zero);
        for (int b : blocks)
            for (double v : g.value(b).vec()) CHECK(v == 0.0);
    }

    SUBCASE("block shapes match the schema") {
        ad::Graph g;
        const auto blocks = dense_head_forward(g, ps, g.input(Tensor({3, 6})), schema, 5);
        g.forward(ps);
        CHECK(g.value(blocks[0]).cols() == 2);
        CHECK(g.value(blocks[1]).cols() == 4);
        CHECK(g.value(blocks[0]).rows() == 3);
    }

    SUBCASE("gradients match finite differences") {
        Rng rng2(53);
        Tensor z({2, 6});
        for (auto& v : z.vec()) v = rng2.uniform(-1, 1);
        ad::Graph g;
        const auto blocks = dense_head_forward(g, ps, g.input(z), schema, 5);
        const int ce = loss::concept_cross_entropy(g, blocks, {{1, 0}, {0, 3}});
        const auto rep = ad::finite_difference_check(g, ce, ps, 1e-5);
        CHECK(rep.max_rel_err < 1e-4);
    }
}

TEST_CASE("image shape mismatch raises") {
    const EncoderConfig cfg = tiny_config();
    ad::ParameterSet ps;
    Rng rng(61);
    init_embedding_encoder_params(ps, cfg, 4, rng);
    ad::Graph g;
    const int bad = g.input(Tensor({1, 9, 8, 1}));
    CHECK_THROWS_WITH_AS(embedding_encoder_forward(g, ps, bad, cfg, 4),
                         doctest::Contains("image shape"), std::invalid_argument);
}
