#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "scbm/interpret.hpp"
#include "scbm/rng.hpp"

using namespace scbm;
using namespace scbm::interpret;
using surv::StepSurvivalFunction;

namespace {

nn::EncoderConfig tiny_encoder() {
    nn::EncoderConfig cfg;
    cfg.in_h = 10;
    cfg.in_w = 10;
    cfg.in_c = 1;
    cfg.convs = {{2, 3, 1}};
    cfg.pool = 2;
    cfg.dense = {6};
    return cfg;
}

data::ConceptSurvivalDataset toy_dataset(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    data::ConceptSurvivalDataset ds;
    ds.schema = ConceptSchema({"c0", "c1"}, {2, 3});
    for (std::size_t i = 0; i < n; ++i) {
        const int c0 = static_cast<int>(rng.below(2));
        const int c1 = static_cast<int>(rng.below(3));
        Tensor img({10, 10, 1});
        for (auto& v : img.vec()) v = rng.uniform(0.0, 0.1);
        if (c0 == 1)
            for (int p = 0; p < 16; ++p) img[(std::size_t)p] = 1.0;
        for (int p = 0; p < 9; ++p) img[(std::size_t)(60 + p)] = c1 / 2.0;
        ds.images.push_back(std::move(img));
        ds.concepts.push_back({c0, c1});
        ds.times.push_back(std::pow(-std::log(rng.uniform_open()) / std::exp(1.2 * c1), 0.5));
        ds.events.push_back(true);
    }
    return ds;
}

model::TrainedModel quick_model(model::Architecture arch, model::HeadKind head,
                                const data::ConceptSurvivalDataset& ds, std::uint64_t seed) {
    model::ModelSpec spec;
    spec.arch = arch;
    spec.schema = ds.schema;
    spec.encoder = tiny_encoder();
    spec.embedding_dim = 6;
    spec.concept_head_hidden = 5;
    spec.head.kind = head;
    spec.head.background_size = 10;
    spec.head.tau = 4.0;
    model::TrainConfig tc;
    tc.epochs = 2;
    tc.batch = 12;
    tc.optimizer = model::OptimizerKind::Adam;
    tc.seed = seed;
    return model::fit(spec, ds, tc);
}

StepSurvivalFunction random_sf(Rng& rng) {
    const std::size_t k = 1 + rng.below(6);
    std::vector<double> knots, values;
    double t = 0.0, v = 1.0;
    for (std::size_t i = 0; i < k; ++i) {
        t += rng.uniform(0.1, 2.0);
        v *= rng.uniform(0.3, 1.0);
        knots.push_back(t);
        values.push_back(v);
    }
    return StepSurvivalFunction(knots, values);
}

}  // namespace

TEST_CASE("sf distance basics") {
    const StepSurvivalFunction a({1.0}, {0.0});
    const StepSurvivalFunction b({2.0}, {0.0});
    CHECK(sf_distance(a, a) == 0.0);
    CHECK(sf_distance(a, b) == doctest::Approx(1.0));
    CHECK(sf_distance(a, b) == sf_distance(b, a));
}

TEST_CASE("sf distance is a metric on random step functions") {
    Rng rng(5);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto a = random_sf(rng);
        const auto b = random_sf(rng);
        const auto c = random_sf(rng);
        const double ab = sf_distance(a, b), ba = sf_distance(b, a);
        const double ac = sf_distance(a, c), cb = sf_distance(c, b);
        CHECK(std::fabs(ab - ba) <= 1e-9);
        CHECK(sf_distance(a, a) <= 1e-12);
        CHECK(ab <= ac + cb + 1e-9);
    }
}

TEST_CASE("neighbor match scoring: worked example and edge patterns") {
    // counts (9,8,2,2) out of K=9
    std::vector<std::vector<int>> neighbors;
    for (int r = 0; r < 9; ++r) {
        std::vector<int> row = {3, 7, 5, 0};
        if (r >= 8) row[1] = 1;
        if (r >= 2) row[2] = 9;
        if (r >= 2) row[3] = 4;
        neighbors.push_back(row);
    }
    const auto scores = neighbor_match_scores({3, 7, 5, 0}, neighbors);
    CHECK(scores[0] == 1.0);
    CHECK(scores[1] == doctest::Approx(8.0 / 9.0));
    CHECK(scores[2] == doctest::Approx(2.0 / 9.0));
    CHECK(scores[3] == doctest::Approx(2.0 / 9.0));

    // all neighbors agree with one another but differ from the instance
    std::vector<std::vector<int>> off(5, std::vector<int>{1, 1});
    const auto zero_scores = neighbor_match_scores({0, 0}, off);
    CHECK(zero_scores[0] == 0.0);
    CHECK(zero_scores[1] == 0.0);
}

TEST_CASE("neighbor explanation on a trained beran model") {
    const auto ds = toy_dataset(30, 11);
    const auto m = quick_model(model::Architecture::SurvCBM, model::HeadKind::Beran, ds, 12);

    SUBCASE("an instance from the training set matches itself at K=1") {
        const auto rep = explain_with_neighbors(m, ds.images[4], ds, 1);
        REQUIRE(rep.neighbors.indices.size() == 1);
        CHECK(rep.neighbors.indices[0] == 4);
        for (double s : rep.scores) CHECK(s == 1.0);
        CHECK(rep.neighbors.distances[0] == 0.0);
    }

    SUBCASE("scores are invariant under training-set permutation") {
        const auto rep = explain_with_neighbors(m, ds.images[7], ds, 5);

        std::vector<std::size_t> perm(ds.size());
        for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = (i + 13) % perm.size();
        const auto shuffled = ds.subset(perm);
        const auto rep2 = explain_with_neighbors(m, ds.images[7], shuffled, 5);
        CHECK(rep.scores == rep2.scores);
    }

    SUBCASE("distances come out sorted and indices distinct") {
        const auto rep = explain_with_neighbors(m, ds.images[2], ds, 8);
        for (std::size_t i = 1; i < rep.neighbors.distances.size(); ++i) {
            CHECK(rep.neighbors.distances[i] >= rep.neighbors.distances[i - 1]);
            for (std::size_t j = 0; j < i; ++j)
                CHECK(rep.neighbors.indices[i] != rep.neighbors.indices[j]);
        }
    }

    SUBCASE("K bounds are enforced") {
        CHECK_THROWS_AS(explain_with_neighbors(m, ds.images[0], ds, 0), std::invalid_argument);
        CHECK_THROWS_AS(explain_with_neighbors(m, ds.images[0], ds, ds.size() + 1),
                        std::invalid_argument);
    }
}

TEST_CASE("neighbor explanation rejects unsupported models") {
    const auto ds = toy_dataset(20, 21);
    const auto cox = quick_model(model::Architecture::SurvCBM, model::HeadKind::Cox, ds, 22);
    CHECK_THROWS_WITH_AS(explain_with_neighbors(cox, ds.images[0], ds, 3),
                         doctest::Contains("beran"), std::invalid_argument);
}

TEST_CASE("cox contribution explanation") {
    const auto ds = toy_dataset(20, 31);
    auto m = quick_model(model::Architecture::SurvCBM, model::HeadKind::Cox, ds, 32);

    SUBCASE("scores decompose b^T pi exactly") {
        const auto rep = explain_cox_contributions(m, ds.images[1]);
        REQUIRE(rep.scores.size() == 2);
        const auto pred = model::predict(m, ds.images[1]);
        const auto& logits = *pred.concept_logits;
        const Tensor& b = m.params.value("cox.b");
        double total = 0.0;
        std::size_t off = 0;
        for (const auto& block : logits.blocks) {
            double mx = block[0];
            for (double v : block) mx = std::max(mx, v);
            double sum = 0.0;
            std::vector<double> e(block.size());
            for (std::size_t j = 0; j < block.size(); ++j) {
                e[j] = std::exp(block[j] - mx);
                sum += e[j];
            }
            for (std::size_t j = 0; j < block.size(); ++j)
                total += b.vec()[off + j] * e[j] / sum;
            off += block.size();
        }
        CHECK(std::fabs(rep.total_contribution - total) <= 1e-12);
        CHECK(std::fabs(rep.scores[0] + rep.scores[1] - total) <= 1e-12);
    }

    SUBCASE("a constant coefficient block contributes exactly its value") {
        Tensor& b = m.params.value("cox.b");
        for (std::size_t j = 0; j < 2; ++j) b.vec()[j] = 2.5;   // block 0 (k=2)
        for (std::size_t j = 2; j < 5; ++j) b.vec()[j] = -1.25; // block 1 (k=3)
        const auto rep = explain_cox_contributions(m, ds.images[2]);
        CHECK(rep.scores[0] == doctest::Approx(2.5).epsilon(1e-12));
        CHECK(rep.scores[1] == doctest::Approx(-1.25).epsilon(1e-12));
    }

    SUBCASE("uniform probabilities give the block mean") {
        // zero the output layers so every logit collapses to 0
        for (int i = 0; i < 2; ++i) {
            const std::string p = "concept" + std::to_string(i);
            for (auto& v : m.params.value(p + ".out.w").vec()) v = 0.0;
            for (auto& v : m.params.value(p + ".out.b").vec()) v = 0.0;
        }
        Tensor& b = m.params.value("cox.b");
        b.vec() = {1.0, 3.0, 3.0, 6.0, 0.0};
        const auto rep = explain_cox_contributions(m, m.spec.arch == model::Architecture::SurvCBM
                                                          ? ds.images[0]
                                                          : ds.images[0]);
        CHECK(rep.scores[0] == doctest::Approx(2.0));
        CHECK(rep.scores[1] == doctest::Approx(3.0));
    }

    SUBCASE("wrong model kinds are rejected") {
        const auto beran = quick_model(model::Architecture::SurvCBM, model::HeadKind::Beran, ds, 33);
        CHECK_THROWS_WITH_AS(explain_cox_contributions(beran, ds.images[0]),
                             doctest::Contains("cox"), std::invalid_argument);
        const auto rcm = quick_model(model::Architecture::SurvRCM, model::HeadKind::Cox, ds, 34);
        CHECK_THROWS_WITH_AS(explain_cox_contributions(rcm, ds.images[0]),
                             doctest::Contains("survcbm"), std::invalid_argument);
    }
}

TEST_CASE("report rendering") {
    ExplanationReport rep;
    rep.method = Method::NeighborMatch;
    rep.k = 9;
    rep.scores = {1.0, 8.0 / 9.0};
    rep.match_counts = {9, 8};
    rep.instance_values = {3, 7};
    const ConceptSchema schema({"c0", "c1"}, {10, 10});
    const std::string text = report_to_text(rep, schema);
    CHECK(text.find("neighbor-match") != std::string::npos);
    CHECK(text.find("9/9") != std::string::npos);
    CHECK(text.find("0.888889") != std::string::npos);
}
