#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "scbm/models.hpp"
#include "scbm/rng.hpp"

using namespace scbm;
using namespace scbm::model;

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

// tiny dataset whose concepts and times are functions of the images: one
// bright block encodes concept 0 (2 values), another encodes concept 1
// (3 values); risk grows with concept 1.
data::ConceptSurvivalDataset toy_dataset(std::size_t n, std::uint64_t seed, double censor_p = 0.0) {
    Rng rng(seed);
    data::ConceptSurvivalDataset ds;
    ds.schema = ConceptSchema({"c0", "c1"}, {2, 3});
    for (std::size_t i = 0; i < n; ++i) {
        const int c0 = static_cast<int>(rng.below(2));
        const int c1 = static_cast<int>(rng.below(3));
        Tensor img({10, 10, 1});
        for (auto& v : img.vec()) v = rng.uniform(0.0, 0.08);
        if (c0 == 1)
            for (int y = 0; y < 4; ++y)
                for (int x = 0; x < 4; ++x) img[(std::size_t)(y * 10 + x)] = 1.0;
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 3; ++x) img[(std::size_t)((y + 6) * 10 + (x + 6))] = c1 / 2.0;
        ds.images.push_back(std::move(img));
        ds.concepts.push_back({c0, c1});
        const double risk = 1.5 * c1 + 0.5 * c0;
        ds.times.push_back(std::pow(-std::log(rng.uniform_open()) / std::exp(risk), 0.5));
        ds.events.push_back(!rng.bernoulli(censor_p));
    }
    return ds;
}

ModelSpec toy_spec(Architecture arch, HeadKind head, const data::ConceptSurvivalDataset& ds) {
    ModelSpec spec;
    spec.arch = arch;
    spec.schema = ds.schema;
    spec.encoder = tiny_encoder();
    spec.embedding_dim = 6;
    spec.concept_head_hidden = 5;
    spec.head.kind = head;
    spec.head.background_size = 12;
    spec.head.tau = 4.0;
    return spec;
}

TrainConfig quick_train(std::size_t epochs, std::uint64_t seed) {
    TrainConfig tc;
    tc.epochs = epochs;
    tc.batch = 16;
    tc.lr = 2e-3;
    tc.optimizer = OptimizerKind::Adam;
    tc.seed = seed;
    return tc;
}

}  // namespace

TEST_CASE("fit is deterministic for a fixed seed") {
    const auto ds = toy_dataset(24, 1);
    const ModelSpec spec = toy_spec(Architecture::SurvCBM, HeadKind::Cox, ds);
    const auto m1 = fit(spec, ds, quick_train(2, 77));
    const auto m2 = fit(spec, ds, quick_train(2, 77));
    for (const auto& name : m1.params.names()) {
        const Tensor& a = m1.params.value(name);
        const Tensor& b = m2.params.value(name);
        REQUIRE(a.same_shape(b));
        CHECK(std::memcmp(a.data(), b.data(), a.size() * 8) == 0);
    }
    REQUIRE(m1.baseline.knots().size() == m2.baseline.knots().size());
    CHECK(std::memcmp(m1.baseline.values().data(), m2.baseline.values().data(),
                      m1.baseline.values().size() * 8) == 0);
}

TEST_CASE("survbase survival term trends upward on a separable toy set") {
    std::size_t improved = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto ds = toy_dataset(64, 100 + seed);
        ModelSpec spec = toy_spec(Architecture::SurvBase, HeadKind::Cox, ds);
        spec.schema = ConceptSchema();
        TrainConfig tc = quick_train(8, 200 + seed);
        tc.alpha = 0.99;
        const auto m = fit(spec, ds, tc);
        REQUIRE(m.log.size() == 8);
        if (m.log.back().surv >= m.log.front().surv) ++improved;
    }
    CHECK(improved >= 3);
}

TEST_CASE("constant concept labels drive the CE term to zero") {
    auto ds = toy_dataset(32, 5);
    for (auto& c : ds.concepts) c = {1, 2};
    const ModelSpec spec = toy_spec(Architecture::SurvCBM, HeadKind::Cox, ds);
    TrainConfig tc = quick_train(60, 6);
    tc.alpha = 0.05;  // CE-dominated
    tc.lr = 5e-3;
    const auto m = fit(spec, ds, tc);
    CHECK(m.log.back().ce < 1e-3);
}

TEST_CASE("cox head with zero coefficients returns the baseline everywhere") {
    const auto ds = toy_dataset(20, 9);
    const ModelSpec spec = toy_spec(Architecture::SurvCBM, HeadKind::Cox, ds);
    auto m = fit(spec, ds, quick_train(1, 10));
    for (auto& v : m.params.value("cox.b").vec()) v = 0.0;
    for (int i = 0; i < 3; ++i) {
        const auto bundle = predict(m, ds.images[static_cast<std::size_t>(i)]);
        REQUIRE(bundle.sf.knots().size() == m.baseline.knots().size());
        for (std::size_t k = 0; k < m.baseline.knots().size(); ++k)
            CHECK(bundle.sf.values()[k] == doctest::Approx(m.baseline.values()[k]).epsilon(1e-12));
    }
}

TEST_CASE("beran head concentrates weight on an identical background entry") {
    const auto ds = toy_dataset(20, 19);
    const ModelSpec spec = toy_spec(Architecture::SurvCBM, HeadKind::Beran, ds);
    auto m = fit(spec, ds, quick_train(1, 20));

    // overwrite the stored background so entry 0 equals the query's logits
    const auto probe = predict(m, ds.images[0]);
    const std::vector<double> q = probe.concept_logits->concatenated();
    const std::size_t dim = q.size();
    m.background_rep = Tensor({4, dim});
    for (std::size_t c = 0; c < dim; ++c) {
        m.background_rep.at2(0, c) = q[c];
        m.background_rep.at2(1, c) = q[c] + 50.0;
        m.background_rep.at2(2, c) = q[c] - 50.0;
        m.background_rep.at2(3, c) = q[c] + 80.0;
    }
    m.background_events = {{1.0, true}, {2.0, true}, {3.0, false}, {4.0, true}};

    const auto bundle = predict(m, ds.images[0]);
    // nearly all weight on the event at t=1: S collapses there
    CHECK(bundle.sf.value_at(1.0) < 0.01);
    CHECK(bundle.sf.value_at(0.999) == 1.0);
    CHECK(bundle.expected_time == doctest::Approx(surv::expected_event_time(bundle.sf)));
}

TEST_CASE("in-graph beran expected time agrees with the estimator route") {
    const std::vector<surv::EventSample> bg = {{0.5, true},  {1.0, false}, {1.5, true},
                                               {2.5, true},  {3.0, false}, {4.0, true}};
    Rng rng(33);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<double> raw(bg.size());
        double sum = 0.0;
        for (auto& w : raw) {
            w = rng.uniform(0.0, 1.0) + 1e-9;
            sum += w;
        }
        for (auto& w : raw) w /= sum;

        ad::Graph g;
        ad::ParameterSet ps;
        Tensor alpha({1, bg.size()}, raw);
        const int node = beran_expected_time_node(g, g.input(alpha), bg);
        g.forward(ps);
        const double via_graph = g.value(node).scalar_value();
        const double via_core =
            surv::expected_event_time(surv::beran_survival({raw}, bg));
        CHECK(via_graph == doctest::Approx(via_core).epsilon(1e-9));
    }
}

TEST_CASE("survcbm survival head consumes only the concept logits") {
    const auto ds = toy_dataset(18, 41);
    for (HeadKind head : {HeadKind::Cox, HeadKind::Beran}) {
        const ModelSpec spec = toy_spec(Architecture::SurvCBM, head, ds);
        const auto m = fit(spec, ds, quick_train(2, 42));
        const auto bundle = predict(m, ds.images[3]);
        const std::vector<double> p = bundle.concept_logits->concatenated();

        surv::StepSurvivalFunction recomputed;
        if (head == HeadKind::Cox) {
            double risk = 0.0;
            const Tensor& b = m.params.value("cox.b");
            for (std::size_t c = 0; c < p.size(); ++c) risk += p[c] * b.vec()[c];
            recomputed = surv::cox_survival(risk, m.baseline);
        } else {
            std::vector<std::vector<double>> rows;
            for (std::size_t r = 0; r < m.background_rep.dim(0); ++r)
                rows.emplace_back(m.background_rep.data() + r * p.size(),
                                  m.background_rep.data() + (r + 1) * p.size());
            recomputed = surv::beran_survival(surv::gaussian_weights(p, rows, spec.head.tau),
                                              m.background_events);
        }
        REQUIRE(recomputed.values().size() == bundle.sf.values().size());
        for (std::size_t i = 0; i < recomputed.values().size(); ++i)
            CHECK(std::fabs(recomputed.values()[i] - bundle.sf.values()[i]) <= 1e-12);
    }
}

TEST_CASE("survrcm concept loss puts no gradient on the survival head") {
    const auto ds = toy_dataset(16, 51);
    const ModelSpec spec = toy_spec(Architecture::SurvRCM, HeadKind::Cox, ds);
    ad::ParameterSet ps;
    Rng rng(52);
    init_params(spec, ps, rng);

    std::vector<std::size_t> idx = {0, 1, 2, 3};
    ad::Graph g;
    const int x = g.input(stack_images(ds.images, idx));
    const auto fw = build_forward(g, ps, spec, x);
    std::vector<std::vector<int>> labels;
    for (std::size_t i : idx) labels.push_back(ds.concepts[i]);
    const int ce = loss::concept_cross_entropy(g, fw.blocks, labels);
    g.forward(ps);
    const auto grads = g.backward(ce, ps);
    for (double v : grads.at("cox.b").vec()) CHECK(v == 0.0);
    // the embedding itself does receive concept gradient (regularization path)
    double embed_grad = 0.0;
    for (double v : grads.at("embed.out.w").vec()) embed_grad += std::fabs(v);
    CHECK(embed_grad > 0.0);
}

TEST_CASE("ce-dominated training never degrades concept f1 on the toy set") {
    std::size_t kept = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto train_ds = toy_dataset(48, 300 + seed);
        const auto test_ds = toy_dataset(24, 400 + seed);
        const ModelSpec spec = toy_spec(Architecture::SurvCBM, HeadKind::Cox, train_ds);

        ad::ParameterSet ps;
        Rng rng(500 + seed);
        init_params(spec, ps, rng);
        TrainedModel untrained;
        untrained.spec = spec;
        untrained.params = ps;
        untrained.baseline = surv::sf_from_cumhazard(surv::nelson_aalen(train_ds.event_samples()));
        const auto before = evaluate(untrained, test_ds);

        TrainConfig tc = quick_train(6, 600 + seed);
        tc.alpha = 0.02;
        const auto after = evaluate(fit(spec, train_ds, tc), test_ds);
        if (*after.f1_mean >= *before.f1_mean) ++kept;
    }
    CHECK(kept >= 3);
}

TEST_CASE("end-to-end loss gradient matches finite differences (survcbm+cox spot check)") {
    const auto ds = toy_dataset(8, 61);
    const ModelSpec spec = toy_spec(Architecture::SurvCBM, HeadKind::Cox, ds);
    ad::ParameterSet ps;
    Rng rng(62);
    init_params(spec, ps, rng);
    TrainConfig tc = quick_train(1, 63);

    std::vector<std::size_t> idx = {0, 1, 2, 3, 4, 5, 6, 7};
    std::vector<std::vector<int>> labels;
    std::vector<surv::EventSample> events;
    for (std::size_t i : idx) {
        labels.push_back(ds.concepts[i]);
        events.push_back({ds.times[i], static_cast<bool>(ds.events[i])});
    }
    ad::Graph g;
    const int x = g.input(stack_images(ds.images, idx));
    const auto bl = build_batch_loss(g, ps, spec, tc, x, labels, events, Tensor(), {});
    REQUIRE(!bl.surv_skipped);
    const auto rep = ad::finite_difference_check(g, bl.loss, ps, 1e-5);
    CHECK(rep.max_rel_err < 1e-4);
}

TEST_CASE("evaluate delegates to the shared metric routines") {
    const auto train_ds = toy_dataset(30, 71);
    const auto test_ds = toy_dataset(15, 72);
    const ModelSpec spec = toy_spec(Architecture::SurvCBM, HeadKind::Cox, train_ds);
    const auto m = fit(spec, train_ds, quick_train(2, 73));
    const auto metrics = evaluate(m, test_ds);

    const auto preds = predict_batch(m, test_ds.images);
    std::vector<double> pred_times;
    for (const auto& p : preds) pred_times.push_back(p.expected_time);
    CHECK(metrics.c_index ==
          doctest::Approx(surv::concordance_index(pred_times, test_ds.event_samples())));

    REQUIRE(metrics.f1_mean.has_value());
    double mean = 0.0;
    for (std::size_t c = 0; c < 2; ++c) {
        std::vector<int> truth, guess;
        for (std::size_t i = 0; i < test_ds.size(); ++i) {
            truth.push_back(test_ds.concepts[i][c]);
            guess.push_back(preds[i].concept_argmax[c]);
        }
        const double f1 = macro_f1(truth, guess, test_ds.schema.cardinalities[c]);
        CHECK(metrics.f1_per_concept[c] == doctest::Approx(f1));
        mean += f1;
    }
    CHECK(*metrics.f1_mean == doctest::Approx(mean / 2.0));
}

TEST_CASE("macro f1 scoring") {
    CHECK(macro_f1({0, 1, 2, 1}, {0, 1, 2, 1}, 3) == doctest::Approx(1.0));
    CHECK(macro_f1({0, 0, 0}, {0, 0, 0}, 3) == doctest::Approx(1.0));  // absent classes excluded
    // one class fully wrong
    CHECK(macro_f1({0, 1}, {1, 0}, 2) == doctest::Approx(0.0));
}

TEST_CASE("constant predictions score zero under the strict tie rule") {
    const auto ds = toy_dataset(12, 81);
    const ModelSpec spec = toy_spec(Architecture::SurvCBM, HeadKind::Cox, ds);
    auto m = fit(spec, ds, quick_train(1, 82));
    for (auto& v : m.params.value("cox.b").vec()) v = 0.0;  // identical SFs everywhere
    const auto metrics = evaluate(m, ds);
    CHECK(metrics.c_index == 0.0);
}

TEST_CASE("survbase metrics carry no concept fields") {
    auto ds = toy_dataset(16, 91);
    ModelSpec spec = toy_spec(Architecture::SurvBase, HeadKind::Cox, ds);
    spec.schema = ConceptSchema();
    const auto m = fit(spec, ds, quick_train(1, 92));
    const auto metrics = evaluate(m, ds);
    CHECK(!metrics.f1_mean.has_value());
    CHECK(metrics.f1_per_concept.empty());
    const auto bundle = predict(m, ds.images[0]);
    CHECK(!bundle.concept_logits.has_value());
    CHECK(bundle.concept_argmax.empty());
}

TEST_CASE("fit input validation") {
    const auto ds = toy_dataset(10, 95);
    const ModelSpec spec = toy_spec(Architecture::SurvCBM, HeadKind::Cox, ds);
    CHECK_THROWS_WITH_AS(fit(spec, data::ConceptSurvivalDataset{}, quick_train(1, 1)),
                         doctest::Contains("empty"), std::invalid_argument);

    auto censored = ds;
    for (std::size_t i = 0; i < censored.size(); ++i) censored.events[i] = false;
    CHECK_THROWS_WITH_AS(fit(spec, censored, quick_train(1, 1)),
                         doctest::Contains("no comparable pairs"), std::runtime_error);

    ModelSpec bad = spec;
    bad.head.kind = HeadKind::Beran;
    bad.head.background_size = 1;
    CHECK_THROWS_AS(fit(bad, ds, quick_train(1, 1)), std::invalid_argument);

    ModelSpec pv = spec;
    pv.arch = Architecture::SurvBase;
    pv.head.kind = HeadKind::Beran;
    pv.head.bandwidth = BandwidthMode::PerValue;
    CHECK_THROWS_WITH_AS(fit(pv, ds, quick_train(1, 1)), doctest::Contains("per-value"),
                         std::invalid_argument);
}

TEST_CASE("predict rejects mismatched image shapes") {
    const auto ds = toy_dataset(10, 97);
    const ModelSpec spec = toy_spec(Architecture::SurvCBM, HeadKind::Cox, ds);
    const auto m = fit(spec, ds, quick_train(1, 98));
    CHECK_THROWS_WITH_AS(predict(m, Tensor({11, 10, 1})), doctest::Contains("image shape"),
                         std::invalid_argument);
}
