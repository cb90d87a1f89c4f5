#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "scbm/rng.hpp"
#include "scbm/surv_core.hpp"

using namespace scbm;
using namespace scbm::surv;

namespace {

std::vector<EventSample> random_samples(std::size_t n, std::uint64_t seed, double censor_p = 0.4) {
    Rng rng(seed);
    std::vector<EventSample> out(n);
    for (auto& s : out) {
        s.time = rng.uniform(0.0, 10.0);
        s.event = !rng.bernoulli(censor_p);
    }
    return out;
}

void check_valid_sf(const StepSurvivalFunction& sf) {
    double prev_knot = -1.0, prev_val = 1.0;
    for (std::size_t i = 0; i < sf.knots().size(); ++i) {
        CHECK(sf.knots()[i] >= 0.0);
        CHECK(sf.knots()[i] > prev_knot);
        CHECK(sf.values()[i] >= 0.0);
        CHECK(sf.values()[i] <= 1.0);
        CHECK(sf.values()[i] <= prev_val);
        prev_knot = sf.knots()[i];
        prev_val = sf.values()[i];
    }
    // right-continuity: value at a knot equals the value on [knot, next)
    for (std::size_t i = 0; i < sf.knots().size(); ++i)
        CHECK(sf.value_at(sf.knots()[i]) == sf.values()[i]);
}

}  // namespace

TEST_CASE("kaplan-meier worked examples") {
    SUBCASE("three events") {
        const auto sf = kaplan_meier({{1, true}, {2, true}, {3, true}});
        CHECK(sf.knots() == std::vector<double>{1, 2, 3});
        CHECK(sf.value_at(1.5) == doctest::Approx(2.0 / 3));
        CHECK(sf.value_at(2.5) == doctest::Approx(1.0 / 3));
        CHECK(sf.value_at(3.0) == doctest::Approx(0.0));
        CHECK(sf.value_at(0.5) == 1.0);
    }
    SUBCASE("single censored sample keeps S at 1") {
        const auto sf = kaplan_meier({{5, false}});
        CHECK(sf.value_at(100.0) == 1.0);
        CHECK(sf.value_at(5.0) == 1.0);
    }
    SUBCASE("single event steps to 0") {
        const auto sf = kaplan_meier({{5, true}});
        CHECK(sf.value_at(4.999) == 1.0);
        CHECK(sf.value_at(5.0) == 0.0);
    }
    CHECK_THROWS_WITH_AS(kaplan_meier({}), doctest::Contains("empty dataset"),
                         std::invalid_argument);
}

TEST_CASE("nelson-aalen worked examples") {
    SUBCASE("two events") {
        const auto chf = nelson_aalen({{1, true}, {2, true}});
        CHECK(chf.value_at(1.0) == doctest::Approx(0.5));
        CHECK(chf.value_at(2.0) == doctest::Approx(1.5));
        CHECK(chf.value_at(0.5) == 0.0);
    }
    SUBCASE("all censored gives H == 0") {
        const auto chf = nelson_aalen({{1, false}, {4, false}});
        CHECK(chf.knots().empty());
        CHECK(chf.value_at(10.0) == 0.0);
    }
    SUBCASE("single event jumps to 1") {
        const auto chf = nelson_aalen({{3, true}});
        CHECK(chf.value_at(3.0) == doctest::Approx(1.0));
    }
    CHECK_THROWS_WITH_AS(nelson_aalen({}), doctest::Contains("empty dataset"),
                         std::invalid_argument);
}

TEST_CASE("cox survival worked examples") {
    const StepSurvivalFunction base({1, 2, 3}, {0.9, 0.5, 0.0});
    SUBCASE("risk 0 is the identity") {
        const auto sf = cox_survival(0.0, base);
        for (std::size_t i = 0; i < base.values().size(); ++i)
            CHECK(sf.values()[i] == base.values()[i]);
    }
    SUBCASE("risk ln 2 squares the baseline") {
        const auto sf = cox_survival(std::log(2.0), base);
        CHECK(sf.value_at(2.0) == doctest::Approx(0.25));
    }
    SUBCASE("zero stays zero") {
        const auto sf = cox_survival(5.0, base);
        CHECK(sf.value_at(3.0) == 0.0);
    }
    CHECK_THROWS_AS(cox_survival(std::nan(""), base), std::invalid_argument);
}

TEST_CASE("beran estimator worked examples") {
    SUBCASE("uniform weights reduce to kaplan-meier") {
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            const auto samples = random_samples(2 + seed % 49, 100 + seed);
            WeightVector w{std::vector<double>(samples.size(), 1.0 / samples.size())};
            const auto beran = beran_survival(w, samples);
            const auto km = kaplan_meier(samples);
            REQUIRE(beran.knots().size() == km.knots().size());
            for (std::size_t i = 0; i < km.knots().size(); ++i) {
                CHECK(beran.knots()[i] == km.knots()[i]);
                CHECK(std::fabs(beran.values()[i] - km.values()[i]) < 1e-9);
            }
        }
    }
    SUBCASE("all mass on a single uncensored sample") {
        const auto sf = beran_survival({{0.0, 1.0, 0.0}}, {{1, false}, {5, true}, {9, false}});
        CHECK(sf.value_at(4.999) == 1.0);
        CHECK(sf.value_at(5.0) == doctest::Approx(0.0));
    }
    SUBCASE("two events with weights 0.25/0.75") {
        const auto sf = beran_survival({{0.25, 0.75}}, {{1, true}, {2, true}});
        CHECK(sf.value_at(1.0) == doctest::Approx(0.75));
        CHECK(sf.value_at(2.0) == doctest::Approx(0.0));
    }
    SUBCASE("length mismatch is an error") {
        CHECK_THROWS_WITH_AS(beran_survival({{1.0}}, {{1, true}, {2, true}}),
                             doctest::Contains("length mismatch"), std::invalid_argument);
    }
}

TEST_CASE("gaussian weights") {
    SUBCASE("equidistant background splits evenly") {
        const auto w = gaussian_weights({0.0}, {{1.0}, {-1.0}}, 2.0);
        CHECK(w.values[0] == doctest::Approx(0.5));
        CHECK(w.values[1] == doctest::Approx(0.5));
    }
    SUBCASE("distance ratio tau*ln3 gives 3:1 odds") {
        const double tau = 1.7;
        const double far = std::sqrt(tau * std::log(3.0));
        const auto w = gaussian_weights({0.0}, {{0.0}, {far}}, tau);
        CHECK(w.values[0] == doctest::Approx(0.75));
        CHECK(w.values[1] == doctest::Approx(0.25));
    }
    SUBCASE("singleton background") {
        const auto w = gaussian_weights({3.0, 4.0}, {{0.0, 0.0}}, 1.0);
        CHECK(w.values == std::vector<double>{1.0});
    }
    CHECK_THROWS_WITH_AS(gaussian_weights({0.0}, {{1.0}}, 0.0), doctest::Contains("tau"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(gaussian_weights({0.0}, {{1.0, 2.0}}, 1.0),
                         doctest::Contains("dimension mismatch"), std::invalid_argument);
}

TEST_CASE("per-value weights") {
    const ConceptSchema schema({"a", "b"}, {2, 3});
    auto logits = [&](std::vector<double> b0, std::vector<double> b1) {
        return ConceptLogits(schema, {std::move(b0), std::move(b1)});
    };

    SUBCASE("constant bandwidths reduce to the gaussian kernel") {
        const double tau = 0.8;
        const auto q = logits({0.3, -0.2}, {1.0, 0.0, -1.0});
        const std::vector<ConceptLogits> bg = {logits({1, 0}, {0, 1, 0}),
                                               logits({-1, 2}, {0.5, 0.5, 0.5})};
        const auto pv = per_value_weights(q, bg, PerValueBandwidths::constant(schema, tau));
        std::vector<std::vector<double>> flat;
        for (const auto& l : bg) flat.push_back(l.concatenated());
        const auto gw = gaussian_weights(q.concatenated(), flat, tau);
        for (std::size_t k = 0; k < 2; ++k) CHECK(std::fabs(pv.values[k] - gw.values[k]) <= 1e-12);
    }
    SUBCASE("exact match dominates distant entries") {
        const auto q = logits({5, -5}, {2, 0, -2});
        const std::vector<ConceptLogits> bg = {logits({5, -5}, {2, 0, -2}),
                                               logits({-5, 5}, {-2, 0, 2})};
        const auto w = per_value_weights(q, bg, PerValueBandwidths::constant(schema, 0.5));
        CHECK(w.values[0] > 0.999);
    }
    SUBCASE("weighted squared distances (0, ln 3)") {
        // put all the distance into one coordinate with tau scaled to hit ln 3
        const double d = 1.3;
        PerValueBandwidths tau = PerValueBandwidths::constant(schema, 1.0);
        tau.tau[0][0] = d * d / std::log(3.0);
        const auto q = logits({0, 0}, {0, 0, 0});
        const std::vector<ConceptLogits> bg = {logits({0, 0}, {0, 0, 0}), logits({d, 0}, {0, 0, 0})};
        const auto w = per_value_weights(q, bg, tau);
        CHECK(w.values[0] == doctest::Approx(0.75));
        CHECK(w.values[1] == doctest::Approx(0.25));
    }
    SUBCASE("schema mismatch is an error") {
        const ConceptSchema other({"a", "b"}, {2, 4});
        const ConceptLogits q(other, {{0, 0}, {0, 0, 0, 0}});
        CHECK_THROWS_WITH_AS(
            per_value_weights(q, {logits({0, 0}, {0, 0, 0})}, PerValueBandwidths::constant(other, 1.0)),
            doctest::Contains("schema mismatch"), std::invalid_argument);
    }
}

TEST_CASE("expected event time by the rectangle rule") {
    CHECK(expected_event_time(StepSurvivalFunction({5}, {0})) == doctest::Approx(5.0));
    CHECK(expected_event_time(StepSurvivalFunction({2, 4}, {0.5, 0})) == doctest::Approx(3.0));
    CHECK(expected_event_time(StepSurvivalFunction({1, 7}, {1, 1})) == doctest::Approx(7.0));
    CHECK(expected_event_time(StepSurvivalFunction({}, {})) == 0.0);
}

TEST_CASE("concordance index") {
    const std::vector<EventSample> s3 = {{1, true}, {2, true}, {3, true}};
    CHECK(concordance_index({10, 20, 30}, s3) == doctest::Approx(1.0));
    CHECK(concordance_index({30, 20, 10}, s3) == doctest::Approx(0.0));

    const std::vector<EventSample> mixed = {{1, true}, {2, true}, {3, false}};
    CHECK(concordance_index({2, 1, 3}, mixed) == doctest::Approx(2.0 / 3));

    SUBCASE("invariant under strictly increasing transforms") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const auto samples = random_samples(15, 500 + seed);
            Rng rng(600 + seed);
            std::vector<double> pred(15);
            for (auto& p : pred) p = rng.uniform(0.0, 4.0);
            const double base = concordance_index(pred, samples);
            std::vector<double> warped(15);
            for (std::size_t i = 0; i < 15; ++i) warped[i] = std::exp(3.0 * pred[i]) + 1.0;
            CHECK(concordance_index(warped, samples) == doctest::Approx(base));
        }
    }
    SUBCASE("no comparable pairs") {
        CHECK_THROWS_WITH_AS(concordance_index({1, 2}, {{1, false}, {2, false}}),
                             doctest::Contains("no comparable pairs"), std::invalid_argument);
    }
}

TEST_CASE("estimators always produce valid survival functions") {
    std::size_t trials = 0;
    for (std::uint64_t seed = 0; seed < 350; ++seed) {
        const auto samples = random_samples(1 + seed % 30, 900 + seed, 0.5);
        check_valid_sf(kaplan_meier(samples));
        ++trials;

        check_valid_sf(sf_from_cumhazard(nelson_aalen(samples)));
        ++trials;

        Rng rng(1200 + seed);
        std::vector<double> raw(samples.size());
        double sum = 0.0;
        for (auto& w : raw) {
            w = rng.uniform(0.0, 1.0) + 1e-6;
            sum += w;
        }
        for (auto& w : raw) w /= sum;
        check_valid_sf(beran_survival({raw}, samples));
        ++trials;
    }
    CHECK(trials >= 1000);
}

TEST_CASE("nelson-aalen survival dominates the product-limit estimate") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const auto samples = random_samples(3 + seed % 25, 1500 + seed, 0.3);
        const auto km = kaplan_meier(samples);
        const auto na = sf_from_cumhazard(nelson_aalen(samples));
        for (double t : km.knots()) CHECK(na.value_at(t) >= km.value_at(t) - 1e-12);
    }
}

TEST_CASE("kernel weights sum to 1 and are permutation-equivariant") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        Rng rng(1700 + seed);
        const std::size_t n = 2 + seed % 8, d = 3;
        std::vector<double> q(d);
        for (auto& v : q) v = rng.uniform(-1, 1);
        std::vector<std::vector<double>> bg(n, std::vector<double>(d));
        for (auto& row : bg)
            for (auto& v : row) v = rng.uniform(-1, 1);

        const auto w = gaussian_weights(q, bg, 0.7);
        double sum = 0.0;
        for (double v : w.values) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(std::fabs(sum - 1.0) < 1e-9);

        std::vector<std::size_t> perm(n);
        for (std::size_t i = 0; i < n; ++i) perm[i] = (i + 1) % n;
        std::vector<std::vector<double>> bg2(n);
        for (std::size_t i = 0; i < n; ++i) bg2[i] = bg[perm[i]];
        const auto w2 = gaussian_weights(q, bg2, 0.7);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(w2.values[i] == doctest::Approx(w.values[perm[i]]).epsilon(1e-12));
    }
}
