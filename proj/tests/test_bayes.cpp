#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "locallearn/bayes.hpp"
#include "locallearn/rng.hpp"

using namespace locallearn;

namespace {

Dataset tiny(std::initializer_list<std::pair<std::vector<double>, int>> rows) {
    std::vector<Sample> samples;
    for (const auto& [f, y] : rows) samples.push_back({f, y});
    return make_dataset(std::move(samples));
}

Dataset random_binary(Rng& rng, std::size_t n, int d) {
    std::vector<Sample> samples;
    for (std::size_t i = 0; i < n; ++i) {
        Sample s;
        for (int j = 0; j < d; ++j) s.features.push_back(rng.uniform(-2.0, 2.0));
        s.label = rng.uniform() < 0.5 ? -1 : 1;
        samples.push_back(std::move(s));
    }
    samples[0].label = -1;  // both classes always present
    samples[1].label = 1;
    return make_dataset(std::move(samples));
}

// Brute-force weighted vote, written independently: normalized posterior,
// explicit per-class accumulation. Near-ties (relative 1e-9) resolve to the
// lowest class id, matching the documented prediction rule.
int vote_oracle(const HypothesisSpace& space, const Dataset& t, VecView x, const std::vector<int>& classes,
                double eps) {
    std::vector<double> post;
    double z = 0.0;
    for (std::size_t h = 0; h < space.hypotheses.size(); ++h) {
        double lik = 1.0;
        for (const Sample& s : t.samples) {
            const bool correct = space.hypotheses[h].predict(s.features) == s.label;
            lik *= correct ? 1.0 - eps : eps;
        }
        post.push_back(lik * space.priors[h]);
        z += post.back();
    }
    for (double& p : post) p /= z;

    std::vector<double> score;
    for (int c : classes) {
        double s = 0.0;
        for (std::size_t h = 0; h < space.hypotheses.size(); ++h)
            if (space.hypotheses[h].predict(x) == c) s += post[h];
        score.push_back(s);
    }
    double top = score.front();
    for (double s : score) top = std::max(top, s);
    int best_class = std::numeric_limits<int>::max();
    for (std::size_t c = 0; c < classes.size(); ++c)
        if (score[c] >= top - 1e-9 * top) best_class = std::min(best_class, classes[c]);
    return best_class;
}

}  // namespace

TEST_CASE("likelihood analytic cases") {
    const Dataset t = tiny({{{0.0}, 1}, {{1.0}, 1}, {{2.0}, -1}});
    const double eps = 0.1;
    const Stump all_plus{0, -10.0, 1};  // predicts +1 everywhere
    CHECK(likelihood(all_plus, t, eps) == doctest::Approx((1 - eps) * (1 - eps) * eps));
    const Stump all_minus{0, -10.0, -1};  // predicts -1 everywhere
    CHECK(likelihood(all_minus, t, eps) == doctest::Approx(eps * eps * (1 - eps)));

    const Dataset perfect = tiny({{{0.0}, -1}, {{2.0}, 1}});
    const Stump split{0, 1.0, 1};
    CHECK(likelihood(split, perfect, eps) == doctest::Approx((1 - eps) * (1 - eps)));
    const Stump inverted{0, 1.0, -1};
    CHECK(likelihood(inverted, perfect, eps) == doctest::Approx(eps * eps));
    CHECK_THROWS_AS(likelihood(split, perfect, 0.0), ContractViolation);
    CHECK_THROWS_AS(likelihood(split, perfect, 0.5), ContractViolation);
}

TEST_CASE("bayes_predict unanimous and tied votes") {
    const Dataset t = tiny({{{0.0}, -1}, {{2.0}, 1}});
    const std::vector<int> classes{-1, 1};

    // Both stumps predict +1 at x = 5 regardless of their training fit.
    const auto unanimous = HypothesisSpace::with_weights({Stump{0, 1.0, 1}, Stump{0, 4.0, 1}}, {1.0, 1.0});
    const std::vector<double> x{5.0};
    CHECK(bayes_predict(unanimous, t, x, classes) == 1);

    // Two stumps with equal priors and equal likelihoods, opposite votes.
    const Dataset balanced = tiny({{{0.0}, -1}, {{2.0}, 1}, {{4.0}, -1}, {{6.0}, 1}});
    const auto tied = HypothesisSpace::with_weights({Stump{0, 3.0, 1}, Stump{0, 3.0, -1}}, {1.0, 1.0});
    CHECK(likelihood(tied.hypotheses[0], balanced, 0.1) ==
          doctest::Approx(likelihood(tied.hypotheses[1], balanced, 0.1)));
    CHECK(bayes_predict(tied, balanced, std::vector<double>{10.0}, classes) == -1);
}

TEST_CASE("bayes_predict matches the brute-force vote oracle") {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const Dataset t = random_binary(rng, 4 + rng.below(5), 2);
        const auto space = enumerate_stumps(t, 2);  // at most 2*2*2 = 8 stumps... plus polarity
        REQUIRE(space.hypotheses.size() <= 20);
        for (int probe = 0; probe < 10; ++probe) {
            const std::vector<double> x{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
            CHECK(bayes_predict(space, t, x, t.class_ids, 0.1) == vote_oracle(space, t, x, t.class_ids, 0.1));
        }
    }
}

TEST_CASE("prior rescaling never changes a prediction") {
    Rng rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        const Dataset t = random_binary(rng, 6, 2);
        std::vector<Stump> stumps;
        std::vector<double> weights;
        for (int s = 0; s < 6; ++s) {
            stumps.push_back({static_cast<int>(rng.below(2)), rng.uniform(-2.0, 2.0),
                              rng.uniform() < 0.5 ? 1 : -1});
            weights.push_back(rng.uniform(0.1, 2.0));
        }
        const auto base = HypothesisSpace::with_weights(stumps, weights);
        std::vector<double> scaled = weights;
        for (double& w : scaled) w *= 37.5;
        const auto rescaled = HypothesisSpace::with_weights(stumps, scaled);
        for (int probe = 0; probe < 10; ++probe) {
            const std::vector<double> x{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
            CHECK(bayes_predict(base, t, x, t.class_ids) == bayes_predict(rescaled, t, x, t.class_ids));
        }
    }
}

TEST_CASE("a single hypothesis dictates every prediction") {
    const Dataset t = tiny({{{0.0}, -1}, {{2.0}, 1}});
    const Stump lone{0, 1.0, 1};
    const auto space = HypothesisSpace::with_weights({lone}, {1.0});
    Rng rng(29);
    for (int probe = 0; probe < 20; ++probe) {
        const std::vector<double> x{rng.uniform(-4.0, 4.0)};
        CHECK(bayes_predict(space, t, x, t.class_ids) == lone.predict(x));
    }
}

TEST_CASE("with vanishing noise the true stump dominates on training points") {
    const Dataset t = tiny(
        {{{0.0}, -1}, {{0.5}, -1}, {{1.0}, -1}, {{2.0}, 1}, {{2.5}, 1}, {{3.0}, 1}});
    const auto space = enumerate_stumps(t, 8);
    // The space contains a stump splitting at 1.5 that labels T perfectly.
    for (const Sample& s : t.samples) {
        CHECK(bayes_predict(space, t, s.features, t.class_ids, 1e-3) == s.label);
        CHECK(bayes_predict(space, t, s.features, t.class_ids, 1e-3) ==
              vote_oracle(space, t, s.features, t.class_ids, 1e-3));
    }
}

TEST_CASE("enumerate_stumps counting") {
    const Dataset two_values = tiny({{{0.0}, -1}, {{1.0}, 1}});
    const auto space = enumerate_stumps(two_values, 4);
    CHECK(space.hypotheses.size() == 2);  // one midpoint, two polarities
    double prior_sum = 0.0;
    for (double p : space.priors) prior_sum += p;
    CHECK(prior_sum == doctest::Approx(1.0).epsilon(1e-12));

    // 2 features x 3 thresholds x 2 polarities = 12.
    const Dataset rich = tiny({{{0.0, 10.0}, -1},
                               {{1.0, 20.0}, 1},
                               {{2.0, 30.0}, -1},
                               {{3.0, 40.0}, 1}});
    CHECK(enumerate_stumps(rich, 3).hypotheses.size() == 12);

    // A constant feature contributes no stumps.
    const Dataset constant = tiny({{{5.0, 0.0}, -1}, {{5.0, 1.0}, 1}});
    CHECK(enumerate_stumps(constant, 3).hypotheses.size() == 2);

    CHECK_THROWS_AS(enumerate_stumps(two_values, 0), ContractViolation);
    const Dataset all_const = tiny({{{1.0}, -1}, {{1.0}, 1}});
    CHECK_THROWS_AS(enumerate_stumps(all_const, 3), ContractViolation);
}

TEST_CASE("posterior table normalizes") {
    Rng rng(31);
    const Dataset t = random_binary(rng, 6, 1);
    const auto space = enumerate_stumps(t, 3);
    const auto table = posterior_table(space, t, 0.2);
    CHECK(table.weighted_likelihood.size() == space.hypotheses.size());
    for (double v : table.weighted_likelihood) CHECK(v >= 0.0);
    const auto norm = table.normalized();
    double sum = 0.0;
    for (double v : norm) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}
