#include "locallearn/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace locallearn {

HypothesisSpace HypothesisSpace::with_weights(std::vector<Stump> stumps, std::vector<double> weights) {
    require(!stumps.empty(), "hypothesis space: must be non-empty");
    require(stumps.size() == weights.size(), "hypothesis space: one weight per stump");
    double total = 0.0;
    for (double w : weights) {
        require(w >= 0.0 && std::isfinite(w), "hypothesis space: weights must be non-negative");
        total += w;
    }
    require(total > 0.0, "hypothesis space: weights must not all be zero");
    for (double& w : weights) w /= total;
    return {std::move(stumps), std::move(weights)};
}

double likelihood(const Stump& h, const Dataset& t, double noise_eps) {
    require(!t.samples.empty(), "likelihood: empty training set");
    require(noise_eps > 0.0 && noise_eps < 0.5, "likelihood: need 0 < noise_eps < 0.5");
    double p = 1.0;
    for (const Sample& s : t.samples) p *= h.predict(s.features) == s.label ? (1.0 - noise_eps) : noise_eps;
    return p;
}

PosteriorTable posterior_table(const HypothesisSpace& space, const Dataset& t, double noise_eps) {
    PosteriorTable table;
    table.weighted_likelihood.reserve(space.hypotheses.size());
    for (std::size_t h = 0; h < space.hypotheses.size(); ++h)
        table.weighted_likelihood.push_back(likelihood(space.hypotheses[h], t, noise_eps) * space.priors[h]);
    table.normalization = 0.0;
    for (double v : table.weighted_likelihood) table.normalization += v;
    return table;
}

std::vector<double> PosteriorTable::normalized() const {
    std::vector<double> out = weighted_likelihood;
    if (normalization > 0.0)
        for (double& v : out) v /= normalization;
    return out;
}

int bayes_predict(const HypothesisSpace& space, const Dataset& t, VecView x, const std::vector<int>& classes,
                  double noise_eps) {
    require(!space.hypotheses.empty(), "bayes_predict: empty hypothesis space");
    require(!classes.empty(), "bayes_predict: empty class list");
    const PosteriorTable table = posterior_table(space, t, noise_eps);

    std::vector<double> score(classes.size(), 0.0);
    for (std::size_t h = 0; h < space.hypotheses.size(); ++h) {
        const int pred = space.hypotheses[h].predict(x);
        for (std::size_t c = 0; c < classes.size(); ++c)
            if (classes[c] == pred) score[c] += table.weighted_likelihood[h];
    }
    // Scores within a relative band of the top count as tied and resolve to
    // the lowest class id, so the answer does not depend on whether the
    // caller normalized the posterior.
    double top = score[0];
    for (double s : score) top = std::max(top, s);
    const double band = 1e-9 * std::max(top, 1e-300);
    int best_id = std::numeric_limits<int>::max();
    for (std::size_t c = 0; c < classes.size(); ++c)
        if (score[c] >= top - band) best_id = std::min(best_id, classes[c]);
    return best_id;
}

HypothesisSpace enumerate_stumps(const Dataset& ds, int thresholds_per_feature) {
    ds.validate();
    require(thresholds_per_feature >= 1, "enumerate_stumps: thresholds_per_feature must be >= 1");

    std::vector<Stump> stumps;
    for (int f = 0; f < ds.dimension; ++f) {
        std::set<double> distinct;
        for (const Sample& s : ds.samples) distinct.insert(s.features[static_cast<std::size_t>(f)]);
        if (distinct.size() < 2) continue;  // constant feature

        std::vector<double> sorted(distinct.begin(), distinct.end());
        std::vector<double> midpoints;
        for (std::size_t i = 0; i + 1 < sorted.size(); ++i)
            midpoints.push_back(0.5 * (sorted[i] + sorted[i + 1]));

        const std::size_t cap = static_cast<std::size_t>(thresholds_per_feature);
        std::vector<double> chosen;
        if (midpoints.size() <= cap) {
            chosen = midpoints;
        } else {
            for (std::size_t t = 0; t < cap; ++t)  // centered stride over the midpoints
                chosen.push_back(midpoints[(2 * t + 1) * midpoints.size() / (2 * cap)]);
        }
        for (double threshold : chosen) {
            stumps.push_back({f, threshold, 1});
            stumps.push_back({f, threshold, -1});
        }
    }
    require(!stumps.empty(), "enumerate_stumps: all features constant");
    std::vector<double> uniform(stumps.size(), 1.0);
    return HypothesisSpace::with_weights(std::move(stumps), std::move(uniform));
}

}  // namespace locallearn
