#pragma once

#include <string>
#include <vector>

#include "locallearn/common.hpp"
#include "locallearn/dataset.hpp"

namespace locallearn {

// Decision stump over one feature: predicts `polarity` when the feature is
// at or above the threshold, -polarity below it.
struct Stump {
    int feature = 0;
    double threshold = 0.0;
    int polarity = 1;  // +1 or -1

    int predict(VecView x) const { return x[static_cast<std::size_t>(feature)] >= threshold ? polarity : -polarity; }
};

// Finite hypothesis space with a prior per stump. Constructors normalize
// the supplied weights so the priors sum to one.
struct HypothesisSpace {
    std::vector<Stump> hypotheses;
    std::vector<double> priors;

    static HypothesisSpace with_weights(std::vector<Stump> stumps, std::vector<double> weights);
};

struct PosteriorTable {
    std::vector<double> weighted_likelihood;  // P(T|h_i) * P(h_i)
    double normalization = 0.0;

    std::vector<double> normalized() const;
};

// P(T|h) = prod_i [(1 - eps) if h(x_i) = y_i else eps]
double likelihood(const Stump& h, const Dataset& t, double noise_eps);

PosteriorTable posterior_table(const HypothesisSpace& space, const Dataset& t, double noise_eps);

// argmax_c sum_h [h(x) = c] * P(T|h) * P(h); ties to the lowest class id.
int bayes_predict(const HypothesisSpace& space, const Dataset& t, VecView x, const std::vector<int>& classes,
                  double noise_eps = 0.1);

// Stumps at midpoints between sorted distinct feature values (at most
// thresholds_per_feature per feature, evenly strided), both polarities,
// uniform priors. A constant feature contributes no stumps.
HypothesisSpace enumerate_stumps(const Dataset& ds, int thresholds_per_feature);

}  // namespace locallearn
