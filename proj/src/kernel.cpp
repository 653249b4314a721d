#include "locallearn/kernel.hpp"

#include <algorithm>
#include <vector>

namespace locallearn {

double median_heuristic_sigma(const Dataset& ds) {
    ds.validate();
    const std::size_t cap = std::min<std::size_t>(ds.size(), 1000);
    std::vector<double> dists;
    dists.reserve(cap * (cap - 1) / 2);
    for (std::size_t i = 0; i < cap; ++i)
        for (std::size_t j = i + 1; j < cap; ++j)
            dists.push_back(euclidean_distance(ds.samples[i].features, ds.samples[j].features));
    if (dists.empty()) return 1.0;
    const std::size_t mid = dists.size() / 2;
    std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid), dists.end());
    const double median = dists[mid];
    return median > 0.0 ? median : 1.0;
}

}  // namespace locallearn
