#pragma once

#include <atomic>
#include <cstdint>

#include "locallearn/common.hpp"
#include "locallearn/dataset.hpp"

namespace locallearn {

// Spherical Gaussian kernel smoothing parameter.
struct KernelSpec {
    double sigma = 1.0;
};

namespace detail {
inline std::atomic<std::uint64_t> g_kernel_evals{0};
}

// Number of Gaussian kernel applications since the last reset. This is the
// project's efficiency metric; counting never changes numeric results.
inline std::uint64_t kernel_eval_count() { return detail::g_kernel_evals.load(std::memory_order_relaxed); }
inline void reset_kernel_eval_count() { detail::g_kernel_evals.store(0, std::memory_order_relaxed); }

// exp(-||x - y||^2 / (2 sigma^2)), in (0, 1], equal to 1 iff x == y.
inline double gaussian_kernel(VecView x, VecView y, const KernelSpec& spec) {
    require(spec.sigma > 0.0, "gaussian_kernel: sigma must be positive");
    const double d2 = squared_distance(x, y);
    detail::g_kernel_evals.fetch_add(1, std::memory_order_relaxed);
    return std::exp(-d2 / (2.0 * spec.sigma * spec.sigma));
}

// Median pairwise distance over at most the first 1000 samples; falls back
// to 1.0 when the median degenerates to zero.
double median_heuristic_sigma(const Dataset& ds);

}  // namespace locallearn
