#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "locallearn/clustering.hpp"
#include "locallearn/common.hpp"
#include "locallearn/dataset.hpp"
#include "locallearn/kernel.hpp"

namespace locallearn {

// Binary kernel SVM in dual form. alphas covers the whole training set; the
// support_* arrays keep only the expansion actually used by decisions
// (alpha > 0), with support_index mapping back to training positions.
struct SvmModel {
    KernelSpec kernel;
    double bias = 0.0;
    double box_c = std::numeric_limits<double>::infinity();
    std::vector<double> alphas;
    Matrix support_x;
    std::vector<int> support_y;
    std::vector<double> support_alpha;
    std::vector<std::size_t> support_index;
};

// Compressed model: one coefficient per cluster centroid,
//   beta_j = sum_{i in cluster j} y_i alpha_i.
// A prediction costs exactly k kernel evaluations.
struct SemiSvmModel {
    KernelSpec kernel;
    double bias = 0.0;
    Matrix centroids;
    std::vector<double> betas;
    std::string provenance;
};

struct Decision {
    int sign = 1;  // sgn(0) = +1
    double margin = 0.0;
};

// Thrown when SMO exhausts max_passes; carries the best model so far
// (best for train_smo, best_semi for train_semi) and the worst remaining
// KKT violation.
struct SmoConvergenceError : ConvergenceError {
    SmoConvergenceError(const std::string& what, SvmModel best_so_far, double violation)
        : ConvergenceError(what), best(std::move(best_so_far)), max_kkt_violation(violation) {}
    SvmModel best;
    SemiSvmModel best_semi;
    double max_kkt_violation = 0.0;
};

// W(a) = sum_i a_i - 1/2 sum_{i,j} a_i a_j y_i y_j k(x_i, x_j)
double dual_objective(const std::vector<double>& alphas, const Dataset& ds, KernelSpec kernel);

struct SmoOptions {
    double box_c = std::numeric_limits<double>::infinity();
    double tol = 1e-3;
    int max_passes = 1000;
    std::uint64_t seed = 0;
    // Observer called after every accepted pairwise update (test hook).
    std::function<void(const std::vector<double>&)> on_update;
};

SvmModel train_smo(const Dataset& ds, KernelSpec kernel, const SmoOptions& opts = {});
SvmModel train_smo(const Dataset& ds, KernelSpec kernel, double box_c, double tol, int max_passes,
                   std::uint64_t seed);

Decision decision(const SvmModel& model, VecView x);
Decision decision(const SemiSvmModel& model, VecView x);

// Aggregates a trained full model onto cluster centroids. The assignment
// must index the model's training set (alphas), one cluster per sample.
SemiSvmModel semiparameterize(const SvmModel& model, const Matrix& centroids,
                              const std::vector<int>& assignment);
SemiSvmModel semiparameterize(const SvmModel& model, const ClusterModel& clusters);

// Trains the compressed dual: every Gram entry k(x_i, x_j) is replaced by
// k(c_assign(i), c_assign(j)), served from a k x k cache built with exactly
// k(k+1)/2 kernel evaluations.
SemiSvmModel train_semi(const Dataset& ds, const Matrix& centroids, const std::vector<int>& assignment,
                        KernelSpec kernel, const SmoOptions& opts = {});
SemiSvmModel train_semi(const Dataset& ds, const ClusterModel& clusters, KernelSpec kernel,
                        const SmoOptions& opts = {});

std::string svm_model_to_json(const SvmModel& model);
// Loaded models serve decisions; alphas/support_index are reconstructed
// from the support list alone, so re-aggregation needs the original run.
SvmModel svm_model_from_json(const std::string& text);
std::string semi_svm_model_to_json(const SemiSvmModel& model);
SemiSvmModel semi_svm_model_from_json(const std::string& text);

}  // namespace locallearn
