#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "locallearn/common.hpp"

namespace locallearn {

// Class-balanced k-means. Alternating minimization of
//   sum_j sum_i Z_ij ||X_i - C_j||^2  +  R * sum_j |sum_i Z_ij y_i|
// where the membership subproblem is the LP relaxation with one slack t_j
// per cluster bounding the column skew.
struct ClusterModel {
    Matrix centroids;             // k x d
    Matrix membership;            // n x k, final integral assignment
    std::vector<int> assignment;  // cluster index per sample
    double scaling = 0.0;         // R
    std::vector<double> slacks;   // t_j = |column skew| of the final assignment
    std::vector<double> objective_trace;

    std::size_t k() const { return centroids.rows(); }
};

double cluster_objective(const Matrix& x, const std::vector<int>& y, const Matrix& z, const Matrix& c,
                         double r);

struct MembershipSolution {
    Matrix membership;  // n x k, entries in [0,1], each row sums to 1
    std::vector<double> slacks;
    double objective = 0.0;  // cohesion + R * sum(t)
};

// Thrown when the membership solver hits its pivot cap; carries the best
// feasible solution found.
struct MembershipConvergenceError : ConvergenceError {
    MembershipConvergenceError(const std::string& what, MembershipSolution best_so_far)
        : ConvergenceError(what), best(std::move(best_so_far)) {}
    MembershipSolution best;
};

// Exact simplex solve of the membership LP while n*k stays small enough;
// iterated conditional modes (single-row moves, strict decrease only) above
// that. warm_start, when given, seeds the solver with a starting assignment.
MembershipSolution solve_membership(const Matrix& x, const std::vector<int>& y, const Matrix& c, double r,
                                    const std::vector<int>* warm_start = nullptr);

// Z-weighted column means; empty columns are re-seeded at the point
// farthest from its nearest centroid.
Matrix update_centroids(const Matrix& x, const Matrix& z);

ClusterModel fit_clusters(const Matrix& x, const std::vector<int>& y, int k, double r, int max_iter = 300,
                          double tol = 1e-8, std::uint64_t seed = 0);

// Same alternation but from explicit starting centroids.
ClusterModel fit_clusters_from(const Matrix& x, const std::vector<int>& y, Matrix initial_centroids,
                               double r, int max_iter = 300, double tol = 1e-8);

// Serialized as { "k", "r", "centroids", "assignment", "objective_trace" };
// membership and slacks are rebuilt from the assignment on load.
std::string cluster_model_to_json(const ClusterModel& model);
ClusterModel cluster_model_from_json(const std::string& text);

}  // namespace locallearn
