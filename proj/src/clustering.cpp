#include "locallearn/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "locallearn/dataset.hpp"
#include "locallearn/rng.hpp"
#include "locallearn/simplex.hpp"

namespace locallearn {

namespace {

constexpr std::size_t kLpVariableCap = 20000;  // n*k above this switches to ICM
constexpr double kIcmMinGain = 1e-12;

void check_binary_labels(const std::vector<int>& y) {
    for (int v : y) require(v == -1 || v == 1, "clustering: labels must be -1 or +1");
}

// n x k squared Euclidean distances.
Matrix distance_sq_matrix(const Matrix& x, const Matrix& c) {
    Matrix d(x.rows(), c.rows());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < c.rows(); ++j) d(i, j) = squared_distance(x.row(i), c.row(j));
    return d;
}

std::vector<int> nearest_rows(const Matrix& d) {
    std::vector<int> assign(d.rows());
    for (std::size_t i = 0; i < d.rows(); ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < d.cols(); ++j)
            if (d(i, j) < d(i, best)) best = j;  // ties keep the lowest index
        assign[i] = static_cast<int>(best);
    }
    return assign;
}

MembershipSolution from_assignment(const Matrix& d, const std::vector<int>& y, double r,
                                   const std::vector<int>& assign) {
    const std::size_t n = d.rows();
    const std::size_t k = d.cols();
    MembershipSolution sol;
    sol.membership = Matrix(n, k);
    sol.slacks.assign(k, 0.0);
    std::vector<double> skew(k, 0.0);
    double cohesion = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto j = static_cast<std::size_t>(assign[i]);
        sol.membership(i, j) = 1.0;
        cohesion += d(i, j);
        skew[j] += y[i];
    }
    double penalty = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        sol.slacks[j] = std::abs(skew[j]);
        penalty += sol.slacks[j];
    }
    sol.objective = cohesion + r * penalty;
    return sol;
}

// Iterated conditional modes: single-row reassignments, accepted only on a
// strict objective decrease, swept until a full pass changes nothing.
MembershipSolution solve_membership_icm(const Matrix& d, const std::vector<int>& y, double r,
                                        std::vector<int> assign) {
    const std::size_t n = d.rows();
    const std::size_t k = d.cols();
    std::vector<double> skew(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) skew[static_cast<std::size_t>(assign[i])] += y[i];

    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            const auto cur = static_cast<std::size_t>(assign[i]);
            const double yi = y[i];
            double best_gain = -kIcmMinGain;
            std::size_t best_j = cur;
            const double leave = r * (std::abs(skew[cur] - yi) - std::abs(skew[cur]));
            for (std::size_t j = 0; j < k; ++j) {
                if (j == cur) continue;
                const double gain =
                    d(i, j) - d(i, cur) + leave + r * (std::abs(skew[j] + yi) - std::abs(skew[j]));
                if (gain < best_gain) {
                    best_gain = gain;
                    best_j = j;
                }
            }
            if (best_j != cur) {
                skew[cur] -= yi;
                skew[best_j] += yi;
                assign[i] = static_cast<int>(best_j);
                changed = true;
            }
        }
    }
    return from_assignment(d, y, r, assign);
}

// Exact LP solve via a warm-started simplex tableau. The starting basis is
// {Z_{i,sigma(i)}} + {t_j in one skew row} + {the other skew slack}, which is
// feasible by construction, so no phase-1 artificials are needed.
MembershipSolution solve_membership_lp(const Matrix& d, const std::vector<int>& y, double r,
                                       const std::vector<int>& sigma) {
    const std::size_t n = d.rows();
    const std::size_t k = d.cols();
    const std::size_t nz = n * k;
    const std::size_t col_t = nz;            // t_j -> nz + j
    const std::size_t col_sa = nz + k;       // slack of  sum_i y_i Z_ij - t_j <= 0
    const std::size_t col_sb = nz + 2 * k;   // slack of -sum_i y_i Z_ij - t_j <= 0
    const std::size_t n_vars = nz + 3 * k;
    const std::size_t m = n + 2 * k;

    Matrix tab(m, n_vars + 1);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < k; ++j) tab(i, i * k + j) = 1.0;
        tab(i, n_vars) = 1.0;
    }
    for (std::size_t j = 0; j < k; ++j) {
        const std::size_t ra = n + 2 * j;
        const std::size_t rb = ra + 1;
        for (std::size_t i = 0; i < n; ++i) {
            tab(ra, i * k + j) = static_cast<double>(y[i]);
            tab(rb, i * k + j) = -static_cast<double>(y[i]);
        }
        tab(ra, col_t + j) = -1.0;
        tab(rb, col_t + j) = -1.0;
        tab(ra, col_sa + j) = 1.0;
        tab(rb, col_sb + j) = 1.0;
    }

    // Reduce the warm-start columns to unit form. Assignment pivots first:
    // eliminate Z_{i,sigma(i)} from the two skew rows of its cluster.
    std::vector<int> basis(m, -1);
    std::vector<double> skew(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto j = static_cast<std::size_t>(sigma[i]);
        const std::size_t ra = n + 2 * j;
        const std::size_t rb = ra + 1;
        const double yi = y[i];
        double* eq = tab.row(i).data();
        double* a = tab.row(ra).data();
        double* b = tab.row(rb).data();
        for (std::size_t t = 0; t <= n_vars; ++t) {
            a[t] -= yi * eq[t];
            b[t] += yi * eq[t];
        }
        basis[i] = static_cast<int>(i * k + j);
        skew[j] += yi;
    }
    // t_j pivots: into the skew row whose RHS matches the sign of s_j.
    for (std::size_t j = 0; j < k; ++j) {
        const std::size_t ra = n + 2 * j;
        const std::size_t rb = ra + 1;
        const std::size_t own = skew[j] >= 0.0 ? ra : rb;
        const std::size_t other = skew[j] >= 0.0 ? rb : ra;
        double* po = tab.row(own).data();
        for (std::size_t t = 0; t <= n_vars; ++t) po[t] = -po[t];  // t_j coefficient was -1
        double* pt = tab.row(other).data();
        for (std::size_t t = 0; t <= n_vars; ++t) pt[t] += po[t];
        basis[own] = static_cast<int>(col_t + j);
        basis[other] = static_cast<int>(skew[j] >= 0.0 ? col_sb + j : col_sa + j);
    }

    std::vector<double> cost(n_vars, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) cost[i * k + j] = d(i, j);
    for (std::size_t j = 0; j < k; ++j) cost[col_t + j] = r;

    SimplexTableau simplex(std::move(tab), cost, std::move(basis));
    const LpStatus status = simplex.optimize();

    const auto extract = [&] {
        MembershipSolution sol;
        sol.membership = Matrix(n, k);
        sol.slacks.assign(k, 0.0);
        const std::vector<double> x = simplex.solution();
        double cohesion = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < k; ++j) {
                const double zij = std::clamp(x[i * k + j], 0.0, 1.0);
                sol.membership(i, j) = zij;
                cohesion += zij * d(i, j);
            }
        double penalty = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            sol.slacks[j] = std::max(x[col_t + j], 0.0);
            penalty += sol.slacks[j];
        }
        sol.objective = cohesion + r * penalty;
        return sol;
    };

    if (status == LpStatus::iteration_limit)
        throw MembershipConvergenceError("solve_membership: simplex pivot cap exceeded", extract());
    require(status == LpStatus::optimal, "solve_membership: unexpected LP status");
    return extract();
}

}  // namespace

double cluster_objective(const Matrix& x, const std::vector<int>& y, const Matrix& z, const Matrix& c,
                         double r) {
    const std::size_t n = x.rows();
    const std::size_t k = c.rows();
    require(z.rows() == n && z.cols() == k, "cluster_objective: membership shape mismatch");
    require(y.size() == n, "cluster_objective: label count mismatch");
    require(x.cols() == c.cols(), "cluster_objective: centroid dimension mismatch");
    require(std::isfinite(r) && r >= 0.0, "cluster_objective: R must be finite and non-negative");
    require(x.all_finite() && z.all_finite() && c.all_finite(), "cluster_objective: non-finite input");

    double cohesion = 0.0;
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t i = 0; i < n; ++i) cohesion += z(i, j) * squared_distance(x.row(i), c.row(j));
    double penalty = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        double skew = 0.0;
        for (std::size_t i = 0; i < n; ++i) skew += z(i, j) * y[i];
        penalty += std::abs(skew);
    }
    return cohesion + r * penalty;
}

MembershipSolution solve_membership(const Matrix& x, const std::vector<int>& y, const Matrix& c, double r,
                                    const std::vector<int>* warm_start) {
    const std::size_t n = x.rows();
    const std::size_t k = c.rows();
    require(n > 0 && k > 0, "solve_membership: empty input");
    require(y.size() == n, "solve_membership: label count mismatch");
    require(x.cols() == c.cols(), "solve_membership: centroid dimension mismatch");
    require(std::isfinite(r) && r >= 0.0, "solve_membership: R must be finite and non-negative");
    check_binary_labels(y);

    const Matrix d = distance_sq_matrix(x, c);
    const std::vector<int> start = warm_start ? *warm_start : nearest_rows(d);
    require(start.size() == n, "solve_membership: warm start size mismatch");
    for (int a : start)
        require(a >= 0 && static_cast<std::size_t>(a) < k, "solve_membership: warm start index out of range");

    if (r == 0.0) return from_assignment(d, y, r, nearest_rows(d));
    if (n * k > kLpVariableCap) return solve_membership_icm(d, y, r, start);
    return solve_membership_lp(d, y, r, start);
}

Matrix update_centroids(const Matrix& x, const Matrix& z) {
    const std::size_t n = x.rows();
    const std::size_t dim = x.cols();
    const std::size_t k = z.cols();
    require(z.rows() == n, "update_centroids: membership row count mismatch");

    Matrix c(k, dim);
    std::vector<double> mass(k, 0.0);
    std::vector<std::size_t> empty;
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            const double w = z(i, j);
            mass[j] += w;
            const auto xi = x.row(i);
            for (std::size_t t = 0; t < dim; ++t) c(j, t) += w * xi[t];
        }
        if (mass[j] > 1e-12) {
            for (std::size_t t = 0; t < dim; ++t) c(j, t) /= mass[j];
        } else {
            empty.push_back(j);
        }
    }

    // Re-seed each empty cluster at the point farthest from its nearest
    // live centroid; the moved centroid carries no mass, so the objective
    // is unchanged by this.
    std::vector<bool> live(k, true);
    for (std::size_t j : empty) live[j] = false;
    for (std::size_t j : empty) {
        std::size_t winner = 0;
        double winner_dist = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            double nearest = std::numeric_limits<double>::infinity();
            for (std::size_t l = 0; l < k; ++l)
                if (live[l]) nearest = std::min(nearest, squared_distance(x.row(i), c.row(l)));
            if (nearest > winner_dist) {
                winner_dist = nearest;
                winner = i;
            }
        }
        std::copy(x.row(winner).begin(), x.row(winner).end(), c.row(j).begin());
        live[j] = true;
    }
    return c;
}

namespace {

std::vector<int> round_membership(const Matrix& z) {
    std::vector<int> assign(z.rows());
    for (std::size_t i = 0; i < z.rows(); ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < z.cols(); ++j)
            if (z(i, j) > z(i, best)) best = j;  // ties keep the lowest index
        assign[i] = static_cast<int>(best);
    }
    return assign;
}

}  // namespace

ClusterModel fit_clusters_from(const Matrix& x, const std::vector<int>& y, Matrix initial_centroids,
                               double r, int max_iter, double tol) {
    const std::size_t n = x.rows();
    const std::size_t k = initial_centroids.rows();
    require(k >= 1 && k <= n, "fit_clusters: need 1 <= k <= n");
    require(tol > 0.0, "fit_clusters: tol must be positive");
    require(max_iter >= 1, "fit_clusters: max_iter must be positive");
    require(initial_centroids.cols() == x.cols(), "fit_clusters: centroid dimension mismatch");
    check_binary_labels(y);
    require(y.size() == n, "fit_clusters: label count mismatch");
    require(x.all_finite() && initial_centroids.all_finite(), "fit_clusters: non-finite input");

    Matrix c = std::move(initial_centroids);
    ClusterModel model;
    model.scaling = r;

    std::vector<int> warm;
    double prev = std::numeric_limits<double>::infinity();
    Matrix z;
    for (int iter = 0; iter < max_iter; ++iter) {
        MembershipSolution sol = solve_membership(x, y, c, r, warm.empty() ? nullptr : &warm);
        z = std::move(sol.membership);
        c = update_centroids(x, z);
        const double obj = cluster_objective(x, y, z, c, r);
        model.objective_trace.push_back(obj);
        warm = round_membership(z);
        if (iter > 0 && prev - obj <= tol * std::max(1.0, std::abs(prev))) break;
        prev = obj;
    }

    // Harden the relaxed membership into a 0/1 assignment and refresh the
    // centroids once from it.
    model.assignment = round_membership(z);
    model.membership = Matrix(n, k);
    for (std::size_t i = 0; i < n; ++i) model.membership(i, static_cast<std::size_t>(model.assignment[i])) = 1.0;
    model.centroids = update_centroids(x, model.membership);
    model.slacks.assign(k, 0.0);
    std::vector<double> skew(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) skew[static_cast<std::size_t>(model.assignment[i])] += y[i];
    for (std::size_t j = 0; j < k; ++j) model.slacks[j] = std::abs(skew[j]);
    return model;
}

ClusterModel fit_clusters(const Matrix& x, const std::vector<int>& y, int k, double r, int max_iter,
                          double tol, std::uint64_t seed) {
    const std::size_t n = x.rows();
    require(k >= 1 && static_cast<std::size_t>(k) <= n, "fit_clusters: need 1 <= k <= n");

    // k distinct sample rows, chosen uniformly by seed.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(order);
    Matrix c0(static_cast<std::size_t>(k), x.cols());
    for (int j = 0; j < k; ++j)
        std::copy(x.row(order[static_cast<std::size_t>(j)]).begin(),
                  x.row(order[static_cast<std::size_t>(j)]).end(), c0.row(static_cast<std::size_t>(j)).begin());
    return fit_clusters_from(x, y, std::move(c0), r, max_iter, tol);
}

std::string cluster_model_to_json(const ClusterModel& model) {
    nlohmann::json j;
    j["k"] = model.k();
    j["r"] = model.scaling;
    auto& cents = j["centroids"] = nlohmann::json::array();
    for (std::size_t i = 0; i < model.centroids.rows(); ++i) {
        const auto row = model.centroids.row(i);
        cents.push_back(std::vector<double>(row.begin(), row.end()));
    }
    j["assignment"] = model.assignment;
    j["objective_trace"] = model.objective_trace;
    return j.dump(2) + "\n";
}

ClusterModel cluster_model_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("cluster model JSON: ") + e.what());
    }
    ClusterModel model;
    try {
        model.scaling = j.at("r").get<double>();
        const auto& cents = j.at("centroids");
        const std::size_t k = j.at("k").get<std::size_t>();
        if (cents.size() != k) throw ParseError("cluster model JSON: k does not match centroid count");
        const std::size_t dim = cents.empty() ? 0 : cents.at(0).size();
        model.centroids = Matrix(k, dim);
        for (std::size_t i = 0; i < k; ++i) {
            const auto row = cents.at(i).get<std::vector<double>>();
            if (row.size() != dim) throw ParseError("cluster model JSON: ragged centroids");
            std::copy(row.begin(), row.end(), model.centroids.row(i).begin());
        }
        model.assignment = j.at("assignment").get<std::vector<int>>();
        model.objective_trace = j.at("objective_trace").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("cluster model JSON: ") + e.what());
    }
    model.membership = Matrix(model.assignment.size(), model.k());
    for (std::size_t i = 0; i < model.assignment.size(); ++i) {
        const int a = model.assignment[i];
        if (a < 0 || static_cast<std::size_t>(a) >= model.k())
            throw ParseError("cluster model JSON: assignment index out of range");
        model.membership(i, static_cast<std::size_t>(a)) = 1.0;
    }
    return model;
}

}  // namespace locallearn
