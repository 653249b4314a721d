#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>

#include "locallearn/clustering.hpp"
#include "locallearn/rng.hpp"
#include "locallearn/svm.hpp"

using namespace locallearn;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Dataset tiny(std::initializer_list<std::pair<std::vector<double>, int>> rows) {
    std::vector<Sample> samples;
    for (const auto& [f, y] : rows) samples.push_back({f, y});
    return make_dataset(std::move(samples));
}

Dataset two_point() { return tiny({{{-1.0}, -1}, {{1.0}, 1}}); }

Dataset random_binary(Rng& rng, std::size_t n, int d) {
    std::vector<Sample> samples;
    for (std::size_t i = 0; i < n; ++i) {
        Sample s;
        for (int j = 0; j < d; ++j) s.features.push_back(rng.uniform(-2.0, 2.0));
        s.label = i % 2 == 0 ? -1 : 1;
        samples.push_back(std::move(s));
    }
    return make_dataset(std::move(samples));
}

// Worst KKT violation of a trained model, evaluated with its own decision
// function (independent of the solver internals).
double kkt_violation(const SvmModel& model, const Dataset& ds) {
    double worst = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const double yf = ds.samples[i].label * decision(model, ds.samples[i].features).margin;
        const double a = model.alphas[i];
        if (a <= 0.0)
            worst = std::max(worst, 1.0 - yf);
        else if (a >= model.box_c)
            worst = std::max(worst, yf - 1.0);
        else
            worst = std::max(worst, std::abs(yf - 1.0));
    }
    return worst;
}

// Dense grid search over the feasible dual polytope: alpha on a lattice for
// all but one index, the last plus-class alpha solved from the equality
// constraint. Independent of the SMO path.
double grid_search_dual(const Dataset& ds, const std::function<double(std::size_t, std::size_t)>& kernel,
                        double box, double step, double hi) {
    const std::size_t n = ds.size();
    std::vector<int> y = ds.labels();
    std::size_t pivot = n;
    for (std::size_t i = 0; i < n; ++i)
        if (y[i] == 1) {
            pivot = i;
            break;
        }
    REQUIRE(pivot < n);

    const auto objective = [&](const std::vector<double>& a) {
        double linear = 0.0, quad = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            linear += a[i];
            for (std::size_t j = 0; j < n; ++j) quad += a[i] * a[j] * y[i] * y[j] * kernel(i, j);
        }
        return linear - 0.5 * quad;
    };

    const int steps = static_cast<int>(hi / step);
    std::vector<double> a(n, 0.0);
    double best = 0.0;  // a = 0 is feasible
    std::vector<int> idx;
    for (std::size_t i = 0; i < n; ++i)
        if (i != pivot) idx.push_back(static_cast<int>(i));

    std::vector<int> counter(idx.size(), 0);
    for (;;) {
        for (std::size_t t = 0; t < idx.size(); ++t) a[static_cast<std::size_t>(idx[t])] = counter[t] * step;
        double balance = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (i != pivot) balance += a[i] * y[i];
        const double need = -balance;  // pivot has y = +1
        if (need >= -1e-12 && need <= box + 1e-12) {
            a[pivot] = std::max(0.0, std::min(need, box));
            best = std::max(best, objective(a));
        }
        std::size_t t = 0;
        while (t < counter.size()) {
            if (++counter[t] <= steps) break;
            counter[t] = 0;
            ++t;
        }
        if (t == counter.size()) break;
    }
    return best;
}

}  // namespace

TEST_CASE("dual objective analytic cases") {
    const KernelSpec spec{1.0};
    const Dataset ds = two_point();
    CHECK(dual_objective({0.0, 0.0}, ds, spec) == 0.0);

    // Symmetric two-point dual: W(a) = 2a - a^2 (1 - e^-2).
    for (double a : {0.25, 0.5, 1.0, 1.15652, 2.0}) {
        const double expect = 2.0 * a - a * a * (1.0 - std::exp(-2.0));
        CHECK(dual_objective({a, a}, ds, spec) == doctest::Approx(expect).epsilon(1e-12));
    }
    CHECK_THROWS_AS(dual_objective({-0.1, 0.1}, ds, spec), ContractViolation);

    Rng rng(40);
    const Dataset five = random_binary(rng, 5, 2);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> a(5);
        for (auto& v : a) v = rng.uniform(0.0, 2.0);
        double linear = 0.0, quad = 0.0;
        for (std::size_t i = 0; i < 5; ++i) {
            linear += a[i];
            for (std::size_t j = 0; j < 5; ++j)
                quad += a[i] * a[j] * five.samples[i].label * five.samples[j].label *
                        std::exp(-squared_distance(five.samples[i].features, five.samples[j].features) / 2.0);
        }
        CHECK(dual_objective(a, five, spec) == doctest::Approx(linear - 0.5 * quad).epsilon(1e-12));
    }
}

TEST_CASE("two-point hard-margin solution is analytic") {
    const auto model = train_smo(two_point(), KernelSpec{1.0}, kInf, 1e-6, 1000, 0);
    const double expect = 1.0 / (1.0 - std::exp(-2.0));
    REQUIRE(model.alphas.size() == 2);
    CHECK(model.alphas[0] == doctest::Approx(expect).epsilon(1e-6));
    CHECK(model.alphas[1] == doctest::Approx(expect).epsilon(1e-6));
    CHECK(std::abs(model.bias) <= 1e-9);

    // Midpoint decision: zero margin resolves to +1.
    const auto mid = decision(model, std::vector<double>{0.0});
    CHECK(std::abs(mid.margin) <= 1e-9);
    CHECK(mid.sign == 1);
}

TEST_CASE("separable blobs reach 100% training accuracy with clean KKT") {
    const Dataset ds = gen_blobs(200, 2, 2, 6.0, 77);
    const auto model = train_smo(ds, KernelSpec{2.0}, kInf, 5e-4, 2000, 1);
    int hits = 0;
    for (const Sample& s : ds.samples)
        if (decision(model, s.features).sign == s.label) ++hits;
    CHECK(hits == 200);
    CHECK(kkt_violation(model, ds) <= 1e-3);
    CHECK(model.support_index.size() >= 2);

    double balance = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) balance += model.alphas[i] * ds.samples[i].label;
    CHECK(std::abs(balance) <= 1e-8);
}

TEST_CASE("SMO dual matches a dense grid-search oracle on tiny instances") {
    Rng rng(50);
    const KernelSpec spec{1.0};
    for (int trial = 0; trial < 8; ++trial) {
        const std::size_t n = 4 + rng.below(3);  // 4..6
        const Dataset ds = random_binary(rng, n, 2);
        const double box = 1.5;
        const auto model = train_smo(ds, spec, box, 1e-5, 5000, trial);
        const double w_smo = dual_objective(model.alphas, ds, spec);

        const auto kernel = [&](std::size_t i, std::size_t j) {
            return std::exp(-squared_distance(ds.samples[i].features, ds.samples[j].features) / 2.0);
        };
        const double w_grid = grid_search_dual(ds, kernel, box, 0.1, box);
        CHECK(w_smo >= w_grid - 1e-3);
    }
}

TEST_CASE("decision margins match a direct summation oracle") {
    Rng rng(60);
    const Dataset ds = random_binary(rng, 20, 2);
    const KernelSpec spec{1.0};
    const auto model = train_smo(ds, spec, 5.0, 1e-4, 2000, 3);
    for (int trial = 0; trial < 25; ++trial) {
        const std::vector<double> x{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
        double margin = model.bias;
        for (std::size_t i = 0; i < ds.size(); ++i)
            margin += ds.samples[i].label * model.alphas[i] *
                      std::exp(-squared_distance(x, ds.samples[i].features) / 2.0);
        const auto d = decision(model, x);
        CHECK(d.margin == doctest::Approx(margin).epsilon(1e-10));
        CHECK(d.sign == (margin >= 0.0 ? 1 : -1));
    }
    CHECK_THROWS_AS(decision(model, std::vector<double>{1.0}), ContractViolation);
}

TEST_CASE("support-vector dominance close to one class") {
    const Dataset ds = gen_blobs(40, 2, 2, 8.0, 5);
    const auto model = train_smo(ds, KernelSpec{1.5}, kInf, 1e-4, 2000, 0);
    for (std::size_t s = 0; s < model.support_index.size(); ++s) {
        if (model.support_y[s] != 1) continue;
        CHECK(decision(model, model.support_x.row(s)).sign == 1);
    }
}

TEST_CASE("equality constraint holds after every accepted update") {
    Rng rng(70);
    const Dataset ds = random_binary(rng, 12, 2);
    const std::vector<int> y = ds.labels();
    SmoOptions opts;
    opts.box_c = 2.0;
    opts.tol = 1e-4;
    opts.max_passes = 2000;
    opts.seed = 9;
    int updates = 0;
    opts.on_update = [&](const std::vector<double>& alphas) {
        double balance = 0.0;
        for (std::size_t i = 0; i < alphas.size(); ++i) {
            balance += alphas[i] * y[i];
            CHECK(alphas[i] >= 0.0);
            CHECK(alphas[i] <= opts.box_c + 1e-12);
        }
        CHECK(std::abs(balance) <= 1e-9);
        ++updates;
    };
    train_smo(ds, KernelSpec{1.0}, opts);
    CHECK(updates > 0);
}

TEST_CASE("dual objective is non-decreasing across accepted steps") {
    Rng rng(80);
    const Dataset ds = random_binary(rng, 10, 2);
    const KernelSpec spec{1.0};
    SmoOptions opts;
    opts.box_c = 3.0;
    opts.tol = 1e-4;
    opts.max_passes = 2000;
    double prev = 0.0;
    opts.on_update = [&](const std::vector<double>& alphas) {
        const double w = dual_objective(alphas, ds, spec);
        CHECK(w >= prev - 1e-9);
        prev = w;
    };
    train_smo(ds, spec, opts);
}

TEST_CASE("convergence error carries the best-so-far model") {
    // Duplicate points with opposite labels make the hard-margin dual
    // unbounded; SMO must give up and report.
    const Dataset ds = tiny({{{0.0}, -1}, {{0.0}, 1}, {{1.0}, 1}, {{-1.0}, -1}});
    SmoOptions opts;
    opts.box_c = kInf;
    opts.tol = 1e-4;
    opts.max_passes = 5;
    try {
        train_smo(ds, KernelSpec{1.0}, opts);
        FAIL("expected SmoConvergenceError");
    } catch (const SmoConvergenceError& e) {
        CHECK(e.max_kkt_violation > 0.0);
        CHECK(e.best.alphas.size() == 4);
    }
}

TEST_CASE("semiparameterize") {
    Rng rng(90);
    const Dataset ds = random_binary(rng, 24, 2);
    const KernelSpec spec{1.2};
    const auto model = train_smo(ds, spec, 4.0, 1e-4, 2000, 2);

    SUBCASE("singleton clusters keep every margin within 1e-12") {
        Matrix centroids = ds.feature_matrix();
        std::vector<int> identity(ds.size());
        for (std::size_t i = 0; i < ds.size(); ++i) identity[i] = static_cast<int>(i);
        const auto semi = semiparameterize(model, centroids, identity);
        double beta_sum = 0.0;
        for (double b : semi.betas) beta_sum += b;
        CHECK(std::abs(beta_sum) <= 1e-8);
        for (int trial = 0; trial < 50; ++trial) {
            const std::vector<double> x{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
            CHECK(std::abs(decision(semi, x).margin - decision(model, x).margin) <= 1e-12);
        }
    }

    SUBCASE("two class-pure clusters aggregate the signed alpha mass") {
        Matrix centroids(2, 2);
        std::vector<int> assignment(ds.size());
        for (std::size_t i = 0; i < ds.size(); ++i) assignment[i] = ds.samples[i].label == 1 ? 0 : 1;
        const auto semi = semiparameterize(model, centroids, assignment);
        double pos = 0.0, neg = 0.0;
        for (std::size_t i = 0; i < ds.size(); ++i)
            (ds.samples[i].label == 1 ? pos : neg) += model.alphas[i];
        CHECK(semi.betas[0] == doctest::Approx(pos).epsilon(1e-12));
        CHECK(semi.betas[1] == doctest::Approx(-neg).epsilon(1e-12));
    }

    SUBCASE("margin invariance against centroid-substituted full evaluation") {
        const auto clusters = fit_clusters(ds.feature_matrix(), ds.labels(), 4, 0.0, 300, 1e-8, 7);
        const auto semi = semiparameterize(model, clusters);
        for (int trial = 0; trial < 40; ++trial) {
            const std::vector<double> x{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
            double margin = model.bias;
            for (std::size_t i = 0; i < ds.size(); ++i) {
                const auto c = clusters.centroids.row(static_cast<std::size_t>(clusters.assignment[i]));
                margin += ds.samples[i].label * model.alphas[i] *
                          std::exp(-squared_distance(x, c) / (2.0 * spec.sigma * spec.sigma));
            }
            CHECK(std::abs(decision(semi, x).margin - margin) <= 1e-12);
        }
    }

    SUBCASE("per-prediction kernel evaluations: support count vs k") {
        const auto clusters = fit_clusters(ds.feature_matrix(), ds.labels(), 16, 0.0, 300, 1e-8, 8);
        const auto semi = semiparameterize(model, clusters);
        const std::vector<double> x{0.0, 0.0};
        reset_kernel_eval_count();
        decision(model, x);
        CHECK(kernel_eval_count() == model.support_index.size());
        reset_kernel_eval_count();
        decision(semi, x);
        CHECK(kernel_eval_count() == 16);
    }

    SUBCASE("assignment length mismatch is rejected") {
        Matrix centroids(2, 2);
        CHECK_THROWS_AS(semiparameterize(model, centroids, std::vector<int>{0, 1}), ContractViolation);
    }
}

TEST_CASE("train_semi") {
    const KernelSpec spec{1.0};
    SUBCASE("singleton clusters reproduce train_smo exactly") {
        Rng rng(100);
        const Dataset ds = random_binary(rng, 10, 2);
        const auto full = train_smo(ds, spec, 3.0, 1e-4, 2000, 5);
        Matrix centroids = ds.feature_matrix();
        std::vector<int> identity(ds.size());
        for (std::size_t i = 0; i < ds.size(); ++i) identity[i] = static_cast<int>(i);
        SmoOptions opts;
        opts.box_c = 3.0;
        opts.tol = 1e-4;
        opts.max_passes = 2000;
        opts.seed = 5;
        const auto semi = train_semi(ds, centroids, identity, spec, opts);
        for (std::size_t i = 0; i < ds.size(); ++i)
            CHECK(semi.betas[i] == ds.samples[i].label * full.alphas[i]);
        CHECK(semi.bias == doctest::Approx(full.bias).epsilon(1e-12));
    }

    SUBCASE("compressed Gram costs exactly k(k+1)/2 kernel evaluations") {
        const Dataset ds = gen_blobs(60, 2, 2, 6.0, 13);
        const auto clusters = fit_clusters(ds.feature_matrix(), ds.labels(), 2, 0.0, 300, 1e-8, 3);
        reset_kernel_eval_count();
        SmoOptions opts;
        opts.box_c = kInf;
        opts.tol = 1e-3;
        opts.max_passes = 2000;
        train_semi(ds, clusters, spec, opts);
        CHECK(kernel_eval_count() == 3);  // k = 2 -> 3 distinct entries
    }

    SUBCASE("compressed dual matches the grid-search oracle") {
        // Two tight class-pure groups, so k-means with k=2 recovers them and
        // |beta_j| equals the summed alphas of cluster j.
        const Dataset ds = tiny({{{-2.0, 0.0}, -1},
                                 {{-2.2, 0.1}, -1},
                                 {{-1.8, -0.1}, -1},
                                 {{2.0, 0.0}, 1},
                                 {{2.2, 0.1}, 1},
                                 {{1.8, -0.1}, 1}});
        const auto clusters = fit_clusters(ds.feature_matrix(), ds.labels(), 2, 0.0, 300, 1e-8, 1);
        for (std::size_t i = 0; i < ds.size(); ++i)
            REQUIRE(clusters.assignment[i] == clusters.assignment[ds.samples[i].label == -1 ? 0 : 3]);

        SmoOptions opts;
        opts.box_c = 1.5;
        opts.tol = 1e-5;
        opts.max_passes = 5000;
        const auto semi = train_semi(ds, clusters, spec, opts);
        const auto again = train_semi(ds, clusters, spec, opts);
        CHECK(again.betas == semi.betas);  // determinism

        // Oracle over the centroid-substituted kernel.
        const auto kernel = [&](std::size_t i, std::size_t j) {
            const auto ci = clusters.centroids.row(static_cast<std::size_t>(clusters.assignment[i]));
            const auto cj = clusters.centroids.row(static_cast<std::size_t>(clusters.assignment[j]));
            return std::exp(-squared_distance(ci, cj) / 2.0);
        };
        const double w_grid = grid_search_dual(ds, kernel, opts.box_c, 0.05, opts.box_c);

        // W = sum_i a_i - 1/2 sum_pq beta_p beta_q k(c_p, c_q); class-pure
        // clusters give sum_i a_i = sum_j |beta_j|.
        double alpha_sum = 0.0;
        for (double b : semi.betas) alpha_sum += std::abs(b);
        double quad = 0.0;
        for (std::size_t p = 0; p < semi.betas.size(); ++p)
            for (std::size_t q = 0; q < semi.betas.size(); ++q)
                quad += semi.betas[p] * semi.betas[q] *
                        std::exp(-squared_distance(semi.centroids.row(p), semi.centroids.row(q)) / 2.0);
        const double w_semi = alpha_sum - 0.5 * quad;
        CHECK(w_semi >= w_grid - 1e-3);
    }
}

TEST_CASE("trained Gram is symmetric with a unit diagonal") {
    Rng rng(120);
    const Dataset ds = random_binary(rng, 8, 2);
    const KernelSpec spec{0.9};
    const auto model = train_smo(ds, spec, 2.0, 1e-4, 2000, 0);
    for (std::size_t s = 0; s < model.support_index.size(); ++s) {
        CHECK(gaussian_kernel(model.support_x.row(s), model.support_x.row(s), spec) == 1.0);
        for (std::size_t t = 0; t < model.support_index.size(); ++t)
            CHECK(gaussian_kernel(model.support_x.row(s), model.support_x.row(t), spec) ==
                  gaussian_kernel(model.support_x.row(t), model.support_x.row(s), spec));
    }
}

TEST_CASE("binary label contract") {
    const Dataset bad = tiny({{{0.0}, 0}, {{1.0}, 1}});
    CHECK_THROWS_AS(train_smo(bad, KernelSpec{1.0}, kInf, 1e-3, 100, 0), ContractViolation);
    CHECK_THROWS_AS(dual_objective({0.0, 0.0}, bad, KernelSpec{1.0}), ContractViolation);
}

TEST_CASE("SVM model JSON round trips") {
    Rng rng(130);
    const Dataset ds = random_binary(rng, 12, 2);
    const KernelSpec spec{1.3};
    const auto model = train_smo(ds, spec, 2.5, 1e-4, 2000, 6);
    const auto back = svm_model_from_json(svm_model_to_json(model));
    CHECK(back.kernel.sigma == model.kernel.sigma);
    CHECK(back.bias == model.bias);
    CHECK(back.box_c == model.box_c);
    CHECK(back.support_x == model.support_x);
    CHECK(back.support_y == model.support_y);
    CHECK(back.support_alpha == model.support_alpha);
    for (int trial = 0; trial < 10; ++trial) {
        const std::vector<double> x{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
        CHECK(decision(back, x).margin == decision(model, x).margin);
    }

    const auto hard = train_smo(two_point(), spec, kInf, 1e-6, 100, 0);
    const auto hard_back = svm_model_from_json(svm_model_to_json(hard));
    CHECK(std::isinf(hard_back.box_c));

    const auto clusters = fit_clusters(ds.feature_matrix(), ds.labels(), 3, 0.0, 300, 1e-8, 2);
    const auto semi = semiparameterize(model, clusters);
    const auto semi_back = semi_svm_model_from_json(semi_svm_model_to_json(semi));
    CHECK(semi_back.centroids == semi.centroids);
    CHECK(semi_back.betas == semi.betas);
    CHECK(semi_back.bias == semi.bias);
    CHECK(semi_back.provenance == semi.provenance);
    CHECK_THROWS_AS(svm_model_from_json("[]"), ParseError);
}
