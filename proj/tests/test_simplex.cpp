#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "locallearn/rng.hpp"
#include "locallearn/simplex.hpp"

using namespace locallearn;

namespace {

Matrix rows(std::initializer_list<std::initializer_list<double>> data) {
    const std::size_t r = data.size();
    const std::size_t c = r == 0 ? 0 : data.begin()->size();
    Matrix m(r, c);
    std::size_t i = 0;
    for (const auto& row : data) {
        std::size_t j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return m;
}

}  // namespace

TEST_CASE("bounded 2-variable LP reaches the known vertex") {
    // min -2x - y  s.t.  x + y <= 1, x <= 0.6  ->  x = 0.6, y = 0.4
    const auto res = solve_lp({-2.0, -1.0}, Matrix(), {}, rows({{1.0, 1.0}, {1.0, 0.0}}), {1.0, 0.6});
    REQUIRE(res.status == LpStatus::optimal);
    CHECK(res.objective == doctest::Approx(-1.6).epsilon(1e-9));
    CHECK(res.x[0] == doctest::Approx(0.6));
    CHECK(res.x[1] == doctest::Approx(0.4));
}

TEST_CASE("equality constraints route through phase 1") {
    // min x + 2y  s.t.  x + y = 1  ->  x = 1, y = 0
    const auto res = solve_lp({1.0, 2.0}, rows({{1.0, 1.0}}), {1.0}, Matrix(), {});
    REQUIRE(res.status == LpStatus::optimal);
    CHECK(res.objective == doctest::Approx(1.0));
    CHECK(res.x[0] == doctest::Approx(1.0));
}

TEST_CASE("infeasible and unbounded problems are detected") {
    const auto infeasible = solve_lp({1.0, 1.0}, rows({{1.0, 1.0}}), {-1.0}, Matrix(), {});
    CHECK(infeasible.status == LpStatus::infeasible);

    const auto unbounded = solve_lp({-1.0}, Matrix(), {}, rows({{-1.0}}), {1.0});
    CHECK(unbounded.status == LpStatus::unbounded);
}

TEST_CASE("degenerate ties do not cycle") {
    // Several redundant constraints through the same vertex.
    const auto res = solve_lp({-1.0, -1.0}, Matrix(), {},
                              rows({{1.0, 1.0}, {1.0, 1.0}, {2.0, 2.0}, {1.0, 0.0}, {0.0, 1.0}}),
                              {1.0, 1.0, 2.0, 1.0, 1.0});
    REQUIRE(res.status == LpStatus::optimal);
    CHECK(res.objective == doctest::Approx(-1.0));
}

TEST_CASE("random box LPs: simplex optimum is feasible and beats a dense grid") {
    Rng rng(314);
    for (int trial = 0; trial < 25; ++trial) {
        // min c.x over 0 <= x <= 1 (2 vars) with two extra random <= rows.
        std::vector<double> c{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
        Matrix a_ub(4, 2);
        std::vector<double> b_ub(4);
        a_ub(0, 0) = 1.0;
        a_ub(1, 1) = 1.0;
        b_ub[0] = b_ub[1] = 1.0;
        for (int r = 2; r < 4; ++r) {
            a_ub(static_cast<std::size_t>(r), 0) = rng.uniform(0.0, 1.0);
            a_ub(static_cast<std::size_t>(r), 1) = rng.uniform(0.0, 1.0);
            b_ub[static_cast<std::size_t>(r)] = rng.uniform(0.5, 1.5);
        }
        const auto res = solve_lp(c, Matrix(), {}, a_ub, b_ub);
        REQUIRE(res.status == LpStatus::optimal);

        // Feasibility of the reported point.
        for (std::size_t r = 0; r < 4; ++r) {
            const double lhs = a_ub(r, 0) * res.x[0] + a_ub(r, 1) * res.x[1];
            CHECK(lhs <= b_ub[r] + 1e-9);
        }
        CHECK(res.x[0] >= -1e-12);
        CHECK(res.x[1] >= -1e-12);

        // Grid oracle over the box.
        double best = 0.0;
        for (int i = 0; i <= 100; ++i) {
            for (int j = 0; j <= 100; ++j) {
                const double x0 = i / 100.0, x1 = j / 100.0;
                bool ok = true;
                for (std::size_t r = 2; r < 4; ++r)
                    ok = ok && a_ub(r, 0) * x0 + a_ub(r, 1) * x1 <= b_ub[r];
                if (ok) best = std::min(best, c[0] * x0 + c[1] * x1);
            }
        }
        CHECK(res.objective <= best + 1e-9);
    }
}

TEST_CASE("warm-started tableau core optimizes from a supplied basis") {
    // min -x1 - 2x2 s.t. x1 + x2 + s = 1; start with s basic.
    Matrix tab(1, 4);
    tab(0, 0) = 1.0;
    tab(0, 1) = 1.0;
    tab(0, 2) = 1.0;
    tab(0, 3) = 1.0;
    SimplexTableau t(tab, {-1.0, -2.0, 0.0}, {2});
    CHECK(t.optimize() == LpStatus::optimal);
    CHECK(t.objective() == doctest::Approx(-2.0));
    CHECK(t.value(1) == doctest::Approx(1.0));
}
