#include "locallearn/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace locallearn {

namespace {
constexpr double kCostTol = 1e-9;
constexpr double kPivotTol = 1e-11;
}  // namespace

SimplexTableau::SimplexTableau(Matrix tableau, const std::vector<double>& cost, std::vector<int> basis)
    : basis_(std::move(basis)) {
    const std::size_t m = tableau.rows();
    const std::size_t n_vars = tableau.cols() - 1;
    require(basis_.size() == m, "simplex: one basic variable per row");
    require(cost.size() == n_vars, "simplex: cost length mismatch");

    // Append the reduced-cost row: c with the basic costs folded in.
    tab_ = Matrix(m + 1, n_vars + 1);
    for (std::size_t i = 0; i < m; ++i)
        std::copy(tableau.row(i).begin(), tableau.row(i).end(), tab_.row(i).begin());
    for (std::size_t j = 0; j < n_vars; ++j) tab_(m, j) = cost[j];
    for (std::size_t i = 0; i < m; ++i) {
        const double cb = cost[static_cast<std::size_t>(basis_[i])];
        if (cb == 0.0) continue;
        double* obj = tab_.row(m).data();
        const double* r = tab_.row(i).data();
        for (std::size_t j = 0; j <= n_vars; ++j) obj[j] -= cb * r[j];
    }
    rows_ = m + 1;
    rhs_ = n_vars;
}

Matrix SimplexTableau::constraint_rows() const {
    Matrix rows(rows_ - 1, rhs_ + 1);
    for (std::size_t i = 0; i + 1 < rows_; ++i)
        std::copy(tab_.row(i).begin(), tab_.row(i).end(), rows.row(i).begin());
    return rows;
}

void SimplexTableau::pivot(std::size_t row, std::size_t col) {
    const std::size_t width = rhs_ + 1;
    double* prow = tab_.row(row).data();
    const double inv = 1.0 / prow[col];
    for (std::size_t j = 0; j < width; ++j) prow[j] *= inv;
    prow[col] = 1.0;
    for (std::size_t i = 0; i < rows_; ++i) {
        if (i == row) continue;
        double* r = tab_.row(i).data();
        const double f = r[col];
        if (f == 0.0) continue;
        for (std::size_t j = 0; j < width; ++j) r[j] -= f * prow[j];
        r[col] = 0.0;
    }
    basis_[row] = static_cast<int>(col);
    ++pivots_;
}

int SimplexTableau::choose_entering(bool bland) const {
    const double* cost = tab_.row(rows_ - 1).data();
    if (bland) {
        for (std::size_t j = 0; j < rhs_; ++j)
            if (cost[j] < -kCostTol) return static_cast<int>(j);
        return -1;
    }
    int best = -1;
    double best_cost = -kCostTol;
    for (std::size_t j = 0; j < rhs_; ++j) {
        if (cost[j] < best_cost) {
            best_cost = cost[j];
            best = static_cast<int>(j);
        }
    }
    return best;
}

LpStatus SimplexTableau::optimize(int max_pivots) {
    const std::size_t m = rows_ - 1;
    bool bland = false;
    int stall = 0;
    const int stall_limit = static_cast<int>(2 * m) + 16;

    for (int it = 0; it < max_pivots; ++it) {
        const int enter = choose_entering(bland);
        if (enter < 0) return LpStatus::optimal;

        // Ratio test; near-ties go to the lowest basic variable index (Bland).
        std::size_t leave = rows_;  // sentinel
        double best_ratio = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < m; ++i) {
            const double a = tab_(i, static_cast<std::size_t>(enter));
            if (a <= kPivotTol) continue;
            const double ratio = tab_(i, rhs_) / a;
            if (ratio < best_ratio - kPivotTol) {
                best_ratio = ratio;
                leave = i;
            } else if (ratio <= best_ratio + kPivotTol && leave != rows_ && basis_[i] < basis_[leave]) {
                leave = i;
            }
        }
        if (leave == rows_) return LpStatus::unbounded;

        // tab_(m, rhs_) holds -objective, so improvement raises it.
        const double before = tab_(rows_ - 1, rhs_);
        pivot(leave, static_cast<std::size_t>(enter));
        const double after = tab_(rows_ - 1, rhs_);

        if (after > before + kPivotTol) {
            stall = 0;
            bland = false;
        } else if (++stall > stall_limit) {
            bland = true;
        }
    }
    return LpStatus::iteration_limit;
}

double SimplexTableau::value(int v) const {
    for (std::size_t i = 0; i + 1 < rows_; ++i)
        if (basis_[i] == v) return tab_(i, rhs_);
    return 0.0;
}

std::vector<double> SimplexTableau::solution() const {
    std::vector<double> x(rhs_, 0.0);
    for (std::size_t i = 0; i + 1 < rows_; ++i)
        if (static_cast<std::size_t>(basis_[i]) < rhs_) x[static_cast<std::size_t>(basis_[i])] = tab_(i, rhs_);
    return x;
}

LpResult solve_lp(const std::vector<double>& c, const Matrix& a_eq, const std::vector<double>& b_eq,
                  const Matrix& a_ub, const std::vector<double>& b_ub, int max_pivots) {
    const std::size_t n = c.size();
    const std::size_t m_eq = a_eq.rows();
    const std::size_t m_ub = a_ub.rows();
    require(m_eq == b_eq.size() && m_ub == b_ub.size(), "solve_lp: rhs size mismatch");
    require((m_eq == 0 || a_eq.cols() == n) && (m_ub == 0 || a_ub.cols() == n), "solve_lp: column count mismatch");
    const std::size_t m = m_eq + m_ub;
    require(m > 0, "solve_lp: no constraints");

    // Normalize to Ax (+ slack) = b with b >= 0. Slack columns for <= rows;
    // rows that flip sign or are equalities get an artificial.
    std::vector<bool> needs_art(m, false);
    std::size_t n_art = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const bool eq = i < m_eq;
        const double b = eq ? b_eq[i] : b_ub[i - m_eq];
        needs_art[i] = eq || b < 0.0;
        if (needs_art[i]) ++n_art;
    }

    const std::size_t n_slack = m_ub;
    const std::size_t width = n + n_slack + n_art;
    Matrix tab(m, width + 1);
    std::vector<int> basis(m, -1);
    std::size_t art_col = n + n_slack;
    for (std::size_t i = 0; i < m; ++i) {
        const bool eq = i < m_eq;
        const double b = eq ? b_eq[i] : b_ub[i - m_eq];
        const double sign = b < 0.0 ? -1.0 : 1.0;
        for (std::size_t j = 0; j < n; ++j) tab(i, j) = sign * (eq ? a_eq(i, j) : a_ub(i - m_eq, j));
        if (!eq) tab(i, n + (i - m_eq)) = sign;
        tab(i, width) = sign * b;
        if (needs_art[i]) {
            tab(i, art_col) = 1.0;
            basis[i] = static_cast<int>(art_col);
            ++art_col;
        } else {
            basis[i] = static_cast<int>(n + (i - m_eq));
        }
    }

    LpResult res;
    if (n_art > 0) {
        std::vector<double> phase1_cost(width, 0.0);
        for (std::size_t j = n + n_slack; j < width; ++j) phase1_cost[j] = 1.0;
        SimplexTableau t1(tab, phase1_cost, basis);
        const LpStatus s1 = t1.optimize(max_pivots);
        if (s1 == LpStatus::iteration_limit) {
            res.status = s1;
            return res;
        }
        if (t1.objective() > 1e-7) {
            res.status = LpStatus::infeasible;
            return res;
        }

        // Drive basic artificials (all at zero now) out of the basis; a row
        // with no usable pivot column is redundant and is dropped.
        Matrix reduced = t1.constraint_rows();
        std::vector<int> b2 = t1.basis();
        std::vector<std::size_t> keep;
        for (std::size_t i = 0; i < reduced.rows(); ++i) {
            if (static_cast<std::size_t>(b2[i]) < n + n_slack) {
                keep.push_back(i);
                continue;
            }
            std::size_t col = n + n_slack;
            for (std::size_t j = 0; j < n + n_slack; ++j) {
                if (std::abs(reduced(i, j)) > 1e-9) {
                    col = j;
                    break;
                }
            }
            if (col == n + n_slack) continue;  // redundant row
            // Degenerate pivot on the full row set (RHS of this row is 0).
            const double inv = 1.0 / reduced(i, col);
            for (std::size_t j = 0; j <= width; ++j) reduced(i, j) *= inv;
            for (std::size_t r = 0; r < reduced.rows(); ++r) {
                if (r == i) continue;
                const double f = reduced(r, col);
                if (f == 0.0) continue;
                for (std::size_t j = 0; j <= width; ++j) reduced(r, j) -= f * reduced(i, j);
            }
            b2[i] = static_cast<int>(col);
            keep.push_back(i);
        }

        Matrix tab2(keep.size(), n + n_slack + 1);
        std::vector<int> basis2(keep.size());
        for (std::size_t r = 0; r < keep.size(); ++r) {
            for (std::size_t j = 0; j < n + n_slack; ++j) tab2(r, j) = reduced(keep[r], j);
            tab2(r, n + n_slack) = reduced(keep[r], width);
            basis2[r] = b2[keep[r]];
        }

        std::vector<double> cost2(n + n_slack, 0.0);
        for (std::size_t j = 0; j < n; ++j) cost2[j] = c[j];
        SimplexTableau t2(tab2, cost2, basis2);
        res.status = t2.optimize(max_pivots);
        if (res.status == LpStatus::optimal) {
            const auto sol = t2.solution();
            res.x.assign(sol.begin(), sol.begin() + static_cast<std::ptrdiff_t>(n));
            res.objective = 0.0;
            for (std::size_t j = 0; j < n; ++j) res.objective += c[j] * res.x[j];
        }
        return res;
    }

    std::vector<double> cost(width, 0.0);
    for (std::size_t j = 0; j < n; ++j) cost[j] = c[j];
    SimplexTableau t(tab, cost, basis);
    res.status = t.optimize(max_pivots);
    if (res.status == LpStatus::optimal) {
        const auto sol = t.solution();
        res.x.assign(sol.begin(), sol.begin() + static_cast<std::ptrdiff_t>(n));
        res.objective = 0.0;
        for (std::size_t j = 0; j < n; ++j) res.objective += c[j] * res.x[j];
    }
    return res;
}

}  // namespace locallearn
