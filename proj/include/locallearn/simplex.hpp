#pragma once

#include <cstddef>
#include <vector>

#include "locallearn/common.hpp"

namespace locallearn {

enum class LpStatus { optimal, unbounded, infeasible, iteration_limit };

// Tableau-level simplex core for minimization problems. The caller supplies
// the constraint rows and a starting basis whose columns already form an
// identity (one basic variable per row, RHS >= 0). Pricing is Dantzig with a
// Bland fallback once a degenerate stall is detected, which breaks cycles.
class SimplexTableau {
  public:
    // tableau: m constraint rows, each of length n_vars + 1 (RHS last).
    // cost: length n_vars objective coefficients (minimize).
    // basis: basic variable index per row; their columns must be unit.
    SimplexTableau(Matrix tableau, const std::vector<double>& cost, std::vector<int> basis);

    // Pivots until all reduced costs are >= -tol.
    LpStatus optimize(int max_pivots = 500000);

    // Value of variable v in the current basic solution.
    double value(int v) const;
    std::vector<double> solution() const;
    double objective() const { return -tab_(rows_ - 1, rhs_); }
    int pivots() const { return pivots_; }

    void pivot(std::size_t row, std::size_t col);

    std::size_t n_rows() const { return rows_ - 1; }
    std::size_t n_vars() const { return rhs_; }
    const std::vector<int>& basis() const { return basis_; }
    // Constraint rows without the cost row, including the RHS column.
    Matrix constraint_rows() const;

  private:
    int choose_entering(bool bland) const;

    Matrix tab_;  // constraint rows then the reduced-cost row
    std::vector<int> basis_;
    std::size_t rows_ = 0;  // constraint rows + 1
    std::size_t rhs_ = 0;   // RHS column index
    int pivots_ = 0;
};

// Convenience two-phase solver for small LPs in standard split form:
//   minimize c^T x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  x >= 0.
struct LpResult {
    LpStatus status = LpStatus::optimal;
    std::vector<double> x;
    double objective = 0.0;
};

LpResult solve_lp(const std::vector<double>& c, const Matrix& a_eq, const std::vector<double>& b_eq,
                  const Matrix& a_ub, const std::vector<double>& b_ub, int max_pivots = 500000);

}  // namespace locallearn
