#pragma once

#include <vector>

#include "frameflow/linalg.hpp"

namespace frameflow {

/// maximize objective . x  subject to  rows[i] . x <= rhs[i], with x free
/// (default) or componentwise nonnegative. All right-hand sides must be
/// nonnegative (the origin is feasible), which is the shape every caller in
/// this project produces.
struct LinearProgram {
    int nvars = 0;
    bool free_vars = true;
    Vec objective;
    std::vector<Vec> rows;
    Vec rhs;

    void add_row(Vec coeffs, double bound) {
        rows.push_back(std::move(coeffs));
        rhs.push_back(bound);
    }
};

struct LpSolution {
    double value = 0.0;
    Vec x;
};

/// Dense tableau simplex (free variables split into positive parts,
/// Dantzig pricing with a Bland fallback against cycling). Throws
/// numeric_error on unbounded or stalled problems.
LpSolution solve_lp_max(const LinearProgram& lp);

}  // namespace frameflow
