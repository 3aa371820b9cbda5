#include "frameflow/lp.hpp"

#include <cmath>

namespace frameflow {

LpSolution solve_lp_max(const LinearProgram& lp) {
    const int n0 = lp.nvars;
    const int m = static_cast<int>(lp.rows.size());
    // free variables are split x = u - v; nonnegative ones used directly
    const int n = lp.free_vars ? 2 * n0 : n0;
    const int width = n + m + 1;  // structural + slack + rhs

    for (double b : lp.rhs)
        if (b < 0.0) throw numeric_error("solve_lp_max: negative rhs unsupported");

    // tableau rows 0..m-1 are constraints, row m is the objective (negated
    // reduced costs convention: we minimize -c.x)
    std::vector<Vec> t(m + 1, Vec(width, 0.0));
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n0; ++j) {
            t[i][j] = lp.rows[i][j];
            if (lp.free_vars) t[i][n0 + j] = -lp.rows[i][j];
        }
        t[i][n + i] = 1.0;
        t[i][width - 1] = lp.rhs[i];
    }
    for (int j = 0; j < n0; ++j) {
        t[m][j] = -lp.objective[j];
        if (lp.free_vars) t[m][n0 + j] = lp.objective[j];
    }

    std::vector<int> basis(m);
    for (int i = 0; i < m; ++i) basis[i] = n + i;

    const double eps = 1e-11;
    const long max_iter = 200000L;
    const long bland_after = 4L * (m + n) + 200;

    for (long iter = 0; iter < max_iter; ++iter) {
        // entering column
        int enter = -1;
        if (iter < bland_after) {
            double best = -eps;
            for (int j = 0; j < n + m; ++j)
                if (t[m][j] < best) { best = t[m][j]; enter = j; }
        } else {  // Bland's rule
            for (int j = 0; j < n + m; ++j)
                if (t[m][j] < -eps) { enter = j; break; }
        }
        if (enter < 0) {
            LpSolution sol;
            sol.x.assign(n0, 0.0);
            for (int i = 0; i < m; ++i) {
                if (basis[i] < n0) sol.x[basis[i]] += t[i][width - 1];
                else if (basis[i] < n) sol.x[basis[i] - n0] -= t[i][width - 1];
            }
            sol.value = 0.0;
            for (int j = 0; j < n0; ++j) sol.value += lp.objective[j] * sol.x[j];
            return sol;
        }
        // ratio test
        int leave = -1;
        double best_ratio = 0.0;
        for (int i = 0; i < m; ++i) {
            if (t[i][enter] > eps) {
                double ratio = t[i][width - 1] / t[i][enter];
                if (leave < 0 || ratio < best_ratio - 1e-15 ||
                    (std::fabs(ratio - best_ratio) <= 1e-15 && basis[i] < basis[leave])) {
                    leave = i;
                    best_ratio = ratio;
                }
            }
        }
        if (leave < 0) throw numeric_error("solve_lp_max: unbounded objective");

        // pivot
        double piv = t[leave][enter];
        for (int j = 0; j < width; ++j) t[leave][j] /= piv;
        for (int i = 0; i <= m; ++i) {
            if (i == leave) continue;
            double f = t[i][enter];
            if (f == 0.0) continue;
            for (int j = 0; j < width; ++j) t[i][j] -= f * t[leave][j];
        }
        basis[leave] = enter;
    }
    throw numeric_error("solve_lp_max: iteration limit reached");
}

}  // namespace frameflow
