// Independent test oracles: brute-force / finite-difference routes kept
// deliberately separate from the production code paths they check.
#pragma once

#include <cmath>
#include <random>

#include "frameflow/frame.hpp"
#include "frameflow/system.hpp"

namespace oracles {

using frameflow::Mat;
using frameflow::SystemSpec;
using frameflow::Vec;

/// Matrix exponential by scaling and squaring with a plain Taylor series.
inline Mat expm(const Mat& m) {
    double s = frameflow::max_abs(m);
    int squarings = 0;
    while (s > 0.5) {
        s /= 2;
        ++squarings;
    }
    Mat x = std::pow(0.5, squarings) * m;
    Mat term = Mat::identity(m.rows);
    Mat sum = term;
    for (int k = 1; k <= 24; ++k) {
        term = (1.0 / k) * (term * x);
        sum = sum + term;
    }
    for (int i = 0; i < squarings; ++i) sum = sum * sum;
    return sum;
}

/// Norm of the i-th Gram-Schmidt-reduced column after pushing the whole
/// frame through the transversal tangent flow for time t (no
/// normalization). This is the raw definition of the growth rate's
/// numerator, used only as a finite-difference oracle.
inline double reduced_column_norm_after(const SystemSpec& sys, const frameflow::FrameState& fs,
                                        int column, double t, double step) {
    Vec w = fs.base;
    std::vector<Vec> cols = fs.columns;
    const long nsteps = std::max<long>(1, static_cast<long>(std::ceil(std::fabs(t) / step - 1e-12)));
    const double h = t / nsteps;
    for (long i = 0; i < nsteps; ++i) frameflow::flow_step_with_tangents(sys, w, cols, h);
    Vec s = sys.evaluate(w);
    for (Vec& c : cols) c = frameflow::transversal_project(s, c);
    Vec u = cols[column];
    // orthogonalize against the evolved earlier columns, without normalizing
    std::vector<Vec> earlier;
    for (int j = 0; j < column; ++j) {
        Vec e = cols[j];
        for (const Vec& b : earlier) frameflow::axpy(-frameflow::dot(e, b), b, e);
        earlier.push_back(frameflow::normalized(e));
    }
    for (const Vec& b : earlier) frameflow::axpy(-frameflow::dot(u, b), b, u);
    return frameflow::norm(u);
}

/// Central finite difference of the log reduced-column norm at t = 0; the
/// oracle for the analytic growth-rate formula.
inline double fd_qualitative_rate(const SystemSpec& sys, const frameflow::FrameState& fs,
                                  int column, double h, double step) {
    double fwd = reduced_column_norm_after(sys, fs, column, h, step);
    double bwd = reduced_column_norm_after(sys, fs, column, -h, step);
    return (std::log(fwd) - std::log(bwd)) / (2 * h);
}

/// Deterministic random state in [0,1)^n.
inline Vec random_state(std::mt19937_64& rng, int dim) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vec w(dim);
    for (double& x : w) x = u(rng);
    return w;
}

inline Vec random_gauss(std::mt19937_64& rng, int dim) {
    std::normal_distribution<double> g(0.0, 1.0);
    Vec w(dim);
    for (double& x : w) x = g(rng);
    return w;
}

}  // namespace oracles
