#pragma once

#include <cstdint>
#include <vector>

#include "frameflow/system.hpp"

namespace frameflow {

/// An orthonormal k-frame attached to a base state, with per-column
/// accumulated log growth. For flows every column lies in the hyperplane
/// orthogonal to the velocity (the transversal space at the base point).
struct FrameState {
    Vec base;
    std::vector<Vec> columns;
    Vec log_growth;       // one accumulated sum of log reduced norms per column
    double elapsed = 0.0; // steps for maps, time for flows

    int k() const { return static_cast<int>(columns.size()); }
};

/// Instantaneous log-growth rate of one frame column (units 1/time).
struct RateSample {
    Vec base;
    int column_index = 0;
    double value = 0.0;
};

/// Component of v orthogonal to s_w: v - (<v,s>/<s,s>) s. Rejects zero s_w.
Vec transversal_project(const Vec& s_w, const Vec& v);

/// Columns below this reduced norm make the frame degenerate.
inline constexpr double kFrameDegeneracyThreshold = 1e-12;

struct GramSchmidtResult {
    std::vector<Vec> frame;  // orthonormal
    Vec log_norms;           // log of the pre-normalization reduced lengths
};

/// Classical Gram-Schmidt; throws naming the failing column when a reduced
/// column drops below the degeneracy threshold.
GramSchmidtResult gram_schmidt(const std::vector<Vec>& vectors);

struct FrameEvolveParams {
    double step = 1e-3;      // integrator step, flows only
    long reorth_every = 1;   // Gram-Schmidt cadence in steps
};

/// Builds a valid FrameState from raw columns: projects them transversally
/// (flows) and orthonormalizes. Accumulators start at zero.
FrameState make_frame(const SystemSpec& sys, Vec base, const std::vector<Vec>& raw_columns);

/// Seeded random orthonormal (transversal) frame at the given base state.
FrameState random_frame(const SystemSpec& sys, Vec base, int k, std::uint64_t seed);

/// Advances the frame: columns ride the raw tangent flow between
/// reorthonormalizations (projected transversally at each integrator step
/// for flows), and every reorth_every steps Gram-Schmidt runs with its log
/// norms accumulated into log_growth. t_or_steps is a step count for maps
/// and a time span for flows.
FrameState evolve_frame(const SystemSpec& sys, FrameState fs, double t_or_steps,
                        const FrameEvolveParams& params = {});

/// The growth rate of the i-th reduced frame column at the current state,
/// computed as <u_i, P S'(w) P u_i> with P the orthogonal projection onto
/// the complement of span{S(w), u_1, ..., u_{i-1}}. Flows only; the
/// finite-difference definition lives in the tests as the oracle.
RateSample qualitative_rate(const SystemSpec& sys, const FrameState& fs, int column_index);

/// Record of one unit transversal vector pushed along a flow orbit with
/// renormalization at every integrator step: cumulative log growth and the
/// rate sample at each step endpoint. Backs the growth-identity checks and
/// the window-average certificates.
struct GrowthTrace {
    std::vector<double> times;       // 0, h, 2h, ..., T
    std::vector<double> rates;       // rate at each time
    std::vector<double> log_growth;  // cumulative log |Psi_t x|, log_growth[0] = 0
};

GrowthTrace unit_growth_trace(const SystemSpec& sys, Vec w, Vec x, double total_time, double step);

/// Trapezoid integral of the sampled rates over [0, T].
double trapezoid_rate_integral(const GrowthTrace& trace);

}  // namespace frameflow
