#pragma once

#include <climits>
#include <vector>

#include "frameflow/system.hpp"

namespace frameflow {

/// An almost-closed orbit segment: the state at start_index returns to
/// within gap of itself after span_steps samples.
struct RecurrentSegment {
    Vec start;
    long start_index = 0;
    long span_steps = 0;
    double span_time = 0.0;  // equals span_steps for maps
    double gap = 0.0;
};

/// A verified periodic orbit with its monodromy data. For maps the period
/// is an integer step count; for flows it is the section return time.
/// Map orbits carry their refined cycle: re-iterating the representative
/// from scratch would amplify the closure defect by the expansion rate per
/// step, so consumers (measures, replay, spectra) use the stored points.
/// The residual is the largest one-step closure defect of that cycle.
struct PeriodicOrbit {
    Vec point;
    double period = 0.0;
    Vec multipliers;   // monodromy eigenvalue magnitudes, ascending
    Vec exponents;     // log(multipliers)/period, ascending
    int index = 0;     // number of negative exponents
    double residual = 0.0;
    bool verified = false;
    bool is_map_orbit = true;
    std::vector<Vec> points;  // the full cycle (maps)
};

/// All almost-returning index pairs with span_time >= min_span and endpoint
/// gap < alpha, in increasing span order; overlapping hits of equal span
/// keep only the smallest gap. min_span/max_span are in time units for
/// flows and steps for maps. The scan is grid-accelerated and stops after
/// max_hits raw candidates.
std::vector<RecurrentSegment> find_recurrences(const SystemSpec& sys, const Trajectory& traj,
                                               double alpha, double min_span,
                                               double max_span = 1e18,
                                               size_t max_hits = 2000000);

struct RefineOptions {
    double tol = 1e-12;
    int max_iter = 50;
    double flow_step = 1e-3;
};

/// Newton refinement of a recurrent segment into a true periodic orbit:
/// roots of g^m(p) - p through shortest-displacement arithmetic for maps,
/// a transversal-section return map for flows. Returns a fully populated
/// orbit including monodromy multipliers; the reported period is minimal.
PeriodicOrbit refine_periodic(const SystemSpec& sys, const RecurrentSegment& seg,
                              const RefineOptions& opts = {});

struct ShadowReport {
    bool shadowed = false;
    double worst_offset = 0.0;
    double worst_time = 0.0;
};

/// Replays the orbit cyclically against the trajectory samples and compares
/// pointwise; true iff the maximum offset stays below eps.
ShadowReport verify_shadow(const SystemSpec& sys, const Trajectory& traj,
                           const PeriodicOrbit& orbit, double eps);

/// Derivative of the one-period section return map of a verified flow
/// orbit (central differences on a section orthogonal to the velocity).
Mat flow_monodromy(const SystemSpec& sys, const PeriodicOrbit& orbit, double step = 1e-3);

/// Exact enumeration of all points p with A^m p = p (mod 1) for an integer
/// toral automorphism, via the Smith normal form of A^m - I. Points are
/// grouped into orbits with exact rational coordinates and reported with
/// their minimal periods. Requires det(A^m - I) != 0.
std::vector<PeriodicOrbit> enumerate_periodic_toral(const Mat& a, int period);

/// |det(A^m - I)| computed in exact integer arithmetic.
long long toral_periodic_point_count(const Mat& a, int period);

}  // namespace frameflow
