#pragma once

#include <functional>
#include <string>
#include <vector>

#include "frameflow/system.hpp"

namespace frameflow {

enum class Provenance { Empirical, Periodic, Custom };

/// Finitely supported probability measure: weighted atoms in a fixed
/// geometry. Weights are nonnegative and sum to one.
struct DiscreteMeasure {
    int dim = 0;
    GeometryKind geometry = GeometryKind::Torus;
    std::vector<Vec> points;
    Vec weights;
    Provenance provenance = Provenance::Custom;
    std::string origin;

    size_t size() const { return points.size(); }
    void validate() const;  // throws on weight-sum or sign violations
};

/// Test function with declared sup and Lipschitz bounds.
struct Observable {
    std::function<double(const Vec&)> eval;
    double lip_bound = 0.0;
    double sup_bound = 0.0;
};

double atom_distance(const DiscreteMeasure& m, const Vec& a, const Vec& b);

/// Time-average measure of an orbit segment: equal weights over the first
/// N samples for maps (horizon = N steps), trapezoid time weights for
/// flows (horizon = T).
DiscreteMeasure empirical_measure(const SystemSpec& sys, const Trajectory& traj, double horizon);

struct PeriodicOrbit;  // shadow.hpp

/// Uniform measure over a verified periodic orbit; flows are sampled along
/// one period at the given step.
DiscreteMeasure periodic_measure(const SystemSpec& sys, const PeriodicOrbit& orbit,
                                 double flow_step = 1e-2);

double integrate(const DiscreteMeasure& m, const Observable& f);

struct BlOptions {
    /// Above this union-support size the inputs are coarsened onto a
    /// weighted-centroid grid before the exact LP runs. Moving an atom of
    /// mass w by distance r changes the BL value by at most w*r, so the
    /// induced error is bounded by the largest within-cell radius.
    int max_union_support = 700;
};

/// Bounded-Lipschitz distance sup { m1(f) - m2(f) : |f|_inf + Lip(f) <= 1 },
/// evaluated exactly on the union of supports. The dual of the inner LP is
/// a transportation problem with per-unit cost min(b*d_ij, 2a), solved by
/// successive shortest paths; the outer budget split is a golden-section
/// descent over the concave one-parameter family.
double bl_distance(const DiscreteMeasure& m1, const DiscreteMeasure& m2, const BlOptions& opts = {});

/// Reference evaluation of the same supremum as an explicit finite LP over
/// the test-function values (dense simplex with lazily generated Lipschitz
/// rows). Slower; kept as the independent cross-check of bl_distance.
double bl_distance_lp(const DiscreteMeasure& m1, const DiscreteMeasure& m2,
                      const BlOptions& opts = {});

/// Grid coarsening used by bl_distance for oversized supports; exposed for
/// tests. cells_per_dim^dim cells, atoms replaced by per-cell weighted
/// centroids; max within-cell radius is half the cell diagonal.
DiscreteMeasure coarsen_measure(const DiscreteMeasure& m, int cells_per_dim);

/// Pushes every atom one step forward under the map and renormalizes;
/// periodic measures are invariant under this.
DiscreteMeasure pushforward(const SystemSpec& sys, const DiscreteMeasure& m);

}  // namespace frameflow
