#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "frameflow/linalg.hpp"

namespace frameflow {

enum class SystemKind { Map, Flow };
enum class GeometryKind { Torus, Box };

/// A dynamical system: a discrete diffeomorphism with its Jacobian, or a
/// nonsingular vector field with its derivative matrix. States are plain
/// coordinate vectors of length ambient_dim; torus geometry identifies
/// coordinates mod 1.
struct SystemSpec {
    SystemKind kind = SystemKind::Map;
    int ambient_dim = 0;
    GeometryKind geometry = GeometryKind::Torus;
    std::string name;

    std::function<Vec(const Vec&)> evaluate;  // map image, or velocity S(w)
    std::function<Mat(const Vec&)> jacobian;  // Dg(w), or S'(w)
    std::function<Vec(const Vec&)> inverse;   // maps only, may be empty
    std::function<Vec(Vec)> reduce_hook;      // extra state canonicalization

    bool is_map() const { return kind == SystemKind::Map; }
    bool is_flow() const { return kind == SystemKind::Flow; }
    bool has_inverse() const { return static_cast<bool>(inverse); }

    /// Dimension the transversal/tangent machinery works in: full ambient
    /// dimension for maps, velocity-orthogonal hyperplane for flows.
    int transversal_dim() const { return is_map() ? ambient_dim : ambient_dim - 1; }
};

/// Field strength below this is treated as a singularity of the flow.
inline constexpr double kSingularFieldThreshold = 1e-10;

Vec reduce_state(const SystemSpec& sys, Vec w);

/// Distance in the system's geometry (torus: coordinate-wise shortest
/// representative, then Euclidean norm).
double state_distance(const SystemSpec& sys, const Vec& a, const Vec& b);
double torus_distance(const Vec& a, const Vec& b);

/// Shortest displacement b - a in the system's geometry.
Vec state_displacement(const SystemSpec& sys, const Vec& a, const Vec& b);

// ---- evolution ----

/// Fixed-step classical RK4 over time t (negative t integrates the reversed
/// field). Throws numeric_error on singular field or non-finite state.
Vec evolve_flow(const SystemSpec& sys, Vec w, double t, double step);

/// One map application (n=1) or n-fold composition; n < 0 requires an
/// explicit inverse.
Vec evolve_map(const SystemSpec& sys, Vec w, long n);

struct TangentResult {
    Vec state;
    Vec tangent;
};

/// Pushes (w, x) through the extended system: the flow plus its variational
/// equation, or the chained Jacobian cocycle for maps. Tangent vectors are
/// never reduced mod 1; they live in the covering space.
TangentResult evolve_tangent_flow(const SystemSpec& sys, Vec w, Vec x, double t, double step);
TangentResult evolve_tangent_map(const SystemSpec& sys, Vec w, Vec x, long n);

/// One RK4 step of the flow carrying any number of tangent columns along the
/// same base trajectory (columns share every stage evaluation).
void flow_step_with_tangents(const SystemSpec& sys, Vec& w, std::vector<Vec>& cols, double h);

/// One map step carrying tangent columns: w <- g(w), col <- Dg(w_old) col.
void map_step_with_tangents(const SystemSpec& sys, Vec& w, std::vector<Vec>& cols);

// ---- trajectories ----

struct Trajectory {
    std::vector<Vec> states;
    std::vector<double> times;
    double step = 0.0;  // flows only

    size_t size() const { return states.size(); }
};

Trajectory iterate_map(const SystemSpec& sys, Vec w0, long n);
Trajectory sample_flow(const SystemSpec& sys, Vec w0, double total_time, double step);

// ---- suspension ----

/// Suspension of a linear map as a genuine smooth flow on the covering
/// space: velocity ((1/roof) L x, 1) with exp(L) the base matrix, so the
/// time-roof map over the zero section is the base map. Only linear base
/// maps with a real positive spectrum are supported.
struct SuspensionSystem {
    SystemSpec base;
    double roof = 1.0;
    Mat log_generator;  // L with exp(L) = base matrix
    SystemSpec flow;

    /// Reduces a covering-space state to fundamental-domain coordinates:
    /// fiber mod roof, base mod 1 when the base map is toral.
    Vec canonical(Vec w) const;
};

SuspensionSystem suspend(const SystemSpec& map, double roof);

// ---- registry ----

struct SystemOptions {
    double eps = 0.01;          // cat-perturbed strength
    Vec diag_entries = {2.0, 0.5};
};

/// Built-in systems: "cat", "cat-perturbed", "diag[:a,b,...]",
/// "rotation-flow", "constant-flow", "suspension:<map-name>"; anything else
/// is treated as a path to a JSON system document.
SystemSpec make_system(const std::string& name, const SystemOptions& opts = {});

/// Loads {kind, dimension, geometry, matrix | expressions} from a JSON file.
SystemSpec load_system_json(const std::string& path);
SystemSpec system_from_json_text(const std::string& text, const std::string& name);

/// Linear map w -> M w (mod 1 on the torus); attaches the inverse when M is
/// invertible (and integer-unimodular in the torus case).
SystemSpec make_linear_map(const Mat& m, GeometryKind geom, const std::string& name);

/// A reasonable deterministic initial state for registry systems (generic
/// torus point, bounded orbit for the built-in flows, origin otherwise).
Vec default_seed_state(const SystemSpec& sys);

/// The inverse system of an invertible map: evaluate/jacobian/inverse all
/// swapped appropriately (Jacobian of g^{-1} via LU solve at the preimage).
SystemSpec inverse_system(const SystemSpec& sys);

}  // namespace frameflow
