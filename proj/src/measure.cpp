#include "frameflow/measure.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "frameflow/lp.hpp"
#include "frameflow/shadow.hpp"

namespace frameflow {

void DiscreteMeasure::validate() const {
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw numeric_error("measure has a negative weight");
        total += w;
    }
    if (std::fabs(total - 1.0) > 1e-12)
        throw numeric_error("measure weights sum to " + std::to_string(total) + ", not 1");
    if (points.size() != weights.size())
        throw numeric_error("measure atom/weight count mismatch");
}

double atom_distance(const DiscreteMeasure& m, const Vec& a, const Vec& b) {
    if (m.geometry == GeometryKind::Torus) return torus_distance(a, b);
    return norm(a - b);
}

DiscreteMeasure empirical_measure(const SystemSpec& sys, const Trajectory& traj, double horizon) {
    if (traj.states.empty()) throw numeric_error("empirical_measure: empty trajectory");
    DiscreteMeasure m;
    m.dim = sys.ambient_dim;
    m.geometry = sys.geometry;
    m.provenance = Provenance::Empirical;

    if (sys.is_map()) {
        long n = static_cast<long>(horizon);
        if (n < 1) throw numeric_error("empirical_measure: horizon must be at least one step");
        if (static_cast<long>(traj.size()) < n)
            throw numeric_error("empirical_measure: trajectory shorter than horizon");
        for (long k = 0; k < n; ++k) {
            m.points.push_back(traj.states[k]);
            m.weights.push_back(1.0 / n);
        }
        m.origin = "empirical(N=" + std::to_string(n) + ")";
        return m;
    }

    const double h = traj.step;
    const long nsteps = static_cast<long>(std::llround(horizon / h));
    if (static_cast<long>(traj.size()) < nsteps + 1)
        throw numeric_error("empirical_measure: trajectory does not cover the horizon");
    const double total = nsteps * h;
    for (long k = 0; k <= nsteps; ++k) {
        double w = (k == 0 || k == nsteps) ? h / (2 * total) : h / total;
        m.points.push_back(traj.states[k]);
        m.weights.push_back(w);
    }
    m.origin = "empirical(T=" + std::to_string(total) + ")";
    return m;
}

DiscreteMeasure periodic_measure(const SystemSpec& sys, const PeriodicOrbit& orbit,
                                 double flow_step) {
    if (!orbit.verified || orbit.residual > 1e-10)
        throw numeric_error("periodic_measure: orbit not verified (residual " +
                            std::to_string(orbit.residual) + ")");
    DiscreteMeasure m;
    m.dim = sys.ambient_dim;
    m.geometry = sys.geometry;
    m.provenance = Provenance::Periodic;
    m.origin = "periodic(period=" + std::to_string(orbit.period) + ")";

    if (sys.is_map()) {
        long p = static_cast<long>(orbit.period);
        if (!orbit.points.empty()) {
            // the stored cycle avoids re-amplifying the closure defect
            for (const Vec& w : orbit.points) {
                m.points.push_back(w);
                m.weights.push_back(1.0 / p);
            }
            return m;
        }
        Vec w = orbit.point;
        for (long k = 0; k < p; ++k) {
            m.points.push_back(w);
            m.weights.push_back(1.0 / p);
            w = evolve_map(sys, std::move(w), 1);
        }
        return m;
    }

    const long nsteps = std::max<long>(1, std::lround(orbit.period / flow_step));
    const double h = orbit.period / nsteps;
    Vec w = orbit.point;
    std::vector<Vec> none;
    for (long k = 0; k < nsteps; ++k) {
        m.points.push_back(w);
        m.weights.push_back(1.0 / nsteps);
        flow_step_with_tangents(sys, w, none, h);
    }
    return m;
}

double integrate(const DiscreteMeasure& m, const Observable& f) {
    double s = 0.0;
    for (size_t i = 0; i < m.points.size(); ++i) s += m.weights[i] * f.eval(m.points[i]);
    return s;
}

DiscreteMeasure coarsen_measure(const DiscreteMeasure& m, int cells_per_dim) {
    if (cells_per_dim < 1) throw numeric_error("coarsen_measure: need at least one cell");
    double lo = 0.0, hi = 1.0;
    if (m.geometry == GeometryKind::Box) {
        for (const Vec& p : m.points)
            for (double x : p) {
                lo = std::min(lo, x);
                hi = std::max(hi, x);
            }
        hi += 1e-9;
    }
    const double width = (hi - lo) / cells_per_dim;

    std::map<std::vector<long>, std::pair<Vec, double>> cells;  // centroid accum, weight
    for (size_t i = 0; i < m.points.size(); ++i) {
        std::vector<long> key(m.dim);
        for (int d = 0; d < m.dim; ++d) {
            double x = m.points[i][d];
            if (m.geometry == GeometryKind::Torus) x -= std::floor(x);
            key[d] = std::min<long>(cells_per_dim - 1,
                                    static_cast<long>(std::floor((x - lo) / width)));
        }
        auto& [centroid, weight] = cells[key];
        if (centroid.empty()) centroid.assign(m.dim, 0.0);
        // centroids are fine within a cell even on the torus: cells never
        // straddle the wrap line
        for (int d = 0; d < m.dim; ++d) {
            double x = m.points[i][d];
            if (m.geometry == GeometryKind::Torus) x -= std::floor(x);
            centroid[d] += m.weights[i] * x;
        }
        weight += m.weights[i];
    }

    DiscreteMeasure out;
    out.dim = m.dim;
    out.geometry = m.geometry;
    out.provenance = m.provenance;
    out.origin = m.origin + "|coarsened";
    for (auto& [key, cw] : cells) {
        auto& [centroid, weight] = cw;
        if (weight <= 0.0) continue;
        Vec p = (1.0 / weight) * centroid;
        out.points.push_back(std::move(p));
        out.weights.push_back(weight);
    }
    return out;
}

DiscreteMeasure pushforward(const SystemSpec& sys, const DiscreteMeasure& m) {
    DiscreteMeasure out = m;
    for (Vec& p : out.points) p = evolve_map(sys, std::move(p), 1);
    return out;
}

namespace {

struct BlInstance {
    std::vector<Vec> points;
    Vec signed_weight;        // m1 - m2 per point
    std::vector<double> dist; // dense n*n pairwise distances
    int n = 0;
};

/// Shared preparation: validate, coarsen oversized supports, merge the two
/// supports (folding atoms that coincide to 1e-14), drop zero-weight relay
/// points (pairwise constraints already connect every pair directly, so
/// relays never bind), and tabulate distances.
BlInstance prepare_instance(const DiscreteMeasure& m1, const DiscreteMeasure& m2,
                            const BlOptions& opts) {
    if (m1.dim != m2.dim || m1.geometry != m2.geometry)
        throw numeric_error("bl_distance: measures live in different geometries");
    m1.validate();
    m2.validate();

    const DiscreteMeasure* a = &m1;
    const DiscreteMeasure* b = &m2;
    DiscreteMeasure ca, cb;
    if (m1.size() + m2.size() > static_cast<size_t>(opts.max_union_support)) {
        int per_measure = opts.max_union_support / 2;
        int cells = std::max(2, static_cast<int>(std::floor(
                                    std::pow(static_cast<double>(per_measure),
                                             1.0 / m1.dim))));
        ca = coarsen_measure(m1, cells);
        cb = coarsen_measure(m2, cells);
        a = &ca;
        b = &cb;
    }

    BlInstance inst;
    auto add = [&](const Vec& p, double w) {
        for (size_t i = 0; i < inst.points.size(); ++i) {
            if (atom_distance(m1, inst.points[i], p) < 1e-14) {
                inst.signed_weight[i] += w;
                return;
            }
        }
        inst.points.push_back(p);
        inst.signed_weight.push_back(w);
    };
    for (size_t i = 0; i < a->points.size(); ++i) add(a->points[i], a->weights[i]);
    for (size_t i = 0; i < b->points.size(); ++i) add(b->points[i], -b->weights[i]);

    std::vector<Vec> pts;
    Vec wts;
    for (size_t i = 0; i < inst.points.size(); ++i)
        if (std::fabs(inst.signed_weight[i]) > 1e-16) {
            pts.push_back(std::move(inst.points[i]));
            wts.push_back(inst.signed_weight[i]);
        }
    inst.points = std::move(pts);
    inst.signed_weight = std::move(wts);
    inst.n = static_cast<int>(inst.points.size());

    inst.dist.assign(static_cast<size_t>(inst.n) * inst.n, 0.0);
    for (int i = 0; i < inst.n; ++i)
        for (int j = i + 1; j < inst.n; ++j) {
            double d = atom_distance(m1, inst.points[i], inst.points[j]);
            inst.dist[static_cast<size_t>(i) * inst.n + j] = d;
            inst.dist[static_cast<size_t>(j) * inst.n + i] = d;
        }
    return inst;
}

/// Minimum cost of transporting the positive part of the signed weights to
/// the negative part at per-unit cost min(b*d_ij, two_a): the LP dual of
/// the inner problem at a fixed budget split. Successive shortest paths
/// with node potentials.
double transport_min_cost(const BlInstance& inst, double two_a, double b) {
    std::vector<int> src, snk;
    for (int i = 0; i < inst.n; ++i)
        (inst.signed_weight[i] > 0 ? src : snk).push_back(i);
    const int ns = static_cast<int>(src.size());
    const int nt = static_cast<int>(snk.size());
    if (ns == 0 || nt == 0) return 0.0;

    Vec supply(ns), demand(nt);
    for (int i = 0; i < ns; ++i) supply[i] = inst.signed_weight[src[i]];
    for (int j = 0; j < nt; ++j) demand[j] = -inst.signed_weight[snk[j]];

    auto cost = [&](int i, int j) {
        return std::min(b * inst.dist[static_cast<size_t>(src[i]) * inst.n + snk[j]], two_a);
    };

    const int nodes = ns + nt;  // sources first, then sinks
    Vec potential(nodes, 0.0);
    std::vector<double> flow(static_cast<size_t>(ns) * nt, 0.0);
    const double mass_eps = 1e-15;

    for (long safety = 0;; ++safety) {
        if (safety > 64L * (ns + nt) * (ns + nt))
            throw numeric_error("bl_distance: transportation solver stalled");
        bool any_supply = false;
        for (int i = 0; i < ns; ++i)
            if (supply[i] > mass_eps) { any_supply = true; break; }
        bool any_demand = false;
        for (int j = 0; j < nt; ++j)
            if (demand[j] > mass_eps) { any_demand = true; break; }
        // weight sums may disagree by ~1e-12; leftover mass is worth at
        // most that much in value and is dropped
        if (!any_supply || !any_demand) break;

        // Dijkstra over the residual graph with reduced costs; the first
        // settled sink with open demand is the augmentation target
        Vec d(nodes, 1e300);
        std::vector<int> prev(nodes, -1);
        std::vector<bool> done(nodes, false);
        for (int i = 0; i < ns; ++i)
            if (supply[i] > mass_eps) d[i] = 0.0;
        int target = -1;
        for (int it = 0; it < nodes; ++it) {
            int u = -1;
            for (int v = 0; v < nodes; ++v)
                if (!done[v] && (u < 0 || d[v] < d[u])) u = v;
            if (u < 0 || d[u] >= 1e300) break;
            done[u] = true;
            if (u >= ns && demand[u - ns] > mass_eps) {
                target = u - ns;
                break;
            }
            if (u < ns) {
                for (int j = 0; j < nt; ++j) {
                    if (done[ns + j]) continue;
                    double rc = cost(u, j) + potential[u] - potential[ns + j];
                    if (d[u] + rc < d[ns + j] - 1e-15) {
                        d[ns + j] = d[u] + rc;
                        prev[ns + j] = u;
                    }
                }
            } else {
                int j = u - ns;
                for (int i = 0; i < ns; ++i) {
                    if (done[i]) continue;
                    if (flow[static_cast<size_t>(i) * nt + j] <= mass_eps) continue;
                    double rc = -cost(i, j) + potential[u] - potential[i];
                    if (d[u] + rc < d[i] - 1e-15) {
                        d[i] = d[u] + rc;
                        prev[i] = u;
                    }
                }
            }
        }
        if (target < 0)
            throw numeric_error("bl_distance: transportation network disconnected");

        // settled nodes carry exact distances; everyone else (including
        // unreached nodes) shifts by the target distance to keep every
        // residual reduced cost nonnegative for the next round
        const double dt = d[ns + target];
        for (int v = 0; v < nodes; ++v) potential[v] += std::min(d[v], dt);

        // bottleneck along the alternating path
        double push = demand[target];
        for (int v = ns + target; prev[v] >= 0; v = prev[v]) {
            int u = prev[v];
            if (v >= ns) {
                // u is a source feeding sink v; path start caps at its supply
                if (prev[u] < 0) push = std::min(push, supply[u]);
            } else {
                push = std::min(push, flow[static_cast<size_t>(v) * nt + (u - ns)]);
            }
        }
        for (int v = ns + target; prev[v] >= 0; v = prev[v]) {
            int u = prev[v];
            if (v >= ns)
                flow[static_cast<size_t>(u) * nt + (v - ns)] += push;
            else
                flow[static_cast<size_t>(v) * nt + (u - ns)] -= push;
        }
        int path_start = ns + target;
        while (prev[path_start] >= 0) path_start = prev[path_start];
        supply[path_start] -= push;
        demand[target] -= push;
    }

    double total = 0.0;
    for (int i = 0; i < ns; ++i)
        for (int j = 0; j < nt; ++j) {
            double f = flow[static_cast<size_t>(i) * nt + j];
            if (f > 0) total += f * cost(i, j);
        }
    return total;
}

}  // namespace

double bl_distance(const DiscreteMeasure& m1, const DiscreteMeasure& m2, const BlOptions& opts) {
    BlInstance inst = prepare_instance(m1, m2, opts);
    if (inst.n == 0) return 0.0;

    // maximize the concave value over the budget split a = 1-t, b = t;
    // small instances run to full precision, large ones stop well inside
    // any tolerance the trend checks care about
    auto value = [&](double t) { return transport_min_cost(inst, 2 * (1 - t), t); };
    double lo = 0.0, hi = 1.0;
    const double theta_tol = inst.n <= 64 ? 1e-14 : 1e-6;
    const double ratio = (std::sqrt(5.0) - 1) / 2;
    double x1 = hi - ratio * (hi - lo), x2 = lo + ratio * (hi - lo);
    double f1 = value(x1), f2 = value(x2);
    for (int it = 0; it < 80 && hi - lo > theta_tol; ++it) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = value(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = value(x1);
        }
    }
    return std::max(0.0, std::max(f1, f2));
}

double bl_distance_lp(const DiscreteMeasure& m1, const DiscreteMeasure& m2,
                      const BlOptions& opts) {
    BlInstance inst = prepare_instance(m1, m2, opts);
    const int n = inst.n;
    if (n == 0) return 0.0;

    // Variables: s_i = f_i + a (so everything is nonnegative), then a (sup
    // budget) and b (Lipschitz budget). The shift leaves differences and
    // the objective unchanged up to the -a*sum(c) correction.
    const int va = n, vb = n + 1;
    double weight_sum = 0.0;
    for (double c : inst.signed_weight) weight_sum += c;
    LinearProgram lp;
    lp.nvars = n + 2;
    lp.free_vars = false;
    lp.objective.assign(n + 2, 0.0);
    for (int i = 0; i < n; ++i) lp.objective[i] = inst.signed_weight[i];
    lp.objective[va] = -weight_sum;

    for (int i = 0; i < n; ++i) {
        Vec row(n + 2, 0.0);
        row[i] = 1.0;
        row[va] = -2.0;
        lp.add_row(std::move(row), 0.0);  // s_i <= 2a  (f_i <= a)
    }
    {
        Vec row(n + 2, 0.0);
        row[va] = 1.0;
        row[vb] = 1.0;
        lp.add_row(std::move(row), 1.0);  // a + b <= 1
    }

    const std::vector<double>& dist = inst.dist;
    std::set<std::pair<int, int>> have;
    auto add_cut = [&](int i, int j) {
        if (!have.insert({i, j}).second) return false;
        Vec row(n + 2, 0.0);
        row[i] = 1.0;
        row[j] = -1.0;
        row[vb] = -dist[static_cast<size_t>(i) * n + j];
        lp.add_row(std::move(row), 0.0);  // f_i - f_j <= b d_ij
        return true;
    };

    // prime with nearest-neighbor constraints; those are the ones that
    // usually bind, the exactness sweep below generates the rest
    const int knn = std::min(4, n - 1);
    for (int i = 0; i < n; ++i) {
        std::vector<int> order;
        for (int j = 0; j < n; ++j)
            if (j != i) order.push_back(j);
        std::partial_sort(order.begin(), order.begin() + knn, order.end(), [&](int x, int y) {
            return dist[static_cast<size_t>(i) * n + x] < dist[static_cast<size_t>(i) * n + y];
        });
        for (int k = 0; k < knn; ++k) {
            add_cut(i, order[k]);
            add_cut(order[k], i);
        }
    }

    for (int round = 0; round < 300; ++round) {
        LpSolution sol = solve_lp_max(lp);
        double bval = sol.x[vb];

        struct Violation {
            double amount;
            int i, j;
        };
        std::vector<Violation> violations;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (i == j) continue;
                double d = dist[static_cast<size_t>(i) * n + j];
                double excess = sol.x[i] - sol.x[j] - bval * d;
                if (excess > 1e-11) violations.push_back({excess, i, j});
            }
        if (violations.empty()) return std::max(0.0, sol.value);

        std::sort(violations.begin(), violations.end(),
                  [](const Violation& x, const Violation& y) { return x.amount > y.amount; });
        size_t target = std::min<size_t>(violations.size(), static_cast<size_t>(4) * n);
        size_t fresh = 0;
        for (size_t v = 0; v < violations.size() && fresh < target; ++v)
            if (add_cut(violations[v].i, violations[v].j)) ++fresh;
        if (fresh == 0) {
            // every violated pair is already present: the solver is at its
            // numerical floor, and the value is within the violation of exact
            if (violations.front().amount < 1e-8) return std::max(0.0, sol.value);
            throw numeric_error("bl_distance: constraint generation stalled");
        }
    }
    throw numeric_error("bl_distance: constraint generation did not converge");
}

}  // namespace frameflow
