#include "frameflow/shadow.hpp"

#include "frameflow/frame.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace frameflow {

// ---- recurrence scan ----

namespace {

struct CellKey {
    std::vector<long> idx;
    bool operator<(const CellKey& o) const { return idx < o.idx; }
};

}  // namespace

std::vector<RecurrentSegment> find_recurrences(const SystemSpec& sys, const Trajectory& traj,
                                               double alpha, double min_span, double max_span,
                                               size_t max_hits) {
    if (alpha <= 0.0) throw numeric_error("find_recurrences: alpha must be positive");
    const long n = static_cast<long>(traj.size());
    const bool is_map = sys.is_map();
    const double dt = is_map ? 1.0 : traj.step;
    const long min_span_steps = std::max<long>(1, static_cast<long>(std::ceil(min_span / dt - 1e-9)));
    const long max_span_steps =
        max_span >= 1e17 ? LONG_MAX : static_cast<long>(std::floor(max_span / dt + 1e-9));
    const bool torus = sys.geometry == GeometryKind::Torus;
    const int dim = sys.ambient_dim;

    // cell lists at resolution alpha; on the torus cell indices wrap
    const long cells = torus ? std::max<long>(1, static_cast<long>(std::floor(1.0 / alpha))) : 0;
    auto cell_of = [&](const Vec& w) {
        CellKey key;
        key.idx.resize(dim);
        for (int d = 0; d < dim; ++d) {
            double x = w[d];
            long c = static_cast<long>(std::floor(x / alpha));
            if (torus) {
                c = static_cast<long>(std::floor((x - std::floor(x)) * cells));
                c = std::min(c, cells - 1);
            }
            key.idx[d] = c;
        }
        return key;
    };

    std::map<CellKey, std::vector<long>> grid;
    struct RawHit {
        long start, span;
        double gap;
    };
    std::vector<RawHit> hits;

    std::vector<CellKey> neighborhood;
    for (long j = 0; j < n; ++j) {
        const Vec& wj = traj.states[j];
        CellKey center = cell_of(wj);
        // enumerate neighbor cells (3^dim of them)
        neighborhood.clear();
        std::vector<long> offs(dim, -1);
        for (;;) {
            CellKey k = center;
            for (int d = 0; d < dim; ++d) {
                k.idx[d] += offs[d];
                if (torus) k.idx[d] = ((k.idx[d] % cells) + cells) % cells;
            }
            neighborhood.push_back(std::move(k));
            int d = 0;
            for (; d < dim; ++d) {
                if (++offs[d] <= 1) break;
                offs[d] = -1;
            }
            if (d == dim) break;
        }
        for (const CellKey& k : neighborhood) {
            auto it = grid.find(k);
            if (it == grid.end()) continue;
            for (long i : it->second) {
                long span = j - i;
                if (span < min_span_steps || span > max_span_steps) continue;
                double gap = state_distance(sys, traj.states[i], wj);
                if (gap < alpha) {
                    hits.push_back({i, span, gap});
                    if (hits.size() >= max_hits) goto scan_done;
                }
            }
        }
        grid[center].push_back(j);
    }
scan_done:

    // per-span dedup: overlapping windows of the same span keep the best gap
    std::map<long, std::vector<RawHit>> by_span;
    for (const RawHit& h : hits) by_span[h.span].push_back(h);
    std::vector<RecurrentSegment> out;
    for (auto& [span, group] : by_span) {
        std::sort(group.begin(), group.end(),
                  [](const RawHit& a, const RawHit& b) { return a.start < b.start; });
        size_t i = 0;
        while (i < group.size()) {
            RawHit best = group[i];
            long window_end = group[i].start + span;
            size_t j = i + 1;
            while (j < group.size() && group[j].start <= window_end) {
                if (group[j].gap < best.gap) best = group[j];
                ++j;
            }
            RecurrentSegment seg;
            seg.start = traj.states[best.start];
            seg.start_index = best.start;
            seg.span_steps = span;
            seg.span_time = span * dt;
            seg.gap = best.gap;
            out.push_back(std::move(seg));
            i = j;
        }
    }
    std::sort(out.begin(), out.end(), [](const RecurrentSegment& a, const RecurrentSegment& b) {
        return a.span_steps != b.span_steps ? a.span_steps < b.span_steps
                                            : a.start_index < b.start_index;
    });
    return out;
}

// ---- Newton refinement ----

namespace {

Mat monodromy_along_map_orbit(const SystemSpec& sys, Vec p, long m) {
    Mat mono = Mat::identity(sys.ambient_dim);
    for (long i = 0; i < m; ++i) {
        mono = sys.jacobian(p) * mono;
        p = evolve_map(sys, std::move(p), 1);
    }
    return mono;
}

void fill_orbit_data_from_monodromy(PeriodicOrbit& orbit, const Mat& mono) {
    orbit.multipliers = eigenvalue_magnitudes(mono);
    orbit.exponents.clear();
    for (double m : orbit.multipliers) {
        if (m <= 0.0)
            throw numeric_error("periodic orbit has a zero monodromy multiplier");
        orbit.exponents.push_back(std::log(m) / orbit.period);
    }
    orbit.index = 0;
    for (double e : orbit.exponents)
        if (e < 0.0) ++orbit.index;
}

/// Largest one-step closure defect of a cyclic point sequence.
double cycle_residual(const SystemSpec& sys, const std::vector<Vec>& pts) {
    double worst = 0.0;
    for (size_t k = 0; k < pts.size(); ++k) {
        Vec image = evolve_map(sys, pts[k], 1);
        worst = std::max(worst, state_distance(sys, image, pts[(k + 1) % pts.size()]));
    }
    return worst;
}

/// Per-column growth rates over one period of the stored cycle via the
/// Gram-Schmidt frame flow; sound for long cycles where the raw Jacobian
/// product overflows the exactly-representable integer range.
Vec cycle_rates_by_frame_flow(const SystemSpec& sys, const std::vector<Vec>& pts) {
    const int n = sys.ambient_dim;
    std::vector<Vec> cols;
    for (int i = 0; i < n; ++i) {
        Vec e(n, 0.0);
        e[i] = 1.0;
        cols.push_back(std::move(e));
    }
    Vec growth(n, 0.0);
    for (size_t k = 0; k < pts.size(); ++k) {
        Mat j = sys.jacobian(pts[k]);
        for (Vec& c : cols) c = j * c;
        GramSchmidtResult gs = gram_schmidt(cols);
        cols = std::move(gs.frame);
        for (int i = 0; i < n; ++i) growth[i] += gs.log_norms[i];
    }
    Vec rates(n);
    for (int i = 0; i < n; ++i) rates[i] = growth[i] / static_cast<double>(pts.size());
    std::sort(rates.begin(), rates.end());
    return rates;
}

PeriodicOrbit refine_periodic_map(const SystemSpec& sys, const RecurrentSegment& seg,
                                  const RefineOptions& opts) {
    long m = seg.span_steps;
    const int n = sys.ambient_dim;
    if (m > 1000)
        throw numeric_error("refine_periodic: segment span " + std::to_string(m) +
                            " exceeds the shooting budget (1000)");

    // multiple shooting on the whole cycle: one-step defects stay at the
    // roundoff floor for any span, unlike the m-step composition whose
    // conditioning grows with the expansion rate to the m-th power
    std::vector<Vec> pts(m);
    pts[0] = reduce_state(sys, seg.start);
    for (long k = 1; k < m; ++k) pts[k] = evolve_map(sys, pts[k - 1], 1);

    auto defects = [&](const std::vector<Vec>& q) {
        std::vector<Vec> r(m);
        for (long k = 0; k < m; ++k)
            r[k] = state_displacement(sys, q[(k + 1) % m], evolve_map(sys, q[k], 1));
        return r;
    };
    auto worst_defect = [&](const std::vector<Vec>& r) {
        double w = 0.0;
        for (const Vec& v : r) w = std::max(w, norm(v));
        return w;
    };

    std::vector<Vec> res = defects(pts);
    int iters = 0;
    while (worst_defect(res) > opts.tol) {
        if (++iters > opts.max_iter)
            throw numeric_error("refine_periodic: Newton did not converge (residual " +
                                std::to_string(worst_defect(res)) + ")");
        // block system: Dg(p_k) d_k - d_{k+1} = -r_k
        const int dim = static_cast<int>(m) * n;
        Mat jac(dim, dim);
        Vec rhs(dim);
        for (long k = 0; k < m; ++k) {
            Mat dg = sys.jacobian(pts[k]);
            long kn = (k + 1) % m;
            for (int r = 0; r < n; ++r) {
                for (int c = 0; c < n; ++c) jac(k * n + r, k * n + c) = dg(r, c);
                jac(k * n + r, kn * n + r) -= 1.0;
                rhs[k * n + r] = -res[k][r];
            }
        }
        LuFactors f;
        try {
            f = lu_factor(jac);
        } catch (const numeric_error&) {
            Mat mono = monodromy_along_map_orbit(sys, pts[0], m);
            auto mags = eigenvalue_magnitudes(mono);
            double nearest = mags[0];
            for (double v : mags)
                if (std::fabs(v - 1.0) < std::fabs(nearest - 1.0)) nearest = v;
            throw numeric_error("refine_periodic: singular Newton matrix, near-neutral "
                                "multiplier |lambda| = " + std::to_string(nearest));
        }
        Vec delta = lu_solve(f, rhs);
        for (long k = 0; k < m; ++k) {
            for (int r = 0; r < n; ++r) pts[k][r] += delta[k * n + r];
            pts[k] = reduce_state(sys, std::move(pts[k]));
        }
        std::vector<Vec> next = defects(pts);
        if (worst_defect(next) > 0.5)
            throw numeric_error("refine_periodic: Newton diverged (residual " +
                                std::to_string(worst_defect(next)) + ")");
        res = std::move(next);
    }

    // reduce to the minimal period using the stored cycle
    for (long d = 1; d < m; ++d) {
        if (m % d != 0) continue;
        double worst = 0.0;
        for (long k = 0; k < m; ++k)
            worst = std::max(worst, state_distance(sys, pts[(k + d) % m], pts[k]));
        if (worst < 1e-8) {
            pts.resize(d);
            m = d;
            break;
        }
    }

    PeriodicOrbit orbit;
    orbit.points = pts;
    orbit.point = pts[0];
    orbit.period = static_cast<double>(m);
    orbit.residual = cycle_residual(sys, pts);
    orbit.is_map_orbit = true;
    // exact Jacobian products stay well conditioned only while their
    // entries remain exactly representable; long cycles go through the
    // frame flow instead
    if (m <= 25) {
        fill_orbit_data_from_monodromy(orbit, monodromy_along_map_orbit(sys, pts[0], m));
    } else {
        orbit.exponents = cycle_rates_by_frame_flow(sys, pts);
        orbit.multipliers.clear();
        for (double e : orbit.exponents) orbit.multipliers.push_back(std::exp(e * m));
        orbit.index = 0;
        for (double e : orbit.exponents)
            if (e < 0.0) ++orbit.index;
    }
    orbit.verified = orbit.residual <= std::max(opts.tol, 1e-10);
    return orbit;
}

/// First crossing of the section {<w - anchor, normal> = 0} in the positive
/// direction after t_min; returns the crossing state and time.
struct SectionCrossing {
    Vec state;
    double time = 0.0;
};

SectionCrossing next_section_crossing(const SystemSpec& sys, Vec w, const Vec& anchor,
                                      const Vec& normal, double t_min, double step,
                                      double t_max) {
    auto height = [&](const Vec& q) { return dot(q - anchor, normal); };
    double t = 0.0;
    Vec prev = w;
    double h_prev = height(w);
    std::vector<Vec> none;
    while (t < t_max) {
        Vec next = prev;
        flow_step_with_tangents(sys, next, none, step);
        double t_next = t + step;
        double h_next = height(next);
        // h_prev must be genuinely negative: a start sitting on the section
        // carries roundoff of either sign
        if (t_next > t_min && h_prev < -1e-13 && h_next >= 0.0) {
            // bracketing step found; bisect then polish with Newton in time
            double lo = 0.0, hi = step;
            Vec base = prev;
            for (int it = 0; it < 60; ++it) {
                double mid = 0.5 * (lo + hi);
                Vec q = evolve_flow(sys, base, mid, step);
                if (height(q) < 0.0)
                    lo = mid;
                else
                    hi = mid;
            }
            double tc = 0.5 * (lo + hi);
            Vec q = evolve_flow(sys, base, tc, step);
            for (int it = 0; it < 8; ++it) {
                double deriv = dot(sys.evaluate(q), normal);
                if (std::fabs(deriv) < 1e-14) break;
                double dt = -height(q) / deriv;
                tc += dt;
                q = evolve_flow(sys, base, tc, step);
                if (std::fabs(dt) < 1e-15) break;
            }
            return {q, t + tc};
        }
        prev = std::move(next);
        h_prev = h_next;
        t = t_next;
    }
    throw numeric_error("refine_periodic: no section return within the search horizon");
}

PeriodicOrbit refine_periodic_flow(const SystemSpec& sys, const RecurrentSegment& seg,
                                   const RefineOptions& opts) {
    const int n = sys.ambient_dim;
    Vec anchor = seg.start;
    Vec normal = normalized(sys.evaluate(anchor));

    // orthonormal basis of the section (the transversal space at the anchor)
    std::vector<Vec> basis;
    for (int i = 0; i < n; ++i) {
        Vec e(n, 0.0);
        e[i] = 1.0;
        Vec r = e;
        axpy(-dot(e, normal), normal, r);
        for (const Vec& b : basis) axpy(-dot(r, b), b, r);
        if (norm(r) > 1e-8) basis.push_back(normalized(r));
        if (static_cast<int>(basis.size()) == n - 1) break;
    }
    const int sd = static_cast<int>(basis.size());

    auto embed = [&](const Vec& y) {
        Vec w = anchor;
        for (int i = 0; i < sd; ++i) axpy(y[i], basis[i], w);
        return w;
    };
    auto coords = [&](const Vec& w) {
        Vec y(sd);
        for (int i = 0; i < sd; ++i) y[i] = dot(w - anchor, basis[i]);
        return y;
    };

    // how many section crossings make up one closing of the segment
    SectionCrossing first = next_section_crossing(sys, anchor, anchor, normal,
                                                  0.5 * opts.flow_step, opts.flow_step,
                                                  4.0 * seg.span_time + 10.0);
    long k = std::max<long>(1, std::lround(seg.span_time / first.time));
    const double t_min = 0.4 * first.time;

    auto return_map = [&](const Vec& y, double* time_out) {
        Vec w = embed(y);
        double total = 0.0;
        for (long i = 0; i < k; ++i) {
            SectionCrossing c = next_section_crossing(sys, w, anchor, normal, t_min,
                                                      opts.flow_step,
                                                      4.0 * seg.span_time + 10.0);
            w = c.state;
            total += c.time;
        }
        if (time_out) *time_out = total;
        return coords(w);
    };

    Vec y(sd, 0.0);
    double period = 0.0;
    double residual = 0.0;
    for (int it = 0;; ++it) {
        Vec ry = return_map(y, &period);
        residual = norm(ry - y);
        if (residual <= std::max(opts.tol, 1e-9)) break;
        if (it >= opts.max_iter)
            throw numeric_error("refine_periodic: section Newton did not converge (residual " +
                                std::to_string(residual) + ")");
        // placeholder kept adjacent to the loop for the k-reduction below
        // Jacobian of the return map by central differences
        Mat jac(sd, sd);
        const double fd = 1e-6;
        for (int c = 0; c < sd; ++c) {
            Vec yp = y, ym = y;
            yp[c] += fd;
            ym[c] -= fd;
            Vec rp = return_map(yp, nullptr);
            Vec rm = return_map(ym, nullptr);
            for (int r = 0; r < sd; ++r) jac(r, c) = (rp[r] - rm[r]) / (2 * fd);
        }
        Mat newton = jac - Mat::identity(sd);
        Vec delta = lu_solve(lu_factor(newton), ry - y);
        axpy(-1.0, delta, y);
    }

    // transversal monodromy: derivative of the k-fold return map
    Mat mono(sd, sd);
    const double fd = 1e-6;
    for (int c = 0; c < sd; ++c) {
        Vec yp = y, ym = y;
        yp[c] += fd;
        ym[c] -= fd;
        Vec rp = return_map(yp, nullptr);
        Vec rm = return_map(ym, nullptr);
        for (int r = 0; r < sd; ++r) mono(r, c) = (rp[r] - rm[r]) / (2 * fd);
    }

    PeriodicOrbit orbit;
    orbit.point = embed(y);
    orbit.period = period;
    orbit.residual = residual;
    orbit.is_map_orbit = false;
    fill_orbit_data_from_monodromy(orbit, mono);
    orbit.verified = true;
    return orbit;
}

/// Orthonormal basis of the hyperplane orthogonal to the unit vector.
std::vector<Vec> hyperplane_basis(const Vec& normal) {
    const int n = static_cast<int>(normal.size());
    std::vector<Vec> basis;
    for (int i = 0; i < n && static_cast<int>(basis.size()) < n - 1; ++i) {
        Vec e(n, 0.0);
        e[i] = 1.0;
        axpy(-dot(e, normal), normal, e);
        for (const Vec& b : basis) axpy(-dot(e, b), b, e);
        if (norm(e) > 1e-8) basis.push_back(normalized(e));
    }
    return basis;
}

}  // namespace

Mat flow_monodromy(const SystemSpec& sys, const PeriodicOrbit& orbit, double step) {
    if (orbit.is_map_orbit)
        throw numeric_error("flow_monodromy: orbit belongs to a map");
    const Vec& anchor = orbit.point;
    Vec normal = normalized(sys.evaluate(anchor));
    std::vector<Vec> basis = hyperplane_basis(normal);
    const int sd = static_cast<int>(basis.size());

    auto return_coords = [&](const Vec& y) {
        Vec w = anchor;
        for (int i = 0; i < sd; ++i) axpy(y[i], basis[i], w);
        SectionCrossing c = next_section_crossing(sys, w, anchor, normal, 0.5 * orbit.period,
                                                  step, 2.0 * orbit.period + 10.0);
        Vec out(sd);
        for (int i = 0; i < sd; ++i) out[i] = dot(c.state - anchor, basis[i]);
        return out;
    };

    Mat mono(sd, sd);
    const double fd = 1e-6;
    for (int c = 0; c < sd; ++c) {
        Vec yp(sd, 0.0), ym(sd, 0.0);
        yp[c] += fd;
        ym[c] -= fd;
        Vec rp = return_coords(yp);
        Vec rm = return_coords(ym);
        for (int r = 0; r < sd; ++r) mono(r, c) = (rp[r] - rm[r]) / (2 * fd);
    }
    return mono;
}

PeriodicOrbit refine_periodic(const SystemSpec& sys, const RecurrentSegment& seg,
                              const RefineOptions& opts) {
    if (seg.span_steps < 1) throw numeric_error("refine_periodic: empty segment");
    return sys.is_map() ? refine_periodic_map(sys, seg, opts)
                        : refine_periodic_flow(sys, seg, opts);
}

ShadowReport verify_shadow(const SystemSpec& sys, const Trajectory& traj,
                           const PeriodicOrbit& orbit, double eps) {
    ShadowReport rep;
    if (traj.states.empty()) return rep;
    double worst = -1.0, worst_t = 0.0;
    if (sys.is_map()) {
        long m = static_cast<long>(orbit.period);
        std::vector<Vec> cycle = orbit.points;
        if (cycle.empty()) {
            Vec p = orbit.point;
            for (long i = 0; i < m; ++i) {
                cycle.push_back(p);
                p = evolve_map(sys, std::move(p), 1);
            }
        }
        for (size_t t = 0; t < traj.size(); ++t) {
            double d = state_distance(sys, traj.states[t], cycle[t % m]);
            if (d > worst) { worst = d; worst_t = traj.times[t]; }
        }
    } else {
        Vec p = orbit.point;
        std::vector<Vec> none;
        for (size_t t = 0; t < traj.size(); ++t) {
            double d = state_distance(sys, traj.states[t], p);
            if (d > worst) { worst = d; worst_t = traj.times[t]; }
            if (t + 1 < traj.size()) flow_step_with_tangents(sys, p, none, traj.step);
        }
    }
    rep.worst_offset = worst;
    rep.worst_time = worst_t;
    rep.shadowed = worst < eps;
    return rep;
}

// ---- exact toral enumeration ----

namespace {

using IMat = std::vector<std::vector<long long>>;

IMat to_imat(const Mat& m) {
    IMat im(m.rows, std::vector<long long>(m.cols));
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) {
            double v = m(i, j);
            if (std::fabs(v - std::round(v)) > 1e-9)
                throw numeric_error("enumerate_periodic_toral: matrix must be integer");
            im[i][j] = static_cast<long long>(std::llround(v));
        }
    return im;
}

IMat imat_identity(int n) {
    IMat m(n, std::vector<long long>(n, 0));
    for (int i = 0; i < n; ++i) m[i][i] = 1;
    return m;
}

IMat imat_mul(const IMat& a, const IMat& b) {
    int n = static_cast<int>(a.size());
    IMat c(n, std::vector<long long>(n, 0));
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j) c[i][j] += a[i][k] * b[k][j];
    return c;
}

long long imat_det(IMat m) {
    // fraction-free (Bareiss) elimination
    int n = static_cast<int>(m.size());
    long long prev = 1;
    int sign = 1;
    for (int k = 0; k < n - 1; ++k) {
        if (m[k][k] == 0) {
            int piv = -1;
            for (int i = k + 1; i < n; ++i)
                if (m[i][k] != 0) { piv = i; break; }
            if (piv < 0) return 0;
            std::swap(m[k], m[piv]);
            sign = -sign;
        }
        for (int i = k + 1; i < n; ++i)
            for (int j = k + 1; j < n; ++j)
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
        prev = m[k][k];
    }
    return sign * m[n - 1][n - 1];
}

/// Smith normal form: returns D (diagonal, nonnegative) and the unimodular
/// V accumulating the column operations, with U*B*V = D for some unimodular
/// U that callers do not need.
void smith_normal_form(IMat b, IMat& d, IMat& v) {
    const int n = static_cast<int>(b.size());
    v = imat_identity(n);
    for (int t = 0; t < n; ++t) {
        for (;;) {
            // move the smallest nonzero entry of the trailing block to (t,t)
            int pi = -1, pj = -1;
            long long best = 0;
            for (int i = t; i < n; ++i)
                for (int j = t; j < n; ++j)
                    if (b[i][j] != 0 &&
                        (pi < 0 || std::llabs(b[i][j]) < best)) {
                        best = std::llabs(b[i][j]);
                        pi = i;
                        pj = j;
                    }
            if (pi < 0)
                throw numeric_error("smith_normal_form: singular matrix");
            if (pi != t) std::swap(b[pi], b[t]);
            if (pj != t) {
                for (int i = 0; i < n; ++i) std::swap(b[i][pj], b[i][t]);
                for (int i = 0; i < n; ++i) std::swap(v[i][pj], v[i][t]);
            }
            bool clean = true;
            for (int i = t + 1; i < n; ++i) {
                long long q = b[i][t] / b[t][t];
                if (q != 0)
                    for (int j = t; j < n; ++j) b[i][j] -= q * b[t][j];
                if (b[i][t] != 0) clean = false;
            }
            for (int j = t + 1; j < n; ++j) {
                long long q = b[t][j] / b[t][t];
                if (q != 0) {
                    for (int i = 0; i < n; ++i) {
                        b[i][j] -= q * b[i][t];
                        v[i][j] -= q * v[i][t];
                    }
                }
                if (b[t][j] != 0) clean = false;
            }
            if (clean) break;
        }
        if (b[t][t] < 0) {
            for (int i = 0; i < n; ++i) {
                b[i][t] = -b[i][t];
                v[i][t] = -v[i][t];
            }
        }
    }
    d = std::move(b);
}

long long gcd_ll(long long a, long long b) {
    while (b) { a %= b; std::swap(a, b); }
    return std::llabs(a);
}

}  // namespace

long long toral_periodic_point_count(const Mat& a, int period) {
    IMat am = to_imat(a);
    IMat power = imat_identity(static_cast<int>(am.size()));
    for (int i = 0; i < period; ++i) power = imat_mul(power, am);
    for (size_t i = 0; i < power.size(); ++i) power[i][i] -= 1;
    return std::llabs(imat_det(power));
}

std::vector<PeriodicOrbit> enumerate_periodic_toral(const Mat& a, int period) {
    if (period < 1) throw numeric_error("enumerate_periodic_toral: period must be positive");
    const int n = a.rows;
    IMat am = to_imat(a);
    IMat power = imat_identity(n);
    for (int i = 0; i < period; ++i) power = imat_mul(power, am);
    IMat b = power;
    for (int i = 0; i < n; ++i) b[i][i] -= 1;
    if (imat_det(b) == 0)
        throw numeric_error("enumerate_periodic_toral: det(A^m - I) = 0 (non-hyperbolic period)");

    IMat d, v;
    smith_normal_form(b, d, v);
    long long den = 1;
    for (int i = 0; i < n; ++i) den = den / gcd_ll(den, d[i][i]) * d[i][i];

    // all solutions: p = V (r_1/d_1, ..., r_n/d_n) mod 1, exact over 1/den
    std::set<std::vector<long long>> seen;
    std::vector<std::vector<long long>> points;  // numerators over den
    std::vector<long long> r(n, 0);
    for (;;) {
        std::vector<long long> num(n, 0);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) num[i] += v[i][j] * (den / d[j][j]) * r[j];
            num[i] %= den;
            if (num[i] < 0) num[i] += den;
        }
        if (seen.insert(num).second) points.push_back(num);
        int i = 0;
        for (; i < n; ++i) {
            if (++r[i] < d[i][i]) break;
            r[i] = 0;
        }
        if (i == n) break;
    }

    // group into orbits under the exact action on numerators
    auto step = [&](const std::vector<long long>& num) {
        std::vector<long long> out(n, 0);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) out[i] += am[i][j] * num[j];
            out[i] %= den;
            if (out[i] < 0) out[i] += den;
        }
        return out;
    };

    Mat a_double = a;
    std::vector<PeriodicOrbit> orbits;
    std::set<std::vector<long long>> visited;
    for (const auto& p0 : points) {
        if (visited.count(p0)) continue;
        std::vector<std::vector<long long>> cycle{p0};
        visited.insert(p0);
        for (auto cur = step(p0); cur != p0; cur = step(cur)) {
            visited.insert(cur);
            cycle.push_back(cur);
        }
        long long min_period = static_cast<long long>(cycle.size());
        const auto& rep = *std::min_element(cycle.begin(), cycle.end());

        Mat mono = Mat::identity(n);
        for (long long i = 0; i < min_period; ++i) mono = a_double * mono;

        PeriodicOrbit orbit;
        orbit.point.resize(n);
        for (int i = 0; i < n; ++i) orbit.point[i] = static_cast<double>(rep[i]) / den;
        orbit.period = static_cast<double>(min_period);
        orbit.residual = 0.0;
        orbit.is_map_orbit = true;
        // store the cycle starting from the canonical representative
        {
            auto cur = rep;
            for (long long i = 0; i < min_period; ++i) {
                Vec pt(n);
                for (int d = 0; d < n; ++d) pt[d] = static_cast<double>(cur[d]) / den;
                orbit.points.push_back(std::move(pt));
                cur = step(cur);
            }
        }
        orbit.multipliers = eigenvalue_magnitudes(mono);
        for (double m : orbit.multipliers)
            orbit.exponents.push_back(std::log(m) / orbit.period);
        orbit.index = 0;
        for (double e : orbit.exponents)
            if (e < 0.0) ++orbit.index;
        orbit.verified = true;
        orbits.push_back(std::move(orbit));
    }
    std::sort(orbits.begin(), orbits.end(), [](const PeriodicOrbit& x, const PeriodicOrbit& y) {
        if (x.period != y.period) return x.period < y.period;
        return x.point < y.point;
    });
    return orbits;
}

}  // namespace frameflow
