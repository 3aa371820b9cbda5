#include "frameflow/system.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

#include "json.hpp"

namespace frameflow {

namespace {

Vec mod1(Vec w) {
    for (double& x : w) x -= std::floor(x);
    return w;
}

void check_finite_state(const Vec& w, const char* where) {
    if (!all_finite(w))
        throw numeric_error(std::string(where) + ": non-finite state " + format_vec(w));
}

Vec field_checked(const SystemSpec& sys, const Vec& w) {
    Vec s = sys.evaluate(w);
    if (!all_finite(s))
        throw numeric_error("flow field non-finite at " + format_vec(w));
    if (norm(s) < kSingularFieldThreshold)
        throw numeric_error("singular field (|S| < 1e-10) at " + format_vec(w));
    return s;
}

}  // namespace

Vec reduce_state(const SystemSpec& sys, Vec w) {
    if (sys.geometry == GeometryKind::Torus) w = mod1(std::move(w));
    if (sys.reduce_hook) w = sys.reduce_hook(std::move(w));
    return w;
}

double torus_distance(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double d = std::fabs(a[i] - b[i]);
        d -= std::floor(d);
        d = std::min(d, 1.0 - d);
        s += d * d;
    }
    return std::sqrt(s);
}

double state_distance(const SystemSpec& sys, const Vec& a, const Vec& b) {
    if (sys.geometry == GeometryKind::Torus) return torus_distance(a, b);
    return norm(a - b);
}

Vec state_displacement(const SystemSpec& sys, const Vec& a, const Vec& b) {
    Vec d = b - a;
    if (sys.geometry == GeometryKind::Torus)
        for (double& x : d) x -= std::round(x);
    return d;
}

Vec evolve_flow(const SystemSpec& sys, Vec w, double t, double step) {
    if (!sys.is_flow()) throw numeric_error("evolve_flow: system is not a flow");
    if (step <= 0.0) throw numeric_error("evolve_flow: step must be positive");
    check_finite_state(w, "evolve_flow");
    if (t == 0.0) return w;

    const double dir = t > 0 ? 1.0 : -1.0;
    const long nsteps = static_cast<long>(std::ceil(std::fabs(t) / step - 1e-12));
    const double h = dir * std::fabs(t) / nsteps;

    for (long i = 0; i < nsteps; ++i) {
        Vec k1 = field_checked(sys, w);
        Vec k2 = sys.evaluate(w + (h / 2) * k1);
        Vec k3 = sys.evaluate(w + (h / 2) * k2);
        Vec k4 = sys.evaluate(w + h * k3);
        for (size_t j = 0; j < w.size(); ++j)
            w[j] += h / 6.0 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
        w = reduce_state(sys, std::move(w));
        check_finite_state(w, "evolve_flow");
    }
    return w;
}

Vec evolve_map(const SystemSpec& sys, Vec w, long n) {
    if (!sys.is_map()) throw numeric_error("evolve_map: system is not a map");
    check_finite_state(w, "evolve_map");
    if (n < 0) {
        if (!sys.has_inverse())
            throw numeric_error("evolve_map: negative time requires an explicit inverse map");
        for (long i = 0; i < -n; ++i) w = reduce_state(sys, sys.inverse(w));
        return w;
    }
    for (long i = 0; i < n; ++i) w = reduce_state(sys, sys.evaluate(w));
    return w;
}

void flow_step_with_tangents(const SystemSpec& sys, Vec& w, std::vector<Vec>& cols, double h) {
    Vec k1 = field_checked(sys, w);
    Mat j1 = sys.jacobian(w);
    Vec w2 = w + (h / 2) * k1;
    Vec k2 = sys.evaluate(w2);
    Mat j2 = sys.jacobian(w2);
    Vec w3 = w + (h / 2) * k2;
    Vec k3 = sys.evaluate(w3);
    Mat j3 = sys.jacobian(w3);
    Vec w4 = w + h * k3;
    Vec k4 = sys.evaluate(w4);
    Mat j4 = sys.jacobian(w4);

    for (Vec& c : cols) {
        Vec c1 = j1 * c;
        Vec c2 = j2 * (c + (h / 2) * c1);
        Vec c3 = j3 * (c + (h / 2) * c2);
        Vec c4 = j4 * (c + h * c3);
        for (size_t i = 0; i < c.size(); ++i)
            c[i] += h / 6.0 * (c1[i] + 2 * c2[i] + 2 * c3[i] + c4[i]);
    }
    for (size_t i = 0; i < w.size(); ++i)
        w[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    w = reduce_state(sys, std::move(w));
    check_finite_state(w, "flow step");
}

void map_step_with_tangents(const SystemSpec& sys, Vec& w, std::vector<Vec>& cols) {
    Mat j = sys.jacobian(w);
    for (Vec& c : cols) c = j * c;
    w = reduce_state(sys, sys.evaluate(w));
    check_finite_state(w, "map step");
}

TangentResult evolve_tangent_flow(const SystemSpec& sys, Vec w, Vec x, double t, double step) {
    if (!sys.is_flow()) throw numeric_error("evolve_tangent_flow: system is not a flow");
    if (!all_finite(x)) throw numeric_error("evolve_tangent_flow: non-finite tangent");
    if (t == 0.0) return {std::move(w), std::move(x)};

    const double dir = t > 0 ? 1.0 : -1.0;
    const long nsteps = static_cast<long>(std::ceil(std::fabs(t) / step - 1e-12));
    const double h = dir * std::fabs(t) / nsteps;
    std::vector<Vec> cols{std::move(x)};
    for (long i = 0; i < nsteps; ++i) flow_step_with_tangents(sys, w, cols, h);
    return {std::move(w), std::move(cols[0])};
}

TangentResult evolve_tangent_map(const SystemSpec& sys, Vec w, Vec x, long n) {
    if (!sys.is_map()) throw numeric_error("evolve_tangent_map: system is not a map");
    if (!all_finite(x)) throw numeric_error("evolve_tangent_map: non-finite tangent");
    if (n >= 0) {
        std::vector<Vec> cols{std::move(x)};
        for (long i = 0; i < n; ++i) map_step_with_tangents(sys, w, cols);
        return {std::move(w), std::move(cols[0])};
    }
    if (!sys.has_inverse())
        throw numeric_error("evolve_tangent_map: negative steps require an explicit inverse map");
    for (long i = 0; i < -n; ++i) {
        Vec wp = reduce_state(sys, sys.inverse(w));
        x = lu_solve(lu_factor(sys.jacobian(wp)), x);
        w = std::move(wp);
    }
    return {std::move(w), std::move(x)};
}

Trajectory iterate_map(const SystemSpec& sys, Vec w0, long n) {
    Trajectory traj;
    traj.states.reserve(n + 1);
    traj.times.reserve(n + 1);
    Vec w = reduce_state(sys, std::move(w0));
    for (long i = 0; i <= n; ++i) {
        traj.states.push_back(w);
        traj.times.push_back(static_cast<double>(i));
        if (i < n) w = evolve_map(sys, std::move(w), 1);
    }
    return traj;
}

Trajectory sample_flow(const SystemSpec& sys, Vec w0, double total_time, double step) {
    if (total_time < 0) throw numeric_error("sample_flow: negative horizon");
    Trajectory traj;
    traj.step = step;
    const long nsteps = std::max<long>(1, std::lround(total_time / step));
    const double h = total_time / nsteps;
    traj.states.reserve(nsteps + 1);
    traj.times.reserve(nsteps + 1);
    Vec w = std::move(w0);
    std::vector<Vec> none;
    for (long i = 0; i <= nsteps; ++i) {
        traj.states.push_back(w);
        traj.times.push_back(i * h);
        if (i < nsteps) flow_step_with_tangents(sys, w, none, h);
    }
    return traj;
}

// ---- suspension ----

namespace {

/// Recovers the matrix of a linear map and verifies linearity at a few
/// probe states; throws if the map is not linear.
Mat extract_linear_matrix(const SystemSpec& map) {
    const int n = map.ambient_dim;
    Vec zero(n, 0.0);
    Mat a = map.jacobian(zero);
    const Vec probes[] = {Vec(n, 0.17), Vec(n, 0.43), Vec(n, 0.81)};
    for (const Vec& p : probes) {
        Mat jp = map.jacobian(p);
        if (max_abs(jp - a) > 1e-12 * std::max(1.0, max_abs(a)))
            throw numeric_error("suspend: base map has non-constant Jacobian (not linear)");
        Vec image = map.evaluate(p);
        Vec lin = a * p;
        if (map.geometry == GeometryKind::Torus) {
            image = mod1(std::move(image));
            lin = mod1(std::move(lin));
        }
        if (torus_distance(image, lin) > 1e-12 && norm(image - lin) > 1e-10)
            throw numeric_error("suspend: base map does not act linearly");
    }
    return a;
}

}  // namespace

Vec SuspensionSystem::canonical(Vec w) const {
    const int n = base.ambient_dim;
    if (base.geometry == GeometryKind::Torus)
        for (int i = 0; i < n; ++i) w[i] -= std::floor(w[i]);
    w[n] -= roof * std::floor(w[n] / roof);
    return w;
}

SuspensionSystem suspend(const SystemSpec& map, double roof) {
    if (!map.is_map()) throw numeric_error("suspend: base system must be a map");
    if (roof <= 0.0) throw numeric_error("suspend: roof must be positive");

    SuspensionSystem susp;
    susp.base = map;
    susp.roof = roof;
    Mat a = extract_linear_matrix(map);
    susp.log_generator = real_log(a);

    const int n = map.ambient_dim;
    Mat gen = (1.0 / roof) * susp.log_generator;
    Mat jac(n + 1, n + 1);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) jac(i, j) = gen(i, j);

    SystemSpec flow;
    flow.kind = SystemKind::Flow;
    flow.ambient_dim = n + 1;
    flow.geometry = GeometryKind::Box;  // covering-space coordinates
    flow.name = "suspension:" + map.name;
    flow.evaluate = [gen, n](const Vec& w) {
        Vec base(w.begin(), w.begin() + n);
        Vec s = gen * base;
        s.push_back(1.0);
        return s;
    };
    flow.jacobian = [jac](const Vec&) { return jac; };
    // With a trivial generator the field is base-independent and the fiber
    // quotient commutes with the dynamics, so orbits can wrap in place. A
    // nontrivial generator only lives on the covering space.
    if (max_abs(susp.log_generator) < 1e-14) {
        bool toral_base = map.geometry == GeometryKind::Torus;
        flow.reduce_hook = [roof, n, toral_base](Vec w) {
            if (toral_base)
                for (int i = 0; i < n; ++i) w[i] -= std::floor(w[i]);
            w[n] -= roof * std::floor(w[n] / roof);
            return w;
        };
    }
    susp.flow = std::move(flow);
    return susp;
}

// ---- expression parser for custom JSON systems ----

namespace {

struct ExprParser {
    const std::string& src;
    size_t pos = 0;
    int dim;

    using Fn = std::function<double(const Vec&)>;

    explicit ExprParser(const std::string& s, int d) : src(s), dim(d) {}

    void skip_ws() {
        while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
    }
    bool eat(char c) {
        skip_ws();
        if (pos < src.size() && src[pos] == c) { ++pos; return true; }
        return false;
    }
    [[noreturn]] void fail(const std::string& msg) {
        throw numeric_error("expression parse error at offset " + std::to_string(pos) +
                            ": " + msg + " in '" + src + "'");
    }

    Fn parse() {
        Fn e = expr();
        skip_ws();
        if (pos != src.size()) fail("trailing input");
        return e;
    }

    Fn expr() {
        Fn left = term();
        for (;;) {
            if (eat('+')) {
                Fn right = term();
                left = [left, right](const Vec& w) { return left(w) + right(w); };
            } else if (eat('-')) {
                Fn right = term();
                left = [left, right](const Vec& w) { return left(w) - right(w); };
            } else
                return left;
        }
    }

    Fn term() {
        Fn left = factor();
        for (;;) {
            if (eat('*')) {
                Fn right = factor();
                left = [left, right](const Vec& w) { return left(w) * right(w); };
            } else if (eat('/')) {
                Fn right = factor();
                left = [left, right](const Vec& w) { return left(w) / right(w); };
            } else
                return left;
        }
    }

    Fn factor() {
        Fn base = unary();
        if (eat('^')) {
            Fn exp = factor();  // right associative
            return [base, exp](const Vec& w) { return std::pow(base(w), exp(w)); };
        }
        return base;
    }

    Fn unary() {
        if (eat('-')) {
            Fn inner = unary();
            return [inner](const Vec& w) { return -inner(w); };
        }
        eat('+');
        return primary();
    }

    Fn primary() {
        skip_ws();
        if (pos >= src.size()) fail("unexpected end");
        char c = src[pos];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            size_t end;
            double v = std::stod(src.substr(pos), &end);
            pos += end;
            return [v](const Vec&) { return v; };
        }
        if (c == '(') {
            ++pos;
            Fn inner = expr();
            if (!eat(')')) fail("expected ')'");
            return inner;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            size_t start = pos;
            while (pos < src.size() &&
                   (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_'))
                ++pos;
            std::string id = src.substr(start, pos - start);
            if (id == "pi") return [](const Vec&) { return M_PI; };
            if (id == "e") return [](const Vec&) { return M_E; };
            if (id.size() >= 2 && id[0] == 'w') {
                int idx = std::atoi(id.c_str() + 1);
                if (idx >= 1 && idx <= dim)
                    return [idx](const Vec& w) { return w[idx - 1]; };
                fail("coordinate " + id + " out of range");
            }
            static const std::pair<const char*, double (*)(double)> fns[] = {
                {"sin", std::sin},   {"cos", std::cos},   {"tan", std::tan},
                {"exp", std::exp},   {"log", std::log},   {"sqrt", std::sqrt},
                {"abs", std::fabs},  {"sinh", std::sinh}, {"cosh", std::cosh},
                {"tanh", std::tanh}, {"atan", std::atan}, {"asin", std::asin},
                {"acos", std::acos}};
            for (const auto& [fname, fptr] : fns) {
                if (id == fname) {
                    if (!eat('(')) fail("expected '(' after " + id);
                    Fn arg = expr();
                    if (!eat(')')) fail("expected ')'");
                    auto p = fptr;
                    return [p, arg](const Vec& w) { return p(arg(w)); };
                }
            }
            fail("unknown identifier '" + id + "'");
        }
        fail("unexpected character");
    }
};

}  // namespace

// ---- registry ----

SystemSpec make_linear_map(const Mat& m, GeometryKind geom, const std::string& name) {
    SystemSpec sys;
    sys.kind = SystemKind::Map;
    sys.ambient_dim = m.rows;
    sys.geometry = geom;
    sys.name = name;
    sys.evaluate = [m, geom](const Vec& w) {
        Vec y = m * w;
        if (geom == GeometryKind::Torus) y = mod1(std::move(y));
        return y;
    };
    sys.jacobian = [m](const Vec&) { return m; };

    double det = determinant(m);
    bool invertible = std::fabs(det) > 1e-12;
    if (geom == GeometryKind::Torus) {
        bool integer_entries = true;
        for (double v : m.a)
            if (std::fabs(v - std::round(v)) > 1e-12) integer_entries = false;
        invertible = integer_entries && std::fabs(std::fabs(det) - 1.0) < 1e-9;
    }
    if (invertible) {
        Mat minv = inverse(m);
        if (geom == GeometryKind::Torus)
            for (double& v : minv.a) v = std::round(v);
        sys.inverse = [minv, geom](const Vec& w) {
            Vec y = minv * w;
            if (geom == GeometryKind::Torus) y = mod1(std::move(y));
            return y;
        };
    }
    return sys;
}

SystemSpec inverse_system(const SystemSpec& sys) {
    if (!sys.is_map() || !sys.has_inverse())
        throw numeric_error("inverse_system: map with explicit inverse required");
    SystemSpec inv;
    inv.kind = SystemKind::Map;
    inv.ambient_dim = sys.ambient_dim;
    inv.geometry = sys.geometry;
    inv.name = sys.name + "^-1";
    auto fwd_eval = sys.evaluate;
    auto fwd_jac = sys.jacobian;
    auto fwd_inv = sys.inverse;
    inv.evaluate = fwd_inv;
    inv.jacobian = [fwd_jac, fwd_inv](const Vec& w) {
        // D(g^-1)(w) = (Dg(g^-1 w))^-1
        return inverse(fwd_jac(fwd_inv(w)));
    };
    inv.inverse = fwd_eval;
    return inv;
}

namespace {

SystemSpec make_cat_map() {
    return make_linear_map(Mat::from_rows({{2, 1}, {1, 1}}), GeometryKind::Torus, "cat");
}

SystemSpec make_cat_perturbed(double eps) {
    SystemSpec sys;
    sys.kind = SystemKind::Map;
    sys.ambient_dim = 2;
    sys.geometry = GeometryKind::Torus;
    sys.name = "cat-perturbed";
    const Mat a = Mat::from_rows({{2, 1}, {1, 1}});
    const Mat ainv = Mat::from_rows({{1, -1}, {-1, 2}});
    sys.evaluate = [eps](const Vec& w) {
        return mod1({2 * w[0] + w[1] + eps * std::sin(2 * M_PI * w[0]), w[0] + w[1]});
    };
    sys.jacobian = [eps](const Vec& w) {
        return Mat::from_rows({{2 + eps * 2 * M_PI * std::cos(2 * M_PI * w[0]), 1}, {1, 1}});
    };
    // fixed-point inversion in the lift; contraction factor ~ 2.62*2*pi*eps
    sys.inverse = [eps, ainv](const Vec& y) {
        Vec x = mod1(ainv * y);
        for (int it = 0; it < 200; ++it) {
            Vec rhs = {y[0] - eps * std::sin(2 * M_PI * x[0]), y[1]};
            Vec next = mod1(ainv * rhs);
            double moved = torus_distance(next, x);
            x = std::move(next);
            if (moved < 1e-15) return x;
        }
        throw numeric_error("cat-perturbed inverse: fixed-point iteration stalled (eps too large?)");
    };
    return sys;
}

SystemSpec make_rotation_flow() {
    SystemSpec sys;
    sys.kind = SystemKind::Flow;
    sys.ambient_dim = 3;
    sys.geometry = GeometryKind::Box;
    sys.name = "rotation-flow";
    // elliptic rotation in the (w1,w2) plane plus unit drift: nonsingular,
    // bounded orbits, non-trivial transversal growth rates
    const Mat j = Mat::from_rows({{0, -2, 0}, {0.5, 0, 0}, {0, 0, 0}});
    sys.evaluate = [](const Vec& w) { return Vec{-2 * w[1], 0.5 * w[0], 1.0}; };
    sys.jacobian = [j](const Vec&) { return j; };
    return sys;
}

SystemSpec make_constant_flow() {
    SystemSpec sys;
    sys.kind = SystemKind::Flow;
    sys.ambient_dim = 3;
    sys.geometry = GeometryKind::Box;
    sys.name = "constant-flow";
    const Vec c = {0.25, -0.5, 1.0};
    sys.evaluate = [c](const Vec&) { return c; };
    sys.jacobian = [](const Vec&) { return Mat(3, 3); };
    return sys;
}

Vec parse_number_list(const std::string& s) {
    Vec vals;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) vals.push_back(std::stod(tok));
    return vals;
}

}  // namespace

SystemSpec make_system(const std::string& name, const SystemOptions& opts) {
    if (name == "cat") return make_cat_map();
    if (name == "cat-perturbed") return make_cat_perturbed(opts.eps);
    if (name == "rotation-flow") return make_rotation_flow();
    if (name == "constant-flow") return make_constant_flow();
    if (name == "diag" || name.rfind("diag:", 0) == 0) {
        Vec d = opts.diag_entries;
        if (name.size() > 5) d = parse_number_list(name.substr(5));
        if (d.empty()) throw numeric_error("diag system needs at least one entry");
        for (double v : d)
            if (v == 0.0) throw numeric_error("diag system entries must be nonzero");
        return make_linear_map(Mat::diagonal(d), GeometryKind::Box, name);
    }
    if (name.rfind("suspension:", 0) == 0)
        return suspend(make_system(name.substr(11), opts), 1.0).flow;
    // anything else: a path to a JSON system document
    return load_system_json(name);
}

Vec default_seed_state(const SystemSpec& sys) {
    if (sys.geometry == GeometryKind::Torus) {
        Vec w(sys.ambient_dim);
        for (int i = 0; i < sys.ambient_dim; ++i) w[i] = 0.135642 + 0.327891 * i;
        return reduce_state(sys, std::move(w));
    }
    if (sys.name == "rotation-flow") return {1.0, 0.5, 0.0};
    return Vec(sys.ambient_dim, 0.0);
}

SystemSpec system_from_json_text(const std::string& text, const std::string& name) {
    nlohmann::json doc = nlohmann::json::parse(text);
    SystemSpec sys;
    std::string kind = doc.at("kind").get<std::string>();
    if (kind == "map" || kind == "discrete-map")
        sys.kind = SystemKind::Map;
    else if (kind == "flow")
        sys.kind = SystemKind::Flow;
    else
        throw numeric_error("system JSON: kind must be 'map' or 'flow'");
    sys.ambient_dim = doc.at("dimension").get<int>();
    if (sys.ambient_dim < 1) throw numeric_error("system JSON: dimension must be positive");
    std::string geom = doc.value("geometry", "box");
    if (geom == "torus")
        sys.geometry = GeometryKind::Torus;
    else if (geom == "box" || geom == "euclidean")
        sys.geometry = GeometryKind::Box;
    else
        throw numeric_error("system JSON: geometry must be 'torus' or 'box'");
    sys.name = doc.value("name", name);

    if (doc.contains("matrix")) {
        auto rows = doc.at("matrix");
        Mat m(sys.ambient_dim, sys.ambient_dim);
        for (int i = 0; i < sys.ambient_dim; ++i)
            for (int j = 0; j < sys.ambient_dim; ++j) m(i, j) = rows.at(i).at(j).get<double>();
        if (sys.is_map()) {
            SystemSpec lin = make_linear_map(m, sys.geometry, sys.name);
            return lin;
        }
        sys.evaluate = [m](const Vec& w) { return m * w; };
        sys.jacobian = [m](const Vec&) { return m; };
        return sys;
    }

    if (doc.contains("expressions")) {
        auto exprs = doc.at("expressions");
        if (static_cast<int>(exprs.size()) != sys.ambient_dim)
            throw numeric_error("system JSON: need one expression per coordinate");
        std::vector<std::function<double(const Vec&)>> fns;
        for (const auto& e : exprs)
            fns.push_back(ExprParser(e.get_ref<const std::string&>(), sys.ambient_dim).parse());
        auto geom_kind = sys.geometry;
        auto is_map = sys.is_map();
        sys.evaluate = [fns, geom_kind, is_map](const Vec& w) {
            Vec y(fns.size());
            for (size_t i = 0; i < fns.size(); ++i) y[i] = fns[i](w);
            if (is_map && geom_kind == GeometryKind::Torus) y = mod1(std::move(y));
            return y;
        };
        // Jacobian by central differences; accurate to O(h^2) which is the
        // contract this field is tested against anyway.
        auto eval = sys.evaluate;
        int n = sys.ambient_dim;
        sys.jacobian = [fns, n](const Vec& w) {
            Mat j(n, n);
            for (int col = 0; col < n; ++col) {
                double h = 1e-6 * std::max(1.0, std::fabs(w[col]));
                Vec wp = w, wm = w;
                wp[col] += h;
                wm[col] -= h;
                for (int row = 0; row < n; ++row)
                    j(row, col) = (fns[row](wp) - fns[row](wm)) / (2 * h);
            }
            return j;
        };
        return sys;
    }
    throw numeric_error("system JSON: need 'matrix' or 'expressions'");
}

SystemSpec load_system_json(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw numeric_error("unknown system '" + path + "' (not a registry name or readable file)");
    std::stringstream buf;
    buf << in.rdbuf();
    return system_from_json_text(buf.str(), path);
}

}  // namespace frameflow
