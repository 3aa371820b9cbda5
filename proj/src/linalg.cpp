#include "frameflow/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace frameflow {

Mat Mat::identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Mat Mat::diagonal(const Vec& d) {
    Mat m(static_cast<int>(d.size()), static_cast<int>(d.size()));
    for (int i = 0; i < m.rows; ++i) m(i, i) = d[i];
    return m;
}

Mat Mat::from_rows(std::initializer_list<std::initializer_list<double>> entries) {
    Mat m(static_cast<int>(entries.size()),
          static_cast<int>(entries.begin()->size()));
    int i = 0;
    for (const auto& r : entries) {
        int j = 0;
        for (double v : r) m(i, j++) = v;
        ++i;
    }
    return m;
}

Vec Mat::row(int i) const {
    Vec v(cols);
    for (int j = 0; j < cols; ++j) v[j] = (*this)(i, j);
    return v;
}

Vec Mat::col(int j) const {
    Vec v(rows);
    for (int i = 0; i < rows; ++i) v[i] = (*this)(i, j);
    return v;
}

void Mat::set_col(int j, const Vec& v) {
    for (int i = 0; i < rows; ++i) (*this)(i, j) = v[i];
}

double dot(const Vec& x, const Vec& y) {
    return std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
}

double norm(const Vec& x) { return std::sqrt(dot(x, x)); }

Vec normalized(const Vec& x) {
    double n = norm(x);
    if (n == 0.0) throw numeric_error("cannot normalize zero vector");
    Vec y(x);
    for (double& v : y) v /= n;
    return y;
}

Vec operator+(const Vec& x, const Vec& y) {
    Vec z(x);
    for (size_t i = 0; i < z.size(); ++i) z[i] += y[i];
    return z;
}

Vec operator-(const Vec& x, const Vec& y) {
    Vec z(x);
    for (size_t i = 0; i < z.size(); ++i) z[i] -= y[i];
    return z;
}

Vec operator*(double s, const Vec& x) {
    Vec z(x);
    for (double& v : z) v *= s;
    return z;
}

void axpy(double s, const Vec& x, Vec& y) {
    for (size_t i = 0; i < y.size(); ++i) y[i] += s * x[i];
}

bool all_finite(const Vec& x) {
    return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

Vec operator*(const Mat& m, const Vec& x) {
    Vec y(m.rows, 0.0);
    for (int i = 0; i < m.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < m.cols; ++j) s += m(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

Mat operator*(const Mat& m, const Mat& n) {
    Mat r(m.rows, n.cols);
    for (int i = 0; i < m.rows; ++i)
        for (int k = 0; k < m.cols; ++k) {
            double mik = m(i, k);
            if (mik == 0.0) continue;
            for (int j = 0; j < n.cols; ++j) r(i, j) += mik * n(k, j);
        }
    return r;
}

Mat operator+(const Mat& m, const Mat& n) {
    Mat r(m);
    for (size_t i = 0; i < r.a.size(); ++i) r.a[i] += n.a[i];
    return r;
}

Mat operator-(const Mat& m, const Mat& n) {
    Mat r(m);
    for (size_t i = 0; i < r.a.size(); ++i) r.a[i] -= n.a[i];
    return r;
}

Mat operator*(double s, const Mat& m) {
    Mat r(m);
    for (double& v : r.a) v *= s;
    return r;
}

Mat transpose(const Mat& m) {
    Mat t(m.cols, m.rows);
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) t(j, i) = m(i, j);
    return t;
}

double max_abs(const Mat& m) {
    double v = 0.0;
    for (double x : m.a) v = std::max(v, std::fabs(x));
    return v;
}

LuFactors lu_factor(const Mat& m) {
    if (m.rows != m.cols) throw numeric_error("lu_factor: matrix not square");
    const int n = m.rows;
    LuFactors f{m, std::vector<int>(n), 1};
    std::iota(f.perm.begin(), f.perm.end(), 0);
    Mat& a = f.lu;
    for (int k = 0; k < n; ++k) {
        int piv = k;
        double best = std::fabs(a(k, k));
        for (int i = k + 1; i < n; ++i)
            if (std::fabs(a(i, k)) > best) { best = std::fabs(a(i, k)); piv = i; }
        if (best < 1e-300)
            throw numeric_error("lu_factor: singular matrix (pivot " + std::to_string(k) + ")");
        if (piv != k) {
            for (int j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
            std::swap(f.perm[k], f.perm[piv]);
            f.sign = -f.sign;
        }
        for (int i = k + 1; i < n; ++i) {
            a(i, k) /= a(k, k);
            for (int j = k + 1; j < n; ++j) a(i, j) -= a(i, k) * a(k, j);
        }
    }
    return f;
}

Vec lu_solve(const LuFactors& f, const Vec& b) {
    const int n = f.lu.rows;
    Vec y(n);
    for (int i = 0; i < n; ++i) {
        double s = b[f.perm[i]];
        for (int j = 0; j < i; ++j) s -= f.lu(i, j) * y[j];
        y[i] = s;
    }
    for (int i = n - 1; i >= 0; --i) {
        for (int j = i + 1; j < n; ++j) y[i] -= f.lu(i, j) * y[j];
        y[i] /= f.lu(i, i);
    }
    return y;
}

Mat inverse(const Mat& m) {
    auto f = lu_factor(m);
    const int n = m.rows;
    Mat inv(n, n);
    Vec e(n, 0.0);
    for (int j = 0; j < n; ++j) {
        e[j] = 1.0;
        inv.set_col(j, lu_solve(f, e));
        e[j] = 0.0;
    }
    return inv;
}

double determinant(const Mat& m) {
    LuFactors f;
    try {
        f = lu_factor(m);
    } catch (const numeric_error&) {
        return 0.0;
    }
    double d = f.sign;
    for (int i = 0; i < m.rows; ++i) d *= f.lu(i, i);
    return d;
}

Vec characteristic_polynomial(const Mat& m) {
    const int n = m.rows;
    Vec c(n);
    Mat mk = m;
    for (int k = 1; k <= n; ++k) {
        double tr = 0.0;
        for (int i = 0; i < n; ++i) tr += mk(i, i);
        c[k - 1] = -tr / k;
        if (k < n) {
            Mat shifted = mk;
            for (int i = 0; i < n; ++i) shifted(i, i) += c[k - 1];
            mk = m * shifted;
        }
    }
    return c;
}

std::vector<std::complex<double>> polynomial_roots(const Vec& monic_tail) {
    using C = std::complex<double>;
    const int n = static_cast<int>(monic_tail.size());
    if (n == 0) return {};
    if (n == 1) return {C(-monic_tail[0], 0.0)};
    if (n == 2) {
        // quadratic formula keeps the common 2x2 case exact
        C b(monic_tail[0], 0.0), c(monic_tail[1], 0.0);
        C disc = std::sqrt(b * b - 4.0 * c);
        return {(-b + disc) / 2.0, (-b - disc) / 2.0};
    }
    auto eval = [&](C z) {
        C p(1.0, 0.0);
        for (double coef : monic_tail) p = p * z + C(coef, 0.0);
        return p;
    };
    std::vector<C> z(n);
    C seed(0.4, 0.9);
    z[0] = seed;
    for (int i = 1; i < n; ++i) z[i] = z[i - 1] * seed;
    for (int iter = 0; iter < 600; ++iter) {
        double step = 0.0;
        for (int i = 0; i < n; ++i) {
            C denom(1.0, 0.0);
            for (int j = 0; j < n; ++j)
                if (j != i) denom *= z[i] - z[j];
            if (std::abs(denom) < 1e-300) denom = C(1e-300, 0.0);
            C delta = eval(z[i]) / denom;
            z[i] -= delta;
            step = std::max(step, std::abs(delta));
        }
        if (step < 1e-15) break;
    }
    return z;
}

std::vector<std::complex<double>> eigenvalues(const Mat& m) {
    double scale = std::max(1.0, max_abs(m));
    Mat ms = (1.0 / scale) * m;
    auto roots = polynomial_roots(characteristic_polynomial(ms));
    for (auto& r : roots) r *= scale;
    return roots;
}

Vec eigenvalue_magnitudes(const Mat& m) {
    Vec mags;
    for (const auto& z : eigenvalues(m)) mags.push_back(std::abs(z));
    std::sort(mags.begin(), mags.end());
    return mags;
}

EigenPairs eigen_real_distinct(const Mat& m, double separation_tol) {
    const int n = m.rows;
    auto ev = eigenvalues(m);
    double scale = std::max(1.0, max_abs(m));
    Vec vals;
    for (const auto& z : ev) {
        if (std::fabs(z.imag()) > separation_tol * scale)
            throw numeric_error("eigen_real_distinct: complex eigenvalue pair");
        vals.push_back(z.real());
    }
    std::sort(vals.begin(), vals.end());
    for (int i = 0; i + 1 < n; ++i)
        if (std::fabs(vals[i + 1] - vals[i]) < separation_tol * scale)
            throw numeric_error("eigen_real_distinct: eigenvalues too close");

    EigenPairs out;
    out.values = vals;
    for (double lam : vals) {
        // inverse iteration with a slightly shifted LU
        Mat shifted = m;
        double jitter = 1e-10 * scale;
        for (int i = 0; i < n; ++i) shifted(i, i) -= lam + jitter;
        auto f = lu_factor(shifted);
        Vec v(n);
        for (int i = 0; i < n; ++i) v[i] = 1.0 / (i + 2.0);
        for (int it = 0; it < 50; ++it) {
            v = normalized(lu_solve(f, v));
            Vec r = m * v - lam * v;
            if (norm(r) < 1e-12 * scale) break;
        }
        // fix a sign convention so results are reproducible
        int lead = 0;
        for (int i = 1; i < n; ++i)
            if (std::fabs(v[i]) > std::fabs(v[lead])) lead = i;
        if (v[lead] < 0.0) v = -1.0 * v;
        out.vectors.push_back(v);
    }
    return out;
}

SymEigen symmetric_eigen(const Mat& s) {
    const int n = s.rows;
    Mat a = s;
    Mat v = Mat::identity(n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        if (off < 1e-30) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                if (std::fabs(a(p, q)) < 1e-300) continue;
                double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double sn = t * c;
                for (int k = 0; k < n; ++k) {
                    double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - sn * akq;
                    a(k, q) = sn * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - sn * aqk;
                    a(q, k) = sn * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - sn * vkq;
                    v(k, q) = sn * vkp + c * vkq;
                }
            }
    }
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int i, int j) { return a(i, i) < a(j, j); });
    SymEigen out;
    out.values.resize(n);
    out.vectors = Mat(n, n);
    for (int j = 0; j < n; ++j) {
        out.values[j] = a(order[j], order[j]);
        out.vectors.set_col(j, v.col(order[j]));
    }
    return out;
}

Vec principal_angles(const std::vector<Vec>& u, const std::vector<Vec>& v) {
    const int p = static_cast<int>(u.size());
    const int q = static_cast<int>(v.size());
    Mat g(p, q);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < q; ++j) g(i, j) = dot(u[i], v[j]);
    Mat gtg = transpose(g) * g;
    auto se = symmetric_eigen(gtg);
    Vec angles;
    for (int i = se.vectors.cols - 1; i >= 0; --i) {
        double sigma = std::sqrt(std::clamp(se.values[i], 0.0, 1.0));
        angles.push_back(std::acos(std::clamp(sigma, -1.0, 1.0)));
    }
    std::sort(angles.begin(), angles.end());
    return angles;
}

Mat real_log(const Mat& m) {
    const int n = m.rows;
    bool diag = true;
    for (int i = 0; i < n && diag; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j && std::fabs(m(i, j)) > 1e-14) { diag = false; break; }
    if (diag) {
        Mat l(n, n);
        for (int i = 0; i < n; ++i) {
            if (m(i, i) <= 0.0)
                throw numeric_error("real_log: nonpositive diagonal entry");
            l(i, i) = std::log(m(i, i));
        }
        return l;
    }
    auto ep = eigen_real_distinct(m);
    for (double lam : ep.values)
        if (lam <= 0.0) throw numeric_error("real_log: nonpositive eigenvalue");
    Mat v(n, n), d(n, n);
    for (int j = 0; j < n; ++j) {
        v.set_col(j, ep.vectors[j]);
        d(j, j) = std::log(ep.values[j]);
    }
    return v * d * inverse(v);
}

std::string format_vec(const Vec& v, int precision) {
    std::ostringstream os;
    os.precision(precision);
    os << "(";
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) os << ", ";
        os << v[i];
    }
    os << ")";
    return os.str();
}

}  // namespace frameflow
