#pragma once

#include <complex>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace frameflow {

using Vec = std::vector<double>;

/// Thrown by numerical routines on ill-posed input (singular matrices,
/// degenerate frames, non-finite states). CLI maps these to exit code 3.
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dense row-major matrix. Dimensions here are ambient-space sized (2..5),
/// so everything is plain O(n^3) with no blocking.
struct Mat {
    int rows = 0, cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

    double& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }

    static Mat identity(int n);
    static Mat diagonal(const Vec& d);
    static Mat from_rows(std::initializer_list<std::initializer_list<double>> entries);

    Vec row(int i) const;
    Vec col(int j) const;
    void set_col(int j, const Vec& v);
};

// ---- vector ops ----
double dot(const Vec& x, const Vec& y);
double norm(const Vec& x);
Vec normalized(const Vec& x);
Vec operator+(const Vec& x, const Vec& y);
Vec operator-(const Vec& x, const Vec& y);
Vec operator*(double s, const Vec& x);
void axpy(double s, const Vec& x, Vec& y);  // y += s*x
bool all_finite(const Vec& x);

// ---- matrix ops ----
Vec operator*(const Mat& m, const Vec& x);
Mat operator*(const Mat& m, const Mat& n);
Mat operator+(const Mat& m, const Mat& n);
Mat operator-(const Mat& m, const Mat& n);
Mat operator*(double s, const Mat& m);
Mat transpose(const Mat& m);
double max_abs(const Mat& m);

/// LU factorization with partial pivoting; throws numeric_error when the
/// matrix is singular to working precision.
struct LuFactors {
    Mat lu;
    std::vector<int> perm;
    int sign = 1;
};
LuFactors lu_factor(const Mat& m);
Vec lu_solve(const LuFactors& f, const Vec& b);
Mat inverse(const Mat& m);
double determinant(const Mat& m);

/// Monic characteristic polynomial by the Faddeev-LeVerrier recursion.
/// Returns c with p(x) = x^n + c[0] x^{n-1} + ... + c[n-1].
Vec characteristic_polynomial(const Mat& m);

/// All roots of a monic polynomial (coefficients as above) by Durand-Kerner
/// iteration. Adequate for the low degrees used here.
std::vector<std::complex<double>> polynomial_roots(const Vec& monic_tail);

/// Eigenvalues of a general real matrix via the characteristic polynomial.
std::vector<std::complex<double>> eigenvalues(const Mat& m);

/// Sorted eigenvalue magnitudes.
Vec eigenvalue_magnitudes(const Mat& m);

/// Real eigen-decomposition for matrices with distinct real eigenvalues,
/// vectors recovered by inverse iteration. Throws when eigenvalues are
/// complex or too close to tell apart.
struct EigenPairs {
    Vec values;                   // ascending
    std::vector<Vec> vectors;     // unit vectors, matching order
};
EigenPairs eigen_real_distinct(const Mat& m, double separation_tol = 1e-9);

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
struct SymEigen {
    Vec values;   // ascending
    Mat vectors;  // columns are eigenvectors
};
SymEigen symmetric_eigen(const Mat& s);

/// Principal angles between the column spans of two orthonormal frames
/// (each a list of unit vectors in the same ambient space), ascending.
Vec principal_angles(const std::vector<Vec>& u, const std::vector<Vec>& v);

/// Real logarithm of a matrix with positive real spectrum (identity and
/// positive diagonal matrices handled directly, the rest through a real
/// eigenbasis). Throws if no real logarithm is available this way.
Mat real_log(const Mat& m);

std::string format_vec(const Vec& v, int precision = 6);

}  // namespace frameflow
