#pragma once

#include <Eigen/Dense>

#include <functional>

namespace stratwave {

using Eigen::VectorXcd;
using Eigen::VectorXd;

// Symmetric tridiagonal pencil (A, B): A has diagonal `diag` and off-diagonal
// `off` (size n−1); B is the positive diagonal `mass`. Eigenproblem A v = λ B v.
// With B = h·I this is the standard scaled finite-difference eigenproblem; a
// non-uniform mass (half weight at a boundary node) covers flux bottom rows.
struct SymTridiag {
    VectorXd diag;
    VectorXd off;
    VectorXd mass;
    long size() const { return diag.size(); }
};

// Number of pencil eigenvalues strictly below `shift`: Sturm-sequence count of
// negative pivots of the unpivoted LDL^T of A − shift·B, with a pivot-underflow
// guard. Zero pivots count as negative, which makes ties resolve consistently.
int sturm_count(const SymTridiag& T, double shift);

// Gershgorin enclosure of the pencil spectrum (B positive diagonal).
void spectrum_bounds(const SymTridiag& T, double& lo, double& hi);

// k-th (0-based) eigenvalue by bisection on a counting function.
// `count_below(shift)` must be monotone non-decreasing and equal to the number
// of eigenvalues below `shift`. Bisects until the bracket width falls below
// rel_tol·max(1, |midpoint|); returns the bracket midpoint.
double bisect_kth_eigenvalue(const std::function<int(double)>& count_below,
                             int k, double lo, double hi, double rel_tol = 1e-12);

struct EigenPair {
    double lambda = 0.0;
    VectorXd vector;       // B-normalized: v^T B v = 1
    double residual = 0.0; // ‖A v − λ B v‖₂ / ‖B v‖₂
    int iterations = 0;
};

// Inverse iteration at the given shift with a fixed deterministic start vector
// and Rayleigh-quotient polishing. Stops when
// ‖A v − λ B v‖₂ ≤ target_residual·max(1,|λ|)·‖B v‖₂ or after max_iter sweeps;
// returns the best iterate either way (callers decide whether to reject).
EigenPair inverse_iteration(const SymTridiag& T, double lambda_guess,
                            double target_residual = 1e-12, int max_iter = 50);

// Solves (A − shift·B) w = rhs by tridiagonal LU with partial pivoting.
VectorXd shifted_solve(const SymTridiag& T, double shift, const VectorXd& rhs);
VectorXcd shifted_solve(const SymTridiag& T, double shift, const VectorXcd& rhs);

// Solves (A − λ B) w = rhs on the complement of the eigenvector `phi` of λ:
// projects rhs against the pencil null vector, solves at a slightly deflected
// shift, then removes the B-component along φ and runs `refine` residual
// correction passes. Result satisfies φ^T B w = 0.
VectorXcd deflected_solve(const SymTridiag& T, double lambda, const VectorXd& phi,
                          const VectorXcd& rhs, int refine = 2);

// Matrix-vector product A·x for the pencil's A part.
VectorXd pencil_apply(const SymTridiag& T, const VectorXd& x);
VectorXcd pencil_apply(const SymTridiag& T, const VectorXcd& x);

// Trapezoid rule on a uniform grid of spacing h (half weights at the ends).
double trapezoid_uniform(const VectorXd& values, double h);

// Adaptive Simpson quadrature of f over [a, b] to absolute tolerance tol.
double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double tol, int max_depth = 48);

} // namespace stratwave
