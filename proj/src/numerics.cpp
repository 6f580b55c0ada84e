#include "stratwave/numerics.hpp"

#include "stratwave/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

namespace stratwave {

namespace {

double pivot_floor(const SymTridiag& T) {
    double safmin = std::numeric_limits<double>::min();
    double mx = 1.0;
    for (long i = 0; i + 1 < T.size(); ++i) mx = std::max(mx, T.off[i] * T.off[i]);
    return safmin * mx;
}

// Tridiagonal LU with partial pivoting (row swaps between adjacent rows only),
// factoring A − shift·B. Layout follows the classic banded scheme with one
// fill-in superdiagonal.
struct TridiagLU {
    long n = 0;
    Eigen::VectorXd dl, d, du, du2;
    std::vector<int> piv;

    void factor(const SymTridiag& T, double shift) {
        n = T.size();
        d.resize(n);
        dl.resize(std::max<long>(n - 1, 0));
        du.resize(std::max<long>(n - 1, 0));
        du2 = Eigen::VectorXd::Zero(n);
        piv.assign(static_cast<size_t>(n), 0);
        for (long i = 0; i < n; ++i) d[i] = T.diag[i] - shift * T.mass[i];
        for (long i = 0; i + 1 < n; ++i) {
            dl[i] = T.off[i];
            du[i] = T.off[i];
        }
        double tiny = std::numeric_limits<double>::min() * 4.0;
        for (long i = 0; i + 1 < n; ++i) {
            if (std::abs(d[i]) >= std::abs(dl[i])) {
                piv[static_cast<size_t>(i)] = 0;
                if (std::abs(d[i]) < tiny) d[i] = (d[i] < 0.0 ? -tiny : tiny);
                double m = dl[i] / d[i];
                dl[i] = m;
                d[i + 1] -= m * du[i];
            } else {
                piv[static_cast<size_t>(i)] = 1;
                double m = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = m;
                double tmp = d[i + 1];
                d[i + 1] = du[i] - m * tmp;
                du[i] = tmp;
                if (i + 2 < n) {
                    du2[i] = du[i + 1];
                    du[i + 1] = -m * du[i + 1];
                }
            }
        }
        if (n > 0 && std::abs(d[n - 1]) < tiny) {
            d[n - 1] = (d[n - 1] < 0.0 ? -tiny : tiny);
        }
    }

    template <typename Vec>
    Vec solve(const Vec& rhs) const {
        Vec x = rhs;
        for (long i = 0; i + 1 < n; ++i) {
            if (piv[static_cast<size_t>(i)] == 0) {
                x[i + 1] -= dl[i] * x[i];
            } else {
                auto tmp = x[i];
                x[i] = x[i + 1];
                x[i + 1] = tmp - dl[i] * x[i];
            }
        }
        for (long i = n - 1; i >= 0; --i) {
            auto acc = x[i];
            if (i + 1 < n) acc -= du[i] * x[i + 1];
            if (i + 2 < n) acc -= du2[i] * x[i + 2];
            x[i] = acc / d[i];
        }
        return x;
    }
};

} // namespace

int sturm_count(const SymTridiag& T, double shift) {
    long n = T.size();
    double pivmin = pivot_floor(T);
    int count = 0;
    double p = 1.0;
    for (long i = 0; i < n; ++i) {
        double q = T.diag[i] - shift * T.mass[i];
        if (i > 0) q -= T.off[i - 1] * T.off[i - 1] / p;
        if (std::abs(q) < pivmin) q = -pivmin;
        if (q < 0.0) ++count;
        p = q;
    }
    return count;
}

void spectrum_bounds(const SymTridiag& T, double& lo, double& hi) {
    long n = T.size();
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    for (long i = 0; i < n; ++i) {
        double r = 0.0;
        if (i > 0) r += std::abs(T.off[i - 1]);
        if (i + 1 < n) r += std::abs(T.off[i]);
        lo = std::min(lo, (T.diag[i] - r) / T.mass[i]);
        hi = std::max(hi, (T.diag[i] + r) / T.mass[i]);
    }
    if (n == 0) lo = hi = 0.0;
    double pad = 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)});
    lo -= pad;
    hi += pad;
}

double bisect_kth_eigenvalue(const std::function<int(double)>& count_below,
                             int k, double lo, double hi, double rel_tol) {
    if (!(lo < hi)) throw NumericalError("empty bisection bracket");
    for (int iter = 0; iter < 2000; ++iter) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break; // bracket at floating-point resolution
        if (hi - lo <= rel_tol * std::max(1.0, std::abs(mid))) return mid;
        if (count_below(mid) <= k) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

EigenPair inverse_iteration(const SymTridiag& T, double lambda_guess,
                            double target_residual, int max_iter) {
    long n = T.size();
    EigenPair out;
    out.lambda = lambda_guess;
    if (n == 0) return out;

    VectorXd v(n);
    for (long i = 0; i < n; ++i) v[i] = 1.0 + 0.3 * std::sin(1.7 * static_cast<double>(i + 1));

    TridiagLU lu;
    lu.factor(T, lambda_guess);

    auto apply_A = [&](const VectorXd& x) {
        VectorXd y = T.diag.cwiseProduct(x);
        for (long i = 0; i + 1 < n; ++i) {
            y[i] += T.off[i] * x[i + 1];
            y[i + 1] += T.off[i] * x[i];
        }
        return y;
    };

    double lambda = lambda_guess;
    double best_res = std::numeric_limits<double>::infinity();
    VectorXd best_v = v;
    double best_lambda = lambda;

    // Rounding floor of the residual in eigenvalue units: the product A·w
    // cannot be more accurate than eps times the row scale of the pencil.
    double norm_a_inf = 0.0;
    for (long i = 0; i < n; ++i) {
        double row = std::abs(T.diag[i]);
        if (i > 0) row += std::abs(T.off[i - 1]);
        if (i + 1 < n) row += std::abs(T.off[i]);
        norm_a_inf = std::max(norm_a_inf, row);
    }
    double mass_max = T.mass.maxCoeff();

    int perturbations = 0;
    for (int iter = 1; iter <= max_iter; ++iter) {
        VectorXd rhs = T.mass.cwiseProduct(v);
        VectorXd w = lu.solve(rhs);
        double bnorm2 = w.dot(T.mass.cwiseProduct(w));
        if (!(bnorm2 > 0.0) || !std::isfinite(bnorm2)) {
            // The shift sat machine-exactly on an eigenvalue and the solve
            // overflowed through a vanishing pivot. Refactor at a slightly
            // perturbed shift (a few ulps in eigenvalue units) and retry.
            if (++perturbations > 6) break;
            double delta = std::scalbn(std::numeric_limits<double>::epsilon() *
                                           std::max(1.0, std::abs(lambda_guess)),
                                       2 * perturbations);
            lu.factor(T, lambda_guess + delta);
            continue;
        }
        w /= std::sqrt(bnorm2);
        VectorXd Aw = apply_A(w);
        VectorXd Bw = T.mass.cwiseProduct(w);
        lambda = w.dot(Aw) / w.dot(Bw);
        double res = (Aw - lambda * Bw).norm() / Bw.norm();
        v = w;
        out.iterations = iter;
        if (res < best_res) {
            best_res = res;
            best_v = w;
            best_lambda = lambda;
        }
        double floor_res = 64.0 * std::numeric_limits<double>::epsilon() *
                           (norm_a_inf + std::abs(lambda) * mass_max) * w.norm() / Bw.norm();
        if (res <= std::max(target_residual * std::max(1.0, std::abs(lambda)), floor_res)) break;
    }

    // Canonical sign: largest-magnitude component positive.
    long imax = 0;
    best_v.cwiseAbs().maxCoeff(&imax);
    if (best_v[imax] < 0.0) best_v = -best_v;

    out.lambda = best_lambda;
    out.vector = best_v;
    out.residual = best_res;
    return out;
}

VectorXd shifted_solve(const SymTridiag& T, double shift, const VectorXd& rhs) {
    TridiagLU lu;
    lu.factor(T, shift);
    return lu.solve(rhs);
}

VectorXcd shifted_solve(const SymTridiag& T, double shift, const VectorXcd& rhs) {
    TridiagLU lu;
    lu.factor(T, shift);
    VectorXd re = lu.solve(VectorXd(rhs.real()));
    VectorXd im = lu.solve(VectorXd(rhs.imag()));
    VectorXcd out(rhs.size());
    out.real() = re;
    out.imag() = im;
    return out;
}

VectorXcd deflected_solve(const SymTridiag& T, double lambda, const VectorXd& phi,
                          const VectorXcd& rhs, int refine) {
    long n = T.size();
    if (phi.size() != n || rhs.size() != n) throw NumericalError("deflected_solve: size mismatch");
    double rho = 1e-9 * std::max(1.0, std::abs(lambda));
    double phi2 = phi.squaredNorm();
    VectorXd Bphi = T.mass.cwiseProduct(phi);
    double phiB = phi.dot(Bphi);

    auto project_plain = [&](VectorXcd& x) {
        std::complex<double> c = phi.cast<std::complex<double>>().dot(x) / phi2;
        x -= c * phi.cast<std::complex<double>>();
    };
    auto project_B = [&](VectorXcd& x) {
        std::complex<double> c = Bphi.cast<std::complex<double>>().dot(x) / phiB;
        x -= c * phi.cast<std::complex<double>>();
    };
    auto apply_shifted = [&](const VectorXcd& x) {
        VectorXcd y = T.diag.cast<std::complex<double>>().cwiseProduct(x) -
                      lambda * T.mass.cast<std::complex<double>>().cwiseProduct(x);
        for (long i = 0; i + 1 < n; ++i) {
            y[i] += T.off[i] * x[i + 1];
            y[i + 1] += T.off[i] * x[i];
        }
        return y;
    };

    VectorXcd target = rhs;
    project_plain(target);

    TridiagLU lu;
    lu.factor(T, lambda + rho);
    VectorXd re = lu.solve(VectorXd(target.real()));
    VectorXd im = lu.solve(VectorXd(target.imag()));
    VectorXcd w(n);
    w.real() = re;
    w.imag() = im;
    project_B(w);

    for (int pass = 0; pass < refine; ++pass) {
        VectorXcd resid = target - apply_shifted(w);
        project_plain(resid);
        VectorXd rr = lu.solve(VectorXd(resid.real()));
        VectorXd ri = lu.solve(VectorXd(resid.imag()));
        VectorXcd delta(n);
        delta.real() = rr;
        delta.imag() = ri;
        w += delta;
        project_B(w);
    }
    return w;
}

VectorXd pencil_apply(const SymTridiag& T, const VectorXd& x) {
    long n = T.size();
    VectorXd y = T.diag.cwiseProduct(x);
    for (long i = 0; i + 1 < n; ++i) {
        y[i] += T.off[i] * x[i + 1];
        y[i + 1] += T.off[i] * x[i];
    }
    return y;
}

VectorXcd pencil_apply(const SymTridiag& T, const VectorXcd& x) {
    long n = T.size();
    VectorXcd y = T.diag.cast<std::complex<double>>().cwiseProduct(x);
    for (long i = 0; i + 1 < n; ++i) {
        y[i] += T.off[i] * x[i + 1];
        y[i + 1] += T.off[i] * x[i];
    }
    return y;
}

double trapezoid_uniform(const VectorXd& values, double h) {
    long n = values.size();
    if (n < 2) return 0.0;
    double s = 0.5 * (values[0] + values[n - 1]);
    for (long i = 1; i + 1 < n; ++i) s += values[i];
    return s * h;
}

namespace {

double simpson_rec(const std::function<double(double)>& f, double a, double fa,
                   double b, double fb, double m, double fm, double whole,
                   double tol, int depth) {
    double lm = 0.5 * (a + m);
    double rm = 0.5 * (m + b);
    double flm = f(lm);
    double frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    return simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

} // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double tol, int max_depth) {
    if (a == b) return 0.0;
    double m = 0.5 * (a + b);
    double fa = f(a);
    double fb = f(b);
    double fm = f(m);
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

} // namespace stratwave
