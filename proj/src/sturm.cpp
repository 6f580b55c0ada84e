#include "stratwave/sturm.hpp"

#include "stratwave/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace stratwave {

namespace {

double nudge_up(double s) {
    return s + 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(s));
}

double robin_kappa(double xi, double shift, double n_deep) {
    double k2 = xi * xi - shift / n_deep;
    return k2 > 0.0 ? std::sqrt(k2) : 0.0;
}

// Counting function for the assembled pencil at shift σ. Under exact_decay the
// bottom closure N_deep·κ(σ) is evaluated at the shift itself, which keeps the
// count monotone (κ decreases in σ).
int pencil_count(const AssembledOperator& op, double shift) {
    if (!op.has_bottom_node) return sturm_count(op.T, shift);
    SymTridiag adjusted = op.T;
    adjusted.diag[0] += op.n_deep * robin_kappa(op.xi, shift, op.n_deep);
    return sturm_count(adjusted, shift);
}

double potential_coeff(const VerticalProfile& p, double z_min, double h,
                       FluxSampling sampling, long node) {
    double zc = z_min + h * static_cast<double>(node);
    if (sampling == FluxSampling::midpoint) return p.evaluate(zc);
    return p.mean_over(zc - 0.5 * h, zc + 0.5 * h);
}

double bottom_potential_coeff(const VerticalProfile& p, double z_min, double h,
                              FluxSampling sampling) {
    if (sampling == FluxSampling::midpoint) return p.evaluate(z_min);
    return p.mean_over(z_min, z_min + 0.5 * h);
}

} // namespace

std::vector<double> closed_grid(double z_min, long n_points) {
    double h = -z_min / static_cast<double>(n_points + 1);
    std::vector<double> g(static_cast<size_t>(n_points) + 2);
    for (long i = 0; i < n_points + 2; ++i) {
        g[static_cast<size_t>(i)] = z_min + h * static_cast<double>(i);
    }
    g.back() = 0.0;
    return g;
}

AssembledOperator assemble_operator(const VerticalProfile& profile, double xi,
                                    const Discretization& disc) {
    if (!(xi > 0.0)) throw AssumptionError("wavenumber must be positive");
    if (!(disc.z_min < profile.cutoff_depth)) {
        throw AssumptionError("truncation depth must lie strictly below the profile cutoff");
    }
    if (disc.n_points < 16) throw AssumptionError("need at least 16 interior grid points");
    if (!(disc.continuum_guard > 0.0) || !(disc.continuum_guard < 1.0)) {
        throw AssumptionError("continuum guard must lie in (0, 1)");
    }

    long n = disc.n_points;
    double h = disc.spacing();
    double z_min = disc.z_min;
    bool bottom = disc.bottom_bc == BottomCondition::exact_decay;
    long size = bottom ? n + 1 : n;

    auto flux_at = [&](long cell) { // coefficient between nodes `cell` and `cell+1`
        double a = z_min + h * static_cast<double>(cell);
        double b = a + h;
        if (disc.sampling == FluxSampling::midpoint) return profile.evaluate(0.5 * (a + b));
        return profile.harmonic_mean_over(a, b);
    };
    auto pot_at = [&](long node) { // node-centered potential weight (without ξ²)
        return potential_coeff(profile, z_min, h, disc.sampling, node);
    };

    AssembledOperator op;
    op.h = h;
    op.z_min = z_min;
    op.n_interior = n;
    op.has_bottom_node = bottom;
    op.n_deep = profile.evaluate(z_min);
    op.xi = xi;
    op.n_inf = profile.tail_value;
    op.T.diag.resize(size);
    op.T.off.resize(size - 1);
    op.T.mass.resize(size);

    double xi2 = xi * xi;
    long base = bottom ? 0 : 1; // grid node index of unknown 0

    for (long u = 0; u < size; ++u) {
        long node = base + u;
        if (bottom && u == 0) {
            // Half-cell row at the bottom node; the Robin closure N_deep·κ is
            // added per shift during counting / at the frozen eigenvalue.
            double pot0 = bottom_potential_coeff(profile, z_min, h, disc.sampling);
            op.T.diag[u] = flux_at(0) / h + 0.5 * h * pot0 * xi2;
            op.T.mass[u] = 0.5 * h;
        } else {
            op.T.diag[u] = (flux_at(node - 1) + flux_at(node)) / h + h * pot_at(node) * xi2;
            op.T.mass[u] = h;
        }
        if (u + 1 < size) op.T.off[u] = -flux_at(node) / h;
        if (!(op.T.diag[u] > 0.0) || !std::isfinite(op.T.diag[u])) {
            throw AssumptionError("non-positive coefficient encountered during assembly");
        }
    }
    return op;
}

SymTridiag assemble_generic(const std::function<double(double)>& coeff, double xi2,
                            double z_min, long n_points) {
    long n = n_points;
    double h = -z_min / static_cast<double>(n_points + 1);
    SymTridiag T;
    T.diag.resize(n);
    T.off.resize(n - 1);
    T.mass = Eigen::VectorXd::Constant(n, h);
    auto flux_at = [&](long cell) {
        return coeff(z_min + h * (static_cast<double>(cell) + 0.5));
    };
    for (long u = 0; u < n; ++u) {
        long node = u + 1;
        double zc = z_min + h * static_cast<double>(node);
        T.diag[u] = (flux_at(node - 1) + flux_at(node)) / h + h * coeff(zc) * xi2;
        if (u + 1 < n) T.off[u] = -flux_at(node) / h;
    }
    return T;
}

int count_below(const VerticalProfile& profile, double xi, double E_scaled,
                const Discretization& disc) {
    if (!(E_scaled < profile.tail_value)) {
        throw AssumptionError("counting energy must lie strictly below the continuum (E < N_inf)");
    }
    AssembledOperator op = assemble_operator(profile, xi, disc);
    return pencil_count(op, nudge_up(E_scaled * xi * xi));
}

int count_below(const AssembledOperator& op, double sigma) {
    return pencil_count(op, nudge_up(sigma));
}

double potential_integral(const VerticalProfile& profile, const ModePair& mode) {
    long n_closed = mode.eigenfunction.size();
    if (n_closed < 3 || !(mode.h > 0.0)) {
        throw AssumptionError("mode carries no usable grid for quadrature");
    }
    long n = n_closed - 2;
    double sum = 0.0;
    if (mode.bottom_bc == BottomCondition::exact_decay) {
        double c0 = bottom_potential_coeff(profile, mode.z_min, mode.h, mode.sampling);
        sum += 0.5 * mode.h * c0 * mode.eigenfunction[0] * mode.eigenfunction[0];
    }
    for (long node = 1; node <= n; ++node) {
        double c = potential_coeff(profile, mode.z_min, mode.h, mode.sampling, node);
        sum += mode.h * c * mode.eigenfunction[node] * mode.eigenfunction[node];
    }
    return sum;
}

std::vector<ModePair> solve_modes(const VerticalProfile& profile, double xi,
                                  const Discretization& disc) {
    AssembledOperator op = assemble_operator(profile, xi, disc);
    double threshold = (1.0 - disc.continuum_guard) * profile.tail_value * xi * xi;
    double edge_threshold = (1.0 - disc.edge_band) * profile.tail_value * xi * xi;

    int k_total = pencil_count(op, threshold);
    std::vector<ModePair> modes;
    if (k_total <= 0) return modes;

    double lo_bound, hi_bound;
    spectrum_bounds(op.T, lo_bound, hi_bound);
    lo_bound = std::max(lo_bound, 0.0);

    auto counter = [&](double s) { return pencil_count(op, s); };

    for (int k = 0; k < k_total; ++k) {
        double lam = bisect_kth_eigenvalue(counter, k, lo_bound, threshold, 1e-12);

        SymTridiag final_T = op.T;
        if (op.has_bottom_node) {
            // One fixed-point pass: freeze the bottom closure at the current
            // eigenvalue estimate and re-solve the now-linear pencil.
            final_T.diag[0] += op.n_deep * robin_kappa(op.xi, lam, op.n_deep);
            auto frozen_counter = [&](double s) { return sturm_count(final_T, s); };
            lam = bisect_kth_eigenvalue(frozen_counter, k, lo_bound, threshold * (1.0 + 1e-9), 1e-12);
        }

        EigenPair pair = inverse_iteration(final_T, lam, 1e-12, 50);
        if (!std::isfinite(pair.lambda) ||
            !(pair.residual <= 1e-6 * std::max(1.0, std::abs(pair.lambda))) ||
            std::abs(pair.lambda - lam) > 1e-6 * std::max(1.0, std::abs(lam))) {
            throw NumericalError("inverse iteration failed to converge near bracket [" +
                                 std::to_string(lam) + "]");
        }

        ModePair m;
        m.branch_index = k + 1;
        m.lambda = pair.lambda;
        m.xi = xi;
        m.z_min = op.z_min;
        m.h = op.h;
        m.eigen_residual = pair.residual;
        m.sampling = disc.sampling;
        m.bottom_bc = disc.bottom_bc;

        long n = op.n_interior;
        Eigen::VectorXd full(n + 2);
        if (op.has_bottom_node) {
            full.segment(0, n + 1) = pair.vector;
            full[n + 1] = 0.0;
        } else {
            full[0] = 0.0;
            full.segment(1, n) = pair.vector;
            full[n + 1] = 0.0;
        }
        // Canonical sign on the closed grid: largest-|φ| sample positive.
        long imax = 0;
        full.cwiseAbs().maxCoeff(&imax);
        if (full[imax] < 0.0) full = -full;
        m.eigenfunction = full;
        m.normalization_error =
            std::abs(trapezoid_uniform(full.cwiseProduct(full), op.h) - 1.0);

        double k2 = xi * xi - m.lambda / profile.tail_value;
        m.decay_rate = k2 > 0.0 ? std::sqrt(k2) : 0.0;
        m.edge_flag = m.lambda > edge_threshold;
        modes.push_back(std::move(m));
    }
    return modes;
}

std::vector<double> step_oracle(double n_layer, double n_halfspace, double thickness,
                                double xi) {
    if (!(n_layer > 0.0) || !(n_layer < n_halfspace)) {
        throw AssumptionError("step oracle requires 0 < n_layer < n_halfspace");
    }
    std::vector<double> out;
    double t = thickness;
    double q_max = xi * std::sqrt(n_halfspace / n_layer - 1.0);
    if (!(q_max > 0.0)) return out;

    double ratio = std::sqrt(n_layer / n_halfspace);
    auto W = [&](double q) {
        double arg = q_max * q_max - q * q;
        double kappa = arg > 0.0 ? ratio * std::sqrt(arg) : 0.0;
        return n_halfspace * kappa * std::sin(q * t) + n_layer * q * std::cos(q * t);
    };

    for (int j = 1;; ++j) {
        double a = (2.0 * j - 1.0) * M_PI / (2.0 * t);
        if (a >= q_max) break;
        double b = std::min(static_cast<double>(j) * M_PI / t, q_max);
        double fa = W(a);
        double fb = W(b);
        if (fa == 0.0) {
            out.push_back(n_layer * (xi * xi + a * a));
            continue;
        }
        if (fa * fb > 0.0) {
            // The sign structure guarantees a change; reaching here means the
            // bracket degenerated at floating-point resolution near q_max.
            continue;
        }
        for (int iter = 0; iter < 300; ++iter) {
            double mid = 0.5 * (a + b);
            if (b - a <= 0.5e-12 * std::max(1.0, mid)) break;
            double fm = W(mid);
            if (fm == 0.0) {
                a = b = mid;
                break;
            }
            if (fa * fm < 0.0) {
                b = mid;
                fb = fm;
            } else {
                a = mid;
                fa = fm;
            }
        }
        double q = 0.5 * (a + b);
        out.push_back(n_layer * (xi * xi + q * q));
    }
    std::sort(out.begin(), out.end());
    return out;
}

double default_z_min(const VerticalProfile& profile, double xi, double continuum_guard) {
    double kappa_min = xi * std::sqrt(std::max(continuum_guard, 1e-300));
    double margin = std::min(std::log(1e10) / kappa_min, 64.0);
    return profile.cutoff_depth - margin;
}

} // namespace stratwave
