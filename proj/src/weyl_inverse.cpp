#include "stratwave/weyl_inverse.hpp"

#include "stratwave/errors.hpp"
#include "stratwave/io.hpp"
#include "stratwave/numerics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace stratwave {

namespace {

constexpr double kClipFraction = 1e-3; // tolerated non-monotone rise, as a fraction of range

// ∫_a^b sqrt(E − u)·(linear through (a, fa), (b, fb)) du, exact. Needs b ≤ E.
double cell_moment(double E, double a, double b, double fa, double fb) {
    if (!(b > a)) return 0.0;
    double beta = (fb - fa) / (b - a);
    double alpha = fa - beta * a;
    double sa = E - a;
    double sb = std::max(E - b, 0.0);
    double c0 = alpha + beta * E;
    double t3 = std::pow(sa, 1.5) - std::pow(sb, 1.5);
    double t5 = std::pow(sa, 2.5) - std::pow(sb, 2.5);
    return c0 * (2.0 / 3.0) * t3 - beta * (2.0 / 5.0) * t5;
}

// K-transform of a piecewise-linear sampled function; optionally prepends the
// anchor segment from (n0, 0) to the first grid sample.
std::vector<double> k_transform_impl(const std::vector<double>& f,
                                     const std::vector<double>& grid, double n0,
                                     bool anchor) {
    if (f.size() != grid.size()) throw AssumptionError("sampled function/grid size mismatch");
    if (grid.size() < 2) throw AssumptionError("K-transform needs at least two grid points");
    for (size_t i = 0; i + 1 < grid.size(); ++i) {
        if (!(grid[i] < grid[i + 1])) throw AssumptionError("E grid must be ascending");
    }
    for (double v : f) {
        if (!std::isfinite(v)) throw AssumptionError("sampled function must be finite");
    }

    size_t n = grid.size();
    std::vector<double> out(n, 0.0);
    double lower = std::max(n0, grid.front());

    for (size_t j = 0; j < n; ++j) {
        double E = grid[j];
        double total = 0.0;
        if (anchor && n0 < grid.front()) {
            double b = std::min(grid.front(), E);
            if (b > n0) {
                double fb = f.front() * (b - n0) / (grid.front() - n0);
                total += cell_moment(E, n0, b, 0.0, fb);
            }
        }
        for (size_t i = 0; i + 1 < n && grid[i] < E; ++i) {
            double a = grid[i], b = grid[i + 1];
            double fa = f[i], fb = f[i + 1];
            if (b <= lower) continue;
            if (a < lower) { // clip the cell at the lower integration limit
                fa = fa + (fb - fa) * (lower - a) / (b - a);
                a = lower;
            }
            if (b > E) { // clip at the kernel root
                fb = fa + (fb - fa) * (E - a) / (b - a);
                b = E;
            }
            if (b > a && a >= lower) total += cell_moment(E, a, b, fa, fb);
        }
        out[j] = total;
    }
    return out;
}

double require_uniform_spacing(const std::vector<double>& grid) {
    if (grid.size() < 2) throw AssumptionError("grid too short");
    double h = (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1);
    for (size_t i = 0; i + 1 < grid.size(); ++i) {
        if (std::abs(grid[i + 1] - grid[i] - h) > 1e-9 * std::max(1.0, std::abs(h))) {
            throw AssumptionError("derivative estimation requires a uniform grid");
        }
    }
    return h;
}

// Third-derivative weights of a local least-squares polynomial fit over the
// window starting at `start`, evaluated at sample index `eval`. Offsets are
// scaled to [−1, 1] for conditioning.
Eigen::VectorXd d3_weights(long window, long degree, long start, long eval, double h) {
    double scale = 0.5 * static_cast<double>(window - 1);
    Eigen::MatrixXd vand(window, degree + 1);
    for (long r = 0; r < window; ++r) {
        double tau = static_cast<double>(start + r - eval) / scale;
        double p = 1.0;
        for (long k = 0; k <= degree; ++k) {
            vand(r, k) = p;
            p *= tau;
        }
    }
    Eigen::MatrixXd gram = vand.transpose() * vand;
    Eigen::MatrixXd pinv = gram.ldlt().solve(vand.transpose());
    double hh = scale * h;
    return pinv.row(3).transpose() * (6.0 / (hh * hh * hh));
}

} // namespace

double area_sublevel(const VerticalProfile& profile, double E) {
    if (!(E < profile.tail_value)) {
        throw AssumptionError("sublevel area diverges for E >= N_inf");
    }
    if (!(E > profile.inf_value())) return 0.0;

    // Pieces of [deepest breakpoint, 0]; below that N equals the tail > E.
    std::vector<double> cuts = profile.breakpoints();
    cuts.push_back(0.0);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    auto integrand = [&](double Z) {
        double ratio = E / profile.evaluate(Z) - 1.0;
        return ratio > 0.0 ? std::sqrt(ratio) : 0.0;
    };

    // Integrate sqrt(E/N − 1) over [lo, hi] with a possible square-root zero
    // at one endpoint; substitute distance t² from that end to remove it.
    auto piece_integral = [&](double lo, double hi, bool root_at_lo, bool root_at_hi) {
        if (!(hi > lo)) return 0.0;
        double tol = 1e-12 * (1.0 + hi - lo);
        if (root_at_lo) {
            double width = hi - lo;
            return integrate_adaptive(
                [&](double t) { return 2.0 * t * integrand(lo + t * t); }, 0.0,
                std::sqrt(width), tol);
        }
        if (root_at_hi) {
            double width = hi - lo;
            return integrate_adaptive(
                [&](double t) { return 2.0 * t * integrand(hi - t * t); }, 0.0,
                std::sqrt(width), tol);
        }
        return integrate_adaptive(integrand, lo, hi, tol);
    };

    double total = 0.0;
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        double lo = cuts[i], hi = cuts[i + 1];
        if (!(hi > lo)) continue;
        double inner_lo = std::nextafter(lo, hi);
        double inner_hi = std::nextafter(hi, lo);
        double n_lo = profile.evaluate(inner_lo);
        double n_hi = profile.evaluate(inner_hi);
        bool in_lo = n_lo < E;
        bool in_hi = n_hi < E;
        if (!in_lo && !in_hi) continue;
        if (in_lo && in_hi) {
            total += piece_integral(lo, hi, false, false);
            continue;
        }
        // One endpoint inside: locate the turning point N(Z*) = E by bisection
        // (N is monotone within each analytic piece).
        double a = inner_lo, b = inner_hi;
        double fa = n_lo - E;
        for (int it = 0; it < 200; ++it) {
            double m = 0.5 * (a + b);
            double fm = profile.evaluate(m) - E;
            if ((fm <= 0.0) == (fa <= 0.0)) {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
            if (b - a <= 4.0 * std::numeric_limits<double>::epsilon() *
                             std::max(1.0, std::abs(m))) {
                break;
            }
        }
        double zstar = 0.5 * (a + b);
        if (in_lo) {
            total += piece_integral(lo, zstar, false, true);
        } else {
            total += piece_integral(zstar, hi, true, false);
        }
    }
    return 2.0 * total;
}

VEstimate estimate_V(const CountingData& counting, double E,
                     const ReconstructionConfig& config) {
    if (counting.xi_grid.empty()) throw AssumptionError("counting table is empty");
    size_t col = counting.E_grid.size();
    for (size_t m = 0; m < counting.E_grid.size(); ++m) {
        if (std::abs(counting.E_grid[m] - E) <= 1e-12 * std::max(1.0, std::abs(E))) {
            col = m;
            break;
        }
    }
    if (col == counting.E_grid.size()) {
        throw AssumptionError("requested energy is not a column of the counting table");
    }
    if (!(config.fit_fraction > 0.0) || !(config.fit_fraction <= 1.0)) {
        throw AssumptionError("fit fraction must lie in (0, 1]");
    }

    double xi_max = counting.xi_grid.back();
    double threshold = (1.0 - config.fit_fraction) * xi_max;
    double sxx = 0.0, sxy = 0.0;
    long used = 0;
    bool any_nonzero = false;
    for (size_t i = 0; i < counting.xi_grid.size(); ++i) {
        double xi = counting.xi_grid[i];
        if (xi < threshold) continue;
        double c = static_cast<double>(counting.counts[i][col]);
        sxx += xi * xi;
        sxy += xi * c;
        if (c != 0.0) any_nonzero = true;
        ++used;
    }
    if (used < 4) {
        throw AssumptionError("fit window holds fewer than 4 wavenumber samples");
    }

    VEstimate est;
    if (!any_nonzero) {
        est.value = 0.0;
        est.low_confidence = true;
        return est;
    }
    est.value = M_PI * sxy / sxx;
    return est;
}

std::vector<double> K_transform(const std::vector<double>& f,
                                const std::vector<double>& E_grid, double N0) {
    return k_transform_impl(f, E_grid, N0, false);
}

std::vector<double> third_derivative(const std::vector<double>& g,
                                     const std::vector<double>& E_grid,
                                     const ReconstructionConfig& config) {
    if (g.size() != E_grid.size()) throw AssumptionError("sampled function/grid size mismatch");
    long n = static_cast<long>(g.size());
    long window = config.window;
    long degree = config.degree;
    if (window % 2 == 0 || window < 5) throw AssumptionError("window must be odd and at least 5");
    if (degree < 3) throw AssumptionError("derivative fit needs polynomial degree >= 3");
    if (window < degree + 2) throw AssumptionError("window must be at least degree + 2");
    if (n < window) throw NumericalError("grid shorter than the smoothing window");
    double h = require_uniform_spacing(E_grid);

    long m = window / 2;
    Eigen::VectorXd center = d3_weights(window, degree, -m, 0, h);

    std::vector<double> out(static_cast<size_t>(n), 0.0);
    for (long i = 0; i < n; ++i) {
        long start = std::clamp(i - m, 0L, n - window);
        Eigen::VectorXd w;
        if (start == i - m) {
            w = center;
        } else {
            w = d3_weights(window, degree, start - i, 0, h);
        }
        double acc = 0.0;
        for (long r = 0; r < window; ++r) acc += w[r] * g[static_cast<size_t>(start + r)];
        out[static_cast<size_t>(i)] = acc;
    }
    return out;
}

ReconstructionResult recover_profile(const std::vector<double>& V_hat,
                                     const ReconstructionConfig& config) {
    const auto& grid = config.E_grid;
    if (V_hat.size() != grid.size()) throw AssumptionError("V samples/grid size mismatch");
    if (grid.size() < 2) throw AssumptionError("reconstruction grid too short");
    if (grid.front() < config.surface_value - 1e-12 * std::max(1.0, std::abs(grid.front()))) {
        throw AssumptionError("E grid must start at or above the surface value N0");
    }

    ReconstructionResult res;
    res.E_grid = grid;
    res.V_hat = V_hat;
    res.inversion_constant_used = config.inversion_constant;

    bool clipped_negative_v = false;
    for (double& v : res.V_hat) {
        if (v < 0.0) {
            v = 0.0;
            clipped_negative_v = true;
        }
    }
    if (clipped_negative_v) res.flags.push_back("vhat-negative-clipped");

    res.KV = k_transform_impl(res.V_hat, grid, config.surface_value, true);
    std::vector<double> d3 = third_derivative(res.KV, grid, config);

    res.f_hat.resize(d3.size());
    for (size_t j = 0; j < d3.size(); ++j) res.f_hat[j] = config.inversion_constant * d3[j];
    res.flags.push_back("boundary-windows-low-confidence");

    // Depth slope z'(E) = −sqrt(E)·f_hat; measure how badly the unclipped slope
    // violates monotonicity before enforcing the sign.
    size_t n = grid.size();
    std::vector<double> z_raw(n, 0.0);
    auto slope = [&](size_t j, double f) { return -std::sqrt(grid[j]) * f; };
    z_raw[0] = slope(0, res.f_hat[0]) * (grid[0] - config.surface_value);
    for (size_t j = 1; j < n; ++j) {
        double step = 0.5 * (slope(j - 1, res.f_hat[j - 1]) + slope(j, res.f_hat[j])) *
                      (grid[j] - grid[j - 1]);
        z_raw[j] = z_raw[j - 1] + step;
    }
    double run_min = z_raw[0];
    double max_rise = 0.0;
    double z_lo = z_raw[0], z_hi = z_raw[0];
    for (double z : z_raw) {
        max_rise = std::max(max_rise, z - run_min);
        run_min = std::min(run_min, z);
        z_lo = std::min(z_lo, z);
        z_hi = std::max(z_hi, z);
    }
    double range = z_hi - z_lo;
    if (range > 0.0 && max_rise > kClipFraction * range) {
        throw NumericalError(
            "reconstruction failed: recovered depth map is non-monotone beyond tolerance; "
            "the inversion assumes a profile that decreases with depth");
    }

    bool clipped_sign = false;
    for (double& f : res.f_hat) {
        if (f < 0.0) {
            f = 0.0;
            clipped_sign = true;
        }
    }
    if (clipped_sign) res.flags.push_back("sign-clipped");

    res.z_of_E.assign(n, 0.0);
    res.z_of_E[0] = slope(0, res.f_hat[0]) * (grid[0] - config.surface_value);
    for (size_t j = 1; j < n; ++j) {
        double step = 0.5 * (slope(j - 1, res.f_hat[j - 1]) + slope(j, res.f_hat[j])) *
                      (grid[j] - grid[j - 1]);
        res.z_of_E[j] = res.z_of_E[j - 1] + step;
    }

    double depth_range = res.z_of_E.front() - res.z_of_E.back(); // ≥ 0
    if (!(depth_range > 1e-12 * (1.0 + std::abs(res.z_of_E.front())))) {
        res.flags.push_back("empty-reconstruction");
        return res;
    }

    // Invert the non-increasing map E ↦ z(E) onto a uniform ascending depth grid.
    size_t nd = n;
    res.depth_grid.resize(nd);
    res.N_reconstructed.resize(nd);
    double z_deep = res.z_of_E.back();
    double z_shallow = res.z_of_E.front();
    size_t seg = n - 2; // z index such that z[seg] ≥ d ≥ z[seg+1]
    for (size_t i = 0; i < nd; ++i) {
        double d = z_deep + (z_shallow - z_deep) * static_cast<double>(i) /
                               static_cast<double>(nd - 1);
        while (seg > 0 && res.z_of_E[seg] < d) --seg;
        double za = res.z_of_E[seg], zb = res.z_of_E[seg + 1];
        double E;
        if (za <= zb + 0.0) { // flat (clipped) segment: take its left edge
            E = grid[seg];
        } else {
            double t = (za - d) / (za - zb);
            t = std::clamp(t, 0.0, 1.0);
            E = grid[seg] + t * (grid[seg + 1] - grid[seg]);
        }
        res.depth_grid[i] = d;
        res.N_reconstructed[i] = E;
    }
    return res;
}

ErrorMetrics reconstruction_error(const VerticalProfile& reference,
                                  const ReconstructionResult& result) {
    if (result.depth_grid.size() < 2) {
        throw AssumptionError("reconstruction holds no resolved depth range to compare");
    }
    ErrorMetrics m;
    m.z_lo = result.depth_grid.front();
    m.z_hi = result.depth_grid.back();

    double num_l2 = 0.0, den_l2 = 0.0, num_sup = 0.0, den_sup = 0.0;
    size_t n = result.depth_grid.size();
    for (size_t i = 0; i < n; ++i) {
        double w = 1.0;
        if (i == 0 || i + 1 == n) w = 0.5;
        double ref = reference.evaluate(result.depth_grid[i]);
        double diff = result.N_reconstructed[i] - ref;
        num_l2 += w * diff * diff;
        den_l2 += w * ref * ref;
        num_sup = std::max(num_sup, std::abs(diff));
        den_sup = std::max(den_sup, std::abs(ref));
    }
    if (!(den_l2 > 0.0)) throw AssumptionError("reference vanishes on the comparison window");
    m.rel_l2 = std::sqrt(num_l2 / den_l2);
    m.rel_sup = num_sup / den_sup;
    m.valid = true;
    return m;
}

std::string reconstruction_to_json(const ReconstructionResult& result) {
    nlohmann::ordered_json j;
    j["E_grid"] = result.E_grid;
    j["V_hat"] = result.V_hat;
    j["KV"] = result.KV;
    j["f_hat"] = result.f_hat;
    j["z_of_E"] = result.z_of_E;
    j["depth_grid"] = result.depth_grid;
    j["N_reconstructed"] = result.N_reconstructed;
    j["errors"] = {{"rel_l2", result.errors.rel_l2},
                   {"rel_sup", result.errors.rel_sup},
                   {"z_lo", result.errors.z_lo},
                   {"z_hi", result.errors.z_hi},
                   {"valid", result.errors.valid}};
    j["flags"] = result.flags;
    j["metadata"] = {{"weyl_power_used", result.weyl_power_used},
                     {"weyl_power_alternative", result.weyl_power_alternative},
                     {"inversion_constant_used", result.inversion_constant_used},
                     {"inversion_constant_alternative", result.inversion_constant_alternative}};
    return j.dump(2) + "\n";
}

} // namespace stratwave
