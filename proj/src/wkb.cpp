#include "stratwave/wkb.hpp"

#include "stratwave/errors.hpp"
#include "stratwave/io.hpp"
#include "stratwave/numerics.hpp"
#include "stratwave/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <sstream>

namespace stratwave {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr std::complex<double> kI{0.0, 1.0};

void canonical_sign(Eigen::VectorXd& v) {
    Eigen::Index idx = 0;
    v.cwiseAbs().maxCoeff(&idx);
    if (v[idx] < 0.0) v = -v;
}

struct ColumnSolve {
    SymTridiag T;
    double lambda = 0.0;
    Eigen::VectorXd phi; // B-normalized (h·Σφ² = 1), canonical sign
};

// Transverse eigensolve for one column: flux coefficient is the layer law at
// this x, the squared-wavenumber weight `xi2_eff` may carry the modified
// horizontal symbol.
ColumnSolve solve_column(const LateralMedium& medium, double x, double xi2_eff,
                         double z_min, long n, int branch) {
    ColumnSolve col;
    col.T = assemble_generic(
        [&](double Z) { return medium.vertical_law(x, Z); }, xi2_eff, z_min, n);
    double lo = 0.0, hi = 0.0;
    spectrum_bounds(col.T, lo, hi);
    auto count = [&](double s) { return sturm_count(col.T, s); };
    if (branch - 1 >= n) {
        throw AssumptionError("branch index exceeds the grid's mode capacity");
    }
    double lam = bisect_kth_eigenvalue(count, branch - 1, lo, hi);
    EigenPair pair = inverse_iteration(col.T, lam);
    if (!std::isfinite(pair.lambda) ||
        !(pair.residual <= 1e-6 * std::max(1.0, std::abs(pair.lambda))) ||
        std::abs(pair.lambda - lam) > 1e-6 * std::max(1.0, std::abs(lam))) {
        throw NumericalError("transverse eigensolve inconsistent at x = " +
                             format_double(x));
    }
    col.lambda = pair.lambda;
    col.phi = pair.vector;
    canonical_sign(col.phi);
    double tail = medium.vertical_law(x, z_min);
    if (!(col.lambda < tail * xi2_eff)) {
        throw AssumptionError("requested branch is not a guided mode at x = " +
                              format_double(x));
    }
    return col;
}

void align_to(const Eigen::VectorXd& reference, Eigen::VectorXd& v) {
    if (reference.dot(v) < 0.0) v = -v;
}

// First-order machinery shared by the frozen-point builder and the residual
// harness. `xi_transport` multiplies the horizontal transport terms (the plain
// wavenumber, or the discrete first-difference symbol); `xi2_weight` is the
// squared-wavenumber weight of the slow-depth perturbation assembly.
struct CorrectorInput {
    const LateralMedium* medium = nullptr;
    double x = 0.0;
    double z_min = 0.0;
    double h = 0.0;
    long n = 0;
    double xi_transport = 0.0;
    double xi2_weight = 0.0;
};

struct CorrectorOutput {
    std::complex<double> a1{0.0, 0.0};
    Eigen::VectorXcd phi1;
};

// dphi0: horizontal derivative of the eigenfunction (already sign-aligned);
// dV: horizontal derivative of the layer law at the nodes.
CorrectorOutput build_corrector(const CorrectorInput& in, const ColumnSolve& col,
                                const Eigen::VectorXd& dphi0,
                                const Eigen::VectorXd& dV) {
    const LateralMedium& medium = *in.medium;
    Eigen::VectorXd g(in.n); // L₁φ₀ = −i·g in strong form
    for (long i = 0; i < in.n; ++i) {
        double Z = in.z_min + in.h * static_cast<double>(i + 1);
        g[i] = in.xi_transport *
               (2.0 * medium.vertical_law(in.x, Z) * dphi0[i] + dV[i] * col.phi[i]);
    }
    Eigen::VectorXd G1phi = Eigen::VectorXd::Zero(in.n);
    if (medium.regularity == Regularity::assumption_a && !medium.depth_coeffs.empty()) {
        SymTridiag G1 = assemble_generic(
            [&](double Z) { return Z * medium.layer(1, in.x, Z); }, in.xi2_weight,
            in.z_min, in.n);
        G1phi = pencil_apply(G1, col.phi);
    }
    CorrectorOutput out;
    out.a1 = std::complex<double>(col.phi.dot(G1phi), -in.h * col.phi.dot(g));
    Eigen::VectorXcd rhs =
        out.a1 * (in.h * col.phi).cast<std::complex<double>>() +
        kI * (in.h * g).cast<std::complex<double>>() -
        G1phi.cast<std::complex<double>>();
    out.phi1 = deflected_solve(col.T, col.lambda, col.phi, rhs);
    return out;
}

double fit_loglog_slope(const std::vector<double>& eps, const std::vector<double>& r) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    double n = static_cast<double>(eps.size());
    for (size_t i = 0; i < eps.size(); ++i) {
        double x = std::log(eps[i]);
        double y = std::log(std::max(r[i], 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double denom = n * sxx - sx * sx;
    return (n * sxy - sx * sy) / denom;
}

constexpr double kFloor = 1e-9; // relative residual treated as discretization floor

} // namespace

std::vector<Eigen::VectorXd> taylor_layers(const LateralMedium& medium, double x,
                                           int l_max, const Discretization& disc) {
    if (l_max < 0) throw AssumptionError("layer order must be non-negative");
    if (medium.regularity == Regularity::assumption_b && l_max >= 1) {
        throw AssumptionError(
            "slow-depth layers of order >= 1 require assumption-A regularity");
    }
    long n = disc.n_points;
    double h = disc.spacing();
    std::vector<Eigen::VectorXd> layers;
    layers.reserve(static_cast<size_t>(l_max) + 1);
    for (int l = 0; l <= l_max; ++l) {
        Eigen::VectorXd v(n);
        for (long i = 0; i < n; ++i) {
            double Z = disc.z_min + h * static_cast<double>(i + 1);
            v[i] = medium.layer(l, x, Z);
        }
        layers.push_back(std::move(v));
    }
    return layers;
}

ModeExpansion first_order_terms(const LateralMedium& medium, double x, double xi,
                                const ModePair& mode, const Discretization& disc) {
    if (!(xi > 0.0)) throw AssumptionError("xi must be positive");
    if (std::abs(mode.xi - xi) > 1e-9 * std::max(1.0, xi)) {
        throw AssumptionError("mode was solved at a different wavenumber");
    }
    int b = mode.branch_index;
    if (b < 1) throw AssumptionError("branch index must be >= 1");
    long n = disc.n_points;
    double z_min = disc.z_min;
    double h = disc.spacing();

    ColumnSolve col = solve_column(medium, x, xi * xi, z_min, n, b);
    if (std::abs(col.lambda - mode.lambda) > 0.05 * std::max(1.0, std::abs(col.lambda))) {
        throw AssumptionError("mode eigenvalue does not match the medium at this point");
    }
    // Simplicity gap to the neighboring eigenvalues.
    {
        double lo = 0.0, hi = 0.0;
        spectrum_bounds(col.T, lo, hi);
        auto count = [&](double s) { return sturm_count(col.T, s); };
        double gap = std::numeric_limits<double>::infinity();
        if (b >= 2) gap = std::min(gap, col.lambda - bisect_kth_eigenvalue(count, b - 2, lo, hi));
        if (b < n) gap = std::min(gap, bisect_kth_eigenvalue(count, b, lo, hi) - col.lambda);
        if (!(gap > 1e-6 * std::max(1.0, std::abs(col.lambda)))) {
            throw AssumptionError("mode is near-degenerate; the corrector is ill-posed");
        }
    }

    // Horizontal derivative of the eigenfunction: re-solve at x ± δ and central
    // difference, with the gauge sign fixed by overlap with the center column.
    const double delta = 2.0 * kPi / 4096.0;
    ColumnSolve plus = solve_column(medium, x + delta, xi * xi, z_min, n, b);
    ColumnSolve minus = solve_column(medium, x - delta, xi * xi, z_min, n, b);
    align_to(col.phi, plus.phi);
    align_to(col.phi, minus.phi);
    Eigen::VectorXd dphi0 = (plus.phi - minus.phi) / (2.0 * delta);
    Eigen::VectorXd dV(n);
    for (long i = 0; i < n; ++i) {
        double Z = z_min + h * static_cast<double>(i + 1);
        dV[i] = medium.dx_vertical_law(x, Z);
    }

    CorrectorInput in;
    in.medium = &medium;
    in.x = x;
    in.z_min = z_min;
    in.h = h;
    in.n = n;
    in.xi_transport = xi;
    in.xi2_weight = xi * xi;
    CorrectorOutput cor = build_corrector(in, col, dphi0, dV);

    ModeExpansion exp;
    exp.phi0 = col.phi;
    exp.a0 = col.lambda;
    exp.a1 = cor.a1;
    exp.phi1 = cor.phi1;
    exp.xi = xi;
    exp.x0 = x;
    exp.branch_index = b;
    return exp;
}

Eigen::VectorXcd apply_H_2d(const LateralMedium& medium, double epsilon,
                            const Eigen::VectorXcd& field, const Grid2d& grid) {
    if (!(epsilon > 0.0)) throw AssumptionError("epsilon must be positive");
    long nx = grid.n_x, nz = grid.n_z;
    if (nx < 3 || nz < 3) throw AssumptionError("grid too small for the flux stencil");
    if (field.size() != nx * nz) {
        throw AssumptionError("field length does not match the grid");
    }
    if (nz < 8) throw NumericalError("layer under-resolved: need at least 8 depth rows");
    double hx = grid.h_x();
    double hz = grid.h_z();
    // −ε²∂_z(n ∂_z) in the layer variable Z = z/ε carries 1/h_Z² exactly.
    double wz = 1.0 / (hz * hz);
    double wx = epsilon * epsilon / (hx * hx);

    // Coefficient at the x-face to the RIGHT of column j, per depth row.
    Eigen::MatrixXd dface(nz, nx);
    parallel_for(nx, [&](long j) {
        double xf = (static_cast<double>(j) + 0.5) * hx;
        for (long m = 0; m < nz; ++m) {
            double Z = grid.z_min + hz * static_cast<double>(m + 1);
            dface(m, j) = medium.n2d(xf, epsilon * Z, epsilon);
        }
    });

    Eigen::VectorXcd out(nx * nz);
    parallel_for(nx, [&](long j) {
        double xj = static_cast<double>(j) * hx;
        long jp = (j + 1) % nx, jm = (j + nx - 1) % nx;
        Eigen::VectorXd cz(nz + 1); // z-face coefficients, bottom to top
        for (long m = 0; m <= nz; ++m) {
            double Zf = grid.z_min + hz * (static_cast<double>(m) + 0.5);
            cz[m] = medium.n2d(xj, epsilon * Zf, epsilon);
        }
        for (long m = 0; m < nz; ++m) {
            long idx = j * nz + m;
            std::complex<double> v = wz * (cz[m] + cz[m + 1]) * field[idx];
            if (m > 0) v -= wz * cz[m] * field[idx - 1];
            if (m + 1 < nz) v -= wz * cz[m + 1] * field[idx + 1];
            double dp = dface(m, j), dm = dface(m, jm);
            v += wx * ((dp + dm) * field[idx] - dm * field[jm * nz + m] -
                       dp * field[jp * nz + m]);
            out[idx] = v;
        }
    });
    return out;
}

ResidualReport residual_decay(const LateralMedium& medium,
                              const ModeExpansion& expansion,
                              const std::vector<double>& epsilons,
                              const Discretization& disc) {
    if (epsilons.size() < 3) {
        throw AssumptionError("need at least 3 epsilon values for a slope fit");
    }
    for (size_t i = 0; i < epsilons.size(); ++i) {
        if (!(epsilons[i] > 0.0)) throw AssumptionError("epsilon must be positive");
        if (i > 0 && !(epsilons[i] > epsilons[i - 1])) {
            throw AssumptionError("epsilon list must be strictly ascending");
        }
    }
    double xi = expansion.xi;
    int b = expansion.branch_index;
    if (!(xi > 0.0) || b < 1) throw AssumptionError("expansion lacks a valid mode");
    long nz = disc.n_points;
    double z_min = disc.z_min;
    double h = disc.spacing();
    if (nz < 8) throw NumericalError("layer under-resolved: need at least 8 depth rows");

    ResidualReport rep;
    rep.epsilons = epsilons;
    bool xind = medium.x_independent();

    for (double eps : epsilons) {
        double kreal = xi / eps;
        long k = std::llround(kreal);
        if (std::abs(kreal - static_cast<double>(k)) > 1e-9 * std::max(1.0, kreal)) {
            throw AssumptionError(
                "xi/epsilon must be an integer so the phase is periodic");
        }
        long nx = std::max<long>(512,
                                 static_cast<long>(std::ceil(16.0 * std::pow(eps, -1.5))));
        if (nx < 4 * k) nx = 4 * k;
        Grid2d grid;
        grid.n_x = nx;
        grid.n_z = nz;
        grid.z_min = z_min;
        double hx = grid.h_x();
        double xi_hat2 = eps * eps * (2.0 - 2.0 * std::cos(k * hx)) / (hx * hx);
        double xi_tilde = eps * std::sin(k * hx) / hx;

        // Pass 1: transverse eigenpairs per column (one solve if x-independent).
        Eigen::MatrixXd phi0m(nz, nx);
        Eigen::VectorXd lam(nx);
        std::mutex err_mutex;
        std::string err;
        if (xind) {
            ColumnSolve c = solve_column(medium, 0.0, xi_hat2, z_min, nz, b);
            lam.setConstant(c.lambda);
            for (long j = 0; j < nx; ++j) phi0m.col(j) = c.phi;
        } else {
            parallel_for(nx, [&](long j) {
                try {
                    double xj = static_cast<double>(j) * hx;
                    ColumnSolve c = solve_column(medium, xj, xi_hat2, z_min, nz, b);
                    lam[j] = c.lambda;
                    phi0m.col(j) = c.phi;
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (err.empty()) err = e.what();
                }
            });
            if (!err.empty()) throw NumericalError(err);
            // Gauge alignment along the chain (canonical sign can flip between
            // neighboring columns when the peak sample migrates).
            for (long j = 1; j < nx; ++j) {
                Eigen::VectorXd cur = phi0m.col(j);
                if (phi0m.col(j - 1).dot(cur) < 0.0) phi0m.col(j) = -cur;
            }
            if (expansion.phi0.size() == nz) {
                long j0 = static_cast<long>(std::llround(expansion.x0 / hx)) % nx;
                if (j0 < 0) j0 += nx;
                if (expansion.phi0.dot(phi0m.col(j0)) < 0.0) phi0m = -phi0m;
            }
        }

        // Pass 2: correctors per column.
        Eigen::MatrixXcd phi1m(nz, nx);
        Eigen::VectorXcd a1(nx);
        if (xind) {
            ColumnSolve c = solve_column(medium, 0.0, xi_hat2, z_min, nz, b);
            CorrectorInput in;
            in.medium = &medium;
            in.x = 0.0;
            in.z_min = z_min;
            in.h = h;
            in.n = nz;
            in.xi_transport = xi_tilde;
            in.xi2_weight = xi_hat2;
            CorrectorOutput cor = build_corrector(
                in, c, Eigen::VectorXd::Zero(nz), Eigen::VectorXd::Zero(nz));
            a1.setConstant(cor.a1);
            for (long j = 0; j < nx; ++j) phi1m.col(j) = cor.phi1;
        } else {
            parallel_for(nx, [&](long j) {
                try {
                    double xj = static_cast<double>(j) * hx;
                    long jp = (j + 1) % nx, jm = (j + nx - 1) % nx;
                    ColumnSolve c;
                    c.T = assemble_generic(
                        [&](double Z) { return medium.vertical_law(xj, Z); }, xi_hat2,
                        z_min, nz);
                    c.lambda = lam[j];
                    c.phi = phi0m.col(j);
                    Eigen::VectorXd dphi0 =
                        (phi0m.col(jp) - phi0m.col(jm)) / (2.0 * hx);
                    Eigen::VectorXd dV(nz);
                    for (long m = 0; m < nz; ++m) {
                        double Z = z_min + h * static_cast<double>(m + 1);
                        dV[m] = (medium.vertical_law(xj + 0.5 * hx, Z) -
                                 medium.vertical_law(xj - 0.5 * hx, Z)) /
                                hx;
                    }
                    CorrectorInput in;
                    in.medium = &medium;
                    in.x = xj;
                    in.z_min = z_min;
                    in.h = h;
                    in.n = nz;
                    in.xi_transport = xi_tilde;
                    in.xi2_weight = xi_hat2;
                    CorrectorOutput cor = build_corrector(in, c, dphi0, dV);
                    a1[j] = cor.a1;
                    phi1m.col(j) = cor.phi1;
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (err.empty()) err = e.what();
                }
            });
            if (!err.empty()) throw NumericalError(err);
        }

        // Fields and residuals.
        Eigen::VectorXcd psi0(nx * nz), psi1(nx * nz);
        for (long j = 0; j < nx; ++j) {
            double xj = static_cast<double>(j) * hx;
            std::complex<double> phase =
                std::exp(kI * (static_cast<double>(k) * xj));
            for (long m = 0; m < nz; ++m) {
                psi0[j * nz + m] = phase * phi0m(m, j);
                psi1[j * nz + m] = phase * (phi0m(m, j) + eps * phi1m(m, j));
            }
        }
        double r0, r1;
        {
            Eigen::VectorXcd H0 = apply_H_2d(medium, eps, psi0, grid);
            double num = 0.0;
            for (long j = 0; j < nx; ++j) {
                for (long m = 0; m < nz; ++m) {
                    long idx = j * nz + m;
                    num += std::norm(H0[idx] - lam[j] * psi0[idx]);
                }
            }
            r0 = std::sqrt(num) / psi0.norm();
        }
        {
            Eigen::VectorXcd H1 = apply_H_2d(medium, eps, psi1, grid);
            double num = 0.0;
            for (long j = 0; j < nx; ++j) {
                std::complex<double> aj = lam[j] + eps * a1[j];
                for (long m = 0; m < nz; ++m) {
                    long idx = j * nz + m;
                    num += std::norm(H1[idx] - aj * psi1[idx]);
                }
            }
            r1 = std::sqrt(num) / psi1.norm();
        }
        rep.residual0.push_back(r0);
        rep.residual1.push_back(r1);
    }

    bool floor0 = true, floor1 = true;
    for (double r : rep.residual0) floor0 = floor0 && r < kFloor;
    for (double r : rep.residual1) floor1 = floor1 && r < kFloor;
    if (floor0) {
        rep.slope0 = 0.0;
        rep.flags.push_back("residual0-discretization-floor");
        rep.flags.push_back("slope0-not-applicable");
    } else {
        rep.slope0 = fit_loglog_slope(rep.epsilons, rep.residual0);
    }
    if (floor1) {
        rep.slope1 = 0.0;
        rep.flags.push_back("residual1-discretization-floor");
        rep.flags.push_back("slope1-not-applicable");
    } else {
        rep.slope1 = fit_loglog_slope(rep.epsilons, rep.residual1);
    }
    for (size_t i = 0; i < rep.epsilons.size(); ++i) {
        bool both_floor = rep.residual0[i] < kFloor && rep.residual1[i] < kFloor;
        if (!both_floor && rep.residual1[i] > rep.residual0[i] * 1.001 + 1e-12) {
            rep.flags.push_back("first-order-not-below-zeroth");
            break;
        }
    }
    return rep;
}

std::string residual_report_to_json(const ResidualReport& report) {
    nlohmann::ordered_json j;
    j["epsilons"] = report.epsilons;
    j["residual0"] = report.residual0;
    j["residual1"] = report.residual1;
    j["slope0"] = report.slope0;
    j["slope1"] = report.slope1;
    j["flags"] = report.flags;
    return j.dump(2) + "\n";
}

std::string field_to_csv(const Eigen::VectorXcd& field, const Grid2d& grid,
                         double epsilon) {
    if (field.size() != grid.n_x * grid.n_z) {
        throw AssumptionError("field length does not match the grid");
    }
    std::ostringstream out;
    out << "x,z,re,im\n";
    double hx = grid.h_x(), hz = grid.h_z();
    for (long j = 0; j < grid.n_x; ++j) {
        double x = static_cast<double>(j) * hx;
        for (long m = 0; m < grid.n_z; ++m) {
            double Z = grid.z_min + hz * static_cast<double>(m + 1);
            long idx = j * grid.n_z + m;
            out << format_double(x) << ',' << format_double(epsilon * Z) << ','
                << format_double(field[idx].real()) << ','
                << format_double(field[idx].imag()) << '\n';
        }
    }
    return out.str();
}

} // namespace stratwave
