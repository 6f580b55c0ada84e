#pragma once

#include "stratwave/profiles.hpp"
#include "stratwave/sturm.hpp"

#include <Eigen/Dense>

#include <complex>
#include <string>
#include <vector>

namespace stratwave {

// First-order two-scale expansion of a guided mode, frozen at one horizontal
// point: field ansatz e^{iξx/ε}(φ₀ + ε·φ₁), symbol a(ε) = a₀ + ε·a₁.
struct ModeExpansion {
    Eigen::VectorXd phi0;  // interior-node samples, ∫φ₀² dZ = 1
    double a0 = 0.0;       // transverse eigenvalue at x0
    std::complex<double> a1{0.0, 0.0};
    Eigen::VectorXcd phi1; // first corrector, ⟨φ₁, φ₀⟩ = 0
    double xi = 0.0;
    double x0 = 0.0;
    int branch_index = 1;
};

struct ResidualReport {
    std::vector<double> epsilons;
    std::vector<double> residual0; // relative L² residual against a₀(x)
    std::vector<double> residual1; // against a₀(x) + ε·a₁(x), with ε·φ₁ included
    double slope0 = 0.0;           // log-log fit of residual0 vs ε
    double slope1 = 0.0;
    std::vector<std::string> flags;
};

// Uniform grid for the two-dimensional operator: periodic columns x_j = j·2π/n_x,
// Dirichlet rows at the surface and at the truncated bottom. Row m of a column
// sits at layer coordinate Z = z_min + (m+1)·h_z(), physical depth ε·Z.
struct Grid2d {
    long n_x = 512;
    long n_z = 127;
    double z_min = -8.0;

    double h_x() const { return 2.0 * 3.14159265358979323846 / static_cast<double>(n_x); }
    double h_z() const { return -z_min / static_cast<double>(n_z + 1); }
};

// Layer functions N_l(x,·) = (1/l!)·∂_z^l N(x,z,·) at z = 0, sampled on the
// interior solver grid. Slow-depth-independent media only possess l = 0;
// requesting l ≥ 1 for them is an error rather than a silent zero.
std::vector<Eigen::VectorXd> taylor_layers(const LateralMedium& medium, double x,
                                           int l_max, const Discretization& disc);

// Builds the first-order corrector pair (a₁, φ₁) at the horizontal point x:
// re-solves the transverse problem on the given grid for the mode's branch,
// assembles the first-order right-hand side from the horizontal transport
// terms and the slow-depth perturbation, picks a₁ by solvability, and solves
// the bordered system for φ₁ in the orthogonal complement of φ₀.
ModeExpansion first_order_terms(const LateralMedium& medium, double x, double xi,
                                const ModePair& mode, const Discretization& disc);

// Applies −ε²·div(n·grad) with n(x,z) = N(x, z, z/ε) to a field sampled on
// `grid` (column-major: index j·n_z + m). Flux form, coefficients sampled at
// cell faces; periodic in x, Dirichlet at the top and bottom rows.
Eigen::VectorXcd apply_H_2d(const LateralMedium& medium, double epsilon,
                            const Eigen::VectorXcd& field, const Grid2d& grid);

// Residual-decay study: for each ε builds the horizontally resolved ansatz
// fields (zeroth order, and first order with ε·φ₁ and the symbol correction
// ε·a₁), applies the two-dimensional operator, and reports relative residuals
// with fitted log-log slopes. ξ/ε must be an integer (periodic phase).
ResidualReport residual_decay(const LateralMedium& medium,
                              const ModeExpansion& expansion,
                              const std::vector<double>& epsilons,
                              const Discretization& disc);

std::string residual_report_to_json(const ResidualReport& report);

// Small-grid diagnostic dump of a complex field: "x,z,re,im" rows, physical
// depth z = ε·Z.
std::string field_to_csv(const Eigen::VectorXcd& field, const Grid2d& grid,
                         double epsilon);

} // namespace stratwave
