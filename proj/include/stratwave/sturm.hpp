#pragma once

#include "stratwave/numerics.hpp"
#include "stratwave/profiles.hpp"

#include <functional>
#include <vector>

namespace stratwave {

enum class BottomCondition { dirichlet_truncation, exact_decay };

// How the flux and potential coefficients are sampled from the profile:
//  - cell_average: harmonic mean of N over each inter-node cell for the flux,
//    arithmetic mean over the node-centered cell for the potential (exact
//    integrals; second-order accurate across coefficient jumps).
//  - midpoint: point samples (N at cell midpoints / at nodes). Matches the 2D
//    operator's point sampling; accuracy degrades to first order across jumps
//    that straddle a cell.
enum class FluxSampling { cell_average, midpoint };

struct Discretization {
    double z_min = -8.0;  // truncation depth (< profile cutoff)
    long n_points = 4096; // interior nodes; spacing h = |z_min| / (n_points + 1)
    BottomCondition bottom_bc = BottomCondition::dirichlet_truncation;
    double continuum_guard = 1e-6; // discard modes with λ > (1−guard)·N_∞·ξ²
    double edge_band = 1e-3;       // flag modes with λ > (1−band)·N_∞·ξ²
    FluxSampling sampling = FluxSampling::cell_average;

    double spacing() const { return -z_min / static_cast<double>(n_points + 1); }
};

struct ModePair {
    int branch_index = 0;          // j ≥ 1, ascending in λ
    double lambda = 0.0;           // ω²
    Eigen::VectorXd eigenfunction; // closed grid (n_points + 2 samples, Z = z_min → 0),
                                   // trapezoid-normalized: ∫ φ² dZ = 1
    double decay_rate = 0.0;       // κ_j = sqrt(ξ² − λ_j/N_∞)
    bool edge_flag = false;        // λ within the edge band of the continuum threshold
    double xi = 0.0;
    double z_min = 0.0;
    double h = 0.0;
    double normalization_error = 0.0; // |trapezoid(φ²) − 1|
    double eigen_residual = 0.0;      // ‖Aφ − λBφ‖₂ / ‖Bφ‖₂ achieved by the solver
    // Discretization provenance, so derived quadratures (e.g. the group-speed
    // integral) can reuse coefficients consistent with the assembled matrix.
    FluxSampling sampling = FluxSampling::cell_average;
    BottomCondition bottom_bc = BottomCondition::dirichlet_truncation;
};

// Assembled symmetric pencil in weak (h-scaled) form. Under dirichlet_truncation
// the unknowns are the n interior nodes and mass = h·1. Under exact_decay the
// bottom node joins the unknowns (size n+1) with half mass, and the counting
// routine adds the λ-dependent Robin closure N_deep·κ(λ) to the first diagonal
// entry.
struct AssembledOperator {
    SymTridiag T;
    double h = 0.0;
    double z_min = 0.0;
    long n_interior = 0;
    bool has_bottom_node = false;
    double n_deep = 0.0; // N at the truncation depth
    double xi = 0.0;
    double n_inf = 0.0;  // profile tail value (continuum threshold scale)
};

AssembledOperator assemble_operator(const VerticalProfile& profile, double xi,
                                    const Discretization& disc);

// Number of eigenvalues ≤ E_scaled·ξ² (non-strict), by Sturm-sequence inertia.
// Requires E_scaled < N_∞.
int count_below(const VerticalProfile& profile, double xi, double E_scaled,
                const Discretization& disc);

// Same count against an already-assembled operator, at the absolute (unscaled)
// threshold σ. Lets callers sweep many thresholds per assembly.
int count_below(const AssembledOperator& op, double sigma);

// All modes with λ < (1−guard)·N_∞·ξ², ascending; possibly empty.
std::vector<ModePair> solve_modes(const VerticalProfile& profile, double xi,
                                  const Discretization& disc);

// Independent transcendental oracle for the step profile: all λ in
// (n_layer·ξ², n_halfspace·ξ²) with tan(q·t) = −(n_layer·q)/(n_halfspace·κ),
// q = sqrt(λ/n_layer − ξ²), κ = sqrt(ξ² − λ/n_halfspace). Ascending.
std::vector<double> step_oracle(double n_layer, double n_halfspace, double thickness,
                                double xi);

// Truncation depth such that the slowest admissible tail decay
// (κ_min = ξ·sqrt(continuum_guard)) drops below 1e−10 over the margin,
// capped at 64 stretched-depth units below the profile cutoff.
double default_z_min(const VerticalProfile& profile, double xi, double continuum_guard);

// Closed node grid z_min + i·h, i = 0..n_points+1.
std::vector<double> closed_grid(double z_min, long n_points);

// ∫ N φ² dZ evaluated with the same potential coefficients and mass weights
// the mode's matrix was assembled with (Hellmann–Feynman consistent: the
// discrete dλ/dξ equals 2ξ times this value for a B-normalized mode).
double potential_integral(const VerticalProfile& profile, const ModePair& mode);

// Generic-coefficient assembly used by the 2D machinery: Dirichlet ends,
// flux coefficient sampled at cell midpoints via `coeff`, potential weight
// coeff(node)·xi2 where xi2 may be a modified squared wavenumber. Weak form
// (mass = h·1 on the n_points interior nodes).
SymTridiag assemble_generic(const std::function<double(double)>& coeff, double xi2,
                            double z_min, long n_points);

} // namespace stratwave
