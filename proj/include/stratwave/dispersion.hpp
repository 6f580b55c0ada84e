#pragma once

#include "stratwave/profiles.hpp"
#include "stratwave/sturm.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace stratwave {

// One dispersion branch λ_j(ξ), sampled on the subset of the requested
// wavenumber grid where the branch exists. All arrays share indexing.
struct DispersionBranch {
    int branch_index = 0;         // j ≥ 1
    std::vector<double> xi_grid;  // ascending wavenumbers where the branch is alive
    std::vector<double> lambda;   // squared frequency λ_j(ξ)
    std::vector<double> omega;    // ω_j = sqrt(λ_j)
    std::vector<double> phase_speed; // c_j = ω_j/ξ
    std::vector<double> group_speed; // v_j = (ξ/ω_j)·∫ N φ_j² dZ
    double birth_xi = 0.0;        // first grid wavenumber at which the branch appears
};

// Eigenvalue counting table: counts[i][m] = #{λ_j(ξ_i) ≤ E_m·ξ_i²}.
struct CountingData {
    std::vector<double> xi_grid; // ascending
    std::vector<double> E_grid;  // ascending, inf N < E < N_∞
    std::vector<std::vector<int>> counts; // [xi index][E index]
    // Counts are structurally non-decreasing in E; monotonicity in ξ is
    // checked empirically and flagged here.
    bool monotone_in_xi = true;
};

// Outcome of the speed-ordering audit v < c < sqrt(N_∞).
struct SpeedBoundReport {
    long points_checked = 0;
    long violations = 0;
    double max_phase_speed = 0.0;
    double min_upper_margin = 0.0; // min over points of sqrt(N_∞) − c
    double min_group_margin = 0.0; // min over points of c − v
    std::vector<int> branch_index;         // aligned with min_speed_gap
    std::vector<double> min_speed_gap;     // per-branch min of (c − v)
    bool ok = false;
};

// Solve the vertical problem at every grid wavenumber and stitch the spectra
// into branches by ascending-λ index (the spectrum is simple, so index
// tracking is exact and branches never merge). Per-ξ solves run concurrently;
// assembly is a deterministic sequential pass.
std::vector<DispersionBranch> trace_branches(const VerticalProfile& profile,
                                             const std::vector<double>& xi_grid,
                                             const Discretization& disc);

// Group speed v = (ξ/ω)·∫ N φ² dZ, with the integral evaluated using the
// mode's own assembly coefficients (discrete Hellmann–Feynman identity).
// Rejects modes whose stored normalization drift exceeds 1e−9.
double group_speed(const ModePair& mode, const VerticalProfile& profile, double xi);

// Audit the strict ordering group speed < phase speed < sqrt(N_∞) at every
// traced point; violations indicate solver defects, not physics.
SpeedBoundReport speed_bound_check(const std::vector<DispersionBranch>& branches,
                                   const VerticalProfile& profile);

// Eigenvalue-counting table over a (ξ, E) grid. Requires each E strictly
// between inf N and N_∞. One assembly per ξ, swept over all thresholds.
CountingData counting_grid(const VerticalProfile& profile,
                           const std::vector<double>& xi_grid,
                           const std::vector<double>& E_grid,
                           const Discretization& disc);

// CSV serialization. Branches: header `j,xi,lambda,omega,phase_speed,group_speed`,
// one row per traced point. Counting: long form with header `xi,E,count`, row
// order ξ-major. Floats use shortest round-trip formatting.
std::string branches_to_csv(const std::vector<DispersionBranch>& branches);
std::string counting_to_csv(const CountingData& data);

// Parse the long-form counting CSV back into a table. Requires a complete
// ξ × E cartesian product with both grids ascending.
CountingData counting_from_csv(std::istream& in);

} // namespace stratwave
