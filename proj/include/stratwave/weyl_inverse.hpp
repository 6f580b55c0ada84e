#pragma once

#include "stratwave/dispersion.hpp"
#include "stratwave/profiles.hpp"

#include <string>
#include <vector>

namespace stratwave {

// Knobs for the counting-to-profile inversion pipeline.
struct ReconstructionConfig {
    std::vector<double> E_grid;    // ascending, uniform, E_grid[0] ≥ surface_value
    double surface_value = 0.0;    // N₀ = N at Z = 0 (lower limit of the K integral)
    double fit_fraction = 1.0 / 3.0; // counting-fit window: ξ ≥ (1 − fraction)·ξ_max
    int window = 9;                // derivative smoothing window (odd)
    int degree = 4;                // local polynomial degree (window ≥ degree + 2)
    double inversion_constant = 1.2732395447351628; // c in z′(E)/√E = c·d³(KV); 4/π
};

// Slope estimate of the counting law at one energy, with a degeneracy flag.
struct VEstimate {
    double value = 0.0;
    bool low_confidence = false;
};

// Relative errors of a reconstruction against a reference profile, measured
// over the resolved depth window [z_lo, z_hi].
struct ErrorMetrics {
    double rel_l2 = 0.0;
    double rel_sup = 0.0;
    double z_lo = 0.0;
    double z_hi = 0.0;
    bool valid = false;
};

struct ReconstructionResult {
    std::vector<double> E_grid;
    std::vector<double> V_hat;   // estimated sublevel half-area V(E)
    std::vector<double> KV;      // (K V_hat)(E)
    std::vector<double> f_hat;   // recovered z′(E)/√E (non-negative magnitude)
    std::vector<double> z_of_E;  // depth map, z(N₀) = 0, non-increasing
    std::vector<double> depth_grid;      // ascending Z grid (deep → shallow)
    std::vector<double> N_reconstructed; // N(Z) on depth_grid
    ErrorMetrics errors;
    std::vector<std::string> flags;
    // Conventions used, plus the alternative readings, recorded side by side.
    double weyl_power_used = 1.0;
    double weyl_power_alternative = 0.5;
    double inversion_constant_used = 0.0;
    double inversion_constant_alternative = 2.0;
};

// Phase-space area of {(Z, ζ): N(Z)(1 + ζ²) ≤ E}, i.e. 2·∫ sqrt(E/N − 1) dZ
// over the sublevel set. Exact piecewise splitting with square-root
// substitution at the turning points; adaptive quadrature to ~1e−11.
// Requires E < N_∞ (the area diverges at the continuum).
double area_sublevel(const VerticalProfile& profile, double E);

// Least-squares fit of counts(ξ, E) ≈ ξ·V(E)/π through the origin over the
// top fit window (ξ ≥ (1 − fit_fraction)·ξ_max; at least 4 points). All-zero
// windows return 0 flagged low-confidence.
VEstimate estimate_V(const CountingData& counting, double E,
                     const ReconstructionConfig& config);

// (Kf)(E) = ∫_{N₀}^{E} sqrt(E − u)·f(u) du per grid point, with f piecewise
// linear on E_grid and each cell moment integrated in closed form (the kernel
// root at u = E is handled exactly). Integration runs over
// [max(N₀, E_grid[0]), E].
std::vector<double> K_transform(const std::vector<double>& f,
                                const std::vector<double>& E_grid, double N0);

// Sliding local least-squares polynomial fit (degree, window from config);
// returns the third derivative 6·c₃/h³ per grid point. Uniform grid required.
// Boundary points reuse one-sided windows (lower confidence).
std::vector<double> third_derivative(const std::vector<double>& g,
                                     const std::vector<double>& E_grid,
                                     const ReconstructionConfig& config);

// Full inversion pipeline: K-transform (with a linear anchor segment from
// (N₀, 0) to the first grid point), regularized third derivative, sign
// enforcement, cumulative depth map, and monotone inversion onto a uniform
// depth grid. Error metrics are left unset; compare with a reference via
// reconstruction_error.
ReconstructionResult recover_profile(const std::vector<double>& V_hat,
                                     const ReconstructionConfig& config);

// Relative L² and sup errors of result.N_reconstructed against the reference
// over the resolved depth window (no extrapolation beyond it).
ErrorMetrics reconstruction_error(const VerticalProfile& reference,
                                  const ReconstructionResult& result);

// Deterministic JSON report: {E_grid, V_hat, KV, f_hat, z_of_E, depth_grid,
// N_reconstructed, errors, flags, metadata}.
std::string reconstruction_to_json(const ReconstructionResult& result);

} // namespace stratwave
