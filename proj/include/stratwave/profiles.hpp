#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stratwave {

enum class ProfileKind { step, smooth_exponential, sampled };

// Vertical squared-speed law Z ↦ N(Z) on the half-line Z ≤ 0. N is a squared
// speed; Z is the stretched depth. The law is exactly constant (= tail_value)
// for Z ≤ cutoff_depth. Instances are immutable value types built through the
// factory functions below, which enforce the model assumptions.
struct VerticalProfile {
    ProfileKind kind = ProfileKind::step;
    double surface_value = 0.0; // N(0)
    double tail_value = 0.0;    // N(Z) for Z ≤ cutoff_depth
    double cutoff_depth = 0.0;  // Z₀ ≤ 0
    bool monotone_decreasing = false; // N non-increasing in Z (deep → shallow never increases toward depth)

    // step parameters: N = step_layer on (−thickness, 0], step_halfspace below.
    double step_layer = 0.0, step_halfspace = 0.0, step_thickness = 0.0;
    // smooth exponential parameters: N(Z) = ninf − (ninf − ns)·exp(Z/delta) on
    // (Z₀, 0], clipped to exactly ninf for Z ≤ Z₀ where the deviation from the
    // tail falls below clip_tol (absolute).
    double exp_ninf = 0.0, exp_ns = 0.0, exp_delta = 0.0, exp_clip_tol = 0.0;
    // sampled parameters: knots with Z ascending, last Z = 0; linear
    // interpolation between knots, constant extension below the first knot.
    std::vector<double> sample_z, sample_n;

    double evaluate(double Z) const;
    double inf_value() const;

    // Exact integrals over [a, b] (piecewise closed forms, split at breakpoints):
    double integral_N(double a, double b) const;
    double integral_invN(double a, double b) const;
    double mean_over(double a, double b) const;          // (1/(b−a))·∫N
    double harmonic_mean_over(double a, double b) const; // (b−a)/∫(1/N)

    // Z-locations where the law changes analytic piece, ascending.
    std::vector<double> breakpoints() const;

    // Copy with all N values multiplied by factor > 0 (depths unchanged).
    VerticalProfile scaled(double factor) const;
};

// Layer over a faster half-space: N = n_layer on (−thickness, 0], n_halfspace
// below. Throws AssumptionError unless 0 < n_layer < n_halfspace, thickness > 0.
VerticalProfile make_step_profile(double n_layer, double n_halfspace, double thickness);

// Exponential relaxation toward the tail: N(Z) = ninf − (ninf − ns)·exp(Z/delta),
// clipped to exactly ninf below the depth where the deviation reaches clip_tol.
// Throws AssumptionError unless 0 < ns < ninf, delta > 0, 0 < clip_tol < ninf − ns.
VerticalProfile make_smooth_profile(double ninf, double ns, double delta,
                                    double clip_tol = 1e-2);

// Piecewise-linear law through the given knots (Z strictly ascending, last
// Z = 0, N > 0), constant below the first knot. Requires min N < tail value.
VerticalProfile make_sampled_profile(const std::vector<double>& Z,
                                     const std::vector<double>& N);

// Degenerate constant medium (no guided modes). Bypasses the subsurface
// requirement; used for negative tests and validation reports.
VerticalProfile make_constant_profile(double value, double cutoff_depth = -1.0);

// Reads a CSV stream with header `Z,N` (Z strictly increasing, final row Z = 0)
// into a sampled profile.
VerticalProfile load_profile(std::istream& in);

struct ValidationReport {
    bool positivity = false;
    bool tail_constant = false;
    double assumption3_margin = 0.0; // tail_value − inf N
    bool monotone = false;
    bool inverse_eligible = false;
};

ValidationReport validate(const VerticalProfile& profile);
std::string to_json(const ValidationReport& report);

enum class Regularity { assumption_a, assumption_b };
enum class ModulationKind { none, scale, well_bump };

// Laterally modulated stratified medium N(x, z, Z), periodic in x with period 2π.
// The full law factors as N(x, z, Z) = V(x, Z) · P(z) where V is the modulated
// vertical law and P(z) = 1 + Σ_l depth_coeffs[l−1]·z^l (P ≡ 1 under
// assumption B, which forbids slow-depth dependence).
struct LateralMedium {
    VerticalProfile base;
    Regularity regularity = Regularity::assumption_b;
    ModulationKind modulation = ModulationKind::none;
    double amplitude = 0.0;
    int mod_wavenumber = 1; // integer: keeps the law 2π-periodic
    double mod_phase = 0.0;
    double bump_center = 0.0, bump_width = 1.0;
    std::vector<double> depth_coeffs;

    // scale:     V(x,Z) = (1 + amplitude·sin(kx+φ)) · N_base(Z)
    // well_bump: V(x,Z) = N_base(Z) + amplitude·sin(kx+φ)·bump(Z),
    //            bump(Z) = (1 − ((Z−c)/w)²)² on |Z−c| ≤ w, else 0
    double vertical_law(double x, double Z) const;    // V(x, Z) = N(x, 0, Z)
    double dx_vertical_law(double x, double Z) const; // ∂_x V(x, Z)
    // N_l(x,Z) = (1/l!) ∂_z^l N(x,z,Z) at z = 0; layer(0) = V.
    double layer(int l, double x, double Z) const;
    double n2d(double x, double z, double epsilon) const; // N(x, z, z/ε)
    bool x_independent() const;
};

// Validates and returns the medium: base profile valid, modulated law positive,
// assumption-B media must have empty depth_coeffs, well_bump support must stay
// strictly inside (cutoff_depth, 0).
LateralMedium make_lateral_medium(LateralMedium medium);

} // namespace stratwave
