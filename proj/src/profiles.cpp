#include "stratwave/profiles.hpp"

#include "stratwave/errors.hpp"
#include "stratwave/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>

namespace stratwave {

namespace {

// Value of the exponential piece (above the clip depth).
double exp_piece(double ninf, double ns, double delta, double Z) {
    return ninf - (ninf - ns) * std::exp(Z / delta);
}

// ∫ 1/N dZ for N(Z) = ninf − C·e^{Z/δ}: antiderivative (Z − δ·ln N(Z)) / ninf.
double exp_inv_antideriv(double ninf, double ns, double delta, double Z) {
    double N = exp_piece(ninf, ns, delta, Z);
    return (Z - delta * std::log(N)) / ninf;
}

// ∫ 1/N over one linear cell from (z_a, n_a) to (z_b, n_b), z_a < z_b.
double linear_inv_integral(double z_a, double n_a, double z_b, double n_b) {
    double dz = z_b - z_a;
    double dn = n_b - n_a;
    if (std::abs(dn) <= 1e-12 * std::max(n_a, n_b)) {
        return dz * 2.0 / (n_a + n_b);
    }
    double slope = dn / dz;
    return std::log1p(dn / n_a) / slope;
}

} // namespace

double VerticalProfile::evaluate(double Z) const {
    switch (kind) {
        case ProfileKind::step:
            return (Z <= -step_thickness) ? step_halfspace : step_layer;
        case ProfileKind::smooth_exponential:
            if (Z <= cutoff_depth) return tail_value;
            return exp_piece(exp_ninf, exp_ns, exp_delta, std::min(Z, 0.0));
        case ProfileKind::sampled: {
            if (Z <= sample_z.front()) return sample_n.front();
            if (Z >= sample_z.back()) return sample_n.back();
            auto it = std::lower_bound(sample_z.begin(), sample_z.end(), Z);
            size_t hi = static_cast<size_t>(it - sample_z.begin());
            if (sample_z[hi] == Z) return sample_n[hi];
            size_t lo = hi - 1;
            double t = (Z - sample_z[lo]) / (sample_z[hi] - sample_z[lo]);
            return sample_n[lo] + t * (sample_n[hi] - sample_n[lo]);
        }
    }
    return tail_value;
}

double VerticalProfile::inf_value() const {
    double m = std::min(tail_value, evaluate(0.0));
    for (double b : breakpoints()) m = std::min(m, evaluate(b));
    if (kind == ProfileKind::sampled) {
        for (double v : sample_n) m = std::min(m, v);
    }
    return m;
}

std::vector<double> VerticalProfile::breakpoints() const {
    switch (kind) {
        case ProfileKind::step:
            return {-step_thickness};
        case ProfileKind::smooth_exponential:
            return {cutoff_depth};
        case ProfileKind::sampled:
            return sample_z;
    }
    return {};
}

double VerticalProfile::integral_N(double a, double b) const {
    if (!(a <= b)) return -integral_N(b, a);
    double total = 0.0;
    // Split [a, b] at the analytic breakpoints and integrate each piece exactly.
    std::vector<double> cuts = {a, b};
    for (double c : breakpoints()) {
        if (c > a && c < b) cuts.push_back(c);
    }
    std::sort(cuts.begin(), cuts.end());
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        double lo = cuts[i], hi = cuts[i + 1];
        if (hi <= lo) continue;
        switch (kind) {
            case ProfileKind::step:
            case ProfileKind::sampled: {
                // Within a piece the law is linear: trapezoid is exact.
                // (For the step kind each piece is constant.)
                double mid_lo = evaluate(std::nextafter(lo, hi));
                double mid_hi = evaluate(std::nextafter(hi, lo));
                if (kind == ProfileKind::sampled) {
                    mid_lo = evaluate(lo);
                    mid_hi = evaluate(hi);
                }
                total += 0.5 * (mid_lo + mid_hi) * (hi - lo);
                break;
            }
            case ProfileKind::smooth_exponential: {
                if (hi <= cutoff_depth) {
                    total += tail_value * (hi - lo);
                } else {
                    double C = exp_ninf - exp_ns;
                    total += exp_ninf * (hi - lo) -
                             C * exp_delta * (std::exp(hi / exp_delta) - std::exp(lo / exp_delta));
                }
                break;
            }
        }
    }
    return total;
}

double VerticalProfile::integral_invN(double a, double b) const {
    if (!(a <= b)) return -integral_invN(b, a);
    double total = 0.0;
    std::vector<double> cuts = {a, b};
    for (double c : breakpoints()) {
        if (c > a && c < b) cuts.push_back(c);
    }
    std::sort(cuts.begin(), cuts.end());
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        double lo = cuts[i], hi = cuts[i + 1];
        if (hi <= lo) continue;
        switch (kind) {
            case ProfileKind::step: {
                double v = evaluate(0.5 * (lo + hi));
                total += (hi - lo) / v;
                break;
            }
            case ProfileKind::sampled:
                total += linear_inv_integral(lo, evaluate(lo), hi, evaluate(hi));
                break;
            case ProfileKind::smooth_exponential: {
                if (hi <= cutoff_depth) {
                    total += (hi - lo) / tail_value;
                } else {
                    total += exp_inv_antideriv(exp_ninf, exp_ns, exp_delta, hi) -
                             exp_inv_antideriv(exp_ninf, exp_ns, exp_delta, lo);
                }
                break;
            }
        }
    }
    return total;
}

double VerticalProfile::mean_over(double a, double b) const {
    if (a == b) return evaluate(a);
    return integral_N(a, b) / (b - a);
}

double VerticalProfile::harmonic_mean_over(double a, double b) const {
    if (a == b) return evaluate(a);
    return (b - a) / integral_invN(a, b);
}

VerticalProfile VerticalProfile::scaled(double factor) const {
    if (!(factor > 0.0)) throw AssumptionError("profile scale factor must be positive");
    VerticalProfile out = *this;
    out.surface_value *= factor;
    out.tail_value *= factor;
    out.step_layer *= factor;
    out.step_halfspace *= factor;
    out.exp_ninf *= factor;
    out.exp_ns *= factor;
    out.exp_clip_tol *= factor;
    for (double& v : out.sample_n) v *= factor;
    return out;
}

VerticalProfile make_step_profile(double n_layer, double n_halfspace, double thickness) {
    if (!(n_layer > 0.0) || !(n_halfspace > 0.0)) {
        throw AssumptionError("step profile needs positive squared speeds");
    }
    if (!(thickness > 0.0)) {
        throw AssumptionError("step profile needs positive layer thickness");
    }
    if (!(n_layer < n_halfspace)) {
        throw AssumptionError(
            "assumption 3 fails: layer value must be strictly below the half-space value "
            "(inf N < N at the tail)");
    }
    VerticalProfile p;
    p.kind = ProfileKind::step;
    p.step_layer = n_layer;
    p.step_halfspace = n_halfspace;
    p.step_thickness = thickness;
    p.surface_value = n_layer;
    p.tail_value = n_halfspace;
    p.cutoff_depth = -thickness;
    p.monotone_decreasing = true;
    return p;
}

VerticalProfile make_smooth_profile(double ninf, double ns, double delta, double clip_tol) {
    if (!(ns > 0.0) || !(ninf > 0.0) || !(delta > 0.0)) {
        throw AssumptionError("exponential profile needs positive parameters");
    }
    if (!(ns < ninf)) {
        throw AssumptionError("assumption 3 fails: surface value must be strictly below the tail value");
    }
    if (!(clip_tol > 0.0) || !(clip_tol < ninf - ns)) {
        throw AssumptionError("clip tolerance must lie in (0, ninf - ns)");
    }
    VerticalProfile p;
    p.kind = ProfileKind::smooth_exponential;
    p.exp_ninf = ninf;
    p.exp_ns = ns;
    p.exp_delta = delta;
    p.exp_clip_tol = clip_tol;
    p.surface_value = ns;
    p.tail_value = ninf;
    // Clip where the deviation (ninf − ns)·exp(Z/δ) reaches clip_tol.
    p.cutoff_depth = delta * std::log(clip_tol / (ninf - ns));
    p.monotone_decreasing = true;
    return p;
}

VerticalProfile make_sampled_profile(const std::vector<double>& Z,
                                     const std::vector<double>& N) {
    if (Z.size() != N.size() || Z.empty()) {
        throw IoError("sampled profile needs matching, non-empty Z and N lists");
    }
    for (size_t i = 0; i + 1 < Z.size(); ++i) {
        if (!(Z[i] < Z[i + 1])) throw IoError("Z not strictly increasing");
    }
    if (Z.back() != 0.0) throw IoError("missing Z = 0 row (surface sample required)");
    for (double v : N) {
        if (!(v > 0.0)) throw AssumptionError("non-positive N sample");
    }
    VerticalProfile p;
    p.kind = ProfileKind::sampled;
    p.sample_z = Z;
    p.sample_n = N;
    p.surface_value = N.back();
    p.tail_value = N.front(); // constant extension below the first knot
    p.cutoff_depth = Z.front();
    double inf_n = *std::min_element(N.begin(), N.end());
    if (!(inf_n < p.tail_value)) {
        throw AssumptionError(
            "assumption 3 fails: no subsurface structure (inf N equals the tail value)");
    }
    bool mono = true;
    for (size_t i = 0; i + 1 < N.size(); ++i) {
        if (N[i] < N[i + 1]) mono = false;
    }
    p.monotone_decreasing = mono;
    return p;
}

VerticalProfile make_constant_profile(double value, double cutoff_depth) {
    if (!(value > 0.0)) throw AssumptionError("constant profile needs a positive value");
    if (!(cutoff_depth < 0.0)) throw AssumptionError("cutoff depth must be negative");
    VerticalProfile p;
    p.kind = ProfileKind::step;
    p.step_layer = value;
    p.step_halfspace = value;
    p.step_thickness = -cutoff_depth;
    p.surface_value = value;
    p.tail_value = value;
    p.cutoff_depth = cutoff_depth;
    p.monotone_decreasing = true;
    return p;
}

VerticalProfile load_profile(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty profile stream");
    auto header = split_csv_line(line);
    if (header.size() != 2 || header[0] != "Z" || header[1] != "N") {
        throw IoError("profile CSV must start with header 'Z,N'");
    }
    std::vector<double> Z, N;
    long row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 2) {
            throw IoError("profile CSV row " + std::to_string(row) + ": expected 2 fields");
        }
        Z.push_back(parse_double(fields[0], "profile CSV column Z, row " + std::to_string(row)));
        N.push_back(parse_double(fields[1], "profile CSV column N, row " + std::to_string(row)));
    }
    return make_sampled_profile(Z, N);
}

ValidationReport validate(const VerticalProfile& profile) {
    ValidationReport rep;
    // Dense evaluation grid covering the structured range and a stretch of tail.
    double lo = profile.cutoff_depth * 1.5 - 1.0;
    const int samples = 4096;
    double inf_n = profile.inf_value();
    double min_eval = inf_n;
    bool monotone = true;
    double prev = profile.evaluate(lo);
    for (int i = 0; i <= samples; ++i) {
        double Z = lo + (0.0 - lo) * static_cast<double>(i) / samples;
        double v = profile.evaluate(Z);
        min_eval = std::min(min_eval, v);
        if (v > prev + 1e-14 * std::max(std::abs(v), 1.0)) monotone = false;
        prev = v;
    }
    rep.positivity = min_eval > 0.0;
    rep.tail_constant = true;
    for (int i = 0; i <= 16; ++i) {
        double Z = profile.cutoff_depth - static_cast<double>(i);
        if (profile.evaluate(Z) != profile.tail_value) rep.tail_constant = false;
    }
    rep.assumption3_margin = profile.tail_value - inf_n;
    rep.monotone = monotone && profile.monotone_decreasing;
    rep.inverse_eligible = rep.positivity && rep.tail_constant &&
                           rep.assumption3_margin > 0.0 && rep.monotone;
    return rep;
}

std::string to_json(const ValidationReport& report) {
    nlohmann::ordered_json j;
    j["positivity"] = report.positivity;
    j["tail_constant"] = report.tail_constant;
    j["assumption3_margin"] = report.assumption3_margin;
    j["monotone"] = report.monotone;
    j["inverse_eligible"] = report.inverse_eligible;
    return j.dump(2) + "\n";
}

namespace {

double bump_shape(double Z, double center, double width) {
    double t = (Z - center) / width;
    double s = 1.0 - t * t;
    if (s <= 0.0) return 0.0;
    return s * s;
}

} // namespace

double LateralMedium::vertical_law(double x, double Z) const {
    double b = base.evaluate(Z);
    switch (modulation) {
        case ModulationKind::none:
            return b;
        case ModulationKind::scale:
            return b * (1.0 + amplitude * std::sin(mod_wavenumber * x + mod_phase));
        case ModulationKind::well_bump:
            return b + amplitude * std::sin(mod_wavenumber * x + mod_phase) *
                           bump_shape(Z, bump_center, bump_width);
    }
    return b;
}

double LateralMedium::dx_vertical_law(double x, double Z) const {
    switch (modulation) {
        case ModulationKind::none:
            return 0.0;
        case ModulationKind::scale:
            return base.evaluate(Z) * amplitude * mod_wavenumber *
                   std::cos(mod_wavenumber * x + mod_phase);
        case ModulationKind::well_bump:
            return amplitude * mod_wavenumber * std::cos(mod_wavenumber * x + mod_phase) *
                   bump_shape(Z, bump_center, bump_width);
    }
    return 0.0;
}

double LateralMedium::layer(int l, double x, double Z) const {
    if (l < 0) throw AssumptionError("layer index must be non-negative");
    double V = vertical_law(x, Z);
    if (l == 0) return V;
    if (regularity == Regularity::assumption_b) {
        throw AssumptionError("layers beyond the leading one are undefined under assumption B");
    }
    if (static_cast<size_t>(l) > depth_coeffs.size()) return 0.0;
    return V * depth_coeffs[static_cast<size_t>(l) - 1];
}

double LateralMedium::n2d(double x, double z, double epsilon) const {
    double poly = 1.0;
    double zp = 1.0;
    for (double c : depth_coeffs) {
        zp *= z;
        poly += c * zp;
    }
    return vertical_law(x, z / epsilon) * poly;
}

bool LateralMedium::x_independent() const {
    return modulation == ModulationKind::none || amplitude == 0.0;
}

LateralMedium make_lateral_medium(LateralMedium medium) {
    if (medium.regularity == Regularity::assumption_b && !medium.depth_coeffs.empty()) {
        throw AssumptionError("assumption B forbids slow-depth dependence (depth_coeffs must be empty)");
    }
    if (medium.mod_wavenumber < 1) {
        throw AssumptionError("modulation wavenumber must be a positive integer (2π-periodic law)");
    }
    if (medium.modulation == ModulationKind::scale && !(std::abs(medium.amplitude) < 1.0)) {
        throw AssumptionError("scale modulation amplitude must satisfy |a| < 1 (positivity)");
    }
    if (medium.modulation == ModulationKind::well_bump) {
        if (!(medium.bump_width > 0.0)) throw AssumptionError("bump width must be positive");
        if (!(medium.bump_center - medium.bump_width > medium.base.cutoff_depth) ||
            !(medium.bump_center + medium.bump_width < 0.0)) {
            throw AssumptionError("bump support must stay strictly inside (cutoff depth, 0)");
        }
        // Positivity over a dense (x, Z) grid.
        for (int ix = 0; ix < 64; ++ix) {
            double x = 2.0 * M_PI * ix / 64.0;
            for (int iz = 0; iz <= 256; ++iz) {
                double Z = medium.base.cutoff_depth * iz / 256.0;
                if (!(medium.vertical_law(x, Z) > 0.0)) {
                    throw AssumptionError("modulated law loses positivity");
                }
            }
        }
    }
    return medium;
}

} // namespace stratwave
