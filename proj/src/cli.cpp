#include "stratwave/cli.hpp"

#include "stratwave/dispersion.hpp"
#include "stratwave/errors.hpp"
#include "stratwave/io.hpp"
#include "stratwave/sturm.hpp"
#include "stratwave/weyl_inverse.hpp"
#include "stratwave/wkb.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace stratwave {

namespace {

// ---------------------------------------------------------------------------
// Shared option bundles
// ---------------------------------------------------------------------------

struct DiscOptions {
    double z_min = std::numeric_limits<double>::quiet_NaN(); // NaN → automatic depth
    long n_points = 4096;
    std::string bottom = "truncate";
    std::string sampling = "cell";
    double guard = 1e-6;
    double edge_band = 1e-3;
};

void add_disc_options(CLI::App* cmd, DiscOptions& d, long default_n) {
    d.n_points = default_n;
    cmd->add_option("--z-min", d.z_min,
                    "Truncation depth (negative); omit for an automatic choice");
    cmd->add_option("--n", d.n_points, "Interior grid points")
        ->capture_default_str();
    cmd->add_option("--bottom", d.bottom, "Bottom closure: truncate|decay")
        ->check(CLI::IsMember({"truncate", "decay"}))
        ->capture_default_str();
    cmd->add_option("--sampling", d.sampling, "Coefficient sampling: cell|midpoint")
        ->check(CLI::IsMember({"cell", "midpoint"}))
        ->capture_default_str();
    cmd->add_option("--guard", d.guard, "Continuum guard band (relative)")
        ->capture_default_str();
    cmd->add_option("--edge-band", d.edge_band, "Edge-flag band (relative)")
        ->capture_default_str();
}

// Resolves the option bundle against a profile. `xi_for_depth` feeds the
// automatic truncation-depth rule (use the smallest wavenumber of a sweep:
// slower decay needs more depth).
Discretization resolve_disc(const DiscOptions& d, const VerticalProfile& profile,
                            double xi_for_depth) {
    Discretization disc;
    disc.n_points = d.n_points;
    disc.continuum_guard = d.guard;
    disc.edge_band = d.edge_band;
    disc.bottom_bc = d.bottom == "decay" ? BottomCondition::exact_decay
                                         : BottomCondition::dirichlet_truncation;
    disc.sampling = d.sampling == "midpoint" ? FluxSampling::midpoint
                                             : FluxSampling::cell_average;
    if (std::isnan(d.z_min)) {
        disc.z_min = default_z_min(profile, xi_for_depth, disc.continuum_guard);
    } else {
        disc.z_min = d.z_min;
    }
    if (disc.n_points < 3) throw AssumptionError("--n must be at least 3");
    if (disc.z_min >= profile.cutoff_depth) {
        throw AssumptionError("--z-min must lie below the profile cutoff depth " +
                              format_double(profile.cutoff_depth));
    }
    return disc;
}

std::vector<double> parse_list(const std::string& text, const std::string& context) {
    std::vector<double> values;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        values.push_back(parse_double(item, context));
    }
    if (values.empty()) throw IoError(context + ": empty list");
    return values;
}

std::vector<double> uniform_grid(double lo, double hi, long count,
                                 const std::string& context) {
    if (count < 1) throw AssumptionError(context + ": count must be positive");
    if (count == 1) {
        if (hi != lo) {
            throw AssumptionError(context + ": a single-point grid needs min == max");
        }
        return {lo};
    }
    if (!(hi > lo)) throw AssumptionError(context + ": max must exceed min");
    std::vector<double> grid(static_cast<size_t>(count));
    double step = (hi - lo) / static_cast<double>(count - 1);
    for (long i = 0; i < count; ++i) grid[static_cast<size_t>(i)] = lo + step * i;
    grid.back() = hi;
    return grid;
}

// Writes to stdout when path is "-", atomically to a file otherwise.
void emit(const std::string& path, const std::string& content) {
    if (path == "-") {
        std::cout << content;
        std::cout.flush();
    } else {
        write_file_atomic(path, content);
    }
}

// ---------------------------------------------------------------------------
// Subcommand payloads
// ---------------------------------------------------------------------------

struct ValidateArgs {
    std::string profile;
    std::string out = "-";
};

int run_validate(const ValidateArgs& a) {
    VerticalProfile p = profile_from_spec(a.profile);
    emit(a.out, to_json(validate(p)));
    return 0;
}

struct SolveArgs {
    std::string profile;
    double xi = 0.0;
    DiscOptions disc;
    std::string out = "-";
    std::string eigenfunctions;
};

std::string modes_to_csv(const std::vector<ModePair>& modes) {
    std::string csv = "j,lambda,omega,kappa,edge_flag\n";
    for (const ModePair& m : modes) {
        csv += std::to_string(m.branch_index);
        csv += ',';
        csv += format_double(m.lambda);
        csv += ',';
        csv += format_double(std::sqrt(m.lambda));
        csv += ',';
        csv += format_double(m.decay_rate);
        csv += ',';
        csv += m.edge_flag ? '1' : '0';
        csv += '\n';
    }
    return csv;
}

std::string eigenfunctions_to_csv(const std::vector<ModePair>& modes,
                                  double z_min, long n_points) {
    std::string csv = "Z";
    for (const ModePair& m : modes) {
        csv += ",phi_" + std::to_string(m.branch_index);
    }
    csv += '\n';
    std::vector<double> grid = closed_grid(z_min, n_points);
    for (size_t i = 0; i < grid.size(); ++i) {
        csv += format_double(grid[i]);
        for (const ModePair& m : modes) {
            csv += ',';
            csv += format_double(m.eigenfunction(static_cast<long>(i)));
        }
        csv += '\n';
    }
    return csv;
}

int run_solve(const SolveArgs& a) {
    VerticalProfile p = profile_from_spec(a.profile);
    if (!(a.xi > 0.0)) throw AssumptionError("--xi must be positive");
    Discretization disc = resolve_disc(a.disc, p, a.xi);
    std::vector<ModePair> modes = solve_modes(p, a.xi, disc);
    emit(a.out, modes_to_csv(modes));
    if (!a.eigenfunctions.empty()) {
        emit(a.eigenfunctions, eigenfunctions_to_csv(modes, disc.z_min, disc.n_points));
    }
    return 0;
}

struct DispersionArgs {
    std::string profile;
    double xi_min = 0.0, xi_max = 0.0;
    long xi_count = 0;
    DiscOptions disc;
    std::string out = "-";
    std::string audit;
};

std::string speed_audit_to_json(const SpeedBoundReport& report) {
    nlohmann::ordered_json j;
    j["points_checked"] = report.points_checked;
    j["violations"] = report.violations;
    j["max_phase_speed"] = report.max_phase_speed;
    j["min_upper_margin"] = report.min_upper_margin;
    j["min_group_margin"] = report.min_group_margin;
    j["ok"] = report.ok;
    nlohmann::ordered_json branches = nlohmann::ordered_json::array();
    for (size_t i = 0; i < report.branch_index.size(); ++i) {
        nlohmann::ordered_json b;
        b["j"] = report.branch_index[i];
        b["min_speed_gap"] = report.min_speed_gap[i];
        branches.push_back(b);
    }
    j["branches"] = branches;
    return j.dump(2) + "\n";
}

int run_dispersion(const DispersionArgs& a) {
    VerticalProfile p = profile_from_spec(a.profile);
    if (!(a.xi_min > 0.0)) throw AssumptionError("--xi-min must be positive");
    std::vector<double> xi_grid =
        uniform_grid(a.xi_min, a.xi_max, a.xi_count, "wavenumber grid");
    Discretization disc = resolve_disc(a.disc, p, xi_grid.front());
    std::vector<DispersionBranch> branches = trace_branches(p, xi_grid, disc);
    emit(a.out, branches_to_csv(branches));
    if (!a.audit.empty()) {
        emit(a.audit, speed_audit_to_json(speed_bound_check(branches, p)));
    }
    return 0;
}

struct CountArgs {
    std::string profile;
    std::string xi_list, e_list;
    double xi_min = 0.0, xi_max = 0.0, e_min = 0.0, e_max = 0.0;
    long xi_count = 0, e_count = 0;
    DiscOptions disc;
    std::string out = "-";
};

int run_count(const CountArgs& a) {
    VerticalProfile p = profile_from_spec(a.profile);
    std::vector<double> xi_grid =
        a.xi_list.empty() ? uniform_grid(a.xi_min, a.xi_max, a.xi_count, "wavenumber grid")
                          : parse_list(a.xi_list, "--xi-list");
    std::vector<double> e_grid =
        a.e_list.empty() ? uniform_grid(a.e_min, a.e_max, a.e_count, "threshold grid")
                         : parse_list(a.e_list, "--e-list");
    if (!(xi_grid.front() > 0.0)) throw AssumptionError("wavenumbers must be positive");
    Discretization disc = resolve_disc(a.disc, p, xi_grid.front());
    CountingData data = counting_grid(p, xi_grid, e_grid, disc);
    emit(a.out, counting_to_csv(data));
    return 0;
}

struct InvertArgs {
    std::string counting;
    double n0 = 0.0;
    double ninf = std::numeric_limits<double>::quiet_NaN();
    double fit_fraction = 1.0 / 3.0;
    int window = 9;
    int degree = 4;
    std::string reference;
    std::string out = "-";
};

int run_invert(const InvertArgs& a) {
    std::istringstream in(read_file(a.counting));
    CountingData counting = counting_from_csv(in);

    ReconstructionConfig config;
    config.surface_value = a.n0;
    config.fit_fraction = a.fit_fraction;
    config.window = a.window;
    config.degree = a.degree;
    // Keep thresholds strictly below the continuum value when one is supplied;
    // dropping columns only from the top preserves grid uniformity.
    for (double E : counting.E_grid) {
        if (!std::isnan(a.ninf) && E >= a.ninf) break;
        config.E_grid.push_back(E);
    }
    if (config.E_grid.empty()) {
        throw AssumptionError("no counting thresholds below --ninf");
    }

    std::vector<double> v_hat;
    bool low_confidence = false;
    v_hat.reserve(config.E_grid.size());
    for (double E : config.E_grid) {
        VEstimate estimate = estimate_V(counting, E, config);
        low_confidence = low_confidence || estimate.low_confidence;
        v_hat.push_back(estimate.value);
    }

    ReconstructionResult result = recover_profile(v_hat, config);
    if (low_confidence) result.flags.push_back("counting-fit-low-confidence");
    if (!a.reference.empty()) {
        result.errors = reconstruction_error(profile_from_spec(a.reference), result);
    }
    emit(a.out, reconstruction_to_json(result));
    return 0;
}

struct WkbArgs {
    std::string profile;
    std::string modulation = "none";
    double amplitude = 0.0;
    int mod_k = 1;
    double mod_phase = 0.0;
    std::string regularity = "b";
    std::string depth_coeffs;
    double xi = 0.0;
    int branch = 1;
    double x0 = 0.0;
    std::string epsilons;
    DiscOptions disc;
    std::string out = "-";
    std::string field;
    double field_epsilon = 0.0;
};

int run_wkb(const WkbArgs& a) {
    VerticalProfile base = profile_from_spec(a.profile);
    if (!(a.xi > 0.0)) throw AssumptionError("--xi must be positive");
    if (a.branch < 1) throw AssumptionError("--branch must be at least 1");

    LateralMedium medium;
    medium.base = base;
    medium.regularity = a.regularity == "a" ? Regularity::assumption_a
                                            : Regularity::assumption_b;
    medium.modulation = a.modulation == "scale" ? ModulationKind::scale
                                                : ModulationKind::none;
    medium.amplitude = a.amplitude;
    medium.mod_wavenumber = a.mod_k;
    medium.mod_phase = a.mod_phase;
    if (!a.depth_coeffs.empty()) {
        medium.depth_coeffs = parse_list(a.depth_coeffs, "--depth-coeffs");
    }
    medium = make_lateral_medium(medium);

    DiscOptions disc_options = a.disc;
    if (std::isnan(disc_options.z_min)) disc_options.z_min = -8.0;
    disc_options.sampling = "midpoint"; // matches the two-dimensional stencil
    Discretization disc = resolve_disc(disc_options, base, a.xi);

    // Transverse modes of the law frozen at x0. Scale modulation rescales the
    // base profile uniformly in depth, so the frozen law is again a profile.
    VerticalProfile frozen = base;
    if (medium.modulation == ModulationKind::scale) {
        frozen = base.scaled(1.0 + medium.amplitude *
                                       std::sin(medium.mod_wavenumber * a.x0 +
                                                medium.mod_phase));
    }
    std::vector<ModePair> modes = solve_modes(frozen, a.xi, disc);
    if (static_cast<size_t>(a.branch) > modes.size()) {
        throw AssumptionError("--branch " + std::to_string(a.branch) +
                              " exceeds the mode count " +
                              std::to_string(modes.size()));
    }
    ModeExpansion expansion =
        first_order_terms(medium, a.x0, a.xi, modes[static_cast<size_t>(a.branch - 1)],
                          disc);

    std::vector<double> epsilons = parse_list(a.epsilons, "--epsilons");
    ResidualReport report = residual_decay(medium, expansion, epsilons, disc);
    emit(a.out, residual_report_to_json(report));

    if (!a.field.empty()) {
        double eps = a.field_epsilon > 0.0 ? a.field_epsilon : epsilons.back();
        double k_real = a.xi / eps;
        long k = std::lround(k_real);
        if (std::abs(k_real - static_cast<double>(k)) > 1e-9) {
            throw AssumptionError("--field-epsilon must divide --xi to an integer");
        }
        Grid2d grid;
        grid.n_z = disc.n_points;
        grid.z_min = disc.z_min;
        grid.n_x = std::max<long>(256, 4 * k);
        // Frozen-mode ansatz e^{ikx}(φ₀ + ε·φ₁) broadcast over the columns —
        // a diagnostic snapshot, not the per-column resolved field.
        Eigen::VectorXcd field(grid.n_x * grid.n_z);
        for (long j = 0; j < grid.n_x; ++j) {
            std::complex<double> phase =
                std::exp(std::complex<double>(0.0, k * grid.h_x() * j));
            for (long m = 0; m < grid.n_z; ++m) {
                field(j * grid.n_z + m) =
                    phase * (expansion.phi0(m) + eps * expansion.phi1(m));
            }
        }
        emit(a.field, field_to_csv(field, grid, eps));
    }
    return 0;
}

} // namespace

// ---------------------------------------------------------------------------
// Spec parsing and entry point
// ---------------------------------------------------------------------------

VerticalProfile profile_from_spec(const std::string& spec) {
    auto tail_values = [&spec](size_t prefix, const std::string& kind) {
        std::vector<double> values;
        std::string item;
        std::istringstream in(spec.substr(prefix));
        while (std::getline(in, item, ',')) {
            values.push_back(parse_double(item, kind + " profile parameter"));
        }
        return values;
    };
    if (spec.rfind("step:", 0) == 0) {
        std::vector<double> v = tail_values(5, "step");
        if (v.size() != 3) {
            throw IoError("step profile spec needs layer,halfspace,thickness");
        }
        return make_step_profile(v[0], v[1], v[2]);
    }
    if (spec.rfind("exp:", 0) == 0) {
        std::vector<double> v = tail_values(4, "exp");
        if (v.size() == 3) return make_smooth_profile(v[0], v[1], v[2]);
        if (v.size() == 4) return make_smooth_profile(v[0], v[1], v[2], v[3]);
        throw IoError("exp profile spec needs ninf,ns,delta[,clip_tol]");
    }
    std::istringstream in(read_file(spec));
    return load_profile(in);
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Surface-wave dispersion, eigenvalue counting, and profile "
                 "inversion for layered media"};
    app.require_subcommand(1);

    ValidateArgs validate_args;
    CLI::App* validate_cmd =
        app.add_subcommand("validate", "Check a profile against the model assumptions");
    validate_cmd->add_option("--profile", validate_args.profile,
                             "step:a,b,t | exp:ninf,ns,delta[,tol] | CSV path")
        ->required();
    validate_cmd->add_option("--out", validate_args.out, "Report path or - for stdout")
        ->capture_default_str();

    SolveArgs solve_args;
    CLI::App* solve_cmd =
        app.add_subcommand("solve", "Guided modes at one wavenumber");
    solve_cmd->add_option("--profile", solve_args.profile, "Profile spec")->required();
    solve_cmd->add_option("--xi", solve_args.xi, "Horizontal wavenumber")->required();
    add_disc_options(solve_cmd, solve_args.disc, 4096);
    solve_cmd->add_option("--out", solve_args.out, "Mode table path or - for stdout")
        ->capture_default_str();
    solve_cmd->add_option("--eigenfunctions", solve_args.eigenfunctions,
                          "Optional eigenfunction table path");

    DispersionArgs dispersion_args;
    CLI::App* dispersion_cmd =
        app.add_subcommand("dispersion", "Trace dispersion branches over a wavenumber sweep");
    dispersion_cmd->add_option("--profile", dispersion_args.profile, "Profile spec")
        ->required();
    dispersion_cmd->add_option("--xi-min", dispersion_args.xi_min, "Sweep start")
        ->required();
    dispersion_cmd->add_option("--xi-max", dispersion_args.xi_max, "Sweep end")
        ->required();
    dispersion_cmd->add_option("--xi-count", dispersion_args.xi_count, "Sweep points")
        ->required();
    add_disc_options(dispersion_cmd, dispersion_args.disc, 4096);
    dispersion_cmd->add_option("--out", dispersion_args.out,
                               "Branch table path or - for stdout")
        ->capture_default_str();
    dispersion_cmd->add_option("--audit", dispersion_args.audit,
                               "Optional speed-ordering audit report path");

    CountArgs count_args;
    CLI::App* count_cmd =
        app.add_subcommand("count", "Eigenvalue counting table over a (xi, E) grid");
    count_cmd->add_option("--profile", count_args.profile, "Profile spec")->required();
    CLI::Option* xi_list_opt =
        count_cmd->add_option("--xi-list", count_args.xi_list, "Comma-separated wavenumbers");
    CLI::Option* xi_min_opt = count_cmd->add_option("--xi-min", count_args.xi_min);
    count_cmd->add_option("--xi-max", count_args.xi_max)->needs(xi_min_opt);
    count_cmd->add_option("--xi-count", count_args.xi_count)->needs(xi_min_opt);
    xi_min_opt->excludes(xi_list_opt);
    CLI::Option* e_list_opt =
        count_cmd->add_option("--e-list", count_args.e_list, "Comma-separated thresholds");
    CLI::Option* e_min_opt = count_cmd->add_option("--e-min", count_args.e_min);
    count_cmd->add_option("--e-max", count_args.e_max)->needs(e_min_opt);
    count_cmd->add_option("--e-count", count_args.e_count)->needs(e_min_opt);
    e_min_opt->excludes(e_list_opt);
    add_disc_options(count_cmd, count_args.disc, 4096);
    count_cmd->add_option("--out", count_args.out, "Count table path or - for stdout")
        ->capture_default_str();

    InvertArgs invert_args;
    CLI::App* invert_cmd =
        app.add_subcommand("invert", "Recover the vertical profile from a counting table");
    invert_cmd->add_option("--counting", invert_args.counting,
                           "Counting CSV produced by the count subcommand")
        ->required();
    invert_cmd->add_option("--n0", invert_args.n0, "Surface value N(0)")->required();
    invert_cmd->add_option("--ninf", invert_args.ninf,
                           "Continuum value; thresholds at or above it are dropped");
    invert_cmd->add_option("--fit-fraction", invert_args.fit_fraction,
                           "Top fraction of the wavenumber range used in the slope fit")
        ->capture_default_str();
    invert_cmd->add_option("--window", invert_args.window,
                           "Derivative smoothing window (odd)")
        ->capture_default_str();
    invert_cmd->add_option("--degree", invert_args.degree,
                           "Local polynomial degree")
        ->capture_default_str();
    invert_cmd->add_option("--reference", invert_args.reference,
                           "Optional reference profile spec for error metrics");
    invert_cmd->add_option("--out", invert_args.out,
                           "Reconstruction report path or - for stdout")
        ->capture_default_str();

    WkbArgs wkb_args;
    CLI::App* wkb_cmd = app.add_subcommand(
        "wkb-residual", "Two-scale expansion residual-decay study");
    wkb_cmd->add_option("--profile", wkb_args.profile, "Base profile spec")->required();
    wkb_cmd->add_option("--modulation", wkb_args.modulation,
                        "Horizontal modulation: none|scale")
        ->check(CLI::IsMember({"none", "scale"}))
        ->capture_default_str();
    wkb_cmd->add_option("--amplitude", wkb_args.amplitude, "Modulation amplitude (|a| < 1)")
        ->capture_default_str();
    wkb_cmd->add_option("--mod-k", wkb_args.mod_k, "Integer modulation wavenumber")
        ->capture_default_str();
    wkb_cmd->add_option("--mod-phase", wkb_args.mod_phase, "Modulation phase")
        ->capture_default_str();
    wkb_cmd->add_option("--regularity", wkb_args.regularity,
                        "Slow-depth regularity class: a|b")
        ->check(CLI::IsMember({"a", "b"}))
        ->capture_default_str();
    wkb_cmd->add_option("--depth-coeffs", wkb_args.depth_coeffs,
                        "Comma-separated slow-depth Taylor coefficients (class a only)");
    wkb_cmd->add_option("--xi", wkb_args.xi, "Horizontal wavenumber")->required();
    wkb_cmd->add_option("--branch", wkb_args.branch, "Mode branch index (1-based)")
        ->capture_default_str();
    wkb_cmd->add_option("--x0", wkb_args.x0, "Expansion point in [0, 2pi)")
        ->capture_default_str();
    wkb_cmd->add_option("--epsilons", wkb_args.epsilons,
                        "Comma-separated ascending scale parameters; each xi/eps "
                        "must be an integer")
        ->required();
    add_disc_options(wkb_cmd, wkb_args.disc, 127);
    wkb_cmd->add_option("--out", wkb_args.out, "Report path or - for stdout")
        ->capture_default_str();
    wkb_cmd->add_option("--field", wkb_args.field,
                        "Optional frozen-mode ansatz field dump path");
    wkb_cmd->add_option("--field-epsilon", wkb_args.field_epsilon,
                        "Scale parameter for the field dump (default: largest)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: usage: " << e.what() << "\n";
        return 1;
    }

    try {
        if (validate_cmd->parsed()) return run_validate(validate_args);
        if (solve_cmd->parsed()) return run_solve(solve_args);
        if (dispersion_cmd->parsed()) return run_dispersion(dispersion_args);
        if (count_cmd->parsed()) return run_count(count_args);
        if (invert_cmd->parsed()) return run_invert(invert_args);
        if (wkb_cmd->parsed()) return run_wkb(wkb_args);
        std::cerr << "error: usage: no subcommand given\n";
        return 1;
    } catch (const AssumptionError& e) {
        std::cerr << "error: assumption: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "error: io: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "error: numerical: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 2;
    }
}

} // namespace stratwave
