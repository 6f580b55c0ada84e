#include "stratwave/dispersion.hpp"

#include "stratwave/errors.hpp"
#include "stratwave/io.hpp"
#include "stratwave/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <sstream>

namespace stratwave {

namespace {

void require_ascending_positive(const std::vector<double>& grid, const char* what) {
    if (grid.empty()) throw AssumptionError(std::string(what) + " grid is empty");
    double prev = 0.0;
    for (double v : grid) {
        if (!(v > prev)) {
            throw AssumptionError(std::string(what) + " grid must be ascending and positive");
        }
        prev = v;
    }
}

} // namespace

std::vector<DispersionBranch> trace_branches(const VerticalProfile& profile,
                                             const std::vector<double>& xi_grid,
                                             const Discretization& disc) {
    require_ascending_positive(xi_grid, "wavenumber");

    std::vector<std::vector<ModePair>> per_xi(xi_grid.size());
    parallel_for(static_cast<long>(xi_grid.size()), [&](long i) {
        per_xi[static_cast<size_t>(i)] =
            solve_modes(profile, xi_grid[static_cast<size_t>(i)], disc);
    });

    size_t max_modes = 0;
    for (const auto& modes : per_xi) max_modes = std::max(max_modes, modes.size());

    std::vector<DispersionBranch> branches;
    branches.reserve(max_modes);
    for (size_t j = 1; j <= max_modes; ++j) {
        DispersionBranch b;
        b.branch_index = static_cast<int>(j);
        for (size_t i = 0; i < xi_grid.size(); ++i) {
            if (per_xi[i].size() < j) continue;
            const ModePair& m = per_xi[i][j - 1];
            double xi = xi_grid[i];
            b.xi_grid.push_back(xi);
            b.lambda.push_back(m.lambda);
            double w = std::sqrt(m.lambda);
            b.omega.push_back(w);
            b.phase_speed.push_back(w / xi);
            b.group_speed.push_back(group_speed(m, profile, xi));
        }
        b.birth_xi = b.xi_grid.front();
        branches.push_back(std::move(b));
    }
    return branches;
}

double group_speed(const ModePair& mode, const VerticalProfile& profile, double xi) {
    if (mode.normalization_error > 1e-9) {
        throw AssumptionError("group_speed requires a normalized mode (drift " +
                              format_double(mode.normalization_error) + " > 1e-9)");
    }
    if (!(mode.lambda > 0.0)) throw AssumptionError("mode eigenvalue must be positive");
    double integral = potential_integral(profile, mode);
    return xi / std::sqrt(mode.lambda) * integral;
}

SpeedBoundReport speed_bound_check(const std::vector<DispersionBranch>& branches,
                                   const VerticalProfile& profile) {
    SpeedBoundReport rep;
    double body_speed = std::sqrt(profile.tail_value);
    rep.min_upper_margin = std::numeric_limits<double>::infinity();
    rep.min_group_margin = std::numeric_limits<double>::infinity();

    for (const auto& b : branches) {
        double branch_gap = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < b.xi_grid.size(); ++i) {
            ++rep.points_checked;
            double c = b.phase_speed[i];
            double v = b.group_speed[i];
            rep.max_phase_speed = std::max(rep.max_phase_speed, c);
            rep.min_upper_margin = std::min(rep.min_upper_margin, body_speed - c);
            rep.min_group_margin = std::min(rep.min_group_margin, c - v);
            branch_gap = std::min(branch_gap, c - v);
            if (!(v < c) || !(c < body_speed)) ++rep.violations;
        }
        rep.branch_index.push_back(b.branch_index);
        rep.min_speed_gap.push_back(branch_gap);
    }
    if (rep.points_checked == 0) {
        rep.min_upper_margin = 0.0;
        rep.min_group_margin = 0.0;
    }
    rep.ok = rep.violations == 0;
    return rep;
}

CountingData counting_grid(const VerticalProfile& profile,
                           const std::vector<double>& xi_grid,
                           const std::vector<double>& E_grid,
                           const Discretization& disc) {
    require_ascending_positive(xi_grid, "wavenumber");
    require_ascending_positive(E_grid, "energy");
    double floor_n = profile.inf_value();
    for (double E : E_grid) {
        if (!(E > floor_n) || !(E < profile.tail_value)) {
            throw AssumptionError("counting energies must satisfy inf N < E < N_inf (got " +
                                  format_double(E) + ")");
        }
    }

    CountingData data;
    data.xi_grid = xi_grid;
    data.E_grid = E_grid;
    data.counts.assign(xi_grid.size(), std::vector<int>(E_grid.size(), 0));

    parallel_for(static_cast<long>(xi_grid.size()), [&](long i) {
        double xi = xi_grid[static_cast<size_t>(i)];
        AssembledOperator op = assemble_operator(profile, xi, disc);
        for (size_t m = 0; m < E_grid.size(); ++m) {
            data.counts[static_cast<size_t>(i)][m] = count_below(op, E_grid[m] * xi * xi);
        }
    });

    for (size_t m = 0; m < E_grid.size() && data.monotone_in_xi; ++m) {
        for (size_t i = 0; i + 1 < xi_grid.size(); ++i) {
            if (data.counts[i + 1][m] < data.counts[i][m]) {
                data.monotone_in_xi = false;
                break;
            }
        }
    }
    return data;
}

std::string branches_to_csv(const std::vector<DispersionBranch>& branches) {
    std::string out = "j,xi,lambda,omega,phase_speed,group_speed\n";
    for (const auto& b : branches) {
        for (size_t i = 0; i < b.xi_grid.size(); ++i) {
            out += std::to_string(b.branch_index);
            out += ',';
            out += format_double(b.xi_grid[i]);
            out += ',';
            out += format_double(b.lambda[i]);
            out += ',';
            out += format_double(b.omega[i]);
            out += ',';
            out += format_double(b.phase_speed[i]);
            out += ',';
            out += format_double(b.group_speed[i]);
            out += '\n';
        }
    }
    return out;
}

std::string counting_to_csv(const CountingData& data) {
    std::string out = "xi,E,count\n";
    for (size_t i = 0; i < data.xi_grid.size(); ++i) {
        for (size_t m = 0; m < data.E_grid.size(); ++m) {
            out += format_double(data.xi_grid[i]);
            out += ',';
            out += format_double(data.E_grid[m]);
            out += ',';
            out += std::to_string(data.counts[i][m]);
            out += '\n';
        }
    }
    return out;
}

CountingData counting_from_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || split_csv_line(line) != std::vector<std::string>{"xi", "E", "count"}) {
        throw IoError("counting CSV must start with header 'xi,E,count'");
    }

    struct Cell {
        double xi;
        double E;
        int count;
    };
    std::vector<Cell> cells;
    long row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 3) {
            throw IoError("counting CSV row " + std::to_string(row) + ": expected 3 fields");
        }
        Cell c;
        c.xi = parse_double(fields[0], "counting CSV xi");
        c.E = parse_double(fields[1], "counting CSV E");
        c.count = static_cast<int>(parse_long(fields[2], "counting CSV count"));
        cells.push_back(c);
    }
    if (cells.empty()) throw IoError("counting CSV has no data rows");

    std::vector<double> xis, Es;
    for (const auto& c : cells) {
        if (xis.empty() || c.xi > xis.back()) xis.push_back(c.xi);
        else if (c.xi != xis.back() &&
                 std::find(xis.begin(), xis.end(), c.xi) == xis.end()) {
            throw IoError("counting CSV rows must be grouped by ascending xi");
        }
    }
    for (const auto& c : cells) {
        if (std::find(Es.begin(), Es.end(), c.E) == Es.end()) Es.push_back(c.E);
    }
    if (!std::is_sorted(Es.begin(), Es.end(),
                        [](double a, double b) { return a < b; }) ||
        std::adjacent_find(Es.begin(), Es.end()) != Es.end()) {
        throw IoError("counting CSV energies must repeat in the same ascending order per xi");
    }
    if (cells.size() != xis.size() * Es.size()) {
        throw IoError("counting CSV must contain a complete xi-by-E table");
    }

    CountingData data;
    data.xi_grid = xis;
    data.E_grid = Es;
    data.counts.assign(xis.size(), std::vector<int>(Es.size(), 0));
    for (size_t idx = 0; idx < cells.size(); ++idx) {
        size_t i = idx / Es.size();
        size_t m = idx % Es.size();
        if (cells[idx].xi != xis[i] || cells[idx].E != Es[m]) {
            throw IoError("counting CSV rows out of order at data row " + std::to_string(idx + 1));
        }
        data.counts[i][m] = cells[idx].count;
    }
    for (size_t m = 0; m < Es.size(); ++m) {
        for (size_t i = 0; i + 1 < xis.size(); ++i) {
            if (data.counts[i + 1][m] < data.counts[i][m]) data.monotone_in_xi = false;
        }
    }
    return data;
}

} // namespace stratwave
