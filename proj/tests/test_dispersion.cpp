#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "stratwave/dispersion.hpp"
#include "stratwave/errors.hpp"
#include "stratwave/io.hpp"
#include "stratwave/profiles.hpp"

#include <cmath>
#include <sstream>

using namespace stratwave;

namespace {

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> g(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        g[static_cast<size_t>(i)] = a + (b - a) * static_cast<double>(i) / (n - 1);
    }
    return g;
}

Discretization disc_n(long n) {
    Discretization d;
    d.z_min = -8.0;
    d.n_points = n;
    return d;
}

} // namespace

TEST_CASE("branch tracing over a wavenumber sweep") {
    VerticalProfile p = make_step_profile(1.0, 4.0, 1.0);
    auto xi_grid = linspace(0.5, 10.0, 40);
    auto branches = trace_branches(p, xi_grid, disc_n(1024));

    REQUIRE(!branches.empty());
    // Highest branch count at the top wavenumber: 6 in the continuum; the
    // last branch hugs the continuum edge, so 5 is acceptable at this grid.
    CHECK(branches.size() >= 5);
    CHECK(branches.size() <= 6);

    for (size_t j = 0; j < branches.size(); ++j) {
        const auto& b = branches[j];
        CHECK(b.branch_index == static_cast<int>(j) + 1);
        REQUIRE(!b.xi_grid.empty());
        CHECK(b.birth_xi == b.xi_grid.front());

        // Presence is a contiguous suffix of the sweep: once born, never lost.
        size_t start = 0;
        while (start < xi_grid.size() && xi_grid[start] != b.xi_grid.front()) ++start;
        REQUIRE(start + b.xi_grid.size() == xi_grid.size());
        for (size_t i = 0; i < b.xi_grid.size(); ++i) {
            CHECK(b.xi_grid[i] == xi_grid[start + i]);
        }

        for (size_t i = 0; i + 1 < b.xi_grid.size(); ++i) {
            CHECK(b.lambda[i + 1] > b.lambda[i]); // λ strictly increasing in ξ
            // Scaled eigenvalue non-increasing (semiclassical deepening).
            double s0 = b.lambda[i] / (b.xi_grid[i] * b.xi_grid[i]);
            double s1 = b.lambda[i + 1] / (b.xi_grid[i + 1] * b.xi_grid[i + 1]);
            CHECK(s1 <= s0 * (1.0 + 1e-12));
        }
    }

    // Branches never cross: λ_j(ξ_{i+1}) stays below λ_{j+1}(ξ_i)'s branch at
    // the same wavenumber.
    for (size_t j = 0; j + 1 < branches.size(); ++j) {
        const auto& lo = branches[j];
        const auto& hi = branches[j + 1];
        for (size_t a = 0; a < lo.xi_grid.size(); ++a) {
            for (size_t b2 = 0; b2 < hi.xi_grid.size(); ++b2) {
                if (lo.xi_grid[a] == hi.xi_grid[b2]) {
                    CHECK(lo.lambda[a] < hi.lambda[b2]);
                }
            }
        }
    }

    // Branch count non-decreasing along the sweep.
    std::vector<int> alive(xi_grid.size(), 0);
    for (const auto& b : branches) {
        for (double xi : b.xi_grid) {
            for (size_t i = 0; i < xi_grid.size(); ++i) {
                if (xi_grid[i] == xi) ++alive[i];
            }
        }
    }
    for (size_t i = 0; i + 1 < alive.size(); ++i) CHECK(alive[i + 1] >= alive[i]);
}

TEST_CASE("constant medium has no trapped branches") {
    VerticalProfile c = make_constant_profile(2.0, -1.0);
    auto branches = trace_branches(c, linspace(1.0, 5.0, 5), disc_n(256));
    CHECK(branches.empty());
    // Body waves in a constant medium: ω = sqrt(n)·ξ exactly, so phase and
    // group speed coincide at sqrt(n), independent of frequency.
    double n = 2.0;
    double xi_a = 3.0, xi_b = 3.001;
    double slope = (std::sqrt(n) * xi_b - std::sqrt(n) * xi_a) / (xi_b - xi_a);
    CHECK(slope == doctest::Approx(std::sqrt(n)).epsilon(1e-12));
    CHECK(std::sqrt(n) * xi_a / xi_a == doctest::Approx(slope).epsilon(1e-12));
}

TEST_CASE("group speed matches the eigenvalue derivative") {
    VerticalProfile p = make_step_profile(1.0, 4.0, 1.0);
    Discretization d = disc_n(4096);
    double xi = 5.0;
    auto modes = solve_modes(p, xi, d);
    REQUIRE(modes.size() == 3);

    double delta = 1e-3 * xi;
    auto up = solve_modes(p, xi + delta, d);
    auto dn = solve_modes(p, xi - delta, d);
    REQUIRE(up.size() >= modes.size());
    REQUIRE(dn.size() == modes.size());

    for (size_t k = 0; k < modes.size(); ++k) {
        double v_hf = group_speed(modes[k], p, xi);
        double dlam = (up[k].lambda - dn[k].lambda) / (2.0 * delta);
        double v_fd = dlam / (2.0 * std::sqrt(modes[k].lambda));
        CHECK(std::abs(v_hf - v_fd) / v_fd < 1e-4);
        // Strict ordering against the phase speed.
        CHECK(v_hf < std::sqrt(modes[k].lambda) / xi);
    }
}

TEST_CASE("derivative consistency along a whole sweep") {
    VerticalProfile p = make_step_profile(1.0, 4.0, 1.0);
    Discretization d = disc_n(512);
    auto xi_grid = linspace(1.0, 9.0, 17);
    auto branches = trace_branches(p, xi_grid, d);
    REQUIRE(!branches.empty());
    int checked = 0;
    for (const auto& b : branches) {
        for (size_t i = 3; i < b.xi_grid.size(); ++i) { // skip points near birth
            double xi = b.xi_grid[i];
            double delta = 1e-3 * xi;
            auto up = solve_modes(p, xi + delta, d);
            auto dn = solve_modes(p, xi - delta, d);
            size_t j = static_cast<size_t>(b.branch_index);
            if (up.size() < j || dn.size() < j) continue;
            double dlam = (up[j - 1].lambda - dn[j - 1].lambda) / (2.0 * delta);
            double v_fd = dlam / (2.0 * b.omega[i]);
            CHECK(std::abs(b.group_speed[i] - v_fd) / v_fd < 1e-4);
            ++checked;
        }
    }
    CHECK(checked > 20);
}

TEST_CASE("high-frequency fundamental mode rides the slow layer") {
    VerticalProfile p = make_step_profile(1.0, 4.0, 1.0);
    auto modes = solve_modes(p, 50.0, disc_n(4096));
    REQUIRE(!modes.empty());
    double v = group_speed(modes[0], p, 50.0);
    double c = std::sqrt(modes[0].lambda) / 50.0;
    CHECK(v > 0.9);            // approaches sqrt(inf N) = 1 from above
    CHECK(v < c);
}

TEST_CASE("group speed rejects unnormalized modes") {
    VerticalProfile p = make_step_profile(1.0, 4.0, 1.0);
    auto modes = solve_modes(p, 5.0, disc_n(512));
    REQUIRE(!modes.empty());
    ModePair bad = modes[0];
    bad.normalization_error = 1e-6;
    CHECK_THROWS_AS(group_speed(bad, p, 5.0), AssumptionError);
}

TEST_CASE("speed ordering audit") {
    VerticalProfile p = make_step_profile(1.0, 4.0, 1.0);
    auto branches = trace_branches(p, linspace(0.5, 10.0, 40), disc_n(1024));
    auto rep = speed_bound_check(branches, p);
    CHECK(rep.ok);
    CHECK(rep.violations == 0);
    CHECK(rep.points_checked > 100);
    CHECK(rep.max_phase_speed < 2.0);       // sqrt(N_∞)
    CHECK(rep.min_upper_margin > 0.0);
    CHECK(rep.min_group_margin > 0.0);
    REQUIRE(rep.branch_index.size() == branches.size());
    for (double gap : rep.min_speed_gap) CHECK(gap > 0.0);
}

TEST_CASE("counting table values and monotonicity") {
    VerticalProfile p = make_step_profile(1.0, 4.0, 1.0);
    Discretization d = disc_n(2048);
    std::vector<double> xis = {2.0, 5.0, 10.0, 20.0, 40.0};
    std::vector<double> Es = {1.0 + 1e-6, 2.0, 3.0, 4.0 - 1e-9};
    auto data = counting_grid(p, xis, Es, d);

    REQUIRE(data.counts.size() == xis.size());
    REQUIRE(data.counts[0].size() == Es.size());
    CHECK(data.monotone_in_xi);

    // Full-well count at E→N_∞ matches the root count of the closed form.
    CHECK(data.counts[1][3] == 3);  // ξ=5
    CHECK(data.counts[2][3] == 6);  // ξ=10
    CHECK(data.counts[3][3] == 11); // ξ=20

    // Just above inf N the well is almost empty.
    for (size_t i = 0; i < xis.size(); ++i) CHECK(data.counts[i][0] <= 2);

    // Monotone along E for each ξ.
    for (size_t i = 0; i < xis.size(); ++i) {
        for (size_t m = 0; m + 1 < Es.size(); ++m) {
            CHECK(data.counts[i][m + 1] >= data.counts[i][m]);
        }
    }

    // First-power scaling: doubling ξ doubles the count within 15%.
    double ratio = static_cast<double>(data.counts[4][1]) /
                   static_cast<double>(data.counts[3][1]);
    CHECK(ratio > 2.0 * 0.85);
    CHECK(ratio < 2.0 * 1.15);

    CHECK_THROWS_AS(counting_grid(p, xis, {0.5}, d), AssumptionError);
    CHECK_THROWS_AS(counting_grid(p, xis, {4.0}, d), AssumptionError);
}

TEST_CASE("counting table agrees with traced branches") {
    VerticalProfile p = make_step_profile(1.0, 4.0, 1.0);
    Discretization d = disc_n(1024);
    std::vector<double> xis = {3.0, 6.0, 9.0};
    std::vector<double> Es = {1.5, 2.5, 3.5};
    auto data = counting_grid(p, xis, Es, d);
    auto branches = trace_branches(p, xis, d);
    for (size_t i = 0; i < xis.size(); ++i) {
        for (size_t m = 0; m < Es.size(); ++m) {
            int alive = 0;
            for (const auto& b : branches) {
                for (size_t a = 0; a < b.xi_grid.size(); ++a) {
                    if (b.xi_grid[a] == xis[i] &&
                        b.lambda[a] <= Es[m] * xis[i] * xis[i]) {
                        ++alive;
                    }
                }
            }
            CHECK(data.counts[i][m] == alive);
        }
    }
}

TEST_CASE("branch CSV layout") {
    VerticalProfile p = make_step_profile(1.0, 4.0, 1.0);
    auto branches = trace_branches(p, {2.0, 5.0}, disc_n(512));
    std::string csv = branches_to_csv(branches);
    std::istringstream in(csv);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "j,xi,lambda,omega,phase_speed,group_speed");
    long rows = 0;
    size_t total_points = 0;
    for (const auto& b : branches) total_points += b.xi_grid.size();
    while (std::getline(in, line)) {
        if (!line.empty()) ++rows;
        auto f = split_csv_line(line);
        REQUIRE(f.size() == 6);
        CHECK(parse_long(f[0], "j") >= 1);
    }
    CHECK(rows == static_cast<long>(total_points));
}

TEST_CASE("counting CSV round trip") {
    VerticalProfile p = make_step_profile(1.0, 4.0, 1.0);
    std::vector<double> xis = {2.0, 4.0, 8.0};
    std::vector<double> Es = {1.5, 2.5, 3.5};
    auto data = counting_grid(p, xis, Es, disc_n(512));
    std::string csv = counting_to_csv(data);

    std::istringstream in(csv);
    auto back = counting_from_csv(in);
    CHECK(back.xi_grid == data.xi_grid);
    CHECK(back.E_grid == data.E_grid);
    CHECK(back.counts == data.counts);
    CHECK(back.monotone_in_xi == data.monotone_in_xi);

    std::istringstream bad_header("a,b,c\n1,2,3\n");
    CHECK_THROWS_AS(counting_from_csv(bad_header), IoError);
    std::istringstream incomplete("xi,E,count\n1,1.5,0\n1,2.5,1\n2,1.5,1\n");
    CHECK_THROWS_AS(counting_from_csv(incomplete), IoError);
    std::istringstream empty_body("xi,E,count\n");
    CHECK_THROWS_AS(counting_from_csv(empty_body), IoError);
}
