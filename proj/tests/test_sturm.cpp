#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "stratwave/errors.hpp"
#include "stratwave/profiles.hpp"
#include "stratwave/sturm.hpp"

#include <cmath>

using namespace stratwave;

namespace {

Discretization disc_for(double z_min, long n, FluxSampling s = FluxSampling::cell_average) {
    Discretization d;
    d.z_min = z_min;
    d.n_points = n;
    d.sampling = s;
    return d;
}

// Transcendental residual of a step-profile eigenvalue: zero iff λ solves
// n2·κ·sin(q·t) + n1·q·cos(q·t) = 0.
double step_dispersion_residual(double n1, double n2, double t, double xi, double lambda) {
    double q = std::sqrt(lambda / n1 - xi * xi);
    double kappa = std::sqrt(xi * xi - lambda / n2);
    double val = n2 * kappa * std::sin(q * t) + n1 * q * std::cos(q * t);
    double scale = n2 * kappa * std::abs(std::sin(q * t)) + n1 * q * std::abs(std::cos(q * t));
    return std::abs(val) / std::max(scale, 1e-30);
}

} // namespace

TEST_CASE("step oracle root counts and bracket") {
    // Mode count is floor(q_max·t/π + 1/2) with q_max = ξ·sqrt(n2/n1 − 1).
    auto r5 = step_oracle(1.0, 4.0, 1.0, 5.0);
    CHECK(r5.size() == 3);
    auto r2 = step_oracle(1.0, 4.0, 1.0, 2.0);
    CHECK(r2.size() == 1);
    auto r10 = step_oracle(1.0, 4.0, 1.0, 10.0);
    CHECK(r10.size() == 6);
    auto r20 = step_oracle(1.0, 4.0, 1.0, 20.0);
    CHECK(r20.size() == 11);
    CHECK(step_oracle(1.0, 4.0, 1.0, 1e-3).empty());

    for (double xi : {2.0, 5.0, 10.0, 20.0}) {
        for (double lam : step_oracle(1.0, 4.0, 1.0, xi)) {
            CHECK(lam > 1.0 * xi * xi);
            CHECK(lam < 4.0 * xi * xi);
            CHECK(step_dispersion_residual(1.0, 4.0, 1.0, xi, lam) < 1e-9);
        }
    }

    // Smallest root at ξ=5: q1 ≈ 2.9616, λ1 = 25 + q1² ≈ 33.771.
    CHECK(r5[0] == doctest::Approx(33.7711).epsilon(2e-4));
    CHECK(r5[0] == doctest::Approx(25.0 + 2.9616 * 2.9616).epsilon(1e-3));
    // λ1 at ξ=2 for later freezes.
    CHECK(r2[0] == doctest::Approx(10.854).epsilon(1e-3));
}

TEST_CASE("constant-coefficient stencil values") {
    VerticalProfile c = make_constant_profile(2.5, -1.0);
    for (FluxSampling s : {FluxSampling::cell_average, FluxSampling::midpoint}) {
        Discretization d = disc_for(-2.0, 31, s);
        AssembledOperator op = assemble_operator(c, 3.0, d);
        double h = d.spacing();
        CHECK(op.T.mass[5] == doctest::Approx(h).epsilon(1e-15));
        // Weak form stores h·(standard stencil): diag = 2c/h + h·c·ξ².
        CHECK(op.T.diag[5] == doctest::Approx(2.0 * 2.5 / h + h * 2.5 * 9.0).epsilon(1e-14));
        CHECK(op.T.off[5] == doctest::Approx(-2.5 / h).epsilon(1e-14));
    }
}

TEST_CASE("midpoint sampling straddles the step interface by coordinate") {
    VerticalProfile p = make_step_profile(1.0, 4.0, 1.0);
    Discretization d = disc_for(-2.0, 19, FluxSampling::midpoint);
    AssembledOperator op = assemble_operator(p, 1.0, d);
    double h = d.spacing(); // 0.1; interface −1 sits on node 10
    // Cell midpoint at −1.05 (half-space side) vs −0.95 (layer side).
    CHECK(op.T.off[8] == doctest::Approx(-4.0 / h).epsilon(1e-15));
    CHECK(op.T.off[9] == doctest::Approx(-1.0 / h).epsilon(1e-15));
}

TEST_CASE("assembly is symmetric and positive") {
    VerticalProfile p = make_step_profile(1.0, 4.0, 1.0);
    AssembledOperator op = assemble_operator(p, 5.0, disc_for(-8.0, 255));
    // The tridiagonal representation shares the off-diagonal, so A = A^T holds
    // structurally; verify the quadratic form is symmetric on a few basis pairs.
    long n = op.T.size();
    Eigen::VectorXd ei = Eigen::VectorXd::Zero(n), ej = Eigen::VectorXd::Zero(n);
    ei[7] = 1.0;
    ej[8] = 1.0;
    CHECK(ei.dot(pencil_apply(op.T, ej)) == doctest::Approx(ej.dot(pencil_apply(op.T, ei))));
    for (long i = 0; i < n; ++i) CHECK(op.T.diag[i] > 0.0);
}

TEST_CASE("solve_modes matches the transcendental oracle") {
    VerticalProfile p = make_step_profile(1.0, 4.0, 1.0);
    Discretization d = disc_for(-8.0, 2048);
    for (double xi : {2.0, 5.0}) {
        auto modes = solve_modes(p, xi, d);
        auto oracle = step_oracle(1.0, 4.0, 1.0, xi);
        REQUIRE(modes.size() == oracle.size());
        for (size_t k = 0; k < modes.size(); ++k) {
            CHECK(modes[k].lambda ==
                  doctest::Approx(oracle[k]).epsilon(5e-5)); // second-order error at this h
            CHECK(modes[k].branch_index == static_cast<int>(k) + 1);
            CHECK(modes[k].normalization_error < 1e-12);
            CHECK(modes[k].eigen_residual < 1e-9 * std::max(1.0, modes[k].lambda));
            // Eigenvalue bracket from the continuous theory.
            CHECK(modes[k].lambda > 1.0 * xi * xi);
            CHECK(modes[k].lambda < 4.0 * xi * xi);
            // Dirichlet ends on the closed grid.
            CHECK(modes[k].eigenfunction[0] == 0.0);
            CHECK(modes[k].eigenfunction[modes[k].eigenfunction.size() - 1] == 0.0);
        }
        // Simplicity: comfortable gaps between consecutive eigenvalues.
        for (size_t k = 0; k + 1 < modes.size(); ++k) {
            CHECK(modes[k + 1].lambda - modes[k].lambda > 1e-9 * xi * xi);
        }
    }
}

TEST_CASE("second-order convergence toward the oracle") {
    VerticalProfile p = make_step_profile(1.0, 4.0, 1.0);
    double xi = 5.0;
    double exact = step_oracle(1.0, 4.0, 1.0, xi)[0];
    std::vector<double> errs;
    for (long m : {256, 512, 1024, 2048}) {
        auto modes = solve_modes(p, xi, disc_for(-8.0, m - 1));
        REQUIRE(modes.size() == 3);
        errs.push_back(std::abs(modes[0].lambda - exact));
    }
    for (size_t k = 0; k + 1 < errs.size(); ++k) {
        double ratio = errs[k] / errs[k + 1];
        CHECK(ratio > 3.4);
        CHECK(ratio < 4.6);
    }
}

TEST_CASE("count_below agrees with the oracle and is monotone") {
    VerticalProfile p = make_step_profile(1.0, 4.0, 1.0);
    Discretization d = disc_for(-8.0, 4096);
    CHECK(count_below(p, 5.0, 4.0 * (1.0 - 1e-9), d) == 3);
    CHECK(count_below(p, 5.0, 1.0, d) == 0);       // E at inf N
    CHECK(count_below(p, 5.0, 0.5, d) == 0);       // below inf N
    CHECK(count_below(p, 10.0, 4.0 * (1.0 - 1e-9), d) == 6);
    int prev = 0;
    for (double E : {1.2, 1.8, 2.4, 3.0, 3.6, 3.95}) {
        int c = count_below(p, 5.0, E, d);
        CHECK(c >= prev);
        prev = c;
    }
    CHECK_THROWS_AS(count_below(p, 5.0, 4.0, d), AssumptionError);

    VerticalProfile c = make_constant_profile(2.0, -1.0);
    CHECK(count_below(c, 5.0, 1.99, disc_for(-4.0, 512)) == 0);
    CHECK(solve_modes(c, 5.0, disc_for(-4.0, 512)).empty());
}

TEST_CASE("count_below is consistent with solve_modes") {
    VerticalProfile p = make_step_profile(1.0, 4.0, 1.0);
    Discretization d = disc_for(-8.0, 1024);
    double xi = 10.0;
    auto modes = solve_modes(p, xi, d);
    for (double E : {1.5, 2.0, 3.0, 3.9}) {
        int direct = count_below(p, xi, E, d);
        int from_modes = 0;
        for (const auto& m : modes) {
            if (m.lambda <= E * xi * xi) ++from_modes;
        }
        CHECK(direct == from_modes);
    }
}

TEST_CASE("edge flag marks modes near the continuum threshold") {
    VerticalProfile p = make_step_profile(1.0, 4.0, 1.0);
    auto modes = solve_modes(p, 10.0, disc_for(-8.0, 4096));
    REQUIRE(modes.size() == 6);
    CHECK(modes[5].edge_flag);        // λ6 ≈ 399.89, within 1e−3 of threshold 400
    CHECK_FALSE(modes[0].edge_flag);
    CHECK(modes[5].decay_rate < 0.5); // slow tail decay for the edge mode
    CHECK(modes[0].decay_rate > 4.0);
}

TEST_CASE("tail decay bound above the rounding floor") {
    VerticalProfile p = make_step_profile(1.0, 4.0, 1.0);
    Discretization d = disc_for(-8.0, 2048);
    auto modes = solve_modes(p, 5.0, d);
    auto grid = closed_grid(d.z_min, d.n_points);
    for (const auto& m : modes) {
        // |φ(Z)| ≤ |φ(Z0)|·exp(κ(Z−Z0))·(1+1e−3) wherever the bound exceeds
        // the eigenvector rounding floor.
        size_t i0 = 0;
        while (grid[i0] < -1.0) ++i0; // first node at/above the interface
        double phi0 = std::abs(m.eigenfunction[static_cast<long>(i0)]);
        double floor_mag = 1e-11 * m.eigenfunction.cwiseAbs().maxCoeff();
        for (size_t i = 0; i < i0; ++i) {
            double bound = phi0 * std::exp(m.decay_rate * (grid[i] - grid[i0])) * (1.0 + 1e-3);
            if (bound > floor_mag) {
                CHECK(std::abs(m.eigenfunction[static_cast<long>(i)]) <= bound + floor_mag);
            }
        }
    }
}

TEST_CASE("semiclassical scaling of the ground branch") {
    VerticalProfile p = make_step_profile(1.0, 4.0, 1.0);
    double prev = 4.0;
    for (double xi : {2.0, 5.0, 10.0, 20.0}) {
        auto modes = solve_modes(p, xi, disc_for(-8.0, 2048));
        REQUIRE(!modes.empty());
        double scaled = modes[0].lambda / (xi * xi);
        CHECK(scaled < prev);
        CHECK(scaled > 1.0);
        prev = scaled;
    }
}

TEST_CASE("exact-decay bottom condition beats plain truncation when shallow") {
    VerticalProfile p = make_step_profile(1.0, 4.0, 1.0);
    double xi = 2.0;
    double exact = step_oracle(1.0, 4.0, 1.0, xi)[0];

    Discretization shallow = disc_for(-3.0, 2048);
    auto dir = solve_modes(p, xi, shallow);
    shallow.bottom_bc = BottomCondition::exact_decay;
    auto rob = solve_modes(p, xi, shallow);
    REQUIRE(dir.size() == 1);
    REQUIRE(rob.size() == 1);
    double err_dir = std::abs(dir[0].lambda - exact);
    double err_rob = std::abs(rob[0].lambda - exact);
    CHECK(err_rob * 10.0 < err_dir);
    CHECK(rob[0].normalization_error < 1e-12);
    // The bottom sample is free (non-zero) under the decay closure.
    CHECK(std::abs(rob[0].eigenfunction[0]) > 0.0);
}

TEST_CASE("smooth profile in the sharp limit agrees with the degenerate step") {
    // δ → 0 collapses the subsurface structure to a vanishing-thickness layer:
    // both descriptions have empty discrete spectra.
    VerticalProfile e = make_smooth_profile(4.0, 1.0, 1e-6, 1e-2);
    auto modes = solve_modes(e, 5.0, disc_for(-8.0, 2048));
    CHECK(modes.empty());
    CHECK(step_oracle(1.0, 4.0, 1e-6, 5.0).empty());
}

TEST_CASE("smooth profile eigenvalues converge under refinement") {
    VerticalProfile e = make_smooth_profile(4.0, 1.0, 0.5, 1e-2);
    double xi = 5.0;
    auto coarse = solve_modes(e, xi, disc_for(-8.0, 1024));
    auto fine = solve_modes(e, xi, disc_for(-8.0, 4096));
    REQUIRE(!fine.empty());
    REQUIRE(coarse.size() == fine.size());
    for (size_t k = 0; k < fine.size(); ++k) {
        CHECK(std::abs(coarse[k].lambda - fine[k].lambda) <
              1e-4 * std::max(1.0, fine[k].lambda));
        CHECK(fine[k].lambda > 1.0 * xi * xi);
        CHECK(fine[k].lambda < 4.0 * xi * xi);
    }
}

TEST_CASE("generic assembly matches midpoint-sampled operator assembly") {
    VerticalProfile p = make_step_profile(1.0, 4.0, 1.0);
    double xi = 3.0;
    Discretization d = disc_for(-4.0, 255, FluxSampling::midpoint);
    AssembledOperator op = assemble_operator(p, xi, d);
    SymTridiag g = assemble_generic([&](double Z) { return p.evaluate(Z); }, xi * xi,
                                    d.z_min, d.n_points);
    REQUIRE(g.size() == op.T.size());
    for (long i = 0; i < g.size(); ++i) {
        CHECK(g.diag[i] == doctest::Approx(op.T.diag[i]).epsilon(1e-15));
        if (i + 1 < g.size()) CHECK(g.off[i] == doctest::Approx(op.T.off[i]).epsilon(1e-15));
    }
}

TEST_CASE("default truncation depth is finite and capped") {
    VerticalProfile p = make_step_profile(1.0, 4.0, 1.0);
    double z1 = default_z_min(p, 5.0, 1e-6);
    CHECK(z1 < p.cutoff_depth);
    CHECK(z1 >= p.cutoff_depth - 64.0 - 1e-9);
    // Tight guard keeps slowly decaying edge modes resolvable only via the cap.
    double z2 = default_z_min(p, 200.0, 1e-6);
    CHECK(z2 == doctest::Approx(p.cutoff_depth - 64.0));
    // A loose guard needs only the decay length of comfortably bound modes.
    double z3 = default_z_min(p, 20.0, 0.25);
    CHECK(z3 == doctest::Approx(p.cutoff_depth - std::log(1e10) / 10.0).epsilon(1e-12));
}

TEST_CASE("discretization preconditions") {
    VerticalProfile p = make_step_profile(1.0, 4.0, 1.0);
    CHECK_THROWS_AS(assemble_operator(p, 5.0, disc_for(-0.5, 128)), AssumptionError);
    CHECK_THROWS_AS(assemble_operator(p, -1.0, disc_for(-8.0, 128)), AssumptionError);
    CHECK_THROWS_AS(assemble_operator(p, 5.0, disc_for(-8.0, 8)), AssumptionError);
}
