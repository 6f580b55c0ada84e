#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "stratwave/errors.hpp"
#include "stratwave/profiles.hpp"
#include "stratwave/weyl_inverse.hpp"

#include <json.hpp>

#include <cmath>

using namespace stratwave;

namespace {

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> g(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        g[static_cast<size_t>(i)] = a + (b - a) * static_cast<double>(i) / (n - 1);
    }
    return g;
}

constexpr double kPi = 3.141592653589793;

} // namespace

TEST_CASE("sublevel area closed forms for the step") {
    VerticalProfile p = make_step_profile(1.0, 4.0, 1.0);
    CHECK(area_sublevel(p, 3.999999) ==
          doctest::Approx(2.0 * std::sqrt(2.999999)).epsilon(1e-9));
    CHECK(area_sublevel(p, 2.0) == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(area_sublevel(p, 1.0) == 0.0);
    CHECK(area_sublevel(p, 0.5) == 0.0);
    CHECK_THROWS_AS(area_sublevel(p, 4.0), AssumptionError);
    CHECK_THROWS_AS(area_sublevel(p, 5.0), AssumptionError);
}

TEST_CASE("sublevel area of a linear profile hits the arcsine value") {
    // N(Z) = 1 − Z on [−2, 0]: V(2) = ∫_{−1}^0 sqrt(2/(1−Z) − 1) dZ = π/2 − 1.
    VerticalProfile lin = make_sampled_profile({-2.0, 0.0}, {3.0, 1.0});
    CHECK(area_sublevel(lin, 2.0) == doctest::Approx(kPi - 2.0).epsilon(1e-9));
}

TEST_CASE("sublevel area agrees with brute-force quadrature on the smooth preset") {
    VerticalProfile e = make_smooth_profile(4.0, 1.0, 0.5, 1e-2);
    for (double E : {1.5, 2.0, 3.0}) {
        // Brute force: fine trapezoid from the turning point to the surface.
        double zstar = 0.5 * std::log((4.0 - E) / 3.0); // N(Z*) = E
        long n = 400000;
        double h = -zstar / static_cast<double>(n);
        double acc = 0.0;
        for (long i = 0; i <= n; ++i) {
            double Z = zstar + h * static_cast<double>(i);
            double ratio = E / e.evaluate(Z) - 1.0;
            double g = ratio > 0.0 ? std::sqrt(ratio) : 0.0;
            acc += (i == 0 || i == n) ? 0.5 * g : g;
        }
        double brute = 2.0 * acc * h;
        CHECK(area_sublevel(e, E) == doctest::Approx(brute).epsilon(1e-6));
    }
}

TEST_CASE("V estimation recovers a planted slope from rounded counts") {
    double V_true = 1.3;
    CountingData data;
    data.E_grid = {2.0};
    for (int i = 0; i < 19; ++i) {
        double xi = 10.0 + 5.0 * i;
        data.xi_grid.push_back(xi);
        data.counts.push_back({static_cast<int>(std::lround(xi * V_true / kPi))});
    }
    ReconstructionConfig cfg;
    auto est = estimate_V(data, 2.0, cfg);
    CHECK_FALSE(est.low_confidence);
    CHECK(std::abs(est.value - V_true) < kPi / data.xi_grid.back() + 1e-12);

    // Appending smaller-ξ columns below the fit window leaves the estimate
    // unchanged, bit for bit.
    CountingData padded;
    padded.E_grid = data.E_grid;
    padded.xi_grid = {1.0, 2.0, 3.0};
    padded.counts = {{0}, {0}, {1}};
    for (size_t i = 0; i < data.xi_grid.size(); ++i) {
        padded.xi_grid.push_back(data.xi_grid[i]);
        padded.counts.push_back(data.counts[i]);
    }
    auto est2 = estimate_V(padded, 2.0, cfg);
    CHECK(est2.value == est.value);

    // All-zero window → flagged zero.
    CountingData zero = data;
    for (auto& row : zero.counts) row[0] = 0;
    auto est3 = estimate_V(zero, 2.0, cfg);
    CHECK(est3.value == 0.0);
    CHECK(est3.low_confidence);

    // Energy not in the table / tiny window → errors.
    CHECK_THROWS_AS(estimate_V(data, 2.5, cfg), AssumptionError);
    CountingData tiny;
    tiny.E_grid = {2.0};
    tiny.xi_grid = {50.0, 80.0, 100.0};
    tiny.counts = {{3}, {5}, {6}};
    CHECK_THROWS_AS(estimate_V(tiny, 2.0, cfg), AssumptionError);
}

TEST_CASE("V estimation against solver counts for the step") {
    VerticalProfile p = make_step_profile(1.0, 4.0, 1.0);
    Discretization d;
    d.z_min = -2.0;
    d.n_points = 8192;
    std::vector<double> xis;
    for (double xi = 140.0; xi <= 200.0 + 1e-9; xi += 10.0) xis.push_back(xi);
    auto data = counting_grid(p, xis, {2.0, 3.0}, d);
    ReconstructionConfig cfg;
    cfg.fit_fraction = 1.0 / 3.0;
    double v2 = estimate_V(data, 2.0, cfg).value;
    double v3 = estimate_V(data, 3.0, cfg).value;
    CHECK(v2 == doctest::Approx(1.0).epsilon(0.02));            // V(2) = sqrt(2−1)
    CHECK(v3 == doctest::Approx(std::sqrt(2.0)).epsilon(0.02)); // V(3) = sqrt(3−1)
}

TEST_CASE("K-transform closed forms") {
    auto grid = linspace(0.0, 2.0, 101);
    std::vector<double> one(grid.size(), 1.0);
    std::vector<double> ident(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) ident[i] = grid[i];

    auto k_one = K_transform(one, grid, 0.0);
    auto k_id = K_transform(ident, grid, 0.0);
    for (size_t i = 0; i < grid.size(); ++i) {
        double E = grid[i];
        CHECK(k_one[i] == doctest::Approx((2.0 / 3.0) * std::pow(E, 1.5)).epsilon(1e-12));
        CHECK(k_id[i] == doctest::Approx((4.0 / 15.0) * std::pow(E, 2.5)).epsilon(1e-12));
    }

    std::vector<double> zero(grid.size(), 0.0);
    for (double v : K_transform(zero, grid, 0.0)) CHECK(v == 0.0);

    // Linearity and monotonicity.
    std::vector<double> combo(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) combo[i] = 2.0 * one[i] + 3.0 * ident[i];
    auto k_combo = K_transform(combo, grid, 0.0);
    for (size_t i = 0; i < grid.size(); ++i) {
        CHECK(k_combo[i] ==
              doctest::Approx(2.0 * k_one[i] + 3.0 * k_id[i]).epsilon(1e-13));
        CHECK(k_combo[i] >= 0.0);
        if (i > 0) CHECK(k_combo[i] >= k_combo[i - 1]);
    }
}

TEST_CASE("third derivative reproduces polynomials") {
    auto grid = linspace(0.0, 2.0, 101);
    ReconstructionConfig cfg;
    std::vector<double> cubic(grid.size()), quad(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) {
        cubic[i] = grid[i] * grid[i] * grid[i];
        quad[i] = grid[i] * grid[i];
    }
    auto d3c = third_derivative(cubic, grid, cfg);
    auto d3q = third_derivative(quad, grid, cfg);
    for (size_t i = 0; i < grid.size(); ++i) {
        CHECK(d3c[i] == doctest::Approx(6.0).epsilon(1e-8));
        CHECK(std::abs(d3q[i]) < 1e-8);
    }

    std::vector<double> tiny(5, 1.0);
    auto small_grid = linspace(0.0, 1.0, 5);
    CHECK_THROWS_AS(third_derivative(tiny, small_grid, cfg), NumericalError);

    ReconstructionConfig bad = cfg;
    bad.window = 8;
    CHECK_THROWS_AS(third_derivative(cubic, grid, bad), AssumptionError);
    bad.window = 5;
    bad.degree = 4;
    CHECK_THROWS_AS(third_derivative(cubic, grid, bad), AssumptionError);
}

TEST_CASE("composed transform pins the inversion constant") {
    // (d³/dE³)(K(K f)) = (π/4)·f for f ≡ 1: the double transform is π E³/24.
    auto grid = linspace(0.0, 2.0, 1001);
    std::vector<double> one(grid.size(), 1.0);
    auto kk = K_transform(K_transform(one, grid, 0.0), grid, 0.0);

    // Midway check of the closed form π E³/24.
    size_t mid = 500;
    CHECK(kk[mid] ==
          doctest::Approx(kPi * std::pow(grid[mid], 3.0) / 24.0).epsilon(2e-4));

    ReconstructionConfig cfg;
    auto d3 = third_derivative(kk, grid, cfg);
    for (size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] < 0.2 || grid[i] > 1.8) continue;
        CHECK(d3[i] == doctest::Approx(kPi / 4.0).epsilon(1e-3));
    }
    // And the configured constant undoes it: (4/π)·(π/4) = 1 = f.
    CHECK(cfg.inversion_constant * kPi / 4.0 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("planted ground truth round-trips through the pipeline") {
    auto grid = linspace(1.2, 3.5, 201);
    std::vector<double> f_true(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) f_true[i] = 0.2 / std::sqrt(grid[i]);

    ReconstructionConfig cfg;
    cfg.E_grid = grid;
    cfg.surface_value = grid.front(); // anchor degenerates: exact identity setup
    auto V = K_transform(f_true, grid, cfg.surface_value);
    auto res = recover_profile(V, cfg);

    for (size_t i = 8; i + 8 < grid.size(); ++i) {
        CHECK(res.f_hat[i] == doctest::Approx(f_true[i]).epsilon(0.01));
    }
    // Depth map starts at the surface and descends.
    CHECK(res.z_of_E.front() <= 0.0);
    for (size_t i = 0; i + 1 < res.z_of_E.size(); ++i) {
        CHECK(res.z_of_E[i + 1] <= res.z_of_E[i] + 1e-14);
    }
    REQUIRE(res.depth_grid.size() == grid.size());
    for (size_t i = 0; i + 1 < res.depth_grid.size(); ++i) {
        CHECK(res.depth_grid[i] < res.depth_grid[i + 1]);
        CHECK(res.N_reconstructed[i] >= res.N_reconstructed[i + 1] - 1e-12);
    }
}

TEST_CASE("exact sublevel areas rebuild the smooth preset profile") {
    VerticalProfile e = make_smooth_profile(4.0, 1.0, 0.5, 1e-2);
    auto grid = linspace(1.2, 3.5, 201);
    std::vector<double> V(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) V[i] = 0.5 * area_sublevel(e, grid[i]);

    ReconstructionConfig cfg;
    cfg.E_grid = grid;
    cfg.surface_value = 1.0; // N at the surface
    auto res = recover_profile(V, cfg);
    auto err = reconstruction_error(e, res);
    CHECK(err.valid);
    CHECK(err.rel_l2 <= 0.05);
    CHECK(err.z_lo < err.z_hi);

    // The resolved window reaches roughly a depth of one (E=3.5 turning point).
    CHECK(res.depth_grid.front() < -0.7);
    CHECK(res.depth_grid.back() > -0.1);
}

TEST_CASE("zero V yields a flagged empty reconstruction") {
    auto grid = linspace(1.2, 3.5, 41);
    ReconstructionConfig cfg;
    cfg.E_grid = grid;
    cfg.surface_value = 1.0;
    auto res = recover_profile(std::vector<double>(grid.size(), 0.0), cfg);
    bool flagged = false;
    for (const auto& f : res.flags) flagged = flagged || f == "empty-reconstruction";
    CHECK(flagged);
    CHECK(res.depth_grid.empty());
    for (double z : res.z_of_E) CHECK(std::abs(z) < 1e-12);
    VerticalProfile e = make_smooth_profile(4.0, 1.0, 0.5, 1e-2);
    CHECK_THROWS_AS(reconstruction_error(e, res), AssumptionError);
}

TEST_CASE("wild oscillations abort the reconstruction") {
    auto grid = linspace(1.2, 3.5, 201);
    std::vector<double> f_osc(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) {
        f_osc[i] = 0.3 * std::sin(3.0 * kPi * (grid[i] - 1.2) / 2.3) / std::sqrt(grid[i]);
    }
    ReconstructionConfig cfg;
    cfg.E_grid = grid;
    cfg.surface_value = grid.front();
    auto V = K_transform(f_osc, grid, cfg.surface_value);
    CHECK_THROWS_AS(recover_profile(V, cfg), NumericalError);
}

TEST_CASE("reconstruction error metrics") {
    VerticalProfile p = make_step_profile(1.0, 4.0, 1.0);
    ReconstructionResult res;
    res.depth_grid = linspace(-2.0, -0.05, 60);
    res.N_reconstructed.resize(res.depth_grid.size());
    for (size_t i = 0; i < res.depth_grid.size(); ++i) {
        res.N_reconstructed[i] = p.evaluate(res.depth_grid[i]);
    }
    auto exact = reconstruction_error(p, res);
    CHECK(exact.rel_l2 == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(exact.rel_sup == doctest::Approx(0.0).epsilon(1e-14));

    for (auto& v : res.N_reconstructed) v *= 1.05;
    auto scaled = reconstruction_error(p, res);
    CHECK(scaled.rel_l2 == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(scaled.rel_sup == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("reconstruction report serialization") {
    auto grid = linspace(1.2, 3.5, 41);
    std::vector<double> f_true(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) f_true[i] = 0.2 / std::sqrt(grid[i]);
    ReconstructionConfig cfg;
    cfg.E_grid = grid;
    cfg.surface_value = grid.front();
    auto res = recover_profile(K_transform(f_true, grid, cfg.surface_value), cfg);

    auto j = nlohmann::json::parse(reconstruction_to_json(res));
    CHECK(j["E_grid"].size() == grid.size());
    CHECK(j["V_hat"].size() == grid.size());
    CHECK(j["f_hat"].size() == grid.size());
    CHECK(j["z_of_E"].size() == grid.size());
    CHECK(j["depth_grid"].size() == res.depth_grid.size());
    CHECK(j["N_reconstructed"].size() == res.N_reconstructed.size());
    CHECK(j["errors"]["valid"] == false);
    CHECK(j["metadata"]["weyl_power_used"] == 1.0);
    CHECK(j["metadata"]["weyl_power_alternative"] == 0.5);
    CHECK(j["metadata"]["inversion_constant_alternative"] == 2.0);
    CHECK(std::abs(j["metadata"]["inversion_constant_used"].get<double>() - 4.0 / kPi) <
          1e-15);
    CHECK(j["flags"].is_array());
}
