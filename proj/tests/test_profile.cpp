#include <plurisym/profile.hpp>

#include "oracle_quadrature.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace plurisym;
using Catch::Approx;

TEST_CASE("energy of reference profiles", "[profile]")
{
    auto grid = standard_grid();
    ModelGeometry g1(1, 1.0);

    CHECK(energy(truncated_log_profile(0.5, grid), g1).value == Approx(0.5).epsilon(1e-12));
    CHECK(energy(zero_profile(grid), g1).value == 0.0);

    // f = e^t - 1: exact antiderivative gives 1/(n+2)
    CHECK(energy(exp_profile(grid), g1).value == Approx(1.0 / 3.0).epsilon(1e-4));
    ModelGeometry g2(2, 1.0);
    CHECK(energy(exp_profile(grid), g2).value == Approx(0.25).epsilon(1e-4));
}

TEST_CASE("energy scaling law", "[profile]")
{
    auto grid = standard_grid();
    ModelGeometry geom(1, 1.0);
    auto p = exp_profile(grid);
    double e = energy(p, geom).value;
    for(double c : {0.5, 2.0})
        CHECK(energy(p.scaled(c), geom).value == Approx(std::pow(c, 3) * e).epsilon(1e-12));
}

TEST_CASE("integration-by-parts cross-check for smooth profiles", "[profile]")
{
    auto grid = standard_grid();
    ModelGeometry geom(1, 1.0);

    auto br = energy(exp_profile(grid), geom);
    CHECK(std::abs(br.value - br.ibp_value) <= 1e-3 * std::max(br.value, 1.0));

    // smooth profile with a genuinely flat tail (softened truncation)
    double a = 1.0, eps = 0.5;
    auto soft = RadialProfile::sample([&](double t) {
        return eps * std::log(std::exp(t / eps) + std::exp(-a / eps));
    }, grid);
    auto soft0 = soft.shifted(-soft.boundary_value());   // re-normalize f(0)=0
    auto br2 = energy(soft0, geom);
    CHECK(std::abs(br2.value - br2.ibp_value) <= 1e-3 * std::max(br2.value, 1.0));
}

TEST_CASE("divergent energy is detected", "[profile]")
{
    auto grid = standard_grid();
    ModelGeometry geom(1, 1.0);
    auto linear = RadialProfile::sample([](double t){ return t; }, grid);
    CHECK_THROWS_AS(energy(linear, geom), Error);
}

TEST_CASE("boundary-corrected energy", "[profile]")
{
    auto grid = standard_grid();
    ModelGeometry geom(1, 1.0);
    auto p = truncated_log_profile(1.0, grid);
    CHECK(energy_with_boundary(p, geom) == Approx(energy(p, geom).value).epsilon(1e-12));
    // vertical shift adds -f(0) * (f'(0))^{n+1}
    CHECK(energy_with_boundary(p.shifted(-0.3), geom) == Approx(1.3).epsilon(1e-12));
}

TEST_CASE("fiber integral closed forms", "[profile]")
{
    auto grid = standard_grid();
    ModelGeometry geom(1, 1.0);

    for(double a : {0.5, 1.0, 2.0}) {
        auto p = truncated_log_profile(a, grid);
        CHECK(fiber_integral(p, [](double y){ return std::exp(-y); }, geom)
              == Approx(1.0 + a).epsilon(1e-9));
    }

    // F == 1 reproduces the ball volume for any admissible profile
    for(double l : {0.5, 1.0, 2.0}) {
        ModelGeometry g(1, l);
        CHECK(fiber_integral(exp_profile(grid), [](double){ return 1.0; }, g)
              == Approx(ball_volume(g)).epsilon(1e-9));
        CHECK(fiber_integral(truncated_log_profile(1.0, grid), [](double){ return 1.0; }, g)
              == Approx(ball_volume(g)).epsilon(1e-9));
    }

    CHECK(fiber_integral(zero_profile(grid), [](double y){ return y; }, geom) == Approx(0.0).margin(1e-15));

    CHECK_THROWS_AS(fiber_integral(truncated_log_profile(1.0, grid),
                                   [](double y){ return std::exp(1000.0 * y * y); }, geom),
                    Error);
}

TEST_CASE("Moser functional", "[profile]")
{
    auto grid = standard_grid();
    ModelGeometry geom(1, 1.0);

    // w == 0: integrand reduces to e^{kt}
    CHECK(moser_functional(zero_profile(grid), 1.0, geom).value == Approx(1.0).epsilon(1e-9));
    CHECK(moser_functional(zero_profile(grid), 2.0, geom).value == Approx(0.5).epsilon(1e-9));

    // w = max(t,-1): tail contributes exactly 1, the rest by quadrature oracle
    auto w = truncated_log_profile(1.0, grid);
    double middle = oracle::adaptive_simpson(
        [](double t){ return std::exp(std::pow(-t, 1.5) + t); }, -1.0, 0.0);
    auto mv = moser_functional(w, 1.0, geom);
    CHECK(mv.value == Approx(1.0 + middle).epsilon(1e-6));
    CHECK_FALSE(mv.dirichlet_warning);

    CHECK(dirichlet_norm(w, 1) == Approx(1.0).epsilon(1e-12));
    CHECK(moser_functional(truncated_log_profile(2.0, grid), 1.0, geom).dirichlet_warning);
}

TEST_CASE("Legendre transform closed forms", "[profile]")
{
    auto grid = standard_grid();

    SECTION("truncated log: f*(q) = a(1-q)") {
        double a = 0.8;
        auto c = legendre(truncated_log_profile(a, grid));
        for(std::size_t j = 0; j < c.q_grid.size(); j += 100)
            CHECK(c.values[j] == Approx(a * (1.0 - c.q_grid[j])).margin(1e-10));
        CHECK(c.q_grid.back() == Approx(1.0));
    }

    SECTION("zero profile collapses to the origin") {
        auto c = legendre(zero_profile(grid));
        REQUIRE(c.q_grid.size() == 1);
        CHECK(c.q_grid[0] == 0.0);
        CHECK(c.values[0] == 0.0);
    }

    SECTION("exponential: f*(q) = q log q - q + 1") {
        auto c = legendre(exp_profile(grid));
        for(double q : {0.25, 0.5, 0.75, 1.0}) {
            double val = pl_eval(c.q_grid, c.values, q);
            double expect = q > 0 ? q * std::log(q) - q + 1.0 : 1.0;
            CHECK(val == Approx(expect).margin(2e-3));
        }
    }

    SECTION("non-convex input is rejected") {
        std::vector<double> g3 = {-2.0, -1.0, 0.0};
        // convex violation: slopes decrease
        CHECK_THROWS_AS(legendre(RadialProfile(g3, {-3.0, -1.0, 0.0})), Error);
    }
}

TEST_CASE("biconjugacy returns the profile", "[profile]")
{
    auto grid = standard_grid();
    for(const RadialProfile& p : {truncated_log_profile(0.7, grid), exp_profile(grid)}) {
        auto back = biconjugate(legendre(p), grid);
        double spacing = grid[1] - grid[0];
        double tol = 2.0 * spacing * p.max_slope();
        double sup = 0;
        for(std::size_t i = 0; i < grid.size(); i++)
            sup = std::max(sup, std::abs(back(grid[i]) - p.values()[i]));
        CHECK(sup <= tol);
    }
}

TEST_CASE("convexity report", "[profile]")
{
    auto grid = standard_grid();
    auto rep = convexity_report(truncated_log_profile(0.5, grid));
    CHECK(rep.pass);
    CHECK(rep.min_second_difference >= 0.0);

    // concave increasing profile f(t) = -t^2/4 fails with a negative certificate
    std::vector<double> g = {-2.0, -1.5, -1.0, -0.5, 0.0};
    std::vector<double> v2;
    for(double t : g) v2.push_back(-(t * t) / 4.0);
    auto concave = RadialProfile(g, v2);
    auto rep2 = convexity_report(concave);
    CHECK_FALSE(rep2.pass);
    CHECK(rep2.min_second_difference < 0);
}

TEST_CASE("profile CSV round trip", "[profile]")
{
    auto grid = standard_grid(-10.0, 101);
    auto p = truncated_log_profile(2.0, grid);
    auto q = profile_from_csv(profile_to_csv(p));
    REQUIRE(q.size() == p.size());
    for(std::size_t i = 0; i < p.size(); i++) {
        CHECK(q.grid()[i] == p.grid()[i]);
        CHECK(q.values()[i] == p.values()[i]);
    }
    REQUIRE(q.has_flat_tail());
    CHECK(*q.left_value() == *p.left_value());

    CHECK_THROWS_AS(profile_from_csv("t,f\nnot-a-number"), Error);
    CHECK_THROWS_AS(profile_from_csv(""), Error);
}
