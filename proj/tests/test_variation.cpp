#include <plurisym/variation.hpp>

#include <catch2/catch_amalgamated.hpp>

using namespace plurisym;
using Catch::Approx;

namespace {

std::vector<double> eleven_s()
{
    std::vector<double> s;
    for(int i = 0; i <= 10; i++) s.push_back(i / 10.0);
    return s;
}

} // namespace

TEST_CASE("geodesic with equal endpoints is constant", "[variation]")
{
    auto grid = standard_grid();
    auto f = truncated_log_profile(0.7, grid);
    for(double s : {0.0, 0.3, 1.0}) {
        auto g = geodesic(f, f, s);
        double sup = 0;
        for(std::size_t i = 0; i < grid.size(); i++)
            sup = std::max(sup, std::abs(g.values()[i] - f.values()[i]));
        CHECK(sup <= 2e-2 * 0.01 + 1e-9);   // 2 * spacing * max-slope bound
    }
}

TEST_CASE("geodesic stays in the truncated-log family", "[variation]")
{
    auto grid = standard_grid();
    ModelGeometry geom(1, 1.0);
    double a = 0.5, b = 2.0;
    auto f0 = truncated_log_profile(a, grid);
    auto f1 = truncated_log_profile(b, grid);
    for(double s : {0.25, 0.5, 0.75}) {
        auto fs = geodesic(f0, f1, s);
        double depth = (1 - s) * a + s * b;
        double sup = 0;
        for(std::size_t i = 0; i < grid.size(); i++)
            sup = std::max(sup, std::abs(fs.values()[i] - std::max(grid[i], -depth)));
        CHECK(sup <= 0.03);
        CHECK(energy(fs, geom).value == Approx(depth).epsilon(2e-3));
    }
}

TEST_CASE("geodesic energy is affine", "[variation]")
{
    auto grid = standard_grid();
    ModelGeometry geom(1, 1.0);
    auto f0 = exp_profile(grid);
    auto f1 = truncated_log_profile(1.0, grid);
    double e0 = energy(f0, geom).value, e1 = energy(f1, geom).value;
    double scale = std::max({e0, e1, 1.0});
    for(double s : eleven_s()) {
        auto fs = geodesic(f0, f1, s);
        double affine = (1 - s) * e0 + s * e1;
        CHECK(std::abs(energy(fs, geom).value - affine) <= 1e-3 * scale);
    }
}

TEST_CASE("subgeodesic with c = 0 is constant in s", "[variation]")
{
    auto grid = standard_grid();
    ModelGeometry geom(1, 1.0);
    auto f0 = truncated_log_profile(1.0, grid);
    auto f1 = truncated_log_profile(2.0, grid);
    double e = energy_with_boundary(subgeodesic_max(f0, f1, 0.0, 0.0), geom);
    for(double s : {0.2, 0.5, 0.9})
        CHECK(energy_with_boundary(subgeodesic_max(f0, f1, s, 0.0), geom) == Approx(e));
}

TEST_CASE("subgeodesic energy: truncated pair is affine 1 + s/2", "[variation]")
{
    auto grid = standard_grid();
    ModelGeometry geom(1, 1.0);
    auto f0 = truncated_log_profile(1.0, grid);
    auto f1 = truncated_log_profile(2.0, grid);
    std::vector<double> energies;
    for(double s : eleven_s()) {
        auto fs = subgeodesic_max(f0, f1, s, 0.5);
        energies.push_back(energy_with_boundary(fs, geom));
        CHECK(energies.back() == Approx(1.0 + 0.5 * s).margin(1e-9));
    }
    for(std::size_t i = 1; i + 1 < energies.size(); i++) {
        double defect = energies[i] - 0.5 * (energies[i-1] + energies[i+1]);
        CHECK(defect >= -1e-3);
    }
}

TEST_CASE("subgeodesic energy: equal endpoints, symmetric concave", "[variation]")
{
    auto grid = standard_grid();
    ModelGeometry geom(1, 1.0);
    auto f = truncated_log_profile(1.0, grid);
    auto s_grid = eleven_s();
    std::vector<double> energies;
    for(double s : s_grid) {
        auto fs = subgeodesic_max(f, f, s, 1.0);
        energies.push_back(energy_with_boundary(fs, geom));
    }
    // closed form: E(f) + min(s, 1-s) * (f'(0))^{n+1}
    for(std::size_t i = 0; i < s_grid.size(); i++) {
        CHECK(energies[i] == Approx(1.0 + std::min(s_grid[i], 1 - s_grid[i])).margin(1e-9));
        CHECK(energies[i] == Approx(energies[s_grid.size() - 1 - i]).margin(1e-12));
    }
    for(std::size_t i = 1; i + 1 < energies.size(); i++)
        CHECK(energies[i] - 0.5 * (energies[i-1] + energies[i+1]) >= -1e-9);
}

TEST_CASE("subgeodesic joint convexity self-check", "[variation]")
{
    auto grid = standard_grid();
    auto f0 = exp_profile(grid);
    auto f1 = truncated_log_profile(1.5, grid);
    CHECK(subgeodesic_joint_convexity_defect(f0, f1, 0.7, eleven_s()) >= -1e-12);
}

TEST_CASE("inverse_in_t closed forms", "[variation]")
{
    SECTION("a = s + t") {
        BivariateSample a;
        for(int i = 0; i <= 8; i++) a.s_grid.push_back(i / 8.0);
        for(int j = 0; j <= 20; j++) a.t_grid.push_back(-2.0 + 4.0 * j / 20.0);
        for(double s : a.s_grid)
            for(double t : a.t_grid) a.values.push_back(s + t);
        auto inv = inverse_in_t(a);
        for(std::size_t is = 0; is < inv.s_grid.size(); is++)
            for(std::size_t ix = 0; ix < inv.x_grid.size(); ix++)
                CHECK(inv.at(is, ix)
                      == Approx(inv.x_grid[ix] - inv.s_grid[is]).margin(1e-12));
        CHECK(inv.min_convexity_defect >= -1e-12);
    }

    SECTION("a = -s^2 + t") {
        BivariateSample a;
        for(int i = 0; i <= 10; i++) a.s_grid.push_back(-1.0 + 2.0 * i / 10.0);
        for(int j = 0; j <= 20; j++) a.t_grid.push_back(-2.0 + 4.0 * j / 20.0);
        for(double s : a.s_grid)
            for(double t : a.t_grid) a.values.push_back(-s * s + t);
        auto inv = inverse_in_t(a);
        for(std::size_t is = 0; is < inv.s_grid.size(); is++)
            for(std::size_t ix = 0; ix < inv.x_grid.size(); ix++)
                CHECK(inv.at(is, ix)
                      == Approx(inv.x_grid[ix] + sqr(inv.s_grid[is])).margin(1e-12));
        CHECK(inv.min_convexity_defect >= -1e-12);
    }

    SECTION("guards") {
        BivariateSample bad;
        bad.s_grid = {0.0, 0.5, 1.0};
        bad.t_grid = {0.0, 1.0, 2.0};
        bad.values = {0, 1, 2,  0, 1, 2,  2, 1, 0};   // last column decreasing
        CHECK_THROWS_AS(inverse_in_t(bad), Error);

        BivariateSample conv;   // a = s^2 + t is convex in s, not concave
        for(int i = 0; i <= 4; i++) conv.s_grid.push_back(i / 4.0);
        for(int j = 0; j <= 4; j++) conv.t_grid.push_back(j / 4.0);
        for(double s : conv.s_grid)
            for(double t : conv.t_grid) conv.values.push_back(4.0 * s * s + t);
        CHECK_THROWS_AS(inverse_in_t(conv), Error);
    }
}

TEST_CASE("inverse convexity property over random concave samples", "[variation]")
{
    // a(s,t) = min of <= 5 affine functions increasing in t;
    // the exact inverse is the max of affine functions (convex)
    RngStream rng(20260811);
    for(int trial = 0; trial < 100; trial++) {
        int npieces = 2 + static_cast<int>(rng.below(4));
        std::vector<std::array<double,3>> pieces;   // alpha s + beta t + gamma
        for(int p = 0; p < npieces; p++)
            pieces.push_back({rng.uniform(-2.0, 2.0), rng.uniform(0.2, 2.0),
                              rng.uniform(-1.0, 1.0)});
        BivariateSample a;
        for(int i = 0; i <= 8; i++) a.s_grid.push_back(i / 8.0);
        for(int j = 0; j <= 40; j++) a.t_grid.push_back(-3.0 + 6.0 * j / 40.0);
        for(double s : a.s_grid)
            for(double t : a.t_grid) {
                double v = std::numeric_limits<double>::infinity();
                for(const auto& p : pieces) v = std::min(v, p[0]*s + p[1]*t + p[2]);
                a.values.push_back(v);
            }
        auto inv = inverse_in_t(a);
        double sup = 0;
        for(std::size_t is = 0; is < inv.s_grid.size(); is++)
            for(std::size_t ix = 0; ix < inv.x_grid.size(); ix++) {
                double exact = -std::numeric_limits<double>::infinity();
                for(const auto& p : pieces)
                    exact = std::max(exact,
                        (inv.x_grid[ix] - p[0]*inv.s_grid[is] - p[2]) / p[1]);
                sup = std::max(sup, std::abs(inv.at(is, ix) - exact));
            }
        INFO("trial " << trial << " sup interp error " << sup);
        CHECK(inv.min_convexity_defect >= -(1e-6 + 2.0 * sup));
    }
}

TEST_CASE("reference profile", "[variation]")
{
    auto grid = standard_grid();
    for(int n : {1, 2}) {
        ModelGeometry geom(n, 1.0);
        auto ref = reference_profile(geom, grid);
        CHECK(energy(ref, geom).value == Approx(1.0 / (n + 2)).epsilon(1e-4));
        CHECK(ref.is_boundary_normalized());
        CHECK(convexity_report(ref).pass);
    }
}

TEST_CASE("pinned subgeodesic profiles", "[variation]")
{
    // the pin K t restores f_s(0) = 0; for the truncated pair with K = 2 the
    // closed-form energy is 1 + s/2 + 3 min(s, 1-s), concave in s
    auto grid = standard_grid();
    ModelGeometry geom(1, 1.0);
    auto f0 = truncated_log_profile(1.0, grid);
    auto f1 = truncated_log_profile(2.0, grid);
    for(double s : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        auto fs = subgeodesic_pinned(f0, f1, s, 0.5, 2.0);
        CHECK(fs.is_boundary_normalized());
        CHECK(energy(fs, geom).value
              == Approx(1.0 + 0.5 * s + 3.0 * std::min(s, 1.0 - s)).margin(1e-9));
    }
}

TEST_CASE("symmetrized subgeodesic check on a radial pair", "[variation]")
{
    ModelGeometry geom(1, 1.0);
    auto u0 = ToricTestFunction::radial(2, truncated_log_profile(1.0, standard_grid()));
    auto u1 = ToricTestFunction::radial(2, truncated_log_profile(2.0, standard_grid()));
    SamplerConfig mc{200000, 88, 16};
    std::vector<double> s_grid = {0.0, 0.25, 0.5, 0.75, 1.0};
    auto rep = symmetrized_subgeodesic_check(u0, u1, geom, s_grid, 0.5, mc);
    CHECK(rep.pass);
    // closed form with the automatic pin K = 2: E(s) = 1 + s/2 + 3 min(s,1-s)
    for(std::size_t i = 0; i < s_grid.size(); i++)
        CHECK(rep.energies[i]
              == Approx(1.0 + 0.5 * s_grid[i] + 3.0 * std::min(s_grid[i], 1.0 - s_grid[i]))
                     .epsilon(0.03));
}
