#include <plurisym/ma_oracle.hpp>
#include <plurisym/symmetrization.hpp>

#include "oracle_quadrature.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace plurisym;
using Catch::Approx;

namespace {

QuadratureConfig fast_cfg()
{
    QuadratureConfig cfg;
    cfg.cells = 400;
    cfg.box = 14.0;
    return cfg;
}

} // namespace

TEST_CASE("quadrature reproduces the radial energy of e^t - 1", "[ma_oracle]")
{
    // E = 1/(n+2): the cross-check that pins the (n+1)! pushforward factor
    ModelGeometry geom(1, 1.0);
    auto u = ToricTestFunction::smooth(2, radial_smooth(
        [](double t){ return std::expm1(t); },
        [](double t){ return std::exp(t); },
        [](double t){ return std::exp(t); }));
    auto q = energy_quadrature(u, geom, fast_cfg());
    CHECK_FALSE(q.negative_determinant);
    CHECK_FALSE(q.truncation_warning);
    CHECK(q.value == Approx(1.0 / 3.0).epsilon(1e-3));
}

TEST_CASE("quadrature reproduces the radial energy in C^3", "[ma_oracle]")
{
    ModelGeometry geom(2, 1.0);
    auto u = ToricTestFunction::smooth(3, radial_smooth(
        [](double t){ return std::expm1(t); },
        [](double t){ return std::exp(t); },
        [](double t){ return std::exp(t); }));
    QuadratureConfig cfg;
    cfg.cells = 120;
    cfg.box = 14.0;
    auto q = energy_quadrature(u, geom, cfg);
    CHECK(q.value == Approx(0.25).epsilon(1e-3));
}

TEST_CASE("mollified truncated log has energy a", "[ma_oracle]")
{
    ModelGeometry geom(1, 1.0);
    double a = 1.0;
    auto u = ToricTestFunction::radial(2, truncated_log_profile(a, standard_grid()));
    auto q = energy_quadrature(u, geom, fast_cfg());
    CHECK(q.value == Approx(a).margin(std::max(5e-3, 3 * q.error_estimate)));
}

TEST_CASE("zero function has zero energy", "[ma_oracle]")
{
    ModelGeometry geom(1, 1.0);
    auto u = ToricTestFunction::smooth(2, radial_smooth(
        [](double){ return 0.0; }, [](double){ return 0.0; }, [](double){ return 0.0; }));
    auto q = energy_quadrature(u, geom, fast_cfg());
    CHECK(q.value == Approx(0.0).margin(1e-12));
}

TEST_CASE("unit Lelong mass normalization", "[ma_oracle]")
{
    // total MA mass of max(log Phi, -a) equals (slope at 0)^{n+1} = 1
    ModelGeometry geom(1, 1.0);
    auto u = ToricTestFunction::radial(2, truncated_log_profile(2.0, standard_grid()));
    auto q = energy_quadrature(u, geom, fast_cfg());
    CHECK(q.total_mass == Approx(1.0).epsilon(2e-2));
}

TEST_CASE("negative determinant is flagged for concave input", "[ma_oracle]")
{
    ModelGeometry geom(1, 1.0);
    auto u = ToricTestFunction::smooth(2, radial_smooth(
        [](double t){ return -t*t/50.0; },
        [](double t){ return -t/25.0; },
        [](double){ return -1.0/25.0; }));
    auto q = energy_quadrature(u, geom, fast_cfg());
    CHECK(q.negative_determinant);
}

TEST_CASE("PL atoms: the quarter-mass triple point", "[ma_oracle]")
{
    ModelGeometry geom(1, 1.0);
    ToricTestFunction::PlPieces pieces = {
        {{1.0, 0.0}, 0.0},
        {{0.0, 1.0}, 0.0},
        {{0.25, 0.25}, -1.0}};
    auto u = ToricTestFunction::pl(2, pieces);
    auto atoms = pl_atoms_2d(u, geom);
    REQUIRE(atoms.size() == 1);
    CHECK(atoms[0].location[0] == Approx(-2.0).margin(1e-12));
    CHECK(atoms[0].location[1] == Approx(-2.0).margin(1e-12));
    CHECK(atoms[0].mass == Approx(0.25).margin(1e-12));
    CHECK(atoms[0].value == Approx(-2.0).margin(1e-12));
}

TEST_CASE("two affine pieces carry no atoms", "[ma_oracle]")
{
    ModelGeometry geom(1, 1.0);
    auto u = ToricTestFunction::pl(2, {{{1.0, 0.0}, 0.0}, {{0.0, 1.0}, 0.0}});
    CHECK(pl_atoms_2d(u, geom).empty());
}

TEST_CASE("pure radial PL via pieces: energy a", "[ma_oracle]")
{
    // floor piece + envelope realizes max(log Phi, -a); E = a exactly
    ModelGeometry geom(1, 1.0);
    double a = 0.8;
    auto u = ToricTestFunction::pl(2, {{{0.0, 0.0}, -a}}, 1.0);
    auto res = energy_pl_2d(u, geom);
    CHECK(res.atoms.empty());
    CHECK(res.total == Approx(a).epsilon(1e-6));
    CHECK(res.total_mass == Approx(1.0).epsilon(1e-6));
}

TEST_CASE("scaled envelope mass", "[ma_oracle]")
{
    // u = max(-a, A log Phi): total mass A^{n+1}, energy a A^{n+1}
    ModelGeometry geom(1, 1.0);
    double a = 1.4, A = 1.5;
    auto u = ToricTestFunction::pl(2, {{{0.0, 0.0}, -a}}, A);
    auto res = energy_pl_2d(u, geom);
    CHECK(res.total_mass == Approx(A * A).epsilon(1e-6));
    CHECK(res.total == Approx(a * A * A).epsilon(1e-6));
}

TEST_CASE("dual oracle agreement on corpus items", "[ma_oracle]")
{
    ModelGeometry geom(1, 1.0);
    auto corpus = random_corpus(4, geom, 777);
    for(const auto& u : corpus) {
        QuadratureConfig cfg;
        cfg.cells = 500;
        auto dual = dual_energy_2d(u, geom, cfg);   // throws INCONSISTENT_ORACLES on gap > 5%
        CHECK(dual.pl.total >= 0.0);
        for(const auto& a : dual.pl.atoms) CHECK(a.mass >= 0.0);

        // mass comparison: atom masses cannot exceed the total MA mass
        double atom_sum = 0;
        for(const auto& at : dual.pl.atoms) atom_sum += at.mass;
        CHECK(2.0 * atom_sum <= dual.pl.total_mass + 1e-9);
        // comparison bound: total mass is at most that of the envelope A log Phi
        double A = *u.envelope();
        CHECK(dual.pl.total_mass <= A * A * (1.0 + 1e-6));
    }
}

TEST_CASE("corpus energies agree with the symmetrization inequality direction", "[ma_oracle]")
{
    // spot-check one item: E(u-hat) <= E(u) with a modest sample budget
    ModelGeometry geom(1, 1.0);
    auto u = random_corpus(1, geom, 4242).front();
    auto exact = energy_pl_2d(u, geom);

    SamplerConfig mc{400000, 31, 8};
    auto pre = distribution(u, geom, geometric_levels(-3.0, 48), mc);
    auto levels = geometric_levels(pre.min_u, 48);
    auto d = distribution(u, geom, levels, mc);
    auto sym = symmetrize(d, geom);
    double e_hat = energy(sym.profile, geom).value;
    CHECK(e_hat <= exact.total * 1.05);
}
