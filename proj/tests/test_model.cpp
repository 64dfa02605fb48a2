#include <plurisym/model.hpp>

#include <catch2/catch_amalgamated.hpp>

using namespace plurisym;
using Catch::Approx;

namespace {

/// toric evaluation of the radial truncated logarithm max(log Phi, -a)
struct TruncatedLog {
    double a;
    double operator()(std::span<const double> x) const
    {
        return std::max(log_sum_exp(x), -a);
    }
};

/// midpoint quadrature of the Omega_l density over the ball region in
/// log-polar coordinates (independent check of the normalization, n = 1)
double mass_by_quadrature(const ModelGeometry& geom, double box, int cells)
{
    double h = box / cells, total = 0;
    std::vector<double> x(2);
    for(int i = 0; i < cells; i++)
        for(int j = 0; j < cells; j++) {
            x[0] = -box + (i + 0.5) * h;
            x[1] = -box + (j + 0.5) * h;
            if(std::exp(x[0]) + std::exp(x[1]) >= 1.0) continue;
            total += omega_density(x, geom) * h * h;
        }
    return total;
}

} // namespace

TEST_CASE("omega density closed-form values", "[model]")
{
    ModelGeometry flat(1, 2.0);
    std::vector<double> x = {std::log(0.5), std::log(0.5)};
    // l - n - 1 = 0 kills the singular factor; only the product factor remains
    CHECK(omega_density(x, flat) == Approx(0.25).epsilon(1e-12));

    ModelGeometry sing(1, 1.0);
    std::vector<double> y = {std::log(0.25), std::log(0.25)};
    CHECK(omega_density(y, sing) == Approx(1.0 / 8.0).epsilon(1e-12));

    std::vector<double> bad = {0.0, std::numeric_limits<double>::quiet_NaN()};
    CHECK_THROWS_AS(omega_density(bad, sing), Error);
}

TEST_CASE("omega density integrates to vol/l", "[model]")
{
    for(double l : {0.5, 1.0, 2.0}) {
        ModelGeometry geom(1, l);
        double mass = mass_by_quadrature(geom, 40.0, 3000);
        CHECK(mass == Approx(geom.vol / l).epsilon(2e-3));
    }
}

TEST_CASE("ball volume closed form", "[model]")
{
    CHECK(ball_volume(ModelGeometry(1, 1.0)) == Approx(1.0));
    CHECK(ball_volume(ModelGeometry(2, 2.0)) == Approx(0.5));
    CHECK(ball_volume(ModelGeometry(1, 2.0)) == Approx(0.5));   // l = n+1 boundary case
    CHECK_THROWS_AS(ModelGeometry(1, 0.0), Error);
    CHECK_THROWS_AS(ModelGeometry(1, 3.5), Error);   // beyond n+1
    CHECK_THROWS_AS(ModelGeometry(0, 1.0), Error);
}

TEST_CASE("sublevel volume matches the radial closed form", "[model]")
{
    SamplerConfig mc{200000, 42, 4};

    ModelGeometry geom(1, 1.0);
    auto u = [](std::span<const double> x) { return log_sum_exp(x); };
    auto est = sublevel_volume(u, -1.0, geom, mc);
    CHECK(std::abs(est.value - std::exp(-1.0)) <= 3 * est.stderror);
    CHECK(est.stderror > 0);
    CHECK(est.samples == mc.samples);

    // truncated family: (vol/l) e^{lt} above the truncation, empty below
    TruncatedLog trunc{0.7};
    for(double l : {0.5, 1.0, 2.0}) {
        ModelGeometry g(1, l);
        auto e1 = sublevel_volume(trunc, -0.3, g, mc);
        CHECK(std::abs(e1.value - (1.0 / l) * std::exp(-0.3 * l)) <= 3 * e1.stderror);
        auto e2 = sublevel_volume(trunc, -0.7, g, mc);
        CHECK(e2.value == 0.0);
        CHECK(e2.empty_level);
        CHECK(e2.stderror == 0.0);
    }

    // smooth radial u = e^t - 1: sigma(t) = (vol/l)(1+t)^l
    ModelGeometry g2(2, 1.5);
    auto usm = [](std::span<const double> x) { return std::expm1(log_sum_exp(x)); };
    auto e3 = sublevel_volume(usm, -0.5, g2, mc);
    CHECK(std::abs(e3.value - (1.0 / 1.5) * std::pow(0.5, 1.5)) <= 3 * e3.stderror);

    // the zero function has empty sublevels at every negative level
    auto zero = [](std::span<const double>) { return 0.0; };
    auto e4 = sublevel_volume(zero, -0.25, geom, mc);
    CHECK(e4.value == 0.0);
    CHECK(e4.empty_level);
}

TEST_CASE("sublevel volume is monotone within error bars", "[model]")
{
    ModelGeometry geom(1, 1.0);
    SamplerConfig mc{50000, 7, 1};
    auto u = [](std::span<const double> x) {
        return std::max(x[0] + 0.5 * x[1] - 0.2, log_sum_exp(x));
    };
    double prev = -1;
    double prev_se = 0;
    for(double t : {-2.0, -1.5, -1.0, -0.5, -0.25}) {
        auto e = sublevel_volume(u, t, geom, mc);
        if(prev >= 0)
            CHECK(prev <= e.value + 3 * (prev_se + e.stderror));
        prev = e.value;
        prev_se = e.stderror;
    }
}

TEST_CASE("sublevel volume is deterministic given the seed", "[model]")
{
    ModelGeometry geom(2, 2.0);
    SamplerConfig mc{20000, 99, 3};
    TruncatedLog u{1.0};
    auto a = sublevel_volume(u, -0.4, geom, mc);
    auto b = sublevel_volume(u, -0.4, geom, mc);
    CHECK(a.value == b.value);
    CHECK(a.stderror == b.stderror);

    // different shard counts resample but stay within joint error bars
    SamplerConfig mc1{20000, 99, 1};
    auto c = sublevel_volume(u, -0.4, geom, mc1);
    double truth = 0.5 * std::exp(-0.8);
    CHECK(std::abs(c.value - truth) <= 4 * c.stderror);
    CHECK(std::abs(a.value - truth) <= 4 * a.stderror);
}

TEST_CASE("sublevel volume rejects broken inputs", "[model]")
{
    ModelGeometry geom(1, 1.0);
    SamplerConfig mc{2000, 5, 1};
    auto nan_u = [](std::span<const double>) { return std::numeric_limits<double>::quiet_NaN(); };
    CHECK_THROWS_AS(sublevel_volume(nan_u, -1.0, geom, mc), Error);

    auto u = [](std::span<const double> x) { return log_sum_exp(x); };
    CHECK_THROWS_AS(sublevel_volume(u, 0.5, geom, mc), Error);   // t must be negative
    SamplerConfig bad{100, 5, 1};
    CHECK_THROWS_AS(sublevel_volume(u, -1.0, geom, bad), Error);
}
