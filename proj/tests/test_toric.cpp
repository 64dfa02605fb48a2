#include <plurisym/toric.hpp>

#include <catch2/catch_amalgamated.hpp>

using namespace plurisym;
using Catch::Approx;

TEST_CASE("evaluation of the standard examples", "[toric]")
{
    ModelGeometry geom(1, 1.0);

    SECTION("radial truncation") {
        auto u = ToricTestFunction::radial(2, truncated_log_profile(0.5, standard_grid()));
        double half = std::exp(-1.0) / 2.0;
        std::vector<double> x = {std::log(half), std::log(half)};   // log Phi = -1
        CHECK(u.evaluate(x) == Approx(-0.5).margin(1e-12));
    }

    SECTION("piecewise-linear triple point") {
        auto u = ToricTestFunction::pl(2, {{{1.0, 0.0}, 0.0},
                                           {{0.0, 1.0}, 0.0},
                                           {{0.25, 0.25}, -1.0}});
        std::vector<double> x = {-2.0, -2.0};
        CHECK(u.evaluate(x) == Approx(-2.0).margin(1e-12));
    }

    SECTION("boundary vanishing with an envelope") {
        auto u = ToricTestFunction::pl(2, {{{0.0, 0.0}, -1.0}}, 1.3);
        std::vector<double> x = {std::log(0.5), std::log(0.5)};
        CHECK(std::abs(u.evaluate(x)) <= 1e-9);
    }

    SECTION("out of domain") {
        auto u = ToricTestFunction::pl(2, {{{0.0, 0.0}, -1.0}}, 1.0);
        std::vector<double> x = {0.1, 0.0};
        CHECK_THROWS_AS(u.evaluate(x), Error);
        std::vector<double> bad = {std::numeric_limits<double>::infinity(), 0.0};
        CHECK_THROWS_AS(u.evaluate(bad), Error);
    }
}

TEST_CASE("construction guards", "[toric]")
{
    CHECK_THROWS_AS(ToricTestFunction::pl(2, {{{-0.5, 1.0}, 0.0}}), Error);   // negative slope
    CHECK_THROWS_AS(ToricTestFunction::pl(2, {{{1.0, 1.0, 1.0}, 0.0}}), Error);  // wrong dim
    CHECK_THROWS_AS(ToricTestFunction::pl(2, {}), Error);
    CHECK_THROWS_AS(ToricTestFunction::pl(2, {{{1.0, 0.0}, 0.0}}, -1.0), Error); // bad envelope

    // duplicated pieces are removed at construction
    auto u = ToricTestFunction::pl(2, {{{1.0, 0.5}, -1.0}, {{1.0, 0.5}, -1.0}});
    CHECK(u.pieces().size() == 1);
}

TEST_CASE("psh check accepts convex monotone and rejects concave", "[toric]")
{
    auto good = ToricTestFunction::pl(2, {{{1.0, 0.0}, 0.0}, {{0.2, 0.7}, -1.0}}, 1.0);
    CHECK(psh_check(good, 3000, 11).pass);

    SmoothConvex bad;
    bad.value = [](std::span<const double> x){ return -x[0]*x[0]; };
    auto ubad = ToricTestFunction::smooth(2, bad);
    auto rep = psh_check(ubad, 3000, 11);
    CHECK_FALSE(rep.pass);
    CHECK(rep.worst_convexity_violation > rep.tolerance);

    // smooth radial composition with convex increasing profile passes
    auto smooth = ToricTestFunction::smooth(2, radial_smooth(
        [](double t){ return std::expm1(t); },
        [](double t){ return std::exp(t); },
        [](double t){ return std::exp(t); }));
    CHECK(psh_check(smooth, 3000, 11).pass);
}

TEST_CASE("random corpus determinism and postconditions", "[toric]")
{
    ModelGeometry geom(1, 1.0);

    SECTION("golden item") {
        auto c = random_corpus(1, geom, 2026);
        REQUIRE(c.size() == 1);
        std::string s = toric_to_json(c.front()).dump();
        CHECK(digest(s) == "7ee29c0c2cbf6df3");
        auto c2 = random_corpus(1, geom, 2026);
        CHECK(toric_to_json(c2.front()).dump() == s);
    }

    SECTION("corpus postconditions") {
        auto corpus = random_corpus(20, geom, 905);
        REQUIRE(corpus.size() == 20);
        for(const auto& u : corpus) {
            CHECK(psh_check(u, 1500, 7).pass);
            REQUIRE(u.envelope().has_value());
            CHECK(*u.envelope() >= 0.5);
            CHECK(*u.envelope() <= 2.0);
            CHECK(u.pieces().size() >= 2);
            CHECK(u.pieces().size() <= 8);
            CHECK(u.floor_value() >= -3.0);   // bounded below: no mass at the origin
            // boundary vanishing at a few boundary points
            for(double q : {0.2, 0.5, 0.8}) {
                std::vector<double> x = {std::log(q), std::log1p(-q)};
                CHECK(std::abs(u.evaluate(x)) <= 1e-9);
            }
        }
    }

    SECTION("invalid count") {
        CHECK_THROWS_AS(random_corpus(0, geom, 1), Error);
    }
}

TEST_CASE("max closure of corpus functions", "[toric]")
{
    ModelGeometry geom(1, 1.0);
    auto corpus = random_corpus(2, geom, 33);
    auto m = toric_max(corpus[0], corpus[1]);
    CHECK(psh_check(m, 1500, 3).pass);
    REQUIRE(m.envelope().has_value());
    CHECK(*m.envelope() == Approx(std::min(*corpus[0].envelope(), *corpus[1].envelope())));

    // max is pointwise max
    ModelGeometry dom(1, 1.0);
    BallSampler sampler(dom, 17);
    std::vector<double> x(2);
    for(int i = 0; i < 200; i++) {
        sampler.draw(x);
        CHECK(m.eval_unchecked(x)
              == Approx(std::max(corpus[0].eval_unchecked(x), corpus[1].eval_unchecked(x)))
                     .margin(1e-12));
    }
}

TEST_CASE("function spec JSON round trip", "[toric]")
{
    ModelGeometry geom(1, 1.0);
    auto u = random_corpus(1, geom, 505).front();
    auto j = toric_to_json(u);
    auto v = toric_from_json(j);
    BallSampler sampler(geom, 9);
    std::vector<double> x(2);
    for(int i = 0; i < 100; i++) {
        sampler.draw(x);
        CHECK(v.eval_unchecked(x) == u.eval_unchecked(x));
    }

    auto r = toric_from_json(nlohmann::json::parse(R"({"kind":"radial_truncated_log","a":0.5,"dim":2})"));
    CHECK(r.kind() == ToricTestFunction::Kind::radial);
    CHECK(r.profile()(-3.0) == Approx(-0.5));

    auto e = toric_from_json(nlohmann::json::parse(R"({"kind":"radial_exp","dim":2})"));
    CHECK(e.profile()(-1.0) == Approx(std::expm1(-1.0)));

    CHECK_THROWS_AS(toric_from_json(nlohmann::json::parse(R"({"kind":"nope"})")), Error);
    CHECK_THROWS_AS(toric_from_json(nlohmann::json::parse(R"({"pieces":[]})")), Error);
}
