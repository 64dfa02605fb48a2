#pragma once
/** \file variation.hpp
    \brief Geodesics and subgeodesics of radial profiles, energy
           affineness/concavity checks, and the bivariate inverse-convexity
           utility behind the subgeodesic symmetrization argument.

    Geodesics are realized by Legendre interpolation: f_s = ((1-s) f_0* +
    s f_1*)*.  Substituting q = f'(t) in the energy gives
    E(f) = int q^{n+2} (f*)''(q) dq, which is linear in f*, so the energy is
    exactly affine along these families - the defining property of geodesics
    here.  Subgeodesics are the max-construction
    f_s = max(f_0 - c s, f_1 - c (1-s)), jointly convex in (s,t); their
    boundary value moves with s, so energies along them use the
    boundary-corrected form int (-f) d((f')^{n+1}).
*/
#include "common.hpp"
#include "model.hpp"
#include "profile.hpp"
#include "symmetrization.hpp"
#include "toric.hpp"

namespace plurisym {

namespace detail {

/// conjugate sampled on a caller-supplied slope grid (two-pointer sweep)
inline std::vector<double> conjugate_on_grid(const RadialProfile& p,
                                             const std::vector<double>& q_grid)
{
    const auto& g = p.grid();
    const auto& f = p.values();
    std::vector<double> out(q_grid.size());
    std::size_t arg = 0;
    for(std::size_t j = 0; j < q_grid.size(); j++) {
        double q = q_grid[j];
        while(arg + 1 < g.size() &&
              q * g[arg+1] - f[arg+1] >= q * g[arg] - f[arg])
            arg++;
        out[j] = q * g[arg] - f[arg];
    }
    return out;
}

} // namespace detail

/** Legendre-interpolated geodesic between boundary-normalized convex
    profiles.  The common slope grid covers both conjugate domains, so
    f_s(0) = 0 is preserved automatically. */
inline RadialProfile geodesic(const RadialProfile& f0, const RadialProfile& f1, double s)
{
    require(s >= 0.0 && s <= 1.0, "CONFIG_ERROR", "geodesic parameter must lie in [0,1]");
    require(convexity_report(f0).pass && convexity_report(f1).pass,
            "NONCONVEX_INPUT", "geodesic endpoints must be convex");
    require(f0.is_boundary_normalized() && f1.is_boundary_normalized(),
            "CONFIG_ERROR", "geodesic endpoints must vanish at t = 0");
    require(f0.grid() == f1.grid(), "CONFIG_ERROR", "geodesic endpoints must share a grid");

    double qmax = std::max(f0.max_slope(), f1.max_slope());
    if(qmax <= 0) return zero_profile(f0.grid());
    const int qn = static_cast<int>(f0.size());
    std::vector<double> q_grid(static_cast<std::size_t>(qn));
    for(int j = 0; j < qn; j++)
        q_grid[static_cast<std::size_t>(j)] = qmax * static_cast<double>(j) / (qn - 1);

    auto c0 = detail::conjugate_on_grid(f0, q_grid);
    auto c1 = detail::conjugate_on_grid(f1, q_grid);
    ConjugateProfile mix;
    mix.q_grid = std::move(q_grid);
    mix.values.resize(c0.size());
    for(std::size_t j = 0; j < c0.size(); j++)
        mix.values[j] = (1.0 - s) * c0[j] + s * c1[j];
    return biconjugate(mix, f0.grid());
}

inline ProfileFamily geodesic_family(const RadialProfile& f0, const RadialProfile& f1,
                                     const std::vector<double>& s_grid)
{
    ProfileFamily fam;
    fam.s_grid = s_grid;
    for(double s : s_grid) fam.profiles.push_back(geodesic(f0, f1, s));
    return fam;
}

/** Max-construction subgeodesic f_s = max(f_0 - c s, f_1 - c (1-s)); the
    complexified family is plurisubharmonic, and (s,t) -> f_s(t) is jointly
    convex (verified structurally: max of functions affine in s). */
inline RadialProfile subgeodesic_max(const RadialProfile& f0, const RadialProfile& f1,
                                     double s, double c)
{
    require(s >= 0.0 && s <= 1.0, "CONFIG_ERROR", "curve parameter must lie in [0,1]");
    require(c >= 0.0, "CONFIG_ERROR", "subgeodesic shift must be non-negative");
    require(convexity_report(f0).pass && convexity_report(f1).pass,
            "NONCONVEX_INPUT", "subgeodesic endpoints must be convex");
    return profile_max(f0.shifted(-c * s), f1.shifted(-c * (1.0 - s)));
}

/** Boundary-pinned subgeodesic max(f_0 - c s, f_1 - c (1-s), K t).  The pin
    K t (any K above both maximal slopes) restores the standing hypothesis
    that the family vanishes on the boundary for every s, which is what the
    energy-concavity statement actually requires; the unpinned family's
    boundary value moves with s and its energy need not be concave. */
inline RadialProfile subgeodesic_pinned(const RadialProfile& f0, const RadialProfile& f1,
                                        double s, double c, double K = 0)
{
    if(K <= 0) K = 2.0 * std::max({1.0, f0.max_slope(), f1.max_slope()});
    auto pin = RadialProfile::sample([K](double t){ return K * t; }, f0.grid());
    return profile_max(subgeodesic_max(f0, f1, s, c), pin);
}

/// joint midpoint-convexity defect of (s,t) -> f_s(t) over a sample grid
/// (a self-check of the subgeodesic construction; should be >= 0)
inline double subgeodesic_joint_convexity_defect(const RadialProfile& f0, const RadialProfile& f1,
                                                 double c, const std::vector<double>& s_grid)
{
    double worst = 0;
    const auto& grid = f0.grid();
    std::size_t step = std::max<std::size_t>(1, grid.size() / 64);
    for(std::size_t a = 0; a + 2 < s_grid.size(); a += 1) {
        double s0 = s_grid[a], s2 = s_grid[a+2], s1 = 0.5 * (s0 + s2);
        auto p0 = subgeodesic_max(f0, f1, s0, c);
        auto p1 = subgeodesic_max(f0, f1, s1, c);
        auto p2 = subgeodesic_max(f0, f1, s2, c);
        for(std::size_t i = 0; i + 2 * step < grid.size(); i += step) {
            // midpoint in (s,t) along the diagonal and along s
            double mid_s = p1(0.5 * (grid[i] + grid[i + 2*step]));
            double lhs = 0.5 * (p0(grid[i]) + p2(grid[i + 2*step]));
            worst = std::min(worst, lhs - mid_s);
            double lhs_s = 0.5 * (p0(grid[i]) + p2(grid[i]));
            worst = std::min(worst, lhs_s - p1(grid[i]));
        }
    }
    return worst;
}

// ---------- bivariate inverse convexity ----------

/// sampled bivariate function a(s,t)
struct BivariateSample {
    std::vector<double> s_grid;
    std::vector<double> t_grid;
    std::vector<double> values;   ///< row-major: values[is * t_grid.size() + it]
    bool monotone_in_t = true;

    double at(std::size_t is, std::size_t it) const
    {
        return values[is * t_grid.size() + it];
    }
};

struct InverseInTResult {
    std::vector<double> s_grid;
    std::vector<double> x_grid;
    std::vector<double> values;   ///< k(s,x), row-major over (s, x)
    double min_convexity_defect = 0;   ///< min midpoint defect over axis/diagonal triples

    double at(std::size_t is, std::size_t ix) const
    {
        return values[is * x_grid.size() + ix];
    }
};

/** Inverse of a concave bivariate sample with respect to t: k(s,x) solves
    a(s, k(s,x)) = x.  Output is sampled on a shared x-grid inside the
    common range of all columns, with a midpoint-convexity report (the
    inverse of a concave, t-increasing function is jointly convex). */
inline InverseInTResult inverse_in_t(const BivariateSample& a, int x_points = 0)
{
    const std::size_t ns = a.s_grid.size(), nt = a.t_grid.size();
    require(ns >= 3 && nt >= 3, "CONFIG_ERROR", "need at least a 3x3 sample");
    require(a.values.size() == ns * nt, "CONFIG_ERROR", "sample size mismatch");

    for(std::size_t is = 0; is < ns; is++)
        for(std::size_t it = 1; it < nt; it++)
            if(!(a.at(is, it) > a.at(is, it-1)))
                throw Error("NONMONOTONE_IN_T", "column is not strictly increasing in t");

    // midpoint concavity of the input on the grid
    double scale = 0;
    for(double v : a.values) scale = std::max(scale, std::abs(v));
    for(std::size_t is = 1; is + 1 < ns; is++)
        for(std::size_t it = 1; it + 1 < nt; it++) {
            double d1 = a.at(is, it) - 0.5 * (a.at(is-1, it) + a.at(is+1, it));
            double d2 = a.at(is, it) - 0.5 * (a.at(is, it-1) + a.at(is, it+1));
            double d3 = a.at(is, it) - 0.5 * (a.at(is-1, it-1) + a.at(is+1, it+1));
            double d4 = a.at(is, it) - 0.5 * (a.at(is-1, it+1) + a.at(is+1, it-1));
            require(std::min({d1, d2, d3, d4}) >= -1e-9 * std::max(1.0, scale),
                    "CONFIG_ERROR", "input sample is not midpoint-concave");
        }

    // common x-range over all columns
    double x_lo = -std::numeric_limits<double>::infinity();
    double x_hi = std::numeric_limits<double>::infinity();
    for(std::size_t is = 0; is < ns; is++) {
        x_lo = std::max(x_lo, a.at(is, 0));
        x_hi = std::min(x_hi, a.at(is, nt-1));
    }
    require(x_lo < x_hi, "CONFIG_ERROR", "columns have no common x-range");

    InverseInTResult out;
    out.s_grid = a.s_grid;
    if(x_points <= 1) x_points = static_cast<int>(nt);
    out.x_grid.resize(static_cast<std::size_t>(x_points));
    for(int j = 0; j < x_points; j++) {
        double w = (j + 0.5) / x_points;   // stay strictly inside the range
        out.x_grid[static_cast<std::size_t>(j)] = x_lo + w * (x_hi - x_lo);
    }

    out.values.resize(ns * out.x_grid.size());
    std::vector<double> col(nt);
    for(std::size_t is = 0; is < ns; is++) {
        for(std::size_t it = 0; it < nt; it++) col[it] = a.at(is, it);
        for(std::size_t j = 0; j < out.x_grid.size(); j++)
            out.values[is * out.x_grid.size() + j] = pl_eval(col, a.t_grid, out.x_grid[j]);
    }

    out.min_convexity_defect = std::numeric_limits<double>::infinity();
    const std::size_t nx = out.x_grid.size();
    for(std::size_t is = 1; is + 1 < ns; is++)
        for(std::size_t ix = 1; ix + 1 < nx; ix++) {
            double d1 = 0.5 * (out.at(is-1, ix) + out.at(is+1, ix)) - out.at(is, ix);
            double d2 = 0.5 * (out.at(is, ix-1) + out.at(is, ix+1)) - out.at(is, ix);
            double d3 = 0.5 * (out.at(is-1, ix-1) + out.at(is+1, ix+1)) - out.at(is, ix);
            double d4 = 0.5 * (out.at(is-1, ix+1) + out.at(is+1, ix-1)) - out.at(is, ix);
            out.min_convexity_defect = std::min({out.min_convexity_defect, d1, d2, d3, d4});
        }
    return out;
}

/// reference profile of the symmetrization-inequality argument: f = e^t - 1,
/// solving the model MA equation with energy 1/(n+2)
inline RadialProfile reference_profile(const ModelGeometry& geom,
                                       const std::vector<double>& grid = standard_grid())
{
    geom.validate();
    return exp_profile(grid);
}

// ---------- subgeodesic symmetrization numerics ----------

struct SubgeodesicSymmetrizationReport {
    std::vector<double> s_grid;
    std::vector<double> energies;       ///< E(u-hat_s), boundary-corrected
    double min_logA_defect = 0;         ///< joint midpoint concavity of log A(s,t)
    double min_logA_z = 0;              ///< same, in propagated-stderr units
    double min_energy_defect = 0;       ///< midpoint concavity of s -> E(u-hat_s)
    double min_energy_z = 0;
    bool pass = false;
};

/** Samples one shared cloud, forms A(s,t) = |{u_s < t}| for the
    boundary-pinned subgeodesic u_s = max(u0 - c s, u1 - c (1-s), K log Phi),
    checks joint midpoint concavity of log A (axis and diagonal triples,
    batch-mean error bars), symmetrizes every slice and checks concavity of
    the slice energies along s.  The pin (K above both envelope slopes)
    keeps every slice vanishing on the boundary, the setting in which the
    energy concavity is actually asserted. */
inline SubgeodesicSymmetrizationReport symmetrized_subgeodesic_check(
    const ToricTestFunction& u0, const ToricTestFunction& u1,
    const ModelGeometry& geom, const std::vector<double>& s_grid,
    double c, const SamplerConfig& mc, int level_count = 16, double K = 0)
{
    geom.validate();
    mc.validate();
    require(u0.dim() == geom.ambient_dim() && u1.dim() == geom.ambient_dim(),
            "CONFIG_ERROR", "dimension mismatch");
    require(s_grid.size() >= 3, "CONFIG_ERROR", "need at least 3 curve samples");
    const std::size_t ns = s_grid.size();
    const std::size_t nb = static_cast<std::size_t>(mc.shards);
    if(K <= 0) {
        K = 1.0;
        if(u0.envelope()) K = std::max(K, *u0.envelope());
        if(u1.envelope()) K = std::max(K, *u1.envelope());
        K += 1.0;
    }
    auto slice_value = [&](double v0, double v1, double lse, double s) {
        return std::max({v0 - c * s, v1 - c * (1.0 - s), K * lse});
    };

    // pass 1: essential infimum of the whole family (cheap pre-pass)
    double family_min = 0;
    {
        BallSampler sampler(geom, mix_seed(mc.seed, 0xfeedULL));
        std::vector<double> x(static_cast<std::size_t>(geom.ambient_dim()));
        for(int i = 0; i < 20000; i++) {
            double lse = sampler.draw(x);
            double v0 = u0.eval_unchecked(x), v1 = u1.eval_unchecked(x);
            for(std::size_t a = 0; a < ns; a++)
                family_min = std::min(family_min, slice_value(v0, v1, lse, s_grid[a]));
        }
    }
    require(family_min < 0, "CONFIG_ERROR", "family is not negative anywhere");

    // uniform levels support the midpoint algebra on the (s,t) grid
    const std::size_t nt = static_cast<std::size_t>(level_count);
    std::vector<double> levels(nt);
    double lo = family_min * (1.0 - 1e-3);
    double hi = 1e-3 * family_min;
    for(std::size_t j = 0; j < nt; j++)
        levels[j] = lo + (hi - lo) * static_cast<double>(j) / (nt - 1);

    // pass 2: shared cloud, counts per (s, level, shard)
    std::vector<std::vector<std::vector<std::int64_t>>> hits(
        ns, std::vector<std::vector<std::int64_t>>(nt, std::vector<std::int64_t>(nb, 0)));
    std::vector<double> slice_min(ns, 0.0);
    std::vector<std::int64_t> shard_sizes(nb);
    std::int64_t total = 0;
    {
        std::vector<double> x(static_cast<std::size_t>(geom.ambient_dim()));
        for(std::size_t b = 0; b < nb; b++) {
            std::int64_t count = mc.samples / mc.shards
                               + (static_cast<std::int64_t>(b) < mc.samples % mc.shards ? 1 : 0);
            shard_sizes[b] = count;
            BallSampler sampler(geom, mix_seed(mc.seed, b));
            for(std::int64_t i = 0; i < count; i++) {
                double lse = sampler.draw(x);
                double v0 = u0.eval_unchecked(x), v1 = u1.eval_unchecked(x);
                for(std::size_t a = 0; a < ns; a++) {
                    double v = slice_value(v0, v1, lse, s_grid[a]);
                    slice_min[a] = std::min(slice_min[a], v);
                    auto it = std::upper_bound(levels.begin(), levels.end(), v);
                    std::size_t idx = static_cast<std::size_t>(it - levels.begin());
                    if(idx < nt) hits[a][idx][b]++;
                }
            }
            total += count;
        }
        for(std::size_t a = 0; a < ns; a++)
            for(std::size_t j = 1; j < nt; j++)
                for(std::size_t b = 0; b < nb; b++)
                    hits[a][j][b] += hits[a][j-1][b];
    }
    const double mass = ball_volume(geom);

    auto A_of = [&](std::size_t a, std::size_t j) {
        std::int64_t hsum = 0;
        for(std::size_t b = 0; b < nb; b++) hsum += hits[a][j][b];
        return mass * static_cast<double>(hsum) / static_cast<double>(total);
    };
    // batch-mean covariance of (A(P), A(Q)) from the per-shard estimates
    auto cov_of = [&](std::size_t a1, std::size_t j1, std::size_t a2, std::size_t j2) {
        double m1 = 0, m2 = 0;
        std::vector<double> x1(nb), x2(nb);
        for(std::size_t b = 0; b < nb; b++) {
            x1[b] = mass * static_cast<double>(hits[a1][j1][b]) / static_cast<double>(shard_sizes[b]);
            x2[b] = mass * static_cast<double>(hits[a2][j2][b]) / static_cast<double>(shard_sizes[b]);
            m1 += x1[b]; m2 += x2[b];
        }
        m1 /= static_cast<double>(nb); m2 /= static_cast<double>(nb);
        double cv = 0;
        for(std::size_t b = 0; b < nb; b++) cv += (x1[b] - m1) * (x2[b] - m2);
        return cv / static_cast<double>(nb * (nb - 1));
    };

    SubgeodesicSymmetrizationReport rep;
    rep.s_grid = s_grid;
    rep.min_logA_defect = std::numeric_limits<double>::infinity();
    rep.min_logA_z = std::numeric_limits<double>::infinity();

    auto check_triple = [&](std::array<std::size_t,2> P, std::array<std::size_t,2> Q,
                            std::array<std::size_t,2> R) {
        double AP = A_of(P[0], P[1]), AQ = A_of(Q[0], Q[1]), AR = A_of(R[0], R[1]);
        if(AP <= 0 || AQ <= 0 || AR <= 0) return;
        double defect = std::log(AQ) - 0.5 * (std::log(AP) + std::log(AR));
        std::array<std::array<std::size_t,2>,3> pts = {P, Q, R};
        std::array<double,3> coef = {-0.5, 1.0, -0.5};
        std::array<double,3> vals = {AP, AQ, AR};
        double var = 0;
        for(int aa = 0; aa < 3; aa++)
            for(int bb = 0; bb < 3; bb++)
                var += coef[aa] * coef[bb]
                     * cov_of(pts[aa][0], pts[aa][1], pts[bb][0], pts[bb][1])
                     / (vals[aa] * vals[bb]);
        double sd = std::sqrt(std::max(var, 0.0));
        rep.min_logA_defect = std::min(rep.min_logA_defect, defect);
        rep.min_logA_z = std::min(rep.min_logA_z,
            sd > 0 ? defect / sd : (defect >= -1e-9 ? 0.0 : -1e9));
    };

    for(std::size_t a = 0; a < ns; a++)
        for(std::size_t j = 1; j + 1 < nt; j++)
            check_triple({a, j-1}, {a, j}, {a, j+1});
    for(std::size_t a = 1; a + 1 < ns; a++)
        for(std::size_t j = 0; j < nt; j++)
            check_triple({a-1, j}, {a, j}, {a+1, j});
    for(std::size_t a = 1; a + 1 < ns; a++)
        for(std::size_t j = 1; j + 1 < nt; j++) {
            check_triple({a-1, j-1}, {a, j}, {a+1, j+1});
            check_triple({a-1, j+1}, {a, j}, {a+1, j-1});
        }

    // slice-wise symmetrization on slice-adapted levels; the same sampler
    // seeds reproduce the shared cloud, so the estimates stay coupled
    rep.energies.resize(ns);
    std::vector<double> esd(ns);
    for(std::size_t a = 0; a < ns; a++) {
        double s = s_grid[a];
        auto u_s = [&](std::span<const double> x) {
            return slice_value(u0.eval_unchecked(x), u1.eval_unchecked(x), log_sum_exp(x), s);
        };
        auto slice_levels = adaptive_levels(u_s, geom, mc, slice_min[a], 64);
        auto d = distribution_of(u_s, geom, slice_levels, mc);
        // boundary-tolerant energy: a sparse shard can see p-hat = 1 at the
        // topmost level, which symmetrize renders as a small negative
        // boundary value
        rep.energies[a] = energy_with_boundary(symmetrize(d, geom).profile, geom);
        double mean = 0, var = 0;
        std::vector<double> es(nb);
        for(std::size_t b = 0; b < nb; b++) {
            auto ds = shard_distribution(d, static_cast<int>(b));
            es[b] = energy_with_boundary(symmetrize(ds, geom).profile, geom);
            mean += es[b];
        }
        mean /= static_cast<double>(nb);
        for(std::size_t b = 0; b < nb; b++) var += sqr(es[b] - mean);
        // fold in a level-resolution sensitivity estimate: reconstruction
        // bias is systematic and invisible to batch noise
        double e_half = energy_with_boundary(symmetrize(thin_levels(d, 2), geom).profile, geom);
        esd[a] = std::sqrt(var / static_cast<double>(nb * (nb - 1))
                           + sqr(rep.energies[a] - e_half));
    }

    rep.min_energy_defect = std::numeric_limits<double>::infinity();
    rep.min_energy_z = std::numeric_limits<double>::infinity();
    for(std::size_t a = 1; a + 1 < ns; a++) {
        double defect = rep.energies[a] - 0.5 * (rep.energies[a-1] + rep.energies[a+1]);
        double sd = std::sqrt(esd[a]*esd[a] + 0.25*(esd[a-1]*esd[a-1] + esd[a+1]*esd[a+1]));
        double scale = std::max(1.0, std::abs(rep.energies[a]));
        rep.min_energy_defect = std::min(rep.min_energy_defect, defect);
        rep.min_energy_z = std::min(rep.min_energy_z,
            sd > 0 ? defect / sd : (defect >= -1e-3 * scale ? 0.0 : -1e9));
    }

    // familywise thresholds: the minima run over many draws, studentized by
    // batch-means standard errors with (shards - 1) degrees of freedom
    std::size_t logA_draws = ns * (nt - 2) + (ns - 2) * nt + 2 * (ns - 2) * (nt - 2);
    rep.pass = rep.min_logA_z >= -familywise_t(logA_draws, nb - 1)
            && rep.min_energy_z >= -familywise_t(ns - 2, nb - 1);
    return rep;
}

} // namespace plurisym
