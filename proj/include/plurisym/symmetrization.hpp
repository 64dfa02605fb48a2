#pragma once
/** \file symmetrization.hpp
    \brief Distribution functions sigma(t) = |{u < t}|_{Omega_l} and the
           Schwarz-type symmetrization u-hat = f(log Phi).

    One shared sample cloud is evaluated at all probe levels (common random
    numbers), so the estimated sigma is monotone in t sample-wise and the
    covariance between levels is the nested-indicator binomial covariance

        cov(sigma_i, sigma_j) = M^2 (p_min - p_i p_j) / N,   M = vol/l,

    which every propagated error bar in this module uses.  Symmetrization
    inverts f^{-1}(t) = (1/l) log(l sigma(t) / vol); sigma-flat stretches
    become jumps of f (left-continuous inversion).
*/
#include "common.hpp"
#include "model.hpp"
#include "profile.hpp"
#include "toric.hpp"

#include <queue>

namespace plurisym {

struct DistributionFunction {
    std::vector<double> levels;          ///< increasing probe levels t_j < 0
    std::vector<VolumeEstimate> sigma;   ///< one estimate per level
    double min_u = 0;                    ///< estimated essential infimum of u
    double mass = 0;                     ///< vol/l, the total Omega_l mass

    // sampling internals kept for covariance propagation and shard reuse
    std::vector<std::vector<std::int64_t>> shard_hits;  ///< [level][shard]
    std::vector<std::int64_t> shard_sizes;
    std::int64_t total_samples = 0;

    double p_hat(std::size_t j) const
    {
        return sigma[j].value / mass;
    }

    /// CRN covariance of (sigma_i, sigma_j)
    double cov_sigma(std::size_t i, std::size_t j) const
    {
        double pi = p_hat(i), pj = p_hat(j);
        double pmin = std::min(pi, pj);
        return mass * mass * (pmin - pi * pj) / static_cast<double>(total_samples);
    }

    /// variance of a linear combination sum_j c_j log sigma_j (delta method)
    double var_log_combination(std::span<const std::size_t> idx,
                               std::span<const double> coeff) const
    {
        double v = 0;
        for(std::size_t a = 0; a < idx.size(); a++)
            for(std::size_t b = 0; b < idx.size(); b++) {
                double sa = sigma[idx[a]].value, sb = sigma[idx[b]].value;
                if(sa <= 0 || sb <= 0) return std::numeric_limits<double>::infinity();
                v += coeff[a] * coeff[b] * cov_sigma(idx[a], idx[b]) / (sa * sb);
            }
        return std::max(v, 0.0);
    }

    /// covariance of the inverse-profile ordinates y_j = (1/l) log(l sigma_j / vol)
    double cov_y(std::size_t i, std::size_t j, double l) const
    {
        double si = sigma[i].value, sj = sigma[j].value;
        if(si <= 0 || sj <= 0) return std::numeric_limits<double>::infinity();
        return cov_sigma(i, j) / (si * sj * l * l);
    }
};

/// geometric probe levels on (min_u, 0), denser toward 0 where the e^{lt}
/// mass concentrates
inline std::vector<double> geometric_levels(double min_u, int count,
                                            double top_fraction = 1e-3)
{
    require(min_u < 0, "CONFIG_ERROR", "geometric levels need min_u < 0");
    require(count >= 3, "CONFIG_ERROR", "need at least 3 levels");
    double lo = std::abs(min_u) * (1.0 - 1e-3);
    double hi = std::abs(min_u) * top_fraction;
    double ratio = std::pow(hi / lo, 1.0 / (count - 1));
    std::vector<double> levels(static_cast<std::size_t>(count));
    double v = lo;
    for(int j = 0; j < count; j++) {
        levels[static_cast<std::size_t>(j)] = -v;
        v *= ratio;
    }
    return levels;
}

/** Probe levels refined toward both ends of (min_u, 0).  Levels geometric
    in |t| resolve sigma near the boundary; levels geometric in the
    elevation t - min_u resolve the radius variable f^{-1}(t) near the
    essential infimum, where smooth profiles need it. */
inline std::vector<double> two_sided_levels(double min_u, int count)
{
    require(min_u < 0, "CONFIG_ERROR", "levels need min_u < 0");
    require(count >= 6, "CONFIG_ERROR", "need at least 6 levels");
    const double m = std::abs(min_u);
    int half = count / 2;
    std::vector<double> levels;
    levels.reserve(static_cast<std::size_t>(count));
    // toward 0: |t| geometric in [1e-3 m, m/2]
    {
        double lo = 0.5 * m, hi = 1e-3 * m;
        double ratio = std::pow(hi / lo, 1.0 / (half - 1));
        double v = lo;
        for(int j = 0; j < half; j++) { levels.push_back(-v); v *= ratio; }
    }
    // toward min_u: elevation geometric in [3e-4 m, m/2]
    {
        int rest = count - half;
        double lo = 3e-4 * m, hi = 0.5 * m;
        double ratio = std::pow(hi / lo, 1.0 / (rest - 1));
        double d = lo;
        for(int j = 0; j < rest; j++) { levels.push_back(min_u + d); d *= ratio; }
    }
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end(),
        [m](double a, double b){ return std::abs(a - b) < 1e-12 * m; }), levels.end());
    return levels;
}

/** Samples u once per point and counts all levels on the shared cloud.
    min_u is the sample minimum lowered by an order-statistic margin (the
    spread of the 32 smallest values). */
template<class F>
DistributionFunction distribution_of(F&& u, const ModelGeometry& geom,
                                     const std::vector<double>& levels,
                                     const SamplerConfig& mc)
{
    geom.validate();
    mc.validate();
    require(!levels.empty() && is_strictly_increasing(levels), "CONFIG_ERROR",
            "levels must be strictly increasing");
    require(levels.back() < 0, "CONFIG_ERROR", "levels must be negative");

    DistributionFunction d;
    d.levels = levels;
    d.mass = ball_volume(geom);
    d.shard_hits.assign(levels.size(), std::vector<std::int64_t>(
        static_cast<std::size_t>(mc.shards), 0));
    d.shard_sizes.resize(static_cast<std::size_t>(mc.shards));

    std::priority_queue<double> smallest;   // keeps the 32 smallest u-values
    constexpr std::size_t NKEEP = 32;

    std::vector<double> x(static_cast<std::size_t>(geom.ambient_dim()));
    for(int shard = 0; shard < mc.shards; shard++) {
        std::int64_t count = mc.samples / mc.shards + (shard < mc.samples % mc.shards ? 1 : 0);
        d.shard_sizes[static_cast<std::size_t>(shard)] = count;
        BallSampler sampler(geom, mix_seed(mc.seed, static_cast<std::uint64_t>(shard)));
        for(std::int64_t i = 0; i < count; i++) {
            sampler.draw(x);
            double v = u(std::span<const double>(x));
            if(!std::isfinite(v))
                throw Error("DIVERGED", "test function evaluated to a non-finite value");
            if(smallest.size() < NKEEP) smallest.push(v);
            else if(v < smallest.top()) { smallest.pop(); smallest.push(v); }
            // bucket by the first level above v; prefix sums below turn the
            // buckets into cumulative sublevel counts
            auto it = std::upper_bound(levels.begin(), levels.end(), v);
            std::size_t idx = static_cast<std::size_t>(it - levels.begin());
            if(idx < levels.size())
                d.shard_hits[idx][static_cast<std::size_t>(shard)]++;
        }
        d.total_samples += count;
    }
    for(std::size_t j = 1; j < levels.size(); j++)
        for(std::size_t b = 0; b < static_cast<std::size_t>(mc.shards); b++)
            d.shard_hits[j][b] += d.shard_hits[j-1][b];

    double kth = smallest.top();
    double vmin = kth;
    while(!smallest.empty()) { vmin = smallest.top(); smallest.pop(); }
    d.min_u = vmin - (kth - vmin);   // margin = spread of the smallest order stats

    d.sigma.resize(levels.size());
    for(std::size_t j = 0; j < levels.size(); j++) {
        std::int64_t hits = 0;
        for(auto h : d.shard_hits[j]) hits += h;
        VolumeEstimate& e = d.sigma[j];
        e.samples = d.total_samples;
        e.seed = mc.seed;
        double p = static_cast<double>(hits) / static_cast<double>(d.total_samples);
        e.value = d.mass * p;
        e.stderror = d.mass * std::sqrt(std::max(0.0, p * (1 - p) / static_cast<double>(d.total_samples)));
        if(hits == 0) { e.empty_level = true; e.stderror = 0; }
    }
    return d;
}

inline DistributionFunction distribution(const ToricTestFunction& u, const ModelGeometry& geom,
                                         const std::vector<double>& levels,
                                         const SamplerConfig& mc)
{
    return distribution_of(u, geom, levels, mc);
}

/// cheap pre-pass estimate of the essential infimum (sample minimum lowered
/// by the spread of the smallest order statistics); the floor piece of a
/// test function can sit far below the smallest value the measure ever
/// reaches, so level budgets must start from this estimate instead
template<class F>
double estimate_essential_min(F&& u, const ModelGeometry& geom,
                              std::int64_t samples, std::uint64_t seed)
{
    BallSampler sampler(geom, seed);
    std::vector<double> x(static_cast<std::size_t>(geom.ambient_dim()));
    std::priority_queue<double> smallest;
    constexpr std::size_t NKEEP = 32;
    for(std::int64_t i = 0; i < samples; i++) {
        sampler.draw(x);
        double v = u(std::span<const double>(x));
        if(smallest.size() < NKEEP) smallest.push(v);
        else if(v < smallest.top()) { smallest.pop(); smallest.push(v); }
    }
    double kth = smallest.top(), vmin = kth;
    while(!smallest.empty()) { vmin = smallest.top(); smallest.pop(); }
    return vmin - (kth - vmin);
}

/** Sigma-adaptive probe levels: starting from the two-sided set, a cheap
    pre-pass locates intervals where the inverse ordinate y = (1/l) log(l
    sigma/vol) jumps (near-flat pieces create sharp sigma shelves in the
    middle of the range) and subdivides them in t.  Without this the
    reconstruction bridges a shelf with one chord and misstates the profile
    slope there. */
template<class F>
std::vector<double> adaptive_levels(F&& u, const ModelGeometry& geom, const SamplerConfig& mc,
                                    double min_hint, int base_count = 64, int rounds = 2)
{
    auto levels = two_sided_levels(std::min(min_hint, -1e-6), base_count);
    SamplerConfig pre = mc;
    pre.samples = std::max<std::int64_t>(50000, mc.samples / 10);
    pre.shards = 1;
    for(int r = 0; r < rounds; r++) {
        auto d = distribution_of(u, geom, levels, pre);
        std::vector<double> ys, ts;
        for(std::size_t j = 0; j < levels.size(); j++)
            if(d.sigma[j].value > 0) {
                ys.push_back(std::log(geom.l * d.sigma[j].value / geom.vol) / geom.l);
                ts.push_back(levels[j]);
            }
        if(ys.size() < 3) break;
        double target = std::max((ys.back() - ys.front()) / base_count, 1e-9);
        std::vector<double> extra;
        for(std::size_t j = 0; j + 1 < ys.size(); j++) {
            double gap = ys[j+1] - ys[j];
            int n = std::min(15, static_cast<int>(gap / target) - 1);
            for(int k = 1; k <= n; k++)
                extra.push_back(ts[j] + (ts[j+1] - ts[j]) * k / (n + 1.0));
        }
        if(extra.empty()) break;
        levels.insert(levels.end(), extra.begin(), extra.end());
        std::sort(levels.begin(), levels.end());
        levels.erase(std::unique(levels.begin(), levels.end(),
            [&](double a, double b){ return b - a < 1e-12 * std::abs(min_hint); }), levels.end());
        if(levels.size() > static_cast<std::size_t>(base_count) + 360) break;
    }
    return levels;
}

/// view with every stride-th level kept (plus the last); comparing derived
/// quantities at full and halved resolution estimates reconstruction bias
inline DistributionFunction thin_levels(const DistributionFunction& d, int stride)
{
    DistributionFunction s;
    s.mass = d.mass;
    s.min_u = d.min_u;
    s.total_samples = d.total_samples;
    s.shard_sizes = d.shard_sizes;
    for(std::size_t j = 0; j < d.levels.size(); j++) {
        if(j % static_cast<std::size_t>(stride) != 0 && j + 1 != d.levels.size()) continue;
        s.levels.push_back(d.levels[j]);
        s.sigma.push_back(d.sigma[j]);
        s.shard_hits.push_back(d.shard_hits[j]);
    }
    return s;
}

/// single-shard view, used for batch-means error bars on derived quantities
inline DistributionFunction shard_distribution(const DistributionFunction& d, int shard)
{
    DistributionFunction s;
    s.levels = d.levels;
    s.mass = d.mass;
    s.min_u = d.min_u;
    s.total_samples = d.shard_sizes[static_cast<std::size_t>(shard)];
    s.shard_sizes = {s.total_samples};
    s.sigma.resize(d.levels.size());
    s.shard_hits.assign(d.levels.size(), std::vector<std::int64_t>(1, 0));
    for(std::size_t j = 0; j < d.levels.size(); j++) {
        std::int64_t hits = d.shard_hits[j][static_cast<std::size_t>(shard)];
        s.shard_hits[j][0] = hits;
        double p = static_cast<double>(hits) / static_cast<double>(s.total_samples);
        s.sigma[j].value = s.mass * p;
        s.sigma[j].stderror = s.mass * std::sqrt(std::max(0.0, p * (1 - p) / static_cast<double>(s.total_samples)));
        s.sigma[j].samples = s.total_samples;
        s.sigma[j].empty_level = hits == 0;
    }
    return s;
}

// ---------- symmetrization ----------

struct SymmetrizationResult {
    RadialProfile profile;        ///< f on the standard grid, left_value set
    std::vector<double> knot_y;   ///< f^{-1}(t_j) at the retained levels
    std::vector<double> knot_t;
    std::vector<std::size_t> knot_level;  ///< index into the distribution levels
    int dropped_levels = 0;       ///< levels with sigma = 0 (below min u)
};

/** Builds the symmetrized profile from a distribution function via
    f^{-1}(t) = (1/l) log(l sigma(t)/vol).  Levels with sigma = 0 are
    dropped; sigma-flat stretches become steep PL segments over one grid
    cell (left-continuous inversion).  If sigma saturates at the ball mass
    before t = 0 the boundary value of f stays at the first saturated level
    (the function does not vanish on the boundary); otherwise the profile is
    closed with f(0) = 0.  Throws NONMONOTONE_SIGMA if sigma decreases
    beyond 3 combined standard errors. */
inline SymmetrizationResult symmetrize(const DistributionFunction& d, const ModelGeometry& geom,
                                       const std::vector<double>& t_grid = standard_grid())
{
    geom.validate();
    for(std::size_t j = 1; j < d.sigma.size(); j++)
        if(d.sigma[j].value < d.sigma[j-1].value
               - 3.0 * (d.sigma[j].stderror + d.sigma[j-1].stderror))
            throw Error("NONMONOTONE_SIGMA", "sigma decreases beyond 3 stderr at level "
                        + std::to_string(d.levels[j]));

    const double l = geom.l, vol = geom.vol;
    const double cell = (t_grid.back() - t_grid.front()) / static_cast<double>(t_grid.size() - 1);

    SymmetrizationResult out{zero_profile(t_grid), {}, {}, {}, 0};
    std::vector<double> ys, ts;
    std::vector<std::size_t> lv;
    for(std::size_t j = 0; j < d.levels.size(); j++) {
        if(d.sigma[j].value <= 0) { out.dropped_levels++; continue; }
        ys.push_back(std::log(l * d.sigma[j].value / vol) / l);
        ts.push_back(d.levels[j]);
        lv.push_back(j);
    }
    require(ys.size() >= 2, "CONFIG_ERROR", "not enough positive-sigma levels to symmetrize");

    // Left-continuous inversion with noise-aware thinning: the inversion
    // cannot resolve y-increments below the estimator noise (or below the
    // grid), so each sub-resolution cluster keeps its first level.  A
    // genuine sigma-flat stretch collapses the same way, and the jump of f
    // is realized as the steep segment to the next retained knot.
    std::vector<double> ky, kt;
    std::vector<std::size_t> kl;
    const double ytol = 1e-12;
    bool saturated = false;
    for(std::size_t i = 0; i < ys.size(); i++) {
        if(ys[i] >= -ytol) {
            // sigma saturated at the ball mass before t = 0: the function does
            // not vanish on the boundary.  Extrapolate the last segment to
            // y = 0 for the boundary value, clamped by the first saturated level.
            double tb = ts[i];
            if(ky.size() >= 2) {
                std::size_t k = ky.size() - 1;
                double slope = (kt[k] - kt[k-1]) / (ky[k] - ky[k-1]);
                tb = std::min(tb, kt[k] + (0.0 - ky[k]) * slope);
            }
            ky.push_back(0.0);
            kt.push_back(tb);
            kl.push_back(lv[i]);
            saturated = true;
            break;
        }
        if(!ky.empty()) {
            double dy = ys[i] - ky.back();
            double sd = 0;
            if(kl.back() != static_cast<std::size_t>(-1)) {
                double v = d.cov_y(kl.back(), kl.back(), l) + d.cov_y(lv[i], lv[i], l)
                         - 2.0 * d.cov_y(kl.back(), lv[i], l);
                if(std::isfinite(v)) sd = std::sqrt(std::max(v, 0.0));
            }
            if(dy < std::max(0.5 * cell, 3.0 * sd)) continue;
        }
        ky.push_back(ys[i]); kt.push_back(ts[i]); kl.push_back(lv[i]);
    }
    require(ky.size() >= 2, "CONFIG_ERROR", "levels do not resolve the distribution");

    // open with the essential infimum: extend the first segment back to the
    // level min_u (the convexity-consistent reconstruction of the bottom atom)
    if(d.min_u < kt.front()) {
        double slope = (kt[1] - kt[0]) / (ky[1] - ky[0]);
        double width = slope > 1e-12 ? (kt.front() - d.min_u) / slope : cell;
        ky.insert(ky.begin(), ky.front() - width);
        kt.insert(kt.begin(), d.min_u);
        kl.insert(kl.begin(), static_cast<std::size_t>(-1));
    }
    if(!saturated) {   // boundary-vanishing function: close at (0, 0)
        ky.push_back(0.0);
        kt.push_back(0.0);
        kl.push_back(static_cast<std::size_t>(-1));
    }
    // guard against collapsed abscissae after the jump insertion
    for(std::size_t k = 1; k < ky.size(); k++)
        if(ky[k] <= ky[k-1]) ky[k] = ky[k-1] + 1e-9 * cell;

    // output grid: the standard grid refined by the knot abscissae, so the
    // reconstructed profile interpolates sigma at the probe levels exactly
    std::vector<double> grid = t_grid;
    for(double y : ky)
        if(y > t_grid.front() + 1e-12 && y < -1e-15) grid.push_back(y);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end(),
        [cell](double a, double b){ return b - a < 1e-9 * cell; }), grid.end());
    if(std::abs(grid.back()) > 0) grid.back() = 0.0;

    std::vector<double> vals(grid.size());
    for(std::size_t k = 0; k < grid.size(); k++)
        vals[k] = pl_eval(ky, kt, grid[k]);
    vals.back() = kt.back();
    RadialProfile prof(grid, std::move(vals), pl_eval(ky, kt, grid.front()));

    out.profile = std::move(prof);
    out.knot_y = std::move(ky);
    out.knot_t = std::move(kt);
    out.knot_level = std::move(kl);
    return out;
}

/// z-scored convexity certificate over the reconstruction knots
struct KnotConvexityReport {
    double min_slope_change = 0;    ///< min over interior knots of s_k - s_{k-1}
    double min_z = 0;               ///< min of slope change / propagated stderr
    bool pass = false;
};

/** Convexity certificate for the symmetrized profile, checked on the
    knots with the CRN covariance of the ordinates y_j propagated through
    the slopes.  The true profile is convex, so every slope change should be
    non-negative up to the estimator noise. */
inline KnotConvexityReport knot_convexity_check(const SymmetrizationResult& sym,
                                                const DistributionFunction& d,
                                                const ModelGeometry& geom)
{
    KnotConvexityReport rep;
    rep.min_slope_change = std::numeric_limits<double>::infinity();
    rep.min_z = std::numeric_limits<double>::infinity();
    const auto& y = sym.knot_y;
    const auto& t = sym.knot_t;
    const auto& lv = sym.knot_level;
    for(std::size_t k = 1; k + 1 < y.size(); k++) {
        double sl = (t[k] - t[k-1]) / (y[k] - y[k-1]);
        double sr = (t[k+1] - t[k]) / (y[k+1] - y[k]);
        double change = sr - sl;
        // gradient of (sr - sl) in (y_{k-1}, y_k, y_{k+1})
        double gl = sl / (y[k] - y[k-1]);
        double gr = sr / (y[k+1] - y[k]);
        std::array<double,3> grad = {-gl, gl + gr, -gr};
        std::array<std::size_t,3> id = {lv[k-1], lv[k], lv[k+1]};
        double var = 0;
        bool have_cov = true;
        for(int a = 0; a < 3; a++)
            for(int b = 0; b < 3; b++) {
                if(id[a] == static_cast<std::size_t>(-1) || id[b] == static_cast<std::size_t>(-1)) {
                    // the synthetic (0,0) anchor carries no MC noise
                    continue;
                }
                double c = d.cov_y(id[a], id[b], geom.l);
                if(!std::isfinite(c)) { have_cov = false; break; }
                var += grad[a] * grad[b] * c;
            }
        double sd = have_cov ? std::sqrt(std::max(var, 0.0)) : 0.0;
        rep.min_slope_change = std::min(rep.min_slope_change, change);
        rep.min_z = std::min(rep.min_z, sd > 0 ? change / sd
                                               : (change >= -1e-9 ? 0.0 : -1e9));
    }
    rep.pass = rep.min_z >= -familywise_z(y.size() >= 2 ? y.size() - 2 : 0);
    return rep;
}

/// noise-scaled epsilon for convexity_report on the output profile: each
/// kink's 3-sigma slope-change noise divided by the actual span of its grid
/// neighbors (kinks sit on grid nodes of the refined output grid).
/// Returned scale-relative, matching the convexity_report convention.
inline double noise_scaled_convexity_epsilon(const SymmetrizationResult& sym,
                                             const DistributionFunction& d,
                                             const ModelGeometry& geom)
{
    double eps = 1e-8;
    double scale = 1.0;
    for(double t : sym.knot_t) scale = std::max(scale, std::abs(t));
    const auto& y = sym.knot_y;
    const auto& t = sym.knot_t;
    const auto& lv = sym.knot_level;
    const auto& grid = sym.profile.grid();
    for(std::size_t k = 1; k + 1 < y.size(); k++) {
        double sl = (t[k] - t[k-1]) / (y[k] - y[k-1]);
        double sr = (t[k+1] - t[k]) / (y[k+1] - y[k]);
        double gl = sl / (y[k] - y[k-1]);
        double gr = sr / (y[k+1] - y[k]);
        std::array<double,3> grad = {-gl, gl + gr, -gr};
        std::array<std::size_t,3> id = {lv[k-1], lv[k], lv[k+1]};
        double var = 0;
        for(int a = 0; a < 3; a++)
            for(int b = 0; b < 3; b++) {
                if(id[a] == static_cast<std::size_t>(-1) || id[b] == static_cast<std::size_t>(-1))
                    continue;
                double c = d.cov_y(id[a], id[b], geom.l);
                if(std::isfinite(c)) var += grad[a] * grad[b] * c;
            }
        // span of the kink node's neighbors on the output grid
        auto it = std::lower_bound(grid.begin(), grid.end(), y[k] - 1e-12);
        std::size_t idx = static_cast<std::size_t>(it - grid.begin());
        double span;
        if(idx == 0) span = grid[1] - grid[0];
        else if(idx + 1 >= grid.size()) span = grid[grid.size()-1] - grid[grid.size()-2];
        else span = grid[idx+1] - grid[idx-1];
        eps = std::max(eps, 3.0 * std::sqrt(std::max(var, 0.0)) / (span * scale));
    }
    return eps;
}

/// generalized inverse of a profile: smallest tau with f(tau) >= t
inline double profile_inverse(const RadialProfile& p, double t)
{
    const auto& g = p.grid();
    const auto& f = p.values();
    if(t <= f.front()) return -std::numeric_limits<double>::infinity();
    if(t > f.back()) return 0.0;
    auto it = std::lower_bound(f.begin(), f.end(), t);
    std::size_t i = static_cast<std::size_t>(it - f.begin());
    if(i == 0) return g.front();
    if(f[i] == f[i-1]) return g[i];
    double w = (t - f[i-1]) / (f[i] - f[i-1]);
    return g[i-1] + w * (g[i] - g[i-1]);
}

/// sigma of the radial function f(log Phi) in closed form: (vol/l) e^{l f^{-1}(t)}
inline double radial_sigma(const RadialProfile& p, double t, const ModelGeometry& geom)
{
    double y = profile_inverse(p, t);
    if(!std::isfinite(y)) return 0.0;
    return ball_volume(geom) * std::exp(geom.l * std::min(y, 0.0));
}

// ---------- verification reports ----------

struct EquidistributionReport {
    double max_discrepancy_stderr = 0;  ///< max |sigma_u - sigma_uhat| / combined stderr
    double max_discrepancy = 0;
    bool pass = false;
};

/** Compares a fresh MC distribution of u against the closed-form sigma of
    the symmetrized profile at every probe level.  The profile itself came
    from an estimate of the same size, so discrepancies are normalized by
    the standard error of the difference of two independent runs. */
template<class F>
EquidistributionReport verify_equidistribution(F&& u, const RadialProfile& uhat,
                                               const ModelGeometry& geom,
                                               const std::vector<double>& levels,
                                               const SamplerConfig& mc)
{
    DistributionFunction d = distribution_of(u, geom, levels, mc);
    EquidistributionReport rep;
    for(std::size_t j = 0; j < levels.size(); j++) {
        double model = radial_sigma(uhat, levels[j], geom);
        double diff = std::abs(d.sigma[j].value - model);
        double se = std::max(std::sqrt(2.0) * d.sigma[j].stderror, 1e-12 * d.mass);
        rep.max_discrepancy = std::max(rep.max_discrepancy, diff);
        rep.max_discrepancy_stderr = std::max(rep.max_discrepancy_stderr, diff / se);
    }
    rep.pass = rep.max_discrepancy_stderr <= familywise_z(levels.size());
    return rep;
}


struct LogConcavityReport {
    double min_defect = 0;            ///< min midpoint-concavity defect of log sigma
    double min_normalized = 0;        ///< min of defect / propagated stderr
    bool pass = false;
};

/** Midpoint-concavity of log sigma over consecutive level triples with CRN
    error propagation; symmetrized sublevel masses are log-concave in the
    level, so every defect should be
    non-negative up to noise. */
inline LogConcavityReport log_concavity_check(const DistributionFunction& d)
{
    std::vector<std::size_t> pos;
    for(std::size_t j = 0; j < d.sigma.size(); j++)
        if(d.sigma[j].value > 0) pos.push_back(j);
    require(pos.size() >= 3, "CONFIG_ERROR", "log-concavity check needs >= 3 positive levels");

    LogConcavityReport rep;
    rep.min_defect = std::numeric_limits<double>::infinity();
    rep.min_normalized = std::numeric_limits<double>::infinity();
    for(std::size_t k = 1; k + 1 < pos.size(); k++) {
        std::size_t a = pos[k-1], b = pos[k], c = pos[k+1];
        double ta = d.levels[a], tb = d.levels[b], tc = d.levels[c];
        double alpha = (tc - tb) / (tc - ta), beta = (tb - ta) / (tc - ta);
        double defect = std::log(d.sigma[b].value)
                      - alpha * std::log(d.sigma[a].value)
                      - beta  * std::log(d.sigma[c].value);
        std::array<std::size_t,3> idx = {a, b, c};
        std::array<double,3> coeff = {-alpha, 1.0, -beta};
        double sd = std::sqrt(d.var_log_combination(idx, coeff));
        rep.min_defect = std::min(rep.min_defect, defect);
        rep.min_normalized = std::min(rep.min_normalized,
                                      sd > 0 ? defect / sd
                                             : (defect >= -1e-12 ? 0.0 : -std::numeric_limits<double>::infinity()));
    }
    rep.pass = rep.min_normalized >= -familywise_z(pos.size() - 2);
    return rep;
}

struct MonotonicityReport {
    double min_increment_normalized = 0;  ///< min of (sigma_{j+1}-sigma_j)/stderr
    double total_increase_z = 0;          ///< (sigma_J - sigma_1) in stderr units
    bool not_applicable = false;          ///< min_u ~ 0 (essentially constant u)
    bool pass = false;
};

/// strict monotonicity of sigma on (min u, 0)
inline MonotonicityReport strict_monotonicity_check(const DistributionFunction& d)
{
    MonotonicityReport rep;
    if(d.min_u > -1e-9) {
        rep.not_applicable = true;
        rep.pass = true;
        return rep;
    }
    const double N = static_cast<double>(d.total_samples);
    rep.min_increment_normalized = std::numeric_limits<double>::infinity();
    for(std::size_t j = 1; j < d.sigma.size(); j++) {
        double q = std::max(0.0, d.p_hat(j) - d.p_hat(j-1));   // CRN increment probability
        double sd = d.mass * std::sqrt(std::max(q * (1 - q) / N, 1.0 / (N * N)));
        rep.min_increment_normalized = std::min(rep.min_increment_normalized,
            (d.sigma[j].value - d.sigma[j-1].value) / sd);
    }
    double qt = std::max(0.0, d.p_hat(d.sigma.size()-1) - d.p_hat(0));
    double sdt = d.mass * std::sqrt(std::max(qt * (1 - qt) / N, 1.0 / (N * N)));
    rep.total_increase_z = (d.sigma.back().value - d.sigma.front().value) / sdt;
    rep.pass = rep.min_increment_normalized > -3.0 && rep.total_increase_z > 3.0;
    return rep;
}

} // namespace plurisym
