#pragma once
/** \file model.hpp
    \brief Model geometry (C^{n+1}, unit ball, singular measure Omega_l)
           and Omega_l-volumes of sublevel sets.

    The measure is Omega_l = (n!/pi^{n+1}) d(lambda)(w) / |w|^{2(n+1-l)},
    normalized so that the whole ball has mass vol/l.  In log-polar
    coordinates x_j = log|w_j|^2 its density with respect to dx is

        n! * (sum_j e^{x_j})^{l-n-1} * prod_j e^{x_j},

    and a point lies in the unit ball iff sum_j e^{x_j} < 1.  Radially the
    mass below radius e^{s/2} is (vol/l) e^{l s}, which is the closed form
    every Monte-Carlo estimate in this module is tested against.
*/
#include "common.hpp"

namespace plurisym {

/// The pair (n, l) with the model normalization Vol(-L) = vol.
struct ModelGeometry {
    int    n   = 1;    ///< complex dimension of the base; ambient ball is in C^{n+1}
    double l   = 1.0;  ///< measure homogeneity parameter, 0 < l <= n+1
    double vol = 1.0;  ///< Vol(-L); fixed to 1 in the model instance

    ModelGeometry() = default;
    ModelGeometry(int n_, double l_, double vol_ = 1.0) : n(n_), l(l_), vol(vol_)
    {
        validate();
    }

    int ambient_dim() const { return n + 1; }

    void validate() const
    {
        require(n >= 1, "CONFIG_ERROR", "n must be >= 1");
        require(l > 0 && l <= n + 1, "CONFIG_ERROR",
                "l must lie in (0, n+1], got l=" + std::to_string(l));
        require(vol > 0, "CONFIG_ERROR", "vol must be positive");
    }
};

/// A point of the ball in log-polar coordinates x_j = log|w_j|^2.
struct LogPolarPoint {
    std::vector<double> x;

    explicit LogPolarPoint(std::vector<double> coords) : x(std::move(coords)) {}

    /// sum_j e^{x_j}; the point is inside the unit ball iff this is < 1
    double region_constraint() const
    {
        double s = 0;
        for(double v : x) s += std::exp(v);
        return s;
    }
};

/// Result of a volume computation; stderr = 0 means closed form.
struct VolumeEstimate {
    double        value   = 0;
    double        stderror = 0;
    std::int64_t  samples = 0;
    std::uint64_t seed    = 0;
    bool          empty_level = false;  ///< no sample fell below the level
};

/// Monte-Carlo configuration shared by all sampling operations.
struct SamplerConfig {
    std::int64_t  samples = 100000;
    std::uint64_t seed    = 1;
    int           shards  = 1;

    void validate() const
    {
        require(samples >= 1000, "CONFIG_ERROR", "samples must be >= 1000");
        require(shards >= 1 && shards <= samples, "CONFIG_ERROR", "invalid shard count");
    }
};

/// Density of Omega_l with respect to dx at a log-polar point.
inline double omega_density(std::span<const double> x, const ModelGeometry& geom)
{
    geom.validate();
    double sum = 0, logprod = 0;
    for(double v : x) {
        require(std::isfinite(v), "NONFINITE", "log-polar coordinate is not finite");
        sum += std::exp(v);
        logprod += v;
    }
    double cnl = 1;
    for(int k = 2; k <= geom.n; k++) cnl *= k;   // n!
    return cnl * std::pow(sum, geom.l - geom.n - 1) * std::exp(logprod);
}

inline double omega_density(const LogPolarPoint& p, const ModelGeometry& geom)
{
    return omega_density(std::span<const double>(p.x), geom);
}

/// Omega_l-mass of the whole unit ball: vol/l (closed form).
inline double ball_volume(const ModelGeometry& geom)
{
    geom.validate();
    return geom.vol / geom.l;
}

/** Draws points distributed as the normalized restriction of Omega_l to the
    unit ball.  The radial factor r^{2l-1} dr is sampled exactly by inverse
    CDF (r^2 = U^{1/l}) and the direction by squared moduli uniform on the
    simplex, so the singular weight never enters as an importance ratio.
    Phases are irrelevant: every admissible integrand is S^1-invariant in
    each coordinate. */
class BallSampler {
public:
    BallSampler(const ModelGeometry& geom, std::uint64_t seed)
        : geom_(geom), rng_(seed), exp_buf_(static_cast<std::size_t>(geom.n) + 1)
    {
        geom.validate();
    }

    /// Fill x (size n+1) with the next sample; returns s = log Phi = log|w|^2.
    double draw(std::span<double> x)
    {
        const std::size_t m = exp_buf_.size();
        double total = 0;
        for(std::size_t j = 0; j < m; j++) {
            exp_buf_[j] = rng_.exponential();
            total += exp_buf_[j];
        }
        double s = std::log(rng_.uniform()) / geom_.l;   // log r^2, r^2 = U^{1/l}
        double log_total = std::log(total);
        for(std::size_t j = 0; j < m; j++)
            x[j] = s + std::log(exp_buf_[j]) - log_total;
        return s;
    }

private:
    ModelGeometry geom_;
    RngStream rng_;
    std::vector<double> exp_buf_;
};

/** Monte-Carlo estimate of |{u < t}|_{Omega_l} for an S^1-invariant u given
    in log-polar coordinates.  Deterministic given (seed, shards): each shard
    draws an independent substream derived from the seed and the results are
    pooled.  Throws DIVERGED if u evaluates to a non-finite value. */
template<class F>
VolumeEstimate sublevel_volume(F&& u, double t, const ModelGeometry& geom,
                               const SamplerConfig& mc)
{
    geom.validate();
    mc.validate();
    require(t < 0, "CONFIG_ERROR", "sublevel probes require t < 0");

    const double mass = ball_volume(geom);
    std::int64_t hits = 0;
    std::vector<double> x(static_cast<std::size_t>(geom.ambient_dim()));
    std::int64_t done = 0;
    for(int shard = 0; shard < mc.shards; shard++) {
        std::int64_t count = mc.samples / mc.shards + (shard < mc.samples % mc.shards ? 1 : 0);
        BallSampler sampler(geom, mix_seed(mc.seed, static_cast<std::uint64_t>(shard)));
        for(std::int64_t i = 0; i < count; i++) {
            sampler.draw(x);
            double v = u(std::span<const double>(x));
            if(!std::isfinite(v))
                throw Error("DIVERGED", "test function evaluated to a non-finite value");
            if(v < t) hits++;
        }
        done += count;
    }

    VolumeEstimate est;
    est.samples = done;
    est.seed    = mc.seed;
    double p = static_cast<double>(hits) / static_cast<double>(done);
    est.value = mass * p;
    est.stderror = mass * std::sqrt(std::max(0.0, p * (1 - p) / static_cast<double>(done)));
    if(hits == 0) {
        est.empty_level = true;
        est.stderror = 0;
    }
    return est;
}

} // namespace plurisym
