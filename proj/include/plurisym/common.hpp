#pragma once
/** \file common.hpp
    \brief Shared infrastructure: error type, deterministic RNG streams,
           piecewise-linear interpolation and small quadrature helpers.
*/
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <algorithm>
#include <array>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace plurisym {

/// Exception carrying a short machine-readable code (e.g. "CONFIG_ERROR")
/// in addition to the human-readable message.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(code + ": " + what), code_(std::move(code)) {}
    const std::string& code() const { return code_; }
private:
    std::string code_;
};

inline void require(bool cond, const char* code, const std::string& what)
{
    if(!cond) throw Error(code, what);
}

// ---------- deterministic random streams ----------

/// splitmix64 mixing step; used to derive independent substream seeds
/// from (seed, shard index) so that shard results are reproducible.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index)
{
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-seeded stream wrapping mt19937_64 with hand-rolled variate
/// transforms, so that sampled values depend only on the generator state
/// (std::*_distribution would be implementation-defined).
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : gen_(seed) {}

    /// uniform in the open interval (0,1)
    double uniform()
    {
        return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// standard exponential
    double exponential() { return -std::log(uniform()); }

    /// uniform in [a,b]
    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// integer in [0, m)
    std::uint64_t below(std::uint64_t m) { return gen_() % m; }

private:
    std::mt19937_64 gen_;
};

// ---------- piecewise-linear utilities ----------

/// Evaluate the piecewise-linear interpolant through (xs, ys) at x,
/// extending flat on both sides.  xs must be strictly increasing.
inline double pl_eval(std::span<const double> xs, std::span<const double> ys, double x)
{
    if(x <= xs.front()) return ys.front();
    if(x >= xs.back())  return ys.back();
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    std::size_t i = static_cast<std::size_t>(it - xs.begin());
    double w = (x - xs[i-1]) / (xs[i] - xs[i-1]);
    return ys[i-1] + w * (ys[i] - ys[i-1]);
}

inline bool is_strictly_increasing(std::span<const double> v)
{
    for(std::size_t i = 1; i < v.size(); i++)
        if(!(v[i] > v[i-1])) return false;
    return true;
}

inline bool is_non_decreasing(std::span<const double> v, double slack = 0)
{
    for(std::size_t i = 1; i < v.size(); i++)
        if(v[i] < v[i-1] - slack) return false;
    return true;
}

/// log(sum_j exp(x_j)), stable for very negative components.
inline double log_sum_exp(std::span<const double> x)
{
    double m = -std::numeric_limits<double>::infinity();
    for(double v : x) m = std::max(m, v);
    if(!std::isfinite(m)) return m;
    double s = 0;
    for(double v : x) s += std::exp(v - m);
    return m + std::log(s);
}

// ---------- quadrature helpers ----------

/// 4-point Gauss-Legendre nodes/weights on [-1,1]; exact through degree 7,
/// which makes per-cell integrals of smooth integrands over a PL profile
/// effectively exact at the grid resolutions used here.
inline constexpr std::array<double,4> GL4_NODES = {
    -0.8611363115940526, -0.3399810435848563,
     0.3399810435848563,  0.8611363115940526 };
inline constexpr std::array<double,4> GL4_WEIGHTS = {
    0.3478548451374538, 0.6521451548625461,
    0.6521451548625461, 0.3478548451374538 };

/// integrate fn over [a,b] with composite 4-point Gauss-Legendre on n panels
template<class F>
double integrate_gl4(F&& fn, double a, double b, int panels)
{
    double total = 0;
    double h = (b - a) / panels;
    for(int p = 0; p < panels; p++) {
        double c = a + (p + 0.5) * h;
        double acc = 0;
        for(int k = 0; k < 4; k++)
            acc += GL4_WEIGHTS[k] * fn(c + 0.5 * h * GL4_NODES[k]);
        total += acc * 0.5 * h;
    }
    return total;
}

// ---------- misc ----------

/// FNV-1a hash of a string, rendered as fixed-width hex; used as the
/// reproducibility key of inequality results.
inline std::string digest(const std::string& s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for(unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// shortest-roundtrip-ish fixed formatting for CSV output
inline std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double sqr(double x) { return x * x; }

/// inverse standard normal CDF (Acklam's rational approximation, |eps| < 2e-9)
inline double inverse_normal_cdf(double p)
{
    require(p > 0 && p < 1, "CONFIG_ERROR", "quantile argument must lie in (0,1)");
    static const double a[] = {-3.969683028665376e+01,  2.209460984245205e+02,
                               -2.759285104469687e+02,  1.383577518672690e+02,
                               -3.066479806614716e+01,  2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01,  1.615858368580409e+02,
                               -1.556989798598866e+02,  6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                                4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = { 7.784695709041462e-03,  3.224671290700398e-01,
                                2.445134137142996e+00,  3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1 - plow;
    double q, r;
    if(p < plow) {
        q = std::sqrt(-2 * std::log(p));
        return (((((c[0]*q + c[1])*q + c[2])*q + c[3])*q + c[4])*q + c[5])
             / ((((d[0]*q + d[1])*q + d[2])*q + d[3])*q + 1);
    }
    if(p > phigh) {
        q = std::sqrt(-2 * std::log(1 - p));
        return -(((((c[0]*q + c[1])*q + c[2])*q + c[3])*q + c[4])*q + c[5])
              / ((((d[0]*q + d[1])*q + d[2])*q + d[3])*q + 1);
    }
    q = p - 0.5;
    r = q * q;
    return (((((a[0]*r + a[1])*r + a[2])*r + a[3])*r + a[4])*r + a[5])*q
         / (((((b[0]*r + b[1])*r + b[2])*r + b[3])*r + b[4])*r + 1);
}

/// z-threshold for the min/max of `draws` roughly-standard-normal statistics
/// at familywise false-alarm level alpha; never below the per-draw 3-sigma
/// convention
inline double familywise_z(std::size_t draws, double alpha = 0.01)
{
    if(draws == 0) return 3.0;
    double per = alpha / static_cast<double>(draws);
    per = std::max(per, 1e-300);
    return std::max(3.0, inverse_normal_cdf(1.0 - per));
}

/// familywise threshold for statistics studentized by a batch-means standard
/// error with `dof` degrees of freedom (Student-t tails are heavier than
/// gaussian; first-order Cornish-Fisher correction)
inline double familywise_t(std::size_t draws, std::size_t dof, double alpha = 0.01)
{
    double z = familywise_z(draws, alpha);
    if(dof == 0) return z;
    return z * (1.0 + (z * z + 1.0) / (4.0 * static_cast<double>(dof)));
}

/// x^m for small non-negative integer m (m = n+2 exponents in energies)
inline double powi(double x, int m)
{
    double r = 1;
    for(int i = 0; i < m; i++) r *= x;
    return r;
}

} // namespace plurisym
