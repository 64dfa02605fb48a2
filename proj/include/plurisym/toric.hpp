#pragma once
/** \file toric.hpp
    \brief S^1-invariant plurisubharmonic test functions on the unit ball.

    All test functions are toric: they depend on the coordinates only
    through x_j = log|w_j|^2, so fibrewise S^1-invariance holds structurally
    (no phase ever enters an evaluation path).  A function is

        u(x) = max( g(x), A * log sum_j e^{x_j} )

    where g is convex non-decreasing (a radial profile composition, a smooth
    closed form, or a max of affine pieces with non-negative slopes) and the
    optional radial envelope A log Phi pins u to zero on the boundary.
*/
#include "common.hpp"
#include "model.hpp"
#include "profile.hpp"

#include <json.hpp>

#include <functional>
#include <optional>
#include <variant>

namespace plurisym {

/// one affine piece a . x + b of a piecewise-linear convex function
struct AffinePiece {
    std::vector<double> slope;   ///< non-negative components (monotonicity)
    double offset = 0;

    double eval(std::span<const double> x) const
    {
        double v = offset;
        for(std::size_t j = 0; j < slope.size(); j++) v += slope[j] * x[j];
        return v;
    }
};

/// closed-form smooth convex g; gradient/hessian optional (needed by the
/// Monge-Ampere quadrature, not by plain evaluation)
struct SmoothConvex {
    std::function<double(std::span<const double>)> value;
    std::function<void(std::span<const double>, std::span<double>)> gradient;
    /// row-major (n+1)x(n+1) Hessian
    std::function<void(std::span<const double>, std::span<double>)> hessian;
};

/// smooth radial g = f(log sum e^{x_j}) from 1-d callables f, f', f''
template<class F, class Fp, class Fpp>
SmoothConvex radial_smooth(F f, Fp fp, Fpp fpp)
{
    SmoothConvex g;
    g.value = [f](std::span<const double> x) { return f(log_sum_exp(x)); };
    g.gradient = [fp](std::span<const double> x, std::span<double> out) {
        double s = log_sum_exp(x);
        double d = fp(s);
        for(std::size_t j = 0; j < x.size(); j++) out[j] = d * std::exp(x[j] - s);
    };
    g.hessian = [fp, fpp](std::span<const double> x, std::span<double> H) {
        double s = log_sum_exp(x);
        double d1 = fp(s), d2 = fpp(s);
        std::size_t m = x.size();
        for(std::size_t i = 0; i < m; i++) {
            double qi = std::exp(x[i] - s);
            for(std::size_t j = 0; j < m; j++) {
                double qj = std::exp(x[j] - s);
                double v = (d2 - d1) * qi * qj;
                if(i == j) v += d1 * qi;
                H[i*m + j] = v;
            }
        }
    };
    return g;
}

class ToricTestFunction {
public:
    using PlPieces = std::vector<AffinePiece>;
    enum class Kind { radial, smooth, pl };

    static ToricTestFunction radial(int dim, RadialProfile profile,
                                    std::optional<double> envelope = std::nullopt)
    {
        ToricTestFunction u(dim, envelope);
        u.repr_ = std::move(profile);
        return u;
    }

    static ToricTestFunction smooth(int dim, SmoothConvex g,
                                    std::optional<double> envelope = std::nullopt)
    {
        ToricTestFunction u(dim, envelope);
        u.repr_ = std::move(g);
        return u;
    }

    /// Piecewise-linear toric function; duplicated pieces are removed and
    /// negative slope components rejected (they would break monotonicity
    /// across the coordinate hyperplanes).
    static ToricTestFunction pl(int dim, PlPieces pieces,
                                std::optional<double> envelope = std::nullopt)
    {
        require(!pieces.empty(), "CONFIG_ERROR", "pl function needs at least one piece");
        PlPieces kept;
        for(auto& p : pieces) {
            require(static_cast<int>(p.slope.size()) == dim, "CONFIG_ERROR",
                    "piece slope dimension mismatch");
            for(double a : p.slope)
                require(a >= 0, "CONFIG_ERROR", "pl slopes must be non-negative");
            bool dup = false;
            for(const auto& q : kept) {
                double d = std::abs(p.offset - q.offset);
                for(std::size_t j = 0; j < p.slope.size(); j++)
                    d += std::abs(p.slope[j] - q.slope[j]);
                if(d < 1e-14) { dup = true; break; }
            }
            if(!dup) kept.push_back(std::move(p));
        }
        ToricTestFunction u(dim, envelope);
        u.repr_ = std::move(kept);
        return u;
    }

    int dim() const { return dim_; }
    Kind kind() const
    {
        if(std::holds_alternative<RadialProfile>(repr_)) return Kind::radial;
        if(std::holds_alternative<SmoothConvex>(repr_)) return Kind::smooth;
        return Kind::pl;
    }
    std::optional<double> envelope() const { return envelope_; }
    const PlPieces& pieces() const { return std::get<PlPieces>(repr_); }
    const RadialProfile& profile() const { return std::get<RadialProfile>(repr_); }
    const SmoothConvex& smooth_form() const { return std::get<SmoothConvex>(repr_); }

    std::uint64_t seed = 0;   ///< generator seed, kept for report reproducibility

    /// evaluation without the domain guard (used by samplers, which only
    /// produce interior points)
    double eval_unchecked(std::span<const double> x) const
    {
        double lse = log_sum_exp(x);
        double v = -std::numeric_limits<double>::infinity();
        if(const auto* prof = std::get_if<RadialProfile>(&repr_))
            v = (*prof)(lse);
        else if(const auto* g = std::get_if<SmoothConvex>(&repr_))
            v = g->value(x);
        else {
            for(const auto& p : std::get<PlPieces>(repr_))
                v = std::max(v, p.eval(x));
        }
        if(envelope_) v = std::max(v, *envelope_ * lse);
        return v;
    }

    /// evaluation with the closed-ball domain check
    double evaluate(std::span<const double> x) const
    {
        require(static_cast<int>(x.size()) == dim_, "CONFIG_ERROR", "point dimension mismatch");
        double sum = 0;
        for(double v : x) {
            require(std::isfinite(v), "NONFINITE", "log-polar coordinate is not finite");
            sum += std::exp(v);
        }
        require(sum <= 1.0 + 1e-12, "OUT_OF_DOMAIN",
                "point lies outside the closed unit ball");
        return eval_unchecked(x);
    }

    double evaluate(const LogPolarPoint& p) const
    {
        return evaluate(std::span<const double>(p.x));
    }

    /// samplers call test functions directly; they only produce interior points
    double operator()(std::span<const double> x) const { return eval_unchecked(x); }

    /// greatest constant piece, -inf if none; a finite value bounds u below
    double floor_value() const
    {
        double fl = -std::numeric_limits<double>::infinity();
        if(const auto* ps = std::get_if<PlPieces>(&repr_)) {
            for(const auto& p : *ps) {
                bool constant = true;
                for(double a : p.slope) constant = constant && a == 0;
                if(constant) fl = std::max(fl, p.offset);
            }
        } else if(const auto* prof = std::get_if<RadialProfile>(&repr_)) {
            if(prof->has_flat_tail()) fl = *prof->left_value();
        }
        return fl;
    }

private:
    ToricTestFunction(int dim, std::optional<double> envelope)
        : dim_(dim), envelope_(envelope)
    {
        require(dim >= 2, "CONFIG_ERROR", "ambient dimension must be >= 2");
        if(envelope_) require(*envelope_ > 0, "CONFIG_ERROR", "envelope coefficient must be positive");
    }

    int dim_;
    std::optional<double> envelope_;
    std::variant<std::monostate, RadialProfile, SmoothConvex, PlPieces> repr_;
};

/// max of two test functions (used to build subgeodesic endpoints); both
/// must be pl kind.  Envelopes combine by the smaller coefficient, since
/// A log Phi is decreasing in A on the ball.
inline ToricTestFunction toric_max(const ToricTestFunction& a, const ToricTestFunction& b)
{
    require(a.dim() == b.dim(), "CONFIG_ERROR", "dimension mismatch");
    require(a.kind() == ToricTestFunction::Kind::pl && b.kind() == ToricTestFunction::Kind::pl,
            "CONFIG_ERROR", "toric_max combines pl functions");
    ToricTestFunction::PlPieces pieces = a.pieces();
    pieces.insert(pieces.end(), b.pieces().begin(), b.pieces().end());
    std::optional<double> env;
    if(a.envelope() && b.envelope()) env = std::min(*a.envelope(), *b.envelope());
    else if(a.envelope()) env = a.envelope();
    else if(b.envelope()) env = b.envelope();
    return ToricTestFunction::pl(a.dim(), std::move(pieces), env);
}

// ---------- plurisubharmonicity check ----------

struct PshReport {
    double worst_convexity_violation = 0;     ///< max of u(mid) - (u(x)+u(y))/2
    double worst_monotonicity_violation = 0;  ///< max of u(x - d e_j) - u(x)
    double tolerance = 1e-9;
    bool pass = false;
};

/// Randomized verification of midpoint convexity along segments and of
/// componentwise monotonicity; toric psh = convex and non-decreasing in x.
inline PshReport psh_check(const ToricTestFunction& u, int samples, std::uint64_t seed)
{
    require(samples >= 1, "CONFIG_ERROR", "psh_check needs at least one sample");
    ModelGeometry domain(u.dim() - 1, 1.0);
    BallSampler sampler(domain, mix_seed(seed, 0x707368ULL));
    RngStream rng(mix_seed(seed, 0x707369ULL));

    PshReport rep;
    std::vector<double> x(static_cast<std::size_t>(u.dim())),
                        y(static_cast<std::size_t>(u.dim())),
                        m(static_cast<std::size_t>(u.dim()));
    for(int i = 0; i < samples; i++) {
        sampler.draw(x);
        sampler.draw(y);
        for(std::size_t j = 0; j < m.size(); j++) m[j] = 0.5 * (x[j] + y[j]);
        double vc = u.eval_unchecked(m)
                  - 0.5 * (u.eval_unchecked(x) + u.eval_unchecked(y));
        rep.worst_convexity_violation = std::max(rep.worst_convexity_violation, vc);

        std::size_t j = static_cast<std::size_t>(rng.below(m.size()));
        double step = rng.uniform(0.05, 1.0);
        double ux = u.eval_unchecked(x);
        x[j] -= step;                      // moving inward stays in the ball
        double vm = u.eval_unchecked(x) - ux;
        x[j] += step;
        rep.worst_monotonicity_violation = std::max(rep.worst_monotonicity_violation, vm);
    }
    rep.pass = rep.worst_convexity_violation <= rep.tolerance &&
               rep.worst_monotonicity_violation <= rep.tolerance;
    return rep;
}

// ---------- corpus generation ----------

/** Seeded corpus of piecewise-linear toric functions with radial envelopes.
    Each item has 3..8 affine pieces: one constant floor piece with offset in
    [-3,-0.5] (keeps the function bounded below, i.e. no Lelong mass at the
    origin) and the rest with slopes drawn from the non-negative simplex
    scaled by [0,2] and offsets in [-3,0].  The envelope coefficient A lies
    in [0.5,2]; u = max(g, A log Phi) vanishes on the boundary exactly. */
inline std::vector<ToricTestFunction> random_corpus(int count, const ModelGeometry& geom,
                                                    std::uint64_t seed)
{
    require(count >= 1, "INVALID_COUNT", "corpus size must be >= 1");
    geom.validate();
    const std::size_t dim = static_cast<std::size_t>(geom.ambient_dim());

    std::vector<ToricTestFunction> corpus;
    corpus.reserve(static_cast<std::size_t>(count));
    for(int i = 0; i < count; i++) {
        RngStream rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
        int npieces = 3 + static_cast<int>(rng.below(6));   // 3..8

        ToricTestFunction::PlPieces pieces;
        AffinePiece floor;
        floor.slope.assign(dim, 0.0);
        floor.offset = rng.uniform(-3.0, -0.5);
        pieces.push_back(floor);

        for(int k = 1; k < npieces; k++) {
            AffinePiece p;
            p.slope.resize(dim);
            double total = 0;
            for(std::size_t j = 0; j < dim; j++) {
                p.slope[j] = rng.exponential();
                total += p.slope[j];
            }
            double scale = rng.uniform(0.0, 2.0);
            for(std::size_t j = 0; j < dim; j++) p.slope[j] *= scale / total;
            p.offset = rng.uniform(-3.0, 0.0);
            pieces.push_back(std::move(p));
        }
        double A = rng.uniform(0.5, 2.0);
        auto u = ToricTestFunction::pl(static_cast<int>(dim), std::move(pieces), A);
        u.seed = mix_seed(seed, static_cast<std::uint64_t>(i));
        corpus.push_back(std::move(u));
    }
    return corpus;
}

// ---------- serialization ----------

inline nlohmann::ordered_json toric_to_json(const ToricTestFunction& u)
{
    nlohmann::ordered_json j;
    switch(u.kind()) {
        case ToricTestFunction::Kind::pl: {
            j["kind"] = "pl";
            auto& arr = j["pieces"] = nlohmann::ordered_json::array();
            for(const auto& p : u.pieces())
                arr.push_back({{"a", p.slope}, {"b", p.offset}});
            break;
        }
        case ToricTestFunction::Kind::radial:
            j["kind"] = "radial";
            j["profile_csv"] = profile_to_csv(u.profile());
            break;
        default:
            throw Error("CONFIG_ERROR", "smooth test functions are not serializable");
    }
    if(u.envelope()) j["envelope_A"] = *u.envelope();
    j["seed"] = u.seed;
    j["dim"] = u.dim();
    return j;
}

/** Parses a function spec.  Supported kinds: "pl" with pieces, "radial"
    with an embedded profile CSV, and the named radial families
    "radial_truncated_log" (field a) and "radial_exp". */
inline ToricTestFunction toric_from_json(const nlohmann::json& j)
{
    try {
        std::string kind = j.at("kind").get<std::string>();
        int dim = j.value("dim", 2);
        std::optional<double> env;
        if(j.contains("envelope_A")) env = j["envelope_A"].get<double>();

        ToricTestFunction u = [&]() {
            if(kind == "pl") {
                ToricTestFunction::PlPieces pieces;
                for(const auto& pj : j.at("pieces")) {
                    AffinePiece p;
                    p.slope = pj.at("a").get<std::vector<double>>();
                    p.offset = pj.at("b").get<double>();
                    pieces.push_back(std::move(p));
                }
                return ToricTestFunction::pl(dim, std::move(pieces), env);
            }
            if(kind == "radial")
                return ToricTestFunction::radial(
                    dim, profile_from_csv(j.at("profile_csv").get<std::string>()), env);
            if(kind == "radial_truncated_log")
                return ToricTestFunction::radial(
                    dim, truncated_log_profile(j.at("a").get<double>(), standard_grid()), env);
            if(kind == "radial_exp")
                return ToricTestFunction::radial(dim, exp_profile(standard_grid()), env);
            throw Error("PARSE_ERROR", "unknown function kind: " + kind);
        }();
        u.seed = j.value("seed", std::uint64_t(0));
        return u;
    } catch(const nlohmann::json::exception& e) {
        throw Error("PARSE_ERROR", std::string("malformed function spec: ") + e.what());
    }
}

} // namespace plurisym
