#pragma once
/** \file profile.hpp
    \brief Radial profiles f (the canonical form u = f(log Phi)) and their
           one-dimensional functionals: energy, fiber integrals, Moser
           functionals, Legendre transforms.

    A profile is the piecewise-linear interpolant of its samples on a grid
    t_0 < ... < t_m = 0, extended by left_value (flat) on (-inf, t_0].  All
    functionals treat the profile as exactly that PL function:

      energy          E = int (f')^{n+2} dt        (per-cell closed form)
      fiber integral  vol * int F(f(t)) e^{l t} dt (GL4 per cell + exact tail)
      Moser           int e^{k(-w)^{(n+2)/(n+1)}} e^{k t} dt

    The boundary-corrected energy int (-f) d((f')^{n+1}) is also provided;
    it agrees with E when f(0) = 0 and is the correct Monge-Ampere energy
    along families whose boundary value moves.
*/
#include "common.hpp"
#include "model.hpp"

#include <functional>
#include <optional>
#include <sstream>

namespace plurisym {

/// default grid for profiles: uniform on [-20, 0]
inline std::vector<double> standard_grid(double tmin = -20.0, int points = 2001)
{
    require(points >= 101, "CONFIG_ERROR", "grid_points must be >= 101");
    require(tmin < 0, "CONFIG_ERROR", "grid_tmin must be negative");
    std::vector<double> g(static_cast<std::size_t>(points));
    for(int i = 0; i < points; i++)
        g[static_cast<std::size_t>(i)] = tmin * (1.0 - static_cast<double>(i) / (points - 1));
    g.back() = 0.0;
    return g;
}

class RadialProfile {
public:
    /// grid must be strictly increasing and end at 0; values non-decreasing.
    RadialProfile(std::vector<double> grid, std::vector<double> values,
                  std::optional<double> left_value = std::nullopt)
        : grid_(std::move(grid)), values_(std::move(values)), left_value_(left_value)
    {
        require(grid_.size() >= 2 && grid_.size() == values_.size(),
                "CONFIG_ERROR", "profile grid/values size mismatch");
        require(is_strictly_increasing(grid_), "CONFIG_ERROR", "profile grid must be strictly increasing");
        require(std::abs(grid_.back()) < 1e-12, "CONFIG_ERROR", "profile grid must end at t = 0");
        double scale = std::max(1.0, std::abs(values_.front()));
        require(is_non_decreasing(values_, 1e-12 * scale), "CONFIG_ERROR",
                "profile values must be non-decreasing");
        if(left_value_)
            require(std::abs(*left_value_ - values_.front()) <= 1e-9 * scale,
                    "CONFIG_ERROR", "left_value must equal f(t_0)");
    }

    /// build from a callable sampled on the grid
    template<class F>
    static RadialProfile sample(F&& f, const std::vector<double>& grid,
                                std::optional<double> left_value = std::nullopt)
    {
        std::vector<double> vals(grid.size());
        for(std::size_t i = 0; i < grid.size(); i++) vals[i] = f(grid[i]);
        return RadialProfile(grid, std::move(vals), left_value);
    }

    const std::vector<double>& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    std::optional<double> left_value() const { return left_value_; }
    bool has_flat_tail() const { return left_value_.has_value(); }

    std::size_t size() const { return grid_.size(); }

    /// PL evaluation, flat on both sides (f(t>0) = f(0))
    double operator()(double t) const { return pl_eval(grid_, values_, t); }

    double boundary_value() const { return values_.back(); }
    bool is_boundary_normalized(double tol = 1e-9) const
    {
        return std::abs(values_.back()) <= tol;
    }

    /// backward slope on cell i (between grid[i-1] and grid[i]), 1 <= i < size
    double cell_slope(std::size_t i) const
    {
        return (values_[i] - values_[i-1]) / (grid_[i] - grid_[i-1]);
    }

    /// max slope over cells; the right end of the conjugate's domain
    double max_slope() const
    {
        double m = 0;
        for(std::size_t i = 1; i < size(); i++) m = std::max(m, cell_slope(i));
        return m;
    }

    RadialProfile scaled(double c) const
    {
        require(c > 0, "CONFIG_ERROR", "profile scaling must be positive");
        std::vector<double> vals(values_);
        for(double& v : vals) v *= c;
        std::optional<double> lv = left_value_;
        if(lv) *lv *= c;
        return RadialProfile(grid_, std::move(vals), lv);
    }

    /// vertical shift (does not preserve boundary normalization)
    RadialProfile shifted(double c) const
    {
        std::vector<double> vals(values_);
        for(double& v : vals) v += c;
        std::optional<double> lv = left_value_;
        if(lv) *lv += c;
        return RadialProfile(grid_, std::move(vals), lv);
    }

private:
    std::vector<double> grid_;
    std::vector<double> values_;
    std::optional<double> left_value_;
};

// ---------- profile factories ----------

/// f = max(t, -a): the truncated logarithm family
inline RadialProfile truncated_log_profile(double a, const std::vector<double>& grid)
{
    require(a > 0, "CONFIG_ERROR", "truncation depth must be positive");
    return RadialProfile::sample([a](double t){ return std::max(t, -a); }, grid,
                                 grid.front() <= -a ? std::optional<double>(-a) : std::nullopt);
}

/// f = e^t - 1: the reference profile solving the model MA equation
inline RadialProfile exp_profile(const std::vector<double>& grid)
{
    return RadialProfile::sample([](double t){ return std::expm1(t); }, grid);
}

inline RadialProfile zero_profile(const std::vector<double>& grid)
{
    return RadialProfile::sample([](double){ return 0.0; }, grid, 0.0);
}

/// Pointwise max of two profiles.  Grids are merged and crossing abscissae
/// inserted as extra nodes, so the result is exactly the max of the two PL
/// interpolants (no kink-placement energy loss).
inline RadialProfile profile_max(const RadialProfile& a, const RadialProfile& b)
{
    std::vector<double> g(a.grid());
    g.insert(g.end(), b.grid().begin(), b.grid().end());
    std::sort(g.begin(), g.end());
    double cell = (g.back() - g.front()) / static_cast<double>(g.size() - 1);
    g.erase(std::unique(g.begin(), g.end(),
        [cell](double x, double y){ return y - x < 1e-9 * cell; }), g.end());
    if(std::abs(g.back()) > 0) g.back() = 0.0;

    std::vector<double> grid, vals;
    grid.reserve(g.size() + 8);
    vals.reserve(g.size() + 8);
    double pa = 0, pb = 0;
    for(std::size_t i = 0; i < g.size(); i++) {
        double va = a(g[i]), vb = b(g[i]);
        if(i > 0) {
            double d0 = pa - pb, d1 = va - vb;
            if((d0 < 0) != (d1 < 0) && d0 != d1) {
                double w = d0 / (d0 - d1);
                double t = g[i-1] + w * (g[i] - g[i-1]);
                if(t - grid.back() > 1e-9 * cell && g[i] - t > 1e-9 * cell) {
                    grid.push_back(t);
                    vals.push_back(pa + w * (va - pa));
                }
            }
        }
        grid.push_back(g[i]);
        vals.push_back(std::max(va, vb));
        pa = va;
        pb = vb;
    }
    std::optional<double> lv;
    if(a.has_flat_tail() && b.has_flat_tail())
        lv = std::max(*a.left_value(), *b.left_value());
    if(lv && std::abs(*lv - vals.front()) > 1e-9 * std::max(1.0, std::abs(*lv))) lv.reset();
    return RadialProfile(std::move(grid), std::move(vals), lv);
}

/// family of profiles over a curve parameter s in [0,1]
struct ProfileFamily {
    std::vector<double> s_grid;
    std::vector<RadialProfile> profiles;
};

// ---------- energy ----------

struct EnergyBreakdown {
    double value = 0;       ///< int (f')^{n+2} dt on the grid
    double ibp_value = 0;   ///< (n+1) int -f f'' (f')^n dt, centred differences
};

namespace detail {

/// contribution of the most negative tenth of the grid span, used for the
/// divergence declaration when the profile has no flat tail
inline double tail_decade_fraction(const RadialProfile& p, int power)
{
    const auto& g = p.grid();
    double cut = g.front() + 0.1 * (g.back() - g.front());
    double tail = 0, total = 0;
    for(std::size_t i = 1; i < p.size(); i++) {
        double c = powi(p.cell_slope(i), power) * (g[i] - g[i-1]);
        total += c;
        if(g[i] <= cut) tail += c;
    }
    return total > 0 ? tail / total : 0.0;
}

} // namespace detail

/** Energy E = int_{-inf}^0 (f')^{n+2} dt of a boundary-normalized convex
    profile.  One-sided difference quotients are exact for PL profiles.
    Also evaluates the integration-by-parts form (n+1) int -f f'' (f')^n dt
    with centred differences as an independent cross-check (meaningful for
    smooth profiles only).  Throws DIVERGENT_ENERGY when the tail decade
    carries more than 1e-3 of the total and no left_value is present. */
inline EnergyBreakdown energy(const RadialProfile& p, const ModelGeometry& geom)
{
    geom.validate();
    require(p.is_boundary_normalized(), "CONFIG_ERROR", "energy requires f(0) = 0");
    const int power = geom.n + 2;
    const auto& g = p.grid();
    const auto& f = p.values();

    EnergyBreakdown out;
    for(std::size_t i = 1; i < p.size(); i++)
        out.value += powi(p.cell_slope(i), power) * (g[i] - g[i-1]);

    if(!p.has_flat_tail() && detail::tail_decade_fraction(p, power) > 1e-3)
        throw Error("DIVERGENT_ENERGY",
                    "tail decade contributes > 1e-3 of the energy and no left_value is present");

    // centred-difference IBP route (n+1) int -f f'' (f')^n dt
    for(std::size_t i = 1; i + 1 < p.size(); i++) {
        double hl = g[i] - g[i-1], hr = g[i+1] - g[i];
        double fp  = (f[i+1] - f[i-1]) / (hl + hr);
        double fpp = 2.0 * ((f[i+1] - f[i]) / hr - (f[i] - f[i-1]) / hl) / (hl + hr);
        out.ibp_value += (geom.n + 1) * (-f[i]) * fpp * powi(fp, geom.n) * 0.5 * (hl + hr);
    }
    return out;
}

/** Boundary-corrected energy int (-f) d((f')^{n+1}) evaluated as an exact
    Stieltjes sum over the grid.  Equals energy().value when f(0) = 0; for
    f(0) < 0 it adds the boundary term -f(0) (f'(0-))^{n+1}, which is what
    makes the energy concave along subgeodesics whose boundary value moves. */
inline double energy_with_boundary(const RadialProfile& p, const ModelGeometry& geom)
{
    geom.validate();
    const int power = geom.n + 2;
    const auto& g = p.grid();
    double e = 0;
    for(std::size_t i = 1; i < p.size(); i++)
        e += powi(p.cell_slope(i), power) * (g[i] - g[i-1]);
    if(!p.has_flat_tail() && detail::tail_decade_fraction(p, power) > 1e-3)
        throw Error("DIVERGENT_ENERGY", "profile tail is not negligible");
    double last_slope = p.cell_slope(p.size() - 1);
    return e + (-p.boundary_value()) * powi(last_slope, geom.n + 1);
}

/// Dirichlet-type norm int (w')^{n+2} dt entering Moser's lemma; identical
/// to the energy integrand for non-decreasing profiles.
inline double dirichlet_norm(const RadialProfile& w, int n)
{
    double s = 0;
    for(std::size_t i = 1; i < w.size(); i++)
        s += powi(w.cell_slope(i), n + 2) * (w.grid()[i] - w.grid()[i-1]);
    return s;
}

// ---------- fiber integrals ----------

/** vol * int_{-inf}^0 F(f(t)) e^{l t} dt.  The grid part uses 4-point
    Gauss-Legendre per cell on the PL interpolant; the tail below t_0 is the
    closed form vol * F(f(t_0)) e^{l t_0} / l (exact when a left_value is
    present, negligible-error otherwise since e^{l t_0} is tiny).
    Throws NONFINITE if F(f(t)) overflows on the grid. */
template<class F>
double fiber_integral(const RadialProfile& p, F&& fn, const ModelGeometry& geom)
{
    geom.validate();
    const auto& g = p.grid();
    const auto& f = p.values();
    const double l = geom.l;

    double total = 0;
    for(std::size_t i = 1; i < p.size(); i++) {
        double h = g[i] - g[i-1], c = 0.5 * (g[i] + g[i-1]);
        double slope = p.cell_slope(i);
        double acc = 0;
        for(int k = 0; k < 4; k++) {
            double t = c + 0.5 * h * GL4_NODES[k];
            double y = f[i-1] + slope * (t - g[i-1]);
            double v = fn(y) * std::exp(l * t);
            if(!std::isfinite(v))
                throw Error("NONFINITE", "fiber integrand overflow on the grid");
            acc += GL4_WEIGHTS[k] * v;
        }
        total += acc * 0.5 * h;
    }
    double tail_f = p.has_flat_tail() ? *p.left_value() : f.front();
    double tail = fn(tail_f) * std::exp(l * g.front()) / l;
    require(std::isfinite(tail), "NONFINITE", "fiber tail overflow");
    return geom.vol * (total + tail);
}

// ---------- Moser functional ----------

struct MoserValue {
    double value = 0;
    bool dirichlet_warning = false;  ///< Dirichlet norm exceeded 1 + eps
};

/** int_{-inf}^0 exp(k (-w)^{(n+2)/(n+1)}) e^{k t} dt for a non-decreasing
    profile w with w(0) = 0.  The tail is closed-form from the flat value.
    Warns (but still evaluates) when int (w')^{n+2} dt > 1 + 1e-6. */
inline MoserValue moser_functional(const RadialProfile& w, double k,
                                   const ModelGeometry& geom)
{
    geom.validate();
    require(k > 0, "CONFIG_ERROR", "Moser scaling parameter must be positive");
    require(w.is_boundary_normalized(1e-9), "CONFIG_ERROR", "Moser functional requires w(0) = 0");

    MoserValue out;
    out.dirichlet_warning = dirichlet_norm(w, geom.n) > 1.0 + 1e-6;

    const double p = static_cast<double>(geom.n + 2) / (geom.n + 1);
    auto integrand = [&](double t, double wval) {
        double v = std::exp(k * std::pow(std::max(0.0, -wval), p) + k * t);
        require(std::isfinite(v), "NONFINITE", "Moser integrand overflow");
        return v;
    };

    const auto& g = w.grid();
    const auto& f = w.values();
    double total = 0;
    for(std::size_t i = 1; i < w.size(); i++) {
        double h = g[i] - g[i-1], c = 0.5 * (g[i] + g[i-1]);
        double slope = w.cell_slope(i);
        double acc = 0;
        for(int q = 0; q < 4; q++) {
            double t = c + 0.5 * h * GL4_NODES[q];
            acc += GL4_WEIGHTS[q] * integrand(t, f[i-1] + slope * (t - g[i-1]));
        }
        total += acc * 0.5 * h;
    }
    double tail_w = w.has_flat_tail() ? *w.left_value() : f.front();
    total += std::exp(k * std::pow(std::max(0.0, -tail_w), p) + k * g.front()) / k;
    out.value = total;
    return out;
}

// ---------- convexity ----------

struct ConvexityReport {
    double min_second_difference = 0;  ///< min over interior nodes of f[t_{i-1},t_i,t_{i+1}]
    double epsilon = 0;                ///< threshold actually used (scale-relative)
    bool pass = false;
};

/// Second-divided-difference convexity certificate; pass iff the minimum is
/// >= -eps * max(1, |f|_inf).
inline ConvexityReport convexity_report(const RadialProfile& p, double eps = 1e-8)
{
    require(p.size() >= 3, "CONFIG_ERROR", "convexity check needs at least 3 nodes");
    const auto& g = p.grid();
    double scale = 1;
    for(double v : p.values()) scale = std::max(scale, std::abs(v));

    ConvexityReport rep;
    rep.epsilon = eps * scale;
    rep.min_second_difference = std::numeric_limits<double>::infinity();
    for(std::size_t i = 1; i + 1 < p.size(); i++) {
        double dd = (p.cell_slope(i+1) - p.cell_slope(i)) / (g[i+1] - g[i-1]);
        rep.min_second_difference = std::min(rep.min_second_difference, dd);
    }
    rep.pass = rep.min_second_difference >= -rep.epsilon;
    return rep;
}

// ---------- Legendre transform ----------

/// Convex conjugate f*(q) = sup_{t<=0} (q t - f(t)) sampled on a slope grid.
struct ConjugateProfile {
    std::vector<double> q_grid;
    std::vector<double> values;
};

/** Legendre transform of a convex non-decreasing boundary-normalized
    profile.  The supremum over the PL interpolant is attained at a grid
    node and the argmax is monotone in q, so a two-pointer sweep is exact.
    For f identically 0 the domain collapses to {0}. */
inline ConjugateProfile legendre(const RadialProfile& p, int q_points = 0)
{
    auto conv = convexity_report(p);
    require(conv.pass, "NONCONVEX_INPUT", "Legendre transform requires a convex profile");
    require(p.is_boundary_normalized(), "CONFIG_ERROR", "Legendre transform requires f(0) = 0");

    double qmax = p.max_slope();
    ConjugateProfile out;
    if(qmax <= 0) {          // f == 0: conjugate is {0} -> 0
        out.q_grid = {0.0};
        out.values = {0.0};
        return out;
    }
    if(q_points <= 1) q_points = static_cast<int>(p.size());
    out.q_grid.resize(static_cast<std::size_t>(q_points));
    out.values.resize(static_cast<std::size_t>(q_points));

    const auto& g = p.grid();
    const auto& f = p.values();
    std::size_t arg = 0;
    for(int j = 0; j < q_points; j++) {
        double q = qmax * static_cast<double>(j) / (q_points - 1);
        // argmax of q t - f(t) moves right as q grows
        while(arg + 1 < g.size() &&
              q * g[arg+1] - f[arg+1] >= q * g[arg] - f[arg])
            arg++;
        out.q_grid[static_cast<std::size_t>(j)] = q;
        out.values[static_cast<std::size_t>(j)] = q * g[arg] - f[arg];
    }
    return out;
}

/** f**(t) = sup_q (q t - f*(q)) back on a t-grid.  The output is PL with
    kinks at the tie points of adjacent active slopes; those ties are added
    to the grid so the returned profile is exactly the conjugate of the
    sampled f* (in particular its energy carries no kink-placement error). */
inline RadialProfile biconjugate(const ConjugateProfile& c, const std::vector<double>& t_grid)
{
    // pass 1: argmax index per node (monotone in t)
    std::vector<std::size_t> args(t_grid.size());
    {
        std::size_t arg = c.q_grid.size() - 1;
        for(std::size_t idx = t_grid.size(); idx-- > 0;) {
            double t = t_grid[idx];
            while(arg > 0 &&
                  c.q_grid[arg-1] * t - c.values[arg-1] >= c.q_grid[arg] * t - c.values[arg])
                arg--;
            args[idx] = arg;
        }
    }
    // pass 2: augment the grid with the exact kink locations between
    // consecutive active slopes
    std::vector<double> grid(t_grid);
    for(std::size_t idx = 0; idx + 1 < t_grid.size(); idx++) {
        for(std::size_t k = args[idx]; k < args[idx+1]; k++) {
            double dq = c.q_grid[k+1] - c.q_grid[k];
            if(dq <= 0) continue;
            double tie = (c.values[k+1] - c.values[k]) / dq;
            if(tie > t_grid[idx] && tie < t_grid[idx+1]) grid.push_back(tie);
        }
    }
    std::sort(grid.begin(), grid.end());
    double cell = (t_grid.back() - t_grid.front()) / static_cast<double>(t_grid.size() - 1);
    grid.erase(std::unique(grid.begin(), grid.end(),
        [cell](double a, double b){ return b - a < 1e-9 * cell; }), grid.end());
    if(std::abs(grid.back()) > 0) grid.back() = 0.0;

    std::vector<double> vals(grid.size());
    std::size_t arg = c.q_grid.size() - 1;
    for(std::size_t idx = grid.size(); idx-- > 0;) {
        double t = grid[idx];
        while(arg > 0 &&
              c.q_grid[arg-1] * t - c.values[arg-1] >= c.q_grid[arg] * t - c.values[arg])
            arg--;
        vals[idx] = c.q_grid[arg] * t - c.values[arg];
    }
    std::optional<double> lv;
    if(c.q_grid.front() == 0.0) lv = -c.values.front();
    if(lv && std::abs(*lv - vals.front()) > 1e-9 * std::max(1.0, std::abs(*lv))) lv.reset();
    return RadialProfile(std::move(grid), std::move(vals), lv);
}

// ---------- serialization ----------

/// CSV with a header line carrying left_value, then rows t,f
inline std::string profile_to_csv(const RadialProfile& p)
{
    std::ostringstream os;
    os << "# left_value=";
    if(p.has_flat_tail()) os << format_double(*p.left_value());
    else os << "none";
    os << "\nt,f\n";
    for(std::size_t i = 0; i < p.size(); i++)
        os << format_double(p.grid()[i]) << ',' << format_double(p.values()[i]) << '\n';
    return os.str();
}

inline RadialProfile profile_from_csv(const std::string& text)
{
    std::istringstream is(text);
    std::string line;
    std::optional<double> lv;
    std::vector<double> grid, vals;
    while(std::getline(is, line)) {
        if(line.empty()) continue;
        if(line.rfind("# left_value=", 0) == 0) {
            std::string v = line.substr(13);
            if(v != "none") lv = std::stod(v);
            continue;
        }
        if(line == "t,f") continue;
        auto comma = line.find(',');
        require(comma != std::string::npos, "PARSE_ERROR", "malformed profile CSV line: " + line);
        try {
            grid.push_back(std::stod(line.substr(0, comma)));
            vals.push_back(std::stod(line.substr(comma + 1)));
        } catch(const std::exception&) {
            throw Error("PARSE_ERROR", "malformed profile CSV line: " + line);
        }
    }
    require(!grid.empty(), "PARSE_ERROR", "profile CSV contains no data rows");
    return RadialProfile(std::move(grid), std::move(vals), lv);
}

} // namespace plurisym
