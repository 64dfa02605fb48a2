#pragma once
/** \file ma_oracle.hpp
    \brief Independent Monge-Ampere energy oracle for toric test functions.

    With dd^c normalized so that dd^c log|w|^2 has unit mass, the complex MA
    measure of a toric u(w) = g(x), x_j = log|w_j|^2, pushes forward to
    (n+1)! times the real MA measure of g.  Hence

        E(u) = ((n+1)!/vol) * int (-g) det D^2 g dx          (smooth g)

    evaluated by tensor midpoint quadrature over a truncated box with
    adaptive refinement of ball-boundary cells, Richardson extrapolation in
    the grid, and (for mollified PL input) linear extrapolation in the
    softmax temperature.

    For purely PL functions in C^2 (affine pieces plus the radial envelope
    A log Phi, itself PL as a profile), the real MA measure is computed
    exactly:

      * atoms at triple intersections of affine pieces, with mass the area
        of the convex hull of the active gradients;
      * a fan of mass along each piece-envelope kink curve, whose density in
        the simplex coordinate q is the constant A |(a_1+a_2) - A| / 2;
      * atoms at piece-piece-envelope triple points, with mass the area of
        the triangle {a_i, a_j, A q}.

    The two routes are independent; their agreement is the dual-oracle
    check used by the acceptance suite.
*/
#include "common.hpp"
#include "model.hpp"
#include "profile.hpp"
#include "toric.hpp"

namespace plurisym {

// ---------- mollified evaluation ----------

namespace ma_detail {

/// support lines (slope, intercept) of a convex PL profile, equal slopes merged
inline std::vector<std::array<double,2>> support_lines(const RadialProfile& p)
{
    std::vector<std::array<double,2>> lines;
    if(p.has_flat_tail())
        lines.push_back({0.0, *p.left_value()});
    for(std::size_t i = 1; i < p.size(); i++) {
        double s = p.cell_slope(i);
        double c = p.values()[i] - s * p.grid()[i];
        if(!lines.empty() && std::abs(lines.back()[0] - s) < 1e-12) {
            lines.back()[1] = std::max(lines.back()[1], c);
            continue;
        }
        lines.push_back({s, c});
    }
    return lines;
}

/// value, gradient and Hessian of the softmax mollification of
/// max(affine pieces, A log Phi); all derivatives are analytic.
class SoftmaxEvaluator {
public:
    SoftmaxEvaluator(std::vector<AffinePiece> pieces, std::optional<double> envelope,
                     double eps, std::size_t dim)
        : pieces_(std::move(pieces)), envelope_(envelope), eps_(eps), dim_(dim) {}

    /// returns g_eps(x); fills grad (size m) and hess (size m*m, row-major)
    double eval(std::span<const double> x, std::span<double> grad, std::span<double> hess) const
    {
        const std::size_t m = dim_;
        const std::size_t K = pieces_.size() + (envelope_ ? 1 : 0);
        thread_local std::vector<double> h, w, gr, q;
        h.resize(K); w.resize(K); gr.assign(K * m, 0.0); q.resize(m);

        double lse = log_sum_exp(x);
        for(std::size_t j = 0; j < m; j++) q[j] = std::exp(x[j] - lse);

        double hmax = -std::numeric_limits<double>::infinity();
        for(std::size_t k = 0; k < pieces_.size(); k++) {
            h[k] = pieces_[k].eval(x);
            for(std::size_t j = 0; j < m; j++) gr[k*m + j] = pieces_[k].slope[j];
            hmax = std::max(hmax, h[k]);
        }
        if(envelope_) {
            std::size_t k = pieces_.size();
            h[k] = *envelope_ * lse;
            for(std::size_t j = 0; j < m; j++) gr[k*m + j] = *envelope_ * q[j];
            hmax = std::max(hmax, h[k]);
        }

        double z = 0;
        for(std::size_t k = 0; k < K; k++) {
            w[k] = std::exp((h[k] - hmax) / eps_);
            z += w[k];
        }
        for(std::size_t k = 0; k < K; k++) w[k] /= z;
        double value = hmax + eps_ * std::log(z);

        for(std::size_t j = 0; j < m; j++) {
            double s = 0;
            for(std::size_t k = 0; k < K; k++) s += w[k] * gr[k*m + j];
            grad[j] = s;
        }
        // sum_k w_k H_k  +  (1/eps)(sum_k w_k grad_k grad_k^T - grad grad^T)
        for(std::size_t i = 0; i < m; i++)
            for(std::size_t j = i; j < m; j++) {
                double cov = 0;
                for(std::size_t k = 0; k < K; k++)
                    cov += w[k] * gr[k*m + i] * gr[k*m + j];
                cov = (cov - grad[i] * grad[j]) / eps_;
                double curv = 0;
                if(envelope_) {
                    double wenv = w[K-1];
                    curv = *envelope_ * wenv * ((i == j ? q[i] : 0.0) - q[i] * q[j]);
                }
                hess[i*m + j] = hess[j*m + i] = cov + curv;
            }
        return value;
    }

private:
    std::vector<AffinePiece> pieces_;
    std::optional<double> envelope_;
    double eps_;
    std::size_t dim_;
};

inline double det_small(std::span<const double> H, std::size_t m)
{
    if(m == 2) return H[0]*H[3] - H[1]*H[2];
    if(m == 3)
        return H[0]*(H[4]*H[8] - H[5]*H[7])
             - H[1]*(H[3]*H[8] - H[5]*H[6])
             + H[2]*(H[3]*H[7] - H[4]*H[6]);
    require(false, "CONFIG_ERROR", "MA quadrature supports ambient dimension 2 or 3");
    return 0;
}

} // namespace ma_detail

struct QuadratureConfig {
    int    cells = 800;            ///< base tensor resolution per axis (fine pass uses 2x)
    double box  = 16.0;            ///< integrate over [-box, 0]^{n+1} within the ball
    double eps  = 0.04;            ///< softmax temperature; second pass uses eps/2
    int    boundary_depth = 3;     ///< subdivision depth for cells crossing the boundary
    /// optional per-axis cell edges (non-uniform tensor grid); overrides
    /// cells/box when non-empty.  Used to put fine windows around MA
    /// structure that sits far down an axis.
    std::vector<std::vector<double>> axis_edges;
};

/// 1-d cell edges: fine spacing on [-bulk,0] and around each deep structure
/// coordinate, coarse bridges elsewhere
inline std::vector<double> make_axis_edges(double bulk, double dx_fine,
                                           std::vector<double> deep_coords,
                                           double window = 2.5, double dx_coarse = 0.5)
{
    std::vector<std::array<double,2>> fine = {{-bulk, 0.0}};
    for(double c : deep_coords)
        if(c < -bulk + window) fine.push_back({c - window, c + window});
    std::sort(fine.begin(), fine.end());
    std::vector<std::array<double,2>> merged;
    for(auto iv : fine) {
        if(!merged.empty() && iv[0] <= merged.back()[1] + dx_coarse)
            merged.back()[1] = std::max(merged.back()[1], iv[1]);
        else merged.push_back(iv);
    }
    std::vector<double> edges;
    auto fill = [&](double a, double b, double dx) {
        int nseg = std::max(1, static_cast<int>(std::ceil((b - a) / dx)));
        for(int i = 0; i < nseg; i++) edges.push_back(a + (b - a) * i / nseg);
    };
    for(std::size_t i = 0; i < merged.size(); i++) {
        fill(merged[i][0], std::min(merged[i][1], 0.0), dx_fine);
        if(i + 1 < merged.size()) fill(merged[i][1], merged[i+1][0], dx_coarse);
    }
    edges.push_back(0.0);
    return edges;
}

struct QuadratureResult {
    double value = 0;              ///< extrapolated energy
    double error_estimate = 0;     ///< grid + mollification extrapolation spread
    double total_mass = 0;         ///< extrapolated MA mass of the ball
    bool   negative_determinant = false;
    bool   truncation_warning = false;
    bool   mollified = false;
};

namespace ma_detail {

struct PassResult { double energy = 0, mass = 0, edge = 0; bool negdet = false; };

/// one midpoint pass over a (possibly non-uniform) tensor grid of cell
/// edges; Eval supplies value/grad/hess
template<class Eval>
PassResult quadrature_pass(const Eval& ev, std::size_t m,
                           const std::vector<std::vector<double>>& edges, int depth)
{
    PassResult out;
    std::vector<double> x(m), grad(m), hess(m*m);
    std::vector<std::size_t> idx(m, 0);
    std::vector<double> lo(m), sz(m), clo(m), csz(m);

    // recursive handling of a cell given its lower corner and per-axis sizes
    auto do_cell = [&](auto&& self, std::span<const double> cl, std::span<const double> cs,
                       int d, bool outer) -> void {
        // the ball region {sum e^{x_j} < 1} is increasing in every coordinate,
        // so corner tests classify cells exactly
        double hi_sum = 0, lo_sum = 0;
        for(std::size_t j = 0; j < m; j++) {
            hi_sum += std::exp(std::min(cl[j] + cs[j], 0.0));
            lo_sum += std::exp(cl[j]);
        }
        if(lo_sum >= 1.0) return;                    // fully outside
        bool crosses = hi_sum > 1.0;
        if(crosses && d > 0) {
            std::vector<double> nlo(m), nsz(m);
            for(int child = 0; child < (1 << m); child++) {
                for(std::size_t j = 0; j < m; j++) {
                    nsz[j] = 0.5 * cs[j];
                    nlo[j] = cl[j] + ((child >> j) & 1 ? nsz[j] : 0.0);
                }
                self(self, nlo, nsz, d - 1, outer);
            }
            return;
        }
        double mid_sum = 0;
        for(std::size_t j = 0; j < m; j++) {
            x[j] = cl[j] + 0.5 * cs[j];
            mid_sum += std::exp(x[j]);
        }
        if(crosses && mid_sum >= 1.0) return;        // midpoint-indicator at the last depth
        double g = ev.eval(x, grad, hess);
        double det = det_small(hess, m);
        if(det < -1e-8) out.negdet = true;
        double vol = 1;
        for(std::size_t j = 0; j < m; j++) vol *= cs[j];
        out.mass += det * vol;
        out.energy += (-g) * det * vol;
        if(outer) out.edge += std::abs((-g) * det) * vol;
    };

    while(true) {
        bool outer = false;
        for(std::size_t j = 0; j < m; j++) {
            lo[j] = edges[j][idx[j]];
            sz[j] = edges[j][idx[j] + 1] - edges[j][idx[j]];
            outer = outer || idx[j] == 0;
        }
        do_cell(do_cell, lo, sz, depth, outer);
        std::size_t j = 0;
        while(j < m && ++idx[j] == edges[j].size() - 1) { idx[j] = 0; j++; }
        if(j == m) break;
    }
    return out;
}

inline std::vector<double> halved_edges(const std::vector<double>& e)
{
    std::vector<double> out;
    out.reserve(2 * e.size());
    for(std::size_t i = 0; i + 1 < e.size(); i++) {
        out.push_back(e[i]);
        out.push_back(0.5 * (e[i] + e[i+1]));
    }
    out.push_back(e.back());
    return out;
}

template<class Eval>
QuadratureResult richardson_in_grid(const Eval& ev, std::size_t m, const QuadratureConfig& cfg)
{
    std::vector<std::vector<double>> edges = cfg.axis_edges;
    if(edges.empty()) {
        std::vector<double> e(static_cast<std::size_t>(cfg.cells) + 1);
        for(int i = 0; i <= cfg.cells; i++)
            e[static_cast<std::size_t>(i)] = -cfg.box * (1.0 - static_cast<double>(i) / cfg.cells);
        e.back() = 0.0;
        edges.assign(m, e);
    }
    require(edges.size() == m, "CONFIG_ERROR", "axis_edges dimension mismatch");
    std::vector<std::vector<double>> fine_edges(m);
    for(std::size_t j = 0; j < m; j++) fine_edges[j] = halved_edges(edges[j]);

    PassResult coarse = quadrature_pass(ev, m, edges, cfg.boundary_depth);
    PassResult fine   = quadrature_pass(ev, m, fine_edges, cfg.boundary_depth);
    QuadratureResult out;
    out.value = (4.0 * fine.energy - coarse.energy) / 3.0;   // midpoint rule is O(h^2)
    out.total_mass = (4.0 * fine.mass - coarse.mass) / 3.0;
    out.error_estimate = std::abs(fine.energy - coarse.energy) / 3.0;
    out.negative_determinant = coarse.negdet || fine.negdet;
    out.truncation_warning = fine.edge > 1e-3 * std::max(std::abs(fine.energy), 1e-12);
    return out;
}

} // namespace ma_detail

/** MA energy by quadrature.  Smooth inputs (with an analytic Hessian) are
    integrated directly with grid extrapolation; PL inputs are softmax
    mollified at cfg.eps and cfg.eps/2 with linear extrapolation to eps = 0.
    Flags NEGATIVE_DETERMINANT (non-convexity) and TRUNCATION_WARNING (box
    tail above 1e-3 relative) on the result. */
inline QuadratureResult energy_quadrature(const ToricTestFunction& u, const ModelGeometry& geom,
                                          const QuadratureConfig& cfg = {})
{
    geom.validate();
    require(u.dim() == geom.ambient_dim(), "CONFIG_ERROR", "dimension mismatch");
    const std::size_t m = static_cast<std::size_t>(u.dim());
    require(m == 2 || m == 3, "CONFIG_ERROR", "quadrature supports n = 1 or n = 2");

    double factorial = 1;
    for(int k = 2; k <= geom.n + 1; k++) factorial *= k;

    if(u.kind() == ToricTestFunction::Kind::smooth) {
        const auto& g = u.smooth_form();
        require(static_cast<bool>(g.hessian), "CONFIG_ERROR",
                "smooth quadrature input needs an analytic Hessian");
        struct DirectEval {
            const SmoothConvex* g;
            double eval(std::span<const double> x, std::span<double> grad,
                        std::span<double> hess) const
            {
                g->gradient(x, grad);
                g->hessian(x, hess);
                return g->value(x);
            }
        } ev{&g};
        auto out = ma_detail::richardson_in_grid(ev, m, cfg);
        out.value *= factorial / geom.vol;
        out.total_mass *= factorial;
        out.error_estimate *= factorial / geom.vol;
        return out;
    }

    // PL or radial-PL input: softmax mollification + eps extrapolation
    std::vector<AffinePiece> pieces;
    std::optional<double> env = u.envelope();
    if(u.kind() == ToricTestFunction::Kind::pl) {
        pieces = u.pieces();
    } else {
        // radial PL profile: mollify in the profile variable t = log Phi over
        // the support lines of the convex profile (a radial envelope is one
        // more support line A*t)
        auto lines = ma_detail::support_lines(u.profile());
        if(env) lines.push_back({*env, 0.0});
        auto make_radial = [lines](double eps) {
            auto f = [lines, eps](double t) {
                double hmax = -std::numeric_limits<double>::infinity();
                for(const auto& ln : lines) hmax = std::max(hmax, ln[0]*t + ln[1]);
                double z = 0;
                for(const auto& ln : lines) z += std::exp((ln[0]*t + ln[1] - hmax)/eps);
                return hmax + eps * std::log(z);
            };
            auto moments = [lines, eps](double t, double& m1, double& m2) {
                double hmax = -std::numeric_limits<double>::infinity();
                for(const auto& ln : lines) hmax = std::max(hmax, ln[0]*t + ln[1]);
                double z = 0, s1 = 0, s2 = 0;
                for(const auto& ln : lines) {
                    double w = std::exp((ln[0]*t + ln[1] - hmax)/eps);
                    z += w; s1 += w * ln[0]; s2 += w * ln[0]*ln[0];
                }
                m1 = s1 / z;
                m2 = s2 / z;
            };
            auto fp = [moments](double t) { double m1, m2; moments(t, m1, m2); return m1; };
            auto fpp = [moments, eps](double t) {
                double m1, m2; moments(t, m1, m2); return (m2 - m1*m1) / eps;
            };
            return radial_smooth(f, fp, fpp);
        };
        struct RadialEval {
            SmoothConvex g;
            double eval(std::span<const double> x, std::span<double> grad,
                        std::span<double> hess) const
            {
                g.gradient(x, grad);
                g.hessian(x, hess);
                return g.value(x);
            }
        };
        RadialEval ev_c{make_radial(cfg.eps)}, ev_f{make_radial(cfg.eps / 2)};
        auto rc = ma_detail::richardson_in_grid(ev_c, m, cfg);
        auto rf = ma_detail::richardson_in_grid(ev_f, m, cfg);
        QuadratureResult out;
        out.mollified = true;
        out.value = (2.0 * rf.value - rc.value) * factorial / geom.vol;
        out.total_mass = (2.0 * rf.total_mass - rc.total_mass) * factorial;
        out.error_estimate = (std::abs(rf.value - rc.value) + rf.error_estimate)
                           * factorial / geom.vol;
        out.negative_determinant = rc.negative_determinant || rf.negative_determinant;
        out.truncation_warning = rf.truncation_warning;
        return out;
    }

    ma_detail::SoftmaxEvaluator ev_c(pieces, env, cfg.eps, m);
    ma_detail::SoftmaxEvaluator ev_f(pieces, env, cfg.eps / 2, m);
    auto rc = ma_detail::richardson_in_grid(ev_c, m, cfg);
    auto rf = ma_detail::richardson_in_grid(ev_f, m, cfg);
    QuadratureResult out;
    out.mollified = true;
    out.value = (2.0 * rf.value - rc.value) * factorial / geom.vol;
    out.total_mass = (2.0 * rf.total_mass - rc.total_mass) * factorial;
    out.error_estimate = (std::abs(rf.value - rc.value) + rf.error_estimate)
                       * factorial / geom.vol;
    out.negative_determinant = rc.negative_determinant || rf.negative_determinant;
    out.truncation_warning = rf.truncation_warning;
    return out;
}

// ---------- exact PL machinery in C^2 ----------

/// point mass of the real MA measure of a PL toric function
struct MAAtom {
    std::vector<double> location;
    double mass = 0;    ///< Lebesgue area of the subgradient image
    double value = 0;   ///< g at the vertex
};

namespace ma_detail {

inline double hull_area_2d(std::vector<std::array<double,2>> pts)
{
    // monotone chain; small inputs only
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end(),
        [](const auto& a, const auto& b){
            return std::abs(a[0]-b[0]) < 1e-14 && std::abs(a[1]-b[1]) < 1e-14; }),
        pts.end());
    if(pts.size() < 3) return 0.0;
    auto cross = [](const std::array<double,2>& o, const std::array<double,2>& a,
                    const std::array<double,2>& b) {
        return (a[0]-o[0])*(b[1]-o[1]) - (a[1]-o[1])*(b[0]-o[0]);
    };
    std::vector<std::array<double,2>> hull(2 * pts.size());
    std::size_t k = 0;
    for(std::size_t i = 0; i < pts.size(); i++) {
        while(k >= 2 && cross(hull[k-2], hull[k-1], pts[i]) <= 0) k--;
        hull[k++] = pts[i];
    }
    std::size_t lower = k + 1;
    for(std::size_t i = pts.size() - 1; i-- > 0;) {
        while(k >= lower && cross(hull[k-2], hull[k-1], pts[i]) <= 0) k--;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    double area = 0;
    for(std::size_t i = 0; i < hull.size(); i++) {
        const auto& a = hull[i];
        const auto& b = hull[(i+1) % hull.size()];
        area += a[0]*b[1] - a[1]*b[0];
    }
    return 0.5 * std::abs(area);
}

inline double pl_value(const std::vector<AffinePiece>& pieces, std::span<const double> x)
{
    double v = -std::numeric_limits<double>::infinity();
    for(const auto& p : pieces) v = std::max(v, p.eval(x));
    return v;
}

} // namespace ma_detail

/** Enumerates the atoms of the real MA measure of a PL toric function in
    C^2: triple intersections of affine pieces that are active (above all
    other pieces and strictly above the envelope) and lie inside the ball.
    Vertices with collinear active gradients carry no mass and are dropped
    (the DEGENERATE_VERTEX case). */
inline std::vector<MAAtom> pl_atoms_2d(const ToricTestFunction& u, const ModelGeometry& geom)
{
    geom.validate();
    require(geom.n == 1 && u.dim() == 2, "CONFIG_ERROR", "pl_atoms_2d requires the ambient C^2");
    require(u.kind() == ToricTestFunction::Kind::pl, "CONFIG_ERROR",
            "pl_atoms_2d requires a piecewise-linear function");
    const auto& pieces = u.pieces();
    const double tol = 1e-9;

    std::vector<MAAtom> atoms;
    std::vector<std::vector<std::size_t>> seen_active_sets;
    std::array<double,2> x{};
    for(std::size_t i = 0; i < pieces.size(); i++)
        for(std::size_t j = i+1; j < pieces.size(); j++)
            for(std::size_t k = j+1; k < pieces.size(); k++) {
                double a11 = pieces[i].slope[0] - pieces[j].slope[0];
                double a12 = pieces[i].slope[1] - pieces[j].slope[1];
                double a21 = pieces[i].slope[0] - pieces[k].slope[0];
                double a22 = pieces[i].slope[1] - pieces[k].slope[1];
                double det = a11*a22 - a12*a21;
                if(std::abs(det) < 1e-12) continue;
                double r1 = pieces[j].offset - pieces[i].offset;
                double r2 = pieces[k].offset - pieces[i].offset;
                x[0] = (r1*a22 - r2*a12) / det;
                x[1] = (a11*r2 - a21*r1) / det;

                double v = pieces[i].eval(x);
                double scale = std::max(1.0, std::abs(v));
                if(ma_detail::pl_value(pieces, x) > v + tol * scale) continue;  // not active
                double lse = log_sum_exp(x);
                if(lse >= 0) continue;                                          // outside the ball
                if(u.envelope() && *u.envelope() * lse >= v - tol * scale) continue;

                std::vector<std::size_t> active;
                std::vector<std::array<double,2>> grads;
                for(std::size_t m = 0; m < pieces.size(); m++)
                    if(pieces[m].eval(x) >= v - tol * scale) {
                        active.push_back(m);
                        grads.push_back({pieces[m].slope[0], pieces[m].slope[1]});
                    }
                bool dup = false;
                for(const auto& s : seen_active_sets) dup = dup || s == active;
                if(dup) continue;
                seen_active_sets.push_back(active);

                double mass = ma_detail::hull_area_2d(grads);
                if(mass < 1e-14) continue;       // degenerate vertex: collinear gradients
                atoms.push_back(MAAtom{{x[0], x[1]}, mass, v});
            }
    return atoms;
}

/// exact PL energy decomposition in C^2
struct PlEnergyResult {
    double atom_energy = 0;        ///< affine vertices (already x (n+1)!/vol)
    double envelope_energy = 0;    ///< kink arcs + envelope triple points
    double total = 0;
    double total_mass = 0;         ///< MA mass of the ball
    std::vector<MAAtom> atoms;
    std::vector<MAAtom> envelope_vertices;
};

/** Exact MA energy of a PL toric function (with optional radial envelope)
    in C^2, by enumerating all singular strata of the subgradient map. */
inline PlEnergyResult energy_pl_2d(const ToricTestFunction& u, const ModelGeometry& geom)
{
    geom.validate();
    require(geom.n == 1 && u.dim() == 2, "CONFIG_ERROR", "energy_pl_2d requires the ambient C^2");
    require(u.kind() == ToricTestFunction::Kind::pl, "CONFIG_ERROR",
            "energy_pl_2d requires a piecewise-linear function");
    const auto& pieces = u.pieces();
    const double tol = 1e-9;

    PlEnergyResult out;
    out.atoms = pl_atoms_2d(u, geom);
    double raw_energy = 0, raw_mass = 0;
    for(const auto& a : out.atoms) {
        raw_energy += (-a.value) * a.mass;
        raw_mass += a.mass;
    }

    if(u.envelope()) {
        const double A = *u.envelope();

        // piece-envelope kink arcs, parametrized by the simplex coordinate q:
        // x(q) = (s + log q, s + log(1-q)) with s solving h_k(x) = A s.
        auto arc_point = [&](const AffinePiece& p, double q, std::array<double,2>& xq) -> bool {
            double l1 = std::log(q), l2 = std::log1p(-q);
            double denom = p.slope[0] + p.slope[1] - A;
            double s = (-p.offset - p.slope[0]*l1 - p.slope[1]*l2) / denom;
            xq = {s + l1, s + l2};
            return s < 0;
        };
        auto arc_active = [&](const AffinePiece& p, std::size_t self, double q) -> bool {
            std::array<double,2> xq;
            if(!arc_point(p, q, xq)) return false;
            double v = p.eval(xq);
            double scale = std::max(1.0, std::abs(v));
            for(std::size_t m = 0; m < pieces.size(); m++)
                if(m != self && pieces[m].eval(xq) > v + tol * scale) return false;
            return true;
        };

        const int NQ = 8192;
        for(std::size_t k = 0; k < pieces.size(); k++) {
            double denom = pieces[k].slope[0] + pieces[k].slope[1] - A;
            if(std::abs(denom) < 1e-10) continue;   // radial-parallel piece: no fan area
            double density = 0.5 * A * std::abs(denom);
            // midpoint scan with bisection refinement of activity transitions
            double prev_q = 0.0;
            bool prev_act = false;
            double e_acc = 0, m_acc = 0;
            auto add_segment = [&](double qa, double qb) {
                if(qb <= qa) return;
                int panels = std::max(4, static_cast<int>((qb - qa) * 256));
                for(int t = 0; t < panels; t++) {
                    double q = qa + (t + 0.5) * (qb - qa) / panels;
                    std::array<double,2> xq;
                    arc_point(pieces[k], q, xq);
                    double val = pieces[k].eval(xq);
                    e_acc += (-val) * density * (qb - qa) / panels;
                    m_acc += density * (qb - qa) / panels;
                }
            };
            double seg_start = 0;
            for(int t = 0; t <= NQ; t++) {
                double q = (t + 0.5) / (NQ + 1);
                bool act = arc_active(pieces[k], k, q);
                if(act != prev_act) {
                    // bisect the transition
                    double lo = prev_q, hi = q;
                    for(int it = 0; it < 50; it++) {
                        double mid = 0.5 * (lo + hi);
                        if(arc_active(pieces[k], k, mid) == prev_act) lo = mid; else hi = mid;
                    }
                    double edge = 0.5 * (lo + hi);
                    if(prev_act) add_segment(seg_start, edge);
                    else seg_start = edge;
                    prev_act = act;
                }
                prev_q = q;
            }
            if(prev_act) add_segment(seg_start, 1.0);
            raw_energy += e_acc;
            raw_mass += m_acc;
        }

        // piece-piece-envelope triple points: roots of the concave function
        // h_i - A*LSE along the line {h_i = h_j}
        for(std::size_t i = 0; i < pieces.size(); i++)
            for(std::size_t j = i+1; j < pieces.size(); j++) {
                double d1 = pieces[i].slope[0] - pieces[j].slope[0];
                double d2 = pieces[i].slope[1] - pieces[j].slope[1];
                double nn = d1*d1 + d2*d2;
                if(nn < 1e-20) continue;
                double rhs = pieces[j].offset - pieces[i].offset;
                std::array<double,2> x0 = {d1 * rhs / nn, d2 * rhs / nn};
                std::array<double,2> dir = {-d2 / std::sqrt(nn), d1 / std::sqrt(nn)};
                auto phi = [&](double tau) {
                    std::array<double,2> xt = {x0[0] + tau*dir[0], x0[1] + tau*dir[1]};
                    return pieces[i].eval(xt) - A * log_sum_exp(xt);
                };
                // phi is concave: bracket roots around the maximum
                const double TMAX = 80.0;
                double best_tau = 0, best = -std::numeric_limits<double>::infinity();
                for(int t = 0; t <= 400; t++) {
                    double tau = -TMAX + 2.0 * TMAX * t / 400;
                    double v = phi(tau);
                    if(v > best) { best = v; best_tau = tau; }
                }
                if(best < 0) continue;   // piece never reaches the envelope on this line
                for(int side = 0; side < 2; side++) {
                    double lo = best_tau, hi = side == 0 ? -TMAX : TMAX;
                    if(phi(hi) >= 0) continue;   // no sign change within range
                    for(int it = 0; it < 80; it++) {
                        double mid = 0.5 * (lo + hi);
                        if(phi(mid) >= 0) lo = mid; else hi = mid;
                    }
                    double tau = 0.5 * (lo + hi);
                    std::array<double,2> xt = {x0[0] + tau*dir[0], x0[1] + tau*dir[1]};
                    double v = pieces[i].eval(xt);
                    double scale = std::max(1.0, std::abs(v));
                    if(v >= -tol) continue;                       // on/outside the boundary
                    bool active = true;
                    for(std::size_t m = 0; m < pieces.size(); m++)
                        if(m != i && m != j && pieces[m].eval(xt) > v + tol * scale)
                            active = false;
                    if(!active) continue;
                    double lse = log_sum_exp(xt);
                    double q1 = std::exp(xt[0] - lse);
                    double mass = ma_detail::hull_area_2d({
                        {pieces[i].slope[0], pieces[i].slope[1]},
                        {pieces[j].slope[0], pieces[j].slope[1]},
                        {A * q1, A * (1 - q1)}});
                    if(mass < 1e-14) continue;
                    out.envelope_vertices.push_back(MAAtom{{xt[0], xt[1]}, mass, v});
                    raw_energy += (-v) * mass;
                    raw_mass += mass;
                }
            }
    }

    double atom_part = 0;
    for(const auto& a : out.atoms) atom_part += (-a.value) * a.mass;
    const double factor = 2.0;   // (n+1)! with n = 1
    out.atom_energy = factor * atom_part / geom.vol;
    out.total = factor * raw_energy / geom.vol;
    out.envelope_energy = out.total - out.atom_energy;
    out.total_mass = factor * raw_mass;
    return out;
}

/// dual-route energy with the 5% consistency gate
struct DualEnergy {
    PlEnergyResult pl;
    QuadratureResult quadrature;
    double relative_gap = 0;
};

inline DualEnergy dual_energy_2d(const ToricTestFunction& u, const ModelGeometry& geom,
                                 QuadratureConfig cfg = {})
{
    DualEnergy out;
    out.pl = energy_pl_2d(u, geom);
    // atoms can sit far down an axis (a shallow piece crossing the floor);
    // give the quadrature fine windows exactly there instead of a huge box
    std::array<std::vector<double>,2> deep;
    for(const auto& a : out.pl.atoms)
        for(int j = 0; j < 2; j++) deep[static_cast<std::size_t>(j)].push_back(a.location[static_cast<std::size_t>(j)]);
    for(const auto& a : out.pl.envelope_vertices)
        for(int j = 0; j < 2; j++) deep[static_cast<std::size_t>(j)].push_back(a.location[static_cast<std::size_t>(j)]);
    double dx = cfg.box / cfg.cells;
    cfg.axis_edges = {make_axis_edges(cfg.box, dx, deep[0]),
                      make_axis_edges(cfg.box, dx, deep[1])};
    out.quadrature = energy_quadrature(u, geom, cfg);
    out.relative_gap = std::abs(out.pl.total - out.quadrature.value)
                     / std::max({std::abs(out.pl.total), std::abs(out.quadrature.value), 0.02});
    // the mollified route reports its own extrapolation spread; kinks within
    // O(eps) of the ball boundary converge slowly and honestly say so
    double gate = std::max(0.05 * std::max({std::abs(out.pl.total),
                                            std::abs(out.quadrature.value), 0.02}),
                           3.0 * out.quadrature.error_estimate);
    if(std::abs(out.pl.total - out.quadrature.value) > gate)
        throw Error("INCONSISTENT_ORACLES",
                    "atomic and mollified MA energies differ by "
                    + std::to_string(100 * out.relative_gap) + "%");
    return out;
}

} // namespace plurisym
