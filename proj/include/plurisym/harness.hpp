#pragma once
/** \file harness.hpp
    \brief Run configuration, the acceptance-criteria suite, report and
           plot-data emission.

    Everything the suite does is a pure function of (config, seed): shard
    substreams are derived deterministically, criterion tasks write into
    pre-assigned slots regardless of scheduling, and reports never include
    wall-clock data, so two runs with the same configuration produce
    byte-identical JSON.
*/
#include "common.hpp"
#include "model.hpp"
#include "profile.hpp"
#include "toric.hpp"
#include "symmetrization.hpp"
#include "ma_oracle.hpp"
#include "variation.hpp"
#include "inequalities.hpp"

#include <json.hpp>

#include <atomic>
#include <fstream>
#include <functional>
#include <map>
#include <thread>

namespace plurisym {

inline constexpr const char* VERSION = "0.1.0";

// ---------- configuration ----------

struct RunConfig {
    int n = 1;
    std::vector<double> l_values = {0.5, 1.0, 2.0};
    std::int64_t samples = 1000000;
    std::uint64_t seed = 20260811;
    double grid_tmin = -20.0;
    int grid_points = 2001;
    int corpus_size = 20;
    int shards = 16;
    int threads = 0;                        ///< 0 = hardware up to 8
    int quad_cells = 700;                   ///< MA quadrature base resolution
    std::optional<double> moser_C_override;
    std::map<std::string, double> tolerances;
    std::string out_dir = ".";

    void validate() const
    {
        require(n >= 1, "CONFIG_ERROR", "n must be >= 1");
        require(!l_values.empty(), "CONFIG_ERROR", "at least one l value is required");
        for(double l : l_values)
            require(l > 0 && l <= n + 1, "CONFIG_ERROR",
                    "every l must lie in (0, n+1]; got " + std::to_string(l));
        require(samples >= 1000, "CONFIG_ERROR", "samples must be >= 1000");
        require(grid_points >= 101, "CONFIG_ERROR", "grid_points must be >= 101");
        require(grid_tmin < 0, "CONFIG_ERROR", "grid_tmin must be negative");
        require(corpus_size >= 1, "CONFIG_ERROR", "corpus_size must be >= 1");
        require(shards >= 1, "CONFIG_ERROR", "shards must be >= 1");
        require(quad_cells >= 50, "CONFIG_ERROR", "quad_cells must be >= 50");
        if(moser_C_override) require(*moser_C_override > 1, "CONFIG_ERROR",
                                     "moser_C_override must exceed 1");
    }

    double tol(const std::string& name, double fallback) const
    {
        auto it = tolerances.find(name);
        return it == tolerances.end() ? fallback : it->second;
    }

    std::vector<double> grid() const { return standard_grid(grid_tmin, grid_points); }
    SamplerConfig sampler(std::uint64_t stream) const
    {
        return SamplerConfig{samples, mix_seed(seed, stream), shards};
    }
    int worker_count() const
    {
        if(threads > 0) return threads;
        unsigned hw = std::thread::hardware_concurrency();
        return static_cast<int>(std::min(hw == 0 ? 4u : hw, 8u));
    }
};

/// flat key = value file; '#' starts a comment
inline RunConfig config_from_file(const std::string& path)
{
    std::ifstream in(path);
    require(static_cast<bool>(in), "CONFIG_ERROR", "cannot open config file " + path);
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while(std::getline(in, line)) {
        lineno++;
        auto hash = line.find('#');
        if(hash != std::string::npos) line.erase(hash);
        auto eq = line.find('=');
        if(line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        require(eq != std::string::npos, "CONFIG_ERROR",
                "config line " + std::to_string(lineno) + " is not key = value");
        auto trim = [](std::string s) {
            auto b = s.find_first_not_of(" \t\r\n");
            auto e = s.find_last_not_of(" \t\r\n");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        try {
            if(key == "n") cfg.n = std::stoi(val);
            else if(key == "l_values") {
                cfg.l_values.clear();
                std::istringstream is(val);
                std::string tok;
                while(std::getline(is, tok, ',')) cfg.l_values.push_back(std::stod(tok));
            }
            else if(key == "samples") cfg.samples = std::stoll(val);
            else if(key == "seed") cfg.seed = std::stoull(val);
            else if(key == "grid_tmin") cfg.grid_tmin = std::stod(val);
            else if(key == "grid_points") cfg.grid_points = std::stoi(val);
            else if(key == "corpus_size") cfg.corpus_size = std::stoi(val);
            else if(key == "shards") cfg.shards = std::stoi(val);
            else if(key == "threads") cfg.threads = std::stoi(val);
            else if(key == "quad_cells") cfg.quad_cells = std::stoi(val);
            else if(key == "moser_C_override") cfg.moser_C_override = std::stod(val);
            else if(key == "out_dir") cfg.out_dir = val;
            else if(key.rfind("tolerance.", 0) == 0)
                cfg.tolerances[key.substr(10)] = std::stod(val);
            else throw Error("CONFIG_ERROR", "unknown config key " + key);
        } catch(const Error&) {
            throw;
        } catch(const std::exception&) {
            throw Error("CONFIG_ERROR", "cannot parse value for key " + key);
        }
    }
    return cfg;
}

inline nlohmann::ordered_json config_to_json(const RunConfig& cfg)
{
    nlohmann::ordered_json j;
    j["n"] = cfg.n;
    j["l_values"] = cfg.l_values;
    j["samples"] = cfg.samples;
    j["seed"] = cfg.seed;
    j["grid_tmin"] = cfg.grid_tmin;
    j["grid_points"] = cfg.grid_points;
    j["corpus_size"] = cfg.corpus_size;
    j["shards"] = cfg.shards;
    j["quad_cells"] = cfg.quad_cells;
    if(cfg.moser_C_override) j["moser_C_override"] = *cfg.moser_C_override;
    if(!cfg.tolerances.empty()) j["tolerances"] = cfg.tolerances;
    return j;
}

// ---------- small worker pool ----------

/// runs fn(0..count-1) on a fixed number of threads; tasks must write only
/// into their own slots, so the result is schedule-independent
template<class F>
void parallel_for(int count, int threads, F&& fn)
{
    if(threads <= 1 || count <= 1) {
        for(int i = 0; i < count; i++) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for(int t = 0; t < std::min(threads, count); t++)
        pool.emplace_back([&]() {
            while(true) {
                int i = next.fetch_add(1);
                if(i >= count) break;
                try { fn(i); }
                catch(...) { errors[static_cast<std::size_t>(i)] = std::current_exception(); }
            }
        });
    for(auto& th : pool) th.join();
    for(auto& e : errors)
        if(e) std::rethrow_exception(e);
}

// ---------- criterion results ----------

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    nlohmann::ordered_json data;
};

inline nlohmann::ordered_json criterion_to_json(const CriterionResult& c)
{
    nlohmann::ordered_json j;
    j["id"] = c.id;
    j["name"] = c.name;
    j["pass"] = c.pass;
    j["detail"] = c.detail;
    if(!c.data.is_null()) j["data"] = c.data;
    return j;
}

inline nlohmann::ordered_json inequality_to_json(const InequalityResult& r)
{
    nlohmann::ordered_json j;
    j["name"] = r.name;
    j["lhs"] = r.lhs;
    j["rhs"] = r.rhs;
    j["margin"] = r.margin;
    j["pass"] = r.pass;
    if(r.not_applicable) j["not_applicable"] = true;
    j["inputs_digest"] = r.inputs_digest;
    return j;
}

// ---------- shared corpus state ----------

namespace harness_detail {

struct CorpusItemState {
    ToricTestFunction u;
    double exact_energy = 0;            ///< PL-atom route (n = 1)
    double quadrature_energy = 0;
    double oracle_gap = 0;              ///< relative gap of the dual oracle
    bool oracle_consistent = false;
    // per l: distribution-derived quantities
    std::vector<double> l_values;
    std::vector<double> e_hat;          ///< E(u-hat) per l
    std::vector<double> knot_z;
    std::vector<std::size_t> knot_draws;
    std::vector<bool> grid_convex;
    std::vector<bool> log_concave;
    std::vector<double> log_concavity_z;
    std::vector<bool> monotone;
    std::vector<std::size_t> level_counts;
    std::vector<double> mt_l;
    std::vector<MtToricResult> mt;
};

inline std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

} // namespace harness_detail

// ---------- the acceptance suite ----------

struct SuiteReport {
    std::vector<CriterionResult> criteria;
    MoserConstant moser;
    nlohmann::ordered_json json;
    bool all_pass = false;
};

inline SuiteReport run_suite_core(const RunConfig& cfg);

namespace criteria {

/// 1. ball volume: MC sublevel mass at t -> 0- equals vol/l
inline CriterionResult ball_volume_check(const RunConfig& cfg)
{
    CriterionResult out{1, "ball_volume", true, "", {}};
    auto items = nlohmann::ordered_json::array();
    double max_frac = 0;
    for(int n : {1, 2})
        for(double l : {0.5, 1.0, 2.0}) {
            ModelGeometry geom(n, l);
            auto u = [](std::span<const double> x){ return log_sum_exp(x); };
            auto est = sublevel_volume(u, -1e-9, geom, cfg.sampler(0x01));
            double truth = ball_volume(geom);
            bool ok = std::abs(est.value - truth) <= 3 * est.stderror + 1e-12
                   && est.stderror < cfg.tol("ball_volume_stderr_frac", 0.005) * truth;
            // a genuine interior probe of the radial law as well
            auto probe = sublevel_volume(u, -0.5, geom, cfg.sampler(0x02));
            double ptruth = truth * std::exp(-0.5 * l);
            ok = ok && std::abs(probe.value - ptruth) <= 3 * probe.stderror;
            max_frac = std::max(max_frac, est.stderror / truth);
            items.push_back({{"n", n}, {"l", l}, {"mc", est.value}, {"closed_form", truth},
                             {"stderr", est.stderror}, {"pass", ok}});
            out.pass = out.pass && ok;
        }
    out.detail = "max stderr fraction " + harness_detail::fmt(max_frac);
    out.data = items;
    return out;
}

/// 2. radial fixed point of symmetrization
inline CriterionResult radial_fixed_point(const RunConfig& cfg)
{
    CriterionResult out{2, "radial_fixed_point", true, "", {}};
    ModelGeometry geom(1, 1.0);
    auto grid = cfg.grid();
    double spacing = (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1);

    struct Case { std::string name; RadialProfile p; };
    std::vector<Case> cases;
    for(double a : {0.5, 1.0, 2.0, 5.0})
        cases.push_back({"trunclog_a=" + harness_detail::fmt(a), truncated_log_profile(a, grid)});
    cases.push_back({"exp", exp_profile(grid)});

    auto items = nlohmann::ordered_json::array();
    for(const auto& c : cases) {
        auto u = ToricTestFunction::radial(2, c.p);
        double min_u = c.p.has_flat_tail() ? *c.p.left_value() : c.p.values().front();
        auto levels = two_sided_levels(min_u, 64);
        auto d = distribution(u, geom, levels, cfg.sampler(0x20 + items.size()));
        auto sym = symmetrize(d, geom, grid);

        double sup = 0;
        for(double t : grid) sup = std::max(sup, std::abs(sym.profile(t) - c.p(t)));
        // propagated bound: knot ordinate noise times the local slope
        double bound = 0;
        for(std::size_t k = 0; k + 1 < sym.knot_y.size(); k++) {
            if(sym.knot_level[k] == static_cast<std::size_t>(-1)) continue;
            std::size_t j = sym.knot_level[k];
            double slope = (sym.knot_t[k+1] - sym.knot_t[k]) / (sym.knot_y[k+1] - sym.knot_y[k]);
            double se_y = std::sqrt(std::max(0.0, d.cov_y(j, j, geom.l)));
            bound = std::max(bound, slope * 3.0 * se_y);
        }
        double e_true = energy(c.p, geom).value;
        double e_hat = energy(sym.profile, geom).value;
        bool ok = sup <= spacing + bound
               && std::abs(e_hat - e_true) <= cfg.tol("fixed_point_energy_rel", 0.01)
                                              * std::max(e_true, 1e-6);
        items.push_back({{"profile", c.name}, {"sup_error", sup},
                         {"tolerance", spacing + bound},
                         {"energy", e_true}, {"energy_recovered", e_hat}, {"pass", ok}});
        out.pass = out.pass && ok;
    }
    out.detail = std::to_string(cases.size()) + " radial profiles";
    out.data = items;
    return out;
}

/// 3. energy identity: MA quadrature vs the radial reduction
inline CriterionResult energy_identity(const RunConfig& cfg)
{
    CriterionResult out{3, "energy_identity", true, "", {}};
    auto items = nlohmann::ordered_json::array();
    for(int n : {1, 2}) {
        ModelGeometry geom(n, 1.0);
        QuadratureConfig qc;
        qc.cells = n == 1 ? cfg.quad_cells : std::max(90, cfg.quad_cells / 6);
        qc.box = 14.0;

        // smooth reference: f = e^t - 1, exact energy 1/(n+2)
        auto smooth = ToricTestFunction::smooth(n + 1, radial_smooth(
            [](double t){ return std::expm1(t); },
            [](double t){ return std::exp(t); },
            [](double t){ return std::exp(t); }));
        auto q = energy_quadrature(smooth, geom, qc);
        double truth = 1.0 / (n + 2);
        double rel = std::abs(q.value - truth) / truth;
        bool ok = rel <= cfg.tol("energy_identity_smooth", 1e-3);
        items.push_back({{"n", n}, {"case", "exp"}, {"quadrature", q.value},
                         {"radial", truth}, {"rel_error", rel}, {"pass", ok}});
        out.pass = out.pass && ok;

        // mollified truncated logarithm: both routes on the same smooth profile
        double a = 1.0, eps = 0.05;
        auto f = [a, eps](double t) {
            return eps * std::log(std::exp(t / eps) + std::exp(-a / eps));
        };
        auto fp = [a, eps](double t) { return 1.0 / (1.0 + std::exp(-(t + a) / eps)); };
        auto fpp = [fp, eps](double t) { double p = fp(t); return p * (1 - p) / eps; };
        auto radial0 = RadialProfile::sample(f, standard_grid(-20.0, 4001));
        double e1d = energy(radial0.shifted(-radial0.boundary_value()), geom).value;
        auto moll = ToricTestFunction::smooth(n + 1, radial_smooth(f, fp, fpp));
        auto q2 = energy_quadrature(moll, geom, qc);
        double rel2 = std::abs(q2.value - e1d) / std::max(e1d, 1e-9);
        bool ok2 = rel2 <= cfg.tol("energy_identity_mollified", 0.01);
        items.push_back({{"n", n}, {"case", "mollified_trunclog"}, {"quadrature", q2.value},
                         {"radial", e1d}, {"rel_error", rel2}, {"pass", ok2}});
        out.pass = out.pass && ok2;
    }
    out.data = items;
    return out;
}

/// 7. bivariate inverse convexity (closed forms exact, random family bounded)
inline CriterionResult bivariate_inverse(const RunConfig& cfg)
{
    CriterionResult out{7, "bivariate_inverse_convexity", true, "", {}};
    double worst = std::numeric_limits<double>::infinity();

    // the two closed-form cases must be exact
    {
        BivariateSample a;
        for(int i = 0; i <= 8; i++) a.s_grid.push_back(i / 8.0);
        for(int j = 0; j <= 16; j++) a.t_grid.push_back(-2.0 + 4.0 * j / 16.0);
        for(double s : a.s_grid) for(double t : a.t_grid) a.values.push_back(s + t);
        auto inv = inverse_in_t(a);
        bool exact = true;
        for(std::size_t is = 0; is < inv.s_grid.size(); is++)
            for(std::size_t ix = 0; ix < inv.x_grid.size(); ix++)
                exact = exact && std::abs(inv.at(is, ix) - (inv.x_grid[ix] - inv.s_grid[is])) < 1e-12;
        out.pass = out.pass && exact && inv.min_convexity_defect >= -1e-12;
    }
    {
        BivariateSample a;
        for(int i = 0; i <= 10; i++) a.s_grid.push_back(-1.0 + 2.0 * i / 10.0);
        for(int j = 0; j <= 16; j++) a.t_grid.push_back(-2.0 + 4.0 * j / 16.0);
        for(double s : a.s_grid) for(double t : a.t_grid) a.values.push_back(-s * s + t);
        auto inv = inverse_in_t(a);
        bool exact = true;
        for(std::size_t is = 0; is < inv.s_grid.size(); is++)
            for(std::size_t ix = 0; ix < inv.x_grid.size(); ix++)
                exact = exact && std::abs(inv.at(is, ix) - (inv.x_grid[ix] + sqr(inv.s_grid[is]))) < 1e-12;
        out.pass = out.pass && exact && inv.min_convexity_defect >= -1e-12;
    }

    RngStream rng(mix_seed(cfg.seed, 0x07));
    for(int trial = 0; trial < 100; trial++) {
        int npieces = 2 + static_cast<int>(rng.below(4));
        std::vector<std::array<double,3>> pieces;
        for(int p = 0; p < npieces; p++)
            pieces.push_back({rng.uniform(-2.0, 2.0), rng.uniform(0.2, 2.0), rng.uniform(-1.0, 1.0)});
        BivariateSample a;
        for(int i = 0; i <= 8; i++) a.s_grid.push_back(i / 8.0);
        for(int j = 0; j <= 40; j++) a.t_grid.push_back(-3.0 + 6.0 * j / 40.0);
        for(double s : a.s_grid)
            for(double t : a.t_grid) {
                double v = std::numeric_limits<double>::infinity();
                for(const auto& p : pieces) v = std::min(v, p[0]*s + p[1]*t + p[2]);
                a.values.push_back(v);
            }
        auto inv = inverse_in_t(a);
        double sup = 0;
        for(std::size_t is = 0; is < inv.s_grid.size(); is++)
            for(std::size_t ix = 0; ix < inv.x_grid.size(); ix++) {
                double exact = -std::numeric_limits<double>::infinity();
                for(const auto& p : pieces)
                    exact = std::max(exact, (inv.x_grid[ix] - p[0]*inv.s_grid[is] - p[2]) / p[1]);
                sup = std::max(sup, std::abs(inv.at(is, ix) - exact));
            }
        double allowed = cfg.tol("inverse_convexity_defect", 1e-6) + 2.0 * sup;
        worst = std::min(worst, inv.min_convexity_defect + allowed);
        out.pass = out.pass && inv.min_convexity_defect >= -allowed;
    }
    out.detail = "worst headroom " + harness_detail::fmt(worst);
    return out;
}

/// 8. geodesic affineness and subgeodesic concavity over profile pairs
inline CriterionResult geodesic_affineness(const RunConfig& cfg)
{
    CriterionResult out{8, "geodesic_energy", true, "", {}};
    ModelGeometry geom(1, 1.0);
    auto grid = cfg.grid();

    std::vector<RadialProfile> profiles;
    for(double a : {0.3, 0.7, 1.5, 3.0}) profiles.push_back(truncated_log_profile(a, grid));
    profiles.push_back(exp_profile(grid));

    std::vector<double> s_grid;
    for(int i = 0; i <= 10; i++) s_grid.push_back(i / 10.0);

    auto items = nlohmann::ordered_json::array();
    double worst_affine = 0, worst_concave = 0;
    for(std::size_t i = 0; i < profiles.size(); i++)
        for(std::size_t j = i + 1; j < profiles.size(); j++) {
            double e0 = energy(profiles[i], geom).value;
            double e1 = energy(profiles[j], geom).value;
            double scale = std::max({e0, e1, 1.0});
            double dev = 0;
            for(double s : s_grid) {
                auto fs = geodesic(profiles[i], profiles[j], s);
                dev = std::max(dev, std::abs(energy(fs, geom).value - ((1-s)*e0 + s*e1)));
            }
            worst_affine = std::max(worst_affine, dev / scale);

            // concavity holds along subgeodesics vanishing on the boundary,
            // hence the pinned construction
            std::vector<double> es;
            for(double s : s_grid)
                es.push_back(energy(subgeodesic_pinned(profiles[i], profiles[j], s, 0.5),
                                    geom).value);
            double defect = 0;
            for(std::size_t k = 1; k + 1 < es.size(); k++)
                defect = std::min(defect, es[k] - 0.5 * (es[k-1] + es[k+1]));
            worst_concave = std::max(worst_concave, -defect / scale);

            bool ok = dev / scale <= cfg.tol("geodesic_affine_rel", 1e-3)
                   && -defect / scale <= cfg.tol("subgeodesic_concavity_rel", 1e-3);
            items.push_back({{"pair", {i, j}}, {"affine_dev_rel", dev / scale},
                             {"concavity_defect_rel", defect / scale}, {"pass", ok}});
            out.pass = out.pass && ok;
        }
    out.detail = "max affine deviation " + harness_detail::fmt(worst_affine)
               + ", worst concavity defect " + harness_detail::fmt(worst_concave);
    out.data = items;
    return out;
}

/// 10. Moser suite: family passes at the calibrated C, scaling uniform in k
inline CriterionResult moser_suite(const RunConfig& cfg, const MoserConstant& mo)
{
    CriterionResult out{10, "moser_suite", true, "", {}};
    ModelGeometry geom(1, 1.0);
    double min_margin = std::numeric_limits<double>::infinity();
    for(int i = 0; i < 200; i++) {
        auto w = random_normalized_profile(1, mix_seed(cfg.seed, static_cast<std::uint64_t>(i)));
        auto r = moser_check(w, geom, mo);
        min_margin = std::min(min_margin, r.margin);
        out.pass = out.pass && r.pass;
        for(double k : default_moser_k_grid()) {
            auto rs = scaled_moser_check(w, k, geom, mo);
            out.pass = out.pass && rs.pass && k * rs.lhs <= mo.C;
            min_margin = std::min(min_margin, k * (rs.rhs - rs.lhs));
        }
    }
    for(double a : {0.25, 1.0, 4.0, 16.0, 64.0}) {
        auto w = normalized_truncated_linear(a, 1);
        for(double k : default_moser_k_grid()) {
            auto rs = scaled_moser_check(w, k, geom, mo);
            out.pass = out.pass && rs.pass;
            min_margin = std::min(min_margin, k * (rs.rhs - rs.lhs));
        }
    }
    out.detail = "C = " + harness_detail::fmt(mo.C) + " (sup observed "
               + harness_detail::fmt(mo.sup_observed) + "), min scaled margin "
               + harness_detail::fmt(min_margin);
    out.data = {{"C", mo.C}, {"sup_observed", mo.sup_observed}, {"min_margin", min_margin}};
    return out;
}

/// 11a. Moser-Trudinger closed-form family (radial route)
inline CriterionResult mt_closed_form(const RunConfig& cfg, const MoserConstant& mo)
{
    CriterionResult out{11, "moser_trudinger", true, "", {}};
    ModelGeometry geom(1, 1.0);
    auto items = nlohmann::ordered_json::array();
    for(double a : {0.1, 1.0, 10.0, 50.0}) {
        auto grid = standard_grid(std::min(cfg.grid_tmin, -1.6 * a), cfg.grid_points);
        auto r = mt_check(truncated_log_profile(a, grid), geom, mo);
        bool closed = std::abs(r.lhs - std::log1p(a)) < 1e-6;
        items.push_back({{"a", a}, {"lhs", r.lhs}, {"rhs", r.rhs},
                         {"margin", r.margin}, {"pass", r.pass && closed}});
        out.pass = out.pass && r.pass && closed;
    }
    out.data = {{"closed_form_family", items}};
    return out;
}

} // namespace criteria

// ---------- suite runner ----------

/// criteria 1-11 and the serialized report; criterion 12 drives this twice
/// on a reduced configuration and compares bytes
inline SuiteReport run_suite_core(const RunConfig& cfg)
{
    cfg.validate();
    SuiteReport rep;

    // Moser constant: calibrated unless overridden
    rep.moser = calibrate_moser_constant(cfg.n == 2 ? 2 : 1, mix_seed(cfg.seed, 0xCA1), 200);
    if(cfg.moser_C_override) {
        rep.moser.C = *cfg.moser_C_override;
        rep.moser.overridden = true;
    }
    const MoserConstant mo = rep.moser;

    // corpus state shared by criteria 4, 5, 6 and 11
    ModelGeometry base(1, 1.0);
    auto corpus = random_corpus(cfg.corpus_size, base, mix_seed(cfg.seed, 0xC0));
    std::vector<harness_detail::CorpusItemState> st;
    st.reserve(corpus.size());
    for(auto& u : corpus)
        st.push_back({std::move(u), 0, 0, 0, false, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}});

    const std::vector<double> c4_l = {0.5, 1.0};
    const auto& mt_l = cfg.l_values;

    // exact + quadrature energies per item (parallel)
    parallel_for(static_cast<int>(st.size()), cfg.worker_count(), [&](int i) {
        auto& s = st[static_cast<std::size_t>(i)];
        QuadratureConfig qc;
        qc.cells = cfg.quad_cells;
        try {
            auto dual = dual_energy_2d(s.u, base, qc);
            s.exact_energy = dual.pl.total;
            s.quadrature_energy = dual.quadrature.value;
            s.oracle_gap = dual.relative_gap;
            s.oracle_consistent = true;
        } catch(const Error& e) {
            if(e.code() != "INCONSISTENT_ORACLES") throw;
            auto pl = energy_pl_2d(s.u, base);
            s.exact_energy = pl.total;
            s.quadrature_energy = energy_quadrature(s.u, base, qc).value;
            s.oracle_gap = std::abs(s.exact_energy - s.quadrature_energy)
                         / std::max(s.exact_energy, 0.02);
            s.oracle_consistent = false;
        }
    });

    // distributions, symmetrization and MT per (item, l) (parallel over items)
    std::vector<double> all_l = c4_l;
    for(double l : mt_l)
        if(std::find(all_l.begin(), all_l.end(), l) == all_l.end()) all_l.push_back(l);
    std::sort(all_l.begin(), all_l.end());

    parallel_for(static_cast<int>(st.size()), cfg.worker_count(), [&](int i) {
        auto& s = st[static_cast<std::size_t>(i)];
        for(double l : all_l) {
            ModelGeometry geom(1, l);
            auto mc = cfg.sampler(mix_seed(0x40, static_cast<std::uint64_t>(i * 31)
                                                  + static_cast<std::uint64_t>(l * 1000)));
            // the measure may never reach the function's formal floor, so the
            // level budget starts from the measured essential infimum and
            // refines wherever sigma has shelves
            double min_hint = estimate_essential_min(s.u, geom, 20000,
                                                     mix_seed(mc.seed, 0x4EULL));
            auto levels = adaptive_levels(s.u, geom, mc, std::min(min_hint, -1e-3), 64);
            auto d = distribution(s.u, geom, levels, mc);
            auto sym = symmetrize(d, geom, cfg.grid());

            s.l_values.push_back(l);
            s.e_hat.push_back(energy(sym.profile, geom).value);
            auto kc = knot_convexity_check(sym, d, geom);
            s.knot_z.push_back(kc.min_z);
            s.knot_draws.push_back(sym.knot_y.size() >= 2 ? sym.knot_y.size() - 2 : 0);
            double eps = noise_scaled_convexity_epsilon(sym, d, geom);
            s.grid_convex.push_back(convexity_report(sym.profile, eps).pass);
            auto lc = log_concavity_check(d);
            s.log_concave.push_back(lc.pass);
            s.log_concavity_z.push_back(lc.min_normalized);
            s.monotone.push_back(strict_monotonicity_check(d).pass);
            s.level_counts.push_back(levels.size());

            if(std::find(mt_l.begin(), mt_l.end(), l) != mt_l.end()) {
                s.mt_l.push_back(l);
                s.mt.push_back(mt_check(s.u, geom, mo,
                                        cfg.sampler(mix_seed(0x50, static_cast<std::uint64_t>(i * 37)
                                                    + static_cast<std::uint64_t>(l * 1000))),
                                        s.exact_energy));
            }
        }
    });

    // independent criteria (parallel)
    std::vector<std::function<CriterionResult()>> tasks = {
        [&](){ return criteria::ball_volume_check(cfg); },
        [&](){ return criteria::radial_fixed_point(cfg); },
        [&](){ return criteria::energy_identity(cfg); },
        [&](){ return criteria::bivariate_inverse(cfg); },
        [&](){ return criteria::geodesic_affineness(cfg); },
        [&](){ return criteria::moser_suite(cfg, mo); },
    };
    std::vector<CriterionResult> independent(tasks.size());
    parallel_for(static_cast<int>(tasks.size()), cfg.worker_count(), [&](int i) {
        independent[static_cast<std::size_t>(i)] = tasks[static_cast<std::size_t>(i)]();
    });

    // criterion 4: the symmetrization inequality
    CriterionResult c4{4, "symmetrization_inequality", true, "", {}};
    {
        auto items = nlohmann::ordered_json::array();
        double worst_ratio = 0, worst_gap = 0;
        for(std::size_t i = 0; i < st.size(); i++) {
            const auto& s = st[i];
            bool ok = s.oracle_consistent;
            worst_gap = std::max(worst_gap, s.oracle_gap);
            nlohmann::ordered_json per_l = nlohmann::ordered_json::array();
            for(std::size_t k = 0; k < s.l_values.size(); k++) {
                if(std::find(c4_l.begin(), c4_l.end(), s.l_values[k]) == c4_l.end()) continue;
                double ratio = s.e_hat[k] / std::max(s.exact_energy, 1e-12);
                worst_ratio = std::max(worst_ratio, ratio);
                bool okl = s.e_hat[k] <= s.exact_energy
                                         * (1.0 + cfg.tol("symmetrization_slack", 0.02));
                ok = ok && okl;
                per_l.push_back({{"l", s.l_values[k]}, {"E_u", s.exact_energy},
                                 {"E_u_quadrature", s.quadrature_energy},
                                 {"E_uhat", s.e_hat[k]}, {"ratio", ratio}, {"pass", okl}});
            }
            items.push_back({{"item", i}, {"oracle_gap", s.oracle_gap}, {"energies", per_l},
                             {"pass", ok}});
            c4.pass = c4.pass && ok;
        }
        c4.detail = "worst E(uhat)/E(u) " + harness_detail::fmt(worst_ratio)
                  + ", worst oracle gap " + harness_detail::fmt(worst_gap);
        c4.data = items;
    }

    // criterion 5: convexity of symmetrized profiles + log-concavity of sigma.
    // The log-concavity minimum runs over every triple of every (item, l)
    // distribution, so the aggregate gate is the familywise threshold for
    // that many draws (each per-report pass already uses its own).
    CriterionResult c5{5, "profile_convexity", true, "", {}};
    {
        double worst_z = std::numeric_limits<double>::infinity();
        double worst_knot = std::numeric_limits<double>::infinity();
        std::size_t draws = 0, kdraws = 0;
        for(const auto& s : st)
            for(std::size_t k = 0; k < s.l_values.size(); k++) {
                c5.pass = c5.pass && s.grid_convex[k];
                worst_z = std::min(worst_z, s.log_concavity_z[k]);
                worst_knot = std::min(worst_knot, s.knot_z[k]);
                draws += s.level_counts[k] >= 2 ? s.level_counts[k] - 2 : 0;
                kdraws += s.knot_draws[k];
            }
        double zfam = familywise_z(draws);
        c5.pass = c5.pass && worst_z >= -zfam && worst_knot >= -familywise_z(kdraws);
        c5.detail = "worst log-concavity z " + harness_detail::fmt(worst_z)
                  + ", worst knot-convexity z " + harness_detail::fmt(worst_knot)
                  + " (familywise gates " + harness_detail::fmt(zfam) + ", "
                  + harness_detail::fmt(familywise_z(kdraws)) + ")";
    }

    // criterion 6: strict monotonicity of sigma
    CriterionResult c6{6, "strict_monotonicity", true, "", {}};
    for(const auto& s : st)
        for(bool ok : s.monotone) c6.pass = c6.pass && ok;

    // criterion 9: subgeodesic symmetrization mechanism
    CriterionResult c9{9, "subgeodesic_symmetrization", true, "", {}};
    {
        auto items = nlohmann::ordered_json::array();
        std::vector<double> s_grid = {0.0, 0.25, 0.5, 0.75, 1.0};
        int pairs = std::min<int>(3, static_cast<int>(st.size()) / 2);
        ModelGeometry geom(1, 1.0);
        std::vector<SubgeodesicSymmetrizationReport> reps(static_cast<std::size_t>(pairs));
        parallel_for(pairs, cfg.worker_count(), [&](int p) {
            reps[static_cast<std::size_t>(p)] = symmetrized_subgeodesic_check(
                st[static_cast<std::size_t>(2*p)].u, st[static_cast<std::size_t>(2*p+1)].u,
                geom, s_grid, 0.5,
                cfg.sampler(mix_seed(0x90, static_cast<std::uint64_t>(p))), 16);
        });
        for(int p = 0; p < pairs; p++) {
            const auto& r = reps[static_cast<std::size_t>(p)];
            items.push_back({{"pair", {2*p, 2*p+1}}, {"min_logA_z", r.min_logA_z},
                             {"min_energy_z", r.min_energy_z}, {"energies", r.energies},
                             {"pass", r.pass}});
            c9.pass = c9.pass && r.pass;
        }
        c9.data = items;
    }

    // criterion 11: MT closed form + corpus sweep + equidistribution equality
    CriterionResult c11 = criteria::mt_closed_form(cfg, mo);
    {
        auto items = nlohmann::ordered_json::array();
        // corpus supremum of (lhs - D)/E(u), a probe of how far the corpus
        // sits from the multiplicative constant (not a pass/fail quantity)
        double sharpness = -std::numeric_limits<double>::infinity();
        std::size_t sweep_draws = 0;
        for(const auto& s : st) sweep_draws += s.mt.size();
        double equi_gate = familywise_z(sweep_draws);
        for(std::size_t i = 0; i < st.size(); i++) {
            const auto& s = st[i];
            for(std::size_t k = 0; k < s.mt.size(); k++) {
                const auto& m = s.mt[k];
                bool ok = m.result.pass && m.equidistribution_z <= equi_gate;
                c11.pass = c11.pass && ok;
                items.push_back({{"item", i}, {"l", s.mt_l[k]},
                                 {"lhs", m.result.lhs}, {"rhs", m.result.rhs},
                                 {"margin", m.result.margin},
                                 {"equidistribution_z", m.equidistribution_z}, {"pass", ok}});
                if(s.exact_energy > 1e-6)
                    sharpness = std::max(sharpness,
                        (m.result.lhs - mo.D(s.mt_l[k])) / s.exact_energy);
            }
        }
        c11.data["corpus_sweep"] = items;
        c11.data["sharpness_sup"] = sharpness;
        c11.detail = "corpus sweep over l; sharpness probe sup (lhs-D)/E = "
                   + harness_detail::fmt(sharpness);
    }

    rep.criteria.resize(11);
    rep.criteria[0] = independent[0];
    rep.criteria[1] = independent[1];
    rep.criteria[2] = independent[2];
    rep.criteria[3] = c4;
    rep.criteria[4] = c5;
    rep.criteria[5] = c6;
    rep.criteria[6] = independent[3];
    rep.criteria[7] = independent[4];
    rep.criteria[8] = c9;
    rep.criteria[9] = independent[5];
    rep.criteria[10] = c11;

    nlohmann::ordered_json j;
    j["schema"] = 1;
    j["version"] = VERSION;
    j["config"] = config_to_json(cfg);
    j["moser_constant"] = {{"n", mo.n}, {"C", mo.C}, {"sup_observed", mo.sup_observed},
                           {"headroom", mo.headroom}, {"overridden", mo.overridden}};
    auto arr = nlohmann::ordered_json::array();
    for(const auto& c : rep.criteria) arr.push_back(criterion_to_json(c));
    j["criteria"] = arr;
    auto sym = nlohmann::ordered_json::array();
    for(std::size_t i = 0; i < st.size(); i++) {
        const auto& s = st[i];
        nlohmann::ordered_json e;
        e["item"] = i;
        e["function"] = toric_to_json(s.u);
        e["E_u"] = s.exact_energy;
        e["E_u_quadrature"] = s.quadrature_energy;
        auto per_l = nlohmann::ordered_json::array();
        for(std::size_t k = 0; k < s.l_values.size(); k++)
            per_l.push_back({{"l", s.l_values[k]}, {"E_uhat", s.e_hat[k]}});
        e["symmetrized"] = per_l;
        sym.push_back(e);
    }
    j["symmetrization_summaries"] = sym;
    rep.json = std::move(j);

    rep.all_pass = true;
    for(const auto& c : rep.criteria) rep.all_pass = rep.all_pass && c.pass;
    return rep;
}

/// the full suite: criteria 1-11 at the configured size plus the
/// reproducibility criterion (two reduced runs, byte-compared)
inline SuiteReport run_suite(const RunConfig& cfg)
{
    SuiteReport rep = run_suite_core(cfg);

    RunConfig mini = cfg;
    mini.samples = 50000;
    mini.corpus_size = std::min(cfg.corpus_size, 3);
    mini.l_values = {0.5, 1.0};
    mini.quad_cells = 250;
    mini.shards = 8;
    mini.grid_points = std::min(cfg.grid_points, 1001);

    CriterionResult c12{12, "reproducibility", false, "", {}};
    std::string first = run_suite_core(mini).json.dump();
    std::string second = run_suite_core(mini).json.dump();
    c12.pass = first == second;
    c12.detail = c12.pass ? "two reduced runs byte-identical ("
                                + std::to_string(first.size()) + " bytes)"
                          : "reports differ";
    rep.criteria.push_back(c12);
    rep.json["criteria"].push_back(criterion_to_json(c12));
    rep.all_pass = rep.all_pass && c12.pass;
    return rep;
}

} // namespace plurisym
