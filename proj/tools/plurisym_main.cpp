// plurisym: Schwarz-type symmetrization on the weighted unit ball and the
// Moser-Trudinger inequality suite.
//
// Subcommands:
//   volume      closed-form vs Monte-Carlo Omega_l ball volumes
//   symmetrize  distribution + symmetrization of a function spec (JSON)
//   energy      Monge-Ampere energy of a function spec (dual routes)
//   mt          Moser-Trudinger check of a function spec across l
//   geodesic    energy along the geodesic between two profiles
//   suite       the full acceptance suite (JSON report)
//   plotdata    CSV bundles for external plotting
//
// Exit codes: 0 all checks passed, 1 some inequality/criterion failed,
// 2 configuration or runtime error.

#include <plurisym/harness.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace plurisym;

namespace {

void write_file(const fs::path& path, const std::string& content)
{
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), "CONFIG_ERROR", "cannot write " + path.string());
    out << content;
}

ToricTestFunction load_function(const std::string& path)
{
    std::ifstream in(path);
    require(static_cast<bool>(in), "PARSE_ERROR", "cannot open function spec " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch(const nlohmann::json::exception& e) {
        throw Error("PARSE_ERROR", std::string("invalid JSON in ") + path + ": " + e.what());
    }
    return toric_from_json(j);
}

RadialProfile load_profile_spec(const std::string& spec, const RunConfig& cfg)
{
    if(spec.rfind("trunclog:", 0) == 0)
        return truncated_log_profile(std::stod(spec.substr(9)), cfg.grid());
    if(spec == "exp")
        return exp_profile(cfg.grid());
    std::ifstream in(spec);
    require(static_cast<bool>(in), "PARSE_ERROR", "cannot open profile " + spec);
    std::stringstream ss;
    ss << in.rdbuf();
    return profile_from_csv(ss.str());
}

std::string distribution_to_csv(const DistributionFunction& d)
{
    std::ostringstream os;
    os << "t,sigma,stderr\n";
    for(std::size_t j = 0; j < d.levels.size(); j++)
        os << format_double(d.levels[j]) << ',' << format_double(d.sigma[j].value)
           << ',' << format_double(d.sigma[j].stderror) << '\n';
    return os.str();
}

// ---------- subcommands ----------

int cmd_volume(const RunConfig& cfg)
{
    cfg.validate();
    bool ok = true;
    std::printf("%-6s %-6s %-14s %-14s %-12s %s\n", "n", "l", "closed_form", "monte_carlo",
                "stderr", "status");
    for(double l : cfg.l_values) {
        ModelGeometry geom(cfg.n, l);
        auto u = [](std::span<const double> x){ return log_sum_exp(x); };
        auto est = sublevel_volume(u, -1e-9, geom, cfg.sampler(0x01));
        double truth = ball_volume(geom);
        bool pass = std::abs(est.value - truth) <= 3 * est.stderror + 1e-12;
        ok = ok && pass;
        std::printf("%-6d %-6g %-14.8f %-14.8f %-12.3g %s\n", cfg.n, l, truth, est.value,
                    est.stderror, pass ? "ok" : "MISMATCH");
    }
    return ok ? 0 : 1;
}

int cmd_symmetrize(const RunConfig& cfg, const std::string& function_file)
{
    cfg.validate();
    auto u = load_function(function_file);
    double l = cfg.l_values.front();
    ModelGeometry geom(u.dim() - 1, l);

    double floor = u.floor_value();
    double min_hint = std::isfinite(floor) ? floor : -1.0;
    auto pre = distribution(u, geom, two_sided_levels(std::min(min_hint, -1e-3), 16),
                            SamplerConfig{20000, mix_seed(cfg.seed, 0xAA), 4});
    auto levels = two_sided_levels(std::min(pre.min_u, -1e-6), 64);
    auto d = distribution(u, geom, levels, cfg.sampler(0xAB));
    auto sym = symmetrize(d, geom, cfg.grid());

    auto equi = verify_equidistribution(u, sym.profile, geom, levels, cfg.sampler(0xAC));
    auto knots = knot_convexity_check(sym, d, geom);
    auto conv = convexity_report(sym.profile,
                                 noise_scaled_convexity_epsilon(sym, d, geom));
    auto logc = log_concavity_check(d);
    auto mono = strict_monotonicity_check(d);

    fs::path out(cfg.out_dir);
    write_file(out / "sigma.csv", distribution_to_csv(d));
    write_file(out / "profile.csv", profile_to_csv(sym.profile));

    nlohmann::ordered_json j;
    j["schema"] = 1;
    j["l"] = l;
    j["min_u"] = d.min_u;
    j["dropped_levels"] = sym.dropped_levels;
    j["energy_uhat"] = energy(sym.profile, geom).value;
    j["equidistribution"] = {{"max_discrepancy_stderr", equi.max_discrepancy_stderr},
                             {"pass", equi.pass}};
    j["convexity"] = {{"knot_z", knots.min_z}, {"knot_pass", knots.pass},
                      {"grid_pass", conv.pass}};
    j["log_concavity"] = {{"min_z", logc.min_normalized}, {"pass", logc.pass}};
    j["monotonicity"] = {{"pass", mono.pass}, {"not_applicable", mono.not_applicable}};
    write_file(out / "symmetrize_report.json", j.dump(2) + "\n");

    bool ok = equi.pass && knots.pass && conv.pass && logc.pass && mono.pass;
    std::printf("symmetrize: E(uhat) = %.6g, equidistribution z = %.3g, %s\n",
                j["energy_uhat"].get<double>(), equi.max_discrepancy_stderr,
                ok ? "all checks pass" : "CHECK FAILED");
    std::printf("wrote %s, %s, %s\n", (out / "sigma.csv").c_str(),
                (out / "profile.csv").c_str(), (out / "symmetrize_report.json").c_str());
    return ok ? 0 : 1;
}

int cmd_energy(const RunConfig& cfg, const std::string& function_file)
{
    cfg.validate();
    auto u = load_function(function_file);
    nlohmann::ordered_json j;
    j["schema"] = 1;
    bool ok = true;
    if(u.kind() == ToricTestFunction::Kind::radial) {
        ModelGeometry geom(u.dim() - 1, cfg.l_values.front());
        auto e = energy(u.profile(), geom);
        j["route"] = "radial";
        j["energy"] = e.value;
        j["ibp_cross_check"] = e.ibp_value;
        std::printf("energy (radial reduction): %.8g\n", e.value);
    } else if(u.kind() == ToricTestFunction::Kind::pl && u.dim() == 2) {
        ModelGeometry geom(1, cfg.l_values.front());
        QuadratureConfig qc;
        qc.cells = cfg.quad_cells;
        auto dual = dual_energy_2d(u, geom, qc);
        j["route"] = "dual";
        j["energy"] = dual.pl.total;
        j["atom_energy"] = dual.pl.atom_energy;
        j["envelope_energy"] = dual.pl.envelope_energy;
        j["quadrature"] = dual.quadrature.value;
        j["relative_gap"] = dual.relative_gap;
        j["total_mass"] = dual.pl.total_mass;
        std::printf("energy: exact %.8g, quadrature %.8g (gap %.2f%%), mass %.6g\n",
                    dual.pl.total, dual.quadrature.value, 100 * dual.relative_gap,
                    dual.pl.total_mass);
    } else {
        ModelGeometry geom(u.dim() - 1, cfg.l_values.front());
        QuadratureConfig qc;
        qc.cells = u.dim() == 2 ? cfg.quad_cells : std::max(90, cfg.quad_cells / 6);
        auto q = energy_quadrature(u, geom, qc);
        j["route"] = "quadrature";
        j["energy"] = q.value;
        j["error_estimate"] = q.error_estimate;
        ok = !q.negative_determinant;
        std::printf("energy (quadrature): %.8g +- %.2g\n", q.value, q.error_estimate);
    }
    write_file(fs::path(cfg.out_dir) / "energy.json", j.dump(2) + "\n");
    return ok ? 0 : 1;
}

int cmd_mt(const RunConfig& cfg, const std::string& function_file)
{
    cfg.validate();
    auto u = load_function(function_file);
    auto mo = calibrate_moser_constant(u.dim() - 1, mix_seed(cfg.seed, 0xCA1), 200);
    if(cfg.moser_C_override) { mo.C = *cfg.moser_C_override; mo.overridden = true; }

    std::ostringstream csv;
    csv << "name,l,n,lhs,rhs,margin,pass\n";
    bool ok = true;
    for(double l : cfg.l_values) {
        ModelGeometry geom(u.dim() - 1, l);
        InequalityResult r;
        double equi_z = 0;
        if(u.kind() == ToricTestFunction::Kind::radial) {
            r = mt_check(u.profile(), geom, mo);
        } else {
            auto res = mt_check(u, geom, mo, cfg.sampler(0xB0), std::nullopt);
            r = res.result;
            equi_z = res.equidistribution_z;
            ok = ok && equi_z <= 3.0;
        }
        ok = ok && r.pass;
        csv << r.name << ',' << format_double(l) << ',' << geom.n << ','
            << format_double(r.lhs) << ',' << format_double(r.rhs) << ','
            << format_double(r.margin) << ',' << (r.pass ? 1 : 0) << '\n';
        std::printf("l = %-5g lhs = %-12.6g rhs = %-12.6g margin = %-12.6g %s\n",
                    l, r.lhs, r.rhs, r.margin, r.pass ? "pass" : "FAIL");
    }
    write_file(fs::path(cfg.out_dir) / "mt.csv", csv.str());
    std::printf("calibrated C = %.6g%s\n", mo.C, mo.overridden ? " (override)" : "");
    return ok ? 0 : 1;
}

int cmd_geodesic(const RunConfig& cfg, const std::string& f0spec, const std::string& f1spec)
{
    cfg.validate();
    ModelGeometry geom(cfg.n, cfg.l_values.front());
    auto f0 = load_profile_spec(f0spec, cfg);
    auto f1 = load_profile_spec(f1spec, cfg);
    double e0 = energy(f0, geom).value, e1 = energy(f1, geom).value;
    double scale = std::max({e0, e1, 1.0});

    std::ostringstream csv;
    csv << "s,energy,affine_residual\n";
    double worst = 0;
    for(int i = 0; i <= 10; i++) {
        double s = i / 10.0;
        double e = energy(geodesic(f0, f1, s), geom).value;
        double res = e - ((1 - s) * e0 + s * e1);
        worst = std::max(worst, std::abs(res));
        csv << format_double(s) << ',' << format_double(e) << ',' << format_double(res) << '\n';
    }
    write_file(fs::path(cfg.out_dir) / "geodesic_energy.csv", csv.str());
    bool ok = worst <= 1e-3 * scale;
    std::printf("geodesic: E(0) = %.6g, E(1) = %.6g, max affine residual %.3g (%s)\n",
                e0, e1, worst, ok ? "affine" : "NOT affine");
    return ok ? 0 : 1;
}

int cmd_plotdata(const RunConfig& cfg, const std::string& what)
{
    cfg.validate();
    fs::path out(cfg.out_dir);
    std::vector<std::string> kinds;
    {
        std::istringstream is(what);
        std::string tok;
        while(std::getline(is, tok, ',')) if(!tok.empty()) kinds.push_back(tok);
    }
    auto wants = [&](const std::string& k) {
        return std::find(kinds.begin(), kinds.end(), k) != kinds.end();
    };
    int written = 0;
    ModelGeometry geom(1, cfg.l_values.front());

    if(wants("sigma")) {
        auto u = ToricTestFunction::radial(2, truncated_log_profile(1.0, cfg.grid()));
        auto d = distribution(u, geom, two_sided_levels(-1.0, 64), cfg.sampler(0xD1));
        write_file(out / "sigma_radial.csv", distribution_to_csv(d));
        auto c = random_corpus(1, geom, mix_seed(cfg.seed, 0xC0)).front();
        double cmin = estimate_essential_min(c, geom, 20000, mix_seed(cfg.seed, 0xD2));
        auto dc = distribution(c, geom, two_sided_levels(std::min(cmin, -1e-3), 64),
                               cfg.sampler(0xD2));
        write_file(out / "sigma_corpus0.csv", distribution_to_csv(dc));
        written += 2;
    }
    if(wants("profiles")) {
        write_file(out / "profile_trunclog.csv", profile_to_csv(truncated_log_profile(1.0, cfg.grid())));
        write_file(out / "profile_exp.csv", profile_to_csv(exp_profile(cfg.grid())));
        auto c = random_corpus(1, geom, mix_seed(cfg.seed, 0xC0)).front();
        double cmin = estimate_essential_min(c, geom, 20000, mix_seed(cfg.seed, 0xD3));
        auto d = distribution(c, geom, two_sided_levels(std::min(cmin, -1e-3), 64),
                              cfg.sampler(0xD3));
        write_file(out / "profile_corpus0_symmetrized.csv",
                   profile_to_csv(symmetrize(d, geom, cfg.grid()).profile));
        written += 3;
    }
    if(wants("geodesic")) {
        auto f0 = exp_profile(cfg.grid());
        auto f1 = truncated_log_profile(1.0, cfg.grid());
        double e0 = energy(f0, geom).value, e1 = energy(f1, geom).value;
        std::ostringstream csv;
        csv << "s,energy,affine_residual\n";
        for(int i = 0; i <= 10; i++) {
            double s = i / 10.0;
            double e = energy(geodesic(f0, f1, s), geom).value;
            csv << format_double(s) << ',' << format_double(e) << ','
                << format_double(e - ((1 - s) * e0 + s * e1)) << '\n';
        }
        write_file(out / "geodesic_energy.csv", csv.str());
        written += 1;
    }
    if(wants("mt")) {
        auto mo = calibrate_moser_constant(1, mix_seed(cfg.seed, 0xCA1), 200);
        if(cfg.moser_C_override) mo.C = *cfg.moser_C_override;
        std::ostringstream csv;
        csv << "a,l,lhs,rhs,margin\n";
        for(double l : cfg.l_values) {
            ModelGeometry g(1, l);
            for(int i = 0; i < 24; i++) {
                double a = std::exp(std::log(0.1) + (std::log(50.0) - std::log(0.1)) * i / 23.0);
                auto grid = standard_grid(std::min(cfg.grid_tmin, -1.6 * a), cfg.grid_points);
                auto r = mt_check(truncated_log_profile(a, grid), g, mo);
                csv << format_double(a) << ',' << format_double(l) << ','
                    << format_double(r.lhs) << ',' << format_double(r.rhs) << ','
                    << format_double(r.margin) << '\n';
            }
        }
        write_file(out / "mt_margins.csv", csv.str());
        written += 1;
    }
    if(written == 0) {
        std::fprintf(stderr, "warning: NO_OUTPUT: selection '%s' matches none of "
                             "sigma, profiles, geodesic, mt\n", what.c_str());
        return 0;
    }
    std::printf("wrote %d plot-data files to %s\n", written, cfg.out_dir.c_str());
    return 0;
}

int cmd_suite(const RunConfig& cfg)
{
    cfg.validate();
    auto rep = run_suite(cfg);
    for(const auto& c : rep.criteria)
        std::printf("[%s] criterion %2d %-28s %s\n", c.pass ? "PASS" : "FAIL",
                    c.id, c.name.c_str(), c.detail.c_str());
    write_file(fs::path(cfg.out_dir) / "report.json", rep.json.dump(2) + "\n");

    // CSV summary of the inequality results gathered by the MT criterion
    std::ostringstream csv;
    csv << "name,l,n,lhs,rhs,margin,pass\n";
    for(const auto& c : rep.criteria) {
        if(c.id != 11 || c.data.is_null()) continue;
        if(c.data.contains("closed_form_family"))
            for(const auto& row : c.data["closed_form_family"])
                csv << "moser_trudinger_radial," << 1.0 << ',' << 1 << ','
                    << row["lhs"].get<double>() << ',' << row["rhs"].get<double>() << ','
                    << row["margin"].get<double>() << ',' << (row["pass"].get<bool>() ? 1 : 0)
                    << '\n';
        if(c.data.contains("corpus_sweep"))
            for(const auto& row : c.data["corpus_sweep"])
                csv << "moser_trudinger," << row["l"].get<double>() << ',' << 1 << ','
                    << row["lhs"].get<double>() << ',' << row["rhs"].get<double>() << ','
                    << row["margin"].get<double>() << ',' << (row["pass"].get<bool>() ? 1 : 0)
                    << '\n';
    }
    write_file(fs::path(cfg.out_dir) / "inequalities.csv", csv.str());

    std::printf("%s; report at %s\n", rep.all_pass ? "ALL CRITERIA PASS" : "SOME CRITERIA FAILED",
                (fs::path(cfg.out_dir) / "report.json").c_str());
    return rep.all_pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Schwarz-type symmetrization on the weighted unit ball"};
    app.require_subcommand(1);
    app.fallthrough();   // global options may follow the subcommand

    std::string config_path, out_dir, l_list, function_file, f0spec, f1spec, what = "sigma,profiles,geodesic,mt";
    std::optional<std::int64_t> samples;
    std::optional<std::uint64_t> seed;
    std::optional<int> n_opt;

    app.add_option("--config", config_path, "flat key = value configuration file");
    app.add_option("--seed", seed, "base RNG seed");
    app.add_option("--samples", samples, "Monte-Carlo sample count");
    app.add_option("--l", l_list, "comma-separated list of l values");
    app.add_option("--n", n_opt, "base dimension n");
    app.add_option("--out", out_dir, "output directory");

    auto* volume = app.add_subcommand("volume", "closed-form vs Monte-Carlo ball volumes");
    auto* symmetrize_cmd = app.add_subcommand("symmetrize", "symmetrize a function spec");
    symmetrize_cmd->add_option("--function", function_file, "JSON function spec")->required();
    auto* energy_cmd = app.add_subcommand("energy", "Monge-Ampere energy of a function spec");
    energy_cmd->add_option("--function", function_file, "JSON function spec")->required();
    auto* mt_cmd = app.add_subcommand("mt", "Moser-Trudinger check of a function spec");
    mt_cmd->add_option("--function", function_file, "JSON function spec")->required();
    auto* geo = app.add_subcommand("geodesic", "energy along a profile geodesic");
    geo->add_option("--f0", f0spec, "profile: trunclog:A, exp, or CSV path")->required();
    geo->add_option("--f1", f1spec, "profile: trunclog:A, exp, or CSV path")->required();
    auto* suite = app.add_subcommand("suite", "run the acceptance suite");
    auto* plotdata = app.add_subcommand("plotdata", "emit CSV bundles for plotting");
    plotdata->add_option("--what", what, "comma list: sigma,profiles,geodesic,mt");

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg = config_path.empty() ? RunConfig{} : config_from_file(config_path);
        if(seed) cfg.seed = *seed;
        if(samples) cfg.samples = *samples;
        if(n_opt) cfg.n = *n_opt;
        if(!out_dir.empty()) cfg.out_dir = out_dir;
        if(!l_list.empty()) {
            cfg.l_values.clear();
            std::istringstream is(l_list);
            std::string tok;
            while(std::getline(is, tok, ',')) cfg.l_values.push_back(std::stod(tok));
        }

        if(volume->parsed()) return cmd_volume(cfg);
        if(symmetrize_cmd->parsed()) return cmd_symmetrize(cfg, function_file);
        if(energy_cmd->parsed()) return cmd_energy(cfg, function_file);
        if(mt_cmd->parsed()) return cmd_mt(cfg, function_file);
        if(geo->parsed()) return cmd_geodesic(cfg, f0spec, f1spec);
        if(suite->parsed()) return cmd_suite(cfg);
        if(plotdata->parsed()) return cmd_plotdata(cfg, what);
    } catch(const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch(const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 2;
}
