// Experiment harness for the sewing library: deterministic experiments
// driven by flags or a sectioned key-value config file, emitting CSV data
// and JSON summaries.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "sewing/config.hpp"
#include "sewing/experiments.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sewing;

namespace {

// -- spec strings: "kind:key=value:key=value" --

struct Spec {
    std::string kind;
    std::map<std::string, std::string> kv;

    double num(const std::string& key, double def) const {
        auto it = kv.find(key);
        return it == kv.end() ? def : std::stod(it->second);
    }
    std::string str(const std::string& key, const std::string& def) const {
        auto it = kv.find(key);
        return it == kv.end() ? def : it->second;
    }
};

Spec parse_spec(const std::string& s) {
    Spec out;
    std::size_t pos = s.find(':');
    out.kind = s.substr(0, pos);
    while (pos != std::string::npos) {
        std::size_t next = s.find(':', pos + 1);
        std::string tok = s.substr(pos + 1, next == std::string::npos ? next : next - pos - 1);
        std::size_t eq = tok.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("malformed spec token '" + tok + "' in '" + s + "'");
        out.kv[tok.substr(0, eq)] = tok.substr(eq + 1);
        pos = next;
    }
    return out;
}

std::pair<unsigned, unsigned> parse_levels(const std::string& s) {
    std::size_t dots = s.find("..");
    if (dots == std::string::npos) {
        unsigned l = static_cast<unsigned>(std::stoul(s));
        return {l, l};
    }
    unsigned lo = static_cast<unsigned>(std::stoul(s.substr(0, dots)));
    unsigned hi = static_cast<unsigned>(std::stoul(s.substr(dots + 2)));
    if (hi < lo) throw std::invalid_argument("bad level range " + s);
    return {lo, hi};
}

VectorField make_field(const std::string& spec_str) {
    Spec sp = parse_spec(spec_str);
    if (sp.kind == "linear") return linear_scalar_field(sp.num("c", 1.0));
    if (sp.kind == "sin") return sin_field(sp.num("amp", 1.0));
    if (sp.kind == "sinrot") return rotation_field(sp.num("amp", 1.0));
    if (sp.kind == "rough") return rough_field(sp.num("gamma", 0.5), sp.num("scale", 1.0));
    if (sp.kind == "const") {
        Mat c(1, 1);
        c(0, 0) = sp.num("c", 1.0);
        return constant_field(c);
    }
    if (sp.kind == "affine") {
        Tensor3 A(1, 1, 1);
        A(0, 0, 0) = sp.num("a", 0.0);
        Mat b(1, 1);
        b(0, 0) = sp.num("b", 1.0);
        return affine_field(A, b);
    }
    throw std::invalid_argument("unknown field kind '" + sp.kind + "'");
}

Control make_omega(const std::string& spec_str, double T) {
    Spec sp = parse_spec(spec_str);
    if (sp.kind == "linear") return linear_control(T, sp.num("scale", 1.0));
    throw std::invalid_argument("unknown control kind '" + sp.kind + "'");
}

Remainder make_varpi(const std::string& spec_str) {
    Spec sp = parse_spec(spec_str);
    if (sp.kind == "pow") return power_remainder(sp.num("theta", 1.2));
    throw std::invalid_argument("unknown remainder kind '" + sp.kind + "'");
}

/// Flow + partition from field/driver/flow specs. Davie flows need a
/// rough driver (ebm or a lifted file/function); Euler flows a pointwise
/// one (time or weier).
struct BuiltFlow {
    AlmostFlow phi;
    Partition pi;
};

BuiltFlow make_flow(const VectorField& f, const std::string& driver_str,
                    const std::string& flow_kind, std::size_t steps, double T,
                    std::uint64_t seed) {
    Spec drv = parse_spec(driver_str);
    Partition pi = Partition::uniform(T, steps);
    BuiltFlow out;
    out.pi = pi;
    if (flow_kind == "davie") {
        GridRoughPath x;
        if (drv.kind == "ebm") {
            x = sample_ito_ebm(f.d, pi, static_cast<unsigned>(drv.num("sub", 0)),
                               static_cast<std::uint64_t>(drv.num("seed", double(seed))));
        } else if (drv.kind == "lift") {
            x = load_rough_path(drv.str("file", ""));
            out.pi = x.grid;
        } else if (drv.kind == "time") {
            x = lift_function([](double t) { return t; }, pi);
        } else {
            throw std::invalid_argument("davie flow needs an ebm/lift/time driver");
        }
        out.phi = davie_flow(f, x);
        return out;
    }
    if (flow_kind == "euler") {
        std::function<Vec(double)> path;
        double alpha = 1.0;
        if (drv.kind == "time") {
            path = unit_time_driver();
        } else if (drv.kind == "weier") {
            alpha = drv.num("alpha", 0.75);
            path = weierstrass_driver(alpha);
        } else {
            throw std::invalid_argument("euler flow needs a time/weier driver");
        }
        out.phi = euler_young_flow(f, path, alpha);
        return out;
    }
    throw std::invalid_argument("unknown flow kind '" + flow_kind + "'");
}

// -- artifact emission --

void write_text(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

std::string csv_line(const std::vector<double>& row) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    return os.str();
}

void write_path_csv(const fs::path& p, const SchemePath& y) {
    std::ostringstream os;
    os << "t";
    for (std::size_t c = 0; c < y.values.front().size(); ++c) os << ",y" << c;
    os << "\n";
    for (std::size_t k = 0; k < y.partition.points.size(); ++k) {
        std::vector<double> row{y.partition.points[k]};
        for (double v : y.values[k]) row.push_back(v);
        os << csv_line(row) << "\n";
    }
    write_text(p, os.str());
}

int report(const json& j, const fs::path& out_dir, const std::string& name, bool violated) {
    write_json(out_dir / (name + ".json"), j);
    std::cout << j.dump(2) << "\n";
    if (violated) {
        std::cerr << name << ": invariant violation\n";
        return 1;
    }
    return 0;
}

// -- experiments --

int cmd_converge(const std::string& flow, const std::string& field, const std::string& levels,
                 const std::string& driver, const fs::path& out_dir) {
    auto [lo, hi] = parse_levels(levels);
    ConvergeReport rep;
    Spec drv = parse_spec(driver);
    if (drv.kind == "weier")
        rep = young_weierstrass_rate(drv.num("alpha", 0.75), lo, hi - lo + 1);
    else
        rep = euler_exponential_rate(lo, hi);
    (void)flow;
    (void)field;
    std::ostringstream csv;
    csv << "mesh,error\n";
    for (std::size_t i = 0; i < rep.meshes.size(); ++i)
        csv << csv_line({rep.meshes[i], rep.errors[i]}) << "\n";
    write_text(out_dir / "converge.csv", csv.str());
    json j{{"experiment", "converge"},
           {"driver", driver},
           {"levels", {lo, hi}},
           {"meshes", rep.meshes},
           {"errors", rep.errors},
           {"slope", rep.fit.slope},
           {"r2", rep.fit.r2}};
    return report(j, out_dir, "converge", false);
}

int cmd_certify(const fs::path& out_dir) {
    CertifyExperiment e = davie_certification_experiment();
    auto rep_json = [](const DSolutionReport& r) {
        return json{{"K_hat", r.K_hat},     {"L_bound", r.L_bound}, {"certifying", r.certifying},
                    {"pass", r.pass},       {"pairs", r.pairs},     {"degenerate", r.degenerate}};
    };
    bool violated = (e.scaled_linear.certifying && !e.scaled_linear.pass) ||
                    (e.constant_davie.certifying && !e.constant_davie.pass);
    json j{{"experiment", "certify"},
           {"L_arithmetic", e.L_arithmetic},
           {"scaled_linear", rep_json(e.scaled_linear)},
           {"constant_davie", rep_json(e.constant_davie)}};
    return report(j, out_dir, "certify", violated);
}

int cmd_stability(unsigned kmax, const fs::path& out_dir) {
    HorizonStability e = stability_horizon_experiment(kmax);
    std::ostringstream csv;
    csv << "T,ell_hat,ell_formula\n";
    bool violated = false;
    for (std::size_t i = 0; i < e.horizons.size(); ++i) {
        csv << csv_line({e.horizons[i], e.ell_hat[i], e.ell_formula[i]}) << "\n";
        if (e.ell_hat[i] > e.ell_formula[i]) violated = true;
    }
    write_text(out_dir / "stability.csv", csv.str());
    json j{{"experiment", "stability"},
           {"horizons", e.horizons},
           {"ell_hat", e.ell_hat},
           {"ell_formula", e.ell_formula},
           {"shrinking", e.shrinking}};
    return report(j, out_dir, "stability", violated);
}

int cmd_perturb(unsigned bits, const std::string& levels, const fs::path& out_dir) {
    auto [lo, hi] = parse_levels(levels);
    PerturbLevels e = quantization_stability_experiment(bits, lo, hi - lo + 1);
    std::ostringstream csv;
    csv << "steps,eps_norm,dist,ratio\n";
    for (std::size_t i = 0; i < e.steps.size(); ++i)
        csv << csv_line({double(e.steps[i]), e.eps_norms[i], e.dists[i], e.ratios[i]}) << "\n";
    write_text(out_dir / "perturb.csv", csv.str());
    json j{{"experiment", "perturb"}, {"bits", bits},           {"steps", e.steps},
           {"eps_norms", e.eps_norms}, {"dists", e.dists},      {"ratios", e.ratios},
           {"variation", e.variation}};
    return report(j, out_dir, "perturb", e.variation > 2.0);
}

int cmd_brownian_rate(const std::string& sigma, const std::string& levels, std::size_t paths,
                      std::uint64_t seed, const fs::path& out_dir) {
    auto [lo, hi] = parse_levels(levels);
    std::vector<unsigned> lv;
    for (unsigned l = lo; l <= hi; ++l) lv.push_back(l);
    VectorField f = make_field(sigma);
    bool closed_form = f.name == "linear";
    RateReport rep = rate_regression(f, Vec(f.m, 1.0), lv, paths, seed,
                                     closed_form ? RateReference::ClosedFormGbm
                                                 : RateReference::SelfConsistent,
                                     closed_form ? 1.0 : f.gamma / 2.0);
    std::ostringstream csv;
    csv << "path,mesh,error\n";
    for (std::size_t p = 0; p < rep.errors.size(); ++p)
        for (std::size_t i = 0; i < rep.meshes.size(); ++i)
            csv << csv_line({double(p), rep.meshes[i], rep.errors[p][i]}) << "\n";
    write_text(out_dir / "brownian_rate.csv", csv.str());
    json j{{"experiment", "brownian_rate"},
           {"sigma", sigma},
           {"levels", {lo, hi}},
           {"paths", paths},
           {"seed", seed},
           {"median_slope", rep.median_slope},
           {"slopes", rep.slopes},
           {"theta_target", rep.theta_target},
           {"excluded", rep.excluded},
           {"degenerate", rep.degenerate}};
    return report(j, out_dir, "brownian_rate", false);
}

int cmd_brownian_psi(const std::string& sigma, unsigned k, std::size_t n_mc, std::uint64_t seed,
                     const fs::path& out_dir) {
    VectorField f = make_field(sigma);
    std::vector<double> dts;
    for (int e = 2; e <= 7; ++e) dts.push_back(std::pow(2.0, -e));
    PsiMomentReport rep = psi_moment_check(f, Vec(f.m, 1.0), k, dts, n_mc, seed);
    std::ostringstream csv;
    csv << "dt,moment,stderr\n";
    for (const auto& r : rep.rows) csv << csv_line({r.dt, r.moment, r.stderr_}) << "\n";
    write_text(out_dir / "brownian_psi.csv", csv.str());
    json j{{"experiment", "brownian_psi"},
           {"sigma", sigma},
           {"k", k},
           {"n_mc", n_mc},
           {"seed", seed},
           {"fitted_exponent", rep.fitted_exponent},
           {"target_exponent", rep.target_exponent},
           {"low_budget", rep.low_budget}};
    return report(j, out_dir, "brownian_psi", false);
}

int cmd_generic(const std::string& field, const std::string& mollify_range, std::uint64_t seed,
                const fs::path& out_dir) {
    Spec fs_ = parse_spec(field);
    double gamma = fs_.num("gamma", 0.5);
    auto [lo, hi] = parse_levels(mollify_range);
    MollifyLadder e = mollify_ladder_experiment(gamma, lo, hi, seed);
    std::ostringstream csv;
    csv << "h,d_A,sup_dist\n";
    for (std::size_t i = 0; i < e.hs.size(); ++i)
        csv << csv_line({e.hs[i], e.dA[i], e.sup_dists[i]}) << "\n";
    write_text(out_dir / "generic.csv", csv.str());
    json j{{"experiment", "generic"},
           {"gamma", gamma},
           {"seed", seed},
           {"h", e.hs},
           {"d_A", e.dA},
           {"sup_dist", e.sup_dists},
           {"C", e.fit.C},
           {"r2", e.fit.r2},
           {"strictly_decreasing", e.decreasing}};
    return report(j, out_dir, "generic", !e.decreasing);
}

// -- low-level sew/stab commands --

struct SewArgs {
    std::string field = "linear", driver = "time", flow = "euler";
    std::string omega = "linear", varpi = "pow:theta=1.2";
    unsigned level = 6;
    double T = 1.0, a0 = 1.0, delta_c = 0.0, M = 0.0;
    std::uint64_t seed = 1;
    std::string out = "out";
};

BuiltFlow sew_build(const SewArgs& sa) {
    VectorField f = make_field(sa.field);
    BuiltFlow b = make_flow(f, sa.driver, sa.flow, std::size_t{1} << sa.level, sa.T, sa.seed);
    if (sa.delta_c > 0) {
        double c = sa.delta_c;
        b.phi.env.delta = DeltaFunction{[c](double h) { return c * h; }};
    }
    b.phi.env.M = sa.M;
    return b;
}

Vec sew_start(const SewArgs& sa, const AlmostFlow& phi) { return Vec(phi.dim, sa.a0); }

int cmd_sew_run(const SewArgs& sa) {
    BuiltFlow b = sew_build(sa);
    SchemePath y = run_scheme(b.phi, b.pi, sew_start(sa, b.phi));
    write_path_csv(fs::path(sa.out) / "sew_run.csv", y);
    json j{{"experiment", "sew_run"}, {"flow", b.phi.tag},      {"steps", b.pi.intervals()},
           {"escaped", y.escaped},    {"origin", y.origin},     {"final", y.values.back()},
           {"seed", sa.seed}};
    return report(j, sa.out, "sew_run", false);
}

int cmd_sew_certify(const SewArgs& sa) {
    BuiltFlow b = sew_build(sa);
    Control omega = make_omega(sa.omega, sa.T);
    Remainder varpi = make_varpi(sa.varpi);
    SchemePath y = run_scheme(b.phi, b.pi, sew_start(sa, b.phi));
    DSolutionReport rep = certify_d_solution(b.phi, y, omega, varpi, b.phi.env);
    json j{{"experiment", "sew_certify"}, {"K_hat", rep.K_hat},   {"L_bound", rep.L_bound},
           {"certifying", rep.certifying}, {"pass", rep.pass},    {"pairs", rep.pairs},
           {"degenerate", rep.degenerate}, {"seed", sa.seed}};
    return report(j, sa.out, "sew_certify", (rep.certifying && !rep.pass) || rep.degenerate);
}

int cmd_sew_consistency(const SewArgs& sa, unsigned refine_levels) {
    BuiltFlow b = sew_build(sa);
    if (b.phi.tag == "davie")
        throw std::invalid_argument("sew consistency: use an euler flow (needs off-grid times)");
    Control omega = make_omega(sa.omega, sa.T);
    Remainder varpi = make_varpi(sa.varpi);
    Partition sigma = refine_dyadic(b.pi, refine_levels);
    SchemePath y = run_scheme(b.phi, sigma, sew_start(sa, b.phi));
    DSolutionReport cert = certify_d_solution(b.phi, y, omega, varpi, b.phi.env);
    ConsistencyReport rep = consistency_gap(b.phi, y, b.pi, omega, varpi, b.phi.env, cert.K_hat);
    json j{{"experiment", "sew_consistency"},
           {"A_bound", rep.A_bound},
           {"gap", rep.gap},
           {"worst_budget", rep.worst_budget},
           {"within_budget", rep.within_budget},
           {"pairs", rep.pairs},
           {"refine_levels", refine_levels}};
    return report(j, sa.out, "sew_consistency", !rep.within_budget);
}

int cmd_sew_limit(const SewArgs& sa, double s, double t, unsigned kmax) {
    BuiltFlow b = sew_build(sa);
    if (b.phi.tag == "davie")
        throw std::invalid_argument("sew limit: use an euler flow (needs off-grid times)");
    SchemePath y = run_scheme(b.phi, refine_dyadic(b.pi, 3), sew_start(sa, b.phi));
    SewingLimit lim = sewing_limit(b.phi, y, s, t, kmax);
    json j{{"experiment", "sew_limit"}, {"s", s},
           {"t", t},                    {"value", lim.value},
           {"last_gap", lim.last_gap},  {"depth", lim.depth},
           {"diverging", lim.diverging}};
    return report(j, sa.out, "sew_limit", lim.diverging);
}

int cmd_sew_perturb(const SewArgs& sa, const std::string& perturb_str) {
    BuiltFlow b = sew_build(sa);
    Control omega = make_omega(sa.omega, sa.T);
    Remainder varpi = make_varpi(sa.varpi);
    Spec ps = parse_spec(perturb_str);
    Perturbation eps;
    if (ps.kind == "quant")
        eps = quantization_perturbation(b.phi, static_cast<unsigned>(ps.num("bits", 20)));
    else if (ps.kind == "uniform")
        eps = uniform_perturbation(ps.num("eta", 0.01), omega, varpi, Vec(b.phi.dim, 1.0));
    else
        throw std::invalid_argument("unknown perturbation kind '" + ps.kind + "'");
    Vec a = sew_start(sa, b.phi);
    SchemePath y = run_scheme(b.phi, b.pi, a);
    SchemePath z = perturbed_scheme(b.phi, eps, b.pi, a);
    double dist = 0, eta = 0;
    for (std::size_t k = 0; k + 1 < b.pi.points.size(); ++k) {
        dist = std::max(dist, norm2(y.values[k + 1] - z.values[k + 1]));
        double w = varpi(omega(b.pi.points[k], b.pi.points[k + 1]));
        if (w > 0)
            eta = std::max(eta, norm2(eps(b.pi.points[k], b.pi.points[k + 1], z.values[k])) / w);
    }
    json j{{"experiment", "sew_perturb"}, {"perturbation", perturb_str},
           {"sup_dist", dist},            {"eps_norm", eta},
           {"ratio", eta > 0 ? dist / eta : 0.0}};
    return report(j, sa.out, "sew_perturb", false);
}

int cmd_stab_distance(const std::string& field, double h, std::uint64_t seed,
                      const std::string& out) {
    Spec fsp = parse_spec(field);
    VectorField f = make_field(field);
    Partition grid = Partition::uniform(1.0, 128);
    GridRoughPath x = sample_ito_ebm(1, grid, 0, seed);
    Control omega = linear_control(1.0);
    Remainder varpi = power_remainder((2.0 + fsp.num("gamma", 1.0)) / 2.0);
    AlmostFlow phi = davie_flow(f, x);
    AlmostFlow psi = davie_flow(mollify(f, h), x);
    auto samples = sample_simplex(grid, 1.2, 1, 300, seed ^ 0x55);
    FlowDistance d = d_A(phi, psi, omega, varpi, samples);
    SchemePath y = run_scheme(phi, grid, Vec{0.4});
    SchemePath z = run_scheme(psi, grid, Vec{0.4});
    SchemeDistanceReport rep = scheme_distance(phi, psi, y, z, omega, varpi);
    json j{{"experiment", "stab_distance"}, {"field", field},        {"h", h},
           {"seed", seed},                  {"d_A", d.value()},      {"d_inf", d.d_inf},
           {"defect_div", d.defect_div},    {"osc_norm", d.osc_norm}, {"lhs", rep.lhs},
           {"sup_dist", rep.sup_dist},      {"samples", d.samples}};
    return report(j, out, "stab_distance", false);
}

int cmd_stab_lambda(double lam_theta, const std::string& out) {
    Control omega = linear_control(1.0);
    Remainder varpi = power_remainder(1.2);
    AlmostFlow phi = euler_young_flow(linear_scalar_field(0.3), unit_time_driver(), 1.0);
    phi.env.delta = DeltaFunction{[](double h) { return 0.45 * h; }};
    SchemePath y = run_scheme(phi, Partition::uniform(1.0, 64), Vec{1.0});
    DSolutionReport cert = certify_d_solution(phi, y, omega, varpi, phi.env);
    auto Lam = [lam_theta](double x) { return std::pow(x, lam_theta); };
    LambdaReport rep = lambda_norm(y, Lam, omega, varpi, cert.K_hat, 0.45, 1.0);
    bool violated = rep.flagged;
    if (rep.certified) {
        double sup_y = 0;
        for (const auto& v : y.values) sup_y = std::max(sup_y, norm2(v));
        if (sup_y > rep.bound_cont3 || rep.lambda_norm > rep.bound_cont4) violated = true;
    }
    json j{{"experiment", "stab_lambda"},   {"lambda_theta", lam_theta},
           {"lambda_norm", rep.lambda_norm}, {"bound_cont3", rep.bound_cont3},
           {"bound_cont4", rep.bound_cont4}, {"certified", rep.certified},
           {"flagged", rep.flagged}};
    return report(j, out, "stab_lambda", violated);
}

// -- config-file front end --

int run_config(const std::string& path, const std::string& out_override) {
    Config cfg = Config::parse_file(path);
    const std::map<std::string, std::set<std::string>> allowed = {
        {"experiment", {"name", "out", "seed"}},
        {"converge", {"flow", "field", "driver", "levels"}},
        {"perturb", {"bits", "levels"}},
        {"stability", {"kmax"}},
        {"brownian", {"mode", "sigma", "levels", "paths", "k", "n_mc"}},
        {"generic", {"field", "mollify"}},
    };
    validate_keys(cfg, allowed);
    std::string name = cfg.get("experiment", "name");
    fs::path out = out_override.empty() ? cfg.get_or("experiment", "out", "out") : out_override;
    std::uint64_t seed = static_cast<std::uint64_t>(cfg.num_or("experiment", "seed", 1));
    if (name == "converge")
        return cmd_converge(cfg.get_or("converge", "flow", "euler"),
                            cfg.get_or("converge", "field", "linear"),
                            cfg.get_or("converge", "levels", "4..10"),
                            cfg.get_or("converge", "driver", "time"), out);
    if (name == "certify") return cmd_certify(out);
    if (name == "stability")
        return cmd_stability(static_cast<unsigned>(cfg.num_or("stability", "kmax", 4)), out);
    if (name == "perturb")
        return cmd_perturb(static_cast<unsigned>(cfg.num_or("perturb", "bits", 20)),
                           cfg.get_or("perturb", "levels", "4..8"), out);
    if (name == "brownian") {
        std::string mode = cfg.get_or("brownian", "mode", "rate");
        if (mode == "psi")
            return cmd_brownian_psi(cfg.get_or("brownian", "sigma", "linear"),
                                    static_cast<unsigned>(cfg.num_or("brownian", "k", 2)),
                                    static_cast<std::size_t>(cfg.num_or("brownian", "n_mc", 10000)),
                                    seed, out);
        return cmd_brownian_rate(cfg.get_or("brownian", "sigma", "linear"),
                                 cfg.get_or("brownian", "levels", "4..10"),
                                 static_cast<std::size_t>(cfg.num_or("brownian", "paths", 20)),
                                 seed, out);
    }
    if (name == "generic")
        return cmd_generic(cfg.get_or("generic", "field", "rough:gamma=0.5"),
                           cfg.get_or("generic", "mollify", "1..6"), seed, out);
    throw ConfigError("unknown experiment name '" + name + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sewing-lab: almost-flow and rough-path scheme experiments"};
    app.require_subcommand(1);

    std::string out = "out", levels = "4..10", field = "linear", driver = "time";
    std::string flow = "euler", sigma = "linear", mollify_range = "1..6", perturb_str = "quant:bits=20";
    std::string config_path;
    unsigned bits = 20, kmax = 4, k_order = 2, refine_levels = 3, limit_kmax = 8;
    std::size_t paths = 20, n_mc = 10000;
    std::uint64_t seed = 1;
    double s_time = 0.0, t_time = 1.0, lam_theta = 0.5;
    SewArgs sa;

    auto add_out = [&](CLI::App* c) { c->add_option("--out", out, "output directory"); };

    auto* converge = app.add_subcommand("converge", "convergence-rate experiment");
    converge->add_option("--flow", flow);
    converge->add_option("--field", field);
    converge->add_option("--levels", levels);
    converge->add_option("--driver", driver);
    add_out(converge);

    auto* certify = app.add_subcommand("certify", "D-solution certification experiment");
    add_out(certify);

    auto* stability = app.add_subcommand("stability", "Lipschitz constant across horizons");
    stability->add_option("--kmax", kmax);
    add_out(stability);

    auto* perturb = app.add_subcommand("perturb", "quantization stability experiment");
    perturb->add_option("--bits", bits);
    perturb->add_option("--levels", levels);
    add_out(perturb);

    auto* brownian = app.add_subcommand("brownian", "Brownian-driver experiments");
    brownian->require_subcommand(1);
    auto* brate = brownian->add_subcommand("rate", "pathwise convergence rates");
    brate->add_option("--sigma", sigma);
    brate->add_option("--levels", levels);
    brate->add_option("--paths", paths);
    brate->add_option("--seed", seed);
    add_out(brate);
    auto* bpsi = brownian->add_subcommand("psi", "remainder moment exponents");
    bpsi->add_option("--sigma", sigma);
    bpsi->add_option("--k", k_order);
    bpsi->add_option("--nmc", n_mc);
    bpsi->add_option("--seed", seed);
    add_out(bpsi);

    auto* generic = app.add_subcommand("generic", "mollification ladder + distance regression");
    generic->add_option("--field", field);
    generic->add_option("--mollify", mollify_range, "exponent range k for h=2^-k, e.g. 1..6");
    generic->add_option("--seed", seed);
    add_out(generic);

    auto* sew = app.add_subcommand("sew", "single-scheme operations");
    sew->require_subcommand(1);
    auto add_sew_common = [&](CLI::App* c) {
        c->add_option("--field", sa.field);
        c->add_option("--driver", sa.driver);
        c->add_option("--flow", sa.flow);
        c->add_option("--omega", sa.omega);
        c->add_option("--varpi", sa.varpi);
        c->add_option("--level", sa.level);
        c->add_option("--T", sa.T);
        c->add_option("--a", sa.a0);
        c->add_option("--delta", sa.delta_c, "envelope delta(h) = c h");
        c->add_option("--M", sa.M, "envelope defect constant");
        c->add_option("--seed", sa.seed);
        c->add_option("--out", sa.out);
    };
    auto* sew_run = sew->add_subcommand("run", "iterate the scheme");
    add_sew_common(sew_run);
    auto* sew_certify = sew->add_subcommand("certify", "D-solution certificate");
    add_sew_common(sew_certify);
    auto* sew_cons = sew->add_subcommand("consistency", "Phi^sigma vs Phi^pi gap");
    add_sew_common(sew_cons);
    sew_cons->add_option("--refine", refine_levels);
    auto* sew_limit = sew->add_subcommand("limit", "dyadic sewing limit");
    add_sew_common(sew_limit);
    sew_limit->add_option("--s", s_time);
    sew_limit->add_option("--t", t_time);
    sew_limit->add_option("--kmax", limit_kmax);
    auto* sew_pert = sew->add_subcommand("perturb", "perturbed scheme distance");
    add_sew_common(sew_pert);
    sew_pert->add_option("--perturb", perturb_str);

    auto* stab = app.add_subcommand("stab", "stability diagnostics");
    stab->require_subcommand(1);
    auto* stab_lip = stab->add_subcommand("lipschitz", "empirical Phi^pi Lipschitz constant");
    stab_lip->add_option("--kmax", kmax);
    add_out(stab_lip);
    auto* stab_dist = stab->add_subcommand("distance", "d_A and scheme distance");
    stab_dist->add_option("--field", field);
    double h_moll = 0.25;
    stab_dist->add_option("--hmoll", h_moll);
    stab_dist->add_option("--seed", seed);
    add_out(stab_dist);
    auto* stab_lam = stab->add_subcommand("lambda", "Lambda-norm bounds");
    stab_lam->add_option("--theta", lam_theta);
    add_out(stab_lam);

    auto* runcfg = app.add_subcommand("run", "run an experiment from a config file");
    runcfg->add_option("--config", config_path)->required();
    runcfg->add_option("--out", out, "override the config's output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*converge) return cmd_converge(flow, field, levels, driver, out);
        if (*certify) return cmd_certify(out);
        if (*stability) return cmd_stability(kmax, out);
        if (*perturb) return cmd_perturb(bits, levels, out);
        if (*brate) return cmd_brownian_rate(sigma, levels, paths, seed, out);
        if (*bpsi) return cmd_brownian_psi(sigma, k_order, n_mc, seed, out);
        if (*generic) return cmd_generic(field, mollify_range, seed, out);
        if (*sew_run) return cmd_sew_run(sa);
        if (*sew_certify) return cmd_sew_certify(sa);
        if (*sew_cons) return cmd_sew_consistency(sa, refine_levels);
        if (*sew_limit) return cmd_sew_limit(sa, s_time, t_time, limit_kmax);
        if (*sew_pert) return cmd_sew_perturb(sa, perturb_str);
        if (*stab_lip) return cmd_stability(kmax, out);
        if (*stab_dist) return cmd_stab_distance(field, h_moll, seed, out);
        if (*stab_lam) return cmd_stab_lambda(lam_theta, out);
        if (*runcfg) {
            std::string ov = runcfg->count("--out") ? out : "";
            return run_config(config_path, ov);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
