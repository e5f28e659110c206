// Command-line front end: lagrange, classify, sweep, section, manifold, plot,
// version. Exit codes: 0 ok, 2 bad input, 3 integration failure, 4 partial
// sweep failure.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "wsb/csv.hpp"
#include "wsb/io.hpp"
#include "wsb/manifolds.hpp"
#include "wsb/parallel.hpp"
#include "wsb/section.hpp"
#include "wsb/sweep.hpp"

namespace fs = std::filesystem;
using namespace wsb;

namespace {

constexpr int kExitBadInput = 2;
constexpr int kExitIntegration = 3;
constexpr int kExitPartial = 4;

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw DomainError("cannot write " + p.string());
    return out;
}

void write_json(const fs::path& p, const nlohmann::json& j) {
    auto out = open_out(p);
    out << j.dump(2) << '\n';
}

int cmd_lagrange(double mu_value, bool json) {
    const MassRatio mu(mu_value);
    const EquilibriumSet eq = lagrange_points(mu);
    if (json) {
        nlohmann::json j = {{"mu", mu.value()}, {"points", nlohmann::json::array()}};
        for (int i = 1; i <= 5; ++i) {
            j["points"].push_back({{"name", "L" + std::to_string(i)},
                                   {"y1", eq.L(i).y1},
                                   {"y2", eq.L(i).y2},
                                   {"C", eq.C(i)},
                                   {"distance_to_p2", eq.L(i).distance_to_p2()}});
        }
        std::cout << j.dump(2) << '\n';
        return 0;
    }
    std::cout << "point,y1,y2,C,distance_to_p2\n";
    CsvWriter w(std::cout);
    for (int i = 1; i <= 5; ++i) {
        w.field("L" + std::to_string(i)).field(eq.L(i).y1).field(eq.L(i).y2).field(eq.C(i));
        w.field(eq.L(i).distance_to_p2());
        w.end_row();
    }
    return 0;
}

int cmd_classify(const PeriapsisIC& ic, int n, const IntegratorConfig& cfg, const std::string& trajectory_path) {
    Trajectory traj;
    const StabilityOutcome out = classify(ic, n, cfg, trajectory_path.empty() ? nullptr : &traj);
    write_outcome_header(std::cout);
    write_outcome_row(std::cout, ic, n, out);
    if (!trajectory_path.empty()) {
        auto f = open_out(trajectory_path);
        write_trajectory_csv(f, traj);
    }
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& output_override, int threads) {
    RunConfig cfg = load_run_config(config_path);
    if (!output_override.empty()) cfg.output_dir = output_override;
    if (threads > 0) cfg.threads = threads;
    cfg.validate();
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);

    const SweepResult res = sweep(cfg.sweep_config());
    std::vector<std::string> products{"scans.csv", "intervals.csv", "boundaries.csv"};
    {
        auto f = open_out(dir / "scans.csv");
        write_scan_csv(f, res.scans);
    }
    {
        auto f = open_out(dir / "intervals.csv");
        write_intervals_csv(f, res.intervals);
    }
    {
        auto f = open_out(dir / "boundaries.csv");
        write_boundaries_csv(f, res.boundaries);
    }
    if (cfg.svg) {
        for (const std::string kind : {"intervals", "boundaries"}) {
            const CsvTable t = read_csv_file((dir / (kind + ".csv")).string());
            auto f = open_out(dir / (kind + ".svg"));
            figure_for(t, kind).write(f);
            products.push_back(kind + ".svg");
        }
    }
    if (res.partial()) {
        auto f = open_out(dir / "errors.log");
        for (const auto& e : res.errors) f << e << '\n';
        products.push_back("errors.log");
    } else {
        fs::remove(dir / "errors.log");
    }
    write_json(dir / "manifest.json", make_manifest("sweep", to_json(cfg), products));
    std::cout << "scans " << res.scans.size() << ", boundaries " << res.boundaries.size() << ", errors "
              << res.errors.size() << " -> " << dir.string() << '\n';
    return res.partial() ? kExitPartial : 0;
}

struct SectionArgs {
    double mu = 0.01215;
    double theta = 0.0;
    std::optional<double> r, rdot, C, e;
    int k_max = 10;
    std::string out;
};

int cmd_section(const SectionArgs& a, const IntegratorConfig& icfg) {
    const MassRatio mu(a.mu);
    MapConfig mc;
    mc.integrator = icfg;
    if (!a.r) throw DomainError("--r is required");
    IterateOrbit orbit;
    bool all_negative = true;
    if (a.e) {
        if (a.rdot || a.C) throw DomainError("give either --e (periapsis start) or --rdot and --C, not both");
        const SStarOrbit s = sstar_orbit({*a.r, a.theta, *a.e, mu}, a.k_max, mc);
        orbit = s.orbit;
        all_negative = s.all_e2_negative;
    } else {
        if (!a.rdot || !a.C) throw DomainError("a section start needs --rdot and --C (or --e for a periapsis start)");
        orbit = iterate({*a.r, *a.rdot, a.theta, *a.C, mu}, a.k_max, mc);
        for (const auto& it : orbit.iterates) all_negative = all_negative && it.e2 < 0.0;
    }
    std::ostream* csv = &std::cout;
    std::ofstream file;
    if (!a.out.empty()) {
        file = open_out(a.out);
        csv = &file;
    }
    write_iterates_csv(*csv, orbit);
    std::ostream& summary = a.out.empty() ? std::cerr : std::cout;
    summary << "end=" << to_string(orbit.end) << " iterates=" << orbit.iterates.size() - 1
            << " bounded=" << (orbit.bounded() ? "yes" : "no") << " e2_negative=" << (all_negative ? "yes" : "no")
            << '\n';
    return 0;
}

struct ManifoldArgs {
    double mu = 0.00095;
    double C = 3.037;
    std::string neck = "L1";
    std::string branch = "stable-interior";
    double theta = 0.0;
    int k_max = 2;
    int seeds = 100;
    double epsilon = 1e-6;
    double t_span = 10.0 * kTwoPi;
    std::optional<double> r_star;
    int n = 1;
    std::string out = "wsb_manifold";
};

Branch parse_branch(const std::string& s) {
    for (Branch b : {Branch::StableInterior, Branch::StableExterior, Branch::UnstableInterior, Branch::UnstableExterior})
        if (s == to_string(b)) return b;
    throw DomainError("unknown branch '" + s + "'");
}

int cmd_manifold(const ManifoldArgs& a, const IntegratorConfig& icfg, int threads) {
    const MassRatio mu(a.mu);
    const Neck neck = a.neck == "L1" ? Neck::L1 : a.neck == "L2" ? Neck::L2 : throw DomainError("neck must be L1 or L2");
    const Branch branch = parse_branch(a.branch);
    const fs::path dir(a.out);
    fs::create_directories(dir);

    const LyapunovOrbit orbit = lyapunov_family(mu, a.C, neck);
    GlobalizeSettings g;
    g.epsilon = a.epsilon;
    g.n_seeds = a.seeds;
    g.t_span = a.t_span;
    g.escape_radius = 1.5 * escape_radius(mu);
    g.p2_turns = a.k_max + 1.0;
    g.integrator = icfg;
    g.threads = resolve_threads(threads);
    const auto trajs = globalize(orbit, branch, g);
    const auto cuts = section_cuts(trajs, a.theta, a.k_max);
    std::vector<std::string> products{"orbit.csv", "cuts.csv"};
    {
        auto f = open_out(dir / "orbit.csv");
        write_orbit_csv(f, orbit);
    }
    {
        auto f = open_out(dir / "cuts.csv");
        write_cuts_csv(f, cuts);
    }
    nlohmann::json params = {{"mu", a.mu},          {"C", a.C},         {"neck", a.neck},       {"branch", a.branch},
                             {"theta", a.theta},    {"k_max", a.k_max}, {"seeds", a.seeds},     {"epsilon", a.epsilon},
                             {"t_span", a.t_span},  {"integrator", to_json(icfg)}};
    const MonodromySpectrum sp = monodromy_spectrum(orbit.monodromy);
    std::cout << "orbit " << to_string(neck) << " C=" << fmt_double(orbit.jacobi) << " T=" << fmt_double(orbit.period)
              << " residual=" << fmt_double(orbit.periodicity_residual) << " lambda=" << fmt_double(sp.lambda) << '\n';
    for (const auto& c : cuts) {
        std::cout << "cut " << to_string(c.branch) << " k=" << c.k << " points=" << c.points.size() << '\n';
    }
    if (a.r_star) {
        ComparisonSettings cs;
        cs.globalize = g;
        cs.globalize.p2_turns = 0.0;
        cs.globalize.escape_radius = 0.0;
        const ManifoldComparison cmp = wn_vs_manifold(a.theta, *a.r_star, a.C, a.n, mu, cs);
        nlohmann::json j = {{"r_star", cmp.r_star},
                            {"C", cmp.jacobi},
                            {"n", a.n},
                            {"manifolds_exist", cmp.manifolds_exist},
                            {"note", cmp.note},
                            {"distance_cut_n", std::isfinite(cmp.distance_cut_n) ? nlohmann::json(cmp.distance_cut_n) : nullptr},
                            {"distance_cut_n_plus_1", std::isfinite(cmp.distance_cut_n_plus_1)
                                                          ? nlohmann::json(cmp.distance_cut_n_plus_1)
                                                          : nullptr},
                            {"distance_any", std::isfinite(cmp.distance_any) ? nlohmann::json(cmp.distance_any) : nullptr},
                            {"intersections", nlohmann::json::array()}};
        for (const auto& x : cmp.intersections) {
            j["intersections"].push_back(
                {{"r", x.r}, {"E2", x.e2}, {"seed_phase", x.phase}, {"neck", to_string(x.neck)}, {"k", x.k}});
        }
        write_json(dir / "comparison.json", j);
        products.push_back("comparison.json");
        params["r_star"] = *a.r_star;
        params["n"] = a.n;
        std::cout << "comparison nearest=" << (std::isfinite(cmp.distance_any) ? fmt_double(cmp.distance_any) : "none")
                  << '\n';
    }
    write_json(dir / "manifest.json", make_manifest("manifold", params, products));
    return 0;
}

int cmd_plot(const std::string& product, const std::string& kind, const std::string& out) {
    if (!fs::exists(product)) throw DomainError("product does not exist: " + product);
    const CsvTable t = read_csv_file(product);
    const SvgFigure f = figure_for(t, kind);
    if (out.empty()) {
        f.write(std::cout);
    } else {
        auto file = open_out(out);
        f.write(file);
    }
    return 0;
}

void add_integrator_options(CLI::App* sub, IntegratorConfig& c) {
    sub->add_option("--rel-tol", c.rel_tol, "Relative tolerance")->capture_default_str();
    sub->add_option("--abs-tol", c.abs_tol, "Absolute tolerance")->capture_default_str();
    sub->add_option("--t-max", c.t_max, "Integration horizon")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weak stability boundary toolkit for the planar circular restricted three-body problem"};
    app.require_subcommand(1);
    app.fallthrough();
    int threads = 0;
    app.add_option("--threads", threads, "Worker threads (0: WSB_THREADS or hardware)")->check(CLI::NonNegativeNumber);

    double mu = 0.01215;
    bool json = false;
    auto* lag = app.add_subcommand("lagrange", "Lagrange points and their Jacobi constants");
    lag->add_option("--mu", mu, "Mass ratio")->capture_default_str();
    lag->add_flag("--json", json, "JSON output");

    PeriapsisIC ic{0.0, 0.0, 0.0, MassRatio(0.01215)};
    double ic_mu = 0.01215;
    int n = 1;
    IntegratorConfig icfg;
    std::string trajectory_path;
    auto* cls = app.add_subcommand("classify", "Classify one periapsis initial condition");
    cls->add_option("--r", ic.r, "Periapsis distance from P2")->required();
    cls->add_option("--theta", ic.theta, "Periapsis angle")->capture_default_str();
    cls->add_option("--e", ic.e, "Osculating eccentricity")->capture_default_str();
    cls->add_option("--n", n, "Cycle count")->capture_default_str();
    cls->add_option("--mu", ic_mu, "Mass ratio")->capture_default_str();
    cls->add_option("--trajectory", trajectory_path, "Write the trajectory CSV here");
    add_integrator_options(cls, icfg);

    std::string config_path, output_dir;
    auto* swp = app.add_subcommand("sweep", "Run a sweep from a configuration file");
    swp->add_option("config", config_path, "Configuration file")->required()->check(CLI::ExistingFile);
    swp->add_option("--output", output_dir, "Override the output directory");

    SectionArgs sa;
    IntegratorConfig scfg;
    auto* sec = app.add_subcommand("section", "Iterate the first-return map on a ray");
    sec->add_option("--mu", sa.mu)->capture_default_str();
    sec->add_option("--theta", sa.theta)->capture_default_str();
    sec->add_option("--r", sa.r, "Start radius");
    sec->add_option("--rdot", sa.rdot, "Start radial velocity (section start)");
    sec->add_option("--C", sa.C, "Jacobi constant (section start)");
    sec->add_option("--e", sa.e, "Eccentricity (periapsis start)");
    sec->add_option("--k-max", sa.k_max, "Number of returns")->capture_default_str();
    sec->add_option("--out", sa.out, "Iterates CSV path (default stdout)");
    add_integrator_options(sec, scfg);

    ManifoldArgs ma;
    IntegratorConfig mcfg;
    auto* man = app.add_subcommand("manifold", "Lyapunov orbit, globalized manifold and section cuts");
    man->add_option("--mu", ma.mu)->capture_default_str();
    man->add_option("--C", ma.C)->capture_default_str();
    man->add_option("--neck", ma.neck)->check(CLI::IsMember({"L1", "L2"}))->capture_default_str();
    man->add_option("--branch", ma.branch)
        ->check(CLI::IsMember({"stable-interior", "stable-exterior", "unstable-interior", "unstable-exterior"}))
        ->capture_default_str();
    man->add_option("--theta", ma.theta)->capture_default_str();
    man->add_option("--k-max", ma.k_max)->capture_default_str();
    man->add_option("--seeds", ma.seeds)->capture_default_str();
    man->add_option("--epsilon", ma.epsilon)->capture_default_str();
    man->add_option("--t-span", ma.t_span)->capture_default_str();
    man->add_option("--r-star", ma.r_star, "Boundary radius to compare with the stable-manifold cuts");
    man->add_option("--n", ma.n, "Cycle count of the boundary point")->capture_default_str();
    man->add_option("--out", ma.out, "Output directory")->capture_default_str();
    add_integrator_options(man, mcfg);

    std::string product, kind, svg_out;
    auto* plt = app.add_subcommand("plot", "Render a CSV product as SVG");
    plt->add_option("product", product, "CSV product")->required();
    plt->add_option("--kind", kind, "Product kind")->required()->check(CLI::IsMember(plot_kinds()));
    plt->add_option("--out", svg_out, "SVG path (default stdout)");

    app.add_subcommand("version", "Print the tool version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitBadInput;
    }

    try {
        resolve_threads(threads);  // reject a malformed WSB_THREADS early
        if (*lag) return cmd_lagrange(mu, json);
        if (*cls) {
            ic.mu = MassRatio(ic_mu);
            return cmd_classify(ic, n, icfg, trajectory_path);
        }
        if (*swp) return cmd_sweep(config_path, output_dir, threads);
        if (*sec) return cmd_section(sa, scfg);
        if (*man) return cmd_manifold(ma, mcfg, threads);
        if (*plt) return cmd_plot(product, kind, svg_out);
        std::cout << "wsb " << kToolVersion << '\n';
        return 0;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitBadInput;
    } catch (const SingularityError& e) {
        std::cerr << "integration failure: " << e.what() << '\n';
        return kExitIntegration;
    } catch (const StepUnderflowError& e) {
        std::cerr << "integration failure: " << e.what() << '\n';
        return kExitIntegration;
    } catch (const ConvergenceError& e) {
        std::cerr << "integration failure: " << e.what() << '\n';
        return kExitIntegration;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIntegration;
    }
}
