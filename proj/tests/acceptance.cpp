// Acceptance run: one PASS/FAIL line per criterion. Exit status is non-zero
// when any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "wsb/manifolds.hpp"
#include "wsb/section.hpp"
#include "wsb/sweep.hpp"

using namespace wsb;

namespace {

struct Result {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Random periapsis state confined to the P2 region (C above C1) that does not
// reach the collision guard within t_span.
struct H2Sampler {
    MassRatio mu;
    std::mt19937_64 rng;
    int rejected = 0;

    std::pair<P1State, Trajectory> next(double t_span, const IntegratorConfig& cfg) {
        const double c1 = lagrange_points(mu).C(1);
        std::uniform_real_distribution<double> ur(0.01, 0.08), uth(0.0, kTwoPi), ue(0.0, 0.5);
        while (true) {
            const PeriapsisIC ic{ur(rng), uth(rng), ue(rng), mu};
            const P1State s = to_p1_frame(periapsis_state(ic));
            if (jacobi_constant(s, mu) <= c1) {
                ++rejected;
                continue;
            }
            Trajectory tr = propagate(s, 0.0, t_span, mu, cfg);
            if (tr.end != PropagationEnd::Completed) {
                ++rejected;
                continue;
            }
            return {s, std::move(tr)};
        }
    }
};

Result lagrange_constants() {
    const auto eq = lagrange_points(MassRatio(0.01215));
    const double d1 = std::abs(eq.C(1) - 3.20034), d2 = std::abs(eq.C(2) - 3.18416), d3 = std::abs(eq.C(3) - 3.02415);
    double worst45 = 0.0;
    for (int i = 0; i < 20; ++i) {
        const double mu = std::pow(10.0, -7.0 + (7.0 + std::log10(0.45)) * i / 19.0);  // 1e-7 .. 0.45
        const auto e = lagrange_points(MassRatio(mu));
        worst45 = std::max({worst45, std::abs(e.C(4) - 3.0), std::abs(e.C(5) - 3.0)});
    }
    return {std::max({d1, d2, d3}) <= 5e-4 && worst45 <= 1e-12,
            fmt("C1=%.6f C2=%.6f C3=%.6f max|dC|=%.1e; max|C4,5-3| over 20 mu=%.1e", eq.C(1), eq.C(2), eq.C(3),
                std::max({d1, d2, d3}), worst45)};
}

Result jacobi_conservation() {
    // Fifty revolutions of the orbit about P2; the drift over fifty revolutions
    // of the primaries (t = 100 pi) is reported alongside.
    const MassRatio mu(0.01215);
    const double c1 = lagrange_points(mu).C(1);
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> ur(0.01, 0.08), uth(0.0, kTwoPi), ue(0.0, 0.5);
    IntegratorConfig cfg;  // rel_tol = abs_tol = 1e-12
    double worst = 0.0, worst_long = 0.0;
    int done = 0, rejected = 0;
    while (done < 20) {
        const PeriapsisIC ic{ur(rng), uth(rng), ue(rng), mu};
        const P1State s0 = to_p1_frame(periapsis_state(ic));
        const double c0 = jacobi_constant(s0, mu);
        if (c0 <= c1) {
            ++rejected;
            continue;
        }
        const auto ev = propagate_events(s0, mu, cfg, {{WindingThreshold{Center::P2, 50.0}, true}});
        if (ev.events.empty()) {
            ++rejected;
            continue;
        }
        for (const auto& n : ev.trajectory.nodes)
            worst = std::max(worst, std::abs(jacobi_constant(n.state, mu) - c0) / std::abs(c0));
        const Trajectory tr = propagate(s0, 0.0, 50.0 * kTwoPi, mu, cfg);
        for (const auto& n : tr.nodes)
            worst_long = std::max(worst_long, std::abs(jacobi_constant(n.state, mu) - c0) / std::abs(c0));
        ++done;
    }
    return {worst <= 1e-9, fmt("max relative drift %.2e over 50 revolutions about P2, 20 ICs (%d draws rejected); "
                               "over t = 100 pi: %.2e",
                               worst, rejected, worst_long)};
}

Result periapsis_identity() {
    double worst = 0.0, worst_rel = 0.0;
    const std::vector<double> mus{1e-6, 1e-4, 0.00095, 0.01215, 0.1};
    for (double mu : mus)
        for (int i = 0; i < 10; ++i)
            for (int j = 0; j < 10; ++j) {
                const double r = 0.001 + 0.099 * i / 9.0, e = 0.95 * j / 9.0;
                const double e2 = kepler_energy(periapsis_state({r, 0.37 * i + 0.11 * j, e, MassRatio(mu)}), MassRatio(mu));
                const double want = mu * (e - 1.0) / (2.0 * r);
                worst = std::max(worst, std::abs(e2 - want));
                worst_rel = std::max(worst_rel, std::abs(e2 - want) / std::abs(want));
            }
    return {worst <= 1e-13, fmt("max |E2 - mu(e-1)/(2r)| = %.2e (relative %.2e) on 10x10x5 grid", worst, worst_rel)};
}

struct NestingData {
    SweepResult sweep;
    double refine_tol = kDefaultRefineTol;
    double seconds = 0.0;
};

const NestingData& nesting_sweep() {
    static const NestingData data = [] {
        const auto t0 = std::chrono::steady_clock::now();
        SweepConfig c;
        c.mu = MassRatio(0.00095);
        c.thetas = {0.0, M_PI / 2, M_PI, 3 * M_PI / 2};
        c.eccentricities = {0.0, 0.4, 0.9};
        c.ns = {1, 2, 3, 4};
        std::tie(c.r_lo, c.r_hi) = default_scan_range(c.mu);
        c.K = 500;
        c.threads = 0;
        NestingData d;
        d.sweep = sweep(c);
        d.refine_tol = c.refine_tol;
        d.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return d;
    }();
    return data;
}

Result monotone_nesting() {
    const NestingData& d = nesting_sweep();
    const auto& scans = d.sweep.scans;
    std::size_t violations = 0, pairs = 0, excluded = 0, points = 0;
    for (std::size_t a = 0; a < scans.size(); ++a)
        for (std::size_t b = 0; b < scans.size(); ++b) {
            const auto &m = scans[a], &n = scans[b];
            if (m.theta != n.theta || m.e != n.e || m.n <= n.n) continue;
            std::vector<double> centers;
            for (const auto& br : d.sweep.boundaries)
                if (br.theta == m.theta && br.e == m.e && (br.n == m.n || br.n == n.n)) centers.push_back(br.r_star);
            const MonotonicityReport rep = monotonicity_check(m, n, centers, d.refine_tol);
            violations += rep.violations.size();
            excluded += rep.excluded;
            points += m.points.size();
            ++pairs;
        }
    return {violations == 0 && pairs == 72 && d.sweep.errors.empty(),
            fmt("%zu violations over %zu scan pairs (%zu point checks, %zu in bands), %zu boundaries, %zu errors; "
                "sweep %.1f s",
                violations, pairs, points, excluded, d.sweep.boundaries.size(), d.sweep.errors.size(), d.seconds)};
}

Result boundary_separation() {
    const NestingData& d = nesting_sweep();
    const MassRatio mu(0.00095);
    std::size_t ok = 0;
    std::map<int, int> failed_by_n;
    for (const auto& b : d.sweep.boundaries) {
        const bool lo = classify({b.r_star - 2 * d.refine_tol, b.theta, b.e, mu}, b.n).stable();
        const bool hi = classify({b.r_star + 2 * d.refine_tol, b.theta, b.e, mu}, b.n).stable();
        if (lo != hi) {
            ++ok;
        } else {
            ++failed_by_n[b.n];
        }
    }
    const std::size_t total = d.sweep.boundaries.size();
    std::string breakdown;
    for (const auto& [n, k] : failed_by_n) breakdown += fmt(" n=%d:%d", n, k);
    return {total > 0 && ok == total, fmt("%zu / %zu boundaries separate at r* +- 2 refine_tol (refine_tol %.0e); "
                                          "non-separating by n:%s",
                                          ok, total, d.refine_tol, breakdown.empty() ? " none" : breakdown.c_str())};
}

Result section_round_trip() {
    const MassRatio mu(0.01215);
    H2Sampler s{mu, std::mt19937_64(11)};
    IntegratorConfig cfg;
    std::mt19937_64 rng(12);
    double worst_td = 0.0, worst_c0 = 0.0;
    int samples = 0;
    while (samples < 100) {
        const auto [s0, tr] = s.next(20.0, cfg);
        const double c0 = jacobi_constant(s0, mu);
        std::uniform_real_distribution<double> ut(0.0, 20.0);
        for (int k = 0; k < 10 && samples < 100; ++k) {
            const PolarState p = to_polar(to_p2_frame(tr.at(ut(rng))));
            if (!(p.thetadot > 0.0)) continue;
            const RotState st = from_polar(p);
            const SectionPoint sp = section_point(st, p.theta, mu);
            const double td = theta_dot_on_section(sp.r, sp.rdot, sp.theta0, sp.C, mu);
            worst_td = std::max(worst_td, std::abs(td - p.thetadot));
            worst_c0 = std::max(worst_c0, std::abs(theta_dot_on_section(p.r, p.rdot, p.theta, c0, mu) - p.thetadot));
            ++samples;
        }
    }
    // First-return map on 50 section points.
    std::uniform_real_distribution<double> ur(0.01, 0.1), urd(-0.1, 0.1), uth(0.0, kTwoPi), uc(3.21, 3.6);
    double worst_c = 0.0;
    int maps = 0, tried = 0;
    while (maps < 50) {
        ++tried;
        const SectionPoint p{ur(rng), urd(rng), uth(rng), uc(rng), mu};
        ReturnResult r;
        try {
            r = first_return(p);
        } catch (const DomainError&) {
            continue;  // off the section
        }
        if (r.status != ReturnStatus::Returned) continue;
        worst_c = std::max(worst_c, std::abs(jacobi_constant_p2(r.state, mu) - p.C));
        ++maps;
    }
    return {worst_td <= 1e-10 && worst_c <= 1e-9,
            fmt("max |thetadot error| %.2e on 100 samples (%.2e with the initial C, i.e. including integration drift); "
                "max |dC| per return %.2e on 50 points (%d drawn)",
                worst_td, worst_c0, worst_c, tried)};
}

Result mirror_conjugacy() {
    const MassRatio mu(0.01215);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ur(0.02, 0.08), uth(0.0, kTwoPi), ue(0.0, 0.5);
    const double T = 5.0 * kTwoPi;
    double worst = 0.0;
    int done = 0, rejected = 0;
    while (done < 10) {
        const P1State s = to_p1_frame(periapsis_state({ur(rng), uth(rng), ue(rng), mu}));
        const Trajectory a = propagate(s, 0.0, T, mu, {});
        const Trajectory b = propagate(mirror(s), 0.0, -T, mu, {});
        if (a.end != PropagationEnd::Completed || b.end != PropagationEnd::Completed) {
            ++rejected;
            continue;
        }
        const P1State x = mirror(a.nodes.back().state), y = b.nodes.back().state;
        worst = std::max({worst, std::abs(x.y1 - y.y1), std::abs(x.y2 - y.y2), std::abs(x.v1 - y.v1),
                          std::abs(x.v2 - y.v2)});
        ++done;
    }
    return {worst <= 1e-8, fmt("max component mismatch %.2e over t = 5 revolutions, 10 states (%d rejected)", worst,
                               rejected)};
}

Result lyapunov_quality() {
    const MassRatio mu(0.00095);
    bool pass = true;
    std::string detail;
    for (Neck n : {Neck::L1, Neck::L2}) {
        const LyapunovOrbit o = lyapunov_family(mu, 3.037, n);
        const MonodromySpectrum sp = monodromy_spectrum(o.monodromy);
        const bool ok = o.periodicity_residual < 1e-9 && sp.unit_deviation <= 1e-6 &&
                        std::abs(sp.determinant - 1.0) <= 1e-8 && sp.lambda > 1.0 &&
                        std::abs(sp.lambda * sp.lambda_inv - 1.0) <= 1e-6;
        pass = pass && ok;
        detail += fmt("%s: T=%.6f residual=%.1e lambda=%.4e unit dev=%.1e |det-1|=%.1e; ", to_string(n), o.period,
                      o.periodicity_residual, sp.lambda, sp.unit_deviation, std::abs(sp.determinant - 1.0));
    }
    return {pass, detail};
}

Result manifold_concordance() {
    const MassRatio mu(0.00095);
    const auto eq = lagrange_points(mu);
    const auto [lo, hi] = default_scan_range(mu, true);
    const auto radii = radial_grid(lo, hi, 300);
    std::size_t in_range = 0, manifold_type = 0, within = 0;
    std::vector<double> distances;
    for (double theta : {0.0, M_PI / 4, M_PI / 2, 3 * M_PI / 4, M_PI, 5 * M_PI / 4})
        for (double e : {0.0, 0.4, 0.9}) {
            const RadialScan scan = radial_scan(theta, e, 1, mu, radii);
            for (const auto& b : refine_scan(scan)) {
                if (!(b.jacobi > eq.C(3) && b.jacobi < eq.C(2))) continue;
                ++in_range;
                // Boundary points on a stable manifold linger near the neck
                // longer the closer the start is to r*; points where the
                // verdict flips through a tangency or the collision guard
                // do not.
                if (neck_residence({b.r_star, theta, e, mu}, 1).growth() <= 1.0) continue;
                ++manifold_type;
                const ManifoldComparison c = wn_vs_manifold(theta, b.r_star, b.jacobi, 1, mu);
                distances.push_back(c.best_distance());
                if (c.best_distance() <= 1e-3) ++within;
            }
        }
    std::sort(distances.begin(), distances.end());
    const double median = distances.empty() ? NAN : distances[distances.size() / 2];
    return {within >= 5,
            fmt("%zu of %zu neck-lingering W1 points within 1e-3 (median distance %.1e); %zu two-neck boundary points "
                "in total, %zu excluded as tangency/collision-type",
                within, manifold_type, median, in_range, in_range - manifold_type)};
}

Result p1_crossing_diagnostic() {
    const MassRatio mu(0.01215);
    const auto eq = lagrange_points(mu);
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> ur(0.005, 0.25), uth(0.0, kTwoPi), ue(0.0, 0.95);
    int total = 0, positive = 0, no_crossing = 0, draws = 0;
    while (total < 200) {
        ++draws;
        const PeriapsisIC ic{ur(rng), uth(rng), ue(rng), mu};
        if (periapsis_speed(ic.r, ic.e, mu) <= 0.0) continue;
        const double C = jacobi_constant(to_p1_frame(periapsis_state(ic)), mu);
        if (!(C > eq.C(2) && C <= eq.C(1))) continue;
        Trajectory tr;
        const StabilityOutcome o = classify(ic, 1, {}, &tr);
        if (o.kind != UnstableKind::P1Cycle) continue;
        ++total;
        try {
            if (e2_at_p1_crossing_check(tr).passes) ++positive;
        } catch (const DomainError&) {
            ++no_crossing;
        }
    }
    const double frac = static_cast<double>(positive) / total;
    return {total >= 100 && frac >= 0.95,
            fmt("%d of %d P1-cycle trajectories have E2 > 0 at the first crossing beyond P1 (%.1f%%; %d without such "
                "a crossing; %d draws)",
                positive, total, 100.0 * frac, no_crossing, draws)};
}

Result determinism() {
    SweepConfig c;
    c.mu = MassRatio(0.00095);
    c.thetas = {0.0, 2.0, 4.0};
    c.eccentricities = {0.0, 0.4};
    c.ns = {1, 2};
    c.r_lo = 0.002;
    c.r_hi = 0.06;
    c.K = 60;
    auto render = [&](int threads) {
        c.threads = threads;
        const SweepResult r = sweep(c);
        std::ostringstream os;
        write_scan_csv(os, r.scans);
        write_intervals_csv(os, r.intervals);
        write_boundaries_csv(os, r.boundaries);
        return os.str();
    };
    const std::string ref = render(1);
    int same = 0;
    for (int t : {2, 3, 8}) same += render(t) == ref;
    return {same == 3, fmt("%d / 3 thread counts (2, 3, 8) reproduce the single-thread CSV bytes (%zu bytes)", same,
                           ref.size())};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Result()>>> criteria{
        {"lagrange constants", lagrange_constants},
        {"jacobi conservation", jacobi_conservation},
        {"periapsis energy identity", periapsis_identity},
        {"monotone nesting", monotone_nesting},
        {"boundary separation", boundary_separation},
        {"section round trip", section_round_trip},
        {"symmetry conjugacy", mirror_conjugacy},
        {"lyapunov orbit quality", lyapunov_quality},
        {"manifold concordance", manifold_concordance},
        {"P1-crossing energy diagnostic", p1_crossing_diagnostic},
        {"determinism", determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Result r;
        try {
            r = criteria[i].second();
        } catch (const std::exception& e) {
            r = {false, std::string("exception: ") + e.what()};
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !r.pass;
        std::printf("%s %2zu %s: %s [%.2f s]\n", r.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    r.detail.c_str(), s);
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
