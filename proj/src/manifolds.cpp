#include "wsb/manifolds.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <ostream>

#include <Eigen/Eigenvalues>

#include "wsb/csv.hpp"
#include "wsb/parallel.hpp"

namespace wsb {

const char* to_string(Neck n) { return n == Neck::L1 ? "L1" : "L2"; }

const char* to_string(Branch b) {
    switch (b) {
        case Branch::StableInterior: return "stable-interior";
        case Branch::StableExterior: return "stable-exterior";
        case Branch::UnstableInterior: return "unstable-interior";
        case Branch::UnstableExterior: return "unstable-exterior";
    }
    return "?";
}

namespace {

using Vec20 = VecN<20>;

// State plus row-major state-transition matrix.
struct StmRhs {
    MassRatio mu;
    void operator()(double, const Vec20& y, Vec20& dy) const {
        const P1State s{y[0], y[1], y[2], y[3]};
        const auto g = potential_gradient(s.y1, s.y2, mu);
        dy[0] = s.v1;
        dy[1] = s.v2;
        dy[2] = 2.0 * s.v2 + g[0];
        dy[3] = -2.0 * s.v1 + g[1];
        const Mat4 A = eom_jacobian(s, mu, 0.0);
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                double acc = 0.0;
                for (int k = 0; k < 4; ++k) acc += A(i, k) * y[4 + 4 * k + j];
                dy[4 + 4 * i + j] = acc;
            }
        }
    }
};

StepControl stm_control(const OrbitSettings& s) { return {s.rel_tol, s.abs_tol, 1e-3, 1e-14, s.h_max}; }

Vec20 with_identity(const P1State& s) {
    Vec20 y{};
    y[0] = s.y1;
    y[1] = s.y2;
    y[2] = s.v1;
    y[3] = s.v2;
    for (int i = 0; i < 4; ++i) y[4 + 5 * i] = 1.0;
    return y;
}

Mat4 stm_of(const Vec20& y) {
    Mat4 m;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) m(i, j) = y[4 + 4 * i + j];
    return m;
}

P1State state_of(const Vec20& y) { return {y[0], y[1], y[2], y[3]}; }

// Integrates exactly to t_end (forward).
Vec20 integrate_stm(const Vec20& y0, double t_end, MassRatio mu, const OrbitSettings& s) {
    if (t_end <= 0.0) return y0;
    Dopri5<20, StmRhs> solver(StmRhs{mu}, 0.0, y0, stm_control(s));
    while (solver.t() < t_end) solver.advance(t_end);
    return solver.y();
}

struct HalfPeriod {
    double t = 0.0;
    Vec20 y{};
};

// First return to the y1 axis after t = 0, integrated exactly to the crossing.
HalfPeriod half_period(const P1State& s0, MassRatio mu, const OrbitSettings& s, double t_cap = 20.0) {
    using Solver = Dopri5<20, StmRhs>;
    Solver solver(StmRhs{mu}, 0.0, with_identity(s0), stm_control(s));
    while (solver.t() < t_cap) {
        const Solver before = solver;
        solver.advance(t_cap);
        const double ga = before.y()[1], gb = solver.y()[1];
        const bool crossed = before.t() > 0.0 && ((ga < 0.0 && gb >= 0.0) || (ga > 0.0 && gb <= 0.0));
        if (!crossed) continue;
        const auto& seg = solver.last_segment();
        const double tc = find_root([&](double t) { return seg.component(t, 1); }, before.t(), solver.t(), ga, gb,
                                    1e-15);
        Solver exact = before;
        while (exact.t() < tc) exact.advance(tc);
        HalfPeriod hp{exact.t(), exact.y()};
        return hp;
    }
    throw ConvergenceError("no return to the y1 axis within the time cap");
}

const Mat4& reflection() {
    static const Mat4 R = (Mat4() << 1, 0, 0, 0, 0, -1, 0, 0, 0, 0, -1, 0, 0, 0, 0, 1).finished();
    return R;
}

double lagrange_x(MassRatio mu, Neck neck) {
    const auto eq = lagrange_points(mu);
    return neck == Neck::L1 ? eq.L(1).y1 : eq.L(2).y1;
}

// Side of the orbit facing P2 in y1: +1 for L1 (P2 lies at larger y1), -1 for L2.
double p2_side(Neck neck) { return neck == Neck::L1 ? 1.0 : -1.0; }

}  // namespace

std::pair<double, double> lyapunov_linear_guess(MassRatio mu, Neck neck, double amplitude) {
    const double xL = lagrange_x(mu, neck);
    const Mat4 A = eom_jacobian({xL, 0.0, 0.0, 0.0}, mu, 0.0);
    const double uxx = A(2, 0), uyy = A(3, 1);
    const double b = 4.0 - uxx - uyy;
    const double nu = std::sqrt(0.5 * (b + std::sqrt(b * b - 4.0 * uxx * uyy)));
    const double k = (nu * nu + uxx) / (2.0 * nu);
    const double a = -p2_side(neck) * std::abs(amplitude);
    return {xL + a, -k * a * nu};
}

LyapunovOrbit lyapunov_correct(MassRatio mu, double x0, double v2_guess, Neck neck, const OrbitSettings& s) {
    double v2 = v2_guess;
    for (int it = 0; it <= s.max_newton; ++it) {
        const P1State s0{x0, 0.0, 0.0, v2};
        const HalfPeriod hp = half_period(s0, mu, s);
        const P1State sh = state_of(hp.y);
        if (std::abs(sh.v1) < s.newton_tol) {
            LyapunovOrbit orb{s0, 2.0 * hp.t, jacobi_constant(s0, mu, 0.0), Mat4::Identity(), neck, mu};
            orb.amplitude = x0 - lagrange_x(mu, neck);
            orb.newton_iterations = it;
            const Mat4 phi = stm_of(hp.y);
            const Mat4& R = reflection();
            orb.monodromy = R * phi.inverse() * R * phi;
            Dopri5<4, Cr3bpRhs> full(Cr3bpRhs{mu}, 0.0, s0.as_array(), stm_control(s));
            while (full.t() < orb.period) full.advance(orb.period);
            const Vec4 yT = full.y(), y0 = s0.as_array();
            double res = 0.0;
            for (int i = 0; i < 4; ++i) res = std::max(res, std::abs(yT[i] - y0[i]));
            orb.periodicity_residual = res;
            return orb;
        }
        const Mat4 phi = stm_of(hp.y);
        const auto g = potential_gradient(sh.y1, sh.y2, mu);
        const double xdd = 2.0 * sh.v2 + g[0];
        const double denom = phi(2, 3) - xdd / sh.v2 * phi(1, 3);
        if (denom == 0.0 || !std::isfinite(denom)) throw ConvergenceError("singular differential correction");
        v2 -= sh.v1 / denom;
    }
    throw ConvergenceError("Lyapunov differential correction did not converge");
}

std::vector<FamilyMember> lyapunov_family_scan(MassRatio mu, Neck neck, const std::vector<double>& amplitudes,
                                               const OrbitSettings& s) {
    std::vector<FamilyMember> out;
    std::vector<std::pair<double, double>> hist;  // (amplitude, v2)
    for (double a : amplitudes) {
        auto [x0, v2] = lyapunov_linear_guess(mu, neck, a);
        if (hist.size() >= 2) {
            const auto& p = hist[hist.size() - 2];
            const auto& q = hist.back();
            v2 = q.second + (q.second - p.second) * (a - q.first) / (q.first - p.first);
        } else if (hist.size() == 1) {
            v2 = hist.back().second * (a / hist.back().first);
        }
        const LyapunovOrbit orb = lyapunov_correct(mu, x0, v2, neck, s);
        hist.emplace_back(a, orb.state0.v2);
        out.push_back({a, orb.jacobi, orb.period});
    }
    return out;
}

LyapunovOrbit lyapunov_family(MassRatio mu, double C_target, Neck neck, const OrbitSettings& s) {
    const auto eq = lagrange_points(mu);
    const double C_L = neck == Neck::L1 ? eq.C(1) : eq.C(2);
    if (!(C_target < C_L)) throw DomainError("target Jacobi constant is above the family's equilibrium value");
    const double d = std::abs(lagrange_x(mu, neck) - 1.0);

    struct Member {
        double a, v2, C;
        LyapunovOrbit orbit;
    };
    auto correct_at = [&](double a, double v2_guess) {
        const double x0 = lagrange_x(mu, neck) - p2_side(neck) * a;
        LyapunovOrbit o = lyapunov_correct(mu, x0, v2_guess, neck, s);
        return Member{a, o.state0.v2, o.jacobi, o};
    };

    std::vector<Member> hist;
    double a = std::min(1e-4, 0.01 * d);
    hist.push_back(correct_at(a, lyapunov_linear_guess(mu, neck, a).second));
    if (hist.back().C <= C_target) {
        // Target lies between the equilibrium and the smallest orbit: shrink.
        while (hist.back().C <= C_target && a > 1e-9) {
            a *= 0.5;
            hist.insert(hist.begin(), correct_at(a, lyapunov_linear_guess(mu, neck, a).second));
        }
    }
    while (hist.back().C > C_target) {
        const double a_next = hist.back().a * 1.25;
        if (a_next > 0.9) throw DomainError("target Jacobi constant outside the explored family range");
        double guess = lyapunov_linear_guess(mu, neck, a_next).second;
        if (hist.size() >= 2) {
            const auto& p = hist[hist.size() - 2];
            const auto& q = hist.back();
            guess = q.v2 + (q.v2 - p.v2) * (a_next - q.a) / (q.a - p.a);
        }
        hist.push_back(correct_at(a_next, guess));
        if (hist.size() > 400) throw DomainError("target Jacobi constant outside the explored family range");
    }
    // Bracket [lo, hi] in amplitude with C(lo) > C_target >= C(hi); Illinois.
    Member lo = hist[hist.size() - 2], hi = hist.back();
    double flo = lo.C - C_target, fhi = hi.C - C_target;
    if (std::abs(fhi) < 1e-9) return hi.orbit;
    int side = 0;
    for (int it = 0; it < 100; ++it) {
        const double am = (lo.a * fhi - hi.a * flo) / (fhi - flo);
        const double w = (am - lo.a) / (hi.a - lo.a);
        const Member m = correct_at(am, lo.v2 + w * (hi.v2 - lo.v2));
        const double fm = m.C - C_target;
        if (std::abs(fm) < 1e-9) return m.orbit;
        if (fm > 0.0) {
            lo = m;
            flo = fm;
            if (side == +1) fhi *= 0.5;
            side = +1;
        } else {
            hi = m;
            fhi = fm;
            if (side == -1) flo *= 0.5;
            side = -1;
        }
    }
    throw ConvergenceError("secant iteration on the Jacobi constant did not converge");
}

MonodromySpectrum monodromy_spectrum(const Mat4& M) {
    Eigen::EigenSolver<Mat4> es(M, false);
    std::array<std::complex<double>, 4> ev;
    for (int i = 0; i < 4; ++i) ev[static_cast<std::size_t>(i)] = es.eigenvalues()[i];
    std::sort(ev.begin(), ev.end(), [](auto a, auto b) { return std::abs(a) > std::abs(b); });
    MonodromySpectrum sp;
    sp.eigenvalues = ev;
    sp.lambda = ev[0].real();
    sp.lambda_inv = ev[3].real();
    sp.unit_deviation = std::max(std::abs(ev[1] - 1.0), std::abs(ev[2] - 1.0));
    sp.determinant = M.partialPivLu().determinant();
    return sp;
}

std::pair<P1State, Mat4> orbit_point(const LyapunovOrbit& orbit, double tau, const OrbitSettings& s) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw DomainError("orbit phase must lie in [0, 1]");
    const Vec20 y = integrate_stm(with_identity(orbit.state0), tau * orbit.period, orbit.mu, s);
    return {state_of(y), stm_of(y)};
}

namespace {

Eigen::Vector4d branch_eigenvector(const LyapunovOrbit& orbit, bool stable) {
    Eigen::EigenSolver<Mat4> es(orbit.monodromy, true);
    int best = 0;
    for (int i = 1; i < 4; ++i) {
        const double a = std::abs(es.eigenvalues()[i]), b = std::abs(es.eigenvalues()[best]);
        if (stable ? a < b : a > b) best = i;
    }
    Eigen::Vector4d v = es.eigenvectors().col(best).real();
    // Deterministic orientation: positive y1 component (or first nonzero).
    int lead = 0;
    while (lead < 3 && std::abs(v[lead]) < 1e-12 * v.norm()) ++lead;
    if (v[lead] < 0.0) v = -v;
    return v.normalized();
}

// +1 when displacing along +v sends the trajectory to the P2 side.
double interior_sign(const LyapunovOrbit& orbit, bool stable, const Eigen::Vector4d& v, double eps,
                     const OrbitSettings& s) {
    const HalfPeriod hp = half_period(orbit.state0, orbit.mu, s);
    const double xa = orbit.state0.y1, xb = hp.y[0];
    const double xmin = std::min(xa, xb), xmax = std::max(xa, xb);
    const double margin = 0.25 * (xmax - xmin);
    Vec4 y0 = orbit.state0.as_array();
    for (int i = 0; i < 4; ++i) y0[static_cast<std::size_t>(i)] += eps * v[i];
    Dopri5<4, Cr3bpRhs> solver(Cr3bpRhs{orbit.mu}, 0.0, y0, stm_control(s), stable ? -1 : +1);
    const double t_cap = 30.0 * orbit.period;
    while (std::abs(solver.t()) < t_cap) {
        solver.advance(stable ? -t_cap : t_cap);
        const double x = solver.y()[0];
        if (x > xmax + margin) return p2_side(orbit.neck) > 0 ? 1.0 : -1.0;
        if (x < xmin - margin) return p2_side(orbit.neck) > 0 ? -1.0 : 1.0;
    }
    throw ConvergenceError("manifold seed did not leave the neighbourhood of the orbit");
}

struct BranchFrame {
    Eigen::Vector4d v;
    double sign;
};

BranchFrame branch_frame(const LyapunovOrbit& orbit, Branch branch, double eps, const OrbitSettings& s) {
    const bool stable = is_stable(branch);
    const Eigen::Vector4d v = branch_eigenvector(orbit, stable);
    const double in = interior_sign(orbit, stable, v, eps, s);
    return {v, is_interior(branch) ? in : -in};
}

P1State seed_from(const P1State& x, const Mat4& phi, const BranchFrame& f, double eps) {
    Eigen::Vector4d w = phi * f.v;
    w.normalize();
    return {x.y1 + f.sign * eps * w[0], x.y2 + f.sign * eps * w[1], x.v1 + f.sign * eps * w[2],
            x.v2 + f.sign * eps * w[3]};
}

ManifoldTrajectory integrate_seed(const P1State& seed, double phase, Branch branch, const GlobalizeSettings& g,
                                  MassRatio mu) {
    ManifoldTrajectory mt;
    mt.phase = phase;
    mt.branch = branch;
    IntegratorConfig cfg = g.integrator;
    cfg.t_max = g.t_span;
    std::vector<EventSpec> events{{CollisionGuard{}, true}};
    if (g.escape_radius > 0.0) events.push_back({EscapeRadius{g.escape_radius}, true});
    if (g.p2_turns > 0.0) events.push_back({WindingThreshold{Center::P2, g.p2_turns}, true});
    try {
        mt.trajectory = propagate_events(seed, mu, cfg, events, is_stable(branch) ? -1 : +1).trajectory;
    } catch (const std::exception& ex) {
        mt.error = ex.what();
        mt.trajectory.mu = mu;
        mt.trajectory.nodes.push_back({0.0, seed, 0.0, 0.0});
    }
    return mt;
}

}  // namespace

P1State manifold_seed(const LyapunovOrbit& orbit, Branch branch, double tau, double epsilon, const OrbitSettings& s) {
    const BranchFrame f = branch_frame(orbit, branch, epsilon, s);
    const auto [x, phi] = orbit_point(orbit, tau, s);
    return seed_from(x, phi, f, epsilon);
}

std::vector<ManifoldTrajectory> globalize(const LyapunovOrbit& orbit, Branch branch, const GlobalizeSettings& g,
                                          const OrbitSettings& s) {
    if (g.n_seeds < 1) throw DomainError("n_seeds must be positive");
    if (!(g.epsilon > 0.0)) throw DomainError("epsilon must be positive");
    g.integrator.validate();
    const BranchFrame f = branch_frame(orbit, branch, g.epsilon, s);

    // Orbit states and STMs at the seed phases, from one pass over the period.
    std::vector<P1State> seeds(static_cast<std::size_t>(g.n_seeds));
    {
        Dopri5<20, StmRhs> solver(StmRhs{orbit.mu}, 0.0, with_identity(orbit.state0), stm_control(s));
        for (int j = 0; j < g.n_seeds; ++j) {
            const double tj = orbit.period * j / g.n_seeds;
            while (solver.t() < tj) solver.advance(tj);
            seeds[static_cast<std::size_t>(j)] = seed_from(state_of(solver.y()), stm_of(solver.y()), f, g.epsilon);
        }
    }
    std::vector<ManifoldTrajectory> out(seeds.size());
    parallel_for(seeds.size(), g.threads, [&](std::size_t j) {
        out[j] = integrate_seed(seeds[j], static_cast<double>(j) / g.n_seeds, branch, g, orbit.mu);
    });
    return out;
}

namespace {

struct RayHit {
    int k;
    CutPoint point;
};

// Posigrade crossings of the ray theta0 with their cut index.
std::vector<RayHit> ray_hits(const ManifoldTrajectory& mt, double theta0, int k_max) {
    std::vector<RayHit> hits;
    const Trajectory& tr = mt.trajectory;
    if (tr.segments.empty()) return hits;
    const bool backward = is_stable(mt.branch);
    double extreme = tr.nodes.front().phi2;
    for (std::size_t i = 0; i < tr.segments.size(); ++i) {
        const double a = tr.nodes[i].phi2, b = tr.nodes[i + 1].phi2;
        const double lo = std::min(a, b), hi = std::max(a, b);
        for (double k = std::ceil((lo - theta0) / kTwoPi); theta0 + k * kTwoPi <= hi; k += 1.0) {
            const double level = theta0 + k * kTwoPi;
            if (level == a) continue;
            auto g = [&](double t) { return tr.phi2_at(t) - level; };
            const double tc = find_root(g, tr.nodes[i].t, tr.nodes[i + 1].t, a - level, b - level, 1e-13);
            const RotState rs = to_p2_frame(tr.at(tc));
            const PolarState pol = to_polar(rs);
            if (!(pol.thetadot > 0.0)) continue;
            const double phi_c = tr.phi2_at(tc);
            const double span = backward ? std::max(extreme, phi_c) - phi_c : phi_c - std::min(extreme, phi_c);
            const int idx = static_cast<int>(std::floor(span / kTwoPi)) + 1;
            if (idx > k_max) continue;
            CutPoint cp;
            cp.phase = mt.phase;
            cp.r = pol.r;
            cp.rdot = pol.rdot;
            cp.e2 = kepler_energy(rs, tr.mu);
            cp.C = jacobi_constant_p2(rs, tr.mu, 0.0);
            cp.t = tc;
            hits.push_back({idx, cp});
        }
        extreme = backward ? std::max(extreme, b) : std::min(extreme, b);
    }
    return hits;
}

}  // namespace

std::vector<ManifoldCut> section_cuts(const std::vector<ManifoldTrajectory>& trajectories, double theta0, int k_max) {
    std::vector<ManifoldCut> cuts;
    if (k_max <= 0) return cuts;
    auto cut_for = [&](Branch b, int k) -> ManifoldCut& {
        for (auto& c : cuts)
            if (c.branch == b && c.k == k) return c;
        cuts.push_back({b, k, {}});
        return cuts.back();
    };
    for (const auto& mt : trajectories) {
        for (const auto& h : ray_hits(mt, theta0, k_max)) cut_for(mt.branch, h.k).points.push_back(h.point);
    }
    for (auto& c : cuts) {
        std::stable_sort(c.points.begin(), c.points.end(),
                         [](const CutPoint& a, const CutPoint& b) { return a.phase < b.phase; });
    }
    std::sort(cuts.begin(), cuts.end(), [](const ManifoldCut& a, const ManifoldCut& b) {
        return a.branch != b.branch ? a.branch < b.branch : a.k < b.k;
    });
    return cuts;
}

double cut_closure_ratio(const ManifoldCut& cut) {
    const auto& p = cut.points;
    if (p.size() < 3) return std::numeric_limits<double>::infinity();
    std::vector<double> gaps;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) gaps.push_back(std::hypot(p[i + 1].r - p[i].r, p[i + 1].rdot - p[i].rdot));
    const double closing = std::hypot(p.front().r - p.back().r, p.front().rdot - p.back().rdot);
    std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2), gaps.end());
    const double median = gaps[gaps.size() / 2];
    return median > 0.0 ? closing / median : std::numeric_limits<double>::infinity();
}

ManifoldComparison wn_vs_manifold(double theta0, double r_star, double C, int n, MassRatio mu,
                                  const ComparisonSettings& cs) {
    if (n < 1) throw DomainError("cycle count n must be at least 1");
    ManifoldComparison rep;
    rep.r_star = r_star;
    rep.jacobi = C;
    rep.distance_cut_n = rep.distance_cut_n_plus_1 = rep.distance_any = std::numeric_limits<double>::infinity();
    const auto eq = lagrange_points(mu);
    if (C >= eq.C(1)) {
        rep.manifolds_exist = false;
        rep.note = "no manifolds exist at this C: the Lyapunov orbits require C < C1";
        return rep;
    }
    std::vector<Neck> necks{Neck::L1};
    if (C < eq.C(2)) necks.push_back(Neck::L2);

    GlobalizeSettings g = cs.globalize;
    if (g.escape_radius <= 0.0) g.escape_radius = 1.5 * eq.L(2).distance_to_p2();
    if (g.p2_turns <= 0.0) g.p2_turns = n + 2.0;
    const int k_max = n + 1;

    for (Neck neck : necks) {
        const LyapunovOrbit orbit = lyapunov_family(mu, C, neck, cs.orbit);
        const BranchFrame frame = branch_frame(orbit, Branch::StableInterior, g.epsilon, cs.orbit);
        const auto trajs = globalize(orbit, Branch::StableInterior, g, cs.orbit);
        auto hits_at = [&](double tau) {
            const auto [x, phi] = orbit_point(orbit, tau, cs.orbit);
            return ray_hits(integrate_seed(seed_from(x, phi, frame, g.epsilon), tau, Branch::StableInterior, g, mu),
                            theta0, k_max);
        };
        // Crossings are paired across neighbouring seeds by proximity in (r, rdot)
        // rather than by cut index: near an orbit that straddles the ray the
        // turn count of a crossing is ambiguous and one cut curve can be split
        // between two indices.
        std::vector<std::vector<RayHit>> by_seed(trajs.size());
        for (std::size_t j = 0; j < trajs.size(); ++j) by_seed[j] = ray_hits(trajs[j], theta0, k_max);
        auto gap = [](const CutPoint& a, const CutPoint& b) { return std::hypot(a.r - b.r, a.rdot - b.rdot); };
        auto nearest = [&](const std::vector<RayHit>& hs, const CutPoint& ref) -> const RayHit* {
            const RayHit* best = nullptr;
            for (const auto& h : hs)
                if (!best || gap(h.point, ref) < gap(best->point, ref)) best = &h;
            return best;
        };
        for (std::size_t j = 0; j < trajs.size(); ++j) {
            const std::size_t jn = (j + 1) % trajs.size();
            for (const RayHit& ha : by_seed[j]) {
                const RayHit* hb = nearest(by_seed[jn], ha.point);
                if (!hb || (ha.point.rdot > 0.0) == (hb->point.rdot > 0.0)) continue;
                // Reciprocal pairing only; avoids bridging two different curves.
                if (nearest(by_seed[j], hb->point) != &ha) continue;
                double ta = ha.point.phase, tb = jn == 0 ? 1.0 : hb->point.phase;
                RayHit ca = ha, cb = *hb;
                bool ok = true;
                for (int it = 0; it < 60 && tb - ta > cs.phase_tol; ++it) {
                    const double tm = 0.5 * (ta + tb);
                    const auto hs = hits_at(std::fmod(tm, 1.0));
                    const RayHit* hm = nearest(hs, ca.point);
                    const RayHit* hm_b = nearest(hs, cb.point);
                    if (!hm || hm != hm_b) {
                        // The midpoint crossing must continue both ends of the bracket.
                        if (!hm || !hm_b) {
                            ok = false;
                            break;
                        }
                        hm = gap(hm->point, ca.point) < gap(hm_b->point, cb.point) ? hm : hm_b;
                    }
                    if ((hm->point.rdot > 0.0) == (ca.point.rdot > 0.0)) {
                        ta = tm;
                        ca = *hm;
                    } else {
                        tb = tm;
                        cb = *hm;
                    }
                }
                if (!ok || gap(ca.point, cb.point) > 1e-6) continue;
                const RayHit& cur = std::abs(ca.point.rdot) < std::abs(cb.point.rdot) ? ca : cb;
                if (!(cur.point.e2 < 0.0)) continue;
                rep.intersections.push_back({cur.point.r, cur.point.e2, cur.point.phase, neck, cur.k});
                const double d = std::abs(cur.point.r - r_star);
                if (cur.k == n) rep.distance_cut_n = std::min(rep.distance_cut_n, d);
                if (cur.k == n + 1) rep.distance_cut_n_plus_1 = std::min(rep.distance_cut_n_plus_1, d);
                rep.distance_any = std::min(rep.distance_any, d);
            }
        }
    }
    if (rep.intersections.empty()) rep.note = "no manifold cut reaches the rdot = 0 axis with E2 < 0";
    return rep;
}

NeckResidence neck_residence(const PeriapsisIC& boundary, int n, double radius, double coarse_delta,
                             double fine_delta, const IntegratorConfig& cfg) {
    if (!(radius > 0.0) || !(coarse_delta > 0.0) || !(fine_delta > 0.0)) {
        throw DomainError("neck_residence: radius and deltas must be positive");
    }
    const auto eq = lagrange_points(boundary.mu);
    auto residence = [&](double r) {
        PeriapsisIC ic = boundary;
        ic.r = r;
        Trajectory tr;
        classify(ic, n, cfg, &tr);
        double t = 0.0;
        for (std::size_t i = 0; i + 1 < tr.nodes.size(); ++i) {
            const P1State& s = tr.nodes[i].state;
            const bool near = std::hypot(s.y1 - eq.L(1).y1, s.y2) < radius || std::hypot(s.y1 - eq.L(2).y1, s.y2) < radius;
            if (near) t += std::abs(tr.nodes[i + 1].t - tr.nodes[i].t);
        }
        return t;
    };
    auto both = [&](double d) { return std::max(residence(boundary.r - d), residence(boundary.r + d)); };
    return {both(coarse_delta), both(fine_delta)};
}

HypothesisReport hypothesis_a_check(const std::vector<ManifoldTrajectory>& trajectories, int n) {
    HypothesisReport rep;
    for (const auto& mt : trajectories) {
        const auto& nodes = mt.trajectory.nodes;
        double turns = 0.0;
        if (nodes.size() >= 2) {
            turns = is_stable(mt.branch) ? std::abs(nodes.back().phi2 - nodes.front().phi2)
                                         : std::abs(nodes.back().phi1 - nodes.front().phi1);
            turns /= kTwoPi;
        }
        rep.cycles.push_back(turns);
        ++rep.total;
        if (std::floor(turns) < n) ++rep.violators;
    }
    return rep;
}

void write_orbit_csv(std::ostream& os, const LyapunovOrbit& orbit) {
    os << "neck,mu,C,period,y1,y2,v1,v2,amplitude,periodicity_residual,lambda,unit_deviation,det\n";
    const MonodromySpectrum sp = monodromy_spectrum(orbit.monodromy);
    CsvWriter w(os);
    w.field(to_string(orbit.neck)).field(orbit.mu.value()).field(orbit.jacobi).field(orbit.period);
    w.field(orbit.state0.y1).field(orbit.state0.y2).field(orbit.state0.v1).field(orbit.state0.v2);
    w.field(orbit.amplitude).field(orbit.periodicity_residual).field(sp.lambda).field(sp.unit_deviation);
    w.field(sp.determinant);
    w.end_row();
}

void write_cuts_csv(std::ostream& os, const std::vector<ManifoldCut>& cuts) {
    os << "branch,k,seed_phase,r,rdot,E2,C\n";
    CsvWriter w(os);
    for (const auto& c : cuts) {
        for (const auto& p : c.points) {
            w.field(to_string(c.branch)).field(c.k).field(p.phase).field(p.r).field(p.rdot).field(p.e2).field(p.C);
            w.end_row();
        }
    }
}

}  // namespace wsb
