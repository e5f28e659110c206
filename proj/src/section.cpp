#include "wsb/section.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <string>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "wsb/csv.hpp"

namespace wsb {

double theta_dot_on_section(double r, double rdot, double theta0, double C, MassRatio mu, double r_min) {
    if (!(r > r_min)) throw DomainError("section point inside the collision guard of P2");
    const double y1 = 1.0 + r * std::cos(theta0);
    const double y2 = r * std::sin(theta0);
    if (std::hypot(y1, y2) <= r_min) throw DomainError("section point inside the collision guard of P1");
    const double rhs = 2.0 * effective_potential(y1, y2, mu) - C - rdot * rdot;
    if (!(rhs > 0.0)) throw DomainError("off-section: no positive thetadot at this (r, rdot, C)");
    return std::sqrt(rhs) / r;
}

RotState lift(const SectionPoint& p, double r_min) {
    const double td = theta_dot_on_section(p.r, p.rdot, p.theta0, p.C, p.mu, r_min);
    PolarState pol{p.r, p.theta0, p.rdot, td};
    return from_polar(pol);
}

SectionPoint section_point(const RotState& s, double theta0, MassRatio mu) {
    const PolarState pol = to_polar(s);
    return {pol.r, pol.rdot, theta0, jacobi_constant_p2(s, mu, 0.0), mu};
}

double escape_radius(MassRatio mu) { return lagrange_points(mu).L(2).distance_to_p2(); }

const char* to_string(ReturnStatus s) {
    switch (s) {
        case ReturnStatus::Returned: return "returned";
        case ReturnStatus::NoReturn: return "no-return";
        case ReturnStatus::LeftH2: return "left-h2";
        case ReturnStatus::Collision: return "collision";
    }
    return "?";
}

const char* to_string(IterateEnd e) {
    switch (e) {
        case IterateEnd::Completed: return "completed";
        case IterateEnd::Escaped: return "escaped";
        case IterateEnd::LeftH2: return "left-h2";
        case IterateEnd::NoReturn: return "no-return";
        case IterateEnd::Collision: return "collision";
    }
    return "?";
}

namespace {

ReturnResult first_return_impl(const SectionPoint& p, const MapConfig& cfg, double rho) {
    const IntegratorConfig& ic = cfg.integrator;
    ic.validate();
    const P1State s0 = to_p1_frame(lift(p, ic.r_min));
    Propagator prop(s0, p.mu, ic);
    const double phi2_0 = prop.phi2();
    const double r_leave = cfg.left_h2_factor * rho;
    ReturnResult res;
    while (true) {
        if (prop.t() >= ic.t_max) {
            res.status = ReturnStatus::NoReturn;
            res.t_flight = prop.t();
            return res;
        }
        const auto status = prop.advance(ic.t_max);
        const double ta = prop.t_prev(), tb = prop.t();
        const double a = prop.phi2_prev(), b = prop.phi2();
        const double lo = std::min(a, b), hi = std::max(a, b);
        double best = std::numeric_limits<double>::infinity();
        for (double k = std::ceil((lo - phi2_0) / kTwoPi); phi2_0 + k * kTwoPi <= hi; k += 1.0) {
            const double level = phi2_0 + k * kTwoPi;
            if (level == a) continue;
            auto g = [&](double t) { return prop.phi_at(Center::P2, t) - level; };
            const double tc = find_root(g, ta, tb, a - level, b - level, ic.event_tol);
            const PolarState pol = to_polar(to_p2_frame(prop.state_at(tc)));
            if (pol.thetadot > 0.0) best = std::min(best, tc);
        }
        if (std::isfinite(best)) {
            const RotState rs = to_p2_frame(prop.state_at(best));
            res.status = ReturnStatus::Returned;
            res.state = rs;
            res.point = section_point(rs, p.theta0, p.mu);
            res.t_flight = best;
            res.e2 = kepler_energy(rs, p.mu);
            return res;
        }
        if (status == Propagator::Status::Collision) {
            res.status = ReturnStatus::Collision;
            res.t_flight = prop.t();
            return res;
        }
        if (cfg.detect_left_h2 && std::hypot(prop.state().y1 - 1.0, prop.state().y2) > r_leave) {
            res.status = ReturnStatus::LeftH2;
            res.t_flight = prop.t();
            return res;
        }
    }
}

}  // namespace

ReturnResult first_return(const SectionPoint& p, const MapConfig& cfg) {
    return first_return_impl(p, cfg, escape_radius(p.mu));
}

SectionPoint poincare_map(const SectionPoint& p, const MapConfig& cfg) {
    const ReturnResult r = first_return(p, cfg);
    if (r.status != ReturnStatus::Returned) {
        throw std::runtime_error(std::string("poincare_map: ") + to_string(r.status));
    }
    return r.point;
}

IterateOrbit iterate(const SectionPoint& p, int k_max, const MapConfig& cfg) {
    if (k_max < 0) throw DomainError("k_max must be non-negative");
    IterateOrbit orbit;
    orbit.rho = escape_radius(p.mu);
    const RotState s0 = lift(p, cfg.integrator.r_min);
    orbit.iterates.push_back({0, p, 0.0, kepler_energy(s0, p.mu)});
    SectionPoint cur = p;
    for (int k = 1; k <= k_max; ++k) {
        const ReturnResult r = first_return_impl(cur, cfg, orbit.rho);
        switch (r.status) {
            case ReturnStatus::Returned: break;
            case ReturnStatus::NoReturn: orbit.end = IterateEnd::NoReturn; return orbit;
            case ReturnStatus::LeftH2: orbit.end = IterateEnd::LeftH2; return orbit;
            case ReturnStatus::Collision: orbit.end = IterateEnd::Collision; return orbit;
        }
        // Keep the nominal C so that drift does not accumulate through lifts.
        SectionPoint next = r.point;
        next.C = p.C;
        orbit.iterates.push_back({k, r.point, r.t_flight, r.e2});
        if (std::abs(next.r) > orbit.rho) {
            orbit.end = IterateEnd::Escaped;
            return orbit;
        }
        cur = next;
    }
    orbit.end = IterateEnd::Completed;
    return orbit;
}

SStarOrbit sstar_orbit(const PeriapsisIC& ic, int k_max, const MapConfig& cfg) {
    const RotState s = periapsis_state(ic);
    if (periapsis_speed(ic.r, ic.e, ic.mu) <= 0.0) {
        throw DomainError("periapsis state is retrograde in the rotating frame; not on the section");
    }
    SectionPoint p = section_point(s, ic.theta, ic.mu);
    p.rdot = 0.0;
    SStarOrbit out;
    out.orbit = iterate(p, k_max, cfg);
    out.all_e2_negative = std::all_of(out.orbit.iterates.begin(), out.orbit.iterates.end(),
                                      [](const Iterate& it) { return it.e2 < 0.0; });
    return out;
}

FixedPoint find_fixed_point(const SectionPoint& guess, const MapConfig& cfg, double tol, int max_iter) {
    FixedPoint fp;
    fp.p = guess;
    auto residual = [&](const SectionPoint& q) {
        const SectionPoint m = poincare_map(q, cfg);
        return std::array<double, 2>{m.r - q.r, m.rdot - q.rdot};
    };
    for (int it = 0; it < max_iter; ++it) {
        const auto F = residual(fp.p);
        fp.residual = std::hypot(F[0], F[1]);
        fp.iterations = it;
        if (fp.residual < tol) return fp;
        const double h = 1e-7 * std::max(1e-3, fp.p.r);
        SectionPoint pr = fp.p, pv = fp.p;
        pr.r += h;
        pv.rdot += h;
        const auto Fr = residual(pr), Fv = residual(pv);
        const double j11 = (Fr[0] - F[0]) / h, j12 = (Fv[0] - F[0]) / h;
        const double j21 = (Fr[1] - F[1]) / h, j22 = (Fv[1] - F[1]) / h;
        const double det = j11 * j22 - j12 * j21;
        if (det == 0.0 || !std::isfinite(det)) throw ConvergenceError("singular Jacobian in fixed-point search");
        fp.p.r -= (j22 * F[0] - j12 * F[1]) / det;
        fp.p.rdot -= (-j21 * F[0] + j11 * F[1]) / det;
    }
    const auto F = residual(fp.p);
    fp.residual = std::hypot(F[0], F[1]);
    fp.iterations = max_iter;
    if (fp.residual < tol) return fp;
    throw ConvergenceError("fixed-point search did not converge");
}

void write_iterates_csv(std::ostream& os, const IterateOrbit& orbit) {
    os << "k,r,rdot,t_flight,E2,C\n";
    CsvWriter w(os);
    for (const auto& it : orbit.iterates) {
        w.field(it.k).field(it.p.r).field(it.p.rdot).field(it.t_flight).field(it.e2).field(it.p.C);
        w.end_row();
    }
}

}  // namespace wsb
