#include "wsb/w_algorithm.hpp"

#include <algorithm>
#include <limits>
#include <ostream>
#include <string>

#include "wsb/csv.hpp"

namespace wsb {

void PeriapsisIC::validate() const {
    if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("periapsis radius must be positive");
    if (!(e >= 0.0 && e < 1.0)) throw DomainError("eccentricity must lie in [0, 1)");
    if (!std::isfinite(theta)) throw DomainError("ray angle must be finite");
}

double periapsis_speed(double r, double e, MassRatio mu) {
    return std::sqrt(mu.value() * (1.0 + e) / r) - r;
}

RotState periapsis_state(const PeriapsisIC& ic) {
    ic.validate();
    const double v = periapsis_speed(ic.r, ic.e, ic.mu);
    const double c = std::cos(ic.theta), s = std::sin(ic.theta);
    return {ic.r * c, ic.r * s, -v * s, v * c};
}

const char* to_string(Verdict v) { return v == Verdict::Stable ? "stable" : "unstable"; }

const char* to_string(UnstableKind k) {
    switch (k) {
        case UnstableKind::None: return "none";
        case UnstableKind::P1Cycle: return "p1-cycle";
        case UnstableKind::E2NonNegative: return "e2-nonnegative";
        case UnstableKind::Tangential: return "tangential";
        case UnstableKind::NonReturn: return "non-return";
        case UnstableKind::CollisionGuard: return "collision-guard";
    }
    return "?";
}

std::optional<UnstableKind> unstable_kind_from_string(const std::string& s) {
    for (auto k : {UnstableKind::None, UnstableKind::P1Cycle, UnstableKind::E2NonNegative, UnstableKind::Tangential,
                   UnstableKind::NonReturn, UnstableKind::CollisionGuard}) {
        if (s == to_string(k)) return k;
    }
    return std::nullopt;
}

namespace {

enum class StepEventType { Ray, P1Winding };

struct StepEvent {
    double t;
    StepEventType type;
    double level = 0.0;
    int direction = 0;
};

}  // namespace

StabilityOutcome classify(const PeriapsisIC& ic, int n, const IntegratorConfig& cfg, Trajectory* trace) {
    if (n < 1) throw DomainError("cycle target n must be at least 1");
    ic.validate();
    cfg.validate();
    if (ic.r <= cfg.r_min) throw DomainError("periapsis radius inside the collision guard");

    const MassRatio mu = ic.mu;
    const P1State s0 = to_p1_frame(periapsis_state(ic));
    StabilityOutcome out;
    out.n_target = n;
    out.jacobi = jacobi_constant(s0, mu, cfg.r_min);

    Propagator prop(s0, mu, cfg);
    const double phi1_0 = prop.phi1();
    const double phi2_0 = prop.phi2();
    if (trace) {
        trace->mu = mu;
        trace->nodes.assign(1, {0.0, s0, phi1_0, phi2_0});
        trace->segments.clear();
    }

    const double tol = cfg.event_tol;
    int count = 0;

    auto fail = [&](UnstableKind k, double t) {
        out.verdict = Verdict::Unstable;
        out.kind = k;
        out.failing_cycle = count + 1;
        out.n_completed = count;
        out.t_end = t;
        if (out.triggered.empty()) out.triggered.push_back(k);
    };

    auto crossing_at = [&](double t, int dir) {
        const P1State s = prop.state_at(t);
        const RotState rs = to_p2_frame(s);
        const PolarState pol = to_polar(rs);
        CrossingRecord rec;
        rec.t = t;
        rec.r = pol.r;
        rec.rdot = pol.rdot;
        rec.thetadot = pol.thetadot;
        rec.e2 = kepler_energy(rs, mu);
        rec.phi2_turns = (prop.phi_at(Center::P2, t) - phi2_0) / kTwoPi;
        rec.phi1_turns = (prop.phi_at(Center::P1, t) - phi1_0) / kTwoPi;
        rec.posigrade = dir > 0;
        return rec;
    };

    auto truncate_trace = [&](double t) {
        if (!trace || trace->segments.empty()) return;
        TrajectoryNode& last = trace->nodes.back();
        last.t = t;
        last.state = prop.state_at(t);
        last.phi1 = prop.phi_at(Center::P1, t);
        last.phi2 = prop.phi_at(Center::P2, t);
    };

    while (true) {
        if (prop.t() >= cfg.t_max) {
            fail(UnstableKind::NonReturn, prop.t());
            return out;
        }
        const auto status = prop.advance(cfg.t_max);
        if (trace) {
            trace->segments.push_back(prop.segment());
            trace->nodes.push_back({prop.t(), prop.state(), prop.phi1(), prop.phi2()});
        }

        const double ta = prop.t_prev(), tb = prop.t();
        std::vector<StepEvent> events;

        // Returns to the ray: phi2 passes phi2_0 + 2 pi k.
        {
            const double a = prop.phi2_prev(), b = prop.phi2();
            const double lo = std::min(a, b), hi = std::max(a, b);
            const double k0 = std::ceil((lo - phi2_0) / kTwoPi);
            for (double k = k0; phi2_0 + k * kTwoPi <= hi; k += 1.0) {
                const double level = phi2_0 + k * kTwoPi;
                if (level == a) continue;
                auto g = [&](double t) { return prop.phi_at(Center::P2, t) - level; };
                const double tc = find_root(g, ta, tb, a - level, b - level, tol);
                events.push_back({tc, StepEventType::Ray, level, b > a ? +1 : -1});
            }
        }
        // Completion of a full turn about P1 in either sense.
        {
            const double a = prop.phi1_prev() - phi1_0, b = prop.phi1() - phi1_0;
            for (double sgn : {1.0, -1.0}) {
                const double ga = sgn * a - kTwoPi, gb = sgn * b - kTwoPi;
                if (ga < 0.0 && gb >= 0.0) {
                    auto g = [&](double t) { return sgn * (prop.phi_at(Center::P1, t) - phi1_0) - kTwoPi; };
                    events.push_back({find_root(g, ta, tb, ga, gb, tol), StepEventType::P1Winding});
                }
            }
        }
        std::sort(events.begin(), events.end(), [](const StepEvent& x, const StepEvent& y) { return x.t < y.t; });

        const auto p1_event = std::find_if(events.begin(), events.end(),
                                           [](const StepEvent& e) { return e.type == StepEventType::P1Winding; });
        for (const StepEvent& ev : events) {
            if (ev.type == StepEventType::P1Winding) {
                // A counted return inside the tie window is evaluated first so
                // that all simultaneous conditions are recorded.
                const double next_level = phi2_0 + (count + 1) * kTwoPi;
                const bool tie = std::any_of(events.begin(), events.end(), [&](const StepEvent& o) {
                    return o.type == StepEventType::Ray && o.direction > 0 && o.level == next_level &&
                           std::abs(o.t - ev.t) <= tol;
                });
                if (tie) continue;
                fail(UnstableKind::P1Cycle, ev.t);
                truncate_trace(ev.t);
                return out;
            }
            CrossingRecord rec = crossing_at(ev.t, ev.direction);
            const bool counted = ev.direction > 0 && ev.level == phi2_0 + (count + 1) * kTwoPi;
            if (!counted) {
                out.ignored.push_back(rec);
                continue;
            }
            rec.counted = true;
            // Conditions firing together at this return, in priority order.
            std::vector<UnstableKind> fired;
            if (p1_event != events.end() && std::abs(p1_event->t - ev.t) <= tol) fired.push_back(UnstableKind::P1Cycle);
            if (rec.e2 >= 0.0) fired.push_back(UnstableKind::E2NonNegative);
            if (std::abs(rec.thetadot) < cfg.tangent_tol) fired.push_back(UnstableKind::Tangential);
            out.crossings.push_back(rec);
            if (!fired.empty()) {
                out.triggered = fired;
                fail(fired.front(), ev.t);
                truncate_trace(ev.t);
                return out;
            }
            ++count;
            if (count == n) {
                out.verdict = Verdict::Stable;
                out.kind = UnstableKind::None;
                out.n_completed = n;
                out.failing_cycle = 0;
                out.t_end = ev.t;
                truncate_trace(ev.t);
                return out;
            }
        }

        if (status == Propagator::Status::Collision) {
            fail(UnstableKind::CollisionGuard, prop.t());
            return out;
        }
    }
}

P1CrossingDiagnostic e2_at_p1_crossing_check(const Trajectory& traj) {
    for (std::size_t i = 0; i < traj.segments.size(); ++i) {
        const auto& seg = traj.segments[i];
        const double ta = traj.nodes[i].t, tb = traj.nodes[i + 1].t;
        const double ga = traj.nodes[i].state.y2, gb = traj.nodes[i + 1].state.y2;
        if (!((ga < 0.0 && gb >= 0.0) || (ga > 0.0 && gb <= 0.0))) continue;
        auto g = [&](double t) { return seg.component(t, 1); };
        const double t1 = find_root(g, ta, tb, ga, gb, 1e-13);
        const P1State s = P1State::from_array(seg.at(t1));
        const RotState rs = to_p2_frame(s);
        if (!(rs.Y1 < -1.0)) continue;
        P1CrossingDiagnostic d;
        d.t1 = t1;
        d.Y1 = rs.Y1;
        d.e2 = kepler_energy(rs, traj.mu);
        d.momentum_term = rotating_momentum_term(rs);
        d.passes = d.e2 > 0.0;
        return d;
    }
    throw DomainError("no qualifying crossing of the negative Y1 axis beyond P1");
}

void write_outcome_header(std::ostream& os) { os << "r,theta,e,mu,C,verdict,kind,failing_cycle,n\n"; }

void write_outcome_row(std::ostream& os, const PeriapsisIC& ic, int n, const StabilityOutcome& out) {
    CsvWriter w(os);
    w.field(ic.r).field(ic.theta).field(ic.e).field(ic.mu.value()).field(out.jacobi);
    w.field(to_string(out.verdict)).field(to_string(out.kind)).field(out.failing_cycle).field(n);
    w.end_row();
}

}  // namespace wsb
