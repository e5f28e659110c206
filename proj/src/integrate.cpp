#include "wsb/integrate.hpp"

#include <algorithm>
#include <limits>
#include <ostream>

#include "wsb/csv.hpp"

namespace wsb {

void IntegratorConfig::validate() const {
    if (!(rel_tol > 0.0 && abs_tol > 0.0)) throw DomainError("integrator tolerances must be positive");
    if (!(h_min > 0.0 && h_min <= h_init && h_init <= h_max)) {
        throw DomainError("integrator step bounds must satisfy 0 < h_min <= h_init <= h_max");
    }
    if (!(t_max > 0.0)) throw DomainError("t_max must be positive");
    if (!(r_min > 0.0)) throw DomainError("r_min must be positive");
    if (!(event_tol > 0.0) || !(tangent_tol >= 0.0)) throw DomainError("invalid event tolerances");
}

const char* to_string(PropagationEnd e) {
    switch (e) {
        case PropagationEnd::Completed: return "completed";
        case PropagationEnd::TerminalEvent: return "terminal-event";
        case PropagationEnd::Collision: return "collision";
        case PropagationEnd::TimeLimit: return "time-limit";
    }
    return "?";
}

void Cr3bpRhs::operator()(double, const Vec4& y, Vec4& dy) const {
    const auto g = potential_gradient(y[0], y[1], mu);
    dy = {y[2], y[3], 2.0 * y[3] + g[0], -2.0 * y[2] + g[1]};
}

double wrap_angle(double a) {
    a = std::remainder(a, kTwoPi);
    if (a <= -std::numbers::pi) a += kTwoPi;
    return a;
}

double polar_angle(const P1State& s, Center c) {
    return c == Center::P1 ? std::atan2(s.y2, s.y1) : std::atan2(s.y2, s.y1 - 1.0);
}

namespace {

double angular_rate(const Vec4& y, Center c) {
    const double x = c == Center::P1 ? y[0] : y[0] - 1.0;
    const double r2 = x * x + y[1] * y[1];
    return (x * y[3] - y[1] * y[2]) / r2;
}

double min_primary_distance(const Vec4& y) {
    return std::min(std::hypot(y[0], y[1]), std::hypot(y[0] - 1.0, y[1]));
}

double effective_event_tol(double tol, double t) {
    return std::max(tol, 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t)));
}

}  // namespace

StepOutcome step(const P1State& s, double h, MassRatio mu, const IntegratorConfig& cfg) {
    cfg.validate();
    if (!(std::abs(h) >= cfg.h_min && std::abs(h) <= cfg.h_max)) {
        throw DomainError("step size outside [h_min, h_max]");
    }
    eom_rhs(s, mu, cfg.r_min);  // domain check
    Cr3bpRhs rhs{mu};
    Vec4 y = s.as_array(), f0;
    rhs(0.0, y, f0);
    const auto att = dopri5_step<4>(rhs, 0.0, y, f0, h, cfg.step_control());
    StepOutcome out;
    out.state = P1State::from_array(att.y);
    out.error = att.error;
    out.accepted = std::isfinite(att.error) && att.error <= 1.0;
    const double fac = std::clamp(std::pow(std::max(att.error, 1e-300), 0.2) / 0.9, 0.1, 5.0);
    out.h_next = std::abs(h) / fac;
    if (!out.accepted && out.h_next < cfg.h_min) {
        throw StepUnderflowError("step size underflow");
    }
    out.dense = att.dense;
    return out;
}

Propagator::Propagator(const P1State& s0, MassRatio mu, const IntegratorConfig& cfg, double t0, int direction)
    : solver_((cfg.validate(), eom_rhs(s0, mu, cfg.r_min), Cr3bpRhs{mu}), t0, s0.as_array(), cfg.step_control(),
              direction),
      mu_(mu),
      cfg_(cfg),
      dir_(direction >= 0 ? 1.0 : -1.0),
      t_(t0),
      t_prev_(t0),
      state_(s0),
      state_prev_(s0),
      phi1_(polar_angle(s0, Center::P1)),
      phi2_(polar_angle(s0, Center::P2)),
      phi1_prev_(phi1_),
      phi2_prev_(phi2_) {}

double Propagator::phi_at(Center c, double t) const {
    const P1State s = state_at(t);
    const double base = c == Center::P1 ? phi1_prev_ : phi2_prev_;
    return base + wrap_angle(polar_angle(s, c) - polar_angle(state_prev_, c));
}

Propagator::Status Propagator::advance(double t_stop) {
    const Vec4 y0 = solver_.y();
    const double w1a = std::abs(angular_rate(y0, Center::P1));
    const double w2a = std::abs(angular_rate(y0, Center::P2));
    constexpr double max_turn = std::numbers::pi / 3.0;
    auto veto = [&](const DenseSegment<4>& seg) {
        const Vec4 y1 = seg.at(seg.t1());
        const double h = std::abs(seg.h);
        const double w1 = std::max(w1a, std::abs(angular_rate(y1, Center::P1)));
        const double w2 = std::max(w2a, std::abs(angular_rate(y1, Center::P2)));
        return h * std::max(w1, w2) > max_turn;
    };
    solver_.advance(t_stop, veto);

    t_prev_ = t_;
    state_prev_ = state_;
    phi1_prev_ = phi1_;
    phi2_prev_ = phi2_;
    seg_ = solver_.last_segment();
    t_ = solver_.t();
    state_ = P1State::from_array(solver_.y());
    phi1_ = phi1_prev_ + wrap_angle(polar_angle(state_, Center::P1) - polar_angle(state_prev_, Center::P1));
    phi2_ = phi2_prev_ + wrap_angle(polar_angle(state_, Center::P2) - polar_angle(state_prev_, Center::P2));

    const Vec4 y_end = state_.as_array();
    if (min_primary_distance(y_end) < cfg_.r_min) {
        auto g = [&](double t) { return min_primary_distance(seg_.at(t)) - cfg_.r_min; };
        const double tc = find_root(g, t_prev_, t_, g(t_prev_), g(t_), effective_event_tol(cfg_.event_tol, t_));
        t_ = tc;
        state_ = state_at(tc);
        phi1_ = phi_at(Center::P1, tc);
        phi2_ = phi_at(Center::P2, tc);
        return Status::Collision;
    }
    return Status::Running;
}

std::size_t Trajectory::segment_index(double t) const {
    if (segments.empty()) return 0;
    const bool forward = nodes.back().t >= nodes.front().t;
    // nodes are monotone in the direction of integration
    auto it = forward ? std::upper_bound(nodes.begin(), nodes.end(), t,
                                         [](double v, const TrajectoryNode& n) { return v < n.t; })
                      : std::upper_bound(nodes.begin(), nodes.end(), t,
                                         [](double v, const TrajectoryNode& n) { return v > n.t; });
    std::size_t idx = it == nodes.begin() ? 0 : static_cast<std::size_t>(it - nodes.begin()) - 1;
    return std::min(idx, segments.size() - 1);
}

P1State Trajectory::at(double t) const {
    if (segments.empty()) return nodes.front().state;
    return P1State::from_array(segments[segment_index(t)].at(t));
}

double Trajectory::phi1_at(double t) const {
    if (segments.empty()) return nodes.front().phi1;
    const std::size_t i = segment_index(t);
    return nodes[i].phi1 + wrap_angle(polar_angle(at(t), Center::P1) - polar_angle(nodes[i].state, Center::P1));
}

double Trajectory::phi2_at(double t) const {
    if (segments.empty()) return nodes.front().phi2;
    const std::size_t i = segment_index(t);
    return nodes[i].phi2 + wrap_angle(polar_angle(at(t), Center::P2) - polar_angle(nodes[i].state, Center::P2));
}

namespace {

void push_node(Trajectory& traj, const Propagator& p) {
    traj.segments.push_back(p.segment());
    traj.nodes.push_back({p.t(), p.state(), p.phi1(), p.phi2()});
}

}  // namespace

Trajectory propagate(const P1State& s0, double t0, double t1, MassRatio mu, const IntegratorConfig& cfg) {
    if (!std::isfinite(t0) || !std::isfinite(t1)) throw DomainError("t_span must be finite");
    const int dir = t1 >= t0 ? +1 : -1;
    Propagator prop(s0, mu, cfg, t0, dir);
    Trajectory traj;
    traj.mu = mu;
    traj.nodes.push_back({t0, s0, prop.phi1(), prop.phi2()});
    while ((t1 - prop.t()) * dir > 0.0) {
        const auto status = prop.advance(t1);
        push_node(traj, prop);
        if (status == Propagator::Status::Collision) {
            traj.end = PropagationEnd::Collision;
            return traj;
        }
    }
    traj.end = PropagationEnd::Completed;
    return traj;
}

EventRecord make_event_record(std::size_t spec, double t, const P1State& s, double phi1_turns, double phi2_turns,
                              MassRatio mu) {
    EventRecord rec;
    rec.spec_index = spec;
    rec.t = t;
    rec.state = s;
    const RotState rs = to_p2_frame(s);
    const PolarState pol = to_polar(rs);
    rec.r = pol.r;
    rec.rdot = pol.rdot;
    rec.thetadot = pol.thetadot;
    rec.e2 = kepler_energy(rs, mu);
    rec.phi1_turns = phi1_turns;
    rec.phi2_turns = phi2_turns;
    return rec;
}

namespace {

struct Candidate {
    double t;
    std::size_t spec;
    int direction;
};

// Scans the last step of the propagator for crossings of one event.
void scan_event(const Propagator& p, const EventSpec& spec, std::size_t idx, double phi1_0, double phi2_0,
                bool& fired_once, std::vector<Candidate>& out) {
    const double ta = p.t_prev(), tb = p.t();
    const double tol = effective_event_tol(p.config().event_tol, tb);
    const double dir = p.direction();

    auto scalar_event = [&](auto g, int want_sign, auto accept) {
        const double ga = g(ta), gb = g(tb);
        if ((ga < 0.0 && gb >= 0.0) || (ga > 0.0 && gb <= 0.0)) {
            // Sign of the change in forward time.
            const int d = (gb > ga ? 1 : -1) * static_cast<int>(dir);
            if (want_sign != 0 && d != want_sign) return;
            const double tc = find_root(g, ta, tb, ga, gb, tol);
            if (accept(tc)) out.push_back({tc, idx, d});
        }
    };

    std::visit(
        [&](const auto& ev) {
            using T = std::decay_t<decltype(ev)>;
            if constexpr (std::is_same_v<T, RayCrossing>) {
                const double a = p.phi2_prev(), b = p.phi2();
                const double lo = std::min(a, b), hi = std::max(a, b);
                // Levels theta0 + 2 pi k strictly entered during the step.
                const double k0 = std::ceil((lo - ev.theta0) / kTwoPi);
                for (double k = k0; ev.theta0 + k * kTwoPi <= hi; k += 1.0) {
                    const double level = ev.theta0 + k * kTwoPi;
                    if (level == a) continue;
                    auto g = [&](double t) { return p.phi_at(Center::P2, t) - level; };
                    scalar_event(g, ev.posigrade_only ? +1 : 0, [](double) { return true; });
                }
            } else if constexpr (std::is_same_v<T, AxisCrossing>) {
                const bool y1axis = ev.axis == AxisCrossing::Axis::Y1Axis;
                auto g = [&](double t) {
                    const P1State s = p.state_at(t);
                    return y1axis ? s.y2 : s.y1 - 1.0;
                };
                scalar_event(g, ev.sign, [&](double tc) {
                    const P1State s = p.state_at(tc);
                    const double along = y1axis ? s.y1 - 1.0 : s.y2;
                    return along >= ev.along_min && along <= ev.along_max;
                });
            } else if constexpr (std::is_same_v<T, WindingThreshold>) {
                if (fired_once) return;
                const Center c = ev.center;
                const double base = c == Center::P1 ? phi1_0 : phi2_0;
                const double thr = ev.turns * kTwoPi;
                for (int sgn : {+1, -1}) {
                    auto g = [&](double t) { return sgn * (p.phi_at(c, t) - base) - thr; };
                    std::size_t before = out.size();
                    scalar_event(g, 0, [](double) { return true; });
                    if (out.size() != before) fired_once = true;
                }
            } else if constexpr (std::is_same_v<T, EscapeRadius>) {
                auto g = [&](double t) {
                    const P1State s = p.state_at(t);
                    return std::hypot(s.y1 - 1.0, s.y2) - ev.rho;
                };
                scalar_event(g, 0, [&](double) { return true; });
            } else if constexpr (std::is_same_v<T, CollisionGuard>) {
                // handled by the propagator status
            }
        },
        spec.kind);
}

}  // namespace

EventPropagation propagate_events(const P1State& s0, MassRatio mu, const IntegratorConfig& cfg,
                                  const std::vector<EventSpec>& events, int direction) {
    Propagator prop(s0, mu, cfg, 0.0, direction);
    EventPropagation out;
    Trajectory& traj = out.trajectory;
    traj.mu = mu;
    traj.nodes.push_back({0.0, s0, prop.phi1(), prop.phi2()});
    const double phi1_0 = prop.phi1(), phi2_0 = prop.phi2();
    const double t_stop = direction >= 0 ? cfg.t_max : -cfg.t_max;
    std::vector<char> fired(events.size(), 0);

    auto record = [&](std::size_t spec, double t, int d) {
        const P1State s = prop.state_at(t);
        EventRecord rec = make_event_record(spec, t, s, (prop.phi_at(Center::P1, t) - phi1_0) / kTwoPi,
                                            (prop.phi_at(Center::P2, t) - phi2_0) / kTwoPi, mu);
        rec.direction = d;
        if (spec < events.size() && std::holds_alternative<RayCrossing>(events[spec].kind)) {
            rec.tangential = std::abs(rec.thetadot) < cfg.tangent_tol;
        }
        return rec;
    };

    while (true) {
        if ((t_stop - prop.t()) * prop.direction() <= 0.0) {
            traj.end = PropagationEnd::TimeLimit;
            return out;
        }
        const auto status = prop.advance(t_stop);
        std::vector<Candidate> cands;
        for (std::size_t i = 0; i < events.size(); ++i) {
            bool once = fired[i] != 0;
            scan_event(prop, events[i], i, phi1_0, phi2_0, once, cands);
            fired[i] = once ? 1 : 0;
        }
        std::sort(cands.begin(), cands.end(), [&](const Candidate& a, const Candidate& b) {
            return (a.t - b.t) * prop.direction() < 0.0 || (a.t == b.t && a.spec < b.spec);
        });
        for (const Candidate& c : cands) {
            out.events.push_back(record(c.spec, c.t, c.direction));
            if (events[c.spec].terminal) {
                traj.segments.push_back(prop.segment());
                traj.nodes.push_back({c.t, prop.state_at(c.t), prop.phi_at(Center::P1, c.t),
                                      prop.phi_at(Center::P2, c.t)});
                traj.end = PropagationEnd::TerminalEvent;
                return out;
            }
        }
        push_node(traj, prop);
        if (status == Propagator::Status::Collision) {
            for (std::size_t i = 0; i < events.size(); ++i) {
                if (std::holds_alternative<CollisionGuard>(events[i].kind)) {
                    out.events.push_back(record(i, prop.t(), -1));
                    break;
                }
            }
            traj.end = PropagationEnd::Collision;
            return out;
        }
    }
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << "t,y1,y2,v1,v2,C,E2,phi1,phi2\n";
    CsvWriter w(os);
    for (const auto& n : traj.nodes) {
        const RotState rs = to_p2_frame(n.state);
        double C = std::numeric_limits<double>::quiet_NaN();
        double e2 = C;
        try {
            C = jacobi_constant(n.state, traj.mu, 0.0);
            e2 = kepler_energy(rs, traj.mu);
        } catch (const SingularityError&) {
        }
        w.field(n.t).field(n.state.y1).field(n.state.y2).field(n.state.v1).field(n.state.v2);
        w.field(C).field(e2).field(n.phi1).field(n.phi2);
        w.end_row();
    }
}

}  // namespace wsb
