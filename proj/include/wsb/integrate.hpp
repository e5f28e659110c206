// Adaptive propagation of the restricted problem with dense output, event
// detection and winding-number bookkeeping about both primaries.
#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "wsb/dopri5.hpp"
#include "wsb/dynamics.hpp"

namespace wsb {

struct IntegratorConfig {
    double rel_tol = 1e-12;
    double abs_tol = 1e-12;
    double h_init = 1e-3;
    double h_min = 1e-13;
    double h_max = 0.25;
    double t_max = 200.0 * kTwoPi;  // operational horizon for "does not return"
    double r_min = kDefaultCollisionRadius;
    double event_tol = 1e-12;
    double tangent_tol = 1e-8;

    void validate() const;
    StepControl step_control() const { return {rel_tol, abs_tol, h_init, h_min, h_max}; }
};

enum class Center { P1, P2 };

/// Crossing of the ray from P2 at angle theta0 (the line L(theta0)).
struct RayCrossing {
    double theta0 = 0.0;
    bool posigrade_only = true;
};

/// Zero crossing of Y2 (axis = Y1Axis) or of Y1 (axis = Y2Axis) in the
/// P2-centered frame, accepted only when the other coordinate lies in
/// [along_min, along_max]. sign = +1 / -1 restricts the crossing direction.
struct AxisCrossing {
    enum class Axis { Y1Axis, Y2Axis } axis = Axis::Y1Axis;
    double along_min = -1e300;
    double along_max = 1e300;
    int sign = 0;
};

/// Unwrapped polar angle about a primary changes by turns * 2 pi (either sign).
struct WindingThreshold {
    Center center = Center::P1;
    double turns = 1.0;
};

/// Distance from P2 grows past rho.
struct EscapeRadius {
    double rho = 1.0;
};

/// Distance to either primary drops below IntegratorConfig::r_min.
struct CollisionGuard {};

struct EventSpec {
    std::variant<RayCrossing, AxisCrossing, WindingThreshold, EscapeRadius, CollisionGuard> kind;
    bool terminal = false;
};

struct EventRecord {
    std::size_t spec_index = 0;
    double t = 0.0;
    P1State state{};
    double r = 0.0, rdot = 0.0, thetadot = 0.0;  // polar about P2
    double e2 = 0.0;
    double phi1_turns = 0.0;  // (phi1 - phi1(t0)) / 2 pi
    double phi2_turns = 0.0;
    int direction = 0;        // +1 increasing event function, -1 decreasing
    bool tangential = false;  // ray crossing with |thetadot| < tangent_tol
};

struct TrajectoryNode {
    double t = 0.0;
    P1State state{};
    double phi1 = 0.0;  // unwrapped polar angle about P1
    double phi2 = 0.0;  // unwrapped polar angle about P2
};

enum class PropagationEnd { Completed, TerminalEvent, Collision, TimeLimit };

const char* to_string(PropagationEnd e);

/// Dense trajectory: nodes at accepted steps plus the interpolant of each
/// step. segments[i] covers [nodes[i].t, nodes[i+1].t].
struct Trajectory {
    std::vector<TrajectoryNode> nodes;
    std::vector<DenseSegment<4>> segments;
    PropagationEnd end = PropagationEnd::Completed;
    MassRatio mu{0.01};

    double t_begin() const { return nodes.front().t; }
    double t_end() const { return nodes.back().t; }

    // Interpolated state and unwrapped angles; t must lie within the span.
    P1State at(double t) const;
    double phi1_at(double t) const;
    double phi2_at(double t) const;

    std::size_t segment_index(double t) const;
};

/// One Runge-Kutta attempt for the restricted problem.
struct StepOutcome {
    P1State state{};
    double error = 0.0;  // scaled error norm; accepted when <= 1
    double h_next = 0.0;
    bool accepted = false;
    DenseSegment<4> dense{};
};

StepOutcome step(const P1State& s, double h, MassRatio mu, const IntegratorConfig& cfg);

// Right-hand side without the collision check, for use inside integrators.
struct Cr3bpRhs {
    MassRatio mu;
    void operator()(double, const Vec4& y, Vec4& dy) const;
};

/// Step-by-step propagator tracking the unwrapped angles about P1 and P2.
/// Each call to advance() takes one accepted step; angles inside the step are
/// recovered from the dense output. Steps are limited so that neither angle
/// turns by more than about pi/3 within a step.
class Propagator {
public:
    enum class Status { Running, Collision, Finished };

    Propagator(const P1State& s0, MassRatio mu, const IntegratorConfig& cfg, double t0 = 0.0,
               int direction = +1);

    // Advances until t_stop at most. Returns Collision when the last step hit
    // the guard (the step is then truncated at the contact time).
    Status advance(double t_stop);

    double t() const { return t_; }
    P1State state() const { return state_; }
    double phi1() const { return phi1_; }
    double phi2() const { return phi2_; }
    double direction() const { return dir_; }
    MassRatio mu() const { return mu_; }
    const IntegratorConfig& config() const { return cfg_; }

    // Quantities on the last step. t must lie within it.
    const DenseSegment<4>& segment() const { return seg_; }
    double t_prev() const { return t_prev_; }
    double phi1_prev() const { return phi1_prev_; }
    double phi2_prev() const { return phi2_prev_; }
    P1State state_at(double t) const { return P1State::from_array(seg_.at(t)); }
    double phi_at(Center c, double t) const;

private:
    Dopri5<4, Cr3bpRhs> solver_;
    MassRatio mu_;
    IntegratorConfig cfg_;
    double dir_;
    double t_, t_prev_;
    P1State state_, state_prev_;
    double phi1_, phi2_, phi1_prev_, phi2_prev_;
    DenseSegment<4> seg_{};
};

// Angle about a primary of a P1-frame position, in (-pi, pi].
double polar_angle(const P1State& s, Center c);
// Wraps an angle difference into (-pi, pi].
double wrap_angle(double a);

// Dense trajectory over t_span = (t0, t1); t1 < t0 integrates backward.
// Stops early only at the collision guard.
Trajectory propagate(const P1State& s0, double t0, double t1, MassRatio mu, const IntegratorConfig& cfg);

struct EventPropagation {
    Trajectory trajectory;
    std::vector<EventRecord> events;
};

// Propagates forward from t = 0 for at most cfg.t_max (or backward when
// direction < 0), recording events in time order and stopping at the first
// terminal one.
EventPropagation propagate_events(const P1State& s0, MassRatio mu, const IntegratorConfig& cfg,
                                  const std::vector<EventSpec>& events, int direction = +1);

// Builds an event record for a state on the trajectory.
EventRecord make_event_record(std::size_t spec, double t, const P1State& s, double phi1_turns,
                              double phi2_turns, MassRatio mu);

// CSV with columns t,y1,y2,v1,v2,C,E2,phi1,phi2.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

}  // namespace wsb
