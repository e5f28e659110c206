// Stability classification of periapsis initial conditions about P2: a point
// is n-stable when its trajectory makes n complete posigrade cycles about P2,
// returning each time to the ray it started on with negative Kepler energy,
// without first going around P1.
#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wsb/dynamics.hpp"
#include "wsb/integrate.hpp"

namespace wsb {

/// Osculating periapsis about P2 at distance r on the ray of angle theta.
struct PeriapsisIC {
    double r = 0.0;
    double theta = 0.0;
    double e = 0.0;
    MassRatio mu{0.01215};

    void validate() const;
};

// Rotating-frame speed of the periapsis state; negative values mean the
// rotating velocity points against the posigrade direction.
double periapsis_speed(double r, double e, MassRatio mu);

// State on the ray with rdot = 0 and E2 = mu (e - 1) / (2 r).
RotState periapsis_state(const PeriapsisIC& ic);

enum class Verdict { Stable, Unstable };

enum class UnstableKind {
    None,
    P1Cycle,        // (i) full turn about P1 before the n-th return
    E2NonNegative,  // (ii) E2 >= 0 at a return
    Tangential,     // (iii) return not transversal
    NonReturn,      // (iv) no return within t_max
    CollisionGuard  // entered the collision guard of a primary
};

const char* to_string(Verdict v);
const char* to_string(UnstableKind k);
std::optional<UnstableKind> unstable_kind_from_string(const std::string& s);

struct CrossingRecord {
    double t = 0.0;
    double r = 0.0, rdot = 0.0, thetadot = 0.0;
    double e2 = 0.0;
    double phi2_turns = 0.0;  // (phi2 - phi2(0)) / 2 pi
    double phi1_turns = 0.0;
    bool posigrade = true;
    bool counted = false;
};

struct StabilityOutcome {
    Verdict verdict = Verdict::Unstable;
    UnstableKind kind = UnstableKind::None;
    int failing_cycle = 0;  // 1-based cycle index at which the failure occurred
    int n_target = 0;
    int n_completed = 0;
    double jacobi = 0.0;
    double t_end = 0.0;
    std::vector<CrossingRecord> crossings;  // counted returns, in order
    std::vector<CrossingRecord> ignored;    // retrograde returns and re-crossings
    // Every condition that fired at the failing event, in priority order.
    std::vector<UnstableKind> triggered;

    bool stable() const { return verdict == Verdict::Stable; }
};

// Runs the classification for n cycles. When trace is given, the propagated
// trajectory (up to the decision time) is stored there.
StabilityOutcome classify(const PeriapsisIC& ic, int n, const IntegratorConfig& cfg = {},
                          Trajectory* trace = nullptr);

/// Kepler energy at the first crossing of the negative Y1 axis beyond P1.
struct P1CrossingDiagnostic {
    double t1 = 0.0;
    double Y1 = 0.0;
    double e2 = 0.0;
    double momentum_term = 0.0;  // V1 Y2 - V2 Y1 at t1
    bool passes = false;         // e2 > 0
};

// Looks for the first time with Y2 = 0 and Y1 < -1 (P2-centered) on a
// trajectory. Throws DomainError when there is none.
P1CrossingDiagnostic e2_at_p1_crossing_check(const Trajectory& traj);

// CSV helpers: header and one row per outcome.
void write_outcome_header(std::ostream& os);
void write_outcome_row(std::ostream& os, const PeriapsisIC& ic, int n, const StabilityOutcome& out);

}  // namespace wsb
