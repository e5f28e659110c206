// Surface of section on the ray theta = theta0 from P2 at fixed Jacobi
// constant: coordinates (r, rdot) with thetadot > 0, the first-return map and
// bounded/unbounded iteration.
#pragma once

#include <iosfwd>
#include <vector>

#include "wsb/integrate.hpp"
#include "wsb/w_algorithm.hpp"

namespace wsb {

struct SectionPoint {
    double r = 0.0;
    double rdot = 0.0;
    double theta0 = 0.0;
    double C = 0.0;
    MassRatio mu{0.01215};
};

// Positive root of the Jacobi relation in polar coordinates about P2,
//   r^2 thetadot^2 = 2 Omega(r, theta0) - C - rdot^2.
// Throws DomainError when the right-hand side is not positive (off-section)
// or r is inside the collision guard.
double theta_dot_on_section(double r, double rdot, double theta0, double C, MassRatio mu,
                            double r_min = kDefaultCollisionRadius);

// Full rotating state for a section point.
RotState lift(const SectionPoint& p, double r_min = kDefaultCollisionRadius);

// Section coordinates of a state lying on the ray (theta is taken from the
// state; theta0 is stored as given).
SectionPoint section_point(const RotState& s, double theta0, MassRatio mu);

// Distance from P2 to L2; iterates beyond it count as escaped.
double escape_radius(MassRatio mu);

struct MapConfig {
    IntegratorConfig integrator{};
    // A trajectory farther than left_h2_factor * escape_radius from P2 is
    // taken to have left the P2 region.
    bool detect_left_h2 = true;
    double left_h2_factor = 1.5;
};

enum class ReturnStatus { Returned, NoReturn, LeftH2, Collision };

const char* to_string(ReturnStatus s);

struct ReturnResult {
    ReturnStatus status = ReturnStatus::NoReturn;
    SectionPoint point{};
    RotState state{};
    double t_flight = 0.0;
    double e2 = 0.0;
};

// Propagates a lifted point to its next posigrade crossing of the ray.
ReturnResult first_return(const SectionPoint& p, const MapConfig& cfg = {});

// first_return that throws std::runtime_error unless the point returns.
SectionPoint poincare_map(const SectionPoint& p, const MapConfig& cfg = {});

enum class IterateEnd { Completed, Escaped, LeftH2, NoReturn, Collision };

const char* to_string(IterateEnd e);

struct Iterate {
    int k = 0;
    SectionPoint p{};
    double t_flight = 0.0;  // time since the previous iterate
    double e2 = 0.0;
};

struct IterateOrbit {
    std::vector<Iterate> iterates;  // p_0 .. p_k
    IterateEnd end = IterateEnd::Completed;
    double rho = 0.0;

    bool bounded() const { return end == IterateEnd::Completed; }
};

IterateOrbit iterate(const SectionPoint& p, int k_max, const MapConfig& cfg = {});

struct SStarOrbit {
    IterateOrbit orbit;
    bool all_e2_negative = false;
};

// Iterates the section point of a periapsis initial condition and checks
// that the Kepler energy stays negative.
SStarOrbit sstar_orbit(const PeriapsisIC& ic, int k_max, const MapConfig& cfg = {});

struct FixedPoint {
    SectionPoint p{};
    double residual = 0.0;
    int iterations = 0;
};

// Newton iteration with a finite-difference Jacobian for Phi(p) = p.
FixedPoint find_fixed_point(const SectionPoint& guess, const MapConfig& cfg = {}, double tol = 1e-11,
                            int max_iter = 30);

// CSV with columns k,r,rdot,t_flight,E2,C.
void write_iterates_csv(std::ostream& os, const IterateOrbit& orbit);

}  // namespace wsb
