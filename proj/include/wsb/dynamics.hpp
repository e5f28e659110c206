// Planar circular restricted three-body problem: equations of motion,
// integrals, equilibria and frame changes.
//
// Units are normalized: the primaries are one length unit apart, the frame
// rotates with unit angular velocity and G(m1 + m2) = 1. The P1-centered
// rotating frame puts P1 at (0, 0) and P2 at (1, 0); the P2-centered frame is
// the same frame shifted so that P2 sits at the origin and P1 at (-1, 0).
#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include <Eigen/Core>

#include "wsb/errors.hpp"

namespace wsb {

using Vec4 = std::array<double, 4>;
using Mat4 = Eigen::Matrix4d;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Mass of P2 in units of the total mass; P1 carries 1 - mu.
class MassRatio {
public:
    explicit MassRatio(double mu);
    double value() const { return mu_; }
    double primary() const { return 1.0 - mu_; }

private:
    double mu_;
};

/// State in the P1-centered rotating frame.
struct P1State {
    double y1 = 0.0, y2 = 0.0, v1 = 0.0, v2 = 0.0;

    Vec4 as_array() const { return {y1, y2, v1, v2}; }
    static P1State from_array(const Vec4& a) { return {a[0], a[1], a[2], a[3]}; }
};

/// State in the P2-centered rotating frame.
struct RotState {
    double Y1 = 0.0, Y2 = 0.0, V1 = 0.0, V2 = 0.0;

    Vec4 as_array() const { return {Y1, Y2, V1, V2}; }
    static RotState from_array(const Vec4& a) { return {a[0], a[1], a[2], a[3]}; }
};

/// Polar coordinates about P2 in the rotating frame.
struct PolarState {
    double r = 0.0, theta = 0.0, rdot = 0.0, thetadot = 0.0;
};

/// Collision guard radius applied to both primaries.
inline constexpr double kDefaultCollisionRadius = 1e-6;

// Effective potential Omega(y1, y2), including the constant mu(1-mu)/2 so
// that the triangular points sit at C = 3.
double effective_potential(double y1, double y2, MassRatio mu);

// Gradient (Omega_y1, Omega_y2).
std::array<double, 2> potential_gradient(double y1, double y2, MassRatio mu);

// Time derivative of a P1-frame state. Throws SingularityError when the state
// is within r_min of either primary.
Vec4 eom_rhs(const P1State& s, MassRatio mu, double r_min = kDefaultCollisionRadius);

// Jacobian of eom_rhs with respect to the state.
Mat4 eom_jacobian(const P1State& s, MassRatio mu, double r_min = kDefaultCollisionRadius);

// A(s) * stm, the right-hand side of the variational equations.
Mat4 variational_rhs(const P1State& s, const Mat4& stm, MassRatio mu,
                     double r_min = kDefaultCollisionRadius);

// Jacobi integral 2 Omega - |v|^2.
double jacobi_constant(const P1State& s, MassRatio mu, double r_min = kDefaultCollisionRadius);

// Jacobi integral written directly in P2-centered coordinates.
double jacobi_constant_p2(const RotState& s, MassRatio mu, double r_min = kDefaultCollisionRadius);

// Two-body energy of the particle relative to P2, evaluated from rotating
// coordinates: |V|^2/2 - mu/|Y| - (V1 Y2 - V2 Y1) + |Y|^2/2.
double kepler_energy(const RotState& s, MassRatio mu);

// Angular momentum term L = V1 Y2 - V2 Y1 appearing in kepler_energy.
inline double rotating_momentum_term(const RotState& s) { return s.V1 * s.Y2 - s.V2 * s.Y1; }

// Inertial P2-centered state at time t, for a rotating state observed at t.
// At t = 0 the two frames coincide in position.
Vec4 to_inertial_p2(const RotState& s, double t);

// Kepler energy from an inertial P2-centered state (X, Xdot).
double kepler_energy_inertial(const Vec4& inertial, MassRatio mu);

inline RotState to_p2_frame(const P1State& s) { return {s.y1 - 1.0, s.y2, s.v1, s.v2}; }
inline P1State to_p1_frame(const RotState& s) { return {s.Y1 + 1.0, s.Y2, s.V1, s.V2}; }

// Polar decomposition about P2. Throws DomainError at r = 0.
PolarState to_polar(const RotState& s);
RotState from_polar(const PolarState& p);

/// Reflection Y2 -> -Y2, V1 -> -V1. Combined with time reversal it maps
/// solutions to solutions.
inline RotState mirror(const RotState& s) { return {s.Y1, -s.Y2, -s.V1, s.V2}; }
inline P1State mirror(const P1State& s) { return {s.y1, -s.y2, -s.v1, s.v2}; }

struct LagrangePoint {
    double y1 = 0.0;  // P1-frame position
    double y2 = 0.0;
    double jacobi = 0.0;

    double distance_to_p2() const { return std::hypot(y1 - 1.0, y2); }
};

/// Equilibria L1..L5; index 0 holds L1.
struct EquilibriumSet {
    std::array<LagrangePoint, 5> points{};

    const LagrangePoint& L(int i) const { return points.at(static_cast<std::size_t>(i - 1)); }
    double C(int i) const { return L(i).jacobi; }
};

EquilibriumSet lagrange_points(MassRatio mu);

}  // namespace wsb
