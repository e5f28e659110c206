// Planar Lyapunov orbits about L1/L2, their monodromy, globalized stable and
// unstable manifolds, section cuts on rays from P2 and the comparison of
// refined boundary points with stable-manifold cuts.
#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wsb/integrate.hpp"
#include "wsb/sweep.hpp"
#include "wsb/w_algorithm.hpp"

namespace wsb {

enum class Neck { L1, L2 };

const char* to_string(Neck n);

struct OrbitSettings {
    double rel_tol = 1e-14;
    double abs_tol = 1e-14;
    double h_max = 0.05;
    int max_newton = 25;
    double newton_tol = 1e-11;  // |vx| at the half period
};

struct LyapunovOrbit {
    P1State state0{};  // on the y1 axis, velocity along y2
    double period = 0.0;
    double jacobi = 0.0;
    Mat4 monodromy = Mat4::Identity();
    Neck neck = Neck::L1;
    MassRatio mu{0.01215};
    double amplitude = 0.0;             // y1 offset of state0 from the Lagrange point
    double periodicity_residual = 0.0;  // |flow(state0, T) - state0|
    int newton_iterations = 0;
};

// Single shooting on the half period: y1(0) = x0 is held fixed and v2(0) is
// corrected until the next crossing of the y1 axis is perpendicular.
// Throws ConvergenceError after max_newton iterations.
LyapunovOrbit lyapunov_correct(MassRatio mu, double x0, double v2_guess, Neck neck, const OrbitSettings& s = {});

// Small-amplitude initial guess (x0, v2) from the linearization at the
// Lagrange point; amplitude is measured away from P2.
std::pair<double, double> lyapunov_linear_guess(MassRatio mu, Neck neck, double amplitude);

// Continuation in amplitude from the equilibrium, then secant refinement of
// the amplitude until |C - C_target| < 1e-9. Throws DomainError when the
// target lies outside the family range explored.
LyapunovOrbit lyapunov_family(MassRatio mu, double C_target, Neck neck, const OrbitSettings& s = {});

struct FamilyMember {
    double amplitude;
    double jacobi;
    double period;
};

// Orbits at the given amplitudes (increasing), each corrected from the
// previous one.
std::vector<FamilyMember> lyapunov_family_scan(MassRatio mu, Neck neck, const std::vector<double>& amplitudes,
                                               const OrbitSettings& s = {});

struct MonodromySpectrum {
    std::array<std::complex<double>, 4> eigenvalues{};  // sorted by modulus, descending
    double lambda = 0.0;        // real unstable multiplier
    double lambda_inv = 0.0;    // its partner
    double unit_deviation = 0.0;  // max |mu_i - 1| over the remaining pair
    double determinant = 0.0;
};

MonodromySpectrum monodromy_spectrum(const Mat4& M);

// State and state-transition matrix at phase tau in [0, 1) of the orbit.
std::pair<P1State, Mat4> orbit_point(const LyapunovOrbit& orbit, double tau, const OrbitSettings& s = {});

enum class Branch { StableInterior, StableExterior, UnstableInterior, UnstableExterior };

const char* to_string(Branch b);
inline bool is_stable(Branch b) { return b == Branch::StableInterior || b == Branch::StableExterior; }
inline bool is_interior(Branch b) { return b == Branch::StableInterior || b == Branch::UnstableInterior; }

struct GlobalizeSettings {
    double epsilon = 1e-6;
    int n_seeds = 100;
    double t_span = 10.0 * kTwoPi;  // integration time per seed
    // Optional terminal conditions.
    double escape_radius = 0.0;     // distance from P2; 0 disables
    double p2_turns = 0.0;          // |phi2 change| in turns; 0 disables
    IntegratorConfig integrator{};
    int threads = 1;
};

struct ManifoldTrajectory {
    double phase = 0.0;
    Branch branch = Branch::StableInterior;
    Trajectory trajectory;
    std::string error;  // integrator failure for this seed, if any
};

// Seed state at phase tau: orbit point displaced by +-epsilon along the
// normalized eigenvector transported by the STM, on the requested side.
P1State manifold_seed(const LyapunovOrbit& orbit, Branch branch, double tau, double epsilon,
                      const OrbitSettings& s = {});

// Integrates n_seeds equally spaced seeds, stable branches backward in time.
std::vector<ManifoldTrajectory> globalize(const LyapunovOrbit& orbit, Branch branch, const GlobalizeSettings& g,
                                          const OrbitSettings& s = {});

struct CutPoint {
    double phase = 0.0;
    double r = 0.0, rdot = 0.0;
    double e2 = 0.0;
    double C = 0.0;
    double t = 0.0;
};

struct ManifoldCut {
    Branch branch = Branch::StableInterior;
    int k = 1;  // 1-based cut index; k - 1 full turns about P2 separate it from the orbit
    std::vector<CutPoint> points;  // ordered by seed phase
};

// Posigrade crossings of the ray theta0, grouped by the number of full turns
// about P2 between the crossing and the orbit. Cuts 1..k_max are returned.
std::vector<ManifoldCut> section_cuts(const std::vector<ManifoldTrajectory>& trajectories, double theta0, int k_max);

// Gap between the first and last points of a cut relative to the median
// spacing (a closed curve has a ratio of order 1).
double cut_closure_ratio(const ManifoldCut& cut);

struct AxisIntersection {
    double r = 0.0;
    double e2 = 0.0;
    double phase = 0.0;
    Neck neck = Neck::L1;
    int k = 1;
};

struct ManifoldComparison {
    bool manifolds_exist = true;
    std::string note;
    double r_star = 0.0;
    double jacobi = 0.0;
    // Distance from r* to the nearest rdot = 0, E2 < 0 intersection of cut n,
    // of cut n + 1 and of any cut up to n + 1; infinity when none exists.
    double distance_cut_n = 0.0;
    double distance_cut_n_plus_1 = 0.0;
    double distance_any = 0.0;
    std::vector<AxisIntersection> intersections;

    double best_distance() const { return distance_any; }
};

struct ComparisonSettings {
    GlobalizeSettings globalize{};
    OrbitSettings orbit{};
    double phase_tol = 1e-12;
};

// Compares a boundary point r* (ray theta0, Jacobi constant C) of the n-cycle
// set with the stable-manifold cuts of both Lyapunov orbits at C. Throws
// DomainError for n < 1.
ManifoldComparison wn_vs_manifold(double theta0, double r_star, double C, int n, MassRatio mu,
                                  const ComparisonSettings& cs = {});

// Time spent within `radius` of L1 or L2 by the trajectories started at
// r* - delta and r* + delta (the larger of the two), for a coarse and a fine
// delta. At a boundary point on a stable manifold the residence time grows
// like log(1/delta); at a boundary caused by a tangential crossing or the
// collision guard it stays bounded.
struct NeckResidence {
    double coarse = 0.0;
    double fine = 0.0;

    double growth() const { return fine - coarse; }
};

NeckResidence neck_residence(const PeriapsisIC& boundary, int n, double radius = 0.03, double coarse_delta = 1e-5,
                             double fine_delta = 1e-9, const IntegratorConfig& cfg = {});

struct HypothesisReport {
    std::size_t total = 0;
    std::size_t violators = 0;
    std::vector<double> cycles;  // per trajectory: turns about P2 (stable) or P1 (unstable)

    double violator_fraction() const { return total == 0 ? 0.0 : static_cast<double>(violators) / total; }
};

// Counts full cycles about P2 on stable branches and about P1 on unstable
// branches; a trajectory with fewer than n cycles is a violator.
HypothesisReport hypothesis_a_check(const std::vector<ManifoldTrajectory>& trajectories, int n);

void write_orbit_csv(std::ostream& os, const LyapunovOrbit& orbit);
void write_cuts_csv(std::ostream& os, const std::vector<ManifoldCut>& cuts);

}  // namespace wsb
