// Radial scans along a ray from P2, stable-interval extraction, boundary
// refinement and grid sweeps over (theta, e, n), plus finite-n stand-ins for
// the sets stable for all cycles and their boundary.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "wsb/w_algorithm.hpp"

namespace wsb {

struct ScanPoint {
    double r = 0.0;
    Verdict verdict = Verdict::Unstable;
    UnstableKind kind = UnstableKind::None;
    int failing_cycle = 0;
    double jacobi = 0.0;
    bool failed = false;  // hard integration error; see error
    std::string error;

    bool stable() const { return !failed && verdict == Verdict::Stable; }
};

struct RadialScan {
    double theta = 0.0;
    double e = 0.0;
    int n = 1;
    MassRatio mu{0.01215};
    std::vector<ScanPoint> points;  // radii strictly increasing

    std::size_t error_count() const;
};

// K equally spaced radii on [r_lo, r_hi].
std::vector<double> radial_grid(double r_lo, double r_hi, int K);

// Default scan range: [1e-3, 0.9 d] with d the P2-L1 distance; extended
// scans run to 1.2 d.
std::pair<double, double> default_scan_range(MassRatio mu, bool extended = false);

RadialScan radial_scan(double theta, double e, int n, MassRatio mu, const std::vector<double>& radii,
                       const IntegratorConfig& cfg = {}, int threads = 1);

struct Interval {
    double a = 0.0;
    double b = 0.0;
    bool below_resolution = false;  // a single stable grid point
    bool open_end = false;          // the run reaches the end of the scan range

    double length() const { return b - a; }
};

struct IntervalSet {
    double theta = 0.0;
    double e = 0.0;
    int n = 1;
    std::vector<Interval> intervals;

    double measure() const;
    bool contains(double r) const;
};

// Maximal runs of stable grid points. A run starting at the first grid point
// is extended down to r_floor (the collision guard), standing in for r = 0.
IntervalSet extract_intervals(const RadialScan& scan, double r_floor = kDefaultCollisionRadius);

enum class BoundarySide { Lower, Upper };

const char* to_string(BoundarySide s);

struct BoundaryRecord {
    double theta = 0.0;
    double e = 0.0;
    int n = 1;
    double r_star = 0.0;
    BoundarySide side = BoundarySide::Upper;  // which end of a stable interval
    double jacobi = 0.0;                      // C of the periapsis state at r_star
    double bracket_width = 0.0;
    UnstableKind kind = UnstableKind::None;   // verdict on the unstable side
    int iterations = 0;
    double r_stable = 0.0, r_unstable = 0.0;  // final bracket
};

inline constexpr double kDefaultRefineTol = 1e-10;

// Bisects between a stable and an unstable radius (either order) until the
// bracket is no wider than refine_tol. Throws DomainError when both ends
// classify the same way.
BoundaryRecord refine_boundary(double r_a, double r_b, double theta, double e, int n, MassRatio mu,
                               const IntegratorConfig& cfg = {}, double refine_tol = kDefaultRefineTol);

// Refines every stable/unstable transition between neighbouring grid points.
std::vector<BoundaryRecord> refine_scan(const RadialScan& scan, const IntegratorConfig& cfg = {},
                                        double refine_tol = kDefaultRefineTol, int threads = 1);

// Interval set whose endpoints are replaced by refined boundary radii.
IntervalSet refined_intervals(const IntervalSet& grid_intervals, const std::vector<BoundaryRecord>& boundaries);

struct SweepConfig {
    MassRatio mu{0.01215};
    std::vector<double> thetas;
    std::vector<double> eccentricities;
    std::vector<int> ns;
    double r_lo = 1e-3;
    double r_hi = 0.05;
    int K = 2000;
    IntegratorConfig integrator{};
    double refine_tol = kDefaultRefineTol;
    bool refine = true;
    int threads = 1;

    void validate() const;
};

struct SweepResult {
    std::vector<RadialScan> scans;            // ordered by (theta, e, n)
    std::vector<IntervalSet> intervals;       // one per scan
    std::vector<BoundaryRecord> boundaries;   // ordered by scan, then radius
    std::vector<std::string> errors;

    bool partial() const { return !errors.empty(); }
};

SweepResult sweep(const SweepConfig& cfg);

struct MonotonicityReport {
    int m = 0, n = 0;
    std::vector<double> violations;  // radii stable at m but unstable at n
    std::size_t excluded = 0;        // points skipped inside boundary bands

    bool ok() const { return violations.empty(); }
};

// Pointwise nesting check between a scan at m cycles and one at n <= m cycles
// on the same grid. Points within band of any radius in band_centers are
// skipped. Throws DomainError on grid mismatch.
MonotonicityReport monotonicity_check(const RadialScan& at_m, const RadialScan& at_n,
                                      const std::vector<double>& band_centers = {}, double band = 0.0);

// Same check on interval sets: every interval of the m set must lie inside an
// interval of the n set, up to tol.
MonotonicityReport monotonicity_check(const IntervalSet& at_m, const IntervalSet& at_n, double tol);

std::vector<Interval> intersect(const std::vector<Interval>& a, const std::vector<Interval>& b);

struct PersistentBoundary {
    double r_star = 0.0;
    BoundarySide side = BoundarySide::Upper;
    double jacobi = 0.0;
    std::vector<UnstableKind> kind_history;  // adjacent unstable kind for n = 1..n_max
};

/// Finite-n approximation of the stable-for-all-cycles set and its boundary.
struct LimitSets {
    double theta = 0.0;
    double e = 0.0;
    int n_max = 1;
    bool approximation = true;
    std::vector<Interval> s_hat;
    std::vector<PersistentBoundary> w_prime;
    std::vector<double> measure_by_n;  // refined stable measure for n = 1..n_max
    std::vector<IntervalSet> per_n;    // refined interval sets for n = 1..n_max
};

LimitSets limit_sets(double theta, double e, int n_max, MassRatio mu, const std::vector<double>& radii,
                     const IntegratorConfig& cfg = {}, double refine_tol = kDefaultRefineTol, int threads = 1);

enum class MStarLabel { Interior, Boundary, Complement };

const char* to_string(MStarLabel l);

struct MStarPoint {
    double r = 0.0, theta = 0.0;
    double Y1 = 0.0, Y2 = 0.0;
    MStarLabel label = MStarLabel::Complement;
};

// Labels a polar grid of periapsis positions about P2 (all radii on every
// ray) and inserts the persistent boundary points found along each ray.
// Within a ray, the returned points are sorted by radius.
std::vector<MStarPoint> mstar_partition(const std::vector<double>& thetas, const std::vector<double>& radii,
                                        double e, int n_max, MassRatio mu, const IntegratorConfig& cfg = {},
                                        double refine_tol = kDefaultRefineTol, int threads = 1);

// CSV products.
void write_scan_csv(std::ostream& os, const std::vector<RadialScan>& scans);
void write_intervals_csv(std::ostream& os, const std::vector<IntervalSet>& sets);
void write_boundaries_csv(std::ostream& os, const std::vector<BoundaryRecord>& boundaries);

}  // namespace wsb
