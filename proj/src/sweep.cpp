#include "wsb/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "wsb/csv.hpp"
#include "wsb/parallel.hpp"

namespace wsb {

std::size_t RadialScan::error_count() const {
    return static_cast<std::size_t>(
        std::count_if(points.begin(), points.end(), [](const ScanPoint& p) { return p.failed; }));
}

std::vector<double> radial_grid(double r_lo, double r_hi, int K) {
    if (K < 2) throw DomainError("radial grid needs K >= 2");
    if (!(r_lo > 0.0) || !(r_hi > r_lo)) throw DomainError("radial range must satisfy 0 < r_lo < r_hi");
    std::vector<double> r(static_cast<std::size_t>(K));
    for (int i = 0; i < K; ++i) r[static_cast<std::size_t>(i)] = r_lo + (r_hi - r_lo) * i / (K - 1);
    r.back() = r_hi;
    return r;
}

std::pair<double, double> default_scan_range(MassRatio mu, bool extended) {
    const double d = lagrange_points(mu).L(1).distance_to_p2();
    return {1e-3, (extended ? 1.2 : 0.9) * d};
}

namespace {

ScanPoint classify_point(double r, double theta, double e, int n, MassRatio mu, const IntegratorConfig& cfg) {
    ScanPoint p;
    p.r = r;
    try {
        const StabilityOutcome o = classify({r, theta, e, mu}, n, cfg);
        p.verdict = o.verdict;
        p.kind = o.kind;
        p.failing_cycle = o.failing_cycle;
        p.jacobi = o.jacobi;
    } catch (const DomainError&) {
        throw;
    } catch (const std::exception& ex) {
        p.failed = true;
        p.error = ex.what();
        p.jacobi = std::numeric_limits<double>::quiet_NaN();
    }
    return p;
}

void check_radii(const std::vector<double>& radii, const IntegratorConfig& cfg) {
    if (radii.empty()) throw DomainError("radial scan needs at least one radius");
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] > cfg.r_min)) throw DomainError("scan radius inside the collision guard");
        if (i > 0 && !(radii[i] > radii[i - 1])) throw DomainError("scan radii must be strictly increasing");
    }
}

std::string describe(const RadialScan& s, const ScanPoint& p) {
    return "theta=" + fmt_double(s.theta) + " e=" + fmt_double(s.e) + " n=" + std::to_string(s.n) +
           " r=" + fmt_double(p.r) + ": " + p.error;
}

}  // namespace

RadialScan radial_scan(double theta, double e, int n, MassRatio mu, const std::vector<double>& radii,
                       const IntegratorConfig& cfg, int threads) {
    cfg.validate();
    check_radii(radii, cfg);
    PeriapsisIC{radii.front(), theta, e, mu}.validate();
    if (n < 1) throw DomainError("cycle target n must be at least 1");
    RadialScan scan{theta, e, n, mu, {}};
    scan.points.resize(radii.size());
    parallel_for(radii.size(), threads,
                 [&](std::size_t i) { scan.points[i] = classify_point(radii[i], theta, e, n, mu, cfg); });
    return scan;
}

double IntervalSet::measure() const {
    double m = 0.0;
    for (const auto& iv : intervals) m += iv.length();
    return m;
}

bool IntervalSet::contains(double r) const {
    return std::any_of(intervals.begin(), intervals.end(), [r](const Interval& iv) { return r >= iv.a && r <= iv.b; });
}

IntervalSet extract_intervals(const RadialScan& scan, double r_floor) {
    IntervalSet set{scan.theta, scan.e, scan.n, {}};
    const auto& pts = scan.points;
    std::size_t i = 0;
    while (i < pts.size()) {
        if (!pts[i].stable()) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < pts.size() && pts[j + 1].stable()) ++j;
        Interval iv;
        iv.a = i == 0 ? std::min(r_floor, pts[0].r) : pts[i].r;
        iv.b = pts[j].r;
        iv.below_resolution = (i == j);
        iv.open_end = (j + 1 == pts.size());
        set.intervals.push_back(iv);
        i = j + 1;
    }
    return set;
}

const char* to_string(BoundarySide s) { return s == BoundarySide::Lower ? "lower" : "upper"; }

BoundaryRecord refine_boundary(double r_a, double r_b, double theta, double e, int n, MassRatio mu,
                               const IntegratorConfig& cfg, double refine_tol) {
    if (!(refine_tol > 0.0)) throw DomainError("refine_tol must be positive");
    const StabilityOutcome oa = classify({r_a, theta, e, mu}, n, cfg);
    const StabilityOutcome ob = classify({r_b, theta, e, mu}, n, cfg);
    if (oa.stable() == ob.stable()) throw DomainError("bracket-invalid: both endpoints classify the same way");

    double rs = oa.stable() ? r_a : r_b;
    double ru = oa.stable() ? r_b : r_a;
    UnstableKind kind = oa.stable() ? ob.kind : oa.kind;
    BoundaryRecord rec;
    rec.theta = theta;
    rec.e = e;
    rec.n = n;
    rec.side = rs < ru ? BoundarySide::Upper : BoundarySide::Lower;
    while (std::abs(ru - rs) > refine_tol) {
        const double mid = 0.5 * (rs + ru);
        if (mid == rs || mid == ru) break;  // bracket at floating resolution
        const StabilityOutcome om = classify({mid, theta, e, mu}, n, cfg);
        if (om.stable()) {
            rs = mid;
        } else {
            ru = mid;
            kind = om.kind;
        }
        ++rec.iterations;
    }
    rec.r_stable = rs;
    rec.r_unstable = ru;
    rec.r_star = 0.5 * (rs + ru);
    rec.bracket_width = std::abs(ru - rs);
    rec.kind = kind;
    rec.jacobi = jacobi_constant(to_p1_frame(periapsis_state({rec.r_star, theta, e, mu})), mu, cfg.r_min);
    return rec;
}

namespace {

struct Bracket {
    std::size_t scan;
    double r_a, r_b;
};

std::vector<Bracket> scan_brackets(const RadialScan& scan, std::size_t index) {
    std::vector<Bracket> out;
    for (std::size_t i = 0; i + 1 < scan.points.size(); ++i) {
        const auto& p = scan.points[i];
        const auto& q = scan.points[i + 1];
        if (p.failed || q.failed) continue;
        if (p.stable() != q.stable()) out.push_back({index, p.r, q.r});
    }
    return out;
}

std::vector<BoundaryRecord> refine_brackets(const std::vector<RadialScan>& scans, const std::vector<Bracket>& brackets,
                                            const IntegratorConfig& cfg, double tol, int threads,
                                            std::vector<std::string>* errors) {
    std::vector<BoundaryRecord> out(brackets.size());
    std::vector<std::string> errs(brackets.size());
    parallel_for(brackets.size(), threads, [&](std::size_t i) {
        const Bracket& b = brackets[i];
        const RadialScan& s = scans[b.scan];
        try {
            out[i] = refine_boundary(b.r_a, b.r_b, s.theta, s.e, s.n, s.mu, cfg, tol);
        } catch (const std::exception& ex) {
            errs[i] = "refine theta=" + fmt_double(s.theta) + " e=" + fmt_double(s.e) + " n=" + std::to_string(s.n) +
                      " [" + fmt_double(b.r_a) + ", " + fmt_double(b.r_b) + "]: " + ex.what();
        }
    });
    std::vector<BoundaryRecord> kept;
    for (std::size_t i = 0; i < brackets.size(); ++i) {
        if (errs[i].empty()) {
            kept.push_back(out[i]);
        } else if (errors) {
            errors->push_back(errs[i]);
        } else {
            throw ConvergenceError(errs[i]);
        }
    }
    return kept;
}

}  // namespace

std::vector<BoundaryRecord> refine_scan(const RadialScan& scan, const IntegratorConfig& cfg, double refine_tol,
                                        int threads) {
    const std::vector<RadialScan> one{scan};
    return refine_brackets(one, scan_brackets(scan, 0), cfg, refine_tol, threads, nullptr);
}

IntervalSet refined_intervals(const IntervalSet& grid_intervals, const std::vector<BoundaryRecord>& boundaries) {
    IntervalSet out = grid_intervals;
    for (auto& iv : out.intervals) {
        double lower = -std::numeric_limits<double>::infinity();
        double upper = std::numeric_limits<double>::infinity();
        for (const auto& b : boundaries) {
            if (b.side == BoundarySide::Lower && b.r_star <= iv.a) lower = std::max(lower, b.r_star);
            if (b.side == BoundarySide::Upper && b.r_star >= iv.b) upper = std::min(upper, b.r_star);
        }
        if (std::isfinite(lower)) iv.a = lower;
        if (std::isfinite(upper) && !iv.open_end) iv.b = upper;
    }
    // Guard against a lower boundary borrowed from a neighbouring gap.
    for (std::size_t i = 1; i < out.intervals.size(); ++i) {
        if (out.intervals[i].a < out.intervals[i - 1].b) out.intervals[i].a = grid_intervals.intervals[i].a;
    }
    return out;
}

void SweepConfig::validate() const {
    integrator.validate();
    if (thetas.empty() && !ns.empty()) throw DomainError("theta grid must not be empty");
    if (eccentricities.empty() && !ns.empty()) throw DomainError("eccentricity grid must not be empty");
    for (double e : eccentricities) {
        if (!(e >= 0.0 && e < 1.0)) throw DomainError("eccentricities must lie in [0, 1)");
    }
    for (std::size_t i = 0; i < ns.size(); ++i) {
        if (ns[i] < 1) throw DomainError("cycle counts must be at least 1");
        if (i > 0 && ns[i] < ns[i - 1]) throw DomainError("n list must be sorted");
    }
    if (!(refine_tol > 0.0)) throw DomainError("refine_tol must be positive");
    if (!ns.empty()) check_radii(radial_grid(r_lo, r_hi, K), integrator);
}

SweepResult sweep(const SweepConfig& cfg) {
    cfg.validate();
    SweepResult res;
    if (cfg.ns.empty()) return res;
    const std::vector<double> radii = radial_grid(cfg.r_lo, cfg.r_hi, cfg.K);
    const std::size_t n_scans = cfg.thetas.size() * cfg.eccentricities.size() * cfg.ns.size();
    res.scans.resize(n_scans);
    for (std::size_t it = 0; it < cfg.thetas.size(); ++it) {
        for (std::size_t ie = 0; ie < cfg.eccentricities.size(); ++ie) {
            for (std::size_t in = 0; in < cfg.ns.size(); ++in) {
                RadialScan& s = res.scans[(it * cfg.eccentricities.size() + ie) * cfg.ns.size() + in];
                s.theta = cfg.thetas[it];
                s.e = cfg.eccentricities[ie];
                s.n = cfg.ns[in];
                s.mu = cfg.mu;
                s.points.resize(radii.size());
            }
        }
    }
    const std::size_t K = radii.size();
    parallel_for(n_scans * K, cfg.threads, [&](std::size_t task) {
        RadialScan& s = res.scans[task / K];
        const std::size_t i = task % K;
        s.points[i] = classify_point(radii[i], s.theta, s.e, s.n, s.mu, cfg.integrator);
    });

    std::vector<Bracket> brackets;
    for (std::size_t s = 0; s < n_scans; ++s) {
        for (const auto& p : res.scans[s].points) {
            if (p.failed) res.errors.push_back(describe(res.scans[s], p));
        }
        res.intervals.push_back(extract_intervals(res.scans[s], cfg.integrator.r_min));
        if (cfg.refine) {
            auto b = scan_brackets(res.scans[s], s);
            brackets.insert(brackets.end(), b.begin(), b.end());
        }
    }
    res.boundaries = refine_brackets(res.scans, brackets, cfg.integrator, cfg.refine_tol, cfg.threads, &res.errors);
    return res;
}

MonotonicityReport monotonicity_check(const RadialScan& at_m, const RadialScan& at_n,
                                      const std::vector<double>& band_centers, double band) {
    if (at_m.points.size() != at_n.points.size() || at_m.theta != at_n.theta || at_m.e != at_n.e ||
        at_m.mu.value() != at_n.mu.value()) {
        throw DomainError("grid mismatch between scans");
    }
    if (at_m.n < at_n.n) throw DomainError("monotonicity check expects m >= n");
    MonotonicityReport rep;
    rep.m = at_m.n;
    rep.n = at_n.n;
    for (std::size_t i = 0; i < at_m.points.size(); ++i) {
        const double r = at_m.points[i].r;
        if (r != at_n.points[i].r) throw DomainError("grid mismatch between scans");
        if (!(at_m.points[i].stable() && !at_n.points[i].stable())) continue;
        const bool in_band = std::any_of(band_centers.begin(), band_centers.end(),
                                         [&](double c) { return std::abs(r - c) <= band; });
        if (in_band) {
            ++rep.excluded;
        } else {
            rep.violations.push_back(r);
        }
    }
    return rep;
}

MonotonicityReport monotonicity_check(const IntervalSet& at_m, const IntervalSet& at_n, double tol) {
    if (at_m.theta != at_n.theta || at_m.e != at_n.e) throw DomainError("interval sets describe different rays");
    if (at_m.n < at_n.n) throw DomainError("monotonicity check expects m >= n");
    MonotonicityReport rep;
    rep.m = at_m.n;
    rep.n = at_n.n;
    for (const auto& iv : at_m.intervals) {
        const bool inside = std::any_of(at_n.intervals.begin(), at_n.intervals.end(), [&](const Interval& o) {
            return iv.a >= o.a - tol && iv.b <= o.b + tol;
        });
        if (!inside) rep.violations.push_back(0.5 * (iv.a + iv.b));
    }
    return rep;
}

std::vector<Interval> intersect(const std::vector<Interval>& a, const std::vector<Interval>& b) {
    std::vector<Interval> out;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const double lo = std::max(a[i].a, b[j].a);
        const double hi = std::min(a[i].b, b[j].b);
        if (lo <= hi) {
            Interval iv;
            iv.a = lo;
            iv.b = hi;
            iv.below_resolution = a[i].below_resolution || b[j].below_resolution;
            iv.open_end = a[i].open_end && b[j].open_end;
            out.push_back(iv);
        }
        if (a[i].b < b[j].b) {
            ++i;
        } else {
            ++j;
        }
    }
    return out;
}

LimitSets limit_sets(double theta, double e, int n_max, MassRatio mu, const std::vector<double>& radii,
                     const IntegratorConfig& cfg, double refine_tol, int threads) {
    if (n_max < 1) throw DomainError("n_max must be at least 1");
    LimitSets out;
    out.theta = theta;
    out.e = e;
    out.n_max = n_max;
    const double persist_tol = 10.0 * refine_tol;
    std::vector<std::vector<BoundaryRecord>> bounds;
    for (int n = 1; n <= n_max; ++n) {
        const RadialScan scan = radial_scan(theta, e, n, mu, radii, cfg, threads);
        auto b = refine_scan(scan, cfg, refine_tol, threads);
        IntervalSet iv = refined_intervals(extract_intervals(scan, cfg.r_min), b);
        out.measure_by_n.push_back(iv.measure());
        out.s_hat = n == 1 ? iv.intervals : intersect(out.s_hat, iv.intervals);
        out.per_n.push_back(std::move(iv));
        bounds.push_back(std::move(b));
    }
    for (const auto& b : bounds.back()) {
        PersistentBoundary pb{b.r_star, b.side, b.jacobi, {}};
        bool persists = true;
        for (int n = 1; n <= n_max && persists; ++n) {
            const auto& bn = bounds[static_cast<std::size_t>(n - 1)];
            auto it = std::find_if(bn.begin(), bn.end(), [&](const BoundaryRecord& o) {
                return o.side == b.side && std::abs(o.r_star - b.r_star) <= persist_tol;
            });
            if (it == bn.end()) {
                persists = false;
            } else {
                pb.kind_history.push_back(it->kind);
            }
        }
        if (persists) out.w_prime.push_back(std::move(pb));
    }
    return out;
}

const char* to_string(MStarLabel l) {
    switch (l) {
        case MStarLabel::Interior: return "interior";
        case MStarLabel::Boundary: return "boundary";
        case MStarLabel::Complement: return "complement";
    }
    return "?";
}

std::vector<MStarPoint> mstar_partition(const std::vector<double>& thetas, const std::vector<double>& radii, double e,
                                        int n_max, MassRatio mu, const IntegratorConfig& cfg, double refine_tol,
                                        int threads) {
    std::vector<MStarPoint> out;
    for (double theta : thetas) {
        const LimitSets ls = limit_sets(theta, e, n_max, mu, radii, cfg, refine_tol, threads);
        std::vector<MStarPoint> ray;
        auto make = [&](double r, MStarLabel label) {
            return MStarPoint{r, theta, r * std::cos(theta), r * std::sin(theta), label};
        };
        for (double r : radii) {
            const bool inside = std::any_of(ls.s_hat.begin(), ls.s_hat.end(),
                                            [r](const Interval& iv) { return r >= iv.a && r <= iv.b; });
            ray.push_back(make(r, inside ? MStarLabel::Interior : MStarLabel::Complement));
        }
        for (const auto& b : ls.w_prime) ray.push_back(make(b.r_star, MStarLabel::Boundary));
        std::stable_sort(ray.begin(), ray.end(), [](const MStarPoint& a, const MStarPoint& b) { return a.r < b.r; });
        out.insert(out.end(), ray.begin(), ray.end());
    }
    return out;
}

void write_scan_csv(std::ostream& os, const std::vector<RadialScan>& scans) {
    os << "theta,e,n,r,verdict,kind,failing_cycle,C\n";
    CsvWriter w(os);
    for (const auto& s : scans) {
        for (const auto& p : s.points) {
            w.field(s.theta).field(s.e).field(s.n).field(p.r);
            w.field(p.failed ? "error" : to_string(p.verdict)).field(to_string(p.kind)).field(p.failing_cycle);
            w.field(p.jacobi);
            w.end_row();
        }
    }
}

void write_intervals_csv(std::ostream& os, const std::vector<IntervalSet>& sets) {
    os << "theta,e,n,a,b,below_resolution\n";
    CsvWriter w(os);
    for (const auto& s : sets) {
        for (const auto& iv : s.intervals) {
            w.field(s.theta).field(s.e).field(s.n).field(iv.a).field(iv.b).field(iv.below_resolution ? 1 : 0);
            w.end_row();
        }
    }
}

void write_boundaries_csv(std::ostream& os, const std::vector<BoundaryRecord>& boundaries) {
    os << "theta,e,n,r_star,side,C,kind,bracket_width,iterations\n";
    CsvWriter w(os);
    for (const auto& b : boundaries) {
        w.field(b.theta).field(b.e).field(b.n).field(b.r_star).field(to_string(b.side)).field(b.jacobi);
        w.field(to_string(b.kind)).field(b.bracket_width).field(b.iterations);
        w.end_row();
    }
}

}  // namespace wsb
