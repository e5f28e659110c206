#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wsb/sweep.hpp"

using namespace wsb;

namespace {

RadialScan synthetic(const std::vector<int>& stable) {
    RadialScan s;
    for (std::size_t i = 0; i < stable.size(); ++i) {
        ScanPoint p;
        p.r = 0.01 * (i + 1);
        p.verdict = stable[i] ? Verdict::Stable : Verdict::Unstable;
        p.kind = stable[i] ? UnstableKind::None : UnstableKind::P1Cycle;
        s.points.push_back(p);
    }
    return s;
}

}  // namespace

TEST_SUITE("sweep") {

TEST_CASE("radial grid and default range") {
    const auto g = radial_grid(0.1, 0.2, 11);
    REQUIRE(g.size() == 11);
    CHECK(g.front() == 0.1);
    CHECK(g.back() == 0.2);
    CHECK(g[5] == doctest::Approx(0.15).epsilon(1e-15));
    CHECK_THROWS_AS(radial_grid(0.2, 0.1, 10), DomainError);
    const MassRatio mu(0.01215);
    const double d = lagrange_points(mu).L(1).distance_to_p2();
    const auto [lo, hi] = default_scan_range(mu);
    CHECK(lo == 1e-3);
    CHECK(hi == doctest::Approx(0.9 * d).epsilon(1e-14));
    CHECK(default_scan_range(mu, true).second == doctest::Approx(1.2 * d).epsilon(1e-14));
}

TEST_CASE("interval extraction") {
    SUBCASE("no stable point") { CHECK(extract_intervals(synthetic({0, 0, 0})).intervals.empty()); }
    SUBCASE("run from the first point reaches down to the floor") {
        const auto set = extract_intervals(synthetic({1, 1, 0, 0}), 1e-6);
        REQUIRE(set.intervals.size() == 1);
        CHECK(set.intervals[0].a == 1e-6);
        CHECK(set.intervals[0].b == doctest::Approx(0.02));
        CHECK_FALSE(set.intervals[0].open_end);
    }
    SUBCASE("isolated point and open end") {
        const auto set = extract_intervals(synthetic({0, 1, 0, 1, 1}));
        REQUIRE(set.intervals.size() == 2);
        CHECK(set.intervals[0].below_resolution);
        CHECK(set.intervals[0].length() == 0.0);
        CHECK(set.intervals[1].open_end);
        CHECK(set.measure() == doctest::Approx(0.01));
        CHECK(set.contains(0.045));
        CHECK_FALSE(set.contains(0.03));
    }
    SUBCASE("failed points count as not stable") {
        auto scan = synthetic({1, 1, 1});
        scan.points[1].failed = true;
        CHECK(extract_intervals(scan).intervals.size() == 2);
        CHECK(scan.error_count() == 1);
    }
}

TEST_CASE("boundary refinement against the reference value") {
    const MassRatio mu(0.00095);
    const BoundaryRecord b = refine_boundary(0.0205, 0.0212, 0.0, 0.4, 1, mu);
    CHECK(std::abs(b.r_star - 0.020888116693496706) < 1e-6);
    CHECK(b.bracket_width <= kDefaultRefineTol);
    CHECK(b.side == BoundarySide::Upper);
    CHECK(b.kind != UnstableKind::None);
    // Bisection halves the bracket each time.
    CHECK(b.iterations == static_cast<int>(std::ceil(std::log2(0.0007 / kDefaultRefineTol))));
    CHECK(classify({b.r_stable, 0.0, 0.4, mu}, 1).stable());
    CHECK_FALSE(classify({b.r_unstable, 0.0, 0.4, mu}, 1).stable());

    const BoundaryRecord c = refine_boundary(0.0220, 0.0212, M_PI, 0.4, 1, mu, {}, 1e-9);
    CHECK(std::abs(c.r_star - 0.021642148208618168) < 1e-6);
}

TEST_CASE("bracket with equal verdicts is rejected") {
    CHECK_THROWS_AS(refine_boundary(0.004, 0.005, 0.0, 0.0, 1, MassRatio(0.01215)), DomainError);
    CHECK_THROWS_AS(refine_boundary(0.0205, 0.0212, 0.0, 0.4, 1, MassRatio(0.00095), {}, 0.0), DomainError);
}

TEST_CASE("refined scan and refined intervals") {
    const MassRatio mu(0.00095);
    const RadialScan scan = radial_scan(0.0, 0.4, 1, mu, radial_grid(0.001, 0.04, 40), {}, 2);
    const auto bounds = refine_scan(scan, {}, 1e-8, 2);
    REQUIRE_FALSE(bounds.empty());
    for (std::size_t i = 1; i < bounds.size(); ++i) CHECK(bounds[i].r_star > bounds[i - 1].r_star);
    const IntervalSet grid = extract_intervals(scan);
    const IntervalSet refined = refined_intervals(grid, bounds);
    REQUIRE(refined.intervals.size() == grid.intervals.size());
    for (std::size_t i = 0; i < grid.intervals.size(); ++i) {
        CHECK(refined.intervals[i].b >= grid.intervals[i].b);
        CHECK(refined.intervals[i].b - grid.intervals[i].b < 0.001 + 1e-12);
    }
}

TEST_CASE("monotonicity check") {
    const auto m = synthetic({1, 1, 0, 0});
    const auto n = synthetic({1, 1, 1, 0});
    CHECK(monotonicity_check(m, n).ok());
    // Negative control: the reversed pair violates nesting at r = 0.03.
    const auto rev = monotonicity_check(n, m);
    REQUIRE(rev.violations.size() == 1);
    CHECK(rev.violations[0] == doctest::Approx(0.03));
    // Excluded inside a band.
    const auto banded = monotonicity_check(n, m, {0.031}, 0.002);
    CHECK(banded.ok());
    CHECK(banded.excluded == 1);
    CHECK_THROWS_AS(monotonicity_check(m, synthetic({1, 1})), DomainError);

    const IntervalSet a{0, 0, 2, {{0.01, 0.02}}}, b{0, 0, 1, {{0.005, 0.03}}};
    CHECK(monotonicity_check(a, b, 1e-12).ok());
    const IntervalSet wide_m{0, 0, 2, {{0.005, 0.03}}}, narrow_n{0, 0, 1, {{0.01, 0.02}}};
    CHECK_FALSE(monotonicity_check(wide_m, narrow_n, 1e-12).ok());
    CHECK_THROWS_AS(monotonicity_check(b, a, 1e-12), DomainError);
}

TEST_CASE("interval intersection") {
    const auto x = intersect({{0.0, 1.0}, {2.0, 3.0}}, {{0.5, 2.5}});
    REQUIRE(x.size() == 2);
    CHECK(x[0].a == 0.5);
    CHECK(x[0].b == 1.0);
    CHECK(x[1].a == 2.0);
    CHECK(x[1].b == 2.5);
    CHECK(intersect({{0.0, 1.0}}, {{1.5, 2.0}}).empty());
}

TEST_CASE("sweep configuration") {
    SweepConfig cfg;
    cfg.mu = MassRatio(0.00095);
    cfg.thetas = {0.0};
    cfg.eccentricities = {0.0};
    cfg.ns = {1, 2};
    cfg.r_lo = 0.002;
    cfg.r_hi = 0.05;
    cfg.K = 25;
    CHECK_NOTHROW(cfg.validate());
    SweepConfig bad = cfg;
    bad.ns = {2, 1};
    CHECK_THROWS_AS(bad.validate(), DomainError);
    bad = cfg;
    bad.eccentricities = {1.0};
    CHECK_THROWS_AS(bad.validate(), DomainError);
    bad = cfg;
    bad.ns = {0};
    CHECK_THROWS_AS(bad.validate(), DomainError);

    SweepConfig empty = cfg;
    empty.ns.clear();
    const SweepResult none = sweep(empty);
    CHECK(none.scans.empty());
    CHECK_FALSE(none.partial());

    const SweepResult res = sweep(cfg);
    REQUIRE(res.scans.size() == 2);
    CHECK(res.intervals.size() == 2);
    CHECK(res.scans[0].n == 1);
    CHECK(res.scans[1].n == 2);
    CHECK(monotonicity_check(res.scans[1], res.scans[0]).ok());
    for (const auto& b : res.boundaries) CHECK(b.bracket_width <= cfg.refine_tol);
}

TEST_CASE("sweep output does not depend on the thread count") {
    SweepConfig cfg;
    cfg.mu = MassRatio(0.00095);
    cfg.thetas = {0.0, 2.0};
    cfg.eccentricities = {0.2};
    cfg.ns = {1};
    cfg.r_lo = 0.002;
    cfg.r_hi = 0.05;
    cfg.K = 30;
    cfg.refine_tol = 1e-8;
    auto render = [&](int threads) {
        cfg.threads = threads;
        const SweepResult r = sweep(cfg);
        std::ostringstream os;
        write_scan_csv(os, r.scans);
        write_intervals_csv(os, r.intervals);
        write_boundaries_csv(os, r.boundaries);
        return os.str();
    };
    CHECK(render(1) == render(4));
}

TEST_CASE("limit sets are nested") {
    const MassRatio mu(0.00095);
    const LimitSets ls = limit_sets(0.0, 0.0, 3, mu, radial_grid(0.002, 0.05, 30), {}, 1e-8, 2);
    CHECK(ls.approximation);
    REQUIRE(ls.per_n.size() == 3);
    REQUIRE(ls.measure_by_n.size() == 3);
    for (int k = 1; k < 3; ++k) {
        CHECK(ls.measure_by_n[k] <= ls.measure_by_n[k - 1] + 1e-8);
        CHECK(monotonicity_check(ls.per_n[k], ls.per_n[k - 1], 1e-7).ok());
    }
    double s_hat = 0.0;
    for (const auto& iv : ls.s_hat) s_hat += iv.length();
    CHECK(s_hat <= ls.measure_by_n.back() + 1e-8);
    for (const auto& w : ls.w_prime) CHECK(w.kind_history.size() == 3);
}

TEST_CASE("stable-set partition labels every grid point") {
    const MassRatio mu(0.00095);
    const std::vector<double> thetas{0.0, M_PI};
    const auto radii = radial_grid(0.002, 0.05, 12);
    const auto pts = mstar_partition(thetas, radii, 0.0, 2, mu, {}, 1e-8, 2);
    CHECK(pts.size() >= thetas.size() * radii.size());
    std::size_t interior = 0;
    for (const auto& p : pts) {
        CHECK(std::hypot(p.Y1 - p.r * std::cos(p.theta), p.Y2 - p.r * std::sin(p.theta)) < 1e-14);
        if (p.label == MStarLabel::Interior) ++interior;
    }
    CHECK(interior > 0);
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (pts[i].theta == pts[i - 1].theta) CHECK(pts[i].r >= pts[i - 1].r);
}

TEST_CASE("CSV products") {
    auto scan = synthetic({1, 0});
    scan.theta = 0.5;
    std::ostringstream os;
    write_scan_csv(os, {scan});
    const std::string s = os.str();
    CHECK(std::count(s.begin(), s.end(), '\n') == 3);
    std::ostringstream bs;
    write_boundaries_csv(bs, {});
    const std::string b = bs.str();
    CHECK(std::count(b.begin(), b.end(), '\n') == 1);
}

}  // TEST_SUITE
