#include <doctest.h>

#include <cmath>
#include <sstream>

#include "wsb/w_algorithm.hpp"

using namespace wsb;

TEST_SUITE("w_algorithm") {

TEST_CASE("periapsis state has the prescribed Kepler energy") {
    const PeriapsisIC ic{0.01, 1.0, 0.3, MassRatio(0.00095)};
    const RotState s = periapsis_state(ic);
    CHECK(std::abs(kepler_energy(s, ic.mu) - 0.00095 * (0.3 - 1.0) / (2 * 0.01)) < 1e-13);
    const PolarState p = to_polar(s);
    CHECK(p.r == doctest::Approx(0.01).epsilon(1e-14));
    CHECK(std::abs(p.theta - 1.0) < 1e-14);
    CHECK(std::abs(p.rdot) < 1e-15);
    CHECK(p.thetadot > 0.0);
}

TEST_CASE("periapsis speed") {
    CHECK(periapsis_speed(0.05, 0.0, MassRatio(0.01215)) == doctest::Approx(0.4429503017546495).epsilon(1e-15));
    // Far enough out the posigrade osculating speed is smaller than the frame
    // rotation and the rotating velocity reverses.
    CHECK(periapsis_speed(0.5, 0.0, MassRatio(0.01215)) < 0.0);
}

TEST_CASE("invalid initial conditions") {
    CHECK_THROWS_AS(classify({0.0, 0.0, 0.0, MassRatio(0.01215)}, 1), DomainError);
    CHECK_THROWS_AS(classify({0.01, 0.0, 1.0, MassRatio(0.01215)}, 1), DomainError);
    CHECK_THROWS_AS(classify({0.01, 0.0, -0.1, MassRatio(0.01215)}, 1), DomainError);
    CHECK_THROWS_AS(classify({0.01, 0.0, 0.0, MassRatio(0.01215)}, 0), DomainError);
}

TEST_CASE("close circular orbit is stable for four cycles") {
    const PeriapsisIC ic{0.005, 0.0, 0.0, MassRatio(0.01215)};
    const StabilityOutcome o = classify(ic, 4);
    CHECK(o.stable());
    CHECK(o.kind == UnstableKind::None);
    CHECK(o.n_completed == 4);
    REQUIRE(o.crossings.size() == 4);
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(o.crossings[k].counted);
        CHECK(o.crossings[k].e2 < 0.0);
        CHECK(o.crossings[k].thetadot > 0.0);
        CHECK(o.crossings[k].phi2_turns == doctest::Approx(k + 1.0).epsilon(1e-9));
        CHECK(std::abs(o.crossings[k].phi1_turns) < 1.0);
    }
}

TEST_CASE("wide orbit goes around P1") {
    const PeriapsisIC ic{0.2, 0.0, 0.0, MassRatio(0.01215)};
    Trajectory tr;
    const StabilityOutcome o = classify(ic, 1, {}, &tr);
    CHECK_FALSE(o.stable());
    CHECK(o.kind == UnstableKind::P1Cycle);
    CHECK(o.failing_cycle == 1);
    REQUIRE_FALSE(o.triggered.empty());
    CHECK(o.triggered.front() == UnstableKind::P1Cycle);
    const P1CrossingDiagnostic d = e2_at_p1_crossing_check(tr);
    CHECK(d.Y1 < -1.0);
    CHECK(std::abs(tr.at(d.t1).y2) < 1e-10);
    CHECK(d.passes == (d.e2 > 0.0));
}

TEST_CASE("positive Kepler energy at the return") {
    const PeriapsisIC ic{0.1, M_PI, 0.0, MassRatio(0.01215)};
    const StabilityOutcome o = classify(ic, 1);
    CHECK(o.kind == UnstableKind::E2NonNegative);
    CHECK(o.failing_cycle == 1);
    REQUIRE_FALSE(o.crossings.empty());
    CHECK(o.crossings.back().e2 >= 0.0);
}

TEST_CASE("diagnostic needs a crossing beyond P1") {
    Trajectory tr;
    classify({0.005, 0.0, 0.0, MassRatio(0.01215)}, 1, {}, &tr);
    CHECK_THROWS_AS(e2_at_p1_crossing_check(tr), DomainError);
}

TEST_CASE("more cycles never make a point stable") {
    const MassRatio mu(0.00095);
    for (double r = 0.004; r < 0.06; r += 0.004) {
        bool prev = true;
        for (int n = 1; n <= 4; ++n) {
            const bool s = classify({r, 0.5, 0.2, mu}, n).stable();
            CHECK_FALSE((s && !prev));
            prev = s;
        }
    }
}

TEST_CASE("fewer cycles reproduce the leading crossings") {
    const PeriapsisIC ic{0.01, 0.0, 0.0, MassRatio(0.01215)};
    const StabilityOutcome a = classify(ic, 3), b = classify(ic, 1);
    REQUIRE(a.crossings.size() == 3);
    REQUIRE(b.crossings.size() == 1);
    CHECK(a.crossings[0].t == b.crossings[0].t);
    CHECK(a.crossings[0].r == b.crossings[0].r);
}

TEST_CASE("classification is deterministic") {
    const PeriapsisIC ic{0.03, 2.0, 0.4, MassRatio(0.00095)};
    const StabilityOutcome a = classify(ic, 2), b = classify(ic, 2);
    CHECK(a.verdict == b.verdict);
    CHECK(a.kind == b.kind);
    CHECK(a.t_end == b.t_end);
}

TEST_CASE("non-return within the time limit") {
    IntegratorConfig cfg;
    cfg.t_max = 0.01;
    const StabilityOutcome o = classify({0.02, 0.0, 0.0, MassRatio(0.01215)}, 1, cfg);
    CHECK(o.kind == UnstableKind::NonReturn);
}

TEST_CASE("kind names round trip") {
    for (UnstableKind k : {UnstableKind::None, UnstableKind::P1Cycle, UnstableKind::E2NonNegative,
                           UnstableKind::Tangential, UnstableKind::NonReturn, UnstableKind::CollisionGuard}) {
        const auto back = unstable_kind_from_string(to_string(k));
        REQUIRE(back.has_value());
        CHECK(*back == k);
    }
    CHECK_FALSE(unstable_kind_from_string("bogus").has_value());
}

TEST_CASE("outcome CSV") {
    const PeriapsisIC ic{0.005, 0.0, 0.0, MassRatio(0.01215)};
    std::ostringstream os;
    write_outcome_header(os);
    write_outcome_row(os, ic, 1, classify(ic, 1));
    const std::string s = os.str();
    CHECK(s.find("r,theta,e,mu,C,verdict,kind,failing_cycle,n\n") == 0);
    CHECK(s.find(",stable,none,0,1\n") != std::string::npos);
}

}  // TEST_SUITE
