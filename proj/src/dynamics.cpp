#include "wsb/dynamics.hpp"

#include <string>

namespace wsb {

namespace {

struct Distances {
    double r1, r2;
};

Distances primary_distances(double y1, double y2, double r_min) {
    const double r1 = std::hypot(y1, y2);
    const double r2 = std::hypot(y1 - 1.0, y2);
    if (!(r1 >= r_min) || !(r2 >= r_min)) {
        throw SingularityError("state within collision guard (r1=" + std::to_string(r1) +
                               ", r2=" + std::to_string(r2) + ")");
    }
    return {r1, r2};
}

}  // namespace

MassRatio::MassRatio(double mu) : mu_(mu) {
    if (!(mu > 0.0 && mu < 0.5)) {
        throw DomainError("mass ratio must lie in (0, 0.5), got " + std::to_string(mu));
    }
}

double effective_potential(double y1, double y2, MassRatio mu) {
    const double m = mu.value();
    const double r1 = std::hypot(y1, y2);
    const double r2 = std::hypot(y1 - 1.0, y2);
    const double dx = y1 - m;
    return 0.5 * (dx * dx + y2 * y2) + (1.0 - m) / r1 + m / r2 + 0.5 * m * (1.0 - m);
}

std::array<double, 2> potential_gradient(double y1, double y2, MassRatio mu) {
    const double m = mu.value();
    const double r1 = std::hypot(y1, y2);
    const double r2 = std::hypot(y1 - 1.0, y2);
    const double k1 = (1.0 - m) / (r1 * r1 * r1);
    const double k2 = m / (r2 * r2 * r2);
    return {(y1 - m) - k1 * y1 - k2 * (y1 - 1.0), y2 - k1 * y2 - k2 * y2};
}

Vec4 eom_rhs(const P1State& s, MassRatio mu, double r_min) {
    primary_distances(s.y1, s.y2, r_min);
    const auto g = potential_gradient(s.y1, s.y2, mu);
    return {s.v1, s.v2, 2.0 * s.v2 + g[0], -2.0 * s.v1 + g[1]};
}

Mat4 eom_jacobian(const P1State& s, MassRatio mu, double r_min) {
    const auto [r1, r2] = primary_distances(s.y1, s.y2, r_min);
    const double m = mu.value();
    const double x1 = s.y1, x2 = s.y1 - 1.0, y = s.y2;
    const double r1_3 = r1 * r1 * r1, r1_5 = r1_3 * r1 * r1;
    const double r2_3 = r2 * r2 * r2, r2_5 = r2_3 * r2 * r2;
    const double a = 1.0 - m;

    const double oxx = 1.0 - a * (1.0 / r1_3 - 3.0 * x1 * x1 / r1_5) - m * (1.0 / r2_3 - 3.0 * x2 * x2 / r2_5);
    const double oyy = 1.0 - a * (1.0 / r1_3 - 3.0 * y * y / r1_5) - m * (1.0 / r2_3 - 3.0 * y * y / r2_5);
    const double oxy = 3.0 * a * x1 * y / r1_5 + 3.0 * m * x2 * y / r2_5;

    Mat4 A = Mat4::Zero();
    A(0, 2) = 1.0;
    A(1, 3) = 1.0;
    A(2, 0) = oxx;
    A(2, 1) = oxy;
    A(3, 0) = oxy;
    A(3, 1) = oyy;
    A(2, 3) = 2.0;
    A(3, 2) = -2.0;
    return A;
}

Mat4 variational_rhs(const P1State& s, const Mat4& stm, MassRatio mu, double r_min) {
    return eom_jacobian(s, mu, r_min) * stm;
}

double jacobi_constant(const P1State& s, MassRatio mu, double r_min) {
    primary_distances(s.y1, s.y2, r_min);
    return 2.0 * effective_potential(s.y1, s.y2, mu) - (s.v1 * s.v1 + s.v2 * s.v2);
}

double jacobi_constant_p2(const RotState& s, MassRatio mu, double r_min) {
    const double m = mu.value();
    // Distance to P1, which sits at Y1 = -1.
    const double r1 = std::hypot(s.Y1 + 1.0, s.Y2);
    const double r = std::hypot(s.Y1, s.Y2);
    if (!(r1 >= r_min) || !(r >= r_min)) {
        throw SingularityError("state within collision guard");
    }
    const double cx = s.Y1 + 1.0 - m;
    return -(s.V1 * s.V1 + s.V2 * s.V2) + 2.0 * ((1.0 - m) / r1 + m / r) + (cx * cx + s.Y2 * s.Y2) +
           m * (1.0 - m);
}

double kepler_energy(const RotState& s, MassRatio mu) {
    const double r = std::hypot(s.Y1, s.Y2);
    if (!(r > 0.0)) throw SingularityError("Kepler energy undefined at P2");
    const double v2 = s.V1 * s.V1 + s.V2 * s.V2;
    return 0.5 * v2 - mu.value() / r - rotating_momentum_term(s) + 0.5 * r * r;
}

Vec4 to_inertial_p2(const RotState& s, double t) {
    const double c = std::cos(t), sn = std::sin(t);
    // Velocity seen from the inertial frame before rotation: V + omega x Y.
    const double u1 = s.V1 - s.Y2;
    const double u2 = s.V2 + s.Y1;
    return {c * s.Y1 - sn * s.Y2, sn * s.Y1 + c * s.Y2, c * u1 - sn * u2, sn * u1 + c * u2};
}

double kepler_energy_inertial(const Vec4& x, MassRatio mu) {
    const double r = std::hypot(x[0], x[1]);
    if (!(r > 0.0)) throw SingularityError("Kepler energy undefined at P2");
    return 0.5 * (x[2] * x[2] + x[3] * x[3]) - mu.value() / r;
}

PolarState to_polar(const RotState& s) {
    const double r = std::hypot(s.Y1, s.Y2);
    if (!(r > 0.0)) throw DomainError("polar coordinates undefined at r = 0");
    const double rdot = (s.Y1 * s.V1 + s.Y2 * s.V2) / r;
    const double thetadot = (s.Y1 * s.V2 - s.Y2 * s.V1) / (r * r);
    return {r, std::atan2(s.Y2, s.Y1), rdot, thetadot};
}

RotState from_polar(const PolarState& p) {
    const double c = std::cos(p.theta), sn = std::sin(p.theta);
    return {p.r * c, p.r * sn, p.rdot * c - p.r * p.thetadot * sn, p.rdot * sn + p.r * p.thetadot * c};
}

namespace {

double collinear_gradient(double x, MassRatio mu) { return potential_gradient(x, 0.0, mu)[0]; }

double bisect_collinear(double lo, double hi, MassRatio mu) {
    double flo = collinear_gradient(lo, mu);
    for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = collinear_gradient(mid, mu);
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

EquilibriumSet lagrange_points(MassRatio mu) {
    constexpr double eps = 1e-9;
    EquilibriumSet set;
    const double x1 = bisect_collinear(eps, 1.0 - eps, mu);
    const double x2 = bisect_collinear(1.0 + eps, 3.0, mu);
    const double x3 = bisect_collinear(-1.0 + eps, -eps, mu);
    const double h = std::sqrt(3.0) / 2.0;
    const std::array<std::array<double, 2>, 5> pos{{{x1, 0.0}, {x2, 0.0}, {x3, 0.0}, {0.5, h}, {0.5, -h}}};
    for (std::size_t i = 0; i < 5; ++i) {
        const P1State s{pos[i][0], pos[i][1], 0.0, 0.0};
        set.points[i] = {pos[i][0], pos[i][1], jacobi_constant(s, mu)};
    }
    return set;
}

}  // namespace wsb
