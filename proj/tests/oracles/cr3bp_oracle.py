"""Independent reference values for the C++ tests.

Uses mpmath (collinear points), sympy (potential gradient) and scipy's DOP853
(trajectories). Nothing here shares code with the library; the printed values
are frozen into the tests with tolerances that cover the oracle's own error.
"""
import math

import mpmath as mp
import numpy as np
import sympy as sp
from scipy.integrate import solve_ivp

mp.mp.dps = 40


def omega_sym():
    y1, y2, mu = sp.symbols("y1 y2 mu", real=True)
    r1 = sp.sqrt((y1 + mu) ** 2 + y2 ** 2)
    r2 = sp.sqrt((y1 - 1 + mu) ** 2 + y2 ** 2)
    om = (y1 ** 2 + y2 ** 2) / 2 + (1 - mu) / r1 + mu / r2 + mu * (1 - mu) / 2
    return y1, y2, mu, om


def gradient_at(mu_v, p):
    y1, y2, mu, om = omega_sym()
    g = [sp.diff(om, v) for v in (y1, y2)]
    return [float(gi.subs({y1: p[0], y2: p[1], mu: mu_v}).evalf(30)) for gi in g]


def collinear(mu_v):
    """L1, L2, L3 in the frame with P1 at -mu (shifted by +mu to P1 at 0)."""
    mu = mp.mpf(mu_v)

    def fx(x):
        r1 = x + mu
        r2 = x - 1 + mu
        return x - (1 - mu) * r1 / abs(r1) ** 3 - mu * r2 / abs(r2) ** 3

    def om(x):
        return x ** 2 / 2 + (1 - mu) / abs(x + mu) + mu / abs(x - 1 + mu) + mu * (1 - mu) / 2

    eps = mp.mpf("1e-12")
    out = []
    for a, b in ((-mu + eps, 1 - mu - eps), (1 - mu + eps, 3), (-3, -mu - eps)):
        fa = fx(a)
        for _ in range(200):
            m = (a + b) / 2
            fm = fx(m)
            if (fm > 0) == (fa > 0):
                a, fa = m, fm
            else:
                b = m
        x = (a + b) / 2
        out.append((float(x + mu), float(2 * om(x))))
    return out  # (P1-frame y1, C) for L1, L2, L3


def rhs(mu):
    def f(t, s):
        y1, y2, v1, v2 = s
        x = y1 - mu  # library frame has P1 at the origin; shift to barycentric
        r1 = math.hypot(x + mu, y2)
        r2 = math.hypot(x - 1 + mu, y2)
        ax = x - (1 - mu) * (x + mu) / r1 ** 3 - mu * (x - 1 + mu) / r2 ** 3
        ay = y2 - (1 - mu) * y2 / r1 ** 3 - mu * y2 / r2 ** 3
        return [v1, v2, 2 * v2 + ax, -2 * v1 + ay]

    return f


def periapsis(r, th, e, mu):
    v = math.sqrt(mu * (1 + e) / r) - r
    return [1 + r * math.cos(th), r * math.sin(th), -v * math.sin(th), v * math.cos(th)]


def classify(r, th, e, mu, n, t_max=200 * 2 * math.pi, chunk=1.0):
    """Counts upward passages of the unwrapped P2 angle through th + 2 pi k and
    the unwrapped P1 angle change, sampling DOP853 in short chunks."""
    s = periapsis(r, th, e, mu)
    f = rhs(mu)
    coll = lambda t, y: math.hypot(y[0] - 1, y[1]) - 1e-6
    coll.terminal = True
    a1_0 = math.atan2(s[1], s[0])
    a2_0 = math.atan2(s[1], s[0] - 1)
    a1_prev, a2_prev = a1_0, a2_0
    a1_unw, a2_unw = a1_0, a2_0
    count = 0
    t = 0.0
    while t < t_max:
        t1 = min(t + chunk, t_max)
        sol = solve_ivp(f, (t, t1), s, method="DOP853", rtol=1e-12, atol=1e-12, max_step=0.01,
                        events=[coll], dense_output=False)
        ys = sol.y
        for i in range(1, ys.shape[1]):
            b1 = math.atan2(ys[1, i], ys[0, i])
            b2 = math.atan2(ys[1, i], ys[0, i] - 1)
            d1 = (b1 - a1_prev + math.pi) % (2 * math.pi) - math.pi
            d2 = (b2 - a2_prev + math.pi) % (2 * math.pi) - math.pi
            prev2 = a2_unw
            a1_unw += d1
            a2_unw += d2
            a1_prev, a2_prev = b1, b2
            if abs(a1_unw - a1_0) >= 2 * math.pi:
                return "unstable", "p1-cycle", count + 1
            level = a2_0 + 2 * math.pi * (count + 1)
            if prev2 < level <= a2_unw:
                Y1, Y2, V1, V2 = ys[0, i] - 1, ys[1, i], ys[2, i], ys[3, i]
                rr = math.hypot(Y1, Y2)
                e2 = 0.5 * (V1 ** 2 + V2 ** 2) - mu / rr - (V1 * Y2 - V2 * Y1) + 0.5 * rr ** 2
                if e2 >= 0:
                    return "unstable", "e2-nonnegative", count + 1
                count += 1
                if count == n:
                    return "stable", "none", 0
        if sol.status == 1:
            return "unstable", "collision", count + 1
        s = ys[:, -1]
        t = t1
    return "unstable", "other", count + 1


def boundary(lo, hi, th, e, mu, n, tol=1e-9):
    vlo = classify(lo, th, e, mu, n)[0]
    vhi = classify(hi, th, e, mu, n)[0]
    assert vlo != vhi
    while hi - lo > tol:
        m = 0.5 * (lo + hi)
        if classify(m, th, e, mu, n)[0] == vlo:
            lo = m
        else:
            hi = m
    return 0.5 * (lo + hi)


def lyapunov_l1(mu, C_target):
    """Half-period shooting plus secant on x0; returns (x0, v2, T)."""
    f = rhs(mu)

    def cross(s0):
        ev = lambda t, s: s[1]
        ev.terminal, ev.direction = True, 0
        sol = solve_ivp(f, (0, 10), s0, method="DOP853", rtol=1e-13, atol=1e-13, events=ev,
                        first_step=1e-4)
        # skip the start
        ev2 = lambda t, s: s[1]
        ev2.terminal = True
        sol = solve_ivp(f, (1e-3, 10), solve_ivp(f, (0, 1e-3), s0, method="DOP853", rtol=1e-13,
                                                  atol=1e-13).y[:, -1],
                        method="DOP853", rtol=1e-13, atol=1e-13, events=ev2)
        return sol.t_events[0][0], sol.y_events[0][0]

    def correct(x0, v2):
        for _ in range(40):
            t, s = cross([x0, 0, 0, v2])
            h = 1e-7
            _, s2 = cross([x0, 0, 0, v2 + h])
            d = (s2[2] - s[2]) / h
            dv = -s[2] / d
            v2 += dv
            if abs(dv) < 1e-13:
                break
        t, s = cross([x0, 0, 0, v2])
        return v2, 2 * t

    def jac(x, v2):
        y1 = x - mu
        om = (y1 ** 2) / 2 + (1 - mu) / abs(y1 + mu) + mu / abs(y1 - 1 + mu) + mu * (1 - mu) / 2
        return 2 * om - v2 ** 2

    xl1 = collinear(mu)[0][0]
    xs, vs, cs = [], [], []
    v2 = None
    for amp in np.linspace(2e-3, 0.03, 15):
        x0 = xl1 - amp
        guess = vs[-1] if vs else 0.01
        v2, T = correct(x0, guess)
        xs.append(x0)
        vs.append(v2)
        cs.append(jac(x0, v2))
        if cs[-1] < C_target:
            break
    a, b = xs[-2], xs[-1]
    va, vb = vs[-2], vs[-1]
    fa, fb = cs[-2] - C_target, cs[-1] - C_target
    for _ in range(60):
        m = b - fb * (b - a) / (fb - fa)
        vm, T = correct(m, vb)
        fm = jac(m, vm) - C_target
        a, fa, va = b, fb, vb
        b, fb, vb = m, fm, vm
        if abs(fm) < 1e-12:
            break
    return b, vb, T


if __name__ == "__main__":
    print("gradient mu=0.01215 at (0.5,0):", gradient_at(0.01215, (0.5 - 0.01215, 0.0)))
    for mu in (0.01215, 0.00095, 1e-6):
        print("collinear", mu, collinear(mu))
    print("periapsis speed", math.sqrt(0.01215 / 0.05) - 0.05)
    print("classify r=0.005 n=4", classify(0.005, 0.0, 0.0, 0.01215, 4))
    print("W1 boundary theta=0 e=0.4:", repr(boundary(0.0205, 0.0212, 0.0, 0.4, 0.00095, 1)))
    print("W1 boundary theta=pi e=0.4:", repr(boundary(0.0212, 0.0220, math.pi, 0.4, 0.00095, 1)))
    print("L1 Lyapunov mu=0.00095 C=3.037:", lyapunov_l1(0.00095, 3.037))
