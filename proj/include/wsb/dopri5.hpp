// Dormand-Prince 5(4) embedded pair with Hairer's PI step control and
// fourth-order continuous extension.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>

#include "wsb/errors.hpp"

namespace wsb {

template <std::size_t N>
using VecN = std::array<double, N>;

/// Local error tolerances and step bounds for the adaptive pair.
struct StepControl {
    double rel_tol = 1e-12;
    double abs_tol = 1e-12;
    double h_init = 1e-3;
    double h_min = 1e-13;
    double h_max = 0.5;
};

/// Dense-output polynomial for one accepted step, valid on [t0, t0 + h]
/// (h may be negative).
template <std::size_t N>
struct DenseSegment {
    double t0 = 0.0;
    double h = 0.0;
    VecN<N> c0{}, c1{}, c2{}, c3{}, c4{};

    double t1() const { return t0 + h; }

    VecN<N> at(double t) const {
        const double s = (t - t0) / h;
        const double s1 = 1.0 - s;
        VecN<N> y;
        for (std::size_t i = 0; i < N; ++i) {
            y[i] = c0[i] + s * (c1[i] + s1 * (c2[i] + s * (c3[i] + s1 * c4[i])));
        }
        return y;
    }

    double component(double t, std::size_t i) const {
        const double s = (t - t0) / h;
        const double s1 = 1.0 - s;
        return c0[i] + s * (c1[i] + s1 * (c2[i] + s * (c3[i] + s1 * c4[i])));
    }
};

template <std::size_t N>
struct StepAttempt {
    VecN<N> y{};          // fifth-order solution at t + h
    VecN<N> f_end{};      // derivative at t + h (FSAL)
    double error = 0.0;   // scaled RMS error; <= 1 means acceptable
    DenseSegment<N> dense{};
};

namespace dp5 {
inline constexpr double c2 = 0.2, c3 = 0.3, c4 = 0.8, c5 = 8.0 / 9.0;
inline constexpr double a21 = 0.2;
inline constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
inline constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
inline constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                        a54 = -212.0 / 729.0;
inline constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                        a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
inline constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                        a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
inline constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                        e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
inline constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
}  // namespace dp5

// One Dormand-Prince step from (t, y) with derivative f0 = rhs(t, y).
// rhs has signature void(double t, const VecN<N>& y, VecN<N>& dy).
template <std::size_t N, class Rhs>
StepAttempt<N> dopri5_step(Rhs&& rhs, double t, const VecN<N>& y, const VecN<N>& f0, double h,
                           const StepControl& ctl) {
    using namespace dp5;
    VecN<N> k2, k3, k4, k5, k6, k7, tmp;
    const VecN<N>& k1 = f0;
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * a21 * k1[i];
    rhs(t + c2 * h, tmp, k2);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    rhs(t + c3 * h, tmp, k3);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    rhs(t + c4 * h, tmp, k4);
    for (std::size_t i = 0; i < N; ++i)
        tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    rhs(t + c5 * h, tmp, k5);
    for (std::size_t i = 0; i < N; ++i)
        tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    rhs(t + h, tmp, k6);

    StepAttempt<N> out;
    for (std::size_t i = 0; i < N; ++i)
        out.y[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
    rhs(t + h, out.y, k7);
    out.f_end = k7;

    double sum = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        const double err = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        const double sc = ctl.abs_tol + ctl.rel_tol * std::max(std::abs(y[i]), std::abs(out.y[i]));
        sum += (err / sc) * (err / sc);
    }
    out.error = std::sqrt(sum / static_cast<double>(N));

    DenseSegment<N>& d = out.dense;
    d.t0 = t;
    d.h = h;
    for (std::size_t i = 0; i < N; ++i) {
        const double ydiff = out.y[i] - y[i];
        const double bspl = h * k1[i] - ydiff;
        d.c0[i] = y[i];
        d.c1[i] = ydiff;
        d.c2[i] = bspl;
        d.c3[i] = ydiff - h * k7[i] - bspl;
        d.c4[i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
    }
    return out;
}

/// Adaptive driver around dopri5_step. Direction of integration follows the
/// sign passed to the constructor. advance() takes exactly one accepted step
/// and exposes its dense segment.
template <std::size_t N, class Rhs>
class Dopri5 {
public:
    Dopri5(Rhs rhs, double t0, const VecN<N>& y0, const StepControl& ctl, int direction = +1)
        : rhs_(std::move(rhs)), ctl_(ctl), t_(t0), y_(y0), dir_(direction >= 0 ? 1.0 : -1.0) {
        if (!(ctl_.h_min > 0.0 && ctl_.h_min <= ctl_.h_init && ctl_.h_init <= ctl_.h_max)) {
            throw DomainError("step bounds must satisfy 0 < h_min <= h_init <= h_max");
        }
        if (!(ctl_.rel_tol > 0.0 && ctl_.abs_tol > 0.0)) throw DomainError("tolerances must be positive");
        rhs_(t_, y_, f_);
        h_ = ctl_.h_init;
    }

    // Takes one accepted step, never stepping past t_stop (in the direction of
    // integration). The optional veto can reject an otherwise acceptable step
    // (returning true forces a retry with half the step).
    template <class Veto>
    void advance(double t_stop, Veto&& veto) {
        bool last_rejected = false;
        while (true) {
            double h = std::min(h_, ctl_.h_max);
            const double remaining = dir_ * (t_stop - t_);
            bool hits_stop = false;
            if (h >= remaining) {
                h = remaining;
                hits_stop = true;
            }
            if (h <= 0.0) throw DomainError("advance called at or past t_stop");
            StepAttempt<N> att = dopri5_step<N>(rhs_, t_, y_, f_, dir_ * h, ctl_);
            ++n_attempts_;
            const bool ok = std::isfinite(att.error) && att.error <= 1.0;
            if (ok && !veto(att.dense)) {
                const double fac11 = std::pow(std::max(att.error, 1e-300), kExpo1);
                double fac = fac11 / std::pow(facold_, kBeta);
                fac = std::clamp(fac / kSafe, 1.0 / kFacMax, 1.0 / kFacMin);
                double h_new = h / fac;
                if (last_rejected) h_new = std::min(h_new, h);
                facold_ = std::max(att.error, 1e-4);
                t_ = hits_stop ? t_stop : t_ + dir_ * h;
                att.dense.h = t_ - att.dense.t0;
                y_ = att.y;
                f_ = att.f_end;
                last_ = att.dense;
                last_error_ = att.error;
                // Keep the proposed size when the step was clipped by t_stop.
                h_ = hits_stop ? std::max(h_, h) : h_new;
                ++n_accepted_;
                return;
            }
            if (ok) {
                h_ = 0.5 * h;
            } else {
                const double fac11 = std::isfinite(att.error) ? std::pow(att.error, kExpo1) : 10.0;
                h_ = h / std::min(1.0 / kFacMin, fac11 / kSafe);
            }
            last_rejected = true;
            if (h_ < ctl_.h_min) {
                throw StepUnderflowError("step size underflow at t = " + std::to_string(t_));
            }
        }
    }

    void advance(double t_stop) {
        advance(t_stop, [](const DenseSegment<N>&) { return false; });
    }

    double t() const { return t_; }
    const VecN<N>& y() const { return y_; }
    const VecN<N>& dy() const { return f_; }
    double h_next() const { return h_; }
    double direction() const { return dir_; }
    const DenseSegment<N>& last_segment() const { return last_; }
    double last_error() const { return last_error_; }
    long accepted_steps() const { return n_accepted_; }
    long attempted_steps() const { return n_attempts_; }

private:
    static constexpr double kBeta = 0.04;
    static constexpr double kExpo1 = 0.2 - kBeta * 0.75;
    static constexpr double kSafe = 0.9;
    // Step ratio h_new / h stays within [kFacMin, kFacMax].
    static constexpr double kFacMin = 0.2;
    static constexpr double kFacMax = 10.0;

    Rhs rhs_;
    StepControl ctl_;
    double t_;
    VecN<N> y_;
    VecN<N> f_{};
    double dir_;
    double h_ = 0.0;
    double facold_ = 1e-4;
    DenseSegment<N> last_{};
    double last_error_ = 0.0;
    long n_accepted_ = 0;
    long n_attempts_ = 0;
};

// Finds t in the segment where g(t) crosses zero, given g(ta) and g(tb) of
// opposite sign. Illinois variant of regula falsi, stopping when the bracket
// is shorter than tol.
template <class G>
double find_root(G&& g, double ta, double tb, double ga, double gb, double tol) {
    if (ga == 0.0) return ta;
    if (gb == 0.0) return tb;
    int side = 0;
    for (int it = 0; it < 200; ++it) {
        if (std::abs(tb - ta) <= tol) break;
        double tc = (ta * gb - tb * ga) / (gb - ga);
        // Fall back to bisection when the secant point leaves the bracket.
        const double lo = std::min(ta, tb), hi = std::max(ta, tb);
        if (!(tc > lo && tc < hi)) tc = 0.5 * (ta + tb);
        const double gc = g(tc);
        if (gc == 0.0) return tc;
        if ((gc > 0.0) == (gb > 0.0)) {
            tb = tc;
            gb = gc;
            if (side == -1) ga *= 0.5;
            side = -1;
        } else {
            ta = tc;
            ga = gc;
            if (side == +1) gb *= 0.5;
            side = +1;
        }
    }
    return 0.5 * (ta + tb);
}

}  // namespace wsb
