"""Shared numerical kernel: special functions, quadrature, ODE stepping,
root finding, and Lorentzian spectral fitting.

Everything here is a pure function of its inputs; no module state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    BracketError,
    ConvergenceError,
    FitDegenerateError,
    StiffnessError,
)

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Tolerance:
    """Absolute/relative tolerance pair plus an iteration budget."""

    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_iter: int = 60

    def __post_init__(self):
        if not (self.abs_tol > 0.0):
            raise ValueError("abs_tol must be positive")
        if not (self.rel_tol > 0.0):
            raise ValueError("rel_tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


class RealGrid:
    """Strictly increasing, nonempty 1D grid of real sample points."""

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 1 or pts.size == 0:
            raise ValueError("grid must be a nonempty 1D array")
        if pts.size > 1 and not np.all(np.diff(pts) > 0.0):
            raise ValueError("grid must be strictly increasing")
        self.points = pts

    def __len__(self):
        return self.points.size

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i):
        return self.points[i]


def jacobi_dn(u: float, m: float) -> float:
    """Jacobi elliptic dn(u|m) for modulus parameter m in [0,1].

    Descending-Landen arithmetic-geometric-mean recursion (Abramowitz &
    Stegun 16.4): the AGM phases give sn(u|m), then dn follows from the
    identity dn^2 = 1 - m*sn^2 (dn > 0 throughout for m < 1). Convergence
    is quadratic; the recursion depth is capped at 32.
    """
    if not (0.0 <= m <= 1.0):
        raise ValueError(f"modulus parameter m={m} outside [0,1]")
    if m == 0.0:
        return 1.0
    if m == 1.0:
        return 1.0 / math.cosh(u)
    if u == 0.0:
        return 1.0

    a = [1.0]
    c = [math.sqrt(m)]
    b = math.sqrt(1.0 - m)
    n = 0
    while abs(c[n]) > _EPS * abs(a[n]):
        if n >= 32:
            raise ConvergenceError("AGM recursion failed to converge in 32 steps")
        a.append(0.5 * (a[n] + b))
        c.append(0.5 * (a[n] - b))
        b = math.sqrt(a[n] * b)
        n += 1

    # backward phase recursion: phi_{k-1} = (phi_k + asin(c_k/a_k sin phi_k))/2
    phi = (2.0 ** n) * a[n] * u
    for k in range(n, 0, -1):
        arg = (c[k] / a[k]) * math.sin(phi)
        phi = 0.5 * (phi + math.asin(max(-1.0, min(1.0, arg))))
    sn = math.sin(phi)
    return math.sqrt(max(1.0 - m * sn * sn, 0.0))


def _lower_gamma_series(s: float, x: float, tol: float = 1e-16, max_iter: int = 500) -> float:
    """Series for the lower incomplete gamma, NR 6.2: valid for x < s+1."""
    ap = s
    term = 1.0 / s
    total = term
    for _ in range(max_iter):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * tol:
            return total * math.exp(-x + s * math.log(x))
    raise ConvergenceError("incomplete-gamma series did not converge")


def _upper_gamma_cf(s: float, x: float, tol: float = 1e-16, max_iter: int = 500) -> float:
    """Modified-Lentz continued fraction for Gamma(s,x), valid for x > s+1."""
    tiny = 1e-300
    b = x + 1.0 - s
    c = 1.0 / tiny
    d = 1.0 / b
    f = d
    for i in range(1, max_iter + 1):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        f *= delta
        if abs(delta - 1.0) < tol:
            return f * math.exp(-x + s * math.log(x))
    raise ConvergenceError("incomplete-gamma continued fraction did not converge")


def upper_incomplete_gamma(s: float, x: float) -> float:
    """Upper incomplete gamma function Gamma(s, x) for s > 0, x >= 0.

    Series branch below x = s+1, continued fraction above (the standard
    stability boundary between the two representations).
    """
    if not (s > 0.0):
        raise ValueError(f"s={s} must be positive")
    if x < 0.0:
        raise ValueError(f"x={x} must be nonnegative")
    if x == 0.0:
        return math.gamma(s)
    if x < s + 1.0:
        return math.gamma(s) - _lower_gamma_series(s, x)
    return _upper_gamma_cf(s, x)


def integrate_adaptive(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: Tolerance = Tolerance(),
) -> float:
    """Adaptive Simpson quadrature of f over [a, b].

    Subdivision stops once the Richardson error estimate satisfies
    err <= max(abs_tol, rel_tol*|result|); exhausting the depth budget
    (tol.max_iter) raises ConvergenceError carrying the best estimate.
    """
    if not (a < b):
        raise ValueError("integration requires a < b")

    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    depth_cap = min(tol.max_iter, 48)
    failed = False

    def recurse(lo, hi, flo, fmid, fhi, s_whole, eps, depth):
        nonlocal failed
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        s_left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid)
        s_right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi)
        err = (s_left + s_right - s_whole) / 15.0
        if abs(err) <= eps or depth >= depth_cap:
            if depth >= depth_cap and abs(err) > eps:
                failed = True
            return s_left + s_right + err
        return (recurse(lo, mid, flo, flm, fmid, s_left, eps / 2.0, depth + 1)
                + recurse(mid, hi, fmid, frm, fhi, s_right, eps / 2.0, depth + 1))

    eps0 = max(tol.abs_tol, tol.rel_tol * abs(whole))
    result = recurse(a, b, fa, fm, fb, whole, eps0, 0)
    # refine once if the converged magnitude sharpened the relative target
    eps1 = max(tol.abs_tol, tol.rel_tol * abs(result))
    if eps1 < eps0 / 4.0:
        failed = False
        result = recurse(a, b, fa, fm, fb, whole, eps1, 0)
    if failed:
        raise ConvergenceError(
            f"adaptive Simpson hit the depth cap ({depth_cap}) before converging",
            best_estimate=result,
        )
    return result


# Dormand-Prince 5(4) tableau
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_DP_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
          187 / 2100, 1 / 40)


def evolve_ode(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0: Sequence[complex],
    t_grid,
    tol: Tolerance = Tolerance(abs_tol=1e-10, rel_tol=1e-8),
) -> list[np.ndarray]:
    """Integrate dy/dt = rhs(t, y) with the Dormand-Prince embedded RK 4(5) pair.

    Returns the solution sampled exactly at the points of ``t_grid`` (whose
    first point is the initial time). Step-size underflow raises
    StiffnessError.
    """
    grid = t_grid.points if isinstance(t_grid, RealGrid) else RealGrid(t_grid).points
    y = np.asarray(y0, dtype=complex).copy()
    out = [y.copy()]
    t = float(grid[0])
    span = float(grid[-1] - grid[0])
    if span == 0.0:
        return out

    h = span / 100.0
    k1 = np.asarray(rhs(t, y), dtype=complex)
    for target in grid[1:]:
        while t < target:
            clamped = h >= target - t
            h_step = target - t if clamped else h
            if h_step < 1e-14 * max(abs(t), span):
                raise StiffnessError(f"step size underflow at t={t}")
            ks = [k1]
            for i in range(1, 7):
                yi = y + h_step * sum(aij * kj for aij, kj in zip(_DP_A[i], ks))
                ks.append(np.asarray(rhs(t + _DP_C[i] * h_step, yi), dtype=complex))
            y5 = y + h_step * sum(b * k for b, k in zip(_DP_B5, ks) if b)
            y4 = y + h_step * sum(b * k for b, k in zip(_DP_B4, ks) if b)
            scale = tol.abs_tol + tol.rel_tol * np.maximum(np.abs(y), np.abs(y5))
            err = float(np.max(np.abs(y5 - y4) / scale)) if y.size else 0.0
            if err <= 1.0:
                t = target if clamped else t + h_step
                y = y5
                k1 = ks[6]  # first-same-as-last
                grow = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
                h = h_step * grow
            else:
                h = h_step * max(0.1, 0.9 * err ** -0.25)
        out.append(y.copy())
    return out


def solve_cubic_real(c2: float, c1: float, c0: float) -> list[float]:
    """All distinct real roots of E^3 + c2 E^2 + c1 E + c0 = 0, ascending.

    Closed-form (trigonometric/Cardano) seeds, Newton-polished against the
    original cubic; near-equal roots are merged (multiplicity-aware).
    """
    for c in (c2, c1, c0):
        if not math.isfinite(c):
            raise ValueError("cubic coefficients must be finite")

    orig = (c2, c1, c0)
    # rescale E = lam*X so the working coefficients are O(1); keeps the
    # discriminant arithmetic conditioned across coefficient magnitudes
    lam = max(abs(c2), abs(c1) ** 0.5, abs(c0) ** (1.0 / 3.0))
    if lam == 0.0:
        return [0.0]
    c2 = c2 / lam
    c1 = (c1 / lam) / lam
    c0 = ((c0 / lam) / lam) / lam

    # depressed cubic t^3 + p t + q with E = t - c2/3
    p = c1 - c2 * c2 / 3.0
    q = 2.0 * c2 ** 3 / 27.0 - c2 * c1 / 3.0 + c0
    disc = -4.0 * p ** 3 - 27.0 * q ** 2
    shift = c2 / 3.0
    scale6 = max(abs(p), abs(q) ** (2.0 / 3.0), 1e-300) ** 3

    if p == 0.0 and q == 0.0:
        roots = [-shift]
    elif disc > 1e-12 * scale6:
        r = 2.0 * math.sqrt(-p / 3.0)
        arg = max(-1.0, min(1.0, 3.0 * q / (p * r)))
        theta = math.acos(arg)
        roots = [r * math.cos((theta - 2.0 * math.pi * k) / 3.0) - shift for k in range(3)]
    elif disc < -1e-12 * scale6:
        half_q = q / 2.0
        rad = math.sqrt(half_q * half_q + (p / 3.0) ** 3)
        u1 = -half_q + rad
        u2 = -half_q - rad
        roots = [math.copysign(abs(u1) ** (1.0 / 3.0), u1)
                 + math.copysign(abs(u2) ** (1.0 / 3.0), u2) - shift]
    else:
        # borderline discriminant: double-root structure
        if p != 0.0:
            roots = [3.0 * q / p - shift, -3.0 * q / (2.0 * p) - shift]
        else:
            roots = [-shift]

    # polish against the original (unscaled) cubic so exactly representable
    # roots stay exact
    oc2, oc1, oc0 = orig

    def poly(x):
        return ((x + oc2) * x + oc1) * x + oc0

    def dpoly(x):
        return (3.0 * x + 2.0 * oc2) * x + oc1

    polished = []
    for x in roots:
        x *= lam
        for _ in range(14):
            fx, dfx = poly(x), dpoly(x)
            if dfx == 0.0 or not math.isfinite(fx):
                break
            step = fx / dfx
            if not math.isfinite(step):
                break
            x_new = x - step
            if abs(poly(x_new)) > abs(fx):
                break  # Newton step made the residual worse: stop at x
            x = x_new
            if abs(step) <= 1e-15 * max(1.0, abs(x)):
                break
        polished.append(x)

    polished.sort()
    out: list[float] = []
    root_scale = max(1.0, max(abs(x) for x in polished))
    for x in polished:
        if not out or abs(x - out[-1]) > 1e-8 * root_scale:
            out.append(x)
    return out


def find_root_bracketed(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: Tolerance = Tolerance(abs_tol=1e-14, rel_tol=1e-14, max_iter=120),
) -> float:
    """Brent's method on a sign-changing bracket [lo, hi]."""
    a, b = float(lo), float(hi)
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0.0:
        raise BracketError(f"f({a})={fa} and f({b})={fb} do not bracket a root")

    c, fc = a, fa
    d = e = b - a
    for _ in range(tol.max_iter):
        if fb * fc > 0.0:
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        tol1 = 2.0 * _EPS * abs(b) + 0.5 * max(tol.abs_tol, tol.rel_tol * abs(b))
        xm = 0.5 * (c - b)
        if abs(xm) <= tol1 or fb == 0.0:
            return b
        if abs(e) >= tol1 and abs(fa) > abs(fb):
            s = fb / fa
            if a == c:
                p_, q_ = 2.0 * xm * s, 1.0 - s
            else:
                q_, r_ = fa / fc, fb / fc
                p_ = s * (2.0 * xm * q_ * (q_ - r_) - (b - a) * (r_ - 1.0))
                q_ = (q_ - 1.0) * (r_ - 1.0) * (s - 1.0)
            if p_ > 0.0:
                q_ = -q_
            p_ = abs(p_)
            if 2.0 * p_ < min(3.0 * xm * q_ - abs(tol1 * q_), abs(e * q_)):
                e, d = d, p_ / q_
            else:
                d = e = xm
        else:
            d = e = xm
        a, fa = b, fb
        b += d if abs(d) > tol1 else math.copysign(tol1, xm)
        fb = f(b)
    raise ConvergenceError("Brent iteration budget exhausted", best_estimate=b)


def fit_lorentzian(omega, spectrum):
    """Least-squares Lorentzian fit S(w) ~ A*2g / ((w - w0)^2 + g^2).

    Returns (center w0, half-width g, amplitude A, residual), with residual
    the normalized RMS misfit ||S - fit|| / ||S||; downstream code uses it
    as the validity gate on the Lorentzian spectral approximation.

    Seeded from the peak sample and an FWHM scan, then refined with
    Levenberg-style damped Gauss-Newton steps (robust on noisy wings).
    """
    w = np.asarray(omega, dtype=float)
    s = np.asarray(spectrum, dtype=float)
    if w.size != s.size or w.size < 5:
        raise ValueError("need >= 5 (omega, S) samples spanning the peak")
    if np.any(s < 0.0):
        raise ValueError("spectrum samples must be positive")

    smax, smin = float(s.max()), float(s.min())
    if smax - smin <= 1e-12 * max(abs(smax), 1e-300):
        raise FitDegenerateError("spectrum has no peak: fit is degenerate")

    ipk = int(np.argmax(s))
    w0 = w[ipk]
    idx = np.where(s >= 0.5 * smax)[0]
    if idx.size >= 2 and w[idx[-1]] > w[idx[0]]:
        gamma = 0.5 * (w[idx[-1]] - w[idx[0]])
    else:
        gamma = 0.25 * (w[-1] - w[0])
    gamma = max(gamma, float(np.min(np.diff(w))))
    amp = smax * gamma / 2.0

    theta = np.array([w0, gamma, amp])
    lam = 1e-3
    prev_cost = None
    for _ in range(200):
        c, g, A = theta
        denom = (w - c) ** 2 + g ** 2
        model = 2.0 * A * g / denom
        r = s - model
        cost = float(r @ r)
        d_c = 4.0 * A * g * (w - c) / denom ** 2
        d_g = 2.0 * A * (denom - 2.0 * g ** 2) / denom ** 2
        d_A = 2.0 * g / denom
        J = np.column_stack([d_c, d_g, d_A])
        JTJ = J.T @ J
        diag = np.diag(JTJ).copy()
        if np.any(diag <= 0.0) or not np.all(np.isfinite(JTJ)):
            raise FitDegenerateError("singular normal equations in Lorentzian fit")
        try:
            step = np.linalg.solve(JTJ + lam * np.diag(diag), J.T @ r)
        except np.linalg.LinAlgError as exc:
            raise FitDegenerateError("singular normal equations in Lorentzian fit") from exc
        trial = theta + step
        trial[1] = abs(trial[1])
        c2, g2, A2 = trial
        model2 = 2.0 * A2 * g2 / ((w - c2) ** 2 + g2 ** 2)
        cost2 = float(np.sum((s - model2) ** 2))
        if cost2 <= cost:
            theta = trial
            lam = max(lam / 3.0, 1e-12)
            if prev_cost is not None and abs(prev_cost - cost2) <= 1e-14 * max(cost2, 1e-300):
                break
            prev_cost = cost2
        else:
            lam *= 4.0
            if lam > 1e10:
                break

    c, g, A = (float(v) for v in theta)
    if not (np.isfinite(theta).all() and g > 0.0):
        raise FitDegenerateError("Lorentzian fit diverged")
    model = 2.0 * A * g / ((w - c) ** 2 + g ** 2)
    residual = float(np.linalg.norm(s - model) / np.linalg.norm(s))
    return c, g, A, residual
