"""Frequency-domain engine for the SQUID-embedded nonlinear cavity
displacement detector: coupling constants, driven mean-field response with
bistability, signal/noise/quantum-limit spectra, and effective back-action
thermometry for cooling curves.

Conventions: omega_p = omega_T + delta_omega is the pump frequency,
gamma_pT = omega_T/(2 Q_T) and gamma_bm = omega_m/(2 Q_m) are amplitude
damping rates, and the pump phase phi_pT is set to zero (all reported
quantities are phase-insensitive).
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .constants import Phi0, e_charge, hbar
from .errors import (
    InstabilityError,
    NoBistabilityError,
    NonLorentzianError,
    OutsideRegionError,
    SingularFluxError,
)
from .numerics import (
    Tolerance,
    find_root_bracketed,
    fit_lorentzian,
    integrate_adaptive,
    solve_cubic_real,
)
from .qinfo import bose_occupation


@dataclass(frozen=True)
class GeometricBlock:
    """Geometric inputs needed to compute the couplings from first
    principles: lambda correction factor, oscillator length (m), and the
    total line inductance/capacitance products L_T*l (H), C_T*l (F)."""

    lambda_geo: float
    l_osc: float
    LT_l: float
    CT_l: float


@dataclass(frozen=True)
class DetectorParams:
    """Circuit constants of the detector.

    phi_ext is in units of the flux quantum. K_d/K_Tm may be given directly
    (direct mode, takes precedence) or computed from ``geometry``.
    loop_inductance (H) feeds the beta_L validity gate when provided.
    """

    Z_p: float
    omega_T: float
    Q_T: float
    omega_m: float
    Q_m: float
    mass: float
    I_c: float
    C_J: float
    phi_ext: float
    B_ext: float
    K_d: Optional[float] = None
    K_Tm: Optional[float] = None
    geometry: Optional[GeometricBlock] = None
    loop_inductance: Optional[float] = None

    def __post_init__(self):
        for name in ("Z_p", "omega_T", "Q_T", "omega_m", "Q_m", "mass", "I_c", "C_J"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")

    @property
    def gamma_pT(self) -> float:
        return self.omega_T / (2.0 * self.Q_T)

    @property
    def gamma_bm(self) -> float:
        return self.omega_m / (2.0 * self.Q_m)

    def secant(self) -> float:
        cosv = math.cos(math.pi * self.phi_ext)
        if abs(cosv) < 1e-9:
            raise SingularFluxError(
                f"phi_ext={self.phi_ext} Phi0 is at the half-flux-quantum singularity")
        return 1.0 / cosv

    def validity_gates(self, drive_current: float) -> dict:
        """Expansion-validity gate values; both must be << 1."""
        sec = self.secant()
        gates = {"current_gate": abs(drive_current / self.I_c * sec)}
        if self.loop_inductance is not None:
            beta_L = 2.0 * math.pi * self.loop_inductance * self.I_c / Phi0
            gates["beta_L_gate"] = abs(beta_L * sec)
        return gates


@dataclass(frozen=True)
class DrivePoint:
    """Drive current amplitude (A) and pump detuning omega_p - omega_T (rad/s)."""

    I_0: float
    delta_omega: float

    def __post_init__(self):
        if self.I_0 < 0.0:
            raise ValueError("drive amplitude must be nonnegative")


@dataclass(frozen=True)
class MeanFieldSolution:
    chi: complex
    E: float
    branch: str            # small | unstable | large
    residual: float


@dataclass(frozen=True)
class EffectiveThermo:
    """Lorentzian-parametrized detector response around the sidebands."""

    R_omega: float
    R_gamma: float
    G_plus: float
    G_minus: float
    n_back_plus: float
    n_back_minus: float
    n_net: float
    lorentzian_residual: float
    weak_coupling: bool = False

    @property
    def gamma_back_over_gamma_bm(self):
        return self.R_gamma - 1.0


def zero_point(params: DetectorParams) -> float:
    """Zero-point displacement sqrt(hbar/(2 m omega_m)) in meters."""
    return math.sqrt(hbar / (2.0 * params.mass * params.omega_m))


def inductance_coeffs(params: DetectorParams):
    """SQUID effective-inductance expansion coefficients (L00, L20, L01)."""
    sec = params.secant()
    tan = math.tan(math.pi * params.phi_ext)
    L00 = Phi0 * sec / (4.0 * math.pi * params.I_c)
    L20 = Phi0 * sec ** 3 / (96.0 * math.pi * params.I_c)
    lam = params.geometry.lambda_geo if params.geometry else 1.0
    losc = params.geometry.l_osc if params.geometry else 1.0
    L01 = lam * params.B_ext * losc * sec * tan / (4.0 * params.I_c)
    return L00, L20, L01


def mode_wavenumber(params: DetectorParams) -> float:
    """Root x = k0*l of the transcendental mode condition
    (x/2) tan(x/2) = 1/zeta with zeta = L00/(L_T l)."""
    if params.geometry is None:
        raise ValueError("geometric block required")
    L00, _, _ = inductance_coeffs(params)
    zeta = L00 / params.geometry.LT_l
    target = 1.0 / zeta

    def f(x):
        return 0.5 * x * math.tan(0.5 * x) - target

    eps = 1e-9
    if zeta > 0.0:
        return find_root_bracketed(f, eps, math.pi - eps)
    return find_root_bracketed(f, math.pi + eps, 2.0 * math.pi - eps)


def coupling_constants(params: DetectorParams):
    """(K_Tm, K_d); direct-mode values pass through unchanged, otherwise
    both are computed from the geometric block."""
    if params.K_Tm is not None and params.K_d is not None:
        return params.K_Tm, params.K_d
    if params.geometry is None:
        raise ValueError("need either direct (K_Tm, K_d) or a geometric block")
    geo = params.geometry
    sec = params.secant()
    tan = math.tan(math.pi * params.phi_ext)
    dzp = zero_point(params)
    x = mode_wavenumber(params)
    L00, _, _ = inductance_coeffs(params)
    zeta = L00 / geo.LT_l
    K_Tm = (geo.lambda_geo * params.B_ext * geo.l_osc * dzp
            / (Phi0 / math.pi)
            * Phi0 / (4.0 * math.pi * geo.LT_l * params.I_c) * tan * sec)
    K_d = -(x ** 2) * zeta ** 3 * ((2.0 * e_charge) ** 2 / (2.0 * geo.CT_l)) \
        / (hbar * params.omega_T)
    if params.K_Tm is not None:
        K_Tm = params.K_Tm
    if params.K_d is not None:
        K_d = params.K_d
    return K_Tm, K_d


def effective_duffing(params: DetectorParams) -> float:
    """K_eff = K_d - 2 w_T w_m K_Tm^2/(w_m^2 + gamma_bm^2): the Duffing
    constant plus the always-softening mechanically-induced term."""
    K_Tm, K_d = coupling_constants(params)
    gbm = params.gamma_bm
    return K_d - 2.0 * params.omega_T * params.omega_m * K_Tm ** 2 \
        / (params.omega_m ** 2 + gbm ** 2)


def _drive_source(params: DetectorParams, drive: DrivePoint) -> float:
    """RHS magnitude sqrt(2 pi I0^2 Z_p gamma_pT / (hbar omega_p))."""
    omega_p = params.omega_T + drive.delta_omega
    return math.sqrt(2.0 * math.pi * drive.I_0 ** 2 * params.Z_p
                     * params.gamma_pT / (hbar * omega_p))


def linear_amplitude(params: DetectorParams, drive: DrivePoint) -> complex:
    """Small-drive amplitude c = i sqrt(2 pi) sqrt(I0^2 Zp gpt/(h wp))
    / (gamma_pT - i d_omega)."""
    omega_p = params.omega_T + drive.delta_omega
    return (1j * math.sqrt(2.0 * math.pi)
            / (params.gamma_pT - 1j * drive.delta_omega)
            * math.sqrt(drive.I_0 ** 2 * params.Z_p * params.gamma_pT
                        / (hbar * omega_p)))


def mean_field(params: DetectorParams, drive: DrivePoint,
               frequency_pulling: bool = True) -> list[MeanFieldSolution]:
    """Steady drive response: solutions chi of
    (w_T - w_p - i g_pT) chi + (w_T/2pi) K chi|chi|^2 = source.

    Solves the cubic in E = |chi|^2/(2 pi); nonnegative roots are kept and
    labeled small/unstable/large by amplitude (the intermediate root is the
    unstable one). ``frequency_pulling=False`` drops the cubic term
    entirely (linear cavity response).
    """
    gpt = params.gamma_pT
    dw = drive.delta_omega
    src = _drive_source(params, drive)
    K = effective_duffing(params)

    def residual_of(chi):
        lhs = (-dw - 1j * gpt) * chi
        if frequency_pulling:
            lhs += (params.omega_T / (2.0 * math.pi)) * K * chi * abs(chi) ** 2
        return abs(lhs - src) / max(abs(src), 1e-300)

    if drive.I_0 == 0.0:
        return [MeanFieldSolution(chi=0j, E=0.0, branch="small", residual=0.0)]

    if not frequency_pulling or K == 0.0:
        chi = src / (-dw - 1j * gpt)
        return [MeanFieldSolution(chi=chi, E=abs(chi) ** 2 / (2.0 * math.pi),
                                  branch="small", residual=residual_of(chi))]

    wk = params.omega_T * K
    b_in_sq = drive.I_0 ** 2 * params.Z_p / (2.0 * hbar * (params.omega_T + dw))
    c2 = -2.0 * dw / wk
    c1 = (dw ** 2 + gpt ** 2) / wk ** 2
    c0 = -2.0 * gpt * b_in_sq / wk ** 2
    roots = [E for E in solve_cubic_real(c2, c1, c0) if E > 0.0]
    if not roots:
        raise RuntimeError("mean-field cubic produced no physical (E > 0) root")

    labels = {1: ("small",), 2: ("small", "large"),
              3: ("small", "unstable", "large")}[len(roots)]
    sols = []
    for E, branch in zip(roots, labels):
        M = math.sqrt(E)
        # phase from the amplitude-phase form of the mean-field equation
        phase = cmath.phase(complex(-dw + wk * E, -gpt) * M
                            / (math.sqrt(2.0 * gpt * b_in_sq)))
        chi = math.sqrt(2.0 * math.pi) * M * cmath.exp(-1j * phase)
        sols.append(MeanFieldSolution(chi=chi, E=E, branch=branch,
                                      residual=residual_of(chi)))
    return sols


def select_branch(solutions, policy: str = "small") -> MeanFieldSolution:
    stable = [s for s in solutions if s.branch != "unstable"]
    if policy == "small":
        return min(stable, key=lambda s: s.E)
    if policy == "large":
        return max(stable, key=lambda s: s.E)
    raise ValueError(f"unknown branch policy {policy!r}")


def bistability_onset(params: DetectorParams):
    """(E_bi, delta_omega_bi, I_bi): onset amplitude-squared, detuning, and
    critical drive current."""
    K = effective_duffing(params)
    if K == 0.0:
        raise NoBistabilityError("effective Duffing constant is zero")
    gpt = params.gamma_pT
    E_bi = 2.0 * gpt / (math.sqrt(3.0) * params.omega_T * abs(K))
    dw_bi = math.sqrt(3.0) * gpt * math.copysign(1.0, K)
    omega_p = params.omega_T + dw_bi
    I_bi = 2.0 * gpt * math.sqrt(2.0 * hbar * omega_p
                                 / (3.0 * math.sqrt(3.0) * params.omega_T
                                    * abs(K) * params.Z_p))
    return E_bi, dw_bi, I_bi


def bistability_boundary(params: DetectorParams, delta_omega_ratio: float):
    """(I_lower/I_bi, I_upper/I_bi) at detuning ratio r = d_omega/d_omega_bi >= 1."""
    r = delta_omega_ratio
    if r < 1.0:
        raise OutsideRegionError(f"detuning ratio {r} < 1: outside the bistable region")
    base = 1.0 + 3.0 / r ** 2
    wing = (1.0 - 1.0 / r ** 2) ** 1.5
    lower = 0.5 * r ** 1.5 * math.sqrt(base - wing)
    upper = 0.5 * r ** 1.5 * math.sqrt(base + wing)
    return lower, upper


# ---------------------------------------------------------------------------
# response coefficients (appendix closed forms)
# ---------------------------------------------------------------------------

def _b_func(omega, omega_prime, params, K_Tm):
    gpt, gbm, wm = params.gamma_pT, params.gamma_bm, params.omega_m
    return ((params.omega_T * K_Tm) ** 2 / (4.0 * math.pi)
            / (omega - params.omega_T + 1j * gpt)
            * (1.0 / (omega_prime - wm + 1j * gbm)
               + 1.0 / (-omega_prime - wm - 1j * gbm)))


def _d_func(omega, params, K_d):
    return (params.omega_T * K_d / (2.0 * math.pi)
            / (omega - params.omega_T + 1j * params.gamma_pT))


def response_coeffs(params: DetectorParams, drive: DrivePoint, chi: complex, omega):
    """(alpha1, alpha2, beta1, beta2, determinant) at frequency omega.

    Accepts scalar or array omega. Warns when the determinant is within
    1e-14 of singular (bifurcation proximity).
    """
    K_Tm, K_d = coupling_constants(params)
    omega = np.asarray(omega, dtype=float)
    dw = drive.delta_omega
    wp = params.omega_T + dw
    chi2 = abs(chi) ** 2

    mirror = omega - 2.0 * dw
    b_w_0 = _b_func(omega, np.zeros_like(omega), params, K_Tm)
    b_w_s = _b_func(omega, omega - wp, params, K_Tm)
    b_m_0 = _b_func(mirror, np.zeros_like(omega), params, K_Tm)
    b_m_s = _b_func(mirror, omega - wp, params, K_Tm)
    d_w = _d_func(omega, params, K_d)
    d_m = _d_func(mirror, params, K_d)

    upper = 1.0 - 2.0 * chi2 * (b_w_0 + b_w_s + d_w)
    lower = 1.0 + 2.0 * chi2 * (b_m_0 + b_m_s + d_m)
    cross_w = 2.0 * b_w_s + d_w
    cross_m = 2.0 * b_m_s + d_m
    det = upper * lower + chi2 ** 2 * cross_w * cross_m

    scale = 1.0 + np.abs(upper) + np.abs(lower)
    if np.any(np.abs(det) < 1e-14 * scale):
        warnings.warn("response determinant nearly singular (bifurcation proximity)",
                      RuntimeWarning, stacklevel=2)

    alpha1 = lower / det * chi
    alpha2 = -cross_w / det * chi2 * chi
    beta1 = lower / det
    beta2 = cross_w / det * chi ** 2
    return alpha1, alpha2, beta1, beta2, det


def _alpha_combo_sq(params, drive, chi, omega):
    """|alpha1/c + alpha2/c * mirror-ratio|^2 appearing in the signal kernel."""
    c = linear_amplitude(params, drive)
    a1, a2, _, _, _ = response_coeffs(params, drive, chi, omega)
    dw = drive.delta_omega
    wp = params.omega_T + dw
    gpt = params.gamma_pT
    ratio = (omega - wp + dw + 1j * gpt) / (omega - wp - dw + 1j * gpt)
    return np.abs(a1 / c + a2 / c * ratio) ** 2


def signal_density(params: DetectorParams, drive: DrivePoint, chi: complex,
                   omega, bath_T: float = 0.0):
    """Thermal/zero-point signal response density (A^2 per rad/s, includes
    the 1/2pi measure)."""
    K_Tm, _ = coupling_constants(params)
    gpt, gbm, wm = params.gamma_pT, params.gamma_bm, params.omega_m
    dw = drive.delta_omega
    wp = params.omega_T + dw
    omega = np.asarray(omega, dtype=float)

    pre = (drive.I_0 * K_Tm * params.omega_T / gpt) ** 2 \
        * gpt ** 2 / (gpt ** 2 + dw ** 2)
    cavity = (omega / wp) * gpt ** 2 / ((omega - wp + dw) ** 2 + gpt ** 2)
    combo = _alpha_combo_sq(params, drive, chi, omega)

    def occup(x):
        vals = np.array([2.0 * bose_occupation(abs(v), bath_T) + 1.0
                         for v in np.atleast_1d(x)])
        return vals.reshape(np.shape(x))

    lor_plus = 2.0 * gbm / ((omega - wp - wm) ** 2 + gbm ** 2) * occup(omega - wp)
    lor_minus = 2.0 * gbm / ((wp - omega - wm) ** 2 + gbm ** 2) * occup(wp - omega)
    return pre * cavity * combo * (lor_plus + lor_minus) / (2.0 * math.pi)


def noise_density(params: DetectorParams, drive: DrivePoint, chi: complex, omega):
    """Back-reaction noise density (A^2 per rad/s, 1/2pi included); the flat
    added-noise term is accounted for separately."""
    gpt = params.gamma_pT
    dw = drive.delta_omega
    wp = params.omega_T + dw
    omega = np.asarray(omega, dtype=float)
    _, _, b1, b2, _ = response_coeffs(params, drive, chi, omega)
    x = omega - wp + dw
    mirror_ratio = (x ** 2 + gpt ** 2) / ((omega - wp - dw) ** 2 + gpt ** 2)
    bracket = (np.abs(b1) ** 2 + mirror_ratio * np.abs(b2) ** 2
               - np.real(b1) + x / gpt * np.imag(b1))
    return (hbar * omega / params.Z_p) * 2.0 * gpt ** 2 / (x ** 2 + gpt ** 2) \
        * bracket / (2.0 * math.pi)


def added_noise(params: DetectorParams, omega_s: float, delta_band: float) -> float:
    """Probe-line zero-point noise added at the output (A^2 in the band)."""
    return hbar * omega_s * delta_band / (4.0 * math.pi * params.Z_p)


def signal_spectrum(params: DetectorParams, drive: DrivePoint, omega_s: float,
                    delta_band: float, bath_T: float = 0.0,
                    branch: str = "small") -> float:
    """Band-integrated signal variance (A^2) around omega_s."""
    if bath_T < 0.0:
        raise ValueError("bath temperature must be nonnegative")
    chi = select_branch(mean_field(params, drive), branch).chi

    def f(w):
        return float(signal_density(params, drive, chi, w, bath_T))

    return integrate_adaptive(f, omega_s - delta_band / 2.0, omega_s + delta_band / 2.0,
                              Tolerance(abs_tol=1e-300, rel_tol=1e-8, max_iter=40))


def noise_spectrum(params: DetectorParams, drive: DrivePoint, omega_s: float,
                   delta_band: float, branch: str = "small") -> float:
    """Band-integrated noise variance (A^2) including the added zero-point term."""
    chi = select_branch(mean_field(params, drive), branch).chi

    def f(w):
        return float(noise_density(params, drive, chi, w))

    integral = integrate_adaptive(f, omega_s - delta_band / 2.0,
                                  omega_s + delta_band / 2.0,
                                  Tolerance(abs_tol=1e-300, rel_tol=1e-8, max_iter=40))
    return integral + added_noise(params, omega_s, delta_band)


def caves_bound(params: DetectorParams, drive: DrivePoint, omega_s: float,
                delta_band: float, branch: str = "small") -> float:
    """Heisenberg minimum-noise bound (A^2) for the same band."""
    K_Tm, _ = coupling_constants(params)
    gpt, gbm, wm = params.gamma_pT, params.gamma_bm, params.omega_m
    dw = drive.delta_omega
    wp = params.omega_T + dw
    chi = select_branch(mean_field(params, drive), branch).chi
    pre = (drive.I_0 * K_Tm * params.omega_T / gpt) ** 2 \
        * gpt ** 2 / (gpt ** 2 + dw ** 2)

    def f(w):
        cavity = (w / wp) * gpt ** 2 / ((w - wp + dw) ** 2 + gpt ** 2)
        combo = float(_alpha_combo_sq(params, drive, chi, w))
        diff = (2.0 * gbm / ((w - wp - wm) ** 2 + gbm ** 2)
                - 2.0 * gbm / ((wp - w - wm) ** 2 + gbm ** 2))
        return cavity * combo * diff / (2.0 * math.pi)

    integral = integrate_adaptive(f, omega_s - delta_band / 2.0,
                                  omega_s + delta_band / 2.0,
                                  Tolerance(abs_tol=1e-300, rel_tol=1e-8, max_iter=40))
    return abs(added_noise(params, omega_s, delta_band) - pre * integral)


# ---------------------------------------------------------------------------
# effective thermal parametrization
# ---------------------------------------------------------------------------

def _determinant_zero(params, drive, chi, sideband: int):
    """Complex zero of the response determinant near omega_p + sideband*omega_m:
    the renormalized mechanical pole. Stability requires Im(zero) < 0."""
    gbm, wm = params.gamma_bm, params.omega_m
    wp = params.omega_T + drive.delta_omega
    pole = wp + sideband * wm - 1j * gbm

    def g(w):
        # bare mechanical pole cleared so the secant iteration sees only the zero
        return _det_complex(params, drive, chi, w) * (w - pole)

    z = wp + sideband * wm - 0.5j * gbm
    step = 0.25 * gbm
    gz = g(z)
    z2 = z + step
    for _ in range(200):
        gz2 = g(z2)
        if gz2 == gz:
            break
        z_next = z2 - gz2 * (z2 - z) / (gz2 - gz)
        z, gz = z2, gz2
        z2 = z_next
        if abs(z2 - z) < 1e-10 * gbm:
            break
    return z2


def _det_complex(params, drive, chi, omega):
    """Determinant at (possibly complex) omega, scalar version."""
    K_Tm, K_d = coupling_constants(params)
    dw = drive.delta_omega
    wp = params.omega_T + dw
    chi2 = abs(chi) ** 2

    def b(w, wprime):
        return ((params.omega_T * K_Tm) ** 2 / (4.0 * math.pi)
                / (w - params.omega_T + 1j * params.gamma_pT)
                * (1.0 / (wprime - params.omega_m + 1j * params.gamma_bm)
                   + 1.0 / (-wprime - params.omega_m - 1j * params.gamma_bm)))

    def d(w):
        return (params.omega_T * K_d / (2.0 * math.pi)
                / (w - params.omega_T + 1j * params.gamma_pT))

    mirror = omega - 2.0 * dw
    upper = 1.0 - 2.0 * chi2 * (b(omega, 0.0) + b(omega, omega - wp) + d(omega))
    lower = 1.0 + 2.0 * chi2 * (b(mirror, 0.0) + b(mirror, omega - wp) + d(mirror))
    return upper * lower + chi2 ** 2 * (2.0 * b(omega, omega - wp) + d(omega)) \
        * (2.0 * b(mirror, omega - wp) + d(mirror))


def _select_for_thermo(params, drive, branch):
    """Branch selection with a fold guard: inside the bistable detuning
    range, requesting the small branch past the upper fold (where it has
    merged with the unstable one and vanished) is a validity failure."""
    sols = mean_field(params, drive)
    try:
        E_bi, dw_bi, _ = bistability_onset(params)
    except NoBistabilityError:
        return select_branch(sols, branch)
    in_range = drive.delta_omega / dw_bi >= 1.0
    stable = [s for s in sols if s.branch != "unstable"]
    if branch == "small" and in_range and len(stable) == 1 and stable[0].E > E_bi:
        raise InstabilityError(
            "small-amplitude branch lost past the upper bistable boundary")
    return select_branch(sols, branch)


def _noise_peak_height(params, drive, chi, center, gamma):
    """Peak height of the mechanical noise Lorentzian above the broad
    added-noise background.

    With (center, gamma) pinned by the signal fit, symmetric probe pairs at
    0, 10 and 20 linewidths give three even-moment equations in (flat
    background, background curvature, Lorentzian height); interference
    terms odd about the peak cancel in the pair averages. The closed-form
    elimination below is exact for quadratic background + Lorentzian.
    """
    def pair_mean(k):
        w = np.array([center - k * gamma, center + k * gamma])
        v = noise_density(params, drive, chi, w)
        return 0.5 * float(v[0] + v[1])

    e0 = float(noise_density(params, drive, chi, np.array([center]))[0])
    e10, e20 = pair_mean(10.0), pair_mean(20.0)
    return (3.0 * e0 - 4.0 * e10 + e20) * (40501.0 / 120000.0)


def effective_thermo(params: DetectorParams, drive: DrivePoint, bath_T: float = 0.0,
                     branch: str = "small",
                     residual_gate: float = 0.05,
                     frequency_pulling: bool = True) -> EffectiveThermo:
    """Lorentzian parametrization of the sideband response.

    R_omega, R_gamma and the gains come from Lorentzian fits of the signal
    spectra over the central five linewidths; the fit residual is the
    validity gate on the whole thermal parametrization. The back-action
    occupations invert the noise parametrization at the fitted line center
    (where interference contributions odd about the peak vanish) after
    removing the broad added-noise background, probed out to +-20
    linewidths.

    Raises InstabilityError when the renormalized mechanical damping is
    non-positive (or the low branch has been lost) and NonLorentzianError
    on a residual-gate failure.
    """
    if frequency_pulling:
        chi = _select_for_thermo(params, drive, branch).chi
    else:
        chi = mean_field(params, drive, frequency_pulling=False)[0].chi
    gbm, wm = params.gamma_bm, params.omega_m
    wp = params.omega_T + drive.delta_omega

    # stability probe: renormalized mechanical pole must stay in the lower
    # half plane
    pole = _determinant_zero(params, drive, chi, sideband=+1)
    r_gamma_probe = -pole.imag / gbm
    if r_gamma_probe <= 0.0:
        raise InstabilityError(
            f"net mechanical damping non-positive (R_gamma ~ {r_gamma_probe:.3g})")

    weak = abs(r_gamma_probe - 1.0) < 1e-9

    results = {}
    for sideband in (+1, -1):
        sb_pole = pole if sideband == 1 else \
            _determinant_zero(params, drive, chi, sideband=-1)
        center = sb_pole.real
        width = max(abs(sb_pole.imag), 1e-3 * gbm)

        w_fit = np.linspace(center - 5.0 * width, center + 5.0 * width, 1601)
        s_sig = signal_density(params, drive, chi, w_fit, bath_T)
        c_s, g_s, a_s, res_s = fit_lorentzian(w_fit, np.clip(s_sig, 0.0, None))

        n_pk = _noise_peak_height(params, drive, chi, c_s, g_s)
        s_pk = float(signal_density(params, drive, chi, np.array([c_s]), bath_T)[0])
        results[sideband] = (c_s, g_s, a_s, n_pk / s_pk, res_s)

    # the phase-preserving sideband carries the thermal parametrization that
    # n_net is built on: its fit residual is the validity gate. The
    # phase-conjugating extraction is reported but only NaN'd when its own
    # fit fails.
    residual = results[+1][4]
    if residual > residual_gate:
        raise NonLorentzianError(
            f"Lorentzian residual {residual:.3g} exceeds gate {residual_gate}",
            residual=residual)

    c_s, g_s, a_s, peak_ratio, _ = results[+1]
    R_omega = (c_s - wp) / wm
    R_gamma = g_s / gbm
    n_bath = bose_occupation(R_omega * wm, bath_T)
    occ_bath = 2.0 * n_bath + 1.0
    gamma_back = (R_gamma - 1.0) * gbm

    def gain(a_fit, g_fit):
        return params.Z_p * a_fit * g_fit * (2.0 * params.mass * R_omega * wm) \
            / (hbar * gbm * occ_bath)

    def n_back(ratio):
        if weak or gamma_back == 0.0:
            return math.nan
        occ = ratio * occ_bath * gbm / gamma_back
        return (occ - 1.0) / 2.0

    nb_plus = n_back(peak_ratio)
    c_s2, g_s2, a_s2, peak_ratio2, res_minus = results[-1]
    nb_minus = n_back(peak_ratio2) if res_minus <= residual_gate else math.nan

    if weak or math.isnan(nb_plus):
        n_net = math.nan
    else:
        n_net = 0.5 * (occ_bath / R_gamma
                       + (1.0 - 1.0 / R_gamma) * (2.0 * nb_plus + 1.0) - 1.0)

    return EffectiveThermo(
        R_omega=R_omega, R_gamma=R_gamma,
        G_plus=gain(a_s, g_s), G_minus=gain(a_s2, g_s2),
        n_back_plus=nb_plus, n_back_minus=nb_minus,
        n_net=n_net, lorentzian_residual=residual, weak_coupling=weak)


def cooling_curve(params: DetectorParams, detuning: float, I_grid,
                  bath_T_list, branch_policy: str = "small"):
    """Net mechanical occupation over a (drive current, bath temperature)
    grid. Returns a list of row dicts; points failing a validity gate carry
    NaN and the failure reason.
    """
    rows = []
    for I0 in I_grid:
        drive = DrivePoint(I_0=float(I0), delta_omega=detuning)
        for T in bath_T_list:
            row = {"I_0": float(I0), "bath_T": float(T), "n_net": math.nan,
                   "R_omega": math.nan, "R_gamma": math.nan,
                   "n_back": math.nan, "residual": math.nan, "gate_failure": ""}
            try:
                thermo = effective_thermo(params, drive, bath_T=T,
                                          branch=branch_policy)
                row.update(n_net=thermo.n_net, R_omega=thermo.R_omega,
                           R_gamma=thermo.R_gamma, n_back=thermo.n_back_plus,
                           residual=thermo.lorentzian_residual)
            except (InstabilityError, NonLorentzianError) as exc:
                row["gate_failure"] = type(exc).__name__
            rows.append(row)
    return rows
