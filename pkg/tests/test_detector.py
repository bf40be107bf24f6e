import math

import numpy as np
import pytest

from nlcavity.constants import Phi0
from nlcavity.detector import (
    DrivePoint,
    GeometricBlock,
    added_noise,
    bistability_boundary,
    bistability_onset,
    caves_bound,
    cooling_curve,
    coupling_constants,
    effective_duffing,
    effective_thermo,
    inductance_coeffs,
    linear_amplitude,
    mean_field,
    mode_wavenumber,
    noise_spectrum,
    response_coeffs,
    select_branch,
    signal_density,
    signal_spectrum,
    zero_point,
)
from nlcavity.errors import (
    InstabilityError,
    NoBistabilityError,
    OutsideRegionError,
    SingularFluxError,
)
from nlcavity.presets import PRESETS, build_detector_params


@pytest.fixture(scope="module")
def params():
    return build_detector_params(PRESETS["ch2-detection"]["params"])


@pytest.fixture(scope="module")
def onset(params):
    return bistability_onset(params)


# --- constants ----------------------------------------------------------------

def test_zero_point_anchor(params):
    assert zero_point(params) == pytest.approx(1.45e-13, rel=0.01)


def test_zero_point_scaling(params):
    import dataclasses

    doubled = dataclasses.replace(params, mass=2 * params.mass)
    assert zero_point(doubled) == pytest.approx(zero_point(params) / math.sqrt(2),
                                                rel=1e-12)


def test_inductance_zero_flux():
    p = build_detector_params(dict(PRESETS["ch2-detection"]["params"],
                                   phi_ext_phi0="0"))
    L00, L20, L01 = inductance_coeffs(p)
    assert L00 == pytest.approx(Phi0 / (4 * math.pi * p.I_c), rel=1e-12)
    assert L01 == 0.0


def test_inductance_direct_eval(params):
    L00, L20, L01 = inductance_coeffs(params)
    sec = 1.0 / math.cos(0.442 * math.pi)
    assert L00 == pytest.approx(Phi0 * sec / (4 * math.pi * 4.5e-6), rel=1e-12)
    assert L20 / L00 == pytest.approx(sec ** 2 / 24.0, rel=1e-12)


def test_inductance_half_flux_singularity():
    p = build_detector_params(dict(PRESETS["ch2-detection"]["params"],
                                   phi_ext_phi0="0.5"))
    with pytest.raises(SingularFluxError):
        inductance_coeffs(p)


def test_coupling_direct_passthrough(params):
    K_Tm, K_d = coupling_constants(params)
    assert K_Tm == 1.1e-5
    assert K_d == -3.4e-6


def geometric_detector(phi_ext):
    base = build_detector_params(PRESETS["ch2-detection"]["params"])
    import dataclasses

    geo = GeometricBlock(lambda_geo=0.9, l_osc=5e-6, LT_l=2.0e-9, CT_l=4.0e-13)
    return dataclasses.replace(base, K_d=None, K_Tm=None, geometry=geo,
                               phi_ext=phi_ext)


def test_coupling_geometric_mode_root():
    p = geometric_detector(0.442)
    x = mode_wavenumber(p)
    L00, _, _ = inductance_coeffs(p)
    zeta = L00 / p.geometry.LT_l
    assert 0.5 * x * math.tan(0.5 * x) == pytest.approx(1.0 / zeta, rel=1e-10)
    K_Tm, K_d = coupling_constants(p)
    assert K_d < 0.0  # softening below the half flux quantum
    assert K_Tm > 0.0


def test_coupling_zeta_limit_small_root():
    # large zeta (SQUID-dominated): k0 l -> 0 like 2/sqrt(zeta)
    p = geometric_detector(0.4999)  # sec huge -> zeta huge
    from nlcavity.detector import inductance_coeffs as ic
    zeta = ic(p)[0] / p.geometry.LT_l
    x = mode_wavenumber(p)
    assert x < 0.5
    assert x == pytest.approx(2.0 / math.sqrt(zeta), rel=0.05)


def test_kd_sign_flips_across_half_flux():
    below = coupling_constants(geometric_detector(0.442))[1]
    above = coupling_constants(geometric_detector(0.558))[1]
    assert below < 0.0 < above


def test_effective_duffing_anchor(params):
    K = effective_duffing(params)
    assert K == pytest.approx(-3.7025e-6, rel=1e-4)
    mech = K - (-3.4e-6)
    assert mech == pytest.approx(-3.025e-7, rel=1e-3)


def test_effective_duffing_limits(params):
    import dataclasses

    p0 = dataclasses.replace(params, K_Tm=0.0)
    assert effective_duffing(p0) == params.K_d
    gbm = params.gamma_bm
    cancel = 2 * params.omega_T * params.omega_m * params.K_Tm ** 2 \
        / (params.omega_m ** 2 + gbm ** 2)
    p1 = dataclasses.replace(params, K_d=cancel)
    assert effective_duffing(p1) == pytest.approx(0.0, abs=1e-18)


def test_validity_gates_margin(params, onset):
    gates = params.validity_gates(onset[2])
    for value in gates.values():
        assert value < 0.2  # margin factor >= 5


# --- mean field -----------------------------------------------------------------

def test_mean_field_small_drive_linear(params, onset):
    drive = DrivePoint(I_0=1e-3 * onset[2], delta_omega=0.0)
    sols = mean_field(params, drive)
    assert len(sols) == 1
    c = linear_amplitude(params, drive)
    assert sols[0].chi == pytest.approx(c, rel=1e-5)


def test_mean_field_residual_invariant(params, onset):
    _, dw_bi, I_bi = onset
    rng = [(0.3, 0.0), (0.8, 0.5 * dw_bi), (1.2, 1.3 * dw_bi), (0.9, -2 * dw_bi)]
    for ratio, dw in rng:
        for sol in mean_field(params, DrivePoint(I_0=ratio * I_bi, delta_omega=dw)):
            assert sol.residual < 1e-9


def test_mean_field_onset_double_root(params, onset):
    E_bi, dw_bi, I_bi = onset
    sols = mean_field(params, DrivePoint(I_0=I_bi, delta_omega=dw_bi))
    assert len(sols) <= 2
    assert min(abs(s.E - E_bi) for s in sols) < 1e-2 * E_bi
    # discriminant of the cubic nearly vanishes at onset
    assert E_bi == pytest.approx(2 * params.gamma_pT
                                 / (math.sqrt(3) * params.omega_T
                                    * abs(effective_duffing(params))), rel=1e-12)


def test_mean_field_three_roots_inside(params, onset):
    _, dw_bi, I_bi = onset
    sols = mean_field(params, DrivePoint(I_0=1.23 * I_bi, delta_omega=1.3 * dw_bi))
    assert [s.branch for s in sols] == ["small", "unstable", "large"]
    assert sols[0].E < sols[1].E < sols[2].E


def test_mean_field_zero_drive(params):
    sols = mean_field(params, DrivePoint(I_0=0.0, delta_omega=0.0))
    assert sols[0].E == 0.0


def test_mean_field_no_pulling(params, onset):
    drive = DrivePoint(I_0=0.8 * onset[2], delta_omega=onset[1])
    sol = mean_field(params, drive, frequency_pulling=False)[0]
    assert sol.chi == pytest.approx(linear_amplitude(params, drive), rel=1e-12)


# --- bistability ------------------------------------------------------------------

def test_onset_values(params, onset):
    E_bi, dw_bi, I_bi = onset
    assert dw_bi == pytest.approx(-9.069e7, rel=1e-3)
    assert I_bi == pytest.approx(4.9e-8, rel=0.01)
    assert E_bi == pytest.approx(519.78, rel=1e-3)


def test_onset_sign_rule(params):
    import dataclasses

    hardened = dataclasses.replace(params, K_d=+3.4e-6)
    _, dw_bi, _ = bistability_onset(hardened)
    assert dw_bi > 0.0


def test_onset_requires_nonlinearity(params):
    import dataclasses

    p = dataclasses.replace(params, K_d=0.0, K_Tm=0.0)
    with pytest.raises(NoBistabilityError):
        bistability_onset(p)


def test_boundary_cusp(params):
    low, up = bistability_boundary(params, 1.0)
    assert low == pytest.approx(1.0, abs=1e-12)
    assert up == pytest.approx(1.0, abs=1e-12)


def test_boundary_outside_region(params):
    with pytest.raises(OutsideRegionError):
        bistability_boundary(params, 0.9)


def test_boundary_widens(params):
    l2, u2 = bistability_boundary(params, 2.0)
    l5, u5 = bistability_boundary(params, 5.0)
    assert u5 - l5 > u2 - l2
    assert u5 > u2


def test_boundary_vs_root_count_scan(params, onset):
    # closed form vs the 1 <-> 3 root-count transition of the cubic
    _, dw_bi, I_bi = onset
    ratio = 2.0
    low, up = bistability_boundary(params, ratio)
    dw = ratio * dw_bi
    for target, direction in ((low, +1), (up, -1)):
        inside = mean_field(params, DrivePoint(
            I_0=(target + direction * 0.01) * I_bi, delta_omega=dw))
        outside = mean_field(params, DrivePoint(
            I_0=(target - direction * 0.01) * I_bi, delta_omega=dw))
        assert len(inside) == 3
        assert len(outside) == 1


# --- response coefficients -----------------------------------------------------------

def test_alpha_beta_small_drive_limits(params, onset):
    drive = DrivePoint(I_0=1e-3 * onset[2], delta_omega=0.0)
    chi = mean_field(params, drive)[0].chi
    c = linear_amplitude(params, drive)
    w = params.omega_T + np.linspace(-2, 2, 9) * params.omega_m
    a1, a2, b1, b2, _ = response_coeffs(params, drive, chi, w)
    assert np.max(np.abs(a1 / c - 1.0)) < 1e-3
    assert np.max(np.abs(a2 / c)) < 1e-3
    assert np.max(np.abs(b1 - 1.0)) < 1e-3
    assert np.max(np.abs(b2)) < 1e-3


def test_beta_at_zero_chi(params):
    drive = DrivePoint(I_0=0.0, delta_omega=0.0)
    w = np.array([params.omega_T + 0.3 * params.omega_m])
    _, _, b1, b2, det = response_coeffs(params, drive, 0j, w)
    assert b1[0] == pytest.approx(1.0)
    assert b2[0] == 0.0
    assert det[0] == pytest.approx(1.0)


def test_determinant_vs_linear_solve_oracle(params, onset):
    # reconstruct alpha1/alpha2 by directly inverting the 2x2 linear system
    from nlcavity.detector import _b_func, _d_func

    K_Tm, K_d = coupling_constants(params)
    _, dw_bi, I_bi = onset
    drive = DrivePoint(I_0=0.7 * I_bi, delta_omega=0.4 * abs(dw_bi))
    chi = select_branch(mean_field(params, drive), "small").chi
    dw = drive.delta_omega
    wp = params.omega_T + dw
    for w in (wp + 1.001 * params.omega_m, wp - 0.98 * params.omega_m):
        chi2 = abs(chi) ** 2
        mirror = w - 2 * dw
        b_w0 = _b_func(w, 0.0, params, K_Tm)
        b_ws = _b_func(w, w - wp, params, K_Tm)
        b_m0 = _b_func(mirror, 0.0, params, K_Tm)
        b_ms = _b_func(mirror, w - wp, params, K_Tm)
        d_w = _d_func(w, params, K_d)
        d_m = _d_func(mirror, params, K_d)
        # rows: [upper, -chi^2 cross_w; chi*^2 cross_m, lower]
        M = np.array([
            [1.0 - 2 * chi2 * (b_w0 + b_ws + d_w), -chi ** 2 * (2 * b_ws + d_w)],
            [np.conj(chi) ** 2 * (2 * b_ms + d_m),
             1.0 + 2 * chi2 * (b_m0 + b_ms + d_m)],
        ])
        rhs = np.array([chi, -np.conj(chi)])
        sol = np.linalg.solve(M, rhs)  # response to unit signal sources
        a1, a2, _, _, det = response_coeffs(params, drive, chi, np.array([w]))
        # with both source kernels set to one, a_T^(1) = alpha1 + alpha2
        assert a1[0] + a2[0] == pytest.approx(sol[0], rel=1e-10)
        # determinant identity against the direct 2x2 determinant
        assert det[0] == pytest.approx(np.linalg.det(M), rel=1e-10)


# --- spectra ---------------------------------------------------------------------------

def test_signal_zero_coupling(params, onset):
    import dataclasses

    p = dataclasses.replace(params, K_Tm=0.0)
    drive = DrivePoint(I_0=0.5 * onset[2], delta_omega=0.0)
    ws = p.omega_T + p.omega_m
    assert signal_spectrum(p, drive, ws, 4 * p.gamma_bm) == 0.0


def test_signal_two_peaks_small_drive(params, onset):
    drive = DrivePoint(I_0=1e-3 * onset[2], delta_omega=0.0)
    chi = mean_field(params, drive)[0].chi
    wp = params.omega_T
    w = np.linspace(wp - 2 * params.omega_m, wp + 2 * params.omega_m, 4001)
    dens = signal_density(params, drive, chi, w, 0.0)
    # peaks at wp +- wm
    ipk = np.argsort(dens)[-2:]
    centers = np.sort(w[ipk])
    assert centers[0] == pytest.approx(wp - params.omega_m, abs=3 * (w[1] - w[0]))
    assert centers[1] == pytest.approx(wp + params.omega_m, abs=3 * (w[1] - w[0]))


def test_signal_adaptive_vs_fixed_grid(params, onset):
    drive = DrivePoint(I_0=0.2 * onset[2], delta_omega=0.0)
    chi = select_branch(mean_field(params, drive), "small").chi
    th = effective_thermo(params, drive)
    ws = params.omega_T + th.R_omega * params.omega_m
    band = 2 * th.R_gamma * params.gamma_bm
    adaptive = signal_spectrum(params, drive, ws, band)
    w = np.linspace(ws - band / 2, ws + band / 2, 60_001)
    fixed = np.trapezoid(signal_density(params, drive, chi, w, 0.0), w)
    assert adaptive == pytest.approx(fixed, rel=1e-6)


def test_noise_reduces_to_added(params, onset):
    import dataclasses

    p = dataclasses.replace(params, K_Tm=0.0, K_d=0.0)
    drive = DrivePoint(I_0=0.5 * onset[2], delta_omega=0.0)
    ws = p.omega_T + p.omega_m
    band = 4 * p.gamma_bm
    assert noise_spectrum(p, drive, ws, band) == pytest.approx(
        added_noise(p, ws, band), rel=1e-12)


def test_caves_small_drive_is_added(params, onset):
    drive = DrivePoint(I_0=1e-5 * onset[2], delta_omega=0.0)
    ws = params.omega_T + params.omega_m
    band = 4 * params.gamma_bm
    assert caves_bound(params, drive, ws, band) == pytest.approx(
        added_noise(params, ws, band), rel=1e-3)


def test_noise_at_least_caves_sampled(params, onset):
    _, dw_bi, I_bi = onset
    for ratio, dwf in [(0.1, 0.0), (0.25, 0.0), (0.05, 0.4), (0.12, 0.4), (0.1, 0.2)]:
        drive = DrivePoint(I_0=ratio * I_bi, delta_omega=dwf * abs(dw_bi))
        th = effective_thermo(params, drive)
        ws = params.omega_T + drive.delta_omega + th.R_omega * params.omega_m
        band = 2 * th.R_gamma * params.gamma_bm
        noi = noise_spectrum(params, drive, ws, band)
        cav = caves_bound(params, drive, ws, band)
        assert noi >= cav * (1.0 - 1e-9)


def test_caves_ratio_one_at_large_gain(params, onset):
    _, dw_bi, I_bi = onset
    drive = DrivePoint(I_0=0.15 * I_bi, delta_omega=0.4 * abs(dw_bi))
    th = effective_thermo(params, drive)
    ws = params.omega_T + drive.delta_omega + th.R_omega * params.omega_m
    band = 2 * th.R_gamma * params.gamma_bm
    sig = signal_spectrum(params, drive, ws, band)
    cav = caves_bound(params, drive, ws, band)
    assert cav / sig == pytest.approx(1.0, abs=0.05)


# --- effective thermometry ----------------------------------------------------------

def test_thermo_weak_coupling_flag(params, onset):
    drive = DrivePoint(I_0=1e-5 * onset[2], delta_omega=0.0)
    th = effective_thermo(params, drive)
    assert th.weak_coupling
    assert th.R_omega == pytest.approx(1.0, abs=1e-6)
    assert th.R_gamma == pytest.approx(1.0, abs=1e-6)
    assert math.isnan(th.n_back_plus)


@pytest.fixture(scope="module")
def cooling_params():
    return build_detector_params(PRESETS["ch2-cooling-Q1e4"]["params"])


def test_thermo_red_detuned_cooling_trend(cooling_params):
    _, dw_bi, I_bi = bistability_onset(cooling_params)
    occ = []
    for ratio in (0.4, 0.8, 1.1, 1.2):
        th = effective_thermo(cooling_params,
                              DrivePoint(I_0=ratio * I_bi, delta_omega=1.3 * dw_bi))
        assert th.R_gamma > 1.0  # red detuning damps
        occ.append(2 * th.n_back_plus + 1)
    assert occ[-1] < occ[0]  # occupation falls approaching the boundary


def test_thermo_fit_matches_determinant_probe(cooling_params):
    from nlcavity.detector import _determinant_zero

    _, dw_bi, I_bi = bistability_onset(cooling_params)
    drive = DrivePoint(I_0=0.9 * I_bi, delta_omega=1.3 * dw_bi)
    th = effective_thermo(cooling_params, drive)
    chi = select_branch(mean_field(cooling_params, drive), "small").chi
    pole = _determinant_zero(cooling_params, drive, chi, +1)
    wp = cooling_params.omega_T + drive.delta_omega
    assert th.R_omega == pytest.approx((pole.real - wp) / cooling_params.omega_m,
                                       abs=1e-4)
    assert th.R_gamma == pytest.approx(-pole.imag / cooling_params.gamma_bm,
                                       rel=1e-2)


def test_thermo_instability_on_blue_side(params, onset):
    _, dw_bi, I_bi = onset
    drive = DrivePoint(I_0=0.5 * I_bi, delta_omega=0.4 * abs(dw_bi))
    with pytest.raises(InstabilityError):
        effective_thermo(params, drive)


def test_thermo_branch_lost_past_fold(cooling_params):
    _, dw_bi, I_bi = bistability_onset(cooling_params)
    drive = DrivePoint(I_0=1.2912 * I_bi, delta_omega=1.3 * dw_bi)
    with pytest.raises(InstabilityError):
        effective_thermo(cooling_params, drive)


def test_nnet_formula_limits():
    # Eq-level algebra: T=0 bath and n_back=0 give n_net=0; R_gamma -> inf
    # pins n_net at n_back
    def nnet(R_gamma, occ_bath, occ_back):
        return 0.5 * (occ_bath / R_gamma + (1 - 1 / R_gamma) * occ_back - 1)

    assert nnet(5.0, 1.0, 1.0) == pytest.approx(0.0)
    assert nnet(1e9, 1.0, 2 * 3.0 + 1) == pytest.approx(3.0, abs=1e-6)


def test_cooling_curve_rows_and_failures(cooling_params):
    _, dw_bi, I_bi = bistability_onset(cooling_params)
    rows = cooling_curve(cooling_params, 1.3 * dw_bi,
                         [0.5 * I_bi, 1.2 * I_bi, 1.2912 * I_bi], [0.0, 0.05])
    assert len(rows) == 6
    ok = [r for r in rows if not r["gate_failure"]]
    bad = [r for r in rows if r["gate_failure"]]
    assert len(bad) == 2  # the past-fold drive at both temperatures
    assert all(math.isnan(r["n_net"]) for r in bad)
    for r in ok:
        if r["bath_T"] > 0:
            partner = next(x for x in ok
                           if x["I_0"] == r["I_0"] and x["bath_T"] == 0.0)
            assert r["n_net"] > partner["n_net"]  # hotter bath, higher n_net


def test_lorentzian_gate_holds_away_from_boundaries(cooling_params):
    # gamma_bm << gamma_pT here; any drive >= 5% (of I_bi) away from the
    # bistable boundaries must pass the residual gate
    _, dw_bi, I_bi = bistability_onset(cooling_params)
    low, up = bistability_boundary(cooling_params, 1.3)
    for ratio in (0.3, 0.7, 1.0, low - 0.05, (low + up) / 2, up - 0.05):
        th = effective_thermo(cooling_params,
                              DrivePoint(I_0=ratio * I_bi, delta_omega=1.3 * dw_bi))
        assert th.lorentzian_residual < 0.05


def test_thermo_gain_positive(cooling_params):
    _, dw_bi, I_bi = bistability_onset(cooling_params)
    th = effective_thermo(cooling_params,
                          DrivePoint(I_0=0.8 * I_bi, delta_omega=1.3 * dw_bi))
    assert th.G_plus > 0.0
    assert th.G_minus > 0.0
