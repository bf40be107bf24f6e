"""Pump-signal-idler dynamics of the three-mode parametric interaction
H = hw_a N_a + hw_b N_b + hw_c N_c + i*h*chi*(a b+ c+ - a+ b c),
with the frequency-matching condition w_a = w_b + w_c.

Four evolution tiers are provided:

* parametric  -- pump frozen at a classical amplitude A (two-mode squeezing),
* semiclassical -- classical pump with back-reaction (elliptic-dn pump decay),
* short-time  -- quantized pump, BCH-truncated propagator extrapolated in tau,
* full        -- numerical Schrodinger evolution on a truncated Fock grid.

All dynamics are expressed in the interaction frame and in dimensionless
time tau = chi*t, which scales out the coupling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import fock
from .errors import TruncationError
from .fock import DensityMatrix, HilbertSpec, ModeOperator, StateVector
from .numerics import RealGrid, Tolerance, evolve_ode, integrate_adaptive, jacobi_dn


@dataclass(frozen=True)
class TrilinearParams:
    """Mode frequencies (rad/s), coupling chi (1/s) and truncation dims."""

    chi: float
    omega_a: float
    omega_b: float
    omega_c: float
    spec: HilbertSpec

    def __post_init__(self):
        if self.chi <= 0.0:
            raise ValueError("chi must be positive")
        if self.spec.n_modes != 3:
            raise ValueError("trilinear dynamics need a three-mode spec")
        mismatch = abs(self.omega_a - (self.omega_b + self.omega_c))
        if mismatch > 1e-12 * abs(self.omega_a):
            raise ValueError(
                f"frequency matching violated: w_a - (w_b + w_c) = {mismatch}")

    @classmethod
    def degenerate(cls, chi, omega_a, dims):
        """Black-hole preset: w_b = w_c = w_a/2."""
        return cls(chi, omega_a, omega_a / 2.0, omega_a / 2.0, HilbertSpec(dims))


@dataclass(frozen=True)
class PumpInitialState:
    """Pure initial pump state |psi> = sum_s a_s |s>, signal/idler in vacuum."""

    coefficients: np.ndarray

    def __post_init__(self):
        coeff = np.asarray(self.coefficients, dtype=complex).ravel()
        total = float(np.sum(np.abs(coeff) ** 2))
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"pump coefficients not normalized: sum |a_s|^2 = {total}")
        object.__setattr__(self, "coefficients", coeff)

    @property
    def probabilities(self):
        return np.abs(self.coefficients) ** 2

    @property
    def mean_occupation(self):
        return float(np.sum(self.probabilities * np.arange(self.coefficients.size)))

    @classmethod
    def fock(cls, s, dim=None):
        dim = dim if dim is not None else s + 1
        coeff = np.zeros(dim, dtype=complex)
        coeff[s] = 1.0
        return cls(coeff)

    @classmethod
    def coherent(cls, mean_occupation, dim):
        """Coherent pump with <N_a(0)> = mean_occupation, truncation-gated."""
        state = fock.coherent_state(math.sqrt(mean_occupation), dim)
        return cls(state.amplitudes)


@dataclass(frozen=True)
class SemiclassicalCurve:
    """Classical pump trajectory N_a(tau) and accumulated phase theta(tau)."""

    tau_grid: np.ndarray
    N_a: np.ndarray
    theta: np.ndarray
    beta_plus: float
    beta_minus: float
    modulus: float
    N_a0: float = field(default=0.0)


def parametric_occupation(A: float, tau: float) -> float:
    """Signal/idler quanta sinh^2(A*tau) for a fixed classical pump A."""
    if A < 0.0 or tau < 0.0:
        raise ValueError("pump amplitude and tau must be nonnegative")
    return math.sinh(A * tau) ** 2


def parametric_state(A: float, tau: float, dim: int) -> StateVector:
    """Two-mode squeezed vacuum sech(r) sum tanh(r)^n |n,n>, r = A*tau.

    The truncation gate requires tanh(r)^(2*dim) < 1e-8 so the discarded
    tail is negligible.
    """
    r = A * tau
    th = math.tanh(r)
    if th > 0.0 and th ** (2 * dim) >= 1e-8:
        need = int(math.ceil(math.log(1e-8) / (2.0 * math.log(th)))) + 1
        raise TruncationError(
            f"two-mode squeezed tail too heavy at dim={dim} (tanh^2dim="
            f"{th ** (2 * dim):.2e}); need dim >= {need}",
            leak=th ** (2 * dim), required_dim=need)
    spec = HilbertSpec((dim, dim))
    amps = np.zeros(spec.total_dim, dtype=complex)
    for n in range(dim):
        amps[n * dim + n] = th ** n
    amps /= np.linalg.norm(amps)
    return StateVector(spec, amps)


def parametric_temperature(A: float, tau: float, omega_b: float) -> float:
    """Effective signal temperature h*w_b / (2 kB ln coth(A tau)) in kelvin."""
    from .constants import hbar, k_B

    r = A * tau
    if r <= 0.0:
        return 0.0
    return hbar * omega_b / (2.0 * k_B * math.log(1.0 / math.tanh(r)))


def pump_betas(N_a0: float):
    """Turning-point parameters beta+- of the classical pump evolution."""
    root = math.sqrt(1.0 + 12.0 * N_a0 + 4.0 * N_a0 ** 2)
    return (0.25 * (1.0 + 2.0 * N_a0 + root), 0.25 * (1.0 + 2.0 * N_a0 - root))


def semiclassical_pump(N_a0: float, tau_grid) -> SemiclassicalCurve:
    """Classical pump trajectory with back-reaction, signal/idler from vacuum.

    N_a(tau) = beta+ + (N_a0 - beta+)/dn^2(sqrt(beta+ - beta-) tau | m) with
    m = (N_a0 - beta-)/(beta+ - beta-). Since beta- is slightly negative the
    raw curve dips just below zero at the turning points; the exposed curve
    (and the theta integrand sqrt(N_a)) clamps at zero.

    theta(tau) = int_0^tau sqrt(N_a) dtau' accumulated by adaptive Simpson
    segments between grid points.
    """
    if N_a0 <= 0.0:
        raise ValueError("N_a0 must be positive")
    grid = tau_grid.points if isinstance(tau_grid, RealGrid) else RealGrid(tau_grid).points
    if grid[0] < 0.0:
        raise ValueError("tau grid must start at tau >= 0")
    bp, bm = pump_betas(N_a0)
    m = (N_a0 - bm) / (bp - bm)
    rate = math.sqrt(bp - bm)

    def n_a(tau):
        dn = jacobi_dn(rate * tau, m)
        return bp + (N_a0 - bp) / (dn * dn)

    n_vals = np.array([max(0.0, n_a(t)) for t in grid])

    # sqrt(N_a) has a one-sided square-root kink where the pump touches
    # zero, which caps the attainable Simpson accuracy per segment
    quad_tol = Tolerance(abs_tol=1e-9, rel_tol=1e-8, max_iter=48)
    theta = np.empty_like(n_vals)
    theta[0] = 0.0 if grid[0] == 0.0 else integrate_adaptive(
        lambda t: math.sqrt(max(0.0, n_a(t))), 0.0, grid[0], quad_tol)
    for i in range(1, grid.size):
        theta[i] = theta[i - 1] + integrate_adaptive(
            lambda t: math.sqrt(max(0.0, n_a(t))), grid[i - 1], grid[i], quad_tol)

    return SemiclassicalCurve(tau_grid=grid, N_a=n_vals, theta=theta,
                              beta_plus=bp, beta_minus=bm, modulus=m, N_a0=N_a0)


def semiclassical_occupation(curve: SemiclassicalCurve) -> np.ndarray:
    """Signal occupation sinh^2(theta(tau)) along a semiclassical curve."""
    return np.sinh(curve.theta) ** 2


# ---------------------------------------------------------------------------
# short-time (quantized pump) tier
# ---------------------------------------------------------------------------

def branch_coefficient(n: int, s: int, k: float = 0.5) -> float:
    """f_n(k, s) = sqrt(s! Gamma(2k+n) / (n! (s-n)! Gamma(2k))).

    For vacuum signal/idler (k = 1/2) this reduces to sqrt(s!/(s-n)!).
    """
    if not (0 <= n <= s):
        raise ValueError("need 0 <= n <= s")
    log_f2 = (math.lgamma(s + 1) + math.lgamma(2 * k + n)
              - math.lgamma(n + 1) - math.lgamma(s - n + 1) - math.lgamma(2 * k))
    return math.exp(0.5 * log_f2)


def branch_normalization(s: int, tau: float, k: float = 0.5) -> float:
    """Normalization N_s(tau) = sum_n f_n^2 tau^(2n) of a pump level-s branch.

    For k = 1/2 this equals the closed form e^(1/tau^2) tau^(2s)
    Gamma(s+1, 1/tau^2), evaluated here through its stable finite sum
    s! * sum_u tau^(2(s-u))/u!.
    """
    if tau < 0.0:
        raise ValueError("tau must be nonnegative")
    if tau == 0.0:
        return 1.0
    if k == 0.5:
        return float(sum(math.exp(math.lgamma(s + 1) - math.lgamma(u + 1)
                                  + 2.0 * (s - u) * math.log(tau))
                         for u in range(s + 1)))
    return float(sum(branch_coefficient(n, s, k) ** 2 * tau ** (2 * n)
                     for n in range(s + 1)))


@dataclass(frozen=True)
class ShortTimeBranch:
    """One pump level s: weight a_s and unit-normalized amplitudes over
    |s-n>_a |n>_b |n>_c for n = 0..s."""

    s: int
    weight: complex
    amplitudes: np.ndarray


def short_time_state(initial: PumpInitialState, tau: float, k: float = 0.5):
    """Branch decomposition of the BCH short-time state at dimensionless tau.

    Amplitudes within branch s are f_n(k,s) tau^n / sqrt(N_s(tau)); they are
    built in log space so late-time (tau >> 1) evaluation stays finite.
    """
    if tau < 0.0:
        raise ValueError("tau must be nonnegative")
    branches = []
    for s, a_s in enumerate(initial.coefficients):
        if s == 0:
            amps = np.ones(1)
        elif tau == 0.0:
            amps = np.zeros(s + 1)
            amps[0] = 1.0
        else:
            log_amp = np.array([
                0.5 * (math.lgamma(s + 1) + math.lgamma(2 * k + n)
                       - math.lgamma(n + 1) - math.lgamma(s - n + 1)
                       - math.lgamma(2 * k)) + n * math.log(tau)
                for n in range(s + 1)])
            log_amp -= log_amp.max()
            amps = np.exp(log_amp)
            amps /= np.linalg.norm(amps)
        branches.append(ShortTimeBranch(s=s, weight=complex(a_s), amplitudes=amps))
    return branches


def short_time_state_vector(initial: PumpInitialState, tau: float,
                            spec: HilbertSpec) -> StateVector:
    """Assemble the short-time branches into a full tripartite StateVector."""
    da, db, dc = spec.dims
    if initial.coefficients.size > da:
        raise ValueError("pump dim too small for the initial state")
    amps = np.zeros(spec.dims, dtype=complex)
    for br in short_time_state(initial, tau):
        for n in range(br.s + 1):
            if br.s - n < da and n < db and n < dc:
                amps[br.s - n, n, n] += br.weight * br.amplitudes[n]
    return StateVector(spec, amps.ravel(), normalize=True)


def short_time_reduced(initial: PumpInitialState, tau: float, k: float = 0.5):
    """Reduced pump and signal density matrices of the short-time state.

    The pump matrix keeps the inter-branch coherences <s-i| |r-i> allowed by
    the idler/signal overlap (Kronecker pairing of the pair number i); the
    signal matrix is diagonal.
    """
    branches = short_time_state(initial, tau, k)
    smax = len(branches) - 1
    dim = smax + 1

    rho_a = np.zeros((dim, dim), dtype=complex)
    rho_b = np.zeros((dim, dim), dtype=complex)
    for bs in branches:
        ws = bs.weight
        if ws == 0:
            continue
        for br in branches:
            wr = br.weight
            if wr == 0:
                continue
            imax = min(bs.s, br.s)
            for i in range(imax + 1):
                rho_a[bs.s - i, br.s - i] += (ws * np.conj(wr)
                                              * bs.amplitudes[i] * br.amplitudes[i])
    for bs in branches:
        p = abs(bs.weight) ** 2
        if p == 0:
            continue
        for i in range(bs.s + 1):
            rho_b[i, i] += p * bs.amplitudes[i] ** 2

    spec1 = HilbertSpec((max(dim, 2),))
    if dim < 2:
        rho_a = np.pad(rho_a, ((0, 1), (0, 1)))
        rho_b = np.pad(rho_b, ((0, 1), (0, 1)))
    return (DensityMatrix(spec1, rho_a), DensityMatrix(spec1, rho_b))


def long_time_signal(P_s) -> DensityMatrix:
    """Late-time signal state: diagonal mixture carrying the initial pump
    number distribution."""
    p = np.asarray(P_s, dtype=float).ravel()
    if np.any(p < -1e-12):
        raise ValueError("probabilities must be nonnegative")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"probabilities sum to {p.sum()}, not 1")
    dim = max(p.size, 2)
    mat = np.zeros((dim, dim), dtype=complex)
    np.fill_diagonal(mat[:p.size, :p.size], np.clip(p, 0.0, None))
    return DensityMatrix(HilbertSpec((dim,)), mat)


# ---------------------------------------------------------------------------
# full quantum tier
# ---------------------------------------------------------------------------

def interaction_generator(spec: HilbertSpec):
    """Sparse anti-Hermitian generator G = a b+ c+ - a+ b c (so H_I = i h chi G
    and the interaction-frame Schrodinger equation reads dpsi/dtau = G psi)."""
    da, db, dc = spec.dims
    a, adag, _ = fock.ladder_ops(da)
    b, bdag, _ = fock.ladder_ops(db)
    c, cdag, _ = fock.ladder_ops(dc)
    A = fock.embed(a, 0, spec).matrix
    Bd = fock.embed(bdag, 1, spec).matrix
    Cd = fock.embed(cdag, 2, spec).matrix
    down = A @ Bd @ Cd
    return (down - down.conjugate().transpose()).tocsr()


def build_interaction_hamiltonian(params: TrilinearParams) -> ModeOperator:
    """Interaction-frame Hamiltonian H_I/(h chi) = i(a b+ c+ - a+ b c)."""
    gen = interaction_generator(params.spec)
    return ModeOperator(params.spec, 1j * gen, label="H_I/(hbar*chi)")


def initial_product_state(initial: PumpInitialState, spec: HilbertSpec) -> StateVector:
    """|psi_pump> |0>_b |0>_c on the given truncation grid."""
    da = spec.dims[0]
    if initial.coefficients.size > da:
        raise ValueError("pump dim too small for the initial pump state")
    amps = np.zeros(spec.dims, dtype=complex)
    amps[: initial.coefficients.size, 0, 0] = initial.coefficients
    return StateVector(spec, amps.ravel())


def evolve_full(initial: StateVector, params: TrilinearParams, tau_grid,
                tol: Tolerance = Tolerance(abs_tol=1e-12, rel_tol=1e-10),
                leak_tol: float = 1e-6) -> list[StateVector]:
    """Interaction-picture Schrodinger evolution dpsi/dtau = G psi.

    Raises TruncationError if the top Fock level of any mode accumulates
    more than ``leak_tol`` population anywhere along the trajectory.
    """
    spec = initial.spec
    if spec != params.spec:
        raise ValueError("initial state and params use different specs")
    gen = interaction_generator(spec)

    def rhs(_t, y):
        return gen @ y

    raw = evolve_ode(rhs, initial.amplitudes, tau_grid, tol)
    states = [StateVector(spec, y) for y in raw]
    leak = max(s.max_boundary_population() for s in states)
    if leak > leak_tol:
        raise TruncationError(
            f"truncation leak {leak:.3e} exceeds {leak_tol:.1e}; enlarge dims {spec.dims}",
            leak=leak)
    return states


def mode_numbers(spec: HilbertSpec):
    """Embedded number operators (N_a, N_b, N_c)."""
    ops = []
    for i, d in enumerate(spec.dims):
        _, _, num = fock.ladder_ops(d)
        ops.append(fock.embed(num, i, spec))
    return tuple(ops)


def occupation_factorization_residual(state: StateVector) -> float:
    """<N_a^2> - <N_a>^2 for the pump: the residual of the mean-field
    factorization underlying the semiclassical tier."""
    rho_a = fock.partial_trace(state, keep=[0])
    n = np.arange(rho_a.spec.total_dim)
    p = rho_a.diagonal()
    mean = float(np.sum(p * n))
    second = float(np.sum(p * n * n))
    return second - mean * mean
