"""Entropy, fidelity, information, effective dimension, mutual information,
and quadrature-squeezing diagnostics for the trilinear trajectories.

Entropies are in nats (no Boltzmann factor). All matrix functions go
through Hermitian eigendecompositions with eigenvalues below 1e-12 clamped
to zero, since reduced matrices are rank-deficient early in the evolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fock
from .constants import hbar, k_B
from .fock import DensityMatrix, HilbertSpec, StateVector

_CLAMP = 1e-12


@dataclass(frozen=True)
class ThermalReference:
    """Single-mode thermal state of mean occupation n_bar, truncated to dim.

    The truncated geometric distribution is renormalized; ``leak`` records
    how much weight the truncation discarded.
    """

    mean_occupation: float
    omega: float
    dim: int

    def __post_init__(self):
        if self.mean_occupation < 0.0:
            raise ValueError("mean occupation must be nonnegative")
        if self.dim < 2:
            raise ValueError("dim must be >= 2")

    @property
    def probabilities(self):
        n_bar = self.mean_occupation
        ns = np.arange(self.dim)
        if n_bar == 0.0:
            p = np.zeros(self.dim)
            p[0] = 1.0
            return p
        ratio = n_bar / (n_bar + 1.0)
        p = ratio ** ns / (n_bar + 1.0)
        return p / p.sum()

    @property
    def leak(self) -> float:
        n_bar = self.mean_occupation
        if n_bar == 0.0:
            return 0.0
        return (n_bar / (n_bar + 1.0)) ** self.dim

    def density_matrix(self) -> DensityMatrix:
        return DensityMatrix(HilbertSpec((self.dim,)), np.diag(self.probabilities))

    def temperature(self) -> float:
        return effective_temperature(self.mean_occupation, self.omega)


def _clamped_eigvals(rho: DensityMatrix):
    evals = rho.eigenvalues()
    if evals.min() < -1e-9:
        raise ValueError(f"density matrix has eigenvalue {evals.min()} < -1e-9")
    evals = np.clip(evals, 0.0, None)
    evals[evals < _CLAMP] = 0.0
    return evals


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """S = -sum lambda ln lambda over the eigenvalues (0 ln 0 := 0), nats."""
    evals = _clamped_eigvals(rho)
    nz = evals[evals > 0.0]
    return float(-np.sum(nz * np.log(nz)))


def thermal_entropy(n_bar: float) -> float:
    """Entropy of a harmonic-oscillator thermal state with mean n_bar:
    (n_bar+1) ln(n_bar+1) - n_bar ln n_bar."""
    if n_bar < 0.0:
        raise ValueError("mean occupation must be nonnegative")
    if n_bar == 0.0:
        return 0.0
    return float((n_bar + 1.0) * math.log(n_bar + 1.0) - n_bar * math.log(n_bar))


def effective_temperature(n_bar: float, omega: float) -> float:
    """Bose-inversion temperature h*w / (kB ln(1 + 1/n_bar)) in kelvin."""
    if n_bar < 0.0:
        raise ValueError("mean occupation must be nonnegative")
    if n_bar == 0.0:
        return 0.0
    return hbar * omega / (k_B * math.log1p(1.0 / n_bar))


def bose_occupation(omega: float, T: float) -> float:
    """Mean thermal occupation 1/(e^(hw/kT) - 1); inverse of the above."""
    if T <= 0.0:
        return 0.0
    return 1.0 / math.expm1(hbar * omega / (k_B * T))


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Uhlmann fidelity Tr sqrt(sqrt(rho) sigma sqrt(rho)), in [0, 1]."""
    if rho.spec.total_dim != sigma.spec.total_dim:
        raise ValueError("density matrices must share a dimension")
    evals, vecs = np.linalg.eigh(rho.entries)
    evals = np.clip(evals, 0.0, None)
    sqrt_rho = (vecs * np.sqrt(evals)) @ vecs.conj().T
    inner = sqrt_rho @ sigma.entries @ sqrt_rho
    ev_inner = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    value = float(np.sum(np.sqrt(np.clip(ev_inner, 0.0, None))))
    if value > 1.0 + 1e-8:
        raise ValueError(f"fidelity {value} exceeds 1 beyond numerical slack")
    return min(value, 1.0)


def information(rho_b: DensityMatrix, omega: float = 1.0) -> float:
    """Signal information S_th(<N>) - S(rho): the entropy deficit of the
    state relative to the thermal state of equal mean occupation."""
    n = np.arange(rho_b.spec.total_dim)
    n_bar = float(np.real(np.sum(np.diag(rho_b.entries) * n)))
    return thermal_entropy(n_bar) - von_neumann_entropy(rho_b)


def effective_dimension(n_bar: float) -> float:
    """Effective subspace dimension 1/Tr[sigma^2] of the thermal state with
    mean n_bar; closed form 2 n_bar + 1 (geometric-series purity)."""
    if n_bar < 0.0:
        raise ValueError("mean occupation must be nonnegative")
    return 2.0 * n_bar + 1.0


def mutual_information_partitions(state: StateVector):
    """(I_{a-bc}, I_{b-c}) for a pure tripartite state.

    Purity gives S_abc = 0 and S_a = S_bc, so I_{a-bc} = 2 S_a and
    I_{b-c} = S_b + S_c - S_bc = 2 S_b - S_a (signal and idler marginals
    coincide for vacuum-seeded evolution).
    """
    if state.spec.n_modes != 3:
        raise ValueError("need a tripartite state")
    s_a = von_neumann_entropy(fock.partial_trace(state, keep=[0]))
    s_b = von_neumann_entropy(fock.partial_trace(state, keep=[1]))
    return (2.0 * s_a, 2.0 * s_b - s_a)


def squeezing_params(rho_a: DensityMatrix):
    """Quadrature squeezing (q_+, q_-) with q = 4<dX^2> - 1.

    X_+ = (a + a+)/2 and X_- = (a - a+)/(2i); vacuum and coherent states give
    (0, 0) and q_- < 0 flags squeezing.
    """
    dim = rho_a.spec.total_dim
    a_op, adag_op, num_op = fock.ladder_ops(dim)
    a = a_op.matrix
    rho = rho_a.entries
    exp_a = complex(np.trace(a @ rho))
    exp_aa = complex(np.trace(a @ a @ rho))
    exp_n = float(np.real(np.trace(num_op.matrix @ rho)))

    # <X+^2> = (  <a^2> + <a+^2> + 2<N> + 1 )/4,  <X-^2> with a minus sign
    var_plus = 0.25 * (2.0 * exp_n + 1.0 + 2.0 * exp_aa.real) \
        - (exp_a.real) ** 2
    var_minus = 0.25 * (2.0 * exp_n + 1.0 - 2.0 * exp_aa.real) \
        - (exp_a.imag) ** 2
    return (4.0 * var_plus - 1.0, 4.0 * var_minus - 1.0)
