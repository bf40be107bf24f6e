"""Truncated multi-mode Fock-space linear algebra.

States and density matrices are stored dense, operators sparse (CSR);
mode order is fixed at construction and tensor indexing is row-major, so
basis index i maps to occupations np.unravel_index(i, dims).

All types are immutable after construction and every operation is pure.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp

from .errors import TruncationError

NORM_TOL = 1e-9
HERM_TOL = 1e-10
EIG_FLOOR = -1e-9


class HilbertSpec:
    """Per-mode truncation dimensions with a fixed mode order."""

    def __init__(self, dims):
        dims = tuple(int(d) for d in dims)
        if not dims:
            raise ValueError("need at least one mode")
        if any(d < 2 for d in dims):
            raise ValueError(f"every mode dimension must be >= 2, got {dims}")
        self.dims = dims
        self.total_dim = int(np.prod(dims))

    @property
    def n_modes(self):
        return len(self.dims)

    def __eq__(self, other):
        return isinstance(other, HilbertSpec) and self.dims == other.dims

    def __hash__(self):
        return hash(self.dims)

    def __repr__(self):
        return f"HilbertSpec(dims={self.dims})"


class ModeOperator:
    """Sparse operator on a HilbertSpec, tagged with what it represents."""

    def __init__(self, spec: HilbertSpec, matrix, label: str = "custom"):
        mat = sp.csr_matrix(matrix, dtype=complex)
        if mat.shape != (spec.total_dim, spec.total_dim):
            raise ValueError(f"matrix shape {mat.shape} does not match spec {spec}")
        self.spec = spec
        self.matrix = mat
        self.label = label

    def dag(self) -> "ModeOperator":
        return ModeOperator(self.spec, self.matrix.conjugate().transpose().tocsr(),
                            label=self.label + "+")

    def __matmul__(self, other):
        if isinstance(other, ModeOperator):
            if other.spec != self.spec:
                raise ValueError("operator spec mismatch")
            return ModeOperator(self.spec, self.matrix @ other.matrix)
        return self.matrix @ other

    def __add__(self, other):
        return ModeOperator(self.spec, self.matrix + other.matrix)

    def __sub__(self, other):
        return ModeOperator(self.spec, self.matrix - other.matrix)

    def __mul__(self, scalar):
        return ModeOperator(self.spec, self.matrix * scalar)

    __rmul__ = __mul__

    def toarray(self):
        return self.matrix.toarray()

    def is_hermitian(self, tol=1e-12):
        delta = (self.matrix - self.matrix.conjugate().transpose()).tocoo()
        if delta.nnz == 0:
            return True
        scale = max(1.0, abs(self.matrix).max())
        return np.max(np.abs(delta.data)) <= tol * scale


class StateVector:
    """Normalized pure state over a truncated tensor-product Fock basis."""

    def __init__(self, spec: HilbertSpec, amplitudes, normalize: bool = False):
        amps = np.asarray(amplitudes, dtype=complex).ravel()
        if amps.size != spec.total_dim:
            raise ValueError(f"amplitude length {amps.size} != total dim {spec.total_dim}")
        norm = float(np.linalg.norm(amps))
        if norm == 0.0:
            raise ValueError("zero state vector")
        if normalize:
            amps = amps / norm
        elif abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {norm} deviates from 1 beyond {NORM_TOL}")
        self.spec = spec
        self.amplitudes = amps
        self.amplitudes.setflags(write=False)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor_view(self):
        return self.amplitudes.reshape(self.spec.dims)

    def boundary_population(self):
        """Probability in the top Fock level of each mode (truncation leak)."""
        psi = self.tensor_view()
        pops = []
        for ax in range(self.spec.n_modes):
            sl = [slice(None)] * self.spec.n_modes
            sl[ax] = -1
            pops.append(float(np.sum(np.abs(psi[tuple(sl)]) ** 2)))
        return pops

    def max_boundary_population(self) -> float:
        return max(self.boundary_population())


class DensityMatrix:
    """Hermitian, trace-one operator on a truncated Fock space."""

    def __init__(self, spec: HilbertSpec, entries, check: bool = True):
        mat = np.asarray(entries, dtype=complex)
        if mat.shape != (spec.total_dim, spec.total_dim):
            raise ValueError(f"matrix shape {mat.shape} != ({spec.total_dim},)*2")
        if check:
            scale = max(1.0, float(np.max(np.abs(mat))))
            if np.max(np.abs(mat - mat.conj().T)) > HERM_TOL * scale:
                raise ValueError("density matrix is not Hermitian")
            tr = complex(np.trace(mat)).real
            if abs(tr - 1.0) > NORM_TOL:
                raise ValueError(f"trace {tr} deviates from 1 beyond {NORM_TOL}")
            evals = np.linalg.eigvalsh(0.5 * (mat + mat.conj().T))
            if evals.min() < EIG_FLOOR:
                raise ValueError(f"negative eigenvalue {evals.min()} below {EIG_FLOOR}")
        self.spec = spec
        self.entries = 0.5 * (mat + mat.conj().T)
        self.entries.setflags(write=False)

    def eigenvalues(self):
        return np.linalg.eigvalsh(self.entries)

    def purity(self) -> float:
        return float(np.real(np.trace(self.entries @ self.entries)))

    def diagonal(self):
        return np.real(np.diag(self.entries)).copy()


def ladder_ops(dim: int):
    """Single-mode (annihilation, creation, number) operators, truncated.

    a|n> = sqrt(n)|n-1>, a+|n> = sqrt(n+1)|n+1> with a+|dim-1> = 0.
    """
    if dim < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    spec = HilbertSpec((dim,))
    root = np.sqrt(np.arange(1, dim))
    a = sp.diags(root, offsets=1, shape=(dim, dim), format="csr", dtype=complex)
    adag = sp.diags(root, offsets=-1, shape=(dim, dim), format="csr", dtype=complex)
    num = sp.diags(np.arange(dim, dtype=float), 0, shape=(dim, dim),
                   format="csr", dtype=complex)
    return (ModeOperator(spec, a, "annihilation"),
            ModeOperator(spec, adag, "creation"),
            ModeOperator(spec, num, "number"))


def embed(op: ModeOperator, mode_index: int, spec: HilbertSpec) -> ModeOperator:
    """Lift a single-mode operator to I x ... x op x ... x I on ``spec``."""
    if not (0 <= mode_index < spec.n_modes):
        raise ValueError(f"mode index {mode_index} out of range for {spec}")
    d = spec.dims[mode_index]
    if op.matrix.shape != (d, d):
        raise ValueError(f"operator dim {op.matrix.shape[0]} != mode dim {d}")
    mat = sp.identity(1, dtype=complex, format="csr")
    for i, di in enumerate(spec.dims):
        factor = op.matrix if i == mode_index else sp.identity(di, dtype=complex, format="csr")
        mat = sp.kron(mat, factor, format="csr")
    return ModeOperator(spec, mat, label=f"{op.label}@mode{mode_index}")


def coherent_state(alpha: complex, dim: int) -> StateVector:
    """Single-mode coherent state |alpha> truncated to ``dim`` levels.

    Raises TruncationError when the Poisson tail above the truncation
    exceeds 1e-6, reporting a dimension that would pass.
    """
    if dim < 2:
        raise ValueError("dim must be >= 2")
    nbar = abs(alpha) ** 2
    # log-space Poisson weights; tail = 1 - retained probability
    ns = np.arange(dim)
    if nbar == 0.0:
        amps = np.zeros(dim, dtype=complex)
        amps[0] = 1.0
        return StateVector(HilbertSpec((dim,)), amps)
    logp = ns * math.log(nbar) - nbar - np.array([math.lgamma(n + 1) for n in ns])
    retained = float(np.sum(np.exp(logp)))
    tail = max(0.0, 1.0 - retained)
    if tail >= 1e-6:
        d = dim
        cum = retained
        while cum < 1.0 - 1e-6 and d < 10_000:
            cum += math.exp(d * math.log(nbar) - nbar - math.lgamma(d + 1))
            d += 1
        raise TruncationError(
            f"coherent-state tail {tail:.3e} >= 1e-6 at dim={dim}; need dim >= {d}",
            leak=tail, required_dim=d)
    phase = np.exp(1j * ns * np.angle(alpha)) if alpha != 0 else np.ones(dim)
    amps = np.exp(0.5 * logp) * phase
    amps /= np.linalg.norm(amps)
    return StateVector(HilbertSpec((dim,)), amps)


def min_coherent_dim(mean_occupation: float, tail_bound: float = 1e-6) -> int:
    """Smallest truncation passing the coherent-state tail gate for the
    given mean occupation."""
    if mean_occupation < 0.0:
        raise ValueError("mean occupation must be nonnegative")
    if mean_occupation == 0.0:
        return 2
    cum = 0.0
    d = 0
    while cum < 1.0 - tail_bound:
        cum += math.exp(d * math.log(mean_occupation) - mean_occupation
                        - math.lgamma(d + 1))
        d += 1
        if d > 100_000:
            raise RuntimeError("coherent tail search runaway")
    return max(d, 2)


def partial_trace(state, keep) -> DensityMatrix:
    """Reduced density matrix over the modes in ``keep`` (ascending order)."""
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep set must be nonempty")
    spec = state.spec
    if any(k < 0 or k >= spec.n_modes for k in keep):
        raise ValueError(f"keep indices {keep} out of range for {spec}")
    kept_dims = tuple(spec.dims[k] for k in keep)
    traced = [i for i in range(spec.n_modes) if i not in keep]
    dk = int(np.prod(kept_dims))

    if isinstance(state, StateVector):
        psi = state.tensor_view()
        perm = keep + traced
        mat = np.transpose(psi, perm).reshape(dk, -1)
        rho = mat @ mat.conj().T
    elif isinstance(state, DensityMatrix):
        nm = spec.n_modes
        t = state.entries.reshape(spec.dims + spec.dims)
        # contract each traced mode's ket index with its bra index; ``traced``
        # is ascending, so after ``count`` traces the ket axis has shifted by
        # count and the matching bra axis sits (remaining modes) further right
        for count, ax in enumerate(traced):
            a = ax - count
            t = np.trace(t, axis1=a, axis2=a + nm - count)
        rho = t.reshape(dk, dk)
    else:
        raise TypeError(f"cannot partial-trace a {type(state).__name__}")
    return DensityMatrix(HilbertSpec(kept_dims), rho)


def expectation(state, op: ModeOperator) -> complex:
    """<psi|O|psi> for a StateVector or Tr(rho O) for a DensityMatrix."""
    if isinstance(state, StateVector):
        if state.spec != op.spec:
            raise ValueError("state/operator spec mismatch")
        return complex(np.vdot(state.amplitudes, op.matrix @ state.amplitudes))
    if isinstance(state, DensityMatrix):
        if state.spec != op.spec:
            raise ValueError("state/operator spec mismatch")
        return complex(np.trace(op.matrix @ state.entries))
    raise TypeError(f"cannot take expectation on a {type(state).__name__}")
