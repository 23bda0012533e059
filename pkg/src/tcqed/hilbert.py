"""Operator algebra on truncated composite Hilbert spaces.

Subsystem ordering is fixed throughout the package: the cavity is always
subsystem 0, followed by the two-level emitters, followed by the witness
(when modeled). Operators are stored sparse (CSR); density matrices dense.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

DEFAULT_DIM_CAP = 4096

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-9
POSITIVITY_TOL = 1e-8


class DimensionError(ValueError):
    """Invalid or incompatible subsystem dimension."""


class SpaceMismatchError(ValueError):
    """Operands live on different composite spaces."""


class CompositeSpace:
    """Ordered tensor product of finite subsystems.

    Parameters
    ----------
    dims : sequence of int
        Subsystem dimensions, each >= 2, cavity first. The cavity dimension
        is the Fock truncation n_max + 1.
    max_total_dim : int
        Cap on the product of dims; keeps desk-scale solves feasible.
    """

    __slots__ = ("dims", "total_dim")

    def __init__(self, dims, max_total_dim: int = DEFAULT_DIM_CAP):
        dims = tuple(int(d) for d in dims)
        if len(dims) == 0:
            raise DimensionError("composite space needs at least one subsystem")
        for d in dims:
            if d < 2:
                raise DimensionError(f"subsystem dimension {d} < 2")
        total = int(np.prod(dims))
        if total > max_total_dim:
            raise DimensionError(
                f"total dimension {total} exceeds cap {max_total_dim}"
            )
        self.dims = dims
        self.total_dim = total

    @property
    def n_subsystems(self) -> int:
        return len(self.dims)

    def __eq__(self, other):
        return isinstance(other, CompositeSpace) and self.dims == other.dims

    def __hash__(self):
        return hash(self.dims)

    def __repr__(self):
        return f"CompositeSpace(dims={list(self.dims)})"


def _as_sparse(entries) -> sp.csr_matrix:
    if sp.issparse(entries):
        return entries.tocsr().astype(complex)
    return sp.csr_matrix(np.asarray(entries, dtype=complex))


@dataclass(frozen=True)
class OperatorMatrix:
    """Sparse complex operator attached to a composite space."""

    space: CompositeSpace
    entries: sp.csr_matrix
    hermitian: bool | None = field(default=None, compare=False)

    def __post_init__(self):
        entries = _as_sparse(self.entries)
        object.__setattr__(self, "entries", entries)
        d = self.space.total_dim
        if entries.shape != (d, d):
            raise DimensionError(
                f"operator shape {entries.shape} does not match space dimension {d}"
            )
        if self.hermitian:
            dev = _max_abs(entries - entries.getH())
            if dev >= HERMITICITY_TOL:
                raise ValueError(f"operator asserted Hermitian but max|A-A^+| = {dev:.3g}")

    def dag(self) -> "OperatorMatrix":
        return OperatorMatrix(self.space, self.entries.getH().tocsr(), self.hermitian)

    def to_dense(self) -> np.ndarray:
        return self.entries.toarray()

    def is_hermitian(self, tol: float = HERMITICITY_TOL) -> bool:
        return _max_abs(self.entries - self.entries.getH()) < tol

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        self._check_space(other)
        return OperatorMatrix(self.space, self.entries + other.entries)

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        self._check_space(other)
        return OperatorMatrix(self.space, self.entries - other.entries)

    def __mul__(self, scalar) -> "OperatorMatrix":
        return OperatorMatrix(self.space, self.entries * complex(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "OperatorMatrix":
        return OperatorMatrix(self.space, -self.entries)

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        self._check_space(other)
        return OperatorMatrix(self.space, (self.entries @ other.entries).tocsr())

    def _check_space(self, other: "OperatorMatrix"):
        if self.space != other.space:
            raise SpaceMismatchError(f"{self.space} vs {other.space}")

    def __repr__(self):
        return f"OperatorMatrix(space={self.space}, nnz={self.entries.nnz})"


def _max_abs(m) -> float:
    m = m.tocoo() if sp.issparse(m) else sp.coo_matrix(m)
    return float(np.max(np.abs(m.data))) if m.nnz else 0.0


class DensityState:
    """Dense density matrix on a composite space.

    Construction validates unit trace, Hermiticity and numerical positivity
    (eigenvalues >= -1e-8); pass ``validate=False`` only for intermediate
    states whose invariants are checked by the caller.
    """

    __slots__ = ("space", "matrix")

    def __init__(self, space: CompositeSpace, matrix, validate: bool = True):
        matrix = np.asarray(matrix, dtype=complex)
        d = space.total_dim
        if matrix.shape != (d, d):
            raise DimensionError(
                f"density matrix shape {matrix.shape} does not match space dimension {d}"
            )
        self.space = space
        self.matrix = matrix
        if validate:
            self.validate()

    def validate(self):
        tr = np.trace(self.matrix)
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"trace {tr} deviates from 1 by more than {TRACE_TOL}")
        herm_dev = np.max(np.abs(self.matrix - self.matrix.conj().T))
        if herm_dev > 1e-10:
            raise ValueError(f"non-Hermitian density matrix, max deviation {herm_dev:.3g}")
        evals = np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))
        if evals.min() < -POSITIVITY_TOL:
            raise ValueError(f"negative eigenvalue {evals.min():.3g} below -{POSITIVITY_TOL}")

    def __repr__(self):
        return f"DensityState(space={self.space})"


@dataclass(frozen=True)
class PhotonDistribution:
    """Cavity photon-number distribution P(n), n = 0..n_max."""

    probabilities: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        object.__setattr__(self, "probabilities", p)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("probabilities must be a nonempty 1-d vector")
        if p.min() < -POSITIVITY_TOL:
            raise ValueError(f"P(n) entry {p.min():.3g} below -{POSITIVITY_TOL}")
        if abs(p.sum() - 1.0) > TRACE_TOL:
            raise ValueError(f"P(n) sums to {p.sum()}, not 1")

    @property
    def n_max(self) -> int:
        return self.probabilities.size - 1

    def mean(self) -> float:
        return float(np.arange(self.probabilities.size) @ self.probabilities)

    def clipped(self) -> "PhotonDistribution":
        """Copy with tiny negative entries zeroed and the sum renormalized."""
        p = np.clip(self.probabilities, 0.0, None)
        return PhotonDistribution(p / p.sum())

    def __len__(self):
        return self.probabilities.size

    def __getitem__(self, n):
        return self.probabilities[n]


# ---------------------------------------------------------------------------
# elementary operators


def annihilation(dim: int) -> OperatorMatrix:
    """Bosonic lowering operator on a dim-level truncated Fock space.

    Matrix elements <n-1|a|n> = sqrt(n); the commutator [a, a^+] = 1 holds
    everywhere except the final Fock row, which the truncation cuts off.
    """
    if dim < 2:
        raise DimensionError(f"annihilation needs dim >= 2, got {dim}")
    data = np.sqrt(np.arange(1, dim, dtype=float))
    mat = sp.diags(data, offsets=1, shape=(dim, dim), dtype=complex).tocsr()
    return OperatorMatrix(CompositeSpace((dim,)), mat)


def creation(dim: int) -> OperatorMatrix:
    return annihilation(dim).dag()


def number(dim: int) -> OperatorMatrix:
    if dim < 2:
        raise DimensionError(f"number operator needs dim >= 2, got {dim}")
    mat = sp.diags(np.arange(dim, dtype=float), dtype=complex).tocsr()
    return OperatorMatrix(CompositeSpace((dim,)), mat, hermitian=True)


def lowering_emitter() -> OperatorMatrix:
    """Two-level lowering operator sigma^- with <g|sigma^-|e> = 1 (|g> = index 0)."""
    return annihilation(2)


def identity(space: CompositeSpace) -> OperatorMatrix:
    return OperatorMatrix(space, sp.identity(space.total_dim, dtype=complex, format="csr"),
                          hermitian=True)


def embed(op: OperatorMatrix, index: int, space: CompositeSpace) -> OperatorMatrix:
    """Embed a single-subsystem operator at position ``index``: I x..x op x..x I."""
    if not 0 <= index < space.n_subsystems:
        raise IndexError(f"subsystem index {index} out of range for {space}")
    d_op = op.space.total_dim
    if d_op != space.dims[index]:
        raise DimensionError(
            f"operator dimension {d_op} does not match dims[{index}] = {space.dims[index]}"
        )
    left = int(np.prod(space.dims[:index], dtype=int)) if index > 0 else 1
    right = int(np.prod(space.dims[index + 1:], dtype=int)) if index + 1 < space.n_subsystems else 1
    mat = op.entries
    if left > 1:
        mat = sp.kron(sp.identity(left, dtype=complex), mat, format="csr")
    if right > 1:
        mat = sp.kron(mat, sp.identity(right, dtype=complex), format="csr")
    return OperatorMatrix(space, mat.tocsr(), op.hermitian)


# ---------------------------------------------------------------------------
# expectation values and reductions


def expectation(state: DensityState, op: OperatorMatrix) -> complex:
    """Tr(rho A); real to within 1e-10 when A is Hermitian."""
    if state.space != op.space:
        raise SpaceMismatchError(f"{state.space} vs {op.space}")
    # Tr(A rho) = sum_ij A_ij rho_ji
    return complex(op.entries.multiply(state.matrix.T).sum())


def partial_trace(state: DensityState, keep: int) -> DensityState:
    """Reduced density matrix of subsystem ``keep``, tracing out the rest."""
    dims = state.space.dims
    if not 0 <= keep < len(dims):
        raise IndexError(f"subsystem index {keep} out of range for {state.space}")
    k = len(dims)
    rho = state.matrix.reshape(dims + dims)
    # trace out every axis pair except `keep`, starting from the back so the
    # axis bookkeeping stays simple
    for i in reversed(range(k)):
        if i == keep:
            continue
        n_axes = rho.ndim // 2
        rho = np.trace(rho, axis1=i, axis2=i + n_axes)
    reduced_space = CompositeSpace((dims[keep],))
    return DensityState(reduced_space, rho, validate=False)


def cavity_distribution(state: DensityState) -> PhotonDistribution:
    """P(n): diagonal of the cavity's reduced density matrix (subsystem 0)."""
    reduced = partial_trace(state, keep=0)
    return PhotonDistribution(np.real(np.diag(reduced.matrix)))
