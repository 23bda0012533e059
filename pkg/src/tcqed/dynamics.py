"""Lindblad open-system engine: Liouvillians, steady states, time evolution.

Unit convention: Hamiltonians and rates enter in ordinary MHz (matching the
model module); the Liouvillian multiplies everything by 2*pi once, so its
generator acts in angular units and time is measured in microseconds. An
undriven cavity prepared in |1> then decays as P_1(t) = exp(-2 pi kappa t).

Vectorization is column-stacking: vec(rho) = rho.reshape(-1, order='F'),
so vec(A rho B) = (B^T kron A) vec(rho).
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .hilbert import (
    CompositeSpace,
    DensityState,
    OperatorMatrix,
    PhotonDistribution,
    SpaceMismatchError,
    annihilation,
    cavity_distribution,
    embed,
    expectation,
)
from .model import CollapseSet

TRUNCATION_TAIL_WARN = 1e-6
VACUUM_EPS = 1e-12


class NonUniqueSteadyStateError(RuntimeError):
    """The Liouvillian null space is degenerate (or numerically singular)."""


class UndefinedCorrelationError(ValueError):
    """Correlation function of an (effectively) vacuum state."""


class IntegratorError(RuntimeError):
    """Time evolution failed to preserve the state invariants."""


def vectorize(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho, dtype=complex).reshape(-1, order="F")


def unvectorize(vec: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(vec, dtype=complex).reshape((dim, dim), order="F")


@dataclass(frozen=True)
class Liouvillian:
    """Sparse superoperator L acting on column-stacked density matrices."""

    space: CompositeSpace
    superoperator: sp.csr_matrix

    def __post_init__(self):
        d2 = self.space.total_dim ** 2
        if self.superoperator.shape != (d2, d2):
            raise SpaceMismatchError(
                f"superoperator shape {self.superoperator.shape}, expected {(d2, d2)}"
            )

    @property
    def dim(self) -> int:
        return self.space.total_dim

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """L[rho] as a matrix; the reference semantics for all identities."""
        return unvectorize(self.superoperator @ vectorize(rho), self.dim)

    def scale(self) -> float:
        """Magnitude of the largest superoperator entry; residual yardstick."""
        data = self.superoperator.data
        return float(np.max(np.abs(data))) if data.size else 0.0


def build_liouvillian(H: OperatorMatrix, collapse: CollapseSet | list | tuple) -> Liouvillian:
    """Assemble L[rho] = -i[H, rho] + sum_A (A rho A+ - {A+A, rho}/2).

    H and the sqrt(rate)-scaled collapse operators are given in MHz; the
    assembled superoperator carries the single 2*pi factor.
    """
    space = H.space
    d = space.total_dim
    eye = sp.identity(d, dtype=complex, format="csr")
    h = H.entries
    L = -1j * (sp.kron(eye, h) - sp.kron(h.T, eye))
    ops = collapse.operators if isinstance(collapse, CollapseSet) else tuple(collapse)
    for c in ops:
        if c.space != space:
            raise SpaceMismatchError(f"collapse operator on {c.space}, Hamiltonian on {space}")
        a = c.entries
        adag_a = (a.getH() @ a).tocsr()
        L = L + sp.kron(a.conj(), a) \
              - 0.5 * sp.kron(eye, adag_a) \
              - 0.5 * sp.kron(adag_a.T, eye)
    return Liouvillian(space, (2.0 * np.pi * L).tocsr())


@dataclass(frozen=True)
class SteadyStateResult:
    """Steady state plus the solve diagnostics."""

    state: DensityState
    residual: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def distribution(self) -> PhotonDistribution:
        return cavity_distribution(self.state)


def steadystate(L: Liouvillian, residual_rtol: float = 1e-8,
                warn_truncation: bool = True) -> SteadyStateResult:
    """Unique null vector of L, normalized to unit trace.

    Solves the vectorized linear system with one row replaced by the trace
    constraint (direct sparse LU). The residual max|L[rho]| must come out
    below ``residual_rtol`` times the largest Liouvillian entry, otherwise
    the null space is treated as degenerate.
    """
    d = L.dim
    d2 = d * d
    trace_indices = np.arange(d) * (d + 1)

    # weight the trace row like a typical Liouvillian row to keep the
    # replaced system well conditioned
    scale = L.scale()
    weight = scale if scale > 0 else 1.0
    trace_row = sp.csr_matrix(
        (np.full(d, weight, dtype=complex), (np.zeros(d, dtype=int), trace_indices)),
        shape=(1, d2),
    )
    system = sp.vstack([trace_row, L.superoperator[1:, :]], format="csc")
    rhs = np.zeros(d2, dtype=complex)
    rhs[0] = weight

    with warnings.catch_warnings():
        warnings.simplefilter("error", spla.MatrixRankWarning)
        try:
            solution = spla.spsolve(system, rhs)
        except (spla.MatrixRankWarning, RuntimeError) as exc:
            raise NonUniqueSteadyStateError(
                "steady-state system is singular; the Liouvillian null space "
                "is degenerate (is there any dissipation?)"
            ) from exc
    if not np.all(np.isfinite(solution)):
        raise NonUniqueSteadyStateError("steady-state solve returned non-finite entries")

    rho = unvectorize(solution, d)
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real

    residual = float(np.max(np.abs(L.apply(rho))))
    if scale > 0 and residual > residual_rtol * scale:
        raise NonUniqueSteadyStateError(
            f"steady-state residual {residual:.3g} above {residual_rtol:.1g} * scale {scale:.3g}"
        )

    rho = _repair_positivity(rho)
    state = DensityState(L.space, rho)
    tail = float(cavity_distribution(state).probabilities[-1])
    if warn_truncation and tail > TRUNCATION_TAIL_WARN:
        warnings.warn(
            f"truncation tail P(n_max) = {tail:.3g} above {TRUNCATION_TAIL_WARN:.1g}; "
            "increase the cavity truncation", UserWarning, stacklevel=2)
    diagnostics = {"truncation_tail": tail, "method": "direct", "scale": scale}
    return SteadyStateResult(state=state, residual=residual, diagnostics=diagnostics)


def _repair_positivity(rho: np.ndarray, floor: float = -1e-8) -> np.ndarray:
    """Clip eigenvalues in [floor, 0) to zero and renormalize; anything more
    negative is a genuine solver failure and is left for validation to catch."""
    evals, evecs = np.linalg.eigh(rho)
    if evals.min() >= 0.0:
        return rho
    if evals.min() < floor:
        return rho
    clipped = np.clip(evals, 0.0, None)
    rho = (evecs * clipped) @ evecs.conj().T
    return rho / np.trace(rho).real


def evolve(rho0: DensityState, L: Liouvillian, times) -> list[DensityState]:
    """Propagate rho(t) = exp(L t) rho(0) at the requested times (microseconds).

    Uses Krylov-scaled sparse matrix exponentials segment by segment; the
    trace must stay within 1e-8 of one throughout.
    """
    if rho0.space != L.space:
        raise SpaceMismatchError(f"{rho0.space} vs {L.space}")
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("times must be a nonempty 1-d sequence")
    if times[0] < 0 or np.any(np.diff(times) < 0):
        raise ValueError("times must be ascending and start at >= 0")

    out: list[DensityState] = []
    vec = vectorize(rho0.matrix)
    t_prev = 0.0
    op = L.superoperator.tocsc()
    for t in times:
        dt = t - t_prev
        if dt > 0:
            vec = spla.expm_multiply(op * dt, vec)
        t_prev = t
        rho = unvectorize(vec, L.dim)
        rho = 0.5 * (rho + rho.conj().T)
        tr = np.trace(rho).real
        if abs(tr - 1.0) > 1e-8:
            raise IntegratorError(f"trace drifted to {tr} at t = {t}")
        out.append(DensityState(L.space, rho, validate=False))
    return out


def expectation_trace(states: list[DensityState], op: OperatorMatrix) -> np.ndarray:
    """Expectation value of ``op`` along a trajectory, as a real array."""
    return np.array([expectation(s, op).real for s in states])


# ---------------------------------------------------------------------------
# correlation functions


def _cavity_number_ops(space: CompositeSpace) -> tuple[OperatorMatrix, OperatorMatrix]:
    a = embed(annihilation(space.dims[0]), 0, space)
    adag = a.dag()
    n_op = adag @ a
    n2_op = adag @ adag @ a @ a
    return n_op, n2_op


def g2_from_state(state: DensityState, eps: float = VACUUM_EPS) -> float:
    """Equal-time two-photon correlation <a+a+aa> / <a+a>^2 via the
    embedded cavity operators (the operator route)."""
    n_op, n2_op = _cavity_number_ops(state.space)
    mean_n = expectation(state, n_op).real
    if mean_n <= eps:
        raise UndefinedCorrelationError(f"<n> = {mean_n:.3g} is vacuum within eps = {eps:.1g}")
    return expectation(state, n2_op).real / mean_n**2


def gm_from_distribution(P: PhotonDistribution, m: int, eps: float = VACUUM_EPS) -> float:
    """m-photon correlation g^(m)(0) from a photon-number distribution:

        g^(m) = sum_n n(n-1)...(n-m+1) P(n) / (sum_n n P(n))^m
    """
    if m < 2:
        raise ValueError(f"correlation order must be >= 2, got {m}")
    p = P.probabilities
    n = np.arange(p.size, dtype=float)
    mean_n = float(n @ p)
    if mean_n <= eps:
        raise UndefinedCorrelationError(f"<n> = {mean_n:.3g} is vacuum within eps = {eps:.1g}")
    falling = np.ones_like(n)
    for i in range(m):
        falling = falling * (n - i)
    return float(falling @ p) / mean_n**m
