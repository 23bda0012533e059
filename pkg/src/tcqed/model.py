"""Hamiltonians, collapse operators and the transmon dispersive shift.

Units: every frequency and rate in this module is an ordinary frequency in
MHz, matching how experimental parameters are usually quoted. The single
2*pi conversion to angular units happens inside the dynamics module.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .hilbert import (
    CompositeSpace,
    DEFAULT_DIM_CAP,
    OperatorMatrix,
    annihilation,
    creation,
    embed,
    identity,
    lowering_emitter,
    number,
)

DEFAULT_BLOCKADE_TRUNCATION = 7   # headroom above the n=4 photons seen in practice
DEFAULT_POISSON_TRUNCATION = 24   # empty-cavity coherent-state runs


class SingularParameterError(ValueError):
    """Parameter combination hits a pole of a closed-form expression."""


@dataclass(frozen=True)
class EmitterSpec:
    """Two-level emitter: frequency, cavity coupling, decay rate (MHz)."""

    freq: float
    coupling: float
    decay: float = 0.1

    def __post_init__(self):
        if self.freq <= 0:
            raise ValueError(f"emitter frequency must be > 0, got {self.freq}")
        if self.coupling < 0 or self.decay < 0:
            raise ValueError("emitter coupling and decay must be >= 0")


@dataclass(frozen=True)
class DriveSpec:
    """Coherent cavity drive: amplitude eta and tone frequency (MHz)."""

    amplitude: float
    freq: float

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError(f"drive amplitude must be >= 0, got {self.amplitude}")
        if self.freq <= 0:
            raise ValueError(f"drive frequency must be > 0, got {self.freq}")


@dataclass(frozen=True)
class WitnessSpec:
    """Dispersively coupled witness transmon.

    ``levels=2`` treats it as a qubit; ``levels=3`` keeps the second excited
    state with anharmonicity alpha (transmon ladder term -alpha/2 b+b+bb).
    """

    freq: float
    coupling: float
    anharmonicity: float
    decay: float = 0.1
    levels: int = 2

    def __post_init__(self):
        if self.freq <= 0:
            raise ValueError(f"witness frequency must be > 0, got {self.freq}")
        if self.coupling < 0 or self.decay < 0:
            raise ValueError("witness coupling and decay must be >= 0")
        if self.levels not in (2, 3):
            raise ValueError(f"witness levels must be 2 or 3, got {self.levels}")
        if self.levels == 3 and self.anharmonicity <= 0:
            raise ValueError("three-level witness requires anharmonicity > 0")


@dataclass(frozen=True)
class SystemSpec:
    """Full physical parameter set for one driven Tavis-Cummings system."""

    cavity_freq: float
    emitters: tuple[EmitterSpec, ...] = ()
    cavity_decay: float = 0.1
    drive: DriveSpec | None = None
    witness: WitnessSpec | None = None
    cavity_truncation: int = DEFAULT_BLOCKADE_TRUNCATION

    def __post_init__(self):
        object.__setattr__(self, "emitters", tuple(self.emitters))
        if self.cavity_freq <= 0:
            raise ValueError(f"cavity frequency must be > 0, got {self.cavity_freq}")
        if self.cavity_decay < 0:
            raise ValueError("cavity decay must be >= 0")
        if self.cavity_truncation < 1:
            raise ValueError("cavity truncation must be >= 1")

    @property
    def n_emitters(self) -> int:
        return len(self.emitters)

    def space(self, max_total_dim: int = DEFAULT_DIM_CAP) -> CompositeSpace:
        dims = [self.cavity_truncation + 1]
        dims += [2] * self.n_emitters
        if self.witness is not None:
            dims.append(self.witness.levels)
        return CompositeSpace(dims, max_total_dim=max_total_dim)

    def witness_index(self) -> int:
        if self.witness is None:
            raise ValueError("spec has no witness")
        return 1 + self.n_emitters

    # -- declarative config round trip ------------------------------------

    def to_dict(self) -> dict:
        out = {
            "cavity_freq": self.cavity_freq,
            "cavity_decay": self.cavity_decay,
            "cavity_truncation": self.cavity_truncation,
            "emitters": [
                {"freq": e.freq, "coupling": e.coupling, "decay": e.decay}
                for e in self.emitters
            ],
        }
        if self.drive is not None:
            out["drive"] = {"amplitude": self.drive.amplitude, "freq": self.drive.freq}
        if self.witness is not None:
            out["witness"] = {
                "freq": self.witness.freq,
                "coupling": self.witness.coupling,
                "anharmonicity": self.witness.anharmonicity,
                "decay": self.witness.decay,
                "levels": self.witness.levels,
            }
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SystemSpec":
        drive = data.get("drive")
        witness = data.get("witness")
        return cls(
            cavity_freq=float(data["cavity_freq"]),
            emitters=tuple(EmitterSpec(**e) for e in data.get("emitters", [])),
            cavity_decay=float(data.get("cavity_decay", 0.1)),
            drive=DriveSpec(**drive) if drive else None,
            witness=WitnessSpec(**witness) if witness else None,
            cavity_truncation=int(data.get("cavity_truncation", DEFAULT_BLOCKADE_TRUNCATION)),
        )

    def save(self, path):
        path = Path(path)
        if path.suffix == ".json":
            path.write_text(json.dumps(self.to_dict(), indent=2) + "\n")
        else:
            path.write_text(yaml.safe_dump(self.to_dict(), sort_keys=False))

    @classmethod
    def load(cls, path) -> "SystemSpec":
        path = Path(path)
        text = path.read_text()
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
        return cls.from_dict(data)


@dataclass(frozen=True)
class CollapseSet:
    """Collapse operators, each pre-scaled by sqrt(rate)."""

    operators: tuple[OperatorMatrix, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "operators", tuple(self.operators))

    def __iter__(self):
        return iter(self.operators)

    def __len__(self):
        return len(self.operators)


# ---------------------------------------------------------------------------
# Hamiltonian builders


def _cavity_ops(spec: SystemSpec, space: CompositeSpace):
    dim_c = spec.cavity_truncation + 1
    a = embed(annihilation(dim_c), 0, space)
    return a, a.dag()


def build_tc_hamiltonian(spec: SystemSpec) -> OperatorMatrix:
    """Lab-frame Hamiltonian: cavity + emitters + exchange couplings.

    H = w_c a+a + sum_i [w_a,i s_i+ s_i- + g_i (a+ s_i- + a s_i+)], with the
    witness appended as one more exchange-coupled subsystem when present
    (plus its transmon ladder term for a three-level witness).
    """
    space = spec.space()
    a, adag = _cavity_ops(spec, space)
    h = spec.cavity_freq * embed(number(spec.cavity_truncation + 1), 0, space)
    for i, em in enumerate(spec.emitters):
        sm = embed(lowering_emitter(), 1 + i, space)
        sp_ = sm.dag()
        h = h + em.freq * (sp_ @ sm) + em.coupling * (adag @ sm + a @ sp_)
    if spec.witness is not None:
        w = spec.witness
        idx = spec.witness_index()
        b = embed(annihilation(w.levels), idx, space)
        bdag = b.dag()
        h = h + w.freq * (bdag @ b) + w.coupling * (adag @ b + a @ bdag)
        if w.levels == 3:
            h = h - 0.5 * w.anharmonicity * (bdag @ bdag @ b @ b)
    return OperatorMatrix(space, h.entries, hermitian=True)


def total_excitation_number(spec: SystemSpec) -> OperatorMatrix:
    """N_tot = a+a + sum_i s_i+ s_i- (+ witness b+b); commutes with the TC Hamiltonian."""
    space = spec.space()
    n_tot = embed(number(spec.cavity_truncation + 1), 0, space)
    for i in range(spec.n_emitters):
        sm = embed(lowering_emitter(), 1 + i, space)
        n_tot = n_tot + sm.dag() @ sm
    if spec.witness is not None:
        b = embed(annihilation(spec.witness.levels), spec.witness_index(), space)
        n_tot = n_tot + b.dag() @ b
    return OperatorMatrix(space, n_tot.entries, hermitian=True)


def build_rotating_frame(spec: SystemSpec) -> OperatorMatrix:
    """Time-independent Hamiltonian in the frame rotating at the drive tone.

    The transformation U = exp(i w_d N_tot t) is exact because the TC
    Hamiltonian conserves total excitation number:

        H~ = H_TC - w_d N_tot + eta (a + a+)

    Emitter detuning terms are retained, so detuning sweeps stay valid; on
    resonance this reduces to Delta n_tot + couplings + drive.
    """
    if spec.drive is None:
        raise ValueError("rotating frame requires a drive")
    space = spec.space()
    a, adag = _cavity_ops(spec, space)
    h = build_tc_hamiltonian(spec) - spec.drive.freq * total_excitation_number(spec)
    h = h + spec.drive.amplitude * (a + adag)
    return OperatorMatrix(space, h.entries, hermitian=True)


def build_collapse_set(spec: SystemSpec) -> CollapseSet:
    """{sqrt(kappa) a} + {sqrt(gamma_i) sigma_i^-} (+ witness decay), embedded."""
    space = spec.space()
    ops = []
    if spec.cavity_decay > 0:
        a = embed(annihilation(spec.cavity_truncation + 1), 0, space)
        ops.append(math.sqrt(spec.cavity_decay) * a)
    for i, em in enumerate(spec.emitters):
        if em.decay > 0:
            sm = embed(lowering_emitter(), 1 + i, space)
            ops.append(math.sqrt(em.decay) * sm)
    if spec.witness is not None and spec.witness.decay > 0:
        b = embed(annihilation(spec.witness.levels), spec.witness_index(), space)
        ops.append(math.sqrt(spec.witness.decay) * b)
    return CollapseSet(tuple(ops))


# ---------------------------------------------------------------------------
# dispersive witness model


def chi(g_w: float, delta_w: float, alpha: float) -> float:
    """Transmon dispersive shift chi = g_w^2 / (Delta_w (1 - Delta_w/alpha)).

    ``alpha=math.inf`` recovers the two-level limit g_w^2/Delta_w.
    """
    if delta_w == 0:
        raise SingularParameterError("dispersive shift undefined at delta_w = 0")
    if math.isinf(alpha):
        return g_w * g_w / delta_w
    if alpha == 0 or delta_w == alpha:
        raise SingularParameterError(
            f"dispersive shift singular at delta_w = alpha = {alpha}"
        )
    return g_w * g_w / (delta_w * (1.0 - delta_w / alpha))


def chi_tls(g_w: float, delta_w: float) -> float:
    """Two-level-system dispersive shift g_w^2/Delta_w."""
    if delta_w == 0:
        raise SingularParameterError("dispersive shift undefined at delta_w = 0")
    return g_w * g_w / delta_w


def lamb_shifted_freq(omega_w: float, g_w: float, delta_w: float) -> float:
    """Lamb-shifted witness frequency w~_w = w_w + g_w^2/Delta_w."""
    return omega_w + chi_tls(g_w, delta_w)


def build_dispersive(spec: SystemSpec) -> OperatorMatrix:
    """Dispersive-limit Hamiltonian of cavity + witness:

        H = w_c a+a + (w~_w + 2 chi a+a) s+s-

    on the two-subsystem space [cavity, witness-as-qubit]. The blockade
    emitters do not appear; this is the far-detuned readout model.
    """
    if spec.witness is None:
        raise ValueError("dispersive Hamiltonian requires a witness")
    w = spec.witness
    delta_w = w.freq - spec.cavity_freq
    alpha = w.anharmonicity if w.levels == 3 else math.inf
    chi_val = chi(w.coupling, delta_w, alpha)
    omega_tilde = lamb_shifted_freq(w.freq, w.coupling, delta_w)

    dim_c = spec.cavity_truncation + 1
    space = CompositeSpace((dim_c, 2))
    n_cav = embed(number(dim_c), 0, space)
    sm = embed(lowering_emitter(), 1, space)
    n_w = sm.dag() @ sm
    h = spec.cavity_freq * n_cav + omega_tilde * n_w + 2.0 * chi_val * (n_cav @ n_w)
    return OperatorMatrix(space, h.entries, hermitian=True)
