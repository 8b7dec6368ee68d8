"""Measurement machinery for state vectors and density matrices.

Measurement sets {M_k} with sum_k M_k^dag M_k = I, the positive elements
F_k = M_k^dag M_k they induce, projective measurements from observables,
expectations and standard deviations, the non-selective channel, and seeded
outcome sampling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    STRUCT_TOL,
    DensityMatrix,
    Operator,
    StateVector,
    as_matrix,
    as_vector,
    dag,
)

COMPLETENESS_TOL = 1e-9
COLLAPSE_FLOOR = 1e-12  # below this, renormalization amplifies noise beyond meaning


def _as_operator_tuple(ops) -> tuple[Operator, ...]:
    out = []
    for op in ops:
        out.append(op if isinstance(op, Operator) else Operator(as_matrix(op)))
    if not out:
        raise ValueError("need at least one operator")
    d = out[0].d
    if any(op.d != d for op in out):
        raise ValueError("operators must share one dimension")
    return tuple(out)


@dataclass(frozen=True, eq=False)
class MeasurementSet:
    """Ordered operators M_k satisfying the completeness constraint."""

    operators: tuple
    completeness_tol: float = field(default=COMPLETENESS_TOL, repr=False, compare=False)

    def __post_init__(self):
        ops = _as_operator_tuple(self.operators)
        object.__setattr__(self, "operators", ops)
        total = sum(dag(op.matrix) @ op.matrix for op in ops)
        dev = float(np.max(np.abs(total - np.eye(ops[0].d))))
        if dev > self.completeness_tol:
            raise ValueError(
                f"measurement operators violate completeness: "
                f"max |sum M^dag M - I| = {dev:.3e}"
            )

    @property
    def d(self) -> int:
        return self.operators[0].d

    def __len__(self) -> int:
        return len(self.operators)


@dataclass(frozen=True, eq=False)
class Povm:
    """Hermitian PSD elements F_k summing to the identity."""

    elements: tuple
    completeness_tol: float = field(default=COMPLETENESS_TOL, repr=False, compare=False)
    psd_floor: float = field(default=-1e-9, repr=False, compare=False)

    def __post_init__(self):
        els = _as_operator_tuple(self.elements)
        checked = []
        for f in els:
            m = f.matrix
            if float(np.max(np.abs(m - dag(m)))) > STRUCT_TOL:
                raise ValueError("POVM element is not Hermitian")
            if float(np.min(np.linalg.eigvalsh(m))) < self.psd_floor:
                raise ValueError("POVM element is not positive semidefinite")
            checked.append(Operator(m, kind="hermitian"))
        object.__setattr__(self, "elements", tuple(checked))
        total = sum(f.matrix for f in checked)
        dev = float(np.max(np.abs(total - np.eye(checked[0].d))))
        if dev > self.completeness_tol:
            raise ValueError(f"POVM elements do not sum to I: deviation {dev:.3e}")

    @property
    def d(self) -> int:
        return self.elements[0].d


class Observable:
    """Hermitian operator with its spectral decomposition cached.

    Eigenvalues are ascending; each eigenvector's phase is fixed by making its
    first significantly nonzero component positive real, so degenerate spectra
    still decompose deterministically.
    """

    def __init__(self, matrix, herm_tol: float = STRUCT_TOL):
        m = as_matrix(matrix)
        res = float(np.max(np.abs(m - dag(m))))
        if res > herm_tol:
            raise ValueError(f"observable must be Hermitian, residual {res:.3e}")
        w, v = np.linalg.eigh(m)
        v = _fix_eigenvector_phases(v)
        self.matrix = m
        self.eigenvalues = w
        self.eigenvectors = v
        recon = float(np.max(np.abs((v * w) @ dag(v) - m)))
        if recon > 1e-9:
            raise ValueError(f"spectral reconstruction residual {recon:.3e}")
        ortho = float(np.max(np.abs(dag(v) @ v - np.eye(m.shape[0]))))
        if ortho > STRUCT_TOL:
            raise ValueError(f"eigenvectors not orthonormal, residual {ortho:.3e}")

    @property
    def d(self) -> int:
        return self.matrix.shape[0]


def _fix_eigenvector_phases(v: np.ndarray, thresh: float = 1e-8) -> np.ndarray:
    v = v.copy()
    for k in range(v.shape[1]):
        col = v[:, k]
        idx = np.flatnonzero(np.abs(col) > thresh)
        j = idx[0] if idx.size else int(np.argmax(np.abs(col)))
        phase = col[j] / abs(col[j])
        v[:, k] = col / phase
    return v


def _as_observable_matrix(a) -> np.ndarray:
    if isinstance(a, Observable):
        return a.matrix
    return as_matrix(a)


def validate_measurement_set(ops) -> MeasurementSet:
    """Check the completeness constraint and return the validated set."""
    return MeasurementSet(tuple(ops))


def outcome_probabilities(ms: MeasurementSet, psi) -> np.ndarray:
    """Outcome probabilities p_k = |M_k psi|^2."""
    v = as_vector(psi)
    if v.size != ms.d:
        raise ValueError(f"dimension mismatch {v.size} vs {ms.d}")
    p = np.array([float(np.linalg.norm(op.matrix @ v) ** 2) for op in ms.operators])
    return p


def collapse_state(ms: MeasurementSet, psi, k: int,
                   floor: float = COLLAPSE_FLOOR) -> StateVector:
    """Post-measurement state M_k psi / sqrt(p_k) for observed outcome k."""
    v = as_vector(psi)
    mk = ms.operators[k].matrix
    out = mk @ v
    p = float(np.linalg.norm(out) ** 2)
    if p <= floor:
        raise ValueError(f"outcome {k} has probability {p:.3e}; collapse undefined")
    return StateVector(out / np.sqrt(p), dims=getattr(psi, "dims", None))


def density_outcome_probabilities(ms: MeasurementSet, rho) -> np.ndarray:
    """Outcome probabilities p_k = Tr(M_k^dag M_k rho)."""
    m = as_matrix(rho)
    if m.shape[0] != ms.d:
        raise ValueError(f"dimension mismatch {m.shape[0]} vs {ms.d}")
    p = np.array([np.trace(dag(op.matrix) @ op.matrix @ m).real for op in ms.operators])
    return p


def density_collapse(ms: MeasurementSet, rho, k: int,
                     floor: float = COLLAPSE_FLOOR) -> DensityMatrix:
    """Post-measurement density M_k rho M_k^dag / p_k for observed outcome k."""
    m = as_matrix(rho)
    mk = ms.operators[k].matrix
    num = mk @ m @ dag(mk)
    p = float(np.trace(num).real)
    if p <= floor:
        raise ValueError(f"outcome {k} has probability {p:.3e}; collapse undefined")
    return DensityMatrix(num / p, dims=getattr(rho, "dims", None))


def povm_from(ms: MeasurementSet) -> Povm:
    """The positive elements F_k = M_k^dag M_k of a measurement set."""
    els = []
    for op in ms.operators:
        f = dag(op.matrix) @ op.matrix
        els.append(Operator(0.5 * (f + dag(f)), kind="hermitian"))
    return Povm(tuple(els))


def projective_from_observable(a: Observable) -> tuple[MeasurementSet, np.ndarray]:
    """Rank-1 projectors P_k onto the eigenvectors of an observable.

    Returns the projective measurement set together with the eigenvalues, in
    matching ascending order. Degenerate eigenvalues yield one projector per
    eigenvector of the deterministically phase-fixed eigenbasis.
    """
    if not isinstance(a, Observable):
        a = Observable(a)
    projs = []
    for k in range(a.d):
        v = a.eigenvectors[:, k]
        p = np.outer(v, v.conj())
        projs.append(Operator(0.5 * (p + dag(p)), kind="hermitian"))
    return MeasurementSet(tuple(projs)), a.eigenvalues.copy()


def expectation(a, psi, imag_tol: float = STRUCT_TOL) -> float:
    """Expected value psi^dag A psi of an observable in a pure state."""
    m = _as_observable_matrix(a)
    v = as_vector(psi)
    if v.size != m.shape[0]:
        raise ValueError(f"dimension mismatch {v.size} vs {m.shape[0]}")
    val = complex(np.vdot(v, m @ v))
    if abs(val.imag) > imag_tol:
        raise ValueError(f"expectation has imaginary residue {val.imag:.3e}")
    return val.real


def expectation_density(a, rho, imag_tol: float = STRUCT_TOL) -> float:
    """Expected value Tr(A rho) of an observable in a mixed state."""
    m = _as_observable_matrix(a)
    r = as_matrix(rho)
    if r.shape != m.shape:
        raise ValueError(f"dimension mismatch {r.shape} vs {m.shape}")
    val = complex(np.trace(m @ r))
    if abs(val.imag) > imag_tol:
        raise ValueError(f"expectation has imaginary residue {val.imag:.3e}")
    return val.real


def std_dev(a, psi, radicand_floor: float = -1e-12) -> float:
    """Standard deviation sqrt(<A^2> - <A>^2) of an observable in a pure state."""
    m = _as_observable_matrix(a)
    mean = expectation(m, psi)
    second = expectation(m @ m, psi)
    radicand = second - mean * mean
    if radicand < radicand_floor:
        raise ValueError(f"variance radicand {radicand:.3e} below floor; numerical fault")
    return float(np.sqrt(max(radicand, 0.0)))


def nonselective_channel(ms: MeasurementSet, rho) -> DensityMatrix:
    """Measure without learning the outcome: rho -> sum_k M_k rho M_k^dag."""
    m = as_matrix(rho)
    if m.shape[0] != ms.d:
        raise ValueError(f"dimension mismatch {m.shape[0]} vs {ms.d}")
    out = np.zeros_like(m)
    for op in ms.operators:
        out += op.matrix @ m @ dag(op.matrix)
    return DensityMatrix(out, dims=getattr(rho, "dims", None))


def sample_outcome(ms: MeasurementSet, psi, rng_seed: int) -> int:
    """Draw one outcome index by inverse CDF on a seeded deterministic PRNG."""
    p = outcome_probabilities(ms, psi)
    cdf = np.cumsum(p)
    r = np.random.default_rng(int(rng_seed)).random()
    k = int(np.searchsorted(cdf, r * cdf[-1], side="right"))
    return min(k, len(p) - 1)
