"""States, density matrices, operators, and composite-system algebra.

Dense complex double precision throughout; hbar = 1 and all frequencies are
angular. Structural invariants (norm, Hermiticity, trace, positivity) are
checked at construction with per-call configurable tolerances; operations may
assume their inputs are valid and only re-validate outputs they synthesize.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

STRUCT_TOL = 1e-10   # default tolerance for norm / Hermiticity / trace checks
UNITARY_TOL = 1e-9   # default tolerance for U^dag U = I
PSD_FLOOR = -1e-9    # default eigenvalue floor for positive semidefiniteness

_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def dag(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return a.conj().T


def as_matrix(x) -> np.ndarray:
    """Coerce an Operator, DensityMatrix, or array-like to a complex square array."""
    m = getattr(x, "matrix", x)
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m


def as_vector(x) -> np.ndarray:
    """Coerce a StateVector or array-like to a flat complex array."""
    v = getattr(x, "amplitudes", x)
    return np.asarray(v, dtype=complex).reshape(-1)


def _frozen_array(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=complex)
    out.setflags(write=False)
    return out


class CompositeDims(tuple):
    """Ordered subsystem dimensions, each >= 2."""

    def __new__(cls, dims, total: int | None = None):
        t = super().__new__(cls, tuple(int(k) for k in dims))
        if not t or any(k < 2 for k in t):
            raise ValueError(f"subsystem dimensions must all be >= 2, got {tuple(t)}")
        if total is not None and math.prod(t) != total:
            raise ValueError(
                f"subsystem dims {tuple(t)} have product {math.prod(t)}, "
                f"but the annotated object has dimension {total}"
            )
        return t

    @property
    def total(self) -> int:
        return math.prod(self)


@dataclass(frozen=True, eq=False)
class StateVector:
    """Unit-norm complex amplitude vector, optionally split into subsystems."""

    amplitudes: np.ndarray
    dims: CompositeDims | None = None
    norm_tol: float = field(default=STRUCT_TOL, repr=False, compare=False)

    def __post_init__(self):
        v = _frozen_array(np.asarray(self.amplitudes).reshape(-1))
        object.__setattr__(self, "amplitudes", v)
        if self.dims is not None:
            object.__setattr__(self, "dims", CompositeDims(self.dims, total=v.size))
        nrm = float(np.linalg.norm(v))
        if abs(nrm - 1.0) > self.norm_tol:
            raise ValueError(
                f"state vector norm {nrm!r} deviates from 1 beyond tol {self.norm_tol}"
            )

    @property
    def d(self) -> int:
        return self.amplitudes.size


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, trace-one, positive-semidefinite matrix describing a quantum state."""

    matrix: np.ndarray
    dims: CompositeDims | None = None
    herm_tol: float = field(default=STRUCT_TOL, repr=False, compare=False)
    trace_tol: float = field(default=STRUCT_TOL, repr=False, compare=False)
    psd_floor: float = field(default=PSD_FLOOR, repr=False, compare=False)

    def __post_init__(self):
        m = _frozen_array(as_matrix(self.matrix))
        object.__setattr__(self, "matrix", m)
        if self.dims is not None:
            object.__setattr__(self, "dims", CompositeDims(self.dims, total=m.shape[0]))
        herm = float(np.max(np.abs(m - dag(m))))
        if herm > self.herm_tol:
            raise ValueError(f"density matrix not Hermitian: residual {herm:.3e}")
        tr = complex(np.trace(m))
        if abs(tr - 1.0) > self.trace_tol:
            raise ValueError(f"density matrix trace {tr} deviates from 1")
        lo = float(np.min(np.linalg.eigvalsh(m)))
        if lo < self.psd_floor:
            raise ValueError(
                f"density matrix has eigenvalue {lo:.3e} below floor {self.psd_floor}"
            )

    @property
    def d(self) -> int:
        return self.matrix.shape[0]


_KIND_TOL = {"hermitian": STRUCT_TOL, "unitary": UNITARY_TOL}


@dataclass(frozen=True, eq=False)
class Operator:
    """Complex square matrix tagged general, hermitian, or unitary."""

    matrix: np.ndarray
    kind: str = "general"
    dims: CompositeDims | None = None
    tol: float | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        m = _frozen_array(as_matrix(self.matrix))
        object.__setattr__(self, "matrix", m)
        if self.kind not in ("general", "hermitian", "unitary"):
            raise ValueError(f"unknown operator kind {self.kind!r}")
        if self.dims is not None:
            object.__setattr__(self, "dims", CompositeDims(self.dims, total=m.shape[0]))
        tol = self.tol if self.tol is not None else _KIND_TOL.get(self.kind)
        if self.kind == "hermitian":
            res = float(np.max(np.abs(m - dag(m))))
            if res > tol:
                raise ValueError(f"operator tagged hermitian has residual {res:.3e}")
        elif self.kind == "unitary":
            res = float(np.max(np.abs(dag(m) @ m - np.eye(m.shape[0]))))
            if res > tol:
                raise ValueError(f"operator tagged unitary has residual {res:.3e}")

    @property
    def d(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class PureStateEnsemble:
    """Weighted mixture {(q_i, psi_i)} with the q_i on the probability simplex."""

    members: tuple
    prob_tol: float = field(default=STRUCT_TOL, repr=False, compare=False)

    def __post_init__(self):
        members = tuple((float(q), psi) for q, psi in self.members)
        object.__setattr__(self, "members", members)
        if not members:
            raise ValueError("ensemble must contain at least one state")
        qs = np.array([q for q, _ in members])
        if np.any(qs < 0):
            raise ValueError("ensemble probabilities must be nonnegative")
        if abs(qs.sum() - 1.0) > self.prob_tol:
            raise ValueError(f"ensemble probabilities sum to {qs.sum()!r}, not 1")
        d = members[0][1].d
        if any(psi.d != d for _, psi in members):
            raise ValueError("ensemble states must share one dimension")


def basis_ket(labels, dims) -> StateVector:
    """Canonical basis vector of a composite system.

    ``labels[j]`` selects the basis state of the j-th subsystem; the result is
    the Kronecker product of the single-subsystem basis vectors, so the
    leftmost label is the first Kronecker factor.
    """
    dims = CompositeDims(dims)
    labels = [int(k) for k in labels]
    if len(labels) != len(dims):
        raise ValueError(f"{len(labels)} labels for {len(dims)} subsystems")
    v = np.array([1.0 + 0j])
    for lab, dk in zip(labels, dims):
        if not 0 <= lab < dk:
            raise ValueError(f"label {lab} out of range for subsystem dimension {dk}")
        e = np.zeros(dk, dtype=complex)
        e[lab] = 1.0
        v = np.kron(v, e)
    return StateVector(v, dims=dims)


def bell_state(index: int) -> StateVector:
    """The four maximally entangled two-qubit states, indexed 1..4."""
    s = 1 / np.sqrt(2.0)
    pairs = {
        1: ([0, 0], [1, 1], +s),
        2: ([0, 0], [1, 1], -s),
        3: ([0, 1], [1, 0], +s),
        4: ([0, 1], [1, 0], -s),
    }
    if index not in pairs:
        raise ValueError(f"bell state index must be 1..4, got {index}")
    a, b, sign = pairs[index]
    v = s * as_vector(basis_ket(a, [2, 2])) + sign * as_vector(basis_ket(b, [2, 2]))
    return StateVector(v, dims=(2, 2))


def outer_product(ket: StateVector, bra: StateVector) -> Operator:
    """Rank-1 matrix ket . bra^dag."""
    k, b = as_vector(ket), as_vector(bra)
    if k.size != b.size:
        raise ValueError(f"dimension mismatch {k.size} vs {b.size}")
    dims = getattr(ket, "dims", None)
    return Operator(np.outer(k, b.conj()), dims=dims)


def lowering(d: int) -> Operator:
    """Ladder-down matrix: superdiagonal sqrt(1)..sqrt(d-1)."""
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    m = np.zeros((d, d), dtype=complex)
    for n in range(1, d):
        m[n - 1, n] = np.sqrt(n)
    return Operator(m)


def raising(d: int) -> Operator:
    """Ladder-up matrix, the conjugate transpose of lowering(d)."""
    return Operator(dag(lowering(d).matrix))


def number(d: int) -> Operator:
    """Excitation-count matrix diag(0..d-1), equal to raising(d) @ lowering(d)."""
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    return Operator(np.diag(np.arange(d, dtype=complex)), kind="hermitian")


def pauli(axis: str) -> Operator:
    """Pauli matrix for axis 'x', 'y', or 'z'."""
    try:
        m = _PAULI[axis.lower()]
    except (KeyError, AttributeError):
        raise ValueError(f"axis must be one of x, y, z, got {axis!r}") from None
    return Operator(m, kind="hermitian")


def kron(a, b) -> Operator:
    """Kronecker product with subsystem dims concatenated.

    A factor without dims annotation contributes its full dimension as a
    single subsystem. Kind tags survive when both factors agree (the product
    of Hermitian/unitary matrices is again Hermitian/unitary).
    """
    ma, mb = as_matrix(a), as_matrix(b)
    da = getattr(a, "dims", None) or (ma.shape[0],)
    db = getattr(b, "dims", None) or (mb.shape[0],)
    ka = getattr(a, "kind", "general")
    kb = getattr(b, "kind", "general")
    kind = ka if ka == kb and ka in ("hermitian", "unitary") else "general"
    return Operator(np.kron(ma, mb), kind=kind, dims=tuple(da) + tuple(db))


def commutator(a, b) -> np.ndarray:
    ma, mb = as_matrix(a), as_matrix(b)
    if ma.shape != mb.shape:
        raise ValueError(f"dimension mismatch {ma.shape} vs {mb.shape}")
    return ma @ mb - mb @ ma


def anticommutator(a, b) -> np.ndarray:
    ma, mb = as_matrix(a), as_matrix(b)
    if ma.shape != mb.shape:
        raise ValueError(f"dimension mismatch {ma.shape} vs {mb.shape}")
    return ma @ mb + mb @ ma


def hs_inner(a, b) -> complex:
    """Hilbert-Schmidt scalar product Tr(A^dag B)."""
    ma, mb = as_matrix(a), as_matrix(b)
    if ma.shape != mb.shape:
        raise ValueError(f"dimension mismatch {ma.shape} vs {mb.shape}")
    return complex(np.trace(dag(ma) @ mb))


def bloch_vector(rho) -> np.ndarray:
    """Real 3-vector v with rho = (I + v . sigma)/2; requires a two-level state."""
    m = as_matrix(rho)
    if m.shape != (2, 2):
        raise ValueError(f"Bloch vector requires dimension 2, got {m.shape[0]}")
    return np.array([np.trace(m @ _PAULI[ax]).real for ax in ("x", "y", "z")])


def bloch_to_density(v, norm_slack: float = 1e-10) -> DensityMatrix:
    """Two-level state (I + v . sigma)/2; needs |v| <= 1 for positivity."""
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size != 3:
        raise ValueError(f"Bloch vector must have 3 components, got {v.size}")
    r = float(np.linalg.norm(v))
    if r > 1.0 + norm_slack:
        raise ValueError(f"Bloch vector norm {r} exceeds 1; state would not be PSD")
    m = 0.5 * (np.eye(2, dtype=complex)
               + v[0] * _PAULI["x"] + v[1] * _PAULI["y"] + v[2] * _PAULI["z"])
    return DensityMatrix(m)


def pure_angles_to_state(theta: float, phi: float) -> StateVector:
    """Two-level pure state cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>.

    The polar/azimuthal angles map to the Bloch vector
    (sin theta cos phi, sin theta sin phi, cos theta).
    """
    if not 0.0 <= theta <= np.pi:
        raise ValueError(f"theta must lie in [0, pi], got {theta}")
    if not 0.0 <= phi < 2 * np.pi:
        raise ValueError(f"phi must lie in [0, 2*pi), got {phi}")
    v = np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])
    return StateVector(v)


def global_phase_equivalent(psi, phi, tol: float = STRUCT_TOL) -> bool:
    """True when the two unit states differ only by a global phase factor."""
    u, w = as_vector(psi), as_vector(phi)
    if u.size != w.size:
        raise ValueError(f"dimension mismatch {u.size} vs {w.size}")
    return abs(np.vdot(u, w)) >= 1.0 - tol


def density_from_ensemble(ensemble) -> DensityMatrix:
    """Density matrix sum_i q_i psi_i psi_i^dag of a weighted pure-state mixture."""
    if not isinstance(ensemble, PureStateEnsemble):
        ensemble = PureStateEnsemble(tuple(ensemble))
    d = ensemble.members[0][1].d
    m = np.zeros((d, d), dtype=complex)
    for q, psi in ensemble.members:
        v = as_vector(psi)
        m += q * np.outer(v, v.conj())
    return DensityMatrix(m)
