"""Dense operator algebra on tensor-product spin spaces.

Operators are immutable dense complex matrices.  Everything in this package
works at chain lengths where dense storage is comfortable; ``MAX_DENSE_DIM``
caps the Hilbert-space dimension (2**12) so a mis-configured chain fails fast
instead of thrashing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MAX_DENSE_DIM = 4096

HERMITICITY_RTOL = 1e-12


class DimensionError(ValueError):
    """Operator dimensions are incompatible or exceed the dense cap."""


def _as_matrix(entries) -> np.ndarray:
    m = np.array(entries, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise DimensionError(f"operator entries must be square, got shape {m.shape}")
    return m


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense complex square matrix, optionally flagged (and verified) Hermitian."""

    matrix: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        m = _as_matrix(self.matrix)
        if self.hermitian:
            scale = np.abs(m).max()
            defect = np.abs(m - m.conj().T).max()
            if defect > HERMITICITY_RTOL * max(scale, 1e-300):
                raise ValueError(
                    f"operator flagged hermitian but defect {defect:.3e} exceeds "
                    f"{HERMITICITY_RTOL:.0e} * {scale:.3e}"
                )
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dag(self) -> "Operator":
        return Operator(self.matrix.conj().T, hermitian=self.hermitian)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def __add__(self, other: "Operator") -> "Operator":
        _check_dims(self, other)
        return Operator(self.matrix + other.matrix,
                        hermitian=self.hermitian and other.hermitian)

    def __sub__(self, other: "Operator") -> "Operator":
        _check_dims(self, other)
        return Operator(self.matrix - other.matrix,
                        hermitian=self.hermitian and other.hermitian)

    def __neg__(self) -> "Operator":
        return Operator(-self.matrix, hermitian=self.hermitian)

    def __mul__(self, scalar) -> "Operator":
        herm = self.hermitian and complex(scalar).imag == 0.0
        return Operator(self.matrix * scalar, hermitian=herm)

    __rmul__ = __mul__

    def __matmul__(self, other: "Operator") -> "Operator":
        _check_dims(self, other)
        return Operator(self.matrix @ other.matrix)

    def __repr__(self) -> str:
        return f"Operator(dim={self.dim}, hermitian={self.hermitian})"


def _check_dims(a: Operator, b: Operator) -> None:
    if a.dim != b.dim:
        raise DimensionError(f"dimension mismatch: {a.dim} vs {b.dim}")


@dataclass(frozen=True)
class EigenSystem:
    """Hermitian eigendecomposition: ascending eigenvalues, orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.eigenvalues, dtype=float)
        vecs = np.asarray(self.eigenvectors, dtype=complex)
        vals.flags.writeable = False
        vecs.flags.writeable = False
        object.__setattr__(self, "eigenvalues", vals)
        object.__setattr__(self, "eigenvectors", vecs)

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]


_PAULI = {
    "identity": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
    "plus": np.array([[0, 1], [0, 0]], dtype=complex),
    "minus": np.array([[0, 0], [1, 0]], dtype=complex),
}


def pauli(kind: str) -> Operator:
    """Single-spin Pauli operator; ``plus``/``minus`` are (x ± i y)/2."""
    try:
        m = _PAULI[kind]
    except KeyError:
        raise ValueError(f"unknown pauli kind {kind!r}; choose from {sorted(_PAULI)}")
    return Operator(m, hermitian=kind in ("identity", "x", "y", "z"))


def identity(dim: int) -> Operator:
    return Operator(np.eye(dim, dtype=complex), hermitian=True)


def tensor(a: Operator, b: Operator) -> Operator:
    """Kronecker product a ⊗ b."""
    new_dim = a.dim * b.dim
    if new_dim > MAX_DENSE_DIM:
        raise DimensionError(
            f"tensor product dimension {new_dim} exceeds dense cap {MAX_DENSE_DIM}; "
            "the chain is too long for dense mode"
        )
    return Operator(np.kron(a.matrix, b.matrix),
                    hermitian=a.hermitian and b.hermitian)


def embed(op: Operator, site: int, n: int) -> Operator:
    """Embed a one-site (dim 2) or two-site (dim 4) operator into an n-spin chain.

    Sites are 1-based.  A dim-4 operator acts on sites (site, site+1).
    """
    if op.dim == 2:
        span = 1
    elif op.dim == 4:
        span = 2
    else:
        raise DimensionError(f"embed expects a dim-2 or dim-4 operator, got dim {op.dim}")
    if not 1 <= site <= n - span + 1:
        raise ValueError(f"site {site} out of range for span-{span} operator on {n} sites")
    if 2 ** n > MAX_DENSE_DIM:
        raise DimensionError(f"chain of {n} sites exceeds dense cap {MAX_DENSE_DIM}")
    left = np.eye(2 ** (site - 1), dtype=complex)
    right = np.eye(2 ** (n - site - span + 1), dtype=complex)
    m = np.kron(np.kron(left, op.matrix), right)
    return Operator(m, hermitian=op.hermitian)


def commutator(a: Operator, b: Operator) -> Operator:
    _check_dims(a, b)
    return Operator(a.matrix @ b.matrix - b.matrix @ a.matrix)


def anticommutator(a: Operator, b: Operator) -> Operator:
    _check_dims(a, b)
    return Operator(a.matrix @ b.matrix + b.matrix @ a.matrix)


def adjoint(a: Operator) -> Operator:
    return a.dag()


def eig_hermitian(a: Operator) -> EigenSystem:
    """Eigendecomposition of a verified-Hermitian operator.

    Eigenvalues come back ascending.  Each eigenvector's phase is fixed so its
    first component of non-negligible magnitude is real positive; exact
    eigenvalue ties are ordered lexicographically by the phase-fixed vectors.
    This keeps regression baselines stable across runs.
    """
    if not a.hermitian:
        raise ValueError("eig_hermitian requires an operator flagged hermitian")
    vals, vecs = np.linalg.eigh(a.matrix)
    vecs = _fix_phases(vecs)
    order = _stable_order(vals, vecs)
    return EigenSystem(vals[order], np.ascontiguousarray(vecs[:, order]))


def _fix_phases(vecs: np.ndarray) -> np.ndarray:
    out = vecs.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        mags = np.abs(col)
        lead = np.argmax(mags > 1e-12 * mags.max())
        phase = col[lead] / abs(col[lead])
        out[:, j] = col * phase.conjugate()
        # scrub the residual imaginary dust on the lead component
        out[lead, j] = out[lead, j].real
    return out


def _stable_order(vals: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    order = np.argsort(vals, kind="stable")
    # break exact float ties deterministically
    i = 0
    while i < len(order) - 1:
        j = i
        while j + 1 < len(order) and vals[order[j + 1]] == vals[order[i]]:
            j += 1
        if j > i:
            tied = sorted(order[i:j + 1],
                          key=lambda k: tuple(np.round(vecs[:, k], 12).view(float)))
            order[i:j + 1] = tied
        i = j + 1
    return order
