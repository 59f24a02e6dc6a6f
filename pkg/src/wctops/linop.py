"""Dense complex operator algebra in the orthonormalized atom basis.

The basis vector for atom ``x`` is the indicator of ``x`` scaled by
``mu(x)**-0.5``.  In these coordinates multiplication operators are
diagonal, the Hilbert-space adjoint is the plain conjugate transpose,
and the Euclidean inner product of coordinate vectors equals the
weighted inner product of the underlying functions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import NumericError, ValidationError
from .measure import MeasureSpace, Mfunc, ensure_on_space

if TYPE_CHECKING:
    from .condexp import CondExp

__all__ = [
    "LinOp",
    "identity",
    "mult_op",
    "wct_op",
    "adjoint",
    "compose",
    "power",
    "op_norm",
    "spectrum",
    "hermitian_eig",
    "hermitian_power",
    "is_psd",
]


@dataclass(frozen=True, eq=False)
class LinOp:
    """A bounded operator as a square complex matrix."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise ValidationError(f"operator matrix must be square, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValidationError("operator matrix contains non-finite entries")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])

    def _same_dim(self, other: "LinOp") -> None:
        if self.dim != other.dim:
            raise ValidationError(
                f"dimension mismatch: {self.dim} vs {other.dim}"
            )

    def __add__(self, other: "LinOp") -> "LinOp":
        self._same_dim(other)
        return LinOp(self.entries + other.entries)

    def __sub__(self, other: "LinOp") -> "LinOp":
        self._same_dim(other)
        return LinOp(self.entries - other.entries)

    def __neg__(self) -> "LinOp":
        return LinOp(-self.entries)

    def __matmul__(self, other: "LinOp") -> "LinOp":
        self._same_dim(other)
        return LinOp(self.entries @ other.entries)

    def __mul__(self, scalar: complex) -> "LinOp":
        return LinOp(self.entries * complex(scalar))

    __rmul__ = __mul__


def identity(dim: int) -> LinOp:
    return LinOp(np.eye(dim, dtype=complex))


def mult_op(space: MeasureSpace, g: Mfunc) -> LinOp:
    """Multiplication by ``g``: diagonal in the orthonormal atom basis."""
    ensure_on_space(g, space, "multiplier")
    return LinOp(np.diag(g.values))


def wct_op(ce: "CondExp", w: Mfunc, u: Mfunc) -> LinOp:
    """The weighted conditional type operator ``f -> w * E(u f)``.

    Its matrix is ``diag(w) @ E @ diag(u)`` with ``E`` the conditional
    expectation projection.
    """
    ensure_on_space(w, ce.space, "w")
    ensure_on_space(u, ce.space, "u")
    from .condexp import cond_exp_matrix  # deferred: condexp builds on this module

    e = cond_exp_matrix(ce).entries
    return LinOp((w.values[:, None] * e) * u.values[None, :])


def adjoint(T: LinOp) -> LinOp:
    return LinOp(T.entries.conj().T)


def compose(A: LinOp, B: LinOp) -> LinOp:
    return A @ B


def power(T: LinOp, k: int) -> LinOp:
    if k < 0:
        raise ValidationError(f"power exponent must be non-negative, got {k}")
    return LinOp(np.linalg.matrix_power(T.entries, k))


def op_norm(T: LinOp) -> float:
    """Largest singular value, via the Hermitian eigenproblem of ``T* T``."""
    h = adjoint(T) @ T
    sym = LinOp(0.5 * (h.entries + h.entries.conj().T))
    evals, _ = hermitian_eig(sym)
    top = float(evals[-1])
    return float(np.sqrt(max(top, 0.0)))


def spectrum(T: LinOp) -> np.ndarray:
    """Eigenvalues with multiplicity, sorted by (real, imaginary) part."""
    try:
        ev = np.linalg.eigvals(T.entries)
    except np.linalg.LinAlgError as exc:
        raise NumericError(
            f"eigensolver failed to converge on a {T.dim}x{T.dim} matrix: {exc}"
        ) from exc
    order = np.lexsort((ev.imag, ev.real))
    return ev[order]


def hermitian_eig(A: LinOp) -> tuple[np.ndarray, LinOp]:
    """Eigendecomposition of a Hermitian matrix.

    Returns eigenvalues in ascending order and the unitary matrix of
    eigenvectors.  Hermitian symmetry is checked relative to the entry
    scale, and the reconstruction ``V diag(lam) V*`` is verified against
    the input.
    """
    a = A.entries
    scale = max(1.0, float(np.abs(a).max()))
    asym = float(np.abs(a - a.conj().T).max())
    if asym > 1e-10 * scale:
        raise ValidationError(
            f"matrix is not Hermitian: max asymmetry {asym:.3e} at scale {scale:.3e}"
        )
    h = 0.5 * (a + a.conj().T)
    evals, vecs = np.linalg.eigh(h)
    recon = (vecs * evals) @ vecs.conj().T
    # spectral norm of a Hermitian matrix is its largest |eigenvalue|; the
    # Frobenius norm bounds the spectral norm of the error from above
    norm_a = float(np.abs(evals).max()) if evals.size else 0.0
    err = float(np.linalg.norm(h - recon))
    if err > 1e-9 * max(1.0, norm_a):
        raise NumericError(
            f"eigendecomposition reconstruction error {err:.3e} exceeds tolerance"
        )
    return evals, LinOp(vecs)


def hermitian_power(A: LinOp, p: float) -> LinOp:
    """``A**p`` for Hermitian positive semidefinite ``A`` via functional calculus.

    Eigenvalues in the roundoff band below zero are clamped to zero;
    genuinely negative eigenvalues are rejected.
    """
    if p <= 0:
        raise ValidationError(f"exponent must be positive, got {p}")
    evals, V = hermitian_eig(A)
    band = 1e-10 * max(1.0, float(np.abs(evals).max()))
    smallest = float(evals[0])
    if smallest < -band:
        raise ValidationError(
            f"matrix is not positive semidefinite: eigenvalue {smallest:.3e}"
        )
    # the whole roundoff band collapses to an exact zero so that fractional
    # powers cannot amplify kernel perturbations
    lam = np.where(evals < band, 0.0, evals) ** p
    return LinOp((V.entries * lam) @ V.entries.conj().T)


def is_psd(A: LinOp, tol: float) -> bool:
    """True when every eigenvalue of the Hermitian matrix ``A`` is >= -tol."""
    evals, _ = hermitian_eig(A)
    return bool(evals[0] >= -tol)
