"""Ground-truth operator classification via defect operators.

The defect operator of order ``m`` is the alternating binomial sum
``sum_k (-1)^(m-k) C(m,k) T*^k T^k``; it vanishes exactly for
m-isometries.  Sandwiching it as ``T* B T`` gives the quasi version.
These dense-matrix computations serve as the oracle against which the
function-level criteria are audited.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import NumericError, PropertyViolation, ValidationError
from .linop import (
    LinOp,
    adjoint,
    hermitian_eig,
    hermitian_power,
    is_psd,
    mult_op,
    op_norm,
)
from .measure import MeasureSpace, Mfunc

__all__ = [
    "DefectVerdict",
    "MultiplicationReport",
    "default_tolerance",
    "defect",
    "quasi_defect",
    "classify_isometry",
    "is_normal",
    "is_hyponormal",
    "is_p_hyponormal",
    "check_multiplication_corollary",
]


@dataclass(frozen=True)
class DefectVerdict:
    """Defect norms and the resulting verdicts for one order ``m``."""

    m: int
    defect_norm: float
    quasi_defect_norm: float
    tol: float
    is_m_isometric: bool
    is_quasi_m_isometric: bool


def default_tolerance(T: LinOp, m: int) -> float:
    """Classification threshold scaled as the defect terms scale.

    The order-m defect sums k-fold products of ``T`` and ``T*``, so the
    roundoff floor grows like ``norm(T)**(2m)``.
    """
    return 1e-9 * max(1.0, op_norm(T) ** (2 * m))


def _symmetrize(acc: np.ndarray, scale: float) -> np.ndarray:
    asym = float(np.abs(acc - acc.conj().T).max())
    if asym > 1e-10 * scale:
        raise NumericError(
            f"defect matrix asymmetry {asym:.3e} exceeds 1e-10 at scale {scale:.3e}"
        )
    return 0.5 * (acc + acc.conj().T)


def _gram_stack(T: LinOp, k_max: int) -> tuple[list[np.ndarray], list[float]]:
    """``(T^k)* T^k`` for k = 0..k_max, with the entry scale of each."""
    a = T.entries
    grams: list[np.ndarray] = []
    scales: list[float] = []
    tk = np.eye(T.dim, dtype=complex)
    for k in range(k_max + 1):
        if k > 0:
            tk = tk @ a
        g = tk.conj().T @ tk
        grams.append(g)
        scales.append(max(1.0, float(np.abs(g).max())))
    return grams, scales


def _alternating_sum(
    grams: list[np.ndarray], scales: list[float], m: int, shift: int
) -> tuple[np.ndarray, float]:
    acc = np.zeros_like(grams[0])
    scale = 1.0
    for k in range(m + 1):
        c = comb(m, k)
        scale = max(scale, c * scales[k + shift])
        if (m - k) % 2:
            acc -= c * grams[k + shift]
        else:
            acc += c * grams[k + shift]
    return acc, scale


def _quasi_from_grams(
    T: LinOp, grams: list[np.ndarray], scales: list[float], m: int
) -> LinOp:
    """Sandwich ``T* B_m T`` checked against the shifted binomial sum."""
    direct, scale_direct = _alternating_sum(grams, scales, m, shift=1)
    b_acc, b_scale = _alternating_sum(grams, scales, m, shift=0)
    b = _symmetrize(b_acc, b_scale)
    sandwich = T.entries.conj().T @ b @ T.entries
    scale = max(scale_direct, float(np.abs(sandwich).max()), 1.0)
    dev = float(np.abs(direct - sandwich).max())
    if dev > 1e-9 * scale:
        raise NumericError(
            f"quasi-defect formulas disagree by {dev:.3e} at scale {scale:.3e}"
        )
    return LinOp(_symmetrize(sandwich, scale))


def defect(T: LinOp, m: int) -> LinOp:
    """The order-m defect operator, symmetrized with an asymmetry check."""
    if m < 1:
        raise ValidationError(f"defect order must be >= 1, got {m}")
    grams, scales = _gram_stack(T, m)
    acc, scale = _alternating_sum(grams, scales, m, shift=0)
    return LinOp(_symmetrize(acc, scale))


def quasi_defect(T: LinOp, m: int) -> LinOp:
    """The sandwiched defect ``T* B_m T``.

    Computed both as the shifted binomial sum and as the literal sandwich;
    a disagreement between the two signals an implementation bug.
    """
    if m < 1:
        raise ValidationError(f"defect order must be >= 1, got {m}")
    grams, scales = _gram_stack(T, m + 1)
    return _quasi_from_grams(T, grams, scales, m)


def classify_isometry(
    T: LinOp, m_max: int, tol: float | None = None
) -> list[DefectVerdict]:
    """Defect verdicts for m = 1..m_max.

    With ``tol=None`` each order uses the scaled default threshold.
    """
    if m_max < 1:
        raise ValidationError(f"m_max must be >= 1, got {m_max}")
    nrm = op_norm(T)
    grams, scales = _gram_stack(T, m_max + 1)
    verdicts = []
    for m in range(1, m_max + 1):
        tol_m = tol if tol is not None else 1e-9 * max(1.0, nrm ** (2 * m))
        acc, scale = _alternating_sum(grams, scales, m, shift=0)
        dn = op_norm(LinOp(_symmetrize(acc, scale)))
        qn = op_norm(_quasi_from_grams(T, grams, scales, m))
        verdicts.append(
            DefectVerdict(m, dn, qn, tol_m, dn <= tol_m, qn <= tol_m)
        )
    return verdicts


def _commutator_defect(T: LinOp) -> LinOp:
    h = adjoint(T) @ T - T @ adjoint(T)
    return LinOp(0.5 * (h.entries + h.entries.conj().T))


def is_normal(T: LinOp, tol: float | None = None) -> bool:
    """``T* T = T T*`` up to ``tol`` in operator norm."""
    if tol is None:
        tol = 1e-9 * max(1.0, op_norm(T) ** 2)
    return op_norm(_commutator_defect(T)) <= tol


def is_hyponormal(T: LinOp, tol: float | None = None) -> bool:
    """``T* T - T T*`` positive semidefinite up to ``tol``."""
    if tol is None:
        tol = 1e-9 * max(1.0, op_norm(T) ** 2)
    return is_psd(_commutator_defect(T), tol)


def is_p_hyponormal(T: LinOp, p: float, tol: float | None = None) -> bool:
    """``(T* T)**p >= (T T*)**p`` in the positive semidefinite order."""
    if p <= 0:
        raise ValidationError(f"hyponormality exponent must be positive, got {p}")
    if tol is None:
        tol = 1e-9 * max(1.0, op_norm(T) ** (2 * p))
    left = adjoint(T) @ T
    right = T @ adjoint(T)
    left = LinOp(0.5 * (left.entries + left.entries.conj().T))
    right = LinOp(0.5 * (right.entries + right.entries.conj().T))
    diff = hermitian_power(left, p) - hermitian_power(right, p)
    return is_psd(diff, tol)


@dataclass(frozen=True)
class MultiplicationReport:
    """Dual-route verdicts for a multiplication operator.

    The pointwise route evaluates the closed forms ``(|u|^2 - 1)^m`` and
    ``|u|^2 (|u|^2 - 1)^m``; the matrix route computes defect spectra.
    """

    m: int
    tol: float
    pointwise_iso_residual: float
    pointwise_quasi_residual: float
    defect_norm: float
    quasi_defect_norm: float
    is_m_isometric: bool
    is_quasi_m_isometric: bool
    iso_spectrum_deviation: float
    quasi_spectrum_deviation: float


def check_multiplication_corollary(
    space: MeasureSpace, u: Mfunc, m: int, tol: float | None = None
) -> MultiplicationReport:
    """Cross-validate the pointwise and matrix classifications of ``M_u``.

    Raises PropertyViolation when the two routes disagree beyond ``tol``.
    """
    if m < 1:
        raise ValidationError(f"order must be >= 1, got {m}")
    T = mult_op(space, u)
    if tol is None:
        tol = default_tolerance(T, m)
    a2 = np.abs(u.values) ** 2
    iso_pointwise = (a2 - 1.0) ** m
    quasi_pointwise = a2 * iso_pointwise

    B = defect(T, m)
    Q = quasi_defect(T, m)
    b_evals, _ = hermitian_eig(B)
    q_evals, _ = hermitian_eig(Q)
    iso_dev = float(np.abs(np.sort(iso_pointwise) - b_evals).max())
    quasi_dev = float(np.abs(np.sort(quasi_pointwise) - q_evals).max())

    r_iso = float(np.abs(iso_pointwise).max())
    r_quasi = float(np.abs(quasi_pointwise).max())
    dn = op_norm(B)
    qn = op_norm(Q)

    spectra_tol = max(tol, 1e-9)
    if iso_dev > spectra_tol or quasi_dev > spectra_tol:
        raise PropertyViolation(
            f"pointwise and matrix defect spectra disagree at m={m}: "
            f"iso deviation {iso_dev:.3e}, quasi deviation {quasi_dev:.3e}"
        )
    if ((r_iso <= tol) != (dn <= tol)) or ((r_quasi <= tol) != (qn <= tol)):
        raise PropertyViolation(
            f"pointwise and matrix verdicts disagree at m={m}: "
            f"residuals ({r_iso:.3e}, {r_quasi:.3e}) vs norms ({dn:.3e}, {qn:.3e})"
        )
    return MultiplicationReport(
        m=m,
        tol=tol,
        pointwise_iso_residual=r_iso,
        pointwise_quasi_residual=r_quasi,
        defect_norm=dn,
        quasi_defect_norm=qn,
        is_m_isometric=dn <= tol,
        is_quasi_m_isometric=qn <= tol,
        iso_spectrum_deviation=iso_dev,
        quasi_spectrum_deviation=quasi_dev,
    )
