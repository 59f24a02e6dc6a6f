"""Function-level classification criteria and the agreement audit.

A weighted conditional type operator is determined by a handful of
block-constant symbols: ``E(uw)``, its squared modulus ``t``,
``E(|u|^2)``, ``E(|w|^2)`` and the supports of the last two.  The
criteria below classify the operator from those symbols alone.  Two
readings are evaluated side by side: a literal whole-space reading and a
corrected reading (restricted to the joint support for the quasi
criterion, deferred to the defect oracle for the m-isometry criterion).
Divergences between the readings are recorded as data; disagreement
between the corrected reading and the oracle is a mismatch and is what
the audit exists to rule out.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .classify import classify_isometry, default_tolerance, defect, quasi_defect
from .condexp import CondExp, cond_exp
from .errors import NumericError, ValidationError
from .linop import LinOp, adjoint, op_norm, spectrum, wct_op
from .measure import Mfunc

__all__ = [
    "SymbolTable",
    "QuasiVerdict",
    "MIsoVerdict",
    "PropertyCheck",
    "NormalCaseReport",
    "AuditRow",
    "MismatchRecord",
    "DivergenceRecord",
    "AgreementReport",
    "symbols",
    "j_m",
    "j_prime_m",
    "j_double_prime_m",
    "quasi_criterion",
    "m_isometry_criterion",
    "normal_case_equivalence",
    "audit_agreement",
    "essential_range",
    "spectrum_matches_range",
]

SUPPORT_EPS = 1e-12
PAPER_EPS = 1e-9
DEDUP_EPS = 1e-9


@dataclass(frozen=True, eq=False)
class SymbolTable:
    """The block-constant symbols of a weighted conditional type operator.

    ``t`` is the pointwise squared modulus of ``e_uw``; ``S`` and ``G``
    are the supports of ``e_u2`` and ``e_w2``.
    """

    e_uw: Mfunc
    t: Mfunc
    e_u2: Mfunc
    e_w2: Mfunc
    S: frozenset[int]
    G: frozenset[int]

    @property
    def support_both(self) -> frozenset[int]:
        return self.S & self.G


def symbols(ce: CondExp, w: Mfunc, u: Mfunc) -> SymbolTable:
    """Compute the symbol table of ``f -> w E(u f)``."""
    e_uw = cond_exp(ce, u * w)
    e_u2 = cond_exp(ce, u.abs_sq())
    e_w2 = cond_exp(ce, w.abs_sq())
    t = np.abs(e_uw.values) ** 2
    prod = e_u2.values.real * e_w2.values.real
    hoelder_gap = float((t - prod).max())
    if hoelder_gap > 1e-10 * max(1.0, float(prod.max())):
        raise NumericError(
            f"conditional Hoelder inequality violated by {hoelder_gap:.3e}"
        )
    S = frozenset(np.flatnonzero(e_u2.values.real > SUPPORT_EPS).tolist())
    G = frozenset(np.flatnonzero(e_w2.values.real > SUPPORT_EPS).tolist())
    return SymbolTable(e_uw, Mfunc(t), e_u2, e_w2, S, G)


def _check_order(m: int) -> None:
    if m < 1:
        raise ValidationError(f"order must be >= 1, got {m}")


def j_m(t_val, m: int):
    """Alternating binomial sum ``sum_{k=0}^{m} (-1)^(m-k) C(m,k) t^k``.

    Accepts a scalar or an array of non-negative values.  The sum closes
    to ``(t - 1)^m``; the closed form is asserted against the sum.
    """
    _check_order(m)
    t = np.asarray(t_val, dtype=float)
    if np.any(t < 0):
        raise ValidationError("t must be non-negative")
    total = np.zeros_like(t)
    for k in range(m + 1):
        total = total + (-1) ** (m - k) * comb(m, k) * t**k
    closed = (t - 1.0) ** m
    dev = float(np.abs(total - closed).max())
    scale = max(1.0, float(np.abs(closed).max()))
    if dev > 1e-12 * scale:
        raise NumericError(
            f"binomial sum deviates from (t-1)^{m} by {dev:.3e}"
        )
    return total if np.ndim(t_val) else float(total)


def j_prime_m(t_val, m: int):
    """Reduced sum ``sum_{k=1}^{m} (-1)^(m-k) C(m,k) t^(k-1)``.

    Satisfies ``t * J'_m(t) = (t - 1)^m - (-1)^m``; the identity is
    asserted.
    """
    _check_order(m)
    t = np.asarray(t_val, dtype=float)
    if np.any(t < 0):
        raise ValidationError("t must be non-negative")
    total = np.zeros_like(t)
    for k in range(1, m + 1):
        total = total + (-1) ** (m - k) * comb(m, k) * t ** (k - 1)
    rhs = (t - 1.0) ** m - (-1.0) ** m
    dev = float(np.abs(t * total - rhs).max())
    scale = max(1.0, float(np.abs(rhs).max()))
    if dev > 1e-12 * scale:
        raise NumericError(
            f"reduced binomial sum violates its closure identity by {dev:.3e}"
        )
    return total if np.ndim(t_val) else float(total)


def j_double_prime_m(t_val, m: int):
    """Closed form ``(t - 1)^m - (-1)^m`` of the reduced sum scaled by ``t``.

    Equals ``J'_m(t) * E(|w|^2) E(|u|^2)`` whenever the symbol product
    collapses onto ``t``, which happens exactly for normal operators.
    """
    _check_order(m)
    t = np.asarray(t_val, dtype=float)
    out = (t - 1.0) ** m - (-1.0) ** m
    return out if np.ndim(t_val) else float(out)


@dataclass(frozen=True)
class QuasiVerdict:
    """Whole-space and joint-support readings of the quasi criterion."""

    m: int
    paper_verdict: bool
    corrected_verdict: bool
    residual: float
    paper_residual: float
    tol: float


def quasi_criterion(st: SymbolTable, m: int, tol: float | None = None) -> QuasiVerdict:
    """Quasi-m-isometry from the symbols.

    The literal reading demands ``|E(uw)| = 1`` at every atom.  The
    corrected reading restricts to the joint support and measures the
    residual ``max |J_m(t)| E(|u|^2) E(|w|^2)`` there, which equals the
    norm of the sandwiched defect.
    """
    _check_order(m)
    t = st.t.values.real
    prod = st.e_u2.values.real * st.e_w2.values.real
    paper_residual = float(np.abs(np.sqrt(t) - 1.0).max())
    sg = sorted(st.support_both)
    if sg:
        residual = float((np.abs(j_m(t[sg], m)) * prod[sg]).max())
    else:
        residual = 0.0
    if tol is None:
        tol = 1e-9 * max(1.0, float(prod.max()) ** m)
    return QuasiVerdict(
        m=m,
        paper_verdict=paper_residual <= PAPER_EPS,
        corrected_verdict=residual <= tol,
        residual=residual,
        paper_residual=paper_residual,
        tol=tol,
    )


@dataclass(frozen=True)
class MIsoVerdict:
    """Symbol-level and oracle readings of the m-isometry criterion."""

    m: int
    paper_verdict: bool
    corrected_verdict: bool
    e_r: tuple[float, ...]
    paper_residual: float
    defect_norm: float
    tol: float


def _dedup_sorted(values: np.ndarray, tol: float) -> tuple[float, ...]:
    out: list[float] = []
    for v in np.sort(values):
        if not out or abs(float(v) - out[-1]) > tol:
            out.append(float(v))
    return tuple(out)


def _m_iso_paper(st: SymbolTable, m: int) -> tuple[float, tuple[float, ...]]:
    """Literal-reading residual and attained value set for the m-isometry test."""
    target = 1.0 if m % 2 else -1.0
    vals = (
        j_prime_m(st.t.values.real, m)
        * st.e_w2.values.real
        * st.e_u2.values.real
    )
    return float(np.abs(vals - target).max()), _dedup_sorted(vals, DEDUP_EPS)


def m_isometry_criterion(
    st: SymbolTable,
    ce: CondExp,
    w: Mfunc,
    u: Mfunc,
    m: int,
    tol: float | None = None,
) -> MIsoVerdict:
    """m-isometry from the symbols, audited against the defect oracle.

    ``e_r`` collects the attained values of
    ``J'_m(t) E(|w|^2) E(|u|^2)``; the literal reading asks that they all
    equal 1 for odd ``m`` and -1 for even ``m``.  That condition is
    necessary but not sufficient (a projection with a kernel satisfies it
    without being an m-isometry), so the corrected verdict defers to the
    defect norm.
    """
    _check_order(m)
    paper_residual, e_r = _m_iso_paper(st, m)
    T = wct_op(ce, w, u)
    if tol is None:
        tol = default_tolerance(T, m)
    dn = op_norm(defect(T, m))
    return MIsoVerdict(
        m=m,
        paper_verdict=paper_residual <= PAPER_EPS,
        corrected_verdict=dn <= tol,
        e_r=e_r,
        paper_residual=paper_residual,
        defect_norm=dn,
        tol=tol,
    )


@dataclass(frozen=True)
class PropertyCheck:
    name: str
    holds: bool
    residual: float


@dataclass(frozen=True)
class NormalCaseReport:
    """Five-way equivalence data for a normal operator.

    ``applicable`` is False when the operator fails the normality
    precondition; the remaining fields are then unset placeholders.
    """

    applicable: bool
    normal_residual: float
    identity_residual: float
    identity_ok: bool
    j_double_prime_residual: float
    properties: tuple[PropertyCheck, ...]
    all_equal: bool


def normal_case_equivalence(
    st: SymbolTable, T: LinOp, m_max: int, tol: float
) -> NormalCaseReport:
    """Check the equivalence package available for normal operators.

    Verifies the symbol identity ``E(|u|^2) E(|w|^2) = |E(uw)|^2``
    pointwise, then evaluates five properties independently (isometric,
    m-isometric for some m, quasi-isometric, quasi-m-isometric for some
    m, symbol product equal to 1) and reports whether they agree.
    """
    if m_max < 1:
        raise ValidationError(f"m_max must be >= 1, got {m_max}")
    comm = adjoint(T) @ T - T @ adjoint(T)
    normal_residual = op_norm(LinOp(0.5 * (comm.entries + comm.entries.conj().T)))
    if normal_residual > tol:
        return NormalCaseReport(
            applicable=False,
            normal_residual=normal_residual,
            identity_residual=float("nan"),
            identity_ok=False,
            j_double_prime_residual=float("nan"),
            properties=(),
            all_equal=False,
        )
    t = st.t.values.real
    prod = st.e_u2.values.real * st.e_w2.values.real
    identity_residual = float(np.abs(prod - t).max())
    jpp_residual = float(
        np.abs(j_prime_m(t, m_max) * prod - j_double_prime_m(t, m_max)).max()
    )

    defect_norms = [op_norm(defect(T, m)) for m in range(1, m_max + 1)]
    quasi_norms = [op_norm(quasi_defect(T, m)) for m in range(1, m_max + 1)]
    product_residual = max(
        float(np.abs(prod - 1.0).max()), float(np.abs(t - 1.0).max())
    )
    checks = (
        PropertyCheck("isometric", defect_norms[0] <= tol, defect_norms[0]),
        PropertyCheck("m_isometric", min(defect_norms) <= tol, min(defect_norms)),
        PropertyCheck("quasi_isometric", quasi_norms[0] <= tol, quasi_norms[0]),
        PropertyCheck(
            "quasi_m_isometric", min(quasi_norms) <= tol, min(quasi_norms)
        ),
        PropertyCheck(
            "symbol_product_one", product_residual <= tol, product_residual
        ),
    )
    verdicts = {c.holds for c in checks}
    return NormalCaseReport(
        applicable=True,
        normal_residual=normal_residual,
        identity_residual=identity_residual,
        identity_ok=identity_residual <= tol,
        j_double_prime_residual=jpp_residual,
        properties=checks,
        all_equal=len(verdicts) == 1,
    )


@dataclass(frozen=True)
class AuditRow:
    m: int
    tol: float
    paper_quasi: bool
    corrected_quasi: bool
    oracle_quasi: bool
    quasi_residual: float
    quasi_paper_residual: float
    oracle_quasi_norm: float
    paper_m_iso: bool
    oracle_m_iso: bool
    m_iso_paper_residual: float
    oracle_defect_norm: float
    e_r: tuple[float, ...]


@dataclass(frozen=True)
class MismatchRecord:
    """Counterexample data for a corrected-criterion/oracle disagreement."""

    weights: tuple[float, ...]
    blocks: tuple[tuple[int, ...], ...]
    u: tuple[complex, ...]
    w: tuple[complex, ...]
    m: int
    criterion_residual: float
    oracle_norm: float


@dataclass(frozen=True)
class DivergenceRecord:
    """A literal-reading verdict that differs from the oracle."""

    kind: str  # 'quasi' or 'm_isometry'
    m: int
    paper_verdict: bool
    oracle_verdict: bool
    paper_residual: float
    oracle_norm: float


@dataclass(frozen=True)
class AgreementReport:
    rows: tuple[AuditRow, ...]
    mismatches: tuple[MismatchRecord, ...]
    divergences: tuple[DivergenceRecord, ...]

    @property
    def agreed(self) -> bool:
        return not self.mismatches


def audit_agreement(
    ce: CondExp,
    w: Mfunc,
    u: Mfunc,
    m_max: int,
    tol: float | None = None,
) -> AgreementReport:
    """Cross-validate criteria against the defect oracle for m = 1..m_max.

    Corrected-vs-oracle disagreements become mismatch records (they
    indicate a bug); literal-vs-oracle disagreements become divergence
    records (they are expected on specific adversarial inputs).
    """
    if m_max < 1:
        raise ValidationError(f"m_max must be >= 1, got {m_max}")
    st = symbols(ce, w, u)
    T = wct_op(ce, w, u)
    oracle = classify_isometry(T, m_max, tol)
    rows: list[AuditRow] = []
    mismatches: list[MismatchRecord] = []
    divergences: list[DivergenceRecord] = []
    for m in range(1, m_max + 1):
        verdict = oracle[m - 1]
        tol_m = verdict.tol
        q = quasi_criterion(st, m, tol_m)
        oracle_quasi = verdict.is_quasi_m_isometric
        oracle_quasi_norm = verdict.quasi_defect_norm
        paper_residual, e_r = _m_iso_paper(st, m)
        paper_m_iso = paper_residual <= PAPER_EPS
        rows.append(
            AuditRow(
                m=m,
                tol=tol_m,
                paper_quasi=q.paper_verdict,
                corrected_quasi=q.corrected_verdict,
                oracle_quasi=oracle_quasi,
                quasi_residual=q.residual,
                quasi_paper_residual=q.paper_residual,
                oracle_quasi_norm=oracle_quasi_norm,
                paper_m_iso=paper_m_iso,
                oracle_m_iso=verdict.is_m_isometric,
                m_iso_paper_residual=paper_residual,
                oracle_defect_norm=verdict.defect_norm,
                e_r=e_r,
            )
        )
        if q.corrected_verdict != oracle_quasi:
            mismatches.append(
                MismatchRecord(
                    weights=tuple(ce.space.weights.tolist()),
                    blocks=ce.partition.blocks,
                    u=tuple(u.values.tolist()),
                    w=tuple(w.values.tolist()),
                    m=m,
                    criterion_residual=q.residual,
                    oracle_norm=oracle_quasi_norm,
                )
            )
        if q.paper_verdict != oracle_quasi:
            divergences.append(
                DivergenceRecord(
                    kind="quasi",
                    m=m,
                    paper_verdict=q.paper_verdict,
                    oracle_verdict=oracle_quasi,
                    paper_residual=q.paper_residual,
                    oracle_norm=oracle_quasi_norm,
                )
            )
        if paper_m_iso != verdict.is_m_isometric:
            divergences.append(
                DivergenceRecord(
                    kind="m_isometry",
                    m=m,
                    paper_verdict=paper_m_iso,
                    oracle_verdict=verdict.is_m_isometric,
                    paper_residual=paper_residual,
                    oracle_norm=verdict.defect_norm,
                )
            )
    return AgreementReport(tuple(rows), tuple(mismatches), tuple(divergences))


def essential_range(f: Mfunc, dedup_tol: float = DEDUP_EPS) -> tuple[complex, ...]:
    """Attained values of ``f`` deduplicated to ``dedup_tol``.

    On an atomic space every atom has positive mass, so the attained
    values and the essential range coincide.
    """
    vals = sorted(f.values.tolist(), key=lambda z: (z.real, z.imag))
    out: list[complex] = []
    for v in vals:
        if not out or abs(v - out[-1]) > dedup_tol:
            out.append(v)
    return tuple(out)


def spectrum_matches_range(
    T: LinOp, e_uw: Mfunc, match_tol: float = 1e-8
) -> tuple[bool, float]:
    """Compare nonzero eigenvalues of ``T`` with nonzero values of ``E(uw)``.

    Returns the matching distance (largest distance from either set to
    the other, after dropping values of modulus <= ``match_tol``) and
    whether it stays within ``match_tol``.
    """
    ev = [z for z in spectrum(T).tolist() if abs(z) > match_tol]
    attained = [z for z in e_uw.values.tolist() if abs(z) > match_tol]
    if not ev and not attained:
        return True, 0.0
    if not ev or not attained:
        present = ev or attained
        dist = max(abs(z) for z in present)
        return False, dist
    d1 = max(min(abs(a - b) for b in attained) for a in ev)
    d2 = max(min(abs(b - a) for a in ev) for b in attained)
    dist = max(d1, d2)
    return dist <= match_tol, dist
