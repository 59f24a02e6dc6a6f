"""Command-line front end: classify operators, reproduce the stock
examples, and drive the randomized agreement suite.

Problem specs are JSON documents; complex numbers are written as
``[re, im]`` pairs.  Reports come in a human table form and a structured
(JSON) form; every boolean verdict is paired with the residual that
produced it.

Exit codes: 0 all requested audits passed, 2 validation error,
3 a corrected-criterion/oracle mismatch was found.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .classify import defect, quasi_defect
from .condexp import CondExp, block_averages
from .criteria import (
    audit_agreement,
    essential_range,
    j_prime_m,
    normal_case_equivalence,
    quasi_criterion,
    spectrum_matches_range,
    symbols,
)
from .errors import ValidationError
from .linop import (
    LinOp,
    adjoint,
    hermitian_eig,
    hermitian_power,
    op_norm,
    spectrum,
    wct_op,
)
from .measure import (
    MeasureSpace,
    Mfunc,
    Partition,
    geometric_space,
    grid_space,
    make_partition,
    make_space,
    singleton_blocks,
)

__all__ = [
    "ProblemSpec",
    "ClassificationReport",
    "ExampleAReport",
    "ExampleBReport",
    "SweepReport",
    "SuiteReport",
    "Instance",
    "random_instance",
    "suite_instances",
    "fixture_projection",
    "fixture_support_gap",
    "classify_operator",
    "cmd_classify",
    "cmd_example_a",
    "cmd_example_b",
    "cmd_random_suite",
    "cmd_sweep_m",
    "main",
]

# Above this many atoms the dense matrix route is skipped and only the
# symbol-level criteria are reported.
MATRIX_LIMIT = 600

DEFAULT_PROBES = (0.25, 0.5, 2.0)


def _parse_complex(value: Any, where: str) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if (
        isinstance(value, (list, tuple))
        and len(value) == 2
        and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
    ):
        return complex(value[0], value[1])
    raise ValidationError(
        f"{where}: expected a number or an [re, im] pair, got {value!r}"
    )


def _complex_pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


@dataclass(frozen=True)
class ProblemSpec:
    """A classification problem: space, partition, symbols, parameters."""

    weights: tuple[float, ...]
    blocks: tuple[tuple[int, ...], ...]
    u: tuple[complex, ...]
    w: tuple[complex, ...]
    m_max: int = 4
    tol: float | None = None
    probes_p: tuple[float, ...] = DEFAULT_PROBES

    @classmethod
    def from_dict(cls, data: dict) -> "ProblemSpec":
        if not isinstance(data, dict):
            raise ValidationError(
                f"spec must be a JSON object, got {type(data).__name__}"
            )
        known = {"weights", "blocks", "u", "w", "m_max", "tol", "probes_p"}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValidationError(f"spec has unknown field(s): {', '.join(unknown)}")
        for name in ("weights", "blocks", "u", "w"):
            if name not in data:
                raise ValidationError(f"spec is missing required field '{name}'")
            if not isinstance(data[name], list) or not data[name]:
                raise ValidationError(f"spec field '{name}' must be a non-empty list")
        try:
            weights = tuple(float(v) for v in data["weights"])
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"spec field 'weights': {exc}") from exc
        blocks: list[tuple[int, ...]] = []
        for b, blk in enumerate(data["blocks"]):
            if not isinstance(blk, list):
                raise ValidationError(
                    f"spec field 'blocks[{b}]' must be a list of atom indices"
                )
            try:
                blocks.append(tuple(int(i) for i in blk))
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"spec field 'blocks[{b}]': {exc}") from exc
        u = tuple(
            _parse_complex(v, f"spec field 'u[{i}]'") for i, v in enumerate(data["u"])
        )
        w = tuple(
            _parse_complex(v, f"spec field 'w[{i}]'") for i, v in enumerate(data["w"])
        )
        m_max = int(data.get("m_max", 4))
        if m_max < 1:
            raise ValidationError(f"spec field 'm_max' must be >= 1, got {m_max}")
        tol = data.get("tol")
        if tol is not None:
            tol = float(tol)
            if tol <= 0:
                raise ValidationError(f"spec field 'tol' must be positive, got {tol}")
        probes = data.get("probes_p", list(DEFAULT_PROBES))
        try:
            probes_p = tuple(float(p) for p in probes)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"spec field 'probes_p': {exc}") from exc
        if any(p <= 0 for p in probes_p):
            raise ValidationError("spec field 'probes_p' entries must be positive")
        return cls(
            weights=weights,
            blocks=tuple(blocks),
            u=u,
            w=w,
            m_max=m_max,
            tol=tol,
            probes_p=probes_p,
        )

    @classmethod
    def from_file(cls, path: str) -> "ProblemSpec":
        try:
            with open(path, "r", encoding="utf-8") as handle:
                data = json.load(handle)
        except OSError as exc:
            raise ValidationError(f"cannot read spec file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ValidationError(
                f"spec file {path} is not valid JSON (line {exc.lineno}): {exc.msg}"
            ) from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return {
            "weights": [float(v) for v in self.weights],
            "blocks": [list(blk) for blk in self.blocks],
            "u": [_complex_pair(z) for z in self.u],
            "w": [_complex_pair(z) for z in self.w],
            "m_max": self.m_max,
            "tol": self.tol,
            "probes_p": list(self.probes_p),
        }

    def build(self) -> tuple[MeasureSpace, Partition, CondExp, Mfunc, Mfunc]:
        space = make_space(self.weights)
        partition = make_partition(space, self.blocks)
        ce = CondExp(space, partition)
        if len(self.u) != space.atom_count:
            raise ValidationError(
                f"spec field 'u' has {len(self.u)} values for {space.atom_count} atoms"
            )
        if len(self.w) != space.atom_count:
            raise ValidationError(
                f"spec field 'w' has {len(self.w)} values for {space.atom_count} atoms"
            )
        u = Mfunc(np.array(self.u, dtype=complex))
        w = Mfunc(np.array(self.w, dtype=complex))
        return space, partition, ce, u, w


# ---------------------------------------------------------------------------
# Reports


def _fmt_bool(flag: bool | None) -> str:
    if flag is None:
        return "n/a"
    return "yes" if flag else "no"


@dataclass
class ClassificationReport:
    """Full verdict set for one operator, with residual evidence."""

    atom_count: int
    block_count: int
    m_max: int
    matrix_route: bool
    symbol_rows: list[dict]
    defect_verdicts: list[dict]
    criteria_rows: list[dict]
    normality: dict | None
    normal_case: dict | None
    spectrum: list[list[float]] | None
    essential_range: list[list[float]]
    spectrum_match: dict | None
    mismatches: list[dict]
    divergences: list[dict]
    notes: list[str]

    @property
    def mismatch_count(self) -> int:
        return len(self.mismatches)

    def to_dict(self) -> dict:
        return {
            "atom_count": self.atom_count,
            "block_count": self.block_count,
            "m_max": self.m_max,
            "matrix_route": self.matrix_route,
            "symbols": self.symbol_rows,
            "defect_verdicts": self.defect_verdicts,
            "criteria": self.criteria_rows,
            "normality": self.normality,
            "normal_case": self.normal_case,
            "spectrum": self.spectrum,
            "essential_range": self.essential_range,
            "spectrum_match": self.spectrum_match,
            "mismatches": self.mismatches,
            "divergences": self.divergences,
            "notes": self.notes,
        }

    def render_text(self) -> str:
        lines = []
        lines.append(
            f"operator on {self.atom_count} atoms, {self.block_count} blocks "
            f"(matrix route: {_fmt_bool(self.matrix_route)})"
        )
        lines.append("")
        lines.append("block symbols:")
        lines.append(
            f"  {'block':>5}  {'mass':>12}  {'E(uw)':>24}  {'|E(uw)|^2':>12}  "
            f"{'E(|u|^2)':>12}  {'E(|w|^2)':>12}  {'product':>12}"
        )
        for row in self.symbol_rows:
            re, im = row["e_uw"]
            lines.append(
                f"  {row['block']:>5}  {row['mass']:>12.6g}  "
                f"{re:>11.6g}{im:>+11.6g}i  {row['t']:>12.6g}  "
                f"{row['e_u2']:>12.6g}  {row['e_w2']:>12.6g}  {row['product']:>12.6g}"
            )
        if self.defect_verdicts:
            lines.append("")
            lines.append("defect verdicts:")
            lines.append(
                f"  {'m':>3}  {'defect norm':>14}  {'quasi norm':>14}  "
                f"{'tol':>10}  {'m-isometric':>12}  {'quasi-m-iso':>12}"
            )
            for v in self.defect_verdicts:
                lines.append(
                    f"  {v['m']:>3}  {v['defect_norm']:>14.6e}  "
                    f"{v['quasi_defect_norm']:>14.6e}  {v['tol']:>10.2e}  "
                    f"{_fmt_bool(v['is_m_isometric']):>12}  "
                    f"{_fmt_bool(v['is_quasi_m_isometric']):>12}"
                )
        if self.criteria_rows:
            lines.append("")
            lines.append("criteria (literal vs corrected/oracle):")
            lines.append(
                f"  {'m':>3}  {'quasi lit':>10}  {'quasi corr':>11}  "
                f"{'quasi resid':>13}  {'m-iso lit':>10}  {'m-iso oracle':>13}  "
                f"{'lit resid':>12}"
            )
            for row in self.criteria_rows:
                lines.append(
                    f"  {row['m']:>3}  {_fmt_bool(row['paper_quasi']):>10}  "
                    f"{_fmt_bool(row['corrected_quasi']):>11}  "
                    f"{row['quasi_residual']:>13.6e}  "
                    f"{_fmt_bool(row['paper_m_iso']):>10}  "
                    f"{_fmt_bool(row['oracle_m_iso']):>13}  "
                    f"{row['m_iso_paper_residual']:>12.6e}"
                )
        if self.normality is not None:
            lines.append("")
            n = self.normality
            lines.append(
                f"normality: normal={_fmt_bool(n['normal'])} "
                f"(residual {n['normal_residual']:.3e}), "
                f"hyponormal={_fmt_bool(n['hyponormal'])} "
                f"(neg part {n['hyponormal_residual']:.3e})"
            )
            for probe in n["p_hyponormal"]:
                lines.append(
                    f"  p-hyponormal p={probe['p']:g}: {_fmt_bool(probe['holds'])} "
                    f"(neg part {probe['residual']:.3e})"
                )
        if self.spectrum_match is not None:
            sm = self.spectrum_match
            lines.append(
                f"spectrum vs attained E(uw) values: "
                f"match={_fmt_bool(sm['ok'])} (distance {sm['distance']:.3e})"
            )
        if self.divergences:
            lines.append("")
            lines.append(f"literal-reading divergences: {len(self.divergences)}")
            for d in self.divergences:
                lines.append(
                    f"  m={d['m']} {d['kind']}: literal={_fmt_bool(d['paper_verdict'])} "
                    f"oracle={_fmt_bool(d['oracle_verdict'])} "
                    f"(literal residual {d['paper_residual']:.3e}, "
                    f"oracle norm {d['oracle_norm']:.3e})"
                )
        lines.append("")
        lines.append(f"corrected-vs-oracle mismatches: {len(self.mismatches)}")
        for note in self.notes:
            lines.append(f"note: {note}")
        return "\n".join(lines)


def _symbol_rows(ce: CondExp, st) -> list[dict]:
    rows = []
    for b, blk in enumerate(ce.partition.blocks):
        i = blk[0]
        e_uw = complex(st.e_uw.values[i])
        rows.append(
            {
                "block": b,
                "atoms": len(blk),
                "mass": float(ce.block_masses[b]),
                "e_uw": _complex_pair(e_uw),
                "t": float(st.t.values[i].real),
                "e_u2": float(st.e_u2.values[i].real),
                "e_w2": float(st.e_w2.values[i].real),
                "product": float(st.e_u2.values[i].real * st.e_w2.values[i].real),
            }
        )
    return rows


def _normality_dict(T: LinOp, probes_p: Sequence[float], tol: float | None) -> dict:
    comm = adjoint(T) @ T - T @ adjoint(T)
    comm = LinOp(0.5 * (comm.entries + comm.entries.conj().T))
    normal_residual = op_norm(comm)
    evals, _ = hermitian_eig(comm)
    hypo_residual = max(0.0, -float(evals[0]))
    eff_tol = tol if tol is not None else 1e-9 * max(1.0, op_norm(T) ** 2)
    probes = []
    for p in probes_p:
        left = adjoint(T) @ T
        right = T @ adjoint(T)
        left = LinOp(0.5 * (left.entries + left.entries.conj().T))
        right = LinOp(0.5 * (right.entries + right.entries.conj().T))
        diff = hermitian_power(left, p) - hermitian_power(right, p)
        d_evals, _ = hermitian_eig(diff)
        p_tol = tol if tol is not None else 1e-9 * max(1.0, op_norm(T) ** (2 * p))
        probes.append(
            {
                "p": float(p),
                "holds": bool(d_evals[0] >= -p_tol),
                "residual": max(0.0, -float(d_evals[0])),
                "tol": p_tol,
            }
        )
    return {
        "normal": normal_residual <= eff_tol,
        "normal_residual": normal_residual,
        "hyponormal": hypo_residual <= eff_tol,
        "hyponormal_residual": hypo_residual,
        "tol": eff_tol,
        "p_hyponormal": probes,
    }


def classify_operator(
    space: MeasureSpace,
    partition: Partition,
    u: Mfunc,
    w: Mfunc,
    m_max: int = 4,
    tol: float | None = None,
    probes_p: Sequence[float] = DEFAULT_PROBES,
    matrix_limit: int = MATRIX_LIMIT,
) -> ClassificationReport:
    """Classify ``f -> w E(u f)`` by both routes where feasible.

    Beyond ``matrix_limit`` atoms only the symbol-level criteria run; the
    dense defect oracle would need an ``n x n`` matrix.
    """
    ce = CondExp(space, partition)
    st = symbols(ce, w, u)
    notes: list[str] = []
    use_matrix = space.atom_count <= matrix_limit

    defect_verdicts: list[dict] = []
    criteria_rows: list[dict] = []
    mismatches: list[dict] = []
    divergences: list[dict] = []
    normality = None
    normal_case = None
    spec_list = None
    spectrum_match = None

    e_range = [_complex_pair(z) for z in essential_range(st.e_uw)]

    if use_matrix:
        T = wct_op(ce, w, u)
        audit = audit_agreement(ce, w, u, m_max, tol)
        for row in audit.rows:
            defect_verdicts.append(
                {
                    "m": row.m,
                    "defect_norm": row.oracle_defect_norm,
                    "quasi_defect_norm": row.oracle_quasi_norm,
                    "tol": row.tol,
                    "is_m_isometric": row.oracle_m_iso,
                    "is_quasi_m_isometric": row.oracle_quasi,
                }
            )
        for row in audit.rows:
            criteria_rows.append(
                {
                    "m": row.m,
                    "tol": row.tol,
                    "paper_quasi": row.paper_quasi,
                    "corrected_quasi": row.corrected_quasi,
                    "oracle_quasi": row.oracle_quasi,
                    "quasi_residual": row.quasi_residual,
                    "quasi_paper_residual": row.quasi_paper_residual,
                    "oracle_quasi_norm": row.oracle_quasi_norm,
                    "paper_m_iso": row.paper_m_iso,
                    "oracle_m_iso": row.oracle_m_iso,
                    "m_iso_paper_residual": row.m_iso_paper_residual,
                    "oracle_defect_norm": row.oracle_defect_norm,
                    "e_r": list(row.e_r),
                }
            )
        for rec in audit.mismatches:
            mismatches.append(
                {
                    "weights": list(rec.weights),
                    "blocks": [list(b) for b in rec.blocks],
                    "u": [_complex_pair(z) for z in rec.u],
                    "w": [_complex_pair(z) for z in rec.w],
                    "m": rec.m,
                    "criterion_residual": rec.criterion_residual,
                    "oracle_norm": rec.oracle_norm,
                }
            )
        for d in audit.divergences:
            divergences.append(
                {
                    "kind": d.kind,
                    "m": d.m,
                    "paper_verdict": d.paper_verdict,
                    "oracle_verdict": d.oracle_verdict,
                    "paper_residual": d.paper_residual,
                    "oracle_norm": d.oracle_norm,
                }
            )
        normality = _normality_dict(T, probes_p, tol)
        if normality["normal"]:
            nc = normal_case_equivalence(st, T, m_max, normality["tol"])
            normal_case = {
                "applicable": nc.applicable,
                "normal_residual": nc.normal_residual,
                "identity_residual": nc.identity_residual,
                "identity_ok": nc.identity_ok,
                "all_equal": nc.all_equal,
                "properties": [
                    {"name": c.name, "holds": c.holds, "residual": c.residual}
                    for c in nc.properties
                ],
            }
        spec_vals = spectrum(T)
        spec_list = [_complex_pair(z) for z in spec_vals.tolist()]
        ok, dist = spectrum_matches_range(T, st.e_uw)
        spectrum_match = {"ok": ok, "distance": dist}
    else:
        notes.append(
            f"matrix route skipped: {space.atom_count} atoms exceed the "
            f"dense-matrix limit of {matrix_limit}; verdicts use the "
            f"symbol-level criteria"
        )
        for m in range(1, m_max + 1):
            q = quasi_criterion(st, m, tol)
            target = 1.0 if m % 2 else -1.0
            vals = (
                j_prime_m(st.t.values.real, m)
                * st.e_w2.values.real
                * st.e_u2.values.real
            )
            paper_residual = float(np.abs(vals - target).max())
            # criterion failure is a sound witness of non-m-isometry
            criteria_rows.append(
                {
                    "m": m,
                    "tol": q.tol,
                    "paper_quasi": q.paper_verdict,
                    "corrected_quasi": q.corrected_verdict,
                    "oracle_quasi": None,
                    "quasi_residual": q.residual,
                    "quasi_paper_residual": q.paper_residual,
                    "oracle_quasi_norm": None,
                    "paper_m_iso": paper_residual <= 1e-9,
                    "oracle_m_iso": False if paper_residual > 1e-9 else None,
                    "m_iso_paper_residual": paper_residual,
                    "oracle_defect_norm": None,
                    "e_r": None,
                }
            )

    return ClassificationReport(
        atom_count=space.atom_count,
        block_count=partition.block_count,
        m_max=m_max,
        matrix_route=use_matrix,
        symbol_rows=_symbol_rows(ce, st),
        defect_verdicts=defect_verdicts,
        criteria_rows=criteria_rows,
        normality=normality,
        normal_case=normal_case,
        spectrum=spec_list,
        essential_range=e_range,
        spectrum_match=spectrum_match,
        mismatches=mismatches,
        divergences=divergences,
        notes=notes,
    )


def cmd_classify(spec: "ProblemSpec | str") -> ClassificationReport:
    """Classify the operator described by a problem spec (object or path)."""
    if isinstance(spec, str):
        spec = ProblemSpec.from_file(spec)
    space, partition, _, u, w = spec.build()
    return classify_operator(
        space, partition, u, w, spec.m_max, spec.tol, spec.probes_p
    )


# ---------------------------------------------------------------------------
# Stock examples


@dataclass
class ExampleAReport:
    """Unit-square grid example: measured curves against closed forms."""

    nx: int
    ny: int
    columns: list[dict]
    max_rel_err_e_u2: float
    max_rel_err_e_w2: float
    max_rel_err_t: float
    min_gap: float
    min_sqrt_residual: float
    classification: ClassificationReport

    def to_dict(self) -> dict:
        return {
            "nx": self.nx,
            "ny": self.ny,
            "columns": self.columns,
            "max_rel_err_e_u2": self.max_rel_err_e_u2,
            "max_rel_err_e_w2": self.max_rel_err_e_w2,
            "max_rel_err_t": self.max_rel_err_t,
            "min_gap": self.min_gap,
            "min_sqrt_residual": self.min_sqrt_residual,
            "classification": self.classification.to_dict(),
        }

    @property
    def mismatch_count(self) -> int:
        return self.classification.mismatch_count

    def render_text(self) -> str:
        lines = [
            f"unit-square grid example, {self.nx} columns x {self.ny} rows",
            "",
            f"  {'x':>8}  {'E(|u|^2)':>11}  {'target':>10}  {'E(|w|^2)':>11}  "
            f"{'target':>10}  {'|E(uw)|^2':>11}  {'target':>10}  {'gap':>9}",
        ]
        for row in self.columns:
            lines.append(
                f"  {row['x']:>8.4f}  {row['e_u2']:>11.6f}  {row['e_u2_target']:>10.6f}  "
                f"{row['e_w2']:>11.6f}  {row['e_w2_target']:>10.6f}  "
                f"{row['t']:>11.6f}  {row['t_target']:>10.6f}  {row['gap']:>9.5f}"
            )
        lines.append("")
        lines.append(
            f"max relative errors: E(|u|^2) {self.max_rel_err_e_u2:.3e}, "
            f"E(|w|^2) {self.max_rel_err_e_w2:.3e}, |E(uw)|^2 {self.max_rel_err_t:.3e}"
        )
        lines.append(
            f"measured gap E(|u|^2)E(|w|^2) - |E(uw)|^2 stays >= {self.min_gap:.4f}: "
            f"the symbol product and |E(uw)|^2 are not equal on this domain"
        )
        if self.min_sqrt_residual > 1e-9:
            lines.append(
                f"min over columns of ||E(uw)| - 1| = {self.min_sqrt_residual:.4f} > 0, "
                f"so the operator is not quasi-m-isometric for any m, hence not "
                f"m-isometric and not isometric"
            )
        else:
            lines.append(
                f"min over columns of ||E(uw)| - 1| = {self.min_sqrt_residual:.3e}"
            )
        lines.append("")
        lines.append(self.classification.render_text())
        return "\n".join(lines)


def cmd_example_a(
    nx: int = 20,
    ny: int = 1000,
    m_max: int = 4,
    tol: float | None = None,
) -> ExampleAReport:
    """Grid example with ``u = y**(x/8)`` and ``w = sqrt((4+x) y)``.

    Per-column conditional moments are compared against the closed forms
    ``4/(4+x)``, ``(4+x)/2`` and ``64 (4+x)/(x+12)**2``.
    """
    grid = grid_space(nx, ny)
    x, y = grid.x, grid.y
    u = Mfunc(y ** (x / 8.0))
    w = Mfunc(np.sqrt((4.0 + x) * y))
    ce = CondExp(grid.space, grid.partition)
    st = symbols(ce, w, u)

    xs = np.array([x[blk[0]] for blk in grid.partition.blocks])
    e_u2 = np.array([st.e_u2.values[blk[0]].real for blk in grid.partition.blocks])
    e_w2 = np.array([st.e_w2.values[blk[0]].real for blk in grid.partition.blocks])
    t = np.array([st.t.values[blk[0]].real for blk in grid.partition.blocks])
    cu = 4.0 / (4.0 + xs)
    cw = (4.0 + xs) / 2.0
    ct = 64.0 * (4.0 + xs) / (xs + 12.0) ** 2
    gap = e_u2 * e_w2 - t

    columns = [
        {
            "x": float(xs[i]),
            "e_u2": float(e_u2[i]),
            "e_u2_target": float(cu[i]),
            "e_w2": float(e_w2[i]),
            "e_w2_target": float(cw[i]),
            "t": float(t[i]),
            "t_target": float(ct[i]),
            "product": float(e_u2[i] * e_w2[i]),
            "gap": float(gap[i]),
            "sqrt_residual": float(abs(np.sqrt(t[i]) - 1.0)),
        }
        for i in range(nx)
    ]
    report = classify_operator(
        grid.space, grid.partition, u, w, m_max=m_max, tol=tol
    )
    return ExampleAReport(
        nx=nx,
        ny=ny,
        columns=columns,
        max_rel_err_e_u2=float(np.abs(e_u2 / cu - 1.0).max()),
        max_rel_err_e_w2=float(np.abs(e_w2 / cw - 1.0).max()),
        max_rel_err_t=float(np.abs(t / ct - 1.0).max()),
        min_gap=float(gap.min()),
        min_sqrt_residual=float(np.abs(np.sqrt(t) - 1.0).min()),
        classification=report,
    )


@dataclass
class ExampleBReport:
    """Geometric sequence example with ``w(n) = n`` and ``u(n) = 1/n``."""

    p: float
    n_atoms: int
    tail_mass: float
    alphas: list[dict]
    max_alpha_deviation: float
    classification: ClassificationReport

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "n_atoms": self.n_atoms,
            "tail_mass": self.tail_mass,
            "alphas": self.alphas,
            "max_alpha_deviation": self.max_alpha_deviation,
            "classification": self.classification.to_dict(),
        }

    @property
    def mismatch_count(self) -> int:
        return self.classification.mismatch_count

    def render_text(self) -> str:
        lines = [
            f"geometric sequence example: p={self.p:g}, n=1..{self.n_atoms} "
            f"(truncation tail mass {self.tail_mass:.3e})",
            "block averages of u*w (both should equal 1):",
        ]
        for a in self.alphas:
            re, im = a["value"]
            lines.append(
                f"  block {a['block']} ({a['description']}): "
                f"{re:.15f}{im:+.1e}i  (|value - 1| = {a['deviation']:.3e})"
            )
        lines.append("")
        lines.append(self.classification.render_text())
        return "\n".join(lines)


def cmd_example_b(
    p: float = 0.5,
    n_atoms: int = 60,
    m_max: int = 6,
    tol: float | None = None,
) -> ExampleBReport:
    """Geometric space example; the product ``u*w`` is identically 1."""
    geo = geometric_space(p, n_atoms)
    n = geo.n.astype(float)
    u = Mfunc(1.0 / n)
    w = Mfunc(n)
    ce = CondExp(geo.space, geo.partition)
    avg = block_averages(ce, u * w)
    descriptions = ["n divisible by 3", "n not divisible by 3"]
    alphas = [
        {
            "block": b,
            "description": descriptions[b],
            "value": _complex_pair(complex(avg[b])),
            "deviation": float(abs(avg[b] - 1.0)),
        }
        for b in range(len(avg))
    ]
    report = classify_operator(
        geo.space, geo.partition, u, w, m_max=m_max, tol=tol
    )
    return ExampleBReport(
        p=p,
        n_atoms=n_atoms,
        tail_mass=geo.tail_mass,
        alphas=alphas,
        max_alpha_deviation=max(a["deviation"] for a in alphas),
        classification=report,
    )


# ---------------------------------------------------------------------------
# Random instances and the agreement suite


@dataclass(frozen=True, eq=False)
class Instance:
    """One randomly generated (or fixed) classification problem."""

    label: str
    stratum: str
    space: MeasureSpace
    partition: Partition
    u: Mfunc
    w: Mfunc

    def cond_exp(self) -> CondExp:
        return CondExp(self.space, self.partition)


def _random_mfunc(rng: np.random.Generator, n: int, mag_range=(0.0, 2.0)) -> Mfunc:
    mag = rng.uniform(mag_range[0], mag_range[1], n)
    phase = rng.uniform(0.0, 2.0 * np.pi, n)
    return Mfunc(mag * np.exp(1j * phase))


def _random_blocks(
    rng: np.random.Generator, dim: int, n_blocks: int
) -> list[tuple[int, ...]]:
    perm = rng.permutation(dim)
    if n_blocks == 1:
        return [tuple(int(i) for i in perm)]
    cuts = np.sort(rng.choice(np.arange(1, dim), size=n_blocks - 1, replace=False))
    pieces = np.split(perm, cuts)
    return [tuple(int(i) for i in piece) for piece in pieces]


def random_instance(
    rng: np.random.Generator,
    dim_range: tuple[int, int] = (2, 10),
    block_range: tuple[int, int] = (1, 4),
    stratum: str | None = None,
    label: str = "",
) -> Instance:
    """Draw a random instance, stratified to hit the interesting classes.

    With no explicit stratum: probability 1/4 each for the quasi stratum
    (``|E(uw)|`` normalized to 1 on the joint support) and the unimodular
    stratum (singleton partition, ``|u w| = 1``), else generic.
    """
    dim = int(rng.integers(dim_range[0], dim_range[1] + 1))
    weights = rng.uniform(0.2, 2.0, dim)
    space = make_space(weights)
    if stratum is None:
        roll = rng.random()
        stratum = "quasi" if roll < 0.25 else "unimodular" if roll < 0.5 else "generic"

    if stratum == "unimodular":
        partition = make_partition(space, singleton_blocks(dim))
        mag = rng.uniform(0.5, 2.0, dim)
        u_vals = mag * np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, dim))
        w_vals = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, dim)) / u_vals
        return Instance(label, stratum, space, partition, Mfunc(u_vals), Mfunc(w_vals))

    n_blocks = int(rng.integers(block_range[0], min(block_range[1], dim) + 1))
    blocks = _random_blocks(rng, dim, n_blocks)
    partition = make_partition(space, blocks)
    if stratum == "generic":
        return Instance(
            label,
            stratum,
            space,
            partition,
            _random_mfunc(rng, dim),
            _random_mfunc(rng, dim),
        )

    # quasi stratum: redraw until every block average of u*w is safely
    # nonzero (keeps the normalizing scale below 5), then scale u per
    # block so |E(uw)| is exactly 1
    ce = CondExp(space, partition)
    for _ in range(500):
        u = _random_mfunc(rng, dim)
        w = _random_mfunc(rng, dim)
        c = block_averages(ce, u * w)
        if np.abs(c).min() > 0.2:
            break
    else:
        raise RuntimeError("failed to draw a usable quasi-stratum instance")
    scale = np.abs(c)[partition.block_index]
    u = Mfunc(u.values / scale)
    return Instance(label, stratum, space, partition, u, w)


def fixture_projection() -> Instance:
    """The averaging projection itself: u = w = 1 on a two-block space."""
    space = make_space([0.25, 0.25, 0.25, 0.25])
    partition = make_partition(space, [[0, 1], [2, 3]])
    ones = Mfunc(np.ones(4))
    return Instance("projection", "fixture", space, partition, ones, ones)


def fixture_support_gap() -> Instance:
    """Symbols vanish on one block: |E(uw)| = 1 only on the joint support."""
    space = make_space([0.25, 0.25, 0.25, 0.25])
    partition = make_partition(space, [[0, 1], [2, 3]])
    u = Mfunc(np.array([1.0, 1.0, 0.0, 0.0]))
    w = Mfunc(np.array([2.0, 0.0, 0.0, 0.0]))
    return Instance("support-gap", "fixture", space, partition, u, w)


def suite_instances(
    count: int,
    dim_range: tuple[int, int] = (2, 10),
    block_range: tuple[int, int] = (1, 4),
    seed: int = 42,
) -> list[Instance]:
    """The two adversarial fixtures followed by ``count`` random instances."""
    rng = np.random.default_rng(seed)
    instances = [fixture_projection(), fixture_support_gap()]
    for i in range(count):
        instances.append(
            random_instance(rng, dim_range, block_range, label=f"random-{i}")
        )
    return instances


@dataclass
class SuiteReport:
    """Aggregate of the randomized agreement audit."""

    count: int
    seed: int
    m_max: int
    instance_rows: list[dict]
    mismatch_count: int
    mismatches: list[dict]
    divergence_stats: dict
    stratum_counts: dict

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "seed": self.seed,
            "m_max": self.m_max,
            "instances": self.instance_rows,
            "mismatch_count": self.mismatch_count,
            "mismatches": self.mismatches,
            "divergence_stats": self.divergence_stats,
            "stratum_counts": self.stratum_counts,
        }

    def render_text(self) -> str:
        lines = [
            f"agreement suite: {self.count} random instances + 2 fixtures "
            f"(seed {self.seed}, m = 1..{self.m_max})",
            f"strata: "
            + ", ".join(f"{k}={v}" for k, v in sorted(self.stratum_counts.items())),
            f"corrected-vs-oracle mismatches: {self.mismatch_count}",
            "literal-reading divergences: "
            + ", ".join(
                f"{k}: {v} instance(s)" for k, v in sorted(self.divergence_stats.items())
            ),
        ]
        for row in self.instance_rows:
            if row["divergences"] or row["mismatches"]:
                lines.append(
                    f"  [{row['index']}] {row['label']} ({row['stratum']}, "
                    f"dim {row['dim']}, {row['blocks']} blocks): "
                    f"mismatches={row['mismatches']}, "
                    f"divergences={row['divergences']}"
                )
        return "\n".join(lines)


def cmd_random_suite(
    count: int = 200,
    dim_range: tuple[int, int] = (2, 10),
    block_range: tuple[int, int] = (1, 4),
    seed: int = 42,
    m_max: int = 4,
    tol: float | None = None,
) -> SuiteReport:
    """Audit criteria against the defect oracle on a randomized suite."""
    if count < 1:
        raise ValidationError(f"count must be >= 1, got {count}")
    instances = suite_instances(count, dim_range, block_range, seed)
    rows = []
    mismatches: list[dict] = []
    stratum_counts: dict[str, int] = {}
    div_instances = {"quasi": 0, "m_isometry": 0}
    for idx, inst in enumerate(instances):
        stratum_counts[inst.stratum] = stratum_counts.get(inst.stratum, 0) + 1
        report = audit_agreement(inst.cond_exp(), inst.w, inst.u, m_max, tol)
        kinds = sorted({d.kind for d in report.divergences})
        for kind in kinds:
            div_instances[kind] = div_instances.get(kind, 0) + 1
        rows.append(
            {
                "index": idx,
                "label": inst.label,
                "stratum": inst.stratum,
                "dim": inst.space.atom_count,
                "blocks": inst.partition.block_count,
                "mismatches": len(report.mismatches),
                "divergences": kinds,
            }
        )
        for rec in report.mismatches:
            mismatches.append(
                {
                    "index": idx,
                    "label": inst.label,
                    "weights": list(rec.weights),
                    "blocks": [list(b) for b in rec.blocks],
                    "u": [_complex_pair(z) for z in rec.u],
                    "w": [_complex_pair(z) for z in rec.w],
                    "m": rec.m,
                    "criterion_residual": rec.criterion_residual,
                    "oracle_norm": rec.oracle_norm,
                }
            )
    return SuiteReport(
        count=count,
        seed=seed,
        m_max=m_max,
        instance_rows=rows,
        mismatch_count=len(mismatches),
        mismatches=mismatches,
        divergence_stats=div_instances,
        stratum_counts=stratum_counts,
    )


@dataclass
class SweepReport:
    """Defect and sandwiched-defect norms as the order grows."""

    m_max: int
    rows: list[dict]

    mismatch_count: int = 0

    def to_dict(self) -> dict:
        return {"m_max": self.m_max, "rows": self.rows}

    def render_text(self) -> str:
        lines = [
            f"  {'m':>3}  {'defect norm':>16}  {'quasi defect norm':>18}",
        ]
        for row in self.rows:
            lines.append(
                f"  {row['m']:>3}  {row['defect_norm']:>16.8e}  "
                f"{row['quasi_defect_norm']:>18.8e}"
            )
        return "\n".join(lines)


def cmd_sweep_m(spec: "ProblemSpec | str", m_max: int = 6) -> SweepReport:
    """Tabulate defect norms for m = 1..m_max for a problem spec."""
    if isinstance(spec, str):
        spec = ProblemSpec.from_file(spec)
    space, partition, ce, u, w = spec.build()
    T = wct_op(ce, w, u)
    rows = []
    for m in range(1, m_max + 1):
        rows.append(
            {
                "m": m,
                "defect_norm": op_norm(defect(T, m)),
                "quasi_defect_norm": op_norm(quasi_defect(T, m)),
            }
        )
    return SweepReport(m_max=m_max, rows=rows)


# ---------------------------------------------------------------------------
# Argument parsing


def _parse_range(text: str, flag: str) -> tuple[int, int]:
    try:
        lo, hi = text.split(":")
        lo_i, hi_i = int(lo), int(hi)
    except ValueError as exc:
        raise ValidationError(f"{flag} expects LO:HI, got {text!r}") from exc
    if lo_i < 1 or hi_i < lo_i:
        raise ValidationError(f"{flag} range {text!r} is not a valid LO:HI")
    return lo_i, hi_i


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wctops",
        description=(
            "Classify weighted conditional type operators on finite atomic "
            "measure spaces by defect operators and symbol-level criteria."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, m_max_default: int = 4) -> None:
        p.add_argument("--tol", type=float, default=None, help="classification tolerance")
        p.add_argument("--m-max", type=int, default=m_max_default, help="largest order m")
        p.add_argument("--out", default=None, help="write structured report to this path")
        p.add_argument(
            "--format",
            choices=("table", "structured"),
            default="table",
            help="stdout format",
        )

    p_classify = sub.add_parser("classify", help="classify an operator from a spec file")
    p_classify.add_argument("spec", help="path to a JSON problem spec")
    add_common(p_classify)

    p_a = sub.add_parser("example-a", help="unit-square grid example")
    p_a.add_argument("--nx", type=int, default=20)
    p_a.add_argument("--ny", type=int, default=1000)
    add_common(p_a)

    p_b = sub.add_parser("example-b", help="geometric sequence example")
    p_b.add_argument("--p", type=float, default=0.5)
    p_b.add_argument("--n-atoms", type=int, default=60)
    add_common(p_b, m_max_default=6)

    p_suite = sub.add_parser("random-suite", help="randomized agreement audit")
    p_suite.add_argument("--count", type=int, default=200)
    p_suite.add_argument("--dims", default="2:10", help="atom count range LO:HI")
    p_suite.add_argument("--blocks", default="1:4", help="block count range LO:HI")
    p_suite.add_argument("--seed", type=int, default=42)
    add_common(p_suite)

    p_sweep = sub.add_parser("sweep-m", help="defect norms for m = 1..m_max")
    p_sweep.add_argument("spec", help="path to a JSON problem spec")
    add_common(p_sweep, m_max_default=6)

    return parser


def _dispatch(args: argparse.Namespace):
    if args.command == "classify":
        spec = ProblemSpec.from_file(args.spec)
        if args.m_max != 4:
            spec = ProblemSpec(
                spec.weights, spec.blocks, spec.u, spec.w, args.m_max, spec.tol, spec.probes_p
            )
        if args.tol is not None:
            spec = ProblemSpec(
                spec.weights, spec.blocks, spec.u, spec.w, spec.m_max, args.tol, spec.probes_p
            )
        return cmd_classify(spec)
    if args.command == "example-a":
        return cmd_example_a(args.nx, args.ny, args.m_max, args.tol)
    if args.command == "example-b":
        return cmd_example_b(args.p, args.n_atoms, args.m_max, args.tol)
    if args.command == "random-suite":
        dims = _parse_range(args.dims, "--dims")
        blocks = _parse_range(args.blocks, "--blocks")
        return cmd_random_suite(
            args.count, dims, blocks, args.seed, args.m_max, args.tol
        )
    if args.command == "sweep-m":
        return cmd_sweep_m(args.spec, args.m_max)
    raise ValidationError(f"unknown command {args.command!r}")


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        report = _dispatch(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            json.dump(report.to_dict(), handle, sort_keys=True, indent=2)
            handle.write("\n")
    if args.format == "structured":
        print(json.dumps(report.to_dict(), sort_keys=True, indent=2))
    else:
        print(report.render_text())
    if getattr(report, "mismatch_count", 0) > 0:
        return 3
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
