"""Conditional expectation with respect to a partition.

On an atomic space the conditional expectation of ``f`` is block-constant:
on a block ``B`` it takes the mass-weighted average
``sum_{x in B} f(x) mu(x) / mu(B)``.  That single closed form realizes the
defining averaging identity, and in the orthonormalized indicator basis
the same map is an orthogonal projection matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .linop import LinOp
from .measure import MeasureSpace, Mfunc, Partition, ensure_on_space

__all__ = ["CondExp", "block_averages", "cond_exp", "cond_exp_matrix"]


@dataclass(frozen=True, eq=False)
class CondExp:
    """Averaging projection onto the block-constant functions of a partition."""

    space: MeasureSpace
    partition: Partition
    block_masses: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.partition.atom_count != self.space.atom_count:
            raise ValidationError(
                f"partition covers {self.partition.atom_count} atoms but the "
                f"space has {self.space.atom_count}"
            )
        masses = np.array(
            [self.space.weights[list(blk)].sum() for blk in self.partition.blocks]
        )
        if np.any(masses <= 0.0):
            raise ValidationError("every block must carry positive mass")
        masses.setflags(write=False)
        object.__setattr__(self, "block_masses", masses)


def block_averages(ce: CondExp, f: Mfunc) -> np.ndarray:
    """Mass-weighted average of ``f`` on each block, as a complex array."""
    ensure_on_space(f, ce.space)
    w = ce.space.weights
    sums = np.array(
        [(f.values[list(blk)] * w[list(blk)]).sum() for blk in ce.partition.blocks]
    )
    return sums / ce.block_masses


def cond_exp(ce: CondExp, f: Mfunc) -> Mfunc:
    """Conditional expectation of ``f``: the block average, replicated atomwise."""
    avg = block_averages(ce, f)
    return Mfunc(avg[ce.partition.block_index])


def cond_exp_matrix(ce: CondExp) -> LinOp:
    """Matrix of the averaging projection in the orthonormal atom basis.

    Entry ``(x, y)`` is ``sqrt(mu(x) mu(y)) / mu(B)`` when ``x`` and ``y``
    share block ``B`` and zero otherwise, which makes the matrix Hermitian
    and idempotent.
    """
    n = ce.space.atom_count
    s = np.sqrt(ce.space.weights)
    mat = np.zeros((n, n), dtype=complex)
    for b, blk in enumerate(ce.partition.blocks):
        idx = np.array(blk, dtype=np.intp)
        mat[np.ix_(idx, idx)] = np.outer(s[idx], s[idx]) / ce.block_masses[b]
    return LinOp(mat)
