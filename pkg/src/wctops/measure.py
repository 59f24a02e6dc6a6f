"""Finite atomic measure spaces, partitions, and atom-indexed functions.

Everything downstream operates on a finite list of atoms with strictly
positive masses.  A sub-sigma-algebra of such a space is exactly a
partition of the atoms into blocks, and a measurable function is one
complex value per atom.  Two builders discretize the stock examples:
a truncated geometric sequence space and a midpoint grid on the unit
square.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import ValidationError

__all__ = [
    "MeasureSpace",
    "Partition",
    "Mfunc",
    "GeometricSpace",
    "GridSpace",
    "make_space",
    "make_partition",
    "singleton_blocks",
    "geometric_space",
    "grid_space",
    "ensure_on_space",
]


@dataclass(frozen=True, eq=False)
class MeasureSpace:
    """Finite list of atoms; ``weights[i]`` is the mass of atom ``i``."""

    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float).reshape(-1).copy()
        if w.size == 0:
            raise ValidationError("a measure space needs at least one atom")
        bad = np.flatnonzero(~np.isfinite(w) | (w <= 0.0))
        if bad.size:
            i = int(bad[0])
            raise ValidationError(
                f"weight at index {i} must be a finite positive number, got {w[i]!r}"
            )
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def atom_count(self) -> int:
        return int(self.weights.size)

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())


@dataclass(frozen=True, eq=False)
class Partition:
    """Pairwise-disjoint blocks of atom indices covering every atom.

    ``block_index[i]`` gives the block owning atom ``i``.
    """

    blocks: tuple[tuple[int, ...], ...]
    atom_count: int
    block_index: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        blocks = tuple(tuple(int(i) for i in blk) for blk in self.blocks)
        if not blocks:
            raise ValidationError("a partition needs at least one block")
        if self.atom_count < 1:
            raise ValidationError("partition needs a positive atom count")
        owner = np.full(self.atom_count, -1, dtype=np.intp)
        for b, blk in enumerate(blocks):
            if not blk:
                raise ValidationError(f"block {b} is empty")
            for i in blk:
                if i < 0 or i >= self.atom_count:
                    raise ValidationError(
                        f"block {b} contains out-of-range atom index {i} "
                        f"(space has {self.atom_count} atoms)"
                    )
                if owner[i] >= 0:
                    raise ValidationError(
                        f"atom {i} appears in both block {int(owner[i])} and block {b}"
                    )
                owner[i] = b
        missing = np.flatnonzero(owner < 0)
        if missing.size:
            raise ValidationError(
                f"atom {int(missing[0])} is not covered by any block"
            )
        owner.setflags(write=False)
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "block_index", owner)

    @property
    def block_count(self) -> int:
        return len(self.blocks)


@dataclass(frozen=True, eq=False)
class Mfunc:
    """A function on the atoms: ``values[i]`` is the value at atom ``i``."""

    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=complex).reshape(-1).copy()
        if v.size == 0:
            raise ValidationError("a function needs at least one value")
        if not np.all(np.isfinite(v)):
            i = int(np.flatnonzero(~np.isfinite(v))[0])
            raise ValidationError(f"function value at index {i} is not finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return int(self.values.size)

    def conj(self) -> "Mfunc":
        return Mfunc(np.conj(self.values))

    def abs_sq(self) -> "Mfunc":
        """Pointwise squared modulus, as a real-valued function."""
        return Mfunc(np.abs(self.values) ** 2)

    def __mul__(self, other: "Mfunc | complex") -> "Mfunc":
        if isinstance(other, Mfunc):
            if len(other) != len(self):
                raise ValidationError(
                    f"cannot multiply functions of lengths {len(self)} and {len(other)}"
                )
            return Mfunc(self.values * other.values)
        return Mfunc(self.values * complex(other))

    __rmul__ = __mul__


def make_space(weights: Sequence[float] | np.ndarray) -> MeasureSpace:
    """Validate a list of atom masses into a MeasureSpace."""
    return MeasureSpace(np.asarray(list(weights), dtype=float))


def make_partition(
    space: MeasureSpace, blocks: Iterable[Iterable[int]]
) -> Partition:
    """Validate blocks of atom indices into a Partition of ``space``."""
    return Partition(tuple(tuple(blk) for blk in blocks), space.atom_count)


def singleton_blocks(atom_count: int) -> tuple[tuple[int], ...]:
    """The finest partition: one block per atom."""
    return tuple((i,) for i in range(atom_count))


def ensure_on_space(f: Mfunc, space: MeasureSpace, name: str = "function") -> None:
    if len(f) != space.atom_count:
        raise ValidationError(
            f"{name} has {len(f)} values but the space has {space.atom_count} atoms"
        )


class GeometricSpace(NamedTuple):
    space: MeasureSpace
    partition: Partition
    n: np.ndarray
    tail_mass: float


def geometric_space(p: float, n_atoms: int) -> GeometricSpace:
    """Truncated geometric probability space with the multiples-of-3 split.

    Atom ``k`` (0-based) represents the integer ``n = k + 1`` and carries
    mass ``p * (1-p)**(n-1)``.  The partition has two blocks: the atoms
    whose ``n`` is a multiple of 3, and all the others.  ``tail_mass`` is
    the probability mass ``(1-p)**n_atoms`` lost to truncation; it is
    reported rather than silently absorbed.
    """
    if not (0.0 < float(p) < 1.0):
        raise ValidationError(f"p must lie strictly between 0 and 1, got {p!r}")
    if n_atoms < 3:
        raise ValidationError(
            f"need at least 3 atoms so both blocks are non-empty, got {n_atoms}"
        )
    q = 1.0 - p
    n = np.arange(1, n_atoms + 1)
    space = make_space(p * q ** (n - 1.0))
    mult3 = tuple(i for i in range(n_atoms) if (i + 1) % 3 == 0)
    rest = tuple(i for i in range(n_atoms) if (i + 1) % 3 != 0)
    partition = make_partition(space, [mult3, rest])
    return GeometricSpace(space, partition, n, float(q**n_atoms))


class GridSpace(NamedTuple):
    space: MeasureSpace
    partition: Partition
    x: np.ndarray
    y: np.ndarray


def grid_space(nx: int, ny: int) -> GridSpace:
    """Midpoint-rule discretization of the unit square with column blocks.

    Atom ``(i, j)`` sits at ``((i + 1/2)/nx, (j + 1/2)/ny)`` with weight
    ``1/(nx*ny)`` and linear index ``i*ny + j``.  Blocks collect atoms of
    constant ``x``, so conditional expectation averages over ``y``.  The
    node coordinates are returned so integrands can be evaluated on the
    atoms.
    """
    if nx < 1 or ny < 1:
        raise ValidationError(f"grid dimensions must be positive, got {nx}x{ny}")
    xs = (np.arange(nx) + 0.5) / nx
    ys = (np.arange(ny) + 0.5) / ny
    x = np.repeat(xs, ny)
    y = np.tile(ys, nx)
    space = make_space(np.full(nx * ny, 1.0 / (nx * ny)))
    blocks = [tuple(range(i * ny, (i + 1) * ny)) for i in range(nx)]
    partition = make_partition(space, blocks)
    return GridSpace(space, partition, x, y)
