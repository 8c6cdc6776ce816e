"""Set partitions and Faà di Bruno's formula for mixed partial derivatives.

Coordinates are indexed from 0. An index block is a sorted tuple of distinct
coordinate indices; a set partition is a tuple of blocks ordered by their
smallest element.

For a composition ``h(x) = outer(inner(x))`` and a block ``B`` of distinct
coordinates,

    d^{|B|} h / d^B x = sum over partitions P of B of
                        outer^{(|P|)}(inner(x)) * prod_{b in P} d^{|b|} inner / d^b x

which is what :func:`faa_di_bruno` evaluates. All values may be numpy arrays
that broadcast against each other, so a single call evaluates the formula at
many points at once.
"""

from __future__ import annotations

import functools
from collections.abc import Callable, Iterable, Iterator

import numpy as np

from .errors import DimensionLimitError, DomainError, NonFiniteError

IndexBlock = tuple[int, ...]
SetPartition = tuple[IndexBlock, ...]

#: Largest index set that may be partitioned; Bell(8) = 4140.
DEFAULT_MAX_DIMENSION = 8


def index_block(indices: Iterable[int], d: int | None = None) -> IndexBlock:
    """Validate and canonicalise a block of coordinate indices."""
    block = tuple(int(i) for i in indices)
    if not block:
        raise DomainError("index block must be nonempty")
    if len(set(block)) != len(block):
        raise DomainError(f"index block {block} has duplicate entries")
    if min(block) < 0:
        raise DomainError(f"index block {block} has negative entries")
    if d is not None and max(block) >= d:
        raise DomainError(f"index block {block} exceeds dimension {d}")
    return tuple(sorted(block))


def iter_partitions(indices: Iterable[int]) -> Iterator[SetPartition]:
    """Lazily generate all set partitions of ``indices``.

    Partitions are produced from restricted-growth strings visited in
    decreasing lexicographic order, so the finest partition comes first and
    the single-block partition last.
    """
    elems = tuple(indices)
    m = len(elems)
    if m == 0:
        return
    labels = [0] * m

    def rec(pos: int, nblocks: int) -> Iterator[SetPartition]:
        if pos == m:
            blocks: list[list[int]] = [[] for _ in range(nblocks)]
            for e, lab in zip(elems, labels):
                blocks[lab].append(e)
            yield tuple(tuple(b) for b in blocks)
            return
        for lab in range(nblocks, -1, -1):
            labels[pos] = lab
            yield from rec(pos + 1, max(nblocks, lab + 1))

    labels[0] = 0
    yield from rec(1, 1)


@functools.lru_cache(maxsize=512)
def _partitions_cached(block: IndexBlock) -> tuple[SetPartition, ...]:
    return tuple(iter_partitions(block))


def enumerate_partitions(
    indices: Iterable[int], max_dimension: int = DEFAULT_MAX_DIMENSION
) -> list[SetPartition]:
    """Return every set partition of ``indices`` in canonical order.

    Raises
    ------
    DimensionLimitError
        If the index set has more than ``max_dimension`` elements.
    """
    block = index_block(indices)
    if len(block) > max_dimension:
        raise DimensionLimitError(
            f"{len(block)} indices exceed the partition cap of {max_dimension}"
        )
    return list(_partitions_cached(block))


def bell_number(m: int) -> int:
    """Bell number via the Bell triangle."""
    row = [1]
    for _ in range(m):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


OuterDerivatives = Callable[[int], "np.ndarray | float"]
InnerBlockDerivatives = Callable[[IndexBlock], "np.ndarray | float"]


def faa_di_bruno(
    outer: OuterDerivatives,
    inner_value,
    inner: InnerBlockDerivatives,
    indices: Iterable[int],
    max_dimension: int = DEFAULT_MAX_DIMENSION,
):
    """Mixed partial of ``outer(inner(x))`` over the coordinates in ``indices``.

    Parameters
    ----------
    outer : callable
        ``outer(m)`` returns the m-th derivative of the outer scalar function
        evaluated at ``inner_value``.
    inner_value : float or ndarray
        Value of the inner function at the evaluation point(s); fixes the
        broadcast shape of the result.
    inner : callable
        ``inner(block)`` returns the mixed partial of the inner function over
        ``block``.
    indices : iterable of int
        Coordinates to differentiate in, each exactly once.

    Raises
    ------
    NonFiniteError
        If a partition contributes a NaN or infinite term; the message names
        the offending partition.
    """
    block = index_block(indices)
    parts = enumerate_partitions(block, max_dimension)
    outer_cache: dict[int, object] = {}
    inner_cache: dict[IndexBlock, object] = {}
    total = np.zeros(np.shape(inner_value))
    for part in parts:
        k = len(part)
        if k not in outer_cache:
            outer_cache[k] = outer(k)
        term = outer_cache[k]
        for b in part:
            if b not in inner_cache:
                inner_cache[b] = inner(b)
            term = term * inner_cache[b]
        if not np.all(np.isfinite(term)):
            raise NonFiniteError(f"non-finite term from partition {part}")
        total = total + term
    if total.ndim == 0:
        return float(total)
    return total
