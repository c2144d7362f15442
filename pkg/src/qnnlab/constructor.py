"""Explicit quantized networks: hyperbox indicators and Lipschitz approximators.

The indicator of an axis-aligned box is a two-layer network whose first layer
tests the ``2 * n0`` half-spaces bounding the box with ternary weights and
Heaviside activations, and whose second layer fires only when all of them hold.
Stacking one such block per cell of a uniform grid, then reading the active
cell's value with a final linear layer, yields a three-layer quantized network
that represents any function constant on the cells.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from qnnlab.core import HEAVISIDE_MINUS, HEAVISIDE_PLUS, Layer, Network, network_forward
from qnnlab.errors import ResourceCapError

DEFAULT_CELL_CAP = 10**7
# dense second-layer matrix has 2 * n0 * N**2 entries
DEFAULT_DENSE_CAP = 5 * 10**7
SATURATED = 2**63 - 1


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    lo_closed: bool = True
    hi_closed: bool = True

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError("interval endpoints must be finite")
        if lo > hi:
            raise ValueError(f"interval has lo={lo} > hi={hi}")
        if lo == hi and not (self.lo_closed and self.hi_closed):
            raise ValueError("a degenerate interval must be closed at both ends")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        above = x >= self.lo if self.lo_closed else x > self.lo
        below = x <= self.hi if self.hi_closed else x < self.hi
        return above & below

    def __str__(self):
        return f"{'[' if self.lo_closed else '('}{self.lo!r},{self.hi!r}{']' if self.hi_closed else ')'}"


@dataclass(frozen=True)
class Hyperbox:
    intervals: tuple

    def __post_init__(self):
        intervals = tuple(self.intervals)
        if not intervals:
            raise ValueError("a hyperbox needs at least one interval")
        object.__setattr__(self, "intervals", intervals)

    @classmethod
    def closed(cls, lo: Sequence[float], hi: Sequence[float]):
        return cls(tuple(Interval(a, b) for a, b in zip(lo, hi)))

    @property
    def dim(self):
        return len(self.intervals)

    def contains(self, points):
        """Direct membership test; ``points`` has shape ``(..., dim)``."""
        points = np.asarray(points, dtype=float)
        inside = np.ones(points.shape[:-1], dtype=bool)
        for k, interval in enumerate(self.intervals):
            inside &= interval.contains(points[..., k])
        return inside

    def centre(self):
        return np.array([0.5 * (iv.lo + iv.hi) for iv in self.intervals])

    def __str__(self):
        return "x".join(str(iv) for iv in self.intervals)


def _intervals_meet(a: Interval, b: Interval) -> bool:
    lo, hi = max(a.lo, b.lo), min(a.hi, b.hi)
    if lo < hi:
        return True
    if lo > hi:
        return False
    return bool(a.contains(lo) and b.contains(lo))


def boxes_intersect(a: Hyperbox, b: Hyperbox) -> bool:
    return all(_intervals_meet(p, q) for p, q in zip(a.intervals, b.intervals))


def indicator_first_layer(box: Hyperbox) -> Layer:
    """Half-space tests: column j checks the lower end of axis j, column n0 + j the upper end."""
    n0 = box.dim
    weights = np.hstack([np.eye(n0), -np.eye(n0)])
    biases = [-iv.lo for iv in box.intervals] + [iv.hi for iv in box.intervals]
    acts = [HEAVISIDE_PLUS if iv.lo_closed else HEAVISIDE_MINUS for iv in box.intervals]
    acts += [HEAVISIDE_PLUS if iv.hi_closed else HEAVISIDE_MINUS for iv in box.intervals]
    return Layer.build(weights, biases, acts)


def build_indicator_network(box: Hyperbox) -> Network:
    n0 = box.dim
    first = indicator_first_layer(box)
    second = Layer.build(np.ones((2 * n0, 1)), [-2.0 * n0], HEAVISIDE_PLUS)
    return Network((first, second))


@dataclass(frozen=True, eq=False)
class GridPartition:
    """Uniform grid of ``n**n0`` cells on ``[0, S]**n0``.

    Cells are half-open ``[e_i, e_{i+1})`` along every axis except the last
    one, which is closed on top.  Cell ``s`` (0-based) has base-``n`` digits
    ``(i_0, ..., i_{n0-1})`` with ``s = i_0 + i_1 n + ... + i_{n0-1} n**(n0-1)``,
    digit ``k`` indexing axis ``k``.
    """

    S: float
    n0: int
    n: int
    edges: np.ndarray

    @property
    def N(self):
        return self.n**self.n0

    @property
    def delta(self):
        return self.S / self.n

    def digits(self, s: int) -> tuple:
        if not 0 <= s < self.N:
            raise IndexError(f"cell index {s} out of range for {self.N} cells")
        out = []
        for _ in range(self.n0):
            s, d = divmod(s, self.n)
            out.append(d)
        return tuple(out)

    def index(self, digits: Sequence[int]) -> int:
        return sum(int(d) * self.n**k for k, d in enumerate(digits))

    def _axis_interval(self, i: int) -> Interval:
        return Interval(self.edges[i], self.edges[i + 1], True, i == self.n - 1)

    def cell(self, s: int) -> Hyperbox:
        return Hyperbox(tuple(self._axis_interval(i) for i in self.digits(s)))

    @property
    def cells(self):
        return [self.cell(s) for s in range(self.N)]

    def centres(self):
        """Cell centres, shape ``(N, n0)``, ordered by cell index."""
        mids = 0.5 * (self.edges[:-1] + self.edges[1:])
        # digit 0 varies fastest, so reverse the product order
        grids = np.meshgrid(*([mids] * self.n0), indexing="ij")
        return np.stack([g.ravel() for g in reversed(grids)], axis=-1)

    def locate(self, points):
        """Cell index of each point; -1 for points outside ``[0, S]**n0``."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        idx = np.zeros(points.shape[0], dtype=np.int64)
        outside = np.zeros(points.shape[0], dtype=bool)
        for k in range(self.n0):
            x = points[:, k]
            i = np.searchsorted(self.edges, x, side="right") - 1
            i = np.where(x == self.edges[-1], self.n - 1, i)
            outside |= (x < self.edges[0]) | (x > self.edges[-1])
            idx += np.clip(i, 0, self.n - 1) * self.n**k
        return np.where(outside, -1, idx)


def grid_partition(S: float, n0: int, n: int, cell_cap: int = DEFAULT_CELL_CAP) -> GridPartition:
    if not S > 0:
        raise ValueError("S must be positive")
    if n0 < 1 or n < 1:
        raise ValueError("n0 and n must be positive")
    N = n**n0
    if N > cell_cap:
        raise ResourceCapError(f"{n}**{n0} = {N} cells exceeds the cap of {cell_cap}", N, cell_cap)
    edges = np.array([S * i / n for i in range(n + 1)], dtype=float)
    edges[0], edges[-1] = 0.0, float(S)
    edges.setflags(write=False)
    return GridPartition(float(S), int(n0), int(n), edges)


@dataclass(frozen=True, eq=False)
class SimpleFunction:
    """A function taking ``values[s]`` on cell ``s`` and 0 off the cover."""

    cells: tuple
    values: np.ndarray
    partition: GridPartition | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float).ravel()
        if len(values) != len(self.cells):
            raise ValueError(f"{len(values)} values for {len(self.cells)} cells")
        object.__setattr__(self, "cells", tuple(self.cells))
        object.__setattr__(self, "values", values)

    @classmethod
    def on_grid(cls, partition: GridPartition, values):
        return cls(tuple(partition.cells), values, partition)

    @property
    def dim(self):
        return self.cells[0].dim

    def __call__(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.partition is not None:
            idx = self.partition.locate(points)
            return np.where(idx >= 0, self.values[np.maximum(idx, 0)], 0.0)
        out = np.zeros(points.shape[0])
        for box, v in zip(self.cells, self.values):
            out = np.where(box.contains(points), v, out)
        return out


def find_overlap(cells: Sequence[Hyperbox]):
    """First pair of intersecting cells, or None."""
    for i, j in itertools.combinations(range(len(cells)), 2):
        if boxes_intersect(cells[i], cells[j]):
            return i, j
    return None


def build_simple_qnn(f: SimpleFunction, dense_cap: int = DEFAULT_DENSE_CAP) -> Network:
    """Three-layer network equal to ``f`` on its cover and 0 elsewhere."""
    cells = f.cells
    N, n0 = len(cells), f.dim
    if f.partition is None:
        pair = find_overlap(cells)
        if pair is not None:
            raise ValueError(f"cells {pair[0]} and {pair[1]} overlap")
    entries = 2 * n0 * N * N
    if entries > dense_cap:
        raise ResourceCapError(
            f"second layer would hold {entries} dense weights (cap {dense_cap})", entries, dense_cap
        )

    w1 = np.zeros((n0, 2 * n0 * N))
    b1 = np.empty(2 * n0 * N)
    acts1 = []
    for s, box in enumerate(cells):
        block = indicator_first_layer(box)
        w1[:, 2 * n0 * s : 2 * n0 * (s + 1)] = block.weights
        b1[2 * n0 * s : 2 * n0 * (s + 1)] = block.biases
        acts1.extend(block.activations)

    w2 = np.kron(np.eye(N), np.ones((2 * n0, 1)))
    b2 = np.full(N, -2.0 * n0)
    w3 = f.values.reshape(N, 1)
    return Network(
        (
            Layer.build(w1, b1, acts1),
            Layer.build(w2, b2, HEAVISIDE_PLUS),
            Layer.build(w3, [0.0]),
        )
    )


def _snap_ceil(r: float) -> int:
    # treat r within a few ulps of an integer as that integer, e.g. sqrt(2)*sqrt(2)/0.25
    k = round(r)
    if abs(r - k) <= 8 * np.finfo(float).eps * max(1.0, abs(r)):
        return max(int(k), 1)
    return max(math.ceil(r), 1)


def cells_per_axis(lipschitz: float, S: float, n0: int, eps: float) -> int:
    """Smallest n with ``n >= lipschitz * sqrt(n0) * S / eps``."""
    if not (lipschitz > 0 and S > 0 and eps > 0 and n0 >= 1):
        raise ValueError("lipschitz, S, eps and n0 must be positive")
    r = lipschitz * math.sqrt(n0) * S / eps
    if not math.isfinite(r):
        raise ResourceCapError(f"cells per axis is not finite ({r})")
    return _snap_ceil(r)


def model_size_bound(n0: int, lipschitz: float, S: float, eps: float) -> int:
    """Neuron bound ``(2 n0 + 2) * ceil(lipschitz sqrt(n0) S / eps)**n0``, saturating."""
    try:
        n = cells_per_axis(lipschitz, S, eps=eps, n0=n0)
    except ResourceCapError:
        return SATURATED
    return min((2 * n0 + 2) * n**n0, SATURATED)


def _cell_averages(f, partition: GridPartition, points_per_axis: int):
    # midpoint rule inside each cell
    offsets = (np.arange(points_per_axis) + 0.5) / points_per_axis
    grids = np.meshgrid(*([offsets] * partition.n0), indexing="ij")
    local = np.stack([g.ravel() for g in grids], axis=-1) * partition.delta
    lower = partition.centres() - 0.5 * partition.delta
    total = np.zeros(partition.N)
    for off in local:
        total += np.asarray(f(lower + off), dtype=float)
    return total / len(local)


def lipschitz_simple_function(
    f: Callable,
    lipschitz: float,
    S: float,
    n0: int,
    eps: float,
    mode: str = "centre",
    average_points: int = 4,
    cell_cap: int = DEFAULT_CELL_CAP,
) -> SimpleFunction:
    """Piecewise-constant surrogate of ``f`` on the grid the error target requires.

    ``f`` is vectorised: it maps an ``(m, n0)`` array to ``m`` values.  With
    ``mode="centre"`` each cell takes the value at its centre, so the error is
    at most ``lipschitz * diam / 2``; ``mode="average"`` uses a midpoint-rule
    cell average with ``average_points**n0`` nodes.
    """
    n = cells_per_axis(lipschitz, S, n0, eps)
    if n**n0 > cell_cap:
        raise ResourceCapError(f"{n}**{n0} cells exceeds the cap of {cell_cap}", n**n0, cell_cap)
    partition = grid_partition(S, n0, n, cell_cap)
    if mode == "centre":
        values = np.asarray(f(partition.centres()), dtype=float)
    elif mode == "average":
        values = _cell_averages(f, partition, average_points)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return SimpleFunction.on_grid(partition, values)


def approximate_lipschitz(f, lipschitz, S, n0, eps, mode="centre", average_points=4,
                          cell_cap=DEFAULT_CELL_CAP) -> Network:
    simple = lipschitz_simple_function(f, lipschitz, S, n0, eps, mode, average_points, cell_cap)
    return build_simple_qnn(simple)


def evaluation_grid(points_per_axis: int, n0: int, S: float = 1.0, lo: float = 0.0):
    if points_per_axis < 2:
        raise ValueError("need at least 2 grid points per axis")
    axis = np.linspace(lo, S, points_per_axis)
    grids = np.meshgrid(*([axis] * n0), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def grid_error_table(net: Network, f, points_per_axis: int, S: float = 1.0, chunk: int = 8192):
    """Arrays ``(points, f(points), net(points), |net - f|)`` over a uniform grid."""
    points = evaluation_grid(points_per_axis, net.input_dim, S)
    fvals = np.asarray(f(points), dtype=float)
    phi = np.concatenate(
        [network_forward(net, points[i : i + chunk])[:, 0] for i in range(0, len(points), chunk)]
    )
    return points, fvals, phi, np.abs(phi - fvals)


def sup_error_on_grid(net: Network, f, points_per_axis: int, S: float = 1.0) -> float:
    """``max |net(x) - f(x)|`` over the grid with both endpoints on every axis."""
    if net.output_dim != 1:
        raise ValueError("sup error needs a scalar-output network")
    return float(grid_error_table(net, f, points_per_axis, S)[3].max())


def second_layer_activity(net: Network, points):
    """Second representation of a three-layer approximator."""
    points = np.atleast_2d(points)
    return net.layers[1](net.layers[0](points))
