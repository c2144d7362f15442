"""Naive ternary projection of a separating neuron can be loss-catastrophic.

A bias-free neuron ``H+(x1 w1 + x2 w2)`` separates a small planar dataset
exactly when ``D/2 < w2/w1 < D``.  Rescaled into ``[-1, 1]^2`` every such
weight projects to ``(0, 1)``, whose 0/1 loss tends to 1, while the best
ternary weight ``(1, 0)`` has loss ``1/N``.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

TERNARY = (-1, 0, 1)


@dataclass(frozen=True)
class LabeledDataset:
    points: tuple
    labels: tuple
    D: float
    N: int

    def __len__(self):
        return len(self.points)

    def arrays(self):
        return np.array(self.points, dtype=float), np.array(self.labels, dtype=int)


def make_dataset(D: float, N: int, literal: bool = False) -> LabeledDataset:
    """``2N`` labelled points in four families.

    Positives are ``(-D, 2)`` and ``(D, -2**(2-i))``; negatives are ``(D, -2)``
    and ``(-D, 2**(2-i))`` for ``i = 2..N``.  With ``literal=True`` the last
    family is ``(-D, 2**(N+2-i))`` instead, which is not linearly separable
    through the origin for any ``N >= 2``.
    """
    if not D > 2:
        raise ValueError("D must exceed 2")
    if int(N) != N or N < 2:
        raise ValueError("N must be an integer >= 2")
    N, D = int(N), float(D)
    idx = range(2, N + 1)
    pos = [(-D, 2.0)] + [(D, -(2.0 ** (2 - i))) for i in idx]
    neg_exp = (lambda i: N + 2 - i) if literal else (lambda i: 2 - i)
    neg = [(D, -2.0)] + [(-D, 2.0 ** neg_exp(i)) for i in idx]
    return LabeledDataset(tuple(pos + neg), (1,) * N + (0,) * N, D, N)


def predict(w, ds: LabeledDataset):
    x, _ = ds.arrays()
    return (x @ np.asarray(w, dtype=float) >= 0).astype(int)


def zero_one_loss(w, ds: LabeledDataset) -> Fraction:
    """Exact misclassified fraction; ``H+(0) = 1``."""
    _, y = ds.arrays()
    wrong = int(np.count_nonzero(predict(w, ds) != y))
    return Fraction(wrong, len(ds))


def continuous_optimal_sample(D: float, count: int, seed: int, margin: float = 0.05):
    """Separating weights ``(1/rho, 1)`` with ``rho = w2/w1`` drawn inside ``(D/2, D)``.

    ``margin`` trims each end of the cone by that fraction of its width so the
    strict inequalities survive floating-point evaluation.
    """
    if not D > 2:
        raise ValueError("D must exceed 2")
    if not 0 < margin < 0.5:
        raise ValueError("margin must lie in (0, 1/2)")
    rng = np.random.default_rng(seed)
    u = rng.uniform(margin, 1.0 - margin, size=int(count))
    rho = D / 2.0 * (1.0 + u)
    return [(float(1.0 / r), 1.0) for r in rho]


def project_to_ternary(w):
    """Nearest level of ``{-1, 0, 1}`` per coordinate, ties toward 0."""
    w = np.asarray(w, dtype=float)
    if np.any(np.abs(w) > 1):
        raise ValueError("weights must lie in [-1, 1]")
    out = np.where(w > 0.5, 1, np.where(w < -0.5, -1, 0))
    return tuple(int(v) for v in out)


def _tie_key(item):
    w, loss = item
    nnz = sum(v != 0 for v in w)
    return (loss, nnz, tuple(-v for v in w))


def brute_force_ternary(ds: LabeledDataset):
    """Loss of all nine ternary weights and a minimiser.

    Ties are broken by fewest non-zero weights, then lexicographically
    descending, which picks ``(1, 0)`` among the minimisers of this dataset.
    """
    table = {w: zero_one_loss(w, ds) for w in itertools.product(TERNARY, repeat=2)}
    best, _ = min(table.items(), key=_tie_key)
    return best, table


@dataclass
class GapRow:
    D: float
    N: int
    w: tuple
    projected: tuple
    projected_loss: Fraction
    best: tuple
    best_loss: Fraction
    gap: Fraction


@dataclass
class GapReport:
    D: float
    N: int
    rows: list
    report_only: bool
    continuous_losses: list

    @property
    def expected_gap(self):
        return 1 - Fraction(2, self.N)

    @property
    def checks(self):
        """Per-claim verdicts; empty in report-only mode."""
        if self.report_only:
            return {}
        return {
            "continuous_optimal": all(loss == 0 for loss in self.continuous_losses),
            "projects_to_0_1": all(r.projected == (0, 1) for r in self.rows),
            "gap": all(r.gap == self.expected_gap for r in self.rows),
        }

    @property
    def passed(self):
        return all(self.checks.values())


def projection_gap_experiment(D: float, N: int, count: int = 16, seed: int = 0, literal: bool = False) -> GapReport:
    ds = make_dataset(D, N, literal=literal)
    report_only = not D > 4
    if report_only:
        warnings.warn(f"D={D} <= 4: projection behaviour reported, not asserted", stacklevel=2)
    best, table = brute_force_ternary(ds)
    rows, cont = [], []
    for w in continuous_optimal_sample(D, count, seed):
        cont.append(zero_one_loss(w, ds))
        p = project_to_ternary(w)
        rows.append(GapRow(float(D), int(N), w, p, table[p], best, table[best], table[p] - table[best]))
    return GapReport(float(D), int(N), rows, report_only, cont)
