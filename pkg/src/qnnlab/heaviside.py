"""Parametric regularisation of Heaviside networks.

A regularised Heaviside family ``sigma_lam`` replaces ``H+`` layer by layer,
with per-layer parameters ``lam_l = lam**e_l`` and convergence rates
``r_l = lam**g_l``.  Rate convergence asks that, as ``lam -> 0``,

    (i)   sigma_{lam_l}^{-1}(eps r_l)            -> 0
    (ii)  sigma_{lam_l}^{-1}(1 - eps r_l)        -> 0
    (iii) (1 - sigma_{lam_l}(0)) / r_l           -> 0
    (iv)  r_{l-1} / sigma_{lam_l}^{-1}(1 - eps r_l) -> 0    (l >= 2)

Limits are checked on a geometric lambda grid with a tail criterion applied
to log-magnitudes, so values that underflow to 0 still compare correctly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, log_expit, logit

from qnnlab.core import HEAVISIDE_PLUS, Layer, Network, forward_trace
from qnnlab.errors import HypothesisViolation

TAIL = 5
DROP_DECADES = 2.0


def _check_lam(lam):
    lam = np.asarray(lam, dtype=float)
    if np.any(~(lam > 0)):
        raise ValueError("regularisation parameter must be positive")
    return lam


class ShiftedLogistic:
    """``sigma_lam(s) = 1 / (1 + exp(-(s + lam) / lam**2))``."""

    name = "shifted-logistic"
    strictly_increasing = True

    def value(self, lam, s):
        lam = _check_lam(lam)
        return expit((np.asarray(s, dtype=float) + lam) / lam**2)

    def complement(self, lam, s):
        lam = _check_lam(lam)
        return expit(-(np.asarray(s, dtype=float) + lam) / lam**2)

    def log_complement(self, lam, s):
        lam = _check_lam(lam)
        return log_expit(-(np.asarray(s, dtype=float) + lam) / lam**2)

    def in_range(self, lam, x):
        return 0.0 < x < 1.0

    def complement_in_range(self, lam, y):
        return 0.0 < y < 1.0

    def inverse(self, lam, x):
        lam = float(_check_lam(lam))
        x = np.asarray(x, dtype=float)
        if np.any(~((x > 0) & (x < 1))):
            raise ValueError("inverse is defined on (0, 1) only")
        return lam**2 * logit(x) - lam

    def inverse_complement(self, lam, y):
        """``inverse(lam, 1 - y)`` without forming ``1 - y``."""
        lam = float(_check_lam(lam))
        y = np.asarray(y, dtype=float)
        if np.any(~((y > 0) & (y < 1))):
            raise ValueError("inverse is defined on (0, 1) only")
        return -(lam**2) * logit(y) - lam


class PiecewiseAffine:
    """Non-smooth surrogate: ``lam`` for ``s <= -lam**2``, affine up to 1 at ``s = 0``, then 1.

    Defined for ``0 < lam < 1``; the value 1 is used on all of ``s > 0``.
    """

    name = "piecewise-affine"
    strictly_increasing = False

    @staticmethod
    def _lam(lam):
        lam = _check_lam(lam)
        if np.any(lam >= 1):
            raise ValueError("the piecewise-affine family needs 0 < lam < 1")
        return lam

    def value(self, lam, s):
        lam = self._lam(lam)
        s = np.asarray(s, dtype=float)
        ramp = (1.0 - lam) / lam**2 * s + 1.0
        return np.where(s <= -(lam**2), lam, np.where(s <= 0, ramp, 1.0))

    def complement(self, lam, s):
        lam = self._lam(lam)
        s = np.asarray(s, dtype=float)
        ramp = -(1.0 - lam) / lam**2 * s
        return np.where(s <= -(lam**2), 1.0 - lam, np.where(s <= 0, ramp, 0.0))

    def log_complement(self, lam, s):
        with np.errstate(divide="ignore"):
            return np.log(self.complement(lam, s))

    def in_range(self, lam, x):
        return float(lam) < x < 1.0

    def complement_in_range(self, lam, y):
        return 0.0 < y < 1.0 - float(lam)

    def inverse(self, lam, x):
        lam = float(self._lam(lam))
        x = np.asarray(x, dtype=float)
        if np.any(~((x > lam) & (x < 1))):
            raise ValueError("inverse is defined on (lam, 1) only")
        return (x - 1.0) * lam**2 / (1.0 - lam)

    def inverse_complement(self, lam, y):
        lam = float(self._lam(lam))
        y = np.asarray(y, dtype=float)
        if np.any(~((y > 0) & (y < 1 - lam))):
            raise ValueError("inverse is defined on (lam, 1) only")
        return -y * lam**2 / (1.0 - lam)


FAMILIES = {
    "shifted-logistic": ShiftedLogistic(),
    "piecewise-affine": PiecewiseAffine(),
    "piecewise-affine-counterexample": PiecewiseAffine(),
    "counterexample": PiecewiseAffine(),
}


def get_family(name):
    try:
        return FAMILIES[name]
    except KeyError:
        raise ValueError(f"unknown family {name!r}; choose from {sorted(FAMILIES)}") from None


def sigma_lambda(family, lam, s):
    return family.value(lam, s)


def sigma_lambda_inv(family, lam, x):
    return family.inverse(lam, x)


@dataclass(frozen=True)
class RateSchedule:
    """Per-layer exponents: ``lam_l(lam) = lam**e_l`` and ``r_l(lam) = lam**g_l``."""

    L: int
    lambda_exponents: tuple
    rate_exponents: tuple

    def __post_init__(self):
        e = tuple(float(v) for v in self.lambda_exponents)
        g = tuple(float(v) for v in self.rate_exponents)
        if len(e) != self.L or len(g) != self.L:
            raise ValueError(f"schedule for L={self.L} needs {self.L} exponents of each kind")
        if any(v <= 0 for v in e + g):
            raise ValueError("schedule exponents must be positive")
        object.__setattr__(self, "lambda_exponents", e)
        object.__setattr__(self, "rate_exponents", g)

    @classmethod
    def staged(cls, L: int):
        """Faster convergence in early layers: exponent ``2 (L - l)`` below the last, 1 at the last."""
        e = [2.0 * (L - ell) for ell in range(1, L)] + [1.0]
        return cls(L, tuple(e), tuple(e))

    @classmethod
    def equal(cls, L: int):
        return cls(L, (1.0,) * L, (1.0,) * L)

    def lam(self, ell: int, lam: float) -> float:
        return lam ** self.lambda_exponents[ell - 1]

    def rate(self, ell: int, lam: float) -> float:
        return lam ** self.rate_exponents[ell - 1]


SCHEDULES = {"staged": RateSchedule.staged, "equal": RateSchedule.equal}


def lambda_grid(start: float = 0.5, ratio: float = 0.5, count: int = 20):
    if not (start > 0 and 0 < ratio < 1 and count >= 1):
        raise ValueError("lambda grid needs start > 0, 0 < ratio < 1, count >= 1")
    return start * ratio ** np.arange(count, dtype=float)


def decays(log_abs, tail: int = TAIL, drop: float = DROP_DECADES) -> bool:
    """Tail verdict on ``log10 |value|`` sequences.

    The last ``tail`` entries must be strictly decreasing (an exact zero,
    ``-inf``, may repeat) and the final entry must sit ``drop`` decades below
    the first.  An all-zero sequence counts as decayed.
    """
    vals = [float(v) for v in log_abs]
    if len(vals) < tail:
        return False
    if all(v == -math.inf for v in vals):
        return True
    last = vals[-tail:]
    for a, b in zip(last, last[1:]):
        if not (b < a or (a == -math.inf and b == -math.inf)):
            return False
    return last[-1] < vals[0] - drop


def _log10_abs(v):
    v = abs(float(v))
    return math.log10(v) if v > 0 else -math.inf


@dataclass
class RateRow:
    lam: float
    condition: str
    layer: int
    value: float
    log10_abs: float
    in_domain: bool


@dataclass
class RateCheckReport:
    family: str
    eps: float
    schedule: RateSchedule
    rows: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(self.verdicts.values())

    def verdict(self, condition, layer):
        return self.verdicts[(condition, layer)]


def check_rate_convergence(family, schedule: RateSchedule, eps: float, lam_grid=None) -> RateCheckReport:
    """Evaluate conditions (i)-(iv) along ``lam_grid`` and issue tail verdicts."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    lam_grid = lambda_grid() if lam_grid is None else np.asarray(lam_grid, dtype=float)
    if np.any(np.diff(lam_grid) >= 0):
        raise ValueError("lambda grid must decrease toward 0")
    report = RateCheckReport(family.name, float(eps), schedule)
    series: dict = {}
    for ell in range(1, schedule.L + 1):
        conditions = ("i", "ii", "iii") + (("iv",) if ell >= 2 else ())
        for cond in conditions:
            series[(cond, ell)] = []
        for lam in lam_grid:
            lam_l = schedule.lam(ell, lam)
            r = schedule.rate(ell, lam)
            y = eps * r
            entries = []

            ok = family.in_range(lam_l, y)
            v = float(family.inverse(lam_l, y)) if ok else math.nan
            entries.append(("i", v, _log10_abs(v) if ok else math.nan, ok))

            ok_c = family.complement_in_range(lam_l, y)
            upper = float(family.inverse_complement(lam_l, y)) if ok_c else math.nan
            entries.append(("ii", upper, _log10_abs(upper) if ok_c else math.nan, ok_c))

            log_v = float(family.log_complement(lam_l, 0.0)) - math.log(r)
            entries.append(("iii", math.exp(log_v), log_v / math.log(10.0), True))

            if ell >= 2:
                ok4 = ok_c and upper != 0.0
                v = schedule.rate(ell - 1, lam) / upper if ok4 else math.nan
                entries.append(("iv", v, _log10_abs(v) if ok4 else math.nan, ok4))

            for cond, value, log_abs, in_domain in entries:
                report.rows.append(RateRow(float(lam), cond, ell, value, log_abs, bool(in_domain)))
                if in_domain:
                    series[(cond, ell)].append(log_abs)
    report.verdicts = {key: decays(vals) for key, vals in series.items()}
    return report


def check_rate_convergence_eps(family, schedule, eps_values=(0.1, 1.0, 10.0), lam_grid=None):
    """One report per eps; the definition quantifies over every eps > 0."""
    return [check_rate_convergence(family, schedule, eps, lam_grid) for eps in eps_values]


def _require_heaviside(net: Network):
    for ell, layer in enumerate(net.layers, start=1):
        if layer.activations and any(a != HEAVISIDE_PLUS for a in layer.activations):
            raise HypothesisViolation(f"layer {ell} has a non-H+ activation")
        if layer.is_affine and ell < net.depth:
            raise HypothesisViolation(f"hidden layer {ell} has no activation")


@dataclass
class RegularisedTrace:
    """Regularised representations next to the quantized ones.

    ``deviations[l]`` is ``regularised - quantized`` computed through the
    complement ``1 - sigma`` where the quantized value is 1, which keeps
    relative precision for deviations far below machine epsilon.
    """

    values: list
    quantized: list
    deviations: list


def regularised_network_forward(net: Network, family, schedule: RateSchedule, lam: float, x) -> RegularisedTrace:
    _require_heaviside(net)
    if schedule.L != net.depth:
        raise ValueError(f"schedule has {schedule.L} layers, network has {net.depth}")
    x = np.asarray(x, dtype=float)
    quantized = forward_trace(net, x)
    values, devs = [x], [np.zeros_like(x)]
    d = np.zeros_like(x)
    for ell, layer in enumerate(net.layers, start=1):
        s = quantized[ell - 1] @ layer.weights + layer.biases
        s_lam = s + d @ layer.weights
        if layer.is_affine:
            values.append(s_lam)
            d = s_lam - s
        else:
            lam_l = schedule.lam(ell, lam)
            on = quantized[ell] == 1.0
            values.append(family.value(lam_l, s_lam))
            d = np.where(on, -family.complement(lam_l, s_lam), family.value(lam_l, s_lam))
        devs.append(d)
    return RegularisedTrace(values, quantized, devs)


@dataclass
class PointwiseRow:
    lam: float
    layer: int
    error: float
    rate: float
    ratio: float


@dataclass
class PointwiseReport:
    x0: np.ndarray
    rows: list
    verdicts: dict
    weight_norms: list

    @property
    def passed(self):
        return all(self.verdicts.values())


def pointwise_convergence_experiment(net: Network, family, schedule: RateSchedule, x0, lam_grid=None) -> PointwiseReport:
    """Ratios ``|Phi_lam^l(x0) - Phi^l(x0)| / r_l(lam)`` along the grid, with a decay verdict per layer."""
    lam_grid = lambda_grid() if lam_grid is None else np.asarray(lam_grid, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    rows, series = [], {ell: [] for ell in range(1, net.depth + 1)}
    for lam in lam_grid:
        trace = regularised_network_forward(net, family, schedule, float(lam), x0)
        for ell in range(1, net.depth + 1):
            # hypot is scaled, so tiny deviations do not underflow when squared
            err = math.hypot(*np.ravel(trace.deviations[ell]))
            r = schedule.rate(ell, float(lam))
            ratio = err / r
            rows.append(PointwiseRow(float(lam), ell, err, r, ratio))
            series[ell].append(_log10_abs(ratio))
    verdicts = {ell: decays(vals) for ell, vals in series.items()}
    norms = [float(np.linalg.norm(layer.weights)) for layer in net.layers]
    return PointwiseReport(x0, rows, verdicts, norms)


def counterexample_network(w1: float = 2.0, b1: float = -1.0) -> Network:
    """``Phi(x) = H+(-H+(w1 x + b1))``, the indicator of ``{x : w1 x + b1 < 0}``."""
    if w1 == 0:
        raise ValueError("w1 must be non-zero")
    return Network((
        Layer.build([[float(w1)]], [float(b1)], HEAVISIDE_PLUS),
        Layer.build([[-1.0]], [0.0], HEAVISIDE_PLUS),
    ))


@dataclass
class CounterexampleRow:
    x0: float
    lam: float
    phi_lam: float
    phi: float
    in_plateau: bool
    equals_lambda: bool


@dataclass
class CounterexamplePoint:
    x0: float
    pre_activation: float
    in_half_line: bool
    on_boundary: bool
    lam_tilde: float
    plateau_size: int
    fails: bool


@dataclass
class CounterexampleReport:
    w1: float
    b1: float
    rows: list
    points: list

    @property
    def all_fail(self):
        return all(p.fails for p in self.points if p.in_half_line)


def counterexample_run(w1: float, b1: float, lam_grid=None, x0s=(0.0,)) -> CounterexampleReport:
    """Witness the constant-``lam`` plateau of the piecewise-affine regularisation.

    For ``x0`` with ``w1 x0 + b1 < 0`` the inner layer outputs exactly ``lam``
    while ``lam < sqrt(-(w1 x0 + b1))``, so ``Phi_lam(x0) = lam`` whenever also
    ``lam < 1``: the limit is 0 although ``Phi(x0) = 1``.
    """
    lam_grid = lambda_grid() if lam_grid is None else np.asarray(lam_grid, dtype=float)
    net = counterexample_network(w1, b1)
    family = PiecewiseAffine()
    schedule = RateSchedule.equal(2)
    rows, points = [], []
    for x0 in x0s:
        x0 = float(x0)
        s1 = x0 * w1 + b1
        in_half_line, on_boundary = s1 < 0, s1 == 0
        lam_tilde = math.sqrt(-s1) if in_half_line else 0.0
        phi = float(forward_trace(net, [x0])[-1][0])
        plateau, exact = 0, True
        for lam in lam_grid:
            value = float(regularised_network_forward(net, family, schedule, float(lam), [x0]).values[-1][0])
            in_plateau = bool(in_half_line and lam < min(1.0, lam_tilde))
            equals = value == lam
            if in_plateau:
                plateau += 1
                exact &= equals
            rows.append(CounterexampleRow(x0, float(lam), value, phi, in_plateau, equals))
        fails = bool(in_half_line and plateau > 0 and exact and phi == 1.0)
        points.append(CounterexamplePoint(x0, s1, bool(in_half_line), bool(on_boundary), lam_tilde, plateau, fails))
    return CounterexampleReport(float(w1), float(b1), rows, points)
