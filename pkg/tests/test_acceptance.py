"""Acceptance suite: one test per criterion, each with its runtime budget.

The terminal summary prints one PASS/FAIL line per criterion.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from qnnlab import constructor as cons
from qnnlab import heaviside as hv
from qnnlab import pitfalls as pf
from qnnlab import stochastic as st
from qnnlab.core import HEAVISIDE_PLUS, LOGISTIC, RELU, TANH, Layer, Network, random_network
from qnnlab.reports import csv_text

_CSV_CACHE = {}


# --- oracles --------------------------------------------------------------


def membership_oracle(points, lo, hi, lo_closed, hi_closed):
    """Direct interval tests, written independently of the library."""
    ok = np.ones(len(points), dtype=bool)
    for k in range(points.shape[1]):
        x = points[:, k]
        ok &= (x >= lo[k]) if lo_closed[k] else (x > lo[k])
        ok &= (x <= hi[k]) if hi_closed[k] else (x < hi[k])
    return ok


def paraboloid(x):
    return (x[:, 0] - 0.5) ** 2 + (x[:, 1] - 0.5) ** 2 + 1.0


# --- criterion runners shared with the determinism check ------------------


def run_bound_validity(seed=3, nets=50, inputs=200, samples=10_000):
    rng = np.random.default_rng(seed)
    rows, violations = [], 0
    for k in range(nets):
        depth = int(rng.integers(1, 5))
        widths = [int(w) for w in rng.integers(1, 9, size=depth + 1)]
        net = random_network(rng, widths, [RELU, LOGISTIC, TANH], last_affine=bool(rng.integers(2)))
        scales = rng.uniform(0.002, 0.05, size=depth)
        noise = st.NoiseModel.for_network(net, "gaussian", list(scales))
        x = rng.uniform(-1.0, 1.0, size=(inputs, widths[0]))
        rep = st.bound_report(net, noise, x, samples=samples, seed=seed + k)
        violations += sum(rep.violations)
        rows.extend((k, *row) for row in rep.rows())
    header = ["net", "layer", "theta", "closed_form_bound", "empirical_sup_error", "mc_stderr", "samples", "seed"]
    return violations, csv_text(header, rows)


def logistic_pairs():
    lams = np.linspace(0.2, 1.5, 20)
    ts = np.linspace(-2.5, 2.5, 20)[np.argsort(np.sin(np.arange(20)))]
    return [(float(-lam + t * lam**2), float(lam)) for lam, t in zip(lams, ts)]


# Twenty 3-sigma comparisons carry a ~5% chance of a false alarm per seed;
# test_stochastic checks the z-score distribution over many seeds as well.
def run_logistic_closed_form(seed=6, samples=1_000_000):
    layer = Layer.build([[1.0]], [0.0], HEAVISIDE_PLUS)
    rows = []
    for k, (s, lam) in enumerate(logistic_pairs()):
        noise = st.LayerNoise.around(layer, "logistic-bias", lam**2, bias_shift=lam)
        est = st.expected_layer(layer, noise, [s], samples, seed, key=(k,))
        closed = 1.0 / (1.0 + math.exp(-(s + lam) / lam**2))
        rows.append((s, lam, float(est.mean[0]), float(est.stderr[0]), closed))
    return rows, csv_text(["s", "lambda", "mc_mean", "mc_stderr", "closed_form"], rows)


def random_ternary_heaviside(rng):
    depth = int(rng.integers(1, 4))
    widths = [int(w) for w in rng.integers(1, 5, size=depth + 1)]
    layers = []
    for n_in, n_out in zip(widths, widths[1:]):
        w = rng.integers(-1, 2, size=(n_in, n_out)).astype(float)
        b = rng.uniform(-1.5, 1.5, size=n_out)
        layers.append(Layer.build(w, b, HEAVISIDE_PLUS))
    return Network(tuple(layers))


def run_pointwise(seed=7, nets=20, inputs=20):
    rng = np.random.default_rng(seed)
    family = hv.ShiftedLogistic()
    rows, verdicts = [], []
    for k in range(nets):
        net = random_ternary_heaviside(rng)
        sched = hv.RateSchedule.staged(net.depth)
        for j, x0 in enumerate(rng.uniform(-1, 1, size=(inputs, net.input_dim))):
            rep = hv.pointwise_convergence_experiment(net, family, sched, x0)
            verdicts.extend(rep.verdicts.values())
            rows.extend((k, j, r.lam, r.layer, r.error, r.rate, r.ratio, rep.verdicts[r.layer]) for r in rep.rows)
    header = ["net", "input", "lambda", "layer", "error", "rate", "ratio", "verdict"]
    return verdicts, csv_text(header, rows)


# --- criteria -------------------------------------------------------------


def test_criterion_01_indicator_equivalence(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    mismatches = 0
    for _ in range(100):
        dim = int(rng.integers(1, 4))
        lo = rng.uniform(-2, 1, size=dim)
        hi = lo + rng.uniform(0, 2, size=dim)
        lo_closed = rng.integers(2, size=dim).astype(bool)
        hi_closed = rng.integers(2, size=dim).astype(bool)
        degenerate = rng.random(dim) < 0.1
        hi[degenerate] = lo[degenerate]
        lo_closed[degenerate] = hi_closed[degenerate] = True
        box = cons.Hyperbox(tuple(cons.Interval(*v) for v in zip(lo, hi, lo_closed, hi_closed)))
        # half the coordinates sit exactly on an endpoint to exercise open/closed semantics
        pts = rng.uniform(lo - 1, hi + 1, size=(10_000, dim))
        on_edge = rng.random((10_000, dim)) < 0.5
        edge_vals = np.where(rng.random((10_000, dim)) < 0.5, lo, hi)
        pts = np.where(on_edge, edge_vals, pts)
        net = cons.build_indicator_network(box)
        phi = net(pts)[:, 0]
        mismatches += int(np.count_nonzero(phi != membership_oracle(pts, lo, hi, lo_closed, hi_closed)))
    elapsed = time.perf_counter() - t0
    acceptance(1, f"mismatches={mismatches} over 100 boxes x 1e4 points, {elapsed:.2f}s (< 10s)")
    assert mismatches == 0
    assert elapsed < 10


@pytest.mark.parametrize("eps,bound", [(0.25, 384), (0.125, 1536)])
def test_criterion_02_lipschitz_approximation(acceptance, eps, bound):
    t0 = time.perf_counter()
    net = cons.approximate_lipschitz(paraboloid, math.sqrt(2), 1.0, 2, eps)
    sup = cons.sup_error_on_grid(net, paraboloid, 201)
    size_bound = cons.model_size_bound(2, math.sqrt(2), 1.0, eps)
    elapsed = time.perf_counter() - t0
    acceptance(2, f"eps={eps}: sup error {sup:.6g}, neurons {net.neuron_count()} <= {size_bound}, {elapsed:.2f}s")
    assert size_bound == bound  # 6 * n**2 with n = 8, 16
    assert sup < eps
    assert net.neuron_count() <= size_bound
    assert elapsed < 30


def test_criterion_03_theta_bound_validity(acceptance):
    t0 = time.perf_counter()
    violations, text = run_bound_validity()
    _CSV_CACHE[3] = text
    elapsed = time.perf_counter() - t0
    acceptance(3, f"violations={violations} over 50 nets x 200 inputs, {elapsed:.1f}s (< 300s)")
    assert violations == 0
    assert elapsed < 300


def test_criterion_04_annealing_guarantee(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    worst = 0.0
    checked = 0
    for _ in range(20):
        L = int(rng.integers(1, 7))
        C = rng.uniform(1.0, 6.0, size=L)
        C[rng.random(L) < 0.2] = 1.0
        for eps in (0.1, 1.0):
            budgets = st.annealing_budgets(list(C), eps)
            for ell in range(1, L + 1):
                b = st.lipschitz_bound(list(C), budgets, ell)
                worst = max(worst, float(b / eps))
                checked += 1
                assert b <= eps
    elapsed = time.perf_counter() - t0
    acceptance(4, f"{checked} (C, eps, layer) checks, max bound/eps = {worst!r}, {elapsed:.3f}s (< 1s)")
    assert elapsed < 1


def test_criterion_05_logistic_closed_form(acceptance):
    t0 = time.perf_counter()
    rows, text = run_logistic_closed_form()
    _CSV_CACHE[5] = text
    z = [abs(m - c) / se for _, _, m, se, c in rows]
    elapsed = time.perf_counter() - t0
    acceptance(5, f"max |MC - closed| / stderr = {max(z):.3f} over 20 pairs (<= 3), {elapsed:.1f}s (< 60s)")
    assert all(se > 0 for *_, se, _ in rows)
    assert max(z) <= 3.0
    assert elapsed < 60


def test_criterion_06_rate_convergence(acceptance):
    t0 = time.perf_counter()
    family = hv.ShiftedLogistic()
    staged_ok, equal_iv_fails = True, True
    for L in (2, 3):
        for eps in (0.1, 1.0, 10.0):
            staged = hv.check_rate_convergence(family, hv.RateSchedule.staged(L), eps)
            staged_ok &= staged.passed
            equal = hv.check_rate_convergence(family, hv.RateSchedule.equal(L), eps)
            equal_iv_fails &= all(not ok for (cond, _), ok in equal.verdicts.items() if cond == "iv")
    elapsed = time.perf_counter() - t0
    acceptance(6, f"staged schedule passes all: {staged_ok}; equal schedule fails (iv): {equal_iv_fails}, "
                  f"{elapsed:.2f}s (< 5s)")
    assert staged_ok
    assert equal_iv_fails
    assert elapsed < 5


def test_criterion_07_pointwise_convergence(acceptance):
    t0 = time.perf_counter()
    verdicts, text = run_pointwise()
    _CSV_CACHE[7] = text
    elapsed = time.perf_counter() - t0
    acceptance(7, f"{sum(verdicts)}/{len(verdicts)} (net, input, layer) ratios decay, {elapsed:.1f}s (< 60s)")
    assert all(verdicts)
    assert elapsed < 60


def test_criterion_08_counterexample(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    x0s = np.sort(rng.uniform(-1.0, 0.5, size=50))
    assert np.all(x0s < 0.5)
    grid = hv.lambda_grid()
    rep = hv.counterexample_run(2.0, -1.0, grid, x0s)
    plateau_rows = [r for r in rep.rows if r.in_plateau]
    exact = all(r.phi_lam == r.lam for r in plateau_rows)
    expected_plateau = sum(int(np.count_nonzero(grid < min(1.0, math.sqrt(1 - 2 * x)))) for x in x0s)
    fires = sum(p.fails for p in rep.points)
    phi_one = all(p.pre_activation < 0 for p in rep.points) and all(r.phi == 1.0 for r in rep.rows)
    elapsed = time.perf_counter() - t0
    acceptance(8, f"divergence fires at {fires}/50 points, {len(plateau_rows)} plateau values equal lambda "
                  f"exactly: {exact}, {elapsed:.2f}s (< 5s)")
    assert len(plateau_rows) == expected_plateau
    assert exact and phi_one
    assert fires == 50
    assert elapsed < 5


def test_criterion_09_ternary_projection(acceptance):
    t0 = time.perf_counter()
    rep = pf.projection_gap_experiment(5, 4, count=16, seed=9)
    best, table = pf.brute_force_ternary(pf.make_dataset(5, 4))
    rep64 = pf.projection_gap_experiment(5, 64, count=16, seed=9)
    elapsed = time.perf_counter() - t0
    acceptance(9, f"N=4: projected loss {rep.rows[0].projected_loss}, best {best} loss {table[best]}, "
                  f"gap {rep.rows[0].gap}; N=64 gap {rep64.rows[0].gap}, {elapsed:.3f}s (< 1s)")
    assert all(r.projected == (0, 1) and r.projected_loss == Fraction(3, 4) for r in rep.rows)
    assert best == (1, 0) and table[best] == Fraction(1, 4)
    assert all(r.gap == Fraction(1, 2) for r in rep.rows)
    assert all(r.gap == 1 - Fraction(2, 64) for r in rep64.rows)
    assert elapsed < 1


def test_criterion_10_determinism(acceptance):
    first = {
        3: _CSV_CACHE.get(3) or run_bound_validity()[1],
        5: _CSV_CACHE.get(5) or run_logistic_closed_form()[1],
        7: _CSV_CACHE.get(7) or run_pointwise()[1],
    }
    second = {3: run_bound_validity()[1], 5: run_logistic_closed_form()[1], 7: run_pointwise()[1]}
    same = {k: first[k].encode() == second[k].encode() for k in first}
    sizes = {k: len(first[k]) for k in first}
    acceptance(10, f"byte-identical reruns: {same}; CSV sizes {sizes}")
    assert all(same.values())
