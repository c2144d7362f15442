"""Command line entry point: ``qnnlab <subcommand> [options]``.

Exit codes: 0 run complete (verdicts may still fail), 2 usage or config
error, 3 resource cap exceeded, 4 hypothesis violation.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
import warnings
from pathlib import Path

import numpy as np

from qnnlab import __version__
from qnnlab import constructor as cons
from qnnlab import heaviside as hv
from qnnlab import pitfalls as pf
from qnnlab import stochastic as st
from qnnlab.core import HEAVISIDE_PLUS, Layer, Network, dumps_network, load_network, network_forward
from qnnlab.errors import HypothesisViolation, ResourceCapError
from qnnlab.reports import Run

EXIT_OK, EXIT_USAGE, EXIT_CAP, EXIT_HYPOTHESIS = 0, 2, 3, 4
MAX_EVAL_POINTS = 10**7


class UsageError(Exception):
    pass


# builtin targets: name -> (vectorised f, Lipschitz constant on [0, S]^n0)
def _paraboloid(x):
    return np.sum((x - 0.5) ** 2, axis=1) + 1.0


def _paraboloid_lip(S, n0):
    return 2.0 * math.sqrt(n0) * max(0.5, S - 0.5)


BUILTINS = {
    "paraboloid": (_paraboloid, _paraboloid_lip),
    "norm": (lambda x: np.linalg.norm(x, axis=1), lambda S, n0: 1.0),
    "sine": (lambda x: np.sum(np.sin(np.pi * x), axis=1), lambda S, n0: math.pi * math.sqrt(n0)),
}

_INTERVAL = re.compile(r"^\s*([\[\(])\s*([^,]+?)\s*,\s*([^\]\)]+?)\s*([\]\)])\s*$")


def parse_box(text: str) -> cons.Hyperbox:
    """``"[0,1)x(0,2]"``: intervals joined by ``x``, brackets give closedness."""
    parts = re.split(r"\s*[x;]\s*(?=[\[\(])", text.strip())
    intervals = []
    for part in parts:
        m = _INTERVAL.match(part)
        if not m:
            raise UsageError(f"malformed interval {part!r}")
        try:
            lo, hi = float(m.group(2)), float(m.group(3))
        except ValueError:
            raise UsageError(f"non-numeric endpoint in {part!r}") from None
        try:
            intervals.append(cons.Interval(lo, hi, m.group(1) == "[", m.group(4) == "]"))
        except ValueError as exc:
            raise UsageError(f"invalid interval {part!r}: {exc}") from None
    return cons.Hyperbox(tuple(intervals))


def _read_matrix(path, what="inputs"):
    path = Path(path)
    if not path.exists():
        raise UsageError(f"{what} file {path} not found")
    text = path.read_text(encoding="utf-8").strip()
    if not text:
        raise UsageError(f"{what} file {path} is empty")
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            rows.append([float(v) for v in re.split(r"[,\s]+", line)])
        except ValueError:
            continue  # header
    if not rows:
        raise UsageError(f"{what} file {path} has no numeric rows")
    if len({len(r) for r in rows}) != 1:
        raise UsageError(f"{what} file {path} has ragged rows")
    return np.array(rows, dtype=float)


def _lambda_grid(args):
    try:
        return hv.lambda_grid(args.lambda_start, args.lambda_ratio, args.lambda_count)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _need_seed(args):
    if args.seed is None:
        raise UsageError("this run is stochastic; pass --seed")


def _config_echo(args):
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}


def _open_run(args):
    return Run(args.out, args.command, _config_echo(args), force=args.force)


def _plot(run, args, name, render):
    if not args.no_plot:
        run.figure(name, render)


def cmd_indicator(args):
    box = parse_box(args.box)
    net = cons.build_indicator_network(box)
    k = box.dim
    if args.grid**k > MAX_EVAL_POINTS:
        raise ResourceCapError(f"{args.grid}^{k} evaluation points exceed {MAX_EVAL_POINTS}",
                               args.grid**k, MAX_EVAL_POINTS)
    axes = []
    for iv in box.intervals:
        pad = 0.25 * max(iv.hi - iv.lo, 1.0)
        axes.append(np.union1d(np.linspace(iv.lo - pad, iv.hi + pad, args.grid), [iv.lo, iv.hi]))
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=-1)
    member = box.contains(points).astype(float)
    phi = network_forward(net, points)[:, 0]
    match = phi == member
    run = _open_run(args)
    run.text("indicator_network.json", dumps_network(net) + "\n")
    header = [f"x{i + 1}" for i in range(k)] + ["member", "phi", "match"]
    run.csv("indicator.csv", header, (list(p) + [m, f, ok] for p, m, f, ok in zip(points, member, phi, match)))
    if k <= 2:
        from qnnlab.plotting import indicator_figure

        _plot(run, args, "indicator.svg", lambda p: indicator_figure(p, points, member, phi))
    run.verdict("indicator_equals_membership", bool(match.all()))
    run.summary.update(box=str(box), points=len(points), mismatches=int((~match).sum()))
    return run


def _target(args):
    if args.table:
        data = _read_matrix(args.table, "table")
        if data.shape[1] < 2:
            raise UsageError("table needs input columns and a value column")
        from scipy.interpolate import NearestNDInterpolator, interp1d

        xs, ys = data[:, :-1], data[:, -1]
        n0 = xs.shape[1]
        if n0 == 1:
            order = np.argsort(xs[:, 0])
            near = interp1d(xs[order, 0], ys[order], kind="nearest", bounds_error=False,
                            fill_value=(ys[order][0], ys[order][-1]))
            f = lambda x: near(x[:, 0])
        else:
            interp = NearestNDInterpolator(xs, ys)
            f = lambda x: interp(x)
        if args.lipschitz is None:
            raise UsageError("tabulated targets need --lipschitz")
        return f, float(args.lipschitz), n0
    f, lip = BUILTINS[args.function]
    lip_value = float(args.lipschitz) if args.lipschitz is not None else lip(args.S, args.n0)
    return f, lip_value, args.n0


def cmd_approx(args):
    f, lip, n0 = _target(args)
    if not (args.eps > 0 and args.S > 0 and lip > 0):
        raise UsageError("eps, S and the Lipschitz constant must be positive")
    bound = cons.model_size_bound(n0, lip, args.S, args.eps)
    try:
        simple = cons.lipschitz_simple_function(f, lip, args.S, n0, args.eps, args.mode, cell_cap=args.cell_cap)
        net = cons.build_simple_qnn(simple)
    except ResourceCapError as exc:
        raise ResourceCapError(f"{exc}; neuron bound (2 n0 + 2) n^n0 = {bound}", exc.requested, exc.cap) from None
    if args.grid**n0 > MAX_EVAL_POINTS:
        raise ResourceCapError(f"{args.grid}^{n0} evaluation points exceed {MAX_EVAL_POINTS}",
                               args.grid**n0, MAX_EVAL_POINTS)
    points, fvals, phi, err = cons.grid_error_table(net, f, args.grid, args.S)
    sup = float(err.max())
    run = _open_run(args)
    run.text("approx_network.json", dumps_network(net) + "\n")
    header = [f"x{i + 1}" for i in range(n0)] + ["f", "phi", "abs_err"]
    run.csv("approx.csv", header, (list(p) + [a, b, e] for p, a, b, e in zip(points, fvals, phi, err)))
    if n0 == 2:
        from qnnlab.plotting import approximation_figure

        _plot(run, args, "approx.svg", lambda p: approximation_figure(p, points, fvals, phi, args.grid))
    run.verdict("sup_error_below_eps", sup < args.eps)
    run.verdict("neurons_within_bound", net.neuron_count() <= bound)
    run.summary.update(cells_per_axis=simple.partition.n, widths=net.widths, neurons=net.neuron_count(),
                       size_bound=bound, sup_error=sup, eps=args.eps, lipschitz=lip)
    return run


def _noise_model(net: Network, doc) -> st.NoiseModel:
    if not isinstance(doc, dict) or "layers" not in doc:
        raise UsageError("noise config must be an object with a 'layers' list")
    layers = doc["layers"]
    if not isinstance(layers, list) or len(layers) != net.depth:
        raise UsageError(f"noise config needs {net.depth} layer entries")
    default_family = doc.get("family", "gaussian")
    rows = []
    for layer, spec in zip(net.layers, layers):
        if not isinstance(spec, dict):
            raise UsageError("each noise layer entry must be an object")
        unknown = set(spec) - {"family", "scale", "l1_variance", "shift"}
        if unknown:
            raise UsageError(f"unknown noise keys {sorted(unknown)}")
        family = spec.get("family", default_family)
        if family not in st.FAMILIES:
            raise UsageError(f"unknown noise family {family!r}")
        if ("scale" in spec) == ("l1_variance" in spec):
            if family == "delta":
                rows.append(st.LayerNoise.around(layer, "delta", 0.0))
                continue
            raise UsageError("give exactly one of 'scale' or 'l1_variance' per layer")
        if "scale" in spec:
            rows.append(st.LayerNoise.around(layer, family, float(spec["scale"]), float(spec.get("shift", 0.0))))
        else:
            rows.append(st.LayerNoise.with_l1_variance(layer, family, float(spec["l1_variance"])))
    return st.NoiseModel(tuple(rows))


def _load_json(path, what):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise UsageError(f"{what} file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{what} file {path}: {exc}") from None


def _load_net(path):
    try:
        return load_network(path)
    except FileNotFoundError:
        raise UsageError(f"network file {path} not found") from None
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise UsageError(f"network file {path}: {exc}") from None


def cmd_smooth(args):
    net = _load_net(args.net)
    noise = _noise_model(net, _load_json(args.noise, "noise config"))
    stochastic = any(row.family != "delta" for row in noise)
    if stochastic:
        _need_seed(args)
    seed = 0 if args.seed is None else args.seed
    if args.inputs:
        inputs = _read_matrix(args.inputs)
        if inputs.shape[1] != net.input_dim:
            raise UsageError(f"inputs have {inputs.shape[1]} columns, network expects {net.input_dim}")
    else:
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(2**31,)))
        inputs = rng.uniform(-args.input_radius, args.input_radius, (args.n_inputs, net.input_dim))
    radius = max(args.input_radius, float(np.linalg.norm(inputs, axis=1).max()))
    report = st.bound_report(net, noise, inputs, input_radius=radius, samples=args.samples, seed=seed,
                             slack=args.slack)
    run = _open_run(args)
    header = ["layer", "theta", "closed_form_bound", "empirical_sup_error", "mc_stderr", "samples", "seed"]
    run.csv("smooth.csv", header, report.rows())
    from qnnlab.plotting import bound_figure

    _plot(run, args, "smooth.svg", lambda p: bound_figure(p, report))
    run.verdict("empirical_within_theta", report.holds)
    if args.eps is not None:
        run.verdict("final_bound_within_eps", report.theta[-1] <= args.eps)
    run.summary.update(violations=report.violations, inputs=len(inputs), input_radius=radius)
    return run


def cmd_anneal(args):
    budgets = st.annealing_budgets(args.C, args.eps)
    L = len(args.C)
    bounds = [st.lipschitz_bound(args.C, budgets, ell) for ell in range(1, L + 1)]
    run = _open_run(args)
    run.csv("anneal.csv", ["layer", "C", "var1_budget", "bound"],
            ((ell, c, b, t) for ell, (c, b, t) in enumerate(zip(args.C, budgets, bounds), start=1)))
    run.json("noise.json", {"family": args.family, "layers": [{"l1_variance": b} for b in budgets]})
    from qnnlab.plotting import budget_figure

    _plot(run, args, "anneal.svg", lambda p: budget_figure(p, budgets, bounds, args.eps))
    run.verdict("bounds_within_eps", all(b <= args.eps for b in bounds))
    for ell, (b, t) in enumerate(zip(budgets, bounds), start=1):
        print(f"layer {ell}: var1 budget {b:.17g}, bound {t:.17g}")
    return run


def _schedule(args, L):
    if args.lambda_exponents or args.rate_exponents:
        if not (args.lambda_exponents and args.rate_exponents):
            raise UsageError("give both --lambda-exponents and --rate-exponents")
        try:
            return hv.RateSchedule(L, tuple(args.lambda_exponents), tuple(args.rate_exponents))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    return hv.SCHEDULES[args.schedule](L)


def _family(name):
    try:
        return hv.get_family(name)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_rate_check(args):
    family = _family(args.family)
    L = len(args.lambda_exponents) if args.lambda_exponents else args.layers
    sched = _schedule(args, L)
    grid = _lambda_grid(args)
    if any(not e > 0 for e in args.eps):
        raise UsageError("eps values must be positive")
    run = _open_run(args)
    verdict_rows, reports = [], []
    for eps in args.eps:
        rep = hv.check_rate_convergence(family, sched, eps, grid)
        reports.append(rep)
        for (cond, ell), ok in sorted(rep.verdicts.items(), key=lambda kv: (kv[0][1], kv[0][0])):
            verdict_rows.append((eps, cond, ell, ok))
            run.verdict(f"eps={eps:g}/{cond}/layer{ell}", ok)
    header = ["eps", "lambda", "condition_id", "layer", "value", "in_domain"]
    run.csv("rate_check.csv", header,
            ((rep.eps, r.lam, r.condition, r.layer, r.value, r.in_domain) for rep in reports for r in rep.rows))
    run.csv("rate_verdicts.csv", ["eps", "condition_id", "layer", "verdict"], verdict_rows)
    from qnnlab.plotting import rate_figure

    _plot(run, args, "rate_check.svg", lambda p: rate_figure(p, reports[0]))
    run.summary.update(schedule={"lambda_exponents": sched.lambda_exponents, "rate_exponents": sched.rate_exponents})
    return run


def cmd_pointwise(args):
    net = _load_net(args.net)
    family = _family(args.family)
    sched = _schedule(args, net.depth)
    grid = _lambda_grid(args)
    inputs = _read_matrix(args.inputs)
    if inputs.shape[1] != net.input_dim:
        raise UsageError(f"inputs have {inputs.shape[1]} columns, network expects {net.input_dim}")
    reports = [hv.pointwise_convergence_experiment(net, family, sched, x0, grid) for x0 in inputs]
    run = _open_run(args)
    header = ["input", "lambda", "layer", "error", "rate", "ratio", "verdict"]
    run.csv("pointwise.csv", header,
            ((k, r.lam, r.layer, r.error, r.rate, r.ratio, rep.verdicts[r.layer])
             for k, rep in enumerate(reports) for r in rep.rows))
    from qnnlab.plotting import pointwise_figure

    _plot(run, args, "pointwise.svg", lambda p: pointwise_figure(p, reports))
    for k, rep in enumerate(reports):
        for ell, ok in rep.verdicts.items():
            run.verdict(f"input{k}/layer{ell}", ok)
    run.summary.update(weight_norms=reports[0].weight_norms)
    return run


def cmd_counterexample(args):
    if args.w1 == 0:
        raise UsageError("w1 must be non-zero")
    grid = _lambda_grid(args)
    if args.x0:
        x0s = list(args.x0)
    else:
        # evenly spread points of the open half-line w1 x + b1 < 0, within distance `span` of its end
        end = -args.b1 / args.w1
        direction = -1.0 if args.w1 > 0 else 1.0
        x0s = [end + direction * args.span * (k + 1) / args.points for k in range(args.points)]
    rep = hv.counterexample_run(args.w1, args.b1, grid, x0s)
    run = _open_run(args)
    header = ["x0", "lambda", "phi_lambda", "phi", "in_plateau", "equals_lambda"]
    run.csv("counterexample.csv", header,
            ((r.x0, r.lam, r.phi_lam, r.phi, r.in_plateau, r.equals_lambda) for r in rep.rows))
    run.csv("counterexample_points.csv",
            ["x0", "pre_activation", "in_half_line", "on_boundary", "lambda_tilde", "plateau_size", "fails"],
            ((p.x0, p.pre_activation, p.in_half_line, p.on_boundary, p.lam_tilde, p.plateau_size, p.fails)
             for p in rep.points))
    from qnnlab.plotting import counterexample_figure

    _plot(run, args, "counterexample.svg", lambda p: counterexample_figure(p, rep))
    run.verdict("divergence_on_half_line", rep.all_fail)
    return run


def cmd_ternary(args):
    _need_seed(args)
    try:
        ds = pf.make_dataset(args.D, args.N, literal=args.literal)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rep = pf.projection_gap_experiment(args.D, args.N, args.count, args.seed, literal=args.literal)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    best, table = pf.brute_force_ternary(ds)
    run = _open_run(args)
    header = ["D", "N", "w1", "w2", "projected_w1", "projected_w2", "projected_loss",
              "ternary_best_w1", "ternary_best_w2", "ternary_best_loss", "gap"]
    run.csv("ternary.csv", header,
            ((r.D, r.N, r.w[0], r.w[1], r.projected[0], r.projected[1], r.projected_loss,
              r.best[0], r.best[1], r.best_loss, r.gap) for r in rep.rows))
    run.csv("ternary_table.csv", ["w1", "w2", "loss"], ((w[0], w[1], loss) for w, loss in table.items()))
    from qnnlab.plotting import ternary_figure

    _plot(run, args, "ternary.svg", lambda p: ternary_figure(p, ds, [r.w for r in rep.rows], best))
    for name, ok in rep.checks.items():
        run.verdict(name, ok)
    run.summary.update(report_only=rep.report_only, expected_gap=str(rep.expected_gap),
                       ternary_best=list(best), literal=args.literal)
    return run


def cmd_logistic(args):
    _need_seed(args)
    layer = Layer.build([[1.0]], [0.0], HEAVISIDE_PLUS)
    rows = []
    for k, (s, lam) in enumerate((s, lam) for s in args.s for lam in args.lam):
        if not lam > 0:
            raise UsageError("lambda values must be positive")
        noise = st.LayerNoise.around(layer, "logistic-bias", lam**2, bias_shift=lam)
        est = st.expected_layer(layer, noise, [s], args.samples, args.seed, key=(k,))
        closed = 1.0 / (1.0 + math.exp(-(s + lam) / lam**2))
        mean, se = float(est.mean[0]), float(est.stderr[0])
        z = abs(mean - closed) / se if se > 0 else (0.0 if mean == closed else math.inf)
        rows.append((s, lam, mean, se, closed, z))
    run = _open_run(args)
    run.csv("logistic.csv", ["s", "lambda", "mc_mean", "mc_stderr", "closed_form", "z"], rows)
    run.verdict("within_3_stderr", all(r[5] <= 3.0 for r in rows))
    return run


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=os.environ.get("QNNLAB_OUT", "qnnlab-out"),
                        help="output directory (default: $QNNLAB_OUT or ./qnnlab-out)")
    common.add_argument("--force", action="store_true", help="overwrite existing output files")
    common.add_argument("--config", help="JSON file of option defaults for this subcommand")
    common.add_argument("--no-plot", action="store_true", help="skip SVG figures")

    seeded = argparse.ArgumentParser(add_help=False)
    seeded.add_argument("--seed", type=int, default=None)
    seeded.add_argument("--samples", type=_positive_int, default=st.DEFAULT_SAMPLES)

    lam = argparse.ArgumentParser(add_help=False)
    lam.add_argument("--lambda-start", type=float, default=0.5)
    lam.add_argument("--lambda-ratio", type=float, default=0.5)
    lam.add_argument("--lambda-count", type=_positive_int, default=20)

    sched = argparse.ArgumentParser(add_help=False)
    sched.add_argument("--family", default="shifted-logistic")
    sched.add_argument("--schedule", choices=sorted(hv.SCHEDULES), default="staged")
    sched.add_argument("--lambda-exponents", type=float, nargs="+")
    sched.add_argument("--rate-exponents", type=float, nargs="+")

    parser = argparse.ArgumentParser(prog="qnnlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qnnlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("indicator", parents=[common], help="indicator network of a hyperbox")
    p.add_argument("--box", required=True, help='intervals such as "[0,1)x(0,2]"')
    p.add_argument("--grid", type=_positive_int, default=101, help="points per axis")
    p.set_defaults(func=cmd_indicator)

    p = sub.add_parser("approx", parents=[common], help="quantized approximation of a Lipschitz function")
    p.add_argument("--function", choices=sorted(BUILTINS), default="paraboloid")
    p.add_argument("--table", help="CSV of samples x1..xn,f (nearest-neighbour target)")
    p.add_argument("--lipschitz", type=float)
    p.add_argument("--S", type=float, default=1.0, help="domain side length")
    p.add_argument("--n0", type=_positive_int, default=2)
    p.add_argument("--eps", type=float, default=0.25)
    p.add_argument("--grid", type=_positive_int, default=201)
    p.add_argument("--mode", choices=["centre", "average"], default="centre")
    p.add_argument("--cell-cap", type=_positive_int, default=cons.DEFAULT_CELL_CAP)
    p.set_defaults(func=cmd_approx)

    p = sub.add_parser("smooth", parents=[common, seeded], help="stochastic regularisation bounds")
    p.add_argument("--net", required=True)
    p.add_argument("--noise", required=True, help="noise config JSON")
    p.add_argument("--inputs", help="CSV of inputs; default draws --n-inputs uniform points")
    p.add_argument("--n-inputs", type=_positive_int, default=200)
    p.add_argument("--input-radius", type=float, default=1.0)
    p.add_argument("--slack", type=float, default=4.0, help="stderr multiples allowed")
    p.add_argument("--eps", type=float, help="optional target for the final bound")
    p.set_defaults(func=cmd_smooth)

    p = sub.add_parser("anneal", parents=[common], help="per-layer L1-variance budgets")
    p.add_argument("--C", type=float, nargs="+", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--family", default="gaussian", choices=["gaussian", "uniform"])
    p.set_defaults(func=cmd_anneal)

    p = sub.add_parser("rate-check", parents=[common, lam, sched], help="rate-convergence conditions")
    p.add_argument("--layers", type=_positive_int, default=2)
    p.add_argument("--eps", type=float, nargs="+", default=[0.1, 1.0, 10.0])
    p.set_defaults(func=cmd_rate_check)

    p = sub.add_parser("pointwise", parents=[common, lam, sched], help="pointwise compositional convergence")
    p.add_argument("--net", required=True)
    p.add_argument("--inputs", required=True)
    p.set_defaults(func=cmd_pointwise)

    p = sub.add_parser("counterexample", parents=[common, lam], help="non-convergent piecewise-affine family")
    p.add_argument("--w1", type=float, default=2.0)
    p.add_argument("--b1", type=float, default=-1.0)
    p.add_argument("--x0", type=float, nargs="+")
    p.add_argument("--points", type=_positive_int, default=50)
    p.add_argument("--span", type=float, default=1.0)
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("ternary", parents=[common, seeded], help="ternary projection of a separating neuron")
    p.add_argument("--D", type=float, default=5.0)
    p.add_argument("--N", type=int, default=4)
    p.add_argument("--count", type=_positive_int, default=16)
    p.add_argument("--literal", action="store_true", help="use the non-separable variant of the dataset")
    p.set_defaults(func=cmd_ternary)

    p = sub.add_parser("logistic", parents=[common, seeded], help="logistic-bias expectation vs closed form")
    p.add_argument("--s", type=float, nargs="+", default=[-0.5, 0.0, 0.5])
    p.add_argument("--lam", type=float, nargs="+", default=[0.5, 1.0])
    p.set_defaults(func=cmd_logistic)
    return parser


def _apply_config(parser, args, argv):
    cfg = _load_json(args.config, "config")
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    dests = {a.dest for a in subparser._actions}
    unknown = sorted(set(k.replace("-", "_") for k in cfg) - dests)
    if unknown:
        raise UsageError(f"unknown config keys {unknown}")
    subparser.set_defaults(**{k.replace("-", "_"): v for k, v in cfg.items()})
    return parser.parse_args(argv)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        if args.config:
            args = _apply_config(parser, args, argv)
        run = args.func(args)
        run.finish()
    except (UsageError, FileExistsError) as exc:
        print(f"qnnlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceCapError as exc:
        print(f"qnnlab: resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except HypothesisViolation as exc:
        print(f"qnnlab: hypothesis violated: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except ValueError as exc:
        print(f"qnnlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    status = ("pass" if run.passed else "FAIL") if run.verdicts else "report only"
    print(f"{args.command}: {status} ({len(run.verdicts)} checks) -> {run.out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
