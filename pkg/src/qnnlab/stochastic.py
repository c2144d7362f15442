"""Stochastic layer-wise regularisation and its uniform error bounds.

A stochastic layer draws its parameters ``xi = (W, b)`` from a noise law
centred on the nominal parameters and is replaced by its expectation.  The
composition of expected layers stays within ``theta[l]`` of the nominal
network, where ``theta`` follows the recursion

    theta[1] = E[eta_1(|xi_1 - m_1|)]
    theta[l] = E[eta_l(|xi_l - m_l|)] + eta_l(theta[l-1])

and ``|.|`` is the Euclidean norm of the flattened parameter block.

Monte Carlo estimates are drawn in fixed-size chunks, each chunk with its own
substream ``SeedSequence(seed, spawn_key=(*key, chunk))``, and merged in
chunk order, so results depend only on ``(seed, samples)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

from qnnlab.core import Activation, Layer, Network, activate, forward_trace
from qnnlab.errors import HypothesisViolation

FAMILIES = ("delta", "gaussian", "uniform", "logistic-bias")
CHUNK = 1024
DEFAULT_SAMPLES = 10_000


class ConvergenceWarning(RuntimeWarning):
    pass


@dataclass(frozen=True, eq=False)
class LayerNoise:
    """Noise law for one layer's parameters.

    ``gaussian`` adds ``scale * N(0, 1)`` and ``uniform`` adds
    ``U(-scale, scale)`` to every weight and bias; ``logistic-bias`` perturbs
    only the biases with a logistic law of scale ``scale``.  Samples are
    centred on ``mean_weights`` / ``mean_biases``.
    """

    family: str
    scale: float
    mean_weights: np.ndarray
    mean_biases: np.ndarray

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown noise family {self.family!r}")
        scale = float(self.scale)
        if not scale >= 0:
            raise ValueError("noise scale must be non-negative")
        if (self.family == "delta") != (scale == 0.0):
            raise ValueError("delta noise must have scale 0 and only delta noise may")
        w = np.array(self.mean_weights, dtype=float)
        b = np.array(self.mean_biases, dtype=float).ravel()
        w.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "mean_weights", w)
        object.__setattr__(self, "mean_biases", b)

    @classmethod
    def around(cls, layer: Layer, family: str, scale: float, bias_shift: float = 0.0):
        """Noise centred on ``layer``'s parameters, biases optionally shifted."""
        if family == "delta" or scale == 0:
            family, scale = "delta", 0.0
        return cls(family, scale, layer.weights, layer.biases + bias_shift)

    @classmethod
    def with_l1_variance(cls, layer: Layer, family: str, target: float):
        """Noise around ``layer`` whose expected deviation norm equals ``target``."""
        if target == 0:
            return cls.around(layer, "delta", 0.0)
        n_params = layer.weights.size + layer.biases.size
        if family == "gaussian":
            return cls.around(layer, family, target / chi_mean(n_params))
        if family == "uniform" and n_params == 1:
            return cls.around(layer, family, 2.0 * target)
        raise ValueError(f"cannot invert the L1 variance for {family!r} noise")

    @property
    def n_params(self):
        if self.family == "logistic-bias":
            return self.mean_biases.size
        return self.mean_weights.size + self.mean_biases.size

    def _draw(self, rng, shape):
        if self.family == "gaussian":
            return self.scale * rng.standard_normal(shape)
        if self.family == "uniform":
            return rng.uniform(-self.scale, self.scale, shape)
        if self.family == "logistic-bias":
            return rng.logistic(0.0, self.scale, shape)
        return np.zeros(shape)

    def sample(self, rng, count):
        """Parameter draws ``(W, b)`` with shapes ``(count, n_in, n_out)``, ``(count, n_out)``."""
        w, b = self.mean_weights, self.mean_biases
        if self.family == "logistic-bias":
            return np.broadcast_to(w, (count,) + w.shape), b + self._draw(rng, (count,) + b.shape)
        return w + self._draw(rng, (count,) + w.shape), b + self._draw(rng, (count,) + b.shape)

    def deviation_norms(self, rng, count):
        return np.linalg.norm(self._draw(rng, (count, self.n_params)), axis=1)


@dataclass(frozen=True)
class NoiseModel:
    layers: tuple

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))

    @classmethod
    def for_network(cls, net: Network, family: str, scales):
        if np.isscalar(scales):
            scales = [scales] * net.depth
        if len(scales) != net.depth:
            raise ValueError(f"{len(scales)} scales for {net.depth} layers")
        return cls(tuple(LayerNoise.around(layer, family, s) for layer, s in zip(net.layers, scales)))

    @classmethod
    def from_l1_variances(cls, net: Network, family: str, targets):
        if len(targets) != net.depth:
            raise ValueError(f"{len(targets)} budgets for {net.depth} layers")
        return cls(tuple(LayerNoise.with_l1_variance(l, family, t) for l, t in zip(net.layers, targets)))

    def __len__(self):
        return len(self.layers)

    def __getitem__(self, i):
        return self.layers[i]

    def __iter__(self):
        return iter(self.layers)


@dataclass
class MCEstimate:
    mean: np.ndarray | float
    stderr: np.ndarray | float
    samples: int


def chunk_rng(seed: int, key: Sequence[int], chunk: int):
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(*key, chunk)))


def _chunk_sizes(samples: int):
    full, rest = divmod(samples, CHUNK)
    return [CHUNK] * full + ([rest] if rest else [])


def _mc_mean(draw_chunk: Callable, samples: int, seed: int, key: Sequence[int]) -> MCEstimate:
    """Chunked mean and standard error; ``draw_chunk(rng, count)`` returns stacked samples."""
    if samples < 1:
        raise ValueError("need at least one sample")
    n, mean, m2 = 0, None, None
    for c, count in enumerate(_chunk_sizes(samples)):
        vals = np.asarray(draw_chunk(chunk_rng(seed, key, c), count), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"non-finite Monte Carlo sample in chunk {c} (key {tuple(key)})")
        c_mean = vals.mean(axis=0)
        c_m2 = ((vals - c_mean) ** 2).sum(axis=0)
        if mean is None:
            n, mean, m2 = count, c_mean, c_m2
            continue
        total = n + count
        delta = c_mean - mean
        mean = mean + delta * (count / total)
        m2 = m2 + c_m2 + delta**2 * (n * count / total)
        n = total
    var = m2 / (n - 1) if n > 1 else np.zeros_like(m2)
    stderr = np.sqrt(var / n)
    if np.ndim(mean) == 0:
        return MCEstimate(float(mean), float(stderr), n)
    return MCEstimate(mean, stderr, n)


def expected_layer(layer: Layer, noise: LayerNoise, x, samples: int = DEFAULT_SAMPLES,
                   seed: int = 0, key: Sequence[int] = (0,)) -> MCEstimate:
    """Monte Carlo estimate of ``E[layer(x; xi)]`` with ``xi ~ noise``."""
    x = np.asarray(x, dtype=float)
    if noise.mean_weights.shape != layer.weights.shape:
        raise ValueError("noise parameters do not match the layer shape")
    if noise.family == "delta":
        s = x @ noise.mean_weights + noise.mean_biases
        out = layer.activate(s)
        return MCEstimate(out, np.zeros_like(out), 1)

    def draw(rng, count):
        w, b = noise.sample(rng, count)
        if x.ndim == 1:
            s = np.einsum("i,cio->co", x, w) + b
        else:
            s = np.matmul(x, w) + b[:, None, :]
        return layer.activate(s)

    return _mc_mean(draw, samples, seed, key)


@dataclass
class StochasticTrace:
    """``means[l]`` estimates the composed expected layers after ``l`` layers."""

    means: list
    stderrs: list
    samples: int
    seed: int


def expected_network_forward(net: Network, noise: NoiseModel, x, samples: int = DEFAULT_SAMPLES,
                             seed: int = 0) -> StochasticTrace:
    if len(noise) != net.depth:
        raise ValueError(f"noise model has {len(noise)} layers, network has {net.depth}")
    x = np.asarray(x, dtype=float)
    means, errs = [x], [np.zeros_like(x)]
    for ell, (layer, row) in enumerate(zip(net.layers, noise), start=1):
        est = expected_layer(layer, row, means[-1], samples, seed, key=(ell,))
        means.append(est.mean)
        errs.append(est.stderr)
    return StochasticTrace(means, errs, samples, seed)


def chi_mean(k: int) -> float:
    """Mean Euclidean norm of a standard normal vector in ``k`` dimensions."""
    return math.sqrt(2.0) * math.exp(special.gammaln((k + 1) / 2) - special.gammaln(k / 2))


def l1_variance(noise: LayerNoise, samples: int = DEFAULT_SAMPLES, seed: int = 0,
                method: str = "auto", key: Sequence[int] = (0,)) -> MCEstimate:
    """``E|xi - mean|``; exact for delta, Gaussian and one-parameter uniform/logistic laws."""
    if method not in ("auto", "mc"):
        raise ValueError(f"unknown method {method!r}")
    if noise.family == "delta":
        return MCEstimate(0.0, 0.0, 0)
    if method == "auto":
        closed = None
        if noise.family == "gaussian":
            closed = noise.scale * chi_mean(noise.n_params)
        elif noise.n_params == 1 and noise.family == "uniform":
            closed = noise.scale / 2
        elif noise.n_params == 1 and noise.family == "logistic-bias":
            closed = 2.0 * math.log(2.0) * noise.scale
        if closed is not None:
            return MCEstimate(closed, 0.0, 0)
    return _mc_mean(noise.deviation_norms, samples, seed, key)


@dataclass(frozen=True)
class LipschitzModulus:
    C: float

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError("Lipschitz constant must be positive")

    def __call__(self, t):
        return self.C * t


@dataclass(frozen=True)
class Modulus:
    """General modulus of continuity; ``eta`` must be non-decreasing with ``eta(0) = 0``."""

    eta: Callable

    def __post_init__(self):
        if self.eta(0.0) != 0:
            raise ValueError("a modulus of continuity must vanish at 0")

    def __call__(self, t):
        return self.eta(t)


def as_moduli(moduli):
    return [m if isinstance(m, (LipschitzModulus, Modulus)) else LipschitzModulus(float(m)) for m in moduli]


def theta_bounds(moduli, noise: NoiseModel, samples: int = DEFAULT_SAMPLES, seed: int = 0):
    """Per-layer uniform bounds; closed form for Lipschitz moduli with exact L1 variances."""
    moduli = as_moduli(moduli)
    if len(moduli) != len(noise):
        raise ValueError(f"{len(moduli)} moduli for {len(noise)} layers")
    theta, prev = [], 0.0
    for ell, (eta, row) in enumerate(zip(moduli, noise), start=1):
        if isinstance(eta, LipschitzModulus):
            own = eta.C * l1_variance(row, samples, seed, key=(ell,)).mean
        elif row.family == "delta":
            own = 0.0
        else:
            draw = lambda rng, count, row=row, eta=eta: eta(row.deviation_norms(rng, count))
            own = _mc_mean(draw, samples, seed, (ell,)).mean
        prev = own + (eta(prev) if ell > 1 else 0.0)
        theta.append(float(prev))
    return theta


def lipschitz_bound(C: Sequence[float], var1: Sequence[float], ell: int) -> float:
    """``sum_{i<=ell} (prod_{j=i..ell} C_j) var1_i``, evaluated by the theta recursion."""
    if not 1 <= ell <= min(len(C), len(var1)):
        raise ValueError(f"layer index {ell} out of range")
    bound = 0.0
    for i in range(ell):
        bound = C[i] * var1[i] + C[i] * bound
    return bound


def annealing_budgets(C: Sequence[float], eps: float):
    """L1-variance budgets giving every layer an equal share ``eps / L`` of the bound.

    Requires non-contractive layers (all ``C_j >= 1``).  Budgets are nudged
    down by a few ulps when rounding would push a partial bound above ``eps``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    C = [float(c) for c in C]
    if not C:
        raise ValueError("need at least one layer")
    bad = [j for j, c in enumerate(C, start=1) if not c >= 1]
    if bad:
        raise HypothesisViolation(
            f"annealing budgets need non-contractive layers (C_j >= 1); violated at layers {bad}"
        )
    L = len(C)
    budgets = []
    for i in range(L):
        budgets.append((eps / L) / math.prod(C[i:]))
    for _ in range(64):
        if all(lipschitz_bound(C, budgets, ell) <= eps for ell in range(1, L + 1)):
            return budgets
        budgets = [math.nextafter(b, 0.0) for b in budgets]
    raise ArithmeticError("could not round budgets below eps")


def spectral_norm(W, tol: float = 1e-12, max_iter: int = 1000) -> float:
    """Largest singular value by power iteration on ``W^T W``."""
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or not np.all(np.isfinite(W)):
        raise ValueError("W must be a finite 2-D array")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if not np.any(W):
        return 0.0
    v = np.random.default_rng(0).standard_normal(W.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(max_iter):
        u = W @ v
        new_sigma = float(np.linalg.norm(u))
        v = W.T @ u
        norm_v = np.linalg.norm(v)
        if norm_v == 0:
            # start vector fell in the null space
            v = np.ones(W.shape[1]) / math.sqrt(W.shape[1])
            continue
        v /= norm_v
        if abs(new_sigma - sigma) <= tol * new_sigma:
            return float(np.linalg.norm(W @ v))
        sigma = new_sigma
    warnings.warn(f"power iteration stopped after {max_iter} iterations", ConvergenceWarning)
    return float(np.linalg.norm(W @ v))


def _layer_activation_lipschitz(layer: Layer, ell: int) -> float:
    if layer.is_affine:
        return 1.0
    consts = [a.lipschitz for a in layer.activations]
    if any(c is None for c in consts):
        raise HypothesisViolation(f"layer {ell} has a discontinuous activation; it has no Lipschitz modulus")
    return max(consts)


_BOUNDED = {"logistic": 1.0, "tanh": 1.0}


def lipschitz_moduli(net: Network, noise: NoiseModel, input_radius: float,
                     samples: int = DEFAULT_SAMPLES, seed: int = 0):
    """Lipschitz constants valid for the bound's two perturbation terms.

    For ``phi(x, (W, b)) = sigma(x W + b)`` and inputs of norm at most ``R``,
    a parameter perturbation moves the output by at most
    ``L_sigma * sqrt(R**2 + 1) * |dxi|`` and an input perturbation by
    ``L_sigma * |W|_2 * |dx|``.  ``R`` is propagated through the layers using
    the activation range or ``R |W|_2 + |b| + sqrt(R**2 + 1) Var1``.
    """
    R = float(input_radius)
    out = []
    for ell, (layer, row) in enumerate(zip(net.layers, noise), start=1):
        l_sigma = _layer_activation_lipschitz(layer, ell)
        w_norm = spectral_norm(layer.weights)
        out.append(l_sigma * max(w_norm, math.sqrt(R * R + 1.0)))
        var1 = l1_variance(row, samples, seed, key=(ell,)).mean
        generic = R * w_norm + float(np.linalg.norm(layer.biases)) + math.sqrt(R * R + 1.0) * var1
        if layer.activations and all(a.kind in _BOUNDED for a in layer.activations):
            R = min(generic, math.sqrt(layer.n_out))
        else:
            R = generic
    return out


@dataclass
class BoundReport:
    theta: list
    lipschitz_closed_form: list
    empirical_sup_error: list
    mc_stderr: list
    violations: list
    samples_used: int
    seed: int
    slack: float

    @property
    def holds(self):
        return not any(self.violations)

    def rows(self):
        for ell, values in enumerate(zip(self.theta, self.lipschitz_closed_form,
                                         self.empirical_sup_error, self.mc_stderr), start=1):
            yield (ell, *values, self.samples_used, self.seed)


def bound_report(net: Network, noise: NoiseModel, inputs, moduli=None, input_radius=None,
                 samples: int = DEFAULT_SAMPLES, seed: int = 0, slack: float = 4.0) -> BoundReport:
    """Compare the theta bounds with the Monte Carlo deviation on ``inputs``.

    A layer counts as violated at an input when
    ``|mean - nominal| > theta + slack * |stderr|``.
    """
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    if moduli is None:
        radius = input_radius if input_radius is not None else float(np.linalg.norm(inputs, axis=1).max())
        moduli = lipschitz_moduli(net, noise, radius, samples, seed)
    moduli = as_moduli(moduli)
    theta = theta_bounds(moduli, noise, samples, seed)
    if all(isinstance(m, LipschitzModulus) for m in moduli):
        C = [m.C for m in moduli]
        var1 = [l1_variance(row, samples, seed, key=(ell,)).mean for ell, row in enumerate(noise, start=1)]
        closed = [lipschitz_bound(C, var1, ell) for ell in range(1, net.depth + 1)]
    else:
        closed = [float("nan")] * net.depth
    nominal = forward_trace(net, inputs)
    stochastic = expected_network_forward(net, noise, inputs, samples, seed)
    sup_err, sup_se, violations = [], [], []
    for ell in range(1, net.depth + 1):
        err = np.linalg.norm(stochastic.means[ell] - nominal[ell], axis=-1)
        se = np.linalg.norm(stochastic.stderrs[ell], axis=-1)
        sup_err.append(float(err.max()))
        sup_se.append(float(se.max()))
        violations.append(int(np.sum(err > theta[ell - 1] + slack * se)))
    return BoundReport(theta, closed, sup_err, sup_se, violations, samples, seed, slack)


def expected_activation(a: Activation, noise_std: float, s: float) -> float:
    """``E[a(s + z)]`` for ``z ~ N(0, noise_std**2)`` by adaptive quadrature on ``s +- 8 std``."""
    if not noise_std >= 0:
        raise ValueError("noise_std must be non-negative")
    if noise_std == 0:
        return float(activate(a, s))
    lo, hi = s - 8.0 * noise_std, s + 8.0 * noise_std
    kinks = [0.0] if a.kind in ("relu", "heaviside-plus", "heaviside-minus") else list(a.thresholds)
    points = [k for k in kinks if lo < k < hi] or None

    def integrand(t):
        return float(activate(a, t)) * math.exp(-0.5 * ((t - s) / noise_std) ** 2)

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, _ = integrate.quad(integrand, lo, hi, points=points, limit=200)
        except integrate.IntegrationWarning as exc:
            warnings.warn(f"quadrature did not converge: {exc}", ConvergenceWarning)
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            value, _ = integrate.quad(integrand, lo, hi, points=points, limit=200)
    return value / (noise_std * math.sqrt(2.0 * math.pi))
