"""Feedforward networks with per-neuron activations and exact threshold semantics.

Conventions follow the row-vector form ``x @ W + b``: a layer mapping
``n_in`` to ``n_out`` neurons stores ``weights`` with shape ``(n_in, n_out)``
and ``biases`` with shape ``(n_out,)``.  Every evaluation function accepts
either a single input vector or a 2-D array whose rows are inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import expit

KINDS = ("identity", "relu", "logistic", "tanh", "heaviside-plus", "heaviside-minus", "stair")


@dataclass(frozen=True)
class Activation:
    """A scalar activation function identified by ``kind``.

    ``levels`` and ``thresholds`` are only used by the stair kind, which maps
    ``s`` to ``levels[0] + sum_k (levels[k] - levels[k-1]) * H+(s - thresholds[k-1])``.
    """

    kind: str
    levels: tuple = ()
    thresholds: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown activation kind {self.kind!r}")
        if self.kind == "stair":
            levels = tuple(float(v) for v in self.levels)
            thresholds = tuple(float(v) for v in self.thresholds)
            if len(levels) < 2:
                raise ValueError("stair activation needs at least two levels")
            if len(thresholds) != len(levels) - 1:
                raise ValueError("stair activation needs len(levels) - 1 thresholds")
            if any(b <= a for a, b in zip(levels, levels[1:])):
                raise ValueError("stair levels must be strictly increasing")
            if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
                raise ValueError("stair thresholds must be strictly increasing")
            object.__setattr__(self, "levels", levels)
            object.__setattr__(self, "thresholds", thresholds)
        elif self.levels or self.thresholds:
            raise ValueError(f"{self.kind} activation takes no levels or thresholds")

    @classmethod
    def stair(cls, levels, thresholds):
        return cls("stair", tuple(levels), tuple(thresholds))

    @property
    def codomain(self):
        """Finite set of output values, or None when the range is infinite."""
        if self.kind in ("heaviside-plus", "heaviside-minus"):
            return frozenset((0.0, 1.0))
        if self.kind == "stair":
            return frozenset(self.levels)
        return None

    @property
    def lipschitz(self):
        """Lipschitz constant, or None for discontinuous activations."""
        return {"identity": 1.0, "relu": 1.0, "logistic": 0.25, "tanh": 0.5}.get(self.kind)

    def __call__(self, s):
        return activate(self, s)

    def to_json(self):
        if self.kind == "stair":
            return {"kind": "stair", "levels": list(self.levels), "thresholds": list(self.thresholds)}
        return self.kind

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            return cls(obj)
        if isinstance(obj, dict) and obj.get("kind") == "stair":
            return cls.stair(obj["levels"], obj["thresholds"])
        raise ValueError(f"cannot decode activation {obj!r}")


IDENTITY = Activation("identity")
RELU = Activation("relu")
LOGISTIC = Activation("logistic")
TANH = Activation("tanh")
HEAVISIDE_PLUS = Activation("heaviside-plus")
HEAVISIDE_MINUS = Activation("heaviside-minus")


def heaviside_plus(s):
    return np.where(np.asarray(s) >= 0, 1.0, 0.0)


def heaviside_minus(s):
    return np.where(np.asarray(s) > 0, 1.0, 0.0)


def _stair(levels, thresholds, s):
    s = np.asarray(s, dtype=float)
    out = np.full(s.shape, levels[0])
    for k in range(1, len(levels)):
        out = out + (levels[k] - levels[k - 1]) * heaviside_plus(s - thresholds[k - 1])
    return out


def activate(a: Activation, s):
    """Vectorised evaluation of ``a`` on an array of pre-activations."""
    s = np.asarray(s, dtype=float)
    kind = a.kind
    if kind == "identity":
        return s.copy()
    if kind == "relu":
        return np.maximum(s, 0.0)
    if kind == "logistic":
        return expit(s)
    if kind == "tanh":
        # (e^s - 1) / (e^s + 1), which is tanh(s / 2)
        return np.tanh(0.5 * s)
    if kind == "heaviside-plus":
        return heaviside_plus(s)
    if kind == "heaviside-minus":
        return heaviside_minus(s)
    return _stair(a.levels, a.thresholds, s)


def eval_activation(a: Activation, s: float) -> float:
    s = float(s)
    if not np.isfinite(s):
        raise ValueError(f"activation input must be finite, got {s}")
    return float(activate(a, s))


def eval_stair(levels, thresholds, s: float) -> float:
    """Stair quantizer; the output is always one of ``levels``."""
    return eval_activation(Activation.stair(levels, thresholds), s)


@dataclass(frozen=True)
class QuantizationSet:
    levels: tuple

    def __post_init__(self):
        levels = tuple(float(v) for v in self.levels)
        if len(levels) < 2:
            raise ValueError("a quantization set needs K >= 2 levels")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ValueError("quantization levels must be strictly increasing")
        object.__setattr__(self, "levels", levels)

    @property
    def K(self):
        return len(self.levels)

    def __contains__(self, value):
        return float(value) in self.levels


def _frozen_array(values, ndim):
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-D array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class AffineLayer:
    weights: np.ndarray
    biases: np.ndarray

    def __post_init__(self):
        w = _frozen_array(self.weights, 2)
        b = _frozen_array(np.ravel(self.biases), 1)
        if w.shape[1] != b.shape[0]:
            raise ValueError(f"weights {w.shape} incompatible with {b.shape[0]} biases")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "biases", b)

    @property
    def n_in(self):
        return self.weights.shape[0]

    @property
    def n_out(self):
        return self.weights.shape[1]


def affine_apply(layer: AffineLayer, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != layer.n_in:
        raise ValueError(f"input has {x.shape[-1]} features, layer expects {layer.n_in}")
    return x @ layer.weights + layer.biases


@dataclass(frozen=True, eq=False)
class Layer:
    """Affine map followed by per-neuron activations.

    An empty ``activations`` tuple marks a purely affine layer.
    """

    affine: AffineLayer
    activations: tuple = ()

    def __post_init__(self):
        acts = tuple(self.activations)
        if len(acts) not in (0, self.affine.n_out):
            raise ValueError(
                f"layer has {self.affine.n_out} neurons but {len(acts)} activations"
            )
        object.__setattr__(self, "activations", acts)

    @classmethod
    def build(cls, weights, biases, activation=None):
        """Convenience constructor; ``activation`` may be one Activation or a list."""
        affine = AffineLayer(weights, biases)
        if activation is None:
            acts = ()
        elif isinstance(activation, Activation):
            acts = (activation,) * affine.n_out
        else:
            acts = tuple(activation)
        return cls(affine, acts)

    @property
    def weights(self):
        return self.affine.weights

    @property
    def biases(self):
        return self.affine.biases

    @property
    def n_in(self):
        return self.affine.n_in

    @property
    def n_out(self):
        return self.affine.n_out

    @property
    def is_affine(self):
        return not self.activations

    @cached_property
    def _groups(self):
        groups: dict[Activation, list[int]] = {}
        for i, a in enumerate(self.activations):
            groups.setdefault(a, []).append(i)
        return [(a, np.array(idx)) for a, idx in groups.items()]

    def activate(self, s):
        """Apply the per-neuron activations to pre-activations ``s`` (last axis)."""
        s = np.asarray(s, dtype=float)
        if self.is_affine:
            return s
        if len(self._groups) == 1:
            return activate(self._groups[0][0], s)
        out = np.empty_like(s)
        for a, idx in self._groups:
            out[..., idx] = activate(a, s[..., idx])
        return out

    def __call__(self, x):
        return self.activate(affine_apply(self.affine, x))


def layer_apply(layer: Layer, x):
    return layer(x)


@dataclass(frozen=True, eq=False)
class Network:
    layers: tuple
    input_dim: int = field(default=None)

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ValueError("a network needs at least one layer")
        input_dim = layers[0].n_in if self.input_dim is None else int(self.input_dim)
        if input_dim != layers[0].n_in:
            raise ValueError(f"input_dim {input_dim} != first layer width {layers[0].n_in}")
        for ell, (prev, cur) in enumerate(zip(layers, layers[1:]), start=2):
            if cur.n_in != prev.n_out:
                raise ValueError(
                    f"layer {ell} expects {cur.n_in} inputs but layer {ell - 1} emits {prev.n_out}"
                )
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "input_dim", input_dim)

    @property
    def depth(self):
        return len(self.layers)

    @property
    def widths(self):
        return [self.input_dim] + [layer.n_out for layer in self.layers]

    @property
    def output_dim(self):
        return self.layers[-1].n_out

    def neuron_count(self):
        """Neurons over all non-input layers."""
        return sum(layer.n_out for layer in self.layers)

    def __call__(self, x):
        return network_forward(self, x)


def forward_trace(net: Network, x):
    """Return ``[x^0, x^1, ..., x^L]``, a fresh list per call."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != net.input_dim:
        raise ValueError(f"input has {x.shape[-1]} features, network expects {net.input_dim}")
    trace = [x]
    for ell, layer in enumerate(net.layers, start=1):
        with np.errstate(over="ignore", invalid="ignore"):
            x = layer(x)
        if not np.all(np.isfinite(x)):
            raise ValueError(f"non-finite value in representation of layer {ell}")
        trace.append(x)
    return trace


def network_forward(net: Network, x):
    return forward_trace(net, x)[-1]


@dataclass
class LayerQuantization:
    weights_ok: bool
    activations_ok: bool
    required: bool


@dataclass
class QuantizationReport:
    layers: list

    @property
    def is_qnn(self):
        """True when every layer but the last is quantized by weights and activations."""
        return all(q.weights_ok and q.activations_ok for q in self.layers if q.required)


def check_quantized(net: Network, weight_set: QuantizationSet, activation_set: QuantizationSet):
    """Per-layer quantization checks; biases are exempt, the last layer is not required."""
    wset = np.array(weight_set.levels)
    aset = frozenset(activation_set.levels)
    rows = []
    for ell, layer in enumerate(net.layers, start=1):
        weights_ok = bool(np.all(np.isin(layer.weights, wset)))
        activations_ok = bool(layer.activations) and all(
            a.codomain is not None and a.codomain <= aset for a in layer.activations
        )
        rows.append(LayerQuantization(weights_ok, activations_ok, required=ell < net.depth))
    return QuantizationReport(rows)


# Serialisation ---------------------------------------------------------------


def network_to_dict(net: Network):
    return {
        "input_dim": net.input_dim,
        "layers": [
            {
                "weights": layer.weights.tolist(),
                "biases": layer.biases.tolist(),
                "activations": [a.to_json() for a in layer.activations],
            }
            for layer in net.layers
        ],
    }


def network_from_dict(doc) -> Network:
    try:
        layers = []
        for spec in doc["layers"]:
            weights = np.array(spec["weights"], dtype=float)
            if weights.ndim == 1:
                weights = weights.reshape(-1, 1)
            acts = tuple(Activation.from_json(a) for a in spec.get("activations", []))
            layers.append(Layer(AffineLayer(weights, spec["biases"]), acts))
        return Network(tuple(layers), doc.get("input_dim"))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed network document: {exc}") from exc


def dumps_network(net: Network) -> str:
    return json.dumps(network_to_dict(net), indent=1)


def loads_network(text: str) -> Network:
    return network_from_dict(json.loads(text))


def save_network(net: Network, path) -> None:
    Path(path).write_text(dumps_network(net) + "\n")


def load_network(path) -> Network:
    return loads_network(Path(path).read_text())


def random_network(rng, widths: Sequence[int], activations, last_affine=True, weight_scale=None):
    """Random dense network; ``activations`` is a pool sampled per layer."""
    layers = []
    pool = list(activations)
    for ell, (n_in, n_out) in enumerate(zip(widths, widths[1:]), start=1):
        scale = weight_scale if weight_scale is not None else 1.0 / np.sqrt(n_in)
        w = rng.normal(0.0, scale, size=(n_in, n_out))
        b = rng.normal(0.0, 0.5, size=n_out)
        if last_affine and ell == len(widths) - 1:
            act = None
        else:
            act = pool[rng.integers(len(pool))]
        layers.append(Layer.build(w, b, act))
    return Network(tuple(layers))
