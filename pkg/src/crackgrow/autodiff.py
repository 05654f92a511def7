"""Scalar-tape reverse-mode automatic differentiation and the small
feed-forward network trained with it.

Every tape node is one scalar: the tape records (op kind, parent indices,
local partials, value) in append order, so parents always precede their
consumers and a single reverse sweep yields exact chain-rule gradients.
Fused weighted-sum nodes (``dot``/``linear``) keep node counts low enough
to train the ~400-parameter network in pure Python.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .fatigue import GeometryConfig

_LN10 = math.log(10.0)

Node = int


class Tape:
    """Append-only record of scalar operations for one evaluation."""

    __slots__ = ("_ops", "_parents", "_partials", "_values")

    def __init__(self) -> None:
        self._ops: list[str] = []
        self._parents: list[tuple[int, ...]] = []
        self._partials: list[tuple[float, ...]] = []
        self._values: list[float] = []

    def __len__(self) -> int:
        return len(self._values)

    def value(self, node: Node) -> float:
        return self._values[node]

    def values(self, nodes) -> np.ndarray:
        v = self._values
        return np.array([v[n] for n in nodes])

    def _push(self, op: str, value: float, parents: tuple[int, ...], partials: tuple[float, ...]) -> Node:
        self._ops.append(op)
        self._values.append(value)
        self._parents.append(parents)
        self._partials.append(partials)
        return len(self._values) - 1

    # -- leaves ---------------------------------------------------------

    def leaf(self, value: float) -> Node:
        """Differentiable input (e.g. a network parameter)."""
        return self._push("leaf", float(value), (), ())

    # -- elementary arithmetic ------------------------------------------

    def add(self, a: Node, b: Node) -> Node:
        return self._push("add", self._values[a] + self._values[b], (a, b), (1.0, 1.0))

    def sub(self, a: Node, b: Node) -> Node:
        return self._push("sub", self._values[a] - self._values[b], (a, b), (1.0, -1.0))

    def mul(self, a: Node, b: Node) -> Node:
        va, vb = self._values[a], self._values[b]
        return self._push("mul", va * vb, (a, b), (vb, va))

    def div(self, a: Node, b: Node) -> Node:
        va, vb = self._values[a], self._values[b]
        if vb == 0.0:
            raise DomainError("division by zero on tape")
        return self._push("div", va / vb, (a, b), (1.0 / vb, -va / (vb * vb)))

    def pow(self, base: Node, exponent: Node) -> Node:
        """base ** exponent for positive base (both ends differentiable)."""
        vb, ve = self._values[base], self._values[exponent]
        if vb <= 0.0:
            raise DomainError(f"pow needs a positive base, got {vb}")
        value = vb**ve
        return self._push("pow", value, (base, exponent), (ve * vb ** (ve - 1.0), value * math.log(vb)))

    def axpb(self, x: Node, a: float, b: float) -> Node:
        """Affine rescale a*x + b with constant coefficients."""
        return self._push("axpb", a * self._values[x] + b, (x,), (a,))

    # -- nonlinear scalars ----------------------------------------------

    def log10(self, x: Node) -> Node:
        v = self._values[x]
        if v <= 0.0:
            raise DomainError(f"log10 of non-positive value {v}")
        return self._push("log10", math.log10(v), (x,), (1.0 / (v * _LN10),))

    def exp10(self, x: Node) -> Node:
        value = 10.0 ** self._values[x]
        return self._push("exp10", value, (x,), (value * _LN10,))

    def absolute(self, x: Node) -> Node:
        v = self._values[x]
        return self._push("abs", abs(v), (x,), (1.0 if v > 0.0 else (-1.0 if v < 0.0 else 0.0),))

    def neg_part(self, x: Node) -> Node:
        """Gate for monotonicity penalties: -x where x < 0, else 0.
        The derivative follows the active branch (0 at the kink)."""
        v = self._values[x]
        if v < 0.0:
            return self._push("neg_part", -v, (x,), (-1.0,))
        return self._push("neg_part", 0.0, (x,), (0.0,))

    def clamp_min(self, x: Node, floor: float) -> Node:
        """max(x, floor); gradient flows only when x is above the floor."""
        v = self._values[x]
        if v > floor:
            return self._push("clamp_min", v, (x,), (1.0,))
        return self._push("clamp_min", floor, (x,), (0.0,))

    def sigmoid(self, x: Node) -> Node:
        v = self._values[x]
        if v >= 0.0:
            s = 1.0 / (1.0 + math.exp(-v))
        else:
            e = math.exp(v)
            s = e / (1.0 + e)
        return self._push("sigmoid", s, (x,), (s * (1.0 - s),))

    def tanh(self, x: Node) -> Node:
        t = math.tanh(self._values[x])
        return self._push("tanh", t, (x,), (1.0 - t * t,))

    # -- fused reductions -------------------------------------------------

    def sum(self, nodes) -> Node:
        v = self._values
        return self._push("sum", math.fsum(v[n] for n in nodes), tuple(nodes), (1.0,) * len(nodes))

    def dot(self, nodes, coeffs) -> Node:
        """Weighted sum with constant coefficients."""
        v = self._values
        value = math.fsum(v[n] * c for n, c in zip(nodes, coeffs))
        return self._push("dot", value, tuple(nodes), tuple(float(c) for c in coeffs))

    def linear_const(self, w_nodes, x_values, bias: Node) -> Node:
        """sum_i w_i * x_i + b where the inputs x are plain constants."""
        v = self._values
        value = math.fsum(v[w] * x for w, x in zip(w_nodes, x_values)) + v[bias]
        return self._push(
            "linear", value, (*w_nodes, bias), (*(float(x) for x in x_values), 1.0)
        )

    def linear(self, w_nodes, x_nodes, bias: Node) -> Node:
        """sum_i w_i * x_i + b where weights and inputs are both on tape."""
        v = self._values
        x_vals = tuple(v[x] for x in x_nodes)
        w_vals = tuple(v[w] for w in w_nodes)
        value = math.fsum(wv * xv for wv, xv in zip(w_vals, x_vals)) + v[bias]
        return self._push("linear", value, (*w_nodes, *x_nodes, bias), (*x_vals, *w_vals, 1.0))

    def near_kink(self, eps: float = 1e-8) -> bool:
        """True when any abs/gate node was evaluated within ``eps`` of its
        nondifferentiable point, or a clamp floor engaged (places where
        finite differences and the recorded subgradient legitimately
        disagree)."""
        for k, op in enumerate(self._ops):
            if op in ("abs", "neg_part"):
                if abs(self._values[self._parents[k][0]]) < eps:
                    return True
            elif op == "clamp_min" and self._partials[k][0] == 0.0:
                return True
        return False

    # -- reverse sweep -----------------------------------------------------

    def backward(self, root: Node) -> list[float]:
        """Gradient of the root node w.r.t. every node at or before it."""
        grads = [0.0] * (root + 1)
        grads[root] = 1.0
        parents = self._parents
        partials = self._partials
        for k in range(root, -1, -1):
            g = grads[k]
            if g == 0.0:
                continue
            for p, d in zip(parents[k], partials[k]):
                grads[p] += g * d
        return grads


@dataclass(frozen=True)
class OutputScaling:
    """Ranges mapping raw sigmoid outputs onto physical magnitudes:
    log10 of the growth coefficient and the growth exponent."""

    c_log10_range: tuple[float, float] = (-16.0, -6.0)
    m_range: tuple[float, float] = (1.0, 10.0)

    def __post_init__(self) -> None:
        for name, (lo, hi) in (("c_log10_range", self.c_log10_range), ("m_range", self.m_range)):
            if not lo < hi:
                raise DomainError(f"{name} must satisfy lo < hi, got ({lo}, {hi})")


@dataclass(eq=False)
class Network:
    """Feed-forward net: 4 features in, 3 sigmoid outputs (scaled SIF range
    and the two growth-law constants). Weight matrices are (out, in)."""

    layer_sizes: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    seed: int
    hidden_activation: str = "tanh"

    def __post_init__(self) -> None:
        if self.hidden_activation not in ("tanh", "sigmoid"):
            raise DomainError(f"unsupported hidden activation {self.hidden_activation!r}")
        for w in self.weights + self.biases:
            if not np.all(np.isfinite(w)):
                raise DomainError("network parameters must be finite")

    @property
    def n_parameters(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def to_dict(self) -> dict:
        return {
            "layer_sizes": list(self.layer_sizes),
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "seed": self.seed,
            "hidden_activation": self.hidden_activation,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "Network":
        return cls(
            layer_sizes=[int(s) for s in payload["layer_sizes"]],
            weights=[np.asarray(w, dtype=float) for w in payload["weights"]],
            biases=[np.asarray(b, dtype=float) for b in payload["biases"]],
            seed=int(payload["seed"]),
            hidden_activation=str(payload.get("hidden_activation", "tanh")),
        )


def init_network(layer_sizes, seed: int, hidden_activation: str = "tanh") -> Network:
    """Seeded init: uniform weights scaled by 1/sqrt(fan_in), zero biases."""
    sizes = [int(s) for s in layer_sizes]
    if any(s < 1 for s in sizes) or len(sizes) < 2:
        raise DomainError(f"layer sizes must all be >= 1, got {sizes}")
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(rng.uniform(-1.0, 1.0, size=(fan_out, fan_in)) / math.sqrt(fan_in))
        biases.append(np.zeros(fan_out))
    return Network(layer_sizes=sizes, weights=weights, biases=biases, seed=seed,
                   hidden_activation=hidden_activation)


@dataclass(eq=False)
class TapeParameters:
    """Node handles of one network's parameters on one tape, shaped like
    the weight/bias arrays."""

    w_nodes: list[list[list[Node]]] = field(default_factory=list)
    b_nodes: list[list[Node]] = field(default_factory=list)


def stage_parameters(tape: Tape, net: Network) -> TapeParameters:
    """Load every parameter onto the tape as a leaf node."""
    staged = TapeParameters()
    for w, b in zip(net.weights, net.biases):
        staged.w_nodes.append([[tape.leaf(v) for v in row] for row in w])
        staged.b_nodes.append([tape.leaf(v) for v in b])
    return staged


def collect_gradients(tape_grads: list[float], staged: TapeParameters, net: Network):
    """Pick parameter gradients out of a backward sweep, shaped like the
    network's weight and bias arrays."""
    grad_w = []
    grad_b = []
    for layer, (w_layer, b_layer) in enumerate(zip(staged.w_nodes, staged.b_nodes)):
        gw = np.empty_like(net.weights[layer])
        for i, row in enumerate(w_layer):
            for j, node in enumerate(row):
                gw[i, j] = tape_grads[node]
        grad_w.append(gw)
        grad_b.append(np.array([tape_grads[n] for n in b_layer]))
    return grad_w, grad_b


def forward_row(
    tape: Tape,
    net: Network,
    staged: TapeParameters,
    features_row,
    scaling: OutputScaling,
    sigma_w: float,
    geom: GeometryConfig,
) -> tuple[Node, Node, Node]:
    """Taped forward pass for one feature row.

    Returns nodes for the SIF range (MPa*sqrt(m)) and the per-row growth
    constants C and m, rescaled from the raw sigmoid outputs:
    the SIF range is the raw output times sigma_w * sqrt(W), C is 10 to an
    interpolated log-range, m a linear interpolation.
    """
    act = tape.tanh if net.hidden_activation == "tanh" else tape.sigmoid
    activations: list[Node] | None = None
    n_layers = len(net.weights)
    for layer in range(n_layers):
        w_layer = staged.w_nodes[layer]
        b_layer = staged.b_nodes[layer]
        if layer == 0:
            pre = [tape.linear_const(w_layer[i], features_row, b_layer[i]) for i in range(len(w_layer))]
        else:
            pre = [tape.linear(w_layer[i], activations, b_layer[i]) for i in range(len(w_layer))]
        if layer < n_layers - 1:
            activations = [act(p) for p in pre]
        else:
            activations = [tape.sigmoid(p) for p in pre]
    o_dk, o_c, o_m = activations
    dk_scale = sigma_w * math.sqrt(geom.gauge_width_m)
    c_lo, c_hi = scaling.c_log10_range
    m_lo, m_hi = scaling.m_range
    dk = tape.axpb(o_dk, dk_scale, 0.0)
    c = tape.exp10(tape.axpb(o_c, c_hi - c_lo, c_lo))
    m = tape.axpb(o_m, m_hi - m_lo, m_lo)
    return dk, c, m


def forward_sequence(
    tape: Tape,
    net: Network,
    staged: TapeParameters,
    features: np.ndarray,
    scaling: OutputScaling,
    sigma_w: float,
    geom: GeometryConfig,
):
    """Taped forward pass over all rows; returns (dk, c, m) node lists."""
    dks: list[Node] = []
    cs: list[Node] = []
    ms: list[Node] = []
    for row in np.asarray(features, dtype=float):
        dk, c, m = forward_row(tape, net, staged, row, scaling, sigma_w, geom)
        dks.append(dk)
        cs.append(c)
        ms.append(m)
    return dks, cs, ms


def forward_values(net: Network, features: np.ndarray) -> np.ndarray:
    """Plain numpy forward pass (no tape): raw sigmoid outputs, shape (n, 3)."""
    x = np.asarray(features, dtype=float).T
    hidden = np.tanh if net.hidden_activation == "tanh" else _np_sigmoid
    for layer in range(len(net.weights) - 1):
        x = hidden(net.weights[layer] @ x + net.biases[layer][:, None])
    x = _np_sigmoid(net.weights[-1] @ x + net.biases[-1][:, None])
    return x.T


def scale_outputs(
    raw: np.ndarray,
    scaling: OutputScaling,
    sigma_w: float,
    geom: GeometryConfig,
):
    """Map raw (n, 3) sigmoid outputs to physical (delta_k, C, m) arrays."""
    raw = np.asarray(raw, dtype=float)
    c_lo, c_hi = scaling.c_log10_range
    m_lo, m_hi = scaling.m_range
    delta_k = raw[:, 0] * sigma_w * math.sqrt(geom.gauge_width_m)
    coeff_c = 10.0 ** (c_lo + raw[:, 1] * (c_hi - c_lo))
    exponent_m = m_lo + raw[:, 2] * (m_hi - m_lo)
    return delta_k, coeff_c, exponent_m


def _np_sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out
