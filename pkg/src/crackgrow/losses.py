"""The five ground-truth-free physics loss terms and their weighted total,
built entirely from tape operations so gradients reach the network.

Terms: initial-condition pull of the first SIF range toward the material
threshold, a log-scale boundary condition tying the integrated crack size
to the gauge width, two monotonicity penalties (growth rate and SIF range),
and the residual sum of squares of the log-log growth-law regression.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .autodiff import Node, Tape
from .errors import DomainError
from .fatigue import GeometryConfig

#: Floor applied to the integrated crack size before taking log10, so a
#: pathologically small early-training prediction cannot leave the log domain.
BC_SUM_FLOOR_MM = 1e-30

#: Floor on the regression slope denominator (variance of log10 SIF range).
RSS_VARIANCE_FLOOR = 1e-18


@dataclass(frozen=True)
class LossWeights:
    """Weights of the five terms.

    The monotonicity terms live on the raw growth-rate and SIF scales
    (orders of magnitude below the log-scale terms), so they default high
    enough to stay binding; at 10 or below they are numerically inert and
    training settles into non-monotone local optima.
    """

    w_ic: float = 1.0
    w_bc: float = 1.0
    w_mon_a: float = 1000.0
    w_mon_k: float = 1000.0
    w_rss: float = 1.0

    def __post_init__(self) -> None:
        values = self.as_tuple()
        if any(w < 0 for w in values) or all(w == 0 for w in values):
            raise DomainError(f"weights must be nonnegative with at least one positive: {values}")

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.w_ic, self.w_bc, self.w_mon_a, self.w_mon_k, self.w_rss)

    def to_dict(self) -> dict:
        return {"w_ic": self.w_ic, "w_bc": self.w_bc, "w_mon_a": self.w_mon_a,
                "w_mon_k": self.w_mon_k, "w_rss": self.w_rss}

    @classmethod
    def from_dict(cls, payload: dict) -> "LossWeights":
        return cls(**{k: float(v) for k, v in payload.items()})


@dataclass(frozen=True)
class LossBreakdown:
    """Detached values of each term plus the weighted total for one
    evaluation."""

    l_ic: float
    l_bc: float
    l_mon_a: float
    l_mon_k: float
    l_rss: float
    total: float
    weights: LossWeights

    def term_values(self) -> tuple[float, float, float, float, float]:
        return (self.l_ic, self.l_bc, self.l_mon_a, self.l_mon_k, self.l_rss)


def paris_rate_nodes(tape: Tape, c_nodes, dk_nodes, m_nodes) -> list[Node]:
    """Per-row growth rate C * dK**m on tape."""
    return [tape.mul(c, tape.pow(dk, m)) for c, dk, m in zip(c_nodes, dk_nodes, m_nodes)]


def loss_ic(tape: Tape, delta_k_first: Node, delta_k_th: float) -> Node:
    """|predicted first-row SIF range - material threshold|."""
    return tape.absolute(tape.axpb(delta_k_first, 1.0, -delta_k_th))


def loss_bc(tape: Tape, rates, cycles: np.ndarray, geom: GeometryConfig) -> Node:
    """|log10 W - log10(sum_i rate_i * dN_i)| with both sides in mm.

    Left-endpoint steps: the rate at row i covers the interval to row i+1.
    """
    cycles = np.asarray(cycles, dtype=float)
    if len(rates) != len(cycles) or len(cycles) < 2:
        raise DomainError("rates and cycles must align with length >= 2")
    dn = np.diff(cycles)
    if np.any(dn <= 0):
        raise DomainError("cycles must be strictly increasing")
    integrated = tape.dot(rates[:-1], dn)
    log_sum = tape.log10(tape.clamp_min(integrated, BC_SUM_FLOOR_MM))
    return tape.absolute(tape.axpb(log_sum, -1.0, math.log10(geom.gauge_width_mm)))


def _monotonicity_penalty(tape: Tape, nodes) -> Node:
    if len(nodes) < 2:
        raise DomainError("monotonicity penalty needs at least 2 rows")
    gates = [tape.neg_part(tape.sub(nodes[i + 1], nodes[i])) for i in range(len(nodes) - 1)]
    return tape.sum(gates)


def loss_mon_a(tape: Tape, rates) -> Node:
    """Sum of negative growth-rate steps, sign-flipped; zero when the
    predicted rate is nondecreasing."""
    return _monotonicity_penalty(tape, rates)


def loss_mon_k(tape: Tape, delta_ks) -> Node:
    """Same penalty applied to the SIF range sequence."""
    return _monotonicity_penalty(tape, delta_ks)


def loss_rss(tape: Tape, delta_ks, rates) -> Node:
    """Residual sum of squares of log10(rate) regressed on log10(dK),
    differentiable through the closed-form slope.

    Residuals are squared explicitly so the result stays nonnegative even
    when the slope denominator hits its variance floor.
    """
    n = len(delta_ks)
    if n < 3 or len(rates) != n:
        raise DomainError("regression loss needs >= 3 aligned rows")
    xs = [tape.log10(dk) for dk in delta_ks]
    ys = [tape.log10(r) for r in rates]
    x_mean = tape.axpb(tape.sum(xs), 1.0 / n, 0.0)
    y_mean = tape.axpb(tape.sum(ys), 1.0 / n, 0.0)
    dxs = [tape.sub(x, x_mean) for x in xs]
    dys = [tape.sub(y, y_mean) for y in ys]
    sxx = tape.sum([tape.mul(dx, dx) for dx in dxs])
    sxy = tape.sum([tape.mul(dx, dy) for dx, dy in zip(dxs, dys)])
    slope = tape.div(sxy, tape.clamp_min(sxx, RSS_VARIANCE_FLOOR))
    residuals = [tape.sub(dy, tape.mul(slope, dx)) for dx, dy in zip(dxs, dys)]
    return tape.sum([tape.mul(r, r) for r in residuals])


def total_loss(tape: Tape, term_nodes, weights: LossWeights) -> tuple[Node, LossBreakdown]:
    """Weighted sum of the five term nodes plus a detached breakdown."""
    if len(term_nodes) != 5:
        raise DomainError(f"expected 5 term nodes, got {len(term_nodes)}")
    total = tape.dot(term_nodes, weights.as_tuple())
    l_ic, l_bc, l_mon_a, l_mon_k, l_rss = (tape.value(t) for t in term_nodes)
    breakdown = LossBreakdown(
        l_ic=l_ic,
        l_bc=l_bc,
        l_mon_a=l_mon_a,
        l_mon_k=l_mon_k,
        l_rss=l_rss,
        total=tape.value(total),
        weights=weights,
    )
    return total, breakdown
