"""
Quadrature module
Tensor Gauss-Legendre x uniform-angle rules on polydiscs, weighted L2 norms with a fixed
pairwise summation tree, Skoda weights and refinement-based divergence detection.
"""

import logging
import re
import sys
import os
from dataclasses import dataclass
from functools import partial
from typing import Callable, Iterator, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import special

# Add parent directory to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
import config
from modules.koszul import KoszulSection
from modules.poly import Poly, evaluate_many, parse

# Set up logging
logging.basicConfig(level=config.LOG_LEVEL)
logger = logging.getLogger(__name__)


class NonFiniteWeightError(ArithmeticError):
    """The weight is infinite or NaN at a quadrature node."""

    def __init__(self, node):
        self.node = np.asarray(node).tolist()
        super().__init__(f"Non-finite weight at node {self.node}")


@dataclass(frozen=True, eq=False)
class DomainSpec:
    center: Tuple[complex, ...]
    radii: Tuple[float, ...]
    kind: str = "polydisc"

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(complex(c) for c in self.center))
        object.__setattr__(self, "radii", tuple(float(r) for r in self.radii))
        if self.kind != "polydisc":
            raise ValueError(f"Only polydisc domains are supported, got {self.kind!r}")
        if len(self.center) != len(self.radii) or not self.radii:
            raise ValueError("center and radii must have the same positive length")
        if any(r <= 0 for r in self.radii):
            raise ValueError(f"radii must be positive, got {self.radii}")

    @classmethod
    def unit(cls, n: int) -> "DomainSpec":
        return cls((0j,) * n, (1.0,) * n)

    @property
    def n(self) -> int:
        return len(self.radii)

    @property
    def volume(self) -> float:
        return float(np.prod([np.pi * r * r for r in self.radii]))

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Uniform random points, shape (count, n)."""
        radius = np.sqrt(rng.random((count, self.n))) * np.array(self.radii)
        angle = 2 * np.pi * rng.random((count, self.n))
        return np.array(self.center) + radius * np.exp(1j * angle)


@dataclass(frozen=True, eq=False)
class WeightSpec:
    """Weight data: psi expression, epsilon > 0 and q >= 0 (default min(n, r-1))."""
    psi: str = "0"
    epsilon: float = 1.0
    q: Optional[int] = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.q is not None and self.q < 0:
            raise ValueError(f"q must be nonnegative, got {self.q}")

    def resolved_q(self, n: int, r: int) -> int:
        return self.q if self.q is not None else min(n, r - 1)

    @property
    def bound(self) -> float:
        return (1 + self.epsilon) / self.epsilon


_NUMBER = r"[0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?"
_QUADRATIC = re.compile(rf"^(?:({_NUMBER})\s*\*\s*)?\|z\|\^2$")
_LOG_QUADRATIC = re.compile(rf"^(?:({_NUMBER})\s*\*\s*)?log\(\s*1\s*\+\s*\|z\|\^2\s*\)$")
_MODULUS_POWER = re.compile(r"\|z(\d+)\|\^(\d+)")


def _norm2(points: np.ndarray) -> np.ndarray:
    return np.sum(np.abs(points) ** 2, axis=1)


def parse_psi(text: str, n: int) -> Callable[[np.ndarray], np.ndarray]:
    """
    Build psi(points) -> real values from the weight grammar.

    Accepted forms: "0", "c*|z|^2", "c*log(1+|z|^2)", or a polynomial in |zj|^(2k) tokens
    such as "|z1|^2 + 1/2*|z2|^4". User polynomials are not checked for plurisubharmonicity.
    """
    text = text.strip()
    if text in ("", "0"):
        return lambda points: np.zeros(np.asarray(points).shape[0])
    match = _QUADRATIC.match(text)
    if match:
        c = float(match.group(1) or 1.0)
        return lambda points: c * _norm2(np.asarray(points, dtype=complex))
    match = _LOG_QUADRATIC.match(text)
    if match:
        c = float(match.group(1) or 1.0)
        return lambda points: c * np.log1p(_norm2(np.asarray(points, dtype=complex)))

    def substitute(m: re.Match) -> str:
        power = int(m.group(2))
        if power % 2:
            raise ValueError(f"Odd power |z{m.group(1)}|^{power} in psi")
        return f"z{m.group(1)}^{power // 2}"

    rewritten = _MODULUS_POWER.sub(substitute, text)
    if "|" in rewritten:
        raise ValueError(f"Cannot parse psi expression {text!r}")
    poly = parse(rewritten, n)
    logger.debug(f"psi {text!r} read as polynomial {poly} in |z_j|^2")
    return lambda points: evaluate_many(poly, np.abs(np.asarray(points, dtype=complex)) ** 2).real


class QuadratureGrid:
    """
    Tensor product of per-coordinate disc rules, generated lazily in blocks.

    The full node array for n = 2 at 64 x 64 per coordinate has 16.7M rows, so nodes and
    weights are materialized only on request.
    """

    def __init__(self, axes: Sequence[Tuple[np.ndarray, np.ndarray]], resolution: Tuple[int, int]):
        self.axes = [(np.asarray(pts, dtype=complex), np.asarray(wts, dtype=float)) for pts, wts in axes]
        self.resolution = resolution

    @property
    def n(self) -> int:
        return len(self.axes)

    @property
    def size(self) -> int:
        return int(np.prod([len(pts) for pts, _ in self.axes]))

    def iter_blocks(self, chunk: int = config.QUAD_CHUNK) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
        sizes = [len(pts) for pts, _ in self.axes]
        for start in range(0, self.size, chunk):
            flat = np.arange(start, min(start + chunk, self.size))
            multi = np.unravel_index(flat, sizes)
            nodes = np.stack([pts[idx] for (pts, _), idx in zip(self.axes, multi)], axis=1)
            weights = np.ones(flat.shape[0])
            for (_, wts), idx in zip(self.axes, multi):
                weights = weights * wts[idx]
            yield nodes, weights

    @property
    def nodes(self) -> np.ndarray:
        return np.concatenate([block for block, _ in self.iter_blocks()], axis=0)

    @property
    def weights(self) -> np.ndarray:
        return np.concatenate([w for _, w in self.iter_blocks()])


def polydisc_grid(dom: DomainSpec, n_rad: int, n_ang: int) -> QuadratureGrid:
    """
    Gauss-Legendre in the radius (weight rho d rho) times uniform angles offset by half a step.

    Args:
        dom: Polydisc
        n_rad: Radial nodes per coordinate (>= 2)
        n_ang: Angular nodes per coordinate (>= 4)

    Returns:
        QuadratureGrid whose weights sum to the polydisc volume
    """
    if n_rad < 2 or n_ang < 4:
        raise ValueError(f"Resolution must have n_rad >= 2 and n_ang >= 4, got ({n_rad}, {n_ang})")
    x, wx = special.roots_legendre(n_rad)
    theta = 2 * np.pi * (np.arange(n_ang) + 0.5) / n_ang
    w_theta = 2 * np.pi / n_ang
    axes = []
    for center, R in zip(dom.center, dom.radii):
        rho = R * (x + 1) / 2
        w_rho = wx * (R / 2) * rho
        points = center + (rho[:, None] * np.exp(1j * theta)[None, :]).ravel()
        weights = (w_rho[:, None] * np.full(n_ang, w_theta)[None, :]).ravel()
        axes.append((points, weights))
    return QuadratureGrid(axes, (n_rad, n_ang))


def pairwise_sum(values):
    """Sum along axis 0 with a fixed binary tree that depends only on the length."""
    v = np.asarray(values)
    if v.shape[0] == 0:
        return np.zeros(v.shape[1:], dtype=v.dtype)
    while v.shape[0] > 1:
        if v.shape[0] % 2:
            v = np.concatenate([v, np.zeros_like(v[:1])], axis=0)
        v = v[0::2] + v[1::2]
    return v[0]


def _evaluate_component(component, nodes: np.ndarray) -> np.ndarray:
    if isinstance(component, Poly):
        return evaluate_many(component, nodes)
    if hasattr(component, "evaluate_many"):
        return component.evaluate_many(nodes)
    return np.asarray(component(nodes), dtype=complex)


def weight_values(w: Callable, nodes: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        values = np.broadcast_to(np.asarray(w(nodes), dtype=float), (nodes.shape[0],))
    bad = ~np.isfinite(values)
    if bad.any():
        raise NonFiniteWeightError(nodes[int(np.argmax(bad))])
    return values


def weighted_norm2(F: Sequence, w: Callable, grid: QuadratureGrid) -> float:
    """
    sum over nodes of weight * sum_k |F_k(node)|^2 * w(node).

    Args:
        F: Components (Poly, objects with evaluate_many, or callables on node arrays)
        w: Weight function on (N, n) node arrays
        grid: Quadrature grid

    Returns:
        Discrete weighted squared L2 norm
    """
    partials = []
    for nodes, weights in grid.iter_blocks(config.QUAD_CHUNK):
        w_values = weight_values(w, nodes)
        density = np.zeros(nodes.shape[0])
        for component in F:
            density += np.abs(_evaluate_component(component, nodes)) ** 2
        partials.append(pairwise_sum(weights * density * w_values))
    return float(pairwise_sum(np.array(partials)))


def _g_norm2(sec: KoszulSection, nodes: np.ndarray) -> np.ndarray:
    total = np.zeros(nodes.shape[0])
    for gi in sec.g:
        total += np.abs(evaluate_many(gi, nodes)) ** 2
    return total


def _skoda_weight(nodes: np.ndarray, sec: KoszulSection, exponent: float, psi: Callable) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return np.power(_g_norm2(sec, nodes), -exponent) * np.exp(-psi(nodes))


def skoda_weights(sec: KoszulSection, ws: WeightSpec) -> Tuple[Callable, Callable]:
    """
    w_num = |g|^(-2q(1+eps)) e^(-psi) and w_den = |g|^(-2(q+q*eps+1)) e^(-psi).

    Singularities on the zero set of g are left to surface at integration time.
    """
    if all(gi.is_zero() for gi in sec.g):
        raise ValueError("Skoda weights need generators that are not all zero")
    q = ws.resolved_q(sec.n, sec.r)
    psi = parse_psi(ws.psi, sec.n)
    exponent_num = q * (1 + ws.epsilon)
    exponent_den = q + q * ws.epsilon + 1
    logger.debug(f"Skoda exponents on |g|^2: -{exponent_num} (h), -{exponent_den} (f)")
    return (partial(_skoda_weight, sec=sec, exponent=exponent_num, psi=psi),
            partial(_skoda_weight, sec=sec, exponent=exponent_den, psi=psi))


class RefinedEstimate(NamedTuple):
    value: float
    rel_change: float
    diverging: bool
    extrapolated: bool = False


def _growth(previous: float, current: float) -> float:
    if previous == 0:
        return 0.0 if current == 0 else float("inf")
    return (current - previous) / abs(previous)


def richardson(values: Sequence[float]) -> Optional[Tuple[float, float]]:
    """
    Second-order Richardson extrapolation over three consecutive doublings.

    Applies only when the successive differences shrink by a factor inside
    RICHARDSON_RATIO_RANGE, i.e. the rule is in its h^2 regime (corner singularities of
    |g|^(-2c) at a common zero of the generators). Returns (value, rel_change) where
    rel_change compares the two extrapolants, or None when the regime is not observed.
    """
    coarse, middle, fine = values
    d1, d2 = middle - coarse, fine - middle
    if abs(d2) <= config.RICHARDSON_FLOOR * abs(fine) or d1 == 0 or d1 * d2 < 0:
        return None
    low, high = config.RICHARDSON_RATIO_RANGE
    if not low <= d1 / d2 <= high:
        return None
    value = (4 * fine - middle) / 3
    previous = (4 * middle - coarse) / 3
    return value, abs(_growth(previous, value))


def refine_and_estimate(F: Sequence, w: Callable, dom: DomainSpec,
                        base_resolution: Tuple[int, int]) -> RefinedEstimate:
    """
    Evaluate at the base and doubled resolution; refine once more when the value grew.

    Two consecutive growths beyond DIVERGENCE_GROWTH mark the integral as diverging.
    Otherwise the half resolution is added (when it is still a valid grid) and the three
    levels are Richardson-extrapolated if they show second-order convergence. The value is
    the best estimate and rel_change the last relative change.
    """
    n_rad, n_ang = base_resolution
    values = [weighted_norm2(F, w, polydisc_grid(dom, n_rad, n_ang)),
              weighted_norm2(F, w, polydisc_grid(dom, 2 * n_rad, 2 * n_ang))]
    diverging = False
    if _growth(values[0], values[1]) > config.DIVERGENCE_GROWTH:
        values.append(weighted_norm2(F, w, polydisc_grid(dom, 4 * n_rad, 4 * n_ang)))
        diverging = _growth(values[1], values[2]) > config.DIVERGENCE_GROWTH
    elif n_rad % 2 == 0 and n_ang % 2 == 0 and n_rad >= 4 and n_ang >= 8:
        values.insert(0, weighted_norm2(F, w, polydisc_grid(dom, n_rad // 2, n_ang // 2)))
    if diverging:
        logger.warning(f"Weighted norm grows under refinement: {values}")
        return RefinedEstimate(values[-1], abs(_growth(values[-2], values[-1])), True)

    extrapolated = richardson(values) if len(values) == 3 else None
    if extrapolated is not None:
        value, rel_change = extrapolated
        logger.info(f"Weighted norm {value:.10g} extrapolated from {values} (relative change {rel_change:.3e})")
        return RefinedEstimate(value, rel_change, False, True)
    rel_change = abs(_growth(values[-2], values[-1]))
    logger.info(f"Weighted norm {values[-1]:.10g} (relative change {rel_change:.3e})")
    return RefinedEstimate(values[-1], rel_change, False)


if __name__ == "__main__":
    disc = DomainSpec.unit(1)
    grid = polydisc_grid(disc, 8, 8)
    print("area:", weighted_norm2([Poly.constant(1, 1)], lambda z: 1.0, grid), "vs", np.pi)
    sec = KoszulSection.from_strings(["z1"], 1)
    _, w_den = skoda_weights(sec, WeightSpec(q=0))
    print("divergent:", refine_and_estimate([Poly.constant(1, 1)], w_den, disc, (8, 8)))
