"""Deterministic product quadrature over the chart, plus closed-form moments.

The chart integral of f against the 2^d-normalized Lebesgue measure is
approximated by a polar product rule: per complex dimension, a uniform
angular grid and Gauss-Legendre radial nodes composed with the
compactification u = r^2 / (1 + r^2).  For d >= 2 the radius of dimension j
is additionally scaled by sqrt(1 + sum_{k<j} r_k^2); with that cascade every
integrand of the form (polynomial of total degree <= 2 m') times
(1 + |nu|^2)^-(m'+d+1) becomes polynomial in the u variables and the rule is
exact (to rounding) whenever m' <= m_max(level) = 4 * level.

Rules are plain data; ``integrate`` evaluates the integrand vectorized over
all nodes and reduces with numpy's fixed pairwise summation, so results are
bitwise reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionMismatch, IndexOutOfRange, NonFiniteIntegrand, ResourceLimit

NODE_CAP = 10_000_000


def m_max(level: int) -> int:
    """Largest weighted-polynomial family integrated exactly at this level."""
    return 4 * int(level)


def level_for(m_eff: int) -> int:
    """Smallest level whose rule is exact for the family with parameter m_eff."""
    return max(1, math.ceil(m_eff / 4))


@dataclass
class QuadratureRule:
    """Product rule over C^d.

    ``radial_nodes``/``radial_weights`` are the shared per-dimension 1-d
    Gauss-Legendre data in the compactified variable u; ``nodes`` and
    ``weights`` are the assembled d-dimensional rule (weights include the
    2^d volume convention).  ``coarse`` holds the next-lower-resolution rule
    used for error estimates.
    """

    d: int
    level: int
    radial_nodes: np.ndarray
    radial_weights: np.ndarray
    n_theta: int
    nodes: np.ndarray
    weights: np.ndarray
    coarse: "QuadratureRule | None" = field(default=None, repr=False)

    @property
    def node_count(self) -> int:
        return self.nodes.shape[0]


@dataclass
class IntegrationResult:
    value: complex
    error_estimate: float


def _assemble(d: int, n_r: int, n_theta: int):
    """Build nodes/weights for given 1-d counts. Returns (u, gw, nodes, weights)."""
    x, wx = np.polynomial.legendre.leggauss(n_r)
    u = 0.5 * (x + 1.0)
    gw = 0.5 * wx
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta

    # radial cascade: dimension j is scaled by the accumulated 1 + sum r_k^2
    u_grid = np.stack(np.meshgrid(*([u] * d), indexing="ij"), axis=-1).reshape(-1, d)
    gw_grid = np.stack(np.meshgrid(*([gw] * d), indexing="ij"), axis=-1).reshape(-1, d)
    radii = np.empty_like(u_grid)
    wr = np.ones(u_grid.shape[0])
    acc = np.zeros(u_grid.shape[0])
    for j in range(d):
        uj = u_grid[:, j]
        r2 = (uj / (1.0 - uj)) * (1.0 + acc)
        radii[:, j] = np.sqrt(r2)
        # per-dimension measure 2 r dr dtheta; the factor 2 cancels against
        # the substitution rho drho = du / (2 (1-u)^2)
        wr *= gw_grid[:, j] * (2.0 * np.pi / n_theta) * (1.0 + acc) / (1.0 - uj) ** 2
        acc = acc + r2

    th_grid = np.stack(np.meshgrid(*([theta] * d), indexing="ij"), axis=-1).reshape(-1, d)
    nodes = (radii[:, None, :] * np.exp(1j * th_grid[None, :, :])).reshape(-1, d)
    weights = np.repeat(wr, th_grid.shape[0])
    return u, gw, nodes, weights


def build_rule(d: int, level: int, node_cap: int = NODE_CAP) -> QuadratureRule:
    """Build the level rule for dimension d.

    Counts are n_r = 8 * level radial and n_theta = 4 * level + 1 angular
    nodes per dimension; total nodes (n_r * n_theta)^d must stay within
    ``node_cap`` or ResourceLimit is raised.
    """
    if d < 1:
        raise DimensionMismatch(f"dimension must be >= 1, got {d}")
    if level < 1:
        raise ValueError(f"level must be >= 1, got {level}")
    n_r, n_theta = 8 * level, 4 * level + 1
    total = (n_r * n_theta) ** d
    if total > node_cap:
        raise ResourceLimit(f"rule would need {total} nodes, cap is {node_cap}")
    u, gw, nodes, weights = _assemble(d, n_r, n_theta)
    # companion rule one level down (half resolution at level 1) for the
    # error estimate in integrate()
    c_nr, c_nt = (8 * (level - 1), 4 * (level - 1) + 1) if level > 1 else (4, 3)
    cu, cgw, cn, cw = _assemble(d, c_nr, c_nt)
    coarse = QuadratureRule(d, level - 1, cu, cgw, c_nt, cn, cw, coarse=None)
    return QuadratureRule(d, level, u, gw, n_theta, nodes, weights, coarse=coarse)


def integrate(f: Callable[[np.ndarray], np.ndarray], rule: QuadratureRule) -> IntegrationResult:
    """Integrate f over the chart against the 2^d Lebesgue convention.

    ``f`` receives the (n, d) complex node array and must return (n,) values.
    The error estimate compares against the rule's coarse companion.  Raises
    NonFiniteIntegrand naming the first offending node.
    """
    def reduce(nodes, weights):
        vals = np.asarray(f(nodes))
        if vals.shape != (nodes.shape[0],):
            raise DimensionMismatch(
                f"integrand returned shape {vals.shape}, expected ({nodes.shape[0]},)")
        bad = ~np.isfinite(vals)
        if np.any(bad):
            k = int(np.argmax(bad))
            raise NonFiniteIntegrand(f"integrand non-finite at node {k}: {nodes[k]}")
        return complex(np.sum(weights * vals))

    value = reduce(rule.nodes, rule.weights)
    if rule.coarse is not None:
        err = abs(value - reduce(rule.coarse.nodes, rule.coarse.weights))
    else:
        err = 0.0
    return IntegrationResult(value=value, error_estimate=float(err))


def moment(index: Sequence[int] | int, m: int, d: int) -> float:
    """Closed-form chart moment of |nu|^(2 I) against (1 + |nu|^2)^-m.

    moment(I, m, d) = (2 pi)^d * prod_i I_i! * (m - |I|)! / (m + d)!

    under the 2^d volume convention.  Exact integer arithmetic before the
    final float division.  Raises IndexOutOfRange when the integral diverges
    (|I| > m) or an entry is negative.
    """
    idx = (int(index),) if np.isscalar(index) else tuple(int(q) for q in index)
    if len(idx) != d:
        raise DimensionMismatch(f"index length {len(idx)} != dimension {d}")
    if any(q < 0 for q in idx):
        raise IndexOutOfRange(f"negative entry in index {idx}")
    q = sum(idx)
    if q > m:
        raise IndexOutOfRange(f"total degree {q} exceeds weight parameter {m}")
    num = math.factorial(m - q)
    for qi in idx:
        num *= math.factorial(qi)
    return (2.0 * math.pi) ** d * num / math.factorial(m + d)


def total_volume(d: int) -> float:
    """Chart volume (2 pi)^d / d! under the module's conventions."""
    return moment((0,) * d, 0, d)
