"""Weighted polynomial Hilbert space on the chart at integer level m.

The space is spanned by monomials mu^I of total degree <= m, orthonormalized
by closed-form normalizations: with q = |I|,

    D_I = prod_i I_i! * (m - q)! / m!          (inverse multinomial weight)
    c_m = (m + d)! / ((2 pi)^d m!)             (inner-product prefactor)

so that Psi_I = mu^I / sqrt(D_I) satisfies the coherent-state resolution
sum_I conj(Psi_I(mu)) Psi_I(nu) = (1 + conj(mu) . nu)^m.  Numeric inner
products use the quadrature module; every node-side path is routed through
row-normalized basis matrices (rows scaled by (1 + |nu|^2)^(-m/2)) so all
intermediates stay bounded for any m and |mu|.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import quadrature
from .errors import DimensionMismatch, IndexOutOfRange
from .geometry import as_point

SCHEMA = "berezin.basis/1"


def enumerate_indices(d: int, m: int) -> list[tuple[int, ...]]:
    """All exponent multi-indices with |I| <= m, graded lexicographic order."""
    if d < 1 or m < 0:
        raise ValueError(f"need d >= 1 and m >= 0, got d={d}, m={m}")
    out: list[tuple[int, ...]] = []

    def rec(prefix, remaining):
        if len(prefix) == d:
            out.append(tuple(prefix))
            return
        for q in range(remaining + 1):
            rec(prefix + [q], remaining - q)

    rec([], m)
    out.sort(key=lambda t: (sum(t), t))
    return out


@dataclass
class _NodeData:
    """Cached per-rule arrays: normalized basis matrix and weight pieces."""
    rule: quadrature.QuadratureRule
    s: np.ndarray        # |nu|^2 per node
    ehat: np.ndarray     # (n, N) basis values scaled by (1+s)^(-m/2)
    halfw: np.ndarray    # (1+s)^(-m/2)
    wcore: np.ndarray    # rule weights times (1+s)^(-(d+1))


@dataclass(eq=False)
class BasisSpec:
    """Frozen description of one quantization level.

    Fields mirror the serialized form: dimension, level m, size N, the index
    order, the normalization vector D, the prefactor c_m and hbar = 1/m.
    ``level`` is the default quadrature level; finer rules are cached on
    demand by operations whose integrands need them.
    """

    d: int
    m: int
    N: int
    indices: tuple[tuple[int, ...], ...]
    D: np.ndarray
    c_m: float
    hbar: float
    level: int
    _exponents: np.ndarray = field(default=None, repr=False)
    _positions: dict = field(default=None, repr=False)
    _nodes: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self._exponents is None:
            self._exponents = np.array(self.indices, dtype=int)
        if self._positions is None:
            self._positions = {I: k for k, I in enumerate(self.indices)}

    def position(self, index: Sequence[int]) -> int:
        key = tuple(int(q) for q in index)
        if key not in self._positions:
            raise IndexOutOfRange(f"index {key} not admissible for d={self.d}, m={self.m}")
        return self._positions[key]

    def node_data(self, level: int | None = None) -> _NodeData:
        lv = self.level if level is None else int(level)
        if lv not in self._nodes:
            rule = quadrature.build_rule(self.d, lv)
            s = np.sum(np.abs(rule.nodes) ** 2, axis=1)
            halfw = np.exp(-(self.m / 2.0) * np.log1p(s))
            ehat = eval_matrix(self, rule.nodes) * halfw[:, None]
            wcore = rule.weights * np.exp(-(self.d + 1.0) * np.log1p(s))
            self._nodes[lv] = _NodeData(rule=rule, s=s, ehat=ehat, halfw=halfw, wcore=wcore)
        return self._nodes[lv]


def build_basis(d: int, m: int, level: int | None = None) -> BasisSpec:
    """Construct the level-m basis description for dimension d.

    ``level`` defaults to the smallest quadrature level exact for the
    orthonormality family, ceil(m / 4).
    """
    if d < 1 or m < 1:
        raise ValueError(f"need d >= 1 and m >= 1, got d={d}, m={m}")
    indices = enumerate_indices(d, m)
    D = np.empty(len(indices))
    for k, I in enumerate(indices):
        mult = math.factorial(m)
        for qi in I:
            mult //= math.factorial(qi)
        mult //= math.factorial(m - sum(I))
        D[k] = 1.0 / mult
    ratio = math.factorial(m + d) // math.factorial(m)
    c_m = ratio / (2.0 * math.pi) ** d
    lv = quadrature.level_for(m) if level is None else int(level)
    return BasisSpec(d=d, m=m, N=len(indices), indices=tuple(indices), D=D,
                     c_m=c_m, hbar=1.0 / m, level=lv)


def eval_matrix(spec: BasisSpec, points) -> np.ndarray:
    """Basis values Psi_I at many points; returns (n, N).

    Uses cumulative per-dimension power tables, O(n m d + n N) work.
    """
    pts = np.asarray(points, dtype=complex)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    if pts.shape[1] != spec.d:
        raise DimensionMismatch(f"points have dimension {pts.shape[1]}, expected {spec.d}")
    n = pts.shape[0]
    E = np.ones((n, spec.N), dtype=complex)
    for j in range(spec.d):
        powers = np.empty((n, spec.m + 1), dtype=complex)
        powers[:, 0] = 1.0
        for k in range(1, spec.m + 1):
            powers[:, k] = powers[:, k - 1] * pts[:, j]
        E *= powers[:, spec._exponents[:, j]]
    E *= 1.0 / np.sqrt(spec.D)
    return E


def eval_matrix_normalized(spec: BasisSpec, points) -> np.ndarray:
    """Row-normalized basis values, rows scaled by (1 + |point|^2)^(-m/2)."""
    pts = np.asarray(points, dtype=complex)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    s = np.sum(np.abs(pts) ** 2, axis=1)
    return eval_matrix(spec, pts) * np.exp(-(spec.m / 2.0) * np.log1p(s))[:, None]


def basis_eval(spec: BasisSpec, index: Sequence[int], mu) -> complex:
    """Single basis function Psi_I(mu) = mu^I / sqrt(D_I)."""
    k = spec.position(index)
    mu = as_point(mu, d=spec.d)
    val = 1.0 + 0.0j
    for j, q in enumerate(spec.indices[k]):
        val *= mu[j] ** q
    return complex(val / math.sqrt(spec.D[k]))


def section_eval(spec: BasisSpec, v, points) -> np.ndarray:
    """Evaluate the section with coefficient vector v at the given points."""
    v = np.asarray(v, dtype=complex)
    if v.shape != (spec.N,):
        raise DimensionMismatch(f"coefficient vector has shape {v.shape}, expected ({spec.N},)")
    return eval_matrix(spec, points) @ v


def coherent_eval(spec: BasisSpec, mu, nu) -> complex:
    """Coherent state of parameter mu evaluated at nu: (1 + conj(mu) . nu)^m."""
    mu = as_point(mu, d=spec.d)
    nu = as_point(nu, d=spec.d)
    return complex((1.0 + np.vdot(mu, nu)) ** spec.m)


def coherent_coeffs(spec: BasisSpec, mu) -> np.ndarray:
    """Coefficient vector of the coherent state, conj(Psi_I(mu))."""
    return np.conj(eval_matrix(spec, as_point(mu, d=spec.d))[0])


def kernel_L(spec: BasisSpec, mu, nu) -> complex:
    """Two-point reproducing kernel (1 + mu . conj(nu))^m."""
    mu = as_point(mu, d=spec.d)
    nu = as_point(nu, d=spec.d)
    return complex((1.0 + np.vdot(nu, mu)) ** spec.m)


def log_kernel(spec: BasisSpec, mu, nu) -> complex:
    """Principal logarithm of the kernel, m * log(1 + mu . conj(nu)).

    Safe at magnitudes where the kernel itself would overflow a double.
    """
    mu = as_point(mu, d=spec.d)
    nu = as_point(nu, d=spec.d)
    return complex(spec.m * np.log(1.0 + np.vdot(nu, mu)))


def fs_weight_exponent(spec: BasisSpec) -> int:
    """Power K = m + d + 1 of (1 + |nu|^2) dividing every inner-product integrand."""
    return spec.m + spec.d + 1


def inner_product(spec: BasisSpec, f: Callable, g: Callable, level: int | None = None) -> complex:
    """Numeric inner product c_m * integral of conj(f) g against the level weight.

    ``f``/``g`` are vectorized evaluators taking the (n, d) node array.  Both
    factors are damped by (1 + s)^(-m/2) before multiplying so the product
    stays in range whenever each factor is o((1+s)^(m/2) * 1e150).
    """
    nd = spec.node_data(level)
    fv = np.asarray(f(nd.rule.nodes)) * nd.halfw
    gv = np.asarray(g(nd.rule.nodes)) * nd.halfw
    return spec.c_m * complex(np.sum(nd.wcore * np.conj(fv) * gv))


def gram_matrix(spec: BasisSpec, level: int | None = None) -> np.ndarray:
    """Numeric Gram matrix of the basis; identity when normalizations are right."""
    nd = spec.node_data(level)
    return spec.c_m * ((nd.ehat.conj().T * nd.wcore) @ nd.ehat)


def _kernel_column(spec: BasisSpec, nd: _NodeData, mu) -> np.ndarray:
    """Normalized kernel values what(mu, node)^m over the nodes.

    what = (1 + mu . conj(nu)) / sqrt((1+|mu|^2)(1+|nu|^2)); the plain kernel
    column is this times (1+|mu|^2)^(m/2) / halfw.
    """
    mu = as_point(mu, d=spec.d)
    smu = float(np.vdot(mu, mu).real)
    pair = 1.0 + nd.rule.nodes.conj() @ mu
    what = pair * np.exp(-0.5 * (np.log1p(nd.s) + np.log1p(smu)))
    return what ** spec.m


def reproducing_residual(spec: BasisSpec, v, mu, level: int | None = None) -> float:
    """|<psi_mu, v> - v(mu)| with the pairing done by numeric integration.

    Contract: <= 1e-8 * (1 + |v(mu)|) at the spec's default level.
    """
    v = np.asarray(v, dtype=complex)
    if v.shape != (spec.N,):
        raise DimensionMismatch(f"coefficient vector has shape {v.shape}, expected ({spec.N},)")
    mu = as_point(mu, d=spec.d)
    nd = spec.node_data(level)
    khat = _kernel_column(spec, nd, mu)
    smu = float(np.vdot(mu, mu).real)
    scale = np.exp(0.5 * spec.m * np.log1p(smu))
    paired_hat = spec.c_m * np.sum(nd.wcore * khat * (nd.ehat @ v))
    value_hat = complex(eval_matrix_normalized(spec, mu)[0] @ v)
    return float(abs(paired_hat - value_hat) * scale)


def resolution_check(spec: BasisSpec, v1, v2, level: int | None = None) -> float:
    """Defect of the resolution of the identity on a vector pair.

    |c_m * integral <v1, psi_mu><psi_mu, v2> dweight - <v1, v2>|; the
    (1+s)^(+-m) factors cancel analytically and are cancelled here too.
    """
    v1 = np.asarray(v1, dtype=complex)
    v2 = np.asarray(v2, dtype=complex)
    for v in (v1, v2):
        if v.shape != (spec.N,):
            raise DimensionMismatch(f"coefficient vector has shape {v.shape}, expected ({spec.N},)")
    nd = spec.node_data(level)
    f1 = nd.ehat @ v1
    f2 = nd.ehat @ v2
    integral = spec.c_m * complex(np.sum(nd.wcore * np.conj(f1) * f2))
    return float(abs(integral - complex(np.vdot(v1, v2))))


def to_json(spec: BasisSpec) -> str:
    payload = {
        "schema": SCHEMA,
        "d": spec.d,
        "m": spec.m,
        "N": spec.N,
        "hbar": spec.hbar,
        "c_m": spec.c_m,
        "level": spec.level,
        "indices": [list(I) for I in spec.indices],
        "D": [float(x) for x in spec.D],
    }
    return json.dumps(payload, indent=2, sort_keys=True)


def from_json(text: str) -> BasisSpec:
    payload = json.loads(text)
    if payload.get("schema") != SCHEMA:
        raise ValueError(f"unexpected schema {payload.get('schema')!r}")
    indices = tuple(tuple(int(q) for q in I) for I in payload["indices"])
    D = np.array(payload["D"], dtype=float)
    if len(indices) != payload["N"] or D.shape[0] != payload["N"]:
        raise ValueError("inconsistent serialized basis: N does not match arrays")
    return BasisSpec(d=int(payload["d"]), m=int(payload["m"]), N=int(payload["N"]),
                     indices=indices, D=D, c_m=float(payload["c_m"]),
                     hbar=float(payload["hbar"]), level=int(payload["level"]))


def save_spec(spec: BasisSpec, path) -> None:
    with open(path, "w") as fh:
        fh.write(to_json(spec))
        fh.write("\n")


def load_spec(path) -> BasisSpec:
    with open(path) as fh:
        return from_json(fh.read())
