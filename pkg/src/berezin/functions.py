"""Named scalar functions on the chart used by sweeps and the CLI.

Each entry is smooth on the whole compactified space, bounded, and carries
analytic Wirtinger gradients plus the metadata sweeps need: the power of
(1 + |mu|^2) required to clear its denominator (weight_degree) and its exact
sup norm for estimator tests.

Evaluators are vectorized over an (n, d) complex array and return (n,).
Gradients take a single point (d,) and return (d,) arrays (d/dmu, d/dmubar).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class ChartFunction:
    """A scalar observable on the chart with analytic derivative data."""

    name: str
    evaluator: Callable          # (n, d) complex -> (n,)
    grad_mu: Callable            # (d,) point -> (d,) d/dmu_i
    grad_mubar: Callable         # (d,) point -> (d,) d/dmubar_i
    weight_degree: int           # min p with (1+|mu|^2)^p * f polynomial in mu, mubar
    sup_exact: float
    description: str

    def __call__(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=complex)
        if pts.ndim == 1:
            pts = pts.reshape(1, -1)
        return np.asarray(self.evaluator(pts))

    def gradient(self, mu) -> tuple[np.ndarray, np.ndarray]:
        mu = np.atleast_1d(np.asarray(mu, dtype=complex))
        return (np.asarray(self.grad_mu(mu), dtype=complex),
                np.asarray(self.grad_mubar(mu), dtype=complex))


def _s(pts: np.ndarray) -> np.ndarray:
    return np.sum(np.abs(pts) ** 2, axis=1)


def _one(pts):
    return np.ones(pts.shape[0])


def _zero_grad(mu):
    return np.zeros(mu.shape[0], dtype=complex)


# f = Re mu_1 / (1 + s).  With w = (1 + s):
#   d/dmu_1 = 1/(2w) - Re(mu_1) mubar_1 / w^2, d/dmu_i = -Re(mu_1) mubar_i / w^2
def _re_rational(pts):
    return pts[:, 0].real / (1.0 + _s(pts))


def _re_rational_gmu(mu):
    w = 1.0 + float(np.vdot(mu, mu).real)
    g = -(mu[0].real / w ** 2) * np.conj(mu)
    g[0] += 0.5 / w
    return g


def _re_rational_gmubar(mu):
    w = 1.0 + float(np.vdot(mu, mu).real)
    g = -(mu[0].real / w ** 2) * mu
    g[0] += 0.5 / w
    return g


def _im_rational(pts):
    return pts[:, 0].imag / (1.0 + _s(pts))


def _im_rational_gmu(mu):
    w = 1.0 + float(np.vdot(mu, mu).real)
    g = -(mu[0].imag / w ** 2) * np.conj(mu)
    g[0] += 1.0 / (2.0j * w)
    return g


def _im_rational_gmubar(mu):
    w = 1.0 + float(np.vdot(mu, mu).real)
    g = -(mu[0].imag / w ** 2) * mu
    g[0] += -1.0 / (2.0j * w)
    return g


# f = s / (1 + s): d/dmu_i = mubar_i / w^2, conjugate for mubar.
def _abs2_rational(pts):
    s = _s(pts)
    return s / (1.0 + s)


def _abs2_rational_gmu(mu):
    w = 1.0 + float(np.vdot(mu, mu).real)
    return np.conj(mu) / w ** 2


def _abs2_rational_gmubar(mu):
    w = 1.0 + float(np.vdot(mu, mu).real)
    return mu / w ** 2


def _inv_rational(pts):
    return 1.0 / (1.0 + _s(pts))


def _inv_rational_gmu(mu):
    w = 1.0 + float(np.vdot(mu, mu).real)
    return -np.conj(mu) / w ** 2


def _inv_rational_gmubar(mu):
    w = 1.0 + float(np.vdot(mu, mu).real)
    return -mu / w ** 2


REGISTRY: dict[str, ChartFunction] = {
    "one": ChartFunction(
        name="one", evaluator=_one, grad_mu=_zero_grad, grad_mubar=_zero_grad,
        weight_degree=0, sup_exact=1.0, description="constant 1"),
    "re_rational": ChartFunction(
        name="re_rational", evaluator=_re_rational,
        grad_mu=_re_rational_gmu, grad_mubar=_re_rational_gmubar,
        weight_degree=1, sup_exact=0.5,
        description="Re mu_1 / (1 + |mu|^2)"),
    "im_rational": ChartFunction(
        name="im_rational", evaluator=_im_rational,
        grad_mu=_im_rational_gmu, grad_mubar=_im_rational_gmubar,
        weight_degree=1, sup_exact=0.5,
        description="Im mu_1 / (1 + |mu|^2)"),
    "abs2_rational": ChartFunction(
        name="abs2_rational", evaluator=_abs2_rational,
        grad_mu=_abs2_rational_gmu, grad_mubar=_abs2_rational_gmubar,
        weight_degree=1, sup_exact=1.0,
        description="|mu|^2 / (1 + |mu|^2)"),
    "inv_rational": ChartFunction(
        name="inv_rational", evaluator=_inv_rational,
        grad_mu=_inv_rational_gmu, grad_mubar=_inv_rational_gmubar,
        weight_degree=1, sup_exact=1.0,
        description="1 / (1 + |mu|^2)"),
}


def get_function(name: str) -> ChartFunction:
    if name not in REGISTRY:
        known = ", ".join(sorted(REGISTRY))
        raise KeyError(f"unknown function {name!r}; known: {known}")
    return REGISTRY[name]
