"""Shared numeric helpers for the test suite.

The oracles here are deliberately independent of the package internals:
finite differences for Jacobians, numpy eigensolvers for spectra, scipy
integrators for orbits, and closed-form algebra re-derived inline.
"""

from __future__ import annotations

import numpy as np

from blowprof import ModelParams, validate_params
from blowprof.vectorfields import ChartId, chart_dim, eval_field

ALL_CHARTS = tuple(ChartId)


def fd_jacobian(chart: ChartId, state, params: ModelParams, h: float = 1e-7):
    """Central-difference Jacobian of the chart field."""
    state = np.asarray(state, dtype=float)
    n = chart_dim(chart)
    J = np.empty((n, n))
    for j in range(n):
        step = h * max(1.0, abs(state[j]))
        up = state.copy()
        dn = state.copy()
        up[j] += step
        dn[j] -= step
        J[:, j] = (eval_field(chart, up, params) - eval_field(chart, dn, params)) / (
            2.0 * step
        )
    return J


def random_states(n: int, rng: np.random.Generator, scale: float = 0.8):
    """Generic random 3-vectors; every chart field is polynomial, so any
    bounded state is a valid linearization point."""
    return rng.uniform(-scale, scale, size=(n, 3))


def sorted_spectrum(vals):
    """Canonical ordering of a complex spectrum for multiset comparison."""
    return sorted((complex(v) for v in vals), key=lambda z: (round(z.real, 9), z.imag))


def spectrum_close(a, b, tol: float) -> bool:
    sa, sb = sorted_spectrum(a), sorted_spectrum(b)
    if len(sa) != len(sb):
        return False
    return all(abs(x - y) <= tol for x, y in zip(sa, sb))


def params_240() -> ModelParams:
    return validate_params(2.0, 4.0, 0.5)


def params_22() -> ModelParams:
    return validate_params(2.0, 2.0, 0.2)
