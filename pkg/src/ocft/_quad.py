"""Shared quadrature helpers.

Half-line integrals with power-law decay appear in every module (radial
reductions of flat matrix measures).  They are all computed the same way:
substitute r = t/(1-t), which maps [0, inf) to [0, 1) and turns the
integrand into a smooth function, then apply Gauss-Legendre.
"""

from __future__ import annotations

import numpy as np

__all__ = ["gauss_legendre_01", "half_line_nodes", "integrate_half_line"]

_DEFAULT_NODES = 128


def gauss_legendre_01(nodes: int = _DEFAULT_NODES):
    """Gauss-Legendre nodes and weights mapped from [-1, 1] to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    return 0.5 * (x + 1.0), 0.5 * w


def half_line_nodes(nodes: int = _DEFAULT_NODES):
    """Nodes r_k on [0, inf) and weights including the Jacobian dr/dt.

    With r = t/(1-t) the Jacobian is 1/(1-t)^2.
    """
    t, w = gauss_legendre_01(nodes)
    r = t / (1.0 - t)
    return r, w / (1.0 - t) ** 2


def integrate_half_line(f, nodes: int = _DEFAULT_NODES):
    """Integrate f over [0, inf); f must accept a vector of nodes."""
    r, w = half_line_nodes(nodes)
    return np.asarray(f(r)) @ w
