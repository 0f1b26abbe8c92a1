"""Averaged modulus powers of characteristic polynomials, F_G(z) = <|z - GO|^{2m}>.

Three routes to the same quantity, used to cross-check each other:

* ``moment_m1_closed``        -- exact m = 1 formula via elementary symmetric
                                 polynomials of the squared singular values,
                                 sum_l binom(N, l)^{-1} |z|^{2(N-l)} S^l(G^2);
* ``moment_pfaffian_integral``-- flavour-space integral of a product of
                                 Pfaffian kernels (radial quadrature, plus a
                                 compact-group average at m = 2 for complex z);
* ``moment_mc``               -- brute-force Haar average of the determinant.

The flavour-space integral carries an overall constant that is fixed
numerically by the G = 0 calibration point F_0(z) = |z|^{2Nm}: the same
integral is evaluated with G and with the calibration pair on identical
nodes and only the ratio is reported.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._quad import half_line_nodes
from .errors import ConfigError, ShapeError
from .haar import Estimate, RngStream, mc_expectation
from .linalg import as_complex_matrix, elementary_symmetric_all, is_skew, pfaffian

__all__ = [
    "MomentQuery",
    "build_pf_kernel",
    "moment_m1_closed",
    "moment_mc",
    "moment_pfaffian_integral",
]


@dataclass(frozen=True)
class MomentQuery:
    """One evaluation of <|z - GO|^{2m}> over O(N), G = diag(g_1..g_N)."""

    z: complex
    g: tuple[float, ...]
    m: int = 1

    def __post_init__(self):
        object.__setattr__(self, "z", complex(self.z))
        object.__setattr__(self, "g", tuple(float(x) for x in np.atleast_1d(self.g)))
        if self.m < 1:
            raise ConfigError("moment order m must be >= 1")
        if not np.all(np.isfinite(self.g)):
            raise ConfigError("singular values must be finite")

    @property
    def n(self) -> int:
        return len(self.g)


def moment_m1_closed(query: MomentQuery) -> float:
    """Exact value for m = 1: sum_l binom(N,l)^{-1} |z|^{2(N-l)} S^l(G^2)."""
    if query.m != 1:
        raise ConfigError("closed form only covers m = 1")
    n = query.n
    zz = abs(query.z) ** 2
    s = elementary_symmetric_all(np.asarray(query.g) ** 2)
    from math import comb

    return float(sum(s[l] * zz ** (n - l) / comb(n, l) for l in range(n + 1)))


def moment_mc(
    query: MomentQuery,
    samples: int,
    rng: RngStream,
    workers: int = 1,
) -> Estimate:
    """Haar Monte-Carlo estimate of E[det^m((z - GO)(z - GO)^dagger)]."""
    g = np.asarray(query.g)
    z = complex(query.z)
    m = query.m

    def f(o):
        mats = z * np.eye(g.size) - g[:, None] * o
        dets = np.linalg.det(mats)
        return (dets * dets.conj()).real ** m

    return mc_expectation(f, g.size, samples, rng, workers=workers, batched=True)


def build_pf_kernel(z_skew, g: float, z: complex, m: int) -> np.ndarray:
    """Assemble the 4m x 4m skew kernel [[g^2 Z, D], [-D, Z^dagger]].

    ``z_skew`` is the 2m x 2m complex skew flavour matrix and
    D = diag(z, zbar) (x) I_m couples the two blocks.
    """
    zm = as_complex_matrix(z_skew)
    if zm.shape != (2 * m, 2 * m):
        raise ShapeError(f"flavour matrix must be {2 * m}x{2 * m}, got {zm.shape}")
    if not is_skew(zm):
        raise ShapeError("flavour matrix must be skew-symmetric")
    d = np.kron(np.diag([z, np.conj(z)]), np.eye(m))
    k = np.zeros((4 * m, 4 * m), dtype=complex)
    k[: 2 * m, : 2 * m] = g**2 * zm
    k[: 2 * m, 2 * m :] = d
    k[2 * m :, : 2 * m] = -d
    k[2 * m :, 2 * m :] = zm.conj().T
    return k


# -- m = 1: one radial parameter, straight quadrature --------------------


def _m1_ratio(query: MomentQuery, z0: complex, nodes: int) -> float:
    """Ratio of the radial kernel-product integral at (G, z) to (0, z0)."""
    n = query.n
    r, w = half_line_nodes(nodes)
    weight = w * (1.0 + r) ** (-(n + 2))
    num = np.ones_like(r, dtype=complex)
    den = np.ones_like(r, dtype=complex)
    for k, rk in enumerate(r):
        a = np.sqrt(rk)
        zmat = np.array([[0.0, a], [-a, 0.0]], dtype=complex)
        for gi in query.g:
            num[k] *= pfaffian(build_pf_kernel(zmat, gi, query.z, 1))
            den[k] *= pfaffian(build_pf_kernel(zmat, 0.0, z0, 1))
    ratio = (num @ weight) / (den @ weight)
    return float(ratio.real)


# -- m = 2: polar decomposition of the six complex parameters -------------


def _perfect_matchings(size: int) -> tuple[np.ndarray, np.ndarray]:
    """All perfect matchings of {0..size-1} with their Pfaffian signs."""
    pairs_out: list[list[tuple[int, int]]] = []
    signs_out: list[int] = []

    def rec(rest: list[int], acc: list[tuple[int, int]], sign: int):
        if not rest:
            pairs_out.append(list(acc))
            signs_out.append(sign)
            return
        first, tail = rest[0], rest[1:]
        for p, j in enumerate(tail):
            acc.append((first, j))
            rec(tail[:p] + tail[p + 1 :], acc, sign * (-1) ** p)
            acc.pop()

    rec(list(range(size)), [], 1)
    return np.array(pairs_out, dtype=int), np.array(signs_out, dtype=float)


_MATCH_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def pfaffian_batch(k: np.ndarray) -> np.ndarray:
    """Pfaffians of a (B, 2k, 2k) stack via the perfect-matching expansion.

    Intended for small kernels (2k <= 8, i.e. 105 matchings); entries should
    be pre-scaled to order one by the caller if they can overflow.
    """
    size = k.shape[-1]
    if size not in _MATCH_CACHE:
        _MATCH_CACHE[size] = _perfect_matchings(size)
    pairs, signs = _MATCH_CACHE[size]
    vals = k[:, pairs[:, :, 0], pairs[:, :, 1]]
    return np.prod(vals, axis=2) @ signs


def _kernel_batch(z_batch: np.ndarray, g: float, z: complex, m: int) -> np.ndarray:
    b = z_batch.shape[0]
    d = np.kron(np.diag([z, np.conj(z)]), np.eye(m))
    k = np.zeros((b, 4 * m, 4 * m), dtype=complex)
    k[:, : 2 * m, : 2 * m] = g**2 * z_batch
    k[:, : 2 * m, 2 * m :] = d
    k[:, 2 * m :, : 2 * m] = -d
    k[:, 2 * m :, 2 * m :] = np.conj(np.transpose(z_batch, (0, 2, 1)))
    return k


def _skew_sigma_blocks(t_pairs: np.ndarray) -> np.ndarray:
    """(K, 4, 4) canonical skew matrices with 2x2 blocks of radii sqrt(t)."""
    k = t_pairs.shape[0]
    sig = np.zeros((k, 4, 4), dtype=complex)
    s1 = np.sqrt(t_pairs[:, 0])
    s2 = np.sqrt(t_pairs[:, 1])
    sig[:, 0, 1], sig[:, 1, 0] = s1, -s1
    sig[:, 2, 3], sig[:, 3, 2] = s2, -s2
    return sig


def _m2_grid(query_n: int, radial_nodes: int):
    """Tensor quadrature grid over the two squared block radii (t1, t2).

    The flat measure on complex skew 4x4 matrices factorises under the
    Youla decomposition Z = U Sigma U^T as

        dZ dZ^dagger = const * (t1 - t2)^4 dt1 dt2 * dHaar(U),

    with t_i the squared block radii (det(1 + Z Z^dagger) = (1+t1)^2 (1+t2)^2).
    The returned weights fold in the Jacobian and the measure density.
    """
    r, w = half_line_nodes(radial_nodes)
    t1, t2 = np.meshgrid(r, r, indexing="ij")
    w2 = np.outer(w, w)
    dens = (t1 - t2) ** 4 * ((1.0 + t1) * (1.0 + t2)) ** (-(query_n + 6.0))
    t_pairs = np.stack([t1.ravel(), t2.ravel()], axis=1)
    return t_pairs, (w2 * dens).ravel()


def _pf_product(z_batch: np.ndarray, g_values, z: complex, m: int) -> np.ndarray:
    out = np.ones(z_batch.shape[0], dtype=complex)
    for gi in g_values:
        out *= pfaffian_batch(_kernel_batch(z_batch, float(gi), z, m))
    return out


def moment_pfaffian_integral(
    query: MomentQuery,
    rng: RngStream | None = None,
    nodes: int = 128,
    samples: int = 1000,
    radial_nodes: int = 32,
    u_chunk: int = 8,
) -> Estimate:
    """Flavour-space Pfaffian-product integral for F_G(z), m <= 2.

    m = 1 reduces to one radial parameter and is integrated by
    Gauss-Legendre.  m = 2 uses the polar decomposition Z = U Sigma U^T of
    the skew flavour matrix: the two block radii are integrated by tensor
    Gauss-Legendre quadrature with the exact (t1 - t2)^4 radial Jacobian.
    For real z the kernel product is invariant under the unitary factor, so
    the radial quadrature is the whole integral (zero standard error); for
    complex z the compact factor is averaged by Haar Monte Carlo over
    ``samples`` U(4) draws, which keeps every random quantity bounded.

    The overall constant is fixed by the G = 0 calibration,
    F_0(1) = 1, whose integral is evaluated exactly on the same grid.
    """
    if query.m > 2:
        raise ConfigError("flavour-space integral implemented for m <= 2 only")
    z0 = complex(query.z) if abs(query.z) > 1e-8 else 1.0 + 0.0j
    if query.m == 1:
        scale = abs(z0) ** (2 * query.n)
        return Estimate(scale * _m1_ratio(query, z0, nodes), 0.0, 0)

    t_pairs, t_weights = _m2_grid(query.n, radial_nodes)
    sigma = _skew_sigma_blocks(t_pairs)
    den = complex(_pf_product(sigma, np.zeros(query.n), 1.0, 2) @ t_weights)

    if abs(complex(query.z).imag) < 1e-14:
        num = complex(_pf_product(sigma, query.g, query.z.real, 2) @ t_weights)
        return Estimate((num / den).real, 0.0, 0)

    if rng is None:
        raise ConfigError("complex z at m = 2 needs an RngStream for the U-average")
    if samples < 2:
        raise ConfigError("need at least 2 samples")
    gen = rng.generator()
    q_num = np.empty(samples, dtype=complex)
    done = 0
    while done < samples:
        b = min(u_chunk, samples - done)
        gauss = gen.standard_normal((b, 4, 4)) + 1j * gen.standard_normal((b, 4, 4))
        u, r = np.linalg.qr(gauss)
        d = np.einsum("...ii->...i", r).copy()
        u *= (d / np.abs(d))[:, None, :]
        # Z[u, k] = U_u Sigma_k U_u^T for every radial node k
        z_all = np.einsum("uij,kjl,uml->ukim", u, sigma, u).reshape(-1, 4, 4)
        fg = _pf_product(z_all, query.g, query.z, 2).reshape(b, -1)
        q_num[done : done + b] = fg @ t_weights
        done += b
    mean = q_num.mean()
    se = float(np.sqrt(q_num.var().real / samples) / abs(den))
    return Estimate((mean / den).real, se, samples)
