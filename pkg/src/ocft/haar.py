"""Haar sampling on O(N) / SO(N) and a seeded Monte-Carlo estimator.

The sampler is the sign-corrected QR construction: QR-decompose a matrix of
iid standard Gaussians and multiply each column of Q by the sign of the
matching diagonal entry of R.  The result is exactly Haar on the full
orthogonal group, with both determinant components equally likely.

Monte-Carlo runs are reproducible: an :class:`RngStream` names a stream by
(seed, stream_index), workers get disjoint stream indices, and partial sums
are combined in worker order, so a fixed (seed, workers) configuration gives
a bit-identical :class:`Estimate` regardless of how the work is scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError

__all__ = [
    "Estimate",
    "RngStream",
    "mc_expectation",
    "sample_orthogonal",
    "sample_orthogonal_batch",
    "sample_special_orthogonal",
    "sample_special_orthogonal_batch",
]

DEFAULT_BATCH = 20_000


@dataclass(frozen=True)
class RngStream:
    """Reproducible RNG handle: identical (seed, stream_index) -> identical draws."""

    seed: int
    stream_index: int = 0

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_index,))
        return np.random.default_rng(ss)

    def substream(self, offset: int) -> "RngStream":
        """Stream with a jumped index; callers keep offsets disjoint."""
        return RngStream(self.seed, self.stream_index + offset)


@dataclass(frozen=True)
class Estimate:
    """Monte-Carlo result: sample mean, plug-in standard error, sample count."""

    mean: complex
    std_error: float
    samples: int

    @property
    def real(self) -> float:
        return self.mean.real

    def z_score(self, reference: complex) -> float:
        """|mean - reference| in units of the standard error."""
        if self.std_error == 0.0:
            return 0.0 if self.mean == reference else float("inf")
        return abs(self.mean - reference) / self.std_error


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    raise ConfigError(f"expected RngStream or numpy Generator, got {type(rng)!r}")


def sample_orthogonal_batch(n: int, count: int, rng) -> np.ndarray:
    """(count, n, n) stack of Haar-distributed O(n) matrices."""
    if n < 1:
        raise DimensionError("group dimension must be >= 1")
    gen = _as_generator(rng)
    a = gen.standard_normal((count, n, n))
    q, r = np.linalg.qr(a)
    d = np.sign(np.einsum("...ii->...i", r))
    d[d == 0] = 1.0
    return q * d[:, None, :]


def sample_orthogonal(n: int, rng) -> np.ndarray:
    """One Haar draw from O(n).

    Pass a ``numpy.random.Generator`` (e.g. ``stream.generator()``) to draw a
    sequence; an :class:`RngStream` always reproduces the same first draw.
    """
    return sample_orthogonal_batch(n, 1, rng)[0]


def sample_special_orthogonal_batch(n: int, count: int, rng) -> np.ndarray:
    """(count, n, n) stack of Haar draws conditioned on det = +1.

    An O(n) draw with det = -1 has the sign of its last row flipped, i.e. it
    is mapped through the fixed reflection diag(1, ..., 1, -1).
    """
    o = sample_orthogonal_batch(n, count, rng)
    neg = np.linalg.det(o) < 0
    o[neg, -1, :] *= -1.0
    return o


def sample_special_orthogonal(n: int, rng) -> np.ndarray:
    """One Haar draw from SO(n)."""
    return sample_special_orthogonal_batch(n, 1, rng)[0]


_SAMPLERS = {"O": sample_orthogonal_batch, "SO": sample_special_orthogonal_batch}


def _shard_sizes(samples: int, workers: int) -> list[int]:
    base, extra = divmod(samples, workers)
    return [base + (1 if w < extra else 0) for w in range(workers)]


def mc_expectation(
    f,
    n: int,
    samples: int,
    rng: RngStream,
    group: str = "O",
    workers: int = 1,
    batch_size: int = DEFAULT_BATCH,
    batched: bool = False,
) -> Estimate:
    """Sample mean and standard error of f over Haar draws.

    ``f`` maps a single (n, n) matrix to a complex number; with
    ``batched=True`` it must map a (B, n, n) stack to a length-B vector,
    which is much faster for large sample counts.

    Worker w consumes ``rng.substream(w)``; the reduction runs in worker
    order, so the result is deterministic for fixed (seed, workers).
    """
    if samples < 2:
        raise ConfigError("need at least 2 samples for a standard error")
    if group not in _SAMPLERS:
        raise ConfigError(f"group must be one of {sorted(_SAMPLERS)}, got {group!r}")
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    sampler = _SAMPLERS[group]

    total = 0.0 + 0.0j
    total_sq = 0.0
    for w, shard in enumerate(_shard_sizes(samples, workers)):
        gen = rng.substream(w).generator()
        done = 0
        while done < shard:
            b = min(batch_size, shard - done)
            mats = sampler(n, b, gen)
            if batched:
                vals = np.asarray(f(mats), dtype=complex)
            else:
                vals = np.array([f(m) for m in mats], dtype=complex)
            total += vals.sum()
            total_sq += float(np.abs(vals) ** 2 @ np.ones(b))
            done += b
    mean = total / samples
    var = max(total_sq / samples - abs(mean) ** 2, 0.0) * samples / (samples - 1)
    return Estimate(complex(mean), float(np.sqrt(var / samples)), samples)
