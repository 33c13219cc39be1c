"""Seed-reproducible samplers: fixed-t marginals of every composition and
exact fBm paths (Cholesky and circulant embedding).

Randomness comes from the counter-based Philox generator keyed by
``(seed, stream_id, kind, chunk)``.  Draws are produced in fixed-size chunks,
each from its own key, so the output does not depend on how many worker
threads evaluate the chunks.  Gaussians use the inverse normal CDF applied
to open-interval uniforms.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import ndtri

from .errors import DegenerateTime, DomainError, EmbeddingFailure, NotPositiveDefinite
from .models import ProcessModel, check_hurst

CHUNK = 1 << 15
_KIND_MARGINAL, _KIND_CHOLESKY, _KIND_CIRCULANT = 0, 1, 2
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngState:
    seed: int
    stream_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & _MASK64)
        object.__setattr__(self, "stream_id", int(self.stream_id) & _MASK64)

    def child(self, k: int) -> "RngState":
        """Derived stream; distinct k give distinct Philox keys."""
        return RngState(self.seed, (self.stream_id * 0x9E3779B97F4A7C15 + k + 1) & _MASK64)


class _Draws:
    """Uniform and Gaussian variates from one Philox key."""

    def __init__(self, rng: RngState, kind: int, chunk: int):
        ss = np.random.SeedSequence(rng.seed, spawn_key=(rng.stream_id, kind, chunk))
        self._bits = np.random.Philox(ss)

    def uniform(self, n: int) -> np.ndarray:
        raw = self._bits.random_raw(n)
        return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53

    def normal(self, n: int) -> np.ndarray:
        return ndtri(self.uniform(n))


def worker_count() -> int:
    env = os.environ.get("ITERLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DomainError(f"ITERLAB_THREADS={env!r} is not an integer")
    return os.cpu_count() or 1


def _map_chunks(fn, n_chunks: int):
    workers = min(worker_count(), n_chunks)
    if workers <= 1:
        return [fn(c) for c in range(n_chunks)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n_chunks)))


# -- primitive laws ---------------------------------------------------------

def _fbm_at(d: _Draws, H: float, tau) -> np.ndarray:
    """B_H(tau) for tau >= 0 (array), by self-similarity."""
    tau = np.asarray(tau, dtype=float)
    return d.normal(tau.size if tau.ndim else 1) * np.power(tau, H)


def _cauchy_at(d: _Draws, tau) -> np.ndarray:
    tau = np.asarray(tau, dtype=float)
    u = d.uniform(tau.size if tau.ndim else 1)
    return tau * np.tan(np.pi * (u - 0.5))


def _marginal_chunk(model: ProcessModel, t: float, d: _Draws, n: int):
    tag = model.tag
    tt = np.full(n, t)
    redraws = 0
    if tag == "FBm":
        x = _fbm_at(d, model.hursts[0], tt)
    elif tag == "IteratedFBm":
        h1, h2 = model.hursts
        x = _fbm_at(d, h1, np.abs(_fbm_at(d, h2, tt)))
    elif tag == "IteratedFBmChain":
        x = tt
        for j, h in enumerate(reversed(model.hursts)):
            x = _fbm_at(d, h, np.abs(x) if j else x)
    elif tag == "WeightedJ":
        H = model.H
        outer = model.weights_outer or (H,) * model.n
        x = _fbm_at(d, H, tt)
        for h in reversed(outer):
            x = _fbm_at(d, h, np.power(np.abs(x), 1.0 / h))
    elif tag == "ScaledIterated":
        x = t ** model.K * _fbm_at(d, 0.5, np.abs(_fbm_at(d, model.H, tt)))
    elif tag == "ProductFBm":
        x = np.ones(n)
        for _ in range(model.n):
            x = x * _fbm_at(d, model.H / model.n, tt)
    elif tag == "Cauchy":
        x = _cauchy_at(d, tt)
    elif tag == "CauchyOfFBm":
        x = _cauchy_at(d, np.abs(_fbm_at(d, model.H, tt)))
    elif tag == "BmOfCauchy":
        x = _fbm_at(d, 0.5, np.abs(_cauchy_at(d, tt)))
    elif tag == "CauchyOfCauchy":
        x = _cauchy_at(d, np.abs(_cauchy_at(d, tt)))
    elif tag == "HalfProductCauchy":
        tau = np.full(n, math.sqrt(2.0 * t))
        x = 0.5 * _cauchy_at(d, tau) * _cauchy_at(d, tau)
    elif tag == "ReciprocalCC":
        inner = np.full(n, 1.0 / t)
        y = _cauchy_at(d, np.abs(_cauchy_at(d, inner)))
        bad = y == 0.0
        while np.any(bad):
            k = int(bad.sum())
            redraws += k
            y[bad] = _cauchy_at(d, np.abs(_cauchy_at(d, np.full(k, 1.0 / t))))
            bad = y == 0.0
        x = 1.0 / y
    else:  # pragma: no cover - ProcessModel validates tags
        raise DomainError(tag)
    return x, redraws


class SampleBatch(NamedTuple):
    values: np.ndarray
    redraws: int


_CAUCHY_FAMILY = {"Cauchy", "CauchyOfFBm", "BmOfCauchy", "CauchyOfCauchy",
                  "HalfProductCauchy", "ReciprocalCC"}


def draw(model: ProcessModel, t: float, rng: RngState, size: int) -> SampleBatch:
    """``size`` i.i.d. draws of the marginal law of ``model`` at time ``t``."""
    t = float(t)
    if t == 0.0 and model.tag in _CAUCHY_FAMILY:
        raise DegenerateTime("Cauchy-family law at t = 0 is a point mass")
    if not t > 0:
        raise DomainError("sampling time must be positive")
    size = int(size)
    n_chunks = max(1, -(-size // CHUNK))

    def one(c):
        n = min(CHUNK, size - c * CHUNK)
        return _marginal_chunk(model, t, _Draws(rng, _KIND_MARGINAL, c), n)

    parts = _map_chunks(one, n_chunks)
    values = np.concatenate([p[0] for p in parts])[:size]
    return SampleBatch(values, sum(p[1] for p in parts))


def sample_marginal(model: ProcessModel, t: float, rng: RngState, size: int | None = None):
    """Draw(s) from the exact marginal law at time ``t``.

    Returns a float when ``size`` is None, else an array.
    """
    batch = draw(model, t, rng, 1 if size is None else size)
    return float(batch.values[0]) if size is None else batch.values


# -- fBm paths ----------------------------------------------------------------

@dataclass(frozen=True)
class PathSample:
    times: np.ndarray
    values: np.ndarray  # shape (n_paths, len(times))
    hurst: float
    jitter: float = 0.0
    method: str = "cholesky"

    def __post_init__(self):
        if self.values.shape[-1] != self.times.size:
            raise DomainError("times and values differ in length")


def fbm_covariance(H: float, s, t):
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    return 0.5 * (np.abs(t) ** (2 * H) + np.abs(s) ** (2 * H) - np.abs(t - s) ** (2 * H))


def _cholesky_factor(H: float, times: np.ndarray):
    cov = fbm_covariance(H, times[:, None], times[None, :])
    jitter = 0.0
    for attempt in range(4):
        try:
            return np.linalg.cholesky(cov + jitter * np.eye(times.size)), jitter
        except np.linalg.LinAlgError:
            jitter = 1e-12 * float(np.max(np.diag(cov))) * (100.0 ** attempt)
    raise NotPositiveDefinite(f"fBm covariance (H={H}) not factorizable")


def fbm_path_cholesky(H: float, times, rng: RngState, n_paths: int = 1) -> PathSample:
    """Exact fBm paths at ``times`` via the Cholesky factor of the covariance."""
    H = check_hurst(H)
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or times.size > 4096:
        raise DomainError("need 1 to 4096 sampling times")
    if np.any(times <= 0) or np.any(np.diff(times) <= 0):
        raise DomainError("times must be positive and strictly increasing")
    L, jitter = _cholesky_factor(H, times)
    per_chunk = max(1, CHUNK // times.size)
    n_chunks = -(-n_paths // per_chunk)

    def one(c):
        m = min(per_chunk, n_paths - c * per_chunk)
        z = _Draws(rng, _KIND_CHOLESKY, c).normal(m * times.size).reshape(m, times.size)
        return z @ L.T

    values = np.concatenate(_map_chunks(one, n_chunks), axis=0)
    return PathSample(times, values, H, jitter, "cholesky")


def fgn_eigenvalues(H: float, n: int) -> np.ndarray:
    k = np.arange(n + 1, dtype=float)
    gamma = 0.5 * ((k + 1) ** (2 * H) - 2 * k ** (2 * H) + np.abs(k - 1) ** (2 * H))
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    return np.fft.fft(row).real


def fbm_path_circulant(H: float, n: int, dt: float, rng: RngState,
                       n_paths: int = 1) -> PathSample:
    """fBm at dt, 2 dt, ..., n dt by circulant embedding of fGn.

    Falls back to Cholesky when the embedding has an eigenvalue below -1e-9;
    eigenvalues in [-1e-9, 0] are clipped to 0.
    """
    H = check_hurst(H)
    if n < 1 or n & (n - 1) or n > 1 << 22:
        raise DomainError("n must be a power of two <= 2^22")
    if not dt > 0:
        raise DomainError("dt must be positive")
    times = dt * np.arange(1, n + 1)
    lam = fgn_eigenvalues(H, n)
    if lam.min() < -1e-9:
        if n > 4096:
            raise EmbeddingFailure(f"negative embedding eigenvalue {lam.min():.3g}")
        try:
            return fbm_path_cholesky(H, times, rng, n_paths)
        except NotPositiveDefinite as exc:
            raise EmbeddingFailure(str(exc)) from exc
    lam = np.clip(lam, 0.0, None)
    m = 2 * n
    amp = np.sqrt(lam / m)
    pairs_per_chunk = max(1, CHUNK // m)
    n_pairs = -(-n_paths // 2)
    n_chunks = -(-n_pairs // pairs_per_chunk)
    scale = dt ** H

    def one(c):
        p = min(pairs_per_chunk, n_pairs - c * pairs_per_chunk)
        d = _Draws(rng, _KIND_CIRCULANT, c)
        z = d.normal(2 * p * m).reshape(2, p, m)
        w = np.fft.fft(amp * (z[0] + 1j * z[1]), axis=-1)[:, :n]
        fgn = np.empty((2 * p, n))
        fgn[0::2] = w.real
        fgn[1::2] = w.imag
        return np.cumsum(fgn, axis=-1) * scale

    values = np.concatenate(_map_chunks(one, n_chunks), axis=0)[:n_paths]
    return PathSample(times, values, H, 0.0, "circulant")
