"""Haar-random unitaries, random states, and the seeding discipline.

Trial ``i`` under root seed ``s`` always draws from
``SeedSequence(s, spawn_key=(i,))``, so a trial's randomness does not depend
on how many trials run or on which worker runs it.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

import numpy as np

from qbc.tensor import DensityOperator, FactorLayout, PureState

T = TypeVar("T")
R = TypeVar("R")


def trial_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))


def derive_seed(seed: int, *key: int) -> int:
    """A 64-bit child seed, for handing a sub-stream to another routine."""
    words = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)).generate_state(2, np.uint32)
    return int(words[0]) << 32 | int(words[1])


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Ginibre matrix, QR, then rescale columns so ``R`` has a positive diagonal."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_pure_state(layout: FactorLayout, rng: np.random.Generator) -> PureState:
    v = rng.standard_normal(layout.dim) + 1j * rng.standard_normal(layout.dim)
    return PureState(v / np.linalg.norm(v), layout)


def random_density(layout: FactorLayout, rng: np.random.Generator, rank: int | None = None) -> DensityOperator:
    """Induced-measure mixed state of the given rank (full rank by default)."""
    rank = layout.dim if rank is None else rank
    g = rng.standard_normal((layout.dim, rank)) + 1j * rng.standard_normal((layout.dim, rank))
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return DensityOperator(rho / np.trace(rho).real, layout)


def resolve_threads(threads: int | None) -> int:
    """``None`` falls back to ``QBC_THREADS``; ``0`` means one per CPU."""
    if threads is None:
        threads = int(os.environ.get("QBC_THREADS", "1"))
    if threads < 0:
        raise ValueError("thread count must be non-negative")
    return threads or (os.cpu_count() or 1)


def pmap(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """Order-preserving map; results are identical for any thread count."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def haar_moment_check(dim: int, trials: int, seed: int, threads: int = 1) -> dict:
    """Compare ``|⟨0|U|0⟩|²`` against its Beta(1, d−1) law.

    The first two moments are ``1/d`` and ``2/(d(d+1))``.
    """
    def draw(i: int) -> float:
        return float(abs(haar_unitary(dim, trial_rng(seed, i))[0, 0]) ** 2)

    x = np.array(pmap(draw, range(trials), threads))
    sem = float(x.std(ddof=1) / math.sqrt(trials)) if trials > 1 else float("inf")
    mean = float(x.mean())
    second = float(np.mean(x**2))
    second_sem = float((x**2).std(ddof=1) / math.sqrt(trials)) if trials > 1 else float("inf")
    expected = 1.0 / dim
    expected_second = 2.0 / (dim * (dim + 1))
    return {
        "dim": dim,
        "trials": trials,
        "mean": mean,
        "sem": sem,
        "expected_mean": expected,
        "second_moment": second,
        "second_moment_sem": second_sem,
        "expected_second_moment": expected_second,
        "mean_within_3sem": abs(mean - expected) <= 3 * sem,
        "second_within_3sem": abs(second - expected_second) <= 3 * second_sem,
    }

