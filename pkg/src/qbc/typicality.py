"""Entropy-typical sets and projectors, enumerated exactly by type class.

A sequence's probability depends only on its type (symbol counts), so the
typical set is a union of whole type classes. Sizes are exact integers and
masses are sums over at most ``C(n + k − 1, k − 1)`` types.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from qbc.entropic import shannon_entropy
from qbc.errors import InfeasibleDimensionError
from qbc.tensor import DensityOperator, trace_norm

MAX_TYPES = 2_000_000
MAX_PROJECTOR_DIM = 4096
# absorbs rounding when a sample entropy lands exactly on H ± ε
BOUNDARY_SLACK = 1e-12


def eps_schedule(n: int) -> float:
    return n ** -0.25


def _compositions(n: int, k: int) -> Iterator[tuple[int, ...]]:
    for bars in itertools.combinations(range(n + k - 1), k - 1):
        prev = -1
        parts = []
        for b in bars:
            parts.append(b - prev - 1)
            prev = b
        parts.append(n + k - 1 - prev - 1)
        yield tuple(parts)


def _multinomial(counts: Sequence[int]) -> int:
    out, total = 1, 0
    for c in counts:
        total += c
        out *= math.comb(total, c)
    return out


@dataclass(frozen=True)
class TypeClass:
    counts: tuple[int, ...]
    size: int
    log2_prob: float  # log2 of one sequence's probability; -inf if impossible
    typical: bool


@dataclass(frozen=True)
class TypicalSetReport:
    n: int
    eps: float
    entropy: float
    size: int
    probability_mass: float
    dim_bound: float
    types: tuple[TypeClass, ...] = field(repr=False, default=())

    @property
    def within_dim_bound(self) -> bool:
        return self.size <= self.dim_bound

    def is_typical(self, sequence: Sequence[int]) -> bool:
        counts = tuple(int(np.sum(np.asarray(sequence) == s)) for s in range(len(self.types[0].counts)))
        if sum(counts) != self.n:
            raise ValueError(f"sequence length {sum(counts)} differs from n = {self.n}")
        return any(t.counts == counts and t.typical for t in self.types)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "eps": self.eps,
            "entropy": self.entropy,
            "size": self.size,
            "probability_mass": self.probability_mass,
            "dim_bound": self.dim_bound,
            "within_dim_bound": self.within_dim_bound,
        }


def typical_set(p: Sequence[float], n: int, eps: float) -> TypicalSetReport:
    """Exact ε-typical set of ``n`` i.i.d. draws from ``p``.

    ``x^n`` is typical when ``|−(1/n) log2 Pr(x^n) − H| ≤ ε``. The returned
    report's :meth:`~TypicalSetReport.is_typical` is the membership predicate.
    """
    p = np.asarray(p, dtype=float)
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("p must be a probability vector")
    if n < 1:
        raise ValueError("n must be positive")
    k = len(p)
    if math.comb(n + k - 1, k - 1) > MAX_TYPES:
        raise InfeasibleDimensionError(f"{math.comb(n + k - 1, k - 1)} type classes exceed the enumeration cap")
    h = shannon_entropy(p)
    with np.errstate(divide="ignore"):
        logp = np.log2(p)
    types = []
    size = 0
    mass = 0.0
    for counts in _compositions(n, k):
        used = [i for i, c in enumerate(counts) if c]
        if any(p[i] == 0 for i in used):
            lp = -math.inf
        else:
            lp = float(sum(counts[i] * logp[i] for i in used))
        typical = math.isfinite(lp) and abs(-lp / n - h) <= eps + BOUNDARY_SLACK
        count = _multinomial(counts)
        types.append(TypeClass(counts, count, lp, typical))
        if typical:
            size += count
            mass += count * 2.0**lp
    return TypicalSetReport(n, eps, h, size, min(mass, 1.0), 2.0 ** (n * (h + eps)), tuple(types))


def membership(report: TypicalSetReport) -> Callable[[Sequence[int]], bool]:
    return report.is_typical


@dataclass(frozen=True)
class TypicalProjector:
    matrix: np.ndarray = field(repr=False)
    rank: int
    mass: float
    classical: TypicalSetReport = field(repr=False)


def _check_projector_dims(d: int, n: int) -> None:
    if d**n > MAX_PROJECTOR_DIM:
        raise InfeasibleDimensionError(f"dense projector on dimension {d}^{n} exceeds {MAX_PROJECTOR_DIM}")


def _tensor_power(m: np.ndarray, n: int) -> np.ndarray:
    out = np.ones((1, 1), dtype=m.dtype)
    for _ in range(n):
        out = np.kron(out, m)
    return out


def typical_projector(rho: DensityOperator | np.ndarray, n: int, eps: float) -> TypicalProjector:
    """``Π = Σ_{typical x^n} |x^n⟩⟨x^n|`` built in the eigenbasis of ``ρ``.

    ``mass`` is ``tr[Π ρ^{⊗n}]`` evaluated from the dense matrices.
    """
    mat = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho)
    d = mat.shape[0]
    _check_projector_dims(d, n)
    w, v = np.linalg.eigh(mat)
    w = np.clip(w, 0.0, None)
    w = w / w.sum()
    report = typical_set(w, n, eps)
    mask = _typical_mask(report, d, n)
    vn = _tensor_power(v, n)
    proj = (vn[:, mask]) @ vn[:, mask].conj().T
    rho_n = _tensor_power(mat, n)
    mass = float(np.real(np.trace(proj @ rho_n)))
    return TypicalProjector(proj, int(mask.sum()), mass, report)


def _typical_mask(report: TypicalSetReport, d: int, n: int) -> np.ndarray:
    typical_counts = {t.counts for t in report.types if t.typical}
    seqs = np.array(list(itertools.product(range(d), repeat=n)), dtype=np.int64).reshape(d**n, n)
    counts = np.stack([(seqs == s).sum(axis=1) for s in range(d)], axis=1)
    return np.array([tuple(c) in typical_counts for c in counts.tolist()], dtype=bool)


@dataclass(frozen=True)
class GentleReport:
    n: int
    eps: float
    mass: float
    distance: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.distance <= self.bound + 1e-6

    def to_dict(self) -> dict:
        return {"n": self.n, "eps": self.eps, "mass": self.mass, "distance": self.distance, "bound": self.bound, "holds": self.holds}


def gentle_measurement_check(rho: DensityOperator | np.ndarray, n: int, eps: float, dense: bool | None = None) -> GentleReport:
    """``‖Πρ^{⊗n}Π / tr[Πρ^{⊗n}] − ρ^{⊗n}‖₁`` against ``2√(1 − tr[Πρ^{⊗n}])``.

    Dense evaluation builds both operators and takes the trace norm; it is the
    default when ``d^n ≤ 1024``. Otherwise the operators are diagonal in the
    eigenbasis of ``ρ`` and the norm is summed exactly over type classes.
    """
    mat = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho)
    d = mat.shape[0]
    if dense is None:
        dense = d**n <= 1024
    if dense:
        proj = typical_projector(mat, n, eps)
        rho_n = _tensor_power(mat, n)
        mass = proj.mass
        if mass <= 0:
            raise ValueError("typical projector has zero weight; nothing to renormalize")
        post = proj.matrix @ rho_n @ proj.matrix / mass
        post = (post + post.conj().T) / 2
        distance = trace_norm(post - rho_n)
    else:
        w = np.clip(np.linalg.eigvalsh(mat), 0.0, None)
        report = typical_set(w / w.sum(), n, eps)
        mass = report.probability_mass
        if mass <= 0:
            raise ValueError("typical projector has zero weight; nothing to renormalize")
        distance = 0.0
        for t in report.types:
            if not math.isfinite(t.log2_prob):
                continue
            q = 2.0**t.log2_prob
            distance += t.size * (abs(q / mass - q) if t.typical else q)
    return GentleReport(n, eps, mass, float(distance), 2.0 * math.sqrt(max(0.0, 1.0 - mass)))


@dataclass(frozen=True)
class PropertySweep:
    p: float
    rows: list[dict]
    n0: int | None

    def to_dict(self) -> dict:
        return {"p": self.p, "n0": self.n0, "rows": self.rows}


def property_sweep(p: float, n_values: Sequence[int], eps: float | None = None) -> PropertySweep:
    """Check mass ≥ 1 − ε(n) with ε(n) = n^{-1/4}, and size ≤ 2^{n(H+ε)}.

    With ``eps`` fixed the size bound uses that ε; otherwise the schedule.
    ``n0`` is the smallest tested ``n`` from which the size bound holds for all
    larger tested ``n``.
    """
    rows = []
    for n in n_values:
        e = eps_schedule(n) if eps is None else eps
        rep = typical_set([p, 1.0 - p], n, e)
        rows.append(
            {
                "n": n,
                "eps": e,
                "mass": rep.probability_mass,
                "mass_ok": rep.probability_mass >= 1.0 - e,
                "size": rep.size,
                "dim_bound": rep.dim_bound,
                "size_ok": rep.within_dim_bound,
            }
        )
    n0 = None
    for row in reversed(rows):
        if not row["size_ok"]:
            break
        n0 = row["n"]
    return PropertySweep(p, rows, n0)
