"""Decoupling by a random unitary followed by discarding a subsystem.

A system ``A`` of a pure state is rotated by ``U`` and split as ``Ā ⊗ Â``.
After ``Â`` and any spectators are traced out, the trace distance of the
``ĀR`` marginal from ``I/|Ā| ⊗ ψ^R`` measures how well ``Ā`` decoupled from
the reference ``R``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from qbc import typicality
from qbc.typicality import eps_schedule
from qbc.entropic import mutual_information
from qbc.errors import InfeasibleDimensionError, LayoutError
from qbc.haar import haar_unitary, pmap, trial_rng
from qbc.tensor import (
    FactorLayout,
    IsometryOp,
    PureState,
    _labels,
    conjugate,
    maximally_mixed,
    merge,
    partial_trace,
    permute,
    tensor_product,
    trace_norm,
)


@dataclass(frozen=True)
class SplitSpec:
    system: str
    abar_dim: int
    ahat_dim: int

    def __post_init__(self):
        if self.abar_dim < 1 or self.ahat_dim < 1:
            raise LayoutError("split dimensions must be positive")

    @property
    def bar_label(self) -> str:
        return f"{self.system}bar"

    @property
    def hat_label(self) -> str:
        return f"{self.system}hat"

    def check(self, psi: PureState) -> None:
        d = psi.layout.dim_of(self.system)
        if self.abar_dim * self.ahat_dim != d:
            raise LayoutError(f"split {self.abar_dim}×{self.ahat_dim} does not match dim({self.system}) = {d}")


@dataclass(frozen=True)
class DecouplingReport:
    trials: int
    mean_sq_distance: float
    per_trial: list[float]
    bound: float
    best_trial_index: int
    sem: float = 0.0
    purity: float = 1.0

    @property
    def holds(self) -> bool:
        """Sample mean within the bound up to 5% slack and three standard errors."""
        return self.mean_sq_distance <= self.bound * 1.05 + 3 * self.sem

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "mean_sq_distance": self.mean_sq_distance,
            "sem": self.sem,
            "bound": self.bound,
            "purity_AR": self.purity,
            "best_trial_index": self.best_trial_index,
            "best_distance": self.per_trial[self.best_trial_index],
            "holds": self.holds,
            "per_trial": self.per_trial,
        }


@dataclass(frozen=True)
class GoodUnitary:
    unitary: np.ndarray = field(repr=False)
    distance: float
    index: int
    bound: float

    @property
    def threshold(self) -> float:
        """Markov-style level ``√(2·bound)``: at least half of Haar draws fall below it."""
        return math.sqrt(2.0 * self.bound)

    @property
    def met_threshold(self) -> bool:
        return self.distance <= self.threshold

    def __iter__(self):
        yield self.unitary
        yield self.distance


def decoupling_bound(dim_a: int, dim_r: int, dim_ahat: int, purity_ar: float) -> float:
    """``|A||R| / |Â|² · tr[(ψ^{AR})²]``, the mean squared distance bound."""
    return dim_a * dim_r / dim_ahat**2 * purity_ar


class _Kernel:
    """Precomputed reshapes so each candidate ``U`` costs one product and one eigvalsh."""

    def __init__(self, psi: PureState, split: SplitSpec, reference: tuple[str, ...]):
        split.check(psi)
        if split.system in reference:
            raise LayoutError("the split system cannot also be part of the reference")
        spectators = tuple(label for label in psi.labels if label != split.system and label not in reference)
        self.ref = psi.layout.select(reference).labels
        order = (split.system,) + self.ref + spectators
        self.d_a = psi.layout.dim_of(split.system)
        self.d_r = psi.layout.dim_of(self.ref) if self.ref else 1
        self.d_s = psi.layout.dim // (self.d_a * self.d_r)
        self.split = split
        self.mat = permute(psi, order).amplitudes.reshape(self.d_a, self.d_r * self.d_s)
        m_r = self.mat.reshape(self.d_a, self.d_r, self.d_s).transpose(1, 0, 2).reshape(self.d_r, -1)
        self.psi_r = m_r @ m_r.conj().T
        self.target = np.kron(np.eye(split.abar_dim) / split.abar_dim, self.psi_r)
        m_ar = self.mat.reshape(self.d_a * self.d_r, self.d_s)
        gram = m_ar.conj().T @ m_ar
        self.purity = float(np.real(np.vdot(gram, gram)))

    def distance(self, u: np.ndarray) -> float:
        sp = self.split
        x = (u @ self.mat).reshape(sp.abar_dim, sp.ahat_dim, self.d_r, self.d_s)
        x = x.transpose(0, 2, 1, 3).reshape(sp.abar_dim * self.d_r, sp.ahat_dim * self.d_s)
        sigma = x @ x.conj().T
        return float(np.sum(np.abs(np.linalg.eigvalsh(sigma - self.target))))

    @property
    def bound(self) -> float:
        return decoupling_bound(self.d_a, self.d_r, self.split.ahat_dim, self.purity)


def decouple_once(
    psi: PureState,
    split: SplitSpec,
    unitary: Union[IsometryOp, np.ndarray],
    reference: Union[str, Iterable[str]] = ("R",),
) -> tuple[PureState, float]:
    """Rotate ``A`` by ``unitary``, split it, and measure the ``ĀR`` distance.

    Returns the rotated state (with ``A`` replaced by ``Ā ⊗ Â``) and
    ``‖σ^{ĀR} − I/|Ā| ⊗ ψ^R‖₁``.
    """
    reference = _labels(reference)
    split.check(psi)
    d = psi.layout.dim_of(split.system)
    mat = unitary.matrix if isinstance(unitary, IsometryOp) else np.asarray(unitary)
    if mat.shape != (d, d):
        raise LayoutError(f"unitary of shape {mat.shape} cannot act on {split.system!r} of dim {d}")
    op = IsometryOp(
        mat,
        FactorLayout.of((split.system, d)),
        FactorLayout.of((split.bar_label, split.abar_dim), (split.hat_label, split.ahat_dim)),
    )
    rotated = conjugate(op, psi)
    sigma = partial_trace(rotated, (split.bar_label,) + reference)
    psi_r = partial_trace(psi, reference) if reference else None
    target = maximally_mixed(FactorLayout.of((split.bar_label, split.abar_dim)))
    if psi_r is not None:
        target = tensor_product(target, psi_r)
    target = permute(target, sigma.labels)
    return rotated, trace_norm(sigma.matrix - target.density().matrix)


def monte_carlo_decoupling(
    psi: PureState,
    split: SplitSpec,
    trials: int,
    seed: int,
    reference: Union[str, Iterable[str]] = ("R",),
    threads: int = 1,
) -> DecouplingReport:
    """Average the squared decoupling distance over Haar-random unitaries."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    kernel = _Kernel(psi, split, _labels(reference))

    def one(i: int) -> float:
        return kernel.distance(haar_unitary(kernel.d_a, trial_rng(seed, i)))

    dists = pmap(one, range(trials), threads)
    sq = np.array(dists) ** 2
    sem = float(sq.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return DecouplingReport(
        trials=trials,
        mean_sq_distance=float(sq.mean()),
        per_trial=[float(d) for d in dists],
        bound=kernel.bound,
        best_trial_index=int(np.argmin(dists)),
        sem=sem,
        purity=kernel.purity,
    )


def select_good_unitary(
    psi: PureState,
    split: SplitSpec,
    candidates: int = 16,
    seed: int = 0,
    reference: Union[str, Iterable[str]] = ("R",),
    threads: int = 1,
) -> GoodUnitary:
    """Best of ``candidates`` Haar draws, using the same stream as the Monte Carlo run."""
    if candidates < 1:
        raise ValueError("candidates must be at least 1")
    kernel = _Kernel(psi, split, _labels(reference))

    def one(i: int) -> tuple[float, np.ndarray]:
        u = haar_unitary(kernel.d_a, trial_rng(seed, i))
        return kernel.distance(u), u

    results = pmap(one, range(candidates), threads)
    best = min(range(candidates), key=lambda i: results[i][0])
    return GoodUnitary(results[best][1], results[best][0], best, kernel.bound)


@dataclass(frozen=True)
class IidDemoRecord:
    n: int
    eps: float
    typical_mass: float
    ahat_qubits: int
    mean_sq_distance: float
    bound: float
    best_distance: float


def iid_demo(
    psi: PureState,
    n_values: Sequence[int],
    delta: float = 0.1,
    trials: int = 50,
    seed: int = 0,
    system: str = "A",
    reference: str = "R",
) -> list[IidDemoRecord]:
    """Decoupling of ``A^n`` from ``R^n`` for ``n`` copies of a small state.

    ``A^n`` is first projected onto its ``ε(n)``-typical subspace, then a random
    unitary splits off ``⌈n(I(A;R)/2 + δ)⌉`` qubits. Only qubit ``A`` is
    supported and ``n ≤ 6``; this is a small-scale illustration, not a limit.
    """
    if psi.layout.dim_of(system) != 2:
        raise LayoutError("the i.i.d. demo handles a qubit system only")
    half_info = mutual_information(psi, system, reference) / 2
    rho_a = partial_trace(psi, system)
    records = []
    for k, n in enumerate(n_values):
        if n > 6:
            raise InfeasibleDimensionError("the i.i.d. demo is capped at n = 6 copies")
        eps = eps_schedule(n)
        state = psi
        for i in range(1, n):
            nxt = PureState(psi.amplitudes, FactorLayout(tuple((f"{l}{i}", d) for l, d in psi.layout.factors)), check=False)
            state = tensor_product(state, nxt)
        a_labels = [system] + [f"{system}{i}" for i in range(1, n)]
        r_labels = [reference] + [f"{reference}{i}" for i in range(1, n)]
        state = merge(state, a_labels, "An")
        state = merge(state, r_labels, "Rn")
        proj = typicality.typical_projector(rho_a, n, eps)
        op = IsometryOp(proj.matrix, FactorLayout.of(("An", 2**n)), FactorLayout.of(("An", 2**n)), check=False)
        projected = conjugate(op, state)
        mass = float(np.linalg.norm(projected.amplitudes) ** 2)
        projected = PureState(projected.amplitudes / math.sqrt(mass), projected.layout)
        ahat_q = min(n, math.ceil(n * (half_info + delta)))
        split = SplitSpec("An", 2 ** (n - ahat_q), 2**ahat_q)
        report = monte_carlo_decoupling(projected, split, trials, seed + k, reference=("Rn",))
        records.append(
            IidDemoRecord(n, eps, mass, ahat_q, report.mean_sq_distance, report.bound, min(report.per_trial))
        )
    return records
