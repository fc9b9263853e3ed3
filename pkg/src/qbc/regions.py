"""Achievable rate regions and their numerical optimization.

Every two-receiver region here has the shape::

    0 ≤ Q1 ≤ q1,   0 ≤ Q2 ≤ q2,   Q1 + Q2 ≤ s

and is stored as a :class:`ConstraintTriple` ``(q1, q2, s)``. Input states
carry factors ``A1``, ``A2`` (one per receiver), the channel input ``A'``
and an optional purifying ``D``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from qbc.channels import INPUT_LABEL, BroadcastChannel, apply, output_labels
from qbc.entropic import coherent_information, entropy, mutual_information, shannon_entropy
from qbc.errors import InfeasibleDimensionError, LayoutError
from qbc.haar import pmap, random_pure_state, trial_rng
from qbc.tensor import FactorLayout, PureState, merge, relabel, tensor_product

PMF_TOL = 1e-9
REGULARIZED_CAP_BITS = 12
MAX_OPT_INPUT_DIM = 8
# rates below this are entropy round-off and are reported as zero in hulls
RATE_FLOOR = 1e-12


@dataclass(frozen=True)
class ConstraintTriple:
    """``(q1, q2, s)``: individual bounds and the sum bound."""

    q1: float
    q2: float
    sum: float

    def scaled(self, c: float) -> "ConstraintTriple":
        return ConstraintTriple(c * self.q1, c * self.q2, c * self.sum)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.q1, self.q2, self.sum)

    def vertices(self) -> list[tuple[float, float]]:
        """Extreme points of the region intersected with the positive quadrant."""
        s = max(self.sum, 0.0)
        a = min(max(self.q1, 0.0), s)
        b = min(max(self.q2, 0.0), s)
        pts = [(0.0, 0.0), (a, 0.0), (a, min(b, s - a)), (min(a, s - b), b), (0.0, b)]
        out: list[tuple[float, float]] = []
        for p in pts:
            if p not in out:
                out.append(p)
        return out

    def support(self, w: Sequence[float]) -> tuple[float, tuple[float, float]]:
        """``max w·Q`` over the region and the vertex attaining it."""
        best = max(self.vertices(), key=lambda v: w[0] * v[0] + w[1] * v[1])
        return w[0] * best[0] + w[1] * best[1], best

    def active(self, point: tuple[float, float], tol: float = 1e-9) -> list[str]:
        names = []
        if abs(point[0] - self.q1) <= tol:
            names.append("Q1")
        if abs(point[1] - self.q2) <= tol:
            names.append("Q2")
        if abs(point[0] + point[1] - self.sum) <= tol:
            names.append("sum")
        return names

    def to_dict(self) -> dict:
        return {"q1": self.q1, "q2": self.q2, "sum": self.sum}


@dataclass(frozen=True)
class FatherRates:
    triple: ConstraintTriple
    corners: tuple[tuple[float, float], tuple[float, float]]
    mutual_a1_a2: float


def _check_input(phi: PureState, channel: BroadcastChannel, inputs: Sequence[str], senders: Sequence[str]) -> None:
    allowed = set(senders) | set(inputs) | {"D"}
    extra = [label for label in phi.labels if label not in allowed]
    if extra:
        raise LayoutError(f"input state has unexpected factors {extra}; expected {sorted(allowed)}")
    for label in list(senders) + list(inputs):
        if label not in phi.layout:
            raise LayoutError(f"input state lacks factor {label!r}")
    clash = set(channel.output_layout.labels) & set(phi.labels)
    if clash:
        raise LayoutError(f"channel outputs {sorted(clash)} collide with input factors")


def channel_output(phi: PureState, channel: BroadcastChannel) -> PureState:
    """``ψ = U_N φ`` for an input on ``A_1 … A_m A' D``."""
    senders = [f"A{j + 1}" for j in range(channel.receivers)]
    _check_input(phi, channel, [INPUT_LABEL], senders)
    return apply(channel, phi)


def father_rates(phi: PureState, channel: BroadcastChannel) -> FatherRates:
    """Entanglement-assisted region of a two-receiver channel for input ``φ``.

    The triple is ``½I(A1;B1)``, ``½I(A2;B2)`` and
    ``½[I(A1;B1) + I(A2;B2) − I(A1;A2)]``. The corners are the two rate pairs
    obtained by charging the ``A1``–``A2`` decoupling cost to one receiver.
    """
    if channel.receivers != 2:
        raise LayoutError("father_rates is defined for two receivers; see multiparty_rates")
    psi = channel_output(phi, channel)
    b1, b2 = channel.receiver_labels
    i1 = mutual_information(psi, "A1", b1)
    i2 = mutual_information(psi, "A2", b2)
    i12 = mutual_information(psi, "A1", "A2")
    triple = ConstraintTriple(i1 / 2, i2 / 2, (i1 + i2 - i12) / 2)
    corners = (((i1 - i12) / 2, i2 / 2), (i1 / 2, (i2 - i12) / 2))
    return FatherRates(triple, corners, i12)


def _rest(psi: PureState, *exclude: str) -> tuple[str, ...]:
    return tuple(label for label in psi.labels if label not in exclude)


def entanglement_rates(phi: PureState, channel: BroadcastChannel) -> tuple[float, float]:
    """``E1 = ½I(A1; A2 B2 D E)`` and ``E2 = ½I(A2; A1 B1 D E)``."""
    psi = channel_output(phi, channel)
    b1, b2 = channel.receiver_labels
    e1 = mutual_information(psi, "A1", _rest(psi, "A1", b1)) / 2
    e2 = mutual_information(psi, "A2", _rest(psi, "A2", b2)) / 2
    return e1, e2


def unassisted_rates(phi: PureState, channel: BroadcastChannel) -> ConstraintTriple:
    """``I(A1⟩B1)``, ``I(A2⟩B2)`` and their sum less ``½I(A1;A2)``."""
    psi = channel_output(phi, channel)
    b1, b2 = channel.receiver_labels
    c1 = coherent_information(psi, "A1", b1)
    c2 = coherent_information(psi, "A2", b2)
    i12 = mutual_information(psi, "A1", "A2")
    return ConstraintTriple(c1, c2, c1 + c2 - i12 / 2)


def multiparty_rates(phi: PureState, channel: BroadcastChannel, subset: Sequence[int]) -> float:
    """``½[Σ_{j∈K} I(A_j;B_j) − J(A_K)]`` with ``J(A_K) = Σ H(A_j) − H(A_K)``.

    ``subset`` holds 1-based receiver indices.
    """
    subset = sorted(set(int(j) for j in subset))
    m = channel.receivers
    if not subset or subset[0] < 1 or subset[-1] > m:
        raise ValueError(f"subset must be a nonempty subset of 1..{m}, got {subset}")
    psi = channel_output(phi, channel)
    a = [f"A{j}" for j in subset]
    total = sum(mutual_information(psi, f"A{j}", channel.receiver_labels[j - 1]) for j in subset)
    j_corr = sum(entropy(psi, label) for label in a) - entropy(psi, a)
    return (total - j_corr) / 2


def product_input(phis: Sequence[PureState]) -> PureState:
    """``φ_1 ⊗ … ⊗ φ_n`` regrouped as ``A1 A2 A'_1 … A'_n D`` for ``n`` channel uses."""
    n = len(phis)
    if n == 0:
        raise ValueError("need at least one factor")
    if n == 1:
        return phis[0]
    state = None
    for k, phi in enumerate(phis, start=1):
        part = relabel(phi, {label: f"{label}_{k}" for label in phi.labels})
        state = part if state is None else tensor_product(state, part)
    for group in ("A1", "A2", "D"):
        members = [f"{group}_{k}" for k in range(1, n + 1) if f"{group}_{k}" in state.layout]
        if members:
            state = merge(state, members, group)
    return state


def regularized_rates(phi: PureState, channel: BroadcastChannel, n: int, mode: str = "assisted") -> ConstraintTriple:
    """Per-use region for ``n`` channel uses on an input over ``A1 A2 A'_1 … A'_n D``.

    ``assisted`` gives ``(1/2n)`` times the mutual-information triple.
    ``unassisted`` gives ``(1/n)[I(A1⟩B1ⁿ), I(A2⟩B2ⁿ), I(A1⟩B1ⁿ) + I(A2⟩B2ⁿ) − ½I(A1;A2)]``,
    which reduces to :func:`unassisted_rates` at ``n = 1``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if mode not in ("assisted", "unassisted"):
        raise ValueError(f"mode must be 'assisted' or 'unassisted', got {mode!r}")
    if channel.receivers != 2:
        raise LayoutError("regularized_rates is defined for two receivers")
    if n * math.log2(channel.input_dim) > REGULARIZED_CAP_BITS:
        raise InfeasibleDimensionError(
            f"{n} uses of a {channel.input_dim}-dim input exceed the {REGULARIZED_CAP_BITS}-qubit cap"
        )
    inputs = [INPUT_LABEL] if n == 1 else [f"{INPUT_LABEL}_{i + 1}" for i in range(n)]
    _check_input(phi, channel, inputs, ["A1", "A2"])
    psi = apply(channel, phi, n_copies=n, inputs=inputs)
    groups = output_labels(channel, n)
    b1, b2 = groups[0], groups[1]
    i12 = mutual_information(psi, "A1", "A2")
    if mode == "assisted":
        i1 = mutual_information(psi, "A1", b1)
        i2 = mutual_information(psi, "A2", b2)
        return ConstraintTriple(i1, i2, i1 + i2 - i12).scaled(1 / (2 * n))
    c1 = coherent_information(psi, "A1", b1)
    c2 = coherent_information(psi, "A2", b2)
    return ConstraintTriple(c1, c2, c1 + c2 - i12 / 2).scaled(1 / n)


def _check_pmf(p: np.ndarray, axes: int, what: str) -> None:
    if np.any(p < -PMF_TOL):
        raise ValueError(f"{what} has negative entries")
    sums = p.reshape(p.shape[: p.ndim - axes] + (-1,)).sum(axis=-1)
    if np.any(np.abs(sums - 1.0) > PMF_TOL):
        raise ValueError(f"{what} is not normalized (max deviation {np.max(np.abs(sums - 1.0)):.3e})")


def marton_joint(p_y_given_x, p_u, p_x_given_u) -> np.ndarray:
    """Joint pmf ``p(u1, u2, x, y1, y2)`` after validating each factor."""
    p_y = np.asarray(p_y_given_x, dtype=float)
    p_u = np.asarray(p_u, dtype=float)
    p_xu = np.asarray(p_x_given_u, dtype=float)
    if p_y.ndim != 3 or p_u.ndim != 2 or p_xu.ndim != 3:
        raise ValueError("expected p(y1,y2|x)[x,y1,y2], p(u1,u2)[u1,u2], p(x|u1,u2)[u1,u2,x]")
    if p_xu.shape[:2] != p_u.shape or p_xu.shape[2] != p_y.shape[0]:
        raise ValueError(f"shape mismatch: p_u {p_u.shape}, p_x_given_u {p_xu.shape}, p_y_given_x {p_y.shape}")
    _check_pmf(p_y, 2, "p(y1,y2|x)")
    _check_pmf(p_u, 2, "p(u1,u2)")
    _check_pmf(p_xu, 1, "p(x|u1,u2)")
    return np.einsum("ab,abx,xyz->abxyz", p_u, p_xu, p_y)


def _mi2(p: np.ndarray) -> float:
    return shannon_entropy(p.sum(axis=1)) + shannon_entropy(p.sum(axis=0)) - shannon_entropy(p.ravel())


def marton_rates(p_y_given_x, p_u, p_x_given_u) -> ConstraintTriple:
    """Classical triple ``I(U1;Y1)``, ``I(U2;Y2)``, ``I(U1;Y1) + I(U2;Y2) − I(U1;U2)``."""
    joint = marton_joint(p_y_given_x, p_u, p_x_given_u)
    i1 = _mi2(joint.sum(axis=(1, 2, 4)))
    i2 = _mi2(joint.sum(axis=(0, 2, 3)))
    i12 = _mi2(joint.sum(axis=(2, 3, 4)))
    return ConstraintTriple(i1, i2, i1 + i2 - i12)


def classical_input(p_joint) -> PureState:
    """``Σ √p(u1,u2,x) |u1⟩_A1 |u2⟩_A2 |x⟩_A' |u1 u2 x⟩_D``.

    ``D`` keeps a copy of every symbol, so ``A1``, ``A2`` and ``A'`` are
    classically correlated with joint distribution ``p``.
    """
    p = np.asarray(p_joint, dtype=float)
    if p.ndim != 3:
        raise ValueError("p_joint must be indexed [u1, u2, x]")
    _check_pmf(p, 3, "p(u1,u2,x)")
    u1, u2, x = p.shape
    amps = np.zeros((u1, u2, x, p.size))
    idx = np.arange(p.size).reshape(p.shape)
    amps[np.arange(u1)[:, None, None], np.arange(u2)[None, :, None], np.arange(x)[None, None, :], idx] = np.sqrt(np.clip(p, 0, None))
    layout = FactorLayout.of(("A1", u1), ("A2", u2), (INPUT_LABEL, x), ("D", p.size))
    return PureState(amps.reshape(-1), layout)


# --- optimization -----------------------------------------------------------


@dataclass(frozen=True)
class RatePoint:
    rates: tuple[float, float]
    ent_rates: tuple[float, float] | None = None
    constraints_active: tuple[str, ...] = ()


@dataclass(frozen=True)
class SweepRow:
    w: tuple[float, float]
    point: RatePoint
    objective: float
    iterations: int
    restart: int


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points: Sequence[tuple[float, float]]) -> list[tuple[float, float]]:
    """Counter-clockwise extreme points (monotone chain)."""
    pts = sorted(set((float(x), float(y)) for x, y in points))
    if len(pts) <= 2:
        return pts
    lower: list = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 1e-12:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 1e-12:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def _seg_distance(p, a, b) -> float:
    ab = np.subtract(b, a)
    t = 0.0 if not ab.any() else float(np.clip(np.dot(np.subtract(p, a), ab) / np.dot(ab, ab), 0, 1))
    return float(np.linalg.norm(np.subtract(p, np.add(a, t * ab))))


@dataclass(frozen=True)
class RegionBoundary:
    points: list[RatePoint]
    hull: list[tuple[float, float]]
    rows: list[SweepRow] = field(default_factory=list, repr=False)
    provenance: list[np.ndarray] = field(default_factory=list, repr=False)

    @classmethod
    def from_points(cls, points: list[RatePoint], rows=(), provenance=()) -> "RegionBoundary":
        cloud = [(0.0, 0.0)]
        for p in points:
            q1, q2 = (r if r > RATE_FLOOR else 0.0 for r in p.rates)
            cloud += [(q1, q2), (q1, 0.0), (0.0, q2)]
        return cls(list(points), convex_hull(cloud), list(rows), list(provenance))

    def contains(self, point: Sequence[float], tol: float = 1e-6) -> bool:
        h = self.hull
        if len(h) == 1:
            return float(np.linalg.norm(np.subtract(point, h[0]))) <= tol
        if len(h) == 2:
            return _seg_distance(point, h[0], h[1]) <= tol
        for i in range(len(h)):
            a, b = h[i], h[(i + 1) % len(h)]
            if _cross(a, b, point) < 0 and _seg_distance(point, a, b) > tol:
                return False
        return True

    def is_convex(self, tol: float = 1e-9) -> bool:
        h = self.hull
        if len(h) < 3:
            return True
        return all(_cross(h[i], h[(i + 1) % len(h)], h[(i + 2) % len(h)]) >= -tol for i in range(len(h)))

    def support(self, w: Sequence[float]) -> float:
        return max(w[0] * x + w[1] * y for x, y in self.hull)


def sweep_weights(sweep: int) -> list[tuple[float, float]]:
    """``(cos θ, sin θ)`` for ``θ`` evenly spaced over ``[0, π/2]``."""
    if sweep < 1:
        raise ValueError("sweep must be at least 1")
    if sweep == 1:
        return [(math.sqrt(0.5), math.sqrt(0.5))]
    return [(math.cos(t), math.sin(t)) for t in np.linspace(0.0, math.pi / 2, sweep)]


class _InputFamily:
    """Pure inputs on ``A1 A2 A' D`` parametrized by real vectors."""

    def __init__(self, channel: BroadcastChannel, a_dims: tuple[int, int], d_dim: int, mode: str, n: int = 1):
        self.channel = channel
        self.mode = mode
        self.n = n
        inputs = [INPUT_LABEL] if n == 1 else [f"{INPUT_LABEL}_{i + 1}" for i in range(n)]
        self.layout = FactorLayout.of(
            ("A1", a_dims[0]), ("A2", a_dims[1]), *((label, channel.input_dim) for label in inputs), ("D", d_dim)
        )
        self.dim = self.layout.dim
        self.input_dim = channel.input_dim**n

    def state(self, x: np.ndarray) -> PureState:
        v = x[: self.dim] + 1j * x[self.dim :]
        nrm = np.linalg.norm(v)
        if nrm < 1e-300:
            v = np.zeros(self.dim, dtype=complex)
            v[0] = 1.0
            nrm = 1.0
        return PureState(v / nrm, self.layout, check=False)

    def triple(self, phi: PureState) -> ConstraintTriple:
        if self.n > 1:
            return regularized_rates(phi, self.channel, self.n, self.mode)
        if self.mode == "assisted":
            return father_rates(phi, self.channel).triple
        return unassisted_rates(phi, self.channel)

    def to_real(self, v: np.ndarray) -> np.ndarray:
        return np.concatenate([v.real, v.imag])

    def canonical_seeds(self) -> list[np.ndarray]:
        a1, a2 = self.layout.dims[:2]
        d, dd = self.input_dim, self.layout.dims[-1]
        seeds = []
        for which in ("both", "A1", "A2"):
            t = np.zeros((a1, a2, d, dd), dtype=complex)
            if which == "both":
                k = min(a1 * a2, d)
                for j in range(k):
                    t[j // a2, j % a2, j, 0] = 1.0
            elif which == "A1":
                for j in range(min(a1, d)):
                    t[j, 0, j, 0] = 1.0
            else:
                for j in range(min(a2, d)):
                    t[0, j, j, 0] = 1.0
            v = t.reshape(-1)
            seeds.append(self.to_real(v / np.linalg.norm(v)))
        return seeds


def _optimize_direction(family: _InputFamily, w, restarts: int, seed: int, key: int, maxfev: int):
    def objective(x):
        return -family.triple(family.state(x)).support(w)[0]

    best = None
    canon = family.canonical_seeds()
    start0 = min(canon, key=objective)
    for r in range(max(restarts, 1)):
        if r == 0:
            x0 = start0
        else:
            rng = trial_rng(seed, key, r)
            x0 = family.to_real(random_pure_state(family.layout, rng).amplitudes)
        res = minimize(objective, x0, method="Nelder-Mead", options={"xatol": 1e-7, "fatol": 1e-12, "maxfev": maxfev})
        x = res.x if res.fun <= objective(x0) else x0
        val = -objective(x)
        if best is None or val > best[0] + 1e-12:
            best = (val, x, int(res.nfev), r)
    return best


def optimize_region(
    channel: BroadcastChannel,
    mode: str = "assisted",
    sweep: int = 16,
    restarts: int = 8,
    seed: int = 0,
    a_dims: tuple[int, int] = (2, 2),
    d_dim: int | None = None,
    maxfev: int = 400,
    threads: int = 1,
    n: int = 1,
) -> RegionBoundary:
    """Maximize ``w·Q`` over pure inputs for each weight vector in the sweep.

    Restart 0 starts from the best of three canonical wirings (``A1A2``,
    ``A1`` or ``A2`` maximally entangled with ``A'``); the others from Haar
    random inputs. Each start is refined by Nelder-Mead until the simplex is
    smaller than 1e-7 or ``maxfev`` evaluations are spent. With ``n > 1`` the
    input spans ``n`` channel uses and the per-use regularized triple is
    maximized; ``D`` then defaults to the joint input dimension.
    """
    if mode not in ("assisted", "unassisted"):
        raise ValueError(f"mode must be 'assisted' or 'unassisted', got {mode!r}")
    if channel.receivers != 2:
        raise LayoutError("region optimization is defined for two receivers")
    if n < 1:
        raise ValueError("n must be positive")
    if channel.input_dim**n > MAX_OPT_INPUT_DIM:
        raise InfeasibleDimensionError(
            f"joint input dim {channel.input_dim}^{n} exceeds {MAX_OPT_INPUT_DIM}"
        )
    d_dim = channel.input_dim**n if d_dim is None else int(d_dim)
    family = _InputFamily(channel, tuple(a_dims), d_dim, mode, n)
    weights = sweep_weights(sweep)

    def run(k: int) -> SweepRow:
        w = weights[k]
        val, x, nfev, r = _optimize_direction(family, w, restarts, seed, k, maxfev)
        phi = family.state(x)
        triple = family.triple(phi)
        _, vertex = triple.support(w)
        ent = entanglement_rates(phi, channel) if n == 1 else None
        point = RatePoint(vertex, ent, tuple(triple.active(vertex)))
        return SweepRow(w, point, val, nfev, r), phi.amplitudes

    results = pmap(run, range(len(weights)), threads)
    rows = [r for r, _ in results]
    return RegionBoundary.from_points([r.point for r in rows], rows, [a for _, a in results])


def d_dimension_probe(
    channel: BroadcastChannel,
    d_values: Sequence[int],
    mode: str = "assisted",
    sweep: int = 8,
    restarts: int = 4,
    seed: int = 0,
    a_dims: tuple[int, int] = (2, 2),
    maxfev: int = 400,
    tol: float = 1e-6,
) -> dict:
    """Record whether a larger ``D`` strictly improves any sampled support value.

    Only reports what the sampled optimization found; it asserts nothing
    about the underlying question of whether mixed inputs are needed.
    """
    weights = sweep_weights(sweep)
    supports = {}
    for d in d_values:
        region = optimize_region(channel, mode, sweep, restarts, seed, a_dims, d, maxfev)
        supports[int(d)] = [region.support(w) for w in weights]
    ds = sorted(supports)
    improved = any(
        supports[hi][k] > supports[lo][k] + tol for i, lo in enumerate(ds) for hi in ds[i + 1 :] for k in range(len(weights))
    )
    return {"d_values": ds, "weights": weights, "supports": supports, "larger_d_improved": improved}


def _softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max())
    return e / e.sum()


def optimize_marton(
    p_y_given_x,
    sweep: int = 16,
    candidates: int = 512,
    restarts: int = 2,
    seed: int = 0,
    u_dims: tuple[int, int] | None = None,
    maxfev: int = 600,
) -> RegionBoundary:
    """Best-effort Marton region: grid over deterministic encoders, then local search.

    Candidates pair a deterministic map ``x = f(u1, u2)`` (all maps when
    there are at most ``candidates``, otherwise a seeded sample) with a
    uniform ``p(u1, u2)``. The best few per direction are refined over the
    full joint ``p(u1, u2, x)`` via a softmax parametrization.
    """
    p_y = np.asarray(p_y_given_x, dtype=float)
    nx = p_y.shape[0]
    u1, u2 = u_dims or (nx, nx)
    n_maps = nx ** (u1 * u2)
    rng = trial_rng(seed, 0)
    if n_maps <= candidates:
        maps = [np.array(np.unravel_index(i, (nx,) * (u1 * u2))).reshape(u1, u2) for i in range(n_maps)]
    else:
        maps = [rng.integers(0, nx, size=(u1, u2)) for _ in range(candidates)]

    def triple_of(joint: np.ndarray) -> ConstraintTriple:
        p_u = joint.sum(axis=2)
        cond = np.divide(joint, p_u[:, :, None], out=np.full_like(joint, 1.0 / nx), where=p_u[:, :, None] > 0)
        return marton_rates(p_y, p_u, cond)

    grid = []
    for f in maps:
        joint = np.zeros((u1, u2, nx))
        joint[np.arange(u1)[:, None], np.arange(u2)[None, :], f] = 1.0 / (u1 * u2)
        grid.append((joint, triple_of(joint)))

    rows, points, prov = [], [], []
    for k, w in enumerate(sweep_weights(sweep)):
        ranked = sorted(grid, key=lambda g: -g[1].support(w)[0])
        best_joint, best_triple = ranked[0]
        best_val = best_triple.support(w)[0]
        nfev = 0
        for r, (joint, _) in enumerate(ranked[: max(restarts, 1)]):
            z0 = np.log(np.clip(joint.ravel(), 1e-6, None))

            def objective(z):
                return -triple_of(_softmax(z).reshape(u1, u2, nx)).support(w)[0]

            res = minimize(objective, z0, method="Nelder-Mead", options={"xatol": 1e-7, "fatol": 1e-12, "maxfev": maxfev})
            nfev += int(res.nfev)
            if -res.fun > best_val + 1e-12:
                best_val = -res.fun
                best_joint = _softmax(res.x).reshape(u1, u2, nx)
                best_triple = triple_of(best_joint)
        _, vertex = best_triple.support(w)
        point = RatePoint(vertex, None, tuple(best_triple.active(vertex)))
        rows.append(SweepRow(w, point, best_val, nfev, 0))
        points.append(point)
        prov.append(best_joint)
    return RegionBoundary.from_points(points, rows, prov)
