"""Labelled multipartite states and the linear algebra shared by every module.

Every state carries a :class:`FactorLayout`, an ordered list of named tensor
factors. Kronecker products are row-major: the first listed factor is the
slowest-varying index. All reshapes in the package derive from that one rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from qbc.errors import LayoutError

CONSTRUCTION_TOL = 1e-10
DERIVED_TOL = 1e-9


def _labels(labels: Union[str, Iterable[str]]) -> tuple[str, ...]:
    if isinstance(labels, str):
        return (labels,)
    return tuple(labels)


@dataclass(frozen=True)
class FactorLayout:
    """Ordered ``(label, dim)`` pairs describing a tensor-product space."""

    factors: tuple[tuple[str, int], ...]

    def __post_init__(self):
        factors = tuple((str(label), int(dim)) for label, dim in self.factors)
        object.__setattr__(self, "factors", factors)
        seen = set()
        for label, dim in factors:
            if label in seen:
                raise LayoutError(f"duplicate factor label {label!r}")
            if dim < 1:
                raise LayoutError(f"factor {label!r} has dimension {dim} < 1")
            seen.add(label)

    @classmethod
    def of(cls, *pairs: tuple[str, int]) -> "FactorLayout":
        return cls(tuple(pairs))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(dim for _, dim in self.factors)

    @property
    def dim(self) -> int:
        return math.prod(self.dims)

    def __len__(self) -> int:
        return len(self.factors)

    def __contains__(self, label) -> bool:
        return label in self.labels

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LayoutError(f"unknown factor label {label!r}; layout has {self.labels}") from None

    def dim_of(self, labels: Union[str, Iterable[str]]) -> int:
        return math.prod(self.factors[self.index(label)][1] for label in _labels(labels))

    def select(self, labels: Union[str, Iterable[str]]) -> "FactorLayout":
        """Sub-layout holding ``labels`` in the order they appear here."""
        wanted = set(_labels(labels))
        for label in wanted:
            self.index(label)
        return FactorLayout(tuple(f for f in self.factors if f[0] in wanted))

    def complement(self, labels: Union[str, Iterable[str]]) -> tuple[str, ...]:
        drop = set(_labels(labels))
        for label in drop:
            self.index(label)
        return tuple(label for label in self.labels if label not in drop)

    def __add__(self, other: "FactorLayout") -> "FactorLayout":
        return FactorLayout(self.factors + other.factors)

    def __str__(self) -> str:
        return "⊗".join(f"{label}[{dim}]" for label, dim in self.factors)


def _frozen(array, dtype=complex) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class PureState:
    amplitudes: np.ndarray
    layout: FactorLayout
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        amps = _frozen(np.ravel(self.amplitudes))
        object.__setattr__(self, "amplitudes", amps)
        if amps.shape[0] != self.layout.dim:
            raise LayoutError(
                f"amplitude vector has length {amps.shape[0]} but layout {self.layout} has dimension {self.layout.dim}"
            )
        if self.check and abs(np.linalg.norm(amps) - 1.0) > CONSTRUCTION_TOL:
            raise ValueError(f"state is not normalized (norm {np.linalg.norm(amps):.3e})")

    @property
    def labels(self) -> tuple[str, ...]:
        return self.layout.labels

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.layout.dims)

    def density(self) -> "DensityOperator":
        return DensityOperator(np.outer(self.amplitudes, self.amplitudes.conj()), self.layout, check=False)


@dataclass(frozen=True)
class DensityOperator:
    matrix: np.ndarray
    layout: FactorLayout
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        mat = _frozen(self.matrix)
        object.__setattr__(self, "matrix", mat)
        d = self.layout.dim
        if mat.shape != (d, d):
            raise LayoutError(f"matrix shape {mat.shape} does not match layout dimension {d}")
        if self.check:
            if np.max(np.abs(mat - mat.conj().T), initial=0.0) > CONSTRUCTION_TOL:
                raise ValueError("density operator is not Hermitian")
            if abs(np.trace(mat).real - 1.0) > CONSTRUCTION_TOL:
                raise ValueError(f"density operator has trace {np.trace(mat).real:.12g}")
            if np.linalg.eigvalsh(mat).min() < -CONSTRUCTION_TOL:
                raise ValueError("density operator has negative eigenvalues")

    @property
    def labels(self) -> tuple[str, ...]:
        return self.layout.labels

    def density(self) -> "DensityOperator":
        return self


LabeledState = Union[PureState, DensityOperator]


@dataclass(frozen=True)
class IsometryOp:
    matrix: np.ndarray
    in_layout: FactorLayout
    out_layout: FactorLayout
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        mat = _frozen(self.matrix)
        object.__setattr__(self, "matrix", mat)
        if mat.shape != (self.out_layout.dim, self.in_layout.dim):
            raise LayoutError(
                f"isometry shape {mat.shape} does not match {self.out_layout} <- {self.in_layout}"
            )
        if self.check:
            if self.out_layout.dim < self.in_layout.dim:
                raise ValueError("isometry output dimension is smaller than its input dimension")
            err = np.max(np.abs(mat.conj().T @ mat - np.eye(mat.shape[1])), initial=0.0)
            if err > CONSTRUCTION_TOL:
                raise ValueError(f"matrix is not an isometry (max |V†V - I| = {err:.3e})")

    @classmethod
    def unitary(cls, matrix, layout: FactorLayout, check: bool = True) -> "IsometryOp":
        return cls(matrix, layout, layout, check=check)

    def relabel(self, mapping: dict[str, str]) -> "IsometryOp":
        return IsometryOp(
            self.matrix,
            _relabel_layout(self.in_layout, mapping),
            _relabel_layout(self.out_layout, mapping),
            check=False,
        )


def _relabel_layout(layout: FactorLayout, mapping: dict[str, str]) -> FactorLayout:
    return FactorLayout(tuple((mapping.get(label, label), dim) for label, dim in layout.factors))


def relabel(state: LabeledState, mapping: dict[str, str]) -> LabeledState:
    layout = _relabel_layout(state.layout, mapping)
    if isinstance(state, PureState):
        return PureState(state.amplitudes, layout, check=False)
    return DensityOperator(state.matrix, layout, check=False)


def permute(state: LabeledState, order: Sequence[str]) -> LabeledState:
    """Reorder the factors of ``state`` to ``order`` (a permutation of its labels)."""
    order = tuple(order)
    if sorted(order) != sorted(state.labels):
        raise LayoutError(f"cannot permute {state.labels} into {order}")
    if order == state.labels:
        return state
    perm = [state.layout.index(label) for label in order]
    layout = FactorLayout(tuple(state.layout.factors[i] for i in perm))
    dims = state.layout.dims
    if isinstance(state, PureState):
        amps = state.amplitudes.reshape(dims).transpose(perm).reshape(-1)
        return PureState(amps, layout, check=False)
    n = len(dims)
    mat = state.matrix.reshape(dims + dims).transpose(perm + [n + p for p in perm])
    return DensityOperator(mat.reshape(layout.dim, layout.dim), layout, check=False)


def merge(state: LabeledState, labels: Sequence[str], new_label: str) -> LabeledState:
    """Fuse ``labels`` (in the given order) into one factor named ``new_label``.

    The fused factor sits where the first of ``labels`` was.
    """
    labels = tuple(labels)
    rest = state.layout.complement(labels)
    first = min(state.layout.index(label) for label in labels)
    before = [label for label in state.labels[:first] if label in rest]
    after = [label for label in rest if label not in before]
    ordered = permute(state, before + list(labels) + after)
    merged_dim = state.layout.dim_of(labels)
    factors = (
        tuple(ordered.layout.factors[: len(before)])
        + ((new_label, merged_dim),)
        + tuple(ordered.layout.factors[len(before) + len(labels):])
    )
    layout = FactorLayout(factors)
    if isinstance(ordered, PureState):
        return PureState(ordered.amplitudes, layout, check=False)
    return DensityOperator(ordered.matrix, layout, check=False)


def split(state: LabeledState, label: str, parts: Sequence[tuple[str, int]]) -> LabeledState:
    """Inverse of :func:`merge`: replace factor ``label`` by ``parts`` (row-major)."""
    i = state.layout.index(label)
    if math.prod(d for _, d in parts) != state.layout.factors[i][1]:
        raise LayoutError(f"parts {parts} do not factor dimension of {label!r}")
    factors = state.layout.factors[:i] + tuple(parts) + state.layout.factors[i + 1:]
    layout = FactorLayout(factors)
    if isinstance(state, PureState):
        return PureState(state.amplitudes, layout, check=False)
    return DensityOperator(state.matrix, layout, check=False)


def tensor_product(a: LabeledState, b: LabeledState) -> LabeledState:
    """Kronecker product; pure only if both inputs are pure."""
    layout = a.layout + b.layout
    if isinstance(a, PureState) and isinstance(b, PureState):
        return PureState(np.kron(a.amplitudes, b.amplitudes), layout, check=False)
    return DensityOperator(np.kron(a.density().matrix, b.density().matrix), layout, check=False)


def reduced_matrix(state: LabeledState, keep: Union[str, Iterable[str]]) -> tuple[np.ndarray, FactorLayout]:
    """Reduced density matrix on ``keep`` (layout order) as a bare array."""
    keep_layout = state.layout.select(keep)
    kept = keep_layout.labels
    traced = state.layout.complement(kept)
    dims = state.layout.dims
    k_idx = [state.layout.index(label) for label in kept]
    t_idx = [state.layout.index(label) for label in traced]
    dk = keep_layout.dim
    dt = state.layout.dim // dk
    if isinstance(state, PureState):
        m = state.amplitudes.reshape(dims).transpose(k_idx + t_idx).reshape(dk, dt)
        return m @ m.conj().T, keep_layout
    n = len(dims)
    t = state.matrix.reshape(dims + dims).transpose(k_idx + t_idx + [n + i for i in k_idx] + [n + i for i in t_idx])
    return np.einsum("ajbj->ab", t.reshape(dk, dt, dk, dt)), keep_layout


def partial_trace(state: LabeledState, keep: Union[str, Iterable[str]]) -> DensityOperator:
    """Trace out every factor not in ``keep``; kept factors stay in layout order."""
    mat, layout = reduced_matrix(state, keep)
    return DensityOperator(mat, layout, check=False)


def _apply_rows(op: IsometryOp, layout: FactorLayout, rows: np.ndarray) -> tuple[np.ndarray, FactorLayout]:
    """Apply ``op ⊗ I`` to an array whose first axis is indexed by ``layout``."""
    in_labels = op.in_layout.labels
    for label, dim in op.in_layout.factors:
        if layout.dim_of(label) != dim:
            raise LayoutError(f"factor {label!r} has dim {layout.dim_of(label)}, operator expects {dim}")
    rest = layout.complement(in_labels)
    clash = set(rest) & set(op.out_layout.labels)
    if clash:
        raise LayoutError(f"output labels {sorted(clash)} collide with untouched factors")
    dims = layout.dims
    ncols = rows.shape[1]
    in_idx = [layout.index(label) for label in in_labels]
    rest_idx = [layout.index(label) for label in rest]
    rest_dim = layout.dim // op.in_layout.dim
    t = rows.reshape(dims + (ncols,)).transpose(in_idx + rest_idx + [len(dims)])
    t = op.matrix @ t.reshape(op.in_layout.dim, rest_dim * ncols)

    first = min(in_idx)
    new_factors = []
    for i, factor in enumerate(layout.factors):
        if i == first:
            new_factors.extend(op.out_layout.factors)
        if factor[0] in rest:
            new_factors.append(factor)
    new_layout = FactorLayout(tuple(new_factors))
    current = list(op.out_layout.labels) + list(rest)
    perm = [current.index(label) for label in new_layout.labels]
    shaped = t.reshape(op.out_layout.dims + tuple(layout.dim_of(r) for r in rest) + (ncols,))
    out = shaped.transpose(perm + [len(perm)]).reshape(new_layout.dim, ncols)
    return out, new_layout


def conjugate(op: IsometryOp, state: LabeledState) -> LabeledState:
    """Return ``op · state``: the operator acts on its input factors, identity elsewhere.

    The output factors take the place of the first input factor in the layout.
    """
    if isinstance(state, PureState):
        vec, layout = _apply_rows(op, state.layout, state.amplitudes[:, None])
        return PureState(vec[:, 0], layout, check=False)
    half, layout = _apply_rows(op, state.layout, state.matrix)
    full, _ = _apply_rows(op, state.layout, half.conj().T)
    return DensityOperator(full.conj().T, layout, check=False)


def max_entangled(dim: int, labels: tuple[str, str] = ("S", "S'")) -> PureState:
    """Standard pair ``(1/√d) Σ_i |ii⟩`` in the computational basis."""
    if dim < 1:
        raise LayoutError("dimension must be positive")
    amps = np.eye(dim, dtype=complex).reshape(-1) / math.sqrt(dim)
    return PureState(amps, FactorLayout.of((labels[0], dim), (labels[1], dim)))


def basis_state(layout: FactorLayout, index: Union[int, Sequence[int]] = 0) -> PureState:
    if not isinstance(index, int):
        index = int(np.ravel_multi_index(tuple(index), layout.dims))
    amps = np.zeros(layout.dim, dtype=complex)
    amps[index] = 1.0
    return PureState(amps, layout)


def maximally_mixed(layout: FactorLayout) -> DensityOperator:
    return DensityOperator(np.eye(layout.dim) / layout.dim, layout)


def trace_norm(matrix, tol: float = DERIVED_TOL) -> float:
    """``tr|M|`` of a Hermitian matrix (sum of absolute eigenvalues)."""
    m = np.asarray(matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"trace norm needs a square matrix, got shape {m.shape}")
    if np.max(np.abs(m - m.conj().T), initial=0.0) > tol:
        raise ValueError("trace norm is only defined here for Hermitian matrices")
    return float(np.sum(np.abs(np.linalg.eigvalsh(m))))


def trace_distance(a: LabeledState, b: LabeledState) -> float:
    """``‖a − b‖₁`` after aligning factor order; ranges over [0, 2]."""
    if sorted(a.layout.factors) != sorted(b.layout.factors):
        raise LayoutError(f"layouts differ: {a.layout} vs {b.layout}")
    b = permute(b, a.labels)
    if isinstance(a, PureState) and isinstance(b, PureState):
        overlap = abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2
        return 2.0 * math.sqrt(max(0.0, 1.0 - overlap))
    return trace_norm(a.density().matrix - b.density().matrix)


def matrix_sqrt_psd(rho: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(rho)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def purify(rho: DensityOperator, ref_label: str = "R", ref_dim: int | None = None, minimal: bool = False) -> PureState:
    """Canonical purification ``Σ_ij (√ρ)_ij |i⟩|j⟩_R`` with the reference appended last.

    ``ref_dim`` may exceed the needed dimension; extra reference levels are
    left unoccupied. With ``minimal=True`` the reference has dimension
    ``rank(ρ)`` and holds the eigenbasis index instead.
    """
    d = rho.layout.dim
    if minimal:
        w, v = np.linalg.eigh(rho.matrix)
        keep = w > 1e-12
        cols = v[:, keep] * np.sqrt(w[keep])
    else:
        cols = matrix_sqrt_psd(rho.matrix)
    need = cols.shape[1]
    ref_dim = need if ref_dim is None else int(ref_dim)
    if ref_dim < need:
        raise LayoutError(f"reference dimension {ref_dim} is smaller than the required {need}")
    amps = np.zeros((d, ref_dim), dtype=complex)
    amps[:, :need] = cols
    amps /= np.linalg.norm(amps)
    return PureState(amps.reshape(-1), rho.layout + FactorLayout.of((ref_label, ref_dim)))


def uhlmann_isometry(psi: PureState, phi: PureState, shared: Union[str, Iterable[str]]) -> IsometryOp:
    """Isometry ``U: B' → B`` maximizing ``|⟨ψ|(I ⊗ U)|φ⟩|``.

    ``shared`` names the factors common to both states (the ``A`` side);
    every other factor of ``psi`` is ``B`` and every other factor of ``phi``
    is ``B'``. The maximizer comes from the SVD of the overlap operator, so
    ``‖ψ − U·φ‖ ≤ 2√‖ψ^A − φ^A‖``.
    """
    shared = _labels(shared)
    a_layout = psi.layout.select(shared)
    if phi.layout.select(shared).factors != a_layout.factors:
        for label, dim in a_layout.factors:
            if label not in phi.layout or phi.layout.dim_of(label) != dim:
                raise LayoutError(f"shared factor {label!r} differs between the two states")
    order = a_layout.labels
    b_labels = psi.layout.complement(order)
    bp_labels = phi.layout.complement(order)
    b_layout = psi.layout.select(b_labels)
    bp_layout = phi.layout.select(bp_labels)
    if b_layout.dim < bp_layout.dim:
        raise LayoutError(
            f"target purifying system {b_layout} is smaller than source {bp_layout}; pad the target reference"
        )
    psi_m = permute(psi, order + b_labels).amplitudes.reshape(a_layout.dim, b_layout.dim)
    phi_m = permute(phi, order + bp_labels).amplitudes.reshape(a_layout.dim, bp_layout.dim)
    overlap = phi_m.T @ psi_m.conj()
    x, _, yh = np.linalg.svd(overlap, full_matrices=False)
    u = yh.conj().T @ x.conj().T
    return IsometryOp(u, bp_layout, b_layout, check=False)
