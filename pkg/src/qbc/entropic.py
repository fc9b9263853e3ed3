"""Entropies and information quantities in bits."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from qbc.errors import LayoutError
from qbc.tensor import DensityOperator, LabeledState, PureState, _labels, permute, reduced_matrix

CLIP = 1e-12

Labels = Union[str, Iterable[str]]


@dataclass(frozen=True)
class EntropyReport:
    value: float
    spectrum: np.ndarray
    clipped_mass: float

    def __float__(self) -> float:
        return self.value


def _entropy_of_spectrum(eigs: np.ndarray) -> EntropyReport:
    eigs = np.asarray(eigs, dtype=float)
    keep = eigs > CLIP
    clipped = float(np.sum(np.abs(eigs[~keep])))
    p = eigs[keep]
    value = float(-np.sum(p * np.log2(p)))
    return EntropyReport(max(value, 0.0), eigs, clipped)


def von_neumann_entropy(rho: DensityOperator | np.ndarray) -> EntropyReport:
    mat = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho)
    return _entropy_of_spectrum(np.linalg.eigvalsh(mat))


def marginal_spectrum(state: LabeledState, labels: Labels) -> np.ndarray:
    """Eigenvalues of the reduced state on ``labels``.

    For pure states the smaller side of the bipartition is diagonalized.
    """
    labels = _labels(labels)
    if not labels:
        return np.ones(1)
    keep = state.layout.select(labels).labels
    rest = state.layout.complement(keep)
    if isinstance(state, PureState):
        dk = state.layout.dim_of(keep)
        m = permute(state, keep + rest).amplitudes.reshape(dk, -1)
        gram = m @ m.conj().T if m.shape[0] <= m.shape[1] else m.conj().T @ m
        return np.linalg.eigvalsh(gram)
    mat, _ = reduced_matrix(state, keep)
    return np.linalg.eigvalsh(mat)


def entropy(state: LabeledState, labels: Labels) -> float:
    """``H(labels)`` of ``state``; the empty set has entropy 0."""
    return _entropy_of_spectrum(marginal_spectrum(state, labels)).value


def _disjoint(*groups: tuple[str, ...]) -> None:
    seen: set[str] = set()
    for g in groups:
        if seen & set(g):
            raise LayoutError(f"label sets overlap: {sorted(seen & set(g))}")
        seen |= set(g)


def mutual_information(state: LabeledState, a: Labels, b: Labels) -> float:
    """``I(A;B) = H(A) + H(B) − H(AB)``."""
    a, b = _labels(a), _labels(b)
    _disjoint(a, b)
    return entropy(state, a) + entropy(state, b) - entropy(state, a + b)


def coherent_information(state: LabeledState, a: Labels, b: Labels) -> float:
    """``I(A⟩B) = H(B) − H(AB)``."""
    a, b = _labels(a), _labels(b)
    _disjoint(a, b)
    return entropy(state, b) - entropy(state, a + b)


def conditional_mutual_information(state: LabeledState, a: Labels, b: Labels, c: Labels) -> float:
    a, b, c = _labels(a), _labels(b), _labels(c)
    _disjoint(a, b, c)
    return entropy(state, a + c) + entropy(state, b + c) - entropy(state, a + b + c) - entropy(state, c)


def purity(rho: DensityOperator | np.ndarray) -> float:
    mat = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho)
    return float(np.real(np.vdot(mat.conj().T, mat)))


def multiparty_correlation(state: LabeledState, subsets: Sequence[Labels]) -> float:
    """``J = Σ_j H(A_j) − H(A_1 … A_k)`` for pairwise disjoint label groups."""
    groups = [_labels(s) for s in subsets]
    _disjoint(*groups)
    joint = tuple(label for g in groups for label in g)
    return sum(entropy(state, g) for g in groups) - entropy(state, joint)


def shannon_entropy(p) -> float:
    """Shannon entropy in bits of any array of probabilities."""
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def binary_entropy(p: float) -> float:
    return shannon_entropy([p, 1.0 - p])
