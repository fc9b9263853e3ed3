"""Broadcast channels given by their isometric extension ``A' → B_1 … B_m E``."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from qbc.errors import LayoutError
from qbc.tensor import FactorLayout, IsometryOp, LabeledState, conjugate

INPUT_LABEL = "A'"
ENV_LABEL = "E"
KRAUS_TOL = 1e-9


@dataclass(frozen=True)
class BroadcastChannel:
    isometry: IsometryOp
    receiver_labels: tuple[str, ...]
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "receiver_labels", tuple(self.receiver_labels))
        out = self.isometry.out_layout
        if len(self.isometry.in_layout) != 1:
            raise LayoutError("a broadcast channel has exactly one input factor")
        if not self.receiver_labels:
            raise LayoutError("a broadcast channel needs at least one receiver")
        if out.labels != self.receiver_labels + (ENV_LABEL,):
            raise LayoutError(f"output factors must be receivers then {ENV_LABEL!r}, got {out.labels}")

    @property
    def input_dim(self) -> int:
        return self.isometry.in_layout.dim

    @property
    def input_label(self) -> str:
        return self.isometry.in_layout.labels[0]

    @property
    def output_layout(self) -> FactorLayout:
        return self.isometry.out_layout

    @property
    def receivers(self) -> int:
        return len(self.receiver_labels)

    def receiver_dim(self, i: int) -> int:
        return self.output_layout.dims[i]

    @property
    def env_dim(self) -> int:
        return self.output_layout.dims[-1]

    def kraus(self) -> list[np.ndarray]:
        """Kraus operators read off as slices of the isometry along ``E``."""
        d_b = self.output_layout.dim // self.env_dim
        v = self.isometry.matrix.reshape(d_b, self.env_dim, self.input_dim)
        return [v[:, k, :] for k in range(self.env_dim)]

    def action(self, rho: np.ndarray) -> np.ndarray:
        """Joint receiver output ``tr_E[V ρ V†]`` for an input density matrix."""
        v = self.isometry.matrix
        out = v @ np.asarray(rho) @ v.conj().T
        d_b = self.output_layout.dim // self.env_dim
        return np.einsum("aebe->ab", out.reshape(d_b, self.env_dim, d_b, self.env_dim))


def from_isometry(matrix, input_dim: int, outputs: Sequence[tuple[str, int]], name: str = "custom") -> BroadcastChannel:
    """``outputs`` lists receivers; a trailing ``E`` entry is optional (dim 1 if absent)."""
    outputs = [(str(label), int(dim)) for label, dim in outputs]
    if not outputs or outputs[-1][0] != ENV_LABEL:
        outputs.append((ENV_LABEL, 1))
    iso = IsometryOp(np.asarray(matrix, dtype=complex), FactorLayout.of((INPUT_LABEL, input_dim)), FactorLayout(tuple(outputs)))
    return BroadcastChannel(iso, tuple(label for label, _ in outputs[:-1]), name)


def from_kraus(kraus: Sequence, output_dims: Mapping[str, int] | Sequence[tuple[str, int]], name: str = "custom") -> BroadcastChannel:
    """Stack Kraus operators into ``V = Σ_k K_k ⊗ |k⟩_E``.

    ``output_dims`` gives the receivers in order; their product must equal the
    row count of every Kraus operator.
    """
    items = list(output_dims.items()) if isinstance(output_dims, Mapping) else list(output_dims)
    if any(label == ENV_LABEL for label, _ in items):
        raise LayoutError("the environment factor is added automatically for Kraus input")
    ks = [np.asarray(k, dtype=complex) for k in kraus]
    if not ks:
        raise ValueError("empty Kraus set")
    d_out, d_in = ks[0].shape
    if any(k.shape != (d_out, d_in) for k in ks):
        raise ValueError("Kraus operators have inconsistent shapes")
    if math.prod(int(d) for _, d in items) != d_out:
        raise LayoutError(f"receiver dims {items} do not multiply to Kraus output dimension {d_out}")
    completeness = sum(k.conj().T @ k for k in ks)
    err = np.max(np.abs(completeness - np.eye(d_in)))
    if err > KRAUS_TOL:
        raise ValueError(f"Kraus set is not trace preserving (max |ΣK†K - I| = {err:.3e})")
    v = np.stack(ks, axis=1).reshape(d_out * len(ks), d_in)
    return from_isometry(v, d_in, items + [(ENV_LABEL, len(ks))], name)


def apply(channel: BroadcastChannel, state: LabeledState, n_copies: int = 1, inputs: Sequence[str] | None = None) -> LabeledState:
    """Send each input factor through one use of the channel.

    With ``n_copies == 1`` the input factor is ``A'`` and outputs keep the
    channel's labels. Otherwise inputs default to ``A'_1 … A'_n`` and copy ``i``
    produces ``B1_i, B2_i, …, E_i``.
    """
    if n_copies < 1:
        raise ValueError("n_copies must be positive")
    if inputs is None:
        inputs = [channel.input_label] if n_copies == 1 else [f"{channel.input_label}_{i + 1}" for i in range(n_copies)]
    inputs = list(inputs)
    if len(inputs) != n_copies:
        raise ValueError(f"expected {n_copies} input labels, got {len(inputs)}")
    for label in inputs:
        if state.layout.dim_of(label) != channel.input_dim:
            raise LayoutError(f"input factor {label!r} has dim {state.layout.dim_of(label)}, channel expects {channel.input_dim}")
    for i, label in enumerate(inputs):
        mapping = {channel.input_label: label}
        if n_copies > 1:
            mapping.update({out: f"{out}_{i + 1}" for out in channel.output_layout.labels})
        state = conjugate(channel.isometry.relabel(mapping), state)
    return state


def output_labels(channel: BroadcastChannel, n_copies: int = 1) -> list[tuple[str, ...]]:
    """Per-receiver label groups (plus environment last) after :func:`apply`."""
    labels = channel.output_layout.labels
    if n_copies == 1:
        return [(label,) for label in labels]
    return [tuple(f"{label}_{i + 1}" for i in range(n_copies)) for label in labels]


# -- builtin zoo ---------------------------------------------------------------

_PAULI = [
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
]


def ideal_to_b1() -> BroadcastChannel:
    """Noiseless qubit to receiver 1; receiver 2 and the environment are trivial."""
    return from_isometry(np.eye(2), 2, [("B1", 2), ("B2", 1)], "ideal_to_b1")


def swap_router(receivers: int = 2) -> BroadcastChannel:
    """``A'`` is ``receivers`` qubits; qubit ``j`` goes to receiver ``j`` untouched."""
    if receivers < 1:
        raise ValueError("router needs at least one receiver")
    d = 2**receivers
    return from_isometry(np.eye(d), d, [(f"B{j + 1}", 2) for j in range(receivers)], "swap_router")


def classical_embedded(p_y_given_x, name: str = "classical_embedded") -> BroadcastChannel:
    """Measure-and-prepare embedding of a classical channel ``p(y_1, y_2 | x)``.

    ``p_y_given_x[x, y1, y2]``. Kraus operators ``√p(y|x) |y_1 y_2⟩⟨x|`` are kept
    only where ``p(y|x) > 0``, so the environment is the minimal one.
    """
    p = np.asarray(p_y_given_x, dtype=float)
    if p.ndim != 3:
        raise ValueError("transition tensor must be indexed [x, y1, y2]")
    if np.any(p < 0) or np.max(np.abs(p.sum(axis=(1, 2)) - 1.0)) > KRAUS_TOL:
        raise ValueError("each p(·|x) must be a probability distribution")
    nx, ny1, ny2 = p.shape
    kraus = []
    for x in range(nx):
        for y1 in range(ny1):
            for y2 in range(ny2):
                if p[x, y1, y2] > 0:
                    k = np.zeros((ny1 * ny2, nx), dtype=complex)
                    k[y1 * ny2 + y2, x] = math.sqrt(p[x, y1, y2])
                    kraus.append(k)
    return from_kraus(kraus, [("B1", ny1), ("B2", ny2)], name)


def dephasing_broadcast() -> BroadcastChannel:
    """Qubit fan-out in the computational basis: ``|x⟩ → |x⟩_B1 |x⟩_B2 |x⟩_E``."""
    copy = np.zeros((2, 2, 2))
    copy[0, 0, 0] = copy[1, 1, 1] = 1.0
    return classical_embedded(copy, "dephasing_broadcast")


def erasure_flag(p: float = 0.5) -> BroadcastChannel:
    """The qubit reaches receiver 1 with probability ``1 − p`` and receiver 2 otherwise.

    Both outputs are qutrits whose level 2 is the erasure flag; ``E`` records
    which receiver got the qubit.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("erasure probability must lie in [0, 1]")
    v = np.zeros((3, 3, 2, 2), dtype=complex)
    for x in range(2):
        v[x, 2, 0, x] = math.sqrt(1.0 - p)
        v[2, x, 1, x] = math.sqrt(p)
    return from_isometry(v.reshape(18, 2), 2, [("B1", 3), ("B2", 3), ("E", 2)], "erasure_flag")


def depolarizing_broadcast(p: float = 0.25) -> BroadcastChannel:
    """Receiver 1 gets ``(1 − p)ρ + p I/2``; receiver 2 holds the Pauli record.

    Receiver 2's output is the complementary channel of the depolarizing map,
    so the environment is trivial.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("depolarizing parameter must lie in [0, 1]")
    weights = [1.0 - 3.0 * p / 4.0] + [p / 4.0] * 3
    v = np.zeros((2, 4, 2), dtype=complex)
    for k, (w, sigma) in enumerate(zip(weights, _PAULI)):
        v[:, k, :] = math.sqrt(w) * sigma
    return from_isometry(v.reshape(8, 2), 2, [("B1", 2), ("B2", 4)], "depolarizing_broadcast")


_BUILTINS = {
    "ideal_to_b1": ideal_to_b1,
    "swap_router": swap_router,
    "classical_embedded": classical_embedded,
    "dephasing_broadcast": dephasing_broadcast,
    "erasure_flag": erasure_flag,
    "depolarizing_broadcast": depolarizing_broadcast,
}


def builtin(name: str, **params) -> BroadcastChannel:
    try:
        factory = _BUILTINS[name]
    except KeyError:
        raise ValueError(f"unknown builtin channel {name!r}; choose from {sorted(_BUILTINS)}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ValueError(f"invalid parameters for {name!r}: {exc}") from None


def builtin_names() -> list[str]:
    return sorted(_BUILTINS)


# -- channel.json --------------------------------------------------------------

def _complex_matrix(rows) -> np.ndarray:
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise ValueError("matrices are encoded as nested lists of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def encode_matrix(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def channel_from_dict(spec: dict) -> BroadcastChannel:
    try:
        input_dim = int(spec["input_dim"])
        outputs = [(o["label"], int(o["dim"])) for o in spec["outputs"]]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"channel spec is missing field {exc}") from None
    name = spec.get("name", "custom")
    if "isometry" in spec:
        return from_isometry(_complex_matrix(spec["isometry"]), input_dim, outputs, name)
    if "kraus" in spec:
        kraus = [_complex_matrix(k) for k in spec["kraus"]]
        if any(k.shape[1] != input_dim for k in kraus):
            raise ValueError("Kraus operators do not match input_dim")
        return from_kraus(kraus, outputs, name)
    raise ValueError("channel spec needs an 'isometry' or 'kraus' entry")


def channel_to_dict(channel: BroadcastChannel) -> dict:
    return {
        "name": channel.name,
        "input_dim": channel.input_dim,
        "outputs": [{"label": label, "dim": dim} for label, dim in channel.output_layout.factors],
        "isometry": encode_matrix(channel.isometry.matrix),
    }


def load_channel(path: str | Path) -> BroadcastChannel:
    with open(path) as fh:
        return channel_from_dict(json.load(fh))


def dump_channel(channel: BroadcastChannel, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(channel_to_dict(channel), fh, indent=1)


def parse_channel_ref(ref: str) -> BroadcastChannel:
    """``builtin:NAME[:k=v,...]`` or a path to a channel JSON file."""
    if ref.startswith("builtin:"):
        _, _, rest = ref.partition(":")
        name, _, params = rest.partition(":")
        kwargs = {}
        for item in filter(None, params.split(",")):
            key, _, value = item.partition("=")
            kwargs[key] = json.loads(value)
        return builtin(name, **kwargs)
    return load_channel(ref)

