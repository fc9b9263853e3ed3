"""One-shot simulation of the two-receiver broadcast father protocol.

The sender holds ``A1 Ã1 A2 Ã2``, each maximally entangled with a reference
(``R1``, ``R2``) or with a receiver's half of shared entanglement (``B̃1``,
``B̃2``). A decoupling unitary is chosen for each receiver on the
inaccessible side ``R_i B̃_i``, realized on the sender side by its transpose,
and each receiver decodes with an Uhlmann isometry.

Factor labels used throughout::

    R1 A1 At1 Bt1 R2 A2 At2 Bt2   (initial pairs; "t" marks the tilde systems)
    A' Ahat                        (encoder output)
    <receiver 1> <receiver 2> E    (channel output)
    Bbar1 Bhat1 Bbar2 Bhat2        (decoder output)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from qbc.channels import ENV_LABEL, BroadcastChannel, apply, encode_matrix
from qbc.errors import InfeasibleDimensionError, LayoutError
from qbc.fqsw import GoodUnitary, SplitSpec, select_good_unitary
from qbc.haar import derive_seed
from qbc.tensor import (
    FactorLayout,
    IsometryOp,
    PureState,
    conjugate,
    max_entangled,
    merge,
    partial_trace,
    permute,
    purify,
    tensor_product,
    uhlmann_isometry,
)

SENDER = ("A1", "At1", "A2", "At2")
PROTOCOL_LABELS = ("R1", "A1", "At1", "Bt1", "R2", "A2", "At2", "Bt2", "A'", "Ahat", "Bbar1", "Bhat1", "Bbar2", "Bhat2")


def combine_distances(eps1: float, eps2: float) -> float:
    """Triangle-inequality combination ``2ε₁ + ε₂`` of two partial decoupling errors."""
    if eps1 < 0 or eps2 < 0:
        raise ValueError("distances must be non-negative")
    return 2.0 * eps1 + eps2


def prepare_phi(a1: int, at1: int, a2: int, at2: int) -> PureState:
    """``Φ^{R1A1} ⊗ Φ^{Ã1B̃1} ⊗ Φ^{R2A2} ⊗ Φ^{Ã2B̃2}``."""
    state = max_entangled(a1, ("R1", "A1"))
    for dim, pair in ((at1, ("At1", "Bt1")), (a2, ("R2", "A2")), (at2, ("At2", "Bt2"))):
        state = tensor_product(state, max_entangled(dim, pair))
    return state


def _is_max_entangled(phi: PureState, near: tuple[str, ...], far: tuple[str, ...]) -> bool:
    d = phi.layout.dim_of(near)
    if phi.layout.dim_of(far) != d:
        return False
    ordered = permute(phi, near + far + phi.layout.complement(near + far))
    m = ordered.amplitudes.reshape(d * d, -1)
    target = np.eye(d).reshape(-1) / math.sqrt(d)
    return abs(np.linalg.norm(target.conj() @ m) - 1.0) < 1e-9


def transpose_trick(unitary: np.ndarray, phi: PureState, near: tuple[str, ...], far: tuple[str, ...]) -> PureState:
    """Apply ``Uᵀ`` to ``far`` so the result equals ``U`` applied to ``near``.

    Requires ``near`` and ``far`` to be in the standard maximally entangled
    state, factor by factor in the given order.
    """
    near, far = tuple(near), tuple(far)
    if not _is_max_entangled(phi, near, far):
        raise ValueError(f"{near} and {far} are not in the standard maximally entangled state")
    layout = phi.layout.select(far)
    layout = FactorLayout(tuple((label, phi.layout.dim_of(label)) for label in far))
    op = IsometryOp.unitary(np.asarray(unitary).T, layout)
    return conjugate(op, phi)


def wiring_encoder(a1: int, at1: int, a2: int, at2: int, a_prime: int, ahat: int) -> IsometryOp:
    """Embed the sender's joint basis into the first basis vectors of ``A' ⊗ Â``."""
    d_in = a1 * at1 * a2 * at2
    d_out = a_prime * ahat
    if d_in > d_out:
        raise InfeasibleDimensionError(f"sender space of dim {d_in} does not fit in A'Â of dim {d_out}")
    in_layout = FactorLayout.of(("A1", a1), ("At1", at1), ("A2", a2), ("At2", at2))
    out_layout = FactorLayout.of(("A'", a_prime), ("Ahat", ahat))
    return IsometryOp(np.eye(d_out)[:, :d_in], in_layout, out_layout)


def build_decoder(state: PureState, reference: str, held: tuple[str, ...], bar_label: str, hat_label: str) -> IsometryOp:
    """Uhlmann decoder ``held → bar ⊗ hat`` for one receiver.

    The target is ``Φ^{reference, bar}`` times a minimal purification (on
    ``hat``) of the state of everything the receiver does not hold.
    """
    held = tuple(held)
    d_r = state.layout.dim_of(reference)
    d_held = state.layout.dim_of(held)
    if d_held < d_r:
        raise InfeasibleDimensionError(
            f"receiver systems {held} (dim {d_held}) cannot host a message of dim {d_r}"
        )
    shared = state.layout.complement(held)
    rest = tuple(label for label in shared if label != reference)
    rho_rest = partial_trace(state, rest)
    rank = int(np.sum(np.linalg.eigvalsh(rho_rest.matrix) > 1e-12))
    hat_dim = max(rank, -(-d_held // d_r), 1)
    zeta = purify(rho_rest, hat_label, ref_dim=hat_dim, minimal=True)
    target = tensor_product(max_entangled(d_r, (reference, bar_label)), zeta)
    return uhlmann_isometry(target, state, shared)


def best_product_distance(state: PureState, pairs: list[tuple[str, str]]) -> float:
    """Distance from ``state`` to the closest ``ψ̂ ⊗ Φ^{pair_1} ⊗ …`` with ``ψ̂`` pure.

    The optimal ``ψ̂`` is the normalized partial overlap ``(⟨Φ…| ⊗ I)|state⟩``,
    which gives ``2√(1 − ‖(⟨Φ…| ⊗ I)|state⟩‖²)``.
    """
    labels = tuple(label for pair in pairs for label in pair)
    ordered = permute(state, labels + state.layout.complement(labels))
    phi_vec = np.ones(1, dtype=complex)
    for a, b in pairs:
        d = state.layout.dim_of(a)
        if state.layout.dim_of(b) != d:
            raise LayoutError(f"pair ({a}, {b}) has unequal dimensions")
        phi_vec = np.kron(phi_vec, np.eye(d).reshape(-1) / math.sqrt(d))
    m = ordered.amplitudes.reshape(phi_vec.size, -1)
    # ‖(I − |Φ⟩⟨Φ|) m‖ equals √(1 − overlap) without cancellation near zero
    residual = m - np.outer(phi_vec, phi_vec.conj() @ m)
    return 2.0 * float(np.linalg.norm(residual))


@dataclass(frozen=True)
class OneShotConfig:
    channel: BroadcastChannel
    a1: int
    at1: int
    a2: int
    at2: int
    ahat: int = 1
    encoder: IsometryOp | None = None
    candidates: int = 16
    seed: int = 0

    def __post_init__(self):
        for name in ("a1", "at1", "a2", "at2", "ahat", "candidates"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.channel.receivers != 2:
            raise LayoutError("the one-shot protocol is defined for two receivers")
        clash = set(self.channel.receiver_labels) & set(PROTOCOL_LABELS)
        if clash:
            raise LayoutError(f"channel receiver labels {sorted(clash)} collide with protocol labels")
        if self.encoder is not None:
            enc = self.encoder
            want_in = {"A1": self.a1, "At1": self.at1, "A2": self.a2, "At2": self.at2}
            if dict(enc.in_layout.factors) != want_in:
                raise LayoutError(f"encoder input {enc.in_layout} does not match {want_in}")
            want_out = {"A'": self.channel.input_dim, "Ahat": self.ahat}
            if dict(enc.out_layout.factors) != want_out:
                raise LayoutError(f"encoder output {enc.out_layout} does not match {want_out}")
        elif self.a1 * self.at1 * self.a2 * self.at2 > self.channel.input_dim * self.ahat:
            raise InfeasibleDimensionError("sender space does not fit into A'Â; raise ahat")

    def resolved_encoder(self) -> IsometryOp:
        if self.encoder is not None:
            return self.encoder
        return wiring_encoder(self.a1, self.at1, self.a2, self.at2, self.channel.input_dim, self.ahat)


@dataclass(frozen=True)
class ReceiverResult:
    selection: GoodUnitary = field(repr=False)
    decoder: IsometryOp = field(repr=False)
    decoupling_distance: float
    bound: float
    lhs: float

    @property
    def decoupled(self) -> bool:
        """Selected unitary meets the averaged bound: ``ε² ≤ bound``."""
        return self.decoupling_distance**2 <= self.bound * (1 + 1e-12)

    @property
    def receiver_bound(self) -> float:
        """``2·bound^{1/4}``, valid whenever :attr:`decoupled` holds."""
        return 2.0 * self.bound**0.25

    @property
    def uhlmann_bound(self) -> float:
        """``2√ε`` from the measured decoupling distance; holds unconditionally."""
        return 2.0 * math.sqrt(self.decoupling_distance)


@dataclass(frozen=True)
class ProtocolReport:
    lhs_total: float
    lhs_bob1: float
    lhs_bob2: float
    rhs_term1: float
    rhs_term2: float
    combined_bound: float
    receiver1: ReceiverResult = field(repr=False)
    receiver2: ReceiverResult = field(repr=False)
    transpose_error: float = 0.0
    final_state: PureState | None = field(default=None, repr=False)

    @property
    def bounds_met(self) -> bool:
        return self.receiver1.decoupled and self.receiver2.decoupled

    @property
    def within_bound(self) -> bool:
        return self.lhs_total <= self.combined_bound + 1e-6

    def to_dict(self) -> dict:
        def receiver(r: ReceiverResult) -> dict:
            return {
                "decoupling_distance": r.decoupling_distance,
                "bound": r.bound,
                "decoupled": r.decoupled,
                "markov_threshold": r.selection.threshold,
                "met_markov_threshold": r.selection.met_threshold,
                "candidate_index": r.selection.index,
                "lhs": r.lhs,
                "receiver_bound": r.receiver_bound,
                "uhlmann_bound": r.uhlmann_bound,
                "unitary": encode_matrix(r.selection.unitary),
                "decoder_in": [list(f) for f in r.decoder.in_layout.factors],
                "decoder_out": [list(f) for f in r.decoder.out_layout.factors],
            }

        return {
            "lhs_total": self.lhs_total,
            "lhs_bob1": self.lhs_bob1,
            "lhs_bob2": self.lhs_bob2,
            "rhs_term1": self.rhs_term1,
            "rhs_term2": self.rhs_term2,
            "combined_bound": self.combined_bound,
            "bounds_met": self.bounds_met,
            "within_bound": self.within_bound,
            "triangle_bound_measured": combine_distances(self.lhs_bob1, self.lhs_bob2),
            "transpose_error": self.transpose_error,
            "receiver1": receiver(self.receiver1),
            "receiver2": receiver(self.receiver2),
            "final_layout": [list(f) for f in self.final_state.layout.factors] if self.final_state else None,
        }


def _select(psi: PureState, ref: str, tilde: str, excluded: str, candidates: int, seed: int) -> GoodUnitary:
    merged = merge(psi, (ref, tilde), "S")
    split = SplitSpec("S", psi.layout.dim_of(ref), psi.layout.dim_of(tilde))
    reference = tuple(label for label in merged.labels if label not in ("S", excluded))
    return select_good_unitary(merged, split, candidates, seed, reference=reference)


def _apply_unitary(u: np.ndarray, state: PureState, labels: tuple[str, ...]) -> PureState:
    layout = FactorLayout(tuple((label, state.layout.dim_of(label)) for label in labels))
    return conjugate(IsometryOp.unitary(u, layout, check=False), state)


def run_one_shot(cfg: OneShotConfig) -> ProtocolReport:
    """Run the protocol once and measure every distance against its bound."""
    ch = cfg.channel
    b1, b2 = ch.receiver_labels
    w = cfg.resolved_encoder()
    phi = prepare_phi(cfg.a1, cfg.at1, cfg.a2, cfg.at2)
    psi = apply(ch, conjugate(w, phi))

    sel1 = _select(psi, "R1", "Bt1", b1, cfg.candidates, derive_seed(cfg.seed, 1))
    psi_u = _apply_unitary(sel1.unitary, psi, ("R1", "Bt1"))
    sel2 = _select(psi_u, "R2", "Bt2", b2, cfg.candidates, derive_seed(cfg.seed, 2))
    psi_u = _apply_unitary(sel2.unitary, psi_u, ("R2", "Bt2"))

    phi_t = transpose_trick(sel1.unitary, phi, ("R1", "Bt1"), ("A1", "At1"))
    phi_t = transpose_trick(sel2.unitary, phi_t, ("R2", "Bt2"), ("A2", "At2"))
    actual = apply(ch, conjugate(w, phi_t))
    transpose_error = float(np.linalg.norm(permute(actual, psi_u.labels).amplitudes - psi_u.amplitudes))

    v1 = build_decoder(actual, "R1", (b1, "Bt1"), "Bbar1", "Bhat1")
    v2 = build_decoder(actual, "R2", (b2, "Bt2"), "Bbar2", "Bhat2")
    final = conjugate(v2, conjugate(v1, actual))

    lhs1 = best_product_distance(final, [("R1", "Bbar1")])
    lhs2 = best_product_distance(final, [("R2", "Bbar2")])
    lhs = best_product_distance(final, [("R1", "Bbar1"), ("R2", "Bbar2")])

    r1 = ReceiverResult(sel1, v1, sel1.distance, sel1.bound, lhs1)
    r2 = ReceiverResult(sel2, v2, sel2.distance, sel2.bound, lhs2)
    return ProtocolReport(
        lhs_total=lhs,
        lhs_bob1=lhs1,
        lhs_bob2=lhs2,
        rhs_term1=2.0 * r1.receiver_bound,
        rhs_term2=r2.receiver_bound,
        combined_bound=combine_distances(r1.receiver_bound, r2.receiver_bound),
        receiver1=r1,
        receiver2=r2,
        transpose_error=transpose_error,
        final_state=final,
    )


def config_from_dict(spec: dict, channel: BroadcastChannel) -> OneShotConfig:
    dims = spec.get("dims", {})
    encoder = spec.get("encoder", "wiring")
    enc_op = None
    if isinstance(encoder, dict):
        from qbc.channels import _complex_matrix

        a_prime = channel.input_dim
        enc_op = IsometryOp(
            _complex_matrix(encoder["matrix"]),
            FactorLayout.of(("A1", dims.get("A1", 1)), ("At1", dims.get("At1", 1)), ("A2", dims.get("A2", 1)), ("At2", dims.get("At2", 1))),
            FactorLayout.of(("A'", a_prime), ("Ahat", dims.get("Ahat", 1))),
        )
    elif encoder != "wiring":
        raise ValueError(f"unknown encoder {encoder!r}; use 'wiring' or {{'matrix': ...}}")
    return OneShotConfig(
        channel=channel,
        a1=int(dims.get("A1", 1)),
        at1=int(dims.get("At1", 1)),
        a2=int(dims.get("A2", 1)),
        at2=int(dims.get("At2", 1)),
        ahat=int(dims.get("Ahat", 1)),
        encoder=enc_op,
        candidates=int(spec.get("candidates", 16)),
        seed=int(spec.get("seed", 0)),
    )
