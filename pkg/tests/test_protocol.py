import numpy as np
import pytest

from qbc.channels import builtin
from qbc.errors import InfeasibleDimensionError, LayoutError
from qbc.haar import haar_unitary, trial_rng
from qbc.protocol import (
    OneShotConfig,
    best_product_distance,
    build_decoder,
    combine_distances,
    config_from_dict,
    prepare_phi,
    run_one_shot,
    transpose_trick,
    wiring_encoder,
)
from qbc.tensor import FactorLayout, basis_state, max_entangled, tensor_product


def test_combine_distances():
    assert combine_distances(0.1, 0.3) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        combine_distances(-1, 0)


def test_prepare_phi_layout():
    phi = prepare_phi(2, 1, 3, 2)
    assert phi.labels == ("R1", "A1", "At1", "Bt1", "R2", "A2", "At2", "Bt2")
    assert phi.layout.dim == 4 * 1 * 9 * 4


def test_transpose_trick_requires_entanglement():
    state = tensor_product(basis_state(FactorLayout.of(("R", 2)), 0), basis_state(FactorLayout.of(("A", 2)), 0))
    with pytest.raises(ValueError):
        transpose_trick(haar_unitary(2, trial_rng(0)), state, ("R",), ("A",))


def test_wiring_encoder_is_isometry_and_checks_room():
    enc = wiring_encoder(2, 1, 2, 1, 4, 1)
    np.testing.assert_allclose(enc.matrix, np.eye(4))
    with pytest.raises(InfeasibleDimensionError):
        wiring_encoder(2, 2, 2, 2, 2, 2)


def test_best_product_distance():
    phi = tensor_product(max_entangled(2, ("R", "B")), basis_state(FactorLayout.of(("X", 3)), 1))
    assert best_product_distance(phi, [("R", "B")]) == pytest.approx(0.0, abs=1e-12)
    prod = tensor_product(basis_state(FactorLayout.of(("R", 2)), 0), basis_state(FactorLayout.of(("B", 2)), 0))
    # overlap with Φ is 1/2, so the distance is 2·√(1/2)
    assert best_product_distance(prod, [("R", "B")]) == pytest.approx(np.sqrt(2))


def test_decoder_infeasible_when_receiver_too_small():
    state = tensor_product(max_entangled(4, ("R1", "X")), basis_state(FactorLayout.of(("B1", 2)), 0))
    with pytest.raises(InfeasibleDimensionError):
        build_decoder(state, "R1", ("B1",), "Bbar1", "Bhat1")


def test_config_validation():
    with pytest.raises(LayoutError):
        OneShotConfig(builtin("swap_router", receivers=3), 2, 1, 2, 1)
    with pytest.raises(InfeasibleDimensionError):
        OneShotConfig(builtin("ideal_to_b1"), 2, 2, 2, 1, ahat=1)


def test_ideal_channel_is_exact():
    report = run_one_shot(OneShotConfig(builtin("ideal_to_b1"), 2, 1, 1, 1))
    assert report.lhs_total < 1e-8
    assert report.transpose_error < 1e-12


@pytest.mark.parametrize(
    "name,dims",
    [
        ("dephasing_broadcast", dict(a1=2, at1=2, a2=2, at2=1, ahat=4)),
        ("depolarizing_broadcast", dict(a1=2, at1=2, a2=1, at2=2, ahat=4)),
        ("erasure_flag", dict(a1=2, at1=1, a2=2, at2=2, ahat=4)),
    ],
)
def test_noisy_channels_respect_bounds(name, dims):
    report = run_one_shot(OneShotConfig(builtin(name), candidates=8, seed=3, **dims))
    for r in (report.receiver1, report.receiver2):
        # Uhlmann step: receiver error at most 2√ε of its own decoupling error
        assert r.lhs <= r.uhlmann_bound + 1e-9
    if report.bounds_met:
        assert report.lhs_total <= report.combined_bound + 1e-6
    assert report.lhs_total <= 2.0 + 1e-12
    assert report.transpose_error < 1e-10
    assert report.to_dict()["receiver1"]["decoder_out"][0][0] == "Bbar1"


def test_rhs_term1_monotone_in_shared_entanglement():
    for name in ["swap_router", "dephasing_broadcast", "depolarizing_broadcast"]:
        ch = builtin(name)
        ahat = -(-16 // ch.input_dim)
        values = [
            run_one_shot(OneShotConfig(ch, a1=2, at1=e, a2=2, at2=1, ahat=ahat, candidates=2)).rhs_term1 for e in (1, 2, 4)
        ]
        assert all(b <= a + 1e-12 for a, b in zip(values, values[1:])), (name, values)


def test_config_from_dict_and_seed():
    spec = {"dims": {"A1": 2, "A2": 2}, "seed": 4, "candidates": 4}
    cfg = config_from_dict(spec, builtin("swap_router"))
    a = run_one_shot(cfg).to_dict()
    b = run_one_shot(config_from_dict(spec, builtin("swap_router"))).to_dict()
    assert a["receiver1"]["unitary"] == b["receiver1"]["unitary"]
    with pytest.raises(ValueError):
        config_from_dict({"encoder": "magic"}, builtin("swap_router"))
