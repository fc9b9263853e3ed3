import json

import numpy as np
import pytest

from qbc.channels import (
    apply,
    builtin,
    builtin_names,
    channel_from_dict,
    channel_to_dict,
    classical_embedded,
    dump_channel,
    from_kraus,
    load_channel,
    output_labels,
    parse_channel_ref,
)
from qbc.entropic import entropy
from qbc.errors import LayoutError
from qbc.haar import random_density
from qbc.tensor import FactorLayout, basis_state, max_entangled, partial_trace


@pytest.mark.parametrize("name", ["ideal_to_b1", "swap_router", "dephasing_broadcast", "erasure_flag", "depolarizing_broadcast"])
def test_builtins_are_isometries(name):
    ch = builtin(name)
    v = ch.isometry.matrix
    np.testing.assert_allclose(v.conj().T @ v, np.eye(ch.input_dim), atol=1e-12)
    assert ch.output_layout.labels[-1] == "E"
    assert ch.receivers == 2


def test_kraus_slices_reproduce_action(rng):
    ch = builtin("erasure_flag", p=0.3)
    rho = random_density(FactorLayout.of(("A'", 2)), rng).matrix
    via_kraus = sum(k @ rho @ k.conj().T for k in ch.kraus())
    np.testing.assert_allclose(via_kraus, ch.action(rho), atol=1e-12)


def test_depolarizing_output_to_b1(rng):
    p = 0.25
    ch = builtin("depolarizing_broadcast", p=p)
    rho = random_density(FactorLayout.of(("A'", 2)), rng)
    out = partial_trace(apply(ch, rho), "B1").matrix
    np.testing.assert_allclose(out, (1 - p) * rho.matrix + p * np.eye(2) / 2, atol=1e-12)


def test_erasure_flags():
    ch = builtin("erasure_flag", p=1.0)
    out = apply(ch, basis_state(FactorLayout.of(("A'", 2)), 0))
    b1 = partial_trace(out, "B1").matrix
    assert b1[2, 2].real == pytest.approx(1.0)


def test_classical_embedded_copies_symbols():
    p = np.zeros((2, 2, 2))
    p[0, 0, 0] = p[1, 1, 1] = 1.0
    ch = classical_embedded(p)
    out = apply(ch, max_entangled(2, ("A1", "A'")))
    # B1 holds a classical copy: H(A1 B1) = 1, not 0 as for a quantum channel
    assert entropy(out, ("A1", "B1")) == pytest.approx(1.0)


def test_classical_embedded_validates():
    with pytest.raises(ValueError):
        classical_embedded(np.full((2, 2, 2), 0.5))


def test_from_kraus_rejects_non_trace_preserving():
    with pytest.raises(ValueError):
        from_kraus([np.eye(2) * 0.5], [("B1", 2)])


def test_multi_copy_labels():
    ch = builtin("swap_router")
    assert output_labels(ch, 2)[0] == ("B1_1", "B1_2")
    state = basis_state(FactorLayout.of(("A'_1", 4), ("A'_2", 4)), 0)
    out = apply(ch, state, n_copies=2)
    assert set(out.labels) == {"B1_1", "B2_1", "E_1", "B1_2", "B2_2", "E_2"}


def test_apply_checks_input_dim():
    with pytest.raises(LayoutError):
        apply(builtin("swap_router"), max_entangled(2, ("A1", "A'")))


def test_json_round_trip(tmp_path):
    ch = builtin("depolarizing_broadcast")
    path = tmp_path / "ch.json"
    dump_channel(ch, path)
    back = load_channel(path)
    np.testing.assert_allclose(back.isometry.matrix, ch.isometry.matrix)
    assert back.receiver_labels == ch.receiver_labels


def test_kraus_json_spec():
    spec = {
        "input_dim": 2,
        "outputs": [{"label": "B1", "dim": 2}, {"label": "B2", "dim": 1}],
        "kraus": [[[[1, 0], [0, 0]], [[0, 0], [1, 0]]]],
    }
    ch = channel_from_dict(json.loads(json.dumps(spec)))
    assert ch.env_dim == 1
    assert channel_to_dict(ch)["input_dim"] == 2


def test_channel_refs():
    assert parse_channel_ref("builtin:erasure_flag:p=0.2").name.startswith("erasure")
    assert "swap_router" in builtin_names()
    with pytest.raises(ValueError):
        parse_channel_ref("builtin:nope")
