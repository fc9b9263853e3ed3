import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbc.entropic import (
    binary_entropy,
    coherent_information,
    conditional_mutual_information,
    entropy,
    marginal_spectrum,
    multiparty_correlation,
    mutual_information,
    purity,
    shannon_entropy,
    von_neumann_entropy,
)
from qbc.errors import LayoutError
from qbc.haar import random_density, random_pure_state
from qbc.tensor import FactorLayout, basis_state, max_entangled, tensor_product

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def test_known_entropies():
    assert float(von_neumann_entropy(np.eye(4) / 4)) == pytest.approx(2.0)
    assert float(von_neumann_entropy(np.diag([1.0, 0.0]))) == pytest.approx(0.0)
    assert float(von_neumann_entropy(np.diag([0.75, 0.25]))) == pytest.approx(binary_entropy(0.75))
    # |+⟩⟨+| is pure even though it is not diagonal
    assert float(von_neumann_entropy(np.full((2, 2), 0.5))) == pytest.approx(0.0, abs=1e-12)


def test_binary_entropy_against_formula():
    for p in [0.1, 0.3, 0.5]:
        assert binary_entropy(p) == pytest.approx(-p * math.log2(p) - (1 - p) * math.log2(1 - p))
    assert binary_entropy(0.0) == 0.0


def test_shannon_entropy_ignores_zeros():
    assert shannon_entropy([0.5, 0.5, 0.0]) == pytest.approx(1.0)


def test_entropy_report_records_clipped_mass():
    report = von_neumann_entropy(np.diag([1.0 + 1e-13, -1e-13]))
    assert report.clipped_mass >= 0
    assert float(report) == pytest.approx(0.0, abs=1e-9)


def test_bell_pair_quantities():
    phi = max_entangled(2, ("A", "B"))
    assert mutual_information(phi, "A", "B") == pytest.approx(2.0)
    assert coherent_information(phi, "A", "B") == pytest.approx(1.0)
    assert entropy(phi, ()) == 0.0


def test_product_state_has_no_correlation(rng):
    a = random_density(FactorLayout.of(("A", 2)), rng)
    b = random_density(FactorLayout.of(("B", 3)), rng)
    assert mutual_information(tensor_product(a, b), "A", "B") == pytest.approx(0.0, abs=1e-10)


def test_overlapping_labels_rejected():
    phi = max_entangled(2, ("A", "B"))
    with pytest.raises(LayoutError):
        mutual_information(phi, "A", ("A", "B"))


def test_pure_spectrum_uses_smaller_side(rng):
    psi = random_pure_state(FactorLayout.of(("A", 2), ("B", 8)), rng)
    assert marginal_spectrum(psi, "B").shape[0] == 2
    assert entropy(psi, "B") == pytest.approx(entropy(psi.density(), "B"), abs=1e-10)


def test_purity_and_multiparty_correlation():
    assert purity(np.eye(2) / 2) == pytest.approx(0.5)
    ghz = np.zeros(8)
    ghz[0] = ghz[7] = 1 / math.sqrt(2)
    from qbc.tensor import PureState

    state = PureState(ghz, FactorLayout.of(("A", 2), ("B", 2), ("C", 2)))
    # J = H(A) + H(B) + H(C) − H(ABC) = 3
    assert multiparty_correlation(state, ["A", "B", "C"]) == pytest.approx(3.0)
    assert multiparty_correlation(state, ["A"]) == pytest.approx(0.0)


@given(seeds)
@settings(max_examples=30, deadline=None)
def test_strong_subadditivity(seed):
    rng = np.random.default_rng(seed)
    psi = random_pure_state(FactorLayout.of(("A", 2), ("B", 2), ("C", 2), ("D", 2)), rng)
    assert conditional_mutual_information(psi, "A", "C", "B") >= -1e-9


@given(seeds)
@settings(max_examples=30, deadline=None)
def test_pure_state_complementarity(seed):
    rng = np.random.default_rng(seed)
    psi = random_pure_state(FactorLayout.of(("A", 2), ("B", 3), ("C", 2)), rng)
    assert entropy(psi, ("A", "B")) == pytest.approx(entropy(psi, "C"), abs=1e-9)
    # I(A⟩B) = −H(A|B) and for pure ABC equals H(B) − H(C)
    assert coherent_information(psi, "A", "B") == pytest.approx(entropy(psi, "B") - entropy(psi, "C"), abs=1e-9)


def test_basis_state_entropy_zero():
    psi = basis_state(FactorLayout.of(("A", 3), ("B", 2)), 4)
    assert entropy(psi, "A") == pytest.approx(0.0, abs=1e-12)
