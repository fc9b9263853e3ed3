"""Acceptance gate: one test group per criterion, each at its stated tolerance.

Run ``pytest tests/test_acceptance.py`` for the per-criterion PASS/FAIL table
printed at the end of the session.
"""

import math
import sys
import time

import numpy as np
import pytest

from qbc import cli
from qbc.channels import builtin, classical_embedded
from qbc.entropic import entropy, mutual_information
from qbc.fqsw import SplitSpec, monte_carlo_decoupling
from qbc.haar import haar_unitary, random_density, random_pure_state, trial_rng
from qbc.protocol import OneShotConfig, combine_distances, prepare_phi, run_one_shot, transpose_trick
from qbc.regions import (
    classical_input,
    entanglement_rates,
    father_rates,
    marton_rates,
    product_input,
    regularized_rates,
    unassisted_rates,
)
from qbc.tensor import (
    FactorLayout,
    IsometryOp,
    basis_state,
    conjugate,
    max_entangled,
    merge,
    partial_trace,
    permute,
    purify,
    tensor_product,
    trace_distance,
    trace_norm,
    uhlmann_isometry,
)
from qbc.typicality import eps_schedule, gentle_measurement_check, typical_set

ROOT_SEED = 1729


# 1 ---------------------------------------------------------------------------


def _decoupling_configs():
    rng = trial_rng(ROOT_SEED, 1)
    configs = []
    for k in range(20):
        d_a = int(rng.choice([4, 8, 16]))
        d_r = int(rng.choice([1, 2, 4]))
        d_s = int(rng.choice([1, 2, 4]))
        divisors = [d for d in range(1, d_a + 1) if d_a % d == 0]
        d_hat = int(rng.choice(divisors))
        configs.append((k, d_a, d_r, d_s, d_hat))
    return configs


@pytest.mark.acceptance(1)
def test_decoupling_inequality_holds_on_random_configs():
    start = time.perf_counter()
    failures = []
    for k, d_a, d_r, d_s, d_hat in _decoupling_configs():
        layout = FactorLayout.of(("A", d_a), ("R", d_r), ("S", d_s))
        psi = random_pure_state(layout, trial_rng(ROOT_SEED, 1, k))
        split = SplitSpec("A", d_a // d_hat, d_hat)
        report = monte_carlo_decoupling(psi, split, trials=500, seed=ROOT_SEED + k, reference=("R",))
        if not report.mean_sq_distance <= report.bound * 1.05 + 3 * report.sem:
            failures.append((k, d_a, d_r, d_s, d_hat, report.mean_sq_distance, report.bound))
    elapsed = time.perf_counter() - start
    assert not failures, failures
    assert elapsed <= 120.0


# 2 ---------------------------------------------------------------------------


@pytest.mark.acceptance(2)
def test_transpose_trick_on_four_dim_cut():
    phi = max_entangled(4, ("R", "A"))
    layout_r = FactorLayout.of(("R", 4))
    worst = 0.0
    for i in range(100):
        u = haar_unitary(4, trial_rng(ROOT_SEED, 2, i))
        near = conjugate(IsometryOp.unitary(u, layout_r), phi)
        far = transpose_trick(u, phi, ("R",), ("A",))
        worst = max(worst, float(np.linalg.norm(near.amplitudes - permute(far, near.labels).amplitudes)))
    assert worst <= 1e-10


@pytest.mark.acceptance(2)
def test_transpose_trick_on_composite_cut():
    phi = prepare_phi(2, 2, 1, 1)
    layout = FactorLayout.of(("R1", 2), ("Bt1", 2))
    worst = 0.0
    for i in range(100):
        u = haar_unitary(4, trial_rng(ROOT_SEED, 2, 1000 + i))
        near = conjugate(IsometryOp.unitary(u, layout), phi)
        far = transpose_trick(u, phi, ("R1", "Bt1"), ("A1", "At1"))
        worst = max(worst, float(np.linalg.norm(near.amplitudes - permute(far, near.labels).amplitudes)))
    assert worst <= 1e-10


# 3 ---------------------------------------------------------------------------


def _uhlmann_pair(i):
    rng = trial_rng(ROOT_SEED, 3, i)
    d = int(rng.choice([2, 3, 4]))
    layout = FactorLayout.of(("A", d))
    rho = random_density(layout, rng)
    tau = random_density(layout, rng)
    gap = trace_norm(rho.matrix - tau.matrix)
    target = 10 ** rng.uniform(-4, math.log10(0.2))
    t = min(1.0, target / gap)
    sigma = type(rho)((1 - t) * rho.matrix + t * tau.matrix, layout)
    psi = purify(rho, "B", ref_dim=d + int(rng.integers(0, 2)))
    phi = purify(sigma, "B'")
    v = haar_unitary(d, rng)
    phi = conjugate(IsometryOp.unitary(v, FactorLayout.of(("B'", d))), phi)
    return psi, phi, trace_norm(rho.matrix - sigma.matrix)


@pytest.mark.acceptance(3)
def test_uhlmann_distance_within_two_sqrt_eps():
    eps_seen = []
    for i in range(100):
        psi, phi, eps = _uhlmann_pair(i)
        eps_seen.append(eps)
        u = uhlmann_isometry(psi, phi, ("A",))
        moved = conjugate(u, phi)
        dist = trace_distance(psi, moved)
        assert dist <= 2 * math.sqrt(eps) + 1e-8, (i, eps, dist)
    assert min(eps_seen) >= 1e-4 * (1 - 1e-6) and max(eps_seen) <= 0.2 * (1 + 1e-6)


# 4 ---------------------------------------------------------------------------


@pytest.mark.acceptance(4)
def test_one_shot_protocol_sanity():
    start = time.perf_counter()
    router = run_one_shot(OneShotConfig(builtin("swap_router"), a1=2, at1=1, a2=2, at2=1, candidates=16, seed=ROOT_SEED))
    assert router.lhs_total <= router.combined_bound
    assert router.lhs_total < 1e-6
    ideal = run_one_shot(OneShotConfig(builtin("ideal_to_b1"), a1=2, at1=1, a2=1, at2=1, candidates=16, seed=ROOT_SEED))
    assert ideal.lhs_total < 1e-8
    assert time.perf_counter() - start <= 30.0


# 5 ---------------------------------------------------------------------------


def _lemma_triple(i):
    rng = trial_rng(ROOT_SEED, 5, i)
    dims = [int(x) for x in rng.choice([2, 3], size=3)]
    la, lb, lc = (FactorLayout.of((n, d)) for n, d in zip("ABC", dims))
    sigma_a = random_density(la, rng)
    sigma_bc = random_density(lb + lc, rng)
    tau_ab = random_density(la + lb, rng)
    tau_c = random_density(lc, rng)
    noise = random_density(la + lb + lc, rng)
    t1, t2, t3 = rng.dirichlet([1.0, 1.0, 0.3]) * rng.uniform(0.0, 1.0)
    base = tensor_product(tensor_product(sigma_a, partial_trace(tau_ab, "B")), tau_c).matrix
    rho = (1 - t1 - t2 - t3) * base
    rho = rho + t1 * tensor_product(sigma_a, sigma_bc).matrix + t2 * tensor_product(tau_ab, tau_c).matrix + t3 * noise.matrix
    return rho, sigma_a, sigma_bc, tau_ab, tau_c


@pytest.mark.acceptance(5)
def test_triangle_lemma_on_constructed_triples():
    for i in range(200):
        rho, sigma_a, sigma_bc, tau_ab, tau_c = _lemma_triple(i)
        eps1 = trace_norm(rho - tensor_product(sigma_a, sigma_bc).matrix)
        eps2 = trace_norm(rho - tensor_product(tau_ab, tau_c).matrix)
        target = tensor_product(tensor_product(sigma_a, partial_trace(tau_ab, "B")), tau_c).matrix
        lhs = trace_norm(rho - target)
        assert lhs <= combine_distances(eps1, eps2) + 1e-9, (i, lhs, eps1, eps2)


# 6 ---------------------------------------------------------------------------


@pytest.mark.acceptance(6)
def test_assisted_rates_on_ideal_and_router():
    phi = tensor_product(max_entangled(2, ("A1", "A'")), basis_state(FactorLayout.of(("A2", 1))))
    rates = father_rates(phi, builtin("ideal_to_b1"))
    assert abs(rates.triple.q1 - 1.0) <= 1e-9

    pairs = tensor_product(max_entangled(2, ("A1", "X1")), max_entangled(2, ("A2", "X2")))
    phi = merge(pairs, ("X1", "X2"), "A'")
    rates = father_rates(phi, builtin("swap_router"))
    assert abs(rates.triple.sum - 2.0) <= 1e-9
    assert abs(rates.mutual_a1_a2) <= 1e-9


# 7 ---------------------------------------------------------------------------


def _marton_channels():
    rng = trial_rng(ROOT_SEED, 7)
    shapes = [(2, 2, 2), (3, 2, 2), (2, 3, 2), (3, 3, 3), (3, 2, 3)]
    chans = []
    for k, shape in enumerate(shapes):
        p = rng.dirichlet(np.full(shape[1] * shape[2], 0.6), size=shape[0]).reshape(shape)
        if k == 0:
            p = np.zeros(shape)
            p[0, 0, 1] = p[1, 1, 0] = 1.0
        chans.append(p)
    return chans


@pytest.mark.acceptance(7)
@pytest.mark.parametrize("k", range(5))
def test_half_marton_correspondence(k):
    p_y = _marton_channels()[k]
    channel = classical_embedded(p_y)
    nx = p_y.shape[0]
    rng = trial_rng(ROOT_SEED, 7, k)
    for j in range(10):
        u1, u2 = (int(v) for v in rng.choice([2, 3], size=2))
        joint = rng.dirichlet(np.full(u1 * u2 * nx, 0.5)).reshape(u1, u2, nx)
        p_u = joint.sum(axis=2)
        quantum = father_rates(classical_input(joint), channel).triple
        classical = marton_rates(p_y, p_u, joint / p_u[:, :, None])
        np.testing.assert_allclose(quantum.as_tuple(), classical.scaled(0.5).as_tuple(), rtol=0, atol=1e-9)


# 8 ---------------------------------------------------------------------------


ZOO = ["ideal_to_b1", "swap_router", "dephasing_broadcast", "erasure_flag", "depolarizing_broadcast"]


def _zoo_channel(name):
    if name == "classical_embedded":
        return classical_embedded(_marton_channels()[1])
    return builtin(name)


def _random_input(channel, rng, a=(2, 2), d=2):
    layout = FactorLayout.of(("A1", a[0]), ("A2", a[1]), ("A'", channel.input_dim), ("D", d))
    return random_pure_state(layout, rng)


@pytest.mark.acceptance(8)
@pytest.mark.parametrize("name", ZOO + ["classical_embedded"])
def test_unassisted_identity(name):
    channel = _zoo_channel(name)
    for i in range(50):
        phi = _random_input(channel, trial_rng(ROOT_SEED, 8, i))
        assisted = father_rates(phi, channel).triple
        e1, e2 = entanglement_rates(phi, channel)
        bare = unassisted_rates(phi, channel)
        assert abs(bare.q1 - (assisted.q1 - e1)) <= 1e-9
        assert abs(bare.q2 - (assisted.q2 - e2)) <= 1e-9


# 9 ---------------------------------------------------------------------------


@pytest.mark.acceptance(9)
@pytest.mark.parametrize("mode", ["assisted", "unassisted"])
def test_regularized_additivity_on_product_inputs(mode):
    for i in range(20):
        channel = _zoo_channel(ZOO[i % len(ZOO)])
        phi = _random_input(channel, trial_rng(ROOT_SEED, 9, i))
        one = regularized_rates(phi, channel, 1, mode)
        two = regularized_rates(product_input([phi, phi]), channel, 2, mode)
        np.testing.assert_allclose(two.as_tuple(), one.as_tuple(), rtol=0, atol=1e-9)


# 10 --------------------------------------------------------------------------


@pytest.mark.acceptance(10)
@pytest.mark.parametrize("p", [0.7, 0.8, 0.9])
def test_typical_set_properties(p):
    for n in range(1, 21):
        eps = eps_schedule(n)
        report = typical_set([p, 1 - p], n, eps)
        assert report.size <= report.dim_bound
        if n >= 12:
            assert report.probability_mass >= 1 - eps, (n, report.probability_mass)
        gentle = gentle_measurement_check(np.diag([p, 1 - p]), n, eps)
        assert gentle.distance <= 2 * math.sqrt(1 - gentle.mass) + 1e-6


# 11 --------------------------------------------------------------------------


@pytest.mark.acceptance(11)
def test_entropy_property_suite():
    for i in range(200):
        rng = trial_rng(ROOT_SEED, 11, i)
        dims = [int(x) for x in rng.choice([2, 3, 4], size=3)]
        psi = random_pure_state(FactorLayout.of(*zip("ABC", dims)), rng)
        h_a, h_b = entropy(psi, "A"), entropy(psi, "B")
        h_ab, h_bc = entropy(psi, ("A", "B")), entropy(psi, ("B", "C"))
        assert abs(h_a - h_bc) <= 1e-9
        assert h_ab <= h_a + h_b + 1e-9
        assert abs(h_a - h_b) <= h_ab + 1e-9
        assert mutual_information(psi, "A", "B") >= -1e-9


# 12 --------------------------------------------------------------------------


def _write_inputs(tmp):
    (tmp / "oneshot.json").write_text('{"channel": "builtin:swap_router", "dims": {"A1": 2, "A2": 2}, "candidates": 8, "seed": 5}')
    (tmp / "marton.json").write_text(
        '{"p_y_given_x": [[[0.9, 0.1], [0.0, 0.0]], [[0.0, 0.0], [0.2, 0.8]]],'
        ' "p_u": [[0.25, 0.25], [0.25, 0.25]],'
        ' "p_x_given_u": [[[1, 0], [0.5, 0.5]], [[0.5, 0.5], [0, 1]]],'
        ' "optimize": {"sweep": 3, "candidates": 16, "restarts": 1}}'
    )


CLI_RUNS = {
    "decouple-check": ["decouple-check", "--dims", "A=8,R=2,S=2", "--ahat", "2", "--trials", "40", "--seed", "11"],
    "one-shot-sim": ["one-shot-sim", "--config", "oneshot.json"],
    "region": ["region", "--channel", "builtin:ideal_to_b1", "--sweep", "3", "--restarts", "2", "--maxfev", "60", "--seed", "4"],
    "marton": ["marton", "--config", "marton.json", "--seed", "2"],
    "typical-demo": ["typical-demo", "--p", "0.8", "--n", "10"],
    "haar-test": ["haar-test", "--dim", "4", "--trials", "300", "--seed", "7"],
}


@pytest.mark.acceptance(12)
@pytest.mark.parametrize("command", sorted(CLI_RUNS))
def test_cli_determinism(command, tmp_path, monkeypatch):
    outputs = []
    for k, threads in enumerate(["1", "1", "3"]):
        run_dir = tmp_path / f"run{k}"
        run_dir.mkdir()
        _write_inputs(run_dir)
        monkeypatch.chdir(run_dir)
        code = cli.main(CLI_RUNS[command] + ["--threads", threads, "--out", "result.out"])
        assert code == 0
        outputs.append((run_dir / "result.out").read_bytes())
    assert outputs[0] == outputs[1] == outputs[2]


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
