import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qrwlab.core import JUMP_MAPS, WalkSpec, fixture, unitarity_defect
from qrwlab.evolve import evolve, evolve_operator
from qrwlab.fourier import (
    AliasingError,
    amplitudes_via_dft,
    dump_symbol_powers,
    equivalence_report,
    matrix_power,
    matrix_power_iterated,
    min_grid,
    operator_via_dft,
    read_symbol_dump,
    symbol,
    symbol_powers,
    transfer_matrix,
)
from qrwlab.haar import sample_haar_unitary

WALK_FIXTURES = [f"{c}-{j}" for c in ("hadamard", "ucoin") for j in JUMP_MAPS]


def e(c, i):
    v = np.zeros(c, dtype=complex)
    v[i] = 1
    return v


def test_transfer_matrix_at_zero_is_coin():
    spec = fixture("ucoin-j2")
    np.testing.assert_array_equal(transfer_matrix(spec, [0, 0]), spec.coin)


def test_transfer_matrix_single_chirality():
    spec = WalkSpec(2, 1, [[1]], [[2, -1]], require_span=False)
    xi = np.array([0.3, 1.1])
    np.testing.assert_allclose(transfer_matrix(spec, xi), [[np.exp(1j * (0.6 - 1.1))]], atol=1e-15)


def test_transfer_matrix_hadamard_pi_pi():
    spec = fixture("hadamard-j1")
    m = transfer_matrix(spec, [np.pi, np.pi])
    phases = [np.exp(1j * np.pi * (a + b)) for a, b in JUMP_MAPS["j1"]]
    np.testing.assert_allclose(phases, [1, -1, -1, 1], atol=1e-15)
    np.testing.assert_allclose(m, np.diag([1, -1, -1, 1]) @ spec.coin, atol=1e-15)
    assert unitarity_defect(m) <= 1e-12


def test_dft_trivial():
    spec = fixture("ucoin-j1")
    u = np.ones(4) / 2
    s = amplitudes_via_dft(spec, u, 0, grid_n=3)
    np.testing.assert_allclose(s.amplitude((0, 0)), u, atol=1e-15)
    assert s.norm_sq() == pytest.approx(1, abs=1e-14)

    shift = WalkSpec(1, 1, [[1]], [[1]], require_span=False)
    s = amplitudes_via_dft(shift, [1], 5, grid_n=8)
    expected = np.zeros_like(s.amps)
    expected[0, s.window.index((5,))] = 1
    np.testing.assert_allclose(s.amps, expected, atol=1e-15)


def test_dft_matches_direct_hadamard():
    spec = fixture("hadamard-j1")
    a = amplitudes_via_dft(spec, e(4, 0), 32)
    b = evolve(spec, e(4, 0), 32)
    assert a.window == b.window
    assert np.max(np.abs(a.amps - b.amps)) <= 1e-9


def test_equivalence_report_values():
    shift = WalkSpec(2, 1, [[1]], [[1, 1]], require_span=False)
    assert equivalence_report(shift, [1], 17) <= 1e-12
    u = e(4, 2)
    assert equivalence_report(fixture("hadamard-j1"), u, 32) <= 1e-9
    assert equivalence_report(fixture("ucoin-j3"), u, 32) <= 1e-9
    # a grid larger than needed changes nothing
    assert equivalence_report(fixture("ucoin-j3"), u, 10, grid_n=40) <= 1e-9


def test_operator_via_dft_matches_direct():
    spec = fixture("ucoin-j4")
    w1, a = operator_via_dft(spec, 16)
    w2, b = evolve_operator(spec, 16)
    assert w1 == w2
    assert np.max(np.abs(a - b)) <= 1e-10


def test_aliasing_refused():
    spec = fixture("hadamard-j3")
    assert min_grid(spec, 10) == 21
    with pytest.raises(AliasingError):
        amplitudes_via_dft(spec, e(4, 0), 10, grid_n=20)
    amplitudes_via_dft(spec, e(4, 0), 10, grid_n=21)


@pytest.mark.parametrize("name", WALK_FIXTURES)
def test_symbol_spectrum_on_unit_circle(name):
    spec = fixture(name)
    xi = np.random.default_rng(11).uniform(0, 2 * np.pi, size=(1000, 2))
    vals = np.linalg.eigvals(symbol(spec, xi))
    assert np.max(np.abs(np.abs(vals) - 1)) <= 1e-10


@pytest.mark.parametrize("T", [1, 2, 7, 64, 255, 400])
def test_matrix_power_path_independence(T):
    spec = fixture("ucoin-j2")
    xi = np.random.default_rng(T).uniform(0, 2 * np.pi, size=(64, 2))
    m = symbol(spec, xi)
    assert np.max(np.abs(matrix_power(m, T) - matrix_power_iterated(m, T))) <= 1e-10


@pytest.mark.parametrize("name", ["hadamard-j2", "ucoin-j1"])
def test_parseval(name):
    spec = fixture(name)
    u = np.array([0.5, 0.5j, -0.5, 0.5])
    T = 12
    n = min_grid(spec, T)
    mt_u = symbol_powers(spec, T, n) @ u
    grid_avg = np.mean(np.sum(np.abs(mt_u) ** 2, axis=-1))
    site_sum = amplitudes_via_dft(spec, u, T).norm_sq()
    assert abs(grid_avg - 1) <= 1e-10
    assert abs(site_sum - 1) <= 1e-10


def test_symbol_dump_roundtrip(tmp_path):
    spec = fixture("ucoin-j1")
    path = tmp_path / "m.bin"
    dump_symbol_powers(path, spec, 3, 5)
    raw = path.read_bytes()
    assert raw.startswith(b"4 2 5 3\n")
    assert len(raw) == len(b"4 2 5 3\n") + 5 * 5 * 4 * 4 * 16
    c, d, n, T, mt = read_symbol_dump(path)
    assert (c, d, n, T) == (4, 2, 5, 3)
    np.testing.assert_array_equal(mt, symbol_powers(spec, 3, 5))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 2), st.integers(1, 4), st.integers(0, 9))
def test_dft_equals_direct_random(seed, d, c, T):
    rng = np.random.default_rng(seed)
    spec = WalkSpec(d, c, sample_haar_unitary(c, rng), rng.integers(-2, 3, size=(c, d)), require_span=False)
    u = sample_haar_unitary(c, rng)[:, 0]
    assert equivalence_report(spec, u, T) <= 1e-10
