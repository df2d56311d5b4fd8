import json
from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from qrwlab.core import (
    FIXTURES,
    JUMP_MAPS,
    UCOIN_RAW,
    Polytope,
    SpecError,
    WalkSpec,
    fixture,
    hadamard_coin,
    jump_polytope,
    parse_walk_spec,
    render_walk_spec,
    unitarity_defect,
)

WALK_FIXTURES = [f"{c}-{j}" for c in ("hadamard", "ucoin") for j in JUMP_MAPS]


def doc(d, c, coin, jumps):
    coin = np.asarray(coin, dtype=complex)
    return json.dumps({"d": d, "c": c, "coin_re": coin.real.tolist(),
                       "coin_im": coin.imag.tolist(), "jumps": jumps})


def test_parse_hadamard_j1():
    spec = parse_walk_spec(doc(2, 4, hadamard_coin(4), [list(j) for j in JUMP_MAPS["j1"]]))
    assert spec.d == 2 and spec.c == 4
    assert spec.jumps.tolist() == [[0, 0], [0, 1], [1, 0], [1, 1]]


def test_parse_identity_coin_1d():
    spec = parse_walk_spec(doc(1, 2, np.eye(2), [[0], [1]]))
    assert np.array_equal(spec.coin, np.eye(2))


def test_parse_rejects_scaled_row():
    coin = np.eye(2)
    coin[0] *= 2
    with pytest.raises(SpecError, match="not unitary"):
        parse_walk_spec(doc(1, 2, coin, [[0], [1]]))


@pytest.mark.parametrize("mutate, match", [
    (lambda d: d.update(extra=1), "unknown"),
    (lambda d: d.pop("jumps"), "missing"),
    (lambda d: d.update(jumps=[[0], [1, 2]]), "coordinates"),
    (lambda d: d.update(jumps=[[0], [0.5]]), "integers"),
    (lambda d: d.update(c=3), "3x3"),
    (lambda d: d.update(jumps=[[0], [0]]), "span"),
])
def test_parse_errors(mutate, match):
    d = json.loads(doc(1, 2, np.eye(2), [[0], [1]]))
    mutate(d)
    with pytest.raises(SpecError, match=match):
        parse_walk_spec(json.dumps(d))


def test_parse_malformed_json():
    with pytest.raises(SpecError, match="malformed"):
        parse_walk_spec("{not json")


def test_affine_span_is_exact_and_not_linear_span():
    # three collinear points in the plane do not span it affinely
    with pytest.raises(SpecError, match="span"):
        WalkSpec(2, 3, np.eye(3), [[0, 0], [1, 1], [3, 3]])
    # linearly dependent but affinely spanning
    WalkSpec(2, 3, np.eye(3), [[1, 0], [2, 0], [1, 1]])


def test_hadamard_coin_values():
    expected = 0.5 * np.array([[1, -1, -1, -1], [-1, 1, -1, -1], [-1, -1, 1, -1], [-1, -1, -1, 1]])
    np.testing.assert_array_equal(hadamard_coin(4), expected)
    np.testing.assert_array_equal(hadamard_coin(1), [[-1]])
    np.testing.assert_array_equal(hadamard_coin(2), [[0, -1], [-1, 0]])
    for c in range(1, 9):
        assert unitarity_defect(hadamard_coin(c)) <= 1e-12
    with pytest.raises(SpecError):
        hadamard_coin(0)


def test_fixtures():
    spec = fixture("hadamard-j1")
    np.testing.assert_array_equal(spec.coin, hadamard_coin(4))
    np.testing.assert_array_equal(spec.jumps, JUMP_MAPS["j1"])
    spec = fixture("ucoin-j2")
    assert spec.jumps.tolist() == [[0, 0], [2, 1], [1, 2], [1, 1]]
    assert spec.raw_coin is not None
    np.testing.assert_array_equal(spec.raw_coin, UCOIN_RAW)
    assert np.max(np.abs(spec.coin - UCOIN_RAW)) < 1e-6
    with pytest.raises(SpecError):
        fixture("nosuch")


@pytest.mark.parametrize("name", WALK_FIXTURES)
def test_fixture_unitarity(name):
    spec = fixture(name)
    raw = spec.raw_coin if spec.raw_coin is not None else spec.coin
    assert unitarity_defect(raw) <= 1e-6
    assert unitarity_defect(spec.coin) <= 1e-12


def test_spec_is_immutable():
    spec = fixture("hadamard-j1")
    with pytest.raises(ValueError):
        spec.coin[0, 0] = 3
    with pytest.raises(Exception):
        spec.d = 3


@pytest.mark.parametrize("name", list(FIXTURES))
def test_render_parse_roundtrip(name):
    spec = fixture(name)
    again = parse_walk_spec(render_walk_spec(spec), require_span=spec.require_span)
    assert again == spec


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_roundtrip_random_specs(c, d, seed):
    rng = np.random.default_rng(seed)
    from qrwlab.haar import sample_haar_unitary
    coin = sample_haar_unitary(c, rng)
    jumps = rng.integers(-3, 4, size=(c, d))
    spec = WalkSpec(d, c, coin, jumps, require_span=False)
    assert parse_walk_spec(render_walk_spec(spec), require_span=False) == spec


# -- polytope ---------------------------------------------------------------

def hull_vertices_bruteforce(points):
    """2-d hull vertices by exact half-plane tests over all point pairs."""
    pts = [tuple(Fraction(x) for x in p) for p in points]
    verts = set()
    for a, b in combinations(set(pts), 2):
        side = [(b[0] - a[0]) * (q[1] - a[1]) - (b[1] - a[1]) * (q[0] - a[0]) for q in pts]
        if all(s >= 0 for s in side) or all(s <= 0 for s in side):
            # a, b span a supporting line; keep the extreme points on it
            on = sorted(q for q, s in zip(pts, side) if s == 0)
            verts.update({on[0], on[-1]})
    return verts


def test_polytope_square_and_segment():
    P = jump_polytope(fixture("hadamard-j1"))
    np.testing.assert_array_equal(P.lo, [0, 0])
    np.testing.assert_array_equal(P.hi, [1, 1])
    assert P.contains([0.5, 0.5]) and P.contains([1, 1]) and not P.contains([1.1, 0.5])
    seg = Polytope([[0], [1]])
    assert seg.contains([0.3]) and not seg.contains([1.01])


def test_polytope_triangle_j2():
    P = jump_polytope(fixture("hadamard-j2"))
    brute = hull_vertices_bruteforce(JUMP_MAPS["j2"])
    assert brute == {(0, 0), (2, 1), (1, 2)}
    assert {tuple(int(x) for x in v) for v in P.vertices} == brute
    assert P.contains([1, 1])


def test_polytope_degenerate():
    point = Polytope([[1, 0]])
    assert point.contains([1, 0]) and not point.contains([1, 1e-3])
    line = Polytope([[0, 0], [2, 2]])
    assert line.contains([1, 1]) and not line.contains([1, 1.1]) and not line.contains([3, 3])


def lp_member(points, q, tol=1e-9):
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    res = linprog(np.zeros(n), A_eq=np.vstack([pts.T, np.ones(n)]), b_eq=np.append(q, 1.0),
                  bounds=[(0, None)] * n, method="highs")
    return res.status == 0


@pytest.mark.parametrize("name", WALK_FIXTURES[:4])
def test_polytope_membership_matches_lp(name):
    spec = fixture(name)
    P = jump_polytope(spec)
    rng = np.random.default_rng(3)
    q = rng.uniform(P.lo - 0.5, P.hi + 0.5, size=(1000, 2))
    inside = P.contains(q, tol=1e-12)
    # skip points within 1e-7 of the boundary where the two tolerances disagree
    margin = P.contains(q, tol=1e-7) != P.contains(q, tol=-1e-7)
    lp = np.array([lp_member(spec.jumps, x) for x in q])
    assert np.array_equal(inside[~margin], lp[~margin])


@settings(max_examples=30, deadline=None)
@given(st.permutations(list(range(4))))
def test_membership_invariant_under_vertex_order(perm):
    pts = np.array(JUMP_MAPS["j4"])
    q = np.random.default_rng(0).uniform(-0.5, 2.5, size=(200, 2))
    a = Polytope(pts).contains(q)
    b = Polytope(pts[list(perm)]).contains(q)
    assert np.array_equal(a, b)
