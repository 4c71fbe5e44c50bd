import itertools
import json
import math

from hypothesis import given, strategies as st
import pytest

from blab.errors import ConfigError, ResourceError, TruncationError
from blab.fock import (FockVector, ModeSet, apply_A, degenerate_mode_set, expectation,
                       generic_mode_set, norm_series, operator, single_pair_mode_set, theta,
                       theta_op_apply, theta_sequence, vacuum, verify, xi)
from blab.fock.series import THETA_SAME_INDEX

N_MODES = 4


def _state(occ):
    return tuple((i, n) for i, n in enumerate(occ) if n)


vectors = st.dictionaries(
    st.tuples(*[st.integers(0, 2)] * N_MODES).map(_state),
    st.floats(-2.0, 2.0, allow_nan=False), max_size=8).map(lambda d: FockVector(d, n_max=8))


@given(vectors, vectors, st.integers(0, N_MODES - 1))
def test_creation_is_adjoint_to_annihilation(phi, psi, i):
    assert phi.create(i).inner(psi) == pytest.approx(phi.inner(psi.annihilate(i)), abs=1e-12)


@given(vectors, st.integers(0, N_MODES - 1), st.integers(0, N_MODES - 1))
def test_canonical_commutators(psi, i, j):
    lhs = psi.create(j).annihilate(i)
    rhs = psi.annihilate(i).create(j)
    diff = FockVector(lhs.amps).iadd(rhs, -1.0)
    if i == j:
        diff.iadd(psi, -1.0)
    assert all(abs(a) < 1e-12 for a in diff.amps.values())


@given(vectors, st.integers(0, N_MODES - 1))
def test_number_grading(psi, i):
    before = psi.particle_numbers()
    assert psi.create(i).particle_numbers() == [n + 1 for n in before]


def test_occupation_cap():
    v = vacuum(1).create(0)
    with pytest.raises(TruncationError):
        v.create(0)


@pytest.fixture(scope="module")
def generic():
    return generic_mode_set(0)


def test_cubic_operator_adds_three_particles(generic):
    x = xi(generic, 2)
    assert [c.particle_numbers() for c in x.components] == [[0], [3], [6]]


@given(st.integers(0, 7), st.integers(0, 2))
def test_theta_projector_is_idempotent(k, m):
    ms = generic_mode_set(1)
    pair = ms.pairs[k % len(ms.pairs)]
    v = xi(ms, m).total()
    once = theta_op_apply(ms, pair, v)
    assert theta_op_apply(ms, pair, once).amps == once.amps
    assert set(once.amps) <= set(v.amps)


def _tuples(ms, seq):
    return [(ms.vectors[r], ms.vectors[v]) for r, v, _ in seq]


@pytest.mark.parametrize("ms", [generic_mode_set(2), single_pair_mode_set(),
                                degenerate_mode_set("double"), degenerate_mode_set("shared")],
                         ids=lambda m: m.name)
def test_theta_matches_projector_sequence(ms):
    for m in range(4):
        for seq in itertools.product(ms.pairs, repeat=m):
            assert theta(_tuples(ms, seq), THETA_SAME_INDEX) == theta_sequence(ms, seq)


def test_distinct_index_convention_disagrees_on_coincidences():
    ms = degenerate_mode_set("double")
    bad = sum(theta(_tuples(ms, s), False) != theta_sequence(ms, s)
              for s in itertools.product(ms.pairs, repeat=3))
    assert bad > 0


def test_single_pair_by_hand():
    # four admissible pairs create two distinct triples, each with amplitude
    # (eta_r + eta_{r+v}) sigma / sqrt(N): ||A Omega||^2 = 2 (2 + 1)^2 3^2 / 4
    ms = single_pair_mode_set(eta=(2.0, 1.0), sigma=3.0, N=4.0)
    assert len(ms.pairs) == 4
    x = xi(ms, 1)
    assert x.norm2_by_order() == pytest.approx([1.0, 40.5], rel=1e-15)
    assert norm_series(ms, 1, by_order=True) == pytest.approx([1.0, 40.5], rel=1e-15)


def test_order_zero_is_the_vacuum(generic):
    x = xi(generic, 0)
    assert x.norm2() == 1.0
    for name in ("EC", "EH1", "ES2", "EM3"):
        assert expectation(operator(name, generic), x) == 0.0


def test_identities_hold_at_order_two(generic):
    rep = verify(generic, 2)
    assert rep["passed"], {k: v["rel_gap"] for k, v in rep["identities"].items()}
    assert all(r["other"] == 0 for k, v in rep["identities"].items() if k != "norm"
               for r in v["orders"])


def test_dropping_restrictions_breaks_identities():
    rep = verify(generic_mode_set(2), 2, restrict=False)
    assert not rep["passed"]
    assert rep["identities"]["norm"]["rel_gap"] > 1e-3


@pytest.mark.parametrize("kind", ["double", "shared"])
def test_degenerate_sets_are_reported(kind):
    rep = verify(degenerate_mode_set(kind), 2)
    for name, v in rep["identities"].items():
        assert {"matrix", "series", "abs_gap", "rel_gap", "passed"} <= set(v)
    # observed: the restrictions also absorb these coincidences
    assert rep["passed"]


def test_mode_set_json_roundtrip(tmp_path, generic):
    path = tmp_path / "modes.json"
    generic.to_json(path)
    back = ModeSet.from_json(path)
    assert back.to_dict() == generic.to_dict()
    assert back.pairs == generic.pairs
    assert verify(back, 1)["identities"]["norm"]["matrix"] == verify(generic, 1)["identities"]["norm"]["matrix"]


def test_mode_set_validation(tmp_path):
    with pytest.raises(ConfigError):
        ModeSet([(1, 0, 0), (1, 0, 0)], ["S", "S"], {}, {0: 0.1, 1: 0.1}, {0: 1.0, 1: 1.0})
    with pytest.raises(ConfigError):
        ModeSet([(0, 0, 0)], ["S"], {}, {0: 0.1}, {0: 1.0})
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"modes": [{"vector": [1, 0, 0]}]}))
    with pytest.raises(ConfigError):
        ModeSet.from_json(bad)


def test_basis_cap(generic):
    with pytest.raises(ResourceError):
        xi(generic, 2, max_states=1)


def test_cubic_amplitudes_on_the_vacuum(generic):
    one = apply_A(generic, vacuum(8))
    expect = {}
    for pair in generic.pairs:
        r, v, _ = pair
        state = tuple(sorted((i, 1) for i in generic.created(pair)))
        expect[state] = expect.get(state, 0.0) + generic.eta[r] * generic.sigma[v] / math.sqrt(generic.N)
    assert set(one.amps) == set(expect)
    for k, a in expect.items():
        assert one.amps[k] == pytest.approx(a, rel=1e-14)
