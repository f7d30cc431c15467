import itertools

import numpy as np
import pytest
from scipy.optimize import linprog

from bellcast.expressions import builtin, evaluate
from bellcast.lp import lp_feasibility
from bellcast.polytopes import (
    ModelClass,
    UnsupportedModelError,
    bound,
    certificate_is_valid,
    enumerate_vertices,
    membership,
    nosignaling_boxes,
)
from bellcast.scenario import Behavior, no_signaling_report, validate
from bellcast.verify import random_expression, svetlichny_behavior

from conftest import brute_force_value

CHAIN = ("Local", "NSBL", "TOBL", "BL", "BC1")


def M(text):
    return ModelClass.parse(text)


# -- enumeration ------------------------------------------------------------------

def test_local_vertex_count():
    assert len(enumerate_vertices(M("Local"), 3)) == 64
    assert len(enumerate_vertices(M("Local"), 2)) == 16


def test_bc1_family_sizes_before_dedup():
    # three first-party families of 4 * 16 * 16 deterministic strategies
    assert len(enumerate_vertices(M("BC1"), 3, dedup=False)) == 3072
    for j in (1, 2, 3):
        assert len(enumerate_vertices(M(f"BC1[{j}]"), 3, dedup=False)) == 1024


# regression constants: distinct vertices after removing duplicates across families
@pytest.mark.parametrize("model,count", [("Local", 64), ("NSBL", 160), ("TOBL", 1216), ("BL", 2944), ("BC1", 2944)])
def test_distinct_vertex_counts(model, count):
    assert len(enumerate_vertices(M(model), 3)) == count


def test_oneway_two_party_count():
    assert len(enumerate_vertices(M("OneWay(1,2)"), 2)) == 64


@pytest.mark.parametrize("model", CHAIN)
def test_vertices_are_behaviors(model):
    vs = enumerate_vertices(M(model), 3)
    for i in range(0, len(vs), 97):
        assert validate(vs.behavior(i), 0.0).ok


def test_nosignaling_boxes_extremal():
    boxes = nosignaling_boxes()
    assert boxes.shape == (24, 4, 4)
    flat = boxes.reshape(24, -1)
    for k in range(24):
        b = Behavior(2, boxes[k])
        assert validate(b, 0.0).ok
        assert no_signaling_report(b, 0.0).is_no_signaling
        others = np.delete(flat, k, axis=0)
        A = np.vstack([others.T, np.ones(23)])
        rhs = np.append(flat[k], 1.0)
        assert not lp_feasibility(A, rhs).feasible
        assert linprog(np.zeros(23), A_eq=A, b_eq=rhs, bounds=(0, None), method="highs").status == 2


def test_nsbl_vertices_are_no_signaling_within_groups():
    vs = enumerate_vertices(M("NSBL"), 3)
    for b in vs.behaviors()[::11]:
        assert no_signaling_report(b, 1e-12).is_no_signaling


def test_unsupported_combinations():
    with pytest.raises(UnsupportedModelError):
        enumerate_vertices(M("BL"), 4)
    with pytest.raises(UnsupportedModelError):
        enumerate_vertices(M("Local"), 7)
    with pytest.raises(UnsupportedModelError):
        enumerate_vertices(M("OneWay(1,4)"), 3)


@pytest.mark.parametrize("text,expected", [("Local", "Local"), ("bl", "BL"), ("BC1[2]", "BC1[2]"),
                                           ("OneWay(1, 2)", "OneWay(1,2)"), ("NSBL", "NSBL")])
def test_model_parse(text, expected):
    assert str(M(text)) == expected


@pytest.mark.parametrize("text", ["Quantum", "OneWay(1,1)", "BC2", ""])
def test_model_parse_errors(text):
    with pytest.raises(UnsupportedModelError):
        M(text)


# -- bounds -----------------------------------------------------------------------

REFERENCE = [
    ("S3", "BL", 4), ("S3", "BC1", 4),
    ("Sprime", "BL", 1), ("Sprime", "BC1", 2),
    ("I", "BL", 5), ("I", "BC1", 6),
    ("R3", "BC1", 0), ("R3", "BL", 1),
    ("T", "BC1", 2), ("T", "BL", 4),
]


@pytest.mark.parametrize("name,model,value", REFERENCE)
def test_reference_bounds(name, model, value):
    assert bound(builtin(name), M(model)).value == pytest.approx(value, abs=1e-9)


@pytest.mark.parametrize("name,model,value", [
    ("R3", "Local", 0), ("B", "Local", 2), ("S3", "Local", 4), ("Mermin3", "Local", 2),
    ("Mermin3", "NSBL", 4), ("B", "NSBL", 4), ("R3", "NSBL", 0), ("R3", "TOBL", 0),
])
def test_derived_bounds(name, model, value):
    assert bound(builtin(name), M(model)).value == pytest.approx(value, abs=1e-9)


def test_t_bound_one_way_two_party():
    t2 = builtin("T", 2)
    assert bound(t2, M("OneWay(1,2)")).value == 2
    assert bound(t2, M("OneWay(2,1)")).value == 2
    assert bound(t2, M("Local")).value == 2


def _local_responses():
    for funcs in itertools.product(itertools.product((1, -1), repeat=2), repeat=3):
        yield lambda s, f=funcs: tuple(f[i][s[i]] for i in range(3))


def _bl_responses():
    pairs = list(itertools.product((0, 1), repeat=2))
    for single in range(3):
        g1, g2 = [p for p in range(3) if p != single]
        for fs in itertools.product((1, -1), repeat=2):
            for f1 in itertools.product((1, -1), repeat=4):
                for f2 in itertools.product((1, -1), repeat=4):
                    def resp(s, fs=fs, f1=dict(zip(pairs, f1)), f2=dict(zip(pairs, f2)),
                             single=single, g1=g1, g2=g2):
                        out = [0, 0, 0]
                        out[single] = fs[s[single]]
                        out[g1] = f1[(s[g1], s[g2])]
                        out[g2] = f2[(s[g1], s[g2])]
                        return tuple(out)
                    yield resp


@pytest.mark.parametrize("name", ["S3", "Sprime", "I", "R3", "T", "Mermin3"])
def test_bounds_against_independent_enumeration(name):
    expr = builtin(name)
    assert bound(expr, M("Local")).value == pytest.approx(max(brute_force_value(expr, r) for r in _local_responses()))
    assert bound(expr, M("BL")).value == pytest.approx(max(brute_force_value(expr, r) for r in _bl_responses()))


@pytest.mark.parametrize("model", CHAIN)
def test_bound_matches_scipy_lp_over_vertices(model):
    rng = np.random.default_rng(11)
    vs = enumerate_vertices(M(model), 3)
    for _ in range(3):
        expr = random_expression(rng)
        c = vs.matrix @ expr.coefficients.ravel()
        # max c.w over the simplex, as an LP
        res = linprog(-c, A_eq=np.ones((1, len(c))), b_eq=[1.0], bounds=(0, None), method="highs")
        assert bound(expr, M(model)).value == pytest.approx(-res.fun, abs=1e-9)


def test_witness_attains_bound():
    value, witness = bound(builtin("I"), M("BC1"))
    assert evaluate(builtin("I"), witness) == pytest.approx(value)


def test_inclusion_chain_builtins_and_random():
    rng = np.random.default_rng(5)
    exprs = [builtin(n) for n in ("S3", "Sprime", "I", "R3", "T", "B", "Mermin3")]
    exprs += [random_expression(rng) for _ in range(30)]
    for e in exprs:
        b = {m: bound(e, M(m)).value for m in CHAIN}
        assert b["Local"] <= b["NSBL"] + 1e-9
        assert b["NSBL"] <= b["TOBL"] + 1e-9
        assert b["TOBL"] <= min(b["BL"], b["BC1"]) + 1e-9


# -- named strategies ---------------------------------------------------------------

def bl_r3_strategy():
    # a = + at setting 0, - at setting 1; (b, c) equal with value + iff y == z
    def resp(s):
        bc = 1 if s[1] == s[2] else -1
        return (1 if s[0] == 0 else -1, bc, bc)
    return Behavior.deterministic(3, resp)


def bc1_i_strategy():
    # the first party's outcome is copied by both others
    def resp(s):
        a = 1 if s[0] == 0 else -1
        return (a, a, a)
    return Behavior.deterministic(3, resp)


def test_bl_strategy_reaches_r3_one():
    b = bl_r3_strategy()
    assert evaluate(builtin("R3"), b) == 1.0
    assert membership(b, M("BL")).member
    assert not membership(b, M("BC1")).member


def test_bc1_strategy_reaches_i_six():
    b = bc1_i_strategy()
    assert evaluate(builtin("I"), b) == 6.0
    assert evaluate(builtin("Sprime"), b) == 2.0
    assert membership(b, M("BC1[1]")).member
    assert not membership(b, M("BL")).member


# -- membership ---------------------------------------------------------------------

def test_uniform_is_local():
    res = membership(Behavior.uniform(3), M("Local"))
    assert res.member
    assert res.reconstruction_error < 1e-9
    assert sum(res.weights.values()) == pytest.approx(1.0)


def test_membership_weights_reconstruct():
    rng = np.random.default_rng(2)
    vs = enumerate_vertices(M("TOBL"), 3)
    idx = rng.choice(len(vs), 10, replace=False)
    target = Behavior(3, np.tensordot(rng.dirichlet(np.ones(10)), vs.tables[idx], axes=1))
    res = membership(target, vs)
    assert res.member
    rebuilt = sum(w * vs.tables[i] for i, w in res.weights.items())
    assert np.max(np.abs(rebuilt - target.table)) < 1e-9


def test_svetlichny_behavior_outside_bl_with_certificate():
    sv = svetlichny_behavior()
    vs = enumerate_vertices(M("BL"), 3)
    res = membership(sv, M("BL"))
    assert not res.member
    assert res.gap > 1e-3
    assert certificate_is_valid(res, sv, vs)
    d = res.to_dict()
    assert d["member"] is False and len(d["certificate"]) == 8


def test_pr_box_nonlocal():
    pr = Behavior(2, nosignaling_boxes()[16])
    res = membership(pr, M("Local"))
    assert not res.member
    assert certificate_is_valid(res, pr, enumerate_vertices(M("Local"), 2))
    assert membership(pr, M("OneWay(1,2)")).member


def test_bl_vertices_outside_bc1_have_certificates():
    bl = enumerate_vertices(M("BL"), 3)
    bc = enumerate_vertices(M("BC1"), 3)
    bc_rows = {r.tobytes() for r in bc.matrix}
    outside = [i for i in range(len(bl)) if bl.matrix[i].tobytes() not in bc_rows]
    assert outside
    for i in outside[:: max(1, len(outside) // 10)]:
        b = bl.behavior(i)
        res = membership(b, bc)
        assert not res.member
        assert certificate_is_valid(res, b, bc)


@pytest.mark.parametrize("model", ["Local", "NSBL", "TOBL"])
def test_vertex_self_membership(model):
    vs = enumerate_vertices(M(model), 3)
    step = 1 if len(vs) < 200 else 13
    for i in range(0, len(vs), step):
        assert membership(vs.behavior(i), vs).member
