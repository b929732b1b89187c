"""Instances, pair assignments, restriction, splicing and the file format."""

from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shortcut_csp.algebra import basic_rel
from shortcut_csp.errors import (
    ArityMismatch,
    InconsistentAlphaDiagonal,
    ParseError,
    RelationConflict,
    SchemeMismatch,
    UnknownRelation,
    UnknownVariable,
)
from shortcut_csp.gadgets import build_rk
from shortcut_csp.model import (
    Constraint,
    Instance,
    PairAssignment,
    binary_instance,
    instance_from_dict,
    instance_to_dict,
    parse_instance,
    reduce_constraint,
    restrict,
    serialize_instance,
    splice,
)
from shortcut_csp.oracle import certificate_set, equivalent, is_satisfiable

from conftest import DATA


def beta_instance() -> Instance:
    base = parse_instance(DATA / "betweenness.json")
    rel = base.relations["betweenness"]
    return Instance.build(
        "point",
        ["x", "y", "z", "w"],
        {"b": rel},
        [("b", ("x", "y", "z")), ("b", ("y", "z", "w"))],
    )


def test_restrict_examples():
    inst = beta_instance()
    assert restrict(inst, inst.variables) == inst
    sub = restrict(inst, ["x", "y", "z"])
    assert sub.constraints == (Constraint("b", ("x", "y", "z")),)
    empty = restrict(inst, [])
    assert empty.constraints == () and empty.variables == ()
    assert is_satisfiable(empty)


def test_restrict_unknown_variable():
    with pytest.raises(UnknownVariable):
        restrict(beta_instance(), ["q"])


def test_splice_examples(rcc5):
    inst = binary_instance(rcc5, ["x", "y", "z"], [("PO", "x", "y"), ("DR", "y", "z")])
    local = binary_instance(rcc5, ["x", "y"], [("PP", "x", "y")])
    out = splice(inst, local)
    assert sorted(map(str, out.constraints)) == ["DR(y, z)", "PP(x, y)"]
    back = splice(inst, restrict(inst, ["x", "y"]))
    assert sorted(map(str, back.constraints)) == sorted(map(str, inst.constraints))


def test_splice_errors(rcc5, eqs):
    inst = binary_instance(rcc5, ["x", "y"], [("PO", "x", "y")])
    with pytest.raises(SchemeMismatch):
        splice(inst, binary_instance(eqs, ["x", "y"], [("=", "x", "y")]))
    with pytest.raises(UnknownVariable):
        splice(inst, binary_instance(rcc5, ["x", "q"], [("PP", "x", "q")]))
    clash = Instance.build(rcc5, ["x", "y"], {"PO": basic_rel(rcc5, "DR")}, [("PO", ("x", "y"))])
    with pytest.raises(RelationConflict):
        splice(inst, clash)


def test_reduce_constraint_examples(rcc5, eqs):
    inst = binary_instance(rcc5, ["x", "y"], [("PP|EQ", "x", "y")])
    c = inst.constraints[0]
    alone = reduce_constraint(inst, c, PairAssignment.of(rcc5, {}))
    assert alone.constraints == (c,)
    red = reduce_constraint(inst, c, PairAssignment.of(rcc5, {("x", "y"): "PP"}))
    assert equivalent(red, binary_instance(rcc5, ["x", "y"], [("PP", "x", "y")]))

    r3 = Instance.build(eqs, ["x1", "x2", "x3"], {"R3": build_rk(3)}, [("R3", ("x1", "x2", "x3"))])
    red = reduce_constraint(r3, r3.constraints[0], PairAssignment.of(eqs, {("x1", "x2"): "="}))
    expected = binary_instance(eqs, ["x1", "x2", "x3"], [("=", "x1", "x3"), ("=", "x2", "x3")])
    assert equivalent(red, expected)


def test_reduce_constraint_bad_diagonal(rcc5):
    inst = binary_instance(rcc5, ["x", "y"], [("PP", "x", "y")])
    alpha = PairAssignment.of(rcc5, {("x", "x"): "PP"})
    with pytest.raises(InconsistentAlphaDiagonal):
        reduce_constraint(inst, inst.constraints[0], alpha)


def test_pair_assignment_converse(rcc5):
    alpha = PairAssignment.of(rcc5, {("y", "x"): "PP"})
    assert alpha.domain == [("x", "y")]
    assert alpha.get("x", "y") == rcc5.index("PPi")
    assert alpha.get("y", "x") == rcc5.index("PP")
    assert alpha.render() == "x-y:PPi"
    with pytest.raises(ValueError):
        PairAssignment.of(rcc5, [(("x", "y"), "PP"), (("y", "x"), "PP")])


def test_parse_minimal_file(tmp_path):
    doc = {
        "scheme": "rcc5",
        "relations": {"PP": {"arity": 2, "union": ["PP"]}},
        "variables": ["a", "b"],
        "constraints": [{"rel": "PP", "scope": ["a", "b"]}],
    }
    path = tmp_path / "one.json"
    path.write_text(json.dumps(doc))
    inst = parse_instance(path)
    assert len(inst.variables) == 2 and len(inst.constraints) == 1


@pytest.mark.parametrize("path", sorted(p for p in DATA.glob("*.json") if p.name.count(".") == 1), ids=lambda p: p.name)
def test_bundled_round_trip(path):
    inst = parse_instance(path)
    text = serialize_instance(inst)
    assert text == path.read_text()
    assert parse_instance(text) == inst


@pytest.mark.parametrize(
    "patch, error",
    [
        (lambda d: d["constraints"].append({"rel": "PP", "scope": ["a", "zz"]}), ParseError),
        (lambda d: d["constraints"].append({"rel": "XX", "scope": ["a", "b"]}), UnknownRelation),
        (lambda d: d["constraints"].append({"rel": "PP", "scope": ["a", "b", "a"]}), ArityMismatch),
        (lambda d: d.pop("variables"), ParseError),
        (lambda d: d.__setitem__("variables", "ab"), ParseError),
    ],
)
def test_parse_errors(patch, error):
    doc = {
        "scheme": "rcc5",
        "relations": {"PP": {"arity": 2, "union": ["PP"]}},
        "variables": ["a", "b"],
        "constraints": [],
    }
    patch(doc)
    with pytest.raises(error):
        instance_from_dict(doc)


def test_parse_error_names_field():
    with pytest.raises(ParseError) as info:
        instance_from_dict({"scheme": "rcc5", "relations": {}, "variables": ["a"], "constraints": [{"rel": 3}]})
    assert info.value.field


names = st.sampled_from(["a", "b", "c", "d"])
atoms = st.tuples(st.sampled_from(["DR", "PO", "PP", "PPi", "EQ", "PP|EQ", "DR|PO"]), names, names)


@settings(max_examples=60, deadline=None)
@given(st.lists(atoms, max_size=6), st.sets(names))
def test_splice_restrict_keeps_certificates(atom_list, window):
    inst = binary_instance("rcc5", ["a", "b", "c", "d"], atom_list)
    back = splice(inst, restrict(inst, window))
    assert certificate_set(back) == certificate_set(inst)


@settings(max_examples=60, deadline=None)
@given(st.lists(atoms, max_size=6))
def test_serialize_round_trip_property(atom_list):
    inst = binary_instance("rcc5", ["a", "b", "c", "d"], atom_list)
    again = parse_instance(json.loads(serialize_instance(inst)))
    assert again == inst
    assert instance_to_dict(again) == instance_to_dict(inst)
