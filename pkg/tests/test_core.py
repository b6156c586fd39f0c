import pytest

from aicrepair.core import (
    Aic,
    AicError,
    AtomPattern,
    Const,
    Literal,
    UpdateAction,
    Var,
    canonical,
    dual,
    format_update_set,
    format_value,
    is_consistent,
    is_normal,
    lit,
    materialize,
    ua,
)


def atom(table, **kw):
    return AtomPattern(table, tuple((c, Var(v[1:]) if isinstance(v, str) and v.startswith("$") else Const(v)) for c, v in kw.items()))


def test_dual_flips_polarity():
    l = Literal(atom("junior", id="e1"))
    assert dual(l) == Literal(atom("junior", id="e1"), False)
    assert dual(dual(l)) == l


def test_ua_and_lit():
    assert ua(Literal(atom("junior", id="$X"))) == UpdateAction(atom("junior", id="$X"), True)
    assert lit(UpdateAction(atom("junior", id="e1"), False)) == Literal(atom("junior", id="e1"), False)
    a = UpdateAction(atom("insured", empId="e1", type="basic"))
    assert ua(lit(a)) == a


def test_binding_order_is_irrelevant():
    a = atom("insured", empId="e1", type="basic")
    b = atom("insured", type="basic", empId="e1")
    assert a == b and hash(a) == hash(b)
    assert frozenset([UpdateAction(a)]) == frozenset([UpdateAction(b)])


@pytest.mark.parametrize(
    "actions, expected",
    [
        ([UpdateAction(atom("junior", id="e1")), UpdateAction(atom("junior", id="e1"), False)], False),
        ([UpdateAction(atom("junior", id="e1"), False), UpdateAction(atom("insured", empId="e1", type="basic"))], True),
        ([UpdateAction(atom("insured", empId="e1"), False), UpdateAction(atom("insured", empId="e1", type="basic"))], False),
        # the insert leaves type null, which the delete's constant does not match
        ([UpdateAction(atom("insured", empId="e1", type="basic"), False), UpdateAction(atom("insured", empId="e1"))], True),
    ],
)
def test_is_consistent(actions, expected):
    assert is_consistent(actions) is expected
    assert is_consistent(list(reversed(actions))) is expected


def test_materialize_fills_null():
    assert materialize(atom("insured", empId="e1"), ("empId", "type")) == {"empId": "e1", "type": None}


def test_is_normal(emp_aics):
    assert is_normal(emp_aics)
    assert is_normal([])
    two = Aic(
        (Literal(atom("p", x="$X")), Literal(atom("q", x="$X"))),
        (UpdateAction(atom("p", x="$X"), False), UpdateAction(atom("q", x="$X"), False)),
    )
    assert not is_normal(emp_aics + [two])


def test_head_dual_inclusion_enforced():
    with pytest.raises(AicError, match="head-dual"):
        Aic((Literal(atom("p", x="$X")),), (UpdateAction(atom("p", x="$X"), True),))


def test_safety_enforced():
    with pytest.raises(AicError, match="safety"):
        Aic(
            (Literal(atom("q", x="$Y"), False), Literal(atom("p", x="$Y"))),
            (UpdateAction(atom("p", x="$Y"), False),),
        )


def test_empty_names_rejected():
    with pytest.raises(ValueError):
        Var("")
    with pytest.raises(ValueError):
        AtomPattern("")


def test_canonical_order():
    u = {
        UpdateAction(atom("insured", empId="e1", type="basic")),
        UpdateAction(atom("category", type="boss", empId="e1"), False),
        UpdateAction(atom("insured", empId="e2"), False),
    }
    assert [a.atom.table for a in canonical(u)] == ["category", "insured", "insured"]
    assert format_update_set(u) == "-category(empId=e1,type=boss), -insured(empId=e2), +insured(empId=e1,type=basic)"


def test_format_value_quotes_when_needed():
    assert format_value("e1") == "e1"
    assert format_value("two words") == "'two words'"
    assert format_value("it's") == "'it''s'"
    assert format_value("") == "''"
    assert format_value(None) == "NULL"
    assert format_value("NULL") == "'NULL'"
