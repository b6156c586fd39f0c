import pytest

from aicrepair.core import Const, Var
from aicrepair.parser import (
    AicDocument,
    AicSemanticError,
    AicSyntaxError,
    AnnotationError,
    ParseError,
    parse,
    parse_actions,
    parse_aics,
    serialize,
)
from conftest import FIXTURES


def test_employee_rules_parse(emp_aics):
    assert len(emp_aics) == 2
    a1, a2 = emp_aics
    assert [l.atom.table for l in a1.body] == ["junior", "category"]
    assert a1.head[0].insert is False
    assert a2.body[1].positive is False
    assert dict(a2.head[0].atom.bindings) == {"empId": Var("X"), "type": Const("basic")}


def test_flat_round_trip(emp_aics):
    text = serialize(AicDocument.flat(emp_aics))
    assert parse_aics(text) == emp_aics
    assert serialize(parse(text)) == text


def test_annotated_fixture():
    doc = parse((FIXTURES / "employees_annotated.aic").read_text())
    assert doc.annotated
    assert [p.id for p in doc.partitions] == [1, 2]
    assert doc.dependencies == ((2, 1),)
    assert serialize(doc) == (FIXTURES / "employees_annotated.aic").read_text()


def test_comments_and_any_binding_order():
    aics = parse_aics("-- note\ninsured(type = basic, empId = $X),\n not junior(id = $X)\n -> - insured(empId = $X, type = basic);")
    assert len(aics) == 1
    assert aics[0].body[1].positive is False


def test_quoted_and_null_values():
    (a,) = parse_aics("p(x = 'two words', y = NULL), NOT q(x = 'it''s') -> - p(x = 'two words', y = NULL);")
    assert a.body[0].atom.constants() == {"x": "two words", "y": None}
    assert a.body[1].atom.constants() == {"x": "it's"}
    assert parse_aics(serialize(AicDocument.flat([a]))) == [a]


def test_syntax_error_position():
    with pytest.raises(AicSyntaxError) as exc:
        parse_aics("junior(id = $X)\n  -> - junior(id $X);")
    assert exc.value.line == 2
    assert exc.value.column is not None


def test_missing_semicolon():
    with pytest.raises(AicSyntaxError):
        parse_aics("junior(id = $X) -> - junior(id = $X)")


def test_semantic_errors():
    with pytest.raises(AicSemanticError, match="head-dual"):
        parse_aics("junior(id = $X) -> + junior(id = $X);")
    with pytest.raises(AicSemanticError, match="safety"):
        parse_aics("junior(id = $X), NOT insured(empId = $Y) -> - junior(id = $X);")


@pytest.mark.parametrize(
    "text, needle",
    [
        ("#PARTITION_BEGIN_1#\np(x=$X) -> -p(x=$X);\n#PARTITION_END#\n#PARTITION_BEGIN_1#\nq(x=$X) -> -q(x=$X);\n#PARTITION_END#\n", "duplicate"),
        ("#PARTITION_BEGIN_1#\np(x=$X) -> -p(x=$X);\n#PARTITION_END#\n#DEPENDENCIES_BEGIN#\n1 -> 3\n#DEPENDENCIES_END#\n", "undeclared"),
        (
            "#PARTITION_BEGIN_1#\np(x=$X) -> -p(x=$X);\n#PARTITION_END#\n#PARTITION_BEGIN_2#\nq(x=$X) -> -q(x=$X);\n#PARTITION_END#\n"
            "#DEPENDENCIES_BEGIN#\n1 -> 2\n2 -> 1\n#DEPENDENCIES_END#\n",
            "cyclic",
        ),
        ("#PARTITION_BEGIN_1#\np(x=$X) -> -p(x=$X);\n", "missing"),
    ],
)
def test_annotation_errors(text, needle):
    with pytest.raises(AnnotationError, match=needle):
        parse(text)


def test_parse_error_is_value_error():
    assert issubclass(ParseError, ValueError)


def test_parse_actions():
    acts = parse_actions("-junior(id=e1), +insured(empId=e1,type=basic)")
    assert [a.insert for a in acts] == [False, True]
    assert parse_actions("") == []
