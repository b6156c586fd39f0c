import random

import pytest

from aicrepair.core import format_update_set
from aicrepair.datastore import Database
from aicrepair.engine import Mode, PlanError, merge_dependent, plan_from_document, repair_all
from aicrepair.parser import AicDocument, parse, parse_aics
from aicrepair.partition import preprocess
from aicrepair.repair import RepairKind, build_tree
from conftest import FIXTURES, employee_db
from generators import random_instance


def show(sets):
    return sorted(format_update_set(u) for u in sets)


def test_plan_annotated_fixture():
    plan = plan_from_document(parse((FIXTURES / "employees_annotated.aic").read_text()))
    assert [[p.id for p in s] for s in plan.strata] == [[1], [2]]


def test_plan_independent_and_chain():
    rules = parse_aics("p(x=$X) -> -p(x=$X);\nq(x=$X) -> -q(x=$X);\nr(x=$X) -> -r(x=$X);")
    flat3 = AicDocument.annotate([(i + 1, [a]) for i, a in enumerate(rules)])
    assert [[p.id for p in s] for s in plan_from_document(flat3).strata] == [[1, 2, 3]]
    chain = AicDocument.annotate([(i + 1, [a]) for i, a in enumerate(rules)], [(3, 2), (2, 1)])
    assert [[p.id for p in s] for s in plan_from_document(chain).strata] == [[1], [2], [3]]
    assert len(plan_from_document(AicDocument.flat(rules)).strata) == 1


def test_employee_stratified_founded(emp_db, emp_aics):
    out = repair_all(emp_db, preprocess(emp_aics), RepairKind.FOUNDED)
    assert show(out.repairs) == ["-junior(id=e1)"]
    # stratum trees: root plus one delete, then a single node
    assert out.stats.nodes == 3 and out.stats.trees == 2
    assert (out.partitions, out.strata) == (2, 2)


def test_independent_union():
    db = Database({"p": ("x",), "q": ("x",)})
    db.insert_row("p", ["a"])
    db.insert_row("q", ["b"])
    aics = parse_aics("p(x = $X) -> - p(x = $X);\nq(x = $X) -> - q(x = $X);")
    out = repair_all(db, preprocess(aics), RepairKind.FOUNDED, Mode.PARALLEL)
    assert show(out.repairs) == ["-p(x=a), -q(x=b)"]


def test_consistent_regardless_of_plan(emp_aics):
    db = employee_db(1, bosses=(), insured=("e1",))
    for doc in (AicDocument.flat(emp_aics), preprocess(emp_aics)):
        out = repair_all(db, doc, RepairKind.JUSTIFIED)
        assert out.consistent and out.repairs == []


def test_well_founded_rejects_dependencies(emp_db, emp_aics):
    before = emp_db.snapshot()
    with pytest.raises(PlanError):
        repair_all(emp_db, preprocess(emp_aics), RepairKind.WELL_FOUNDED)
    assert emp_db.snapshot() == before
    assert show(repair_all(emp_db, AicDocument.flat(emp_aics), RepairKind.WELL_FOUNDED).repairs) == ["-junior(id=e1)"]


def test_simple_merges_dependent_partitions(emp_db, emp_aics):
    doc = preprocess(emp_aics)
    merged = merge_dependent(doc)
    assert len(merged.partitions) == 1 and merged.dependencies == ()
    out = repair_all(emp_db, doc, RepairKind.SIMPLE)
    assert show(out.repairs) == show(build_tree(emp_db, emp_aics, RepairKind.SIMPLE).repairs)


def test_combination_cap_truncates():
    db = Database({"p": ("x",), "q": ("x",)})
    for v in "abc":
        db.insert_row("p", [v])
        db.insert_row("q", [v])
    aics = parse_aics("p(x = $X), q(x = $X) -> - p(x = $X), - q(x = $X);\n")
    full = repair_all(db, AicDocument.flat(aics), RepairKind.SIMPLE)
    assert len(full.repairs) == 8 and not full.truncated
    # two independent copies over other tables multiply the candidates
    db2 = Database({"p": ("x",), "q": ("x",), "r": ("x",), "s": ("x",)})
    for v in "abc":
        for t in "pqrs":
            db2.insert_row(t, [v])
    aics2 = aics + parse_aics("r(x = $X), s(x = $X) -> - r(x = $X), - s(x = $X);")
    out = repair_all(db2, preprocess(aics2), RepairKind.SIMPLE, combination_cap=10)
    assert out.truncated and len(out.repairs) <= 10
    assert len(repair_all(db2, preprocess(aics2), RepairKind.SIMPLE).repairs) == 64


def test_stratified_equals_monolithic_on_random_instances():
    compared = 0
    for seed in range(400):
        db, aics = random_instance(random.Random(seed), max_aics=3)
        doc = preprocess(aics)
        if len(doc.partitions) < 2:
            continue
        compared += 1
        for kind in (RepairKind.SIMPLE, RepairKind.FOUNDED, RepairKind.JUSTIFIED):
            mono = build_tree(db, aics, kind)
            strat = repair_all(db, doc, kind)
            assert set(strat.repairs) == set(mono.repairs), (seed, kind)
    assert compared >= 30


def test_show_weak_is_superset(emp_aics):
    db = employee_db(3)
    for kind in (RepairKind.SIMPLE, RepairKind.FOUNDED, RepairKind.JUSTIFIED):
        out = repair_all(db, preprocess(emp_aics), kind, collect_weak=True)
        assert set(out.repairs) <= set(out.weak_leaves)


def test_bad_mode_and_cap(emp_db, emp_aics):
    with pytest.raises(ValueError):
        repair_all(emp_db, AicDocument.flat(emp_aics), RepairKind.SIMPLE, "fast")
    with pytest.raises(ValueError):
        repair_all(emp_db, AicDocument.flat(emp_aics), RepairKind.SIMPLE, combination_cap=0)
