import random

from hypothesis import given, settings
from hypothesis import strategies as st

from aicrepair.core import AtomPattern, Const, Literal, UpdateAction, dual, is_consistent, lit, ua
from aicrepair.datastore import Database, undo, update, UpdateError
from aicrepair.parser import AicDocument, parse, serialize
from aicrepair.partition import preprocess
from aicrepair.repair import RepairKind, ResourceExhausted, build_tree
from aicrepair.engine import repair_all
from generators import SCHEMAS, random_instance

values = st.sampled_from(["a", "b", "c", None])


@st.composite
def closed_atoms(draw, full=False):
    table = draw(st.sampled_from(sorted(SCHEMAS)))
    cols = SCHEMAS[table]
    chosen = cols if full else draw(st.lists(st.sampled_from(cols), unique=True, max_size=len(cols)))
    return AtomPattern(table, tuple((c, Const(draw(values))) for c in chosen))


literals = st.builds(Literal, closed_atoms(), st.booleans())
actions = st.builds(UpdateAction, closed_atoms(), st.booleans())


@given(literals)
def test_dual_involution(l):
    assert dual(dual(l)) == l
    assert dual(l) != l


@given(literals, actions)
def test_ua_lit_bijection(l, a):
    assert lit(ua(l)) == l
    assert ua(lit(a)) == a


@given(st.lists(actions, max_size=6), st.randoms())
def test_consistency_is_order_free(acts, rnd):
    shuffled = list(acts)
    rnd.shuffle(shuffled)
    assert is_consistent(acts) == is_consistent(shuffled)


def _db(rows):
    db = Database(SCHEMAS)
    for table, row in rows:
        db.insert_row(table, row)
    return db


rows = st.lists(
    st.sampled_from(sorted(SCHEMAS)).flatmap(
        lambda t: st.tuples(st.just(t), st.lists(values, min_size=len(SCHEMAS[t]), max_size=len(SCHEMAS[t])))
    ),
    max_size=8,
)


@given(rows, st.lists(st.lists(actions, max_size=4), max_size=4))
def test_update_undo_sequences(initial, batches):
    db = _db(initial)
    states = [db.snapshot()]
    logs = []
    for batch in batches:
        if not is_consistent(batch):
            try:
                update(db, batch)
            except UpdateError:
                pass
            else:
                raise AssertionError("inconsistent batch accepted")
            assert db.snapshot() == states[-1]
            continue
        logs.append(update(db, batch))
        states.append(db.snapshot())
    for log in reversed(logs):
        states.pop()
        undo(db, log)
        assert db.snapshot() == states[-1]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_round_trip_random_rule_sets(seed):
    _, aics = random_instance(random.Random(seed), max_aics=4)
    flat = AicDocument.flat(aics)
    assert parse(serialize(flat)).aics == tuple(aics)
    doc = preprocess(aics)
    again = parse(serialize(doc))
    assert again == doc


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(list(RepairKind)), st.integers(1, 40))
def test_trees_leave_database_untouched(seed, kind, budget):
    db, aics = random_instance(random.Random(seed))
    before = db.snapshot()
    try:
        build_tree(db, aics, kind, max_nodes=budget)
    except ResourceExhausted:
        pass
    assert db.snapshot() == before
    try:
        repair_all(db, preprocess(aics), kind, max_nodes=budget)
    except (ResourceExhausted, ValueError):
        pass
    assert db.snapshot() == before
