import sys
from pathlib import Path

import pytest

HERE = Path(__file__).parent
sys.path.insert(0, str(HERE))

from aicrepair.datastore import Database, load_database  # noqa: E402
from aicrepair.parser import parse_aics  # noqa: E402

FIXTURES = HERE / "fixtures"


def employee_aics():
    return parse_aics((FIXTURES / "employees.aic").read_text())


def employee_db(n_junior: int = 1, bosses=("e1",), insured=()) -> Database:
    db = Database({"junior": ("id",), "category": ("type", "empId"), "insured": ("empId", "type")})
    for i in range(1, n_junior + 1):
        db.insert_row("junior", [f"e{i}"])
    for b in bosses:
        db.insert_row("category", ["boss", b])
    for e in insured:
        db.insert_row("insured", [e, "basic"])
    return db


@pytest.fixture
def emp_aics():
    return employee_aics()


@pytest.fixture
def emp_db():
    return load_database(FIXTURES / "employees_db.json")
