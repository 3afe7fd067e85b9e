"""
Shared fixtures for PyTest tests.

Spaces are small DSL documents; scenarios run the fixture targets in
tests/fixtures/targets with the current interpreter so no engine is needed.
"""

import shlex
import sys
from pathlib import Path

import pytest

from src.objective import ObjectiveSpec
from src.paramspace import parse_space
from src.scenario import ScenarioSpec

TARGETS = Path(__file__).parent / "fixtures" / "targets"

CHAIN_SPACE = """\
x integer [1, 10] [7]
y real [0.0, 1.0] [0.5]
z {on, off} [on]
y | x in {7}
z | y in {0.5}
"""

FORBIDDEN_SPACE = """\
a {true, false} [false]
b {true, false} [false]
c integer [0, 9] [0]
s real [0.01, 100.0] [1.0] log
{a=true, b=true}
"""

QUADRATIC_SPACE = """\
a integer [0, 100] [0]
b integer [0, 100] [100]
"""

ADDITIVE_SPACE = """\
x {true, false} [false]
y {true, false} [false]
z {true, false} [false]
"""

CRASHY_SPACE = """\
a {true, false} [false]
b {true, false} [false]
c {red, green, blue} [red]
"""


def target_command(script: str) -> str:
    """Command template running a fixture target with the current interpreter."""
    return f"{shlex.quote(sys.executable)} {shlex.quote(str(TARGETS / script))} {{params}} {{instance}} {{seed}}"


@pytest.fixture
def chain_space():
    return parse_space(CHAIN_SPACE)


@pytest.fixture
def forbidden_space():
    return parse_space(FORBIDDEN_SPACE)


@pytest.fixture
def make_scenario(tmp_path):
    """
    Factory: make_scenario(space_text, script, instances, **fields) -> ScenarioSpec.

    The space is written to a file under tmp_path.
    """
    counter = {"n": 0}

    def _make(space_text, script, instances=("i1",), cutoff=30.0, **fields):
        counter["n"] += 1
        space_file = tmp_path / f"space-{counter['n']}.pcs"
        space_file.write_text(space_text, encoding="utf-8")
        return ScenarioSpec(
            space_file=str(space_file),
            command=target_command(script),
            instances=tuple(instances),
            cutoff=cutoff,
            **fields,
        )

    return _make


@pytest.fixture
def make_quadratic(make_scenario):
    """Factory for scenarios on the quadratic target (reported metric)."""

    def _make(**fields):
        fields.setdefault("objective_source", "reported-metric")
        return make_scenario(QUADRATIC_SPACE, "quadratic.py", **fields)

    return _make


@pytest.fixture
def quadratic_scenario(make_quadratic):
    return make_quadratic(budget_runs=300)


@pytest.fixture
def additive_scenario(make_scenario):
    return make_scenario(ADDITIVE_SPACE, "additive.py", instances=("i1", "i2"),
                         objective_source="reported-metric", budget_runs=100)


@pytest.fixture
def crashy_scenario(make_scenario):
    return make_scenario(CRASHY_SPACE, "crashy.py", objective_source="reported-metric", concurrency_limit=4)


@pytest.fixture
def stub_scenario(make_scenario):
    """Stub target: the instance name selects the behaviour (see stub.py)."""
    return make_scenario("a {true, false} [true]\n", "stub.py",
                         instances=("ok", "crash", "abort", "burn", "sleep", "quick", "silent"), cutoff=0.5)


@pytest.fixture
def metric_spec():
    return ObjectiveSpec(cutoff=30.0, k=10, source="reported-metric")


@pytest.fixture(scope="session")
def shared_quadratic(tmp_path_factory):
    """Quadratic scenario shared across a session (300-run budget)."""
    space_file = tmp_path_factory.mktemp("quadratic") / "quadratic.pcs"
    space_file.write_text(QUADRATIC_SPACE, encoding="utf-8")
    return ScenarioSpec(str(space_file), target_command("quadratic.py"), ("i1",), cutoff=30.0,
                        objective_source="reported-metric", budget_runs=300)
