"""
Unit tests for parameter spaces.

Tests the space DSL and configuration handling:
- Parsing, error locations and render round-trips
- Defaults and activation under conditions
- Random sampling (reproducibility, forbidden rejection, uniformity)
- Strict validation and canonical serialization
- Differences, reassignment and neighbours
"""

from collections import Counter
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from src.paramspace import (
    INACTIVE,
    Condition,
    CyclicConditionError,
    DomainError,
    ExtraParameterError,
    ForbiddenClause,
    ForbiddenConfigurationError,
    MissingParameterError,
    OutOfDomainError,
    OverConstrainedSpaceError,
    Parameter,
    ParameterSpace,
    SpaceMismatchError,
    SpaceSyntaxError,
    UnknownParameterError,
    active_parameters,
    config_diff,
    default_config,
    load_space,
    neighbours,
    parse_configuration,
    parse_space,
    read_pcs,
    reassign,
    render_space,
    sample_configurations,
    sample_random,
    validate_config,
    write_pcs,
)

DATA = Path(__file__).resolve().parents[2] / "data" / "spaces"

pytestmark = pytest.mark.unit


class TestParsing:
    """Tests for the space DSL."""

    def test_single_boolean(self):
        space = parse_space("a {true, false} [true]")

        assert len(space) == 1
        assert space["a"].is_boolean
        assert space["a"].default == "true"

    def test_boolean_value_order_is_canonical(self):
        assert parse_space("a {false, true} [false]")["a"].values == ("true", "false")

    def test_condition(self):
        space = parse_space("x integer [1, 10] [7]\ny real [0.0, 1.0] [0.5]\ny | x in {7}")

        assert len(space) == 2
        assert len(space.conditions) == 1
        assert space.condition_for("y").values == (7,)

    def test_log_scaled_real(self):
        space = parse_space("s real [0.01, 100.0] [1.0] log")
        assert space["s"].log is True

    def test_comments_and_blank_lines(self):
        space = parse_space("# header\n\na {true, false} [true]  # trailing\n")
        assert space.names == ("a",)

    def test_reversed_bounds_rejected(self):
        with pytest.raises(DomainError) as info:
            parse_space("x integer [10, 1] [5]")
        assert info.value.line == 1

    def test_default_outside_domain(self):
        with pytest.raises(DomainError):
            parse_space("x integer [1, 10] [11]")

    def test_log_scale_needs_positive_range(self):
        with pytest.raises(DomainError):
            parse_space("s real [0.0, 1.0] [0.5] log")

    def test_syntax_error_location(self):
        with pytest.raises(SpaceSyntaxError) as info:
            parse_space("a {true, false} [true]\n  x integr [1, 2] [1]")
        assert info.value.line == 2
        assert info.value.column == 3

    def test_unknown_parameter_in_condition(self):
        with pytest.raises(UnknownParameterError) as info:
            parse_space("a {true, false} [true]\nb | c in {true}")
        assert info.value.line == 2

    def test_unknown_parameter_in_forbidden_clause(self):
        with pytest.raises(UnknownParameterError):
            parse_space("a {true, false} [true]\n{a=true, q=1}")

    def test_cyclic_conditions(self):
        text = "a {true, false} [true]\nb {true, false} [true]\na | b in {true}\nb | a in {true}"
        with pytest.raises(CyclicConditionError):
            parse_space(text)

    def test_default_violating_forbidden_clause(self):
        with pytest.raises(DomainError):
            parse_space("a {true, false} [true]\n{a=true}")

    def test_duplicate_parameter(self):
        with pytest.raises(DomainError):
            parse_space("a {true, false} [true]\na {true, false} [false]")

    @pytest.mark.parametrize("name", ["v8_partial.pcs", "jsc_partial.pcs"])
    def test_fixture_round_trip(self, name):
        space = load_space(DATA / name)

        assert parse_space(render_space(space)) == space
        assert parse_space(render_space(space)).fingerprint == space.fingerprint

    def test_chain_round_trip(self, chain_space, forbidden_space):
        assert parse_space(render_space(chain_space)) == chain_space
        assert parse_space(render_space(forbidden_space)) == forbidden_space


class TestDefaultsAndActivation:
    """Tests for default_config and active_parameters."""

    def test_default_single_boolean(self):
        config = default_config(parse_space("a {true, false} [true]"))
        assert dict(config) == {"a": "true"}

    def test_default_with_active_child(self):
        space = parse_space("x integer [1, 10] [7]\ny real [0.0, 1.0] [0.5]\ny | x in {7}")
        assert dict(default_config(space)) == {"x": 7, "y": 0.5}

    def test_default_with_inactive_child(self):
        space = parse_space("x integer [1, 10] [3]\ny real [0.0, 1.0] [0.5]\ny | x in {7}")
        assert dict(default_config(space)) == {"x": 3}

    def test_no_conditions(self, forbidden_space):
        partial = {"a": "true", "b": "false", "c": 1, "s": 1.0}
        assert active_parameters(forbidden_space, partial) == {"a", "b", "c", "s"}

    def test_transitive_activation(self, chain_space):
        assert active_parameters(chain_space, {"x": 7, "y": 0.5}) == {"x", "y", "z"}

    def test_inactive_chain(self, chain_space):
        assert active_parameters(chain_space, {"x": 3, "y": 0.5}) == {"x"}

    def test_missing_unconditional(self, chain_space):
        with pytest.raises(MissingParameterError):
            active_parameters(chain_space, {"y": 0.5})


class TestSampling:
    """Tests for sample_random and sample_configurations."""

    def test_same_seed_same_configuration(self, chain_space):
        assert sample_random(chain_space, 42) == sample_random(chain_space, 42)

    def test_boolean_sample(self):
        space = parse_space("a {true, false} [true]")
        assert sample_random(space, 7)["a"] in ("true", "false")

    def test_forbidden_pair_never_sampled(self, forbidden_space):
        samples = sample_configurations(forbidden_space, 1000, seed=3)
        assert not any(c["a"] == "true" and c["b"] == "true" for c in samples)

    def test_samples_are_valid(self, chain_space, forbidden_space):
        for space in (chain_space, forbidden_space):
            for config in sample_configurations(space, 1000, seed=11):
                assert validate_config(space, dict(config)) == config

    def test_integer_uniformity(self):
        space = parse_space("v integer [0, 9] [0]")
        counts = Counter(c["v"] for c in sample_configurations(space, 10_000, seed=5))

        assert set(counts) == set(range(10))
        for value in range(10):
            assert counts[value] / 10_000 == pytest.approx(0.1, abs=0.02)

    def test_log_scaled_samples_spread_over_decades(self, forbidden_space):
        values = [c["s"] for c in sample_configurations(forbidden_space, 2000, seed=2)]
        below_one = sum(1 for v in values if v < 1.0) / len(values)
        assert below_one == pytest.approx(0.5, abs=0.05)

    def test_over_constrained_space(self):
        # only the all-false default survives: one valid draw in 2**30
        lines = [f"b{i} {{true, false}} [false]" for i in range(30)]
        lines += [f"{{b{i}=true}}" for i in range(30)]
        space = parse_space("\n".join(lines))

        with pytest.raises(OverConstrainedSpaceError):
            sample_random(space, 0)


class TestValidation:
    """Tests for validate_config and parse_configuration."""

    def test_default_is_valid(self, chain_space):
        default = default_config(chain_space)
        assert validate_config(chain_space, dict(default)) == default

    def test_out_of_domain(self):
        space = parse_space("x integer [1, 10] [5]")
        with pytest.raises(OutOfDomainError):
            validate_config(space, {"x": 11})

    def test_inactive_child_is_extra(self):
        space = parse_space("x integer [1, 10] [3]\ny real [0.0, 1.0] [0.5]\ny | x in {7}")
        with pytest.raises(ExtraParameterError):
            validate_config(space, {"x": 3, "y": 0.5})

    def test_unknown_parameter_is_extra(self, chain_space):
        with pytest.raises(ExtraParameterError):
            validate_config(chain_space, {"x": 3, "w": 1})

    def test_missing_active_child(self, chain_space):
        with pytest.raises(MissingParameterError):
            validate_config(chain_space, {"x": 7})

    def test_forbidden(self, forbidden_space):
        with pytest.raises(ForbiddenConfigurationError):
            validate_config(forbidden_space, {"a": "true", "b": "true", "c": 0, "s": 1.0})

    def test_string_values_are_coerced(self, forbidden_space):
        config = validate_config(forbidden_space, {"a": "true", "b": "false", "c": "4", "s": "2.5"})
        assert config["c"] == 4
        assert config["s"] == 2.5

    def test_canonical_form_sorted(self, forbidden_space):
        config = validate_config(forbidden_space, {"s": 2.5, "c": 4, "b": "false", "a": "true"})
        assert config.canonical == "a=true b=false c=4 s=2.5"

    def test_parse_canonical(self, forbidden_space):
        config = sample_random(forbidden_space, 9)
        assert parse_configuration(forbidden_space, config.canonical) == config

    def test_config_id_is_stable(self, chain_space):
        default = default_config(chain_space)
        assert default.config_id == default_config(chain_space).config_id
        assert len(default.config_id) == 12


class TestDiffAndMoves:
    """Tests for config_diff, reassign and neighbours."""

    def test_diff_of_equal_configs_is_empty(self, chain_space):
        default = default_config(chain_space)
        assert config_diff(default, default) == []

    def test_diff_reports_inactive_side(self, chain_space):
        default = default_config(chain_space)
        other = validate_config(chain_space, {"x": 3})

        changes = config_diff(default, other)

        assert [c.name for c in changes] == ["x", "y", "z"]
        assert changes[1].old == 0.5 and changes[1].new is INACTIVE

    def test_diff_across_spaces(self, chain_space, forbidden_space):
        with pytest.raises(SpaceMismatchError):
            config_diff(default_config(chain_space), default_config(forbidden_space))

    def test_reassign_activates_children_with_defaults(self, chain_space):
        start = validate_config(chain_space, {"x": 3})
        moved = reassign(chain_space, start, {"x": 7})
        assert dict(moved) == {"x": 7, "y": 0.5, "z": "on"}

    def test_reassign_uses_fill(self, chain_space):
        start = validate_config(chain_space, {"x": 3})
        moved = reassign(chain_space, start, {"x": 7}, fill={"y": 0.5, "z": "off"})
        assert moved["z"] == "off"

    def test_reassign_forbidden_returns_none(self, forbidden_space):
        start = validate_config(forbidden_space, {"a": "true", "b": "false", "c": 0, "s": 1.0})
        assert reassign(forbidden_space, start, {"b": "true"}) is None

    def test_neighbours_differ_in_one_parameter(self, forbidden_space):
        start = default_config(forbidden_space)
        for other in neighbours(forbidden_space, start, rng=4):
            changed = {c.name for c in config_diff(start, other)}
            assert len(changed) == 1
            assert validate_config(forbidden_space, dict(other)) == other


class TestConfigSpaceExchange:
    """pcs_new export and import through ConfigSpace."""

    @staticmethod
    def _parts(space):
        return set(space.parameters), set(space.conditions), set(space.forbidden)

    def test_backing_space_mirrors_declarations(self, forbidden_space):
        cs = forbidden_space.configspace

        assert sorted(cs.keys()) == ["a", "b", "c", "s"]
        assert len(cs.get_forbiddens()) == 1
        assert cs["s"].log

    def test_backing_space_conditions(self):
        space = load_space(DATA / "v8_partial.pcs")
        children = {cond.child.name for cond in space.configspace.get_conditions()}

        assert children == {c.child for c in space.conditions}

    def test_pcs_round_trip(self, forbidden_space):
        assert self._parts(read_pcs(write_pcs(forbidden_space))) == self._parts(forbidden_space)

    def test_fixture_pcs_round_trip(self):
        space = load_space(DATA / "v8_partial.pcs")
        restored = read_pcs(write_pcs(space))

        assert self._parts(restored) == self._parts(space)
        assert default_config(restored) == default_config(space)

    def test_pcs_text_uses_pcs_new_keywords(self, forbidden_space):
        text = write_pcs(forbidden_space)

        assert "categorical" in text
        assert "log" in text

    def test_unreadable_pcs(self):
        with pytest.raises(SpaceSyntaxError):
            read_pcs("this is not a space")


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1))
def test_any_seed_yields_a_valid_configuration(seed):
    space = parse_space("a {true, false} [false]\nb {true, false} [false]\n"
                        "n integer [0, 5] [0]\nn | a in {true}\n{a=true, b=true}")
    config = sample_random(space, seed)

    assert validate_config(space, dict(config)) == config
    assert ("n" in config) == (config["a"] == "true")


_eighths = st.integers(-8000, 8000).map(lambda n: n / 8)
_decades = [0.001, 0.01, 0.1, 1.0, 10.0, 100.0, 1000.0]


@st.composite
def _parameters(draw, name):
    kind = draw(st.sampled_from(["boolean", "categorical", "integer", "real", "log"]))
    if kind == "boolean":
        return Parameter.boolean(name, draw(st.booleans()))
    if kind == "categorical":
        values = draw(st.lists(st.sampled_from(["red", "green", "blue", "fast", "slow"]),
                               min_size=1, max_size=5, unique=True))
        return Parameter.categorical(name, values, draw(st.sampled_from(values)))
    if kind == "integer":
        lower, upper = sorted(draw(st.lists(st.integers(-1000, 1000), min_size=2, max_size=2)))
        return Parameter.integer(name, lower, upper, draw(st.integers(lower, upper)))
    if kind == "log":
        lower, default, upper = sorted(draw(st.lists(st.sampled_from(_decades), min_size=3, max_size=3)))
        return Parameter.real(name, lower, upper, default, log=True)
    lower, default, upper = sorted(draw(st.lists(_eighths, min_size=3, max_size=3)))
    return Parameter.real(name, lower, upper, default)


@st.composite
def spaces(draw, max_parameters=5):
    """Random spaces whose conditions only point at earlier categorical parameters."""
    count = draw(st.integers(1, max_parameters))
    parameters = [draw(_parameters(f"p{i}")) for i in range(count)]
    conditions = []
    for child in parameters[1:]:
        parents = [p for p in parameters if p.kind.value == "categorical" and p.name < child.name]
        if parents and draw(st.booleans()):
            parent = draw(st.sampled_from(parents))
            values = draw(st.lists(st.sampled_from(parent.values), min_size=1, unique=True))
            conditions.append(Condition(child.name, parent.name, tuple(values)))
    forbidden = []
    flags = [p for p in parameters if p.is_boolean and p.name not in {c.child for c in conditions}]
    if flags and draw(st.booleans()):
        flag = draw(st.sampled_from(flags))
        other = "false" if flag.default == "true" else "true"
        forbidden.append(ForbiddenClause(((flag.name, other),)))
    return ParameterSpace(parameters, conditions, forbidden)


@settings(max_examples=100, deadline=None)
@given(space=spaces())
def test_render_parse_round_trip(space):
    restored = parse_space(render_space(space))

    assert restored == space
    assert restored.fingerprint == space.fingerprint


@settings(max_examples=100, deadline=None)
@given(space=spaces(), seed=st.integers(min_value=0, max_value=2**32 - 1), data=st.data())
def test_dropping_a_condition_never_deactivates_a_parameter(space, seed, data):
    if not space.conditions:
        return
    dropped = data.draw(st.sampled_from(space.conditions))
    relaxed = ParameterSpace(space.parameters, [c for c in space.conditions if c != dropped], space.forbidden)
    assignment = {p.name: p.default for p in space.parameters}
    assignment.update(sample_random(space, seed))

    assert active_parameters(space, assignment) <= active_parameters(relaxed, assignment)
