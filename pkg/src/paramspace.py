"""
Parameter configuration spaces: parsing, validation and sampling.

A space is declared in a line-oriented DSL:

    NAME integer [LO, HI] [DEFAULT]
    NAME real [LO, HI] [DEFAULT] log
    NAME {V1, V2, ...} [DEFAULT]          # Boolean = {true, false}
    CHILD | PARENT in {V1, V2, ...}       # condition
    {NAME1=V1, NAME2=V2}                  # forbidden clause

Every ParameterSpace is backed by a ConfigSpace ConfigurationSpace, which
draws parameter values and checks configurations for activation and
forbidden clauses. Spaces can also be exchanged with other configurators
in ConfigSpace's pcs_new format (`write_pcs`, `read_pcs`).

Example usage:
    space = load_space("data/spaces/v8_partial.pcs")
    default = default_config(space)
    candidate = sample_random(space, 42)
    changes = config_diff(default, candidate)
"""

import hashlib
import math
import re
from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from types import MappingProxyType
from typing import Dict, Iterable, Iterator, List, NamedTuple, Optional, Sequence, Set, Tuple, Union

import ConfigSpace as CS
import numpy as np
from ConfigSpace.exceptions import (
    ActiveHyperparameterNotSetError,
    ForbiddenValueError,
    IllegalValueError,
    InactiveHyperparameterSetError,
)
from ConfigSpace.read_and_write import pcs_new

Value = Union[str, int, float]
SeedLike = Union[int, np.random.Generator, np.random.RandomState, None]

MAX_REJECTION_ATTEMPTS = 10_000


# ============================================================================
# ERRORS
# ============================================================================

class SpaceError(ValueError):
    """Base class for invalid space declarations."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        location = ""
        if line is not None:
            location = f"line {line}, column {column or 1}: "
        super().__init__(f"{location}{message}")


class SpaceSyntaxError(SpaceError):
    """A DSL line matches none of the declaration forms."""


class UnknownParameterError(SpaceError):
    """A condition or forbidden clause names an undeclared parameter."""


class DomainError(SpaceError):
    """A range, default or referenced value is inconsistent with its domain."""


class CyclicConditionError(SpaceError):
    """Conditions form a cycle."""


class InvalidConfigurationError(ValueError):
    """Base class for configurations that are not members of a space."""


class MissingParameterError(InvalidConfigurationError):
    """An active parameter has no value."""


class ExtraParameterError(InvalidConfigurationError):
    """A value is given for an inactive or unknown parameter."""


class OutOfDomainError(InvalidConfigurationError):
    """A value lies outside its parameter's domain."""


class ForbiddenConfigurationError(InvalidConfigurationError):
    """The assignment fully satisfies a forbidden clause."""


class SpaceMismatchError(ValueError):
    """Two configurations (or a configuration and a model) belong to different spaces."""


class OverConstrainedSpaceError(RuntimeError):
    """Rejection sampling ran out of attempts."""


class _Inactive(Enum):
    INACTIVE = "inactive"

    def __repr__(self) -> str:
        return "inactive"

    def __str__(self) -> str:
        return "inactive"


INACTIVE = _Inactive.INACTIVE


# ============================================================================
# DOMAIN TYPES
# ============================================================================

class DomainKind(str, Enum):
    CATEGORICAL = "categorical"
    INTEGER = "integer"
    REAL = "real"


def format_value(value: Value) -> str:
    """Shortest round-trip text for a parameter value."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


@dataclass(frozen=True)
class Parameter:
    """A named parameter with a Boolean, categorical, integer or real domain."""

    name: str
    kind: DomainKind
    default: Value
    values: Tuple[str, ...] = ()
    lower: Optional[float] = None
    upper: Optional[float] = None
    log: bool = False

    def __post_init__(self):
        if self.kind == DomainKind.CATEGORICAL:
            if not self.values:
                raise DomainError(f"parameter '{self.name}' has an empty value list")
            if len(set(self.values)) != len(self.values):
                raise DomainError(f"parameter '{self.name}' repeats a value")
            if set(self.values) == {"true", "false"}:
                object.__setattr__(self, "values", ("true", "false"))
        else:
            if self.lower is None or self.upper is None:
                raise DomainError(f"parameter '{self.name}' needs both bounds")
            if self.lower > self.upper:
                raise DomainError(
                    f"parameter '{self.name}': lower bound {format_value(self.lower)} "
                    f"exceeds upper bound {format_value(self.upper)}"
                )
            if self.log and self.kind != DomainKind.REAL:
                raise DomainError(f"parameter '{self.name}': only real parameters can be log-scaled")
            if self.log and self.lower <= 0:
                raise DomainError(f"parameter '{self.name}': log-scaled range must be positive")
        object.__setattr__(self, "default", self.coerce(self.default, error=DomainError))

    # Constructors -----------------------------------------------------------

    @classmethod
    def boolean(cls, name: str, default: Union[bool, str]) -> "Parameter":
        return cls(name, DomainKind.CATEGORICAL, format_value(default) if isinstance(default, bool) else default,
                   values=("true", "false"))

    @classmethod
    def categorical(cls, name: str, values: Sequence[str], default: str) -> "Parameter":
        return cls(name, DomainKind.CATEGORICAL, default, values=tuple(str(v) for v in values))

    @classmethod
    def integer(cls, name: str, lower: int, upper: int, default: int) -> "Parameter":
        return cls(name, DomainKind.INTEGER, default, lower=int(lower), upper=int(upper))

    @classmethod
    def real(cls, name: str, lower: float, upper: float, default: float, log: bool = False) -> "Parameter":
        return cls(name, DomainKind.REAL, default, lower=float(lower), upper=float(upper), log=log)

    @classmethod
    def from_hyperparameter(cls, hp) -> "Parameter":
        """Convert a ConfigSpace hyperparameter (as produced by pcs_new) to a Parameter."""
        if isinstance(hp, CS.CategoricalHyperparameter):
            return cls.categorical(hp.name, [format_value(v) for v in hp.choices], format_value(hp.default_value))
        if isinstance(hp, CS.OrdinalHyperparameter):
            return cls.categorical(hp.name, [format_value(v) for v in hp.sequence], format_value(hp.default_value))
        if isinstance(hp, CS.UniformIntegerHyperparameter):
            if hp.log:
                raise DomainError(f"parameter '{hp.name}': only real parameters can be log-scaled")
            return cls.integer(hp.name, int(hp.lower), int(hp.upper), int(hp.default_value))
        if isinstance(hp, CS.UniformFloatHyperparameter):
            return cls.real(hp.name, float(hp.lower), float(hp.upper), float(hp.default_value), log=bool(hp.log))
        if isinstance(hp, CS.Constant):
            return cls.categorical(hp.name, [format_value(hp.value)], format_value(hp.value))
        raise DomainError(f"parameter '{hp.name}': unsupported hyperparameter type {type(hp).__name__}")

    def to_hyperparameter(self):
        """A fresh ConfigSpace hyperparameter with this domain and default."""
        if self.kind == DomainKind.CATEGORICAL:
            return CS.CategoricalHyperparameter(self.name, list(self.values), default_value=self.default)
        if self.lower == self.upper:
            return CS.Constant(self.name, self.default)
        if self.kind == DomainKind.INTEGER:
            return CS.UniformIntegerHyperparameter(self.name, int(self.lower), int(self.upper),
                                                   default_value=self.default)
        return CS.UniformFloatHyperparameter(self.name, self.lower, self.upper, default_value=self.default,
                                             log=self.log)

    # Domain membership ------------------------------------------------------

    @property
    def is_boolean(self) -> bool:
        return self.kind == DomainKind.CATEGORICAL and self.values == ("true", "false")

    @property
    def is_numeric(self) -> bool:
        return self.kind != DomainKind.CATEGORICAL

    def coerce(self, value, error=OutOfDomainError) -> Value:
        """
        Convert a raw value (string, bool, number) to this domain's canonical type.

        Raises:
            error (OutOfDomainError by default) if the value is not in the domain
        """
        if self.kind == DomainKind.CATEGORICAL:
            text = format_value(value) if isinstance(value, (bool, float)) else str(value)
            if text not in self.values:
                raise error(f"value '{text}' is not in the domain of '{self.name}' {{{', '.join(self.values)}}}")
            return text

        try:
            if isinstance(value, bool):
                raise TypeError("Boolean value for a numeric parameter")
            if self.kind == DomainKind.INTEGER:
                if isinstance(value, float):
                    if not value.is_integer():
                        raise ValueError("non-integral value")
                    number: Value = int(value)
                else:
                    number = int(str(value).strip()) if isinstance(value, str) else int(value)
            else:
                number = float(value)
                if math.isnan(number):
                    raise ValueError("NaN")
        except (TypeError, ValueError) as e:
            raise error(f"value '{value}' is not a valid {self.kind.value} for '{self.name}'") from e

        if not self.lower <= number <= self.upper:
            raise error(
                f"value {format_value(number)} is outside [{format_value(self._bound(self.lower))}, "
                f"{format_value(self._bound(self.upper))}] for '{self.name}'"
            )
        return number

    def contains(self, value) -> bool:
        try:
            self.coerce(value)
        except OutOfDomainError:
            return False
        return True

    def _bound(self, bound: float) -> Value:
        return int(bound) if self.kind == DomainKind.INTEGER else float(bound)

    def from_sample(self, raw) -> Value:
        """Canonical value for a draw from this parameter's hyperparameter."""
        if self.kind == DomainKind.CATEGORICAL:
            return self.coerce(raw)
        if self.kind == DomainKind.INTEGER:
            return self.coerce(int(round(float(raw))))
        return self.coerce(min(max(float(raw), self.lower), self.upper))

    # Encoding ---------------------------------------------------------------

    def normalize(self, value: Value) -> float:
        """Map a numeric value to [0, 1] (in log space when log-scaled)."""
        if self.kind == DomainKind.CATEGORICAL:
            return float(self.values.index(value))
        if self.upper == self.lower:
            return 0.0
        if self.log:
            low, high = math.log10(self.lower), math.log10(self.upper)
            return (math.log10(value) - low) / (high - low)
        return (value - self.lower) / (self.upper - self.lower)

    def denormalize(self, unit: float) -> Value:
        unit = min(max(unit, 0.0), 1.0)
        if self.kind == DomainKind.INTEGER:
            return int(round(self.lower + unit * (self.upper - self.lower)))
        if self.log:
            low, high = math.log10(self.lower), math.log10(self.upper)
            return float(min(max(10 ** (low + unit * (high - low)), self.lower), self.upper))
        return float(self.lower + unit * (self.upper - self.lower))

    def render(self) -> str:
        """DSL line declaring this parameter."""
        if self.kind == DomainKind.CATEGORICAL:
            return f"{self.name} {{{', '.join(self.values)}}} [{self.default}]"
        line = (
            f"{self.name} {self.kind.value} [{format_value(self._bound(self.lower))}, "
            f"{format_value(self._bound(self.upper))}] [{format_value(self.default)}]"
        )
        return line + " log" if self.log else line


@dataclass(frozen=True)
class Condition:
    """`child` is active only while `parent` holds one of `values`."""

    child: str
    parent: str
    values: Tuple[Value, ...]

    def __post_init__(self):
        if self.child == self.parent:
            raise CyclicConditionError(f"parameter '{self.child}' cannot condition itself")
        if not self.values:
            raise DomainError(f"condition on '{self.child}' has no activating values")

    def render(self) -> str:
        return f"{self.child} | {self.parent} in {{{', '.join(format_value(v) for v in self.values)}}}"


@dataclass(frozen=True)
class ForbiddenClause:
    """A combination of assignments no valid configuration may hold simultaneously."""

    assignments: Tuple[Tuple[str, Value], ...]

    def __post_init__(self):
        if not self.assignments:
            raise DomainError("forbidden clause must assign at least one parameter")
        object.__setattr__(self, "assignments", tuple(sorted(self.assignments, key=lambda item: item[0])))

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(name for name, _ in self.assignments)

    def is_satisfied_by(self, values: Mapping) -> bool:
        return all(name in values and values[name] == value for name, value in self.assignments)

    def render(self) -> str:
        return "{" + ", ".join(f"{name}={format_value(value)}" for name, value in self.assignments) + "}"


class ParameterSpace:
    """
    Immutable collection of parameters, conditions and forbidden clauses.

    Construction validates every invariant: unique names, known references,
    in-domain values, acyclic single-parent conditions and a default
    configuration that no forbidden clause excludes. The equivalent
    ConfigSpace ConfigurationSpace is built once and never mutated.
    """

    def __init__(
        self,
        parameters: Iterable[Parameter],
        conditions: Iterable[Condition] = (),
        forbidden: Iterable[ForbiddenClause] = (),
    ):
        self._parameters: Tuple[Parameter, ...] = tuple(parameters)
        self._by_name: Dict[str, Parameter] = {}
        for param in self._parameters:
            if param.name in self._by_name:
                raise DomainError(f"duplicate parameter '{param.name}'")
            self._by_name[param.name] = param

        self._conditions: Tuple[Condition, ...] = tuple(self._checked_condition(c) for c in conditions)
        self._condition_of: Dict[str, Condition] = {}
        for cond in self._conditions:
            if cond.child in self._condition_of:
                raise DomainError(f"parameter '{cond.child}' already has a parent condition")
            self._condition_of[cond.child] = cond

        self._forbidden: Tuple[ForbiddenClause, ...] = tuple(self._checked_clause(f) for f in forbidden)
        self._order: Tuple[str, ...] = self._topological_order()
        self._fingerprint = hashlib.sha1(render_space(self).encode("utf-8")).hexdigest()[:16]

        defaults = self._resolve({})
        for clause in self._forbidden:
            if clause.is_satisfied_by(defaults):
                raise DomainError(f"default configuration violates forbidden clause {clause.render()}")
        self._hyperparameters, self._configspace = self._build_configspace()

    def _checked_condition(self, cond: Condition) -> Condition:
        for name in (cond.child, cond.parent):
            if name not in self._by_name:
                raise UnknownParameterError(f"condition references unknown parameter '{name}'")
        parent = self._by_name[cond.parent]
        values = tuple(parent.coerce(v, error=DomainError) for v in cond.values)
        return Condition(cond.child, cond.parent, values)

    def _checked_clause(self, clause: ForbiddenClause) -> ForbiddenClause:
        assignments = []
        for name, value in clause.assignments:
            if name not in self._by_name:
                raise UnknownParameterError(f"forbidden clause references unknown parameter '{name}'")
            assignments.append((name, self._by_name[name].coerce(value, error=DomainError)))
        return ForbiddenClause(tuple(assignments))

    def _topological_order(self) -> Tuple[str, ...]:
        # parents before children, ties broken by declaration order
        depth: Dict[str, int] = {}
        for param in self._parameters:
            node, hops = param.name, 0
            while node in self._condition_of:
                node, hops = self._condition_of[node].parent, hops + 1
                if hops > len(self._parameters):
                    raise CyclicConditionError(f"conditions form a cycle through '{param.name}'")
            depth[param.name] = hops
        index = {p.name: i for i, p in enumerate(self._parameters)}
        return tuple(sorted(depth, key=lambda name: (depth[name], index[name])))

    def _build_configspace(self):
        hyperparameters = {p.name: p.to_hyperparameter() for p in self._parameters}
        space = CS.ConfigurationSpace()
        try:
            space.add(*hyperparameters.values())
            for cond in self._conditions:
                space.add(CS.InCondition(hyperparameters[cond.child], hyperparameters[cond.parent],
                                         list(cond.values)))
            for clause in self._forbidden:
                parts = [CS.ForbiddenEqualsClause(hyperparameters[name], value) for name, value in clause.assignments]
                space.add(parts[0] if len(parts) == 1 else CS.ForbiddenAndConjunction(*parts))
        except ValueError as e:
            raise DomainError(f"space rejected by ConfigSpace: {e}") from e
        return MappingProxyType(hyperparameters), space

    # Accessors --------------------------------------------------------------

    @property
    def parameters(self) -> Tuple[Parameter, ...]:
        return self._parameters

    @property
    def conditions(self) -> Tuple[Condition, ...]:
        return self._conditions

    @property
    def forbidden(self) -> Tuple[ForbiddenClause, ...]:
        return self._forbidden

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(p.name for p in self._parameters)

    @property
    def topological_order(self) -> Tuple[str, ...]:
        return self._order

    @property
    def fingerprint(self) -> str:
        return self._fingerprint

    @property
    def configspace(self) -> CS.ConfigurationSpace:
        """The backing ConfigSpace space (read-only by convention)."""
        return self._configspace

    def condition_for(self, name: str) -> Optional[Condition]:
        return self._condition_of.get(name)

    def is_forbidden(self, values: Mapping) -> bool:
        return any(clause.is_satisfied_by(values) for clause in self._forbidden)

    def draw(self, name: str, size: int, state: np.random.RandomState) -> List[Value]:
        """`size` values of `name` drawn by its ConfigSpace hyperparameter."""
        raw = np.atleast_1d(self._hyperparameters[name].sample_value(size=size, seed=state))
        return [self._by_name[name].from_sample(value) for value in raw]

    def check(self, values: Mapping) -> None:
        """
        Check typed values with ConfigSpace.

        Raises:
            MissingParameterError, ExtraParameterError, OutOfDomainError,
            ForbiddenConfigurationError
        """
        try:
            CS.Configuration(self._configspace, values=dict(values))
        except ActiveHyperparameterNotSetError as e:
            raise MissingParameterError(f"missing active parameter: {e}") from e
        except InactiveHyperparameterSetError as e:
            raise ExtraParameterError(f"value given for an inactive parameter: {e}") from e
        except ForbiddenValueError as e:
            clause = next((c.render() for c in self._forbidden if c.is_satisfied_by(values)), str(e))
            raise ForbiddenConfigurationError(f"configuration satisfies forbidden clause {clause}") from e
        except IllegalValueError as e:
            raise OutOfDomainError(str(e)) from e

    def __getitem__(self, name: str) -> Parameter:
        return self._by_name[name]

    def __contains__(self, name: object) -> bool:
        return name in self._by_name

    def __len__(self) -> int:
        return len(self._parameters)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ParameterSpace):
            return NotImplemented
        return (
            self._parameters == other._parameters
            and self._conditions == other._conditions
            and self._forbidden == other._forbidden
        )

    def __hash__(self) -> int:
        return hash(self._fingerprint)

    def __repr__(self) -> str:
        return (
            f"ParameterSpace({len(self._parameters)} parameters, "
            f"{len(self._conditions)} conditions, {len(self._forbidden)} forbidden)"
        )

    def _is_activated(self, name: str, values: Mapping) -> bool:
        cond = self._condition_of.get(name)
        return cond is None or (cond.parent in values and values[cond.parent] in cond.values)

    def _resolve(self, values: Mapping, fill: Optional[Mapping] = None) -> Dict[str, Value]:
        """Walk the activation order, keeping given values and filling newly active ones."""
        resolved: Dict[str, Value] = {}
        for name in self._order:
            if not self._is_activated(name, resolved):
                continue
            if name in values:
                resolved[name] = values[name]
            elif fill is not None and name in fill:
                resolved[name] = fill[name]
            else:
                resolved[name] = self._by_name[name].default
        return resolved


class Configuration(Mapping):
    """
    Assignment of values to exactly the active parameters of a space.

    Instances come from `default_config`, `sample_random` or `validate_config`.
    Equality and hashing use the canonical serialization.
    """

    __slots__ = ("_values", "_canonical", "_space_fingerprint")

    def __init__(self, values: Mapping, space_fingerprint: str):
        ordered = {name: values[name] for name in sorted(values)}
        self._values = MappingProxyType(ordered)
        self._canonical = " ".join(f"{name}={format_value(value)}" for name, value in ordered.items())
        self._space_fingerprint = space_fingerprint

    @property
    def canonical(self) -> str:
        return self._canonical

    @property
    def config_id(self) -> str:
        """Short stable identifier derived from the canonical form."""
        return hashlib.sha1(self._canonical.encode("utf-8")).hexdigest()[:12]

    @property
    def space_fingerprint(self) -> str:
        return self._space_fingerprint

    def as_dict(self) -> Dict[str, Value]:
        return dict(self._values)

    def __getitem__(self, name: str) -> Value:
        return self._values[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._values)

    def __len__(self) -> int:
        return len(self._values)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Configuration):
            return NotImplemented
        return self._canonical == other._canonical

    def __hash__(self) -> int:
        return hash(self._canonical)

    def __lt__(self, other: "Configuration") -> bool:
        return self._canonical < other._canonical

    def __repr__(self) -> str:
        return f"Configuration({self._canonical!r})"


class ConfigChange(NamedTuple):
    name: str
    old: Union[Value, _Inactive]
    new: Union[Value, _Inactive]


# ============================================================================
# DSL
# ============================================================================

_NAME = r"[A-Za-z_][A-Za-z0-9_.\-]*"
_NUMERIC_RE = re.compile(
    rf"^(?P<name>{_NAME})\s+(?P<kind>integer|real)\s*"
    r"\[\s*(?P<lo>[^,\]\s]+)\s*,\s*(?P<hi>[^\]\s]+)\s*\]\s*"
    r"\[\s*(?P<default>[^\]\s]+)\s*\]\s*(?P<log>log)?$"
)
_CATEGORICAL_RE = re.compile(
    rf"^(?P<name>{_NAME})\s*\{{(?P<values>[^}}]*)\}}\s*\[\s*(?P<default>[^\]\s]+)\s*\]$"
)
_CONDITION_RE = re.compile(
    rf"^(?P<child>{_NAME})\s*\|\s*(?P<parent>{_NAME})\s+in\s*\{{(?P<values>[^}}]*)\}}$"
)
_FORBIDDEN_RE = re.compile(r"^\{(?P<body>[^}]*)\}$")
_TOKEN_RE = re.compile(r"^[^\s,{}=\[\]#|]+$")


@dataclass
class _Declarations:
    parameters: List[Tuple[Parameter, int, int]] = field(default_factory=list)
    conditions: List[Tuple[str, str, List[str], int, int]] = field(default_factory=list)
    forbidden: List[Tuple[List[Tuple[str, str]], int, int]] = field(default_factory=list)


def _split_tokens(body: str, line: int, column: int) -> List[str]:
    tokens = [t.strip() for t in body.split(",")]
    if not tokens or any(not _TOKEN_RE.match(t) for t in tokens):
        raise SpaceSyntaxError("expected a comma-separated list of values", line, column)
    return tokens


def _parse_number(token: str, kind: str, line: int, column: int) -> Union[int, float]:
    try:
        return int(token) if kind == "integer" else float(token)
    except ValueError as e:
        raise SpaceSyntaxError(f"'{token}' is not a valid {kind} literal", line, column) from e


def _parse_line(text: str, line: int, offset: int, decls: _Declarations):
    col = offset + 1
    match = _NUMERIC_RE.match(text)
    if match:
        kind = match["kind"]
        lo = _parse_number(match["lo"], kind, line, offset + match.start("lo") + 1)
        hi = _parse_number(match["hi"], kind, line, offset + match.start("hi") + 1)
        default = _parse_number(match["default"], kind, line, offset + match.start("default") + 1)
        try:
            if kind == "integer":
                if match["log"]:
                    raise DomainError("only real parameters can be log-scaled")
                param = Parameter.integer(match["name"], lo, hi, default)
            else:
                param = Parameter.real(match["name"], lo, hi, default, log=bool(match["log"]))
        except DomainError as e:
            raise DomainError(str(e), line, col) from e
        decls.parameters.append((param, line, col))
        return

    match = _CATEGORICAL_RE.match(text)
    if match:
        values = _split_tokens(match["values"], line, offset + match.start("values") + 1)
        try:
            param = Parameter.categorical(match["name"], values, match["default"])
        except DomainError as e:
            raise DomainError(str(e), line, offset + match.start("default") + 1) from e
        decls.parameters.append((param, line, col))
        return

    match = _CONDITION_RE.match(text)
    if match:
        values = _split_tokens(match["values"], line, offset + match.start("values") + 1)
        decls.conditions.append((match["child"], match["parent"], values, line, col))
        return

    match = _FORBIDDEN_RE.match(text)
    if match:
        assignments = []
        for part in match["body"].split(","):
            name, sep, value = part.partition("=")
            name, value = name.strip(), value.strip()
            if not sep or not re.fullmatch(_NAME, name) or not _TOKEN_RE.match(value):
                raise SpaceSyntaxError("expected NAME=VALUE inside a forbidden clause", line, col)
            assignments.append((name, value))
        decls.forbidden.append((assignments, line, col))
        return

    raise SpaceSyntaxError(f"unrecognized declaration '{text}'", line, col)


def parse_space(text: str) -> ParameterSpace:
    """
    Parse a space-DSL document.

    Declarations are checked line by line so that errors carry a location;
    the resulting ParameterSpace is then built on ConfigSpace.

    Args:
        text: DSL source, one declaration per line, '#' starts a comment

    Returns:
        ParameterSpace satisfying all space invariants

    Raises:
        SpaceSyntaxError, UnknownParameterError, DomainError, CyclicConditionError
        (each carrying line and column)
    """
    decls = _Declarations()
    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0].rstrip()
        stripped = content.lstrip()
        if not stripped:
            continue
        _parse_line(stripped, number, len(content) - len(stripped), decls)

    parameters = [param for param, _, _ in decls.parameters]
    seen: Dict[str, int] = {}
    for param, line, col in decls.parameters:
        if param.name in seen:
            raise DomainError(f"duplicate parameter '{param.name}' (first declared on line {seen[param.name]})",
                              line, col)
        seen[param.name] = line
    by_name = {p.name: p for p in parameters}

    conditions = []
    for child, parent, values, line, col in decls.conditions:
        for name in (child, parent):
            if name not in by_name:
                raise UnknownParameterError(f"condition references unknown parameter '{name}'", line, col)
        try:
            coerced = tuple(by_name[parent].coerce(v, error=DomainError) for v in values)
            conditions.append(Condition(child, parent, coerced))
        except SpaceError as e:
            raise type(e)(str(e), line, col) from e

    forbidden = []
    for assignments, line, col in decls.forbidden:
        coerced_items = []
        for name, value in assignments:
            if name not in by_name:
                raise UnknownParameterError(f"forbidden clause references unknown parameter '{name}'", line, col)
            try:
                coerced_items.append((name, by_name[name].coerce(value, error=DomainError)))
            except DomainError as e:
                raise DomainError(str(e), line, col) from e
        forbidden.append(ForbiddenClause(tuple(coerced_items)))

    parent_of: Dict[str, str] = {}
    for cond, (_, _, _, line, col) in zip(conditions, decls.conditions):
        if cond.child in parent_of:
            raise DomainError(f"parameter '{cond.child}' already has a parent condition", line, col)
        parent_of[cond.child] = cond.parent
    for cond, (_, _, _, line, col) in zip(conditions, decls.conditions):
        node, hops = cond.parent, 0
        while node in parent_of and hops <= len(parent_of):
            if node == cond.child:
                raise CyclicConditionError(f"condition on '{cond.child}' closes a cycle", line, col)
            node, hops = parent_of[node], hops + 1

    defaults = ParameterSpace(parameters, conditions)._resolve({})
    for clause, (_, line, col) in zip(forbidden, decls.forbidden):
        if clause.is_satisfied_by(defaults):
            raise DomainError(f"default configuration violates forbidden clause {clause.render()}", line, col)

    return ParameterSpace(parameters, conditions, forbidden)


def render_space(space: ParameterSpace) -> str:
    """Render a space back to DSL text; `parse_space(render_space(s)) == s`."""
    lines = [param.render() for param in space.parameters]
    lines.extend(cond.render() for cond in space.conditions)
    lines.extend(clause.render() for clause in space.forbidden)
    return "\n".join(lines) + "\n"


def load_space(path: Union[str, Path]) -> ParameterSpace:
    """Read and parse a space file."""
    return parse_space(Path(path).read_text(encoding="utf-8"))


def save_space(space: ParameterSpace, path: Union[str, Path]) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(render_space(space), encoding="utf-8")
    return target


# ============================================================================
# PCS_NEW INTERCHANGE
# ============================================================================

def from_configspace(configspace: CS.ConfigurationSpace) -> ParameterSpace:
    """
    Convert a ConfigSpace space to a ParameterSpace.

    Only single-parent `in`/`==` conditions and conjunctions of equality
    clauses are representable.

    Raises:
        DomainError: the space uses a construct the DSL cannot express
    """
    parameters = [Parameter.from_hyperparameter(hp) for hp in configspace.values()]
    by_name = {p.name: p for p in parameters}

    conditions = []
    for cond in configspace.get_conditions():
        if isinstance(cond, CS.InCondition):
            values = cond.values
        elif isinstance(cond, CS.EqualsCondition):
            values = [cond.value]
        else:
            raise DomainError(f"unsupported condition {cond}")
        parent = by_name[cond.parent.name]
        conditions.append(Condition(cond.child.name, cond.parent.name,
                                    tuple(parent.coerce(v, error=DomainError) for v in values)))

    forbidden = []
    for clause in configspace.get_forbiddens():
        parts = clause.components if isinstance(clause, CS.ForbiddenAndConjunction) else [clause]
        if not all(isinstance(p, CS.ForbiddenEqualsClause) for p in parts):
            raise DomainError(f"unsupported forbidden clause {clause}")
        forbidden.append(ForbiddenClause(tuple(
            (p.hyperparameter.name, by_name[p.hyperparameter.name].coerce(p.value, error=DomainError))
            for p in parts
        )))
    return ParameterSpace(parameters, conditions, forbidden)


def write_pcs(space: ParameterSpace) -> str:
    """The space in ConfigSpace's pcs_new format."""
    return pcs_new.write(space.configspace)


def read_pcs(text: str) -> ParameterSpace:
    """
    Parse a pcs_new document.

    Raises:
        SpaceSyntaxError: pcs_new could not read the text
        DomainError: the space uses a construct the DSL cannot express
    """
    try:
        configspace = pcs_new.read(text.splitlines())
    except Exception as e:  # pcs_new has no common error base
        raise SpaceSyntaxError(f"not a pcs_new document: {e}") from e
    return from_configspace(configspace)


# ============================================================================
# OPERATIONS
# ============================================================================

def _make_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.RandomState):
        return np.random.default_rng(int(seed.randint(2**31 - 1)))
    return np.random.default_rng(seed)


def _random_state(seed: SeedLike) -> np.random.RandomState:
    if isinstance(seed, np.random.RandomState):
        return seed
    if isinstance(seed, np.random.Generator):
        seed = int(seed.integers(2**63 - 1))
    return np.random.RandomState(np.random.MT19937(seed))


def default_config(space: ParameterSpace) -> Configuration:
    """All active parameters at their declared defaults."""
    defaults = space.configspace.get_default_configuration()
    return Configuration({name: space[name].coerce(value) for name, value in defaults.items()}, space.fingerprint)


def active_parameters(space: ParameterSpace, partial: Mapping) -> Set[str]:
    """
    Fixpoint of the activation relation for a (possibly partial) assignment.

    Raises:
        MissingParameterError: an unconditional parameter has no value
    """
    missing = [p.name for p in space.parameters if space.condition_for(p.name) is None and p.name not in partial]
    if missing:
        raise MissingParameterError(f"missing unconditional parameters: {', '.join(sorted(missing))}")
    active: Set[str] = set()
    for name in space.topological_order:
        cond = space.condition_for(name)
        if cond is None or (cond.parent in active and partial.get(cond.parent) in cond.values):
            active.add(name)
    return active


_MAX_BATCH = 1024


def sample_random(space: ParameterSpace, seed: SeedLike = None) -> Configuration:
    """
    Draw a configuration uniformly per domain, rejecting forbidden ones.

    Values come from the ConfigSpace hyperparameters and are drawn in
    topological order of the conditions so that only active parameters
    receive values. The same seed yields the same result.

    Raises:
        OverConstrainedSpaceError: 10,000 consecutive draws were all forbidden
    """
    state = _random_state(seed)
    attempts = 0
    batch = 1
    while attempts < MAX_REJECTION_ATTEMPTS:
        size = min(batch, MAX_REJECTION_ATTEMPTS - attempts)
        columns = {name: space.draw(name, size, state) for name in space.topological_order}
        for row in range(size):
            values: Dict[str, Value] = {}
            for name in space.topological_order:
                if space._is_activated(name, values):
                    values[name] = columns[name][row]
            if not space.is_forbidden(values):
                return Configuration(values, space.fingerprint)
        attempts += size
        batch = min(batch * 4, _MAX_BATCH)
    raise OverConstrainedSpaceError(
        f"no valid configuration after {MAX_REJECTION_ATTEMPTS} attempts; the forbidden clauses are too restrictive"
    )


def sample_configurations(space: ParameterSpace, n: int, seed: SeedLike = None) -> List[Configuration]:
    """A reproducible stream of `n` random configurations from one generator."""
    state = _random_state(seed)
    return [sample_random(space, state) for _ in range(n)]


def validate_config(space: ParameterSpace, candidate: Mapping) -> Configuration:
    """
    Check a raw mapping against the space and return its canonical Configuration.

    Values given as strings are coerced to the parameter's domain type, then
    ConfigSpace checks activation and forbidden clauses.

    Raises:
        ExtraParameterError: unknown parameter or value for an inactive parameter
        OutOfDomainError: value outside its domain
        MissingParameterError: active parameter without a value
        ForbiddenConfigurationError: a forbidden clause is fully satisfied
    """
    unknown = sorted(name for name in candidate if name not in space)
    if unknown:
        raise ExtraParameterError(f"unknown parameters: {', '.join(unknown)}")
    coerced = {name: space[name].coerce(value) for name, value in candidate.items()}
    space.check(coerced)
    return Configuration(coerced, space.fingerprint)


def parse_configuration(space: ParameterSpace, text: str) -> Configuration:
    """Parse a canonical `name=value name=value` serialization (any whitespace)."""
    candidate: Dict[str, str] = {}
    for token in text.split():
        name, sep, value = token.partition("=")
        if not sep or not name:
            raise InvalidConfigurationError(f"expected name=value, got '{token}'")
        if name in candidate:
            raise InvalidConfigurationError(f"parameter '{name}' assigned twice")
        candidate[name] = value
    return validate_config(space, candidate)


def load_configuration(space: ParameterSpace, path: Union[str, Path]) -> Configuration:
    return parse_configuration(space, Path(path).read_text(encoding="utf-8"))


def save_configuration(config: Configuration, path: Union[str, Path]) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(config.canonical + "\n", encoding="utf-8")
    return target


def config_diff(a: Configuration, b: Configuration) -> List[ConfigChange]:
    """
    Name-sorted differences between two configurations of the same space.

    Parameters active in only one configuration appear with INACTIVE on the
    other side. The list is empty iff a == b.
    """
    if a.space_fingerprint != b.space_fingerprint:
        raise SpaceMismatchError("configurations belong to different spaces")
    changes = []
    for name in sorted(set(a) | set(b)):
        old, new = a.get(name, INACTIVE), b.get(name, INACTIVE)
        if old != new:
            changes.append(ConfigChange(name, old, new))
    return changes


def reassign(
    space: ParameterSpace,
    base: Mapping,
    updates: Mapping,
    fill: Optional[Mapping] = None,
) -> Optional[Configuration]:
    """
    Apply `updates` to `base` and re-resolve activation.

    Parameters that become active take their value from `fill` when present,
    otherwise their default; parameters that become inactive are dropped.
    Returns None when the result is forbidden.
    """
    merged = dict(base)
    merged.update(updates)
    resolved = space._resolve(merged, fill)
    if space.is_forbidden(resolved):
        return None
    return Configuration(resolved, space.fingerprint)


_NEIGHBOUR_SCALES = (0.2, 0.05)


def neighbours(
    space: ParameterSpace,
    config: Configuration,
    rng: SeedLike = None,
    numeric_samples: int = 4,
) -> List[Configuration]:
    """
    Configurations differing from `config` in one parameter's value.

    Categorical parameters contribute every other value; numeric parameters
    contribute Gaussian moves in normalized space (plus the adjacent values
    for integers). Forbidden results are skipped.
    """
    rng = _make_rng(rng)
    found: Dict[str, Configuration] = {}
    for name in sorted(config):
        param = space[name]
        current = config[name]
        moves: List[Value] = []
        if param.kind == DomainKind.CATEGORICAL:
            moves = [v for v in param.values if v != current]
        else:
            unit = param.normalize(current)
            for i in range(numeric_samples):
                scale = _NEIGHBOUR_SCALES[i % len(_NEIGHBOUR_SCALES)]
                moves.append(param.denormalize(unit + rng.normal(0.0, scale)))
            if param.kind == DomainKind.INTEGER:
                moves.extend(v for v in (current - 1, current + 1) if param.lower <= v <= param.upper)
        for value in moves:
            if value == current:
                continue
            moved = reassign(space, config, {name: value})
            if moved is not None and moved != config:
                found.setdefault(moved.canonical, moved)
    return list(found.values())
