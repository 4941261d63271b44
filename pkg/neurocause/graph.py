"""Causal DAGs over role-tagged variables and d-separation queries.

A Dag is immutable: it is validated once on construction (unique names,
at most one stimulus and one response, acyclic, no edge into a randomized
stimulus, no feature child of the response) and afterwards only queried.

Two independent d-separation implementations live here:
- ``d_separated`` walks active trails (the reachability / "Bayes ball"
  formulation) directly on the parent and child maps;
- ``d_separated_moral`` takes the ancestral subgraph, moralizes it with
  networkx and checks undirected separation. It exists to cross-check the
  first one.
"""

from __future__ import annotations

import itertools
import logging
from collections import deque
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Protocol

import networkx as nx

from neurocause.errors import InputError

logger = logging.getLogger(__name__)

type Edge = tuple[str, str]

EDGE_ARROW = "->"


class VariableRole(StrEnum):
    """Role of a variable in the experiment."""

    STIMULUS = "stimulus"
    RESPONSE = "response"
    FEATURE = "feature"
    HIDDEN = "hidden"


class Verdict(StrEnum):
    """Outcome of a (conditional) independence query."""

    INDEPENDENT = "independent"
    DEPENDENT = "dependent"


@dataclass(frozen=True, slots=True)
class Variable:
    """A named variable with its experimental role."""

    name: str
    role: VariableRole

    def __post_init__(self) -> None:
        if not self.name or any(ch.isspace() for ch in self.name):
            raise InputError(f"Invalid variable name: {self.name!r}")
        if ":" in self.name or EDGE_ARROW in self.name or self.name == "|":
            raise InputError(f"Reserved characters in variable name: {self.name!r}")
        if not isinstance(self.role, VariableRole):
            try:
                object.__setattr__(self, "role", VariableRole(self.role))
            except ValueError:
                raise InputError(f"Unknown role {self.role!r} for {self.name}") from None

    @property
    def observed(self) -> bool:
        return self.role is not VariableRole.HIDDEN


@dataclass(frozen=True, slots=True)
class Dag:
    """Directed acyclic causal graph over role-tagged variables.

    ``randomized`` marks the stimulus as experimentally randomized, which
    forbids any edge into it.
    """

    variables: tuple[Variable, ...]
    edges: frozenset[Edge] = frozenset()
    randomized: bool = False
    _index: dict[str, int] = field(init=False, repr=False, compare=False)
    _parents: dict[str, frozenset[str]] = field(init=False, repr=False, compare=False)
    _children: dict[str, frozenset[str]] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "edges", frozenset(tuple(e) for e in self.edges))
        self._build_index()
        self._validate()

    @classmethod
    def _unchecked(
        cls,
        variables: tuple[Variable, ...],
        edges: frozenset[Edge],
        randomized: bool = False,
    ) -> Dag:
        """Build a Dag whose invariants the caller already guarantees."""
        dag = object.__new__(cls)
        object.__setattr__(dag, "variables", variables)
        object.__setattr__(dag, "edges", edges)
        object.__setattr__(dag, "randomized", randomized)
        dag._build_index()
        return dag

    def _build_index(self) -> None:
        index = {var.name: i for i, var in enumerate(self.variables)}
        parents: dict[str, set[str]] = {var.name: set() for var in self.variables}
        children: dict[str, set[str]] = {var.name: set() for var in self.variables}
        for parent, child in self.edges:
            if parent not in index or child not in index:
                raise InputError(f"Edge {parent} -> {child} references an unknown variable")
            parents[child].add(parent)
            children[parent].add(child)
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_parents", {k: frozenset(v) for k, v in parents.items()})
        object.__setattr__(self, "_children", {k: frozenset(v) for k, v in children.items()})

    def _validate(self) -> None:
        if len(self._index) != len(self.variables):
            raise InputError("Duplicate variable names in Dag")
        roles = [var.role for var in self.variables]
        if roles.count(VariableRole.STIMULUS) > 1:
            raise InputError("A Dag holds at most one stimulus variable")
        if roles.count(VariableRole.RESPONSE) > 1:
            raise InputError("A Dag holds at most one response variable")
        for parent, child in self.edges:
            if parent == child:
                raise InputError(f"Self-loop on {parent}")
        stimulus = self.stimulus
        if self.randomized:
            if stimulus is None:
                raise InputError("randomized Dag without a stimulus variable")
            if self._parents[stimulus]:
                raise InputError(f"Randomized stimulus {stimulus} cannot have parents")
        response = self.response
        if response is not None:
            for child in self._children[response]:
                if self.role(child) is VariableRole.FEATURE:
                    raise InputError(f"Response {response} cannot cause feature {child}")
        if not nx.is_directed_acyclic_graph(self.to_networkx()):
            raise InputError("Edge relation contains a cycle")

    # --- Lookup ---

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(var.name for var in self.variables)

    @property
    def observed(self) -> tuple[str, ...]:
        """Names of the non-hidden variables, in declaration order."""
        return tuple(var.name for var in self.variables if var.observed)

    @property
    def hidden(self) -> tuple[str, ...]:
        return tuple(var.name for var in self.variables if not var.observed)

    @property
    def stimulus(self) -> str | None:
        return self._first_with_role(VariableRole.STIMULUS)

    @property
    def response(self) -> str | None:
        return self._first_with_role(VariableRole.RESPONSE)

    @property
    def features(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables if v.role is VariableRole.FEATURE)

    def _first_with_role(self, role: VariableRole) -> str | None:
        for var in self.variables:
            if var.role is role:
                return var.name
        return None

    def __contains__(self, name: object) -> bool:
        return name in self._index

    def position(self, name: str) -> int:
        """Return the declaration index of a variable."""
        self.require(name)
        return self._index[name]

    def role(self, name: str) -> VariableRole:
        return self.variables[self.position(name)].role

    def require(self, *names: str) -> None:
        """Raise InputError unless every name is a variable of this Dag."""
        for name in names:
            if name not in self._index:
                raise InputError(f"Unknown variable: {name}")

    def parents(self, name: str) -> frozenset[str]:
        self.require(name)
        return self._parents[name]

    def children(self, name: str) -> frozenset[str]:
        self.require(name)
        return self._children[name]

    def sorted_edges(self) -> list[Edge]:
        """Edges ordered by (parent position, child position)."""
        return sorted(self.edges, key=lambda e: (self._index[e[0]], self._index[e[1]]))

    def topological_order(self) -> tuple[str, ...]:
        """Parents before children, ties broken by declaration order."""
        try:
            order = nx.lexicographical_topological_sort(
                self.to_networkx(), key=self._index.__getitem__
            )
            return tuple(order)
        except nx.NetworkXUnfeasible as exc:
            raise InputError("Edge relation contains a cycle") from exc

    def ancestors(self, names: Iterable[str]) -> frozenset[str]:
        """All ancestors of the given nodes, the nodes themselves included."""
        seen: set[str] = set()
        stack = list(names)
        self.require(*stack)
        while stack:
            node = stack.pop()
            if node not in seen:
                seen.add(node)
                stack.extend(self._parents[node])
        return frozenset(seen)

    def descendants(self, name: str) -> frozenset[str]:
        """Strict descendants of a node."""
        self.require(name)
        seen: set[str] = set()
        stack = list(self._children[name])
        while stack:
            node = stack.pop()
            if node not in seen:
                seen.add(node)
                stack.extend(self._children[node])
        return frozenset(seen)

    def to_networkx(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        for var in self.variables:
            graph.add_node(var.name, role=var.role.value)
        graph.add_edges_from(self.edges)
        return graph


def is_ancestor(dag: Dag, a: str, b: str) -> bool:
    """True iff there is a directed path a -> ... -> b of length >= 1."""
    dag.require(a, b)
    return b in dag.descendants(a)


def markov_blanket(dag: Dag, target: str) -> frozenset[str]:
    """Parents, children and co-parents of ``target``."""
    blanket = set(dag.parents(target)) | set(dag.children(target))
    for child in dag.children(target):
        blanket |= dag.parents(child)
    blanket.discard(target)
    return frozenset(blanket)


# --- d-separation ---


def _check_query(dag: Dag, a: str, b: str, given: frozenset[str]) -> None:
    dag.require(a, b, *given)
    if a == b:
        raise InputError(f"d-separation query needs two distinct variables, got {a} twice")
    if a in given or b in given:
        raise InputError(f"Query endpoints {a}, {b} must not be conditioned on")


def d_separated(dag: Dag, a: str, b: str, given: Iterable[str] = ()) -> bool:
    """Return True iff every path between a and b is blocked given ``given``.

    Chains and forks are blocked when the middle node is conditioned on;
    colliders are blocked unless the collider or one of its descendants is.
    """
    conditioned = frozenset(given)
    _check_query(dag, a, b, conditioned)
    # A collider is open iff it is an ancestor of the conditioning set.
    open_colliders = dag.ancestors(conditioned)

    # Trail state: (node, arrived_from_child). "Up" means we reached the node
    # from one of its children, "down" from one of its parents.
    queue: deque[tuple[str, bool]] = deque([(a, True)])
    visited: set[tuple[str, bool]] = set()
    while queue:
        node, up = queue.popleft()
        if (node, up) in visited:
            continue
        visited.add((node, up))
        if node == b and node not in conditioned:
            return False
        if up:
            if node not in conditioned:
                queue.extend((p, True) for p in dag.parents(node))
                queue.extend((c, False) for c in dag.children(node))
        else:
            if node not in conditioned:
                queue.extend((c, False) for c in dag.children(node))
            if node in open_colliders:
                queue.extend((p, True) for p in dag.parents(node))
    return True


def d_separated_moral(dag: Dag, a: str, b: str, given: Iterable[str] = ()) -> bool:
    """Moralization criterion: ancestral subgraph, moralize, remove ``given``."""
    conditioned = frozenset(given)
    _check_query(dag, a, b, conditioned)
    ancestral = dag.ancestors({a, b} | conditioned)
    moral = nx.moral_graph(dag.to_networkx().subgraph(ancestral))
    moral.remove_nodes_from(conditioned)
    return not nx.has_path(moral, a, b)


# --- Independence statements ---


@dataclass(frozen=True, slots=True)
class CiStatement:
    """A (conditional) independence observation ``lhs ⊥ rhs | given``."""

    lhs: str
    rhs: str
    given: frozenset[str] = frozenset()
    verdict: Verdict = Verdict.INDEPENDENT

    def __post_init__(self) -> None:
        object.__setattr__(self, "given", frozenset(self.given))
        if not isinstance(self.verdict, Verdict):
            object.__setattr__(self, "verdict", Verdict(self.verdict))
        if self.lhs == self.rhs:
            raise InputError(f"Statement relates {self.lhs} to itself")
        if self.lhs in self.given or self.rhs in self.given:
            raise InputError(f"Statement endpoints must not be conditioned on: {self}")

    @property
    def independent(self) -> bool:
        return self.verdict is Verdict.INDEPENDENT

    @property
    def key(self) -> tuple[frozenset[str], frozenset[str]]:
        """Order-free identity of the query (pair, conditioning set)."""
        return frozenset((self.lhs, self.rhs)), self.given

    def __str__(self) -> str:
        token = "indep" if self.independent else "dep"
        text = f"{token} {self.lhs} {self.rhs}"
        if self.given:
            text += " | " + " ".join(sorted(self.given))
        return text


def parse_statement(line: str) -> CiStatement:
    """Parse ``indep A B | C D`` or ``dep A B`` into a CiStatement."""
    head, _, tail = line.partition("|")
    tokens = head.split()
    if len(tokens) != 3 or tokens[0] not in ("indep", "dep"):
        raise InputError(f"Malformed statement: {line.strip()!r}")
    verdict = Verdict.INDEPENDENT if tokens[0] == "indep" else Verdict.DEPENDENT
    return CiStatement(tokens[1], tokens[2], frozenset(tail.split()), verdict)


def conditioning_queries(observed: Sequence[str]) -> Iterator[tuple[str, str, frozenset[str]]]:
    """Every unordered pair with every subset of the remaining variables.

    Pairs follow the given order; subsets grow by size, lexicographically
    within a size.
    """
    for a, b in itertools.combinations(observed, 2):
        rest = [v for v in observed if v not in (a, b)]
        for size in range(len(rest) + 1):
            for subset in itertools.combinations(rest, size):
                yield a, b, frozenset(subset)


def implied_ci_statements(dag: Dag, observed: Sequence[str] | None = None) -> list[CiStatement]:
    """All independence statements the graph implies over ``observed``."""
    names = dag.observed if observed is None else tuple(observed)
    dag.require(*names)
    for name in names:
        if dag.role(name) is VariableRole.HIDDEN:
            raise InputError(f"Hidden variable {name} cannot be observed")
    return [
        CiStatement(
            a,
            b,
            given,
            Verdict.INDEPENDENT if d_separated(dag, a, b, given) else Verdict.DEPENDENT,
        )
        for a, b, given in conditioning_queries(names)
    ]


class CiProvider(Protocol):
    """Anything that answers (a ⊥ b | Z) queries over observed variables.

    ``alpha`` is None for exact oracles and the significance level for
    statistical providers.
    """

    @property
    def variables(self) -> tuple[str, ...]: ...

    @property
    def alpha(self) -> float | None: ...

    def query(self, a: str, b: str, given: Iterable[str] = ()) -> CiStatement: ...


@dataclass(frozen=True, slots=True)
class GraphOracle:
    """Exact CI provider reading independences off the true graph."""

    dag: Dag

    @property
    def variables(self) -> tuple[str, ...]:
        return self.dag.observed

    @property
    def alpha(self) -> float | None:
        return None

    def query(self, a: str, b: str, given: Iterable[str] = ()) -> CiStatement:
        conditioned = frozenset(given)
        for name in (a, b, *conditioned):
            if self.dag.role(name) is VariableRole.HIDDEN:
                raise InputError(f"Oracle query touches hidden variable {name}")
        separated = d_separated(self.dag, a, b, conditioned)
        return CiStatement(
            a, b, conditioned, Verdict.INDEPENDENT if separated else Verdict.DEPENDENT
        )


# --- Constraints on candidate structures ---


@dataclass(frozen=True, slots=True)
class RandomizedRoot:
    """The variable is experimentally randomized: nothing points into it."""

    variable: str

    def __str__(self) -> str:
        return f"randomized-root:{self.variable}"


@dataclass(frozen=True, slots=True)
class NoOutgoingToFeatures:
    """The variable (a response) has no feature children."""

    variable: str

    def __str__(self) -> str:
        return f"no-outgoing-to-features:{self.variable}"


@dataclass(frozen=True, slots=True)
class CausalSufficiency:
    """No unobserved common causes."""

    def __str__(self) -> str:
        return "causal-sufficiency"


@dataclass(frozen=True, slots=True)
class MaxHidden:
    """Allow up to ``count`` latent root variables in candidate structures."""

    count: int

    def __post_init__(self) -> None:
        if self.count < 0:
            raise InputError(f"MaxHidden count must be nonnegative, got {self.count}")

    def __str__(self) -> str:
        return f"max-hidden:{self.count}"


type StructuralConstraint = RandomizedRoot | NoOutgoingToFeatures | CausalSufficiency | MaxHidden


def parse_constraint(text: str) -> StructuralConstraint:
    """Parse the ``kind[:argument]`` form produced by ``str(constraint)``."""
    kind, _, arg = text.strip().partition(":")
    match kind:
        case "randomized-root" if arg:
            return RandomizedRoot(arg)
        case "no-outgoing-to-features" if arg:
            return NoOutgoingToFeatures(arg)
        case "causal-sufficiency" if not arg:
            return CausalSufficiency()
        case "max-hidden" if arg.isdigit():
            return MaxHidden(int(arg))
    raise InputError(f"Unknown structural constraint: {text!r}")


# --- Edge-list text format ---


def dag_to_text(dag: Dag) -> str:
    """Serialize as a ``name role`` header block, a blank line, then edges."""
    lines = []
    for var in dag.variables:
        line = f"{var.name} {var.role.value}"
        if dag.randomized and var.role is VariableRole.STIMULUS:
            line += " randomized"
        lines.append(line)
    lines.append("")
    lines.extend(f"{p} {EDGE_ARROW} {c}" for p, c in dag.sorted_edges())
    return "\n".join(lines) + "\n"


def dag_from_text(text: str) -> Dag:
    """Parse the format written by ``dag_to_text``."""
    header, _, body = text.partition("\n\n")
    variables: list[Variable] = []
    randomized = False
    for line in header.splitlines():
        tokens = line.split()
        if not tokens:
            continue
        if len(tokens) == 3 and tokens[2] == "randomized":
            randomized = True
        elif len(tokens) != 2:
            raise InputError(f"Malformed variable line: {line!r}")
        variables.append(Variable(tokens[0], tokens[1]))  # type: ignore[arg-type]
    edges: set[Edge] = set()
    for line in body.splitlines():
        if not line.strip():
            continue
        parent, arrow, child = line.partition(EDGE_ARROW)
        if not arrow or not parent.strip() or not child.strip():
            raise InputError(f"Malformed edge line: {line!r}")
        edges.add((parent.strip(), child.strip()))
    return Dag(tuple(variables), frozenset(edges), randomized=randomized)


def format_edges(edges: Iterable[Edge], order: Sequence[str] | None = None) -> list[str]:
    """Render edges as ``a -> b`` lines, sorted by ``order`` when given."""
    if order is not None:
        rank = {name: i for i, name in enumerate(order)}
        last = len(rank)
        ordered = sorted(
            edges, key=lambda e: (rank.get(e[0], last), rank.get(e[1], last), e)
        )
    else:
        ordered = sorted(edges)
    return [f"{p} {EDGE_ARROW} {c}" for p, c in ordered]
