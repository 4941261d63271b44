"""Exhaustive structure search.

Enumerates every labeled DAG over a small variable set, optionally with
latent common causes, and keeps the ones whose d-separations agree with
a set of observed independence statements (faithfulness).

Enumeration order: nodes are visited in declaration order and each node's
parent set is an integer bitmask over declaration indices, tried in
ascending order. The yielded sequence is therefore lexicographic in
(parent mask of node 0, parent mask of node 1, ...). For each observed
structure the latent extensions follow, grouped by latent count.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from functools import lru_cache

from neurocause.errors import CapacityError, InputError
from neurocause.graph import (
    CausalSufficiency,
    CiStatement,
    Dag,
    Edge,
    MaxHidden,
    NoOutgoingToFeatures,
    RandomizedRoot,
    StructuralConstraint,
    Variable,
    VariableRole,
    conditioning_queries,
    d_separated,
)

logger = logging.getLogger(__name__)

ENUMERATION_CAP = 7  # observed variables
CATALOGUE_LIMIT = 4  # observed variables up to which implied independences are memoized
LATENT_NAME_PREFIXES = ("H", "U", "Latent")
MIN_LATENT_CHILDREN = 2


def _bits(mask: int) -> Iterator[int]:
    index = 0
    while mask:
        if mask & 1:
            yield index
        mask >>= 1
        index += 1


def normalize_variables(
    variables: Iterable[Variable | tuple[str, str | VariableRole]],
) -> tuple[Variable, ...]:
    """Accept Variables or (name, role) pairs."""
    result = tuple(v if isinstance(v, Variable) else Variable(v[0], v[1]) for v in variables)  # type: ignore[arg-type]
    names = [v.name for v in result]
    if len(set(names)) != len(names):
        raise InputError(f"Duplicate variable names: {names}")
    return result


@dataclass(frozen=True, slots=True)
class SearchPlan:
    """Validated enumeration parameters."""

    variables: tuple[Variable, ...]
    parent_options: tuple[tuple[int, ...], ...]
    randomized: bool
    max_hidden: int
    latent_child_options: tuple[int, ...]
    latent_names: tuple[str, ...]

    @classmethod
    def build(
        cls,
        variables: Iterable[Variable | tuple[str, str | VariableRole]],
        constraints: Iterable[StructuralConstraint] = (),
    ) -> SearchPlan:
        variables = normalize_variables(variables)
        constraints = tuple(constraints)
        if not variables:
            raise InputError("Enumeration needs at least one variable")
        for var in variables:
            if var.role is VariableRole.HIDDEN:
                raise InputError(
                    f"{var.name}: latent variables are introduced through MaxHidden, not declared"
                )
        if len(variables) > ENUMERATION_CAP:
            raise CapacityError(
                f"{len(variables)} variables exceed the enumeration cap of {ENUMERATION_CAP}"
            )

        index = {var.name: i for i, var in enumerate(variables)}
        roots: set[int] = set()
        blocked: set[Edge] = set()
        sufficiency = False
        hidden_limits: list[int] = []
        for constraint in constraints:
            match constraint:
                case RandomizedRoot(variable=name) | NoOutgoingToFeatures(variable=name) if (
                    name not in index
                ):
                    raise InputError(f"Constraint {constraint} references unknown variable {name}")
                case RandomizedRoot(variable=name):
                    roots.add(index[name])
                case NoOutgoingToFeatures(variable=name):
                    blocked.update(
                        (name, v.name) for v in variables if v.role is VariableRole.FEATURE
                    )
                case CausalSufficiency():
                    sufficiency = True
                case MaxHidden(count=count):
                    hidden_limits.append(count)
                case _:
                    raise InputError(f"Unsupported constraint: {constraint!r}")
        if len(hidden_limits) > 1:
            raise InputError("At most one MaxHidden constraint")
        max_hidden = hidden_limits[0] if hidden_limits else 0
        if sufficiency and max_hidden > 0:
            raise InputError("CausalSufficiency contradicts MaxHidden > 0")

        # Dag itself forbids feature children of the response.
        response = next((v.name for v in variables if v.role is VariableRole.RESPONSE), None)
        if response is not None:
            blocked.update((response, v.name) for v in variables if v.role is VariableRole.FEATURE)

        options: list[tuple[int, ...]] = []
        for child_idx, child in enumerate(variables):
            allowed = 0
            if child_idx not in roots:
                for parent_idx, parent in enumerate(variables):
                    if parent_idx != child_idx and (parent.name, child.name) not in blocked:
                        allowed |= 1 << parent_idx
            options.append(tuple(m for m in range(allowed + 1) if m & ~allowed == 0))

        stimulus = next((i for i, v in enumerate(variables) if v.role is VariableRole.STIMULUS), None)
        randomized = stimulus is not None and stimulus in roots

        eligible = 0
        for i in range(len(variables)):
            if i not in roots:
                eligible |= 1 << i
        latent_child_options = tuple(
            m
            for m in range(eligible + 1)
            if m & ~eligible == 0 and m.bit_count() >= MIN_LATENT_CHILDREN
        )

        return cls(
            variables=variables,
            parent_options=tuple(options),
            randomized=randomized,
            max_hidden=max_hidden,
            latent_child_options=latent_child_options,
            latent_names=_latent_names(max_hidden, set(index)),
        )

    def observed_parent_masks(self) -> Iterator[tuple[int, ...]]:
        """Acyclic parent-mask assignments in lexicographic order."""
        n = len(self.variables)
        parents = [0] * n
        children = [0] * n

        def reach(start: int) -> int:
            seen = 0
            frontier = children[start]
            while frontier:
                seen |= frontier
                nxt = 0
                for node in _bits(frontier):
                    nxt |= children[node]
                frontier = nxt & ~seen
            return seen

        def extend(node: int) -> Iterator[tuple[int, ...]]:
            if node == n:
                yield tuple(parents)
                return
            descendants = reach(node)
            for mask in self.parent_options[node]:
                # A new parent that is already downstream of node closes a cycle.
                if mask & descendants:
                    continue
                parents[node] = mask
                for parent in _bits(mask):
                    children[parent] |= 1 << node
                yield from extend(node + 1)
                for parent in _bits(mask):
                    children[parent] &= ~(1 << node)
                parents[node] = 0

        yield from extend(0)

    def dags(self) -> Iterator[Dag]:
        names = [v.name for v in self.variables]
        for masks in self.observed_parent_masks():
            edges = frozenset(
                (names[parent], names[child])
                for child, mask in enumerate(masks)
                for parent in _bits(mask)
            )
            for count in range(self.max_hidden + 1):
                for latent_masks in itertools.combinations(self.latent_child_options, count):
                    latents = tuple(
                        Variable(self.latent_names[k], VariableRole.HIDDEN) for k in range(count)
                    )
                    latent_edges = frozenset(
                        (latents[k].name, names[child])
                        for k, mask in enumerate(latent_masks)
                        for child in _bits(mask)
                    )
                    yield Dag._unchecked(
                        self.variables + latents, edges | latent_edges, self.randomized
                    )


def _latent_names(count: int, taken: set[str]) -> tuple[str, ...]:
    for prefix in LATENT_NAME_PREFIXES:
        names = tuple(f"{prefix}{k + 1}" for k in range(count))
        if not taken.intersection(names):
            return names
    raise InputError("Cannot pick latent variable names that do not clash with declared ones")


def enumerate_dags(
    variables: Iterable[Variable | tuple[str, str | VariableRole]],
    constraints: Iterable[StructuralConstraint] = (),
) -> Iterator[Dag]:
    """Yield every labeled DAG over ``variables`` that satisfies ``constraints``.

    Each structure is yielded exactly once, in deterministic order.
    """
    plan = SearchPlan.build(variables, constraints)
    return plan.dags()


# --- Consistency filtering ---


def _check_statements(
    variables: tuple[Variable, ...], statements: Sequence[CiStatement]
) -> None:
    names = {v.name for v in variables}
    seen: dict[tuple[frozenset[str], frozenset[str]], CiStatement] = {}
    for statement in statements:
        unknown = ({statement.lhs, statement.rhs} | statement.given) - names
        if unknown:
            raise InputError(f"Statement {statement} references unknown variables {sorted(unknown)}")
        previous = seen.setdefault(statement.key, statement)
        if previous.verdict is not statement.verdict:
            raise InputError(f"Contradictory statements: {previous} vs {statement}")


@lru_cache(maxsize=16)
def _catalogue(
    variables: tuple[Variable, ...], constraints: tuple[StructuralConstraint, ...]
) -> tuple[tuple[Dag, frozenset[tuple[frozenset[str], frozenset[str]]]], ...]:
    """Every candidate with the set of independences it implies."""
    observed = [v.name for v in variables]
    queries = list(conditioning_queries(observed))
    entries = []
    for dag in enumerate_dags(variables, constraints):
        independent = frozenset(
            (frozenset((a, b)), given) for a, b, given in queries if d_separated(dag, a, b, given)
        )
        entries.append((dag, independent))
    logger.debug("Catalogued %d candidate structures over %s", len(entries), observed)
    return tuple(entries)


def _mismatches(dag: Dag, statements: Sequence[CiStatement]) -> list[CiStatement]:
    return [
        s for s in statements if d_separated(dag, s.lhs, s.rhs, s.given) != s.independent
    ]


def consistent_structures(
    variables: Iterable[Variable | tuple[str, str | VariableRole]],
    statements: Iterable[CiStatement],
    constraints: Iterable[StructuralConstraint] = (),
) -> list[Dag]:
    """Every candidate DAG whose d-separations reproduce ``statements`` exactly.

    An empty list means no structure explains the observations faithfully.
    """
    variables = normalize_variables(variables)
    statements = list(statements)
    constraints = tuple(constraints)
    _check_statements(variables, statements)

    if len(variables) <= CATALOGUE_LIMIT:
        wanted = [(s.key, s.independent) for s in statements]
        result = [
            dag
            for dag, independent in _catalogue(variables, constraints)
            if all((key in independent) == verdict for key, verdict in wanted)
        ]
    else:
        result = [
            dag
            for dag in enumerate_dags(variables, constraints)
            if all(d_separated(dag, s.lhs, s.rhs, s.given) == s.independent for s in statements)
        ]
    logger.debug("%d structures consistent with %d statements", len(result), len(statements))
    return result


def conflicting_statements(
    variables: Iterable[Variable | tuple[str, str | VariableRole]],
    statements: Iterable[CiStatement],
    constraints: Iterable[StructuralConstraint] = (),
) -> list[CiStatement]:
    """Statements the closest candidate structure fails to reproduce.

    "Closest" is the first candidate in enumeration order with the fewest
    mismatching statements.
    """
    statements = list(statements)
    best: list[CiStatement] | None = None
    for dag in enumerate_dags(variables, constraints):
        missed = _mismatches(dag, statements)
        if best is None or len(missed) < len(best):
            best = missed
            if not best:
                break
    return best or []


def shared_edges(dags: Sequence[Dag]) -> frozenset[Edge]:
    """Edges present in every structure of the list."""
    if not dags:
        raise InputError("shared_edges needs at least one structure")
    observed = set(dags[0].observed)
    for dag in dags[1:]:
        if set(dag.observed) != observed:
            raise InputError("shared_edges needs structures over the same observed variables")
    common = set(dags[0].edges)
    for dag in dags[1:]:
        common &= dag.edges
    return frozenset(common)


def observed_edges(edges: Iterable[Edge], dag: Dag) -> frozenset[Edge]:
    """Restrict edges to those between observed variables of ``dag``."""
    observed = set(dag.observed)
    return frozenset(e for e in edges if e[0] in observed and e[1] in observed)
