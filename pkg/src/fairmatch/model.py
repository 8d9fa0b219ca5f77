"""Core data types for house allocation instances.

An instance consists of agents with weak preference orders (ordered
indifference classes) over a subset of objects, plus optional positive
weights.  Agents and objects are dense zero-based indices internally;
display names ("1", "a1", ...) are kept for parsing and printing.
All types are immutable after construction.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

__all__ = [
    "InstanceParseError",
    "StrictnessError",
    "SizeGuardError",
    "PreferenceList",
    "Instance",
    "Matching",
    "rank",
    "signature_of",
    "check_order",
    "parse_instance",
    "serialize_instance",
    "parse_matching",
    "serialize_matching",
    "triangle_instance",
    "strict_sublist_family",
    "random_instance",
]


class InstanceParseError(ValueError):
    """Raised on malformed instance or matching text; carries a line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class StrictnessError(ValueError):
    """Raised when an operation requiring strict lists meets a tie."""


class SizeGuardError(ValueError):
    """Raised when a brute-force oracle is asked to exceed its size guard."""


@dataclass(frozen=True)
class PreferenceList:
    """Ordered indifference classes; most preferred first.

    Each class is stored as a tuple of object indices sorted ascending.
    No object appears twice, no class is empty.
    """

    classes: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        seen: set[int] = set()
        for cls in self.classes:
            if not cls:
                raise ValueError("empty indifference class")
            if tuple(sorted(cls)) != tuple(cls):
                raise ValueError("class not sorted by object index")
            for a in cls:
                if a in seen:
                    raise ValueError(f"object {a} appears in more than one class")
                seen.add(a)

    @staticmethod
    def of(classes: Iterable[Iterable[int]]) -> "PreferenceList":
        return PreferenceList(tuple(tuple(sorted(c)) for c in classes))

    @cached_property
    def rank_table(self) -> dict[int, int]:
        """Object index -> 1-based rank (index of its class plus one)."""
        table: dict[int, int] = {}
        for k, cls in enumerate(self.classes, start=1):
            for a in cls:
                table[a] = k
        return table

    @cached_property
    def objects(self) -> tuple[int, ...]:
        """All acceptable objects, most preferred class first."""
        return tuple(a for cls in self.classes for a in cls)

    def __len__(self) -> int:
        return len(self.objects)


@dataclass(frozen=True)
class Instance:
    """A house allocation instance: preference profile plus agent weights."""

    n1: int
    n2: int
    prefs: tuple[PreferenceList, ...]
    weights: tuple[float, ...]
    agent_names: tuple[str, ...]
    object_names: tuple[str, ...]

    def __post_init__(self):
        if self.n1 < 0 or self.n2 < 0:
            raise ValueError("negative agent or object count")
        if len(self.prefs) != self.n1:
            raise ValueError("prefs length must equal n1")
        if len(self.weights) != self.n1:
            raise ValueError("weights length must equal n1")
        if any(w <= 0 for w in self.weights):
            raise ValueError("weights must be positive")
        if len(self.agent_names) != self.n1 or len(self.object_names) != self.n2:
            raise ValueError("name table size mismatch")
        for pl in self.prefs:
            if len(pl.classes) > self.n2:
                raise ValueError("more indifference classes than objects")
            for a in pl.objects:
                if not 0 <= a < self.n2:
                    raise ValueError(f"object index {a} out of range")

    @staticmethod
    def of(
        prefs: Sequence[Iterable[Iterable[int]]],
        n2: int | None = None,
        weights: Sequence[float] | None = None,
    ) -> "Instance":
        """Build an instance from nested class lists, default names a1..an2."""
        pls = tuple(PreferenceList.of(p) for p in prefs)
        n1 = len(pls)
        if n2 is None:
            n2 = max((a + 1 for pl in pls for a in pl.objects), default=0)
        if weights is None:
            weights = (1.0,) * n1
        return Instance(
            n1=n1,
            n2=n2,
            prefs=pls,
            weights=tuple(float(w) for w in weights),
            agent_names=tuple(str(i + 1) for i in range(n1)),
            object_names=tuple(f"a{j + 1}" for j in range(n2)),
        )

    @cached_property
    def is_strict(self) -> bool:
        return all(len(c) == 1 for pl in self.prefs for c in pl.classes)

    @cached_property
    def gamma(self) -> int:
        """Size of the largest indifference class (1 for empty instance)."""
        return max((len(c) for pl in self.prefs for c in pl.classes), default=1)

    @cached_property
    def flat_prefs(self) -> tuple[np.ndarray, ...]:
        """Per-agent acceptable objects in preference order, as int arrays."""
        return tuple(np.array(pl.objects, dtype=np.int64) for pl in self.prefs)

    @cached_property
    def acceptable_pairs(self) -> tuple[tuple[int, int], ...]:
        return tuple(
            (i, a) for i in range(self.n1) for a in self.prefs[i].objects
        )

    def rank(self, i: int, a: int) -> int:
        return rank(self, i, a)


def rank(instance: Instance, i: int, a: int) -> int:
    """1-based rank of object a in agent i's list; n2+1 if unacceptable."""
    if not 0 <= i < instance.n1:
        raise ValueError(f"agent index {i} out of range")
    if not 0 <= a < instance.n2:
        raise ValueError(f"object index {a} out of range")
    return instance.prefs[i].rank_table.get(a, instance.n2 + 1)


@dataclass(frozen=True)
class Matching:
    """Partial injective assignment of agents to objects.

    Stored as pairs sorted by agent index.  Injectivity is checked at
    construction; acceptability is instance-dependent and checked by
    ``validate``.
    """

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        agents = [i for i, _ in self.pairs]
        objects = [a for _, a in self.pairs]
        if len(set(agents)) != len(agents):
            raise ValueError("agent matched twice")
        if len(set(objects)) != len(objects):
            raise ValueError("object matched twice")
        if list(self.pairs) != sorted(self.pairs):
            raise ValueError("pairs must be sorted by agent index")

    @staticmethod
    def of(pairs: Iterable[tuple[int, int]] | Mapping[int, int]) -> "Matching":
        if isinstance(pairs, Mapping):
            items = pairs.items()
        else:
            items = pairs
        return Matching(tuple(sorted((int(i), int(a)) for i, a in items)))

    @cached_property
    def by_agent(self) -> dict[int, int]:
        return dict(self.pairs)

    @cached_property
    def by_object(self) -> dict[int, int]:
        return {a: i for i, a in self.pairs}

    def get(self, i: int) -> int | None:
        return self.by_agent.get(i)

    def agent_of(self, a: int) -> int | None:
        return self.by_object.get(a)

    @property
    def size(self) -> int:
        return len(self.pairs)

    def weight(self, instance: Instance) -> float:
        return sum(instance.weights[i] for i, _ in self.pairs)

    def validate(self, instance: Instance) -> None:
        """Raise ValueError unless every pair is in range and acceptable."""
        for i, a in self.pairs:
            if not 0 <= i < instance.n1 or not 0 <= a < instance.n2:
                raise ValueError(f"pair ({i},{a}) out of range")
            if rank(instance, i, a) > instance.n2:
                raise ValueError(
                    f"pair ({i},{a}) not acceptable: object not on agent's list"
                )


def check_order(instance: Instance, order: Sequence[int]) -> tuple[int, ...]:
    """Validate that order is a permutation of all agents; return it as a tuple."""
    order = tuple(order)
    if sorted(order) != list(range(instance.n1)):
        raise ValueError("order must be a permutation of all agent indices")
    return order


def signature_of(
    instance: Instance, matching: Matching, order: Sequence[int]
) -> tuple[int, ...]:
    """Rank vector along order; unmatched entries are n2+1.

    Signatures compare lexicographically: smaller means higher priority
    agents are ranked better.
    """
    matching.validate(instance)
    unmatched = instance.n2 + 1
    by_agent = matching.by_agent
    sig = []
    for i in order:
        a = by_agent.get(i)
        sig.append(unmatched if a is None else rank(instance, i, a))
    return tuple(sig)


# ---------------------------------------------------------------------------
# Instance text format
#
#   agents: <n1>
#   objects: <n2>
#   weights: <w1> ... <wn1>        (optional; default all 1)
#   <agent>: (<obj> <obj> ...) (<obj> ...) ...
#
# Classes are listed most preferred first.  Comments start with '#'.
# Objects are named a1..a<n2> (positional), or arbitrary identifiers
# assigned dense indices in order of first appearance; the two styles
# cannot be mixed within one instance.
# ---------------------------------------------------------------------------

_POSITIONAL = re.compile(r"^a([1-9][0-9]*)$")


def _format_number(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def parse_instance(text: str) -> Instance:
    """Parse the line-oriented instance format; inverse of serialize_instance."""
    n1 = n2 = None
    weights: list[float] | None = None
    agent_lines: list[tuple[int, str, str]] = []  # (lineno, name, rest)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise InstanceParseError("expected '<key>: <value>'", lineno)
        key, rest = line.split(":", 1)
        key = key.strip()
        rest = rest.strip()
        if key == "agents":
            try:
                n1 = int(rest)
            except ValueError:
                raise InstanceParseError(f"bad agent count {rest!r}", lineno)
        elif key == "objects":
            try:
                n2 = int(rest)
            except ValueError:
                raise InstanceParseError(f"bad object count {rest!r}", lineno)
        elif key == "weights":
            try:
                weights = [float(tok) for tok in rest.split()]
            except ValueError:
                raise InstanceParseError("bad weight value", lineno)
            if any(w <= 0 for w in weights):
                raise InstanceParseError("weights must be positive", lineno)
        else:
            agent_lines.append((lineno, key, rest))

    first = agent_lines[0][0] if agent_lines else 1
    if n1 is None or n1 < 0:
        raise InstanceParseError("missing or bad 'agents:' line", first)
    if n2 is None or n2 < 0:
        raise InstanceParseError("missing or bad 'objects:' line", first)
    if weights is not None and len(weights) != n1:
        raise InstanceParseError(
            f"expected {n1} weights, got {len(weights)}", first
        )
    if len(agent_lines) > n1:
        raise InstanceParseError(
            f"more agent lines than agents ({len(agent_lines)} > {n1})",
            agent_lines[n1][0],
        )

    # Agent name resolution: all-integer names are 1-based positions;
    # otherwise names are assigned indices in order of appearance.
    names = [name for _, name, _ in agent_lines]
    if len(set(names)) != len(names):
        dup = next(n for n in names if names.count(n) > 1)
        lineno = [ln for ln, n, _ in agent_lines if n == dup][1]
        raise InstanceParseError(f"duplicate agent {dup!r}", lineno)
    positional_agents = all(n.isdigit() for n in names)
    agent_names = [str(i + 1) for i in range(n1)]
    agent_index: dict[str, int] = {}
    if positional_agents:
        for lineno, name, _ in agent_lines:
            pos = int(name)
            if not 1 <= pos <= n1:
                raise InstanceParseError(f"agent {name} out of range", lineno)
            agent_index[name] = pos - 1
    else:
        for k, (lineno, name, _) in enumerate(agent_lines):
            agent_index[name] = k
            agent_names[k] = name

    object_names: list[str] = []
    object_index: dict[str, int] = {}
    positional_objects: bool | None = None

    def resolve_object(tok: str, lineno: int) -> int:
        nonlocal positional_objects
        m = _POSITIONAL.match(tok)
        if positional_objects is None and tok not in object_index:
            positional_objects = m is not None
        if tok in object_index:
            return object_index[tok]
        if positional_objects:
            if m is None:
                raise InstanceParseError(
                    f"unknown object name {tok!r} (instance uses a1..a{n2})", lineno
                )
            idx = int(m.group(1)) - 1
            if idx >= n2:
                raise InstanceParseError(
                    f"unknown object name {tok!r}: only {n2} objects", lineno
                )
        else:
            if m is not None:
                raise InstanceParseError(
                    f"cannot mix positional name {tok!r} with named objects", lineno
                )
            idx = len(object_index)
            if idx >= n2:
                raise InstanceParseError(
                    f"unknown object name {tok!r}: only {n2} objects", lineno
                )
        object_index[tok] = idx
        return idx

    class_re = re.compile(r"\(([^()]*)\)")
    prefs: list[list[list[int]]] = [[] for _ in range(n1)]
    for lineno, name, rest in agent_lines:
        i = agent_index[name]
        stripped = class_re.sub("", rest).strip()
        if stripped:
            raise InstanceParseError(
                f"unparsed text {stripped!r} outside class parentheses", lineno
            )
        seen: set[int] = set()
        classes: list[list[int]] = []
        for group in class_re.findall(rest):
            toks = group.split()
            if not toks:
                raise InstanceParseError("empty indifference class '()'", lineno)
            cls = []
            for tok in toks:
                idx = resolve_object(tok, lineno)
                if idx in seen:
                    raise InstanceParseError(
                        f"duplicate object {tok!r} in agent {name}'s list", lineno
                    )
                seen.add(idx)
                cls.append(idx)
            classes.append(cls)
        prefs[i] = classes

    final_object_names = [f"a{j + 1}" for j in range(n2)]
    if positional_objects is False:
        for name_, idx in object_index.items():
            final_object_names[idx] = name_

    return Instance(
        n1=n1,
        n2=n2,
        prefs=tuple(PreferenceList.of(p) for p in prefs),
        weights=tuple(weights) if weights is not None else (1.0,) * n1,
        agent_names=tuple(agent_names),
        object_names=tuple(final_object_names),
    )


def serialize_instance(instance: Instance) -> str:
    """Render an instance in canonical text form (round-trips with parse)."""
    lines = [f"agents: {instance.n1}", f"objects: {instance.n2}"]
    if any(w != 1 for w in instance.weights):
        lines.append(
            "weights: " + " ".join(_format_number(w) for w in instance.weights)
        )
    for i in range(instance.n1):
        classes = " ".join(
            "(" + " ".join(instance.object_names[a] for a in cls) + ")"
            for cls in instance.prefs[i].classes
        )
        lines.append(f"{instance.agent_names[i]}:" + (" " + classes if classes else ""))
    return "\n".join(lines) + "\n"


def parse_matching(text: str, instance: Instance) -> Matching:
    """Parse a matching file: one 'agent object' pair per line.

    A blank line terminates the matching; comments start with '#'.
    """
    agent_index = {n: i for i, n in enumerate(instance.agent_names)}
    object_index = {n: j for j, n in enumerate(instance.object_names)}
    pairs: list[tuple[int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            if pairs:
                break
            continue
        toks = line.split()
        if len(toks) != 2:
            raise InstanceParseError("expected '<agent> <object>'", lineno)
        if toks[0] not in agent_index:
            raise InstanceParseError(f"unknown agent {toks[0]!r}", lineno)
        if toks[1] not in object_index:
            raise InstanceParseError(f"unknown object {toks[1]!r}", lineno)
        pairs.append((agent_index[toks[0]], object_index[toks[1]]))
    try:
        matching = Matching.of(pairs)
        matching.validate(instance)
    except ValueError as exc:
        raise InstanceParseError(str(exc), 1)
    return matching


def serialize_matching(matching: Matching, instance: Instance) -> str:
    return (
        "\n".join(
            f"{instance.agent_names[i]} {instance.object_names[a]}"
            for i, a in matching.pairs
        )
        + "\n"
    )


# ---------------------------------------------------------------------------
# Canonical generators
# ---------------------------------------------------------------------------


def triangle_instance(n: int) -> Instance:
    """n agents, n objects; agent i strictly ranks a1 > a2 > ... > ai.

    The worst case for uniformly random serial dictatorship: the expected
    matched fraction tends to 1 - 1/e while a perfect matching exists.
    """
    if n < 1:
        raise ValueError("triangle instance needs n >= 1")
    return Instance.of([[[j] for j in range(i + 1)] for i in range(n)], n2=n)


def strict_sublist_family() -> tuple[Instance, ...]:
    """The six 3-agent instances whose lists are the prefixes (a1), (a1 a2),
    (a1 a2 a3) assigned to agents in every possible way.

    Ordered lexicographically by the tuple of list lengths:
    (1,2,3), (1,3,2), (2,1,3), (2,3,1), (3,1,2), (3,2,1).
    """
    prefixes = {k: [[j] for j in range(k)] for k in (1, 2, 3)}
    out = []
    for lengths in sorted(
        {(1, 2, 3), (1, 3, 2), (2, 1, 3), (2, 3, 1), (3, 1, 2), (3, 2, 1)}
    ):
        out.append(Instance.of([prefixes[k] for k in lengths], n2=3))
    return tuple(out)


def random_instance(
    n1: int,
    n2: int,
    tie_density: float = 0.0,
    list_density: float = 1.0,
    seed: int | tuple[int, ...] = 0,
) -> Instance:
    """Deterministic random instance.

    Each object enters an agent's acceptable set with probability
    list_density; the set is randomly ordered and adjacent ranks merge
    with probability tie_density (0 gives strict lists, 1 one big tie).
    """
    if n1 < 1 or n2 < 1:
        raise ValueError("need at least one agent and one object")
    if not 0 <= tie_density <= 1:
        raise ValueError("tie_density must be in [0,1]")
    if not 0 < list_density <= 1:
        raise ValueError("list_density must be in (0,1]")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    prefs = []
    for _ in range(n1):
        accept = np.flatnonzero(rng.random(n2) < list_density)
        accept = rng.permutation(accept)
        classes: list[list[int]] = []
        for pos, a in enumerate(accept):
            if pos > 0 and rng.random() < tie_density:
                classes[-1].append(int(a))
            else:
                classes.append([int(a)])
        prefs.append(classes)
    return Instance.of(prefs, n2=n2)


def all_matchings(instance: Instance) -> Iterator[Matching]:
    """Yield every matching of the instance (guarded brute-force helper)."""
    if instance.n1 > 7 or instance.n2 > 7:
        raise SizeGuardError("all_matchings is limited to n1, n2 <= 7")
    assigned: dict[int, int] = {}
    used: set[int] = set()

    def rec(i: int) -> Iterator[Matching]:
        if i == instance.n1:
            yield Matching.of(assigned)
            return
        yield from rec(i + 1)
        for a in instance.prefs[i].objects:
            if a not in used:
                assigned[i] = a
                used.add(a)
                yield from rec(i + 1)
                used.discard(a)
                del assigned[i]

    yield from rec(0)
