"""Scenario files: JSON documents naming spaces, groups, windows, maps,
systems and conjugacies, loaded into fully constructed objects.

Layout (every collection is an object keyed by name; all optional)::

    {
      "seed": 0,
      "spaces":  {"M": {"points": [...], "metric": {"matrix": [[...]], "scales": [...]}}},
      "groups":  {"Z4": {"elements": [...], "table": [[...]], "ideal": [[...]]}},
      "windows": {"W": {"kind": "integer", "halfWidth": 16, "step": 1, "scales": [2, 4]}},
      "maps":    {"f": {"from": "M", "to": "N", "assign": [["a", "x"], ...]}},
      "systems": {"S": {"space": "M", "group": "Z4", "evolution": {"1": [...]},
                        "hyperop": [["1", "1", ["2", "0"]], ...]}},
      "conjugacies": {"c": {"fromSystem": "S", "toSystem": "T",
                            "f": [["a", "x"], ...], "h": [["1", "3"], ...]}}
    }

A space gives exactly one of ``chain`` (list of pair lists), ``metric``,
``discrete: true`` or ``bounded: true``.  Chains are kept as written so
that ``check-space`` can report what is wrong with them; add
``"normalize": true`` to have them closed up instead.  Distances may be
numbers or the string ``"inf"``.
"""

from __future__ import annotations

import json
from fractions import Fraction
import math
from dataclasses import dataclass, field
from pathlib import Path

from .coarse_group import FiniteGroup, IdealChain, WindowedLine, validate_ideal_chain, windowed_line
from .coarse_maps import PointMap
from .coarse_space import CoarseSpace, CoarseSpaceError, bounded, validate, discrete, from_metric, make_filtered
from .dynamics import CoarseDynamicalSystem, Conjugacy, TimeGroup, Verdict, check_conjugacy
from .relation_core import GroundSet, Relation, UnknownPoint

__all__ = ["Scenario", "ScenarioError", "load_scenario", "parse_scenario"]

COLLECTIONS = ("spaces", "groups", "windows", "maps", "systems", "conjugacies")


class ScenarioError(ValueError):
    pass


@dataclass
class Scenario:
    seed: int = 0
    spaces: dict[str, CoarseSpace] = field(default_factory=dict)
    groups: dict[str, IdealChain] = field(default_factory=dict)
    windows: dict[str, tuple[WindowedLine, CoarseSpace]] = field(default_factory=dict)
    maps: dict[str, tuple[PointMap, str, str]] = field(default_factory=dict)
    systems: dict[str, CoarseDynamicalSystem] = field(default_factory=dict)
    conjugacies: dict[str, Conjugacy | Verdict] = field(default_factory=dict)
    # system names per conjugacy, kept for reporting
    conjugacy_refs: dict[str, tuple[str, str]] = field(default_factory=dict)

    def space(self, name: str) -> CoarseSpace:
        if name in self.spaces:
            return self.spaces[name]
        if name in self.windows:
            return self.windows[name][1]
        raise ScenarioError(f"dangling reference: no space named {name!r}")

    def valid_space(self, name: str) -> CoarseSpace:
        """The named space, which must pass validation (maps and systems need this)."""
        X = self.space(name)
        try:
            return validate(X)
        except CoarseSpaceError as exc:
            raise ScenarioError(f"space {name!r} is not a coarse space: {exc} {exc.witness}") from None


def _no_duplicates(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise ScenarioError(f"duplicate key {k!r}")
        out[k] = v
    return out


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc.strerror}") from None
    return parse_scenario(text, str(path))


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    try:
        doc = json.loads(text, object_pairs_hook=_no_duplicates)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    except ScenarioError as exc:
        raise ScenarioError(f"{source}: {exc}") from None
    if not isinstance(doc, dict):
        raise ScenarioError(f"{source}: top level must be an object")
    unknown = sorted(set(doc) - set(COLLECTIONS) - {"seed"})
    if unknown:
        raise ScenarioError(f"{source}: unknown top-level key {unknown[0]!r}")
    sc = Scenario(seed=int(doc.get("seed", 0)))
    try:
        for name, spec in _collection(doc, "spaces"):
            sc.spaces[name] = _space(spec)
        for name, spec in _collection(doc, "groups"):
            sc.groups[name] = _group(spec)
        for name, spec in _collection(doc, "windows"):
            sc.windows[name] = windowed_line(
                spec["kind"], _number(spec["halfWidth"]), _number(spec.get("step", 1)),
                [_number(r) for r in spec.get("scales", (1, 2, 4, 8))],
            )
        for name, spec in _collection(doc, "maps"):
            src, dst = sc.valid_space(spec["from"]), sc.valid_space(spec["to"])
            sc.maps[name] = (_assign(src.ground, dst.ground, spec["assign"]), spec["from"], spec["to"])
        for name, spec in _collection(doc, "systems"):
            sc.systems[name] = _system(sc, spec)
        for name, spec in _collection(doc, "conjugacies"):
            A, B = _ref(sc.systems, spec["fromSystem"], "system"), _ref(sc.systems, spec["toSystem"], "system")
            f = _assign(A.ground, B.ground, spec["f"])
            h = _assign(A.group.elements, B.group.elements, spec["h"])
            sc.conjugacies[name] = check_conjugacy(A, B, f, h)
            sc.conjugacy_refs[name] = (spec["fromSystem"], spec["toSystem"])
    except UnknownPoint as exc:
        raise ScenarioError(f"{source}: unknown label {exc.args[0]!r}") from None
    except KeyError as exc:
        raise ScenarioError(f"{source}: missing key {exc.args[0]!r}") from None
    except ValueError as exc:
        raise ScenarioError(f"{source}: {exc}") from None
    return sc


def _collection(doc: dict, key: str):
    coll = doc.get(key, {})
    if not isinstance(coll, dict):
        raise ScenarioError(f"{key!r} must be an object keyed by name")
    for name, spec in coll.items():
        if not isinstance(spec, dict):
            raise ScenarioError(f"{key}.{name} must be an object")
        yield name, _Located(spec, f"{key}.{name}")


class _Located(dict):
    """Dict that names its place in the file when a key is missing."""

    def __init__(self, data: dict, where: str):
        super().__init__(data)
        self.where = where

    def __missing__(self, key):
        raise ScenarioError(f"{self.where}: missing key {key!r}")


def _ref(table: dict, name: str, what: str):
    if name not in table:
        raise ScenarioError(f"dangling reference: no {what} named {name!r}")
    return table[name]


def _number(x):
    if x == "inf":
        return math.inf
    if isinstance(x, bool) or not isinstance(x, (int, float, str)):
        raise ScenarioError(f"not a number: {x!r}")
    if isinstance(x, str):
        # strings are read exactly, so "1/4" and "0.25" both give Fraction(1, 4)
        try:
            return Fraction(x)
        except (ValueError, ZeroDivisionError):
            raise ScenarioError(f"not a number: {x!r}") from None
    return x


def _space(spec: _Located) -> CoarseSpace:
    ground = GroundSet(spec["points"])
    given = [k for k in ("chain", "metric", "discrete", "bounded") if k in spec]
    if len(given) != 1:
        raise ScenarioError(f"{spec.where}: give exactly one of chain, metric, discrete, bounded")
    kind = given[0]
    if kind == "discrete":
        return discrete(ground)
    if kind == "bounded":
        return bounded(ground)
    if kind == "metric":
        m = _Located(spec["metric"], spec.where + ".metric")
        matrix = [[_number(x) for x in row] for row in m["matrix"]]
        return from_metric(ground, matrix, [_number(r) for r in m["scales"]])
    chain = [Relation.from_pairs(ground, [tuple(p) for p in E]) for E in spec["chain"]]
    if not chain:
        raise ScenarioError(f"{spec.where}: chain is empty")
    if spec.get("normalize", False):
        return make_filtered(ground, chain, "chain")
    return CoarseSpace(ground, tuple(chain), "chain")


def _group(spec: _Located) -> IdealChain:
    G = FiniteGroup(spec["elements"], spec["table"])
    return validate_ideal_chain(G, spec.get("ideal", [[]]))


def _assign(src: GroundSet, dst: GroundSet, pairs) -> PointMap:
    table = {}
    for a, b in pairs:
        if a in table:
            raise ScenarioError(f"point {a!r} is assigned twice")
        table[a] = b
    missing = [p for p in src.points if p not in table]
    if missing:
        raise ScenarioError(f"no image given for {missing[0]!r}")
    return PointMap.from_dict(src, dst, table)


def _system(sc: Scenario, spec: _Located) -> CoarseDynamicalSystem:
    space = sc.valid_space(spec["space"])
    ideal = _ref(sc.groups, spec["group"], "group")
    G = ideal.group
    gpos = G.elements.position
    hyperop = None
    if "hyperop" in spec:
        hyperop = {(gpos(a), gpos(b)): [gpos(v) for v in vals] for a, b, vals in spec["hyperop"]}
        # pairs not listed keep the group product
        for a in range(len(G)):
            for b in range(len(G)):
                hyperop.setdefault((a, b), [G.table[a][b]])
    evo = spec["evolution"]
    maps = {}
    for g in G.elements.points:
        key = g if g in evo else str(g)
        if key not in evo:
            raise ScenarioError(f"{spec.where}: no evolution for time {g!r}")
        images = evo[key]
        if len(images) != len(space.ground):
            raise ScenarioError(f"{spec.where}: evolution of {g!r} needs {len(space.ground)} images")
        maps[g] = PointMap.from_dict(space.ground, space.ground, dict(zip(space.ground.points, images)))
    extra = sorted(set(evo) - set(G.elements.points) - {str(g) for g in G.elements.points})
    if extra:
        raise ScenarioError(f"{spec.where}: evolution names unknown time {extra[0]!r}")
    return CoarseDynamicalSystem(space, TimeGroup(ideal, hyperop), maps)
