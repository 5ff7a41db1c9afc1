"""``coarse-dyn`` command line: run checks on a scenario and emit a report.

Every command produces a list of records ``{check, input, verdict, ...}``.
Records are sorted by (check, input) so reports are byte-identical across
runs; wall times are only included with ``--timings``.  The exit status is
0 iff every record passes.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from typing import Callable

from . import __version__
from .asdim import EXACT_CAP, asdim_upper_witness
from .coarse_group import (
    GroupError,
    ideal_from_structure,
    inversion_asymorphism_check,
    group_space,
    left_coarse_group_check,
    unified_demo,
)
from .coarse_maps import ControlFunction, MapReport, classify
from .coarse_space import CoarseSpaceError, same_filtration, validate
from .corpus import run_corpus
from .dynamics import (
    ConjugacyError,
    Verdict,
    coproduct_cds,
    coproduct_conjugacy,
    inverse_conjugacy,
    orbit,
    orbit_preservation_check,
    validate_cds,
)
from .hyperspace import HYPER_CAP, HyperCapExceeded, exp_space, lift_cds, lift_conjugacy
from .scenario import Scenario, ScenarioError, load_scenario

__all__ = ["main", "run_command", "render", "COMMANDS"]

REPORT_VERSION = 1


def plain(x):
    """Convert labels and report values to JSON-ready data, deterministically."""
    if isinstance(x, dict):
        return {str(k): plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [plain(v) for v in x]
    if isinstance(x, (set, frozenset)):
        return sorted((plain(v) for v in x), key=lambda v: json.dumps(v, sort_keys=True))
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else int(x)
    if isinstance(x, float) and x != x:
        return "nan"
    if isinstance(x, float) and x in (float("inf"), float("-inf")):
        return "inf" if x > 0 else "-inf"
    if x is None or isinstance(x, (bool, int, float, str)):
        return x
    return repr(x)


def _record(check: str, name: str, ok: bool, **extra) -> dict:
    return {"check": check, "input": name, "verdict": "PASS" if ok else "FAIL", **extra}


def _ctl(c) -> dict:
    if isinstance(c, ControlFunction):
        return {"table": list(c.table)}
    return {"failedAt": c.index, "pair": c.pair}


def _map_details(rep: MapReport) -> dict:
    return {
        "flags": rep.flags(),
        "bornologousControl": _ctl(rep.bornologous_ctl),
        "effectivelyProperControl": _ctl(rep.effectively_proper_ctl),
        "largeImageScale": rep.large_image_scale,
    }


def _pick(table: dict, wanted: list[str] | None, what: str) -> list[str]:
    if not wanted:
        return list(table)
    missing = [w for w in wanted if w not in table]
    if missing:
        raise ScenarioError(f"dangling reference: no {what} named {missing[0]!r}")
    return wanted


# --- commands ----------------------------------------------------------------


def cmd_check_space(sc: Scenario, args) -> list[dict]:
    out = []
    names = _pick({**sc.spaces, **sc.windows}, args.space and [args.space], "space")
    for name in names:
        X = sc.space(name)
        try:
            validate(X)
            out.append(_record("check-space", name, True, points=len(X.ground), depth=X.depth + 1))
        except CoarseSpaceError as exc:
            out.append(_record("check-space", name, False, error=str(exc), witness=exc.witness))
    return out


def cmd_check_map(sc: Scenario, args) -> list[dict]:
    """A map passes when it is bornologous; the full classification is reported."""
    out = []
    for name in _pick(sc.maps, args.map, "map"):
        f, src, dst = sc.maps[name]
        rep = classify(f, sc.space(src), sc.space(dst))
        out.append(_record("check-map", name, rep.bornologous, **_map_details(rep)))
    return out


def cmd_check_group(sc: Scenario, args) -> list[dict]:
    out = []
    for name in _pick(sc.groups, args.group, "group"):
        I = sc.groups[name]
        G = I.group
        X = group_space(I, "left")
        ctl = left_coarse_group_check(G, X)
        details = {"ideal": I.labels(), "leftShiftControl": _ctl(ctl)}
        ok = bool(ctl)
        if ok:
            back = ideal_from_structure(G, X)
            round_trip = same_filtration(group_space(back, "left"), X)
            inv = inversion_asymorphism_check(I)
            details.update(roundTrip=round_trip, inversion=_map_details(inv))
            ok = round_trip and inv.asymorphism
        out.append(_record("check-group", name, ok, **details))
    return out


def cmd_check_cds(sc: Scenario, args) -> list[dict]:
    out = []
    for name in _pick(sc.systems, args.system, "system"):
        v = validate_cds(sc.systems[name])
        extra = {"controls": v.details.get("controls", {})} if v else {"clause": v.clause, "witness": v.witness}
        out.append(_record("check-cds", name, v.ok, **extra))
    return out


def _conjugacy_fail(name: str, v: Verdict) -> dict:
    return _record("conjugacy", name, False, clause=v.clause, witness=v.witness)


def cmd_conjugacy(sc: Scenario, args) -> list[dict]:
    out = []
    for name in _pick(sc.conjugacies, args.conjugacy, "conjugacy"):
        c = sc.conjugacies[name]
        if isinstance(c, Verdict):
            out.append(_conjugacy_fail(name, c))
            continue
        try:
            inverse_conjugacy(c)
            out.append(_record("conjugacy", name, True, certificates=c.certificates, inverse="PASS"))
        except ConjugacyError as exc:
            out.append(_record("conjugacy", name, False, inverse=str(exc)))
    return out


def cmd_orbit(sc: Scenario, args) -> list[dict]:
    out = []
    for name in _pick(sc.systems, args.system, "system"):
        S = sc.systems[name]
        orbits = {m: orbit(S, m).points for m in S.ground.points}
        out.append(_record("orbit", name, True, orbits=orbits))
    for name, c in sc.conjugacies.items():
        if isinstance(c, Verdict):
            continue
        bad = [v.witness for m in c.source.ground.points if not (v := orbit_preservation_check(c, m))]
        out.append(_record("orbit-preservation", name, not bad, **({"witness": bad[0]} if bad else {})))
    return out


def cmd_coproduct(sc: Scenario, args) -> list[dict]:
    out = []
    names = _pick(sc.systems, args.system, "system")
    for a in names:
        for b in names:
            label = f"{a}+{b}"
            try:
                S = coproduct_cds(sc.systems[a], sc.systems[b])
                out.append(_record("coproduct", label, True, points=len(S.ground), time=len(S.group)))
            except ConjugacyError as exc:
                out.append(_record("coproduct", label, False, error=str(exc)))
    good = [(n, c) for n, c in sc.conjugacies.items() if not isinstance(c, Verdict)]
    for n1, c1 in good:
        for n2, c2 in good:
            try:
                coproduct_conjugacy(c1, c2)
                out.append(_record("coproduct-conjugacy", f"{n1}+{n2}", True))
            except ConjugacyError as exc:
                out.append(_record("coproduct-conjugacy", f"{n1}+{n2}", False, error=str(exc)))
    return out


def cmd_hyperlift(sc: Scenario, args) -> list[dict]:
    cap = args.hyper_cap
    out = []
    lifted = {}
    for name in _pick(sc.systems, args.system, "system"):
        S = sc.systems[name]
        try:
            validate(exp_space(S.space, cap))
            lifted[name] = lift_cds(S, cap)
            out.append(_record("hyperlift", name, True, points=len(lifted[name].ground)))
        except (HyperCapExceeded, CoarseSpaceError, ConjugacyError) as exc:
            out.append(_record("hyperlift", name, False, error=str(exc)))
    for name, c in sc.conjugacies.items():
        if isinstance(c, Verdict):
            continue
        src, dst = sc.conjugacy_refs[name]
        if src not in lifted or dst not in lifted:
            continue
        try:
            lift_conjugacy(c, cap, lifted[src], lifted[dst])
            out.append(_record("hyperlift-conjugacy", name, True))
        except ConjugacyError as exc:
            out.append(_record("hyperlift-conjugacy", name, False, error=str(exc)))
    return out


def cmd_asdim(sc: Scenario, args) -> list[dict]:
    if args.n is None:
        raise ScenarioError("asdim needs --n")
    names = _pick({**sc.spaces, **sc.windows}, args.space and [args.space], "space")
    out = []
    for name in names:
        X = sc.space(name)
        rep = asdim_upper_witness(X, args.n, exact_cap=args.exact_cap)
        scales = [
            {
                "index": v.index,
                "status": v.status,
                "method": v.method,
                "boundScale": v.bound_scale,
                "cover": v.cover.families if v.cover is not None else None,
            }
            for v in rep.scales
        ]
        out.append(_record("asdim", name, rep.ok, n=args.n, scales=scales, boundControl=rep.bound_control))
    return out


def cmd_zr_demo(sc: Scenario, args) -> list[dict]:
    scales = [Fraction(s) for s in args.scales.split(",")]
    rep = unified_demo(Fraction(args.half_width), Fraction(args.step), scales)
    return [
        _record(
            "zr-demo",
            f"halfWidth={args.half_width},step={args.step}",
            rep.ok,
            floorAfterInclusionIsIdentity=rep.floor_after_inclusion_is_identity,
            inclusionAfterFloorScale=rep.inclusion_after_floor_scale,
            inclusion=_map_details(rep.inclusion),
            floor=_map_details(rep.floor),
            inverseCheck=rep.inverse_check.ok,
        )
    ]


def cmd_corpus(sc: Scenario, args) -> list[dict]:
    return run_corpus(args.seed, args.count, args.hyper_cap)


COMMANDS: dict[str, Callable] = {
    "check-space": cmd_check_space,
    "check-map": cmd_check_map,
    "check-group": cmd_check_group,
    "check-cds": cmd_check_cds,
    "conjugacy": cmd_conjugacy,
    "orbit": cmd_orbit,
    "coproduct": cmd_coproduct,
    "hyperlift": cmd_hyperlift,
    "asdim": cmd_asdim,
    "zr-demo": cmd_zr_demo,
    "corpus": cmd_corpus,
}

# commands that make sense without a scenario file
_STANDALONE = {"zr-demo", "corpus"}


def run_command(cmd: str, sc: Scenario, args) -> list[dict]:
    if cmd not in COMMANDS:
        raise ScenarioError(f"unknown command {cmd!r}")
    records = COMMANDS[cmd](sc, args)
    return sorted(records, key=lambda r: (r["check"], r["input"]))


def render(records: list[dict], seed: int, fmt: str, seconds: float | None = None) -> str:
    if fmt == "json":
        doc = {"version": REPORT_VERSION, "seed": seed, "checks": plain(records)}
        if seconds is not None:
            doc["seconds"] = round(seconds, 3)
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    lines = [f"{r['verdict']:4}  {r['check']}  {r['input']}" for r in records]
    passed = sum(r["verdict"] == "PASS" for r in records)
    lines.append(f"{passed}/{len(records)} checks passed")
    if seconds is not None:
        lines.append(f"{seconds:.3f} s")
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coarse-dyn", description="Checks for finite coarse spaces and coarse dynamics.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--scenario", help="scenario JSON file")
    p.add_argument("--seed", type=int, default=None, help="generator seed (default: scenario seed or 0)")
    p.add_argument("--count", type=int, default=200, help="corpus size")
    p.add_argument("--exact-cap", type=int, default=EXACT_CAP, help="largest ground for exact cover search")
    p.add_argument("--hyper-cap", type=int, default=HYPER_CAP, help=f"largest hyperspace base (at most {HYPER_CAP})")
    p.add_argument("--report", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--timings", action="store_true", help="include wall times (reports stop being reproducible)")
    p.add_argument("--space", help="space or window name")
    p.add_argument("--map", action="append", help="map name (repeatable)")
    p.add_argument("--group", action="append", help="group name (repeatable)")
    p.add_argument("--system", action="append", help="system name (repeatable)")
    p.add_argument("--conjugacy", action="append", help="conjugacy name (repeatable)")
    p.add_argument("--n", type=int, help="number of colour families minus one, for asdim")
    p.add_argument("--half-width", default="1000", help="zr-demo window half width")
    p.add_argument("--step", default="0.25", help="zr-demo grid step")
    p.add_argument("--scales", default="1,2,4,8", help="zr-demo scales, comma separated")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.hyper_cap > HYPER_CAP:
        parser.error(f"--hyper-cap may only lower the cap ({HYPER_CAP})")
    try:
        if args.scenario:
            sc = load_scenario(args.scenario)
        elif args.command in _STANDALONE:
            sc = Scenario()
        else:
            parser.error(f"{args.command} needs --scenario")
        if args.seed is None:
            args.seed = sc.seed
        t0 = time.perf_counter()
        records = run_command(args.command, sc, args)
        seconds = time.perf_counter() - t0 if args.timings else None
    except (ScenarioError, GroupError, ValueError) as exc:
        print(f"coarse-dyn: error: {exc}", file=sys.stderr)
        return 2
    text = render(records, args.seed, args.format, seconds)
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if all(r["verdict"] == "PASS" for r in records) else 1


if __name__ == "__main__":
    sys.exit(main())
