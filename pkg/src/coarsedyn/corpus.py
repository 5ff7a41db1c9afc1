"""The conjugacy property suite run over generated instances.

Each instance yields one record whose ``checks`` map names a
property to PASS/FAIL; failures carry a witness that reproduces them.
"""

from __future__ import annotations

from .coarse_space import CoarseSpaceError, validate
from .dynamics import (
    ConjugacyError,
    compose_conjugacy,
    coproduct_cds,
    coproduct_conjugacy,
    inverse_conjugacy,
    orbit_preservation_check,
    validate_cds,
)
from .generate import GenerationError, Instance, generate_instance
from .hyperspace import HYPER_CAP, exp_preservation_check, exp_space, lift_cds, lift_conjugacy

__all__ = ["HYPER_POINTS", "run_instance", "run_corpus"]

# hyperspace checks only run on bases this small (2**6 subsets)
HYPER_POINTS = 6


def _fail(exc: Exception) -> dict:
    return {"verdict": "FAIL", "witness": str(exc)}


PASS = {"verdict": "PASS"}


def run_instance(inst: Instance, hyper_cap: int = HYPER_CAP, hyper: bool = True) -> dict:
    checks: dict[str, dict] = {}
    A, B = inst.A, inst.B

    # the generator only returns conjugacies that verified
    checks["conjugacy"] = PASS
    try:
        inverse_conjugacy(inst.ab)
        checks["inverse_conjugacy"] = PASS
    except ConjugacyError as exc:
        checks["inverse_conjugacy"] = _fail(exc)
    try:
        compose_conjugacy(inst.ab, inst.bc)
        checks["compose_conjugacy"] = PASS
    except ConjugacyError as exc:
        checks["compose_conjugacy"] = _fail(exc)

    bad = [v for m in A.ground.points if not (v := orbit_preservation_check(inst.ab, m))]
    checks["orbit_preservation"] = PASS if not bad else {"verdict": "FAIL", "witness": bad[0].witness}

    try:
        verdict = validate_cds(coproduct_cds(A, B))
        checks["coproduct_cds"] = PASS if verdict else {"verdict": "FAIL", "witness": verdict.witness}
        coproduct_conjugacy(inst.ab, inst.bc)
        checks["coproduct_conjugacy"] = PASS
    except ConjugacyError as exc:
        checks.setdefault("coproduct_cds", PASS)
        checks["coproduct_conjugacy"] = _fail(exc)

    if hyper and len(A.ground) <= min(HYPER_POINTS, hyper_cap):
        checks.update(_hyper_checks(inst, hyper_cap))

    ok = all(c["verdict"] == "PASS" for c in checks.values())
    return {
        "check": "corpus",
        "input": f"instance-{inst.index:04d}",
        "verdict": "PASS" if ok else "FAIL",
        "instance": inst.summary(),
        "checks": dict(sorted(checks.items())),
    }


def _hyper_checks(inst: Instance, cap: int) -> dict[str, dict]:
    out = {}
    A, B = inst.A, inst.B
    XA, XB = exp_space(A.space, cap), exp_space(B.space, cap)
    try:
        validate(XA)
        validate(XB)
        out["exp_space"] = PASS
    except CoarseSpaceError as exc:
        out["exp_space"] = {"verdict": "FAIL", "witness": exc.witness}

    mismatches = []
    for k, f in enumerate(inst.maps):
        rep = exp_preservation_check(f, A.space, B.space, cap, XA, XB)
        if not rep.ok:
            mismatches.append({"map": k, "table": list(f.table), "flags": rep.mismatches})
    out["exp_preservation"] = (
        {"verdict": "PASS", "maps": len(inst.maps)}
        if not mismatches
        else {"verdict": "FAIL", "witness": mismatches[0]}
    )

    try:
        LA = lift_cds(A, cap)
        LB = lift_cds(B, cap)
        out["lift_cds"] = PASS
        lift_conjugacy(inst.ab, cap, LA, LB)
        out["lift_conjugacy"] = PASS
    except ConjugacyError as exc:
        out.setdefault("lift_cds", _fail(exc))
        out["lift_conjugacy"] = _fail(exc)
    return out


def run_corpus(seed: int, count: int, hyper_cap: int = HYPER_CAP, hyper: bool = True) -> list[dict]:
    records = []
    for idx in range(count):
        try:
            inst = generate_instance(seed, idx)
        except GenerationError as exc:
            records.append({"check": "corpus", "input": f"instance-{idx:04d}", "verdict": "SKIP", "reason": str(exc)})
            continue
        records.append(run_instance(inst, hyper_cap, hyper))
    return records
