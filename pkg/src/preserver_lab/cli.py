"""Command-line entry point.

Exit codes: 0 when every expectation holds, 1 when a hypothesis violation or
recovery failure was detected that was not announced with
``--expect-violation``, 2 on usage or contract errors.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .matrix_core import Tolerances, matrix_to_json
from .predicates import (
    FAIL, HYPOTHESES, Budget, MapContractError, estimate_p, full_hypothesis_report, fuzz,
)
from .rank_sets import DegenerateEpsilonError, JordanSpec, perturb_jordan_to_generic
from .recovery import CONJUGATION_HYPOTHESES, RecoveryFailure, recover_conjugator
from .zoo import ZOO_NAMES, zoo_catalog, zoo_entry

COMMANDS = ("verify", "recover", "estimate-p", "zoo-list", "zoo-run", "fuzz", "perturb")
SEED_ENV = "PRESERVER_LAB_SEED"


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    n: int = 3
    k: int = 2
    m: int | None = None
    p: int = 2
    seed: int = 0
    tolerances: Tolerances = field(default_factory=Tolerances)
    budget: Budget = field(default_factory=Budget)
    map_name: str | None = None
    plugin: str | None = None
    plugin_args: tuple = ()
    expect_violation: tuple = ()
    hypothesis: str = "commutativity_preserving"
    trials: int = 200
    jordan: str | None = None
    eps: float = 0.1
    out: str | None = None

    def validate(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise UsageError("seed must be an unsigned 64-bit integer")
        if self.command in ("verify", "recover", "estimate-p", "fuzz", "zoo-run"):
            if not (self.map_name or self.plugin):
                raise UsageError(f"{self.command} needs --map or --plugin")
            if self.n < 1 or not 1 <= self.k <= self.n:
                raise UsageError(f"need 1 <= k <= n, got n={self.n}, k={self.k}")
        if self.command == "perturb" and not self.jordan:
            raise UsageError("perturb needs --jordan FILE")

    def to_dict(self):
        d = asdict(self)
        d["tolerances"] = self.tolerances.to_dict()
        d["budget"] = self.budget.to_dict()
        d["plugin_args"] = list(self.plugin_args)
        d["expect_violation"] = list(self.expect_violation)
        return d


def _hypothesis_name(token: str) -> str:
    name = token.replace("-", "_")
    name = {"injectivity": "injective_probe", "continuity": "continuity_probe"}.get(name, name)
    if name in ("recovery", "recovery_failed"):
        return "recovery"
    for h in HYPOTHESES:
        if h == name or h.startswith(name):
            return h
    raise UsageError(f"unknown hypothesis {token!r}")


def resolve_map(cfg: RunConfig):
    if cfg.plugin:
        from .plugin import load_map_plugin
        return load_map_plugin(cfg.plugin, cfg.n, cfg.k, cfg.m, cfg.plugin_args)
    try:
        entry = zoo_entry(cfg.map_name, cfg.n, cfg.k, cfg.seed, p=cfg.p, m=cfg.m, tol=cfg.tolerances)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from exc
    return entry.map


def _outcome(violations: set, expected: set) -> int:
    return 0 if violations == expected else 1


def _considered(expected) -> set:
    return set(CONJUGATION_HYPOTHESES) | set(expected)


def run(cfg: RunConfig) -> tuple:
    """Execute a config; returns ``(exit_code, report_dict)``."""
    cfg.validate()
    expected = {_hypothesis_name(t) for t in cfg.expect_violation}
    tol = cfg.tolerances
    report = {"tool_version": __version__, "config": cfg.to_dict()}

    if cfg.command == "zoo-list":
        report["entries"] = [
            {"name": e.name, "label": e.map.label, "dimensions": [e.map.n, e.map.k, e.map.m],
             "expected_profile": e.expected_profile, "expected_p": e.expected_p,
             "provenance": e.provenance}
            for e in zoo_catalog(cfg.n, cfg.k, cfg.seed, tol)]
        return 0, report

    if cfg.command == "perturb":
        try:
            spec = JordanSpec.from_json(json.loads(Path(cfg.jordan).read_text()))
        except (OSError, json.JSONDecodeError, ValueError) as exc:
            raise UsageError(f"cannot read JordanSpec from {cfg.jordan}: {exc}") from exc
        b = perturb_jordan_to_generic(spec, cfg.eps)
        report["input"] = spec.to_json()
        report["matrix"] = matrix_to_json(b)
        return 0, report

    phi = resolve_map(cfg)
    try:
        if cfg.command in ("verify", "zoo-run"):
            rep = full_hypothesis_report(phi, cfg.budget, cfg.seed, tol)
            report["result"] = rep.to_dict()
            violations = {h for h in _considered(expected) if rep.verdicts[h] == FAIL}
            if cfg.command == "zoo-run" and cfg.map_name:
                entry = zoo_entry(cfg.map_name, cfg.n, cfg.k, cfg.seed, p=cfg.p, m=cfg.m, tol=tol)
                report["expected_profile"] = entry.expected_profile
                report["matches_expected_profile"] = entry.matches(rep.verdicts)
            return _outcome(violations, expected), report

        if cfg.command == "estimate-p":
            res = estimate_p(phi, tol, cfg.seed)
            report["result"] = res.to_dict()
            return (0 if res.determined else 1), report

        if cfg.command == "recover":
            try:
                rec = recover_conjugator(phi, tol, cfg.seed)
            except RecoveryFailure as exc:
                report["result"] = exc.to_dict()
                return _outcome({"recovery"}, expected), report
            report["result"] = rec.to_dict()
            return _outcome(set(), expected), report

        if cfg.command == "fuzz":
            res = fuzz(phi, _hypothesis_name(cfg.hypothesis), cfg.trials, cfg.seed, tol)
            report["result"] = res.to_dict()
            return _outcome({res.hypothesis} if res.found else set(), expected), report
    finally:
        close = getattr(phi, "close", None)
        if close:
            close()
    raise UsageError(f"unhandled command {cfg.command}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="preserver-lab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--n", type=int, default=3)
        p.add_argument("--k", type=int, default=2)
        p.add_argument("--m", type=int, default=None)
        p.add_argument("--p", type=int, default=2, help="block-embed copies")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--samples", type=int, default=None)
        p.add_argument("--tol-rank", type=float, default=Tolerances.rank_rtol)
        p.add_argument("--tol-spec", type=float, default=Tolerances.spec_atol)
        p.add_argument("--tol-residual", type=float, default=Tolerances.residual_rtol)
        p.add_argument("--map", dest="map_name", choices=ZOO_NAMES, default=None)
        p.add_argument("--plugin", default=None, help="executable speaking the JSON-lines protocol")
        p.add_argument("--plugin-arg", action="append", default=[])
        p.add_argument("--expect-violation", action="append", default=[])
        p.add_argument("--out", default=None)

    for name in ("verify", "recover", "estimate-p"):
        common(sub.add_parser(name))
    fz = sub.add_parser("fuzz")
    common(fz)
    fz.add_argument("--hypothesis", default="commutativity_preserving")
    fz.add_argument("--trials", type=int, default=200)
    pt = sub.add_parser("perturb")
    common(pt)
    pt.add_argument("--jordan", required=True)
    pt.add_argument("--eps", type=float, default=0.1)

    zoo = sub.add_parser("zoo")
    zsub = zoo.add_subparsers(dest="zoo_command", required=True)
    common(zsub.add_parser("list"))
    zr = zsub.add_parser("run")
    zr.add_argument("name", choices=ZOO_NAMES)
    common(zr)
    return ap


def config_from_args(ns) -> RunConfig:
    command = ns.command
    map_name = ns.map_name
    if command == "zoo":
        command = "zoo-" + ns.zoo_command
        if ns.zoo_command == "run":
            map_name = ns.name
    seed = ns.seed
    if seed is None:
        env = os.environ.get(SEED_ENV)
        try:
            seed = int(env) if env else 0
        except ValueError as exc:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from exc
    budget = Budget()
    if ns.samples is not None:
        if ns.samples < 1:
            raise UsageError("--samples must be positive")
        budget = Budget(ns.samples, max(1, 2 * ns.samples // 3), max(2, ns.samples // 8))
    try:
        tol = Tolerances(ns.tol_rank, ns.tol_spec, ns.tol_residual)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return RunConfig(
        command=command, n=ns.n, k=ns.k, m=ns.m, p=ns.p, seed=seed, tolerances=tol,
        budget=budget, map_name=map_name, plugin=ns.plugin, plugin_args=tuple(ns.plugin_arg),
        expect_violation=tuple(ns.expect_violation),
        hypothesis=getattr(ns, "hypothesis", "commutativity_preserving"),
        trials=getattr(ns, "trials", 200), jordan=getattr(ns, "jordan", None),
        eps=getattr(ns, "eps", 0.1), out=ns.out)


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
        code, report = run(cfg)
    except (UsageError, MapContractError, DegenerateEpsilonError, FileNotFoundError, ValueError) as exc:
        print(f"preserver-lab: error: {exc}", file=sys.stderr)
        return 2
    text = json.dumps(report, indent=2)
    if cfg.out:
        Path(cfg.out).write_text(text + "\n")
    else:
        print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
