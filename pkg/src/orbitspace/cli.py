"""Command-line front end: run the pipeline on a JSON configuration and export artifacts."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .active import IncompleteCover
from .config import AnalysisConfig, ConfigError
from .estimator import InvarianceError, OrbitSpace, example_config_path
from .group import ClosureExceeded
from .pmatrix import NotExpressible
from .potential import AllUnbounded, Empty, PotentialError, Unbounded, observables
from .strata import NoMatch

__all__ = ["main", "build_parser", "compare_golden", "EXIT_OK", "EXIT_VALIDATION", "EXIT_COMPUTATION", "EXIT_GOLDEN"]

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_COMPUTATION = 2
EXIT_GOLDEN = 3

COMMANDS = ("verify", "phat", "active", "strata", "isotropy", "transitions", "section", "phases", "all")
GOLDEN_RTOL = 1e-6


def _clean(obj: Any) -> Any:
    """JSON-ready copy with floats rounded to 12 significant digits (stable across runs)."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if not math.isfinite(v):
            return str(v)
        v = float(f"{v:.12g}")
        return 0.0 if v == 0 else v
    return obj


class Runner:
    def __init__(self, cfg: AnalysisConfig, out: Path | None, seed: int | None, echo: Callable[[str], None]):
        self.cfg = cfg
        self.out = out
        self.echo = echo
        self.space = OrbitSpace(cfg, seed=seed, check_invariance=False)
        self.produced: dict[str, str] = {}
        self._fitted = False

    def fitted(self) -> OrbitSpace:
        if not self._fitted:
            self.space.fit()
            self._fitted = True
        return self.space

    def write(self, name: str, payload: Any) -> None:
        text = payload if isinstance(payload, str) else json.dumps(_clean(payload), indent=2) + "\n"
        self.produced[name] = text
        if self.out is not None:
            self.out.mkdir(parents=True, exist_ok=True)
            (self.out / name).write_text(text, encoding="utf-8")

    # subcommands

    def verify(self, args) -> None:
        space = OrbitSpace(self.cfg, seed=args.seed, check_invariance=True)
        try:
            space.fit()
        except InvarianceError as exc:
            self._verify_report(exc.reports)
            raise
        self.space, self._fitted = space, True
        self._verify_report(space.invariance_)

    def _verify_report(self, reports) -> None:
        mib = self.cfg.mib
        rows = []
        self.echo("invariance of the basic invariants")
        for a, (f, rep) in enumerate(zip(mib.polynomials, reports)):
            self.echo(f"  p{a + 1} (degree {f.degree}): {rep}")
            rows.append({"invariant": f"p{a + 1}", "degree": f.degree, "passed": rep.passed,
                         "worst_relative_violation": rep.worst, "worst_element": rep.worst_element,
                         "checks": rep.checked})
        payload = {"name": self.cfg.name, "degrees": list(mib.weights.degrees), "invariance": rows}
        if self._fitted:
            payload["closure_size"] = len(self.space.closure_)
            payload["syzygies"] = [str(s.relation) for s in self.space.syzygies_]
            self.echo(f"  coset representatives: {len(self.space.closure_)}; syzygies: {len(self.space.syzygies_)}")
        self.write("verify.json", payload)

    def phat(self, args) -> None:
        space = self.fitted()
        ph = space.phat_
        entries = ph.to_text()
        width = max(len(e) for row in entries for e in row)
        self.echo("P-hat matrix")
        for row in entries:
            self.echo("  [ " + "  ".join(e.rjust(width) for e in row) + " ]")
        self.echo(f"det = {space.det_}")
        self.write("phat.json", {
            "variables": list(self.cfg.mib.p_vars),
            "degrees": list(self.cfg.mib.weights.degrees),
            "entries": entries,
            "det": str(space.det_),
            "syzygies": [str(s.relation) for s in space.syzygies_],
        })

    def active(self, args) -> None:
        space = self.fitted()
        acts = space.active_
        rows = []
        self.echo("active polynomials")
        for act in acts.actives:
            mult = [str(m) for m in act.multipliers]
            self.echo(f"  {act.polynomial}   weight {act.weight}   multipliers ({', '.join(mult)})")
            rows.append({"polynomial": str(act.polynomial), "weight": act.weight, "multipliers": mult,
                         "composite": act.composite})
        quotient = space.det_.exact_divide(acts.product)
        self.echo(f"A(p) = {acts.product}")
        self.echo(f"det / A = {quotient}")
        self.write("active.json", {"actives": rows, "product": str(acts.product), "det_quotient": str(quotient)})

    def strata(self, args) -> None:
        cat = self.fitted().catalog_
        self.echo(f"{'label':<6} {'dim':>3}  {'signature':<32} relations")
        for d in cat:
            rel = d.relations_text()
            self.echo(f"{d.label:<6} {d.dimension:>3}  {str(d.signature):<32} "
                      + ", ".join(rel["equalities"] + rel["inequalities"]))
        self.write("strata.json", cat.to_json())

    def isotropy(self, args) -> None:
        space = self.fitted()
        points = [("representative", d.label, d.representative) for d in space.catalog_]
        for item in self.cfg.raw.get("typical_points", []):
            points.append(("typical", item.get("label"), item["x"]))
        for text in args.point or []:
            points.append(("requested", None, [float(v) for v in text.split(",")]))
        rows = []
        for kind, expected, x in points:
            x = np.asarray(x, dtype=float)
            if x.shape != (space.n_features_in_,):
                raise ConfigError(f"point {list(x)} has the wrong dimension")
            iso = space.isotropy(x)
            sig = space.signature(x)
            label = space.catalog_.identify(x)
            flag = "" if expected in (None, label) else f"  (expected {expected})"
            self.echo(f"{label:<6} x = {_fmt_vec(x)}  {sig}  {{{', '.join(iso.words)}}}{flag}")
            rows.append({"kind": kind, "stratum": label, "expected": expected, "x": x,
                         "p": space.transform(x[None, :])[0],
                         "signature": [sig.continuous_dimension, sig.n_discrete, list(sig.orders)],
                         "elements": iso.words})
        self.write("isotropy.json", rows)

    def transitions(self, args) -> None:
        space = self.fitted()
        self.echo("bordering (border -> bordered)")
        for lo, hi in sorted(space.graph_.edges):
            self.echo(f"  {lo} -> {hi}")
        self.echo("allowed second-order transitions")
        for a, b in space.transitions_:
            self.echo(f"  {a} <-> {b}")
        self.write("transitions.json", {"bordering": space.graph_.to_json(),
                                        "allowed": [list(pr) for pr in space.transitions_]})

    def section(self, args) -> None:
        space = self.fitted()
        sec = space.section(args.r2, args.grid)
        labels = sec.labels + sec.boundary_labels
        counts = {lab: labels.count(lab) for lab in sorted(set(labels))}
        self.echo(f"section p{self.cfg.mib.q} = {sec.r2}: grid {sec.shape}, "
                  f"{len(sec.boundary)} boundary points, {sec.n_components()} inside component(s)")
        for lab, k in counts.items():
            self.echo(f"  {lab:<10} {k}")
        self.write("section.csv", sec.to_csv())

    def phases(self, args) -> None:
        space = self.fitted()
        if self.cfg.potential is None:
            raise ConfigError("configuration has no potential")
        point = space.stable_phase()
        n, z, magnetic = observables(point.p) if self.cfg.mib.q == 3 else (float(point.p[-1]), float("nan"), False)
        self.echo(f"stable phase at {_fmt_params(point.parameters)}: {point.label}  V = {point.value:.12g}"
                  + ("  (degenerate)" if point.degenerate else ""))
        report = {"stable_phase": {**point.to_dict(), "observables": {"n": n, "z": z, "magnetic": magnetic}}}
        if self.cfg.sweep:
            sweep = space.phase_sweep()
            self.echo(f"sweep over {', '.join(sweep.axes)}: {len(sweep.points)} cells")
            for tr in sweep.transitions:
                self.echo(f"  {tr.from_label} -> {tr.to_label} between {_fmt_params(tr.before)} "
                          f"and {_fmt_params(tr.after)}: {tr.annotation}")
            report["sweep"] = {"axes": {k: [str(v) for v in vs] for k, vs in sweep.axes.items()},
                               "labels": [pt.label for pt in sweep.points],
                               "transitions": [tr.to_dict() for tr in sweep.transitions]}
            self.write("phases.csv", sweep.to_csv())
        self.write("phases.json", report)


def _fmt_vec(v) -> str:
    return "(" + ", ".join(f"{float(a):.6g}" for a in v) + ")"


def _fmt_params(params) -> str:
    return ", ".join(f"{k}={v}" for k, v in params.items())


def _compare(expected: Any, actual: Any, path: str, rtol: float, problems: list[str]) -> None:
    if isinstance(expected, dict) and isinstance(actual, dict):
        if set(expected) != set(actual):
            problems.append(f"{path}: keys {sorted(expected)} != {sorted(actual)}")
            return
        for k in expected:
            _compare(expected[k], actual[k], f"{path}.{k}", rtol, problems)
    elif isinstance(expected, list) and isinstance(actual, list):
        if len(expected) != len(actual):
            problems.append(f"{path}: length {len(expected)} != {len(actual)}")
            return
        for i, (e, a) in enumerate(zip(expected, actual)):
            _compare(e, a, f"{path}[{i}]", rtol, problems)
    elif isinstance(expected, bool) or isinstance(actual, bool):
        if expected is not actual:
            problems.append(f"{path}: {expected!r} != {actual!r}")
    elif isinstance(expected, (int, float)) and isinstance(actual, (int, float)):
        if not math.isclose(expected, actual, rel_tol=rtol, abs_tol=rtol):
            problems.append(f"{path}: {expected!r} != {actual!r}")
    elif expected != actual:
        problems.append(f"{path}: {expected!r} != {actual!r}")


def compare_golden(golden: Path, produced: dict[str, str], rtol: float = GOLDEN_RTOL) -> list[str]:
    """Differences between produced JSON artifacts and the golden files present in ``golden``."""
    problems: list[str] = []
    for name, text in sorted(produced.items()):
        ref = golden / name
        if not name.endswith(".json") or not ref.exists():
            continue
        _compare(json.loads(ref.read_text(encoding="utf-8")), json.loads(text), name, rtol, problems)
    return problems


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="orbitspace",
        description="Orbit-space analysis of Landau potentials: P-hat matrix, strata, transitions, phases.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("config", nargs="?", help="JSON analysis configuration (default: bundled example)")
    parser.add_argument("--out", type=Path, help="directory for JSON/CSV artifacts")
    parser.add_argument("--golden", type=Path, help="directory of expected JSON outputs to compare against")
    parser.add_argument("--seed", type=int, help="override the configured random seed")
    parser.add_argument("--r2", type=float, help="value of the last invariant on the section plane")
    parser.add_argument("--grid", type=int, help="grid points per axis for the section")
    parser.add_argument("--point", action="append", help="extra point for isotropy, comma separated")
    parser.add_argument("-q", "--quiet", action="store_true", help="suppress the human-readable tables")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    echo = (lambda s: None) if args.quiet else (lambda s: print(s))
    err = lambda s: print(f"orbitspace: {s}", file=sys.stderr)  # noqa: E731
    try:
        cfg = AnalysisConfig.from_json(args.config or example_config_path())
        if args.r2 is not None and args.r2 <= 0:
            raise ConfigError("--r2 must be positive")
        if args.grid is not None and args.grid < 2:
            raise ConfigError("--grid must be at least 2")
    except (ConfigError, OSError, ValueError) as exc:
        err(f"invalid configuration: {exc}")
        return EXIT_VALIDATION

    runner = Runner(cfg, args.out, args.seed, echo)
    steps = ["verify", "phat", "active", "strata", "isotropy", "transitions", "section", "phases"] \
        if args.command == "all" else [args.command]
    if args.command == "all" and cfg.potential is None:
        steps.remove("phases")
    try:
        for step in steps:
            getattr(runner, step)(args)
    except InvarianceError as exc:
        err(f"invariance check failed: {exc}")
        return EXIT_COMPUTATION
    except (NotExpressible, IncompleteCover, AllUnbounded, Unbounded, Empty, NoMatch, ClosureExceeded) as exc:
        err(f"{type(exc).__name__}: {exc}")
        return EXIT_COMPUTATION
    except (ConfigError, PotentialError) as exc:
        err(f"invalid configuration: {exc}")
        return EXIT_VALIDATION

    if args.golden is not None:
        if not args.golden.is_dir():
            err(f"golden directory {args.golden} does not exist")
            return EXIT_VALIDATION
        problems = compare_golden(args.golden, runner.produced)
        if problems:
            for p in problems[:50]:
                err(f"golden mismatch: {p}")
            return EXIT_GOLDEN
        echo(f"golden comparison against {args.golden}: ok")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
