"""Reproduction suite: every headline number and structural claim, as named checks."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .expressions import Expression, Term, builtin, combine, evaluate
from .optimize import (
    BRANCH1_CHI,
    BRANCH1_GAMMA,
    SearchConfig,
    appendix_branch1,
    appendix_branch2,
    branch1_params,
    branch2_params,
    default_grid,
    maximize,
    r3_threshold,
    sweep,
)
from .polytopes import ModelClass, bound, certificate_is_valid, enumerate_vertices, membership
from .quantum import (
    born_behavior,
    broadcast_reproduction,
    ghz_paper_correlation,
    ghz_state,
    settings_from_params,
    svetlichny_settings,
)

SQRT2 = math.sqrt(2.0)

REFERENCE_BOUNDS = (
    ("S3", "BL", 4.0),
    ("S3", "BC1", 4.0),
    ("Sprime", "BL", 1.0),
    ("Sprime", "BC1", 2.0),
    ("I", "BL", 5.0),
    ("I", "BC1", 6.0),
    ("R3", "BC1", 0.0),
    ("R3", "BL", 1.0),
    ("T", "BC1", 2.0),
    ("T", "BL", 4.0),
)

CHAIN = ("Local", "NSBL", "TOBL", "BL", "BC1")


@dataclass
class Check:
    name: str
    expected: object
    actual: object
    tolerance: float | None
    passed: bool


@dataclass
class VerifyReport:
    suite: str
    seed: int
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, expected, actual, tolerance: float | None, passed: bool) -> Check:
        check = Check(name, _plain(expected), _plain(actual), tolerance, bool(passed))
        self.checks.append(check)
        return check

    def close(self, name: str, expected: float, actual: float, tolerance: float) -> Check:
        return self.add(name, expected, actual, tolerance, abs(actual - expected) <= tolerance)

    def to_dict(self) -> dict:
        return {"suite": self.suite, "seed": self.seed, "passed": self.passed,
                "checks": [asdict(c) for c in self.checks]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def table(self) -> str:
        width = max(len(c.name) for c in self.checks) if self.checks else 10
        lines = [f"{'check':<{width}}  {'expected':>16}  {'actual':>20}  {'tol':>8}  result"]
        for c in self.checks:
            tol = "" if c.tolerance is None else f"{c.tolerance:.0e}"
            lines.append(f"{c.name:<{width}}  {_show(c.expected):>16}  {_show(c.actual):>20}  {tol:>8}  "
                         f"{'PASS' if c.passed else 'FAIL'}")
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'} "
                     f"({sum(c.passed for c in self.checks)}/{len(self.checks)})")
        return "\n".join(lines)


def _plain(x):
    if isinstance(x, (np.floating, float)):
        return float(f"{float(x):.12g}")
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def _show(x) -> str:
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


def random_expression(rng: np.random.Generator, n: int = 3, max_terms: int = 8) -> Expression:
    """Random integer-coefficient expression mixing full and partial probability terms."""
    terms = []
    for _ in range(int(rng.integers(2, max_terms + 1))):
        size = int(rng.integers(1, n + 1))
        parties = sorted(rng.choice(n, size=size, replace=False).tolist())
        factors = tuple((p, int(rng.integers(2)), int(rng.choice([1, -1]))) for p in parties)
        coef = int(rng.choice([-3, -2, -1, 1, 2, 3]))
        terms.append(Term(coef, factors))
    return combine(terms, n, name="random")


def svetlichny_behavior():
    t, params = svetlichny_settings()
    return born_behavior(ghz_state(3, t), settings_from_params(params))


def branch1_grid(points: int = 20, seed: int = 7) -> list[tuple[float, float, float]]:
    rng = np.random.default_rng(seed)
    ts = np.linspace(math.pi / 4 / points, math.pi / 4, points)
    return [(float(t), float(rng.uniform(0, 2 * math.pi)), float(rng.uniform(0, 2 * math.pi))) for t in ts]


def branch1_oracle(t: float, chi: float, gamma: float) -> float:
    behavior = born_behavior(ghz_state(3, t), settings_from_params(branch1_params(chi, gamma)))
    return evaluate(builtin("R3"), behavior)


def branch2_oracle(t: float) -> float:
    behavior = born_behavior(ghz_state(3, t), settings_from_params(branch2_params(t)))
    return evaluate(builtin("R3"), behavior)


BRANCH2_TS = tuple(round(0.05 * k, 2) for k in range(1, 14))


def check_bounds(report: VerifyReport) -> None:
    for name, model, expected in REFERENCE_BOUNDS:
        value, _ = bound(builtin(name), ModelClass.parse(model))
        report.close(f"bound {name} {model}", expected, value, 1e-9)
    report.close("bound R3 Local", 0.0, bound(builtin("R3"), ModelClass("Local")).value, 1e-9)
    report.close("bound B Local", 2.0, bound(builtin("B"), ModelClass("Local")).value, 1e-9)


def check_quantum_points(report: VerifyReport) -> None:
    sv = svetlichny_behavior()
    report.close("S3 at Svetlichny settings", 4 * SQRT2, evaluate(builtin("S3"), sv), 1e-6)
    report.close("I at Svetlichny settings", 4 * SQRT2 + 0.5, evaluate(builtin("I"), sv), 1e-6)


def check_r3_maximum(report: VerifyReport, seed: int = 1, restarts: int = 64) -> None:
    r3max = maximize(builtin("R3"), 3, math.pi / 4, SearchConfig(restarts=restarts, seed=seed)).value
    report.add("R3 max at pi/4 in [0.0359, 0.0369]", 0.0364, r3max, 5e-4, 0.0359 <= r3max <= 0.0369)


def check_closed_forms(report: VerifyReport) -> None:
    worst = max(abs(appendix_branch1(*p) - branch1_oracle(*p)) for p in branch1_grid())
    report.add("branch 1 vs Born rule, 20 points", 0.0, worst, 1e-9, worst < 1e-9)
    thr = r3_threshold()
    report.close("R3 threshold", 0.6187, thr, 1e-3)
    below = appendix_branch1(thr - 0.01, BRANCH1_CHI, BRANCH1_GAMMA)
    above = appendix_branch1(thr + 0.01, BRANCH1_CHI, BRANCH1_GAMMA)
    report.add("branch 1 sign change at threshold", "-/+", f"{'-' if below < 0 else '+'}/{'-' if above < 0 else '+'}",
               None, below < 0 < above)
    report.close("branch 1 at pi/4", 0.0364, appendix_branch1(math.pi / 4, BRANCH1_CHI, BRANCH1_GAMMA), 5e-5)
    worst2 = max(abs(appendix_branch2(t) - branch2_oracle(t)) for t in BRANCH2_TS)
    report.add("branch 2 vs Born rule", 0.0, worst2, 1e-7, worst2 < 1e-7)
    low = min(appendix_branch2(t) for t in BRANCH2_TS)
    report.add("branch 2 positive on 0.05..0.65", "> 0", low, None, low > 0)


def check_sweep(report: VerifyReport, n: int, seed: int = 1, points: int = 50, restarts: int = 4) -> None:
    curve = sweep(builtin("RN", n), n, default_grid(points), SearchConfig(restarts=restarts, seed=seed))
    vals = curve.values[curve.t >= 0.02]
    report.add(f"sweep R{n} positive for t >= 0.02", "> 0", float(vals.min()), None, bool(np.all(vals > 0)))


def check_anonymity(report: VerifyReport) -> None:
    for n in range(3, 7):
        diff = float(np.max(np.abs(broadcast_reproduction(n).table - ghz_paper_correlation(n).table)))
        report.add(f"broadcast reproduction = GHZ correlation, n={n}", 0.0, diff, 1e-12, diff <= 1e-12)
    ghz3 = ghz_paper_correlation(3)
    report.close("Mermin3 on GHZ correlation", 4.0, evaluate(builtin("Mermin3"), ghz3), 1e-12)
    for j in range(3):
        res = membership(ghz3, ModelClass("BC1", first=j))
        report.add(f"GHZ correlation in BC1 with first party {j + 1}", True, res.member, None, res.member)


def check_structure(report: VerifyReport, seed: int = 1) -> None:
    exprs = [builtin(name) for name in ("S3", "Sprime", "I", "R3", "T", "B", "Mermin3")]
    rng = np.random.default_rng(seed)
    exprs += [random_expression(rng) for _ in range(100)]
    violations = 0
    for e in exprs:
        b = {m: bound(e, ModelClass(m)).value for m in CHAIN}
        ok = (b["Local"] <= b["NSBL"] + 1e-9 and b["NSBL"] <= b["TOBL"] + 1e-9
              and b["TOBL"] <= min(b["BL"], b["BC1"]) + 1e-9)
        violations += not ok
    report.add(f"inclusion chain on {len(exprs)} expressions", 0, violations, None, violations == 0)
    for m in CHAIN:
        vs = enumerate_vertices(ModelClass(m), 3)
        bad = sum(not membership(vs.behavior(i), ModelClass(m)).member for i in range(len(vs)))
        report.add(f"{m} vertices are members ({len(vs)})", 0, bad, None, bad == 0)
    sv = svetlichny_behavior()
    res = membership(sv, ModelClass("BL"))
    valid = certificate_is_valid(res, sv, enumerate_vertices(ModelClass("BL"), 3))
    report.add("Svetlichny GHZ behavior outside BL", "certificate", "certificate" if valid else "none",
               None, (not res.member) and valid)


def run_paper_suite(seed: int = 1, *, sweep_ns=(3, 4, 5, 6), sweep_points: int = 50,
                    sweep_restarts: int = 4, qmax_restarts: int = 64,
                    progress: Callable[[str], None] | None = None) -> VerifyReport:
    report = VerifyReport("paper", seed)
    say = progress or (lambda msg: None)
    say("exact bounds")
    check_bounds(report)
    say("quantum point values")
    check_quantum_points(report)
    say("R3 maximum at t = pi/4")
    check_r3_maximum(report, seed, qmax_restarts)
    say("closed forms")
    check_closed_forms(report)
    for n in sweep_ns:
        say(f"sweep R{n}")
        check_sweep(report, n, seed, sweep_points, sweep_restarts)
    say("GHZ anonymity")
    check_anonymity(report)
    say("structure")
    check_structure(report, seed)
    return report
