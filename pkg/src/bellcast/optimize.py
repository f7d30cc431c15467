"""Maximizing quantum values of expressions over measurement angles on GHZ-like states.

Two search spaces:

* ``paper_parametrization``: ``(alpha, beta, gamma, phi_1..phi_n)``, the shared
  polar angles and relative azimuth of :class:`~bellcast.quantum.MeasurementParams`.
* ``general_per_party``: independent polar and azimuthal angles for every party
  and setting (``4n`` parameters).

Local search is Nelder-Mead from uniform random starts in ``[0, 2 pi)^k``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize

from .expressions import Expression
from .quantum import (
    TWO_PI,
    MeasurementParams,
    born_table,
    eigenbases,
    ghz_state,
    param_angles,
)

MODES = ("paper_parametrization", "general_per_party")


@dataclass(frozen=True)
class SearchConfig:
    restarts: int = 64
    seed: int = 1
    convergence_tol: float = 1e-8
    max_iterations: int = 2000
    mode: str = "paper_parametrization"

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if not self.convergence_tol > 0:
            raise ValueError("convergence_tol must be positive")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")


@dataclass(frozen=True)
class GeneralParams:
    """Independent angles; ``polar[i, s]`` and ``azimuth[i, s]`` for party i, setting s."""

    polar: np.ndarray
    azimuth: np.ndarray

    @property
    def n(self) -> int:
        return self.polar.shape[0]

    def to_vector(self) -> np.ndarray:
        return np.concatenate([np.ravel(self.polar), np.ravel(self.azimuth)])

    @classmethod
    def from_vector(cls, x: Sequence[float], n: int) -> "GeneralParams":
        x = np.asarray(x, dtype=float)
        return cls(x[: 2 * n].reshape(n, 2), x[2 * n:].reshape(n, 2))

    @classmethod
    def from_paper(cls, params: MeasurementParams) -> "GeneralParams":
        return cls(*param_angles(params))

    def to_dict(self) -> dict:
        return {"polar": np.mod(self.polar, TWO_PI).tolist(), "azimuth": np.mod(self.azimuth, TWO_PI).tolist()}


@dataclass(frozen=True)
class OptimizationResult:
    value: float
    params: MeasurementParams | GeneralParams
    evaluations: int = field(default=0, compare=False)

    def __iter__(self):
        # allows ``value, params = maximize(...)``
        return iter((self.value, self.params))


class QuantumObjective:
    """Value of ``expr`` on the GHZ-like state at angle ``t`` as a function of a parameter vector."""

    def __init__(self, expr: Expression, n: int, t: float, mode: str = "paper_parametrization"):
        if expr.n != n:
            raise ValueError(f"expression {expr.name!r} has n={expr.n}, requested n={n}")
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        self.expr = expr
        self.n = n
        self.t = float(t)
        self.mode = mode
        self.amplitudes = ghz_state(n, t).amplitudes
        self.coefficients = expr.coefficients
        self.dim = n + 3 if mode == "paper_parametrization" else 4 * n
        self.calls = 0
        # only settings rows the expression touches; the state has support on |0..0> and |1..1>
        self._rows = np.flatnonzero(np.any(self.coefficients != 0, axis=1))
        self._row_settings = (self._rows[:, None] >> np.arange(n)) & 1
        self._row_coefficients = self.coefficients[self._rows]
        self._c, self._s = math.cos(self.t), math.sin(self.t)

    def angles(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if self.mode == "paper_parametrization":
            return param_angles(MeasurementParams.from_vector(x))
        g = GeneralParams.from_vector(x, self.n)
        return g.polar, g.azimuth

    def params(self, x: np.ndarray) -> MeasurementParams | GeneralParams:
        if self.mode == "paper_parametrization":
            return MeasurementParams.from_vector(x).reduced()
        return GeneralParams.from_vector(np.mod(x, TWO_PI), self.n)

    def vector(self, params: MeasurementParams | GeneralParams) -> np.ndarray:
        if self.mode == "paper_parametrization":
            if not isinstance(params, MeasurementParams):
                raise TypeError("paper mode needs MeasurementParams")
            return params.to_vector()
        if isinstance(params, MeasurementParams):
            params = GeneralParams.from_paper(params)
        return params.to_vector()

    def __call__(self, x) -> float:
        self.calls += 1
        bras = eigenbases(*self.angles(np.asarray(x, dtype=float)))
        # (rows, party, outcome, component)
        u = bras[np.arange(self.n), self._row_settings]
        zero, one = u[:, 0, :, 0], u[:, 0, :, 1]
        for i in range(1, self.n):
            zero = (u[:, i, :, 0][:, :, None] * zero[:, None, :]).reshape(len(u), -1)
            one = (u[:, i, :, 1][:, :, None] * one[:, None, :]).reshape(len(u), -1)
        probs = np.abs(self._c * zero + self._s * one) ** 2
        return float(np.sum(self._row_coefficients * probs))

    def full_table(self, x) -> np.ndarray:
        """Dense Born table at ``x`` (reference path)."""
        return born_table(self.amplitudes, eigenbases(*self.angles(np.asarray(x, dtype=float))))


def _local_search(obj: QuantumObjective, x0: np.ndarray, config: SearchConfig) -> tuple[float, np.ndarray]:
    res = minimize(
        lambda x: -obj(x),
        x0,
        method="Nelder-Mead",
        options={
            "xatol": config.convergence_tol,
            "fatol": config.convergence_tol,
            "maxiter": config.max_iterations,
            "maxfev": 2 * config.max_iterations,
            "adaptive": obj.dim > 8,
        },
    )
    x = np.asarray(res.x, dtype=float)
    return obj(x), x


def _starts(dim: int, config: SearchConfig, stream: int = 0) -> list[np.ndarray]:
    children = np.random.SeedSequence([config.seed, stream]).spawn(config.restarts)
    return [np.random.default_rng(c).uniform(0.0, TWO_PI, dim) for c in children]


def maximize(expr: Expression, n: int, t: float, config: SearchConfig | None = None, *,
             initial: Iterable[MeasurementParams | GeneralParams] = (), stream: int = 0) -> OptimizationResult:
    """Best value of ``expr`` found by multistart Nelder-Mead.

    ``initial`` parameter points are searched from in addition to the random
    restarts.  In general mode the shared-shape optimum is always one of the
    starting points, so the general search never reports less than it.
    Deterministic for a given ``config`` (seed) and ``stream``.
    """
    config = config or SearchConfig()
    if not 0 < t <= math.pi / 4 + 1e-15:
        raise ValueError(f"t must lie in (0, pi/4], got {t}")
    obj = QuantumObjective(expr, n, t, config.mode)
    starts = [obj.vector(p) for p in initial]
    if config.mode == "general_per_party":
        paper = maximize(expr, n, t, replace(config, mode="paper_parametrization"),
                         initial=[p for p in initial if isinstance(p, MeasurementParams)], stream=stream)
        starts.append(obj.vector(paper.params))
    starts += _starts(obj.dim, config, stream)

    best_value, best_x = -math.inf, None
    for x0 in starts:
        # keep the start itself so a warm start can never be lost
        v0 = obj(x0)
        if v0 > best_value:
            best_value, best_x = v0, x0
        value, x = _local_search(obj, x0, config)
        if value > best_value:
            best_value, best_x = value, x
    return OptimizationResult(best_value, obj.params(best_x), obj.calls)


# -- sweeps -------------------------------------------------------------------------

@dataclass(frozen=True)
class CurvePoint:
    t: float
    value: float
    params: MeasurementParams | GeneralParams


@dataclass(frozen=True)
class Curve:
    expression: str
    n: int
    points: tuple[CurvePoint, ...]

    def __post_init__(self):
        ts = [p.t for p in self.points]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("curve t values must be strictly increasing")
        if ts and not (ts[0] > 0 and ts[-1] <= math.pi / 4 + 1e-15):
            raise ValueError("curve t values must lie in (0, pi/4]")

    @property
    def t(self) -> np.ndarray:
        return np.array([p.t for p in self.points])

    @property
    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        general = bool(self.points) and isinstance(self.points[0].params, GeneralParams)
        if general:
            head = [f"{kind}_{i + 1}_{s}" for kind in ("polar", "azimuth") for i in range(self.n) for s in (0, 1)]
        else:
            head = ["alpha", "beta", "gamma"] + [f"phi{i + 1}" for i in range(self.n)]
        w.writerow(["t", "value"] + head)
        for p in self.points:
            if general:
                angles = np.mod(p.params.to_vector(), TWO_PI).tolist()
            else:
                angles = p.params.reduced().to_vector().tolist()
            w.writerow([_fmt(p.t), _fmt(p.value)] + [_fmt(a) for a in angles])
        return buf.getvalue()


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def default_grid(points: int = 50) -> np.ndarray:
    """``points`` uniform values in ``(0, pi/4]``, ending at ``pi/4``."""
    return np.linspace(math.pi / 4 / points, math.pi / 4, points)


def sweep(expr: Expression, n: int, t_grid: Sequence[float], config: SearchConfig | None = None) -> Curve:
    """Maximize at every grid point.

    Each point is searched from fresh restarts plus the optimum of its
    neighbour; the grid is walked upward and then downward so warm starts
    propagate in both directions.
    """
    config = config or SearchConfig()
    grid = [float(t) for t in t_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("t grid must be strictly increasing")
    best: list[OptimizationResult | None] = [None] * len(grid)
    for k, t in enumerate(grid):
        warm = [best[k - 1].params] if k else []
        best[k] = maximize(expr, n, t, config, initial=warm, stream=k)
    for k in range(len(grid) - 2, -1, -1):
        obj = QuantumObjective(expr, n, grid[k], config.mode)
        value, x = _local_search(obj, obj.vector(best[k + 1].params), config)
        if value > best[k].value:
            best[k] = OptimizationResult(value, obj.params(x), obj.calls)
    return Curve(expr.name, n, tuple(CurvePoint(t, r.value, r.params) for t, r in zip(grid, best)))


# -- closed forms for the three-party R functional -------------------------------

class DomainError(ValueError):
    pass


def appendix_branch1(t: float, chi: float, gamma: float) -> float:
    """Equatorial-settings value of R3: ``sin(2t)/8 [cos chi - 3 cos(chi+gamma) - 3 cos(chi+2gamma)] - 5/8``."""
    return math.sin(2 * t) / 8 * (math.cos(chi) - 3 * math.cos(chi + gamma) - 3 * math.cos(chi + 2 * gamma)) - 5 / 8


# optimum of the bracket for equatorial settings, to four decimals
BRANCH1_CHI = 1.3807
BRANCH1_GAMMA = 1.0472
BRANCH1_AMPLITUDE = 0.6614
BRANCH1_OFFSET = 0.625


def branch2_angles(t: float) -> tuple[float, float]:
    """``(cos a, cos b)`` of the small-t ansatz; raises :class:`DomainError` outside its domain."""
    r2 = 2 * t - t * t
    if r2 < 0:
        raise DomainError(f"2t - t^2 < 0 at t={t}")
    r = math.sqrt(r2)
    denom = 2 * t * math.cos(2 * t) + 4 * math.sin(t) ** 2 + (r2 + 2 * r) * math.sin(2 * t)
    if denom == 0:
        raise DomainError(f"cos b undefined at t={t}")
    cos_b = r2 * math.cos(2 * t) / denom
    if abs(cos_b) > 1 or abs(t - 1) > 1:
        raise DomainError(f"|cos| > 1 at t={t}")
    return t - 1, cos_b


def appendix_branch2(t: float) -> float:
    """Small-t closed form of R3 (``phi_i = 0``, ``cos a = t - 1``).

    The value is R3 itself (not a magnitude) at settings with polar angles
    ``-a`` and ``-b``, i.e. both tilted toward ``-sigma_1``; see
    :func:`branch2_params`.
    """
    _, cb = branch2_angles(t)
    sb = math.sqrt(1 - cb * cb)
    r2 = 2 * t - t * t
    r = math.sqrt(r2)
    return (
        math.sin(t) ** 2 / 8 * (3 * (cb - 1) * (t - 2) ** 2 + 3 * (cb + 1) ** 2 * (t - 2) - (t - 2) ** 3)
        - math.cos(t) ** 2 / 8 * (3 * t * t * (cb + 1) + 3 * t * (cb - 1) ** 2 - t**3)
        - math.sin(2 * t) / 8 * (r**3 - 3 * sb * r2 - 3 * sb**2 * r)
    )


def branch2_params(t: float, n: int = 3) -> MeasurementParams:
    ca, cb = branch2_angles(t)
    return MeasurementParams(-math.acos(ca), -math.acos(cb), 0.0, (0.0,) * n)


def branch1_params(chi: float, gamma: float, n: int = 3) -> MeasurementParams:
    half = math.pi / 2
    return MeasurementParams(half, half, gamma, (chi,) + (0.0,) * (n - 1))


def r3_threshold() -> float:
    """Smallest ``t`` for which the equatorial ansatz violates R3 <= 0."""
    return 0.5 * math.asin(BRANCH1_OFFSET / BRANCH1_AMPLITUDE)
