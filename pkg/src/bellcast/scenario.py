"""N-party, two-setting, two-outcome Bell scenarios and their behaviors.

A behavior is stored as a dense ``(2**n, 2**n)`` array ``table[s, o]`` holding
``P(o | s)``.  Settings and outcomes are both packed as N-bit integers with bit
``i`` belonging to party ``i`` (party 0 is the first party).  An outcome bit of
0 means ``+1`` and a bit of 1 means ``-1``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

MIN_PARTIES = 2
MAX_PARTIES = 8

EXACT_TOL = 1e-12
NUMERIC_TOL = 1e-9


class ScenarioError(ValueError):
    """Malformed scenario or behavior data."""


class MissingEntriesError(ScenarioError):
    def __init__(self, missing: list[tuple[tuple[int, ...], tuple[str, ...]]]):
        self.missing = missing
        shown = ", ".join(f"{s}/{''.join(o)}" for s, o in missing[:8])
        more = f" (+{len(missing) - 8} more)" if len(missing) > 8 else ""
        super().__init__(f"behavior table is missing {len(missing)} entries: {shown}{more}")


class SignalingError(ScenarioError):
    """Raised when an operation needs context-free marginals but the behavior signals."""

    def __init__(self, report: "NoSignalingReport", message: str | None = None):
        self.report = report
        super().__init__(
            message
            or f"behavior is signaling (max deviation {report.max_deviation:.3g} "
            f"at parties {report.worst_case[0]}, settings {report.worst_case[1]})"
        )


def check_n(n: int) -> int:
    if not isinstance(n, (int, np.integer)) or not MIN_PARTIES <= n <= MAX_PARTIES:
        raise ScenarioError(f"number of parties must be in [{MIN_PARTIES}, {MAX_PARTIES}], got {n!r}")
    return int(n)


def pack_bits(bits: Sequence[int]) -> int:
    return sum(int(b) << i for i, b in enumerate(bits))


def unpack_bits(value: int, n: int) -> tuple[int, ...]:
    return tuple((value >> i) & 1 for i in range(n))


def sign_to_bit(sign: int | str) -> int:
    if sign in (1, "+", "+1"):
        return 0
    if sign in (-1, "-", "-1", "−"):
        return 1
    raise ScenarioError(f"invalid outcome {sign!r}; expected +1/-1 or '+'/'-'")


def bit_to_sign(bit: int) -> int:
    return -1 if bit else 1


def outcome_signs(n: int) -> np.ndarray:
    """``(2**n, n)`` array of outcome signs, row ``o`` is outcome index ``o``."""
    o = np.arange(2**n)[:, None]
    return 1 - 2 * ((o >> np.arange(n)) & 1)


@dataclass(frozen=True)
class Scenario:
    num_parties: int
    settings_per_party: int = field(default=2, init=False)
    outcomes_per_party: int = field(default=2, init=False)

    def __post_init__(self):
        object.__setattr__(self, "num_parties", check_n(self.num_parties))

    @property
    def n(self) -> int:
        return self.num_parties

    @property
    def shape(self) -> tuple[int, int]:
        return (2**self.num_parties, 2**self.num_parties)


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    normalization_deviation: float
    range_violation: float
    worst_settings: int | None = None

    @property
    def max_deviation(self) -> float:
        return max(self.normalization_deviation, self.range_violation)


@dataclass(frozen=True)
class NoSignalingReport:
    is_no_signaling: bool
    max_deviation: float
    # (subset of parties whose marginal moved, their settings)
    worst_case: tuple[tuple[int, ...], tuple[int, ...]]


class Behavior:
    """Immutable conditional probability table ``P(outcomes | settings)``."""

    __slots__ = ("_n", "_table")

    def __init__(self, n: int, table, *, tol: float | None = None):
        n = check_n(n)
        arr = np.array(table, dtype=float)
        if arr.size != 4**n:
            raise ScenarioError(f"table for n={n} needs {4**n} entries, got {arr.size}")
        arr = arr.reshape(2**n, 2**n)
        arr.setflags(write=False)
        self._n = n
        self._table = arr
        if tol is not None:
            report = validate(self, tol)
            if not report.ok:
                raise ScenarioError(
                    f"invalid behavior: normalization deviation {report.normalization_deviation:.3g}, "
                    f"range violation {report.range_violation:.3g} (tol {tol:g})"
                )

    @property
    def n(self) -> int:
        return self._n

    @property
    def scenario(self) -> Scenario:
        return Scenario(self._n)

    @property
    def table(self) -> np.ndarray:
        return self._table

    def prob(self, settings: Sequence[int], outcomes: Sequence[int | str]) -> float:
        return float(self._table[pack_bits(settings), pack_bits([sign_to_bit(o) for o in outcomes])])

    def __eq__(self, other):
        if not isinstance(other, Behavior):
            return NotImplemented
        return self._n == other._n and np.array_equal(self._table, other._table)

    def __hash__(self):
        return hash((self._n, self._table.tobytes()))

    def __repr__(self):
        return f"Behavior(n={self._n})"

    def allclose(self, other: "Behavior", atol: float = NUMERIC_TOL) -> bool:
        return self._n == other._n and bool(np.allclose(self._table, other._table, rtol=0, atol=atol))

    def mix(self, other: "Behavior", q: float) -> "Behavior":
        """Convex mixture ``q * self + (1 - q) * other``."""
        if other.n != self._n:
            raise ScenarioError("cannot mix behaviors of different party counts")
        return Behavior(self._n, q * self._table + (1 - q) * other._table)

    @classmethod
    def uniform(cls, n: int) -> "Behavior":
        n = check_n(n)
        return cls(n, np.full((2**n, 2**n), 1.0 / 2**n))

    @classmethod
    def deterministic(cls, n: int, response) -> "Behavior":
        """Behavior from a response function mapping a settings tuple to an outcome-sign tuple."""
        n = check_n(n)
        table = np.zeros((2**n, 2**n))
        for s in range(2**n):
            signs = response(unpack_bits(s, n))
            table[s, pack_bits([sign_to_bit(x) for x in signs])] = 1.0
        return cls(n, table)

    # -- JSON ---------------------------------------------------------------

    def to_dict(self) -> dict:
        rows = []
        for s in range(2**self._n):
            for o in range(2**self._n):
                rows.append(
                    {
                        "settings": list(unpack_bits(s, self._n)),
                        "outcomes": ["-" if b else "+" for b in unpack_bits(o, self._n)],
                        "p": float(self._table[s, o]),
                    }
                )
        return {"n": self._n, "table": rows}

    @classmethod
    def from_dict(cls, data: dict, *, tol: float | None = NUMERIC_TOL) -> "Behavior":
        try:
            n = check_n(data["n"])
            rows = data["table"]
        except (KeyError, TypeError) as exc:
            raise ScenarioError(f"behavior JSON needs 'n' and 'table': {exc}") from None
        table = np.full((2**n, 2**n), np.nan)
        for row in rows:
            settings, outcomes = row["settings"], row["outcomes"]
            if len(settings) != n or len(outcomes) != n:
                raise ScenarioError(f"entry {row!r} does not have {n} settings and outcomes")
            if any(x not in (0, 1) for x in settings):
                raise ScenarioError(f"settings must be 0/1, got {settings!r}")
            s = pack_bits(settings)
            o = pack_bits([sign_to_bit(x) for x in outcomes])
            if not np.isnan(table[s, o]):
                raise ScenarioError(f"duplicate entry for settings {settings}, outcomes {outcomes}")
            table[s, o] = float(row["p"])
        missing = [
            (unpack_bits(s, n), tuple("-" if b else "+" for b in unpack_bits(o, n)))
            for s, o in zip(*np.nonzero(np.isnan(table)))
        ]
        if missing:
            raise MissingEntriesError(missing)
        return cls(n, table, tol=tol)

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text: str, *, tol: float | None = NUMERIC_TOL) -> "Behavior":
        return cls.from_dict(json.loads(text), tol=tol)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(indent=1))

    @classmethod
    def load(cls, path: str | Path, *, tol: float | None = NUMERIC_TOL) -> "Behavior":
        return cls.from_json(Path(path).read_text(), tol=tol)


def validate(behavior: Behavior, tol: float = NUMERIC_TOL) -> ValidationReport:
    table = behavior.table
    if table.shape != behavior.scenario.shape or not np.all(np.isfinite(table)):
        return ValidationReport(False, float("inf"), float("inf"))
    norm_dev = np.abs(table.sum(axis=1) - 1.0)
    range_viol = max(float(-table.min()), float(table.max() - 1.0), 0.0)
    worst = int(np.argmax(norm_dev))
    norm = float(norm_dev[worst])
    return ValidationReport(norm <= tol and range_viol <= tol, norm, range_viol, worst)


def _party_tensor(behavior: Behavior) -> np.ndarray:
    """Reshape the table so axis ``i`` is party i's setting and axis ``n + i`` its outcome."""
    n = behavior.n
    t = behavior.table.reshape((2,) * (2 * n))
    # C-order reshape puts the most significant bit first; reverse to party order.
    return t.transpose(list(range(n - 1, -1, -1)) + list(range(2 * n - 1, n - 1, -1)))


def _marginal_spread(tensor: np.ndarray, n: int, keep: Sequence[int]):
    """Marginal of ``keep`` for every complement setting, plus its spread across those settings."""
    drop = [i for i in range(n) if i not in keep]
    m = tensor.sum(axis=tuple(n + i for i in drop))
    if not drop:
        return m, np.zeros(m.shape)
    spread = m.max(axis=tuple(drop)) - m.min(axis=tuple(drop))
    return m, spread


def no_signaling_report(behavior: Behavior, tol: float = NUMERIC_TOL) -> NoSignalingReport:
    n = behavior.n
    tensor = _party_tensor(behavior)
    worst = 0.0
    worst_case: tuple[tuple[int, ...], tuple[int, ...]] = ((), ())
    for size in range(1, n):
        for keep in itertools.combinations(range(n), size):
            _, spread = _marginal_spread(tensor, n, keep)
            # spread axes: kept settings (in party order), then kept outcomes
            per_setting = spread.reshape((2,) * size + (-1,)).max(axis=-1)
            idx = np.unravel_index(int(np.argmax(per_setting)), per_setting.shape)
            value = float(per_setting[idx])
            if value > worst:
                worst = value
                worst_case = (keep, tuple(int(i) for i in idx))
    return NoSignalingReport(worst <= tol, worst, worst_case)


def marginal(behavior: Behavior, parties: Iterable[int], tol: float = NUMERIC_TOL) -> Behavior:
    """Behavior of the sub-scenario on ``parties`` (0-based, returned in increasing order)."""
    n = behavior.n
    keep = tuple(sorted(set(parties)))
    if not keep or any(not 0 <= p < n for p in keep):
        raise ScenarioError(f"invalid party subset {parties!r} for n={n}")
    if len(keep) < MIN_PARTIES:
        raise ScenarioError("single-party marginals are not behaviors; use marginal_table()")
    return Behavior(len(keep), marginal_table(behavior, keep, tol))


def marginal_table(behavior: Behavior, parties: Iterable[int], tol: float = NUMERIC_TOL) -> np.ndarray:
    """``(2**k, 2**k)`` marginal table of ``parties``; works for any subset size including 1."""
    n = behavior.n
    keep = tuple(sorted(set(parties)))
    if not keep or any(not 0 <= p < n for p in keep):
        raise ScenarioError(f"invalid party subset {parties!r} for n={n}")
    tensor = _party_tensor(behavior)
    m, spread = _marginal_spread(tensor, n, keep)
    dev = float(spread.max()) if spread.size else 0.0
    if dev > tol:
        idx = np.unravel_index(int(np.argmax(spread)), spread.shape)
        report = NoSignalingReport(False, dev, (keep, tuple(int(i) for i in idx[: len(keep)])))
        raise SignalingError(report)
    drop = [i for i in range(n) if i not in keep]
    if drop:
        m = m[tuple(0 if i in drop else slice(None) for i in range(n))]
    k = len(keep)
    # back to packed layout: reverse party axes so party 0 is the least significant bit
    m = m.transpose(list(range(k - 1, -1, -1)) + list(range(2 * k - 1, k - 1, -1)))
    return np.ascontiguousarray(m).reshape(2**k, 2**k)


def correlator(behavior: Behavior, settings: Sequence[int]) -> float:
    """Expectation of the product of all outcome signs at ``settings``."""
    n = behavior.n
    if len(settings) != n:
        raise ScenarioError(f"need {n} settings, got {len(settings)}")
    parity = outcome_signs(n).prod(axis=1)
    return float(parity @ behavior.table[pack_bits(settings)])
