"""Correlation classes as vertex sets: enumeration, exact bounds, membership.

Supported classes and party counts:

========  =====  ===========================================================
Local     2..6   every party answers with a function of its own setting
BL        3      one singleton + an arbitrary deterministic two-party box
TOBL      3      singleton + a one-way signaling box (either direction)
NSBL      3      singleton + one of the 24 extremal no-signaling boxes
BC1       3      first party answers locally, the others also see its setting
OneWay    2..3   sender local, receiver sees the sender's setting
========  =====  ===========================================================

Bounds are maxima of the expression's coefficient table over vertices, so a
partial term is read with absent parties at setting 0, identical to the
objective used by the membership LP.
"""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .expressions import Expression
from .lp import FeasibilityResult, LPError, lp_feasibility
from .scenario import Behavior, ScenarioError, check_n, validate

KINDS = ("Local", "BL", "TOBL", "NSBL", "BC1", "OneWay")
LOCAL_MAX_N = 6
DEFAULT_LP_TOL = 1e-7
BOUND_DECIMALS = 12


class UnsupportedModelError(ValueError):
    pass


@dataclass(frozen=True)
class ModelClass:
    kind: str
    sender: int | None = None
    receiver: int | None = None
    # restrict BC1 to a single first-measured party
    first: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UnsupportedModelError(f"unknown model {self.kind!r}; known: {', '.join(KINDS)}")
        if self.kind == "OneWay":
            if self.sender is None or self.receiver is None or self.sender == self.receiver:
                raise UnsupportedModelError("OneWay needs distinct sender and receiver")
        elif self.sender is not None or self.receiver is not None:
            raise UnsupportedModelError(f"{self.kind} takes no sender/receiver")
        if self.first is not None and self.kind != "BC1":
            raise UnsupportedModelError("only BC1 can be restricted to a first party")

    def __str__(self):
        if self.kind == "OneWay":
            return f"OneWay({self.sender + 1},{self.receiver + 1})"
        if self.first is not None:
            return f"BC1[{self.first + 1}]"
        return self.kind

    @classmethod
    def parse(cls, text: str) -> "ModelClass":
        """Parse ``Local``, ``BL``, ``TOBL``, ``NSBL``, ``BC1``, ``BC1[2]`` or ``OneWay(1,2)`` (1-based)."""
        t = text.strip()
        for kind in ("Local", "BL", "TOBL", "NSBL", "BC1"):
            if t.lower() == kind.lower():
                return cls(kind)
        m = re.fullmatch(r"(?i)bc1\[(\d+)\]", t)
        if m:
            return cls("BC1", first=int(m.group(1)) - 1)
        m = re.fullmatch(r"(?i)oneway\((\d+)\s*,\s*(\d+)\)", t)
        if m:
            return cls("OneWay", sender=int(m.group(1)) - 1, receiver=int(m.group(2)) - 1)
        raise UnsupportedModelError(f"cannot parse model {text!r}")


@dataclass(frozen=True)
class VertexSet:
    model: ModelClass
    n: int
    # (V, 2**n, 2**n), read-only
    tables: np.ndarray = field(repr=False)
    # free-form family label per vertex (bipartition, broadcaster, ...)
    labels: tuple[str, ...] = field(repr=False)

    def __len__(self):
        return self.tables.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        """``(V, 4**n)`` view, one flattened table per row."""
        return self.tables.reshape(len(self), -1)

    def behavior(self, i: int) -> Behavior:
        return Behavior(self.n, self.tables[i])

    def behaviors(self) -> list[Behavior]:
        return [self.behavior(i) for i in range(len(self))]

    def to_json(self, **kwargs) -> str:
        return json.dumps([b.to_dict() for b in self.behaviors()], **kwargs)


class BoundResult(NamedTuple):
    value: float
    witness: Behavior


@dataclass(frozen=True)
class MembershipResult:
    member: bool
    # vertex index -> weight (member only)
    weights: dict[int, float]
    # coefficient table F with F.P > max_v F.v + gap (non-member only)
    certificate: np.ndarray | None
    gap: float
    reconstruction_error: float
    iterations: int

    def to_dict(self) -> dict:
        out = {"member": self.member, "iterations": self.iterations}
        if self.member:
            out["weights"] = {str(k): v for k, v in sorted(self.weights.items())}
            out["reconstruction_error"] = self.reconstruction_error
        else:
            out["certificate"] = self.certificate.tolist()
            out["gap"] = self.gap
        return out


# -- enumeration ----------------------------------------------------------------

def _functions_of(n: int, deps: tuple[int, ...]) -> np.ndarray:
    """All boolean functions of the settings of ``deps``, tabulated on full settings.

    Returns an ``(2**(2**len(deps)), 2**n)`` 0/1 array.
    """
    s = np.arange(2**n)
    local = sum(((s >> p) & 1) << k for k, p in enumerate(deps))
    k = 2 ** len(deps)
    truth = (np.arange(2**k)[:, None] >> np.arange(k)) & 1
    return truth[:, local]


def _deterministic(n: int, deps: list[tuple[int, ...]]) -> np.ndarray:
    """Tables of every vertex where party i's outcome is a function of settings ``deps[i]``."""
    per_party = [_functions_of(n, d) for d in deps]
    outcome = np.zeros((1, 2**n), dtype=np.int64)
    for i, funcs in enumerate(per_party):
        outcome = (outcome[:, None, :] + (funcs[None, :, :] << i)).reshape(-1, 2**n)
    tables = np.zeros((outcome.shape[0], 2**n, 2**n))
    v, s = np.meshgrid(np.arange(outcome.shape[0]), np.arange(2**n), indexing="ij")
    tables[v, s, outcome] = 1.0
    return tables


def _bipartitions(n: int):
    for single in range(n):
        group = tuple(p for p in range(n) if p != single)
        yield single, group


def nosignaling_boxes() -> np.ndarray:
    """The 24 extremal two-party no-signaling boxes, shape ``(24, 4, 4)``.

    Layout ``box[x + 2y, a + 2b]`` with outcome bits (0 is +1).  The first 16
    are local deterministic, the last 8 are PR-type boxes with
    ``a xor b = xy xor alpha x xor beta y xor gamma``.
    """
    boxes = []
    for a0, a1, b0, b1 in itertools.product((0, 1), repeat=4):
        box = np.zeros((4, 4))
        for x, y in itertools.product((0, 1), repeat=2):
            a = (a0, a1)[x]
            b = (b0, b1)[y]
            box[x + 2 * y, a + 2 * b] = 1.0
        boxes.append(box)
    for alpha, beta, gamma in itertools.product((0, 1), repeat=3):
        box = np.zeros((4, 4))
        for x, y, a, b in itertools.product((0, 1), repeat=4):
            if a ^ b == (x & y) ^ (alpha & x) ^ (beta & y) ^ gamma:
                box[x + 2 * y, a + 2 * b] = 0.5
        boxes.append(box)
    return np.array(boxes)


def _nsbl(n: int) -> tuple[np.ndarray, list[str]]:
    boxes = nosignaling_boxes()
    s = np.arange(2**n)
    o = np.arange(2**n)
    tables, labels = [], []
    for single, (g1, g2) in _bipartitions(n):
        gs = ((s >> g1) & 1) + 2 * ((s >> g2) & 1)
        go = ((o >> g1) & 1) + 2 * ((o >> g2) & 1)
        so = (s >> single) & 1
        oo = (o >> single) & 1
        for f0, f1 in itertools.product((0, 1), repeat=2):
            own = (oo[None, :] == np.where(so == 0, f0, f1)[:, None]).astype(float)
            for box in boxes:
                tables.append(own * box[gs[:, None], go[None, :]])
                labels.append(f"single={single}")
    return np.array(tables), labels


def _families(model: ModelClass, n: int) -> list[tuple[str, list[tuple[int, ...]]]]:
    kind = model.kind
    if kind == "Local":
        return [("local", [(i,) for i in range(n)])]
    if kind == "OneWay":
        s, r = model.sender, model.receiver
        if not (0 <= s < n and 0 <= r < n):
            raise UnsupportedModelError(f"OneWay parties out of range for n={n}")
        deps = [(i,) for i in range(n)]
        deps[r] = tuple(sorted((r, s)))
        return [(f"{s}->{r}", deps)]
    if kind == "BL":
        fams = []
        for single, (g1, g2) in _bipartitions(n):
            deps = [None] * n
            deps[single] = (single,)
            deps[g1] = deps[g2] = (g1, g2)
            fams.append((f"single={single}", deps))
        return fams
    if kind == "TOBL":
        fams = []
        for single, (g1, g2) in _bipartitions(n):
            for snd, rcv in ((g1, g2), (g2, g1)):
                deps = [None] * n
                deps[single] = (single,)
                deps[snd] = (snd,)
                deps[rcv] = tuple(sorted((snd, rcv)))
                fams.append((f"single={single},{snd}->{rcv}", deps))
        return fams
    if kind == "BC1":
        firsts = range(n) if model.first is None else [model.first]
        fams = []
        for j in firsts:
            if not 0 <= j < n:
                raise UnsupportedModelError(f"first party {j + 1} out of range for n={n}")
            deps = [tuple(sorted({k, j})) for k in range(n)]
            fams.append((f"first={j}", deps))
        return fams
    raise UnsupportedModelError(kind)


def _check_supported(model: ModelClass, n: int) -> None:
    n = check_n(n)
    if model.kind == "Local":
        if n > LOCAL_MAX_N:
            raise UnsupportedModelError(f"Local enumeration is capped at n={LOCAL_MAX_N}")
    elif model.kind == "OneWay":
        if n > 3:
            raise UnsupportedModelError("OneWay is supported for n = 2 or 3")
    elif n != 3:
        raise UnsupportedModelError(f"{model.kind} vertices are enumerated for n = 3 only, got n={n}")


@lru_cache(maxsize=64)
def enumerate_vertices(model: ModelClass, n: int = 3, *, dedup: bool = True) -> VertexSet:
    _check_supported(model, n)
    if model.kind == "NSBL":
        tables, labels = _nsbl(n)
    else:
        chunks, labels = [], []
        for label, deps in _families(model, n):
            t = _deterministic(n, deps)
            chunks.append(t)
            labels += [label] * len(t)
        tables = np.concatenate(chunks)
    if dedup:
        flat = tables.reshape(len(tables), -1)
        _, first_idx = np.unique(flat, axis=0, return_index=True)
        keep = np.sort(first_idx)
        tables = tables[keep]
        labels = [labels[i] for i in keep]
    tables = np.ascontiguousarray(tables)
    tables.setflags(write=False)
    return VertexSet(model, n, tables, tuple(labels))


# -- bounds -----------------------------------------------------------------------

def vertex_values(expr: Expression, vertices: VertexSet) -> np.ndarray:
    if vertices.n != expr.n:
        raise ScenarioError(f"expression has n={expr.n}, vertex set n={vertices.n}")
    return vertices.matrix @ expr.coefficients.ravel()


def bound(expr: Expression, model: ModelClass) -> BoundResult:
    """Maximum of ``expr`` over the class, with an attaining vertex."""
    vs = enumerate_vertices(model, expr.n)
    values = vertex_values(expr, vs)
    i = int(np.argmax(values))
    value = round(float(values[i]), BOUND_DECIMALS) + 0.0
    return BoundResult(value, vs.behavior(i))


# -- membership -------------------------------------------------------------------

def membership(behavior: Behavior, model: ModelClass | VertexSet, tol: float = DEFAULT_LP_TOL) -> MembershipResult:
    """Is ``behavior`` a convex mixture of the class's vertices?"""
    report = validate(behavior, max(tol, 1e-9))
    if not report.ok:
        raise ScenarioError(f"behavior does not validate (deviation {report.max_deviation:.3g})")
    vs = model if isinstance(model, VertexSet) else enumerate_vertices(model, behavior.n)
    if vs.n != behavior.n:
        raise ScenarioError(f"behavior has n={behavior.n}, vertex set n={vs.n}")
    V = vs.matrix
    A = np.vstack([V.T, np.ones((1, len(vs)))])
    b = np.concatenate([behavior.table.ravel(), [1.0]])
    res: FeasibilityResult = lp_feasibility(A, b, tol)
    if res.feasible:
        x = res.x
        err = float(np.max(np.abs(V.T @ x - behavior.table.ravel())))
        weights = {int(i): float(x[i]) for i in np.flatnonzero(x > 1e-15)}
        return MembershipResult(True, weights, None, 0.0, err, res.iterations)
    y = res.certificate
    F = y[:-1].reshape(behavior.table.shape)
    gap = float(np.sum(F * behavior.table) - np.max(V @ F.ravel()))
    if gap <= tol:
        raise LPError(f"phase 1 reported infeasibility {res.infeasibility:.3g} but certificate gap is {gap:.3g}")
    return MembershipResult(False, {}, F, gap, float("nan"), res.iterations)


def certificate_is_valid(result: MembershipResult, behavior: Behavior, vertices: VertexSet, tol: float = DEFAULT_LP_TOL) -> bool:
    if result.member or result.certificate is None:
        return False
    F = result.certificate.ravel()
    return float(behavior.table.ravel() @ F) > float(np.max(vertices.matrix @ F)) + tol
