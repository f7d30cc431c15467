"""Bell-type expressions as linear functionals over behaviors.

Every expression is a list of probability terms; correlators are expanded into
signed probability terms when the expression is built.  Text format::

    P(a1^0+,a2^0+) - 0.5*<a1^1 a2^1 a3^0> + 2 P(a3^1-)

Parties are 1-based in text and 0-based everywhere else.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .scenario import (
    NUMERIC_TOL,
    Behavior,
    Scenario,
    SignalingError,
    check_n,
    no_signaling_report,
    pack_bits,
)

# (party, setting, sign)
Factor = tuple[int, int, int]


class ExpressionError(ValueError):
    pass


class ExpressionSyntaxError(ExpressionError):
    def __init__(self, message: str, text: str, pos: int):
        self.pos = pos
        self.text = text
        super().__init__(f"{message} at position {pos}: {text[:pos]}>>>{text[pos:]}")


@dataclass(frozen=True)
class Term:
    coefficient: float
    factors: tuple[Factor, ...]

    def __post_init__(self):
        factors = tuple(sorted((int(p), int(s), int(o)) for p, s, o in self.factors))
        if not factors:
            raise ExpressionError("a term needs at least one factor")
        parties = [p for p, _, _ in factors]
        if len(set(parties)) != len(parties):
            raise ExpressionError(f"repeated party in term {factors}")
        for p, s, o in factors:
            if p < 0 or s not in (0, 1) or o not in (1, -1):
                raise ExpressionError(f"bad factor {(p, s, o)}")
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "coefficient", float(self.coefficient))

    @property
    def parties(self) -> tuple[int, ...]:
        return tuple(p for p, _, _ in self.factors)

    def is_full(self, n: int) -> bool:
        return len(self.factors) == n


@dataclass(frozen=True)
class Expression:
    name: str
    scenario: Scenario
    terms: tuple[Term, ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        n = self.scenario.n
        for t in self.terms:
            if max(t.parties) >= n:
                raise ExpressionError(f"term {t} references a party beyond n={n}")

    @property
    def n(self) -> int:
        return self.scenario.n

    @property
    def has_partial_terms(self) -> bool:
        return any(not t.is_full(self.n) for t in self.terms)

    @cached_property
    def coefficients(self) -> np.ndarray:
        """Coefficient table ``c`` with ``evaluate(P) == (c * P.table).sum()``.

        Parties missing from a term have their setting fixed to 0 and their
        outcomes summed over.
        """
        n = self.n
        c = np.zeros((2**n, 2**n))
        for term in self.terms:
            settings = [0] * n
            fixed = {}
            for p, s, o in term.factors:
                settings[p] = s
                fixed[p] = 0 if o == 1 else 1
            free = [p for p in range(n) if p not in fixed]
            base = sum(bit << p for p, bit in fixed.items())
            s_idx = pack_bits(settings)
            for bits in itertools.product((0, 1), repeat=len(free)):
                o_idx = base + sum(b << p for p, b in zip(free, bits))
                c[s_idx, o_idx] += term.coefficient
        c.setflags(write=False)
        return c

    def __add__(self, other: "Expression") -> "Expression":
        if other.scenario != self.scenario:
            raise ExpressionError("cannot add expressions on different scenarios")
        return Expression(f"{self.name}+{other.name}", self.scenario, self.terms + other.terms)

    def scaled(self, k: float, name: str | None = None) -> "Expression":
        return Expression(name or self.name, self.scenario, tuple(Term(k * t.coefficient, t.factors) for t in self.terms))

    def algebraic_max(self) -> float:
        """Upper bound from the positive coefficients (valid for any behavior)."""
        return float(sum(max(t.coefficient, 0.0) for t in self.terms))

    def render(self) -> str:
        return render(self)


def evaluate(expr: Expression, behavior: Behavior, ns_tol: float = NUMERIC_TOL) -> float:
    if behavior.n != expr.n:
        raise ExpressionError(f"expression {expr.name!r} is for n={expr.n}, behavior has n={behavior.n}")
    if expr.has_partial_terms:
        report = no_signaling_report(behavior, ns_tol)
        if not report.is_no_signaling:
            raise SignalingError(report, f"partial terms of {expr.name!r} are ambiguous on a signaling behavior "
                                         f"(deviation {report.max_deviation:.3g})")
    return float(np.sum(expr.coefficients * behavior.table))


# -- construction helpers -----------------------------------------------------

def prob(*factors: Factor, coefficient: float = 1.0) -> Term:
    return Term(coefficient, tuple(factors))


def correlator_terms(settings: dict[int, int], coefficient: float = 1.0) -> list[Term]:
    """Expand ``<prod_i a_i^{s_i}>`` over the given parties into probability terms."""
    parties = sorted(settings)
    terms = []
    for signs in itertools.product((1, -1), repeat=len(parties)):
        terms.append(Term(coefficient * int(np.prod(signs)),
                          tuple((p, settings[p], o) for p, o in zip(parties, signs))))
    return terms


def _corr3(x: int, y: int, z: int, coefficient: float) -> list[Term]:
    return correlator_terms({0: x, 1: y, 2: z}, coefficient)


def _n_or(name: str, n: int | None, allowed: Sequence[int], default: int) -> int:
    n = default if n is None else n
    if n not in allowed:
        raise ExpressionError(f"{name} is defined for n in {list(allowed)}, got {n}")
    return n


def svetlichny(n: int | None = None) -> Expression:
    n = _n_or("S3", n, (3,), 3)
    signs = {(0, 0, 0): 1, (0, 0, 1): 1, (0, 1, 0): 1, (0, 1, 1): -1,
             (1, 0, 0): 1, (1, 0, 1): -1, (1, 1, 0): -1, (1, 1, 1): -1}
    terms = [t for xyz, k in signs.items() for t in _corr3(*xyz, k)]
    return Expression("S3", Scenario(n), tuple(terms))


def s_prime(n: int | None = None) -> Expression:
    n = _n_or("Sprime", n, (3,), 3)
    terms = [
        prob((0, 0, 1), (1, 0, 1), (2, 0, 1)),
        prob((0, 0, -1), (1, 0, 1), (2, 0, 1)),
        prob((0, 1, 1), (1, 0, -1), (2, 0, -1)),
        prob((0, 1, -1), (1, 0, -1), (2, 0, -1)),
    ]
    return Expression("Sprime", Scenario(n), tuple(terms))


def r_n(n: int) -> Expression:
    """Broadcasting functional ``R_N``; nonpositive for single first-event broadcasters."""
    if n is None or n < 3:
        raise ExpressionError(f"RN needs n >= 3, got {n}")
    check_n(n)
    terms = [Term(1.0, tuple((p, 0, 1) for p in range(n)))]
    for j in range(n):
        terms.append(Term(-1.0, tuple((p, 1 if p == j else 0, 1) for p in range(n))))
    for j in range(n):
        terms.append(Term(-1.0, tuple((p, 0, 1) if p == j else (p, 1, -1) for p in range(n))))
    return Expression("R3" if n == 3 else f"R{n}", Scenario(n), tuple(terms))


def t_expr(n: int | None = None) -> Expression:
    n = _n_or("T", n, (2, 3), 3)
    terms = [
        prob((0, 0, 1), (1, 0, 1)),
        prob((0, 0, -1), (1, 1, 1)),
        prob((0, 1, 1), (1, 0, -1)),
        prob((0, 1, -1), (1, 1, -1)),
    ]
    return Expression("T", Scenario(n), tuple(terms))


def chsh(n: int | None = None) -> Expression:
    n = _n_or("B", n, (2, 3), 3)
    terms = []
    for (x, y), k in {(0, 0): 1, (0, 1): 1, (1, 0): 1, (1, 1): -1}.items():
        terms += correlator_terms({0: x, 1: y}, k)
    return Expression("B", Scenario(n), tuple(terms))


def mermin3(n: int | None = None) -> Expression:
    n = _n_or("Mermin3", n, (3,), 3)
    terms = _corr3(0, 0, 0, 1) + _corr3(0, 1, 1, -1) + _corr3(1, 0, 1, -1) + _corr3(1, 1, 0, -1)
    return Expression("Mermin3", Scenario(n), tuple(terms))


BUILTINS = ("S3", "Sprime", "I", "R3", "RN", "T", "B", "Mermin3")


def builtin(name: str, n: int | None = None) -> Expression:
    aliases = {k.upper(): k for k in BUILTINS} | {"S'": "Sprime", "MERMIN": "Mermin3", "CHSH": "B"}
    key = aliases.get(name.strip().upper(), name)
    if key == "S3":
        return svetlichny(n)
    if key == "Sprime":
        return s_prime(n)
    if key == "I":
        _n_or("I", n, (3,), 3)
        return Expression("I", Scenario(3), svetlichny().terms + s_prime().terms)
    if key == "R3":
        _n_or("R3", n, (3,), 3)
        return r_n(3)
    if key == "RN":
        return r_n(n)
    if key == "T":
        return t_expr(n)
    if key == "B":
        return chsh(n)
    if key == "Mermin3":
        return mermin3(n)
    raise ExpressionError(f"unknown built-in expression {name!r}; known: {', '.join(BUILTINS)}")


# -- text format ----------------------------------------------------------------

_WS = re.compile(r"\s*")
_NUM = re.compile(r"(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?")
_FACTOR = re.compile(r"a(\d+)\^([01])\s*([+\-−])")
_CFACTOR = re.compile(r"a(\d+)\^([01])")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, msg: str):
        raise ExpressionSyntaxError(msg, self.text, self.pos)

    def skip(self):
        self.pos = _WS.match(self.text, self.pos).end()

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            self.error(f"expected {ch!r}")
        self.pos += 1

    def party(self, raw: str, start: int) -> int:
        p = int(raw)
        if p < 1:
            self.pos = start
            self.error("party indices start at 1")
        return p - 1

    def parse(self) -> list[Term]:
        terms: list[Term] = []
        first = True
        while True:
            ch = self.peek()
            if not ch:
                if first:
                    self.error("empty expression")
                return terms
            sign = 1.0
            if ch in "+-−":
                sign = -1.0 if ch in "-−" else 1.0
                self.pos += 1
            elif not first:
                self.error("expected '+' or '-' between terms")
            first = False
            self.skip()
            coef = 1.0
            m = _NUM.match(self.text, self.pos)
            if m:
                coef = float(m.group(0))
                self.pos = m.end()
                if self.peek() == "*":
                    self.pos += 1
            ch = self.peek()
            if ch == "P":
                self.pos += 1
                terms.append(self.prob_term(sign * coef))
            elif ch == "<":
                self.pos += 1
                terms.extend(self.corr_term(sign * coef))
            else:
                self.error("expected 'P(' or '<'")

    def prob_term(self, coef: float) -> Term:
        self.expect("(")
        factors: list[Factor] = []
        seen: set[int] = set()
        while True:
            self.skip()
            start = self.pos
            m = _FACTOR.match(self.text, self.pos)
            if not m:
                self.error("expected factor like a1^0+")
            p = self.party(m.group(1), start)
            if p in seen:
                self.pos = start
                self.error(f"party {p + 1} repeated within a term")
            seen.add(p)
            factors.append((p, int(m.group(2)), 1 if m.group(3) == "+" else -1))
            self.pos = m.end()
            ch = self.peek()
            if ch == ",":
                self.pos += 1
                continue
            if ch == ")":
                self.pos += 1
                return Term(coef, tuple(factors))
            self.error("expected ',' or ')'")

    def corr_term(self, coef: float) -> list[Term]:
        settings: dict[int, int] = {}
        while True:
            ch = self.peek()
            if ch == ">":
                self.pos += 1
                if not settings:
                    self.error("empty correlator")
                return correlator_terms(settings, coef)
            start = self.pos
            m = _CFACTOR.match(self.text, self.pos)
            if not m:
                self.error("expected correlator factor like a1^0")
            p = self.party(m.group(1), start)
            if p in settings:
                self.pos = start
                self.error(f"party {p + 1} repeated within a correlator")
            settings[p] = int(m.group(2))
            self.pos = m.end()


def parse(text: str, n: int | None = None, name: str = "custom") -> Expression:
    """Parse expression text; ``n`` defaults to the highest party index used (at least 2)."""
    terms = _Parser(text).parse()
    used = max(max(t.parties) for t in terms) + 1
    if n is None:
        n = max(used, 2)
    elif used > n:
        raise ExpressionError(f"expression uses party {used} but n={n}")
    return Expression(name, Scenario(n), tuple(terms))


def render(expr: Expression) -> str:
    parts = []
    for t in expr.terms:
        body = ",".join(f"a{p + 1}^{s}{'+' if o == 1 else '-'}" for p, s, o in t.factors)
        sign = "-" if t.coefficient < 0 else "+"
        parts.append(f"{sign} {abs(t.coefficient)!r}*P({body})")
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def expression_from(spec: str, n: int | None = None) -> Expression:
    """Resolve a built-in name or parse expression text."""
    if re.fullmatch(r"[A-Za-z][A-Za-z0-9']*", spec.strip()):
        return builtin(spec.strip(), n)
    return parse(spec, n)


def combine(terms: Iterable[Term], n: int, name: str = "custom") -> Expression:
    return Expression(name, Scenario(n), tuple(terms))
