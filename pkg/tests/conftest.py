import itertools

import numpy as np
import pytest

from bellcast.scenario import Behavior


def random_behavior(rng, n=3):
    """Normalized but generally signaling table."""
    return Behavior(n, rng.dirichlet(np.ones(2**n), size=2**n))


def random_ns_behavior(rng, n=3):
    """Random mixture of local deterministic behaviors (hence no-signaling)."""
    k = 6
    table = np.zeros((2**n, 2**n))
    for w in rng.dirichlet(np.ones(k)):
        f = rng.integers(2, size=(n, 2))
        for s in range(2**n):
            bits = [f[i, (s >> i) & 1] for i in range(n)]
            table[s, sum(b << i for i, b in enumerate(bits))] += w
    return Behavior(n, table)


def term_probability_deterministic(response, factors, n):
    """Independent reading of a partial event on a response function.

    ``response`` maps a full settings tuple to an outcome-sign tuple; parties
    absent from the term sit at setting 0.
    """
    settings = [0] * n
    for p, s, _ in factors:
        settings[p] = s
    out = response(tuple(settings))
    return float(all(out[p] == o for p, _, o in factors))


def brute_force_value(expr, response):
    return sum(t.coefficient * term_probability_deterministic(response, t.factors, expr.n) for t in expr.terms)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


SIGN = {0: 1, 1: -1}


def all_functions(k):
    """All maps from k-bit inputs (as tuples) to signs."""
    inputs = list(itertools.product((0, 1), repeat=k))
    for outs in itertools.product((1, -1), repeat=len(inputs)):
        yield dict(zip(inputs, outs))


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
