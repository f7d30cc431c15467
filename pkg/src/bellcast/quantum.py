"""GHZ-like states, Bloch-parametrized dichotomic measurements and Born-rule behaviors."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .scenario import Behavior, ScenarioError, check_n

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class StateVector:
    n: int
    amplitudes: np.ndarray

    def __post_init__(self):
        n = check_n(self.n)
        amp = np.array(self.amplitudes, dtype=complex).ravel()
        if amp.size != 2**n:
            raise ScenarioError(f"state on {n} qubits needs {2**n} amplitudes, got {amp.size}")
        norm = float(np.vdot(amp, amp).real)
        if abs(norm - 1.0) > 1e-12:
            raise ScenarioError(f"state is not normalized (|psi|^2 = {norm!r})")
        amp.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "amplitudes", amp)

    def with_phase(self, theta: float) -> "StateVector":
        return StateVector(self.n, np.exp(1j * theta) * self.amplitudes)


@dataclass(frozen=True)
class MeasurementParams:
    """Shared-shape settings: setting 0 at polar angle ``alpha``, azimuth ``phi_i``;
    setting 1 at polar angle ``beta``, azimuth ``phi_i + gamma``."""

    alpha: float
    beta: float
    gamma: float
    phi: tuple[float, ...]

    def __post_init__(self):
        phi = tuple(float(p) for p in self.phi)
        values = (self.alpha, self.beta, self.gamma) + phi
        if not all(math.isfinite(v) for v in values):
            raise ValueError("measurement angles must be finite")
        object.__setattr__(self, "phi", phi)
        for name in ("alpha", "beta", "gamma"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def n(self) -> int:
        return len(self.phi)

    @property
    def chi(self) -> float:
        """Sum of the azimuths."""
        return float(sum(self.phi))

    def reduced(self) -> "MeasurementParams":
        """Angles reduced to ``[0, 2 pi)`` for reporting."""
        r = lambda x: float(np.mod(x, TWO_PI))  # noqa: E731
        return MeasurementParams(r(self.alpha), r(self.beta), r(self.gamma), tuple(r(p) for p in self.phi))

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "gamma": self.gamma, "phi": list(self.phi)}

    @classmethod
    def from_dict(cls, data: dict) -> "MeasurementParams":
        return cls(data["alpha"], data["beta"], data["gamma"], tuple(data["phi"]))

    @classmethod
    def from_vector(cls, x: Sequence[float]) -> "MeasurementParams":
        return cls(x[0], x[1], x[2], tuple(x[3:]))

    def to_vector(self) -> np.ndarray:
        return np.array([self.alpha, self.beta, self.gamma, *self.phi])


@dataclass(frozen=True)
class ObservableSet:
    """Bloch vectors, ``vectors[i, s]`` is party i's direction for setting s."""

    vectors: np.ndarray

    def __post_init__(self):
        v = np.array(self.vectors, dtype=float)
        if v.ndim != 3 or v.shape[1:] != (2, 3):
            raise ValueError(f"expected shape (n, 2, 3), got {v.shape}")
        norms = np.linalg.norm(v, axis=-1)
        if np.max(np.abs(norms - 1.0)) > 1e-12:
            raise ValueError("Bloch vectors must have unit norm")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @classmethod
    def from_angles(cls, polar, azimuth) -> "ObservableSet":
        """From ``(n, 2)`` arrays of polar and azimuthal angles."""
        th = np.asarray(polar, dtype=float)
        ph = np.asarray(azimuth, dtype=float)
        return cls(np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1))

    @classmethod
    def uniform(cls, n: int, setting0, setting1) -> "ObservableSet":
        """Every party measures the same two Bloch directions."""
        return cls(np.tile(np.array([setting0, setting1], dtype=float), (n, 1, 1)))


def ghz_state(n: int, t: float) -> StateVector:
    """``cos t |0...0> + sin t |1...1>``."""
    n = check_n(n)
    amp = np.zeros(2**n, dtype=complex)
    amp[0] = math.cos(t)
    amp[-1] = math.sin(t)
    return StateVector(n, amp)


def param_angles(params: MeasurementParams) -> tuple[np.ndarray, np.ndarray]:
    """``(n, 2)`` polar and azimuthal angles of the parametrized settings."""
    phi = np.asarray(params.phi)
    polar = np.empty((params.n, 2))
    polar[:, 0] = params.alpha
    polar[:, 1] = params.beta
    azimuth = np.stack([phi, phi + params.gamma], axis=1)
    return polar, azimuth


def settings_from_params(params: MeasurementParams) -> ObservableSet:
    return ObservableSet.from_angles(*param_angles(params))


def eigenbases(polar: np.ndarray, azimuth: np.ndarray) -> np.ndarray:
    """Bras of the +1/-1 eigenvectors of ``n . sigma``, shape ``(n, 2 settings, 2 outcomes, 2)``.

    Row ``[i, s, 0]`` is ``<+n|`` and ``[i, s, 1]`` is ``<-n|``.
    """
    c = np.cos(polar / 2)
    s = np.sin(polar / 2)
    e = np.exp(-1j * azimuth)
    out = np.empty(polar.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = c
    out[..., 0, 1] = e * s
    out[..., 1, 0] = s
    out[..., 1, 1] = -e * c
    return out


def _angles_of(obs: ObservableSet) -> tuple[np.ndarray, np.ndarray]:
    v = obs.vectors
    polar = np.arccos(np.clip(v[..., 2], -1.0, 1.0))
    azimuth = np.arctan2(v[..., 1], v[..., 0])
    return polar, azimuth


def born_table(amplitudes: np.ndarray, bras: np.ndarray) -> np.ndarray:
    """Born probabilities ``(2**n, 2**n)`` in packed layout from eigenbasis bras."""
    n = bras.shape[0]
    psi = np.asarray(amplitudes).reshape((2,) * n)
    # contract qubit i (axis 0 of what remains) with party i's bras; the new
    # (setting, outcome) axes are appended at the end.
    t = psi
    for i in range(n):
        t = np.tensordot(t, bras[i], axes=([0], [2]))
    # axes now: s0, o0, s1, o1, ...; packed index puts party 0 in the low bit
    probs = np.abs(t) ** 2
    order = [2 * i for i in reversed(range(n))] + [2 * i + 1 for i in reversed(range(n))]
    return probs.transpose(order).reshape(2**n, 2**n)


def born_behavior(state: StateVector, obs: ObservableSet) -> Behavior:
    """``P(o | s) = <psi| prod_i (1 + o_i n_{i,s_i} . sigma)/2 |psi>``; outcome +1 is the +1 eigenvector."""
    if obs.n != state.n:
        raise ScenarioError(f"{obs.n} observables for a {state.n}-qubit state")
    table = born_table(state.amplitudes, eigenbases(*_angles_of(obs)))
    return Behavior(state.n, table)


def ghz_paper_correlation(n: int) -> Behavior:
    """``P(a|X) = 2**-n [1 + cos(pi/2 sum X) prod a]`` (GHZ with sigma_1/sigma_2 settings)."""
    n = check_n(n)
    if n < 3:
        raise ScenarioError("the GHZ correlation is defined here for n >= 3")
    s = np.arange(2**n)
    weight = np.array([bin(x).count("1") for x in s])
    parity = np.array([(-1) ** bin(x).count("1") for x in s])
    table = (1.0 + np.cos(np.pi / 2 * weight)[:, None] * parity[None, :]) / 2**n
    # cos(k pi/2) is exactly 0 or +-1; remove the 6e-17 residue at odd k
    table = np.where(weight[:, None] % 2 == 1, 1.0 / 2**n, table)
    return Behavior(n, table, tol=1e-12)


def broadcast_reproduction(n: int) -> Behavior:
    """Behavior of the (n-2)-event broadcasting model reproducing the GHZ correlation.

    The first n-2 parties answer uniformly at random and broadcast setting and
    outcome.  With ``x = sum(X_i) mod 4``, ``y = x mod 2`` and ``l`` the product
    of their outcomes, the last two parties pick one of four deterministic
    strategies with probability 1/4 each.
    """
    n = check_n(n)
    if n < 3:
        raise ScenarioError("broadcast reproduction needs n >= 3")
    k = n - 2
    table = np.zeros((2**n, 2**n))
    # (last-but-one outcome at settings 0/1, exponent offsets for a_N^y and a_N^{y xor 1})
    branches = (
        ((-1, +1), (1, 1)),
        ((+1, +1), (0, 1)),
        ((+1, -1), (0, 0)),
        ((-1, -1), (1, 0)),
    )
    for s in range(2**n):
        X = [(s >> i) & 1 for i in range(n)]
        x = sum(X[:k]) % 4
        y = x % 2
        lo, hi = x // 2, -(-x // 2)
        u, v = X[k], X[k + 1]
        for first in itertools.product((1, -1), repeat=k):
            l = math.prod(first)
            p_first = 0.5**k
            for (a_prev0, a_prev1), (off_y, off_y1) in branches:
                a_last = {y: l * (-1) ** (lo + y + off_y), y ^ 1: l * (-1) ** (hi + y + off_y1)}
                outcome = list(first) + [(a_prev0, a_prev1)[u], a_last[v]]
                o = sum((1 if sign == -1 else 0) << i for i, sign in enumerate(outcome))
                table[s, o] += p_first * 0.25
    return Behavior(n, table, tol=1e-12)


def svetlichny_settings() -> tuple[float, MeasurementParams]:
    """GHZ angle and equatorial settings reaching ``S3 = 4 sqrt(2)``.

    Settings 0 and 1 are a quarter turn apart (``gamma = pi/2``) and the
    azimuths add up to ``-pi/4``; the value was confirmed by multistart
    maximization of S3 at ``t = pi/4``.
    """
    half = math.pi / 2
    return math.pi / 4, MeasurementParams(half, half, half, (TWO_PI - math.pi / 4, 0.0, 0.0))
