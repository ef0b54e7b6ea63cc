"""Base ergodic systems and scalar ergodic theorems.

Provides the measure-preserving systems every other module runs over
(circle rotations, the doubling map, Bernoulli and Markov shifts), plus the
Birkhoff, Fekete and Kingman estimation utilities.

States are plain floats in [0, 1) for the interval maps and ``ShiftState``
(position, symbol) pairs for the shifts.  All randomness is a pure function
of (seed, tape position), so orbits are bit-reproducible and the one-step
map agrees exactly with vectorized orbit generation.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from ._rand import hash_bit, mix64, uniform, uniform_block
from .errors import DivergenceWarning, DomainError, PreconditionError

_FIX = 1 << 53  # doubling-map states live on the 53-bit fixed-point grid

INTERVAL_KINDS = ("circle-rotation", "doubling-map")
SHIFT_KINDS = ("bernoulli-shift", "markov-shift")


class ShiftState(NamedTuple):
    """State of a symbolic shift: tape position plus the symbol there."""

    pos: int
    symbol: int


@dataclass(frozen=True, eq=False)
class ErgodicSystem:
    """A seeded measure-preserving base system with deterministic orbits.

    Use the constructors :func:`circle_rotation`, :func:`doubling_map`,
    :func:`bernoulli_shift`, :func:`markov_shift` rather than instantiating
    directly.
    """

    kind: str
    seed: int = 0
    angle: float | None = None
    probabilities: np.ndarray | None = None
    transition: np.ndarray | None = None
    stationary: np.ndarray | None = None
    _cum: np.ndarray | None = field(default=None, repr=False)
    _cum_rows: np.ndarray | None = field(default=None, repr=False)

    # -- single-step dynamics -------------------------------------------------

    def step(self, state):
        """Apply T once."""
        if self.kind == "circle-rotation":
            return (float(state) + self.angle) % 1.0
        if self.kind == "doubling-map":
            m = _to_fix(state)
            m2 = ((m << 1) & (_FIX - 1)) | hash_bit(self.seed, m)
            return m2 / _FIX
        pos, sym = state
        return ShiftState(pos + 1, self._symbol_after(pos + 1, sym))

    def inverse_step(self, state):
        """Apply T^{-1}; refuses where the system is not invertible."""
        if self.kind == "circle-rotation":
            return (float(state) - self.angle) % 1.0
        if self.kind == "doubling-map":
            raise DomainError("doubling map is not invertible")
        pos, _ = state
        if pos < 1:
            raise DomainError(
                "one-sided shift: no inverse at tape position 0; start from a "
                "state with position >= the number of backward steps needed"
            )
        if self.kind == "bernoulli-shift":
            return ShiftState(pos - 1, self._bernoulli_symbol(pos - 1))
        # markov: replay forward from the tape origin (positions are small in
        # every supported use)
        s = self._markov_initial()
        for p in range(1, pos):
            s = self._symbol_after(p, s)
        return ShiftState(pos - 1, s)

    def _symbol_after(self, pos: int, prev_symbol: int) -> int:
        u = uniform(self.seed, pos)
        if self.kind == "bernoulli-shift":
            return int(np.searchsorted(self._cum, u, side="right"))
        return int(np.searchsorted(self._cum_rows[prev_symbol], u, side="right"))

    def _bernoulli_symbol(self, pos: int) -> int:
        return int(np.searchsorted(self._cum, uniform(self.seed, pos), side="right"))

    def _markov_initial(self) -> int:
        cum = np.cumsum(self.stationary)
        return int(np.searchsorted(cum, uniform(self.seed, 0), side="right"))

    # -- orbit generation ------------------------------------------------------

    def default_initial(self):
        """A deterministic seed-derived starting state."""
        if self.kind == "circle-rotation":
            return uniform(self.seed, -7)
        if self.kind == "doubling-map":
            return _to_fix(uniform(self.seed, -7)) / _FIX
        if self.kind == "bernoulli-shift":
            return ShiftState(0, self._bernoulli_symbol(0))
        return ShiftState(0, self._markov_initial())

    def orbit_values(self, initial, N: int) -> np.ndarray:
        """The orbit as a numeric array: positions for interval maps, symbols for shifts."""
        if N < 1:
            raise DomainError("N must be >= 1")
        if self.kind == "circle-rotation":
            x0 = _check_interval(initial)
            return (x0 + np.arange(N) * self.angle) % 1.0
        if self.kind == "doubling-map":
            m = _to_fix(_check_interval(initial))
            out = np.empty(N, dtype=np.int64)
            seed = self.seed
            mask = _FIX - 1
            mul2 = 0x94D049BB133111EB
            m64 = (1 << 64) - 1
            for i in range(N):
                out[i] = m
                # inlined hash_bit(seed, m)
                z = (seed * mul2 + m) & m64
                z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & m64
                z = ((z ^ (z >> 27)) * mul2) & m64
                m = ((m << 1) & mask) | ((z ^ (z >> 31)) & 1)
            return out.astype(np.float64) / _FIX
        pos0, sym0 = _check_shift_initial(self, initial)
        if self.kind == "bernoulli-shift":
            if N == 1:
                return np.array([sym0])
            u = uniform_block(self.seed, pos0 + 1, N - 1)
            syms = np.searchsorted(self._cum, u, side="right")
            return np.concatenate([[sym0], syms]).astype(np.int64)
        syms = np.empty(N, dtype=np.int64)
        syms[0] = s = sym0
        for i in range(1, N):
            s = self._symbol_after(pos0 + i, s)
            syms[i] = s
        return syms

    def orbit_states(self, initial, N: int) -> list:
        """The orbit as a list of states (floats or ShiftState)."""
        vals = self.orbit_values(initial, N)
        if self.kind in INTERVAL_KINDS:
            return [float(v) for v in vals]
        pos0 = initial.pos if isinstance(initial, ShiftState) else 0
        return [ShiftState(pos0 + i, int(s)) for i, s in enumerate(vals)]

    def sample_state(self, rng: np.random.Generator):
        """One state distributed per the invariant measure (for Monte-Carlo audits)."""
        if self.kind in INTERVAL_KINDS:
            x = rng.random()
            return _to_fix(x) / _FIX if self.kind == "doubling-map" else x
        law = self.probabilities if self.kind == "bernoulli-shift" else self.stationary
        return ShiftState(0, int(rng.choice(len(law), p=law)))

    @property
    def invertible(self) -> bool:
        return self.kind == "circle-rotation"


def _to_fix(x) -> int:
    x = float(x)
    if not 0.0 <= x < 1.0:
        raise DomainError(f"state {x!r} outside [0, 1)")
    return int(round(x * _FIX)) % _FIX


def _check_interval(x) -> float:
    x = float(x)
    if not 0.0 <= x < 1.0:
        raise DomainError(f"initial state {x!r} outside [0, 1)")
    return x


def _check_shift_initial(system, initial):
    if initial is None:
        initial = system.default_initial()
    if isinstance(initial, ShiftState):
        return initial.pos, initial.symbol
    k = len(system.probabilities) if system.kind == "bernoulli-shift" else len(system.transition)
    s = int(initial)
    if not 0 <= s < k:
        raise DomainError(f"initial symbol {s} outside 0..{k - 1}")
    return 0, s


# -- constructors --------------------------------------------------------------


def circle_rotation(angle: float, seed: int = 0) -> ErgodicSystem:
    """Rigid rotation x -> x + angle mod 1."""
    if not 0.0 <= angle < 1.0:
        raise DomainError("rotation angle must lie in [0, 1)")
    return ErgodicSystem(kind="circle-rotation", seed=seed, angle=float(angle))


def doubling_map(seed: int = 0) -> ErgodicSystem:
    """x -> 2x mod 1 on a 53-bit grid with one seeded fresh bit per step."""
    return ErgodicSystem(kind="doubling-map", seed=seed)


def bernoulli_shift(probabilities: Sequence[float], seed: int = 0) -> ErgodicSystem:
    """I.i.d. symbol shift with the given law."""
    p = np.asarray(probabilities, dtype=float)
    if p.ndim != 1 or len(p) < 1 or np.any(p < 0):
        raise DomainError("probabilities must be a nonnegative vector")
    if abs(p.sum() - 1.0) > 1e-12:
        raise DomainError(f"probabilities sum to {p.sum()!r}, not 1 within 1e-12")
    return ErgodicSystem(
        kind="bernoulli-shift", seed=seed, probabilities=p, _cum=np.cumsum(p)
    )


def markov_shift(
    transition, stationary=None, seed: int = 0
) -> ErgodicSystem:
    """Stationary Markov symbol shift; stationary law computed if not given."""
    P = np.asarray(transition, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or np.any(P < 0):
        raise DomainError("transition must be a square nonnegative matrix")
    rows = P.sum(axis=1)
    if np.any(np.abs(rows - 1.0) > 1e-12):
        raise DomainError("transition rows must sum to 1 within 1e-12")
    if stationary is None:
        w, v = np.linalg.eig(P.T)
        i = int(np.argmin(np.abs(w - 1.0)))
        pi = np.real(v[:, i])
        pi = pi / pi.sum()
    else:
        pi = np.asarray(stationary, dtype=float)
    if np.max(np.abs(pi @ P - pi)) > 1e-10:
        raise DomainError("stationary distribution does not satisfy pi P = pi within 1e-10")
    return ErgodicSystem(
        kind="markov-shift",
        seed=seed,
        transition=P,
        stationary=pi,
        _cum_rows=np.cumsum(P, axis=1),
    )


# -- scalar ergodic theorems ---------------------------------------------------


def orbit(system: ErgodicSystem, initial, N: int) -> list:
    """The finite orbit (w, Tw, ..., T^{N-1}w)."""
    return system.orbit_states(initial, N)


def birkhoff_average(
    system: ErgodicSystem,
    f: Callable,
    initial,
    N: int,
    multiplicative: bool = False,
) -> float:
    """Time average (1/N) sum f(T^i w), or the geometric mean with the flag set.

    With ``multiplicative=True`` the observable must be positive; a zero value
    is the permitted divergence to -inf of the log average and yields 0.0 with
    a :class:`DivergenceWarning`, while negative values raise ``DomainError``.
    """
    if N < 1:
        raise DomainError("N must be >= 1")
    vals = system.orbit_values(initial, N)
    try:
        fx = np.asarray(f(vals), dtype=float)
        if fx.shape != vals.shape:
            raise TypeError
    except (TypeError, ValueError):
        states = system.orbit_states(initial, N)
        fx = np.array([float(f(s)) for s in states])
    if not multiplicative:
        return float(np.mean(fx))
    if np.any(fx < 0):
        raise DomainError("multiplicative average requires f > 0 on the orbit")
    if np.any(fx == 0):
        warnings.warn(
            "observable vanishes on the orbit: log average diverges to -inf",
            DivergenceWarning,
        )
        return 0.0
    return float(np.exp(np.mean(np.log(fx))))


@dataclass(frozen=True, eq=False)
class SubadditiveSequence:
    """A finite sequence a_1..a_N assumed subadditive (audited on samples)."""

    values: np.ndarray

    def __init__(self, values):
        object.__setattr__(self, "values", np.asarray(values, dtype=float))
        if len(self.values) < 1:
            raise DomainError("sequence must be nonempty")
        _audit_subadditive(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def a(self, n: int) -> float:
        """a_n with 1-based indexing."""
        return float(self.values[n - 1])


def _audit_subadditive(a: np.ndarray, slack: float = 1e-9, samples: int | None = None):
    N = len(a)
    if N < 2:
        return
    samples = 4 * N if samples is None else samples
    key = mix64(N * 0x9E3779B97F4A7C15 + 1)
    u = uniform_block(key, 0, 2 * samples)
    ns = 1 + (u[::2] * (N - 1)).astype(np.int64)
    ms = 1 + (u[1::2] * (N - ns)).astype(np.int64)
    bad = a[ns + ms - 1] > a[ns - 1] + a[ms - 1] + slack
    if np.any(bad):
        i = int(np.argmax(bad))
        n, m = int(ns[i]), int(ms[i])
        raise PreconditionError(
            f"subadditivity violated at (n, m)=({n}, {m}): "
            f"a_{n + m}={a[n + m - 1]!r} > a_{n}+a_{m}={a[n - 1] + a[m - 1]!r}"
        )


@dataclass(frozen=True)
class FeketeReport:
    """Infimum estimate of a_n/n together with the finite-horizon tail slope."""

    inf_value: float
    inf_at: int
    tail_slope: float
    gap: float
    diverged_below: bool

    @property
    def limit(self) -> float:
        return self.inf_value


def fekete_limit(seq: SubadditiveSequence | Sequence[float]) -> FeketeReport:
    """Estimate lim a_n/n = inf_n a_n/n for a subadditive sequence.

    Returns both the infimum over the horizon and the tail slope a_N/N; the
    gap between them is the convergence diagnostic.  Values below -1e9 set the
    divergence flag (-inf limits are permitted).
    """
    if not isinstance(seq, SubadditiveSequence):
        seq = SubadditiveSequence(seq)
    slopes = seq.values / np.arange(1, len(seq) + 1)
    i = int(np.argmin(slopes))
    inf_v = float(slopes[i])
    tail = float(slopes[-1])
    return FeketeReport(
        inf_value=inf_v,
        inf_at=i + 1,
        tail_slope=tail,
        gap=tail - inf_v,
        diverged_below=inf_v < -1e9,
    )


@dataclass(frozen=True)
class KingmanReport:
    """Subadditive-cocycle limit estimate with a dyadic convergence trace."""

    estimate: float
    dyadic_ns: tuple
    dyadic_values: tuple

    @property
    def trace(self):
        return list(zip(self.dyadic_ns, self.dyadic_values))


def dyadic_indices(N: int) -> list[int]:
    """1, 2, 4, ... up to and including N."""
    out = []
    n = 1
    while n < N:
        out.append(n)
        n *= 2
    out.append(N)
    return out


def kingman_estimate(
    system: ErgodicSystem,
    fn_family: Callable[[int, object], float],
    initial,
    N: int,
    audit_samples: int = 32,
    audit_seed: int = 0,
) -> KingmanReport:
    """Estimate the Kingman limit (1/N) f_N(w) for a subadditive family.

    ``fn_family(n, state)`` evaluates f_n at a state.  The subadditivity
    f_i(w) + f_j(T^i w) >= f_{i+j}(w) is audited on ``audit_samples`` random
    triples (1e-9 slack); a violation raises ``PreconditionError`` naming it.
    """
    if N < 1:
        raise DomainError("N must be >= 1")
    states = system.orbit_states(initial, N + 1)
    if audit_samples:
        key = mix64(audit_seed + 0xA0D17)
        for t in range(audit_samples):
            i = 1 + mix64(key + 2 * t) % (N - 1) if N > 1 else 1
            j = 1 + mix64(key + 2 * t + 1) % (N - i)
            lhs = fn_family(i, states[0]) + fn_family(j, states[i])
            rhs = fn_family(i + j, states[0])
            if lhs < rhs - 1e-9:
                raise PreconditionError(
                    f"subadditivity audit failed at (i, j, w)=({i}, {j}, {states[0]!r}): "
                    f"f_i(w)+f_j(T^i w)={lhs!r} < f_(i+j)(w)={rhs!r}"
                )
    ns = dyadic_indices(N)
    vals = [fn_family(n, states[0]) / n for n in ns]
    return KingmanReport(estimate=vals[-1], dyadic_ns=tuple(ns), dyadic_values=tuple(vals))
