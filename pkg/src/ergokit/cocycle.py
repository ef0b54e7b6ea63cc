"""Matrix cocycles over a base system: stable N-step products, integrability
checks, and the functorial constructions (dual, tensor, hom, exterior powers).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable

import numpy as np

from ._accum import QRAccumulator, accumulate_stream
from ._rand import mix64
from .dynsys import INTERVAL_KINDS, ErgodicSystem, ShiftState
from .errors import DomainError, NumericalError, PreconditionError

_CHUNK = 1 << 15


def symplectic_form(g: int) -> np.ndarray:
    """The standard form J on R^{2g}: J = [[0, I], [-I, 0]]."""
    J = np.zeros((2 * g, 2 * g))
    J[:g, g:] = np.eye(g)
    J[g:, :g] = -np.eye(g)
    return J


def indefinite_form(p: int, q: int) -> np.ndarray:
    """Q = diag(I_p, -I_q)."""
    return np.diag(np.concatenate([np.ones(p), -np.ones(q)]))


@dataclass(frozen=True, eq=False)
class MatrixCocycle:
    """A measurable assignment state -> invertible d x d matrix over a base system.

    ``structure_tag`` is one of None, ("symplectic", g), ("orthogonal", p, q),
    "determinant-one".  ``constant_matrix`` / ``symbol_matrices`` are fast-path
    hints set by the constructors; the generator remains authoritative.
    """

    dimension: int
    base: ErgodicSystem
    generator: Callable
    structure_tag: object = None
    constant_matrix: np.ndarray | None = None
    symbol_matrices: np.ndarray | None = None
    validation: dict = field(default_factory=dict, repr=False)

    def matrices_along(self, values: np.ndarray, states: list | None = None) -> np.ndarray:
        """Generator matrices for a stretch of orbit values as an (n, d, d) array."""
        n = len(values)
        if self.constant_matrix is not None:
            return np.broadcast_to(self.constant_matrix, (n, self.dimension, self.dimension))
        if self.symbol_matrices is not None:
            return self.symbol_matrices[np.asarray(values, dtype=np.int64)]
        if states is None:
            states = values
        return np.array([self.generator(s) for s in states], dtype=float)


def _validate_cocycle(c: MatrixCocycle, samples: int = 8) -> dict:
    rng = np.random.default_rng(mix64(c.base.seed ^ 0xC0C1C1E))
    conds = []
    for _ in range(samples):
        s = c.base.sample_state(rng)
        a = np.asarray(c.generator(s), dtype=float)
        if a.shape != (c.dimension, c.dimension):
            raise DomainError(
                f"generator returned shape {a.shape}, expected "
                f"({c.dimension}, {c.dimension})"
            )
        sign, logdet = np.linalg.slogdet(a)
        if sign == 0 or logdet < np.log(1e-300):
            raise NumericalError(f"generator numerically singular at state {s!r}")
        conds.append(float(np.linalg.cond(a)))
        tag = c.structure_tag
        if tag == "determinant-one":
            if abs(sign * np.exp(logdet) - 1.0) > 1e-10:
                raise PreconditionError(f"determinant-one tag violated at state {s!r}")
        elif isinstance(tag, tuple) and tag and tag[0] == "symplectic":
            J = symplectic_form(tag[1])
            if np.max(np.abs(a.T @ J @ a - J)) > 1e-10:
                raise PreconditionError(f"symplectic tag violated at state {s!r}")
        elif isinstance(tag, tuple) and tag and tag[0] == "orthogonal":
            Qf = indefinite_form(tag[1], tag[2])
            if np.max(np.abs(a.T @ Qf @ a - Qf)) > 1e-10:
                raise PreconditionError(f"orthogonal(p,q) tag violated at state {s!r}")
    return {"condition_numbers": conds}


def constant_cocycle(
    matrix, base: ErgodicSystem, structure_tag=None, validate: bool = True
) -> MatrixCocycle:
    """The cocycle with one fixed generator matrix."""
    A = np.array(matrix, dtype=float)
    A.setflags(write=False)
    c = MatrixCocycle(
        dimension=A.shape[0],
        base=base,
        generator=lambda s, _A=A: _A,
        structure_tag=structure_tag,
        constant_matrix=A,
    )
    if validate:
        c.validation.update(_validate_cocycle(c))
    return c


def symbol_cocycle(
    matrices, base: ErgodicSystem, structure_tag=None, validate: bool = True
) -> MatrixCocycle:
    """A cocycle over a shift keyed by the current symbol."""
    ms = np.array(matrices, dtype=float)
    if base.kind in INTERVAL_KINDS:
        raise DomainError("symbol_cocycle requires a shift base system")
    ms.setflags(write=False)

    def gen(s, _ms=ms):
        return _ms[s.symbol if isinstance(s, ShiftState) else int(s)]

    c = MatrixCocycle(
        dimension=ms.shape[1],
        base=base,
        generator=gen,
        structure_tag=structure_tag,
        symbol_matrices=ms,
    )
    if validate:
        c.validation.update(_validate_cocycle(c))
    return c


def map_cocycle(
    fn: Callable, dimension: int, base: ErgodicSystem, structure_tag=None, validate: bool = True
) -> MatrixCocycle:
    """A cocycle from an arbitrary state -> matrix function."""
    c = MatrixCocycle(dimension=dimension, base=base, generator=fn, structure_tag=structure_tag)
    if validate:
        c.validation.update(_validate_cocycle(c))
    return c


# -- N-step products -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CocycleProduct:
    """QR form of T^(N) = A(T^{N-1}w)...A(w): Q * diag(exp(log_diag)) * r_unit."""

    omega: object
    n: int
    q: np.ndarray
    log_diag: np.ndarray
    r_unit: np.ndarray | None
    saturated: bool

    def dense(self) -> np.ndarray:
        """The product as a dense matrix (moderate N only)."""
        acc = QRAccumulator(self.q.shape[0], keep_r=True)
        acc.q, acc.log_diag, acc.r_unit = self.q, self.log_diag, self.r_unit
        acc.saturated = self.saturated or self.r_unit is None
        return acc.dense()

    def exponent_estimates(self) -> np.ndarray:
        """(1/N) log_diag, sorted descending."""
        return np.sort(self.log_diag / self.n)[::-1]


def orbit_matrix_chunks(cocycle: MatrixCocycle, omega, N: int, reverse: bool = False):
    """Yield (chunk_len, d, d) arrays of generator matrices along the orbit.

    With ``reverse=True`` the matrices come in reversed orbit order (used by
    the transposed accumulations); the whole orbit is generated once either way.
    """
    system = cocycle.base
    if cocycle.constant_matrix is not None:
        left = N
        while left > 0:
            m = min(left, _CHUNK)
            yield np.broadcast_to(cocycle.constant_matrix, (m,) + cocycle.constant_matrix.shape)
            left -= m
        return
    values = system.orbit_values(omega, N)
    if reverse:
        values = values[::-1]
    if cocycle.symbol_matrices is not None:
        for i in range(0, N, _CHUNK):
            yield cocycle.symbol_matrices[np.asarray(values[i : i + _CHUNK], dtype=np.int64)]
        return
    if system.kind in INTERVAL_KINDS:
        for i in range(0, N, _CHUNK):
            yield np.array([cocycle.generator(float(v)) for v in values[i : i + _CHUNK]])
        return
    states = system.orbit_states(omega, N)
    if reverse:
        states = states[::-1]
    for i in range(0, N, _CHUNK):
        yield np.array([cocycle.generator(s) for s in states[i : i + _CHUNK]])


def product(
    cocycle: MatrixCocycle, omega, N: int, keep_r: bool = True, snapshots=None
) -> CocycleProduct:
    """Accumulated QR factorization of the N-step product at omega.

    Never overflows: the R diagonal is kept in log scale.  ``snapshots``
    optionally records intermediate factorizations at given step counts and
    returns them on the product as ``.snapshots``.
    """
    if N < 1:
        raise DomainError("N must be >= 1")
    acc, taken = accumulate_stream(
        cocycle.dimension,
        orbit_matrix_chunks(cocycle, omega, N),
        keep_r=keep_r,
        snapshots=snapshots,
    )
    prod = CocycleProduct(
        omega=omega,
        n=N,
        q=acc.q,
        log_diag=acc.log_diag,
        r_unit=acc.r_unit,
        saturated=acc.saturated,
    )
    if snapshots is not None:
        object.__setattr__(prod, "snapshots", taken)
    return prod


# -- integrability ---------------------------------------------------------------


@dataclass(frozen=True)
class IntegrabilityReport:
    """Monte-Carlo estimates of the log^+ operator-norm integrals."""

    forward_mean: float
    forward_stderr: float
    inverse_mean: float
    inverse_stderr: float
    samples: int


def integrability_check(cocycle: MatrixCocycle, samples: int, seed: int = 0) -> IntegrabilityReport:
    """Estimate E[log^+ ||A||_op] and E[log^+ ||A^{-1}||_op] over the invariant measure."""
    if samples < 1:
        raise DomainError("samples must be >= 1")
    rng = np.random.default_rng(mix64(cocycle.base.seed ^ (seed + 0x1A7E6)))
    fwd = np.empty(samples)
    inv = np.empty(samples)
    for i in range(samples):
        a = np.asarray(cocycle.generator(cocycle.base.sample_state(rng)), dtype=float)
        sv = np.linalg.svd(a, compute_uv=False)
        fwd[i] = max(0.0, np.log(sv[0]))
        inv[i] = max(0.0, -np.log(sv[-1]))
    div = np.sqrt(samples) if samples > 1 else 1.0
    return IntegrabilityReport(
        forward_mean=float(fwd.mean()),
        forward_stderr=float(fwd.std(ddof=1) / div) if samples > 1 else 0.0,
        inverse_mean=float(inv.mean()),
        inverse_stderr=float(inv.std(ddof=1) / div) if samples > 1 else 0.0,
        samples=samples,
    )


# -- functorial constructions -----------------------------------------------------


def _compound_indices(d: int, k: int):
    return list(combinations(range(d), k))


def compound_matrix(a: np.ndarray, k: int) -> np.ndarray:
    """k-th compound (minor) matrix, column-lexicographic subset ordering."""
    d = a.shape[0]
    idx = _compound_indices(d, k)
    out = np.empty((len(idx), len(idx)))
    for i, rows in enumerate(idx):
        sub = a[np.ix_(rows, range(d))]
        for j, cols in enumerate(idx):
            out[i, j] = np.linalg.det(sub[:, cols])
    return out


def _dual_tag(tag):
    return tag  # symplectic/orthogonal/det-one are all closed under g -> (g^{-1})^T


def construct_functorial(
    c1: MatrixCocycle, kind: str, other: MatrixCocycle | None = None, k: int | None = None
) -> MatrixCocycle:
    """Derived cocycle: 'dual', 'tensor', 'hom' (needs ``other``) or 'wedge' (needs ``k``).

    Tensor and hom require the two cocycles to share the same base system
    object (they are driven by one orbit).
    """
    if kind == "dual":
        return _transform_cocycle(
            c1, lambda a: np.linalg.inv(a).T, c1.dimension, _dual_tag(c1.structure_tag)
        )
    if kind == "wedge":
        if k is None or not 1 <= k <= c1.dimension:
            raise DomainError("wedge requires 1 <= k <= d")
        dim = len(_compound_indices(c1.dimension, k))
        tag = "determinant-one" if (k == c1.dimension and c1.structure_tag == "determinant-one") else None
        return _transform_cocycle(c1, lambda a, _k=k: compound_matrix(a, _k), dim, tag)
    if kind in ("tensor", "hom"):
        if other is None:
            raise DomainError(f"{kind} requires a second cocycle")
        if other.base is not c1.base:
            raise PreconditionError(f"{kind} requires the same base system object")
        first = construct_functorial(c1, "dual") if kind == "hom" else c1
        dim = first.dimension * other.dimension
        gen1, gen2 = first.generator, other.generator

        def gen(s):
            return np.kron(gen1(s), gen2(s))

        fast = None
        if first.symbol_matrices is not None and other.symbol_matrices is not None:
            fast = np.array(
                [np.kron(a, b) for a, b in zip(first.symbol_matrices, other.symbol_matrices)]
            )
        const = None
        if first.constant_matrix is not None and other.constant_matrix is not None:
            const = np.kron(first.constant_matrix, other.constant_matrix)
        return MatrixCocycle(
            dimension=dim,
            base=c1.base,
            generator=gen,
            structure_tag=None,
            constant_matrix=const,
            symbol_matrices=fast,
        )
    raise DomainError(f"unknown functorial kind {kind!r}")


def _transform_cocycle(c: MatrixCocycle, f: Callable, dim: int, tag) -> MatrixCocycle:
    const = None if c.constant_matrix is None else f(c.constant_matrix)
    fast = None if c.symbol_matrices is None else np.array([f(a) for a in c.symbol_matrices])
    gen = c.generator
    return MatrixCocycle(
        dimension=dim,
        base=c.base,
        generator=lambda s: f(np.asarray(gen(s), dtype=float)),
        structure_tag=tag,
        constant_matrix=const,
        symbol_matrices=fast,
    )


def determinant_line(cocycle: MatrixCocycle) -> MatrixCocycle:
    """The 1-dimensional determinant cocycle state -> [[det A(state)]]."""
    return _transform_cocycle(
        cocycle,
        lambda a: np.array([[np.linalg.det(a)]]),
        1,
        "determinant-one" if cocycle.structure_tag == "determinant-one" else None,
    )
