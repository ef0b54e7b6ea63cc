"""Lyapunov spectra, forward/backward filtrations, the invertible-case
splitting, the explicit resolvent-series splitting map, and growth residual
diagnostics.

Filtration frames are estimated from singular subspaces of the finite
product: the right-singular frame of T^(N) at the start fiber is the Q factor
of a QR accumulation of the transposed generators fed in reversed orbit
order, with columns ranked by their accumulated growth rates.  This stays
stable at any N.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from ._accum import accumulate_stream
from ._rand import mix64
from .cocycle import (
    MatrixCocycle,
    CocycleProduct,
    construct_functorial,
    orbit_matrix_chunks,
    product,
)
from .dynsys import ShiftState, dyadic_indices
from .errors import DomainError, NumericalError, PreconditionError

__all__ = [
    "LyapunovSpectrum",
    "Filtration",
    "OseledetsSplitting",
    "SplittingMap",
    "lyapunov_spectrum",
    "forward_filtration",
    "backward_filtration",
    "oseledets_splitting",
    "splitting_map",
    "lambda_residual",
    "principal_angles",
]

DIVERGENCE_SENTINEL = -1e6  # exponents below -1e6/N are flagged as "diverged below"


@dataclass(frozen=True)
class LyapunovSpectrum:
    """Sorted exponent estimates with multiplicity grouping."""

    exponents: np.ndarray  # descending, repeated by multiplicity
    gap_threshold: float
    groups: tuple  # ((value, multiplicity), ...)
    horizon: int
    method: str
    low_confidence: bool = False
    diverged_below: bool = False

    @property
    def dimension(self) -> int:
        return len(self.exponents)

    def group_dims_ascending(self) -> list[int]:
        """dim V^{<=lambda_i} for groups from the bottom up: m_k, m_k+m_{k-1}, ..., d."""
        mults = [m for _, m in self.groups][::-1]
        return list(np.cumsum(mults))


def _group_exponents(exps: np.ndarray, threshold: float):
    groups = [[e] for e in exps]
    merged = True
    while merged and len(groups) > 1:
        merged = False
        out = [groups[0]]
        for g in groups[1:]:
            if np.mean(out[-1]) - np.mean(g) < threshold:
                out[-1] = out[-1] + g
                merged = True
            else:
                out.append(g)
        groups = out
    return tuple((float(np.mean(g)), len(g)) for g in groups)


def lyapunov_spectrum(
    cocycle: MatrixCocycle,
    omega,
    N: int,
    method: str = "qr",
    gap_threshold: float | None = None,
) -> LyapunovSpectrum:
    """Estimate the Lyapunov exponents of the cocycle at omega over N steps.

    method="qr": (1/N) log of the accumulated R diagonal, sorted.
    method="svd-wedge": log singular values of T^(N) recovered as differences
    of the top growth rates of the exterior-power cocycles (the top singular
    value of the k-th compound is the product sigma_1...sigma_k), each top
    rate read from a QR accumulation on the compound generators.
    """
    d = cocycle.dimension
    if N < d:
        raise PreconditionError("N must be at least the cocycle dimension")
    if method == "qr":
        prod = product(cocycle, omega, N, keep_r=False)
        exps = prod.exponent_estimates()
    elif method == "svd-wedge":
        tops = []
        for k in range(1, d + 1):
            wk = cocycle if k == 1 else construct_functorial(cocycle, "wedge", k=k)
            pk = product(wk, omega, N, keep_r=False)
            tops.append(float(np.max(pk.log_diag)) / N)
        exps = np.sort(np.diff([0.0] + tops))[::-1]
    else:
        raise DomainError(f"unknown method {method!r}")
    threshold = max(10.0 / N, 1e-3) if gap_threshold is None else gap_threshold
    groups = _group_exponents(exps, threshold)
    gaps = [groups[i][0] - groups[i + 1][0] for i in range(len(groups) - 1)]
    return LyapunovSpectrum(
        exponents=exps,
        gap_threshold=threshold,
        groups=groups,
        horizon=N,
        method=method,
        low_confidence=bool(gaps and min(gaps) < 2 * threshold),
        diverged_below=bool(np.any(exps < DIVERGENCE_SENTINEL / N)),
    )


# -- filtrations -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Filtration:
    """Nested subspace estimates, one orthonormal frame per filtration step.

    ``frames[i]`` has shape (d, dims[i]) and spans the estimated subspace of
    vectors growing at rate <= ``exponents_le[i]``; dims is strictly
    increasing with dims[-1] = d.
    """

    dims: tuple
    frames: tuple
    exponents_le: tuple
    direction: str
    rates: np.ndarray = field(default=None, repr=False)  # per-column growth rates

    def frame_for_dim(self, m: int) -> np.ndarray:
        return self.frames[self.dims.index(m)]


def principal_angles(f1: np.ndarray, f2: np.ndarray) -> np.ndarray:
    """Principal angles between the spans of two orthonormal frames."""
    sv = np.linalg.svd(f1.T @ f2, compute_uv=False)
    return np.arccos(np.clip(sv, -1.0, 1.0))


def _transpose_reversed_frames(cocycle: MatrixCocycle, omega, N: int):
    """Right-singular data of T^(N) at omega: (rates per column, column frame)."""
    chunks = (np.transpose(c, (0, 2, 1)) for c in orbit_matrix_chunks(cocycle, omega, N, reverse=True))
    acc, _ = accumulate_stream(cocycle.dimension, chunks, keep_r=False)
    return acc.log_diag / N, acc.q


def _filtration_from_frames(rates, qcols, spectrum: LyapunovSpectrum, direction: str) -> Filtration:
    order = np.argsort(rates)  # slowest first
    cols = qcols[:, order]
    rts = rates[order]
    dims = spectrum.group_dims_ascending()
    values = [v for v, _ in spectrum.groups][::-1]  # bottom group first
    frames = tuple(cols[:, :m].copy() for m in dims)
    return Filtration(
        dims=tuple(int(m) for m in dims),
        frames=frames,
        exponents_le=tuple(values),
        direction=direction,
        rates=rts,
    )


def forward_filtration(
    cocycle: MatrixCocycle, omega, N: int, spectrum: LyapunovSpectrum | None = None
) -> Filtration:
    """Estimate the forward filtration V^{<=lambda_i} at omega.

    Frames are nested by construction (prefixes of one orthonormal column
    set).  Requires the spectrum groups to be separated by at least 10/N.
    """
    if spectrum is None:
        spectrum = lyapunov_spectrum(cocycle, omega, N)
    _check_separation(spectrum, N)
    rates, q = _transpose_reversed_frames(cocycle, omega, N)
    return _filtration_from_frames(rates, q, spectrum, "forward")


def _check_separation(spectrum: LyapunovSpectrum, N: int):
    vals = [v for v, _ in spectrum.groups]
    gaps = [vals[i] - vals[i + 1] for i in range(len(vals) - 1)]
    if gaps and min(gaps) < 10.0 / N:
        raise PreconditionError(
            f"spectrum groups separated by {min(gaps):.3e} < 10/N = {10.0 / N:.3e}; "
            "increase N to resolve the filtration"
        )


def _past_states(cocycle: MatrixCocycle, omega, N: int) -> list:
    """States T^{-1}w, T^{-2}w, ..., T^{-N}w, refusing non-invertible bases."""
    system = cocycle.base
    if system.kind == "circle-rotation":
        out = []
        s = omega
        for _ in range(N):
            s = system.inverse_step(s)
            out.append(s)
        return out
    if isinstance(omega, ShiftState) and omega.pos >= N:
        start = ShiftState(omega.pos - N, 0)
        if system.kind == "bernoulli-shift":
            start = ShiftState(omega.pos - N, system._bernoulli_symbol(omega.pos - N))
        else:
            s = system._markov_initial()
            for p in range(1, omega.pos - N + 1):
                s = system._symbol_after(p, s)
            start = ShiftState(omega.pos - N, s)
        states = system.orbit_states(start, N)
        return states[::-1]
    raise DomainError(
        "backward filtration needs an invertible base: use a circle rotation, or a "
        f"shift state with tape position >= {N} (pre-generated history)"
    )


def _inverse_cocycle_over_past(cocycle: MatrixCocycle, past: list) -> tuple:
    """Matrices of the backward cocycle C(w) = A(T^{-1}w)^{-1} along the past orbit."""
    mats = np.array([np.linalg.inv(cocycle.generator(s)) for s in past])
    return mats


def backward_filtration(
    cocycle: MatrixCocycle, omega, N: int, spectrum: LyapunovSpectrum | None = None
) -> Filtration:
    """Filtration of backward growth rates (exponents of the inverse cocycle)."""
    past = _past_states(cocycle, omega, N)
    mats = _inverse_cocycle_over_past(cocycle, past)
    acc, _ = accumulate_stream(cocycle.dimension, [mats], keep_r=False)
    exps = np.sort(acc.log_diag / N)[::-1]
    threshold = max(10.0 / N, 1e-3)
    groups = _group_exponents(exps, threshold)
    spec = LyapunovSpectrum(
        exponents=exps, gap_threshold=threshold, groups=groups, horizon=N, method="qr"
    )
    _check_separation(spec, N)
    accT, _ = accumulate_stream(
        cocycle.dimension, [np.transpose(mats[::-1], (0, 2, 1))], keep_r=False
    )
    return _filtration_from_frames(accT.log_diag / N, accT.q, spec, "backward")


def intersect_frames(f1: np.ndarray, f2: np.ndarray, expected: int) -> np.ndarray:
    """Orthonormal basis of the intersection of two estimated subspaces."""
    sv_u, sv, _ = np.linalg.svd(f1.T @ f2)
    angles = np.arccos(np.clip(sv, -1.0, 1.0))
    if expected > min(f1.shape[1], f2.shape[1]) or (
        expected > 0 and angles[expected - 1] > np.pi / 4
    ):
        raise NumericalError(
            f"intersection dimension mismatch: expected {expected}, principal angles "
            f"{np.round(angles, 6).tolist()}"
        )
    basis = f1 @ sv_u[:, :expected]
    q, _ = np.linalg.qr(basis)
    return q[:, :expected]


@dataclass(frozen=True, eq=False)
class OseledetsSplitting:
    """Estimated direct-sum decomposition V = sum of V^{lambda_j}."""

    values: tuple  # group exponent values, descending
    frames: tuple  # orthonormal frame per summand
    dims: tuple

    @property
    def dimension(self) -> int:
        return int(sum(self.dims))

    def basis_matrix(self) -> np.ndarray:
        return np.hstack(self.frames)


def oseledets_splitting(cocycle: MatrixCocycle, omega, N: int) -> OseledetsSplitting:
    """Estimate the splitting V^{lambda_j} = V^{<=lambda_j} /\\ V^{<=eta_{k+1-j}}.

    Needs backward steps at omega (invertible base, or a shift state with
    enough pre-generated history).  Intersections are taken by principal
    angles; a dimension mismatch raises with the measured angles.
    """
    fwd = forward_filtration(cocycle, omega, N)
    bwd = backward_filtration(cocycle, omega, N)
    d = cocycle.dimension
    k = len(fwd.dims)
    if len(bwd.dims) != k:
        raise NumericalError(
            f"forward/backward group counts differ ({k} vs {len(bwd.dims)}); increase N"
        )
    # forward dims ascending correspond to groups k..1; summand j needs
    # V^{<=lambda_j} (dim sum_{i>=j} m_i) and the backward frame of dim sum_{i<=j} m_i.
    mults = [fwd.dims[0]] + [fwd.dims[i] - fwd.dims[i - 1] for i in range(1, k)]  # m_k..m_1
    mults = mults[::-1]  # m_1..m_k
    frames = []
    values = []
    for j in range(1, k + 1):
        dim_f = int(sum(mults[j - 1 :]))
        dim_b = int(sum(mults[:j]))
        ff = fwd.frame_for_dim(dim_f)
        fb = bwd.frame_for_dim(dim_b)
        frames.append(intersect_frames(ff, fb, mults[j - 1]))
        values.append(fwd.exponents_le[fwd.dims.index(dim_f)])
    if sum(f.shape[1] for f in frames) != d:
        raise NumericalError("splitting dimensions do not sum to the fiber dimension")
    b = np.hstack(frames)
    if abs(np.linalg.det(b)) < 1e-8:
        raise NumericalError("splitting frames are numerically dependent")
    return OseledetsSplitting(values=tuple(values), frames=tuple(frames), dims=tuple(mults))


# -- the splitting map series ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SplittingMap:
    """Truncated series solution of the block-triangular invariance equation."""

    dim_e: int
    dim_f: int
    tau: np.ndarray
    terms_used: int
    converged: bool
    residual: float
    tempered_ns: tuple
    tempered_values: tuple


def block_parts(cocycle: MatrixCocycle, dim_e: int, state):
    a = np.asarray(cocycle.generator(state), dtype=float)
    e, f = dim_e, a.shape[0] - dim_e
    if np.max(np.abs(a[e:, :e])) > 1e-12 * max(1.0, np.max(np.abs(a))):
        raise PreconditionError("generator is not block upper-triangular at the given split")
    return a[:e, :e], a[:e, e:], a[e:, e:]


def _series_tau(cocycle, dim_e, states, max_terms, tol=1e-10):
    d = cocycle.dimension
    e, f = dim_e, d - dim_e
    pe = np.eye(e)
    pf = np.eye(f)
    tau = np.zeros((e, f))
    growth_streak = 0
    last_norm = np.inf
    converged = False
    used = max_terms
    for n in range(max_terms):
        te, u, tf = block_parts(cocycle, dim_e, states[n])
        pe = te @ pe  # T_E^{n+1}
        term = -np.linalg.solve(pe, u @ pf)
        tau += term
        pf = tf @ pf  # T_F^{n+1}
        tn = float(np.linalg.norm(term))
        if tn < tol and not converged:
            converged = True
            used = n + 1
        if tn == 0.0:
            break  # underflowed; further terms cannot move the sum
        if tn > last_norm:
            growth_streak += 1
            if growth_streak >= 10:
                raise NumericalError(
                    "splitting series diverges (10 consecutive growing terms); "
                    "the exponent hypothesis lambda_E > lambda_F is likely violated"
                )
        else:
            growth_streak = 0
        last_norm = tn
    return tau, used, converged


def splitting_map(
    cocycle: MatrixCocycle,
    dim_e: int,
    omega,
    max_terms: int = 64,
    temper_horizon: int = 4096,
    check_exponents: bool = True,
) -> SplittingMap:
    """Solve for the invariant complement of the E-block of a triangular cocycle.

    The map tau is the partial sum of -(T_E^{n+1})^{-1} U_{T^n w} T_F^n.  The
    residual reported is ||T_E tau_w + U_w - tau_Tw T_F|| of the invariance
    equation; the tempered trace is (1/n) log(||sigma(T_F^n v)|| / ||T_F^n v||)
    at dyadic n for the graph section sigma(v) = (tau v, v).
    """
    d = cocycle.dimension
    if not 1 <= dim_e < d:
        raise DomainError("dim_e must split the fiber nontrivially")
    if check_exponents:
        probe_n = 512
        se = lyapunov_spectrum(_block_cocycle(cocycle, dim_e, "e"), omega, probe_n)
        sf = lyapunov_spectrum(_block_cocycle(cocycle, dim_e, "f"), omega, probe_n)
        if se.exponents[-1] <= sf.exponents[0]:
            raise PreconditionError(
                f"need lambda_E > lambda_F; estimated min(E)={se.exponents[-1]:.4f} "
                f"<= max(F)={sf.exponents[0]:.4f}"
            )
    horizon = temper_horizon + max_terms + 2
    states = cocycle.base.orbit_states(omega, horizon + 1)
    tau, used, converged = _series_tau(cocycle, dim_e, states, max_terms)
    tau_next, _, _ = _series_tau(cocycle, dim_e, states[1:], max_terms)
    te, u, tf = block_parts(cocycle, dim_e, states[0])
    residual = float(np.linalg.norm(te @ tau + u - tau_next @ tf))

    ns = [n for n in dyadic_indices(temper_horizon)]
    vals = []
    f = d - dim_e
    v = np.ones(f) / np.sqrt(f)
    logn = 0.0
    pos = 0
    for n in ns:
        while pos < n:
            _, _, tfk = block_parts(cocycle, dim_e, states[pos])
            v = tfk @ v
            nv = np.linalg.norm(v)
            v /= nv
            logn += np.log(nv)
            pos += 1
        tau_n, _, _ = _series_tau(cocycle, dim_e, states[n:], max_terms)
        ratio = np.sqrt(np.linalg.norm(tau_n @ v) ** 2 + 1.0)  # ||sigma(w)||/||w|| for unit w
        vals.append(float(np.log(ratio) / n))
    return SplittingMap(
        dim_e=dim_e,
        dim_f=f,
        tau=tau,
        terms_used=used,
        converged=converged,
        residual=residual,
        tempered_ns=tuple(ns),
        tempered_values=tuple(vals),
    )


def _block_cocycle(cocycle: MatrixCocycle, dim_e: int, which: str) -> MatrixCocycle:
    gen = cocycle.generator
    if which == "e":
        dim = dim_e
        fn = lambda s: np.asarray(gen(s), dtype=float)[:dim_e, :dim_e]
    else:
        dim = cocycle.dimension - dim_e
        fn = lambda s: np.asarray(gen(s), dtype=float)[dim_e:, dim_e:]
    return MatrixCocycle(dimension=dim, base=cocycle.base, generator=fn)


# -- growth residual diagnostic ----------------------------------------------------


def lambda_residual(
    cocycle: MatrixCocycle,
    omega,
    N: int,
    splitting: OseledetsSplitting,
    probes: np.ndarray | None = None,
    seed: int = 0,
) -> tuple[list[int], np.ndarray]:
    """Trace of (1/n) log |<L^{-2n} (T^n)^T T^n v, v>| at dyadic n <= N.

    L acts as e^{lambda_j} on the estimated summand V^{lambda_j}.  Values
    trending to 0 certify the splitting's exponents; divergence is data, not
    an error.  Evaluated entirely in log space from QR snapshots, so large n
    is safe.
    """
    d = cocycle.dimension
    if probes is None:
        rng = np.random.default_rng(mix64(seed ^ 0x9A6BE))
        probes, _ = np.linalg.qr(rng.normal(size=(d, d)))
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    if probes.shape[0] != d:
        probes = probes.T
    b = splitting.basis_matrix()
    c = np.linalg.inv(b)
    lam = np.concatenate([[v] * m for v, m in zip(splitting.values, splitting.dims)])
    ns = dyadic_indices(N)
    prod = product(cocycle, omega, N, keep_r=True, snapshots=ns)
    out = np.empty((len(ns), probes.shape[1]))
    for i, n in enumerate(ns):
        _, logd, r_unit, _ = prod.snapshots[n]
        rc = r_unit @ c.T  # columns: R_hat c_j
        for t in range(probes.shape[1]):
            v = probes[:, t]
            rv = r_unit @ v
            vb = v @ b
            # sum_{j,i} exp(-2n lam_j + 2 l_i) * (v.b_j)(Rc)_{i,j}(Rv)_i
            a_mat = (-2.0 * n * lam)[None, :] + 2.0 * logd[:, None]
            w_mat = vb[None, :] * rc * rv[:, None]
            val, sign = logsumexp(a_mat, b=w_mat, return_sign=True)
            out[i, t] = val / n if sign != 0 else -np.inf
    return ns, out
