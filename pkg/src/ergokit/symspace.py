"""The symmetric space of determinant-one SPD matrices.

Points are kept canonically in log form (a traceless symmetric matrix), which
is what makes orbits of radius far beyond float-exponent range usable: the
space of 2x2 points is globally a hyperbolic plane of curvature -1/2 (pinned
numerically and cross-checked in tests), so large-radius distances follow the
hyperbolic law of cosines evaluated in log space; commuting log forms use the
flat formula of their common maximal flat; everything else goes through the
dense eigenvalue route while exponentials are representable.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from ._accum import accumulate_stream
from .cocycle import MatrixCocycle, orbit_matrix_chunks, product
from .dynsys import dyadic_indices
from .errors import DomainError, NumericalError, PreconditionError

# The dense eigenvalue route loses the small eigenvalues of p^{-1/2} q p^{-1/2}
# once their ratio nears 1/eps, i.e. for distances beyond ~25; keep it well inside.
_DENSE_SUM_RADIUS = 18.0
_CURV_SCALE = 1.0 / np.sqrt(2.0)  # sqrt(|K|) of the 2x2 space under this metric


def sym_check(m: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError("expected a square matrix")
    if np.max(np.abs(m - m.T)) > tol * max(1.0, np.max(np.abs(m))):
        raise DomainError("matrix is not symmetric within 1e-12")
    return 0.5 * (m + m.T)


def spd_log(m: np.ndarray) -> np.ndarray:
    """Matrix log of an SPD matrix via symmetric eigendecomposition."""
    w, v = np.linalg.eigh(sym_check(m))
    if np.any(w <= 0):
        raise DomainError("matrix is not positive definite")
    w = np.clip(w, 1e-300, None)
    return (v * np.log(w)) @ v.T


def sym_exp(s: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(s)
    if np.max(np.abs(w)) > 700:
        raise NumericalError("log-radius too large for a dense exponential")
    return (v * np.exp(w)) @ v.T


@dataclass(frozen=True, eq=False)
class SpdPoint:
    """A determinant-one SPD matrix, stored as its (traceless symmetric) log."""

    log: np.ndarray

    def __post_init__(self):
        s = sym_check(self.log)
        s = s - (np.trace(s) / s.shape[0]) * np.eye(s.shape[0])
        s.setflags(write=False)
        object.__setattr__(self, "log", s)

    @classmethod
    def from_matrix(cls, m) -> "SpdPoint":
        """Normalize an SPD matrix to determinant one and wrap it."""
        return cls(spd_log(np.asarray(m, dtype=float)))

    @classmethod
    def identity(cls, n: int) -> "SpdPoint":
        return cls(np.zeros((n, n)))

    @property
    def n(self) -> int:
        return self.log.shape[0]

    @property
    def radius(self) -> float:
        """Distance to the identity, ||log p||_F."""
        return float(np.linalg.norm(self.log))

    @property
    def matrix(self) -> np.ndarray:
        """Dense representative; available while exponentials are in range."""
        return sym_exp(self.log)

    def cartan(self) -> "CartanVector":
        w = np.sort(np.linalg.eigvalsh(self.log))[::-1]
        return CartanVector(w)


def as_point(p) -> SpdPoint:
    return p if isinstance(p, SpdPoint) else SpdPoint.from_matrix(p)


def _acosh_from_log(log_c: float) -> float:
    if log_c <= 0.0:
        return 0.0
    if log_c < 30.0:
        return float(np.arccosh(max(np.exp(log_c), 1.0)))
    return float(np.log(2.0) + log_c)


def spd_distance(p, q) -> float:
    """Affine-invariant distance d(p, q) = ||log(p^{-1/2} q p^{-1/2})||_F."""
    p, q = as_point(p), as_point(q)
    if p.n != q.n:
        raise DomainError("dimension mismatch")
    if p.n == 1:
        return 0.0
    s1, s2 = p.log, q.log
    r1, r2 = p.radius, q.radius
    if r1 == 0.0 or r2 == 0.0:
        return r1 + r2
    comm = np.linalg.norm(s1 @ s2 - s2 @ s1)
    if comm <= 1e-13 * max(1.0, r1 * r2):
        return float(np.linalg.norm(s1 - s2))
    if r1 + r2 <= _DENSE_SUM_RADIUS:
        winv, v = np.linalg.eigh(s1)
        ph = (v * np.exp(-winv / 2)) @ v.T
        w = np.linalg.eigvalsh(ph @ q.matrix @ ph)
        return float(np.linalg.norm(np.log(np.clip(w, 1e-300, None))))
    if p.n == 2:
        c = float(np.sum(s1 * s2) / (r1 * r2))
        c = min(1.0, max(-1.0, c))
        if 1.0 - c < 1e-15:
            return abs(r1 - r2)
        s = _CURV_SCALE
        a, b = s * r1, s * r2
        terms = np.array([a + b, a - b, b - a, -a - b])
        weights = np.array([1.0 - c, 1.0 + c, 1.0 + c, 1.0 - c]) / 4.0
        log_c = float(logsumexp(terms, b=weights))
        return _acosh_from_log(log_c) / s
    return _distance_mp(p, q)


def _distance_mp(p: SpdPoint, q: SpdPoint) -> float:
    """High-precision distance for large non-commuting points beyond rank-one."""
    import mpmath as mp

    old = mp.mp.dps
    try:
        mp.mp.dps = int((p.radius + q.radius) * 0.7) + 60
        w, v = np.linalg.eigh(p.log)
        vm = mp.matrix(v.tolist())
        dm = mp.diag([mp.e ** (mp.mpf(-wi) / 2) for wi in w])
        ph = vm * dm * vm.T
        w2, v2 = np.linalg.eigh(q.log)
        qm = mp.matrix(v2.tolist()) * mp.diag([mp.e ** mp.mpf(wi) for wi in w2]) * mp.matrix(
            v2.tolist()
        ).T
        m = ph * qm * ph
        m = (m + m.T) / 2
        ev = mp.eigsy(m, eigvals_only=True)
        return float(mp.sqrt(mp.fsum([mp.log(e) ** 2 for e in ev])))
    finally:
        mp.mp.dps = old


def spd_geodesic(p, q, t: float) -> SpdPoint:
    """The geodesic from p to q at parameter t in [0, 1]."""
    p, q = as_point(p), as_point(q)
    s1, s2 = p.log, q.log
    comm = np.linalg.norm(s1 @ s2 - s2 @ s1)
    if comm <= 1e-13 * max(1.0, p.radius * q.radius):
        return SpdPoint((1.0 - t) * s1 + t * s2)
    if p.radius + q.radius <= _DENSE_SUM_RADIUS:
        w, v = np.linalg.eigh(s1)
        ph = (v * np.exp(w / 2)) @ v.T
        phi = (v * np.exp(-w / 2)) @ v.T
        mid = phi @ q.matrix @ phi
        wm, vm = np.linalg.eigh(mid)
        mt = (vm * np.power(np.clip(wm, 1e-300, None), t)) @ vm.T
        return SpdPoint.from_matrix(ph @ mt @ ph)
    raise NumericalError(
        "geodesic interpolation between large non-commuting points is not supported"
    )


def spd_midpoint(p, q) -> SpdPoint:
    return spd_geodesic(p, q, 0.5)


# -- Cartan data -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CartanVector:
    """Sorted log singular values (sum zero): the vector-valued radius."""

    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=float)
        if np.any(np.diff(e) > 1e-12):
            raise DomainError("Cartan vector entries must be sorted descending")
        if abs(e.sum()) > 1e-10:
            raise DomainError("Cartan vector entries must sum to 0 within 1e-10")
        e = e - e.mean()
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.entries))


def cartan_projection(g) -> CartanVector:
    """Sorted log singular values of g after scaling to |det| = 1."""
    g = np.asarray(g, dtype=float)
    sign, logdet = np.linalg.slogdet(g)
    if sign == 0:
        raise DomainError("matrix is singular")
    sv = np.linalg.svd(g, compute_uv=False)
    r = np.log(sv) - logdet / g.shape[0]
    return CartanVector(np.sort(r)[::-1])


def kak_decompose(g):
    """g = k1 a k2 with orthogonal k's and descending positive diagonal a."""
    g = np.asarray(g, dtype=float)
    u, s, vt = np.linalg.svd(g)
    if s[-1] < 1e-300:
        raise DomainError("matrix is singular")
    return u, np.diag(s), vt


def sectional_curvature(x, y) -> float:
    """-(1/2) ||[x, y]||_F^2 for orthonormalized traceless symmetric directions."""
    x = sym_check(x)
    y = sym_check(y)
    nx = np.linalg.norm(x)
    if nx < 1e-300:
        raise PreconditionError("x vanishes")
    x = x / nx
    y = y - np.sum(x * y) * x
    ny = np.linalg.norm(y)
    if ny < 1e-12:
        raise PreconditionError("directions are linearly dependent")
    y = y / ny
    comm = x @ y - y @ x
    return float(-0.5 * np.sum(comm * comm))


@dataclass(frozen=True, eq=False)
class GeodesicRay:
    """Unit-speed geodesic ray t -> G exp(tX) G^T with G the basepoint square root."""

    basepoint: SpdPoint
    direction: np.ndarray

    def __post_init__(self):
        x = sym_check(self.direction)
        if abs(np.trace(x)) > 1e-12:
            raise DomainError("ray direction must be traceless within 1e-12")
        if abs(np.linalg.norm(x) - 1.0) > 1e-12:
            raise DomainError("ray direction must have unit Frobenius norm within 1e-12")
        x.setflags(write=False)
        object.__setattr__(self, "direction", x)

    def __call__(self, t: float) -> SpdPoint:
        if self.basepoint.radius == 0.0:
            return SpdPoint(t * self.direction)
        w, v = np.linalg.eigh(self.basepoint.log)
        g = (v * np.exp(w / 2)) @ v.T
        return SpdPoint.from_matrix(g @ sym_exp(t * self.direction) @ g)


def ray_through(basepoint: SpdPoint, direction) -> GeodesicRay:
    """Build a unit-speed ray, normalizing the direction."""
    x = sym_check(direction)
    x = x - (np.trace(x) / x.shape[0]) * np.eye(x.shape[0])
    nx = np.linalg.norm(x)
    if nx < 1e-300:
        raise DomainError("direction vanishes")
    return GeodesicRay(basepoint=basepoint, direction=x / nx)


# -- horospherical coordinates and Busemann functions ------------------------------


@dataclass(frozen=True, eq=False)
class BusemannData:
    """A diagonal traceless direction with the block partition of its equal entries."""

    alpha: np.ndarray
    partition: tuple = field(default=None)

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=float)
        if a.ndim != 1:
            raise DomainError("alpha must be a vector of diagonal entries")
        if np.any(np.diff(a) > 1e-12):
            raise DomainError("alpha entries must be weakly decreasing")
        if abs(a.sum()) > 1e-10:
            raise DomainError("alpha must be traceless within 1e-10")
        a.setflags(write=False)
        object.__setattr__(self, "alpha", a)
        sizes = []
        for v in a:
            if sizes and abs(v - last) <= 1e-12:  # noqa: F821
                sizes[-1] += 1
            else:
                sizes.append(1)
            last = v
        object.__setattr__(self, "partition", tuple(sizes))

    @property
    def n(self) -> int:
        return len(self.alpha)

    @property
    def unit(self) -> bool:
        return abs(np.linalg.norm(self.alpha) - 1.0) <= 1e-10


def nalpha_decompose(p, b: BusemannData):
    """Coordinates p = n f n^T: block-unipotent n and block-diagonal SPD f.

    Computed by recursive Schur complements from the trailing block; the
    decomposition exists and is unique for SPD input.
    """
    pm = as_point(p).matrix if isinstance(p, SpdPoint) else sym_check(np.asarray(p, dtype=float))
    if pm.shape[0] != b.n:
        raise DomainError("dimension mismatch with the partition")
    sizes = list(b.partition)
    return _schur_unipotent(pm, sizes)


def _schur_unipotent(pm: np.ndarray, sizes: list[int]):
    if len(sizes) == 1:
        return np.eye(pm.shape[0]), pm.copy()
    m = pm.shape[0] - sizes[-1]
    p11, p12, p22 = pm[:m, :m], pm[:m, m:], pm[m:, m:]
    nb = p12 @ np.linalg.inv(p22)
    schur = p11 - nb @ p12.T
    n_sub, f_sub = _schur_unipotent(schur, sizes[:-1])
    n = np.eye(pm.shape[0])
    n[:m, :m] = n_sub
    n[:m, m:] = nb
    f = np.zeros_like(pm)
    f[:m, :m] = f_sub
    f[m:, m:] = p22
    return n, f


def busemann_value(b: BusemannData, p) -> float:
    """Closed-form Busemann function of the ray exp(t alpha): -tr(alpha log f)."""
    if not b.unit:
        raise PreconditionError("alpha must have unit Frobenius norm (unit-speed ray)")
    _, f = nalpha_decompose(p, b)
    return float(-np.sum(np.diag(spd_log(f)) * b.alpha))


@dataclass(frozen=True)
class BusemannOracleResult:
    """Limit estimate of d(gamma(t), p) - t along the ray, with convergence data."""

    value: float  # extrapolated limit (the oracle's answer)
    raw: float  # d(gamma(t_max), p) - t_max
    increment: float  # raw - value at t_max/2: the last-doubling convergence bound
    t_max: float


def busemann_limit_oracle(b: BusemannData, p, t_max: float) -> BusemannOracleResult:
    """Direct limit h(p) = lim_t d(exp(t alpha), p) - t, extrapolated in 1/t.

    Flat components converge only like 1/t, so the returned ``value`` is a
    three-node Richardson extrapolation of h at t_max/4, t_max/2, t_max; the
    raw endpoint value and the last-doubling increment are also reported.
    Distances are evaluated in adaptive-precision arithmetic because exp(t
    alpha) leaves float range long before t_max = 1e3.
    """
    import mpmath as mp

    pp = as_point(p)
    dist0 = spd_distance(SpdPoint.identity(pp.n), pp)
    if t_max < 10.0 * dist0:
        raise PreconditionError("t_max must be at least 10 * d(I, p)")
    pm = pp.matrix
    alpha = b.alpha

    def h_at(t: float) -> mp.mpf:
        spread = float((alpha.max() - alpha.min()) * t)
        old = mp.mp.dps
        try:
            mp.mp.dps = int(spread / np.log(10.0)) + 60
            d = mp.diag([mp.e ** (mp.mpf(-ai) * t / 2) for ai in alpha])
            m = d * mp.matrix(pm.tolist()) * d
            ev = mp.eigsy(m, eigvals_only=True)
            dist = mp.sqrt(mp.fsum([mp.log(e) ** 2 for e in ev]))
            return dist - t
        finally:
            mp.mp.dps = old

    ts = [t_max / 4.0, t_max / 2.0, t_max]
    hs = [h_at(t) for t in ts]
    us = [1.0 / t for t in ts]
    ex = list(hs)
    for m_ in range(1, 3):
        for i in range(3 - m_):
            ex[i] = ex[i + 1] + (ex[i + 1] - ex[i]) * us[i + m_] / (us[i] - us[i + m_])
    return BusemannOracleResult(
        value=float(ex[0]),
        raw=float(hs[-1]),
        increment=float(hs[-1] - hs[-2]),
        t_max=t_max,
    )


# -- pull-back metrics along a cocycle ---------------------------------------------


class PullbackMetricSequence:
    """The sequence x_n = det-normalized (T^(n))^T T^(n), accessed stably.

    Radius vectors come from the accumulated log diagonal, eigenframes from a
    transposed-reversed accumulation at the requested index, single steps from
    the exact identity eig(x_n^{-1} x_{n+1}) = centered sigma(A(T^n w))^2.
    """

    def __init__(self, cocycle: MatrixCocycle, omega, N: int):
        if cocycle.dimension < 1:
            raise DomainError("empty cocycle")
        self.cocycle = cocycle
        self.omega = omega
        self.N = int(N)
        self._points: dict[int, SpdPoint] = {}
        self._logsig: dict[int, np.ndarray] = {}
        ns = dyadic_indices(self.N)
        prod = product(cocycle, omega, self.N, keep_r=False, snapshots=ns)
        for n, (_, logd, _, _) in prod.snapshots.items():
            self._logsig[n] = np.sort(logd)[::-1]

    def log_singular_values(self, n: int) -> np.ndarray:
        if n not in self._logsig:
            prod = product(self.cocycle, self.omega, n, keep_r=False)
            self._logsig[n] = np.sort(prod.log_diag)[::-1]
        return self._logsig[n]

    def cartan(self, n: int) -> CartanVector:
        """R(x_n): sorted eigenvalue logs of the normalized Gram matrix."""
        ls = self.log_singular_values(n)
        return CartanVector(2.0 * (ls - ls.mean()))

    def point(self, n: int) -> SpdPoint:
        if n not in self._points:
            mats = (
                np.transpose(c, (0, 2, 1))
                for c in orbit_matrix_chunks(self.cocycle, self.omega, n, reverse=True)
            )
            acc, _ = accumulate_stream(self.cocycle.dimension, mats, keep_r=False)
            rates = acc.log_diag
            frame = acc.q
            order = np.argsort(rates)[::-1]
            ls = rates[order]
            v = frame[:, order]
            s = (v * (2.0 * (ls - ls.mean()))) @ v.T
            self._points[n] = SpdPoint(s)
        return self._points[n]

    def step_distance(self, n: int) -> float:
        """d(x_n, x_{n+1}), exact from the single generator at T^n w."""
        states = self.cocycle.base.orbit_states(self.omega, n + 1)
        a = np.asarray(self.cocycle.generator(states[n]), dtype=float)
        ls = np.log(np.linalg.svd(a, compute_uv=False))
        return float(np.linalg.norm(2.0 * (ls - ls.mean())))

    def gram_dense(self, n: int) -> np.ndarray:
        """Dense normalized Gram matrix (small n oracle)."""
        t = product(self.cocycle, self.omega, n).dense()
        g = t.T @ t
        sign, logdet = np.linalg.slogdet(g)
        return g * np.exp(-logdet / g.shape[0])


def pullback_metric_sequence(cocycle: MatrixCocycle, omega, N: int) -> PullbackMetricSequence:
    """Lazy view of the pulled-back metrics G_n = (T^(n))^T T^(n), det-normalized."""
    return PullbackMetricSequence(cocycle, omega, N)


# -- regularity diagnostics ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RegularityReport:
    """Kaimanovich-criterion diagnostics plus tracking against a candidate ray."""

    ns: tuple
    step_ratios: tuple
    cartan_gaps: tuple
    tracking_errors: tuple
    theta: float
    direction: np.ndarray
    cartan_oscillation: float
    degenerate: bool


def regularity_report(points, N: int | None = None) -> RegularityReport:
    """Diagnose regularity of a point sequence in the SPD space.

    ``points`` is either a list of SpdPoint (indexed from 0) or a
    PullbackMetricSequence (indexed from 1).  Reports step ratios
    d(x_n, x_{n+1})/n, Cartan-slope convergence ||R(x_n)/n - R(x_N)/N||, a
    candidate ray built from the terminal log, and per-n tracking errors.
    Non-convergence shows up in the numbers; it is not an error.
    """
    if isinstance(points, PullbackMetricSequence):
        N = points.N if N is None else N
        if N < 2:
            raise PreconditionError("need N >= 2")
        get_point = points.point
        get_cartan = lambda n: points.cartan(n).entries
        get_step = points.step_distance
        nmax = N
        dim = points.cocycle.dimension
    else:
        pts = list(points)
        if N is None:
            N = len(pts) - 1
        if N < 2:
            raise PreconditionError("need at least 3 points")
        get_point = lambda n: pts[n]
        get_cartan = lambda n: pts[n].cartan().entries
        get_step = lambda n: spd_distance(pts[n], pts[n + 1])
        nmax = min(N, len(pts) - 2)
        dim = pts[0].n
    ns = [n for n in dyadic_indices(nmax) if n >= 1]
    terminal = get_point(N)
    r_end = get_cartan(N) / N
    theta = float(np.linalg.norm(terminal.log) / N)
    degenerate = theta < 1e-9
    if degenerate:
        direction = np.zeros((dim, dim))
    else:
        direction = terminal.log / np.linalg.norm(terminal.log)
    steps, gaps, tracking = [], [], []
    for n in ns:
        steps.append((n, get_step(n) / n))
        gaps.append((n, float(np.linalg.norm(get_cartan(n) / n - r_end))))
        if degenerate:
            tracking.append((n, get_point(n).radius / n))
        else:
            gamma_n = SpdPoint(theta * n * direction)
            tracking.append((n, spd_distance(get_point(n), gamma_n) / n))
    osc = max((g for m, g in gaps if m >= nmax / 4), default=0.0)
    return RegularityReport(
        ns=tuple(ns),
        step_ratios=tuple(steps),
        cartan_gaps=tuple(gaps),
        tracking_errors=tuple(tracking),
        theta=theta,
        direction=direction,
        cartan_oscillation=float(osc),
        degenerate=degenerate,
    )
