"""CAT(0) toolkit: comparison geometry, uniform convexity, the record-holder
geodesic-tracking algorithm, finite direct integrals with induced actions,
and the mean subadditive theorem check.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ._rand import mix64
from .dynsys import SubadditiveSequence, dyadic_indices, fekete_limit
from .errors import DomainError, NumericalError, PreconditionError
from .horofunctions import EuclideanSpace, Isometry, SpdSpace
from .symspace import SpdPoint, spd_distance, spd_geodesic

# -- spaces ----------------------------------------------------------------------


class Cat0Space:
    """Geodesic space with unique midpoints: distance, geodesic, ray extension."""

    basepoint = None

    def distance(self, x, y) -> float:
        raise NotImplementedError

    def geodesic(self, x, y, t: float):
        """Point at parameter fraction t in [0, 1] on the geodesic [x, y]."""
        raise NotImplementedError

    def midpoint(self, x, y):
        return self.geodesic(x, y, 0.5)

    def ray_point(self, x, y, s: float):
        """Point at arclength s >= 0 on the ray from x through y."""
        d = self.distance(x, y)
        if d <= 0:
            raise DomainError("ray needs distinct points")
        return self.geodesic(x, y, s / d)

    def sample(self, rng: np.random.Generator):
        raise NotImplementedError


class EuclideanCat0(EuclideanSpace, Cat0Space):
    def geodesic(self, x, y, t: float):
        x, y = np.asarray(x, float), np.asarray(y, float)
        return (1.0 - t) * x + t * y


class SpdCat0(SpdSpace, Cat0Space):
    def geodesic(self, x, y, t: float):
        return spd_geodesic(x, y, t)

    def ray_point(self, x, y, s: float):
        x, y = (p if isinstance(p, SpdPoint) else SpdPoint.from_matrix(p) for p in (x, y))
        if x.radius == 0.0:
            # rays from the identity extend in log form at any radius
            ry = y.radius
            if ry <= 0:
                raise DomainError("ray needs distinct points")
            return SpdPoint((s / ry) * y.log)
        return super().ray_point(x, y, s)


@dataclass(frozen=True)
class TreePoint:
    """A point of a metric tree: on the edge (u, v) at distance s from u."""

    u: int
    v: int
    s: float

    @classmethod
    def vertex(cls, i: int) -> "TreePoint":
        return cls(i, i, 0.0)


class TreeSpace(Cat0Space):
    """A finite weighted tree with its path metric (curvature-free CAT(0) case)."""

    def __init__(self, n_nodes: int, edges: Sequence[tuple], basepoint: int = 0):
        from scipy.sparse import coo_matrix
        from scipy.sparse.csgraph import shortest_path

        if len(edges) != n_nodes - 1:
            raise DomainError("a tree on n nodes has n - 1 edges")
        rows, cols, data = [], [], []
        self._w = {}
        for u, v, w in edges:
            rows += [u, v]
            cols += [v, u]
            data += [float(w), float(w)]
            self._w[(min(u, v), max(u, v))] = float(w)
        g = coo_matrix((data, (rows, cols)), shape=(n_nodes, n_nodes))
        self._d, self._pred = shortest_path(g.tocsr(), directed=False, return_predecessors=True)
        if np.any(np.isinf(self._d)):
            raise DomainError("tree must be connected")
        self.n_nodes = n_nodes
        self.basepoint = TreePoint.vertex(basepoint)

    def _canon(self, p) -> TreePoint:
        if isinstance(p, (int, np.integer)):
            return TreePoint.vertex(int(p))
        if p.u == p.v:
            return p
        if p.s <= 1e-15:
            return TreePoint.vertex(p.u)
        w = self._w[(min(p.u, p.v), max(p.u, p.v))]
        if p.s >= w - 1e-15:
            return TreePoint.vertex(p.v)
        return p

    def _ends(self, p: TreePoint):
        if p.u == p.v:
            return [(p.u, 0.0)]
        w = self._w[(min(p.u, p.v), max(p.u, p.v))]
        return [(p.u, p.s), (p.v, w - p.s)]

    def distance(self, x, y) -> float:
        x, y = self._canon(x), self._canon(y)
        if x.u != x.v and y.u != y.v and {x.u, x.v} == {y.u, y.v}:
            su = x.s if x.u == y.u else self._w[(min(x.u, x.v), max(x.u, x.v))] - x.s
            return abs(su - y.s)
        return min(
            sx + self._d[ex, ey] + sy for ex, sx in self._ends(x) for ey, sy in self._ends(y)
        )

    def geodesic(self, x, y, t: float):
        x, y = self._canon(x), self._canon(y)
        total = self.distance(x, y)
        target = t * total
        if total <= 1e-15:
            return x
        if x.u != x.v and y.u != y.v and {x.u, x.v} == {y.u, y.v}:
            su = x.s if x.u == y.u else self._w[(min(x.u, x.v), max(x.u, x.v))] - x.s
            base = x if x.u == y.u else TreePoint(y.u, y.v, su)
            step = np.sign(y.s - base.s) * target
            return self._canon(TreePoint(base.u, base.v, base.s + step))
        # exit x's edge through the optimal endpoint, walk vertices, enter y's edge
        (ex, sx) = min(self._ends(x), key=lambda es: es[1] + min(self._d[es[0], ey] + sy for ey, sy in self._ends(y)))
        (ey, sy) = min(self._ends(y), key=lambda es: self._d[ex, es[0]] + es[1])
        if target <= sx:
            if x.u == x.v:
                pass  # sx == 0, fall through to vertex walk
            else:
                direction = -1.0 if ex == x.u else 1.0
                return self._canon(TreePoint(x.u, x.v, x.s + direction * target))
        target -= sx
        path = self._vertex_path(ex, ey)
        for a, b in zip(path, path[1:]):
            w = self._w[(min(a, b), max(a, b))]
            if target <= w + 1e-15:
                if a < b:
                    return self._canon(TreePoint(a, b, target))
                return self._canon(TreePoint(b, a, w - target))
            target -= w
        if y.u == y.v:
            return TreePoint.vertex(ey)
        direction = 1.0 if ey == y.u else -1.0
        base = 0.0 if ey == y.u else self._w[(min(y.u, y.v), max(y.u, y.v))]
        return self._canon(TreePoint(y.u, y.v, base + direction * target))

    def _vertex_path(self, a: int, b: int) -> list[int]:
        path = [b]
        while path[-1] != a:
            path.append(int(self._pred[a, path[-1]]))
        return path[::-1]

    def sample(self, rng):
        u, v, w = rng.integers(self.n_nodes), None, None
        edge = list(self._w.keys())[int(rng.integers(len(self._w)))]
        w = self._w[edge]
        return self._canon(TreePoint(edge[0], edge[1], float(rng.random() * w)))


def audit_parallelogram(space: Cat0Space, triples: int = 1000, seed: int = 0, slack: float = 1e-9):
    """The CAT(0) midpoint inequality on random triples."""
    rng = np.random.default_rng(mix64(seed ^ 0xCA70))
    for _ in range(triples):
        x, y1, y2 = space.sample(rng), space.sample(rng), space.sample(rng)
        m = space.midpoint(y1, y2)
        lhs = space.distance(x, m) ** 2
        rhs = 0.5 * (space.distance(x, y1) ** 2 + space.distance(x, y2) ** 2) - 0.25 * space.distance(y1, y2) ** 2
        if lhs > rhs + slack:
            raise PreconditionError(f"parallelogram law fails at ({x!r}, {y1!r}, {y2!r})")


# -- uniform convexity --------------------------------------------------------------


def uniform_convexity_defect(eps: float) -> float:
    """f(eps) = 2 g^{-1}(1 - eps) = 4 sqrt(2 eps - eps^2) for the CAT(0) modulus."""
    if not 0.0 < eps < 1.0:
        raise DomainError("eps must lie in (0, 1)")
    return 4.0 * np.sqrt(2.0 * eps - eps * eps)


@dataclass(frozen=True, eq=False)
class ReverseTriangleResult:
    eps_witness: float
    deviation: float
    bound: float
    y_prime: object


def reverse_triangle_check(space: Cat0Space, x, y, z) -> ReverseTriangleResult:
    """Almost-reverse-triangle witness: how far y sits from the geodesic [x, z].

    Finds the tightest eps with (1-eps) d(x,y) + d(y,z) <= d(x,z), takes y' on
    [x, z] with d(x, y') = d(x, y), and reports the deviation d(y, y') against
    the uniform-convexity bound f(eps) d(x, y).
    """
    dxy, dyz, dxz = space.distance(x, y), space.distance(y, z), space.distance(x, z)
    if dxy <= 0:
        raise PreconditionError("need d(x, y) > 0")
    if dxz < dxy:
        raise PreconditionError("need d(x, z) >= d(x, y)")
    eps = 1.0 - (dxz - dyz) / dxy
    if eps >= 1.0:
        raise PreconditionError("hypothesis unsatisfiable: eps would reach 1")
    eps = max(eps, 1e-15)
    y_prime = space.geodesic(x, z, dxy / dxz)
    dev = space.distance(y, y_prime)
    return ReverseTriangleResult(
        eps_witness=float(eps),
        deviation=float(dev),
        bound=float(uniform_convexity_defect(eps) * dxy),
        y_prime=y_prime,
    )


# -- Karlsson--Margulis tracking ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TrackingReport:
    """Record-holder tracking-ray construction along one orbit."""

    drift: float
    fekete_gap: float
    degenerate: bool
    epsilons: tuple
    k_indices: tuple
    record_times: tuple
    geodesic_endpoints: tuple  # (x0, x_{N_i}) pairs, one per usable epsilon level
    deviations: tuple  # (level, radius, deviation, bound)
    tracking_ns: tuple
    tracking_errors: tuple  # (1/k) d(x_k, ray(A k))
    horizon_truncated: bool
    ray: tuple  # (x0, through-point) of the final ray


def _auto_epsilons(A: float, levels: int) -> list[float]:
    # solve f(2 eps / (A + eps)) <= 2^{-i} in closed form: f(q) = 4 sqrt(2q - q^2)
    out = []
    for i in range(1, levels + 1):
        rhs = (2.0 ** (-i) / 4.0) ** 2
        q = 1.0 - np.sqrt(max(0.0, 1.0 - rhs))
        out.append(q * A / (2.0 - q))
    return out


def km_tracking_ray(
    space: Cat0Space,
    orbit: Sequence,
    epsilons: Sequence[float] | str = "auto",
    drift_tol: float = 1e-9,
    levels: int = 8,
) -> TrackingReport:
    """Build the tracking geodesic ray for a semi-contraction orbit.

    ``orbit`` is the point sequence x_0 .. x_N (x_0 is the ray basepoint).
    The drift A is the Fekete infimum when the distance sequence passes a
    subadditivity audit, else the tail infimum (orbits supplied directly need
    not be subadditive).  Sublinear orbits (A <= drift_tol) yield a degenerate
    report.  Finite horizons emit the deepest epsilon level whose record time
    fits; the report is marked horizon-truncated.
    """
    pts = list(orbit)
    N = len(pts) - 1
    if N < 100:
        raise PreconditionError("need an orbit of at least 100 steps")
    x0 = pts[0]
    a = np.array([space.distance(x0, p) for p in pts[1:]])
    try:
        rep = fekete_limit(SubadditiveSequence(a))
        A = rep.inf_value
        gap = rep.gap
    except PreconditionError:
        slopes = a / np.arange(1, N + 1)
        A = float(np.min(slopes[N // 2 :]))
        gap = float(slopes[-1] - A)
    if A <= drift_tol:
        return TrackingReport(
            drift=A, fekete_gap=gap, degenerate=True, epsilons=(), k_indices=(),
            record_times=(), geodesic_endpoints=(), deviations=(), tracking_ns=(),
            tracking_errors=(), horizon_truncated=True, ray=(),
        )
    eps_list = _auto_epsilons(A, levels) if isinstance(epsilons, str) else [float(e) for e in epsilons]
    n_idx = np.arange(1, N + 1)
    k_indices = []
    for e in eps_list:
        ok = (a >= (A - e) * n_idx - 1e-12) & (a <= (A + e) * n_idx + 1e-12)
        bad = np.nonzero(~ok)[0]
        k_indices.append(int(bad[-1] + 2) if len(bad) else 1)
    # deepest usable level: need a record time N_i <= N with N_i > K_{i+1}
    usable = []
    for i, e in enumerate(eps_list):
        k_next = k_indices[i + 1] if i + 1 < len(k_indices) else k_indices[i]
        if k_next > N:
            break
        b = a - (A - e) * n_idx
        best = -np.inf
        rec = 0
        for n in range(1, N + 1):
            if b[n - 1] > best:
                best = b[n - 1]
                if n > k_next:
                    rec = n
        if rec == 0:
            break
        usable.append((i, e, rec))
    if not usable:
        raise PreconditionError(
            "no record time found past the stabilization index; horizon too short"
        )
    endpoints = tuple((x0, pts[rec]) for _, _, rec in usable)
    deviations = []
    for j in range(1, len(usable)):
        i_prev, _, rec_prev = usable[j - 1]
        i_cur, e_cur, rec_cur = usable[j]
        r = min(a[rec_prev - 1], a[rec_cur - 1])
        g_prev = space.ray_point(x0, pts[rec_prev], r)
        g_cur = space.ray_point(x0, pts[rec_cur], r)
        dev = space.distance(g_prev, g_cur)
        bound = uniform_convexity_defect(min(0.999999, 2 * e_cur / (A + e_cur))) * r
        deviations.append((usable[j][0], float(r), float(dev), float(bound)))
    final_rec = usable[-1][2]
    ns = [n for n in dyadic_indices(N)]
    errs = []
    for k in ns:
        target = space.ray_point(x0, pts[final_rec], A * k)
        errs.append(space.distance(pts[k], target) / k)
    return TrackingReport(
        drift=float(A),
        fekete_gap=float(gap),
        degenerate=False,
        epsilons=tuple(e for _, e, _ in usable),
        k_indices=tuple(k_indices[: len(usable)]),
        record_times=tuple(rec for _, _, rec in usable),
        geodesic_endpoints=endpoints,
        deviations=tuple(deviations),
        tracking_ns=tuple(ns),
        tracking_errors=tuple(float(e) for e in errs),
        horizon_truncated=True,
        ray=(x0, pts[final_rec]),
    )


def semicontraction_orbit(space: Cat0Space, f, N: int, x0=None) -> list:
    """x0, f(x0), ..., f^N(x0) for feeding the tracking algorithm."""
    x = space.basepoint if x0 is None else x0
    out = [x]
    for _ in range(N):
        x = f.apply(x)
        out.append(x)
    return out


# -- finite direct integrals ----------------------------------------------------------


class DirectIntegral(Cat0Space):
    """L^2 sections of finitely many CAT(0) fibers with weights summing to one.

    Sections are lists of fiber points; the distance is the weighted L^2
    combination of fiber distances and geodesics are pointwise at a common
    fraction.
    """

    def __init__(self, fibers: Sequence[Cat0Space], weights: Sequence[float], basepoint_section=None):
        self.fibers = list(fibers)
        self.weights = np.asarray(weights, dtype=float)
        if len(self.fibers) != len(self.weights) or len(self.fibers) == 0:
            raise DomainError("need one weight per fiber")
        if np.any(self.weights <= 0):
            raise DomainError("weights must be positive")
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise DomainError("weights must sum to 1 within 1e-12")
        if basepoint_section is None:
            basepoint_section = [f.basepoint for f in self.fibers]
        self.basepoint = list(basepoint_section)

    def _check(self, sigma):
        if len(sigma) != len(self.fibers):
            raise DomainError("section must assign a point to every base point")
        return sigma

    def distance(self, s1, s2) -> float:
        s1, s2 = self._check(s1), self._check(s2)
        acc = 0.0
        for mu, fib, x, y in zip(self.weights, self.fibers, s1, s2):
            acc += mu * fib.distance(x, y) ** 2
        return float(np.sqrt(acc))

    def geodesic(self, s1, s2, t: float):
        s1, s2 = self._check(s1), self._check(s2)
        return [fib.geodesic(x, y, t) for fib, x, y in zip(self.fibers, s1, s2)]

    def ray_point(self, s1, s2, s: float):
        d = self.distance(s1, s2)
        if d <= 0:
            raise DomainError("ray needs distinct sections")
        frac = s / d
        out = []
        for fib, x, y in zip(self.fibers, s1, s2):
            if fib.distance(x, y) <= 1e-15:
                out.append(x)
            else:
                out.append(fib.ray_point(x, y, frac * fib.distance(x, y)))
        return out

    def sample(self, rng):
        return [f.sample(rng) for f in self.fibers]


def direct_integral_distance(di: DirectIntegral, s1, s2) -> float:
    """sqrt(sum_i mu_i d_i(s1_i, s2_i)^2)."""
    return di.distance(s1, s2)


def induced_action_step(
    di: DirectIntegral, fiber_isometries: Sequence[Isometry], base_perm: Sequence[int], sigma
):
    """One pull-back step (T* sigma)(w) = T_w^{-1}(sigma(T w)).

    ``base_perm[i]`` is the index of T(w_i); it must preserve the weights.
    ``fiber_isometries[i]`` is T_{w_i}, mapping fiber i to fiber base_perm[i].
    """
    m = len(di.fibers)
    perm = [int(i) for i in base_perm]
    if sorted(perm) != list(range(m)):
        raise PreconditionError("base map must be a permutation of the finite base")
    for i in range(m):
        if abs(di.weights[perm[i]] - di.weights[i]) > 1e-12:
            raise PreconditionError("base map must preserve the weights")
    sigma = di._check(sigma)
    return [fiber_isometries[i].inverse().apply(sigma[perm[i]]) for i in range(m)]


def induced_orbit(di, fiber_isometries, base_perm, sigma0, N: int) -> list:
    """Iterated pull-back sections sigma0, T* sigma0, ..., (T*)^N sigma0."""
    out = [list(sigma0)]
    for _ in range(N):
        out.append(induced_action_step(di, fiber_isometries, base_perm, out[-1]))
    return out


# -- mean subadditive theorem -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FinitePermutationBase:
    """A finite measure-preserving system: weighted points permuted by T."""

    weights: np.ndarray
    perm: tuple

    def __init__(self, weights, perm):
        w = np.asarray(weights, dtype=float)
        if abs(w.sum() - 1.0) > 1e-12 or np.any(w <= 0):
            raise DomainError("weights must be positive and sum to 1")
        p = tuple(int(i) for i in perm)
        if sorted(p) != list(range(len(w))):
            raise DomainError("perm must be a permutation")
        for i, j in enumerate(p):
            if abs(w[i] - w[j]) > 1e-12:
                raise DomainError("permutation must preserve weights")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "perm", p)


@dataclass(frozen=True)
class MeanKingmanReport:
    limit: float
    ns: tuple
    l2_errors: tuple  # ||f_n / n - A||_{L^2(mu)} at dyadic n


def mean_kingman_check(
    base: FinitePermutationBase, f_values, N: int, audit_slack: float = 1e-9
) -> MeanKingmanReport:
    """Check the mean subadditive limit: averages a_n = <1, f_n> have a Fekete
    limit A and ||f_n/n - A||_{L^2} trends to zero.

    ``f_values`` is an (N, m) array with f_values[n-1, i] = f_n(w_i), or a
    callable (n, i) -> value evaluated once.  Nonnegativity and the pointwise
    subadditivity f_{n+m} <= f_n + U^n f_m are audited for all base points and
    all pairs with n + m <= N.
    """
    m = len(base.weights)
    if callable(f_values):
        F = np.array([[float(f_values(n, i)) for i in range(m)] for n in range(1, N + 1)])
    else:
        F = np.asarray(f_values, dtype=float)
        if F.shape != (N, m):
            raise DomainError(f"f_values must have shape ({N}, {m})")
    if np.any(F < -audit_slack):
        n, i = np.unravel_index(int(np.argmin(F)), F.shape)
        raise PreconditionError(f"f_{n + 1}(w_{i}) = {F[n, i]!r} is negative")
    idx = np.arange(m)
    perm = np.array(base.perm)
    cur = idx.copy()  # T^n applied to indices
    for n in range(1, N):
        cur = cur[perm] if n > 1 else perm.copy()
        mm = N - n
        lhs = F[n : n + mm]  # f_{n+m'}, m' = 1..mm  (rows n+m'-1)
        rhs = F[n - 1][None, :] + F[:mm][:, cur]
        bad = lhs > rhs + audit_slack
        if np.any(bad):
            r, i = np.unravel_index(int(np.argmax(bad)), bad.shape)
            raise PreconditionError(
                f"subadditivity fails at (n, m, w) = ({n}, {r + 1}, {i}): "
                f"f_{n + r + 1} = {lhs[r, i]!r} > {rhs[r, i]!r}"
            )
    a = F @ base.weights
    rep = fekete_limit(SubadditiveSequence(a))
    A = rep.inf_value
    ns = dyadic_indices(N)
    errs = [
        float(np.sqrt(np.sum(base.weights * (F[n - 1] / n - A) ** 2))) for n in ns
    ]
    return MeanKingmanReport(limit=float(A), ns=tuple(ns), l2_errors=tuple(errs))
