"""Birkhoff orthogonality, best approximation and orthogonal decomposition.

The central primitive is a 1-D convex minimisation of t -> ||u + t v||. Its
derivative is the supporting functional of the current point applied to the
direction, which is strictly increasing on strictly convex smooth models, so
a safeguarded secant root-find (Illinois) converges fast and certifiably.

``best_approximation`` minimises over subspace coefficients by cyclic exact
coordinate minimisation plus one exact line search along the pulled-back
gradient per sweep; the convergence criterion is the Birkhoff residual of
x - y* against the basis, which doubles as the optimality certificate.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import sampling
from .certificates import Certificate
from .errors import ConfigError, ConvergenceError, UnsupportedModelError, ZeroVectorError
from .norms import NormModel, as_vector
from .sip import sip_eval

__all__ = [
    "SubspaceBasis",
    "Decomposition",
    "birkhoff_check",
    "sip_orthogonal",
    "best_approximation",
    "orthogonal_decompose",
    "complement_linearity_probe",
]

INDEPENDENCE_RTOL = 1e-10
SPAN_MEMBERSHIP_RTOL = 1e-13


@dataclass(frozen=True, eq=False)
class SubspaceBasis:
    """Ordered linearly independent vectors spanning a subspace of the ambient model."""

    vectors: tuple
    ambient: NormModel

    def __post_init__(self):
        vecs = tuple(as_vector(v, self.ambient.dim, "basis vector") for v in self.vectors)
        if not 1 <= len(vecs) <= self.ambient.dim:
            raise ConfigError(f"basis must have between 1 and {self.ambient.dim} vectors")
        mat = np.column_stack(vecs)
        svals = np.linalg.svd(mat, compute_uv=False)
        if svals[-1] < INDEPENDENCE_RTOL * svals[0]:
            raise ConfigError(
                f"basis vectors are linearly dependent (singular value ratio {svals[-1] / svals[0]:.2e})"
            )
        object.__setattr__(self, "vectors", vecs)
        object.__setattr__(self, "_matrix", mat)
        object.__setattr__(self, "_pinv", np.linalg.pinv(mat))

    @property
    def matrix(self) -> np.ndarray:
        """dim x k matrix with basis vectors as columns."""
        return self._matrix

    @property
    def pinv(self) -> np.ndarray:
        """Euclidean pseudoinverse; least-squares warm starts for the solver."""
        return self._pinv

    @property
    def k(self) -> int:
        return len(self.vectors)

    @property
    def is_proper(self) -> bool:
        return self.k < self.ambient.dim

    def to_doc(self) -> list:
        return [v.tolist() for v in self.vectors]


@dataclass(frozen=True, eq=False)
class Decomposition:
    """x = y + z with y in the subspace and z Birkhoff-orthogonal to it."""

    y: np.ndarray
    z: np.ndarray
    residual_orth: float


def _directional_derivative(u: np.ndarray, v: np.ndarray, m: NormModel, t: float) -> float:
    """d/dt ||u + t v|| at points where the norm is differentiable."""
    w = u + t * v
    if m._norm(w) == 0.0:
        return 0.0
    return float(np.dot(m._support(w), v))


def _argmin_along(u: np.ndarray, v: np.ndarray, m: NormModel, dtol: float, t0: float = 0.0) -> float:
    """Minimise t -> ||u + t v|| on a smooth strictly convex model.

    Secant iteration on the strictly increasing derivative, with bracket
    tracking and bisection fallback. Stops when |d/dt| <= dtol or the bracket
    collapses; returns the best point seen.
    """
    nv = m._norm(v)
    if nv == 0.0:
        return 0.0
    geom = max(m._norm(u) / nv, 1e-6)

    def deriv(t: float) -> float:
        return _directional_derivative(u, v, m, t)

    t_prev, d_prev = float(t0), deriv(t0)
    if abs(d_prev) <= dtol:
        return t_prev
    lo = hi = None
    if d_prev > 0.0:
        hi = t_prev
    else:
        lo = t_prev

    # Newton-like first guess from the near-Euclidean curvature scale
    t_curr = t_prev - (d_prev / nv) * geom
    d_curr = deriv(t_curr)
    if d_curr > 0.0:
        hi = t_curr if hi is None else min(hi, t_curr)
    elif d_curr < 0.0:
        lo = t_curr if lo is None else max(lo, t_curr)
    best_t, best_d = (t_curr, abs(d_curr)) if abs(d_curr) < abs(d_prev) else (t_prev, abs(d_prev))
    step = geom

    for _ in range(120):
        if abs(d_curr) <= dtol:
            return t_curr
        if lo is not None and hi is not None and hi - lo <= 1e-15 * (1.0 + abs(lo) + abs(hi)):
            return best_t
        denom = d_curr - d_prev
        t_next = t_curr - d_curr * (t_curr - t_prev) / denom if denom != 0.0 else None
        if lo is not None and hi is not None:
            if t_next is None or not (lo < t_next < hi):
                t_next = 0.5 * (lo + hi)
        else:
            # still expanding toward a sign change
            cap = 64.0 * (abs(t_curr) + geom + 1.0)
            if t_next is None or abs(t_next - t_curr) > cap:
                step *= 2.0
                t_next = t_curr - np.sign(d_curr) * step
        t_prev, d_prev = t_curr, d_curr
        t_curr, d_curr = t_next, deriv(t_next)
        if d_curr > 0.0:
            hi = t_curr if hi is None else min(hi, t_curr)
        elif d_curr < 0.0:
            lo = t_curr if lo is None else max(lo, t_curr)
        if abs(d_curr) < best_d:
            best_t, best_d = t_curr, abs(d_curr)
    return best_t


def birkhoff_check(x, y, m: NormModel, tol: float = 1e-7) -> bool:
    """True iff min over alpha of ||x + alpha*y|| stays within tol of ||x||.

    Solved by bracketing + golden-section with a Newton polish on the
    derivative; smoothness is not assumed (the golden stage carries the
    degenerate collinear case where the minimum sits at a kink).
    """
    x = as_vector(x, m.dim)
    y = as_vector(y, m.dim)
    nx = m.norm(x)
    if nx == 0.0:
        raise ZeroVectorError("Birkhoff orthogonality needs a nonzero first argument")
    if m.norm(y) == 0.0:
        return True
    gmin = _line_min_value(x, y, m)
    return gmin >= nx - tol


def _line_min_value(x: np.ndarray, y: np.ndarray, m: NormModel) -> float:
    g = lambda a: m.norm(x + a * y)
    s = max(1.0, m.norm(x) / m.norm(y))
    a, mid, b = -s, 0.0, s
    ga, gm, gb = g(a), g(mid), g(b)
    for _ in range(200):
        if ga < gm:
            b, gb, mid, gm = mid, gm, a, ga
            a = mid - 2.0 * (b - mid)
            ga = g(a)
        elif gb < gm:
            a, ga, mid, gm = mid, gm, b, gb
            b = mid + 2.0 * (b - a if b > a else s)
            gb = g(b)
        else:
            break

    # golden-section to a tight bracket
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    lo, hi = a, b
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    gc, gd = g(c), g(d)
    best = min(ga, gm, gb, gc, gd)
    while hi - lo > 1e-9 * (1.0 + abs(lo) + abs(hi)):
        if gc < gd:
            hi, d, gd = d, c, gc
            c = hi - invphi * (hi - lo)
            gc = g(c)
        else:
            lo, c, gc = c, d, gd
            d = lo + invphi * (hi - lo)
            gd = g(d)
        best = min(best, gc, gd)

    # Newton polish on the derivative (skipped at a kink)
    alpha = 0.5 * (lo + hi)
    for _ in range(20):
        w = x + alpha * y
        if m.norm(w) <= 1e-14 * (1.0 + m.norm(x)):
            return 0.0
        h = 1e-6 * (1.0 + abs(alpha))
        d1 = _directional_derivative(x, y, m, alpha)
        d2 = (_directional_derivative(x, y, m, alpha + h)
              - _directional_derivative(x, y, m, alpha - h)) / (2.0 * h)
        if d2 <= 0.0:
            break
        step = d1 / d2
        alpha -= step
        if abs(step) <= 1e-14 * (1.0 + abs(alpha)):
            break
    return min(best, g(alpha))


def sip_orthogonal(x, y, m: NormModel, tol: float = 1e-7) -> bool:
    """True iff y is semi-inner-product orthogonal to x: [y|x] = 0 (note the order)."""
    x = as_vector(x, m.dim)
    y = as_vector(y, m.dim)
    nx, ny = m.norm(x), m.norm(y)
    if nx == 0.0 or ny == 0.0:
        return True
    return abs(sip_eval(y, x, m)) <= tol * nx * ny


def _birkhoff_residual(z: np.ndarray, basis: SubspaceBasis) -> float:
    """max_b |phi_z(b)| / ||b||, the stationarity certificate for z = x - y*."""
    m = basis.ambient
    if m._norm(z) == 0.0:
        return 0.0
    phi = m._support(z)
    return max(abs(float(np.dot(phi, b))) / m._norm(b) for b in basis.vectors)


def best_approximation(
    x,
    Y: SubspaceBasis,
    tol: float = 1e-9,
    max_iter: int = 10_000,
    start=None,
):
    """Nearest point to x in span(Y) under the ambient norm.

    Requires a smooth, strictly convex ambient model (uniqueness). Optimality
    is certified by the Birkhoff residual of x - y* against every basis
    vector; non-convergence raises loudly with the last iterate attached.
    """
    m = Y.ambient
    if not (m.smooth and m.strictly_convex):
        raise UnsupportedModelError("best approximation needs a smooth, strictly convex ambient model")
    x = as_vector(x, m.dim)
    B = Y.matrix
    if start is None:
        c = Y.pinv @ x
    else:
        c = np.asarray(start, dtype=float).copy()
        if c.shape != (Y.k,):
            raise ConfigError(f"start must have {Y.k} coefficients")
    r = x - B @ c
    nx = m._norm(x)
    if m._norm(r) <= SPAN_MEMBERSHIP_RTOL * (1.0 + nx):
        return B @ c

    inner_tol_scale = 0.2 * tol
    residual = np.inf
    stall_best = np.inf
    stall_age = 0
    for sweep in range(int(max_iter)):
        for j in range(Y.k):
            b = Y.vectors[j]
            t = _argmin_along(r, b, m, dtol=inner_tol_scale * m._norm(b))
            if t != 0.0:
                c[j] -= t
                r = x - B @ c
        if m._norm(r) <= SPAN_MEMBERSHIP_RTOL * (1.0 + nx):
            return B @ c
        residual = _birkhoff_residual(r, Y)
        if residual <= tol:
            return B @ c
        if Y.k > 1:
            # exact line search along the pulled-back gradient to beat
            # coordinate coupling
            d = B.T @ m._support(r)
            v = -B @ d
            nv = m._norm(v)
            if nv > 0.0:
                t = _argmin_along(r, v, m, dtol=inner_tol_scale * nv)
                if t != 0.0:
                    c += t * d
                    r = x - B @ c
            residual = _birkhoff_residual(r, Y)
            if residual <= tol:
                return B @ c
        # fail fast on stagnation (e.g. the target is numerically inside the
        # span, where the scale-free residual cannot certify stationarity)
        if residual < stall_best * (1.0 - 1e-2):
            stall_best = residual
            stall_age = 0
        else:
            stall_age += 1
            if stall_age >= 30:
                raise ConvergenceError(
                    f"best approximation stalled at residual {residual:.3e} "
                    f"(target {tol:g}) after {sweep + 1} sweeps",
                    last_iterate=B @ c,
                    residual=residual,
                )
    raise ConvergenceError(
        f"best approximation did not reach residual {tol:g} in {max_iter} sweeps",
        last_iterate=B @ c,
        residual=residual,
    )


def orthogonal_decompose(x, Y: SubspaceBasis, tol: float = 1e-9) -> Decomposition:
    """Split x = y + z with y the best approximation in Y and z in the orthogonal cone."""
    m = Y.ambient
    x = as_vector(x, m.dim)
    y = best_approximation(x, Y, tol=tol)
    z = x - y
    if m._norm(z) <= SPAN_MEMBERSHIP_RTOL * (1.0 + m._norm(x)):
        return Decomposition(y=y, z=np.zeros(m.dim), residual_orth=0.0)
    return Decomposition(y=y, z=z, residual_orth=_birkhoff_residual(z, Y))


def complement_linearity_probe(
    Y: SubspaceBasis,
    n_pairs: int = 64,
    seed: int = 0,
    tol: float = 1e-8,
    solver_tol: float = 1e-11,
) -> Certificate:
    """Probe whether the orthogonal complement of span(Y) is closed under addition.

    Samples points, takes their orthogonal parts z_i, and tests z_i + z_j for
    membership in the complement. Reports either a witness pair (with the
    Birkhoff residual of the sum and the norm of its best approximation in Y,
    which vanishes iff the sum is again orthogonal) or the largest residual
    seen. Deterministic given the seed.
    """
    m = Y.ambient
    if not (m.smooth and m.strictly_convex):
        raise UnsupportedModelError("complement probe needs a smooth, strictly convex ambient model")
    rng = sampling.rng_from_seed(seed)
    n_pairs = int(n_pairs)
    n_points = 2
    while n_points * (n_points - 1) // 2 < n_pairs:
        n_points += 1

    zs = []
    guard = 0
    while len(zs) < n_points and guard < 20 * n_points:
        guard += 1
        dec = orthogonal_decompose(sampling.sample_scaled(rng, m.dim), Y, tol=solver_tol)
        if m._norm(dec.z) > 1e-9:
            zs.append(dec.z)

    max_residual = 0.0
    witness = None
    best_violation = -1.0
    for i, j in itertools.islice(itertools.combinations(range(len(zs)), 2), n_pairs):
        s = zs[i] + zs[j]
        ns = m._norm(s)
        if ns <= 1e-13:
            continue
        phi = m._support(s)
        r = max(abs(float(np.dot(phi, b))) / m._norm(b) for b in Y.vectors)
        max_residual = max(max_residual, r)
        y_part = best_approximation(s, Y, tol=solver_tol)
        violation = m.norm(y_part)
        if violation > best_violation:
            best_violation = violation
            witness = {
                "z1": zs[i].tolist(),
                "z2": zs[j].tolist(),
                "residual": r,
                "violation_norm": violation,
            }

    found = max_residual > tol
    return Certificate(
        kind="nonlinearity",
        target="complement",
        instance={"model": m.config(), "subspace": Y.to_doc()},
        seed=int(seed),
        n_pairs=n_pairs,
        tol=float(tol),
        max_residual=max_residual,
        violation_norm=None if witness is None else witness["violation_norm"],
        witness=witness if found else None,
        no_violation=not found,
    )
