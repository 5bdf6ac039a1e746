"""Quotient spaces of a smooth, strictly convex model by a proper subspace.

The quotient norm of a coset is the distance from any representative to the
subspace. The quotient pairing is evaluated through the orthogonal parts of
representatives, and the metric-projection section picks, for each coset, its
unique representative in the orthogonal cone. The section preserves norms and
the pairing but is non-linear whenever the orthogonal cone is not a subspace,
which is exactly what the counterexample pipeline exploits.

``QuotientCoordNorm`` exposes a quotient as an ordinary flat model by fixing a
complementary coordinate slice; its norm and duality map are produced by the
solver (there is no closed form) and memoised per direction.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import sampling
from .certificates import Certificate
from .errors import ConfigError, UnsupportedModelError
from .norms import NormModel, as_vector, model_from_config
from .ortho import SubspaceBasis, best_approximation, orthogonal_decompose
from .sip import sip_eval

__all__ = [
    "QuotientSpace",
    "QuotientElement",
    "quotient_norm",
    "quotient_sip",
    "section_map",
    "quotient_equal",
    "verify_section_sip",
    "QuotientCoordNorm",
    "complementary_coordinate_slice",
]

DEFAULT_SOLVER_TOL = 1e-11


@dataclass(frozen=True, eq=False)
class QuotientSpace:
    ambient: NormModel
    Y: SubspaceBasis

    def __post_init__(self):
        if self.Y.ambient is not self.ambient and self.Y.ambient != self.ambient:
            raise ConfigError("subspace basis must live in the quotient's ambient model")
        if not self.Y.is_proper:
            raise ConfigError("quotient needs a proper subspace (0 < dim Y < dim X)")
        if not (self.ambient.smooth and self.ambient.strictly_convex):
            raise UnsupportedModelError("quotients are computed over smooth, strictly convex models")


@dataclass(frozen=True, eq=False)
class QuotientElement:
    """A coset, stored as any representative."""

    representative: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "representative", np.asarray(self.representative, dtype=float))


def _rep(q) -> np.ndarray:
    return q.representative if isinstance(q, QuotientElement) else np.asarray(q, dtype=float)


def quotient_norm(q, Q: QuotientSpace, tol: float = DEFAULT_SOLVER_TOL) -> float:
    """Norm of the coset: distance from a representative to the subspace."""
    rep = as_vector(_rep(q), Q.ambient.dim)
    y = best_approximation(rep, Q.Y, tol=tol)
    return Q.ambient.norm(rep - y)


def section_map(q, Q: QuotientSpace, tol: float = DEFAULT_SOLVER_TOL) -> np.ndarray:
    """The unique representative of the coset lying in the orthogonal cone."""
    rep = as_vector(_rep(q), Q.ambient.dim)
    return rep - best_approximation(rep, Q.Y, tol=tol)


def quotient_sip(u, w, Q: QuotientSpace, tol: float = DEFAULT_SOLVER_TOL) -> float:
    """Pairing of two cosets via the orthogonal parts of their representatives."""
    u2 = section_map(u, Q, tol=tol)
    w2 = section_map(w, Q, tol=tol)
    return sip_eval(u2, w2, Q.ambient)


def quotient_equal(q1, q2, Q: QuotientSpace, tol: float = 1e-8) -> bool:
    """Coset equality: the difference of representatives is within tol of the subspace."""
    diff = as_vector(_rep(q1), Q.ambient.dim) - as_vector(_rep(q2), Q.ambient.dim)
    n = Q.ambient.norm(diff)
    if n == 0.0:
        return True
    return quotient_norm(diff, Q) <= tol * (1.0 + n)


def verify_section_sip(Q: QuotientSpace, n_pairs: int = 100, seed: int = 0, tol: float = 1e-7) -> Certificate:
    """Check that the section preserves the pairing, across representative shifts.

    For sampled (u, w) the pairing of section values is compared against the
    quotient pairing computed from independently shifted representatives, so
    the check exercises representative independence as well.
    """
    rng = sampling.rng_from_seed(seed)
    m = Q.ambient
    B = Q.Y.matrix
    max_residual = 0.0
    witness = None
    for _ in range(int(n_pairs)):
        u = sampling.sample_scaled(rng, m.dim)
        w = sampling.sample_scaled(rng, m.dim)
        shift_u = B @ rng.uniform(-1.0, 1.0, Q.Y.k)
        shift_w = B @ rng.uniform(-1.0, 1.0, Q.Y.k)
        lhs = sip_eval(section_map(u, Q), section_map(w, Q), m)
        rhs = quotient_sip(u + shift_u, w + shift_w, Q)
        r = abs(lhs - rhs) / (1.0 + abs(rhs))
        if r > max_residual:
            max_residual = r
            witness = {"u": u.tolist(), "w": w.tolist(),
                       "shift_u": shift_u.tolist(), "shift_w": shift_w.tolist(),
                       "lhs": lhs, "rhs": rhs}
    return Certificate(
        kind="preservation",
        target="section",
        instance={"model": m.config(), "subspace": Q.Y.to_doc()},
        seed=int(seed),
        n_pairs=int(n_pairs),
        tol=float(tol),
        max_residual=max_residual,
        witness=witness,
        no_violation=max_residual <= tol,
    )


def complementary_coordinate_slice(Y: SubspaceBasis) -> tuple[int, ...]:
    """Coordinate indices whose span best complements the subspace (max |det|)."""
    dim, k = Y.ambient.dim, Y.k
    best, best_det = None, 0.0
    for idx in combinations(range(dim), dim - k):
        E = np.zeros((dim, dim - k))
        for col, i in enumerate(idx):
            E[i, col] = 1.0
        det = abs(np.linalg.det(np.column_stack([Y.matrix, E])))
        if det > best_det:
            best, best_det = idx, det
    if best is None or best_det < 1e-12:
        raise ConfigError("no coordinate slice complements the subspace")
    return best


class QuotientCoordNorm(NormModel):
    """Coordinate view of a quotient: the slice coordinates parametrise cosets.

    norm(c) = dist(G c, Y) with G the slice embedding; the supporting
    functional at b is the ambient functional of the section pulled back
    through G. Values come from the solver and are memoised per direction
    (the norm is absolutely homogeneous, so one solve covers the whole ray).
    """

    def __init__(self, ambient: NormModel, Y: SubspaceBasis, slice_idx=None,
                 solver_tol: float = DEFAULT_SOLVER_TOL):
        if not (ambient.smooth and ambient.strictly_convex):
            raise UnsupportedModelError("quotient coordinates need a smooth, strictly convex ambient")
        self.ambient = ambient
        self.Y = Y
        self.quotient = QuotientSpace(ambient, Y)
        self.slice_idx = tuple(int(i) for i in (slice_idx if slice_idx is not None
                                                else complementary_coordinate_slice(Y)))
        if len(self.slice_idx) != ambient.dim - Y.k:
            raise ConfigError("slice must have dim(ambient) - dim(Y) coordinates")
        self.solver_tol = float(solver_tol)
        G = np.zeros((ambient.dim, len(self.slice_idx)))
        for col, i in enumerate(self.slice_idx):
            G[i, col] = 1.0
        self.G = G
        A = np.column_stack([G, Y.matrix])
        if abs(np.linalg.det(A)) < 1e-12:
            raise ConfigError("chosen slice does not complement the subspace")
        self._coords_mat = np.linalg.inv(A)[: len(self.slice_idx)]
        self._section_cache: dict[bytes, np.ndarray] = {}

    dim = property(lambda self: len(self.slice_idx))
    smooth = property(lambda self: True)
    strictly_convex = property(lambda self: self.ambient.strictly_convex)

    def evaluation_path(self) -> str:
        return "quotient-solver"

    def section_of(self, c: np.ndarray) -> np.ndarray:
        """Ambient representative of [G c] inside the orthogonal cone."""
        c = np.asarray(c, dtype=float)
        scale = float(np.linalg.norm(c))
        if scale == 0.0:
            return np.zeros(self.ambient.dim)
        u = c / scale
        key = u.tobytes()
        z = self._section_cache.get(key)
        if z is None:
            rep = self.G @ u
            z = rep - best_approximation(rep, self.Y, tol=self.solver_tol)
            self._section_cache[key] = z
        return scale * z

    def coords_of(self, z: np.ndarray) -> np.ndarray:
        """Slice coordinates of the coset [z]."""
        return self._coords_mat @ as_vector(z, self.ambient.dim)

    def _norm(self, x: np.ndarray) -> float:
        return self.ambient._norm(self.section_of(x))

    def _support(self, y: np.ndarray) -> np.ndarray:
        z = self.section_of(y)
        return self.ambient._support(z)[list(self.slice_idx)]

    def config(self) -> dict:
        return {
            "kind": "quotient_coord",
            "ambient": self.ambient.config(),
            "subspace": self.Y.to_doc(),
            "slice": list(self.slice_idx),
            "solver_tol": self.solver_tol,
        }

    @staticmethod
    def from_config(doc: dict) -> "QuotientCoordNorm":
        ambient = model_from_config(doc["ambient"])
        Y = SubspaceBasis(tuple(np.asarray(v, dtype=float) for v in doc["subspace"]), ambient)
        return QuotientCoordNorm(
            ambient, Y,
            slice_idx=doc.get("slice"),
            solver_tol=float(doc.get("solver_tol", DEFAULT_SOLVER_TOL)),
        )
