"""End-to-end construction of a non-linear pairing-preserving map.

Pipeline: in a 3-dim smooth, strictly convex, non-Euclidean model, sweep unit
directions for a one-dimensional subspace whose orthogonal cone fails to be
closed under addition; coordinatise the quotient by that subspace; assemble a
p-sum space with one stream of quotient blocks and one stream of ambient
blocks; and certify that the stream-shift map

    (w0, w1, ...), (x0, x1, ...)  ->  (w1, w2, ...), (f(w0), x0, x1, ...)

(with f the metric-projection section of the quotient) preserves the pairing
while being visibly non-linear. Both facts are emitted as replayable
certificates. The same pipeline run on a Euclidean model fails loudly at the
search stage: every orthogonal complement there is a subspace.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import sampling
from .certificates import Certificate
from .errors import ConfigError, LayoutError, NoNonlinearComplementError, UnsupportedModelError
from .norms import (
    FiniteSupportElement,
    LpNorm,
    NormModel,
    SumSpace,
    SumStream,
    as_vector,
    default_mixed_block,
    mixed_block,
)
from .ortho import SubspaceBasis, complement_linearity_probe
from .quotient import QuotientCoordNorm
from .sip import sip_sum_eval

__all__ = [
    "W_STREAM",
    "X_STREAM",
    "CounterexampleInstance",
    "search_nonlinear_complement",
    "build_instance",
    "build_f",
    "shift_map_h",
    "certify_h",
    "near_lp_family",
    "fibonacci_sphere",
]

W_STREAM = 0
X_STREAM = 1


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("SIPLAB_THREADS", "1")))
    except ValueError:
        return 1


def fibonacci_sphere(n: int) -> np.ndarray:
    """n near-uniform unit directions on the 2-sphere (deterministic grid)."""
    k = np.arange(int(n), dtype=float)
    z = 1.0 - 2.0 * (k + 0.5) / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    theta = np.pi * (3.0 - np.sqrt(5.0)) * k
    return np.stack([r * np.cos(theta), r * np.sin(theta), z], axis=1)


def _batch_line_projection(m: NormModel, x: np.ndarray, D: np.ndarray, iters: int = 55) -> np.ndarray:
    """For each row d of D, the minimiser t of ||x - t d|| (batched bisection).

    The objective's t-derivative is strictly increasing, so sign bisection on
    a bracket around the Euclidean projection converges unconditionally.
    """
    n = D.shape[0]
    t_e = D @ x
    margin = 4.0 * (float(np.linalg.norm(x)) + 1.0)
    lo = t_e - margin
    hi = t_e + margin

    def deriv(t: np.ndarray) -> np.ndarray:
        W = x[None, :] - t[:, None] * D
        return -np.einsum("ij,ij->i", m.support_batch(W), D)

    # widen any bracket that fails the sign condition (rare)
    for _ in range(8):
        bad_lo = deriv(lo) > 0.0
        bad_hi = deriv(hi) < 0.0
        if not (bad_lo.any() or bad_hi.any()):
            break
        lo[bad_lo] -= margin
        hi[bad_hi] += margin
        margin *= 2.0

    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        pos = deriv(mid) > 0.0
        hi = np.where(pos, mid, hi)
        lo = np.where(pos, lo, mid)
    return 0.5 * (lo + hi)


def _screen_residuals(m: NormModel, dirs: np.ndarray, xs: list[np.ndarray]) -> np.ndarray:
    """Cheap nonlinearity score per direction: Birkhoff residual of a sum of
    two orthogonal parts against the direction itself."""
    parts = []
    for x in xs:
        t = _batch_line_projection(m, x, dirs)
        parts.append(x[None, :] - t[:, None] * dirs)
    s = parts[0] + parts[1]
    phi = m.support_batch(s)
    num = np.abs(np.einsum("ij,ij->i", phi, dirs))
    den = m.norm_batch(dirs)
    return num / den


def search_nonlinear_complement(
    X3: NormModel,
    n_dirs: int = 10_000,
    seed: int = 0,
    threshold: float = 1e-2,
    probe_pairs: int = 64,
    top_k: int = 12,
    refine_rounds: int = 3,
    refine_candidates: int = 24,
) -> tuple[SubspaceBasis, Certificate]:
    """Find a 1-dim subspace whose orthogonal cone is not closed under addition.

    Sweeps a Fibonacci grid of directions with a vectorised two-sample screen,
    re-probes the leaders, locally refines the best direction with seeded
    perturbations, and certifies the winner with a full probe. Raises
    ``NoNonlinearComplementError`` when nothing exceeds the threshold --
    either the model is (isometrically) Euclidean or the budget is too small.
    Deterministic given the seed; direction ties resolve by grid index.
    """
    if X3.dim != 3:
        raise ConfigError(f"direction sweep expects a 3-dim model, got dim {X3.dim}")
    if not (X3.smooth and X3.strictly_convex):
        raise UnsupportedModelError("sweep needs a smooth, strictly convex model")

    rng = sampling.rng_from_seed(seed)
    xs = [sampling.sample_scaled(rng, 3), sampling.sample_scaled(rng, 3)]
    probe_seed = int(rng.integers(0, 2**62))
    final_seed = int(rng.integers(0, 2**62))

    dirs = fibonacci_sphere(n_dirs)
    workers = worker_count()
    if workers == 1 or n_dirs < 256:
        res = _screen_residuals(X3, dirs, xs)
    else:
        chunks = np.array_split(np.arange(n_dirs), workers)
        res = np.empty(n_dirs)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futs = [(idx, pool.submit(_screen_residuals, X3, dirs[idx], xs)) for idx in chunks]
            for idx, fut in futs:
                res[idx] = fut.result()

    order = np.argsort(-res, kind="stable")
    best_dir = None
    best_residual = -1.0

    def probe(direction: np.ndarray, pairs: int, pseed: int) -> Certificate:
        Y = SubspaceBasis((direction,), X3)
        return complement_linearity_probe(Y, n_pairs=pairs, seed=pseed, tol=1e-8)

    screen_pairs = max(8, probe_pairs // 4)
    for idx in order[: max(1, top_k)]:
        cert = probe(dirs[idx], screen_pairs, probe_seed)
        if cert.max_residual > best_residual:
            best_residual = cert.max_residual
            best_dir = dirs[idx]

    # local refinement around the leader; skipped when the sweep is flat
    # (Euclidean input), where refinement cannot manufacture a witness
    if best_residual > 1e-6:
        for rnd in range(refine_rounds):
            sigma = 0.2 * 0.25**rnd
            for _ in range(refine_candidates):
                cand = best_dir + sigma * rng.standard_normal(3)
                nrm = float(np.linalg.norm(cand))
                if nrm < 1e-9:
                    continue
                cand /= nrm
                cert = probe(cand, screen_pairs, probe_seed)
                if cert.max_residual > best_residual:
                    best_residual = cert.max_residual
                    best_dir = cand

    final = probe(best_dir, probe_pairs, final_seed)
    if final.max_residual < threshold:
        raise NoNonlinearComplementError(final.max_residual, threshold, n_dirs)
    final.threshold = float(threshold)
    return SubspaceBasis((best_dir,), X3), final


class SectionMap:
    """Evaluates the quotient section at slice coordinates: f(c) in the ambient space."""

    def __init__(self, W: QuotientCoordNorm):
        self.W = W

    def __call__(self, c) -> np.ndarray:
        return self.W.section_of(as_vector(c, self.W.dim, "quotient coordinates"))


@dataclass(eq=False)
class CounterexampleInstance:
    ambient: NormModel
    p: float
    Y: SubspaceBasis
    W: QuotientCoordNorm
    Z: SumSpace
    complement_certificate: Certificate
    f: SectionMap

    def config(self) -> dict:
        return {
            "ambient": self.ambient.config(),
            "p": self.p,
            "direction": self.Y.vectors[0].tolist(),
            "slice": list(self.W.slice_idx),
        }


def build_instance(
    X3: NormModel | None = None,
    p: float = 3.0,
    seed: int = 42,
    n_dirs: int = 10_000,
    threshold: float = 1e-2,
    probe_pairs: int = 64,
) -> CounterexampleInstance:
    """Run the search and assemble the two-stream p-sum space and section map."""
    ambient = default_mixed_block() if X3 is None else X3
    Y, cert = search_nonlinear_complement(
        ambient, n_dirs=n_dirs, seed=seed, threshold=threshold, probe_pairs=probe_pairs
    )
    W = QuotientCoordNorm(ambient, Y)
    Z = SumSpace(float(p), (SumStream(W, None, "W"), SumStream(ambient, None, "X")))
    return CounterexampleInstance(
        ambient=ambient, p=float(p), Y=Y, W=W, Z=Z,
        complement_certificate=cert, f=SectionMap(W),
    )


def build_f(instance: CounterexampleInstance) -> SectionMap:
    """The non-linear pairing-preserving map from quotient coordinates into the ambient."""
    return instance.f


def shift_map_h(z: FiniteSupportElement, instance: CounterexampleInstance) -> FiniteSupportElement:
    """Shift the quotient stream left and prepend f(w0) to the ambient stream."""
    Z = instance.Z
    Z.validate(z)
    entries: dict[tuple[int, int], np.ndarray] = {}
    for (s, i), v in z.entries.items():
        if s == W_STREAM:
            if i >= 1:
                entries[(W_STREAM, i - 1)] = v
        elif s == X_STREAM:
            entries[(X_STREAM, i + 1)] = v
        else:
            raise LayoutError(f"unknown stream {s}")
    w0 = z.entries.get((W_STREAM, 0))
    if w0 is not None:
        entries[(X_STREAM, 0)] = instance.f(w0)
    return FiniteSupportElement(entries)


def certify_h(
    instance: CounterexampleInstance,
    n_pairs: int = 1000,
    seed: int = 0,
    tol: float = 1e-6,
) -> tuple[Certificate, Certificate]:
    """Certify pairing preservation of the shift map and exhibit its non-linearity.

    Preservation samples finitely supported pairs and compares pairings before
    and after the map. The non-linearity witness is seeded from the stored
    complement witness placed in the first quotient block, where the map's
    only non-linear ingredient acts.
    """
    Z = instance.Z
    rng = sampling.rng_from_seed(seed)
    max_residual = 0.0
    worst = None
    for _ in range(int(n_pairs)):
        z = sampling.sample_element(rng, Z)
        a = sampling.sample_element(rng, Z)
        lhs = sip_sum_eval(shift_map_h(z, instance), shift_map_h(a, instance), Z)
        rhs = sip_sum_eval(z, a, Z)
        r = abs(lhs - rhs) / (1.0 + Z.norm(z) * Z.norm(a))
        if r > max_residual:
            max_residual = r
            worst = {"z": z.to_doc(), "a": a.to_doc(), "lhs": lhs, "rhs": rhs}

    preservation = Certificate(
        kind="preservation",
        target="shift_map",
        instance=instance.config(),
        seed=int(seed),
        n_pairs=int(n_pairs),
        tol=float(tol),
        max_residual=max_residual,
        witness=worst,
        no_violation=max_residual <= tol,
    )

    cw = instance.complement_certificate.witness
    if cw is None:
        raise ConfigError("instance has no complement witness to seed the non-linearity check")
    u = instance.W.coords_of(np.asarray(cw["z1"], dtype=float))
    w = instance.W.coords_of(np.asarray(cw["z2"], dtype=float))
    zu = FiniteSupportElement({(W_STREAM, 0): u})
    zw = FiniteSupportElement({(W_STREAM, 0): w})
    alpha = beta = 1.0
    combo = shift_map_h(alpha * zu + beta * zw, instance)
    split = alpha * shift_map_h(zu, instance) + beta * shift_map_h(zw, instance)
    violation = Z.norm(combo - split)

    nonlinearity = Certificate(
        kind="nonlinearity",
        target="shift_map",
        instance=instance.config(),
        seed=int(seed),
        violation_norm=violation,
        witness={
            "alpha": alpha,
            "beta": beta,
            "z": zu.to_doc(),
            "a": zw.to_doc(),
        },
        no_violation=False,
    )
    return preservation, nonlinearity


def near_lp_family(p: float = 3.0, epsilon: float = 0.1) -> NormModel:
    """A 3-dim smooth strictly convex model within multiplicative (1+epsilon) of the p-norm.

    Realised by interpolating the inner exponent of a two-block mixed norm
    toward the Euclidean endpoint: the model norm m satisfies
    m(x) <= ||x||_p <= (1+eps_eff) m(x) with eps_eff <= epsilon, and
    eps_eff caps once the inner exponent reaches 2. At epsilon = 0 the p-norm
    itself is returned (and the complement search will then come up empty for
    p = 2, or have nothing non-Euclidean to find only when p = 2).
    """
    p = float(p)
    if not (1.0 < p < np.inf):
        raise ConfigError(f"p must lie in (1, inf), got {p}")
    if epsilon < 0.0:
        raise ConfigError(f"epsilon must be >= 0, got {epsilon}")
    inv_p, inv_target = 1.0 / p, 0.5
    t = float(np.log2(1.0 + epsilon))
    if inv_p > inv_target:  # p < 2: inner exponent grows toward 2
        inv_q = max(inv_p - t, inv_target)
    else:  # p > 2: inner exponent shrinks toward 2
        inv_q = min(inv_p + t, inv_target)
    if inv_q == inv_p:
        return LpNorm(p, 3)
    q = 1.0 / inv_q
    stretch = 2.0 ** abs(inv_q - inv_p)
    scale = 1.0 if p < 2.0 else 1.0 / stretch
    return mixed_block(p, [(1, p), (2, q)], scale=scale)
