"""The unique semi-inner product on a smooth norm model.

``sip_eval(x, y, m)`` is ``||y|| * phi_y(x)`` with ``phi_0`` taken to be the
zero functional, so pairing against the zero vector returns 0 rather than
raising. On sum spaces the value is assembled block-wise: component values
weighted by ``||y_b||^(p-2)`` and the whole sum scaled by ``||y||^(2-p)``.

The pairing is linear in the first slot only; it is *not* symmetric, and the
axioms suite below measures exactly the four defining residuals on seeded
samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import sampling
from .errors import UnsupportedModelError
from .norms import (
    FiniteSupportElement,
    NormModel,
    SumSpace,
    as_vector,
    norm_eval,
)

__all__ = ["sip_eval", "sip_sum_eval", "axioms_check", "AxiomsReport"]


def sip_eval(x, y, m) -> float:
    """Semi-inner product [x|y] on model m. Returns 0 when y = 0."""
    if isinstance(m, SumSpace):
        return sip_sum_eval(x, y, m)
    if not m.smooth:
        raise UnsupportedModelError("the semi-inner product is unique only on smooth models")
    x = as_vector(x, m.dim)
    y = as_vector(y, m.dim)
    ny = m.norm(y)
    if ny == 0.0:
        return 0.0
    return ny * float(np.dot(m.support(y), x))


def sip_sum_eval(x: FiniteSupportElement, y: FiniteSupportElement, ss: SumSpace) -> float:
    """Block-weighted semi-inner product on a p-sum space.

    Blocks where y vanishes contribute nothing (zero-functional convention),
    so the sum runs over the support of y intersected with the support of x.
    """
    if not isinstance(ss, SumSpace):
        raise UnsupportedModelError(f"expected a SumSpace, got {type(ss).__name__}")
    if not ss.smooth:
        raise UnsupportedModelError("the semi-inner product is unique only on smooth models")
    ss.validate(x)
    ss.validate(y)
    ny = ss.norm(y)
    if ny == 0.0:
        return 0.0
    acc = 0.0
    for (s, i), yb in y.entries.items():
        xb = x.entries.get((s, i))
        if xb is None:
            continue
        comp = ss.component(s)
        nyb = comp.norm(yb)
        acc += nyb ** (ss.p - 2.0) * sip_eval(xb, yb, comp)
    return ny ** (2.0 - ss.p) * acc


def _elem_doc(v):
    if isinstance(v, FiniteSupportElement):
        return v.to_doc()
    return np.asarray(v, dtype=float).tolist()


@dataclass
class AxiomsReport:
    """Worst-case residuals for the four defining properties of the pairing."""

    model: dict
    n_samples: int
    seed: int
    tol: float
    path: str
    axioms: dict = field(default_factory=dict)
    generator: str = sampling.GENERATOR_NAME

    @property
    def passed(self) -> bool:
        return all(a["worst_residual"] <= self.tol for a in self.axioms.values())

    @property
    def worst_residual(self) -> float:
        return max(a["worst_residual"] for a in self.axioms.values())

    def to_doc(self) -> dict:
        return {
            "model": self.model,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "tol": self.tol,
            "path": self.path,
            "generator": self.generator,
            "axioms": self.axioms,
            "passed": self.passed,
        }


def axioms_check(m, n_samples: int, seed: int, tol: float = 1e-6) -> AxiomsReport:
    """Measure the worst residual of each pairing axiom over seeded samples.

    Residuals are scale-normalised; failures are reported, never raised.
    Deterministic given (seed, n_samples).
    """
    if not m.smooth:
        raise UnsupportedModelError("axioms are stated for smooth models only")
    rng = sampling.rng_from_seed(seed)
    worst = {
        "sip1_first_slot_linearity": (0.0, None),
        "sip2_second_slot_homogeneity": (0.0, None),
        "sip3_cauchy_schwarz": (0.0, None),
        "sip4_norm_compatibility": (0.0, None),
    }

    def bump(name, r, witness):
        if r > worst[name][0]:
            worst[name] = (r, witness)

    for _ in range(int(n_samples)):
        x = sampling.sample_element(rng, m)
        y = sampling.sample_element(rng, m)
        z = sampling.sample_element(rng, m)
        alpha = sampling.sample_scalar(rng)
        beta = sampling.sample_scalar(rng)
        lam = sampling.sample_scalar(rng)

        nx, ny = norm_eval(x, m), norm_eval(y, m)

        combo = alpha * x + beta * y
        r1 = abs(
            sip_eval(combo, z, m) - alpha * sip_eval(x, z, m) - beta * sip_eval(y, z, m)
        ) / (1.0 + (abs(alpha) * nx + abs(beta) * ny) * norm_eval(z, m))
        bump("sip1_first_slot_linearity", r1, {"alpha": alpha, "beta": beta,
                                               "x": _elem_doc(x), "y": _elem_doc(y), "z": _elem_doc(z)})

        r2 = abs(sip_eval(x, lam * y, m) - lam * sip_eval(x, y, m)) / (1.0 + abs(lam) * nx * ny)
        bump("sip2_second_slot_homogeneity", r2, {"lambda": lam, "x": _elem_doc(x), "y": _elem_doc(y)})

        r3 = max(0.0, abs(sip_eval(x, y, m)) - nx * ny) / max(nx * ny, 1e-300)
        bump("sip3_cauchy_schwarz", r3, {"x": _elem_doc(x), "y": _elem_doc(y)})

        r4 = abs(sip_eval(x, x, m) - nx * nx) / (1.0 + nx * nx)
        bump("sip4_norm_compatibility", r4, {"x": _elem_doc(x)})

    path = m.evaluation_path()
    report = AxiomsReport(
        model=m.config(),
        n_samples=int(n_samples),
        seed=int(seed),
        tol=float(tol),
        path=path,
    )
    report.axioms = {
        name: {"worst_residual": r, "witness": w} for name, (r, w) in worst.items()
    }
    return report
