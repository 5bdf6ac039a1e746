"""Replayable numeric evidence objects.

A certificate freezes everything needed to reproduce a verification run:
the model configuration, subspace data, seed, tolerances and the measured
residuals or the explicit witness. Replays recompute and compare; nothing
in a certificate is ever trusted without recomputation.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

from .sampling import GENERATOR_NAME

__all__ = ["Certificate"]


@dataclass
class Certificate:
    kind: str                 # "preservation" or "nonlinearity"
    target: str               # which map/structure was probed
    instance: dict            # model config, subspace direction, etc.
    seed: int | None = None
    n_pairs: int | None = None
    tol: float | None = None
    threshold: float | None = None
    max_residual: float | None = None
    violation_norm: float | None = None
    witness: dict | None = None
    no_violation: bool | None = None
    generator: str = GENERATOR_NAME

    def to_doc(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @staticmethod
    def from_doc(doc: dict) -> "Certificate":
        known = {f for f in Certificate.__dataclass_fields__}
        return Certificate(**{k: v for k, v in doc.items() if k in known})
