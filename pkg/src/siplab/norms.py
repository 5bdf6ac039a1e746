"""Norm models on finite-coordinate real spaces.

Three families are provided, all smooth and strictly convex:

* ``LpNorm``      -- the p-norm on R^dim, 1 < p < inf;
* ``BlockNorm``   -- an outer p-sum of component models on a partition of the
  coordinates (the classic mixed norm when the components are LpNorms);
* ``SumSpace``    -- a p-sum of countably many component blocks, organised in
  streams; its elements are ``FiniteSupportElement`` values.

Every flat model exposes ``support(y)``: the coefficient vector of the unique
norm-one functional attaining its norm at ``y`` (the gradient of the norm).
``finite_difference_gradient`` is the independent cross-check for it and must
stay free of any closed-form knowledge.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    ConfigError,
    DimensionMismatch,
    LayoutError,
    UnsupportedModelError,
    ZeroVectorError,
)

__all__ = [
    "NormModel",
    "LpNorm",
    "BlockNorm",
    "SumStream",
    "SumSpace",
    "FiniteSupportElement",
    "as_vector",
    "norm_eval",
    "support_functional",
    "finite_difference_gradient",
    "mixed_block",
    "default_mixed_block",
    "model_to_config",
    "model_from_config",
]


def as_vector(x, dim: int | None = None, what: str = "vector") -> np.ndarray:
    """Coerce to a finite 1-D float array, checking the dimension if given."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise ConfigError(f"{what} must be a 1-D sequence of reals, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{what} has non-finite entries")
    if dim is not None and arr.size != dim:
        raise DimensionMismatch(dim, arr.size, what)
    return arr


def _check_exponent(p: float) -> float:
    p = float(p)
    if not (1.0 < p < math.inf):
        raise ConfigError(f"exponent must lie in (1, inf), got {p}")
    return p


def _p_combine(vals: np.ndarray, p: float) -> float:
    """(sum vals_i^p)^(1/p) for vals >= 0, scaled for overflow safety."""
    m = float(vals.max()) if vals.size else 0.0
    if m == 0.0:
        return 0.0
    return m * float(np.sum((vals / m) ** p)) ** (1.0 / p)


def _p_combine_rows(vals: np.ndarray, p: float) -> np.ndarray:
    m = vals.max(axis=1)
    safe = np.where(m > 0.0, m, 1.0)
    out = safe * np.sum((vals / safe[:, None]) ** p, axis=1) ** (1.0 / p)
    return np.where(m > 0.0, out, 0.0)


class NormModel(abc.ABC):
    """A norm on R^dim together with its duality map.

    ``norm``/``support`` validate their input; ``_norm``/``_support`` are the
    raw kernels for hot loops that already hold a checked float vector.
    """

    dim: int
    smooth: bool
    strictly_convex: bool

    def norm(self, x: np.ndarray) -> float:
        """Evaluate the norm. Zero only at the zero vector."""
        return self._norm(as_vector(x, self.dim))

    def norm_batch(self, X: np.ndarray) -> np.ndarray:
        """Row-wise norms of an (n, dim) array."""
        return np.array([self.norm(row) for row in X])

    def support(self, y: np.ndarray) -> np.ndarray:
        """Coefficients of the supporting functional at nonzero y.

        The returned c satisfies <c, y> = ||y|| and has dual norm one.
        """
        return self._support(as_vector(y, self.dim))

    @abc.abstractmethod
    def _norm(self, x: np.ndarray) -> float: ...

    @abc.abstractmethod
    def _support(self, y: np.ndarray) -> np.ndarray: ...

    def support_batch(self, Y: np.ndarray) -> np.ndarray:
        """Row-wise supporting functionals; zero rows map to the zero functional."""
        out = np.zeros_like(np.asarray(Y, dtype=float))
        for i, row in enumerate(Y):
            if self._norm(np.asarray(row, dtype=float)) > 0.0:
                out[i] = self._support(np.asarray(row, dtype=float))
        return out

    @abc.abstractmethod
    def config(self) -> dict:
        """JSON-serialisable description; ``model_from_config`` inverts it."""

    def evaluation_path(self) -> str:
        """How values are produced: 'closed-form' unless a solver is involved."""
        return "closed-form"


@dataclass(frozen=True)
class LpNorm(NormModel):
    p: float
    dim: int

    def __post_init__(self):
        _check_exponent(self.p)
        if int(self.dim) < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "dim", int(self.dim))

    @property
    def smooth(self) -> bool:
        return True

    @property
    def strictly_convex(self) -> bool:
        return True

    def _norm(self, x: np.ndarray) -> float:
        return _p_combine(np.abs(x), self.p)

    def norm_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.dim:
            raise DimensionMismatch(self.dim, X.shape[-1], "batch")
        return _p_combine_rows(np.abs(X), self.p)

    def _support(self, y: np.ndarray) -> np.ndarray:
        n = self._norm(y)
        if n == 0.0:
            raise ZeroVectorError("zero vector has no supporting functional")
        u = np.abs(y) / n
        return np.sign(y) * u ** (self.p - 1.0)

    def support_batch(self, Y: np.ndarray) -> np.ndarray:
        n = self.norm_batch(Y)
        safe = np.where(n > 0.0, n, 1.0)
        out = np.sign(Y) * (np.abs(Y) / safe[:, None]) ** (self.p - 1.0)
        out[n == 0.0] = 0.0
        return out

    def config(self) -> dict:
        return {"kind": "lp", "p": self.p, "dim": self.dim}


@dataclass(frozen=True)
class BlockNorm(NormModel):
    """Outer p-sum of flat component models on consecutive coordinate blocks.

    ``scale`` multiplies the whole norm; it changes no geometry but lets a
    family be pinned against a reference norm (see ``near_lp_family``).
    """

    p: float
    components: tuple[NormModel, ...]
    scale: float = 1.0

    def __post_init__(self):
        _check_exponent(self.p)
        if not self.components:
            raise ConfigError("BlockNorm needs at least one component")
        if not (0.0 < self.scale < math.inf):
            raise ConfigError(f"scale must be positive, got {self.scale}")
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "scale", float(self.scale))

    @property
    def dim(self) -> int:
        cached = self.__dict__.get("_dim")
        if cached is None:
            cached = sum(c.dim for c in self.components)
            object.__setattr__(self, "_dim", cached)
        return cached

    @property
    def smooth(self) -> bool:
        return all(c.smooth for c in self.components)

    @property
    def strictly_convex(self) -> bool:
        return all(c.strictly_convex for c in self.components)

    def _offsets(self) -> tuple[tuple[int, int], ...]:
        cached = self.__dict__.get("_spans")
        if cached is None:
            spans, off = [], 0
            for c in self.components:
                spans.append((off, off + c.dim))
                off += c.dim
            cached = tuple(spans)
            object.__setattr__(self, "_spans", cached)
        return cached

    def blocks_of(self, x: np.ndarray) -> list[np.ndarray]:
        x = as_vector(x, self.dim)
        return [x[a:b] for a, b in self._offsets()]

    def _norm(self, x: np.ndarray) -> float:
        vals = np.array([c._norm(x[a:b]) for c, (a, b) in zip(self.components, self._offsets())])
        return self.scale * _p_combine(vals, self.p)

    def norm_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.dim:
            raise DimensionMismatch(self.dim, X.shape[-1], "batch")
        cols = [c.norm_batch(X[:, a:b]) for c, (a, b) in zip(self.components, self._offsets())]
        return self.scale * _p_combine_rows(np.stack(cols, axis=1), self.p)

    def _support(self, y: np.ndarray) -> np.ndarray:
        spans = self._offsets()
        vals = [c._norm(y[a:b]) for c, (a, b) in zip(self.components, spans)]
        n0 = _p_combine(np.array(vals), self.p)
        if n0 == 0.0:
            raise ZeroVectorError("zero vector has no supporting functional")
        out = np.zeros(self.dim)
        for (a, b), comp, nv in zip(spans, self.components, vals):
            if nv > 0.0:
                # gradient of the outer p-sum composed with the block gradient;
                # blocks at zero contribute zero (the limit for p > 1)
                out[a:b] = self.scale * (nv / n0) ** (self.p - 1.0) * comp._support(y[a:b])
        return out

    def support_batch(self, Y: np.ndarray) -> np.ndarray:
        spans = self._offsets()
        block_norms = np.stack(
            [c.norm_batch(Y[:, a:b]) for c, (a, b) in zip(self.components, spans)], axis=1
        )
        n0 = _p_combine_rows(block_norms, self.p)
        safe = np.where(n0 > 0.0, n0, 1.0)
        out = np.zeros_like(Y, dtype=float)
        for j, ((a, b), comp) in enumerate(zip(spans, self.components)):
            w = (block_norms[:, j] / safe) ** (self.p - 1.0)
            out[:, a:b] = self.scale * w[:, None] * comp.support_batch(Y[:, a:b])
        out[n0 == 0.0] = 0.0
        return out

    def config(self) -> dict:
        if all(isinstance(c, LpNorm) for c in self.components):
            doc = {
                "kind": "mixed_block",
                "p": self.p,
                "blocks": [{"size": c.dim, "q": c.p} for c in self.components],
            }
        else:
            doc = {
                "kind": "block_sum",
                "p": self.p,
                "components": [c.config() for c in self.components],
            }
        if self.scale != 1.0:
            doc["scale"] = self.scale
        return doc

    def evaluation_path(self) -> str:
        paths = {c.evaluation_path() for c in self.components}
        return "closed-form" if paths == {"closed-form"} else "quotient-solver"


def mixed_block(p: float, blocks: Iterable[tuple[int, float]], scale: float = 1.0) -> BlockNorm:
    """Mixed norm: outer p-sum of inner q-norms over the given block sizes."""
    comps = tuple(LpNorm(q, size) for size, q in blocks)
    return BlockNorm(p, comps, scale)


def default_mixed_block() -> BlockNorm:
    """3-dim smooth, strictly convex, non-Euclidean default: outer 4, blocks (1)+(2)."""
    return mixed_block(4.0, [(1, 2.0), (2, 2.0)])


class FiniteSupportElement:
    """Element of a SumSpace with finitely many nonzero blocks.

    ``entries`` maps (stream index, block index) to the block's coordinate
    vector. Absent blocks are zero; exact-zero blocks are dropped, so the
    stored support is the true support and no truncation happens anywhere.
    """

    __slots__ = ("entries",)

    def __init__(self, entries: Mapping[tuple[int, int], np.ndarray] | None = None):
        clean: dict[tuple[int, int], np.ndarray] = {}
        for key, val in (entries or {}).items():
            try:
                s, i = int(key[0]), int(key[1])
            except (TypeError, ValueError, IndexError) as exc:
                raise LayoutError(f"block key must be (stream, index), got {key!r}") from exc
            if s < 0 or i < 0:
                raise LayoutError(f"stream/block indices must be >= 0, got {key!r}")
            arr = np.asarray(val, dtype=float)
            if arr.ndim != 1:
                raise LayoutError(f"block {key!r} must be a 1-D vector")
            if not np.all(np.isfinite(arr)):
                raise LayoutError(f"block {key!r} has non-finite entries")
            if arr.size and np.any(arr != 0.0):
                clean[(s, i)] = arr.copy()
        object.__setattr__(self, "entries", {k: clean[k] for k in sorted(clean)})

    @property
    def support(self) -> tuple[tuple[int, int], ...]:
        return tuple(self.entries)

    def is_zero(self) -> bool:
        return not self.entries

    def block(self, stream: int, index: int, dim: int) -> np.ndarray:
        v = self.entries.get((stream, index))
        return np.zeros(dim) if v is None else v

    def _merge(self, other: "FiniteSupportElement", sign: float) -> "FiniteSupportElement":
        out: dict[tuple[int, int], np.ndarray] = {k: v.copy() for k, v in self.entries.items()}
        for k, v in other.entries.items():
            if k in out:
                if out[k].size != v.size:
                    raise LayoutError(f"block {k!r} has inconsistent dims {out[k].size} vs {v.size}")
                out[k] = out[k] + sign * v
            else:
                out[k] = sign * v
        return FiniteSupportElement(out)

    def __add__(self, other):
        if not isinstance(other, FiniteSupportElement):
            return NotImplemented
        return self._merge(other, 1.0)

    def __sub__(self, other):
        if not isinstance(other, FiniteSupportElement):
            return NotImplemented
        return self._merge(other, -1.0)

    def __mul__(self, t):
        if not isinstance(t, (int, float, np.floating)):
            return NotImplemented
        return FiniteSupportElement({k: float(t) * v for k, v in self.entries.items()})

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __eq__(self, other):
        if not isinstance(other, FiniteSupportElement):
            return NotImplemented
        return self.support == other.support and all(
            np.array_equal(self.entries[k], other.entries[k]) for k in self.entries
        )

    def __repr__(self):
        inner = ", ".join(f"{k}: {v.tolist()}" for k, v in self.entries.items())
        return f"FiniteSupportElement({{{inner}}})"

    def to_doc(self) -> list[dict]:
        return [
            {"stream": s, "block": i, "coords": v.tolist()}
            for (s, i), v in self.entries.items()
        ]

    @staticmethod
    def from_doc(doc: Iterable[Mapping]) -> "FiniteSupportElement":
        return FiniteSupportElement(
            {(int(e["stream"]), int(e["block"])): np.asarray(e["coords"], dtype=float) for e in doc}
        )


@dataclass(frozen=True)
class SumStream:
    """One stream of identical component blocks; ``length=None`` means countably many."""

    component: NormModel
    length: int | None = None
    name: str = ""

    def __post_init__(self):
        if self.length is not None and int(self.length) < 1:
            raise ConfigError(f"stream length must be >= 1 or None, got {self.length}")


@dataclass(frozen=True)
class SumSpace:
    """p-sum of the blocks of one or more streams; elements are finitely supported."""

    p: float
    streams: tuple[SumStream, ...]

    def __post_init__(self):
        _check_exponent(self.p)
        if not self.streams:
            raise ConfigError("SumSpace needs at least one stream")
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "streams", tuple(self.streams))

    @property
    def smooth(self) -> bool:
        return all(s.component.smooth for s in self.streams)

    @property
    def strictly_convex(self) -> bool:
        return all(s.component.strictly_convex for s in self.streams)

    def component(self, stream: int) -> NormModel:
        return self.streams[stream].component

    def validate(self, z: FiniteSupportElement) -> FiniteSupportElement:
        if not isinstance(z, FiniteSupportElement):
            raise LayoutError(f"expected a FiniteSupportElement, got {type(z).__name__}")
        for (s, i), v in z.entries.items():
            if s >= len(self.streams):
                raise LayoutError(f"stream {s} out of range (have {len(self.streams)})")
            st = self.streams[s]
            if st.length is not None and i >= st.length:
                raise LayoutError(f"block {(s, i)} beyond stream length {st.length}")
            if v.size != st.component.dim:
                raise LayoutError(
                    f"block {(s, i)} has dim {v.size}, component expects {st.component.dim}"
                )
        return z

    def norm(self, z: FiniteSupportElement) -> float:
        self.validate(z)
        if not z.entries:
            return 0.0
        vals = np.array([self.streams[s].component._norm(v) for (s, _i), v in z.entries.items()])
        return _p_combine(vals, self.p)

    def config(self) -> dict:
        return {
            "kind": "sum_space",
            "p": self.p,
            "streams": [
                {"component": s.component.config(), "length": s.length, "name": s.name}
                for s in self.streams
            ],
        }

    def evaluation_path(self) -> str:
        paths = {s.component.evaluation_path() for s in self.streams}
        inner = "closed-form" if paths == {"closed-form"} else "quotient-solver"
        return f"sum-formula/{inner}"


def norm_eval(x, m) -> float:
    """Norm of x under model m; accepts FiniteSupportElement for SumSpace models."""
    if isinstance(m, SumSpace):
        return m.norm(x)
    return m.norm(as_vector(x, m.dim))


def support_functional(y, m: NormModel) -> np.ndarray:
    """Supporting-functional coefficients at nonzero y (smooth flat models only)."""
    if isinstance(m, SumSpace):
        raise UnsupportedModelError("sum spaces have no flat coefficient functional; use sip_sum_eval")
    if not m.smooth:
        raise UnsupportedModelError("supporting functional requires a smooth model")
    return m.support(as_vector(y, m.dim))


def finite_difference_gradient(y, m: NormModel, h: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of the norm at y; oracle for ``support_functional``."""
    y = as_vector(y, m.dim)
    if float(h) <= 0.0:
        raise ConfigError(f"step h must be positive, got {h}")
    if m.norm(y) == 0.0:
        raise ZeroVectorError("gradient oracle needs a nonzero point")
    h = float(h)
    out = np.empty(m.dim)
    for i in range(m.dim):
        e = np.zeros(m.dim)
        e[i] = h
        out[i] = (m.norm(y + e) - m.norm(y - e)) / (2.0 * h)
    return out


def model_to_config(m) -> dict:
    return m.config()


def model_from_config(doc: Mapping) -> NormModel | SumSpace:
    """Rebuild a model from its config document (round-trip stable)."""
    if not isinstance(doc, Mapping) or "kind" not in doc:
        raise ConfigError(f"norm config must be a mapping with a 'kind', got {doc!r}")
    kind = doc["kind"]
    try:
        if kind == "lp":
            return LpNorm(float(doc["p"]), int(doc["dim"]))
        if kind == "mixed_block":
            blocks = [(int(b["size"]), float(b["q"])) for b in doc["blocks"]]
            return mixed_block(float(doc["p"]), blocks, float(doc.get("scale", 1.0)))
        if kind == "block_sum":
            comps = tuple(model_from_config(c) for c in doc["components"])
            return BlockNorm(float(doc["p"]), comps, float(doc.get("scale", 1.0)))
        if kind == "sum_space":
            streams = tuple(
                SumStream(
                    component=model_from_config(s["component"]),
                    length=None if s.get("length") is None else int(s["length"]),
                    name=str(s.get("name", "")),
                )
                for s in doc["streams"]
            )
            return SumSpace(float(doc["p"]), streams)
        if kind == "quotient_coord":
            from .quotient import QuotientCoordNorm

            return QuotientCoordNorm.from_config(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed norm config for kind {kind!r}: {exc}") from exc
    raise ConfigError(f"unknown norm kind {kind!r}")
