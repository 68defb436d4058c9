"""Edge potential functions and their per-edge assignment over a sheaf."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .sheaf import CellularSheaf, Cochain1

__all__ = [
    "KINDS",
    "EdgePotential",
    "SplitPotential",
    "PotentialAssignment",
    "MinimizerUndefined",
    "potential_value",
    "potential_gradient",
    "total_value",
    "total_gradient",
    "minimizer_cochain",
]

KINDS = (
    "quadratic",
    "matrix_weighted",
    "dissensus",
    "displacement",
    "fixed_distance_sq",
    "fixed_distance_norm",
    "zero",
)

_EIG_TOL = 1e-10


class MinimizerUndefined(ValueError):
    """Raised when some edge potential has no unique minimizer."""

    def __init__(self, edges):
        self.edges = tuple(edges)
        super().__init__(f"edges without a unique minimizer: {list(self.edges)}")


@dataclass(frozen=True, eq=False)
class EdgePotential:
    """A potential ``U_e`` on an edge stalk ``R^dim``.

    ``scale`` multiplies value and gradient; it is how weighted variants such
    as ``(1/2)(|y|^2 - r^2)^2`` are expressed.
    """

    kind: str
    dim: int
    A: np.ndarray | None = None
    b: np.ndarray | None = None
    r: float | None = None
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if int(self.dim) < 1:
            raise ValueError("potential dim must be positive")
        object.__setattr__(self, "dim", int(self.dim))
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        if self.kind == "matrix_weighted":
            A = np.array(self.A, dtype=float)
            if A.shape != (self.dim, self.dim):
                raise ValueError(f"matrix_weighted needs a {self.dim}x{self.dim} matrix")
            A.flags.writeable = False
            object.__setattr__(self, "A", A)
        if self.kind == "displacement":
            b = np.array(self.b, dtype=float).ravel()
            if b.shape != (self.dim,):
                raise ValueError(f"displacement target must have length {self.dim}")
            b.flags.writeable = False
            object.__setattr__(self, "b", b)
        if self.kind.startswith("fixed_distance"):
            if self.r is None or self.r <= 0:
                raise ValueError("fixed-distance potentials need a positive radius r")
            object.__setattr__(self, "r", float(self.r))

    # constructors -----------------------------------------------------
    @classmethod
    def quadratic(cls, dim: int) -> EdgePotential:
        return cls("quadratic", dim)

    @classmethod
    def matrix_weighted(cls, A) -> EdgePotential:
        A = np.asarray(A, dtype=float)
        return cls("matrix_weighted", A.shape[0], A=A)

    @classmethod
    def dissensus(cls, dim: int) -> EdgePotential:
        return cls("dissensus", dim)

    @classmethod
    def displacement(cls, b) -> EdgePotential:
        b = np.atleast_1d(np.asarray(b, dtype=float))
        return cls("displacement", b.size, b=b)

    @classmethod
    def fixed_distance_sq(cls, dim: int, r: float, scale: float = 1.0) -> EdgePotential:
        return cls("fixed_distance_sq", dim, r=r, scale=scale)

    @classmethod
    def fixed_distance_norm(cls, dim: int, r: float, scale: float = 1.0) -> EdgePotential:
        return cls("fixed_distance_norm", dim, r=r, scale=scale)

    @classmethod
    def zero(cls, dim: int) -> EdgePotential:
        return cls("zero", dim)

    # metadata ---------------------------------------------------------
    @cached_property
    def _sym_eigs(self) -> np.ndarray:
        return np.linalg.eigvalsh(0.5 * (self.A + self.A.T))

    @property
    def convex(self) -> bool:
        if self.kind == "matrix_weighted":
            return bool(self._sym_eigs.min() >= -_EIG_TOL)
        return self.kind in ("quadratic", "displacement", "zero")

    @property
    def strongly_convex(self) -> bool:
        if self.kind == "matrix_weighted":
            return bool(self._sym_eigs.min() > _EIG_TOL)
        return self.kind in ("quadratic", "displacement")

    @property
    def differentiable(self) -> bool:
        return self.kind != "fixed_distance_norm"

    @property
    def minimizer(self) -> np.ndarray | None:
        """Unique minimizer ``b_e`` for strongly convex kinds, else None."""
        if not self.strongly_convex:
            return None
        if self.kind == "displacement":
            return self.b.copy()
        return np.zeros(self.dim)

    @property
    def lipschitz(self) -> float | None:
        """Global Lipschitz constant of the gradient, None when unbounded."""
        if self.kind in ("quadratic", "displacement", "dissensus"):
            return self.scale
        if self.kind == "zero":
            return 0.0
        if self.kind == "matrix_weighted":
            return 2.0 * self.scale * float(np.abs(self._sym_eigs).max())
        if self.kind == "fixed_distance_norm":
            return None
        return None

    def quadratic_form(self) -> tuple[np.ndarray, np.ndarray] | None:
        """``(H, m)`` with ``U(y) = (1/2)(y-m)^T H (y-m)`` when the kind is quadratic."""
        k, n = self.kind, self.dim
        if k == "quadratic":
            H, m = np.eye(n), np.zeros(n)
        elif k == "matrix_weighted":
            H, m = self.A + self.A.T, np.zeros(n)
        elif k == "dissensus":
            H, m = -np.eye(n), np.zeros(n)
        elif k == "displacement":
            H, m = np.eye(n), self.b.copy()
        elif k == "zero":
            H, m = np.zeros((n, n)), np.zeros(n)
        else:
            return None
        return self.scale * H, m

    # evaluation -------------------------------------------------------
    def _check(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if y.shape != (self.dim,):
            raise ValueError(f"expected vector of length {self.dim}, got shape {y.shape}")
        return y

    def value(self, y) -> float:
        y = self._check(y)
        k = self.kind
        if k == "quadratic":
            v = 0.5 * (y @ y)
        elif k == "matrix_weighted":
            v = y @ self.A @ y
        elif k == "dissensus":
            v = -0.5 * (y @ y)
        elif k == "displacement":
            d = y - self.b
            v = 0.5 * (d @ d)
        elif k == "fixed_distance_sq":
            v = (y @ y - self.r**2) ** 2
        elif k == "fixed_distance_norm":
            v = 0.5 * (np.sqrt(y @ y) - self.r) ** 2
        else:
            v = 0.0
        return float(self.scale * v)

    def subgradient(self, y) -> tuple[np.ndarray, bool]:
        """Gradient and whether the potential is differentiable at ``y``.

        At the kink of ``fixed_distance_norm`` (``y = 0``) the zero vector is
        returned with the flag False.
        """
        y = self._check(y)
        k = self.kind
        smooth = True
        if k == "quadratic":
            g = y.copy()
        elif k == "matrix_weighted":
            g = (self.A + self.A.T) @ y
        elif k == "dissensus":
            g = -y
        elif k == "displacement":
            g = y - self.b
        elif k == "fixed_distance_sq":
            g = 4.0 * (y @ y - self.r**2) * y
        elif k == "fixed_distance_norm":
            n = np.sqrt(y @ y)
            if n == 0.0:
                g, smooth = np.zeros(self.dim), False
            else:
                g = (1.0 - self.r / n) * y
        else:
            g = np.zeros(self.dim)
        return self.scale * g, smooth

    def gradient(self, y) -> np.ndarray:
        return self.subgradient(y)[0]

    def describe(self) -> dict:
        d = {"kind": self.kind, "dim": self.dim}
        if self.A is not None:
            d["A"] = self.A.tolist()
        if self.b is not None:
            d["b"] = self.b.tolist()
        if self.r is not None:
            d["r"] = self.r
        if self.scale != 1.0:
            d["scale"] = self.scale
        return d


@dataclass(frozen=True, eq=False)
class SplitPotential:
    """Sum of potentials acting on disjoint coordinate groups of one edge stalk.

    Used where one edge carries several goals, e.g. velocity consensus plus a
    fixed distance on positions.
    """

    dim: int
    parts: tuple[tuple[tuple[int, ...], EdgePotential], ...]

    def __post_init__(self):
        seen: set[int] = set()
        parts = []
        for idx, pot in self.parts:
            idx = tuple(int(i) for i in idx)
            if len(idx) != pot.dim:
                raise ValueError("coordinate group size must match part dimension")
            if seen.intersection(idx) or any(not 0 <= i < self.dim for i in idx):
                raise ValueError("coordinate groups must be disjoint and within the stalk")
            seen.update(idx)
            parts.append((idx, pot))
        object.__setattr__(self, "parts", tuple(parts))
        object.__setattr__(self, "_covered", len(seen) == self.dim)

    kind = "split"

    @property
    def convex(self) -> bool:
        return all(p.convex for _, p in self.parts)

    @property
    def strongly_convex(self) -> bool:
        return self._covered and all(p.strongly_convex for _, p in self.parts)

    @property
    def differentiable(self) -> bool:
        return all(p.differentiable for _, p in self.parts)

    @property
    def minimizer(self) -> np.ndarray | None:
        if not self.strongly_convex:
            return None
        out = np.zeros(self.dim)
        for idx, p in self.parts:
            out[list(idx)] = p.minimizer
        return out

    @property
    def lipschitz(self) -> float | None:
        ls = [p.lipschitz for _, p in self.parts]
        if any(v is None for v in ls):
            return None
        return max(ls, default=0.0)

    def quadratic_form(self) -> tuple[np.ndarray, np.ndarray] | None:
        H = np.zeros((self.dim, self.dim))
        m = np.zeros(self.dim)
        for idx, p in self.parts:
            q = p.quadratic_form()
            if q is None:
                return None
            ix = list(idx)
            H[np.ix_(ix, ix)] = q[0]
            m[ix] = q[1]
        return H, m

    def value(self, y) -> float:
        y = np.asarray(y, dtype=float)
        if y.shape != (self.dim,):
            raise ValueError(f"expected vector of length {self.dim}, got shape {y.shape}")
        return float(sum(p.value(y[list(idx)]) for idx, p in self.parts))

    def subgradient(self, y) -> tuple[np.ndarray, bool]:
        y = np.asarray(y, dtype=float)
        if y.shape != (self.dim,):
            raise ValueError(f"expected vector of length {self.dim}, got shape {y.shape}")
        g = np.zeros(self.dim)
        smooth = True
        for idx, p in self.parts:
            gi, si = p.subgradient(y[list(idx)])
            g[list(idx)] = gi
            smooth = smooth and si
        return g, smooth

    def gradient(self, y) -> np.ndarray:
        return self.subgradient(y)[0]

    def describe(self) -> dict:
        return {
            "kind": "split",
            "dim": self.dim,
            "parts": [{"indices": list(i), "potential": p.describe()} for i, p in self.parts],
        }


Potential = EdgePotential | SplitPotential


def potential_value(p: Potential, y) -> float:
    return p.value(y)


def potential_gradient(p: Potential, y) -> np.ndarray:
    return p.gradient(y)


@dataclass(frozen=True, eq=False)
class PotentialAssignment:
    """One potential per edge of ``sheaf``; ``U(y) = sum_e U_e(y_e)``."""

    sheaf: CellularSheaf
    potentials: tuple

    def __post_init__(self):
        pots = tuple(self.potentials)
        if len(pots) != self.sheaf.graph.edge_count:
            raise ValueError("exactly one potential per edge required")
        for k, (p, d) in enumerate(zip(pots, self.sheaf.edge_dims)):
            if p.dim != d:
                raise ValueError(f"edge {k}: potential dim {p.dim} != edge stalk dim {d}")
        object.__setattr__(self, "potentials", pots)

    @classmethod
    def uniform(cls, sheaf: CellularSheaf, factory) -> PotentialAssignment:
        """Apply ``factory(dim)`` on every edge, e.g. ``EdgePotential.quadratic``."""
        return cls(sheaf, tuple(factory(d) for d in sheaf.edge_dims))

    def __getitem__(self, k: int):
        return self.potentials[k]

    def __len__(self):
        return len(self.potentials)

    @property
    def convex(self) -> bool:
        return all(p.convex for p in self.potentials)

    @property
    def strongly_convex(self) -> bool:
        return all(p.strongly_convex for p in self.potentials)

    @property
    def lipschitz(self) -> float | None:
        ls = [p.lipschitz for p in self.potentials]
        if any(v is None for v in ls):
            return None
        return max(ls, default=0.0)


def total_value(pa: PotentialAssignment, y: Cochain1) -> float:
    pa.sheaf.check1(y)
    return float(sum(p.value(y.block(k)) for k, p in enumerate(pa.potentials)))


def total_gradient(pa: PotentialAssignment, y: Cochain1) -> Cochain1:
    pa.sheaf.check1(y)
    if not pa.potentials:
        return pa.sheaf.zeros1()
    return Cochain1(
        np.concatenate([p.gradient(y.block(k)) for k, p in enumerate(pa.potentials)]),
        pa.sheaf.edge_dims,
    )


def minimizer_cochain(pa: PotentialAssignment) -> Cochain1:
    """Stack of the per-edge minimizers ``b_e``.

    Raises :class:`MinimizerUndefined` naming the offending edges when some
    potential is not strongly convex.
    """
    bad = [pa.sheaf.graph.edges[k] for k, p in enumerate(pa.potentials) if p.minimizer is None]
    if bad:
        raise MinimizerUndefined(bad)
    if not pa.potentials:
        return pa.sheaf.zeros1()
    return Cochain1(np.concatenate([p.minimizer for p in pa.potentials]), pa.sheaf.edge_dims)


def split(dim: int, parts: Sequence[tuple[Sequence[int], EdgePotential]]) -> SplitPotential:
    return SplitPotential(dim, tuple((tuple(i), p) for i, p in parts))
