"""Cellular sheaves on undirected graphs, cochains and the coboundary operator.

Edges are stored with the canonical orientation ``i < j`` and the coboundary
is ``(dx)_ij = F_{i<ij} x_i - F_{j<ij} x_j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse.linalg import LinearOperator, lsqr

__all__ = [
    "Graph",
    "CellularSheaf",
    "Cochain",
    "Cochain0",
    "Cochain1",
    "Preimage",
    "LayoutError",
    "constant_sheaf",
    "coboundary",
    "coboundary_transpose",
    "is_global_section",
    "assemble_coboundary_matrix",
    "min_norm_preimage",
]


class LayoutError(ValueError):
    """A cochain's block layout does not match the sheaf it is used with."""


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on nodes ``0..node_count-1``."""

    node_count: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.node_count < 1:
            raise ValueError("node_count must be positive")
        canon = []
        seen = set()
        for e in self.edges:
            i, j = (int(v) for v in e)
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            if not (0 <= i < self.node_count and 0 <= j < self.node_count):
                raise ValueError(f"edge {(i, j)} references a missing node")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
            canon.append(key)
        object.__setattr__(self, "edges", tuple(canon))

    @classmethod
    def complete(cls, n: int) -> Graph:
        return cls(n, tuple((i, j) for i in range(n) for j in range(i + 1, n)))

    @classmethod
    def path(cls, n: int) -> Graph:
        return cls(n, tuple((i, i + 1) for i in range(n - 1)))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @cached_property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        nbrs: list[list[int]] = [[] for _ in range(self.node_count)]
        for i, j in self.edges:
            nbrs[i].append(j)
            nbrs[j].append(i)
        return tuple(tuple(sorted(n)) for n in nbrs)

    @cached_property
    def edge_index(self) -> dict[tuple[int, int], int]:
        return {e: k for k, e in enumerate(self.edges)}

    def find_edge(self, i: int, j: int) -> int:
        return self.edge_index[(min(i, j), max(i, j))]

    def incident_edges(self, i: int) -> list[int]:
        return [self.find_edge(i, j) for j in self.neighbors[i]]


def _as_map(m, rows: int) -> np.ndarray:
    m = np.array(m, dtype=float)
    if m.size == 0:
        return np.zeros((rows, 0))
    return m.reshape(rows, -1)


def _offsets(dims: Sequence[int]) -> np.ndarray:
    return np.concatenate([[0], np.cumsum(dims, dtype=int)])


@dataclass(frozen=True, eq=False)
class Cochain:
    """Block vector: one real block per cell, stored contiguously.

    The flat array is read-only; arithmetic returns new cochains.
    """

    data: np.ndarray
    dims: tuple[int, ...]
    degree: int = field(default=0)

    def __post_init__(self):
        arr = np.array(self.data, dtype=float).ravel()
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if arr.size != sum(self.dims):
            raise LayoutError(f"flat length {arr.size} != total dimension {sum(self.dims)}")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_blocks(cls, blocks: Iterable, degree: int = 0) -> Cochain:
        blocks = [np.atleast_1d(np.asarray(b, dtype=float)).ravel() for b in blocks]
        dims = tuple(b.size for b in blocks)
        flat = np.concatenate(blocks) if blocks else np.zeros(0)
        return cls._make(flat, dims, degree)

    @classmethod
    def _make(cls, flat, dims, degree):
        if degree == 0:
            return Cochain0(flat, dims)
        return Cochain1(flat, dims)

    @cached_property
    def offsets(self) -> np.ndarray:
        return _offsets(self.dims)

    def block(self, k: int) -> np.ndarray:
        o = self.offsets
        return self.data[o[k] : o[k + 1]]

    def blocks(self) -> list[np.ndarray]:
        return [self.block(k) for k in range(len(self.dims))]

    def __len__(self):
        return len(self.dims)

    def _check(self, other: Cochain):
        if not isinstance(other, Cochain) or other.dims != self.dims or other.degree != self.degree:
            raise LayoutError("cochain layouts differ")

    def _new(self, flat):
        return self._make(flat, self.dims, self.degree)

    def __add__(self, other):
        self._check(other)
        return self._new(self.data + other.data)

    def __sub__(self, other):
        self._check(other)
        return self._new(self.data - other.data)

    def __neg__(self):
        return self._new(-self.data)

    def __mul__(self, s):
        return self._new(float(s) * self.data)

    __rmul__ = __mul__

    def dot(self, other: Cochain) -> float:
        """Sum of blockwise dot products."""
        self._check(other)
        return float(self.data @ other.data)

    def norm(self, ord=2) -> float:
        return float(np.linalg.norm(self.data, ord)) if self.data.size else 0.0

    def max_block_norm(self) -> float:
        return max((float(np.linalg.norm(b)) for b in self.blocks()), default=0.0)

    def __repr__(self):
        kind = type(self).__name__
        return f"{kind}({[b.tolist() for b in self.blocks()]})"


class Cochain0(Cochain):
    def __init__(self, data, dims):
        super().__init__(data, dims, 0)


class Cochain1(Cochain):
    def __init__(self, data, dims):
        super().__init__(data, dims, 1)


@dataclass(frozen=True, eq=False)
class CellularSheaf:
    """Sheaf of real vector spaces over a graph.

    ``restrictions[e]`` is the pair ``(F_{i<e}, F_{j<e})`` for the canonical
    edge ``e = (i, j)``, each of shape ``edge_dims[e] x node_dims[endpoint]``.
    Node stalks may be zero-dimensional.
    """

    graph: Graph
    node_dims: tuple[int, ...]
    edge_dims: tuple[int, ...]
    restrictions: tuple[tuple[np.ndarray, np.ndarray], ...]

    def __post_init__(self):
        g = self.graph
        nd = tuple(int(d) for d in self.node_dims)
        ed = tuple(int(d) for d in self.edge_dims)
        if len(nd) != g.node_count:
            raise ValueError("one node stalk dimension per node required")
        if len(ed) != g.edge_count or len(self.restrictions) != g.edge_count:
            raise ValueError("one edge stalk and one restriction pair per edge required")
        if any(d < 0 for d in nd) or any(d < 1 for d in ed):
            raise ValueError("node stalk dims must be >= 0 and edge stalk dims >= 1")
        maps = []
        for k, ((i, j), pair) in enumerate(zip(g.edges, self.restrictions)):
            if len(pair) != 2:
                raise ValueError(f"edge {k} needs exactly two restriction maps")
            Fi, Fj = (_as_map(m, ed[k]) for m in pair)
            if Fi.shape != (ed[k], nd[i]) or Fj.shape != (ed[k], nd[j]):
                raise ValueError(
                    f"edge {(i, j)}: restriction shapes {Fi.shape}, {Fj.shape} do not conform "
                    f"to edge dim {ed[k]} and node dims {nd[i]}, {nd[j]}"
                )
            Fi.flags.writeable = False
            Fj.flags.writeable = False
            maps.append((Fi, Fj))
        object.__setattr__(self, "node_dims", nd)
        object.__setattr__(self, "edge_dims", ed)
        object.__setattr__(self, "restrictions", tuple(maps))

    @property
    def dim0(self) -> int:
        return sum(self.node_dims)

    @property
    def dim1(self) -> int:
        return sum(self.edge_dims)

    def restriction(self, node: int, edge: int) -> np.ndarray:
        i, j = self.graph.edges[edge]
        if node == i:
            return self.restrictions[edge][0]
        if node == j:
            return self.restrictions[edge][1]
        raise ValueError(f"node {node} is not incident to edge {edge}")

    def zeros0(self) -> Cochain0:
        return Cochain0(np.zeros(self.dim0), self.node_dims)

    def zeros1(self) -> Cochain1:
        return Cochain1(np.zeros(self.dim1), self.edge_dims)

    def cochain0(self, blocks) -> Cochain0:
        x = Cochain.from_blocks(blocks, 0)
        self.check0(x)
        return x

    def cochain1(self, blocks) -> Cochain1:
        y = Cochain.from_blocks(blocks, 1)
        self.check1(y)
        return y

    def unflatten0(self, flat) -> Cochain0:
        return Cochain0(flat, self.node_dims)

    def unflatten1(self, flat) -> Cochain1:
        return Cochain1(flat, self.edge_dims)

    def check0(self, x: Cochain):
        if not isinstance(x, Cochain) or x.degree != 0 or x.dims != self.node_dims:
            raise LayoutError(f"expected 0-cochain with node dims {self.node_dims}")

    def check1(self, y: Cochain):
        if not isinstance(y, Cochain) or y.degree != 1 or y.dims != self.edge_dims:
            raise LayoutError(f"expected 1-cochain with edge dims {self.edge_dims}")

    def random_cochain0(self, rng: np.random.Generator) -> Cochain0:
        return self.unflatten0(rng.standard_normal(self.dim0))

    def random_cochain1(self, rng: np.random.Generator) -> Cochain1:
        return self.unflatten1(rng.standard_normal(self.dim1))

    @cached_property
    def coboundary_matrix(self) -> np.ndarray:
        return assemble_coboundary_matrix(self)


def constant_sheaf(graph: Graph, k: int) -> CellularSheaf:
    """The sheaf with every stalk ``R^k`` and every restriction the identity."""
    if int(k) < 1:
        raise ValueError("constant sheaf needs k >= 1")
    eye = np.eye(k)
    return CellularSheaf(
        graph,
        (k,) * graph.node_count,
        (k,) * graph.edge_count,
        tuple((eye, eye) for _ in graph.edges),
    )


def coboundary(sheaf: CellularSheaf, x: Cochain0) -> Cochain1:
    sheaf.check0(x)
    out = np.empty(sheaf.dim1)
    eo = _offsets(sheaf.edge_dims)
    for k, (i, j) in enumerate(sheaf.graph.edges):
        Fi, Fj = sheaf.restrictions[k]
        out[eo[k] : eo[k + 1]] = Fi @ x.block(i) - Fj @ x.block(j)
    return Cochain1(out, sheaf.edge_dims)


def coboundary_transpose(sheaf: CellularSheaf, y: Cochain1) -> Cochain0:
    """Adjoint of :func:`coboundary` under the blockwise inner products."""
    sheaf.check1(y)
    out = np.zeros(sheaf.dim0)
    no = _offsets(sheaf.node_dims)
    for k, (i, j) in enumerate(sheaf.graph.edges):
        Fi, Fj = sheaf.restrictions[k]
        ye = y.block(k)
        out[no[i] : no[i + 1]] += Fi.T @ ye
        out[no[j] : no[j + 1]] -= Fj.T @ ye
    return Cochain0(out, sheaf.node_dims)


def is_global_section(sheaf: CellularSheaf, x: Cochain0, tol: float = 1e-9) -> bool:
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return coboundary(sheaf, x).max_block_norm() <= tol


def assemble_coboundary_matrix(sheaf: CellularSheaf) -> np.ndarray:
    """Dense matrix ``D`` with ``D @ x.data == coboundary(x).data``."""
    D = np.zeros((sheaf.dim1, sheaf.dim0))
    no = _offsets(sheaf.node_dims)
    eo = _offsets(sheaf.edge_dims)
    for k, (i, j) in enumerate(sheaf.graph.edges):
        Fi, Fj = sheaf.restrictions[k]
        D[eo[k] : eo[k + 1], no[i] : no[i + 1]] += Fi
        D[eo[k] : eo[k + 1], no[j] : no[j + 1]] -= Fj
    return D


@dataclass(frozen=True)
class Preimage:
    """Result of :func:`min_norm_preimage`.

    ``in_image`` is False when ``b`` is not reachable, in which case ``x`` is
    the minimum-norm least-squares solution.
    """

    x: Cochain0
    residual: float
    normal_residual: float
    in_image: bool
    converged: bool
    iterations: int


def min_norm_preimage(sheaf: CellularSheaf, b: Cochain1, tol: float = 1e-10) -> Preimage:
    """Minimum-norm least-squares solution of ``dx = b`` by LSQR started at zero."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    sheaf.check1(b)
    if sheaf.dim0 == 0 or not np.any(b.data):
        x = sheaf.zeros0()
        res = b.norm(np.inf)
        return Preimage(x, res, 0.0, res <= tol, True, 0)

    op = LinearOperator(
        (sheaf.dim1, sheaf.dim0),
        matvec=lambda v: coboundary(sheaf, sheaf.unflatten0(v)).data,
        rmatvec=lambda w: coboundary_transpose(sheaf, sheaf.unflatten1(w)).data,
        dtype=float,
    )
    sol = lsqr(op, b.data, atol=1e-15, btol=1e-15, iter_lim=20 * (sheaf.dim0 + sheaf.dim1))
    x = sheaf.unflatten0(sol[0])
    r = coboundary(sheaf, x) - b
    normal = coboundary_transpose(sheaf, r).norm(np.inf)
    res = r.norm(np.inf)
    scale = max(1.0, b.norm(np.inf))
    return Preimage(
        x=x,
        residual=res,
        normal_residual=normal,
        in_image=res <= tol * scale,
        converged=normal <= tol * scale,
        iterations=int(sol[2]),
    )
