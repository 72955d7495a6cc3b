"""Finite graphs and rooted trees.

Vertex subsets are sorted ``int64`` arrays of vertex ids.  Trees are stored as
parent arrays in breadth-first order (root ``0``, parents non-decreasing), so a
ball around the root is a prefix of the id range and the children of a vertex
form a contiguous id block.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .errors import InputError, ResourceError

TREE_HEADER = "pamtree v1"
DEFAULT_ANIMAL_CAP = 10**6


class Graph:
    """Simple undirected graph on ``0..n-1`` stored in CSR form."""

    def __init__(self, n, edges):
        n = int(n)
        if n < 1:
            raise InputError("a graph needs at least one vertex")
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.size and (edges.min() < 0 or edges.max() >= n):
            raise InputError("edge endpoint out of range")
        if np.any(edges[:, 0] == edges[:, 1]):
            raise InputError("self-loops are not allowed")
        lo = np.minimum(edges[:, 0], edges[:, 1])
        hi = np.maximum(edges[:, 0], edges[:, 1])
        key = lo * n + hi
        if np.unique(key).size != key.size:
            raise InputError("duplicate edge")
        self.n = n
        self.edges = np.column_stack([lo, hi])
        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])
        order = np.lexsort((dst, src))
        self.indices = dst[order]
        self.degree = np.bincount(src, minlength=n).astype(np.int64)
        self.indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(self.degree, out=self.indptr[1:])
        self._adjacency = None

    @property
    def n_edges(self):
        return len(self.edges)

    def check_vertex(self, v):
        if not 0 <= int(v) < self.n:
            raise InputError(f"invalid vertex id {v} (graph has {self.n} vertices)")
        return int(v)

    def neighbors(self, v):
        v = self.check_vertex(v)
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def adjacency(self):
        if self._adjacency is None:
            data = np.ones(len(self.indices))
            self._adjacency = sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))
        return self._adjacency

    def laplacian(self):
        """Sparse matrix of ``(Δf)(x) = Σ_{y~x} f(y) - f(x)``."""
        return (self.adjacency() - sp.diags(self.degree.astype(float))).tocsr()

    def induced(self, vertices):
        """Induced subgraph on ``vertices``, relabelled ``0..k-1`` in the given order."""
        vertices = np.asarray(vertices, dtype=np.int64)
        pos = np.full(self.n, -1, dtype=np.int64)
        pos[vertices] = np.arange(len(vertices))
        a, b = pos[self.edges[:, 0]], pos[self.edges[:, 1]]
        keep = (a >= 0) & (b >= 0)
        return Graph(len(vertices), np.column_stack([a[keep], b[keep]]))

    def relabel(self, perm):
        """Graph with vertex ``v`` renamed to ``perm[v]``."""
        perm = np.asarray(perm, dtype=np.int64)
        return Graph(self.n, perm[self.edges])

    @classmethod
    def complete(cls, n):
        i, j = np.triu_indices(n, k=1)
        return cls(n, np.column_stack([i, j]))

    @classmethod
    def path(cls, n):
        return cls(n, np.column_stack([np.arange(n - 1), np.arange(1, n)]))

    @classmethod
    def star(cls, leaves):
        return cls(leaves + 1, np.column_stack([np.zeros(leaves, dtype=np.int64), np.arange(1, leaves + 1)]))

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n}, edges={self.n_edges})"


class RootedTree(Graph):
    """Rooted tree given by a breadth-first parent array (``parent[0] == -1``).

    ``offspring`` records how many children were drawn for each vertex; it is
    ``-1`` on the frontier of a truncated sample, whose true degree is unknown.
    """

    def __init__(self, parent, offspring=None):
        parent = np.asarray(parent, dtype=np.int64)
        n = len(parent)
        if n < 1 or parent[0] != -1:
            raise InputError("vertex 0 must be the root with parent -1")
        if n > 1:
            rest = parent[1:]
            if np.any(rest < 0) or np.any(rest >= np.arange(1, n)):
                raise InputError("every non-root vertex needs a parent with a smaller id")
            if np.any(np.diff(rest) < 0):
                raise InputError("parent array is not in breadth-first order")
        ids = np.arange(1, n, dtype=np.int64)
        super().__init__(n, np.column_stack([parent[1:], ids]))
        self.parent = parent
        self.root = 0
        self.child_start = np.searchsorted(parent, np.arange(n), side="left")
        self.child_stop = np.searchsorted(parent, np.arange(n), side="right")
        # generation boundaries: gen_ptr[k]..gen_ptr[k+1] are the depth-k vertices
        ptr = [0, 1]
        while ptr[-1] < n:
            ptr.append(int(np.searchsorted(parent, ptr[-1], side="left")))
        self.gen_ptr = np.asarray(ptr, dtype=np.int64)
        self.depth = np.repeat(np.arange(len(ptr) - 1), np.diff(self.gen_ptr))
        if offspring is None:
            offspring = self.child_stop - self.child_start
        self.offspring = np.asarray(offspring, dtype=np.int64)

    @property
    def height(self):
        return len(self.gen_ptr) - 2

    def children(self, v):
        v = self.check_vertex(v)
        return np.arange(self.child_start[v], self.child_stop[v])

    def generation_sizes(self):
        """``Z_k`` for ``k = 0..height``."""
        return np.diff(self.gen_ptr)

    def ancestor(self, v, i):
        """``v[-i]``: the vertex ``i`` generations above ``v`` (clamped at the root)."""
        v = self.check_vertex(v)
        for _ in range(i):
            if v == 0:
                break
            v = int(self.parent[v])
        return v

    def __repr__(self):
        return f"RootedTree(n={self.n}, height={self.height})"


def homogeneous_tree(d, depth):
    """Tree where every vertex above ``depth`` has exactly ``d`` children."""
    if d < 1:
        raise InputError("offspring number must be positive")
    sizes = [d**k for k in range(depth + 1)]
    internal = sum(sizes[:-1])
    parent = np.concatenate([[-1], np.repeat(np.arange(internal, dtype=np.int64), d)])
    offspring = np.full(len(parent), d, dtype=np.int64)
    offspring[internal:] = -1
    return RootedTree(parent, offspring)


def _as_subset(graph, vertices):
    vertices = np.unique(np.asarray(vertices, dtype=np.int64))
    if vertices.size and (vertices[0] < 0 or vertices[-1] >= graph.n):
        raise InputError("vertex subset contains invalid ids")
    return vertices


def _gather_neighbors(graph, frontier):
    starts = graph.indptr[frontier]
    counts = graph.indptr[frontier + 1] - starts
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    offsets = np.repeat(starts - (np.cumsum(counts) - counts), counts)
    return graph.indices[offsets + np.arange(total)]


def bfs_distances(graph, sources, max_dist, allowed=None):
    """Graph distance from a vertex set, ``-1`` beyond ``max_dist``.

    ``allowed`` is an optional boolean mask; the search never enters vertices
    outside it.
    """
    dist = np.full(graph.n, -1, dtype=np.int64)
    frontier = _as_subset(graph, sources)
    if allowed is not None:
        frontier = frontier[allowed[frontier]]
    dist[frontier] = 0
    for k in range(1, int(max_dist) + 1):
        if frontier.size == 0:
            break
        nb = _gather_neighbors(graph, frontier)
        nb = nb[dist[nb] < 0]
        if allowed is not None:
            nb = nb[allowed[nb]]
        frontier = np.unique(nb)
        dist[frontier] = k
    return dist


def ball(graph, center, radius):
    """Sorted ids of all vertices within graph distance ``radius`` of ``center``."""
    center = graph.check_vertex(center)
    if radius < 0:
        raise InputError("radius must be non-negative")
    if isinstance(graph, RootedTree) and center == graph.root:
        stop = graph.gen_ptr[min(int(radius) + 1, len(graph.gen_ptr) - 1)]
        return np.arange(stop, dtype=np.int64)
    return np.flatnonzero(bfs_distances(graph, [center], radius) >= 0)


def lower_ball(tree, v, radius):
    """Descendants of ``v`` at most ``radius`` generations below it (``v`` included)."""
    v = tree.check_vertex(v)
    if radius < 0:
        raise InputError("radius must be non-negative")
    out = [np.array([v], dtype=np.int64)]
    lo, hi = v, v + 1
    for _ in range(int(radius)):
        lo, hi = tree.child_start[lo], tree.child_stop[hi - 1]
        if hi <= lo:
            break
        out.append(np.arange(lo, hi, dtype=np.int64))
    return np.concatenate(out)


def quadratic_form(graph, phi, q=None):
    """``<(Δ + q)φ, φ>`` evaluated edge by edge."""
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (graph.n,):
        raise InputError("phi must have one entry per vertex")
    if not np.all(np.isfinite(phi)):
        raise InputError("phi must be finite")
    diff = phi[graph.edges[:, 0]] - phi[graph.edges[:, 1]]
    value = -float(diff @ diff)
    if q is not None:
        value += float(np.asarray(q, dtype=float) @ (phi * phi))
    return value


def components(graph, vertices):
    """Connected components of the subgraph induced by ``vertices`` (sorted, by smallest id)."""
    from scipy.sparse.csgraph import connected_components

    vertices = _as_subset(graph, vertices)
    if vertices.size == 0:
        return []
    sub = graph.adjacency()[vertices][:, vertices]
    k, labels = connected_components(sub, directed=False)
    groups = [vertices[labels == c] for c in range(k)]
    groups.sort(key=lambda g: int(g[0]))
    return groups


def tree_animals(graph, x, n, cap=DEFAULT_ANIMAL_CAP):
    """All connected vertex sets of size ``n + 1`` containing ``x``.

    Built by adding one boundary vertex at a time to the animals of the
    previous size; duplicates are removed with frozensets.  Raises
    :class:`ResourceError` as soon as an intermediate level exceeds ``cap``.
    """
    x = graph.check_vertex(x)
    if n < 0:
        raise InputError("animal size parameter must be non-negative")
    level = {frozenset([x])}
    for size in range(1, int(n) + 1):
        nxt = set()
        for animal in level:
            members = np.fromiter(animal, dtype=np.int64, count=len(animal))
            for b in set(_gather_neighbors(graph, members).tolist()) - animal:
                nxt.add(animal | {b})
            if len(nxt) > cap:
                raise ResourceError(f"more than {cap} tree animals of size {size + 1}")
        level = nxt
    return [np.array(sorted(a), dtype=np.int64) for a in sorted(level, key=sorted)]


class MaxDegree(NamedTuple):
    value: int
    truncated: bool


def max_degree_in_ball(tree, radius):
    """Largest degree in ``B_radius(root)``.

    ``truncated`` is set when the ball reaches vertices whose offspring were
    never drawn, in which case their degrees are lower bounds only.
    """
    members = ball(tree, tree.root, radius)
    truncated = bool(np.any(tree.offspring[members] < 0))
    return MaxDegree(int(tree.degree[members].max()), truncated)


def dumps_tree(tree):
    lines = [f"{TREE_HEADER} n={tree.n} root=0"]
    lines.extend(f"{v} {p}" for v, p in enumerate(tree.parent.tolist()))
    return "\n".join(lines) + "\n"


def loads_tree(text):
    lines = text.splitlines()
    if not lines or not lines[0].startswith(TREE_HEADER):
        raise InputError("missing 'pamtree v1' header")
    fields = dict(tok.split("=", 1) for tok in lines[0][len(TREE_HEADER):].split())
    n = int(fields["n"])
    if fields.get("root", "0") != "0":
        raise InputError("root must be vertex 0")
    # lines starting with '#' after the header carry metadata and are skipped
    body = [ln.split() for ln in lines[1:] if ln.strip() and not ln.startswith("#")]
    if len(body) != n:
        raise InputError(f"header announces {n} vertices, found {len(body)}")
    ids = np.array([int(a) for a, _ in body])
    if not np.array_equal(ids, np.arange(n)):
        raise InputError("vertex lines must list ids 0..n-1 in order")
    return RootedTree(np.array([int(b) for _, b in body], dtype=np.int64))
