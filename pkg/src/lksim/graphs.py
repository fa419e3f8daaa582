"""Intra-force and engagement networks.

Every public interface speaks 1-based node labels (files, logs, the
``edges_1based`` view); arrays inside the package are 0-based.

Adjacency-list files hold one undirected edge ``i j`` per line.  Lines
starting with ``#`` are comments; a comment of the form ``# nodes: N``
declares the node count, which is how isolated trailing nodes are expressed.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse.csgraph import connected_components

MAX_NODES = 1_000_000
ER_MAX_RETRIES = 100


class GraphError(ValueError):
    """Invalid graph construction or graph file."""


class GraphParseError(GraphError):
    def __init__(self, path, lineno: int, message: str):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = path
        self.lineno = lineno


class SelfLoopError(GraphError):
    pass


class AsymmetryError(GraphError):
    pass


class ConnectivityError(GraphError):
    pass


@dataclass(frozen=True, eq=False)
class ForceGraph:
    """Undirected simple graph on ``n`` nodes.

    ``edges`` is an ``(m, 2)`` int array of 0-based pairs with ``i < j``,
    sorted lexicographically, so two graphs with the same edge set compare
    equal field by field.
    """

    n: int
    edges: np.ndarray
    name: str = ""
    _adjacency: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if self.n < 0:
            raise GraphError("node count must be non-negative")
        if edges.size and (edges.min() < 0 or edges.max() >= self.n):
            raise GraphError("edge references a node outside 1..n")
        if np.any(edges[:, 0] == edges[:, 1]):
            bad = edges[edges[:, 0] == edges[:, 1]][0, 0] + 1
            raise SelfLoopError(f"self-loop on node {bad}")
        edges = np.sort(edges, axis=1)
        edges = np.unique(edges, axis=0) if edges.size else edges
        edges.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        adj = np.zeros((self.n, self.n))
        adj[edges[:, 0], edges[:, 1]] = 1.0
        adj[edges[:, 1], edges[:, 0]] = 1.0
        adj.setflags(write=False)
        object.__setattr__(self, "_adjacency", adj)

    @classmethod
    def from_adjacency(cls, matrix, name: str = "") -> "ForceGraph":
        a = np.asarray(matrix)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise GraphError("adjacency must be square")
        if np.any(np.diag(a) != 0):
            raise SelfLoopError(f"self-loop on node {int(np.flatnonzero(np.diag(a))[0]) + 1}")
        if not np.array_equal(a, a.T):
            i, j = np.argwhere(a != a.T)[0]
            raise AsymmetryError(f"adjacency not symmetric at ({i + 1}, {j + 1})")
        if not np.all((a == 0) | (a == 1)):
            raise GraphError("adjacency entries must be 0 or 1")
        i, j = np.nonzero(np.triu(a))
        return cls(a.shape[0], np.column_stack([i, j]), name)

    @property
    def adjacency(self) -> np.ndarray:
        return self._adjacency

    @property
    def degrees(self) -> np.ndarray:
        return self._adjacency.sum(axis=1)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def edges_1based(self) -> list[tuple[int, int]]:
        return [(int(i) + 1, int(j) + 1) for i, j in self.edges]

    def laplacian(self) -> np.ndarray:
        return np.diag(self.degrees) - self._adjacency

    def is_connected(self) -> bool:
        if self.n <= 1:
            return True
        n_comp, _ = connected_components(self._adjacency, directed=False)
        return n_comp == 1

    def directed_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """Both orientations of every edge, ordered by (target, source).

        Returns ``(dst, src)`` so that node ``dst[k]`` is coupled to
        ``src[k]``.  The ordering depends only on the edge set, which keeps
        floating-point sums identical across relabelled but isomorphic runs.
        """
        both = np.vstack([self.edges, self.edges[:, ::-1]])
        order = np.lexsort((both[:, 1], both[:, 0]))
        both = both[order]
        return both[:, 0].copy(), both[:, 1].copy()

    def __eq__(self, other):
        if not isinstance(other, ForceGraph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.edges, other.edges)

    def __hash__(self):
        return hash((self.n, self.edges.tobytes()))


@dataclass(frozen=True, eq=False)
class EngagementMap:
    """Undirected Blue-Red engagement edges, stored 0-based."""

    n_blue: int
    n_red: int
    pairs: np.ndarray

    def __post_init__(self):
        pairs = np.asarray(self.pairs, dtype=np.int64).reshape(-1, 2)
        if pairs.size:
            if pairs[:, 0].min() < 0 or pairs[:, 0].max() >= self.n_blue:
                raise GraphError("engagement references a Blue node out of range")
            if pairs[:, 1].min() < 0 or pairs[:, 1].max() >= self.n_red:
                raise GraphError("engagement references a Red node out of range")
            pairs = np.unique(pairs, axis=0)
        pairs.setflags(write=False)
        object.__setattr__(self, "pairs", pairs)

    @classmethod
    def identity(cls, n_blue: int, n_red: int, nodes) -> "EngagementMap":
        """Pair each 1-based label in ``nodes`` with the same-label opponent."""
        idx = np.asarray(list(nodes), dtype=np.int64) - 1
        return cls(n_blue, n_red, np.column_stack([idx, idx]))

    @property
    def matrix(self) -> np.ndarray:
        """``A^BR`` as an ``(n_blue, n_red)`` 0/1 matrix; ``A^RB`` is its transpose."""
        a = np.zeros((self.n_blue, self.n_red))
        a[self.pairs[:, 0], self.pairs[:, 1]] = 1.0
        return a

    @property
    def d_T_BR(self) -> int:
        return len(self.pairs)

    @property
    def d_T_RB(self) -> int:
        return len(self.pairs)

    @property
    def d_i_BR(self) -> np.ndarray:
        return np.bincount(self.pairs[:, 0], minlength=self.n_blue)

    @property
    def d_i_RB(self) -> np.ndarray:
        return np.bincount(self.pairs[:, 1], minlength=self.n_red)

    @property
    def pairs_1based(self) -> list[tuple[int, int]]:
        return [(int(b) + 1, int(r) + 1) for b, r in self.pairs]

    def __eq__(self, other):
        if not isinstance(other, EngagementMap):
            return NotImplemented
        return (self.n_blue, self.n_red) == (other.n_blue, other.n_red) and \
            np.array_equal(self.pairs, other.pairs)

    def __hash__(self):
        return hash((self.n_blue, self.n_red, self.pairs.tobytes()))


@dataclass(frozen=True)
class LaplacianSpectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns

    def n_zero(self, tol: float = 1e-8) -> int:
        return int(np.sum(np.abs(self.eigenvalues) < tol))


# -- constructors -------------------------------------------------------------

def build_complete_kary_tree(branching: int, depth: int) -> ForceGraph:
    """Complete ``branching``-ary tree of the given depth, root = node 1.

    Children are numbered breadth first, so the leaves take the highest labels.
    """
    if branching < 1 or depth < 1:
        raise GraphError("branching and depth must be positive")
    if branching == 1:
        n = depth + 1
    else:
        n = (branching ** (depth + 1) - 1) // (branching - 1)
    if n > MAX_NODES:
        raise GraphError(f"tree would have {n} nodes (limit {MAX_NODES})")
    child = np.arange(1, n)
    parent = (child - 1) // branching
    return ForceGraph(n, np.column_stack([parent, child]),
                      name=f"{branching}-ary tree depth {depth}")


def _gnp_edges(n: int, p: float, rng: np.random.Generator) -> np.ndarray:
    i, j = np.triu_indices(n, k=1)
    keep = rng.random(i.size) < p
    return np.column_stack([i[keep], j[keep]])


def build_erdos_renyi(n: int, p: float, seed: int,
                      require_connected: bool = True) -> ForceGraph:
    """G(n, p) graph; resampled with seed+1, seed+2, ... until connected."""
    if not 0.0 <= p <= 1.0:
        raise GraphError("edge probability must lie in [0, 1]")
    if n < 1:
        raise GraphError("need at least one node")
    for attempt in range(ER_MAX_RETRIES):
        rng = np.random.default_rng(seed + attempt)
        g = ForceGraph(n, _gnp_edges(n, p, rng), name=f"G({n},{p}) seed {seed + attempt}")
        if not require_connected or g.is_connected():
            return g
    raise ConnectivityError(
        f"no connected G({n},{p}) within {ER_MAX_RETRIES} seeds from {seed}")


def build_fighting_fish() -> ForceGraph:
    """Ten-node ring with hub node 7 carrying two pendant reserve nodes 11, 12.

    Node 7 sits opposite the engagement nodes 1-3.  The exact drawing this
    is meant to match was not available; treat it as a reconstruction.
    """
    ring = [(k, (k + 1) % 10) for k in range(10)]
    pendants = [(6, 10), (6, 11)]
    return ForceGraph(12, np.array(ring + pendants), name="fighting fish")


def build_empty(n: int) -> ForceGraph:
    return ForceGraph(n, np.zeros((0, 2), dtype=np.int64), name=f"{n} isolated nodes")


def build_transport_network(n: int = 50, mean_degree: float = 4.0, front: int = 5,
                            seed: int = 0) -> ForceGraph:
    """Seeded random geometric graph used as a stand-in transport network.

    Nodes ``1..front`` are placed along the left edge of the unit square (the
    engagement front); the rest are uniform.  Nodes closer than the radius
    giving ``mean_degree`` are joined, then components are stitched together
    through their closest node pairs until the graph is connected.
    """
    rng = np.random.default_rng(seed)
    pos = rng.random((n, 2))
    pos[:front, 0] = 0.0
    pos[:front, 1] = (np.arange(front) + 0.5) / front
    radius = np.sqrt(mean_degree / ((n - 1) * np.pi))
    dist = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
    adj = (dist < radius).astype(float)
    np.fill_diagonal(adj, 0.0)
    while True:
        n_comp, labels = connected_components(adj, directed=False)
        if n_comp == 1:
            break
        mine = np.flatnonzero(labels == labels[0])
        rest = np.flatnonzero(labels != labels[0])
        a, b = np.unravel_index(np.argmin(dist[np.ix_(mine, rest)]), (mine.size, rest.size))
        adj[mine[a], rest[b]] = adj[rest[b], mine[a]] = 1.0
    return ForceGraph.from_adjacency(adj, name=f"transport network n={n} seed {seed}")


# -- files --------------------------------------------------------------------

_NODES_DIRECTIVE = re.compile(r"#\s*nodes\s*:\s*(\d+)\s*$", re.IGNORECASE)


def _read_pairs(path):
    path = Path(path)
    declared = None
    pairs = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = _NODES_DIRECTIVE.match(line)
            if m:
                declared = int(m.group(1))
            continue
        fields = line.split()
        if len(fields) != 2:
            raise GraphParseError(path, lineno, f"expected two node labels, got {line!r}")
        try:
            i, j = int(fields[0]), int(fields[1])
        except ValueError:
            raise GraphParseError(path, lineno, f"non-integer node label in {line!r}") from None
        if i < 1 or j < 1:
            raise GraphParseError(path, lineno, "node labels are 1-based")
        pairs.append((lineno, i, j))
    return declared, pairs


def load_graph(path, n: int | None = None) -> ForceGraph:
    """Read an adjacency-list file; duplicate edges (either orientation) collapse."""
    declared, pairs = _read_pairs(path)
    for lineno, i, j in pairs:
        if i == j:
            raise SelfLoopError(f"{path}:{lineno}: self-loop on node {i}")
    top = max((max(i, j) for _, i, j in pairs), default=0)
    size = n if n is not None else (declared if declared is not None else top)
    if top > size:
        raise GraphError(f"{path}: node {top} exceeds declared size {size}")
    edges = np.array([(i - 1, j - 1) for _, i, j in pairs], dtype=np.int64).reshape(-1, 2)
    return ForceGraph(size, edges, name=Path(path).stem)


def load_engagement(path, n_blue: int, n_red: int) -> EngagementMap:
    """Read an engagement file: ``i j`` pairs Blue node i with Red node j."""
    _, pairs = _read_pairs(path)
    for lineno, i, j in pairs:
        if i > n_blue or j > n_red:
            raise GraphParseError(path, lineno, f"pair ({i}, {j}) outside {n_blue}x{n_red}")
    arr = np.array([(i - 1, j - 1) for _, i, j in pairs], dtype=np.int64).reshape(-1, 2)
    return EngagementMap(n_blue, n_red, arr)


def write_graph(g: ForceGraph, path) -> None:
    lines = [f"# nodes: {g.n}"] + [f"{i} {j}" for i, j in g.edges_1based]
    Path(path).write_text("\n".join(lines) + "\n")


def write_engagement(e: EngagementMap, path) -> None:
    lines = [f"# blue: {e.n_blue} red: {e.n_red}"] + [f"{b} {r}" for b, r in e.pairs_1based]
    Path(path).write_text("\n".join(lines) + "\n")


# -- spectra ------------------------------------------------------------------

def laplacian_spectrum(g: ForceGraph, tol: float = 1e-8) -> LaplacianSpectrum:
    if g.n < 1:
        raise GraphError("spectrum of an empty graph")
    lap = g.laplacian()
    try:
        vals, vecs = np.linalg.eigh(lap)
    except np.linalg.LinAlgError as exc:
        raise GraphError(f"eigen-decomposition failed: {exc}") from exc
    residual = np.abs(lap @ vecs - vecs * vals).max()
    ortho = np.abs(vecs.T @ vecs - np.eye(g.n)).max()
    if residual > tol or ortho > tol:
        raise GraphError(f"eigen-solver inaccurate (residual {residual:.2e}, "
                         f"orthogonality {ortho:.2e})")
    vals = np.where(np.abs(vals) < 1e-12, 0.0, vals)
    return LaplacianSpectrum(vals, vecs)
