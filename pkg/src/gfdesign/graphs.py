"""Graph representation, seeded generators, and spanning-tree extraction.

Graphs are immutable edge lists with explicit weights. Node indices run from
0 to n-1, self-loops are rejected (diagonal weight belongs to the shift
operator, not the graph), and undirected graphs store each edge once with
i < j.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace
from pathlib import Path

import networkx as nx
import numpy as np

from ._validation import check_positive_int
from .exceptions import ConnectivityError, GenerationError, ParameterError

GENERATOR_MODELS = (
    "erdos-renyi",
    "small-world",
    "scale-free",
    "star",
    "cycle",
    "directed-cycle",
)


@dataclass(frozen=True)
class Graph:
    """Weighted graph as an immutable edge list.

    For a directed edge (i, j, w), information flows from i to j: the
    adjacency matrix gets A[j, i] = w, so one application of A moves the
    signal value at i onto j. Undirected edges are stored once with i < j
    and symmetrized in the adjacency matrix.
    """

    n: int
    edges: tuple = ()
    directed: bool = False

    def __post_init__(self):
        check_positive_int(self.n, "n", minimum=1)
        canonical = []
        seen = set()
        for e in self.edges:
            i, j, w = int(e[0]), int(e[1]), float(e[2])
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ParameterError(f"edge ({i}, {j}) outside node range [0, {self.n})")
            if i == j:
                raise ParameterError(f"self-loop at node {i} is not allowed")
            if not self.directed and i > j:
                i, j = j, i
            if (i, j) in seen:
                raise ParameterError(f"duplicate edge ({i}, {j})")
            seen.add((i, j))
            canonical.append((i, j, w))
        object.__setattr__(self, "edges", tuple(canonical))

    @property
    def n_edges(self):
        return len(self.edges)

    def adjacency(self):
        """Dense adjacency matrix; A[j, i] = w for directed edge (i, j)."""
        A = np.zeros((self.n, self.n))
        for i, j, w in self.edges:
            A[j, i] = w
            if not self.directed:
                A[i, j] = w
        return A

    def neighbor_sets(self):
        """Out-neighbourhoods as sets (symmetric sets when undirected)."""
        nbrs = [set() for _ in range(self.n)]
        for i, j, _ in self.edges:
            nbrs[i].add(j)
            if not self.directed:
                nbrs[j].add(i)
        return nbrs

    def degrees(self):
        """Weighted degree of each node (in+out treated symmetrically)."""
        d = np.zeros(self.n)
        for i, j, w in self.edges:
            d[i] += w
            d[j] += w
        return d

    def is_connected(self):
        """Breadth-first reachability from node 0 (edges treated as undirected)."""
        if self.n == 1:
            return True
        reached = self._bfs_reachable(0)
        return len(reached) == self.n

    def _bfs_reachable(self, root):
        nbrs = [set() for _ in range(self.n)]
        for i, j, _ in self.edges:
            nbrs[i].add(j)
            nbrs[j].add(i)
        seen = {root}
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v in sorted(nbrs[u]):
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return seen


@dataclass(frozen=True)
class GeneratorConfig:
    """Seeded recipe for a graph; equal configs always produce equal graphs.

    model parameters:
      erdos-renyi    p_edge
      small-world    mean_degree, p_rewire   (ring lattice with per-edge rewiring)
      scale-free     m_init, m_attach        (preferential attachment)
      star, cycle, directed-cycle            (no parameters)
    weight_law is "unit" or "uniform"; uniform draws from [weight_lo, weight_hi).
    """

    model: str
    n: int
    seed: int = 0
    p_edge: float = 0.1
    mean_degree: int = 4
    p_rewire: float = 0.2
    m_init: int = 4
    m_attach: int = 2
    weight_law: str = "unit"
    weight_lo: float = 0.5
    weight_hi: float = 1.5
    require_connected: bool = False
    max_retries: int = 1000

    def validate(self):
        if self.model not in GENERATOR_MODELS:
            raise ParameterError(f"unknown graph model {self.model!r}")
        check_positive_int(self.n, "n", minimum=2)
        if self.weight_law not in ("unit", "uniform"):
            raise ParameterError(f"unknown weight_law {self.weight_law!r}")
        if self.model == "erdos-renyi" and not 0.0 <= self.p_edge <= 1.0:
            raise ParameterError("p_edge must be in [0, 1]")
        if self.model == "small-world":
            if not 0.0 <= self.p_rewire <= 1.0:
                raise ParameterError("p_rewire must be in [0, 1]")
            check_positive_int(self.mean_degree, "mean_degree", minimum=2)
            if self.mean_degree >= self.n:
                raise ParameterError("mean_degree must be smaller than n")
        if self.model == "scale-free":
            check_positive_int(self.m_attach, "m_attach", minimum=1)
            check_positive_int(self.m_init, "m_init", minimum=max(2, self.m_attach))
            if self.m_init >= self.n:
                raise ParameterError("m_init must be smaller than n")

    def with_seed(self, seed):
        return replace(self, seed=int(seed))


def _edges_from_nx(G):
    return sorted((min(i, j), max(i, j)) for i, j in G.edges())


def _topology(config, seed):
    n = config.n
    if config.model == "star":
        return [(0, i) for i in range(1, n)], False
    if config.model == "cycle":
        pairs = [(i, i + 1) for i in range(n - 1)]
        if n > 2:
            pairs.append((0, n - 1))
        return sorted(pairs), False
    if config.model == "directed-cycle":
        return [(i, (i + 1) % n) for i in range(n)], True
    if config.model == "erdos-renyi":
        return _edges_from_nx(nx.gnp_random_graph(n, config.p_edge, seed=seed)), False
    if config.model == "small-world":
        return (
            _edges_from_nx(nx.watts_strogatz_graph(n, config.mean_degree, config.p_rewire, seed=seed)),
            False,
        )
    if config.model == "scale-free":
        G = nx.barabasi_albert_graph(
            n, config.m_attach, seed=seed, initial_graph=nx.star_graph(config.m_init - 1)
        )
        return _edges_from_nx(G), False
    raise ParameterError(f"unknown graph model {config.model!r}")


def generate(config: GeneratorConfig) -> Graph:
    """Generate a graph from a seeded config.

    If ``require_connected`` is set, random models are resampled (with fresh
    sub-seeds derived from the config seed) until connected; exceeding
    ``max_retries`` raises GenerationError instead of silently returning a
    disconnected graph.
    """
    config.validate()
    ss = np.random.SeedSequence(config.seed)
    random_model = config.model in ("erdos-renyi", "small-world", "scale-free")
    retries = config.max_retries if (config.require_connected and random_model) else 1
    graph = None
    for child in ss.spawn(max(retries, 1)):
        rng = np.random.default_rng(child)
        topo_seed = int(rng.integers(0, 2**32 - 1))
        pairs, directed = _topology(config, topo_seed)
        if config.weight_law == "uniform":
            weights = rng.uniform(config.weight_lo, config.weight_hi, size=len(pairs))
        else:
            weights = np.ones(len(pairs))
        graph = Graph(config.n, tuple((i, j, float(w)) for (i, j), w in zip(pairs, weights)), directed)
        if not (config.require_connected and random_model) or graph.is_connected():
            return graph
    raise GenerationError(
        f"no connected {config.model} graph found in {config.max_retries} attempts"
    )


def spanning_tree(graph: Graph, root: int = 0) -> Graph:
    """Deterministic BFS spanning tree: neighbors visited in ascending index order."""
    if graph.directed:
        raise ParameterError("spanning_tree requires an undirected graph")
    if not 0 <= root < graph.n:
        raise ParameterError(f"root {root} outside node range")
    if not graph.is_connected():
        raise ConnectivityError("spanning_tree requires a connected graph")
    weights = {}
    nbrs = [set() for _ in range(graph.n)]
    for i, j, w in graph.edges:
        nbrs[i].add(j)
        nbrs[j].add(i)
        weights[(min(i, j), max(i, j))] = w
    tree_edges = []
    seen = {root}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in sorted(nbrs[u]):
            if v not in seen:
                seen.add(v)
                queue.append(v)
                a, b = min(u, v), max(u, v)
                tree_edges.append((a, b, weights[(a, b)]))
    return Graph(graph.n, tuple(tree_edges), directed=False)


def star_graph(n):
    """Unit-weight star with center 0."""
    return generate(GeneratorConfig("star", n))


def cycle_graph(n, directed=False):
    """Unit-weight cycle 0-1-...-(n-1)-0."""
    return generate(GeneratorConfig("directed-cycle" if directed else "cycle", n))


def path_graph(n):
    """Unit-weight path 0-1-...-(n-1)."""
    return Graph(n, tuple((i, i + 1, 1.0) for i in range(n - 1)))


def write_edgelist(graph: Graph, path):
    """Write the plain-text edge list: `n <count> directed <0|1>` then `i j w` lines."""
    lines = [f"n {graph.n} directed {1 if graph.directed else 0}"]
    lines += [f"{i} {j} {w!r}" for i, j, w in graph.edges]
    Path(path).write_text("\n".join(lines) + "\n")


def read_edgelist(path) -> Graph:
    """Read the edge-list format written by :func:`write_edgelist`."""
    text = Path(path).read_text().strip().splitlines()
    if not text:
        raise ParameterError(f"{path}: empty graph file")
    header = text[0].split()
    if len(header) != 4 or header[0] != "n" or header[2] != "directed":
        raise ParameterError(f"{path}: bad header {text[0]!r}")
    n, directed = int(header[1]), bool(int(header[3]))
    edges = []
    for line in text[1:]:
        if not line.strip():
            continue
        i, j, w = line.split()
        edges.append((int(i), int(j), float(w)))
    return Graph(n, tuple(edges), directed)
