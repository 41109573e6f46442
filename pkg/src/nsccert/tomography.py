"""Network tomography instances: routing matrices from graphs and probes.

A probing path is the set of links a packet traverses; stacking path
indicator rows gives a 0/1 routing matrix A with A[i, j] = 1 iff path i
uses link j.  Columns are deliberately left unnormalized: rescaling them
would change the null space being certified.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .matrices import SensingMatrix, seeded_rng

__all__ = [
    "DisconnectedGraphError",
    "NetworkInstance",
    "complete_graph",
    "load_edge_list",
    "save_edge_list",
    "build_random_walk_instance",
    "wilson_spanning_tree",
    "tree_plus_random_edges",
]

Edge = tuple[int, int]


class DisconnectedGraphError(ValueError):
    """The operation requires a connected graph."""


@dataclass(frozen=True)
class NetworkInstance:
    """A probed network: links, path edge-sets, and the routing matrix."""

    num_nodes: int
    edges: tuple[Edge, ...]
    paths: tuple[tuple[int, ...], ...]
    routing: SensingMatrix

    def __post_init__(self) -> None:
        ne = len(self.edges)
        for p, path in enumerate(self.paths):
            if any(not 0 <= e < ne for e in path):
                raise ValueError(f"path {p} references an invalid edge index")
        if self.routing.shape != (len(self.paths), ne):
            raise ValueError("routing matrix shape does not match paths x edges")
        ent = self.routing.entries
        if not np.all((ent == 0.0) | (ent == 1.0)):
            raise ValueError("routing entries must be 0/1")
        for p, path in enumerate(self.paths):
            if int(ent[p].sum()) != len(path):
                raise ValueError(f"row {p} weight does not match its path size")


def _normalize_edges(edges) -> list[Edge]:
    out = []
    seen = set()
    for u, v in edges:
        u, v = int(u), int(v)
        if u == v:
            raise ValueError(f"self-loop {u}-{v} not allowed")
        e = (min(u, v), max(u, v))
        if e in seen:
            raise ValueError(f"duplicate edge {e}")
        seen.add(e)
        out.append(e)
    return out


def _adjacency(num_nodes: int, edges: list[Edge]) -> list[list[tuple[int, int]]]:
    adj: list[list[tuple[int, int]]] = [[] for _ in range(num_nodes + 1)]
    for idx, (u, v) in enumerate(edges):
        if not (1 <= u <= num_nodes and 1 <= v <= num_nodes):
            raise ValueError(f"edge ({u},{v}) outside nodes 1..{num_nodes}")
        adj[u].append((v, idx))
        adj[v].append((u, idx))
    for lst in adj:
        lst.sort()
    return adj


def _is_connected(num_nodes: int, adj) -> bool:
    seen = {1}
    stack = [1]
    while stack:
        u = stack.pop()
        for v, _ in adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == num_nodes


def complete_graph(num_nodes: int) -> list[Edge]:
    return list(itertools.combinations(range(1, num_nodes + 1), 2))


def load_edge_list(path: str | Path) -> tuple[int, list[Edge]]:
    """Edge-list file, one "u v" pair of 1-based node ids per line."""
    edges = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'u v', got {line!r}")
        edges.append((int(parts[0]), int(parts[1])))
    edges = _normalize_edges(edges)
    num_nodes = max(max(e) for e in edges)
    return num_nodes, edges


def save_edge_list(edges, path: str | Path) -> None:
    Path(path).write_text("\n".join(f"{u} {v}" for u, v in edges) + "\n")


def build_random_walk_instance(
    edges,
    num_paths: int,
    walk_len: int,
    seed: int,
    num_nodes: int | None = None,
    retry_cap: int = 50,
) -> NetworkInstance:
    """Probing paths from fixed-length uniform random walks.

    Each path starts at a uniformly chosen node and takes ``walk_len``
    uniform steps; its row marks every distinct edge visited.  Paths whose
    edge set duplicates an earlier one are redrawn up to ``retry_cap``
    times, after which the duplicate is kept with a warning.
    """
    edges = _normalize_edges(edges)
    if num_nodes is None:
        num_nodes = max(max(e) for e in edges)
    if walk_len < 1:
        raise ValueError(f"walk_len must be >= 1, got {walk_len}")
    adj = _adjacency(num_nodes, edges)
    if not _is_connected(num_nodes, adj):
        raise DisconnectedGraphError("random-walk paths need a connected graph")
    rng = seeded_rng(seed)

    def one_walk() -> tuple[int, ...]:
        node = int(rng.integers(1, num_nodes + 1))
        visited = set()
        for _ in range(walk_len):
            nbrs = adj[node]
            node, edge_idx = nbrs[int(rng.integers(len(nbrs)))]
            visited.add(edge_idx)
        return tuple(sorted(visited))

    paths: list[tuple[int, ...]] = []
    seen: set[tuple[int, ...]] = set()
    for p in range(num_paths):
        path = one_walk()
        tries = 0
        while path in seen and tries < retry_cap:
            path = one_walk()
            tries += 1
        if path in seen:
            warnings.warn(f"path {p} duplicates an earlier edge set after {retry_cap} retries")
        seen.add(path)
        paths.append(path)

    routing = np.zeros((num_paths, len(edges)))
    for i, path in enumerate(paths):
        routing[i, list(path)] = 1.0
    matrix = SensingMatrix(
        routing,
        provenance=(
            f"tomography(nodes={num_nodes},edges={len(edges)},"
            f"paths={num_paths},walk_len={walk_len},seed={seed})"
        ),
    )
    return NetworkInstance(num_nodes, tuple(edges), tuple(paths), matrix)


def wilson_spanning_tree(num_nodes: int, edges, seed: int) -> list[Edge]:
    """Uniformly random spanning tree by loop-erased random walks.

    Walks from each unvisited node overwrite a successor pointer per node;
    following the pointers once the walk hits the tree yields the
    loop-erased path, which joins the tree.  The result is uniform over
    all spanning trees of the base graph.
    """
    edges = _normalize_edges(edges)
    adj = _adjacency(num_nodes, edges)
    if not _is_connected(num_nodes, adj):
        raise DisconnectedGraphError("spanning tree needs a connected base graph")
    rng = seeded_rng(seed)
    in_tree = [False] * (num_nodes + 1)
    in_tree[1] = True
    succ_node = [0] * (num_nodes + 1)
    succ_edge = [0] * (num_nodes + 1)
    tree: list[Edge] = []
    for start in range(2, num_nodes + 1):
        if in_tree[start]:
            continue
        node = start
        while not in_tree[node]:
            nbrs = adj[node]
            nxt, edge_idx = nbrs[int(rng.integers(len(nbrs)))]
            succ_node[node] = nxt
            succ_edge[node] = edge_idx
            node = nxt
        node = start
        while not in_tree[node]:
            in_tree[node] = True
            tree.append(edges[succ_edge[node]])
            node = succ_node[node]
    return sorted(tree)


def tree_plus_random_edges(
    num_nodes: int, num_edges: int, seed: int, base_edges=None
) -> list[Edge]:
    """A connected graph: a uniform spanning tree plus random extra edges.

    Extra edges are drawn without replacement from the base graph's
    non-tree edges (base defaults to the complete graph).
    """
    if base_edges is None:
        base_edges = complete_graph(num_nodes)
    else:
        base_edges = _normalize_edges(base_edges)
    if num_edges < num_nodes - 1 or num_edges > len(base_edges):
        raise ValueError(
            f"num_edges must be in [{num_nodes - 1}, {len(base_edges)}], got {num_edges}"
        )
    tree = wilson_spanning_tree(num_nodes, base_edges, seed)
    rng = seeded_rng(seed + 1)
    pool = sorted(set(base_edges) - set(tree))
    extra = num_edges - len(tree)
    picked = rng.choice(len(pool), size=extra, replace=False) if extra else []
    return sorted(tree + [pool[int(i)] for i in picked])
