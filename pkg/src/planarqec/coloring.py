"""Proper edge coloring of bipartite (multi)graphs with max-degree colors."""

from __future__ import annotations

from collections.abc import Hashable, Sequence
from dataclasses import dataclass


class NotBipartiteError(ValueError):
    pass


@dataclass(frozen=True)
class EdgeColoring:
    edges: tuple[tuple[Hashable, Hashable], ...]
    colors: tuple[int, ...]
    num_colors: int

    def classes(self) -> list[list[int]]:
        """Edge indices grouped by color, ascending."""
        out: list[list[int]] = [[] for _ in range(self.num_colors)]
        for e, c in enumerate(self.colors):
            out[c].append(e)
        return out

    def is_proper(self) -> bool:
        seen = set()
        for (u, v), c in zip(self.edges, self.colors):
            for key in ((u, c), (v, c)):
                if key in seen:
                    return False
                seen.add(key)
        return True


def bipartition(edges: Sequence[tuple[Hashable, Hashable]]) -> dict[Hashable, int]:
    adj: dict[Hashable, list[Hashable]] = {}
    for u, v in edges:
        if u == v:
            raise NotBipartiteError(f"self-loop at {u!r}")
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    side: dict[Hashable, int] = {}
    for root in adj:
        if root in side:
            continue
        side[root] = 0
        stack = [root]
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if w not in side:
                    side[w] = 1 - side[u]
                    stack.append(w)
                elif side[w] == side[u]:
                    raise NotBipartiteError("graph contains an odd cycle")
    return side


def bipartite_edge_coloring(edges: Sequence[tuple[Hashable, Hashable]]) -> EdgeColoring:
    """Color edges with exactly max-degree colors (Koenig's theorem).

    Each edge ``(u, v)`` takes a color ``a`` free at ``u``. If ``a`` is busy
    at ``v``, the ``a/b`` alternating path from ``v`` (``b`` free at ``v``)
    is swapped first; in a bipartite graph that path cannot reach ``u``.
    Parallel edges are allowed.
    """
    edges = tuple(tuple(e) for e in edges)
    bipartition(edges)
    degree: dict[Hashable, int] = {}
    for u, v in edges:
        degree[u] = degree.get(u, 0) + 1
        degree[v] = degree.get(v, 0) + 1
    delta = max(degree.values(), default=0)
    # at[x][c] = index of the edge with color c at vertex x
    at: dict[Hashable, dict[int, int]] = {x: {} for x in degree}
    colors = [-1] * len(edges)

    def free(x):
        used = at[x]
        return next(c for c in range(delta) if c not in used)

    for e, (u, v) in enumerate(edges):
        a = free(u)
        if a in at[v]:
            b = free(v)
            # collect the path v -a- x1 -b- x2 -a- ... then swap a <-> b on it
            path = []
            x, c = v, a
            while c in at[x]:
                f = at[x][c]
                path.append(f)
                p, q = edges[f]
                x = q if p == x else p
                c = b if c == a else a
            for f in path:
                p, q = edges[f]
                old = colors[f]
                del at[p][old]
                del at[q][old]
            for f in path:
                p, q = edges[f]
                new = b if colors[f] == a else a
                colors[f] = new
                at[p][new] = f
                at[q][new] = f
        colors[e] = a
        at[u][a] = e
        at[v][a] = e
    return EdgeColoring(edges, tuple(colors), delta)
