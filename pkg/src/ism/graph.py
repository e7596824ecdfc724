"""Graph utilities over explicit product graphs."""
from __future__ import annotations

from collections import deque


def strongly_connected_components(nodes, successors) -> list:
    """Tarjan's algorithm, iterative.  ``successors(n)`` yields neighbours.

    Components come out in reverse topological order; each is a list in
    discovery order.
    """
    index, low, on_stack = {}, {}, set()
    stack, result = [], []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(successors(root)))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            w = next(it, None)
            if w is not None:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(successors(w))))
                elif w in on_stack:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                result.append(comp[::-1])
    return result


def has_cycle(component, successors) -> bool:
    """A component is cyclic if it has several nodes or a self-loop."""
    if len(component) > 1:
        return True
    v = component[0]
    return any(w == v for w in successors(v))


def shortest_cycle(start, edges):
    """Shortest list of edges leading from ``start`` back to ``start``.

    ``edges(n)`` yields ``(edge, target)`` pairs.  Returns None if no cycle.
    """
    parent = {}
    queue = deque()
    for e, t in edges(start):
        if t == start:
            return [e]
        if t not in parent:
            parent[t] = (None, e)
            queue.append(t)
    while queue:
        v = queue.popleft()
        for e, t in edges(v):
            if t == start:
                path = [e]
                while v is not None:
                    prev, pe = parent[v]
                    path.append(pe)
                    v = prev
                return path[::-1]
            if t not in parent:
                parent[t] = (v, e)
                queue.append(t)
    return None


def backward_reachable(targets, nodes, predecessors) -> set:
    seen = set(targets)
    queue = deque(seen)
    while queue:
        v = queue.popleft()
        for u in predecessors(v):
            if u not in seen:
                seen.add(u)
                queue.append(u)
    return seen
