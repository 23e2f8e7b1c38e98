"""Transportation problem: minimize sum_ij c_ij cost_ij over couplings of (p, q).

Network simplex on the bipartite row/column graph. The basis is a spanning
tree of m + n - 1 cells, started from the northwest corner rule; entering and
leaving cells are chosen by Bland's smallest-index rule, so degenerate pivots
cannot cycle.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import Infeasible, NoConvergence

MARGINAL_TOL = 1e-9
REDUCED_TOL = 1e-12
MAX_PIVOTS = 10_000


@dataclass(frozen=True, eq=False)
class Coupling:
    """Joint distribution with row marginal p and column marginal q.

    ``row_duals``/``col_duals`` are the LP potentials certifying optimality
    when the coupling came out of :func:`transportation_solve`.
    """

    matrix: np.ndarray
    row_duals: np.ndarray | None = None
    col_duals: np.ndarray | None = None

    @property
    def p(self) -> np.ndarray:
        return self.matrix.sum(axis=1)

    @property
    def q(self) -> np.ndarray:
        return self.matrix.sum(axis=0)

    def marginal_error(self, p, q) -> float:
        return float(max(np.max(np.abs(self.p - p)), np.max(np.abs(self.q - q))))


def _validate(cost, p, q):
    cost = np.asarray(cost, dtype=float)
    p = np.asarray(p, dtype=float).ravel()
    q = np.asarray(q, dtype=float).ravel()
    if cost.shape != (p.size, q.size):
        raise ValueError(f"cost shape {cost.shape} does not match marginals {(p.size, q.size)}")
    if not np.all(np.isfinite(cost)):
        raise ValueError("costs must be finite")
    if np.any(p < -MARGINAL_TOL) or np.any(q < -MARGINAL_TOL) or abs(p.sum() - q.sum()) > MARGINAL_TOL:
        raise Infeasible("marginals must be nonnegative with equal totals")
    return cost, np.clip(p, 0.0, None), np.clip(q, 0.0, None)


def _northwest_corner(p, q):
    m, n = p.size, q.size
    x = np.zeros((m, n))
    supply, demand = p.copy(), q.copy()
    basis = []
    i = j = 0
    while True:
        amount = min(supply[i], demand[j])
        if i == m - 1 and j == n - 1:
            amount = supply[i]
        x[i, j] = max(amount, 0.0)
        supply[i] -= amount
        demand[j] -= amount
        basis.append((i, j))
        if i == m - 1 and j == n - 1:
            break
        if i == m - 1:
            j += 1
        elif j == n - 1:
            i += 1
        elif supply[i] <= MARGINAL_TOL * 1e-3:
            i += 1
        else:
            j += 1
    return x, basis


def _potentials(cost, basis, m, n):
    """u_i + v_j = cost_ij on every basic cell, with u_0 = 0."""
    adj = {("r", i): [] for i in range(m)}
    adj.update({("c", j): [] for j in range(n)})
    for i, j in basis:
        adj[("r", i)].append(("c", j))
        adj[("c", j)].append(("r", i))
    u = np.full(m, np.nan)
    v = np.full(n, np.nan)
    u[0] = 0.0
    todo = deque([("r", 0)])
    while todo:
        node = todo.popleft()
        for nb in adj[node]:
            if node[0] == "r" and np.isnan(v[nb[1]]):
                v[nb[1]] = cost[node[1], nb[1]] - u[node[1]]
                todo.append(nb)
            elif node[0] == "c" and np.isnan(u[nb[1]]):
                u[nb[1]] = cost[nb[1], node[1]] - v[node[1]]
                todo.append(nb)
    return u, v


def _tree_path(basis, m, n, row, col):
    """Basic cells on the tree path from column ``col`` to row ``row``."""
    adj = {("r", i): [] for i in range(m)}
    adj.update({("c", j): [] for j in range(n)})
    for i, j in basis:
        adj[("r", i)].append((("c", j), (i, j)))
        adj[("c", j)].append((("r", i), (i, j)))
    start, goal = ("c", col), ("r", row)
    prev = {start: None}
    todo = deque([start])
    while todo:
        node = todo.popleft()
        if node == goal:
            break
        for nb, cell in adj[node]:
            if nb not in prev:
                prev[nb] = (node, cell)
                todo.append(nb)
    path = []
    node = goal
    while prev[node] is not None:
        node, cell = prev[node]
        path.append(cell)
    return path[::-1]


def transportation_solve(cost, p, q) -> tuple[Coupling, float]:
    """Optimal coupling and minimal total cost.

    >>> c, v = transportation_solve([[0, 1], [1, 0]], [.5, .5], [.25, .75])
    >>> round(v, 12)
    0.25
    """
    cost, p, q = _validate(cost, p, q)
    m, n = cost.shape
    x, basis = _northwest_corner(p, q)
    for _ in range(MAX_PIVOTS):
        u, v = _potentials(cost, basis, m, n)
        reduced = cost - u[:, None] - v[None, :]
        in_basis = np.zeros((m, n), dtype=bool)
        for cell in basis:
            in_basis[cell] = True
        candidates = np.argwhere((reduced < -REDUCED_TOL) & ~in_basis)
        if candidates.size == 0:
            x = np.clip(x, 0.0, None)
            return Coupling(x, u, v), float(np.sum(x * cost))
        ei, ej = (int(t) for t in candidates[0])
        path = _tree_path(basis, m, n, ei, ej)
        minus = path[0::2]
        plus = path[1::2]
        theta = min(x[c] for c in minus)
        leaving = min(c for c in minus if x[c] <= theta + 1e-15)
        for c in minus:
            x[c] -= theta
        for c in plus:
            x[c] += theta
        x[ei, ej] += theta
        x[leaving] = 0.0
        basis.remove(leaving)
        basis.append((ei, ej))
    raise NoConvergence(f"network simplex exceeded {MAX_PIVOTS} pivots")


def transportation_maximize(gain, p, q) -> tuple[Coupling, float]:
    """Coupling maximizing sum_ij c_ij gain_ij."""
    gain = np.asarray(gain, dtype=float)
    coupling, value = transportation_solve(-gain, p, q)
    return coupling, -value


def certificate_error(coupling: Coupling, cost) -> tuple[float, float]:
    """(dual infeasibility, complementary-slackness violation); both ~0 at optimum."""
    cost = np.asarray(cost, dtype=float)
    reduced = cost - coupling.row_duals[:, None] - coupling.col_duals[None, :]
    infeasibility = max(0.0, -float(reduced.min()))
    support = coupling.matrix > 1e-12
    slack = float(np.max(np.abs(reduced[support]), initial=0.0))
    return infeasibility, slack


def enumerate_vertices(p, q):
    """Every vertex of the transportation polytope, by brute force over bases.

    A vertex is the unique solution supported on a spanning tree of cells; the
    number of candidate trees is C(mn, m+n-1), so this is only for tiny sizes.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    m, n = p.size, q.size
    cells = [(i, j) for i in range(m) for j in range(n)]
    out = []
    for subset in combinations(cells, m + n - 1):
        x = _solve_on_tree(subset, p, q)
        if x is not None and x.min() >= -1e-12:
            out.append(np.clip(x, 0.0, None))
    return out


def _solve_on_tree(cells, p, q):
    m, n = p.size, q.size
    rows, cols = p.copy(), q.copy()
    remaining = set(cells)
    x = np.zeros((m, n))
    while remaining:
        leaf = None
        for i in range(m):
            mine = [c for c in remaining if c[0] == i]
            if len(mine) == 1:
                leaf = mine[0]
                x[leaf] = rows[i]
                break
        if leaf is None:
            for j in range(n):
                mine = [c for c in remaining if c[1] == j]
                if len(mine) == 1:
                    leaf = mine[0]
                    x[leaf] = cols[j]
                    break
        if leaf is None:
            return None  # contains a cycle
        rows[leaf[0]] -= x[leaf]
        cols[leaf[1]] -= x[leaf]
        remaining.discard(leaf)
    if np.max(np.abs(rows)) > 1e-9 or np.max(np.abs(cols)) > 1e-9:
        return None
    return x
