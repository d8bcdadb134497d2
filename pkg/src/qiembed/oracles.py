"""Independent oracles used to cross-check the exact constructions.

Positive roots are enumerated from Cartan matrices by the root-string
algorithm, which shares no code with the coordinate root tables.
"""

from __future__ import annotations

MAX_ORACLE_RANK = 8


def _chain_cartan(n, double_at=None, triple=False):
    a = [[0] * n for _ in range(n)]
    for i in range(n):
        a[i][i] = 2
    for i in range(n - 1):
        a[i][i + 1] = a[i + 1][i] = -1
    if double_at is not None:
        a[double_at + 1][double_at] = -2
    if triple:
        a[1][0] = -3
    return a


def _d_cartan(n):
    a = _chain_cartan(n)
    a[n - 2][n - 1] = a[n - 1][n - 2] = 0
    a[n - 3][n - 1] = a[n - 1][n - 3] = -1
    return a


def _e_cartan(n):
    # Bourbaki numbering: chain 1-3-4-5-..., node 2 attached to node 4
    a = [[2 if i == j else 0 for j in range(n)] for i in range(n)]
    edges = [(0, 2), (1, 3), (2, 3)] + [(k, k + 1) for k in range(3, n - 1)]
    for i, j in edges:
        a[i][j] = a[j][i] = -1
    return a


def cartan_matrix(tag: str, rank: int) -> list:
    if tag == "A":
        return _chain_cartan(rank)
    if tag == "BC":
        return _chain_cartan(rank, double_at=rank - 2)
    if tag == "D":
        return _d_cartan(rank)
    if tag == "G2":
        return _chain_cartan(2, triple=True)
    if tag == "F4":
        return [[2, -1, 0, 0], [-1, 2, -2, 0], [0, -1, 2, -1], [0, 0, -1, 2]]
    if tag in ("E6", "E7", "E8"):
        return _e_cartan(rank)
    raise ValueError(f"no Cartan matrix for {tag}{rank}")


def positive_roots_from_cartan(a) -> set:
    """Root strings: beta + alpha_i is a root iff p - <beta, alpha_i^v> > 0."""
    n = len(a)
    simple = [tuple(int(i == j) for j in range(n)) for i in range(n)]
    roots = set(simple)
    layer = list(simple)
    while layer:
        nxt = []
        for beta in layer:
            for i in range(n):
                p = 0
                down = list(beta)
                while True:
                    down[i] -= 1
                    if tuple(down) not in roots:
                        break
                    p += 1
                if p - sum(beta[j] * a[i][j] for j in range(n)) > 0:
                    up = list(beta)
                    up[i] += 1
                    up = tuple(up)
                    if up not in roots:
                        roots.add(up)
                        nxt.append(up)
        layer = nxt
    return roots


def supported_types(max_rank: int = MAX_ORACLE_RANK) -> list:
    """Every supported (type, rank) with rank <= max_rank."""
    out = [("A", n) for n in range(1, max_rank + 1)]
    out += [("BC", n) for n in range(2, max_rank + 1)]
    out += [("D", n) for n in range(4, max_rank + 1)]
    out += [(t, r) for t, r in (("G2", 2), ("F4", 4), ("E6", 6), ("E7", 7), ("E8", 8)) if r <= max_rank]
    return out


def positive_root_count(tag: str, rank: int) -> int:
    return len(positive_roots_from_cartan(cartan_matrix(tag, rank)))
