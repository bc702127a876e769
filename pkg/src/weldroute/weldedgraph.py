"""Welded-trees graphs in the port-numbering model.

Vertices carry dense internal indices (never visible to the algorithms) and a
separate random identifier layer.  Each vertex ``u`` numbers its incident edges
with ports ``1..deg(u)``; internally the graph is stored CSR-style by arc, so
arc ``offsets[u] + p - 1`` is the directed arc leaving ``u`` through port
``p`` and ``rev[a]`` is the index of the reverse arc.

Layout of a freshly built instance (deserialized instances are indexed by
identifier rank instead):

* left tree: heap indices ``0 .. 2**(n+1) - 2``, root ``0`` is ``source``;
* right tree: the same heap shifted by ``2**(n+1) - 1``, its root is ``target``.
"""

from __future__ import annotations

import re
from collections import deque
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from weldroute.errors import InvalidQueryError, ParseError, SizeLimitError, ValidationError
from weldroute.rng import stream

INDEX_DTYPE = np.int32
FORMAT_TAG = "weldedtrees v1"


def num_vertices_for(n: int) -> int:
    return 2 ** (n + 2) - 2


def num_edges_for(n: int) -> int:
    # 2 vertices of degree 2 plus degree-3 everywhere else, halved
    return 3 * 2 ** (n + 1) - 4


def _max_n() -> int:
    limit = np.iinfo(INDEX_DTYPE).max
    n = 1
    while 2 * num_edges_for(n + 1) <= limit:
        n += 1
    return n


MAX_N = _max_n()


class PortGraph:
    """Undirected simple graph with a port numbering at every vertex.

    ``neighbors(u)[p - 1]`` is the neighbor behind port ``p`` of ``u``.
    """

    source: int | None = None
    target: int | None = None

    def __init__(self, offsets: np.ndarray, heads: np.ndarray, rev: np.ndarray):
        self.offsets = np.asarray(offsets, dtype=np.int64)
        self.heads = np.asarray(heads, dtype=INDEX_DTYPE)
        self.rev = np.asarray(rev, dtype=INDEX_DTYPE)
        for arr in (self.offsets, self.heads, self.rev):
            arr.setflags(write=False)

    @classmethod
    def from_adjacency(cls, nbr_lists: Sequence[Sequence[int]]) -> "PortGraph":
        """Build from per-vertex neighbor lists given in port order."""
        offsets, heads, rev = _csr_from_lists(nbr_lists)
        return cls(offsets, heads, rev)

    @property
    def num_vertices(self) -> int:
        return len(self.offsets) - 1

    @property
    def num_arcs(self) -> int:
        return len(self.heads)

    @property
    def num_edges(self) -> int:
        return len(self.heads) // 2

    @cached_property
    def degree(self) -> np.ndarray:
        d = np.diff(self.offsets)
        d.setflags(write=False)
        return d

    @cached_property
    def tails(self) -> np.ndarray:
        t = np.repeat(np.arange(self.num_vertices, dtype=INDEX_DTYPE), self.degree)
        t.setflags(write=False)
        return t

    @cached_property
    def _nbrs(self) -> list[tuple[int, ...]]:
        h = self.heads.tolist()
        off = self.offsets.tolist()
        return [tuple(h[off[u]:off[u + 1]]) for u in range(self.num_vertices)]

    def neighbors(self, u: int) -> tuple[int, ...]:
        return self._nbrs[u]

    def arc(self, u: int, port: int) -> int:
        """Index of the arc leaving ``u`` on ``port`` (1-based)."""
        if not 1 <= port <= self.degree[u]:
            raise ValueError(f"vertex {u} has no port {port}")
        return int(self.offsets[u]) + port - 1

    def port_of_arc(self, a: int) -> int:
        return a - int(self.offsets[self.tails[a]]) + 1


def _csr_from_lists(nbr_lists: Sequence[Sequence[int]]):
    offsets = np.zeros(len(nbr_lists) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum([len(x) for x in nbr_lists])
    heads = np.fromiter((v for nb in nbr_lists for v in nb), dtype=np.int64, count=int(offsets[-1]))
    index = {}
    for u, nb in enumerate(nbr_lists):
        for i, v in enumerate(nb):
            if (u, v) in index:
                raise ValidationError(f"multi-edge between {u} and {v}")
            index[(u, v)] = int(offsets[u]) + i
    rev = np.empty_like(heads)
    for (u, v), a in index.items():
        try:
            rev[a] = index[(v, u)]
        except KeyError:
            raise ValidationError(f"edge ({u},{v}) is not reciprocated") from None
    return offsets, heads, rev


def _csr_from_edges(num_vertices: int, eu: np.ndarray, ev: np.ndarray, port_key: np.ndarray):
    """CSR arrays for an undirected edge list; ports at a vertex follow ``port_key``."""
    m = len(eu)
    tails = np.concatenate([eu, ev])
    heads = np.concatenate([ev, eu])
    order = np.lexsort((port_key, tails))
    pos = np.empty(2 * m, dtype=np.int64)
    pos[order] = np.arange(2 * m)
    partner = np.concatenate([np.arange(m, 2 * m), np.arange(m)])
    rev = np.empty(2 * m, dtype=np.int64)
    rev[pos] = pos[partner]
    offsets = np.zeros(num_vertices + 1, dtype=np.int64)
    offsets[1:] = np.cumsum(np.bincount(tails, minlength=num_vertices))
    return offsets, heads[order], rev


class OracleAnswer(NamedTuple):
    """Reply of the exploration oracle.  Both fields are ``None`` for ⊥."""

    id: int | None
    port: int | None

    @property
    def is_bottom(self) -> bool:
        return self.id is None


BOTTOM = OracleAnswer(None, None)


class WeldedTreesInstance(PortGraph):
    """A member of the welded-trees family with identifiers and ports.

    Instances are validated on construction and immutable afterwards.
    """

    def __init__(
        self,
        n: int,
        offsets: np.ndarray,
        heads: np.ndarray,
        rev: np.ndarray,
        ids: np.ndarray,
        source: int,
        target: int,
        id_domain: int | None = None,
    ):
        super().__init__(offsets, heads, rev)
        self.n = int(n)
        self.ids = np.asarray(ids, dtype=np.int64)
        self.ids.setflags(write=False)
        self.source = int(source)
        self.target = int(target)
        self.id_domain = int(id_domain) if id_domain is not None else self.num_vertices
        self.column = _bfs_columns(self, self.source)
        self.column.setflags(write=False)
        validate(self)

    @cached_property
    def _vertex_by_id(self) -> dict[int, int]:
        return {int(i): v for v, i in enumerate(self.ids.tolist())}

    def vertex_of_id(self, ident: int) -> int:
        try:
            return self._vertex_by_id[int(ident)]
        except (KeyError, TypeError, ValueError):
            raise InvalidQueryError(f"unknown identifier {ident!r}") from None

    def column_sizes(self) -> np.ndarray:
        return np.bincount(self.column, minlength=2 * self.n + 2)

    def vertices_in_column(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.column == k)

    def labelled_edges(self) -> frozenset[tuple[int, int, int, int]]:
        """Identifier-level edge set, independent of internal indexing."""
        out = set()
        ids = self.ids
        for a in range(self.num_arcs):
            b = int(self.rev[a])
            if a < b:
                u, v = int(self.tails[a]), int(self.heads[a])
                rec = (int(ids[u]), self.port_of_arc(a), int(ids[v]), self.port_of_arc(b))
                if rec[0] > rec[2]:
                    rec = (rec[2], rec[3], rec[0], rec[1])
                out.add(rec)
        return frozenset(out)

    def __eq__(self, other) -> bool:
        if not isinstance(other, WeldedTreesInstance):
            return NotImplemented
        return (
            self.n == other.n
            and int(self.ids[self.source]) == int(other.ids[other.source])
            and int(self.ids[self.target]) == int(other.ids[other.target])
            and self.labelled_edges() == other.labelled_edges()
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"WeldedTreesInstance(n={self.n}, vertices={self.num_vertices})"


def _bfs_columns(g: PortGraph, s: int) -> np.ndarray:
    col = np.full(g.num_vertices, -1, dtype=np.int64)
    col[s] = 0
    q = deque([s])
    while q:
        u = q.popleft()
        c = col[u] + 1
        for w in g.neighbors(u):
            if col[w] < 0:
                col[w] = c
                q.append(w)
    return col


def _check_n(n) -> int:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
        raise TypeError(f"n must be an integer, got {type(n).__name__}")
    n = int(n)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n > MAX_N:
        raise SizeLimitError(f"n={n} overflows the {np.dtype(INDEX_DTYPE).name} arc index (max n={MAX_N})")
    return n


def build_instance(n: int, seed: int, id_domain: int | None = None) -> WeldedTreesInstance:
    """Draw a random member of the welded-trees family of height ``n``.

    The weld cycle, port numberings and identifiers are all uniform given
    ``seed``.  Identifiers are a random bijection onto ``1..2**(n+2)-2``, or a
    random injection into ``1..id_domain`` when a larger domain is requested.
    """
    n = _check_n(n)
    V = num_vertices_for(n)
    if id_domain is None:
        id_domain = V
    if id_domain < V:
        raise ValueError(f"id_domain={id_domain} is smaller than the vertex count {V}")
    rng = stream(seed, "welded-trees", n)

    half = V // 2
    h = np.arange(1, half, dtype=np.int64)
    par = (h - 1) // 2
    m = 2**n
    first_leaf = m - 1
    # uniform cyclic interleaving l0 r0 l1 r1 ... of the two leaf sets
    sigma = first_leaf + rng.permutation(m)
    tau = half + first_leaf + rng.permutation(m)
    eu = np.concatenate([par, half + par, sigma, tau])
    ev = np.concatenate([h, half + h, tau, np.roll(sigma, -1)])
    port_key = rng.random(2 * len(eu))
    offsets, heads, rev = _csr_from_edges(V, eu, ev, port_key)

    if id_domain == V:
        ids = rng.permutation(V) + 1
    else:
        ids = rng.choice(id_domain, size=V, replace=False) + 1
    return WeldedTreesInstance(n, offsets, heads, rev, ids, 0, half, id_domain)


def validate(inst: WeldedTreesInstance) -> None:
    """Raise :class:`ValidationError` unless every structural invariant holds."""
    n = inst.n
    V = inst.num_vertices
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    if V != num_vertices_for(n):
        raise ValidationError(f"expected {num_vertices_for(n)} vertices for n={n}, got {V}")
    s, t = inst.source, inst.target
    if s == t or not (0 <= s < V and 0 <= t < V):
        raise ValidationError("source and target must be distinct vertices")

    deg = inst.degree
    expected = np.full(V, 3)
    expected[[s, t]] = 2
    bad = np.flatnonzero(deg != expected)
    if bad.size:
        v = int(bad[0])
        raise ValidationError(f"vertex {v} (id {int(inst.ids[v])}) has degree {int(deg[v])}, expected {int(expected[v])}")

    tails, heads, rev = inst.tails, inst.heads, inst.rev
    arcs = np.arange(inst.num_arcs)
    if np.any(rev[rev] != arcs) or np.any(heads[rev] != tails) or np.any(rev == arcs):
        raise ValidationError("reverse-arc table is inconsistent")
    if np.any(heads == tails):
        raise ValidationError("self-loop present")
    pair = tails.astype(np.int64) * V + heads
    if np.unique(pair).size != pair.size:
        raise ValidationError("multi-edge present")

    ids = inst.ids
    if ids.shape != (V,) or np.unique(ids).size != V:
        raise ValidationError("identifiers are not distinct")
    if ids.min() < 1 or ids.max() > inst.id_domain:
        raise ValidationError(f"identifiers must lie in 1..{inst.id_domain}")

    col = inst.column
    if np.any(col < 0):
        raise ValidationError("graph is disconnected")
    if col[t] != 2 * n + 1:
        raise ValidationError(f"target sits in column {int(col[t])}, expected {2 * n + 1}")
    sizes = np.bincount(col, minlength=2 * n + 2)
    k = np.arange(2 * n + 2)
    want = 2 ** np.minimum(k, 2 * n + 1 - k)
    if sizes.shape != want.shape or np.any(sizes != want):
        raise ValidationError(f"column sizes {sizes.tolist()} differ from {want.tolist()}")

    step = col[heads] - col[tails]
    if np.any(np.abs(step) != 1):
        raise ValidationError("edge inside a column")
    fwd = np.bincount(tails[step == 1], minlength=V)
    back = np.bincount(tails[step == -1], minlength=V)
    left = col <= n
    want_fwd = np.where(left, 2, 1)
    want_back = np.where(left, 1, 2)
    want_fwd[t] = 0
    want_back[s] = 0
    if np.any(fwd != want_fwd) or np.any(back != want_back):
        raise ValidationError("vertex neighborhoods do not form two binary trees")

    _check_weld_cycle(inst)


def _check_weld_cycle(inst: WeldedTreesInstance) -> None:
    n = inst.n
    col = inst.column
    weld = {}
    for u in np.flatnonzero(col == n).tolist() + np.flatnonzero(col == n + 1).tolist():
        other = n + 1 if col[u] == n else n
        weld[u] = [w for w in inst.neighbors(u) if col[w] == other]
    start = next(iter(weld))
    prev, cur, length = None, start, 0
    while True:
        a, b = weld[cur]
        nxt = b if a == prev else a
        prev, cur = cur, nxt
        length += 1
        if cur == start:
            break
        if length > len(weld):
            break
    if length != 2 ** (n + 1):
        raise ValidationError(f"weld edges do not form a single cycle through all {2 ** (n + 1)} leaves")


def oracle_query(inst: WeldedTreesInstance, ident: int, port: int) -> OracleAnswer:
    """Answer ``(id(u), q)`` for the neighbor ``u`` behind ``port`` of ``ident``.

    ``q`` is the port of ``u`` leading back.  Port 3 of ``source``/``target``
    answers :data:`BOTTOM`.
    """
    v = inst.vertex_of_id(ident)
    if isinstance(port, bool) or not isinstance(port, (int, np.integer)) or not 1 <= port <= 3:
        raise InvalidQueryError(f"port must be 1, 2 or 3, got {port!r}")
    if port > inst.degree[v]:
        return BOTTOM
    a = inst.arc(v, int(port))
    b = int(inst.rev[a])
    return OracleAnswer(int(inst.ids[inst.heads[a]]), inst.port_of_arc(b))


def column_of(inst: WeldedTreesInstance, v: int) -> int:
    """BFS distance of vertex ``v`` from ``source``."""
    return int(inst.column[v])


_HEADER = re.compile(r"^weldedtrees v1 n=(\d+) source=(\d+) target=(\d+)$")


def serialize(inst: WeldedTreesInstance) -> bytes:
    """Edge-list encoding; canonical, so byte equality means equal instances."""
    ids = inst.ids
    lines = [f"{FORMAT_TAG} n={inst.n} source={int(ids[inst.source])} target={int(ids[inst.target])}"]
    off = inst.offsets
    for u in np.argsort(ids, kind="stable").tolist():
        iu = int(ids[u])
        for a in range(int(off[u]), int(off[u + 1])):
            v = int(inst.heads[a])
            iv = int(ids[v])
            if iu < iv:
                b = int(inst.rev[a])
                lines.append(f"{iu},{a - int(off[u]) + 1},{iv},{b - int(off[v]) + 1}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def deserialize(data: bytes | str | Iterable[str]) -> WeldedTreesInstance:
    """Parse :func:`serialize` output.

    Raises :class:`ParseError` for syntax problems and
    :class:`ValidationError` when the graph is not a welded-trees instance.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    lines = data.splitlines() if isinstance(data, str) else list(data)
    if not lines:
        raise ParseError("empty input", 1)
    m = _HEADER.match(lines[0].strip())
    if not m:
        raise ParseError(f"bad header {lines[0]!r}", 1)
    n, sid, tid = (int(x) for x in m.groups())
    try:
        _check_n(n)
    except (ValueError, SizeLimitError) as exc:
        raise ParseError(str(exc), 1) from None

    ports: dict[int, dict[int, tuple[int, int]]] = {}
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != 4:
            raise ParseError(f"expected 4 fields, got {len(fields)}", lineno)
        try:
            iu, pu, iv, pv = (int(f) for f in fields)
        except ValueError:
            raise ParseError(f"non-integer field in {line!r}", lineno) from None
        if pu < 1 or pv < 1:
            raise ParseError("ports are 1-based", lineno)
        if iu == iv:
            raise ParseError(f"self-loop at id {iu}", lineno)
        for a, pa, b, pb in ((iu, pu, iv, pv), (iv, pv, iu, pu)):
            slot = ports.setdefault(a, {})
            if pa in slot:
                raise ParseError(f"port {pa} of id {a} used twice", lineno)
            slot[pa] = (b, pb)

    for ident in (sid, tid):
        if ident not in ports:
            raise ValidationError(f"header identifier {ident} has no edges")
    order = sorted(ports)
    index = {ident: v for v, ident in enumerate(order)}
    V = len(order)
    if V != num_vertices_for(n):
        raise ValidationError(f"expected {num_vertices_for(n)} vertices for n={n}, got {V}")
    offsets = np.zeros(V + 1, dtype=np.int64)
    for v, ident in enumerate(order):
        slot = ports[ident]
        if sorted(slot) != list(range(1, len(slot) + 1)):
            raise ValidationError(f"ports of id {ident} are not 1..{len(slot)}")
        offsets[v + 1] = offsets[v] + len(slot)
    heads = np.empty(int(offsets[-1]), dtype=np.int64)
    rev = np.empty_like(heads)
    for v, ident in enumerate(order):
        for p, (other, q) in ports[ident].items():
            w = index[other]
            heads[offsets[v] + p - 1] = w
            rev[offsets[v] + p - 1] = offsets[w] + q - 1
    ids = np.array(order, dtype=np.int64)
    return WeldedTreesInstance(n, offsets, heads, rev, ids, index[sid], index[tid], max(V, int(ids.max())))
