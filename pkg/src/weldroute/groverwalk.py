"""Grover walk on a port-numbered graph, simulated on directed-arc amplitudes.

One step applies ``U = S C``: the coin reflects the amplitudes leaving each
vertex about their mean, then the shift moves every arc amplitude onto the
reverse arc.  Amplitudes stay real, so states are float64 vectors indexed by
arc (see :class:`weldroute.weldedgraph.PortGraph` for the arc layout).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from weldroute.errors import SizeLimitError
from weldroute.weldedgraph import PortGraph

DENSE_LIMIT = 4096


def grover_coeffs(d: int) -> tuple[float, float]:
    """Diagonal and off-diagonal entries of the ``d x d`` Grover diffusion."""
    if d < 1:
        raise ValueError(f"Grover operator needs d >= 1, got {d}")
    return 2.0 / d - 1.0, 2.0 / d


def grover_matrix(d: int) -> np.ndarray:
    diag, off = grover_coeffs(d)
    g = np.full((d, d), off)
    np.fill_diagonal(g, diag)
    return g


def resolve_log_base(base) -> float:
    """Accept ``2``, ``"2"``, ``"e"`` or any positive number other than 1."""
    if isinstance(base, str):
        base = math.e if base.strip().lower() in ("e", "ln") else float(base)
    base = float(base)
    if base <= 0 or base == 1:
        raise ValueError(f"invalid log base {base}")
    return base


def ceil_tol(x: float) -> int:
    # guards ceil(3.6 * 32 * 5.000000000000001) style round-off
    return math.ceil(x - 1e-9)


def hitting_range(n: int, log_base=2) -> tuple[int, int]:
    """Step range ``[2n, ceil(3.6 n log n)]`` searched for a good hitting time.

    The range is empty (``lo > hi``) for ``n = 1``.
    """
    base = resolve_log_base(log_base)
    return 2 * n, ceil_tol(3.6 * n * math.log(n, base))


@dataclass
class ArcState:
    """Walk state ``Φ(t)``: one real amplitude per directed arc."""

    graph: PortGraph
    amp: np.ndarray
    t: int = 0

    def norm2(self) -> float:
        return float(np.dot(self.amp, self.amp))

    def copy(self) -> "ArcState":
        return ArcState(self.graph, self.amp.copy(), self.t)


class _Kernel:
    """Reusable buffers for repeated steps on one graph."""

    def __init__(self, graph: PortGraph):
        self.graph = graph
        self.starts = graph.offsets[:-1]
        self.weight = (2.0 / graph.degree)[graph.tails]
        self.rev = graph.rev.astype(np.intp)
        self.tails = graph.tails.astype(np.intp)
        self.scratch = np.empty(graph.num_arcs)

    def step_inplace(self, amp: np.ndarray) -> np.ndarray:
        """Return ``U amp``; the result lives in the scratch buffer, swapped with ``amp``."""
        sums = np.add.reduceat(amp, self.starts)
        coin = self.scratch
        np.multiply(self.weight, sums[self.tails], out=coin)
        coin -= amp
        np.take(coin, self.rev, out=amp)
        return amp


def initial_state(graph: PortGraph) -> ArcState:
    """Uniform superposition over the arcs leaving ``source``."""
    s = graph.source
    amp = np.zeros(graph.num_arcs)
    lo, hi = int(graph.offsets[s]), int(graph.offsets[s + 1])
    amp[lo:hi] = 1.0 / math.sqrt(hi - lo)
    return ArcState(graph, amp, 0)


def step(state: ArcState, steps: int = 1) -> ArcState:
    """Advance ``state`` by ``steps`` applications of ``U``; returns a new state."""
    k = _Kernel(state.graph)
    amp = state.amp.copy()
    for _ in range(steps):
        k.step_inplace(amp)
    return ArcState(state.graph, amp, state.t + steps)


def trajectory(graph: PortGraph, T: int, start: ArcState | None = None):
    """Yield ``Φ(0), Φ(1), ..., Φ(T)`` (each a fresh copy)."""
    state = start.copy() if start is not None else initial_state(graph)
    k = _Kernel(graph)
    yield state.copy()
    amp = state.amp
    for t in range(1, T + 1):
        k.step_inplace(amp)
        yield ArcState(graph, amp.copy(), state.t + t)


def hit_probability(state: ArcState) -> float:
    """Probability mass on the arcs leaving ``target``."""
    g = state.graph
    lo, hi = int(g.offsets[g.target]), int(g.offsets[g.target + 1])
    a = state.amp[lo:hi]
    return float(np.dot(a, a))


@dataclass
class SweepResult:
    n: int
    T: np.ndarray
    p: np.ndarray
    threshold: float
    T_hat: int | None = field(default=None)
    argmax_T: int | None = field(default=None)

    @property
    def crossed(self) -> bool:
        return self.T_hat is not None

    def rows(self):
        return list(zip(self.T.tolist(), self.p.tolist()))


def sweep_T(graph: PortGraph, T_min: int, T_max: int, threshold: float | None = None) -> SweepResult:
    """Record ``p(T)`` for every ``T`` in ``[T_min, T_max]`` along one trajectory.

    ``T_hat`` is the first ``T`` with ``p(T) > threshold`` (default
    ``1/(20n)``); ``argmax_T`` breaks ties toward the smaller ``T``.
    """
    if not 0 <= T_min <= T_max:
        raise ValueError(f"need 0 <= T_min <= T_max, got [{T_min}, {T_max}]")
    n = int(getattr(graph, "n", 1))
    if threshold is None:
        threshold = 1.0 / (20 * n)
    lo, hi = int(graph.offsets[graph.target]), int(graph.offsets[graph.target + 1])
    k = _Kernel(graph)
    amp = initial_state(graph).amp
    for _ in range(T_min):
        k.step_inplace(amp)
    ps = np.empty(T_max - T_min + 1)
    for i in range(ps.size):
        if i:
            k.step_inplace(amp)
        a = amp[lo:hi]
        ps[i] = np.dot(a, a)
    Ts = np.arange(T_min, T_max + 1)
    above = np.flatnonzero(ps > threshold)
    return SweepResult(
        n=n,
        T=Ts,
        p=ps,
        threshold=threshold,
        T_hat=int(Ts[above[0]]) if above.size else None,
        argmax_T=int(Ts[int(np.argmax(ps))]),
    )


def hitting_profile(graph: PortGraph, T_max: int) -> np.ndarray:
    """``p(0..T_max)`` as an array."""
    return sweep_T(graph, 0, T_max).p


def dense_operators(graph: PortGraph) -> tuple[np.ndarray, np.ndarray]:
    """Explicit shift ``S`` and coin ``C`` over the arc basis (tiny graphs only).

    Built entry by entry from the definitions, without the reverse-arc table,
    so it can serve as an independent check on :func:`step`.
    """
    N = graph.num_arcs
    if N > DENSE_LIMIT:
        raise SizeLimitError(f"dense operator of size {N} exceeds {DENSE_LIMIT}")
    basis = {}
    for u in range(graph.num_vertices):
        for v in graph.neighbors(u):
            basis[(u, v)] = len(basis)
    S = np.zeros((N, N))
    C = np.zeros((N, N))
    for (u, v), col in basis.items():
        S[basis[(v, u)], col] = 1.0
        d = len(graph.neighbors(u))
        for w in graph.neighbors(u):
            C[basis[(u, w)], col] += 2.0 / d
        C[col, col] -= 1.0
    return S, C


def dense_unitary(graph: PortGraph) -> np.ndarray:
    S, C = dense_operators(graph)
    return S @ C
