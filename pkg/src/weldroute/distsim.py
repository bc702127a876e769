"""Round-based distributed simulation of ``DistQWalk`` and ``Traversal``.

Every node ``u`` owns a reception register ``R[u<-v]`` and an emission
register ``E[u->v]`` per incident arc.  All registers hold ``(b+1)``-qubit
states; the payload is embedded as ``|phi>|0>`` and the empty message is
``|0...0>|1>``.  Every configuration reachable by the algorithm has the payload
in exactly one register and ⊥ everywhere else, so the global state is stored as
one real amplitude per (side, arc) pair instead of a ``2**(b+1)``-dimensional
vector per register.  ``b`` therefore only enters the message ledger.

Two backends are offered:

* ``register`` moves amplitudes through the per-node coins, the local
  E/R swap and the delivery swap, and Born-samples the final measurement;
* ``fast`` reads the hitting probability off the arc-level walk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from weldroute.groverwalk import (
    ceil_tol,
    grover_coeffs,
    hitting_range,
    initial_state,
    resolve_log_base,
    step,
    sweep_T,
)
from weldroute.rng import as_generator
from weldroute.weldedgraph import PortGraph

QUANTUM = "quantum"
CLASSICAL = "classical"


def account_round(configs: Iterable[Sequence[int]], mode: str = QUANTUM) -> int:
    """Message cost of one round.

    ``configs`` lists, for each basis configuration present at send time, the
    sizes of its non-⊥ emission registers.  Quantum rounds cost the maximum
    over configurations with non-zero amplitude; a classical round has a single
    deterministic configuration and costs the sum of its messages.
    """
    if mode == QUANTUM:
        return max((sum(c) for c in configs), default=0)
    if mode == CLASSICAL:
        configs = list(configs)
        if len(configs) > 1:
            raise ValueError("a classical round has exactly one configuration")
        return sum(configs[0]) if configs else 0
    raise ValueError(f"unknown ledger mode {mode!r}")


@dataclass
class RoundLedger:
    mode: str = QUANTUM
    per_round: list[int] = field(default_factory=list)

    def record(self, cost: int) -> None:
        if cost < 0:
            raise ValueError("negative round cost")
        self.per_round.append(int(cost))

    @property
    def total(self) -> int:
        return sum(self.per_round)

    @property
    def rounds(self) -> int:
        return len(self.per_round)


@dataclass
class RunOutcome:
    success: bool
    rounds: int
    total_cost: int
    calls: int = 1
    success_probability: float | None = None
    # port of target whose reception register held the payload (on success)
    received_port: int | None = None
    ledger: RoundLedger | None = None
    # walk length of the last executed call
    final_T: int | None = None


class RegisterConfigState:
    """Amplitudes over single-payload configurations.

    ``amp_R[a]`` is the amplitude of the configuration whose payload sits in
    the reception register ``R[u<-v]`` and ``amp_E[a]`` the one with payload in
    ``E[u->v]``, where ``a`` is the arc ``(u, v)``.
    """

    def __init__(self, graph: PortGraph, payload_bits: int):
        if payload_bits < 1:
            raise ValueError("payload needs at least one bit")
        self.graph = graph
        self.payload_bits = int(payload_bits)
        self.amp_R = np.zeros(graph.num_arcs)
        self.amp_E = np.zeros(graph.num_arcs)
        self.round = 0

    @property
    def register_qubits(self) -> int:
        return self.payload_bits + 1

    def norm2(self) -> float:
        return float(np.dot(self.amp_R, self.amp_R) + np.dot(self.amp_E, self.amp_E))

    def emission_loads(self) -> list[list[int]]:
        """Loaded emission-register sizes for every non-zero configuration."""
        q = self.register_qubits
        loads = [[q] for _ in np.flatnonzero(self.amp_E)]
        loads.extend([] for _ in np.flatnonzero(self.amp_R))
        return loads


class RegisterSimulator:
    """``DistQWalk`` executed register by register."""

    def __init__(self, graph: PortGraph, payload_bits: int):
        self.graph = graph
        self.state = RegisterConfigState(graph, payload_bits)
        self.ledger = RoundLedger(QUANTUM)
        # arcs grouped by tail degree: rows are nodes, columns their R registers
        deg = graph.degree
        self._blocks = []
        for d in np.unique(deg).tolist():
            nodes = np.flatnonzero(deg == d)
            idx = graph.offsets[nodes][:, None] + np.arange(d)[None, :]
            self._blocks.append((idx, self._coin_matrix(d)))
        self._rev = graph.rev.astype(np.intp)

    @staticmethod
    def _coin_matrix(d: int) -> np.ndarray:
        # G~_d: payload at position i goes to position j with amplitude G_d[j, i]
        diag, off = grover_coeffs(d)
        g = np.full((d, d), off)
        np.fill_diagonal(g, diag)
        return g

    def prepare(self) -> None:
        """Source splits the payload evenly over its reception registers."""
        st = self.state
        st.amp_R[:] = 0.0
        st.amp_E[:] = 0.0
        s = self.graph.source
        lo, hi = int(self.graph.offsets[s]), int(self.graph.offsets[s + 1])
        st.amp_R[lo:hi] = 1.0 / math.sqrt(hi - lo)
        st.round = 0
        self.ledger = RoundLedger(QUANTUM)

    def diffuse(self) -> None:
        st = self.state
        new = np.empty_like(st.amp_R)
        for idx, g in self._blocks:
            new[idx] = st.amp_R[idx] @ g.T
        st.amp_R = new

    def local_swap(self) -> None:
        st = self.state
        st.amp_R, st.amp_E = st.amp_E, st.amp_R

    def deliver(self) -> None:
        # SWAP(E[u->v], R[v<-u]); R[v<-u] lives on the reverse arc of (u, v)
        st = self.state
        new_R = np.zeros_like(st.amp_R)
        new_E = np.zeros_like(st.amp_E)
        new_R[self._rev] = st.amp_E
        new_E[self._rev] = st.amp_R
        st.amp_R, st.amp_E = new_R, new_E

    def run_round(self) -> int:
        self.diffuse()
        self.local_swap()
        cost = account_round(self.state.emission_loads(), QUANTUM)
        self.ledger.record(cost)
        self.deliver()
        self.state.round += 1
        return cost

    def target_distribution(self) -> np.ndarray:
        g = self.graph
        lo, hi = int(g.offsets[g.target]), int(g.offsets[g.target + 1])
        a = self.state.amp_R[lo:hi]
        return a * a

    def measure(self, rng) -> tuple[bool, int | None]:
        """Born-sample the payload location; success iff it is at ``target``.

        Returns the success flag and, on success, the port of ``target`` whose
        register holds the payload.
        """
        st = self.state
        probs = np.concatenate([st.amp_R * st.amp_R, st.amp_E * st.amp_E])
        probs /= probs.sum()
        k = int(as_generator(rng).choice(probs.size, p=probs))
        if k >= st.amp_R.size:
            return False, None
        g = self.graph
        if int(g.tails[k]) != g.target:
            return False, None
        return True, g.port_of_arc(k)


def run_distqwalk_register(graph: PortGraph, T: int, b: int, rng) -> RunOutcome:
    """Full register-level run of ``DistQWalk(T)`` with payload of ``b`` qubits."""
    if T < 0:
        raise ValueError("T must be >= 0")
    sim = RegisterSimulator(graph, b)
    sim.prepare()
    for _ in range(T):
        sim.run_round()
    p = float(sim.target_distribution().sum())
    ok, port = sim.measure(rng)
    return RunOutcome(
        success=ok,
        rounds=T,
        total_cost=sim.ledger.total,
        success_probability=p,
        received_port=port,
        ledger=sim.ledger,
        final_T=T,
    )


def run_distqwalk_fast(graph: PortGraph, T: int, b: int, rng, p: float | None = None) -> RunOutcome:
    """``DistQWalk(T)`` via the arc-level walk.

    ``p`` may carry a precomputed hitting probability ``p(T)``.
    """
    if T < 0:
        raise ValueError("T must be >= 0")
    if b < 1:
        raise ValueError("payload needs at least one bit")
    if p is None:
        p = float(sweep_T(graph, T, T).p[0])
    gen = as_generator(rng)
    ok = bool(gen.random() < p)
    port = _sample_target_port(graph, T, gen) if ok else None
    ledger = RoundLedger(QUANTUM, [b + 1] * T)
    return RunOutcome(
        success=ok,
        rounds=T,
        total_cost=ledger.total,
        success_probability=p,
        received_port=port,
        ledger=ledger,
        final_T=T,
    )


def _sample_target_port(graph: PortGraph, T: int, gen: np.random.Generator) -> int:
    g = graph
    lo, hi = int(g.offsets[g.target]), int(g.offsets[g.target + 1])
    w = step(initial_state(g), T).amp[lo:hi] ** 2
    return int(gen.choice(hi - lo, p=w / w.sum())) + 1


def traversal_plan(n: int, epsilon: float, range_log_base=2, eps_log_base="e") -> tuple[range, int]:
    """Outer ``T`` range and inner repetition count of ``Traversal(n, eps)``."""
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    lo, hi = hitting_range(n, range_log_base)
    reps = ceil_tol(20 * n * math.log(1 / epsilon, resolve_log_base(eps_log_base)))
    return range(lo, hi + 1), reps


def traversal_worst_case_calls(n: int, epsilon: float, range_log_base=2, eps_log_base="e") -> int:
    Ts, reps = traversal_plan(n, epsilon, range_log_base, eps_log_base)
    return len(Ts) * reps


def run_traversal(
    graph: PortGraph,
    n: int,
    epsilon: float,
    b: int,
    rng,
    backend: str = "fast",
    range_log_base=2,
    eps_log_base="e",
) -> RunOutcome:
    """Repeat ``DistQWalk(T)`` over the ``T`` range until ``target`` succeeds.

    Each call starts from a fresh copy of the payload; cost is ``(b+1) * T``
    per executed call.  Termination-signal traffic is not charged.
    """
    Ts, reps = traversal_plan(n, epsilon, range_log_base, eps_log_base)
    gen = as_generator(rng)
    calls = 0
    rounds = 0
    if backend == "fast":
        if len(Ts):
            sw = sweep_T(graph, Ts.start, Ts.stop - 1)
            probs = dict(zip(sw.T.tolist(), sw.p.tolist()))
        for T in Ts:
            # first success among this T's repetitions, one uniform per call
            hits = np.flatnonzero(gen.random(reps) < probs[T])
            k = int(hits[0]) + 1 if hits.size else reps
            calls += k
            rounds += k * T
            if hits.size:
                port = _sample_target_port(graph, T, gen)
                return RunOutcome(True, rounds, (b + 1) * rounds, calls, probs[T], port, None, T)
    elif backend == "register":
        for T in Ts:
            for _ in range(reps):
                out = run_distqwalk_register(graph, T, b, gen)
                calls += 1
                rounds += T
                if out.success:
                    return RunOutcome(True, rounds, (b + 1) * rounds, calls, out.success_probability, out.received_port, None, T)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return RunOutcome(False, rounds, (b + 1) * rounds, calls, None, None, None, Ts[-1] if len(Ts) else None)
