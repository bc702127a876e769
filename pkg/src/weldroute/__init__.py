"""Quantum-vs-classical message complexity of routing on welded trees.

Exact simulation of the distributed Grover walk (``DistQWalk`` / ``Traversal``)
with qubit ledgers, a flooding baseline, and Monte Carlo engines for the
classical exploration / tree-embedding games.
"""

from weldroute.weldedgraph import (
    BOTTOM,
    OracleAnswer,
    PortGraph,
    WeldedTreesInstance,
    build_instance,
    column_of,
    deserialize,
    oracle_query,
    serialize,
)

__all__ = [
    "BOTTOM",
    "OracleAnswer",
    "PortGraph",
    "WeldedTreesInstance",
    "build_instance",
    "column_of",
    "deserialize",
    "oracle_query",
    "serialize",
]

__version__ = "0.1.0"
