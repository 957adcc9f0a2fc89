"""Directed, weighted transaction graphs and egocentric subgraph extraction.

Nodes are opaque non-negative integers. An edge ``seller -> buyer`` carries an
integer weight equal to the number of attempted transactions between the pair
in that direction. Reciprocal edges (``u -> v`` and ``v -> u``) are distinct.
Graphs are immutable once built; concurrent read access is safe.
"""
from __future__ import annotations

from collections.abc import Iterable, Iterator
from dataclasses import dataclass
from typing import NamedTuple

USER_TYPES = ("normal", "fictive", "underwear", "medicine", "weapon")
FRAUD_TYPES = USER_TYPES[1:]


class GraphError(ValueError):
    """Malformed graph input or an invalid graph query."""


class TransactionGraph:
    """Adjacency-backed directed multigraph with integer edge weights.

    Membership queries (``has_edge``, neighbor lookups) are average O(1),
    which keeps neighbor-pair triangle checks at O(k^2) per node.
    """

    __slots__ = ("_nodes", "_out", "_in")

    def __init__(self, nodes: set[int], out_adj: dict[int, dict[int, int]],
                 in_adj: dict[int, set[int]]):
        self._nodes = nodes
        self._out = out_adj
        self._in = in_adj

    # -- queries ----------------------------------------------------------

    @property
    def nodes(self) -> set[int]:
        return self._nodes

    @property
    def num_nodes(self) -> int:
        return len(self._nodes)

    @property
    def num_edges(self) -> int:
        return sum(len(nbrs) for nbrs in self._out.values())

    def __contains__(self, node: int) -> bool:
        return node in self._nodes

    def out_edges(self, node: int) -> dict[int, int]:
        """Weighted out-adjacency of ``node`` (do not mutate)."""
        return self._out.get(node, _EMPTY_DICT)

    def out_neighbors(self, node: int) -> Iterable[int]:
        return self._out.get(node, _EMPTY_DICT).keys()

    def in_neighbors(self, node: int) -> set[int]:
        return self._in.get(node, _EMPTY_SET)

    def neighbors(self, node: int) -> set[int]:
        """All nodes adjacent to ``node`` in either direction."""
        if node not in self._nodes:
            raise GraphError(f"unknown node {node}")
        return set(self._out.get(node, _EMPTY_DICT)) | self._in.get(node, _EMPTY_SET)

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._out.get(u, _EMPTY_DICT)

    def weight(self, u: int, v: int) -> int:
        """Weight of the directed edge ``u -> v`` (0 if absent)."""
        return self._out.get(u, _EMPTY_DICT).get(v, 0)

    def edge_records(self) -> Iterator[tuple[int, int, int]]:
        """All edges as (seller, buyer, weight), sorted for stable output."""
        for u in sorted(self._out):
            out = self._out[u]
            for v in sorted(out):
                yield u, v, out[v]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TransactionGraph):
            return NotImplemented
        return self._nodes == other._nodes and self._out == other._out


_EMPTY_DICT: dict[int, int] = {}
_EMPTY_SET: set[int] = set()


@dataclass(frozen=True)
class EgoNetwork:
    """A focal node, its neighbors, and all edges among those members."""

    focal: int
    graph: TransactionGraph

    @property
    def members(self) -> set[int]:
        return self.graph.nodes

    @property
    def neighbors(self) -> set[int]:
        return self.graph.nodes - {self.focal}


class IncidentDegrees(NamedTuple):
    k: int       # distinct neighbors
    k_in: int    # neighbors the focal bought from
    k_out: int   # neighbors the focal sold to
    s: int       # total incident transaction count
    s_in: int
    s_out: int


def load_graph(edge_records: Iterable[tuple[int, int, int]]) -> TransactionGraph:
    """Build a graph from (seller, buyer, weight) records.

    Duplicate (seller, buyer) records merge by summing weights, consistent
    with weights counting attempted transactions. Self-loops and
    non-positive weights are rejected with the offending record number.
    """
    nodes: set[int] = set()
    out_adj: dict[int, dict[int, int]] = {}
    in_adj: dict[int, set[int]] = {}
    for lineno, record in enumerate(edge_records, start=1):
        try:
            seller, buyer, weight = record
        except (TypeError, ValueError):
            raise GraphError(f"record {lineno}: expected (seller, buyer, weight), got {record!r}")
        _check_record(seller, buyer, weight, f"record {lineno}")
        _add_edge(nodes, out_adj, in_adj, seller, buyer, weight)
    return TransactionGraph(nodes, out_adj, in_adj)


def _check_record(seller: int, buyer: int, weight: int, where: str) -> None:
    if not (isinstance(seller, int) and isinstance(buyer, int) and isinstance(weight, int)):
        raise GraphError(f"{where}: ids and weight must be integers")
    if seller < 0 or buyer < 0:
        raise GraphError(f"{where}: negative node id")
    if seller == buyer:
        raise GraphError(f"{where}: self-loop on node {seller}")
    if weight < 1:
        raise GraphError(f"{where}: weight must be >= 1, got {weight}")


def _add_edge(nodes: set[int], out_adj: dict[int, dict[int, int]],
              in_adj: dict[int, set[int]], seller: int, buyer: int, weight: int) -> None:
    nodes.add(seller)
    nodes.add(buyer)
    row = out_adj.setdefault(seller, {})
    row[buyer] = row.get(buyer, 0) + weight
    in_adj.setdefault(buyer, set()).add(seller)


def load_edge_file(path) -> TransactionGraph:
    """Load a graph from a ``seller_id,buyer_id,weight`` text file.

    A header line is detected by a non-numeric first field and skipped.
    Parse errors carry the file line number.
    """
    nodes: set[int] = set()
    out_adj: dict[int, dict[int, int]] = {}
    in_adj: dict[int, set[int]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if lineno == 1 and parts and not _is_int(parts[0]):
                continue  # header
            if len(parts) != 3:
                raise GraphError(f"{path}:{lineno}: expected 3 comma-separated fields")
            if not all(_is_int(p) for p in parts):
                raise GraphError(f"{path}:{lineno}: non-integer field in {line!r}")
            seller, buyer, weight = (int(p) for p in parts)
            _check_record(seller, buyer, weight, f"{path}:{lineno}")
            _add_edge(nodes, out_adj, in_adj, seller, buyer, weight)
    return TransactionGraph(nodes, out_adj, in_adj)


def write_edge_file(graph: TransactionGraph, path) -> None:
    """Write the canonical edge-list file; round-trips through load_edge_file."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("seller_id,buyer_id,weight\n")
        for u, v, w in graph.edge_records():
            fh.write(f"{u},{v},{w}\n")


def load_label_file(path) -> dict[int, str]:
    """Load ``node_id,user_type`` labels; user types are validated."""
    labels: dict[int, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if lineno == 1 and parts and not _is_int(parts[0]):
                continue  # header
            if len(parts) != 2:
                raise GraphError(f"{path}:{lineno}: expected 2 comma-separated fields")
            node_field, user_type = parts[0].strip(), parts[1].strip()
            if not _is_int(node_field):
                raise GraphError(f"{path}:{lineno}: non-integer node id {node_field!r}")
            if user_type not in USER_TYPES:
                raise GraphError(
                    f"{path}:{lineno}: unknown user type {user_type!r}; "
                    f"expected one of {', '.join(USER_TYPES)}")
            labels[int(node_field)] = user_type
    return labels


def write_label_file(labels: dict[int, str], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("node_id,user_type\n")
        for node in sorted(labels):
            fh.write(f"{node},{labels[node]}\n")


def _is_int(text: str) -> bool:
    text = text.strip()
    if text.startswith(("-", "+")):
        text = text[1:]
    return text.isdigit()


def extract_egonet(graph: TransactionGraph, focal: int) -> EgoNetwork:
    """Induced subgraph on the focal node and its neighbors.

    The parent graph is left untouched. Isolated nodes are rejected: every
    sampled user took part in at least one transaction.
    """
    if focal not in graph:
        raise GraphError(f"unknown node {focal}")
    neighbors = graph.neighbors(focal)
    if not neighbors:
        raise GraphError(f"node {focal} has no incident edges")
    members = neighbors | {focal}
    nodes: set[int] = set(members)
    out_adj: dict[int, dict[int, int]] = {}
    in_adj: dict[int, set[int]] = {}
    for a in members:
        out = graph.out_edges(a)
        if len(out) <= len(members):
            picks = [(b, w) for b, w in out.items() if b in members]
        else:
            picks = [(b, out[b]) for b in members if b in out]
        for b, w in picks:
            out_adj.setdefault(a, {})[b] = w
            in_adj.setdefault(b, set()).add(a)
    return EgoNetwork(focal=focal, graph=TransactionGraph(nodes, out_adj, in_adj))


def incident_degrees(ego: EgoNetwork) -> IncidentDegrees:
    """Degree and strength of the focal node, split by edge direction.

    A reciprocal neighbor counts once toward ``k`` but contributes one to
    both ``k_in`` and ``k_out``, so ``k <= k_in + k_out <= 2k``.
    """
    g = ego.graph
    focal = ego.focal
    out = g.out_edges(focal)
    in_nbrs = g.in_neighbors(focal)
    k_out = len(out)
    k_in = len(in_nbrs)
    k = len(set(out) | in_nbrs)
    s_out = sum(out.values())
    s_in = sum(g.weight(v, focal) for v in in_nbrs)
    return IncidentDegrees(k=k, k_in=k_in, k_out=k_out, s=s_in + s_out, s_in=s_in, s_out=s_out)
