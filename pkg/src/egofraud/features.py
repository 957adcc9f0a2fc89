"""Local network indices of a focal user and their fixed 12-slot encoding.

All indices are computed in exact rational arithmetic; floats appear only in
the emitted feature vector. The slot layout is a compatibility contract:

    0   1 if degree == 1 else 0
    1   1 if strength == 1 else 0
    2   transactions per trading partner (strength / degree, >= 1)
    3   1 if sell probability == 1
    4   1 if sell probability == 1/degree (its minimum for a seller)
    5   sell probability (out-degree / (in-degree + out-degree))
    6   1 if weighted sell probability == 1
    7   1 if weighted sell probability == 1/strength (exactly one sale)
    8   weighted sell probability (out-strength / strength)
    9   local clustering coefficient, -1 when degree == 1
    10  triangle overlap (share of triangle pairs at the focal node that
        share a second node), -1 when fewer than two triangles
    11  cycle fraction (cyclic / (cyclic + feedforward) directed triangles
        at the focal node), -1 when there is no directed triangle

Binary slots 0/1/3/4/6/7 are decided on exact rationals, never on floats.
Undefined triangle indices encode as the -1 sentinel.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

from .graph import (EgoNetwork, GraphError, TransactionGraph, extract_egonet,
                    incident_degrees)

SLOT_NAMES = (
    "deg_eq_1",
    "str_eq_1",
    "tx_per_partner",
    "sell_prob_eq_1",
    "sell_prob_min",
    "sell_prob",
    "w_sell_prob_eq_1",
    "w_sell_prob_min",
    "w_sell_prob",
    "clustering",
    "tri_overlap",
    "cycle_frac",
)

#: Feature subsets used by the ablation experiments. ``no-triangle9`` keeps
#: only slots computable from the focal node's own edges; the ``no-degree``
#: variants drop the two degree/strength binaries (slots 0 and 1).
FEATURE_SUBSETS: dict[str, tuple[int, ...]] = {
    "all12": tuple(range(12)),
    "no-triangle9": tuple(range(9)),
    "no-degree10": tuple(range(2, 12)),
    "no-degree-no-triangle7": tuple(range(2, 9)),
}


@dataclass(frozen=True)
class LocalIndices:
    """The eight local indices (plus their integer building blocks).

    ``clustering``, ``triangle_overlap`` and ``cycle_fraction`` are ``None``
    when undefined; downstream encoding maps that to the -1 sentinel.
    """

    degree: int
    in_degree: int
    out_degree: int
    strength: int
    in_strength: int
    out_strength: int
    tx_per_partner: Fraction
    sell_prob: Fraction
    weighted_sell_prob: Fraction
    clustering: Fraction | None
    triangles: int
    triangle_overlap: Fraction | None
    feedforward: int
    cyclic: int
    cycle_fraction: Fraction | None


@dataclass(frozen=True)
class FeatureVector:
    """One user's encoded feature row."""

    node_id: int
    user_type: str
    slots: tuple[float, ...]

    @property
    def label(self) -> int:
        """1 for any fraud type, 0 for a normal user."""
        return 0 if self.user_type == "normal" else 1


def sell_probability(ego: EgoNetwork) -> Fraction:
    """Share of the focal node's directed relations where it is the seller.

    A reciprocal neighbor contributes to both in- and out-degree, so the
    denominator is ``in_degree + out_degree`` rather than the plain degree.
    """
    deg = incident_degrees(ego)
    total = deg.k_in + deg.k_out
    if total == 0:
        raise GraphError(f"sell probability undefined for isolated node {ego.focal}")
    return Fraction(deg.k_out, total)


def weighted_sell_probability(ego: EgoNetwork) -> Fraction:
    """Share of the focal node's transactions where it is the seller."""
    deg = incident_degrees(ego)
    if deg.s == 0:
        raise GraphError(f"weighted sell probability undefined for node {ego.focal}")
    return Fraction(deg.s_out, deg.s)


def local_clustering(ego: EgoNetwork) -> tuple[Fraction | None, int]:
    """(clustering coefficient, triangle count) on the undirected projection.

    Reciprocal edges collapse to one undirected edge. The coefficient is
    undefined (None) when the focal node has a single neighbor.
    """
    pairs = _connected_neighbor_pairs(ego)
    return _clustering_from_pairs(ego, pairs)


def triangle_congregation(ego: EgoNetwork) -> Fraction | None:
    """Share of focal-triangle pairs that share a second node.

    Undefined (None) with fewer than two triangles.
    """
    return _overlap_from_pairs(_connected_neighbor_pairs(ego))


def cycle_probability(ego: EgoNetwork) -> tuple[Fraction | None, int, int]:
    """(cycle fraction, feedforward count, cyclic count) at the focal node.

    Directed triangles are counted as distinct three-edge subsets over node
    triples containing the focal node, so a triple with reciprocal edges can
    contribute several triangles. Edge weights are ignored. The fraction is
    undefined (None) when no directed triangle exists.
    """
    ff, cy = _directed_triangles_from_pairs(ego, _connected_neighbor_pairs(ego))
    if ff + cy == 0:
        return None, ff, cy
    return Fraction(cy, ff + cy), ff, cy


def compute_indices(ego: EgoNetwork) -> LocalIndices:
    """All eight indices for the focal node, sharing one triangle scan."""
    deg = incident_degrees(ego)
    pairs = _connected_neighbor_pairs(ego)
    clustering, triangles = _clustering_from_pairs(ego, pairs)
    overlap = _overlap_from_pairs(pairs)
    ff, cy = _directed_triangles_from_pairs(ego, pairs)
    return LocalIndices(
        degree=deg.k,
        in_degree=deg.k_in,
        out_degree=deg.k_out,
        strength=deg.s,
        in_strength=deg.s_in,
        out_strength=deg.s_out,
        tx_per_partner=Fraction(deg.s, deg.k),
        sell_prob=Fraction(deg.k_out, deg.k_in + deg.k_out),
        weighted_sell_prob=Fraction(deg.s_out, deg.s),
        clustering=clustering,
        triangles=triangles,
        triangle_overlap=overlap,
        feedforward=ff,
        cyclic=cy,
        cycle_fraction=Fraction(cy, ff + cy) if ff + cy else None,
    )


def _connected_neighbor_pairs(ego: EgoNetwork) -> set[tuple[int, int]]:
    """Unordered neighbor pairs joined by an edge in either direction."""
    g = ego.graph
    focal = ego.focal
    pairs: set[tuple[int, int]] = set()
    for a in ego.neighbors:
        for b in g.out_neighbors(a):
            if b != focal:
                pairs.add((a, b) if a < b else (b, a))
    return pairs


def _clustering_from_pairs(ego: EgoNetwork,
                           pairs: set[tuple[int, int]]) -> tuple[Fraction | None, int]:
    k = len(ego.neighbors)
    tr = len(pairs)
    if k < 2:
        return None, tr
    return Fraction(tr, k * (k - 1) // 2), tr


def _overlap_from_pairs(pairs: set[tuple[int, int]]) -> Fraction | None:
    tr = len(pairs)
    if tr < 2:
        return None
    # Two distinct focal triangles share at most one non-focal node, so
    # summing C(appearances, 2) per node counts each sharing pair once.
    appearances = Counter()
    for a, b in pairs:
        appearances[a] += 1
        appearances[b] += 1
    shared = sum(n * (n - 1) // 2 for n in appearances.values())
    return Fraction(shared, tr * (tr - 1) // 2)


def _directed_triangles_from_pairs(ego: EgoNetwork,
                                   pairs: set[tuple[int, int]]) -> tuple[int, int]:
    g = ego.graph
    f = ego.focal
    ff = 0
    cy = 0
    for a, b in pairs:
        fa = g.has_edge(f, a)
        af = g.has_edge(a, f)
        fb = g.has_edge(f, b)
        bf = g.has_edge(b, f)
        ab = g.has_edge(a, b)
        ba = g.has_edge(b, a)
        cy += (fa and ab and bf) + (fb and ba and af)
        ff += ((fa and ab and fb) + (fb and ba and fa)
               + (af and fb and ab) + (ab and bf and af)
               + (bf and fa and ba) + (ba and af and bf))
    return ff, cy


def encode_slots(ix: LocalIndices) -> tuple[float, ...]:
    """The 12 slots for one user; equality slots decided on exact rationals."""
    return (
        1.0 if ix.degree == 1 else 0.0,
        1.0 if ix.strength == 1 else 0.0,
        float(ix.tx_per_partner),
        1.0 if ix.sell_prob == 1 else 0.0,
        1.0 if ix.sell_prob == Fraction(1, ix.degree) else 0.0,
        float(ix.sell_prob),
        1.0 if ix.weighted_sell_prob == 1 else 0.0,
        1.0 if ix.weighted_sell_prob == Fraction(1, ix.strength) else 0.0,
        float(ix.weighted_sell_prob),
        float(ix.clustering) if ix.clustering is not None else -1.0,
        float(ix.triangle_overlap) if ix.triangle_overlap is not None else -1.0,
        float(ix.cycle_fraction) if ix.cycle_fraction is not None else -1.0,
    )


def encode_features(ix: LocalIndices, node_id: int, user_type: str) -> FeatureVector:
    return FeatureVector(node_id=node_id, user_type=user_type, slots=encode_slots(ix))


def select_features(slots, subset: str) -> tuple[float, ...]:
    """Project a 12-slot vector onto a named subset, preserving slot order."""
    try:
        keep = FEATURE_SUBSETS[subset]
    except KeyError:
        raise ValueError(f"unknown feature subset {subset!r}; "
                         f"expected one of {', '.join(FEATURE_SUBSETS)}") from None
    return tuple(slots[i] for i in keep)


def subset_slot_names(subset: str) -> tuple[str, ...]:
    return tuple(SLOT_NAMES[i] for i in FEATURE_SUBSETS[subset])


def build_feature_table(graph: TransactionGraph, labels: dict[int, str]) -> list[FeatureVector]:
    """Compute feature vectors for every labeled node, sorted by node id."""
    rows: list[FeatureVector] = []
    for node in sorted(labels):
        if node not in graph:
            raise GraphError(f"labeled node {node} is not present in the graph")
        ego = extract_egonet(graph, node)
        rows.append(encode_features(compute_indices(ego), node, labels[node]))
    return rows


def write_feature_table(rows: list[FeatureVector], path) -> None:
    """Write ``node_id,user_type,f0..f11`` with 17-significant-digit reals."""
    header = "node_id,user_type," + ",".join(f"f{i}" for i in range(12))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row in rows:
            slots = ",".join(format(x, ".17g") for x in row.slots)
            fh.write(f"{row.node_id},{row.user_type},{slots}\n")


def read_feature_table(path) -> list[FeatureVector]:
    rows: list[FeatureVector] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if lineno == 1 and not _looks_numeric(parts[0]):
                continue  # header
            if len(parts) != 14:
                raise GraphError(f"{path}:{lineno}: expected 14 fields, got {len(parts)}")
            try:
                node_id = int(parts[0])
                slots = tuple(float(p) for p in parts[2:])
            except ValueError as exc:
                raise GraphError(f"{path}:{lineno}: {exc}") from None
            rows.append(FeatureVector(node_id=node_id, user_type=parts[1], slots=slots))
    return rows


def _looks_numeric(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True
