"""Descriptive statistics of the local indices, grouped by user type.

Counts and conditional summaries follow the reporting convention of the
evaluation protocol: equality counts (single partner, one transaction,
minimum sell probability, ...) are decided on exact rationals, and each
block is conditioned on the subpopulation where the index is defined.
"""
from __future__ import annotations

import statistics
from dataclasses import dataclass
from fractions import Fraction

from .features import LocalIndices
from .graph import TransactionGraph, extract_egonet
from .features import compute_indices


@dataclass(frozen=True)
class TypeStats:
    """Summary of one user type. Conditional summaries are None when the
    conditioning set is empty."""

    user_type: str
    total: int
    # degree block
    deg1: int
    deg_ge2: int
    deg_ge2_mean: float | None
    deg_ge2_median: float | None
    # strength block
    str1: int
    str_ge2: int
    str_ge2_mean: float | None
    str_ge2_median: float | None
    # transactions per partner, conditioned on strength >= 2
    txpp1: int
    txpp_gt1_mean: float | None
    txpp_gt1_median: float | None
    # sell probability, conditioned on degree >= 2
    sp1: int
    sp_min: int
    # weighted sell probability, conditioned on strength >= 2
    wsp1: int
    wsp_min: int
    # clustering, conditioned on degree >= 2
    c0: int
    c_pos_mean: float | None
    c_pos_median: float | None
    # triangle overlap, conditioned on >= 2 triangles
    tr_ge2: int
    m0: int
    m1: int
    m_pos_mean: float | None
    m_pos_median: float | None
    # cycle fraction, conditioned on >= 1 directed triangle
    ffcy_ge1: int
    cyp0: int
    cyp_pos_mean: float | None
    cyp_pos_median: float | None

    def fraction(self, name: str) -> float:
        """Tracked count as a fraction of its conditioning base."""
        bases = {
            "deg1": self.total, "str1": self.total,
            "txpp1": self.str_ge2,
            "sp1": self.deg_ge2, "sp_min": self.deg_ge2,
            "wsp1": self.str_ge2, "wsp_min": self.str_ge2,
            "c0": self.deg_ge2,
            "m0": self.tr_ge2, "m1": self.tr_ge2,
            "cyp0": self.ffcy_ge1,
        }
        base = bases[name]
        return getattr(self, name) / base if base else 0.0


def _mean_median(values) -> tuple[float | None, float | None]:
    if not values:
        return None, None
    return float(statistics.fmean(values)), float(statistics.median(values))


def collect_type_stats(user_type: str, indices: list[LocalIndices]) -> TypeStats:
    deg_ge2 = [ix.degree for ix in indices if ix.degree >= 2]
    str_ge2 = [ix.strength for ix in indices if ix.strength >= 2]
    txpp_cond = [ix.tx_per_partner for ix in indices if ix.strength >= 2]
    txpp_gt1 = [float(v) for v in txpp_cond if v > 1]
    sp_cond = [(ix.sell_prob, ix.degree) for ix in indices if ix.degree >= 2]
    wsp_cond = [(ix.weighted_sell_prob, ix.strength)
                for ix in indices if ix.strength >= 2]
    c_cond = [ix.clustering for ix in indices if ix.clustering is not None]
    c_pos = [float(c) for c in c_cond if c > 0]
    m_cond = [ix.triangle_overlap for ix in indices
              if ix.triangle_overlap is not None]
    m_pos = [float(m) for m in m_cond if m > 0]
    cyp_cond = [ix.cycle_fraction for ix in indices
                if ix.cycle_fraction is not None]
    cyp_pos = [float(v) for v in cyp_cond if v > 0]

    deg_mean, deg_median = _mean_median(deg_ge2)
    str_mean, str_median = _mean_median(str_ge2)
    txpp_mean, txpp_median = _mean_median(txpp_gt1)
    c_mean, c_median = _mean_median(c_pos)
    m_mean, m_median = _mean_median(m_pos)
    cyp_mean, cyp_median = _mean_median(cyp_pos)

    return TypeStats(
        user_type=user_type,
        total=len(indices),
        deg1=sum(1 for ix in indices if ix.degree == 1),
        deg_ge2=len(deg_ge2),
        deg_ge2_mean=deg_mean,
        deg_ge2_median=deg_median,
        str1=sum(1 for ix in indices if ix.strength == 1),
        str_ge2=len(str_ge2),
        str_ge2_mean=str_mean,
        str_ge2_median=str_median,
        txpp1=sum(1 for v in txpp_cond if v == 1),
        txpp_gt1_mean=txpp_mean,
        txpp_gt1_median=txpp_median,
        sp1=sum(1 for sp, _ in sp_cond if sp == 1),
        sp_min=sum(1 for sp, k in sp_cond if sp == Fraction(1, k)),
        wsp1=sum(1 for wsp, _ in wsp_cond if wsp == 1),
        wsp_min=sum(1 for wsp, s in wsp_cond if wsp == Fraction(1, s)),
        c0=sum(1 for c in c_cond if c == 0),
        c_pos_mean=c_mean,
        c_pos_median=c_median,
        tr_ge2=sum(1 for ix in indices if ix.triangles >= 2),
        m0=sum(1 for m in m_cond if m == 0),
        m1=sum(1 for m in m_cond if m == 1),
        m_pos_mean=m_mean,
        m_pos_median=m_median,
        ffcy_ge1=len(cyp_cond),
        cyp0=sum(1 for v in cyp_cond if v == 0),
        cyp_pos_mean=cyp_mean,
        cyp_pos_median=cyp_median,
    )


def indices_by_type(graph: TransactionGraph,
                    labels: dict[int, str]) -> dict[str, list[LocalIndices]]:
    """Compute indices for every labeled node, grouped by user type."""
    grouped: dict[str, list[LocalIndices]] = {}
    for node in sorted(labels):
        ego = extract_egonet(graph, node)
        grouped.setdefault(labels[node], []).append(compute_indices(ego))
    return grouped


def descriptive_stats(indices: dict[str, list[LocalIndices]]) -> list[TypeStats]:
    """One TypeStats per user type, in a stable order."""
    if not indices:
        raise ValueError("no labeled users to summarize")
    for user_type, rows in indices.items():
        if not rows:
            raise ValueError(f"user type {user_type!r} has no users")
    order = {"normal": 0, "fictive": 1, "underwear": 2, "medicine": 3, "weapon": 4}
    return [collect_type_stats(t, indices[t])
            for t in sorted(indices, key=lambda t: order.get(t, 99))]


# -- report formatting --------------------------------------------------------

def _count_pct(count: int, base: int) -> str:
    if base == 0:
        return "-"
    return f"{count} ({100.0 * count / base:.1f}%)"


def _num(x: float | None) -> str:
    if x is None:
        return "-"
    if x != 0 and abs(x) < 0.01:
        return f"{x:.3e}"
    return f"{x:.3f}".rstrip("0").rstrip(".")


def stats_table(stats: list[TypeStats]) -> str:
    """Human-readable summary table, one column per user type."""
    rows: list[tuple[str, list[str]]] = [
        ("total", [str(s.total) for s in stats]),
        ("degree = 1", [_count_pct(s.deg1, s.total) for s in stats]),
        ("mean(degree | >=2)", [_num(s.deg_ge2_mean) for s in stats]),
        ("median(degree | >=2)", [_num(s.deg_ge2_median) for s in stats]),
        ("strength = 1", [_count_pct(s.str1, s.total) for s in stats]),
        ("mean(strength | >=2)", [_num(s.str_ge2_mean) for s in stats]),
        ("median(strength | >=2)", [_num(s.str_ge2_median) for s in stats]),
        ("strength >= 2", [str(s.str_ge2) for s in stats]),
        ("tx/partner = 1", [_count_pct(s.txpp1, s.str_ge2) for s in stats]),
        ("mean(tx/partner | >1)", [_num(s.txpp_gt1_mean) for s in stats]),
        ("median(tx/partner | >1)", [_num(s.txpp_gt1_median) for s in stats]),
        ("degree >= 2", [str(s.deg_ge2) for s in stats]),
        ("sell prob = 1", [_count_pct(s.sp1, s.deg_ge2) for s in stats]),
        ("sell prob = 1/degree", [_count_pct(s.sp_min, s.deg_ge2) for s in stats]),
        ("w. sell prob = 1", [_count_pct(s.wsp1, s.str_ge2) for s in stats]),
        ("w. sell prob = 1/strength", [_count_pct(s.wsp_min, s.str_ge2) for s in stats]),
        ("clustering = 0", [_count_pct(s.c0, s.deg_ge2) for s in stats]),
        ("mean(clustering | >0)", [_num(s.c_pos_mean) for s in stats]),
        ("median(clustering | >0)", [_num(s.c_pos_median) for s in stats]),
        ("triangles >= 2", [str(s.tr_ge2) for s in stats]),
        ("tri overlap = 0", [_count_pct(s.m0, s.tr_ge2) for s in stats]),
        ("tri overlap = 1", [_count_pct(s.m1, s.tr_ge2) for s in stats]),
        ("mean(tri overlap | >0)", [_num(s.m_pos_mean) for s in stats]),
        ("median(tri overlap | >0)", [_num(s.m_pos_median) for s in stats]),
        ("directed triangles >= 1", [str(s.ffcy_ge1) for s in stats]),
        ("cycle frac = 0", [_count_pct(s.cyp0, s.ffcy_ge1) for s in stats]),
        ("mean(cycle frac | >0)", [_num(s.cyp_pos_mean) for s in stats]),
        ("median(cycle frac | >0)", [_num(s.cyp_pos_median) for s in stats]),
    ]
    headers = ["statistic"] + [s.user_type for s in stats]
    widths = [max(len(headers[0]), max(len(r[0]) for r in rows))]
    for col, _ in enumerate(stats):
        widths.append(max(len(headers[col + 1]),
                          max(len(r[1][col]) for r in rows)))
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for name, cells in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip([name] + cells, widths)))
    return "\n".join(lines) + "\n"


def stats_csv_rows(stats: list[TypeStats]) -> list[tuple[str, str, str]]:
    """Long-form (user_type, statistic, value) rows for machine use."""
    out: list[tuple[str, str, str]] = []
    for s in stats:
        for name in ("total", "deg1", "deg_ge2", "deg_ge2_mean", "deg_ge2_median",
                     "str1", "str_ge2", "str_ge2_mean", "str_ge2_median",
                     "txpp1", "txpp_gt1_mean", "txpp_gt1_median",
                     "sp1", "sp_min", "wsp1", "wsp_min",
                     "c0", "c_pos_mean", "c_pos_median",
                     "tr_ge2", "m0", "m1", "m_pos_mean", "m_pos_median",
                     "ffcy_ge1", "cyp0", "cyp_pos_mean", "cyp_pos_median"):
            val = getattr(s, name)
            out.append((s.user_type, name,
                        "" if val is None else format(val, ".17g")))
        for frac in ("deg1", "str1", "txpp1", "sp1", "sp_min", "wsp1",
                     "wsp_min", "c0", "m0", "m1", "cyp0"):
            out.append((s.user_type, f"{frac}_fraction",
                        format(s.fraction(frac), ".17g")))
    return out


# -- plot-ready point sets -----------------------------------------------------

def survival_points(values) -> list[tuple[float, float]]:
    """(v, fraction of values strictly greater than v) at each distinct v."""
    vals = sorted(float(v) for v in values)
    n = len(vals)
    points: list[tuple[float, float]] = []
    i = 0
    while i < n:
        j = i
        while j < n and vals[j] == vals[i]:
            j += 1
        points.append((vals[i], (n - j) / n))
        i = j
    return points


def survival_sets(indices: list[LocalIndices]) -> dict[str, list[tuple[float, float]]]:
    """Named survival-probability point sets for one user type."""

    def pick(transform, predicate):
        return [transform(ix) for ix in indices if predicate(ix)]

    sets = {
        "degree_all": pick(lambda ix: ix.degree, lambda ix: True),
        "degree_ge2": pick(lambda ix: ix.degree, lambda ix: ix.degree >= 2),
        "strength_all": pick(lambda ix: ix.strength, lambda ix: True),
        "strength_ge2": pick(lambda ix: ix.strength, lambda ix: ix.strength >= 2),
        "tx_per_partner_all": pick(lambda ix: float(ix.tx_per_partner), lambda ix: True),
        "tx_per_partner_gt1": pick(lambda ix: float(ix.tx_per_partner),
                                   lambda ix: ix.tx_per_partner > 1),
        "clustering_def": pick(lambda ix: float(ix.clustering),
                               lambda ix: ix.clustering is not None),
        "clustering_pos": pick(lambda ix: float(ix.clustering),
                               lambda ix: ix.clustering is not None and ix.clustering > 0),
        "tri_overlap_def": pick(lambda ix: float(ix.triangle_overlap),
                                lambda ix: ix.triangle_overlap is not None),
        "tri_overlap_pos": pick(lambda ix: float(ix.triangle_overlap),
                                lambda ix: ix.triangle_overlap is not None
                                and ix.triangle_overlap > 0),
        "cycle_frac_def": pick(lambda ix: float(ix.cycle_fraction),
                               lambda ix: ix.cycle_fraction is not None),
        "cycle_frac_pos": pick(lambda ix: float(ix.cycle_fraction),
                               lambda ix: ix.cycle_fraction is not None
                               and ix.cycle_fraction > 0),
    }
    return {name: survival_points(vals) for name, vals in sets.items() if vals}


def scatter_sets(indices: list[LocalIndices]) -> dict[str, list[tuple[float, float]]]:
    """Named (x, y) point sets relating pairs of indices."""
    out: dict[str, list[tuple[float, float]]] = {
        "degree_vs_sell_prob": [(ix.degree, float(ix.sell_prob)) for ix in indices],
        "strength_vs_w_sell_prob": [(ix.strength, float(ix.weighted_sell_prob))
                                    for ix in indices],
        "strength_vs_tri_overlap": [(ix.strength, float(ix.triangle_overlap))
                                    for ix in indices
                                    if ix.triangle_overlap is not None],
        "w_sell_prob_vs_tri_overlap": [(float(ix.weighted_sell_prob),
                                        float(ix.triangle_overlap))
                                       for ix in indices
                                       if ix.triangle_overlap is not None],
        "clustering_vs_tri_overlap": [(float(ix.clustering),
                                       float(ix.triangle_overlap))
                                      for ix in indices
                                      if ix.clustering is not None
                                      and ix.triangle_overlap is not None],
    }
    return {name: pts for name, pts in out.items() if pts}
