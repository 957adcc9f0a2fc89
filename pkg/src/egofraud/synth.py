"""Synthetic labeled transaction graphs with calibrated per-type statistics.

Real marketplace data is proprietary, so experiments run on generated
graphs. Construction is egocentric: each labeled focal user gets a private
set of anonymous trading partners, per-partner directions and transaction
counts drawn from its archetype, and partner-partner edges wired at the
configured density and cycle propensity. Only focal users are labeled, so
their egonets are exactly the structures the feature code sees.

Archetype parameters split into calibration targets (checked by
``validate``) and mechanism knobs (tuned so generated data hits those
targets). Degree, per-partner transaction surplus and clustering are
log-normal, parameterized in closed form from their target mean/median
pairs; a correlation between degree and surplus reproduces the target mean
strength. Generation is deterministic per (config, seed): every user has
its own derived random stream.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
import yaml

from .evaluation import derive_seed
from .graph import FRAUD_TYPES, USER_TYPES, TransactionGraph
from .stats import TypeStats, collect_type_stats, indices_by_type

_ROLE_OUT = 0
_ROLE_IN = 1
_ROLE_RECIPROCAL = 2

_TAG_USER = 11


class InfeasibleConfigError(ValueError):
    """Archetype targets that no generated population can satisfy."""


def _lognormal_params(mean: float, median: float, what: str) -> tuple[float, float]:
    """(mu, sigma) of a log-normal from its mean and median."""
    if median <= 0 or mean <= 0:
        raise InfeasibleConfigError(f"{what}: mean and median must be positive")
    if mean < median:
        raise InfeasibleConfigError(
            f"{what}: mean {mean} below median {median}; no log-normal fits")
    return math.log(median), math.sqrt(2.0 * math.log(mean / median))


@dataclass(frozen=True)
class ArchetypeConfig:
    """Targets and mechanism knobs for one user type."""

    user_type: str
    n_users: int
    fraud: bool
    # -- calibration targets ------------------------------------------------
    single_partner_share: float       # users with exactly one partner
    single_partner_single_sale: bool  # those users sold exactly once
    degree_mean: float                # partners, among multi-partner users
    degree_median: float
    strength_mean: float              # transactions, among strength >= 2
    strength_median: float
    uniform_weight_share: float       # one tx per partner, among strength >= 2
    txpp_mean: float                  # tx per partner, among values > 1
    txpp_median: float
    exclusive_seller_share: float     # sell-only users, among multi-partner
    single_sale_share: float          # one sale relation, among multi-partner
    triangle_free_share: float        # no connected partner pair, among multi-partner
    clustering_mean: float            # clustering, among trianglepositive users
    clustering_median: float
    cycle_zero_share: float           # no cyclic triangle, among triangle users
    cycle_frac_median: float          # cycle fraction, among values > 0
    # -- mechanism knobs ------------------------------------------------------
    reciprocal_rate: float            # chance a mixed user's partner trades both ways
    seller_lean_low: float            # per-user seller lean range for mixed users
    seller_lean_high: float
    triangle_attempt_share: float     # multi-partner users that try to place triangles
    cycle_propensity: float           # chance a partner edge is oriented into a cycle
    clustering_scale: float = 1.0     # counters censoring of small clustering draws
    surplus_scale: float = 1.0        # balances strength vs tx-per-partner medians
    degree_cap: int = 100_000

    def __post_init__(self):
        for name in ("single_partner_share", "uniform_weight_share",
                     "exclusive_seller_share", "single_sale_share",
                     "triangle_free_share", "cycle_zero_share",
                     "reciprocal_rate", "triangle_attempt_share",
                     "cycle_propensity"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InfeasibleConfigError(f"{self.user_type}: {name}={value} not in [0, 1]")
        if self.n_users < 1:
            raise InfeasibleConfigError(f"{self.user_type}: n_users must be >= 1")
        if self.exclusive_seller_share + self.single_sale_share > 1.0:
            raise InfeasibleConfigError(
                f"{self.user_type}: seller role shares exceed 1")
        if not 0.0 <= self.seller_lean_low < self.seller_lean_high <= 1.0:
            raise InfeasibleConfigError(f"{self.user_type}: bad seller lean range")
        if self.fraud and self.single_partner_single_sale and self.single_partner_share > 0:
            raise InfeasibleConfigError(
                f"{self.user_type}: fraud users need >= 2 transactions, but "
                "single-partner users are configured to sell exactly once")
        # log-normal feasibility (raises on mean < median)
        self._derived()

    def _derived(self) -> "_DerivedParams":
        mu_k, sigma_k = _lognormal_params(self.degree_mean, self.degree_median,
                                          f"{self.user_type} degree")
        mean_r = self.txpp_mean - 1.0
        median_r = self.txpp_median - 1.0
        mu_r, sigma_r = _lognormal_params(mean_r, median_r,
                                          f"{self.user_type} tx-per-partner surplus")
        mu_c, sigma_c = _lognormal_params(self.clustering_mean, self.clustering_median,
                                          f"{self.user_type} clustering")
        # Correlate degree and surplus so the mean strength comes out right:
        # E[strength | >=2] = E[k] + (1 - uniform_share) * E[k * r].
        multi_share = 1.0 - self.uniform_weight_share
        target_kr = (self.strength_mean - self.degree_mean) / multi_share
        if target_kr <= 0:
            raise InfeasibleConfigError(
                f"{self.user_type}: strength mean below degree mean")
        rho = math.log(target_kr / (self.degree_mean * mean_r)) / (sigma_k * sigma_r)
        if not -0.99 <= rho <= 0.99:
            raise InfeasibleConfigError(
                f"{self.user_type}: degree/strength/txpp targets need "
                f"correlation {rho:.2f}, outside (-0.99, 0.99)")
        return _DerivedParams(mu_k=mu_k, sigma_k=sigma_k, mu_r=mu_r,
                              sigma_r=sigma_r, rho=rho, mu_c=mu_c, sigma_c=sigma_c)


@dataclass(frozen=True)
class _DerivedParams:
    mu_k: float
    sigma_k: float
    mu_r: float
    sigma_r: float
    rho: float
    mu_c: float
    sigma_c: float


@dataclass(frozen=True)
class SynthConfig:
    archetypes: dict[str, ArchetypeConfig]

    def __post_init__(self):
        if not self.archetypes:
            raise InfeasibleConfigError("configuration defines no user types")
        for name in self.archetypes:
            if name not in USER_TYPES:
                raise InfeasibleConfigError(
                    f"unknown user type {name!r}; expected one of {', '.join(USER_TYPES)}")


@dataclass(frozen=True)
class LabeledDataset:
    graph: TransactionGraph
    labels: dict[int, str]
    seed: int
    config_hash: str


def config_hash(config: SynthConfig) -> str:
    payload = repr(sorted(
        (name, sorted(vars(arch).items())) for name, arch in config.archetypes.items()
    )).encode()
    return hashlib.blake2b(payload, digest_size=16).hexdigest()


# -- configuration file --------------------------------------------------------

_REQUIRED_KEYS = (
    "n_users", "single_partner_share", "degree_mean", "degree_median",
    "strength_mean", "strength_median", "uniform_weight_share",
    "txpp_mean", "txpp_median", "exclusive_seller_share", "single_sale_share",
    "triangle_free_share", "clustering_mean", "clustering_median",
    "cycle_zero_share", "cycle_frac_median", "reciprocal_rate",
    "triangle_attempt_share", "cycle_propensity",
)


def load_config(path) -> SynthConfig:
    """Load a YAML generator configuration (one section per user type)."""
    with open(path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    return parse_config(raw, where=str(path))


def parse_config(raw: dict, where: str = "config") -> SynthConfig:
    if not isinstance(raw, dict):
        raise InfeasibleConfigError(f"{where}: expected a mapping of user types")
    archetypes: dict[str, ArchetypeConfig] = {}
    for user_type, section in raw.items():
        if not isinstance(section, dict):
            raise InfeasibleConfigError(f"{where}: section {user_type!r} is not a mapping")
        missing = [key for key in _REQUIRED_KEYS if key not in section]
        if missing:
            raise InfeasibleConfigError(
                f"{where}: section {user_type!r} missing keys: {', '.join(missing)}")
        fraud = bool(section.get("fraud", user_type in FRAUD_TYPES))
        archetypes[user_type] = ArchetypeConfig(
            user_type=user_type,
            n_users=int(section["n_users"]),
            fraud=fraud,
            single_partner_share=float(section["single_partner_share"]),
            single_partner_single_sale=bool(
                section.get("single_partner_single_sale", not fraud)),
            degree_mean=float(section["degree_mean"]),
            degree_median=float(section["degree_median"]),
            strength_mean=float(section["strength_mean"]),
            strength_median=float(section["strength_median"]),
            uniform_weight_share=float(section["uniform_weight_share"]),
            txpp_mean=float(section["txpp_mean"]),
            txpp_median=float(section["txpp_median"]),
            exclusive_seller_share=float(section["exclusive_seller_share"]),
            single_sale_share=float(section["single_sale_share"]),
            triangle_free_share=float(section["triangle_free_share"]),
            clustering_mean=float(section["clustering_mean"]),
            clustering_median=float(section["clustering_median"]),
            cycle_zero_share=float(section["cycle_zero_share"]),
            cycle_frac_median=float(section["cycle_frac_median"]),
            reciprocal_rate=float(section["reciprocal_rate"]),
            seller_lean_low=float(section.get("seller_lean_low", 0.15)),
            seller_lean_high=float(section.get("seller_lean_high", 0.85)),
            triangle_attempt_share=float(section["triangle_attempt_share"]),
            cycle_propensity=float(section["cycle_propensity"]),
            clustering_scale=float(section.get("clustering_scale", 1.0)),
            surplus_scale=float(section.get("surplus_scale", 1.0)),
            degree_cap=int(section.get("degree_cap", 100_000)),
        )
    return SynthConfig(archetypes=archetypes)


def default_config_path():
    return resources.files("egofraud").joinpath("data/default_config.yaml")


def load_default_config() -> SynthConfig:
    with resources.as_file(default_config_path()) as path:
        return load_config(path)


# -- generation -----------------------------------------------------------------

@dataclass
class _UserDraw:
    """One focal user's egonet recipe before node ids are assigned."""

    roles: np.ndarray        # per-partner role codes
    sale_weight: np.ndarray  # focal -> partner transaction counts (0 if none)
    buy_weight: np.ndarray   # partner -> focal transaction counts
    pair_edges: list[tuple[int, int]]  # oriented partner-pair edges (local idx)


def generate(config: SynthConfig, seed: int) -> LabeledDataset:
    """Generate a labeled graph; deterministic per (config, seed)."""
    nodes: set[int] = set()
    out_adj: dict[int, dict[int, int]] = {}
    in_adj: dict[int, set[int]] = {}
    labels: dict[int, str] = {}
    next_id = 0

    def add_edge(u: int, v: int, w: int) -> None:
        nodes.add(u)
        nodes.add(v)
        row = out_adj.setdefault(u, {})
        row[v] = row.get(v, 0) + w
        in_adj.setdefault(v, set()).add(u)

    for type_index, user_type in enumerate(USER_TYPES):
        arch = config.archetypes.get(user_type)
        if arch is None:
            continue
        params = arch._derived()
        for user_index in range(arch.n_users):
            rng = np.random.default_rng(
                [seed, _TAG_USER, type_index, user_index])
            draw = _draw_user(arch, params, rng)
            focal = next_id
            next_id += 1
            labels[focal] = user_type
            k = len(draw.roles)
            partner_ids = list(range(next_id, next_id + k))
            next_id += k
            for i in range(k):
                if draw.sale_weight[i]:
                    add_edge(focal, partner_ids[i], int(draw.sale_weight[i]))
                if draw.buy_weight[i]:
                    add_edge(partner_ids[i], focal, int(draw.buy_weight[i]))
            for a, b in draw.pair_edges:
                add_edge(partner_ids[a], partner_ids[b], 1)

    graph = TransactionGraph(nodes, out_adj, in_adj)
    return LabeledDataset(graph=graph, labels=labels, seed=seed,
                          config_hash=config_hash(config))


def _draw_user(arch: ArchetypeConfig, params: _DerivedParams,
               rng: np.random.Generator) -> _UserDraw:
    if rng.random() < arch.single_partner_share:
        return _draw_single_partner_user(arch, params, rng)
    return _draw_multi_partner_user(arch, params, rng)


def _draw_single_partner_user(arch: ArchetypeConfig, params: _DerivedParams,
                              rng: np.random.Generator) -> _UserDraw:
    # Single-partner users are exclusive sellers; fraud archetypes sell the
    # same partner several times (they never have a single transaction).
    if arch.single_partner_single_sale:
        weight = 1
    else:
        r = arch.surplus_scale * math.exp(
            params.mu_r + params.sigma_r * rng.standard_normal())
        weight = 1 + max(1, round(r))
    return _UserDraw(roles=np.array([_ROLE_OUT], dtype=np.int8),
                     sale_weight=np.array([weight], dtype=np.int64),
                     buy_weight=np.array([0], dtype=np.int64),
                     pair_edges=[])


def _draw_multi_partner_user(arch: ArchetypeConfig, params: _DerivedParams,
                             rng: np.random.Generator) -> _UserDraw:
    z_k = rng.standard_normal()
    k = int(round(math.exp(params.mu_k + params.sigma_k * z_k)))
    k = max(2, min(k, arch.degree_cap))

    role_draw = rng.random()
    if role_draw < arch.exclusive_seller_share:
        user_role = "exclusive"
    elif role_draw < arch.exclusive_seller_share + arch.single_sale_share:
        user_role = "single"
    else:
        user_role = "mixed"

    multi = rng.random() >= arch.uniform_weight_share
    if user_role == "mixed" and not multi and k == 2:
        multi = True  # a weight-1, reciprocal-free mixed pattern needs k >= 3

    roles = _assign_roles(arch, user_role, k, multi, rng)

    sale = np.where((roles == _ROLE_OUT) | (roles == _ROLE_RECIPROCAL), 1, 0).astype(np.int64)
    buy = np.where((roles == _ROLE_IN) | (roles == _ROLE_RECIPROCAL), 1, 0).astype(np.int64)

    if multi:
        z_extra = rng.standard_normal()
        r = arch.surplus_scale * math.exp(
            params.mu_r + params.sigma_r
            * (params.rho * z_k + math.sqrt(1.0 - params.rho ** 2) * z_extra))
        extra = max(1, round(r * k))
        _distribute_extra(user_role, arch, roles, sale, buy, extra, rng)

    if arch.fraud:
        # No fraud user has exactly one sale transaction in total.
        if sale.sum() == 1:
            sale[np.flatnonzero(sale)[0]] += 1

    pair_edges = _place_triangles(arch, params, roles, k, rng)
    return _UserDraw(roles=roles, sale_weight=sale, buy_weight=buy,
                     pair_edges=pair_edges)


def _assign_roles(arch: ArchetypeConfig, user_role: str, k: int, multi: bool,
                  rng: np.random.Generator) -> np.ndarray:
    if user_role == "exclusive":
        return np.full(k, _ROLE_OUT, dtype=np.int8)
    if user_role == "single":
        roles = np.full(k, _ROLE_IN, dtype=np.int8)
        roles[int(rng.integers(k))] = _ROLE_OUT
        return roles

    # Mixed users: per-partner roles from a per-user seller lean, with some
    # reciprocal partners; weight-1 users cannot carry reciprocals.
    lean = rng.uniform(arch.seller_lean_low, arch.seller_lean_high)
    rec_rate = arch.reciprocal_rate if multi else 0.0
    u_rec = rng.random(k)
    u_dir = rng.random(k)
    roles = np.where(u_rec < rec_rate, _ROLE_RECIPROCAL,
                     np.where(u_dir < lean, _ROLE_OUT, _ROLE_IN)).astype(np.int8)

    out_ish = (roles == _ROLE_OUT) | (roles == _ROLE_RECIPROCAL)
    in_ish = (roles == _ROLE_IN) | (roles == _ROLE_RECIPROCAL)
    if not out_ish.any():
        roles[0] = _ROLE_OUT
    if not in_ish.any():
        # flip a partner that is not the only seller
        roles[-1] = _ROLE_IN

    # Keep mixed users off the exact one-sale-relation pattern
    # (out-degree 1 with no reciprocal partner), which belongs to the
    # "single" bucket: promote the lone seller to a reciprocal partner.
    for _ in range(4):
        n_out = int((roles == _ROLE_OUT).sum())
        n_rec = int((roles == _ROLE_RECIPROCAL).sum())
        k_out = n_out + n_rec
        k_in = int((roles == _ROLE_IN).sum()) + n_rec
        if k_in == 0:
            roles[np.flatnonzero(roles == _ROLE_OUT)[-1]] = _ROLE_IN
            continue
        if k_out * k == k_in + k_out:  # sell probability exactly 1/k
            plain_out = np.flatnonzero(roles == _ROLE_OUT)
            plain_in = np.flatnonzero(roles == _ROLE_IN)
            if multi and len(plain_out):
                roles[plain_out[0]] = _ROLE_RECIPROCAL
            elif len(plain_in):
                roles[plain_in[0]] = _ROLE_OUT
            else:  # every partner reciprocal; demote one to buy-only
                roles[np.flatnonzero(roles == _ROLE_RECIPROCAL)[0]] = _ROLE_IN
            continue
        break
    return roles


def _distribute_extra(user_role: str, arch: ArchetypeConfig, roles: np.ndarray,
                      sale: np.ndarray, buy: np.ndarray, extra: int,
                      rng: np.random.Generator) -> None:
    """Spread surplus transactions over edge slots, respecting the role
    contracts (a single-sale user's sale edge stays at weight 1 unless the
    archetype forbids single sale transactions)."""
    if user_role == "exclusive":
        slots = [("sale", i) for i in np.flatnonzero(sale)]
    elif user_role == "single":
        if arch.fraud:
            # bump the sale relation past one transaction, rest on buys
            sale_idx = int(np.flatnonzero(sale)[0])
            sale[sale_idx] += 1
            extra -= 1
        slots = [("buy", i) for i in np.flatnonzero(buy)]
        if not slots:
            slots = [("sale", int(np.flatnonzero(sale)[0]))]
    else:
        slots = ([("sale", i) for i in np.flatnonzero(sale)]
                 + [("buy", i) for i in np.flatnonzero(buy)])
    if extra <= 0 or not slots:
        return
    counts = rng.multinomial(extra, np.full(len(slots), 1.0 / len(slots)))
    for (kind, idx), add in zip(slots, counts):
        if kind == "sale":
            sale[idx] += add
        else:
            buy[idx] += add


def _place_triangles(arch: ArchetypeConfig, params: _DerivedParams,
                     roles: np.ndarray, k: int,
                     rng: np.random.Generator) -> list[tuple[int, int]]:
    if k < 2 or rng.random() >= arch.triangle_attempt_share:
        return []
    c = arch.clustering_scale * math.exp(
        params.mu_c + params.sigma_c * rng.standard_normal())
    c = min(c, 1.0)
    n_pairs = k * (k - 1) // 2
    x = c * n_pairs
    tr = int(x) + (1 if rng.random() < x - int(x) else 0)
    tr = min(tr, n_pairs)
    if tr == 0:
        return []

    chosen: set[tuple[int, int]] = set()
    while len(chosen) < tr:
        a = int(rng.integers(k))
        b = int(rng.integers(k))
        if a == b:
            continue
        chosen.add((a, b) if a < b else (b, a))

    out_ish = (roles == _ROLE_OUT) | (roles == _ROLE_RECIPROCAL)
    in_ish = (roles == _ROLE_IN) | (roles == _ROLE_RECIPROCAL)
    edges: list[tuple[int, int]] = []
    for a, b in sorted(chosen):
        # a->b closes a cycle through the focal node iff the focal sells to a
        # and buys from b; b->a symmetrically.
        cyclic_options = []
        flat_options = []
        (cyclic_options if out_ish[a] and in_ish[b] else flat_options).append((a, b))
        (cyclic_options if out_ish[b] and in_ish[a] else flat_options).append((b, a))
        want_cycle = rng.random() < arch.cycle_propensity
        pool = cyclic_options if (want_cycle and cyclic_options) else (
            flat_options if flat_options else cyclic_options)
        edges.append(pool[int(rng.integers(len(pool)))])
    return edges


# -- validation -----------------------------------------------------------------

#: (name, target accessor, measured accessor) for the tracked fractions.
_FRACTION_CHECKS = (
    ("single_partner_share", lambda a: a.single_partner_share,
     lambda s: s.deg1 / s.total),
    ("strength_one_share",
     lambda a: a.single_partner_share if a.single_partner_single_sale else 0.0,
     lambda s: s.str1 / s.total),
    ("uniform_weight_share", lambda a: a.uniform_weight_share,
     lambda s: s.fraction("txpp1")),
    ("exclusive_seller_share", lambda a: a.exclusive_seller_share,
     lambda s: s.fraction("sp1")),
    ("single_sale_share", lambda a: a.single_sale_share,
     lambda s: s.fraction("sp_min")),
    ("weighted_sell_one_share", lambda a: _expected_wsp1(a),
     lambda s: s.fraction("wsp1")),
    ("single_sale_tx_share",
     lambda a: 0.0 if a.fraud else a.single_sale_share,
     lambda s: s.fraction("wsp_min")),
    ("triangle_free_share", lambda a: a.triangle_free_share,
     lambda s: s.fraction("c0")),
    ("cycle_zero_share", lambda a: a.cycle_zero_share,
     lambda s: s.fraction("cyp0")),
)

_MEDIAN_CHECKS = (
    ("degree_median", lambda a: a.degree_median, lambda s: s.deg_ge2_median),
    ("strength_median", lambda a: a.strength_median, lambda s: s.str_ge2_median),
    ("txpp_median", lambda a: a.txpp_median, lambda s: s.txpp_gt1_median),
    ("clustering_median", lambda a: a.clustering_median, lambda s: s.c_pos_median),
)

_INFO_CHECKS = (
    ("degree_mean", lambda a: a.degree_mean, lambda s: s.deg_ge2_mean),
    ("strength_mean", lambda a: a.strength_mean, lambda s: s.str_ge2_mean),
    ("txpp_mean", lambda a: a.txpp_mean, lambda s: s.txpp_gt1_mean),
    ("clustering_mean", lambda a: a.clustering_mean, lambda s: s.c_pos_mean),
    ("cycle_frac_median", lambda a: a.cycle_frac_median, lambda s: s.cyp_pos_median),
)


def _expected_wsp1(arch: ArchetypeConfig) -> float:
    """Expected share of strength>=2 users who never bought: exclusive
    multi-partner sellers plus (for fraud) the single-partner sellers."""
    p1 = arch.single_partner_share
    if arch.single_partner_single_sale:
        # single-partner users have strength 1 and drop out of the base
        return arch.exclusive_seller_share
    return arch.exclusive_seller_share * (1.0 - p1) + p1


@dataclass(frozen=True)
class CalibrationRow:
    user_type: str
    statistic: str
    target: float
    actual: float | None
    tolerance: float
    kind: str      # "fraction" (absolute pp), "median" (relative), "info"
    ok: bool


@dataclass(frozen=True)
class CalibrationReport:
    rows: list[CalibrationRow]
    type_stats: dict[str, TypeStats]
    warnings: list[str]

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.rows if r.kind != "info")

    def to_text(self) -> str:
        lines = [f"{'type':10s} {'statistic':26s} {'target':>12s} {'actual':>12s} "
                 f"{'tol':>8s}  status"]
        for r in self.rows:
            actual = "-" if r.actual is None else f"{r.actual:12.5g}"
            tol = (f"±{r.tolerance:.0%}" if r.kind == "median"
                   else f"±{r.tolerance * 100:.0f}pp" if r.kind == "fraction" else "info")
            status = "ok" if r.ok else ("FAIL" if r.kind != "info" else "-")
            lines.append(f"{r.user_type:10s} {r.statistic:26s} {r.target:12.5g} "
                         f"{actual:>12s} {tol:>8s}  {status}")
        for w in self.warnings:
            lines.append(f"warning: {w}")
        lines.append(f"calibration {'OK' if self.ok else 'FAILED'}")
        return "\n".join(lines) + "\n"


def validate(dataset: LabeledDataset, config: SynthConfig,
             fraction_tolerance: float = 0.03,
             median_tolerance: float = 0.25) -> CalibrationReport:
    """Recompute the tracked statistics through the feature pipeline and
    compare them with the archetype targets."""
    if not dataset.labels:
        raise ValueError("dataset has no labeled users")
    warnings: list[str] = []
    if dataset.config_hash != config_hash(config):
        warnings.append("dataset was generated from a different configuration "
                        "(hash mismatch); targets may not apply")
    grouped = indices_by_type(dataset.graph, dataset.labels)
    rows: list[CalibrationRow] = []
    type_stats: dict[str, TypeStats] = {}
    for user_type, arch in config.archetypes.items():
        indices = grouped.get(user_type, [])
        if not indices:
            raise ValueError(f"dataset has no users of type {user_type!r}")
        ts = collect_type_stats(user_type, indices)
        type_stats[user_type] = ts
        for name, target_fn, actual_fn in _FRACTION_CHECKS:
            target = float(target_fn(arch))
            actual = float(actual_fn(ts))
            rows.append(CalibrationRow(
                user_type, name, target, actual, fraction_tolerance, "fraction",
                abs(actual - target) <= fraction_tolerance))
        for name, target_fn, actual_fn in _MEDIAN_CHECKS:
            target = float(target_fn(arch))
            actual = actual_fn(ts)
            ok = actual is not None and abs(actual - target) <= median_tolerance * target
            rows.append(CalibrationRow(
                user_type, name, target,
                None if actual is None else float(actual),
                median_tolerance, "median", ok))
        for name, target_fn, actual_fn in _INFO_CHECKS:
            target = float(target_fn(arch))
            actual = actual_fn(ts)
            rows.append(CalibrationRow(
                user_type, name, target,
                None if actual is None else float(actual),
                0.0, "info", True))
    return CalibrationReport(rows=rows, type_stats=type_stats, warnings=warnings)
