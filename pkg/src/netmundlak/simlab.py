"""Simulation laboratory: grouped small-world data generation on a 2x2
(heterogeneity x dependence) design, oracle ground truth, seeded
replication campaigns, and MAE/MSE/RMSE scoring.

Data generating process per group g: a Watts-Strogatz network, group
draws alpha_g ~ N(0, alpha_sd^2), mu_X,g ~ N(0, mu_x_sd^2),
tau_g ~ N(0.5, tau_sd^2); covariates X_i ~ N(mu_X,g, 1); treatments are
independent coin flips with

    logit P(W_i = 1) = gamma0 + g1 X_i + g2 nbr-mean(X)_i + g3 deg_i + g4 mu_X,g

with gamma0 calibrated so the overall treatment share is 0.5; exposure
T_i = 1{any treated neighbor}; outcomes

    Y_i = alpha_g + beta X_i + tau_g T_i + delta frac_i + eps_i

where frac_i is the treated fraction of i's neighbors (0 for isolated
units) and eps_i ~ N(0, eps_sd^2).

The oracle effect for the (1, 0) contrast averages
tau_g(i) + delta * E[frac_i | T_i = 1] over units, the conditional mean
estimated by Monte Carlo redraws of W from the calibrated assignment
model. Units never exposed across the redraws are excluded and counted.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .balance import GroupData, GroupedPopulation
from .baselines import mundlak_ols
from .errors import CalibrationError, EstimationError
from .estimator import NuisanceEstimates, gme_gnn_estimate
from .gcn import GcnConfig
from .graphs import ws_generate
from .seeding import child_seed

# heterogeneity regime -> (alpha_sd, mu_x_sd, tau_sd)
_HETEROGENEITY = {"low": (1.5, 1.0, 0.0), "high": (3.0, 2.0, 0.15)}
# dependence regime -> (gamma, delta, ws_k, ws_p)
_DEPENDENCE = {
    "weak": ((0.5, 0.5, 0.2, 0.5), 0.8, 4, 0.1),
    "strong": ((1.5, 1.5, 0.8, 1.5), 3.0, 8, 0.5),
}

DEFAULT_METHODS = ("gme-gnn", "gnn-only", "mundlak")


@dataclass(frozen=True)
class DgpParams:
    alpha_sd: float
    mu_x_sd: float
    tau_sd: float
    gamma: tuple
    delta: float
    ws_k: int
    ws_p: float
    beta: float = 1.5
    eps_sd: float = 0.5
    tau_mean: float = 0.5

    @classmethod
    def from_regimes(cls, heterogeneity: str, dependence: str) -> "DgpParams":
        if heterogeneity not in _HETEROGENEITY:
            raise ValueError(f"heterogeneity must be 'low' or 'high', got {heterogeneity!r}")
        if dependence not in _DEPENDENCE:
            raise ValueError(f"dependence must be 'weak' or 'strong', got {dependence!r}")
        alpha_sd, mu_x_sd, tau_sd = _HETEROGENEITY[heterogeneity]
        gamma, delta, ws_k, ws_p = _DEPENDENCE[dependence]
        return cls(alpha_sd, mu_x_sd, tau_sd, gamma, delta, ws_k, ws_p)


@dataclass(frozen=True)
class Scenario:
    heterogeneity: str = "low"
    dependence: str = "weak"
    m_groups: int = 20
    ng_min: int = 100
    ng_max: int = 200
    replications: int = 50
    base_seed: int = 0

    def __post_init__(self):
        if not 2 <= self.ng_min <= self.ng_max:
            raise ValueError("need 2 <= ng_min <= ng_max")
        if self.m_groups < 1 or self.replications < 1:
            raise ValueError("m_groups and replications must be >= 1")
        self.params  # validates the regime names

    @property
    def params(self) -> DgpParams:
        return DgpParams.from_regimes(self.heterogeneity, self.dependence)


@dataclass(frozen=True)
class ReplicationTruth:
    """Latent quantities recorded at generation time."""

    params: DgpParams
    alpha: np.ndarray
    mu_x: np.ndarray
    tau_g: np.ndarray
    gamma0: float
    probs: list  # per-group treatment probabilities
    frac: list  # per-group realized treated-neighbor fractions


@dataclass(frozen=True)
class OracleTruth:
    tau_star: float
    n_excluded: int


@dataclass(frozen=True)
class MethodResult:
    tau_hat: float
    std_error: float
    b_bar: float


@dataclass(frozen=True)
class ReplicationContext:
    rep_index: int
    tau_star: float
    gnn_config: GcnConfig
    eta: float
    exposure: str
    contrast: tuple


@dataclass(frozen=True)
class MetricsSummary:
    mae: float
    mse: float
    rmse: float
    n_used: int
    n_failed: int


@dataclass(frozen=True)
class SimulationResult:
    summaries: dict  # method -> MetricsSummary
    records: list  # dicts: rep_index, method, tau_hat, tau_star, std_error, b_bar
    failures: list  # (rep_index, method, message)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        return np.where(z >= 0, 1.0 / (1.0 + np.exp(-z)), np.exp(z) / (1.0 + np.exp(z)))


def solve_intercept(linear: np.ndarray, target: float = 0.5) -> float:
    """Root of mean(sigmoid(g0 + linear)) = target by bisection.

    The mean is strictly increasing in g0, so a sign-changing bracket is
    found by doubling; failure to bracket raises CalibrationError.
    """
    if not 0.0 < target < 1.0:
        raise ValueError("target must be in (0, 1)")
    linear = np.asarray(linear, dtype=float)

    def excess(g0):
        return float(_sigmoid(g0 + linear).mean()) - target

    if excess(0.0) == 0.0:
        return 0.0
    lo, hi = -1.0, 1.0
    while excess(lo) > 0:
        lo *= 2.0
        if lo < -1e7:
            raise CalibrationError("failed to bracket the intercept from below")
    while excess(hi) < 0:
        hi *= 2.0
        if hi > 1e7:
            raise CalibrationError("failed to bracket the intercept from above")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if excess(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13:
            break
    return 0.5 * (lo + hi)


def _neighbor_mean(adj, values, degrees):
    sums = adj @ values
    return np.divide(sums, degrees, out=np.zeros_like(sums), where=degrees > 0)


def _logit_terms(params: DgpParams, graph, x_col: np.ndarray, mu_x: float) -> np.ndarray:
    g1, g2, g3, g4 = params.gamma
    adj = graph.adjacency_matrix()
    degrees = graph.degrees.astype(float)
    return g1 * x_col + g2 * _neighbor_mean(adj, x_col, degrees) + g3 * degrees + g4 * mu_x


def calibrate_gamma0(params: DgpParams, drafts: list, target: float = 0.5) -> float:
    """Intercept making the overall treatment share approximately the
    target; ``drafts`` holds (graph, X, mu_x) triples for every group."""
    linear = np.concatenate(
        [_logit_terms(params, graph, X[:, 0], mu_x) for graph, X, mu_x in drafts]
    )
    gamma0 = solve_intercept(linear, target)
    achieved = float(_sigmoid(gamma0 + linear).mean())
    if abs(achieved - target) > 0.005:
        raise CalibrationError(
            f"calibrated treatment share {achieved:.4f} is more than 0.005 from {target}"
        )
    return gamma0


def generate_population(
    params: DgpParams, m_groups: int, ng_min: int, ng_max: int, seed: int
) -> tuple[GroupedPopulation, ReplicationTruth]:
    """Draw one grouped population from explicit DGP parameters."""
    rng = np.random.default_rng(seed)
    sizes = rng.integers(ng_min, ng_max + 1, size=m_groups)
    alpha = rng.normal(0.0, params.alpha_sd, size=m_groups)
    mu_x = rng.normal(0.0, params.mu_x_sd, size=m_groups)
    tau_g = rng.normal(params.tau_mean, params.tau_sd, size=m_groups)

    drafts = []
    for g_index in range(m_groups):
        n = int(sizes[g_index])
        graph = ws_generate(n, params.ws_k, params.ws_p, seed=int(rng.integers(2**63)))
        X = rng.normal(mu_x[g_index], 1.0, size=(n, 1))
        drafts.append((graph, X, float(mu_x[g_index])))
    gamma0 = calibrate_gamma0(params, drafts)

    groups, probs_all, frac_all = [], [], []
    for g_index, (graph, X, group_mu) in enumerate(drafts):
        n = graph.n_nodes
        probs = _sigmoid(gamma0 + _logit_terms(params, graph, X[:, 0], group_mu))
        W = (rng.random(n) < probs).astype(np.int64)
        adj = graph.adjacency_matrix()
        degrees = graph.degrees.astype(float)
        counts = adj @ W.astype(float)
        exposed = (counts >= 1).astype(float)
        frac = np.divide(counts, degrees, out=np.zeros_like(counts), where=degrees > 0)
        eps = rng.normal(0.0, params.eps_sd, size=n)
        Y = alpha[g_index] + params.beta * X[:, 0] + tau_g[g_index] * exposed + params.delta * frac + eps
        groups.append(GroupData(group_id=f"g{g_index}", graph=graph, W=W, X=X, Y=Y))
        probs_all.append(probs)
        frac_all.append(frac)

    truth = ReplicationTruth(
        params=params,
        alpha=alpha,
        mu_x=mu_x,
        tau_g=tau_g,
        gamma0=gamma0,
        probs=probs_all,
        frac=frac_all,
    )
    return GroupedPopulation(groups), truth


def generate_replication(
    scenario: Scenario, rep_index: int
) -> tuple[GroupedPopulation, ReplicationTruth]:
    """One fully seeded draw of a scenario's population plus its latent
    truth; entirely determined by (scenario.base_seed, rep_index)."""
    return generate_population(
        scenario.params,
        scenario.m_groups,
        scenario.ng_min,
        scenario.ng_max,
        seed=child_seed(scenario.base_seed, "rep", rep_index),
    )


def oracle_truth(
    pop: GroupedPopulation,
    truth: ReplicationTruth,
    n_redraws: int = 500,
    seed: int = 0,
    unit_mask: list | None = None,
) -> OracleTruth:
    """Ground truth for the any-treated-neighbor (1, 0) contrast.

    Per unit the conditional contrast equals tau_g(i) plus delta times the
    mean treated-neighbor fraction given exposure; the latter is estimated
    from ``n_redraws`` Monte Carlo redraws of W at the calibrated
    probabilities (the unexposed arm forces a zero fraction). With delta=0
    no redraws are needed. ``unit_mask`` (one boolean vector per group)
    restricts the average, e.g. to the overlap set.
    """
    params = truth.params
    effects, included = [], []
    n_excluded = 0
    rng = np.random.default_rng(seed)
    for g_index, group in enumerate(pop.groups):
        mask = (
            np.ones(group.n_units, dtype=bool)
            if unit_mask is None
            else np.asarray(unit_mask[g_index], dtype=bool)
        )
        if params.delta == 0.0:
            effects.append(np.full(group.n_units, truth.tau_g[g_index]))
            included.append(mask)
            continue
        probs = truth.probs[g_index]
        adj = group.graph.adjacency_matrix()
        degrees = group.graph.degrees.astype(float)
        draws = (rng.random((n_redraws, group.n_units)) < probs).astype(float)
        counts = draws @ adj  # adj is symmetric
        exposed = counts >= 1
        with np.errstate(invalid="ignore", divide="ignore"):
            frac = np.divide(
                counts, degrees, out=np.zeros_like(counts), where=degrees > 0
            )
        n_exposed = exposed.sum(axis=0)
        frac_sum = (frac * exposed).sum(axis=0)
        ever = n_exposed > 0
        e_frac = np.zeros(group.n_units)
        e_frac[ever] = frac_sum[ever] / n_exposed[ever]
        effects.append(truth.tau_g[g_index] + params.delta * e_frac)
        n_excluded += int((mask & ~ever).sum())
        included.append(mask & ever)

    all_effects = np.concatenate(effects)
    all_included = np.concatenate(included)
    if not all_included.any():
        raise EstimationError("oracle truth undefined: no unit is ever exposed")
    return OracleTruth(float(all_effects[all_included].mean()), n_excluded)


def oracle_nuisances(pop: GroupedPopulation, truth: ReplicationTruth) -> NuisanceEstimates:
    """Closed-form true nuisances for the any-treated-neighbor exposure.

    With independent coins, P(T_i = 0) is the product of (1 - pi_j) over
    neighbors, and E[frac_i | T_i = 1] = (sum_j A_ij pi_j / deg_i) / P(T_i = 1).
    Probabilities are clipped away from {0, 1} so downstream trimming, not
    arithmetic, handles the degenerate units.
    """
    params = truth.params
    p_hat = {0: [], 1: []}
    mu_hat = {0: [], 1: []}
    tiny = 1e-9
    for g_index, group in enumerate(pop.groups):
        probs = truth.probs[g_index]
        adj = group.graph.adjacency_matrix()
        degrees = group.graph.degrees.astype(float)
        log_none = adj @ np.log1p(-np.clip(probs, 0.0, 1.0 - 1e-12))
        p0 = np.where(degrees > 0, np.exp(log_none), 1.0)
        p1 = 1.0 - p0
        expected_count = adj @ probs
        safe_p1 = np.where(p1 > tiny, p1, 1.0)
        e_frac = np.where(
            (degrees > 0) & (p1 > tiny),
            np.divide(expected_count, np.maximum(degrees, 1.0)) / safe_p1,
            0.0,
        )
        mu0 = truth.alpha[g_index] + params.beta * group.X[:, 0]
        mu1 = mu0 + truth.tau_g[g_index] + params.delta * e_frac
        p_hat[0].append(np.clip(p0, tiny, 1.0 - tiny))
        p_hat[1].append(np.clip(p1, tiny, 1.0 - tiny))
        mu_hat[0].append(mu0)
        mu_hat[1].append(mu1)
    return NuisanceEstimates(p_hat, mu_hat)


def flat_propensities(pop: GroupedPopulation, assignments: list, levels: tuple) -> dict:
    """Constant propensities at each level's pooled marginal frequency
    (the deliberately misspecified arm of the double-robustness check)."""
    stacked = np.concatenate([a.levels for a in assignments])
    out = {}
    for t in levels:
        freq = float(np.clip((stacked == t).mean(), 1e-9, 1 - 1e-9))
        out[t] = [np.full(g.n_units, freq) for g in pop.groups]
    return out


def zero_outcomes(pop: GroupedPopulation, levels: tuple) -> dict:
    """Identically-zero outcome models (the other misspecified arm)."""
    return {t: [np.zeros(g.n_units) for g in pop.groups] for t in levels}


def _method_gme_gnn(pop, truth, ctx) -> MethodResult:
    est = gme_gnn_estimate(
        pop, ctx.exposure, ctx.contrast, ctx.gnn_config, ctx.eta, include_balance=True
    )
    return MethodResult(est.tau_hat, est.std_error, est.b_bar)


def _method_gnn_only(pop, truth, ctx) -> MethodResult:
    est = gme_gnn_estimate(
        pop, ctx.exposure, ctx.contrast, ctx.gnn_config, ctx.eta, include_balance=False
    )
    return MethodResult(est.tau_hat, est.std_error, est.b_bar)


def _method_mundlak(pop, truth, ctx) -> MethodResult:
    tau_hat, fit = mundlak_ols(pop)
    se = float(fit.std_errors[fit.column_names.index("W")])
    return MethodResult(tau_hat, se, 1.0)


_DEFAULT_REGISTRY = {
    "gme-gnn": _method_gme_gnn,
    "gnn-only": _method_gnn_only,
    "mundlak": _method_mundlak,
}


def _replication_task(payload):
    (scenario, rep_index, methods, gnn_config, eta, exposure, contrast,
     n_redraws, registry) = payload
    pop, truth = generate_replication(scenario, rep_index)
    oracle = oracle_truth(
        pop, truth, n_redraws, seed=child_seed(scenario.base_seed, "oracle", rep_index)
    )
    ctx = ReplicationContext(
        rep_index=rep_index,
        tau_star=oracle.tau_star,
        gnn_config=replace(
            gnn_config, seed=child_seed(scenario.base_seed, "gnn", rep_index)
        ),
        eta=eta,
        exposure=exposure,
        contrast=contrast,
    )
    records, failures = [], []
    for name in methods:
        try:
            result = registry[name](pop, truth, ctx)
        except EstimationError as exc:
            failures.append((rep_index, name, str(exc)))
            continue
        records.append(
            {
                "rep_index": rep_index,
                "method": name,
                "tau_hat": result.tau_hat,
                "tau_star": oracle.tau_star,
                "std_error": result.std_error,
                "b_bar": result.b_bar,
            }
        )
    return rep_index, records, failures


def run_scenario(
    scenario: Scenario,
    methods: tuple = DEFAULT_METHODS,
    gnn_config: GcnConfig | None = None,
    eta: float = 0.01,
    exposure: str = "any-neighbor",
    contrast: tuple = (1, 0),
    n_redraws: int = 500,
    workers: int = 1,
    method_registry: dict | None = None,
) -> SimulationResult:
    """Run all replications of a scenario and score every method.

    Replications are independent, each seeded from (base_seed, rep_index),
    so results are bit-identical for any worker count; outputs reduce in
    rep_index order. Estimator failures are recorded and excluded from the
    metrics, never silently dropped. Custom ``method_registry`` entries
    must be module-level callables when workers > 1 (pickling).
    """
    registry = dict(_DEFAULT_REGISTRY)
    if method_registry:
        registry.update(method_registry)
    unknown = [m for m in methods if m not in registry]
    if unknown:
        raise ValueError(f"unknown method(s) {unknown}; available: {sorted(registry)}")
    if gnn_config is None:
        gnn_config = GcnConfig()

    payloads = [
        (scenario, r, tuple(methods), gnn_config, eta, exposure, contrast,
         n_redraws, registry)
        for r in range(scenario.replications)
    ]
    if workers <= 1:
        outcomes = [_replication_task(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_replication_task, payloads))
    outcomes.sort(key=lambda item: item[0])

    records, failures = [], []
    for _, recs, fails in outcomes:
        records.extend(recs)
        failures.extend(fails)

    summaries = {}
    for name in methods:
        errors = np.array(
            [r["tau_hat"] - r["tau_star"] for r in records if r["method"] == name]
        )
        n_failed = sum(1 for f in failures if f[1] == name)
        if errors.size:
            mse = float(np.mean(errors**2))
            summaries[name] = MetricsSummary(
                mae=float(np.mean(np.abs(errors))),
                mse=mse,
                rmse=math.sqrt(mse),
                n_used=int(errors.size),
                n_failed=n_failed,
            )
        else:
            summaries[name] = MetricsSummary(
                mae=float("nan"), mse=float("nan"), rmse=float("nan"),
                n_used=0, n_failed=n_failed,
            )
    return SimulationResult(summaries, records, failures)


def format_summary_table(result: SimulationResult) -> str:
    """Fixed-width method x metric table with a failure-count footer."""
    lines = [f"{'method':<10} {'MAE':>10} {'MSE':>10} {'RMSE':>10} {'used':>6} {'failed':>7}"]
    for name, s in result.summaries.items():
        lines.append(
            f"{name:<10} {s.mae:>10.4f} {s.mse:>10.4f} {s.rmse:>10.4f} "
            f"{s.n_used:>6d} {s.n_failed:>7d}"
        )
    total_failures = len(result.failures)
    lines.append(f"total estimator failures: {total_failures}")
    return "\n".join(lines)
