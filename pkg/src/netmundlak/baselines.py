"""Comparator estimators: pooled-OLS with group means (the Mundlak device)
and the network-only variant of the main estimator."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .balance import GroupedPopulation, balancing_statistic
from .errors import EstimationError
from .estimator import EffectEstimate, gme_gnn_estimate
from .gcn import GcnConfig


@dataclass(frozen=True)
class OlsFit:
    coefficients: np.ndarray
    column_names: list
    residual_variance: float
    std_errors: np.ndarray


def _independent_columns(design: np.ndarray, names: list, tol: float = 1e-9):
    """Priority-ordered rank screen via modified Gram-Schmidt.

    Earlier columns win; a column that is (numerically) in the span of the
    kept ones is dropped. Returns kept indices and dropped names.
    """
    kept, basis, dropped = [], [], []
    for idx in range(design.shape[1]):
        col = design[:, idx].astype(float)
        scale = np.linalg.norm(col)
        residual = col.copy()
        for q in basis:
            residual -= (q @ residual) * q
        if np.linalg.norm(residual) > tol * max(1.0, scale):
            kept.append(idx)
            basis.append(residual / np.linalg.norm(residual))
        else:
            dropped.append(names[idx])
    return kept, dropped


def mundlak_ols(pop: GroupedPopulation) -> tuple[float, OlsFit]:
    """OLS of Y on [1, W_i, X_i, W-bar_g, X-bar_g]; returns the coefficient
    on W_i and the full fit.

    The group means are exactly the w_bar/x_bar components of the
    balancing statistic (shared code path). Solved by LAPACK's orthogonal
    least squares, never by explicit normal equations. Rank-deficient
    group-mean columns (e.g. a single group, where W-bar is collinear with
    the intercept) are dropped with a warning.
    """
    d = pop.n_covariates
    n = pop.n_total
    names = (
        ["intercept", "W"]
        + [f"X{j + 1}" for j in range(d)]
        + ["W_bar"]
        + [f"X{j + 1}_bar" for j in range(d)]
    )
    if n < len(names):
        raise EstimationError(
            f"need at least {len(names)} pooled rows for the Mundlak design, got {n}"
        )
    blocks, ys = [], []
    for group in pop.groups:
        sbar = balancing_statistic(group)
        ng = group.n_units
        blocks.append(
            np.column_stack(
                [
                    np.ones(ng),
                    group.W.astype(float),
                    group.X,
                    np.full(ng, sbar.w_bar),
                    np.tile(sbar.x_bar, (ng, 1)),
                ]
            )
        )
        ys.append(group.Y)
    design = np.vstack(blocks)
    y = np.concatenate(ys)

    kept, dropped = _independent_columns(design, names)
    if dropped:
        if "W" in dropped:
            raise EstimationError(
                "treatment column is collinear with the remaining design; "
                "the Mundlak coefficient is not identified"
            )
        warnings.warn(
            f"dropping collinear column(s) {dropped} from the Mundlak design",
            stacklevel=2,
        )
    reduced = design[:, kept]
    kept_names = [names[i] for i in kept]
    coef, _, _, _ = scipy.linalg.lstsq(reduced, y, lapack_driver="gelsy")
    residuals = y - reduced @ coef
    dof = max(n - len(kept), 1)
    sigma2 = float(residuals @ residuals) / dof
    cov = sigma2 * np.linalg.inv(reduced.T @ reduced)
    fit = OlsFit(
        coefficients=coef,
        column_names=kept_names,
        residual_variance=sigma2,
        std_errors=np.sqrt(np.diag(cov)),
    )
    tau_hat = float(coef[kept_names.index("W")])
    return tau_hat, fit


def gnn_only_estimate(
    pop: GroupedPopulation,
    mapping: str = "any-neighbor",
    contrast: tuple = (1, 0),
    gnn_config: GcnConfig | None = None,
    eta: float = 0.01,
    normalize: bool = True,
    **kwargs,
) -> EffectEstimate:
    """The main pipeline without group-level balancing features.

    Under matched seeds this is exactly ``gme_gnn_estimate`` with
    ``include_balance=False``; nuisance seeds do not depend on the flag.
    """
    return gme_gnn_estimate(
        pop,
        mapping=mapping,
        contrast=contrast,
        gnn_config=gnn_config,
        eta=eta,
        normalize=normalize,
        include_balance=False,
        **kwargs,
    )
