"""Linear vector-autoregression baseline for pairwise Granger causality.

Each channel is regressed on p lags of every channel (plus intercept) by
ordinary least squares. The causal score for i -> j is the log ratio of
neuron j's residual variance without and with neuron i's lags in the
regressor set, conditioned on all other channels: the classic
pairwise-conditional F statistic. No significance testing is applied;
the raw F values feed the AUROC comparison directly.
"""

from dataclasses import dataclass, field

import numpy as np

from spikecause.errors import (
    ConfigError, DegenerateSeriesError, SingularFitError,
)

MAX_ORDER_DEFAULT = 20


@dataclass
class VarFit:
    order: int
    coeffs: np.ndarray        # (p, n, n); coeffs[k][j, i] multiplies x_i at lag k+1
    intercept: np.ndarray     # (n,)
    sigma: np.ndarray         # (n, n) residual covariance, 1/t_eff scaling
    t_eff: int


@dataclass
class GcMatrix:
    F: np.ndarray
    order: int
    failures: list = field(default_factory=list)   # (target, source, message)

    @property
    def n(self):
        return self.F.shape[0]


def _design(series, p, start):
    """Lagged regressor matrix with intercept for targets series[start:].

    Column layout: [1, x_{t-1} (n cols), ..., x_{t-p} (n cols)].
    """
    rows = series.shape[0] - start
    n = series.shape[1]
    x = np.empty((rows, 1 + n * p))
    x[:, 0] = 1.0
    for k in range(1, p + 1):
        x[:, 1 + (k - 1) * n:1 + k * n] = series[start - k:series.shape[0] - k]
    return x, series[start:]


def _solve(x, y):
    """Least squares with explicit rank check."""
    coef, _, rank, _ = np.linalg.lstsq(x, y, rcond=None)
    if rank < x.shape[1]:
        raise SingularFitError(
            f"regressor matrix rank {rank} < {x.shape[1]} columns"
            " (try a lower order or a longer series)"
        )
    resid = y - x @ coef
    return coef, resid


def fit_var(series, p, start=None):
    """OLS VAR(p) fit; ``start`` overrides the evaluation window origin.

    By default targets are rows p..T-1. Raises when the window leaves
    fewer equations than unknowns.
    """
    series = np.asarray(series, dtype=np.float64)
    if series.ndim != 2:
        raise ConfigError("series must be (rows, channels)")
    t, n = series.shape
    if p < 0:
        raise ConfigError(f"order must be >= 0, got {p}")
    if start is None:
        start = p
    if start < p:
        raise ConfigError(f"window start {start} cannot precede order {p}")
    t_eff = t - start
    if t_eff <= n * p + 1:
        raise ConfigError(
            f"{t_eff} usable rows cannot identify {n * p + 1} coefficients"
        )
    constant = (series == series[0]).all(axis=0)
    if constant.any():
        raise DegenerateSeriesError(
            f"channel {int(np.argmax(constant))} is constant"
        )

    x, y = _design(series, p, start)
    coef, resid = _solve(x, y)
    sigma = resid.T @ resid / t_eff
    coeffs = np.empty((p, n, n))
    for k in range(p):
        coeffs[k] = coef[1 + k * n:1 + (k + 1) * n].T
    return VarFit(order=p, coeffs=coeffs, intercept=coef[0].copy(),
                  sigma=sigma, t_eff=t_eff)


def select_order(series, max_p=MAX_ORDER_DEFAULT, criterion="bic"):
    """Information-criterion order selection over p = 1..max_p.

    Every candidate is scored on the same evaluation window (targets
    rows max_p..T-1) so likelihoods are comparable:
    score(p) = ln det Sigma(p) + penalty * (p n^2 + n) / t_eff, with
    penalty 2 for AIC and ln t_eff for BIC.
    """
    series = np.asarray(series, dtype=np.float64)
    crit = criterion.lower()
    if crit not in ("aic", "bic"):
        raise ConfigError(f"criterion must be 'aic' or 'bic', got {criterion!r}")
    if max_p < 1:
        raise ConfigError(f"max_p must be >= 1, got {max_p}")
    n = series.shape[1]
    t_eff = series.shape[0] - max_p
    penalty = 2.0 if crit == "aic" else np.log(t_eff)

    best_p, best_score = None, np.inf
    last_error = None
    for p in range(1, max_p + 1):
        try:
            fit = fit_var(series, p, start=max_p)
        except (SingularFitError, ConfigError) as exc:
            last_error = exc
            continue
        sign, logdet = np.linalg.slogdet(fit.sigma)
        if sign <= 0:
            last_error = SingularFitError(f"singular residual covariance at p={p}")
            continue
        score = logdet + penalty * (p * n * n + n) / t_eff
        if score < best_score:
            best_p, best_score = p, score
    if best_p is None:
        raise SingularFitError(f"no candidate order was fittable: {last_error}")
    return best_p


def pairwise_conditional_gc(series, p):
    """F[j, i] = ln(reduced / full residual variance of channel j).

    The reduced model for source i refits channel j's equation with every
    lag of channel i removed while keeping all other channels (and the
    intercept). Negative values from floating-point noise are clamped to
    zero; a singular reduced fit marks its column's entries as failures
    and leaves them zero.
    """
    series = np.asarray(series, dtype=np.float64)
    n = series.shape[1]
    f = np.zeros((n, n))
    if n == 1:
        return GcMatrix(F=f, order=p)

    full = fit_var(series, p)
    full_var = np.diag(full.sigma)
    x, y = _design(series, p, p)
    t_eff = full.t_eff

    failures = []
    for source in range(n):
        keep = [0] + [
            1 + k * n + ch
            for k in range(p) for ch in range(n) if ch != source
        ]
        try:
            _, resid = _solve(x[:, keep], y)
        except SingularFitError as exc:
            for target in range(n):
                if target != source:
                    failures.append((target, source, str(exc)))
            continue
        reduced_var = (resid * resid).sum(axis=0) / t_eff
        for target in range(n):
            if target == source:
                continue
            f[target, source] = max(0.0, np.log(reduced_var[target] / full_var[target]))
    return GcMatrix(F=f, order=p, failures=failures)
