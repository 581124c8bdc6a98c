"""Beta-distribution fit of inter-channel IoU and monitor threshold selection.

The monitor's IoU threshold is chosen so that, under a Beta model of the
agreement between the two channels, a target fraction of frames stays valid:
``threshold = quantile(1 - availability)``.

The regularized incomplete beta function is evaluated with the modified
Lentz continued fraction, switching to ``I_x(a, b) = 1 - I_{1-x}(b, a)``
outside the region where the fraction converges quickly. Everything is
vectorized over ``x`` so thousands of quantiles can be inverted at once.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable

import numpy as np

HISTOGRAM_BINS = 20

# Values reported for the original dissimilar-DNN study; kept for comparison
# only, the calibrated threshold is always computed.
REFERENCE_PARAMS = (5.88, 3.01)
REFERENCE_THRESHOLD = 0.32
REFERENCE_AVAILABILITY = 0.95

_CF_EPS = 1e-16
_CF_TINY = 1e-300
_CF_MAX_ITER = 1000


class DegenerateSample(ValueError):
    """Sample moments admit no Beta distribution (zero or excessive variance)."""


@dataclass(frozen=True)
class BetaParams:
    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)

    @property
    def variance(self) -> float:
        s = self.alpha + self.beta
        return self.alpha * self.beta / (s * s * (s + 1.0))


@dataclass(frozen=True)
class CalibrationResult:
    params: BetaParams
    sample_mean: float
    sample_variance: float
    threshold: float
    target_availability: float
    # (1 - availability) quantile of the raw samples, reported next to the
    # fitted one so both can be compared
    empirical_threshold: float
    n_samples: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["params"] = {"alpha": self.params.alpha, "beta": self.params.beta}
        return d


def beta_from_moments(mean: float, variance: float) -> BetaParams:
    """Method-of-moments Beta parameters for a given mean and variance."""
    if not (0.0 < mean < 1.0):
        raise DegenerateSample(f"mean {mean} outside (0, 1)")
    limit = mean * (1.0 - mean)
    if not (0.0 < variance < limit):
        raise DegenerateSample(
            f"variance {variance} must lie in (0, mean*(1-mean)={limit})"
        )
    k = limit / variance - 1.0
    return BetaParams(mean * k, (1.0 - mean) * k)


def sample_moments(samples: Iterable[float]) -> tuple[float, float]:
    """Sample mean and (population, ddof=0) variance."""
    x = np.asarray(list(samples) if not isinstance(samples, np.ndarray) else samples, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise DegenerateSample(f"need at least 2 samples, got {x.size}")
    if not np.all(np.isfinite(x)) or np.any(x < 0.0) or np.any(x > 1.0):
        raise ValueError("samples must be finite values in [0, 1]")
    if np.ptp(x) == 0.0:
        # the mean of identical values can round away from them, leaving a
        # spurious non-zero variance
        return float(x[0]), 0.0
    m = float(x.mean())
    return m, float(np.mean((x - m) ** 2))


def fit_beta_mom(samples: Iterable[float]) -> BetaParams:
    m, v = sample_moments(samples)
    return beta_from_moments(m, v)


def _lbeta(a: float, b: float) -> float:
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def _betacf(a: float, b: float, x: np.ndarray) -> np.ndarray:
    """Continued fraction for I_x(a, b), modified Lentz, vectorized over x."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < _CF_TINY, _CF_TINY, d)
    d = 1.0 / d
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _CF_TINY, _CF_TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _CF_TINY, _CF_TINY, c)
        d = 1.0 / d
        h = np.where(active, h * d * c, h)
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _CF_TINY, _CF_TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _CF_TINY, _CF_TINY, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) > _CF_EPS
        if not active.any():
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b})")


def regularized_incomplete_beta(a: float, b: float, x):
    """I_x(a, b) for scalar or array ``x`` in [0, 1]."""
    xa = np.asarray(x, dtype=float)
    if np.any(np.isnan(xa)) or np.any(xa < 0.0) or np.any(xa > 1.0):
        raise ValueError("x must lie in [0, 1]")
    flat = np.atleast_1d(xa).ravel()
    out = np.empty_like(flat)
    out[flat == 0.0] = 0.0
    out[flat == 1.0] = 1.0
    inner = (flat > 0.0) & (flat < 1.0)
    if inner.any():
        xi = flat[inner]
        lbeta = _lbeta(a, b)
        with np.errstate(divide="ignore"):
            front = np.exp(a * np.log(xi) + b * np.log1p(-xi) - lbeta)
        direct = xi < (a + 1.0) / (a + b + 2.0)
        res = np.empty_like(xi)
        if direct.any():
            xd = xi[direct]
            res[direct] = front[direct] * _betacf(a, b, xd) / a
        if (~direct).any():
            xs = 1.0 - xi[~direct]
            res[~direct] = 1.0 - front[~direct] * _betacf(b, a, xs) / b
        out[inner] = np.clip(res, 0.0, 1.0)
    if xa.ndim == 0:
        return float(out[0])
    return out.reshape(xa.shape)


def beta_cdf(params: BetaParams, x):
    return regularized_incomplete_beta(params.alpha, params.beta, x)


def beta_quantile(params: BetaParams, p, tol: float = 1e-12, max_iter: int = 200):
    """Inverse CDF by bisection on [0, 1].

    Bisection stops per element once ``|cdf(x) - p| <= tol`` or the bracket
    can no longer be split in floating point.
    """
    pa = np.asarray(p, dtype=float)
    if np.any(np.isnan(pa)) or np.any(pa <= 0.0) or np.any(pa >= 1.0):
        raise ValueError("p must lie strictly inside (0, 1)")
    target = np.atleast_1d(pa).ravel()
    lo = np.zeros_like(target)
    hi = np.ones_like(target)
    best = np.full_like(target, 0.5)
    best_err = np.full_like(target, np.inf)
    active = np.ones(target.shape, dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        mid = 0.5 * (lo[idx] + hi[idx])
        f = beta_cdf(params, mid)
        err = np.abs(f - target[idx])
        better = err < best_err[idx]
        best[idx[better]] = mid[better]
        best_err[idx[better]] = err[better]
        below = f < target[idx]
        lo[idx[below]] = mid[below]
        hi[idx[~below]] = mid[~below]
        done = (err <= tol) | (np.nextafter(lo[idx], 1.0) >= hi[idx])
        active[idx[done]] = False
    if pa.ndim == 0:
        return float(best[0])
    return best.reshape(pa.shape)


def empirical_quantile(samples: Iterable[float], q: float) -> float:
    x = np.asarray(list(samples), dtype=float)
    if x.size == 0:
        raise ValueError("empirical quantile of an empty sample")
    return float(np.quantile(x, q))


def calibrate_threshold(samples: Iterable[float], target_availability: float) -> CalibrationResult:
    """Fit a Beta to IoU samples and pick the threshold for a target availability."""
    if not (0.0 < target_availability < 1.0):
        raise ValueError(f"target availability must lie in (0, 1), got {target_availability}")
    x = np.asarray(list(samples), dtype=float)
    m, v = sample_moments(x)
    params = beta_from_moments(m, v)
    q = 1.0 - target_availability
    return CalibrationResult(
        params=params,
        sample_mean=m,
        sample_variance=v,
        threshold=beta_quantile(params, q),
        target_availability=target_availability,
        empirical_threshold=empirical_quantile(x, q),
        n_samples=int(x.size),
    )


def iou_histogram(samples: Iterable[float], bins: int = HISTOGRAM_BINS) -> dict:
    """Equal-width histogram on [0, 1]; the last bin is closed on the right."""
    x = np.asarray(list(samples), dtype=float)
    counts, edges = np.histogram(x, bins=bins, range=(0.0, 1.0))
    return {"edges": [float(e) for e in edges], "counts": [int(c) for c in counts]}


def reference_comparison(result: CalibrationResult) -> dict:
    """Compare a calibration against the published study values.

    Purely informational: the published mean/standard deviation are not
    mutually consistent with the published Beta parameters, so no agreement
    is asserted here.
    """
    ref = BetaParams(*REFERENCE_PARAMS)
    ref_q = beta_quantile(ref, 1.0 - REFERENCE_AVAILABILITY)
    return {
        "reference_params": {"alpha": ref.alpha, "beta": ref.beta},
        "reference_threshold": REFERENCE_THRESHOLD,
        "reference_params_quantile": ref_q,
        "availability_at_reference_threshold": 1.0 - beta_cdf(ref, REFERENCE_THRESHOLD),
        "calibrated_threshold": result.threshold,
        "threshold_minus_reference": result.threshold - REFERENCE_THRESHOLD,
    }
