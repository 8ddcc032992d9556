"""Grid norms, the three-region decomposition, power-law fits and the verdict.

The counterexample verdict assembles the multi-reflection field from the cusp
module, measures mixed-norm quotients over the per-reflection time windows and
regresses the quotient against h.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fields import WaveField, trapezoid_weights
from .params import SemiclassicalParams, loss_exponent, make_params, sharp_wave_q


class NormError(ValueError):
    pass


def grid_lr_norm(values: np.ndarray, x: np.ndarray, y: np.ndarray, r) -> float:
    """L^r norm of samples on an (x, y) rectangle; r = inf returns the max."""
    if not np.all(np.isfinite(values.real)) or not np.all(np.isfinite(values.imag)):
        raise NormError("non-finite field samples")
    mod = np.abs(values)
    if r == math.inf:
        return float(mod.max(initial=0.0))
    if r < 1:
        raise NormError(f"r must be >= 1, got {r}")
    wx = trapezoid_weights(x)
    wy = trapezoid_weights(y)
    acc = float(np.einsum("i,ij,j->", wx, mod**r, wy))
    return acc ** (1.0 / r)


def lr_norm(field: WaveField, r) -> float:
    """Trapezoid-weighted L^r(Omega) norm of a sampled field."""
    return grid_lr_norm(field.values, field.x, field.y, r)


def lqlr_norm(fields, q, r, times=None, *, window_duration=None, min_per_window: int = 8) -> float:
    """Outer-L^q in time of inner L^r space norms.

    ``fields`` is a list of WaveField (or precomputed inner norms when paired
    with ``times``).  The time grid must be uniform; with ``window_duration``
    set, at least ``min_per_window`` samples per window are required.
    """
    if times is None:
        times = np.array([f.t for f in fields], dtype=float)
    else:
        times = np.asarray(times, dtype=float)
    if isinstance(fields[0], WaveField):
        inner = np.array([lr_norm(f, r) for f in fields])
    else:
        inner = np.asarray(fields, dtype=float)
    if times.size != inner.size:
        raise NormError("times and fields length mismatch")
    if times.size == 1:
        if q == math.inf:
            return float(inner[0])
        raise NormError("a single time slice needs q = inf")
    dt = np.diff(times)
    if not np.allclose(dt, dt[0], rtol=1e-9, atol=0.0):
        raise NormError("time grid must be uniform")
    if window_duration is not None and dt[0] > window_duration / min_per_window * (1 + 1e-12):
        raise NormError(
            f"{times.size} samples give dt={dt[0]:.3g} > window/{min_per_window}={window_duration/min_per_window:.3g}"
        )
    if q == math.inf:
        return float(inner.max())
    wt = trapezoid_weights(times)
    return float(np.dot(wt, inner**q) ** (1.0 / q))


@dataclass(frozen=True)
class ExponentFit:
    """OLS power-law fit on log-log axes."""

    slope: float
    stderr: float
    intercept: float
    n: int

    def __iter__(self):
        return iter((self.slope, self.stderr))


def fit_exponent(samples) -> ExponentFit:
    """Least-squares slope of log(value) against log(h).

    ``samples`` is an iterable of (h, value) pairs with positive entries;
    at least 4 points are required.
    """
    pts = [(float(h), float(v)) for h, v in samples]
    if len(pts) < 4:
        raise NormError(f"need >= 4 samples for a fit, got {len(pts)}")
    if any(h <= 0 or v <= 0 for h, v in pts):
        raise NormError("fit requires positive h and values")
    lx = np.log([h for h, _ in pts])
    ly = np.log([v for _, v in pts])
    xbar = lx.mean()
    sxx = float(np.sum((lx - xbar) ** 2))
    if sxx == 0.0:
        raise NormError("all h equal; no fit possible")
    slope = float(np.sum((lx - xbar) * (ly - ly.mean())) / sxx)
    intercept = float(ly.mean() - slope * xbar)
    resid = ly - (intercept + slope * lx)
    dof = max(len(pts) - 2, 1)
    stderr = float(math.sqrt(np.sum(resid**2) / dof / sxx))
    return ExponentFit(slope=slope, stderr=stderr, intercept=intercept, n=len(pts))


def fit_powerlaw_2d(samples) -> dict:
    """Joint OLS of log(value) on (log lam, log h).

    ``samples``: iterable of (lam, h, value).  Returns slopes and standard
    errors for both regressors; the h column may be constant, in which case
    its slope is None.
    """
    lam = np.log([s[0] for s in samples])
    lh = np.log([s[1] for s in samples])
    lv = np.log([s[2] for s in samples])
    if lam.size < 4:
        raise NormError("need >= 4 samples")
    cols = [np.ones_like(lam), lam]
    h_varies = np.ptp(lh) > 1e-12
    if h_varies:
        cols.append(lh)
    design = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(design, lv, rcond=None)
    resid = lv - design @ coef
    dof = max(lam.size - design.shape[1], 1)
    sigma2 = float(np.sum(resid**2) / dof)
    cov = sigma2 * np.linalg.inv(design.T @ design)
    out = {
        "lambda_exponent": float(coef[1]),
        "lambda_stderr": float(math.sqrt(cov[1, 1])),
        "h_exponent": float(coef[2]) if h_varies else None,
        "h_stderr": float(math.sqrt(cov[2, 2])) if h_varies else None,
        "n": int(lam.size),
    }
    return out


@dataclass(frozen=True)
class NormRegionSpec:
    """Region boundaries M h^{2/3} and A measured from the caustic fold x = a.

    In the caustic-centered variable a - x the regions are |a-x| <= M h^{2/3}
    (the fold band), M h^{2/3} < a-x <= A (the oscillatory shelf) and the far
    side x beyond the fold.  Region three starts at max(A (1+outer_margin),
    a + M h^{2/3}); with margin 0 the three regions partition the half-line
    and the r-th powers add exactly.
    """

    M: float = 2.0
    A: float | None = None
    outer_margin: float = 0.0

    def __post_init__(self):
        if self.M < 2.0:
            raise ValueError(f"M must be >= 2, got {self.M}")

    def boundaries(self, params: SemiclassicalParams) -> tuple[float, float]:
        a_cap = self.A if self.A is not None else params.a
        if a_cap > params.a * (1 + 1e-12):
            raise ValueError(f"A = {a_cap} exceeds a = {params.a}")
        band = self.M * params.h ** (2.0 / 3.0)
        lo = params.a - band
        hi = max(a_cap * (1.0 + self.outer_margin), params.a + band)
        return (lo, hi)


def region_norms(field: WaveField, spec: NormRegionSpec, r, params: SemiclassicalParams) -> dict:
    """L^r norms over the shelf / fold-band / far-side x-regions of a cusp field.

    The regional powers partition the full-grid quadrature sum exactly, so the
    r-th powers add up to the total without boundary double counting.
    """
    lo, hi = spec.boundaries(params)
    masks = {
        "shelf": field.x < lo,
        "fold": (field.x >= lo) & (field.x <= hi),
        "outer": field.x > hi,
    }
    if r == math.inf:
        return {name: grid_lr_norm(field.values[mask], field.x[mask], field.y, r)
                for name, mask in masks.items() if np.any(mask)}
    wx = trapezoid_weights(field.x)
    wy = trapezoid_weights(field.y)
    row_power = (np.abs(field.values) ** r) @ wy
    out = {}
    for name, mask in masks.items():
        if not np.any(mask):
            raise NormError(f"region '{name}' is empty on the grid")
        out[name] = float(np.dot(wx[mask], row_power[mask])) ** (1.0 / r)
    return out


@dataclass
class NormScanResult:
    """(h, norm-quotient) samples for one (q, r, t-window) plus the fitted slope."""

    q: float
    r: float
    t_window: tuple[float, float]
    samples: list
    fitted_exponent: float | None
    stderr: float | None
    regions: dict | None = None
    reliable: bool = True
    meta: dict = field(default_factory=dict)


def _fit_if_spanning(samples, min_decades: float = 1.5):
    hs = [h for h, _ in samples]
    if len(samples) >= 4 and math.log10(max(hs) / min(hs)) >= min_decades:
        fit = fit_exponent(samples)
        return fit.slope, fit.stderr
    return None, None


@dataclass
class CounterexampleVerdict:
    """Q(h) = h^beta |U_h|_{LqLr} / |U_h(0)|_{ L2 } scan and its verdict."""

    r: float
    q: float
    epsilon: float
    beta: float
    samples: list            # (h, Q)
    fitted_exponent: float | None
    stderr: float | None
    verdict: str | None      # PASS / FAIL / UNRELIABLE / None
    control_beta: float
    control_samples: list
    control_monotone_ok: bool | None
    norms: list = field(default_factory=list)  # per-h dict of raw measurements
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "q": self.q,
            "epsilon": self.epsilon,
            "beta": self.beta,
            "fitted_exponent": self.fitted_exponent,
            "stderr": self.stderr,
            "verdict": self.verdict,
            "control_beta": self.control_beta,
            "control_monotone_ok": self.control_monotone_ok,
            "samples": [[h, q] for h, q in self.samples],
            "control_samples": [[h, q] for h, q in self.control_samples],
            "meta": self.meta,
        }


def counterexample_report(r, epsilon, h_list, params_per_h=None, *, q=None, c0=0.25,
                          samples_per_sqrt_a: int = 12, threads: int = 1,
                          evaluator_opts: dict | None = None) -> CounterexampleVerdict:
    """Assemble U_h over N reflections per h and test h^beta growth of the quotient.

    beta = beta(r) - epsilon.  PASS requires Q increasing along decreasing h
    with fitted exponent <= -epsilon/2 (half the theoretical -7 eps/8, which
    absorbs the marginal lambda of desk scale).  The control run re-weights the
    same measurements with beta(r) + 0.1 and must come out non-increasing.
    """
    from . import cusp  # deferred: normlab is importable without the cusp machinery

    r = float(r)
    if r <= 4.0:
        raise NormError(f"r must be > 4 for the counterexample (got r={r})")
    beta = float(loss_exponent(r).beta_loss) - float(epsilon)
    control_beta = float(loss_exponent(r).beta_loss) + 0.1
    if q is None:
        q = float(sharp_wave_q(r, d=2))
    if params_per_h is None:
        params_per_h = [make_params(h, epsilon, c0) for h in h_list]

    def measure(params):
        return cusp.uh_mixed_norms(params, q=q, r=r, samples_per_sqrt_a=samples_per_sqrt_a,
                                   **(evaluator_opts or {}))

    if threads > 1 and len(params_per_h) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_h = list(pool.map(measure, params_per_h))
    else:
        per_h = [measure(p) for p in params_per_h]
    reliable = all(m["reliable"] for m in per_h)

    samples, control_samples, norms = [], [], []
    for params, meas in zip(params_per_h, per_h):
        quotient = meas["lqlr"] / meas["l2_initial"]
        samples.append((params.h, params.h**beta * quotient))
        control_samples.append((params.h, params.h**control_beta * quotient))
        norms.append({"h": params.h, "n_reflections": params.n_reflections, **meas})

    fitted, stderr = (None, None)
    verdict = None
    control_ok = None
    if len(samples) >= 2:
        ordered = sorted(samples, key=lambda s: -s[0])  # decreasing h
        increasing = all(b[1] > a[1] for a, b in zip(ordered, ordered[1:]))
        ctrl = sorted(control_samples, key=lambda s: -s[0])
        control_ok = all(b[1] <= a[1] * (1 + 1e-9) for a, b in zip(ctrl, ctrl[1:]))
        if len(samples) >= 4:
            fitted, stderr = _fit_if_spanning(samples)
        if not reliable:
            verdict = "UNRELIABLE"
        elif fitted is not None:
            verdict = "PASS" if (increasing and fitted <= -epsilon / 2.0) else "FAIL"
        elif len(samples) >= 2:
            verdict = "PASS" if increasing else "FAIL"

    return CounterexampleVerdict(
        r=r, q=float(q), epsilon=float(epsilon), beta=beta,
        samples=samples, fitted_exponent=fitted, stderr=stderr, verdict=verdict,
        control_beta=control_beta, control_samples=control_samples,
        control_monotone_ok=control_ok, norms=norms,
        meta={"c0": c0, "samples_per_sqrt_a": samples_per_sqrt_a},
    )
