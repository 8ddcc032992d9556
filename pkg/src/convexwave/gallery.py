"""Whispering-gallery modes, their transverse flows, and Strichartz quotients.

A gallery mode pairs a transverse envelope phi on the boundary line with the
Airy profile Ai(|eta|^{2/3} x / h^{2/3} - omega_k) in the normal direction.
All evolutions are exact Fourier multipliers on the transverse spectrum; the
x-dependence rides along as the Airy factor.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .airy import ai, airy_zeros
from .fields import FrequencyWindow, TransverseGrid, WaveField, make_transverse_grid, trapezoid_weights
from .normlab import NormScanResult, fit_exponent, lqlr_norm, lr_norm


class GalleryError(ValueError):
    pass


def eigenvalue(k: int, eta: float) -> float:
    """Transverse eigenvalue |eta|^2 + omega_k |eta|^{4/3} (eta != 0)."""
    if eta == 0:
        raise GalleryError("eigenvalue requires eta != 0")
    omega = airy_zeros(k + 1)[k]
    return float(abs(eta) ** 2 + omega * abs(eta) ** (4.0 / 3.0))


@dataclass
class GalleryModeSpec:
    """Mode index, its Airy zero, the sampled envelope spectrum and the window."""

    k: int
    omega_k: float
    h: float
    grid: TransverseGrid
    envelope_spectrum: np.ndarray
    window: FrequencyWindow = field(default_factory=FrequencyWindow)

    def __post_init__(self):
        if self.k < 0:
            raise GalleryError("mode index k must be >= 0")
        if self.envelope_spectrum.shape != self.grid.eta.shape:
            raise GalleryError("envelope spectrum must be sampled on the grid's eta lattice")

    @property
    def windowed_spectrum(self) -> np.ndarray:
        return self.envelope_spectrum * self.window(self.grid.eta)


@dataclass(frozen=True)
class TransverseFlow:
    """Transverse symbol: G_s = eta^2 + omega h^{2/3} |eta|^{4/3}, G_w = sqrt(G_s).

    ``kind`` selects the time multiplier: 'schrodinger' uses exp(-i t G_s / h),
    'halfwave' the cosine propagator cos(t G_w / h) (zero-velocity data), and
    'halfwave_exp' the single exponential exp(i t G_w / h) used for the
    dispersive scans.
    """

    kind: str
    omega: float
    h: float

    def __post_init__(self):
        if self.kind not in ("schrodinger", "halfwave", "halfwave_exp"):
            raise GalleryError(f"unknown flow kind {self.kind!r}")

    def symbol(self, eta):
        eta = np.abs(np.asarray(eta, dtype=float))
        g_s = eta**2 + self.omega * self.h ** (2.0 / 3.0) * eta ** (4.0 / 3.0)
        return np.sqrt(g_s) if self.kind.startswith("halfwave") else g_s

    def multiplier(self, t: float, eta):
        g = self.symbol(eta)
        if self.kind == "schrodinger":
            return np.exp(-1j * (t / self.h) * g)
        if self.kind == "halfwave":
            return np.cos((t / self.h) * g).astype(complex)
        return np.exp(1j * (t / self.h) * g)


def coherent_state(eta0: float, h: float, grid: TransverseGrid) -> np.ndarray:
    """Gaussian wave packet h^{-1/4} exp(i(y eta0 + i y^2/2)/h) on the grid.

    L2 norm pi^{1/4}; sup norm h^{-1/4}.  The grid must hold the Gaussian to
    tail mass below 1e-10.
    """
    y = grid.y
    extent = min(abs(y[0]), abs(y[-1]))
    if extent < 6.8 * math.sqrt(h):
        raise GalleryError(f"grid half-width {extent:.3g} too small for tail mass < 1e-10")
    return h**-0.25 * np.exp(1j * y * eta0 / h - y**2 / (2.0 * h))


def make_mode_spec(k: int, h: float, envelope: np.ndarray, grid: TransverseGrid,
                   window: FrequencyWindow | None = None) -> GalleryModeSpec:
    """Build a mode spec from transverse envelope samples phi(y)."""
    window = window or FrequencyWindow()
    omega = airy_zeros(k + 1)[k]
    spectrum = grid.fft(envelope)
    return GalleryModeSpec(k=k, omega_k=omega, h=h, grid=grid,
                           envelope_spectrum=spectrum, window=window)


def default_x_grid(spec: GalleryModeSpec, n_x: int = 160, depth: float = 4.0) -> np.ndarray:
    """x-grid [0, X] with X = (depth*omega_k + 8) h^{2/3}, resolving the Airy layer."""
    x_max = (depth * spec.omega_k + 8.0) * spec.h ** (2.0 / 3.0)
    return np.linspace(0.0, x_max, n_x)


def _mode_rows(spec: GalleryModeSpec, x: np.ndarray) -> np.ndarray:
    """Airy factors Ai(|eta|^{2/3} x / h^{2/3} - omega_k), shape (nx, n_eta_active)."""
    eta = spec.grid.eta
    aeta = np.abs(eta)
    arg = aeta[None, :] ** (2.0 / 3.0) * x[:, None] / spec.h ** (2.0 / 3.0) - spec.omega_k
    return arg


def gallery_mode(spec: GalleryModeSpec, x: np.ndarray | None = None, *, t: float = 0.0,
                 tail_tol: float = 0.01) -> WaveField:
    """Sample the mode u(x, y) row by row: windowed spectrum times Airy factor, inverse FFT.

    The x-grid must reach past the Airy turning point (X >= 3 omega_k h^{2/3});
    a measured tail-mass fraction above ``tail_tol`` is an error.
    """
    if x is None:
        x = default_x_grid(spec)
    if x[-1] < 3.0 * spec.omega_k * spec.h ** (2.0 / 3.0):
        raise GalleryError(
            f"x-grid too short: X = {x[-1]:.3g} < 3 omega_k h^(2/3) = {3*spec.omega_k*spec.h**(2/3):.3g}"
        )
    spectrum = spec.windowed_spectrum
    active = np.abs(spectrum) > 1e-14 * (np.abs(spectrum).max() or 1.0)
    rows = np.zeros((x.size, spec.grid.y.size), dtype=complex)
    if np.any(active):
        arg = _mode_rows(spec, x)[:, active]
        airy_fac = ai(arg.ravel()).reshape(arg.shape)
        spec_rows = np.zeros((x.size, spec.grid.y.size), dtype=complex)
        spec_rows[:, active] = airy_fac * spectrum[active][None, :]
        rows = spec.grid.ifft(spec_rows)
    fld = WaveField(values=rows, x=x, y=spec.grid.y, h=spec.h, t=t)
    profile = np.abs(rows) ** 2 @ trapezoid_weights(spec.grid.y)
    wx = trapezoid_weights(x)
    total = float(profile @ wx)
    tail = float(profile[x > 0.9 * x[-1]] @ wx[x > 0.9 * x[-1]])
    if total > 0 and tail > tail_tol * total:
        raise GalleryError(f"x-grid too short: tail mass fraction {tail/total:.2e} beyond 0.9 X")
    return fld


def evolve(spec: GalleryModeSpec, flow: TransverseFlow, t: float,
           x: np.ndarray | None = None, t_max_warn: float = 1.0) -> WaveField:
    """Mode at time t: spectrum multiplied by the flow's multiplier, then reassembled."""
    if not 0.0 <= t <= t_max_warn:
        warnings.warn(f"t = {t} outside [0, {t_max_warn}]; evolution is exact but unvalidated there")
    evolved = GalleryModeSpec(
        k=spec.k, omega_k=spec.omega_k, h=spec.h, grid=spec.grid,
        envelope_spectrum=spec.envelope_spectrum * flow.multiplier(t, spec.grid.eta),
        window=spec.window,
    )
    fld = gallery_mode(evolved, x=x, t=t)
    return fld


def norm_equivalence(k: int, h: float, envelope: np.ndarray, grid: TransverseGrid, r,
                     windows: tuple[FrequencyWindow, FrequencyWindow, FrequencyWindow] | None = None,
                     x: np.ndarray | None = None) -> dict:
    """Sandwich ratios of the h^{-2/(3r)}-normalized mode norm between envelope norms.

    With nested windows psi1 < psi < psi2 (each equal to 1 on the support of
    the previous), returns middle/left and right/middle; both stay in an
    h-independent band.
    """
    if windows is None:
        windows = (
            FrequencyWindow(1.0, 0.045, 0.09),
            FrequencyWindow(1.0, 0.1, 0.2),
            FrequencyWindow(1.0, 0.25, 0.35),
        )
    psi1, psi, psi2 = windows
    if not (psi.contains_support_of(psi1) and psi2.contains_support_of(psi)):
        raise GalleryError("windows must nest: psi = 1 on supp psi1 and psi2 = 1 on supp psi")
    spectrum = grid.fft(envelope)
    if float(np.abs(spectrum).max(initial=0.0)) == 0.0:
        raise GalleryError("zero envelope: ratios undefined")
    spec = make_mode_spec(k, h, envelope, grid, window=psi)
    u = gallery_mode(spec, x=x)
    middle = h ** (-2.0 / (3.0 * r)) * lr_norm(u, r) if r != math.inf else lr_norm(u, r)
    wy = trapezoid_weights(grid.y)

    def filtered_norm(win):
        filt = grid.ifft(spectrum * win(grid.eta))
        if r == math.inf:
            return float(np.abs(filt).max())
        return float((np.abs(filt) ** r @ wy) ** (1.0 / r))

    left = filtered_norm(psi1)
    right = filtered_norm(psi2)
    if left == 0.0 or middle == 0.0:
        raise GalleryError("vanishing filtered norm: ratios undefined")
    return {"lower_ratio": middle / left, "upper_ratio": right / middle,
            "middle": middle, "left": left, "right": right}


def _quotient_one_h(flow_kind: str, data: str, k: int, q, r, t_window, h: float,
                    n_t: int, window: FrequencyWindow, n_x: int) -> dict:
    omega = airy_zeros(k + 1)[k]
    t0, t1 = t_window
    # spatial window wide enough for the transported packet plus spreading
    if flow_kind == "schrodinger":
        speed = 2.0 + 2.0 * window.outer_halfwidth
        y_lo, y_hi = -0.8, speed * t1 + 0.8
    else:
        y_lo, y_hi = -(t1 + 0.9), t1 + 0.9
    grid = make_transverse_grid(h, y_lo, y_hi, eta_max=window.center + window.outer_halfwidth + 0.1,
                                oversample=1.6)
    if data == "coherent":
        envelope = coherent_state(1.0, h, grid)
    elif data == "gaussian":
        envelope = np.exp(1j * grid.y / h - grid.y**2 / 2.0)
    else:
        raise GalleryError(f"unknown data kind {data!r}")
    spec = make_mode_spec(k, h, envelope, grid, window=window)
    flow = TransverseFlow(kind=flow_kind, omega=omega, h=h)
    x = default_x_grid(spec, n_x=n_x)

    arg = _mode_rows(spec, x)
    base = spec.windowed_spectrum
    active = np.abs(base) > 1e-13 * np.abs(base).max()
    airy_fac = ai(arg[:, active].ravel()).reshape((x.size, int(active.sum())))
    eta_act = grid.eta[active]
    rows_act = airy_fac * base[active][None, :]

    wy = trapezoid_weights(grid.y)
    wx = trapezoid_weights(x)
    xi_act = grid.xi[active]
    phase0 = np.exp(1j * grid.y[0] * xi_act)

    times = np.linspace(t0, t1, n_t)
    inner = np.empty(n_t)
    l2_0 = None
    n_grid = grid.y.size
    for it, t in enumerate(times):
        mult = flow.multiplier(t, eta_act)
        spec_rows = np.zeros((x.size, n_grid), dtype=complex)
        spec_rows[:, active] = rows_act * (mult * phase0)[None, :]
        vals = np.fft.ifft(spec_rows, axis=1) / grid.dy
        if r == math.inf:
            inner[it] = np.abs(vals).max()
        else:
            inner[it] = float(np.einsum("i,ij,j->", wx, np.abs(vals) ** r, wy)) ** (1.0 / r)
        if it == 0:
            l2_0 = float(np.einsum("i,ij,j->", wx, np.abs(vals) ** 2, wy)) ** 0.5
    lqlr = lqlr_norm(inner, q, r, times=times)
    return {"h": h, "lqlr": lqlr, "l2_initial": l2_0, "quotient": lqlr / l2_0,
            "n_y": grid.y.size, "n_x": x.size}


def strichartz_quotient(flow_kind: str, data: str, q, r, t_window, h_list, *, k: int = 0,
                        n_t: int = 25, window: FrequencyWindow | None = None,
                        n_x: int = 120, threads: int = 1) -> NormScanResult:
    """Scan |u|_{Lq Lr} / |u(0)|_{L2} over h and fit the exponent.

    ``data`` is 'coherent' (the optimality packet) or 'gaussian' (an O(1)
    envelope at frequency 1/h).  The time integral uses ``n_t`` uniform
    samples of exact multiplier evolutions.
    """
    window = window or FrequencyWindow()
    q = float(q)
    r = float(r) if r != math.inf else math.inf
    rows = []
    reliable = True
    for h in h_list:
        try:
            rows.append(_quotient_one_h(flow_kind, data, k, q, r, t_window, float(h), n_t, window, n_x))
        except GalleryError:
            reliable = False
            raise
    samples = [(row["h"], row["quotient"]) for row in rows]
    slope, stderr = None, None
    hs = [s[0] for s in samples]
    if len(samples) >= 4 and math.log10(max(hs) / min(hs)) >= 1.5:
        fit = fit_exponent(samples)
        slope, stderr = fit.slope, fit.stderr
    return NormScanResult(q=q, r=r, t_window=tuple(t_window), samples=samples,
                          fitted_exponent=slope, stderr=stderr, reliable=reliable,
                          meta={"flow": flow_kind, "data": data, "k": k, "rows": rows})
