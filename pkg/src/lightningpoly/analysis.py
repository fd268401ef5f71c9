"""Sup-norm error measurement, root-exponential rate fitting, and the
predicted error-bound evaluators used to compare theory against runs.

Sup norms are sampled, not certified: the measurement grid is refined once
and the value accepted only if it moved by less than 5% (another refinement
is tried otherwise).  Rate fits exclude errors below 1e-13 (the binary64
floor) and above 1e-2 (pre-asymptotic).
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .approx import (
    ApproxConfig,
    RationalApprox,
    _chebyshev_radii,
    _fit_tail_full,
    build_approximation,
    clustered_poles,
    optimal_sigma,
)
from .geometry import SampleGrid, SectorDomain
from .kernels import (
    KernelConfig,
    PoleCollisionError,
    trapezoid_rational,
    trapezoid_rational_log,
    truncated_integral,
    truncated_integral_log,
)

__all__ = [
    "ConvergenceRecord",
    "BoundContext",
    "make_target",
    "sup_error",
    "predicted_log_rate",
    "fit_rate",
    "quadrature_error_envelope",
    "quadrature_error_curve",
    "near_origin_check",
    "run_sweep",
    "rate_grid",
    "records_to_csv",
    "RATE_FIT_FLOOR",
    "RATE_FIT_CEILING",
]

RATE_FIT_FLOOR = 1e-13
RATE_FIT_CEILING = 1e-2

CSV_HEADER = "sigma,N1,N2,N,sup_err,predicted_log_err,runtime_ms"


@dataclass(frozen=True)
class ConvergenceRecord:
    n1: int
    n2: int
    n: int
    sup_err: float
    predicted_log_err: float
    sigma: float
    runtime_ms: float

    def __post_init__(self):
        if self.sup_err < 0:
            raise ValueError("sup_err must be nonnegative")
        if self.n != self.n1 + self.n2:
            raise ValueError("n must equal n1 + n2")


def make_target(kind: str, alpha: float, g: Callable | None = None):
    """Vectorized target function for a named approximation target."""
    def power(zs):
        zs = np.asarray(zs, complex)
        out = np.zeros(zs.shape, complex)
        nz = zs != 0
        out[nz] = np.exp(alpha * np.log(zs[nz]))
        return out

    def power_log(zs):
        zs = np.asarray(zs, complex)
        out = np.zeros(zs.shape, complex)
        nz = zs != 0
        out[nz] = np.exp(alpha * np.log(zs[nz])) * np.log(zs[nz])
        return out

    if kind == "power":
        base = power
    elif kind == "power_log":
        base = power_log
    elif kind in ("prefactor_power", "prefactor_power_log"):
        if g is None:
            raise ValueError("prefactor targets need g")
        inner = power if kind == "prefactor_power" else power_log

        def base(zs):
            zs = np.asarray(zs, complex)
            gz = np.array([g(complex(w)) for w in zs.tolist()], complex)
            return gz * inner(zs)
    else:
        raise ValueError(f"unknown target {kind!r}")
    return base


def sup_error(approx: RationalApprox, target, domain: SectorDomain,
              grid: SampleGrid) -> float:
    """Max of |approx - target| over the grid.

    Grid points colliding with a pole are skipped with a warning; more than
    1% skipped is an error.  ``target`` is a vectorized callable (see
    make_target) or a target-kind string resolved with approx.alpha.
    """
    if isinstance(target, str):
        target = make_target(target, approx.alpha)
    zs = np.asarray(grid.points, complex)
    keep = np.ones(zs.shape, bool)
    poles = approx.poles
    if poles.size:
        gap = np.abs(zs[:, None] - poles)
        thr = 1e-14 * np.maximum(np.abs(poles), np.maximum(np.abs(zs)[:, None], 1e-300))
        keep = ~(gap < thr).any(axis=1)
    n_skip = int(np.sum(~keep))
    if n_skip:
        warnings.warn(f"skipped {n_skip} grid points colliding with poles")
        if n_skip > 0.01 * zs.size:
            raise PoleCollisionError("more than 1% of grid points collide with poles")
    zs = zs[keep]
    return float(np.max(np.abs(approx.eval(zs) - target(zs))))


def predicted_log_rate(sigma: float, alpha: float, beta: float, target: str):
    """(rate, prefactor_power): error is predicted to decay like
    N^prefactor_power * exp(-rate*sqrt(N)).

    rate = sigma*alpha for sigma <= sigma_opt, else pi*eta*sqrt(2*(2-beta)*alpha)
    with eta = sigma_opt/sigma; the log target carries a sqrt(N) prefactor
    on the subcritical branch.
    """
    s_opt = optimal_sigma(alpha, beta)
    if sigma <= s_opt:
        rate = sigma * alpha
        pref = 0.5 if target.endswith("power_log") else 0.0
    else:
        eta = s_opt / sigma
        rate = math.pi * eta * math.sqrt(2.0 * (2.0 - beta) * alpha)
        pref = 0.0
    return rate, pref


def fit_rate(records: Sequence[ConvergenceRecord], floor: float = RATE_FIT_FLOOR,
             ceiling: float = RATE_FIT_CEILING):
    """Least-squares slope rho of -log(sup_err) against sqrt(N) within the
    (floor, ceiling) error band, with its r^2."""
    band = [r for r in records if floor < r.sup_err < ceiling]
    if len(band) < 4:
        raise ValueError("insufficient span: need >= 4 records inside the error band")
    x = np.sqrt([r.n for r in band])
    y = -np.log([r.sup_err for r in band])
    A = np.vstack([x, np.ones_like(x)]).T
    rho, intercept = np.linalg.lstsq(A, y, rcond=None)[0]
    resid = y - A @ np.array([rho, intercept])
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return float(rho), float(r2)


# ------------------------------------------------------------- sweeps

def rate_grid(cfg: ApproxConfig, domain: SectorDomain, refine: int = 0) -> SampleGrid:
    """Sup-norm grid: geometric radii reaching below the innermost pole,
    plus Chebyshev radii that resolve the outer region where the error
    peaks, on a fan of rays."""
    p1 = abs(clustered_poles(cfg)[0])
    depth = int(math.log(max(p1, 1e-280)) / math.log(0.5)) + 4
    depth = min(max(depth, 40), 1400) * (refine + 1)
    ratio = 0.5 ** (1.0 / (refine + 1))
    radii = np.unique(np.concatenate([
        domain.radius * ratio ** np.arange(depth + 1),
        _chebyshev_radii(192 * (refine + 1), domain.radius),
    ]))
    half = cfg.beta * math.pi / 2
    n_th = 13 * (refine + 1)
    thetas = np.linspace(-half, half, n_th) if cfg.beta > 0 else np.array([0.0])
    pts = (radii[:, None] * np.exp(1j * (thetas + domain.axis_rotation))).ravel()
    pts = np.concatenate([pts, [0.0]]) + domain.apex
    return SampleGrid(points=pts, weights_role="sup_norm", cluster_ratio=ratio)


def checked_sup_error(approx: RationalApprox, target, domain: SectorDomain,
                      cfg: ApproxConfig) -> float:
    """Sup error with one grid refinement; accepted when the refinement
    moves the value by < 5%, otherwise refined once more."""
    coarse = sup_error(approx, target, domain, rate_grid(cfg, domain, refine=0))
    fine = sup_error(approx, target, domain, rate_grid(cfg, domain, refine=1))
    if abs(fine - coarse) > 0.05 * max(fine, 1e-300):
        finer = sup_error(approx, target, domain, rate_grid(cfg, domain, refine=2))
        if abs(finer - fine) > 0.05 * max(finer, 1e-300):
            warnings.warn("sup-norm estimate still drifting after two refinements")
        return finer
    return fine


def _auto_tail_config(alpha, beta, sigma, n1, C, target, g, domain):
    """Tail degree for rate sweeps: smallest rung of an O(sqrt(n1)) ladder
    whose fit misfit is below the truncation error (or the float floor);
    keeps N = n1 + n2 close to n1 so fitted slopes stay comparable."""
    T = sigma * alpha * math.sqrt(n1)
    goal = max(math.exp(-T) / 5.0, 1e-13)
    tried = []
    for k in (2.0, 3.0, 4.0, 6.0):
        n2 = math.ceil(k * math.sqrt(n1))
        cfg = ApproxConfig(alpha=alpha, beta=beta, sigma=sigma, n1=n1, n2=n2,
                           C=C, target=target, g=g)
        tail = _fit_tail_full(cfg, domain)
        tried.append((cfg, tail.validation_sup))
        if tail.validation_sup <= goal:
            return cfg
    best = min(v for _, v in tried)
    return next(c for c, v in tried if v <= 2.0 * best)


def run_sweep(alpha: float, beta: float, sigma: float, n1_list: Iterable[int],
              C: float = 1.0, target: str = "power", g: Callable | None = None,
              n2_mode="auto", domain: SectorDomain | None = None,
              map_fn=map) -> list[ConvergenceRecord]:
    """Build approximations across n1_list and record sup errors.

    n2_mode: "auto" (default, O(sqrt(n1)) tail for clean rate fits),
    "proportional" (ceil(1.3*n1), the efficient experiment default), or an
    int fixing n2.  ``map_fn`` may be an executor map for concurrent cells;
    records come back sorted by n1 regardless.
    """
    domain = domain or SectorDomain(beta=beta)
    rate, pref = predicted_log_rate(sigma, alpha, beta, target)
    n1_list = list(n1_list)

    def cell(n1: int) -> ConvergenceRecord:
        t0 = time.perf_counter()
        if n2_mode == "auto":
            cfg = _auto_tail_config(alpha, beta, sigma, n1, C, target, g, domain)
        elif n2_mode == "proportional":
            cfg = ApproxConfig(alpha=alpha, beta=beta, sigma=sigma, n1=n1, C=C,
                               target=target, g=g)
        else:
            cfg = ApproxConfig(alpha=alpha, beta=beta, sigma=sigma, n1=n1,
                               n2=int(n2_mode), C=C, target=target, g=g)
        approx = build_approximation(cfg, domain)
        err = checked_sup_error(approx, make_target(target, alpha, g), domain, cfg)
        n = cfg.n1 + cfg.n2
        pred = pref * math.log(n) - rate * math.sqrt(n)
        ms = (time.perf_counter() - t0) * 1e3
        return ConvergenceRecord(n1=cfg.n1, n2=cfg.n2, n=n, sup_err=err,
                                 predicted_log_err=pred, sigma=sigma, runtime_ms=ms)

    records = list(map_fn(cell, n1_list))
    records.sort(key=lambda r: (r.sigma, r.n1))
    return records


def records_to_csv(records: Sequence[ConvergenceRecord]) -> str:
    """CSV rows (decimal-17 floats, newline endings) sorted by (sigma, n1)."""
    rows = [CSV_HEADER]
    for r in sorted(records, key=lambda r: (r.sigma, r.n1)):
        rows.append(
            f"{r.sigma:.17g},{r.n1},{r.n2},{r.n},{r.sup_err:.17g},"
            f"{r.predicted_log_err:.17g},{r.runtime_ms:.17g}"
        )
    return "\n".join(rows) + "\n"


# ------------------------------------------------ predicted bound context

@dataclass(frozen=True)
class BoundContext:
    """Constants of the near-origin and envelope bounds for one quadrature
    setup: the smallest admissible lattice index M0, the collision-free
    offset delta0, the split radius x_star = C*exp((c0-T)/alpha), and the
    exponent function a0beta(x) = (2-beta)*alpha*pi*(T + alpha*log(x/C))."""

    alpha: float
    beta: float
    sigma: float
    C: float
    h: float
    T: float
    eta: float
    M0: int
    delta0: float
    c0: float
    x_star: float

    @classmethod
    def from_quadrature(cls, cfg: KernelConfig, beta: float) -> "BoundContext":
        return cls.from_parameters(cfg.alpha, beta, cfg.h, cfg.T, C=cfg.C,
                                   n_quad=cfg.n_quad)

    @classmethod
    def from_parameters(cls, alpha: float, beta: float, h: float, T: float,
                        C: float = 1.0, n_quad: int = 10_000) -> "BoundContext":
        sigma = math.sqrt(h) / alpha
        rhs = max(
            h,
            math.sqrt(2.0) * alpha * math.pi,
            2.0 * math.sqrt(6.0) * alpha**2 * math.pi**2,
            alpha * math.pi * (math.sqrt((4.0 + beta) * alpha * math.pi / 2.0)
                               + (4.0 * h) ** 0.25) ** 2,
        )
        m0 = max(1, math.ceil((rhs / (alpha * math.pi)) ** 2 / h - 1e-12))
        while alpha * math.pi * math.sqrt(m0 * h) < rhs - 1e-12:
            m0 += 1
        delta0 = 0.0
        base = m0 * h + 0.25 * (2.0 - beta) ** 2 * alpha**2 * math.pi**2
        while any(abs(base + delta0 - j * h) < 1e-9 for j in range(1, n_quad + 1)):
            delta0 += h * 1e-3
        c0 = math.sqrt(base + delta0)
        x_star = C * math.exp((c0 - T) / alpha)
        return cls(alpha=alpha, beta=beta, sigma=sigma, C=C, h=h, T=T,
                   eta=optimal_sigma(alpha, beta) / sigma, M0=m0,
                   delta0=delta0, c0=c0, x_star=x_star)

    def a0beta(self, x: float) -> float:
        return (2.0 - self.beta) * self.alpha * math.pi * (self.T + self.alpha * math.log(x / self.C))

    def lattice_poles(self, x: float, theta: float, k_values=range(-2, 3)) -> np.ndarray:
        """Diagnostic: the complex-plane poles of the substituted integrand
        at z = x*e^{i*theta*pi/2}."""
        base = self.T + self.alpha * math.log(x / self.C)
        ks = np.asarray(list(k_values))
        return (base + 1j * self.alpha * math.pi * (2 * ks - 1 + theta / 2.0)) ** 2


def quadrature_error_envelope(x: float, ctx: BoundContext):
    """(Q, lower, upper) for Q(x) = x^alpha / (e^{(2pi/h) a0beta(x)} - 1) on
    [x_star, 1]; the bounds are algebraic and hold without tolerance."""
    if not ctx.x_star <= x <= 1.0:
        raise ValueError("outside envelope validity")
    q = x**ctx.alpha / math.expm1(2.0 * math.pi / ctx.h * ctx.a0beta(x))
    eta2 = ctx.eta**2
    sqh = math.sqrt(ctx.h)
    at_one = 1.0 / math.expm1(eta2 * ctx.T)
    at_split = math.exp(sqh / 2.0 - ctx.T) / math.expm1(eta2 * sqh / 2.0)
    if ctx.eta >= 1.0:
        lower, upper = at_one, at_split
    else:
        lower = (1.0 - eta2) ** (1.0 - 1.0 / eta2) * math.exp(-ctx.T) / eta2
        upper = max(at_one, at_split)
    return q, lower, upper


# ------------------------------------------------ quadrature error curves

def quadrature_error_curve(cfg_list: Sequence[KernelConfig], target: str,
                           grid: SampleGrid):
    """Rows (T, sup |I - trapezoid|) over the grid, ordered by T."""
    rows = []
    for cfg in cfg_list:
        errs = []
        for z in grid.points.tolist():
            if target == "power_log":
                ref = truncated_integral_log(z, cfg).value
                disc = trapezoid_rational_log(z, cfg)
            else:
                ref = truncated_integral(z, cfg).value
                disc = trapezoid_rational(z, cfg)
            errs.append(abs(ref - disc))
        rows.append((cfg.T, max(errs)))
    rows.sort(key=lambda r: r[0])
    return rows


def fit_slope_vs_t(rows, floor: float = RATE_FIT_FLOOR, ceiling: float = 1e-1):
    """Slope of -log(err) against T within the usable error band."""
    band = [(t, e) for t, e in rows if floor < e < ceiling]
    if len(band) < 3:
        raise ValueError("insufficient span for slope fit")
    x = np.array([t for t, _ in band])
    y = -np.log([e for _, e in band])
    A = np.vstack([x, np.ones_like(x)]).T
    slope, _ = np.linalg.lstsq(A, y, rcond=None)[0]
    return float(slope)


def arc_grid(beta: float, n: int = 31, radius: float = 1.0) -> SampleGrid:
    """Points on the outer arc x = radius of the sector."""
    half = beta * math.pi / 2
    th = np.linspace(-half, half, n) if beta > 0 else np.array([0.0])
    return SampleGrid(points=radius * np.exp(1j * th), weights_role="sup_norm")


def near_origin_check(cfg: KernelConfig, beta: float,
                      n_x: int = 14, n_theta: int = 5):
    """Max over [0, min(x_star, 1)] x [0, beta] (both half-planes) of
    |I - r|/e^{-T} and |I_log - r_log|/(T e^{-T}).

    x_star exceeds 1 whenever c0 > T (unavoidable for small T since c0 is
    bounded below by the lattice constants), so the scan clips at the
    domain radius.
    """
    ctx = BoundContext.from_quadrature(cfg, beta)
    xm = min(ctx.x_star, 1.0)
    xs = np.geomspace(xm * 1e-8, xm, n_x)
    thetas = np.linspace(0.0, beta, n_theta) if beta > 0 else np.array([0.0])
    scale_pow = math.exp(-cfg.T)
    scale_log = cfg.T * math.exp(-cfg.T)
    worst_pow = worst_log = 0.0
    for x in xs.tolist():
        for th in thetas.tolist():
            for sign in (1.0, -1.0):
                z = x * np.exp(1j * sign * th * math.pi / 2)
                z = complex(z)
                err_p = abs(truncated_integral(z, cfg).value - trapezoid_rational(z, cfg))
                err_l = abs(truncated_integral_log(z, cfg).value - trapezoid_rational_log(z, cfg))
                worst_pow = max(worst_pow, err_p / scale_pow)
                worst_log = max(worst_log, err_l / scale_log)
                if th == 0.0:
                    break
    return worst_pow, worst_log
