"""Construction of the rational-plus-polynomial approximation.

The approximant is a partial-fraction sum over tapered exponentially
clustered poles on the negative real axis plus a low-degree polynomial tail.
Residues are explicit; the tail is fit by least squares to the analytic
remainder (far quadrature poles plus constants), which is evaluated in a
cancellation-free combined form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import SectorDomain
from .kernels import PoleCollisionError, log_weight_constant

__all__ = [
    "ApproxConfig",
    "RationalApprox",
    "TailFit",
    "optimal_sigma",
    "clustered_poles",
    "clustered_poles_quadrature_form",
    "residues_power",
    "residues_power_log",
    "fit_tail",
    "build_approximation",
    "serialize",
    "deserialize",
]

TARGETS = ("power", "power_log", "prefactor_power", "prefactor_power_log")


def optimal_sigma(alpha: float, beta: float) -> float:
    """Clustering parameter sqrt(2*(2-beta))*pi/sqrt(alpha), the fastest
    choice on a sector of half-opening beta*pi/2."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if not 0.0 <= beta < 2.0:
        raise ValueError("beta must lie in [0, 2)")
    return math.sqrt(2.0 * (2.0 - beta)) * math.pi / math.sqrt(alpha)


@dataclass(frozen=True)
class ApproxConfig:
    """All knobs of one approximation build.

    n2 defaults to ceil(1.3*n1), the experimentally efficient tail degree;
    rate-verification sweeps use smaller tails (see analysis.run_sweep).
    Derived quantities: h = sigma^2*alpha^2, kappa = alpha/(1-alpha),
    truncation T = sigma*alpha*sqrt(n1), and the quadrature term count
    n_quad paired with n1 through n1 = ceil(n_quad/(kappa+1)^2).
    """

    alpha: float
    beta: float
    sigma: float
    n1: int
    C: float = 1.0
    n2: int = -1  # -1 means the ceil(1.3*n1) default
    target: str = "power"
    g: Callable | None = None

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if not 0.0 <= self.beta < 2.0:
            raise ValueError("beta must lie in [0, 2)")
        if self.sigma <= 0.0:
            raise ValueError("sigma must be positive")
        if self.C <= 0.0:
            raise ValueError("C must be positive")
        if self.n1 < 1:
            raise ValueError("n1 must be >= 1")
        if self.n2 == -1:
            object.__setattr__(self, "n2", math.ceil(1.3 * self.n1))
        if self.n2 < 0:
            raise ValueError("n2 must be >= 0")
        if self.n2 > 120:
            raise ValueError("tail degree capped at 120 for conditioning control")
        if self.target not in TARGETS:
            raise ValueError(f"unknown target {self.target!r}")
        if self.target.startswith("prefactor") != (self.g is not None):
            raise ValueError("prefactor targets require g; plain targets forbid it")
        if self.T / (1.0 - self.alpha) > 600.0:
            raise ValueError("parameters exceed the double-precision range")

    @property
    def h(self) -> float:
        return self.sigma**2 * self.alpha**2

    @property
    def kappa(self) -> float:
        return self.alpha / (1.0 - self.alpha)

    @property
    def T(self) -> float:
        return self.sigma * self.alpha * math.sqrt(self.n1)

    @property
    def n_quad(self) -> int:
        # largest integer count consistent with n1 = ceil(n_quad/(kappa+1)^2)
        ratio = (self.kappa + 1.0) ** 2
        n = int(math.floor(self.n1 * ratio + 1e-9))
        while math.ceil(n / ratio - 1e-12) > self.n1:
            n -= 1
        return n

    @property
    def eta(self) -> float:
        return optimal_sigma(self.alpha, self.beta) / self.sigma

    @property
    def log_like(self) -> bool:
        return self.target.endswith("power_log")


def clustered_poles(cfg: ApproxConfig) -> np.ndarray:
    """The n1 tapered poles -C*exp(-sigma*(sqrt(n1)-sqrt(j))); the last one
    is exactly -C."""
    j = np.arange(1, cfg.n1 + 1)
    return -cfg.C * np.exp(-cfg.sigma * (math.sqrt(cfg.n1) - np.sqrt(j)))


def clustered_poles_quadrature_form(cfg: ApproxConfig) -> np.ndarray:
    """Same poles written through the quadrature nodes,
    -C*exp((sqrt(j*h)-T)/alpha); agrees with clustered_poles to rounding."""
    j = np.arange(1, cfg.n1 + 1)
    return -cfg.C * np.exp((np.sqrt(j * cfg.h) - cfg.T) / cfg.alpha)


def _far_poles(cfg: ApproxConfig) -> np.ndarray:
    j = np.arange(cfg.n1 + 1, cfg.n_quad + 1)
    return -cfg.C * np.exp((np.sqrt(j * cfg.h) - cfg.T) / cfg.alpha)


def residues_power(cfg: ApproxConfig) -> np.ndarray:
    """Residues sqrt(h)*p_j*|p_j|^alpha*sin(alpha*pi)/(2*sqrt(j)*alpha*pi);
    all real and negative."""
    a = cfg.alpha
    p = clustered_poles(cfg)
    j = np.arange(1, cfg.n1 + 1)
    return math.sqrt(cfg.h) * p * np.abs(p)**a * math.sin(a * math.pi) \
        / (2.0 * np.sqrt(j) * a * math.pi)


def _log_weights(cfg: ApproxConfig):
    a = cfg.alpha
    sin_a = math.sin(a * math.pi)
    chi = log_weight_constant(a, cfg.C)
    w1 = cfg.h * sin_a / (2.0 * a**2 * math.pi)
    w2 = 0.5 * (chi / cfg.C**a - cfg.T * sin_a / (a**2 * math.pi))
    return w1, w2


def residues_power_log(cfg: ApproxConfig) -> np.ndarray:
    """Residues of the log-target scheme: the plain h-weighted part plus the
    sqrt(h/j)-weighted correction carrying chi and T."""
    p = clustered_poles(cfg)
    j = np.arange(1, cfg.n1 + 1)
    w1, w2 = _log_weights(cfg)
    return (w1 + w2 * np.sqrt(cfg.h / j)) * p * np.abs(p)**cfg.alpha


def _remainder_values(cfg: ApproxConfig, zs: np.ndarray) -> np.ndarray:
    """The analytic remainder (far poles folded with their constants, plus
    the near-pole constant sum), in the cancellation-free form where each
    far term is ~ |p|^(alpha-1)*z."""
    a = cfg.alpha
    zs = np.asarray(zs, complex)
    far = _far_poles(cfg)
    j_far = np.arange(cfg.n1 + 1, cfg.n_quad + 1)
    j_near = np.arange(1, cfg.n1 + 1)
    p_near_mag = np.abs(clustered_poles(cfg))**a
    far_mag = np.abs(far)**a
    ratio = zs[:, None] / (zs[:, None] - far)  # |.| <= |z|/|p| for p < 0
    if cfg.log_like:
        w1, w2 = _log_weights(cfg)
        c_near = w1 * p_near_mag.sum() + w2 * np.sum(np.sqrt(cfg.h / j_near) * p_near_mag)
        fw = w1 + w2 * np.sqrt(cfg.h / j_far)
    else:
        pref = math.sin(a * math.pi) / (2.0 * a * math.pi)
        c_near = pref * np.sum(np.sqrt(cfg.h / j_near) * p_near_mag)
        fw = pref * np.sqrt(cfg.h / j_far)
    return ratio @ (fw * far_mag) + c_near


def _chebyshev_radii(n: int, radius: float) -> np.ndarray:
    k = np.arange(n)
    return radius * 0.5 * (1.0 - np.cos(math.pi * (k + 0.5) / n))


def _fit_points(cfg: ApproxConfig, domain: SectorDomain, fine: bool) -> np.ndarray:
    """Deterministic sample set: a few points per pole scale near the apex,
    Chebyshev-distributed radii toward the outer edge (which keeps the
    polynomial fit well posed at high degree), a fan of rays, and the arc."""
    radius = domain.radius
    mags = np.abs(clustered_poles(cfg))
    mults = (0.6, 0.9, 1.1, 1.4) if fine else (0.75, 1.0, 1.25)
    radii = np.outer(mags, mults).ravel()
    lo = max(mags.min() * 0.5, radius * 1e-17)
    n_cheb = (6 if fine else 4) * (cfg.n2 + 1)
    radii = np.concatenate([
        radii,
        np.geomspace(lo, radius, 65 if fine else 33),
        _chebyshev_radii(max(n_cheb, 48), radius),
    ])
    radii = np.unique(np.clip(radii, lo, radius))
    half = cfg.beta * math.pi / 2
    n_ray = 9 if fine else 5
    thetas = np.linspace(-half, half, n_ray) if cfg.beta > 0 else np.array([0.0])
    pts = (radii[:, None] * np.exp(1j * thetas)).ravel()
    n_arc = (4 if fine else 2) * (cfg.n2 + 1)
    if cfg.beta > 0:
        arc = radius * np.exp(1j * np.linspace(-half, half, max(n_arc, 64)))
        pts = np.concatenate([pts, arc])
    pts = np.concatenate([pts, [0.0]])
    return (pts * np.exp(1j * domain.axis_rotation)) + domain.apex


def _poly_lstsq(zs, values, degree, scale):
    V = (np.asarray(zs, complex) / scale)[:, None] ** np.arange(degree + 1)
    if V.shape[0] < V.shape[1]:
        raise ValueError("increase sampling or reduce N2 (rank-deficient fit)")
    norms = np.linalg.norm(V, axis=0)
    norms[norms == 0.0] = 1.0
    c, _, _, _ = np.linalg.lstsq(V / norms, np.asarray(values, complex), rcond=None)
    return c / norms


def _poly_eval(coeffs, zs, scale):
    return np.polynomial.polynomial.polyval(np.asarray(zs, complex) / scale, coeffs)


@dataclass(frozen=True)
class TailFit:
    coeffs: np.ndarray
    scale: float
    fit_rms: float
    validation_sup: float


def _fit_tail_full(cfg: ApproxConfig, domain: SectorDomain,
                   values_fn=None) -> TailFit:
    values_fn = values_fn or (lambda zs: _remainder_values(cfg, zs))
    zs = _fit_points(cfg, domain, fine=False)
    y = values_fn(zs)
    coeffs = _poly_lstsq(zs, y, cfg.n2, domain.radius)
    resid = _poly_eval(coeffs, zs, domain.radius) - y
    rms = float(np.sqrt(np.mean(np.abs(resid) ** 2)))
    zv = _fit_points(cfg, domain, fine=True)
    sup = float(np.max(np.abs(_poly_eval(coeffs, zv, domain.radius) - values_fn(zv))))
    return TailFit(coeffs=coeffs, scale=domain.radius, fit_rms=rms, validation_sup=sup)


def fit_tail(cfg: ApproxConfig, domain: SectorDomain) -> np.ndarray:
    """Degree-n2 polynomial coefficients (in the z/radius basis) fit to the
    analytic remainder over clustered boundary samples of the domain."""
    return _fit_tail_full(cfg, domain).coeffs


@dataclass(frozen=True, eq=False)
class RationalApprox:
    """Evaluable partial fractions plus polynomial tail.

    Immutable; evaluation is safe from concurrent callers.  ``alpha`` and
    ``target`` are carried for convenience when the object came from a
    build; they are not part of the serialized form.
    """

    poles: np.ndarray
    residues: np.ndarray
    tail_coeffs: np.ndarray
    basis_scale: float
    alpha: float | None = None
    target: str | None = None

    def __post_init__(self):
        p = np.asarray(self.poles, complex).ravel()
        r = np.asarray(self.residues, complex).ravel()
        t = np.asarray(self.tail_coeffs, complex).ravel()
        if p.size != r.size:
            raise ValueError("poles and residues must pair up")
        # natural index order of the tapered formula: p_1 nearest the origin,
        # magnitudes strictly growing to |p_n1| = C
        if p.size and not (np.all(np.diff(p.real) < 0) and np.all(p.real < 0)):
            raise ValueError("poles must be negative with strictly growing magnitude")
        if not (np.all(np.isfinite(r.view(float))) and np.all(np.isfinite(t.view(float)))):
            raise ValueError("non-finite coefficients")
        for name, arr in (("poles", p), ("residues", r), ("tail_coeffs", t)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n_poles(self) -> int:
        return int(self.poles.size)

    @property
    def degree(self) -> int:
        return int(self.tail_coeffs.size) - 1

    def eval(self, z):
        """Evaluate at a complex point or array (partial fractions in
        ascending pole order for scalars, then the Horner tail)."""
        scalar = np.isscalar(z) or np.asarray(z).ndim == 0
        if scalar:
            z = complex(z)
            gap = np.abs(z - self.poles)
            if np.any(gap < 1e-14 * np.maximum(np.abs(self.poles), max(abs(z), 1e-300))):
                raise PoleCollisionError("pole collision")
            pf = sum((a / (z - p) for a, p in zip(self.residues.tolist(), self.poles.tolist())), 0j)
            return pf + complex(_poly_eval(self.tail_coeffs, z, self.basis_scale))
        zs = np.asarray(z, complex)
        flat = zs.ravel()
        out = np.empty(flat.shape, complex)
        for k in range(0, flat.size, 1024):
            blk = flat[k:k + 1024, None]
            gap = np.abs(blk - self.poles)
            thr = 1e-14 * np.maximum(np.abs(self.poles), np.maximum(np.abs(blk), 1e-300))
            if np.any(gap < thr):
                raise PoleCollisionError("pole collision")
            out[k:k + 1024] = np.sum(self.residues / (blk - self.poles), axis=1)
        return (out + _poly_eval(self.tail_coeffs, flat, self.basis_scale)).reshape(zs.shape)

    __call__ = eval


def build_approximation(cfg: ApproxConfig, domain: SectorDomain | None = None) -> RationalApprox:
    """Build the full approximant for cfg.target on the given sector."""
    if domain is None:
        domain = SectorDomain(beta=cfg.beta)
    if abs(domain.beta - cfg.beta) > 1e-12:
        raise ValueError("config and domain disagree on beta")
    poles = clustered_poles(cfg)
    base_res = residues_power_log(cfg) if cfg.log_like else residues_power(cfg)
    if cfg.target in ("power", "power_log"):
        residues = base_res
        tail = _fit_tail_full(cfg, domain)
    else:
        gp = np.array([cfg.g(complex(p)) for p in poles.tolist()], complex)
        residues = gp * base_res

        def corrected(zs):
            zs = np.asarray(zs, complex)
            gz = np.array([cfg.g(complex(w)) for w in zs.tolist()], complex)
            near = _partial_fractions(zs, poles, base_res)
            folded = _partial_fractions(zs, poles, residues)
            return gz * (near + _remainder_values(cfg, zs)) - folded

        tail = _fit_tail_full(cfg, domain, values_fn=corrected)
    return RationalApprox(
        poles=poles,
        residues=residues,
        tail_coeffs=tail.coeffs,
        basis_scale=tail.scale,
        alpha=cfg.alpha,
        target=cfg.target,
    )


def _partial_fractions(zs, poles, residues):
    zs = np.asarray(zs, complex)
    return np.sum(residues / (zs[:, None] - poles), axis=1)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _fmt_coeff(c: complex) -> str:
    if c.imag == 0.0:
        return _fmt(c.real)
    return f"({_fmt(c.real)}{c.imag:+.17g}j)"


def serialize(approx: RationalApprox) -> str:
    """Text form: 'pole re im' / 'residue re im' lines, one 'tail c0 c1 ...'
    line, and 'scale s'.  Decimal-17 fields round-trip doubles exactly."""
    lines = [f"pole {_fmt(p.real)} {_fmt(p.imag)}" for p in approx.poles.tolist()]
    lines += [f"residue {_fmt(r.real)} {_fmt(r.imag)}" for r in approx.residues.tolist()]
    lines.append("tail " + " ".join(_fmt_coeff(c) for c in approx.tail_coeffs.tolist()))
    lines.append(f"scale {_fmt(approx.basis_scale)}")
    return "\n".join(lines) + "\n"


def deserialize(text: str) -> RationalApprox:
    poles, residues, tail, scale = [], [], [0j], 1.0
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        kind, _, rest = line.partition(" ")
        if kind == "pole":
            re_s, im_s = rest.split()
            poles.append(complex(float(re_s), float(im_s)))
        elif kind == "residue":
            re_s, im_s = rest.split()
            residues.append(complex(float(re_s), float(im_s)))
        elif kind == "tail":
            tail = [complex(tok) for tok in rest.split()]
        elif kind == "scale":
            scale = float(rest)
        else:
            raise ValueError(f"unknown record {kind!r}")
    return RationalApprox(
        poles=np.array(poles, complex),
        residues=np.array(residues, complex),
        tail_coeffs=np.array(tail, complex),
        basis_scale=scale,
    )
