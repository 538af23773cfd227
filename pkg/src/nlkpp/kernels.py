"""Model parameters and one-dimensional projected dispersal kernels.

Everything downstream consumes the objects built here: the reaction
coefficient block, kernel families with Laplace-transform access and
abscissa metadata, directional projection of multi-dimensional kernels,
the competition balance J_theta, and a machine-checkable report of the
standing assumptions Q1..Q7:

    Q1  kappa_plus > m
    Q2  J_theta(s) = kappa_plus*a_plus(s) - theta*kappa_nonlocal*a_minus(s) >= 0 a.e.
    Q3  sigma(a_plus) > 0 (some exponential moment is finite)
    Q4  a_plus >= rho on some interval [r-delta, r+delta]
    Q5  a_plus bounded
    Q6  finite first absolute moment
    Q7  J_theta >= rho on a neighborhood of the origin

Almost-everywhere statements (Q2, Q7) are checked on grids; the report can
only claim numeric status, not measure-theoretic truth.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .errors import AssumptionFailure, UsageError
from .laplace import QUAD_ABS, QUAD_REL

_POS_FLOOR = 1e-6     # the "rho" used for Q4/Q7 grid scans
_UNDECIDED_BAND = 1e-10


def _quad_split(f, lo, hi, breaks=()):
    """Adaptive quadrature split at interior kinks; quad cannot take break
    points together with infinite limits, so the segments are explicit."""
    xs = [lo] + sorted(p for p in breaks if lo < p < hi) + [hi]
    total = 0.0
    for a, b in zip(xs[:-1], xs[1:]):
        val, _ = integrate.quad(f, a, b, limit=400, epsabs=QUAD_ABS, epsrel=QUAD_REL)
        total += val
    return total


@dataclass(frozen=True)
class Params:
    """Reaction coefficients: dispersal rate, mortality, and the two
    competition strengths (local and nonlocal)."""

    kappa_plus: float
    m: float
    kappa_local: float = 1.0
    kappa_nonlocal: float = 0.0

    def __post_init__(self):
        if not (self.kappa_plus > 0 and self.m > 0):
            raise UsageError("kappa_plus and m must be positive")
        if self.kappa_local < 0 or self.kappa_nonlocal < 0:
            raise UsageError("competition coefficients must be nonnegative")
        if self.kappa_local + self.kappa_nonlocal <= 0:
            raise UsageError("kappa_local + kappa_nonlocal must be positive")

    @property
    def kappa(self) -> float:
        return self.kappa_local + self.kappa_nonlocal


def theta(params: Params) -> float:
    """Positive carrying-capacity state (kappa_plus - m) / kappa.

    Only defined when Q1 holds; the zero state is the other equilibrium.
    """
    if params.kappa_plus <= params.m:
        raise AssumptionFailure(
            "Q1", f"kappa_plus={params.kappa_plus} <= m={params.m}: no positive state")
    return (params.kappa_plus - params.m) / params.kappa


class Kernel:
    """Base for 1D probability densities with Laplace-transform access.

    `sigma_right` is the abscissa of convergence of int a(s)e^{z s} ds for
    z > 0, `sigma_left` the same for the reflected kernel (it bounds how far
    the transform extends to negative arguments). `mass` is 1 except for
    truncated kernels, which keep their defect on purpose.
    """

    family = "generic"
    mass = 1.0

    def pdf(self, s):
        raise NotImplementedError

    @property
    def sigma_right(self) -> float:
        raise NotImplementedError

    @property
    def sigma_left(self) -> float:
        raise NotImplementedError

    @property
    def symmetric(self) -> bool:
        return False

    # integration endpoints for quadrature: (lo, hi) may be +-inf
    _support = (-math.inf, math.inf)
    # interior points quad should not step over (kinks)
    _breaks = (0.0,)

    def support_radius(self, eps: float = 1e-17) -> float:
        """Distance beyond which the density is below eps of its peak."""
        raise NotImplementedError

    def _quad_weighted(self, weight):
        lo, hi = self._support
        return _quad_split(lambda s: self.pdf(s) * weight(s), lo, hi, self._breaks)

    def _tilted(self, z: float, order: int = 0):
        """pdf(s) e^{z s} s^order through logs: inside the strip the product
        decays even where the exponential factor alone would overflow."""

        def g(s):
            d = float(self.pdf(s))
            if d <= 0.0:
                return 0.0
            r = math.log(d) + z * s
            if r < -745.0:
                return 0.0
            val = math.exp(min(r, 700.0))
            return val * s ** order if order else val

        return g

    def transform(self, z: float) -> float:
        """Bilateral Laplace transform at real z, +inf when divergent."""
        if z >= self.sigma_right or -z >= self.sigma_left:
            return math.inf
        lo, hi = self._support
        return _quad_split(self._tilted(z), lo, hi, self._breaks)

    def transform_deriv(self, z: float, order: int = 1) -> float:
        """d^k/dz^k of the transform, i.e. int s^k a(s) e^{z s} ds."""
        if z >= self.sigma_right or -z >= self.sigma_left:
            return math.inf
        lo, hi = self._support
        return _quad_split(self._tilted(z, order), lo, hi, self._breaks)

    def transform_complex(self, z: complex) -> complex:
        x, y = z.real, z.imag
        env = self._tilted(x)
        lo, hi = self._support
        re = _quad_split(lambda s: env(s) * math.cos(y * s), lo, hi, self._breaks)
        im = _quad_split(lambda s: env(s) * math.sin(y * s), lo, hi, self._breaks)
        return complex(re, im)

    def cdf(self, x: float) -> float:
        lo, _ = self._support
        if x <= lo:
            return 0.0
        return _quad_split(self.pdf, lo, x, self._breaks)

    def moment_first(self) -> float:
        if self.symmetric:
            return 0.0
        return self._quad_weighted(lambda s: s)

    def moment_first_abs(self) -> float:
        return self._quad_weighted(abs)

    def pdf_max(self) -> float:
        s = np.linspace(-self.support_radius(1e-12), self.support_radius(1e-12), 4001)
        return float(np.max(self.pdf(s)))

    def reflected(self) -> "Kernel":
        raise UsageError(f"reflection not supported for family {self.family}")

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Laplace(Kernel):
    """Two-sided exponential (mu/2) e^{-mu|s|}."""

    mu: float = 1.0
    family = "laplace"

    def __post_init__(self):
        if self.mu <= 0:
            raise UsageError("laplace kernel needs mu > 0")

    def pdf(self, s):
        return 0.5 * self.mu * np.exp(-self.mu * np.abs(s))

    @property
    def sigma_right(self):
        return self.mu

    sigma_left = sigma_right

    @property
    def symmetric(self):
        return True

    def support_radius(self, eps=1e-17):
        return math.log(1.0 / eps) / self.mu

    def transform(self, z):
        if abs(z) >= self.mu:
            return math.inf
        return self.mu ** 2 / (self.mu ** 2 - z * z)

    def transform_deriv(self, z, order=1):
        if abs(z) >= self.mu:
            return math.inf
        mu2, d = self.mu ** 2, self.mu ** 2 - z * z
        if order == 1:
            return 2.0 * mu2 * z / d ** 2
        if order == 2:
            return 2.0 * mu2 * (mu2 + 3.0 * z * z) / d ** 3
        return super().transform_deriv(z, order)

    def transform_complex(self, z):
        return self.mu ** 2 / (self.mu ** 2 - z * z)

    def cdf(self, x):
        if x < 0:
            return 0.5 * math.exp(self.mu * x)
        return 1.0 - 0.5 * math.exp(-self.mu * x)

    def moment_first_abs(self):
        return 1.0 / self.mu

    def reflected(self):
        return self

    def to_dict(self):
        return {"family": "laplace", "mu": self.mu}


@dataclass(frozen=True)
class Gaussian(Kernel):
    variance: float = 1.0
    family = "gaussian"

    def __post_init__(self):
        if self.variance <= 0:
            raise UsageError("gaussian kernel needs variance > 0")

    def pdf(self, s):
        v = self.variance
        return np.exp(-np.asarray(s) ** 2 / (2 * v)) / math.sqrt(2 * math.pi * v)

    sigma_right = property(lambda self: math.inf)
    sigma_left = property(lambda self: math.inf)

    @property
    def symmetric(self):
        return True

    def support_radius(self, eps=1e-17):
        return math.sqrt(2.0 * self.variance * math.log(1.0 / eps))

    def transform(self, z):
        return math.exp(0.5 * self.variance * z * z)

    def transform_deriv(self, z, order=1):
        v = self.variance
        if order == 1:
            return v * z * self.transform(z)
        if order == 2:
            return (v + (v * z) ** 2) * self.transform(z)
        return super().transform_deriv(z, order)

    def transform_complex(self, z):
        return np.exp(0.5 * self.variance * z * z)

    def moment_first_abs(self):
        return math.sqrt(2.0 * self.variance / math.pi)

    def reflected(self):
        return self

    def to_dict(self):
        return {"family": "gaussian", "variance": self.variance}


@dataclass(frozen=True)
class Uniform(Kernel):
    lo: float = -1.0
    hi: float = 1.0
    family = "uniform"

    def __post_init__(self):
        if not self.hi > self.lo:
            raise UsageError("uniform kernel needs hi > lo")

    def pdf(self, s):
        s = np.asarray(s, dtype=float)
        return np.where((s >= self.lo) & (s <= self.hi), 1.0 / (self.hi - self.lo), 0.0)

    sigma_right = property(lambda self: math.inf)
    sigma_left = property(lambda self: math.inf)

    @property
    def symmetric(self):
        return abs(self.lo + self.hi) < 1e-15

    @property
    def _support(self):
        return (self.lo, self.hi)

    _breaks = ()

    def support_radius(self, eps=1e-17):
        return max(abs(self.lo), abs(self.hi))

    def transform(self, z):
        w = self.hi - self.lo
        if abs(z) * w < 1e-8:
            # series around z=0, avoids the 0/0
            a, b = self.lo, self.hi
            return 1.0 + z * (a + b) / 2 + z * z * (a * a + a * b + b * b) / 6
        return (math.exp(z * self.hi) - math.exp(z * self.lo)) / (z * w)

    def transform_complex(self, z):
        w = self.hi - self.lo
        if abs(z) * w < 1e-8:
            a, b = self.lo, self.hi
            return 1.0 + z * (a + b) / 2 + z * z * (a * a + a * b + b * b) / 6
        return (np.exp(z * self.hi) - np.exp(z * self.lo)) / (z * w)

    def cdf(self, x):
        return min(1.0, max(0.0, (x - self.lo) / (self.hi - self.lo)))

    def moment_first(self):
        return 0.5 * (self.lo + self.hi)

    def reflected(self):
        return Uniform(-self.hi, -self.lo)

    def to_dict(self):
        return {"family": "uniform", "endpoints": [self.lo, self.hi]}


@dataclass(frozen=True)
class ExpPoly(Kernel):
    """alpha * e^{-mu |s|^p} / (1 + |s|^q), normalized numerically.

    The abscissa depends on p alone: 0 for p < 1, mu for p = 1, infinite
    for p > 1. At p = 1 the endpoint transform is finite exactly when q > 1.
    """

    p: float = 1.0
    q: float = 0.0
    mu: float = 1.0
    alpha: float = field(init=False, default=0.0, compare=False)

    family = "exp_poly"

    def __post_init__(self):
        if self.mu <= 0 or self.p < 0 or self.q < 0:
            raise UsageError("exp_poly needs mu > 0, p >= 0, q >= 0")
        if self.p == 0 and self.q <= 1:
            raise UsageError("exp_poly with p=0 needs q > 1 to be integrable")
        norm, _ = integrate.quad(
            lambda s: math.exp(-self.mu * s ** self.p) / (1.0 + s ** self.q),
            0, math.inf, limit=400, epsabs=QUAD_ABS, epsrel=QUAD_REL)
        object.__setattr__(self, "alpha", 1.0 / (2.0 * norm))

    def pdf(self, s):
        a = np.abs(np.asarray(s, dtype=float))
        return self.alpha * np.exp(-self.mu * a ** self.p) / (1.0 + a ** self.q)

    @property
    def sigma_right(self):
        if self.p < 1:
            return 0.0
        if self.p == 1:
            return self.mu
        return math.inf

    sigma_left = sigma_right

    @property
    def symmetric(self):
        return True

    def support_radius(self, eps=1e-17):
        return math.log(1.0 / eps) / self.mu if self.p >= 1 else \
            (math.log(1.0 / eps) / self.mu) ** (1.0 / self.p)

    def transform(self, z):
        # p=1 endpoint z = +-mu is finite for q > 1: the exponential cancels
        # on one side and the algebraic factor has to carry the integral.
        if self.p == 1 and abs(abs(z) - self.mu) < 1e-14 * self.mu:
            if self.q <= 1:
                return math.inf
            flat, _ = integrate.quad(lambda s: 1.0 / (1.0 + s ** self.q),
                                     0, math.inf, limit=400,
                                     epsabs=QUAD_ABS, epsrel=QUAD_REL)
            damp, _ = integrate.quad(
                lambda s: math.exp(-2.0 * self.mu * s) / (1.0 + s ** self.q),
                0, math.inf, limit=400, epsabs=QUAD_ABS, epsrel=QUAD_REL)
            return self.alpha * (flat + damp)
        return super().transform(z)

    def transform_deriv(self, z, order=1):
        if self.p == 1 and abs(abs(z) - self.mu) < 1e-14 * self.mu:
            sgn = 1.0 if z > 0 else -1.0
            if self.q <= order + 1:
                # divergence comes from the side where the exponential cancels
                return math.inf if z > 0 or order % 2 == 0 else -math.inf
            flat, _ = integrate.quad(
                lambda s: s ** order / (1.0 + s ** self.q),
                0, math.inf, limit=400, epsabs=QUAD_ABS, epsrel=QUAD_REL)
            damp, _ = integrate.quad(
                lambda s: s ** order * math.exp(-2.0 * self.mu * s) / (1.0 + s ** self.q),
                0, math.inf, limit=400, epsabs=QUAD_ABS, epsrel=QUAD_REL)
            return self.alpha * (sgn ** order) * (flat + (-1.0) ** order * damp)
        return super().transform_deriv(z, order)

    def reflected(self):
        return self

    def to_dict(self):
        return {"family": "exp_poly", "p": self.p, "q": self.q, "mu": self.mu}


@dataclass(frozen=True)
class Tabulated(Kernel):
    """Samples on a uniform grid; zero outside. Compact numerical support
    means the abscissa is infinite no matter what the table was sampled
    from, which the abscissa report labels accordingly."""

    grid_start: float
    grid_step: float
    values: tuple

    family = "tabulated"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if self.grid_step <= 0 or v.ndim != 1 or len(v) < 2:
            raise UsageError("tabulated kernel needs grid_step > 0 and >= 2 values")
        if np.any(v < 0):
            raise UsageError("tabulated kernel has negative entries")
        total = float(v.sum() * self.grid_step)
        if abs(total - 1.0) > 1e-6:
            raise UsageError(f"tabulated kernel mass {total:.8f} is not 1")
        object.__setattr__(self, "values", tuple(float(x) for x in v))

    def _grid(self):
        return self.grid_start + self.grid_step * np.arange(len(self.values))

    def pdf(self, s):
        s = np.asarray(s, dtype=float)
        idx = np.rint((s - self.grid_start) / self.grid_step).astype(int)
        ok = (idx >= 0) & (idx < len(self.values)) & \
            (np.abs(s - (self.grid_start + idx * self.grid_step)) <= 0.5 * self.grid_step)
        vals = np.asarray(self.values)
        out = np.where(ok, vals[np.clip(idx, 0, len(vals) - 1)], 0.0)
        return out if out.ndim else float(out)

    sigma_right = property(lambda self: math.inf)
    sigma_left = property(lambda self: math.inf)

    @property
    def symmetric(self):
        v = np.asarray(self.values)
        g = self._grid()
        return abs(g[0] + g[-1]) < 1e-12 and bool(np.allclose(v, v[::-1], atol=1e-12))

    def support_radius(self, eps=1e-17):
        g = self._grid()
        return max(abs(g[0]), abs(g[-1])) + self.grid_step

    def transform(self, z):
        g = self._grid()
        return float(self.grid_step * np.sum(np.asarray(self.values) * np.exp(z * g)))

    def transform_deriv(self, z, order=1):
        g = self._grid()
        return float(self.grid_step * np.sum(np.asarray(self.values) * g ** order * np.exp(z * g)))

    def transform_complex(self, z):
        g = self._grid()
        return complex(self.grid_step * np.sum(np.asarray(self.values) * np.exp(z * g)))

    def cdf(self, x):
        g = self._grid()
        return float(self.grid_step * np.sum(np.asarray(self.values)[g <= x]))

    def moment_first(self):
        g = self._grid()
        return float(self.grid_step * np.sum(np.asarray(self.values) * g))

    def moment_first_abs(self):
        g = self._grid()
        return float(self.grid_step * np.sum(np.asarray(self.values) * np.abs(g)))

    def pdf_max(self):
        return max(self.values)

    def reflected(self):
        g = self._grid()
        return Tabulated(-g[-1], self.grid_step, tuple(reversed(self.values)))

    def to_dict(self):
        return {"family": "tabulated",
                "table": {"grid_start": self.grid_start,
                          "grid_step": self.grid_step,
                          "values": list(self.values)}}


@dataclass(frozen=True)
class Truncated(Kernel):
    """Base kernel cut to (-inf, cutoff), mass defect kept (no renormalizing).

    The right support is bounded, so the abscissa becomes infinite and the
    transform is entire in the right half plane.
    """

    base: Kernel
    cutoff: float

    family = "truncated"

    def pdf(self, s):
        s = np.asarray(s, dtype=float)
        return np.where(s < self.cutoff, self.base.pdf(s), 0.0)

    @property
    def mass(self):
        return self.base.cdf(self.cutoff)

    sigma_right = property(lambda self: math.inf)

    @property
    def sigma_left(self):
        return self.base.sigma_left

    @property
    def _support(self):
        lo, _ = self.base._support
        return (lo, self.cutoff)

    def support_radius(self, eps=1e-17):
        return self.base.support_radius(eps)

    def transform(self, z):
        if -z >= self.sigma_left:
            return math.inf
        lo, hi = self._support
        return _quad_split(self.base._tilted(z), lo, hi, self.base._breaks)

    def transform_deriv(self, z, order=1):
        if -z >= self.sigma_left:
            return math.inf
        lo, hi = self._support
        return _quad_split(self.base._tilted(z, order), lo, hi, self.base._breaks)

    def cdf(self, x):
        return self.base.cdf(min(x, self.cutoff))

    def moment_first(self):
        lo, hi = self._support
        return _quad_split(lambda s: s * self.base.pdf(s), lo, hi, self.base._breaks)

    def to_dict(self):
        return {"family": "truncated", "cutoff": self.cutoff, "base": self.base.to_dict()}


@dataclass(frozen=True)
class RadialExpMarginal(Kernel):
    """1D marginal of the d-dimensional radial exponential e^{-mu |x|}.

    d=2 has the closed Bessel form; higher d falls back to a radial
    quadrature per evaluation point, which is slow but only used for
    cross-checks.
    """

    mu: float
    dim: int

    family = "radial_exp_marginal"

    def __post_init__(self):
        if self.mu <= 0 or self.dim < 2:
            raise UsageError("radial exponential marginal needs mu > 0, dim >= 2")

    def pdf(self, s):
        x = self.mu * np.abs(np.asarray(s, dtype=float))
        if self.dim == 2:
            # mu/pi * (x K1(x)), with x K1(x) -> 1 at the origin
            xs = np.where(x > 0, x, 1.0)
            return self.mu / math.pi * np.where(
                x > 0, xs * special.k1e(xs) * np.exp(-xs), 1.0)
        d = self.dim
        surf = 2.0 * math.pi ** ((d - 1) / 2.0) / math.gamma((d - 1) / 2.0)
        norm = self.mu ** d * math.gamma(d / 2.0) / (2.0 * math.pi ** (d / 2.0) * math.gamma(d))

        def one(si):
            val, _ = integrate.quad(
                lambda r: r ** (d - 2) * math.exp(-self.mu * math.hypot(si, r)),
                0, math.inf, limit=200, epsabs=QUAD_ABS, epsrel=QUAD_REL)
            return norm * surf * val

        return np.vectorize(one)(s)

    @property
    def sigma_right(self):
        return self.mu

    sigma_left = sigma_right

    @property
    def symmetric(self):
        return True

    def support_radius(self, eps=1e-17):
        return math.log(1.0 / eps) / self.mu + 10.0 / self.mu

    def reflected(self):
        return self

    def to_dict(self):
        return {"family": "radial_exp_marginal", "mu": self.mu, "dim": self.dim}


@dataclass(frozen=True)
class KernelPair:
    a_plus: Kernel
    a_minus: Kernel

    def reflected(self):
        return KernelPair(self.a_plus.reflected(), self.a_minus.reflected())


# ---------------------------------------------------------------------------
# directional projection

def project_to_direction(kernel_nd, xi) -> Kernel:
    """Project a d-dimensional kernel descriptor onto the line through xi.

    Supported descriptors: a 1D Kernel (xi = +-1), {"kind": "product",
    "factors": [...]} along coordinate axes, {"kind": "radial_gaussian"},
    {"kind": "radial_exponential"}. The marginal of a probability density
    is again a probability density.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if abs(np.linalg.norm(xi) - 1.0) > 1e-12:
        raise UsageError("direction must have unit norm")

    if isinstance(kernel_nd, Kernel):
        if len(xi) != 1:
            raise UsageError("1D kernel given with a multi-dimensional direction")
        return kernel_nd if xi[0] > 0 else kernel_nd.reflected()

    kind = kernel_nd.get("kind")
    d = len(xi)
    if kind == "product":
        factors = kernel_nd["factors"]
        if len(factors) != d:
            raise UsageError("product kernel dimension does not match direction")
        axis = np.argmax(np.abs(xi))
        if abs(abs(xi[axis]) - 1.0) > 1e-12:
            raise UsageError("product kernels only project along coordinate axes")
        k = factors[axis] if isinstance(factors[axis], Kernel) else kernel_from_dict(factors[axis])
        return k if xi[axis] > 0 else k.reflected()
    if kind == "radial_gaussian":
        # isotropic: the marginal along any unit direction keeps the per-axis variance
        return Gaussian(kernel_nd["variance"])
    if kind == "radial_exponential":
        mu = kernel_nd["rate"]
        return Laplace(mu) if d == 1 else RadialExpMarginal(mu, d)
    raise UsageError(f"unsupported kernel descriptor {kind!r}")


def directional_moment(kernel: Kernel) -> float:
    """First moment int s a(s) ds; needs Q6 (finite absolute moment)."""
    m1a = kernel.moment_first_abs()
    if not math.isfinite(m1a):
        raise AssumptionFailure("Q6", "first absolute moment diverges")
    return kernel.moment_first()


# ---------------------------------------------------------------------------
# competition balance and assumption report

@dataclass(frozen=True)
class JTheta:
    """Evaluable J_theta = kappa_plus*a_plus - theta*kappa_nonlocal*a_minus
    plus the grid diagnostics the assumption report needs."""

    pair: KernelPair
    params: Params
    theta: float
    grid_min: float
    origin_rho: float       # min over the widest interval around 0 where J >= floor
    origin_delta: float     # half-width of that interval, 0.0 when none exists

    def __call__(self, s):
        kp = self.params.kappa_plus
        kn = self.params.kappa_nonlocal
        return kp * self.pair.a_plus.pdf(s) - self.theta * kn * self.pair.a_minus.pdf(s)


def j_theta(pair: KernelPair, params: Params, n_grid: int = 8001) -> JTheta:
    th = theta(params)
    radius = max(pair.a_plus.support_radius(1e-15), pair.a_minus.support_radius(1e-15))
    s = np.linspace(-radius, radius, n_grid)
    kp, kn = params.kappa_plus, params.kappa_nonlocal
    vals = kp * pair.a_plus.pdf(s) - th * kn * pair.a_minus.pdf(s)

    # widest symmetric interval around the origin staying above the floor
    i0 = n_grid // 2
    k = 0
    while i0 - k - 1 >= 0 and i0 + k + 1 < n_grid \
            and vals[i0 - k - 1] >= _POS_FLOOR and vals[i0 + k + 1] >= _POS_FLOOR:
        k += 1
    if vals[i0] >= _POS_FLOOR and k > 0:
        delta = k * (s[1] - s[0])
        rho = float(np.min(vals[i0 - k:i0 + k + 1]))
    else:
        delta, rho = 0.0, float(vals[i0])
    return JTheta(pair, params, th, float(np.min(vals)), rho, delta)


@dataclass(frozen=True)
class AssumptionReport:
    """Status per assumption: {"holds", "fails", "undecidable-numerically"}
    with one diagnostic scalar each."""

    entries: dict

    def status(self, label: str) -> str:
        return self.entries[label][0]

    def diagnostic(self, label: str) -> float:
        return self.entries[label][1]

    def failing(self, labels=None) -> list:
        labels = labels or sorted(self.entries)
        return [l for l in labels if self.entries[l][0] != "holds"]

    def require(self, labels) -> None:
        bad = self.failing(labels)
        if bad:
            raise AssumptionFailure(bad[0], f"assumption {bad[0]} does not hold "
                                            f"(diagnostic {self.entries[bad[0]][1]:.6g})")

    def to_dict(self) -> dict:
        return {l: {"status": st, "diagnostic": d} for l, (st, d) in sorted(self.entries.items())}


def _sign_status(x: float, band: float = _UNDECIDED_BAND):
    if x > band:
        return "holds"
    if x < -band:
        return "fails"
    return "undecidable-numerically"


def check_assumptions(pair: KernelPair, params: Params) -> AssumptionReport:
    """Grid-and-quadrature verdict on Q1..Q7 for one kernel pair."""
    entries = {}
    kp, m = params.kappa_plus, params.m
    entries["Q1"] = (_sign_status(kp - m, 1e-12 * max(kp, m)), kp - m)

    q1_ok = entries["Q1"][0] == "holds"
    if q1_ok:
        jt = j_theta(pair, params)
        if params.kappa_nonlocal == 0.0:
            entries["Q2"] = ("holds", 0.0)
        else:
            mn = jt.grid_min
            entries["Q2"] = ("holds" if mn >= -_UNDECIDED_BAND else "fails", mn)
            if -_UNDECIDED_BAND <= mn < 0:
                entries["Q2"] = ("undecidable-numerically", mn)
    else:
        # theta undefined; the J-based checks cannot run
        entries["Q2"] = ("undecidable-numerically", math.nan)

    sig = pair.a_plus.sigma_right
    entries["Q3"] = ("holds" if sig > 0 else "fails", sig)

    # Q4: an interval of length >= one grid cell where the density clears the floor
    radius = pair.a_plus.support_radius(1e-15)
    s = np.linspace(-radius, radius, 8001)
    dens = np.asarray(pair.a_plus.pdf(s))
    above = dens >= _POS_FLOOR
    best = run = 0
    for a in above:
        run = run + 1 if a else 0
        best = max(best, run)
    cell = s[1] - s[0]
    entries["Q4"] = ("holds" if best >= 2 else "fails", best * cell)

    sup = pair.a_plus.pdf_max()
    entries["Q5"] = ("holds" if math.isfinite(sup) else "fails", sup)

    try:
        m1 = pair.a_plus.moment_first_abs()
        entries["Q6"] = ("holds" if math.isfinite(m1) else "fails", m1)
    except Exception:
        entries["Q6"] = ("fails", math.inf)

    if q1_ok:
        if jt.origin_delta > 0:
            entries["Q7"] = ("holds", jt.origin_rho)
        else:
            near = jt.origin_rho  # J at the origin when no interval was found
            if near <= _UNDECIDED_BAND:
                entries["Q7"] = ("fails", near)
            else:
                entries["Q7"] = ("undecidable-numerically", near)
    else:
        entries["Q7"] = ("undecidable-numerically", math.nan)

    return AssumptionReport(entries)


# ---------------------------------------------------------------------------
# JSON ingestion

_FAMILIES = ("exp_poly", "laplace", "gaussian", "uniform", "tabulated")


def kernel_from_dict(d: dict) -> Kernel:
    fam = d.get("family")
    if fam == "laplace":
        return Laplace(float(d.get("mu", 1.0)))
    if fam == "gaussian":
        return Gaussian(float(d.get("variance", 1.0)))
    if fam == "uniform":
        lo, hi = d.get("endpoints", (-1.0, 1.0))
        return Uniform(float(lo), float(hi))
    if fam == "exp_poly":
        return ExpPoly(float(d.get("p", 1.0)), float(d.get("q", 0.0)), float(d.get("mu", 1.0)))
    if fam == "tabulated":
        t = d["table"]
        return Tabulated(float(t["grid_start"]), float(t["grid_step"]),
                         tuple(float(v) for v in t["values"]))
    if fam == "truncated":
        return Truncated(kernel_from_dict(d["base"]), float(d["cutoff"]))
    raise UsageError(f"unknown kernel family {fam!r}; expected one of {_FAMILIES}")


def load_problem(source) -> tuple:
    """Read a (KernelPair, Params) from a JSON file path, file object, or dict.

    Layout: kernel fields at top level describe a_plus; an optional
    "a_minus" object overrides the competition kernel (defaults to a_plus);
    "params" holds the coefficient block.
    """
    if isinstance(source, dict):
        doc = source
    elif hasattr(source, "read"):
        doc = json.load(source)
    else:
        with open(source) as fh:
            doc = json.load(fh)
    try:
        p = doc["params"]
        params = Params(float(p["kappa_plus"]), float(p["m"]),
                        float(p.get("kappa_local", 0.0)), float(p.get("kappa_nonlocal", 0.0)))
        a_plus = kernel_from_dict(doc)
        a_minus = kernel_from_dict(doc["a_minus"]) if "a_minus" in doc else a_plus
    except KeyError as e:
        raise UsageError(f"kernel document is missing {e}") from None
    return KernelPair(a_plus, a_minus), params
