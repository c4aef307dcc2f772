"""Catalog of operator-convex f-divergences and their mixing measures.

Each entry packages the convex generator ``f`` (normalized so that
f(1) = f'(1) = 0 and f''(1) = 1), its Fenchel conjugate, the kernel
``h(t) = f(t) / (t - 1)^2`` extended continuously through t = 1, the
companion ``g(t) = t h(t)``, and the probability measure ``nu`` on [0, 1]
that represents f as a mixture of weighted squares:

    f(t) = 1/2 * integral of (t - 1)^2 / (rho t + 1 - rho) dnu(rho).

The kernel satisfies h(t) = 1/2 * integral of 1/(rho t + 1 - rho) dnu(rho),
so near t = 1 it admits the series
h(1 + e) = 1/2 * (1 - m1 e + m2 e^2 - m3 e^3 + ...) in the moments
m_k of nu.  Evaluation switches to that series when |t - 1| < 1e-4 to
avoid the 0/0 cancellation of the direct quotient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import roots_jacobi

from .exceptions import DomainError, UnsupportedAlpha

SERIES_SWITCH = 1e-4
DEFAULT_NODES = 400


@lru_cache(maxsize=64)
def _leggauss(n: int):
    return np.polynomial.legendre.leggauss(n)


@lru_cache(maxsize=64)
def _jacgauss(n: int, a: float, b: float):
    return roots_jacobi(n, a, b)


@dataclass(frozen=True)
class MixingMeasure:
    """Probability measure on [0, 1]: point atoms plus a density part.

    The density part is integrated with Gauss-Legendre on the panels
    between ``breakpoints`` (for piecewise-smooth densities), or with
    Gauss-Jacobi when the density is ``jacobi_coef * (1-rho)^a * rho^b``
    (endpoint singularities handled exactly by the weight function).
    """

    atoms: tuple[tuple[float, float], ...] = ()
    density: Callable[[np.ndarray], np.ndarray] | None = None
    scheme: str = "legendre"
    jacobi_exponents: tuple[float, float] | None = None
    jacobi_coef: float = 1.0
    breakpoints: tuple[float, ...] = ()
    default_nodes: int = DEFAULT_NODES

    def nodes_weights(self, nodes: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Quadrature rule (rho_i, w_i) for the density part only."""
        n = int(nodes or self.default_nodes)
        if self.density is None:
            return np.empty(0), np.empty(0)
        if self.scheme == "jacobi":
            a, b = self.jacobi_exponents
            x, w = _jacgauss(n, a, b)
            rho = (x + 1.0) / 2.0
            wr = w * self.jacobi_coef * 2.0 ** (-(a + b + 1.0))
            return rho, wr
        edges = (0.0,) + tuple(self.breakpoints) + (1.0,)
        x, w = _leggauss(n)
        rs, ws = [], []
        for lo, hi in zip(edges[:-1], edges[1:]):
            r = lo + (x + 1.0) / 2.0 * (hi - lo)
            rs.append(r)
            ws.append(w * (hi - lo) / 2.0 * self.density(r))
        return np.concatenate(rs), np.concatenate(ws)

    def integral(self, fn: Callable[[np.ndarray], np.ndarray], nodes: int | None = None) -> float:
        total = 0.0
        for rho, weight in self.atoms:
            total += weight * float(np.asarray(fn(np.asarray(rho))).reshape(()))
        r, w = self.nodes_weights(nodes)
        if r.size:
            total += float(np.sum(w * fn(r)))
        return total

    def total_mass(self, nodes: int | None = None) -> float:
        return self.integral(lambda r: np.ones_like(r), nodes)

    def moment(self, k: int, nodes: int | None = None) -> float:
        return self.integral(lambda r: r**k, nodes)


@dataclass(frozen=True)
class DivergenceSpec:
    """A fixed f-divergence with all derived scalar functions attached.

    All callables are vectorized over numpy arrays; ``h``/``h_prime`` and
    ``g_prime`` apply the near-1 series switch internally so they are safe
    on the full domain t > 0.  ``f_conj`` returns +inf outside the conjugate
    domain ``conj_domain`` (half-open or closed as dictated by the entry).
    """

    name: str
    alpha: float | None
    f: Callable
    f_prime: Callable
    f_conj: Callable
    conj_domain: tuple[float, float]
    h: Callable
    h_prime: Callable
    g: Callable
    g_prime: Callable
    nu: MixingMeasure
    nu_moments: tuple[float, float, float]

    def __repr__(self) -> str:  # keep reports compact
        if self.name == "alpha":
            return f"DivergenceSpec(alpha:{self.alpha})"
        return f"DivergenceSpec({self.name})"


def _series_pair(m1: float, m2: float, m3: float):
    def h_series(e):
        return 0.5 * (1.0 - m1 * e + m2 * e * e - m3 * e * e * e)

    def hp_series(e):
        return 0.5 * (-m1 + 2.0 * m2 * e - 3.0 * m3 * e * e)

    return h_series, hp_series


def _make_h_pair(f, f_prime, moments):
    """Build (h, h') from the generator, with the near-1 series branch."""
    h_series, hp_series = _series_pair(*moments)

    def h(t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        e = t - 1.0
        out = np.empty_like(t)
        small = np.abs(e) < SERIES_SWITCH
        if small.any():
            out[small] = h_series(e[small])
        big = ~small
        if big.any():
            tb, eb = t[big], e[big]
            out[big] = f(tb) / (eb * eb)
        return float(out[0]) if scalar else out

    def h_prime(t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        e = t - 1.0
        out = np.empty_like(t)
        small = np.abs(e) < SERIES_SWITCH
        if small.any():
            out[small] = hp_series(e[small])
        big = ~small
        if big.any():
            tb, eb = t[big], e[big]
            out[big] = (f_prime(tb) * eb - 2.0 * f(tb)) / (eb * eb * eb)
        return float(out[0]) if scalar else out

    return h, h_prime


def _scalarized(expr):
    """Vectorized closed form that returns a float on scalar input."""

    def wrapped(t):
        t = np.asarray(t, dtype=float)
        out = expr(np.atleast_1d(t))
        return float(out[0]) if t.ndim == 0 else out

    return wrapped


def _attach_g(h, h_prime):
    def g(t):
        return np.asarray(t, dtype=float) * h(t)

    def g_prime(t):
        t = np.asarray(t, dtype=float)
        return h(t) + t * h_prime(t)

    return g, g_prime


def _masked_conj(raw, lo, hi, lo_closed, hi_closed):
    """Wrap a conjugate formula so it returns +inf outside its domain."""

    def f_conj(u):
        u = np.asarray(u, dtype=float)
        scalar = u.ndim == 0
        u = np.atleast_1d(u)
        ok = np.ones(u.shape, dtype=bool)
        ok &= (u >= lo) if lo_closed else (u > lo)
        ok &= (u <= hi) if hi_closed else (u < hi)
        out = np.full(u.shape, np.inf)
        if ok.any():
            out[ok] = raw(u[ok])
        return float(out[0]) if scalar else out

    return f_conj


def _entry(name, alpha, f, f_prime, conj_raw, conj_dom, moments, nu,
           h=None, h_prime=None):
    lo, hi, lo_closed, hi_closed = conj_dom
    if h is None:
        h, h_prime = _make_h_pair(f, f_prime, moments)
    g, g_prime = _attach_g(h, h_prime)
    return DivergenceSpec(
        name=name,
        alpha=alpha,
        f=f,
        f_prime=f_prime,
        f_conj=_masked_conj(conj_raw, lo, hi, lo_closed, hi_closed),
        conj_domain=(lo, hi),
        h=h,
        h_prime=h_prime,
        g=g,
        g_prime=g_prime,
        nu=nu,
        nu_moments=moments,
    )


# --- generators written in cancellation-safe forms -------------------------
# Sums of O(1) terms near t = 1 are avoided: subtractions pair numbers of
# the same magnitude so the 0/0 quotients in h keep ~12 correct digits at
# the series switch.


def _f_kl(t):
    return t * np.log(t) - (t - 1.0)


def _f_rkl(t):
    return (t - 1.0) - np.log(t)


def _f_hel(t):
    s = np.sqrt(t)
    return 2.0 * (s - 1.0) ** 2


def _f_pearson(t):
    return 0.5 * (t - 1.0) ** 2


def _f_rpearson(t):
    return (t - 1.0) ** 2 / (2.0 * t)


def _f_lecam(t):
    return (t - 1.0) ** 2 / (t + 1.0)


def _f_js(t):
    e = t - 1.0
    return 2.0 * t * np.log1p(e / (t + 1.0)) - 2.0 * np.log1p(e / 2.0)


def _build_catalog():
    cat = {}

    cat["kl"] = _entry(
        "kl", 1.0,
        _f_kl,
        np.log,
        lambda u: np.expm1(u),
        (-np.inf, np.inf, False, False),
        (1.0 / 3.0, 1.0 / 6.0, 1.0 / 10.0),
        MixingMeasure(density=lambda r: 2.0 * (1.0 - r)),
    )
    cat["rkl"] = _entry(
        "rkl", 0.0,
        _f_rkl,
        lambda t: 1.0 - 1.0 / t,
        lambda u: -np.log1p(-u),
        (-np.inf, 1.0, False, False),
        (2.0 / 3.0, 1.0 / 2.0, 2.0 / 5.0),
        MixingMeasure(density=lambda r: 2.0 * r),
    )

    _h_hel = _scalarized(lambda t: 2.0 / (np.sqrt(t) + 1.0) ** 2)
    _hp_hel = _scalarized(lambda t: -2.0 / (np.sqrt(t) * (np.sqrt(t) + 1.0) ** 3))

    cat["hellinger"] = _entry(
        "hellinger", 0.5,
        _f_hel,
        lambda t: 2.0 * (np.sqrt(t) - 1.0) / np.sqrt(t),
        lambda u: u / (1.0 - u / 2.0),
        (-np.inf, 2.0, False, False),
        (1.0 / 2.0, 5.0 / 16.0, 7.0 / 32.0),
        MixingMeasure(scheme="jacobi", jacobi_exponents=(0.5, 0.5),
                      jacobi_coef=8.0 / math.pi,
                      density=lambda r: 8.0 / math.pi * np.sqrt(r * (1.0 - r))),
        h=_h_hel, h_prime=_hp_hel,
    )

    cat["pearson"] = _entry(
        "pearson", 2.0,
        _f_pearson,
        lambda t: t - 1.0,
        lambda u: 0.5 * u * u + u,
        (-np.inf, np.inf, False, False),
        (0.0, 0.0, 0.0),
        MixingMeasure(atoms=((0.0, 1.0),)),
        h=_scalarized(lambda t: np.full(t.shape, 0.5)),
        h_prime=_scalarized(lambda t: np.zeros(t.shape)),
    )
    cat["rpearson"] = _entry(
        "rpearson", -1.0,
        _f_rpearson,
        lambda t: 0.5 * (1.0 - 1.0 / (t * t)),
        lambda u: 1.0 - np.sqrt(1.0 - 2.0 * u),
        (-np.inf, 0.5, False, True),
        (1.0, 1.0, 1.0),
        MixingMeasure(atoms=((1.0, 1.0),)),
        h=_scalarized(lambda t: 0.5 / t),
        h_prime=_scalarized(lambda t: -0.5 / t**2),
    )
    cat["lecam"] = _entry(
        "lecam", None,
        _f_lecam,
        lambda t: (t - 1.0) * (t + 3.0) / (t + 1.0) ** 2,
        lambda u: 4.0 - u - 4.0 * np.sqrt(1.0 - u),
        (-np.inf, 1.0, False, True),
        (1.0 / 2.0, 1.0 / 4.0, 1.0 / 8.0),
        MixingMeasure(atoms=((0.5, 1.0),)),
        h=_scalarized(lambda t: 1.0 / (t + 1.0)),
        h_prime=_scalarized(lambda t: -1.0 / (t + 1.0) ** 2),
    )
    cat["js"] = _entry(
        "js", None,
        _f_js,
        lambda t: 2.0 * np.log1p((t - 1.0) / (t + 1.0)),
        lambda u: -2.0 * np.log(2.0 - np.exp(u / 2.0)),
        (-np.inf, 2.0 * math.log(2.0), False, False),
        (1.0 / 2.0, 7.0 / 24.0, 3.0 / 16.0),
        MixingMeasure(density=lambda r: 2.0 - 2.0 * np.abs(1.0 - 2.0 * r),
                      breakpoints=(0.5,)),
    )
    return cat


_CATALOG = _build_catalog()

NAMED_DIVERGENCES = tuple(_CATALOG)

# alpha values that coincide with named entries, per the family limits
_SPECIAL_ALPHA = {1.0: "kl", 0.0: "rkl", 0.5: "hellinger", 2.0: "pearson", -1.0: "rpearson"}


def _alpha_entry(alpha: float) -> DivergenceSpec:
    a = float(alpha)
    coef = (2.0 / a) * math.sin((a - 1.0) * math.pi) / ((a - 1.0) * math.pi)

    def f(t):
        t = np.asarray(t, dtype=float)
        return (np.expm1(a * np.log(t)) - a * (t - 1.0)) / (a * (a - 1.0))

    def f_prime(t):
        t = np.asarray(t, dtype=float)
        return np.expm1((a - 1.0) * np.log(t)) / (a - 1.0)

    expo = a / (a - 1.0)

    def conj_raw(u):
        z = 1.0 + (a - 1.0) * u
        return (np.power(z, expo) - 1.0) / a

    if a > 1.0:
        dom = (-1.0 / (a - 1.0), np.inf, True, False)
    elif a > 0.0:
        dom = (-np.inf, 1.0 / (1.0 - a), False, False)
    else:  # a in (-1, 0): endpoint value is finite
        dom = (-np.inf, 1.0 / (1.0 - a), False, True)

    m1 = (2.0 - a) / 3.0
    m2 = (a - 2.0) * (a - 3.0) / 12.0
    m3 = -(a - 2.0) * (a - 3.0) * (a - 4.0) / 60.0
    nu = MixingMeasure(
        scheme="jacobi",
        jacobi_exponents=(a, 1.0 - a),
        jacobi_coef=coef,
        density=lambda r, c=coef: c * (1.0 - r) ** a * r ** (1.0 - a),
    )
    return _entry("alpha", a, f, f_prime, conj_raw, dom, (m1, m2, m3), nu)


def make_divergence(name: str, alpha: float | None = None) -> DivergenceSpec:
    """Look up a named divergence, or build an alpha-family member.

    ``alpha`` must be supplied iff ``name == "alpha"``.  Alpha values in
    [-1, 2] are supported; the five values with named equivalents are
    routed to those entries so their exact closed forms are used.
    """
    key = name.lower()
    if key == "alpha":
        if alpha is None:
            raise UnsupportedAlpha("alpha divergence requires an alpha value")
        a = float(alpha)
        if not (-1.0 - 1e-12 <= a <= 2.0 + 1e-12):
            raise UnsupportedAlpha(f"alpha={a} outside the supported range [-1, 2]")
        for special, tgt in _SPECIAL_ALPHA.items():
            if abs(a - special) <= 1e-12:
                return _CATALOG[tgt]
        return _alpha_entry(a)
    if alpha is not None:
        raise UnsupportedAlpha(f"alpha only applies to the alpha family, not {name!r}")
    try:
        return _CATALOG[key]
    except KeyError:
        raise DomainError(
            f"unknown divergence {name!r}; choose from {sorted(_CATALOG)} or alpha"
        ) from None


def divergence_from_flag(flag: str) -> DivergenceSpec:
    """Parse a CLI-style divergence flag: a name, or ``alpha:<value>``."""
    if flag.lower().startswith("alpha:"):
        return make_divergence("alpha", float(flag.split(":", 1)[1]))
    return make_divergence(flag)


def eval_h(spec: DivergenceSpec, t) -> float | np.ndarray:
    """Evaluate the kernel h on t > 0 (series branch applied near t = 1)."""
    arr = np.asarray(t, dtype=float)
    if np.any(arr <= 0.0):
        raise DomainError("h(t) requires t > 0")
    return spec.h(t)


def nu_quadrature_integral(spec: DivergenceSpec, integrand: Callable,
                           nodes: int | None = None) -> float:
    """Integrate a function of rho against the entry's mixing measure."""
    return spec.nu.integral(integrand, nodes)
