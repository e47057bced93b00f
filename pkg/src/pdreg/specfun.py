"""Bessel, Struve and allied special functions behind the closed-form estimators.

Everything is built from scratch on numpy: power series near the origin,
exponentially convergent quadrature of the classical integral representations
in the middle range, and Hankel-type asymptotic expansions for large
arguments.  Branch boundaries were tuned so that absolute error stays below
1e-12 for the Bessel functions and 1e-10 for the Struve functions on [0, 50];
the asymptotic branches only get better beyond 50, so there is no accuracy
cliff at large arguments (errors at x ~ 150 are near machine precision).

All functions accept scalars or ndarrays and are pure, hence thread-safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "QuadratureRule",
    "adaptive_simpson",
    "bessel_j",
    "gauss_legendre_rule",
    "gen_bessel_integral",
    "integral_of_j0",
    "integral_of_tj1",
    "norm_cdf",
    "struve_h",
]

_SQRT2 = math.sqrt(2.0)

# Branch boundaries (see module docstring).  The series floor is set by
# rounding of the largest term; the quadrature branch is exact to machine
# precision; the asymptotic branch error is the first omitted term.
_J_SERIES_MAX = 10.0
_J_ASYMP_MIN = 22.0
_H_SERIES_MAX = 12.0
_H_ASYMP_MIN = 26.0

_J_SERIES_TERMS = 42
_H_SERIES_TERMS = 50
_HANKEL_TERMS = 14  # pairs (a_0..a_27) in the P/Q sums

# ---------------------------------------------------------------------------
# coefficient tables, computed once at import
# ---------------------------------------------------------------------------


def _j_series_coeffs(order: int, n: int) -> np.ndarray:
    # J0(x) = sum c_k (x^2)^k,  J1(x) = (x/2) * sum c_k (x^2)^k
    c = np.empty(n)
    c[0] = 1.0
    for k in range(1, n):
        if order == 0:
            c[k] = -c[k - 1] / (4.0 * k * k)
        else:
            c[k] = -c[k - 1] / (4.0 * k * (k + 1.0))
    return c


def _hankel_coeffs(order: int, n: int) -> np.ndarray:
    # a_k = prod_{m=1..k} (4 nu^2 - (2m-1)^2) / (k! 8^k)
    a = np.empty(n)
    a[0] = 1.0
    nu2 = 4.0 * order * order
    for k in range(1, n):
        a[k] = a[k - 1] * (nu2 - (2.0 * k - 1.0) ** 2) / (8.0 * k)
    return a


def _h0_series_coeffs(n: int) -> np.ndarray:
    # H0(x) = (x/2) * sum s_k ((x/2)^2)^k with s_0 = 4/pi
    s = np.empty(n)
    s[0] = 4.0 / math.pi
    for k in range(1, n):
        s[k] = -s[k - 1] / (k + 0.5) ** 2
    return s


def _h1_series_coeffs(n: int) -> np.ndarray:
    # H1(x) = ((x/2)^2) * sum t_k ((x/2)^2)^k with t_0 = 8/(3 pi)
    t = np.empty(n)
    t[0] = 8.0 / (3.0 * math.pi)
    for k in range(1, n):
        t[k] = -t[k - 1] / ((k + 0.5) * (k + 1.5))
    return t


def _h0_asymp_coeffs(n: int) -> np.ndarray:
    # H0(x) - Y0(x) ~ (2/(pi x)) sum g_k / x^(2k), g_k = (-1)^k ((2k-1)!!)^2
    g = np.empty(n)
    g[0] = 1.0
    for k in range(1, n):
        g[k] = -g[k - 1] * (2.0 * k - 1.0) ** 2
    return g


def _h1_asymp_coeffs(n: int) -> np.ndarray:
    # H1(x) - Y1(x) ~ (2/pi) sum e_k / x^(2k), e_0 = e_1 = 1,
    # e_{k+1} = -e_k (2k+1)(2k-1) for k >= 1
    e = np.empty(n)
    e[0] = 1.0
    if n > 1:
        e[1] = 1.0
    for k in range(1, n - 1):
        e[k + 1] = -e[k] * (2.0 * k + 1.0) * (2.0 * k - 1.0)
    return e


_J0_C = _j_series_coeffs(0, _J_SERIES_TERMS)
_J1_C = _j_series_coeffs(1, _J_SERIES_TERMS)
_A0 = _hankel_coeffs(0, 2 * _HANKEL_TERMS)
_A1 = _hankel_coeffs(1, 2 * _HANKEL_TERMS)
_H0_C = _h0_series_coeffs(_H_SERIES_TERMS)
_H1_C = _h1_series_coeffs(_H_SERIES_TERMS)
_H0_G = _h0_asymp_coeffs(12)
_H1_E = _h1_asymp_coeffs(12)

# midpoint rule nodes for the Bessel cosine integral on (series, asymp)
_J_QUAD_N = 48
_J_QUAD_THETA = (np.arange(_J_QUAD_N) + 0.5) * math.pi / _J_QUAD_N
_J_QUAD_SIN = np.sin(_J_QUAD_THETA)

# Gauss-Legendre nodes for the Struve sine integral on (series, asymp)
_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre_rule(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the n-point Gauss-Legendre rule on [a, b]."""
    if n < 2:
        raise ValueError("Gauss-Legendre rule needs n >= 2")
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    x01, w01 = _GL_CACHE[n]
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return mid + half * x01, half * w01


_H_QUAD_X, _H_QUAD_W = gauss_legendre_rule(64, 0.0, math.pi / 2.0)
_H_QUAD_COS = np.cos(_H_QUAD_X)
_H_QUAD_SIN2 = np.sin(_H_QUAD_X) ** 2


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _as_array(x, name: str) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return np.atleast_1d(arr), scalar


def _polyval_ascending(coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
    # Horner evaluation of sum coeffs[k] z^k
    out = np.full_like(z, coeffs[-1])
    for c in coeffs[-2::-1]:
        out = out * z + c
    return out


def _hankel_pq(a: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # P = sum (-1)^j a_{2j} x^{-2j},  Q = sum (-1)^j a_{2j+1} x^{-2j-1}
    z = 1.0 / (x * x)
    p = _polyval_ascending(a[0::2] * (-1.0) ** np.arange(_HANKEL_TERMS), z)
    q = _polyval_ascending(a[1::2] * (-1.0) ** np.arange(_HANKEL_TERMS), z) / x
    return p, q


def _bessel_j_asymp(order: int, x: np.ndarray) -> np.ndarray:
    a = _A0 if order == 0 else _A1
    p, q = _hankel_pq(a, x)
    omega = x - (0.5 * order + 0.25) * math.pi
    return np.sqrt(2.0 / (math.pi * x)) * (p * np.cos(omega) - q * np.sin(omega))


def _bessel_y_asymp(order: int, x: np.ndarray) -> np.ndarray:
    a = _A0 if order == 0 else _A1
    p, q = _hankel_pq(a, x)
    omega = x - (0.5 * order + 0.25) * math.pi
    return np.sqrt(2.0 / (math.pi * x)) * (p * np.sin(omega) + q * np.cos(omega))


# ---------------------------------------------------------------------------
# public special functions
# ---------------------------------------------------------------------------


def bessel_j(order: int, x):
    """Bessel function of the first kind, order 0 or 1.

    Absolute error <= 1e-12 for |x| <= 50 and stays at that level for
    larger arguments.  Evenness of order 0 and oddness of order 1 are
    exact by construction.
    """
    if order not in (0, 1):
        raise ValueError("order must be 0 or 1")
    arr, scalar = _as_array(x, "x")
    ax = np.abs(arr)
    out = np.empty_like(ax)

    small = ax <= _J_SERIES_MAX
    large = ax >= _J_ASYMP_MIN
    mid = ~small & ~large

    if np.any(small):
        xs = ax[small]
        z = xs * xs
        if order == 0:
            out[small] = _polyval_ascending(_J0_C, z)
        else:
            out[small] = 0.5 * xs * _polyval_ascending(_J1_C, z)
    if np.any(mid):
        xm = ax[mid]
        # midpoint rule on the cosine integral representation; exact to
        # machine precision here because the first neglected term is a
        # Bessel function of order ~2*_J_QUAD_N evaluated at x < 22
        arg = np.outer(xm, _J_QUAD_SIN)
        if order == 0:
            out[mid] = np.cos(arg).mean(axis=1)
        else:
            out[mid] = np.cos(_J_QUAD_THETA[None, :] - arg).mean(axis=1)
    if np.any(large):
        out[large] = _bessel_j_asymp(order, ax[large])

    if order == 1:
        out = np.where(arr < 0, -out, out)
    return float(out[0]) if scalar else out.reshape(np.shape(x))


def struve_h(order: int, x):
    """Struve function of order 0 or 1 for x >= 0.

    Absolute error <= 1e-10 for x <= 50, improving beyond.
    """
    if order not in (0, 1):
        raise ValueError("order must be 0 or 1")
    arr, scalar = _as_array(x, "x")
    if np.any(arr < 0):
        raise ValueError("struve_h requires x >= 0")
    out = np.empty_like(arr)

    small = arr <= _H_SERIES_MAX
    large = arr >= _H_ASYMP_MIN
    mid = ~small & ~large

    if np.any(small):
        xs = arr[small]
        w = 0.25 * xs * xs
        if order == 0:
            out[small] = 0.5 * xs * _polyval_ascending(_H0_C, w)
        else:
            out[small] = w * _polyval_ascending(_H1_C, w)
    if np.any(mid):
        xm = arr[mid]
        s = np.sin(np.outer(xm, _H_QUAD_COS))
        if order == 0:
            out[mid] = (2.0 / math.pi) * (s @ _H_QUAD_W)
        else:
            out[mid] = (2.0 / math.pi) * xm * ((s * _H_QUAD_SIN2[None, :]) @ _H_QUAD_W)
    if np.any(large):
        xl = arr[large]
        z = 1.0 / (xl * xl)
        if order == 0:
            corr = (2.0 / (math.pi * xl)) * _polyval_ascending(_H0_G, z)
            out[large] = _bessel_y_asymp(0, xl) + corr
        else:
            corr = (2.0 / math.pi) * _polyval_ascending(_H1_E, z)
            out[large] = _bessel_y_asymp(1, xl) + corr

    return float(out[0]) if scalar else out.reshape(np.shape(x))


def integral_of_tj1(x):
    """Running integral of t*J1(t) from 0 to x, odd in x.

    Composed from bessel_j and struve_h as
    (pi x / 2) [J1(x) H0(x) - J0(x) H1(x)].
    """
    arr, scalar = _as_array(x, "x")
    ax = np.abs(arr)
    val = (
        0.5
        * math.pi
        * ax
        * (
            bessel_j(1, ax) * struve_h(0, ax)
            - bessel_j(0, ax) * struve_h(1, ax)
        )
    )
    val = np.where(arr < 0, -val, val)
    return float(val[0]) if scalar else np.asarray(val).reshape(np.shape(x))


def integral_of_j0(x):
    """Running integral of J0(t) from 0 to x, odd in x.

    Equals x*J0(x) plus the running integral of t*J1(t); this is the
    classical closed form of the Bessel antiderivative.
    """
    arr, scalar = _as_array(x, "x")
    ax = np.abs(arr)
    val = ax * bessel_j(0, ax) + integral_of_tj1(ax)
    val = np.where(arr < 0, -val, val)
    return float(val[0]) if scalar else np.asarray(val).reshape(np.shape(x))


def norm_cdf(x):
    """Standard normal distribution function."""
    arr, scalar = _as_array(x, "x")
    if scalar:
        return 0.5 * math.erfc(-float(arr[0]) / _SQRT2)
    out = _verfc(-arr / _SQRT2).astype(float) * 0.5
    return out.reshape(np.shape(x))


_verfc = np.frompyfunc(math.erfc, 1, 1)


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureRule:
    """Integration rule: fixed-node Gauss-Legendre or adaptive Simpson.

    node_count is used by the Gauss-Legendre kind; tolerance (absolute) by
    the adaptive Simpson kind.
    """

    kind: str = "gauss-legendre"
    node_count: int = 64
    tolerance: float = 1e-12

    def __post_init__(self):
        if self.kind not in ("gauss-legendre", "adaptive-simpson"):
            raise ValueError(f"unknown quadrature kind: {self.kind!r}")
        if self.node_count < 8:
            raise ValueError("node_count must be >= 8")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be > 0")


def adaptive_simpson(f, a: float, b: float, tol: float, max_sweeps: int = 60,
                     initial_panels: int = 8):
    """Adaptive Simpson integration of a vectorized integrand on [a, b].

    f must map an ndarray of abscissae to an ndarray of values.  The local
    acceptance test distributes the absolute tolerance proportionally to
    interval length; accepted panels use Richardson extrapolation.  The
    interval starts pre-split into initial_panels pieces so narrow features
    cannot hide from the first refinement test.  Raises RuntimeError if
    refinement does not settle within max_sweeps.
    """
    if b <= a:
        if b == a:
            return 0.0
        return -adaptive_simpson(f, b, a, tol, max_sweeps, initial_panels)
    total_len = b - a

    edges = np.linspace(a, b, max(1, int(initial_panels)) + 1)
    lo = edges[:-1].copy()
    hi = edges[1:].copy()
    flo = f(lo)
    fhi = f(hi)
    fmid = f(0.5 * (lo + hi))
    whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)
    acc = 0.0

    for _ in range(max_sweeps):
        mid = 0.5 * (lo + hi)
        m1 = 0.5 * (lo + mid)
        m2 = 0.5 * (mid + hi)
        f1 = f(m1)
        f2 = f(m2)
        left = (mid - lo) / 6.0 * (flo + 4.0 * f1 + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4.0 * f2 + fhi)
        err = left + right - whole
        ok = np.abs(err) <= 15.0 * tol * (hi - lo) / total_len
        acc += np.sum((left + right + err / 15.0)[ok])
        if np.all(ok):
            return float(acc)
        keep = ~ok
        lo = np.concatenate([lo[keep], mid[keep]])
        hi = np.concatenate([mid[keep], hi[keep]])
        flo = np.concatenate([flo[keep], fmid[keep]])
        fhi = np.concatenate([fmid[keep], fhi[keep]])
        fmid = np.concatenate([f1[keep], f2[keep]])
        whole = np.concatenate([left[keep], right[keep]])
    raise RuntimeError(
        f"adaptive Simpson did not converge to tol={tol:g} on [{a:g}, {b:g}]"
    )


_DEFAULT_GB_RULE = QuadratureRule()


def gen_bessel_integral(a: float, b: float, rule: QuadratureRule | None = None) -> float:
    """(1/pi) * integral over [0, pi] of exp(a cos 2phi) cos(b sin phi) dphi.

    For a = 0 this reduces to J0(b).  Internally the shifted integrand
    exp(a (cos 2phi - 1)) is integrated and the result rescaled by e^a,
    which keeps the quadrature conditioned even for large a; the node
    count of the default Gauss-Legendre rule escalates with the Fourier
    bandwidth a + |b| of the integrand.
    """
    if rule is None:
        rule = _DEFAULT_GB_RULE
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("a and b must be finite")
    if rule.kind == "adaptive-simpson":
        shifted = adaptive_simpson(
            lambda p: np.exp(a * (np.cos(2.0 * p) - 1.0)) * np.cos(b * np.sin(p)),
            0.0,
            math.pi,
            rule.tolerance,
        ) / math.pi
    else:
        shifted = float(exp_cos_integral(a, np.asarray([b]), base_nodes=rule.node_count)[0])
    val = math.exp(a) * shifted
    if not math.isfinite(val):
        raise RuntimeError(f"gen_bessel_integral overflowed for a={a:g}, b={b:g}")
    return val


def exp_cos_integral(a, b: np.ndarray, base_nodes: int = 64, nodes: int | None = None) -> np.ndarray:
    """(1/pi) * integral over [0, pi] of exp(a (cos 2phi - 1)) cos(b sin phi) dphi.

    The shifted exponent bounds the integrand by 1 for a >= 0, so the
    value is well conditioned at any scale.  a may be a scalar or an array
    broadcastable against b.  When nodes is given it overrides the
    bandwidth-based escalation (callers that know their arguments are
    band-limited use this to pin the cost).
    """
    aa = np.asarray(a, dtype=float)
    bb = np.asarray(b, dtype=float)
    if nodes is None:
        q = float(np.max(np.abs(aa)) + np.max(np.abs(bb))) if bb.size else 0.0
        nodes = base_nodes
        while nodes < 0.55 * q + 24 and nodes < 4096:
            nodes *= 2
    x, w = gauss_legendre_rule(nodes, 0.0, math.pi)
    shifted = np.exp(np.multiply.outer(aa, np.cos(2.0 * x) - 1.0))
    osc = np.cos(np.multiply.outer(bb, np.sin(x)))
    return (shifted * osc) @ w / math.pi
