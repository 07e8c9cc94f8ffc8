"""Exact Fourier-side solution kernels of the damped wave flow.

Per radial frequency r the linear flow reduces to the scalar problem
w'' + w' + m w = 0 with m = a r^2 + b r^(2 sigma).  The position kernel K0,
velocity kernel K1 and their time derivatives are evaluated in real
arithmetic, branch-wise in the sign of the discriminant d = 1 - 4m:

* d > 0: two real roots, both nonpositive, so plain exponentials never
  overflow;
* d < 0: conjugate pair with real part -1/2, trigonometric form;
* near d = 0: series in d*(t/2)^2, where the quadratic-formula expressions
  lose all digits to cancellation.

A naive complex-exponential path is kept for cross-checking only.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .params import OperatorParams, symbol

# |1 - 4m| band classified as numerically degenerate.
DEGENERATE_BAND = 1e-6
# Branch switch for the kernel series happens on w = d*(t/2)^2, the actual
# argument of the cosh/sinc pair, so the band stays accurate at any t.
_SERIES_W = 1e-4


class Regime(enum.Enum):
    REAL_DISTINCT = "real_distinct"
    NEAR_DEGENERATE = "near_degenerate"
    COMPLEX_PAIR = "complex_pair"


@dataclass(frozen=True)
class CharacteristicRoots:
    lambda_plus: complex
    lambda_minus: complex
    discriminant: float
    regime: Regime


def char_roots(params: OperatorParams, r: float) -> CharacteristicRoots:
    """Roots of lambda^2 + lambda + m(r) = 0 with regime classification."""
    m = symbol(params, float(r))
    d = 1.0 - 4.0 * m
    sd = np.sqrt(complex(d))
    lam_p = (-1.0 + sd) / 2.0
    lam_m = (-1.0 - sd) / 2.0
    if abs(d) < DEGENERATE_BAND:
        regime = Regime.NEAR_DEGENERATE
    elif d > 0:
        regime = Regime.REAL_DISTINCT
    else:
        regime = Regime.COMPLEX_PAIR
    return CharacteristicRoots(complex(lam_p), complex(lam_m), d, regime)


@dataclass(frozen=True)
class KernelValues:
    """K0, K1 and their time derivatives at one (t, r), or arrays thereof."""

    k0: np.ndarray | float
    k1: np.ndarray | float
    dk0: np.ndarray | float
    dk1: np.ndarray | float


def _cs_series(w):
    """cosh(sqrt(w)) and sinh(sqrt(w))/sqrt(w) as entire series in w, |w| small."""
    c = np.zeros_like(w)
    s = np.zeros_like(w)
    # 6 terms: remainder ~ w^6/12! is far below roundoff for |w| <= 1e-4
    for k in range(5, -1, -1):
        c = c * w + 1.0 / math.factorial(2 * k)
        s = s * w + 1.0 / math.factorial(2 * k + 1)
    return c, s


def kernel_eval(params: OperatorParams, t, r) -> KernelValues:
    """Evaluate the solution kernels at time(s) t >= 0 and radii r >= 0.

    Broadcasts over numpy arrays; scalars in give scalars out.  The returned
    values satisfy dk1 + k1 = k0 and dk0 = -m*k1 up to roundoff, and at t=0
    reproduce the initial data (k0=1, k1=0, dk0=0, dk1=1).
    """
    t_arr, r_arr = np.broadcast_arrays(np.asarray(t, float), np.asarray(r, float))
    scalar = t_arr.ndim == 0
    t_arr = np.atleast_1d(t_arr).astype(float)
    r_arr = np.atleast_1d(r_arr).astype(float)
    if np.any(t_arr < 0):
        raise ValueError("t must be nonnegative")

    m = np.asarray(symbol(params, r_arr), float)
    d = 1.0 - 4.0 * m
    w = d * (0.5 * t_arr) ** 2

    k0 = np.empty_like(t_arr)
    k1 = np.empty_like(t_arr)
    dk1 = np.empty_like(t_arr)

    band = np.abs(w) <= _SERIES_W
    hyp = (w > _SERIES_W)
    trig = (w < -_SERIES_W)

    if band.any():
        tb = t_arr[band]
        c, s = _cs_series(w[band])
        pref = np.exp(-0.5 * tb)
        k0[band] = pref * (c + 0.5 * tb * s)
        k1[band] = pref * tb * s
        dk1[band] = pref * (c - 0.5 * tb * s)
    if hyp.any():
        th = t_arr[hyp]
        sq = np.sqrt(d[hyp])
        lam_p = 0.5 * (-1.0 + sq)
        lam_m = 0.5 * (-1.0 - sq)
        # both roots <= 0: the exponentials only decay
        ep = np.exp(lam_p * th)
        em = np.exp(lam_m * th)
        k0[hyp] = (lam_p * em - lam_m * ep) / sq
        k1[hyp] = (ep - em) / sq
        dk1[hyp] = (lam_p * ep - lam_m * em) / sq
    if trig.any():
        tt = t_arr[trig]
        x = np.sqrt(-w[trig])          # = omega * t
        pref = np.exp(-0.5 * tt)
        cos_x = np.cos(x)
        sinc = np.where(x > 0, np.sin(x) / np.where(x > 0, x, 1.0), 1.0)
        k0[trig] = pref * (cos_x + 0.5 * tt * sinc)
        k1[trig] = pref * tt * sinc
        dk1[trig] = pref * (cos_x - 0.5 * tt * sinc)

    dk0 = -m * k1
    if scalar:
        return KernelValues(float(k0[0]), float(k1[0]), float(dk0[0]), float(dk1[0]))
    return KernelValues(k0, k1, dk0, dk1)


def kernel_eval_reference(params: OperatorParams, t, r) -> KernelValues:
    """Naive complex-exponential evaluation, for cross-checking only.

    Loses all accuracy near the degenerate discriminant; do not use on the
    computation path.
    """
    t = np.asarray(t, float)
    r = np.asarray(r, float)
    m = np.asarray(symbol(params, r), complex)
    sd = np.sqrt(1.0 - 4.0 * m)
    lam_p = 0.5 * (-1.0 + sd)
    lam_m = 0.5 * (-1.0 - sd)
    ep = np.exp(lam_p * t)
    em = np.exp(lam_m * t)
    k0 = (lam_p * em - lam_m * ep) / sd
    k1 = (ep - em) / sd
    dk0 = lam_p * lam_m * (em - ep) / sd
    dk1 = (lam_p * ep - lam_m * em) / sd
    return KernelValues(k0.real, k1.real, dk0.real, dk1.real)


def profile_hat(params: OperatorParams, t, r):
    """Fourier multiplier of the dominant diffusion profile.

    exp(-b r^(2 sigma) t) for sigma < 1 (anomalous branch), exp(-a r^2 t)
    for sigma > 1 (classical branch); sigma = 1 is rejected at parameter
    construction.
    """
    t = np.asarray(t, float)
    r = np.asarray(r, float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    if params.sigma < 1:
        g = np.exp(-params.b * r ** (2.0 * params.sigma) * t)
    else:
        g = np.exp(-params.a * r**2 * t)
    return g if g.ndim else float(g)


def kernel_multiplier(params: OperatorParams, which: str):
    """Callable (t, r) -> kernel value, convenient for radial quadrature."""
    idx = {"k0": 0, "k1": 1, "dk0": 2, "dk1": 3}[which]
    def mult(t, r):
        kv = kernel_eval(params, t, r)
        return (kv.k0, kv.k1, kv.dk0, kv.dk1)[idx]
    return mult


# --- Duhamel weights -------------------------------------------------------
#
# The exponential corrector needs the first two moments of K1 over a step,
#   w0  = int_0^h K1(s) ds,          w1  = (1/h) int_0^h s K1(s) ds,
# and the matching moments of dK1 for the velocity update.  Both reduce to
# divided differences of the entire functions
#   phi1(z) = (e^z - 1)/z,   psi(z) = phi1(z) - phi2(z) = (e^z(z-1)+1)/z^2
# at z = h*lambda_plus, h*lambda_minus; the difference is evaluated directly
# when the roots are well separated and by a Taylor step around the midpoint
# (which is the constant -h/2) otherwise.

_PHI_SERIES_RADIUS = 0.8
_PHI_SERIES_TERMS = 26
_DD_BAND = 1e-3


def _phi1_psi(z: np.ndarray):
    z = np.asarray(z, complex)
    phi1 = np.empty_like(z)
    psi = np.empty_like(z)
    small = np.abs(z) < _PHI_SERIES_RADIUS
    if small.any():
        zs = z[small]
        p1 = np.zeros_like(zs)
        ps = np.zeros_like(zs)
        for k in range(_PHI_SERIES_TERMS - 1, -1, -1):
            p1 = p1 * zs + 1.0 / math.factorial(k + 1)
            ps = ps * zs + (k + 1.0) / math.factorial(k + 2)
        phi1[small] = p1
        psi[small] = ps
    big = ~small
    if big.any():
        zb = z[big]
        ez = np.exp(zb)
        phi1[big] = (ez - 1.0) / zb
        psi[big] = (ez * (zb - 1.0) + 1.0) / zb**2
    return phi1, psi


def _phi_ladder(z: complex, count: int) -> list[complex]:
    """phi_1(z) .. phi_count(z) for a scalar argument."""
    if abs(z) < _PHI_SERIES_RADIUS:
        out = []
        for n in range(1, count + 1):
            acc = 0.0 + 0.0j
            for k in range(_PHI_SERIES_TERMS - 1, -1, -1):
                acc = acc * z + 1.0 / math.factorial(k + n)
            out.append(acc)
        return out
    out = [(np.exp(z) - 1.0) / z]
    for n in range(1, count):
        out.append((out[-1] - 1.0 / math.factorial(n)) / z)
    return out


def _combo_derivative(combo: dict[int, float]) -> dict[int, float]:
    # d/dz phi_n = phi_n - n*phi_{n+1}
    out: dict[int, float] = {}
    for n, c in combo.items():
        out[n] = out.get(n, 0.0) + c
        out[n + 1] = out.get(n + 1, 0.0) - n * c
    return out


def _combo_eval(combo: dict[int, float], ladder: list[complex]) -> complex:
    return sum(c * ladder[n - 1] for n, c in combo.items())


@dataclass(frozen=True)
class DuhamelWeights:
    """Kernel moments over one step, per the integrator's update formulas."""

    w0: np.ndarray | float    # int_0^h K1
    w1: np.ndarray | float    # (1/h) int_0^h s K1(s) ds
    w0t: np.ndarray | float   # int_0^h dK1 = K1(h)
    w1t: np.ndarray | float   # (1/h) int_0^h s dK1(s) ds = K1(h) - w0/h


def duhamel_weights(params: OperatorParams, h: float, r) -> DuhamelWeights:
    """Closed-form moments of the velocity kernel over a step of size h > 0.

    At r = 0 the expressions reduce to the limits of (e^{lambda h}-1)/lambda
    type quantities as lambda -> 0; the divided-difference path takes those
    limits implicitly.
    """
    if not h > 0:
        raise ValueError("step size h must be positive")
    r_arr = np.atleast_1d(np.asarray(r, float))
    scalar = np.ndim(r) == 0

    m = np.atleast_1d(np.asarray(symbol(params, r_arr), float))
    sd = np.sqrt((1.0 - 4.0 * m).astype(complex))
    delta = 0.5 * h * sd                     # (z_plus - z_minus)/2
    mu = -0.5 * h                            # midpoint, root-independent

    dd1 = np.empty_like(delta)
    ddp = np.empty_like(delta)
    direct = np.abs(delta) >= _DD_BAND * max(1.0, abs(mu))
    if direct.any():
        zp = mu + delta[direct]
        zm = mu - delta[direct]
        p1p, psp = _phi1_psi(zp)
        p1m, psm = _phi1_psi(zm)
        dz = zp - zm
        dd1[direct] = (p1p - p1m) / dz
        ddp[direct] = (psp - psm) / dz
    near = ~direct
    if near.any():
        ladder = _phi_ladder(complex(mu), 7)
        d2 = delta[near] ** 2
        for target, base in ((dd1, {1: 1.0}), (ddp, {1: 1.0, 2: -1.0})):
            c1 = _combo_derivative(base)
            c3 = _combo_derivative(_combo_derivative(c1))
            c5 = _combo_derivative(_combo_derivative(c3))
            f1 = _combo_eval(c1, ladder)
            f3 = _combo_eval(c3, ladder)
            f5 = _combo_eval(c5, ladder)
            target[near] = f1 + d2 * (f3 / 6.0 + d2 * f5 / 120.0)

    w0 = (h * h) * dd1.real
    w1 = (h * h) * ddp.real
    kv = kernel_eval(params, h, r_arr)
    k1h = np.atleast_1d(np.asarray(kv.k1, float))
    w0t = k1h
    w1t = k1h - w0 / h
    if scalar:
        return DuhamelWeights(float(w0[0]), float(w1[0]), float(w0t[0]), float(w1t[0]))
    return DuhamelWeights(w0, w1, w0t, w1t)
