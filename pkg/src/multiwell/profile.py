"""Finite-width transition profiles from geodesics.

A geodesic visits states at unit "metric speed"; a diffuse interface of
thickness eps traverses the same states in physical time.  The change of
variables g solving

    g'(t)^2 = (lam + W(x, gamma(g(t)))) / (eps^2 |gamma'(g(t))|^2)

turns a curve gamma on [-1, 1] into a monotone layer g on [0, tau].  The
small shift lam > 0 keeps the speed finite where W vanishes, at the price
of an energy excess of at most 2 sqrt(lam) L(gamma).
"""

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator

from .errors import ConfigError, NumericError
from .geodesic import Curve

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(5)


class CurveInterpolant:
    """C^1 interpolant of a polyline on [-1, 1], chord-length parametrized."""

    def __init__(self, curve):
        nodes = curve.nodes if isinstance(curve, Curve) else np.atleast_2d(curve)
        seg = np.linalg.norm(np.diff(nodes, axis=0), axis=1)
        keep = np.concatenate(([True], seg > 0.0))
        nodes = nodes[keep]
        if nodes.shape[0] < 2:
            raise ConfigError("curve degenerates to a point")
        chord = np.concatenate(([0.0], np.cumsum(
            np.linalg.norm(np.diff(nodes, axis=0), axis=1))))
        u = -1.0 + 2.0 * chord / chord[-1]
        tang = np.empty_like(nodes)
        tang[0] = (nodes[1] - nodes[0]) / (u[1] - u[0])
        tang[-1] = (nodes[-1] - nodes[-2]) / (u[-1] - u[-2])
        if nodes.shape[0] > 2:
            tang[1:-1] = (nodes[2:] - nodes[:-2]) / (u[2:] - u[:-2])[:, None]
        self._spline = CubicHermiteSpline(u, nodes, tang)
        self._deriv = self._spline.derivative()
        self.breaks = u
        self.chord_length = float(chord[-1])

    def __call__(self, s):
        return np.atleast_2d(self._spline(np.clip(s, -1.0, 1.0)))

    def deriv(self, s):
        return np.atleast_2d(self._deriv(np.clip(s, -1.0, 1.0)))

    def speed(self, s):
        return np.linalg.norm(self.deriv(s), axis=1)

    def length(self, per_break=64):
        s = self._dense_grid(per_break)
        total = 0.0
        for a, b in zip(s[:-1], s[1:]):
            mid, half = 0.5 * (a + b), 0.5 * (b - a)
            total += half * float(np.dot(_GL_WEIGHTS, self.speed(mid + half * _GL_NODES)))
        return total

    def _dense_grid(self, per_break):
        pieces = [np.linspace(a, b, per_break + 1)[:-1]
                  for a, b in zip(self.breaks[:-1], self.breaks[1:])]
        return np.concatenate(pieces + [self.breaks[-1:]])


@dataclass
class TransitionProfile:
    """Monotone layer map g on [0, tau] together with its source curve.

    g(0) = -1, g(tau) = 1, and g is extended by the constant 1 beyond tau
    so callers can pad fields to the right of the layer.
    """

    eps: float
    lam: float
    curve: CurveInterpolant
    tau: float
    x: np.ndarray
    potential: object
    _inverse: PchipInterpolator
    _t_knots: np.ndarray
    extends_to_one: bool = True

    def g(self, t):
        t = np.asarray(t, dtype=float)
        return np.clip(self._inverse(np.clip(t, 0.0, self.tau)), -1.0, 1.0)

    def g_prime(self, t):
        """Layer slope from the defining identity (exact along the layer)."""
        s = self.g(t)
        w = self.potential.evaluate_batch(self.x, self.curve(s))
        speed = np.maximum(self.curve.speed(s), 1e-300)
        return np.sqrt(self.lam + w) / (self.eps * speed)

    def g_prime_interp(self, t):
        """Layer slope from the monotone inverse itself (for residual checks)."""
        t = np.asarray(t, dtype=float)
        return self._inverse.derivative()(np.clip(t, 0.0, self.tau))

    def u(self, t):
        return self.curve(self.g(t))

    def ode_residual(self, t):
        """|g'(t)^2 - (lam + W)/(eps^2 |gamma'|^2)| using the interpolated slope."""
        s = self.g(t)
        w = self.potential.evaluate_batch(self.x, self.curve(s))
        speed = np.maximum(self.curve.speed(s), 1e-300)
        target = (self.lam + w) / (self.eps * speed) ** 2
        return np.abs(self.g_prime_interp(t) ** 2 - target)

    def sample(self, n=400):
        """(t, g, u components, energy integrand) rows for plotting."""
        t = np.linspace(0.0, self.tau, n)
        g = self.g(t)
        u = self.curve(g)
        w = self.potential.evaluate_batch(self.x, u)
        gp = self.g_prime(t)
        speed = self.curve.speed(g)
        integrand = w / self.eps + self.eps * (speed * gp) ** 2
        return t, g, u, integrand


def default_lambda(eps):
    """Degeneracy shift paired with eps in the recovery construction."""
    if eps <= 0:
        raise ConfigError("eps must be positive")
    return float(eps) ** 0.75


def build_profile(potential, x, curve, eps, lam, quadrature_nodes=400):
    """Construct the transition profile of a curve at frozen base point x.

    The width function is accumulated by composite Gauss-Legendre quadrature
    of eps |gamma'| / sqrt(lam + W) on a grid aligned with the polyline
    breakpoints, then inverted by monotone cubic interpolation.
    """
    if lam <= 0:
        raise ConfigError("the degeneracy shift lam must be positive")
    if eps <= 0:
        raise ConfigError("eps must be positive")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    interp = curve if isinstance(curve, CurveInterpolant) else CurveInterpolant(curve)
    n_breaks = len(interp.breaks) - 1
    per_break = max(2, int(np.ceil(quadrature_nodes / n_breaks)))
    s = interp._dense_grid(per_break)

    def width_integrand(ss):
        w = potential.evaluate_batch(x, interp(ss))
        return eps * interp.speed(ss) / np.sqrt(lam + w)

    mids = 0.5 * (s[:-1] + s[1:])
    halves = 0.5 * (s[1:] - s[:-1])
    sq = mids[:, None] + halves[:, None] * _GL_NODES[None, :]
    vals = width_integrand(sq.ravel()).reshape(sq.shape)
    increments = halves * (vals @ _GL_WEIGHTS)
    psi = np.concatenate(([0.0], np.cumsum(increments)))
    if np.any(np.diff(psi) <= 0.0):
        raise NumericError("width accumulation is not strictly increasing")
    tau = float(psi[-1])
    inverse = PchipInterpolator(psi, s)
    return TransitionProfile(
        eps=float(eps), lam=float(lam), curve=interp, tau=tau, x=x,
        potential=potential, _inverse=inverse, _t_knots=psi)


def profile_energy(profile, quadrature_nodes=400):
    """Certified energy of the layer over [0, tau].

    The integrand is (W + lam)/eps + eps |u'|^2, i.e. the layer is costed
    with the same shifted potential that defines its slope.  Only then does
    the change of variables give the exact continuum identity

        profile_energy = integral of 2 sqrt(W + lam) |gamma'| ds,

    which is the module's primary oracle.  Costing the layer with the bare
    potential instead gives a value smaller by at most lam * tau / eps, so
    this certified value remains an upper bound for the diffuse energy of
    any field that embeds the layer.
    """
    knots = profile._t_knots
    if len(knots) - 1 > quadrature_nodes:
        knots = np.interp(np.linspace(0, 1, quadrature_nodes + 1),
                          np.linspace(0, 1, len(knots)), knots)
    mids = 0.5 * (knots[:-1] + knots[1:])
    halves = 0.5 * (knots[1:] - knots[:-1])
    tq = (mids[:, None] + halves[:, None] * _GL_NODES[None, :]).ravel()
    s = profile.g(tq)
    w = profile.potential.evaluate_batch(profile.x, profile.curve(s))
    speed = profile.curve.speed(s)
    gp = np.sqrt(profile.lam + w) / (profile.eps * np.maximum(speed, 1e-300))
    integrand = ((w + profile.lam) / profile.eps
                 + profile.eps * (speed * gp) ** 2).reshape(-1, 5)
    return float(np.sum(halves * (integrand @ _GL_WEIGHTS)))


def curve_energy_with_shift(potential, x, curve, lam, per_break=64):
    """s-space quadrature of 2 sqrt(W + lam) |gamma'|; the profile energy equals
    this in the continuum, which makes it the module's primary oracle."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    interp = curve if isinstance(curve, CurveInterpolant) else CurveInterpolant(curve)
    s = interp._dense_grid(per_break)
    mids = 0.5 * (s[:-1] + s[1:])
    halves = 0.5 * (s[1:] - s[:-1])
    sq = (mids[:, None] + halves[:, None] * _GL_NODES[None, :]).ravel()
    w = potential.evaluate_batch(x, interp(sq))
    vals = (2.0 * np.sqrt(w + lam) * interp.speed(sq)).reshape(-1, 5)
    return float(np.sum(halves * (vals @ _GL_WEIGHTS)))
