"""Geodesic distances for degenerate conformal metrics.

The metric weighs Euclidean length by a nonnegative factor F that vanishes
on the well set, so travel along wells is free.  Distances are computed by
multi-start local descent over polylines: the straight segment plus, for
each well, the path that drops onto the well image and rides it.  Those
starts are exactly the competitor curves with known closed-form costs near
the wells, so the optimizer never returns anything worse than them.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigError, NumericError


@dataclass(frozen=True)
class Curve:
    """Ordered polyline in state space, endpoints included."""

    nodes: np.ndarray  # (n+1, M)

    def __post_init__(self):
        nodes = np.atleast_2d(np.asarray(self.nodes, dtype=float))
        if nodes.shape[0] < 2:
            raise ConfigError("a curve needs at least two nodes")
        object.__setattr__(self, "nodes", nodes)

    @property
    def p(self):
        return self.nodes[0]

    @property
    def q(self):
        return self.nodes[-1]

    @property
    def length(self):
        return float(np.sum(np.linalg.norm(self.nodes[1:] - self.nodes[:-1], axis=1)))

    def resampled(self, n):
        return Curve(kernels.redistribute(self.nodes, n + 1))


class Region:
    """Spatial sample set standing in for a convex sub-box of the domain."""

    def __init__(self, points, diameter):
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self.diameter = float(diameter)

    @classmethod
    def point(cls, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return cls(x[None, :], 0.0)

    @classmethod
    def from_box(cls, box, per_axis=9):
        return cls(box.sample_grid(per_axis), box.diameter())

    @property
    def is_point(self):
        return self.points.shape[0] == 1


class ConformalFactor:
    """Nonnegative weight F on state space plus optional analytic gradient.

    ``spec`` is the kernel-dispatch tuple; potentials frozen at a point give
    one of the compiled families, anything else falls back to a vectorized
    callable.  When the factor knows its potential, the optimizer can build
    the via-well initializations.
    """

    def __init__(self, spec, provenance, potential=None, x=None, region=None):
        self.spec = spec
        self.provenance = provenance
        self.potential = potential
        self.x = None if x is None else np.atleast_1d(np.asarray(x, dtype=float))
        self.region = region

    @classmethod
    def from_callable(cls, f, grad=None, provenance="custom"):
        return cls(("callable", lambda z: np.asarray(f(np.atleast_2d(z)), dtype=float), grad),
                   provenance)

    @classmethod
    def frozen(cls, potential, x):
        """F = 2 sqrt(W(x, .)) at a fixed spatial point."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return cls(potential.frozen_spec(x), "point-frozen", potential=potential, x=x)

    @classmethod
    def region_minimized(cls, potential, region, per_axis=9):
        """F = min over region samples of 2 sqrt(W(x, .))."""
        if not isinstance(region, Region):
            region = Region.from_box(region, per_axis)
        pts = region.points

        def f(z):
            z = np.atleast_2d(z)
            best = np.full(z.shape[0], np.inf)
            for x in pts:
                w = potential.evaluate_batch(x, z)
                np.minimum(best, 2.0 * np.sqrt(np.maximum(w, 0.0)), out=best)
            return best

        return cls(("callable", f, None), "region-minimized",
                   potential=potential, region=region)

    def value(self, z):
        return kernels.factor_values(self.spec, np.atleast_2d(np.asarray(z, dtype=float)))

    def grad(self, z):
        return kernels.factor_grads(self.spec, np.atleast_2d(np.asarray(z, dtype=float)))


def curve_cost(factor, curve):
    """Midpoint-rule cost of a polyline under the factor."""
    nodes = curve.nodes if isinstance(curve, Curve) else np.atleast_2d(curve)
    return kernels.polyline_cost(factor.spec, nodes)


def segment_init(p, q, n):
    """Straight segment with n+1 equally spaced nodes."""
    p = np.atleast_1d(np.asarray(p, dtype=float))
    q = np.atleast_1d(np.asarray(q, dtype=float))
    t = np.linspace(0.0, 1.0, int(n) + 1)[:, None]
    return Curve((1.0 - t) * p[None, :] + t * q[None, :])


def _polyline_through(points, n):
    """n+1 nodes along a list of anchor points, anchors kept as nodes."""
    points = [np.atleast_1d(np.asarray(a, dtype=float)) for a in points]
    legs = []
    for a, b in zip(points[:-1], points[1:]):
        if np.linalg.norm(b - a) > 0:
            legs.append((a, b))
    if not legs:
        return Curve(np.vstack([points[0]] * (n + 1)))
    lengths = np.array([np.linalg.norm(b - a) for a, b in legs])
    total = float(np.sum(lengths))
    counts = np.maximum(1, np.round(n * lengths / total).astype(int))
    while counts.sum() > n:
        counts[int(np.argmax(counts))] -= 1
    while counts.sum() < n:
        counts[int(np.argmax(lengths / counts))] += 1
    nodes = [legs[0][0][None, :]]
    for (a, b), c in zip(legs, counts):
        t = np.linspace(0.0, 1.0, c + 1)[1:, None]
        nodes.append((1.0 - t) * a[None, :] + t * b[None, :])
    return Curve(np.vstack(nodes))


def via_well_init(potential, x, p, q, i, n, region=None):
    """Initialization that drops onto well i, rides it, and climbs off.

    For a frozen point the well image is a single value and the ride
    degenerates; with a region, the ride is the image of the straight path
    between the two projecting sample points.
    """
    if not 1 <= i <= potential.k:
        raise ConfigError(f"well index {i} out of range 1..{potential.k}")
    p = np.atleast_1d(np.asarray(p, dtype=float))
    q = np.atleast_1d(np.asarray(q, dtype=float))
    well = potential.wells[i - 1]
    if region is None or region.is_point:
        z = potential.well_values(x)[i - 1]
        return _polyline_through([p, z, q], n)
    pts = region.points
    zs = well(pts)
    jp = int(np.argmin(np.linalg.norm(zs - p[None, :], axis=1)))
    jq = int(np.argmin(np.linalg.norm(zs - q[None, :], axis=1)))
    t = np.linspace(0.0, 1.0, 33)[:, None]
    ride = well((1.0 - t) * pts[jp][None, :] + t * pts[jq][None, :])
    anchors = [p, *ride, q]
    return _polyline_through(anchors, max(n, len(anchors)))


@dataclass(frozen=True)
class GeodesicConfig:
    nodes: int = 128
    max_iter: int = 5000
    grad_tol: float = 1e-8
    # stop once the cost improves by less than this (relative) over a
    # window of accepted steps; the sliding modes of a degenerate metric
    # keep the gradient above grad_tol long after the cost has settled
    cost_tol: float = 1e-10
    stagnation_window: int = 40
    redistribute_every: int = 25
    extra_inits: tuple = ()
    use_via_well: bool = True
    verbose: bool = False


@dataclass
class GeodesicResult:
    """Best curve found, its cost, and bookkeeping about the search."""

    cost: float
    curve: Curve
    length: float
    iterations: int
    winner: str
    converged: bool
    candidates: list = field(default_factory=list)


def _descend(spec, nodes, config):
    """Monotone local descent of the midpoint-rule cost over interior nodes.

    Between redistributions the accepted cost never increases; each
    redistribution resamples to uniform chord length (the discrete stand-in
    for arclength parametrization) and restarts the monotone run.  Returns
    the best state among the start, every post-redistribution state, and
    the final one, so quadrature artifacts from mid-descent node clustering
    cannot leak into the reported cost.
    """
    nodes = nodes.copy()
    cost, grad = kernels.polyline_cost_grad(spec, nodes)
    if not np.isfinite(cost):
        raise NumericError("non-finite conformal cost")
    best_cost, best_nodes = cost, nodes.copy()
    n_interior = nodes.shape[0] - 2
    if n_interior <= 0:
        return cost, nodes, 0, True
    mean_seg = max(np.sum(np.linalg.norm(nodes[1:] - nodes[:-1], axis=1)), 1e-300) / (
        nodes.shape[0] - 1)
    step = 1.0
    iters = 0
    accepted_since_redist = 0
    converged = False
    trail = [cost]
    prev_interior = None
    prev_grad = None
    for iters in range(1, config.max_iter + 1):
        gmax = float(np.max(np.abs(grad))) if grad.size else 0.0
        if gmax <= config.grad_tol * (1.0 + abs(cost)):
            converged = True
            break
        if len(trail) > config.stagnation_window:
            drop = trail[-config.stagnation_window - 1] - cost
            if drop <= config.cost_tol * (1.0 + abs(cost)):
                converged = True
                break
        cap = 0.5 * mean_seg / max(gmax, 1e-300)
        # spectral (Barzilai-Borwein) step seed, safeguarded by backtracking
        t = step * 1.5
        if prev_grad is not None:
            dx = nodes[1:-1] - prev_interior
            dg = grad - prev_grad
            den = float(np.sum(dx * dg))
            if den > 0.0:
                t = float(np.sum(dx * dx)) / den
        t = min(t, cap)
        t_floor = max(1e-16 * cap, 1e-300)
        prev_interior = nodes[1:-1].copy()
        prev_grad = grad.copy()
        accepted = False
        while t >= t_floor:
            trial = nodes.copy()
            trial[1:-1] -= t * grad
            new_cost, new_grad = kernels.polyline_cost_grad(spec, trial)
            if not np.isfinite(new_cost):
                raise NumericError("non-finite conformal cost during descent")
            if new_cost < cost:
                nodes, cost, grad = trial, new_cost, new_grad
                step = t
                accepted = True
                accepted_since_redist += 1
                trail.append(cost)
                break
            t *= 0.5
        if not accepted:
            converged = True
            break
        if accepted_since_redist >= config.redistribute_every:
            accepted_since_redist = 0
            if cost < best_cost:
                best_cost, best_nodes = cost, nodes.copy()
            nodes = kernels.redistribute(nodes)
            cost, grad = kernels.polyline_cost_grad(spec, nodes)
            trail.append(cost)
            prev_interior = None
            prev_grad = None
            mean_seg = max(np.sum(np.linalg.norm(nodes[1:] - nodes[:-1], axis=1)),
                           1e-300) / (nodes.shape[0] - 1)
    if cost < best_cost:
        best_cost, best_nodes = cost, nodes.copy()
    return best_cost, best_nodes, iters, converged


def minimize_geodesic(factor, p, q, config=None):
    """Reparametrization-invariant distance between p and q under the factor.

    Runs descent from the straight segment plus every via-well path the
    factor's potential provides, and returns the cheapest outcome.  The
    result never costs more than any initialization because each descent
    starts at one.
    """
    config = config or GeodesicConfig()
    p = np.atleast_1d(np.asarray(p, dtype=float))
    q = np.atleast_1d(np.asarray(q, dtype=float))
    if np.array_equal(p, q):
        curve = segment_init(p, q, config.nodes)
        return GeodesicResult(cost=0.0, curve=curve, length=0.0, iterations=0,
                              winner="segment", converged=True)
    # the cost is orientation-free, so endpoints are put in a canonical
    # order before descending; swapped queries then agree exactly
    flipped = tuple(q.tolist()) < tuple(p.tolist())
    if flipped:
        p, q = q, p
    inits = [("segment", segment_init(p, q, config.nodes))]
    if factor.potential is not None and config.use_via_well:
        for i in range(1, factor.potential.k + 1):
            inits.append((
                f"via-well-{i}",
                via_well_init(factor.potential, factor.x, p, q, i, config.nodes,
                              region=factor.region),
            ))
    for j, extra in enumerate(config.extra_inits):
        curve = extra if isinstance(extra, Curve) else Curve(extra)
        inits.append((f"extra-{j}", curve.resampled(config.nodes)))

    candidates = []
    total_iters = 0
    for label, curve in inits:
        cost, nodes, iters, conv = _descend(factor.spec, curve.nodes, config)
        init_cost = curve_cost(factor, curve)
        if init_cost < cost:
            cost, nodes = init_cost, curve.nodes
        total_iters += iters
        candidates.append((cost, Curve(nodes), label, iters, conv))

    candidates.sort(key=lambda c: (c[0], c[1].length, c[2]))
    cost, curve, label, _, conv = candidates[0]
    if flipped:
        curve = Curve(curve.nodes[::-1].copy())
    result = GeodesicResult(
        cost=float(cost), curve=curve, length=curve.length,
        iterations=total_iters, winner=label, converged=conv)
    if config.verbose:
        tol = 1e-9 * (1.0 + cost)
        result.candidates = [
            {"init": c[2], "cost": float(c[0]), "length": c[1].length,
             "curve": Curve(c[1].nodes[::-1].copy()) if flipped else c[1]}
            for c in candidates if c[0] <= cost + tol
        ]
    return result


def d_W(potential, x, p, q, config=None):
    """Well-metric distance at frozen x: the factor is 2 sqrt(W(x, .))."""
    factor = ConformalFactor.frozen(potential, x)
    return minimize_geodesic(factor, p, q, config)


# ---------------------------------------------------------------------------
# Structural constants of the metric near the wells
# ---------------------------------------------------------------------------

def sigma_value(r, delta, alpha_min, alpha_max, eta):
    """Radius within which the factor equals twice the root-quadratic distance."""
    return 0.5 * min(r, delta, (alpha_min / alpha_max) * delta,
                     math.sqrt(eta / alpha_max))


@dataclass
class WellGeometry:
    """Near-well constants of the factor over a region."""

    sigma: float
    sigma_floor: float          # min factor value away from the well tubes
    eta: float
    eta_source: str
    alpha_min: float
    alpha_max: float
    k: int
    diam: float
    lip_sum: float
    region: Region
    well_images: list           # sampled z_i(region), one (P, M) array per well
    factor: ConformalFactor

    def distance_to_well(self, i, z):
        """Sampled distance from states z to the image of well i (1-based)."""
        z = np.atleast_2d(np.asarray(z, dtype=float))
        img = self.well_images[i - 1]
        d = np.linalg.norm(z[:, None, :] - img[None, :, :], axis=2)
        return np.min(d, axis=1)

    def length_cap(self, lam, w_max):
        """Euclidean length cap for geodesics between states of norm <= lam."""
        return self.k * self.sigma + self.diam * self.lip_sum + (
            2.0 * lam * w_max + 1.0) / self.sigma_floor


def _empirical_eta(potential, region, seed=0):
    rng = np.random.default_rng(seed)
    eta = np.inf
    for x in region.points[:: max(1, region.points.shape[0] // 16)]:
        z = potential.well_values(x)
        scale = 0.5 * max(1.0, potential.growth_R)
        p = rng.normal(size=(200, potential.dim_p)) * scale
        d = np.min(np.linalg.norm(p[:, None, :] - z[None, :, :], axis=2), axis=1)
        keep = d >= potential.r / 2.0
        if np.any(keep):
            w = potential.evaluate_batch(np.repeat(x[None, :], int(keep.sum()), axis=0),
                                         p[keep])
            eta = min(eta, float(np.min(w)))
    return eta


def well_geometry(potential, region, z_samples=4000, seed=0):
    """Constants controlling the factor near the wells over the region.

    Requires the well images over the region to stay separated; otherwise
    the near-well description of the factor breaks down and this raises.
    """
    if not isinstance(region, Region):
        region = Region.from_box(region) if hasattr(region, "sample_grid") else Region.point(region)
    if not potential.separated_wells:
        raise ConfigError("well geometry needs a potential with separated wells")
    images = [w(region.points) for w in potential.wells]
    k = potential.k
    for i in range(k):
        for j in range(i + 1, k):
            d = np.linalg.norm(images[i][:, None, :] - images[j][None, :, :], axis=2)
            if float(np.min(d)) < potential.delta - 1e-12:
                raise ConfigError(
                    f"well images {i + 1} and {j + 1} come within {float(np.min(d)):.3g} "
                    f"over the region, below the declared separation {potential.delta}")

    alphas = np.vstack([potential.alphas_at(x) for x in region.points])
    a_min, a_max = float(np.min(alphas)), float(np.max(alphas))
    if potential.eta is not None:
        eta, eta_source = potential.eta, "declared"
    else:
        eta, eta_source = _empirical_eta(potential, region, seed), "empirical"
    sigma = sigma_value(potential.r, potential.delta, a_min, a_max, eta)

    factor = (ConformalFactor.frozen(potential, region.points[0]) if region.is_point
              else ConformalFactor.region_minimized(potential, region))

    # sampled minimization of the factor outside the sigma/2 tubes
    rng = np.random.default_rng(seed)
    allz = np.vstack(images)
    lo, hi = np.min(allz, axis=0), np.max(allz, axis=0)
    margin = max(2.0 * potential.r, 4.0 * sigma, 0.5)
    z = rng.uniform(lo - margin, hi + margin, size=(int(z_samples), potential.dim_p))
    dmin = np.full(z.shape[0], np.inf)
    for img in images:
        d = np.min(np.linalg.norm(z[:, None, :] - img[None, :, :], axis=2), axis=1)
        np.minimum(dmin, d, out=dmin)
    outside = z[dmin >= sigma / 2.0]
    if outside.shape[0] == 0:
        raise NumericError("no samples survive outside the sigma/2 tubes")
    floor = float(np.min(factor.value(outside)))
    lip_sum = float(sum(w.lip for w in potential.wells))

    return WellGeometry(
        sigma=sigma, sigma_floor=floor, eta=eta, eta_source=eta_source,
        alpha_min=a_min, alpha_max=a_max, k=k, diam=region.diameter,
        lip_sum=lip_sum, region=region, well_images=images, factor=factor)


def length_bound(potential, region, p, q, geometry=None, config=None):
    """Explicit Euclidean length cap for a minimizing geodesic from p to q.

    Uses the cheapest initialization as the upper distance bound, so the cap
    is fully computable without running the optimizer.
    """
    geo = geometry or well_geometry(potential, region)
    if geo.sigma_floor <= 0.0:
        raise NumericError("degenerate factor floor; length cap is unbounded")
    config = config or GeodesicConfig()
    p = np.atleast_1d(np.asarray(p, dtype=float))
    q = np.atleast_1d(np.asarray(q, dtype=float))
    x0 = geo.region.points[0]
    curves = [segment_init(p, q, config.nodes)]
    for i in range(1, potential.k + 1):
        curves.append(via_well_init(potential, x0, p, q, i, config.nodes,
                                    region=None if geo.region.is_point else geo.region))
    d_ub = min(curve_cost(geo.factor, c) for c in curves)
    return geo.k * geo.sigma + geo.diam * geo.lip_sum + (d_ub + 1.0) / geo.sigma_floor
