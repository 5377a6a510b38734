"""Sharp-interface energies: sums and quadratures of well-to-well distances.

The limit energy of a piecewise-well field charges every jump with the
geodesic distance between the two local well values.  In 1D that is a sum
over jump points; in 2D a quadrature along interface polylines.  Geodesic
solves dominate the runtime, so distances are memoized on the quantized
spatial point and the label pair.
"""

import threading
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InfeasibleError
from .geodesic import GeodesicConfig, d_W

_GL8_NODES, _GL8_WEIGHTS = np.polynomial.legendre.leggauss(8)


class DistanceCache:
    """Thread-safe memo for well-to-well distances at quantized points."""

    def __init__(self, potential, config=None, quantum=1e-6):
        self.potential = potential
        self.config = config or GeodesicConfig()
        self.quantum = quantum
        self._data = {}
        self._lock = threading.Lock()

    def _key(self, x, i, j):
        q = tuple(int(v) for v in np.round(np.atleast_1d(x) / self.quantum))
        return (q, min(i, j), max(i, j))

    def well_distance(self, x, i, j):
        key = self._key(x, i, j)
        with self._lock:
            if key in self._data:
                return self._data[key]
        z = self.potential.well_values(x)
        cost = d_W(self.potential, x, z[i - 1], z[j - 1], self.config).cost
        with self._lock:
            self._data.setdefault(key, cost)
        return self._data[key]

    def state_distance(self, x, p, q):
        """Uncached distance between arbitrary states (used for traces)."""
        return d_W(self.potential, x, p, q, self.config).cost

    def __len__(self):
        return len(self._data)


@dataclass(frozen=True)
class JumpConfiguration1D:
    """Sorted interior jump points with a well label per subinterval."""

    jumps: tuple
    labels: tuple

    def __post_init__(self):
        jumps = tuple(float(x) for x in self.jumps)
        labels = tuple(int(i) for i in self.labels)
        object.__setattr__(self, "jumps", jumps)
        object.__setattr__(self, "labels", labels)
        if len(labels) != len(jumps) + 1:
            raise ConfigError("need one label per subinterval")
        if any(b <= a for a, b in zip(jumps[:-1], jumps[1:])):
            raise ConfigError("jump points must be strictly increasing")
        if any(a == b for a, b in zip(labels[:-1], labels[1:])):
            raise ConfigError("adjacent subintervals must carry distinct labels")

    def label_at(self, x):
        return self.labels[int(np.searchsorted(self.jumps, x, side="right"))]


@dataclass(frozen=True)
class InterfaceMesh2D:
    """Straight interface segments with the labels on their two sides."""

    segments: tuple  # ((a, b, left_label, right_label), ...)

    def __post_init__(self):
        segs = []
        for a, b, i, j in self.segments:
            i, j = int(i), int(j)
            if i == j:
                raise ConfigError("segment labels must differ")
            segs.append((np.atleast_1d(np.asarray(a, dtype=float)),
                         np.atleast_1d(np.asarray(b, dtype=float)), i, j))
        object.__setattr__(self, "segments", tuple(segs))

    def total_length(self):
        return float(sum(np.linalg.norm(b - a) for a, b, _, _ in self.segments))


def _check_interior(potential, x):
    lo, hi = potential.domain.lo, potential.domain.hi
    x = np.atleast_1d(x)
    if not all(a < v < b for a, v, b in zip(lo, x, hi)):
        raise ConfigError(f"jump point {x.tolist()} is not interior to the domain")


def F0_energy_1d(potential, config, cache=None):
    """Sum of well-to-well distances over the jump points."""
    cache = cache or DistanceCache(potential)
    total = 0.0
    breakdown = []
    for k, x in enumerate(config.jumps):
        _check_interior(potential, x)
        i, j = config.labels[k], config.labels[k + 1]
        val = cache.well_distance([x], i, j)
        breakdown.append({"x": float(x), "labels": (i, j), "cost": val})
        total += val
    return total, breakdown


def F0_energy_2d(potential, mesh, quadrature_per_segment=8, cache=None):
    """Per-segment Gauss-Legendre quadrature of the well-to-well distance."""
    if quadrature_per_segment < 2:
        raise ConfigError("need at least two quadrature nodes per segment")
    cache = cache or DistanceCache(potential)
    nodes, weights = np.polynomial.legendre.leggauss(int(quadrature_per_segment))
    total = 0.0
    breakdown = []
    for a, b, i, j in mesh.segments:
        length = float(np.linalg.norm(b - a))
        if length == 0.0:
            breakdown.append({"a": a.tolist(), "b": b.tolist(), "cost": 0.0})
            continue
        acc = 0.0
        for t, w in zip(0.5 * (nodes + 1.0), 0.5 * weights):
            x = a + t * (b - a)
            acc += w * cache.well_distance(x, i, j)
        breakdown.append({"a": a.tolist(), "b": b.tolist(),
                          "labels": (i, j), "cost": acc * length})
        total += acc * length
    return total, breakdown


def _integrate_well(well, a, b, n=64):
    if b <= a:
        return 0.0
    edges = np.linspace(a, b, n + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    halves = 0.5 * (edges[1:] - edges[:-1])
    xq = (mids[:, None] + halves[:, None] * _GL8_NODES[None, :]).ravel()
    vals = well(xq[:, None]).reshape(n, len(_GL8_NODES), -1)
    return np.einsum("k,nkm->m", _GL8_WEIGHTS, vals * halves[:, None, None])


def _mass_of_single_jump(potential, x_star, i, j):
    lo, hi = potential.domain.lo[0], potential.domain.hi[0]
    return (_integrate_well(potential.wells[i - 1], lo, x_star)
            + _integrate_well(potential.wells[j - 1], x_star, hi))


def minimal_jump_1d(potential, labels, mass=None, coarse=200, tol=1e-6,
                    cache=None):
    """Cheapest single interior jump between two wells on a 1D domain.

    Without a constraint, a coarse scan of the jump cost followed by
    golden-section refinement; the cost may be multimodal, so refinement
    only trusts the scan's bracket.  Under a mass constraint the location
    is pinned by the (monotone) mass map instead and only the energy at
    that location is reported.
    """
    i, j = labels
    if i == j:
        raise ConfigError("a jump needs two distinct labels")
    if potential.domain.dim != 1:
        raise ConfigError("single-jump search is one-dimensional")
    cache = cache or DistanceCache(potential)
    lo, hi = potential.domain.lo[0], potential.domain.hi[0]

    if mass is not None:
        mass = np.atleast_1d(np.asarray(mass, dtype=float))
        m_lo = _mass_of_single_jump(potential, lo, i, j)
        m_hi = _mass_of_single_jump(potential, hi, i, j)
        span_lo, span_hi = np.minimum(m_lo, m_hi), np.maximum(m_lo, m_hi)
        if np.any(mass < span_lo - 1e-12) or np.any(mass > span_hi + 1e-12):
            raise InfeasibleError(
                f"mass {mass.tolist()} unreachable by a single {i}->{j} jump")
        a, b = lo, hi
        fa = _mass_of_single_jump(potential, a, i, j)[0] - mass[0]
        for _ in range(200):
            mid = 0.5 * (a + b)
            fm = _mass_of_single_jump(potential, mid, i, j)[0] - mass[0]
            if fa * fm <= 0:
                b = mid
            else:
                a, fa = mid, fm
            if b - a < 1e-13 * (hi - lo):
                break
        x_star = 0.5 * (a + b)
        resid = _mass_of_single_jump(potential, x_star, i, j) - mass
        span = float(np.max(np.abs(m_hi - m_lo)))
        if np.max(np.abs(resid)) > 1e-6 * (1.0 + span):
            raise InfeasibleError(
                "mass constraint is inconsistent across components")
        return x_star, cache.well_distance([x_star], i, j)

    pad = 1e-9 * (hi - lo)
    xs = np.linspace(lo + pad, hi - pad, int(coarse))
    costs = np.array([cache.well_distance([x], i, j) for x in xs])
    k = int(np.argmin(costs))   # argmin takes the first, so ties go left
    a = xs[max(k - 1, 0)]
    b = xs[min(k + 1, len(xs) - 1)]
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc = cache.well_distance([c], i, j)
    fd = cache.well_distance([d], i, j)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = cache.well_distance([c], i, j)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = cache.well_distance([d], i, j)
    x_star = float(0.5 * (a + b))
    return x_star, cache.well_distance([x_star], i, j)


def dirichlet_energy(potential, config, g, trace=None, cache=None,
                     boundary_quadrature=32):
    """Jump energy plus the boundary mismatch penalty.

    1D: the penalty is the distance between the interior trace and g at the
    two endpoints.  2D: quadrature of the trace-to-g distance over the four
    box edges; ``trace`` maps boundary points to interior states and
    ``g`` maps them to the imposed values.
    """
    cache = cache or DistanceCache(potential)
    if potential.domain.dim == 1:
        total, breakdown = F0_energy_1d(potential, config, cache)
        lo, hi = potential.domain.lo[0], potential.domain.hi[0]
        g_lo, g_hi = g
        for x, gval, side in ((lo, g_lo, "left"), (hi, g_hi, "right")):
            lbl = config.label_at(x)
            tr = potential.well_values([x])[lbl - 1]
            pen = cache.state_distance([x], tr, np.atleast_1d(gval))
            breakdown.append({"boundary": side, "cost": pen})
            total += pen
        return total, breakdown
    if trace is None:
        raise ConfigError("2D boundary penalties need a trace function")
    total, breakdown = F0_energy_2d(potential, config, cache=cache)
    lo, hi = np.asarray(potential.domain.lo), np.asarray(potential.domain.hi)
    corners = [np.array([lo[0], lo[1]]), np.array([hi[0], lo[1]]),
               np.array([hi[0], hi[1]]), np.array([lo[0], hi[1]])]
    for a, b in zip(corners, corners[1:] + corners[:1]):
        length = float(np.linalg.norm(b - a))
        acc = 0.0
        ts = np.linspace(0.0, 1.0, int(boundary_quadrature), endpoint=False) \
            + 0.5 / boundary_quadrature
        for t in ts:
            x = a + t * (b - a)
            acc += cache.state_distance(x, np.atleast_1d(trace(x)),
                                        np.atleast_1d(g(x))) / len(ts)
        breakdown.append({"edge": (a.tolist(), b.tolist()), "cost": acc * length})
        total += acc * length
    return total, breakdown


# ---------------------------------------------------------------------------
# Jump curves that oscillate too much to bound their length
# ---------------------------------------------------------------------------

@dataclass
class GraphInterfaceSums:
    level_cut: float
    weighted_by_distance: float     # sum of d_W * arc length, stays bounded
    weighted_by_separation: float   # sum of |z1 - z2| * arc length, grows
    arc_length: float
    cells: int


def graph_interface_sums(potential, f, x1_cells, arc_subdiv=16, cache=None):
    """Distance-weighted vs separation-weighted sums along a jump graph.

    The jump set is the graph x2 = f(x1) over the cell partition
    ``x1_cells`` (increasing).  Each cell contributes its polyline arc
    length, weighted once by the well-to-well distance at the cell's left
    edge and once by the Euclidean well separation there.  With wells that
    touch as x1 tends to 0, the first sum converges while the second grows
    without bound as the partition refines toward 0.
    """
    cache = cache or DistanceCache(
        potential, GeodesicConfig(nodes=32, max_iter=400))
    x1_cells = np.asarray(x1_cells, dtype=float)
    sum_dw = 0.0
    sum_sep = 0.0
    arc_total = 0.0
    for a, b in zip(x1_cells[:-1], x1_cells[1:]):
        xs = np.linspace(a, b, int(arc_subdiv) + 1)
        pts = np.column_stack([xs, f(xs)])
        arc = float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))
        x = [a, float(f(np.asarray([a]))[0])]
        z = potential.well_values(x)
        sep = float(np.linalg.norm(z[0] - z[1]))
        dw = cache.well_distance(x, 1, 2)
        sum_dw += dw * arc
        sum_sep += sep * arc
        arc_total += arc
    return GraphInterfaceSums(
        level_cut=float(x1_cells[0]), weighted_by_distance=sum_dw,
        weighted_by_separation=sum_sep, arc_length=arc_total,
        cells=len(x1_cells) - 1)
