"""Diffuse-interface energies on grids and their constrained gradient flow.

The discrete energy is a trapezoid sum of W(x, u)/eps plus eps times the
squared forward differences of u.  Minimization is explicit gradient flow
with backtracking on the time step; the mass constraint is enforced after
every step by the additive shift (M - integral u)/|domain|, which keeps the
trapezoid mass exact to rounding, and Dirichlet rows stay frozen.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, GeometryError, NumericError, StalledError
from .geodesic import GeodesicConfig, d_W
from .potential import Box
from .profile import build_profile, default_lambda


@dataclass(frozen=True)
class Grid:
    box: Box
    shape: tuple

    def __post_init__(self):
        shape = tuple(int(n) for n in np.atleast_1d(self.shape))
        object.__setattr__(self, "shape", shape)
        if len(shape) != self.box.dim or any(n < 2 for n in shape):
            raise ConfigError("grid needs at least two points per axis")

    @classmethod
    def from_spacing(cls, box, h):
        shape = tuple(max(2, int(np.ceil((b - a) / h)) + 1)
                      for a, b in zip(box.lo, box.hi))
        return cls(box, shape)

    @property
    def dim(self):
        return self.box.dim

    @property
    def spacing(self):
        return tuple((b - a) / (n - 1)
                     for a, b, n in zip(self.box.lo, self.box.hi, self.shape))

    def axes(self):
        return [np.linspace(a, b, n)
                for a, b, n in zip(self.box.lo, self.box.hi, self.shape)]

    def points(self):
        axes = self.axes()
        if self.dim == 1:
            return axes[0][:, None]
        xx, yy = np.meshgrid(axes[0], axes[1], indexing="ij")
        return np.column_stack([xx.ravel(), yy.ravel()])

    def axis_weights(self):
        out = []
        for h, n in zip(self.spacing, self.shape):
            w = np.full(n, h)
            w[0] = w[-1] = h / 2.0
            out.append(w)
        return out

    def node_weights(self):
        """Trapezoid quadrature weight of every node, shaped like the grid."""
        ws = self.axis_weights()
        if self.dim == 1:
            return ws[0]
        return np.outer(ws[0], ws[1])

    def boundary_mask(self):
        mask = np.zeros(self.shape, dtype=bool)
        if self.dim == 1:
            mask[0] = mask[-1] = True
        else:
            mask[0, :] = mask[-1, :] = True
            mask[:, 0] = mask[:, -1] = True
        return mask


@dataclass
class Field:
    """Grid samples of u plus the boundary/mass constraint metadata."""

    grid: Grid
    values: np.ndarray                 # shape (*grid.shape, M)
    boundary: str = "natural"          # "natural" | "dirichlet"
    trace: np.ndarray | None = None    # values pinned on boundary nodes
    mass_target: np.ndarray | None = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape[:-1] != self.grid.shape:
            raise ConfigError("field values do not match the grid shape")
        if self.boundary not in ("natural", "dirichlet"):
            raise ConfigError(f"unknown boundary spec {self.boundary!r}")
        if self.boundary == "dirichlet":
            if self.trace is None:
                raise ConfigError("dirichlet fields need trace values")
            self.trace = np.asarray(self.trace, dtype=float)
            mask = self.grid.boundary_mask()
            self.values[mask] = self.trace[mask]
        if self.mass_target is not None:
            self.mass_target = np.atleast_1d(np.asarray(self.mass_target, dtype=float))

    @property
    def m(self):
        return self.values.shape[-1]

    def mass(self):
        w = self.grid.node_weights()
        return np.tensordot(w, self.values, axes=self.grid.dim)

    def with_values(self, values):
        return Field(self.grid, values, self.boundary,
                     None if self.trace is None else self.trace,
                     None if self.mass_target is None else self.mass_target.copy(),
                     dict(self.info))

    def resampled(self, grid):
        """Values linearly resampled onto another grid; constraints dropped."""
        if self.grid.dim == 1:
            x_old = self.grid.axes()[0]
            x_new = grid.axes()[0]
            vals = np.stack([np.interp(x_new, x_old, self.values[:, c])
                             for c in range(self.m)], axis=-1)
        else:
            from scipy.interpolate import RegularGridInterpolator
            interp = RegularGridInterpolator(tuple(self.grid.axes()), self.values)
            vals = interp(grid.points()).reshape(*grid.shape, self.m)
        return Field(grid, vals)


def _project(field, values):
    """Re-impose Dirichlet rows and the mass constraint on raw values."""
    if field.boundary == "dirichlet":
        mask = field.grid.boundary_mask()
        values[mask] = field.trace[mask]
    if field.mass_target is not None:
        shift = (field.mass_target - np.tensordot(
            field.grid.node_weights(), values, axes=field.grid.dim)) / field.grid.box.volume()
        values += shift
    return values


def energy(potential, fld, eps):
    """Trapezoid sum of W/eps plus eps times squared forward differences."""
    if eps <= 0:
        raise ConfigError("eps must be positive")
    u = fld.values
    grid = fld.grid
    w = potential.evaluate_batch(grid.points(), u.reshape(-1, fld.m))
    if not np.all(np.isfinite(w)):
        raise NumericError("non-finite potential values on the grid")
    ew = float(np.sum(grid.node_weights().ravel() * w)) / eps
    hs = grid.spacing
    if grid.dim == 1:
        d = np.diff(u, axis=0) / hs[0]
        eg = eps * hs[0] * float(np.sum(d * d))
    else:
        wx, wy = grid.axis_weights()
        dx = np.diff(u, axis=0) / hs[0]
        dy = np.diff(u, axis=1) / hs[1]
        eg = eps * (hs[0] * float(np.sum(np.sum(dx * dx, axis=-1) * wy[None, :]))
                    + hs[1] * float(np.sum(np.sum(dy * dy, axis=-1) * wx[:, None])))
    total = ew + eg
    if not np.isfinite(total):
        raise NumericError("non-finite energy")
    return total


def energy_gradient(potential, fld, eps, raw=False):
    """Discrete L2 gradient of the energy.

    This is exactly the derivative of ``energy`` with respect to each node
    value divided by the node's trapezoid weight, so the pairing
    sum(grad * v * weight) reproduces directional finite differences of the
    energy.  Dirichlet rows are zeroed.  With ``raw=True`` the Dirichlet
    zeroing is skipped (used by the constraint-multiplier diagnostic).
    """
    u = fld.values
    grid = fld.grid
    gp = potential.grad_p_batch(grid.points(), u.reshape(-1, fld.m)).reshape(u.shape)
    partial = gp * (grid.node_weights()[..., None] / eps)
    hs = grid.spacing
    if grid.dim == 1:
        d = np.diff(u, axis=0)
        coef = 2.0 * eps / hs[0]
        partial[:-1] -= coef * d
        partial[1:] += coef * d
    else:
        wx, wy = grid.axis_weights()
        dx = np.diff(u, axis=0)
        dy = np.diff(u, axis=1)
        cx = (2.0 * eps / hs[0]) * wy[None, :, None]
        cy = (2.0 * eps / hs[1]) * wx[:, None, None]
        partial[:-1] -= cx * dx
        partial[1:] += cx * dx
        partial[:, :-1] -= cy * dy
        partial[:, 1:] += cy * dy
    grad = partial / grid.node_weights()[..., None]
    if not raw and fld.boundary == "dirichlet":
        grad[grid.boundary_mask()] = 0.0
    return grad


@dataclass(frozen=True)
class FlowConfig:
    max_iter: int = 200000
    tol: float = 1e-12
    patience: int = 25
    dt_safety: float = 1.0
    record_trace: bool = False


@dataclass
class FlowResult:
    field: Field
    energy: float
    iterations: int
    seconds: float
    dt: float
    converged: bool
    energy_trace: np.ndarray | None = None
    mass_error: float = 0.0


def stable_time_step(potential, grid, eps, safety=1.0):
    """Explicit-scheme step: diffusion h^2/(8 eps) and reaction eps/(2 L_W)."""
    h = min(grid.spacing)
    l_w = potential.reaction_lipschitz()
    return safety * min(h * h / (8.0 * eps), eps / (2.0 * l_w))


def minimize(potential, init, eps, config=None):
    """Gradient flow to a (local) minimizer under the field's constraints.

    Steps that fail to decrease the projected energy halve dt; the recorded
    energy trace is therefore nonincreasing.  Raises ``StalledError`` when
    dt underflows.
    """
    config = config or FlowConfig()
    fld = init.with_values(_project(init, init.values.copy()))
    dt0 = stable_time_step(potential, fld.grid, eps, config.dt_safety)
    dt = dt0
    e = energy(potential, fld, eps)
    trace = [e] if config.record_trace else None
    start = time.perf_counter()
    quiet = 0
    converged = False
    iters = 0
    mass_err = 0.0
    for iters in range(1, config.max_iter + 1):
        g = energy_gradient(potential, fld, eps)
        accepted = False
        while dt >= 1e-12 * dt0:
            trial = _project(fld, fld.values - dt * g)
            e_trial = energy(potential, fld.with_values(trial), eps)
            if e_trial <= e:
                drop = e - e_trial
                fld = fld.with_values(trial)
                e = e_trial
                if trace is not None:
                    trace.append(e)
                dt = min(dt * 1.2, dt0)
                accepted = True
                break
            dt *= 0.5
        if not accepted:
            raise StalledError(
                f"time step underflow at iteration {iters} (energy {e:.6g})")
        if fld.mass_target is not None:
            mass_err = max(mass_err,
                           float(np.max(np.abs(fld.mass() - fld.mass_target))))
        if drop <= config.tol * max(abs(e), 1.0):
            quiet += 1
            if quiet >= config.patience:
                converged = True
                break
        else:
            quiet = 0
    return FlowResult(
        field=fld, energy=e, iterations=iters,
        seconds=time.perf_counter() - start, dt=dt, converged=converged,
        energy_trace=None if trace is None else np.asarray(trace),
        mass_error=mass_err)


def gibbs_thomson_estimate(potential, fld, eps):
    """Constraint multiplier estimate: weighted mean of the raw gradient.

    Experimental diagnostic; in the flat or one-dimensional cases it tends
    to zero, for curved interfaces it tracks surface tension times mean
    curvature.
    """
    g = energy_gradient(potential, fld, eps, raw=True)
    w = fld.grid.node_weights()[..., None]
    return (g * w).reshape(-1, fld.m).sum(axis=0) / fld.grid.box.volume()


# ---------------------------------------------------------------------------
# 1D recovery fields
# ---------------------------------------------------------------------------

def recovery_sequence_1d(potential, x0, labels, eps, grid=None,
                         geodesic_config=None, lam=None):
    """Explicit near-optimal field for a single 1D jump at x0.

    Left of the layer the field follows the moving well of the first label,
    right of it the second; the transition is the reparametrized frozen
    geodesic at x0, and two width-eps matching layers interpolate between
    the frozen well values and the moving ones.
    """
    if potential.domain.dim != 1:
        raise ConfigError("recovery fields are one-dimensional")
    i, j = labels
    if i == j:
        raise ConfigError("the two labels must differ")
    x0 = float(np.atleast_1d(x0)[0])
    lo, hi = potential.domain.lo[0], potential.domain.hi[0]
    if not lo < x0 < hi:
        raise GeometryError("jump point must be interior to the domain")
    lam = default_lambda(eps) if lam is None else lam
    z = potential.well_values([x0])
    geo = d_W(potential, [x0], z[i - 1], z[j - 1],
              geodesic_config or GeodesicConfig(nodes=96))
    prof = build_profile(potential, [x0], geo.curve, eps, lam)
    tau = prof.tau
    if tau + 2.0 * eps > min(x0 - lo, hi - x0):
        raise GeometryError(
            f"layer of width {tau:.4g} plus matching pads does not fit at {x0}")
    grid = grid or Grid.from_spacing(potential.domain, eps / 10.0)
    xs = grid.axes()[0]
    wells_i = potential.wells[i - 1](xs[:, None])
    wells_j = potential.wells[j - 1](xs[:, None])
    zi0, zj0 = z[i - 1], z[j - 1]
    zi_edge = potential.wells[i - 1](np.array([[x0 - eps]]))[0]
    zj_edge = potential.wells[j - 1](np.array([[x0 + tau + eps]]))[0]
    u = np.empty((len(xs), potential.dim_p))
    for idx, x in enumerate(xs):
        if x < x0 - eps:
            u[idx] = wells_i[idx]
        elif x < x0:
            t = (x0 - x) / eps
            u[idx] = zi0 + t * (zi_edge - zi0)
        elif x <= x0 + tau:
            u[idx] = prof.u(x - x0)[0]
        elif x <= x0 + tau + eps:
            t = (x - (x0 + tau)) / eps
            u[idx] = zj0 + t * (zj_edge - zj0)
        else:
            u[idx] = wells_j[idx]
    fld = Field(grid, u)
    fld.info.update({
        "x0": x0, "tau": tau, "eps": eps, "lam": lam,
        "dw_cost": geo.cost,
        "layer": (x0, x0 + tau),
        "matching": ((x0 - eps, x0), (x0 + tau, x0 + tau + eps)),
    })
    return fld


# ---------------------------------------------------------------------------
# Interface extraction and sweeps
# ---------------------------------------------------------------------------

def interface_estimate_1d(fld):
    """Location of the steepest cell, the natural 1D interface marker."""
    u = fld.values
    d = np.linalg.norm(np.diff(u, axis=0), axis=1)
    k = int(np.argmax(d))
    xs = fld.grid.axes()[0]
    return float(0.5 * (xs[k] + xs[k + 1]))


def phase_indicator(potential, fld, labels=(1, 2), geodesic_config=None):
    """Normalized geodesic distance ratio d(z_i, u) / d(z_i, z_j) per node.

    Near either well the closed form for dropping onto a quadratic cap is
    exact and cheap; only nodes whose state sits away from both wells (the
    transition band) run the optimizer.
    """
    i, j = labels
    cfg = geodesic_config or GeodesicConfig(nodes=32, max_iter=400)
    pts = fld.grid.points()
    u = fld.values.reshape(-1, fld.m)
    out = np.empty(pts.shape[0])
    for idx in range(pts.shape[0]):
        x = pts[idx]
        z = potential.well_values(x)
        al = potential.alphas_at(x)
        di = float(np.linalg.norm(u[idx] - z[i - 1]))
        dj = float(np.linalg.norm(u[idx] - z[j - 1]))
        dij = None
        near = min(potential.r, 0.25 * potential.delta) if potential.separated_wells \
            else potential.r
        if di <= near and di <= dj:
            num = np.sqrt(al[i - 1]) * di * di
        elif dj <= near:
            dij = d_W(potential, x, z[i - 1], z[j - 1], cfg).cost
            num = max(dij - np.sqrt(al[j - 1]) * dj * dj, 0.0)
        else:
            num = d_W(potential, x, z[i - 1], u[idx], cfg).cost
        if dij is None:
            dij = d_W(potential, x, z[i - 1], z[j - 1], cfg).cost
        out[idx] = num / max(dij, 1e-300)
    return np.clip(out.reshape(fld.grid.shape), 0.0, 1.0)


_MS_EDGES = {  # marching-squares segments per corner-sign case
    1: [(3, 0)], 2: [(0, 1)], 3: [(3, 1)], 4: [(1, 2)], 5: [(3, 0), (1, 2)],
    6: [(0, 2)], 7: [(3, 2)], 8: [(2, 3)], 9: [(0, 2)],
    10: [(0, 1), (2, 3)], 11: [(1, 2)], 12: [(3, 1)], 13: [(0, 1)], 14: [(3, 0)],
}


def half_level_segments(grid, values, level=0.5):
    """Linear-interpolation level-set segments of a node-sampled scalar."""
    xs, ys = grid.axes()
    v = values - level
    segs = []
    for a in range(len(xs) - 1):
        for b in range(len(ys) - 1):
            c = [v[a, b], v[a + 1, b], v[a + 1, b + 1], v[a, b + 1]]
            case = sum(1 << k for k in range(4) if c[k] > 0)
            if case in (0, 15):
                continue
            corner = [(xs[a], ys[b]), (xs[a + 1], ys[b]),
                      (xs[a + 1], ys[b + 1]), (xs[a], ys[b + 1])]

            def cross(e):
                p0, p1 = corner[e], corner[(e + 1) % 4]
                f0, f1 = c[e], c[(e + 1) % 4]
                t = f0 / (f0 - f1)
                return (p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1]))

            for e0, e1 in _MS_EDGES[case]:
                segs.append((cross(e0), cross(e1)))
    return segs


def interface_length_2d(potential, fld, labels=(1, 2), geodesic_config=None):
    ind = phase_indicator(potential, fld, labels, geodesic_config)
    segs = half_level_segments(fld.grid, ind)
    return float(sum(np.hypot(b[0] - a[0], b[1] - a[1]) for a, b in segs))


@dataclass
class Scenario:
    """Named minimization setup for sweeps: init, constraint, extraction."""

    potential: object
    labels: tuple = (1, 2)
    constraint: tuple | None = None      # ("mass", vector) | ("dirichlet", left, right)
    init: str = "step"                   # "step" | "constant" (well labels[0])
    step_at: float = 0.0
    h_over_eps: float = 5.0
    name: str = "scenario"

    def build_init(self, eps):
        pot = self.potential
        if pot.domain.dim != 1:
            raise ConfigError("sweep scenarios are one-dimensional")
        h = eps / self.h_over_eps
        grid = Grid.from_spacing(pot.domain, h)
        xs = grid.axes()[0]
        i, j = self.labels
        zi = pot.wells[i - 1](xs[:, None])
        if self.init == "constant":
            u = zi.copy()
        else:
            zj = pot.wells[j - 1](xs[:, None])
            u = np.where(xs[:, None] < self.step_at, zi, zj)
            try:
                rec = recovery_sequence_1d(pot, self.step_at, self.labels, eps,
                                           grid=grid)
                u = rec.values
            except GeometryError:
                pass
        boundary = "natural"
        trace = None
        mass_target = None
        if self.constraint and self.constraint[0] == "mass":
            mass_target = np.atleast_1d(self.constraint[1])
        if self.constraint and self.constraint[0] == "dirichlet":
            boundary = "dirichlet"
            trace = np.zeros_like(u)
            trace[0] = np.atleast_1d(self.constraint[1])
            trace[-1] = np.atleast_1d(self.constraint[2])
        return Field(grid, u, boundary, trace, mass_target)


@dataclass
class SweepRow:
    eps: float
    energy: float
    interface: float
    iterations: int
    seconds: float


@dataclass
class SweepRecord:
    scenario: str
    rows: list

    def energies(self):
        return np.array([r.energy for r in self.rows])


def epsilon_sweep(potential, scenario, eps_list, config=None, warm_start=True):
    """Minimize per eps (decreasing), warm-starting from the previous row."""
    eps_list = sorted((float(e) for e in eps_list), reverse=True)
    if any(e <= 0 for e in eps_list):
        raise ConfigError("eps values must be positive")
    rows = []
    prev = None
    for eps in eps_list:
        init = scenario.build_init(eps)
        if warm_start and prev is not None:
            resampled = prev.resampled(init.grid)
            init = Field(init.grid, resampled.values, init.boundary, init.trace,
                         init.mass_target)
        res = minimize(potential, init, eps, config)
        rows.append(SweepRow(
            eps=eps, energy=res.energy,
            interface=interface_estimate_1d(res.field),
            iterations=res.iterations, seconds=res.seconds))
        prev = res.field
    return SweepRecord(scenario=scenario.name, rows=rows), prev
