"""Spatially dependent multi-well potentials.

A potential W(x, p) >= 0 vanishes, for each spatial point x in a box domain,
exactly on a finite set of well values z_1(x), ..., z_k(x) in R^M.  This
module provides the builtin families used throughout the package, a sampled
validator for the structural assumptions (Lipschitz wells, well separation,
quadratic behavior near wells, linear growth, positive floor away from the
wells), and the common-tangent construction for scalar free energies.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError, NoBitangentError
from .kernels import _ref


@dataclass(frozen=True)
class Box:
    """Axis-aligned box domain in R^N, N in {1, 2}."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi) or len(lo) not in (1, 2):
            raise ConfigError("domain must be a 1D or 2D box")
        if any(a >= b for a, b in zip(lo, hi)):
            raise ConfigError("box must have positive extent on every axis")

    @property
    def dim(self):
        return len(self.lo)

    def contains(self, x, tol=1e-12):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        scale = np.maximum(hi - lo, 1.0)
        return bool(np.all(x >= lo - tol * scale) and np.all(x <= hi + tol * scale))

    def diameter(self):
        return float(np.linalg.norm(np.asarray(self.hi) - np.asarray(self.lo)))

    def volume(self):
        return float(np.prod(np.asarray(self.hi) - np.asarray(self.lo)))

    def sample_grid(self, per_axis):
        """Regular grid of points including the boundary, shape (P, N)."""
        axes = [np.linspace(a, b, int(per_axis)) for a, b in zip(self.lo, self.hi)]
        if self.dim == 1:
            return axes[0][:, None]
        xx, yy = np.meshgrid(axes[0], axes[1], indexing="ij")
        return np.column_stack([xx.ravel(), yy.ravel()])


def _as_points(x, dim):
    """Normalize x to a (B, dim) array; scalars and (dim,) vectors allowed."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim == 1:
        if x.shape[0] != dim:
            raise ConfigError(f"expected a point in R^{dim}, got shape {x.shape}")
        return x[None, :]
    if x.shape[-1] != dim:
        raise ConfigError(f"expected points in R^{dim}, got shape {x.shape}")
    return x


class WellMap:
    """One well value as a function of the spatial point.

    ``fn`` maps a batch of spatial points (B, N) to well values (B, M); the
    declared Lipschitz constant is checked only through sampling.
    """

    def __init__(self, index, fn, lip, label=None):
        self.index = int(index)
        self.fn = fn
        self.lip = float(lip)
        self.label = label

    @classmethod
    def constant(cls, index, value):
        value = np.atleast_1d(np.asarray(value, dtype=float))

        def fn(x):
            return np.broadcast_to(value, (x.shape[0], value.shape[0])).copy()

        return cls(index, fn, 0.0, label=list(map(float, value)))

    def __call__(self, x):
        return np.asarray(self.fn(np.atleast_2d(x)), dtype=float)

    def sampled_lipschitz(self, points):
        """Largest difference quotient over all pairs of sample points."""
        z = self(points)
        dz = np.linalg.norm(z[:, None, :] - z[None, :, :], axis=2)
        dx = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=2)
        mask = dx > 1e-12
        if not np.any(mask):
            return 0.0
        return float(np.max(dz[mask] / dx[mask]))


class MultiWellPotential:
    """A nonnegative potential W(x, p) vanishing on k moving wells.

    Evaluation is vectorized pairwise: ``value_fn`` and ``grad_fn`` take
    (X, P) with X of shape (B, N) and P of shape (B, M).  ``alpha_fn`` gives
    the quadratic coefficients near each well, possibly varying with x.
    Instances are immutable after construction and safe to share across
    threads.
    """

    def __init__(self, name, domain, wells, value_fn, grad_fn, alpha_fn,
                 dim_p, r, delta, growth_S, growth_R, eta=None,
                 exact_h3=False, separated_wells=False, params=None):
        self.name = name
        self.domain = domain
        self.wells = tuple(wells)
        self._value_fn = value_fn
        self._grad_fn = grad_fn
        self._alpha_fn = alpha_fn
        self.dim_p = int(dim_p)
        self.r = float(r)
        self.delta = float(delta)
        self.growth_S = float(growth_S)
        self.growth_R = float(growth_R)
        self.eta = None if eta is None else float(eta)
        self.exact_h3 = bool(exact_h3)
        self.separated_wells = bool(separated_wells)
        self.params = dict(params or {})

    @property
    def k(self):
        return len(self.wells)

    def _check_domain(self, x):
        x = _as_points(x, self.domain.dim)
        for row in x:
            if not self.domain.contains(row):
                raise DomainError(f"point {row.tolist()} outside the domain closure")
        return x

    def evaluate(self, x, p):
        """W(x, p) for a single point pair."""
        x = self._check_domain(x)
        p = _as_points(p, self.dim_p)
        return float(self._value_fn(x, p)[0])

    def evaluate_batch(self, x, p):
        """Pairwise W for batches X (B, N), P (B, M); no domain check."""
        x = _as_points(x, self.domain.dim)
        p = _as_points(p, self.dim_p)
        if x.shape[0] == 1 and p.shape[0] > 1:
            x = np.broadcast_to(x, (p.shape[0], x.shape[1]))
        return np.asarray(self._value_fn(x, p), dtype=float)

    def grad_p(self, x, p):
        """Gradient of W with respect to p at a single point pair."""
        x = self._check_domain(x)
        p = _as_points(p, self.dim_p)
        return np.asarray(self._grad_fn(x, p), dtype=float)[0]

    def grad_p_batch(self, x, p):
        x = _as_points(x, self.domain.dim)
        p = _as_points(p, self.dim_p)
        if x.shape[0] == 1 and p.shape[0] > 1:
            x = np.broadcast_to(x, (p.shape[0], x.shape[1]))
        return np.asarray(self._grad_fn(x, p), dtype=float)

    def well_values(self, x):
        """Well values at a single x, shape (k, M)."""
        x = _as_points(x, self.domain.dim)
        return np.vstack([w(x)[0] for w in self.wells])

    def alphas_at(self, x):
        """Quadratic coefficients near each well at x, shape (k,)."""
        x = _as_points(x, self.domain.dim)
        return np.asarray(self._alpha_fn(x), dtype=float).reshape(-1)

    def frozen_spec(self, x):
        """Kernel factor spec for F = 2 sqrt(W(x, .)); see kernels._ref."""
        x = self._check_domain(x)
        if self.name in ("scalar-double-well", "modulated"):
            h = self.params.get("modulation_fn", lambda pts: np.ones(pts.shape[0]))
            return ("dw", float(h(x)[0]))
        if self.name == "product-distance":
            z = self.well_values(x)
            return ("product", z[0].copy(), z[1].copy())
        if self.name == "blended-quadratic":
            z = self.well_values(x)
            return ("blend", z, np.asarray([a for a in self.alphas_at(x)]),
                    self.r, self.params["p0"], self.params["r0"])
        xx = x[0]

        def f(pts):
            return 2.0 * np.sqrt(np.maximum(self.evaluate_batch(xx, pts), 0.0))

        return ("callable", f, None)

    def min_separation(self, x):
        z = self.well_values(x)
        if self.k < 2:
            return np.inf
        d = np.linalg.norm(z[:, None, :] - z[None, :, :], axis=2)
        iu = np.triu_indices(self.k, 1)
        return float(np.min(d[iu]))

    def reaction_lipschitz(self, n_samples=64, seed=0):
        """Sampled bound on the p-Hessian of W near the wells.

        Used by the gradient-flow time step.  Finite differences of grad_p
        along random directions within radius r of each well.
        """
        rng = np.random.default_rng(seed)
        pts = self.domain.sample_grid(4)
        h = 1e-5
        worst = 0.0
        for x in pts:
            z = self.well_values(x)
            for i in range(self.k):
                for _ in range(max(1, n_samples // (len(pts) * self.k))):
                    v = rng.normal(size=self.dim_p)
                    v /= np.linalg.norm(v)
                    p = z[i] + rng.uniform(0, self.r) * v
                    gp = self.grad_p_batch(x, np.vstack([p + h * v, p - h * v]))
                    worst = max(worst, float(np.linalg.norm(gp[0] - gp[1]) / (2 * h)))
        return max(worst, 1e-12)

    def descriptor(self):
        """JSON-serializable description; see ``from_descriptor``."""
        wells = [w.label if w.label is not None else "custom" for w in self.wells]
        alpha = self.params.get("alpha_descriptor", self.params.get("alpha"))
        return {
            "name": self.name,
            "k": self.k,
            "wells": wells,
            "constants": {
                "alpha": alpha,
                "r": self.r,
                "delta": self.delta,
                "S": self.growth_S,
                "R": self.growth_R,
                "eta": self.eta,
            },
            "domain": {"lo": list(self.domain.lo), "hi": list(self.domain.hi)},
            "modulation": self.params.get("modulation"),
        }


# ---------------------------------------------------------------------------
# Builtin families
# ---------------------------------------------------------------------------

def _double_well_core(domain, modulation, modulation_fn, name, params):
    wells = (WellMap.constant(1, [-1.0]), WellMap.constant(2, [1.0]))

    def value(x, p):
        u = p[:, 0]
        return modulation_fn(x) * (1.0 - u * u) ** 2

    def grad(x, p):
        u = p[:, 0]
        return (modulation_fn(x) * (-4.0) * u * (1.0 - u * u))[:, None]

    def alpha(x):
        return 4.0 * float(modulation_fn(x)[:1][0]) * np.ones(2)

    params = dict(params)
    params["modulation"] = modulation
    params["modulation_fn"] = modulation_fn
    params["alpha_descriptor"] = "4*modulation"
    return MultiWellPotential(
        name, domain, wells, value, grad, alpha, dim_p=1,
        r=0.2, delta=2.0, growth_S=1.0, growth_R=2.0, eta=None,
        exact_h3=False, separated_wells=True, params=params)


_MODULATIONS = {
    None: lambda x: np.ones(x.shape[0]),
    "one-plus-norm-squared": lambda x: 1.0 + np.sum(x * x, axis=1),
}

_NAMED_WELLS = {
    # wells of the standard two-well counterexample on a 2D box
    "axis-projection": (lambda x: np.column_stack([x[:, 0], np.zeros(x.shape[0])]), 1.0),
    "parabolic-sheet": (
        lambda x: np.column_stack([x[:, 0], np.maximum(x[:, 0], 0.0) ** 2]),
        np.sqrt(1.0 + 4.0),
    ),
}


def _resolve_well(index, w):
    if isinstance(w, str):
        if w not in _NAMED_WELLS:
            raise ConfigError(f"unknown named well {w!r}")
        fn, lip = _NAMED_WELLS[w]
        return WellMap(index, fn, lip, label=w)
    if isinstance(w, WellMap):
        return WellMap(index, w.fn, w.lip, label=w.label)
    return WellMap.constant(index, w)


def _product_distance(domain, wells, params):
    if len(wells) != 2:
        raise ConfigError("product-distance takes exactly two wells")
    wms = tuple(_resolve_well(i + 1, w) for i, w in enumerate(wells))

    def value(x, p):
        a = wms[0](x)
        b = wms[1](x)
        da2 = np.sum((p - a) ** 2, axis=1)
        db2 = np.sum((p - b) ** 2, axis=1)
        return da2 * db2

    def grad(x, p):
        a = wms[0](x)
        b = wms[1](x)
        va = p - a
        vb = p - b
        da2 = np.sum(va * va, axis=1)[:, None]
        db2 = np.sum(vb * vb, axis=1)[:, None]
        return 2.0 * va * db2 + 2.0 * vb * da2

    def alpha(x):
        a = wms[0](x)[0]
        b = wms[1](x)[0]
        sep2 = float(np.sum((a - b) ** 2))
        return np.array([sep2, sep2])

    dim_p = wms[0](np.zeros((1, domain.dim))).shape[1]
    # wells may touch, so no positive separation is declared
    return MultiWellPotential(
        "product-distance", domain, wms, value, grad, alpha, dim_p=dim_p,
        r=0.1, delta=0.0, growth_S=1.0, growth_R=4.0, eta=None,
        exact_h3=False, separated_wells=False, params=params)


def _blended_quadratic(domain, wells, alphas, r, delta=None, params=None):
    k = len(wells)
    wms = tuple(_resolve_well(i + 1, w) for i, w in enumerate(wells))
    alphas = np.broadcast_to(np.asarray(alphas, dtype=float).reshape(-1), (k,)).copy()
    if np.any(alphas <= 0):
        raise ConfigError("quadratic coefficients must be positive")
    r = float(r)

    probe = domain.sample_grid(9)
    zs = np.stack([w(probe) for w in wms])          # (k, P, M)
    max_norm = float(np.max(np.linalg.norm(zs, axis=2)))
    if k >= 2:
        seps = [
            np.min(np.linalg.norm(zs[i] - zs[j], axis=1))
            for i in range(k) for j in range(i + 1, k)
        ]
        actual_sep = float(min(seps))
    else:
        actual_sep = np.inf
    if delta is None:
        delta = actual_sep
    delta = float(delta)
    if delta > actual_sep + 1e-12:
        raise ConfigError(
            f"declared separation {delta} exceeds the sampled well separation {actual_sep:.6g}")
    if 4.0 * r > delta:
        raise ConfigError("need r <= delta/4 so the quadratic caps do not overlap")

    amax = float(np.max(alphas))
    p0 = 4.0 * amax * r * r
    r0 = max_norm + 4.0 * r + 1.0
    dim_p = zs.shape[2]

    def wells_at(x):
        return np.stack([w(x) for w in wms], axis=1)   # (B, k, M)

    def value(x, p):
        z = wells_at(x)
        g = p0 * np.sqrt(1.0 + np.sum(p * p, axis=1) / (r0 * r0))
        w = np.zeros(p.shape[0])
        btot = np.zeros(p.shape[0])
        for i in range(k):
            d = np.linalg.norm(p - z[:, i, :], axis=1)
            beta = _ref._smoothstep_down((d - r) / r)
            w += beta * alphas[i] * d * d
            btot += beta
        return w + (1.0 - btot) * g

    def grad(x, p):
        z = wells_at(x)
        s = np.sqrt(1.0 + np.sum(p * p, axis=1) / (r0 * r0))
        g = p0 * s
        gg = p0 * p / (r0 * r0 * s[:, None])
        out = np.zeros_like(p)
        btot = np.zeros(p.shape[0])
        for i in range(k):
            dz = p - z[:, i, :]
            d = np.linalg.norm(dz, axis=1)
            t = (d - r) / r
            beta = _ref._smoothstep_down(t)
            dbeta = _ref._smoothstep_down_deriv(t) / r
            nhat = dz / np.maximum(d, 1e-300)[:, None]
            out += (dbeta * (alphas[i] * d * d - g))[:, None] * nhat
            out += (2.0 * alphas[i] * beta)[:, None] * dz
            btot += beta
        return out + (1.0 - btot)[:, None] * gg

    def alpha_fn(x):
        return alphas.copy()

    params = dict(params or {})
    params.update({"alpha": [float(a) for a in alphas], "p0": p0, "r0": r0})
    eta = float(np.min(alphas)) * (r / 2.0) ** 2
    return MultiWellPotential(
        "blended-quadratic", domain, wms, value, grad, alpha_fn, dim_p=dim_p,
        r=r, delta=delta, growth_S=p0 / r0, growth_R=r0, eta=eta,
        exact_h3=True, separated_wells=True, params=params)


def builtin(name, domain=None, **params):
    """Construct a builtin potential family by name.

    Families: ``scalar-double-well`` (two wells at +-1 on the line),
    ``modulated`` (the double well scaled by a named function of x),
    ``product-distance`` (squared-distance product for two, possibly
    touching, wells), and ``blended-quadratic`` (exact quadratic caps of
    radius r glued to a slowly growing floor, every structural assumption
    holds by construction).
    """
    if name == "scalar-double-well":
        domain = domain or Box((-1.0,), (1.0,))
        return _double_well_core(domain, None, _MODULATIONS[None],
                                 "scalar-double-well", params)
    if name == "modulated":
        domain = domain or Box((-1.0,), (1.0,))
        modulation = params.pop("modulation", "one-plus-norm-squared")
        if modulation not in _MODULATIONS or modulation is None:
            raise ConfigError(f"unknown modulation {modulation!r}")
        return _double_well_core(domain, modulation, _MODULATIONS[modulation],
                                 "modulated", params)
    if name == "product-distance":
        domain = domain or Box((-1.0, -1.0), (1.0, 1.0))
        wells = params.pop("wells", ["axis-projection", "parabolic-sheet"])
        return _product_distance(domain, wells, params)
    if name == "blended-quadratic":
        if domain is None:
            raise ConfigError("blended-quadratic requires a domain")
        wells = params.pop("wells")
        alphas = params.pop("alphas", 1.0)
        r = params.pop("r", 0.25)
        delta = params.pop("delta", None)
        return _blended_quadratic(domain, wells, alphas, r, delta, params)
    raise ConfigError(f"unknown builtin potential {name!r}")


def from_descriptor(desc):
    """Rebuild a builtin potential from its JSON descriptor."""
    name = desc["name"]
    dom = desc.get("domain")
    domain = Box(tuple(dom["lo"]), tuple(dom["hi"])) if dom else None
    if name == "scalar-double-well":
        return builtin(name, domain)
    if name == "modulated":
        return builtin(name, domain, modulation=desc.get("modulation", "one-plus-norm-squared"))
    if name == "product-distance":
        return builtin(name, domain, wells=desc["wells"])
    if name == "blended-quadratic":
        c = desc["constants"]
        return builtin(name, domain, wells=desc["wells"], alphas=c["alpha"],
                       r=c["r"], delta=c.get("delta"))
    raise ConfigError(f"unknown potential descriptor {name!r}")


# ---------------------------------------------------------------------------
# Assumption validation
# ---------------------------------------------------------------------------

@dataclass
class AssumptionCheck:
    name: str
    passed: bool
    margin: float
    witness_x: list | None = None
    witness_p: list | None = None
    detail: str = ""

    def as_dict(self):
        return {
            "name": self.name, "passed": bool(self.passed), "margin": float(self.margin),
            "witness_x": self.witness_x, "witness_p": self.witness_p, "detail": self.detail,
        }


@dataclass
class ValidationReport:
    checks: list = field(default_factory=list)
    empirical_eta: float = np.inf

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self):
        return {
            "passed": self.passed,
            "empirical_eta": float(self.empirical_eta),
            "checks": [c.as_dict() for c in self.checks],
        }


def validate_assumptions(potential, sample_density=1000, seed=0):
    """Sampled pass/fail report for the structural assumptions.

    Each check records the worst witness and its margin (positive means
    pass).  Failures are reported, never raised.  The quadratic check is
    exact (absolute tolerance) for potentials built to satisfy it exactly
    and a leading-order relative check (small probe radius, 20% tolerance)
    otherwise.  The floor check records the sampled infimum of W away from
    the wells as the empirical eta.
    """
    rng = np.random.default_rng(seed)
    per_axis = max(3, int(round(sample_density ** (1.0 / potential.domain.dim))))
    xs = potential.domain.sample_grid(per_axis)
    k, mdim = potential.k, potential.dim_p
    checks = []

    # Lipschitz well maps over a random subset of grid points
    sub = xs[rng.choice(xs.shape[0], size=min(60, xs.shape[0]), replace=False)]
    worst_margin, worst_idx = np.inf, None
    for w in potential.wells:
        margin = w.lip * 1.001 + 1e-12 - w.sampled_lipschitz(sub)
        if margin < worst_margin:
            worst_margin, worst_idx = margin, w.index
    checks.append(AssumptionCheck(
        "wells-lipschitz", worst_margin >= 0.0, margin=float(worst_margin),
        detail=f"tightest well map: index {worst_idx}"))

    # zero exactly on the wells, nonnegative everywhere sampled
    worst = -np.inf
    wx = wp = None
    for x in xs:
        z = potential.well_values(x)
        vals = potential.evaluate_batch(np.repeat(x[None, :], k, axis=0), z)
        j = int(np.argmax(np.abs(vals)))
        if abs(vals[j]) > worst:
            worst, wx, wp = abs(vals[j]), x, z[j]
    checks.append(AssumptionCheck(
        "zero-at-wells", worst <= 1e-12, margin=1e-12 - worst,
        witness_x=list(wx), witness_p=list(wp),
        detail=f"max |W(x, z_i(x))| = {worst:.3e}"))

    pr = rng.normal(size=(400, mdim)) * max(1.0, potential.growth_R)
    xr = xs[rng.integers(0, xs.shape[0], size=400)]
    vals = potential.evaluate_batch(xr, pr)
    j = int(np.argmin(vals))
    checks.append(AssumptionCheck(
        "nonnegative", vals[j] >= -1e-14, margin=float(vals[j]),
        witness_x=list(xr[j]), witness_p=list(pr[j]),
        detail="min sampled W"))

    # positive well separation
    if k >= 2:
        min_sep, wx = np.inf, None
        for x in xs:
            s = potential.min_separation(x)
            if s < min_sep:
                min_sep, wx = s, x
        floor = max(potential.delta, 1e-8)
        checks.append(AssumptionCheck(
            "well-separation", min_sep >= floor - 1e-12, margin=float(min_sep - floor),
            witness_x=list(wx),
            detail=f"min sampled separation {min_sep:.3e}, required {floor:.3e}"))
    else:
        checks.append(AssumptionCheck("well-separation", True, margin=np.inf))

    # quadratic caps near the wells
    worst, wx, wp = -np.inf, None, None
    n_dirs = 8
    for x in xs[:: max(1, len(xs) // 50)]:
        z = potential.well_values(x)
        al = potential.alphas_at(x)
        sep = potential.min_separation(x)
        if potential.exact_h3:
            rho, tol_abs, tol_rel = potential.r, 1e-9, 0.0
        else:
            if not np.isfinite(sep) or sep <= 0:
                continue
            rho, tol_abs, tol_rel = 0.05 * min(potential.r, sep), 1e-12, 0.2
        for i in range(k):
            dirs = rng.normal(size=(n_dirs, mdim))
            dirs /= np.linalg.norm(dirs, axis=1)[:, None]
            rad = rng.uniform(0.1 * rho, rho, size=n_dirs)
            p = z[i] + rad[:, None] * dirs
            w = potential.evaluate_batch(np.repeat(x[None, :], n_dirs, axis=0), p)
            quad = al[i] * rad * rad
            err = np.abs(w - quad) - (tol_abs + tol_rel * quad)
            j = int(np.argmax(err))
            if err[j] > worst:
                worst, wx, wp = err[j], x, p[j]
    checks.append(AssumptionCheck(
        "quadratic-near-wells", worst <= 0.0, margin=float(-worst),
        witness_x=None if wx is None else list(wx),
        witness_p=None if wp is None else list(wp),
        detail="exact cap" if potential.exact_h3 else "leading-order check"))

    # linear growth far out
    R, S = potential.growth_R, potential.growth_S
    dirs = rng.normal(size=(300, mdim))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    rad = R + rng.uniform(1e-6, 2.0, size=300)
    p = rad[:, None] * dirs
    xg = xs[rng.integers(0, xs.shape[0], size=300)]
    w = potential.evaluate_batch(xg, p)
    slack = w - S * rad
    j = int(np.argmin(slack))
    checks.append(AssumptionCheck(
        "linear-growth", slack[j] >= 0.0, margin=float(slack[j]),
        witness_x=list(xg[j]), witness_p=list(p[j]),
        detail=f"min W - S|p| over |p| in ({R:.3g}, {R + 2:.3g}]"))

    # floor away from the wells; the sampled infimum is the empirical eta
    eta_emp, wx, wp = np.inf, None, None
    for x in xs[:: max(1, len(xs) // 40)]:
        z = potential.well_values(x)
        p = rng.normal(size=(120, mdim)) * (0.5 * max(1.0, R))
        d = np.min(np.linalg.norm(p[:, None, :] - z[None, :, :], axis=2), axis=1)
        keep = d >= potential.r / 2.0
        if not np.any(keep):
            continue
        w = potential.evaluate_batch(np.repeat(x[None, :], int(np.sum(keep)), axis=0), p[keep])
        j = int(np.argmin(w))
        if w[j] < eta_emp:
            eta_emp, wx, wp = float(w[j]), x, p[keep][j]
    checks.append(AssumptionCheck(
        "floor-away-from-wells", eta_emp > 0.0, margin=eta_emp,
        witness_x=None if wx is None else list(wx),
        witness_p=None if wp is None else list(wp),
        detail=f"empirical eta {eta_emp:.6g}"
               + (f", declared {potential.eta:.6g}" if potential.eta is not None else "")))

    return ValidationReport(checks=checks, empirical_eta=eta_emp)


# ---------------------------------------------------------------------------
# Common tangent (bitangent) of a scalar free energy
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MaxwellParameters:
    """Bitangent data of a non-convex scalar energy: touch points and slope."""

    alpha: float
    beta: float
    mu: float

    def residuals(self, w0, dw0):
        r1 = dw0(self.alpha) - dw0(self.beta)
        r2 = w0(self.beta) - w0(self.alpha) - dw0(self.alpha) * (self.beta - self.alpha)
        return float(r1), float(r2)


def _numeric_derivative(w0, h=1e-6):
    def dw0(u):
        return (w0(u + h) - w0(u - h)) / (2.0 * h)
    return dw0


def maxwell_parameters(w0, bracket, dw0=None, tol=1e-10, max_iter=200):
    """Common tangent line of w0 on the bracket, by damped Newton.

    The 2x2 system matches slopes and the secant condition.  The seed comes
    from the lower convex hull of a coarse sample; a convex w0 has no hull
    gap and raises ``NoBitangentError``.
    """
    a_lo, b_hi = float(bracket[0]), float(bracket[1])
    if not b_hi > a_lo:
        raise ConfigError("bracket must be an increasing pair")
    if dw0 is None:
        dw0 = _numeric_derivative(w0)

    # seed from the lower convex hull: a skipped sample marks the gap
    us = np.linspace(a_lo, b_hi, 257)
    vs = np.array([w0(u) for u in us])
    hull = [0]
    for i in range(1, len(us)):
        while len(hull) >= 2:
            i0, i1 = hull[-2], hull[-1]
            cross = (us[i1] - us[i0]) * (vs[i] - vs[i0]) - (us[i] - us[i0]) * (vs[i1] - vs[i0])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    gaps = [(hull[j], hull[j + 1]) for j in range(len(hull) - 1) if hull[j + 1] - hull[j] > 1]
    if not gaps:
        raise NoBitangentError("energy is convex on the bracket, no common tangent")
    i0, i1 = max(gaps, key=lambda g: us[g[1]] - us[g[0]])
    a, b = float(us[i0]), float(us[i1])

    def residual(a, b):
        return np.array([dw0(a) - dw0(b), w0(b) - w0(a) - dw0(a) * (b - a)])

    # rounding in w0 and its finite-difference slope floors the achievable
    # residual, so the target scales with the magnitude of the energy
    tol = max(tol, 1e-10 * (1.0 + float(np.max(np.abs(vs)))))
    res = residual(a, b)
    min_gap = 1e-6 * (b_hi - a_lo)
    for _ in range(max_iter):
        if np.max(np.abs(res)) < tol:
            return MaxwellParameters(alpha=a, beta=b, mu=float(dw0(a)))
        h = 1e-7 * (1.0 + abs(b - a))
        j00 = (residual(a + h, b) - residual(a - h, b)) / (2 * h)
        j01 = (residual(a, b + h) - residual(a, b - h)) / (2 * h)
        jac = np.column_stack([j00, j01])
        try:
            step = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError:
            raise NoBitangentError("singular tangency system") from None
        t = 1.0
        while t > 1e-12:
            an, bn = a + t * step[0], b + t * step[1]
            if bn - an > min_gap and a_lo - 1.0 <= an <= bn <= b_hi + 1.0:
                rn = residual(an, bn)
                if np.max(np.abs(rn)) < np.max(np.abs(res)):
                    a, b, res = an, bn, rn
                    break
            t *= 0.5
        else:
            raise NoBitangentError("damped Newton stalled before reaching tolerance")
    raise NoBitangentError("no convergence within the iteration budget")
