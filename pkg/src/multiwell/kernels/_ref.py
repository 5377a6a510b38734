"""Reference numpy implementation of the hot kernels.

Three closed-form conformal factor families are recognized; they cover every
builtin potential frozen at a spatial point.  Specs are plain tuples:

    ("dw", c)                W(u) = c (1 - u^2)^2 on R^1
    ("product", a, b)        W(z) = |z - a|^2 |z - b|^2
    ("blend", wells, alphas, r, p0, r0)
                             quadratic wells glued to a slowly growing floor
    ("callable", f, gf)      arbitrary vectorized F (gf may be None)

All kernels treat polylines as (n+1, M) float arrays and cost the conformal
length with the midpoint rule.  The compiled backend in ``_fast`` mirrors the
first three families exactly; "callable" always runs here.
"""

import numpy as np

_TINY = 1e-300


def _smoothstep_down(t):
    """C^2 cutoff: 1 at t<=0, 0 at t>=1, quintic in between."""
    t = np.clip(t, 0.0, 1.0)
    return 1.0 - t * t * t * (t * (6.0 * t - 15.0) + 10.0)


def _smoothstep_down_deriv(t):
    inside = (t > 0.0) & (t < 1.0)
    tc = np.clip(t, 0.0, 1.0)
    d = -30.0 * tc * tc * (tc - 1.0) * (tc - 1.0)
    return np.where(inside, d, 0.0)


def blend_potential(z, wells, alphas, r, p0, r0):
    """Potential value W(z) for the glued-quadratic family, z of shape (B, M)."""
    z = np.atleast_2d(z)
    g = p0 * np.sqrt(1.0 + np.sum(z * z, axis=1) / (r0 * r0))
    w = np.zeros(z.shape[0])
    beta_total = np.zeros(z.shape[0])
    for zi, ai in zip(wells, alphas):
        d = np.linalg.norm(z - zi[None, :], axis=1)
        beta = _smoothstep_down((d - r) / r)
        w += beta * ai * d * d
        beta_total += beta
    return w + (1.0 - beta_total) * g


def blend_potential_grad(z, wells, alphas, r, p0, r0):
    """Gradient of ``blend_potential`` with respect to z."""
    z = np.atleast_2d(z)
    s = np.sqrt(1.0 + np.sum(z * z, axis=1) / (r0 * r0))
    g = p0 * s
    gg = p0 * z / (r0 * r0 * s[:, None])
    grad = np.zeros_like(z)
    beta_total = np.zeros(z.shape[0])
    for zi, ai in zip(wells, alphas):
        dz = z - zi[None, :]
        d = np.linalg.norm(dz, axis=1)
        t = (d - r) / r
        beta = _smoothstep_down(t)
        dbeta = _smoothstep_down_deriv(t) / r
        nhat = dz / np.maximum(d, _TINY)[:, None]
        grad += (dbeta * (ai * d * d - g))[:, None] * nhat + (2.0 * ai * beta)[:, None] * dz
        beta_total += beta
    grad += (1.0 - beta_total)[:, None] * gg
    return grad


def factor_values(spec, z):
    """Evaluate the conformal factor F >= 0 at points z of shape (B, M)."""
    kind = spec[0]
    z = np.atleast_2d(np.asarray(z, dtype=float))
    if kind == "dw":
        c = spec[1]
        u = z[:, 0]
        return 2.0 * np.sqrt(c) * np.abs(1.0 - u * u)
    if kind == "product":
        a, b = spec[1], spec[2]
        da = np.linalg.norm(z - a[None, :], axis=1)
        db = np.linalg.norm(z - b[None, :], axis=1)
        return 2.0 * da * db
    if kind == "blend":
        w = blend_potential(z, *spec[1:])
        return 2.0 * np.sqrt(np.maximum(w, 0.0))
    if kind == "callable":
        return np.asarray(spec[1](z), dtype=float)
    raise ValueError(f"unknown factor family {kind!r}")


def factor_grads(spec, z):
    """Gradient of the factor; zero is returned on the degenerate set."""
    kind = spec[0]
    z = np.atleast_2d(np.asarray(z, dtype=float))
    if kind == "dw":
        c = spec[1]
        u = z[:, 0]
        return (-4.0 * np.sqrt(c) * u * np.sign(1.0 - u * u))[:, None]
    if kind == "product":
        a, b = spec[1], spec[2]
        va = z - a[None, :]
        vb = z - b[None, :]
        da = np.linalg.norm(va, axis=1)
        db = np.linalg.norm(vb, axis=1)
        na = va / np.maximum(da, _TINY)[:, None]
        nb = vb / np.maximum(db, _TINY)[:, None]
        return 2.0 * (db[:, None] * na + da[:, None] * nb)
    if kind == "blend":
        w = blend_potential(z, *spec[1:])
        gw = blend_potential_grad(z, *spec[1:])
        root = np.sqrt(np.maximum(w, 0.0))
        safe = root > 1e-14
        out = np.zeros_like(gw)
        out[safe] = gw[safe] / root[safe, None]
        return out
    if kind == "callable":
        if spec[2] is not None:
            return np.asarray(spec[2](z), dtype=float)
        return _fd_factor_grads(spec[1], z)
    raise ValueError(f"unknown factor family {kind!r}")


def _fd_factor_grads(f, z, h=1e-6):
    out = np.zeros_like(z)
    # non-finite factor values surface as a NumericError at the cost check;
    # the intermediate inf-inf here is expected then
    with np.errstate(invalid="ignore"):
        for m in range(z.shape[1]):
            zp = z.copy()
            zm = z.copy()
            zp[:, m] += h
            zm[:, m] -= h
            out[:, m] = (np.asarray(f(zp)) - np.asarray(f(zm))) / (2.0 * h)
    return out


def polyline_cost(spec, nodes):
    """Midpoint-rule conformal length of a polyline (n+1, M)."""
    nodes = np.asarray(nodes, dtype=float)
    seg = nodes[1:] - nodes[:-1]
    lengths = np.linalg.norm(seg, axis=1)
    mids = 0.5 * (nodes[1:] + nodes[:-1])
    return float(np.dot(factor_values(spec, mids), lengths))


def polyline_cost_grad(spec, nodes):
    """Cost plus its gradient with respect to the interior nodes.

    Returns (cost, grad) with grad of shape (n-1, M); endpoint rows are not
    part of the result because endpoints stay frozen during optimization.
    """
    nodes = np.asarray(nodes, dtype=float)
    seg = nodes[1:] - nodes[:-1]
    lengths = np.linalg.norm(seg, axis=1)
    mids = 0.5 * (nodes[1:] + nodes[:-1])
    fm = factor_values(spec, mids)
    gm = factor_grads(spec, mids)
    cost = float(np.dot(fm, lengths))
    unit = seg / np.maximum(lengths, _TINY)[:, None]
    unit[lengths == 0.0] = 0.0
    grad = (
        0.5 * (gm[:-1] * lengths[:-1, None] + gm[1:] * lengths[1:, None])
        + fm[:-1, None] * unit[:-1]
        - fm[1:, None] * unit[1:]
    )
    return cost, grad


def redistribute(nodes, n_out=None):
    """Resample a polyline to uniform chord length, keeping the endpoints."""
    nodes = np.asarray(nodes, dtype=float)
    n_out = nodes.shape[0] if n_out is None else int(n_out)
    seg = np.linalg.norm(nodes[1:] - nodes[:-1], axis=1)
    s = np.concatenate(([0.0], np.cumsum(seg)))
    total = s[-1]
    if total <= 0.0:
        return np.repeat(nodes[:1], n_out, axis=0)
    target = np.linspace(0.0, total, n_out)
    out = np.empty((n_out, nodes.shape[1]))
    for m in range(nodes.shape[1]):
        out[:, m] = np.interp(target, s, nodes[:, m])
    out[0] = nodes[0]
    out[-1] = nodes[-1]
    return out
