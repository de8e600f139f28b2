"""Builtin manifolds: constructions, transition maps and exact distances.

Each factory returns a ManifoldSpec whose chart callables are batched and
analytic (metric derivatives included), so simulations never fall back to
finite differences on these.
"""

import numpy as np

from .geometry import Chart, ManifoldSpec

TWO_PI = 2.0 * np.pi


def _const_metric_chart(cid, dim, matrix, periodic=None):
    matrix = np.asarray(matrix, dtype=float)
    sigma = np.linalg.cholesky(np.linalg.inv(matrix))
    drift = np.zeros(dim)

    def metric(x):
        return np.broadcast_to(matrix, x.shape[:-1] + (dim, dim)).copy()

    def dmetric(x):
        return np.zeros(x.shape[:-1] + (dim, dim, dim))

    def ito(x):
        shp = x.shape[:-1]
        return (np.broadcast_to(drift, shp + (dim,)),
                np.broadcast_to(sigma, shp + (dim, dim)))

    return Chart(id=cid, dim=dim, metric=metric, metric_derivative=dmetric,
                 periodic=periodic, ito_fn=ito)


def _single_chart_manifold(name, dim, chart, dist, inj, volume=None,
                           canonical=None, params=None):
    def transition(from_id, to_id, x):
        if from_id != chart.id or to_id != chart.id:
            raise KeyError("unknown chart pair (%r, %r)" % (from_id, to_id))
        return chart.wrap(np.asarray(x, dtype=float))

    def transition_jacobian(from_id, to_id, x):
        x = np.asarray(x, dtype=float)
        eye = np.eye(dim)
        return np.broadcast_to(eye, x.shape[:-1] + (dim, dim)).copy()

    return ManifoldSpec(
        name=name, dim=dim, charts=[chart], transition=transition,
        transition_jacobian=transition_jacobian, reference_distance=dist,
        injectivity_radius_lb=inj, volume=volume,
        partition_of_unity=[lambda x: np.ones(np.shape(x)[:-1])],
        canonical_embedding=canonical, params=params or {})


# ---------------------------------------------------------------------------
# flat families

def make_euclidean(dim=2):
    chart = _const_metric_chart("cartesian", dim, np.eye(dim))

    def dist(cx, x, cy, y):
        return np.linalg.norm(np.asarray(x, float) - np.asarray(y, float),
                              axis=-1)

    return _single_chart_manifold("euclidean", dim, chart, dist,
                                  inj=np.inf, params={"dim": dim})


def make_circle(radius=1.0):
    chart = _const_metric_chart("angle", 1, [[radius**2]], periodic=(TWO_PI,))

    def dist(cx, x, cy, y):
        d = np.abs(np.mod(np.asarray(x, float) - np.asarray(y, float),
                          TWO_PI))[..., 0]
        return radius * np.minimum(d, TWO_PI - d)

    return _single_chart_manifold(
        "circle", 1, chart, dist, inj=np.pi * radius,
        volume=TWO_PI * radius, canonical="circle-R2",
        params={"radius": radius})


def make_flat_torus(periods=(TWO_PI, TWO_PI)):
    periods = tuple(float(p) for p in periods)
    chart = _const_metric_chart("fund", 2, np.eye(2), periodic=periods)
    per = np.asarray(periods)

    def dist(cx, x, cy, y):
        d = np.abs(np.mod(np.asarray(x, float) - np.asarray(y, float), per))
        d = np.minimum(d, per - d)
        return np.linalg.norm(d, axis=-1)

    return _single_chart_manifold(
        "flat-torus", 2, chart, dist, inj=min(periods) / 2.0,
        volume=periods[0] * periods[1], canonical="clifford-torus-R4",
        params={"periods": list(periods)})


# ---------------------------------------------------------------------------
# sphere: two stereographic charts (trust |p| < 2), plus a polar chart for
# analytic work.  Chart coordinates are radius independent; the metric
# carries the radius.

STEREO_TRUST_RADIUS = 2.0
STEREO_SWITCH_MARGIN = 0.25


def stereo_to_ambient(p, radius, north=True):
    """Map stereographic coordinates to R^3; north chart covers z > -r."""
    p = np.asarray(p, dtype=float)
    s2 = np.sum(p * p, axis=-1)
    den = 1.0 + s2
    out = np.empty(p.shape[:-1] + (3,))
    out[..., 0] = 2.0 * p[..., 0] / den
    out[..., 1] = 2.0 * p[..., 1] / den
    out[..., 2] = (1.0 - s2) / den if north else (s2 - 1.0) / den
    return radius * out


def ambient_to_stereo(z, radius, north=True):
    z = np.asarray(z, dtype=float)
    w = z[..., 2] if north else -z[..., 2]
    den = radius + w
    return z[..., :2] / den[..., None]


def _stereo_chart(cid, radius, north):
    def metric(x):
        s2 = np.sum(x * x, axis=-1)
        lam = 4.0 * radius**2 / (1.0 + s2) ** 2
        out = np.zeros(x.shape[:-1] + (2, 2))
        out[..., 0, 0] = lam
        out[..., 1, 1] = lam
        return out

    def dmetric(x):
        s2 = np.sum(x * x, axis=-1)
        dlam = -16.0 * radius**2 / (1.0 + s2) ** 3
        out = np.zeros(x.shape[:-1] + (2, 2, 2))
        for k in range(2):
            out[..., k, 0, 0] = dlam * x[..., k]
            out[..., k, 1, 1] = dlam * x[..., k]
        return out

    def ito(x):
        # 2-D conformal metric: sqrt|g| g^{ij} = I, so the drift vanishes.
        s2 = np.sum(x * x, axis=-1)
        s = (1.0 + s2) / (2.0 * radius)
        drift = np.zeros(x.shape)
        sigma = np.zeros(x.shape[:-1] + (2, 2))
        sigma[..., 0, 0] = s
        sigma[..., 1, 1] = s
        return drift, sigma

    def margin(x):
        return STEREO_TRUST_RADIUS - np.linalg.norm(x, axis=-1)

    return Chart(id=cid, dim=2, metric=metric, metric_derivative=dmetric,
                 margin_fn=margin, switch_margin=STEREO_SWITCH_MARGIN,
                 ito_fn=ito)


def _smooth_step(t):
    """C-infinity step: 0 for t<=0, 1 for t>=1."""
    t = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.maximum(1.0 - t, 1e-300)), 0.0)
    return a / (a + b)


_POU_WIDTH = 0.35


def _sphere_pou_weight(p):
    # weight of the chart's own pole region, expressed in its own
    # stereographic coordinates; the two charts' weights sum to one.
    s2 = np.sum(np.asarray(p, float) ** 2, axis=-1)
    zr = (1.0 - s2) / (1.0 + s2)
    return _smooth_step((zr + _POU_WIDTH) / (2.0 * _POU_WIDTH))


def make_sphere(radius=1.0):
    north = _stereo_chart("north", radius, True)
    south = _stereo_chart("south", radius, False)

    def transition(from_id, to_id, x):
        x = np.asarray(x, dtype=float)
        if from_id == to_id:
            return x
        s2 = np.sum(x * x, axis=-1, keepdims=True)
        return x / s2

    def transition_jacobian(from_id, to_id, x):
        x = np.asarray(x, dtype=float)
        if from_id == to_id:
            return np.broadcast_to(np.eye(2), x.shape[:-1] + (2, 2)).copy()
        s2 = np.sum(x * x, axis=-1)
        eye = np.eye(2)
        out = (eye * s2[..., None, None]
               - 2.0 * x[..., :, None] * x[..., None, :])
        return out / (s2 ** 2)[..., None, None]

    def to_ambient(cid, x):
        return stereo_to_ambient(x, radius, north=(cid == "north"))

    def dist(cx, x, cy, y):
        a = to_ambient(cx, x)
        b = to_ambient(cy, y)
        dot = np.sum(a * b, axis=-1)
        cross = np.linalg.norm(np.cross(a, b), axis=-1)
        return radius * np.arctan2(cross, dot)

    m = ManifoldSpec(
        name="sphere", dim=2, charts=[north, south], transition=transition,
        transition_jacobian=transition_jacobian, reference_distance=dist,
        injectivity_radius_lb=np.pi * radius,
        volume=4.0 * np.pi * radius**2,
        partition_of_unity=[_sphere_pou_weight, _sphere_pou_weight],
        canonical_embedding="sphere-R3", params={"radius": radius})
    return m


def sphere_polar_chart(radius=1.0, theta_min=0.05):
    """Polar-angle chart g = diag(r^2, r^2 sin^2 theta); analytic work only.

    The sin(theta) -> 0 degeneracy makes it unfit for simulation near the
    poles; the builtin sphere atlas uses stereographic charts instead.
    """
    r2 = radius**2

    def metric(x):
        th = x[..., 0]
        out = np.zeros(x.shape[:-1] + (2, 2))
        out[..., 0, 0] = r2
        out[..., 1, 1] = r2 * np.sin(th) ** 2
        return out

    def dmetric(x):
        th = x[..., 0]
        out = np.zeros(x.shape[:-1] + (2, 2, 2))
        out[..., 0, 1, 1] = 2.0 * r2 * np.sin(th) * np.cos(th)
        return out

    def margin(x):
        th = x[..., 0]
        return np.minimum(th - theta_min, np.pi - theta_min - th)

    return Chart(id="polar", dim=2, metric=metric, metric_derivative=dmetric,
                 margin_fn=margin, switch_margin=0.02,
                 periodic=(np.nan, TWO_PI))


def make_sphere_polar_atlas(radius=1.0, theta_min=0.05):
    """Sphere with a polar chart over the bulk and stereographic caps.

    Used where an explicitly nonzero chart drift is wanted (the polar drift
    is (cot(theta)/2, 0) / r^2-scaled); the stereographic charts only catch
    paths that wander near a pole.
    """
    polar = sphere_polar_chart(radius, theta_min)
    north = _stereo_chart("north", radius, True)
    south = _stereo_chart("south", radius, False)

    def polar_to_ambient(x):
        th, ph = x[..., 0], x[..., 1]
        st = np.sin(th)
        return radius * np.stack(
            [st * np.cos(ph), st * np.sin(ph), np.cos(th)], axis=-1)

    def ambient_to_polar(z):
        th = np.arccos(np.clip(z[..., 2] / radius, -1.0, 1.0))
        ph = np.mod(np.arctan2(z[..., 1], z[..., 0]), TWO_PI)
        return np.stack([th, ph], axis=-1)

    def to_ambient(cid, x):
        if cid == "polar":
            return polar_to_ambient(x)
        return stereo_to_ambient(x, radius, north=(cid == "north"))

    def from_ambient(cid, z):
        if cid == "polar":
            return ambient_to_polar(z)
        return ambient_to_stereo(z, radius, north=(cid == "north"))

    def transition(from_id, to_id, x):
        x = np.asarray(x, dtype=float)
        if from_id == to_id:
            return x
        return from_ambient(to_id, to_ambient(from_id, x))

    def transition_jacobian(from_id, to_id, x):
        x = np.asarray(x, dtype=float)
        if from_id == to_id:
            return np.broadcast_to(np.eye(2), x.shape[:-1] + (2, 2)).copy()
        h = 1e-6
        out = np.empty(x.shape[:-1] + (2, 2))
        for k in range(2):
            e = np.zeros(2)
            e[k] = h
            d = (transition(from_id, to_id, x + e)
                 - transition(from_id, to_id, x - e)) / (2 * h)
            out[..., :, k] = d
        return out

    def dist(cx, x, cy, y):
        a = to_ambient(cx, x)
        b = to_ambient(cy, y)
        dot = np.sum(a * b, axis=-1)
        cross = np.linalg.norm(np.cross(a, b), axis=-1)
        return radius * np.arctan2(cross, dot)

    return ManifoldSpec(
        name="sphere-polar", dim=2, charts=[polar, north, south],
        transition=transition, transition_jacobian=transition_jacobian,
        reference_distance=dist, injectivity_radius_lb=np.pi * radius,
        volume=4.0 * np.pi * radius**2, canonical_embedding="sphere-R3",
        params={"radius": radius})


# ---------------------------------------------------------------------------
# torus of revolution with its induced (round) metric

def make_round_torus(ring_radius=2.0, tube_radius=1.0):
    R, r = float(ring_radius), float(tube_radius)
    if R <= r:
        raise ValueError("ring radius must exceed tube radius")

    def metric(x):
        ph = x[..., 1]
        out = np.zeros(x.shape[:-1] + (2, 2))
        out[..., 0, 0] = (R + r * np.cos(ph)) ** 2
        out[..., 1, 1] = r**2
        return out

    def dmetric(x):
        ph = x[..., 1]
        out = np.zeros(x.shape[:-1] + (2, 2, 2))
        out[..., 1, 0, 0] = -2.0 * r * np.sin(ph) * (R + r * np.cos(ph))
        return out

    def ito(x):
        ph = x[..., 1]
        w = R + r * np.cos(ph)
        drift = np.zeros(x.shape)
        drift[..., 1] = -np.sin(ph) / (2.0 * r * w)
        sigma = np.zeros(x.shape[:-1] + (2, 2))
        sigma[..., 0, 0] = 1.0 / w
        sigma[..., 1, 1] = 1.0 / r
        return drift, sigma

    chart = Chart(id="angles", dim=2, metric=metric,
                  metric_derivative=dmetric, periodic=(TWO_PI, TWO_PI),
                  ito_fn=ito)
    return _single_chart_manifold(
        "round-torus", 2, chart, dist=None,
        inj=min(np.pi * r, np.pi * (R - r)) / 2.0,
        volume=4.0 * np.pi**2 * R * r, canonical="round-torus-R3",
        params={"ring_radius": R, "tube_radius": r})


# ---------------------------------------------------------------------------
# hyperbolic half-plane patch

def make_hyperbolic_patch(y_min=0.05):
    def metric(x):
        y = x[..., 1]
        out = np.zeros(x.shape[:-1] + (2, 2))
        out[..., 0, 0] = 1.0 / y**2
        out[..., 1, 1] = 1.0 / y**2
        return out

    def dmetric(x):
        y = x[..., 1]
        out = np.zeros(x.shape[:-1] + (2, 2, 2))
        out[..., 1, 0, 0] = -2.0 / y**3
        out[..., 1, 1, 1] = -2.0 / y**3
        return out

    def ito(x):
        # sqrt|g| g^{ij} = I in 2-D, so again zero drift; sigma = y I.
        y = x[..., 1]
        drift = np.zeros(x.shape)
        sigma = np.zeros(x.shape[:-1] + (2, 2))
        sigma[..., 0, 0] = y
        sigma[..., 1, 1] = y
        return drift, sigma

    def margin(x):
        return x[..., 1] - y_min

    chart = Chart(id="halfplane", dim=2, metric=metric,
                  metric_derivative=dmetric, margin_fn=margin,
                  switch_margin=0.0, ito_fn=ito)

    def dist(cx, x, cy, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        d2 = np.sum((x - y) ** 2, axis=-1)
        arg = 1.0 + d2 / (2.0 * x[..., 1] * y[..., 1])
        return np.arccosh(arg)

    return _single_chart_manifold(
        "hyperbolic-patch", 2, chart, dist, inj=np.inf,
        params={"y_min": y_min})
