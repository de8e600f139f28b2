"""Charts, metric tensors, Christoffel symbols and the coordinate form of
the Laplace-Beltrami operator.

All chart callables are batched: points have shape (..., n) and tensors
gain trailing index axes, so the same code path serves single-point
queries and whole path ensembles.  Operations are pure functions; there
is no shared mutable state.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (ChartDomainError, DegenerateMetricError, OverlapError,
                     UnsupportedDistanceError)

FD_METRIC_STEP = 1e-5
FD_FIELD_STEP = 1e-5


# ---------------------------------------------------------------------------
# small batched linear algebra (n is 1 or 2 for every builtin chart)

def batch_det(g):
    n = g.shape[-1]
    if n == 1:
        return g[..., 0, 0]
    if n == 2:
        return g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] * g[..., 1, 0]
    return np.linalg.det(g)


def batch_inv(g):
    n = g.shape[-1]
    if n == 1:
        return 1.0 / g
    if n == 2:
        det = batch_det(g)
        out = np.empty_like(g)
        out[..., 0, 0] = g[..., 1, 1]
        out[..., 1, 1] = g[..., 0, 0]
        out[..., 0, 1] = -g[..., 0, 1]
        out[..., 1, 0] = -g[..., 1, 0]
        return out / det[..., None, None]
    return np.linalg.inv(g)


def batch_cholesky(g):
    """Lower Cholesky factor; raises DegenerateMetricError off the SPD cone."""
    n = g.shape[-1]
    if n == 1:
        if np.any(g[..., 0, 0] <= 0):
            raise DegenerateMetricError("1x1 metric not positive")
        return np.sqrt(g)
    if n == 2:
        a = g[..., 0, 0]
        d = batch_det(g)
        if np.any(a <= 0) or np.any(d <= 0):
            raise DegenerateMetricError("2x2 metric not positive definite")
        out = np.zeros_like(g)
        ra = np.sqrt(a)
        out[..., 0, 0] = ra
        out[..., 1, 0] = g[..., 1, 0] / ra
        out[..., 1, 1] = np.sqrt(d / a)
        return out
    try:
        return np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise DegenerateMetricError(str(exc)) from exc


def min_eigenvalue(g):
    n = g.shape[-1]
    if n == 1:
        return g[..., 0, 0]
    if n == 2:
        tr = g[..., 0, 0] + g[..., 1, 1]
        det = batch_det(g)
        disc = np.sqrt(np.maximum(tr * tr / 4.0 - det, 0.0))
        return tr / 2.0 - disc
    return np.linalg.eigvalsh(g)[..., 0]


# ---------------------------------------------------------------------------
# scalar fields on a chart

@dataclass
class ScalarField:
    """Scalar function of chart coordinates with derivative access.

    ``fn`` maps (..., n) -> (...,).  Analytic gradient/hessian callables are
    used when present; otherwise central finite differences with step
    ``fd_step`` fill in.
    """

    fn: Callable
    grad: Optional[Callable] = None
    hess: Optional[Callable] = None
    fd_step: float = FD_FIELD_STEP

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=float))

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        if self.grad is not None:
            return self.grad(x)
        n = x.shape[-1]
        h = self.fd_step
        out = np.empty(x.shape)
        for k in range(n):
            e = np.zeros(n)
            e[k] = h
            out[..., k] = (self.fn(x + e) - self.fn(x - e)) / (2 * h)
        return out

    def hessian(self, x):
        x = np.asarray(x, dtype=float)
        if self.hess is not None:
            return self.hess(x)
        n = x.shape[-1]
        h = self.fd_step
        out = np.empty(x.shape + (n,))
        f0 = self.fn(x)
        for k in range(n):
            ek = np.zeros(n)
            ek[k] = h
            out[..., k, k] = (self.fn(x + ek) - 2 * f0 + self.fn(x - ek)) / h**2
            for l in range(k + 1, n):
                el = np.zeros(n)
                el[l] = h
                v = (self.fn(x + ek + el) - self.fn(x + ek - el)
                     - self.fn(x - ek + el) + self.fn(x - ek - el)) / (4 * h**2)
                out[..., k, l] = v
                out[..., l, k] = v
        return out


# ---------------------------------------------------------------------------
# charts and manifolds

@dataclass
class Chart:
    """A coordinate patch: metric field plus trust-region bookkeeping.

    margin_fn returns the signed slack to the trust-region boundary in
    chart coordinates (positive inside).  A simulation proposes a chart
    switch when the slack at a step endpoint drops below switch_margin;
    points with nonpositive slack are outside the chart.
    """

    id: str
    dim: int
    metric: Callable
    metric_derivative: Optional[Callable] = None
    margin_fn: Callable = field(default=lambda x: np.full(np.shape(x)[:-1], np.inf))
    switch_margin: float = 0.0
    periodic: Optional[Sequence[float]] = None
    ito_fn: Optional[Callable] = None

    def in_trust_region(self, x, slack=0.0):
        return self.margin_fn(np.asarray(x, dtype=float)) > slack

    def metric_at(self, x, check=True):
        g = self.metric(np.asarray(x, dtype=float))
        if check and np.any(min_eigenvalue(g) <= 0):
            raise DegenerateMetricError(
                "metric not SPD in chart %r" % self.id)
        return g

    def metric_derivative_at(self, x):
        """dg[..., k, i, j] = d_k g_ij, analytic or central differences."""
        x = np.asarray(x, dtype=float)
        if self.metric_derivative is not None:
            return self.metric_derivative(x)
        h = FD_METRIC_STEP
        n = self.dim
        out = np.empty(x.shape[:-1] + (n, n, n))
        for k in range(n):
            e = np.zeros(n)
            e[k] = h
            out[..., k, :, :] = (self.metric(x + e) - self.metric(x - e)) / (2 * h)
        return out

    def wrap(self, x):
        """Reduce periodic coordinates to the fundamental domain."""
        if self.periodic is None:
            return x
        p = np.asarray(self.periodic, dtype=float)
        return np.mod(x, p)


@dataclass
class ItoCoefficients:
    """Drift per unit time and diffusion factor with sigma sigma^T = g^{-1}."""

    drift: np.ndarray
    sigma: np.ndarray


@dataclass
class ManifoldSpec:
    """Atlas, transition maps and reference data for one manifold.

    transition and transition_jacobian take (from_id, to_id, points).
    reference_distance, when present, takes (chart_x, X, chart_y, Y) with
    broadcastable point arrays and returns exact geodesic distances.
    """

    name: str
    dim: int
    charts: Sequence[Chart]
    transition: Callable
    transition_jacobian: Optional[Callable] = None
    reference_distance: Optional[Callable] = None
    injectivity_radius_lb: float = np.inf
    volume: Optional[float] = None
    partition_of_unity: Optional[Sequence[Callable]] = None
    canonical_embedding: Optional[str] = None
    params: dict = field(default_factory=dict)

    def chart(self, chart_id) -> Chart:
        for c in self.charts:
            if c.id == chart_id:
                return c
        raise KeyError("no chart %r on manifold %r" % (chart_id, self.name))

    def chart_index(self, chart_id) -> int:
        for i, c in enumerate(self.charts):
            if c.id == chart_id:
                return i
        raise KeyError("no chart %r on manifold %r" % (chart_id, self.name))

    @property
    def chart_ids(self):
        return [c.id for c in self.charts]


# ---------------------------------------------------------------------------
# operations

def christoffel(chart: Chart, x):
    """Christoffel symbols Gamma^i_{jk} of the chart metric at x.

    Index layout [..., i, j, k]; symmetric in (j, k) by construction.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(chart.in_trust_region(x)):
        raise ChartDomainError("point outside trust region of %r" % chart.id)
    g = chart.metric_at(x)
    dg = chart.metric_derivative_at(x)
    ginv = batch_inv(g)
    # Gamma^i_{jk} = 1/2 g^{il} (d_j g_lk + d_k g_lj - d_l g_jk)
    bracket = (np.swapaxes(dg, -3, -2)         # [..., l, j, k] <- d_j g_lk
               + np.swapaxes(dg, -3, -1)       # d_k g_lj  (l<->k swap of [k,i,j])
               - dg)                           # d_l g_jk
    return 0.5 * np.einsum("...il,...ljk->...ijk", ginv, bracket)


def _laplacian_terms(chart: Chart, x):
    """Return (ginv, b) with b^i = (1/sqrt|g|) d_j (sqrt|g| g^{ij})."""
    g = chart.metric_at(x)
    dg = chart.metric_derivative_at(x)
    ginv = batch_inv(g)
    # d_j(sqrt|g| g^{ij}) / sqrt|g| = 1/2 tr(g^-1 dg_j) g^{ij} + d_j g^{ij}
    tr = np.einsum("...ab,...jab->...j", ginv, dg)
    term1 = 0.5 * np.einsum("...j,...ij->...i", tr, ginv)
    term2 = np.einsum("...ia,...jab,...bj->...i", ginv, dg, ginv)
    return ginv, term1 - term2


def laplace_beltrami(chart: Chart, f: ScalarField, x):
    """Laplace-Beltrami operator of the chart metric applied to f at x."""
    x = np.asarray(x, dtype=float)
    if not np.all(chart.in_trust_region(x)):
        raise ChartDomainError("point outside trust region of %r" % chart.id)
    ginv, b = _laplacian_terms(chart, x)
    hess = f.hessian(x)
    grad = f.gradient(x)
    return (np.einsum("...ij,...ij->...", ginv, hess)
            + np.einsum("...i,...i->...", b, grad))


def ito_coefficients(chart: Chart, x) -> ItoCoefficients:
    """Drift and diffusion factor of intrinsic Brownian motion in this chart.

    The drift is the generator-consistent 1/2 (1/sqrt|g|) d_j(sqrt|g| g^{ij});
    sigma is the lower Cholesky factor of g^{-1} (any factor works in law,
    Cholesky is chosen for determinism).
    """
    x = np.asarray(x, dtype=float)
    if not np.all(chart.in_trust_region(x)):
        raise ChartDomainError("point outside trust region of %r" % chart.id)
    if chart.ito_fn is not None:
        drift, sigma = chart.ito_fn(x)
        return ItoCoefficients(drift, sigma)
    ginv, b = _laplacian_terms(chart, x)
    return ItoCoefficients(0.5 * b, batch_cholesky(ginv))


def transition_point(m: ManifoldSpec, from_id, to_id, x):
    """Coordinates of the same manifold point in the target chart."""
    x = np.asarray(x, dtype=float)
    src = m.chart(from_id)
    if not np.all(src.in_trust_region(src.wrap(x))):
        raise OverlapError("point not in source chart %r" % from_id)
    y = m.transition(from_id, to_id, x)
    dst = m.chart(to_id)
    if not np.all(dst.in_trust_region(dst.wrap(y))):
        raise OverlapError("image not in target chart %r" % to_id)
    return y


def reference_distance(m: ManifoldSpec, x, y, chart_x=None, chart_y=None):
    """Exact geodesic distance for builtin manifolds."""
    if m.reference_distance is None:
        raise UnsupportedDistanceError(
            "manifold %r has no analytic distance" % m.name)
    cid_x = chart_x if chart_x is not None else m.charts[0].id
    cid_y = chart_y if chart_y is not None else m.charts[0].id
    return m.reference_distance(cid_x, np.asarray(x, dtype=float),
                                cid_y, np.asarray(y, dtype=float))


def generator_apply(chart: Chart, f: ScalarField, x):
    """(1/2) Laplace-Beltrami of f, the generator of intrinsic BM."""
    return 0.5 * laplace_beltrami(chart, f, x)
