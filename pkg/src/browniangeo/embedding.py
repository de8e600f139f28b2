"""Embedding maps u: M -> R^q, pullback metrics, tangent projectors and
curvature data.

Conventions: points are (..., n) arrays, Jacobians (..., q, n), second
derivatives (..., q, n, n).  The second fundamental form is stored as
(..., n, n, q) and the mean curvature is its trace with respect to the
pullback metric, so H equals the surface Laplacian of the ambient
coordinate functions.
"""

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ImmersionError, ImmersionWarning
from .geometry import (Chart, ScalarField, batch_inv, laplace_beltrami,
                       min_eigenvalue)

FD_EMBED_STEP = 1e-4
DEFAULT_IMMERSION_ETA = 1e-6
CONDITION_LIMIT = 1e8


@dataclass
class EmbeddingMap:
    """Map from chart coordinates to R^q with derivative access.

    eval/jacobian/hessian take (chart_id, points).  Missing derivatives are
    filled by Richardson-refined central differences (second derivatives
    lose half their digits at a single step, and curvature needs them).

    closest_point, when available, maps ambient points to
    (chart_index, chart_coords, projected_point) and is what retraction and
    extrinsic coefficient evaluation use.
    """

    ambient_dim: int
    dim: int
    charts: Sequence[str]
    eval: Callable
    jacobian: Optional[Callable] = None
    hessian: Optional[Callable] = None
    regularity_tag: str = "smooth"
    alpha: Optional[float] = None
    closest_point: Optional[Callable] = None
    fd_step: float = FD_EMBED_STEP
    name: str = ""
    params: dict = field(default_factory=dict)

    def __call__(self, chart_id, x):
        return self.eval(chart_id, np.asarray(x, dtype=float))

    def jacobian_at(self, chart_id, x):
        x = np.asarray(x, dtype=float)
        if self.jacobian is not None:
            return self.jacobian(chart_id, x)
        return _richardson_jacobian(lambda p: self.eval(chart_id, p), x,
                                    self.fd_step)

    def hessian_at(self, chart_id, x):
        x = np.asarray(x, dtype=float)
        if self.hessian is not None:
            return self.hessian(chart_id, x)
        if self.jacobian is not None:
            # differentiate the analytic Jacobian once instead of u twice
            return _richardson_jacobian(
                lambda p: self.jacobian(chart_id, p), x, self.fd_step)
        return _fd_hessian(lambda p: self.eval(chart_id, p), x, self.fd_step)


def _richardson_jacobian(fn, x, h):
    """Central differences with one Richardson refinement level."""
    coarse = _fd_jacobian(fn, x, 2.0 * h)
    fine = _fd_jacobian(fn, x, h)
    return (4.0 * fine - coarse) / 3.0


def _fd_jacobian(fn, x, h):
    n = x.shape[-1]
    cols = []
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        cols.append((fn(x + e) - fn(x - e)) / (2.0 * h))
    return np.stack(cols, axis=-1)


def _fd_hessian(fn, x, h):
    n = x.shape[-1]
    f0 = fn(x)
    out = np.empty(f0.shape + (n, n))
    for k in range(n):
        ek = np.zeros(n)
        ek[k] = h
        out[..., k, k] = (fn(x + ek) - 2.0 * f0 + fn(x - ek)) / h**2
        for l in range(k + 1, n):
            el = np.zeros(n)
            el[l] = h
            v = (fn(x + ek + el) - fn(x + ek - el)
                 - fn(x - ek + el) + fn(x - ek - el)) / (4.0 * h**2)
            out[..., k, l] = v
            out[..., l, k] = v
    return out


@dataclass
class ShapeData:
    """Tangent projector, mean curvature vector and second fundamental form."""

    tangent_projector: np.ndarray   # (..., q, q)
    mean_curvature: np.ndarray      # (..., q)
    second_fundamental: np.ndarray  # (..., n, n, q)


# ---------------------------------------------------------------------------
# operations

def pullback_metric(u: EmbeddingMap, chart_id, x, eta=DEFAULT_IMMERSION_ETA):
    """Pullback of the Euclidean metric, (u#e)_ij = sum_a d_i u^a d_j u^a."""
    J = u.jacobian_at(chart_id, x)
    G = np.einsum("...ai,...aj->...ij", J, J)
    if np.any(min_eigenvalue(G) < eta**2):
        warnings.warn("differential nearly rank deficient; pullback metric "
                      "degenerate", ImmersionWarning, stacklevel=2)
    return G


def immersion_margin(u: EmbeddingMap, chart_id, x):
    """Smallest singular value of the differential at x."""
    J = u.jacobian_at(chart_id, x)
    G = np.einsum("...ai,...aj->...ij", J, J)
    return np.sqrt(np.maximum(min_eigenvalue(G), 0.0))


def isometry_residual(u: EmbeddingMap, m, sample):
    """Max Frobenius norm of u#e - g over a sample of chart-tagged points.

    sample is an iterable of (chart_id, points) with points shaped (..., n).
    """
    worst = 0.0
    for chart_id, pts in sample:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        G = pullback_metric(u, chart_id, pts)
        g = m.chart(chart_id).metric_at(pts)
        res = np.linalg.norm(G - g, axis=(-2, -1))
        worst = max(worst, float(np.max(res)))
    return worst


def _projector(J):
    G = np.einsum("...ai,...aj->...ij", J, J)
    lo = min_eigenvalue(G)
    hi = np.einsum("...ii->...", G)  # trace bounds the top eigenvalue
    if np.any(lo <= 0) or np.any(hi / np.maximum(lo, 1e-300) > CONDITION_LIMIT):
        raise ImmersionError("pullback metric too ill conditioned for a "
                             "tangent projector")
    Ginv = batch_inv(G)
    P = np.einsum("...ai,...ij,...bj->...ab", J, Ginv, J)
    return P, G, Ginv


def tangent_curvature(u: EmbeddingMap, chart_id, x):
    """Projector, mean curvature and pullback data in one pass (no checks).

    Internal building block for the extrinsic integrators; shape_data is the
    checked public variant.
    """
    x = np.asarray(x, dtype=float)
    J = u.jacobian_at(chart_id, x)
    P, G, Ginv = _projector(J)
    Hess = u.hessian_at(chart_id, x)
    nor = Hess - np.einsum("...ab,...bij->...aij", P, Hess)
    II = np.moveaxis(nor, -3, -1)  # (..., n, n, q)
    H = np.einsum("...ij,...ija->...a", Ginv, II)
    return P, H, II, G, Ginv


def shape_data(u: EmbeddingMap, chart_id, x, cross_check=True,
               check_tol=1e-6):
    """Second fundamental form data at x with a dual-route curvature check.

    The trace route H = G^{ij} II_ij is compared against the surface
    Laplacian of each ambient coordinate function computed through the
    pullback chart; disagreement beyond check_tol (relative) raises.
    """
    x = np.asarray(x, dtype=float)
    P, H, II, G, Ginv = tangent_curvature(u, chart_id, x)
    if cross_check:
        H2 = _mean_curvature_via_laplacian(u, chart_id, x)
        scale = np.maximum(np.linalg.norm(H, axis=-1), 1.0)
        err = np.linalg.norm(H - H2, axis=-1) / scale
        if np.any(err > check_tol):
            raise ImmersionError(
                "mean curvature routes disagree (max rel err %.3g)"
                % float(np.max(err)))
    return ShapeData(tangent_projector=P, mean_curvature=H,
                     second_fundamental=II)


def pullback_chart(u: EmbeddingMap, chart_id, base_chart: Chart = None) -> Chart:
    """Chart carrying the pullback metric u#e with analytic derivatives."""
    def metric(x):
        J = u.jacobian_at(chart_id, x)
        return np.einsum("...ai,...aj->...ij", J, J)

    def dmetric(x):
        J = u.jacobian_at(chart_id, x)
        Hs = u.hessian_at(chart_id, x)
        # d_k G_ij = sum_a (d2u^a_ki du^a_j + du^a_i d2u^a_kj)
        t = np.einsum("...aki,...aj->...kij", Hs, J)
        return t + np.swapaxes(t, -2, -1)

    if base_chart is None:
        return Chart(id=chart_id, dim=u.dim, metric=metric,
                     metric_derivative=dmetric)
    return Chart(id=base_chart.id, dim=base_chart.dim, metric=metric,
                 metric_derivative=dmetric, margin_fn=base_chart.margin_fn,
                 switch_margin=base_chart.switch_margin,
                 periodic=base_chart.periodic)


def _mean_curvature_via_laplacian(u: EmbeddingMap, chart_id, x):
    """H^a = Laplace(u#e) applied to the a-th ambient coordinate of u."""
    x = np.asarray(x, dtype=float)
    J = u.jacobian_at(chart_id, x)
    Hs = u.hessian_at(chart_id, x)
    G = np.einsum("...ai,...aj->...ij", J, J)
    Ginv = batch_inv(G)
    t = np.einsum("...aki,...aj->...kij", Hs, J)
    dG = t + np.swapaxes(t, -2, -1)
    tr = np.einsum("...ab,...jab->...j", Ginv, dG)
    term1 = 0.5 * np.einsum("...j,...ij->...i", tr, Ginv)
    term2 = np.einsum("...ia,...jab,...bj->...i", Ginv, dG, Ginv)
    b = term1 - term2
    return (np.einsum("...ij,...aij->...a", Ginv, Hs)
            + np.einsum("...i,...ai->...a", b, J))


@dataclass
class AmbientField:
    """Scalar function on R^q with derivative access, for composition with
    embeddings."""

    fn: Callable
    grad: Optional[Callable] = None
    hess: Optional[Callable] = None
    fd_step: float = 1e-5

    def __call__(self, z):
        return self.fn(np.asarray(z, dtype=float))

    def gradient(self, z):
        z = np.asarray(z, dtype=float)
        if self.grad is not None:
            return self.grad(z)
        q = z.shape[-1]
        out = np.empty(z.shape)
        for k in range(q):
            e = np.zeros(q)
            e[k] = self.fd_step
            out[..., k] = (self.fn(z + e) - self.fn(z - e)) / (2 * self.fd_step)
        return out

    def hessian_at(self, z):
        z = np.asarray(z, dtype=float)
        if self.hess is not None:
            return self.hess(z)
        return _fd_hessian(self.fn, z, self.fd_step)

    def compose(self, u: EmbeddingMap, chart_id) -> ScalarField:
        """Chart-level field F(u(x)) with chain-rule derivatives."""
        def fn(x):
            return self.fn(u.eval(chart_id, x))

        def grad(x):
            J = u.jacobian_at(chart_id, x)
            gF = self.gradient(u.eval(chart_id, x))
            return np.einsum("...a,...ai->...i", gF, J)

        def hess(x):
            z = u.eval(chart_id, x)
            J = u.jacobian_at(chart_id, x)
            Hs = u.hessian_at(chart_id, x)
            gF = self.gradient(z)
            HF = self.hessian_at(z)
            t1 = np.einsum("...ai,...ab,...bj->...ij", J, HF, J)
            t2 = np.einsum("...a,...aij->...ij", gF, Hs)
            return t1 + t2

        return ScalarField(fn=fn, grad=grad, hess=hess)


def pullback_check_laplacian(u: EmbeddingMap, f: AmbientField, chart_id, x):
    """Intrinsic vs extrinsic surface Laplacian of an ambient function.

    Returns (Laplace_{u#e}(f o u)(x), tangential Laplacian of f at u(x)).
    The two agree for any immersion; for an isometric u both equal the
    manifold Laplacian of f o u.
    """
    x = np.asarray(x, dtype=float)
    pb = pullback_chart(u, chart_id)
    intrinsic = laplace_beltrami(pb, f.compose(u, chart_id), x)
    P, H, II, G, Ginv = tangent_curvature(u, chart_id, x)
    z = u.eval(chart_id, x)
    gF = f.gradient(z)
    HF = f.hessian_at(z)
    # trace of the Hessian over the tangent space plus the curvature term
    tangential = (np.einsum("...ab,...ba->...", HF, P)
                  + np.einsum("...a,...a->...", H, gF))
    return intrinsic, tangential
