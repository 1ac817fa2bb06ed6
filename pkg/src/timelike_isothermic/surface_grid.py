"""Rectangular (u,v) grids of ambient-vector maps with finite-difference jets.

A field is sampled on a native parameter grid.  Derivatives are always
second-order central differences on the native axes (one-sided second-order
at aperiodic boundaries, wrapped stencils on periodic axes).  When the
surface's asymptotic coordinates are a constant linear transform of the
native parameters, the field carries that 2x2 transform and jets are
converted by the chain rule, so periodic charts (tori) never need to be
resampled onto a skew rectangle.  For fields already sampled in asymptotic
coordinates the transform is the identity and nothing changes.

Reports based on these jets should exclude a boundary margin on aperiodic
axes: one-sided stencils and sweep starts pollute max-norms there.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .pseudo_linalg import SignedMetric, NotLorentzianError, inner, null_slopes


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    u0: float
    v0: float
    hu: float
    hv: float
    nu: int
    nv: int
    periodic_u: bool = False
    periodic_v: bool = False
    period_u: float | None = None
    period_v: float | None = None

    def __post_init__(self):
        if self.hu <= 0 or self.hv <= 0 or self.nu < 1 or self.nv < 1:
            raise GridError("grid steps must be positive and counts >= 1")
        if self.periodic_u:
            if self.period_u is None:
                raise GridError("periodic_u requires period_u")
            if abs(self.nu * self.hu - self.period_u) > 1e-12 * abs(self.period_u):
                raise GridError("nu*hu must equal period_u on a periodic axis")
        if self.periodic_v:
            if self.period_v is None:
                raise GridError("periodic_v requires period_v")
            if abs(self.nv * self.hv - self.period_v) > 1e-12 * abs(self.period_v):
                raise GridError("nv*hv must equal period_v on a periodic axis")

    def axis_u(self) -> np.ndarray:
        return self.u0 + self.hu * np.arange(self.nu)

    def axis_v(self) -> np.ndarray:
        return self.v0 + self.hv * np.arange(self.nv)

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.axis_u(), self.axis_v(), indexing="ij")

    def interior(self, margin_u: float = 0.0, margin_v: float = 0.0) -> tuple[slice, slice]:
        """Index slices excluding a physical margin on aperiodic axes."""
        mu = 0 if self.periodic_u else int(np.ceil(margin_u / self.hu - 1e-12))
        mv = 0 if self.periodic_v else int(np.ceil(margin_v / self.hv - 1e-12))
        if 2 * mu >= self.nu or 2 * mv >= self.nv:
            raise GridError("margin swallows the whole grid")
        su = slice(mu, self.nu - mu) if mu else slice(None)
        sv = slice(mv, self.nv - mv) if mv else slice(None)
        return su, sv


@dataclass(frozen=True)
class VectorField:
    """Grid sample of an ambient-vector-valued map.

    ``to_asym`` maps native parameters to asymptotic coordinates,
    (u,v) = to_asym @ (p,q); it is the identity when the field is already
    sampled in asymptotic coordinates.  ``chart`` is the analytic
    parametrization callback in native parameters, kept for resampling and
    midpoint evaluation when available.
    """

    spec: GridSpec
    values: np.ndarray
    metric: SignedMetric
    chart: Callable | None = None
    to_asym: np.ndarray = field(default_factory=lambda: np.eye(2))

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape[:2] != (self.spec.nu, self.spec.nv):
            raise GridError(f"values shape {v.shape} != grid {(self.spec.nu, self.spec.nv)}")
        if v.shape[-1] != self.metric.dim:
            raise GridError("sample dimension does not match the metric")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "to_asym", np.asarray(self.to_asym, dtype=float))

    @property
    def dim(self) -> int:
        return self.metric.dim


def sample(f: Callable, spec: GridSpec, g: SignedMetric,
           to_asym: np.ndarray | None = None) -> VectorField:
    """Evaluate a parametrization callback on the grid."""
    U, V = spec.meshgrid()
    try:
        vals = np.asarray(f(U, V), dtype=float)
    except Exception as exc:  # pointwise fallback to locate the failure
        for i in range(spec.nu):
            for j in range(spec.nv):
                try:
                    f(U[i, j], V[i, j])
                except Exception:
                    raise GridError(
                        f"parametrization failed at grid index ({i},{j}), "
                        f"(u,v)=({U[i, j]:.6g},{V[i, j]:.6g}): {exc}") from exc
        raise
    if vals.shape[:2] != (spec.nu, spec.nv):
        raise GridError("parametrization must return one vector per grid node")
    kw = {} if to_asym is None else {"to_asym": to_asym}
    return VectorField(spec=spec, values=vals, metric=g, chart=f, **kw)


def _diff1(arr: np.ndarray, h: float, axis: int, periodic: bool) -> np.ndarray:
    if periodic:
        return (np.roll(arr, -1, axis=axis) - np.roll(arr, 1, axis=axis)) / (2 * h)
    return np.gradient(arr, h, axis=axis, edge_order=2)


def _diff2(arr: np.ndarray, h: float, axis: int, periodic: bool) -> np.ndarray:
    if periodic:
        return (np.roll(arr, -1, axis=axis) - 2 * arr + np.roll(arr, 1, axis=axis)) / h**2
    # one-sided second derivative at edges, central inside
    out = np.empty_like(arr)
    sl = [slice(None)] * arr.ndim

    def at(i):
        s = list(sl)
        s[axis] = i
        return tuple(s)

    out[at(slice(1, -1))] = (arr[at(slice(2, None))] - 2 * arr[at(slice(1, -1))]
                             + arr[at(slice(None, -2))]) / h**2
    out[at(0)] = (2 * arr[at(0)] - 5 * arr[at(1)] + 4 * arr[at(2)] - arr[at(3)]) / h**2
    out[at(-1)] = (2 * arr[at(-1)] - 5 * arr[at(-2)] + 4 * arr[at(-3)] - arr[at(-4)]) / h**2
    return out


@dataclass(frozen=True)
class NativeJets:
    """Raw central-difference derivatives along the native grid axes."""

    d_p: np.ndarray
    d_q: np.ndarray
    d_pp: np.ndarray
    d_qq: np.ndarray
    d_pq: np.ndarray
    mixed_disc: float


def native_jets(values: np.ndarray, spec: GridSpec) -> NativeJets:
    if spec.nu < 5 or spec.nv < 5:
        raise GridError("jets need at least a 5x5 grid")
    d_p = _diff1(values, spec.hu, 0, spec.periodic_u)
    d_q = _diff1(values, spec.hv, 1, spec.periodic_v)
    d_pp = _diff2(values, spec.hu, 0, spec.periodic_u)
    d_qq = _diff2(values, spec.hv, 1, spec.periodic_v)
    d_pq = _diff1(d_p, spec.hv, 1, spec.periodic_v)
    d_qp = _diff1(d_q, spec.hu, 0, spec.periodic_u)
    disc = float(np.abs(d_pq - d_qp).max())
    return NativeJets(d_p=d_p, d_q=d_q, d_pp=d_pp, d_qq=d_qq,
                      d_pq=0.5 * (d_pq + d_qp), mixed_disc=disc)


@dataclass(frozen=True)
class JetField:
    """First and second derivatives with respect to asymptotic coordinates."""

    base: VectorField
    d_u: np.ndarray
    d_v: np.ndarray
    d_uu: np.ndarray
    d_vv: np.ndarray
    d_uv: np.ndarray
    mixed_disc: float


def chain_to_asym(nj: NativeJets, to_asym: np.ndarray):
    """Convert native-axis jets to asymptotic-coordinate jets.

    With (u,v) = T (p,q) the derivative operators pull back through S = T^-1:
    d_u = S00 d_p + S10 d_q and d_v = S01 d_p + S11 d_q.
    """
    S = np.linalg.inv(to_asym)
    a, b = S[0, 0], S[1, 0]
    c, d = S[0, 1], S[1, 1]
    d_u = a * nj.d_p + b * nj.d_q
    d_v = c * nj.d_p + d * nj.d_q
    d_uu = a * a * nj.d_pp + 2 * a * b * nj.d_pq + b * b * nj.d_qq
    d_vv = c * c * nj.d_pp + 2 * c * d * nj.d_pq + d * d * nj.d_qq
    d_uv = a * c * nj.d_pp + (a * d + b * c) * nj.d_pq + b * d * nj.d_qq
    return d_u, d_v, d_uu, d_vv, d_uv


def jets(f: VectorField) -> JetField:
    nj = native_jets(f.values, f.spec)
    d_u, d_v, d_uu, d_vv, d_uv = chain_to_asym(nj, f.to_asym)
    return JetField(base=f, d_u=d_u, d_v=d_v, d_uu=d_uu, d_vv=d_vv,
                    d_uv=d_uv, mixed_disc=nj.mixed_disc)


def scalar_gradients(values: np.ndarray, spec: GridSpec,
                     to_asym: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(d_u, d_v) of a scalar grid in asymptotic coordinates."""
    d_p = _diff1(values, spec.hu, 0, spec.periodic_u)
    d_q = _diff1(values, spec.hv, 1, spec.periodic_v)
    S = np.linalg.inv(to_asym)
    return S[0, 0] * d_p + S[1, 0] * d_q, S[0, 1] * d_p + S[1, 1] * d_q


@dataclass(frozen=True)
class ReparamResult:
    field: VectorField
    transform: np.ndarray  # native = transform @ (u, v)
    method: str            # "chart" (exact re-evaluation) or "bilinear" (lower order)
    at_infinity: bool = False


def _metric_coefficients(f: VectorField) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    nj = native_jets(f.values, f.spec)
    E = inner(nj.d_p, nj.d_p, f.metric)
    F = inner(nj.d_p, nj.d_q, f.metric)
    G = inner(nj.d_q, nj.d_q, f.metric)
    return E, F, G


def linear_null_reparam(f: VectorField, homogeneity_tol: float = 1e-6,
                        nu: int | None = None, nv: int | None = None,
                        extent: float | None = None) -> ReparamResult:
    """Resample onto coordinates aligned with the two null directions.

    Only the homogeneous case (constant induced-metric coefficients) is
    supported; a varying metric needs asymptotic coordinates from a PDE
    solve, which is out of scope, so it is rejected.
    """
    E, F, G = _metric_coefficients(f)
    scale = max(float(np.abs(E).max()), float(np.abs(F).max()),
                float(np.abs(G).max()), 1e-300)
    spread = max(float(E.max() - E.min()), float(F.max() - F.min()),
                 float(G.max() - G.min()))
    if spread > homogeneity_tol * scale:
        raise GridError(
            "nonhomogeneous metric; supply asymptotic coordinates directly "
            f"(coefficient spread {spread:.3e} vs scale {scale:.3e})")
    E0, F0, G0 = float(np.mean(E)), float(np.mean(F)), float(np.mean(G))
    slopes = null_slopes(E0, F0, G0)
    d_plus = np.array([0.0, 1.0]) if not np.isfinite(slopes.mu_plus) \
        else np.array([1.0, slopes.mu_plus])
    d_minus = np.array([0.0, 1.0]) if slopes.at_infinity \
        else np.array([1.0, slopes.mu_minus])
    d_plus = d_plus / np.linalg.norm(d_plus)
    d_minus = d_minus / np.linalg.norm(d_minus)
    # <X_u, X_v> for directions a, b is  E a0 b0 + F (a0 b1 + a1 b0) + G a1 b1
    cross = (E0 * d_plus[0] * d_minus[0]
             + F0 * (d_plus[0] * d_minus[1] + d_plus[1] * d_minus[0])
             + G0 * d_plus[1] * d_minus[1])
    if cross < 0:
        d_minus = -d_minus
    M = np.column_stack([d_plus, d_minus])  # native = M @ (u,v)

    spec = f.spec
    nu = nu or spec.nu
    nv = nv or spec.nv
    if extent is None:
        ext_u = (spec.nu - 1) * spec.hu
        ext_v = (spec.nv - 1) * spec.hv
        extent = 0.35 * min(ext_u, ext_v) / max(1.0, float(np.abs(M).max()))
    cu = spec.u0 + 0.5 * (spec.nu - 1) * spec.hu
    cv = spec.v0 + 0.5 * (spec.nv - 1) * spec.hv
    new_spec = GridSpec(u0=-extent / 2, v0=-extent / 2,
                        hu=extent / (nu - 1), hv=extent / (nv - 1), nu=nu, nv=nv)

    if f.chart is not None:
        def new_chart(u, v, _chart=f.chart, _M=M, _c=(cu, cv)):
            p = _c[0] + _M[0, 0] * u + _M[0, 1] * v
            q = _c[1] + _M[1, 0] * u + _M[1, 1] * v
            return _chart(p, q)

        out = sample(new_chart, new_spec, f.metric)
        return ReparamResult(field=out, transform=M, method="chart",
                             at_infinity=slopes.at_infinity)

    # bilinear fallback, lower order; flagged in the result
    U, V = new_spec.meshgrid()
    P = cu + M[0, 0] * U + M[0, 1] * V
    Q = cv + M[1, 0] * U + M[1, 1] * V
    fi = (P - spec.u0) / spec.hu
    fj = (Q - spec.v0) / spec.hv
    if fi.min() < 0 or fj.min() < 0 or fi.max() > spec.nu - 1 or fj.max() > spec.nv - 1:
        raise GridError("resample window leaves the sampled rectangle; shrink extent")
    i0 = np.clip(np.floor(fi).astype(int), 0, spec.nu - 2)
    j0 = np.clip(np.floor(fj).astype(int), 0, spec.nv - 2)
    ti = (fi - i0)[..., None]
    tj = (fj - j0)[..., None]
    vals = ((1 - ti) * (1 - tj) * f.values[i0, j0]
            + ti * (1 - tj) * f.values[i0 + 1, j0]
            + (1 - ti) * tj * f.values[i0, j0 + 1]
            + ti * tj * f.values[i0 + 1, j0 + 1])
    out = VectorField(spec=new_spec, values=vals, metric=f.metric)
    return ReparamResult(field=out, transform=M, method="bilinear",
                         at_infinity=slopes.at_infinity)


def convergence_order(res_h: float, res_h2: float) -> float:
    """Empirical order log2(res_h / res_h2) when the fine grid halves h.

    Returns +inf when either residual is zero or negative (already at the
    measurement floor).
    """
    if res_h <= 0 or res_h2 <= 0:
        return float("inf")
    return float(np.log2(res_h / res_h2))
