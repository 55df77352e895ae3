"""Panel Nystrom discretization of the Helmholtz boundary-layer operators.

Builds dense matrices for the single layer S_k, the double layer D_k, its
adjoint D'_k, and the combined-field operators A'_{k,eta} = 1/2 I + D'_k -
i eta S_k (with A_{k,eta} the adjoint variant) on a piecewise-smooth
boundary, for exterior sound-soft scattering studies.

Method.  Each arc is covered by composite Gauss-Legendre panels of order 16,
dyadically graded into corners.  Entries between well-separated panels use
the plain product rule.  On the target's own panel the kernel is split as
K = log|x-y| * F1 + F2 with F1 and F2 analytic; mapping each side of the
target node to (0, 1) turns log|x-y| into log(v) plus a smooth function, so
one generalized Gaussian rule for the weight log(1/v) together with one
plain Gauss rule integrates the row to near machine accuracy.  Panels
sharing an endpoint with the target's panel are integrated by a 4x
oversampled plain rule, whose endpoint node clustering resolves the near
singularity.  The hypersingular operator is deliberately not assembled; the
sound-soft right-hand side never needs it.

The weight-multiplied matrix acts on node values and its eigenvalues
approximate operator eigenvalues; the symmetric sqrt-weight rescaling
(``l2_scale`` / ``assemble_combined``) is a similarity transform whose
singular values approximate L2(Gamma) operator singular values.

Bessel evaluations in assembly use :mod:`helmtrap.special`; the analytic
circle oracle below deliberately goes through :mod:`scipy.special` instead,
so the two routes share no code.
"""

from __future__ import annotations

import dataclasses
import functools
import math
import struct
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import scipy.special as _sp
from scipy.linalg import eigh_tridiagonal

from . import special
from .geometry import Boundary

__all__ = [
    "PANEL_ORDER",
    "Mesh",
    "DiscreteOperator",
    "log_gauss_rule",
    "build_mesh",
    "assemble",
    "assemble_combined",
    "l2_scale",
    "smooth_remainder_diagonal",
    "circle_mode_symbol",
    "circle_eigenvalues",
    "dump_operator",
    "load_operator",
]

#: Gauss-Legendre nodes per panel.
PANEL_ORDER = 16

#: Mesh builder keeps k * (panel length) at or below this.
_PANEL_KL_TARGET = 3.5

#: Assembly refuses panels longer than this many radians of phase.
_PANEL_KL_LIMIT = 4.0

_NODE_CAP_DEFAULT = 12000

_TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# quadrature rules


@functools.lru_cache(maxsize=None)
def _gauss01(n: int):
    """Gauss-Legendre rule mapped to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@functools.lru_cache(maxsize=None)
def log_gauss_rule(n: int):
    """Generalized Gaussian rule for the weight log(1/u) on (0, 1).

    Returns (nodes, weights) with sum(w_m f(u_m)) ~ int_0^1 log(1/u) f(u) du,
    exact for polynomials f of degree <= 2n - 1.

    Built by the modified Chebyshev algorithm from monic shifted-Legendre
    modified moments, which keeps the map from moments to recurrence
    coefficients well conditioned for this weight; the three-term
    coefficients then go through the usual symmetric tridiagonal eigenvalue
    problem.  Intermediate arithmetic runs in extended precision so the
    float64 result is clean.
    """
    if not 1 <= n <= 48:
        raise ValueError("log rule order must lie in [1, 48]")
    m = 2 * n
    ld = np.longdouble
    # monic shifted Legendre: p_{j+1} = (x - 1/2) p_j - b_j p_{j-1}
    a = np.full(m, 0.5, dtype=ld)
    ls = np.arange(m, dtype=ld)
    with np.errstate(divide="ignore", invalid="ignore"):
        b = ls * ls / (4.0 * (4.0 * ls * ls - 1.0))
    b[0] = 0.0
    # modified moments nu_j = int_0^1 log(1/x) p_j(x) dx:
    #   nu_0 = 1,  nu_j = (-1)^j t_j / (j (j+1)),  t_j = (j!)^2 / (2j)!
    nu = np.empty(m, dtype=ld)
    nu[0] = 1.0
    t = ld(1.0)
    for j in range(1, m):
        t = t * j / ld(2 * (2 * j - 1))
        nu[j] = (-1) ** j * t / (ld(j) * ld(j + 1))
    alpha = np.empty(n, dtype=ld)
    beta = np.empty(n, dtype=ld)
    sigma = np.zeros((n, m), dtype=ld)
    sigma[0] = nu
    alpha[0] = a[0] + nu[1] / nu[0]
    beta[0] = nu[0]
    for j in range(1, n):
        older = sigma[j - 2] if j >= 2 else np.zeros(m, dtype=ld)
        for l in range(j, m - j):
            sigma[j, l] = (
                sigma[j - 1, l + 1]
                - (alpha[j - 1] - a[l]) * sigma[j - 1, l]
                - beta[j - 1] * older[l]
                + b[l] * sigma[j - 1, l - 1]
            )
        alpha[j] = a[j] + sigma[j, j + 1] / sigma[j, j] - sigma[j - 1, j] / sigma[j - 1, j - 1]
        beta[j] = sigma[j, j] / sigma[j - 1, j - 1]
    nodes, vecs = eigh_tridiagonal(
        alpha.astype(np.float64), np.sqrt(beta[1:].astype(np.float64))
    )
    weights = float(beta[0]) * vecs[0, :] ** 2
    return nodes, weights


def _barycentric_matrix(nodes: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Interpolation matrix from values at `nodes` to values at `pts`."""
    lam = np.empty_like(nodes)
    for q in range(nodes.size):
        lam[q] = 1.0 / np.prod(nodes[q] - np.delete(nodes, q))
    diff = pts[:, None] - nodes[None, :]
    hit = np.abs(diff) < 1e-14
    diff[hit] = 1.0
    w = lam[None, :] / diff
    w[hit.any(axis=1)] = 0.0
    w[hit] = 1.0
    return w / w.sum(axis=1, keepdims=True)


@functools.lru_cache(maxsize=None)
def _self_rule():
    """Precomputed split-at-target data for one order-16 panel.

    For target node u_i the two sides [0, u_i] and [u_i, 1] are mapped to
    v in (0, 1); the row integral becomes

        L * ( -Q_log[F1 J phi] + GL[(K - F1 log v) J phi] )

    per side, so only the full kernel K and its log coefficient F1 are ever
    evaluated (never at the target itself).  Eval abscissae in panel
    coordinates, the coefficients multiplying F1 and K, and the barycentric
    matrices mapping the 16 node values to the eval points depend only on
    the reference panel, hence are cached once.
    """
    x16, w16 = _gauss01(PANEL_ORDER)
    xl, wl = log_gauss_rule(PANEL_ORDER)
    n_eval = 4 * PANEL_ORDER
    u = np.empty((PANEL_ORDER, n_eval))
    cf = np.zeros((PANEL_ORDER, n_eval))
    ck = np.zeros((PANEL_ORDER, n_eval))
    bmat = np.empty((PANEL_ORDER, n_eval, PANEL_ORDER))
    log_x16 = np.log(x16)
    for i, ui in enumerate(x16):
        for s, (sign, ell) in enumerate(((-1.0, ui), (1.0, 1.0 - ui))):
            lo = 2 * PANEL_ORDER * s
            u[i, lo:lo + 16] = ui + sign * ell * xl
            u[i, lo + 16:lo + 32] = ui + sign * ell * x16
            cf[i, lo:lo + 16] = -ell * wl
            cf[i, lo + 16:lo + 32] = -ell * w16 * log_x16
            ck[i, lo + 16:lo + 32] = ell * w16
            bmat[i, lo:lo + 32] = _barycentric_matrix(x16, u[i, lo:lo + 32])
    return u, cf, ck, bmat


@functools.lru_cache(maxsize=None)
def _neighbor_rule(side: str):
    """4x oversampled plain rule on the reference panel, plus interpolation.

    Composite Gauss-Legendre panels graded geometrically (ratio 4) toward
    the endpoint shared with the target's panel, which is where the kernel
    is nearly singular: the innermost cell is then comparable to the closest
    approach distance of a 16-node neighbor, and every cell sees the
    singularity well outside its Bernstein ellipse.  ``side`` says which
    endpoint is shared ('lo', 'hi', or 'both' for a two-panel loop).
    """
    cuts = {
        "lo": (0.0, 1.0 / 64.0, 1.0 / 16.0, 0.25, 1.0),
        "hi": (0.0, 0.75, 15.0 / 16.0, 63.0 / 64.0, 1.0),
        "both": (0.0, 1.0 / 64.0, 1.0 / 16.0, 0.25, 0.75, 15.0 / 16.0, 63.0 / 64.0, 1.0),
    }[side]
    x16, w16 = _gauss01(PANEL_ORDER)
    xs, ws = [], []
    for a, bnd in zip(cuts[:-1], cuts[1:]):
        xs.append(a + (bnd - a) * x16)
        ws.append((bnd - a) * w16)
    x = np.concatenate(xs)
    w = np.concatenate(ws)
    return x, w, _barycentric_matrix(x16, x)


# ---------------------------------------------------------------------------
# mesh


@dataclasses.dataclass
class Mesh:
    """Composite Gauss-Legendre panel mesh on a boundary.

    Nodes are grouped 16 per panel in traversal order; ``weights`` are
    arclength quadrature weights (their sum is the boundary length), and
    ``speeds`` is d(arclength)/d(local coordinate) at each node.
    ``prev_panel``/``next_panel`` give the cyclic panel adjacency within
    each loop; panels on different loops are never adjacent.
    """

    boundary: Boundary
    k: float
    ppw: float
    corner_depth: int
    panel_arc: np.ndarray
    panel_t0: np.ndarray
    panel_t1: np.ndarray
    panel_len: np.ndarray
    prev_panel: np.ndarray
    next_panel: np.ndarray
    points: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    speeds: np.ndarray

    @property
    def n_panels(self) -> int:
        return int(self.panel_arc.size)

    @property
    def n_nodes(self) -> int:
        return int(self.points.shape[0])


def _param_arclength(arc, t0: float, t1: float) -> float:
    x, w = _gauss01(PANEL_ORDER)
    t = t0 + (t1 - t0) * x
    return float((t1 - t0) * np.sum(w * np.linalg.norm(arc.velocity(t), axis=-1)))


def _graded_offsets(arc, h: float, arc_len: float, depth: int, at_start: bool):
    """Dyadic break offsets (ratio 0.5) inside the end interval of width h."""
    target = arc_len * 2.0 ** (-depth)
    m = 1
    while m < depth + 16:
        if at_start:
            seg = _param_arclength(arc, 0.0, h * 2.0 ** (-m))
        else:
            seg = _param_arclength(arc, 1.0 - h * 2.0 ** (-m), 1.0)
        if seg <= target:
            break
        m += 1
    return [h * 2.0 ** (-j) for j in range(m, 0, -1)]


def build_mesh(b: Boundary, k: float, ppw: float = 30.0, corner_depth: int = 8,
               node_cap: int = _NODE_CAP_DEFAULT) -> Mesh:
    """Panel the boundary for wavenumber k.

    ``ppw`` is the number of quadrature nodes per wavelength on smooth
    arcs (at least 10); panels are additionally capped at 3.5 radians of
    phase so the singular quadrature stays in its comfort zone.  Arc ends
    meeting at a corner are refined dyadically (ratio 0.5) until the
    innermost panel is shorter than (arc length) * 2^-corner_depth.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    if ppw < 10:
        raise ValueError("need at least 10 points per wavelength")
    corner_start = b.corner_at_start
    if any(corner_start) and corner_depth < 6:
        raise ValueError("corner_depth must be at least 6 on boundaries with corners")

    panel_arc, panel_t0, panel_t1 = [], [], []
    prev_panel, next_panel = [], []
    for loop in b.loops:
        first_in_loop = len(panel_arc)
        for pos, ai in enumerate(loop):
            arc = b.arcs[ai]
            arc_len = arc.length()
            n_base = max(
                math.ceil(ppw * k * arc_len / (_TWO_PI * PANEL_ORDER)),
                math.ceil(k * arc_len / _PANEL_KL_TARGET),
                1,
            )
            if len(loop) == 1:
                # a closed loop made of a single arc: keep enough panels that
                # the wrap-around near singularity falls in a neighbor panel
                n_base = max(n_base, 3)
            corner_lo = corner_start[ai]
            corner_hi = corner_start[loop[(pos + 1) % len(loop)]]
            if corner_lo and corner_hi and n_base == 1:
                n_base = 2
            breaks = list(np.linspace(0.0, 1.0, n_base + 1))
            h = breaks[1] - breaks[0]
            if corner_hi:
                tail = [1.0 - off for off in _graded_offsets(arc, h, arc_len, corner_depth, False)]
                breaks = breaks[:-1] + tail[::-1] + [1.0]
            if corner_lo:
                head = _graded_offsets(arc, h, arc_len, corner_depth, True)
                breaks = [0.0] + head + breaks[1:]
            for t0, t1 in zip(breaks[:-1], breaks[1:]):
                panel_arc.append(ai)
                panel_t0.append(t0)
                panel_t1.append(t1)
        idx = list(range(first_in_loop, len(panel_arc)))
        for j, p in enumerate(idx):
            prev_panel.append(idx[j - 1])
            next_panel.append(idx[(j + 1) % len(idx)])

    n_panels = len(panel_arc)
    if n_panels * PANEL_ORDER > node_cap:
        raise ValueError(
            f"mesh needs {n_panels * PANEL_ORDER} nodes, above the cap {node_cap}"
        )

    x16, w16 = _gauss01(PANEL_ORDER)
    points = np.empty((n_panels * PANEL_ORDER, 2))
    normals = np.empty_like(points)
    weights = np.empty(n_panels * PANEL_ORDER)
    speeds = np.empty_like(weights)
    panel_len = np.empty(n_panels)
    for p in range(n_panels):
        arc = b.arcs[panel_arc[p]]
        t0, t1 = panel_t0[p], panel_t1[p]
        t = t0 + (t1 - t0) * x16
        sl = slice(p * PANEL_ORDER, (p + 1) * PANEL_ORDER)
        points[sl] = arc.point(t)
        normals[sl] = arc.normal(t)
        speeds[sl] = np.linalg.norm(arc.velocity(t), axis=-1) * (t1 - t0)
        weights[sl] = w16 * speeds[sl]
        panel_len[p] = weights[sl].sum()

    return Mesh(
        boundary=b, k=float(k), ppw=float(ppw), corner_depth=int(corner_depth),
        panel_arc=np.asarray(panel_arc, dtype=np.int64),
        panel_t0=np.asarray(panel_t0), panel_t1=np.asarray(panel_t1),
        panel_len=panel_len,
        prev_panel=np.asarray(prev_panel, dtype=np.int64),
        next_panel=np.asarray(next_panel, dtype=np.int64),
        points=points, normals=normals, weights=weights, speeds=speeds,
    )


# ---------------------------------------------------------------------------
# kernels


def smooth_remainder_diagonal(kind: str, k: float, curvature: float = 0.0) -> complex:
    """Coincidence limit of the smooth part F2 in the split K = log r * F1 + F2.

    For the single layer this is i/4 - (log(k/2) + gamma)/(2 pi); for the
    double layer and its adjoint the whole kernel is bounded on a smooth arc
    and the limit is -curvature/(4 pi) (zero on straight lines).  The
    split-at-target quadrature never evaluates at the coincidence point, so
    this is exposed for checking, not used in assembly.
    """
    if kind == "S":
        if k <= 0:
            raise ValueError("k must be positive")
        return 0.25j - (math.log(0.5 * k) + special.EULER_GAMMA) / _TWO_PI
    if kind in ("D", "Dp"):
        return complex(-curvature / (4.0 * math.pi))
    raise ValueError(f"unknown kernel kind {kind!r}")


def _kernel_split(kind, k, x, nt, y, ns, diag_mask=None):
    """Full kernel K and log coefficient F1 of K = log|x-y| F1 + F2.

    Shapes broadcast; `nt` is the normal at the target x (adjoint double
    layer), `ns` the normal at the source y (double layer).  Entries flagged
    in diag_mask (coincident points) are returned as zero.
    """
    d = x - y
    r = np.hypot(d[..., 0], d[..., 1])
    if diag_mask is not None:
        r = np.where(diag_mask, 1.0, r)
    bj0, by0, bj1, by1 = special.jy01(k * r)
    shape = r.shape
    bj0, by0 = bj0.reshape(shape), by0.reshape(shape)
    bj1, by1 = bj1.reshape(shape), by1.reshape(shape)
    if kind == "S":
        kmat = 0.25j * (bj0 + 1j * by0)
        f1 = (-0.5 / math.pi) * bj0
    else:
        if kind == "Dp":
            q = (nt[..., 0] * d[..., 0] + nt[..., 1] * d[..., 1]) / r
        else:
            q = -(ns[..., 0] * d[..., 0] + ns[..., 1] * d[..., 1]) / r
        kmat = (-0.25j * k) * (bj1 + 1j * by1) * q
        f1 = (0.5 * k / math.pi) * bj1 * q
    if diag_mask is not None:
        kmat = np.where(diag_mask, 0.0, kmat)
        f1 = np.where(diag_mask, 0.0, f1)
    return kmat, f1


def _panel_nodes(mesh: Mesh, p: int, u: np.ndarray):
    """Points, normals and d(arclength)/du on panel p at local coordinates u."""
    arc = mesh.boundary.arcs[mesh.panel_arc[p]]
    t0, t1 = mesh.panel_t0[p], mesh.panel_t1[p]
    t = t0 + (t1 - t0) * u
    v = arc.velocity(t)
    speed = np.linalg.norm(v, axis=-1) * (t1 - t0)
    nrm = np.stack([v[..., 1], -v[..., 0]], axis=-1) / np.linalg.norm(
        v, axis=-1, keepdims=True)
    return arc.point(t), nrm, speed


def _self_block(kind, k, mesh, p):
    u, cf, ck, bmat = _self_rule()
    y, ns, jac = _panel_nodes(mesh, p, u.ravel())
    y = y.reshape(PANEL_ORDER, -1, 2)
    ns = ns.reshape(PANEL_ORDER, -1, 2)
    jac = jac.reshape(PANEL_ORDER, -1)
    sl = slice(p * PANEL_ORDER, (p + 1) * PANEL_ORDER)
    xt = mesh.points[sl][:, None, :]
    nt = mesh.normals[sl][:, None, :]
    kmat, f1 = _kernel_split(kind, k, xt, nt, y, ns)
    return np.einsum("ie,ien->in", (cf * f1 + ck * kmat) * jac, bmat)


def _neighbor_block(kind, k, mesh, p, q, side):
    """Rows of panel p's nodes over source panel q (shared endpoint)."""
    x64, w64, b64 = _neighbor_rule(side)
    y, ns, jac = _panel_nodes(mesh, q, x64)
    sl = slice(p * PANEL_ORDER, (p + 1) * PANEL_ORDER)
    xt = mesh.points[sl][:, None, :]
    nt = mesh.normals[sl][:, None, :]
    kmat, _ = _kernel_split(kind, k, xt, nt, y[None, :, :], ns[None, :, :])
    return np.einsum("ie,e,en->in", kmat, w64 * jac, b64)


# ---------------------------------------------------------------------------
# assembly


@dataclasses.dataclass
class DiscreteOperator:
    """Dense Nystrom matrix, the mesh it came from, and how it is scaled.

    Unscaled matrices act on node values (entry K_ij w_j; eigenvalues
    approximate operator eigenvalues).  l2-scaled matrices carry entries
    sqrt(w_i) K_ij sqrt(w_j); the rescaling is a similarity, so the spectrum
    is unchanged while singular values approximate L2(Gamma) singular
    values.
    """

    matrix: np.ndarray
    mesh: Mesh
    kind: str
    l2_scaled: bool = False
    k: float = 0.0
    eta: float = 0.0


_CHUNK_ROWS = 512


def _plain_fill(out, kind, k, mesh, lo, hi):
    pts, nrm, w = mesh.points, mesh.normals, mesh.weights
    n = pts.shape[0]
    mask = np.arange(lo, hi)[:, None] == np.arange(n)[None, :]
    kmat, _ = _kernel_split(
        kind, k,
        pts[lo:hi, None, :], nrm[lo:hi, None, :],
        pts[None, :, :], nrm[None, :, :],
        diag_mask=mask,
    )
    out[lo:hi] = kmat * w[None, :]


def assemble(kind: str, k: float, mesh: Mesh, n_workers: int = 1) -> DiscreteOperator:
    """Nystrom matrix of S_k, D_k or D'_k on the mesh (unscaled).

    Plain product quadrature everywhere except the target's own panel
    (split-at-target log rule) and the two panels sharing an endpoint with
    it (oversampled plain rule); those blocks are overwritten after the
    bulk fill.  Row blocks are computed concurrently when ``n_workers`` > 1;
    every entry is written exactly once, so the result does not depend on
    the worker count.
    """
    if kind not in ("S", "D", "Dp"):
        raise ValueError(f"kind must be 'S', 'D' or 'Dp', got {kind!r}")
    if k <= 0:
        raise ValueError("k must be positive")
    if k * float(mesh.panel_len.max()) > _PANEL_KL_LIMIT:
        raise RuntimeError(
            "singular-quadrature breakdown: longest panel spans "
            f"{k * float(mesh.panel_len.max()):.2f} radians of phase "
            f"(limit {_PANEL_KL_LIMIT}); rebuild the mesh for this k"
        )
    n = mesh.n_nodes
    out = np.empty((n, n), dtype=np.complex128)
    edges = list(range(0, n, _CHUNK_ROWS)) + [n]
    spans = list(zip(edges[:-1], edges[1:]))
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            list(pool.map(lambda s: _plain_fill(out, kind, k, mesh, *s), spans))
    else:
        for lo, hi in spans:
            _plain_fill(out, kind, k, mesh, lo, hi)
    for p in range(mesh.n_panels):
        rows = slice(p * PANEL_ORDER, (p + 1) * PANEL_ORDER)
        out[rows, rows] = _self_block(kind, k, mesh, p)
        nxt, prv = int(mesh.next_panel[p]), int(mesh.prev_panel[p])
        sides = {}
        if nxt != p:
            sides[nxt] = "lo"
        if prv != p:
            sides[prv] = "both" if prv == nxt else "hi"
        for q, side in sides.items():
            out[rows, q * PANEL_ORDER:(q + 1) * PANEL_ORDER] = _neighbor_block(
                kind, k, mesh, p, q, side)
    return DiscreteOperator(out, mesh, kind, False, float(k), 0.0)


def assemble_combined(variant: str, k: float, eta, mesh: Mesh,
                      n_workers: int = 1, parts=None) -> DiscreteOperator:
    """Combined-field matrix 1/2 I + D'_k - i eta S_k (or the D_k variant).

    ``eta`` must be a nonzero real coupling; eta = 0 loses invertibility at
    interior resonances.  The result carries the sqrt-weight similarity
    scaling, so its singular values approximate L2(Gamma) operator singular
    values while its spectrum equals that of the unscaled matrix.

    ``parts`` optionally supplies the already-assembled unscaled pair
    ``(D' or D operator, S operator)`` on the same mesh, so callers that need
    the individual layer matrices anyway (norm sweeps) pay for assembly once.
    """
    if variant not in ("Ap", "A"):
        raise ValueError(f"variant must be 'Ap' or 'A', got {variant!r}")
    if isinstance(eta, complex) or not math.isfinite(float(eta)) or float(eta) == 0.0:
        raise ValueError("eta must be a nonzero finite real number")
    eta = float(eta)
    base_kind = "Dp" if variant == "Ap" else "D"
    if parts is None:
        dop = assemble(base_kind, k, mesh, n_workers)
        sop = assemble("S", k, mesh, n_workers)
        m = dop.matrix
    else:
        dop, sop = parts
        if dop.kind != base_kind or sop.kind != "S":
            raise ValueError(f"parts must be ({base_kind!r}, 'S') operators, "
                             f"got ({dop.kind!r}, {sop.kind!r})")
        if dop.l2_scaled or sop.l2_scaled:
            raise ValueError("parts must be unscaled operators")
        if dop.k != k or sop.k != k or dop.mesh is not mesh or sop.mesh is not mesh:
            raise ValueError("parts were assembled at a different k or mesh")
        m = dop.matrix.copy()
    m -= 1j * eta * sop.matrix
    idx = np.arange(mesh.n_nodes)
    m[idx, idx] += 0.5
    s = np.sqrt(mesh.weights)
    m *= s[:, None]
    m /= s[None, :]
    return DiscreteOperator(m, mesh, variant, True, float(k), eta)


def l2_scale(op: DiscreteOperator) -> DiscreteOperator:
    """Symmetric sqrt-weight rescaling W^1/2 M W^-1/2 of an unscaled matrix."""
    if op.l2_scaled:
        return op
    s = np.sqrt(op.mesh.weights)
    m = op.matrix * (s[:, None] / s[None, :])
    return DiscreteOperator(m, op.mesh, op.kind, True, op.k, op.eta)


# ---------------------------------------------------------------------------
# analytic circle oracle (scipy route, independent of the assembly kernels)


_TAIL_LIMIT = {"S": 0.0, "D": 0.0, "Dp": 0.0, "A": 0.5, "Ap": 0.5}


def circle_mode_symbol(kind: str, k: float, radius: float, n, eta=None):
    """Eigenvalue of a layer operator on the circle for Fourier mode(s) n.

    On the circle of radius R every operator here diagonalizes in the
    Fourier basis; with x = kR and H = H^(1):

        S:  (i pi R / 2) J_n(x) H_n(x)
        D': -1/2 + (i pi k R / 2) J_n'(x) H_n(x)      (D has the same values)
        A': (i pi R / 2) H_n(x) (k J_n'(x) - i eta J_n(x))

    Modes +-n coincide, so n is taken by absolute value.  For orders far
    above x the Bessel factor underflows and the Neumann factor overflows
    float64; those entries are replaced by the exact large-n limit (0 for S
    and D', 1/2 for the combined operator), which the true values approach
    monotonically from one side like 1/n.  No recurrence is run, so there is
    no instability to guard: the limit substitution covers every order the
    direct evaluation cannot reach.
    """
    if k <= 0 or radius <= 0:
        raise ValueError("k and radius must be positive")
    if kind in ("A", "Ap") and eta is None:
        raise ValueError("combined-operator symbol needs eta")
    order = np.abs(np.asarray(n, dtype=np.float64))
    x = k * radius
    with np.errstate(over="ignore", invalid="ignore"):
        jn = _sp.jv(order, x)
        underflow = (jn == 0.0) & (order > x)
        hn = jn + 1j * _sp.yv(order, x)
        if kind == "S":
            lam = (0.5j * math.pi * radius) * jn * hn
        elif kind in ("D", "Dp"):
            lam = -0.5 + (0.5j * math.pi * k * radius) * _sp.jvp(order, x) * hn
        elif kind in ("A", "Ap"):
            lam = (0.5j * math.pi * radius) * hn * (
                k * _sp.jvp(order, x) - 1j * float(eta) * jn)
        else:
            raise ValueError(f"unknown kind {kind!r}")
    lam = np.asarray(lam, dtype=np.complex128)
    lam = np.where(np.isfinite(lam) & ~underflow, lam, _TAIL_LIMIT[kind])
    return lam if lam.ndim else complex(lam)


def circle_eigenvalues(k: float, eta: float, radius: float, n_max: int) -> np.ndarray:
    """Spectrum (with multiplicity) of A'_{k,eta} on the circle of radius R.

    Returns the eigenvalues for modes n = -n_max..n_max in that order;
    +-n pairs coincide by rotational symmetry.
    """
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    ns = np.arange(-n_max, n_max + 1)
    return circle_mode_symbol("Ap", k, radius, ns, eta)


# ---------------------------------------------------------------------------
# binary dump


_HEADER = struct.Struct("<qdd4s")


def dump_operator(op: DiscreteOperator, path) -> None:
    """Write the matrix with a small header (dimension, k, eta, kind tag).

    Row-major complex entries as little-endian float64 pairs; meant for
    offline inspection, not as an exchange format for meshes.
    """
    m = np.ascontiguousarray(op.matrix, dtype=np.complex128)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(m.shape[0], op.k, op.eta, op.kind.encode().ljust(4)))
        fh.write(m.tobytes())


def load_operator(path):
    """Read back a dump: (matrix, k, eta, kind)."""
    with open(path, "rb") as fh:
        n, k, eta, kind = _HEADER.unpack(fh.read(_HEADER.size))
        data = np.frombuffer(fh.read(), dtype=np.complex128)
    if data.size != n * n:
        raise ValueError(f"matrix payload has {data.size} entries, expected {n * n}")
    return data.reshape(n, n).copy(), k, eta, kind.decode().strip()
