"""Singular-value sweeps over wavenumber and growth-rate fits.

The sweep machinery answers one question: how do the extreme singular values
of the scaled combined-field matrix (proxies for the operator norm and the
inverse norm on L2 of the boundary) grow as the wavenumber increases?  Each
record also carries the norms of the single layer and the adjoint double
layer from the same mesh, so the classical circle rates (k^{-2/3} and k^{1/6})
and the trapping-driven growth of 1/sigma_min can be fitted side by side.

Conventions:

* the inverse-norm proxy is 1/sigma_min of the scaled matrix; no matrix is
  ever inverted explicitly;
* meshes are rebuilt per wavenumber at fixed points-per-wavelength, keeping
  the relative discretization error comparable across a sweep;
* growth exponents are least-squares slopes in log-log coordinates, and the
  headline fits only use k >= 10 to avoid preasymptotic pollution;
* CSV output is deterministic: %.17g floats, fixed column order, one row per
  wavenumber in increasing order.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import layer_ops as lo
from .geometry import Boundary

__all__ = [
    "SweepRecord", "SweepResult", "operator_extremes", "matrix_norm2",
    "power_iteration_extremes", "quantized_ks", "k_sweep", "fit_growth",
    "summarize_vs_table1", "write_sweep_csv", "read_csv_columns",
]

_CSV_BASE = ("geometry", "label", "k", "eta", "n_nodes", "sigma_max",
             "sigma_min", "cond", "norm_S", "norm_Dp")
_CSV_EXTRA = ("phi_norm", "residual", "lower_bound", "coercivity_probe")

# fitted-slope windows (lo, hi, predicted center); None bound = unbounded
_TABLE1_WINDOWS = {
    "circle": {
        "inv_sigma_min": (-0.15, 0.15, 0.0),
        "cond": (1.0 / 3.0 - 0.1, 1.0 / 3.0 + 0.1, 1.0 / 3.0),
        "norm_S": (-2.0 / 3.0 - 0.15, -2.0 / 3.0 + 0.15, -2.0 / 3.0),
        "norm_Dp": (1.0 / 6.0 - 0.1, 1.0 / 6.0 + 0.1, 1.0 / 6.0),
    },
    "two_squares": {
        "inv_sigma_min": (0.7, 2.0, 1.0),
        "cond": (1.2, None, 1.5),
    },
}


@dataclasses.dataclass(frozen=True)
class SweepRecord:
    k: float
    eta: float
    n_nodes: int
    sigma_max: float
    sigma_min: float
    cond: float
    norm_S: float
    norm_Dp: float
    phi_norm: Optional[float] = None
    residual: Optional[float] = None
    lower_bound: Optional[float] = None
    coercivity_probe: Optional[float] = None

    def __post_init__(self):
        if not math.isclose(self.cond, self.sigma_max / self.sigma_min,
                            rel_tol=1e-12):
            raise ValueError("cond must equal sigma_max / sigma_min")


@dataclasses.dataclass(frozen=True)
class SweepResult:
    geometry: str
    label: str
    eta_c: float
    ppw: float
    corner_depth: int
    records: tuple

    def __post_init__(self):
        ks = [r.k for r in self.records]
        if any(b <= a for a, b in zip(ks, ks[1:])):
            raise ValueError("records must be strictly increasing in k")

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    @property
    def ks(self) -> np.ndarray:
        return self.column("k")


def operator_extremes(op: lo.DiscreteOperator):
    """(sigma_max, sigma_min) of a scaled operator by full dense SVD."""
    if not op.l2_scaled:
        raise ValueError("operator_extremes needs an l2-scaled operator")
    sv = np.linalg.svd(op.matrix, compute_uv=False)
    smax, smin = float(sv[0]), float(sv[-1])
    if smin < 1e3 * np.finfo(float).eps * smax:
        raise RuntimeError(
            f"matrix is numerically singular (sigma_min={smin:.3e}, "
            f"sigma_max={smax:.3e})")
    return smax, smin


def matrix_norm2(matrix: np.ndarray, rtol: float = 1e-10,
                 max_iter: int = 400, block: int = 4) -> float:
    """Largest singular value by block subspace iteration on M^H M.

    Deterministic start (fixed-seed Gaussian block), so repeated sweeps give
    identical CSV bytes.  A block of 4 rides out the +-n symmetry pairs that
    make circle-operator extremes doubly degenerate.  Falls back to a full
    SVD if the iteration has not settled within ``max_iter`` sweeps.
    """
    m = np.asarray(matrix)
    n = m.shape[0]
    if m.shape != (n, n):
        raise ValueError("matrix must be square")
    block = min(block, n)
    rng = np.random.default_rng(1905)
    q = rng.standard_normal((n, block)) + 1j * rng.standard_normal((n, block))
    q, _ = np.linalg.qr(q)
    prev = np.inf
    for _ in range(max_iter):
        y = m @ q
        sigma = float(np.linalg.norm(y, 2))
        q, _ = np.linalg.qr(m.conj().T @ y)
        if abs(sigma - prev) <= rtol * sigma:
            return sigma
        prev = sigma
    return float(np.linalg.svd(m, compute_uv=False)[0])


def power_iteration_extremes(matrix: np.ndarray, iters: int = 200):
    """(sigma_max, sigma_min) by power/inverse iteration on M^H M.

    Independent cross-check of the dense SVD on small matrices; the inverse
    branch solves with an LU factorization of M rather than forming M^-1.
    """
    import scipy.linalg as sla

    m = np.asarray(matrix)
    n = m.shape[0]
    rng = np.random.default_rng(7)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    for _ in range(iters):
        w = m.conj().T @ (m @ v)
        v = w / np.linalg.norm(w)
    smax = float(np.linalg.norm(m @ v))
    lu = sla.lu_factor(m)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    for _ in range(iters):
        w = sla.lu_solve(lu, sla.lu_solve(lu, v, trans=2))
        v = w / np.linalg.norm(w)
    smin = 1.0 / float(np.linalg.norm(sla.lu_solve(lu, v, trans=2)))
    return smax, smin


def quantized_ks(a: float, m_range: Iterable[int]) -> np.ndarray:
    """Wavenumbers m*pi/a resonant with a wall gap of width a."""
    if a <= 0:
        raise ValueError("gap must be positive")
    ms = np.array(sorted(set(int(m) for m in m_range)), dtype=float)
    if ms.size and ms[0] < 1:
        raise ValueError("mode indices must be >= 1")
    return ms * math.pi / a


def k_sweep(b: Boundary, ks: Sequence[float], eta_c: float = 1.0,
            ppw: float = 30.0, corner_depth: int = 8, *,
            label: str = "", node_cap: int = 12000, n_workers: int = 1,
            quasimode: bool = False, coercivity: bool = False,
            csv_path=None,
            on_operator: Optional[Callable] = None) -> SweepResult:
    """Assemble, scale, and SVD the combined operator at each wavenumber.

    ``quasimode``/``coercivity`` additionally evaluate the oscillating
    two-wall density against the same scaled matrix (requires the boundary to
    record facing walls).  ``on_operator(k, mesh, op)`` is called with the
    scaled operator before it is discarded, so follow-up solves can reuse the
    assembly.  With ``csv_path`` set, rows are flushed as they finish; an
    assembly failure mid-sweep leaves the completed rows on disk.
    """
    if quasimode or coercivity:
        from . import quasimode as qm
    ks = sorted(float(k) for k in ks)
    records = []
    writer = _IncrementalCsv(csv_path, b.label, label) if csv_path else None
    try:
        for k in ks:
            eta = eta_c * k
            mesh = lo.build_mesh(b, k, ppw=ppw, corner_depth=corner_depth,
                                 node_cap=node_cap)
            sop = lo.assemble("S", k, mesh, n_workers)
            dop = lo.assemble("Dp", k, mesh, n_workers)
            norm_s = matrix_norm2(lo.l2_scale(sop).matrix)
            norm_dp = matrix_norm2(lo.l2_scale(dop).matrix)
            op = lo.assemble_combined("Ap", k, eta, mesh, n_workers,
                                      parts=(dop, sop))
            del dop, sop
            smax, smin = operator_extremes(op)
            extras = {}
            if quasimode or coercivity:
                phi = qm.build_quasimode(mesh, b, k)
                extras["phi_norm"] = phi.norm
                if quasimode:
                    res, lb = qm.quasimode_residual(b, k, eta, op=op, phi=phi)
                    extras["residual"] = res
                    extras["lower_bound"] = lb
                if coercivity:
                    extras["coercivity_probe"] = qm.coercivity_probe(
                        b, k, eta, op=op, phi=phi)
            if on_operator is not None:
                on_operator(k, mesh, op)
            rec = SweepRecord(k=k, eta=eta, n_nodes=mesh.n_nodes,
                              sigma_max=smax, sigma_min=smin,
                              cond=smax / smin, norm_S=norm_s,
                              norm_Dp=norm_dp, **extras)
            records.append(rec)
            if writer:
                writer.write(rec)
    finally:
        if writer:
            writer.close()
    return SweepResult(geometry=b.label, label=label, eta_c=eta_c, ppw=ppw,
                       corner_depth=corner_depth, records=tuple(records))


def fit_growth(ks, values):
    """Least-squares line through (log k, log value).

    Returns (slope, intercept, half_width) where half_width is twice the
    standard error of the slope — a rough 95% band under iid log residuals.
    """
    ks = np.asarray(ks, dtype=float)
    vals = np.asarray(values, dtype=float)
    if ks.shape != vals.shape or ks.ndim != 1:
        raise ValueError("ks and values must be 1-d arrays of equal length")
    if ks.size < 4:
        raise ValueError("need at least 4 points for a growth fit")
    if np.any(ks <= 0) or np.any(vals <= 0):
        raise ValueError("growth fits need positive ks and values")
    x = np.log(ks)
    y = np.log(vals)
    n = x.size
    xbar = x.mean()
    sxx = float(np.sum((x - xbar) ** 2))
    slope = float(np.sum((x - xbar) * y) / sxx)
    intercept = float(y.mean() - slope * xbar)
    resid = y - (intercept + slope * x)
    if n > 2:
        se = math.sqrt(float(np.sum(resid ** 2)) / (n - 2) / sxx)
    else:
        se = 0.0
    return slope, intercept, 2.0 * se


def _fit_columns(result: SweepResult):
    sel = result.ks >= 10.0
    if sel.sum() < 4:
        sel = np.ones(result.ks.size, dtype=bool)
    ks = result.ks[sel]
    cols = {
        "sigma_max": result.column("sigma_max")[sel],
        "inv_sigma_min": 1.0 / result.column("sigma_min")[sel],
        "cond": result.column("cond")[sel],
        "norm_S": result.column("norm_S")[sel],
        "norm_Dp": result.column("norm_Dp")[sel],
    }
    for name in ("residual", "coercivity_probe"):
        vals = [getattr(r, name) for r in result.records]
        if all(v is not None for v in vals) and result.records:
            cols[name] = np.array(vals, dtype=float)[sel]
    return ks, cols


def summarize_vs_table1(results: Iterable[SweepResult]) -> dict:
    """Fitted slopes per sweep, next to the predicted exponent windows.

    Geometries without a recorded prediction are reported with null windows
    (no PASS/FAIL verdict — an observation, not a test).
    """
    entries = []
    for result in results:
        ks, cols = _fit_columns(result)
        windows = _TABLE1_WINDOWS.get(result.geometry, {})
        slopes = {}
        for name, vals in cols.items():
            if ks.size >= 4 and np.all(vals > 0):
                slope, intercept, half = fit_growth(ks, vals)
            else:
                continue
            window = windows.get(name)
            entry = {
                "slope": slope,
                "intercept": intercept,
                "half_width": half,
                "window": None if window is None else [window[0], window[1]],
                "predicted": None if window is None else window[2],
                "pass": None,
            }
            if window is not None:
                lo_ok = window[0] is None or slope >= window[0]
                hi_ok = window[1] is None or slope <= window[1]
                entry["pass"] = bool(lo_ok and hi_ok)
            slopes[name] = entry
        entries.append({
            "geometry": result.geometry,
            "label": result.label,
            "eta_c": result.eta_c,
            "ppw": result.ppw,
            "corner_depth": result.corner_depth,
            "k_range": [float(result.ks.min()), float(result.ks.max())]
            if result.records else None,
            "n_records": len(result.records),
            "slopes": slopes,
        })
    return {"entries": entries}


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


class _IncrementalCsv:
    def __init__(self, path, geometry: str, label: str):
        self._geometry = geometry
        self._label = label
        self._fh = open(path, "w", newline="")
        self._writer = csv.writer(self._fh)
        self._writer.writerow(_CSV_BASE + _CSV_EXTRA)

    def write(self, rec: SweepRecord):
        row = [self._geometry, self._label]
        row += [_fmt(getattr(rec, f)) for f in _CSV_BASE[2:]]
        row += [_fmt(getattr(rec, f)) for f in _CSV_EXTRA]
        self._writer.writerow(row)
        self._fh.flush()

    def close(self):
        self._fh.close()


def write_sweep_csv(result: SweepResult, path) -> None:
    """One deterministic row per wavenumber; optional columns left empty."""
    out = _IncrementalCsv(path, result.geometry, result.label)
    try:
        for rec in result.records:
            out.write(rec)
    finally:
        out.close()


def read_csv_columns(path) -> dict:
    """Columns of a sweep CSV: floats where possible, strings otherwise."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"empty CSV {path}")
    header, data = rows[0], rows[1:]
    cols = {}
    for j, name in enumerate(header):
        raw = [row[j] for row in data]
        try:
            cols[name] = np.array(
                [float(v) if v else math.nan for v in raw], dtype=float)
        except ValueError:
            cols[name] = raw
    return cols
