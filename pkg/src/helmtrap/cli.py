"""Config-driven experiment runs: sweeps, identity suites, plot manifests.

One TOML file fully determines a run; rerunning it overwrites the same
artifact files with identical CSV bytes, so every figure is reproducible
from the config alone.  Each run leaves three kinds of artifact in the
output directory: the CSV rows themselves, a ``*_summary.json`` with the
fitted slopes and verdicts, and a ``*_log.txt`` with mesh sizes and
per-wavenumber runtimes.

The numerical modules are imported inside the handlers, not at module
scope, so that ``--threads`` can cap the BLAS pool through the environment
before numpy first loads; once numpy is up the thread count is fixed for
the process lifetime.

Exit codes: 0 success, 2 config error, 3 numerical failure.
"""

import argparse
import dataclasses
import json
import math
import os
import sys
import time
from pathlib import Path

from .config import (ConfigError, ExperimentConfig, load_config,
                     resolve_ks, serialize_config)

__all__ = ["main", "run", "run_identity_suite", "emit_plot_inputs"]

_THREAD_VARS = ("OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "OMP_NUM_THREADS", "NUMEXPR_NUM_THREADS")

# reference exponents drawn on the log-log figures, per (geometry, column);
# the quasimode columns decay like 1/k on any admissible geometry
_REFERENCE_SLOPES = {
    ("circle", "inv_sigma_min"): [(0.0, "bounded inverse")],
    ("circle", "cond"): [(1.0 / 3.0, "growth k^(1/3)")],
    ("circle", "norm_S"): [(-2.0 / 3.0, "decay k^(-2/3)")],
    ("circle", "norm_Dp"): [(1.0 / 6.0, "growth k^(1/6)")],
    ("circle", "neumann_norm"): [(1.0, "growth k")],
    ("two_squares", "inv_sigma_min"): [(1.0, "band floor: growth k"),
                                       (2.0, "band ceiling: growth k^2")],
    ("two_squares", "cond"): [(1.5, "growth k^(3/2)")],
    ("two_squares", "neumann_norm"): [(2.0, "growth k^2")],
}


def _references(geometry: str, column: str):
    if column in ("residual", "coercivity_probe"):
        return [(-1.0, "decay 1/k")]
    return _REFERENCE_SLOPES.get((geometry, column), [])


# ---------------------------------------------------------------------------
# shared plumbing


def _ensure_outdir(out) -> Path:
    path = Path(out)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {path}: {exc}")
    if not os.access(path, os.W_OK):
        raise ConfigError(f"output directory {path} is not writable")
    return path


def _boundary(cfg: ExperimentConfig):
    from . import geometry as geo
    try:
        return geo.make_geometry(cfg.geometry_kind,
                                 **dict(cfg.geometry_params))
    except TypeError as exc:
        raise ConfigError(f"geometry parameters: {exc}")


def _slug(cfg: ExperimentConfig, b=None) -> str:
    if cfg.label:
        return cfg.label
    return cfg.kind if b is None else f"{cfg.kind}_{b.label}"


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _fit_filtered(ks, vals):
    """Least-squares log-log slope on the k >= 10 tail (all points if few).

    The same filter the sweep summaries use; the manifest recomputes fits
    from CSV through this one code path so both report identical floats.
    """
    import numpy as np
    from . import spectra as sp

    ks = np.asarray(ks, dtype=float)
    vals = np.asarray(vals, dtype=float)
    sel = ks >= 10.0
    if sel.sum() < 4:
        sel = np.ones(ks.size, dtype=bool)
    if sel.sum() < 4 or not np.all(vals[sel] > 0):
        return None
    slope, intercept, half = sp.fit_growth(ks[sel], vals[sel])
    return {"slope": slope, "intercept": intercept, "half_width": half}


# ---------------------------------------------------------------------------
# geometry-check / constants / identities


def _run_geometry_check(cfg: ExperimentConfig) -> int:
    from . import geometry as geo
    b = _boundary(cfg)
    outdir = _ensure_outdir(cfg.out)
    length = geo.boundary_length(b)
    circum = geo.r_gamma(b)
    cls = geo.classify_strongly_r0r1(b, samples=min(cfg.boundary_samples,
                                                    65536))
    gap = geo.detect_parallel_trapping(b)
    tc = geo.trapping_class(b)

    print(f"geometry {b.label}: {len(b.arcs)} arcs, length {length:.8g}, "
          f"circumscribed radius {circum:.8g}")
    if cls is None:
        print("strongly (R0, R1) star-shaped: no feasible pair")
    else:
        r1_text = "unbounded" if math.isinf(cls[1]) else f"{cls[1]:.8g}"
        print(f"strongly (R0, R1) star-shaped: R0 = {cls[0]:.8g}, "
              f"R1 = {r1_text}")
    if gap is not None:
        f = b.facing
        print(f"parallel facing walls: a = {gap:.8g} "
              f"(x1 = {f.a1:.8g} and x1 = {f.a2:.8g}, "
              f"overlap height {f.overlap_hi - f.overlap_lo:.8g})")
    print(f"trapping class: {tc.label}")

    doc = {
        "geometry": b.label,
        "n_arcs": len(b.arcs),
        "length": length,
        "circumradius": circum,
        "strongly_r0r1": None if cls is None else [cls[0],
                                                   None if math.isinf(cls[1])
                                                   else cls[1]],
        "parallel_gap": gap,
        "trapping_class": tc.label,
        "config": serialize_config(cfg),
    }
    _write_json(outdir / f"{_slug(cfg, b)}.json", doc)
    return 0


_CONSTANT_FIELDS = ("r0", "r1", "eps", "c_chi", "q", "m_alpha_max",
                    "r_star", "chi_r_star", "alpha_sup", "k_threshold")


def _run_constants(cfg: ExperimentConfig) -> int:
    from . import morawetz as mw
    outdir = _ensure_outdir(cfg.out)
    eps = cfg.epsilon_scale * mw.epsilon0(cfg.r0, cfg.r1)
    prof = mw.build_cutoff(cfg.r0, cfg.r1, eps)
    q = mw.q_param(prof.c_chi)
    mc = mw.threshold_constants(prof, q)
    table = {name: getattr(mc, name) for name in _CONSTANT_FIELDS}
    for name in _CONSTANT_FIELDS:
        print(f"{name:>12} = {table[name]:.12g}")
    doc = {"constants": table, "config": serialize_config(cfg)}
    _write_json(outdir / f"{_slug(cfg)}.json", doc)
    return 0


def run_identity_suite(seed: int = 0, n_identity: int = 20,
                       n_friedrichs: int = 100, n_flux: int = 20,
                       r0: float = 1.0, r1: float = 1.4,
                       epsilon_scale: float = 0.5) -> dict:
    """Randomized checks of the multiplier identities and sign inequalities.

    Four independent blocks: the divergence identity for the cutoff
    multiplier (step-halving order of the finite-difference residual), the
    same for the radial multiplier, nonpositivity of the radiating-flux
    combination, and the annulus Friedrichs inequality.  Cases whose
    residual sits at roundoff are skipped from the order statistic (the
    identity is exact there); each block reports counts, the worst value,
    and a pass flag.
    """
    import numpy as np
    from . import morawetz as mw

    prof = mw.build_cutoff(r0, r1, epsilon_scale * mw.epsilon0(r0, r1))
    q = mw.q_param(prof.c_chi)
    rng = np.random.default_rng(seed)
    inner_lo = r0 + 0.06 * (r1 - r0)
    inner_hi = r1 - 0.04 * (r1 - r0)

    def random_field(kind):
        if kind == 0:
            return mw.plane_wave_field(rng.uniform(0.5, 6.0),
                                       rng.normal(size=2))
        if kind == 1:
            c = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
            return mw.polynomial_field(rng.uniform(0.5, 4.0), c)
        return mw.point_source_field(rng.uniform(1.0, 5.0),
                                     rng.uniform(-0.3, 0.3, size=2))

    def eval_point(radius):
        th = rng.uniform(0.0, 2.0 * math.pi)
        return radius * np.array([math.cos(th), math.sin(th)])

    def order_block(residual_pair):
        checked, min_order, skipped = 0, math.inf, 0
        for case in range(n_identity):
            r_coarse, r_fine = residual_pair(case)
            if max(r_coarse, r_fine) < 5e-11:
                skipped += 1
                continue
            min_order = min(min_order, math.log2(r_coarse / r_fine))
            checked += 1
        ok = checked >= n_identity - max(n_identity // 4, 1)
        return {"n_cases": n_identity, "checked": checked,
                "skipped_exact": skipped,
                "min_order": None if checked == 0 else min_order,
                "pass": bool(ok and min_order >= 1.9)}

    def multiplier_pair(case):
        kind = case % 3
        v = random_field(kind)
        z = mw.cutoff_z(prof) if (kind == 0 or case % 2 == 0) \
            else mw.identity_z()
        a = (mw.cutoff_alpha(prof, q) if case % 4 < 2
             else mw.constant_alpha(rng.uniform(0.2, 2.0)))
        beta = rng.uniform(0.0, 3.0)
        radius = (rng.uniform(inner_lo, inner_hi)
                  if (kind == 0 or case % 5) else 1.2 * r1)
        x = eval_point(radius)
        return (mw.morawetz_residual(v, z, beta, a, x, 2e-3),
                mw.morawetz_residual(v, z, beta, a, x, 1e-3))

    def radial_pair(_case):
        v = mw.point_source_field(rng.uniform(1.0, 7.0),
                                  rng.uniform(-0.3, 0.3, size=2))
        x = eval_point(rng.uniform(1.0, 2.5) * r0)
        alpha = rng.uniform(0.3, 1.5)
        return (mw.morawetz_ludwig_residual(v, alpha, x, 2e-3),
                mw.morawetz_ludwig_residual(v, alpha, x, 1e-3))

    multiplier = order_block(multiplier_pair)
    radial = order_block(radial_pair)

    worst_flux = -math.inf
    for _ in range(n_flux):
        src = rng.uniform(-1.3, 1.3, size=(5, 2))
        amp = rng.normal(size=5) + 1j * rng.normal(size=5)
        k = rng.uniform(0.8, 8.0)
        radius = rng.uniform(3.8, 4.4)
        _, lhs = mw.radiating_flux_check(k, src, amp, radius)
        worst_flux = max(worst_flux, lhs)
    flux = {"n_cases": n_flux, "max_lhs": worst_flux,
            "pass": bool(worst_flux <= 1e-8)}

    big = math.sqrt(13.0) * r0 * 1.05
    xs = np.linspace(-big, big, 257)
    ys = xs.copy()
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    worst_excess = -math.inf
    for _ in range(n_friedrichs):
        center = rng.uniform(-2.5, 2.5, size=2)
        width = rng.uniform(0.15, 0.6)
        amp = rng.normal() + 1j * rng.normal()
        values = amp * np.exp(-((gx - center[0]) ** 2 +
                                (gy - center[1]) ** 2) / (2.0 * width ** 2))
        lhs, rhs = mw.friedrichs_check(values, xs, ys, r0)
        worst_excess = max(worst_excess, lhs - 1.02 * rhs)
    friedrichs = {"n_cases": n_friedrichs, "max_excess": worst_excess,
                  "pass": bool(worst_excess <= 1e-12)}

    blocks = {"multiplier_identity": multiplier,
              "radial_identity": radial,
              "radiating_flux": flux,
              "friedrichs": friedrichs}
    return {
        **blocks,
        "profile": {"r0": r0, "r1": r1, "eps": prof.eps,
                    "c_chi": prof.c_chi, "q": q},
        "seed": seed,
        "pass": bool(all(blk["pass"] for blk in blocks.values())),
    }


def _run_identities(cfg: ExperimentConfig) -> int:
    outdir = _ensure_outdir(cfg.out)
    doc = run_identity_suite(seed=cfg.seed, n_identity=cfg.n_identity,
                             n_friedrichs=cfg.n_friedrichs,
                             n_flux=cfg.n_flux, r0=cfg.r0, r1=cfg.r1,
                             epsilon_scale=cfg.epsilon_scale)
    for name in ("multiplier_identity", "radial_identity"):
        blk = doc[name]
        order = ("n/a" if blk["min_order"] is None
                 else f"{blk['min_order']:.3f}")
        print(f"{name}: {blk['checked']}/{blk['n_cases']} checked "
              f"({blk['skipped_exact']} exact), min order {order} -- "
              f"{'PASS' if blk['pass'] else 'FAIL'}")
    blk = doc["radiating_flux"]
    print(f"radiating_flux: {blk['n_cases']} cases, max lhs "
          f"{blk['max_lhs']:.3e} -- {'PASS' if blk['pass'] else 'FAIL'}")
    blk = doc["friedrichs"]
    print(f"friedrichs: {blk['n_cases']} cases, max excess "
          f"{blk['max_excess']:.3e} -- {'PASS' if blk['pass'] else 'FAIL'}")
    doc["config"] = serialize_config(cfg)
    _write_json(outdir / f"{_slug(cfg)}.json", doc)
    return 0 if doc["pass"] else 3


# ---------------------------------------------------------------------------
# operator sweeps (sweep / quasimode / coercivity)


def _verdict_lines(summary: dict):
    lines = []
    for entry in summary["entries"]:
        head = f"{entry['geometry']}/{entry['label']}" if entry["label"] \
            else entry["geometry"]
        for name in sorted(entry["slopes"]):
            s = entry["slopes"][name]
            text = (f"{head} {name}: slope {s['slope']:+.4f} "
                    f"(+/- {s['half_width']:.4f})")
            if s["window"] is not None:
                lo = "-inf" if s["window"][0] is None else f"{s['window'][0]:g}"
                hi = "+inf" if s["window"][1] is None else f"{s['window'][1]:g}"
                verdict = "PASS" if s["pass"] else "FAIL"
                text += f", window [{lo}, {hi}]: {verdict}"
            lines.append(text)
    return lines


def _run_sweep(cfg: ExperimentConfig) -> int:
    from . import spectra as sp
    b = _boundary(cfg)
    ks = resolve_ks(cfg, b)
    outdir = _ensure_outdir(cfg.out)
    slug = _slug(cfg, b)
    csv_path = outdir / f"{slug}.csv"
    log_path = outdir / f"{slug}_log.txt"

    t_last = time.monotonic()
    log = open(log_path, "w")

    def hook(k, mesh, _op):
        nonlocal t_last
        now = time.monotonic()
        log.write(f"k = {k:.8g}: N = {mesh.n_nodes}, {now - t_last:.1f} s\n")
        log.flush()
        t_last = now

    try:
        result = sp.k_sweep(b, ks, eta_c=cfg.eta_c, ppw=cfg.ppw,
                            corner_depth=cfg.corner_depth, label=slug,
                            node_cap=cfg.node_cap, n_workers=cfg.threads,
                            quasimode=cfg.kind == "quasimode",
                            coercivity=cfg.kind == "coercivity",
                            csv_path=csv_path, on_operator=hook)
    finally:
        log.close()

    summary = sp.summarize_vs_table1([result])
    doc = {"kind": cfg.kind, "csv": csv_path.name,
           "config": serialize_config(cfg), **summary}
    _write_json(outdir / f"{slug}_summary.json", doc)
    for line in _verdict_lines(summary):
        print(line)
    print(f"wrote {csv_path}")
    return 0


# ---------------------------------------------------------------------------
# plane-wave scattering


def _dump_field_grid(path: Path, b, mesh, density, wave) -> None:
    """Total field on a padded bounding-box grid, one 'x y Re Im' line per
    point; interior points and points hugging the boundary are nan."""
    import numpy as np
    from . import geometry as geo
    from . import scattering as sc

    lo_pt = mesh.points.min(axis=0)
    hi_pt = mesh.points.max(axis=0)
    clearance = 2.02 * float(mesh.panel_len.max())
    # pad past the quadrature clearance so coarse meshes still leave a
    # visible ring of evaluated exterior points
    pad = max(0.35 * float(np.max(hi_pt - lo_pt)), 1.5 * clearance)
    span = float(np.max(hi_pt - lo_pt)) + 2 * pad
    n = int(min(241, max(101, round(8.0 * span * wave.k / (2.0 * math.pi)))))
    xs = np.linspace(lo_pt[0] - pad, hi_pt[0] + pad, n)
    ys = np.linspace(lo_pt[1] - pad, hi_pt[1] + pad, n)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel()], axis=-1)

    keep = ~geo.contains_points(b, pts)
    for start in range(0, pts.shape[0], 4096):
        chunk = slice(start, start + 4096)
        d2 = ((pts[chunk, None, :] - mesh.points[None, :, :]) ** 2).sum(-1)
        keep[chunk] &= np.sqrt(d2.min(axis=1)) >= clearance

    vals = np.full(pts.shape[0], math.nan + 0j, dtype=complex)
    idx = np.nonzero(keep)[0]
    for start in range(0, idx.size, 2048):
        sel = idx[start:start + 2048]
        vals[sel] = sc.evaluate_field(density, wave, mesh, pts[sel])
    with open(path, "w") as fh:
        for (x, y), v in zip(pts, vals):
            fh.write(f"{x:.17g} {y:.17g} {v.real:.17g} {v.imag:.17g}\n")


def _run_scatter(cfg: ExperimentConfig) -> int:
    from . import layer_ops as lo
    from . import scattering as sc
    b = _boundary(cfg)
    ks = resolve_ks(cfg, b)
    outdir = _ensure_outdir(cfg.out)
    slug = _slug(cfg, b)
    csv_path = outdir / f"{slug}.csv"
    log_path = outdir / f"{slug}_log.txt"
    rad = math.radians(cfg.direction_deg)
    direction = (math.cos(rad), math.sin(rad))

    rows = []
    last = None
    with open(log_path, "w") as log:
        for k in ks:
            t0 = time.monotonic()
            mesh = lo.build_mesh(b, k, ppw=cfg.ppw,
                                 corner_depth=cfg.corner_depth,
                                 node_cap=cfg.node_cap)
            wave = sc.IncidentWave(direction, k)
            density = sc.solve_soundsoft(b, wave, cfg.eta_c * k, mesh,
                                         n_workers=cfg.threads)
            rows.append((k, sc.trace_norm(density, mesh)))
            last = (mesh, density, wave)
            log.write(f"k = {k:.8g}: N = {mesh.n_nodes}, "
                      f"{time.monotonic() - t0:.1f} s\n")
            log.flush()

    with open(csv_path, "w", newline="") as fh:
        fh.write("k,neumann_norm\n")
        for k, norm in rows:
            fh.write(f"{k:.17g},{norm:.17g}\n")

    fit = _fit_filtered([r[0] for r in rows], [r[1] for r in rows])
    doc = {"kind": "scatter", "csv": csv_path.name, "geometry": b.label,
           "label": slug, "direction_deg": cfg.direction_deg,
           "config": serialize_config(cfg), "fit": fit}
    _write_json(outdir / f"{slug}_summary.json", doc)
    if cfg.scatter_grid and last is not None:
        _dump_field_grid(outdir / f"{slug}_field.txt", b, *last)
        print(f"wrote {outdir / f'{slug}_field.txt'}")
    if fit is not None:
        print(f"{b.label} neumann_norm: slope {fit['slope']:+.4f} "
              f"(+/- {fit['half_width']:.4f})")
    print(f"wrote {csv_path}")
    return 0


# ---------------------------------------------------------------------------
# plot manifest


def _result_from_csv(path: Path):
    from . import spectra as sp
    cols = sp.read_csv_columns(path)
    records = []
    for i in range(len(cols["k"])):
        extras = {}
        for name in ("phi_norm", "residual", "lower_bound",
                     "coercivity_probe"):
            v = float(cols[name][i])
            extras[name] = None if math.isnan(v) else v
        records.append(sp.SweepRecord(
            k=float(cols["k"][i]), eta=float(cols["eta"][i]),
            n_nodes=int(cols["n_nodes"][i]),
            sigma_max=float(cols["sigma_max"][i]),
            sigma_min=float(cols["sigma_min"][i]),
            cond=float(cols["cond"][i]), norm_S=float(cols["norm_S"][i]),
            norm_Dp=float(cols["norm_Dp"][i]), **extras))
    eta_c = float(cols["eta"][0] / cols["k"][0])
    return sp.SweepResult(geometry=cols["geometry"][0],
                          label=cols["label"][0], eta_c=eta_c, ppw=0.0,
                          corner_depth=0, records=tuple(records))


def _sweep_entries(path: Path):
    from . import spectra as sp
    result = _result_from_csv(path)
    summary = sp.summarize_vs_table1([result])["entries"][0]
    entries = []
    for column in sorted(summary["slopes"]):
        s = summary["slopes"][column]
        y, transform = (("sigma_min", "reciprocal")
                        if column == "inv_sigma_min" else (column, "none"))
        entries.append({
            "name": f"{path.stem}.{column}",
            "csv": path.name,
            "x": "k",
            "y": y,
            "y_transform": transform,
            "fit": {"slope": s["slope"], "intercept": s["intercept"],
                    "half_width": s["half_width"]},
            "references": [{"slope": sl, "label": lbl}
                           for sl, lbl in _references(result.geometry,
                                                      column)],
            "figure": f"{path.stem}_{column}.svg",
            "title": f"{result.geometry}: {column} vs k",
        })
    return entries


def _scatter_entries(path: Path, geometry: str):
    from . import spectra as sp
    cols = sp.read_csv_columns(path)
    fit = _fit_filtered(cols["k"], cols["neumann_norm"])
    if fit is None:
        return []
    return [{
        "name": f"{path.stem}.neumann_norm",
        "csv": path.name,
        "x": "k",
        "y": "neumann_norm",
        "y_transform": "none",
        "fit": fit,
        "references": [{"slope": sl, "label": lbl}
                       for sl, lbl in _references(geometry, "neumann_norm")],
        "figure": f"{path.stem}_neumann_norm.svg",
        "title": f"{geometry or path.stem}: neumann_norm vs k",
    }]


def emit_plot_inputs(out_dir, stream=None) -> Path:
    """Scan a results directory and write manifest.json for the plotter.

    Every ``*_summary.json`` contributes its CSV; summaries whose CSV has
    vanished are skipped with a warning, CSVs without a summary are fitted
    directly.  A directory with no results at all is a config error.
    """
    stream = sys.stderr if stream is None else stream
    outdir = Path(out_dir)
    if not outdir.is_dir():
        raise ConfigError(f"results directory {outdir} does not exist")
    summaries = sorted(outdir.glob("*_summary.json"))
    csv_names = {p.name for p in outdir.glob("*.csv")}
    if not summaries and not csv_names:
        raise ConfigError(f"results directory {outdir} has no CSVs or "
                          f"summaries; nothing to plot")

    entries = []
    claimed = set()
    for spath in summaries:
        try:
            meta = json.loads(spath.read_text())
        except json.JSONDecodeError as exc:
            print(f"warning: {spath.name} is not valid JSON ({exc}); "
                  f"skipped", file=stream)
            continue
        csv_name = meta.get("csv")
        if not csv_name:
            continue
        if csv_name not in csv_names:
            print(f"warning: {spath.name} points at missing CSV "
                  f"{csv_name}; skipped", file=stream)
            continue
        claimed.add(csv_name)
        if meta.get("kind") == "scatter":
            entries += _scatter_entries(outdir / csv_name,
                                        meta.get("geometry", ""))
        else:
            entries += _sweep_entries(outdir / csv_name)
    for name in sorted(csv_names - claimed):
        path = outdir / name
        try:
            from . import spectra as sp
            cols = sp.read_csv_columns(path)
        except (ValueError, IndexError) as exc:
            print(f"warning: cannot read {name} ({exc}); skipped",
                  file=stream)
            continue
        if "sigma_min" in cols:
            entries += _sweep_entries(path)
        elif "neumann_norm" in cols:
            entries += _scatter_entries(path, "")
        else:
            print(f"warning: {name} has no recognized columns; skipped",
                  file=stream)

    manifest_path = outdir / "manifest.json"
    _write_json(manifest_path, {"entries": entries})
    return manifest_path


# ---------------------------------------------------------------------------
# entry point


def run(cfg: ExperimentConfig) -> int:
    """Execute one configured experiment; returns the process exit code."""
    handlers = {
        "geometry-check": _run_geometry_check,
        "constants": _run_constants,
        "identities": _run_identities,
        "sweep": _run_sweep,
        "quasimode": _run_sweep,
        "coercivity": _run_sweep,
        "scatter": _run_scatter,
    }
    return handlers[cfg.kind](cfg)


_SUBCOMMANDS = (
    ("geometry-check", "print a geometry's classification and metadata"),
    ("constants", "cutoff profile and wavenumber-threshold constants"),
    ("identities", "randomized multiplier identity and sign checks"),
    ("sweep", "singular values and kernel norms over a wavenumber sweep"),
    ("quasimode", "sweep plus the oscillating two-wall density residual"),
    ("coercivity", "sweep plus the numerical-range probe"),
    ("scatter", "plane-wave sound-soft solves and trace norms"),
    ("plot-manifest", "collect finished runs into plot manifest JSON"),
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="helmtrap",
        description="Config-driven wavenumber experiments on exterior "
                    "Helmholtz boundary operators.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    for name, help_text in _SUBCOMMANDS:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", metavar="PATH",
                       help="TOML experiment config")
        p.add_argument("--out", metavar="DIR",
                       help="override the config's output directory")
        p.add_argument("--threads", metavar="N", type=int,
                       help="BLAS/assembly thread cap")
        p.add_argument("--seed", metavar="N", type=int,
                       help="override the config's random seed")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return 2
    if args.threads is not None:
        for var in _THREAD_VARS:
            os.environ[var] = str(args.threads)
    try:
        if args.command == "plot-manifest":
            out = args.out
            if out is None and args.config is not None:
                out = load_config(args.config).out
            if out is None:
                raise ConfigError(
                    "plot-manifest needs --out DIR or --config PATH")
            path = emit_plot_inputs(out)
            print(f"wrote {path}")
            return 0
        if args.config is None:
            raise ConfigError(f"{args.command} needs --config PATH")
        cfg = load_config(args.config)
        if cfg.kind != args.command:
            raise ConfigError(f"config kind {cfg.kind!r} does not match "
                              f"subcommand {args.command!r}")
        overrides = {}
        if args.out is not None:
            overrides["out"] = args.out
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.threads is not None:
            overrides["threads"] = args.threads
        if overrides:
            cfg = dataclasses.replace(cfg, **overrides)
        return run(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        message = str(exc)
        if "above the cap" in message:
            message += " -- lower k_max or ppw, or raise node_cap"
        print(f"numerical failure: {message}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
