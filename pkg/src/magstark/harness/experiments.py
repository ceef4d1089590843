"""Experiment drivers.  Each ``run_*`` takes a ScenarioConfig and returns an
ExperimentReport whose verdicts can be recomputed from its records."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .. import __version__
from .._jit import USE_NUMBA
from ..assembly import assemble_operator, grid_for_spacing, make_grid
from ..classical import (SamplingPlan, classify_trapped_grid, exterior_trapped,
                         phase_space_box, trapped_volume_closed_form,
                         trapped_volume_monte_carlo)
from ..distortion import DistortionParams, distorted_coefficients, validate_real_theta_similarity
from ..eig import (BandedLU, count_below, count_in_interval, match_eigenvalues,
                   resolvent_norm, shift_invert_arnoldi)
from ..potential import HamiltonianParams, WellNotFound, find_well_bottom
from ..wellops import (HarmonicModel, default_delta, fill_well, flatten_exterior,
                       weyl_count_prediction)
from .report import ExperimentReport

EPS = np.finfo(float).eps


# ---------------------------------------------------------------- helpers

def _new_report(name, config):
    rep = ExperimentReport(name, config.to_dict())
    rep.provenance = {"package": __version__, "numpy": np.__version__,
                      "kernels": "numba" if USE_NUMBA else "numpy",
                      "seed": config.experiment.seed}
    return rep


def _sweep(fn, hs, threads):
    if threads and threads > 1 and len(hs) > 1:
        with ThreadPoolExecutor(min(threads, len(hs))) as ex:
            return list(ex.map(fn, hs))
    return [fn(h) for h in hs]


def delta_of(config):
    w = config.window
    if w.delta is not None:
        return float(w.delta)
    if config.region is None:
        return 0.05 * (w.b - w.a)
    return default_delta(config.potential, config.region, w.b)


def level_of(config):
    s = config.surgery
    if s is not None and s.level is not None:
        return float(s.level)
    return config.window.b + 2.0 * delta_of(config)


def interior_potential(config):
    """U^int, or the bare potential when no surgery is configured."""
    if config.surgery is None:
        return config.potential
    return flatten_exterior(config.potential, config.region, level_of(config),
                            config.surgery.ramp, b=config.window.b)


def exterior_potential(config):
    return fill_well(config.potential, config.region, level_of(config),
                     config.surgery.ramp, b=config.window.b)


def gamma_of(config, h):
    return config.experiment.gamma_M * h * math.log(1.0 / h)


def reference_grid(config, h, scale=1.0):
    g = config.grid
    box = g.reference_box if g.reference_box is not None else g.box
    return grid_for_spacing(box, g.spacing_x * h * scale, g.spacing_y * h * scale)


def distorted_grid(config, h, scale=1.0):
    g = config.grid
    return grid_for_spacing(g.box, g.spacing_x * h * scale, g.spacing_y * h * scale)


def distorted_operator(kind, grid, hp, dparams, source):
    c = distorted_coefficients(dparams, source, grid.x, grid.y, hp.B)
    return assemble_operator(kind, grid, hp, c)


def lowest_levels(P, n, floor, tol):
    """The ``n`` lowest eigenvalues of a Hermitian operator bounded below by
    ``floor``."""
    z0 = floor - 0.05 * max(1.0, abs(floor))
    r = shift_invert_arnoldi(P, z0, n, tol=tol)
    return np.sort(r.values.real), r


def hermitian_window(P, lo, hi, tol, floor=None):
    """All eigenvalues of Hermitian ``P`` in ``[lo, hi)``: the inertia count
    fixes how many, Arnoldi at the window centre finds them."""
    if floor is not None and lo < floor:
        n = count_below(P, hi)
    else:
        n = count_in_interval(P, lo, hi)
    if n == 0:
        return np.zeros(0), n
    c = 0.5 * (lo + hi) + 1e-3j * (hi - lo)
    k = n + 2
    while True:
        r = shift_invert_arnoldi(P, c, min(k, P.N), tol=tol)
        v = np.sort(r.values.real)
        inside = v[(v >= lo) & (v < hi)]
        if len(inside) >= n or k >= P.N:
            return inside, n
        k *= 2


def _disc_search(A, c, rho, tol, k0, kmax):
    """Shift-invert Arnoldi at ``c`` with ``k`` doubled until the returned set
    reaches beyond radius ``rho``.  Returns (values, reach)."""
    lu = BandedLU(A, c)
    k = k0
    while True:
        r = shift_invert_arnoldi(A, c, min(k, A.N), tol=tol, factorization=lu)
        vals = r.values
        reach = float(np.max(np.abs(vals - c))) if len(vals) else 0.0
        if reach > rho or k >= min(A.N, kmax):
            return vals, reach
        k *= 2


def complex_window(A, re_lo, re_hi, im_lo, im_hi, tol, k0=8, kmax=400, aspect=4.0):
    """Eigenvalues of ``A`` in the rectangle.

    The rectangle is cut along Re z into pieces no wider than ``aspect``
    times its height; each piece is searched from its centre until the
    returned eigenvalues reach past the piece's circumscribed disc.  Thin
    rectangles thus never pull in the (possibly dense) spectrum far below
    them.  Returns (values inside, smallest reach / disc radius, all
    returned values).
    """
    width = re_hi - re_lo
    height = im_hi - im_lo
    n = max(1, math.ceil(width / (aspect * height))) if height > 0 else 1
    edges = np.linspace(re_lo, re_hi, n + 1)
    yc = 0.5 * (im_lo + im_hi)
    found, every, cover = [], [], math.inf
    for j in range(n):
        x0, x1 = edges[j], edges[j + 1]
        c = complex(0.5 * (x0 + x1), yc)
        rho = math.hypot(0.5 * (x1 - x0), 0.5 * height)
        vals, reach = _disc_search(A, c, rho, tol, k0, kmax)
        cover = min(cover, reach / rho if rho > 0 else math.inf)
        every.append(vals)
        # half-open pieces so a value on a seam is kept once
        right = (vals.real <= x1) if j == n - 1 else (vals.real < x1)
        keep = (vals.real >= x0) & right & (vals.imag >= im_lo) & (vals.imag <= im_hi)
        found.append(vals[keep])
    inside = np.concatenate(found) if found else np.zeros(0, complex)
    inside = inside[np.lexsort((inside.imag, inside.real))]
    return inside, cover, np.concatenate(every)


def clusters(values, link):
    """Split real parts into clusters separated by gaps > ``link``.
    ``values`` is a list of (re, tag); returns dicts with endpoints and
    per-tag counts."""
    items = sorted(values)
    out = []
    for re, tag in items:
        if out and re - out[-1]["hi"] <= link:
            out[-1]["hi"] = re
        else:
            out.append({"lo": re, "hi": re, "counts": {}})
        cnt = out[-1]["counts"]
        cnt[tag] = cnt.get(tag, 0) + 1
    return out


def strictly_decreasing(seq):
    return all(b < a for a, b in zip(seq, seq[1:]))


def _c(z):
    return [float(z.real), float(z.imag)]


# ---------------------------------------------------------------- volume

def run_volume(config, threads=1):
    """Trapped-set volume by quadrature and by Monte Carlo, plus the Weyl
    predictions along the h list."""
    rep = _new_report("volume", config)
    w = config.window
    ex = config.experiment
    region = config.region
    if region is None:
        rep.notes.append("no well region configured: trapped volume is zero")
        cf_value = 0.0
        rep.records.append({"method": "closed_form", "value": 0.0})
        rep.verdict("closed_form", True, "no region", 0.0)
        return rep
    cf = trapped_volume_closed_form(config.potential, w.a, w.b, region, ex.volume_resolution)
    cf_value = cf.value
    box = phase_space_box(config.potential, config.B, w.b, region)
    mc = trapped_volume_monte_carlo(config.potential, w.a, w.b, box, ex.mc_samples, ex.seed,
                                    B=config.B, region=region, threads=threads)
    z = abs(mc.value - cf.value) / mc.stderr if mc.stderr > 0 else math.inf
    rep.records.append({"method": "closed_form", "value": cf.value, "stderr": 0.0,
                        "resolution": ex.volume_resolution})
    rep.records.append({"method": "monte_carlo", "value": mc.value, "stderr": mc.stderr,
                        "n_samples": mc.n_samples, "seed": mc.seed,
                        "box": [list(r) for r in box]})
    t = rep.table("volume")
    t.append({"method": "closed_form", "value": cf.value, "stderr": 0.0, "n": 0})
    t.append({"method": "monte_carlo", "value": mc.value, "stderr": mc.stderr,
              "n": mc.n_samples})
    pred = rep.table("prediction")
    for h in config.h_list:
        pred.append({"h": h, "prediction": weyl_count_prediction(cf_value, h)})
    rep.verdict("monte_carlo_3sigma", z <= 3.0, f"|MC - closed form| = {z:.3f} sigma", z, 3.0)
    rep.plot = {"series": [{"label": "Weyl prediction", "x": list(config.h_list),
                            "y": [r["prediction"] for r in pred]}],
                "xlabel": "h", "ylabel": "(2 pi h)^-2 Vol", "logx": True, "logy": True}
    return rep


# ---------------------------------------------------------------- bottom

def _bottom_one(config, model, h):
    ex = config.experiment
    hp = HamiltonianParams(h, config.B)
    src = interior_potential(config)
    n = ex.n_levels
    preds = model.lowest(h, n)
    floor = model.E if config.surgery is None else min(model.E, level_of(config))
    level = 0
    coarse = None
    while True:
        gf = reference_grid(config, h, 0.5 ** level)
        Pf = assemble_operator("P_int", gf, hp, src)
        mu, _ = lowest_levels(Pf, n, floor, ex.tol)
        if coarse is None:
            gc = reference_grid(config, h, 2.0)
            Pc = assemble_operator("P_int", gc, hp, src)
            coarse = (gc, lowest_levels(Pc, n, floor, ex.tol)[0])
        gc, muc = coarse
        ratio = gc.dx / gf.dx
        est = float(np.max(np.abs(mu - muc))) / (ratio * ratio - 1.0)
        if not config.grid.refine or est < h * h or level >= config.grid.max_refinements:
            break
        coarse = (gf, mu)
        level += 1
    out = {"h": h, "grid": gf.to_dict(), "coarse_grid": gc.to_dict(), "refinements": level,
           "disc_est": est, "mu": mu, "mu_coarse": muc, "pred": preds, "z": None}
    if config.distortion is not None:
        dp = config.distortion.at(h)
        gq = distorted_grid(config, h, 0.5 ** level)
        Q = distorted_operator("Q", gq, hp, dp, config.potential)
        z0 = complex(0.5 * (mu[0] + mu[-1]), 0.0)
        r = shift_invert_arnoldi(Q, z0, n + 4, tol=ex.tol)
        out["z"] = r.values
        out["q_grid"] = gq.to_dict()
    return out


def run_bottom_spectrum(config, threads=1):
    rep = _new_report("bottom", config)
    ex = config.experiment
    try:
        cp = find_well_bottom(config.potential, ex.well_seed)
    except WellNotFound as exc:
        cp = None
        rep.notes.append(f"no well found: {exc}")
    if cp is None or not cp.nondegenerate:
        if cp is not None:
            rep.notes.append("no well found: critical point is not a nondegenerate minimum")
        rep.records.append({"status": "no well found", "matching": []})
        rep.table("levels")
        return rep
    model = HarmonicModel.from_bottom(cp, config.B)
    rep.provenance["well"] = {"x": cp.x, "y": cp.y, "E": cp.E, "lambdas": list(cp.lambdas),
                              **model.to_dict()}
    runs = _sweep(lambda h: _bottom_one(config, model, h), config.h_list, threads)
    table = rep.table("levels")
    C_fit = 0.0
    three_way_ok = True
    est_ok = True
    for run in runs:
        h = run["h"]
        mu = run["mu"]
        zmatch = {}
        if run["z"] is not None:
            m = match_eigenvalues(mu.astype(complex), run["z"])
            zmatch = {i: run["z"][j] for i, j, _ in m.pairs}
        for i, (k1, k2, pv) in enumerate(run["pred"]):
            err = abs(mu[i] - pv)
            C_fit = max(C_fit, err / h ** 2)
            row = {"h": h, "k1": k1, "k2": k2, "predicted": pv, "mu_int": float(mu[i]),
                   "mu_int_coarse": float(run["mu_coarse"][i]), "err_pred": err,
                   "disc_est": run["disc_est"],
                   "tolerance": ex.fit_C_max * h * h + run["disc_est"]}
            if i in zmatch:
                z = zmatch[i]
                d = abs(z - mu[i])
                row.update({"z_re": z.real, "z_im": z.imag, "err_pred_q": abs(z.real - pv),
                            "dist_int": d})
                if d > 10.0 * run["disc_est"] + 10.0 * ex.tol:
                    three_way_ok = False
            elif run["z"] is not None:
                three_way_ok = False
                row["unmatched"] = True
            table.append(row)
        if config.grid.refine and not run["disc_est"] < h * h:
            est_ok = False
        rep.records.append({"h": h, "grid": run["grid"], "coarse_grid": run["coarse_grid"],
                            "refinements": run["refinements"], "disc_est": run["disc_est"],
                            "q_values": [_c(z) for z in (run["z"] if run["z"] is not None else [])]})
    rep.verdict("harmonic_fit", C_fit <= ex.fit_C_max,
                f"max |mu - prediction| / h^2 = {C_fit:.4f}", C_fit, ex.fit_C_max)
    if config.grid.refine:
        rep.verdict("discretization_below_h2", est_ok, "Richardson estimate < h^2 at every h")
    if config.distortion is not None:
        rep.verdict("three_way_matching", three_way_ok,
                    "each P^int level has a Q eigenvalue within 10x the discretization estimate")
    rep.plot = {"series": [
        {"label": "P^int", "x": [r["mu_int"] for r in table], "y": [0.0] * len(table)},
        {"label": "Q", "x": [r["z_re"] for r in table if "z_re" in r],
         "y": [r["z_im"] for r in table if "z_re" in r]},
        {"label": "harmonic", "x": [r["predicted"] for r in table], "y": [0.0] * len(table),
         "marker": "cross"}], "xlabel": "Re z", "ylabel": "Im z"}
    return rep


# ---------------------------------------------------------------- weyl

def _weyl_one(config, h, src, floor):
    w = config.window
    hp = HamiltonianParams(h, config.B)
    g = reference_grid(config, h)
    P = assemble_operator("P_int", g, hp, src)
    nb = count_below(P, w.b) if w.b > floor else 0
    # the discrete kinetic part is positive semidefinite, so nothing lies below floor
    na = count_below(P, w.a) if w.a > floor else 0
    return {"h": h, "grid": g.to_dict(), "count": nb - na, "count_below_b": nb,
            "count_below_a": na}


def run_weyl(config, threads=1):
    rep = _new_report("weyl", config)
    w = config.window
    ex = config.experiment
    region = config.region
    if w.a == w.b:
        for h in config.h_list:
            rep.table("counts").append({"h": h, "count": 0, "prediction": 0.0, "rel_err": 0.0})
        rep.verdict("empty_window", True, "a = b: prediction 0, count 0")
        return rep
    vol = trapped_volume_closed_form(config.potential, w.a, w.b, region, ex.volume_resolution)
    rep.records.append({"volume": vol.value, "method": vol.method})
    # precondition: no trapping outside the region
    x0, x1, y0, y1 = config.grid.reference_box or config.grid.box
    nx, ny, ne, na = ex.sample_grid
    plan = SamplingPlan((x0, x1), (y0, y1), nx, ny, ne, na)
    hp0 = HamiltonianParams(config.h_list[0], config.B)
    samples = classify_trapped_grid(hp0, config.potential, w.a, w.b, plan, ex.r_esc,
                                    ex.t_max, x_esc=ex.x_esc)
    bad = exterior_trapped(samples, region)
    rep.records.append({"samples": len(samples), "exterior_not_escaped": len(bad)})
    rep.verdict("no_exterior_trapping", not bad,
                f"{len(bad)} of {len(samples)} shell samples outside the region did not escape")
    src = interior_potential(config)
    Xg, Yg = np.meshgrid(np.linspace(x0, x1, 801), np.linspace(y0, y1, 801), indexing="ij")
    floor = float(np.min(src.total(Xg, Yg)))
    # a grid minimum can sit slightly above the true one
    floor -= 1e-6 * max(1.0, abs(floor))
    runs = _sweep(lambda h: _weyl_one(config, h, src, floor), config.h_list, threads)
    rels = []
    t = rep.table("counts")
    for run in runs:
        pred = weyl_count_prediction(vol.value, run["h"])
        rel = abs(run["count"] / pred - 1.0) if pred > 0 else math.inf
        rels.append(rel)
        t.append({"h": run["h"], "count": run["count"], "prediction": pred, "rel_err": rel,
                  "n_x": run["grid"]["n_x"], "n_y": run["grid"]["n_y"]})
        rep.records.append(run)
    rep.notes.append("counts are P^int eigenvalues in [a, b) by LDL^H inertia; "
                     "the Q_theta cross-count is not computed here")
    rep.verdict("final_relative_error", rels[-1] <= ex.relative_bound,
                f"|count/prediction - 1| = {rels[-1]:.4f} at h = {config.h_list[-1]}",
                rels[-1], ex.relative_bound)
    if ex.check_trend:
        rep.verdict("relative_error_trend", strictly_decreasing(rels),
                    "relative errors " + ", ".join(f"{r:.4f}" for r in rels))
    rep.plot = {"series": [
        {"label": "count", "x": list(config.h_list), "y": [r["count"] for r in t]},
        {"label": "prediction", "x": list(config.h_list), "y": [r["prediction"] for r in t],
         "marker": "cross"}], "xlabel": "h", "ylabel": "count", "logx": True, "logy": True}
    return rep


# ---------------------------------------------------------------- window spectra

def _window_one(config, h):
    ex = config.experiment
    w = config.window
    hp = HamiltonianParams(h, config.B)
    delta = delta_of(config)
    gamma = gamma_of(config, h)
    lo, hi = w.a - delta, w.b + delta
    dp = config.distortion.at(h)
    g = distorted_grid(config, h)
    Q = distorted_operator("Q", g, hp, dp, config.potential)
    out = {"h": h, "delta": delta, "gamma": gamma, "grid": g.to_dict(),
           "theta": _c(dp.theta), "noise": 1e3 * EPS * Q.norm1()}
    q, reach, _ = complex_window(Q, lo, hi, -gamma, gamma, ex.tol)
    out["q"] = q
    out["cover_ratio"] = reach
    # band check from a second shift centred in the lower half of the rectangle
    qb, reach_b, _ = complex_window(Q, w.a - 0.5 * delta, w.b + 0.5 * delta, -gamma, 0.0, ex.tol)
    out["q_band"] = qb
    out["band_cover_ratio"] = reach_b
    if config.surgery is not None:
        src = interior_potential(config)
        floor = min(level_of(config), float(np.min(src.total(g.X, g.Y))))
        P = assemble_operator("P_int", g, hp, src)
        out["mu"], out["n_int"] = hermitian_window(P, lo, hi, ex.tol, floor)
        gc = distorted_grid(config, h, 2.0)
        Pc = assemble_operator("P_int", gc, hp, src)
        muc, _ = hermitian_window(Pc, lo - delta, hi + delta, ex.tol, floor)
        m = match_eigenvalues(out["mu"].astype(complex), muc.astype(complex))
        ratio = gc.dx / g.dx
        out["disc_est"] = max((d for _, _, d in m.pairs), default=0.0) / (ratio * ratio - 1.0)
    else:
        out["mu"], out["n_int"], out["disc_est"] = np.zeros(0), 0, 0.0
    return out


def window_spectra(config, threads=1):
    """Per-h spectra near the window: Q eigenvalues in
    ``[a - delta, b + delta] + i[-gamma, gamma]``, P^int eigenvalues in
    ``[a - delta, b + delta]`` and a Richardson discretization estimate."""
    if config.distortion is None:
        raise ValueError("window spectra need a [distortion] section")
    return _sweep(lambda h: _window_one(config, h), config.h_list, threads)


def _calibrate(config, sp):
    """Matching and the calibrated epsilon for one h."""
    w = config.window
    ex = config.experiment
    q, mu = sp["q"], sp["mu"]
    m = match_eigenvalues(q, mu.astype(complex))
    lo, hi = w.a - sp["delta"], w.b + sp["delta"]
    dists = [d for i, j, d in m.pairs]
    ims = [abs(q[i].imag) for i, _, _ in m.pairs]
    eps = ex.eps_factor * max(max(dists, default=0.0), max(ims, default=0.0), sp["noise"])
    return m, eps, lo, hi


def run_correspondence(config, threads=1, spectra=None):
    rep = _new_report("correspondence", config)
    w = config.window
    spectra = spectra if spectra is not None else window_spectra(config, threads)
    t = rep.table("pairs")
    max_d = []
    one_to_one = True
    clusters_ok = True
    for sp in spectra:
        h = sp["h"]
        m, eps, lo, hi = _calibrate(config, sp)
        q, mu = sp["q"], sp["mu"]
        link = 2.0 * eps
        # an eigenvalue whose partner fell just outside [lo, hi] is an edge effect
        edge = lambda x: x < lo + link or x > hi - link  # noqa: E731
        lost_q = [i for i in m.unmatched_a if not edge(q[i].real)]
        lost_mu = [j for j in m.unmatched_b if not edge(mu[j])]
        in_ab = [(i, j, d) for i, j, d in m.pairs if w.a <= mu[j] <= w.b]
        lost_ab = [i for i in lost_q if w.a <= q[i].real <= w.b] + \
                  [j for j in lost_mu if w.a <= mu[j] <= w.b]
        if lost_ab:
            one_to_one = False
        for i, j, d in in_ab:
            t.append({"h": h, "z_re": q[i].real, "z_im": q[i].imag, "mu_int": float(mu[j]),
                      "distance": d, "disc_est": sp["disc_est"], "eps_cfg": eps})
        cl = clusters([(q[i].real, "Q") for i, _, _ in m.pairs] +
                      [(float(mu[j]), "P_int") for _, j, _ in m.pairs] +
                      [(q[i].real, "Q") for i in lost_q] +
                      [(float(mu[j]), "P_int") for j in lost_mu], link)
        cl_in = [c for c in cl if c["hi"] >= w.a and c["lo"] <= w.b]
        bad = [c for c in cl_in if c["counts"].get("Q", 0) != c["counts"].get("P_int", 0)]
        if bad:
            clusters_ok = False
        md = max((d for _, _, d in in_ab), default=0.0)
        max_d.append(md)
        rep.records.append({"h": h, "eps_cfg": eps, "disc_est": sp["disc_est"],
                            "max_distance": md, "n_pairs": len(in_ab),
                            "unmatched_in_window": len(lost_ab),
                            "clusters": cl_in, "grid": sp["grid"], "theta": sp["theta"]})
    fin = rep.records[-1]
    rep.verdict("one_to_one", one_to_one, "every eigenvalue in [a, b] has a partner")
    rep.verdict("cluster_counts", clusters_ok, "Q and P^int counts agree in every cluster")
    rep.verdict("finest_distance", fin["max_distance"] <= 10.0 * fin["disc_est"],
                f"max distance {fin['max_distance']:.3e} vs 10 x estimate "
                f"{10 * fin['disc_est']:.3e} at h = {fin['h']}",
                fin["max_distance"], 10.0 * fin["disc_est"])
    rep.verdict("distance_trend", strictly_decreasing(max_d),
                "max matched distance " + ", ".join(f"{d:.3e}" for d in max_d))
    rep.plot = {"series": [
        {"label": "Q", "x": [r["z_re"] for r in t], "y": [r["z_im"] for r in t]},
        {"label": "P^int", "x": [r["mu_int"] for r in t], "y": [0.0] * len(t),
         "marker": "cross"}], "xlabel": "Re z", "ylabel": "Im z"}
    return rep


def run_gap(config, threads=1, spectra=None):
    rep = _new_report("gap", config)
    w = config.window
    spectra = spectra if spectra is not None else window_spectra(config, threads)
    t = rep.table("resonances")
    max_im = []
    for sp in spectra:
        h = sp["h"]
        gamma = sp["gamma"]
        m, eps, lo, hi = _calibrate(config, sp)
        half = 0.5 * sp["delta"]
        q = sp["q"]
        res = [z for z in q if w.a - half <= z.real <= w.b + half and abs(z.imag) <= eps]
        in_ab = [z for z in res if w.a <= z.real <= w.b]
        band = [z for z in np.concatenate([q, sp["q_band"]])
                if w.a - half <= z.real <= w.b + half and -gamma <= z.imag < -eps]
        wide = [z for z in q if w.a <= z.real <= w.b and abs(z.imag) > eps]
        mi = max((abs(z.imag) for z in in_ab), default=0.0)
        max_im.append(mi)
        cl = clusters([(z.real, "Q") for z in res], 2.0 * eps)
        for z in res:
            t.append({"h": h, "z_re": z.real, "z_im": z.imag, "eps_cfg": eps, "gamma_cfg": gamma})
        rep.records.append({
            "h": h, "eps_cfg": eps, "gamma_cfg": gamma, "n_resonances": len(res),
            "max_abs_im": mi, "band_count": len(band), "band": [_c(z) for z in band],
            "wide_in_window": [_c(z) for z in wide], "clusters": cl,
            "cover_ratio": sp["cover_ratio"], "band_cover_ratio": sp["band_cover_ratio"],
            "noise": sp["noise"], "theta": sp["theta"]})
        ok_struct = all(c2["lo"] - c1["hi"] > 2.0 * eps for c1, c2 in zip(cl, cl[1:]))
        rep.verdict(f"narrow_h{h:g}", not wide,
                    f"{len(wide)} eigenvalues in [a, b] with eps < |Im z| <= gamma", mi, eps)
        covered = sp["cover_ratio"] > 1.0 and sp["band_cover_ratio"] > 1.0
        rep.verdict(f"empty_band_h{h:g}", not band and eps < gamma and covered,
                    f"{len(band)} eigenvalues with Im in [-gamma, -eps]; eps = {eps:.3e}, "
                    f"gamma = {gamma:.3e}; search covered: {covered}", len(band), 0)
        rep.verdict(f"cluster_structure_h{h:g}", ok_struct, "cluster gaps exceed 2 eps")
        if config.surgery is None:
            rep.verdict(f"no_eigenvalues_h{h:g}", len(q) == 0 and not band,
                        "no eigenvalues in the window above -gamma")
    rep.notes.append("eps_cfg = eps_factor * max(matched distance, |Im z| of matched "
                     "resonances, 1e3 eps ||Q||_1); gamma_cfg = gamma_M h log(1/h)")
    if config.surgery is not None and len(max_im) > 1:
        rep.verdict("im_decay", strictly_decreasing(max_im),
                    "max |Im z| over the sweep " + ", ".join(f"{v:.3e}" for v in max_im))
    rep.plot = {"series": [{"label": "resonances", "x": [r["z_re"] for r in t],
                            "y": [r["z_im"] for r in t]}],
                "xlabel": "Re z", "ylabel": "Im z"}
    return rep


# ---------------------------------------------------------------- non-trapping

def _nontrap_one(config, h):
    ex = config.experiment
    w = config.window
    hp = HamiltonianParams(h, config.B)
    delta = delta_of(config)
    gamma = gamma_of(config, h)
    dp = config.distortion.at(h)
    g = distorted_grid(config, h)
    if config.surgery is not None:
        src = exterior_potential(config)
        kind = "Q_ext"
    else:
        src = config.potential
        kind = "Q"
    Q = distorted_operator(kind, g, hp, dp, src)
    lo, hi = w.a - delta, w.b + delta
    inside, reach, _ = complex_window(Q, lo, hi, -gamma, 0.0, ex.tol)
    res = []
    for zr in np.linspace(lo, hi, ex.probe_re):
        for zi in np.linspace(0.0, -gamma, ex.probe_im):
            z = complex(zr, zi)
            res.append((z, resolvent_norm(Q, z, iterations=ex.probe_iterations, seed=ex.seed)))
    out = {"h": h, "gamma": gamma, "delta": delta, "theta": _c(dp.theta), "grid": g.to_dict(),
           "inside": inside, "cover_ratio": reach, "probes": res}
    if ex.theta_zero_control:
        # undistorted control: the same operator with theta = 0
        P = assemble_operator("P", g, hp, src)
        out["control_count"] = count_in_interval(P, lo, hi)
    return out


def run_nontrapping(config, threads=1):
    rep = _new_report("nontrap", config)
    ex = config.experiment
    w = config.window
    if config.distortion is None:
        raise ValueError("non-trapping needs a [distortion] section")
    if config.surgery is None and not config.potential.kind == "sum":
        x0, x1, y0, y1 = config.grid.box
        nx, ny, ne, na = ex.sample_grid
        plan = SamplingPlan((x0, x1), (y0, y1), nx, ny, ne, na)
        hp0 = HamiltonianParams(config.h_list[0], config.B)
        samples = classify_trapped_grid(hp0, config.potential, w.a, w.b, plan, ex.r_esc,
                                        ex.t_max, x_esc=ex.x_esc)
        trapped = [s for s, v in samples if v.verdict != "escaped"]
        rep.records.append({"samples": len(samples), "not_escaped": len(trapped)})
        rep.verdict("no_trapping", not trapped,
                    f"{len(trapped)} of {len(samples)} shell samples did not escape")
    runs = _sweep(lambda h: _nontrap_one(config, h), config.h_list, threads)
    t = rep.table("probes")
    norms = []
    for run in runs:
        nmax = max(r for _, r in run["probes"])
        norms.append(nmax)
        for z, r in run["probes"]:
            t.append({"h": run["h"], "z_re": z.real, "z_im": z.imag, "resolvent_norm": r})
        rec = {"h": run["h"], "gamma_cfg": run["gamma"], "delta": run["delta"],
               "theta": run["theta"], "grid": run["grid"],
               "eigenvalues_in_rectangle": [_c(z) for z in run["inside"]],
               "cover_ratio": run["cover_ratio"], "max_resolvent_norm": nmax}
        if "control_count" in run:
            rec["theta0_count"] = run["control_count"]
        rep.records.append(rec)
        covered = run["cover_ratio"] > 1.0
        rep.verdict(f"empty_rectangle_h{run['h']:g}", len(run["inside"]) == 0 and covered,
                    f"{len(run['inside'])} eigenvalues in [a-delta, b+delta] + i[-gamma, 0]; "
                    f"search covered: {covered}", len(run["inside"]), 0)
    controls = [run["control_count"] for run in runs if "control_count" in run]
    if controls:
        # the undistorted spectrum fills in the window as h shrinks
        ok = controls[-1] > 0 and all(a <= b for a, b in zip(controls, controls[1:]))
        rep.verdict("theta0_control", ok,
                    "theta = 0 eigenvalues in [a-delta, b+delta] along the sweep: "
                    + ", ".join(map(str, controls)))
    h0 = config.h_list[0]
    C = math.log(norms[0]) / math.log(1.0 / h0) if h0 < 1 else math.inf
    bound_ok = all(n <= h ** (-C) * (1 + 1e-9) for h, n in zip(config.h_list, norms))
    rep.records.append({"C_cfg": C, "fitted_at_h": h0})
    rep.verdict("resolvent_bound", bound_ok,
                f"max ||(Q - z)^-1|| <= h^-C with C = {C:.4f} fitted at h = {h0}", C)
    rep.plot = {"series": [
        {"label": "max resolvent norm", "x": list(config.h_list), "y": norms},
        {"label": "h^-C", "x": list(config.h_list), "y": [h ** (-C) for h in config.h_list],
         "marker": "cross"}], "xlabel": "h", "ylabel": "norm", "logx": True, "logy": True}
    return rep


# ---------------------------------------------------------------- invariance

def run_real_theta(config, threads=1):
    """Q with real theta against P on the refinement sequence
    ``experiment.refinements`` (points per direction) at ``h_list[0]``."""
    rep = _new_report("realtheta", config)
    ex = config.experiment
    h = config.h_list[0]
    d = config.distortion
    params = DistortionParams(d.R0, d.w, complex(ex.real_theta, 0.0))
    box = config.grid.box
    grids = [make_grid(box, n, n) for n in ex.refinements]
    out = validate_real_theta_similarity(grids, params, config.potential,
                                         HamiltonianParams(h, config.B), k=ex.invariance_levels)
    t = rep.table("levels")
    for row in out["rows"]:
        for i, (p, q) in enumerate(zip(row["P"], row["Q"])):
            t.append({"n": row["n_x"], "dx": row["dx"], "level": i, "P": p.real, "Q_re": q.real,
                      "Q_im": q.imag, "diff": abs(q - p)})
    orders = out["orders"][-1]
    for i, o in enumerate(orders):
        rep.table("orders").append({"level": i, "order": float(o)})
    ok = bool(np.all(np.abs(orders - 2.0) <= 0.2))
    rep.records.append({"orders": [list(map(float, o)) for o in out["orders"]], "theta": ex.real_theta,
                        "h": h})
    rep.verdict("richardson_slope", ok,
                "finest-pair orders " + ", ".join(f"{o:.3f}" for o in orders), None, 0.2)
    rep.plot = {"series": [{"label": f"level {i}", "x": [r["dx"] for r in t if r["level"] == i],
                            "y": [r["diff"] for r in t if r["level"] == i]}
                           for i in range(ex.invariance_levels)],
                "xlabel": "dx", "ylabel": "|Q - P|", "logx": True, "logy": True}
    return rep


def _stability_one(config, h):
    ex = config.experiment
    w = config.window
    hp = HamiltonianParams(h, config.B)
    base = config.distortion.at(h)
    variants = {"base": base,
                "theta_doubled": DistortionParams(base.R0, base.w, 2 * base.theta),
                "R0_plus_w": DistortionParams(base.R0 + base.w, base.w, base.theta)}
    g = distorted_grid(config, h)
    gamma = gamma_of(config, h)
    vals = {}
    for name, dp in variants.items():
        Q = distorted_operator("Q", g, hp, dp, config.potential)
        vals[name], _, _ = complex_window(Q, w.a, w.b, -gamma, gamma, ex.tol)
    return {"h": h, "grid": g.to_dict(), "values": vals,
            "theta": {k: _c(v.theta) for k, v in variants.items()},
            "R0": {k: v.R0 for k, v in variants.items()}}


def run_stability(config, threads=1):
    rep = _new_report("stability", config)
    ex = config.experiment
    runs = _sweep(lambda h: _stability_one(config, h), config.h_list, threads)
    t = rep.table("moves")
    worst = 0.0
    complete = True
    for run in runs:
        base = run["values"]["base"]
        for name in ("theta_doubled", "R0_plus_w"):
            other = run["values"][name]
            m = match_eigenvalues(base, other)
            if m.unmatched_a or m.unmatched_b or len(base) == 0:
                complete = False
            for i, j, d in m.pairs:
                rel = d / abs(base[i])
                worst = max(worst, rel)
                t.append({"h": run["h"], "variant": name, "z_re": base[i].real,
                          "z_im": base[i].imag, "moved_re": other[j].real,
                          "moved_im": other[j].imag, "rel_move": rel})
        rep.records.append({"h": run["h"], "grid": run["grid"], "theta": run["theta"],
                            "R0": run["R0"],
                            "values": {k: [_c(z) for z in v] for k, v in run["values"].items()}})
    rep.verdict("same_count", complete, "all variants give the same eigenvalues in the window")
    rep.verdict("relative_move", worst < ex.stability_rel,
                f"max |dz| / |z| = {worst:.3e}", worst, ex.stability_rel)
    rep.plot = {"series": [{"label": v, "x": [r["z_re"] for r in t if r["variant"] == v],
                            "y": [r["rel_move"] for r in t if r["variant"] == v]}
                           for v in ("theta_doubled", "R0_plus_w")],
                "xlabel": "Re z", "ylabel": "|dz|/|z|", "logy": True}
    return rep


EXPERIMENTS = {
    "volume": run_volume,
    "bottom": run_bottom_spectrum,
    "weyl": run_weyl,
    "gap": run_gap,
    "correspond": run_correspondence,
    "nontrap": run_nontrapping,
    "realtheta": run_real_theta,
    "stability": run_stability,
}
