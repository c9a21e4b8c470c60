"""Command line interface.

``nhbbc run CONFIG [--set path.key=value]... [--out DIR]`` writes the
requested artifacts plus ``manifest.json``.  Exit status: 0 success,
2 validation error, 3 numerical failure.

``nhbbc plot CSV... --kind {complex,bands,profile,heatmap} [--out FILE]``
renders CSV artifacts as SVG.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import bloch as B
from . import plot as P
from .config import load, set_param
from .disorder import DisorderSpec, ensemble
from .errors import NotApplicable, NumericalError, ValidationError
from .gssh import double, gssh_bands, zak_invariant
from .io import SCHEMAS, jsonable, matrix_rows, write_csv, write_json
from .model import build_obc, coefficients
from .response import (detuning_sweep, gain_scaling, stability, susceptibility,
                       zsm_decomposition)
from .svd import detect_zsm, momentum_label, svd

PROFILE_VECTORS = 4


class Artifacts:
    """Serializes all writes and records every produced file."""

    def __init__(self, root: Path, formats):
        self.root = root
        self.formats = set(formats)
        self.files = []
        root.mkdir(parents=True, exist_ok=True)

    def _add(self, name):
        self.files.append(name)
        return self.root / name

    def csv(self, name, header, rows):
        if "csv" in self.formats:
            write_csv(self._add(name), header, rows)

    def json(self, name, obj):
        if "json" in self.formats:
            write_json(self._add(name), obj)

    def svg(self, name, text):
        if "svg" in self.formats:
            self._add(name).write_text(text)


def _winding_value(w):
    return w.value if isinstance(w, B.Marker) else int(w)


def _spectrum(cfg, art, ctx):
    c, a = ctx["coeffs"], cfg.analysis
    s = B.sample(c, a["N_k"] or B.default_grid(c.L, a["N"]), cfg.tolerances)
    ctx["samples"] = s
    art.csv("spectrum.csv", SCHEMAS["spectrum"],
            zip(s.k, s.h.real, s.h.imag, s.sigma, s.phi))
    art.svg("spectrum_complex.svg", P.complex_plane({"re_h": s.h.real, "im_h": s.h.imag}))


def _topology(cfg, ctx):
    if "topology" not in ctx:
        a = cfg.analysis
        ctx["topology"] = B.analyze(ctx["coeffs"], a["N_k"] or B.default_grid(ctx["coeffs"].L),
                                    cfg.tolerances)
    return ctx["topology"]


def _winding(cfg, art, ctx):
    rep = _topology(cfg, ctx)
    out = rep.as_dict()
    out["winding_from_roots"] = None
    out["zak_invariant"] = None
    if isinstance(rep.winding, int):
        out["winding_from_roots"] = B.winding_from_roots(ctx["coeffs"], cfg.tolerances)
        out["zak_invariant"] = zak_invariant(ctx["coeffs"], rep.n_k, cfg.tolerances)
    out["coefficients"] = {str(k): v for k, v in ctx["coeffs"].as_dict().items()}
    art.json("topology.json", out)


def _svd(cfg, art, ctx):
    a = cfg.analysis
    H = build_obc(ctx["coeffs"], a["N"])
    r = svd(H, cfg.tolerances)
    rep = _topology(cfg, ctx)
    zsm = None
    if rep.nh_gap:
        zsm = detect_zsm(r, rep.nh_gap, strict=False)
    count = zsm.count if zsm else 0
    ml = momentum_label(H, r, count)
    rates = {m.index: (m.left_rate, m.right_rate) for m in (zsm.modes if zsm else ())}
    rows = []
    for j in range(r.N):
        lr, rr = rates.get(j, (None, None))
        rows.append((j + 1, r.sigma[j], ml.k_label[j], bool(ml.edge[j]), lr, rr))
    art.csv("svd.csv", SCHEMAS["svd"], rows)
    nv = min(PROFILE_VECTORS, r.N)
    head = ["site"] + [f"v{j + 1}_abs" for j in range(nv)] + [f"u{j + 1}_abs" for j in range(nv)]
    prof = np.column_stack([np.arange(1, r.N + 1)] + [np.abs(r.V[:, j]) for j in range(nv)]
                           + [np.abs(r.U[:, j]) for j in range(nv)])
    art.csv("singular_vectors.csv", head, prof.tolist())
    info = {"N": a["N"], "refined_triplets": r.refined,
            "zsm": zsm.as_dict() if zsm else None,
            "winding": _winding_value(rep.winding), "nh_gap": rep.nh_gap,
            "residuals": r.residuals(H)}
    art.json("svd.json", info)
    s = ctx.get("samples") or B.sample(ctx["coeffs"], B.default_grid(ctx["coeffs"].L, a["N"]))
    art.svg("svd_bands.svg", P.bands({"k": s.k, "sigma": s.sigma},
                                     {"k_label": ml.k_label, "sigma": r.sigma,
                                      "edge_flag": ml.edge.astype(float)}))
    art.svg("singular_vectors.svg", P.profile(dict(zip(head, prof.T))))


def _gssh(cfg, art, ctx):
    a, c = cfg.analysis, ctx["coeffs"]
    n_k = a["N_k"] or B.default_grid(c.L)
    bands = gssh_bands(c, n_k)
    art.csv("gssh_bands.csv", SCHEMAS["gssh"], zip(bands.k, bands.e_minus, bands.e_plus))
    H = build_obc(c, a["N"])
    ev = double(H).spectrum()
    sv = svd(H, cfg.tolerances, refine=False).sigma
    dev = float(np.abs(np.sort(ev) - np.sort(np.r_[-sv, sv])).max())
    rep = _topology(cfg, ctx)
    zak = zak_invariant(c, n_k, cfg.tolerances) if isinstance(rep.winding, int) else None
    art.json("gssh.json", {"zak_invariant": zak, "winding": _winding_value(rep.winding),
                           "doubled_vs_singular_max_dev": dev,
                           "sublattice_ordering": "A sites then B sites"})


def _response(cfg, art, ctx):
    a, c = cfg.analysis, ctx["coeffs"]
    H = build_obc(c, a["N"])
    rep = susceptibility(H, a["omega"], a["gamma"], cfg.tolerances)
    st = stability(H)
    art.csv("chi.csv", SCHEMAS["matrix"], matrix_rows(rep.chi))
    art.csv("s_matrix.csv", SCHEMAS["matrix"], matrix_rows(rep.s_matrix))
    drives = {}
    for site in a["drive_sites"]:
        if site > H.N:
            raise ValidationError(f"analysis.drive_sites: {site} exceeds N={H.N}")
        amp = np.abs(rep.drive_site(site))
        drives[str(site)] = {"argmax_site": int(np.argmax(amp)) + 1, "max_amplitude": amp.max()}
    out = rep.as_dict()
    out.update(stability=st.as_dict(), drives=drives)
    try:
        z = zsm_decomposition(H, a["omega"], tol=cfg.tolerances)
        out["zsm_truncation"] = {"count": z.count, "residual": z.residual,
                                 "channels": z.channels(), "zsv": list(z.zsv)}
    except NotApplicable as exc:
        out["zsm_truncation"] = {"count": 0, "status": "not_applicable", "reason": str(exc)}
    if a["N_list"]:
        g = gain_scaling(cfg.params, a["omega"], a["N_list"], a["gamma"], cfg.tolerances)
        art.csv("gain.csv", SCHEMAS["gain"], [tuple(r.values()) for r in g.rows()])
        out["gain_scaling"] = {"forward_slope": g.forward_slope,
                               "reverse_slope": g.reverse_slope,
                               "inverse_min_sigma_slope": g.inverse_zsv_slope}
    art.json("response.json", out)
    art.svg("chi_heatmap.svg", P.heatmap({"row": np.repeat(np.arange(1, H.N + 1), H.N),
                                          "col": np.tile(np.arange(1, H.N + 1), H.N),
                                          "abs": np.abs(rep.chi).ravel()}))


def _disorder(cfg, art, ctx):
    a = cfg.analysis
    d = a["disorder"]
    spec = DisorderSpec(d["w"], d["realizations"], d["seed"], d["kind"])
    e = ensemble(cfg.params, a["N"], spec, workers=a["workers"], n_k=a["N_k"],
                 tol=cfg.tolerances)
    kc = 0.5 * (e.k_edges[1:] + e.k_edges[:-1])
    sc = 0.5 * (e.sigma_edges[1:] + e.sigma_edges[:-1])
    rows = [(kc[i], sc[j], int(e.sv_histogram[i, j]))
            for i in range(kc.size) for j in range(sc.size)]
    art.csv("histogram.csv", SCHEMAS["histogram"], rows)
    art.json("disorder.json", e.as_dict())
    # largest sigma on the top row
    ii, jj = np.meshgrid(np.arange(kc.size), np.arange(sc.size), indexing="ij")
    art.svg("histogram.svg", P.heatmap({"row": (sc.size - jj).ravel(), "col": (ii + 1).ravel(),
                                        "abs": e.sv_histogram.ravel() + 1e-300}))


def _sweep(cfg, art, ctx):
    a = cfg.analysis
    params = a["param"] if isinstance(a["param"], list) else [a["param"]]
    n_list = a["N_list"] or [10, 20, 30, 40]
    if params == ["delta"]:
        sw = detuning_sweep(cfg.params, a["values"], n_list, a["N_k"] or 1024, a["omega"],
                            a["gamma"], a["xtol"], cfg.tolerances)
        rows = [r.as_dict() for r in sw.rows]
        art.csv("sweep.csv", SCHEMAS["sweep"],
                [(r["delta"], r["winding"], r["nh_gap"], r["zsm_count"], r["forward_slope"],
                  r["stable"]) for r in rows])
        art.json("sweep.json", {"param": "delta", "rows": rows,
                                "transitions": [t.__dict__ for t in sw.transitions],
                                "consistent": sw.consistent})
        return
    def point(v):
        q = cfg.params
        for name in params:
            q = set_param(q, name, v)
        c = coefficients(q)
        rep = B.analyze(c, a["N_k"], cfg.tolerances)
        H = build_obc(c, a["N"])
        r = svd(H, cfg.tolerances)
        count = detect_zsm(r, rep.nh_gap, strict=False).count if rep.nh_gap else None
        slope = gain_scaling(q, a["omega"], n_list, a["gamma"], cfg.tolerances).forward_slope \
            if a["N_list"] else None
        row = (v, _winding_value(rep.winding), rep.nh_gap, count, slope, stability(H).stable)
        return row, [(v, j + 1, r.sigma[j]) for j in range(min(8, r.N))]

    values = sorted(a["values"])
    if a["workers"] > 1:
        with ThreadPoolExecutor(max_workers=a["workers"]) as ex:
            results = list(ex.map(point, values))
    else:
        results = [point(v) for v in values]
    rows = [r for r, _ in results]
    smallest = [x for _, xs in results for x in xs]
    art.csv("sweep.csv", SCHEMAS["sweep"], rows)
    art.csv("sweep_smallest_sigma.csv", ["value", "index", "sigma"], smallest)
    art.json("sweep.json", {"param": params, "N": a["N"],
                            "rows": [dict(zip(SCHEMAS["sweep"], r)) for r in rows]})


DISPATCH = {"spectrum": _spectrum, "winding": _winding, "svd": _svd, "gssh": _gssh,
            "response": _response, "disorder": _disorder, "sweep": _sweep}


def run(config_path, overrides=(), out=None) -> int:
    """Execute a configuration; returns the process exit status."""
    try:
        cfg = load(config_path, overrides)
        art = Artifacts(Path(out or cfg.output["dir"]), cfg.output["formats"])
        ctx = {"coeffs": coefficients(cfg.params)}
        for kind in cfg.kinds:
            DISPATCH[kind](cfg, art, ctx)
        manifest = {
            "version": __version__,
            "parameters": {"reduced": cfg.params.as_dict(),
                           "coefficients": {str(k): v for k, v in
                                            ctx["coeffs"].as_dict().items()},
                           "analysis": cfg.analysis},
            "tolerances": cfg.tolerances.as_dict(),
            "files": sorted(art.files),
            "seed": cfg.analysis["disorder"]["seed"],
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        }
        write_json(art.root / "manifest.json", jsonable(manifest))
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    return 0


def plot(csv_paths, kind, out=None) -> int:
    try:
        svg_text = P.render(csv_paths, kind)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    target = Path(out) if out else Path(csv_paths[0]).with_suffix(f".{kind}.svg")
    target.write_text(svg_text)
    print(target)
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="nhbbc", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run the analyses of a TOML config")
    r.add_argument("config")
    r.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="PATH.KEY=VALUE", help="override a config entry (repeatable)")
    r.add_argument("--out", help="output directory (overrides output.dir)")
    p = sub.add_parser("plot", help="render CSV artifacts as SVG")
    p.add_argument("csv", nargs="+")
    p.add_argument("--kind", required=True, choices=P.KINDS)
    p.add_argument("--out")
    args = ap.parse_args(argv)
    try:
        if args.cmd == "run":
            return run(args.config, args.overrides, args.out)
        return plot(args.csv, args.kind, args.out)
    except Exception:  # pragma: no cover
        traceback.print_exc()
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
