"""Verification campaigns: surgery, Riesz potentials of loop currents and
their Lorentz / layer-cake norms over fixture curves, dilations and
mollification ladders, with a point-mass control."""

from __future__ import annotations

import copy
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import formats
from .fields import FieldGrid, dirac_family, grid_around, loop_current
from .fixtures import fixture
from .geometry import Curve
from .lorentz import layercake_norm, lorentz_norm, rearrange, split_layercake
from .pde import exterior_tail, riesz_potential_free, riesz_potential_spectral
from .surgery import SurgeryConfig, surgery_decompose, verify_decomposition

__all__ = [
    "CAMPAIGN_VERSION",
    "DEFAULT_CAMPAIGN",
    "CampaignError",
    "load_campaign",
    "band",
    "potential_norms",
    "dilation_ladder",
    "mollification_ladder",
    "dirac_ladder",
    "run_item",
    "run_campaign",
    "write_campaign",
    "worker_count",
]

CAMPAIGN_VERSION = 1

DEFAULT_CAMPAIGN = {
    "campaign_version": 1,
    "fixtures": ["circle", "stadium", "folded", "trefoil"],
    "alphas": [0.5],
    "epsilons": [0.01],
    "dim": 3,
    "grid": {"n": 64, "box_factor": 8.0, "width_cells": 4, "ladder": [8, 4, 2]},
    "dilations": [0.5, 1.0, 2.0, 4.0],
    "dirac_box": 16.0,
    "seed": 0,
    "n_fields": 50,
    "tolerances": {"dilation": 0.05, "ladder": 0.15},
}


class CampaignError(ValueError):
    pass


def load_campaign(path_or_dict) -> dict:
    """Read a campaign JSON and fill unset keys from the defaults."""
    if isinstance(path_or_dict, dict):
        raw = copy.deepcopy(path_or_dict)
    else:
        import json

        with open(path_or_dict) as fh:
            raw = json.load(fh)
    if raw.get("campaign_version") != CAMPAIGN_VERSION:
        raise CampaignError(f"campaign_version must be {CAMPAIGN_VERSION}")
    cfg = copy.deepcopy(DEFAULT_CAMPAIGN)
    for k, v in raw.items():
        if isinstance(v, dict) and isinstance(cfg.get(k), dict):
            cfg[k].update(v)
        else:
            cfg[k] = v
    unknown = set(cfg) - set(DEFAULT_CAMPAIGN)
    if unknown:
        raise CampaignError(f"unknown campaign keys: {sorted(unknown)}")
    for a in cfg["alphas"]:
        if not 0 < a < cfg["dim"]:
            raise CampaignError(f"alpha {a} outside (0, d)")
    return cfg


def band(values) -> float:
    """Half-width of the tightest band c (1 +- b) containing all values."""
    v = np.asarray(values, float)
    return float((v.max() - v.min()) / (v.max() + v.min()))


def worker_count(n_items: int) -> int:
    cap = os.environ.get("LOOPFORGE_THREADS")
    n = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(n, n_items))


def _prepare(curve: Curve, dim: int) -> Curve:
    if curve.dim < dim:
        return curve.embedded(dim)
    if curve.dim > dim:
        raise CampaignError(f"a {curve.dim}-d curve cannot run in a {dim}-d campaign")
    return curve


def _grid_for(curve: Curve, n: int, box_factor: float, lam: float = 1.0) -> FieldGrid:
    lo, hi = curve.nodes.min(axis=0), curve.nodes.max(axis=0)
    return grid_around(lam * 0.5 * (lo + hi), n, lam * box_factor * curve.diameter, curve.dim)


def potential_norms(curves, grid: FieldGrid, alpha: float, width: float) -> dict:
    """Norms of I_a F for F the (sum of) mollified currents of ``curves``.

    I_a F is the periodic spectral potential on ``grid`` plus the far-field
    tail outside the box.  ``mass`` is the L1 mass of the mollified current
    before the divergence-free projection.
    """
    d = grid.dim
    raw = np.zeros(grid.shape + (d,))
    for c in curves:
        raw += loop_current(c, width, grid, project=False).data
    F0 = grid.with_data(raw)
    from .spectral import leray_project

    F = grid.with_data(leray_project(raw, grid.spacing))
    I = riesz_potential_spectral(F, alpha)
    r = rearrange(I)
    tail = exterior_tail(F, "potential", alpha)
    theta = (d - alpha) / d
    lc = layercake_norm(r, theta, tail)
    part_I, part_II = split_layercake(r, theta, 1.0, tail)
    return {
        "mass": F0.l1_mass(),
        "length": float(sum(c.length for c in curves)),
        "lorentz": lorentz_norm(r, 1.0 / theta, 1, tail),
        "layercake": lc,
        "split_below_1": part_I,
        "split_above_1": part_II,
    }


def dilation_ladder(curve: Curve, alpha: float, n: int, box_factor: float, width_cells: float, lams) -> list:
    """Lorentz ratio of the dilated curve on the correspondingly dilated grid."""
    rows = []
    for lam in lams:
        c = curve.scaled(lam, center=np.zeros(curve.dim))
        g = _grid_for(curve, n, box_factor, lam)
        out = potential_norms([c], g, alpha, width_cells * g.spacing)
        rows.append({"lambda": float(lam), "ratio": out["lorentz"] / out["mass"], "mass": out["mass"]})
    return rows


def mollification_ladder(curve: Curve, alpha: float, n: int, box_factor: float, ladder) -> list:
    g = _grid_for(curve, n, box_factor)
    rows = []
    for wc in ladder:
        out = potential_norms([curve], g, alpha, wc * g.spacing)
        rows.append({"width_cells": float(wc), "ratio": out["lorentz"] / out["mass"], "mass": out["mass"]})
    return rows


def dirac_ladder(alpha: float, n: int, box: float, ladder, dim: int = 3) -> list:
    """Lorentz norm of I_a of unit point masses mollified at each width.

    The free-space potential is used: a point mass is not mean-free, so the
    periodic one would subtract a uniform background.  The norm is taken
    over the box only, since I_a of a point mass has no finite
    L^(d/(d-a),1) norm on all of R^d.
    """
    g = grid_around(None, n, box, dim, ncomp=1)
    fam = dirac_family([wc * g.spacing for wc in ladder], g)
    p = dim / (dim - alpha)
    rows = []
    for wc, f in zip(ladder, fam):
        val = lorentz_norm(rearrange(riesz_potential_free(f, alpha)), p, 1)
        rows.append({"width_cells": float(wc), "ratio": val / f.l1_mass()})
    return rows


def run_item(name: str, cfg: dict) -> dict:
    """Every per-fixture computation of a campaign."""
    dim = cfg["dim"]
    gcfg = cfg["grid"]
    curve = _prepare(fixture(name), dim)
    item = {"fixture": name, "length": curve.length, "surgery": [], "potential": []}
    pieces_for = {}
    for eps in cfg["epsilons"]:
        rep = surgery_decompose(curve, SurgeryConfig(epsilon=eps))
        ver = verify_decomposition(curve, rep, eps, n_fields=cfg["n_fields"], seed=cfg["seed"])
        pieces_for[eps] = rep.pieces
        item["surgery"].append(
            {
                "epsilon": eps,
                "n_pieces": len(rep.pieces),
                "T1": rep.T1,
                "T2": rep.T2,
                "delta": rep.delta,
                "length_out": rep.total_length_out,
                "passed": ver.passed,
                "checks": ver.to_json_dict(),
            }
        )
    g = _grid_for(curve, gcfg["n"], gcfg["box_factor"])
    width = gcfg["width_cells"] * g.spacing
    pieces = pieces_for[cfg["epsilons"][0]]
    for alpha in cfg["alphas"]:
        whole = potential_norms([curve], g, alpha, width)
        per_piece = [potential_norms([p], g, alpha, width) for p in pieces]
        piece_sum = float(sum(p["layercake"] for p in per_piece))
        piece_ratios = [p["layercake"] / p["length"] for p in per_piece]
        item["potential"].append(
            {
                "alpha": alpha,
                "whole": whole,
                "ratio_lorentz": whole["lorentz"] / whole["mass"],
                "ratio_layercake_length": whole["layercake"] / curve.length,
                "piece_sum_layercake": piece_sum,
                "ratio_piece_sum_length": piece_sum / curve.length,
                "piece_ratio_min": float(min(piece_ratios)),
                "piece_ratio_max": float(max(piece_ratios)),
                "dilation": dilation_ladder(curve, alpha, gcfg["n"], gcfg["box_factor"], gcfg["width_cells"], cfg["dilations"]),
                "ladder": mollification_ladder(curve, alpha, gcfg["n"], gcfg["box_factor"], gcfg["ladder"]),
            }
        )
    return item


def _item_checks(item: dict, tol: dict) -> dict:
    out = {"surgery": all(s["passed"] for s in item["surgery"])}
    for p in item["potential"]:
        a = p["alpha"]
        dil = [r["ratio"] for r in p["dilation"]]
        ref = dict(zip([r["lambda"] for r in p["dilation"]], dil)).get(1.0, dil[0])
        out[f"alpha={a}:finite"] = bool(np.isfinite(p["ratio_lorentz"]))
        out[f"alpha={a}:dilation"] = bool(max(abs(x / ref - 1) for x in dil) <= tol["dilation"])
        out[f"alpha={a}:ladder"] = band([r["ratio"] for r in p["ladder"]]) <= tol["ladder"]
        # |||.||| is a norm here (it equals the L^(p,1) norm over p)
        out[f"alpha={a}:piece_sum"] = bool(p["whole"]["layercake"] <= p["piece_sum_layercake"] * (1 + 1e-9))
    return out


def run_campaign(cfg: dict) -> dict:
    cfg = load_campaign(cfg)
    names = list(cfg["fixtures"])
    with ThreadPoolExecutor(max_workers=worker_count(len(names))) as pool:
        items = list(pool.map(lambda n: run_item(n, cfg), names))
    gcfg = cfg["grid"]
    dirac = [{"alpha": a, "rows": dirac_ladder(a, gcfg["n"], cfg["dirac_box"], gcfg["ladder"], cfg["dim"])} for a in cfg["alphas"]]
    checks = {}
    for it in items:
        for k, v in _item_checks(it, cfg["tolerances"]).items():
            checks[f"{it['fixture']}:{k}"] = v
    for dr in dirac:
        r = [x["ratio"] for x in dr["rows"]]
        checks[f"dirac:alpha={dr['alpha']}:increasing"] = bool(all(b > a for a, b in zip(r, r[1:])))
    return {
        "campaign_version": CAMPAIGN_VERSION,
        "config": cfg,
        "config_hash": formats.config_hash(cfg),
        "items": items,
        "dirac": dirac,
        "checks": checks,
        "passed": all(checks.values()),
    }


def _csv(path: Path, chash: str, header, rows):
    lines = [f"# config_hash={chash}", ",".join(header)]
    for r in rows:
        lines.append(",".join(repr(x) if isinstance(x, float) else str(x) for x in r))
    path.write_text("\n".join(lines) + "\n")


def write_campaign(result: dict, out_dir, figures: bool = True) -> list:
    """Write report.json, CSV tables and (optionally) figures; returns paths."""
    from . import plotting

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    h = result["config_hash"]
    written = []
    p = out / "report.json"
    formats.write_json(result, p)
    written.append(p)
    ratio_rows, lad_rows, dil_rows = [], [], []
    for it in result["items"]:
        n_pieces = it["surgery"][0]["n_pieces"]
        for pot in it["potential"]:
            w = pot["whole"]
            ratio_rows.append(
                (it["fixture"], pot["alpha"], n_pieces, pot["ratio_lorentz"], pot["ratio_layercake_length"],
                 pot["ratio_piece_sum_length"], w["split_below_1"], w["split_above_1"])
            )
            lad_rows += [(it["fixture"], pot["alpha"], r["width_cells"], r["ratio"]) for r in pot["ladder"]]
            dil_rows += [(it["fixture"], pot["alpha"], r["lambda"], r["ratio"]) for r in pot["dilation"]]
    for dr in result["dirac"]:
        lad_rows += [("dirac", dr["alpha"], r["width_cells"], r["ratio"]) for r in dr["rows"]]
    tables = {
        "ratios.csv": (["fixture", "alpha", "n_pieces", "lorentz_over_mass", "layercake_over_length",
                        "piece_sum_over_length", "layercake_below_1", "layercake_above_1"], ratio_rows),
        "ladder.csv": (["series", "alpha", "width_cells", "ratio"], lad_rows),
        "dilation.csv": (["fixture", "alpha", "lambda", "ratio"], dil_rows),
    }
    for name, (hdr, rows) in tables.items():
        _csv(out / name, h, hdr, rows)
        written.append(out / name)
    if figures:
        tag = f"config_hash={h}"
        series = {}
        widths = None
        for row in lad_rows:
            series.setdefault(f"{row[0]} a={row[1]}", []).append(row[3])
            widths = widths or sorted({r[2] for r in lad_rows}, reverse=True)
        plotting.plot_ladder(widths, series, out / "ladder.png", tag=tag)
        dseries, lams = {}, sorted({r[2] for r in dil_rows})
        for row in dil_rows:
            dseries.setdefault(f"{row[0]} a={row[1]}", []).append(row[3])
        plotting.plot_dilation(lams, dseries, out / "dilation.png", tag=tag)
        written += [out / "ladder.png", out / "dilation.png"]
    return written
