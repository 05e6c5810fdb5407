"""Command-line front end.

Exit codes: 0 success, 2 a verification check failed, 1 any error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import formats

__all__ = ["main", "build_parser"]


def _out_json(obj, path):
    if path:
        formats.write_json(obj, path)
    else:
        sys.stdout.write(formats.canonical_json(obj))


def _load_curve(args):
    if getattr(args, "fixture", None):
        from .fixtures import fixture

        return fixture(args.fixture)
    if not args.curve:
        raise ValueError("give --curve FILE or --fixture NAME")
    return formats.read_curve(args.curve)


def cmd_surgery(args) -> int:
    from .surgery import SurgeryConfig, surgery_decompose, verify_decomposition

    curve = _load_curve(args)
    cfg = SurgeryConfig(epsilon=args.epsilon, delta=args.delta)
    rep = surgery_decompose(curve, cfg)
    ver = verify_decomposition(curve, rep, args.epsilon, n_fields=args.n_fields, seed=args.seed)
    out = rep.to_json_dict()
    out["verification"] = {"passed": ver.passed, "checks": ver.to_json_dict()}
    _out_json(out, args.out)
    if args.plot:
        from .plotting import plot_pieces

        plot_pieces(rep.pieces, args.plot, title=f"epsilon={args.epsilon}: {len(rep.pieces)} pieces")
    return 0 if ver.passed else 2


def _field_grid(curve, n, box_factor, dim):
    from .fields import grid_around

    if curve.dim < dim:
        curve = curve.embedded(dim)
    lo, hi = curve.nodes.min(axis=0), curve.nodes.max(axis=0)
    return curve, grid_around(0.5 * (lo + hi), n, box_factor * curve.diameter, curve.dim)


def cmd_current(args) -> int:
    from .fields import loop_current

    curve, g = _field_grid(_load_curve(args), args.grid, args.box_factor, args.dim)
    F = loop_current(curve, args.width_cells * g.spacing, g)
    formats.write_vfg(F, args.out)
    _out_json({"mass": F.l1_mass(), "spacing": g.spacing, "shape": list(g.shape),
               "pre_projection_divergence": F.pre_projection_divergence}, None)
    return 0


def cmd_potential(args) -> int:
    from .fields import loop_current
    from .pde import riesz_potential_free, riesz_potential_spectral

    curve, g = _field_grid(_load_curve(args), args.grid, args.box_factor, args.dim)
    F = loop_current(curve, args.width_cells * g.spacing, g)
    if args.method == "spectral":
        I = riesz_potential_spectral(F, args.alpha)
    else:
        I = riesz_potential_free(F, args.alpha)
    formats.write_vfg(I, args.out)
    if args.plot:
        from .plotting import plot_field_slice

        plot_field_slice(I, args.plot)
    _out_json({"alpha": args.alpha, "method": args.method, "max_abs": float(np.max(np.abs(I.data))),
               "spacing": g.spacing, "shape": list(g.shape)}, None)
    return 0


def cmd_norms(args) -> int:
    from .lorentz import layercake_norm, lorentz_norm, lp_norm, rearrange

    grid = formats.read_vfg(args.field)
    r = rearrange(grid)
    q = float("inf") if args.q in ("inf", "infinity") else float(args.q)
    out = {
        "p": args.p,
        "q": q,
        "lorentz": lorentz_norm(r, args.p, q),
        "lp": lp_norm(r, args.p),
        "l1_mass": grid.l1_mass(),
        "layercake": layercake_norm(r, 1.0 / args.p),
    }
    _out_json(out, args.out)
    return 0


def cmd_divcurl(args) -> int:
    from .pde import divcurl_residuals, solve_divcurl

    F = formats.read_vfg(args.field)
    Z = solve_divcurl(F, path=args.path)
    formats.write_vfg(Z, args.out)
    res = divcurl_residuals(F, Z)
    _out_json({"curl_residual": res.curl, "div_residual": res.div, "dead_fraction": res.dead_fraction}, None)
    return 0


def cmd_poisson(args) -> int:
    from .pde import poisson_residuals, solve_poisson_vec

    F = formats.read_vfg(args.field)
    U, gU = solve_poisson_vec(F)
    formats.write_vfg(U, args.out)
    if args.grad:
        formats.write_vfg(gU, args.grad)
    res = poisson_residuals(F, U, gU)
    _out_json({"laplace_residual": res.laplace, "gradient_residual": res.gradient}, None)
    return 0


def cmd_verify(args) -> int:
    from .campaign import DEFAULT_CAMPAIGN, load_campaign, run_campaign, write_campaign

    cfg = load_campaign(args.campaign if args.campaign else DEFAULT_CAMPAIGN)
    result = run_campaign(cfg)
    paths = write_campaign(result, args.out, figures=not args.no_figures)
    for name, ok in result["checks"].items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    print(f"wrote {len(paths)} files to {args.out}")
    return 0 if result["passed"] else 2


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="loopforge", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def curve_args(p):
        p.add_argument("--curve", help="curve JSON file")
        p.add_argument("--fixture", help="built-in fixture name instead of a file")

    def grid_args(p):
        p.add_argument("--grid", type=int, default=64, help="cells per axis")
        p.add_argument("--box-factor", type=float, default=8.0, help="box side over curve diameter")
        p.add_argument("--width-cells", type=float, default=4.0, help="mollifier half-width in cells")
        p.add_argument("--dim", type=int, default=3, help="embed planar curves in this dimension")

    p = sub.add_parser("surgery", help="decompose a curve and verify the pieces")
    curve_args(p)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--n-fields", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="report JSON (stdout if omitted)")
    p.add_argument("--plot", help="write a figure of the pieces here")
    p.set_defaults(func=cmd_surgery)

    p = sub.add_parser("current", help="mollified loop current on a grid")
    curve_args(p)
    grid_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_current)

    p = sub.add_parser("potential", help="Riesz potential of a mollified loop current")
    curve_args(p)
    grid_args(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--method", choices=["spectral", "free"], default="spectral")
    p.add_argument("--out", required=True)
    p.add_argument("--plot", help="write a figure of the middle slice here")
    p.set_defaults(func=cmd_potential)

    p = sub.add_parser("norms", help="Lorentz and layer-cake norms of a field")
    p.add_argument("--field", required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--q", default="1")
    p.add_argument("--out")
    p.set_defaults(func=cmd_norms)

    p = sub.add_parser("divcurl", help="solve curl Z = F, div Z = 0")
    p.add_argument("--field", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--path", choices=["laplacian", "riesz"], default="laplacian")
    p.set_defaults(func=cmd_divcurl)

    p = sub.add_parser("poisson", help="solve -Delta U = F")
    p.add_argument("--field", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--grad")
    p.set_defaults(func=cmd_poisson)

    p = sub.add_parser("verify", help="run a verification campaign")
    p.add_argument("--campaign", help="campaign JSON (built-in default if omitted)")
    p.add_argument("--out", default="loopforge-report")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return int(args.func(args))
    except (OSError, ValueError, KeyError, RuntimeError) as e:
        print(f"loopforge {args.command}: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
