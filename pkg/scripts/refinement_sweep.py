"""Galerkin refinement errors and smoothing suprema across truncation levels."""

from degenbeam import diagnostics as dg
from degenbeam.cli import write_csv
from degenbeam.galerkin import InitialData

from _common import load_config, parser, print_table


def main():
    p = parser(__doc__.splitlines()[0], "rough.yaml")
    p.add_argument("--n", type=int, nargs="+", default=[16, 32, 64, 128])
    p.add_argument("--smooth-r", type=float, default=3.0,
                   help="decay rate of the smooth datum used for e_N")
    p.add_argument("--t", type=float, default=1.0, help="comparison time for e_N")
    args = p.parse_args()
    cfg = load_config(args.config)
    ctx = cfg.context()

    errs = dg.galerkin_refinement(ctx, InitialData("decay", r=args.smooth_r, amp_v=0.5),
                                  args.n, args.t)
    t_min = cfg.diagnostics.smoothing.t_min if cfg.diagnostics.smoothing else 0.1
    sm = dg.smoothing_refinement(ctx, cfg.initial, args.n, cfg.t_end, t_min)

    rows = []
    prev = None
    for n in sorted(errs):
        ratio = "" if prev is None else f"{errs[n] / prev:.3f}"
        rows.append((n, f"{errs[n]:.3e}", ratio, f"{sm.refinement[n]:.6f}"))
        prev = errs[n]
    header = ["N", "e_N", "e_N/e_prev", "smoothing_sup"]
    print_table(header, rows)
    print(f"smoothing refinement ratio {sm.refinement_ratio:.6f}")
    if args.out:
        write_csv(args.out, header, rows)


if __name__ == "__main__":
    main()
