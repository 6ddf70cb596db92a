"""Condition (C) certificates (m0, t0) for a ladder of tail thresholds."""

from degenbeam import diagnostics as dg
from degenbeam.cli import write_csv
from degenbeam.galerkin import project_initial
from degenbeam.integrator import integrate

from _common import load_config, parser, print_table


def main():
    p = parser(__doc__.splitlines()[0], "rough.yaml")
    p.add_argument("--eps", type=float, nargs="+", default=[1e-1, 3e-2, 1e-2, 3e-3, 1e-3])
    p.add_argument("--t0", type=float, default=None, help="fix t0 instead of searching")
    args = p.parse_args()
    cfg = load_config(args.config)
    system = cfg.context().system(cfg.n_modes)
    tr = integrate(project_initial(cfg.initial, system.spec), cfg.t_end, cfg.solver, system)
    rows = []
    for eps in args.eps:
        rep = dg.tail_report(tr, system.spec, cfg.params.s, range(cfg.n_modes + 1), eps, args.t0)
        if rep.certificate is None:
            rows.append((eps, "none", "none"))
        else:
            m0, t0 = rep.certificate
            rows.append((eps, m0, f"{t0:.4f}"))
    header = ["epsilon", "m0", "t0"]
    print_table(header, rows)
    if args.out:
        write_csv(args.out, header, rows)


if __name__ == "__main__":
    main()
