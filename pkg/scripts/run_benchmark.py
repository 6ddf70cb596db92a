"""Energy-equality audit of the benchmark run across a tolerance ladder.

Prints the worst residual |E + z - E(0)| and step count for each rtol; the
residual should fall roughly in proportion to rtol.
"""

import dataclasses

from degenbeam.cli import write_csv
from degenbeam.galerkin import project_initial
from degenbeam.integrator import audit_tolerance, energy_residual, integrate

from _common import load_config, parser, print_table


def main():
    p = parser(__doc__.splitlines()[0], "benchmark.yaml")
    p.add_argument("--rtols", type=float, nargs="+", default=[1e-7, 1e-8, 1e-9, 1e-10])
    args = p.parse_args()
    cfg = load_config(args.config)
    system = cfg.context().system(cfg.n_modes)
    x0 = project_initial(cfg.initial, system.spec)
    rows = []
    for rtol in args.rtols:
        solver = dataclasses.replace(cfg.solver, rtol=rtol, atol=rtol * 1e-3)
        tr = integrate(x0, cfg.t_end, solver, system)
        worst = energy_residual(tr, system)[1]
        rows.append((f"{rtol:.0e}", f"{worst:.3e}", f"{audit_tolerance(tr, system):.3e}",
                     tr.steps, tr.rejected))
    header = ["rtol", "max_residual", "tolerance", "steps", "rejected"]
    print_table(header, rows)
    if args.out:
        write_csv(args.out, header, rows)


if __name__ == "__main__":
    main()
