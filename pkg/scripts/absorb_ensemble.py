"""Entry of a random ensemble into nested balls; reports the empirical R0.

Members are integrated in a process pool (one trajectory per task) and the
scan is merged afterwards.
"""

import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from degenbeam import diagnostics as dg
from degenbeam.cli import write_csv
from degenbeam.integrator import integrate

from _common import load_config, parser, print_table


def _run(args):
    cfg, state = args
    return integrate(state, cfg.t_end, cfg.solver, cfg.context().system(cfg.n_modes))


def main():
    p = parser(__doc__.splitlines()[0], "absorb.yaml")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    args = p.parse_args()
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    ab = cfg.diagnostics.absorb
    system = cfg.context().system(cfg.n_modes)
    states = dg.ensemble_states(system.spec, ab.size, ab.norm_range, ab.seed)
    with ProcessPoolExecutor(args.workers) as pool:
        trajs = list(pool.map(_run, [(cfg, s) for s in states]))
    rep = dg.absorb_scan(trajs, system.spec, ab.radii, dissipative=True)

    rows = []
    for j, R in enumerate(rep.radii):
        t = rep.entry_times[:, j]
        entered = np.isfinite(t)
        rows.append((R, int(entered.sum()), int(rep.exited[:, j].sum()),
                     f"{np.max(t[entered]):.3f}" if entered.any() else "inf"))
    header = ["R", "entered", "exited", "latest_entry"]
    print_table(header, rows)
    print(f"R0 = {rep.R0}" + ("" if math.isfinite(rep.R0) else " (no common ball)"))
    if args.out:
        write_csv(args.out, header, rows)


if __name__ == "__main__":
    main()
