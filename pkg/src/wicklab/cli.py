"""Command-line front end: experiment subcommands with reproducible outputs.

Subcommands: sample, wick, solve, trees, inflate, as-inflate, converge,
oracle.  A YAML config file can preset any flag (flags win); every run that
writes outputs also writes a manifest with the fully resolved configuration.
Same config + same seed gives byte-identical outputs.

Exit codes: 0 success, 2 configuration error, 3 numerical-accuracy failure,
4 infeasibility.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .dynamics import BlowupError, EquationSpec, solve
from .fields import FieldPair, Lattice, SpectralField, fourier_lebesgue_norm, sobolev_norm
from .gaussian import (
    covariance_oracle,
    gff_wick_source,
    sample_gff,
    sigma_truncated,
    wick_moment_mc,
)
from .inflation import (
    FeasibilityError,
    f_of_A,
    make_plan,
    run_almost_sure_inflation,
    run_deterministic_inflation,
    select_parameters,
    xi1_lower_bound_check,
)
from .trees import enumerate_trees, tree_count, xi_norm_table

SCHEMA = "wicklab.report.v1"


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return dataclasses.asdict(obj)
    raise TypeError(f"not serializable: {type(obj)}")


def _dump_json(path: Path, payload):
    text = json.dumps(payload, sort_keys=True, indent=1, default=_json_default)
    path.write_text(text + "\n")


def _dump_csv(path: Path, fieldnames, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in fieldnames})


def _outdir(args):
    if not getattr(args, "out", None):
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(out: Path, args, command):
    cfg = {k: v for k, v in vars(args).items() if k not in ("func", "config") and v is not None}
    _dump_json(out / "manifest.json", {"schema": SCHEMA, "version": __version__, "command": command, "config": cfg})


def _parse_mode(text):
    return tuple(int(c) for c in text.split(","))


# -- subcommands ---------------------------------------------------------------


def cmd_sample(args):
    lat = Lattice(args.d, args.M)
    pair = sample_gff(lat, args.seed)
    payload = {
        "schema": SCHEMA,
        "seed": args.seed,
        "pos": pair.pos.to_record(tol=0.0),
        "vel": pair.vel.to_record(tol=0.0),
        "hs_norm_s": args.s,
        "hs_norm": pair.sobolev_norm(args.s),
    }
    out = _outdir(args)
    if out:
        _manifest(out, args, "sample")
        _dump_json(out / "sample.json", payload)
    else:
        print(json.dumps({"hs_norm": payload["hs_norm"]}, sort_keys=True))
    return 0


def cmd_wick(args):
    lat = Lattice(args.d, args.M)
    mc = wick_moment_mc(lat, args.N, args.l, args.samples, args.seed)
    mean, se = mc[args.l]
    rows = []
    window = args.window
    for idx in np.ndindex(*lat.shape):
        n = tuple(int(i) - lat.M for i in idx)
        if max(abs(c) for c in n) > window:
            continue
        _, exact = covariance_oracle(args.l, n, lat.d, ("truncated", args.N, args.N))
        rows.append(
            {
                "l": args.l,
                "n": ",".join(str(c) for c in n),
                "exact": exact,
                "mc_mean": float(mean[idx]),
                "mc_se": float(se[idx]),
                "samples": args.samples,
            }
        )
    out = _outdir(args)
    if out:
        _manifest(out, args, "wick")
        _dump_csv(out / "covariance.csv", ["l", "n", "exact", "mc_mean", "mc_se", "samples"], rows)
        _dump_json(out / "covariance.json", {"schema": SCHEMA, "rows": rows})
    worst = max(abs(r["mc_mean"] - r["exact"]) / r["mc_se"] for r in rows if r["mc_se"] > 0)
    print(f"modes={len(rows)} worst_deviation_se={worst:.3f}")
    return 0


def _solve_data(args, lat):
    if args.data == "zero":
        return FieldPair.zero(lat)
    if args.data.startswith("constant:"):
        c = float(args.data.split(":", 1)[1])
        return FieldPair(c * SpectralField.one(lat), SpectralField.zero(lat))
    if args.data == "gff":
        return sample_gff(lat, args.seed)
    raise ValueError(f"unknown data source {args.data!r}")


def cmd_solve(args):
    _require(args, "t-end")
    lat = Lattice(args.d, args.M)
    data = _solve_data(args, lat)
    if args.variant == "plain":
        spec = EquationSpec.plain_cubic(mass=args.mass)
    elif args.variant == "linear":
        spec = EquationSpec.linear(mass=args.mass)
    elif args.variant == "truncated-wick":
        spec = EquationSpec.truncated_wick(args.N if args.N is not None else lat.M)
    elif args.variant == "residual-wick":
        src = gff_wick_source(lat, args.seed, args.N, "solve")
        spec = EquationSpec.residual_wick(src)
    else:
        raise ValueError(f"unknown variant {args.variant!r}")

    observers = {}
    for s in args.observe_hs or []:
        observers[f"hs[{s}]"] = lambda st, t, s=s: sobolev_norm(st.pos, s)
    for sp in args.observe_fl or []:
        s, p = (float(x) for x in sp.split(":"))
        observers[f"fl[{s},{p}]"] = lambda st, t, s=s, p=p: fourier_lebesgue_norm(st.pos, s, p)

    traj = solve(spec, data, args.t_end, dt=args.dt, observers=observers,
                 checkpoint_times=[args.t_end], q=args.q, npic=args.npic)
    names = list(traj.diagnostics)
    rows = [
        dict({"t": t}, **{name: traj.diagnostics[name][i] for name in names})
        for i, t in enumerate(traj.times)
    ]
    out = _outdir(args)
    if out:
        _manifest(out, args, "solve")
        _dump_csv(out / "trajectory.csv", ["t"] + names, rows)
        if args.snapshot:
            _dump_json(out / "final_state.json", traj.checkpoints[-1][1].pos.to_record(tol=1e-300))
    if traj.blown_up:
        print(f"blowup at t={traj.t_last}")
        return 3
    print(f"t_end={traj.t_last} " + " ".join(f"{n}={traj.diagnostics[n][-1]:.6g}" for n in names))
    return 0


def cmd_trees(args):
    _require(args, "j")
    if args.count:
        trees = enumerate_trees(args.j)
        assert len(trees) == tree_count(args.j)
        print(len(trees))
        return 0
    lat = Lattice(args.d, args.M)
    data = sample_gff(lat, args.seed)
    t_grid = [float(x) for x in str(args.t).split(",")]
    rows = xi_norm_table(data, args.j, t_grid)
    out = _outdir(args)
    if out:
        _manifest(out, args, "trees")
        _dump_csv(out / "xi_norms.csv", ["x", "y", "series"], rows)
    for r in rows:
        print(f"{r['series']} t={r['x']:g} fl1={r['y']:.6g}")
    return 0


def _ladder(text):
    return [int(x) for x in text.split(",")]


def cmd_inflate(args):
    _require(args, "s", "ladder")
    rows = []
    for N in _ladder(args.ladder):
        plan = make_plan(args.d, args.s, N, n=args.n, delta=args.delta, theta=args.theta)
        base_data = None
        if args.base == "smooth":
            lat = plan.lattice()
            c = args.base_amp
            base_data = FieldPair(
                SpectralField.from_modes(
                    lat, {(0,) * lat.d: c, (1, 0)[: lat.d]: c / 4, (-1, 0)[: lat.d]: c / 4}
                ),
                SpectralField.zero(lat),
            )
        rep = run_deterministic_inflation(plan, base_data=base_data, dt=args.dt, q=args.q, npic=args.npic)
        row = {
            "N": N, "A": plan.A, "R": plan.R, "T": plan.T,
            "phi_hs": rep.data_hs, "phi_fl": rep.data_fl,
            "u_hs_at_T": rep.u_hs_at_T, "u_hs_max": rep.u_hs_max,
            "xi1_hs": rep.xi1_hs_at_T, "xi0_hs": rep.xi0_hs_at_T,
            "mixed_hs": rep.mixed_hs_at_T, "tail_bound": rep.tail_bound_at_T,
            "growth_ok": rep.growth_ok,
        }
        for name, m in plan.margins.items():
            row[f"margin_{name}"] = m
        rows.append(row)
        print(f"N={N} phi_hs={rep.data_hs:.5g} u_hs={rep.u_hs_at_T:.5g} xi1={rep.xi1_hs_at_T:.5g}")
    out = _outdir(args)
    if out:
        _manifest(out, args, "inflate")
        _dump_csv(out / "growth.csv", list(rows[0]), rows)
    return 0


def cmd_as_inflate(args):
    _require(args, "s", "ladder")
    rows = []
    aggregates = []
    for N in _ladder(args.ladder):
        plan = make_plan(args.d, args.s, N, n=args.n, delta=args.delta, theta=args.theta)
        res = run_almost_sure_inflation(
            plan, seeds=range(args.seeds), alpha=args.alpha, master_seed=args.seed,
            dt=args.dt, q=args.q, npic=args.npic,
        )
        for r in res["reports"]:
            rows.append(
                {
                    "N": N, "seed": r.seed, "w_hs_at_T": r.w_hs_at_T,
                    "u_hs_at_T": r.u_hs_at_T, "gap": r.gap, "passed": r.passed,
                    "lwp_T_guaranteed": r.lwp_T_guaranteed,
                }
            )
        aggregates.append(
            {
                "N": N, "pass_fraction": res["pass_fraction"], "gap_median": res["gap_median"],
                "growth_target": res["growth_target"], "alpha_exponent": res["alpha_exponent"],
            }
        )
        print(f"N={N} pass_fraction={res['pass_fraction']:.3f} gap_median={res['gap_median']:.5g}")
    out = _outdir(args)
    if out:
        _manifest(out, args, "as-inflate")
        _dump_csv(out / "seeds.csv", list(rows[0]), rows)
        _dump_json(out / "aggregate.json", {"schema": SCHEMA, "points": aggregates})
    return 0


def cmd_converge(args):
    from .convergence import convergence_experiment

    lat = Lattice(2, args.M)
    deltas = [float(x) for x in args.delta_ladder.split(",")]
    kernels = args.kernel.split(",")
    exp = convergence_experiment(
        kernels, deltas, seeds=range(args.seeds), T=args.T, s0=args.s0,
        lattice=lat, master_seed=args.seed,
    )
    rows = []
    for run in exp["runs"]:
        for delta in run.deltas:
            for t, dist in run.per_checkpoint.get(delta, []):
                rows.append(
                    {
                        "seed": run.seed, "kernel": run.kernel, "delta": delta,
                        "T": run.T, "sup_distance": run.sup_distance[delta],
                        "t": t, "distance": dist,
                    }
                )
    out = _outdir(args)
    if out:
        _manifest(out, args, "converge")
        _dump_csv(out / "ladder.csv",
                  ["seed", "kernel", "delta", "T", "sup_distance", "t", "distance"], rows)
        _dump_json(out / "aggregate.json", {
            "schema": SCHEMA,
            "mono_fraction": exp["mono_fraction"],
            "cross_kernel_worst_ratio": exp["cross_kernel_worst_ratio"],
        })
    print(f"mono_fraction={exp['mono_fraction']} worst_ratio={exp['cross_kernel_worst_ratio']:.3f}")
    return 0


def _require(args, *names):
    for name in names:
        if getattr(args, name.replace("-", "_"), None) is None:
            raise ValueError(f"--{name} is required")


def cmd_oracle(args):
    _require(args, "op")
    if args.op == "sigma":
        print(f"{sigma_truncated(args.N, args.d):.12g}")
        return 0
    if args.op == "covariance":
        n = _parse_mode(args.mode)
        g, m = covariance_oracle(args.l, n, args.d, ("truncated", args.N, args.N))
        print(f"gamma_sum={g:.12g} moment={m:.12g}")
        return 0
    if args.op == "fA":
        print(f"{f_of_A(args.s, args.d, args.A):.12g}")
        return 0
    if args.op == "conditions":
        plan = make_plan(args.d, args.s, args.N, n=args.n, delta=args.delta, theta=args.theta)
        payload = {
            "case": plan.case, "N": plan.N, "A": plan.A, "R": plan.R, "T": plan.T,
            "exponents": plan.exponents["conditions"], "margins": plan.margins,
        }
        print(json.dumps(payload, sort_keys=True, default=_json_default))
        return 0
    if args.op == "xi1":
        plan = make_plan(args.d, args.s, args.N, n=args.n, delta=args.delta, theta=args.theta)
        rep = xi1_lower_bound_check(plan)
        print(json.dumps({k: rep[k] for k in ("t_exponent", "c_per_mode", "c_norm", "support_ok")},
                         sort_keys=True, default=_json_default))
        return 0
    if args.op == "select":
        plan = select_parameters(args.d, args.s, args.n, budget_M=args.budget,
                                 delta=args.delta, theta=args.theta)
        print(json.dumps({"N": plan.N, "A": plan.A, "R": plan.R, "T": plan.T,
                          "margins": plan.margins}, sort_keys=True, default=_json_default))
        return 0
    raise ValueError(f"unknown oracle op {args.op!r}")


# -- wiring --------------------------------------------------------------------


def build_parser():
    top = argparse.ArgumentParser(prog="wicklab", description=__doc__)
    top.add_argument("--config", help="YAML file presetting flags (flags override)")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="output directory")
        p.add_argument("--threads", type=int, default=1, help="FFT thread budget")

    p = sub.add_parser("sample", help="draw the Gaussian data pair")
    common(p)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--M", type=int, default=16)
    p.add_argument("--s", type=float, default=-0.5)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("wick", help="Monte Carlo Wick moments vs the exact oracle")
    common(p)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--M", type=int, default=4)
    p.add_argument("--N", type=int, default=4)
    p.add_argument("--l", type=int, default=2)
    p.add_argument("--samples", type=int, default=20000)
    p.add_argument("--window", type=int, default=4, help="report modes with |n_i| <= window")
    p.set_defaults(func=cmd_wick)

    p = sub.add_parser("solve", help="integrate one equation variant")
    common(p)
    p.add_argument("--variant", default="plain",
                   choices=["plain", "linear", "truncated-wick", "residual-wick"])
    p.add_argument("--data", default="zero", help="zero | constant:<c> | gff")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--M", type=int, default=8)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--mass", type=float, default=1.0)
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--q", type=int, default=3)
    p.add_argument("--npic", type=int, default=3)
    p.add_argument("--observe-hs", action="append", type=float)
    p.add_argument("--observe-fl", action="append", help="s:p")
    p.add_argument("--snapshot", action="store_true")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("trees", help="tree counts and expansion-term norms")
    common(p)
    p.add_argument("--j", type=int)
    p.add_argument("--count", action="store_true")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--M", type=int, default=2)
    p.add_argument("--t", default="0.05", help="time or comma list of times")
    p.set_defaults(func=cmd_trees)

    p = sub.add_parser("inflate", help="deterministic growth ladder")
    common(p)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--s", type=float)
    p.add_argument("--ladder", help="comma list of N")
    p.add_argument("--n", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--base", default="zero", choices=["zero", "smooth"])
    p.add_argument("--base-amp", dest="base_amp", type=float, default=0.5)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--q", type=int, default=3)
    p.add_argument("--npic", type=int, default=2)
    p.set_defaults(func=cmd_inflate)

    p = sub.add_parser("as-inflate", help="almost-sure growth ladder over seeds")
    common(p)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--s", type=float)
    p.add_argument("--ladder")
    p.add_argument("--n", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seeds", type=int, default=8)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--npic", type=int, default=2)
    p.set_defaults(func=cmd_as_inflate)

    p = sub.add_parser("converge", help="mollified runs vs the rough-data flow")
    common(p)
    p.add_argument("--kernel", default="fejer,tent")
    p.add_argument("--delta-ladder", dest="delta_ladder", default="0.5,0.25,0.125,0.0625")
    p.add_argument("--seeds", type=int, default=4)
    p.add_argument("--s0", type=float, default=0.75)
    p.add_argument("--T", type=float, default=0.25)
    p.add_argument("--M", type=int, default=16)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("oracle", help="exact lattice-sum oracles")
    common(p)
    p.add_argument("--op",
                   choices=["sigma", "covariance", "fA", "conditions", "xi1", "select"])
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--N", type=int, default=1)
    p.add_argument("--l", type=int, default=2)
    p.add_argument("--mode", default="0,0", help="target mode, comma separated")
    p.add_argument("--s", type=float, default=-1.2)
    p.add_argument("--A", type=int, default=4)
    p.add_argument("--n", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--budget", type=int, default=512)
    p.set_defaults(func=cmd_oracle)

    return top


def _apply_config(parser, argv):
    """Read --config (if any) and re-parse with file values as defaults."""
    ns, _ = parser.parse_known_args(argv)
    path = getattr(ns, "config", None)
    if not path:
        return parser.parse_args(argv)
    with open(path) as fh:
        cfg = yaml.safe_load(fh) or {}
    section = cfg.get(ns.command, cfg)
    if not isinstance(section, dict):
        raise ValueError(f"config section for {ns.command!r} must be a mapping")
    for action in parser._subparsers._group_actions:
        if ns.command in getattr(action, "choices", {}):
            subparser = action.choices[ns.command]
            known = {a.dest for a in subparser._actions}
            unknown = {k for k in section if k.replace("-", "_") not in known}
            if unknown:
                raise ValueError(f"unknown config keys {sorted(unknown)}")
            subparser.set_defaults(**{k.replace("-", "_"): v for k, v in section.items()})
    return parser.parse_args(argv)


def main(argv=None):
    parser = build_parser()
    try:
        args = _apply_config(parser, sys.argv[1:] if argv is None else list(argv))
    except (ValueError, OSError, yaml.YAMLError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    from .fields import set_fft_workers

    set_fft_workers(getattr(args, "threads", 1))
    try:
        return args.func(args)
    except FeasibilityError as err:
        print(f"infeasible: {err}", file=sys.stderr)
        return 4
    except BlowupError as err:
        print(f"blowup: {err}", file=sys.stderr)
        return 3
    except RuntimeError as err:
        print(f"accuracy failure: {err}", file=sys.stderr)
        return 3
    except ValueError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
