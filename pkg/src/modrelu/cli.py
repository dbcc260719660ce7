"""Command line: ``modrelu <subcommand> ...``.

Exit status is 0 on success, 1 on validation errors, 2 on runtime failures.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from . import bounds as B
from .bridge import embed_sparse_to_modified, verify_inclusion_chain
from .datagen import NoiseModel, make_target, mc_l2_error, read_dataset, sample_dataset, write_dataset
from .harness import CONFIG_HELP, ConfigError, StudyConfig, load_config, run_rate_study, write_report
from .network import Architecture, ModelFormatError, forward, load_model, save_model
from .training import PenaltySpec, TrainConfig, TrainingDiverged, gradient_check, train


def _globals_parser(suppress: bool) -> argparse.ArgumentParser:
    default = argparse.SUPPRESS if suppress else None
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=default, help="base random seed (default 0)")
    g.add_argument("--config", default=default, help="study config file (sections/keys: see rate-study --help)")
    g.add_argument("--out", default=default, help="output directory (default: current directory)")
    g.add_argument("--threads", type=int, default=default, help="worker processes for rate-study (default 1)")
    return p


def _target_args(p):
    p.add_argument("--family", default="holder_abs", choices=["holder_abs", "cosine_mix", "teacher_network"])
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--F", type=float, default=1.0)
    p.add_argument("--d", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="modrelu", parents=[_globals_parser(False)],
                                     description="Modified ReLU networks: training, embedding and bound calculators.")
    sub = parser.add_subparsers(dest="command", required=True)
    gp = _globals_parser(True)

    p = sub.add_parser("gen-data", parents=[gp], help="sample a synthetic regression dataset")
    _target_args(p)
    p.add_argument("--sigma", type=float, default=0.2)
    p.add_argument("--noise", default="gaussian", choices=["gaussian", "bounded_uniform"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--output", default="dataset.txt")

    p = sub.add_parser("train", parents=[gp], help="fit a penalized network to a dataset file")
    p.add_argument("--data", required=True)
    p.add_argument("--kind", default="modified", choices=["modified", "plain"])
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--width", type=int, default=16)
    p.add_argument("--augment", action="store_true", help="append a constant-1 input coordinate")
    p.add_argument("--penalty", default="l1", choices=["none", "l1", "l2sq"])
    lam = p.add_mutually_exclusive_group()
    lam.add_argument("--lambda", dest="lam", type=float, help="fixed penalty coefficient")
    lam.add_argument("--lambda-scale", type=float, help="multiple of log2(n)^6 / n (default 1)")
    p.add_argument("--step", type=float, default=0.05)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batch", type=int, default=None, help="mini-batch size (default: full batch)")
    p.add_argument("--init-scale", type=float, default=1.0)
    p.add_argument("--clip", type=float, default=None, help="output clip bound F")
    p.add_argument("--model-out", default="model.json")
    p.add_argument("--trace-out", default="trace.csv")

    p = sub.add_parser("eval", parents=[gp], help="evaluate a model on a dataset or against a target")
    p.add_argument("--model", required=True)
    p.add_argument("--data", help="dataset file; prints the empirical MSE")
    _target_args(p)
    p.add_argument("--m", type=int, default=0, help="Monte-Carlo size for the L2(P_X) error against --family")

    p = sub.add_parser("embed", parents=[gp], help="embed a plain model into an output-identical modified model")
    p.add_argument("--model", required=True)
    p.add_argument("--output", default="modified.json")
    p.add_argument("--trials", type=int, default=1000)

    p = sub.add_parser("bounds", parents=[gp], help="evaluate a closed-form calculator")
    p.add_argument("which", choices=["architecture", "lambda", "tn", "t-threshold", "Kn", "approx", "entropy",
                                     "c-ceiling"])
    p.add_argument("--n", type=int, default=1024)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--F", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--m", type=int, default=10)
    p.add_argument("--N", type=int, default=4)
    p.add_argument("--kind", default="sparse_unit", choices=list(B.ENTROPY_KINDS))
    p.add_argument("--L", type=int, default=5)
    p.add_argument("--p-inf", type=int, default=20)
    p.add_argument("--s", type=float, default=10)
    p.add_argument("--M", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=0.1)

    p = sub.add_parser("oracle-check", parents=[gp], help="report the oracle-inequality conditions")
    p.add_argument("--n", type=int, default=1024)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--beta", type=float, default=2.0)
    p.add_argument("--F", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--j", type=int, default=0)
    p.add_argument("--t", type=float, default=None, help="default: t_n of the rate bound")
    p.add_argument("--delta", type=float, default=None, help="default: 2^j t / 8")
    p.add_argument("--c", type=float, default=None, help="c_sigma_F (default: its ceiling)")
    p.add_argument("--omega", type=float, default=0.5)
    p.add_argument("--t-star", type=float, default=None)
    p.add_argument("--penalty", default="l1", choices=["l1", "l2"])
    p.add_argument("--scan", action="store_true", help="scan n = 2^k, k <= 64")
    p.add_argument("--csv", default=None, help="also write the report (and scan) as CSV")

    p = sub.add_parser("rate-study", parents=[gp], help="run the sample-size study",
                       formatter_class=argparse.RawDescriptionHelpFormatter,
                       epilog="config file keys (key = value, grouped by section):\n" + CONFIG_HELP)

    p = sub.add_parser("grad-check", parents=[gp], help="compare gradients with central differences")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--width", type=int, default=8)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--kind", default="modified", choices=["modified", "plain"])
    p.add_argument("--penalty", default="none", choices=["none", "l1", "l2sq"])
    p.add_argument("--lambda", dest="lam", type=float, default=0.01)
    return parser


def _out(args, name):
    d = getattr(args, "out", None) or "."
    os.makedirs(d, exist_ok=True)
    return name if os.path.isabs(name) else os.path.join(d, name)


def _seed(args) -> int:
    seed = 0 if getattr(args, "seed", None) is None else args.seed
    print(f"seed: {seed}")
    return seed


def cmd_gen_data(args):
    seed = _seed(args)
    target = make_target(args.family, args.beta, args.F, args.d, seed=seed)
    ds = sample_dataset(target, NoiseModel(args.noise, args.sigma), args.n, args.d, seed=seed)
    path = _out(args, args.output)
    write_dataset(ds, path)
    print(f"wrote {ds.n} points to {path}")


def cmd_train(args):
    seed = _seed(args)
    ds = read_dataset(args.data)
    d_in = ds.d + (1 if args.augment else 0)
    arch = Architecture.uniform(d_in, args.depth, args.width)
    if args.penalty == "none":
        lam = 0.0
    elif args.lam is not None:
        lam = args.lam
    else:
        lam = (1.0 if args.lambda_scale is None else args.lambda_scale) * B.tuning_lambda(max(ds.n, 2))
    cfg = TrainConfig(arch, PenaltySpec(args.penalty, lam), step_size=args.step, max_epochs=args.epochs,
                      batch_size=args.batch, seed=seed, init_scale=args.init_scale, clip_bound=args.clip,
                      kind=args.kind, augment_input=args.augment)
    model, trace = train(cfg, ds)
    save_model(model, _out(args, args.model_out))
    with open(_out(args, args.trace_out), "w", encoding="utf-8", newline="") as fh:
        fh.write(trace.to_csv())
    last = trace.records[-1]
    print(f"lambda: {lam:.6g}")
    print(f"best epoch {trace.best_epoch}: objective {trace.best_objective:.6g} (initial {trace.initial_objective:.6g})")
    print(f"final epoch: mse {last.mse:.6g}, penalty {last.penalty:.6g}, effective nonzeros {last.effective_nonzeros}")


def cmd_eval(args):
    model = load_model(args.model)
    if args.data:
        ds = read_dataset(args.data)
        print(f"empirical mse: {float(np.mean((forward(model, ds.X) - ds.y) ** 2)):.17g}")
    if args.m:
        seed = _seed(args)
        target = make_target(args.family, args.beta, args.F, args.d, seed=seed)
        err = mc_l2_error(lambda X: forward(model, X), target, args.m, seed=seed)
        print(f"L2(P_X) error: {err.mse:.17g} +- {err.stderr:.3g}")
    if not args.data and not args.m:
        raise ValueError("give --data and/or --m")


def cmd_embed(args):
    seed = _seed(args)
    plain = load_model(args.model)
    g = embed_sparse_to_modified(plain)
    path = _out(args, args.output)
    save_model(g, path)
    print(f"wrote modified model to {path}")
    rep = verify_inclusion_chain(plain, args.trials, seed)
    print("\n".join(rep.lines()))


def cmd_bounds(args):
    spec = B.ProblemSpec(args.n, args.d, args.beta, args.F, args.sigma)
    w = args.which
    if w == "architecture":
        a = B.architecture_for(spec)
        print(f"depth L: {a.depth}\nwidth:   {a.p_inf}")
    elif w == "lambda":
        print(f"{B.tuning_lambda(args.n):.17g}")
    elif w == "tn":
        print(f"{B.theorem_tn(spec):.17g}")
    elif w == "t-threshold":
        print(f"{B.t_condition_threshold(spec):.17g}")
    elif w == "Kn":
        print(f"{B.envelope_Kn(spec):.17g}")
    elif w == "c-ceiling":
        print(f"{B.c_sigma_F_ceiling(args.sigma, args.F):.17g}")
    elif w == "approx":
        r = B.approx_budget_report(spec, B.ApproxBudget(args.m, args.N))
        print(f"error bound:      {r.error_bound:.10g}\nsparsity bound:   {r.sparsity_bound:.10g}")
        print(f"depth:            {r.depth}\nwidth:            {r.width}")
        print(f"guarantee:        {'in force' if r.guarantee_in_force else f'not in force (needs N >= {r.N_min:.6g})'}")
    elif w == "entropy":
        q = B.EntropyQuery(args.kind, args.L, args.p_inf, args.s, args.delta, args.M)
        print(f"{B.entropy_bound(q):.10g}" + ("  (degenerate: log argument <= 1)" if q.degenerate else ""))


def cmd_oracle_check(args):
    spec = B.ProblemSpec(args.n, args.d, args.beta, args.F, args.sigma)
    params = B.OracleCheckParams(spec, j=args.j, t=args.t, delta=args.delta, c_sigma_F=args.c,
                                 omega=args.omega, t_star=args.t_star, penalty=args.penalty)
    rep = B.oracle_condition_report(params, scan=args.scan)
    conc = B.concentration_condition_check(params)
    print(rep.to_text())
    print()
    print(conc.to_text())
    if args.csv:
        with open(_out(args, args.csv), "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["quantity", "value"])
            for k, v in rep.rows():
                w.writerow([k, v])
            if rep.scan_rows:
                w.writerow([])
                w.writerow(["n", "lhs", "rhs", "ratio", "condition_i", "condition_t"])
                w.writerows(rep.scan_rows)


def cmd_rate_study(args):
    cfg = load_config(args.config) if getattr(args, "config", None) else StudyConfig()
    if getattr(args, "seed", None) is not None:
        from dataclasses import replace

        cfg = replace(cfg, base_seed=args.seed)
    print(f"seed: {cfg.base_seed}")
    res = run_rate_study(cfg, threads=getattr(args, "threads", None) or 1)
    paths = write_report(res, getattr(args, "out", None) or ".")
    print(res.to_text())
    for k, v in paths.items():
        print(f"{k}: {v}")


def cmd_grad_check(args):
    seed = _seed(args)
    rng = np.random.default_rng(seed)
    from .datagen import RegressionDataset

    ds = RegressionDataset(rng.random((args.n, args.d)), rng.standard_normal(args.n))
    cfg = TrainConfig(Architecture.uniform(args.d, args.depth, args.width), PenaltySpec(args.penalty, args.lam),
                      kind=args.kind, seed=seed)
    err = gradient_check(cfg, ds, args.trials, seed)
    print(f"max relative error: {err:.3e}")


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "eval": cmd_eval,
    "embed": cmd_embed,
    "bounds": cmd_bounds,
    "oracle-check": cmd_oracle_check,
    "rate-study": cmd_rate_study,
    "grad-check": cmd_grad_check,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except (ValueError, ConfigError, ModelFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (RuntimeError, OSError, FloatingPointError, TrainingDiverged) as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
