"""Command-line entry point: train, eval, sweep, split-unseen, theory.

Experiments are described by flat key=value config files; every key can be
overridden by a CLI flag of the same name. Dataset paths resolve against
the TKGE_DATA_ROOT environment variable when not found directly.

Exit codes: 0 success, 1 usage error, 2 numeric failure, 3 verification
failure.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import os
import sys
from dataclasses import fields

import numpy as np

from . import models, theory
from .checkpoint import load_checkpoint, save_checkpoint
from .data import build_filter_index, load_tsv, make_unseen_timestamp_split, save_tsv
from .errors import NumericError, SizeLimitError, TkgeError
from .evaluation import evaluate
from .training import TrainConfig, train

LARGE_DATASET_FACTS = 500_000

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2
EXIT_VERIFY = 3


def _coerce(name, value, target_type):
    if target_type is bool:
        text = str(value).strip().lower()
        if text in ("1", "true", "yes", "on"):
            return True
        if text in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"config key {name}: expected a boolean, got {value!r}")
    return target_type(value)


def load_config(path=None, overrides=None) -> TrainConfig:
    """Flat key=value config file plus CLI overrides."""
    defaults = TrainConfig()
    values = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{lineno}: expected key = value")
                key, _, val = line.partition("=")
                values[key.strip()] = val.strip()
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name: type(getattr(defaults, f.name)) for f in fields(TrainConfig)}
    cfg_kwargs = {}
    for key, val in values.items():
        if key not in known:
            raise ValueError(f"unknown config key {key!r}")
        cfg_kwargs[key] = val if isinstance(val, known[key]) else _coerce(key, val, known[key])
    return TrainConfig(**cfg_kwargs)


def resolve_dataset_dir(path):
    if os.path.isdir(path):
        return path
    root = os.environ.get("TKGE_DATA_ROOT")
    if root and os.path.isdir(os.path.join(root, path)):
        return os.path.join(root, path)
    raise FileNotFoundError(f"dataset directory {path!r} not found")


def write_history_csv(path, history):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss", "val_mrr"])
        for row in history:
            writer.writerow([row.epoch, f"{row.train_loss:.10g}", f"{row.val_mrr:.10g}"])


def write_report_csv(path, model, split, report):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "split", "mrr", "hit1", "hit3", "hit10"])
        writer.writerow([model, split, f"{report.mrr:.6f}", f"{report.hit1:.6f}",
                         f"{report.hit3:.6f}", f"{report.hit10:.6f}"])


def print_report(model, split, report):
    print(f"{'model':<14} {'split':<7} {'MRR':>7} {'Hit@1':>7} {'Hit@3':>7} {'Hit@10':>7}")
    print(f"{model:<14} {split:<7} {report.mrr:>7.4f} {report.hit1:>7.4f} "
          f"{report.hit3:>7.4f} {report.hit10:>7.4f}")


def svg_line_chart(path, series, xlabel, ylabel, title, width=640, height=420):
    """Minimal hand-emitted polyline chart; one series per label."""
    margin = 60
    pts = list(itertools.chain.from_iterable(zip(xs, ys) for xs, ys in series.values()))
    finite = [(x, y) for x, y in pts if np.isfinite(y)]
    if not finite:
        finite = [(0, 0), (1, 1)]
    xs, ys = zip(*finite)
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1

    def sx(x):
        return margin + (x - x0) / (x1 - x0) * (width - 2 * margin)

    def sy(y):
        return height - margin - (y - y0) / (y1 - y0) * (height - 2 * margin)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" '
        f'stroke="black"/>',
        f'<text x="{width / 2}" y="{height - 15}" text-anchor="middle" '
        f'font-size="12">{xlabel}</text>',
        f'<text x="18" y="{height / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 18 {height / 2})">{ylabel}</text>',
        f'<text x="{margin - 6}" y="{height - margin + 4}" text-anchor="end" '
        f'font-size="10">{y0:.3g}</text>',
        f'<text x="{margin - 6}" y="{margin + 4}" text-anchor="end" '
        f'font-size="10">{y1:.3g}</text>',
        f'<text x="{margin}" y="{height - margin + 16}" text-anchor="middle" '
        f'font-size="10">{x0:.3g}</text>',
        f'<text x="{width - margin}" y="{height - margin + 16}" text-anchor="middle" '
        f'font-size="10">{x1:.3g}</text>',
    ]
    for c, (label, (sxs, sys_)) in enumerate(series.items()):
        coords = " ".join(f"{sx(x):.1f},{sy(y):.1f}"
                          for x, y in zip(sxs, sys_) if np.isfinite(y))
        color = colors[c % len(colors)]
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" '
                     f'stroke-width="1.5"/>')
        parts.append(f'<text x="{width - margin + 4}" y="{margin + 14 * c + 10}" '
                     f'font-size="11" fill="{color}">{label}</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts))


def _config_overrides(args):
    return {f.name: getattr(args, f.name, None) for f in fields(TrainConfig)}


def _load_training_inputs(args):
    cfg = load_config(args.config, _config_overrides(args))
    ds = load_tsv(resolve_dataset_dir(args.dataset))
    total = sum(len(facts) for facts in ds.splits.values())
    if total > LARGE_DATASET_FACTS and not args.large:
        raise ValueError(
            f"dataset has {total} facts; pass --large to confirm a long run")
    return cfg, ds


def cmd_train(args):
    cfg, ds = _load_training_inputs(args)
    os.makedirs(args.out, exist_ok=True)
    params, history = train(cfg, ds, ablation=args.ablation,
                            log=lambda row: print(
                                f"epoch {row.epoch}: loss {row.train_loss:.4f} "
                                f"val MRR {row.val_mrr:.4f}"))
    save_checkpoint(os.path.join(args.out, "checkpoint.tkge"), params,
                    ds.vocabulary, config=vars(cfg).copy() if hasattr(cfg, "__dict__")
                    else None)
    write_history_csv(os.path.join(args.out, "history.csv"), history)
    if len(ds.valid) > 0:
        report = evaluate(params, ds, "valid")
        write_report_csv(os.path.join(args.out, "report_valid.csv"),
                         cfg.model, "valid", report)
        print_report(cfg.model, "valid", report)
    return EXIT_OK


def cmd_eval(args):
    ds = load_tsv(resolve_dataset_dir(args.dataset))
    params, _ = load_checkpoint(args.checkpoint, vocab=ds.vocabulary)
    report = evaluate(params, ds, args.split)
    print_report(params.kind, args.split, report)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_report_csv(os.path.join(args.out, f"report_{args.split}.csv"),
                         params.kind, args.split, report)
    return EXIT_OK


def _static_counterpart(model):
    return model[3:] if model.startswith("DE-") else "DE-" + model


def cmd_sweep(args):
    base_cfg, ds = _load_training_inputs(args)
    os.makedirs(args.out, exist_ok=True)
    axis = args.axis
    if axis == "curve":
        series = {}
        rows = []
        for model in (args.models.split(",") if args.models
                      else [base_cfg.model, _static_counterpart(base_cfg.model)]):
            cfg = base_cfg.replace(model=model.strip())
            _, history = train(cfg, ds)
            series[cfg.model] = ([r.epoch for r in history],
                                 [r.val_mrr for r in history])
            rows.extend((cfg.model, r.epoch, r.val_mrr) for r in history)
        with open(os.path.join(args.out, "curve.csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["model", "epoch", "val_mrr"])
            writer.writerows(rows)
        svg_line_chart(os.path.join(args.out, "curve.svg"), series,
                       "epoch", "validation MRR", "training curve")
        return EXIT_OK
    values = args.values.split(",")
    results = []
    for raw in values:
        raw = raw.strip()
        if axis == "gamma":
            x = float(raw)
            d_t = int(x * base_cfg.dim) if x <= 1.0 else int(x)
            cfg = base_cfg.replace(d_t=d_t)
            label = d_t / base_cfg.dim
        elif axis == "activation":
            cfg = base_cfg.replace(activation=raw)
            label = raw
        elif axis == "dropout":
            cfg = base_cfg.replace(dropout=float(raw))
            label = float(raw)
        else:
            raise ValueError(f"unknown sweep axis {axis!r}")
        try:
            params, _ = train(cfg, ds)
            report = evaluate(params, ds, "test")
            results.append((label, report.mrr))
            print(f"{axis}={label}: test MRR {report.mrr:.4f}")
        except NumericError as exc:
            results.append((label, float("nan")))
            print(f"{axis}={label}: diverged ({exc})")
    with open(os.path.join(args.out, "sweep.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([axis, "test_mrr"])
        writer.writerows(results)
    if axis != "activation":
        xs = [float(v) for v, _ in results]
        ys = [m for _, m in results]
        svg_line_chart(os.path.join(args.out, "sweep.svg"), {axis: (xs, ys)},
                       axis, "test MRR", f"{axis} sweep")
    return EXIT_OK


def cmd_split_unseen(args):
    ds = load_tsv(resolve_dataset_dir(args.dataset))
    days = [int(d) for d in args.days.split(",")]
    rng = np.random.default_rng(args.seed)
    new_ds = make_unseen_timestamp_split(ds, days, rng)
    save_tsv(new_ds, args.out)
    kept = sum(len(f) for f in new_ds.splits.values())
    total = sum(len(f) for f in ds.splits.values())
    print(f"wrote {args.out}: train={len(new_ds.train)} valid={len(new_ds.valid)} "
          f"test={len(new_ds.test)} (dropped {total - kept})")
    return EXIT_OK


def _theory_expressivity(args):
    V, R, T = args.entities, args.relations, args.timestamps
    L = args.block_length or T
    if R * V * T * L > args.size_limit:
        raise SizeLimitError(
            f"construction dimension {R * V * T * L} exceeds limit {args.size_limit}; "
            f"the embedding dimension grows as |R|*|V|*|T|*L")
    n_cells = V * R * V * T
    failures = 0
    if args.exhaustive:
        if n_cells > 16:
            raise SizeLimitError(f"exhaustive mode over 2^{n_cells} worlds refused")
        n_worlds = 2 ** n_cells
        for w in range(n_worlds):
            bits = np.array([(w >> b) & 1 for b in range(n_cells)], dtype=bool)
            world = theory.WorldSpec(V, R, T, bits.reshape(V, R, V, T))
            ok, n_wrong, _ = theory.verify_expressivity(world, L)
            if not ok:
                failures += 1
                print(f"world {w}: FAIL ({n_wrong} mis-signed tuples)")
        print(f"expressivity: {n_worlds - failures}/{n_worlds} worlds pass "
              f"(|V|={V}, |R|={R}, |T|={T}, L={L})")
    else:
        rng = np.random.default_rng(args.seed)
        for w in range(args.worlds):
            world = theory.WorldSpec.random(V, R, T, rng)
            ok, n_wrong, _ = theory.verify_expressivity(world, L)
            if not ok:
                failures += 1
                print(f"random world {w}: FAIL ({n_wrong} mis-signed tuples)")
        print(f"expressivity: {args.worlds - failures}/{args.worlds} random worlds "
              f"pass (|V|={V}, |R|={R}, |T|={T}, L={L})")
    return EXIT_OK if failures == 0 else EXIT_VERIFY


def _theory_tying(args):
    from .data import Date, Quadruple

    rng = np.random.default_rng(args.seed)
    dim = 8
    params = models.init_params("DE-SimplE", 6, 4, 1, dim, rng, d_t=4,
                                activation="sigmoid")
    theory.enforce_nonnegativity(params)
    dates = [Date(2014, int(rng.integers(1, 13)), int(rng.integers(1, 29)))
             for _ in range(20)]

    def random_fact(r):
        return Quadruple(int(rng.integers(6)), r, int(rng.integers(6)),
                         dates[int(rng.integers(len(dates)))])

    failures = []
    tied = theory.apply_tying(params, ("symmetric", 0))
    for _ in range(200):
        f = random_fact(0)
        fwd = models.score(tied, f)
        rev = models.score(tied, Quadruple(f.tail, 0, f.head, f.timestamp))
        if fwd != rev:
            failures.append("symmetric")
            break
    tied = theory.apply_tying(params, ("anti_symmetric", 1))
    for _ in range(200):
        f = random_fact(1)
        if models.score(tied, f) != -models.score(
                tied, Quadruple(f.tail, 1, f.head, f.timestamp)):
            failures.append("anti_symmetric")
            break
    tied = theory.apply_tying(params, ("inverse", 0, 2))
    for _ in range(200):
        f = random_fact(0)
        if models.score(tied, f) != models.score(
                tied, Quadruple(f.tail, 2, f.head, f.timestamp)):
            failures.append("inverse")
            break
    delta = rng.random((2, dim)) * 0.1
    tied = theory.apply_tying(params, ("entails", 0, 3, delta[0], delta[1]))
    for _ in range(200):
        f = random_fact(0)
        if models.score(tied, Quadruple(f.head, 3, f.tail, f.timestamp)) < \
                models.score(tied, f):
            failures.append("entails")
            break
    for scheme in ("symmetric", "anti_symmetric", "inverse", "entails"):
        status = "FAIL" if scheme in failures else "pass"
        print(f"tying {scheme}: {status}")
    return EXIT_OK if not failures else EXIT_VERIFY


def cmd_theory(args):
    if args.mode == "expressivity":
        return _theory_expressivity(args)
    return _theory_tying(args)


def _add_config_flags(parser):
    for f in fields(TrainConfig):
        default = getattr(TrainConfig(), f.name)
        flag = "--" + f.name.replace("_", "-")
        if isinstance(default, bool):
            parser.add_argument(flag, default=None, type=str,
                                help=f"override config key {f.name} (true/false)")
        else:
            parser.add_argument(flag, default=None, type=type(default),
                                help=f"override config key {f.name}")


def build_parser():
    parser = argparse.ArgumentParser(prog="tkge",
                                     description="Temporal KG completion with "
                                                 "diachronic embeddings")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model and write a checkpoint")
    p.add_argument("dataset", help="dataset directory (train/valid/test.txt)")
    p.add_argument("--config", default=None, help="key=value config file")
    p.add_argument("--out", default="runs/train", help="output directory")
    p.add_argument("--ablation", default=None,
                   choices=["fix_a", "fix_w", "fix_b"])
    p.add_argument("--large", action="store_true",
                   help="confirm training on a >500k-fact dataset")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a split")
    p.add_argument("checkpoint")
    p.add_argument("dataset")
    p.add_argument("--split", default="test", choices=["train", "valid", "test"])
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="train one model per axis value")
    p.add_argument("dataset")
    p.add_argument("--axis", required=True,
                   choices=["gamma", "activation", "dropout", "curve"])
    p.add_argument("--values", default="",
                   help="comma-separated axis values (unused for curve)")
    p.add_argument("--models", default=None,
                   help="curve mode: comma-separated models to compare")
    p.add_argument("--config", default=None)
    p.add_argument("--out", default="runs/sweep")
    p.add_argument("--large", action="store_true")
    _add_config_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("split-unseen",
                       help="hold out days-of-month into valid/test")
    p.add_argument("dataset")
    p.add_argument("--days", default="5,15,25")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_split_unseen)

    p = sub.add_parser("theory", help="run expressivity / tying verifications")
    p.add_argument("--mode", required=True, choices=["expressivity", "tying"])
    p.add_argument("--entities", type=int, default=2)
    p.add_argument("--relations", type=int, default=1)
    p.add_argument("--timestamps", type=int, default=2)
    p.add_argument("--block-length", type=int, default=None)
    p.add_argument("--exhaustive", action="store_true")
    p.add_argument("--worlds", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size-limit", type=int, default=4096)
    p.set_defaults(func=cmd_theory)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (TkgeError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
