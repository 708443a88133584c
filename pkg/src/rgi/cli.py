"""Command line: ``rgi train | embed | eval | selfcheck``.

Exit codes: 0 success, 1 user/config/data error, 2 internal error.
``RGI_THREADS`` caps BLAS threads used by the dense kernels.
"""

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import selfcheck
from .encoder import ModelParams, embed, kipf_shift
from .errors import RGIError, ShapeError
from .evaluation import linear_evaluation
from .trainer import train, write_metrics_csv
from .config import load_run_config

logger = logging.getLogger("rgi")

CHECKPOINT_NAME = "checkpoint.rgi"
METRICS_NAME = "metrics.csv"
EVAL_NAME = "eval.csv"


def write_matrix_csv(path, m):
    with open(path, "w") as fh:
        for row in m:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_matrix_csv(path):
    from .data import read_features

    return read_features(path)


def cmd_train(args):
    cfg = load_run_config(args.config)
    ds = cfg.load_dataset()
    tcfg = cfg.train_config(ds.num_features)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    def on_epoch(epoch, params, metrics):
        if cfg.checkpoint_every and (epoch + 1) % cfg.checkpoint_every == 0:
            params.save(out / f"checkpoint_epoch{epoch + 1}.rgi")

    params, history = train(ds, tcfg, callback=on_epoch)
    params.save(out / CHECKPOINT_NAME)
    write_metrics_csv(out / METRICS_NAME, history)
    last = history[-1]
    print(f"trained {len(history)} epochs on {ds.name}: final loss {last.total:.6g} "
          f"(rec {last.rec:.4g} var {last.var:.4g} cov {last.cov:.4g})")
    print(f"wrote {out / CHECKPOINT_NAME}")
    return 0


def cmd_embed(args):
    cfg = load_run_config(args.config)
    ds = cfg.load_dataset()
    tcfg = cfg.train_config(ds.num_features)
    params = ModelParams.load(args.checkpoint)
    params.check_matches(tcfg.encoder, tcfg.pred_hidden)
    u = embed(ds.features, kipf_shift(ds.graph), params, tcfg.encoder)
    write_matrix_csv(args.out, u)
    print(f"wrote {u.shape[0]}x{u.shape[1]} embeddings to {args.out}")
    return 0


def cmd_eval(args):
    cfg = load_run_config(args.config)
    ds = cfg.load_dataset()
    emb = read_matrix_csv(args.embeddings)
    if emb.shape[0] != ds.num_nodes:
        raise ShapeError(f"{args.embeddings} has {emb.shape[0]} rows, dataset has {ds.num_nodes} nodes")
    seeds = args.seeds if args.seeds is not None else cfg.eval.num_seeds
    metric = "micro_f1" if ds.task == "multilabel" else "accuracy"
    scores = linear_evaluation(emb, ds.labels, ds.task, range(seeds), tuple(cfg.eval.split),
                               ds.num_classes)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / EVAL_NAME, "w") as fh:
        for seed, s in enumerate(scores):
            fh.write(f"{ds.name},{seed},{seed},{metric},{s:.9g}\n")
            print(f"seed={seed} split_seed={seed} {metric}={s:.4f}")
    print(f"mean={np.mean(scores):.4f} std={np.std(scores):.4f}")
    return 0


def cmd_selfcheck(args):
    ok = selfcheck.run_checks()
    print("selfcheck passed" if ok else "selfcheck FAILED")
    return 0 if ok else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="rgi", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="self-supervised training")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("embed", help="write frozen embeddings as CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("eval", help="linear-probe evaluation of embeddings")
    p.add_argument("--config", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--seeds", type=int, default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("selfcheck", help="run gradient and oracle checks")
    p.set_defaults(func=cmd_selfcheck)
    return parser


def _thread_limit():
    value = os.environ.get("RGI_THREADS")
    if not value:
        return None
    try:
        n = int(value)
    except ValueError:
        raise RGIError(f"RGI_THREADS must be an integer, got {value!r}") from None
    return max(1, n)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        limit = _thread_limit()
        if limit is None:
            return args.func(args)
        from threadpoolctl import threadpool_limits

        with threadpool_limits(limits=limit):
            return args.func(args)
    except (RGIError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        logger.exception("internal error")
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
