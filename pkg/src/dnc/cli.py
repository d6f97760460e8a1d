"""Command-line entry point: ``dnc gen-data | train | eval | explain``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric/degenerate error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .checkpoint import from_state, load_checkpoint, save_checkpoint, to_state
from .data import gen_synthetic, load_csv, save_csv, train_test_split
from .errors import DataError, DegenerateInputError, DNCError
from .explain import build_rule, evaluate_rule, similarity_report
from .net import encode
from .trainer import TrainConfig, evaluate, knn_induction_eval, train

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(pairs: dict) -> None:
    for key, value in pairs.items():
        if isinstance(value, float):
            value = repr(value)
        elif isinstance(value, bool):
            value = str(value).lower()
        print(f"{key}={value}")


def read_k_map(path) -> list[int]:
    """A JSON list of per-class K, or whitespace/comma separated integers."""
    text = Path(path).read_text()
    try:
        values = json.loads(text)
    except json.JSONDecodeError:
        values = text.replace(",", " ").split()
    try:
        return [int(v) for v in values]
    except (TypeError, ValueError):
        raise DataError(f"{path}: K map must be a list of integers") from None


def cmd_gen_data(args) -> int:
    data = gen_synthetic(args.classes, args.subclusters, args.dim, args.per_cluster, args.sigma, args.seed)
    if args.test_out:
        tr, te = train_test_split(data, args.test_frac, args.seed)
        save_csv(args.out, tr)
        save_csv(args.test_out, te)
        _emit({"train_samples": len(tr), "test_samples": len(te)})
    else:
        save_csv(args.out, data)
        _emit({"samples": len(data)})
    return 0


def config_from_args(args) -> TrainConfig:
    return TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        classifier_kind=args.classifier,
        k=args.k,
        k_map=read_k_map(args.k_map) if args.k_map else None,
        mu=args.mu,
        epsilon=args.epsilon,
        sinkhorn_iters=args.sinkhorn_iters,
        memory_batches=args.memory_batches,
        temperature=args.temperature,
        learning_rate=args.lr,
        lr_schedule=args.lr_schedule,
        seed=args.seed,
        anchor_after_epoch=args.anchor_after_epoch,
        hidden=tuple(int(h) for h in args.hidden.split(",") if h.strip()),
        dim=args.dim,
        clusterer=args.clusterer,
    )


def cmd_train(args) -> int:
    cfg = config_from_args(args)
    data = load_csv(args.data)
    state = train(data, cfg, num_classes=args.num_classes)
    extra = {"train_data": str(Path(args.data).resolve())}
    save_checkpoint(args.out, from_state(state, extra), precision=args.precision)
    _emit({"epochs": state.epoch, "steps": state.step, "final_loss": state.loss_curve[-1], "checkpoint": args.out})
    return 0


def _train_data(args, ckpt) -> Path:
    path = args.train_data or ckpt.extra.get("train_data")
    if not path:
        raise DataError("training data unknown; pass --train-data")
    return Path(path)


def cmd_eval(args) -> int:
    ckpt = load_checkpoint(args.ckpt)
    state = to_state(ckpt)
    data = load_csv(args.data)
    m = evaluate(state, data)
    out = {"samples": len(data), "top1": m.top1, "top5": m.top5, "top5_defined": m.top5_defined}
    if args.knn_fine:
        out["knn_fine_top1"] = knn_induction_eval(state.encoder, load_csv(_train_data(args, ckpt)), data)
    _emit(out)
    return 0


def cmd_explain(args) -> int:
    ckpt = load_checkpoint(args.ckpt)
    if ckpt.bank is None:
        raise UsageError("explanations need a dnc checkpoint")
    data = load_csv(args.data)
    if not 0 <= args.query_index < len(data):
        raise UsageError(f"query index {args.query_index} outside [0, {len(data)})")
    query = encode(ckpt.encoder, data.inputs[args.query_index : args.query_index + 1])[0]
    report = similarity_report(query, ckpt.bank, args.top_m, query_id=args.query_index)
    print(report.to_text())
    if args.emit_rule is not None:
        if not 0 <= args.emit_rule < ckpt.bank.num_classes:
            raise UsageError(f"class {args.emit_rule} outside [0, {ckpt.bank.num_classes})")
        rule = build_rule(ckpt.bank, args.emit_rule)
        anchors = encode(ckpt.encoder, load_csv(_train_data(args, ckpt)).inputs)
        print(rule.to_text())
        _emit({"rule_disjuncts": len(rule.disjuncts), "rule_clauses": rule.num_clauses,
               "rule_fires": evaluate_rule(rule, query, anchors)})
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dnc", description="Deep nearest-centroid classifier at desk scale.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-data", help="write a synthetic multimodal dataset")
    g.add_argument("--classes", type=int, required=True)
    g.add_argument("--subclusters", type=int, required=True)
    g.add_argument("--dim", type=int, required=True)
    g.add_argument("--per-cluster", type=int, required=True)
    g.add_argument("--sigma", type=float, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--test-out", help="also write a stratified test split here")
    g.add_argument("--test-frac", type=float, default=0.2)
    g.set_defaults(func=cmd_gen_data)

    t = sub.add_parser("train", help="train an encoder with a dnc or softmax head")
    t.add_argument("--data", required=True)
    t.add_argument("--classifier", choices=["dnc", "softmax"], default="dnc")
    t.add_argument("--k", type=int, default=4)
    t.add_argument("--k-map", help="file with one K per class")
    t.add_argument("--mu", type=float, default=0.999)
    t.add_argument("--epsilon", type=float, default=0.05)
    t.add_argument("--sinkhorn-iters", type=int, default=3)
    t.add_argument("--memory-batches", type=int, default=0)
    t.add_argument("--temperature", type=float, default=1.0)
    t.add_argument("--epochs", type=int, default=30)
    t.add_argument("--batch-size", type=int, default=64)
    t.add_argument("--lr", type=float, default=0.1)
    t.add_argument("--lr-schedule", choices=["constant", "poly"], default="constant")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--anchor-after-epoch", type=int)
    t.add_argument("--hidden", default="64,64", help="comma separated hidden widths")
    t.add_argument("--dim", type=int, default=16, help="embedding dimension")
    t.add_argument("--clusterer", choices=["sinkhorn", "kmeans"], default="sinkhorn")
    t.add_argument("--num-classes", type=int, help="defaults to max label + 1")
    t.add_argument("--precision", choices=["f8", "f4"], default="f8")
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="print accuracy metrics as key=value lines")
    e.add_argument("--ckpt", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--knn-fine", action="store_true", help="also report 1-NN fine-label accuracy")
    e.add_argument("--train-data", help="reference set for --knn-fine (default: the training file)")
    e.set_defaults(func=cmd_eval)

    x = sub.add_parser("explain", help="similarity report and IF...THEN rule for one query")
    x.add_argument("--ckpt", required=True)
    x.add_argument("--data", required=True)
    x.add_argument("--query-index", type=int, required=True)
    x.add_argument("--top-m", type=int, default=4)
    x.add_argument("--emit-rule", type=int, metavar="CLASS")
    x.add_argument("--train-data", help="file the anchor ids refer to (default: the training file)")
    x.set_defaults(func=cmd_explain)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"dnc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"dnc: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DegenerateInputError, FloatingPointError) as exc:
        print(f"dnc: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DNCError as exc:
        print(f"dnc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
