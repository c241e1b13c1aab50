"""Command-line interface: ``inflnoise <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .annotator import annotate_corpus, annotation_distribution, read_annotated, write_annotated, write_stats
from .cmlm import MaskPolicy, default_pretrain_config, pretrain
from .corpus import ParseError, ensure_dir, parse_unimorph
from .datasets import (
    Dataset,
    add_one_in,
    cumulative_datasets,
    length_matched_resample,
    partition_noise,
    read_dataset,
    resample_unimorph,
    split_correct_noisy,
    write_dataset,
)
from .evaluation import exact_match
from .experiment import ConfigError, ExperimentConfig, gold_msds, load_resources, run_experiment
from .fixture import FixtureError, FixtureSpec, gen_fixture
from .neural import MODEL_KINDS, TrainConfig, load_checkpoint, predict, save_checkpoint, train, write_loss_log
from .neural.train import TrainingDiverged
from .report import ReportError, report
from .slotmap import build_graph, max_matching, read_mapping, write_mapping

log = logging.getLogger("inflnoise")

DATASET_KINDS = ("split", "cumulative", "add-one-in", "unimorph", "unimorph-length")


def _resource_args(p, mapping=True):
    p.add_argument("--pairs", required=True, help="pairs TSV: source, target, slot")
    p.add_argument("--analyses", required=True, help="analyses TSV: surface, then analyses separated by ';'")
    p.add_argument("--lexicon", required=True)
    p.add_argument("--tagmap", required=True)
    p.add_argument("--rewrites", help="rewrite rules, one JSON object per line")
    p.add_argument("--valid-pos", required=True)
    p.add_argument("--lowercase", action="store_true", help="fold case of every surface before lookup")
    if mapping:
        p.add_argument("--mapping", help="slot mapping from map-slots (computed when omitted)")


def _train_args(p, epochs):
    p.add_argument("--dataset", required=True, help="dataset TSV from build-dataset")
    p.add_argument("--model", choices=MODEL_KINDS, default=MODEL_KINDS[0])
    p.add_argument("--epochs", type=int, default=epochs)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--hidden", type=int, default=128)
    p.add_argument("--embedding", type=int, default=64)
    p.add_argument("--config", help="JSON file of training options (overrides the flags above)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="inflnoise", description="Noise annotation and inflection experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("map-slots", help="align slot ids with MSDs by maximum-weight matching")
    p.add_argument("--pairs", required=True)
    p.add_argument("--analyses", required=True)
    p.add_argument("--tagmap", required=True)
    p.add_argument("--rewrites")
    p.add_argument("--lowercase", action="store_true", help="fold case of every surface before lookup")
    p.add_argument("--out", required=True)

    p = sub.add_parser("annotate", help="annotate pairs with noise flags")
    _resource_args(p)
    p.add_argument("--out", required=True, help="annotated TSV; statistics go to <out>.stats.json")

    p = sub.add_parser("build-dataset", help="build training sets from an annotated corpus")
    p.add_argument("--annotated", required=True)
    p.add_argument("--kind", choices=DATASET_KINDS, required=True)
    p.add_argument("--name", default="corpus")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--unimorph", help="dictionary table for resampling")
    p.add_argument("--eval", help="evaluation set (lemma overlap control)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("gen-fixture", help="write a synthetic corpus with known noise labels")
    p.add_argument("--spec", help="JSON file with fixture options")
    p.add_argument("--n-pairs", type=int)
    p.add_argument("--rate", action="append", default=[], metavar="FLAG=RATE")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)

    p = sub.add_parser("pretrain", help="masked character pretraining on a dataset's word types")
    _train_args(p, 40)
    p.add_argument("--mask-prob", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--out", required=True, help="checkpoint JSON; loss log goes to <out>.loss.csv")

    p = sub.add_parser("train", help="train an inflection model")
    _train_args(p, 60)
    p.add_argument("--init", help="checkpoint to finetune from")
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--out", required=True, help="checkpoint JSON; loss log goes to <out>.loss.csv")

    p = sub.add_parser("evaluate", help="exact-match accuracy of a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--eval", required=True)
    p.add_argument("--out", help="predictions TSV")

    p = sub.add_parser("experiment", help="run an experiment grid")
    esub = p.add_subparsers(dest="action", required=True)
    run = esub.add_parser("run")
    run.add_argument("config")
    run.add_argument("--jobs", type=int, default=1)
    run.add_argument("--out", help="override the configured output directory")

    p = sub.add_parser("report", help="emit plot-data CSVs from an experiment directory")
    p.add_argument("results")
    p.add_argument("--out")
    return parser


# ---------------------------------------------------------------------------


def cmd_map_slots(args) -> int:
    data = {"pairs": args.pairs, "analyses": args.analyses, "tagmap": args.tagmap, "rewrites": args.rewrites}
    pairs, res = load_resources(data, args.lowercase)
    mapping = max_matching(build_graph(pairs, gold_msds(res)))
    write_mapping(args.out, mapping)
    print(f"{len(mapping.assignment)} slots mapped, total weight {mapping.total_weight}")
    return 0


def cmd_annotate(args) -> int:
    pairs, res = load_resources(vars(args), args.lowercase)
    if args.mapping:
        res.slot_mapping = read_mapping(args.mapping)
    else:
        res.slot_mapping = max_matching(build_graph(pairs, gold_msds(res)))
    annotate_corpus(pairs, res)
    write_annotated(args.out, pairs)
    stats = annotation_distribution([p.annotation for p in pairs])
    write_stats(f"{args.out}.stats.json", stats)
    pct = ", ".join(f"{k} {v:.2f}" for k, v in stats["percent"].items())
    print(f"{stats['annotated']} of {stats['total']} pairs annotated: {pct}")
    return 0


def cmd_build_dataset(args) -> int:
    pairs = read_annotated(args.annotated)
    correct, noisy = split_correct_noisy(pairs, args.name, args.seed)
    out = ensure_dir(args.out)
    if args.kind == "split":
        built = [correct, noisy]
    elif args.kind == "cumulative":
        built = cumulative_datasets(correct, noisy, partition_noise(noisy, args.k, args.seed), args.name)
    elif args.kind == "add-one-in":
        built = list(add_one_in(correct, noisy, args.name).values())
    else:
        if not args.unimorph or not args.eval:
            raise SystemExit("resampling needs --unimorph and --eval")
        table, eval_set = parse_unimorph(args.unimorph), parse_unimorph(args.eval)
        fn = resample_unimorph if args.kind == "unimorph" else length_matched_resample
        clean = fn(correct, table, eval_set, args.seed)
        built = [clean, Dataset(f"{clean.name}.full", clean.samples + noisy.samples, args.seed, dict(clean.metadata))]
    for ds in built:
        write_dataset(out / f"{ds.name}.tsv", ds)
        print(f"{ds.name}\t{len(ds)}")
    return 0


def cmd_gen_fixture(args) -> int:
    spec = {}
    if args.spec:
        with open(args.spec, encoding="utf-8") as fh:
            spec = json.load(fh)
    if args.n_pairs is not None:
        spec["n_pairs"] = args.n_pairs
    if args.seed is not None:
        spec["seed"] = args.seed
    if args.rate:
        rates = dict(spec.get("rates", {}))
        for item in args.rate:
            flag, _, value = item.partition("=")
            rates[flag.strip()] = float(value)
        spec["rates"] = rates
    paths = gen_fixture(FixtureSpec.from_dict(spec), args.out)
    for name, path in paths.items():
        print(f"{name}\t{path}")
    return 0


def _train_config(args) -> TrainConfig:
    cfg = TrainConfig(epochs=args.epochs, batch_size=args.batch_size, lr=args.lr, hidden=args.hidden,
                      embedding=args.embedding, seed=args.seed)
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            cfg = cfg.replace(**json.load(fh))
    return cfg


def cmd_pretrain(args) -> int:
    dataset = read_dataset(args.dataset)
    base = _train_config(args)
    cfg = default_pretrain_config(args.model, base, base.epochs)
    inflector, history = pretrain(args.model, dataset, cfg, MaskPolicy(mask_prob=args.mask_prob))
    save_checkpoint(args.out, inflector)
    write_loss_log(f"{args.out}.loss.csv", history)
    print(f"pretrained {args.model} for {cfg.epochs} epochs, final loss {history[-1][1]:.4f}" if history else "no epochs run")
    return 0


def cmd_train(args) -> int:
    dataset = read_dataset(args.dataset)
    cfg = _train_config(args)
    init = load_checkpoint(args.init) if args.init else None
    inflector, history = train(args.model, dataset, cfg, init=init)
    save_checkpoint(args.out, inflector)
    write_loss_log(f"{args.out}.loss.csv", history)
    print(f"trained {args.model} for {cfg.epochs} epochs, final loss {history[-1][1]:.4f}" if history else "no epochs run")
    return 0


def cmd_evaluate(args) -> int:
    inflector = load_checkpoint(args.checkpoint)
    eval_set = parse_unimorph(args.eval)
    predictions = predict(inflector, eval_set)
    accuracy = exact_match(predictions, [e.target for e in eval_set])
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            for e, p in zip(eval_set, predictions):
                fh.write(f"{e.lemma}\t{e.msd}\t{p}\t{e.target}\n")
    print(f"accuracy {accuracy:.4f} ({round(accuracy * len(eval_set))}/{len(eval_set)})")
    return 0


def cmd_experiment(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    if args.out:
        cfg.out = Path(args.out)
    counts = run_experiment(cfg, jobs=args.jobs)
    print(f"{counts['cells']} cells: {counts['ran']} run, {counts['skipped']} skipped, {counts['failed']} failed")
    return 1 if counts["failed"] else 0


def cmd_report(args) -> int:
    for name, path in report(args.results, args.out).items():
        print(f"{name}\t{path}")
    return 0


COMMANDS = {
    "map-slots": cmd_map_slots,
    "annotate": cmd_annotate,
    "build-dataset": cmd_build_dataset,
    "gen-fixture": cmd_gen_fixture,
    "pretrain": cmd_pretrain,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "experiment": cmd_experiment,
    "report": cmd_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ParseError, ConfigError, FixtureError, ReportError, TrainingDiverged, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
