"""Command-line entry point: quality | train | evaluate | predict | analyze."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import analysis, dataset, evaluation, models, quality, training

log = logging.getLogger("editoutcome")


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------- #
# subcommands


def cmd_quality(args) -> None:
    histories = quality.load_revisions(args.revisions)
    records = []
    for article, obs in quality.iter_observations(histories, args.cutoff_ts):
        print(f"{article}\t{len(obs)}", file=sys.stderr)
        records.extend((o.user, o.item, o.q, o.ts) for o in obs)
    records.sort(key=lambda r: (r[3], r[1], r[0]))
    n = dataset.write_observations(args.output, records)
    print(f"total\t{n}", file=sys.stderr)
    if n == 0:
        log.warning("no scorable edits in %s", args.revisions)


def _manifest_path(checkpoint) -> Path:
    return Path(str(checkpoint) + ".split.json")


def cmd_train(args) -> None:
    if args.dim is not None and args.variant != "full":
        raise UsageError("--dim only applies to --variant full")
    config = training.TrainConfig(
        variant=args.variant,
        dim=args.dim if args.dim is not None else 20,
        learning_rate=args.lr,
        batch_size=args.batch_size,
        epochs=args.epochs,
        l2=args.l2,
        seed=args.seed,
        deterministic=args.deterministic,
        init_scale=args.init_scale,
        threads=args.threads,
        early_stop=args.early_stop,
    )
    data = dataset.load_observations(args.observations)
    if len(data) == 0:
        raise UsageError(f"{args.observations} holds no observations")
    train, validation = dataset.chronological_split(data, args.split_fraction)
    if args.log_file:
        with open(args.log_file, "w", encoding="utf-8") as fh:
            pred = training.sgd_fit(train, config, log_file=fh)
    else:
        pred = training.sgd_fit(train, config, log_file=sys.stderr)
    models.save_checkpoint(pred, args.output)
    manifest = dataset.split_manifest(train, validation, args.split_fraction)
    dataset.write_manifest(args.manifest or _manifest_path(args.output), manifest)
    log.info("wrote %s (%s, N=%d, M=%d)", args.output, pred.variant, len(pred.users), len(pred.items))


def _split(args, data):
    manifest_path = Path(args.manifest) if args.manifest else _manifest_path(args.checkpoint)
    if manifest_path.exists() and args.split_fraction is None:
        with open(manifest_path, encoding="utf-8") as fh:
            return dataset.apply_manifest(data, json.load(fh))
    if args.split_fraction is None:
        raise UsageError(f"no split manifest at {manifest_path}; pass --split-fraction")
    return dataset.chronological_split(data, args.split_fraction)


def cmd_evaluate(args) -> None:
    pred = models.load_checkpoint(args.checkpoint)
    train, validation = _split(args, dataset.load_observations(args.observations))
    report, curve = evaluation.evaluate(pred, train, validation, args.positive_class)
    with open(args.output, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=1)
        fh.write("\n")
    pr_path = args.pr_tsv or str(Path(args.output).with_suffix(".pr.tsv"))
    with open(pr_path, "w", encoding="utf-8") as fh:
        fh.write(curve.to_tsv())
    print(f"avg_log_likelihood\t{report.avg_log_likelihood:.6f}\nauprc\t{report.auprc:.6f}",
          file=sys.stderr)


def cmd_predict(args) -> None:
    pred = models.load_checkpoint(args.checkpoint)
    if args.pairs:
        with open(args.pairs, encoding="utf-8") as fh:
            rows = [line.rstrip("\n").split("\t")[:2] for line in fh if line.strip()]
        if rows and rows[0] == ["user", "item"]:
            rows = rows[1:]
    elif args.user is not None and args.item is not None:
        rows = [[args.user, args.item]]
    else:
        raise UsageError("pass --pairs FILE or both --user and --item")
    out = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
    try:
        out.write("user\titem\tp\n")
        for user, item in rows:
            out.write(f"{user}\t{item}\t{pred.predict(user, item):.10g}\n")
    finally:
        if out is not sys.stdout:
            out.close()


def _write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1, ensure_ascii=False)
        fh.write("\n")


def _write_tsv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(f"{x:.6g}" if isinstance(x, float) else str(x) for x in row) + "\n")


def cmd_analyze(args) -> None:
    pred = models.load_checkpoint(args.checkpoint)
    data = dataset.load_observations(args.observations)
    manifest_path = Path(args.manifest) if args.manifest else _manifest_path(args.checkpoint)
    if manifest_path.exists():
        with open(manifest_path, encoding="utf-8") as fh:
            data, _ = dataset.apply_manifest(data, json.load(fh))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    kind = args.report

    if kind == "percentiles":
        rows = analysis.percentile_table(pred)
        _write_json(out / "percentiles.json", rows)
        _write_tsv(out / "percentiles.tsv", ["item", "difficulty", "percentile"],
                   ([r["item"], r["difficulty"], r["percentile"]] for r in rows))
    elif kind == "top-bottom":
        top, bottom = analysis.top_bottom_difficulty(pred, data, min(args.k, len(pred.items)))
        _write_json(out / "top_bottom.json", {"top": top, "bottom": bottom})
        cols = ["difficulty", "item", "acceptance_rate", "n_edits", "n_users"]
        _write_tsv(out / "top_bottom.tsv", ["direction"] + cols,
                   [["top"] + [r[c] for c in cols] for r in top]
                   + [["bottom"] + [r[c] for c in cols] for r in bottom])
    elif kind == "pca":
        if not isinstance(pred.params, models.FullParams):
            raise UsageError(f"PCA needs item embeddings; {pred.variant!r} checkpoint has none")
        n = min(args.components, pred.params.dim, len(pred.items))
        pca = analysis.pca_items(pred.params.Y, n)
        axes = []
        for axis in range(n):
            low, high = analysis.extreme_items_along_axis(pca, axis, args.k, pred.items)
            axes.append({"axis": axis, "lowest": low, "highest": high})
        _write_json(out / "pca.json", {
            "explained_variance_ratio": pca.explained_variance_ratio.tolist(),
            "axes": axes,
        })
        _write_tsv(out / "pca.tsv", ["axis", "direction", "items"],
                   ([a["axis"], d, ", ".join(a[d])] for a in axes for d in ("lowest", "highest")))
    elif kind == "correlation":
        res = analysis.cooccurrence_correlation(data)
        _write_json(out / "correlation.json", {"users": res.users, "items": res.items})
        with open(out / "correlation.tsv", "w", encoding="utf-8") as fh:
            fh.write(res.to_tsv())
    elif kind == "churn":
        q1, q3 = analysis.churn_quartile_report(data, pred)
        _write_json(out / "churn.json", {"q1_mean_churn": q1, "q3_mean_churn": q3})
        _write_tsv(out / "churn.tsv", ["quartile", "mean_churn"], [["Q1", q1], ["Q3", q3]])
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown report {kind!r}")


# --------------------------------------------------------------------------- #
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="editoutcome", description=__doc__)
    parser.add_argument("--config", help="JSON file of flag defaults (flags override it)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("quality", help="score edits of a JSON-lines revision file")
    p.add_argument("revisions")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--cutoff-ts", type=int)
    p.set_defaults(func=cmd_quality)

    p = sub.add_parser("train", help="fit a predictor on the training split")
    p.add_argument("observations")
    p.add_argument("-o", "--output", required=True, help="checkpoint path")
    p.add_argument("--variant", choices=models.VARIANTS, default="basic")
    p.add_argument("--dim", type=int)
    p.add_argument("--lr", type=float, default=training.TrainConfig.learning_rate)
    p.add_argument("--batch-size", type=int, default=training.TrainConfig.batch_size)
    p.add_argument("--epochs", type=int, default=training.TrainConfig.epochs)
    p.add_argument("--l2", type=float, default=training.TrainConfig.l2)
    p.add_argument("--init-scale", type=float, default=training.TrainConfig.init_scale)
    p.add_argument("--split-fraction", type=float, default=0.9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--deterministic", action="store_true")
    p.add_argument("--early-stop", action="store_true")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--manifest", help="split manifest path (default: CHECKPOINT.split.json)")
    p.add_argument("--log-file", help="per-epoch TSV log (default: stderr)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score the validation split")
    p.add_argument("checkpoint")
    p.add_argument("observations")
    p.add_argument("-o", "--output", required=True, help="report JSON path")
    p.add_argument("--pr-tsv", help="PR curve TSV path (default: OUTPUT.pr.tsv)")
    p.add_argument("--manifest")
    p.add_argument("--split-fraction", type=float)
    p.add_argument("--positive-class", choices=evaluation.POSITIVE_CLASSES, default="bad")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="acceptance probability for user/item pairs")
    p.add_argument("checkpoint")
    p.add_argument("--user")
    p.add_argument("--item")
    p.add_argument("--pairs", help="TSV of user, item pairs")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("analyze", help="interpretation reports")
    p.add_argument("checkpoint")
    p.add_argument("observations")
    p.add_argument("--report", required=True,
                   choices=("percentiles", "top-bottom", "pca", "correlation", "churn"))
    p.add_argument("--out-dir", required=True)
    p.add_argument("-k", type=int, default=5)
    p.add_argument("--components", type=int, default=2)
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_analyze)
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    pre, _ = parser.parse_known_args(argv)
    if pre.config:
        with open(pre.config, encoding="utf-8") as fh:
            overrides = {k.replace("-", "_"): v for k, v in json.load(fh).items()}
        for action in parser._subparsers._group_actions:
            for subparser in action.choices.values():
                subparser.set_defaults(**overrides)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except (UsageError, analysis.AnalysisError, dataset.DataFormatError,
            training.TrainingError, ValueError, OSError) as exc:
        print(f"editoutcome {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
