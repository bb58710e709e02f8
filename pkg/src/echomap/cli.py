"""Command-line entry point: one subcommand per pipeline stage, plus `all` and `synth`."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import pipeline as pl
from .errors import EchomapError
from .synth import SyntheticDatasetSpec, write_synthetic_dataset

logger = logging.getLogger(__name__)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key = value config file; flags override it")
    parser.add_argument("--out", help="run directory for artifacts (default: run)")
    parser.add_argument("--seed", type=int, help="global RNG seed")


def _add_inputs(parser: argparse.ArgumentParser, *names: str) -> None:
    helps = {
        "edges": "TSV follow edges: follower_id<TAB>followee_id",
        "docs": "JSON-lines documents: {user_id, tokens|text}",
        "seeds": "JSON seed accounts: [{user_id, label}, ...]",
        "stopwords": "stopword list, one term per line",
        "exclude": "excluded user ids, one per line",
        "metadata": "JSON-lines user metadata: {user_id, screen_name}",
    }
    for name in names:
        parser.add_argument(f"--{name}", help=helps[name])


def _add_detect_opts(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--resolution", type=float, help="modularity resolution (default 1.0)")
    parser.add_argument("--min-gain", type=float, help="minimum modularity gain per move")
    parser.add_argument("--max-passes", type=int, help="max local-move passes per level")
    parser.add_argument("--min-community-size", type=int,
                        help="drop communities smaller than this (default 10)")


def _add_corpus_opts(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--min-count", type=int, help="drop terms rarer than this (default 5)")
    parser.add_argument("--max-doc-fraction", type=float,
                        help="drop terms in more than this fraction of documents (default 0.5)")


def _add_lda_opts(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--topics", type=int, help="number of topics K (default 50)")
    parser.add_argument("--alpha", type=float, help="document-topic prior (default 50/K)")
    parser.add_argument("--beta", type=float, help="topic-word prior (default 0.01)")
    parser.add_argument("--iterations", type=int, help="Gibbs iterations (default 1000)")
    parser.add_argument("--burn-in", type=int, help="burn-in iterations (default 200)")
    parser.add_argument("--stride", type=int, help="iterations between averaged samples")


def _add_report_opts(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dominance-min", type=float,
                        help="minimum dominant share to flag a topic (default 0.3)")
    parser.add_argument("--ratio-min", type=float,
                        help="minimum dominant/runner-up ratio to flag (default 3.0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="echomap",
        description="Echo-chamber analysis of follow networks: reciprocal graph, "
                    "Louvain communities, seed-follow profiles, pooled LDA topics, "
                    "and community-topic concentration reports.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load edges, build the reciprocal network")
    _add_common(p)
    _add_inputs(p, "edges")

    p = sub.add_parser("detect", help="Louvain communities plus size/exclusion filtering")
    _add_common(p)
    _add_inputs(p, "exclude")
    _add_detect_opts(p)

    p = sub.add_parser("profile", help="per-community seed-account follow ratios")
    _add_common(p)
    _add_inputs(p, "edges", "seeds")
    p.add_argument("--lift-threshold", type=float,
                   help="ratio-over-baseline needed to name a community (default 2.0)")

    p = sub.add_parser("corpus", help="pool documents per user and build the bag of words")
    _add_common(p)
    _add_inputs(p, "docs", "stopwords")
    _add_corpus_opts(p)

    p = sub.add_parser("lda", help="fit the topic model on the pooled corpus")
    _add_common(p)
    _add_lda_opts(p)

    p = sub.add_parser("crosstab", help="community-by-topic proportion table")
    _add_common(p)
    p.add_argument("--aggregation", choices=["mean", "token-mass"],
                   help="document weighting within communities (default mean)")

    p = sub.add_parser("report", help="flag echo-chambered topics")
    _add_common(p)
    _add_report_opts(p)

    p = sub.add_parser("export-gexf", help="write the partitioned network as GEXF 1.2")
    _add_common(p)
    _add_inputs(p, "metadata")
    p.add_argument("--min-degree", type=int, help="omit nodes with fewer edges (default 0)")

    p = sub.add_parser("synth", help="generate a synthetic dataset with ground truth")
    p.add_argument("--out", required=True, help="dataset directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--blocks", default="50,50,50,50", help="comma-separated block sizes")
    p.add_argument("--p-in", type=float, default=0.3)
    p.add_argument("--p-out", type=float, default=0.02)
    p.add_argument("--tweets-per-user", type=int, default=6)
    p.add_argument("--tokens-per-tweet", type=int, default=30)

    p = sub.add_parser("all", help="run every stage in order and write the manifest")
    _add_common(p)
    _add_inputs(p, "edges", "docs", "seeds", "stopwords", "exclude", "metadata")
    _add_detect_opts(p)
    _add_corpus_opts(p)
    _add_lda_opts(p)
    _add_report_opts(p)
    p.add_argument("--lift-threshold", type=float)
    p.add_argument("--min-degree", type=int)
    p.add_argument("--aggregation", choices=["mean", "token-mass"])
    return parser


_STAGE_COMMANDS = {
    "ingest": "ingest",
    "detect": "detect",
    "profile": "profile",
    "corpus": "corpus",
    "lda": "lda",
    "crosstab": "crosstab",
    "report": "report",
    "export-gexf": "export-gexf",
}


def _config_from_args(args: argparse.Namespace) -> pl.PipelineConfig:
    file_values = pl.load_config_file(args.config) if getattr(args, "config", None) else {}
    overrides = {k: v for k, v in vars(args).items()
                 if k in pl._CONVERTERS and v is not None}
    return pl.build_config(file_values, overrides)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        datefmt="%H:%M:%S",
        stream=sys.stderr,
    )
    try:
        if args.command == "synth":
            spec = SyntheticDatasetSpec(
                block_sizes=tuple(int(s) for s in args.blocks.split(",")),
                p_in=args.p_in, p_out=args.p_out,
                tweets_per_user=args.tweets_per_user,
                tokens_per_tweet=args.tokens_per_tweet,
                seed=args.seed)
            dataset = write_synthetic_dataset(spec, args.out)
            print(json.dumps({"files": dataset.files}, indent=2))
            return 0
        cfg = _config_from_args(args)
        if args.command == "all":
            manifest = pl.run_pipeline(cfg)
            print(json.dumps({"config_hash": manifest["config_hash"],
                              "artifacts": sorted(manifest["artifacts"])}, indent=2))
            return 0
        counts = pl.run_stage(_STAGE_COMMANDS[args.command], cfg)
        print(json.dumps({args.command: counts}, indent=2))
        return 0
    except EchomapError as exc:
        logger.error("%s", exc)
        return 1
    except (FileNotFoundError, ValueError) as exc:
        logger.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
