"""Command-line entry point: generate, oracle, run, score, stats, pipeline.

Every stage reads and writes files and leaves a ``*.manifest.json`` next to
its main output.  Exit status: 0 success, 1 validation error, 2 transport
failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .errors import ConfigError, NormBenchError, ScoreError, TransportError, VocabularyError
from .evaluation import corpus_stats, emit_report, ground_truth_from_records, score
from .harness import PromptTemplate, run_model
from .norms import evaluate_all
from .records import Manifest, atomic_write, read_corpus, read_jsonl, write_corpus, write_jsonl
from .storygen import DEFAULT_NOISE_RATE, REFERENCE_SEED, GenConfig, generate_corpus
from .transport import ExchangeCache, HTTPTransport, ModelConfig, ReplayTransport
from .world import load_world

log = logging.getLogger("normbench")

EXIT_OK, EXIT_INVALID, EXIT_TRANSPORT = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _manifest_path(path: Path) -> Path:
    return path.with_name(path.name + ".manifest.json")


# --------------------------------------------------------------------------
# stages


def cmd_generate(args) -> int:
    vocabulary, floor_plan = load_world(args.world)
    config = GenConfig(seed=args.seed, stories_per_task_count=args.stories_per_task_count,
                       noise_rate=args.noise_rate, enable_extension_events=args.extension_events)
    manifest = Manifest("generate", {**config.echo(), "world": args.world})
    corpus = generate_corpus(config, vocabulary, floor_plan)
    out = Path(args.output)
    write_corpus(out, corpus)
    manifest.add_output(out)
    manifest.extra["n_stories"] = len(corpus)
    manifest.extra["total_events"] = sum(len(s.events) for s in corpus)
    manifest.write(_manifest_path(out))
    print(f"wrote {len(corpus)} stories to {out}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    vocabulary, floor_plan = load_world(args.world)
    corpus = read_corpus(args.corpus, vocabulary)
    records = [j.to_record(s.id) for s in corpus for j in evaluate_all(s, vocabulary, floor_plan)]
    out = Path(args.output)
    write_jsonl(out, records)
    manifest = Manifest("oracle", {"world": args.world})
    manifest.add_input(args.corpus)
    manifest.add_output(out)
    manifest.write(_manifest_path(out))
    print(f"wrote {len(records)} judgements to {out}")
    return EXIT_OK


def _model_config(args) -> ModelConfig:
    return ModelConfig(
        model_name=args.model,
        endpoint=args.endpoint,
        api_key_env=args.api_key_env,
        dialect=args.dialect,
        max_attempts=args.max_attempts,
        timeout=args.timeout,
    )


def cmd_run(args) -> int:
    vocabulary, _ = load_world(args.world)
    corpus = read_corpus(args.corpus, vocabulary)
    template = PromptTemplate.load(args.template, dialect=args.dialect)
    model = _model_config(args)
    if args.transport == "live":
        transport = HTTPTransport()
    else:
        if not args.responses:
            raise ConfigError("--responses is required with the replay transport")
        transport = ReplayTransport(args.responses)
    cache = ExchangeCache(args.cache)
    records, summary = run_model(corpus, model, template, cache, transport,
                                 concurrency=args.concurrency)
    out = Path(args.output)
    write_jsonl(out, records)
    manifest = Manifest("run", {
        "model": model.echo(),
        "transport": args.transport,
        "responses": args.responses,
        "cache": args.cache,
        "concurrency": args.concurrency,
        "template_digest": template.digest,
    })
    manifest.add_input(args.corpus)
    manifest.add_output(out)
    manifest.extra["summary"] = summary.to_dict()
    manifest.extra["transport_calls"] = transport.calls
    manifest.write(_manifest_path(out))
    print(f"wrote {len(records)} verdict records to {out} "
          f"({len(summary.failed_stories)} failed stories, {transport.calls} transport calls)")
    if summary.failed_stories:
        print(f"failed stories: {', '.join(summary.failed_stories)}", file=sys.stderr)
    if summary.all_failed:
        return EXIT_TRANSPORT
    return EXIT_OK


def cmd_score(args) -> int:
    truth = ground_truth_from_records(read_jsonl(args.ground_truth))
    reports = []
    for path in args.model_records:
        reports.append(score(truth, read_jsonl(path)))
    out = Path(args.output_dir)
    written = emit_report(reports, out, args.format)
    manifest = Manifest("score", {"format": args.format})
    manifest.add_input(args.ground_truth)
    for path in args.model_records:
        manifest.add_input(path)
    for path in written:
        manifest.add_output(path)
    manifest.write(out / "score.manifest.json")
    print(f"wrote report to {out}")
    return EXIT_OK


def cmd_stats(args) -> int:
    vocabulary, _ = load_world(args.world)
    stats = corpus_stats(read_corpus(args.corpus, vocabulary))
    text = json.dumps(stats.to_dict(), indent=2, ensure_ascii=False) + "\n"
    if args.output:
        out = Path(args.output)
        atomic_write(out, text.encode("utf-8"))
        manifest = Manifest("stats", {})
        manifest.add_input(args.corpus)
        manifest.add_output(out)
        manifest.write(_manifest_path(out))
    print(f"total events: {stats.total}, unique: {stats.unique}, duplicated: {stats.duplicated}")
    return EXIT_OK


def cmd_pipeline(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ns = argparse.Namespace(**vars(args))
    ns.output = str(out / "corpus.jsonl")
    ns.stories_per_task_count = args.stories_per_task_count
    cmd_generate(ns)
    ns.corpus = ns.output
    ns.output = str(out / "judgements.jsonl")
    cmd_oracle(ns)
    ns.transport = "live" if args.live else "replay"
    ns.cache = args.cache or str(out / "cache")
    ns.output = str(out / "verdicts.jsonl")
    status = cmd_run(ns)
    if status != EXIT_OK:
        return status
    ns.ground_truth = str(out / "judgements.jsonl")
    ns.model_records = [ns.output]
    ns.output_dir = str(out / "report")
    cmd_score(ns)
    ns.output = str(out / "stats.json")
    return cmd_stats(ns)


# --------------------------------------------------------------------------
# argument parsing


def _add_world(p):
    p.add_argument("--world", help="household config JSON (default: bundled household)")


def _add_gen(p):
    p.add_argument("--seed", type=int, default=REFERENCE_SEED, help="master seed")
    p.add_argument("--stories-per-task-count", type=int, default=20)
    p.add_argument("--noise-rate", type=float, default=DEFAULT_NOISE_RATE,
                   help="per-slot noise insertion probability")
    p.add_argument("--extension-events", action="store_true",
                   help="emit knock and phone-pickup events")


def _add_run(p):
    p.add_argument("--model", default="replay-model", help="model name sent to the endpoint")
    p.add_argument("--endpoint", default=ModelConfig.endpoint)
    p.add_argument("--api-key-env", default=ModelConfig.api_key_env,
                   help="environment variable holding the API credential")
    p.add_argument("--dialect", default="chat", help="prompt wrapper dialect: chat, llama2, mixtral")
    p.add_argument("--template", help="prompt template file (default: bundled template)")
    p.add_argument("--responses", help="directory of canned responses for the replay transport")
    p.add_argument("--concurrency", type=int, default=1)
    p.add_argument("--max-attempts", type=int, default=3)
    p.add_argument("--timeout", type=float, default=120.0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="normbench", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="generate a story corpus")
    _add_gen(p)
    _add_world(p)
    p.add_argument("--output", "-o", default="corpus.jsonl")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("oracle", help="judge a corpus with the symbolic norm monitor")
    p.add_argument("corpus")
    _add_world(p)
    p.add_argument("--output", "-o", default="judgements.jsonl")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("run", help="query a model on every story")
    p.add_argument("corpus")
    _add_world(p)
    _add_run(p)
    p.add_argument("--transport", choices=("live", "replay"), default="replay")
    p.add_argument("--cache", default="cache")
    p.add_argument("--output", "-o", default="verdicts.jsonl")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("score", help="score model verdicts against ground truth")
    p.add_argument("--ground-truth", required=True,
                   help="oracle judgements or imported annotation records")
    p.add_argument("--model-records", required=True, nargs="+")
    p.add_argument("--output-dir", default="report")
    p.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("stats", help="event frequency statistics of a corpus")
    p.add_argument("corpus")
    _add_world(p)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("pipeline", help="generate, judge, run, score and report in one go")
    _add_gen(p)
    _add_world(p)
    _add_run(p)
    p.add_argument("--live", action="store_true", help="use the live HTTP transport")
    p.add_argument("--transport", choices=("replay",), default="replay",
                   help="accepted for symmetry with `run`; use --live for HTTP")
    p.add_argument("--cache")
    p.add_argument("--out", default="normbench-out")
    p.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except TransportError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except (ScoreError, ConfigError, VocabularyError, NormBenchError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
