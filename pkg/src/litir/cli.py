"""Command-line entry point: ``litir {index,run,eval,compare,li-curve}``.

Exit codes: 0 ok, 1 other failure, 2 missing/unreadable input, 3 duplicate
document id, 4 unknown scorer, 5 run and qrels share no topics.
"""

from __future__ import annotations

import argparse
import fnmatch
import io
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .evaluation import RunReport, evaluate_run, format_per_topic_csv, format_report
from .index import DuplicateDocError, Index, IndexFormatError, build_index, load_index, save_index
from .li_core import binary_li_curve
from .scoring import SCORER_NAMES, ConfigurationError, Query, ScorerSpec, rank
from .text_pipeline import AnalyzerConfig, default_stopwords, load_stopwords
from .trec_io import (
    TOPIC_FIELDS,
    ParseLog,
    RankedRun,
    Topic,
    TrecParseError,
    format_run,
    open_input,
    parse_qrels,
    parse_topics,
    parse_trec_docs,
    read_run,
    topic_to_query_text,
)

log = logging.getLogger("litir")

EXIT_OK, EXIT_FAIL, EXIT_IO, EXIT_DUPLICATE, EXIT_SCORER, EXIT_DISJOINT = range(6)


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_FAIL):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class RunConfig:
    index_path: str
    topics_path: str
    fields: tuple[str, ...]
    scorer: ScorerSpec
    k: int = 1000
    tag: str = "litir"
    analyzer: AnalyzerConfig | None = None

    def __post_init__(self):
        if self.k < 1:
            raise CliError("--k must be >= 1")
        if not self.tag or any(c.isspace() for c in self.tag):
            raise CliError("--tag must be a non-empty word")


# -- helpers ------------------------------------------------------------------

def _analyzer_from_args(args) -> AnalyzerConfig | None:
    """Analyzer requested on the command line, or None if no analyzer flag was given."""
    if not (args.stem or args.stopwords or args.no_stopwords or args.min_token_length):
        return None
    if args.no_stopwords:
        stop = frozenset()
    elif args.stopwords:
        stop = load_stopwords(_existing(args.stopwords))
    else:
        stop = default_stopwords()
    return AnalyzerConfig(
        stemming=bool(args.stem),
        stopword_list=stop,
        min_token_length=args.min_token_length or 1,
    )


def _existing(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise CliError(f"no such file: {path}", EXIT_IO)
    return p


def _corpus_files(paths, include: list[str], exclude: list[str]) -> list[Path]:
    files = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            found = sorted(f for f in p.rglob("*") if f.is_file())
        elif p.is_file():
            found = [p]
        else:
            raise CliError(f"no such file or directory: {raw}", EXIT_IO)
        for f in found:
            rel = f.as_posix()
            if include and not any(fnmatch.fnmatch(rel, g) for g in include):
                continue
            if any(fnmatch.fnmatch(rel, g) for g in exclude):
                continue
            files.append(f)
    return files


def _parse_fields(spec: str) -> tuple[str, ...]:
    fields = tuple(f.strip() for f in spec.split(",") if f.strip())
    bad = [f for f in fields if f not in TOPIC_FIELDS]
    if bad or not fields:
        raise CliError(f"--fields must be a subset of {','.join(TOPIC_FIELDS)}")
    return fields


def _scorer(name: str, args) -> ScorerSpec:
    try:
        return ScorerSpec.from_name(name, b=args.b, k1=args.k1)
    except ConfigurationError as exc:
        raise CliError(str(exc), EXIT_SCORER) from None


def _load_index(path: str) -> Index:
    try:
        return load_index(_existing(path))
    except IndexFormatError as exc:
        raise CliError(f"cannot load index {path}: {exc}") from None


def _resolve_analyzer(ix: Index, requested: AnalyzerConfig | None, force: bool) -> AnalyzerConfig:
    if requested is None or requested.fingerprint == ix.analyzer_fingerprint:
        return ix.analyzer
    if not force:
        raise CliError(
            f"analyzer fingerprint {requested.fingerprint} does not match index "
            f"fingerprint {ix.analyzer_fingerprint}; rerun with --force to override"
        )
    log.warning("analyzer mismatch with index; continuing because of --force")
    return requested


def _read_topics(path: str, plog: ParseLog) -> list[Topic]:
    with open_input(_existing(path)) as fh:
        return parse_topics(fh, plog)


# Per-process state for parallel topic ranking.
_worker_ix: Index | None = None


def _init_worker(index_path: str) -> None:
    global _worker_ix
    _worker_ix = load_index(index_path)


def _rank_topic(job):
    spec, qid, tokens, k = job
    return qid, rank(spec, _worker_ix, Query.from_tokens(qid, tokens), k)


def produce_run(cfg: RunConfig, ix: Index, topics: list[Topic], workers: int = 1) -> RankedRun:
    """Rank every topic; output is identical for any worker count."""
    analyzer = cfg.analyzer or ix.analyzer
    jobs = []
    for t in topics:
        text = topic_to_query_text(t, cfg.fields)
        tokens = Query.from_text(t.number, text, analyzer).tokens
        if not tokens:
            log.warning("topic %s: empty query after analysis; no results", t.number)
        jobs.append((cfg.scorer, t.number, tokens, cfg.k))
    if workers > 1:
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(cfg.index_path,)) as ex:
            results = list(ex.map(_rank_topic, jobs))
    else:
        results = [(qid, rank(spec, ix, Query.from_tokens(qid, toks), k)) for spec, qid, toks, k in jobs]
    return RankedRun.from_rankings(cfg.tag, results)


def _evaluate(run: RankedRun, qrels) -> RunReport:
    if not set(e.qid for e in run.entries) & set(qrels.topics()):
        raise CliError("run and qrels have no topics in common", EXIT_DISJOINT)
    return evaluate_run(run, qrels)


def _write_out(text: str, out: str | None) -> None:
    if out and out != "-":
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# -- subcommands --------------------------------------------------------------

def cmd_index(args) -> int:
    cfg = _analyzer_from_args(args) or AnalyzerConfig.default()
    files = _corpus_files(args.corpus, args.include, args.exclude)
    plog = ParseLog()

    def docs():
        for f in files:
            with open_input(f) as fh:
                yield from parse_trec_docs(fh, plog)

    try:
        ix = build_index(docs(), cfg)
    except DuplicateDocError as exc:
        raise CliError(str(exc), EXIT_DUPLICATE) from None
    except TrecParseError as exc:
        raise CliError(f"parse error: {exc}") from None
    save_index(ix, args.out)
    print(f"N={ix.N} L={ix.L} vocab={ix.vocab_size} skipped={plog.skipped}")
    return EXIT_OK


def cmd_run(args) -> int:
    spec = _scorer(args.scorer, args)
    ix = _load_index(args.index)
    analyzer = _resolve_analyzer(ix, _analyzer_from_args(args), args.force)
    cfg = RunConfig(
        index_path=args.index,
        topics_path=args.topics,
        fields=_parse_fields(args.fields),
        scorer=spec,
        k=args.k,
        tag=args.tag or f"litir-{spec.name}",
        analyzer=analyzer,
    )
    plog = ParseLog()
    topics = _read_topics(cfg.topics_path, plog)
    run = produce_run(cfg, ix, topics, args.workers)
    _write_out(format_run(run), args.out)
    if plog.skipped:
        print(f"skipped {plog.skipped} malformed topic record(s)", file=sys.stderr)
    return EXIT_OK


def cmd_eval(args) -> int:
    with open_input(_existing(args.run)) as fh:
        try:
            run = read_run(fh)
        except TrecParseError as exc:
            raise CliError(f"bad run file: {exc}") from None
    plog = ParseLog()
    with open_input(_existing(args.qrels)) as fh:
        qrels = parse_qrels(fh, plog)
    if not run.entries:
        raise CliError("run file is empty")
    report = _evaluate(run, qrels)
    out = format_report(report)
    if plog.skipped or plog.duplicates:
        out += f"qrels_skipped_lines\t{plog.skipped}\nqrels_duplicates\t{plog.duplicates}\n"
    if args.per_topic:
        out += "\n" + format_per_topic_csv(report)
    sys.stdout.write(out)
    return EXIT_OK


COMPARE_METRICS = ("map", "gmap", "mean_p10", "mean_ndcg10", "mean_rprec")
COMPARE_LABELS = ("map", "gmap", "P10", "ndcg10", "rprec")


def _ratio(value: float, base: float) -> str:
    return "inf" if base == 0 else f"{value / base:.4f}"


def compare_table(results: list[tuple[str, RunReport]]) -> str:
    header = ["scorer", *COMPARE_LABELS, *(f"{m}_ratio" for m in COMPARE_LABELS)]
    base = results[0][1]
    rows = [",".join(header)]
    for name, rep in results:
        vals = [getattr(rep, m) for m in COMPARE_METRICS]
        ratios = [_ratio(v, getattr(base, m)) for v, m in zip(vals, COMPARE_METRICS)]
        rows.append(",".join([name, *(f"{v:.4f}" for v in vals), *ratios]))
    return "\n".join(rows) + "\n"


def cmd_compare(args) -> int:
    names = [n.strip() for n in args.scorers.split(",") if n.strip()]
    if len(names) < 2:
        raise CliError("--scorers needs at least two scorer names")
    specs = [_scorer(n, args) for n in names]
    ix = _load_index(args.index)
    analyzer = _resolve_analyzer(ix, _analyzer_from_args(args), args.force)
    plog = ParseLog()
    topics = _read_topics(args.topics, plog)
    with open_input(_existing(args.qrels)) as fh:
        qrels = parse_qrels(fh, plog)
    fields = _parse_fields(args.fields)
    results = []
    for spec in specs:
        cfg = RunConfig(args.index, args.topics, fields, spec, args.k, f"litir-{spec.name}", analyzer)
        run = produce_run(cfg, ix, topics, args.workers)
        results.append((spec.name, _evaluate(run, qrels)))
    table = compare_table(results)
    if args.csv:
        Path(args.csv).write_text(table, encoding="utf-8")
    sys.stdout.write(table)
    return EXIT_OK


def format_li_curve(steps: int) -> str:
    buf = io.StringIO()
    buf.write("p,li,abs_delta_h\n")
    for p, li, dh in binary_li_curve(steps):
        buf.write(f"{p:.6f},{li:.6f},{dh:.6f}\n")
    return buf.getvalue()


def cmd_li_curve(args) -> int:
    try:
        text = format_li_curve(args.steps)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    _write_out(text, args.out)
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------

def _add_analyzer_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("analyzer")
    g.add_argument("--stem", action="store_true", default=None, help="apply Porter stemming")
    g.add_argument("--stopwords", metavar="FILE", help="stopword list (default: bundled SMART list)")
    g.add_argument("--no-stopwords", action="store_true", default=None, help="disable stopword removal")
    g.add_argument("--min-token-length", type=int, metavar="N")


def _add_retrieval_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--fields", default="title", help=f"topic fields, subset of {','.join(TOPIC_FIELDS)}")
    p.add_argument("--k", type=int, default=1000, help="retrieval depth (default 1000)")
    p.add_argument("--b", type=float, default=0.75, help="BM25 b (default 0.75)")
    p.add_argument("--k1", type=float, default=1.5, help="BM25 k1 (default 1.5)")
    p.add_argument("--force", action="store_true", default=None, help="ignore analyzer mismatch")
    p.add_argument("--workers", type=int, default=1, help="processes for topic ranking")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="litir", description=__doc__.splitlines()[0])
    parser.add_argument("--config", metavar="FILE", help="key=value file pre-setting any flag")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="build an index from TREC document files")
    p.add_argument("corpus", nargs="+", help="TREC files or directories (plain or gzip)")
    p.add_argument("-o", "--out", required=True, help="index file to write")
    p.add_argument("--include", action="append", default=[], metavar="GLOB")
    p.add_argument("--exclude", action="append", default=[], metavar="GLOB")
    _add_analyzer_flags(p)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("run", help="rank every topic and write a TREC run file")
    p.add_argument("index")
    p.add_argument("topics")
    p.add_argument("--scorer", default="licos", help=f"one of {', '.join(SCORER_NAMES)}")
    p.add_argument("--tag")
    p.add_argument("-o", "--out", help="run file (default stdout)")
    _add_retrieval_flags(p)
    _add_analyzer_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="evaluate a run against qrels")
    p.add_argument("run")
    p.add_argument("qrels")
    p.add_argument("--per-topic", action="store_true", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="run and evaluate several scorers against the first")
    p.add_argument("index")
    p.add_argument("topics")
    p.add_argument("qrels")
    p.add_argument("--scorers", default="tfnidf,tfidf,bm25,lib,lif,lib+lif,lib*lif,licos")
    p.add_argument("--csv", metavar="FILE", help="also write the table as CSV")
    _add_retrieval_flags(p)
    _add_analyzer_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("li-curve", help="least information vs entropy for two inferences")
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("-o", "--out", help="CSV file (default stdout)")
    p.set_defaults(func=cmd_li_curve)
    return parser


_TRUE = {"1", "true", "yes", "on"}


def _read_config(path: str) -> dict[str, str]:
    values = {}
    for lineno, line in enumerate(_existing(path).read_text("utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        values[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return values


def _apply_config(args, parser: argparse.ArgumentParser, argv) -> argparse.Namespace:
    """Fill flags the user did not pass on the command line from the config file."""
    conf = _read_config(args.config)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in sub._actions}
    explicit = set()
    for tok in argv:
        if tok.startswith("--"):
            explicit.add(tok[2:].split("=", 1)[0].replace("-", "_"))
    for key, raw in conf.items():
        action = actions.get(key)
        if action is None or key in explicit or not action.option_strings:
            continue
        if isinstance(action, argparse._StoreTrueAction):
            value = raw.lower() in _TRUE
        elif isinstance(action, argparse._AppendAction):
            value = [v.strip() for v in raw.split(",") if v.strip()]
        else:
            value = action.type(raw) if action.type else raw
        setattr(args, key, value)
    return args


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    try:
        if args.config:
            args = _apply_config(args, parser, argv)
        return args.func(args)
    except CliError as exc:
        print(f"litir: {exc}", file=sys.stderr)
        return exc.code
    except OSError as exc:
        print(f"litir: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
