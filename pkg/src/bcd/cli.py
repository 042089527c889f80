"""Command line front end: index, search, eval, info and serve.

``bcd -i <path>`` and ``bcd -s <path>`` are kept as aliases for the index
and search modes. Exit codes: 0 success, 1 usage error, 2 data error,
3 external-lifter error.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from . import __version__
from .errors import (
    BcdError,
    ConfigError,
    CorruptDatabaseError,
    IncompatibleDatabaseError,
    LiftError,
    ParseError,
    UnhashableError,
    ValidationError,
)
from .evaluation import (
    containment_emit,
    containment_experiment,
    evaluate,
    load_corpus_dir,
    roc_emit,
    tune_permutations,
)
from .fuzzy_hash import DEFAULT_P, DEFAULT_SEED, DEFAULT_WINDOW, SUPPORTED_P
from .ir_corpus import lift_binary, parse_module, tokenize_module
from .serialize import dumps, search_report_to_objects
from .sim_index import (
    DEFAULT_THRESHOLD,
    FunctionRecord,
    IndexParams,
    index_function,
    load,
    open_or_create,
    save,
    search_binary,
    stats,
)
from .fuzzy_hash import minhash_sign

DEFAULT_DB = "./bcd.bcdb"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_LIFTER = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_input_args(sub):
    sub.add_argument("inputs", nargs="*", help="binaries or .ll files")
    sub.add_argument("-i", "--input", action="append", default=[], dest="flag_inputs",
                     help="additional input path (repeatable)")
    sub.add_argument("-d", "--db", default=DEFAULT_DB, help=f"database path (default {DEFAULT_DB})")
    sub.add_argument("--arch", default=None, help="architecture tag recorded with the functions")
    sub.add_argument("--lifter", default=None, help="lifter command template override")
    sub.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                     help="parallel workers for per-file processing")
    sub.add_argument("--format", choices=("text", "json"), default="text")


def build_parser() -> _Parser:
    parser = _Parser(prog="bcd", description="cross-architecture binary code similarity database")
    parser.add_argument("--version", action="version", version=f"bcd {__version__}")
    subs = parser.add_subparsers(dest="mode", required=True)

    p_index = subs.add_parser("index", help="add functions of the inputs to a database")
    _add_input_args(p_index)
    p_index.add_argument("--p", type=int, default=DEFAULT_P, choices=SUPPORTED_P,
                         help="MinHash permutation count")
    p_index.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p_index.add_argument("--window", type=int, default=DEFAULT_WINDOW, help="shingle window in tokens")

    p_search = subs.add_parser("search", help="rank database matches for every input function")
    _add_input_args(p_search)
    p_search.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p_search.add_argument("--top", type=int, default=20, help="matches shown per function")

    p_eval = subs.add_parser("eval", help="ROC comparison and tuning over a corpus directory")
    p_eval.add_argument("--corpus", required=True, help="directory of .ll files")
    p_eval.add_argument("--algos", default="minhash,simhash,ctph,tlsh",
                        help="comma-separated algorithms to sweep")
    p_eval.add_argument("--out", default="eval-out", help="output directory for CSV and plot")
    p_eval.add_argument("--p", type=int, default=DEFAULT_P, choices=SUPPORTED_P)
    p_eval.add_argument("--tune", default=None,
                        help="comma-separated p values for balanced-accuracy tuning")
    p_eval.add_argument("--contain-parts", default=None,
                        help="corpus dir of part functions for the containment experiment")
    p_eval.add_argument("--contain-combined", default=None,
                        help="corpus dir of combined functions")
    p_eval.add_argument("--part-names", default=None,
                        help="comma-separated part function names (default: all named)")
    p_eval.add_argument("--p-values", default="64,128,256,512,1024",
                        help="p sweep for the containment experiment")

    p_info = subs.add_parser("info", help="database statistics")
    p_info.add_argument("-d", "--db", default=DEFAULT_DB)
    p_info.add_argument("--format", choices=("text", "json"), default="text")

    p_serve = subs.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--data-dir", default=".", help="directory holding <name>.bcdb databases")
    p_serve.add_argument("--addr", default="127.0.0.1:8700")
    p_serve.add_argument("--token", default=None, help="bearer token required for writes")
    p_serve.add_argument("--read-only", action="store_true")
    p_serve.add_argument("--max-upload", type=int, default=32 * 1024 * 1024)

    return parser


def _gather_inputs(args) -> list[str]:
    inputs = list(args.flag_inputs) + list(args.inputs)
    if not inputs:
        raise ValidationError("no input files given")
    return inputs


def _pipeline_file(path: str, arch: str | None, lifter: str | None, params: IndexParams):
    """Lift, parse, tokenize and sign one input file."""
    ir_text = lift_binary(path, lifter_cmd=lifter)
    module = parse_module(ir_text, arch_tag=arch, source_path=os.path.basename(path))
    records, skipped = [], []
    for stream in tokenize_module(module):
        if not stream.tokens:
            skipped.append(stream.function_name)
            continue
        sig = minhash_sign(stream, p=params.p, seed=params.seed, window=params.window)
        records.append(
            FunctionRecord(
                name=stream.function_name,
                source=module.source_path,
                signature=sig,
                token_count=len(stream.tokens),
                arch_tag=module.arch_tag,
            )
        )
    return module, records, skipped


def run_index(args) -> int:
    inputs = _gather_inputs(args)
    params = IndexParams(p=args.p, seed=args.seed, window=args.window)
    idx = open_or_create(args.db, params)
    failures = 0
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        futures = [
            pool.submit(_pipeline_file, path, args.arch, args.lifter, idx.params)
            for path in inputs
        ]
        for path, future in zip(inputs, futures):
            try:
                _, records, skipped = future.result()
            except (LiftError, ConfigError, ParseError, OSError) as exc:
                failures += 1
                print(f"{path}: failed: {exc}", file=sys.stderr)
                continue
            for record in records:
                index_function(idx, record)
            line = f"indexed {len(records)} functions from {path}"
            if skipped:
                line += f" ({len(skipped)} skipped: empty after normalization)"
            print(line)
    save(idx, args.db)
    print(f"database {args.db}: {idx.function_count} functions total")
    return EXIT_LIFTER if failures == len(inputs) and inputs else EXIT_OK


def run_search(args) -> int:
    inputs = _gather_inputs(args)
    if not os.path.exists(args.db):
        raise CorruptDatabaseError(
            f"database {args.db} does not exist; run `bcd index` first"
        )
    idx = load(args.db)
    out = []
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        futures = [
            pool.submit(
                lambda p: search_binary(
                    idx,
                    parse_module(
                        lift_binary(p, lifter_cmd=args.lifter),
                        arch_tag=args.arch,
                        source_path=os.path.basename(p),
                    ),
                    args.threshold,
                ),
                path,
            )
            for path in inputs
        ]
        for path, future in zip(inputs, futures):
            report = future.result()
            out.append((path, report))

    for path, report in out:
        if args.format == "json":
            for obj in search_report_to_objects(report, idx, top=args.top):
                print(dumps(obj))
            continue
        total = len(report.results) + len(report.skipped)
        print(f"{path}: {total} functions")
        for name, matches in report.results.items():
            shown = matches[: args.top]
            if not shown:
                print(f"  {name}: 0 matches")
                continue
            print(f"  {name}:")
            for m in shown:
                rec = idx.functions[m.function_id]
                arch = rec.arch_tag or "-"
                print(
                    f"    {m.score:.3f}  {m.name}  ({m.source}, {arch}, "
                    f"{m.matched_hashes}/{idx.params.p})"
                )
        for name in report.skipped:
            print(f"  {name}: skipped (empty after normalization)")
    return EXIT_OK


def run_eval(args) -> int:
    corpus = load_corpus_dir(args.corpus)
    algorithms = [a.strip() for a in args.algos.split(",") if a.strip()]
    report = evaluate(corpus, algorithms=algorithms, p=args.p)
    csv_path, png_path = roc_emit(report, args.out)
    print(f"corpus: {len(corpus)} functions")
    for algorithm in algorithms:
        auc = report.auc[algorithm]
        auc_text = "n/a" if auc is None else f"{auc:.4f}"
        print(
            f"{algorithm:>8}: pairs={report.pair_counts[algorithm]} "
            f"positives={report.positives[algorithm]} AUC={auc_text}"
        )
    for flag in report.flags:
        print(f"note: {flag}")
    print(f"wrote {csv_path} and {png_path}")

    if args.tune:
        p_values = [int(v) for v in args.tune.split(",")]
        print("p      TPR     TNR     BA")
        for row in tune_permutations(corpus, p_values):
            mark = "  <- best" if row.best else ""
            tpr = "n/a" if row.tpr is None else f"{row.tpr:.3f}"
            tnr = "n/a" if row.tnr is None else f"{row.tnr:.3f}"
            ba = "n/a" if row.balanced_accuracy is None else f"{row.balanced_accuracy:.3f}"
            print(f"{row.p:<6d} {tpr:>6} {tnr:>6} {ba:>6}{mark}")

    if args.contain_parts and args.contain_combined:
        parts_corpus = load_corpus_dir(args.contain_parts)
        combined_corpus = load_corpus_dir(args.contain_combined)
        wanted = None
        if args.part_names:
            wanted = {n.strip() for n in args.part_names.split(",")}
        parts = [
            f.stream for f in parts_corpus
            if f.is_named and (wanted is None or f.label in wanted)
        ]
        combined = [f.stream for f in combined_corpus if f.is_named]
        p_values = [int(v) for v in args.p_values.split(",")]
        creport = containment_experiment(parts, combined, p_values)
        path = containment_emit(creport, args.out)
        print(f"wrote {path}")
        for p in creport.p_values:
            for pair, avg in sorted(creport.arch_pair_averages[p].items()):
                print(f"p={p:<5d} {pair[0]} vs {pair[1]}: {avg:.6f}")
    return EXIT_OK


def run_info(args) -> int:
    if not os.path.exists(args.db):
        raise CorruptDatabaseError(f"database {args.db} does not exist")
    idx = load(args.db)
    s = stats(idx, args.db)
    if args.format == "json":
        print(
            dumps(
                {
                    "db": args.db,
                    "functions": s.functions,
                    "buckets": s.buckets,
                    "p": s.p,
                    "seed": s.seed,
                    "window": s.window,
                    "size_on_disk": s.size_on_disk,
                }
            )
        )
    else:
        print(f"database:   {args.db}")
        print(f"functions:  {s.functions}")
        print(f"buckets:    {s.buckets}")
        print(f"params:     p={s.p} seed={s.seed:#x} window={s.window}")
        if s.size_on_disk is not None:
            print(f"size:       {s.size_on_disk} bytes")
    return EXIT_OK


def run_serve(args) -> int:
    import uvicorn

    from .service import create_app

    host, _, port = args.addr.rpartition(":")
    app = create_app(
        data_dir=args.data_dir,
        read_only=args.read_only,
        token=args.token,
        max_upload=args.max_upload,
    )
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
    return EXIT_OK


_MODE_ALIASES = {"-i": "index", "-s": "search"}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    # paper-style invocation: `bcd -i <path>` / `bcd -s <path>`
    if argv and argv[0] in _MODE_ALIASES:
        argv = [_MODE_ALIASES[argv[0]]] + argv[1:]
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handlers = {
        "index": run_index,
        "search": run_search,
        "eval": run_eval,
        "info": run_info,
        "serve": run_serve,
    }
    try:
        return handlers[args.mode](args)
    except (LiftError, ConfigError) as exc:
        print(f"bcd: {exc}", file=sys.stderr)
        return EXIT_LIFTER
    except (
        ParseError,
        CorruptDatabaseError,
        IncompatibleDatabaseError,
        ValidationError,
        UnhashableError,
        BcdError,
        FileNotFoundError,
    ) as exc:
        print(f"bcd: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())
