"""Command-line front end: parse, gen, run, classify, report.

Exit codes are stable: 0 success, 1 domain failure (certificate rejected,
metric undefined), 2 usage error. All output goes to stdout, diagnostics to
stderr; every subcommand is non-interactive.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import __version__, analytics, certgen, harness, taxonomy, x509

TABLE_ENV_VAR = "PARSEVAL_TABLE"

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2


class _UsageError(Exception):
    pass


def _load_table(path_arg):
    if path_arg:
        return taxonomy.load_table(path_arg)
    env = os.environ.get(TABLE_ENV_VAR)
    if env:
        return taxonomy.load_table(env)
    return taxonomy.load_default_table()


def _read_input(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    return Path(path).read_bytes()


def cmd_parse(args) -> int:
    try:
        data = _read_input(args.input)
    except OSError as e:
        print(f"error: cannot read input: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        der = x509.load_der_input(data)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    profile = x509.PROFILES[args.profile]
    try:
        cert = x509.parse_certificate(der, profile)
    except taxonomy.CategorizedError as e:
        offset = "" if e.offset is None else f" offset={e.offset}"
        print(f"REJECT {e.category.value} [{e.check_id}]{offset}: {e.message}")
        return EXIT_DOMAIN
    subject = ", ".join(f"{oid}={value}" for oid, value in cert.subject) or "<empty>"
    print(f"ACCEPT profile={profile.name}")
    print(f"  fingerprint : {cert.fingerprint}")
    print(f"  version     : v{cert.version + 1} (encoded {cert.version})")
    print(f"  serial      : {cert.serial}")
    print(f"  subject     : {subject}")
    print(f"  validity    : {cert.not_before.isoformat()} .. {cert.not_after.isoformat()}")
    print(f"  key         : {cert.spki.algorithm} ({cert.spki.algorithm_oid})")
    print(f"  extensions  : {len(cert.extensions)}")
    return EXIT_OK


def cmd_gen(args) -> int:
    if args.preset:
        defect_id, count = certgen.PRESETS[args.preset]
        if args.count is not None:
            count = args.count
    else:
        if not args.defect:
            print("error: provide --defect or --preset", file=sys.stderr)
            return EXIT_USAGE
        defect_id = args.defect
        count = args.count if args.count is not None else 10
    spec = certgen.DefectSpec(defect_id=defect_id, count=count, seed=args.seed)
    certs = certgen.generate(spec)
    out = Path(args.out) if args.out else Path(f"{defect_id}-{count}.batch")
    truth = Path(args.truth) if args.truth else out.with_suffix(out.suffix + ".truth.jsonl")
    certgen.write_batch(certs, out, truth)
    print(f"wrote {count} certificates to {out} (ground truth: {truth})", file=sys.stderr)
    print(out)
    return EXIT_OK


def _resolve_parsers(specs, timeout):
    parsers = []
    for spec in specs:
        kind, _, rest = spec.partition(":")
        if kind == "builtin":
            if rest not in x509.PROFILES:
                raise _UsageError(f"unknown builtin profile {rest!r}")
            parsers.append(harness.builtin_parser(rest))
        elif kind == "exec":
            if not rest:
                raise _UsageError("exec: requires a command line")
            import shlex

            parsers.append(harness.probe_adapter(shlex.split(rest), timeout=timeout))
        else:
            raise _UsageError(f"unknown parser spec {spec!r} (use builtin:<profile> or exec:<cmd>)")
    return parsers


def cmd_run(args) -> int:
    batches = list(args.corpus)
    if args.corpus_dir:
        batches.extend(sorted(str(p) for p in Path(args.corpus_dir).glob("*.batch")))
    if not batches:
        print("error: no batch files given", file=sys.stderr)
        return EXIT_USAGE
    try:
        parsers = _resolve_parsers(args.parser, args.timeout)
    except (_UsageError, harness.AdapterError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    table = _load_table(args.table)
    manifest = harness.run(
        batches,
        parsers,
        workers=args.workers,
        store_path=args.store,
        run_id=args.run_id,
        table=table,
        timeout=args.timeout,
        record_durations=not args.no_durations,
    )
    manifest.save(args.manifest)
    rows = harness.read_store(args.store)
    print(
        f"run {manifest.run_id}: {manifest.total_certs} certificates x "
        f"{len(parsers)} parsers, {len(rows)} error rows -> {args.store}",
        file=sys.stderr,
    )
    if manifest.failures:
        print(f"warning: {len(manifest.failures)} failed batches", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


def cmd_classify(args) -> int:
    table = _load_table(args.table)
    warnings = taxonomy.validate_table(table)
    for warning in warnings:
        print(f"table warning: {warning}", file=sys.stderr)
    if args.validate_only:
        return EXIT_DOMAIN if warnings else EXIT_OK
    strings = [args.error_string] if args.error_string is not None else [
        line.rstrip("\n") for line in sys.stdin if line.strip()
    ]
    for s in strings:
        category = taxonomy.classify(args.parser_id, s, table)
        print(f"{category.value}\t{s}")
    return EXIT_OK


def cmd_report(args) -> int:
    rows = harness.read_store(args.store)
    manifest = harness.RunManifest.load(args.manifest)
    predicate = None
    label = ""
    if args.select_error:
        predicate = analytics.error_string_prefix(args.select_error)
        label = f"error-string prefix {args.select_error!r}"
    elif args.select_category:
        predicate = analytics.category_is(args.select_category)
        label = f"category {args.select_category}"
    if predicate and not args.reference:
        print("error: --select-* requires --reference", file=sys.stderr)
        return EXIT_USAGE
    if args.reference and not predicate:
        predicate = lambda row: True  # noqa: E731
        label = "<all errors>"
    try:
        report = analytics.build_report(
            rows,
            manifest,
            reference=args.reference,
            predicate=predicate,
            predicate_label=label,
        )
    except analytics.AnalyticsError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    rendered = analytics.render(report, args.format)
    if args.out:
        Path(args.out).write_text(rendered, encoding="utf-8")
        print(f"wrote report to {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(rendered)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parseval",
        description="Differential conformance testing for X.509 certificate parsers.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse one certificate (DER, PEM, or base64)")
    p.add_argument("input", help="certificate file or - for stdin")
    p.add_argument("--profile", choices=sorted(x509.PROFILES), default="strict")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("gen", help="generate a synthetic certificate batch")
    p.add_argument("--defect", choices=certgen.DEFECT_IDS)
    p.add_argument("--preset", choices=sorted(certgen.PRESETS))
    p.add_argument("--count", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="batch file path (default <defect>-<count>.batch)")
    p.add_argument("--truth", help="ground-truth sidecar path (default <out>.truth.jsonl)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("run", help="run parsers over batch files")
    p.add_argument("--corpus", action="append", default=[], metavar="BATCH")
    p.add_argument("--corpus-dir", help="directory of *.batch files")
    p.add_argument(
        "--parser",
        action="append",
        default=[],
        required=True,
        metavar="SPEC",
        help="builtin:strict | builtin:lenient | exec:<command line>",
    )
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--store", required=True, help="outcome store (JSON lines) to write")
    p.add_argument("--manifest", required=True, help="run manifest path to write")
    p.add_argument("--table", help=f"classification table (default ${TABLE_ENV_VAR} or built-in)")
    p.add_argument("--run-id", default=None)
    p.add_argument("--timeout", type=float, default=harness.DEFAULT_BATCH_TIMEOUT_S)
    p.add_argument(
        "--no-durations",
        action="store_true",
        help="record zero durations (byte-reproducible stores)",
    )
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("classify", help="classify error strings through a table")
    p.add_argument("--table", help=f"classification table (default ${TABLE_ENV_VAR} or built-in)")
    p.add_argument("--parser-id", default="", help="parser id the strings belong to")
    p.add_argument("--validate-only", action="store_true", help="only lint the table")
    p.add_argument("error_string", nargs="?", default=None, help="string (default: stdin lines)")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("report", help="render metrics from a store and manifest")
    p.add_argument("--store", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--format", choices=("json", "text", "csv"), default="text")
    p.add_argument("--reference", default=None, help="reference parser for discrepancy counting")
    p.add_argument("--select-error", default=None, help="discrepancy predicate: error-string prefix")
    p.add_argument("--select-category", default=None, help="discrepancy predicate: category")
    p.add_argument("--out", default=None, help="write rendering to a file instead of stdout")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except (taxonomy.TableFormatError, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except harness.AdapterError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
