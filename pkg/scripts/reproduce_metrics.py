#!/usr/bin/env python3
"""End-to-end experiment: generate defect corpora, run both builtin profiles
(and the OpenSSL adapter when built), and render every metric family.

Usage: python scripts/reproduce_metrics.py [--workdir OUT] [--seed N]
"""

import argparse
import sys
from pathlib import Path

from parseval import analytics, certgen, harness, taxonomy
from parseval.certgen import DefectSpec
from parseval.harness import builtin_parser, probe_adapter

ADAPTER_BIN = Path(__file__).resolve().parent.parent / "adapters" / "openssl" / "parseval-openssl-adapter"

CORPORA = [
    ("control", "none", 500),
    ("invalid-version", "invalid-version", 160),
    ("rsa-bad-exponent", "rsa-bad-exponent", 264),
    ("ec-bad-point", "ec-bad-point", 17),
    ("bad-uri", "bad-uri", 50),
    ("asn1-broken", "truncated", 50),
]

DISCREPANCY_PREDICATES = [
    ("invalid version", "version:"),
    ("invalid RSA public exponent", "rsa-exponent:"),
    ("invalid EC point", "ec-point:"),
    ("cannot parse URI", "san-uri:"),
]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--workdir", default="reproduction", type=Path)
    ap.add_argument("--seed", default=2024, type=int)
    ap.add_argument("--workers", default=None, type=int)
    args = ap.parse_args()
    args.workdir.mkdir(parents=True, exist_ok=True)

    batches = []
    for name, defect, count in CORPORA:
        path = args.workdir / f"{name}.batch"
        certs = certgen.generate(DefectSpec(defect, count, seed=args.seed))
        certgen.write_batch(certs, path, path.with_suffix(".truth.jsonl"))
        batches.append(path)
        print(f"generated {path} ({count} certificates, defect={defect})", file=sys.stderr)

    parsers = [builtin_parser("strict"), builtin_parser("lenient")]
    if ADAPTER_BIN.exists():
        parsers.append(probe_adapter([str(ADAPTER_BIN)]))
        print(f"using external adapter {ADAPTER_BIN.name}", file=sys.stderr)
    else:
        print("external adapter not built (make -C adapters/openssl); skipping", file=sys.stderr)

    store = args.workdir / "store.jsonl"
    table = taxonomy.load_default_table()
    manifest = harness.run(
        batches, parsers, workers=args.workers, store_path=store,
        run_id="reproduction", table=table,
    )
    manifest.save(args.workdir / "manifest.json")
    rows = harness.read_store(store)

    report = analytics.build_report(rows, manifest)
    (args.workdir / "report.json").write_text(analytics.render(report, "json"))
    print()
    print(analytics.render(report, "text"))

    print("Reference-based discrepancy counts (reference: builtin:strict):")
    for label, prefix in DISCREPANCY_PREDICATES:
        table_rows = analytics.discrepancy_table(
            rows, manifest, "builtin:strict", analytics.error_string_prefix(prefix)
        )
        cells = "  ".join(f"{pid}={count}" for pid, count in table_rows)
        print(f"  {label:<28} {cells}")

    print()
    pair = ("builtin:strict", "builtin:lenient")
    result = analytics.overlap(rows, manifest, *pair, "ASN1_PARSE_ERROR")
    if result.defined:
        print(
            f"ASN1_PARSE_ERROR overlap {pair[0]} vs {pair[1]}: "
            f"jaccard={result.jaccard:.3f} "
            f"(|A|={result.size_a}, |B|={result.size_b}, both={result.intersection})"
        )
    print(f"\nartifacts in {args.workdir}/", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
