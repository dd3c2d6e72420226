"""Metrics over an outcome store and its run manifest.

Everything here is a pure function of (store rows, manifest): error rates,
per-category distributions, cross-parser overlaps, reference-based
discrepancy counts, and per-batch timing summaries, plus JSON/text/CSV
report renderings that re-verify the arithmetic before emitting anything.
"""

from __future__ import annotations

import csv
import io
import json
import statistics
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .harness import RunManifest
from .taxonomy import ErrorCategory

CATEGORY_NAMES = tuple(c.value for c in ErrorCategory)


class AnalyticsError(ValueError):
    """Raised for undefined metrics (N = 0) or store/manifest mismatches."""


@dataclass(frozen=True)
class ErrorRate:
    parser_id: str
    errors: int
    total: int

    def __post_init__(self):
        if self.total <= 0:
            raise AnalyticsError(f"{self.parser_id}: error rate undefined for N={self.total}")
        if not 0 <= self.errors <= self.total:
            raise AnalyticsError(
                f"{self.parser_id}: error count {self.errors} outside [0, {self.total}]"
            )

    @property
    def rate(self) -> float:
        return self.errors / self.total

    def percent(self, decimals: int = 2) -> str:
        return f"{self.rate * 100:.{decimals}f}%"


def error_rate(errors: int, total: int, parser_id: str = "") -> ErrorRate:
    return ErrorRate(parser_id=parser_id, errors=errors, total=total)


@dataclass(frozen=True)
class CategoryDistribution:
    parser_id: str
    counts: dict  # category name -> count, all seven keys present
    total_errors: int

    @property
    def shares(self) -> Optional[dict]:
        if self.total_errors == 0:
            return None
        return {name: count / self.total_errors for name, count in self.counts.items()}


@dataclass(frozen=True)
class OverlapResult:
    parser_a: str
    parser_b: str
    category: str
    size_a: int
    size_b: int
    intersection: int
    union: int

    @property
    def defined(self) -> bool:
        return self.union > 0

    @property
    def match_fraction_a(self) -> Optional[float]:
        return self.intersection / self.size_a if self.size_a else None

    @property
    def match_fraction_b(self) -> Optional[float]:
        return self.intersection / self.size_b if self.size_b else None

    @property
    def jaccard(self) -> Optional[float]:
        return self.intersection / self.union if self.union else None


@dataclass(frozen=True)
class DiscrepancyRow:
    fingerprint: str
    outcomes: dict  # parser_id -> category name, or None when accepted

    @property
    def disagreement(self) -> bool:
        verdicts = {category is not None for category in self.outcomes.values()}
        return len(verdicts) > 1


@dataclass(frozen=True)
class BatchTiming:
    parser_id: str
    batch_id: str
    cert_count: int
    wall_ns: int

    @property
    def per_cert_ns(self) -> float:
        return self.wall_ns / self.cert_count


@dataclass(frozen=True)
class TimingStats:
    parser_id: str
    batches: tuple  # of BatchTiming

    @property
    def per_cert_values(self) -> list:
        return [b.per_cert_ns for b in self.batches]

    @property
    def summary(self) -> Optional[dict]:
        values = self.per_cert_values
        if not values:
            return None
        return {
            "min_ns": min(values),
            "median_ns": statistics.median(values),
            "max_ns": max(values),
            "batches": len(values),
        }


def _check_store(rows: Sequence[dict], manifest: RunManifest) -> None:
    parser_ids = set(manifest.parser_ids())
    batch_ids = set(manifest.batch_ids())
    for row in rows:
        if row["parser_id"] not in parser_ids:
            raise AnalyticsError(f"store row for unknown parser {row['parser_id']!r}")
        if row["batch_id"] not in batch_ids:
            raise AnalyticsError(f"store row for unknown batch {row['batch_id']!r}")
        if row["category"] not in CATEGORY_NAMES:
            raise AnalyticsError(f"store row with unknown category {row['category']!r}")


def error_rates(rows: Sequence[dict], manifest: RunManifest) -> list:
    """Per-parser error rates, sorted by descending rate."""
    counts = {pid: 0 for pid in manifest.parser_ids()}
    for row in rows:
        counts[row["parser_id"]] += 1
    rates = [
        error_rate(counts[pid], manifest.certs_evaluated(pid), pid)
        for pid in manifest.parser_ids()
    ]
    rates.sort(key=lambda r: (-r.rate, r.parser_id))
    return rates


def category_distribution(
    rows: Sequence[dict], manifest: RunManifest, parser_id: str
) -> CategoryDistribution:
    if parser_id not in manifest.parser_ids():
        raise AnalyticsError(f"unknown parser {parser_id!r}")
    counts = {name: 0 for name in CATEGORY_NAMES}
    total = 0
    for row in rows:
        if row["parser_id"] == parser_id:
            counts[row["category"]] += 1
            total += 1
    return CategoryDistribution(parser_id=parser_id, counts=counts, total_errors=total)


def fingerprints_with_category(
    rows: Sequence[dict], parser_id: str, category: Optional[str]
) -> set:
    return {
        row["fingerprint"]
        for row in rows
        if row["parser_id"] == parser_id and (category is None or row["category"] == category)
    }


def overlap(
    rows: Sequence[dict],
    manifest: RunManifest,
    parser_a: str,
    parser_b: str,
    category: Optional[str] = None,
) -> OverlapResult:
    """Fingerprint-set agreement between two parsers for one category
    (or across all categories when ``category`` is None)."""
    for pid in (parser_a, parser_b):
        if pid not in manifest.parser_ids():
            raise AnalyticsError(f"unknown parser {pid!r}")
    set_a = fingerprints_with_category(rows, parser_a, category)
    set_b = fingerprints_with_category(rows, parser_b, category)
    return OverlapResult(
        parser_a=parser_a,
        parser_b=parser_b,
        category=category or "*",
        size_a=len(set_a),
        size_b=len(set_b),
        intersection=len(set_a & set_b),
        union=len(set_a | set_b),
    )


def discrepancy_table(
    rows: Sequence[dict],
    manifest: RunManifest,
    reference_parser: str,
    predicate: Callable[[dict], bool],
) -> list:
    """Fingerprints selected by ``predicate`` over the reference parser's
    rows; per parser, how many of those it also rejected (any category).
    Returns (parser_id, count) pairs in manifest order."""
    if reference_parser not in manifest.parser_ids():
        raise AnalyticsError(f"unknown reference parser {reference_parser!r}")
    selected = {
        row["fingerprint"]
        for row in rows
        if row["parser_id"] == reference_parser and predicate(row)
    }
    out = []
    for pid in manifest.parser_ids():
        rejected = {row["fingerprint"] for row in rows if row["parser_id"] == pid}
        out.append((pid, len(selected & rejected)))
    return out


def discrepancy_rows(
    rows: Sequence[dict], manifest: RunManifest, fingerprints: Optional[set] = None
) -> list:
    """Per-fingerprint accept/reject picture across all parsers.

    A row's ``disagreement`` flag is set exactly when the parsers do not all
    agree on accept-vs-reject. ``fingerprints`` restricts the output;
    otherwise every fingerprint with at least one error row appears.
    """
    parser_ids = manifest.parser_ids()
    rejected: dict = {}
    for row in rows:
        rejected.setdefault(row["fingerprint"], {})[row["parser_id"]] = row["category"]
    selected = fingerprints if fingerprints is not None else set(rejected)
    out = []
    for fp in sorted(selected):
        by_parser = rejected.get(fp, {})
        out.append(
            DiscrepancyRow(
                fingerprint=fp,
                outcomes={pid: by_parser.get(pid) for pid in parser_ids},
            )
        )
    return out


def error_string_prefix(prefix: str) -> Callable[[dict], bool]:
    return lambda row: row["error_string"].startswith(prefix)


def category_is(category: str) -> Callable[[dict], bool]:
    return lambda row: row["category"] == category


def timing_stats(manifest: RunManifest, parser_id: str) -> TimingStats:
    if parser_id not in manifest.parser_ids():
        raise AnalyticsError(f"unknown parser {parser_id!r}")
    batches = tuple(
        BatchTiming(parser_id, t["batch_id"], t["cert_count"], t["wall_ns"])
        for t in manifest.timings
        if t["parser_id"] == parser_id
    )
    return TimingStats(parser_id=parser_id, batches=batches)


def completeness(rows: Sequence[dict], manifest: RunManifest) -> dict:
    """Per parser: persisted error rows, implied successes, and their sum
    (which must equal the evaluated total)."""
    out = {}
    for pid in manifest.parser_ids():
        n = manifest.certs_evaluated(pid)
        errors = sum(1 for row in rows if row["parser_id"] == pid)
        out[pid] = {"errors": errors, "successes": n - errors, "total": n}
    return out


# -- report ------------------------------------------------------------------

def build_report(
    rows: Sequence[dict],
    manifest: RunManifest,
    reference: Optional[str] = None,
    predicate: Optional[Callable[[dict], bool]] = None,
    predicate_label: str = "",
) -> dict:
    """Assemble the full metrics report as a JSON-ready dict.

    Re-verifies row sums, rate bounds, and completeness; any violation
    aborts the report with :class:`AnalyticsError`.
    """
    _check_store(rows, manifest)
    if manifest.total_certs <= 0:
        raise AnalyticsError("manifest lists no certificates (N=0)")

    rates = error_rates(rows, manifest)
    distributions = [category_distribution(rows, manifest, pid) for pid in manifest.parser_ids()]

    per_parser_rows = {pid: 0 for pid in manifest.parser_ids()}
    for row in rows:
        per_parser_rows[row["parser_id"]] += 1
    for dist in distributions:
        if sum(dist.counts.values()) != per_parser_rows[dist.parser_id]:
            raise AnalyticsError(f"row-sum violation for {dist.parser_id}")
    for rate in rates:
        if not 0.0 <= rate.rate <= 1.0:
            raise AnalyticsError(f"rate out of bounds for {rate.parser_id}")
    for pid, acct in completeness(rows, manifest).items():
        if acct["errors"] + acct["successes"] != acct["total"]:
            raise AnalyticsError(f"completeness violation for {pid}")

    overlaps = []
    pids = manifest.parser_ids()
    for i, a in enumerate(pids):
        for b in pids[i + 1 :]:
            for category in CATEGORY_NAMES:
                result = overlap(rows, manifest, a, b, category)
                if result.size_a or result.size_b:
                    overlaps.append(result)

    discrepancies = None
    if reference is not None and predicate is not None:
        discrepancies = {
            "reference": reference,
            "predicate": predicate_label,
            "rows": [
                {"parser_id": pid, "count": count}
                for pid, count in discrepancy_table(rows, manifest, reference, predicate)
            ],
        }

    return {
        "run_id": manifest.run_id,
        "total_certs": manifest.total_certs,
        "rates": [
            {
                "parser_id": r.parser_id,
                "errors": r.errors,
                "total": r.total,
                "rate": r.rate,
                "percent": r.percent(),
            }
            for r in rates
        ],
        "distributions": [
            {
                "parser_id": d.parser_id,
                "counts": d.counts,
                "sum": d.total_errors,
                "shares": d.shares,
            }
            for d in distributions
        ],
        "overlaps": [
            {
                "parser_a": o.parser_a,
                "parser_b": o.parser_b,
                "category": o.category,
                "size_a": o.size_a,
                "size_b": o.size_b,
                "intersection": o.intersection,
                "match_fraction_a": o.match_fraction_a,
                "match_fraction_b": o.match_fraction_b,
                "jaccard": o.jaccard,
            }
            for o in overlaps
        ],
        "discrepancies": discrepancies,
        "timings": [
            {
                "parser_id": pid,
                "batches": [
                    {
                        "batch_id": b.batch_id,
                        "cert_count": b.cert_count,
                        "wall_ns": b.wall_ns,
                        "per_cert_ns": b.per_cert_ns,
                    }
                    for b in timing_stats(manifest, pid).batches
                ],
                "summary": timing_stats(manifest, pid).summary,
            }
            for pid in manifest.parser_ids()
        ],
        "failures": manifest.failures,
    }


def _fmt_count(n: int) -> str:
    return f"{n:,}" if n else "n.a."


def render_text(report: dict) -> str:
    out = io.StringIO()
    out.write(f"run {report['run_id']}: {report['total_certs']:,} certificates\n\n")
    out.write("Error rates (descending):\n")
    width = max((len(r["parser_id"]) for r in report["rates"]), default=10)
    for r in report["rates"]:
        out.write(f"  {r['parser_id']:<{width}}  {r['errors']:>12,}  {r['percent']:>8}\n")
    out.write("\nError category distribution:\n")
    short = {name: name.replace("_ERROR", "").replace("X509_", "X509/").replace("CRYPTO_", "CRYPTO/") for name in CATEGORY_NAMES}
    header = ["parser"] + [short[name] for name in CATEGORY_NAMES] + ["Sum"]
    rows = []
    for d in report["distributions"]:
        rows.append(
            [d["parser_id"]]
            + [_fmt_count(d["counts"][name]) for name in CATEGORY_NAMES]
            + [f"{d['sum']:,}"]
        )
    widths = [max(len(str(r[i])) for r in [header] + rows) for i in range(len(header))]
    for row in [header] + rows:
        out.write("  " + "  ".join(str(cell).rjust(widths[i]) for i, cell in enumerate(row)) + "\n")
    if report["discrepancies"]:
        d = report["discrepancies"]
        out.write(
            f"\nDiscrepancies (reference {d['reference']}, predicate {d['predicate'] or '<all>'}):\n"
        )
        for row in d["rows"]:
            out.write(f"  {row['parser_id']:<{width}}  {row['count']:>8}\n")
    if report["timings"] and any(t["summary"] for t in report["timings"]):
        out.write("\nPer-certificate timing (ns, per batch):\n")
        for t in report["timings"]:
            s = t["summary"]
            if s:
                out.write(
                    f"  {t['parser_id']:<{width}}  min {s['min_ns']:>12,.0f}"
                    f"  median {s['median_ns']:>12,.0f}  max {s['max_ns']:>12,.0f}"
                    f"  ({s['batches']} batches)\n"
                )
    if report["failures"]:
        out.write("\nFailed batches:\n")
        for f in report["failures"]:
            out.write(f"  {f['parser_id']} {f['batch_id']}: {f['reason']} (attempts {f['attempts']})\n")
    return out.getvalue()


def render_csv(report: dict) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["parser_id"] + list(CATEGORY_NAMES) + ["sum", "total", "rate_percent"])
    rates = {r["parser_id"]: r for r in report["rates"]}
    for d in report["distributions"]:
        r = rates[d["parser_id"]]
        writer.writerow(
            [d["parser_id"]]
            + [d["counts"][name] for name in CATEGORY_NAMES]
            + [d["sum"], r["total"], r["percent"]]
        )
    return out.getvalue()


def render(report: dict, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(report, indent=2) + "\n"
    if fmt == "text":
        return render_text(report)
    if fmt == "csv":
        return render_csv(report)
    raise ValueError(f"unknown report format {fmt!r}")


def report(rows: Sequence[dict], manifest: RunManifest, fmt: str = "json", **kwargs) -> str:
    """Build and render in one step; see :func:`build_report` for checks."""
    return render(build_report(rows, manifest, **kwargs), fmt)
