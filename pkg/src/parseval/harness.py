"""Drives parsers over certificate corpora and persists error outcomes.

Batches are line-separated base64 DER files. Built-in profiles run in
process; external parsers run as adapter subprocesses speaking a line
protocol (handshake, then one ``OK``/``ERR`` response line per input line).
Successful parses are not stored: the run manifest carries the totals that
make absence meaningful.
"""

from __future__ import annotations

import base64
import binascii
import json
import os
import subprocess
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

from . import x509
from .taxonomy import CategorizedError, ClassificationTable, ErrorCategory, classify
from .x509 import ValidationProfile, sha256_fingerprint

PROTOCOL_MAGIC = "PARSEVAL-ADAPTER"
PROTOCOL_VERSION = "1"
DEFAULT_BATCH_TIMEOUT_S = 60.0

OUTCOME_FIELDS = (
    "run_id",
    "parser_id",
    "fingerprint",
    "batch_id",
    "line_no",
    "error_string",
    "category",
    "duration_ns",
)


class AdapterError(RuntimeError):
    """A batch-level failure of an external adapter (handshake, crash,
    timeout, or a response/input line-count mismatch)."""


@dataclass(frozen=True)
class BatchFile:
    path: Path
    batch_id: str

    @staticmethod
    def from_path(path: Union[str, Path]) -> "BatchFile":
        p = Path(path)
        return BatchFile(path=p, batch_id=p.stem)


@dataclass(frozen=True)
class ParserRef:
    parser_id: str
    version: str
    kind: str  # 'builtin' | 'external'
    profile: Optional[ValidationProfile] = None
    command: Optional[tuple] = None

    def describe(self) -> dict:
        info = {"parser_id": self.parser_id, "version": self.version, "kind": self.kind}
        if self.kind == "external":
            info["command"] = list(self.command or ())
        else:
            info["profile"] = self.profile.name if self.profile else None
        return info


def builtin_parser(profile_name: str) -> ParserRef:
    from . import __version__

    profile = x509.PROFILES[profile_name]
    return ParserRef(
        parser_id=f"builtin:{profile_name}",
        version=__version__,
        kind="builtin",
        profile=profile,
    )


@dataclass(frozen=True)
class IngestRecord:
    der: bytes
    fingerprint: str
    batch_id: str
    line_no: int
    b64: str


@dataclass(frozen=True)
class IngestError:
    batch_id: str
    line_no: int
    reason: str


def ingest(path: Union[str, Path]):
    """Yield IngestRecord/IngestError per non-empty line, in file order."""
    batch = BatchFile.from_path(path)
    with open(batch.path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                der = base64.b64decode(line, validate=True)
                if not der:
                    raise binascii.Error("empty certificate")
            except (binascii.Error, ValueError) as e:
                yield IngestError(batch.batch_id, line_no, f"base64 decode failed: {e}")
                continue
            yield IngestRecord(der, sha256_fingerprint(der), batch.batch_id, line_no, line)


@dataclass
class ParseOutcome:
    parser_id: str
    fingerprint: str
    batch_id: str
    line_no: int
    status: str  # 'ok' | 'error'
    error_string: str = ""
    category: Optional[str] = None
    duration_ns: int = 0

    def store_row(self, run_id: str) -> dict:
        return {
            "run_id": run_id,
            "parser_id": self.parser_id,
            "fingerprint": self.fingerprint,
            "batch_id": self.batch_id,
            "line_no": self.line_no,
            "error_string": self.error_string,
            "category": self.category,
            "duration_ns": self.duration_ns,
        }


@dataclass
class RunManifest:
    run_id: str
    created_at: str
    parsers: list
    batches: list  # {batch_id, path, cert_count, ingest_errors: [...]}
    timings: list  # {parser_id, batch_id, cert_count, wall_ns}
    duplicates: list  # {fingerprint, occurrences}
    failures: list  # {parser_id, batch_id, reason, attempts}
    table_version: str = ""

    @property
    def total_certs(self) -> int:
        return sum(b["cert_count"] for b in self.batches)

    def parser_ids(self) -> list:
        return [p["parser_id"] for p in self.parsers]

    def batch_ids(self) -> list:
        return [b["batch_id"] for b in self.batches]

    def certs_evaluated(self, parser_id: str) -> int:
        """Total certificates actually evaluated by a parser (failed batches
        are excluded, they carry no outcomes)."""
        failed = {f["batch_id"] for f in self.failures if f["parser_id"] == parser_id}
        return sum(b["cert_count"] for b in self.batches if b["batch_id"] not in failed)

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "RunManifest":
        return RunManifest(**json.loads(text))

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @staticmethod
    def load(path: Union[str, Path]) -> "RunManifest":
        return RunManifest.from_json(Path(path).read_text(encoding="utf-8"))


def outcome_line(row: dict) -> str:
    return json.dumps({k: row[k] for k in OUTCOME_FIELDS}, separators=(",", ":"))


def read_store(path: Union[str, Path]) -> list:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def compact_store(path: Union[str, Path], out_path: Optional[Union[str, Path]] = None) -> Path:
    """Rewrite a store sorted by (parser_id, batch_id, line_no) with exact
    duplicate lines dropped; returns the path written."""
    rows = read_store(path)
    rows.sort(key=lambda r: (r["parser_id"], r["batch_id"], r["line_no"], r["fingerprint"]))
    seen = set()
    lines = []
    for row in rows:
        line = outcome_line(row)
        if line not in seen:
            seen.add(line)
            lines.append(line)
    target = Path(out_path) if out_path else Path(path)
    target.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    return target


def _sanitize_error_string(text: str) -> str:
    return text.replace("\t", " ").replace("\n", " ").replace("\r", " ")


def _run_builtin_batch(
    parser: ParserRef,
    records: Sequence[IngestRecord],
    record_durations: bool,
) -> tuple:
    outcomes = []
    profile = parser.profile
    parse = x509.parse_certificate
    clock = time.perf_counter_ns
    wall_start = clock()
    for rec in records:
        t0 = clock()
        try:
            parse(rec.der, profile)
        except CategorizedError as e:
            dt = clock() - t0 if record_durations else 0
            outcomes.append(
                ParseOutcome(
                    parser_id=parser.parser_id,
                    fingerprint=rec.fingerprint,
                    batch_id=rec.batch_id,
                    line_no=rec.line_no,
                    status="error",
                    error_string=_sanitize_error_string(e.error_string),
                    category=e.category.value,
                    duration_ns=dt,
                )
            )
    wall_ns = clock() - wall_start
    return outcomes, wall_ns


def probe_adapter(command: Sequence[str], timeout: float = DEFAULT_BATCH_TIMEOUT_S) -> ParserRef:
    """Handshake an adapter with an empty batch to learn its identity."""
    parser_id, version, _ = _run_adapter_once(command, [], timeout)
    return ParserRef(parser_id=parser_id, version=version, kind="external", command=tuple(command))


def _parse_handshake(line: str) -> tuple:
    parts = line.split(" ")
    if len(parts) < 4 or parts[0] != PROTOCOL_MAGIC or parts[1] != PROTOCOL_VERSION:
        raise AdapterError(f"bad handshake line: {line!r}")
    return parts[2], " ".join(parts[3:])


def _run_adapter_once(command: Sequence[str], b64_lines: Sequence[str], timeout: float) -> tuple:
    input_text = "".join(line + "\n" for line in b64_lines)
    try:
        proc = subprocess.run(
            list(command),
            input=input_text,
            capture_output=True,
            text=True,
            timeout=timeout,
        )
    except subprocess.TimeoutExpired:
        raise AdapterError(f"adapter timed out after {timeout}s") from None
    except OSError as e:
        raise AdapterError(f"adapter failed to start: {e}") from None
    if proc.returncode != 0:
        raise AdapterError(f"adapter exited with status {proc.returncode}")
    lines = proc.stdout.splitlines()
    if not lines:
        raise AdapterError("adapter produced no handshake")
    parser_id, version = _parse_handshake(lines[0])
    responses = lines[1:]
    if len(responses) != len(b64_lines):
        raise AdapterError(
            f"adapter answered {len(responses)} lines for {len(b64_lines)} inputs"
        )
    return parser_id, version, responses


def drive_adapter(
    parser: ParserRef,
    records: Sequence[IngestRecord],
    table: Optional[ClassificationTable],
    timeout: float = DEFAULT_BATCH_TIMEOUT_S,
    record_durations: bool = True,
) -> tuple:
    """Run one batch through an external adapter; returns (outcomes, wall_ns)."""
    wall_start = time.perf_counter_ns()
    parser_id, _, responses = _run_adapter_once(
        parser.command, [r.b64 for r in records], timeout
    )
    wall_ns = time.perf_counter_ns() - wall_start
    if parser_id != parser.parser_id:
        raise AdapterError(f"handshake id {parser_id!r} != expected {parser.parser_id!r}")
    outcomes = []
    for rec, line in zip(records, responses):
        parts = line.split("\t")
        if parts[0] == "OK" and len(parts) == 2:
            status, error_string = "ok", ""
        elif parts[0] == "ERR" and len(parts) == 3:
            status, error_string = "error", parts[2]
        else:
            raise AdapterError(f"malformed response line: {line!r}")
        try:
            duration = int(parts[1])
        except ValueError:
            raise AdapterError(f"malformed duration in line: {line!r}") from None
        category = None
        if status == "error":
            category = (
                classify(parser.parser_id, error_string, table).value
                if table is not None and error_string
                else ErrorCategory.UNCATEGORIZED.value
            )
        outcomes.append(
            ParseOutcome(
                parser_id=parser.parser_id,
                fingerprint=rec.fingerprint,
                batch_id=rec.batch_id,
                line_no=rec.line_no,
                status=status,
                error_string=error_string,
                category=category,
                duration_ns=duration if record_durations else 0,
            )
        )
    return outcomes, wall_ns


def _evaluate_batch(
    parser: ParserRef,
    records: Sequence[IngestRecord],
    table: Optional[ClassificationTable],
    timeout: float,
    record_durations: bool,
) -> tuple:
    if parser.kind == "builtin":
        return _run_builtin_batch(parser, records, record_durations)
    return drive_adapter(parser, records, table, timeout, record_durations)


def run(
    corpus: Sequence[Union[str, Path, BatchFile]],
    parsers: Sequence[ParserRef],
    workers: Optional[int] = None,
    *,
    store_path: Union[str, Path],
    run_id: Optional[str] = None,
    table: Optional[ClassificationTable] = None,
    timeout: float = DEFAULT_BATCH_TIMEOUT_S,
    record_durations: bool = True,
) -> RunManifest:
    """Evaluate every (parser, certificate) pair once; persist error rows.

    Workers parallelize over (parser, batch) tasks and buffer outcomes per
    batch; a single writer appends them to the store, so rows never
    interleave. Final store contents (as a sorted set) are independent of
    worker count and scheduling order. A crashed adapter batch is retried
    once, then recorded under manifest failures.
    """
    if not parsers:
        raise ValueError("at least one parser is required")
    ids = [p.parser_id for p in parsers]
    if len(set(ids)) != len(ids):
        raise ValueError(f"duplicate parser ids: {ids}")
    batches = [b if isinstance(b, BatchFile) else BatchFile.from_path(b) for b in corpus]
    if run_id is None:
        run_id = time.strftime("%Y%m%dT%H%M%S") + "-" + uuid.uuid4().hex[:8]

    batch_records = {}
    batch_meta = []
    fingerprint_counts = {}
    for batch in batches:
        records = []
        errors = []
        for item in ingest(batch.path):
            if isinstance(item, IngestError):
                errors.append({"line_no": item.line_no, "reason": item.reason})
            else:
                records.append(item)
                fingerprint_counts[item.fingerprint] = (
                    fingerprint_counts.get(item.fingerprint, 0) + 1
                )
        if not records:
            raise ValueError(f"batch {batch.batch_id} contains no certificates")
        batch_records[batch.batch_id] = records
        batch_meta.append(
            {
                "batch_id": batch.batch_id,
                "path": str(batch.path),
                "cert_count": len(records),
                "ingest_errors": errors,
            }
        )

    tasks = [(parser, batch) for parser in parsers for batch in batches]
    timings = []
    failures = []
    if workers is None:
        workers = os.cpu_count() or 1

    store = Path(store_path)
    store.parent.mkdir(parents=True, exist_ok=True)

    def work(task):
        parser, batch = task
        records = batch_records[batch.batch_id]
        attempts = 0
        while True:
            attempts += 1
            try:
                outcomes, wall_ns = _evaluate_batch(
                    parser, records, table, timeout, record_durations
                )
                return parser, batch, outcomes, wall_ns, attempts, None
            except AdapterError as e:
                if attempts >= 2:
                    return parser, batch, [], 0, attempts, str(e)

    with store.open("w", encoding="utf-8") as fh, ThreadPoolExecutor(max_workers=workers) as pool:
        for parser, batch, outcomes, wall_ns, attempts, failure in pool.map(work, tasks):
            if failure is not None:
                failures.append(
                    {
                        "parser_id": parser.parser_id,
                        "batch_id": batch.batch_id,
                        "reason": failure,
                        "attempts": attempts,
                    }
                )
                continue
            timings.append(
                {
                    "parser_id": parser.parser_id,
                    "batch_id": batch.batch_id,
                    "cert_count": len(batch_records[batch.batch_id]),
                    "wall_ns": wall_ns if record_durations else 0,
                }
            )
            for outcome in outcomes:
                if outcome.status == "error":
                    fh.write(outcome_line(outcome.store_row(run_id)))
                    fh.write("\n")

    manifest = RunManifest(
        run_id=run_id,
        created_at=time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        parsers=[p.describe() for p in parsers],
        batches=batch_meta,
        timings=sorted(timings, key=lambda t: (t["parser_id"], t["batch_id"])),
        duplicates=[
            {"fingerprint": fp, "occurrences": n}
            for fp, n in sorted(fingerprint_counts.items())
            if n > 1
        ],
        failures=sorted(failures, key=lambda f: (f["parser_id"], f["batch_id"])),
        table_version=table.version if table is not None else "",
    )
    compact_store(store)
    return manifest
