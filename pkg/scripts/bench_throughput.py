#!/usr/bin/env python3
"""Measure single-stream parse throughput of the builtin profiles."""

import argparse
import statistics
import time

from parseval import certgen, x509
from parseval.certgen import DefectSpec


def bench(certs, profile, repeats):
    rates = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        for der in certs:
            try:
                x509.parse_certificate(der, profile)
            except Exception:
                pass
        rates.append(len(certs) / (time.perf_counter() - t0))
    return rates


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=3000)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--defect", default="none", choices=certgen.DEFECT_IDS)
    args = ap.parse_args()

    certs = [c.der for c in certgen.generate(DefectSpec(args.defect, args.count, seed=1))]
    for der in certs[: min(200, len(certs))]:
        try:
            x509.parse_certificate(der, x509.LENIENT)
        except Exception:
            pass

    for name, profile in (("lenient", x509.LENIENT), ("strict", x509.STRICT)):
        rates = bench(certs, profile, args.repeats)
        print(
            f"{name:8s} median {statistics.median(rates):>10,.0f} certs/s   "
            f"best {max(rates):>10,.0f} certs/s   "
            f"({args.count} certs x {args.repeats} runs, defect={args.defect})"
        )


if __name__ == "__main__":
    main()
