import json
import random

import pytest
from hypothesis import given
import hypothesis.strategies as st

from parseval import analytics
from parseval.analytics import (
    AnalyticsError,
    build_report,
    category_distribution,
    completeness,
    discrepancy_table,
    error_rate,
    error_rates,
    overlap,
    render,
    timing_stats,
)
from parseval.harness import RunManifest

FULL_DATASET = 186_576_846


def make_manifest(parsers, batches, timings=(), failures=()):
    return RunManifest(
        run_id="synthetic",
        created_at="2024-01-01T00:00:00Z",
        parsers=[{"parser_id": p, "version": "1", "kind": "builtin"} for p in parsers],
        batches=[{"batch_id": b, "path": b, "cert_count": n, "ingest_errors": []} for b, n in batches],
        timings=list(timings),
        duplicates=[],
        failures=list(failures),
    )


def make_row(parser_id, fingerprint, category, batch_id="b0", line_no=1, error_string="e"):
    return {
        "run_id": "synthetic",
        "parser_id": parser_id,
        "fingerprint": fingerprint,
        "batch_id": batch_id,
        "line_no": line_no,
        "error_string": error_string,
        "category": category,
        "duration_ns": 0,
    }


class TestErrorRate:
    def test_published_rows_render_exactly(self):
        assert error_rate(28_875, FULL_DATASET).percent(2) == "0.02%"
        assert error_rate(4_803, FULL_DATASET).percent(3) == "0.003%"

    def test_zero_errors(self):
        assert error_rate(0, 1000).rate == 0.0
        assert error_rate(0, 1000).percent() == "0.00%"

    def test_count_percent_pairing(self):
        # Dividing the published counts contradicts the printed pairing:
        # 24,196,189/N is 12.97%, not 13.16% (and vice versa). Rates here
        # always come from the counts.
        assert error_rate(24_196_189, FULL_DATASET).percent(2) == "12.97%"
        assert error_rate(24_562_224, FULL_DATASET).percent(2) == "13.16%"

    def test_undefined_for_zero_total(self):
        with pytest.raises(AnalyticsError):
            error_rate(0, 0)

    def test_bounds_enforced(self):
        with pytest.raises(AnalyticsError):
            error_rate(11, 10)
        with pytest.raises(AnalyticsError):
            error_rate(-1, 10)

    @given(st.integers(1, 10**6), st.integers(1, 10**6), st.integers(0, 10**6), st.integers(0, 10**6))
    def test_additivity_over_disjoint_corpora(self, n1, n2, e1, e2):
        e1, e2 = min(e1, n1), min(e2, n2)
        combined = error_rate(e1 + e2, n1 + n2)
        assert combined.rate == pytest.approx((e1 + e2) / (n1 + n2))
        assert 0.0 <= combined.rate <= 1.0


class TestCategoryDistribution:
    def test_published_row_shape_sums(self):
        rows = []
        shaped = [
            ("ASN1_PARSE_ERROR", 6_321),
            ("X509_PARSE_ERROR", 12_599),
            ("X509_VALUE_ERROR", 9_955),
        ]
        i = 0
        for category, count in shaped:
            for _ in range(count):
                rows.append(make_row("gnutls-shaped", f"fp{i:06d}", category, line_no=i + 1))
                i += 1
        manifest = make_manifest(["gnutls-shaped"], [("b0", 50_000)])
        dist = category_distribution(rows, manifest, "gnutls-shaped")
        assert dist.total_errors == 28_875
        assert dist.counts["ASN1_PARSE_ERROR"] == 6_321
        assert dist.counts["CRYPTO_UNSUPPORTED"] == 0
        assert sum(dist.counts.values()) == 28_875
        assert sum(dist.shares.values()) == pytest.approx(1.0)

    def test_empty_store(self):
        manifest = make_manifest(["p"], [("b0", 10)])
        dist = category_distribution([], manifest, "p")
        assert dist.total_errors == 0
        assert set(dist.counts.values()) == {0}
        assert dist.shares is None

    def test_unknown_parser(self):
        with pytest.raises(AnalyticsError):
            category_distribution([], make_manifest(["p"], [("b0", 1)]), "q")


class TestOverlap:
    def test_identical_sets(self):
        rows = [make_row(p, f"fp{i}", "X509_VALUE_ERROR", line_no=i + 1) for p in ("a", "b") for i in range(5)]
        manifest = make_manifest(["a", "b"], [("b0", 10)])
        result = overlap(rows, manifest, "a", "b", "X509_VALUE_ERROR")
        assert (result.match_fraction_a, result.match_fraction_b, result.jaccard) == (1.0, 1.0, 1.0)

    def test_disjoint_sets(self):
        rows = [make_row("a", f"x{i}", "X509_VALUE_ERROR") for i in range(3)]
        rows += [make_row("b", f"y{i}", "X509_VALUE_ERROR") for i in range(4)]
        manifest = make_manifest(["a", "b"], [("b0", 10)])
        result = overlap(rows, manifest, "a", "b", "X509_VALUE_ERROR")
        assert (result.match_fraction_a, result.match_fraction_b, result.jaccard) == (0.0, 0.0, 0.0)

    def test_partial_overlap_shape(self):
        # |A| = 100, |B| = 110, |A ∩ B| = 98: the two directional fractions
        # and Jaccard computed by plain set arithmetic.
        a_fps = {f"s{i}" for i in range(98)} | {f"a{i}" for i in range(2)}
        b_fps = {f"s{i}" for i in range(98)} | {f"b{i}" for i in range(12)}
        rows = [make_row("a", fp, "X509_VALUE_ERROR") for fp in a_fps]
        rows += [make_row("b", fp, "X509_VALUE_ERROR") for fp in b_fps]
        manifest = make_manifest(["a", "b"], [("b0", 500)])
        result = overlap(rows, manifest, "a", "b", "X509_VALUE_ERROR")
        assert result.match_fraction_a == pytest.approx(0.98)
        assert result.match_fraction_b == pytest.approx(98 / 110)
        assert result.jaccard == pytest.approx(98 / 112)

    def test_symmetry(self):
        rows = [make_row("a", "f1", "ASN1_PARSE_ERROR"), make_row("b", "f2", "ASN1_PARSE_ERROR")]
        manifest = make_manifest(["a", "b"], [("b0", 4)])
        ab = overlap(rows, manifest, "a", "b", "ASN1_PARSE_ERROR")
        ba = overlap(rows, manifest, "b", "a", "ASN1_PARSE_ERROR")
        assert ab.jaccard == ba.jaccard

    def test_empty_sets_undefined(self):
        manifest = make_manifest(["a", "b"], [("b0", 4)])
        result = overlap([], manifest, "a", "b", "ASN1_PARSE_ERROR")
        assert not result.defined
        assert result.jaccard is None and result.match_fraction_a is None

    def test_category_filter(self):
        rows = [
            make_row("a", "f1", "ASN1_PARSE_ERROR"),
            make_row("b", "f1", "X509_VALUE_ERROR"),
        ]
        manifest = make_manifest(["a", "b"], [("b0", 4)])
        assert overlap(rows, manifest, "a", "b", "ASN1_PARSE_ERROR").intersection == 0
        assert overlap(rows, manifest, "a", "b", None).intersection == 1


class TestDiscrepancy:
    def test_counts_rejections_of_selected_fingerprints(self):
        rows = [make_row("ref", f"f{i}", "X509_VALUE_ERROR", error_string="version: bad") for i in range(4)]
        rows += [make_row("ref", "other", "X509_VALUE_ERROR", error_string="different")]
        rows += [make_row("peer", f"f{i}", "ASN1_PARSE_ERROR") for i in range(2)]
        manifest = make_manifest(["ref", "peer", "silent"], [("b0", 10)])
        table = discrepancy_table(
            rows, manifest, "ref", analytics.error_string_prefix("version:")
        )
        assert table == [("ref", 4), ("peer", 2), ("silent", 0)]

    def test_reference_count_equals_selection_size(self):
        rows = [make_row("ref", f"f{i}", "X509_VALUE_ERROR") for i in range(7)]
        manifest = make_manifest(["ref"], [("b0", 10)])
        table = discrepancy_table(rows, manifest, "ref", lambda row: True)
        assert table == [("ref", 7)]

    def test_empty_predicate(self):
        rows = [make_row("ref", "f0", "X509_VALUE_ERROR")]
        manifest = make_manifest(["ref", "peer"], [("b0", 10)])
        table = discrepancy_table(rows, manifest, "ref", lambda row: False)
        assert table == [("ref", 0), ("peer", 0)]

    def test_unknown_reference(self):
        with pytest.raises(AnalyticsError):
            discrepancy_table([], make_manifest(["p"], [("b0", 1)]), "nope", lambda r: True)


class TestDiscrepancyRows:
    def test_disagreement_flag(self):
        rows = [
            make_row("a", "both", "ASN1_PARSE_ERROR"),
            make_row("b", "both", "X509_VALUE_ERROR"),
            make_row("a", "only-a", "ASN1_PARSE_ERROR"),
        ]
        manifest = make_manifest(["a", "b"], [("b0", 10)])
        by_fp = {r.fingerprint: r for r in analytics.discrepancy_rows(rows, manifest)}
        assert not by_fp["both"].disagreement  # both parsers reject
        assert by_fp["only-a"].disagreement  # a rejects, b accepts
        assert by_fp["only-a"].outcomes == {"a": "ASN1_PARSE_ERROR", "b": None}

    def test_accepted_everywhere_is_agreement(self):
        manifest = make_manifest(["a", "b"], [("b0", 10)])
        rows = analytics.discrepancy_rows([], manifest, fingerprints={"clean"})
        assert len(rows) == 1 and not rows[0].disagreement


class TestTimings:
    def test_per_cert_normalization(self):
        manifest = make_manifest(
            ["p"], [("b0", 1000)],
            timings=[{"parser_id": "p", "batch_id": "b0", "cert_count": 1000, "wall_ns": 2_000_000}],
        )
        stats = timing_stats(manifest, "p")
        assert stats.per_cert_values == [2000.0]
        assert stats.summary["median_ns"] == 2000.0

    def test_two_equal_batches_median(self):
        timing = [
            {"parser_id": "p", "batch_id": b, "cert_count": 100, "wall_ns": 500_000}
            for b in ("b0", "b1")
        ]
        manifest = make_manifest(["p"], [("b0", 100), ("b1", 100)], timings=timing)
        assert timing_stats(manifest, "p").summary["median_ns"] == 5000.0

    def test_three_batch_summary_matches_hand_computation(self):
        timing = [
            {"parser_id": "p", "batch_id": "b0", "cert_count": 100, "wall_ns": 400_000},
            {"parser_id": "p", "batch_id": "b1", "cert_count": 200, "wall_ns": 1_000_000},
            {"parser_id": "p", "batch_id": "b2", "cert_count": 50, "wall_ns": 350_000},
        ]
        manifest = make_manifest(["p"], [("b0", 100), ("b1", 200), ("b2", 50)], timings=timing)
        stats = timing_stats(manifest, "p")
        # Hand-computed: 400000/100=4000, 1000000/200=5000, 350000/50=7000.
        assert stats.per_cert_values == [4000.0, 5000.0, 7000.0]
        assert stats.summary == {
            "min_ns": 4000.0, "median_ns": 5000.0, "max_ns": 7000.0, "batches": 3,
        }


class TestCompletenessAndRates:
    def test_rows_plus_successes_equals_total(self):
        rows = [make_row("p", f"f{i}", "ASN1_PARSE_ERROR", line_no=i + 1) for i in range(3)]
        manifest = make_manifest(["p", "q"], [("b0", 10)])
        acct = completeness(rows, manifest)
        assert acct["p"] == {"errors": 3, "successes": 7, "total": 10}
        assert acct["q"] == {"errors": 0, "successes": 10, "total": 10}

    def test_rates_sorted_descending(self):
        rows = [make_row("loud", f"f{i}", "ASN1_PARSE_ERROR", line_no=i + 1) for i in range(5)]
        rows += [make_row("quiet", "f0", "ASN1_PARSE_ERROR")]
        manifest = make_manifest(["quiet", "loud"], [("b0", 10)])
        rates = error_rates(rows, manifest)
        assert [r.parser_id for r in rates] == ["loud", "quiet"]

    def test_failed_batches_shrink_denominator(self):
        manifest = make_manifest(
            ["p"], [("b0", 10), ("b1", 5)],
            failures=[{"parser_id": "p", "batch_id": "b1", "reason": "x", "attempts": 2}],
        )
        rows = [make_row("p", "f0", "ASN1_PARSE_ERROR")]
        assert error_rates(rows, manifest)[0].total == 10


class TestReport:
    def make_valid(self):
        rows = [
            make_row("a", "f0", "ASN1_PARSE_ERROR", line_no=1),
            make_row("a", "f1", "X509_VALUE_ERROR", line_no=2, error_string="version: nope"),
            make_row("b", "f1", "X509_VALUE_ERROR", line_no=2),
        ]
        timings = [
            {"parser_id": p, "batch_id": "b0", "cert_count": 10, "wall_ns": 1_000_000}
            for p in ("a", "b")
        ]
        return rows, make_manifest(["a", "b"], [("b0", 10)], timings=timings)

    def test_json_report_keys(self):
        rows, manifest = self.make_valid()
        report = build_report(rows, manifest)
        assert set(report) >= {"rates", "distributions", "overlaps", "discrepancies", "timings"}
        parsed = json.loads(render(report, "json"))
        assert parsed["rates"][0]["parser_id"] == "a"
        assert parsed["distributions"][0]["sum"] == 2

    def test_discrepancy_section(self):
        rows, manifest = self.make_valid()
        report = build_report(
            rows, manifest,
            reference="a",
            predicate=analytics.error_string_prefix("version:"),
            predicate_label="version",
        )
        assert report["discrepancies"]["rows"] == [
            {"parser_id": "a", "count": 1},
            {"parser_id": "b", "count": 1},
        ]

    def test_text_rendering_has_sum_column_and_na(self):
        rows, manifest = self.make_valid()
        text = render(build_report(rows, manifest), "text")
        assert "Sum" in text and "n.a." in text

    def test_csv_rendering_round_trips(self):
        import csv
        import io

        rows, manifest = self.make_valid()
        parsed = list(csv.DictReader(io.StringIO(render(build_report(rows, manifest), "csv"))))
        assert parsed[0]["parser_id"] == "a"
        assert parsed[0]["sum"] == "2"

    def test_unknown_parser_row_aborts(self):
        rows, manifest = self.make_valid()
        rows.append(make_row("ghost", "f9", "ASN1_PARSE_ERROR"))
        with pytest.raises(AnalyticsError):
            build_report(rows, manifest)

    def test_unknown_batch_row_aborts(self):
        rows, manifest = self.make_valid()
        rows.append(make_row("a", "f9", "ASN1_PARSE_ERROR", batch_id="ghost"))
        with pytest.raises(AnalyticsError):
            build_report(rows, manifest)

    def test_bad_category_aborts(self):
        rows, manifest = self.make_valid()
        rows.append(make_row("a", "f9", "NOT_A_CATEGORY"))
        with pytest.raises(AnalyticsError):
            build_report(rows, manifest)

    def test_empty_run_aborts(self):
        manifest = make_manifest(["a"], [("b0", 0)])
        with pytest.raises(AnalyticsError):
            build_report([], manifest)

    def test_recomputation_is_idempotent(self):
        rows, manifest = self.make_valid()
        assert build_report(rows, manifest) == build_report(list(rows), manifest)
