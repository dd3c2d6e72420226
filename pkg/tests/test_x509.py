import datetime
import itertools
from urllib.parse import urlsplit

import pytest
from hypothesis import given
import hypothesis.strategies as st

from parseval import asn1, certgen, curves, x509
from parseval.taxonomy import CategorizedError, ErrorCategory
from parseval.x509 import (
    LENIENT,
    STRICT,
    ValidationProfile,
    check_ec_key,
    check_rsa_key,
    check_validity,
    check_version,
    parse_certificate,
    validate_uri,
)

UTC = datetime.timezone.utc


def gen_one(defect_id: str, seed: int = 0, index: int = 0) -> bytes:
    return certgen.generate(certgen.DefectSpec(defect_id, index + 1, seed))[index].der


def rejection(der: bytes, profile) -> CategorizedError:
    with pytest.raises(CategorizedError) as exc:
        parse_certificate(der, profile)
    return exc.value


@pytest.fixture(scope="module")
def baseline() -> bytes:
    return gen_one("none")


class TestParseCertificate:
    def test_wellformed_accepted_by_strict(self, baseline):
        cert = parse_certificate(baseline, STRICT)
        assert cert.version == 2
        assert cert.spki.algorithm == "rsa"
        assert cert.spki.exponent == 65537
        assert cert.not_before < cert.not_after

    def test_wellformed_accepted_by_mainstream_parser(self, baseline):
        cryptography_x509 = pytest.importorskip("cryptography.x509")
        loaded = cryptography_x509.load_der_x509_certificate(baseline)
        ours = parse_certificate(baseline, STRICT)
        assert loaded.serial_number == ours.serial
        assert loaded.fingerprint(__import__("cryptography.hazmat.primitives.hashes", fromlist=["SHA256"]).SHA256()).hex() == ours.fingerprint

    def test_truncation_is_asn1_error(self, baseline):
        err = rejection(baseline[:-1], STRICT)
        assert err.category is ErrorCategory.ASN1_PARSE_ERROR
        assert rejection(baseline[:-1], LENIENT).category is ErrorCategory.ASN1_PARSE_ERROR

    def test_invalid_version_split(self):
        der = gen_one("invalid-version")
        assert rejection(der, STRICT).category is ErrorCategory.X509_VALUE_ERROR
        assert parse_certificate(der, LENIENT).version not in (0, 1, 2)

    def test_v1_certificate_accepted(self):
        # v1: no [0] wrapper, no extensions.
        base = asn1.decode(gen_one("none"))
        tbs = base.children[0]
        v1_tbs = asn1.sequence(tbs.children[1:7])
        v1 = asn1.encode(asn1.sequence([v1_tbs, base.children[1], base.children[2]]))
        cert = parse_certificate(v1, STRICT)
        assert cert.version == 0 and cert.extensions == ()
        cryptography_x509 = pytest.importorskip("cryptography.x509")
        assert cryptography_x509.load_der_x509_certificate(v1).version.name == "v1"

    def test_fingerprint_matches_store_identity(self, baseline):
        import hashlib

        cert = parse_certificate(baseline, LENIENT)
        assert cert.fingerprint == hashlib.sha256(baseline).hexdigest()

    def test_determinism(self, baseline):
        a = parse_certificate(baseline, STRICT)
        b = parse_certificate(baseline, STRICT)
        assert a.fingerprint == b.fingerprint and a.serial == b.serial

    def test_extension_order_and_duplicates_preserved(self):
        der = gen_one("duplicate-extension")
        cert = parse_certificate(der, LENIENT)
        oids = [e.oid for e in cert.extensions]
        assert oids.count(x509.OID_EXT_BASIC_CONSTRAINTS) == 2
        assert oids[-1] == x509.OID_EXT_BASIC_CONSTRAINTS

    def test_garbage_input(self):
        assert rejection(b"\x00\x01\x02", LENIENT).category is ErrorCategory.ASN1_PARSE_ERROR

    def test_tbs_span_covers_inner_sequence(self, baseline):
        cert = parse_certificate(baseline, LENIENT)
        offset, length = cert.tbs_span
        tbs_bytes = baseline[offset : offset + length]
        assert tbs_bytes[0] == 0x30
        assert asn1.decode(tbs_bytes) == asn1.decode(baseline).children[0]

    def test_builtin_errors_never_uncategorized(self):
        for defect in certgen.DEFECT_IDS:
            if defect == "none":
                continue
            der = gen_one(defect)
            for profile in (LENIENT, STRICT):
                try:
                    parse_certificate(der, profile)
                except CategorizedError as e:
                    assert e.category is not ErrorCategory.UNCATEGORIZED
                    assert e.check_id

    def test_not_a_certificate_shape(self):
        blob = asn1.encode(asn1.sequence([asn1.integer(1)]))
        err = rejection(blob, LENIENT)
        assert err.category is ErrorCategory.X509_PARSE_ERROR


class TestTotality:
    @given(st.binary(min_size=0, max_size=200))
    def test_never_raises_anything_but_categorized(self, blob):
        for profile in (LENIENT, STRICT):
            try:
                parse_certificate(blob, profile)
            except CategorizedError:
                pass

    @given(st.integers(0, 2**48), st.integers(0, 2**32))
    def test_total_over_grafted_certificates(self, seed, graft_seed):
        # Replace a random subtree of a valid certificate with a random
        # ASN.1 tree; the parser must answer with accept or a categorized
        # error, never anything else.
        import random as random_module

        from tree_gen import random_tree

        rng = random_module.Random(seed)
        base = asn1.decode(gen_one("none"))
        paths = [()]
        stack = [(base, ())]
        while stack:
            node, path = stack.pop()
            if isinstance(node.content, tuple):
                for i, child in enumerate(node.content):
                    paths.append(path + (i,))
                    stack.append((child, path + (i,)))
        graft = random_tree(random_module.Random(graft_seed))
        mutated = certgen._replace_path(base, rng.choice(paths), graft)
        blob = asn1.encode(mutated)
        for profile in (LENIENT, STRICT):
            try:
                parse_certificate(blob, profile)
            except CategorizedError:
                pass


class TestStageOrdering:
    def test_asn1_precedes_value_checks(self):
        # A certificate with an invalid version AND a truncated tail fails at
        # the ASN.1 stage, never with the later category.
        der = gen_one("invalid-version")[:-1]
        assert rejection(der, STRICT).category is ErrorCategory.ASN1_PARSE_ERROR

    def test_parse_checks_precede_value_checks(self):
        # Bad SAN URI plus reversed validity: URI sub-pass fires first.
        tree = asn1.decode(gen_one("none"))
        tbs = tree.children[0]
        validity = tbs.children[certgen.TBS_VALIDITY]
        swapped = asn1.sequence([validity.children[1], validity.children[0]])
        tree = certgen._replace_path(tree, (0, certgen.TBS_VALIDITY), swapped)
        san = certgen._san_extension([certgen._uri_name("http://[::1")])
        tree = certgen._with_extensions(tree, [certgen._basic_constraints(), san])
        err = rejection(asn1.encode(tree), STRICT)
        assert err.category is ErrorCategory.X509_PARSE_ERROR
        assert err.check_id == "san-uri"

    def test_value_checks_precede_crypto_checks(self):
        tree = asn1.decode(gen_one("rsa-bad-exponent"))
        bad = certgen._apply_tree_defect(tree, "invalid-version", __import__("random").Random(1))
        err = rejection(asn1.encode(bad), STRICT)
        assert err.category is ErrorCategory.X509_VALUE_ERROR
        assert err.check_id == "version"


class TestProfiles:
    def test_presets(self):
        assert LENIENT.enabled_checks() == frozenset()
        assert STRICT.enabled_checks() == frozenset(x509.CHECK_FLAGS)

    def test_profile_monotonicity_on_presets(self):
        for defect in certgen.DEFECT_IDS:
            der = gen_one(defect)
            lenient_accepts = True
            try:
                parse_certificate(der, LENIENT)
            except CategorizedError:
                lenient_accepts = False
            strict_accepts = True
            try:
                parse_certificate(der, STRICT)
            except CategorizedError:
                strict_accepts = False
            assert strict_accepts <= lenient_accepts, defect

    def test_single_flag_profiles_reject_only_their_defect(self):
        cases = {
            "check_version": "invalid-version",
            "check_rsa_params": "rsa-bad-exponent",
            "check_uri_syntax": "bad-uri",
            "check_ip_length": "bad-ip-length",
            "check_duplicate_extensions": "duplicate-extension",
            "check_sig_alg_match": "sig-alg-mismatch",
            "check_validity_order": "validity-reversed",
            "reject_unknown_critical_extension": "unknown-critical-ext",
            "check_time_strict": "bad-utctime",
            "check_ec_params": "ec-bad-point",
        }
        for flag, defect in cases.items():
            profile = ValidationProfile(name=f"only-{flag}", **{flag: True})
            der = gen_one(defect)
            with pytest.raises(CategorizedError):
                parse_certificate(der, profile)
            parse_certificate(gen_one("none"), profile)
            other = ValidationProfile(name="none-of-them")
            parse_certificate(der, other)


class TestChecks:
    def test_check_version(self):
        check_version(2, True, STRICT)
        check_version(0, False, STRICT)
        with pytest.raises(CategorizedError) as exc:
            check_version(5, False, STRICT)
        assert exc.value.category is ErrorCategory.X509_VALUE_ERROR
        with pytest.raises(CategorizedError):
            check_version(1, True, STRICT)  # extensions demand v3
        literal = ValidationProfile(check_version=True, require_version_2_or_3=True)
        with pytest.raises(CategorizedError):
            check_version(0, False, literal)

    def test_check_rsa_key_accepts_f4(self):
        check_rsa_key(0xC135 | 1, 65537, STRICT)

    def test_check_rsa_key_exponent_one(self):
        with pytest.raises(CategorizedError) as exc:
            check_rsa_key(0xC135 | 1, 1, STRICT)
        assert exc.value.category is ErrorCategory.CRYPTO_VALUE_ERROR
        # Independent oracle: a mainstream implementation refuses e=1 too.
        rsa = pytest.importorskip("cryptography.hazmat.primitives.asymmetric.rsa")
        with pytest.raises(ValueError):
            rsa.RSAPublicNumbers(1, 0xC135 | 1).public_key()

    @pytest.mark.parametrize(
        "n,e",
        [(0xC136, 65537), (-5, 65537), (0xC135, 65536), (0xC135, 0), (0xC135, -3)],
    )
    def test_check_rsa_key_rejections(self, n, e):
        with pytest.raises(CategorizedError) as exc:
            check_rsa_key(n, e, STRICT)
        assert exc.value.category is ErrorCategory.CRYPTO_VALUE_ERROR

    def test_check_rsa_key_disabled_in_lenient(self):
        check_rsa_key(0xC136, 1, LENIENT)

    def test_min_exponent_knob(self):
        fussy = ValidationProfile(check_rsa_params=True, min_rsa_exponent=65537)
        with pytest.raises(CategorizedError):
            check_rsa_key(0xC135, 3, fussy)
        check_rsa_key(0xC135, 65537, fussy)


TOY_OID = "1.3.999.17.1"
TOY = curves.CurveParams(oid=TOY_OID, name="toy-17", p=17, a=2, b=2, gx=5, gy=1, order=19)
TOY_PROFILE = ValidationProfile(
    check_ec_params=True, supported_curves=frozenset({TOY_OID, curves.OID_P256})
)


class TestEcChecks:
    def test_p256_generator_accepted(self):
        point = b"\x04" + curves.P256.gx.to_bytes(32, "big") + curves.P256.gy.to_bytes(32, "big")
        check_ec_key(curves.P256, point, STRICT)

    def test_p256_generator_shifted_rejected(self):
        gy1 = (curves.P256.gy + 1) % curves.P256.p
        point = b"\x04" + curves.P256.gx.to_bytes(32, "big") + gy1.to_bytes(32, "big")
        with pytest.raises(CategorizedError) as exc:
            check_ec_key(curves.P256, point, STRICT)
        assert exc.value.category is ErrorCategory.CRYPTO_VALUE_ERROR
        assert exc.value.check_id == "ec-point"
        # Independent oracles: direct curve arithmetic and a mainstream library.
        assert (gy1 * gy1 - (curves.P256.gx**3 + curves.P256.a * curves.P256.gx + curves.P256.b)) % curves.P256.p != 0
        ec = pytest.importorskip("cryptography.hazmat.primitives.asymmetric.ec")
        with pytest.raises(ValueError):
            ec.EllipticCurvePublicKey.from_encoded_point(ec.SECP256R1(), point)

    def test_unknown_curve_unsupported(self):
        with pytest.raises(CategorizedError) as exc:
            check_ec_key("1.2.3.4", b"\x04" + b"\x00" * 64, STRICT)
        assert exc.value.category is ErrorCategory.CRYPTO_UNSUPPORTED
        assert exc.value.check_id == "ec-curve"

    def test_explicit_params_unsupported(self):
        with pytest.raises(CategorizedError) as exc:
            check_ec_key(None, b"\x04", STRICT, explicit=True)
        assert exc.value.category is ErrorCategory.CRYPTO_UNSUPPORTED

    def test_compressed_point_rejected(self):
        point = b"\x02" + curves.P256.gx.to_bytes(32, "big")
        with pytest.raises(CategorizedError) as exc:
            check_ec_key(curves.P256, point, STRICT)
        assert exc.value.check_id == "ec-point"

    def test_toy_curve_exhaustive(self):
        # Brute-force oracle: all affine rational points of y^2 = x^3+2x+2 over F_17.
        rational = {
            (x, y)
            for x in range(17)
            for y in range(17)
            if (y * y - (x**3 + 2 * x + 2)) % 17 == 0
        }
        accepted = set()
        for x, y in itertools.product(range(17), range(17)):
            try:
                check_ec_key(TOY, (x, y), TOY_PROFILE)
                accepted.add((x, y))
            except CategorizedError as e:
                assert e.category is ErrorCategory.CRYPTO_VALUE_ERROR
        assert accepted == rational
        assert len(accepted) == TOY.order - 1  # all but the point at infinity

    def test_coordinate_out_of_field(self):
        with pytest.raises(CategorizedError) as exc:
            check_ec_key(TOY, (18, 1), TOY_PROFILE)
        assert exc.value.category is ErrorCategory.CRYPTO_VALUE_ERROR

    def test_ec_cert_paths(self):
        for defect, category, check_id in (
            ("ec-bad-point", ErrorCategory.CRYPTO_VALUE_ERROR, "ec-point"),
            ("ec-unknown-curve", ErrorCategory.CRYPTO_UNSUPPORTED, "ec-curve"),
        ):
            err = rejection(gen_one(defect), STRICT)
            assert err.category is category and err.check_id == check_id


class TestCurveParams:
    def test_singular_curve_rejected(self):
        # y^2 = x^3 over F_5 has zero discriminant.
        with pytest.raises(ValueError):
            curves.CurveParams(oid="1.3.999.5.1", name="bad", p=5, a=0, b=0, gx=0, gy=0, order=5)

    def test_generator_must_lie_on_curve(self):
        with pytest.raises(ValueError):
            curves.CurveParams(oid="1.3.999.17.2", name="bad", p=17, a=2, b=2, gx=5, gy=2, order=19)

    def test_named_registry(self):
        assert curves.lookup(curves.OID_P256) is curves.P256
        assert curves.lookup("9.9.9") is None
        assert curves.P256.coordinate_size == 32
        assert curves.P521.coordinate_size == 66


class TestSigAlgChecks:
    def test_mismatch(self):
        err = rejection(gen_one("sig-alg-mismatch"), STRICT)
        assert err.category is ErrorCategory.X509_VALUE_ERROR
        assert err.check_id == "sig-alg-match"

    def test_null_vs_absent_is_profile_sensitive(self):
        tree = asn1.decode(gen_one("none"))
        # Outer algorithm: drop the NULL parameters, keep the same OID.
        no_params = asn1.sequence([asn1.object_identifier(x509.OID_SHA256_RSA)])
        der = asn1.encode(certgen._replace_path(tree, (1,), no_params))
        err = rejection(der, STRICT)
        assert err.check_id == "sig-alg-match"
        relaxed = ValidationProfile(check_sig_alg_match=True, sig_alg_null_absent_equivalent=True)
        parse_certificate(der, relaxed)
        parse_certificate(der, LENIENT)

    def test_unsupported_sig_alg(self):
        tree = asn1.decode(gen_one("none"))
        odd_alg = asn1.sequence([asn1.object_identifier("1.2.3.99.1"), asn1.null()])
        tree = certgen._replace_path(tree, (0, certgen.TBS_SIG_ALG), odd_alg)
        tree = certgen._replace_path(tree, (1,), odd_alg)
        err = rejection(asn1.encode(tree), STRICT)
        assert err.category is ErrorCategory.X509_UNSUPPORTED
        assert err.check_id == "sig-alg-supported"
        parse_certificate(asn1.encode(tree), LENIENT)


class TestNamesAndUris:
    def test_bad_uri_rejected_with_index(self):
        err = rejection(gen_one("bad-uri"), STRICT)
        assert err.category is ErrorCategory.X509_PARSE_ERROR
        assert err.check_id == "san-uri"
        assert "alt name 0" in err.message

    def test_bad_ip_length(self):
        err = rejection(gen_one("bad-ip-length"), STRICT)
        assert err.category is ErrorCategory.X509_PARSE_ERROR
        assert err.check_id == "san-ip"

    def test_issuer_alt_name_checked_too(self):
        tree = asn1.decode(gen_one("none"))
        ian = certgen._extension(
            x509.OID_EXT_IAN,
            asn1.encode(asn1.sequence([certgen._uri_name("http://[::1")])),
        )
        der = asn1.encode(
            certgen._with_extensions(tree, [certgen._basic_constraints(), ian])
        )
        err = rejection(der, STRICT)
        assert err.check_id == "san-uri"
        parse_certificate(der, LENIENT)

    def test_dotlocal_flag(self):
        tree = asn1.decode(gen_one("none"))
        san = certgen._san_extension([certgen._uri_name("ldap://host.local/cn=x")])
        der = asn1.encode(certgen._with_extensions(tree, [certgen._basic_constraints(), san]))
        parse_certificate(der, STRICT)  # accepted by default
        fussy = ValidationProfile(reject_local_san_uri=True)
        err = rejection(der, fussy)
        assert err.check_id == "san-uri-local"


URI_CASES = [
    ("https://example.com/a", True),
    ("http://[::1", False),
    ("http://[::1]/path", True),
    ("http://[::1]:8080/path", True),
    ("ldap://*.local/cn=x", True),  # '*' is legal in a reg-name
    ("://missing-scheme", False),
    ("1http://bad-scheme", False),
    ("http://exa mple.com/", False),
    ("http://t.example/%zz", False),
    ("http://t.example/%2fok", True),
    ("mailto:user@example.com", True),
    ("urn:ietf:rfc:3986", True),
    ("http://user:pw@example.com:8080/p?q=1#frag", True),
    ("http://example.com:notaport/", False),
    ("", False),
    ("http://example.com/\x7f", False),
]


class TestUriGrammar:
    @pytest.mark.parametrize("uri,ok", URI_CASES)
    def test_cases(self, uri, ok):
        problem = validate_uri(uri)
        assert (problem is None) == ok, f"{uri!r} -> {problem}"

    def test_bracket_case_agrees_with_stdlib_oracle(self):
        with pytest.raises(ValueError):
            urlsplit("http://[::1")
        assert validate_uri("http://[::1") is not None


class TestValidity:
    def test_ordering(self):
        t1 = datetime.datetime(2023, 1, 1, tzinfo=UTC)
        t2 = datetime.datetime(2024, 1, 1, tzinfo=UTC)
        check_validity(t1, t2, STRICT)
        check_validity(t1, t1, STRICT)  # zero-length interval is ordered
        with pytest.raises(CategorizedError) as exc:
            check_validity(t2, t1, STRICT)
        assert exc.value.category is ErrorCategory.X509_VALUE_ERROR

    def test_reversed_cert(self):
        err = rejection(gen_one("validity-reversed"), STRICT)
        assert err.check_id == "validity-order"

    def test_bad_time_is_asn1_category_under_strict(self):
        err = rejection(gen_one("bad-utctime"), STRICT)
        assert err.category is ErrorCategory.ASN1_PARSE_ERROR
        assert err.check_id.startswith("asn1.")
        parse_certificate(gen_one("bad-utctime"), LENIENT)

    def test_seconds_less_utctime_rejected_by_mainstream_parser(self):
        cryptography_x509 = pytest.importorskip("cryptography.x509")
        der = gen_one("bad-utctime", seed=3)
        with pytest.raises(ValueError):
            cryptography_x509.load_der_x509_certificate(der)


class TestExtensions:
    def test_unknown_noncritical_passes(self):
        tree = asn1.decode(gen_one("none"))
        exts = list(tree.children[0].children[certgen.TBS_EXTENSIONS].children[0].children)
        exts.append(certgen._extension("1.2.3.4.5", b"\x05\x00", critical=False))
        der = asn1.encode(certgen._with_extensions(tree, exts))
        parse_certificate(der, STRICT)

    def test_unknown_critical_unsupported(self):
        err = rejection(gen_one("unknown-critical-ext"), STRICT)
        assert err.category is ErrorCategory.X509_UNSUPPORTED
        assert err.check_id == "unknown-critical-extension"
        parse_certificate(gen_one("unknown-critical-ext"), LENIENT)

    def test_duplicate_extension(self):
        err = rejection(gen_one("duplicate-extension"), STRICT)
        assert err.category is ErrorCategory.X509_VALUE_ERROR
        assert err.check_id == "duplicate-extension"


class TestPemHelpers:
    def test_pem_unwrap(self, baseline):
        import base64

        body = base64.encodebytes(baseline).decode()
        pem = f"-----BEGIN CERTIFICATE-----\n{body}-----END CERTIFICATE-----\n"
        assert x509.pem_to_der(pem.encode()) == baseline
        assert x509.load_der_input(pem.encode()) == baseline

    def test_load_der_input_base64_line(self, baseline):
        import base64

        line = base64.b64encode(baseline)
        assert x509.load_der_input(line) == baseline
        assert x509.load_der_input(baseline) == baseline

    def test_pem_without_block(self):
        with pytest.raises(ValueError):
            x509.pem_to_der(b"no armor here")
