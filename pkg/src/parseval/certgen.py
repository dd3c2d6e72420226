"""Deterministic generator of minimal certificates and single-defect mutants.

Every defect targets exactly one check of the reference parser; the rest of
the certificate is byte-identical to the ``none`` baseline for the same
(seed, index), so any behavioral difference between profiles or parsers is
attributable to the defect alone. Signature bits are deterministic garbage:
nothing in this toolkit verifies signatures.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from . import asn1, curves, x509
from .asn1 import Asn1Value, Tag
from .taxonomy import ErrorCategory

ACCEPT = "accept"

DEFECT_IDS = (
    "none",
    "invalid-version",
    "rsa-bad-exponent",
    "rsa-even-modulus",
    "ec-bad-point",
    "ec-unknown-curve",
    "bad-utctime",
    "bad-uri",
    "bad-ip-length",
    "duplicate-extension",
    "sig-alg-mismatch",
    "validity-reversed",
    "unknown-critical-ext",
    "truncated",
    "non-minimal-length",
)

# (lenient expectation, strict expectation); ACCEPT or a category name.
EXPECTATIONS = {
    "none": (ACCEPT, ACCEPT),
    "invalid-version": (ACCEPT, ErrorCategory.X509_VALUE_ERROR.value),
    "rsa-bad-exponent": (ACCEPT, ErrorCategory.CRYPTO_VALUE_ERROR.value),
    "rsa-even-modulus": (ACCEPT, ErrorCategory.CRYPTO_VALUE_ERROR.value),
    "ec-bad-point": (ACCEPT, ErrorCategory.CRYPTO_VALUE_ERROR.value),
    "ec-unknown-curve": (ACCEPT, ErrorCategory.CRYPTO_UNSUPPORTED.value),
    "bad-utctime": (ACCEPT, ErrorCategory.ASN1_PARSE_ERROR.value),
    "bad-uri": (ACCEPT, ErrorCategory.X509_PARSE_ERROR.value),
    "bad-ip-length": (ACCEPT, ErrorCategory.X509_PARSE_ERROR.value),
    "duplicate-extension": (ACCEPT, ErrorCategory.X509_VALUE_ERROR.value),
    "sig-alg-mismatch": (ACCEPT, ErrorCategory.X509_VALUE_ERROR.value),
    "validity-reversed": (ACCEPT, ErrorCategory.X509_VALUE_ERROR.value),
    "unknown-critical-ext": (ACCEPT, ErrorCategory.X509_UNSUPPORTED.value),
    "truncated": (ErrorCategory.ASN1_PARSE_ERROR.value, ErrorCategory.ASN1_PARSE_ERROR.value),
    "non-minimal-length": (
        ErrorCategory.ASN1_PARSE_ERROR.value,
        ErrorCategory.ASN1_PARSE_ERROR.value,
    ),
}

# Named corpus presets whose counts mirror the discrepancy evaluation shapes.
PRESETS = {
    "invalid-version-160": ("invalid-version", 160),
    "rsa-bad-exponent-264": ("rsa-bad-exponent", 264),
    "ec-bad-point-17": ("ec-bad-point", 17),
}

OID_CN = "2.5.4.3"
UNKNOWN_CURVE_OID = "1.3.6.1.4.1.55555.1.1"
UNKNOWN_EXT_OID = "1.3.6.1.4.1.55555.2.1"

# TBS child indexes in the baseline layout (version wrapper present).
TBS_VERSION = 0
TBS_SERIAL = 1
TBS_SIG_ALG = 2
TBS_ISSUER = 3
TBS_VALIDITY = 4
TBS_SUBJECT = 5
TBS_SPKI = 6
TBS_EXTENSIONS = 7


@dataclass(frozen=True)
class DefectSpec:
    defect_id: str
    count: int
    seed: int = 0

    def __post_init__(self):
        if self.defect_id not in DEFECT_IDS:
            raise ValueError(f"unknown defect id {self.defect_id!r}")
        if self.count <= 0:
            raise ValueError("count must be positive")


@dataclass(frozen=True)
class GeneratedCert:
    der: bytes
    fingerprint: str
    defect_id: str
    index: int
    serial: int
    expect_lenient: str
    expect_strict: str

    def expected(self, profile_name: str) -> str:
        if profile_name == "lenient":
            return self.expect_lenient
        if profile_name == "strict":
            return self.expect_strict
        raise KeyError(profile_name)

    def truth_row(self) -> dict:
        return {
            "fingerprint": self.fingerprint,
            "defect_id": self.defect_id,
            "index": self.index,
            "lenient": self.expect_lenient,
            "strict": self.expect_strict,
        }


def _sub_rng(seed: int, *parts) -> random.Random:
    material = ":".join([str(seed), *map(str, parts)]).encode()
    return random.Random(int.from_bytes(hashlib.sha256(material).digest()[:8], "big"))


def _name(common_name: str) -> Asn1Value:
    return asn1.sequence(
        [
            asn1.set_of(
                [
                    asn1.sequence(
                        [asn1.object_identifier(OID_CN), asn1.utf8_string(common_name)]
                    )
                ]
            )
        ]
    )


def _algorithm(oid: str) -> Asn1Value:
    return asn1.sequence([asn1.object_identifier(oid), asn1.null()])


def _rsa_spki(modulus: int, exponent: int) -> Asn1Value:
    key = asn1.sequence([asn1.integer(modulus), asn1.integer(exponent)])
    return asn1.sequence(
        [_algorithm(x509.OID_RSA_ENCRYPTION), asn1.bit_string(asn1.encode(key))]
    )


def _ec_spki(curve_oid: str, point: bytes) -> Asn1Value:
    alg = asn1.sequence(
        [asn1.object_identifier(x509.OID_EC_PUBLIC_KEY), asn1.object_identifier(curve_oid)]
    )
    return asn1.sequence([alg, asn1.bit_string(point)])


def _extension(oid: str, value: bytes, critical: bool = False) -> Asn1Value:
    parts = [asn1.object_identifier(oid)]
    if critical:
        parts.append(asn1.boolean(True))
    parts.append(asn1.octet_string(value))
    return asn1.sequence(parts)


def _san_extension(entries) -> Asn1Value:
    return _extension(x509.OID_EXT_SAN, asn1.encode(asn1.sequence(entries)))


def _dns_name(host: str) -> Asn1Value:
    return asn1.primitive(Tag.context(2, constructed=False), host.encode("ascii"))


def _uri_name(uri: str) -> Asn1Value:
    return asn1.primitive(Tag.context(6, constructed=False), uri.encode("ascii"))


def _ip_name(raw: bytes) -> Asn1Value:
    return asn1.primitive(Tag.context(7, constructed=False), raw)


def _basic_constraints() -> Asn1Value:
    return _extension(x509.OID_EXT_BASIC_CONSTRAINTS, asn1.encode(asn1.sequence([])))


def _baseline_tree(index: int, rng: random.Random, serial: int) -> Asn1Value:
    """Baseline: v3, RSA modulus shaped like 2048-bit keys, e=65537, one SAN."""
    modulus = rng.getrandbits(2048) | (1 << 2047) | 1
    host = f"c{index:06d}.test.example"
    tbs = asn1.sequence(
        [
            asn1.constructed(Tag.context(0), [asn1.integer(2)]),
            asn1.integer(serial),
            _algorithm(x509.OID_SHA256_RSA),
            _name("Conformance Test CA"),
            asn1.sequence([asn1.utc_time("230101000000Z"), asn1.utc_time("240101000000Z")]),
            _name(host),
            _rsa_spki(modulus, 65537),
            asn1.constructed(
                Tag.context(3),
                [asn1.sequence([_basic_constraints(), _san_extension([_dns_name(host)])])],
            ),
        ]
    )
    signature = asn1.bit_string(rng.randbytes(256))
    return asn1.sequence([tbs, _algorithm(x509.OID_SHA256_RSA), signature])


def _replace_child(node: Asn1Value, index: int, new_child: Asn1Value) -> Asn1Value:
    children = list(node.children)
    children[index] = new_child
    return Asn1Value(node.tag, tuple(children))


def _replace_path(root: Asn1Value, path: tuple, new_node: Asn1Value) -> Asn1Value:
    if not path:
        return new_node
    head, *rest = path
    return _replace_child(root, head, _replace_path(root.children[head], tuple(rest), new_node))


def _with_extensions(root: Asn1Value, exts: list) -> Asn1Value:
    wrapper = asn1.constructed(Tag.context(3), [asn1.sequence(exts)])
    return _replace_path(root, (0, TBS_EXTENSIONS), wrapper)


def _off_curve_point(rng: random.Random, curve: curves.CurveParams) -> bytes:
    size = curve.coordinate_size
    while True:
        x = rng.randrange(curve.p)
        y = rng.randrange(curve.p)
        if not curve.contains(x, y):
            return b"\x04" + x.to_bytes(size, "big") + y.to_bytes(size, "big")


_BAD_URIS = ("http://[::1", "://no-scheme", "http://exa mple.test/", "http://t.example/%zz")
_BAD_TIMES = ("2301010000Z", "230101000000+0100")


def _apply_tree_defect(root: Asn1Value, defect_id: str, rng: random.Random) -> Asn1Value:
    tbs = root.children[0]
    if defect_id == "invalid-version":
        bad = rng.choice((3, 4, 5, 6, 9, 127))
        return _replace_path(root, (0, TBS_VERSION, 0), asn1.integer(bad))
    if defect_id == "rsa-bad-exponent":
        # Every variant trips the exponent predicate: below minimum or even.
        bad_e = rng.choice((1, 65536, 65538, 2))
        spki = tbs.children[TBS_SPKI]
        key = asn1.decode(spki.children[1].content_bytes[1:])
        new_key = asn1.sequence([key.children[0], asn1.integer(bad_e)])
        new_spki = _replace_child(spki, 1, asn1.bit_string(asn1.encode(new_key)))
        return _replace_path(root, (0, TBS_SPKI), new_spki)
    if defect_id == "rsa-even-modulus":
        spki = tbs.children[TBS_SPKI]
        key = asn1.decode(spki.children[1].content_bytes[1:])
        n = asn1.decode_integer_content(key.children[0].content_bytes)
        new_key = asn1.sequence([asn1.integer(n & ~1), key.children[1]])
        new_spki = _replace_child(spki, 1, asn1.bit_string(asn1.encode(new_key)))
        return _replace_path(root, (0, TBS_SPKI), new_spki)
    if defect_id == "ec-bad-point":
        point = _off_curve_point(rng, curves.P256)
        return _replace_path(root, (0, TBS_SPKI), _ec_spki(curves.OID_P256, point))
    if defect_id == "ec-unknown-curve":
        point = b"\x04" + rng.randbytes(64)
        return _replace_path(root, (0, TBS_SPKI), _ec_spki(UNKNOWN_CURVE_OID, point))
    if defect_id == "bad-utctime":
        return _replace_path(root, (0, TBS_VALIDITY, 0), asn1.utc_time(rng.choice(_BAD_TIMES)))
    if defect_id == "bad-uri":
        san = _san_extension([_uri_name(rng.choice(_BAD_URIS))])
        return _with_extensions(root, [_basic_constraints(), san])
    if defect_id == "bad-ip-length":
        size = rng.choice((3, 5, 7, 17))
        san = _san_extension([_ip_name(rng.randbytes(size))])
        return _with_extensions(root, [_basic_constraints(), san])
    if defect_id == "duplicate-extension":
        exts = list(tbs.children[TBS_EXTENSIONS].children[0].children)
        return _with_extensions(root, exts + [_basic_constraints()])
    if defect_id == "sig-alg-mismatch":
        return _replace_path(root, (1,), _algorithm(x509.OID_SHA384_RSA))
    if defect_id == "validity-reversed":
        validity = tbs.children[TBS_VALIDITY]
        swapped = asn1.sequence([validity.children[1], validity.children[0]])
        return _replace_path(root, (0, TBS_VALIDITY), swapped)
    if defect_id == "unknown-critical-ext":
        exts = list(tbs.children[TBS_EXTENSIONS].children[0].children)
        unknown = _extension(UNKNOWN_EXT_OID, b"\x05\x00", critical=True)
        return _with_extensions(root, exts + [unknown])
    raise AssertionError(f"not a tree defect: {defect_id}")


def make_non_minimal_length(der: bytes) -> bytes:
    """Rewrite the outermost length field into a redundant long form."""
    first_len = der[1]
    if first_len < 0x80:
        return der[:1] + bytes([0x81, first_len]) + der[2:]
    count = first_len & 0x7F
    return der[:1] + bytes([0x80 | (count + 1), 0x00]) + der[2 : 2 + count] + der[2 + count :]


def make_indefinite_length(der: bytes) -> bytes:
    """Rewrite the outermost header to indefinite form (never valid DER)."""
    count = 0 if der[1] < 0x80 else der[1] & 0x7F
    content = der[2 + count :]
    return der[:1] + b"\x80" + content + b"\x00\x00"


def generate(spec: DefectSpec) -> list:
    """Produce ``spec.count`` certificates with their per-profile ground truth."""
    expect_lenient, expect_strict = EXPECTATIONS[spec.defect_id]
    out = []
    used_serials = set()
    for index in range(spec.count):
        rng = _sub_rng(spec.seed, index)
        serial = rng.getrandbits(63) | 1
        while serial in used_serials:
            serial += 1
        used_serials.add(serial)
        tree = _baseline_tree(index, rng, serial)
        defect_rng = _sub_rng(spec.seed, index, spec.defect_id)
        if spec.defect_id == "none":
            der = asn1.encode(tree)
        elif spec.defect_id == "truncated":
            der = asn1.encode(tree)[:-1]
        elif spec.defect_id == "non-minimal-length":
            der = make_non_minimal_length(asn1.encode(tree))
        else:
            der = asn1.encode(_apply_tree_defect(tree, spec.defect_id, defect_rng))
        out.append(
            GeneratedCert(
                der=der,
                fingerprint=x509.sha256_fingerprint(der),
                defect_id=spec.defect_id,
                index=index,
                serial=serial,
                expect_lenient=expect_lenient,
                expect_strict=expect_strict,
            )
        )
    return out


def write_batch(certs, batch_path, truth_path=None) -> None:
    """Write certificates in the harness batch format plus an optional
    ground-truth sidecar (JSON lines)."""
    import base64

    with open(batch_path, "w", encoding="utf-8", newline="\n") as fh:
        for cert in certs:
            fh.write(base64.b64encode(cert.der).decode("ascii"))
            fh.write("\n")
    if truth_path is not None:
        with open(truth_path, "w", encoding="utf-8", newline="\n") as fh:
            for cert in certs:
                fh.write(json.dumps(cert.truth_row(), separators=(",", ":")))
                fh.write("\n")
