"""Reference X.509 certificate parser with configurable validation profiles.

Parsing runs in fixed stages: (1) DER decode, (2) structural mapping onto the
certificate schema plus name/URI sub-checks, (3) logical value checks,
(4) cryptographic parameter checks. The first failing stage determines the
error category; trust chains and signatures are never verified.
"""

from __future__ import annotations

import base64
import hashlib
import re
from dataclasses import dataclass, field
from datetime import datetime
from typing import Optional, Tuple, Union

from . import asn1, curves
from .asn1 import Asn1Value, DecodeError, Tag, TagClass
from .taxonomy import CategorizedError, ErrorCategory

# Algorithm identifier OIDs.
OID_RSA_ENCRYPTION = "1.2.840.113549.1.1.1"
OID_SHA1_RSA = "1.2.840.113549.1.1.5"
OID_SHA256_RSA = "1.2.840.113549.1.1.11"
OID_SHA384_RSA = "1.2.840.113549.1.1.12"
OID_SHA512_RSA = "1.2.840.113549.1.1.13"
OID_EC_PUBLIC_KEY = "1.2.840.10045.2.1"
OID_ECDSA_SHA256 = "1.2.840.10045.4.3.2"
OID_ECDSA_SHA384 = "1.2.840.10045.4.3.3"
OID_ECDSA_SHA512 = "1.2.840.10045.4.3.4"

RSA_SIGNATURE_OIDS = frozenset({OID_SHA1_RSA, OID_SHA256_RSA, OID_SHA384_RSA, OID_SHA512_RSA})

DEFAULT_SUPPORTED_SIG_ALGS = frozenset(
    {OID_SHA1_RSA, OID_SHA256_RSA, OID_SHA384_RSA, OID_SHA512_RSA,
     OID_ECDSA_SHA256, OID_ECDSA_SHA384, OID_ECDSA_SHA512}
)

# Extension OIDs.
OID_EXT_SUBJECT_KEY_ID = "2.5.29.14"
OID_EXT_KEY_USAGE = "2.5.29.15"
OID_EXT_SAN = "2.5.29.17"
OID_EXT_IAN = "2.5.29.18"
OID_EXT_BASIC_CONSTRAINTS = "2.5.29.19"
OID_EXT_CRL_DISTRIBUTION = "2.5.29.31"
OID_EXT_CERT_POLICIES = "2.5.29.32"
OID_EXT_AUTHORITY_KEY_ID = "2.5.29.35"
OID_EXT_EXT_KEY_USAGE = "2.5.29.37"
OID_EXT_AUTHORITY_INFO = "1.3.6.1.5.5.7.1.1"

KNOWN_EXTENSIONS = frozenset(
    {OID_EXT_SUBJECT_KEY_ID, OID_EXT_KEY_USAGE, OID_EXT_SAN, OID_EXT_IAN,
     OID_EXT_BASIC_CONSTRAINTS, OID_EXT_CRL_DISTRIBUTION, OID_EXT_CERT_POLICIES,
     OID_EXT_AUTHORITY_KEY_ID, OID_EXT_EXT_KEY_USAGE, OID_EXT_AUTHORITY_INFO}
)

DEFAULT_SUPPORTED_CURVES = frozenset({curves.OID_P256, curves.OID_P384, curves.OID_P521})

# Flags that make up the check catalog; presets toggle exactly these.
CHECK_FLAGS = (
    "check_version",
    "check_extensions_require_v3",
    "check_sig_alg_match",
    "check_sig_alg_supported",
    "check_rsa_params",
    "check_ec_params",
    "check_uri_syntax",
    "check_ip_length",
    "check_duplicate_extensions",
    "check_validity_order",
    "check_time_strict",
    "reject_unknown_critical_extension",
)


@dataclass(frozen=True)
class ValidationProfile:
    """A named set of enabled checks plus their parameters.

    ``lenient()`` turns every check off (ASN.1-level structure only);
    ``strict()`` turns every catalog check on. The extra ``require_*`` /
    ``reject_*`` / ``*_equivalent`` knobs are deliberately outside both
    presets; they encode ecosystem splits with no single right answer.
    """

    name: str = "custom"
    check_version: bool = False
    check_extensions_require_v3: bool = False
    check_sig_alg_match: bool = False
    check_sig_alg_supported: bool = False
    check_rsa_params: bool = False
    check_ec_params: bool = False
    check_uri_syntax: bool = False
    check_ip_length: bool = False
    check_duplicate_extensions: bool = False
    check_validity_order: bool = False
    check_time_strict: bool = False
    reject_unknown_critical_extension: bool = False
    require_version_2_or_3: bool = False
    reject_local_san_uri: bool = False
    sig_alg_null_absent_equivalent: bool = False
    supported_curves: frozenset = DEFAULT_SUPPORTED_CURVES
    supported_sig_algs: frozenset = DEFAULT_SUPPORTED_SIG_ALGS
    min_rsa_exponent: int = 3

    def enabled_checks(self) -> frozenset:
        return frozenset(f for f in CHECK_FLAGS if getattr(self, f))

    @staticmethod
    def lenient() -> "ValidationProfile":
        return LENIENT

    @staticmethod
    def strict() -> "ValidationProfile":
        return STRICT


LENIENT = ValidationProfile(name="lenient")
STRICT = ValidationProfile(name="strict", **{flag: True for flag in CHECK_FLAGS})

PROFILES = {"lenient": LENIENT, "strict": STRICT}


@dataclass(slots=True)
class AlgorithmIdentifier:
    oid: str
    parameters: Optional[bytes]  # raw DER of the params element, None when absent
    raw: bytes  # full DER encoding, for byte-exact comparison

    def __str__(self) -> str:
        return self.oid


@dataclass(slots=True)
class GeneralName:
    kind: str  # 'dns' | 'email' | 'uri' | 'ip' | 'dn' | 'other'
    value: Union[str, bytes]
    tag_number: int


@dataclass(slots=True)
class Extension:
    oid: str
    critical: bool
    value: bytes
    decoded: Optional[object] = None


@dataclass(slots=True)
class PublicKeyInfo:
    algorithm: str  # 'rsa' | 'ec' | 'other'
    algorithm_oid: str
    modulus: Optional[int] = None
    exponent: Optional[int] = None
    curve_oid: Optional[str] = None  # named-curve OID; 'explicit' params use the flag below
    explicit_curve: bool = False
    point_bytes: Optional[bytes] = None
    raw_key: bytes = b""


@dataclass(slots=True)
class Certificate:
    version: int  # encoded value: 0=v1, 1=v2, 2=v3
    serial: int
    tbs_sig_alg: AlgorithmIdentifier
    outer_sig_alg: AlgorithmIdentifier
    issuer: Tuple[Tuple[str, str], ...]
    subject: Tuple[Tuple[str, str], ...]
    not_before: datetime
    not_after: datetime
    spki: PublicKeyInfo
    extensions: Tuple[Extension, ...]
    raw_der: bytes = field(repr=False)
    tbs_span: Tuple[int, int] = (0, 0)

    @property
    def fingerprint(self) -> str:
        return sha256_fingerprint(self.raw_der)

    def alt_names(self) -> Tuple[Tuple[int, GeneralName], ...]:
        """SAN then IAN entries with their in-extension indexes."""
        out = []
        for ext in self.extensions:
            if ext.oid in (OID_EXT_SAN, OID_EXT_IAN) and isinstance(ext.decoded, tuple):
                out.extend(enumerate(ext.decoded))
        return tuple(out)


def sha256_fingerprint(der: bytes) -> str:
    return hashlib.sha256(der).hexdigest()


_PEM_RE = re.compile(
    rb"-----BEGIN CERTIFICATE-----(.*?)-----END CERTIFICATE-----", re.DOTALL
)


def pem_to_der(data: bytes) -> bytes:
    """Unwrap the first PEM certificate block to DER bytes."""
    m = _PEM_RE.search(data)
    if not m:
        raise ValueError("no PEM certificate block found")
    try:
        return base64.b64decode(b"".join(m.group(1).split()), validate=True)
    except Exception as e:
        raise ValueError(f"invalid PEM base64 body: {e}") from None


def load_der_input(data: bytes) -> bytes:
    """Accept raw DER, PEM armor, or a single base64 line; return DER bytes."""
    if b"-----BEGIN" in data:
        return pem_to_der(data)
    stripped = data.strip()
    if stripped and re.fullmatch(rb"[A-Za-z0-9+/=\s]+", stripped) and not stripped.startswith(b"\x30"):
        try:
            return base64.b64decode(b"".join(stripped.split()), validate=True)
        except Exception:
            pass
    return data


def _err(category: ErrorCategory, message: str, check_id: str, offset: Optional[int] = None) -> CategorizedError:
    return CategorizedError(category, message, check_id=check_id, offset=offset)


def _structure_error(message: str, node: Optional[Asn1Value] = None) -> CategorizedError:
    return _err(
        ErrorCategory.X509_PARSE_ERROR,
        message,
        "structure",
        offset=node.offset if node is not None else None,
    )


def _expect_sequence(node: Asn1Value, what: str) -> Tuple[Asn1Value, ...]:
    if node.tag != asn1.TAG_SEQUENCE:
        raise _structure_error(f"{what}: expected SEQUENCE, found {node.tag!r}", node)
    return node.content


def _expect_primitive(node: Asn1Value, number: int, what: str) -> bytes:
    if node.tag.cls != TagClass.UNIVERSAL or node.tag.number != number or node.tag.constructed:
        raise _structure_error(f"{what}: unexpected tag {node.tag!r}", node)
    return node.content


_STRING_DECODERS = {
    asn1.UTF8_STRING: "utf-8",
    asn1.PRINTABLE_STRING: "ascii",
    asn1.IA5_STRING: "ascii",
    asn1.VISIBLE_STRING: "ascii",
    asn1.NUMERIC_STRING: "ascii",
    asn1.T61_STRING: "latin-1",
    asn1.BMP_STRING: "utf-16-be",
}


def _decode_attribute_value(node: Asn1Value) -> str:
    if (
        node.tag.cls == TagClass.UNIVERSAL
        and not node.tag.constructed
        and node.tag.number in _STRING_DECODERS
    ):
        try:
            return node.content_bytes.decode(_STRING_DECODERS[node.tag.number])
        except UnicodeDecodeError:
            pass
    raw = node.content_bytes if not node.tag.constructed else asn1.encode(node)
    return "#" + raw.hex()


def _map_name(node: Asn1Value, what: str) -> Tuple[Tuple[str, str], ...]:
    pairs = []
    for rdn in _expect_sequence(node, what):
        if rdn.tag != asn1.TAG_SET:
            raise _structure_error(f"{what}: RDN must be SET", rdn)
        for atv in rdn.children:
            parts = _expect_sequence(atv, f"{what} attribute")
            if len(parts) != 2:
                raise _structure_error(f"{what}: attribute needs type and value", atv)
            oid = _map_oid(parts[0], f"{what} attribute type")
            pairs.append((oid, _decode_attribute_value(parts[1])))
    return tuple(pairs)


def _map_oid(node: Asn1Value, what: str) -> str:
    content = _expect_primitive(node, asn1.OBJECT_IDENTIFIER, what)
    return asn1.oid_to_dotted(content)


def _raw_span(node: Asn1Value, buf: Optional[bytes]) -> bytes:
    if buf is not None and node.offset >= 0:
        return buf[node.offset : node.offset + node.length]
    return asn1.encode(node)


def _map_algorithm(node: Asn1Value, what: str, buf: Optional[bytes] = None) -> AlgorithmIdentifier:
    parts = _expect_sequence(node, what)
    if not 1 <= len(parts) <= 2:
        raise _structure_error(f"{what}: expected algorithm and optional parameters", node)
    oid = _map_oid(parts[0], f"{what} algorithm")
    params = _raw_span(parts[1], buf) if len(parts) == 2 else None
    return AlgorithmIdentifier(oid=oid, parameters=params, raw=_raw_span(node, buf))


def _map_time(node: Asn1Value, what: str, strict: bool) -> datetime:
    if node.tag.cls != TagClass.UNIVERSAL or node.tag.number not in (asn1.UTC_TIME, asn1.GENERALIZED_TIME):
        raise _structure_error(f"{what}: expected UTCTime or GeneralizedTime", node)
    return asn1.parse_time(node, strict=strict)


def _map_bit_string(node: Asn1Value, what: str) -> bytes:
    content = _expect_primitive(node, asn1.BIT_STRING, what)
    if content[0] != 0:
        raise _structure_error(f"{what}: BIT STRING with unused bits", node)
    return content[1:]


def _map_spki(node: Asn1Value, buf: Optional[bytes] = None) -> PublicKeyInfo:
    parts = _expect_sequence(node, "subjectPublicKeyInfo")
    if len(parts) != 2:
        raise _structure_error("subjectPublicKeyInfo: expected algorithm and key", node)
    alg = _map_algorithm(parts[0], "subjectPublicKeyInfo", buf)
    key_bytes = _map_bit_string(parts[1], "subjectPublicKey")
    if alg.oid == OID_RSA_ENCRYPTION:
        key = asn1.decode(key_bytes)  # DecodeError propagates as ASN1_PARSE_ERROR
        members = _expect_sequence(key, "RSAPublicKey")
        if len(members) != 2:
            raise _structure_error("RSAPublicKey: expected modulus and exponent", key)
        n = asn1.decode_integer_content(_expect_primitive(members[0], asn1.INTEGER, "RSA modulus"))
        e = asn1.decode_integer_content(_expect_primitive(members[1], asn1.INTEGER, "RSA exponent"))
        return PublicKeyInfo("rsa", alg.oid, modulus=n, exponent=e, raw_key=key_bytes)
    if alg.oid == OID_EC_PUBLIC_KEY:
        if alg.parameters is None:
            raise _structure_error("EC key without domain parameters", parts[0])
        params = asn1.decode(alg.parameters)
        if params.tag == asn1.TAG_OID:
            return PublicKeyInfo(
                "ec", alg.oid,
                curve_oid=asn1.oid_to_dotted(params.content_bytes),
                point_bytes=key_bytes, raw_key=key_bytes,
            )
        if params.tag == asn1.TAG_SEQUENCE:
            return PublicKeyInfo(
                "ec", alg.oid, explicit_curve=True, point_bytes=key_bytes, raw_key=key_bytes
            )
        raise _structure_error("EC parameters must be a named curve or ECParameters", params)
    return PublicKeyInfo("other", alg.oid, raw_key=key_bytes)


_GENERAL_NAME_KINDS = {1: "email", 2: "dns", 6: "uri"}
_TAG_VERSION = Tag.context(0)
_TAG_ISSUER_UID = Tag.context(1, constructed=False)
_TAG_SUBJECT_UID = Tag.context(2, constructed=False)
_TAG_EXTENSIONS = Tag.context(3)


def _map_general_name(node: Asn1Value, what: str) -> GeneralName:
    if node.tag.cls != TagClass.CONTEXT:
        raise _structure_error(f"{what}: GeneralName must be context-tagged", node)
    number = node.tag.number
    if number in _GENERAL_NAME_KINDS:
        if node.tag.constructed:
            raise _structure_error(f"{what}: string GeneralName must be primitive", node)
        content = node.content_bytes
        if content and max(content) > 0x7F:
            raise _structure_error(f"{what}: IA5String byte above 0x7f", node)
        return GeneralName(_GENERAL_NAME_KINDS[number], content.decode("ascii"), number)
    if number == 7:
        if node.tag.constructed:
            raise _structure_error(f"{what}: iPAddress must be primitive", node)
        return GeneralName("ip", node.content_bytes, number)
    if number == 4:
        return GeneralName("dn", asn1.encode(node), number)
    raw = node.content_bytes if not node.tag.constructed else asn1.encode(node)
    return GeneralName("other", raw, number)


def _map_alt_names(ext_value: bytes, what: str) -> Tuple[GeneralName, ...]:
    names = asn1.decode(ext_value)
    return tuple(_map_general_name(n, what) for n in _expect_sequence(names, what))


def _decode_extension_value(oid: str, value: bytes) -> Optional[object]:
    if oid == OID_EXT_SAN:
        return _map_alt_names(value, "subjectAltName")
    if oid == OID_EXT_IAN:
        return _map_alt_names(value, "issuerAltName")
    if oid == OID_EXT_BASIC_CONSTRAINTS:
        parts = _expect_sequence(asn1.decode(value), "basicConstraints")
        ca = False
        path_len = None
        idx = 0
        if idx < len(parts) and parts[idx].tag == asn1.TAG_BOOLEAN:
            ca = parts[idx].content_bytes != b"\x00"
            idx += 1
        if idx < len(parts) and parts[idx].tag == asn1.TAG_INTEGER:
            path_len = asn1.decode_integer_content(parts[idx].content_bytes)
            idx += 1
        if idx != len(parts):
            raise _structure_error("basicConstraints: unexpected trailing element")
        return {"ca": ca, "path_len": path_len}
    if oid == OID_EXT_KEY_USAGE:
        bits = asn1.decode(value)
        return _expect_primitive(bits, asn1.BIT_STRING, "keyUsage")
    return None


def _map_extensions(node: Asn1Value) -> Tuple[Extension, ...]:
    exts = []
    for raw_ext in _expect_sequence(node, "extensions"):
        parts = _expect_sequence(raw_ext, "extension")
        if not 2 <= len(parts) <= 3:
            raise _structure_error("extension: expected oid, optional critical, value", raw_ext)
        oid = _map_oid(parts[0], "extension id")
        critical = False
        value_node = parts[-1]
        if len(parts) == 3:
            if parts[1].tag != asn1.TAG_BOOLEAN:
                raise _structure_error("extension: critical must be BOOLEAN", parts[1])
            critical = parts[1].content_bytes != b"\x00"
        value = _expect_primitive(value_node, asn1.OCTET_STRING, "extension value")
        exts.append(Extension(oid, critical, value, _decode_extension_value(oid, value)))
    return tuple(exts)


def _map_certificate(root: Asn1Value, der: bytes, profile: ValidationProfile) -> Certificate:
    top = _expect_sequence(root, "certificate")
    if len(top) != 3:
        raise _structure_error("certificate: expected tbs, algorithm, signature", root)
    tbs_node, outer_alg_node, sig_node = top
    tbs = _expect_sequence(tbs_node, "tbsCertificate")
    _map_bit_string(sig_node, "signatureValue")
    outer_alg = _map_algorithm(outer_alg_node, "signatureAlgorithm", der)

    idx = 0
    version = 0
    if idx < len(tbs) and tbs[idx].tag == _TAG_VERSION:
        inner = tbs[idx].children
        if len(inner) != 1:
            raise _structure_error("version: expected a single INTEGER", tbs[idx])
        version = asn1.decode_integer_content(
            _expect_primitive(inner[0], asn1.INTEGER, "version")
        )
        idx += 1

    def take(what: str) -> Asn1Value:
        nonlocal idx
        if idx >= len(tbs):
            raise _structure_error(f"tbsCertificate: missing {what}", tbs_node)
        node = tbs[idx]
        idx += 1
        return node

    serial = asn1.decode_integer_content(
        _expect_primitive(take("serialNumber"), asn1.INTEGER, "serialNumber")
    )
    tbs_alg = _map_algorithm(take("signature"), "tbsCertificate.signature", der)
    issuer = _map_name(take("issuer"), "issuer")
    validity = _expect_sequence(take("validity"), "validity")
    if len(validity) != 2:
        raise _structure_error("validity: expected notBefore and notAfter")
    strict_time = profile.check_time_strict
    not_before = _map_time(validity[0], "notBefore", strict_time)
    not_after = _map_time(validity[1], "notAfter", strict_time)
    subject = _map_name(take("subject"), "subject")
    spki = _map_spki(take("subjectPublicKeyInfo"), der)

    extensions: Tuple[Extension, ...] = ()
    while idx < len(tbs):
        node = tbs[idx]
        if node.tag == _TAG_ISSUER_UID or node.tag == _TAG_SUBJECT_UID:
            idx += 1  # issuer/subjectUniqueID, contents not modeled
            continue
        if node.tag == _TAG_EXTENSIONS:
            inner = node.children
            if len(inner) != 1:
                raise _structure_error("extensions: expected a single SEQUENCE", node)
            extensions = _map_extensions(inner[0])
            idx += 1
            if idx != len(tbs):
                raise _structure_error("tbsCertificate: data after extensions", tbs[idx])
            break
        raise _structure_error(f"tbsCertificate: unexpected element {node.tag!r}", node)

    return Certificate(
        version=version,
        serial=serial,
        tbs_sig_alg=tbs_alg,
        outer_sig_alg=outer_alg,
        issuer=issuer,
        subject=subject,
        not_before=not_before,
        not_after=not_after,
        spki=spki,
        extensions=extensions,
        raw_der=der,
        tbs_span=(tbs_node.offset, tbs_node.length),
    )


# -- URI grammar -------------------------------------------------------------

_SCHEME_RE = re.compile(r"\A[A-Za-z][A-Za-z0-9+.\-]*\Z")
_PCT_RE = re.compile(r"%(?![0-9A-Fa-f]{2})")
_USERINFO_RE = re.compile(r"\A(?:[A-Za-z0-9\-._~!$&'()*+,;=:]|%[0-9A-Fa-f]{2})*\Z")
_REG_NAME_RE = re.compile(r"\A(?:[A-Za-z0-9\-._~!$&'()*+,;=]|%[0-9A-Fa-f]{2})*\Z")
_PATH_RE = re.compile(r"\A(?:[A-Za-z0-9\-._~!$&'()*+,;=:@/]|%[0-9A-Fa-f]{2})*\Z")
_QUERY_RE = re.compile(r"\A(?:[A-Za-z0-9\-._~!$&'()*+,;=:@/?]|%[0-9A-Fa-f]{2})*\Z")
_IPVFUTURE_RE = re.compile(r"\Av[0-9A-Fa-f]+\.[A-Za-z0-9\-._~!$&'()*+,;=:]+\Z")


def _validate_ipv6_literal(host: str) -> Optional[str]:
    import ipaddress

    inner = host[1:-1]
    if inner.startswith("v"):
        if not _IPVFUTURE_RE.match(inner):
            return "invalid IPvFuture literal"
        return None
    try:
        ipaddress.IPv6Address(inner.split("%25")[0])
    except ValueError:
        return "invalid IPv6 literal"
    return None


def _validate_authority(authority: str) -> Optional[str]:
    host_port = authority
    if "@" in authority:
        userinfo, host_port = authority.rsplit("@", 1)
        if not _USERINFO_RE.match(userinfo):
            return "invalid userinfo"
    if host_port.startswith("["):
        end = host_port.find("]")
        if end < 0:
            return "unterminated IP literal"
        host, rest = host_port[: end + 1], host_port[end + 1 :]
        problem = _validate_ipv6_literal(host)
        if problem:
            return problem
        if rest and not (rest.startswith(":") and rest[1:].isdigit() or rest == ":"):
            return "invalid port"
        return None
    host, sep, port = host_port.rpartition(":")
    if not sep:
        host, port = host_port, ""
    if port and not port.isdigit():
        # RFC 3986 reg-names may contain ':'-free text only; a non-numeric
        # "port" means the colon belonged to nothing valid.
        return "invalid port"
    if not _REG_NAME_RE.match(host):
        return "invalid host character"
    return None


def validate_uri(uri: str) -> Optional[str]:
    """Check a string against the generic URI grammar; None when valid,
    otherwise a short reason."""
    if not uri or any(ord(c) <= 0x20 or ord(c) >= 0x7F for c in uri):
        return "forbidden character"
    scheme, sep, rest = uri.partition(":")
    if not sep or not _SCHEME_RE.match(scheme):
        return "missing or invalid scheme"
    if _PCT_RE.search(rest):
        return "invalid percent-encoding"
    fragment = ""
    if "#" in rest:
        rest, fragment = rest.split("#", 1)
    query = ""
    if "?" in rest:
        rest, query = rest.split("?", 1)
    if not _QUERY_RE.match(query) or not _QUERY_RE.match(fragment):
        return "invalid query or fragment character"
    if rest.startswith("//"):
        authority_and_path = rest[2:]
        slash = authority_and_path.find("/")
        if slash < 0:
            authority, path = authority_and_path, ""
        else:
            authority, path = authority_and_path[:slash], authority_and_path[slash:]
        problem = _validate_authority(authority)
        if problem:
            return problem
    else:
        path = rest
        if path.startswith("//"):
            return "path cannot begin with //"
    if not _PATH_RE.match(path):
        return "invalid path character"
    return None


def _uri_host(uri: str) -> str:
    rest = uri.partition(":")[2]
    if not rest.startswith("//"):
        return ""
    authority = rest[2:].split("/", 1)[0].split("?", 1)[0].split("#", 1)[0]
    if "@" in authority:
        authority = authority.rsplit("@", 1)[1]
    if authority.startswith("["):
        return authority
    host, sep, port = authority.rpartition(":")
    if sep and port.isdigit():
        return host
    return authority


# -- checks ------------------------------------------------------------------

def check_version(version: int, has_extensions: bool, profile: ValidationProfile) -> None:
    if profile.check_version:
        allowed = (1, 2) if profile.require_version_2_or_3 else (0, 1, 2)
        if version not in allowed:
            raise _err(
                ErrorCategory.X509_VALUE_ERROR,
                f"invalid certificate version {version}",
                "version",
            )
    if profile.check_extensions_require_v3 and has_extensions and version != 2:
        raise _err(
            ErrorCategory.X509_VALUE_ERROR,
            f"extensions present but version is {version}, not v3",
            "extensions-require-v3",
        )


def check_sig_alg_match(
    tbs_alg: AlgorithmIdentifier, outer_alg: AlgorithmIdentifier, profile: ValidationProfile
) -> None:
    if not profile.check_sig_alg_match:
        return
    if tbs_alg.raw == outer_alg.raw:
        return
    if (
        profile.sig_alg_null_absent_equivalent
        and tbs_alg.oid == outer_alg.oid
        and tbs_alg.oid in RSA_SIGNATURE_OIDS
        and {tbs_alg.parameters, outer_alg.parameters} <= {None, b"\x05\x00"}
    ):
        return
    raise _err(
        ErrorCategory.X509_VALUE_ERROR,
        f"signature algorithms do not match: {tbs_alg.oid} vs {outer_alg.oid}",
        "sig-alg-match",
    )


def check_sig_alg_supported(alg: AlgorithmIdentifier, profile: ValidationProfile) -> None:
    if profile.check_sig_alg_supported and alg.oid not in profile.supported_sig_algs:
        raise _err(
            ErrorCategory.X509_UNSUPPORTED,
            f"unsupported signature algorithm {alg.oid}",
            "sig-alg-supported",
        )


def check_extensions(cert: Certificate, profile: ValidationProfile) -> None:
    if profile.check_duplicate_extensions:
        seen = set()
        for ext in cert.extensions:
            if ext.oid in seen:
                raise _err(
                    ErrorCategory.X509_VALUE_ERROR,
                    f"duplicate extension {ext.oid}",
                    "duplicate-extension",
                )
            seen.add(ext.oid)
    if profile.reject_unknown_critical_extension:
        for ext in cert.extensions:
            if ext.critical and ext.oid not in KNOWN_EXTENSIONS:
                raise _err(
                    ErrorCategory.X509_UNSUPPORTED,
                    f"unknown critical extension {ext.oid}",
                    "unknown-critical-extension",
                )


def check_names_and_uris(cert: Certificate, profile: ValidationProfile) -> None:
    if not (profile.check_uri_syntax or profile.check_ip_length or profile.reject_local_san_uri):
        return
    for index, name in cert.alt_names():
        if name.kind == "uri":
            if profile.check_uri_syntax:
                problem = validate_uri(name.value)
                if problem:
                    raise _err(
                        ErrorCategory.X509_PARSE_ERROR,
                        f"cannot parse URI in alt name {index}: {problem}",
                        "san-uri",
                    )
            if profile.reject_local_san_uri and _uri_host(name.value).endswith(".local"):
                raise _err(
                    ErrorCategory.X509_PARSE_ERROR,
                    f"URI in alt name {index} names a .local host",
                    "san-uri-local",
                )
        elif name.kind == "ip" and profile.check_ip_length:
            if len(name.value) not in (4, 16):
                raise _err(
                    ErrorCategory.X509_PARSE_ERROR,
                    f"malformed IP address of {len(name.value)} bytes in alt name {index}",
                    "san-ip",
                )


def check_validity(not_before: datetime, not_after: datetime, profile: ValidationProfile) -> None:
    if profile.check_validity_order and not_before > not_after:
        raise _err(
            ErrorCategory.X509_VALUE_ERROR,
            f"validity interval reversed: {not_before.isoformat()} > {not_after.isoformat()}",
            "validity-order",
        )


def check_rsa_key(n: int, e: int, profile: ValidationProfile) -> None:
    if not profile.check_rsa_params:
        return
    if n <= 0:
        raise _err(ErrorCategory.CRYPTO_VALUE_ERROR, "RSA modulus is not positive", "rsa-modulus")
    if n % 2 == 0:
        raise _err(ErrorCategory.CRYPTO_VALUE_ERROR, "RSA modulus is even", "rsa-modulus")
    if e <= 0:
        raise _err(
            ErrorCategory.CRYPTO_VALUE_ERROR, "RSA public exponent is not positive", "rsa-exponent"
        )
    if e % 2 == 0:
        raise _err(ErrorCategory.CRYPTO_VALUE_ERROR, "RSA public exponent is even", "rsa-exponent")
    if e < profile.min_rsa_exponent:
        raise _err(
            ErrorCategory.CRYPTO_VALUE_ERROR,
            f"RSA public exponent {e} below minimum {profile.min_rsa_exponent}",
            "rsa-exponent",
        )


def check_ec_key(
    curve: Union[curves.CurveParams, str, None],
    point: Union[bytes, Tuple[int, int], None],
    profile: ValidationProfile,
    explicit: bool = False,
) -> None:
    """Validate curve support and point membership.

    ``curve`` may be resolved :class:`CurveParams` or an unresolved OID
    string; ``point`` may be raw uncompressed SEC1 bytes or an (x, y) pair.
    """
    if not profile.check_ec_params:
        return
    if explicit:
        raise _err(
            ErrorCategory.CRYPTO_UNSUPPORTED,
            "explicit EC domain parameters are not supported",
            "ec-curve",
        )
    if isinstance(curve, str) or curve is None:
        oid = curve or "<missing>"
        raise _err(ErrorCategory.CRYPTO_UNSUPPORTED, f"unsupported elliptic curve {oid}", "ec-curve")
    if curve.oid not in profile.supported_curves:
        raise _err(
            ErrorCategory.CRYPTO_UNSUPPORTED,
            f"unsupported elliptic curve {curve.name}",
            "ec-curve",
        )
    if isinstance(point, (bytes, bytearray)):
        decoded = curves.decode_uncompressed_point(bytes(point), curve)
        if decoded is None:
            raise _err(
                ErrorCategory.CRYPTO_VALUE_ERROR,
                "EC point is not in uncompressed form",
                "ec-point",
            )
        x, y = decoded
    elif isinstance(point, tuple):
        x, y = point
    else:
        raise _err(ErrorCategory.CRYPTO_VALUE_ERROR, "EC point is missing", "ec-point")
    if not (0 <= x < curve.p and 0 <= y < curve.p):
        raise _err(
            ErrorCategory.CRYPTO_VALUE_ERROR,
            "EC coordinate outside the field",
            "ec-point",
        )
    if not curve.contains(x, y):
        raise _err(ErrorCategory.CRYPTO_VALUE_ERROR, "EC point is not on the curve", "ec-point")


def _run_crypto_checks(cert: Certificate, profile: ValidationProfile) -> None:
    spki = cert.spki
    if spki.algorithm == "rsa":
        check_rsa_key(spki.modulus, spki.exponent, profile)
    elif spki.algorithm == "ec":
        if spki.explicit_curve:
            check_ec_key(None, spki.point_bytes, profile, explicit=True)
        else:
            resolved = curves.lookup(spki.curve_oid) or spki.curve_oid
            check_ec_key(resolved, spki.point_bytes, profile)


def parse_certificate(der: bytes, profile: ValidationProfile = LENIENT) -> Certificate:
    """Parse one DER certificate under a validation profile.

    Returns a fully populated :class:`Certificate` or raises
    :class:`CategorizedError` from the first failing stage.
    """
    try:
        root = asn1.decode(der)
        cert = _map_certificate(root, der, profile)
    except DecodeError as e:
        raise CategorizedError(
            ErrorCategory.ASN1_PARSE_ERROR, str(e), check_id=f"asn1.{e.kind}", offset=e.offset
        ) from None

    check_names_and_uris(cert, profile)

    check_version(cert.version, bool(cert.extensions), profile)
    check_sig_alg_match(cert.tbs_sig_alg, cert.outer_sig_alg, profile)
    check_sig_alg_supported(cert.tbs_sig_alg, profile)
    check_extensions(cert, profile)
    check_validity(cert.not_before, cert.not_after, profile)

    _run_crypto_checks(cert, profile)
    return cert
