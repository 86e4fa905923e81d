"""Digest, sign and verify request payloads (RSA, PKCS#1 v1.5).

Signatures are made over a precomputed digest, so the hash step and the
RSA step stay separate: ``get_hash`` -> ``create_signature`` ->
``verify_signature``. MD5 is kept for faithful reproduction runs;
SHA-256 is the default for everything else.
"""

from __future__ import annotations

import base64
import enum
import hashlib
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Union

from cryptography.exceptions import InvalidSignature, UnsupportedAlgorithm
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import padding, rsa, utils

SUPPORTED_BITS = (1024, 2048, 3072)
DEFAULT_BITS = 2048
PUBLIC_EXPONENT = 65537


class HashAlg(str, enum.Enum):
    MD5 = "md5"
    SHA256 = "sha256"

    @property
    def digest_size(self) -> int:
        return _DIGEST_SIZE[self]


_DIGEST_SIZE = {HashAlg.MD5: 16, HashAlg.SHA256: 32}
_PREHASHED = {HashAlg.MD5: hashes.MD5, HashAlg.SHA256: hashes.SHA256}

DEFAULT_HASH = HashAlg.SHA256


class AuthError(Exception):
    pass


@dataclass(frozen=True)
class KeyPair:
    private_part: rsa.RSAPrivateKey
    public_part: rsa.RSAPublicKey
    bits: int

    @classmethod
    def from_private(cls, private_part: rsa.RSAPrivateKey) -> "KeyPair":
        return cls(private_part, private_part.public_key(), private_part.key_size)


def generate_keypair(bits: int = DEFAULT_BITS) -> KeyPair:
    if bits not in SUPPORTED_BITS:
        raise AuthError(f"unsupported key size {bits}; choose one of {SUPPORTED_BITS}")
    key = rsa.generate_private_key(public_exponent=PUBLIC_EXPONENT, key_size=bits)
    return KeyPair.from_private(key)


def get_hash(message: bytes, hash_alg: Union[HashAlg, str] = DEFAULT_HASH) -> bytes:
    return hashlib.new(HashAlg(hash_alg).value, bytes(message)).digest()


def create_signature(
    digest: bytes, private_part: rsa.RSAPrivateKey, hash_alg: Union[HashAlg, str] = DEFAULT_HASH
) -> bytes:
    alg = HashAlg(hash_alg)
    if len(digest) != alg.digest_size:
        raise AuthError(
            f"digest is {len(digest)} bytes but {alg.value} digests are {alg.digest_size} bytes"
        )
    return private_part.sign(digest, padding.PKCS1v15(), utils.Prehashed(_PREHASHED[alg]()))


def verify_signature(
    digest: bytes,
    signature: bytes,
    public_part: rsa.RSAPublicKey,
    hash_alg: Union[HashAlg, str] = DEFAULT_HASH,
) -> bool:
    """True iff ``signature`` is a valid PKCS#1 v1.5 signature of ``digest``.

    Malformed input of any kind yields False rather than an exception.
    """
    try:
        alg = HashAlg(hash_alg)
        if len(digest) != alg.digest_size:
            return False
        public_part.verify(
            bytes(signature), bytes(digest), padding.PKCS1v15(), utils.Prehashed(_PREHASHED[alg]())
        )
    except (InvalidSignature, ValueError, TypeError):
        return False
    return True


def canonical_payload(fields: Mapping[str, object]) -> bytes:
    """Serialize a request tuple as sorted ``key=value`` lines, LF-terminated."""
    lines = []
    for key in sorted(fields):
        value = str(fields[key])
        if "\n" in key or "=" in key or "\n" in value:
            raise AuthError(f"field {key!r} cannot be encoded canonically")
        lines.append(f"{key}={value}\n")
    return "".join(lines).encode("utf-8")


def parse_payload(payload: bytes) -> dict[str, str]:
    fields = {}
    for line in payload.decode("utf-8").splitlines():
        key, sep, value = line.partition("=")
        if not sep:
            raise AuthError(f"malformed payload line {line!r}")
        fields[key] = value
    return fields


@dataclass(frozen=True)
class SignedEnvelope:
    payload: bytes
    digest: bytes
    signature: bytes
    signer_id: str
    hash_alg: HashAlg = DEFAULT_HASH

    @classmethod
    def seal(
        cls,
        fields: Mapping[str, object],
        signer_id: str,
        private_part: rsa.RSAPrivateKey,
        hash_alg: Union[HashAlg, str] = DEFAULT_HASH,
    ) -> "SignedEnvelope":
        alg = HashAlg(hash_alg)
        payload = canonical_payload(fields)
        digest = get_hash(payload, alg)
        return cls(payload, digest, create_signature(digest, private_part, alg), signer_id, alg)

    def fields(self) -> dict[str, str]:
        return parse_payload(self.payload)

    def verify(self, public_part: rsa.RSAPublicKey) -> bool:
        """Recompute the digest from the payload, then check the signature."""
        try:
            alg = HashAlg(self.hash_alg)
        except ValueError:
            return False
        if get_hash(self.payload, alg) != self.digest:
            return False
        return verify_signature(self.digest, self.signature, public_part, alg)


# key encodings: PEM (base64-wrapped PKCS#8 / SubjectPublicKeyInfo)


def public_pem(public_part: rsa.RSAPublicKey) -> bytes:
    return public_part.public_bytes(
        serialization.Encoding.PEM, serialization.PublicFormat.SubjectPublicKeyInfo
    )


def public_to_text(public_part: rsa.RSAPublicKey) -> str:
    """Single-line form for embedding a public key in a payload."""
    der = public_part.public_bytes(
        serialization.Encoding.DER, serialization.PublicFormat.SubjectPublicKeyInfo
    )
    return base64.b64encode(der).decode("ascii")


def public_from_text(text: str) -> rsa.RSAPublicKey:
    try:
        key = serialization.load_der_public_key(base64.b64decode(text, validate=True))
    except (ValueError, UnsupportedAlgorithm) as exc:
        raise AuthError(f"cannot decode public key: {exc}") from None
    if not isinstance(key, rsa.RSAPublicKey):
        raise AuthError("not an RSA public key")
    return key


def load_public_key(path: Union[str, Path]) -> rsa.RSAPublicKey:
    try:
        key = serialization.load_pem_public_key(Path(path).read_bytes())
    except (ValueError, UnsupportedAlgorithm) as exc:
        raise AuthError(f"{path}: {exc}") from None
    if not isinstance(key, rsa.RSAPublicKey):
        raise AuthError(f"{path}: not an RSA public key")
    return key


def load_private_key(path: Union[str, Path]) -> KeyPair:
    try:
        key = serialization.load_pem_private_key(Path(path).read_bytes(), password=None)
    except (ValueError, TypeError, UnsupportedAlgorithm) as exc:
        raise AuthError(f"{path}: {exc}") from None
    if not isinstance(key, rsa.RSAPrivateKey):
        raise AuthError(f"{path}: not an RSA private key")
    return KeyPair.from_private(key)


def _write_new(path: Path, data: bytes, mode: int, force: bool) -> None:
    flags = os.O_WRONLY | os.O_CREAT | (os.O_TRUNC if force else os.O_EXCL)
    fd = os.open(path, flags, mode)
    with os.fdopen(fd, "wb") as fh:
        fh.write(data)


def write_public_key(path: Union[str, Path], public_part: rsa.RSAPublicKey, force: bool = False) -> None:
    _write_new(Path(path), public_pem(public_part), 0o644, force)


def write_keypair(
    directory: Union[str, Path], name: str, keypair: KeyPair, force: bool = False
) -> tuple[Path, Path]:
    """Write ``<name>.priv`` and ``<name>.pub`` into ``directory``.

    Refuses to overwrite existing files unless ``force`` is set.
    """
    directory = Path(directory)
    priv_path = directory / f"{name}.priv"
    pub_path = directory / f"{name}.pub"
    if not force:
        for path in (priv_path, pub_path):
            if path.exists():
                raise FileExistsError(f"{path} exists (use --force to overwrite)")
    priv_pem = keypair.private_part.private_bytes(
        serialization.Encoding.PEM,
        serialization.PrivateFormat.PKCS8,
        serialization.NoEncryption(),
    )
    _write_new(priv_path, priv_pem, 0o600, force)
    write_public_key(pub_path, keypair.public_part, force)
    return priv_path, pub_path
