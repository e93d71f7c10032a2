"""Ed25519 key handling: generation, hex serialization, signing, verification.

Keys travel as hex strings everywhere (32-byte seed for private keys,
32-byte raw public keys), which keeps them JSON- and CLI-friendly.
Ed25519 signatures are deterministic, so identical inputs signed with
identical keys always produce identical ledger bytes.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass
from pathlib import Path

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)


@dataclass(frozen=True)
class Signer:
    """A private key plus its derived public key, both hex-encoded."""

    private_hex: str
    public_hex: str

    def sign(self, message: bytes) -> str:
        key = Ed25519PrivateKey.from_private_bytes(bytes.fromhex(self.private_hex))
        return key.sign(message).hex()


def generate_signer(seed: bytes | None = None) -> Signer:
    raw = seed if seed is not None else os.urandom(32)
    if len(raw) != 32:
        raise ValueError("Ed25519 seed must be exactly 32 bytes")
    key = Ed25519PrivateKey.from_private_bytes(raw)
    pub = key.public_key().public_bytes_raw()
    return Signer(private_hex=raw.hex(), public_hex=pub.hex())


def signer_from_label(label: str) -> Signer:
    """Deterministic demo key derived from a text label (keygen --seed)."""
    return generate_signer(hashlib.sha256(label.encode("utf-8")).digest())


def signer_from_private_hex(private_hex: str) -> Signer:
    key = Ed25519PrivateKey.from_private_bytes(bytes.fromhex(private_hex))
    return Signer(private_hex=private_hex, public_hex=key.public_key().public_bytes_raw().hex())


def verify_signature(public_hex: str, message: bytes, signature_hex: str) -> bool:
    try:
        pub = Ed25519PublicKey.from_public_bytes(bytes.fromhex(public_hex))
        pub.verify(bytes.fromhex(signature_hex), message)
        return True
    except (InvalidSignature, ValueError):
        return False


def save_signer(signer: Signer, directory: Path, name: str) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    (directory / f"{name}.key").write_text(signer.private_hex + "\n")
    (directory / f"{name}.pub").write_text(signer.public_hex + "\n")


def load_signer(directory: Path, name: str) -> Signer:
    private_hex = (directory / f"{name}.key").read_text().strip()
    return signer_from_private_hex(private_hex)


def load_keydir(directory: Path) -> dict[str, Signer]:
    """All ``<name>.key`` files in a directory, keyed by name."""
    signers = {}
    for path in sorted(Path(directory).glob("*.key")):
        signers[path.stem] = signer_from_private_hex(path.read_text().strip())
    return signers
