"""Content-addressed document store with signed attestations.

Documents live off-ledger, addressed by ``cid:<sha256hex>``. What goes on
the ledger is the attestation: the author's signature binding
(instance, data object, version, cid). The store layout is deliberately
IPFS-inspired but not IPFS-compatible.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from pathlib import Path

from .canonical import canonical_bytes, cid_of, is_cid
from .errors import TooLarge, UnknownCid
from .keys import Signer, verify_signature
from .ledger import Ledger, Receipt

MAX_DOCUMENT_BYTES = 16 * 1024 * 1024


class DocStore:
    """Thread-safe store; directory-backed when given a root, else in-memory."""

    def __init__(self, root: Path | None = None):
        self.root = Path(root) if root is not None else None
        self._memory: dict[str, bytes] = {}
        self._lock = threading.Lock()
        if self.root is not None:
            self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, cid: str) -> Path:
        hexpart = cid.split(":", 1)[1]
        return self.root / hexpart[:2] / hexpart

    def put(self, data: bytes) -> str:
        if len(data) > MAX_DOCUMENT_BYTES:
            raise TooLarge(f"document of {len(data)} bytes exceeds the 16 MiB cap")
        cid = cid_of(data)
        with self._lock:
            if self.root is None:
                self._memory[cid] = data
            else:
                path = self._path(cid)
                if not path.exists():
                    path.parent.mkdir(parents=True, exist_ok=True)
                    tmp = path.with_suffix(".tmp")
                    tmp.write_bytes(data)
                    tmp.replace(path)
        return cid

    def get(self, cid: str) -> bytes:
        if self.root is None:
            if cid not in self._memory:
                raise UnknownCid(cid)
            return self._memory[cid]
        if not is_cid(cid):
            raise UnknownCid(cid)
        path = self._path(cid)
        if not path.exists():
            raise UnknownCid(cid)
        return path.read_bytes()

    def has(self, cid: str) -> bool:
        if self.root is None:
            return cid in self._memory
        return is_cid(cid) and self._path(cid).exists()


@dataclass(frozen=True)
class Attestation:
    instance_id: str
    data_object: str
    version: int
    cid: str
    author: str          # public key hex
    signature: str       # over attestation_message(...)

    def to_payload(self) -> dict:
        return {
            "author": self.author,
            "cid": self.cid,
            "dataObject": self.data_object,
            "instanceId": self.instance_id,
            "signature": self.signature,
            "version": self.version,
        }

    @staticmethod
    def from_payload(payload: dict) -> "Attestation":
        return Attestation(
            instance_id=payload["instanceId"],
            data_object=payload["dataObject"],
            version=payload["version"],
            cid=payload["cid"],
            author=payload["author"],
            signature=payload["signature"],
        )


def attestation_message(instance_id: str, data_object: str, version: int, cid: str) -> bytes:
    """The canonical bytes an author signs when certifying one document version."""
    return canonical_bytes({
        "cid": cid, "dataObject": data_object,
        "instanceId": instance_id, "version": version,
    })


def sign_attestation(author: Signer, instance_id: str, data_object: str,
                     version: int, cid: str) -> Attestation:
    message = attestation_message(instance_id, data_object, version, cid)
    return Attestation(instance_id=instance_id, data_object=data_object,
                       version=version, cid=cid, author=author.public_hex,
                       signature=author.sign(message))


def verify_attestation(att: Attestation, author_pub: str) -> bool:
    if att.author != author_pub:
        return False
    message = attestation_message(att.instance_id, att.data_object, att.version, att.cid)
    return verify_signature(author_pub, message, att.signature)


def verify_document(cid: str, data: bytes, att: Attestation, author_pub: str) -> bool:
    """Authenticity check: untampered content and verified authorship."""
    return cid_of(data) == cid and att.cid == cid and verify_attestation(att, author_pub)


def attestations(ledger: Ledger, instance_id: str, data_object: str) -> list[Attestation]:
    """Attestation history for (instance, data object), ascending by version."""
    found = [
        Attestation.from_payload(payload)
        for method, payload in ledger.get_events(instance_id)
        if method == "Attestation" and payload["dataObject"] == data_object
    ]
    return sorted(found, key=lambda a: a.version)


def attest(
    store: DocStore,
    ledger: Ledger,
    submitter: Signer,
    instance_id: str,
    data_object: str,
    cid: str,
    author: Signer,
) -> tuple[Attestation, Receipt]:
    """Certify a stored document on the ledger; versions count up from 0."""
    if not store.has(cid):
        raise UnknownCid(cid)
    history = attestations(ledger, instance_id, data_object)
    version = history[-1].version + 1 if history else 0
    att = sign_attestation(author, instance_id, data_object, version, cid)
    receipt = ledger.submit(submitter, "Attestation", att.to_payload())
    return att, receipt
