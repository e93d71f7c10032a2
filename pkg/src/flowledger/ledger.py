"""Simulated append-only chain: signed transactions in hash-linked blocks.

There is no consensus and no clock; a single sequencer appends blocks, and
nothing in a transaction or block depends on wall time, so replaying the
same transactions always reproduces the same block hashes. The persistent
form is newline-delimited canonical JSON, one block per line.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import json

from .canonical import canonical_bytes, cid_of, sha256_hex
from .errors import BadNonce, BadSignature, Rejected
from .keys import Signer, verify_signature

GENESIS_PREV = "0" * 64

RECORD_KINDS = frozenset({
    "DeployProgram",
    "InstanceCreated",
    "ScopeOpened",
    "ScopeCommitted",
    "ScopeAborted",
    "TaskRequested",
    "TaskCompleted",
    "Attestation",
    "InstanceCompleted",
    "InstanceFaulted",
    "InstanceAborted",
})


@dataclass(frozen=True)
class Tx:
    caller: str                 # public key hex
    method: str                 # record kind
    nonce: int
    payload: dict
    tx_id: str                  # CID of canonical body
    signature: str              # over canonical body bytes

    def body(self) -> dict:
        return {"caller": self.caller, "method": self.method,
                "nonce": self.nonce, "payload": self.payload}

    def to_dict(self) -> dict:
        return {**self.body(), "signature": self.signature, "txId": self.tx_id}

    @staticmethod
    def from_dict(data: dict) -> "Tx":
        return Tx(caller=data["caller"], method=data["method"], nonce=data["nonce"],
                  payload=data["payload"], tx_id=data["txId"], signature=data["signature"])


def make_tx(signer: Signer, method: str, payload: dict, nonce: int) -> Tx:
    body = {"caller": signer.public_hex, "method": method,
            "nonce": nonce, "payload": payload}
    raw = canonical_bytes(body)
    return Tx(caller=signer.public_hex, method=method, nonce=nonce, payload=payload,
              tx_id=cid_of(raw), signature=signer.sign(raw))


@dataclass(frozen=True)
class Block:
    height: int
    prev_hash: str
    txs: tuple[Tx, ...]
    hash: str

    def to_dict(self) -> dict:
        return {"hash": self.hash, "height": self.height, "prevHash": self.prev_hash,
                "txs": [t.to_dict() for t in self.txs]}

    @staticmethod
    def from_dict(data: dict) -> "Block":
        return Block(height=data["height"], prev_hash=data["prevHash"],
                     txs=tuple(Tx.from_dict(t) for t in data["txs"]),
                     hash=data["hash"])


def block_hash(height: int, prev_hash: str, tx_ids: list[str]) -> str:
    return sha256_hex(canonical_bytes(
        {"height": height, "prevHash": prev_hash, "txIds": tx_ids}))


@dataclass(frozen=True)
class Receipt:
    tx_id: str
    block_height: int
    events: tuple[tuple[str, dict], ...]


class Ledger:
    """Single-sequencer chain; one tx per block unless batching is configured."""

    def __init__(self, path: Path | None = None, batch_size: int = 1):
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        self.path = Path(path) if path is not None else None
        self.batch_size = batch_size
        self.blocks: list[Block] = []
        self._pending: list[Tx] = []
        self._nonces: dict[str, int] = {}
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists() and self.path.stat().st_size:
            self._load()
        else:
            self._append_block(Block(0, GENESIS_PREV, (),
                                     block_hash(0, GENESIS_PREV, [])))

    # -- construction helpers ------------------------------------------------

    def _load(self) -> None:
        for line in self.path.read_text().splitlines():
            if not line.strip():
                continue
            block = Block.from_dict(json.loads(line))
            self.blocks.append(block)
            for tx in block.txs:
                self._nonces[tx.caller] = tx.nonce
        if not self.blocks:
            self._append_block(Block(0, GENESIS_PREV, (),
                                     block_hash(0, GENESIS_PREV, [])))

    def _append_block(self, block: Block) -> None:
        self.blocks.append(block)
        if self.path is not None:
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(canonical_bytes(block.to_dict()).decode("utf-8") + "\n")

    # -- submission ------------------------------------------------------------

    def next_nonce(self, caller_pub: str) -> int:
        return self._nonces.get(caller_pub, 0) + 1

    def submit(self, signer: Signer, method: str, payload: dict) -> Receipt:
        with self._lock:
            tx = make_tx(signer, method, payload, self.next_nonce(signer.public_hex))
            return self._accept(tx)

    def submit_tx(self, tx: Tx) -> Receipt:
        with self._lock:
            return self._accept(tx)

    def _accept(self, tx: Tx) -> Receipt:
        raw = canonical_bytes(tx.body())
        if tx.tx_id != cid_of(raw) or not verify_signature(tx.caller, raw, tx.signature):
            raise BadSignature(f"transaction {tx.tx_id} signature does not verify")
        if tx.nonce <= self._nonces.get(tx.caller, 0):
            raise BadNonce(
                f"nonce {tx.nonce} not above {self._nonces.get(tx.caller, 0)} "
                f"for caller {tx.caller[:12]}")
        if tx.method not in RECORD_KINDS:
            raise Rejected(f"unknown record kind {tx.method!r}")
        self._nonces[tx.caller] = tx.nonce
        self._pending.append(tx)
        height = len(self.blocks)
        if len(self._pending) >= self.batch_size:
            self._seal()
        return Receipt(tx_id=tx.tx_id, block_height=height,
                       events=((tx.method, tx.payload),))

    def _seal(self) -> None:
        height = len(self.blocks)
        prev = self.blocks[-1].hash
        txs = tuple(self._pending)
        self._pending = []
        self._append_block(Block(height, prev, txs,
                                 block_hash(height, prev, [t.tx_id for t in txs])))

    def flush(self) -> None:
        with self._lock:
            if self._pending:
                self._seal()

    # -- reading ----------------------------------------------------------------

    def txs(self) -> Iterator[Tx]:
        for block in self.blocks:
            yield from block.txs
        yield from self._pending

    def all_txs(self) -> list[Tx]:
        return list(self.txs())

    def height(self) -> int:
        return len(self.blocks) - 1

    def block_hashes(self) -> list[str]:
        return [b.hash for b in self.blocks]

    def get_events(self, instance_id: str) -> list[tuple[str, dict]]:
        """Every record whose payload references the instance, in chain order."""
        return [(tx.method, tx.payload) for tx in self.txs()
                if tx.payload.get("instanceId") == instance_id]

    def verify_chain(self) -> bool:
        prev = GENESIS_PREV
        seen_nonces: dict[str, int] = {}
        for i, block in enumerate(self.blocks):
            if block.height != i or block.prev_hash != prev:
                return False
            if block.hash != block_hash(i, prev, [t.tx_id for t in block.txs]):
                return False
            prev = block.hash
            for tx in block.txs:
                raw = canonical_bytes(tx.body())
                if tx.tx_id != cid_of(raw):
                    return False
                if not verify_signature(tx.caller, raw, tx.signature):
                    return False
                if tx.nonce <= seen_nonces.get(tx.caller, 0):
                    return False
                seen_nonces[tx.caller] = tx.nonce
        return True

    @staticmethod
    def replay(txs: list[Tx], batch_size: int = 1) -> "Ledger":
        """Rebuild a fresh chain from a transaction log."""
        fresh = Ledger(path=None, batch_size=batch_size)
        for tx in txs:
            fresh.submit_tx(tx)
        return fresh


def load_chain(path: Path, batch_size: int = 1) -> Ledger:
    return Ledger(path=path, batch_size=batch_size)
