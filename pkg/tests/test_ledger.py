from __future__ import annotations

import json

import pytest

from flowledger.canonical import canonical_bytes, cid_of
from flowledger.errors import BadNonce, BadSignature, Rejected
from flowledger.keys import signer_from_label
from flowledger.ledger import GENESIS_PREV, Ledger, Tx, make_tx

K = signer_from_label("ledger-test-key")
K2 = signer_from_label("ledger-test-key-2")


def _tx(nonce=1, payload=None, signer=K):
    return make_tx(signer, "Attestation", payload or {"instanceId": "i-1"}, nonce)


def test_first_tx_lands_at_height_one():
    ledger = Ledger()
    receipt = ledger.submit_tx(_tx(nonce=1))
    assert receipt.block_height == 1
    assert ledger.height() == 1
    assert ledger.blocks[0].prev_hash == GENESIS_PREV


def test_replayed_tx_rejected():
    ledger = Ledger()
    tx = _tx(nonce=1)
    ledger.submit_tx(tx)
    with pytest.raises(BadNonce):
        ledger.submit_tx(tx)


def test_flipped_payload_byte_rejected():
    ledger = Ledger()
    tx = _tx(nonce=1, payload={"instanceId": "i-1", "v": "aa"})
    tampered = Tx(caller=tx.caller, method=tx.method, nonce=tx.nonce,
                  payload={"instanceId": "i-1", "v": "ab"},
                  tx_id=tx.tx_id, signature=tx.signature)
    with pytest.raises(BadSignature):
        ledger.submit_tx(tampered)


def test_unknown_kind_rejected():
    ledger = Ledger()
    tx = make_tx(K, "Attestation", {}, 1)
    bogus_body = {"caller": K.public_hex, "method": "Bogus", "nonce": 1, "payload": {}}
    bogus = Tx(caller=K.public_hex, method="Bogus", nonce=1, payload={},
               tx_id=cid_of(canonical_bytes(bogus_body)),
               signature=K.sign(canonical_bytes(bogus_body)))
    with pytest.raises(Rejected):
        ledger.submit_tx(bogus)
    ledger.submit_tx(tx)   # the valid one still lands


def test_nonces_per_caller():
    ledger = Ledger()
    ledger.submit_tx(_tx(nonce=1, signer=K))
    ledger.submit_tx(_tx(nonce=1, signer=K2))
    ledger.submit_tx(_tx(nonce=2, signer=K))
    with pytest.raises(BadNonce):
        ledger.submit_tx(_tx(nonce=2, signer=K))
    assert ledger.verify_chain()


def test_verify_empty_chain():
    assert Ledger().verify_chain()


def test_verify_detects_mutation(tmp_path):
    path = tmp_path / "chain.ndjson"
    ledger = Ledger(path)
    for i in range(1, 4):
        ledger.submit_tx(_tx(nonce=i, payload={"instanceId": "i-1", "n": i}))
    assert ledger.verify_chain()

    lines = path.read_text().splitlines()
    block = json.loads(lines[2])
    block["txs"][0]["payload"]["n"] = 999
    lines[2] = json.dumps(block, sort_keys=True, separators=(",", ":"))
    path.write_text("\n".join(lines) + "\n")

    assert not Ledger(path).verify_chain()


def test_persistence_round_trip(tmp_path):
    path = tmp_path / "chain.ndjson"
    ledger = Ledger(path)
    for i in range(1, 6):
        ledger.submit_tx(_tx(nonce=i, payload={"instanceId": "i-1", "n": i}))
    reloaded = Ledger(path)
    assert reloaded.block_hashes() == ledger.block_hashes()
    assert reloaded.verify_chain()
    # appends continue from the loaded nonce state
    with pytest.raises(BadNonce):
        reloaded.submit_tx(_tx(nonce=5))
    reloaded.submit_tx(_tx(nonce=6))


def test_deterministic_replay():
    ledger = Ledger()
    for i in range(1, 8):
        ledger.submit_tx(_tx(nonce=i, payload={"instanceId": "i-1", "n": i}))
    again = Ledger.replay(ledger.all_txs())
    assert again.block_hashes() == ledger.block_hashes()


def test_append_only_under_growth():
    ledger = Ledger()
    ledger.submit_tx(_tx(nonce=1))
    frozen = [b.to_dict() for b in ledger.blocks]
    for i in range(2, 6):
        ledger.submit_tx(_tx(nonce=i))
        for j, snap in enumerate(frozen):
            assert ledger.blocks[j].to_dict() == snap
    assert ledger.verify_chain()


def test_batching_seals_every_n(tmp_path):
    ledger = Ledger(tmp_path / "c.ndjson", batch_size=3)
    for i in range(1, 7):
        ledger.submit_tx(_tx(nonce=i))
    assert ledger.height() == 2          # genesis + two sealed batches
    assert all(len(b.txs) == 3 for b in ledger.blocks[1:])
    ledger.submit_tx(_tx(nonce=7))
    ledger.flush()
    assert len(ledger.blocks[-1].txs) == 1


def test_get_events_filters_and_orders():
    ledger = Ledger()
    ledger.submit_tx(make_tx(K, "TaskRequested", {"instanceId": "i-1", "n": 1}, 1))
    ledger.submit_tx(make_tx(K, "TaskRequested", {"instanceId": "i-2", "n": 2}, 2))
    ledger.submit_tx(make_tx(K, "TaskCompleted", {"instanceId": "i-1", "n": 3}, 3))
    events = ledger.get_events("i-1")
    assert [m for m, _ in events] == ["TaskRequested", "TaskCompleted"]
    assert ledger.get_events("nope") == []
