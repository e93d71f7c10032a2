from __future__ import annotations

import random

import pytest
from hypothesis import given, strategies as st

from flowledger.docstore import (
    DocStore,
    attest,
    attestations,
    sign_attestation,
    verify_document,
)
from flowledger.errors import TooLarge, UnknownCid
from flowledger.keys import signer_from_label
from flowledger.ledger import Ledger

AUTHOR = signer_from_label("docstore-author")
OTHER = signer_from_label("docstore-other")


def test_empty_document_cid():
    # SHA-256("") computed with an independent oracle and frozen here
    store = DocStore()
    assert store.put(b"") == \
        "cid:e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"


def test_put_is_idempotent():
    store = DocStore()
    data = b"insurance contract"
    assert store.put(data) == store.put(data)


def test_flipped_bit_changes_cid():
    store = DocStore()
    a = store.put(b"insurance contract")
    b = store.put(b"insurance contracu")
    assert a != b


def test_too_large_rejected():
    store = DocStore()
    with pytest.raises(TooLarge):
        store.put(b"x" * (16 * 1024 * 1024 + 1))


def test_unknown_cid():
    store = DocStore()
    with pytest.raises(UnknownCid):
        store.get("cid:" + "0" * 64)


@given(st.binary(max_size=4096))
def test_round_trip(data):
    store = DocStore()
    assert store.get(store.put(data)) == data


def test_directory_backed_round_trip(tmp_path):
    store = DocStore(tmp_path / "docs")
    cid = store.put(b"hello")
    assert DocStore(tmp_path / "docs").get(cid) == b"hello"


def test_verify_document_happy_and_tampered():
    store = DocStore()
    data = b"Insurance contract INS-1"
    cid = store.put(data)
    att = sign_attestation(AUTHOR, "i-1", "Insurance", 0, cid)
    assert verify_document(cid, data, att, AUTHOR.public_hex)
    # single modified byte
    tampered = b"Insurance contract INS-2"
    assert not verify_document(cid, tampered, att, AUTHOR.public_hex)
    # wrong author key
    assert not verify_document(cid, data, att, OTHER.public_hex)


def test_tamper_detection_randomized():
    store = DocStore()
    rng = random.Random(77)
    data = bytes(rng.randrange(256) for _ in range(512))
    cid = store.put(data)
    att = sign_attestation(AUTHOR, "i-1", "Doc", 0, cid)
    for _ in range(100):
        pos = rng.randrange(len(data))
        flip = bytes([data[pos] ^ (1 << rng.randrange(8))])
        mutated = data[:pos] + flip + data[pos + 1:]
        assert not verify_document(cid, mutated, att, AUTHOR.public_hex)


def test_attest_versions():
    store = DocStore()
    ledger = Ledger()
    submitter = signer_from_label("docstore-monitor")
    cid0 = store.put(b"sales agreement v1")
    att0, _ = attest(store, ledger, submitter, "i-1", "SalesAgr", cid0, AUTHOR)
    assert att0.version == 0

    cid1 = store.put(b"sales agreement v2 (amended)")
    att1, _ = attest(store, ledger, submitter, "i-1", "SalesAgr", cid1, AUTHOR)
    assert att1.version == 1
    assert cid1 != cid0

    history = attestations(ledger, "i-1", "SalesAgr")
    assert [(a.version, a.cid) for a in history] == [(0, cid0), (1, cid1)]
    # both versions remain retrievable
    assert store.get(cid0) == b"sales agreement v1"
    assert store.get(cid1) == b"sales agreement v2 (amended)"
    # gapless sequence
    assert [a.version for a in history] == list(range(len(history)))


def test_attest_unknown_cid():
    store = DocStore()
    ledger = Ledger()
    with pytest.raises(UnknownCid):
        attest(store, ledger, AUTHOR, "i-1", "X", "cid:" + "1" * 64, AUTHOR)
