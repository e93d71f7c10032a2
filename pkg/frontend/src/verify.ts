/** Document verification as the ledger view runs it: re-download the bytes,
 * recompute the CID, and check the author's attestation signature. */

import { ApiClient } from "./api.js";
import { cidOf } from "./hash.js";
import { attestationMessage, verifySignature } from "./signing.js";

export interface AttestationRecord {
  instanceId: string;
  dataObject: string;
  version: number;
  cid: string;
  author: string;
  signature: string;
}

export interface VerifyOutcome {
  ok: boolean;
  reason: string;
}

export async function verifyBytes(
  att: AttestationRecord, data: Uint8Array,
): Promise<VerifyOutcome> {
  const actual = await cidOf(data);
  if (actual !== att.cid) {
    return { ok: false, reason: `content hash mismatch: ${actual}` };
  }
  const message = attestationMessage(
    att.instanceId, att.dataObject, att.version, att.cid,
  );
  const signed = await verifySignature(att.author, message, att.signature);
  if (!signed) {
    return { ok: false, reason: "attestation signature does not verify" };
  }
  return { ok: true, reason: "content and authorship verified" };
}

export async function verifyDocument(
  api: ApiClient, att: AttestationRecord,
): Promise<VerifyOutcome> {
  let data: Uint8Array;
  try {
    data = await api.getDocument(att.cid);
  } catch (err) {
    return { ok: false, reason: `document not retrievable: ${String(err)}` };
  }
  return verifyBytes(att, data);
}

export function isAttestation(payload: Record<string, unknown>): payload is
  AttestationRecord & Record<string, unknown> {
  return typeof payload.cid === "string"
    && typeof payload.dataObject === "string"
    && typeof payload.instanceId === "string"
    && typeof payload.author === "string"
    && typeof payload.signature === "string"
    && typeof payload.version === "number";
}
