import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { cidOf } from "../src/hash.js";
import { importSessionKey, signAttestation } from "../src/signing.js";
import { AttestationRecord, verifyBytes, verifyDocument } from "../src/verify.js";

const SEED = "56b164d7f3a0b1b78d66d59e72da9ebc420a66dff3d5b5bbc340340ef69475f3";
const body = new TextEncoder().encode("Insurance contract INS-7740");

async function makeAttestation(): Promise<AttestationRecord> {
  const key = await importSessionKey(SEED);
  const cid = await cidOf(body);
  return {
    instanceId: "i-0001",
    dataObject: "Insurance",
    version: 0,
    cid,
    author: key.publicHex,
    signature: await signAttestation(key, "i-0001", "Insurance", 0, cid),
  };
}

describe("document verification", () => {
  it("passes for untampered bytes", async () => {
    const att = await makeAttestation();
    expect((await verifyBytes(att, body)).ok).toBe(true);
  });

  it("fails after editing the downloaded bytes", async () => {
    const att = await makeAttestation();
    const edited = Uint8Array.from(body);
    edited[0]! ^= 1;
    const outcome = await verifyBytes(att, edited);
    expect(outcome.ok).toBe(false);
    expect(outcome.reason).toContain("hash mismatch");
  });

  it("fails for a forged author", async () => {
    const att = await makeAttestation();
    const other = await importSessionKey("11".repeat(32));
    const outcome = await verifyBytes({ ...att, author: other.publicHex }, body);
    expect(outcome.ok).toBe(false);
    expect(outcome.reason).toContain("signature");
  });

  it("downloads through the api client", async () => {
    const att = await makeAttestation();
    const api = new ApiClient("http://svc", async (url) => {
      expect(url).toBe(`http://svc/documents/${att.cid}`);
      return new Response(body, { status: 200 });
    });
    expect((await verifyDocument(api, att)).ok).toBe(true);
  });

  it("reports unreachable documents", async () => {
    const att = await makeAttestation();
    const api = new ApiClient("http://svc", async () =>
      new Response(JSON.stringify({ error: "UnknownCid" }), { status: 404 }));
    const outcome = await verifyDocument(api, att);
    expect(outcome.ok).toBe(false);
    expect(outcome.reason).toContain("not retrievable");
  });
});
