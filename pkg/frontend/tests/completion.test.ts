import { describe, expect, it } from "vitest";

import { ApiClient, InboxItem, InstanceSnapshot } from "../src/api.js";
import { prepareCompletion, submitCompletion } from "../src/completion.js";
import { cidOf } from "../src/hash.js";
import { attestationMessage, importSessionKey, verifySignature } from "../src/signing.js";

const SEED = "56b164d7f3a0b1b78d66d59e72da9ebc420a66dff3d5b5bbc340340ef69475f3";

const item: InboxItem = {
  instanceId: "i-0001",
  taskId: "RecAgr",
  taskName: "RecAgr",
  purpose: "Record the sales agreement.",
  lane: "Seller",
  state: "Pending",
  inputs: [],
  outputs: ["SalesAgr"],
  callbackToken: "tok-123",
};

function snapshot(dataContext: InstanceSnapshot["dataContext"]): InstanceSnapshot {
  return {
    instanceId: "i-0001",
    programId: "cid:" + "0".repeat(64),
    status: "Running",
    machineStates: {},
    dataContext,
    scopeStates: {},
    pendingTasks: ["RecAgr"],
    actorBindings: {},
    queue: [],
  };
}

const body = new TextEncoder().encode("the agreement text");

describe("completion submission", () => {
  it("hashes locally, signs version 0, and fills the multipart form", async () => {
    const key = await importSessionKey(SEED);
    const { form, cids } = await prepareCompletion(key, snapshot({}), item, [
      { name: "SalesAgr", bytes: body, fileName: "agr.txt", metadata: { accepted: true } },
    ]);
    expect(cids.SalesAgr).toBe(await cidOf(body));
    expect(form.get("token")).toBe("tok-123");
    expect(form.get("signer")).toBe(key.publicHex);
    expect(form.get("meta.SalesAgr")).toBe('{"accepted":true}');

    const doc = form.get("doc.SalesAgr") as Blob;
    expect(new Uint8Array(await doc.arrayBuffer())).toEqual(body);

    const message = attestationMessage("i-0001", "SalesAgr", 0, cids.SalesAgr!);
    const signature = form.get("sig.SalesAgr") as string;
    expect(await verifySignature(key.publicHex, message, signature)).toBe(true);
  });

  it("signs the next version when the data object already exists", async () => {
    const key = await importSessionKey(SEED);
    const existing = snapshot({
      SalesAgr: { cid: "cid:" + "1".repeat(64), version: 0, metadata: {}, attestationTx: "" },
    });
    const { form, cids } = await prepareCompletion(key, existing, item, [
      { name: "SalesAgr", bytes: body, fileName: "agr.txt", metadata: {} },
    ]);
    const message = attestationMessage("i-0001", "SalesAgr", 1, cids.SalesAgr!);
    expect(await verifySignature(
      key.publicHex, message, form.get("sig.SalesAgr") as string)).toBe(true);
  });

  it("posts to the completion endpoint and returns the new pending set", async () => {
    const key = await importSessionKey(SEED);
    const calls: { url: string; init?: RequestInit }[] = [];
    const api = new ApiClient("http://svc", async (url, init) => {
      calls.push({ url, init });
      return new Response(
        JSON.stringify({ status: "Running", pending: ["GetTrReq"] }),
        { status: 200, headers: { "Content-Type": "application/json" } });
    });
    const result = await submitCompletion(api, key, snapshot({}), item, [
      { name: "SalesAgr", bytes: body, fileName: "agr.txt", metadata: {} },
    ]);
    expect(result.pending).toEqual(["GetTrReq"]);
    expect(calls[0]!.url).toBe("http://svc/instances/i-0001/tasks/RecAgr/complete");
    expect(calls[0]!.init?.method).toBe("POST");
  });

  it("surfaces service rejections verbatim", async () => {
    const key = await importSessionKey(SEED);
    const api = new ApiClient("http://svc", async () =>
      new Response(JSON.stringify({ error: "OutputMismatch", detail: "missing Delivery" }),
                   { status: 400, headers: { "Content-Type": "application/json" } }));
    await expect(submitCompletion(api, key, snapshot({}), item, []))
      .rejects.toThrow("OutputMismatch: missing Delivery");
  });
});
