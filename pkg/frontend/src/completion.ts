/** Off-chain work submission: hash each uploaded document locally, sign the
 * attestation message with the session key, and post the multipart form.
 * The service re-derives the CID; a mismatch would be a client bug. */

import { ApiClient, InboxItem, InstanceSnapshot } from "./api.js";
import { cidOf } from "./hash.js";
import { SessionKey, signAttestation } from "./signing.js";

export interface OutputUpload {
  name: string;
  bytes: Uint8Array;
  fileName: string;
  metadata: Record<string, unknown>;
}

export interface PreparedCompletion {
  form: FormData;
  cids: Record<string, string>;
}

export async function prepareCompletion(
  key: SessionKey,
  snapshot: InstanceSnapshot,
  item: InboxItem,
  uploads: OutputUpload[],
): Promise<PreparedCompletion> {
  const form = new FormData();
  form.set("token", item.callbackToken);
  form.set("signer", key.publicHex);
  const cids: Record<string, string> = {};
  for (const upload of uploads) {
    const cid = await cidOf(upload.bytes);
    cids[upload.name] = cid;
    const prior = snapshot.dataContext[upload.name];
    const version = prior ? prior.version + 1 : 0;
    const signature = await signAttestation(
      key, item.instanceId, upload.name, version, cid,
    );
    form.set(
      `doc.${upload.name}`,
      new Blob([upload.bytes as BlobPart], { type: "application/octet-stream" }),
      upload.fileName,
    );
    form.set(`meta.${upload.name}`, JSON.stringify(upload.metadata));
    form.set(`sig.${upload.name}`, signature);
  }
  return { form, cids };
}

export async function submitCompletion(
  api: ApiClient,
  key: SessionKey,
  snapshot: InstanceSnapshot,
  item: InboxItem,
  uploads: OutputUpload[],
): Promise<{ status: string; pending: string[]; cids: Record<string, string> }> {
  const prepared = await prepareCompletion(key, snapshot, item, uploads);
  const result = await api.completeTask(item.instanceId, item.taskId, prepared.form);
  return { ...result, cids: prepared.cids };
}
