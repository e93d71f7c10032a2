/** Session wiring: paste a key, pick an instance, work the inbox, watch the
 * ledger. All state lives on the server; reload and paste the key again to
 * get exactly the same views. */

import { ApiClient, InboxItem, InstanceSnapshot } from "./api.js";
import { OutputUpload, submitCompletion } from "./completion.js";
import { renderBlocks, renderInbox, renderInstance, renderTimeline, esc } from "./render.js";
import { SessionKey, importSessionKey } from "./signing.js";
import { AttestationRecord, verifyDocument } from "./verify.js";

const POLL_INTERVAL_MS = 2000;

interface Session {
  api: ApiClient;
  key: SessionKey | null;
  instanceId: string;
  lastEventCount: number;
}

const session: Session = {
  api: new ApiClient(""),
  key: null,
  instanceId: "",
  lastEventCount: -1,
};

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found as T;
}

function banner(kind: "ok" | "bad" | "info", message: string): void {
  el("messages").innerHTML =
    `<div class="banner ${kind === "info" ? "" : kind}">${esc(message)}</div>`;
}

async function connect(): Promise<void> {
  const base = (el<HTMLInputElement>("base-url").value || "").replace(/\/$/, "");
  session.api = new ApiClient(base);
  const keyHex = el<HTMLInputElement>("session-key").value.trim();
  try {
    session.key = keyHex ? await importSessionKey(keyHex) : null;
  } catch (err) {
    banner("bad", `key rejected: ${String(err)}`);
    return;
  }
  session.instanceId = el<HTMLInputElement>("instance-id").value.trim();
  session.lastEventCount = -1;
  el("signer-label").textContent = session.key
    ? `signing as ${session.key.publicHex.slice(0, 16)}…`
    : "no key: read-only";
  banner("info", session.instanceId
    ? `watching ${session.instanceId}`
    : "connected; set an instance id to open its inbox");
  await refresh(true);
}

async function refresh(force = false): Promise<void> {
  try {
    await refreshLedger();
    if (!session.instanceId) return;
    const events = await session.api.getEvents(session.instanceId);
    if (!force && events.length === session.lastEventCount) return;
    session.lastEventCount = events.length;
    el("timeline").innerHTML = renderTimeline(events);
    const snapshot = await session.api.getInstance(session.instanceId);
    el("instance-view").innerHTML = renderInstance(snapshot);
    const tasks = await session.api.getTasks(session.instanceId);
    el("inbox").innerHTML = renderInbox(
      tasks, snapshot.status, (cid) => session.api.documentUrl(cid));
    for (const item of tasks) attachOutputForm(item, snapshot);
  } catch (err) {
    banner("bad", String(err));
  }
}

function attachOutputForm(item: InboxItem, snapshot: InstanceSnapshot): void {
  const host = document.querySelector(
    `[data-task-outputs="${item.taskId}"]`) as HTMLElement | null;
  if (!host) return;
  const rows = item.outputs.map((name) => `
    <label>${esc(name)} <input type="file" data-output="${esc(name)}"></label>
    <input type="text" data-meta="${esc(name)}" placeholder='metadata JSON, e.g. {"accepted": true}'>`)
    .join("");
  const hint = item.outputs.length
    ? ""
    : `<p class="muted">No output documents declared; submitting just marks the task done.</p>`;
  host.innerHTML = `${rows}${hint}
    <button data-submit="${esc(item.taskId)}">sign &amp; submit</button>`;
  const button = host.querySelector("button") as HTMLButtonElement;
  button.addEventListener("click", () => void submit(item, snapshot, host));
}

async function submit(item: InboxItem, snapshot: InstanceSnapshot,
                      host: HTMLElement): Promise<void> {
  if (!session.key) {
    banner("bad", "paste a signing key first");
    return;
  }
  const uploads: OutputUpload[] = [];
  const pickers = host.querySelectorAll<HTMLInputElement>("input[type=file]");
  for (const picker of pickers) {
    const name = picker.dataset.output ?? "";
    const file = picker.files?.[0];
    if (!file) {
      banner("bad", `no file selected for output ${name}`);
      return;
    }
    const metaField = host.querySelector<HTMLInputElement>(`[data-meta="${name}"]`);
    let metadata: Record<string, unknown> = {};
    if (metaField?.value.trim()) {
      try {
        metadata = JSON.parse(metaField.value);
      } catch {
        banner("bad", `metadata for ${name} is not valid JSON`);
        return;
      }
    }
    uploads.push({
      name,
      fileName: file.name,
      bytes: new Uint8Array(await file.arrayBuffer()),
      metadata,
    });
  }
  try {
    const result = await submitCompletion(
      session.api, session.key, snapshot, item, uploads);
    banner("ok", `${item.taskName} completed; pending now: ` +
      (result.pending.join(", ") || "nothing"));
    await refresh(true);
  } catch (err) {
    banner("bad", String(err));   // OutputMismatch / BadSignature / 409 verbatim
  }
}

async function refreshLedger(): Promise<void> {
  const data = await session.api.getBlocks(0);
  el("ledger-view").innerHTML = renderBlocks(data.blocks.slice().reverse());
  for (const button of document.querySelectorAll<HTMLButtonElement>("button.verify")) {
    button.addEventListener("click", async () => {
      const att = JSON.parse(button.dataset.att ?? "{}") as AttestationRecord;
      const slot = button.nextElementSibling as HTMLElement;
      slot.textContent = "verifying…";
      const outcome = await verifyDocument(session.api, att);
      slot.textContent = outcome.ok ? `✔ ${outcome.reason}` : `✘ ${outcome.reason}`;
      slot.className = "verify-result " + (outcome.ok ? "ok" : "bad");
    });
  }
}

export function boot(): void {
  el("connect").addEventListener("click", () => void connect());
  setInterval(() => void refresh(), POLL_INTERVAL_MS);
}

if (typeof document !== "undefined" && document.getElementById("connect")) {
  boot();
}
