/** Pure HTML builders for the three views; app.ts owns the DOM and events. */

import { Block, InboxItem, InstanceSnapshot, LedgerEvent } from "./api.js";

export function esc(text: unknown): string {
  return String(text)
    .replaceAll("&", "&amp;").replaceAll("<", "&lt;").replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

export function shortCid(cid: string): string {
  return cid.length > 20 ? `${cid.slice(0, 14)}…${cid.slice(-6)}` : cid;
}

export function renderInbox(items: InboxItem[], status: string,
                            documentUrl: (cid: string) => string): string {
  if (status === "Completed") {
    return `<div class="banner ok">Instance completed — nothing left to do.</div>`;
  }
  if (status === "Aborted" || status === "Faulted") {
    return `<div class="banner bad">Instance ${esc(status.toLowerCase())} — inbox closed.</div>`;
  }
  if (!items.length) {
    return `<div class="banner">No tasks waiting for you right now.</div>`;
  }
  return items.map((item) => {
    const inputs = item.inputs.length
      ? `<ul class="inputs">` + item.inputs.map((input) =>
          `<li>${esc(input.name)} — ` +
          `<a href="${esc(documentUrl(input.cid))}" download="${esc(input.name)}">` +
          `${esc(shortCid(input.cid))}</a></li>`).join("") + `</ul>`
      : `<p class="muted">No input documents.</p>`;
    return `<section class="task" data-task="${esc(item.taskId)}">
  <h3>${esc(item.taskName)} <span class="muted">(${esc(item.lane)})</span></h3>
  <p>${esc(item.purpose) || "<i>No description.</i>"}</p>
  ${inputs}
  <div class="outputs" data-task-outputs="${esc(item.taskId)}"></div>
</section>`;
  }).join("\n");
}

export function renderInstance(snapshot: InstanceSnapshot): string {
  const lanes = Object.entries(snapshot.machineStates)
    .map(([machine, state]) =>
      `<tr><td>${esc(machine)}</td><td><code>${esc(state)}</code></td></tr>`)
    .join("");
  const data = Object.entries(snapshot.dataContext)
    .map(([name, entry]) =>
      `<tr><td>${esc(name)}</td><td>${entry.version}</td>` +
      `<td><code>${esc(shortCid(entry.cid))}</code></td>` +
      `<td><code>${esc(JSON.stringify(entry.metadata))}</code></td></tr>`)
    .join("");
  const scopes = Object.entries(snapshot.scopeStates)
    .map(([scope, state]) =>
      `<tr><td>${esc(scope)}</td><td class="scope-${esc(state)}">${esc(state)}</td></tr>`)
    .join("");
  return `<div class="banner status-${esc(snapshot.status)}">Status: <b>${esc(snapshot.status)}</b></div>
<h3>Lane states</h3>
<table><tr><th>machine</th><th>state</th></tr>${lanes}</table>
<h3>Data context</h3>
<table><tr><th>data object</th><th>version</th><th>cid</th><th>metadata</th></tr>
${data || "<tr><td colspan=4 class=muted>empty</td></tr>"}</table>
<h3>Scopes</h3>
<table><tr><th>scope</th><th>state</th></tr>
${scopes || "<tr><td colspan=2 class=muted>none opened</td></tr>"}</table>`;
}

export function renderTimeline(events: LedgerEvent[]): string {
  if (!events.length) return `<p class="muted">No events yet.</p>`;
  return `<ol class="timeline">` + events.map((event) => {
    const extra = ("taskId" in event.payload && `task ${event.payload.taskId}`)
      || ("scopeId" in event.payload && `scope ${event.payload.scopeId}`)
      || ("dataObject" in event.payload &&
          `${event.payload.dataObject} v${event.payload.version}`)
      || "";
    return `<li><b>${esc(event.method)}</b> <span class="muted">${esc(extra)}</span></li>`;
  }).join("") + `</ol>`;
}

export function renderBlocks(blocks: Block[]): string {
  if (!blocks.length) return `<p class="muted">Empty chain.</p>`;
  return blocks.map((block) => {
    const txs = block.txs.map((tx) => {
      const payload = tx.payload as Record<string, unknown>;
      const verifiable = tx.method === "Attestation";
      const button = verifiable
        ? `<button class="verify" data-att='${esc(JSON.stringify(payload))}'>verify</button>
           <span class="verify-result"></span>`
        : "";
      return `<li><b>${esc(tx.method)}</b> <code>${esc(shortCid(tx.txId))}</code> ${button}</li>`;
    }).join("");
    return `<section class="block">
  <h4>#${block.height} <code>${esc(shortCid(block.hash))}</code></h4>
  <ul>${txs || "<li class=muted>no transactions</li>"}</ul>
</section>`;
  }).join("\n");
}
