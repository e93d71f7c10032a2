/** Typed client for the service HTTP API; every view is rebuilt from these
 * calls alone, so a reload loses nothing but the pasted session key. */

export interface TaskInput {
  name: string;
  cid: string;
}

export interface InboxItem {
  instanceId: string;
  taskId: string;
  taskName: string;
  purpose: string;
  lane: string;
  state: string;
  inputs: TaskInput[];
  outputs: string[];
  callbackToken: string;
}

export interface DataEntry {
  cid: string;
  version: number;
  metadata: Record<string, unknown>;
  attestationTx: string;
}

export interface InstanceSnapshot {
  instanceId: string;
  programId: string;
  status: string;
  machineStates: Record<string, string>;
  dataContext: Record<string, DataEntry>;
  scopeStates: Record<string, string>;
  pendingTasks: string[];
  actorBindings: Record<string, string>;
  queue: { name: string; seq: number }[];
}

export interface LedgerEvent {
  method: string;
  payload: Record<string, unknown>;
}

export interface BlockTx {
  txId: string;
  method: string;
  caller: string;
  nonce: number;
  payload: Record<string, unknown>;
  signature: string;
}

export interface Block {
  height: number;
  prevHash: string;
  hash: string;
  txs: BlockTx[];
}

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`${status}: ${detail}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { error?: string; detail?: string };
        detail = [body.error, body.detail].filter(Boolean).join(": ") || detail;
      } catch {
        /* non-JSON error body; keep the status text */
      }
      throw new ApiError(response.status, detail);
    }
    return response;
  }

  private async json<T>(path: string): Promise<T> {
    return (await this.request(path)).json() as Promise<T>;
  }

  getInstance(instanceId: string): Promise<InstanceSnapshot> {
    return this.json(`/instances/${instanceId}`);
  }

  async getTasks(instanceId: string): Promise<InboxItem[]> {
    const data = await this.json<{ tasks: InboxItem[] }>(
      `/instances/${instanceId}/tasks`,
    );
    return data.tasks;
  }

  async getEvents(instanceId: string): Promise<LedgerEvent[]> {
    const data = await this.json<{ events: LedgerEvent[] }>(
      `/instances/${instanceId}/events`,
    );
    return data.events;
  }

  async getBlocks(from = 0): Promise<{ blocks: Block[]; height: number }> {
    return this.json(`/ledger/blocks?from=${from}`);
  }

  async getDocument(cid: string): Promise<Uint8Array> {
    const response = await this.request(`/documents/${cid}`);
    return new Uint8Array(await response.arrayBuffer());
  }

  documentUrl(cid: string): string {
    return `${this.baseUrl}/documents/${cid}`;
  }

  async completeTask(
    instanceId: string, taskId: string, form: FormData,
  ): Promise<{ status: string; pending: string[] }> {
    const response = await this.request(
      `/instances/${instanceId}/tasks/${taskId}/complete`,
      { method: "POST", body: form },
    );
    return response.json() as Promise<{ status: string; pending: string[] }>;
  }
}
