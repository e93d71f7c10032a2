"""HTTP front door: compile and deploy models, drive instances, expose the
human task queue, documents, and the ledger.

All durable state is the chain file plus the content store; a restart
re-executes the chain and must reproduce its hashes exactly before the
service comes up. Callback tokens and webhook registrations are service
conveniences and persist in sidecar JSON files next to the chain.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import errors as E
from .bpmn import parse_bpmn
from .bridge import Bridge, WebhookRegistration, output_bytes
from .compiler import compile_model
from .docstore import DocStore
from .engine import Effects, Monitor, OutputSubmission
from .keys import Signer, generate_signer, signer_from_private_hex
from .ledger import Ledger

_STATUS_BY_ERROR = (
    ((E.BadSignature, E.WrongActor), 401),
    ((E.UnknownProgram, E.UnknownInstance, E.UnknownScope, E.UnknownCid), 404),
    ((E.BadToken, E.DuplicateProgram, E.ScopeNotActive, E.NotRunning,
      E.BadNonce, E.DuplicatePattern), 409),
    ((E.FlowledgerError, ValueError, KeyError), 400),
)


@dataclass
class ServiceConfig:
    port: int = 8080
    data_dir: str = "./flowledger-data"
    block_batch_size: int = 1
    base_url: str = ""
    frontend_dir: str = ""

    @staticmethod
    def load(path: Path | None = None) -> "ServiceConfig":
        cfg = ServiceConfig()
        if path is not None:
            raw = json.loads(Path(path).read_text())
            cfg.port = raw.get("port", cfg.port)
            cfg.data_dir = raw.get("dataDir", cfg.data_dir)
            cfg.block_batch_size = raw.get("blockBatchSize", cfg.block_batch_size)
            cfg.base_url = raw.get("baseUrl", cfg.base_url)
            cfg.frontend_dir = raw.get("frontendDir", cfg.frontend_dir)
        cfg.port = int(os.environ.get("FLOWLEDGER_PORT", cfg.port))
        cfg.data_dir = os.environ.get("FLOWLEDGER_DATA_DIR", cfg.data_dir)
        cfg.block_batch_size = int(os.environ.get(
            "FLOWLEDGER_BLOCK_BATCH_SIZE", cfg.block_batch_size))
        cfg.base_url = os.environ.get("FLOWLEDGER_BASE_URL", cfg.base_url)
        cfg.frontend_dir = os.environ.get("FLOWLEDGER_FRONTEND_DIR", cfg.frontend_dir)
        return cfg


def _persistent_signer(path: Path) -> Signer:
    if path.exists():
        return signer_from_private_hex(path.read_text().strip())
    signer = generate_signer()
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(signer.private_hex + "\n")
    return signer


class ServiceState:
    def __init__(self, config: ServiceConfig):
        self.config = config
        data_dir = Path(config.data_dir)
        data_dir.mkdir(parents=True, exist_ok=True)
        self.data_dir = data_dir
        self.store = DocStore(data_dir / "docs")
        self.ledger = Ledger(data_dir / "chain.ndjson",
                             batch_size=config.block_batch_size)
        self.monitor_key = _persistent_signer(data_dir / "monitor.key")
        self.operator_key = _persistent_signer(data_dir / "operator.key")
        if self.ledger.all_txs():
            self.monitor = Monitor.restore(self.ledger, self.store, self.monitor_key)
        else:
            self.monitor = Monitor(self.ledger, self.store, self.monitor_key)

        base_url = config.base_url or f"http://localhost:{config.port}"
        self.bridge = Bridge(self.monitor, base_url=base_url)
        self.executor = ThreadPoolExecutor(max_workers=4)
        self._tokens_path = data_dir / "tokens.json"
        self._webhooks_path = data_dir / "webhooks.json"
        self._load_sidecars()

    def _load_sidecars(self) -> None:
        if self._tokens_path.exists():
            self.monitor.adopt_tokens(json.loads(self._tokens_path.read_text()))
        if self._webhooks_path.exists():
            for raw in json.loads(self._webhooks_path.read_text()):
                self.bridge.restore_registration(WebhookRegistration(
                    id=raw["id"], pattern=raw["pattern"], url=raw["url"],
                    shared_secret=raw["sharedSecret"],
                    max_retries=raw["maxRetries"],
                    backoff_base_ms=raw["backoffBaseMs"]))
        self.save_tokens()

    def save_tokens(self) -> None:
        self._tokens_path.write_text(
            json.dumps(self.monitor.pending_token_map(), indent=0, sort_keys=True))

    def save_webhooks(self) -> None:
        regs = [r.to_dict() for r in sorted(self.bridge.registrations.values(),
                                            key=lambda r: r.id)]
        self._webhooks_path.write_text(json.dumps(regs, indent=0))

    def after_mutation(self, effects: Effects | None) -> None:
        self.save_tokens()
        if effects is None:
            return
        deliverable = [r for r in effects.new_task_requests
                       if self.bridge.match(r.task_name)]
        for request in deliverable:
            self.executor.submit(self._deliver_and_save, request)

    def _deliver_and_save(self, request) -> None:
        try:
            self.bridge.deliver(request)
        finally:
            self.save_tokens()


def _error_response(exc: Exception) -> JSONResponse:
    for types, status in _STATUS_BY_ERROR:
        if isinstance(exc, types):
            return JSONResponse(status_code=status,
                                content={"error": type(exc).__name__,
                                         "detail": str(exc)})
    raise exc


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    state = ServiceState(config or ServiceConfig())
    app = FastAPI(title="flowledger", version="0.1.0")
    app.state.ctx = state
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])

    @app.exception_handler(Exception)
    async def handle_error(_req, exc):   # pragma: no cover - fastapi plumbing
        return _error_response(exc)

    @app.post("/models", status_code=201)
    async def post_model(request: Request):
        xml = await request.body()
        try:
            program = compile_model(parse_bpmn(xml))
            pid = state.monitor.deploy_program(program, state.operator_key)
        except Exception as exc:
            return _error_response(exc)
        state.after_mutation(None)
        return {"programId": pid}

    @app.get("/models/{pid}")
    def get_model(pid: str):
        try:
            return state.monitor.get_program(pid).to_dict() | {"programId": pid}
        except Exception as exc:
            return _error_response(exc)

    @app.post("/instances", status_code=201)
    def post_instance(body: dict):
        try:
            iid = state.monitor.create_instance(
                body["programId"], body["actorBindings"], state.operator_key)
            state.monitor.run_until_quiescent(iid)
        except Exception as exc:
            return _error_response(exc)
        instance = state.monitor.get_instance(iid)
        effects = Effects(new_task_requests=state.monitor.pending_tasks(iid))
        state.after_mutation(effects)
        return {"instanceId": iid, "status": instance.status}

    @app.get("/instances/{iid}")
    def get_instance(iid: str):
        try:
            return state.monitor.get_instance(iid).snapshot()
        except Exception as exc:
            return _error_response(exc)

    @app.get("/instances/{iid}/tasks")
    def get_tasks(iid: str):
        try:
            instance = state.monitor.get_instance(iid)
            tasks = state.monitor.pending_tasks(iid)
        except Exception as exc:
            return _error_response(exc)
        dataflow = instance.program.dataflow
        return {"tasks": [
            t.to_dict() | {"outputs": list(dataflow[t.task_id].outputs)}
            for t in tasks
        ]}

    @app.post("/instances/{iid}/tasks/{tid}/complete")
    async def complete(iid: str, tid: str, request: Request):
        content_type = request.headers.get("content-type", "")
        try:
            if content_type.startswith("application/json"):
                payload = await request.json()
                token = payload.get("token", "")
                signer = payload.get("signer", "")
                outputs = []
                for out in payload.get("outputs", []):
                    if "cid" in out and state.store.has(out.get("cid", "")):
                        cid = out["cid"]
                    else:
                        cid = state.store.put(output_bytes(out))
                    outputs.append(OutputSubmission(
                        name=out["name"], cid=cid,
                        metadata=out.get("metadata", {}),
                        signature=out.get("signature", "")))
            else:
                form = await request.form()
                token = str(form.get("token", ""))
                signer = str(form.get("signer", ""))
                outputs = []
                names = sorted({key.split(".", 1)[1] for key in form
                                if key.startswith("doc.")})
                for name in names:
                    upload = form[f"doc.{name}"]
                    data = await upload.read() if hasattr(upload, "read") \
                        else str(upload).encode("utf-8")
                    metadata = json.loads(str(form.get(f"meta.{name}", "{}")) or "{}")
                    signature = str(form.get(f"sig.{name}", ""))
                    outputs.append(OutputSubmission(
                        name=name, cid=state.store.put(data),
                        metadata=metadata, signature=signature))
            instance = state.monitor.get_instance(iid)
            if not signer:
                req = instance.requests.get(tid)
                signer = instance.actor_bindings.get(req.lane, "") if req else ""
            effects = state.monitor.complete_task(iid, tid, token, outputs, signer)
        except Exception as exc:
            return _error_response(exc)
        state.after_mutation(effects)
        return {
            "status": state.monitor.get_instance(iid).status,
            "pending": [r.task_id for r in state.monitor.pending_tasks(iid)],
            "records": effects.record_kinds(),
        }

    @app.post("/instances/{iid}/scopes/{sid}/abort")
    def abort(iid: str, sid: str, body: dict):
        try:
            effects = state.monitor.abort_scope(
                iid, sid, body.get("reason", ""), body.get("actor", ""),
                body.get("signature", ""))
        except Exception as exc:
            return _error_response(exc)
        state.after_mutation(effects)
        return {"status": state.monitor.get_instance(iid).status,
                "records": effects.record_kinds()}

    @app.get("/documents/{cid}")
    def get_document(cid: str):
        try:
            data = state.store.get(cid)
        except Exception as exc:
            return _error_response(exc)
        return Response(content=data, media_type="application/octet-stream")

    @app.get("/ledger/blocks")
    def get_blocks(request: Request):
        start = int(request.query_params.get("from", 0))
        blocks = [b.to_dict() for b in state.ledger.blocks if b.height >= start]
        return {"blocks": blocks, "height": state.ledger.height()}

    @app.get("/instances/{iid}/events")
    def get_events(iid: str):
        events = state.ledger.get_events(iid)
        return {"events": [{"method": m, "payload": p} for m, p in events]}

    @app.post("/webhooks", status_code=201)
    def post_webhook(body: dict):
        try:
            reg_id = state.bridge.register_webhook(
                pattern=body["pattern"], url=body["url"],
                shared_secret=body.get("secret", ""),
                max_retries=body.get("maxRetries", 5),
                backoff_base_ms=body.get("backoffBaseMs", 200))
        except Exception as exc:
            return _error_response(exc)
        state.save_webhooks()
        return {"id": reg_id}

    frontend = Path(state.config.frontend_dir) if state.config.frontend_dir else None
    if frontend and frontend.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/app", StaticFiles(directory=frontend, html=True), name="app")

    return app


def serve(config: ServiceConfig) -> None:   # pragma: no cover - long-running
    import uvicorn

    app = create_app(config)
    uvicorn.run(app, host="0.0.0.0", port=config.port, log_level="info")
