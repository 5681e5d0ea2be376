"""JSON-over-HTTP scheduling service.

Plays the controller role: accepts schedule requests, records allocations,
and accepts completion notifications from (simulated) workers.  Request
intake is concurrent, but every state mutation funnels through one lock, so
the externally observable history is always some serial order of the
requests.  The serialized decision log kept by the service lets callers
replay and verify that order.
"""

from __future__ import annotations

import json
import random
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .cluster import (
    ActivityState,
    ClusterConfig,
    Registry,
    UnknownActivation,
    UnknownFunction,
)
from .dsl import AappScript
from .scheduler import NotSchedulable, UnknownTag, schedule


class SchedulerService:
    """State machine behind the HTTP surface; usable directly in-process."""

    def __init__(
        self,
        script: AappScript,
        registry: Registry,
        config: ClusterConfig,
        seed: int | None = None,
    ):
        self.script = script
        self.registry = registry
        self.config = config
        self.state = ActivityState(config, registry)
        self.rng = random.Random(seed)
        self._lock = threading.Lock()
        #: Serialized mutation history:
        #: ("schedule", function, activation, worker, block_index) and
        #: ("complete", activation) tuples, in commit order.
        self.decision_log: list[tuple] = []
        self.stray_completions = 0

    def handle_schedule(self, function: str, activation: str) -> tuple[int, dict]:
        with self._lock:
            if self.state.is_live(activation):
                return 400, {
                    "error": "duplicate-activation",
                    "detail": f"activation {activation!r} is already live",
                }
            try:
                decision = schedule(
                    function,
                    self.state.snapshot(),
                    self.script,
                    self.registry,
                    self.config,
                    self.rng,
                )
            except UnknownFunction as exc:
                return 404, {"error": "unknown-function", "detail": str(exc)}
            except UnknownTag as exc:
                return 404, {"error": "unknown-tag", "detail": str(exc)}
            except NotSchedulable as exc:
                return 409, {
                    "error": "not-schedulable",
                    "detail": str(exc),
                    "blocks": exc.reasons,
                }
            self.state.record_allocation(decision.worker, activation, function)
            self.decision_log.append(
                ("schedule", function, activation, decision.worker,
                 decision.block_index)
            )
            return 200, {
                "worker": decision.worker,
                "block_index": decision.block_index,
            }

    def handle_complete(self, activation: str) -> tuple[int, dict]:
        with self._lock:
            try:
                self.state.record_completion(activation)
            except UnknownActivation as exc:
                self.stray_completions += 1
                return 404, {"error": "unknown-activation", "detail": str(exc)}
            self.decision_log.append(("complete", activation))
            return 200, {"status": "completed"}

    def state_view(self) -> dict:
        with self._lock:
            snap = self.state.snapshot()
            stray = self.stray_completions
        workers = {}
        for wid in snap.worker_order:
            workers[wid] = {
                "instances": [
                    {"activation": act, "function": fn, "tag": tag}
                    for act, fn, tag in snap.instances[wid]
                ],
                "memory_used": snap.memory_used[wid],
                "max_memory": snap.max_memory[wid],
                "tags": sorted(snap.tags[wid]),
            }
        return {"workers": workers, "stray_completions": stray}


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    @property
    def service(self) -> SchedulerService:
        return self.server.service  # type: ignore[attr-defined]

    def log_message(self, fmt, *args):  # noqa: D102 - silence default stderr log
        pass

    def _reply(self, status: int, body: dict) -> None:
        payload = json.dumps(body).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def _read_json(self) -> dict | None:
        try:
            length = int(self.headers.get("Content-Length", "0"))
            body = json.loads(self.rfile.read(length).decode("utf-8"))
        except (ValueError, json.JSONDecodeError):
            return None
        return body if isinstance(body, dict) else None

    def do_GET(self):  # noqa: N802 - http.server naming
        if self.path == "/health":
            self._reply(200, {"status": "ok"})
        elif self.path == "/state":
            self._reply(200, self.service.state_view())
        else:
            self._reply(404, {"error": "not-found", "detail": self.path})

    def do_POST(self):  # noqa: N802 - http.server naming
        body = self._read_json()
        if self.path == "/schedule":
            if (
                body is None
                or not isinstance(body.get("function"), str)
                or not isinstance(body.get("activation"), str)
            ):
                self._reply(
                    400,
                    {
                        "error": "bad-request",
                        "detail": "expected JSON with string fields "
                        "'function' and 'activation'",
                    },
                )
                return
            status, reply = self.service.handle_schedule(
                body["function"], body["activation"]
            )
            self._reply(status, reply)
        elif self.path == "/complete":
            if body is None or not isinstance(body.get("activation"), str):
                self._reply(
                    400,
                    {
                        "error": "bad-request",
                        "detail": "expected JSON with string field 'activation'",
                    },
                )
                return
            status, reply = self.service.handle_complete(body["activation"])
            self._reply(status, reply)
        else:
            self._reply(404, {"error": "not-found", "detail": self.path})


def make_server(
    service: SchedulerService, host: str = "127.0.0.1", port: int = 0
) -> ThreadingHTTPServer:
    """Bind a threading HTTP server; port 0 picks an ephemeral port."""
    server = ThreadingHTTPServer((host, port), _Handler)
    server.service = service  # type: ignore[attr-defined]
    return server


def replay_decision_log(
    log: list[tuple],
    script: AappScript,
    registry: Registry,
    config: ClusterConfig,
) -> ActivityState:
    """Re-apply a serialized decision log, re-checking every placement.

    Raises AssertionError if any logged placement was invalid against the
    state at its serialization point.
    """
    from .scheduler import valid as _valid
    from .scheduler import _candidate_blocks

    state = ActivityState(config, registry)
    for entry in log:
        if entry[0] == "schedule":
            _kind, function, activation, worker, block_index = entry
            tag = registry[function].tag
            blocks = _candidate_blocks(script, tag, function)
            block = blocks[block_index - 1]
            snap = state.snapshot()
            assert _valid(function, worker, snap, registry, config, block), (
                f"logged placement of {activation!r} on {worker!r} violates "
                f"block {block_index} constraints"
            )
            state.record_allocation(worker, activation, function)
        else:
            _kind, activation = entry
            state.record_completion(activation)
    return state
