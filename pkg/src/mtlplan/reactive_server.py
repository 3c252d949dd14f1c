"""Long-running reactive planning service over websocket/JSON.

One planner worker owns all mutable planning state; network handlers talk to
it exclusively through ordered queues (commands in, events out). Operator
commands are validated, acknowledged, and applied only at step boundaries, so
no step event ever reflects a partially applied geometry change.

The wire protocol is documented field by field in docs/protocol.md.
"""
from __future__ import annotations

import asyncio
import json
import queue
import threading
import time
from typing import Any, Optional

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from starlette.concurrency import run_in_threadpool

from .encoding import EncodedScenario
from .geometry import convex_hull_2d, predicate_from_vertices
from .scenario import PredicateEvent, Scenario
from .synthesis import RecedingHorizonRunner, step_event_dict

__all__ = ["ReactiveServer", "create_app", "serve", "PROTOCOL_VERSION"]

PROTOCOL_VERSION = 1

_CONTROL_KINDS = {"pause", "resume", "set_speed", "reset"}
_GEOMETRY_KINDS = {"add_obstacle", "update_obstacle", "remove_obstacle", "move_goal"}


class CommandError(ValueError):
    pass


class ReactiveServer:
    """Planner worker plus client bookkeeping; owns one RHC run at a time."""

    def __init__(
        self,
        scenario: Scenario,
        events: Optional[list[PredicateEvent]] = None,
        pace: Optional[float] = None,
        max_solves_per_step: Optional[int] = None,
        step_deadline: Optional[float] = None,
        start_paused: bool = False,
    ):
        self.scenario = scenario
        self._events = list(events) if events else []
        self.pace = pace  # seconds of wall time per step; None = free-run
        self._max_solves = max_solves_per_step
        self._step_deadline = step_deadline
        self.runner = RecedingHorizonRunner(
            scenario,
            step_deadline=step_deadline,
            max_solves_per_step=max_solves_per_step,
            events=list(self._events),
        )
        self._lock = threading.Lock()
        self._clients: dict[int, queue.Queue] = {}
        self._next_client = 0
        self._seq = 0
        self.commands: "queue.Queue[dict]" = queue.Queue()
        self.command_log: list[dict] = []
        self.paused = start_paused
        self.speed = 1.0
        self._shutdown = threading.Event()
        self._thread: Optional[threading.Thread] = None
        self.done = False
        self._next_auto_id = 0

        # placeholders: unsafe predicates whose geometry starts outside the box
        self._placeholders: dict[str, Any] = {}
        self._used_placeholders: set[str] = set()
        self._detect_placeholders()

    # -- placeholder bookkeeping ------------------------------------------------

    def _detect_placeholders(self) -> None:
        from .plotting import polygon_from_halfspaces

        enc = self.runner.enc
        box = self.scenario.workspace
        unsafe_names = {o.name for o in enc.occurrences if o.polarity == "unsafe"}
        for name in unsafe_names:
            pred = enc.predicates[name]
            keep = [i for i in range(pred.faces) if np.any(pred.A[i, :2] != 0.0)]
            poly = polygon_from_halfspaces(pred.A[keep][:, :2], pred.b[keep])
            if len(poly) and not any(
                box.lo[0] <= p[0] <= box.hi[0] and box.lo[1] <= p[1] <= box.hi[1]
                for p in poly
            ):
                self._placeholders[name] = (pred.A.copy(), pred.b.copy())

    # -- client/event plumbing ----------------------------------------------------

    def register_client(self) -> tuple[int, queue.Queue]:
        with self._lock:
            cid = self._next_client
            self._next_client += 1
            q: queue.Queue = queue.Queue()
            self._clients[cid] = q
        # broadcast a snapshot so every client observes the same join state
        self.broadcast("snapshot", self.snapshot_payload())
        return cid, q

    def unregister_client(self, cid: int) -> None:
        with self._lock:
            q = self._clients.pop(cid, None)
        if q is not None:
            q.put(None)

    def broadcast(self, kind: str, payload: dict) -> dict:
        with self._lock:
            self._seq += 1
            msg = {
                "v": PROTOCOL_VERSION,
                "seq": self._seq,
                "step": self.runner.i,
                "kind": kind,
                "payload": payload,
            }
            for q in self._clients.values():
                q.put(msg)
        return msg

    def snapshot_payload(self) -> dict:
        enc: EncodedScenario = self.runner.enc
        return {
            "scenario": enc.snapshot_dict(),
            "executed": [s.tolist() for s in self.runner.executed_states],
            "plan": (
                self.runner.combined_states().tolist()
                if self.runner._plan_states is not None
                else None
            ),
            "formula": self.scenario.formula_text,
            "step": self.runner.i,
            "paused": self.paused,
            "speed": self.speed,
            "done": self.done,
            "placeholders": {
                "budget": len(self._placeholders),
                "used": sorted(self._used_placeholders),
            },
        }

    # -- command handling (worker thread only) ---------------------------------

    def submit_command(self, raw: dict) -> None:
        self.commands.put(raw)

    def _validated_geometry(self, raw: dict, face_count: int) -> tuple[np.ndarray, np.ndarray]:
        if "vertices" not in raw:
            raise CommandError("geometry command needs 'vertices'")
        vertices = raw["vertices"]
        try:
            hull = convex_hull_2d(vertices)
        except ValueError as e:
            raise CommandError(str(e)) from e
        box = self.scenario.workspace
        for p in hull:
            if not (box.lo[0] <= p[0] <= box.hi[0] and box.lo[1] <= p[1] <= box.hi[1]):
                raise CommandError("geometry extends outside the workspace")
        pred = predicate_from_vertices(
            "cmd", hull, dims=(0, 1), state_dim=self.scenario.dynamics.n
        )
        A, b = pred.A, pred.b
        if A.shape[0] > face_count:
            raise CommandError(
                f"geometry has {A.shape[0]} faces, placeholder allows {face_count}"
            )
        while A.shape[0] < face_count:
            # pad with a duplicate face: legal, keeps the face count fixed
            A = np.vstack([A, A[-1]])
            b = np.append(b, b[-1])
        return A, b

    def _occ_polarity(self, name: str) -> Optional[str]:
        for occ in self.runner.enc.occurrences:
            if occ.name == name:
                return occ.polarity
        return None

    def _handle_geometry(self, raw: dict) -> dict:
        kind = raw["kind"]
        enc = self.runner.enc
        if kind == "add_obstacle":
            free = sorted(set(self._placeholders) - self._used_placeholders)
            if not free:
                raise CommandError("placeholder budget exceeded")
            name = free[0]
            A, b = self._validated_geometry(raw, enc.predicates[name].faces)
            self._used_placeholders.add(name)
        elif kind == "update_obstacle":
            name = raw.get("name")
            if name is None or self._occ_polarity(name) != "unsafe":
                raise CommandError(f"unknown obstacle {name!r}")
            A, b = self._validated_geometry(raw, enc.predicates[name].faces)
            if name in self._placeholders:
                self._used_placeholders.add(name)
        elif kind == "remove_obstacle":
            name = raw.get("name")
            if name not in self._used_placeholders:
                raise CommandError(f"{name!r} is not a removable obstacle")
            A, b = self._placeholders[name]
            self._used_placeholders.discard(name)
        elif kind == "move_goal":
            name = raw.get("name")
            if name is None:
                safe_names = sorted(
                    {o.name for o in enc.occurrences if o.polarity == "safe"}
                )
                if len(safe_names) != 1:
                    raise CommandError("move_goal needs an explicit name")
                name = safe_names[0]
            if self._occ_polarity(name) != "safe":
                raise CommandError(f"{name!r} is not a goal predicate")
            A, b = self._validated_geometry(raw, enc.predicates[name].faces)
        else:  # pragma: no cover - guarded by caller
            raise CommandError(f"unknown geometry command {kind!r}")
        apply_step = self.runner.i
        self.runner.queue_update(PredicateEvent(name=name, A=A, b=b, step=None, t=None))
        entry = {"step": apply_step, "name": name, "A": A.tolist(), "b": b.tolist()}
        self.command_log.append(entry)
        return {"name": name, "apply_at_step": apply_step}

    def _drain_commands(self) -> None:
        while True:
            try:
                raw = self.commands.get_nowait()
            except queue.Empty:
                return
            cmd_id = raw.get("id")
            if cmd_id is None:
                self._next_auto_id += 1
                cmd_id = f"auto{self._next_auto_id}"
            kind = raw.get("kind")
            try:
                if kind in _CONTROL_KINDS:
                    detail = self._handle_control(raw)
                elif kind in _GEOMETRY_KINDS:
                    detail = self._handle_geometry(raw)
                else:
                    raise CommandError(f"unknown command kind {kind!r}")
            except CommandError as e:
                self.broadcast(
                    "warning", {"command_id": cmd_id, "message": str(e), "rejected": True}
                )
                continue
            self.broadcast(
                "plan_update",
                {"command_id": cmd_id, "kind": kind, "phase": "queued", **detail},
            )

    def _handle_control(self, raw: dict) -> dict:
        kind = raw["kind"]
        if kind == "pause":
            self.paused = True
        elif kind == "resume":
            self.paused = False
        elif kind == "set_speed":
            speed = float(raw.get("speed", 1.0))
            if not (0.01 <= speed <= 100.0):
                raise CommandError("speed must be within [0.01, 100]")
            self.speed = speed
        elif kind == "reset":
            self.runner = RecedingHorizonRunner(
                self.scenario,
                step_deadline=self._step_deadline,
                max_solves_per_step=self._max_solves,
                events=list(self._events),
            )
            self.command_log.clear()
            self._used_placeholders.clear()
            self.done = False
            self.broadcast("snapshot", self.snapshot_payload())
        return {}

    # -- worker loop -----------------------------------------------------------

    def run_loop(self) -> None:
        while not self._shutdown.is_set():
            self._drain_commands()
            if self.paused:
                time.sleep(0.01)
                continue
            if self.runner.done:
                break
            start = time.monotonic()
            rec = self.runner.step()
            self.broadcast("step_event", step_event_dict(rec))
            if self.pace is not None:
                remaining = self.pace / self.speed - (time.monotonic() - start)
                if remaining > 0:
                    self._shutdown.wait(remaining)
        if self.runner.done and not self.done:
            self.done = True
            res = self.runner.result()
            self.broadcast(
                "done",
                {
                    "status": res.status,
                    "objective": res.objective,
                    "robustness": res.witness_resized.value,
                    "robustness_original": res.witness_original.value,
                    "trajectory": res.states.tolist(),
                    "inputs": res.inputs.tolist(),
                    "command_log": self.command_log,
                },
            )

    def start(self) -> None:
        if self._thread is None:
            self._thread = threading.Thread(target=self.run_loop, daemon=True)
            self._thread.start()

    def stop(self) -> None:
        self._shutdown.set()
        if self._thread is not None:
            self._thread.join(timeout=30)
        with self._lock:
            for q in self._clients.values():
                q.put(None)

    def wait_done(self, timeout: float = 300.0) -> bool:
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            if self.done:
                return True
            time.sleep(0.01)
        return False


def create_app(server: ReactiveServer) -> FastAPI:
    from contextlib import asynccontextmanager

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        server.start()
        yield
        server.stop()

    app = FastAPI(title="mtlplan reactive server", lifespan=lifespan)
    app.state.server = server

    @app.get("/health")
    async def health() -> dict:
        return {
            "status": "ok",
            "step": server.runner.i,
            "done": server.done,
            "paused": server.paused,
        }

    @app.get("/scenario")
    async def scenario() -> dict:
        return server.runner.enc.snapshot_dict()

    @app.get("/session_log")
    async def session_log() -> dict:
        return {"command_log": server.command_log}

    # serve the operator console when its build output is present
    from pathlib import Path

    frontend = Path(__file__).resolve().parents[2] / "frontend"
    if (frontend / "dist").is_dir():
        from fastapi.responses import FileResponse
        from fastapi.staticfiles import StaticFiles

        app.mount("/dist", StaticFiles(directory=frontend / "dist"), name="dist")

        @app.get("/")
        async def index() -> FileResponse:
            return FileResponse(frontend / "index.html")

    @app.websocket("/ws")
    async def ws_endpoint(websocket: WebSocket) -> None:
        await websocket.accept()
        cid, q = server.register_client()

        async def pump() -> None:
            while True:
                item = await run_in_threadpool(q.get)
                if item is None:
                    break
                await websocket.send_text(json.dumps(item))

        task = asyncio.create_task(pump())
        try:
            while True:
                data = await websocket.receive_text()
                try:
                    raw = json.loads(data)
                except json.JSONDecodeError:
                    server.broadcast(
                        "warning", {"message": "malformed JSON frame", "rejected": True}
                    )
                    continue
                server.submit_command(raw)
        except WebSocketDisconnect:
            pass
        finally:
            server.unregister_client(cid)
            task.cancel()

    return app


def serve(
    scenario: Scenario,
    host: str = "127.0.0.1",
    port: int = 8000,
    events: Optional[list[PredicateEvent]] = None,
) -> None:
    """Run the reactive loop behind a websocket endpoint until shutdown."""
    import uvicorn

    server = ReactiveServer(
        scenario,
        events=events,
        pace=scenario.dt,
        max_solves_per_step=scenario.rhc_max_solves_per_step,
        step_deadline=scenario.rhc_step_deadline,
    )
    app = create_app(server)
    uvicorn.run(app, host=host, port=port, log_level="info")
