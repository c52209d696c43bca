"""Local HTTP service: graph library CRUD, engine calls, and search jobs.

Request and response payloads reuse the document formats, so anything a
client downloads can be re-uploaded unchanged. Long searches run on the job
manager's worker pool; progress streams as server-sent events that replay
from any sequence number after a disconnect.
"""

from __future__ import annotations

import json
import os
from contextlib import asynccontextmanager
from typing import Any

from fastapi import FastAPI, HTTPException, Query, Request, Response
from fastapi.responses import StreamingResponse
from pydantic import BaseModel

from .discovery import validate_config
from .documents import (
    DocumentError,
    GraphDocument,
    decode_graph,
    decode_search_template,
    encode_graph,
    encode_search_template,
    ket_from_string,
    ket_to_string,
    library_delete,
    library_list,
    library_load,
    library_save,
    template_from_graph,
)
from .graphs import (
    GraphError,
    ZERO_TOL,
    compute_state,
    enumerate_perfect_matchings,
    find_cancellations,
    matching_amplitude,
    matching_ket,
    normalize_state,
    validate_graph,
)
from .jobs import DONE, FAILED, JobManager
from .layout import LayoutSettings, kamada_kawai_3d
from .states import parse_target


class GraphRef(BaseModel):
    """A stored graph by name, or an inline document (text or parsed object)."""

    name: str | None = None
    document: str | dict | None = None


class MatchingsRequest(GraphRef):
    ket: str | None = None


class LayoutRequest(GraphRef):
    seed: int = 0
    max_iters: int = 1000
    tol: float = 1e-4


def _re_im(z: complex) -> dict:
    return {"re": z.real, "im": z.imag}


def create_app(
    library_dir: str,
    *,
    workers: int | None = None,
    ttl_seconds: float = 86400.0,
    ui_dir: str | None = None,
) -> FastAPI:
    manager = JobManager(workers=workers, ttl_seconds=ttl_seconds)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        manager.close()

    app = FastAPI(title="graphoptics service", lifespan=lifespan)
    app.state.manager = manager
    app.state.library_dir = library_dir

    # -- helpers ---------------------------------------------------------

    def load_document(name: str) -> str:
        try:
            return library_load(library_dir, name)
        except FileNotFoundError:
            raise HTTPException(404, f"no graph named {name!r}")
        except ValueError as exc:
            raise HTTPException(400, str(exc))

    def resolve(ref: GraphRef) -> GraphDocument:
        if ref.name is not None:
            text = load_document(ref.name)
        elif ref.document is not None:
            text = ref.document if isinstance(ref.document, str) else json.dumps(ref.document)
        else:
            raise HTTPException(400, "request needs either 'name' or 'document'")
        try:
            return decode_graph(text)
        except DocumentError as exc:
            raise HTTPException(400, str(exc))

    # -- graph library ----------------------------------------------------

    @app.get("/api/graphs")
    def list_graphs() -> dict:
        return {"graphs": library_list(library_dir)}

    @app.get("/api/graphs/{name}")
    def get_graph(name: str) -> Response:
        return Response(load_document(name), media_type="application/json")

    @app.put("/api/graphs/{name}")
    async def put_graph(name: str, request: Request) -> dict:
        text = (await request.body()).decode("utf-8", errors="replace")
        try:
            gd = decode_graph(text)
        except DocumentError as exc:
            raise HTTPException(400, str(exc))
        report = validate_graph(gd.graph)
        if not report.ok:
            raise HTTPException(
                422,
                {
                    "message": "graph failed validation",
                    "violations": [
                        {"code": v.code, "message": v.message} for v in report.violations
                    ],
                },
            )
        canonical = encode_graph(gd.graph, gd.positions or None, gd.target)
        try:
            library_save(library_dir, name, canonical)
        except ValueError as exc:
            raise HTTPException(400, str(exc))
        return {"name": name, "edges": len(gd.graph.edges)}

    @app.delete("/api/graphs/{name}")
    def delete_graph(name: str) -> dict:
        try:
            library_delete(library_dir, name)
        except FileNotFoundError:
            raise HTTPException(404, f"no graph named {name!r}")
        except ValueError as exc:
            raise HTTPException(400, str(exc))
        return {"name": name, "deleted": True}

    # -- engine calls -------------------------------------------------------

    @app.post("/api/state")
    def state(ref: GraphRef) -> dict:
        gd = resolve(ref)
        try:
            raw = compute_state(gd.graph)
        except GraphError as exc:
            raise HTTPException(422, str(exc))
        norm = raw.norm()
        if norm <= ZERO_TOL:
            return {"vanishing": True, "norm": 0.0, "amplitudes": []}
        out = normalize_state(raw)
        dims = out.dims
        return {
            "vanishing": False,
            "norm": norm,
            "amplitudes": [
                {"ket": ket_to_string(k, dims), "amplitude": _re_im(a)}
                for k, a in out.sorted_items()
            ],
        }

    @app.post("/api/matchings")
    def matchings(req: MatchingsRequest) -> dict:
        gd = resolve(req)
        g = gd.graph
        dims = g.dims_of(g.site_ids)
        try:
            if req.ket is None:
                pms = enumerate_perfect_matchings(g)
                return {
                    "count": len(pms),
                    "matchings": [
                        {
                            "edges": list(pm.edges),
                            "ket": ket_to_string(matching_ket(g, pm), dims),
                            "amplitude": _re_im(matching_amplitude(g, pm)),
                        }
                        for pm in pms
                    ],
                }
            ket = ket_from_string(req.ket, "ket")
            report = find_cancellations(g, ket)
        except DocumentError as exc:
            raise HTTPException(400, str(exc))
        except (GraphError, ValueError) as exc:
            raise HTTPException(422, str(exc))
        return {
            "ket": ket_to_string(report.ket, dims),
            "cancelled": report.cancelled,
            "net_amplitude": _re_im(report.net_amplitude),
            "contributions": [
                {"edges": list(c.matching.edges), "amplitude": _re_im(c.amplitude)}
                for c in report.contributions
            ],
            "interference": [
                {
                    "first": pair.first,
                    "second": pair.second,
                    "cycles": [
                        {"vertices": list(cy.vertices), "edges": list(cy.edges)}
                        for cy in pair.cycles
                    ],
                }
                for pair in report.interference
            ],
        }

    @app.post("/api/layout")
    def layout(req: LayoutRequest) -> dict:
        gd = resolve(req)
        try:
            lay = kamada_kawai_3d(
                gd.graph, LayoutSettings(seed=req.seed, max_iters=req.max_iters, tol=req.tol)
            )
        except GraphError as exc:
            raise HTTPException(422, str(exc))
        return {
            "ids": [v.id for v in gd.graph.vertices],
            "positions": [list(p) for p in lay.positions],
            "stress": lay.stress,
            "trace": list(lay.trace),
        }

    # -- search jobs -------------------------------------------------------

    @app.post("/api/searches")
    async def submit_search(request: Request) -> dict:
        text = (await request.body()).decode("utf-8", errors="replace")
        try:
            config = decode_search_template(text)
            validate_config(config)
        except DocumentError as exc:
            raise HTTPException(400, str(exc))
        except (GraphError, ValueError) as exc:
            raise HTTPException(422, str(exc))
        return {"id": manager.submit(config)}

    def job_or_404(job_id: str):
        try:
            return manager.get(job_id)
        except KeyError:
            raise HTTPException(404, f"no search job {job_id!r}")

    @app.get("/api/searches/{job_id}")
    def search_status(job_id: str) -> dict:
        job = job_or_404(job_id)
        out: dict[str, Any] = {
            "id": job.id,
            "state": job.state,
            "progress": dict(job.progress),
        }
        if job.state == DONE and job.result is not None:
            r = job.result
            out["result"] = {
                "document": encode_graph(r.graph),
                "loss": r.loss,
                "feasible": r.feasible,
                "edges_removed": r.edges_removed,
                "loss_trace": list(r.loss_trace),
                "total_iterations": r.total_iterations,
                "seed": r.seed,
            }
        if job.state == FAILED:
            out["error"] = job.error
        return out

    @app.post("/api/searches/{job_id}/cancel")
    def cancel_search(job_id: str) -> dict:
        job_or_404(job_id)
        return {"id": job_id, "state": manager.cancel(job_id)}

    @app.get("/api/searches/{job_id}/events")
    def search_events(job_id: str, start: int = Query(0, ge=0)) -> StreamingResponse:
        job_or_404(job_id)

        def stream():
            for event in manager.events(job_id, start):
                yield f"id: {event['seq']}\ndata: {json.dumps(event)}\n\n"

        return StreamingResponse(stream(), media_type="text/event-stream")

    # -- template download ---------------------------------------------------

    @app.get("/api/template/{name}")
    def template(
        name: str,
        target: str = Query(..., description="ghz:n,d | bell:d | swap:n,d"),
        task: str = Query("generation"),
        uncolored: bool = Query(True),
        seed: int = Query(0),
    ) -> Response:
        doc = load_document(name)
        try:
            gd = decode_graph(doc)
            goal = parse_target(target)
            config = template_from_graph(
                gd.graph, goal, task=task, uncolored=uncolored, seed=seed
            )
            validate_config(config)
            text = encode_search_template(config)
        except (DocumentError, GraphError, ValueError) as exc:
            raise HTTPException(422, str(exc))
        return Response(text, media_type="application/json")

    if ui_dir is not None and os.path.isdir(ui_dir):
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def serve(
    library_dir: str,
    *,
    host: str = "127.0.0.1",
    port: int = 8077,
    workers: int | None = None,
    ttl_seconds: float = 86400.0,
    ui_dir: str | None = None,
) -> None:
    """Run the service until interrupted."""
    import uvicorn

    app = create_app(
        library_dir, workers=workers, ttl_seconds=ttl_seconds, ui_dir=ui_dir
    )
    uvicorn.run(app, host=host, port=port, log_level="info")
