"""HTTP API of the online experiment, consumed by the participant UI.

The wire contract is deliberately blind: session payloads carry only
the merged display order (userref + display_rank); nothing identifies
which underlying system contributed an item.

  POST /api/sessions                 {"target": ..., "n"?: ...}
  POST /api/sessions/{id}/clicks     {"item": ...}
  POST /api/sessions/{id}/close
  GET  /api/experiment/summary
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException, Response
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from fedirec.federation import FederationError
from fedirec.interleaving import (
    ForeignItemError,
    InterleaveError,
    OnlineExperiment,
    SessionClosedError,
    UnknownSessionError,
)
from fedirec.users import InvalidUserRef, UserRef


class CreateSessionRequest(BaseModel):
    target: str
    n: int | None = None


class ClickRequest(BaseModel):
    item: str


def create_app(experiment: OnlineExperiment, static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="fedirec online experiment", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.post("/api/sessions", status_code=201)
    def create_session(req: CreateSessionRequest):
        try:
            target = UserRef.parse(req.target)
        except InvalidUserRef as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        try:
            session = experiment.create_session(
                target, n=req.n if req.n is not None else 10
            )
        except FederationError as exc:
            raise HTTPException(status_code=502, detail=str(exc)) from exc
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return {
            "session_id": session.session_id,
            "n": len(session.merged),
            "items": [
                {"userref": user.canonical, "display_rank": rank}
                for rank, user in enumerate(session.merged, start=1)
            ],
        }

    @app.post("/api/sessions/{session_id}/clicks", status_code=204)
    def record_click(session_id: str, req: ClickRequest):
        try:
            item = UserRef.parse(req.item)
        except InvalidUserRef as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        try:
            experiment.record_click(session_id, item)
        except UnknownSessionError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except SessionClosedError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except ForeignItemError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return Response(status_code=204)

    @app.post("/api/sessions/{session_id}/close")
    def close_session(session_id: str):
        try:
            outcome = experiment.close_session(session_id)
        except UnknownSessionError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except InterleaveError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        return {"outcome": outcome.value}

    @app.get("/api/experiment/summary")
    def summary():
        s = experiment.summary()
        return {
            "participants": s.participants,
            "a_superior": s.a_superior,
            "b_superior": s.b_superior,
            "draws": s.draws,
            "no_interaction": s.no_interaction,
            "total_clicks": s.total_clicks,
            "mean_follows": s.mean_follows,
        }

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
