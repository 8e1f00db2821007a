"""HTTP JSON API over the review queue.

Routes:
  GET  /proposals?status=&direction=&rule=&page=&page_size=   paginated list
  GET  /proposals/{id}
  POST /proposals/{id}/decision   {"decision", "citation": {url, note}, "reviewer"}
  GET  /stats
  POST /export

404 for unknown ids, 409 for a second decision, 422 when an accept arrives
without a citation URL.  When a built review-UI bundle is available it is
mounted at /ui.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .errors import ConflictError, ValidationError
from .review import Citation, ReviewQueue


class CitationBody(BaseModel):
    url: str = ""
    note: str = ""


class DecisionBody(BaseModel):
    decision: str
    reviewer: str = ""
    citation: CitationBody | None = None


def create_app(queue: ReviewQueue, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="tablesync review service")

    @app.get("/proposals")
    def list_proposals(status: str | None = None, direction: str | None = None,
                       rule: str | None = None,
                       page: int = Query(1, ge=1),
                       page_size: int = Query(20, ge=1, le=200)):
        records = queue.list(status=status, direction=direction, rule=rule)
        start = (page - 1) * page_size
        return {
            "items": [r.to_json() for r in records[start:start + page_size]],
            "total": len(records),
            "page": page,
            "page_size": page_size,
        }

    @app.get("/proposals/{record_id}")
    def get_proposal(record_id: str):
        try:
            return queue.get(record_id).to_json()
        except KeyError:
            raise HTTPException(status_code=404, detail="unknown proposal id")

    @app.post("/proposals/{record_id}/decision")
    def decide(record_id: str, body: DecisionBody):
        citation = None
        if body.citation is not None and body.citation.url:
            citation = Citation(url=body.citation.url, note=body.citation.note)
        if body.decision in ("accept", "accepted") and citation is None:
            raise HTTPException(status_code=422,
                                detail="accepting requires a citation URL")
        try:
            record = queue.decide(record_id, body.decision, body.reviewer, citation)
        except KeyError:
            raise HTTPException(status_code=404, detail="unknown proposal id")
        except ConflictError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except ValidationError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return record.to_json()

    @app.get("/stats")
    def stats(direction: str | None = None):
        return queue.stats(direction=direction).to_json()

    @app.post("/export")
    def export():
        proposals = queue.export_accepted()
        return {"exported": [p.to_json() for p in proposals],
                "count": len(proposals)}

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(static_dir), html=True),
                  name="review-ui")

    return app
