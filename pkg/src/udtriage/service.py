"""HTTP/JSON facade over project stores for the review console and scripts.

Versioned under /v1. Roles travel with the request (query/body field or
X-Role header); there is no authentication layer, deployment decides who
may reach the service. Every mutation hits the event log before the
response goes out, and dashboard numbers are recomputed from the store on
each request.
"""

from __future__ import annotations

import threading
from pathlib import Path

from fastapi import FastAPI, Header, HTTPException, Query
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .adjudication import (
    ADJUDICATOR,
    ANNOTATOR_1,
    ANNOTATOR_2,
    OBSERVER,
    ROLES,
    DuplicateSubmissionError,
    ItemNotFoundError,
    LabelError,
    ProjectStore,
    RoleError,
    StateTransitionError,
    Status,
)
from .agreement import FeatureKind, agreement_report, correction_report
from .taxonomy import TaxonomyTable, deprel_category_histogram


class AnnotationBody(BaseModel):
    label: str
    role: str | None = None


class ProjectRegistry:
    """Lazily opened stores under one root directory; one store per project."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self._stores: dict[str, ProjectStore] = {}
        self._lock = threading.Lock()

    def list_projects(self) -> list[str]:
        if not self.root.exists():
            return []
        return sorted(
            p.name for p in self.root.iterdir() if (p / ProjectStore.META_FILE).exists()
        )

    def get(self, project_id: str) -> ProjectStore:
        with self._lock:
            if project_id not in self._stores:
                path = self.root / project_id
                if not (path / ProjectStore.META_FILE).exists():
                    raise HTTPException(status_code=404, detail=f"unknown project {project_id!r}")
                self._stores[project_id] = ProjectStore.open(path)
            return self._stores[project_id]

    def close_all(self) -> None:
        with self._lock:
            for store in self._stores.values():
                store.close()
            self._stores.clear()


def _parse_role(value: str | None, header: str | None, default: str = OBSERVER) -> str:
    role = value or header or default
    if role not in ROLES:
        raise HTTPException(status_code=400, detail=f"unknown role {role!r}")
    return role


def _parse_status(value: str | None) -> Status | None:
    if value is None:
        return None
    try:
        return Status(value)
    except ValueError:
        raise HTTPException(status_code=400, detail=f"unknown status {value!r}") from None


def _parse_feature(value: str | None) -> FeatureKind | None:
    if value is None:
        return None
    try:
        return FeatureKind(value.upper())
    except ValueError:
        raise HTTPException(status_code=400, detail=f"unknown feature {value!r}") from None


def _with_context(store: ProjectStore, view: dict) -> dict:
    view["context"] = {
        "text": view["record"]["context_text"],
        **store.sentence_tokens(view["record"]["sentence_key"]),
    }
    return view


def create_app(root: str | Path, console_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="udtriage", version="1")
    registry = ProjectRegistry(Path(root))
    app.state.registry = registry
    taxonomy = TaxonomyTable.default()

    @app.get("/v1/projects")
    def projects() -> list[dict]:
        result = []
        for project_id in registry.list_projects():
            store = registry.get(project_id)
            result.append({"project_id": project_id, **store.burndown()})
        return result

    @app.get("/v1/projects/{project_id}/queue")
    def queue(
        project_id: str,
        role: str | None = Query(default=None),
        status: str | None = Query(default=None),
        feature: str | None = Query(default=None),
        page: int = Query(default=1, ge=1),
        page_size: int = Query(default=50, ge=1, le=500),
        x_role: str | None = Header(default=None),
    ) -> dict:
        store = registry.get(project_id)
        views, total = store.queue_page(
            role=_parse_role(role, x_role),
            status=_parse_status(status),
            feature=_parse_feature(feature),
            page=page,
            page_size=page_size,
        )
        return {
            "items": [_with_context(store, v) for v in views],
            "total": total,
            "page": page,
            "page_size": page_size,
        }

    @app.get("/v1/projects/{project_id}/items/{item_id}")
    def item(
        project_id: str,
        item_id: str,
        role: str | None = Query(default=None),
        x_role: str | None = Header(default=None),
    ) -> dict:
        store = registry.get(project_id)
        try:
            view = store.item_view(item_id, _parse_role(role, x_role))
        except ItemNotFoundError:
            raise HTTPException(status_code=404, detail=f"unknown item {item_id!r}") from None
        return _with_context(store, view)

    @app.post("/v1/projects/{project_id}/items/{item_id}/annotation")
    def annotate(
        project_id: str,
        item_id: str,
        body: AnnotationBody,
        x_role: str | None = Header(default=None),
        idempotency_key: str | None = Header(default=None),
    ) -> dict:
        store = registry.get(project_id)
        role = _parse_role(body.role, x_role)
        if role == OBSERVER:
            raise HTTPException(status_code=400, detail="mutations need an annotator or adjudicator role")
        try:
            if role == ADJUDICATOR:
                view = store.submit_adjudication(item_id, body.label, idempotency_key)
            else:
                view = store.submit_annotation(item_id, role, body.label, idempotency_key)
        except ItemNotFoundError:
            raise HTTPException(status_code=404, detail=f"unknown item {item_id!r}") from None
        except (DuplicateSubmissionError, StateTransitionError) as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from None
        except (LabelError, RoleError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        return _with_context(store, dict(view))

    @app.get("/v1/projects/{project_id}/dashboard")
    def dashboard(project_id: str) -> dict:
        store = registry.get(project_id)
        report = agreement_report(store.corpus_a, store.corpus_b)
        total_tokens = store.aligned_token_total()
        human = correction_report(store.correction_events("human"), total_tokens)
        adjudicated = correction_report(store.correction_events("adjudicated"), total_tokens)
        histogram = deprel_category_histogram(store.records_for(FeatureKind.DEPREL), taxonomy)
        return {
            "project_id": project_id,
            "agreement": {
                "rows": report.to_rows(),
                "excluded_punct": report.excluded_punct,
                "excluded_tokenization": report.excluded_tokenization,
            },
            "corrections": {
                "total_tokens": total_tokens,
                "human": human.to_rows(),
                "adjudicated": adjudicated.to_rows(),
            },
            "deprel_categories": {cat.value: count for cat, count in histogram.items()},
            "burndown": store.burndown(),
        }

    if console_dir is not None and Path(console_dir).exists():
        app.mount("/console", StaticFiles(directory=str(console_dir), html=True), name="console")

    return app
