"""Read-only report browser over a run directory (`oscdom serve`)."""
import json
import logging

import uvicorn
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import PlainTextResponse

from oscdom.storage import StorageRegistry
from report_mixin import SUMMARY_NAME

logger = logging.getLogger(__name__)

MEDIA_TYPES = {".json": "application/json", ".csv": "text/csv"}


def create_app(store):
    """FastAPI app serving the suites, summaries and artifacts of `store`"""
    if isinstance(store, str):
        store = StorageRegistry().get_provider(store)

    app = FastAPI(title="oscdom reports")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["GET"],
        allow_headers=["*"],
    )

    def _require_suite(suite):
        if suite not in store.list_suites():
            raise HTTPException(status_code=404, detail=f"unknown suite '{suite}'")

    @app.get("/api/suites")
    def list_suites():
        out = []
        for suite in store.list_suites():
            entry = {"suite": suite, "artifacts": store.list_artifacts(suite)}
            if store.exists(suite, SUMMARY_NAME):
                entry["passed"] = json.loads(store.read_text(suite, SUMMARY_NAME)).get("passed")
            out.append(entry)
        return out

    @app.get("/api/suites/{suite}/summary")
    def get_summary(suite: str):
        _require_suite(suite)
        if not store.exists(suite, SUMMARY_NAME):
            raise HTTPException(status_code=404, detail=f"suite '{suite}' has no summary")
        return json.loads(store.read_text(suite, SUMMARY_NAME))

    @app.get("/api/suites/{suite}/artifacts/{name}")
    def get_artifact(suite: str, name: str):
        _require_suite(suite)
        if name not in store.list_artifacts(suite):
            raise HTTPException(status_code=404, detail=f"unknown artifact '{suite}/{name}'")
        suffix = name[name.rfind("."):] if "." in name else ""
        return PlainTextResponse(store.read_text(suite, name), media_type=MEDIA_TYPES.get(suffix, "text/plain"))

    return app


def run_server(root, host="127.0.0.1", port=12345):
    logger.info("[Server] Serving %s on http://%s:%d", root, host, port)
    uvicorn.run(create_app(root), host=host, port=port, log_level="warning")
