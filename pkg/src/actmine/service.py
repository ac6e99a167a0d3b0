"""HTTP query service over a mined knowledge base.

One QueryService instance backs both the HTTP endpoints and the command
line: both render the same payload dicts, so their JSON output is
byte-identical.  Error responses always carry the shape
{"error": {"code": ..., "message": ...}}.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol
from urllib.parse import unquote

import httpx
from fastapi import FastAPI
from fastapi.concurrency import run_in_threadpool
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from starlette.exceptions import HTTPException as StarletteHTTPException

from .kb import KIND_AFFORDANCE, KIND_DETECT, KIND_PREDICT, KnowledgeBase
from .vsm import (DEFAULT_TOP_K, EmptyQueryError, UnknownTermsError, VsmError,
                  query, score_single)

DEFAULT_THRESHOLD = 0.1
QUERY_KINDS = {
    "detect": KIND_DETECT,
    "affordance": KIND_AFFORDANCE,
    "predict": KIND_PREDICT,
}


class QueryFault(Exception):
    """A client-visible failure with an HTTP status code."""

    def __init__(self, code: int, message: str) -> None:
        self.code = code
        self.message = message
        super().__init__(message)


def split_query_terms(raw: str) -> list[str]:
    """Split a path segment into terms: '+' separates, %20 embeds a space."""
    out = []
    for chunk in raw.split("+"):
        term = unquote(chunk).strip()
        if term:
            out.append(term)
    return out


def load_stoplist(path: str | Path) -> frozenset[str]:
    """One term per line, '#' comments, case-insensitive."""
    terms = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                terms.add(line.lower())
    return frozenset(terms)


def compute_mae(predicted: dict[str, float],
                reference: dict[str, float]) -> float:
    """Mean absolute error between two percentage distributions.

    Both must be non-negative and sum to 100 within 1e-6.  Labels missing
    from one side count as zero there.
    """
    for name, dist in (("predicted", predicted), ("reference", reference)):
        if not dist:
            raise ValueError(f"{name} distribution is empty")
        for label, value in dist.items():
            if not isinstance(value, (int, float)) or math.isnan(value):
                raise ValueError(f"{name} value for {label!r} is not a number")
            if value < 0:
                raise ValueError(f"{name} value for {label!r} is negative")
        total = sum(dist[l] for l in sorted(dist))
        if abs(total - 100.0) > 1e-6:
            raise ValueError(
                f"{name} distribution sums to {total}, expected 100")
    labels = sorted(set(predicted) | set(reference))
    err = sum(abs(predicted.get(l, 0.0) - reference.get(l, 0.0))
              for l in labels)
    return err / len(labels)


class VisionClient(Protocol):
    def labels(self, image_url: str) -> list[str]: ...


class MockVisionClient:
    """Fixed image-to-labels mapping, for tests and demos."""

    def __init__(self, mapping: dict[str, list[str]]) -> None:
        self.mapping = dict(mapping)

    def labels(self, image_url: str) -> list[str]:
        if image_url not in self.mapping:
            raise LookupError(f"no labels known for {image_url!r}")
        return list(self.mapping[image_url])


class HttpVisionClient:
    """Posts the image URL to a labeling endpoint.

    The endpoint must answer {"labels": [{"label": ..., "confidence": ...}]}.
    """

    def __init__(self, endpoint: str, min_confidence: float = 0.0,
                 timeout: float = 10.0) -> None:
        self.endpoint = endpoint
        self.min_confidence = min_confidence
        self.timeout = timeout

    def labels(self, image_url: str) -> list[str]:
        resp = httpx.post(self.endpoint, json={"image_url": image_url},
                          timeout=self.timeout)
        resp.raise_for_status()
        body = resp.json()
        out = []
        for entry in body.get("labels", []):
            if entry.get("confidence", 1.0) >= self.min_confidence:
                out.append(str(entry["label"]).lower())
        return out


@dataclass
class QueryService:
    kb: KnowledgeBase | None = None
    stoplist: frozenset[str] = frozenset()
    _models: dict = field(default=None, repr=False)  # type: ignore[assignment]

    def models(self):
        if self.kb is None:
            raise QueryFault(503, "knowledge base not loaded")
        if self._models is None:
            self._models = self.kb.models()
        return self._models

    def run(self, kind: str, terms: list[str], target: str | None = None,
            top_k: int = DEFAULT_TOP_K,
            threshold: float = DEFAULT_THRESHOLD) -> dict:
        model = self.models()[QUERY_KINDS[kind]]
        kept = [t for t in terms if t.strip().lower() not in self.stoplist]
        try:
            if target is not None:
                score = score_single(model, kept, target)
                return {"activity": target.strip().lower(),
                        "score": score,
                        "fired": score >= threshold}
            results = query(model, kept, top_k=top_k)
            return {"predictions": [
                {"activity": r.label, "score": r.score,
                 "frequency": r.frequency} for r in results]}
        except EmptyQueryError as e:
            raise QueryFault(400, str(e)) from e
        except UnknownTermsError as e:
            raise QueryFault(404, str(e)) from e
        except VsmError as e:
            raise QueryFault(400, str(e)) from e


def _error(code: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=code,
                        content={"error": {"code": code, "message": message}})


def _parse_int(value: str | None, name: str, default: int) -> int:
    if value is None:
        return default
    try:
        return int(value)
    except ValueError:
        raise QueryFault(400, f"{name} must be an integer") from None


def _parse_float(value: str | None, name: str, default: float) -> float:
    if value is None:
        return default
    try:
        return float(value)
    except ValueError:
        raise QueryFault(400, f"{name} must be a number") from None


def _broadcast_fanout(targets: list[dict], activity: str) -> tuple[list, list]:
    notified, failed = [], []

    def ping(device: dict) -> tuple[str, bool]:
        try:
            resp = httpx.post(device["endpoint"], json={"activity": activity},
                              timeout=5.0)
            return device["device_id"], resp.status_code < 400
        except httpx.HTTPError:
            return device["device_id"], False

    if targets:
        with ThreadPoolExecutor(max_workers=min(8, len(targets))) as ex:
            for device_id, ok in ex.map(ping, targets):
                (notified if ok else failed).append(device_id)
    return sorted(notified), sorted(failed)


def create_app(kb: KnowledgeBase | None = None,
               stoplist: frozenset[str] = frozenset(),
               vision: VisionClient | None = None) -> FastAPI:
    app = FastAPI(title="actmine", docs_url=None, redoc_url=None,
                  openapi_url=None)
    service = QueryService(kb=kb, stoplist=stoplist)
    app.state.service = service
    app.state.devices = {}
    app.state.vision = vision

    @app.exception_handler(StarletteHTTPException)
    async def http_error(_request, exc):
        return _error(exc.status_code, str(exc.detail))

    @app.exception_handler(RequestValidationError)
    async def validation_error(_request, exc):
        return _error(400, "invalid request")

    def answer(kind: str, terms: list[str], target, top_k, threshold):
        try:
            payload = service.run(
                kind, terms, target=target,
                top_k=_parse_int(top_k, "top_k", DEFAULT_TOP_K),
                threshold=_parse_float(threshold, "threshold",
                                       DEFAULT_THRESHOLD))
            return JSONResponse(payload)
        except QueryFault as e:
            return _error(e.code, e.message)

    def add_query_route(name: str) -> None:
        @app.get(f"/{name}/{{terms}}", name=name)
        async def by_terms(terms: str, target: str | None = None,
                           top_k: str | None = None,
                           threshold: str | None = None):
            return answer(name, split_query_terms(terms), target, top_k,
                          threshold)

        @app.get(f"/{name}")
        @app.get(f"/{name}/")
        async def bare():
            return _error(400, "empty query")

    for name in QUERY_KINDS:
        add_query_route(name)

    @app.get("/health")
    async def health():
        loaded = service.kb is not None
        body = {"status": "ok", "kb_loaded": loaded}
        if loaded:
            body["corpus_size"] = service.kb.meta.corpus_size
            body["built_at"] = service.kb.meta.built_at
        return JSONResponse(body)

    @app.post("/detect")
    async def detect_post(payload: dict):
        objects = payload.get("objects")
        image_url = payload.get("image_url")
        try:
            if objects is not None:
                if (not isinstance(objects, list)
                        or not all(isinstance(o, str) for o in objects)):
                    raise QueryFault(400, "objects must be a list of strings")
                terms = objects
            elif image_url is not None:
                if not isinstance(image_url, str):
                    raise QueryFault(400, "image_url must be a string")
                if app.state.vision is None:
                    raise QueryFault(503, "vision client not configured")
                try:
                    terms = await run_in_threadpool(app.state.vision.labels,
                                                    image_url)
                except Exception as e:
                    raise QueryFault(503, f"vision lookup failed: {e}") from e
            else:
                raise QueryFault(400,
                                 "body must provide objects or image_url")
        except QueryFault as e:
            return _error(e.code, e.message)
        return answer("detect", terms, payload.get("target"),
                      _opt_str(payload.get("top_k")),
                      _opt_str(payload.get("threshold")))

    @app.post("/register")
    async def register(payload: dict):
        device_id = payload.get("device_id")
        endpoint = payload.get("endpoint")
        affordances = payload.get("affordances", [])
        if not isinstance(device_id, str) or not device_id.strip():
            return _error(400, "device_id must be a non-empty string")
        if (not isinstance(endpoint, str)
                or not endpoint.startswith(("http://", "https://"))):
            return _error(400, "endpoint must be an http(s) URL")
        if (not isinstance(affordances, list)
                or not all(isinstance(a, str) for a in affordances)):
            return _error(400, "affordances must be a list of strings")
        device_id = device_id.strip()
        app.state.devices[device_id] = {
            "device_id": device_id,
            "endpoint": endpoint,
            "affordances": sorted({a.strip().lower() for a in affordances
                                   if a.strip()}),
        }
        return JSONResponse({"device_id": device_id,
                             "devices": len(app.state.devices)})

    @app.post("/broadcast/{activity}")
    async def broadcast(activity: str):
        label = unquote(activity).strip().lower()
        if not label:
            return _error(400, "empty activity")
        targets = [d for d in app.state.devices.values()
                   if label in d["affordances"]]
        notified, failed = await run_in_threadpool(_broadcast_fanout, targets,
                                                   label)
        return JSONResponse({"activity": label, "notified": notified,
                             "failed": failed})

    @app.post("/eval/mae")
    async def eval_mae(payload: dict):
        predicted = payload.get("predicted")
        reference = payload.get("reference")
        if not isinstance(predicted, dict) or not isinstance(reference, dict):
            return _error(400, "predicted and reference must be objects")
        try:
            value = compute_mae(predicted, reference)
        except ValueError as e:
            return _error(400, str(e))
        return JSONResponse({"mae": value})

    return app


def _opt_str(value) -> str | None:
    return None if value is None else str(value)
