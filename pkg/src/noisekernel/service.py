"""HTTP API for the variant studio.

Sessions hold an append-only lineage tree of candidates. Every candidate
is immutable once created and reproducible from (checkpoint digest,
generation parameters, recorded sub-seed): regenerating with the stored
sub-seed yields the output bit-exactly. Long generations return 202 with
a poll URL once they exceed the synchronous wait budget.

Persistence is a JSON-lines journal per session plus one .npy blob per
candidate; PNG renderings are cached on first request so the image bytes
are stable across calls. Sessions are independent; within a session,
writes are serialized by a lock while reads work on immutable snapshots.
"""

import base64
import hashlib
import json
import os
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor, Future
from concurrent.futures import TimeoutError as FutureTimeout
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException, Response
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .core.checkpoint import load_checkpoint
from .core.data import ingest_dataset
from .core.rng import derive_stream, seed_rng
from .errors import NoiseKernelError
from .imaging import array_to_png, png_to_array, u8_to_array
from .runconfig import restore_from_checkpoint
from .sampling import inpaint as sampler_inpaint
from .sampling import synthesize, variants as sampler_variants

MAX_UPLOAD_BYTES = 4 * 1024 * 1024
DEFAULT_SYNC_WAIT = 2.0


class SessionSource(BaseModel):
    source: str  # "upload" | "dataset-index" | "synthesize"
    image_base64: str | None = None
    index: int | None = None
    seed: int | None = None


class CandidateRequest(BaseModel):
    parent_id: str
    beta: float = 0.2
    steps: int = 100
    n: int = 8
    sub_seeds: list[int] | None = None


class InpaintRequest(BaseModel):
    candidate_id: str
    mask_base64: str | None = None
    mask: list | None = None
    steps: int = 100
    beta_start: float = 1.0
    beta_end: float = 0.01
    sub_seed: int | None = None


@dataclass
class Candidate:
    id: str
    parent_id: str | None
    values: np.ndarray
    beta: float | None
    steps: int | None
    sub_seed: int


@dataclass
class Session:
    id: str
    base_seed: int
    created_at: float
    candidates: dict = field(default_factory=dict)
    root_id: str | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)
    seed_counter: int = 0

    def next_sub_seed(self) -> int:
        # stays below 2^53 so sub-seeds survive JSON round trips through
        # JavaScript clients exactly
        self.seed_counter += 1
        return int(seed_rng(self.base_seed + self.seed_counter).integers(2 ** 53))


class StudioService:
    """Model state, session store, and candidate generation."""

    def __init__(self, ckpt_path: str, sessions_dir: str = "sessions",
                 dataset_path: str | None = None,
                 sync_wait: float = DEFAULT_SYNC_WAIT):
        self.checkpoint = load_checkpoint(ckpt_path)
        self.denoiser, self.kernel = restore_from_checkpoint(self.checkpoint)
        with open(ckpt_path, "rb") as fh:
            self.ckpt_digest = hashlib.sha256(fh.read()).hexdigest()
        ds_meta = self.checkpoint.config.get("dataset", {})
        self.kind = ds_meta.get("kind", self.denoiser.kind)
        self.example_shape = tuple(ds_meta.get("example_shape",
                                               (self.denoiser.dim,)))
        self.num_categories = ds_meta.get("num_categories")
        self.dim = int(np.prod(self.example_shape))
        self.sessions_dir = sessions_dir
        self.sync_wait = sync_wait
        self.sessions: dict[str, Session] = {}
        self.jobs: dict[str, Future] = {}
        self.executor = ThreadPoolExecutor(max_workers=2)
        self.dataset = (ingest_dataset(dataset_path, self.kind,
                                       num_categories=self.num_categories)
                        if dataset_path else None)
        os.makedirs(sessions_dir, exist_ok=True)
        self._restore_sessions()

    # -- persistence --

    def _session_dir(self, session_id: str) -> str:
        return os.path.join(self.sessions_dir, session_id)

    def _journal_append(self, session: Session, record: dict) -> None:
        path = os.path.join(self._session_dir(session.id), "journal.jsonl")
        with open(path, "a") as fh:
            fh.write(json.dumps(record) + "\n")

    def _blob_path(self, session_id: str, candidate_id: str) -> str:
        return os.path.join(self._session_dir(session_id), f"{candidate_id}.npy")

    def _restore_sessions(self) -> None:
        for name in sorted(os.listdir(self.sessions_dir)):
            journal = os.path.join(self.sessions_dir, name, "journal.jsonl")
            if not os.path.isfile(journal):
                continue
            session = None
            with open(journal) as fh:
                for line in fh:
                    rec = json.loads(line)
                    if rec["type"] == "session":
                        session = Session(id=rec["id"], base_seed=rec["base_seed"],
                                          created_at=rec["created_at"],
                                          seed_counter=rec.get("seed_counter", 0))
                    elif rec["type"] == "candidate" and session is not None:
                        values = np.load(self._blob_path(session.id, rec["id"]))
                        cand = Candidate(id=rec["id"], parent_id=rec["parent_id"],
                                         values=values, beta=rec.get("beta"),
                                         steps=rec.get("steps"),
                                         sub_seed=rec["sub_seed"])
                        session.candidates[cand.id] = cand
                        session.seed_counter = max(session.seed_counter,
                                                   rec.get("seed_counter", 0))
                        if cand.parent_id is None:
                            session.root_id = cand.id
            if session is not None:
                self.sessions[session.id] = session

    def _store_candidate(self, session: Session, cand: Candidate) -> None:
        session.candidates[cand.id] = cand
        if cand.parent_id is None:
            session.root_id = cand.id
        np.save(self._blob_path(session.id, cand.id), cand.values)
        self._journal_append(session, {
            "type": "candidate", "id": cand.id, "parent_id": cand.parent_id,
            "beta": cand.beta, "steps": cand.steps, "sub_seed": cand.sub_seed,
            "seed_counter": session.seed_counter,
        })

    # -- operations --

    def create_session(self, body: SessionSource) -> Session:
        session_id = uuid.uuid4().hex[:12]
        base_seed = body.seed if body.seed is not None \
            else int.from_bytes(os.urandom(6), "big")
        session = Session(id=session_id, base_seed=base_seed,
                          created_at=time.time())

        if body.source == "upload":
            if not body.image_base64:
                raise HTTPException(400, "upload source needs image_base64")
            raw = base64.b64decode(body.image_base64)
            if len(raw) > MAX_UPLOAD_BYTES:
                raise HTTPException(413, "upload too large")
            u8 = png_to_array(raw)
            if int(np.prod(u8.shape)) != self.dim:
                raise HTTPException(
                    400, f"image shape {u8.shape} does not match model "
                         f"shape {self.example_shape}")
            values = u8_to_array(u8, self.kind, self.num_categories)
        elif body.source == "dataset-index":
            if self.dataset is None:
                raise HTTPException(400, "service started without a dataset")
            if body.index is None or not 0 <= body.index < self.dataset.num_examples:
                raise HTTPException(404, "dataset index out of range")
            values = self.dataset.data[body.index].copy()
        elif body.source == "synthesize":
            sub = session.next_sub_seed()
            defaults = {"continuous": (100, 1.0, 0.01),
                        "categorical": (500, 1.0, 0.5)}[self.kind]
            values = synthesize(self.denoiser, self.kernel, defaults[0],
                                defaults[1], defaults[2], 1,
                                derive_stream(sub, 0), dim=self.dim)[0]
        else:
            raise HTTPException(400, f"unknown source {body.source!r}")

        # journal only after the source validated, so failures leave no
        # orphan session directories
        os.makedirs(self._session_dir(session_id), exist_ok=True)
        self._journal_append(session, {
            "type": "session", "id": session_id, "base_seed": base_seed,
            "created_at": session.created_at, "seed_counter": 0,
            "checkpoint": self.ckpt_digest,
        })
        root = Candidate(id=uuid.uuid4().hex[:12], parent_id=None,
                         values=np.asarray(values), beta=None, steps=None,
                         sub_seed=session.seed_counter)
        self._store_candidate(session, root)
        self.sessions[session_id] = session
        return session

    def branch(self, session: Session, req: CandidateRequest) -> list:
        parent = session.candidates.get(req.parent_id)
        if parent is None:
            raise HTTPException(404, "unknown parent candidate")
        if not 0.0 < req.beta < 1.0:
            raise HTTPException(422, f"beta={req.beta} outside (0, 1)")
        if req.steps < 1 or req.n < 1:
            raise HTTPException(422, "steps and n must be positive")
        if req.sub_seeds is not None and len(req.sub_seeds) != req.n:
            raise HTTPException(422, "sub_seeds length must equal n")
        with session.lock:
            subs = req.sub_seeds or [session.next_sub_seed() for _ in range(req.n)]
            children = []
            for sub in subs:
                out = sampler_variants(parent.values, req.beta, req.steps, 1,
                                       self.denoiser, self.kernel, seed=sub)[0]
                child = Candidate(id=uuid.uuid4().hex[:12], parent_id=parent.id,
                                  values=out, beta=req.beta, steps=req.steps,
                                  sub_seed=sub)
                self._store_candidate(session, child)
                children.append(child)
        return children

    def inpaint(self, session: Session, req: InpaintRequest) -> Candidate:
        parent = session.candidates.get(req.candidate_id)
        if parent is None:
            raise HTTPException(404, "unknown candidate")
        if req.mask_base64:
            try:
                u8 = png_to_array(base64.b64decode(req.mask_base64))
            except Exception:
                raise HTTPException(422, "mask PNG could not be decoded")
            mask = (u8.reshape(-1) > 0).astype(np.float64)
        elif req.mask is not None:
            mask = np.asarray(req.mask, dtype=np.float64).reshape(-1)
        else:
            raise HTTPException(422, "request needs mask or mask_base64")
        if mask.size != self.dim or not np.all((mask == 0) | (mask == 1)):
            raise HTTPException(422, "mask must be binary and match the model shape")
        with session.lock:
            sub = req.sub_seed if req.sub_seed is not None else session.next_sub_seed()
            out = sampler_inpaint(parent.values, mask, self.denoiser, self.kernel,
                                  num_steps=req.steps, beta_start=req.beta_start,
                                  beta_end=req.beta_end, rng=derive_stream(sub, 0))
            child = Candidate(id=uuid.uuid4().hex[:12], parent_id=parent.id,
                              values=out, beta=None, steps=req.steps, sub_seed=sub)
            self._store_candidate(session, child)
        return child

    def lineage(self, session: Session) -> dict:
        children: dict = {}
        for cand in session.candidates.values():
            if cand.parent_id is not None:
                children.setdefault(cand.parent_id, []).append(cand.id)

        def node(cid: str) -> dict:
            cand = session.candidates[cid]
            return {"id": cand.id, "parent_id": cand.parent_id,
                    "beta": cand.beta, "steps": cand.steps,
                    "sub_seed": cand.sub_seed,
                    "children": [node(c) for c in sorted(children.get(cid, []))]}

        return {"session_id": session.id, "base_seed": session.base_seed,
                "checkpoint": self.ckpt_digest,
                "node_count": len(session.candidates),
                "root": node(session.root_id) if session.root_id else None}

    def find_candidate(self, candidate_id: str):
        for session in self.sessions.values():
            cand = session.candidates.get(candidate_id)
            if cand is not None:
                return session, cand
        raise HTTPException(404, "unknown candidate")

    def candidate_png(self, session: Session, cand: Candidate) -> bytes:
        png_path = os.path.join(self._session_dir(session.id), f"{cand.id}.png")
        if not os.path.exists(png_path):
            data = array_to_png(cand.values, self.example_shape, self.kind,
                                self.num_categories)
            with open(png_path, "wb") as fh:
                fh.write(data)
        with open(png_path, "rb") as fh:
            return fh.read()


def _candidate_json(cand: Candidate) -> dict:
    return {"id": cand.id, "parent_id": cand.parent_id, "beta": cand.beta,
            "steps": cand.steps, "sub_seed": cand.sub_seed,
            "image_url": f"/candidates/{cand.id}/image"}


def create_app(ckpt_path: str, sessions_dir: str = "sessions",
               dataset_path: str | None = None,
               sync_wait: float = DEFAULT_SYNC_WAIT) -> FastAPI:
    svc = StudioService(ckpt_path, sessions_dir=sessions_dir,
                        dataset_path=dataset_path, sync_wait=sync_wait)
    app = FastAPI(title="noisekernel variant studio",
                  description="Branching variant generation and inpainting "
                              "over a trained noise kernel")
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    app.state.service = svc

    def _session_or_404(session_id: str) -> Session:
        session = svc.sessions.get(session_id)
        if session is None:
            raise HTTPException(404, "unknown session")
        return session

    def _maybe_async(session_id: str, fn):
        """Run fn; return its result, or a 202 job handle if it is slow."""
        future = svc.executor.submit(fn)
        try:
            return future.result(timeout=svc.sync_wait), None
        except FutureTimeout:
            job_id = uuid.uuid4().hex[:12]
            svc.jobs[job_id] = future
            return None, {"job_id": job_id,
                          "poll_url": f"/sessions/{session_id}/jobs/{job_id}"}

    @app.get("/model")
    def model_info():
        return {"kind": svc.kind, "dim": svc.dim,
                "example_shape": list(svc.example_shape),
                "num_categories": svc.num_categories,
                "checkpoint_digest": svc.ckpt_digest,
                "has_dataset": svc.dataset is not None}

    @app.post("/sessions", status_code=201)
    def create_session(body: SessionSource):
        session = svc.create_session(body)
        root = session.candidates[session.root_id]
        return {"session_id": session.id,
                "root_candidate": _candidate_json(root)}

    @app.post("/sessions/{session_id}/candidates")
    def branch(session_id: str, req: CandidateRequest, response: Response):
        session = _session_or_404(session_id)
        result, job = _maybe_async(session_id, lambda: svc.branch(session, req))
        if job is not None:
            response.status_code = 202
            return job
        return {"candidates": [_candidate_json(c) for c in result]}

    @app.post("/sessions/{session_id}/inpaint")
    def inpaint(session_id: str, req: InpaintRequest, response: Response):
        session = _session_or_404(session_id)
        result, job = _maybe_async(session_id, lambda: svc.inpaint(session, req))
        if job is not None:
            response.status_code = 202
            return job
        return _candidate_json(result)

    @app.get("/sessions/{session_id}/jobs/{job_id}")
    def poll_job(session_id: str, job_id: str, response: Response):
        future = svc.jobs.get(job_id)
        if future is None:
            raise HTTPException(404, "unknown job")
        if not future.done():
            response.status_code = 202
            return {"job_id": job_id, "status": "pending"}
        del svc.jobs[job_id]
        result = future.result()
        if isinstance(result, list):
            return {"candidates": [_candidate_json(c) for c in result]}
        return _candidate_json(result)

    @app.get("/sessions/{session_id}/lineage")
    def lineage(session_id: str):
        return svc.lineage(_session_or_404(session_id))

    @app.get("/candidates/{candidate_id}/image")
    def candidate_image(candidate_id: str):
        session, cand = svc.find_candidate(candidate_id)
        data = svc.candidate_png(session, cand)
        etag = hashlib.sha256(data).hexdigest()[:32]
        return Response(content=data, media_type="image/png",
                        headers={"ETag": etag,
                                 "Cache-Control": "public, max-age=31536000, immutable"})

    @app.exception_handler(NoiseKernelError)
    def domain_error(request, exc):
        from fastapi.responses import JSONResponse
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    return app
