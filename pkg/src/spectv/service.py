"""HTTP preview service.

Decomposition is the expensive step, so it runs once per session (in a
background thread, at a capped preview resolution) and is cached by
content hash; filtering and fusion are linear recombinations served
interactively.  Previews reuse the exact fusion code path of the CLI,
so responses are byte-identical to files the CLI writes for the same
inputs at the same scale.

Endpoints:
  POST /sessions                       multipart upload -> 201 {"session": id}
  GET  /sessions/{id}                  progress/status JSON
  POST /sessions/{id}/preview          {"spec": "<filter-spec text>"} -> PNG
  GET  /sessions/{id}/bands/{image}/{k}  offset-encoded band PNG

Config via environment: SPECTV_MAX_UPLOAD (bytes), SPECTV_PREVIEW_CAP
(pixels, long side), SPECTV_SESSION_TTL (seconds).
"""

import hashlib
import os
import re
import secrets
import threading
import time
from dataclasses import dataclass, field

import cv2
import numpy as np
from fastapi import FastAPI, File, Form, HTTPException, UploadFile
from fastapi.responses import JSONResponse, Response

from .bandio import parse_filter_spec
from .fusion import StageError, fuse_with_spec
from .image import (check_image, decode_image_bytes, encode_png_bytes, lcc_to_rgb,
                    offset_encode, rgb_to_lcc)
from .masks import RegionMaskSet, feather
from .registration import LandmarkSet, identity_field, solve_field
from .rof import SolverOptions
from .transform import decompose_gf, decompose_iss, default_iss_schedule

DEFAULT_MAX_UPLOAD = 32 * 1024 * 1024
DEFAULT_PREVIEW_CAP = 512
DEFAULT_TTL = 3600.0


def preview_shape(shape, cap):
    """Output (H, W) with the long side scaled down to at most cap."""
    h, w = shape
    long_side = max(h, w)
    if long_side <= cap:
        return (h, w)
    scale = cap / long_side
    return (max(1, round(h * scale)), max(1, round(w * scale)))


def downscale(img, cap):
    """Deterministic area downscale to the preview cap; no-op if small."""
    img = check_image(img)
    h, w = img.shape[:2]
    nh, nw = preview_shape((h, w), cap)
    if (nh, nw) == (h, w):
        return img
    return cv2.resize(img, (nw, nh), interpolation=cv2.INTER_AREA)


def scale_landmarks(lm, old_shape, new_shape):
    """Map landmark coordinates between grids of different size."""
    sy = new_shape[0] / old_shape[0]
    sx = new_shape[1] / old_shape[1]
    return LandmarkSet(points=lm.points * np.array([sx, sy]), labels=lm.labels)


@dataclass
class Session:
    sid: str
    state: str = "pending"  # pending | ready | error
    stage: str = ""
    error: str = ""
    colorspace: str = "gray"
    d1: object = None
    d2: object = None
    reg_field: object = None
    masks: object = None
    last_access: float = field(default_factory=time.monotonic)


class _Registry:
    def __init__(self, ttl):
        self.ttl = ttl
        self.lock = threading.Lock()
        self.sessions = {}
        self.built = {}  # content hash -> finished Session (template)

    def purge(self):
        now = time.monotonic()
        with self.lock:
            dead = [sid for sid, s in self.sessions.items()
                    if now - s.last_access > self.ttl]
            for sid in dead:
                del self.sessions[sid]

    def get(self, sid):
        self.purge()
        with self.lock:
            session = self.sessions.get(sid)
            if session is None:
                raise HTTPException(404, detail="unknown session")
            session.last_access = time.monotonic()
            return session


def _decompose_pair(img1, img2, variant, n_bands, opts):
    if variant == "iss":
        schedule = default_iss_schedule(n_bands)
        return (decompose_iss(img1, schedule, opts=opts),
                decompose_iss(img2, schedule, opts=opts))
    return (decompose_gf(img1, n_bands=n_bands, opts=opts),
            decompose_gf(img2, n_bands=n_bands, opts=opts))


def _parse_landmarks_text(text):
    points = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        toks = line.split()
        if len(toks) < 2:
            raise ValueError("landmark lines need 'x y [label]'")
        points.append((float(toks[0]), float(toks[1])))
    if not points:
        raise ValueError("landmark payload is empty")
    return LandmarkSet(points=np.asarray(points))


def create_app(max_upload=None, preview_cap=None, ttl=None):
    max_upload = max_upload or int(os.environ.get("SPECTV_MAX_UPLOAD", DEFAULT_MAX_UPLOAD))
    preview_cap = preview_cap or int(os.environ.get("SPECTV_PREVIEW_CAP", DEFAULT_PREVIEW_CAP))
    ttl = ttl or float(os.environ.get("SPECTV_SESSION_TTL", DEFAULT_TTL))
    app = FastAPI(title="spectv preview service")
    registry = _Registry(ttl)

    def read_upload(upload, what):
        if upload is None:
            return None
        data = upload.file.read()
        if len(data) > max_upload:
            raise HTTPException(413, detail=f"{what} exceeds {max_upload} bytes")
        return data

    @app.post("/sessions", status_code=201)
    def create_session(image1: UploadFile = File(...),
                       image2: UploadFile = File(...),
                       landmarks1: UploadFile = File(None),
                       landmarks2: UploadFile = File(None),
                       masks: list[UploadFile] = File(default=[]),
                       variant: str = Form("iss"),
                       bands: int = Form(15),
                       colorspace: str = Form("auto"),
                       tol: float = Form(1e-4),
                       feather_radius: float = Form(0.0)):
        if variant not in ("iss", "gf"):
            raise HTTPException(400, detail="variant must be iss or gf")
        if bands < 1 or tol <= 0 or feather_radius < 0:
            raise HTTPException(400, detail="bands, tol, feather_radius must be positive")
        raw1 = read_upload(image1, "image1")
        raw2 = read_upload(image2, "image2")
        try:
            img1 = decode_image_bytes(raw1)
            img2 = decode_image_bytes(raw2)
        except ValueError as exc:
            raise HTTPException(400, detail=str(exc))
        if img1.shape != img2.shape:
            raise HTTPException(422, detail="input: images must share one grid")

        lm_raw1 = read_upload(landmarks1, "landmarks1")
        lm_raw2 = read_upload(landmarks2, "landmarks2")
        if (lm_raw1 is None) != (lm_raw2 is None):
            raise HTTPException(422, detail="registration: landmarks must come in pairs")
        lm1 = lm2 = None
        if lm_raw1 is not None:
            try:
                lm1 = _parse_landmarks_text(lm_raw1.decode())
                lm2 = _parse_landmarks_text(lm_raw2.decode())
            except (ValueError, UnicodeDecodeError) as exc:
                raise HTTPException(422, detail=f"registration: {exc}")
            if len(lm1) != len(lm2):
                raise HTTPException(
                    422, detail="registration: landmark counts differ")

        mask_entries = []
        for upload in masks:
            raw = read_upload(upload, upload.filename or "mask")
            name = os.path.splitext(os.path.basename(upload.filename or "mask"))[0]
            # region names travel inside filter-spec lines, which cannot
            # carry whitespace, ',' or ']'
            name = re.sub(r"[\s,\]]+", "_", name).strip("_") or "mask"
            try:
                m = decode_image_bytes(raw)
            except ValueError as exc:
                raise HTTPException(422, detail=f"masks: {exc}")
            if m.ndim != 2:
                raise HTTPException(422, detail=f"masks: '{name}' must be grayscale")
            if m.shape != img1.shape[:2]:
                raise HTTPException(422, detail=f"masks: '{name}' grid mismatch")
            mask_entries.append((name, m))

        digest = hashlib.sha256()
        for chunk in (raw1, raw2, lm_raw1 or b"", lm_raw2 or b""):
            digest.update(chunk)
            digest.update(b"\x00")
        for name, _ in mask_entries:
            digest.update(name.encode())
        for upload in masks:
            upload.file.seek(0)
            digest.update(upload.file.read())
        digest.update(f"{variant}:{bands}:{colorspace}:{tol}:{feather_radius}".encode())
        content_key = digest.hexdigest()

        sid = secrets.token_urlsafe(16)
        session = Session(sid=sid)
        with registry.lock:
            template = registry.built.get(content_key)
            if template is not None:
                session.state = template.state
                session.stage = template.stage
                session.error = template.error
                session.colorspace = template.colorspace
                session.d1, session.d2 = template.d1, template.d2
                session.reg_field = template.reg_field
                session.masks = template.masks
            registry.sessions[sid] = session
        if session.state == "ready":
            return {"session": sid, "state": session.state}

        def build():
            try:
                p1 = downscale(img1, preview_cap)
                p2 = downscale(img2, preview_cap)
                space = colorspace
                if space == "auto":
                    space = "rgb" if p1.ndim == 3 else "gray"
                if space == "lcc":
                    p1, p2 = rgb_to_lcc(p1), rgb_to_lcc(p2)
                session.colorspace = space
                if lm1 is not None:
                    s1 = scale_landmarks(lm1, img1.shape[:2], p1.shape[:2])
                    s2 = scale_landmarks(lm2, img2.shape[:2], p2.shape[:2])
                    try:
                        session.reg_field = solve_field(s1, s2, p1.shape[:2])
                    except Exception as exc:
                        raise StageError("registration", exc) from exc
                else:
                    session.reg_field = identity_field(p1.shape[:2])
                if mask_entries:
                    regions = {}
                    for name, m in mask_entries:
                        m = downscale(m, preview_cap)
                        regions[name] = feather(m, feather_radius) if feather_radius else m
                    mask_set = RegionMaskSet.from_dict(regions)
                    if "background" not in mask_set.names:
                        mask_set = mask_set.with_background()
                else:
                    mask_set = RegionMaskSet(
                        names=("all",), masks=np.ones((1,) + p1.shape[:2]))
                session.masks = mask_set
                opts = SolverOptions(tol=tol)
                try:
                    session.d1, session.d2 = _decompose_pair(p1, p2, variant, bands, opts)
                except Exception as exc:
                    raise StageError("decompose", exc) from exc
                session.state = "ready"
                with registry.lock:
                    registry.built[content_key] = session
                    while len(registry.built) > 8:
                        registry.built.pop(next(iter(registry.built)))
            except StageError as exc:
                session.stage = exc.stage
                session.error = str(exc)
                session.state = "error"
            except Exception as exc:  # unexpected; surface via status
                session.stage = "internal"
                session.error = repr(exc)
                session.state = "error"

        threading.Thread(target=build, daemon=True).start()
        return {"session": sid, "state": session.state}

    @app.get("/sessions/{sid}")
    def session_status(sid: str):
        session = registry.get(sid)
        body = {"session": sid, "state": session.state}
        if session.state == "error":
            body["stage"] = session.stage
            body["error"] = session.error
        if session.state == "ready":
            body["bands"] = session.d1.n_bands
            body["channels"] = (session.d1.bands.shape[3]
                                if session.d1.bands.ndim == 4 else 1)
            body["colorspace"] = session.colorspace
            body["regions"] = list(session.masks.names)
            body["times"] = [float(t) for t in session.d1.times]
            body["mean1"] = np.atleast_1d(session.d1.mean).tolist()
            body["mean2"] = np.atleast_1d(session.d2.mean).tolist()
            body["height"], body["width"] = session.d1.bands.shape[1:3]
        return body

    @app.post("/sessions/{sid}/preview")
    def preview(sid: str, body: dict):
        session = registry.get(sid)
        if session.state != "ready":
            raise HTTPException(409, detail=f"session is {session.state}, not ready")
        text = body.get("spec") if isinstance(body, dict) else None
        if not isinstance(text, str):
            raise HTTPException(400, detail="body must be JSON {\"spec\": \"...\"}")
        try:
            spec = parse_filter_spec(text)
        except ValueError as exc:
            raise HTTPException(400, detail=f"malformed spec: {exc}")
        channels = session.d1.bands.shape[3] if session.d1.bands.ndim == 4 else 1
        if spec.n_bands != session.d1.n_bands:
            raise HTTPException(400, detail="spec band count does not match session")
        if spec.channels not in (1, channels):
            raise HTTPException(400, detail="spec channel count does not match session")
        if set(session.masks.names) - set(spec.regions):
            raise HTTPException(400, detail="spec lacks filters for some regions")
        try:
            out = fuse_with_spec(session.d1, session.d2, session.reg_field,
                                 session.masks, spec)
        except StageError as exc:
            raise HTTPException(400, detail=str(exc))
        if session.colorspace == "lcc":
            out = lcc_to_rgb(out)
        return Response(content=encode_png_bytes(out), media_type="image/png")

    @app.get("/sessions/{sid}/bands/{image}/{k}")
    def band_image(sid: str, image: int, k: int):
        session = registry.get(sid)
        if session.state != "ready":
            raise HTTPException(409, detail=f"session is {session.state}, not ready")
        d = {1: session.d1, 2: session.d2}.get(image)
        if d is None:
            raise HTTPException(404, detail="image must be 1 or 2")
        if not 1 <= k <= d.n_bands:
            raise HTTPException(404, detail=f"band {k} outside 1..{d.n_bands}")
        band = offset_encode(d.bands[k - 1])
        return Response(content=encode_png_bytes(band, bit_depth=16),
                        media_type="image/png")

    @app.exception_handler(ValueError)
    def value_error_handler(request, exc):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    return app


app = create_app()


def main(argv=None):
    import argparse

    import uvicorn

    parser = argparse.ArgumentParser(description="Run the preview service.")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--max-upload", type=int, default=None)
    parser.add_argument("--preview-cap", type=int, default=None)
    parser.add_argument("--session-ttl", type=float, default=None)
    args = parser.parse_args(argv)
    uvicorn.run(create_app(args.max_upload, args.preview_cap, args.session_ttl),
                host=args.host, port=args.port)


if __name__ == "__main__":
    main()
