import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from conftest import smooth_random, smooth_random_rgb
from spectv import bandio
from spectv.cli import main as cli_main
from spectv.image import decode_image_bytes, encode_png_bytes, save_image
from spectv.registration import LandmarkSet
from spectv.service import create_app, downscale, preview_shape, scale_landmarks


def png(img, bit_depth=16):
    return encode_png_bytes(img, bit_depth=bit_depth)


def poll(client, sid, timeout=60.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        body = client.get(f"/sessions/{sid}").json()
        if body["state"] in ("ready", "error"):
            return body
        time.sleep(0.05)
    raise TimeoutError("session never finished building")


def upload(client, img1, img2, data=None, **extra_files):
    files = [("image1", ("a.png", png(img1), "image/png")),
             ("image2", ("b.png", png(img2), "image/png"))]
    for key, value in extra_files.items():
        if isinstance(value, list):
            files.extend((key, v) for v in value)
        else:
            files.append((key, value))
    return client.post("/sessions", files=files, data=data or {})


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


@pytest.fixture(scope="module")
def pair():
    return (smooth_random((16, 16), sigma=2.0, seed=91),
            smooth_random((16, 16), sigma=1.5, seed=92))


@pytest.fixture(scope="module")
def ready_session(client, pair):
    resp = upload(client, *pair, data={"bands": "5", "tol": "1e-5"})
    assert resp.status_code == 201
    sid = resp.json()["session"]
    body = poll(client, sid)
    assert body["state"] == "ready", body
    return sid, body


def test_status_reports_session_layout(ready_session):
    _, body = ready_session
    assert body["bands"] == 5
    assert body["channels"] == 1
    assert body["colorspace"] == "gray"
    assert body["regions"] == ["all"]
    assert body["height"] == 16 and body["width"] == 16
    assert len(body["times"]) == 5
    assert body["times"] == sorted(body["times"], reverse=True)


def test_preview_identity_spec_and_determinism(client, ready_session):
    sid, _ = ready_session
    spec = bandio.identity_filter_spec(5).to_text()
    r1 = client.post(f"/sessions/{sid}/preview", json={"spec": spec})
    assert r1.status_code == 200
    assert r1.headers["content-type"] == "image/png"
    out = decode_image_bytes(r1.content)
    assert out.shape == (16, 16)
    r2 = client.post(f"/sessions/{sid}/preview", json={"spec": spec})
    assert r1.content == r2.content


def test_preview_bytes_match_cli_output(tmp_path, client, pair):
    f1, f2 = pair
    p1, p2 = tmp_path / "a.png", tmp_path / "b.png"
    save_image(f1, p1, bit_depth=16)
    save_image(f2, p2, bit_depth=16)
    spec = bandio.identity_filter_spec(4)
    spec_path = tmp_path / "spec.txt"
    bandio.save_filter_spec(spec, spec_path)
    out = tmp_path / "cli.png"
    assert cli_main(["fuse", "--preset", "spec", "--image1", str(p1),
                     "--image2", str(p2), "--filter-spec", str(spec_path),
                     "--out", str(out), "--bands", "4",
                     "--tol", "1e-4", "--max-iter", "2000"]) == 0

    resp = upload(client, f1, f2, data={"bands": "4", "tol": "1e-4"})
    sid = resp.json()["session"]
    assert poll(client, sid)["state"] == "ready"
    preview = client.post(f"/sessions/{sid}/preview",
                          json={"spec": spec.to_text()})
    assert preview.content == out.read_bytes()


def test_band_endpoint_serves_every_band(client, ready_session):
    sid, _ = ready_session
    for image in (1, 2):
        for k in (1, 5):
            resp = client.get(f"/sessions/{sid}/bands/{image}/{k}")
            assert resp.status_code == 200
            band = decode_image_bytes(resp.content)
            assert band.shape == (16, 16)
    assert client.get(f"/sessions/{sid}/bands/1/0").status_code == 404
    assert client.get(f"/sessions/{sid}/bands/1/6").status_code == 404
    assert client.get(f"/sessions/{sid}/bands/3/1").status_code == 404


def test_preview_rejects_mismatched_specs(client, ready_session):
    sid, _ = ready_session
    wrong_bands = bandio.identity_filter_spec(7).to_text()
    resp = client.post(f"/sessions/{sid}/preview", json={"spec": wrong_bands})
    assert resp.status_code == 400
    assert "band count" in resp.json()["detail"]
    other_region = bandio.make_filter_spec(
        5, 1, ("face",), {(1, "face"): np.ones((1, 5))}).to_text()
    resp = client.post(f"/sessions/{sid}/preview", json={"spec": other_region})
    assert resp.status_code == 400
    assert "regions" in resp.json()["detail"]
    resp = client.post(f"/sessions/{sid}/preview", json={"spec": "not a spec"})
    assert resp.status_code == 400
    resp = client.post(f"/sessions/{sid}/preview", json={"nope": 1})
    assert resp.status_code == 400


def test_unknown_session_is_404(client):
    assert client.get("/sessions/nope").status_code == 404
    assert client.post("/sessions/nope/preview",
                       json={"spec": "x"}).status_code == 404


def test_upload_validation(client, pair):
    f1, f2 = pair
    resp = upload(client, f1, f2, data={"variant": "other"})
    assert resp.status_code == 400
    resp = upload(client, f1, f2, data={"bands": "0"})
    assert resp.status_code == 400
    resp = upload(client, f1, f2[:-2])
    assert resp.status_code == 422
    assert resp.json()["detail"].startswith("input")
    files = [("image1", ("a.png", b"junk", "image/png")),
             ("image2", ("b.png", png(f2), "image/png"))]
    assert client.post("/sessions", files=files).status_code == 400


def test_landmark_validation(client, pair):
    f1, f2 = pair
    resp = upload(client, f1, f2,
                  landmarks1=("l1.txt", b"1 2\n", "text/plain"))
    assert resp.status_code == 422
    assert resp.json()["detail"].startswith("registration")
    resp = upload(client, f1, f2,
                  landmarks1=("l1.txt", b"1 2\n3 4\n", "text/plain"),
                  landmarks2=("l2.txt", b"1 2\n", "text/plain"))
    assert resp.status_code == 422
    assert "counts differ" in resp.json()["detail"]
    resp = upload(client, f1, f2,
                  landmarks1=("l1.txt", b"bad\n", "text/plain"),
                  landmarks2=("l2.txt", b"1 2\n", "text/plain"))
    assert resp.status_code == 422


def test_mask_validation_and_session_regions(client, pair):
    f1, f2 = pair
    resp = upload(client, f1, f2,
                  masks=[("m.png", png(np.ones((4, 4))), "image/png")])
    assert resp.status_code == 422
    assert resp.json()["detail"].startswith("masks")

    mask = np.zeros((16, 16))
    mask[4:12, 4:12] = 1.0
    resp = upload(client, f1, f2, data={"bands": "3", "tol": "1e-4"},
                  masks=[("face.png", png(mask), "image/png")])
    assert resp.status_code == 201
    body = poll(client, resp.json()["session"])
    assert body["state"] == "ready"
    assert body["regions"] == ["face", "background"]


def test_mask_names_are_sanitized_for_the_spec_format(client, pair):
    # 'left eye.png' must yield a region name filter specs can carry
    f1, f2 = pair
    mask = np.zeros((16, 16))
    mask[2:6, 2:6] = 1.0
    resp = upload(client, f1, f2, data={"bands": "3", "tol": "1e-4"},
                  masks=[("left eye.png", png(mask), "image/png")])
    assert resp.status_code == 201
    sid = resp.json()["session"]
    body = poll(client, sid)
    assert body["state"] == "ready"
    assert body["regions"] == ["left_eye", "background"]

    tables = {(1, name): np.ones((1, 3)) for name in body["regions"]}
    spec = bandio.make_filter_spec(3, 1, body["regions"], tables)
    resp = client.post(f"/sessions/{sid}/preview", json={"spec": spec.to_text()})
    assert resp.status_code == 200


def test_registration_failure_surfaces_stage_and_blocks_preview(client, pair):
    f1, f2 = pair
    lm = b"1000 1000\n"
    resp = upload(client, f1, f2,
                  landmarks1=("l1.txt", lm, "text/plain"),
                  landmarks2=("l2.txt", lm, "text/plain"))
    assert resp.status_code == 201
    sid = resp.json()["session"]
    body = poll(client, sid)
    assert body["state"] == "error"
    assert body["stage"] == "registration"
    spec = bandio.identity_filter_spec(15).to_text()
    resp = client.post(f"/sessions/{sid}/preview", json={"spec": spec})
    assert resp.status_code == 409


def test_duplicate_upload_reuses_decomposition(client, pair):
    f1, f2 = pair
    data = {"bands": "3", "tol": "2e-4"}
    sid1 = upload(client, f1, f2, data=data).json()["session"]
    assert poll(client, sid1)["state"] == "ready"
    resp = upload(client, f1, f2, data=data)
    assert resp.status_code == 201
    assert resp.json()["state"] == "ready"  # no second build
    sid2 = resp.json()["session"]
    assert sid2 != sid1
    spec = bandio.identity_filter_spec(3).to_text()
    a = client.post(f"/sessions/{sid1}/preview", json={"spec": spec})
    b = client.post(f"/sessions/{sid2}/preview", json={"spec": spec})
    assert a.content == b.content


def test_upload_cap_returns_413(pair):
    client = TestClient(create_app(max_upload=64))
    resp = upload(client, *pair)
    assert resp.status_code == 413


def test_preview_cap_downscales_session(pair):
    client = TestClient(create_app(preview_cap=8))
    resp = upload(client, *pair, data={"bands": "3", "tol": "1e-3"})
    sid = resp.json()["session"]
    body = poll(client, sid)
    assert body["state"] == "ready"
    assert (body["height"], body["width"]) == (8, 8)
    band = client.get(f"/sessions/{sid}/bands/1/1")
    assert decode_image_bytes(band.content).shape == (8, 8)


def test_rgb_session_auto_colorspace():
    client = TestClient(create_app())
    f1 = smooth_random_rgb((12, 12), sigma=1.5, seed=93)
    f2 = smooth_random_rgb((12, 12), sigma=1.5, seed=94)
    resp = upload(client, f1, f2, data={"bands": "3", "tol": "1e-3",
                                        "colorspace": "lcc"})
    sid = resp.json()["session"]
    body = poll(client, sid)
    assert body["state"] == "ready"
    assert body["colorspace"] == "lcc"
    assert body["channels"] == 3
    spec = bandio.identity_filter_spec(3, channels=3).to_text()
    out = client.post(f"/sessions/{sid}/preview", json={"spec": spec})
    assert out.status_code == 200
    assert decode_image_bytes(out.content).shape == (12, 12, 3)


def test_preview_shape_and_downscale_helpers():
    assert preview_shape((100, 200), 512) == (100, 200)
    assert preview_shape((1024, 512), 512) == (512, 256)
    assert preview_shape((2000, 1000), 512) == (512, 256)
    assert preview_shape((3, 4000), 512) == (1, 512)
    img = smooth_random((64, 32), sigma=3.0, seed=95)
    small = downscale(img, 16)
    assert small.shape == (16, 8)
    assert downscale(img, 64) is img


def test_scale_landmarks_maps_coordinates():
    lm = LandmarkSet(points=np.array([[10.0, 20.0], [0.0, 0.0]]),
                     labels=("a", "b"))
    out = scale_landmarks(lm, (100, 50), (50, 25))
    assert np.allclose(out.points, [[5.0, 10.0], [0.0, 0.0]])
    assert out.labels == ("a", "b")
