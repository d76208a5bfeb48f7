import numpy as np
import pytest

from conftest import smooth_random, smooth_random_rgb
from spectv.bandio import (identity_filter_spec, load_bands, load_field,
                           load_filter_spec, load_landmarks, make_filter_spec,
                           parse_filter_spec, save_bands, save_field,
                           save_filter_spec, save_landmarks)
from spectv.registration import LandmarkSet, RegistrationField
from spectv.rof import SolverOptions
from spectv.transform import decompose_iss, default_iss_schedule, reconstruct

FAST = SolverOptions(tol=1e-5, max_iter=1500)


@pytest.fixture(scope="module")
def small_decomposition():
    f = smooth_random((16, 16), sigma=2.0, seed=71)
    return decompose_iss(f, default_iss_schedule(4), opts=FAST)


def test_band_stack_round_trip_is_lossless(tmp_path, small_decomposition):
    d = small_decomposition
    out = tmp_path / "stack"
    save_bands(d, out)
    d2, manifest = load_bands(out)
    assert np.array_equal(d2.bands, d.bands)
    assert np.array_equal(d2.times, d.times)
    assert float(d2.mean) == float(d.mean)
    assert d2.variant == d.variant
    assert np.array_equal(reconstruct(d2), reconstruct(d))
    assert manifest["bands"] == "4"
    assert manifest["height"] == "16" and manifest["width"] == "16"
    assert manifest["channels"] == "1"
    assert manifest["colorspace"] == "gray"
    assert manifest["converged"] == "4/4"


def test_band_stack_writes_preview_pngs(tmp_path, small_decomposition):
    out = tmp_path / "stack"
    save_bands(small_decomposition, out)
    pngs = sorted(p.name for p in out.glob("band_*.png"))
    assert pngs == [f"band_{k:02d}.png" for k in range(1, 5)]
    assert (out / "bands.npy").exists()
    assert (out / "manifest.txt").exists()


def test_band_stack_rgb_manifest(tmp_path):
    f = smooth_random_rgb((8, 8), sigma=1.0, seed=72)
    d = decompose_iss(f, default_iss_schedule(3), opts=FAST)
    out = tmp_path / "stack"
    save_bands(d, out, colorspace="lcc")
    d2, manifest = load_bands(out)
    assert manifest["channels"] == "3"
    assert manifest["colorspace"] == "lcc"
    assert np.array_equal(d2.bands, d.bands)
    assert np.allclose(d2.mean, d.mean)


def test_band_stack_save_is_deterministic(tmp_path, small_decomposition):
    a, b = tmp_path / "a", tmp_path / "b"
    save_bands(small_decomposition, a)
    save_bands(small_decomposition, b)
    for name in ["manifest.txt", "bands.npy", "band_01.png"]:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_band_stack_rejects_bad_manifest(tmp_path, small_decomposition):
    out = tmp_path / "stack"
    save_bands(small_decomposition, out)
    manifest = out / "manifest.txt"
    text = manifest.read_text()
    manifest.write_text(text.replace("version=1", "version=99"))
    with pytest.raises(ValueError):
        load_bands(out)
    manifest.write_text(text.replace("format=spectv-bands", "format=other"))
    with pytest.raises(ValueError):
        load_bands(out)
    manifest.write_text(text.replace("bands=4", "bands=7"))
    with pytest.raises(ValueError):
        load_bands(out)
    with pytest.raises(OSError):
        load_bands(tmp_path / "missing")


def random_spec(rng, n_bands=5, channels=3, with_image_2=True):
    regions = ("face", "background")
    tables = {}
    means = {}
    images = (1, 2) if with_image_2 else (1,)
    for image in images:
        for region in regions:
            tables[(image, region)] = rng.standard_normal((channels, n_bands))
            means[(image, region)] = rng.standard_normal(channels)
    return make_filter_spec(n_bands, channels, regions, tables, means,
                            omega1=rng.standard_normal(channels),
                            omega2=rng.standard_normal(channels))


def test_filter_spec_text_round_trip(rng):
    spec = random_spec(rng)
    back = parse_filter_spec(spec.to_text())
    assert back.n_bands == spec.n_bands
    assert back.channels == spec.channels
    assert back.regions == spec.regions
    assert np.array_equal(back.omega1, spec.omega1)
    assert np.array_equal(back.omega2, spec.omega2)
    for key, w in spec.tables.items():
        assert np.array_equal(back.tables[key], w)
        assert np.array_equal(back.means[key], spec.means[key])
    # repr round trip keeps the text itself fixed too
    assert back.to_text() == spec.to_text()


def test_filter_spec_file_round_trip(tmp_path, rng):
    spec = random_spec(rng, with_image_2=False)
    path = tmp_path / "filters.txt"
    save_filter_spec(spec, path)
    back = load_filter_spec(path)
    assert back.to_text() == spec.to_text()
    assert not back.has_image(2)
    assert back.has_image(1)


def test_filter_spec_accessors(rng):
    spec = random_spec(rng, n_bands=4, channels=2)
    bf = spec.band_filter(image=2, region="background", channel=1)
    assert np.array_equal(bf.weights, spec.tables[(2, "background")][1])
    assert bf.mean_weight == spec.means[(2, "background")][1]
    per_region = spec.region_filters(1)
    assert set(per_region) == {"face", "background"}
    assert len(per_region["face"]) == 2


def test_identity_filter_spec_is_all_pass():
    spec = identity_filter_spec(6, channels=2)
    assert spec.regions == ("all",)
    assert np.all(spec.tables[(1, "all")] == 1.0)
    assert np.all(spec.omega1 == 1.0) and np.all(spec.omega2 == 0.0)
    assert not spec.has_image(2)
    back = parse_filter_spec(spec.to_text())
    assert back.to_text() == spec.to_text()


def test_filter_spec_parser_tolerates_comments_and_defaults():
    text = """# hand written
format=spectv-filter
version=1
bands=3
channels=1
regions=all
omega1=0.5

[filter image=1 region=all channel=0]
weights=1.0,0.5,0.25
"""
    spec = parse_filter_spec(text)
    assert np.array_equal(spec.tables[(1, "all")][0], [1.0, 0.5, 0.25])
    assert spec.means[(1, "all")][0] == 1.0
    assert np.array_equal(spec.omega1, [0.5])
    assert np.array_equal(spec.omega2, [0.0])


def test_filter_spec_parser_rejects_malformed():
    good = identity_filter_spec(3).to_text()
    with pytest.raises(ValueError):
        parse_filter_spec(good.replace("version=1", "version=2"))
    with pytest.raises(ValueError):
        parse_filter_spec(good.replace("format=spectv-filter", "format=x"))
    with pytest.raises(ValueError):
        parse_filter_spec(good.replace("weights=1.0,1.0,1.0",
                                       "weights=1.0,1.0"))
    with pytest.raises(ValueError):
        parse_filter_spec(good.replace("[filter image=1 region=all channel=0]",
                                       "[mystery image=1 region=all channel=0]"))
    with pytest.raises(ValueError):
        parse_filter_spec("format=spectv-filter\nversion=1\nbands=3\n"
                          "channels=1\nregions=all\nnot a key value line\n")


def test_make_filter_spec_validation(rng):
    w = np.ones((1, 3))
    with pytest.raises(ValueError):
        make_filter_spec(3, 1, (), {})
    with pytest.raises(ValueError):
        make_filter_spec(3, 1, ("a", "a"), {(1, "a"): w})
    with pytest.raises(ValueError):
        make_filter_spec(3, 1, ("a",), {(3, "a"): w})
    with pytest.raises(ValueError):
        make_filter_spec(3, 1, ("a",), {(1, "b"): w})
    with pytest.raises(ValueError):
        make_filter_spec(3, 1, ("a",), {(1, "a"): np.ones((1, 4))})
    with pytest.raises(ValueError):
        make_filter_spec(3, 1, ("a",), {(1, "a"): np.full((1, 3), np.nan)})
    with pytest.raises(ValueError):
        make_filter_spec(3, 1, ("a", "b"), {(1, "a"): w})  # b has no filter
    # names the line format cannot carry back out
    for bad in ("left eye", "a,b", "a]b", ""):
        with pytest.raises(ValueError):
            make_filter_spec(3, 1, (bad,), {(1, bad): w})


def test_landmarks_round_trip(tmp_path):
    pts = np.array([[1.5, 2.25], [30.0, 4.75], [7.125, 19.0]])
    lm = LandmarkSet(points=pts, labels=("nose", "chin", "brow"))
    path = tmp_path / "lm.txt"
    save_landmarks(lm, path)
    back = load_landmarks(path)
    assert np.array_equal(back.points, pts)
    assert back.labels == ("nose", "chin", "brow")


def test_landmarks_without_labels(tmp_path):
    lm = LandmarkSet(points=np.array([[0.0, 0.0], [3.0, 4.0]]))
    path = tmp_path / "lm.txt"
    save_landmarks(lm, path)
    back = load_landmarks(path)
    assert np.array_equal(back.points, lm.points)
    assert back.labels == ()


def test_landmarks_parser_validation(tmp_path):
    path = tmp_path / "lm.txt"
    path.write_text("# only a comment\n")
    with pytest.raises(ValueError):
        load_landmarks(path)
    path.write_text("1.0\n")
    with pytest.raises(ValueError):
        load_landmarks(path)
    with pytest.raises(OSError):
        load_landmarks(tmp_path / "nope.txt")


def test_field_round_trip(tmp_path, rng):
    v = rng.standard_normal((6, 7, 2))
    path = tmp_path / "field.npy"
    save_field(RegistrationField(v=v), path)
    back = load_field(path)
    assert np.array_equal(back.v, v)
