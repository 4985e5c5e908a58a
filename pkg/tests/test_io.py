import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image

from afpseg import io
from afpseg.types import DefectClass, DefectMask, DepthMap

masks = arrays(np.uint8, st.tuples(st.integers(1, 12), st.integers(1, 12)),
               elements=st.integers(0, 2))


@given(masks)
def test_mask_png_round_trip(tmp_path_factory, arr):
    path = tmp_path_factory.mktemp("m") / "mask.png"
    io.save_mask_png(DefectMask(arr), path)
    assert np.array_equal(io.load_mask_png(path).classes, arr)


def test_neutral_mask_is_all_zero(tmp_path):
    io.save_mask_png(DefectMask.empty(4, 3), tmp_path / "m.png")
    assert not np.asarray(Image.open(tmp_path / "m.png")).any()


def test_single_gap_pixel_code(tmp_path):
    arr = np.zeros((3, 3), dtype=np.uint8)
    arr[0, 0] = DefectClass.GAP
    io.save_mask_png(DefectMask(arr), tmp_path / "m.png")
    assert np.asarray(Image.open(tmp_path / "m.png"))[0, 0] == 1


def test_load_16bit_png_normalizes(tmp_path):
    raw = np.array([[0, 1000, 65535]], dtype=np.uint16)
    Image.fromarray(raw).save(tmp_path / "d.png")
    d = io.load_depth_map(tmp_path / "d.png")
    assert d.pixels.tolist() == [[0.0, 1000 / 65535, 1.0]]


@pytest.mark.parametrize("maxval,dtype", [(255, np.uint8), (4095, np.uint16), (65535, np.uint16)])
def test_pgm_round_trip(tmp_path, maxval, dtype):
    raw = (np.arange(12).reshape(3, 4) * (maxval // 11)).astype(dtype)
    io.write_pgm(tmp_path / "d.pgm", raw, maxval)
    arr, mv = io.read_raw(tmp_path / "d.pgm")
    assert mv == maxval and np.array_equal(arr, raw)
    assert np.allclose(io.load_depth_map(tmp_path / "d.pgm").pixels, raw / maxval)


def test_pgm_header_comments(tmp_path):
    (tmp_path / "c.pgm").write_bytes(b"P5\n# made by hand\n2 1\n255\n\x00\xff")
    assert io.load_depth_map(tmp_path / "c.pgm").pixels.tolist() == [[0.0, 1.0]]


@given(st.lists(st.integers(0, 65535), min_size=2, max_size=30, unique=True))
def test_normalization_is_monotone(tmp_path_factory, vals):
    raw = np.array([sorted(vals)], dtype=np.uint16)
    path = tmp_path_factory.mktemp("n") / "d.pgm"
    io.write_pgm(path, raw, 65535)
    assert np.all(np.diff(io.load_depth_map(path).pixels[0]) > 0)


def test_rejects_color_and_garbage(tmp_path):
    Image.new("RGB", (2, 2)).save(tmp_path / "c.png")
    with pytest.raises(io.ImageFormatError):
        io.load_depth_map(tmp_path / "c.png")
    (tmp_path / "x.png").write_bytes(b"not an image")
    with pytest.raises(io.ImageFormatError):
        io.load_depth_map(tmp_path / "x.png")
    with pytest.raises(io.ImageFormatError):
        io.load_depth_map(tmp_path / "missing.png")


def test_mask_with_bad_codes_rejected(tmp_path):
    Image.fromarray(np.full((2, 2), 7, dtype=np.uint8)).save(tmp_path / "m.png")
    with pytest.raises(io.ImageFormatError):
        io.load_mask_png(tmp_path / "m.png")


def test_overlay_colors():
    base = DepthMap(np.full((1, 3), 0.5))
    mask = DefectMask(np.array([[0, 1, 2]], dtype=np.uint8))
    rgb = io.overlay_rgb(base, mask)
    assert tuple(rgb[0, 0]) == (128, 128, 128)
    assert rgb[0, 1, 0] > rgb[0, 1, 1] and rgb[0, 1, 0] > rgb[0, 1, 2]
    assert rgb[0, 2, 1] > rgb[0, 2, 0] and rgb[0, 2, 1] > rgb[0, 2, 2]
    with pytest.raises(ValueError):
        io.overlay_rgb(base, DefectMask.empty(2, 1))


def test_atomic_write_leaves_no_temp_on_failure(tmp_path):
    def boom(f):
        f.write(b"partial")
        raise RuntimeError

    with pytest.raises(RuntimeError):
        io.atomic_write(tmp_path / "out.bin", boom)
    assert list(tmp_path.iterdir()) == []
