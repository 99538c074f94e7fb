import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from approx_dcim.imaging import (
    EXACT_TABLE, PSNR_INF, GrayImage, blend, checker_noise_image, gradient_image, product_table,
    psnr, read_pgm, sweep_psnr, write_pgm,
)

images = arrays(np.uint8, st.tuples(st.integers(1, 9), st.integers(1, 9)))


@settings(max_examples=40, deadline=None)
@given(images, st.booleans())
def test_pgm_round_trip(tmp_path_factory, px, binary):
    path = tmp_path_factory.mktemp("pgm") / "x.pgm"
    write_pgm(path, GrayImage(px), binary=binary)
    assert np.array_equal(read_pgm(path).pixels, px)


def test_pgm_header_comments(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_bytes(b"P2\n# made by hand\n2 1 # width height\n255\n7 250\n")
    assert read_pgm(path).pixels.tolist() == [[7, 250]]


@pytest.mark.parametrize("data, msg", [
    (b"P5\n2 2\n255\n\x00", "bytes"),
    (b"P2\n2 2\n255\n1 2 3", "pixel values"),
    (b"P2\n2 2\n65535\n1 2 3 4", "maxval"),
    (b"P6\n1 1\n255\n\x00\x00\x00", "magic"),
    (b"P2\n2", "truncated"),
])
def test_pgm_errors_name_the_file(tmp_path, data, msg):
    path = tmp_path / "bad.pgm"
    path.write_bytes(data)
    with pytest.raises(ValueError, match=msg) as exc:
        read_pgm(path)
    assert "bad.pgm" in str(exc.value)


def test_pixel_range_enforced():
    with pytest.raises(ValueError):
        GrayImage(np.array([[256]]))
    with pytest.raises(ValueError):
        GrayImage(np.zeros(4))


def test_psnr_examples():
    a = GrayImage(np.zeros((4, 4), dtype=np.uint8))
    b = GrayImage(np.ones((4, 4), dtype=np.uint8))
    assert psnr(a, b) == pytest.approx(48.1308, abs=1e-4)
    assert psnr(a, b) == pytest.approx(20 * math.log10(255))
    assert psnr(a, a) == PSNR_INF


def test_psnr_dimension_mismatch():
    with pytest.raises(ValueError):
        psnr(gradient_image(4, 4), gradient_image(4, 5))


def test_blend_dimension_mismatch():
    with pytest.raises(ValueError, match="sizes differ"):
        blend(gradient_image(4, 4), gradient_image(5, 4), 0.5)


def test_blend_alpha_range():
    with pytest.raises(ValueError):
        blend(gradient_image(), gradient_image(), 1.5)


def test_blend_formula_by_hand():
    a = GrayImage(np.array([[200, 10]]))
    b = GrayImage(np.array([[40, 255]]))
    out = blend(a, b, 0.3)
    al = int(round(255 * 0.3))
    want = [(x * al + y * (255 - al) + 128) >> 8 for x, y in ((200, 40), (10, 255))]
    assert out.pixels.tolist() == [want]


def test_blend_endpoints():
    a, b = gradient_image(), checker_noise_image()
    # alpha = 1 reproduces a up to the Q0.8 shrink (x*255 + 128) >> 8
    expect = (a.pixels.astype(int) * 255 + 128) >> 8
    assert np.array_equal(blend(a, b, 1.0).pixels, expect)


def test_exact_table_gives_infinite_psnr():
    a, b = gradient_image(), checker_noise_image()
    tab = product_table(lambda x, y: x * y)
    assert np.array_equal(tab, EXACT_TABLE)
    assert psnr(blend(a, b, 0.5), blend(a, b, 0.5, tab)) == PSNR_INF
    assert sweep_psnr(a, b, tab) == PSNR_INF


def test_approximate_table_is_finite_and_lower():
    a, b = gradient_image(), checker_noise_image()
    tab = EXACT_TABLE - (EXACT_TABLE & 0xFF)          # truncate low byte of each product
    assert sweep_psnr(a, b, tab) < 60
    worse = EXACT_TABLE - (EXACT_TABLE & 0x3FF)
    assert sweep_psnr(a, b, worse) < sweep_psnr(a, b, tab)


def test_sweep_pools_mse():
    a, b = gradient_image(), checker_noise_image()
    tab = EXACT_TABLE - (EXACT_TABLE & 0x1FF)
    mses = [np.mean((blend(a, b, al).pixels.astype(float) - blend(a, b, al, tab).pixels) ** 2)
            for al in (0.2, 0.7)]
    want = 10 * math.log10(255 ** 2 / np.mean(mses))
    assert sweep_psnr(a, b, tab, alphas=(0.2, 0.7)) == pytest.approx(want)
    with pytest.raises(ValueError):
        sweep_psnr(a, b, tab, alphas=())


def test_synthetic_images_deterministic():
    assert np.array_equal(checker_noise_image().pixels, checker_noise_image().pixels)
    g = gradient_image()
    assert g.pixels.min() == 0 and g.pixels.max() == 255
