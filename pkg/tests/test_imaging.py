import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arls.imaging import (
    Frame,
    PGMDepthError,
    PGMError,
    PGMHeaderError,
    PGMTruncatedError,
    SceneConfig,
    apply_blur,
    apply_noise,
    lcg_draws,
    load_frame,
    read_sequence,
    render_background,
    render_scene,
    render_sequence,
    save_frame,
    write_sequence,
)

import oracles


def frames(max_side=12):
    return st.integers(1, max_side).flatmap(
        lambda w: st.integers(1, max_side).flatmap(
            lambda h: st.lists(st.integers(0, 255), min_size=w * h, max_size=w * h).map(
                lambda px: Frame(np.array(px, dtype=np.uint8).reshape(h, w))
            )
        )
    )


# --- PGM ------------------------------------------------------------------

def test_load_2x2():
    f = load_frame(b"P5 2 2 255\n" + bytes([0, 255, 0, 255]))
    assert (f.width, f.height) == (2, 2)
    assert f.pixels.tolist() == [[0, 255], [0, 255]]


def test_load_accepts_newline_header_and_comments():
    f = load_frame(b"P5\n# made by hand\n3 1\n255\n" + bytes([1, 2, 3]))
    assert f.pixels.tolist() == [[1, 2, 3]]


def test_truncated_payload():
    with pytest.raises(PGMTruncatedError) as exc:
        load_frame(b"P5 4 4 255\n" + bytes(8))
    assert "offset" in str(exc.value)


def test_unsupported_depth():
    with pytest.raises(PGMDepthError) as exc:
        load_frame(b"P5 1 1 65535\n" + bytes(2))
    assert exc.value.offset == 7


@pytest.mark.parametrize(
    "data",
    [b"P2 1 1 255\n0", b"P5 x 1 255\n\x00", b"P5 0 1 255\n", b"P5 1 1", b"", b"P5 1 1 255"],
)
def test_malformed_header(data):
    with pytest.raises(PGMHeaderError):
        load_frame(data)


def test_error_kinds_are_distinct():
    assert len({PGMHeaderError, PGMTruncatedError, PGMDepthError}) == 3
    assert all(issubclass(e, PGMError) for e in (PGMHeaderError, PGMTruncatedError, PGMDepthError))


def test_trailing_bytes_rejected():
    with pytest.raises(PGMError):
        load_frame(b"P5 1 1 255\n\x00\x00")


def test_smallest_payload():
    assert save_frame(Frame(np.zeros((1, 1), np.uint8))) == b"P5 1 1 255\n\x00"


@given(frames())
def test_round_trip(frame):
    data = save_frame(frame)
    assert save_frame(load_frame(data)) == data
    assert load_frame(data) == frame


def test_random_64x64_round_trip():
    rng = np.random.default_rng(3)
    f = Frame(rng.integers(0, 256, (64, 64), dtype=np.uint8))
    assert load_frame(save_frame(f)) == f


def test_sequence_io(tmp_path):
    seq = render_sequence(SceneConfig(resolution=40, true_speed=5.0, noise_amplitude=0))
    paths = write_sequence(seq, tmp_path)
    assert paths[3].name == "frame_000003.pgm"
    back = read_sequence(tmp_path)
    assert [f.index for f in back] == list(range(len(seq)))
    assert back == seq


def test_frame_invariants():
    with pytest.raises(ValueError):
        Frame(np.zeros((0, 3), np.uint8))
    with pytest.raises(ValueError):
        Frame(np.zeros((2, 2), np.uint8), index=-1)
    with pytest.raises(ValueError):
        Frame(np.full((2, 2), 300))


# --- blur -----------------------------------------------------------------

def test_blur_radius_zero_is_identity():
    f = Frame(np.arange(12, dtype=np.uint8).reshape(3, 4))
    assert apply_blur(f, 0) == f


def test_blur_three_pixel_example():
    f = Frame(np.array([[0, 255, 0]], dtype=np.uint8))
    assert apply_blur(f, 1).pixels.tolist() == [[128, 85, 128]]


@settings(max_examples=60)
@given(frames(8), st.integers(0, 4))
def test_blur_matches_brute_force(frame, radius):
    expected = oracles.box_blur(frame.pixels.tolist(), radius)
    assert apply_blur(frame, radius).pixels.tolist() == expected


@given(st.integers(1, 20), st.integers(1, 20), st.integers(0, 255), st.integers(0, 30))
def test_blur_uniform_frame_unchanged(w, h, k, radius):
    f = Frame(np.full((h, w), k, np.uint8))
    out = apply_blur(f, radius)
    assert out == f
    assert int(out.pixels.sum()) == int(f.pixels.sum())


@given(frames(10), st.integers(0, 6))
def test_blur_range_does_not_expand(frame, radius):
    out = apply_blur(frame, radius).pixels
    assert out.min() >= frame.pixels.min() and out.max() <= frame.pixels.max()


# --- noise ----------------------------------------------------------------

@pytest.mark.parametrize("seed,n", [(0, 1), (1, 7), (12345, 1000), (2**32 + 5, 33)])
def test_lcg_jump_ahead_matches_sequential(seed, n):
    assert lcg_draws(seed, n).tolist() == oracles.lcg_sequence(seed, n)


def test_noise_amplitude_zero_identity():
    f = Frame(np.full((4, 4), 7, np.uint8))
    assert apply_noise(f, 0, 99) == f


def test_noise_deterministic_and_bounded():
    f = Frame(np.full((30, 30), 100, np.uint8))
    a, b = apply_noise(f, 5, 42), apply_noise(f, 5, 42)
    assert a == b
    delta = a.pixels.astype(int) - 100
    assert delta.min() >= -5 and delta.max() <= 5
    assert set(np.unique(delta)) == set(range(-5, 6))
    assert apply_noise(f, 5, 43) != a


def test_noise_clamps():
    lo = apply_noise(Frame(np.zeros((20, 20), np.uint8)), 50, 1)
    hi = apply_noise(Frame(np.full((20, 20), 255, np.uint8)), 50, 1)
    assert lo.pixels.min() == 0 and hi.pixels.max() == 255
    assert lo.pixels.max() > 0 and hi.pixels.min() < 255


# --- renderer -------------------------------------------------------------

CFG = SceneConfig(segment_length=1.0, resolution=400, vehicle_length=0.13, true_speed=1.0, noise_amplitude=0)


def _vehicle_cells(frame, cfg):
    ys, xs = np.nonzero(frame.pixels == cfg.vehicle_intensity)
    return set(zip(ys.tolist(), xs.tolist()))


def test_render_half_way_example():
    f = render_scene(CFG, 0.5)
    cells = _vehicle_cells(f, CFG)
    cols = sorted({j for _, j in cells})
    # front at 0.5 m -> pixel boundary 200; pixel centres inside [0.37, 0.5)
    assert cols[-1] + 1 == 200
    assert cols[0] == 148
    mpp = CFG.meters_per_pixel
    y_mid = CFG.height_px * mpp / 2
    expected = oracles.rasterize(
        CFG.width_px, CFG.height_px, mpp, 0.37, 0.5, y_mid - CFG.vehicle_width / 2, y_mid + CFG.vehicle_width / 2
    )
    assert cells == expected


def test_render_t0_flush_at_entry():
    assert render_scene(CFG, 0.0) == render_background(CFG)
    first_col = render_scene(CFG, 1 / CFG.frame_rate).pixels[:, 0]
    assert (first_col == CFG.vehicle_intensity).any()


def test_render_static_vehicle():
    cfg = SceneConfig(true_speed=0.0, noise_amplitude=0)
    assert render_scene(cfg, 0.3).pixels.tolist() == render_scene(cfg, 7.0).pixels.tolist()


def test_render_out_of_range():
    with pytest.raises(ValueError):
        render_scene(CFG, 1.5)
    with pytest.raises(ValueError):
        render_scene(CFG, -0.1)


def test_render_deterministic():
    assert render_scene(CFG, 0.42) == render_scene(CFG, 0.42)


@given(
    st.floats(0.05, 0.3), st.floats(0.03, 0.2), st.integers(50, 500), st.floats(0.0, 1.0)
)
def test_vehicle_pixel_count_within_rasterization_bound(length, width, resolution, frac):
    cfg = SceneConfig(vehicle_length=length, vehicle_width=width, resolution=resolution,
                      true_speed=1.0, noise_amplitude=0)
    t = length + frac * (1.0 - length)  # vehicle fully inside
    count = len(_vehicle_cells(render_scene(cfg, t), cfg))
    mpp = cfg.meters_per_pixel
    ideal = length * width / mpp**2
    perimeter = 2 * (length + width) / mpp
    assert abs(count - ideal) <= perimeter


def test_scene_invariants():
    with pytest.raises(ValueError):
        SceneConfig(vehicle_intensity=60, background_intensity=50, noise_amplitude=5)
    with pytest.raises(ValueError):
        SceneConfig(resolution=0)
    with pytest.raises(ValueError):
        SceneConfig(vehicle_length=2.0)
    with pytest.raises(ValueError):
        SceneConfig(height=10)  # 10 px x 2.5 mm < 9.3 cm


def test_frame_count():
    assert SceneConfig(true_speed=1.0).frame_count() == 26
    assert SceneConfig(true_speed=0.93).frame_count() == 27
    assert SceneConfig(true_speed=0.0).frame_count(10) == 10
