import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from waggledance.attention import WaggleRun
from waggledance.circular import angular_distance
from waggledance.config import BandpassConfig
from waggledance.orientation import (
    NoSignalError, OrientationDecoder, UnresolvedDirectionError, accumulate_spectrum,
    decode_orientation, decode_run, diff_image, disambiguate, dog_bandpass, dog_profile,
    frequency_grid, principal_axis,
)
from waggledance.synth import render_ellipse, unit


def naive_dft2(img):
    """Direct double sum over all pixels for every frequency pair."""
    h, w = img.shape
    out = np.zeros((h, w), dtype=complex)
    for u in range(h):
        for v in range(w):
            acc = 0j
            for y in range(h):
                for x in range(w):
                    acc += img[y, x] * complex(math.cos(-2 * math.pi * (u * y / h + v * x / w)),
                                               math.sin(-2 * math.pi * (u * y / h + v * x / w)))
            out[u, v] = acc
    return out


def waggle_stack(direction_deg, n=60, size=50, amplitude=6.0, freq=13.0, speed=0.4,
                 noise=0.0, seed=0, offset=(0.0, 0.0)):
    """Snippet stack and trace of a dancer waggling along ``direction_deg``.

    The body is centred in the snippet (as cropped around the detection) while
    the trace carries forward progress plus the lateral throw.
    """
    rng = np.random.default_rng(seed)
    d = unit(direction_deg)
    lat = np.array([-d[1], d[0]])
    frames, trace = [], []
    for t in range(n):
        throw = amplitude * math.sin(2 * math.pi * freq * t / 100.0)
        canvas = np.full((size, size), 50.0)
        cx = size / 2 + offset[0] + throw * lat[0]
        cy = size / 2 + offset[1] + throw * lat[1]
        render_ellipse(canvas, cx, cy, direction_deg, 21.0, 8.0, 190.0)
        if noise:
            canvas += rng.normal(0, noise, canvas.shape)
        frames.append(np.clip(canvas, 0, 255))
        pos = np.array([100.0, 100.0]) + t * speed * d + throw * lat
        trace.append((t, *pos))
    return np.array(frames).astype(np.uint8), np.array(trace)


# --- difference images -------------------------------------------------------------

def test_diff_identical_frames_zero():
    a = np.random.default_rng(0).integers(0, 256, (50, 50))
    assert not diff_image(a, a).any()


def test_diff_antisymmetric_and_range():
    rng = np.random.default_rng(1)
    a, b = rng.integers(0, 256, (2, 20, 20), dtype=np.uint8)
    np.testing.assert_array_equal(diff_image(a, b), -diff_image(b, a))
    full = diff_image(np.full((3, 3), 255, np.uint8), np.zeros((3, 3), np.uint8))
    assert full.max() == 255 and diff_image(np.zeros((3, 3)), np.full((3, 3), 255)).min() == -255


def test_diff_shape_mismatch():
    with pytest.raises(ValueError):
        diff_image(np.zeros((4, 4)), np.zeros((4, 5)))


def test_diff_lobes_of_shifted_ellipse_lie_along_shift():
    a = np.full((50, 50), 50.0)
    b = a.copy()
    render_ellipse(a, 25, 25, 0.0, 21, 8, 190)       # vertical body
    render_ellipse(b, 30, 25, 0.0, 21, 8, 190)       # thrown 5 px to the right
    d = diff_image(b, a)
    ys, xs = np.mgrid[:50, :50]
    pos, neg = np.clip(d, 0, None), np.clip(-d, 0, None)
    cpos = (xs * pos).sum() / pos.sum(), (ys * pos).sum() / pos.sum()
    cneg = (xs * neg).sum() / neg.sum(), (ys * neg).sum() / neg.sum()
    assert cpos[0] > 27.5 > cneg[0]                  # lobes separated laterally
    assert abs(cpos[1] - cneg[1]) < 0.5              # no vertical separation


# --- spectrum ----------------------------------------------------------------------

def test_fft_matches_naive_dft():
    img = np.random.default_rng(2).standard_normal((8, 8))
    np.testing.assert_allclose(np.fft.fft2(img), naive_dft2(img), atol=1e-9)


def test_accumulated_spectrum_matches_naive_oracle():
    stack = np.random.default_rng(3).integers(0, 256, (3, 8, 8)).astype(float)
    expected = sum(np.abs(naive_dft2(stack[t] - stack[t - 1])) ** 2 for t in (1, 2))
    np.testing.assert_allclose(accumulate_spectrum(stack), np.fft.fftshift(expected), rtol=1e-9)


def test_identical_frames_give_zero_spectrum():
    assert not accumulate_spectrum(np.full((5, 50, 50), 77)).any()


def test_short_stack_rejected():
    with pytest.raises(ValueError):
        accumulate_spectrum(np.zeros((1, 8, 8)))
    with pytest.raises(ValueError):
        accumulate_spectrum(np.zeros((8, 8)))


def test_grating_gives_symmetric_maxima_orthogonal_to_stripes():
    ys, xs = np.mgrid[:50, :50]
    grating = 100 * np.cos(2 * math.pi * 5 * xs / 50)     # vertical stripes, 5 cycles
    spec = accumulate_spectrum(np.stack([np.zeros((50, 50)), grating]))
    peaks = np.argwhere(spec > 0.5 * spec.max())
    ky, kx = frequency_grid(spec.shape)
    got = sorted((int(ky[tuple(p)]), int(kx[tuple(p)])) for p in peaks)
    assert got == [(0, -5), (0, 5)]


def test_spectrum_translation_invariant():
    b, _ = waggle_stack(30.0, n=20)
    c = np.roll(b, (3, -4), axis=(1, 2))     # identical pattern, moved within the snippet
    sb, sc = accumulate_spectrum(b), accumulate_spectrum(c)
    np.testing.assert_allclose(sc, sb, rtol=1e-6, atol=1e-6 * sb.max())


# --- bandpass ----------------------------------------------------------------------

def test_ring_radius_from_displacement():
    assert BandpassConfig(displacement=5).k == 5.0
    assert BandpassConfig(displacement=7).k == pytest.approx(3.5714, abs=1e-4)


def test_dog_peak_at_k_and_dc_suppressed():
    cfg = BandpassConfig()
    assert dog_profile(cfg.k, cfg) == pytest.approx(1.0)
    r = np.linspace(0, 25, 2501)
    assert dog_profile(r, cfg).max() <= 1.0 + 1e-12
    for x in (5, 6, 7):
        c = BandpassConfig(displacement=x)
        dc = np.zeros((50, 50))
        dc[25, 25] = 1.0
        assert dog_bandpass(dc, c)[25, 25] <= 0.01     # effective (clamped) gain at DC


def test_impulse_at_ring_preserved():
    cfg = BandpassConfig(displacement=5)
    spec = np.zeros((50, 50))
    spec[25, 25 + 5] = 3.0
    out = dog_bandpass(spec, cfg)
    assert out[25, 30] == pytest.approx(3.0)
    assert (dog_bandpass(np.ones((50, 50)), cfg) >= 0).all()


# --- principal axis ----------------------------------------------------------------

def impulses(ky, kx, size=50):
    spec = np.zeros((size, size))
    c = size // 2
    spec[c + ky, c + kx] = 1.0
    spec[c - ky, c - kx] = 1.0
    return spec


# Impulse offsets are given in (row, column) index order.

def test_impulses_at_plus_minus_k_0_give_axis_90():
    axis, conf = principal_axis(impulses(5, 0))
    assert axis == pytest.approx(90.0)
    assert conf >= 1e5


def test_impulses_at_plus_minus_0_k_give_axis_0():
    axis, _ = principal_axis(impulses(0, 5))
    assert axis == pytest.approx(0.0, abs=1e-9)


def test_zero_spectrum_raises():
    with pytest.raises(NoSignalError):
        principal_axis(np.zeros((50, 50)))


def test_isotropic_spectrum_is_low_confidence():
    ky, kx = frequency_grid((50, 50))
    spec = np.exp(-(kx ** 2 + ky ** 2) / 20.0)
    _, conf = principal_axis(spec)
    assert conf < 1.2


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 360), st.floats(3, 15))
def test_axis_rotates_with_impulse_pair(theta, radius):
    # lateral frequency direction theta (comb angle) -> axis theta + 90
    spec = np.zeros((50, 50))
    dx, dy = radius * unit(theta)
    for s in (1, -1):
        x, y = 25 + s * dx, 25 + s * dy
        x0, y0 = int(math.floor(x)), int(math.floor(y))
        for xi, wx in ((x0, 1 - (x - x0)), (x0 + 1, x - x0)):
            for yi, wy in ((y0, 1 - (y - y0)), (y0 + 1, y - y0)):
                spec[yi, xi] += wx * wy
    axis, _ = principal_axis(spec)
    assert angular_distance(2 * axis, 2 * ((theta + 90) % 180)) / 2 <= 1.0


# --- disambiguation ----------------------------------------------------------------

def test_trace_up_gives_zero_and_reverse_gives_180():
    trace = np.array([[i, 50.0, 100.0 - i] for i in range(30)])
    assert disambiguate(trace, 0.0) == 0.0
    assert disambiguate(trace[::-1], 0.0) == 180.0


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 360), st.integers(10, 80))
def test_time_reversal_flips_direction(direction, n):
    _, trace = waggle_stack(direction, n=n)
    axis = direction % 180
    fwd = disambiguate(trace, axis)
    back = disambiguate(trace[::-1], axis)
    assert angular_distance(fwd, back) == pytest.approx(180.0)
    assert angular_distance(fwd, direction) <= 1e-6


def test_short_trace_unresolved_keeps_axis():
    with pytest.raises(UnresolvedDirectionError) as err:
        disambiguate(np.zeros((9, 3)), 42.0)
    assert err.value.axis_deg == 42.0


# --- full decode -------------------------------------------------------------------

def test_clean_dancer_at_zero():
    stack, trace = waggle_stack(0.0)
    res = decode_orientation(stack, trace)
    assert angular_distance(res.direction_deg, 0.0) <= 3.0


def test_ellipse_at_37_degrees():
    stack, trace = waggle_stack(37.0)
    res = decode_orientation(stack, trace)
    assert angular_distance(2 * res.axis_deg, 74.0) / 2 <= 3.0


def test_215_selects_correct_branch():
    stack, trace = waggle_stack(215.0, noise=5.0, seed=4)
    res = decode_orientation(stack, trace)
    assert angular_distance(res.direction_deg, 215.0) <= 10.0


def test_rotation_equivariance():
    stack, trace = waggle_stack(20.0, noise=4.0, seed=5)
    base = decode_orientation(stack, trace)
    rot = np.rot90(stack, k=-1, axes=(1, 2))                 # clockwise quarter turn
    # clockwise image rotation maps (x, y) -> (H - 1 - y, x)
    rtrace = np.column_stack([trace[:, 0], 300 - trace[:, 2], trace[:, 1]])
    res = decode_orientation(rot, rtrace)
    assert angular_distance(res.direction_deg, base.direction_deg + 90.0) <= 1e-6


@settings(max_examples=25, deadline=None)
@given(st.floats(0, 360), st.integers(0, 10_000))
def test_direction_consistent_with_axis(direction, seed):
    stack, trace = waggle_stack(direction, n=40, noise=6.0, seed=seed)
    res = decode_orientation(stack, trace)
    assert res.direction_deg % 180 == pytest.approx(res.axis_deg, abs=1e-9) or \
        abs(res.direction_deg % 180 - res.axis_deg) == pytest.approx(180.0, abs=1e-9)
    assert 0 <= res.axis_deg < 180 and 0 <= res.direction_deg < 360
    assert res.confidence >= 1.0


def test_noisy_batch_error_statistics():
    rng = np.random.default_rng(6)
    errs = []
    for i in range(200):
        theta = rng.uniform(0, 360)
        stack, trace = waggle_stack(theta, n=int(rng.integers(30, 90)), noise=8.0,
                                    amplitude=rng.uniform(5, 7), seed=i)
        res = decode_orientation(stack, trace)
        errs.append((res.direction_deg - theta + 180) % 360 - 180)
    errs = np.array(errs)
    assert np.abs(errs).mean() <= 5.0
    assert errs.std() <= 8.0


def test_decode_run_annotates_in_place():
    stack, trace = waggle_stack(120.0)
    run = WaggleRun(0, 0, 600.0, trace, stack)
    res = decode_run(run)
    assert run.direction_deg == res.direction_deg and run.axis_deg == res.axis_deg
    short = WaggleRun(1, 0, 50.0, trace[:5], stack[:5])
    assert decode_run(short) is None
    assert short.axis_deg is not None and short.direction_deg is None


def test_decoder_estimator():
    runs = [WaggleRun(i, 0, 600.0, *waggle_stack(a)[::-1]) for i, a in enumerate((10.0, 250.0))]
    out = OrientationDecoder().fit().transform(runs)
    assert out.shape == (2, 3)
    assert angular_distance(out[0, 1], 10.0) < 3 and angular_distance(out[1, 1], 250.0) < 3
    with pytest.raises(ValueError):
        OrientationDecoder(sigma_inner=5.0, sigma_outer=1.0).transform(runs)
