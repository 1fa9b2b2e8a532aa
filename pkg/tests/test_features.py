import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rmelsteg.audio_io import AudioClip
from rmelsteg.embedders import EmbedderSpec, embed
from rmelsteg.errors import Empty, TooShort, ValidationError
from rmelsteg.features import (
    EXTRACTORS,
    CalibrationSpec,
    CalibMode,
    FeatureConfig,
    content_seed,
    extract,
    extract_features,
    feature_names,
    moments,
    reembed,
)
from rmelsteg.steg_analysis import plane_flips
from rmelsteg.synth import synth_cover


def moments_oracle(values):
    """Population moments in 50-digit arithmetic."""
    with mpmath.workdps(50):
        v = [mpmath.mpf(int(x)) for x in values]
        n = len(v)
        mu = sum(v) / n
        m2 = sum((x - mu) ** 2 for x in v) / n
        m3 = sum((x - mu) ** 3 for x in v) / n
        m4 = sum((x - mu) ** 4 for x in v) / n
        sd = mpmath.sqrt(m2)
        return float(mu), float(sd), float(m3 / sd ** 3), float(m4 / m2 ** 2)


def test_moments_examples():
    mu, sd, sk, ku = moments([1, 2, 3, 4])
    assert mu == 2.5 and sd == pytest.approx(np.sqrt(1.25), rel=1e-15)
    assert sk == pytest.approx(0.0, abs=1e-15)
    assert ku == pytest.approx(1.64, rel=1e-12)


def test_moments_degenerate():
    assert moments([7.0] * 10) == (7.0, 0.0, 0.0, 0.0)
    assert moments([0.1] * 3) == (pytest.approx(0.1), 0.0, 0.0, 0.0)
    assert moments([5.0]) == (5.0, 0.0, 0.0, 0.0)
    with pytest.raises(Empty):
        moments([])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-10_000, 10_000), min_size=2, max_size=60).filter(lambda v: len(set(v)) > 1))
def test_moments_against_high_precision(values):
    got = moments(values)
    ref = moments_oracle(values)
    for g, r in zip(got, ref):
        assert g == pytest.approx(r, rel=1e-12, abs=1e-12)


def test_moments_along_axis(rng):
    x = rng.normal(size=(300, 4))
    mu, sd, sk, ku = moments(x, axis=0)
    for j in range(4):
        assert np.allclose([mu[j], sd[j], sk[j], ku[j]], moments(x[:, j]), rtol=1e-12)


def test_gaussian_kurtosis():
    x = np.random.default_rng(1).normal(size=1_000_000)
    mu, sd, sk, ku = moments(x)
    assert ku == pytest.approx(3.0, abs=0.05)
    assert abs(sk) < 0.02


def test_feature_length_and_names(short_covers):
    fv = extract_features(short_covers[0])
    assert len(fv) == 116 and fv.names == feature_names(29)
    assert fv.names[:4] == ["ch01_mean", "ch01_std", "ch01_skew", "ch01_kurt"]
    assert len(extract_features(short_covers[0], M=10)) == 40


def test_zero_capacity_calibration_gives_zero_features(short_covers):
    calib = CalibrationSpec.targeted(EmbedderSpec("lsb_replace", capacity_bps=0))
    assert np.all(extract_features(short_covers[0], calib).values == 0)


def test_deterministic_and_content_seeded(short_covers):
    a = extract_features(short_covers[1]).values
    b = extract_features(short_covers[1]).values
    assert np.array_equal(a, b)
    assert content_seed(short_covers[1]) != content_seed(short_covers[2])
    c = extract_features(short_covers[1], CalibrationSpec.universal(seed=3)).values
    assert not np.array_equal(a, c)


def test_universal_mode_forces_lsb_reembedder():
    c = CalibrationSpec(EmbedderSpec("cox_dct", alpha=0.1), CalibMode.UNIVERSAL)
    assert c.reembedder == EmbedderSpec("lsb_replace", capacity_bps=1)


def test_silence_and_constant_clip_are_finite():
    for v in (0, 1000):
        fv = extract_features(AudioClip(np.full(4096, v), 44100))
        assert np.all(np.isfinite(fv.values))
    for name in EXTRACTORS:
        assert np.all(np.isfinite(extract(name, AudioClip(np.zeros(4096, int), 44100)).values))


def test_too_short_and_stereo():
    with pytest.raises(TooShort):
        extract_features(AudioClip(np.zeros(1025, int), 44100))
    extract_features(AudioClip(np.arange(1026) % 7, 44100))
    with pytest.raises(ValidationError):
        extract_features(AudioClip(np.zeros(4096, int), 44100, 2))
    with pytest.raises(ValidationError):
        extract("bogus", AudioClip(np.zeros(4096, int), 44100))


def test_reembed_of_stego_touches_only_plane_one(short_covers):
    stego = embed(short_covers[3], EmbedderSpec("lsb_match", capacity_bps=0.5, seed=1))
    twin = reembed(stego, CalibrationSpec.universal())
    assert np.all(plane_flips(stego, twin, range(2, 17)) == 0)


@pytest.mark.parametrize("name", EXTRACTORS)
def test_extractors_have_4m_values(short_covers, name):
    cfg = FeatureConfig(M=12)
    assert len(extract(name, short_covers[0], cfg=cfg)) == 48


def test_calibration_contracts_toward_zero_on_stego():
    """The mean energy difference shrinks when the clip already carries LSB noise."""
    covers = [synth_cover(5000 + i, duration=1.0) for i in range(100)]
    spec = EmbedderSpec("lsb_replace", capacity_bps=1)
    cover_mu, stego_mu = [], []
    for j, c in enumerate(covers):
        cover_mu.append(np.mean(np.abs(extract_features(c).values[0::4])))
        s = embed(c, spec.with_seed(j))
        stego_mu.append(np.mean(np.abs(extract_features(s).values[0::4])))
    assert np.mean(cover_mu) > np.mean(stego_mu)
