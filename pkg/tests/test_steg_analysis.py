import json

import numpy as np
import pytest

from rmelsteg.audio_io import AudioClip
from rmelsteg.embedders import EmbedderSpec, embed
from rmelsteg.errors import BadPlane, Empty, EmptyCorpus, LengthMismatch
from rmelsteg.steg_analysis import (
    ber,
    bitplane,
    noise_pmf,
    plane_flips,
    sensitivity,
    sensitivity_report,
    steg_noise,
)


def test_bitplane_examples():
    clip = AudioClip(np.array([0, 1, 2, 3]), 8000)
    assert bitplane(clip, 1).tolist() == [0, 1, 0, 1]
    assert bitplane(clip, 2).tolist() == [0, 0, 1, 1]
    minus_one = AudioClip(np.array([-1]), 8000)
    assert all(bitplane(minus_one, i)[0] == 1 for i in range(1, 17))
    ext = AudioClip(np.array([32767, -32768]), 8000)
    assert bitplane(ext, 16).tolist() == [0, 1]
    assert bitplane(ext, 15).tolist() == [1, 0]


@pytest.mark.parametrize("i", [0, 17, -1])
def test_bad_plane(i):
    with pytest.raises(BadPlane):
        bitplane(AudioClip(np.array([1]), 8000), i)


def test_ber():
    assert ber([0, 1, 1, 0], [0, 1, 1, 0]) == 0
    assert ber([0, 1, 1, 0], [1, 1, 0, 0]) == 0.5
    with pytest.raises(Empty):
        ber([], [])
    with pytest.raises(LengthMismatch):
        ber([1], [1, 0])


def test_sensitivity_symmetric_and_identity(noise_clip, rng):
    other = AudioClip(rng.integers(-20000, 20000, size=len(noise_clip)), 44100)
    for i in (1, 5, 16):
        assert sensitivity(noise_clip, noise_clip, i) == 0
        assert sensitivity(noise_clip, other, i) == sensitivity(other, noise_clip, i)


def test_sensitivity_unclamped_for_anticorrelated_plane():
    cover = AudioClip(np.arange(1000) * 2, 8000)
    stego = AudioClip(np.arange(1000) * 2 + 1, 8000)
    assert sensitivity(cover, stego, 1) == 2.0


def test_length_mismatch():
    with pytest.raises(LengthMismatch):
        sensitivity(AudioClip(np.zeros(3, int), 8000), AudioClip(np.zeros(4, int), 8000), 1)
    with pytest.raises(LengthMismatch):
        steg_noise(AudioClip(np.zeros(3, int), 8000), AudioClip(np.zeros(3, int), 16000))


def test_noise_pmf():
    pmf = noise_pmf([0, 1, -1, 1])
    assert pmf.as_dict() == {-1: 0.25, 0: 0.25, 1: 0.5}
    assert pmf.prob(7) == 0
    assert pmf.probs.sum() == pytest.approx(1.0)
    with pytest.raises(Empty):
        noise_pmf([])


def test_lsb_replace_noise_pmf(noise_clip):
    stego = embed(noise_clip, EmbedderSpec("lsb_replace", capacity_bps=1, seed=2))
    pmf = noise_pmf(steg_noise(noise_clip, stego))
    assert set(pmf.as_dict()) == {-1, 0, 1}
    assert pmf.prob(0) == pytest.approx(0.5, abs=0.01)


def test_plane_flips_matches_sensitivity(noise_clip):
    stego = embed(noise_clip, EmbedderSpec("lsb_match", capacity_bps=0.5, seed=2))
    flips = plane_flips(noise_clip, stego, [1, 2, 3])
    for k, i in enumerate([1, 2, 3]):
        assert 2 * flips[k] / len(noise_clip) == pytest.approx(sensitivity(noise_clip, stego, i))


def test_report_pooling_and_serialisation(short_covers):
    spec = EmbedderSpec("lsb_replace", capacity_bps=2, planes=2, seed=5)
    rep = sensitivity_report(short_covers, spec)
    assert rep.n_clips == 20 and rep.n_samples == sum(len(c) for c in short_covers)
    assert rep.s[0] == pytest.approx(1.0, abs=0.03) and rep.s[1] == pytest.approx(1.0, abs=0.03)
    assert np.all(rep.s[2:] == 0)
    assert rep.anomalous == []
    d = json.loads(rep.to_json())
    assert d["planes"] == [1, 2, 3, 4, 5, 6] and d["pooling"] == "sample-weighted"
    lines = rep.to_csv().splitlines()
    assert lines[0] == "method,param,S1,S2,S3,S4,S5,S6"
    assert lines[1].startswith("lsb_replace,C=2,")


def test_report_flags_anticorrelation():
    covers = [AudioClip(np.arange(2000) * 2, 8000)]
    rep = sensitivity_report(covers, EmbedderSpec("ss_time_add", alpha=1.0), planes=[1])
    assert rep.s[0] == 2.0 and rep.anomalous == [1]


def test_report_empty():
    with pytest.raises(EmptyCorpus):
        sensitivity_report([], EmbedderSpec("lsb_replace", capacity_bps=1))
