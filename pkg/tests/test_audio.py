import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.io import wavfile

from tempokit.audio import (AudioClip, FrontendConfig, augment_fps, band_center_frequencies,
                            compute_spectrogram, frame_centers, load_audio, num_frames,
                            triangular_filterbank, write_audio)
from tempokit.errors import (ClipTooShort, InvalidConfig, MalformedHeader,
                             UnsupportedEncoding, UnsupportedSampleRate)

SR = 44100


def sine(freq, seconds, sr=SR, amp=0.5):
    t = np.arange(int(seconds * sr)) / sr
    return AudioClip(amp * np.sin(2 * np.pi * freq * t), sr)


class TestLoadAudio:

    def test_one_second_mono(self, tmp_path):
        path = tmp_path / 'a.wav'
        wavfile.write(path, SR, np.zeros(SR, dtype=np.int16))
        clip = load_audio(path)
        assert len(clip.samples) == 44100
        assert clip.duration == 1.0

    def test_int16_scaling(self, tmp_path):
        path = tmp_path / 'a.wav'
        wavfile.write(path, SR, np.array([16384, -32768, 0], dtype=np.int16))
        np.testing.assert_array_equal(load_audio(path).samples, [0.5, -1.0, 0.0])

    def test_int32_and_uint8_scaling(self, tmp_path):
        wavfile.write(tmp_path / 'a.wav', SR, np.array([2 ** 30], dtype=np.int32))
        assert load_audio(tmp_path / 'a.wav').samples[0] == 0.5
        wavfile.write(tmp_path / 'b.wav', SR, np.array([192, 64], dtype=np.uint8))
        np.testing.assert_array_equal(load_audio(tmp_path / 'b.wav').samples, [0.5, -0.5])

    def test_stereo_downmix(self, tmp_path):
        path = tmp_path / 'a.wav'
        data = np.array([[0.2, 0.6]], dtype=np.float32)
        wavfile.write(path, SR, data)
        assert load_audio(path).samples[0] == pytest.approx(0.4)

    def test_wrong_rate(self, tmp_path):
        path = tmp_path / 'a.wav'
        wavfile.write(path, 22050, np.zeros(100, dtype=np.int16))
        with pytest.raises(UnsupportedSampleRate):
            load_audio(path)
        assert load_audio(path, expected_rate=None).sample_rate == 22050

    def test_not_a_wav(self, tmp_path):
        path = tmp_path / 'a.wav'
        path.write_bytes(b'this is not a riff file at all')
        with pytest.raises((MalformedHeader, UnsupportedEncoding)):
            load_audio(path)

    def test_missing(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_audio(tmp_path / 'nope.wav')

    def test_write_roundtrip(self, tmp_path):
        clip = sine(440, 0.1)
        write_audio(tmp_path / 'a.wav', clip)
        back = load_audio(tmp_path / 'a.wav')
        np.testing.assert_allclose(back.samples, clip.samples, atol=1 / 32768)


class TestFraming:

    def test_hop_and_frames(self):
        assert SR / 100 == 441
        assert num_frames(441000, SR, 100) == 1000
        assert num_frames(441000, SR, 105) == 1050
        assert num_frames(441001, SR, 100) == 1001

    @given(st.integers(1, 10 ** 7), st.sampled_from([95, 100, 105, 50, 99.5]))
    def test_frame_count_law(self, n, fps):
        frames = num_frames(n, SR, fps)
        assert frames == math.ceil(Fraction(n) * Fraction(fps) / SR)
        # round-based hop arithmetic agrees within one frame
        assert abs(frames - round(n / (SR / fps))) <= 1

    def test_frame_centers(self):
        np.testing.assert_array_equal(frame_centers(4, SR, 100), [0, 441, 882, 1323])
        # 44100 / 105 = 420 exactly
        assert frame_centers(3, SR, 105)[-1] == 840


class TestFilterbank:

    def test_centers_log_spaced(self):
        c = band_center_frequencies(81, 30, 17000)
        assert c[0] == pytest.approx(30) and c[-1] == pytest.approx(17000)
        ratios = c[1:] / c[:-1]
        np.testing.assert_allclose(ratios, ratios[0])

    def test_triangles_peak_and_nonnegative(self):
        fb, centers = triangular_filterbank(2048, SR, 81, 30, 17000)
        assert fb.shape == (1025, 81)
        assert np.all(fb >= 0) and np.all(fb <= 1)
        freqs = np.arange(1025) * SR / 2048
        # every band with a bin close to its center responds near 1 there
        for b in (40, 60, 80):
            k = np.argmin(np.abs(freqs - centers[b]))
            assert fb[k, b] == fb[:, b].max()


class TestSpectrogram:

    def test_shape_10s(self):
        spec = compute_spectrogram(AudioClip(np.zeros(10 * SR), SR))
        assert spec.values.shape == (1000, 81)

    def test_silence_baseline(self):
        spec = compute_spectrogram(AudioClip(np.zeros(SR), SR), FrontendConfig(log_offset=2.0))
        assert np.all(spec.values == np.log(2.0))

    def test_deterministic(self, rng):
        clip = AudioClip(rng.uniform(-1, 1, SR), SR)
        a = compute_spectrogram(clip).values
        b = compute_spectrogram(clip).values
        assert a.tobytes() == b.tobytes()

    def test_sinusoid_band_matches_dft_oracle(self):
        clip = sine(441, 1.0)
        spec = compute_spectrogram(clip)
        argmax_band = int(np.argmax(spec.values.mean(axis=0)))
        # direct DFT of one windowed frame, computed with an explicit sum
        ws = 2048
        frame = clip.samples[SR // 2 - ws // 2: SR // 2 + ws // 2]
        n = np.arange(ws)
        window = 0.5 - 0.5 * np.cos(2 * np.pi * n / ws)
        k = np.arange(ws // 2 + 1)
        dft = np.abs(np.exp(-2j * np.pi * np.outer(k, n) / ws) @ (frame * window))
        fb, centers = triangular_filterbank(ws, SR, 81, 30, 17000)
        oracle_band = int(np.argmax(dft @ fb))
        assert argmax_band == oracle_band
        assert oracle_band == int(np.argmin(np.abs(centers - 441)))

    def test_too_short(self):
        with pytest.raises(ClipTooShort):
            compute_spectrogram(AudioClip(np.zeros(100), SR))

    @pytest.mark.parametrize('cfg', [FrontendConfig(fps=0), FrontendConfig(window_size=1000),
                                     FrontendConfig(fmax=30000), FrontendConfig(log_offset=0),
                                     FrontendConfig(window_size=256)])
    def test_invalid_config(self, cfg):
        with pytest.raises(InvalidConfig):
            compute_spectrogram(AudioClip(np.zeros(SR), SR), cfg)


class TestAugment:

    def test_three_rates(self):
        clip = AudioClip(np.zeros(10 * SR), SR)
        specs = augment_fps(clip)
        assert [s.fps for s in specs] == [95, 100, 105]
        assert [s.num_frames for s in specs] == [950, 1000, 1050]

    def test_singleton_equals_plain(self, rng):
        clip = AudioClip(rng.uniform(-1, 1, SR), SR)
        (only,) = augment_fps(clip, fps_set=[100])
        assert only.values.tobytes() == compute_spectrogram(clip).values.tobytes()

    def test_empty_set(self):
        with pytest.raises(InvalidConfig):
            augment_fps(AudioClip(np.zeros(SR), SR), fps_set=[])
