import math
import struct

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import gradient_check, radam_lookahead_scalar
from tempokit.annotations import ClipAnnotation
from tempokit.audio import Spectrogram
from tempokit.errors import (BeatOutOfRange, ChecksumMismatch, DivergedLoss, EmptyDataset,
                             InvalidConfig, MalformedHeader, ShapeMismatch, StateShapeMismatch,
                             TempoOutOfRange, TruncatedFile, VersionUnsupported)
from tempokit.tcn import (EarlyStopping, ModelOutput, RAdamLookahead, TcnConfig,
                          TrainingConfig, TrainingHistory, clip_by_global_norm, encode_targets,
                          forward, global_norm, init_model, load_weights, multitask_loss,
                          optimizer_step, receptive_field, save_weights, train)
from tempokit.tcn.network import layer_shapes
from tempokit.tcn.serialization import read_tensors, write_tensors
from tempokit.tcn.targets import FrameTargets, round_half_up

SMALL = TcnConfig(num_bands=5, num_layers=2, num_filters=4, dilations=(1, 2), tempo_bins=300)


def random_spec(rng, frames=40, bands=5):
    return Spectrogram(rng.normal(size=(frames, bands)), 100.0)


class TestConfig:

    def test_receptive_field_defaults(self):
        assert receptive_field(TcnConfig()) == 1 + 4 * 2047 == 8189

    def test_receptive_field_small(self):
        assert receptive_field(TcnConfig(num_layers=1, dilations=(1,))) == 5
        assert receptive_field(TcnConfig(kernel_size=1)) == 1

    def test_receptive_field_empirical(self, rng):
        # perturbing one input frame moves exactly receptive_field output frames
        cfg = TcnConfig(num_bands=3, num_layers=3, kernel_size=3, num_filters=3,
                        dilations=(1, 2, 4), dropout_rate=0.0)
        w = init_model(cfg, 1, dtype=np.float64)
        x = rng.normal(size=(80, 3))
        base = forward(w, Spectrogram(x, 100.0)).beat_activation
        x[40] += 1.0
        moved = forward(w, Spectrogram(x, 100.0)).beat_activation
        assert np.count_nonzero(np.abs(moved - base) > 1e-12) == receptive_field(cfg)

    @pytest.mark.parametrize('kw', [dict(num_layers=3), dict(kernel_size=4),
                                    dict(dropout_rate=1.0), dict(tempo_bins=1)])
    def test_invalid(self, kw):
        with pytest.raises(InvalidConfig):
            init_model(TcnConfig(**kw))


class TestInit:

    def test_deterministic(self):
        a, b = init_model(SMALL, 3), init_model(SMALL, 3)
        assert all(a[n].tobytes() == b[n].tobytes() for n in a.tensors)

    def test_seed_sensitive(self):
        a, b = init_model(SMALL, 1), init_model(SMALL, 2)
        assert any(not np.array_equal(a[n], b[n]) for n in a.tensors)

    def test_parameter_count(self):
        cfg = TcnConfig()
        w = init_model(cfg)
        expected = 0
        in_ch = cfg.num_bands
        for _ in range(cfg.num_layers):
            expected += cfg.kernel_size * in_ch * cfg.num_filters + cfg.num_filters
            in_ch = cfg.num_filters
        expected += cfg.num_filters + 1 + cfg.num_filters * cfg.tempo_bins + cfg.tempo_bins
        assert w.num_parameters() == expected == 5 * 81 * 16 + 16 + 10 * (5 * 16 * 16 + 16) + 17 + 16 * 300 + 300


class TestForward:

    def test_shapes(self, rng):
        out = forward(init_model(SMALL), random_spec(rng, 37))
        assert out.beat_activation.shape == (37,)
        assert np.all((out.beat_activation >= 0) & (out.beat_activation <= 1))
        assert out.tempo_activation.sum() == pytest.approx(1, abs=1e-6)

    def test_zero_weights_uniform_tempo(self, rng):
        w = init_model(SMALL)
        for v in w.tensors.values():
            v[...] = 0
        out = forward(w, random_spec(rng))
        np.testing.assert_allclose(out.tempo_activation, 1 / 300, rtol=1e-6)
        np.testing.assert_allclose(out.beat_activation, 0.5)

    def test_dropout_only_in_training(self, rng):
        w = init_model(SMALL, 0, dtype=np.float64)
        spec = random_spec(rng)
        a = forward(w, spec).beat_activation
        b = forward(w, spec).beat_activation
        assert np.array_equal(a, b)
        c = forward(w, spec, training_mode=True, rng=np.random.default_rng(0)).beat_activation
        assert not np.array_equal(a, c)

    def test_band_mismatch(self, rng):
        with pytest.raises(ShapeMismatch):
            forward(init_model(SMALL), random_spec(rng, bands=7))

    @given(st.integers(1, 60))
    def test_any_length(self, frames):
        out = forward(init_model(SMALL), Spectrogram(np.ones((frames, 5)), 100.0))
        assert len(out.beat_activation) == frames

    def test_gradient_check(self):
        assert gradient_check(num_coords=24, seed=1) < 1e-4


class TestTargets:

    def test_beat_widening(self):
        t = encode_targets(ClipAnnotation([0.5], 120.0), 100, 300, 100)
        assert t.beat_target[50] == 1.0 and t.beat_target[49] == t.beat_target[51] == 0.5
        assert t.beat_target.sum() == 2.0

    def test_tempo_smoothing(self):
        t = encode_targets(ClipAnnotation([0.5], 120.0), 100, 300, 100)
        np.testing.assert_array_equal(t.tempo_target[119:122], [0.25, 0.5, 0.25])
        assert t.tempo_target.sum() == 1.0

    def test_half_up_rounding(self):
        # 0.5 s at 105 fps is frame 52.5; half-up gives 53, banker's would give 52
        assert round_half_up(52.5) == 53 and round(52.5) == 52
        t = encode_targets(ClipAnnotation([0.5], 120.0), 105, 300, 105)
        assert t.beat_target[53] == 1.0

    def test_tempo_label_follows_frame_rate(self):
        t = encode_targets(ClipAnnotation([0.5], 120.0), 105, 300, 105)
        assert int(np.argmax(t.tempo_target)) == round(120 * 100 / 105)
        t = encode_targets(ClipAnnotation([0.5], 120.0), 105, 300, 105, nominal_fps=None)
        assert int(np.argmax(t.tempo_target)) == 120

    def test_edge_bin_renormalized(self):
        t = encode_targets(ClipAnnotation([0.1], 299.0), 100, 300, 100)
        np.testing.assert_allclose(t.tempo_target[298:], [1 / 3, 2 / 3])

    def test_errors(self):
        with pytest.raises(BeatOutOfRange):
            encode_targets(ClipAnnotation([1.5], 120.0), 100, 300, 100)
        with pytest.raises(TempoOutOfRange):
            encode_targets(ClipAnnotation([0.1], 400.0), 100, 300, 100)

    def test_inferred_bpm(self):
        t = encode_targets(ClipAnnotation([0.0, 0.5, 1.0]), 100, 300, 150)
        assert int(np.argmax(t.tempo_target)) == 120


class TestLoss:

    def test_uniform_vs_one_hot(self):
        q = np.zeros(300)
        q[120] = 1
        out = ModelOutput(np.full(4, 0.5), np.full(300, 1 / 300), np.zeros(4), np.zeros(300))
        loss, _, _ = multitask_loss(out, FrameTargets(np.full(4, 0.5), q))
        beat_term = math.log(2)
        assert loss - beat_term == pytest.approx(math.log(300), abs=1e-9)
        assert math.log(300) == pytest.approx(5.7038, abs=1e-4)

    def test_minimum_is_target_entropy(self, rng):
        y = rng.uniform(0.05, 0.95, 10)
        q = rng.dirichlet(np.ones(300))
        out = ModelOutput(y, q)
        loss, gb, gt = multitask_loss(out, FrameTargets(y, q))
        entropy = -np.mean(y * np.log(y) + (1 - y) * np.log(1 - y)) - np.sum(q * np.log(q))
        assert loss == pytest.approx(entropy)
        assert np.allclose(gb, 0) and np.allclose(gt, 0)

    def test_logit_and_probability_paths_agree(self, rng):
        z = rng.normal(size=8)
        s = rng.normal(size=300)
        p = 1 / (1 + np.exp(-z))
        r = np.exp(s - s.max())
        r /= r.sum()
        t = FrameTargets(rng.uniform(0, 1, 8), rng.dirichlet(np.ones(300)))
        a = multitask_loss(ModelOutput(p, r, z, s), t)[0]
        b = multitask_loss(ModelOutput(p, r), t)[0]
        assert a == pytest.approx(b, rel=1e-10)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            multitask_loss(ModelOutput(np.zeros(3), np.ones(300) / 300),
                           FrameTargets(np.zeros(4), np.ones(300) / 300))


class TestOptimizer:

    def test_clip_norm_two_to_half(self):
        g = {'a': np.array([1.2, 0.0]), 'b': np.array([[1.6]])}
        assert global_norm(g) == pytest.approx(2.0)
        clipped, norm = clip_by_global_norm(g, 0.5)
        assert norm == pytest.approx(2.0)
        assert abs(global_norm(clipped) - 0.5) <= 1e-9
        np.testing.assert_allclose(clipped['a'], [0.3, 0.0])

    @given(st.lists(st.floats(-100, 100), min_size=1, max_size=20), st.floats(0.01, 10))
    def test_clip_property(self, values, max_norm):
        clipped, _ = clip_by_global_norm({'x': np.array(values)}, max_norm)
        assert global_norm(clipped) <= max_norm + 1e-9

    def test_rho_threshold(self):
        opt = RAdamLookahead({'p': np.zeros(1)})
        assert opt.rho(1) == pytest.approx(1.0)
        assert opt.rho(5) > 4 >= opt.rho(4)

    def test_scalar_trajectory(self):
        params = {'p': np.array([1.0])}
        opt = RAdamLookahead(params, clip_norm=None)
        oracle = radam_lookahead_scalar(1.0, 1.0, 10)
        for t in range(10):
            opt.step(params, {'p': np.array([1.0])})
            assert params['p'][0] == pytest.approx(oracle[t], abs=1e-6)

    def test_sync_midpoint(self):
        params = {'p': np.array([0.0])}
        opt = RAdamLookahead(params, clip_norm=None, k=5, alpha=0.5)
        fast = []
        for t in range(5):
            before = params['p'][0]
            opt.step(params, {'p': np.array([1.0])})
            fast.append(params['p'][0])
        # the fifth step publishes the midpoint of slow start (0) and the fast endpoint
        fast_end = 0.0 - 0.0015 * 4
        rho = opt.rho(5)
        r = math.sqrt((rho - 4) * (rho - 2) * opt.rho_inf
                      / ((opt.rho_inf - 4) * (opt.rho_inf - 2) * rho))
        fast_end -= 0.0015 * r * 1.0 / (1.0 + 1e-8)
        assert fast[-1] == pytest.approx(0.5 * fast_end, abs=1e-12)
        assert opt.slow['p'][0] == fast[-1]

    def test_state_mismatch(self):
        params = {'p': np.zeros(2)}
        opt = RAdamLookahead(params)
        with pytest.raises(StateShapeMismatch):
            opt.step(params, {'p': np.zeros(3)})

    def test_functional_wrapper(self):
        w = init_model(SMALL)
        grads = {n: np.ones_like(v) for n, v in w.tensors.items()}
        state, w2 = optimizer_step(None, w, grads, TrainingConfig(learning_rate=0.01))
        assert w2 is w and state.t == 1 and state.lr == 0.01


class TestTraining:

    def _toy(self, n, rng, frames=120):
        data = []
        for i in range(n):
            period = 25 + 3 * i
            beats = np.arange(5, frames, period) / 100.0
            spec = np.zeros((frames, 5))
            spec[np.round(beats * 100).astype(int)] = 1.0
            spec += 0.05 * rng.normal(size=spec.shape)
            ann = ClipAnnotation(beats, 6000 / period)
            data.append((Spectrogram(spec, 100.0), encode_targets(ann, 100, 300, frames)))
        return data

    def test_loss_decreases(self, rng):
        data = self._toy(20, rng)
        _, h = train(init_model(SMALL, 0), data, TrainingConfig(max_epochs=30,
                                                                early_stop_patience=30))
        assert h.train_loss[-1] < h.train_loss[0]
        assert len(h.epochs) == 30

    def test_deterministic(self, rng):
        data = self._toy(4, rng)
        cfg = TrainingConfig(max_epochs=4, seed=7)
        a = train(init_model(SMALL, 0), data, cfg)
        b = train(init_model(SMALL, 0), data, cfg)
        np.testing.assert_allclose(a[1].train_loss, b[1].train_loss, rtol=0, atol=1e-12)
        assert all(a[0][n].tobytes() == b[0][n].tobytes() for n in a[0].tensors)

    def test_early_stopping_patience(self):
        stopper = EarlyStopping(3)
        for epoch, loss in enumerate([1.0, 1.1, 1.2, 1.3, 1.4], start=1):
            stopper.update(epoch, loss)
            if stopper.should_stop:
                break
        assert epoch == 4 and stopper.best_epoch == 1

    def test_history_csv(self, tmp_path, rng):
        _, h = train(init_model(SMALL), self._toy(2, rng), TrainingConfig(max_epochs=3))
        h.to_csv(tmp_path / 'h.csv')
        lines = (tmp_path / 'h.csv').read_text().splitlines()
        assert lines[0] == 'epoch,train_loss,val_loss' and len(lines) == 1 + 3

    def test_errors(self, rng):
        with pytest.raises(EmptyDataset):
            train(init_model(SMALL), [])
        data = self._toy(1, rng)
        with pytest.raises(DivergedLoss):
            w = init_model(SMALL)
            w.tensors['tempo.bias'][:] = np.nan
            train(w, data, TrainingConfig(max_epochs=1))
        with pytest.raises(InvalidConfig):
            train(init_model(SMALL), data, TrainingConfig(learning_rate=0))


class TestSerialization:

    def test_round_trip(self, tmp_path):
        w = init_model(TcnConfig(num_layers=3, dilations=(1, 2, 4), dropout_rate=0.2), 4)
        save_weights(w, tmp_path / 'w.tcnw')
        back = load_weights(tmp_path / 'w.tcnw')
        assert back.cfg == w.cfg
        assert list(back.tensors) == list(layer_shapes(w.cfg))
        assert all(back[n].tobytes() == w[n].tobytes() for n in w.tensors)

    def test_flipped_byte(self, tmp_path):
        path = tmp_path / 'w.tcnw'
        save_weights(init_model(SMALL), path)
        data = bytearray(path.read_bytes())
        data[len(data) // 2] ^= 0x01
        path.write_bytes(bytes(data))
        with pytest.raises(ChecksumMismatch):
            load_weights(path)

    def test_version(self, tmp_path):
        path = tmp_path / 'w.tcnw'
        save_weights(init_model(SMALL), path)
        data = bytearray(path.read_bytes())
        data[4:8] = struct.pack('<I', 999)
        path.write_bytes(bytes(data))
        with pytest.raises(VersionUnsupported):
            load_weights(path)

    def test_truncated(self, tmp_path):
        path = tmp_path / 'w.tcnw'
        save_weights(init_model(SMALL), path)
        path.write_bytes(path.read_bytes()[:100])
        with pytest.raises((TruncatedFile, ChecksumMismatch)):
            load_weights(path)
        path.write_bytes(b'TCN')
        with pytest.raises(TruncatedFile):
            load_weights(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / 'w.tcnw'
        path.write_bytes(b'RIFF' + bytes(20))
        with pytest.raises(MalformedHeader):
            load_weights(path)

    def test_generic_tensors(self, tmp_path):
        tensors = {'x': np.arange(6, dtype=np.float32).reshape(2, 3), 'scalar': np.float32(2)}
        write_tensors(tmp_path / 't.tcnw', tensors)
        back = read_tensors(tmp_path / 't.tcnw')
        np.testing.assert_array_equal(back['x'], tensors['x'])
        assert back['scalar'].shape == ()

    def test_not_weights(self, tmp_path):
        write_tensors(tmp_path / 't.tcnw', {'x': np.zeros(3)})
        with pytest.raises(MalformedHeader):
            load_weights(tmp_path / 't.tcnw')
