import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from synthsearch.dsp import (
    ControlSignal,
    midi_to_hz,
    mod_matrix,
    render_adsr,
    render_lfo,
    render_noise,
    render_sine_vco,
    render_squaresaw_vco,
    upsample_control,
)

CR = 480
SR = 48_000


class TestMidiToHz:
    def test_concert_a(self):
        assert midi_to_hz(69) == 440.0

    def test_octave_doubling(self):
        assert midi_to_hz(81) == pytest.approx(880.0, abs=1e-9)

    def test_octave_halving(self):
        assert midi_to_hz(57) == pytest.approx(220.0, abs=1e-9)

    def test_vectorized(self):
        out = midi_to_hz(np.array([69.0, 81.0]))
        assert out == pytest.approx([440.0, 880.0])


def adsr_reference(t, attack, decay, sustain, release, alpha, note_on):
    """Independent scalar evaluation of the piecewise envelope."""
    if t < note_on:
        if t < attack:
            return (t / attack) ** alpha
        if t < attack + decay:
            return 1.0 + (sustain - 1.0) * (t - attack) / decay
        return sustain
    if t < note_on + release:
        return sustain * (1.0 - (t - note_on) / release) ** alpha
    return 0.0


class TestAdsr:
    def test_starts_at_zero(self):
        env = render_adsr(0.1, 0.1, 0.5, 0.1, 1.0, 0.5, 480)
        assert env.values[0] == 0.0

    def test_linear_attack_midpoint(self):
        # alpha=1, attack=0.2 s: at t=0.1 s the ramp is exactly 0.5
        env = render_adsr(0.2, 0.1, 0.5, 0.1, 1.0, 0.5, 480)
        assert env.values[48] == pytest.approx(0.5, abs=1e-12)

    def test_sustain_plateau(self):
        env = render_adsr(0.1, 0.1, 0.6, 0.1, 1.0, 1.5, 960)
        hold = env.values[(np.arange(960) / CR > 0.3) & (np.arange(960) / CR < 1.4)]
        assert np.all(hold == 0.6)

    def test_matches_piecewise_oracle(self):
        attack, decay, sustain, release, alpha, note_on = 0.15, 0.2, 0.6, 0.3, 2.3, 0.8
        n = 960
        env = render_adsr(attack, decay, sustain, release, alpha, note_on, n)
        expected = np.array([
            adsr_reference(k / CR, attack, decay, sustain, release, alpha, note_on)
            for k in range(n)
        ])
        assert np.max(np.abs(env.values - expected)) < 1e-9

    def test_rejects_negative_duration(self):
        with pytest.raises(ValueError):
            render_adsr(-0.1, 0.1, 0.5, 0.1, 1.0, 0.5, 480)

    def test_rejects_zero_length(self):
        with pytest.raises(ValueError):
            render_adsr(0.1, 0.1, 0.5, 0.1, 1.0, 0.5, 0)

    @given(
        attack=st.floats(0.0, 1.0),
        decay=st.floats(0.0, 1.0),
        sustain=st.floats(0.0, 1.0),
        release=st.floats(0.0, 1.0),
        alpha=st.floats(0.1, 6.0),
        note_on=st.floats(0.0, 2.0),
    )
    def test_range_invariant(self, attack, decay, sustain, release, alpha, note_on):
        env = render_adsr(attack, decay, sustain, release, alpha, note_on, 240)
        assert np.all(env.values >= 0.0) and np.all(env.values <= 1.0)


class TestLfo:
    def test_sine_quarter_period(self):
        # f=2 Hz at 480 Hz control rate: index 60 is t=0.125 s, phase pi/2
        lfo = render_lfo(2.0, 0.0, [1, 0, 0, 0, 0], 480)
        assert lfo.values[60] == pytest.approx(1.0, abs=1e-12)

    def test_square_two_level(self):
        lfo = render_lfo(3.0, 0.3, [0, 0, 0, 0, 1], 480)
        assert set(np.unique(lfo.values)) <= {-1.0, 1.0}

    def test_sin_tri_blend_at_zero(self):
        # tri starts at its trough: (sin(0) + tri(0)) / 2 = (0 - 1) / 2
        lfo = render_lfo(1.0, 0.0, [1, 1, 0, 0, 0], 16)
        assert lfo.values[0] == pytest.approx(-0.5, abs=1e-12)

    def test_all_zero_weights_fall_back_to_sine(self):
        zero = render_lfo(2.0, 0.0, [0, 0, 0, 0, 0], 480)
        sine = render_lfo(2.0, 0.0, [1, 0, 0, 0, 0], 480)
        assert np.array_equal(zero.values, sine.values)

    def test_negative_weight_rejected(self):
        with pytest.raises(ValueError):
            render_lfo(2.0, 0.0, [1, -1, 0, 0, 0], 480)

    @given(
        weights=st.lists(st.floats(0.0, 1.0), min_size=5, max_size=5),
        freq=st.floats(0.1, 20.0),
        phase=st.floats(-np.pi, np.pi),
    )
    def test_output_bounded(self, weights, freq, phase):
        lfo = render_lfo(freq, phase, weights, 240)
        assert np.all(np.abs(lfo.values) <= 1.0 + 1e-12)


class TestSineVco:
    def test_fft_peak_at_440(self):
        pitch = ControlSignal(np.full(SR, 69.0), SR)
        buf = render_sine_vco(pitch, 0.0, SR)
        spectrum = np.abs(np.fft.rfft(buf.samples[:4096]))
        peak_hz = np.argmax(spectrum) * SR / 4096
        assert abs(peak_hz - 440.0) <= SR / 4096

    def test_amplitude_bound(self):
        pitch = ControlSignal(np.full(4800, 100.0), SR)
        buf = render_sine_vco(pitch, 0.4, 4800)
        assert np.max(np.abs(buf.samples)) <= 1.0

    def test_initial_phase(self):
        pitch = ControlSignal(np.full(16, 69.0), SR)
        buf = render_sine_vco(pitch, np.pi / 2, 16)
        assert buf.samples[0] == pytest.approx(1.0, abs=1e-12)

    def test_does_not_mutate_input(self):
        values = np.full(32, 60.0)
        pitch = ControlSignal(values, SR)
        render_sine_vco(pitch, 0.0, 32)
        assert np.all(pitch.values == 60.0)


class TestSquaresawVco:
    def test_pure_square(self):
        pitch = ControlSignal(np.full(4800, 69.0), SR)
        buf = render_squaresaw_vco(pitch, 1.0, 0.0, 4800)
        assert set(np.unique(buf.samples)) <= {-1.0, 1.0}

    def test_pure_saw_matches_closed_form(self):
        f = midi_to_hz(69.0)
        pitch = ControlSignal(np.full(4800, 69.0), SR)
        buf = render_squaresaw_vco(pitch, 0.0, 0.0, 4800)
        t = np.arange(4800) / SR
        expected = 2.0 * ((f * t) % 1.0) - 1.0
        assert np.max(np.abs(buf.samples - expected)) < 1e-6

    def test_half_shape_is_mean_of_extremes(self):
        pitch = ControlSignal(np.full(4800, 60.0), SR)
        square = render_squaresaw_vco(pitch, 1.0, 0.1, 4800).samples
        saw = render_squaresaw_vco(pitch, 0.0, 0.1, 4800).samples
        mid = render_squaresaw_vco(pitch, 0.5, 0.1, 4800).samples
        assert np.max(np.abs(mid - (square + saw) / 2.0)) < 1e-12

    def test_shape_out_of_range(self):
        pitch = ControlSignal(np.full(16, 60.0), SR)
        with pytest.raises(ValueError):
            render_squaresaw_vco(pitch, 1.5, 0.0, 16)


class TestNoise:
    def test_deterministic(self):
        a = render_noise(42, 96_000)
        b = render_noise(42, 96_000)
        assert np.array_equal(a.samples, b.samples)

    def test_seeds_differ(self):
        a = render_noise(1, 96_000)
        b = render_noise(2, 96_000)
        assert np.mean(a.samples != b.samples) >= 0.99

    def test_uniform_statistics(self):
        n = 96_000
        buf = render_noise(7, n)
        # mean of U(-1, 1) has sd (1/sqrt(3))/sqrt(n)
        assert abs(buf.samples.mean()) <= 3.0 * (1.0 / np.sqrt(3.0)) / np.sqrt(n)
        assert np.all(np.abs(buf.samples) <= 1.0)


class TestModMatrix:
    def test_one_hot_passthrough(self):
        rng = np.random.default_rng(0)
        sigs = [ControlSignal(rng.uniform(-1, 1, 100)) for _ in range(3)]
        weights = np.array([[0.0], [1.0], [0.0]])
        out = mod_matrix(sigs, weights)
        assert len(out) == 1
        assert np.array_equal(out[0].values, sigs[1].values)

    def test_zero_weights(self):
        sigs = [ControlSignal(np.ones(10)), ControlSignal(np.ones(10))]
        out = mod_matrix(sigs, np.zeros((2, 3)))
        assert all(np.all(o.values == 0.0) for o in out)

    def test_clips_to_one(self):
        sigs = [ControlSignal(np.full(10, 0.8)), ControlSignal(np.full(10, 0.9))]
        out = mod_matrix(sigs, np.ones((2, 1)))
        assert np.all(out[0].values == 1.0)

    def test_mismatched_lengths_rejected(self):
        sigs = [ControlSignal(np.ones(10)), ControlSignal(np.ones(11))]
        with pytest.raises(ValueError):
            mod_matrix(sigs, np.ones((2, 1)))

    def test_weight_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            mod_matrix([ControlSignal(np.ones(4))], np.array([[1.5]]))


class TestUpsample:
    def test_constant_stays_constant(self):
        up = upsample_control(ControlSignal(np.full(480, 0.25)), SR)
        assert np.all(up.values == 0.25)
        assert up.rate == SR

    def test_ramp_matches_line(self):
        ramp = ControlSignal(np.arange(480) / 479.0)
        up = upsample_control(ramp, SR)
        j = np.arange(479 * 100 + 1)
        assert np.max(np.abs(up.values[: len(j)] - j / 47_900.0)) < 1e-9
        assert np.all(up.values[479 * 100:] == 1.0)

    def test_length_scaling(self):
        up = upsample_control(ControlSignal(np.zeros(123)), SR)
        assert len(up) == 123 * 100

    def test_endpoints_exact(self):
        rng = np.random.default_rng(5)
        values = rng.uniform(-1, 1, 50)
        up = upsample_control(ControlSignal(values), SR)
        assert np.array_equal(up.values[::100], values)

    def test_non_integer_ratio_rejected(self):
        with pytest.raises(ValueError):
            upsample_control(ControlSignal(np.zeros(10), 480), 44_100)
