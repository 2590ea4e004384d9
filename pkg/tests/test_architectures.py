import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from synthsearch.architectures import (
    ARCHITECTURE_IDS,
    ArchitectureError,
    ParamDescriptor,
    SynthPatch,
    get_architecture,
    interpolate,
    param_count,
)

EXPECTED_COUNTS = {
    "shaped_noise": 18,
    "one_osc": 23,
    "no_lfo": 29,
    "no_noise": 51,
    "voice": 78,
    "voice_fm": 130,
}


class TestParamCounts:
    @pytest.mark.parametrize("arch_id,count", sorted(EXPECTED_COUNTS.items()))
    def test_published_counts(self, arch_id, count):
        assert param_count(arch_id) == count

    def test_unknown_architecture(self):
        with pytest.raises(ArchitectureError):
            param_count("mystery")


class TestLayouts:
    @pytest.mark.parametrize("arch_id", ARCHITECTURE_IDS)
    def test_names_unique(self, arch_id):
        names = get_architecture(arch_id).param_names
        assert len(set(names)) == len(names)

    @pytest.mark.parametrize("arch_id", ARCHITECTURE_IDS)
    def test_rates(self, arch_id):
        spec = get_architecture(arch_id)
        assert spec.sample_rate % spec.control_rate == 0
        assert spec.sample_rate // spec.control_rate == 100

    @pytest.mark.parametrize("arch_id", ARCHITECTURE_IDS)
    def test_matrix_block_size(self, arch_id):
        spec = get_architecture(arch_id)
        matrix_params = [n for n in spec.param_names if n.startswith("matrix.")]
        assert len(matrix_params) == len(spec.sources) * len(spec.destinations)

    @pytest.mark.parametrize("arch_id", ARCHITECTURE_IDS)
    def test_every_audio_source_has_level_and_amp(self, arch_id):
        spec = get_architecture(arch_id)
        for src in spec.audio_sources:
            assert f"mixer.{src}" in spec.param_names
            assert f"{src}_amp" in spec.destinations

    def test_voice_inventory(self):
        spec = get_architecture("voice")
        adsrs = {n.split(".")[0] for n in spec.param_names if ".attack" in n}
        lfos = {n.split(".")[0] for n in spec.param_names if ".frequency" in n}
        assert len(adsrs) == 6
        assert len(lfos) == 2
        assert spec.audio_sources == ("vco_sine", "vco_squaresaw", "noise")


class TestParamDescriptor:
    def test_linear_mapping(self):
        p = ParamDescriptor("x", -24.0, 24.0)
        assert p.to_physical(0.0) == -24.0
        assert p.to_physical(1.0) == 24.0
        assert p.to_physical(0.5) == 0.0

    def test_log_mapping(self):
        p = ParamDescriptor("f", 0.1, 20.0, "log", "Hz")
        assert p.to_physical(0.0) == pytest.approx(0.1)
        assert p.to_physical(1.0) == pytest.approx(20.0)
        assert p.to_physical(0.5) == pytest.approx(math.sqrt(0.1 * 20.0))

    def test_duration_scaling(self):
        p = ParamDescriptor("t", 0.001, 2.0, "log", "seconds", scales_with_duration=True)
        assert p.to_physical(1.0, duration=1.0) == pytest.approx(1.0)
        assert p.to_physical(1.0, duration=4.0) == pytest.approx(4.0)

    def test_invalid_range(self):
        with pytest.raises(ValueError):
            ParamDescriptor("x", 1.0, 1.0)

    def test_log_requires_positive_min(self):
        with pytest.raises(ValueError):
            ParamDescriptor("x", 0.0, 1.0, "log")


class TestSynthPatch:
    def test_wrong_length(self):
        with pytest.raises(ArchitectureError):
            SynthPatch("voice", np.zeros(77))

    def test_out_of_box(self):
        theta = np.zeros(78)
        theta[3] = 1.0000001
        with pytest.raises(ArchitectureError):
            SynthPatch("voice", theta)

    def test_non_finite(self):
        theta = np.zeros(78)
        theta[0] = np.nan
        with pytest.raises(ArchitectureError):
            SynthPatch("voice", theta)

    def test_random_in_box(self):
        patch = SynthPatch.random("voice_fm", np.random.default_rng(0))
        assert patch.theta.shape == (130,)
        assert np.all((patch.theta >= 0) & (patch.theta <= 1))


class TestInterpolate:
    def setup_method(self):
        rng = np.random.default_rng(1)
        self.a = SynthPatch.random("voice", rng)
        self.b = SynthPatch.random("voice", rng)

    def test_endpoint_zero(self):
        assert np.array_equal(interpolate(self.a, self.b, 0.0).theta, self.a.theta)

    def test_endpoint_one(self):
        assert np.array_equal(interpolate(self.a, self.b, 1.0).theta, self.b.theta)

    def test_midpoint(self):
        mid = interpolate(self.a, self.b, 0.5)
        assert np.allclose(mid.theta, (self.a.theta + self.b.theta) / 2.0)

    def test_architecture_mismatch(self):
        other = SynthPatch.random("one_osc", np.random.default_rng(2))
        with pytest.raises(ArchitectureError):
            interpolate(self.a, other, 0.5)

    @given(lam=st.floats(0.0, 1.0))
    def test_stays_in_box(self, lam):
        out = interpolate(self.a, self.b, lam)
        assert np.all((out.theta >= 0.0) & (out.theta <= 1.0))
