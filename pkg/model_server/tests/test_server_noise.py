"""Unit tests for configuration validation and text degradation."""

from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from model_server.cli import build_parser, config_from_args
from model_server.config import NoiseParams, ServerConfig
from model_server.noise import ALPHABET, degrade, derive_seed


class TestNoiseParams:
    def test_defaults_are_silent(self):
        params = NoiseParams()
        assert params.substitution_rate == 0.0
        assert params.deletion_rate == 0.0
        assert params.insertion_rate == 0.0
        assert params.seed == 0

    @pytest.mark.parametrize("kwargs", [
        {"substitution_rate": -0.1},
        {"substitution_rate": 1.5},
        {"deletion_rate": 2.0},
        {"insertion_rate": -1.0},
        {"substitution_rate": 0.7, "deletion_rate": 0.7},
    ])
    def test_invalid_rates_rejected(self, kwargs):
        with pytest.raises(ValueError):
            NoiseParams(**kwargs)


class TestServerConfig:
    def test_synthetic_requires_truth_dir(self):
        with pytest.raises(ValueError, match="truth_dir"):
            ServerConfig(mode="synthetic")

    def test_neural_needs_no_truth_dir(self):
        config = ServerConfig(mode="neural")
        assert config.truth_dir is None
        assert config.patch_side == 384

    @pytest.mark.parametrize("kwargs", [
        {"mode": "magic"},
        {"mode": "neural", "patch_side": 0},
    ])
    def test_invalid_settings_rejected(self, kwargs):
        with pytest.raises(ValueError):
            ServerConfig(**kwargs)


class TestDegrade:
    def test_zero_noise_is_identity(self):
        assert degrade("Amar Prakash", NoiseParams(), seed=5) == \
            ("Amar Prakash", 1.0)

    def test_empty_text(self):
        params = NoiseParams(substitution_rate=1.0)
        assert degrade("", params, seed=1) == ("", 1.0)

    def test_full_substitution_changes_every_character(self):
        params = NoiseParams(substitution_rate=1.0)
        noisy, confidence = degrade("abc", params, seed=3)
        assert len(noisy) == 3
        assert all(out != src for out, src in zip(noisy, "abc"))
        assert confidence == 0.0

    def test_full_deletion_empties_text(self):
        params = NoiseParams(deletion_rate=1.0)
        assert degrade("abc", params, seed=3) == ("", 0.0)

    def test_insertions_lengthen_and_clamp_confidence(self):
        params = NoiseParams(insertion_rate=1.0)
        noisy, confidence = degrade("ab", params, seed=9)
        assert len(noisy) == 4  # one insertion after each character
        assert noisy[0] == "a" and noisy[2] == "b"
        assert confidence == 0.0  # 2 errors over 2 characters

    def test_seeded_runs_repeat_exactly(self):
        params = NoiseParams(substitution_rate=0.3, deletion_rate=0.1,
                             insertion_rate=0.1, seed=11)
        first = degrade("Baguiati Police Station", params, seed=77)
        second = degrade("Baguiati Police Station", params, seed=77)
        assert first == second

    def test_different_seeds_can_differ(self):
        params = NoiseParams(substitution_rate=0.5)
        outputs = {degrade("Calcutta High Court", params, seed=s)[0]
                   for s in range(8)}
        assert len(outputs) > 1

    @given(st.text(alphabet=ALPHABET + " ", max_size=30),
           st.floats(0.0, 0.5), st.floats(0.0, 0.5), st.floats(0.0, 1.0),
           st.integers(0, 2**32 - 1))
    def test_confidence_always_in_range(self, text, sub, dele, ins, seed):
        params = NoiseParams(substitution_rate=sub, deletion_rate=dele,
                             insertion_rate=ins)
        noisy, confidence = degrade(text, params, seed)
        assert 0.0 <= confidence <= 1.0
        if sub == dele == ins == 0.0:
            assert (noisy, confidence) == (text, 1.0)


class TestDeriveSeed:
    def test_stable_and_distinguishes_fields(self):
        assert derive_seed(7, "doc01", "year") == \
            derive_seed(7, "doc01", "year")
        assert derive_seed(7, "doc01", "year") != \
            derive_seed(7, "doc01", "statute")
        assert derive_seed(7, "doc01", "year") != \
            derive_seed(8, "doc01", "year")


class TestCliConfig:
    def test_flags_build_config(self):
        args = build_parser().parse_args(
            ["--truth-dir", "/tmp/truth", "--substitution-rate", "0.2",
             "--seed", "9", "--patch-side", "256"])
        config = config_from_args(args)
        assert config == ServerConfig(
            mode="synthetic", truth_dir=Path("/tmp/truth"),
            noise=NoiseParams(substitution_rate=0.2, seed=9),
            patch_side=256)

    def test_defaults(self):
        args = build_parser().parse_args(["--truth-dir", "t"])
        config = config_from_args(args)
        assert config.noise == NoiseParams()
        assert config.patch_side == 384
        assert args.host == "127.0.0.1"
        assert args.port == 8601

    def test_invalid_rate_flag_is_usage_error(self):
        from model_server.cli import main
        with pytest.raises(SystemExit) as excinfo:
            main(["--truth-dir", "t", "--substitution-rate", "3.0"])
        assert excinfo.value.code == 2  # argparse usage-error convention
