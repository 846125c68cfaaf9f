"""YAML run configuration: defaults, coercion, rejection, hashing."""

import pytest

from trajvoi.runconfig import (PRIOR_SEED_OFFSET, ConfigError, RunConfig,
                               load_config)


def write(tmp_path, text):
    p = tmp_path / "run.yaml"
    p.write_text(text)
    return str(p)


def test_defaults_reproduce_reference_protocol():
    cfg = RunConfig()
    assert cfg.noise_levels_m == [3.0, 10.0, 100.0, 200.0, 300.0, 400.0]
    assert cfg.truncation_ratios == [0.8, 0.6, 0.4, 0.2, 0.05]
    assert cfg.subsampling_ratios == [0.8, 0.6, 0.4, 0.2, 0.05]
    assert cfg.prior_noise_m == [400.0, 300.0]
    assert cfg.prior_truncation_ratios == [0.05, 0.2]
    assert cfg.gp.sigma_f == 7500.0
    assert cfg.gp.length_scale_bounds == (0.01, 10.0)
    assert cfg.integration.grid_step == 60.0
    assert cfg.integration.day_seconds == 86400.0
    assert cfg.region.min_lon == 116.20 and cfg.region.max_lat == 40.06
    assert cfg.jobs == 1 and cfg.limit is None
    assert cfg.include_identity and cfg.prior_uninformative


def test_effective_prior_seed():
    assert RunConfig().effective_prior_seed() == PRIOR_SEED_OFFSET
    assert RunConfig(seed=5).effective_prior_seed() == 5 + PRIOR_SEED_OFFSET
    assert RunConfig(seed=5, prior_seed=42).effective_prior_seed() == 42


def test_load_config_none_and_empty_file(tmp_path):
    default = RunConfig()
    assert load_config(None).to_dict() == default.to_dict()
    assert load_config(write(tmp_path, "")).to_dict() == default.to_dict()
    assert load_config(write(tmp_path, "# only a comment\n")).to_dict() \
        == default.to_dict()


def test_load_config_applies_and_coerces(tmp_path):
    path = write(tmp_path, """
plt_root: /data/plt
output_dir: results
jobs: "4"
limit: 100
degradation:
  noise_levels_m: [50, 150]
  seed: 9
  prior_seed: 77
priors:
  uninformative: false
  perturbation_noise_m: [250]
gp:
  sigma0_m: 5000
  length_scale_bounds_h: [0.1, 2]
integration:
  grid_step_s: 30
  include_measurement_times: false
segmentation:
  max_gap_s: 600
""")
    cfg = load_config(path)
    assert cfg.plt_root == "/data/plt"
    assert cfg.output_dir == "results"
    assert cfg.jobs == 4 and cfg.limit == 100
    assert cfg.noise_levels_m == [50.0, 150.0]
    assert cfg.seed == 9 and cfg.effective_prior_seed() == 77
    assert cfg.prior_uninformative is False
    assert cfg.prior_noise_m == [250.0]
    assert cfg.gp.sigma_f == 5000.0
    assert cfg.gp.length_scale_bounds == (0.1, 2.0)
    assert cfg.integration.grid_step == 30.0
    assert cfg.integration.include_measurement_times is False
    assert cfg.segmentation.max_gap == 600.0
    # untouched sections keep their defaults
    assert cfg.truncation_ratios == [0.8, 0.6, 0.4, 0.2, 0.05]


@pytest.mark.parametrize("text,fragment", [
    ("bogus_key: 1\n", "bogus_key"),
    ("degradation:\n  noise: [1]\n", "degradation"),
    ("gp: 3\n", "must be a mapping"),
    ("- a\n- b\n", "must be a mapping"),
    ("jobs: 0\n", "jobs"),
    ("limit: -1\n", "limit"),
    ("degradation:\n  noise_levels_m: [0]\n", "> 0"),
    ("degradation:\n  truncation_ratios: [1.5]\n", "(0, 1]"),
    ("priors:\n  subsampling_ratios: [0]\n", "(0, 1]"),
    ("gp:\n  sigma0_m: -1\n", "sigma"),
    ("jobs: [1, 2]\n", ""),
])
def test_load_config_rejects(tmp_path, text, fragment):
    with pytest.raises(ConfigError) as err:
        load_config(write(tmp_path, text))
    assert fragment in str(err.value)


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "nope.yaml"))


def test_config_hash_stability_and_sensitivity(tmp_path):
    a = load_config(write(tmp_path, "degradation: {seed: 3}\n"))
    b = load_config(write(tmp_path, "degradation: {seed: 3}\n"))
    assert a.config_hash() == b.config_hash()
    assert len(a.config_hash()) == 64
    c = load_config(write(tmp_path, "degradation: {seed: 4}\n"))
    assert a.config_hash() != c.config_hash()


def test_config_hash_backs_out_derived_prior_seed():
    # spelling out the derived prior seed is the same configuration
    implicit = RunConfig(seed=2)
    explicit = RunConfig(seed=2, prior_seed=2 + PRIOR_SEED_OFFSET)
    assert implicit.config_hash() == explicit.config_hash()
