"""Ablation ladder structure, toy presets, and result tables."""

import numpy as np
import pytest

from vsrlab.ablation import (
    AblationVariant,
    VARIANT_FLAG_ORDER,
    VARIANT_IDS,
    VariantResult,
    check_cumulative,
    evaluate_generator,
    ladder,
    make_translating_dataset,
    results_to_csv,
    results_to_markdown,
    run_variant,
    toy_model_config,
    toy_train_config,
)
from vsrlab.errors import ConfigError
from vsrlab.generator import build_generator


def test_ladder_structure():
    variants = ladder()
    assert [v.id for v in variants] == list(VARIANT_IDS)
    assert len(variants) == 5
    assert not any(variants[0].flags.values())
    assert all(variants[-1].flags.values())
    # Each rung enables exactly one more feature, in the canonical order.
    for i, (prev, cur) in enumerate(zip(variants, variants[1:])):
        delta = [k for k in VARIANT_FLAG_ORDER if prev.flags[k] != cur.flags[k]]
        assert delta == [VARIANT_FLAG_ORDER[i]]
    check_cumulative(variants)


def test_check_cumulative_rejects_skips_and_removals():
    variants = ladder()
    with pytest.raises(ConfigError):
        check_cumulative([variants[0], variants[2]])
    with pytest.raises(ConfigError):
        check_cumulative([variants[2], variants[1]])


def test_variant_requires_all_flags():
    with pytest.raises(ConfigError):
        AblationVariant("broken", {"temporal": True})


def test_toy_presets():
    cfg = toy_model_config()
    assert (cfg.k, cfg.base_channels, cfg.feat_channels) == (2, 8, 8)
    flags = {k: True for k in VARIANT_FLAG_ORDER}
    cfg_on = toy_model_config(flags)
    assert cfg_on.temporal and cfg_on.propagation and cfg_on.blurpool
    assert cfg_on.hf_shuttle
    tcfg = toy_train_config(7, seed=3)
    assert (tcfg.iters, tcfg.seed, tcfg.crop) == (7, 3, 8)
    assert tcfg.checkpoint_every == 7


def test_make_translating_dataset():
    data = make_translating_dataset(n_clips=3, t_len=4, lr_size=8, scale=4,
                                    seed=0)
    assert len(data) == 3
    for sample in data:
        assert sample.lr.shape == (4, 8, 8, 3)
        assert sample.hr.shape == (4, 32, 32, 3)
        assert sample.flow_fwd.shape == (3, 8, 8, 2)
        # Uniform translation: the LR flow is constant velocity / scale.
        assert np.ptp(sample.flow_fwd[..., 0]) == 0.0
        assert np.ptp(sample.flow_fwd[..., 1]) == 0.0
        assert np.array_equal(sample.flow_bwd, -sample.flow_fwd)
        vx = sample.flow_fwd[0, 0, 0, 0] * 4
        assert vx == int(vx) and 1 <= abs(vx) <= 4
    # Same seed, same data; different seed, different velocities.
    again = make_translating_dataset(n_clips=3, t_len=4, lr_size=8, scale=4,
                                     seed=0)
    assert np.array_equal(again[0].hr, data[0].hr)
    other = make_translating_dataset(n_clips=3, t_len=4, lr_size=8, scale=4,
                                     seed=1)
    assert not np.array_equal(other[0].hr, data[0].hr)


def test_evaluate_generator_smoke():
    data = make_translating_dataset(n_clips=1, t_len=3, lr_size=16, scale=4,
                                    seed=2)
    model = build_generator(toy_model_config(extract_blocks=1, prop_blocks=1),
                            seed=0)
    row = evaluate_generator(model, data, noise_seed=0)
    assert set(row) == {"perceptual", "e_ref_warp"}
    assert np.isfinite(row["perceptual"]) and row["perceptual"] >= 0.0
    assert np.isfinite(row["e_ref_warp"]) and row["e_ref_warp"] >= 0.0


def test_run_variant_smoke(tmp_path):
    train_set = make_translating_dataset(n_clips=1, t_len=3, lr_size=16,
                                         scale=4, seed=4)
    eval_set = make_translating_dataset(n_clips=1, t_len=3, lr_size=16,
                                        scale=4, seed=5)
    variant = ladder()[0]
    result = run_variant(
        variant, train_set, eval_set, seeds=(0,), iters=1,
        out_dir=str(tmp_path),
        model_kwargs={"extract_blocks": 1, "prop_blocks": 1},
        train_kwargs={"frames_per_clip": 3, "crop": 16},
    )
    assert not result.failed
    assert len(result.per_seed) == 1
    assert result.per_seed[0]["seed"] == 0
    assert result.mean("perceptual") == result.per_seed[0]["perceptual"]


def test_results_tables_include_failures():
    ok = VariantResult(ladder()[0])
    ok.per_seed.append({"seed": 0, "perceptual": 0.5, "e_ref_warp": 0.25})
    bad = VariantResult(ladder()[1])
    bad.failed = True
    bad.failure = "non-finite loss"

    md = results_to_markdown([ok, bad])
    lines = md.strip().splitlines()
    assert lines[0] == "| variant | perceptual | e_ref_warp |"
    assert lines[2].startswith("| V0-image | 0.500000 | 0.250000 |")
    assert "| V1-temporal | FAILED | FAILED |" in lines[3]

    csv_text = results_to_csv([ok, bad])
    rows = csv_text.strip().splitlines()
    assert rows[0] == "variant,seed,perceptual,e_ref_warp"
    assert rows[1] == "V0-image,0,0.5,0.25"
    assert rows[2] == "V1-temporal,FAILED,FAILED,FAILED"


def test_median_and_mean_aggregation():
    res = VariantResult(ladder()[0])
    for seed, val in enumerate((1.0, 5.0, 2.0)):
        res.per_seed.append({"seed": seed, "perceptual": val, "e_ref_warp": val})
    assert res.mean("perceptual") == pytest.approx(8.0 / 3.0)
    assert res.median("perceptual") == 2.0
