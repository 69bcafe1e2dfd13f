import numpy as np
import pytest

import tumorcast as tc


def ball_mask(n=32, c=16.0, r=6.0):
    z, y, x = np.mgrid[0:n, 0:n, 0:n].astype(np.float32)
    return np.where((x - c) ** 2 + (y - c) ** 2 + (z - c) ** 2 <= r * r, 255.0, 0.0).astype(
        np.float32
    )


def test_version():
    assert tc.__version__


def test_metrics_identity():
    m = ball_mask()
    e = tc.compute_metrics(m, m)
    assert e["dice"] == pytest.approx(1.0)
    assert e["rvd"] == pytest.approx(0.0)
    assert e["tpv_vox"] == int((m > 0).sum())


def test_growth_map_values():
    m1 = ball_mask(r=5.0)
    m2 = ball_mask(r=7.0)
    g = tc.build_growth_map(m1, m2)
    assert set(np.unique(g)) <= {0.0, 85.0, 170.0, 255.0}
    # growing tumor: overlap plus new growth, no shrink voxels
    assert (g == 255).sum() == int((m1 > 0).sum())
    assert (g == 85).sum() == 0
    assert (g == 170).sum() == int((m2 > 0).sum() - (m1 > 0).sum())


def test_linear_predict_growth():
    m1 = ball_mask(r=4.0)
    m2 = ball_mask(r=6.0)
    pred = tc.linear_predict(m1, m2)
    e = tc.compute_metrics(pred, ball_mask(r=8.0))
    assert e["dice"] >= 0.85


def test_suv_mapping_range():
    suv = np.full((4, 4, 4), 8.0, dtype=np.float32)
    out = tc.map_suv(suv)
    assert out.shape == suv.shape
    assert (out >= 0).all() and (out <= 255).all()


def test_phantom_roundtrip_icvf():
    case = tc.generate_phantom(seed=3, g12=1.0, g23=1.0, noise_std=0.0)
    tp = case["timepoints"][0]
    icvf = tc.compute_icvf(
        tp["ct_post"],
        tp["ct_pre"],
        case["blood_hu_post_mean"],
        case["blood_hu_pre_mean"],
        case["hematocrit"],
        tp["mask"],
    )
    inside = tp["mask"] > 0
    assert inside.any()
    # prescribed ICVF spans [55, 80] percent from rim to center
    assert icvf[inside].min() >= 50.0
    assert icvf[inside].max() <= 85.0
    assert (icvf[~inside] == 0).all()
