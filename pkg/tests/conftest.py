import numpy as np
import pytest
from hypothesis import settings

import mfnoise as mf

# numba compilation must not count against hypothesis example deadlines
settings.register_profile("suite", deadline=None, max_examples=40)
settings.load_profile("suite")


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile every jitted kernel once so timed tests see warm-cache cost."""
    gt1 = mf.GroundTruth.rank1(3, 4)
    cfg = mf.RunConfig(
        algorithm="pgd",
        eta_x=0.01,
        eta_y=0.01,
        horizon=3,
        seed=1,
        init=mf.GaussianInit(0.1, 0.1),
        noise=mf.NoiseConfig(0.01, 0.01),
        record_stride=1,
    )
    mf.run(cfg, gt1)

    gt2 = mf.GroundTruth.identity_blocks(4, 5, 2)
    cfg2 = mf.RunConfig(
        algorithm="pgd",
        eta_x=0.01,
        eta_y=0.01,
        horizon=3,
        seed=1,
        init=mf.GaussianInit(0.1, 0.1),
        noise=mf.NoiseConfig.balanced(4, 5, 0.01),
        record_stride=1,
    )
    mf.run(cfg2, gt2)

    pair = mf.FactorPair(np.ones((3, 1)), np.ones((4, 1)))
    mf.hessian_spectrum(pair, gt1)
    mf.procrustes_distance(pair.stacked(), pair.stacked())
    mf.monte_carlo_smoothed_loss(pair, gt1, mf.NoiseConfig(0.1, 0.1), 16, 0)


@pytest.fixture
def rank1_20x30():
    return mf.GroundTruth.rank1(20, 30)
