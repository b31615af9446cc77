"""Named experiment presets.

Fifteen ready-to-run setups: seven rank-1 and six rank-10 factorization runs
covering balanced/unbalanced noise, small/large initialization and
balanced/unbalanced step sizes, a 1-D phase-transition run started at
(3, 5), and one desk-scale rank-3 target with distinct singular values.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .descent import ExplicitInit, GaussianInit, RunConfig
from .errors import InvalidArgumentError
from .objective import FactorPair, GroundTruth, NoiseConfig

# balanced pairing for d1=20, d2=30: 20*(sqrt(1.5)*.05)^2 = 30*.05^2
_S1_BALANCED = math.sqrt(1.5) * 0.05
# gamma^2 = 0.5 against sigma2 = 0.05 at the same dims
_S1_HALF = math.sqrt(0.75) * 0.05


@dataclass(frozen=True)
class ExperimentPreset:
    """A fully concrete experiment: target recipe plus a RunConfig template."""

    name: str
    description: str
    figure_ref: str
    target_kind: str  # rank1 | identity_blocks
    d1: int
    d2: int
    rank: int
    sigma_values: tuple
    repeats: int
    algorithm: str
    eta_x: float
    eta_y: float
    noise: NoiseConfig
    init_kind: str  # gaussian | explicit
    init_params: tuple
    horizon: int
    record_stride: int

    def ground_truth(self):
        if self.target_kind == "rank1":
            return GroundTruth.rank1(self.d1, self.d2)
        sigma = np.array(self.sigma_values, dtype=np.float64)
        return GroundTruth.identity_blocks(self.d1, self.d2, self.rank, sigma)

    def _init(self):
        if self.init_kind == "gaussian":
            return GaussianInit(*self.init_params)
        x, y = self.init_params
        return ExplicitInit(FactorPair(np.array(x), np.array(y)))

    def run_config(self, seed):
        return RunConfig(
            algorithm=self.algorithm,
            eta_x=self.eta_x,
            eta_y=self.eta_y,
            horizon=self.horizon,
            seed=seed,
            init=self._init(),
            noise=self.noise,
            record_stride=self.record_stride,
        )


def _rank1(name, ref, description, algorithm, noise, init_sigma, eta_x=1e-2, eta_y=1e-2):
    return ExperimentPreset(
        name=name,
        description=description,
        figure_ref=ref,
        target_kind="rank1",
        d1=20,
        d2=30,
        rank=1,
        sigma_values=(1.0,),
        repeats=100,
        algorithm=algorithm,
        eta_x=eta_x,
        eta_y=eta_y,
        noise=noise,
        init_kind="gaussian",
        init_params=init_sigma,
        horizon=50_000,
        record_stride=50,
    )


def _rank10(name, ref, description, algorithm, noise, init_sigma, eta_x=1e-2, eta_y=1e-2):
    return ExperimentPreset(
        name=name,
        description=description,
        figure_ref=ref,
        target_kind="identity_blocks",
        d1=20,
        d2=30,
        rank=10,
        sigma_values=(1.0,) * 10,
        repeats=20,
        algorithm=algorithm,
        eta_x=eta_x,
        eta_y=eta_y,
        noise=noise,
        init_kind="gaussian",
        init_params=init_sigma,
        horizon=100_000,
        record_stride=50,
    )


_BAL = NoiseConfig(_S1_BALANCED, 0.05)
_HALF = NoiseConfig(_S1_HALF, 0.05)
_NONE = NoiseConfig.none()

_PRESET_LIST = (
    _rank1(
        "fig2a", "2a",
        "perturbed descent, balanced noise, small init, balanced steps",
        "pgd", _BAL, (1e-2, 1e-2),
    ),
    _rank1(
        "fig2b", "2b",
        "perturbed descent, balanced noise, large init, balanced steps",
        "pgd", _BAL, (1e-1, 1e-1),
    ),
    _rank1(
        "fig2c", "2c",
        "perturbed descent, balanced noise, small init, eta_x = 0.5 eta_y",
        "pgd", _BAL, (1e-2, 1e-2), eta_x=5e-3,
    ),
    _rank1(
        "fig2d", "2d",
        "plain descent, small init, balanced steps",
        "gd", _NONE, (1e-2, 1e-2),
    ),
    _rank1(
        "fig2e", "2e",
        "plain descent, large init, balanced steps",
        "gd", _NONE, (1e-1, 1e-1),
    ),
    _rank1(
        "fig2f", "2f",
        "plain descent, small init, eta_x = 0.5 eta_y",
        "gd", _NONE, (1e-2, 1e-2), eta_x=5e-3,
    ),
    _rank1(
        "fig2g", "2g",
        "perturbed descent, gamma^2 = 0.5 noise, small init, balanced steps",
        "pgd", _HALF, (1e-2, 1e-2),
    ),
    _rank10(
        "fig3a", "3a",
        "rank-10 perturbed descent, balanced noise, small init, balanced steps",
        "pgd", _BAL, (1e-2, 1e-2),
    ),
    _rank10(
        "fig3b", "3b",
        "rank-10 perturbed descent, balanced noise, large init, balanced steps",
        "pgd", _BAL, (1e-1, 1e-1),
    ),
    _rank10(
        "fig3c", "3c",
        "rank-10 perturbed descent, balanced noise, small init, eta_x = 0.5 eta_y",
        "pgd", _BAL, (1e-2, 1e-2), eta_x=5e-3,
    ),
    _rank10(
        "fig3d", "3d",
        "rank-10 plain descent, small init, balanced steps",
        "gd", _NONE, (1e-2, 1e-2),
    ),
    _rank10(
        "fig3e", "3e",
        "rank-10 plain descent, large init, balanced steps",
        "gd", _NONE, (1e-1, 1e-1),
    ),
    _rank10(
        "fig3f", "3f",
        "rank-10 plain descent, small init, eta_x = 0.5 eta_y",
        "gd", _NONE, (1e-2, 1e-2), eta_x=5e-3,
    ),
    ExperimentPreset(
        name="phase2d",
        description="1-D phase transition from (3, 5): collapse, then rebalance",
        figure_ref="phase",
        target_kind="rank1",
        d1=1,
        d2=1,
        rank=1,
        sigma_values=(1.0,),
        repeats=50,
        algorithm="pgd",
        eta_x=1e-2,
        eta_y=1e-2,
        noise=NoiseConfig(0.05, 0.05),
        init_kind="explicit",
        init_params=([[3.0]], [[5.0]]),
        horizon=150_000,
        record_stride=50,
    ),
    ExperimentPreset(
        name="rank3-desk",
        description="rank-3 target with singular values (3, 2, 1), balanced noise",
        figure_ref="desk",
        target_kind="identity_blocks",
        d1=8,
        d2=10,
        rank=3,
        sigma_values=(3.0, 2.0, 1.0),
        repeats=20,
        algorithm="pgd",
        eta_x=1e-2,
        eta_y=1e-2,
        noise=NoiseConfig.balanced(8, 10, 0.01),
        init_kind="gaussian",
        init_params=(1e-2, 1e-2),
        horizon=100_000,
        record_stride=50,
    ),
)

PRESETS = {p.name: p for p in _PRESET_LIST}


def get_preset(name):
    try:
        return PRESETS[name]
    except KeyError:
        known = ", ".join(PRESETS)
        raise InvalidArgumentError(f"unknown preset {name!r}; known presets: {known}") from None


def preset_with(preset, **overrides):
    """Preset copy with RunConfig-level fields replaced (validated lazily)."""
    return replace(preset, **overrides)
