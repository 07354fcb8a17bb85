from __future__ import annotations

from pathlib import Path

import pytest

from sltrack import DetectParams, IntensityModel, NoiseParams, RigConfig

REFERENCE_CONFIG = str(Path(__file__).resolve().parent.parent
                       / "configs" / "reference.json")


@pytest.fixture
def rig() -> RigConfig:
    """Reference rig used across the suite: 40 cm baseline, 400 px focal
    length, 4 m deep room, 320x240 sensor centered at (160, 120)."""
    return RigConfig(d=40.0, f=400.0, z_b=400.0, width=320, height=240,
                     u0=160.0, v0=120.0)


@pytest.fixture
def quiet() -> NoiseParams:
    return NoiseParams(background_sigma=0.0, background_mean=0.0, seed=0)


@pytest.fixture
def intensity() -> IntensityModel:
    return IntensityModel(i_ref=60.0, z_ref=400.0)


@pytest.fixture
def detect_params() -> DetectParams:
    return DetectParams(ath_base=10.0, ath_slope=0.5, ath_min=1.0,
                        ath_max=255.0, min_run=3)
