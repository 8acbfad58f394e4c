"""Named backgrounds, grids and data used by the acceptance checks and the CLI."""

from dataclasses import dataclass

import numpy as np

from .background import BackgroundSpec
from .errors import ConfigError
from .evolve import CharacteristicData, NullGrid, bump_profile, gaussian_profile
from .verify import Run

__all__ = ["bump_profile", "gaussian_profile"]

# deep Schwarzschild grids reach r* ~ -200; keep the horizon clamp out of the way
EPS_HOR = 1e-250

HIERARCHY_PAIRS = ((30.0, 70.0), (70.0, 110.0), (110.0, 150.0))
DECAY_TAUS = tuple(np.arange(10.0, 200.0 + 1e-9, 2.5))
VAIDYA_PAIRS = ((20.0, 40.0), (40.0, 60.0))
VAIDYA_JUNCTION = 30.0
RADIATION_PROFILE = gaussian_profile(1.0, 10.0, 2.0)
RADIATION_U = {
    "minkowski": np.arange(2.0, 25.0, 0.5),
    "schwarzschild": np.arange(5.0, 50.0, 5.0),
}


def background(name, mass=1.0, u1=VAIDYA_JUNCTION, d=3):
    if name == "minkowski":
        return BackgroundSpec.minkowski(d)
    if name == "schwarzschild":
        return BackgroundSpec.schwarzschild(mass, eps_hor=EPS_HOR)
    if name == "glued-vaidya":
        return BackgroundSpec.glued_vaidya([(-np.inf, mass), (u1, 0.8 * mass)], eps_hor=EPS_HOR)
    raise ConfigError(f"unknown background {name!r}")


@dataclass
class Case:
    bg: object
    grid: object
    data: object
    region: tuple = None


def local_case(name):
    """Small grids for scheme-order and commutator studies (base h = 0.1)."""
    if name == "minkowski":
        return Case(background(name), NullGrid.span(0, 10, 15, 45, 0.1),
                    CharacteristicData.gaussian(1.0, 25.0, 2.0, v0=15.0), (1, 9, 16, 44))
    if name in ("schwarzschild", "glued-vaidya"):
        bg = background(name, u1=10.0)
        return Case(bg, NullGrid.span(0, 20, 0, 40, 0.1),
                    CharacteristicData.gaussian(1.0, 12.0, 2.0, v0=0.0), (1, 19, 1, 39))
    raise ConfigError(f"no local case for {name!r}")


commutator_case = local_case


def lens_data():
    return CharacteristicData.gaussian(1.0, 25.0, 2.0, v0=0.0)


def hierarchy_run(ell, h, bg=None):
    bg = background("schwarzschild") if bg is None else bg
    return Run(bg, ell, NullGrid.span(0, 152, 0, 400, h), CharacteristicData.gaussian(1.0, 10.0, 2.0, v0=0.0))


def decay_run(ell, h=0.05):
    return Run(background("schwarzschild"), ell, NullGrid.span(0, 202, 0, 2200, h),
               CharacteristicData.gaussian(1.0, 10.0, 2.0, v0=0.0))


def radiation_run(name, h=0.1):
    if name == "minkowski":
        return Run(background(name), 0, NullGrid.span(0, 30, 0, 900, h), CharacteristicData.dalembert(RADIATION_PROFILE))
    return Run(background(name), 0, NullGrid.span(0, 60, 0, 1700, h),
               CharacteristicData.gaussian(1.0, 10.0, 2.0, v0=0.0))


def vaidya_run(h, ell=0):
    return Run(background("glued-vaidya"), ell, NullGrid.span(0, 62, 0, 300, h),
               CharacteristicData.gaussian(1.0, 10.0, 2.0, v0=0.0))
