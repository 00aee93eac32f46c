import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from amorsim import core

# independent constants for cross-checks
_H = 6.62607015e-34
_C = 2.99792458e8
_KB = 1.380649e-23


def test_larmor_frequency_at_default_operating_point():
    # 725 kHz/G slope puts the 0.800 G resonance at 580 kHz
    assert core.larmor_frequency(0.800, 725.0e3) == pytest.approx(580.0e3)
    assert core.larmor_frequency(-0.800, 725.0e3) == pytest.approx(580.0e3)


def test_photon_flux_matches_planck_arithmetic():
    flux = core.photon_flux(6.5e-3, 795e-9)
    assert flux == pytest.approx(6.5e-3 * 795e-9 / (_H * _C), rel=1e-14)
    assert flux == pytest.approx(2.601379736277695e16, rel=1e-12)


def test_shot_noise_asd_frozen_value():
    asd = core.shot_noise_asd(6.5e-3, 795e-9)
    assert asd == pytest.approx(1.0 / (2.0 * math.sqrt(2.601379736277695e16)),
                                rel=1e-12)
    assert asd == pytest.approx(3.1000459265516074e-9, rel=1e-12)


def test_db_variance_roundtrip_and_known_points():
    assert core.db_to_variance(0.0) == 1.0
    assert core.db_to_variance(-1.9) == pytest.approx(0.6456542290346555,
                                                      rel=1e-14)
    assert core.variance_to_db(10.0) == pytest.approx(10.0)
    for db in (-6.0, -1.9, 0.0, 2.5, 8.0):
        assert core.variance_to_db(core.db_to_variance(db)) == pytest.approx(db)
    with pytest.raises(ValueError):
        core.variance_to_db(0.0)
    with pytest.raises(ValueError):
        core.variance_to_db(-1.0)


@given(st.floats(min_value=-30.0, max_value=30.0))
def test_db_to_variance_is_positive_and_monotone(db):
    v = core.db_to_variance(db)
    assert v > 0.0
    assert core.db_to_variance(db + 1.0) > v


def test_density_anchor_is_exact():
    assert core.rb_number_density(core.DENSITY_ANCHOR_TEMP_C) == (
        core.DENSITY_ANCHOR_CM3)
    assert core.DENSITY_ANCHOR_CM3 == 5.5e10


def test_density_against_rescaled_vapor_correlation():
    # same single-branch correlation evaluated independently here
    def raw(tc):
        tk = tc + 273.15
        p_pa = 10.0 ** (2.881 + 4.312 - 4040.0 / tk) * 133.322387415
        return p_pa / (_KB * tk) * 1e-6

    scale = 5.5e10 / raw(40.3)
    for t_c, frozen in ((40.8, 57570147268.769615),
                        (55.0, 198533413943.21915),
                        (70.0, 655523040772.463)):
        got = core.rb_number_density(t_c)
        assert got == pytest.approx(scale * raw(t_c), rel=1e-12)
        assert got == pytest.approx(frozen, rel=1e-12)


def test_density_is_strictly_increasing():
    grid = np.linspace(20.0, 120.0, 201)
    vals = [core.rb_number_density(t) for t in grid]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_density_domain_enforced():
    with pytest.raises(core.ConfigError):
        core.rb_number_density(19.9)
    with pytest.raises(core.ConfigError):
        core.rb_number_density(120.1)


def test_error_hierarchy():
    for exc in (core.ConfigError([("x", "bad")]), core.DataError("d"),
                core.NumericError("n")):
        assert isinstance(exc, core.AmorsimError)
    err = core.ConfigError([("pump.duty", "must lie in (0, 1)")])
    assert "pump.duty" in str(err)
    assert core.ConfigError("plain message").errors == [("", "plain message")]


def test_gauss_to_pt():
    assert core.GAUSS_TO_PT == 1.0e8
