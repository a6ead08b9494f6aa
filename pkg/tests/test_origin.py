import numpy as np
import pytest

from lpcollapse.errors import InvalidParameter, OutsideRadius
from lpcollapse.model import THIRD
from lpcollapse.origin import (eval_origin_series, extend_origin_series,
                               origin_param_derivative, origin_series_to_dict)
from oracles import origin_oracle, scipy_path


def test_second_order_closed_forms():
    s = extend_origin_series(2.0, 1.0)
    assert s.rho[1] == 0.0 and s.omega[1] == 0.0
    # omega_2 = (2/45) y^2 (rho0 - 1/3), rho_2 = -(y^2/3) rho0 (rho0 - 1/3)
    assert s.omega[2] == pytest.approx(16.0 / 135.0, rel=1e-15)
    assert s.rho[2] == pytest.approx(-8.0 / 9.0, rel=1e-15)


@pytest.mark.parametrize("y", [2.0, 2.5, 3.0])
@pytest.mark.parametrize("rho0", [0.44, 1.0, 5.0])
def test_coefficients_match_high_precision_oracle(y, rho0):
    r, w = origin_oracle(y, rho0, 30, dps=40)
    s = extend_origin_series(y, rho0, 30)
    scale = np.maximum(np.maximum(np.abs(r), np.abs(w)), 1e-300)
    nz = scale > 1e-200
    assert np.max(np.abs(s.rho - r)[nz] / scale[nz]) < 1e-12
    assert np.max(np.abs(s.omega - w)[nz] / scale[nz]) < 1e-12


def test_odd_orders_vanish():
    s = extend_origin_series(2.5, 2.0, 30)
    assert np.all(s.rho[1::2] == 0.0) and np.all(s.omega[1::2] == 0.0)


def test_friedman_centre_gives_zero_tail():
    s = extend_origin_series(2.0, THIRD)
    assert np.all(s.rho[1:] == 0.0) and np.all(s.omega[1:] == 0.0)
    assert s.radius == 0.5


def test_rejects_nonpositive_density():
    with pytest.raises(InvalidParameter):
        extend_origin_series(2.5, 0.0)


@pytest.mark.parametrize("rho0", [0.44, 1.0, 2.0, 5.0, 10.0])
def test_series_against_scipy_path(rho0):
    y = 2.5
    s = extend_origin_series(y, rho0)
    z0, z1 = 0.01, 0.9 * s.radius
    st0, _ = eval_origin_series(s, z0)
    sol = scipy_path(y, z0, [st0.rho, st0.omega], z1)
    st1, _ = eval_origin_series(s, z1)
    assert abs(sol.y[0, -1] - st1.rho) < 1e-9 * rho0
    assert abs(sol.y[1, -1] - st1.omega) < 1e-9


def test_radius_shrinks_with_density():
    radii = [extend_origin_series(2.5, r).radius for r in (1.0, 2.0, 5.0, 10.0)]
    assert all(a >= b for a, b in zip(radii, radii[1:]))
    s = extend_origin_series(2.5, 10.0)
    with pytest.raises(OutsideRadius):
        eval_origin_series(s, s.radius)
    with pytest.raises(OutsideRadius):
        eval_origin_series(s, -0.01)


@pytest.mark.parametrize("y", [2.0, 2.5, 3.0])
@pytest.mark.parametrize("rho0", [0.44, 1.0, 5.0])
def test_param_derivative_matches_finite_differences(y, rho0):
    s = extend_origin_series(y, rho0, 10)
    dr, dw = origin_param_derivative(s)
    h = 1e-6 * rho0
    sp = extend_origin_series(y, rho0 + h, 10)
    sm = extend_origin_series(y, rho0 - h, 10)
    fr = (sp.rho - sm.rho) / (2 * h)
    fw = (sp.omega - sm.omega) / (2 * h)
    for N in range(11):
        assert abs(dr[N] - fr[N]) <= 1e-5 * max(1.0, abs(fr[N]))
        assert abs(dw[N] - fw[N]) <= 1e-5 * max(1.0, abs(fw[N]))
    assert dr[0] == 1.0 and dw[0] == 0.0
    assert dw[2] == pytest.approx(2.0 * y * y / 45.0)


def test_dict_dump():
    d = origin_series_to_dict(extend_origin_series(2.0, THIRD, 12))
    assert d["branch"] == "origin" and d["rho0"] == THIRD
    assert d["rho"][1:] == [0.0] * 12
