import math

import numpy as np
import pytest

from lpcollapse.errors import GuardViolation, InvalidParameter, SonicSingularity
from lpcollapse.integrate import (BOUND_GUARD_TRIPPED, HIT_ONE_THIRD, HIT_SONIC_LINE,
                                  REACHED_ORIGIN_WINDOW, REACHED_TARGET, STEP_UNDERFLOW, Event,
                                  EventSpec, Reject, dopri5, fit_farfield, integrate,
                                  integrate_inner, integrate_left, integrate_outer)
from lpcollapse.model import THIRD, FlowState, farfield_state, friedman_state
from lpcollapse.origin import extend_origin_series
from lpcollapse.sonic import extend_series
from oracles import scipy_path


def test_dopri5_exponential():
    run = dopri5(lambda z, y: [y[0]], 0.0, [1.0], 2.0, rtol=1e-10)
    assert run.termination == REACHED_TARGET
    assert run.z[-1] == 2.0
    assert run.y[-1][0] == pytest.approx(math.exp(2.0), rel=1e-9)


def test_dopri5_backward_oscillator():
    run = dopri5(lambda z, y: [y[1], -y[0]], 0.0, [0.0, 1.0], -10.0, rtol=1e-11)
    assert run.y[-1][0] == pytest.approx(math.sin(-10.0), abs=1e-9)
    assert run.y[-1][1] == pytest.approx(math.cos(-10.0), abs=1e-9)


def test_dense_output_orders():
    # value error of the continuous extension is O(h^5), derivative O(h^4)
    errs = []
    for h in (0.2, 0.1):
        run = dopri5(lambda z, y: [math.cos(z) * y[0]], 0.0, [1.0], 2.0, h0=h, rtol=1.0,
                     atol=1.0, max_steps=1)
        seg = run.segments[0]
        zm = seg.z0 + 0.37 * seg.h
        y, dy = seg(zm)
        ex = math.exp(math.sin(zm))
        errs.append((abs(y[0] - ex), abs(dy[0] - math.cos(zm) * ex)))
    assert errs[0][0] / errs[1][0] > 2 ** 4.5
    assert errs[0][1] / errs[1][1] > 2 ** 3.5


def test_event_location():
    ev = Event("cross", lambda z, y: y[0] - 0.5)
    run = dopri5(lambda z, y: [-y[0]], 0.0, [1.0], 5.0, rtol=1e-11, events=[ev])
    assert run.termination == "cross"
    assert run.z[-1] == pytest.approx(math.log(2.0), abs=2e-12)


def test_event_active_at_start():
    ev = Event("now", lambda z, y: -1.0)
    run = dopri5(lambda z, y: [1.0], 0.0, [0.0], 1.0, events=[ev])
    assert run.termination == "now" and run.steps == 0


def test_reject_shrinks_step():
    def f(z, y):
        if z > 1.0 and y[0] > 0:
            raise Reject
        return [1.0]
    run = dopri5(f, 0.0, [0.0], 2.0, rtol=1e-8)
    assert run.termination == STEP_UNDERFLOW
    assert run.z[-1] == pytest.approx(1.0, abs=1e-10)
    assert run.rejections > 0


def test_friedman_is_preserved():
    out = integrate(friedman_state(0.9), 2.5, 0.01)
    assert out.event == REACHED_TARGET
    assert np.max(np.abs(out.profile.rho - THIRD)) < 1e-15
    assert np.max(np.abs(out.profile.omega - THIRD)) < 1e-15


def test_farfield_is_preserved():
    y = 2.0
    out = integrate(farfield_state(1.5, y), y, 100.0)
    z = out.profile.z
    assert np.max(np.abs(out.profile.rho * (y * z) ** 2 - 1)) < 1e-10
    assert np.max(np.abs(out.profile.omega - 1)) < 1e-12


def test_start_on_sonic_line_rejected():
    with pytest.raises(SonicSingularity):
        integrate(FlowState(1.0, 0.5, 0.5), 2.0, 0.5)
    with pytest.raises(InvalidParameter):
        integrate(friedman_state(0.5), 2.0, 0.5)


@pytest.mark.parametrize("y", [2.0, 2.5])
def test_inner_run_against_scipy(y):
    s = extend_series(y)
    spec = EventSpec(one_third=True, sonic_line=True)
    out = integrate_inner(y, s, 1e-6, spec, include_series=False)
    z0 = float(out.profile.z[0])
    zs = out.profile.z[out.profile.z > out.profile.z[-1] + 0.02]
    sol = scipy_path(y, z0, [out.profile.rho[0], out.profile.omega[0]], float(zs[-1]), dense=True)
    ref = sol.sol(zs)
    assert np.max(np.abs(ref[0] - out.profile.rho[: len(zs)])) < 1e-9
    assert np.max(np.abs(ref[1] - out.profile.omega[: len(zs)])) < 1e-9


def test_inner_events():
    out2 = integrate_inner(2.0, extend_series(2.0), 1e-6)
    assert out2.event == HIT_SONIC_LINE
    assert out2.z_event == pytest.approx(0.43008, abs=1e-4)
    out25 = integrate_inner(2.5, extend_series(2.5), 1e-6)
    assert out25.event == HIT_ONE_THIRD
    assert out25.final_state.omega == pytest.approx(THIRD, abs=1e-10)
    assert out25.profile.z[0] == 1.0   # the series piece is attached


def test_inner_origin_window_label():
    s = extend_series(2.3411172805731839)
    out = integrate_inner(s.p, s, 0.01, EventSpec(sonic_line=True))
    assert out.event == REACHED_ORIGIN_WINDOW


@pytest.mark.parametrize("y", [2.0, 3.0])
def test_outer_against_scipy(y):
    s = extend_series(y)
    prof, C = integrate_outer(y, s, 100.0, include_series=False)
    sol = scipy_path(y, float(prof.z[0]), [prof.rho[0], prof.omega[0]], 100.0, dense=True)
    ref = sol.sol(prof.z)
    assert np.max(np.abs(ref[0] - prof.rho) / prof.rho) < 1e-9
    assert np.max(np.abs(ref[1] - prof.omega)) < 1e-9
    assert 0 < C < 1


def test_outer_rejects_short_domain():
    with pytest.raises(InvalidParameter):
        integrate_outer(2.0, extend_series(2.0), 5.0)


def test_outer_guard_trips_on_bad_start():
    s = extend_series(2.0)
    bad = type(s)(s.p, s.branch, s.rho.copy(), s.omega.copy(), s.radius)
    bad.rho[0] = 0.9      # rho above 1/(y* z) right of the sonic point
    with pytest.raises(GuardViolation):
        integrate_outer(2.0, bad, 20.0)


def test_fit_farfield_recovers_constant():
    z = np.linspace(25, 100, 50)
    rho = 0.8 * (1 + 0.3 / z - 0.7 / z ** 2) / z ** 2
    C, c1 = fit_farfield(z, rho, (25, 100))
    assert C == pytest.approx(0.8, rel=1e-12) and c1 == pytest.approx(0.3, rel=1e-10)


def test_left_run_and_guards():
    o = extend_origin_series(2.5, 2.0)
    out = integrate_left(o, 3.0)
    assert out.event == HIT_SONIC_LINE
    assert out.profile.z[0] == 0.0 and out.profile.rho[0] == 2.0
    assert out.event != BOUND_GUARD_TRIPPED
    with pytest.raises(InvalidParameter):
        integrate_left(o, 0.001)
