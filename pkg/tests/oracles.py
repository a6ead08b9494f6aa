"""Independent reference implementations used only by the tests.

Nothing here imports the package's recursions or integrator.
"""
import mpmath as mp
import numpy as np
from scipy.integrate import solve_ivp


def rhs_ref(z, v, y):
    r, w = v
    D = 1.0 - y * y * z * z * w * w
    q = 2.0 * y * y * z * w * (r - w) / D
    return [-q * r, (1.0 - 3.0 * w) / z + q * w]


def scipy_path(y, z0, v0, z1, rtol=1e-13, atol=1e-15, dense=False):
    sol = solve_ivp(rhs_ref, (z0, z1), v0, args=(y,), method="DOP853", rtol=rtol, atol=atol,
                    dense_output=dense)
    assert sol.success, sol.message
    return sol


####################################################################
# Taylor coefficients by order-by-order solution of the cleared ODE

def _mul(a, b, n):
    if a.dtype == object:
        out = np.empty(n, dtype=object)
        for k in range(n):
            out[k] = sum((a[i] * b[k - i] for i in range(k + 1) if i < len(a) and k - i < len(b)),
                         a[0] * 0)
        return out
    return np.convolve(a, b)[:n]


def cleared_residuals(r, w, y2, c):
    """Coefficients of the two polynomial residuals about z = c.

    e1 = D rho' + 2 y^2 z omega rho (rho - omega)
    e2 = z D omega' - (1 - 3 omega) D - 2 y^2 z^2 omega^2 (rho - omega)
    """
    n = len(r)
    z = np.zeros(n)
    z[0] = c
    if n > 1:
        z[1] = 1.0
    z = z.astype(r.dtype)
    dr = np.append(np.arange(1, n) * r[1:], r[0] * 0).astype(r.dtype)
    dw = np.append(np.arange(1, n) * w[1:], w[0] * 0).astype(r.dtype)
    zw = _mul(z, w, n)
    D = -y2 * _mul(zw, zw, n)
    D[0] += 1.0
    d = r - w
    e1 = _mul(D, dr, n) + 2 * y2 * _mul(zw, _mul(r, d, n), n)
    e2 = (_mul(z, _mul(D, dw, n), n) - _mul(_one_minus_3(w), D, n)
          - 2 * y2 * _mul(_mul(zw, zw, n), d, n))
    return e1, e2


def _one_minus_3(w):
    out = -3.0 * w
    out[0] += 1.0
    return out


def taylor_oracle(y, centre, seed_rho, seed_omega, n, dps=None):
    """Coefficients 0..n about `centre` (0 or 1) given the low-order seed.

    At each new order the two unknowns enter the residuals linearly; the
    residual rows are found by probing with unit values.  With `dps` set,
    the arithmetic runs in mpmath at that many digits.
    """
    if dps:
        mp.mp.dps = dps
        conv = mp.mpf
        y = mp.mpf(y)
        r = np.array([mp.mpf(0)] * (n + 1), dtype=object)
        w = np.array([mp.mpf(0)] * (n + 1), dtype=object)
    else:
        conv = float
        r = np.zeros(n + 1)
        w = np.zeros(n + 1)
    y2 = y * y
    k0 = len(seed_rho)
    for i in range(k0):
        r[i], w[i] = conv(seed_rho[i]), conv(seed_omega[i])
    for N in range(k0, n + 1):
        rows = (N, N) if centre == 1 else (N - 1, N)

        def res(a, b):
            rr, ww = r.copy(), w.copy()
            rr[N], ww[N] = a, b
            e1, e2 = cleared_residuals(rr[:N + 2], ww[:N + 2], y2, float(centre))
            return np.array([e1[rows[0]], e2[rows[1]]])

        base = res(conv(0), conv(0))
        a = res(conv(1), conv(0)) - base
        b = res(conv(0), conv(1)) - base
        det = a[0] * b[1] - b[0] * a[1]
        r[N] = (-base[0] * b[1] + b[0] * base[1]) / det
        w[N] = (-a[0] * base[1] + a[1] * base[0]) / det
    if dps:
        return np.array([float(x) for x in r]), np.array([float(x) for x in w])
    return r, w


def lp_oracle(y, n, dps=None):
    w0 = 1 / (mp.mpf(y) if dps else y)
    return taylor_oracle(y, 1, [w0, -w0], [w0, 1 - 2 * w0], n, dps)


def hunter_oracle(y, n, dps=None):
    w0 = 1 / (mp.mpf(y) if dps else y)
    return taylor_oracle(y, 1, [w0, 1 - 3 * w0], [w0, 0 * w0], n, dps)


def origin_oracle(y, rho0, n, dps=None):
    third = mp.mpf(1) / 3 if dps else 1.0 / 3.0
    return taylor_oracle(y, 0, [rho0], [third], n, dps)


####################################################################
# literal transcription of the order-N source terms (sign-corrected)

def _get(a, i):
    return a[i] if 0 <= i < len(a) else 0.0


def brute_source(N, r, w, ys):
    """(F_N, G_N) by explicit nested sums; r, w hold orders 0..N-1."""
    y2 = ys * ys

    def w2(l):
        return sum(_get(w, k) * _get(w, l - k) for k in range(l + 1)) if l >= 0 else 0.0

    def trip(a, b, c, M):
        if M < 0:
            return 0.0
        return sum(_get(a, k) * _get(b, l) * _get(c, M - k - l)
                   for k in range(M + 1) for l in range(M + 1 - k))

    d = [_get(r, i) - _get(w, i) for i in range(N)]
    F = y2 * (sum((k + 1) * _get(r, k + 1) * w2(N - k) for k in range(1, N - 1))
              + sum(_get(r, 1) * _get(w, m) * _get(w, N - m) for m in range(1, N))
              + 2 * sum((k + 1) * _get(r, k + 1) * w2(N - 1 - k) for k in range(0, N - 1))
              + sum((k + 1) * _get(r, k + 1) * w2(N - 2 - k) for k in range(0, N - 1)))
    t1 = sum(_get(w, k) * _get(r, l) * _get(d, N - k - l)
             for k in range(N + 1) for l in range(N + 1 - k) if N - k - l < N)
    F -= 2 * y2 * (t1 + trip(w, r, d, N - 1))
    G = y2 * (sum((k + 1) * _get(w, k + 1) * w2(N - k) for k in range(1, N - 1))
              + sum(_get(w, 1) * _get(w, m) * _get(w, N - m) for m in range(1, N))
              + 2 * sum((k + 1) * _get(w, k + 1) * w2(N - 1 - k) for k in range(0, N - 1))
              + sum((k + 1) * _get(w, k + 1) * w2(N - 2 - k) for k in range(0, N - 1)))
    t2 = sum(_get(w, k) * _get(w, l) * _get(d, N - k - l)
             for k in range(N + 1) for l in range(N + 1 - k) if N - k - l < N)
    G += 2 * y2 * (t2 + trip(w, w, d, N - 1))
    G += (-1) ** N - 3 * sum(_get(w, k) * (-1) ** (N - k) for k in range(N))
    G -= y2 * (sum((-1) ** (N - 2 - l) * w2(l) for l in range(N - 1))
               + 2 * sum((-1) ** (N - 1 - l) * w2(l) for l in range(N))
               + sum((-1) ** (N - l) * w2(l) for l in range(N))
               + sum(_get(w, k) * _get(w, N - k) for k in range(1, N)))
    s = 0.0
    for M, c in ((N - 2, 1), (N - 1, 2)):
        s += c * sum((-1) ** (M - k - l) * _get(w, k) * w2(l)
                     for k in range(M + 1) for l in range(M + 1 - k))
    s += sum((-1) ** (N - k - l) * _get(w, k) * w2(l)
             for k in range(N + 1) for l in range(N + 1 - k) if k != N and l != N)
    s += _get(w, 0) * sum(_get(w, a) * _get(w, N - a) for a in range(1, N))
    G += 3 * y2 * s
    return F, G


####################################################################
# critical parameter by a two-dimensional shooting solve with scipy
# (frozen result; recompute with scipy_y_bar() if the oracle changes)

SCIPY_Y_BAR = 2.3411172805283034
SCIPY_RHO_CENTER = 0.8329080525321356


def scipy_y_bar(z_match=0.3):
    from scipy.optimize import fsolve

    def right(y, d=1e-4):
        w0 = 1 / y
        den = 2 * y * (2 * y - 3)
        r2 = (-y * y + 6 * y - 7) / den
        w2 = (-5 * y * y + 19 * y - 17) / den
        v = [w0 + w0 * d + r2 * d * d, w0 - (1 - 2 * w0) * d + w2 * d * d]
        return scipy_path(y, 1 - d, v, z_match).y[:, -1]

    def left(y, r0, d=1e-3):
        v = [r0 - y * y * r0 * (r0 - 1 / 3) / 3 * d * d, 1 / 3 + 2 * y * y * (r0 - 1 / 3) / 45 * d * d]
        return scipy_path(y, d, v, z_match).y[:, -1]

    x = fsolve(lambda x: right(x[0]) - left(x[0], x[1]), [2.34, 0.83], xtol=1e-14)
    return float(x[0]), float(x[1])
