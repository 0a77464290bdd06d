"""Adaptive Dormand-Prince 4(5) integration of linear matrix ODEs.

The state is a complex array (typically an N x N fundamental matrix) and
the error is controlled relative to the magnitude of each entry with zero
absolute tolerance.  Entries that are exactly zero in both the old and new
state carry no information and are skipped by the error norm.
"""
import numpy as np

# Dormand-Prince coefficients
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_E = _B - np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640,
                    -92097 / 339200, 187 / 2100, 1 / 40])


class StepCollapseError(RuntimeError):
    pass


class NonFiniteError(FloatingPointError):
    pass


def dopri45(f, y0, t0, t1, rtol=1e-14, atol=0.0, first_step=1e-4, max_step=2e-4,
            max_steps=10_000_000, batched=False):
    """Integrate y' = f(t, y) from t0 to t1.

    Parameters
    ----------
    f : callable
        Right-hand side returning an array shaped like y.
    y0 : ndarray
        Initial state.
    rtol, atol : float
        Tolerances; the scaled error of each entry is
        |err| / (atol + rtol * max(|y|, |y_new|)).
    first_step, max_step : float
        Initial and maximal step sizes in t.
    batched : bool
        If true the leading axis of y indexes independent systems sharing
        the step sequence; the RMS error is formed per system and a step is
        accepted only if every system passes.

    Returns
    -------
    y1 : ndarray
        State at t1.
    nsteps : int
        Number of accepted steps.
    """
    y = np.array(y0, dtype=complex)
    t = float(t0)
    direction = 1.0 if t1 >= t0 else -1.0
    h = min(first_step, abs(t1 - t0)) * direction
    k1 = f(t, y)
    nsteps = 0
    hmin = 1e-15 * max(1.0, abs(t1 - t0))
    a = _A
    while direction * (t1 - t) > 0:
        if direction * (t + h - t1) > 0:
            h = t1 - t
        k2 = f(t + _C[1] * h, y + h * (a[1][0] * k1))
        k3 = f(t + _C[2] * h, y + h * (a[2][0] * k1 + a[2][1] * k2))
        k4 = f(t + _C[3] * h, y + h * (a[3][0] * k1 + a[3][1] * k2 + a[3][2] * k3))
        k5 = f(t + _C[4] * h, y + h * (a[4][0] * k1 + a[4][1] * k2 + a[4][2] * k3
                                       + a[4][3] * k4))
        k6 = f(t + h, y + h * (a[5][0] * k1 + a[5][1] * k2 + a[5][2] * k3
                               + a[5][3] * k4 + a[5][4] * k5))
        ynew = y + h * (_B[0] * k1 + _B[2] * k3 + _B[3] * k4 + _B[4] * k5 + _B[5] * k6)
        k7 = f(t + h, ynew)
        errv = h * (_E[0] * k1 + _E[2] * k3 + _E[3] * k4 + _E[4] * k5 + _E[5] * k6
                    + _E[6] * k7)
        sk = atol + rtol * np.maximum(np.abs(y), np.abs(ynew))
        ratio = np.zeros(sk.shape)
        np.divide(np.abs(errv), sk, out=ratio, where=sk > 0)
        cnt = np.maximum((sk > 0).reshape(len(sk), -1).sum(axis=1), 1) if batched else None
        if batched:
            err = float(np.max(np.sqrt((ratio.reshape(len(sk), -1) ** 2).sum(axis=1) / cnt)))
        else:
            err = float(np.sqrt((ratio ** 2).sum() / max(int((sk > 0).sum()), 1)))
        if not (np.isfinite(err) and np.all(np.isfinite(ynew))):
            raise NonFiniteError("non-finite state in ODE integration")
        if err <= 1.0:
            t = t + h
            y = ynew
            k1 = k7  # first-same-as-last
            nsteps += 1
            if nsteps > max_steps:
                raise StepCollapseError("too many steps")
            fac = 10.0 if err == 0 else min(10.0, 0.9 * err ** -0.2)
        else:
            fac = max(0.2, 0.9 * err ** -0.2)
        h = direction * min(abs(h) * fac, max_step)
        if abs(h) < hmin and direction * (t1 - t) > hmin:
            raise StepCollapseError(f"step size underflow at t={t}")
    return y, nsteps
