"""Hot numeric kernel: adaptive RK integration of the quantum-connection ODE.

The frame matrix Y(z) satisfies  z dY/dz = ((1/z) E - mu) Y,  i.e.
dY/dz = (E / z^2 - mu / z) Y, integrated along straight segments between
consecutive path points with an embedded Dormand-Prince 5(4) pair.

The stepping loop dominates runtime, so it is compiled with numba when
available.  Set STABPATH_NO_NUMBA=1 to force the pure-numpy fallback; the
benchmark in benchmarks/bench_kernels.py compares both paths.
"""

from __future__ import annotations

import os

import numpy as np

# Dormand-Prince 5(4) tableau.
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = (
    9017 / 3168,
    -355 / 33,
    46732 / 5247,
    49 / 176,
    -5103 / 18656,
)
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)

STATUS_OK = 0
STATUS_UNDERFLOW = 1


def integrate_frame_impl(emat, mu, zs, y0, rtol):
    """March y0 through every point of zs; returns (ys, status, nsteps).

    emat: (n, n) complex Euler-multiplication matrix, mu: (n,) real grading
    diagonal, zs: (m,) complex path points (zs[0] is where y0 lives), y0:
    (n, n) complex frame seed, rtol: local relative tolerance.
    """
    npts = zs.shape[0]
    n = y0.shape[0]
    ys = np.zeros((npts, n, n), dtype=np.complex128)
    ys[0] = y0
    y = y0.copy()
    nsteps = 0
    for seg in range(npts - 1):
        za = zs[seg]
        zb = zs[seg + 1]
        dz = zb - za
        # derivative in the segment parameter s: y' = dz * A(z(s)) y
        s = 0.0
        zabs = min(abs(za), abs(zb))
        anorm = abs(dz) * (np.max(np.abs(emat)) / zabs ** 2 + np.max(np.abs(mu)) / zabs)
        h = min(1.0, 0.1 / (anorm + 1e-30)) * rtol ** 0.2 * 10.0
        if h > 1.0:
            h = 1.0
        z = za + s * dz
        k1 = dz * ((emat @ y) / (z * z) - (mu[:, None] / z) * y)
        while s < 1.0:
            if h < 1e-14:
                return ys, STATUS_UNDERFLOW, nsteps
            if s + h > 1.0:
                h = 1.0 - s
            y2 = y + h * (_A21 * k1)
            z = za + (s + h / 5) * dz
            k2 = dz * ((emat @ y2) / (z * z) - (mu[:, None] / z) * y2)
            y3 = y + h * (_A31 * k1 + _A32 * k2)
            z = za + (s + 3 * h / 10) * dz
            k3 = dz * ((emat @ y3) / (z * z) - (mu[:, None] / z) * y3)
            y4 = y + h * (_A41 * k1 + _A42 * k2 + _A43 * k3)
            z = za + (s + 4 * h / 5) * dz
            k4 = dz * ((emat @ y4) / (z * z) - (mu[:, None] / z) * y4)
            y5 = y + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4)
            z = za + (s + 8 * h / 9) * dz
            k5 = dz * ((emat @ y5) / (z * z) - (mu[:, None] / z) * y5)
            y6 = y + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5)
            z = za + (s + h) * dz
            k6 = dz * ((emat @ y6) / (z * z) - (mu[:, None] / z) * y6)
            ynew = y + h * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
            k7 = dz * ((emat @ ynew) / (z * z) - (mu[:, None] / z) * ynew)
            errmat = h * (
                _E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7
            )
            scale = rtol * max(np.max(np.abs(y)), np.max(np.abs(ynew)), 1e-300)
            err = np.max(np.abs(errmat)) / scale
            if err <= 1.0:
                s += h
                y = ynew
                k1 = k7  # FSAL
                nsteps += 1
            fac = 0.9 * (err + 1e-30) ** -0.2
            if fac < 0.2:
                fac = 0.2
            elif fac > 5.0:
                fac = 5.0
            h *= fac
        ys[seg + 1] = y
    return ys, STATUS_OK, nsteps


NUMBA_DISABLED = os.environ.get("STABPATH_NO_NUMBA", "").lower() in ("1", "true", "yes")

integrate_frame_numpy = integrate_frame_impl
integrate_frame_numba = None

if not NUMBA_DISABLED:
    try:
        from numba import njit

        integrate_frame_numba = njit(cache=True)(integrate_frame_impl)
    except ImportError:  # pragma: no cover - numba is a hard dep, keep a net
        integrate_frame_numba = None

integrate_frame = integrate_frame_numba if integrate_frame_numba is not None else integrate_frame_numpy
