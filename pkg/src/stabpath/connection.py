"""Numerical flat sections of the quantum connection of P^(n-1).

The canonical fundamental solution T(z) = S(z) z^(-mu) z^(rho) is seeded from
the truncated series S = I + S_1/z + ... at a large anchor |z0| = 10 max|u_j|
and continued along a path by adaptive Runge-Kutta integration of
z dY/dz = ((1/z) E_tau - mu) Y.  Quantum cohomology central charges are
Z(V) = (2 pi r)^((n-1)/2) * integral of Phi(GammaHat . Ch(V)) at z = r.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .khomology import CohClass, KClass, cup, gamma_class, modified_chern
from .quantum import QuantumParams, eigenvalues, euler_mult_matrix, grading_matrix


class NumericalError(RuntimeError):
    """Residual, tolerance, or convergence failure in the numerics."""


def rho_matrix(n: int) -> np.ndarray:
    """Cup product with c1 = n h in the basis 1, h, ..., h^(n-1)."""
    rho = np.zeros((n, n), dtype=complex)
    for p in range(n - 1):
        rho[p + 1, p] = n
    return rho


@dataclass(frozen=True)
class SeriesSolution:
    n: int
    tau: complex
    order: int
    matrices: np.ndarray  # (order, n, n): S_1 ... S_K
    z0: complex
    tail_estimate: float

    def evaluate(self, z: complex) -> np.ndarray:
        """S(z) = I + sum_k S_k z^(-k), Horner in 1/z."""
        w = 1.0 / z
        acc = np.zeros((self.n, self.n), dtype=complex)
        for k in range(self.order - 1, -1, -1):
            acc = (acc + self.matrices[k]) * w
        return np.eye(self.n, dtype=complex) + acc


def s_series(n: int, tau: complex = 0j, tol: float = 1e-14) -> SeriesSolution:
    """Truncated series of the canonical solution, S(infinity) = id.

    Coefficients satisfy (ad mu - k) S_k = E S_(k-1) - S_(k-1) rho entrywise;
    resonant entries (mu_a - mu_b = k) must have vanishing right-hand side.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    emat = euler_mult_matrix(QuantumParams(n, tau))
    rho = rho_matrix(n)
    z0 = 10.0 * float(np.max(np.abs(eigenvalues(QuantumParams(n, tau)))))
    mats: List[np.ndarray] = []
    prev = np.eye(n, dtype=complex)
    tail = math.inf
    k = 0
    while k < 200:
        k += 1
        rhs = emat @ prev - prev @ rho
        scale = max(np.max(np.abs(rhs)), 1.0)
        cur = np.zeros((n, n), dtype=complex)
        for a in range(n):
            for b in range(n):
                d = (a - b) - k  # mu_a - mu_b - k with mu_a = a - (n-1)/2
                if d == 0:
                    if abs(rhs[a, b]) > 1e-18 * scale:
                        raise NumericalError(
                            f"resonant entry ({a},{b}) at order {k} has nonzero "
                            f"rhs {abs(rhs[a, b]):.2e}; convention bug"
                        )
                    cur[a, b] = 0.0
                else:
                    cur[a, b] = rhs[a, b] / d
        mats.append(cur)
        prev = cur
        tail = float(np.max(np.abs(cur))) * z0 ** (-k)
        if tail < tol * 1e-3 and k >= n + 2:
            break
    else:
        raise NumericalError("series did not reach the tail tolerance")
    return SeriesSolution(n, tau, len(mats), np.array(mats), z0, tail)


def _zmu_zrho(n: int, logz: complex) -> np.ndarray:
    """z^(-mu) z^(rho) from a chosen branch of log z (z^rho is a finite sum)."""
    mu = np.diag(grading_matrix(n))
    zmu = np.diag(np.exp(-mu * logz))
    rho = rho_matrix(n)
    acc = np.eye(n, dtype=complex)
    term = np.eye(n, dtype=complex)
    for m in range(1, n):
        term = term @ (rho * logz) / m
        acc = acc + term
    return zmu @ acc


@dataclass
class FlatFrame:
    """Fundamental solution matrices sampled along a path in C*.

    Columns of ys[i] are the flat sections T(z) e_p at z = zs[i]; logzs holds
    the continuously tracked branch of log z along the path.
    """

    n: int
    tau: complex
    zs: np.ndarray
    ys: np.ndarray
    logzs: np.ndarray
    rtol: float

    def index_of(self, z: complex, tol: float = 1e-9) -> int:
        i = int(np.argmin(np.abs(self.zs - z)))
        if abs(self.zs[i] - z) > tol * max(1.0, abs(z)):
            raise ValueError(f"z={z} is not on the frame path")
        return i

    def solution_at(self, z: complex) -> Tuple[np.ndarray, complex]:
        i = self.index_of(z)
        return self.ys[i], self.logzs[i]


def _validate_path(path: np.ndarray) -> None:
    if np.any(path == 0):
        raise ValueError("path passes through the irregular singularity z = 0")
    ratios = path[1:] / path[:-1]
    if np.any(ratios.real <= 0) and np.any(np.abs(np.angle(ratios)) >= math.pi / 2):
        # conservative: each hop must stay well inside a half turn
        raise ValueError("path hops wind too far around z = 0; refine the path")
    for a, b in zip(path[:-1], path[1:]):
        # distance from segment [a, b] to the origin must be positive
        d = b - a
        t = -np.real(a * np.conj(d)) / (abs(d) ** 2 + 1e-300)
        t = min(1.0, max(0.0, t))
        if abs(a + t * d) < 1e-12:
            raise ValueError("a path segment passes through z = 0")


def flat_frame(
    n: int,
    tau: complex,
    path: Sequence[complex],
    tol: float = 1e-10,
    series: Optional[SeriesSolution] = None,
) -> FlatFrame:
    """Seed the canonical frame at path[0] and integrate along the path."""
    zs = np.asarray(list(path), dtype=complex)
    if len(zs) < 1:
        raise ValueError("empty path")
    _validate_path(zs)
    if series is None or series.n != n or series.tau != tau:
        series = s_series(n, tau, tol=min(tol, 1e-12))
    z0 = zs[0]
    if abs(z0) < series.z0 * (1 - 1e-9):
        raise ValueError(
            f"path must start at |z| >= 10 max|u| = {series.z0:.3g}, got {abs(z0):.3g}"
        )
    logz0 = cmath.log(z0)  # real branch when the path starts on R_>0
    y0 = series.evaluate(z0) @ _zmu_zrho(n, logz0)
    emat = euler_mult_matrix(QuantumParams(n, tau))
    mu = np.diag(grading_matrix(n)).copy()
    ys, status, _ = _kernels.integrate_frame(emat, mu, zs, y0, tol / 10.0)
    if status != _kernels.STATUS_OK:
        raise NumericalError("step size underflow: target too close to z = 0")
    logzs = np.empty(len(zs), dtype=complex)
    logzs[0] = logz0
    for i in range(1, len(zs)):
        logzs[i] = logzs[i - 1] + cmath.log(zs[i] / zs[i - 1])
    return FlatFrame(n, tau, zs, ys, logzs, tol)


def real_descent_path(
    z0: float,
    r_points: Sequence[float],
    ratio: float = 0.9,
    stencil: float = 0.0,
    e_norm: float = 0.0,
) -> np.ndarray:
    """Geometric descent from z0 through all r_points (decreasing, real).

    With stencil > 0 every requested r point gets four satellite nodes at
    r (1 +- s), r (1 +- 2s) for finite-difference residual checks.  The
    half-width s is scaled so that (s r) |A(r)| ~ stencil, with |A| estimated
    from e_norm / r^2; this keeps both the stencil bias and roundoff small.
    """
    rs = sorted(set(float(r) for r in r_points), reverse=True)
    if not rs or rs[0] > z0:
        raise ValueError("r points must lie below the anchor z0")
    pts = {z0}
    z = z0
    while z > rs[-1]:
        z *= ratio
        if z > rs[-1]:
            pts.add(z)
    for r in rs:
        pts.add(r)
        if stencil > 0:
            s = stencil * r / max(e_norm, 1e-12)
            s = min(0.02, max(s, 1e-7))
            for f in (1 - 2 * s, 1 - s, 1 + s, 1 + 2 * s):
                if r * f < z0:
                    pts.add(r * f)
    return np.array(sorted(pts, reverse=True), dtype=complex)


def frame_with_checkpoints(
    n: int,
    tau: complex,
    r_points: Sequence[float],
    tol: float = 1e-10,
    ratio: float = 0.9,
    stencil: float = 0.006,
    series: Optional[SeriesSolution] = None,
) -> FlatFrame:
    """Real-axis frame through r_points with residual-check satellite nodes."""
    if series is None:
        series = s_series(n, tau, tol=min(tol, 1e-12))
    e_norm = n * max(1.0, abs(cmath.exp(tau)))
    path = real_descent_path(series.z0, r_points, ratio=ratio, stencil=stencil, e_norm=e_norm)
    return flat_frame(n, tau, path, tol=tol, series=series)


def ode_residual(frame: FlatFrame, i: int) -> float:
    """Relative ODE residual at interior path index i by finite differences.

    Uses a derivative from the 4-point one-sided/centered Lagrange stencil of
    the stored neighbours, so it certifies the stored march rather than the
    integrator's own local model.
    """
    if not 0 < i < len(frame.zs) - 1:
        raise IndexError("need an interior index")
    lo = max(0, i - 2)
    hi = min(len(frame.zs), i + 3)
    idx = list(range(lo, hi))
    z = frame.zs[i]
    dy = np.zeros_like(frame.ys[i])
    for j in idx:
        w = _lagrange_deriv_weight(frame.zs[idx], frame.zs[j], z)
        dy += w * frame.ys[j]
    emat = euler_mult_matrix(QuantumParams(frame.n, frame.tau))
    mu = np.diag(grading_matrix(frame.n))
    rhs = (emat @ frame.ys[i]) / z - mu[:, None] * frame.ys[i]
    resid = z * dy - rhs
    scale = max(np.max(np.abs(rhs)), np.max(np.abs(frame.ys[i])))
    return float(np.max(np.abs(resid)) / scale)


def _lagrange_deriv_weight(nodes: np.ndarray, node, at) -> complex:
    """d/dz of the Lagrange basis polynomial for `node` evaluated at `at`."""
    others = [x for x in nodes if x != node]
    denom = np.prod([node - x for x in others])
    total = 0j
    for skip in others:
        total += np.prod([at - x for x in others if x != skip])
    return total / denom


def phi(
    n: int,
    tau: complex,
    alpha: CohClass,
    z: complex,
    frame: FlatFrame,
) -> CohClass:
    """Phi(alpha)(z) = (2 pi)^(-(n-1)/2) T(z) alpha via the frame."""
    y, _ = frame.solution_at(z)
    vec = (2 * math.pi) ** (-(n - 1) / 2.0) * (y @ np.array(alpha.as_floats()))
    return CohClass(n, tuple(complex(v) for v in vec))


def central_charge(
    n: int,
    tau: complex,
    v: KClass,
    r: float,
    frame: FlatFrame,
) -> complex:
    """Z^tau(V)(r) = (2 pi r)^((n-1)/2) * integral of Phi(GammaHat Ch(V))."""
    alpha = cup(gamma_class(n), modified_chern(v))
    y, _ = frame.solution_at(r)
    vec = y @ np.array(alpha.as_floats())
    # (2 pi r)^((n-1)/2) * (2 pi)^(-(n-1)/2) = r^((n-1)/2)
    return complex(r) ** ((n - 1) / 2.0) * complex(vec[n - 1])


@dataclass(frozen=True)
class LimitReport:
    limit: complex
    values: np.ndarray
    deltas: np.ndarray
    monotone: bool
    used: int


def asymptotic_limit(
    samples: Sequence[Tuple[float, complex]],
    u: complex,
    n: int,
    width: int = 5,
) -> LimitReport:
    """Extrapolate lim e^(u/r) (2 pi r)^(-(n-1)/2) Z(r) from samples r -> 0+.

    samples must be ordered with decreasing r.  The renormalized sequence of a
    recessive charge is eventually poisoned by dominant-mode roundoff, so the
    extrapolation restricts itself to the quiet prefix of the data (the run of
    samples before successive differences start growing again).  A sequence
    that grows from the start means u is not the exponential rate: raised as
    NumericalError.
    """
    rs = np.array([s[0] for s in samples], dtype=float)
    if len(rs) < 4 or np.any(np.diff(rs) >= 0):
        raise ValueError("need at least four samples with decreasing r")
    g = np.array(
        [
            cmath.exp(u / r + cmath.log(z) - (n - 1) / 2.0 * cmath.log(2 * math.pi * r))
            for r, z in samples
        ]
    )
    deltas = np.abs(np.diff(g))
    if np.max(deltas) <= 1e-13 * np.max(np.abs(g)):
        return LimitReport(complex(g[-1]), g, deltas, True, len(g))
    imin = int(np.argmin(deltas))
    if imin <= 1 and deltas[-1] > 3.0 * deltas[0] and np.abs(g[-1]) > 2.0 * np.abs(g[0]):
        raise NumericalError("renormalized charge diverges: wrong u for this object")
    # quiet prefix: keep samples through the quietest consecutive difference
    cut = max(imin + 2, 4)
    poisoned = cut < len(g)
    gw = g[:cut]
    rw = rs[:cut]
    dw = deltas[: cut - 1]
    if poisoned:
        # drop the two noisiest entries next to the contamination onset
        gw = gw[:-2] if len(gw) >= 6 else gw
        rw = rw[: len(gw)]
        k = min(3, width, len(rw))
    else:
        k = min(width, len(rw))
    x = rw[-k:]
    val = gw[-k:].astype(complex)
    for lvl in range(1, k):
        val = (x[lvl:] * val[:-1] - x[:-lvl] * val[1:]) / (x[lvl:] - x[:-lvl])
    limit = complex(val[0])
    gmax = np.max(np.abs(gw))
    if abs(limit) > 4.0 * gmax or abs(limit) < 5e-2 * gmax:
        raise NumericalError(
            "extrapolation leaves the data range: wrong u for this object"
        )
    tailw = dw[-max(2, len(dw) // 2):]
    monotone = bool(np.all(np.diff(tailw) <= 1e-12 + 0.5 * np.max(tailw)))
    return LimitReport(limit, g, deltas, monotone, len(gw))


def detect_rate(
    samples: Sequence[Tuple[float, complex]],
    candidates: Sequence[complex],
    n: int,
) -> Tuple[int, complex]:
    """Identify the exponential rate of Z(r) among candidate eigenvalues.

    Difference quotients of log Z - (n-1)/2 log(2 pi r) in 1/r cancel the
    constant term, leaving u + O(r / delta(1/r)); the argument is unwrapped
    along decreasing r.  Returns (index of nearest candidate, estimate).
    """
    rs = np.array([s[0] for s in samples], dtype=float)
    zs = np.array([s[1] for s in samples], dtype=complex)
    if len(rs) < 2 or np.any(np.diff(rs) >= 0):
        raise ValueError("need at least two samples with decreasing r")
    logz = np.log(np.abs(zs)) + 1j * np.unwrap(np.angle(zs))
    f = logz - (n - 1) / 2.0 * np.log(2 * math.pi * rs)
    i, j = 0, len(rs) - 1
    u_est = -(f[j] - f[i]) / (1.0 / rs[j] - 1.0 / rs[i])
    cand = np.asarray(candidates, dtype=complex)
    best = int(np.argmin(np.abs(cand - u_est)))
    return best, complex(u_est)
