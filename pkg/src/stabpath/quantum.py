"""Small quantum cohomology of P^(n-1) at tau in H^2.

The quantum product is the closed-form deformation h * h^i = h^(i+1) for
i < n-1 and e^tau for i = n-1; everything downstream (Euler multiplication
matrix, eigenvalues, idempotents) is in closed form as well.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from typing import List

import numpy as np

from .khomology import CohClass, cup, integrate, pairing, unit


@dataclass(frozen=True)
class QuantumParams:
    n: int
    tau: complex = 0j

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need n >= 2")


def qmul(a: CohClass, b: CohClass, p: QuantumParams) -> CohClass:
    """Small quantum product at tau, bilinear over the h^k basis."""
    if a.n != b.n or a.n != p.n:
        raise ValueError("dimension mismatch")
    n = p.n
    q = cmath.exp(p.tau)
    out = [0j] * n
    ac = a.as_floats()
    bc = b.as_floats()
    for i, ai in enumerate(ac):
        if not ai:
            continue
        for j, bj in enumerate(bc):
            if not bj:
                continue
            d = i + j
            if d <= n - 1:
                out[d] += ai * bj
            else:
                out[d - n] += ai * bj * q  # valid: i + j <= 2n - 2
    return CohClass(n, tuple(out))


def euler_mult_matrix(p: QuantumParams) -> np.ndarray:
    """Matrix of c1(P) *_tau: N times the cyclic shift with e^tau up top."""
    n = p.n
    m = np.zeros((n, n), dtype=complex)
    for i in range(1, n):
        m[i, i - 1] = 1.0
    m[0, n - 1] = cmath.exp(p.tau)
    return n * m


def eigenvalues(p: QuantumParams) -> np.ndarray:
    """u_j = n zeta^j e^(tau/n), zeta = e^(2 pi i / n), in this index order."""
    n = p.n
    zeta = cmath.exp(2j * cmath.pi / n)
    base = n * cmath.exp(p.tau / n)
    return np.array([base * zeta ** j for j in range(n)])


def grading_matrix(n: int) -> np.ndarray:
    """mu = diag(p - (n-1)/2) on H^(2p)."""
    return np.diag([p - (n - 1) / 2.0 for p in range(n)])


@dataclass(frozen=True)
class SemisimpleData:
    eigenvalues: np.ndarray
    idempotents: List[CohClass]
    normalized_idempotents: List[CohClass]


def idempotents(p: QuantumParams, tol: float = 1e-10) -> SemisimpleData:
    """Idempotent basis e_j of *_tau and its Poincare-normalized version.

    e_j is the Lagrange interpolation polynomial of the h-action at the
    eigenvalue u_j / n, i.e. coefficient of h^k equals (u_j/n)^(-k) / n.
    Psi_j = e_j / sqrt((e_j, e_j)) with the principal square root branch.
    """
    n = p.n
    us = eigenvalues(p)
    es: List[CohClass] = []
    psis: List[CohClass] = []
    for u in us:
        lam = u / n
        e = CohClass(n, tuple(lam ** (-k) / n for k in range(n)))
        norm2 = pairing(e, e)
        if abs(norm2) < 1e-14:
            raise ArithmeticError("degenerate idempotent; cannot normalize")
        psis.append((1.0 / cmath.sqrt(norm2)) * e)
        es.append(e)
    data = SemisimpleData(us, es, psis)
    _validate_semisimple(p, data, tol)
    return data


def _validate_semisimple(p: QuantumParams, data: SemisimpleData, tol: float) -> None:
    n = p.n
    for j, e in enumerate(data.idempotents):
        for k, f in enumerate(data.idempotents):
            prod = qmul(e, f, p)
            target = e if j == k else CohClass(n, (0j,) * n)
            err = max(abs(a - b) for a, b in zip(prod.as_floats(), target.as_floats()))
            if err > tol:
                raise ArithmeticError(f"e_{j} * e_{k} fails idempotency by {err:.2e}")
    total = data.idempotents[0]
    for e in data.idempotents[1:]:
        total = total + e
    err = max(abs(a - b) for a, b in zip(total.as_floats(), unit(n).as_floats()))
    if err > tol:
        raise ArithmeticError(f"sum of idempotents misses the unit by {err:.2e}")
    em = euler_mult_matrix(p)
    for j, e in enumerate(data.idempotents):
        v = np.array(e.as_floats())
        err = np.max(np.abs(em @ v - data.eigenvalues[j] * v))
        if err > tol * max(1.0, np.max(np.abs(v)) * abs(data.eigenvalues[j])):
            raise ArithmeticError(f"e_{j} is not a u_{j} eigenvector")
    for j, psi in enumerate(data.normalized_idempotents):
        if abs(integrate(psi)) < 1e-12:
            raise ArithmeticError(f"integral of Psi_{j} vanishes")
