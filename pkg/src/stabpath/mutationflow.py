"""Mutation flow of exceptional collections under moving integration rays.

Each collection slot carries a K-class and is attached to one eigenvalue
u_c of the Euler multiplication; the slot's integration ray is u_c + R_>=0
e^(i phase).  When a ray sweeps across another eigenvalue (phase rotation)
or an eigenvalue crosses a ray (tau motion), the attached pair of objects
mutates:

* crossing from the right (Im(e^(-i phi)(u_b - u_a)) goes - to +): right
  mutation, the ray owner must sit immediately before the swept object;
* crossing from the left: left mutation, the ray owner immediately after.

In both cases the ray owner is the mutated object, keeps its eigenvalue,
and the pair swaps collection positions.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .khomology import ExceptionalCollection, chern_character
from .quantum import QuantumParams, eigenvalues

TWO_PI = 2.0 * math.pi


class NonGenericPathError(RuntimeError):
    """Simultaneous, tangential, or non-adjacent crossing."""


def _wrap(angle: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.fmod(angle + math.pi, TWO_PI)
    if a <= 0:
        a += TWO_PI
    return a - math.pi


@dataclass(frozen=True)
class EigenRayConfig:
    """Eigenvalue/ray state: which eigenvalue each collection slot rides."""

    n: int
    tau: complex
    phase: float
    attachment: Tuple[int, ...]  # slot -> canonical eigenvalue index
    sector_margin: float = 1e-9

    def eigenvalues(self) -> np.ndarray:
        return eigenvalues(QuantumParams(self.n, self.tau))

    def slot_rates(self) -> np.ndarray:
        us = self.eigenvalues()
        return np.array([us[c] for c in self.attachment])


@dataclass(frozen=True)
class FlowEvent:
    t: float
    kind: str  # "ray-rotation" | "eigenvalue-motion" | "ray-bend"
    moving: int  # canonical index of the ray owner
    stationary: int  # canonical index of the crossed eigenvalue
    side: str  # "from-right" | "from-left"
    mutation: str  # "right" | "left"
    labels: Tuple[str, ...]
    classes: Tuple[tuple, ...]


def is_admissible(config: EigenRayConfig) -> bool:
    """True iff no eigenvalue difference sits on the ray direction phase."""
    us = config.eigenvalues()
    for a in range(config.n):
        for b in range(config.n):
            if a == b:
                continue
            d = us[b] - us[a]
            if abs(d) < 1e-14:
                continue
            if abs(_wrap(cmath.phase(d) - config.phase)) < config.sector_margin:
                return False
    return True


def _apply_crossing(
    coll: ExceptionalCollection,
    attach: List[int],
    a: int,
    b: int,
    side: str,
) -> Tuple[ExceptionalCollection, str]:
    sa = attach.index(a)
    sb = attach.index(b)
    if side == "from-right":
        if sa != sb - 1:
            raise NonGenericPathError(
                f"right crossing with ray owner at slot {sa}, object at {sb}: "
                "not an adjacent pair"
            )
        new = coll.mutate_right(sa)
        mutation = "right"
        attach[sa], attach[sb] = attach[sb], attach[sa]
    elif side == "from-left":
        if sa != sb + 1:
            raise NonGenericPathError(
                f"left crossing with ray owner at slot {sa}, object at {sb}: "
                "not an adjacent pair"
            )
        new = coll.mutate_left(sb)
        mutation = "left"
        attach[sa], attach[sb] = attach[sb], attach[sa]
    else:  # pragma: no cover
        raise ValueError(side)
    return new, mutation


def _snapshot(coll: ExceptionalCollection) -> Tuple[tuple, ...]:
    return tuple(tuple(k.coh.coeffs) for k in coll.classes)


def _raise_if_simultaneous(events, tol: float = 1e-9) -> None:
    for (t1, a1, b1, _), (t2, a2, b2, _) in zip(events, events[1:]):
        if abs(t1 - t2) < tol and {a1, b1} & {a2, b2}:
            raise NonGenericPathError(
                "simultaneous crossings share an object; perturb the path"
            )


def rotate_phase(
    config: EigenRayConfig,
    coll: ExceptionalCollection,
    phi_target: float,
    steps: int = 256,
) -> Tuple[EigenRayConfig, ExceptionalCollection, List[FlowEvent]]:
    """Rotate the common ray direction, mutating at each swept eigenvalue.

    The ray anchored at u_a sweeps across u_b when the (unwrapped) direction
    passes arg(u_b - u_a); clockwise rotation crosses from the right (right
    mutations), anticlockwise from the left.
    """
    if not is_admissible(config):
        raise NonGenericPathError("start phase is not admissible")
    phi0, phi1 = config.phase, phi_target
    if phi0 == phi1:
        return config, coll, []
    us = config.eigenvalues()
    raw = []
    for a in config.attachment:
        for b in config.attachment:
            if a == b:
                continue
            psi = cmath.phase(us[b] - us[a])
            kmin = math.ceil((min(phi0, phi1) - psi) / TWO_PI - 1e-12)
            kmax = math.floor((max(phi0, phi1) - psi) / TWO_PI + 1e-12)
            for k in range(kmin, kmax + 1):
                t = (psi + TWO_PI * k - phi0) / (phi1 - phi0)
                if 1e-12 < t < 1 - 1e-12:
                    t = _bisect_angle(
                        lambda tt: _wrap(cmath.phase(us[b] - us[a]) - (phi0 + tt * (phi1 - phi0))),
                        t,
                    )
                    raw.append((t, a, b, "from-right" if phi1 < phi0 else "from-left"))
    raw.sort(key=lambda e: e[0])
    _raise_if_simultaneous(raw)
    attach = list(config.attachment)
    events: List[FlowEvent] = []
    for t, a, b, side in raw:
        coll, mutation = _apply_crossing(coll, attach, a, b, side)
        events.append(
            FlowEvent(t, "ray-rotation", a, b, side, mutation, tuple(coll.labels()), _snapshot(coll))
        )
    out = replace(config, phase=phi1, attachment=tuple(attach))
    if not is_admissible(out):
        raise NonGenericPathError("target phase is not admissible")
    return out, coll, events


def _bisect_angle(f: Callable[[float], float], t_guess: float, half: float = 1e-6) -> float:
    """Polish a crossing parameter to 1e-9 by bisection on the wrapped angle."""
    lo, hi = t_guess - half, t_guess + half
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        return t_guess  # already at the root to working accuracy
    while hi - lo > 1e-9:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if flo * fm < 0:
            hi, fhi = mid, fm
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def move_tau(
    config: EigenRayConfig,
    coll: ExceptionalCollection,
    tau_path: Callable[[float], complex],
    steps: int = 400,
) -> Tuple[EigenRayConfig, ExceptionalCollection, List[FlowEvent]]:
    """Move tau along tau_path(t), t in [0, 1], mutating at ray crossings."""
    if abs(tau_path(0.0) - config.tau) > 1e-12:
        raise ValueError("tau_path(0) must equal the current tau")
    if not is_admissible(config):
        raise NonGenericPathError("phase inadmissible at the start of the move")
    phi = config.phase
    n = config.n

    def us_at(t: float) -> np.ndarray:
        return eigenvalues(QuantumParams(n, tau_path(t)))

    def angle(t: float, a: int, b: int) -> float:
        u = us_at(t)
        return _wrap(cmath.phase(u[b] - u[a]) - phi)

    ts = np.linspace(0.0, 1.0, steps + 1)
    raw = []
    for a in config.attachment:
        for b in config.attachment:
            if a == b:
                continue
            vals = [angle(t, a, b) for t in ts]
            for i in range(steps):
                f0, f1 = vals[i], vals[i + 1]
                if abs(f0) + abs(f1) > math.pi:  # jump across the anti-ray
                    continue
                if f0 == 0.0 or f0 * f1 < 0:
                    lo, hi = ts[i], ts[i + 1]
                    flo = f0
                    while hi - lo > 1e-9:
                        mid = 0.5 * (lo + hi)
                        fm = angle(mid, a, b)
                        if flo * fm <= 0:
                            hi = mid
                        else:
                            lo, flo = mid, fm
                    t_star = 0.5 * (lo + hi)
                    side = "from-right" if f1 > f0 else "from-left"
                    raw.append((t_star, a, b, side))
    raw.sort(key=lambda e: e[0])
    _raise_if_simultaneous(raw)
    attach = list(config.attachment)
    events: List[FlowEvent] = []
    for t, a, b, side in raw:
        coll, mutation = _apply_crossing(coll, attach, a, b, side)
        events.append(
            FlowEvent(t, "eigenvalue-motion", a, b, side, mutation, tuple(coll.labels()), _snapshot(coll))
        )
    out = EigenRayConfig(n, tau_path(1.0), phi, tuple(attach), config.sector_margin)
    if not is_admissible(out):
        raise NonGenericPathError("phase inadmissible at the end of the move")
    return out, coll, events


def _initial_directions(n: int, tau: complex, k: int) -> List[float]:
    """Radial ray directions for the start collection O(k), ..., O(k+n-1).

    The lattice direction of twist m is -2 pi m / n, normalized to [-pi, pi];
    a ray exactly opposite the target direction unfolds anticlockwise when it
    sits after the 0-twist slot and clockwise when before.  tau rotates all
    anchors rigidly by Im(tau) / n.
    """
    j_star = (-k) % n
    dirs = []
    for s in range(n):
        m = k + s
        lat = _wrap(-TWO_PI * m / n)
        if abs(abs(lat) - math.pi) < 1e-12:
            lat = -math.pi if s > j_star else math.pi
        dirs.append(lat + (tau.imag) / n)
    return dirs


def bend_to_admissible(
    n: int,
    tau: complex,
    k: int = 0,
    phi: float = 0.02,
) -> Tuple[ExceptionalCollection, Tuple[int, ...], List[FlowEvent]]:
    """Bend the radial rays of O(k), ..., O(k+n-1) to the common direction phi.

    Returns the mutated collection, the slot-to-canonical-eigenvalue bijection
    i(j), and the event log.  The ray of twist m is anchored at the canonical
    eigenvalue of index (-m) mod n.
    """
    if abs(tau.imag) >= math.pi:
        raise NonGenericPathError("bend start is only defined for |Im tau| < pi")
    coll = ExceptionalCollection([chern_character(n, k + s) for s in range(n)])
    attach = [(-(k + s)) % n for s in range(n)]
    config = EigenRayConfig(n, tau, phi, tuple(attach))
    if not is_admissible(config):
        raise NonGenericPathError("target phase is not admissible")
    us = eigenvalues(QuantumParams(n, tau))
    dirs = _initial_directions(n, tau, k)
    raw = []
    for s in range(n):
        a = attach[s]
        th0 = dirs[s]
        sweep = phi - th0
        if abs(sweep) < 1e-14:
            continue
        for b in range(n):
            if b == a:
                continue
            psi = cmath.phase(us[b] - us[a])
            kmin = math.ceil((min(th0, phi) - psi) / TWO_PI - 1e-12)
            kmax = math.floor((max(th0, phi) - psi) / TWO_PI + 1e-12)
            for kk in range(kmin, kmax + 1):
                t = (psi + TWO_PI * kk - th0) / sweep
                if 1e-12 < t < 1 - 1e-12:
                    raw.append((t, a, b, "from-right" if sweep < 0 else "from-left"))
    raw.sort(key=lambda e: e[0])
    _raise_if_simultaneous(raw)
    events: List[FlowEvent] = []
    for t, a, b, side in raw:
        coll, mutation = _apply_crossing(coll, attach, a, b, side)
        events.append(
            FlowEvent(t, "ray-bend", a, b, side, mutation, tuple(coll.labels()), _snapshot(coll))
        )
    return coll, tuple(attach), events
