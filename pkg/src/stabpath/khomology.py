"""Exact cohomology and K-theory calculus on complex projective space P^(n-1).

Classes of coherent sheaves are tracked as truncated polynomials in the
hyperplane class h (h^n = 0).  K-classes carry exact rational coefficients so
that mutation bookkeeping stays exact; analytic classes (Gamma class,
2-pi-i-rescaled Chern character) live in complex floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

Coeff = Union[Fraction, int, complex, float]

#: Euler-Mascheroni constant, 20 digits.
EULER_GAMMA = 0.57721566490153286061

_BERNOULLI = (
    Fraction(1, 6),
    Fraction(-1, 30),
    Fraction(1, 42),
    Fraction(-1, 30),
    Fraction(5, 66),
    Fraction(-691, 2730),
    Fraction(7, 6),
)


def _zeta(k: int, cutoff: int = 24) -> float:
    """Riemann zeta at integer k >= 2 by Euler-Maclaurin, full double accuracy."""
    if k < 2:
        raise ValueError("zeta only needed for k >= 2")
    s = sum(n ** (-float(k)) for n in range(1, cutoff))
    m = float(cutoff)
    s += m ** (1.0 - k) / (k - 1.0) + 0.5 * m ** (-float(k))
    # correction terms B_{2j}/(2j)! * (k)(k+1)...(k+2j-2) * m^{-(k+2j-1)}
    rising = float(k)
    fact = 2.0
    for j, b in enumerate(_BERNOULLI, start=1):
        s += float(b) / fact * rising * m ** (-(k + 2 * j - 1.0))
        rising *= (k + 2 * j - 1.0) * (k + 2 * j)
        fact *= (2 * j + 1.0) * (2 * j + 2.0)
    return s


def _is_exact(x: Coeff) -> bool:
    return isinstance(x, (Fraction, int))


def _to_complex(x: Coeff) -> complex:
    if isinstance(x, Fraction):
        return complex(x.numerator / x.denominator)
    return complex(x)


@dataclass(frozen=True)
class CohClass:
    """Element of H^*(P^(n-1), C) as coefficients of 1, h, ..., h^(n-1)."""

    n: int
    coeffs: tuple

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need n >= 2")
        if len(self.coeffs) != self.n:
            raise ValueError("coefficient vector must have length n")
        object.__setattr__(self, "coeffs", tuple(self.coeffs))

    @property
    def exact(self) -> bool:
        return all(_is_exact(c) for c in self.coeffs)

    def __add__(self, other: "CohClass") -> "CohClass":
        _check_same_space(self, other)
        return CohClass(self.n, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "CohClass") -> "CohClass":
        _check_same_space(self, other)
        return CohClass(self.n, tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __rmul__(self, scalar: Coeff) -> "CohClass":
        if _is_exact(scalar) and self.exact:
            return CohClass(self.n, tuple(scalar * c for c in self.coeffs))
        z = _to_complex(scalar)
        return CohClass(self.n, tuple(z * _to_complex(c) for c in self.coeffs))

    def __neg__(self) -> "CohClass":
        return CohClass(self.n, tuple(-c for c in self.coeffs))

    def as_floats(self):
        return [_to_complex(c) for c in self.coeffs]


def _check_same_space(a: CohClass, b: CohClass) -> None:
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: n={a.n} vs n={b.n}")


def unit(n: int) -> CohClass:
    return CohClass(n, (Fraction(1),) + (Fraction(0),) * (n - 1))


def hyperplane_power(n: int, p: int) -> CohClass:
    c = [Fraction(0)] * n
    c[p] = Fraction(1)
    return CohClass(n, tuple(c))


def cup(a: CohClass, b: CohClass) -> CohClass:
    """Cup product: truncated polynomial product in h (h^n = 0)."""
    _check_same_space(a, b)
    n = a.n
    if a.exact and b.exact:
        out = [Fraction(0)] * n
        ac, bc = a.coeffs, b.coeffs
    else:
        out = [0j] * n
        ac = a.as_floats()
        bc = b.as_floats()
    for i, ai in enumerate(ac):
        if not ai:
            continue
        for j in range(n - i):
            out[i + j] += ai * bc[j]
    return CohClass(n, tuple(out))


def integrate(a: CohClass) -> Coeff:
    """Integrate over P^(n-1): the coefficient of the point class h^(n-1)."""
    return a.coeffs[a.n - 1]


def pairing(a: CohClass, b: CohClass) -> Coeff:
    """Poincare pairing (a, b) = integral of a cup b."""
    return integrate(cup(a, b))


@dataclass(frozen=True)
class KClass:
    """Rational Chern-character vector of a K-theory class, with a label."""

    coh: CohClass
    label: str = ""

    def __post_init__(self):
        if not self.coh.exact:
            raise ValueError("K-classes require exact rational coefficients")

    @property
    def n(self) -> int:
        return self.coh.n

    def __add__(self, other: "KClass") -> "KClass":
        return KClass(self.coh + other.coh, f"{self.label}+{other.label}")

    def __sub__(self, other: "KClass") -> "KClass":
        return KClass(self.coh - other.coh, f"{self.label}-{other.label}")

    def scale(self, k: Coeff, label: str = "") -> "KClass":
        return KClass(k * self.coh, label or self.label)


def chern_character(n: int, j: int) -> KClass:
    """ch(O(j)) = exp(j h): coefficient of h^p is j^p / p!."""
    if n < 2:
        raise ValueError("need n >= 2")
    coeffs = [Fraction(j) ** p / math.factorial(p) for p in range(n)]
    return KClass(CohClass(n, tuple(coeffs)), label=f"O({j})" if j else "O")


def dual(a: CohClass) -> CohClass:
    """Flip the sign of odd-degree coefficients (dual bundle on ch level)."""
    return CohClass(a.n, tuple(-c if p % 2 else c for p, c in enumerate(a.coeffs)))


def todd_class(n: int) -> CohClass:
    """Todd class of P^(n-1): (h / (1 - e^-h))^n, exact rationals."""
    if n < 2:
        raise ValueError("need n >= 2")
    # h/(1 - e^-h) = 1 / (1 - h/2 + h^2/6 - ...) ; invert the series exactly.
    denom = [Fraction((-1) ** p, math.factorial(p + 1)) for p in range(n)]
    inv = [Fraction(0)] * n
    inv[0] = Fraction(1)
    for p in range(1, n):
        inv[p] = -sum(denom[i] * inv[p - i] for i in range(1, p + 1))
    td1 = CohClass(n, tuple(inv))
    out = unit(n)
    for _ in range(n):
        out = cup(out, td1)
    return out


def euler_form(a: KClass, b: KClass) -> int:
    """Euler pairing chi(a, b) via Riemann-Roch: integral of a^v . b . td."""
    _check_same_space(a.coh, b.coh)
    chi = integrate(cup(cup(dual(a.coh), b.coh), todd_class(a.n)))
    if not isinstance(chi, Fraction):
        chi = Fraction(chi)
    if chi.denominator != 1:
        raise ValueError(
            f"non-integral Euler pairing {chi}; corrupted K-class input"
        )
    return int(chi)


def gamma_class(n: int) -> CohClass:
    """Gamma class of P^(n-1): Gamma(1 + h)^n as a truncated real series.

    Computed from log Gamma(1+x) = -gamma x + sum_{k>=2} zeta(k) (-x)^k / k,
    exponentiated and raised to the n-th power.
    """
    log1 = [0.0] * n
    if n > 1:
        log1[1] = -EULER_GAMMA
    for k in range(2, n):
        log1[k] = _zeta(k) * (-1.0) ** k / k
    logn = [n * c for c in log1]
    # exp of a series with zero constant term
    out = [0.0] * n
    out[0] = 1.0
    term = [0.0] * n
    term[0] = 1.0
    for m in range(1, n):
        nxt = [0.0] * n
        for i in range(n):
            if term[i] == 0.0:
                continue
            for j in range(1, n - i):
                nxt[i + j] += term[i] * logn[j]
        term = [c / m for c in nxt]
        for i in range(n):
            out[i] += term[i]
    return CohClass(n, tuple(out))


def modified_chern(a: KClass) -> CohClass:
    """Rescaled Chern character: multiply the h^p coefficient by (2 pi i)^p."""
    two_pi_i = 2j * math.pi
    return CohClass(
        a.n, tuple(two_pi_i ** p * _to_complex(c) for p, c in enumerate(a.coh.coeffs))
    )


def twist_matrix(n: int):
    """Columns ch(O(j)), j = 0..n-1, as exact rows of h^p coefficients."""
    return [[chern_character(n, j).coh.coeffs[p] for j in range(n)] for p in range(n)]


def _solve_exact(mat, rhs):
    """Gaussian elimination over Q. mat: list of rows, rhs: list; both Fractions."""
    n = len(rhs)
    a = [[Fraction(mat[i][j]) for j in range(n)] + [Fraction(rhs[i])] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            raise ValueError("singular system")
        a[col], a[piv] = a[piv], a[col]
        inv = Fraction(1) / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [a[r][n] for r in range(n)]


def decompose_into_twists(k: KClass):
    """Integer coordinates of a K-class in the basis [O(0)], ..., [O(n-1)]."""
    n = k.n
    coords = _solve_exact(twist_matrix(n), list(k.coh.coeffs))
    for c in coords:
        if c.denominator != 1:
            raise ValueError("class is not in the integral K-lattice")
    return [int(c) for c in coords]


class ExceptionalCollection:
    """Ordered list of K-classes satisfying the Euler-orthogonality pattern."""

    def __init__(self, classes: Sequence[KClass], validate: bool = True):
        self.classes = list(classes)
        if validate:
            self.validate()

    def __len__(self) -> int:
        return len(self.classes)

    def __getitem__(self, i: int) -> KClass:
        return self.classes[i]

    def labels(self):
        return [k.label for k in self.classes]

    def validate(self) -> None:
        for i, e in enumerate(self.classes):
            if euler_form(e, e) != 1:
                raise ValueError(f"chi(E_{i}, E_{i}) != 1: not exceptional")
        for b in range(len(self.classes)):
            for a in range(b):
                if euler_form(self.classes[b], self.classes[a]) != 0:
                    raise ValueError(
                        f"chi(E_{b}, E_{a}) != 0 for {a} < {b}: ordering broken"
                    )
        if len(self.classes) == self.classes[0].n:
            m = [decompose_into_twists(e) for e in self.classes]
            if abs(_int_det(m)) != 1:
                raise ValueError("collection is not a Z-basis of the K-lattice")

    def mutate_right(self, i: int) -> "ExceptionalCollection":
        """(E_i, E_(i+1)) -> (E_(i+1), E_i - chi(E_i, E_(i+1)) E_(i+1))."""
        if not 0 <= i < len(self.classes) - 1:
            raise IndexError("mutation index out of range")
        left, right = self.classes[i], self.classes[i + 1]
        chi = euler_form(left, right)
        mutated = KClass(
            left.coh - Fraction(chi) * right.coh,
            label=f"R_{{{right.label}}}({left.label})",
        )
        out = list(self.classes)
        out[i], out[i + 1] = right, mutated
        return ExceptionalCollection(out)

    def mutate_left(self, i: int) -> "ExceptionalCollection":
        """(E_i, E_(i+1)) -> (E_(i+1) - chi(E_i, E_(i+1)) E_i, E_i)."""
        if not 0 <= i < len(self.classes) - 1:
            raise IndexError("mutation index out of range")
        left, right = self.classes[i], self.classes[i + 1]
        chi = euler_form(left, right)
        mutated = KClass(
            right.coh - Fraction(chi) * left.coh,
            label=f"L_{{{left.label}}}({right.label})",
        )
        out = list(self.classes)
        out[i], out[i + 1] = mutated, left
        return ExceptionalCollection(out)


def _int_det(m) -> int:
    """Determinant of a small integer matrix by fraction-free elimination."""
    a = [row[:] for row in m]
    n = len(a)
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            return 0
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            det = -det
        det *= a[col][col]
        inv = Fraction(1, a[col][col])
        a[col] = [Fraction(x) * inv for x in a[col]]
        for r in range(col + 1, n):
            if a[r][col]:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    assert det.denominator == 1
    return int(det)


def beilinson_collection(n: int, k: int = 0) -> ExceptionalCollection:
    """The twist collection O(k), O(k+1), ..., O(k+n-1)."""
    return ExceptionalCollection([chern_character(n, k + s) for s in range(n)])


def omega_twists(n: int) -> ExceptionalCollection:
    """Classes of Omega^(n-1)(n-1), ..., Omega^1(1), O from the Euler sequence.

    Recursion from the twisted exact sequences:
    [Omega^l(l)] = C(n, l) [O] - [Omega^(l-1)(l-1)] . e^h.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    eh = chern_character(n, 1).coh
    classes = [chern_character(n, 0)]  # Omega^0 = O
    for l in range(1, n):
        prev = classes[-1].coh
        coh = Fraction(math.comb(n, l)) * unit(n) - cup(prev, eh)
        classes.append(KClass(coh, label=f"Om^{l}({l})"))
    return ExceptionalCollection(list(reversed(classes)))
