"""Exact Wigner 3j/6j symbols and hyperfine dipole coupling coefficients.

All symbols are evaluated with the Racah formulas in integer/rational
arithmetic. A value is returned as a :class:`SqrtRational`, i.e.
``sign * sqrt(square)`` with ``square`` a :class:`fractions.Fraction`, so
products and quotients of symbols stay exact. Conversion to ``float``
happens only when a :class:`TransitionTable` is queried numerically.

Angular momenta may be given as ``int``, ``Fraction``, half-integral
``float``, strings like ``"3/2"`` or :class:`HalfInteger`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Iterable, Mapping

import numpy as np

from .exceptions import AngularMomentumError, LevelSchemeError

__all__ = [
    "HalfInteger",
    "SqrtRational",
    "wigner3j",
    "wigner6j",
    "clebsch_gordan",
    "TransitionTable",
    "coupling_table",
    "hyperfine_table",
    "reflection_phase",
]


@dataclass(frozen=True, order=True)
class HalfInteger:
    """Angular momentum or projection stored as ``2j``."""

    twice: int

    @classmethod
    def of(cls, value) -> "HalfInteger":
        if isinstance(value, HalfInteger):
            return value
        if isinstance(value, bool):
            raise AngularMomentumError(f"not an angular momentum: {value!r}")
        if isinstance(value, str):
            value = Fraction(value)
        if isinstance(value, (int, np.integer)):
            return cls(2 * int(value))
        if isinstance(value, Rational):
            tw = Fraction(value) * 2
        else:
            tw = Fraction(float(value)) * 2
        if tw.denominator != 1:
            raise AngularMomentumError(f"{value!r} is not an integer or half-integer")
        return cls(int(tw))

    @property
    def value(self) -> Fraction:
        return Fraction(self.twice, 2)

    def __float__(self) -> float:
        return self.twice / 2

    def __repr__(self) -> str:
        return f"HalfInteger({self.value})"


def _twice(value) -> int:
    return HalfInteger.of(value).twice


@dataclass(frozen=True)
class SqrtRational:
    """Exact real number ``sign * sqrt(square)``."""

    sign: int
    square: Fraction

    def __post_init__(self):
        if self.square < 0:
            raise ValueError("square must be non-negative")
        if self.square == 0 and self.sign != 0:
            object.__setattr__(self, "sign", 0)
        elif self.square != 0 and self.sign not in (-1, 1):
            raise ValueError("sign must be -1 or 1 for a nonzero value")

    @classmethod
    def zero(cls) -> "SqrtRational":
        return cls(0, Fraction(0))

    @classmethod
    def from_rational(cls, q) -> "SqrtRational":
        q = Fraction(q)
        return cls((q > 0) - (q < 0), q * q)

    def __float__(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * math.sqrt(self.square)

    def __bool__(self) -> bool:
        return self.sign != 0

    def __neg__(self) -> "SqrtRational":
        return SqrtRational(-self.sign, self.square)

    def __mul__(self, other) -> "SqrtRational":
        if not isinstance(other, SqrtRational):
            other = SqrtRational.from_rational(other)
        return SqrtRational(self.sign * other.sign, self.square * other.square)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "SqrtRational":
        if not isinstance(other, SqrtRational):
            other = SqrtRational.from_rational(other)
        if other.sign == 0:
            raise ZeroDivisionError("division by an exact zero")
        return SqrtRational(self.sign * other.sign, self.square / other.square)

    def __repr__(self) -> str:
        if self.sign == 0:
            return "0"
        return f"{'-' if self.sign < 0 else ''}sqrt({self.square})"


@lru_cache(maxsize=None)
def _fact(n: int) -> int:
    return math.factorial(n)


def _triangle_ok(ta: int, tb: int, tc: int) -> bool:
    return abs(ta - tb) <= tc <= ta + tb


def _check_magnitudes(*twice: int) -> None:
    for t in twice:
        if t < 0:
            raise AngularMomentumError("angular momentum magnitudes must be non-negative")


def _delta_sq(ta: int, tb: int, tc: int) -> Fraction:
    # triangle coefficient squared, arguments given as 2j
    a, b, c = (ta + tb - tc) // 2, (ta - tb + tc) // 2, (-ta + tb + tc) // 2
    return Fraction(_fact(a) * _fact(b) * _fact(c), _fact((ta + tb + tc) // 2 + 1))


def wigner3j(j1, j2, j3, m1, m2, m3) -> SqrtRational:
    """Wigner 3j symbol ``(j1 j2 j3; m1 m2 m3)``.

    Exact zero for violated selection rules (triangle rule, ``m1+m2+m3 != 0``,
    ``|m| > j``). Raises :class:`AngularMomentumError` when a projection does
    not have the parity of its magnitude.
    """
    tj1, tj2, tj3 = _twice(j1), _twice(j2), _twice(j3)
    tm1, tm2, tm3 = _twice(m1), _twice(m2), _twice(m3)
    _check_magnitudes(tj1, tj2, tj3)
    for tj, tm in ((tj1, tm1), (tj2, tm2), (tj3, tm3)):
        if (tj - tm) % 2:
            raise AngularMomentumError("j and m must both be integer or both half-integer")
    if tm1 + tm2 + tm3 != 0:
        return SqrtRational.zero()
    if abs(tm1) > tj1 or abs(tm2) > tj2 or abs(tm3) > tj3:
        return SqrtRational.zero()
    if not _triangle_ok(tj1, tj2, tj3):
        return SqrtRational.zero()

    # integer arguments of the factorials
    jpm = [(tj1 + tm1) // 2, (tj1 - tm1) // 2, (tj2 + tm2) // 2,
           (tj2 - tm2) // 2, (tj3 + tm3) // 2, (tj3 - tm3) // 2]
    k1 = (tj3 - tj2 + tm1) // 2
    k2 = (tj3 - tj1 - tm2) // 2
    n1 = (tj1 + tj2 - tj3) // 2
    n2 = (tj1 - tm1) // 2
    n3 = (tj2 + tm2) // 2
    tmin = max(0, -k1, -k2)
    tmax = min(n1, n2, n3)

    total = Fraction(0)
    for t in range(tmin, tmax + 1):
        den = _fact(t) * _fact(k1 + t) * _fact(k2 + t) * _fact(n1 - t) * _fact(n2 - t) * _fact(n3 - t)
        total += Fraction(-1 if t % 2 else 1, den)
    if total == 0:
        return SqrtRational.zero()

    pref_sq = _delta_sq(tj1, tj2, tj3) * math.prod(_fact(k) for k in jpm)
    phase = -1 if ((tj1 - tj2 - tm3) // 2) % 2 else 1
    sign = phase * (1 if total > 0 else -1)
    return SqrtRational(sign, pref_sq * total * total)


def wigner6j(j1, j2, j3, j4, j5, j6) -> SqrtRational:
    """Wigner 6j symbol ``{j1 j2 j3; j4 j5 j6}`` via the Racah sum.

    The triads are ``(j1 j2 j3)``, ``(j1 j5 j6)``, ``(j4 j2 j6)`` and
    ``(j4 j5 j3)``. A triad whose perimeter is not an integer is a domain
    error; a triad violating the triangle inequality gives an exact zero.
    """
    tw = [_twice(j) for j in (j1, j2, j3, j4, j5, j6)]
    _check_magnitudes(*tw)
    a1, a2, a3, a4, a5, a6 = tw
    triads = ((a1, a2, a3), (a1, a5, a6), (a4, a2, a6), (a4, a5, a3))
    for tri in triads:
        if sum(tri) % 2:
            raise AngularMomentumError(f"triad {tuple(Fraction(t, 2) for t in tri)} has a non-integer sum")
    if not all(_triangle_ok(*tri) for tri in triads):
        return SqrtRational.zero()

    alphas = [sum(tri) // 2 for tri in triads]
    betas = [(a1 + a2 + a4 + a5) // 2, (a2 + a3 + a5 + a6) // 2, (a3 + a1 + a6 + a4) // 2]
    total = Fraction(0)
    for t in range(max(alphas), min(betas) + 1):
        den = math.prod(_fact(t - a) for a in alphas) * math.prod(_fact(b - t) for b in betas)
        total += Fraction((-1) ** t * _fact(t + 1), den)
    if total == 0:
        return SqrtRational.zero()
    pref_sq = math.prod(_delta_sq(*tri) for tri in triads)
    return SqrtRational(1 if total > 0 else -1, pref_sq * total * total)


def clebsch_gordan(j1, m1, j2, m2, j, m) -> SqrtRational:
    """``<j1 m1; j2 m2 | j m>`` with the Condon-Shortley phase."""
    three_j = wigner3j(j1, j2, j, m1, m2, -Fraction(_twice(m), 2))
    if not three_j:
        return three_j
    exponent = (_twice(j1) - _twice(j2) + _twice(m)) // 2
    phase = -1 if exponent % 2 else 1
    return SqrtRational(phase * three_j.sign, three_j.square * (_twice(j) + 1))


def _projections(tj: int) -> list[Fraction]:
    return [Fraction(tm, 2) for tm in range(-tj, tj + 1, 2)]


def reflection_phase(ground_F, excited_F) -> int:
    """Phase ``s`` in ``c[F'; -m, -m'] = s * c[F'; m, m']``, i.e. ``(-1)**(F'+1-F)``."""
    return -1 if ((_twice(excited_F) + 2 - _twice(ground_F)) // 2) % 2 else 1


@dataclass(frozen=True)
class TransitionTable:
    """Dipole coupling coefficients ``c[F'; m, m']`` for one ground level.

    Only entries with ``|m' - m| <= 1`` are stored; everything else is an
    exact zero by the dipole selection rule. ``forbidden`` lists excited
    levels of the scheme that cannot be reached from ``ground_F`` by a dipole
    transition (they carry no entries, and are reported rather than dropped).
    """

    ground_F: Fraction
    excited_F: tuple[Fraction, ...]
    exact: Mapping[tuple[Fraction, Fraction, Fraction], SqrtRational]
    forbidden: tuple[Fraction, ...] = ()
    _float: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def ground_m(self) -> list[Fraction]:
        return _projections(_twice(self.ground_F))

    def excited_m(self, f_prime) -> list[Fraction]:
        return _projections(_twice(f_prime))

    def coefficient(self, f_prime, m, m_prime) -> float:
        key = (Fraction(f_prime), Fraction(m), Fraction(m_prime))
        try:
            return self._float[key]
        except KeyError:
            value = float(self.exact.get(key, SqrtRational.zero()))
            self._float[key] = value
            return value

    def squared(self, f_prime, m, m_prime) -> Fraction:
        key = (Fraction(f_prime), Fraction(m), Fraction(m_prime))
        return self.exact.get(key, SqrtRational.zero()).square

    def items(self) -> Iterable[tuple[tuple[Fraction, Fraction, Fraction], SqrtRational]]:
        return self.exact.items()

    def total_strength(self, m) -> Fraction:
        """Exact ``sum over F', m'`` of ``c**2`` out of ground sublevel ``m``."""
        m = Fraction(m)
        return sum((v.square for (fp, mm, mp), v in self.exact.items() if mm == m), Fraction(0))

    def dense(self) -> np.ndarray:
        """Array ``c[level, m + F, m' + Fmax']`` over the excited levels in order."""
        fmax = max(self.excited_F, default=Fraction(0))
        shift_e = int(fmax)
        n_g = len(self.ground_m)
        out = np.zeros((len(self.excited_F), n_g, 2 * shift_e + 1))
        for (fp, m, mp), v in self.exact.items():
            k = self.excited_F.index(fp)
            out[k, int(m + self.ground_F), int(mp + fmax)] = float(v)
        return out


def hyperfine_table(ground_F, excited_F: Iterable, J, J_prime, I) -> TransitionTable:
    """Build ``c[F'; m, m']`` for the ``J -> J'`` line with nuclear spin ``I``.

    ``c[F'; m, m'] ∝ (-1)**(F'+J+1+I) sqrt((2F'+1)(2J+1)) {J J' 1; F' F I}
    <F m | F' m'; 1 (m - m')>``, normalized so the stretched cycling
    transition ``m = F -> m' = F+1`` on the highest ``F'`` equals +1.
    Outputs of every rate formula only pick up a global scale from this
    normalization; zero crossings are unaffected.
    """
    F = Fraction(HalfInteger.of(ground_F).value)
    Jg, Je, nuc = (HalfInteger.of(x).value for x in (J, J_prime, I))
    levels = tuple(Fraction(HalfInteger.of(fp).value) for fp in excited_F)
    if len(set(levels)) != len(levels):
        raise LevelSchemeError("duplicate excited level in coupling table request")

    raw: dict[tuple[Fraction, Fraction, Fraction], SqrtRational] = {}
    forbidden = []
    for fp in levels:
        if not (abs(F - 1) <= fp <= F + 1) or (F == 0 and fp == 0):
            forbidden.append(fp)
            continue
        six_j = wigner6j(Jg, Je, 1, fp, F, nuc)
        if not six_j:
            forbidden.append(fp)
            continue
        exponent = fp + Jg + 1 + nuc
        phase = -1 if int(exponent) % 2 else 1
        reduced = SqrtRational(phase * six_j.sign, six_j.square * (2 * fp + 1) * (2 * Jg + 1))
        for m in _projections(_twice(F)):
            for mp in _projections(_twice(fp)):
                if abs(mp - m) > 1:
                    continue
                cg = clebsch_gordan(fp, mp, 1, m - mp, F, m)
                if cg:
                    raw[(fp, m, mp)] = reduced * cg

    allowed = [fp for fp in levels if fp not in forbidden]
    if not allowed:
        raise LevelSchemeError(f"no excited level is dipole-coupled to F={F}")
    top = max(allowed)
    stretch = raw.get((top, F, F + 1)) or raw.get((top, F, F))
    if stretch is None:
        raise LevelSchemeError("cannot normalize: no stretched transition on the highest level")
    exact = {key: value / stretch for key, value in raw.items()}
    return TransitionTable(F, levels, exact, tuple(forbidden))


def coupling_table(scheme) -> TransitionTable:
    """Coupling table for a :class:`~cavmagic.atom.LevelScheme`."""
    table = hyperfine_table(
        scheme.ground_F,
        [lvl.F for lvl in scheme.levels],
        scheme.J,
        scheme.J_prime,
        scheme.I,
    )
    if table.forbidden:
        import warnings

        warnings.warn(
            f"excited levels {[str(f) for f in table.forbidden]} are not dipole-coupled "
            f"to F={table.ground_F}; they contribute no scattering paths",
            stacklevel=2,
        )
    return table
