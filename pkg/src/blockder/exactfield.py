"""Exact arithmetic over GF(p) and the rationals.

Elements are plain Python values: ``int`` residues in ``[0, p)`` for GF(p)
and ``fractions.Fraction`` for the rationals. A :class:`FieldSpec` knows how
to bring any integer or fraction into canonical form and how to do the
handful of operations the linear algebra needs.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

Elem = Union[int, Fraction]


class FieldError(ValueError):
    """Invalid field characteristic or an illegal field operation."""


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    k = 3
    while k * k <= n:
        if n % k == 0:
            return False
        k += 2
    return True


@dataclass(frozen=True)
class FieldSpec:
    """GF(p) for prime ``characteristic``, or Q when it is 0."""

    characteristic: int

    def __post_init__(self):
        c = self.characteristic
        if not isinstance(c, int) or isinstance(c, bool):
            raise FieldError(f"characteristic must be an integer, got {c!r}")
        if c < 0:
            raise FieldError(f"negative characteristic {c}")
        if c != 0 and not _is_prime(c):
            raise FieldError(f"characteristic {c} is not prime (composite or unit)")

    @property
    def is_rational(self) -> bool:
        return self.characteristic == 0

    @property
    def zero(self) -> Elem:
        return Fraction(0) if self.characteristic == 0 else 0

    @property
    def one(self) -> Elem:
        return Fraction(1) if self.characteristic == 0 else 1

    def __str__(self):
        return "Q" if self.characteristic == 0 else f"GF({self.characteristic})"

    def elem(self, x) -> Elem:
        """Canonical representative of an int, Fraction or string."""
        if isinstance(x, str):
            return self.parse(x)
        p = self.characteristic
        if p == 0:
            if isinstance(x, Fraction):
                return x
            if isinstance(x, int):
                return Fraction(x)
            raise FieldError(f"cannot coerce {x!r} into Q")
        if isinstance(x, int):
            return x % p
        if isinstance(x, Fraction):
            if x.denominator % p == 0:
                raise FieldError(f"{x} has denominator divisible by {p}")
            return x.numerator * pow(x.denominator, -1, p) % p
        raise FieldError(f"cannot coerce {x!r} into {self}")

    # arithmetic -------------------------------------------------------

    def add(self, a: Elem, b: Elem) -> Elem:
        p = self.characteristic
        return a + b if p == 0 else (a + b) % p

    def sub(self, a: Elem, b: Elem) -> Elem:
        p = self.characteristic
        return a - b if p == 0 else (a - b) % p

    def neg(self, a: Elem) -> Elem:
        p = self.characteristic
        return -a if p == 0 else (-a) % p

    def mul(self, a: Elem, b: Elem) -> Elem:
        p = self.characteristic
        return a * b if p == 0 else (a * b) % p

    def inv(self, a: Elem) -> Elem:
        if a == 0:
            raise ZeroDivisionError(f"0 has no inverse in {self}")
        p = self.characteristic
        if p == 0:
            return 1 / Fraction(a)
        return pow(a, -1, p)

    def div(self, a: Elem, b: Elem) -> Elem:
        return self.mul(a, self.inv(b))

    def pow(self, a: Elem, k: int) -> Elem:
        p = self.characteristic
        if p == 0:
            return Fraction(a) ** k
        return pow(a, k, p)

    # serialization ----------------------------------------------------

    def parse(self, s: str) -> Elem:
        """Parse ``"3"`` or ``"-2/7"``."""
        s = s.strip()
        try:
            value = Fraction(s) if "/" in s else int(s)
        except ValueError as exc:
            raise FieldError(f"malformed field element {s!r}") from exc
        return self.elem(value)

    def format(self, a: Elem) -> str:
        if self.characteristic == 0:
            a = Fraction(a)
            if a.denominator == 1:
                return str(a.numerator)
            return f"{a.numerator}/{a.denominator}"
        return str(a % self.characteristic)

    def random_elem(self, rng, bound: int = 5) -> Elem:
        """Random element; rationals get numerator and denominator up to ``bound``."""
        p = self.characteristic
        if p:
            return rng.randrange(p)
        return Fraction(rng.randint(-bound, bound), rng.randint(1, bound))


def field_make(characteristic: int) -> FieldSpec:
    return FieldSpec(characteristic)


def elem_inverse(a: Elem, F: FieldSpec) -> Elem:
    return F.inv(F.elem(a))
