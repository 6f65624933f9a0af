"""Exact arithmetic in prime fields F_p.

All values are plain Python integers reduced into [0, p); arbitrary
precision keeps arithmetic exact for any prime, including 2**31 - 1.
"""

from __future__ import annotations

from dataclasses import dataclass

from sympy import isprime


class FieldError(Exception):
    """Structural error in field arithmetic (bad prime, modulus mismatch)."""


@dataclass(frozen=True)
class Prime:
    """A checked prime modulus."""

    p: int

    def __post_init__(self) -> None:
        if not isinstance(self.p, int) or self.p < 2:
            raise FieldError(f"modulus must be an integer >= 2, got {self.p!r}")
        if not isprime(self.p):
            raise FieldError(f"{self.p} is not prime")

    def __int__(self) -> int:
        return self.p

    def __str__(self) -> str:
        return str(self.p)


@dataclass(frozen=True)
class FieldElem:
    """An element of F_p. Binary operations require equal moduli."""

    value: int
    modulus: Prime

    def __post_init__(self) -> None:
        if not (0 <= self.value < self.modulus.p):
            object.__setattr__(self, "value", self.value % self.modulus.p)

    def _check(self, other: "FieldElem") -> None:
        if not isinstance(other, FieldElem):
            raise FieldError(f"expected a field element, got {other!r}")
        if other.modulus != self.modulus:
            raise FieldError(
                f"modulus mismatch: {self.modulus} vs {other.modulus}")

    def __add__(self, other: "FieldElem") -> "FieldElem":
        self._check(other)
        return FieldElem((self.value + other.value) % self.modulus.p, self.modulus)

    def __sub__(self, other: "FieldElem") -> "FieldElem":
        self._check(other)
        return FieldElem((self.value - other.value) % self.modulus.p, self.modulus)

    def __mul__(self, other: "FieldElem") -> "FieldElem":
        self._check(other)
        return FieldElem((self.value * other.value) % self.modulus.p, self.modulus)

    def negate_logical(self) -> "FieldElem":
        """1 - a, the generalization of boolean negation to any F_p."""
        return FieldElem((1 - self.value) % self.modulus.p, self.modulus)

    def __str__(self) -> str:
        return str(self.value)


def add(a: FieldElem, b: FieldElem) -> FieldElem:
    return a + b


def sub(a: FieldElem, b: FieldElem) -> FieldElem:
    return a - b


def mul(a: FieldElem, b: FieldElem) -> FieldElem:
    return a * b


def negate_logical(a: FieldElem) -> FieldElem:
    return a.negate_logical()


def fe(value: int, prime: Prime) -> FieldElem:
    return FieldElem(value % prime.p, prime)
