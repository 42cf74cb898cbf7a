"""Arithmetic in GF(2^m) for m = 1..16.

Elements are ints below ``2**m`` whose bits are polynomial coefficients
over GF(2).  Multiplication is schoolbook carry-less, reduced modulo a
fixed irreducible polynomial.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

from .errors import NoInverseError, ParameterError

MAX_M = 16

# Lowest-weight irreducible polynomial per degree, smallest bitmask among ties.
IRREDUCIBLE = {
    1: 0x2,
    2: 0x7,
    3: 0xB,
    4: 0x13,
    5: 0x25,
    6: 0x43,
    7: 0x83,
    8: 0x11B,
    9: 0x203,
    10: 0x409,
    11: 0x805,
    12: 0x1009,
    13: 0x201B,
    14: 0x4021,
    15: 0x8003,
    16: 0x1002B,
}


def clmul(a: int, b: int) -> int:
    """Carry-less product of two GF(2) polynomials."""
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def poly_mod(a: int, b: int) -> int:
    """Remainder of ``a`` divided by ``b`` in GF(2)[x]."""
    if b == 0:
        raise ZeroDivisionError("polynomial division by zero")
    db = b.bit_length()
    while a.bit_length() >= db:
        a ^= b << (a.bit_length() - db)
    return a


def verify_irreducible(m: int, poly: int) -> bool:
    """Trial division by every polynomial of degree ``1..m//2``."""
    if poly.bit_length() - 1 != m or m < 1:
        raise ParameterError(f"polynomial {poly:#x} does not have degree {m}")
    for d in range(1, m // 2 + 1):
        for q in range(1 << d, 1 << (d + 1)):
            if poly_mod(poly, q) == 0:
                return False
    return True


@dataclass(frozen=True)
class Gf2mField:
    m: int
    reduction_poly: int

    def __post_init__(self):
        if not 1 <= self.m <= MAX_M:
            raise ParameterError(f"field width m={self.m} outside 1..{MAX_M}")
        if self.reduction_poly.bit_length() - 1 != self.m:
            raise ParameterError(f"reduction polynomial {self.reduction_poly:#x} is not of degree {self.m}")

    @classmethod
    def standard(cls, m: int) -> "Gf2mField":
        if m not in IRREDUCIBLE:
            raise ParameterError(f"field width m={m} outside 1..{MAX_M}")
        return cls(m, IRREDUCIBLE[m])

    @property
    def order(self) -> int:
        return 1 << self.m

    def check(self, a: int) -> int:
        if not 0 <= a < self.order:
            raise ParameterError(f"{a} is not an element of GF(2^{self.m})")
        return a


def gf2_mul(field: Gf2mField, a: int, b: int) -> int:
    field.check(a)
    field.check(b)
    return poly_mod(clmul(a, b), field.reduction_poly)


def gf2_pow(field: Gf2mField, a: int, e: int) -> int:
    out = 1
    while e:
        if e & 1:
            out = gf2_mul(field, out, a)
        a = gf2_mul(field, a, a)
        e >>= 1
    return out


@functools.lru_cache(maxsize=1 << 17)
def gf2_inv(field: Gf2mField, a: int) -> int:
    """Inverse via the extended Euclidean algorithm over GF(2)[x]."""
    field.check(a)
    if a == 0:
        raise NoInverseError("0 has no multiplicative inverse")
    r0, r1 = field.reduction_poly, a
    s0, s1 = 0, 1
    while r1 != 1:
        shift = r0.bit_length() - r1.bit_length()
        if shift < 0:
            r0, r1, s0, s1 = r1, r0, s1, s0
            continue
        r0 ^= r1 << shift
        s0 ^= s1 << shift
        if r0.bit_length() < r1.bit_length():
            r0, r1, s0, s1 = r1, r0, s1, s0
    return poly_mod(s1, field.reduction_poly)


def split_pieces(value: int, m: int, l: int) -> list[int]:
    """Cut an m-bit word into ``m // l`` pieces, most significant first."""
    if l < 1 or m % l:
        raise ParameterError(f"piece width {l} must divide m={m}")
    k = m // l
    mask = (1 << l) - 1
    return [(value >> (l * (k - 1 - i))) & mask for i in range(k)]


def join_pieces(pieces, l: int) -> int:
    out = 0
    for p in pieces:
        out = (out << l) | int(p)
    return out
