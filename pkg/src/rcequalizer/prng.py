"""Deterministic pseudorandom sources.

Channel symbols and channel noise come from Galois linear feedback shift
registers (GLFSRs), as they would on an FPGA.  Input masks come from a
seeded counter-based generator (Philox) that is independent of the
registers.  Every source is a pure function of its seed and the number of
draws taken so far.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

# Primitive polynomials, written as the exponents of their non-constant terms.
SYMBOL_POLY_A = (31, 28)
SYMBOL_POLY_B = (30, 6, 4, 1)
NOISE_POLY = (17, 14)

SYMBOLS = np.array([-3.0, -1.0, 1.0, 3.0])


def taps_from_exponents(exponents) -> int:
    """Galois feedback mask for a polynomial given by its exponents.

    The constant term is implicit.  Term ``x**e`` sets bit ``e - 1``.
    """
    mask = 0
    for e in exponents:
        if e <= 0:
            raise ValueError(f"exponent must be positive, got {e}")
        mask |= 1 << (e - 1)
    return mask


def seed_state(seed: int, width: int, salt: int = 0) -> int:
    """Map an integer seed to a non-zero register state of ``width`` bits."""
    words = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, salt]).generate_state(2, np.uint64)
    state = int(words[0]) & ((1 << width) - 1)
    if state == 0:
        state = (int(words[1]) & ((1 << width) - 1)) or 1
    return state


# ----------------------------------------------------------------------------
# GF(2) polynomial helpers, used to validate user-supplied tap polynomials.


def _poly_mulmod(a: int, b: int, mod: int, deg: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        b >>= 1
        a <<= 1
        if (a >> deg) & 1:
            a ^= mod
    return out


def _poly_powmod(base: int, e: int, mod: int, deg: int) -> int:
    result = 1
    while e:
        if e & 1:
            result = _poly_mulmod(result, base, mod, deg)
        base = _poly_mulmod(base, base, mod, deg)
        e >>= 1
    return result


def _prime_factors(n: int) -> list[int]:
    factors = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            factors.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        factors.append(n)
    return factors


def is_primitive(exponents) -> bool:
    """True if ``x**w + ... + 1`` is primitive over GF(2).

    Checks that ``x`` has multiplicative order exactly ``2**w - 1`` modulo
    the polynomial, which implies irreducibility.
    """
    deg = max(exponents)
    mod = 1
    for e in exponents:
        mod |= 1 << e
    order = (1 << deg) - 1
    if _poly_powmod(2, order, mod, deg) != 1:
        return False
    return all(_poly_powmod(2, order // r, mod, deg) != 1 for r in _prime_factors(order))


# ----------------------------------------------------------------------------
# Bulk kernels. Registers up to 62 bits fit int64 without touching the sign bit.


@numba.njit(cache=True)
def _clock_bits(state, taps, n):
    out = np.empty(n, dtype=np.uint8)
    for i in range(n):
        bit = state & 1
        state >>= 1
        if bit:
            state ^= taps
        out[i] = bit
    return out, state


@numba.njit(cache=True)
def _symbols_kernel(state_a, taps_a, state_b, taps_b, n):
    out = np.empty(n, dtype=np.int8)
    for i in range(n):
        b1 = state_a & 1
        state_a >>= 1
        if b1:
            state_a ^= taps_a
        b0 = state_b & 1
        state_b >>= 1
        if b0:
            state_b ^= taps_b
        out[i] = 2 * (2 * b1 + b0) - 3
    return out, state_a, state_b


@numba.njit(cache=True)
def _uniform_kernel(state, taps, width, n):
    out = np.empty(n)
    scale = 1.0 / (1 << width)
    top = 1 << width
    for i in range(n):
        v = 0
        for j in range(width):
            bit = state & 1
            state >>= 1
            if bit:
                state ^= taps
            v |= bit << j
        out[i] = (2 * v + 1 - top) * scale
    return out, state


@dataclass
class Glfsr:
    """Right-shifting Galois LFSR.

    ``taps`` is the feedback mask (see :func:`taps_from_exponents`); its top
    bit must be bit ``width - 1`` so the polynomial has degree ``width``.
    """

    width: int
    taps: int
    state: int

    def __post_init__(self):
        if not 2 <= self.width <= 64:
            raise ValueError(f"width must be in [2, 64], got {self.width}")
        if self.taps >> self.width or not (self.taps >> (self.width - 1)) & 1:
            raise ValueError("taps must describe a polynomial of degree equal to width")
        self.state &= (1 << self.width) - 1
        if self.state == 0:
            raise ValueError("GLFSR state must be non-zero")

    @classmethod
    def from_polynomial(cls, exponents, state: int) -> "Glfsr":
        return cls(max(exponents), taps_from_exponents(exponents), state)

    def next_bit(self) -> int:
        bit = self.state & 1
        self.state >>= 1
        if bit:
            self.state ^= self.taps
        return bit

    def bits(self, n: int) -> np.ndarray:
        if self.width > 62:
            # int64 kernels would see the top bit as a sign bit
            return np.array([self.next_bit() for _ in range(n)], dtype=np.uint8)
        out, self.state = _clock_bits(np.int64(self.state), np.int64(self.taps), int(n))
        self.state = int(self.state)
        return out

    def period(self, limit: int | None = None) -> int:
        """Cycle length from the current state, by walking the register."""
        limit = limit or (1 << self.width)
        start = self.state
        g = Glfsr(self.width, self.taps, start)
        for i in range(1, limit + 1):
            g.next_bit()
            if g.state == start:
                return i
        raise RuntimeError("no cycle found within limit")


@dataclass
class SymbolSource:
    """Two GLFSRs producing symbols in {-3, -1, 1, 3}.

    Register ``a`` supplies the high bit and ``b`` the low bit; the pair maps
    00 -> -3, 01 -> -1, 10 -> 1, 11 -> 3.
    """

    a: Glfsr
    b: Glfsr

    @classmethod
    def from_seed(cls, seed: int, poly_a=SYMBOL_POLY_A, poly_b=SYMBOL_POLY_B) -> "SymbolSource":
        return cls(
            Glfsr.from_polynomial(poly_a, seed_state(seed, max(poly_a), 1)),
            Glfsr.from_polynomial(poly_b, seed_state(seed, max(poly_b), 2)),
        )

    def next_symbol(self) -> int:
        b1 = self.a.next_bit()
        b0 = self.b.next_bit()
        return 2 * (2 * b1 + b0) - 3

    def take(self, n: int) -> np.ndarray:
        """Next ``n`` symbols as an int8 array."""
        out, sa, sb = _symbols_kernel(
            np.int64(self.a.state), np.int64(self.a.taps), np.int64(self.b.state), np.int64(self.b.taps), int(n)
        )
        self.a.state, self.b.state = int(sa), int(sb)
        return out


@dataclass
class NoiseSource:
    """Uniform noise in (-1, 1) from one GLFSR.

    Each draw clocks the register ``width`` times and reads the output bits
    as an unsigned integer ``v``; the sample is ``(2v + 1 - 2**width) / 2**width``.
    """

    reg: Glfsr

    @classmethod
    def from_seed(cls, seed: int, poly=NOISE_POLY) -> "NoiseSource":
        return cls(Glfsr.from_polynomial(poly, seed_state(seed, max(poly), 3)))

    def next_noise(self, amplitude: float) -> float:
        if amplitude < 0:
            raise ValueError("noise amplitude must be >= 0")
        v = 0
        for j in range(self.reg.width):
            v |= self.reg.next_bit() << j
        top = 1 << self.reg.width
        return amplitude * (2 * v + 1 - top) / top

    def take(self, n: int, amplitude: float) -> np.ndarray:
        if amplitude < 0:
            raise ValueError("noise amplitude must be >= 0")
        out, state = _uniform_kernel(np.int64(self.reg.state), np.int64(self.reg.taps), self.reg.width, int(n))
        self.reg.state = int(state)
        return amplitude * out


@dataclass
class MaskRng:
    """Counter-based (Philox) generator for input masks."""

    seed: int
    _gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self._gen = np.random.Generator(np.random.Philox(int(self.seed) & 0xFFFFFFFFFFFFFFFF))

    def draw_mask(self, n: int) -> np.ndarray:
        if n < 1:
            raise ValueError("mask length must be >= 1")
        return self._gen.uniform(-1.0, 1.0, n)
