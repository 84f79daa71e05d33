"""Bernoulli-map universe: exact digit arithmetic, cylinder measures, sampling.

A point of [0, 1) is carried as its explicit binary expansion.  The doubling
map ``x -> 2x mod 1`` is then a left shift of the digits, so orbit statistics
of arbitrary length are computed without any floating-point loss.
"""

from dataclasses import dataclass
from math import gcd
from typing import Iterable, Mapping, Tuple

import numpy as np

from .errors import DomainError

__all__ = [
    "BitSequence",
    "CylinderConstraint",
    "DigitMeasure",
    "FrequencyEstimate",
    "expand_rational",
    "bernoulli_step",
    "orbit_zero_frequency",
    "zero_frequency_report",
    "cylinder_measure",
    "sample_sequence",
    "binary_period",
    "sample_zero_frequencies",
    "iterate",
]


class BitSequence:
    """Immutable finite sequence of binary digits.

    Parameters
    ----------
    digits : iterable of int or str
        Digits in {0, 1}; a string such as ``"0110"`` is accepted.
    """

    __slots__ = ("_digits",)

    def __init__(self, digits):
        if isinstance(digits, str):
            if digits.strip("01"):
                raise DomainError("bit string may only contain '0' and '1'")
            arr = np.frombuffer(digits.encode("ascii"), dtype=np.uint8) - ord("0")
        else:
            arr = np.asarray(list(digits) if not isinstance(digits, np.ndarray) else digits)
            if arr.size and not np.all((arr == 0) | (arr == 1)):
                raise DomainError("every digit must be 0 or 1")
            arr = arr.astype(np.uint8)
        arr = np.array(arr, dtype=np.uint8, copy=True).ravel()
        arr.flags.writeable = False
        self._digits = arr

    @property
    def digits(self) -> np.ndarray:
        return self._digits

    def __len__(self):
        return self._digits.size

    def __getitem__(self, item):
        if isinstance(item, slice):
            return BitSequence(self._digits[item])
        return int(self._digits[item])

    def __iter__(self):
        return (int(d) for d in self._digits)

    def __eq__(self, other):
        if isinstance(other, str):
            other = BitSequence(other)
        if not isinstance(other, BitSequence):
            return NotImplemented
        return np.array_equal(self._digits, other._digits)

    def __hash__(self):
        return hash(self._digits.tobytes())

    def __str__(self):
        return (self._digits + ord("0")).tobytes().decode("ascii")

    def __repr__(self):
        s = str(self)
        if len(s) > 40:
            s = s[:37] + "..."
        return f"BitSequence('{s}')"

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros(n, dtype=np.uint8))


@dataclass(frozen=True)
class CylinderConstraint:
    """Finitely many fixed digits ``{index: digit}`` with 1-based indices."""

    constraints: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self):
        pairs = tuple(sorted((int(i), int(c)) for i, c in self.constraints))
        idx = [i for i, _ in pairs]
        if any(i < 1 for i in idx):
            raise DomainError("cylinder indices must be positive")
        if len(set(idx)) != len(idx):
            raise DomainError("cylinder indices must be distinct")
        if any(c not in (0, 1) for _, c in pairs):
            raise DomainError("cylinder digits must be 0 or 1")
        object.__setattr__(self, "constraints", pairs)

    @classmethod
    def from_mapping(cls, mapping: Mapping[int, int]):
        return cls(tuple(mapping.items()))

    def with_digit(self, index, digit):
        return CylinderConstraint(self.constraints + ((index, digit),))

    def indices(self):
        return [i for i, _ in self.constraints]

    def contains(self, seq: BitSequence) -> bool:
        """True when ``seq`` (long enough) satisfies every constraint."""
        return all(seq[i - 1] == c for i, c in self.constraints)


@dataclass(frozen=True)
class DigitMeasure:
    """Product measure on digit sequences; ``alpha`` is P(digit == 0)."""

    alpha: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise DomainError(f"alpha must lie in [0, 1], got {self.alpha}")


def expand_rational(numerator: int, denominator: int, n: int) -> BitSequence:
    """First ``n`` binary digits of ``numerator/denominator`` by long division.

    Dyadic rationals come out with the all-zero tail.
    """
    numerator, denominator, n = int(numerator), int(denominator), int(n)
    if denominator <= 0:
        raise DomainError("denominator must be positive")
    if numerator < 0 or numerator >= denominator:
        raise DomainError("need 0 <= numerator < denominator")
    if n < 1:
        raise DomainError("n must be >= 1")
    out = np.empty(n, dtype=np.uint8)
    r = numerator
    for k in range(n):
        r *= 2
        if r >= denominator:
            out[k] = 1
            r -= denominator
        else:
            out[k] = 0
    return BitSequence(out)


def binary_period(numerator: int, denominator: int) -> int:
    """Eventual period of the binary expansion of a rational.

    This is the multiplicative order of 2 modulo the odd part of the reduced
    denominator (1 for dyadic rationals).
    """
    g = gcd(numerator, denominator)
    q = denominator // g
    while q % 2 == 0:
        q //= 2
    if q == 1:
        return 1
    k, r = 1, 2 % q
    while r != 1:
        r = (r * 2) % q
        k += 1
    return k


def bernoulli_step(s: BitSequence) -> BitSequence:
    """One application of the doubling map: drop the leading digit."""
    if len(s) < 1:
        raise DomainError("cannot shift an empty sequence")
    return BitSequence(s.digits[1:])


def orbit_zero_frequency(seed: BitSequence, n: int) -> float:
    """Fraction of the first ``n`` orbit points lying in [0, 1/2).

    Equal to the fraction of zeros among the leading ``n`` digits.
    """
    n = int(n)
    if n < 1:
        raise DomainError("n must be >= 1")
    if n > len(seed):
        raise DomainError(f"n={n} exceeds sequence length {len(seed)}")
    n0 = n - int(np.count_nonzero(seed.digits[:n]))
    return n0 / n


@dataclass(frozen=True)
class FrequencyEstimate:
    frequency: float
    half_frequency: float
    n: int

    @property
    def drift(self):
        """|f(n) - f(n/2)|, a crude convergence diagnostic."""
        return abs(self.frequency - self.half_frequency)


def zero_frequency_report(seed: BitSequence, n: int) -> FrequencyEstimate:
    half = max(1, int(n) // 2)
    return FrequencyEstimate(orbit_zero_frequency(seed, n), orbit_zero_frequency(seed, half), int(n))


def cylinder_measure(c: CylinderConstraint, m: DigitMeasure) -> float:
    """``alpha**p * (1 - alpha)**q`` for p constrained zeros and q constrained ones.

    Exact when ``alpha`` is a ``fractions.Fraction``.
    """
    q = sum(d for _, d in c.constraints)
    p = len(c.constraints) - q
    return m.alpha ** p * (1 - m.alpha) ** q


def sample_sequence(m: DigitMeasure, n: int, seed: int) -> BitSequence:
    """Draw ``n`` i.i.d. digits (0 with probability alpha) from a PCG64 stream."""
    if int(n) < 1:
        raise DomainError("n must be >= 1")
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    u = rng.random(int(n))
    return BitSequence((u >= m.alpha).astype(np.uint8))


def sample_zero_frequencies(m: DigitMeasure, n: int, count: int, seed: int) -> np.ndarray:
    """Zero-frequencies of ``count`` independent sequences of length ``n``.

    Sequence ``k`` uses seed ``seed + k`` so disjoint seed ranges can be run in
    parallel and merged.
    """
    return np.array([orbit_zero_frequency(sample_sequence(m, n, seed + k), n) for k in range(count)])


def iterate(seed: BitSequence, steps: int) -> Iterable[BitSequence]:
    """Yield the orbit ``seed, G(seed), G(G(seed)), ...`` for ``steps`` steps."""
    s = seed
    yield s
    for _ in range(steps):
        s = bernoulli_step(s)
        yield s
