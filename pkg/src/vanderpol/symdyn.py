"""Binary shift space: sequences, the weighted metric and the Bernoulli shift.

Two representations cover everything needed here. ``PeriodicRep`` stores a
repeating block and is exact for periodic points. ``Window`` stores the bits
on a finite index range and is used for constructed (non-periodic) points;
outside the range a window is undefined, not zero, except where an
operation says otherwise.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from typing import Iterable, Union

MAX_PERIOD = 20
MAX_DEPTH = 12


class CoverageError(ValueError):
    """A window does not cover the indices an operation needs."""


class BudgetExceeded(ValueError):
    pass


class UnrecognizedSpacing(ValueError):
    pass


def _bits(seq: Iterable[int]) -> tuple[int, ...]:
    out = tuple(int(b) for b in seq)
    if any(b not in (0, 1) for b in out):
        raise ValueError("symbols must be 0 or 1")
    return out


@dataclass(frozen=True, eq=False)
class PeriodicRep:
    """d_i = block[(i + phase) % len(block)] for every integer i."""

    block: tuple
    phase: int = 0

    def __post_init__(self):
        block = _bits(self.block)
        if not block:
            raise ValueError("block must be non-empty")
        object.__setattr__(self, "block", block)
        object.__setattr__(self, "phase", int(self.phase) % len(block))

    def __getitem__(self, i: int) -> int:
        return self.block[(i + self.phase) % len(self.block)]

    def covers(self, lo: int, hi: int) -> bool:
        return True

    @property
    def period(self) -> int:
        """Smallest p with d_{i+p} = d_i."""
        p = len(self.block)
        for q in range(1, p + 1):
            if p % q == 0 and all(self.block[i] == self.block[i % q] for i in range(p)):
                return q
        return p

    def canonical(self) -> tuple:
        q = self.period
        return tuple(self[i] for i in range(q))

    def __eq__(self, other):
        if not isinstance(other, PeriodicRep):
            return NotImplemented
        return self.canonical() == other.canonical()

    def __hash__(self):
        return hash(self.canonical())

    def __repr__(self):
        return f"PeriodicRep({''.join(map(str, self.block))}, phase={self.phase})"


@dataclass(frozen=True)
class Window:
    """Bits d_start .. d_{start+len-1}."""

    bits: tuple
    start: int = 0

    def __post_init__(self):
        bits = _bits(self.bits)
        if not bits:
            raise ValueError("window must be non-empty")
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "start", int(self.start))

    @property
    def stop(self) -> int:
        return self.start + len(self.bits)

    def covers(self, lo: int, hi: int) -> bool:
        return self.start <= lo and hi < self.stop

    def __getitem__(self, i: int) -> int:
        if not self.start <= i < self.stop:
            raise CoverageError(f"index {i} outside window [{self.start}, {self.stop})")
        return self.bits[i - self.start]


Sequence_ = Union[PeriodicRep, Window]


def shift(d: Sequence_, times: int = 1) -> Sequence_:
    """Bernoulli shift applied ``times`` times: (sigma d)_i = d_{i+1}.

    Negative ``times`` applies the inverse. A window keeps its bits and
    moves its index range left, so d'_i = d_{i+1} holds exactly on the
    covered range.
    """
    if isinstance(d, PeriodicRep):
        return PeriodicRep(d.block, d.phase + times)
    return Window(d.bits, d.start - times)


def metric(d: Sequence_, e: Sequence_, window: int) -> tuple[float, float]:
    """Truncated sum over |i| <= W of |d_i - e_i| / 2^|i|, and the tail bound 2^(1-W)."""
    if window < 1:
        raise ValueError("window must be >= 1")
    for s in (d, e):
        if not s.covers(-window, window):
            raise CoverageError(f"sequence does not cover [-{window}, {window}]")
    total = 0.0
    for i in range(-window, window + 1):
        if d[i] != e[i]:
            total += 2.0 ** -abs(i)
    return total, 2.0 ** (1 - window)


def enumerate_fixed(m: int) -> list[PeriodicRep]:
    """Every sequence with sigma^m(d) = d, one PeriodicRep per block of length m."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if m > MAX_PERIOD:
        raise BudgetExceeded(f"2^{m} sequences exceed the enumeration budget (m <= {MAX_PERIOD})")
    out = []
    for block in itertools.product((0, 1), repeat=m):
        d = PeriodicRep(block)
        assert shift(d, m) == d
        out.append(d)
    return out


def dense_orbit(depth: int) -> Window:
    """Every binary word of length 1..depth, concatenated from index 0.

    Index -1 holds a single 0 so the result is a window around the origin.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if depth > MAX_DEPTH:
        raise BudgetExceeded(f"depth {depth} exceeds {MAX_DEPTH}")
    bits = [0]
    for k in range(1, depth + 1):
        for w in itertools.product((0, 1), repeat=k):
            bits.extend(w)
    return Window(tuple(bits), -1)


def find_word(d: Window, word: Sequence_ | tuple) -> int:
    """Smallest n >= 0 with sigma^n(d) equal to ``word`` on indices [0, len(word)); -1 if none."""
    w = tuple(word)
    s = d.bits[-d.start:] if d.start <= 0 else None
    if s is None:
        raise CoverageError("window must cover index 0")
    for n in range(len(s) - len(w) + 1):
        if s[n: n + len(w)] == w:
            return n
    return -1


def sensitivity_witness(d: Sequence_, window: int) -> tuple[Window, int]:
    """A point agreeing with d on [-W, W] and differing at W+1.

    Returns (e, n) with n = W + 1: after n shifts the disagreement sits at
    index 0, so the distance is at least 1.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    lo, hi = -window - 1, 2 * window + 2
    if not d.covers(lo, hi):
        raise CoverageError(f"need d on [{lo}, {hi}]")
    bits = [d[i] for i in range(lo, hi + 1)]
    bits[window + 1 - lo] ^= 1
    return Window(tuple(bits), lo), window + 1


def as_window(d: Sequence_, lo: int, hi: int) -> Window:
    if not d.covers(lo, hi):
        raise CoverageError(f"sequence does not cover [{lo}, {hi}]")
    return Window(tuple(d[i] for i in range(lo, hi + 1)), lo)


def encode_spacings(spacings: Iterable[float], n: int, tol: float = 0.1) -> Window:
    """(2n-1) pi -> 0 and (2n+1) pi -> 1, starting at index 0."""
    if n < 1:
        raise ValueError("n must be >= 1")
    lo, hi = (2 * n - 1) * math.pi, (2 * n + 1) * math.pi
    bits = []
    for k, s in enumerate(spacings):
        if abs(s - lo) <= tol:
            bits.append(0)
        elif abs(s - hi) <= tol:
            bits.append(1)
        else:
            raise UnrecognizedSpacing(f"spacing #{k} = {s!r} is neither {2*n-1}pi nor {2*n+1}pi")
    if not bits:
        raise ValueError("no spacings given")
    return Window(tuple(bits), 0)


def decode_spacings(d: Window, n: int) -> list[float]:
    return [(2 * n + (1 if b else -1)) * math.pi for b in d.bits]


# ---- text form --------------------------------------------------------------
#   "...10.10..."  periodic: the repeating block is read from the digits, the
#                  dot sits between d_0 and d_1
#   "101.01"       window: d_{-2} d_{-1} d_0 . d_1 d_2 (either side may be empty)
#   "@-3:0110"     window with explicit start index

_PERIODIC = re.compile(r"^\.\.\.([01]+)\.([01]+)\.\.\.$")
_WINDOW = re.compile(r"^([01]*)\.([01]*)$")
_EXPLICIT = re.compile(r"^@(-?\d+):([01]+)$")


def parse(text: str) -> Sequence_:
    text = text.strip()
    m = _PERIODIC.match(text)
    if m:
        left, right = m.groups()
        digits = left + right
        # smallest block consistent with the shown digits
        for p in range(1, len(digits) + 1):
            if all(digits[i] == digits[i % p] for i in range(len(digits))):
                break
        block = tuple(int(c) for c in digits[:p])
        # d_0 is the last digit left of the dot, at string position len(left)-1
        return PeriodicRep(block, len(left) - 1)
    m = _WINDOW.match(text)
    if m and any(m.groups()):
        left, right = m.groups()
        return Window(tuple(int(c) for c in left + right), 1 - len(left))
    m = _EXPLICIT.match(text)
    if m:
        return Window(tuple(int(c) for c in m.group(2)), int(m.group(1)))
    raise ValueError(f"cannot parse sequence literal {text!r}")


def format_sequence(d: Sequence_) -> str:
    if isinstance(d, PeriodicRep):
        q = len(d.block)
        left = "".join(str(d[i]) for i in range(1 - q, 1))
        right = "".join(str(d[i]) for i in range(1, q + 1))
        return f"...{left}.{right}..."
    if d.start <= 1 and d.stop >= 1:
        left = "".join(str(d[i]) for i in range(d.start, 1))
        right = "".join(str(d[i]) for i in range(1, d.stop))
        return f"{left}.{right}"
    return f"@{d.start}:{''.join(map(str, d.bits))}"
