"""Discrete solid function spaces on Z^d.

Vectors are finitely supported functions on the integer lattice (d = 1 or 2)
with counting measure, so every finite set is compact and every function is
Borel.  Three norm families are provided: l^p, the Luxemburg form of the
Orlicz norm, and a discrete Morrey norm over axis-aligned boxes.  All three
are solid and translation invariant.

The Luxemburg norm is used wherever an "Orlicz norm" is requested.  It is
equivalent to the Orlicz (Amemiya) norm within a factor of two, and every
decay condition evaluated downstream is a limit to zero, hence insensitive to
that choice.

Values are either exact rationals (``fractions.Fraction``) or float64.  A
vector holding any float is stored entirely in float mode.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Callable, Iterator, Union

Site = tuple[int, ...]
Scalar = Union[Fraction, float]

EXACT = "exact"
FLOAT = "float"

# Float entries below this magnitude are dropped from supports.
FLOAT_ZERO = 1e-300


class ParameterError(ValueError):
    """Invalid parameters for a space, operator or criterion."""


def as_site(x) -> Site:
    if isinstance(x, int):
        return (x,)
    return tuple(int(c) for c in x)


def as_scalar(value) -> Scalar:
    """Parse a scalar: ints, Fractions and "num/den" strings stay exact."""
    if isinstance(value, bool):
        raise ParameterError(f"not a scalar: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, Rational):
        return Fraction(value)
    if isinstance(value, float):
        return value
    if isinstance(value, str):
        text = value.strip()
        if text.lower() in ("inf", "+inf", "infinity"):
            return math.inf
        try:
            return Fraction(text)
        except ValueError:
            try:
                return float(text)
            except ValueError:
                raise ParameterError(f"cannot parse scalar {value!r}") from None
    raise ParameterError(f"not a scalar: {value!r}")


def to_float(x: Scalar) -> float:
    """float(x), saturating to inf instead of raising on huge rationals."""
    try:
        return float(x)
    except OverflowError:
        return math.inf if x > 0 else -math.inf


def format_scalar(x: Scalar) -> str:
    if isinstance(x, Fraction):
        return str(x)
    return repr(float(x))


class GridFunction(Mapping):
    """Finitely supported scalar function on Z^d.

    Behaves as a read-only mapping ``Site -> value`` whose missing keys are
    zero.  Exact zeros (and float entries below ``FLOAT_ZERO``) are never
    stored.
    """

    __slots__ = ("_entries", "dim", "mode")

    def __init__(self, entries=None, dim: int | None = None):
        items = entries.items() if isinstance(entries, Mapping) else (entries or ())
        raw: dict[Site, Scalar] = {}
        any_float = False
        for key, value in items:
            s = as_site(key)
            v = value if isinstance(value, (Fraction, float)) else as_scalar(value)
            if isinstance(v, float):
                any_float = True
            if s in raw:
                raw[s] = raw[s] + v
            else:
                raw[s] = v
        if dim is None:
            dim = len(next(iter(raw))) if raw else 1
        if dim not in (1, 2):
            raise ParameterError(f"dimension must be 1 or 2, got {dim}")
        clean: dict[Site, Scalar] = {}
        for s, v in raw.items():
            if len(s) != dim:
                raise ParameterError(f"site {s} does not have dimension {dim}")
            if any_float:
                v = float(v)
                if abs(v) < FLOAT_ZERO:
                    continue
            elif v == 0:
                continue
            clean[s] = v
        self._entries = clean
        self.dim = dim
        self.mode = FLOAT if any_float else EXACT

    @classmethod
    def _build(cls, entries: dict, dim: int) -> GridFunction:
        """Fast path for internal results: sites are valid tuples and values
        are Fractions or floats."""
        self = object.__new__(cls)
        if float in set(map(type, entries.values())):
            self._entries = {s: float(v) for s, v in entries.items() if abs(v) >= FLOAT_ZERO}
            self.mode = FLOAT
        else:
            self._entries = {s: v for s, v in entries.items() if v}
            self.mode = EXACT
        self.dim = dim
        return self

    @classmethod
    def delta(cls, site, value=1) -> GridFunction:
        s = as_site(site)
        return cls({s: value}, dim=len(s))

    @classmethod
    def zero(cls, dim: int = 1) -> GridFunction:
        return cls((), dim=dim)

    def __getitem__(self, key) -> Scalar:
        return self._entries.get(as_site(key), 0)

    def __iter__(self) -> Iterator[Site]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key) -> bool:
        return as_site(key) in self._entries

    def __eq__(self, other) -> bool:
        if isinstance(other, GridFunction):
            return self._entries == other._entries
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self._entries.items()))

    def __repr__(self) -> str:
        body = ", ".join(
            f"{s[0] if self.dim == 1 else s}: {format_scalar(v)}"
            for s, v in sorted(self._entries.items())
        )
        return f"GridFunction({{{body}}})"

    @property
    def support(self) -> CompactSet:
        return CompactSet(self._entries)

    def __add__(self, other: GridFunction) -> GridFunction:
        if not isinstance(other, GridFunction):
            return NotImplemented
        out = dict(self._entries)
        for s, v in other._entries.items():
            out[s] = out[s] + v if s in out else v
        return GridFunction._build(out, self.dim)

    def __neg__(self) -> GridFunction:
        return GridFunction._build({s: -v for s, v in self._entries.items()}, self.dim)

    def __sub__(self, other: GridFunction) -> GridFunction:
        if not isinstance(other, GridFunction):
            return NotImplemented
        return self + (-other)

    def __mul__(self, c) -> GridFunction:
        if isinstance(c, GridFunction):
            return GridFunction._build(
                {s: v * c._entries[s] for s, v in self._entries.items() if s in c._entries},
                self.dim,
            )
        c = as_scalar(c)
        return GridFunction._build({s: v * c for s, v in self._entries.items()}, self.dim)

    __rmul__ = __mul__

    def abs(self) -> GridFunction:
        return GridFunction._build({s: abs(v) for s, v in self._entries.items()}, self.dim)

    def sup(self) -> Scalar:
        return max((abs(v) for v in self._entries.values()), default=Fraction(0))

    def map_values(self, fn: Callable[[Site, Scalar], Scalar]) -> GridFunction:
        return GridFunction({s: fn(s, v) for s, v in self._entries.items()}, dim=self.dim)

    def relocate(self, fn: Callable[[Site], Site]) -> GridFunction:
        """Move every entry from site s to fn(s); fn must be injective."""
        return GridFunction({fn(s): v for s, v in self._entries.items()}, dim=self.dim)

    def to_float(self) -> GridFunction:
        return GridFunction({s: to_float(v) for s, v in self._entries.items()}, dim=self.dim)

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "dim": self.dim,
            "entries": [[list(s), format_scalar(v)] for s, v in sorted(self._entries.items())],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> GridFunction:
        mode = data.get("mode", EXACT)
        if mode not in (EXACT, FLOAT):
            raise ParameterError(f"unknown numeric mode {mode!r}")
        dim = int(data.get("dim", 1))
        entries = []
        for coords, value in data.get("entries", []):
            v = as_scalar(value)
            entries.append((as_site(coords), float(v) if mode == FLOAT else v))
        return cls(entries, dim=dim)


class CompactSet(frozenset):
    """Finite set of lattice sites."""

    def __new__(cls, sites: Iterable = ()):
        return super().__new__(cls, (as_site(s) for s in sites))

    @classmethod
    def interval(cls, lo: int, hi: int) -> CompactSet:
        return cls((x,) for x in range(lo, hi + 1))

    @classmethod
    def box(cls, lo: Site, hi: Site) -> CompactSet:
        return cls(
            (x, y) for x in range(lo[0], hi[0] + 1) for y in range(lo[1], hi[1] + 1)
        )

    @property
    def dim(self) -> int:
        return len(next(iter(self))) if self else 1

    def indicator(self, value=1) -> GridFunction:
        return GridFunction({s: value for s in self}, dim=self.dim)

    def sorted(self) -> list[Site]:
        return sorted(self)

    def to_json(self) -> list:
        return [list(s) for s in sorted(self)]

    def __repr__(self) -> str:
        return f"CompactSet({sorted(self)})"


def scale_restrict(f: GridFunction, A: Iterable) -> GridFunction:
    """Pointwise product f * chi_A."""
    A = A if isinstance(A, (set, frozenset)) else CompactSet(A)
    return GridFunction({s: v for s, v in f.items() if s in A}, dim=f.dim)


# Young functions ------------------------------------------------------------

def _phi_power(p: float) -> Callable[[float], float]:
    return lambda t: t**p


def _phi_power_log(p: float) -> Callable[[float], float]:
    return lambda t: t**p * math.log1p(t)


YOUNG_FUNCTIONS: dict[str, Callable[[float], Callable[[float], float]]] = {
    "power": _phi_power,
    "power_log": _phi_power_log,
}


def young_function(phi: str, p: float) -> Callable[[float], float]:
    try:
        family = YOUNG_FUNCTIONS[phi]
    except KeyError:
        raise ParameterError(
            f"unknown Young function {phi!r}; choose from {sorted(YOUNG_FUNCTIONS)}"
        ) from None
    if not 1 <= p < math.inf:
        raise ParameterError(f"Young function exponent must satisfy 1 <= p < inf, got {p}")
    return family(p)


# Norms ----------------------------------------------------------------------

LP = "lp"
ORLICZ = "orlicz"
MORREY = "morrey"


@dataclass(frozen=True)
class SpaceNorm:
    """A solid, translation-invariant norm on finitely supported functions."""

    kind: str
    p: float = 2
    q: float | None = None
    phi: str | None = None
    tol: float = 1e-12

    def __post_init__(self):
        if self.kind == LP:
            if not (self.p >= 1):
                raise ParameterError(f"l^p needs p >= 1, got {self.p}")
        elif self.kind == ORLICZ:
            young_function(self.phi or "power", self.p)
            if not self.tol > 0:
                raise ParameterError("Luxemburg tolerance must be positive")
        elif self.kind == MORREY:
            if self.q is None or not (1 <= self.q <= self.p < math.inf):
                raise ParameterError(
                    f"Morrey norm needs 1 <= q <= p < inf, got p={self.p}, q={self.q}"
                )
        else:
            raise ParameterError(f"unknown norm kind {self.kind!r}")

    @classmethod
    def lp(cls, p=2) -> SpaceNorm:
        return cls(LP, p=_exponent(p))

    @classmethod
    def orlicz(cls, phi: str = "power", p=2, tol: float = 1e-12) -> SpaceNorm:
        return cls(ORLICZ, p=_exponent(p), phi=phi, tol=tol)

    @classmethod
    def morrey(cls, p, q) -> SpaceNorm:
        return cls(MORREY, p=_exponent(p), q=_exponent(q))

    def __call__(self, f: GridFunction) -> Scalar:
        return norm(self, f)

    def label(self) -> str:
        if self.kind == LP:
            return f"l^{_fmt_exp(self.p)}"
        if self.kind == ORLICZ:
            return f"orlicz[{self.phi}, p={_fmt_exp(self.p)}]"
        return f"morrey[p={_fmt_exp(self.p)}, q={_fmt_exp(self.q)}]"

    def to_json(self) -> dict:
        if self.kind == LP:
            return {"kind": LP, "p": _exp_json(self.p)}
        if self.kind == ORLICZ:
            return {"kind": ORLICZ, "phi": self.phi, "p": _exp_json(self.p), "tol": self.tol}
        return {"kind": MORREY, "p": _exp_json(self.p), "q": _exp_json(self.q)}

    @classmethod
    def from_json(cls, data: Mapping) -> SpaceNorm:
        kind = data.get("kind")
        if kind == LP:
            return cls.lp(data.get("p", 2))
        if kind == ORLICZ:
            return cls.orlicz(data.get("phi", "power"), data.get("p", 2), float(data.get("tol", 1e-12)))
        if kind == MORREY:
            if "p" not in data or "q" not in data:
                raise ParameterError("Morrey norm needs both p and q")
            return cls.morrey(data["p"], data["q"])
        raise ParameterError(f"unknown norm kind {kind!r}")


def _exponent(p) -> float:
    v = as_scalar(p)
    if v == math.inf:
        return math.inf
    v = float(v)
    return int(v) if v.is_integer() else v


def _fmt_exp(p) -> str:
    return "inf" if p == math.inf else f"{p:g}"


def _exp_json(p):
    return "inf" if p == math.inf else p


def dual_exponent(p: float) -> float:
    """Hoelder conjugate q with 1/p + 1/q = 1."""
    if p == 1:
        return math.inf
    if p == math.inf:
        return 1
    return p / (p - 1)


def norm(space: SpaceNorm, f: GridFunction) -> Scalar:
    if space.kind == LP:
        return lp_norm(space.p, f)
    if space.kind == ORLICZ:
        return luxemburg_norm(space.phi, f, space.tol, p=space.p)
    return morrey_norm(space.p, space.q, f)


def _power_terms(values: Iterable[Scalar], p) -> list[Scalar]:
    # Integer exponents keep rationals exact.
    if float(p).is_integer():
        k = int(p)
        return [abs(v) ** k for v in values]
    return [to_float(abs(v)) ** p for v in values]


def _iroot(n: int, k: int) -> int | None:
    """Exact integer k-th root of n >= 0, or None."""
    if n < 2:
        return n
    r = 1 << -(-n.bit_length() // k)
    while True:
        s = ((k - 1) * r + n // r ** (k - 1)) // k
        if s >= r:
            break
        r = s
    return r if r**k == n else None


def _root(total: Scalar, p) -> Scalar:
    if p == 1:
        return total
    if total == 0:
        return 0.0
    if isinstance(total, Fraction) and float(p).is_integer():
        # Keep perfect powers exact, e.g. (1/1024)^2 -> 1/1024.
        num, den = _iroot(total.numerator, int(p)), _iroot(total.denominator, int(p))
        if num is not None and den is not None:
            return Fraction(num, den)
    t = to_float(total)
    if p == 2:
        return math.sqrt(t)
    return t ** (1.0 / p)


def _exact_sum(terms: Iterable[Scalar]) -> Scalar:
    # Summing through Fraction makes the result independent of order.
    total = Fraction(0)
    for t in terms:
        if isinstance(t, float) and math.isinf(t):
            return math.inf
        total += Fraction(t) if isinstance(t, float) else t
    return total


def lp_norm(p, f: GridFunction) -> Scalar:
    if p == math.inf:
        return f.sup()
    terms = _power_terms(f.values(), p)
    if f.mode == FLOAT or any(isinstance(t, float) for t in terms):
        total = math.fsum(float(t) for t in terms) if terms else 0.0
    else:
        total = _exact_sum(terms)
    return _root(total, p)


def luxemburg_norm(phi: str, f: GridFunction, tol: float = 1e-12, p: float = 2) -> float:
    """inf{lam > 0 : sum_x Phi(|f(x)| / lam) <= 1} by bracketing and bisection.

    Returns the upper end of the final bracket, so the result is never below
    the true norm and exceeds it by at most a relative ``tol``.
    """
    if not tol > 0:
        raise ParameterError("tol must be positive")
    Phi = young_function(phi, p)
    vals = [to_float(abs(v)) for v in f.values()]
    if not vals:
        return 0.0

    def modular(lam: float) -> float:
        try:
            return math.fsum(Phi(v / lam) for v in vals)
        except OverflowError:
            return math.inf

    top = max(vals)
    hi = lo = top
    while modular(hi) > 1:
        hi *= 2
    while modular(lo) <= 1:
        lo /= 2
    assert lo < hi, "bracket did not close"
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if modular(mid) <= 1:
            hi = mid
        else:
            lo = mid
    return hi


def morrey_norm(p, q, f: GridFunction) -> Scalar:
    """sup over boxes B of |B|^(1/p - 1/q) * (sum_B |f|^q)^(1/q).

    Only boxes whose faces pass through support coordinates are enumerated:
    trimming empty slabs off a box keeps the q-sum and shrinks |B|, which can
    only increase the value because 1/p - 1/q <= 0.
    """
    if not (1 <= q <= p < math.inf):
        raise ParameterError(f"Morrey norm needs 1 <= q <= p < inf, got p={p}, q={q}")
    if not f:
        return 0.0
    exponent = 1.0 / p - 1.0 / q
    if f.dim == 1:
        return _morrey_1d(f, q, exponent)
    return _morrey_2d(f, q, exponent)


def _box_value(card: int, total, q, exponent):
    return (float(card) ** exponent) * to_float(_root(total, q))


def _morrey_1d(f: GridFunction, q, exponent) -> Scalar:
    xs = sorted(s[0] for s in f)
    terms = _power_terms((f[(x,)] for x in xs), q)
    prefix = [Fraction(0)]
    for t in terms:
        prefix.append(prefix[-1] + (Fraction(t) if isinstance(t, float) else t))
    if exponent == 0:
        return _root(prefix[-1], q) if f.mode == EXACT else to_float(_root(prefix[-1], q))
    best = 0.0
    m = len(xs)
    for i in range(m):
        for j in range(i, m):
            val = _box_value(xs[j] - xs[i] + 1, prefix[j + 1] - prefix[i], q, exponent)
            best = max(best, val)
    return best


def _morrey_2d(f: GridFunction, q, exponent) -> Scalar:
    xs = sorted({s[0] for s in f})
    ys = sorted({s[1] for s in f})
    ix = {x: i for i, x in enumerate(xs)}
    iy = {y: j for j, y in enumerate(ys)}
    grid = [[Fraction(0)] * len(ys) for _ in xs]
    for s, v in f.items():
        (t,) = _power_terms([v], q)
        grid[ix[s[0]]][iy[s[1]]] = Fraction(t) if isinstance(t, float) else t
    # 2-D prefix sums, P[i][j] = sum over grid[<i][<j]
    P = [[Fraction(0)] * (len(ys) + 1) for _ in range(len(xs) + 1)]
    for i in range(len(xs)):
        for j in range(len(ys)):
            P[i + 1][j + 1] = grid[i][j] + P[i][j + 1] + P[i + 1][j] - P[i][j]
    if exponent == 0:
        total = P[len(xs)][len(ys)]
        return _root(total, q) if f.mode == EXACT else to_float(_root(total, q))
    best = 0.0
    for i0 in range(len(xs)):
        for i1 in range(i0, len(xs)):
            w = xs[i1] - xs[i0] + 1
            for j0 in range(len(ys)):
                for j1 in range(j0, len(ys)):
                    total = P[i1 + 1][j1 + 1] - P[i0][j1 + 1] - P[i1 + 1][j0] + P[i0][j0]
                    if total == 0:
                        continue
                    h = ys[j1] - ys[j0] + 1
                    best = max(best, _box_value(w * h, total, q, exponent))
    return best
