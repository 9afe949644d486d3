"""Weighted translations, their inverses, powers and the cosine sequence.

For a bijection ``alpha`` of the lattice and a weight ``w`` bounded above and
away from zero::

    T f = w * (f o alpha)
    S f = (f o alpha^-1) / (w o alpha^-1)          (S = T^-1)
    C(n) = (T^n + S^n) / 2,   C(-n) = C(n)

Powers are evaluated in closed form.  Pushing an entry at site y through
``T^n`` lands it at ``alpha^-n(y)`` scaled by the backward product
``prod_{s=1..n} w(alpha^-s(y))``; through ``S^n`` it lands at ``alpha^n(y)``
divided by the forward product ``prod_{s=0..n-1} w(alpha^s(y))``.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .space import (
    CompactSet,
    GridFunction,
    ParameterError,
    Scalar,
    Site,
    as_scalar,
    as_site,
    format_scalar,
)

FORWARD = "forward"
BACKWARD = "backward"


class NonAperiodicError(ValueError):
    """The map returns a compact set onto itself infinitely often."""


# Maps -----------------------------------------------------------------------

@dataclass(frozen=True)
class Shift:
    """Translation x -> x + a on Z^d."""

    a: Site

    def __post_init__(self):
        object.__setattr__(self, "a", as_site(self.a))

    @property
    def dim(self) -> int:
        return len(self.a)

    @property
    def is_identity(self) -> bool:
        return not any(self.a)

    def forward(self, x: Site) -> Site:
        return tuple(xi + ai for xi, ai in zip(x, self.a))

    def backward(self, x: Site) -> Site:
        return tuple(xi - ai for xi, ai in zip(x, self.a))

    def pow(self, n: int, x: Site) -> Site:
        return tuple(xi + n * ai for xi, ai in zip(x, self.a))

    def to_json(self) -> dict:
        return {"kind": "shift", "a": list(self.a)}


@dataclass(frozen=True)
class CustomMap:
    """User-supplied bijection given by both directions.

    Bijectivity is the caller's contract; ``check_inverse`` samples it.
    """

    forward: Callable[[Site], Site]
    backward: Callable[[Site], Site]
    dim: int = 1
    name: str = "custom"

    def pow(self, n: int, x: Site) -> Site:
        step = self.forward if n >= 0 else self.backward
        for _ in range(abs(n)):
            x = step(x)
        return x

    def check_inverse(self, sites: Iterable) -> None:
        for s in sites:
            s = as_site(s)
            if self.backward(self.forward(s)) != s or self.forward(self.backward(s)) != s:
                raise ParameterError(f"{self.name}: forward/backward are not inverse at {s}")

    def to_json(self) -> dict:
        raise ParameterError("custom maps cannot be serialized")


DynMap = Shift | CustomMap


def map_pow(alpha: DynMap, n: int, x) -> Site:
    """alpha^n(x) for any signed n."""
    return alpha.pow(n, as_site(x))


def map_from_json(data: Mapping) -> DynMap:
    if data.get("kind") != "shift":
        raise ParameterError(f"unknown map kind {data.get('kind')!r}")
    a = data.get("a")
    if isinstance(a, int):
        a = [a]
    if not a or len(a) not in (1, 2):
        raise ParameterError("shift vector 'a' must have 1 or 2 integer components")
    return Shift(tuple(int(c) for c in a))


def _compose_maps(outer: DynMap, inner: DynMap) -> DynMap:
    """The map x -> inner(outer(x))."""
    if isinstance(outer, Shift) and isinstance(inner, Shift):
        return Shift(tuple(a + b for a, b in zip(outer.a, inner.a)))
    return CustomMap(
        forward=lambda x: inner.forward(outer.forward(x)),
        backward=lambda x: outer.backward(inner.backward(x)),
        dim=outer.dim,
        name="composed",
    )


# Weights --------------------------------------------------------------------

def _positive(value, what: str) -> Scalar:
    v = as_scalar(value)
    if not (0 < v < math.inf):
        raise ParameterError(f"{what} must be positive and finite, got {value!r}")
    return v


@dataclass(frozen=True)
class Constant:
    value: Scalar

    def __post_init__(self):
        object.__setattr__(self, "value", _positive(self.value, "constant weight"))

    def __call__(self, x: Site) -> Scalar:
        return self.value

    @property
    def inf_bound(self) -> Scalar:
        return self.value

    @property
    def sup_bound(self) -> Scalar:
        return self.value

    def to_json(self) -> dict:
        return {"kind": "constant", "value": format_scalar(self.value)}


@dataclass(frozen=True)
class HalfLine:
    """``low`` on x <= threshold, ``high`` on x > threshold (d = 1)."""

    threshold: int
    low: Scalar
    high: Scalar

    def __post_init__(self):
        object.__setattr__(self, "threshold", int(self.threshold))
        object.__setattr__(self, "low", _positive(self.low, "half-line low value"))
        object.__setattr__(self, "high", _positive(self.high, "half-line high value"))

    def __call__(self, x: Site) -> Scalar:
        if len(x) != 1:
            raise ParameterError("half-line weights are defined on Z only")
        return self.low if x[0] <= self.threshold else self.high

    @property
    def inf_bound(self) -> Scalar:
        return min(self.low, self.high)

    @property
    def sup_bound(self) -> Scalar:
        return max(self.low, self.high)

    def to_json(self) -> dict:
        return {
            "kind": "halfline",
            "threshold": self.threshold,
            "low": format_scalar(self.low),
            "high": format_scalar(self.high),
        }


@dataclass(frozen=True)
class Table:
    """Finitely many explicit values, ``default`` everywhere else."""

    values: Mapping
    default: Scalar

    def __post_init__(self):
        object.__setattr__(
            self,
            "values",
            {as_site(k): _positive(v, f"weight at {k}") for k, v in dict(self.values).items()},
        )
        object.__setattr__(self, "default", _positive(self.default, "table default"))

    def __call__(self, x: Site) -> Scalar:
        return self.values.get(x, self.default)

    @property
    def inf_bound(self) -> Scalar:
        return min([self.default, *self.values.values()])

    @property
    def sup_bound(self) -> Scalar:
        return max([self.default, *self.values.values()])

    def __hash__(self):
        return hash((frozenset(self.values.items()), self.default))

    def to_json(self) -> dict:
        return {
            "kind": "table",
            "entries": [[list(s), format_scalar(v)] for s, v in sorted(self.values.items())],
            "default": format_scalar(self.default),
        }


@dataclass(frozen=True)
class Expr:
    """Arbitrary per-site weight with declared bounds.

    The bounds cannot be certified for an arbitrary callable; they are
    checked on the sites in ``sample`` (by default a window around the
    origin) and trusted elsewhere.
    """

    fn: Callable[[Site], Scalar]
    inf_bound: Scalar
    sup_bound: Scalar
    dim: int = 1
    sample: tuple = field(default=(), compare=False)

    def __post_init__(self):
        lo = _positive(self.inf_bound, "inf_bound")
        hi = _positive(self.sup_bound, "sup_bound")
        if lo > hi:
            raise ParameterError("inf_bound exceeds sup_bound")
        sites = self.sample or _window(self.dim, 25)
        for s in sites:
            v = self.fn(as_site(s))
            if not lo <= v <= hi:
                raise ParameterError(f"weight value {v} at {s} outside [{lo}, {hi}]")

    def __call__(self, x: Site) -> Scalar:
        return self.fn(x)

    def to_json(self) -> dict:
        raise ParameterError("expression weights cannot be serialized")


def _window(dim: int, r: int) -> list[Site]:
    if dim == 1:
        return [(x,) for x in range(-r, r + 1)]
    return [(x, y) for x in range(-r, r + 1) for y in range(-r, r + 1)]


@dataclass(frozen=True)
class ProductWeight:
    """x -> outer(x) * inner(alpha(x)), the weight of a composed translation."""

    outer: object
    inner: object
    alpha: DynMap

    def __call__(self, x: Site) -> Scalar:
        return self.outer(x) * self.inner(self.alpha.forward(x))

    @property
    def inf_bound(self) -> Scalar:
        return self.outer.inf_bound * self.inner.inf_bound

    @property
    def sup_bound(self) -> Scalar:
        return self.outer.sup_bound * self.inner.sup_bound

    def to_json(self) -> dict:
        raise ParameterError("composed weights cannot be serialized")


WeightFn = Constant | HalfLine | Table | Expr | ProductWeight


def weight_from_json(data: Mapping) -> WeightFn:
    kind = data.get("kind")
    try:
        if kind == "constant":
            return Constant(data["value"])
        if kind == "halfline":
            return HalfLine(data.get("threshold", 0), data["low"], data["high"])
        if kind == "table":
            return Table({as_site(s): v for s, v in data.get("entries", [])}, data["default"])
    except KeyError as exc:
        raise ParameterError(f"{kind} weight is missing field {exc.args[0]!r}") from None
    raise ParameterError(f"unknown weight kind {kind!r}")


# Operators ------------------------------------------------------------------

@dataclass(frozen=True)
class OperatorHandle:
    """The pair (alpha, w) defining T = T_{alpha, w}."""

    map: DynMap
    weight: WeightFn

    @property
    def dim(self) -> int:
        return self.map.dim


def _fast_product(op: OperatorHandle, n: int, side: str, x: Site):
    """Closed-form orbit product for constant and half-line weights, else None."""
    w = op.weight
    if isinstance(w, Constant):
        return w.value**n
    if isinstance(w, HalfLine) and isinstance(op.map, Shift) and op.map.dim == 1:
        a = op.map.a[0]
        if a == 0:
            return (w.low if x[0] <= w.threshold else w.high) ** n
        # orbit sites x + s*a for s in [s0, s1]
        s0, s1 = (0, n - 1) if side == FORWARD else (-n, -1)
        d = w.threshold - x[0]
        # count of s in [s0, s1] with s*a <= d
        if a > 0:
            hi = min(s1, d // a)
            n_low = max(0, hi - s0 + 1)
        else:
            lo = max(s0, _ceil_div(d, a))
            n_low = max(0, s1 - lo + 1)
        return w.low**n_low * w.high ** (n - n_low)
    if isinstance(w, Table) and isinstance(op.map, Shift) and not op.map.is_identity:
        # Only table sites on the orbit segment differ from the default.
        s0, s1 = (0, n - 1) if side == FORWARD else (-n, -1)
        prod = Fraction(1) if not isinstance(w.default, float) else 1.0
        hits = 0
        for site, value in w.values.items():
            s = _orbit_index(tuple(k - xi for k, xi in zip(site, x)), op.map.a)
            if s is not None and s0 <= s <= s1:
                prod = prod * value
                hits += 1
        return prod * w.default ** (n - hits)
    return None


def _orbit_index(d: Site, a: Site) -> int | None:
    """The integer s with d = s*a, or None."""
    s = None
    for di, ai in zip(d, a):
        if ai == 0:
            if di != 0:
                return None
            continue
        if di % ai:
            return None
        if s is None:
            s = di // ai
        elif s != di // ai:
            return None
    return s


def _ceil_div(p: int, q: int) -> int:
    return -((-p) // q)


def weight_product(op: OperatorHandle, n: int, side: str, x) -> Scalar:
    """Running weight product along the orbit of x.

    forward:  prod_{s=0}^{n-1} w(alpha^s(x))
    backward: prod_{s=1}^{n}   w(alpha^-s(x))
    """
    if n < 0:
        raise ParameterError("weight_product needs n >= 0")
    if side not in (FORWARD, BACKWARD):
        raise ParameterError(f"side must be {FORWARD!r} or {BACKWARD!r}")
    x = as_site(x)
    fast = _fast_product(op, n, side, x)
    if fast is not None:
        return fast
    return orbit_products(op, x, [n], side)[0]


def orbit_products(op: OperatorHandle, x: Site, lengths: Iterable[int], side: str) -> list[Scalar]:
    """weight_product at each of the given lengths, sharing one orbit walk."""
    lengths = list(lengths)
    if not lengths:
        return []
    if _fast_product(op, 1, side, x) is not None:
        return [_fast_product(op, n, side, x) for n in lengths]
    order = sorted(range(len(lengths)), key=lengths.__getitem__)
    out: list[Scalar] = [0] * len(lengths)
    w, alpha = op.weight, op.map
    prod: Scalar = Fraction(1)
    done = 0
    y = x if side == FORWARD else alpha.backward(x)
    for idx in order:
        target = lengths[idx]
        while done < target:
            prod = prod * w(y)
            y = alpha.forward(y) if side == FORWARD else alpha.backward(y)
            done += 1
        out[idx] = prod
    return out


def apply_T(op: OperatorHandle, f: GridFunction) -> GridFunction:
    """(T f)(x) = w(x) f(alpha(x))."""
    w, alpha = op.weight, op.map
    out = {}
    for y, v in f.items():
        x = alpha.backward(y)
        out[x] = w(x) * v
    return GridFunction._build(out, f.dim)


def apply_S(op: OperatorHandle, f: GridFunction) -> GridFunction:
    """(S f)(x) = f(alpha^-1(x)) / w(alpha^-1(x))."""
    w, alpha = op.weight, op.map
    out = {}
    for y, v in f.items():
        out[alpha.forward(y)] = v / w(y)
    return GridFunction._build(out, f.dim)


def apply_T_pow(op: OperatorHandle, n: int, f: GridFunction) -> GridFunction:
    if n < 0:
        raise ParameterError("apply_T_pow needs n >= 0; use apply_S_pow")
    if n == 0:
        return f
    out = {}
    for y, v in f.items():
        out[op.map.pow(-n, y)] = v * weight_product(op, n, BACKWARD, y)
    return GridFunction._build(out, f.dim)


def apply_S_pow(op: OperatorHandle, n: int, f: GridFunction) -> GridFunction:
    if n < 0:
        raise ParameterError("apply_S_pow needs n >= 0; use apply_T_pow")
    if n == 0:
        return f
    out = {}
    for y, v in f.items():
        out[op.map.pow(n, y)] = v / weight_product(op, n, FORWARD, y)
    return GridFunction._build(out, f.dim)


def _half(f: GridFunction):
    return Fraction(1, 2) if f.mode == "exact" else 0.5


def apply_cosine(op: OperatorHandle, n: int, f: GridFunction) -> GridFunction:
    """C(n) f = (T^|n| f + S^|n| f) / 2."""
    n = abs(n)
    if n == 0:
        return f
    # One pass instead of building T^n f, S^n f and their sum separately.
    half = _half(f)
    out: dict = {}
    for y, v in f.items():
        out[op.map.pow(-n, y)] = v * weight_product(op, n, BACKWARD, y) * half
    for y, v in f.items():
        x = op.map.pow(n, y)
        term = v / weight_product(op, n, FORWARD, y) * half
        out[x] = out[x] + term if x in out else term
    return GridFunction._build(out, f.dim)


def compose_ops(op2: OperatorHandle, op1: OperatorHandle) -> OperatorHandle:
    """Handle of T2 o T1, i.e. the translation by alpha1 o alpha2 with
    weight w2 * (w1 o alpha2)."""
    if op1.dim != op2.dim:
        raise ParameterError("cannot compose operators of different dimension")
    alpha = _compose_maps(op2.map, op1.map)
    w1, w2 = op1.weight, op2.weight
    if isinstance(w1, Constant) and isinstance(w2, Constant):
        weight = Constant(w1.value * w2.value)
    elif isinstance(w1, Constant) and w1.value == 1:
        weight = w2
    elif isinstance(w2, Constant) and w2.value == 1 and isinstance(op2.map, Shift) and op2.map.is_identity:
        weight = w1
    else:
        weight = ProductWeight(w2, w1, op2.map)
    return OperatorHandle(alpha, weight)


# Aperiodicity ---------------------------------------------------------------

@dataclass(frozen=True)
class Horizon:
    """alpha^n(K) and K are disjoint for every n >= ``n``.

    ``certified_through`` is None when the bound holds for all n (closed form)
    and the last checked n otherwise.
    """

    n: int
    certified_through: int | None = None


def aperiodicity_horizon(alpha: DynMap, K: Iterable, budget: int = 1000) -> Horizon | None:
    """Smallest N with K and alpha^n(K) disjoint for all n >= N.

    Shifts are handled in closed form.  For custom maps n = 1..budget is
    scanned and None is returned when the scan certifies nothing.
    """
    K = CompactSet(K)
    if not K:
        raise ParameterError("K must be non-empty")
    if isinstance(alpha, Shift):
        if alpha.is_identity:
            raise NonAperiodicError("the identity shift is not aperiodic")
        last = 0
        sites = list(K)
        for x in sites:
            for y in sites:
                n = _multiple_of(tuple(yi - xi for xi, yi in zip(x, y)), alpha.a)
                if n is not None and n > last:
                    last = n
        return Horizon(last + 1)
    last_hit = 0
    image = set(K)
    for n in range(1, budget + 1):
        image = {alpha.forward(x) for x in image}
        if image & K:
            last_hit = n
    if last_hit >= budget:
        return None
    return Horizon(last_hit + 1, certified_through=budget)


def _multiple_of(d: Site, a: Site) -> int | None:
    """n >= 0 with d = n*a, or None."""
    n = _orbit_index(d, a)
    return n if n is not None and n >= 0 else None
