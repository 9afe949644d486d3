"""Explicit vectors behind the transitivity and chaos criteria.

Transitivity: given targets f, g and a split D = E + F,

    v = f chi_D + 2 T^n (g chi_E) + 2 S^n (g chi_F)

is close to f while C(n) v is close to g once the decay quantities are small.

Periodic points: with h = f chi_D,

    v = h + sum_{l>=1} T^{ln} h + sum_{l>=1} S^{ln} h

satisfies C(ln) v = v.  Here the series are cut at L terms and the
certified tail bound of the dropped terms is kept on the bundle.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

from .criteria import NotCertifiableError, certify_series
from .dynamics import OperatorHandle, apply_cosine, apply_S_pow, apply_T_pow
from .space import CompactSet, GridFunction, ParameterError, Scalar, SpaceNorm, scale_restrict, to_float

TRANSITIVITY = "transitivity"
PERIODIC = "periodic"


@dataclass(frozen=True)
class WitnessBundle:
    v: GridFunction
    n: int
    construction: str
    D: CompactSet
    E: CompactSet | None = None
    F: CompactSet | None = None
    L: int | None = None
    tail_bound: float = 0.0
    ratios: tuple | None = None


def build_transitivity_witness(op: OperatorHandle, f: GridFunction, g: GridFunction, n: int,
                               E: Iterable, F: Iterable, D: Iterable) -> WitnessBundle:
    E, F, D = CompactSet(E), CompactSet(F), CompactSet(D)
    if E & F:
        raise ParameterError(f"E and F overlap at {sorted(E & F)}")
    if E | F != D:
        raise ParameterError("E and F must partition D")
    if n < 1:
        raise ParameterError("n must be positive")
    two = 2 if f.mode == g.mode == "exact" else 2.0
    v = (
        scale_restrict(f, D)
        + apply_T_pow(op, n, scale_restrict(g, E)) * two
        + apply_S_pow(op, n, scale_restrict(g, F)) * two
    )
    return WitnessBundle(v, n, TRANSITIVITY, D, E=E, F=F)


def verify_transition(space: SpaceNorm, op: OperatorHandle, bundle: WitnessBundle,
                      f: GridFunction, g: GridFunction) -> tuple[Scalar, Scalar]:
    """(||v - f||, ||C(n) v - g||)."""
    image = apply_cosine(op, bundle.n, bundle.v)
    return space(bundle.v - f), space(image - g)


def build_periodic_point(space: SpaceNorm, op: OperatorHandle, f: GridFunction, D: Iterable,
                         n: int, L: int, run: int = 3) -> WitnessBundle:
    """Truncated periodic point of period n.

    Raises NotCertifiableError unless the norms of T^{ln} h and S^{ln} h are
    seen to decay geometrically (``run`` consecutive ratios below 1) by l = L.
    """
    D = CompactSet(D)
    if n < 1 or L < 1:
        raise ParameterError("n and L must be positive")
    h = scale_restrict(f, D)
    if not h:
        return WitnessBundle(h, n, PERIODIC, D, L=L, tail_bound=0.0)
    t_terms = [apply_T_pow(op, l * n, h) for l in range(1, L + 1)]
    s_terms = [apply_S_pow(op, l * n, h) for l in range(1, L + 1)]
    t_cert = certify_series(lambda l: space(t_terms[l - 1]), L, run)
    s_cert = certify_series(lambda l: space(s_terms[l - 1]), L, run)
    for name, cert in (("T", t_cert), ("S", s_cert)):
        if cert.status != "certified":
            raise NotCertifiableError(
                f"{name}-series terms are not certified to decay by l={L} "
                f"(status {cert.status}, last ratio {cert.ratio})"
            )
    # certify_series may stop early; the tail after L continues geometrically.
    tail = 0.0
    for cert, terms in ((t_cert, t_terms), (s_cert, s_terms)):
        r = cert.ratio
        last = to_float(space(terms[-1]))
        tail += last * r / (1 - r)
    v = h
    for term in (*t_terms, *s_terms):
        v = v + term
    return WitnessBundle(v, n, PERIODIC, D, L=L, tail_bound=tail,
                         ratios=(t_cert.ratio, s_cert.ratio))


def periodicity_residual(space: SpaceNorm, op: OperatorHandle, bundle: WitnessBundle, l: int) -> Scalar:
    """||C(l n) v - v||."""
    if bundle.construction != PERIODIC:
        raise ParameterError("periodicity_residual needs a periodic bundle")
    if l == 0:
        return space(GridFunction.zero(bundle.v.dim))
    return space(apply_cosine(op, l * bundle.n, bundle.v) - bundle.v)


def truncation_edge_bound(space: SpaceNorm, op: OperatorHandle, f: GridFunction, bundle: WitnessBundle,
                          l: int) -> float:
    """Bound on ||C(l n) v - v|| for the truncated series.

    Shifting the truncated sum by l periods leaves the l outermost kept terms
    on each side uncancelled and exposes l dropped terms, so the residual is
    at most half the norm of those 4l terms.
    """
    h = scale_restrict(f, bundle.D)
    n, L = bundle.n, bundle.L
    total = 0.0
    for j in range(max(1, L - l + 1), L + l + 1):
        total += to_float(space(apply_T_pow(op, j * n, h))) + to_float(space(apply_S_pow(op, j * n, h)))
    return 0.5 * total


def orbit_trace(space: SpaceNorm, op: OperatorHandle, v: GridFunction,
                targets: Sequence[GridFunction], n_list: Iterable[int]) -> list[tuple[int, list[Scalar]]]:
    """Distances ||C(n) v - t|| for every n and target t."""
    out = []
    for n in n_list:
        image = apply_cosine(op, n, v)
        out.append((n, [space(image - t) for t in targets]))
    return out


def orbit_trace_csv(trace: list[tuple[int, list[Scalar]]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(["n", "target_id", "distance"])
    for n, dists in trace:
        for i, d in enumerate(dists):
            writer.writerow([n, i, f"{to_float(d):.17g}"])
    return buf.getvalue()
