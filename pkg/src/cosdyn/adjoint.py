"""Adjoints of weighted translations acting on pairing functionals.

A functional is represented by a finitely supported sequence r with
phi(f) = sum_x f(x) r(x).  With U f = f o alpha and phi_g(f) = phi(g f)::

    (T^n)* phi = phi_{W_n} o U^n,      W_n = prod_{s=0}^{n-1} w o alpha^s
    (S^n)* phi = phi_{1/B_n} o U^-n,   B_n = prod_{s=1}^{n} w o alpha^-s

Norm bounds use the l^q norm of r when the space is l^p with 1/p + 1/q = 1.
No dual norm is available for the Orlicz and Morrey spaces here.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping

from .criteria import ADJOINT_BOUNDS, CriterionReport, Verdict
from .dynamics import BACKWARD, FORWARD, OperatorHandle, weight_product
from .space import GridFunction, ParameterError, Scalar, Site, SpaceNorm, dual_exponent, lp_norm


@dataclass(frozen=True)
class DualFunctional:
    repr: GridFunction

    def __call__(self, f: GridFunction) -> Scalar:
        return pair(self, f)

    def __add__(self, other: DualFunctional) -> DualFunctional:
        return DualFunctional(self.repr + other.repr)

    def __mul__(self, c) -> DualFunctional:
        return DualFunctional(self.repr * c)

    __rmul__ = __mul__

    def dual_norm(self, space: SpaceNorm) -> Scalar:
        """Operator norm of the functional on l^p, i.e. ||r||_q."""
        if space.kind != "lp":
            raise ParameterError("dual norms are only available for l^p spaces")
        return lp_norm(dual_exponent(space.p), self.repr)

    def to_json(self) -> dict:
        return {**self.repr.to_json(), "dual": True}

    @classmethod
    def from_json(cls, data: Mapping) -> DualFunctional:
        if not data.get("dual", False):
            raise ParameterError("functional JSON must carry \"dual\": true")
        return cls(GridFunction.from_json(data))


def pair(phi: DualFunctional, f: GridFunction) -> Scalar:
    r = phi.repr
    small, large = (f, r) if len(f) <= len(r) else (r, f)
    total = Fraction(0)
    for s, v in small.items():
        if s in large:
            total = total + v * large[s]
    return total


def weight_multiply_functional(phi: DualFunctional, g) -> DualFunctional:
    """phi_g(f) = phi(g f); g is a GridFunction or any callable on sites."""
    value: Callable[[Site], Scalar] = g.__getitem__ if isinstance(g, GridFunction) else g
    return DualFunctional(phi.repr.map_values(lambda s, v: v * value(s)))


def compose_translation(op: OperatorHandle, n: int, phi: DualFunctional) -> DualFunctional:
    """phi o U^n, where U f = f o alpha.

    (phi o U^n)(f) = sum_x r(x) f(alpha^n x), so r moves from x to alpha^n x.
    """
    return DualFunctional(phi.repr.relocate(lambda s: op.map.pow(n, s)))


def adjoint_T_pow(op: OperatorHandle, n: int, phi: DualFunctional) -> DualFunctional:
    if n < 0:
        raise ParameterError("n must be non-negative")
    if n == 0:
        return phi
    weighted = weight_multiply_functional(phi, lambda x: weight_product(op, n, FORWARD, x))
    return compose_translation(op, n, weighted)


def adjoint_S_pow(op: OperatorHandle, n: int, phi: DualFunctional) -> DualFunctional:
    if n < 0:
        raise ParameterError("n must be non-negative")
    if n == 0:
        return phi
    weighted = weight_multiply_functional(phi, lambda x: 1 / weight_product(op, n, BACKWARD, x))
    return compose_translation(op, -n, weighted)


def adjoint_cosine(op: OperatorHandle, n: int, phi: DualFunctional) -> DualFunctional:
    n = abs(n)
    if n == 0:
        return phi
    half = Fraction(1, 2) if phi.repr.mode == "exact" else 0.5
    return (adjoint_T_pow(op, n, phi) + adjoint_S_pow(op, n, phi)) * half


def check_adjoint_bounds(op: OperatorHandle) -> CriterionReport:
    """Chaos of the adjoint cosine sequence forces inf w < 1 < sup w."""
    lo, hi = op.weight.inf_bound, op.weight.sup_bound
    if hi <= 1:
        return CriterionReport(
            ADJOINT_BOUNDS,
            Verdict.REFUTED,
            "sup w <= 1: the adjoint cosine sequence is not chaotic",
            certificate={
                "inf_bound": lo,
                "sup_bound": hi,
                "bound": "||(T^n)* phi|| <= ||phi|| (sup w)^n",
                "failed": "sup w > 1",
            },
        )
    if lo >= 1:
        return CriterionReport(
            ADJOINT_BOUNDS,
            Verdict.REFUTED,
            "inf w >= 1: the adjoint cosine sequence is not chaotic",
            certificate={
                "inf_bound": lo,
                "sup_bound": hi,
                "bound": "||(S^n)* phi|| <= ||phi|| (inf w)^-n",
                "failed": "inf w < 1",
            },
        )
    return CriterionReport(
        ADJOINT_BOUNDS,
        Verdict.INCONCLUSIVE,
        "inf w < 1 < sup w: the necessary bracket for chaos of the adjoint sequence holds",
        diagnostics={"inf_bound": lo, "sup_bound": hi, "necessary_condition_passed": True},
    )
