"""Checkers for the decay conditions governing periodic points, transitivity
and chaos of the cosine sequence C(n) = (T^n + S^n) / 2.

Each checker returns a ``CriterionReport``.  Verdicts are one-directional:
a necessary-condition check can refute the dynamical property or be
consistent with it, a sufficient-condition check can establish it or say
nothing.

On a finite K the residual ``||chi_{K \\ D_k}||`` tends to zero only if
``D_k = K`` from some k on (every non-empty subset has a norm bounded below),
so accepted witness terms always use ``D_k = K``.  When the search fails, the
diagnostic records the greedy subset of sites whose pointwise decay quantity
is already below the current threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Iterable

from .dynamics import (
    BACKWARD,
    FORWARD,
    NonAperiodicError,
    OperatorHandle,
    aperiodicity_horizon,
    orbit_products,
)
from .space import CompactSet, GridFunction, ParameterError, Scalar, SpaceNorm, Site, to_float

# Condition identifiers (wire format of CriterionReport).
BOUNDS_INF = "bounds-inf"                 # inf w > 1 excludes chaos
BOUNDS_SUP = "bounds-sup"                 # sup w < 1 excludes chaos
BOUNDS_BRACKET = "bounds-bracket"         # inf w <= 1 <= sup w is necessary
PERIODIC_DECAY_S = "periodic-decay-S"     # backward products, necessary
PERIODIC_DECAY_T = "periodic-decay-T"     # inverse forward products, necessary
TRANSITIVE_SUFFICIENT = "transitive-sufficient"
CHAOTIC_SUFFICIENT = "chaotic-sufficient"
ADJOINT_BOUNDS = "adjoint-bounds"

CONDITION_IDS = (
    BOUNDS_INF,
    BOUNDS_SUP,
    BOUNDS_BRACKET,
    PERIODIC_DECAY_S,
    PERIODIC_DECAY_T,
    TRANSITIVE_SUFFICIENT,
    CHAOTIC_SUFFICIENT,
    ADJOINT_BOUNDS,
)


class Verdict(str, Enum):
    SATISFIED = "satisfied"
    REFUTED = "refuted"
    INCONCLUSIVE = "inconclusive"


class NotCertifiableError(ValueError):
    """A series could not be certified convergent."""


@dataclass(frozen=True)
class Budget:
    max_n: int = 200
    L_max: int = 64
    tol: float = 1e-8
    terms: int = 3
    ratio_run: int = 3

    def __post_init__(self):
        if self.max_n < 1 or self.L_max < 1 or self.terms < 1 or self.ratio_run < 1:
            raise ParameterError("budget sizes must be positive")
        if not self.tol > 0:
            raise ParameterError("budget tol must be positive")

    def threshold(self, k: int) -> float:
        """Acceptance level for the k-th witness term (k >= 1)."""
        return self.tol * 2.0**-k


@dataclass
class WitnessTerm:
    n: int
    D: list
    values: dict
    residual: Scalar
    E: list | None = None
    F: list | None = None

    def to_json(self) -> dict:
        out = {
            "n": self.n,
            "D": [list(s) for s in self.D],
            "values": {k: json_scalar(v) for k, v in self.values.items()},
            "residual": json_scalar(self.residual),
        }
        if self.E is not None:
            out["E"] = [list(s) for s in self.E]
            out["F"] = [list(s) for s in self.F]
        return out


@dataclass
class DecaySequenceData:
    """Witness sequence (n_k, D_k) with the displayed quantities."""

    terms: list[WitnessTerm] = field(default_factory=list)

    @property
    def n_values(self) -> list[int]:
        return [t.n for t in self.terms]

    @property
    def residual_norms(self) -> list[Scalar]:
        return [t.residual for t in self.terms]

    def to_json(self) -> dict:
        return {"terms": [t.to_json() for t in self.terms]}


@dataclass
class CriterionReport:
    condition_id: str
    verdict: Verdict
    implication: str
    witness: DecaySequenceData | None = None
    certificate: dict | None = None
    diagnostics: dict = field(default_factory=dict)
    budget_exhausted: bool = False

    def __post_init__(self):
        if self.verdict is Verdict.SATISFIED and self.witness is None:
            raise ValueError("a satisfied report needs a witness")
        if self.verdict is Verdict.REFUTED and self.certificate is None:
            raise ValueError("a refuted report needs a certificate")

    def to_json(self) -> dict:
        return {
            "condition_id": self.condition_id,
            "verdict": self.verdict.value,
            "implication": self.implication,
            "witness": self.witness.to_json() if self.witness else None,
            "certificate": _jsonify(self.certificate),
            "diagnostics": _jsonify(self.diagnostics),
            "budget_exhausted": self.budget_exhausted,
        }


def json_scalar(x):
    if isinstance(x, bool) or x is None:
        return x
    if isinstance(x, int):
        return x
    v = to_float(x)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _jsonify(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, (Fraction, float)):
        return json_scalar(obj)
    return obj


# Shared quantities ----------------------------------------------------------

def _require_K(K) -> CompactSet:
    K = CompactSet(K)
    if not K:
        raise ParameterError("K must be non-empty")
    return K


def _weighted(values: dict[Site, Scalar], sites: Iterable[Site], dim: int) -> GridFunction:
    return GridFunction({s: values[s] for s in sites}, dim=dim)


def backward_products(op: OperatorHandle, K: CompactSet, n: int) -> dict[Site, Scalar]:
    """x -> prod_{s=1}^{n} w(alpha^-s(x)) on K."""
    return {x: orbit_products(op, x, [n], BACKWARD)[0] for x in K}


def inverse_forward_products(op: OperatorHandle, K: CompactSet, n: int) -> dict[Site, Scalar]:
    """x -> (prod_{s=0}^{n-1} w(alpha^s(x)))^-1 on K."""
    return {x: 1 / orbit_products(op, x, [n], FORWARD)[0] for x in K}


def split_partition(op: OperatorHandle, D: Iterable, n: int) -> tuple[CompactSet, CompactSet]:
    """Split D into E (backward 2n-product no larger than the inverse forward
    2n-product) and F (the rest)."""
    D = CompactSet(D)
    back = backward_products(op, D, 2 * n)
    inv_fwd = inverse_forward_products(op, D, 2 * n)
    E = CompactSet(x for x in D if back[x] <= inv_fwd[x])
    return E, CompactSet(D - E)


def _greedy(K: CompactSet, pointwise: dict[Site, Scalar], theta: float) -> CompactSet:
    return CompactSet(x for x in K if pointwise[x] <= theta)


def _horizon_start(op: OperatorHandle, K: CompactSet, max_n: int) -> tuple[int | None, str | None]:
    try:
        h = aperiodicity_horizon(op.map, K, budget=max_n)
    except NonAperiodicError as exc:
        return None, str(exc)
    if h is None:
        return None, f"no aperiodicity horizon for K within {max_n} iterations"
    return h.n, None


# Bound checks ---------------------------------------------------------------

def check_bounds_necessary(op: OperatorHandle) -> CriterionReport:
    """Chaos of C(n) forces inf w <= 1 <= sup w."""
    lo, hi = op.weight.inf_bound, op.weight.sup_bound
    if lo > 1:
        return CriterionReport(
            BOUNDS_INF,
            Verdict.REFUTED,
            "inf w > 1: S^n f -> 0 for every f and periodic points are not dense, "
            "so (C(n)) is not chaotic",
            certificate={"inf_bound": lo, "sup_bound": hi, "bound": "||S^n f|| <= (inf w)^-n ||f||"},
        )
    if hi < 1:
        return CriterionReport(
            BOUNDS_SUP,
            Verdict.REFUTED,
            "sup w < 1: T^n f -> 0 for every f and periodic points are not dense, "
            "so (C(n)) is not chaotic",
            certificate={"inf_bound": lo, "sup_bound": hi, "bound": "||T^n f|| <= (sup w)^n ||f||"},
        )
    return CriterionReport(
        BOUNDS_BRACKET,
        Verdict.INCONCLUSIVE,
        "inf w <= 1 <= sup w: the necessary bracket for chaos holds; nothing more follows",
        diagnostics={"inf_bound": lo, "sup_bound": hi, "necessary_condition_passed": True},
    )


# Necessary decay conditions -------------------------------------------------

def _check_necessary(
    space: SpaceNorm,
    op: OperatorHandle,
    K,
    budget: Budget,
    *,
    condition_id: str,
    products: Callable[[OperatorHandle, CompactSet, int], dict[Site, Scalar]],
    growth_base: Scalar | None,
    growth_text: str,
    consistent_text: str,
    refuted_text: str,
) -> CriterionReport:
    K = _require_K(K)
    chi_K = space(K.indicator())
    start, problem = _horizon_start(op, K, budget.max_n)
    if start is None:
        return CriterionReport(
            condition_id,
            Verdict.INCONCLUSIVE,
            "the map is not shown aperiodic on K; the condition does not apply",
            diagnostics={"reason": problem},
        )

    if growth_base is not None and growth_base > 1:
        # Lower bound base^n ||chi_K|| on the displayed norm, which must hold
        # with D_k = K eventually.
        rows = []
        ns = [start + j for j in range(budget.terms)]
        for n in ns:
            pw = products(op, K, n)
            rows.append({
                "n": n,
                "lower_bound": growth_base**n * chi_K,
                "direct": space(_weighted(pw, K, K.dim)),
            })
        return CriterionReport(
            condition_id,
            Verdict.REFUTED,
            refuted_text,
            certificate={
                "kind": "monotone-growth",
                "formula": growth_text,
                "base": growth_base,
                "chi_K_norm": chi_K,
                "rows": rows,
            },
        )

    witness = DecaySequenceData()
    n = start - 1
    last = None
    for k in range(1, budget.terms + 1):
        theta = budget.threshold(k)
        found = False
        while n < budget.max_n:
            n += 1
            pw = products(op, K, n)
            value = space(_weighted(pw, K, K.dim))
            last = (n, pw, value, theta)
            if to_float(value) <= theta:
                witness.terms.append(WitnessTerm(n, K.sorted(), {"value": value}, 0))
                found = True
                break
        if not found:
            break

    if len(witness.terms) == budget.terms:
        return CriterionReport(
            condition_id, Verdict.SATISFIED, consistent_text, witness=witness,
            diagnostics={"horizon": start, "D_equals_K": True},
        )
    diag = {"horizon": start, "terms_found": len(witness.terms), "D_equals_K_reached": False}
    if last is not None:
        n_last, pw, value, theta = last
        D = _greedy(K, pw, theta)
        diag.update({
            "last_n": n_last,
            "last_value": value,
            "greedy_D": D.to_json(),
            "greedy_value": space(_weighted(pw, D, K.dim)),
            "greedy_residual": space(CompactSet(K - D).indicator()) if K - D else 0,
        })
    return CriterionReport(
        condition_id,
        Verdict.INCONCLUSIVE,
        "no decaying witness found within budget; nothing follows",
        witness=witness if witness.terms else None,
        diagnostics=diag,
        budget_exhausted=True,
    )


def check_necessary_decay_S(space: SpaceNorm, op: OperatorHandle, K, budget: Budget = Budget()) -> CriterionReport:
    """Search n_k with ||chi_K prod_{s=1}^{n_k} w(alpha^-s)|| -> 0.

    This decay is necessary for the periodic points of C(n) to be dense with
    S^n f -> 0 on each of them.  Refuted in closed form when inf w > 1.
    """
    lo = op.weight.inf_bound
    return _check_necessary(
        space, op, K, budget,
        condition_id=PERIODIC_DECAY_S,
        products=backward_products,
        growth_base=lo,
        growth_text="||chi_D prod_{s=1}^{n} w(alpha^-s)|| >= (inf w)^n ||chi_D||",
        consistent_text="backward products decay on K: consistent with dense periodic points "
        "on which S^n -> 0 (this does not establish them)",
        refuted_text="backward products grow on K: periodic points with S^n f -> 0 cannot be "
        "dense, so (C(n)) is not chaotic",
    )


def check_necessary_decay_T(space: SpaceNorm, op: OperatorHandle, K, budget: Budget = Budget()) -> CriterionReport:
    """Search n_k with ||chi_K (prod_{s=0}^{n_k-1} w(alpha^s))^-1|| -> 0.

    Mirror image of ``check_necessary_decay_S``; refuted when sup w < 1.
    """
    hi = op.weight.sup_bound
    return _check_necessary(
        space, op, K, budget,
        condition_id=PERIODIC_DECAY_T,
        products=inverse_forward_products,
        growth_base=1 / hi,
        growth_text="||chi_D (prod_{s=0}^{n-1} w(alpha^s))^-1|| >= (sup w)^-n ||chi_D||",
        consistent_text="inverse forward products decay on K: consistent with dense periodic "
        "points on which T^n -> 0 (this does not establish them)",
        refuted_text="inverse forward products grow on K: periodic points with T^n f -> 0 "
        "cannot be dense, so (C(n)) is not chaotic",
    )


# Sufficient conditions ------------------------------------------------------

def _growth_refutation(op: OperatorHandle, condition_id: str, space: SpaceNorm, K: CompactSet,
                       budget: Budget, what: str) -> CriterionReport | None:
    lo, hi = op.weight.inf_bound, op.weight.sup_bound
    chi_K = space(K.indicator())
    if lo > 1:
        base, formula = lo, "||chi_D prod_{s=1}^{n} w(alpha^-s)|| >= (inf w)^n ||chi_D||"
    elif hi < 1:
        base, formula = 1 / hi, "||chi_D (prod_{s=0}^{n-1} w(alpha^s))^-1|| >= (sup w)^-n ||chi_D||"
    else:
        return None
    rows = [{"n": n, "lower_bound": base**n * chi_K} for n in range(1, budget.terms + 1)]
    return CriterionReport(
        condition_id,
        Verdict.REFUTED,
        f"the sufficient condition for {what} fails on K (a displayed quantity grows); "
        f"nothing follows about {what} itself",
        certificate={"kind": "monotone-growth", "formula": formula, "base": base,
                     "chi_K_norm": chi_K, "rows": rows},
    )


def transitivity_quantities(space: SpaceNorm, op: OperatorHandle, K: CompactSet, n: int) -> dict:
    """The four norms of the sufficient transitivity condition at n, D = K."""
    E, F = split_partition(op, K, n)
    back_n = backward_products(op, K, n)
    inv_n = inverse_forward_products(op, K, n)
    back_2n = backward_products(op, E, 2 * n)
    inv_2n = inverse_forward_products(op, F, 2 * n)
    return {
        "E": E,
        "F": F,
        "values": {
            "D_backward": space(_weighted(back_n, K, K.dim)),
            "D_inverse_forward": space(_weighted(inv_n, K, K.dim)),
            "E_backward_2n": space(_weighted(back_2n, E, K.dim)),
            "F_inverse_forward_2n": space(_weighted(inv_2n, F, K.dim)),
        },
        "pointwise": {
            x: max(back_n[x], inv_n[x], back_2n[x] if x in E else inv_2n[x]) for x in K
        },
    }


def check_sufficient_transitive(space: SpaceNorm, op: OperatorHandle, K, budget: Budget = Budget()) -> CriterionReport:
    """Search n_k and a partition K = E_k + F_k making the four displayed
    quantities vanish.  Satisfied means (C(n)) is topologically transitive,
    provided the same holds for every compact K."""
    K = _require_K(K)
    refuted = _growth_refutation(op, TRANSITIVE_SUFFICIENT, space, K, budget, "transitivity")
    if refuted is not None:
        return refuted
    witness = DecaySequenceData()
    n = 0
    last = None
    for k in range(1, budget.terms + 1):
        theta = budget.threshold(k)
        found = False
        while n < budget.max_n:
            n += 1
            qs = transitivity_quantities(space, op, K, n)
            last = (n, qs, theta)
            if all(to_float(v) <= theta for v in qs["values"].values()):
                witness.terms.append(WitnessTerm(
                    n, K.sorted(), qs["values"], 0, E=qs["E"].sorted(), F=qs["F"].sorted(),
                ))
                found = True
                break
        if not found:
            break
    if len(witness.terms) == budget.terms:
        return CriterionReport(
            TRANSITIVE_SUFFICIENT,
            Verdict.SATISFIED,
            "sufficient condition holds on K: if it holds for every compact set, "
            "(C(n)) is topologically transitive",
            witness=witness,
        )
    diag = {"terms_found": len(witness.terms)}
    if last is not None:
        n_last, qs, theta = last
        D = _greedy(K, qs["pointwise"], theta)
        diag.update({
            "last_n": n_last,
            "last_values": qs["values"],
            "greedy_D": D.to_json(),
            "greedy_residual": space(CompactSet(K - D).indicator()) if K - D else 0,
        })
    return CriterionReport(
        TRANSITIVE_SUFFICIENT,
        Verdict.INCONCLUSIVE,
        "sufficient condition not certified within budget; nothing follows",
        witness=witness if witness.terms else None,
        diagnostics=diag,
        budget_exhausted=True,
    )


@dataclass
class SeriesCertificate:
    """Partial sum of a positive series with a geometric tail bound.

    ``status`` is "certified", "divergent" or "undecided".
    """

    terms: list[Scalar]
    status: str
    ratio: float | None = None
    tail_bound: float = math.inf

    @property
    def partial(self) -> Scalar:
        total = Fraction(0)
        for t in self.terms:
            total = total + t
        return total

    @property
    def upper(self) -> float:
        # Rounded outward: the bound is tight for exactly geometric series.
        return (to_float(self.partial) + self.tail_bound) * (1 + 1e-15)

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "L": len(self.terms),
            "partial": json_scalar(self.partial),
            "ratio": self.ratio,
            "tail_bound": json_scalar(self.tail_bound),
            "upper": json_scalar(self.upper),
        }


def _ratio(a: Scalar, b: Scalar) -> float:
    fa, fb = to_float(a), to_float(b)
    if fb == 0:
        return 0.0 if fa == 0 else math.inf
    if math.isinf(fb) or math.isinf(fa):
        # Fall back to exact arithmetic when float saturates.
        try:
            return to_float(Fraction(a) / Fraction(b))
        except (TypeError, ValueError, OverflowError):
            return math.inf
    return fa / fb


def certify_series(term: Callable[[int], Scalar], L_max: int, run: int = 3) -> SeriesCertificate:
    """Sum term(1), term(2), ... until ``run`` consecutive ratios stay below 1.

    The tail beyond the last term t_L is bounded by t_L r / (1 - r) with r the
    largest of those ratios, i.e. the series is trusted to decay at least
    geometrically from there on.  ``run`` consecutive ratios >= 1 mark the
    series divergent.
    """
    terms: list[Scalar] = []
    ratios: list[float] = []
    for l in range(1, L_max + 1):
        terms.append(term(l))
        if l >= 2:
            ratios.append(_ratio(terms[-1], terms[-2]))
        if len(ratios) >= run:
            window = ratios[-run:]
            r = max(window)
            if r < 1:
                tail = to_float(terms[-1]) * r / (1 - r)
                return SeriesCertificate(terms, "certified", r, tail)
            if min(window) >= 1:
                return SeriesCertificate(terms, "divergent", r)
    return SeriesCertificate(terms, "undecided", max(ratios[-run:]) if ratios else None)


def chaotic_series(space: SpaceNorm, op: OperatorHandle, D: CompactSet, n: int,
                   budget: Budget) -> tuple[SeriesCertificate, SeriesCertificate]:
    """The two series sum_l ||chi_D prod_{s=1}^{ln} w(alpha^-s)|| (bounds the
    T-series of the periodic point) and sum_l ||chi_D (prod_{s=0}^{ln-1}
    w(alpha^s))^-1|| (bounds the S-series)."""
    def t_term(l: int) -> Scalar:
        return space(_weighted(backward_products(op, D, l * n), D, D.dim))

    def s_term(l: int) -> Scalar:
        return space(_weighted(inverse_forward_products(op, D, l * n), D, D.dim))

    return (certify_series(t_term, budget.L_max, budget.ratio_run),
            certify_series(s_term, budget.L_max, budget.ratio_run))


def check_sufficient_chaotic(space: SpaceNorm, op: OperatorHandle, K, budget: Budget = Budget()) -> CriterionReport:
    """Search n_k for which both certified series sums vanish.  Satisfied
    means (C(n)) is chaotic, provided the same holds for every compact K."""
    K = _require_K(K)
    refuted = _growth_refutation(op, CHAOTIC_SUFFICIENT, space, K, budget, "chaos")
    if refuted is not None:
        refuted.certificate["series"] = "terms grow geometrically in l; the series diverge"
        return refuted
    witness = DecaySequenceData()
    n = 0
    last = None
    statuses: dict[str, int] = {}
    for k in range(1, budget.terms + 1):
        theta = budget.threshold(k)
        found = False
        while n < budget.max_n:
            n += 1
            t_series, s_series = chaotic_series(space, op, K, n, budget)
            last = (n, t_series, s_series)
            for name, ser in (("T", t_series), ("S", s_series)):
                statuses[f"{name}:{ser.status}"] = statuses.get(f"{name}:{ser.status}", 0) + 1
            if (t_series.status == s_series.status == "certified"
                    and t_series.upper <= theta and s_series.upper <= theta):
                witness.terms.append(WitnessTerm(n, K.sorted(), {
                    "series_T_partial": t_series.partial,
                    "series_T_upper": t_series.upper,
                    "series_S_partial": s_series.partial,
                    "series_S_upper": s_series.upper,
                }, 0))
                found = True
                break
        if not found:
            break
    if len(witness.terms) == budget.terms:
        return CriterionReport(
            CHAOTIC_SUFFICIENT,
            Verdict.SATISFIED,
            "sufficient condition holds on K: if it holds for every compact set, "
            "(C(n)) is chaotic (and in particular topologically transitive)",
            witness=witness,
        )
    diag: dict = {"terms_found": len(witness.terms), "series_status_counts": statuses}
    if last is not None:
        n_last, t_series, s_series = last
        diag.update({"last_n": n_last, "T_series": t_series.to_json(), "S_series": s_series.to_json()})
        if "divergent" in (t_series.status, s_series.status):
            diag["not_certifiable"] = "series terms do not decay"
    return CriterionReport(
        CHAOTIC_SUFFICIENT,
        Verdict.INCONCLUSIVE,
        "series not certified convergent and small within budget; nothing follows",
        witness=witness if witness.terms else None,
        diagnostics=diag,
        budget_exhausted=True,
    )


def run_all_checks(space: SpaceNorm, op: OperatorHandle, K, budget: Budget = Budget()) -> list[CriterionReport]:
    return [
        check_bounds_necessary(op),
        check_necessary_decay_S(space, op, K, budget),
        check_necessary_decay_T(space, op, K, budget),
        check_sufficient_transitive(space, op, K, budget),
        check_sufficient_chaotic(space, op, K, budget),
    ]
