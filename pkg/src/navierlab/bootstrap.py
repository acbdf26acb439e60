"""Exponent-bootstrap recursions and the regularity-dimension predictor.

An L^q bound on f(u) together with a weighted bound on f^alpha(u)/(u^beta+1)
upgrades itself: from integrability exponent q0 one obtains every exponent
below

    q1 = alpha*N*q0 / (N*q0 + beta*(N - 4*q0)),        0 < beta < alpha.

Iterating this map produces a sequence that either converges monotonically
to the fixed point (alpha-beta)*N/(N-4*beta) when alpha <= N/4, or passes
N/4 after finitely many steps when alpha > N/4 -- and any exponent above
N/4 yields a uniform L-infinity bound, i.e. a regular extremal solution.
A companion (dual) recursion performs the same upgrade for -Delta(u) when a
bound on f'(u) in L^q, q > N/4, is available:

    q1 = N*q*q0 / (N*q0 + q*(N - 4*q0)),

an increasing sequence that passes N*q/(4*q - N) in finitely many steps.

``predict_regularity`` assembles the sufficient dimension conditions these
recursions yield for each family into a single verdict, trying the sharp
family-specific thresholds first and the generic growth-condition rules
after.  All arithmetic is plain binary64; the iterates are smooth rational
functions of the inputs and never need exact arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .families import NonlinearityFamily, gamma_limits

__all__ = [
    "RecursionDomainError",
    "ExponentParams",
    "BootstrapTrace",
    "iterate_q",
    "fixed_point",
    "run_bootstrap",
    "iterate_dual",
    "dual_escape_threshold",
    "dual_escapes",
    "RegularityVerdict",
    "predict_regularity",
    "regularity_from_growth",
    "INCREASING",
    "DECREASING",
    "ESCAPED",
    "INCONCLUSIVE",
    "REGULAR",
    "UNKNOWN",
    "CONVERGENCE_TOL",
]

# classification labels for traces
INCREASING = "increasing-to-fixed-point"
DECREASING = "decreasing-to-fixed-point"
ESCAPED = "escapes-above-quarter-dimension"
INCONCLUSIVE = "inconclusive"

# verdicts
REGULAR = "regular"
UNKNOWN = "unknown"

# rule tags: each names the predicate that fired
RULE_EXP = "exp-threshold:N<=8"
RULE_POWER = "power-threshold:N<=8-or-p<N/(N-8)"
RULE_MEMS = "mems-threshold:N<=8p/(p+1)"
RULE_GAMMA = "growth-ratio:N<8/gamma"
RULE_LIMINF = "curvature-liminf:N<=7"
RULE_LOWDIM = "low-dimension:N<=5"
RULE_MEMS_P3 = "mems-exponent-three-excluded"
RULE_NONE = "no-sufficient-condition"

CONVERGENCE_TOL = 1e-12


class RecursionDomainError(ValueError):
    """Recursion evaluated outside its admissible parameter range."""


@dataclass(frozen=True)
class ExponentParams:
    """Inputs of the primal recursion: dimension N, start q0, pair beta < alpha."""

    N: int
    q0: float
    alpha: float
    beta: float

    def __post_init__(self):
        if self.N < 2:
            raise RecursionDomainError("dimension N must be >= 2")
        if self.q0 < 1.0:
            raise RecursionDomainError("starting exponent q0 must be >= 1")
        if not 0.0 < self.beta < self.alpha:
            raise RecursionDomainError("need 0 < beta < alpha")


@dataclass
class BootstrapTrace:
    """Iterates of the primal recursion plus their classification."""

    sequence: list[float]
    classification: str
    fixed_point: float | None = None
    escape_steps: int | None = None
    params: ExponentParams | None = field(default=None, repr=False)

    def as_dict(self) -> dict:
        out = {
            "sequence": list(self.sequence),
            "classification": self.classification,
        }
        if self.fixed_point is not None:
            out["fixed_point"] = self.fixed_point
        if self.escape_steps is not None:
            out["escape_steps"] = self.escape_steps
        return out


def iterate_q(q0: float, alpha: float, beta: float, N: int) -> float:
    """One step of the primal recursion alpha*N*q0 / (N*q0 + beta*(N-4*q0))."""
    den = N * q0 + beta * (N - 4.0 * q0)
    if den <= 0.0:
        raise RecursionDomainError(
            f"nonpositive recursion denominator {den:g} at q0={q0:g}"
        )
    return alpha * N * q0 / den


def fixed_point(alpha: float, beta: float, N: int) -> float:
    """Fixed point (alpha-beta)*N/(N-4*beta) of the primal recursion."""
    den = N - 4.0 * beta
    if den == 0.0:
        raise RecursionDomainError("fixed point singular: N = 4*beta")
    return (alpha - beta) * N / den


def run_bootstrap(params: ExponentParams, max_steps: int = 100_000) -> BootstrapTrace:
    """Iterate the primal recursion until escape, convergence or step limit.

    The trichotomy realized: increasing to the fixed point when
    alpha <= N/4 and q0 is below it, decreasing to it from above, and
    finite-step escape past N/4 when alpha > N/4.  Convergence is detected
    when consecutive iterates differ by less than 1e-12 in absolute value.
    """
    if max_steps < 1:
        raise RecursionDomainError("max_steps must be >= 1")
    N, alpha, beta = params.N, params.alpha, params.beta
    quarter = N / 4.0
    seq = [params.q0]
    if params.q0 > quarter:
        return BootstrapTrace(seq, ESCAPED, escape_steps=0, params=params)
    try:
        fp = fixed_point(alpha, beta, N)
    except RecursionDomainError:
        fp = None
    for step in range(1, max_steps + 1):
        q_next = iterate_q(seq[-1], alpha, beta, N)
        seq.append(q_next)
        if q_next > quarter:
            return BootstrapTrace(seq, ESCAPED, fixed_point=fp, escape_steps=step, params=params)
        if abs(q_next - seq[-2]) < CONVERGENCE_TOL:
            label = INCREASING if seq[1] >= seq[0] else DECREASING
            return BootstrapTrace(seq, label, fixed_point=fp, params=params)
    return BootstrapTrace(seq, INCONCLUSIVE, fixed_point=fp, params=params)


def iterate_dual(q0: float, q: float, N: int) -> float:
    """One step of the dual recursion N*q*q0 / (N*q0 + q*(N-4*q0)).

    Requires q > N/4.  The map has no positive fixed point: for q > N/4 the
    iterates increase and the denominator vanishes as q0 approaches
    N*q/(4*q-N), past which the recursion has done its job (the companion
    predicate ``dual_escapes`` reports that).
    """
    if not q > N / 4.0:
        raise RecursionDomainError("dual recursion requires q > N/4")
    den = N * q0 + q * (N - 4.0 * q0)
    if den <= 0.0:
        raise RecursionDomainError(
            f"nonpositive dual denominator {den:g} at q0={q0:g}"
        )
    return N * q * q0 / den


def dual_escape_threshold(q: float, N: int) -> float:
    """Exponent N*q/(4q-N) past which the dual recursion terminates."""
    if not q > N / 4.0:
        raise RecursionDomainError("dual recursion requires q > N/4")
    return N * q / (4.0 * q - N)


def dual_escapes(q0: float, q: float, N: int) -> bool:
    return q0 > dual_escape_threshold(q, N)


# ---------------------------------------------------------------------------
# regularity predictor
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegularityVerdict:
    family: str  # canonical family spec string
    N: int
    verdict: str  # REGULAR or UNKNOWN
    rule: str  # tag of the predicate that decided (RULE_NONE when none fired)

    def as_dict(self) -> dict:
        return {
            "family": self.family,
            "N": self.N,
            "verdict": self.verdict,
            "rule": self.rule,
        }


def regularity_from_growth(
    N: int,
    delta_liminf: float | None = None,
    gamma_limsup: float | None = None,
) -> tuple[str, str]:
    """Generic sufficient conditions for a regular (non-singular) family.

    Checked sharpest first: N < 8/gamma when the curvature-ratio limsup
    gamma is finite and positive, N <= 7 when the liminf is positive, and
    the unconditional N <= 5.
    """
    if gamma_limsup is not None and gamma_limsup > 0.0 and N < 8.0 / gamma_limsup:
        return REGULAR, RULE_GAMMA
    if delta_liminf is not None and delta_liminf > 0.0 and N <= 7:
        return REGULAR, RULE_LIMINF
    if N <= 5:
        return REGULAR, RULE_LOWDIM
    return UNKNOWN, RULE_NONE


def predict_regularity(family: NonlinearityFamily, N: int) -> RegularityVerdict:
    """Sufficient-condition verdict for the extremal solution of (family, N).

    Family-specific sharp thresholds are applied before the generic growth
    rules.  For the singular family the exponent p = 3 is excluded from the
    threshold (the embedding step behind it degenerates there), and p <= 1
    carries no implemented sufficient condition; both report ``unknown``.
    """
    if N < 2:
        raise RecursionDomainError("dimension N must be >= 2")
    spec = family.spec
    if family.kind == "mems":
        p = family.p
        if p == 3.0:
            return RegularityVerdict(spec, N, UNKNOWN, RULE_MEMS_P3)
        if p <= 1.0:
            return RegularityVerdict(spec, N, UNKNOWN, RULE_NONE)
        if N <= 8.0 * p / (p + 1.0):
            return RegularityVerdict(spec, N, REGULAR, RULE_MEMS)
        return RegularityVerdict(spec, N, UNKNOWN, RULE_NONE)
    if family.kind == "exp":
        if N <= 8:
            return RegularityVerdict(spec, N, REGULAR, RULE_EXP)
    else:  # power
        p = family.p
        if N <= 8 or p < N / (N - 8.0):
            return RegularityVerdict(spec, N, REGULAR, RULE_POWER)
    lims = gamma_limits(family)
    verdict, rule = regularity_from_growth(
        N, delta_liminf=lims.delta_liminf, gamma_limsup=lims.gamma_limsup
    )
    return RegularityVerdict(spec, N, verdict, rule)
