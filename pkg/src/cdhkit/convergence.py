"""Certified infinite compositions.

A certificate records a stage list (h_0, h_1, ..., h_n) together with the
two verified per-stage bounds that make the partial compositions
H_i = h_i o ... o h_0 a uniformly convergent sequence with a homeomorphism
limit:

  (1)  sup_x d(h_{i+1}(x), x)              <= 2^-i
  (2)  sup_x d(H_{i+1}^-1(x), H_i^-1(x))   <= 2^-i

h_0 is exempt: the first stage may be anything.  Appending verifies both
bounds before extending; exact kinds are checked exactly, product-space
stages through certified Lipschitz bounds, float stages by sampling
(recorded as such in the ledger).

Limit evaluation truncates at the stage N where the geometric tail
2^-(N-1) drops below the requested precision; the returned value always
carries its guaranteed error bound.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .errors import BoundViolation, UnsupportedOperation
from .homeos import CylinderHomeo, FactorHomeo, FloatHomeo, compose
from .rationals import ZERO, bound_exponent, format_scalar, pow2
from .spaces import ProductSpace

_MATERIALIZE_CAP = 1 << 16


@dataclass(frozen=True)
class BoundEntry:
    """Ledger row for one appended stage."""

    stage: int
    cond1_bound: Optional[Fraction]
    cond1_value: Optional[Fraction]
    cond2_bound: Optional[Fraction]
    cond2_value: Optional[Fraction]
    method: str  # exact | exact-isometry | lipschitz | sampled | exempt

    def ser(self) -> dict:
        def s(v):
            return None if v is None else (format_scalar(v) if isinstance(v, Fraction) else v)

        return {
            "stage": self.stage,
            "cond1_bound": s(self.cond1_bound),
            "cond1_value": s(self.cond1_value),
            "cond2_bound": s(self.cond2_bound),
            "cond2_value": s(self.cond2_value),
            "method": self.method,
        }


@dataclass(frozen=True)
class EvalResult:
    value: object
    error_bound: Fraction
    tail_residual: Optional[Fraction]


def _is_product_stage(h) -> bool:
    return getattr(h, "is_product_stage", False)


class ConvergenceCertificate:
    """Immutable; `append` returns an extended certificate."""

    def __init__(self, space, stages: tuple = (), entries: tuple = (),
                 _lip_inv: Fraction = Fraction(1)):
        self.space = space
        self.stages = tuple(stages)
        self.entries = tuple(entries)
        self._lip_inv = _lip_inv  # certified Lipschitz bound for H_n^-1 (product stages)
        self._mat = None          # materialized H_n, exact kinds only
        self._mat_inv = None
        self._inverses = None

    # -- bookkeeping ---------------------------------------------------------
    @property
    def stage_count(self) -> int:
        return len(self.stages)

    @property
    def last_index(self) -> int:
        return len(self.stages) - 1

    def chain_table_depth(self) -> int:
        d = 0
        for h in self.stages:
            if isinstance(h, CylinderHomeo):
                d = max(d, h.depth)
        return d

    def _stage_inverses(self):
        if self._inverses is None:
            self._inverses = tuple(
                h.inverse() if _is_product_stage(h) else h.invert() for h in self.stages
            )
        return self._inverses

    # -- application ----------------------------------------------------------
    @staticmethod
    def _apply_one(h, x):
        if _is_product_stage(h):
            return x.apply_stage(h)
        return h.apply(x)

    def partial(self, x, upto: int):
        """H_upto(x) = (h_upto o ... o h_0)(x); exact for exact stages."""
        for h in self.stages[: upto + 1]:
            x = self._apply_one(h, x)
        return x

    def partial_inv(self, x, upto: int):
        for h in reversed(self._stage_inverses()[: upto + 1]):
            x = self._apply_one(h, x)
        return x

    def apply(self, x):
        return self.partial(x, self.last_index)

    def apply_inv(self, x):
        return self.partial_inv(x, self.last_index)

    # -- appending with verification -------------------------------------------
    def append(self, h) -> "ConvergenceCertificate":
        k = self.stage_count  # index of the new stage
        if k == 0:
            entry = BoundEntry(0, None, self._safe_disp(h), None, None, "exempt")
            lip = self._lip_of_inverse(h)
            return ConvergenceCertificate(self.space, (h,), (entry,), lip)
        bound = pow2(-(k - 1))
        c1, c2, method = self._cond_values(h)
        if c1 > bound:
            raise BoundViolation(stage=k, condition=1, bound=bound, value=c1)
        if c2 > bound:
            raise BoundViolation(stage=k, condition=2, bound=bound, value=c2)
        entry = BoundEntry(k, bound, c1, bound, c2, method)
        lip = self._lip_inv * self._lip_of_inverse(h)
        return ConvergenceCertificate(
            self.space, self.stages + (h,), self.entries + (entry,), lip
        )

    def _safe_disp(self, h):
        if _is_product_stage(h):
            return h.dstar_displacement()
        d = h.sup_displacement()
        if isinstance(d, dict):  # float estimate record
            return Fraction(d["lower_estimate"] * d["safety_factor"])
        return d

    def _lip_of_inverse(self, h) -> Fraction:
        if _is_product_stage(h):
            return h.lip_backward_bound()
        return Fraction(1)  # unused for factor stages

    def _cond_values(self, h):
        """Condition (1) and (2) values for appending h, plus the method tag."""
        c1 = self._safe_disp(h)
        if _is_product_stage(h):
            return c1, self._lip_inv * c1, "lipschitz"
        if isinstance(h, FloatHomeo):
            return c1, c1 * 2, "sampled"
        # exact factor stage: condition (2) equals sup displacement of
        # H_n^-1 o h o H_n.
        if isinstance(h, CylinderHomeo):
            t = self.chain_table_depth()
            if c1 <= pow2(-t):
                # every moved pair stays inside one depth-t cylinder, where the
                # chain inverse acts as an isometry: the conjugate displacement
                # equals the displacement itself
                return c1, c1, "exact-isometry"
        conj = self._materialized_conjugate(h)
        return c1, conj.sup_displacement(), "exact"

    def _materialized_conjugate(self, h) -> FactorHomeo:
        mat = self._materialize()
        mat_inv = self._materialize_inv()
        return compose(compose(mat, h), mat_inv)

    def _materialize(self) -> FactorHomeo:
        if self._mat is None:
            from .homeos import identity_for

            acc = identity_for(self.stages[0].space if self.stages else self.space)
            for h in self.stages:
                acc = compose(acc, h)
                if isinstance(acc, CylinderHomeo) and len(acc.table) > _MATERIALIZE_CAP:
                    raise UnsupportedOperation(
                        "materialized composition too large for an exact condition-(2) "
                        "check; use stages supported beyond the chain depth"
                    )
            self._mat = acc
        return self._mat

    def _materialize_inv(self) -> FactorHomeo:
        if self._mat_inv is None:
            self._mat_inv = self._materialize().invert()
        return self._mat_inv

    # -- limit evaluation -------------------------------------------------------
    def _truncation_index(self, eps) -> int:
        return bound_exponent(Fraction(eps)) + 1

    def tail_residual(self) -> Optional[Fraction]:
        """What any bound-respecting extension could still move the limit by."""
        if self.stage_count == 0:
            return None
        return pow2(-(self.last_index - 1))

    def limit_eval(self, x, eps) -> EvalResult:
        if self.stage_count == 0:
            return EvalResult(x, ZERO, None)
        n = self.last_index
        N = self._truncation_index(eps)
        if N <= n:
            return EvalResult(self.partial(x, N), pow2(-(N - 1)), self.tail_residual())
        return EvalResult(self.apply(x), ZERO, self.tail_residual())

    def limit_inv_eval(self, x, eps) -> EvalResult:
        if self.stage_count == 0:
            return EvalResult(x, ZERO, None)
        n = self.last_index
        N = self._truncation_index(eps)
        if N <= n:
            return EvalResult(self.partial_inv(x, N), pow2(-(N - 1)), self.tail_residual())
        return EvalResult(self.apply_inv(x), ZERO, self.tail_residual())

    # -- export -----------------------------------------------------------------
    def ledger(self) -> list:
        return [e.ser() for e in self.entries]

    def describe(self) -> dict:
        return {
            "space": self.space.descriptor() if hasattr(self.space, "descriptor") else str(self.space),
            "stages": [
                h.descriptor() if hasattr(h, "descriptor") else {"stage": "opaque"}
                for h in self.stages
            ],
            "ledger": self.ledger(),
        }


def double_limit_defect(cert: ConvergenceCertificate, m: int, n: int, x) -> Fraction:
    """d(H_m^-1(H_n(x)), x), the quantity the double-limit estimate bounds."""
    y = cert.partial(x, n)
    z = cert.partial_inv(y, m)
    space = cert.space
    if isinstance(space, ProductSpace):
        return space.metric_exact(z, x)
    return space.metric(z, x)


def reverify_ledger(space, stages, entries) -> list:
    """Re-checks every recorded bound from the stages alone.

    Returns a list of per-entry verdict dicts; exact kinds must reproduce the
    recorded values bit-exactly.
    """
    cert = ConvergenceCertificate(space)
    verdicts = []
    for h, recorded in zip(stages, entries):
        try:
            cert = cert.append(h)
            fresh = cert.entries[-1]
            ok = fresh.ser() == recorded if isinstance(recorded, dict) else fresh == recorded
            verdicts.append({"stage": fresh.stage, "ok": bool(ok), "method": fresh.method})
        except BoundViolation as e:
            verdicts.append({"stage": e.stage, "ok": False, "violation": str(e)})
            break
    return verdicts
