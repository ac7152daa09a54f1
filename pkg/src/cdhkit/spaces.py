"""Factor spaces, product spaces and lazily evaluated product points.

Factor kinds and their standardized admissible complete metrics (diameter
at most 1, except the Euclidean kinds, which are flagged):

  cantor   bit sequences,        d(x,y) = 2^-min{i : x_i != y_i}
  baire    integer sequences,    same formula
  circle   R/Z,                  d(x,y) = min(|x-y|, 1-|x-y|)
  line     R,                    d(x,y) = min(|x-y|, 1)
  disc(m)  closed unit ball of R^m, Euclidean (diameter 2)
  ball(m)  open unit ball of R^m,   Euclidean (diameter < 2)

Exact kinds (cantor, baire, circle, line) never touch floats: their points
are eventually-constant symbol sequences or rationals, their metric values
are Fractions.  Euclidean kinds use float tuples and carry a comparison
tolerance.

A product point is a base pattern plus finitely many overrides plus a
pipeline of applied product maps; coordinates are evaluated on demand and
memoized, so evaluation is pure and order-independent.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import sqrt
from typing import Callable, Iterable, Iterator, Optional, Sequence

from .errors import IndexRange, SpaceMismatch, UnsupportedOperation
from .rationals import ZERO, format_scalar, parse_scalar, pow2

FLOAT_TOLERANCE = 1e-9


# ---------------------------------------------------------------------------
# Eventually-constant symbol sequences (points of cantor/baire factors)
# ---------------------------------------------------------------------------

class SymSeq:
    """An infinite symbol sequence equal to `tail` from position len(prefix) on.

    Canonical form strips trailing prefix symbols equal to the tail, so two
    SymSeq are equal as sequences iff their fields are equal.
    """

    __slots__ = ("prefix", "tail")

    def __init__(self, prefix: Sequence[int] = (), tail: int = 0):
        prefix = tuple(prefix)
        k = len(prefix)
        while k > 0 and prefix[k - 1] == tail:
            k -= 1
        self.prefix = prefix[:k]
        self.tail = tail

    def at(self, i: int) -> int:
        if i < len(self.prefix):
            return self.prefix[i]
        return self.tail

    @property
    def stab(self) -> int:
        """Position from which the sequence is constant."""
        return len(self.prefix)

    def take(self, n: int) -> tuple:
        return tuple(self.at(i) for i in range(n))

    def drop(self, n: int) -> "SymSeq":
        return SymSeq(self.prefix[n:], self.tail)

    def __eq__(self, other):
        return (
            isinstance(other, SymSeq)
            and self.prefix == other.prefix
            and self.tail == other.tail
        )

    def __hash__(self):
        return hash((self.prefix, self.tail))

    def __repr__(self):
        body = "".join(str(s) if 0 <= s <= 9 else f"({s})" for s in self.prefix)
        return f"SymSeq[{body}|{self.tail}...]"

    def first_diff(self, other: "SymSeq") -> Optional[int]:
        """First index where the sequences differ, None if equal."""
        n = max(self.stab, other.stab)
        for i in range(n):
            if self.at(i) != other.at(i):
                return i
        if self.tail != other.tail:
            return n
        return None


def seq_zip(a: SymSeq, b: SymSeq, op: Callable[[int, int], int]) -> SymSeq:
    n = max(a.stab, b.stab)
    return SymSeq(tuple(op(a.at(i), b.at(i)) for i in range(n)), op(a.tail, b.tail))


def bin_tuple(n: int) -> tuple:
    """Bijection from naturals to finite bit tuples (0 -> ())."""
    bits = []
    k = n + 1
    while k > 1:
        bits.append(k & 1)
        k >>= 1
    return tuple(reversed(bits))


def _unpair(z: int) -> tuple[int, int]:
    # inverse Cantor pairing
    w = int((sqrt(8 * z + 1) - 1) // 2)
    while (w + 1) * (w + 2) // 2 <= z:
        w += 1
    while w * (w + 1) // 2 > z:
        w -= 1
    t = w * (w + 1) // 2
    y = z - t
    x = w - y
    return x, y


def nat_tuple(n: int) -> tuple:
    """Bijection from naturals to finite tuples of naturals (0 -> ())."""
    out = []
    while n > 0:
        head, n = _unpair(n - 1)
        out.append(head)
    return tuple(out)


# ---------------------------------------------------------------------------
# Basic opens (pi-base elements)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CylinderOpen:
    """All sequences extending `prefix`."""

    prefix: tuple

    def contains(self, p: SymSeq) -> bool:
        return p.take(len(self.prefix)) == self.prefix


@dataclass(frozen=True)
class IntervalOpen:
    """Open rational interval; on the circle, an arc taken mod 1."""

    lo: Fraction
    hi: Fraction
    wrap: bool = False

    def contains(self, x: Fraction) -> bool:
        if not self.wrap:
            return self.lo < x < self.hi
        width = self.hi - self.lo
        rel = (x - self.lo) % 1
        return 0 < rel < width


# ---------------------------------------------------------------------------
# Factor spaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GroupOps:
    identity: object
    op: Callable
    inv: Callable


class FactorSpace:
    """Interface of a factor kind; instances are value objects."""

    kind: str = "?"
    exact: bool = True
    crowded: bool = True
    diameter: Fraction = Fraction(1)
    group: Optional[GroupOps] = None
    tolerance: float = FLOAT_TOLERANCE

    def descriptor(self) -> dict:
        return {"kind": self.kind}

    def __eq__(self, other):
        return isinstance(other, FactorSpace) and self.descriptor() == other.descriptor()

    def __hash__(self):
        return hash(tuple(sorted(self.descriptor().items())))

    def __repr__(self):
        return f"<factor {self.kind}>"

    # -- points ------------------------------------------------------------
    def base_point(self):
        raise NotImplementedError

    def points_equal(self, x, y) -> bool:
        return self.metric(x, y) == 0

    def metric(self, x, y):
        raise NotImplementedError

    def ser_point(self, x):
        raise NotImplementedError

    def de_point(self, obj):
        raise NotImplementedError

    # -- pi-base -----------------------------------------------------------
    def basic_open(self, n: int):
        raise UnsupportedOperation(f"{self.kind} has no enumerated pi-base")

    def pick_in(self, box, salt: int):
        """Deterministic point of `box`; distinct salts give distinct points."""
        raise UnsupportedOperation(f"{self.kind} has no point picker")


class _SeqSpace(FactorSpace):
    """Shared machinery of the sequence kinds."""

    def base_point(self):
        return SymSeq((), 0)

    def metric(self, x: SymSeq, y: SymSeq) -> Fraction:
        j = x.first_diff(y)
        return ZERO if j is None else pow2(-j)

    def points_equal(self, x, y):
        return x == y

    def ser_point(self, x: SymSeq):
        return {"prefix": list(x.prefix), "tail": x.tail}

    def de_point(self, obj):
        return SymSeq(tuple(obj["prefix"]), obj["tail"])

    def pick_in(self, box: CylinderOpen, salt: int) -> SymSeq:
        # trailing non-tail symbol keeps distinct salts canonically distinct
        return SymSeq(box.prefix + self._salt_tuple(salt), 0)

    def _salt_tuple(self, salt: int) -> tuple:
        raise NotImplementedError


class CantorSpace(_SeqSpace):
    kind = "cantor"

    @property
    def group(self):
        return GroupOps(
            identity=SymSeq((), 0),
            op=lambda a, b: seq_zip(a, b, lambda u, v: u ^ v),
            inv=lambda a: a,
        )

    def symbols_at(self, position: int) -> tuple:
        return (0, 1)

    def symbol_op(self, u: int, v: int) -> int:
        return (u + v) & 1

    def symbol_neg(self, v: int) -> int:
        return v & 1

    def basic_open(self, n: int) -> CylinderOpen:
        return CylinderOpen(bin_tuple(n))

    def _salt_tuple(self, salt: int) -> tuple:
        return bin_tuple(salt) + (1,)


class BaireSpace(_SeqSpace):
    kind = "baire"

    @property
    def group(self):
        return GroupOps(
            identity=SymSeq((), 0),
            op=lambda a, b: seq_zip(a, b, lambda u, v: u + v),
            inv=lambda a: seq_zip(SymSeq((), 0), a, lambda _, v: -v),
        )

    def symbol_op(self, u: int, v: int) -> int:
        return u + v

    def symbol_neg(self, v: int) -> int:
        return -v

    def basic_open(self, n: int) -> CylinderOpen:
        return CylinderOpen(nat_tuple(n))

    def _salt_tuple(self, salt: int) -> tuple:
        return (salt + 1,)


def _wrap1(x: Fraction) -> Fraction:
    return x - (x.numerator // x.denominator)


class CircleSpace(FactorSpace):
    kind = "circle"

    @property
    def group(self):
        return GroupOps(
            identity=Fraction(0),
            op=lambda a, b: _wrap1(a + b),
            inv=lambda a: _wrap1(-a),
        )

    def base_point(self):
        return Fraction(0)

    def metric(self, x: Fraction, y: Fraction) -> Fraction:
        f = _wrap1(x - y)
        return min(f, 1 - f)

    def points_equal(self, x, y):
        return _wrap1(x - y) == 0

    def ser_point(self, x):
        return format_scalar(x)

    def de_point(self, obj):
        return _wrap1(parse_scalar(obj))

    def basic_open(self, n: int) -> IntervalOpen:
        # dyadic arcs (k/2^j, (k+2)/2^j) mod 1, enumerated level by level
        j = 1
        while n >= (1 << j):
            n -= 1 << j
            j += 1
        lo = Fraction(n, 1 << j)
        return IntervalOpen(lo, lo + pow2(-j + 1), wrap=True)

    def pick_in(self, box: IntervalOpen, salt: int) -> Fraction:
        width = box.hi - box.lo
        return _wrap1(box.lo + width * _dyadic(salt))


class LineSpace(FactorSpace):
    kind = "line"

    @property
    def group(self):
        return GroupOps(identity=Fraction(0), op=lambda a, b: a + b, inv=lambda a: -a)

    def base_point(self):
        return Fraction(0)

    def metric(self, x: Fraction, y: Fraction) -> Fraction:
        return min(abs(x - y), Fraction(1))

    def points_equal(self, x, y):
        return x == y

    def ser_point(self, x):
        return format_scalar(x)

    def de_point(self, obj):
        return parse_scalar(obj)

    def basic_open(self, n: int) -> IntervalOpen:
        j, r = _unpair(n)
        k = (r + 1) // 2 if r % 2 else -(r // 2)
        lo = Fraction(k - 1, 1 << j)
        return IntervalOpen(lo, lo + pow2(-j + 1))

    def pick_in(self, box: IntervalOpen, salt: int) -> Fraction:
        return box.lo + (box.hi - box.lo) * _dyadic(salt)


def _dyadic(n: int) -> Fraction:
    """Enumerates the dyadic rationals of (0,1): 1/2, 1/4, 3/4, 1/8, ..."""
    level = 1
    while n >= (1 << (level - 1)):
        n -= 1 << (level - 1)
        level += 1
    return Fraction(2 * n + 1, 1 << level)


class _EuclidSpace(FactorSpace):
    exact = False
    diameter = Fraction(2)

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        self.dim = dim

    def descriptor(self):
        return {"kind": self.kind, "dim": self.dim}

    def base_point(self):
        return (0.0,) * self.dim

    def metric(self, x, y) -> float:
        return sqrt(sum((a - b) ** 2 for a, b in zip(x, y)))

    def points_equal(self, x, y):
        return self.metric(x, y) <= self.tolerance

    def ser_point(self, x):
        return [float(c) for c in x]

    def de_point(self, obj):
        return tuple(float(c) for c in obj)


class DiscSpace(_EuclidSpace):
    """Closed unit ball of R^m.  Diameter 2: the flagged metric exception."""

    kind = "disc"


class BallSpace(_EuclidSpace):
    """Open unit ball of R^m (the model of R^m under the radial map)."""

    kind = "ball"


CANTOR = CantorSpace()
BAIRE = BaireSpace()
CIRCLE = CircleSpace()
LINE = LineSpace()

_FACTOR_KINDS = {"cantor": CANTOR, "baire": BAIRE, "circle": CIRCLE, "line": LINE}


def factor_from_descriptor(desc: dict) -> FactorSpace:
    kind = desc["kind"]
    if kind in _FACTOR_KINDS:
        return _FACTOR_KINDS[kind]
    if kind == "disc":
        return DiscSpace(desc["dim"])
    if kind == "ball":
        return BallSpace(desc["dim"])
    raise ValueError(f"unknown factor kind {kind!r}")


# ---------------------------------------------------------------------------
# Product spaces
# ---------------------------------------------------------------------------

class ProductSpace:
    """A finite or countable product with the weighted-sum metric

        d*(x, y) = sum_a 2^-a d_a(x(a), y(a)).

    Countable products carry a working depth: the index range every
    exhaustive check runs over.
    """

    def __init__(self, factors: Sequence[FactorSpace] | Callable[[int], FactorSpace],
                 count: Optional[int] = None, working_depth: Optional[int] = None):
        if callable(factors):
            if count is None and working_depth is None:
                raise ValueError("countable products need a working depth")
            self._factor_fn = factors
        else:
            factors = tuple(factors)
            if count is None:
                count = len(factors)
            if count != len(factors):
                raise ValueError("factor list length disagrees with count")
            self._factor_fn = lambda a: factors[a]
        self.count = count
        self.working_depth = working_depth if working_depth is not None else count
        if self.working_depth is None:
            raise ValueError("countable products need a working depth")

    @classmethod
    def uniform(cls, factor: FactorSpace, count: Optional[int] = None,
                working_depth: Optional[int] = None) -> "ProductSpace":
        return cls(lambda a: factor, count=count, working_depth=working_depth)

    @property
    def is_finite(self) -> bool:
        return self.count is not None

    def __eq__(self, other):
        if not isinstance(other, ProductSpace):
            return NotImplemented
        if self.count != other.count or self.working_depth != other.working_depth:
            return False
        return all(self.factor(a) == other.factor(a) for a in self.indices())

    def __hash__(self):
        return hash((self.count, self.working_depth))

    def factor(self, alpha: int) -> FactorSpace:
        if alpha < 0 or (self.count is not None and alpha >= self.count):
            raise IndexRange(f"index {alpha} outside product of {self.count} factors")
        return self._factor_fn(alpha)

    def indices(self, depth: Optional[int] = None) -> range:
        d = self.working_depth if depth is None else depth
        if self.count is not None:
            d = min(d, self.count)
        return range(d)

    def check_same(self, other: "ProductSpace"):
        if self.count != other.count or self.working_depth != other.working_depth:
            raise SpaceMismatch("products have different index sets")
        for a in self.indices():
            if self.factor(a) != other.factor(a):
                raise SpaceMismatch(f"factor mismatch at index {a}")

    def point(self, overrides: Optional[dict] = None, base: Optional["BasePattern"] = None,
              ) -> "ProductPoint":
        return ProductPoint(self, base or DefaultBase(), dict(overrides or {}))

    # -- metric ------------------------------------------------------------
    def distance(self, x: "ProductPoint", y: "ProductPoint", depth: Optional[int] = None
                 ) -> tuple[Fraction, Fraction]:
        """Certified interval [lower, upper] containing d*(x, y).

        The truncation tail past index M contributes at most
        sum_{a>=M} 2^-a diam_a, which is 2^-(M-1) for diameter-1 factors.
        """
        if x.space is not self and x.space != self:
            raise SpaceMismatch("x lives in a different product")
        if y.space is not self and y.space != self:
            raise SpaceMismatch("y lives in a different product")
        idx = self.indices(depth)
        total = ZERO
        for a in idx:
            d = self.factor(a).metric(x.coord(a), y.coord(a))
            if not isinstance(d, Fraction):
                d = Fraction(d)  # exact value of the float estimate
            total += pow2(-a) * d
        tail = ZERO
        m = len(idx)
        if self.count is not None:
            for a in range(m, self.count):
                tail += pow2(-a) * self.factor(a).diameter
        elif self.count is None:
            # countable tail: geometric bound with the tail factor's diameter
            tail = pow2(-(m - 1)) * self.factor(m).diameter
        return total, total + tail

    def metric_exact(self, x: "ProductPoint", y: "ProductPoint") -> Fraction:
        """Exact d* for finite products of exact factors."""
        if self.count is None:
            raise UnsupportedOperation("exact product metric needs a finite product")
        lo, hi = self.distance(x, y, depth=self.count)
        return lo

    def descriptor(self) -> dict:
        return {
            "count": self.count,
            "working_depth": self.working_depth,
            "factors": [self.factor(a).descriptor() for a in self.indices()],
        }


# ---------------------------------------------------------------------------
# Base patterns
# ---------------------------------------------------------------------------

class BasePattern:
    def value(self, space: ProductSpace, alpha: int):
        raise NotImplementedError

    def descriptor(self) -> dict:
        raise NotImplementedError


class DefaultBase(BasePattern):
    """Every coordinate sits at the factor's base point."""

    def value(self, space, alpha):
        return space.factor(alpha).base_point()

    def descriptor(self):
        return {"kind": "default"}

    def __eq__(self, other):
        return isinstance(other, DefaultBase)

    def __hash__(self):
        return hash("default-base")


class ConstantBase(BasePattern):
    """Every coordinate carries the same factor point (uniform products)."""

    def __init__(self, factor: FactorSpace, point):
        self.factor = factor
        self.point = point

    def value(self, space, alpha):
        return self.point

    def descriptor(self):
        return {"kind": "constant", "value": self.factor.ser_point(self.point)}

    def __eq__(self, other):
        return (
            isinstance(other, ConstantBase)
            and self.factor == other.factor
            and self.factor.points_equal(self.point, other.point)
        )

    def __hash__(self):
        return hash(("constant-base", self.factor.kind))


def base_from_descriptor(desc: dict, factor: Optional[FactorSpace] = None) -> BasePattern:
    if desc["kind"] == "default":
        return DefaultBase()
    if desc["kind"] == "constant":
        if factor is None:
            raise ValueError("constant base needs the factor kind")
        return ConstantBase(factor, factor.de_point(desc["value"]))
    raise ValueError(f"unknown base pattern {desc['kind']!r}")


# ---------------------------------------------------------------------------
# Product stages and points
# ---------------------------------------------------------------------------

class ProductStage:
    """An invertible map of the product, evaluated coordinate-wise on demand.

    `get` is a callable alpha -> factor point giving the input point's
    coordinates; a stage may consult several of them (not just alpha).
    """

    def image_coord(self, get: Callable[[int], object], alpha: int):
        raise NotImplementedError

    def preimage_coord(self, get: Callable[[int], object], alpha: int):
        raise NotImplementedError

    def inverse(self) -> "ProductStage":
        return _InverseStage(self)

    def apply(self, point: "ProductPoint") -> "ProductPoint":
        return point.apply_stage(self)

    def descriptor(self) -> dict:
        return {"stage": type(self).__name__}


class _InverseStage(ProductStage):
    def __init__(self, stage: ProductStage):
        self.stage = stage

    def image_coord(self, get, alpha):
        return self.stage.preimage_coord(get, alpha)

    def preimage_coord(self, get, alpha):
        return self.stage.image_coord(get, alpha)

    def inverse(self):
        return self.stage

    def descriptor(self):
        return {"stage": "inverse", "of": self.stage.descriptor()}


class CoordwiseStage(ProductStage):
    """Applies one factor homeomorphism per listed index, identity elsewhere."""

    def __init__(self, maps: dict):
        self.maps = dict(maps)

    def image_coord(self, get, alpha):
        h = self.maps.get(alpha)
        x = get(alpha)
        return h.apply(x) if h is not None else x

    def preimage_coord(self, get, alpha):
        h = self.maps.get(alpha)
        x = get(alpha)
        return h.invert().apply(x) if h is not None else x

    def descriptor(self):
        return {
            "stage": "coordwise",
            "indices": sorted(self.maps),
        }


class ProductPoint:
    """Base pattern + finite overrides + a pipeline of applied stages.

    Immutable; coordinate evaluation is memoized and pure, so concurrent
    reads are safe and evaluation order never matters.
    """

    __slots__ = ("space", "base", "overrides", "pipeline", "_cache")

    def __init__(self, space: ProductSpace, base: BasePattern, overrides: dict,
                 pipeline: tuple = ()):
        self.space = space
        self.base = base
        self.overrides = dict(overrides)
        self.pipeline = tuple(pipeline)
        self._cache: dict = {}

    def raw_coord(self, alpha: int):
        if alpha in self.overrides:
            return self.overrides[alpha]
        return self.base.value(self.space, alpha)

    def coord(self, alpha: int):
        """Coordinate of the pipeline image; exact for exact kinds."""
        return self._coord_at(len(self.pipeline), alpha)

    def _coord_at(self, level: int, alpha: int):
        if alpha < 0 or (self.space.count is not None and alpha >= self.space.count):
            raise IndexRange(f"index {alpha} outside the product")
        if level == 0:
            return self.raw_coord(alpha)
        key = (level, alpha)
        if key not in self._cache:
            stage = self.pipeline[level - 1]
            self._cache[key] = stage.image_coord(
                lambda b: self._coord_at(level - 1, b), alpha
            )
        return self._cache[key]

    def apply_stage(self, stage: ProductStage) -> "ProductPoint":
        p = ProductPoint(self.space, self.base, self.overrides, self.pipeline + (stage,))
        return p

    def undo_stage(self) -> "ProductPoint":
        if not self.pipeline:
            raise UnsupportedOperation("point has an empty pipeline")
        return ProductPoint(self.space, self.base, self.overrides, self.pipeline[:-1])

    def support(self) -> tuple:
        return tuple(sorted(self.overrides))

    def materialize(self, depth: Optional[int] = None) -> "ProductPoint":
        """Pipeline-free point agreeing with this one on the evaluated range.

        Coordinates outside the range keep the base pattern, so this is only
        a faithful copy when the pipeline acts inside the range.
        """
        over = {a: self.coord(a) for a in self.space.indices(depth)}
        return ProductPoint(self.space, self.base, over)

    def ser(self, depth: Optional[int] = None) -> dict:
        """Serializes base + overrides (pipelines are recorded by their stages)."""
        if self.pipeline:
            return self.materialize(depth).ser(depth)
        return {
            "base": self.base.descriptor(),
            "overrides": {
                str(a): self.space.factor(a).ser_point(v)
                for a, v in sorted(self.overrides.items())
            },
        }

    @staticmethod
    def de(space: ProductSpace, obj: dict) -> "ProductPoint":
        sample_factor = space.factor(0)
        base = base_from_descriptor(obj["base"], sample_factor)
        overrides = {
            int(a): space.factor(int(a)).de_point(v) for a, v in obj["overrides"].items()
        }
        return ProductPoint(space, base, overrides)

    def __repr__(self):
        return (
            f"ProductPoint(support={self.support()}, stages={len(self.pipeline)})"
        )


def points_equal_to_depth(x: ProductPoint, y: ProductPoint, depth: int) -> bool:
    space = x.space
    for a in space.indices(depth):
        if not space.factor(a).points_equal(x.coord(a), y.coord(a)):
            return False
    return True
