"""General-position machinery for product spaces.

Operations:

  check_general_position   exact pairwise disagreement report to a depth
  greedy_dense_gp          dense sequence hitting the enumerated basic boxes
                           with all pairs coordinate-distinct everywhere
  wgpp_transform           coordinate-wise convenient-pair twist making
                           previously-agreeing coordinates disagree
  block_regroup            partition of the index range with per-pair
                           injectivity witnesses inside every block
  collision_repair_gpp     certified sequence of two-coordinate conditional
                           moves separating all colliding pairs
  boundary_chase           collar shrink (a self-embedding) plus a
                           first-coordinate injectivity perturbation

The repair moves are product stages: they move one coordinate, gated by a
second coordinate, with exact displacement and certified Lipschitz bounds,
which is what lets them ride a convergence certificate on the product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

from .convergence import ConvergenceCertificate
from .errors import (
    BudgetExceeded,
    PreconditionError,
    SearchExhausted,
    SpaceMismatch,
    UnsupportedOperation,
)
from .pairs import ConvenientPair
from .rationals import ZERO, format_scalar, parse_scalar, pow2
from .spaces import (
    BasePattern,
    CantorSpace,
    BaireSpace,
    CircleSpace,
    CylinderOpen,
    DiscSpace,
    FactorSpace,
    IntervalOpen,
    LineSpace,
    ProductPoint,
    ProductSpace,
    ProductStage,
    SymSeq,
    _dyadic,
    _wrap1,
    bin_tuple,
    nat_tuple,
)

F = Fraction


# ---------------------------------------------------------------------------
# collision reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CollisionReport:
    depth: int
    disagreements: dict      # (i, j) -> tuple of indices where the pair differs
    collisions: tuple        # (i, j, alpha) triples where the pair agrees
    pair_classes: dict       # (i, j) -> "disagrees-everywhere-to-depth" | "agrees-somewhere"

    @property
    def in_general_position(self) -> bool:
        return not self.collisions


def check_general_position(points: Sequence[ProductPoint], depth: Optional[int] = None
                            ) -> CollisionReport:
    """Marks the set in general position to the depth iff every pair differs
    at every evaluated index; exact for exact kinds."""
    if not points:
        return CollisionReport(0, {}, (), {})
    space = points[0].space
    idx = list(space.indices(depth))
    dis, cols, classes = {}, [], {}
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            where = []
            for a in idx:
                if not space.factor(a).points_equal(points[i].coord(a), points[j].coord(a)):
                    where.append(a)
                else:
                    cols.append((i, j, a))
            dis[(i, j)] = tuple(where)
            classes[(i, j)] = (
                "disagrees-everywhere-to-depth" if len(where) == len(idx) else "agrees-somewhere"
            )
    return CollisionReport(len(idx), dis, tuple(cols), classes)


def check_regrouped_general_position(points: Sequence[ProductPoint],
                                     plan: "PartitionPlan") -> CollisionReport:
    """General position of the block view: coordinates are the plan's blocks,
    two points differ at a block iff they differ somewhere inside it."""
    space = points[0].space
    dis, cols, classes = {}, [], {}
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            where = []
            for b, block in enumerate(plan.blocks):
                if any(
                    not space.factor(a).points_equal(points[i].coord(a), points[j].coord(a))
                    for a in block
                ):
                    where.append(b)
                else:
                    cols.append((i, j, b))
            dis[(i, j)] = tuple(where)
            classes[(i, j)] = (
                "disagrees-everywhere-to-depth" if len(where) == len(plan.blocks) else "agrees-somewhere"
            )
    return CollisionReport(len(plan.blocks), dis, tuple(cols), classes)


# ---------------------------------------------------------------------------
# marker base patterns (per-point bases for the greedy construction)
# ---------------------------------------------------------------------------

class MarkerBase(BasePattern):
    """Constant-per-coordinate base whose value is the k-th marker point of
    each factor; distinct markers differ as factor points, which is what
    keeps greedy points coordinate-distinct outside their finite supports."""

    def __init__(self, index: int):
        self.index = index

    def value(self, space, alpha):
        return marker_point(space.factor(alpha), self.index)

    def descriptor(self):
        return {"kind": "marker", "index": self.index}

    def __eq__(self, other):
        return isinstance(other, MarkerBase) and self.index == other.index

    def __hash__(self):
        return hash(("marker", self.index))


def marker_point(factor: FactorSpace, k: int):
    if isinstance(factor, CantorSpace):
        return SymSeq(bin_tuple(k) + (1,), 0)
    if isinstance(factor, BaireSpace):
        return SymSeq((k + 1,), 0)
    if isinstance(factor, CircleSpace):
        return _dyadic(k)
    if isinstance(factor, LineSpace):
        return _dyadic(k)
    raise UnsupportedOperation(f"no marker points for kind {factor.kind}")


def _any_box(factor: FactorSpace):
    if isinstance(factor, (CantorSpace, BaireSpace)):
        return CylinderOpen(())
    if isinstance(factor, CircleSpace):
        return IntervalOpen(F(0), F(1), wrap=True)
    if isinstance(factor, LineSpace):
        return IntervalOpen(F(-1), F(1))
    raise UnsupportedOperation(f"no picker for kind {factor.kind}")


# ---------------------------------------------------------------------------
# enumerated product boxes and the greedy construction
# ---------------------------------------------------------------------------

def product_boxes(space: ProductSpace, count: int) -> list:
    """First `count` members of the product pi-base: finite tuples of
    per-factor basic-open indices, supports clipped to the index set."""
    boxes = []
    n = 0
    cap = space.count if space.count is not None else None
    while len(boxes) < count:
        t = nat_tuple(n)
        n += 1
        if cap is not None and len(t) > cap:
            continue
        boxes.append({a: space.factor(a).basic_open(b) for a, b in enumerate(t)})
    return boxes


def box_contains(space: ProductSpace, box: dict, point: ProductPoint) -> bool:
    return all(b.contains(point.coord(a)) for a, b in box.items())


@dataclass
class GreedyResult:
    points: list
    boxes: list


def greedy_dense_gp(space: ProductSpace, count: int,
                    forbidden: Optional[Sequence[Callable]] = None,
                    probe_limit: int = 64) -> GreedyResult:
    """Point n lands in enumerated box n; every pair of outputs differs at
    every coordinate (exactly, for exact kinds); all outputs avoid the
    forbidden closed predicates.

    Point n uses the n-th marker base, so coordinates outside the finitely
    many adjusted indices are pairwise distinct by construction; adjusted
    indices get explicitly checked override values.
    """
    for a in space.indices():
        if not space.factor(a).crowded:
            raise PreconditionError(f"factor {a} is not crowded")
    forbidden = list(forbidden or [])
    boxes = product_boxes(space, count)
    points: list[ProductPoint] = []
    for k in range(count):
        box = boxes[k]
        relevant = set(box) | {a for p in points for a in p.support()}
        point = None
        for attempt in range(probe_limit):
            overrides = {}
            ok = True
            for a in sorted(relevant):
                factor = space.factor(a)
                avoid = {_val_key(factor, p.coord(a)) for p in points}
                target_box = box.get(a)
                if target_box is None:
                    base_val = marker_point(factor, k)
                    if attempt == 0 and _val_key(factor, base_val) not in avoid:
                        continue  # marker base already distinct, no override
                    target_box = _any_box(factor)
                val = _pick_avoiding(factor, target_box, avoid, attempt)
                if val is None:
                    ok = False
                    break
                overrides[a] = val
            if not ok:
                continue
            cand = ProductPoint(space, MarkerBase(k), overrides)
            bad = next((f for f in forbidden if f(cand)), None)
            if bad is None:
                point = cand
                break
        if point is None:
            raise SearchExhausted(
                f"no admissible point for box {k} after {probe_limit} probes; "
                "a forbidden predicate's complement fails the density probe"
            )
        if not box_contains(space, box, point):
            raise AssertionError(f"greedy point {k} missed its box")
        points.append(point)
    return GreedyResult(points, boxes)


def _val_key(factor, v):
    if isinstance(v, SymSeq):
        return (v.prefix, v.tail)
    if isinstance(factor, CircleSpace):
        return _wrap1(v)
    return v


def _pick_avoiding(factor, box, avoid, attempt, tries: int = 64):
    for salt in range(attempt * tries, (attempt + 1) * tries):
        v = factor.pick_in(box, salt)
        if _val_key(factor, v) not in avoid:
            return v
    return None


# ---------------------------------------------------------------------------
# weak general position transform
# ---------------------------------------------------------------------------

class WgppStage(ProductStage):
    """Coordinate-wise twist: s_a(x(a), x(0)) on the listed indices, identity
    elsewhere.  Index 0 is never listed, so the inverse can read the same
    second argument."""

    def __init__(self, omega: frozenset, pairs: dict):
        if 0 in omega:
            raise PreconditionError("index 0 cannot be twisted")
        self.omega = frozenset(omega)
        self.pairs = dict(pairs)

    def image_coord(self, get, alpha):
        if alpha in self.omega:
            return self.pairs[alpha].s(get(alpha), get(0))
        return get(alpha)

    def preimage_coord(self, get, alpha):
        if alpha in self.omega:
            return self.pairs[alpha].t(get(alpha), get(0))
        return get(alpha)

    def descriptor(self):
        return {"stage": "wgpp-twist", "omega": sorted(self.omega)}


@dataclass
class WgppResult:
    stage: WgppStage
    points: list
    omega: frozenset
    report_before: CollisionReport
    big_pairs: tuple  # pairs whose disagreement sets were already cofinal


_TAIL_WINDOW = 8


def wgpp_transform(points: Sequence[ProductPoint],
                   pair_family: Callable[[int], ConvenientPair],
                   depth: Optional[int] = None) -> WgppResult:
    """Lemma-style twist: after the transform every pair disagrees at every
    listed coordinate where it previously agreed; disagreements at unlisted
    coordinates survive untouched; the inverse twist undoes it exactly."""
    if not points:
        raise PreconditionError("empty point list")
    space = points[0].space
    idx = list(space.indices(depth))
    full_depth = len(idx)

    # pi_0 restricted to the set must be injective
    f0 = space.factor(0)
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            if f0.points_equal(points[i].coord(0), points[j].coord(0)):
                raise PreconditionError(
                    f"projection to coordinate 0 is not injective (points {i}, {j})"
                )

    report = check_general_position(points, depth)
    big = tuple(
        p for p, dis in report.disagreements.items()
        if dis and max(dis) >= full_depth - _TAIL_WINDOW
    )

    if not big:
        omega = frozenset(a for a in idx if a != 0)
    else:
        # split each cofinal disagreement set into two interleaved cofinal
        # halves, claimed pairwise disjointly in pair order; the twist keeps
        # one half, the untouched half keeps the pair's own disagreements
        claimed: set = set()
        into_omega: set = set()
        for p in big:
            avail = [a for a in report.disagreements[p] if a not in claimed and a != 0]
            claimed.update(avail)
            # alternate from the deep end so both halves stay cofinal
            into_omega.update(avail[-1::-2])
        omega = frozenset(a for a in idx if a != 0 and (a not in claimed or a in into_omega))

    pairs = {}
    a_col = {a: [p.coord(a) for p in points] for a in idx}
    y_col = [p.coord(0) for p in points]
    for a in sorted(omega):
        pair = pair_family(a)
        _check_focus(space.factor(a), pair, a_col[a], y_col, a)
        pairs[a] = pair

    stage = WgppStage(omega, pairs)
    moved = [p.apply_stage(stage) for p in points]

    # the lemma's two guarantees, asserted exactly on the finite set
    for (i, j), dis in report.disagreements.items():
        dis_set = set(dis)
        for a in idx:
            fa = space.factor(a)
            if a in omega and a not in dis_set:
                if fa.points_equal(moved[i].coord(a), moved[j].coord(a)):
                    raise AssertionError(f"twist failed to separate pair {(i, j)} at {a}")
            if a not in omega and a in dis_set:
                if fa.points_equal(moved[i].coord(a), moved[j].coord(a)):
                    raise AssertionError(f"twist disturbed coordinate {a} of pair {(i, j)}")
    return WgppResult(stage, moved, omega, report, big)


def _check_focus(factor, pair: ConvenientPair, xs, ys, alpha: int):
    for x in xs:
        for i in range(len(ys)):
            for j in range(i + 1, len(ys)):
                if factor.points_equal(ys[i], ys[j]):
                    continue
                if factor.points_equal(pair.s(x, ys[i]), pair.s(x, ys[j])):
                    raise PreconditionError(
                        f"convenient pair at index {alpha} is not focused on the projections"
                    )


# ---------------------------------------------------------------------------
# block regrouping
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PartitionPlan:
    blocks: tuple                 # tuple of sorted index tuples
    witnesses: dict               # (pair, block_index) -> witnessing index
    omega_star_traces: tuple      # per-block tuple of omega* indices
    depth: int

    def block_of(self, index: int) -> int:
        for b, block in enumerate(self.blocks):
            if index in block:
                return b
        raise KeyError(index)


def block_regroup(points: Sequence[ProductPoint], space: ProductSpace,
                  omega_star: Optional[Iterable[int]] = None,
                  block_count: Optional[int] = None) -> PartitionPlan:
    """Disjoint cover of the index range by blocks such that every pair of
    points disagrees inside every block, block ownership respects
    block(i) <= i, and every block meets omega* emptily or cofinally."""
    depth = space.working_depth
    idx = list(space.indices())
    report = check_general_position(points, depth)
    sizes = [len(d) for d in report.disagreements.values()] or [len(idx)]
    feasible = min(sizes)
    B = block_count if block_count is not None else max(1, min(4, feasible))
    for p, dis in report.disagreements.items():
        if len(dis) < B:
            raise PreconditionError(
                f"pair {p} has only {len(dis)} disagreements, fewer than {B} blocks"
            )

    owner: dict = {}
    # witnesses: walk blocks from the top, each pair claims its deepest free
    # disagreement compatible with the ownership constraint b <= i
    for b in reversed(range(B)):
        for p, dis in report.disagreements.items():
            if any(owner.get(a) == b for a in dis):
                continue
            cand = next((a for a in reversed(dis) if a not in owner and a >= b), None)
            if cand is None:
                raise PreconditionError(
                    f"cannot give block {b} a disagreement witness for pair {p}"
                )
            owner[cand] = b

    omega_star = sorted(set(omega_star or [])) if omega_star else []
    star_in_range = [a for a in omega_star if a in set(idx)]
    rank = 0
    for a in idx:
        if a in owner:
            continue
        if a in star_in_range:
            b = rank % B
            owner[a] = b if b <= a else a % B
            rank += 1
        else:
            owner[a] = a % B

    blocks = tuple(tuple(sorted(a for a in idx if owner[a] == b)) for b in range(B))
    witnesses = {}
    for p, dis in report.disagreements.items():
        dset = set(dis)
        for b, block in enumerate(blocks):
            w = next((a for a in block if a in dset), None)
            if w is None:
                raise PreconditionError(f"block {b} lost its witness for pair {p}")
            witnesses[(p, b)] = w
    traces = tuple(tuple(a for a in block if a in set(star_in_range)) for block in blocks)
    _audit_plan(blocks, traces, star_in_range, depth, B)
    return PartitionPlan(blocks, witnesses, traces, depth)


def _audit_plan(blocks, traces, star, depth, B):
    covered = sorted(a for block in blocks for a in block)
    if covered != sorted(set(covered)):
        raise AssertionError("blocks overlap")
    for b, block in enumerate(blocks):
        for a in block:
            if b > a:
                raise AssertionError(f"block {b} owns index {a} < {b}")
    if star:
        gaps = [y - x for x, y in zip(star, star[1:])] or [1]
        slack = 2 * B * max(gaps)
        top = max(star)
        for trace in traces:
            if trace and top - max(trace) > slack:
                raise AssertionError("a block meets omega* but not cofinally")


# ---------------------------------------------------------------------------
# conditional two-coordinate moves (exact kinds)
# ---------------------------------------------------------------------------

def _swrap(x: F) -> F:
    return _wrap1(x + F(1, 2)) - F(1, 2)


class ConditionalMoveStage(ProductStage):
    """Moves coordinate alpha by a bump scaled with a tent gate read off
    coordinate beta; exact on rational circle/line data.

    u-map at gate weight w: rel -> rel + (1 - |rel|/r_u) * w * shift inside
    the radius-r_u bump around the center, identity outside.
    """

    is_product_stage = True

    def __init__(self, space: ProductSpace, alpha: int, beta: int,
                 u_center: F, u_radius: F, shift: F,
                 gate_center: F, gate_radius: F):
        if abs(shift) >= u_radius:
            raise PreconditionError("shift must stay inside the bump radius")
        self.space = space
        self.alpha, self.beta = alpha, beta
        self.u_center, self.u_radius = F(u_center), F(u_radius)
        self.shift = F(shift)
        self.gate_center, self.gate_radius = F(gate_center), F(gate_radius)
        self._circle_u = isinstance(space.factor(alpha), CircleSpace)
        self._circle_v = isinstance(space.factor(beta), CircleSpace)

    # -- scalar machinery ----------------------------------------------------
    def _rel(self, u):
        d = u - self.u_center
        return _swrap(d) if self._circle_u else d

    def _out(self, u):
        return _wrap1(self.u_center + u) if self._circle_u else self.u_center + u

    def gate(self, v) -> F:
        d = v - self.gate_center
        dist = abs(_swrap(d)) if self._circle_v else abs(d)
        if dist >= self.gate_radius:
            return ZERO
        return 1 - dist / self.gate_radius

    def _move(self, u, w: F):
        rel = self._rel(u)
        if abs(rel) >= self.u_radius or w == 0:
            return u
        return self._out(rel + (1 - abs(rel) / self.u_radius) * w * self.shift)

    def _unmove(self, u, w: F):
        rel = self._rel(u)
        if abs(rel) >= self.u_radius or w == 0:
            return u
        ws = w * self.shift
        if rel <= ws:
            back = self.u_radius * (rel - ws) / (self.u_radius + ws)
        else:
            back = self.u_radius * (rel - ws) / (self.u_radius - ws)
        return self._out(back)

    # -- stage interface -------------------------------------------------------
    def image_coord(self, get, a):
        if a != self.alpha:
            return get(a)
        return self._move(get(self.alpha), self.gate(get(self.beta)))

    def preimage_coord(self, get, a):
        if a != self.alpha:
            return get(a)
        return self._unmove(get(self.alpha), self.gate(get(self.beta)))

    # -- certified bounds --------------------------------------------------------
    def dstar_displacement(self) -> F:
        return pow2(-self.alpha) * abs(self.shift)

    def _slope_margin(self) -> F:
        return abs(self.shift) / self.u_radius

    def lip_forward_bound(self) -> F:
        cross = abs(self.shift) / self.gate_radius * pow2(self.beta - self.alpha)
        return 1 + self._slope_margin() + cross

    def lip_backward_bound(self) -> F:
        m = 1 - self._slope_margin()
        cross = (abs(self.shift) / m) / self.gate_radius * pow2(self.beta - self.alpha)
        return max(F(1), 1 / m) + cross

    def descriptor(self):
        return {
            "stage": "conditional-move",
            "alpha": self.alpha,
            "beta": self.beta,
            "u_center": format_scalar(self.u_center),
            "u_radius": format_scalar(self.u_radius),
            "shift": format_scalar(self.shift),
            "gate_center": format_scalar(self.gate_center),
            "gate_radius": format_scalar(self.gate_radius),
        }


def conditional_move_from_descriptor(space: ProductSpace, desc: dict) -> ConditionalMoveStage:
    return ConditionalMoveStage(
        space, desc["alpha"], desc["beta"],
        parse_scalar(desc["u_center"]), parse_scalar(desc["u_radius"]),
        parse_scalar(desc["shift"]),
        parse_scalar(desc["gate_center"]), parse_scalar(desc["gate_radius"]),
    )


# ---------------------------------------------------------------------------
# collision repair
# ---------------------------------------------------------------------------

@dataclass
class RepairResult:
    certificate: ConvergenceCertificate
    points: list
    moves: int
    displacement_total: F
    collision_history: list


def collision_repair_gpp(points: Sequence[ProductPoint], space: ProductSpace,
                         step_budget: Optional[int] = None) -> RepairResult:
    """Separates every colliding pair with small conditional moves.

    Each move fixes at least one (pair, coordinate) collision permanently and
    creates none (its support excludes every point with a different gate
    coordinate, and the fresh target value differs from every current value),
    so the collision count strictly decreases.  Move displacements are capped
    by 2^-step, keeping the total below 2 and the product certificate valid.
    """
    if space.count is None:
        raise PreconditionError("collision repair needs a finite product")
    for a in space.indices():
        f = space.factor(a)
        if not isinstance(f, (CircleSpace, LineSpace)):
            raise UnsupportedOperation(
                f"repair moves are implemented for circle/line factors, not {f.kind}"
            )
    pts = list(points)
    report = check_general_position(pts)
    budget = step_budget if step_budget is not None else len(report.collisions) + 8
    cert = ConvergenceCertificate(space)
    total = ZERO
    history = [len(report.collisions)]

    while report.collisions:
        if cert.stage_count >= budget:
            raise BudgetExceeded(
                f"step budget {budget} exhausted with {len(report.collisions)} "
                f"collisions left: {report.collisions[:8]}",
                partial=RepairResult(cert, pts, cert.stage_count, total, history),
            )
        i, j, alpha = report.collisions[0]
        beta = next(
            (a for a in space.indices()
             if not space.factor(a).points_equal(pts[i].coord(a), pts[j].coord(a))),
            None,
        )
        if beta is None:
            raise PreconditionError(f"points {i} and {j} are identical; repair impossible")
        stage = _build_move(space, pts, i, alpha, beta, cert)
        cert = cert.append(stage)
        total += stage.dstar_displacement()
        pts = [p.apply_stage(stage) for p in pts]
        new_report = check_general_position(pts)
        if len(new_report.collisions) >= len(report.collisions):
            raise AssertionError("a repair move failed to reduce the collision count")
        report = new_report
        history.append(len(report.collisions))
    return RepairResult(cert, pts, cert.stage_count, total, history)


def _build_move(space, pts, i, alpha, beta, cert) -> ConditionalMoveStage:
    fa, fb = space.factor(alpha), space.factor(beta)
    u_c = pts[i].coord(alpha)
    g_c = pts[i].coord(beta)

    # support small enough to exclude every alpha-different point ...
    r_u = F(1, 4)
    for p in pts:
        d = fa.metric(p.coord(alpha), u_c)
        if d != 0:
            r_u = min(r_u, d / 2)
    # ... and a gate excluding every beta-different point
    r_v = F(1, 4)
    for p in pts:
        d = fb.metric(p.coord(beta), g_c)
        if d != 0:
            r_v = min(r_v, d / 2)

    k = cert.stage_count
    cap = min(pow2(-k), pow2(-(k - 1)) / cert._lip_inv) if k >= 1 else F(1)
    cap = min(cap, pow2(-k))
    shift = min(r_u / 2, cap * pow2(alpha))
    taken = {_val_key(fa, p.coord(alpha)) for p in pts}
    while True:
        target = _wrap1(u_c + shift) if isinstance(fa, CircleSpace) else u_c + shift
        if _val_key(fa, target) not in taken:
            break
        shift /= 2
        if shift == 0:
            raise AssertionError("could not pick a fresh target value")
    return ConditionalMoveStage(space, alpha, beta, u_c, r_u, shift, g_c, r_v)


# ---------------------------------------------------------------------------
# boundary chase (disc products)
# ---------------------------------------------------------------------------

class CollarShrinkStage(ProductStage):
    """x -> (1 - eps) x on every listed disc coordinate: a self-embedding of
    the product (exactly invertible on its image), pulling the set off the
    pseudoboundary."""

    def __init__(self, eps: F, indices: tuple):
        self.eps = F(eps)
        self.indices = frozenset(indices)
        self._scale = 1.0 - float(eps)

    def image_coord(self, get, a):
        x = get(a)
        if a in self.indices:
            return tuple(c * self._scale for c in x)
        return x

    def preimage_coord(self, get, a):
        x = get(a)
        if a in self.indices:
            return tuple(c / self._scale for c in x)
        return x

    def descriptor(self):
        return {"stage": "collar-shrink", "eps": format_scalar(self.eps),
                "indices": sorted(self.indices)}


class FloatConditionalStage(ProductStage):
    """Euclidean analogue of the conditional move: shift coordinate alpha by
    a tent bump gated on coordinate beta.  Float path, tolerance semantics."""

    def __init__(self, space, alpha: int, beta: int, u_center, u_radius: float,
                 shift, gate_center, gate_radius: float):
        self.space = space
        self.alpha, self.beta = alpha, beta
        self.u_center, self.u_radius = tuple(u_center), float(u_radius)
        self.shift = tuple(shift)
        self.gate_center, self.gate_radius = tuple(gate_center), float(gate_radius)

    def _gate(self, v) -> float:
        d = self.space.factor(self.beta).metric(v, self.gate_center)
        return max(0.0, 1.0 - d / self.gate_radius)

    def _bump(self, u) -> float:
        d = self.space.factor(self.alpha).metric(u, self.u_center)
        return max(0.0, 1.0 - d / self.u_radius)

    def image_coord(self, get, a):
        if a != self.alpha:
            return get(a)
        u = get(self.alpha)
        w = self._gate(get(self.beta)) * self._bump(u)
        return tuple(c + w * s for c, s in zip(u, self.shift))

    def preimage_coord(self, get, a):
        if a != self.alpha:
            return get(a)
        target = get(self.alpha)
        gate = self._gate(get(self.beta))
        u = target
        for _ in range(200):
            w = gate * self._bump(u)
            nxt = tuple(c - w * s for c, s in zip(target, self.shift))
            if self.space.factor(self.alpha).metric(nxt, u) < 1e-15:
                return nxt
            u = nxt
        return u

    def descriptor(self):
        return {"stage": "float-conditional-move", "alpha": self.alpha, "beta": self.beta}


@dataclass
class BoundaryChaseResult:
    stages: list
    points: list


def boundary_chase(points: Sequence[ProductPoint], space: ProductSpace,
                   eps: F = F(1, 16), budget: int = 64) -> BoundaryChaseResult:
    """Pulls a finite set off the pseudoboundary of a disc product and makes
    the first projection injective.

    The collar shrink is a self-embedding, not a surjection: no
    self-homeomorphism of a finite disc product can move boundary points
    inward, so the exactly-invertible-on-image map is what the operation
    returns.  A no-op path applies when the set is already interior with
    injective first projection.
    """
    if space.count is None:
        raise PreconditionError("boundary chase needs a finite product")
    for a in space.indices():
        if not isinstance(space.factor(a), DiscSpace):
            raise UnsupportedOperation("boundary chase expects disc factors")
    pts = list(points)
    stages: list[ProductStage] = []

    def interior(p):
        return all(
            _norm(p.coord(a)) < 1.0 - float(space.factor(a).tolerance)
            for a in space.indices()
        )

    def pi0_injective(ps):
        f0 = space.factor(0)
        for x in range(len(ps)):
            for y in range(x + 1, len(ps)):
                if f0.points_equal(ps[x].coord(0), ps[y].coord(0)):
                    return (x, y)
        return None

    if not all(interior(p) for p in pts):
        shrink = CollarShrinkStage(eps, tuple(space.indices()))
        stages.append(shrink)
        pts = [p.apply_stage(shrink) for p in pts]

    step = 0
    while True:
        clash = pi0_injective(pts)
        if clash is None:
            break
        if step >= budget:
            raise BudgetExceeded(f"projection repair budget {budget} exhausted")
        x, y = clash
        beta = next(
            (a for a in space.indices()
             if not space.factor(a).points_equal(pts[x].coord(a), pts[y].coord(a))),
            None,
        )
        if beta is None:
            raise PreconditionError(f"points {x} and {y} are identical")
        f0 = space.factor(0)
        u_c = pts[x].coord(0)
        gaps = [f0.metric(p.coord(0), u_c) for p in pts if f0.metric(p.coord(0), u_c) > 0]
        r_u = min(gaps + [0.25]) / 2
        fb = space.factor(beta)
        g_c = pts[x].coord(beta)
        vgaps = [fb.metric(p.coord(beta), g_c) for p in pts if fb.metric(p.coord(beta), g_c) > 0]
        r_v = min(vgaps + [0.25]) / 2
        margin = 1.0 - _norm(u_c)
        shift_len = min(r_u / 2, margin / 4, 2.0 ** (-step - 3))
        shift = (shift_len,) + (0.0,) * (len(u_c) - 1)
        stage = FloatConditionalStage(space, 0, beta, u_c, r_u, shift, g_c, r_v)
        stages.append(stage)
        pts = [p.apply_stage(stage) for p in pts]
        step += 1
    return BoundaryChaseResult(stages, pts)


def _norm(x) -> float:
    return math.sqrt(sum(c * c for c in x))
