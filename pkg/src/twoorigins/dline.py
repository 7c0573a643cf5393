"""The line with two origins: points, atlases, and structure maps.

The space is the real line with the origin doubled. A minimal atlas is a
pair of charts, one per origin; a special minimal atlas keeps the first
chart literally the identity so the whole structure is carried by the
single transition germ h. Diffeomorphisms between such structures are
stored as a germ on the punctured line plus an origin-action flag, with
both chart presentations certified smooth at construction time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import DomainError, IncompatiblePresentations, InvalidAtlas
from .germs import (
    Germ,
    GermLike,
    NumericGerm,
    PRESERVING,
    REVERSING,
    Tri,
    compose,
    evaluate,
    flip_germ,
    germ_equal,
    germ_from_json,
    germ_match,
    germ_to_json,
    identity_germ,
    invert,
    make_wa,
    smoothness_at_zero,
)
from .realnum import real_sqrt, to_real

FIX = "fix"
EXCHANGE = "exchange"


# ---------------------------------------------------------------------------
# points

@dataclass(frozen=True)
class PointL:
    """A point of the doubled line: a real number, or the second origin.

    tilde marks the added origin; it forces x = 0. Ordinary reals, including
    the first origin, carry tilde = False.
    """

    x: object
    tilde: bool = False

    def __post_init__(self):
        object.__setattr__(self, "x", to_real(self.x))
        if self.tilde and self.x != 0:
            raise DomainError("only the origin is doubled")

    def is_origin(self) -> bool:
        return self.x == 0

    def __repr__(self):
        if self.tilde:
            return "PointL(0~)"
        return f"PointL({self.x})"


ORIGIN = PointL(0)
ORIGIN_TILDE = PointL(0, tilde=True)


def hausdorff_closure(p: PointL) -> frozenset:
    """Intersection of closures of all neighborhoods of p.

    Every neighborhood of one origin meets every neighborhood of the other,
    so either origin closes up to the pair; all other points are Hausdorff.
    """
    if p.is_origin():
        return frozenset((ORIGIN, ORIGIN_TILDE))
    return frozenset((p,))


# ---------------------------------------------------------------------------
# charts and atlases

@dataclass(frozen=True)
class ChartL:
    """One chart of a minimal atlas.

    domain "U" covers the line through the first origin, "V" through the
    second. The map is a germ sending the domain's origin to 0 and strictly
    monotone off 0; the stored orientation must agree with the map's.
    """

    domain: str
    map: GermLike
    orientation: str = ""

    def __post_init__(self):
        if self.domain not in ("U", "V"):
            raise DomainError(f"chart domain must be U or V, got {self.domain!r}")
        if not isinstance(self.map, (Germ, NumericGerm)):
            raise DomainError("chart map must be a germ")
        if self.orientation == "":
            object.__setattr__(self, "orientation", self.map.orientation)
        elif self.orientation != self.map.orientation:
            raise DomainError(
                f"chart orientation flag {self.orientation!r} contradicts the map"
            )


@dataclass(frozen=True)
class MinimalAtlas:
    """Two charts, one per origin; the structure they generate."""

    u_chart: ChartL
    v_chart: ChartL

    def __post_init__(self):
        if self.u_chart.domain != "U" or self.v_chart.domain != "V":
            raise DomainError("atlas needs a U chart and a V chart, in that order")


@dataclass(frozen=True)
class SpecialMinimalAtlas:
    """Minimal atlas whose U chart is the identity; h is the whole structure.

    Denotes the atlas {(U, id), (V, h)}, so the transition extension is h
    itself. Different h with smoothly related germs give the same structure
    (see same_structure).
    """

    h: GermLike

    def __post_init__(self):
        if not isinstance(self.h, (Germ, NumericGerm)):
            raise DomainError("special atlas needs a germ")

    @property
    def u_chart(self) -> ChartL:
        return ChartL("U", identity_germ())

    @property
    def v_chart(self) -> ChartL:
        return ChartL("V", self.h)

    def as_minimal(self) -> MinimalAtlas:
        return MinimalAtlas(self.u_chart, self.v_chart)

    def to_json(self, k: int = 1) -> dict:
        return {"special_atlas": {"h": germ_to_json(self.h)}, "k": k}

    @classmethod
    def from_json(cls, d: dict) -> tuple["SpecialMinimalAtlas", int]:
        try:
            h = germ_from_json(d["special_atlas"]["h"])
            k = int(d.get("k", 1))
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"malformed structure JSON: {exc}") from exc
        return cls(h), k


def transition_extension(atlas) -> GermLike:
    """The 0-extension of v o u^-1, the atlas's one transition map.

    For a special minimal atlas this is h on the nose (the same object).
    """
    if isinstance(atlas, SpecialMinimalAtlas):
        return atlas.h
    if not isinstance(atlas, MinimalAtlas):
        raise DomainError("expected a minimal atlas")
    try:
        return compose(atlas.v_chart.map, invert(atlas.u_chart.map))
    except DomainError as exc:
        raise InvalidAtlas(f"transition map is not a germ: {exc}") from exc


def is_orientable(atlas) -> bool:
    """True when the transition extension preserves orientation."""
    return transition_extension(atlas).orientation == PRESERVING


# ---------------------------------------------------------------------------
# structure equivalence

def _tri_in_diff(q: GermLike, k) -> Tri:
    """Three-valued membership of q in the order-k diffeomorphism germs."""
    rep = smoothness_at_zero(q, k)
    if not rep.is_diffeo_ck:
        return Tri.FALSE if rep.conclusive else Tri.INDETERMINATE
    rep_inv = smoothness_at_zero(invert(q), k)
    if not rep_inv.is_diffeo_ck:
        return Tri.FALSE if rep_inv.conclusive else Tri.INDETERMINATE
    if rep.conclusive and rep_inv.conclusive:
        return Tri.TRUE
    return Tri.INDETERMINATE


def same_structure(h: GermLike, g: GermLike, k) -> Tri:
    """Whether the structures of P_h and P_g agree at order k.

    Reduces to membership of g o h^-1 in the order-k diffeomorphism germs.
    Numeric fallbacks cannot prove non-membership, hence the three-valued
    answer.
    """
    q = compose(g, invert(h))
    return _tri_in_diff(q, k)


# ---------------------------------------------------------------------------
# diffeomorphisms of the doubled line

@dataclass(frozen=True)
class DiffeoL:
    """A certified order-k diffeomorphism between doubled-line structures.

    The map is stored as its restriction germ on the punctured line plus the
    origin action (the branch pair {0, 0~} always maps to itself, so fix or
    exchange is the only freedom). pres_a and pres_b are the two chart
    presentations:

      fix:      pres_a = F read U -> U (equals the restriction),
                pres_b = F read V -> V  (= h_t o pres_a o h_s^-1)
      exchange: pres_a = F read V -> U  (= restriction o h_s^-1),
                pres_b = F read U -> V  (= h_t o restriction; = h_t o pres_a o h_s)

    certificate records how firmly the presentations were verified: TRUE for
    exact or conclusive numeric checks, INDETERMINATE when a numeric check
    could not certify either way. Construct through build_diffeo.
    """

    restriction: GermLike
    origin_action: str
    source: SpecialMinimalAtlas
    target: SpecialMinimalAtlas
    pres_a: GermLike
    pres_b: GermLike
    k: int
    certificate: Tri = Tri.TRUE

    def __post_init__(self):
        if self.origin_action not in (FIX, EXCHANGE):
            raise DomainError(f"unknown origin action {self.origin_action!r}")
        if not isinstance(self.k, int) or self.k < 1:
            raise DomainError(f"k must be a positive integer, got {self.k!r}")

    @property
    def orientation(self) -> str:
        return self.restriction.orientation

    @property
    def sign(self) -> int:
        return 1 if self.orientation == PRESERVING else -1

    def is_identity(self) -> bool:
        return (self.origin_action == FIX
                and isinstance(self.restriction, Germ)
                and self.restriction.is_identity())

    def __call__(self, p: PointL) -> PointL:
        return apply_diffeo(self, p)


def apply_diffeo(d: DiffeoL, p: PointL) -> PointL:
    """Evaluate d at a point, routing the origins by the action flag."""
    if p.is_origin():
        swap = d.origin_action == EXCHANGE
        return PointL(0, tilde=p.tilde != swap)
    return PointL(evaluate(d.restriction, p.x))


def _expected_b(a: GermLike, source: SpecialMinimalAtlas,
                target: SpecialMinimalAtlas, origin_action: str) -> GermLike:
    if origin_action == FIX:
        return compose(target.h, compose(a, invert(source.h)))
    return compose(target.h, compose(a, source.h))


def build_diffeo(a: GermLike, b, source: SpecialMinimalAtlas,
                 target: SpecialMinimalAtlas, origin_action: str,
                 k: int = 1) -> DiffeoL:
    """Assemble a diffeomorphism from its chart presentation(s).

    a is the presentation into the target U chart; b, if given, must satisfy
    the compatibility identity (b = h_t o a o h_s^-1 for fix,
    b = h_t o a o h_s for exchange) and is derived from it when None.
    Both presentations are certified as order-k diffeomorphism germs; a
    definitely-incompatible b raises IncompatiblePresentations carrying the
    residual germ b o expected^-1 (identity iff compatible).
    """
    if origin_action not in (FIX, EXCHANGE):
        raise DomainError(f"unknown origin action {origin_action!r}")
    if not isinstance(k, int) or k < 1:
        raise DomainError(f"k must be a positive integer, got {k!r}")
    expected = _expected_b(a, source, target, origin_action)
    certificate = Tri.TRUE
    if b is None:
        b = expected
    else:
        match = germ_match(b, expected)
        if match is Tri.FALSE:
            try:
                residual = compose(b, invert(expected))
            except DomainError:
                residual = None
            raise IncompatiblePresentations(
                "presentation b does not satisfy the compatibility identity",
                residual=residual,
            )
        if match is Tri.INDETERMINATE:
            certificate = Tri.INDETERMINATE
    for label, q in (("a", a), ("b", b)):
        tri = _tri_in_diff(q, k)
        if tri is Tri.FALSE:
            raise DomainError(
                f"presentation {label} is not an order-{k} diffeomorphism germ"
            )
        if tri is Tri.INDETERMINATE:
            certificate = Tri.INDETERMINATE
    if origin_action == FIX:
        restriction = a
    else:
        restriction = compose(a, source.h)
    return DiffeoL(restriction, origin_action, source, target, a, b, k, certificate)


def phi_fix(d: DiffeoL) -> GermLike:
    """V-chart presentation of an origin-fixing diffeomorphism."""
    if d.origin_action != FIX:
        raise DomainError("phi_fix needs an origin-fixing diffeomorphism")
    return d.pres_b


def phi_ex(d: DiffeoL) -> GermLike:
    """Source-V-chart presentation of an origin-exchanging diffeomorphism."""
    if d.origin_action != EXCHANGE:
        raise DomainError("phi_ex needs an origin-exchanging diffeomorphism")
    return d.pres_a


def identity_diffeo(atlas: SpecialMinimalAtlas, k: int = 1) -> DiffeoL:
    return build_diffeo(identity_germ(), None, atlas, atlas, FIX, k)


def psi(a) -> DiffeoL:
    """The order-two origin swap of the structure P_{w_a}.

    Restriction x -> -x/sqrt(a) on the left, x -> -x*sqrt(a) on the right;
    exchanges origins, reverses orientation, and both chart presentations
    come out linear (x -> -sqrt(a)*x and x -> -x/sqrt(a)). Composing it with
    itself gives the identity exactly.
    """
    av = to_real(a)
    if av <= 0:
        raise DomainError(f"psi needs a > 0, got {a!r}")
    root = real_sqrt(av)
    atlas = SpecialMinimalAtlas(make_wa(av))
    restriction = Germ.from_sides([(1 / root, 1)], [(-root, 1)])
    pres_a = compose(restriction, invert(atlas.h))
    return build_diffeo(pres_a, None, atlas, atlas, EXCHANGE, k=1)


def compose_diffeo(d2: DiffeoL, d1: DiffeoL) -> DiffeoL:
    """d2 after d1; the structures must match where they meet."""
    if germ_match(d2.source.h, d1.target.h) is not Tri.TRUE:
        raise DomainError(
            "cannot compose: source structure of the outer map does not "
            "verifiably equal the target structure of the inner map"
        )
    action = FIX if d1.origin_action == d2.origin_action else EXCHANGE
    restriction = compose(d2.restriction, d1.restriction)
    k = min(d1.k, d2.k)
    if action == FIX:
        pres_a = restriction
    else:
        pres_a = compose(restriction, invert(d1.source.h))
    return build_diffeo(pres_a, None, d1.source, d2.target, action, k)


# ---------------------------------------------------------------------------
# classification with witnesses

def _wa_witnesses(cls_, k: int) -> dict[str, DiffeoL]:
    """Concrete maps populating each nonempty cell between W_a and W_b."""
    av, bv = cls_.a, cls_.b
    source = SpecialMinimalAtlas(make_wa(av))
    target = SpecialMinimalAtlas(make_wa(bv))
    out: dict[str, DiffeoL] = {}
    if cls_.nonempty["fix+"]:
        out["fix+"] = build_diffeo(identity_germ(), None, source, target, FIX, k)
    if cls_.nonempty["fix-"]:
        out["fix-"] = build_diffeo(flip_germ(), None, source, target, FIX, k)
    if cls_.nonempty["ex+"]:
        root = real_sqrt(av)
        restriction = Germ.from_sides([(-1 / root, 1)], [(root, 1)])
        pres_a = compose(restriction, invert(source.h))
        out["ex+"] = build_diffeo(pres_a, None, source, target, EXCHANGE, k)
    if cls_.nonempty["ex-"]:
        root = real_sqrt(av)
        restriction = Germ.from_sides([(1 / root, 1)], [(-root, 1)])
        pres_a = compose(restriction, invert(source.h))
        out["ex-"] = build_diffeo(pres_a, None, source, target, EXCHANGE, k)
    return out


def diffeo_classes(a, b, k: int = 1):
    """Emptiness pattern of the four cells plus a witness for each nonempty one.

    Returns (classification, witnesses) where witnesses maps cell names to
    DiffeoL objects certified at order k.
    """
    from .cosets import classify_wa_pair

    cls_ = classify_wa_pair(a, b, k)
    return cls_, _wa_witnesses(cls_, k)


def classification_to_json(cls_, witnesses: dict[str, DiffeoL]) -> dict:
    from .cosets import CELLS

    wit = []
    for cell in CELLS:
        if cell in witnesses:
            d = witnesses[cell]
            wit.append({
                "cell": cell,
                "restriction": germ_to_json(d.restriction),
                "origin_action": d.origin_action,
            })
    return {"cells": {c: cls_.nonempty[c] for c in CELLS}, "witnesses": wit}
