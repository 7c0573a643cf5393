"""Germ algebra for homeomorphisms of the real line fixing 0.

A germ here is a homeomorphism h of R with h(0) = 0 that is smooth away
from 0, represented exactly as a finite signed power sum on each side:

    h(x) = sum_i c_i * (-x)**e_i   for x < 0        (the "neg" side)
    h(x) = sum_i c_i * x**e_i      for x > 0        (the "pos" side)

with all exponents strictly positive. The two one-sided expansions are
independent; whether h is differentiable at 0, and to what order, is a
computed property (one-sided jets), not a representation constraint.

Orientation is stored explicitly and validated: an increasing h has a
negative leading coefficient on the neg side and a positive one on the pos
side, a decreasing h has both flipped. Composition stays exact whenever the
substitution is closed under finite power sums (inner side a monomial, or
all outer exponents positive integers); otherwise it degrades to a
NumericGerm wrapping the composed callable, and every numeric answer
downstream is reported with its certification status rather than as a bare
claim.

Coefficients and exponents are Fractions whenever the inputs allow
(see realnum); exponents stay Fractions always.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence, Union

from .errors import DomainError
from .realnum import REAL_TOL, Real, as_float, is_integral, real_eq, real_pow, to_real

#: Hard cap on jet orders; "infinite" smoothness requests are evaluated here
#: and the report carries capped=True.
K_MAX = 12

#: Exact composition falls back to numeric beyond this many expansion terms.
_TERM_CAP = 512

#: Richardson step schedule for one-sided numeric derivatives: 2^-4 .. 2^-16.
_RICH_STEPS = [2.0 ** -j for j in range(4, 17)]

#: Relative Cauchy threshold deciding numeric derivative existence.
_RICH_REL = 1e-3

#: Numeric derivative estimates are trusted only through this order.
_NUMERIC_ORDER_CAP = 4


class _Nonexistent:
    """Marker for a one-sided derivative that does not exist at 0."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NONEXISTENT"


NONEXISTENT = _Nonexistent()

JetEntry = Union[Fraction, float, _Nonexistent]


class Tri(enum.Enum):
    """Three-valued certification result: numeric paths cannot always decide."""

    TRUE = "true"
    FALSE = "false"
    INDETERMINATE = "indeterminate"

    @classmethod
    def from_bool(cls, b: bool) -> "Tri":
        return cls.TRUE if b else cls.FALSE


PRESERVING = "preserving"
REVERSING = "reversing"


@dataclass(frozen=True)
class PowerTerm:
    """One term c * t**e of a one-sided expansion; c != 0, e > 0.

    A float coefficient stays a float (it marks a computed, inexact value
    and must keep comparing by tolerance); ints, strings, and Fractions
    become exact Fractions. Exponents are always exact Fractions.
    """

    coeff: Real
    exponent: Fraction

    def __post_init__(self):
        c = self.coeff
        if not isinstance(c, (float, Fraction)):
            c = to_real(c)
        e = to_real(self.exponent)
        object.__setattr__(self, "coeff", c)
        object.__setattr__(self, "exponent", e)
        if c == 0:
            raise DomainError("power term with zero coefficient")
        if e <= 0:
            raise DomainError(f"power term exponent must be positive, got {e}")


@dataclass(frozen=True)
class SideExpansion:
    """Finite power sum for one side, exponents strictly increasing.

    The evaluated side map is strictly monotone on a punctured one-sided
    neighborhood of 0; with positive exponents and nonzero coefficients the
    leading term dominates there, so construction only has to check term
    ordering.
    """

    terms: tuple[PowerTerm, ...]

    def __post_init__(self):
        terms = tuple(
            t if isinstance(t, PowerTerm) else PowerTerm(t[0], t[1])
            for t in self.terms
        )
        object.__setattr__(self, "terms", terms)
        if not terms:
            raise DomainError("side expansion needs at least one term")
        exps = [t.exponent for t in terms]
        if any(e2 <= e1 for e1, e2 in zip(exps, exps[1:])):
            raise DomainError(f"exponents must strictly increase, got {exps}")

    @property
    def leading(self) -> PowerTerm:
        return self.terms[0]

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def __call__(self, t: Real) -> Real:
        # t is the positive side variable (|x|), t > 0
        return sum(term.coeff * real_pow(t, term.exponent) for term in self.terms)


def _side(terms: Sequence) -> SideExpansion:
    return SideExpansion(tuple(
        t if isinstance(t, PowerTerm) else PowerTerm(t[0], t[1])
        for t in terms
    ))


@dataclass(frozen=True)
class Germ:
    """Exact germ: per-side power sums plus an orientation flag.

    neg is evaluated as x -> sum c*(-x)**e for x < 0, pos as
    x -> sum c*x**e for x > 0, and the germ fixes 0. The orientation flag
    must cohere with the leading signs (that coherence is what makes the
    assembled map a bijection near 0).
    """

    neg: SideExpansion
    pos: SideExpansion
    orientation: str

    def __post_init__(self):
        if self.orientation not in (PRESERVING, REVERSING):
            raise DomainError(f"unknown orientation {self.orientation!r}")
        ln = self.neg.leading.coeff
        lp = self.pos.leading.coeff
        if self.orientation == PRESERVING:
            ok = ln < 0 and lp > 0
        else:
            ok = ln > 0 and lp < 0
        if not ok:
            raise DomainError(
                f"leading coefficients ({ln}, {lp}) do not match orientation "
                f"{self.orientation!r}; the assembled map would not be a bijection"
            )

    @classmethod
    def from_sides(cls, neg_terms, pos_terms) -> "Germ":
        """Build a germ inferring orientation from the leading signs."""
        neg = _side(neg_terms)
        pos = _side(pos_terms)
        if neg.leading.coeff < 0 and pos.leading.coeff > 0:
            return cls(neg, pos, PRESERVING)
        if neg.leading.coeff > 0 and pos.leading.coeff < 0:
            return cls(neg, pos, REVERSING)
        raise DomainError(
            "leading coefficient signs admit no orientation; not a homeomorphism germ"
        )

    def __call__(self, x):
        return evaluate(self, x)

    def is_identity(self) -> bool:
        return (
            self.orientation == PRESERVING
            and self.neg.is_monomial() and self.pos.is_monomial()
            and self.neg.leading.exponent == 1 and self.pos.leading.exponent == 1
            and real_eq(self.neg.leading.coeff, Fraction(-1))
            and real_eq(self.pos.leading.coeff, Fraction(1))
        )


@dataclass(frozen=True)
class NumericGerm:
    """Fallback germ carrying the composed callable on R minus 0.

    Produced when exact composition or inversion is not closed under finite
    power sums. The callable is the primary representation (it is an exact
    pointwise composition of closed forms); construction samples both sides
    to validate monotonicity and the limit-to-0 invariant. provenance records
    how the object arose.
    """

    fn: Callable[[float], float]
    orientation: str
    provenance: str = "numeric"

    def __post_init__(self):
        if self.orientation not in (PRESERVING, REVERSING):
            raise DomainError(f"unknown orientation {self.orientation!r}")
        self._validate_samples()

    def _validate_samples(self):
        sgn = 1.0 if self.orientation == PRESERVING else -1.0
        for side in (-1.0, 1.0):
            xs = [side * 2.0 ** -j for j in range(2, 16)]
            ys = [self.fn(x) for x in xs]
            expected = sgn * side
            if any(math.copysign(1.0, y) != expected for y in ys):
                raise DomainError(
                    f"numeric germ sign pattern inconsistent with {self.orientation}"
                )
            # xs shrink toward 0, so |y| must shrink too (strict monotonicity)
            mags = [abs(y) for y in ys]
            if any(m2 >= m1 for m1, m2 in zip(mags, mags[1:])):
                raise DomainError("numeric germ samples are not strictly monotone")
        if abs(self.fn(2.0 ** -40)) > 1e-6 or abs(self.fn(-2.0 ** -40)) > 1e-6:
            raise DomainError("numeric germ does not approach 0 at 0")

    def __call__(self, x):
        return evaluate(self, x)


GermLike = Union[Germ, NumericGerm]


@dataclass(frozen=True)
class Jet:
    """Two one-sided derivative tuples at 0, entries f^(j)(0-) / f^(j)(0+).

    Entry j-1 holds the j-th derivative (no 0th entry; germs fix 0). Once an
    entry is NONEXISTENT all later entries on that side are NONEXISTENT too.
    """

    order: int
    neg: tuple[JetEntry, ...]
    pos: tuple[JetEntry, ...]

    def __post_init__(self):
        if not (1 <= self.order <= K_MAX):
            raise DomainError(f"jet order must be in 1..{K_MAX}, got {self.order}")
        for name, side in (("neg", self.neg), ("pos", self.pos)):
            if len(side) != self.order:
                raise DomainError(f"{name} side has {len(side)} entries for order {self.order}")
            seen_gap = False
            for entry in side:
                if entry is NONEXISTENT:
                    seen_gap = True
                elif seen_gap:
                    raise DomainError("an existing derivative follows a NONEXISTENT one")


@dataclass(frozen=True)
class Obstruction:
    """First failing order of a smoothness test with the mismatched pair."""

    order: int
    neg: JetEntry
    pos: JetEntry


@dataclass(frozen=True)
class SmoothnessReport:
    max_order: int
    obstruction: Obstruction | None
    is_diffeo_ck: bool
    order_checked: int = 0
    capped: bool = False
    #: False when a numeric path could not certify the failing order either way.
    conclusive: bool = True


# ---------------------------------------------------------------------------
# constructors

def make_wa(a) -> Germ:
    """The one-parameter family w_a: identity for x <= 0, x -> a*x for x > 0."""
    a = to_real(a)
    if a <= 0:
        raise DomainError(f"w_a needs a > 0, got {a}")
    return Germ(_side([(-1, 1)]), _side([(a, 1)]), PRESERVING)


def identity_germ() -> Germ:
    return make_wa(1)


def flip_germ() -> Germ:
    """The orientation-reversing involution x -> -x."""
    return Germ(_side([(1, 1)]), _side([(-1, 1)]), REVERSING)


def poly_germ(coeffs: dict[int, object]) -> Germ:
    """Germ of a polynomial f(x) = sum c_m x**m applied on both sides.

    coeffs maps power -> coefficient. The lowest nonzero power must be odd
    (an even leading power cannot be a local bijection).
    """
    items = sorted((int(m), to_real(c)) for m, c in coeffs.items() if to_real(c) != 0)
    if not items:
        raise DomainError("polynomial germ needs a nonzero coefficient")
    lead_m, lead_c = items[0]
    if lead_m % 2 == 0:
        raise DomainError(f"leading power {lead_m} is even; not a bijection near 0")
    pos = [(c, m) for m, c in items]
    neg = [(c * (-1) ** m, m) for m, c in items]
    orientation = PRESERVING if lead_c > 0 else REVERSING
    return Germ(_side(neg), _side(pos), orientation)


# ---------------------------------------------------------------------------
# evaluation

def evaluate(h: GermLike, x):
    """Apply the germ; exact when x and the germ data are rational."""
    if isinstance(h, NumericGerm):
        if x == 0:
            return 0.0
        return h.fn(float(x))
    if not isinstance(h, Germ):
        raise DomainError(f"cannot evaluate {type(h).__name__}")
    xr = to_real(x) if not isinstance(x, (Fraction, float)) else x
    if xr == 0:
        return Fraction(0) if isinstance(xr, Fraction) else 0.0
    if xr < 0:
        return h.neg(-xr)
    return h.pos(xr)


def _float_fn(h: GermLike) -> Callable[[float], float]:
    if isinstance(h, NumericGerm):
        return h.fn
    def fn(x: float) -> float:
        if x == 0.0:
            return 0.0
        if x < 0.0:
            return sum(float(t.coeff) * (-x) ** float(t.exponent) for t in h.neg.terms)
        return sum(float(t.coeff) * x ** float(t.exponent) for t in h.pos.terms)
    return fn


# ---------------------------------------------------------------------------
# composition and inversion

def _orientation_product(o1: str, o2: str) -> str:
    return PRESERVING if (o1 == o2) else REVERSING


def _negate_terms(terms):
    return [(-t.coeff, t.exponent) for t in terms]


def _poly_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for e1, c1 in a.items():
        for e2, c2 in b.items():
            key = e1 + e2
            out[key] = out.get(key, 0) + c1 * c2
    return {e: c for e, c in out.items() if c != 0}


def _expand_composition(outer, inner) -> list | None:
    """Terms of sum_j d_j * (P(t))**f_j where P = sum_i a_i t**e_i, P > 0 near 0.

    Returns None when the substitution is not closed under finite power sums:
    closure needs the inner side to be a monomial (with positive coefficient,
    guaranteed by sign routing) or every outer exponent to be a positive
    integer. Results beyond _TERM_CAP terms also return None; callers fall
    back to the numeric representation.
    """
    if len(inner) == 1:
        a, e = inner[0]
        out: dict = {}
        for d, f in outer:
            key = e * f
            out[key] = out.get(key, 0) + d * real_pow(a, f)
        terms = [(c, e) for e, c in out.items() if c != 0]
        return sorted(terms, key=lambda t: t[1])
    if not all(is_integral(f) and f > 0 for _, f in outer):
        return None
    base = {e: c for c, e in inner}
    acc: dict = {}
    powers: dict[int, dict] = {}
    cur = dict(base)
    n = 1
    maxf = max(int(f) for _, f in outer)
    while n <= maxf:
        powers[n] = cur
        if n < maxf:
            cur = _poly_mul(cur, base)
            if len(cur) > _TERM_CAP:
                return None
        n += 1
    for d, f in outer:
        for e, c in powers[int(f)].items():
            acc[e] = acc.get(e, 0) + d * c
        if len(acc) > _TERM_CAP:
            return None
    terms = [(c, e) for e, c in acc.items() if c != 0]
    return sorted(terms, key=lambda t: t[1])


def _term_pairs(side: SideExpansion):
    return [(t.coeff, t.exponent) for t in side.terms]


def compose(g: GermLike, h: GermLike) -> GermLike:
    """g after h: compose(g, h)(x) = g(h(x)).

    Exact when the per-side substitution is closed (see _expand_composition);
    otherwise returns a NumericGerm wrapping the composed callables, with
    provenance recording the fallback.
    """
    if isinstance(g, NumericGerm) or isinstance(h, NumericGerm):
        return _numeric_compose(g, h)
    sides = {}
    for result_side in ("neg", "pos"):
        inner_side = h.neg if result_side == "neg" else h.pos
        if h.orientation == PRESERVING:
            outer_side = g.neg if result_side == "neg" else g.pos
        else:
            outer_side = g.pos if result_side == "neg" else g.neg
        # Route signs so the inner series is positive near 0: the outer
        # expansion consumes |h(x)| and the stored outer coefficients already
        # carry the output sign convention for the outer side in use.
        if result_side == "neg":
            inner_positive = _negate_terms(inner_side.terms) if h.orientation == PRESERVING \
                else _term_pairs(inner_side)
        else:
            inner_positive = _term_pairs(inner_side) if h.orientation == PRESERVING \
                else _negate_terms(inner_side.terms)
        expanded = _expand_composition(_term_pairs(outer_side), inner_positive)
        if expanded is None:
            return _numeric_compose(g, h)
        sides[result_side] = expanded
    orientation = _orientation_product(g.orientation, h.orientation)
    return Germ(_side(sides["neg"]), _side(sides["pos"]), orientation)


def _prov(h: GermLike) -> str:
    if isinstance(h, NumericGerm):
        return h.provenance
    return "exact"


def _numeric_compose(g: GermLike, h: GermLike) -> NumericGerm:
    gf, hf = _float_fn(g), _float_fn(h)
    orientation = _orientation_product(g.orientation, h.orientation)
    return NumericGerm(
        fn=lambda x: gf(hf(x)),
        orientation=orientation,
        provenance=f"compose({_prov(g)},{_prov(h)})",
    )


def invert(h: GermLike) -> GermLike:
    """Group inverse; exact for per-side monomials, numeric root-finding otherwise."""
    if isinstance(h, NumericGerm):
        return _numeric_invert(h)
    if h.neg.is_monomial() and h.pos.is_monomial():
        nc, ne = h.neg.leading.coeff, h.neg.leading.exponent
        pc, pe = h.pos.leading.coeff, h.pos.leading.exponent
        rn, rp = Fraction(1) / ne, Fraction(1) / pe
        if h.orientation == PRESERVING:
            # neg -> neg, pos -> pos
            neg = [(-real_pow(-nc, -rn), rn)]
            pos = [(real_pow(pc, -rp), rp)]
        else:
            # h maps x<0 to y>0 and x>0 to y<0, so the inverse's pos side
            # comes from h's neg side and vice versa
            pos = [(-real_pow(nc, -rn), rn)]
            neg = [(real_pow(-pc, -rp), rp)]
        return Germ(_side(neg), _side(pos), h.orientation)
    return _numeric_invert(h)


def _numeric_invert(h: GermLike) -> NumericGerm:
    hf = _float_fn(h)
    preserving = h.orientation == PRESERVING

    def solve(y: float) -> float:
        if y == 0.0:
            return 0.0
        # x lives on the side forced by orientation, and along that side
        # |h| grows with |x| while keeping the sign of y, so the value
        # v(m) = h(sgn*m) travels monotonically toward y: upward iff y > 0.
        x_positive = (y > 0) == preserving
        sgn = 1.0 if x_positive else -1.0
        up = y > 0
        lo, hi = 0.0, 2.0 ** -30
        prev_mag = 0.0
        while True:
            v = hf(sgn * hi)
            if (v >= y) if up else (v <= y):
                break
            if math.copysign(1.0, v) != math.copysign(1.0, y) or abs(v) < prev_mag:
                # the side folded back before reaching y: y is outside the
                # germ branch of this expansion
                raise DomainError(f"value {y} is not reached by the monotone branch")
            prev_mag = abs(v)
            lo, hi = hi, hi * 2.0
            if hi > 2.0 ** 60:
                raise DomainError("inverse bracket search escaped to infinity")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            v = hf(sgn * mid)
            if (v < y) if up else (v > y):
                lo = mid
            else:
                hi = mid
        return sgn * 0.5 * (lo + hi)

    return NumericGerm(fn=solve, orientation=h.orientation,
                       provenance=f"invert({_prov(h)})")


# ---------------------------------------------------------------------------
# jets

def _exact_side_jet(side: SideExpansion, order: int, negate_odd: bool) -> list[JetEntry]:
    """Derivatives 1..order of sum c*t**e read in the x variable.

    negate_odd applies the chain-rule sign for the neg side, where t = -x and
    the j-th x-derivative of (-x)**e picks up (-1)**j.
    """
    coeffs: list[JetEntry] = []
    frac_exps = [t.exponent for t in side.terms if not is_integral(t.exponent)]
    min_frac = min(frac_exps) if frac_exps else None
    by_int_exp = {int(t.exponent): t.coeff for t in side.terms if is_integral(t.exponent)}
    for j in range(1, order + 1):
        if min_frac is not None and min_frac < j:
            coeffs.append(NONEXISTENT)
            continue
        c = by_int_exp.get(j)
        if c is None:
            coeffs.append(Fraction(0))
            continue
        val = c * math.factorial(j)
        if negate_odd and j % 2 == 1:
            val = -val
        coeffs.append(val)
    return coeffs


def _fd_quotient(fn: Callable[[float], float], j: int, h: float, side: str) -> float:
    """One-sided j-th difference quotient at 0 with step h."""
    total = 0.0
    for m in range(j + 1):
        c = math.comb(j, m)
        if side == "pos":
            total += ((-1) ** (j - m)) * c * (0.0 if m == 0 else fn(m * h))
        else:
            total += ((-1) ** m) * c * (0.0 if m == 0 else fn(-m * h))
    return total / h ** j


def _richardson(fn: Callable[[float], float], j: int, side: str):
    """Extrapolated one-sided derivative estimate.

    Returns (value, err, status) with status in "ok" / "nonexistent" /
    "indeterminate". Rows extend a Neville tableau one step at a time (the
    base formula has a full h, h^2, ... error series, so level m divides out
    2^m - 1); the entry with the smallest disagreement against its neighbors
    wins, so rounding noise at the finest steps cannot mask an earlier
    converged region. Existence is the fixed relative 1e-3 Cauchy criterion.
    """
    raw = [_fd_quotient(fn, j, h, side) for h in _RICH_STEPS]
    n = len(raw)
    rows: list[list[float]] = []
    best_val, best_err = raw[0], math.inf
    for i in range(n):
        row = [raw[i]]
        for m in range(1, i + 1):
            fac = 2.0 ** m
            row.append((fac * row[m - 1] - rows[i - 1][m - 1]) / (fac - 1.0))
            errt = max(abs(row[m] - row[m - 1]), abs(row[m] - rows[i - 1][m - 1]))
            if errt < best_err:
                best_err, best_val = errt, row[m]
        rows.append(row)
    if best_err <= _RICH_REL * max(1.0, abs(best_val)):
        return best_val, best_err, "ok"
    mags = [abs(v) for v in raw]
    growing = all(m2 > 1.15 * m1 for m1, m2 in zip(mags[-6:], mags[-5:]))
    if growing and mags[-1] > 5.0 * max(1.0, mags[0]):
        return best_val, best_err, "nonexistent"
    return best_val, best_err, "indeterminate"


def _numeric_side_jet(h: GermLike, order: int, side: str):
    """Detailed per-order estimates: list of (status, value, err)."""
    fn = _float_fn(h)
    out = []
    blocked: str | None = None
    for j in range(1, order + 1):
        if blocked is not None:
            out.append((blocked, None, None))
            continue
        if j > _NUMERIC_ORDER_CAP:
            out.append(("indeterminate", None, None))
            blocked = "indeterminate"
            continue
        value, err, status = _richardson(fn, j, side)
        out.append((status, value, err))
        if status != "ok":
            blocked = status
    return out


def one_sided_jet(h: GermLike, order: int, side: str) -> tuple[JetEntry, ...]:
    """Derivatives 1..order of h at 0 from one side.

    For exact germs an integer exponent equal to j contributes j! times its
    coefficient (sign-adjusted on the neg side), fractional exponents below j
    make the j-th derivative NONEXISTENT, everything else contributes 0. On
    the numeric path NONEXISTENT means "not certified to exist by the
    convergence test"; smoothness_at_zero keeps the finer ok/indeterminate
    distinction.
    """
    if not isinstance(order, int) or order <= 0:
        raise DomainError(f"jet order must be a positive integer, got {order!r}")
    if order > K_MAX:
        raise DomainError(f"jet order {order} exceeds K_MAX={K_MAX}")
    if side not in ("neg", "pos"):
        raise DomainError(f"side must be 'neg' or 'pos', got {side!r}")
    if isinstance(h, Germ):
        exp = h.neg if side == "neg" else h.pos
        return tuple(_exact_side_jet(exp, order, negate_odd=(side == "neg")))
    detailed = _numeric_side_jet(h, order, side)
    return tuple(v if s == "ok" else NONEXISTENT for s, v, _ in detailed)


def jet_of(h: GermLike, order: int) -> Jet:
    """Both one-sided jets assembled into a Jet value."""
    return Jet(order=order,
               neg=one_sided_jet(h, order, "neg"),
               pos=one_sided_jet(h, order, "pos"))


# ---------------------------------------------------------------------------
# smoothness tests

def _normalize_order(k) -> tuple[int, bool]:
    """Map an order request (int or an infinity marker) to (order, capped)."""
    if k is None or (isinstance(k, float) and math.isinf(k)):
        return K_MAX, True
    if not isinstance(k, int) or isinstance(k, bool):
        raise DomainError(f"order must be a positive integer or an infinity marker, got {k!r}")
    if k < 1:
        raise DomainError(f"order must be >= 1, got {k}")
    if k > K_MAX:
        return K_MAX, True
    return k, False


def smoothness_at_zero(h: GermLike, k) -> SmoothnessReport:
    """Largest order through which the two one-sided jets exist and agree.

    is_diffeo_ck additionally requires a nonzero first derivative. On the
    numeric path the report is marked inconclusive when the failing order
    could not be certified either way (estimates neither converged nor
    cleanly diverged, or the order exceeds the numeric cap).
    """
    keff, capped = _normalize_order(k)
    if isinstance(h, Germ):
        negs = one_sided_jet(h, keff, "neg")
        poss = one_sided_jet(h, keff, "pos")
        max_order, obstruction = _match_orders(
            [("ok", v, None) if v is not NONEXISTENT else ("nonexistent", None, None) for v in negs],
            [("ok", v, None) if v is not NONEXISTENT else ("nonexistent", None, None) for v in poss],
            exact=True,
        )
        conclusive = True
    else:
        dn = _numeric_side_jet(h, keff, "neg")
        dp = _numeric_side_jet(h, keff, "pos")
        max_order, obstruction = _match_orders(dn, dp, exact=False)
        conclusive = True
        if max_order < keff:
            j = max_order  # index of the failing order j+1
            sn, sp = dn[j][0], dp[j][0]
            if sn == "indeterminate" or sp == "indeterminate":
                conclusive = False
            elif sn == "ok" and sp == "ok" and obstruction is not None:
                # both converged: mismatch is conclusive only when it clears
                # the combined error band comfortably
                en = dn[j][2] or 0.0
                ep = dp[j][2] or 0.0
                gap = abs(dn[j][1] - dp[j][1])
                scale = max(1.0, abs(dn[j][1]), abs(dp[j][1]))
                if gap < max(10.0 * (en + ep), 1e-3 * scale):
                    conclusive = False
    if max_order >= 1:
        if isinstance(h, Germ):
            first = one_sided_jet(h, 1, "pos")[0]
            nonzero_slope = first is not NONEXISTENT and not real_eq(first, Fraction(0))
        else:
            s, v, e = _numeric_side_jet(h, 1, "pos")[0]
            nonzero_slope = s == "ok" and abs(v) > max(1e-6, 3.0 * (e or 0.0))
    else:
        nonzero_slope = False
    return SmoothnessReport(
        max_order=max_order,
        obstruction=obstruction,
        is_diffeo_ck=(max_order == keff) and nonzero_slope,
        order_checked=keff,
        capped=capped,
        conclusive=conclusive,
    )


def _match_orders(dn, dp, exact: bool):
    """Walk detailed per-order status/value pairs; first failure wins."""
    max_order = 0
    for j0, ((sn, vn, en), (sp, vp, ep)) in enumerate(zip(dn, dp)):
        j = j0 + 1
        if sn != "ok" or sp != "ok":
            return max_order, Obstruction(
                j,
                vn if sn == "ok" else NONEXISTENT,
                vp if sp == "ok" else NONEXISTENT,
            )
        if exact:
            equal = real_eq(vn, vp)
        else:
            band = max(3.0 * ((en or 0.0) + (ep or 0.0)),
                       1e-6 * max(1.0, abs(vn), abs(vp)))
            equal = abs(vn - vp) <= band
        if not equal:
            return max_order, Obstruction(j, vn, vp)
        max_order = j
    return max_order, None


def sandwich_smoothness(f: Jet, a, b, n: int) -> SmoothnessReport:
    """Smoothness of q = w_b o f o w_a from the jet of f alone.

    With d_j = f^(j)(0) and d_1 > 0 the two sides of q carry jets
    (d_j | b*a^j*d_j); with d_1 < 0 they carry (b*d_j | a^j*d_j). The first
    order is the two-slope matching condition (a*b = 1, resp. a = b), and
    past it each order j fails exactly when d_j does not vanish (for a != 1).
    """
    a = to_real(a)
    b = to_real(b)
    if a <= 0 or b <= 0:
        raise DomainError("sandwich parameters must be positive")
    if not isinstance(n, int) or n < 1:
        raise DomainError(f"order must be a positive integer, got {n!r}")
    if n > f.order:
        raise DomainError(f"order {n} exceeds the jet's order {f.order}")
    for j in range(n):
        if f.neg[j] is NONEXISTENT or f.pos[j] is NONEXISTENT:
            raise DomainError("jet has NONEXISTENT entries within the requested order")
        if not real_eq(f.neg[j], f.pos[j]):
            raise DomainError("jet is not two-sided-equal; not a diffeomorphism jet")
    d = list(f.pos[:n])
    if real_eq(d[0], Fraction(0)):
        raise DomainError("f'(0) = 0: not a diffeomorphism jet")
    tau_positive = d[0] > 0
    max_order = 0
    obstruction = None
    for j in range(1, n + 1):
        dj = d[j - 1]
        if tau_positive:
            qn, qp = dj, b * real_pow(a, Fraction(j)) * dj
        else:
            qn, qp = b * dj, real_pow(a, Fraction(j)) * dj
        if real_eq(qn, qp):
            max_order = j
        else:
            obstruction = Obstruction(j, qn, qp)
            break
    return SmoothnessReport(
        max_order=max_order,
        obstruction=obstruction,
        is_diffeo_ck=(max_order == n),
        order_checked=n,
    )


# ---------------------------------------------------------------------------
# membership predicates

def in_diff(h: GermLike, k) -> bool:
    """Certified membership in the C^k diffeomorphisms fixing 0.

    Checks the smoothness report of h and of its inverse (the numeric inverse
    cannot be assumed smooth just because h is). False means "not certified";
    use smoothness_at_zero directly when the inconclusive case matters.
    """
    rep = smoothness_at_zero(h, k)
    if not rep.is_diffeo_ck:
        return False
    rep_inv = smoothness_at_zero(invert(h), k)
    return rep_inv.is_diffeo_ck


def in_jdiff(h: GermLike, k) -> bool:
    """Membership in the subgroup with vanishing derivatives 2..k at 0."""
    if not in_diff(h, k):
        return False
    keff, _ = _normalize_order(k)
    for side in ("neg", "pos"):
        coeffs = one_sided_jet(h, keff, side)
        for j in range(2, keff + 1):
            c = coeffs[j - 1]
            if c is NONEXISTENT:
                return False
            if isinstance(h, Germ):
                if not real_eq(c, Fraction(0)):
                    return False
            elif abs(float(c)) > 1e-6:
                return False
    return True


def fixed_near_zero(h: GermLike, radius) -> bool:
    """True when h is the identity on (-radius, radius) minus 0.

    Exact germs are finite power sums, so agreeing with the identity on any
    interval forces the representation to be the identity itself. Numeric
    germs are sampled geometrically inside the radius.
    """
    r = float(radius)
    if r <= 0:
        raise DomainError(f"radius must be positive, got {radius!r}")
    if isinstance(h, Germ):
        return h.is_identity()
    for side in (-1.0, 1.0):
        for j in range(1, 22):
            x = side * r * 2.0 ** -j
            if abs(h.fn(x) - x) > 1e-12 * max(1.0, abs(x)):
                return False
    return True


# ---------------------------------------------------------------------------
# structural comparison and serialization

def germ_equal(g: Germ, h: Germ, tol: float = REAL_TOL) -> bool:
    """Term-list equality of exact germs; absent terms count as coefficient 0."""
    if g.orientation != h.orientation:
        return False
    for gs, hs in ((g.neg, h.neg), (g.pos, h.pos)):
        gmap = {t.exponent: t.coeff for t in gs.terms}
        hmap = {t.exponent: t.coeff for t in hs.terms}
        for e in set(gmap) | set(hmap):
            if not real_eq(gmap.get(e, Fraction(0)), hmap.get(e, Fraction(0)), tol):
                return False
    return True


def germ_match(g: GermLike, h: GermLike) -> Tri:
    """Equality up to the active certainty: exact term lists when possible,
    sampled comparison with an inconclusive band otherwise."""
    if isinstance(g, Germ) and isinstance(h, Germ):
        return Tri.from_bool(germ_equal(g, h))
    if g.orientation != h.orientation:
        return Tri.FALSE
    gf, hf = _float_fn(g), _float_fn(h)
    worst = 0.0
    for side in (-1.0, 1.0):
        for j in range(0, 15):
            x = side * 2.0 ** -j
            gy, hy = gf(x), hf(x)
            scale = max(abs(gy), abs(hy), 1e-30)
            worst = max(worst, abs(gy - hy) / scale)
    if worst <= 1e-8:
        return Tri.TRUE
    if worst >= 1e-5:
        return Tri.FALSE
    return Tri.INDETERMINATE


def germ_to_json(g: Germ) -> dict:
    """JSON form: {"neg": [{"c": ..., "e": ...}], "pos": [...], "orientation": ...}."""
    if not isinstance(g, Germ):
        raise DomainError("numeric germs are in-memory only and are not serialized")
    def side(s: SideExpansion):
        return [{"c": float(t.coeff), "e": float(t.exponent)} for t in s.terms]
    return {"neg": side(g.neg), "pos": side(g.pos), "orientation": g.orientation}


def germ_from_json(d: dict) -> Germ:
    try:
        neg = [(to_real(t["c"]), to_real(t["e"])) for t in d["neg"]]
        pos = [(to_real(t["c"]), to_real(t["e"])) for t in d["pos"]]
        orientation = d["orientation"]
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed germ JSON: {exc}") from exc
    return Germ(_side(neg), _side(pos), orientation)
