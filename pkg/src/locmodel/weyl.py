"""Extended affine Weyl groups for GL_d and GSp_2g.

An element is a pair (lam, u) representing t_lam * u in X_* >< W_0,
with composition (t_lam u)(t_mu v) = t_{lam + u(mu)} (uv).

For GL(d) the coweight lattice is Z^d and W_0 = S_d.  For GSp(g) the
lattice is {(v; c) : v_i + v_{2g+1-i} = c}, stored as
(v_1, ..., v_g, c), and W_0 is the group of signed permutations of
rank g acting by v_i -> v_j or v_i -> c - v_j.

Length is computed by counting affine-root inversions directly; the
closed translation-length formula <lam+, 2rho> is used only as a
cross-check in the test suite.  The base alcove is the standard one
(x_1 > x_2 > ... > x_d > x_1 - 1 for GL, and the analogous dominant
small alcove for type C).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .errors import BudgetExceeded, DatumMismatch, InvalidIndex

ENUMERATE_BELOW_MAX_LENGTH = 20


@dataclass(frozen=True)
class RootDatum:
    kind: str  # "GL" or "GSp"
    n: int  # d for GL, g for GSp

    def __post_init__(self):
        if self.kind not in ("GL", "GSp"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("rank parameter must be >= 1")

    # -- lattice bookkeeping -------------------------------------------------

    @property
    def coord_len(self) -> int:
        """Length of the stored coweight tuple."""
        return self.n if self.kind == "GL" else self.n + 1

    @property
    def simple_indices(self):
        """Affine simple reflection indices, 0 included."""
        if self.kind == "GL":
            return range(self.n) if self.n > 1 else range(0)
        return range(self.n + 1)

    @property
    def vertex_labels(self):
        if self.kind == "GL":
            return range(self.n)
        return range(self.n + 1)

    def zero(self):
        return (0,) * self.coord_len

    # -- roots ---------------------------------------------------------------

    def roots(self):
        return _roots(self.kind, self.n)

    @staticmethod
    def is_positive_root(alpha) -> bool:
        for a in alpha:
            if a:
                return a > 0
        return False

    def pairing(self, lam, alpha) -> int:
        """<lam, alpha> for a coweight lam and root vector alpha."""
        if self.kind == "GL":
            return sum(l * a for l, a in zip(lam, alpha))
        c = lam[-1]
        s = sum(l * a for l, a in zip(lam[:-1], alpha))
        total = sum(alpha)
        # total is always even for type C root vectors
        return s - c * (total // 2)

    # -- finite Weyl group ---------------------------------------------------

    def finite_identity(self):
        if self.kind == "GL":
            return tuple(range(self.n))
        return tuple(range(1, self.n + 1))

    def finite_elements(self):
        """All of W_0 (use only for small ranks)."""
        if self.kind == "GL":
            return [tuple(p) for p in itertools.permutations(range(self.n))]
        out = []
        for p in itertools.permutations(range(1, self.n + 1)):
            for signs in itertools.product((1, -1), repeat=self.n):
                out.append(tuple(s * v for s, v in zip(signs, p)))
        return out

    def compose_finite(self, u, v):
        if self.kind == "GL":
            return tuple(u[v[i]] for i in range(self.n))
        return tuple(self._apply_signed(u, v[i]) for i in range(self.n))

    def invert_finite(self, u):
        if self.kind == "GL":
            inv = [0] * self.n
            for i, j in enumerate(u):
                inv[j] = i
            return tuple(inv)
        inv = [0] * self.n
        for i, j in enumerate(u):
            if j > 0:
                inv[j - 1] = i + 1
            else:
                inv[-j - 1] = -(i + 1)
        return tuple(inv)

    @staticmethod
    def _apply_signed(u, j):
        return u[j - 1] if j > 0 else -u[-j - 1]

    def act_coweight(self, u, lam):
        """u(lam), exact also on Fraction coordinates."""
        if self.kind == "GL":
            out = [0] * self.n
            for i in range(self.n):
                out[u[i]] = lam[i]
            return tuple(out)
        c = lam[-1]
        out = [0] * self.n
        for i in range(self.n):
            j = u[i]
            if j > 0:
                out[j - 1] = lam[i]
            else:
                out[-j - 1] = c - lam[i]
        return tuple(out) + (c,)

    def act_root(self, u, alpha):
        if self.kind == "GL":
            out = [0] * self.n
            for i in range(self.n):
                out[u[i]] = alpha[i]
            return tuple(out)
        out = [0] * self.n
        for i in range(self.n):
            j = u[i]
            if j > 0:
                out[j - 1] = alpha[i]
            else:
                out[-j - 1] = -alpha[i]
        return tuple(out)

    def negate(self, lam):
        return tuple(-x for x in lam)

    def add(self, lam, mu):
        return tuple(a + b for a, b in zip(lam, mu))

    # -- simple reflections --------------------------------------------------

    def finite_simple(self, j):
        """The finite reflection s_j, 1 <= j <= rank."""
        u = list(self.finite_identity())
        if self.kind == "GL":
            if not 1 <= j <= self.n - 1:
                raise InvalidIndex(f"no finite simple reflection {j}")
            u[j - 1], u[j] = u[j], u[j - 1]
        else:
            if not 1 <= j <= self.n:
                raise InvalidIndex(f"no finite simple reflection {j}")
            if j < self.n:
                u[j - 1], u[j] = u[j], u[j - 1]
            else:
                u[self.n - 1] = -self.n
        return tuple(u)

    def highest_root_data(self):
        """(s_theta, theta_coweight) for the affine reflection s_0."""
        if self.kind == "GL":
            if self.n < 2:
                raise InvalidIndex("GL(1) has no affine simple reflections")
            u = list(self.finite_identity())
            u[0], u[-1] = u[-1], u[0]
            theta_v = (1,) + (0,) * (self.n - 2) + (-1,)
            return tuple(u), theta_v
        u = list(self.finite_identity())
        u[0] = -1
        theta_v = (1,) + (0,) * (self.n - 1) + (0,)
        return tuple(u), theta_v


@lru_cache(maxsize=None)
def _roots(kind, n):
    roots = []
    if kind == "GL":
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                a = [0] * n
                a[i], a[j] = 1, -1
                roots.append(tuple(a))
    else:
        for i in range(n):
            for j in range(i + 1, n):
                for si, sj in ((1, -1), (1, 1), (-1, 1), (-1, -1)):
                    a = [0] * n
                    a[i], a[j] = si, sj
                    roots.append(tuple(a))
        for i in range(n):
            a = [0] * n
            a[i] = 2
            roots.append(tuple(a))
            a = [0] * n
            a[i] = -2
            roots.append(tuple(a))
    return tuple(roots)


@dataclass(frozen=True)
class Coweight:
    """A coweight of the datum; for GSp the last coordinate is the similitude c."""

    datum: RootDatum
    value: tuple

    def __post_init__(self):
        object.__setattr__(self, "value", tuple(self.value))
        if len(self.value) != self.datum.coord_len:
            raise InvalidIndex("coweight has wrong length")

    def orbit(self):
        """The finite-Weyl orbit W_0 . value, deduplicated."""
        return sorted(
            {self.datum.act_coweight(u, self.value) for u in self.datum.finite_elements()}
        )


class WeylElement:
    """Immutable element t_lam * u of the extended affine Weyl group."""

    __slots__ = ("datum", "lam", "u", "_len", "_hash")

    def __init__(self, datum: RootDatum, lam, u):
        self.datum = datum
        self.lam = tuple(lam)
        self.u = tuple(u)
        if len(self.lam) != datum.coord_len:
            raise InvalidIndex("coweight has wrong length")
        self._len = None
        self._hash = hash((datum, self.lam, self.u))

    def __mul__(self, other: "WeylElement") -> "WeylElement":
        if self.datum != other.datum:
            raise DatumMismatch("cannot multiply across data")
        d = self.datum
        lam = d.add(self.lam, d.act_coweight(self.u, other.lam))
        return WeylElement(d, lam, d.compose_finite(self.u, other.u))

    def inv(self) -> "WeylElement":
        d = self.datum
        ui = d.invert_finite(self.u)
        return WeylElement(d, d.negate(d.act_coweight(ui, self.lam)), ui)

    def act_point(self, point):
        """Affine action lam + u(point) on X tensor Q."""
        d = self.datum
        moved = d.act_coweight(self.u, point)
        return tuple(Fraction(a) + b for a, b in zip(self.lam, moved))

    def __eq__(self, other):
        return (
            isinstance(other, WeylElement)
            and self.datum == other.datum
            and self.lam == other.lam
            and self.u == other.u
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"W({self.lam}, {self.u})"


# -- constructors ------------------------------------------------------------


def identity(datum: RootDatum) -> WeylElement:
    return WeylElement(datum, datum.zero(), datum.finite_identity())


def translation(datum: RootDatum, lam) -> WeylElement:
    lam = tuple(lam)
    if datum.kind == "GSp":
        if len(lam) != datum.n + 1:
            raise InvalidIndex("GSp coweight is (v_1..v_g, c)")
    return WeylElement(datum, lam, datum.finite_identity())


def finite(datum: RootDatum, u) -> WeylElement:
    return WeylElement(datum, datum.zero(), tuple(u))


def simple_reflection(datum: RootDatum, j: int) -> WeylElement:
    if j not in datum.simple_indices:
        raise InvalidIndex(f"no affine simple reflection {j} for {datum}")
    if j == 0:
        s_theta, theta_v = datum.highest_root_data()
        return WeylElement(datum, theta_v, s_theta)
    return finite(datum, datum.finite_simple(j))


@lru_cache(maxsize=None)
def omega_generator(datum: RootDatum) -> WeylElement:
    """The length-0 element with kappa = 1 (generates Omega)."""
    if datum.kind == "GL":
        lam = (1,) + (0,) * (datum.n - 1)
    else:
        lam = (1,) * datum.n + (1,)
    for u in datum.finite_elements():
        x = WeylElement(datum, lam, u)
        if length(x) == 0:
            return x
    raise InvalidIndex("no length-0 generator found")  # pragma: no cover


# -- basic maps --------------------------------------------------------------


def multiply(x: WeylElement, y: WeylElement) -> WeylElement:
    return x * y


def invert(x: WeylElement) -> WeylElement:
    return x.inv()


def kappa(x: WeylElement) -> int:
    """Component homomorphism: coordinate sum for GL, similitude for GSp."""
    if x.datum.kind == "GL":
        return sum(x.lam)
    return x.lam[-1]


def length(x: WeylElement) -> int:
    """Number of positive affine roots sent to negative ones by x.

    The image of (alpha, k) under t_lam u is (u(alpha), k - <lam, u(alpha)>);
    counting k >= 0 (k >= 1 for negative alpha) with negative image gives
    the length, with no reference to a closed formula.
    """
    if x._len is not None:
        return x._len
    d = x.datum
    total = 0
    for alpha in d.roots():
        k_min = 0 if d.is_positive_root(alpha) else 1
        beta = d.act_root(x.u, alpha)
        m = d.pairing(x.lam, beta)
        cnt = max(0, m - k_min)
        if not d.is_positive_root(beta) and m >= k_min:
            cnt += 1
        total += cnt
    x._len = total
    return total


# -- Bruhat order ------------------------------------------------------------


def _right_descent(y: WeylElement):
    ly = length(y)
    for j in y.datum.simple_indices:
        s = simple_reflection(y.datum, j)
        if length(y * s) < ly:
            return s
    return None


def bruhat_leq(x: WeylElement, y: WeylElement) -> bool:
    """x <= y in Bruhat order (false across distinct kappa components)."""
    if x.datum != y.datum:
        raise DatumMismatch("cannot compare across data")
    if kappa(x) != kappa(y):
        return False
    while True:
        if length(x) > length(y):
            return False
        if length(y) == 0:
            return x == y
        s = _right_descent(y)
        ys = y * s
        if length(x * s) < length(x):
            x = x * s
        y = ys


def reduced_word(x: WeylElement):
    """Return (word, omega_power) with x = s_{w_0}...s_{w_k} * tau^omega_power."""
    word = []
    y = x
    while length(y) > 0:
        for j in y.datum.simple_indices:
            s = simple_reflection(y.datum, j)
            if length(s * y) < length(y):
                word.append(j)
                y = s * y
                break
        else:  # pragma: no cover
            raise AssertionError("positive length without a left descent")
    return word, kappa(y)


def element_from_word(datum: RootDatum, word, omega_power: int = 0) -> WeylElement:
    x = identity(datum)
    for j in word:
        x = x * simple_reflection(datum, j)
    if omega_power:
        tau = omega_generator(datum)
        t = identity(datum)
        step = tau if omega_power > 0 else tau.inv()
        for _ in range(abs(omega_power)):
            t = t * step
        x = x * t
    return x


def enumerate_below(y: WeylElement) -> set:
    """The Bruhat down-set of y, via the subword property."""
    ly = length(y)
    if ly > ENUMERATE_BELOW_MAX_LENGTH:
        raise BudgetExceeded(f"length {ly} exceeds down-set guard")
    word, om = reduced_word(y)
    tail = element_from_word(y.datum, [], om)
    letters = [simple_reflection(y.datum, j) for j in word]
    out = set()
    for mask in range(1 << len(letters)):
        x = identity(y.datum)
        for i, s in enumerate(letters):
            if mask >> i & 1:
                x = x * s
        out.add(x * tail)
    return out


# -- parahoric machinery -----------------------------------------------------


@dataclass(frozen=True)
class ParahoricSpec:
    datum: RootDatum
    I: frozenset

    def __post_init__(self):
        labels = set(self.datum.vertex_labels)
        if not self.I:
            raise InvalidIndex("I must be nonempty")
        if not set(self.I) <= labels:
            raise InvalidIndex(f"I must be a subset of {sorted(labels)}")
        object.__setattr__(self, "I", frozenset(self.I))

    @property
    def generator_indices(self):
        return [j for j in self.datum.simple_indices if j not in self.I]


def parahoric_spec(datum: RootDatum, I) -> ParahoricSpec:
    return ParahoricSpec(datum, frozenset(I))


def parahoric_generators(spec: ParahoricSpec):
    return [simple_reflection(spec.datum, j) for j in spec.generator_indices]


@lru_cache(maxsize=None)
def parahoric_subgroup(spec: ParahoricSpec):
    """All elements of W_I (finite since I is nonempty)."""
    gens = parahoric_generators(spec)
    seen = {identity(spec.datum)}
    frontier = list(seen)
    while frontier:
        nxt = []
        for x in frontier:
            for s in gens:
                y = x * s
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return frozenset(seen)


def coset_min(x: WeylElement, spec: ParahoricSpec, side: str = "double") -> WeylElement:
    """Minimal-length element of W_I x, x W_I, or W_I x W_I by greedy descent."""
    if side not in ("left", "right", "double"):
        raise InvalidIndex(f"unknown side {side!r}")
    gens = parahoric_generators(spec)
    improved = True
    while improved:
        improved = False
        lx = length(x)
        for s in gens:
            if side in ("left", "double"):
                y = s * x
                if length(y) < lx:
                    x, lx = y, length(y)
                    improved = True
            if side in ("right", "double"):
                y = x * s
                if length(y) < lx:
                    x, lx = y, length(y)
                    improved = True
    return x


def elements_of_length_leq(datum: RootDatum, kappa0: int, max_len: int):
    """All elements x with kappa(x) = kappa0 and length(x) <= max_len.

    Returned as {length: set of elements}.  BFS by left multiplication
    with affine simple reflections starting from the length-0 element
    of the component; every element of positive length has a left
    descent, so the sweep is exhaustive.
    """
    base = element_from_word(datum, [], kappa0)
    levels = {0: {base}}
    simples = [simple_reflection(datum, j) for j in datum.simple_indices]
    for ln in range(max_len):
        nxt = set()
        for x in levels[ln]:
            for s in simples:
                y = s * x
                if length(y) == ln + 1:
                    nxt.add(y)
        if not nxt:
            break
        levels[ln + 1] = nxt
    return levels


# -- alcove vertices ---------------------------------------------------------


def _affine_map_of(x: WeylElement):
    """(A, b) with x acting as p -> A p + b on Q^coord_len."""
    d = x.datum
    m = d.coord_len
    cols = []
    for k in range(m):
        e = tuple(Fraction(int(i == k)) for i in range(m))
        cols.append(d.act_coweight(x.u, e))
    A = [[cols[k][r] for k in range(m)] for r in range(m)]
    b = [Fraction(v) for v in x.lam]
    return A, b


def solve_exact(rows, rhs):
    """Solve the linear system rows . x = rhs over Q; require a unique solution."""
    m = len(rows[0])
    aug = [list(r) + [v] for r, v in zip(rows, rhs)]
    pivots = []
    row = 0
    for col in range(m):
        pr = next((r for r in range(row, len(aug)) if aug[r][col] != 0), None)
        if pr is None:
            continue
        aug[row], aug[pr] = aug[pr], aug[row]
        inv = Fraction(1, 1) / aug[row][col]
        aug[row] = [v * inv for v in aug[row]]
        for r in range(len(aug)):
            if r != row and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [v - f * w for v, w in zip(aug[r], aug[row])]
        pivots.append(col)
        row += 1
    for r in range(row, len(aug)):
        if aug[r][m] != 0:
            raise InvalidIndex("inconsistent vertex system")
    if len(pivots) != m:
        raise InvalidIndex("vertex system is underdetermined")
    sol = [Fraction(0)] * m
    for r, col in enumerate(pivots):
        sol[col] = aug[r][m]
    return tuple(sol)


@lru_cache(maxsize=None)
def alcove_vertices(datum: RootDatum):
    """Base-alcove vertex representatives a_i, one per vertex label.

    For GL the standard representatives a_0 = 0, a_i = omega_i are used
    (the test suite verifies they are fixed by every s_j, j != i).  For
    GSp the vertex a_i is derived as the fixed point of all implemented
    reflections s_j with j != i, normalized to similitude coordinate 0;
    nothing is hard-coded.
    """
    out = {}
    if datum.kind == "GL":
        d = datum.n
        for i in datum.vertex_labels:
            out[i] = tuple(Fraction(int(k < i)) for k in range(d))
        return out
    m = datum.coord_len
    for i in datum.vertex_labels:
        rows, rhs = [], []
        for j in datum.simple_indices:
            if j == i:
                continue
            A, b = _affine_map_of(simple_reflection(datum, j))
            for r in range(m):
                row = [A[r][k] - Fraction(int(r == k)) for k in range(m)]
                rows.append(row)
                rhs.append(-b[r])
        # normalize along the central line: similitude coordinate 0
        rows.append([Fraction(int(k == m - 1)) for k in range(m)])
        rhs.append(Fraction(0))
        out[i] = solve_exact(rows, rhs)
    return out
