"""Finite models of the special fibers of lattice-chain local models.

A ChainModel packages, for each chain slot, the module
M_t = (F_p[Pi]/Pi^e)^D presented as an F_p-space of dimension D*e
(D = d for GL, 2g for GSp) together with the nilpotent operator N
(multiplication by Pi), the transition matrices between consecutive
slots, and the wrap map (multiplication by pi from the last slot back
to the first).  All matrices are derived from explicit lattice bases:

  GL:   Lambda_i   = <pi^-1 e_1 .. pi^-1 e_i, e_{i+1} .. e_d>
  GSp:  Lambda_i   = <pi^-1 e_1 .. pi^-1 e_i, e_{i+1} .. e_g,
                      delta f_1 .. delta f_g>
        Lambda_-i  = <e_1 .. e_g, pi delta f_1 .. pi delta f_i,
                      delta f_{i+1} .. delta f_g>

with the tame normalization delta = pi^(1-e) (hence the requirement
p does not divide e).  The GSp pairing is the coefficient of Pi^(e-1)
of the standard symplectic form, scaled by the unit e (the image of
the trace form under the tame normalization).

Everything is special-fiber-only: the Eisenstein coefficients vanish
and Q(T) = T^e.  The determinant condition of the naive moduli problem
is automatic at field-valued points (det(c_0 + nilpotent) = c_0^rank)
and is therefore documented here rather than tested per point.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadRanks,
    IncompatibleElement,
    SignatureCollision,
    SingularGram,
    WildRamification,
)
from . import linalg
from .linalg import Field, FieldMatrix, Subspace
from .weyl import RootDatum, WeylElement, kappa

# ---------------------------------------------------------------------------
# model construction


def _gl_slot_basis(d, i):
    # pi^-1 e_1 .. pi^-1 e_i, e_{i+1} .. e_d
    return [(("e", m), -1 if m <= i else 0) for m in range(1, d + 1)]

def _gsp_slot_basis(g, e, label):
    if label >= 0:
        i = label
        basis = [(("e", m), -1 if m <= i else 0) for m in range(1, g + 1)]
        basis += [(("f", m), 1 - e) for m in range(1, g + 1)]
    else:
        i = -label
        basis = [(("e", m), 0) for m in range(1, g + 1)]
        basis += [(("f", m), 2 - e if m <= i else 1 - e) for m in range(1, g + 1)]
    return basis


class ChainModel:
    """One periodic lattice chain reduced to the special fiber."""

    def __init__(self, kind, size, e, I, field, r_vec):
        self.kind = kind
        self.n = size  # d for GL, g for GSp
        self.e = e
        self.I = tuple(sorted(set(I)))
        self.field = field
        self.r_vec = tuple(r_vec)
        self.D = size if kind == "GL" else 2 * size

        if kind == "GL":
            self.slots = self.I
            self.slot_basis = {i: _gl_slot_basis(size, i) for i in self.slots}
        else:
            neg = [-i for i in sorted(self.I, reverse=True) if i > 0]
            self.slots = tuple(neg) + self.I
            self.slot_basis = {
                t: _gsp_slot_basis(size, e, t) for t in self.slots
            }
        self.dim = self.D * e

        self.N = self._pi_matrix()
        self.T = [
            self._inclusion(self.slots[t], self.slots[t + 1], 0)
            for t in range(len(self.slots) - 1)
        ]
        self.T_wrap = self._inclusion(self.slots[-1], self.slots[0], 1)
        self.gram = {}
        if kind == "GSp":
            for i in self.I:
                self.gram[i] = self._gram(i)
        self._check_invariants()

    # -- coordinates: basis vector (m_idx, j) sits at column m_idx*e + j ----

    def coord(self, m_idx, j):
        return m_idx * self.e + j

    @property
    def rank(self):
        """The rank of the chain subspaces F_t."""
        if self.kind == "GL":
            return sum(self.r_vec)
        return self.e * self.n

    def level_rank(self, j):
        """rank of F^j in a splitting flag (1 <= j <= e)."""
        if self.kind == "GL":
            return sum(self.r_vec[:j])
        return j * self.n

    def _pi_matrix(self):
        a = np.zeros((self.dim, self.dim), dtype=np.int64)
        for m in range(self.D):
            for j in range(self.e - 1):
                a[self.coord(m, j + 1), self.coord(m, j)] = 1
        return FieldMatrix(self.field, a)

    def _inclusion(self, src, dst, extra_pi):
        """Matrix of M_src -> M_dst induced by inclusion (times pi^extra_pi)."""
        sb, db = self.slot_basis[src], self.slot_basis[dst]
        pos = {sym: (m, a) for m, (sym, a) in enumerate(db)}
        a = np.zeros((self.dim, self.dim), dtype=np.int64)
        for m_src, (sym, a_src) in enumerate(sb):
            m_dst, a_dst = pos[sym]
            k = a_src + extra_pi - a_dst
            if k < 0:
                raise BadRanks("slot bases do not form an increasing chain")
            for j in range(self.e):
                if j + k < self.e:
                    a[self.coord(m_dst, j + k), self.coord(m_src, j)] = 1
        return FieldMatrix(self.field, a)

    def _gram(self, i):
        """Pairing of M_{slot i} with M_{slot -i} (self-pairing for i = 0)."""
        p = self.field.p
        unit = self.e % p
        left = self.slot_basis[i]
        right = self.slot_basis[-i]
        a = np.zeros((self.dim, self.dim), dtype=np.int64)
        for m1, ((s1, idx1), a1) in enumerate(left):
            for m2, ((s2, idx2), a2) in enumerate(right):
                if idx1 != idx2 or s1 == s2:
                    continue
                sign = 1 if s1 == "e" else -1
                for j in range(self.e):
                    for k in range(self.e):
                        if j + k + a1 + a2 == 0:
                            a[self.coord(m1, j), self.coord(m2, k)] = sign * unit
        m = FieldMatrix(self.field, a)
        if linalg.rank(m) != self.dim:
            raise SingularGram("chain pairing is not perfect")
        return m

    def _check_invariants(self):
        p = self.field.p
        power = FieldMatrix.identity(self.field, self.dim)
        for _ in range(self.e):
            power = self.N @ power
        assert power == FieldMatrix.zero(self.field, self.dim, self.dim)
        maps = self.T + [self.T_wrap]
        for t, f in enumerate(maps):
            assert f @ self.N == self.N @ f
        comp = FieldMatrix.identity(self.field, self.dim)
        for f in maps:
            comp = f @ comp
        assert comp == self.N  # full loop is multiplication by Pi
        for i, g in self.gram.items():
            assert self.N.transpose() @ g == g @ self.N
            if i == 0:
                arr = g.array
                assert np.array_equal(arr.T, (-arr) % p)
                assert not arr.diagonal().any()

    def slot_index(self, label):
        return self.slots.index(label)

    def __repr__(self):
        return (
            f"ChainModel({self.kind}, n={self.n}, e={self.e}, I={self.I}, "
            f"p={self.field.p}, r={self.r_vec})"
        )


def build_model(kind, size, e, I, p, r_vec=None) -> ChainModel:
    """Construct the special-fiber chain model.

    r_vec lists the per-embedding ranks (r_1 .. r_e) for GL; for GSp it
    must be (g, ..., g) and may be omitted.
    """
    field = Field(p)
    I = sorted(set(I))
    if kind == "GL":
        if size < 1 or not I or not set(I) <= set(range(size)):
            raise BadRanks(f"I must be a nonempty subset of 0..{size - 1}")
        if r_vec is None:
            raise BadRanks("GL model needs the rank vector (r_1..r_e)")
        r_vec = tuple(r_vec)
        if len(r_vec) != e or any(not 0 <= r <= size for r in r_vec):
            raise BadRanks("need length-e rank vector with 0 <= r_l <= d")
    elif kind == "GSp":
        if size < 1 or not I or not set(I) <= set(range(size + 1)):
            raise BadRanks(f"I must be a nonempty subset of 0..{size}")
        if e % p == 0:
            raise WildRamification(f"p={p} divides e={e}")
        if r_vec is None:
            r_vec = (size,) * e
        r_vec = tuple(r_vec)
        if r_vec != (size,) * e:
            raise BadRanks("GSp ranks are forced to (g, ..., g)")
    else:
        raise BadRanks(f"unknown kind {kind!r}")
    return ChainModel(kind, size, e, I, field, r_vec)


# ---------------------------------------------------------------------------
# points


class ChainPoint:
    """An F_p-point of the naive model: one subspace per chain slot."""

    __slots__ = ("model", "subspaces")

    def __init__(self, model: ChainModel, subspaces):
        self.model = model
        self.subspaces = dict(subspaces)

    def as_tuple(self):
        return tuple(self.subspaces[t] for t in self.model.slots)

    def __eq__(self, other):
        return (
            isinstance(other, ChainPoint)
            and self.model is other.model
            and self.as_tuple() == other.as_tuple()
        )

    def __hash__(self):
        return hash(self.as_tuple())

    def __repr__(self):
        dims = {t: s.dim for t, s in self.subspaces.items()}
        return f"ChainPoint({dims})"


class FlagPoint:
    """An F_p-point of the splitting model: a flag per chain slot.

    flags[t] = (F^1_t, ..., F^e_t), increasing, with F^e the naive
    chain subspace.
    """

    __slots__ = ("model", "flags")

    def __init__(self, model: ChainModel, flags):
        self.model = model
        self.flags = {t: tuple(fs) for t, fs in flags.items()}

    def top(self) -> ChainPoint:
        return ChainPoint(self.model, {t: fs[-1] for t, fs in self.flags.items()})

    def as_tuple(self):
        return tuple(self.flags[t] for t in self.model.slots)

    def __eq__(self, other):
        return (
            isinstance(other, FlagPoint)
            and self.model is other.model
            and self.as_tuple() == other.as_tuple()
        )

    def __hash__(self):
        return hash(self.as_tuple())


def _candidate_filter(model: ChainModel, label, budget, pivot_sets=None):
    cands = []
    for s in linalg.enumerate_subspaces(
        model.dim, model.rank, model.field, budget=budget, pivot_sets=pivot_sets
    ):
        if not linalg.stable_under(s, model.N):
            continue
        if model.kind == "GSp" and label == 0 and linalg.perp(s, model.gram[0]) != s:
            continue
        cands.append(s)
    return cands


def _candidate_worker(args):
    model, label, pivot_sets, budget = args
    return [s.basis for s in _candidate_filter(model, label, budget, pivot_sets)]


def _slot_candidates(model: ChainModel, budget, jobs=1):
    """Per independent slot label, the N-stable subspaces of the right rank.

    For GSp only the nonnegative labels are independent; F_{-i} is the
    pairing annihilator of F_i (forced by the ranks), and for i = 0 the
    subspace must annihilate itself.  With jobs > 1 the enumeration is
    partitioned by pivot-column set across a process pool; chunks are
    reassembled in order, so the output is identical to the serial run.
    """
    labels = model.slots if model.kind == "GL" else model.I
    out = {}
    if jobs <= 1:
        for label in labels:
            out[label] = _candidate_filter(model, label, budget)
        return out
    import concurrent.futures

    pivots = list(itertools.combinations(range(model.dim), model.rank))
    chunks = [pivots[k::jobs] for k in range(jobs)]
    order = {piv: k for k, piv in enumerate(pivots)}
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
        for label in labels:
            results = pool.map(
                _candidate_worker,
                [(model, label, chunk, budget) for chunk in chunks],
            )
            cands = [
                Subspace(model.field, model.dim, basis)
                for part in results
                for basis in part
            ]
            # restore the canonical lexicographic stream order
            cands.sort(key=lambda s: (order[tuple(_pivot_cols(s))], s.basis.tobytes()))
            out[label] = cands
    return out


def _pivot_cols(s: Subspace):
    return [int(np.argmax(row != 0)) for row in s.basis]


def _complete_gsp_point(model: ChainModel, chosen):
    """Fill in the negative slots of a GSp point and check the chain conditions."""
    subspaces = dict(chosen)
    for i in model.I:
        if i > 0:
            subspaces[-i] = linalg.perp(subspaces[i], model.gram[i])
    for s in subspaces.values():
        if not linalg.stable_under(s, model.N):
            return None
    return _check_transitions(model, subspaces)

def _check_transitions(model: ChainModel, subspaces):
    for t in range(len(model.slots) - 1):
        src, dst = model.slots[t], model.slots[t + 1]
        if not linalg.image(model.T[t], subspaces[src]).leq(subspaces[dst]):
            return None
    first, last = model.slots[0], model.slots[-1]
    if not linalg.image(model.T_wrap, subspaces[last]).leq(subspaces[first]):
        return None
    return ChainPoint(model, subspaces)


def naive_points(model: ChainModel, budget=None, jobs=1):
    """Yield every F_p-point of the naive special fiber.

    Rank, Pi-stability, transition/wrap compatibility (and for GSp the
    pairing condition F_{-i} = F_i^perp) are tested; the determinant
    condition is automatic at field points and not re-tested.
    """
    cands = _slot_candidates(model, budget, jobs)
    if model.kind == "GSp":
        labels = model.I
        for combo in itertools.product(*(cands[i] for i in labels)):
            pt = _complete_gsp_point(model, dict(zip(labels, combo)))
            if pt is not None:
                yield pt
        return
    for combo in itertools.product(*(cands[t] for t in model.slots)):
        pt = _check_transitions(model, dict(zip(model.slots, combo)))
        if pt is not None:
            yield pt


# ---------------------------------------------------------------------------
# splitting flags


def _level_ok(model: ChainModel, j, level):
    """Check the per-level conditions for a full slot assignment at level j."""
    for t in range(len(model.slots) - 1):
        src, dst = model.slots[t], model.slots[t + 1]
        if not linalg.image(model.T[t], level[src]).leq(level[dst]):
            return False
    if not linalg.image(model.T_wrap, level[model.slots[-1]]).leq(level[model.slots[0]]):
        return False
    if model.kind == "GSp" and j < model.e:
        npow = FieldMatrix.identity(model.field, model.dim)
        for _ in range(model.e - j):
            npow = model.N @ npow
        for i in model.I:
            a, b = level[i], level[-i]
            g = model.gram[i]
            prod = (a.basis @ g.array % model.field.p) @ b.basis.T % model.field.p
            if prod.any():  # mutual isotropy under the chain pairing
                return False
            # perp(b, g^T) lives in the positive slot, perp(a, g) in the negative
            if not linalg.image(npow, linalg.perp(b, g.transpose())).leq(a):
                return False
            if not linalg.image(npow, linalg.perp(a, g)).leq(b):
                return False
    return True


def _flag_search(model: ChainModel, top: ChainPoint, budget, collect):
    """Backtracking search for splitting flags under a naive point.

    Levels are chosen from j = e-1 down to 1; candidates at level j lie
    between N(F^{j+1}) and F^{j+1}, with the dimension pruning rule
    dim N(F^j) <= level_rank(j-1) and N(F^1) = 0 at the bottom.
    Yields dicts {slot: (F^1 .. F^e)} if collect, else just True once.
    """
    e = model.e
    labels = list(model.slots)

    def descend(j, stack):
        # stack maps slot -> list of levels already chosen, top first
        if j == 0:
            flags = {t: tuple(reversed(stack[t])) for t in labels}
            yield flags if collect else True
            return
        per_slot = []
        for t in labels:
            upper = stack[t][-1]
            lower = linalg.image(model.N, upper)
            target = model.level_rank(j)
            opts = []
            if lower.dim <= target:
                for cand in linalg.subspaces_between(lower, upper, target, budget=budget):
                    img = linalg.image(model.N, cand)
                    if img.dim > model.level_rank(j - 1):
                        continue  # pruning: N(F^j) must fit in F^{j-1}
                    if j == 1 and img.dim > 0:
                        continue
                    opts.append(cand)
            per_slot.append(opts)
            if not opts:
                return
        for combo in itertools.product(*per_slot):
            level = dict(zip(labels, combo))
            if not _level_ok(model, j, level):
                continue
            for t in labels:
                stack[t].append(level[t])
            yield from descend(j - 1, stack)
            for t in labels:
                stack[t].pop()

    stack = {t: [top.subspaces[t]] for t in labels}
    yield from descend(e - 1, stack)


def has_splitting_flag(pt: ChainPoint, budget=None) -> bool:
    """Does some splitting flag have this chain point on top?"""
    for _ in _flag_search(pt.model, pt, budget, collect=False):
        return True
    return False


def splitting_points(model: ChainModel, budget=None):
    """Yield every F_p-point of the splitting model."""
    for pt in naive_points(model, budget=budget):
        for flags in _flag_search(model, pt, budget, collect=True):
            yield FlagPoint(model, flags)


def canonical_points(model: ChainModel, budget=None, jobs=1):
    """Naive points admitting a splitting flag (the flat-closure points)."""
    for pt in naive_points(model, budget=budget, jobs=jobs):
        if has_splitting_flag(pt, budget=budget):
            yield pt


# ---------------------------------------------------------------------------
# unramified models


def _mod_p_map(model: ChainModel, src, dst, extra_pi):
    """Transition on Lambda tensor F_p: only exact exponent matches survive."""
    sb, db = model.slot_basis[src], model.slot_basis[dst]
    pos = {sym: (m, a) for m, (sym, a) in enumerate(db)}
    a = np.zeros((model.D, model.D), dtype=np.int64)
    for m_src, (sym, a_src) in enumerate(sb):
        m_dst, a_dst = pos[sym]
        if a_src + extra_pi == a_dst:
            a[m_dst, m_src] = 1
    return FieldMatrix(model.field, a)


def _mod_p_gram(model: ChainModel):
    """Standard symplectic pairing on the residue symbols e_m, f_m."""
    a = np.zeros((model.D, model.D), dtype=np.int64)
    g = model.n
    for m in range(g):
        a[m, g + m] = 1
        a[g + m, m] = -1
    return FieldMatrix(model.field, a)


def unramified_points(model: ChainModel, l: int, budget=None):
    """Points of the single-embedding (Grassmannian-type) model M^l / N^l.

    Chains of rank-r_l subspaces of the residue spaces, compatible with
    the mod-p transition maps; the wrap map is reduced with the
    Eisenstein coefficient sent to 0.  For GSp, F_{-i} is the
    annihilator of F_i under the standard residue symplectic form.
    """
    if not 1 <= l <= model.e:
        raise BadRanks(f"l must be in 1..{model.e}")
    r = model.r_vec[l - 1] if model.kind == "GL" else model.n
    slots = model.slots
    tbars = [
        _mod_p_map(model, slots[t], slots[t + 1], 0) for t in range(len(slots) - 1)
    ]
    wrap = _mod_p_map(model, slots[-1], slots[0], 1)
    gram = _mod_p_gram(model) if model.kind == "GSp" else None

    indep = slots if model.kind == "GL" else model.I
    cands = {}
    for label in indep:
        opts = list(linalg.enumerate_subspaces(model.D, r, model.field, budget=budget))
        if model.kind == "GSp" and label == 0:
            opts = [s for s in opts if linalg.perp(s, gram) == s]
        cands[label] = opts

    for combo in itertools.product(*(cands[t] for t in indep)):
        chosen = dict(zip(indep, combo))
        if model.kind == "GSp":
            for i in model.I:
                if i > 0:
                    chosen[-i] = linalg.perp(chosen[i], gram)
        ok = True
        for t in range(len(slots) - 1):
            if not linalg.image(tbars[t], chosen[slots[t]]).leq(chosen[slots[t + 1]]):
                ok = False
                break
        if ok and not linalg.image(wrap, chosen[slots[-1]]).leq(chosen[slots[0]]):
            ok = False
        if ok:
            yield ChainPoint(model, chosen)


@dataclass(frozen=True)
class TorsorReport:
    splitting_total: int
    unramified_factors: tuple
    passed: bool


def torsor_check(model: ChainModel, budget=None) -> TorsorReport:
    """Compare |splitting points| with the product of the unramified counts."""
    total = sum(1 for _ in splitting_points(model, budget=budget))
    factors = tuple(
        sum(1 for _ in unramified_points(model, l, budget=budget))
        for l in range(1, model.e + 1)
    )
    prod = 1
    for f in factors:
        prod *= f
    return TorsorReport(total, factors, total == prod)


# ---------------------------------------------------------------------------
# standard points, signatures, strata


def _act_on_lattice_vector(w: WeylElement, sym, a, fshift=0):
    """Image of pi^a * sym under the monomial representation of w.

    Translations act by t_lam: e_i -> pi^{lam_i} e_i (and for GSp
    f_i -> pi^{c - lam_i} f_i); the finite part permutes symbols.  GSp
    reflections swap e_i with the rescaled f~_i = delta f_i, so the
    f-exponents are shifted to the delta basis (fshift = 1 - e) before
    acting and shifted back after.
    """
    datum = w.datum
    kind, m = sym[0], sym[1]
    if datum.kind == "GL":
        j = w.u[m - 1]
        return ("e", j + 1), a + w.lam[j]
    if kind == "f":
        a -= fshift
    j = datum._apply_signed(w.u, m if kind == "e" else -m)
    # +-j > 0 means the image is an e-symbol with that index
    c = w.lam[-1]
    if j > 0:
        return ("e", j), a + w.lam[j - 1]
    return ("f", -j), a + c - w.lam[-j - 1] + fshift


def _geometric(w: WeylElement) -> WeylElement:
    """w with the translation part negated.

    The monomial representation of the negated element is the action
    under which the parahoric of I stabilizes every slot lattice, so it
    is the one used to place standard points and to check the chain
    rotation by the length-zero generator.
    """
    return WeylElement(w.datum, w.datum.negate(w.lam), w.u)


def standard_point(w: WeylElement, model: ChainModel) -> ChainPoint:
    """The base point of the stratum of w.

    The chain lattice is L_t = Pi^e w Lambda_t (geometric action); its
    image in M_t = Lambda_t / Pi^e Lambda_t is the chain subspace.  The
    rank of the result must match the model (kappa bookkeeping),
    otherwise IncompatibleElement is raised.
    """
    if (model.kind == "GL") != (w.datum.kind == "GL") or w.datum.n != model.n:
        raise IncompatibleElement("element belongs to a different group")
    wg = _geometric(w)
    fshift = 0 if model.kind == "GL" else 1 - model.e
    e = model.e
    subspaces = {}
    for t in model.slots:
        basis = model.slot_basis[t]
        pos = {sym: (m, a) for m, (sym, a) in enumerate(basis)}
        rows = []
        for sym, a in basis:
            sym2, a2 = _act_on_lattice_vector(wg, sym, a, fshift)
            m_dst, a_dst = pos[sym2]
            k = a2 + e - a_dst
            if k < 0:
                raise IncompatibleElement("w^{-1} lattice escapes the chain lattice")
            for j in range(k, e):
                v = np.zeros(model.dim, dtype=np.int64)
                v[model.coord(m_dst, j)] = 1
                rows.append(v)
        sub = Subspace.from_rows(model.field, model.dim, np.asarray(rows))
        if sub.dim != model.rank:
            raise IncompatibleElement(
                f"standard chain has rank {sub.dim}, model expects {model.rank}"
            )
        subspaces[t] = sub
    return ChainPoint(model, subspaces)


class _Ambient:
    """Common ambient A = Pi^-1 Lambda_max / Pi^e Lambda_min for signatures."""

    def __init__(self, model: ChainModel):
        self.model = model
        first, last = model.slots[0], model.slots[-1]
        amin = {sym: a for sym, a in model.slot_basis[first]}
        amax = {sym: a for sym, a in model.slot_basis[last]}
        self.top = {sym: amax[sym] - 1 for sym in amax}
        self.bot = {sym: amin[sym] + model.e for sym in amin}
        self.index = {}
        for sym in sorted(self.top):
            for a in range(self.top[sym], self.bot[sym]):
                self.index[(sym, a)] = len(self.index)
        self.dim = len(self.index)

    def vector(self, sym, a):
        v = np.zeros(self.dim, dtype=np.int64)
        if a < self.bot[sym]:
            v[self.index[(sym, a)]] = 1
        return v

    def lattice(self, label, n):
        """Pi^n Lambda_label as a subspace of A."""
        rows = []
        for sym, a in self.model.slot_basis[label]:
            for b in range(max(a + n, self.top[sym]), self.bot[sym]):
                rows.append(self.vector(sym, b))
        return Subspace.from_rows(self.model.field, self.dim, np.asarray(rows))

    def chain_subspace(self, label, sub: Subspace):
        """L = F + Pi^e Lambda_label inside A."""
        basis = self.model.slot_basis[label]
        rows = []
        for row in sub.basis:
            v = np.zeros(self.dim, dtype=np.int64)
            for m, (sym, a) in enumerate(basis):
                for j in range(self.model.e):
                    c = row[self.model.coord(m, j)]
                    if c and a + j < self.bot[sym]:
                        v[self.index[(sym, a + j)]] += c
            rows.append(v % self.model.field.p)
        for sym, a in basis:
            for b in range(a + self.model.e, self.bot[sym]):
                rows.append(self.vector(sym, b))
        return Subspace.from_rows(self.model.field, self.dim, np.asarray(rows))


def signature(pt: ChainPoint):
    """Intersection-dimension data identifying the stratum of a point.

    d(t, t', n) = dim(L_t meet Pi^n Lambda_{t'}) over all slot pairs
    and -1 <= n <= e, computed inside the common ambient space.
    """
    model = pt.model
    amb = _Ambient(model)
    chains = {t: amb.chain_subspace(t, pt.subspaces[t]) for t in model.slots}
    out = []
    for t in model.slots:
        for t2 in model.slots:
            for n in range(-1, model.e + 1):
                out.append(linalg.meet(chains[t], amb.lattice(t2, n)).dim)
    return tuple(out)


@dataclass
class StratumReport:
    """Matched decomposition {stratum -> observed point count}."""

    rows: list  # (DoubleCoset, observed)
    unmatched: int

    @property
    def passed(self):
        return self.unmatched == 0


def classify_strata(points, adm, model: ChainModel) -> StratumReport:
    """Assign each point to the stratum whose standard point it matches.

    Primary key is the signature; if two standard points collide
    (possible in principle for GSp) GL chains fall back to an exact
    orbit computation under the elementary chain automorphisms, while
    GSp re-raises SignatureCollision (the fallback group would have to
    preserve the pairing as well).
    """
    points = list(points)
    sigs = {}
    for c in adm.classes:
        try:
            sp = standard_point(c.min_rep, model)
        except IncompatibleElement:
            continue
        sig = signature(sp)
        if sig in sigs:
            if model.kind == "GL":
                return _classify_by_orbits(points, adm, model)
            raise SignatureCollision(
                f"standard points of {sigs[sig].min_rep} and {c.min_rep} coincide"
            )
        sigs[sig] = c
    counts = {}
    unmatched = 0
    for pt in points:
        c = sigs.get(signature(pt))
        if c is None:
            unmatched += 1
            continue
        counts[c] = counts.get(c, 0) + 1
    rows = sorted(counts.items(), key=lambda kv: kv[0].min_rep.lam)
    return StratumReport(rows, unmatched)


# ---------------------------------------------------------------------------
# chain automorphisms (signature invariance, collision fallback)


def _coeff_valuations(model: ChainModel):
    """Minimal pi-divisibility of entry (m, m') forced by lattice stability."""
    syms = [sym for sym, _ in model.slot_basis[model.slots[0]]]
    valuation = {}
    for m, s_out in enumerate(syms):
        for m2, s_in in enumerate(syms):
            v = 0
            for t in model.slots:
                exps = {sym: a for sym, a in model.slot_basis[t]}
                v = max(v, exps[s_out] - exps[s_in])
            valuation[(m, m2)] = v
    return valuation


def _induced_slot_matrices(model: ChainModel, coeffs):
    """Slot matrices of the O_F-linear map with power-series coefficient
    array coeffs[m, m', k] (entry (m, m') = sum_k c_k pi^k), or None if
    the induced map fails to be invertible on some slot."""
    e, D = model.e, model.D
    mats = {}
    for t in model.slots:
        exps = [a for _, a in model.slot_basis[t]]
        a = np.zeros((model.dim, model.dim), dtype=np.int64)
        for m2 in range(D):
            for j2 in range(e):
                for m in range(D):
                    for k in range(e):
                        if not coeffs[m, m2, k]:
                            continue
                        j_out = k + j2 + exps[m2] - exps[m]
                        if 0 <= j_out < e:
                            a[model.coord(m, j_out), model.coord(m2, j2)] = coeffs[m, m2, k]
        f = FieldMatrix(model.field, a)
        if linalg.rank(f) != model.dim:
            return None
        mats[t] = f
    return mats


def random_chain_automorphism(model: ChainModel, rng):
    """A random element of the finite chain automorphism group.

    Sampled as an O_F-linear map of the ambient F^D that preserves
    every slot lattice: entry (m, m') is a truncated power series whose
    low coefficients vanish as dictated by the exponent gaps of the
    slot bases.  Such a map automatically commutes with Pi, the
    transitions and the wrap; invertibility is checked per slot and the
    draw is retried on failure.  Returns {slot: FieldMatrix}.
    """
    p, e, D = model.field.p, model.e, model.D
    valuation = _coeff_valuations(model)
    while True:
        coeffs = np.asarray(rng.integers(0, p, size=(D, D, e)), dtype=np.int64)
        for (m, m2), v in valuation.items():
            coeffs[m, m2, :v] = 0
        mats = _induced_slot_matrices(model, coeffs)
        if mats is not None:
            return mats


def chain_automorphism_generators(model: ChainModel):
    """Elementary generators of the chain automorphism group (GL chains).

    Transvections 1 + c pi^k E_{m m'} at every admissible valuation k,
    plus diagonal unit rescalings; these generate the stabilizer of the
    chain.
    """
    p, e, D = model.field.p, model.e, model.D
    valuation = _coeff_valuations(model)
    ident = np.zeros((D, D, e), dtype=np.int64)
    for m in range(D):
        ident[m, m, 0] = 1
    gens = []
    for m in range(D):
        for m2 in range(D):
            lo = 1 if m == m2 else valuation[(m, m2)]
            for k in range(lo, e):
                for c in range(1, p):
                    coeffs = ident.copy()
                    coeffs[m, m2, k] += c
                    mats = _induced_slot_matrices(model, coeffs)
                    if mats is not None:
                        gens.append(mats)
        for c in range(2, p):
            coeffs = ident.copy()
            coeffs[m, m, 0] = c
            mats = _induced_slot_matrices(model, coeffs)
            if mats is not None:
                gens.append(mats)
    return gens


def apply_chain_automorphism(auto, pt: ChainPoint) -> ChainPoint:
    return ChainPoint(
        pt.model, {t: linalg.image(auto[t], s) for t, s in pt.subspaces.items()}
    )


def _classify_by_orbits(points, adm, model: ChainModel) -> StratumReport:
    """Exact fallback: orbits under the elementary chain automorphisms,
    matched to the orbit of each standard point."""
    gens = chain_automorphism_generators(model)
    points = list(points)
    orbit_of = {}
    n_orbits = 0
    for pt in points:
        if orbit_of.get(pt) is not None:
            continue
        tag = n_orbits
        n_orbits += 1
        frontier = [pt]
        orbit_of[pt] = tag
        while frontier:
            cur = frontier.pop()
            for g in gens:
                nxt = apply_chain_automorphism(g, cur)
                if orbit_of.get(nxt) is None:
                    orbit_of[nxt] = tag
                    frontier.append(nxt)
    tag_class = {}
    for c in adm.classes:
        try:
            sp = standard_point(c.min_rep, model)
        except IncompatibleElement:
            continue
        tag = orbit_of.get(sp)
        if tag is None:
            continue
        if tag in tag_class:
            raise SignatureCollision(
                "two standard points lie in one chain-automorphism orbit"
            )
        tag_class[tag] = c
    counts = {}
    unmatched = 0
    for pt in points:
        c = tag_class.get(orbit_of[pt])
        if c is None:
            unmatched += 1
        else:
            counts[c] = counts.get(c, 0) + 1
    rows = sorted(counts.items(), key=lambda kv: kv[0].min_rep.lam)
    return StratumReport(rows, unmatched)
