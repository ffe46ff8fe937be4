"""Actions, 2-cocycles, semidirect products, realization and equivalence.

A cocycle for a datum (Q, I) bundles factor sets (one for the group
operation, one per ring scalar, one per multilinear operation symbol)
with an action table.  The semidirect product built from a cocycle is a
raw operation table on the set I x Q: it need not satisfy the module or
multilinearity axioms, and a legality check records whether it does.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import ConsistencyError, MlexError, ValidationError
from .modcore import LinMap, mod_elements
from .algebra import (
    Algebra,
    Ideal,
    algebra_from_ops,
    commutator,
    find_isomorphism,
    is_homomorphism,
    quotient,
    series,
    subalgebra,
    whole_ideal,
)
from . import termlang


def proper_subsets(n):
    """Nonempty proper subsets of {0..n-1} as sorted tuples, shortest first."""
    out = []
    for size in range(1, n):
        out.extend(itertools.combinations(range(n), size))
    return out


def substitute(vec, slots, values):
    """Replace vec[i] by the matching entry of values for i in slots."""
    vec = list(vec)
    for i, v in zip(slots, values):
        vec[i] = v
    return tuple(vec)


class Action:
    """Tables a(f, s): Q^n x I^n -> I for every operation f and every
    nonempty proper slot subset s.

    Values depend only on the Q-entries outside s and the I-entries
    inside s, so tables are keyed by that restriction.
    """

    def __init__(self, Q, I, tables=None):
        if Q.signature() != I.signature():
            raise MlexError("datum algebras carry different signatures")
        if Q.module.modulus != I.module.modulus:
            raise MlexError("datum algebras use different moduli")
        self.Q = Q
        self.I = I
        self.tables = {}
        for f, op in Q.ops.items():
            for s in proper_subsets(op.arity):
                self.tables[(f, s)] = {}
        for key, table in (tables or {}).items():
            if key not in self.tables:
                raise MlexError(f"no action slot {key!r} in this signature")
            self.tables[key] = dict(table)
        self._complete()

    def _complete(self):
        for (f, s), table in self.tables.items():
            n = self.Q.op_arity(f)
            off = [i for i in range(n) if i not in s]
            for qoff in itertools.product(mod_elements(self.Q.module), repeat=len(off)):
                for asub in itertools.product(mod_elements(self.I.module), repeat=len(s)):
                    table.setdefault((qoff, asub), self.I.module.zero())

    def slots(self):
        return sorted(self.tables, key=lambda k: (k[0], len(k[1]), k[1]))

    def off_slots(self, f, s):
        return tuple(i for i in range(self.Q.op_arity(f)) if i not in s)

    def value(self, f, s, qvec, avec):
        off = self.off_slots(f, s)
        key = (tuple(qvec[i] for i in off), tuple(avec[i] for i in s))
        return self.tables[(f, s)][key]

    def validate(self):
        """The conditions making the tables a genuine action (code T4)."""
        I, Q = self.I, self.Q
        for (f, s), table in self.tables.items():
            off = self.off_slots(f, s)
            for (qoff, asub), value in table.items():
                if any(q.is_zero() for q in qoff) and not value.is_zero():
                    raise ValidationError(
                        f"action a({f},{_show_s(s)}) nonzero at zero outside-slot entry",
                        clause="T4",
                        where=f"({_fmt(qoff)}|{_fmt(asub)})",
                    )
            # additivity in each distinguished slot
            for pos in range(len(s)):
                for (qoff, asub) in table:
                    for extra in mod_elements(I.module):
                        bumped = list(asub)
                        bumped[pos] = I.module.add(bumped[pos], extra)
                        other = list(asub)
                        other[pos] = extra
                        lhs = table[(qoff, tuple(bumped))]
                        rhs = I.module.add(table[(qoff, asub)], table[(qoff, tuple(other))])
                        if lhs != rhs:
                            raise ValidationError(
                                f"action a({f},{_show_s(s)}) not additive in slot {s[pos] + 1}",
                                clause="T4",
                                where=f"({_fmt(qoff)}|{_fmt(asub)})",
                            )
                for (qoff, asub) in table:
                    for r in range(I.module.modulus):
                        scaled = list(asub)
                        scaled[pos] = I.module.scalar(r, scaled[pos])
                        if table[(qoff, tuple(scaled))] != I.module.scalar(
                            r, table[(qoff, asub)]
                        ):
                            raise ValidationError(
                                f"action a({f},{_show_s(s)}) not scalar-linear in slot {s[pos] + 1}",
                                clause="T4",
                                where=f"({_fmt(qoff)}|{_fmt(asub)})",
                            )
        return True

    def is_trivial(self):
        return all(
            v.is_zero() for table in self.tables.values() for v in table.values()
        )

    def is_unary(self):
        """No action term with more than one distinguished slot is nonzero."""
        return all(
            v.is_zero()
            for (f, s), table in self.tables.items()
            if len(s) > 1
            for v in table.values()
        )

    def unary_slots(self):
        return [(f, s) for (f, s) in self.slots() if len(s) == 1]

    @staticmethod
    def trivial(Q, I):
        return Action(Q, I)

    def canonical_key(self):
        out = []
        for f, s in self.slots():
            table = self.tables[(f, s)]
            for key in sorted(table, key=_reduced_key_order):
                out.append(table[key].coords)
        return tuple(out)

    def same_datum(self, other):
        return self.Q == other.Q and self.I == other.I

    def __eq__(self, other):
        return (
            isinstance(other, Action)
            and self.same_datum(other)
            and self.tables == other.tables
        )


def _reduced_key_order(key):
    qoff, asub = key
    return (tuple(q.coords for q in qoff), tuple(a.coords for a in asub))


def _fmt(vec):
    return ",".join(str(v) for v in vec)


def _show_s(s):
    return "{" + ",".join(str(i + 1) for i in s) + "}"


def enumerate_actions(Q, I, budget=None):
    """All actions on the datum, smallest canonical key first."""
    free_cells = []
    for f, op in sorted(Q.ops.items()):
        n = op.arity
        for s in proper_subsets(n):
            off = tuple(i for i in range(n) if i not in s)
            nonzero_q = [e for e in mod_elements(Q.module) if not e.is_zero()]
            for qoff in itertools.product(nonzero_q, repeat=len(off)):
                for gen_idx in itertools.product(range(I.module.rank), repeat=len(s)):
                    orders = [I.module.factors[g] for g in gen_idx]
                    candidates = [
                        v
                        for v in mod_elements(I.module)
                        if all(I.module.scalar(d, v).is_zero() for d in orders)
                    ]
                    free_cells.append(((f, s, qoff, gen_idx), candidates))
    total = 1
    for _, cands in free_cells:
        total *= len(cands)
    if budget is not None and total > budget:
        from .errors import BudgetExceeded

        raise BudgetExceeded(total, budget)
    actions = []
    for assignment in itertools.product(*(c for _, c in free_cells)):
        tables = {}
        for ((f, s, qoff, gen_idx), _), value in zip(free_cells, assignment):
            tables.setdefault((f, s), {})[(qoff, gen_idx)] = value
        actions.append(_action_from_generator_tables(Q, I, tables))
    actions.sort(key=lambda a: a.canonical_key())
    return actions


def _action_from_generator_tables(Q, I, gen_tables):
    """Extend generator-level tables multilinearly to a full Action."""
    tables = {}
    for f, op in Q.ops.items():
        n = op.arity
        for s in proper_subsets(n):
            off = tuple(i for i in range(n) if i not in s)
            table = {}
            gen_cells = gen_tables.get((f, s), {})
            for qoff in itertools.product(mod_elements(Q.module), repeat=len(off)):
                zero_forced = any(q.is_zero() for q in qoff)
                for asub in itertools.product(mod_elements(I.module), repeat=len(s)):
                    if zero_forced:
                        table[(qoff, asub)] = I.module.zero()
                        continue
                    acc = I.module.zero()
                    for gen_idx in itertools.product(
                        range(I.module.rank), repeat=len(s)
                    ):
                        coeff = 1
                        for a, g in zip(asub, gen_idx):
                            coeff = (coeff * a.coords[g]) % I.module.modulus
                            if coeff == 0:
                                break
                        if coeff:
                            base = gen_cells.get((qoff, gen_idx), I.module.zero())
                            acc = I.module.add(acc, I.module.scalar(coeff, base))
                    table[(qoff, asub)] = acc
            tables[(f, s)] = table
    return Action(Q, I, tables)


class Cocycle:
    """Factor sets plus an action for a datum (Q, I).

    Tables are dense: every argument tuple has an explicit entry, and
    the normalization cells demanded by conditions T1-T3 are validated.
    """

    def __init__(self, action, tplus, tr, tf):
        self.action = action
        self.Q = action.Q
        self.I = action.I
        self.tplus = dict(tplus)
        self.tr = dict(tr)
        self.tf = dict(tf)
        self._fill()

    def _fill(self):
        zero = self.I.module.zero()
        qs = mod_elements(self.Q.module)
        for x in qs:
            for y in qs:
                self.tplus.setdefault((x, y), zero)
        for r in range(self.Q.module.modulus):
            for x in qs:
                self.tr.setdefault((r, x), zero)
        for f, op in self.Q.ops.items():
            for xs in itertools.product(qs, repeat=op.arity):
                self.tf.setdefault((f, xs), zero)

    def validate(self):
        zeroQ = self.Q.module.zero()
        for (x, y), v in self.tplus.items():
            if (x == zeroQ or y == zeroQ) and not v.is_zero():
                raise ValidationError(
                    "group factor set nonzero on a zero argument",
                    clause="T1",
                    where=f"({x},{y})",
                )
        for (r, x), v in self.tr.items():
            if x == zeroQ and not v.is_zero():
                raise ValidationError(
                    f"scalar factor set for r={r} nonzero at zero",
                    clause="T2",
                    where=f"({x})",
                )
        for (f, xs), v in self.tf.items():
            if any(x == zeroQ for x in xs) and not v.is_zero():
                raise ValidationError(
                    f"factor set for {f} nonzero on a zero argument",
                    clause="T3",
                    where="(" + ",".join(str(x) for x in xs) + ")",
                )
        self.action.validate()
        return True

    # -- constructors ----------------------------------------------------

    @staticmethod
    def zero(Q, I, action=None):
        action = action or Action.trivial(Q, I)
        return Cocycle(action, {}, {}, {})

    @staticmethod
    def from_cells(action, tplus_cells=None, tf_cells=None):
        """Build from sparse factor-set cells; scalar factor sets are the
        telescoped sums forced by writing r*x as repeated addition."""
        Q, I = action.Q, action.I
        T = Cocycle(action, dict(tplus_cells or {}), {}, dict(tf_cells or {}))
        for r in range(Q.module.modulus):
            for x in mod_elements(Q.module):
                acc = I.module.zero()
                for j in range(1, r):
                    acc = I.module.add(acc, T.tplus[(Q.module.scalar(j, x), x)])
                T.tr[(r, x)] = acc
        return T

    def telescoped(self):
        """Are the scalar factor sets the telescoped sums of the group one?"""
        Q, I = self.Q, self.I
        for r in range(Q.module.modulus):
            for x in mod_elements(Q.module):
                acc = I.module.zero()
                for j in range(1, r):
                    acc = I.module.add(acc, self.tplus[(Q.module.scalar(j, x), x)])
                if self.tr[(r, x)] != acc:
                    return False
        return True

    # -- algebraic structure on cocycles over one action ------------------

    def add(self, other):
        self._require_same_action(other)
        I = self.I.module
        return Cocycle(
            self.action,
            {k: I.add(v, other.tplus[k]) for k, v in self.tplus.items()},
            {k: I.add(v, other.tr[k]) for k, v in self.tr.items()},
            {k: I.add(v, other.tf[k]) for k, v in self.tf.items()},
        )

    def sub(self, other):
        self._require_same_action(other)
        I = self.I.module
        return Cocycle(
            self.action,
            {k: I.sub(v, other.tplus[k]) for k, v in self.tplus.items()},
            {k: I.sub(v, other.tr[k]) for k, v in self.tr.items()},
            {k: I.sub(v, other.tf[k]) for k, v in self.tf.items()},
        )

    def _require_same_action(self, other):
        if self.action != other.action:
            raise MlexError("cocycle arithmetic needs a common action")

    def is_group_trivial_table(self):
        return all(v.is_zero() for v in self.tplus.values())

    def is_linear(self):
        return self.action.is_unary()

    def is_action_trivial(self):
        return self.action.is_trivial()

    def factor_sets_zero(self):
        return (
            self.is_group_trivial_table()
            and all(v.is_zero() for v in self.tr.values())
            and all(v.is_zero() for v in self.tf.values())
        )

    def canonical_key(self):
        qs = mod_elements(self.Q.module)
        key = [self.action.canonical_key()]
        key.append(tuple(self.tplus[(x, y)].coords for x in qs for y in qs))
        key.append(
            tuple(
                self.tr[(r, x)].coords
                for r in range(self.Q.module.modulus)
                for x in qs
            )
        )
        tf_part = []
        for f in sorted(self.Q.ops):
            arity = self.Q.op_arity(f)
            for xs in itertools.product(qs, repeat=arity):
                tf_part.append(self.tf[(f, xs)].coords)
        key.append(tuple(tf_part))
        return tuple(key)

    def __eq__(self, other):
        return (
            isinstance(other, Cocycle)
            and self.action == other.action
            and self.tplus == other.tplus
            and self.tr == other.tr
            and self.tf == other.tf
        )

    def same_datum(self, other):
        return self.Q == other.Q and self.I == other.I


class SemidirectProduct:
    """The raw operation table on I x Q defined by a cocycle.

    The table realizes its cocycle whether or not it is a legal algebra;
    ``legality()`` reports whether the module and multilinearity axioms
    hold, and ``to_algebra()`` converts when they do.
    """

    def __init__(self, cocycle):
        self.T = cocycle
        self.Q = cocycle.Q
        self.I = cocycle.I
        self.modulus = self.Q.module.modulus
        self._legal = None
        self._add_cache = {}
        self._op_cache = {}

    def universe(self):
        return [
            (a, x)
            for a in mod_elements(self.I.module)
            for x in mod_elements(self.Q.module)
        ]

    def zero(self):
        return (self.I.module.zero(), self.Q.module.zero())

    def add(self, u, v):
        cached = self._add_cache.get((u, v))
        if cached is not None:
            return cached
        (a, x), (b, y) = u, v
        out = (
            self.I.module.add(self.I.module.add(a, b), self.T.tplus[(x, y)]),
            self.Q.module.add(x, y),
        )
        self._add_cache[(u, v)] = out
        return out

    def neg(self, u):
        a, x = u
        nx = self.Q.module.neg(x)
        return (
            self.I.module.neg(self.I.module.add(a, self.T.tplus[(x, nx)])),
            nx,
        )

    def scalar(self, r, u):
        a, x = u
        r = r % self.modulus
        return (
            self.I.module.add(self.I.module.scalar(r, a), self.T.tr[(r, x)]),
            self.Q.module.scalar(r, x),
        )

    def apply_op(self, name, args):
        key = (name, tuple(args))
        cached = self._op_cache.get(key)
        if cached is not None:
            return cached
        avec = tuple(u[0] for u in args)
        xvec = tuple(u[1] for u in args)
        acc = self.I.eval_op(name, avec)
        n = self.Q.op_arity(name)
        for s in proper_subsets(n):
            acc = self.I.module.add(acc, self.T.action.value(name, s, xvec, avec))
        acc = self.I.module.add(acc, self.T.tf[(name, xvec)])
        out = (acc, self.Q.eval_op(name, xvec))
        self._op_cache[key] = out
        return out

    def op_arity(self, name):
        return self.Q.op_arity(name)

    def embed_kernel(self, a):
        return (a, self.Q.module.zero())

    def lift(self, x):
        return (self.I.module.zero(), x)

    def project(self, u):
        return u[1]

    # -- legality ---------------------------------------------------------

    def legality(self):
        """(ok, reason): do the module and multilinearity axioms hold?"""
        if self._legal is None:
            self._legal = self._check_legality()
        return self._legal

    def is_legal(self):
        return self.legality()[0]

    def _check_legality(self):
        Qm, Im = self.Q.module, self.I.module
        qs = mod_elements(Qm)
        # abelian group laws reduce to conditions on the group factor set
        for x in qs:
            for y in qs:
                if self.T.tplus[(x, y)] != self.T.tplus[(y, x)]:
                    return False, f"addition not commutative at ({x},{y})"
        for x in qs:
            for y in qs:
                for z in qs:
                    lhs = Im.add(self.T.tplus[(x, y)], self.T.tplus[(Qm.add(x, y), z)])
                    rhs = Im.add(self.T.tplus[(y, z)], self.T.tplus[(x, Qm.add(y, z))])
                    if lhs != rhs:
                        return False, f"addition not associative at ({x},{y},{z})"
        # scalars must agree with repeated addition, and m*u must vanish
        universe = self.universe()
        for u in universe:
            acc = self.zero()
            for r in range(self.modulus):
                if self.scalar(r, u) != acc:
                    return False, f"scalar {r} disagrees with repeated addition at {u}"
                acc = self.add(acc, u)
            if acc != self.zero():
                return False, f"element {u} not annihilated by the modulus"
        # multilinearity of every operation in every slot
        for name, op in self.Q.ops.items():
            n = op.arity
            for slot in range(n):
                for args in itertools.product(universe, repeat=n):
                    for v in universe:
                        bumped = list(args)
                        bumped[slot] = self.add(args[slot], v)
                        swapped = list(args)
                        swapped[slot] = v
                        lhs = self.apply_op(name, bumped)
                        rhs = self.add(
                            self.apply_op(name, args), self.apply_op(name, swapped)
                        )
                        if lhs != rhs:
                            return (
                                False,
                                f"operation {name} not additive in slot {slot + 1}",
                            )
        return True, None

    # -- conversion -------------------------------------------------------

    def to_algebra(self):
        """Canonical Algebra plus the encode/decode pair maps."""
        ok, reason = self.legality()
        if not ok:
            raise MlexError(f"semidirect table is not a legal algebra: {reason}")
        items = self.universe()
        op_specs = {
            name: (op.arity, lambda *args, _n=name: self.apply_op(_n, list(args)))
            for name, op in self.Q.ops.items()
        }
        return algebra_from_ops(items, self.add, self.zero(), op_specs, self.modulus)

    def extension_record(self):
        M, encode, decode = self.to_algebra()
        pi_images = []
        for g in M.module.generators():
            pi_images.append(self.project(decode[g]))
        pi = LinMap(M.module, self.Q.module, tuple(pi_images))
        iota = LinMap(
            self.I.module,
            M.module,
            tuple(encode[self.embed_kernel(g)] for g in self.I.module.generators()),
        )
        lifting = {x: encode[self.lift(x)] for x in mod_elements(self.Q.module)}
        return ExtensionRecord(M, self.Q, self.I, pi, iota, lifting), encode, decode


def semidirect(I, Q, T):
    """Convenience constructor; the cocycle already pins the datum."""
    if T.I != I or T.Q != Q:
        raise MlexError("cocycle does not match the datum")
    return SemidirectProduct(T)


@dataclass
class ExtensionRecord:
    """A concrete extension pi: M ->> Q with embedded kernel and lifting."""

    M: Algebra
    Q: Algebra
    I: Algebra
    pi: LinMap
    iota: LinMap
    lifting: dict

    def validate(self):
        if not self.pi.is_surjective():
            raise ValidationError("projection is not surjective")
        if not is_homomorphism(self.M, self.Q, self.pi):
            raise ValidationError("projection is not an algebra homomorphism")
        if not self.iota.is_injective():
            raise ValidationError("kernel embedding is not injective")
        if not is_homomorphism(self.I, self.M, self.iota):
            raise ValidationError("kernel embedding is not an algebra homomorphism")
        if self.iota.image_elements() != self.pi.kernel_elements():
            raise ValidationError("embedded kernel differs from the projection kernel")
        zq = self.Q.module.zero()
        if not self.lifting[zq].is_zero():
            raise ValidationError("lifting does not send zero to zero")
        for x in mod_elements(self.Q.module):
            if self.pi(self.lifting[x]) != x:
                raise ValidationError(f"lifting is not a section at {x}")
        return True

    def kernel_ideal(self):
        elems = frozenset(self.iota.image_elements())
        return Ideal(
            self.M,
            tuple(self.iota(g) for g in self.I.module.generators()),
            elements=elems,
        )

    def iota_inverse(self):
        return {self.iota(a): a for a in mod_elements(self.I.module)}

    def all_liftings(self):
        """Every section of pi fixing zero, in deterministic order."""
        fibers = []
        xs = [x for x in mod_elements(self.Q.module) if not x.is_zero()]
        for x in xs:
            fibers.append(
                sorted(
                    (m for m in mod_elements(self.M.module) if self.pi(m) == x),
                    key=lambda e: e.coords,
                )
            )
        out = []
        zq = self.Q.module.zero()
        for choice in itertools.product(*fibers):
            lift = {zq: self.M.module.zero()}
            lift.update(dict(zip(xs, choice)))
            out.append(lift)
        return out

    def with_lifting(self, lifting):
        return ExtensionRecord(self.M, self.Q, self.I, self.pi, self.iota, lifting)


def realizes(E, T, _ops=None):
    """Do the four realization equations hold for this extension/lifting?"""
    M, Q, I = E.M, E.Q, E.I
    inv = E.iota_inverse()
    l = E.lifting

    def down(m):
        if m not in inv:
            return None
        return inv[m]

    qs = mod_elements(Q.module)
    for x in qs:
        for y in qs:
            got = down(M.module.sub(M.module.add(l[x], l[y]), l[Q.module.add(x, y)]))
            if got != T.tplus[(x, y)]:
                return False
    for r in range(Q.module.modulus):
        for x in qs:
            got = down(M.module.sub(M.module.scalar(r, l[x]), l[Q.module.scalar(r, x)]))
            if got != T.tr[(r, x)]:
                return False
    for f, op in Q.ops.items():
        n = op.arity
        for xs in itertools.product(qs, repeat=n):
            lifted = [l[x] for x in xs]
            got = down(M.module.sub(M.eval_op(f, lifted), l[Q.eval_op(f, xs)]))
            if got != T.tf[(f, xs)]:
                return False
        for s in proper_subsets(n):
            for xs in itertools.product(qs, repeat=n):
                lifted = [l[x] for x in xs]
                for avec in itertools.product(mod_elements(I.module), repeat=n):
                    subbed = substitute(lifted, s, [E.iota(avec[i]) for i in s])
                    got = down(M.eval_op(f, subbed))
                    if got != T.action.value(f, s, xs, avec):
                        return False
    return True


def realizes_raw(raw, T):
    """Realization check for the raw semidirect table with its canonical
    embedding, projection and lifting."""
    Q, I = raw.Q, raw.I
    qs = mod_elements(Q.module)

    def down(u):
        a, x = u
        return a if x.is_zero() else None

    for x in qs:
        for y in qs:
            got = down(
                raw.add(raw.add(raw.lift(x), raw.lift(y)), raw.neg(raw.lift(Q.module.add(x, y))))
            )
            if got != T.tplus[(x, y)]:
                return False
    for r in range(Q.module.modulus):
        for x in qs:
            got = down(
                raw.add(
                    raw.scalar(r, raw.lift(x)),
                    raw.neg(raw.lift(Q.module.scalar(r, x))),
                )
            )
            if got != T.tr[(r, x)]:
                return False
    for f, op in Q.ops.items():
        n = op.arity
        for xs in itertools.product(qs, repeat=n):
            lifted = [raw.lift(x) for x in xs]
            got = down(
                raw.add(raw.apply_op(f, lifted), raw.neg(raw.lift(Q.eval_op(f, xs))))
            )
            if got != T.tf[(f, xs)]:
                return False
        for s in proper_subsets(n):
            for xs in itertools.product(qs, repeat=n):
                lifted = [raw.lift(x) for x in xs]
                for avec in itertools.product(mod_elements(I.module), repeat=n):
                    subbed = substitute(lifted, s, [raw.embed_kernel(avec[i]) for i in s])
                    got = down(raw.apply_op(f, subbed))
                    if got != T.action.value(f, s, xs, avec):
                        return False
    return True


def extract_cocycle(E):
    """The cocycle defined by the extension's lifting."""
    M, Q, I = E.M, E.Q, E.I
    inv = E.iota_inverse()
    l = E.lifting

    def down(m, what):
        if m not in inv:
            raise ConsistencyError(f"{what} landed outside the embedded kernel")
        return inv[m]

    qs = mod_elements(Q.module)
    tplus = {}
    for x in qs:
        for y in qs:
            tplus[(x, y)] = down(
                M.module.sub(M.module.add(l[x], l[y]), l[Q.module.add(x, y)]),
                "group factor set",
            )
    tr = {}
    for r in range(Q.module.modulus):
        for x in qs:
            tr[(r, x)] = down(
                M.module.sub(M.module.scalar(r, l[x]), l[Q.module.scalar(r, x)]),
                "scalar factor set",
            )
    tf = {}
    action_tables = {}
    for f, op in Q.ops.items():
        n = op.arity
        for xs in itertools.product(qs, repeat=n):
            lifted = [l[x] for x in xs]
            tf[(f, xs)] = down(
                M.module.sub(M.eval_op(f, lifted), l[Q.eval_op(f, xs)]),
                f"factor set for {f}",
            )
        for s in proper_subsets(n):
            off = tuple(i for i in range(n) if i not in s)
            table = {}
            for qoff in itertools.product(qs, repeat=len(off)):
                xs = [Q.module.zero()] * n
                for i, q in zip(off, qoff):
                    xs[i] = q
                lifted = [l[x] for x in xs]
                for asub in itertools.product(mod_elements(I.module), repeat=len(s)):
                    subbed = substitute(lifted, s, [E.iota(a) for a in asub])
                    table[(qoff, asub)] = down(M.eval_op(f, subbed), f"action a({f},..)")
            action_tables[(f, s)] = table
    action = Action(Q, I, action_tables)
    T = Cocycle(action, tplus, tr, tf)
    T.validate()
    return T


def psi_isomorphism(E, T=None):
    """The standard map M -> I x Q for the extension's lifting, verified
    as an isomorphism onto the semidirect product of its cocycle."""
    T = T or extract_cocycle(E)
    raw = SemidirectProduct(T)
    inv = E.iota_inverse()
    l = E.lifting

    def psi(m):
        x = E.pi(m)
        return (inv[E.M.module.sub(m, l[x])], x)

    table = {m: psi(m) for m in mod_elements(E.M.module)}
    if len(set(table.values())) != len(table):
        return None
    for u in table:
        for v in table:
            if table[E.M.module.add(u, v)] != raw.add(table[u], table[v]):
                return None
        for r in range(E.M.module.modulus):
            if table[E.M.module.scalar(r, u)] != raw.scalar(r, table[u]):
                return None
    for f, op in E.M.ops.items():
        for args in itertools.product(list(table), repeat=op.arity):
            if table[E.M.eval_op(f, args)] != raw.apply_op(f, [table[a] for a in args]):
                return None
    return table


def all_witness_maps(Q, I):
    """All maps h: Q -> I with h(0) = 0, lexicographic in their tables."""
    xs = [x for x in mod_elements(Q.module) if not x.is_zero()]
    out = []
    for images in itertools.product(mod_elements(I.module), repeat=len(xs)):
        h = {Q.module.zero(): I.module.zero()}
        h.update(dict(zip(xs, images)))
        out.append(h)
    return out


def equivalent(T, Tp):
    """First witness h making (a,x) -> (a - h(x), x) an isomorphism of the
    two semidirect tables, or None."""
    if not T.same_datum(Tp):
        raise MlexError("equivalence requires a common datum")
    raw1, raw2 = SemidirectProduct(T), SemidirectProduct(Tp)
    Q, I = T.Q, T.I
    universe = raw1.universe()
    for h in all_witness_maps(Q, I):
        def gamma(u):
            a, x = u
            return (I.module.sub(a, h[x]), x)

        ok = True
        for u in universe:
            for v in universe:
                if gamma(raw1.add(u, v)) != raw2.add(gamma(u), gamma(v)):
                    ok = False
                    break
            if not ok:
                break
            for r in range(raw1.modulus):
                if gamma(raw1.scalar(r, u)) != raw2.scalar(r, gamma(u)):
                    ok = False
                    break
            if not ok:
                break
        if ok:
            for f, op in Q.ops.items():
                for args in itertools.product(universe, repeat=op.arity):
                    if gamma(raw1.apply_op(f, args)) != raw2.apply_op(
                        f, [gamma(u) for u in args]
                    ):
                        ok = False
                        break
                if not ok:
                    break
        if ok:
            return h
    return None


def coboundary(h, action):
    """The cocycle determined by a lifting change h over a reference action."""
    Q, I = action.Q, action.I
    zq = Q.module.zero()
    if not h[zq].is_zero():
        raise MlexError("witness map must send zero to zero")
    Im = I.module

    def sign(k):
        return 1 if k % 2 == 0 else Im.modulus - 1

    qs = mod_elements(Q.module)
    tplus = {
        (x, y): Im.sub(Im.add(h[x], h[y]), h[Q.module.add(x, y)])
        for x in qs
        for y in qs
    }
    tr = {
        (r, x): Im.sub(Im.scalar(r, h[x]), h[Q.module.scalar(r, x)])
        for r in range(Q.module.modulus)
        for x in qs
    }
    tf = {}
    action_tables = {}
    for f, op in Q.ops.items():
        n = op.arity
        for xs in itertools.product(qs, repeat=n):
            hx = [h[x] for x in xs]
            acc = Im.zero()
            for s in proper_subsets(n):
                acc = Im.add(
                    acc,
                    Im.scalar(sign(1 + len(s)), action.value(f, s, xs, hx)),
                )
            acc = Im.add(acc, Im.scalar(sign(1 + n), I.eval_op(f, hx)))
            acc = Im.sub(acc, h[Q.eval_op(f, xs)])
            tf[(f, xs)] = acc
        for s in proper_subsets(n):
            off = tuple(i for i in range(n) if i not in s)
            table = {}
            for qoff in itertools.product(qs, repeat=len(off)):
                xs = [zq] * n
                for i, q in zip(off, qoff):
                    xs[i] = q
                hx = [h[x] for x in xs]
                for asub in itertools.product(mod_elements(Im), repeat=len(s)):
                    args = substitute(hx, s, asub)
                    acc = Im.zero()
                    for r_set in proper_subsets(n):
                        if set(s) < set(r_set):
                            acc = Im.add(
                                acc,
                                Im.scalar(
                                    sign(1 + len(r_set) - len(s)),
                                    action.value(f, r_set, xs, args),
                                ),
                            )
                    acc = Im.add(acc, Im.scalar(sign(1 + n - len(s)), I.eval_op(f, args)))
                    table[(qoff, asub)] = acc
            action_tables[(f, s)] = table
    G = Cocycle(Action(Q, I, action_tables), tplus, tr, tf)
    G.validate()
    return G


class DatumError(MlexError):
    """The datum algebras fail the variety membership precondition."""


def is_compatible(T, V, check_datum=True):
    """Is the semidirect product of T a legal algebra of the variety V?"""
    if check_datum:
        if not termlang.in_variety(T.Q, V):
            raise DatumError(f"quotient algebra is not in variety {V.name!r}")
        if not termlang.in_variety(T.I, V):
            raise DatumError(f"kernel algebra is not in variety {V.name!r}")
    raw = SemidirectProduct(T)
    if not raw.is_legal():
        return False
    return all(termlang.holds(raw, ident) for ident in V.identities)


def mlf_variety(signature):
    """The largest variety for the signature: no identities beyond the
    module and multilinearity axioms (those are checked by legality)."""
    return termlang.Variety("mlf", signature, ())


def is_h2_morphism(T, Tp, alpha, h, beta, emend=False):
    """Boolean morphism predicate between cocycles over possibly
    different data.

    With ``emend=False`` the third condition is evaluated exactly as
    printed in its source formulation, which applies the kernel-side map
    to quotient elements; that reading only types when both data share
    one carrier algebra, and otherwise raises.  ``emend=True`` switches
    to the corrected reading (quotient map on quotient entries, kernel
    operation of the target kernel).
    """
    Q1, I1, Q2, I2 = T.Q, T.I, Tp.Q, Tp.I
    Im2 = I2.module
    for x in mod_elements(Q1.module):
        for y in mod_elements(Q1.module):
            lhs = alpha(T.tplus[(x, y)])
            rhs = Im2.add(
                Tp.tplus[(beta(x), beta(y))],
                Im2.sub(Im2.add(h[x], h[y]), h[Q1.module.add(x, y)]),
            )
            if lhs != rhs:
                return False
        for r in range(Q1.module.modulus):
            lhs = alpha(T.tr[(r, x)])
            rhs = Im2.add(
                Tp.tr[(r, beta(x))],
                Im2.sub(Im2.scalar(r, h[x]), h[Q1.module.scalar(r, x)]),
            )
            if lhs != rhs:
                return False
    if not emend and Q1 != I1:
        raise MlexError(
            "the literal third morphism condition applies the kernel map to "
            "quotient entries; it only types when Q = I (pass emend=True "
            "for the corrected reading)"
        )
    for f, op in Q1.ops.items():
        n = op.arity
        for s in proper_subsets(n):
            for xs in itertools.product(mod_elements(Q1.module), repeat=n):
                hx = [h[x] for x in xs]
                for avec in itertools.product(mod_elements(I1.module), repeat=n):
                    lhs = alpha(T.action.value(f, s, xs, avec))
                    if emend:
                        mapped_q = tuple(beta(x) for x in xs)
                        kernel_alg = I2
                    else:
                        mapped_q = tuple(alpha(x) for x in xs)
                        kernel_alg = I2
                    mapped_a = tuple(alpha(a) for a in avec)
                    acc = Tp.action.value(f, s, mapped_q, mapped_a)
                    bx = tuple(beta(x) for x in xs)
                    for r_set in proper_subsets(n):
                        if set(s) < set(r_set):
                            args = substitute(hx, s, [mapped_a[i] for i in s])
                            acc = Im2.add(acc, Tp.action.value(f, r_set, bx, args))
                    args = substitute(hx, s, [mapped_a[i] for i in s])
                    acc = Im2.add(acc, kernel_alg.eval_op(f, args))
                    if lhs != acc:
                        return False
    return True


def kernel_kind(T):
    """Syntactic abelian/central test for the kernel, cross-checked
    against the commutator oracle in the constructed semidirect."""
    syntactic_abelian = T.I.is_abelian() and T.is_linear()
    syntactic_central = T.I.is_abelian() and T.is_action_trivial()
    raw = SemidirectProduct(T)
    ok, reason = raw.legality()
    if not ok:
        raise MlexError(f"kernel classification needs a legal product: {reason}")
    E, encode, _ = raw.extension_record()
    kernel = E.kernel_ideal()
    oracle_abelian = commutator(kernel, kernel).is_zero()
    oracle_central = commutator(whole_ideal(E.M), kernel).is_zero()
    if syntactic_abelian != oracle_abelian:
        raise ConsistencyError(
            "abelian-kernel characterization disagrees with the commutator oracle"
        )
    if syntactic_central != oracle_central:
        raise ConsistencyError(
            "central-kernel characterization disagrees with the commutator oracle"
        )
    return {"abelian": oracle_abelian, "central": oracle_central}


@dataclass
class DecompositionStage:
    kernel: Algebra
    cocycle: Cocycle


@dataclass
class Decomposition:
    kind: str
    top: Algebra
    stages: list
    reconstructed: Algebra
    isomorphism: LinMap | None

    @property
    def verified(self):
        return self.isomorphism is not None


def decompose(M, kind):
    """Peel M along its derived or lower central series and rebuild it as
    a right-associated tower of semidirect products."""
    series_kind = {"solvable": "derived", "nilpotent": "lower_central"}.get(kind)
    if series_kind is None:
        raise MlexError(f"unknown decomposition kind {kind!r}")
    chain, reaches_zero, _ = series(M, series_kind)
    if not reaches_zero:
        raise MlexError(f"algebra is not {kind}")
    if M.module.size() == 1:
        return Decomposition(kind, M, [], M, LinMap.identity(M.module))
    # chain: S_0 = M > S_1 > ... > S_n = 0
    quotients = []
    for S in chain[1:]:
        quotients.append(quotient(M, S))
    # quotients[k-1] is M/S_k for k = 1..n
    A_prev, _, sect_prev = quotients[0]
    R = A_prev
    phi = LinMap.identity(R.module)  # R -> A_prev
    stages = []
    for k in range(1, len(quotients)):
        A_next, p_next, sect_next = quotients[k]
        A_k, p_k, sect_k = quotients[k - 1]
        pi_k = LinMap(
            A_next.module,
            A_k.module,
            tuple(p_k(sect_next[g]) for g in A_next.module.generators()),
        )
        kernel_set = {m for m in mod_elements(A_next.module) if pi_k(m).is_zero()}
        K, iota_k, _ = subalgebra(A_next, kernel_set)
        lifting = {
            q: p_next(sect_k[q]) for q in mod_elements(A_k.module)
        }
        E = ExtensionRecord(A_next, A_k, K, pi_k, iota_k, lifting)
        E.validate()
        T_k = extract_cocycle(E)
        if kind == "solvable" and not T_k.is_linear():
            raise ConsistencyError("solvable stage produced a non-linear cocycle")
        if kind == "nilpotent" and not T_k.is_action_trivial():
            raise ConsistencyError("nilpotent stage produced a non-action-trivial cocycle")
        stages.append(DecompositionStage(K, T_k))
        # transport the cocycle along phi: R ~ A_k and rebuild
        T_r = _transport_cocycle(T_k, R, phi)
        raw = SemidirectProduct(T_r)
        R_next, encode, decode = raw.to_algebra()
        images = []
        for g in R_next.module.generators():
            a, x = decode[g]
            images.append(A_next.module.add(iota_k(a), lifting[phi(x)]))
        phi_next = LinMap(R_next.module, A_next.module, tuple(images))
        if not (phi_next.is_bijective() and is_homomorphism(R_next, A_next, phi_next)):
            raise ConsistencyError("stage reconstruction failed to match the quotient")
        R, phi = R_next, phi_next
    iso = find_isomorphism(R, M)
    return Decomposition(kind, A_prev, stages, R, iso)


def _transport_cocycle(T, R, phi):
    """Pull a cocycle over (A, K) back along an isomorphism phi: R -> A."""
    K = T.I
    action_tables = {}
    for (f, s), table in T.action.tables.items():
        new = {}
        n = T.Q.op_arity(f)
        off = tuple(i for i in range(n) if i not in s)
        for qoff in itertools.product(mod_elements(R.module), repeat=len(off)):
            mapped = tuple(phi(q) for q in qoff)
            for asub in itertools.product(mod_elements(K.module), repeat=len(s)):
                new[(qoff, asub)] = table[(mapped, asub)]
        action_tables[(f, s)] = new
    pulled_Q = R
    action = Action(pulled_Q, K, action_tables)
    tplus = {
        (x, y): T.tplus[(phi(x), phi(y))]
        for x in mod_elements(R.module)
        for y in mod_elements(R.module)
    }
    tr = {
        (r, x): T.tr[(r, phi(x))]
        for r in range(R.module.modulus)
        for x in mod_elements(R.module)
    }
    tf = {}
    for f, op in R.ops.items():
        for xs in itertools.product(mod_elements(R.module), repeat=op.arity):
            tf[(f, xs)] = T.tf[(f, tuple(phi(x) for x in xs))]
    return Cocycle(action, tplus, tr, tf)
