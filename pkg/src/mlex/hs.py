"""Low-dimensional inflation/restriction/transgression machinery.

Starting from an extension 0 -> I -> M -> Q -> 0 and an affine action of
M on an abelian coefficient algebra A, the coefficients are cut down to
the null submodule (the elements annihilated by every iterated action
term carrying an ideal entry), an induced action of Q is transported
along the projection, and five cohomology groups are connected by
inflation, restriction and the transgression.  ``verify_hs`` recomputes
every group and checks image = kernel at each interior node.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import ConsistencyError, MlexError
from .modcore import mod_elements
from .algebra import quotient, subalgebra
from .cocycle import (
    Action,
    Cocycle,
    ExtensionRecord,
    extract_cocycle,
    is_compatible,
)
from .cohomology import derivations, h1, h2_affine, h_key


def null_submodule(A, ideal_elements, action):
    """Greatest submodule of the coefficients killed by every action term
    that carries an ideal entry, and closed under all action terms."""
    if not action.is_unary():
        raise MlexError("null submodule needs a purely unary action")
    M, Am = action.Q, action.I
    ideal_elements = set(ideal_elements)

    def slot_values(a):
        for (f, s), table in action.tables.items():
            if len(s) != 1:
                continue
            off = action.off_slots(f, s)
            for qoff in itertools.product(mod_elements(M.module), repeat=len(off)):
                yield qoff, table[(qoff, (a,))]

    current = set()
    for a in mod_elements(Am.module):
        if all(
            value.is_zero()
            for qoff, value in slot_values(a)
            if any(q in ideal_elements for q in qoff)
        ):
            current.add(a)
    while True:
        nxt = {
            a
            for a in current
            if all(value in current for _, value in slot_values(a))
        }
        if nxt == current:
            break
        current = nxt
    return current


@dataclass
class InducedAction:
    action: Action
    coefficients: "CoefficientEmbedding"


@dataclass
class CoefficientEmbedding:
    algebra: object
    embed: object          # LinMap AI -> A
    to_sub: dict           # A-element -> AI-element (on the subset)


def _restrict_action(action, new_Q, q_map, coeff):
    """Transport an action to new carriers: q_map sends new Q-elements to
    old ones, coeff restricts the coefficient side."""
    tables = {}
    AI = coeff.algebra
    for (f, s), table in action.tables.items():
        off = action.off_slots(f, s)
        new = {}
        for qoff in itertools.product(mod_elements(new_Q.module), repeat=len(off)):
            old_q = tuple(q_map[q] for q in qoff)
            for asub in itertools.product(mod_elements(AI.module), repeat=len(s)):
                value = table[(old_q, tuple(coeff.embed(a) for a in asub))]
                if value not in coeff.to_sub:
                    raise ConsistencyError(
                        "action does not close on the null submodule"
                    )
                new[(qoff, asub)] = coeff.to_sub[value]
        tables[(f, s)] = new
    return Action(new_Q, AI, tables)


class HSDatum:
    """Bundle of an extension and an affine coefficient action, with all
    induced data precomputed."""

    def __init__(self, M, ideal, A, action, variety):
        if not A.is_abelian():
            raise MlexError("coefficient algebra must be abelian")
        if not action.is_unary():
            raise MlexError("coefficient action must be affine (unary)")
        if action.Q != M or action.I != A:
            raise MlexError("action does not act on (M, A)")
        action.validate()
        base = Cocycle.zero(M, A, action)
        if not is_compatible(base, variety):
            raise MlexError(
                f"coefficient action is not compatible with {variety.name!r}"
            )
        self.M, self.A, self.variety = M, A, variety
        self.ideal = ideal
        # extension M ->> Q with kernel the ideal
        Q, pi, section = quotient(M, ideal)
        self.Q, self.pi, self.section = Q, pi, section
        I_alg, iota, to_I = subalgebra(M, ideal.elements)
        self.I_alg, self.iota, self.to_I = I_alg, iota, to_I
        self.E = ExtensionRecord(M, Q, I_alg, pi, iota, dict(section))
        self.E.validate()
        self.T = extract_cocycle(self.E)
        # null submodule and its algebra structure
        null_set = null_submodule(A, ideal.elements, action)
        AI_alg, embed_AI, to_AI = subalgebra(A, null_set)
        self.coeff = CoefficientEmbedding(AI_alg, embed_AI, to_AI)
        self.null_set = null_set
        self.action = action
        # induced action of Q on the null submodule
        self.induced = self._induced_action()
        ident_M = {m: m for m in mod_elements(M.module)}
        self.action_M_AI = _restrict_action(action, M, ident_M, self.coeff)
        ident_I = {b: self.iota(b) for b in mod_elements(I_alg.module)}
        self.action_I_AI = _restrict_action(action, I_alg, ident_I, self.coeff)
        if not self.action_I_AI.is_trivial():
            raise ConsistencyError(
                "ideal action on the null submodule failed to vanish"
            )

    def _induced_action(self):
        lift = {x: self.section[x] for x in mod_elements(self.Q.module)}
        induced = _restrict_action(self.action, self.Q, lift, self.coeff)
        # representative independence: every preimage gives the same value
        for (f, s), table in self.action.tables.items():
            off = self.action.off_slots(f, s)
            for qoff in itertools.product(
                mod_elements(self.M.module), repeat=len(off)
            ):
                for a in mod_elements(self.coeff.algebra.module):
                    asub = tuple(
                        self.coeff.embed(a) for _ in range(len(s))
                    )
                    value = table[(qoff, asub)]
                    projected = tuple(self.pi(q) for q in qoff)
                    expected = self.coeff.embed(
                        induced.tables[(f, s)][(projected, (a,) * len(s))]
                    )
                    if value != expected:
                        raise ConsistencyError(
                            "induced action depends on coset representatives"
                        )
        zero_ind = Cocycle.zero(self.Q, self.coeff.algebra, induced)
        if not is_compatible(zero_ind, self.variety, check_datum=False):
            raise ConsistencyError("induced action lost variety compatibility")
        return induced


def inflation_derivation(datum, d):
    """Precompose a quotient-datum derivation with the projection."""
    return {m: d[datum.pi(m)] for m in mod_elements(datum.M.module)}


def inflation_cocycle(datum, S):
    """Precompose a quotient-datum cocycle with the projection."""
    M = datum.M
    pi = datum.pi
    tplus = {}
    for m1 in mod_elements(M.module):
        for m2 in mod_elements(M.module):
            tplus[(m1, m2)] = S.tplus[(pi(m1), pi(m2))]
    tr = {}
    for r in range(M.module.modulus):
        for m in mod_elements(M.module):
            tr[(r, m)] = S.tr[(r, pi(m))]
    tf = {}
    for f, op in M.ops.items():
        for ms in itertools.product(mod_elements(M.module), repeat=op.arity):
            tf[(f, ms)] = S.tf[(f, tuple(pi(m) for m in ms))]
    return Cocycle(datum.action_M_AI, tplus, tr, tf)


def restriction_derivation(datum, d):
    """Restrict an M-datum derivation to the kernel algebra."""
    return {
        b: d[datum.iota(b)] for b in mod_elements(datum.I_alg.module)
    }


def square_condition(datum, d_I):
    """Simplified box condition on a kernel derivation with null-submodule
    coefficients: single-slot extension actions intertwine with the
    induced action, larger slots are annihilated."""
    T = datum.T
    Q, I_alg = datum.Q, datum.I_alg
    AI = datum.coeff.algebra
    for (f, s), table in T.action.tables.items():
        off = T.action.off_slots(f, s)
        for qoff in itertools.product(mod_elements(Q.module), repeat=len(off)):
            for bsub in itertools.product(mod_elements(I_alg.module), repeat=len(s)):
                value = table[(qoff, bsub)]
                if len(s) == 1:
                    expected = datum.induced.tables[(f, s)][
                        (qoff, (d_I[bsub[0]],))
                    ]
                    if d_I[value] != expected:
                        return False
                else:
                    if not d_I[value].is_zero():
                        return False
    return True


def square_condition_general(datum, d_I, budget=2**12):
    """Existential form of the box condition over the full coefficient
    algebra: search for a helper map h: Q -> A realizing the printed
    two-sum identity."""
    from .cocycle import all_witness_maps

    M, Q, I_alg, A = datum.M, datum.Q, datum.I_alg, datum.A
    count = A.module.size() ** (Q.module.size() - 1)
    if count > budget:
        raise MlexError(f"helper search space {count} exceeds budget {budget}")
    T = datum.T
    lifts = datum.section
    for h in all_witness_maps(Q, A):
        ok = True
        for (f, s), table in T.action.tables.items():
            n = Q.op_arity(f)
            off = T.action.off_slots(f, s)
            for qoff in itertools.product(mod_elements(Q.module), repeat=len(off)):
                for bsub in itertools.product(
                    mod_elements(I_alg.module), repeat=len(s)
                ):
                    lhs = datum.coeff.embed(d_I[table[(qoff, bsub)]])
                    margs = [None] * n
                    for q, i in zip(qoff, off):
                        margs[i] = lifts[q]
                    for b, i in zip(bsub, s):
                        margs[i] = datum.iota(b)
                    rhs = A.module.zero()
                    for i in range(n):
                        coeff = (
                            h[qoff[off.index(i)]] if i in off else
                            datum.coeff.embed(d_I[bsub[s.index(i)]])
                        )
                        rhs = A.module.add(
                            rhs,
                            datum.action.value(
                                f, (i,), tuple(margs), (coeff,) * n
                            ),
                        )
                    if lhs != rhs:
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                break
        if ok:
            return h
    return None


def transgression(datum, d_I, T=None):
    """Compose a boxed kernel derivation with the extension cocycle.

    The two-argument form takes an explicit representative cocycle for
    the extension; by default the datum's own extracted cocycle is used.
    """
    if not square_condition(datum, d_I):
        raise MlexError("derivation does not satisfy the box condition")
    T = T or datum.T
    tplus = {k: d_I[v] for k, v in T.tplus.items()}
    tr = {k: d_I[v] for k, v in T.tr.items()}
    tf = {k: d_I[v] for k, v in T.tf.items()}
    S = Cocycle(datum.induced, tplus, tr, tf)
    S.validate()
    if not is_compatible(S, datum.variety, check_datum=False):
        raise ConsistencyError("transgressed cocycle lost compatibility")
    return S


@dataclass
class HSReport:
    checks: dict
    sizes: dict
    caveats: list

    @property
    def passed(self):
        return all(self.checks.values())

    def lines(self):
        out = []
        for name, ok in self.checks.items():
            out.append(f"{'PASS' if ok else 'FAIL'}  {name}")
        for c in self.caveats:
            out.append(f"NOTE  {c}")
        return out


def verify_hs(datum, depth=3):
    """Compute the five groups and check exactness at every node."""
    Q, M, I_alg = datum.Q, datum.M, datum.I_alg
    AI = datum.coeff.algebra
    caveats = []
    checks = {}

    G1 = h1(Q, AI, datum.induced, depth=depth)
    G2 = h1(M, AI, datum.action_M_AI, depth=depth)
    for name, G in (("quotient", G1), ("middle", G2)):
        if not G.principal.complete:
            caveats.append(
                f"principal derivation search at the {name} node is depth-bounded"
            )
    ders3 = derivations(I_alg, AI, datum.action_I_AI)
    G3 = [d for d in ders3 if square_condition(datum, d)]
    # box derivations form a subgroup
    keys3 = {h_key(d, I_alg) for d in G3}
    closed = all(
        h_key({b: AI.module.add(d1[b], d2[b]) for b in d1}, I_alg) in keys3
        for d1 in G3
        for d2 in G3
    )
    checks["box derivations form a subgroup"] = closed
    G4 = h2_affine(Q, AI, datum.induced, datum.variety)
    G5 = h2_affine(M, AI, datum.action_M_AI, datum.variety)

    def h1_class(G, Q_alg, d):
        k = h_key(d, Q_alg)
        for idx, coset in enumerate(G.cosets):
            if any(h_key(g, Q_alg) == k for g in coset):
                return idx
        return None

    # inflation on first cohomology
    infl = {}
    ok_members = True
    for idx, coset in enumerate(G1.cosets):
        images = {
            h1_class(G2, M, inflation_derivation(datum, d)) for d in coset
        }
        if len(images) != 1 or None in images:
            ok_members = False
        infl[idx] = images.pop()
    checks["inflation well-defined on first-cohomology classes"] = ok_members
    checks["inflation injective"] = len(set(infl.values())) == len(G1.cosets)

    # restriction: kernel at the middle node
    restr = {}
    ok_members = True
    for idx, coset in enumerate(G2.cosets):
        keys = {
            h_key(restriction_derivation(datum, d), I_alg) for d in coset
        }
        if len(keys) != 1:
            ok_members = False
        key = keys.pop()
        if key not in keys3:
            ok_members = False
            restr[idx] = None
        else:
            restr[idx] = key
    checks["restriction lands in the boxed kernel derivations"] = ok_members
    zero3 = h_key({b: AI.module.zero() for b in mod_elements(I_alg.module)}, I_alg)
    ker_r = {idx for idx, key in restr.items() if key == zero3}
    checks["image of inflation equals kernel of restriction"] = (
        set(infl.values()) == ker_r
    )

    # transgression: kernel at the boxed node
    zero4 = G4.zero_class()
    trans = {}
    for d in G3:
        S = transgression(datum, d)
        trans[h_key(d, I_alg)] = G4.class_of(S)
    im_r = {key for key in restr.values() if key is not None}
    ker_delta = {key for key, cls in trans.items() if cls == zero4}
    checks["image of restriction equals kernel of transgression"] = im_r == ker_delta

    # inflation on second cohomology: kernel at the fourth node
    infl2 = {}
    for combo, rep in zip(
        itertools.product(*(range(d) for d in G4.invariant_factors)), G4.reps
    ):
        S = inflation_cocycle(datum, rep)
        infl2[combo] = G5.class_of(S)
    zero5 = G5.zero_class()
    ker_sigma2 = {c for c, img in infl2.items() if img == zero5}
    im_delta = set(trans.values())
    checks["image of transgression equals kernel of second inflation"] = (
        im_delta == ker_sigma2
    )
    # the transgression image is a subgroup hit exactly; also record sizes
    sizes = {
        "H1(Q)": G1.class_count(),
        "H1(M)": G2.class_count(),
        "Der_box(I)": len(G3),
        "H2(Q)": G4.class_count(),
        "H2(M)": G5.class_count(),
    }
    return HSReport(checks, sizes, caveats)
