"""Second and first cohomology at desk scale.

The nonabelian route enumerates every cocycle inside a budget and
partitions the compatible ones by equivalence.  The affine route cuts
the cocycle space out as the kernel of an integer congruence system and
presents the quotient by coboundaries as an abelian group via Smith
reduction.  Both routes are cross-checked in the test suite.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import BudgetExceeded, ConsistencyError, MlexError
from .modcore import mod_elements, smith_normal_form, solve_congruences
from .algebra import is_homomorphism
from . import termlang
from .cocycle import (
    Cocycle,
    DatumError,
    SemidirectProduct,
    all_witness_maps,
    coboundary,
    enumerate_actions,
    equivalent,
)


@dataclass
class CohomologyClass:
    representative: Cocycle
    members: list
    variety: str

    def size(self):
        return len(self.members)


def _factor_set_cells(Q, I):
    """Unknown factor-set cells: entries not pinned to zero by T1/T3."""
    qs = [x for x in mod_elements(Q.module) if not x.is_zero()]
    cells = [("plus", x, y) for x in qs for y in qs]
    for f in sorted(Q.ops):
        arity = Q.op_arity(f)
        for xs in itertools.product(qs, repeat=arity):
            cells.append(("op", f, xs))
    return cells


def _cocycle_from_assignment(action, cells, values):
    tplus_cells, tf_cells = {}, {}
    for cell, v in zip(cells, values):
        if cell[0] == "plus":
            tplus_cells[(cell[1], cell[2])] = v
        else:
            tf_cells[(cell[1], cell[2])] = v
    return Cocycle.from_cells(action, tplus_cells, tf_cells)


def enumerate_cocycles(Q, I, action=None, budget=2**20):
    """Every cocycle with telescoped scalar factor sets, one action or all.

    A compatible cocycle always telescopes (writing r*x as repeated
    addition forces it), so nothing compatible is lost; the raw
    free-scalar space is only needed by the realization checks, which
    build it directly.
    """
    actions = [action] if action is not None else enumerate_actions(Q, I, budget)
    cells = _factor_set_cells(Q, I)
    per_action = len(mod_elements(I.module)) ** len(cells)
    total = per_action * len(actions)
    if total > budget:
        raise BudgetExceeded(total, budget)
    out = []
    ivals = mod_elements(I.module)
    for act in actions:
        for values in itertools.product(ivals, repeat=len(cells)):
            out.append(_cocycle_from_assignment(act, cells, values))
    return out


def enumerate_h2(Q, I, V, action=None, budget=2**20):
    """All compatible cocycles modulo equivalence, smallest key first."""
    if not termlang.in_variety(Q, V):
        raise DatumError(f"quotient algebra is not in variety {V.name!r}")
    if not termlang.in_variety(I, V):
        raise DatumError(f"kernel algebra is not in variety {V.name!r}")
    from .cocycle import is_compatible

    compatible = [
        T
        for T in enumerate_cocycles(Q, I, action=action, budget=budget)
        if is_compatible(T, V, check_datum=False)
    ]
    classes = []
    for T in compatible:
        for cls in classes:
            if equivalent(T, cls[0]) is not None:
                cls.append(T)
                break
        else:
            classes.append([T])
    out = []
    for cls in classes:
        cls.sort(key=lambda c: c.canonical_key())
        out.append(CohomologyClass(cls[0], cls, V.name))
    out.sort(key=lambda c: c.representative.canonical_key())
    return out


# -- affine second cohomology ---------------------------------------------------


def multilinearity_identities(signature):
    """Slotwise additivity identities for every operation symbol."""
    out = []
    for name, arity in signature.ops:
        xs = [termlang.Var(f"x{i}") for i in range(arity)]
        y = termlang.Var("y")
        for slot in range(arity):
            bumped = list(xs)
            bumped[slot] = termlang.Plus(xs[slot], y)
            lhs = termlang.Apply(name, tuple(bumped))
            swapped = list(xs)
            swapped[slot] = y
            rhs = termlang.Plus(
                termlang.Apply(name, tuple(xs)), termlang.Apply(name, tuple(swapped))
            )
            variables = tuple(v.name for v in xs) + ("y",)
            out.append(termlang.Identity(lhs, rhs, variables))
    return out


def _strict_residual(T, identity):
    """Evaluate both sides of the identity at kernel-zero pairs in the raw
    semidirect product and return the first-coordinate differences."""
    raw = SemidirectProduct(T)
    Qm = T.Q.module
    out = []
    for xs in itertools.product(mod_elements(Qm), repeat=len(identity.variables)):
        env = {v: raw.lift(x) for v, x in zip(identity.variables, xs)}
        lhs = termlang.eval_term(raw, identity.lhs, env)
        rhs = termlang.eval_term(raw, identity.rhs, env)
        out.append(T.I.module.sub(lhs[0], rhs[0]))
    return out


class AffineH2:
    """H^2 for affine datum: an abelian group of cocycle classes."""

    def __init__(self, Q, I, action, variety):
        self.Q, self.I, self.action, self.variety = Q, I, action, variety
        self.cells = _factor_set_cells(Q, I)
        self.invariant_factors = []
        self.reps = []
        self._solve()

    # cell vectors are integer tuples: one entry per (cell, I-coordinate)
    def _vector_of(self, T):
        out = []
        for cell in self.cells:
            v = (
                T.tplus[(cell[1], cell[2])]
                if cell[0] == "plus"
                else T.tf[(cell[1], cell[2])]
            )
            out.extend(v.coords)
        return tuple(out)

    def _cocycle_of(self, vec):
        k = self.I.module.rank
        values = []
        for idx in range(len(self.cells)):
            values.append(self.I.module.element(vec[idx * k : (idx + 1) * k]))
        return _cocycle_from_assignment(self.action, self.cells, values)

    def _constraint_rows(self):
        """Linear functionals cutting out the strictly compatible cocycles.

        Group laws give exact symbolic rows; operation and variety
        identities are sampled through the raw semidirect product, which
        is linear in the factor sets over affine datum.
        """
        Qm, Im = self.Q.module, self.I.module
        k = Im.rank
        ncols = len(self.cells) * k
        cell_index = {
            (cell[0], cell[1], cell[2]): i for i, cell in enumerate(self.cells)
        }

        def tplus_cols(x, y):
            if x.is_zero() or y.is_zero():
                return None
            return cell_index[("plus", x, y)]

        rows = []

        def add_row(entries, modulus):
            row = [0] * ncols
            for col_cell, coeff, coord in entries:
                if col_cell is not None:
                    row[col_cell * k + coord] += coeff
            rows.append((tuple(row), modulus))

        qs = mod_elements(Qm)
        # symmetry and the group 2-cocycle law for the addition factor set
        for x in qs:
            for y in qs:
                for j in range(k):
                    add_row(
                        [(tplus_cols(x, y), 1, j), (tplus_cols(y, x), -1, j)],
                        Im.factors[j],
                    )
        for x in qs:
            for y in qs:
                for z in qs:
                    for j in range(k):
                        add_row(
                            [
                                (tplus_cols(x, y), 1, j),
                                (tplus_cols(Qm.add(x, y), z), 1, j),
                                (tplus_cols(y, z), -1, j),
                                (tplus_cols(x, Qm.add(y, z)), -1, j),
                            ],
                            Im.factors[j],
                        )
        # the modulus must annihilate every element
        for x in qs:
            for j in range(k):
                entries = []
                for step in range(1, Qm.modulus):
                    entries.append((tplus_cols(Qm.scalar(step, x), x), 1, j))
                add_row(entries, Im.factors[j])
        # sampled residual rows: multilinearity plus the variety identities
        sampled = multilinearity_identities(self.variety.signature) + list(
            self.variety.identities
        )
        basis_vectors = []
        for idx in range(len(self.cells)):
            for j in range(k):
                vec = [0] * ncols
                vec[idx * k + j] = 1
                basis_vectors.append(tuple(vec))
        basis_residuals = [
            [
                _strict_residual(self._cocycle_of(vec), ident)
                for ident in sampled
            ]
            for vec in basis_vectors
        ]
        n_instances = [
            len(basis_residuals[0][i]) if basis_vectors else 0
            for i in range(len(sampled))
        ]
        for ident_idx in range(len(sampled)):
            for inst in range(n_instances[ident_idx]):
                for j in range(k):
                    row = tuple(
                        basis_residuals[col][ident_idx][inst].coords[j]
                        for col in range(ncols)
                    )
                    rows.append((row, Im.factors[j]))
        # deduplicate and drop trivial rows
        seen = set()
        out = []
        for row, modulus in rows:
            row = tuple(c % modulus for c in row)
            if any(row) and (row, modulus) not in seen:
                seen.add((row, modulus))
                out.append((row, modulus))
        return out

    def _col_moduli(self):
        k = self.I.module.rank
        return [self.I.module.factors[j] for _ in self.cells for j in range(k)]

    def _solve(self):
        from .cocycle import is_compatible

        if not self.I.is_abelian():
            raise MlexError("affine datum needs an abelian kernel algebra")
        if not self.action.is_unary():
            raise MlexError("affine datum needs a purely unary action")
        base = Cocycle.zero(self.Q, self.I, self.action)
        if not is_compatible(base, self.variety):
            raise MlexError(
                f"action is not compatible with variety {self.variety.name!r}"
            )
        col_moduli = self._col_moduli()
        ncols = len(col_moduli)
        rows = self._constraint_rows()
        if rows:
            A = [list(r) for r, _ in rows]
            row_moduli = [m for _, m in rows]
            sol = solve_congruences(A, [0] * len(rows), row_moduli, col_moduli)
            cocycle_gens = [g for g in sol.kernel]
        else:
            cocycle_gens = [
                tuple(1 if i == j else 0 for i in range(ncols)) for j in range(ncols)
            ]
        self._zgens = cocycle_gens
        # relations among the generators, then coboundary coordinates
        relations = []
        if cocycle_gens:
            gen_matrix = [
                [g[row] for g in cocycle_gens] for row in range(ncols)
            ]
            hom = solve_congruences(
                gen_matrix,
                [0] * ncols,
                col_moduli,
                [self.Q.module.modulus] * len(cocycle_gens),
            )
            relations.extend(hom.kernel)
            # generator order relations: m * e_i always collapses
            m = self.Q.module.modulus
            for i in range(len(cocycle_gens)):
                relations.append(
                    tuple(m if j == i else 0 for j in range(len(cocycle_gens)))
                )
            self._gen_matrix = gen_matrix
        else:
            self._gen_matrix = [[] for _ in range(ncols)]
        for h in _witness_basis(self.Q, self.I):
            G = coboundary(h, self.action)
            if not G.action.is_trivial() and not self.action.is_unary():
                raise ConsistencyError("affine coboundary produced action terms")
            coords = self._gen_coordinates(self._vector_of(G))
            if coords is None:
                raise ConsistencyError(
                    "coboundary outside the compatible cocycle group"
                )
            relations.append(coords)
        p = len(cocycle_gens)
        rel_rows = [list(r) for r in relations if any(r)] or [[0] * p]
        if p == 0:
            self.invariant_factors = []
            self.reps = [self._cocycle_of((0,) * ncols)]
            self._snf = None
            return
        U, D, V = smith_normal_form(rel_rows)
        diag = [D[i][i] if i < len(D) and i < len(D[i]) else 0 for i in range(p)]
        # a zero diagonal entry would mean an infinite quotient; the
        # generator order relations make that impossible
        if any(d == 0 for d in diag):
            raise ConsistencyError("affine cohomology quotient is not finite")
        keep = [j for j in range(p) if diag[j] != 1]
        self._V = V
        self._diag = diag
        self._keep = keep
        self.invariant_factors = [diag[j] for j in keep]
        Vinv = _int_inverse(V)
        self.reps = []
        for combo in itertools.product(*(range(diag[j]) for j in keep)):
            y = [0] * p
            for c, j in zip(combo, keep):
                y[j] = c
            v = [sum(y[jj] * Vinv[jj][i] for jj in range(p)) for i in range(p)]
            vec = self._combine(v)
            self.reps.append(self._cocycle_of(vec))

    def _combine(self, v):
        ncols = len(self._col_moduli())
        out = []
        for row in range(ncols):
            out.append(
                sum(v[i] * self._zgens[i][row] for i in range(len(self._zgens)))
                % self._col_moduli()[row]
            )
        return tuple(out)

    def _gen_coordinates(self, vec):
        if not self._zgens:
            return None if any(vec) else ()
        sol = solve_congruences(
            self._gen_matrix,
            list(vec),
            self._col_moduli(),
            [self.Q.module.modulus] * len(self._zgens),
        )
        return None if sol is None else list(sol.particular)

    def class_count(self):
        n = 1
        for d in self.invariant_factors:
            n *= d
        return n

    def class_of(self, T):
        """Coordinates of [T] in the invariant-factor presentation."""
        coords = self._gen_coordinates(self._vector_of(T))
        if coords is None:
            raise MlexError("cocycle is not strictly compatible with the variety")
        if not self._zgens:
            return ()
        p = len(self._zgens)
        y = [sum(coords[i] * self._V[i][j] for i in range(p)) for j in range(p)]
        return tuple(y[j] % self._diag[j] for j in self._keep)

    def zero_class(self):
        return tuple(0 for _ in self.invariant_factors)

    def add_classes(self, c1, c2):
        return tuple(
            (a + b) % d for a, b, d in zip(c1, c2, self.invariant_factors)
        )


def _witness_basis(Q, I):
    """Indicator witnesses spanning the maps Q -> I with h(0) = 0."""
    out = []
    zq, zi = Q.module.zero(), I.module.zero()
    for x0 in mod_elements(Q.module):
        if x0.is_zero():
            continue
        for j in range(I.module.rank):
            h = {x: zi for x in mod_elements(Q.module)}
            h[x0] = I.module.generator(j)
            h[zq] = zi
            out.append(h)
    return out


def _int_inverse(V):
    n = len(V)
    U, D, W = smith_normal_form(V)
    for i in range(n):
        if D[i][i] != 1:
            raise MlexError("matrix is not unimodular")
    return [
        [sum(W[i][t] * U[t][j] for t in range(n)) for j in range(n)] for i in range(n)
    ]


def h2_affine(Q, I, action, V):
    return AffineH2(Q, I, action, V)


# -- derivations of datum, stabilizers, first cohomology ------------------------


def h_key(h, Q):
    return tuple(h[x].coords for x in mod_elements(Q.module))


def derivations(Q, I, action):
    """All maps h with null coboundary, sorted by their value tables."""
    out = []
    for h in all_witness_maps(Q, I):
        G = coboundary(h, action)
        if G.factor_sets_zero() and G.action.is_trivial():
            out.append(h)
    out.sort(key=lambda h: h_key(h, Q))
    # the set must be closed under pointwise addition
    keys = {h_key(h, Q) for h in out}
    for h1 in out:
        for h2 in out:
            s = {x: I.module.add(h1[x], h2[x]) for x in h1}
            if h_key(s, Q) not in keys:
                raise ConsistencyError("derivations are not closed under addition")
    return out


def hom_kill_commutator(Q, I):
    """Independent description for central datum: module maps vanishing
    on the commutator ideal of Q."""
    from .algebra import commutator, whole_ideal
    from .modcore import hom_enumerate

    qq = commutator(whole_ideal(Q), whole_ideal(Q))
    out = []
    for phi in hom_enumerate(Q.module, I.module):
        if all(phi(e).is_zero() for e in qq.elements):
            out.append({x: phi(x) for x in mod_elements(Q.module)})
    out.sort(key=lambda h: h_key(h, Q))
    return out


def stab_automorphisms(E):
    """Automorphisms fixing the embedded kernel pointwise and commuting
    with the projection, with the derivation dictionary attached."""
    M = E.M
    inv = E.iota_inverse()
    auts = []
    for phi in _endomorphism_candidates(M):
        if not phi.is_bijective():
            continue
        if any(phi(m) != m for m in inv):
            continue
        if any(E.pi(phi(m)) != E.pi(m) for m in mod_elements(M.module)):
            continue
        if not is_homomorphism(M, M, phi):
            continue
        auts.append(phi)

    def to_derivation(phi):
        return {
            x: inv[M.module.sub(E.lifting[x], phi(E.lifting[x]))]
            for x in mod_elements(E.Q.module)
        }

    return auts, to_derivation


def _endomorphism_candidates(M):
    from .modcore import hom_enumerate

    return hom_enumerate(M.module, M.module)


@dataclass
class PrincipalResult:
    maps: list
    complete: bool
    depth_used: int


def _atom_tables(Q, I, action, depth):
    """Nested action-term candidates up to the depth.

    Each entry is (value table over Q, meta) where meta is the recursive
    description ("atom", f, s, pattern, consts, pos, inner_meta); leaves
    have pos = None."""
    Qm, Im = Q.module, I.module
    nonzero_scalars = list(range(1, Qm.modulus))
    qs = mod_elements(Qm)

    def q_vec(pattern, off, n, x):
        vec = [Qm.zero()] * n
        for r, i in zip(pattern, off):
            vec[i] = Qm.scalar(r, x)
        return vec

    level = []
    for f, s in action.slots():
        n = Q.op_arity(f)
        off = action.off_slots(f, s)
        for pattern in itertools.product(nonzero_scalars, repeat=len(off)):
            for consts in itertools.product(
                [Im.generator(j) for j in range(Im.rank)], repeat=len(s)
            ):
                table = tuple(
                    action.value(
                        f,
                        s,
                        q_vec(pattern, off, n, x),
                        _avec(n, s, consts),
                    )
                    for x in qs
                )
                level.append((table, ("atom", f, s, pattern, consts, None, None)))
    atoms = list(level)
    for _ in range(depth - 1):
        nxt = []
        for table, inner_meta in level:
            inner = dict(zip(qs, table))
            for f, s in action.slots():
                n = Q.op_arity(f)
                off = action.off_slots(f, s)
                for pattern in itertools.product(nonzero_scalars, repeat=len(off)):
                    for pos in range(len(s)):
                        for consts in itertools.product(
                            [Im.generator(j) for j in range(Im.rank)],
                            repeat=len(s),
                        ):
                            new_table = []
                            for x in qs:
                                avals = list(consts)
                                avals[pos] = inner[x]
                                new_table.append(
                                    action.value(
                                        f,
                                        s,
                                        q_vec(pattern, off, n, x),
                                        _avec(n, s, avals),
                                    )
                                )
                            nxt.append(
                                (
                                    tuple(new_table),
                                    ("atom", f, s, pattern, consts, pos, inner_meta),
                                )
                            )
        atoms.extend(nxt)
        level = nxt
        if not level:
            break
    return atoms


def _avec(n, s, values):
    vec = [None] * n
    for i, v in zip(s, values):
        vec[i] = v
    # entries outside s do not matter; reuse the first value's module zero
    filler = values[0].module.zero() if values else None
    return tuple(v if v is not None else filler for v in vec)


def principal_derivations(Q, I, action, depth=3):
    """Derivations realized by identity twins with kernel constants.

    The subgroup generated by the accepted depth-bounded candidates is a
    sound under-approximation; ``complete`` reports when it is provably
    all of the principal derivations (trivial action, or the whole
    derivation group was reached).
    """
    zero = {x: I.module.zero() for x in mod_elements(Q.module)}
    if action.is_trivial():
        return PrincipalResult([zero], True, 0)
    ders = derivations(Q, I, action)
    der_keys = {h_key(h, Q) for h in ders}
    raw = SemidirectProduct(Cocycle.zero(Q, I, action))
    qs = mod_elements(Q.module)
    good = []
    for table, meta in _atom_tables(Q, I, action, depth):
        d = dict(zip(qs, table))
        if h_key(d, Q) not in der_keys:
            continue
        if not _twin_side_condition(raw, d, meta):
            continue
        good.append(d)
    # subgroup generated under pointwise addition
    members = {h_key(zero, Q): zero}
    frontier = [zero]
    while frontier:
        nxt = []
        for base in frontier:
            for g in good:
                s = {x: I.module.add(base[x], g[x]) for x in qs}
                k = h_key(s, Q)
                if k not in members:
                    members[k] = s
                    nxt.append(s)
        frontier = nxt
    maps = sorted(members.values(), key=lambda h: h_key(h, Q))
    complete = len(maps) == len(ders)
    return PrincipalResult(maps, complete, depth)


def _poly_value(raw, meta, u):
    """Evaluate the candidate's defining polynomial at a product element,
    substituting nested values recursively."""
    _, f, s, pattern, consts, pos, inner = meta
    Q = raw.Q
    n = Q.op_arity(f)
    off = tuple(i for i in range(n) if i not in s)
    args = [None] * n
    for r, i in zip(pattern, off):
        args[i] = raw.scalar(r, u)
    for idx, (c, i) in enumerate(zip(consts, s)):
        if pos is not None and idx == pos:
            args[i] = _poly_value(raw, inner, u)
        else:
            args[i] = raw.embed_kernel(c)
    return raw.apply_op(f, args)


def _twin_side_condition(raw, d, meta):
    """The twin polynomial must not pick up kernel-coordinate junk: its
    value at every product element is exactly the candidate table."""
    Q, I = raw.Q, raw.I
    for a in mod_elements(I.module):
        for x in mod_elements(Q.module):
            if _poly_value(raw, meta, (a, x)) != (d[x], Q.module.zero()):
                return False
    return True


@dataclass
class H1Result:
    derivations: list
    principal: PrincipalResult
    cosets: list
    invariant_factors: list

    def class_count(self):
        return len(self.cosets)


def h1(Q, I, action, depth=3):
    ders = derivations(Q, I, action)
    pres = principal_derivations(Q, I, action, depth=depth)
    pkeys = {h_key(h, Q) for h in pres.maps}
    cosets = []
    assigned = {}
    for h in ders:
        k = h_key(h, Q)
        if k in assigned:
            continue
        coset = []
        for g in ders:
            diff = {x: I.module.sub(h[x], g[x]) for x in h}
            if h_key(diff, Q) in pkeys:
                coset.append(g)
                assigned[h_key(g, Q)] = len(cosets)
        coset.sort(key=lambda d: h_key(d, Q))
        cosets.append(coset)
    reps = [c[0] for c in cosets]

    def coset_index(h):
        k = h_key(h, Q)
        return assigned[k]

    def add_cosets(i, j):
        s = {x: I.module.add(reps[i][x], reps[j][x]) for x in reps[i]}
        return coset_index(s)

    if len(cosets) == 1:
        factors = []
    else:
        from .modcore import abelian_decomposition

        orders, _, _ = abelian_decomposition(
            list(range(len(cosets))),
            lambda i, j: add_cosets(i, j),
            coset_index({x: I.module.zero() for x in mod_elements(Q.module)}),
        )
        factors = orders
    return H1Result(ders, pres, cosets, factors)
