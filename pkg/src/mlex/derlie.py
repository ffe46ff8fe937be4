"""Derivations of algebras, compatible pairs, and the Wells sequence.

Derivations of one algebra form a Lie ring under the commutator bracket.
For a group-trivial extension realizing affine datum, the ideal
preserving derivations fit into an exact sequence between the
cohomological derivations of the datum and the obstruction classes
produced by twisting the cocycle with a compatible pair.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import ConsistencyError, MlexError
from .modcore import LinMap, hom_enumerate, mod_elements
from .algebra import subalgebra, algebra_from_ops
from . import termlang
from .cocycle import (
    Cocycle,
    ExtensionRecord,
    SemidirectProduct,
    all_witness_maps,
    coboundary,
    extract_cocycle,
    is_compatible,
    substitute,
)
from .cohomology import derivations as datum_derivations
from .cohomology import h_key


def lin_zero(source, target):
    return LinMap.zero_map(source, target)


def lin_add(f, g):
    return LinMap(
        f.source, f.target, tuple(f.target.add(a, b) for a, b in zip(f.images, g.images))
    )


def lin_sub(f, g):
    return LinMap(
        f.source, f.target, tuple(f.target.sub(a, b) for a, b in zip(f.images, g.images))
    )


def lin_bracket(f, g):
    return lin_sub(f.compose(g), g.compose(f))


def is_derivation(M, h):
    """Module endomap satisfying the product rule on every operation."""
    if h.source != M.module or h.target != M.module:
        return False
    gens = M.module.generators()
    for name, op in M.ops.items():
        for args in itertools.product(gens, repeat=op.arity):
            lhs = h(M.eval_op(name, args))
            rhs = M.module.zero()
            for i in range(op.arity):
                rhs = M.module.add(
                    rhs, M.eval_op(name, substitute(args, (i,), (h(args[i]),)))
                )
            if lhs != rhs:
                return False
    return True


def derivations_of(M):
    """All derivations of M, enumeration order, bracket-closed."""
    out = [h for h in hom_enumerate(M.module, M.module) if is_derivation(M, h)]
    keys = {d.images for d in out}
    for d1 in out:
        for d2 in out:
            if lin_bracket(d1, d2).images not in keys:
                raise ConsistencyError("derivations are not closed under the bracket")
    return out


def ideal_preserving(M, ideal_elements):
    """Derivations mapping the given ideal set into itself."""
    ideal_elements = set(ideal_elements)
    out = [
        d for d in derivations_of(M) if all(d(e) in ideal_elements for e in ideal_elements)
    ]
    return out


def check_jacobi(maps):
    """Bracket Jacobi identity, exhaustively on a list of maps.

    Brackets and sums are tabulated on indices first so the cubic sweep
    is pure lookups."""
    index = {m.images: i for i, m in enumerate(maps)}
    n = len(maps)
    bracket = [[None] * n for _ in range(n)]
    for i, a in enumerate(maps):
        for j, b in enumerate(maps):
            key = lin_bracket(a, b).images
            if key not in index:
                return False
            bracket[i][j] = index[key]
    add = [[None] * n for _ in range(n)]
    for i, a in enumerate(maps):
        for j, b in enumerate(maps):
            key = lin_add(a, b).images
            if key not in index:
                return False
            add[i][j] = index[key]
    zero = index.get(LinMap.zero_map(maps[0].source, maps[0].target).images)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                first = bracket[i][bracket[j][k]]
                second = bracket[j][bracket[k][i]]
                third = bracket[k][bracket[i][j]]
                if add[add[first][second]][third] != zero:
                    return False
    return True


def pair_is_compatible(alpha, beta, action):
    """Distinguished-slot derivation rule relating the two components."""
    Q, I = action.Q, action.I
    for f, s in action.slots():
        n = Q.op_arity(f)
        for xs in itertools.product(mod_elements(Q.module), repeat=n):
            for avec in itertools.product(mod_elements(I.module), repeat=n):
                lhs = alpha(action.value(f, s, xs, avec))
                rhs = I.module.zero()
                for i in range(n):
                    rhs = I.module.add(
                        rhs,
                        action.value(
                            f,
                            s,
                            substitute(xs, (i,), (beta(xs[i]),)),
                            substitute(avec, (i,), (alpha(avec[i]),)),
                        ),
                    )
                if lhs != rhs:
                    return False
    return True


def compatible_pairs(I, Q, action):
    """All compatible derivation pairs of the datum, bracket-closed."""
    ders_I = derivations_of(I)
    ders_Q = derivations_of(Q)
    pairs = [
        (a, b)
        for a in ders_I
        for b in ders_Q
        if pair_is_compatible(a, b, action)
    ]
    keyset = {(a.images, b.images) for a, b in pairs}
    for a1, b1 in pairs:
        for a2, b2 in pairs:
            br = (lin_bracket(a1, a2).images, lin_bracket(b1, b2).images)
            if br not in keyset:
                raise ConsistencyError("compatible pairs not closed under the bracket")
    return pairs


@dataclass
class LiftResult:
    ok: bool
    obstruction: str | None
    derivation: LinMap | None


def lift_pair(pair, T, extension=None):
    """Pair lift (a, x) -> (alpha a, beta x) on the semidirect product,
    or the first failing linearity condition."""
    alpha, beta = pair
    if not T.is_group_trivial_table():
        raise MlexError("pair lifting requires a cocycle with zero group factor set")
    if not T.is_linear():
        raise MlexError("pair lifting requires a linear cocycle")
    Q, I = T.Q, T.I
    for r in range(Q.module.modulus):
        for x in mod_elements(Q.module):
            if alpha(T.tr[(r, x)]) != T.tr[(r, beta(x))]:
                return LiftResult(False, "C1", None)
    for f, op in Q.ops.items():
        n = op.arity
        for xs in itertools.product(mod_elements(Q.module), repeat=n):
            lhs = alpha(T.tf[(f, xs)])
            rhs = I.module.zero()
            for i in range(n):
                rhs = I.module.add(
                    rhs, T.tf[(f, substitute(xs, (i,), (beta(xs[i]),)))]
                )
            if lhs != rhs:
                return LiftResult(False, "C3", None)
    E, encode, decode = (
        extension if extension is not None else SemidirectProduct(T).extension_record()
    )
    images = []
    for g in E.M.module.generators():
        a, x = decode[g]
        images.append(encode[(alpha(a), beta(x))])
    phi = LinMap(E.M.module, E.M.module, tuple(images))
    if not is_derivation(E.M, phi):
        raise ConsistencyError("pair lift passed C1-C3 but is not a derivation")
    return LiftResult(True, None, phi)


def project_pair(phi, E, check_second_lifting=False):
    """The restriction/quotient pair of an ideal-preserving derivation."""
    inv = E.iota_inverse()
    if any(phi(m) not in inv for m in inv):
        raise MlexError("derivation does not preserve the embedded kernel")
    alpha = LinMap(
        E.I.module,
        E.I.module,
        tuple(inv[phi(E.iota(g))] for g in E.I.module.generators()),
    )
    beta_table = {x: E.pi(phi(E.lifting[x])) for x in mod_elements(E.Q.module)}
    beta = LinMap(
        E.Q.module,
        E.Q.module,
        tuple(beta_table[g] for g in E.Q.module.generators()),
    )
    for x, v in beta_table.items():
        if beta(x) != v:
            raise ConsistencyError("projected quotient map is not linear")
    if check_second_lifting:
        for lifting in E.all_liftings()[:2]:
            for x in mod_elements(E.Q.module):
                if E.pi(phi(lifting[x])) != beta(x):
                    raise ConsistencyError("projected pair depends on the lifting")
    return alpha, beta


def group_trivialize(T):
    """Equivalent cocycle with zero group factor set, or None.

    Searches for a witness h with T_+ = h(x) + h(y) - h(x+y) and shifts
    T by its coboundary; over affine datum the action is unchanged.
    """
    Q, I = T.Q, T.I
    if T.is_group_trivial_table():
        return T, {x: I.module.zero() for x in mod_elements(Q.module)}
    for h in all_witness_maps(Q, I):
        ok = True
        for x in mod_elements(Q.module):
            for y in mod_elements(Q.module):
                delta = I.module.sub(
                    I.module.add(h[x], h[y]), h[Q.module.add(x, y)]
                )
                if delta != T.tplus[(x, y)]:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return shift_by_coboundary(T, h), h
    return None, None


def shift_by_coboundary(T, h):
    """T minus the coboundary of h over T's own action (affine datum)."""
    if not T.is_linear() or not T.I.is_abelian():
        raise MlexError("coboundary shifts are implemented for affine datum")
    G = coboundary(h, T.action)
    if not G.action.is_trivial():
        raise ConsistencyError("affine coboundary produced action adjustments")
    Im = T.I.module
    return Cocycle(
        T.action,
        {k: Im.sub(v, G.tplus[k]) for k, v in T.tplus.items()},
        {k: Im.sub(v, G.tr[k]) for k, v in T.tr.items()},
        {k: Im.sub(v, G.tf[k]) for k, v in T.tf.items()},
    )


def twist_cocycle(T, pair):
    """Factor sets twisted by a compatible pair; action terms unchanged."""
    alpha, beta = pair
    Q, I = T.Q, T.I
    Im = I.module
    tplus = {}
    for (x, y), v in T.tplus.items():
        tplus[(x, y)] = Im.sub(
            alpha(v),
            Im.add(T.tplus[(beta(x), y)], T.tplus[(x, beta(y))]),
        )
    tr = {}
    for (r, x), v in T.tr.items():
        tr[(r, x)] = Im.sub(alpha(v), T.tr[(r, beta(x))])
    tf = {}
    for (f, xs), v in T.tf.items():
        acc = alpha(v)
        for i in range(len(xs)):
            acc = Im.sub(acc, T.tf[(f, substitute(xs, (i,), (beta(xs[i]),)))])
        tf[(f, xs)] = acc
    return Cocycle(T.action, tplus, tr, tf)


def _is_affine_coboundary(S, action):
    """Witness making S the coboundary of a map over the action, or None."""
    Q, I = action.Q, action.I
    for h in all_witness_maps(Q, I):
        G = coboundary(h, action)
        if (
            G.tplus == S.tplus
            and G.tr == S.tr
            and G.tf == S.tf
        ):
            return h
    return None


def factor_sets_multilinear(S):
    """Membership of a group-trivial affine cocycle in the unconstrained
    variety's cocycle set: the operation factor sets must be multilinear."""
    Q, I = S.Q, S.I
    for f, op in Q.ops.items():
        n = op.arity
        for slot in range(n):
            for xs in itertools.product(mod_elements(Q.module), repeat=n):
                for y in mod_elements(Q.module):
                    bumped = substitute(xs, (slot,), (Q.module.add(xs[slot], y),))
                    swapped = substitute(xs, (slot,), (y,))
                    if S.tf[(f, bumped)] != I.module.add(
                        S.tf[(f, xs)], S.tf[(f, swapped)]
                    ):
                        return False
    return True


@dataclass
class WellsClass:
    cocycle: Cocycle
    witness: dict | None

    @property
    def is_zero(self):
        return self.witness is not None


def wells_map(pair, T):
    """Obstruction class of a compatible pair against a group-trivial
    cocycle over affine datum."""
    if not (T.I.is_abelian() and T.is_linear()):
        raise MlexError("the obstruction map needs affine datum")
    T0, _ = group_trivialize(T)
    if T0 is None:
        raise MlexError("cocycle is not group-trivial")
    S = twist_cocycle(T0, pair)
    S.validate()
    if not factor_sets_multilinear(S):
        raise ConsistencyError("twisted factor sets are not multilinear")
    return WellsClass(S, _is_affine_coboundary(S, T.action))


@dataclass
class WellsReport:
    checks: dict
    der_ideal_count: int
    pair_count: int
    kernel_pairs: int

    @property
    def passed(self):
        return all(self.checks.values())

    def lines(self):
        out = []
        for name, ok in self.checks.items():
            out.append(f"{'PASS' if ok else 'FAIL'}  {name}")
        return out


def lie_variety(modulus):
    sig = termlang.Signature(modulus, (("br", 2),), bracket="br")
    ids = (
        termlang.parse_identity("[x, x] = 0", sig),
        termlang.parse_identity("[x, y] + [y, x] = 0", sig),
        termlang.parse_identity(
            "[[x, y], z] + [[y, z], x] + [[z, x], y] = 0", sig
        ),
    )
    return termlang.Variety("lie", sig, ids)


def verify_wells(E, T=None, depth=3):
    """Exactness report for the derivation sequence of a group-trivial
    extension realizing affine datum, plus the semidirect corollary."""
    T = T or extract_cocycle(E)
    if not (T.I.is_abelian() and T.is_linear()):
        raise MlexError("the derivation sequence needs affine datum")
    T0, witness = group_trivialize(T)
    if T0 is None:
        raise MlexError("extension is not group-trivial")
    raw = SemidirectProduct(T0)
    E0, encode, decode = raw.extension_record()
    M, Q, I = E0.M, E0.Q, E0.I
    checks = {}

    kernel_set = set(E0.iota.image_elements())
    der_ideal = ideal_preserving(M, kernel_set)
    checks["derivations bracket-close and satisfy Jacobi"] = check_jacobi(der_ideal)

    pairs = compatible_pairs(I, Q, T0.action)
    datum_ders = datum_derivations(Q, I, T0.action)
    datum_keys = [h_key(h, Q) for h in datum_ders]

    # first arrow: datum derivation -> kernel-valued derivation of M
    def inflate(h):
        images = []
        for g in M.module.generators():
            x = E0.pi(g)
            images.append(E0.iota(h[x]))
        return LinMap(M.module, M.module, tuple(images))

    inflated = {}
    arrows_are_derivations = True
    for h in datum_ders:
        phi = inflate(h)
        table_ok = all(
            phi(m) == E0.iota(h[E0.pi(m)]) for m in mod_elements(M.module)
        )
        if not table_ok or phi.images not in {d.images for d in der_ideal}:
            arrows_are_derivations = False
        inflated[h_key(h, Q)] = phi
    checks["datum derivations inflate to ideal-preserving derivations"] = (
        arrows_are_derivations
    )
    checks["first arrow injective"] = len(
        {phi.images for phi in inflated.values()}
    ) == len(datum_ders)

    psi_of = {d.images: project_pair(d, E0) for d in der_ideal}
    for d in der_ideal:
        a, b = psi_of[d.images]
        if not pair_is_compatible(a, b, T0.action):
            raise ConsistencyError("projected pair fails compatibility")

    ker_psi = {
        d.images
        for d in der_ideal
        if all(img.is_zero() for img in psi_of[d.images][0].images)
        and all(img.is_zero() for img in psi_of[d.images][1].images)
    }
    checks["kernel of projection equals the inflated datum derivations"] = ker_psi == {
        phi.images for phi in inflated.values()
    }

    # kernel of the projection is isomorphic to the datum derivations via
    # evaluation along the lifting
    delta_keys = set()
    for imgs in ker_psi:
        phi = LinMap(M.module, M.module, imgs)
        inv = E0.iota_inverse()
        table = {x: inv[phi(E0.lifting[x])] for x in mod_elements(Q.module)}
        delta_keys.add(h_key(table, Q))
    checks["kernel maps onto the datum derivations"] = delta_keys == set(datum_keys)

    wells = {}
    for pair in pairs:
        wells[(pair[0].images, pair[1].images)] = wells_map(pair, T0)
    ker_wells = {
        key for key, cls in wells.items() if cls.is_zero
    }
    im_psi = {(a.images, b.images) for a, b in psi_of.values()}
    checks["image of projection equals kernel of the obstruction map"] = (
        im_psi == ker_wells
    )

    # corollary: the ideal-preserving derivations split over the kernel of
    # the obstruction map, with vanishing extension class
    cor = _verify_wells_corollary(
        E0, T0, der_ideal, psi_of, wells, ker_wells, datum_ders, inflated
    )
    checks.update(cor)
    return WellsReport(
        checks,
        der_ideal_count=len(der_ideal),
        pair_count=len(pairs),
        kernel_pairs=len(ker_wells),
    )


def _imgs_key(images):
    return tuple(e.coords for e in images)


def _pair_key(key):
    return (_imgs_key(key[0]), _imgs_key(key[1]))


def _verify_wells_corollary(E0, T0, der_ideal, psi_of, wells, ker_wells, datum_ders, inflated):
    M, Q, I = E0.M, E0.Q, E0.I
    checks = {}
    modulus = M.module.modulus

    # section of the projection over the kernel of the obstruction map
    pair_of = {}
    for d in der_ideal:
        pair_of[d.images] = psi_of[d.images]
    section = {}
    ok_section = True
    for key in ker_wells:
        alpha = LinMap(I.module, I.module, key[0])
        beta = LinMap(Q.module, Q.module, key[1])
        h = wells[key].witness
        images = []
        for g in M.module.generators():
            x = E0.pi(g)
            a = E0.iota_inverse()[M.module.sub(g, E0.lifting[x])]
            images.append(
                M.module.add(
                    E0.iota(I.module.add(alpha(a), h[x])), E0.lifting[beta(x)]
                )
            )
        phi = LinMap(M.module, M.module, tuple(images))
        if phi.images not in {d.images for d in der_ideal}:
            ok_section = False
        got = project_pair(phi, E0)
        if (got[0].images, got[1].images) != key:
            ok_section = False
        section[key] = phi
    checks["obstruction-kernel pairs lift through a section"] = ok_section

    # Lie algebra structures: the ideal-preserving derivations as an
    # extension of the kernel pairs by the datum derivations
    der_items = sorted({d.images for d in der_ideal}, key=_imgs_key)
    maps = {imgs: LinMap(M.module, M.module, imgs) for imgs in der_items}
    D_alg, enc_D, dec_D = algebra_from_ops(
        der_items,
        lambda a, b: lin_add(maps[a], maps[b]).images,
        LinMap.zero_map(M.module, M.module).images,
        {"br": (2, lambda a, b: lin_bracket(maps[a], maps[b]).images)},
        modulus,
    )
    V_lie = lie_variety(modulus)
    checks["ideal-preserving derivations form a Lie ring"] = termlang.in_variety(
        D_alg, V_lie
    )

    kw_items = sorted(ker_wells, key=_pair_key)
    pair_maps = {
        key: (LinMap(I.module, I.module, key[0]), LinMap(Q.module, Q.module, key[1]))
        for key in kw_items
    }

    def kw_add(k1, k2):
        return (
            lin_add(pair_maps[k1][0], pair_maps[k2][0]).images,
            lin_add(pair_maps[k1][1], pair_maps[k2][1]).images,
        )

    def kw_bracket(k1, k2):
        return (
            lin_bracket(pair_maps[k1][0], pair_maps[k2][0]).images,
            lin_bracket(pair_maps[k1][1], pair_maps[k2][1]).images,
        )

    kw_zero = (
        LinMap.zero_map(I.module, I.module).images,
        LinMap.zero_map(Q.module, Q.module).images,
    )
    KW_alg, enc_KW, dec_KW = algebra_from_ops(
        kw_items, kw_add, kw_zero, {"br": (2, kw_bracket)}, modulus
    )

    ker_set = {enc_D[phi.images] for phi in inflated.values()}
    K_alg, iota_K, _ = subalgebra(D_alg, ker_set)
    pi_images = []
    for g in D_alg.module.generators():
        a, b = psi_of[dec_D[g]]
        pi_images.append(enc_KW[(a.images, b.images)])
    pi_lie = LinMap(D_alg.module, KW_alg.module, tuple(pi_images))
    lifting_lie = {}
    for q in mod_elements(KW_alg.module):
        key = dec_KW[q]
        lifting_lie[q] = enc_D[section[key].images]
    E_lie = ExtensionRecord(D_alg, KW_alg, K_alg, pi_lie, iota_K, lifting_lie)
    try:
        E_lie.validate()
        S = extract_cocycle(E_lie)
        checks["derivation extension realizes a Lie-compatible cocycle"] = True
    except MlexError:
        checks["derivation extension realizes a Lie-compatible cocycle"] = False
        return checks
    checks["section action is Lie-variety compatible"] = is_compatible(
        Cocycle.zero(KW_alg, K_alg, S.action), V_lie, check_datum=False
    )
    witness = _is_affine_coboundary(S, S.action) if S.is_linear() else None
    if witness is None:
        # general search: equivalence with the action-only cocycle
        from .cocycle import equivalent

        witness = equivalent(S, Cocycle.zero(KW_alg, K_alg, S.action))
    checks["extension class of the derivation sequence vanishes"] = witness is not None
    return checks
