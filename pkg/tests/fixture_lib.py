"""Shared fixture builders for the test suite.

Names used throughout:
  F1 datum: Q = I = Z2 with one binary operation that is zero on both.
  F2: Z2 x Z2 over m = 2 with f(e2, e2) = e1.
  S3: Z2^3 with f(e3, e3) = e2 and f(e2, e2) = e1 (3-step solvable).
"""

import itertools

from mlex.modcore import ZmModule, mod_elements
from mlex.algebra import Algebra, MultilinearOp, ideal_generated
from mlex.termlang import Signature, Variety, parse_identity
from mlex.cocycle import Action, Cocycle, mlf_variety
from mlex.cocycle import _action_from_generator_tables


def z2(m=2):
    return ZmModule(m, (2,))


def zero_binary_algebra(module, name="f"):
    return Algebra(module, {name: MultilinearOp(name, 2, module, {})})


def f1_datum(m=2):
    Q = zero_binary_algebra(z2(m))
    I = zero_binary_algebra(z2(m))
    return Q, I


def f2_algebra():
    M = ZmModule(2, (2, 2))
    return Algebra(M, {"f": MultilinearOp("f", 2, M, {(1, 1): M.element((1, 0))})})


def f2_kernel_ideal(F2):
    return ideal_generated(F2, [F2.module.element((1, 0))])


def s3_algebra():
    M = ZmModule(2, (2, 2, 2))
    op = MultilinearOp(
        "f", 2, M, {(2, 2): M.generator(1), (1, 1): M.generator(0)}
    )
    return Algebra(M, {"f": op})


def nonabelian_kernel():
    """Kernel algebra Z2 with f(e, e) = e."""
    Z = z2()
    return Algebra(Z, {"f": MultilinearOp("f", 2, Z, {(0, 0): Z.element((1,))})})


def pure_datum_m4():
    Z = ZmModule(4, (2,))
    return Algebra(Z, {}), Algebra(Z, {})


def sig_f(m=2):
    return Signature(m, (("f", 2),), bracket="f")


def leibniz_variety(m=2):
    sig = sig_f(m)
    return Variety(
        "leibniz", sig, (parse_identity("[x,[y,z]] = [[x,y],z] + [y,[x,z]]", sig),)
    )


def f2_cocycle():
    """Datum cocycle reconstructing F2: trivial action, T_f(1,1) = 1."""
    Q, I = f1_datum()
    one = Q.module.element((1,))
    return Cocycle.from_cells(Action.trivial(Q, I), tf_cells={("f", (one, one)): one})


def side_action(slot=1):
    """Nontrivial unary action on the F1 datum: the distinguished entry is
    multiplied by the other quotient coordinate."""
    Q, I = f1_datum()
    one = Q.module.element((1,))
    tables = {("f", (slot,)): {((one,), (0,)): one}}
    return _action_from_generator_tables(Q, I, tables)


def all_f1_cocycles():
    """Raw enumeration over the F1 datum: all actions, free factor sets,
    free scalar factor sets (64 + scalar variants)."""
    Q, I = f1_datum()
    one = Q.module.element((1,))
    zero = Q.module.zero()

    def el(bit):
        return one if bit else zero

    out = []
    for a1 in range(2):
        for a2 in range(2):
            tables = {}
            if a1:
                tables[("f", (0,))] = {((one,), (0,)): one}
            if a2:
                tables[("f", (1,))] = {((one,), (0,)): one}
            act = _action_from_generator_tables(Q, I, tables)
            for tp, tfv, t0, t1 in itertools.product(range(2), repeat=4):
                T = Cocycle(
                    act,
                    {(one, one): el(tp)},
                    {(0, one): el(t0), (1, one): el(t1)},
                    {("f", (one, one)): el(tfv)},
                )
                out.append(T)
    return out


def hs_fixture_a():
    """F2 with Z2 coefficients and the trivial action."""
    F2 = f2_algebra()
    ideal = f2_kernel_ideal(F2)
    A = zero_binary_algebra(z2())
    return F2, ideal, A, Action.trivial(F2, A), mlf_variety(sig_f())


def hs_fixture_b():
    """F2 with Z2 x Z2 coefficients; the kernel generator acts through a
    projection with a proper null submodule."""
    F2 = f2_algebra()
    ideal = f2_kernel_ideal(F2)
    Am = ZmModule(2, (2, 2))
    A = Algebra(Am, {"f": MultilinearOp("f", 2, Am, {})})

    def phi(a):
        return Am.element((a.coords[1], 0))

    table = {}
    for mel in mod_elements(F2.module):
        for a in mod_elements(Am):
            v = phi(a) if mel.coords[0] == 1 else Am.zero()
            table[((mel,), (a,))] = v
    action = Action(F2, A, {("f", (1,)): table})
    return F2, ideal, A, action, mlf_variety(sig_f())


def hs_fixture_c():
    """Z4 with zero multiplication over m = 4; the group factor set of the
    extension is nontrivial."""
    Z4 = ZmModule(4, (4,))
    M = Algebra(Z4, {"f": MultilinearOp("f", 2, Z4, {})})
    ideal = ideal_generated(M, [Z4.element((2,))])
    A = Algebra(ZmModule(4, (2,)), {"f": MultilinearOp("f", 2, ZmModule(4, (2,)), {})})
    return M, ideal, A, Action.trivial(M, A), mlf_variety(sig_f(4))


F2_FILE = """\
[ring] modulus = 2
[module M2] factors = 2,2
[module Z] factors = 2
[algebra M] module = M2; op f/2: (2,2) -> (1,0)
[algebra Q] module = Z; op f/2
[algebra I] module = Z; op f/2
[ideal K] algebra = M; generators = (1,0)
[variety leibniz] signature = f/2; bracket = f; identity "[x,[y,z]] = [[x,y],z] + [y,[x,z]]"
[action t0] Q = Q; I = I
[cocycle T] action = t0; Tf: ((1),(1)) -> (1)
[cocycle Z0] action = t0
"""

HS_FILE = """\
[ring] modulus = 2
[module M2] factors = 2,2
[module Z] factors = 2
[algebra M] module = M2; op f/2: (2,2) -> (1,0)
[algebra A] module = Z; op f/2
[ideal I] algebra = M; generators = (1,0)
[action act] Q = M; I = A
"""

LEIBNIZ_FILE = """\
[ring] modulus = 2
[variety leibniz] signature = br/2; bracket = br; identity "[x,[y,z]] = [[x,y],z] + [y,[x,z]]"
"""

ROTA_FILE = """\
[ring] modulus = 6
[variety rotabaxter] signature = br/2,P/1; bracket = br; identity "[P(x), P(y)] = P([P(x), y]) + P([x, P(y)]) + 2*P([x, y])"
"""

S3_FILE = """\
[ring] modulus = 2
[module M3] factors = 2,2,2
[algebra S3] module = M3; op f/2: (3,3) -> (0,1,0); op f/2: (2,2) -> (1,0,0)
"""
