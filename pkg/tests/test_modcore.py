import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from mlex.errors import MlexError
from mlex.modcore import (
    Element,
    LinMap,
    ZmModule,
    abelian_decomposition,
    hom_enumerate,
    mod_elements,
    smith_normal_form,
    solve_congruences,
    solve_linear,
    span_elements,
)


def matmul(A, B):
    return [
        [sum(A[i][k] * B[k][j] for k in range(len(B))) for j in range(len(B[0]))]
        for i in range(len(A))
    ]


def test_module_validation():
    with pytest.raises(MlexError):
        ZmModule(2, (3,))
    with pytest.raises(MlexError):
        ZmModule(0, ())
    M = ZmModule(4, (2, 4))
    assert M.size() == 8
    assert M.element((3, 5)).coords == (1, 1)


def test_mod_elements_examples():
    assert [e.coords for e in mod_elements(ZmModule(2, (2,)))] == [(0,), (1,)]
    assert [e.coords for e in mod_elements(ZmModule(2, ()))] == [()]
    assert [e.coords for e in mod_elements(ZmModule(2, (2, 2)))] == [
        (0, 0),
        (0, 1),
        (1, 0),
        (1, 1),
    ]


def test_element_arithmetic():
    M = ZmModule(4, (2, 4))
    a, b = M.element((1, 3)), M.element((1, 2))
    assert (a + b).coords == (0, 1)
    assert (-a).coords == (1, 1)
    assert (3 * a).coords == (1, 1)
    assert M.element_order(M.element((0, 1))) == 4


@settings(max_examples=80, deadline=None)
@given(st.data())
def test_smith_recomposition(data):
    rows = data.draw(st.integers(1, 4))
    cols = data.draw(st.integers(1, 4))
    A = [
        [data.draw(st.integers(-9, 9)) for _ in range(cols)] for _ in range(rows)
    ]
    U, D, V = smith_normal_form(A)
    assert matmul(matmul(U, A), V) == D
    for i in range(rows):
        for j in range(cols):
            if i != j:
                assert D[i][j] == 0
    diag = [D[i][i] for i in range(min(rows, cols))]
    for a, b in zip(diag, diag[1:]):
        if a:
            assert b % a == 0
        else:
            assert b == 0
        assert a >= 0


def test_solve_linear_examples():
    Z4 = ZmModule(4, (4,))
    sol = solve_linear([[2]], Z4.element((0,)))
    assert sol.particular == (0,)
    assert sol.kernel == [(2,)]
    Z2 = ZmModule(2, (2,))
    sol = solve_linear([[1]], Z2.element((1,)))
    assert sol.particular == (1,) and sol.kernel == []
    assert solve_linear([[0]], Z2.element((1,))) is None


def close_over(particular, kernel, moduli):
    got = {tuple(particular)}
    frontier = [tuple(particular)]
    while frontier:
        new = []
        for s in frontier:
            for k in kernel:
                e = tuple((a + b) % c for a, b, c in zip(s, k, moduli))
                if e not in got:
                    got.add(e)
                    new.append(e)
        frontier = new
    return got


def test_solver_against_exhaustive_search():
    rng = random.Random(5)
    checked = 0
    while checked < 150:
        rows, n = rng.randint(1, 2), rng.randint(1, 3)
        rm = [rng.choice([2, 4]) for _ in range(rows)]
        cm = [rng.choice([2, 4]) for _ in range(n)]
        A = [[rng.randint(0, 3) for _ in range(n)] for _ in range(rows)]
        if not all(cm[j] * A[i][j] % rm[i] == 0 for i in range(rows) for j in range(n)):
            continue
        b = [rng.randint(0, rm[i] - 1) for i in range(rows)]
        sol = solve_congruences(A, b, rm, cm)
        brute = {
            x
            for x in itertools.product(*(range(c) for c in cm))
            if all(
                sum(A[i][j] * x[j] for j in range(n)) % rm[i] == b[i]
                for i in range(rows)
            )
        }
        if sol is None:
            assert not brute
        else:
            assert close_over(sol.particular, sol.kernel, cm) == brute
        checked += 1


def test_hom_enumerate_counts():
    Z2 = ZmModule(2, (2,))
    assert len(hom_enumerate(Z2, Z2)) == 2
    Z2m4, Z4m4 = ZmModule(4, (2,)), ZmModule(4, (4,))
    maps = hom_enumerate(Z2m4, Z4m4)
    assert len(maps) == 2
    assert sorted(m.images[0].coords for m in maps) == [(0,), (2,)]
    assert len(hom_enumerate(Z4m4, Z2m4)) == 2
    # count formula: product of annihilator sizes
    M, N = ZmModule(4, (2, 4)), ZmModule(4, (4,))
    expected = 1
    for d in M.factors:
        expected *= sum(
            1 for n in mod_elements(N) if N.scalar(d, n).is_zero()
        )
    assert len(hom_enumerate(M, N)) == expected


def test_linmap_rejects_bad_order():
    Z2, Z4 = ZmModule(4, (2,)), ZmModule(4, (4,))
    with pytest.raises(MlexError):
        LinMap(Z2, Z4, (Z4.element((1,)),))


def test_linmap_linearity_exhaustive():
    M, N = ZmModule(4, (2, 4)), ZmModule(4, (4,))
    for f in hom_enumerate(M, N)[:6]:
        for a in mod_elements(M):
            for b in mod_elements(M):
                for r in range(4):
                    assert f(M.add(M.scalar(r, a), b)) == N.add(
                        N.scalar(r, f(a)), f(b)
                    )


def test_span_elements():
    M = ZmModule(4, (4,))
    assert {e.coords for e in span_elements(M, [M.element((2,))])} == {(0,), (2,)}


def test_abelian_decomposition_shuffled():
    rng = random.Random(11)
    for factors in [(2,), (4,), (2, 2), (2, 4), (4, 4), (2, 2, 2)]:
        M = ZmModule(4, factors)
        elems = mod_elements(M)
        rng.shuffle(elems)
        orders, gens, coords = abelian_decomposition(elems, M.add, M.zero())
        assert sorted(orders) == sorted(factors)
        assert len(coords) == M.size()
        # ascending divisibility
        for a, b in zip(orders, orders[1:]):
            assert b % a == 0
