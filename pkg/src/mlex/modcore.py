"""Exact arithmetic and linear algebra over the ring Z/m.

Finite modules are explicit products of cyclic groups Z_d1 x ... x Z_dk
with every d_i dividing the session modulus m.  Every element has a
unique coordinate normal form, every enumeration is lexicographic in
those coordinates, and all arithmetic is integer-exact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import MlexError


@dataclass(frozen=True)
class ZmModule:
    """A finite Z/m-module with canonical generators e_1..e_k.

    ``factors[i]`` is the additive order of e_{i+1}; each must divide
    ``modulus``.  The empty factor tuple is the zero module.
    """

    modulus: int
    factors: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(int(d) for d in self.factors))
        if self.modulus < 1:
            raise MlexError("modulus must be a positive integer")
        for d in self.factors:
            if d < 1 or self.modulus % d != 0:
                raise MlexError(
                    f"cyclic order {d} does not divide the modulus {self.modulus}"
                )

    @property
    def rank(self):
        return len(self.factors)

    def size(self):
        n = 1
        for d in self.factors:
            n *= d
        return n

    def zero(self):
        return Element(self, (0,) * self.rank)

    def element(self, coords):
        coords = tuple(coords)
        if len(coords) != self.rank:
            raise MlexError(
                f"expected {self.rank} coordinates, got {len(coords)}"
            )
        return Element(self, tuple(int(c) % d for c, d in zip(coords, self.factors)))

    def generator(self, i):
        coords = [0] * self.rank
        coords[i] = 1
        return Element(self, tuple(coords))

    def generators(self):
        return [self.generator(i) for i in range(self.rank)]

    def add(self, a, b):
        self._check(a), self._check(b)
        return Element(
            self,
            tuple((x + y) % d for x, y, d in zip(a.coords, b.coords, self.factors)),
        )

    def neg(self, a):
        self._check(a)
        return Element(self, tuple((-x) % d for x, d in zip(a.coords, self.factors)))

    def scalar(self, r, a):
        self._check(a)
        return Element(self, tuple((r * x) % d for x, d in zip(a.coords, self.factors)))

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def element_order(self, a):
        """Additive order of ``a``."""
        self._check(a)
        t, y = 1, a
        zero = self.zero()
        while y != zero:
            y = self.add(y, a)
            t += 1
        return t

    def _check(self, a):
        if a.module != self:
            raise MlexError(f"element {a} does not live in module {self}")

    def __str__(self):
        if not self.factors:
            return "0"
        return "x".join(f"Z{d}" for d in self.factors)


@dataclass(frozen=True)
class Element:
    module: ZmModule
    coords: tuple[int, ...]

    def __add__(self, other):
        return self.module.add(self, other)

    def __sub__(self, other):
        return self.module.sub(self, other)

    def __neg__(self):
        return self.module.neg(self)

    def __rmul__(self, r):
        return self.module.scalar(r, self)

    def is_zero(self):
        return all(c == 0 for c in self.coords)

    def __str__(self):
        return "(" + ",".join(str(c) for c in self.coords) + ")"


def mod_elements(module):
    """All elements of ``module`` in lexicographic coordinate order, zero first."""
    return [
        Element(module, coords)
        for coords in itertools.product(*(range(d) for d in module.factors))
    ]


@dataclass(frozen=True)
class LinMap:
    """A module homomorphism given by the images of the canonical generators.

    Well-definedness demands d_i * images[i] = 0 in the target, where d_i
    is the order of the i-th source generator.
    """

    source: ZmModule
    target: ZmModule
    images: tuple[Element, ...]

    def __post_init__(self):
        object.__setattr__(self, "images", tuple(self.images))
        if len(self.images) != self.source.rank:
            raise MlexError("one image per source generator is required")
        for d, img in zip(self.source.factors, self.images):
            if img.module != self.target:
                raise MlexError("image outside the target module")
            if not self.target.scalar(d, img).is_zero():
                raise MlexError(
                    f"map not well defined: order {d} generator sent to {img}"
                )

    def __call__(self, a):
        if a.module != self.source:
            raise MlexError("argument outside the source module")
        out = self.target.zero()
        for c, img in zip(a.coords, self.images):
            out = self.target.add(out, self.target.scalar(c, img))
        return out

    def compose(self, other):
        """self after other."""
        if other.target != self.source:
            raise MlexError("composition mismatch")
        return LinMap(other.source, self.target, tuple(self(g) for g in other.images))

    def image_elements(self):
        seen = {self.target.zero()}
        for a in mod_elements(self.source):
            seen.add(self(a))
        return seen

    def kernel_elements(self):
        return {a for a in mod_elements(self.source) if self(a).is_zero()}

    def is_injective(self):
        return len(self.kernel_elements()) == 1

    def is_surjective(self):
        return len(self.image_elements()) == self.target.size()

    def is_bijective(self):
        return self.is_injective() and self.is_surjective()

    @staticmethod
    def zero_map(source, target):
        return LinMap(source, target, tuple(target.zero() for _ in range(source.rank)))

    @staticmethod
    def identity(module):
        return LinMap(module, module, tuple(module.generators()))


def hom_enumerate(source, target):
    """All module homomorphisms source -> target, in lexicographic order.

    A generator of order d may be sent exactly to the elements killed by
    d, so the count is the product over generators of the sizes of those
    annihilator sets.
    """
    candidate_lists = []
    for d in source.factors:
        candidate_lists.append(
            [n for n in mod_elements(target) if target.scalar(d, n).is_zero()]
        )
    return [
        LinMap(source, target, images)
        for images in itertools.product(*candidate_lists)
    ]


# -- integer Smith normal form -------------------------------------------------


def _swap_rows(M, i, j):
    M[i], M[j] = M[j], M[i]


def _swap_cols(M, i, j):
    for row in M:
        row[i], row[j] = row[j], row[i]


def _add_row(M, dst, src, k):
    M[dst] = [a + k * b for a, b in zip(M[dst], M[src])]


def _add_col(M, dst, src, k):
    for row in M:
        row[dst] += k * row[src]


def _negate_row(M, i):
    M[i] = [-a for a in M[i]]


def smith_normal_form(A):
    """Return (U, D, V) with U*A*V = D over the integers.

    U and V are unimodular; D is diagonal with nonnegative entries and
    D[i][i] divides D[i+1][i+1].
    """
    rows = len(A)
    cols = len(A[0]) if rows else 0
    D = [list(map(int, row)) for row in A]
    U = [[1 if i == j else 0 for j in range(rows)] for i in range(rows)]
    V = [[1 if i == j else 0 for j in range(cols)] for i in range(cols)]

    def pivot_search(t):
        best = None
        for i in range(t, rows):
            for j in range(t, cols):
                v = abs(D[i][j])
                if v and (best is None or v < best[0]):
                    best = (v, i, j)
        return best

    t = 0
    while t < min(rows, cols):
        found = pivot_search(t)
        if found is None:
            break
        _, pi, pj = found
        _swap_rows(D, t, pi), _swap_rows(U, t, pi)
        _swap_cols(D, t, pj), _swap_cols(V, t, pj)
        while True:
            # clear column t below the pivot
            dirty = False
            for i in range(t + 1, rows):
                if D[i][t]:
                    q = D[i][t] // D[t][t]
                    _add_row(D, i, t, -q), _add_row(U, i, t, -q)
                    if D[i][t]:
                        _swap_rows(D, t, i), _swap_rows(U, t, i)
                        dirty = True
            if dirty:
                continue
            for j in range(t + 1, cols):
                if D[t][j]:
                    q = D[t][j] // D[t][t]
                    _add_col(D, j, t, -q), _add_col(V, j, t, -q)
                    if D[t][j]:
                        _swap_cols(D, t, j), _swap_cols(V, t, j)
                        dirty = True
            if dirty:
                continue
            # pivot must divide every remaining entry for the divisor chain
            offender = None
            for i in range(t + 1, rows):
                for j in range(t + 1, cols):
                    if D[i][j] % D[t][t]:
                        offender = i
                        break
                if offender is not None:
                    break
            if offender is None:
                break
            _add_row(D, t, offender, 1), _add_row(U, t, offender, 1)
        if D[t][t] < 0:
            _negate_row(D, t), _negate_row(U, t)
        t += 1
    return U, D, V


def _mat_vec(M, v):
    return [sum(a * b for a, b in zip(row, v)) for row in M]


@dataclass
class LinearSolution:
    """A particular solution plus generators of the solution lattice."""

    particular: tuple[int, ...]
    kernel: list[tuple[int, ...]]


def solve_congruences(A, b, row_moduli, col_moduli):
    """Solve A x = b where row i is read modulo row_moduli[i] and the
    unknown x_j lives in Z_{col_moduli[j]}.

    Returns a LinearSolution (particular + kernel generators of the
    reduced solution set) or None when the system is inconsistent.
    """
    rows = len(row_moduli)
    n = len(col_moduli)
    if len(b) != rows or any(len(row) != n for row in A):
        raise MlexError("dimension mismatch in linear system")
    # integer system [A | diag(e)] z = b
    B = [list(A[i]) + [row_moduli[i] if j == i else 0 for j in range(rows)]
         for i in range(rows)]
    U, D, V = smith_normal_form(B)
    w = [0] * (n + rows)
    ub = _mat_vec(U, list(b))
    for i in range(rows):
        d = D[i][i] if i < len(D) and i < len(D[i]) else 0
        if d:
            if ub[i] % d:
                return None
            w[i] = ub[i] // d
        elif ub[i]:
            return None
    z = _mat_vec(V, w)
    particular = tuple(z[j] % col_moduli[j] if col_moduli[j] else z[j] for j in range(n))

    free = [i for i in range(n + rows) if i >= rows or D[i][i] == 0]
    kernel = []
    seen = set()
    for i in free:
        vec = tuple(
            V[j][i] % col_moduli[j] if col_moduli[j] else V[j][i] for j in range(n)
        )
        if any(vec) and vec not in seen:
            seen.add(vec)
            kernel.append(vec)
    return LinearSolution(particular, kernel)


def solve_linear(A, b, col_moduli=None):
    """Convenience wrapper: b is one Element whose factor orders are the
    row moduli; unknowns default to full Z/m residues."""
    row_moduli = list(b.module.factors)
    if col_moduli is None:
        ncols = len(A[0]) if A else 0
        col_moduli = [b.module.modulus] * ncols
    return solve_congruences(A, list(b.coords), row_moduli, list(col_moduli))


def span_elements(module, gens):
    """The submodule generated by ``gens`` as an explicit element set."""
    zero = module.zero()
    closed = {zero}
    frontier = [zero]
    while frontier:
        nxt = []
        for s in frontier:
            for g in gens:
                e = module.add(s, g)
                if e not in closed:
                    closed.add(e)
                    nxt.append(e)
        frontier = nxt
    return closed


def abelian_decomposition(elements, add, zero):
    """Decompose a finite abelian group given by a raw addition function.

    Returns (orders, gens, coords) where orders is the invariant-factor
    list in ascending divisibility order (no 1 entries), gens the
    matching generators, and coords maps every element to its
    coordinate tuple.  Deterministic for a fixed element order.
    """
    elements = list(elements)
    index = {e: i for i, e in enumerate(elements)}

    def element_order(x):
        t, y = 1, x
        while y != zero:
            y = add(y, x)
            t += 1
        return t

    span = [zero]
    span_set = {zero}
    gens, orders = [], []
    while len(span) < len(elements):
        best = None
        for x in elements:
            t, y = 1, x
            while y not in span_set:
                y = add(y, x)
                t += 1
            if t > 1 and (best is None or t > best[0]):
                best = (t, x)
        d, x = best
        rep = None
        for s in span:
            cand = add(x, s)
            if element_order(cand) == d:
                rep = cand
                break
        if rep is None:
            raise MlexError("internal: no generator representative of full order")
        gens.append(rep)
        orders.append(d)
        new_span = []
        seen = set()
        for s in span:
            y = s
            for _ in range(d):
                if y not in seen:
                    seen.add(y)
                    new_span.append(y)
                y = add(y, rep)
        span = sorted(new_span, key=lambda e: index[e])
        span_set = seen
    # greedy order is descending divisibility; flip to ascending
    gens.reverse()
    orders.reverse()
    coords = {}
    for tup in itertools.product(*(range(d) for d in orders)):
        e = zero
        for c, g in zip(tup, gens):
            for _ in range(c):
                e = add(e, g)
        if e in coords:
            raise MlexError("internal: generators do not give a direct sum")
        coords[e] = tup
    if len(coords) != len(elements):
        raise MlexError("internal: decomposition misses elements")
    return orders, gens, coords
