"""Dense multivariate truncated Taylor jets.

A :class:`JetSpace` fixes the index set: variables are split into
contiguous groups and each group carries a cap on its total degree.
A :class:`Jet` stores one Taylor coefficient per multi-index of its space,
i.e. the partial derivative divided by the product of factorials of the
orders. Arithmetic truncates silently at the caps.
"""

from __future__ import annotations

import functools
import itertools
import math
from typing import Iterable, Mapping, Sequence

import numpy as np

from ..errors import JetError
from . import _backend


def _group_indices(count: int, cap: int) -> list[tuple[int, ...]]:
    out = [t for t in itertools.product(range(cap + 1), repeat=count) if sum(t) <= cap]
    out.sort(key=lambda t: (sum(t), tuple(-v for v in t)))
    return out


class JetSpace:
    """Capped index set plus the precomputed tables jet arithmetic needs.

    Use :func:`jet_space` to obtain shared instances.
    """

    def __init__(self, groups: Sequence[tuple[int, int]]):
        self.groups = tuple((int(n), int(cap)) for n, cap in groups)
        if not self.groups or any(n < 1 or cap < 0 for n, cap in self.groups):
            raise ValueError(f"invalid jet groups {groups!r}")
        self.nvars = sum(n for n, _ in self.groups)
        self.max_order = sum(cap for _, cap in self.groups)
        self._group_of = []
        for g, (n, _) in enumerate(self.groups):
            self._group_of.extend([g] * n)

        parts = [_group_indices(n, cap) for n, cap in self.groups]
        idx = [sum(combo, ()) for combo in itertools.product(*parts)]
        idx.sort(key=lambda t: sum(t))  # stable: zero index first
        self.indices = np.array(idx, dtype=np.int64).reshape(len(idx), self.nvars)
        self.indices.setflags(write=False)
        self._pos = {t: i for i, t in enumerate(idx)}
        self.size = len(idx)
        fact = np.array([math.prod(math.factorial(v) for v in t) for t in idx], dtype=float)
        fact.setflags(write=False)
        self.factorials = fact

    def __repr__(self):
        return f"JetSpace({self.groups!r})"

    def cap_of(self, var: int) -> int:
        return self.groups[self._group_of[var]][1]

    def position(self, orders: Sequence[int]) -> int:
        key = tuple(int(o) for o in orders)
        if len(key) != self.nvars:
            raise JetError(f"multi-index length {len(key)} != variable count {self.nvars}")
        try:
            return self._pos[key]
        except KeyError:
            raise JetError(f"order not tracked: {key} exceeds caps {self.groups}") from None

    def contains(self, orders: Sequence[int]) -> bool:
        return tuple(int(o) for o in orders) in self._pos

    @functools.cached_property
    def mul_table(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Triples (ia, ib, ic) with index[ia] + index[ib] == index[ic], sorted by ic then ia."""
        ia, ib, ic = [], [], []
        for c, gamma in enumerate(self.indices.tolist()):
            for alpha in itertools.product(*(range(g + 1) for g in gamma)):
                beta = tuple(g - a for g, a in zip(gamma, alpha))
                ia.append(self._pos[alpha])
                ib.append(self._pos[beta])
                ic.append(c)
        order = np.lexsort((np.asarray(ia), np.asarray(ic)))
        tables = tuple(np.ascontiguousarray(np.asarray(t, dtype=np.intc)[order]) for t in (ia, ib, ic))
        for t in tables:
            t.setflags(write=False)
        return tables

    @functools.lru_cache(maxsize=None)
    def diff_table(self, var: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(dst, src, factor) such that d/dvar moves coeffs[src]*factor to dst."""
        dst, src, fac = [], [], []
        for i, alpha in enumerate(self.indices.tolist()):
            up = list(alpha)
            up[var] += 1
            j = self._pos.get(tuple(up))
            if j is not None:
                dst.append(i)
                src.append(j)
                fac.append(float(up[var]))
        return (np.array(dst, dtype=np.intp), np.array(src, dtype=np.intp), np.array(fac))

    @functools.lru_cache(maxsize=None)
    def section_table(self, target: "JetSpace", keep: tuple[int, ...],
                      fixed: tuple[tuple[int, int], ...]) -> tuple[np.ndarray, float]:
        fixed_map = dict(fixed)
        if len(keep) != target.nvars:
            raise JetError("section: kept variables do not match target space")
        src = np.empty(target.size, dtype=np.intp)
        for i, beta in enumerate(target.indices.tolist()):
            alpha = [fixed_map.get(v, 0) for v in range(self.nvars)]
            for k, v in enumerate(keep):
                alpha[v] = beta[k]
            j = self._pos.get(tuple(alpha))
            if j is None:
                raise JetError(f"order not tracked: {tuple(alpha)} exceeds caps {self.groups}")
            src[i] = j
        scale = float(math.prod(math.factorial(o) for o in fixed_map.values()))
        return src, scale


@functools.lru_cache(maxsize=None)
def jet_space(*groups: tuple[int, int]) -> JetSpace:
    """Shared :class:`JetSpace` for ``groups`` = ((count, cap), ...)."""
    return JetSpace(groups)


def rs_space() -> JetSpace:
    """Jets over (r, s) with r-degree <= 2 and s-degree <= 6."""
    return jet_space((1, 2), (1, 6))


def xy_space(n: int, x_cap: int = 1, y_cap: int = 5) -> JetSpace:
    """Jets over (x^1..x^n, y^1..y^n) with separate x and y total-degree caps."""
    return jet_space((n, x_cap), (n, y_cap))


def y_space(n: int, cap: int) -> JetSpace:
    return jet_space((n, cap))


def s_space(cap: int) -> JetSpace:
    return jet_space((1, cap))


Scalar = (int, float, np.floating, np.integer)


class Jet:
    """Immutable truncated Taylor expansion of a scalar function."""

    __slots__ = ("space", "coeffs")
    __array_priority__ = 1000  # numpy scalars defer to Jet operators

    def __init__(self, space: JetSpace, coeffs: np.ndarray):
        c = np.asarray(coeffs, dtype=float)
        if c.shape != (space.size,):
            raise JetError(f"coefficient array shape {c.shape} does not match space size {space.size}")
        if c.flags.writeable:
            c = c.copy()
            c.setflags(write=False)
        self.space = space
        self.coeffs = c

    # construction -----------------------------------------------------------------

    @classmethod
    def constant(cls, value: float, space: JetSpace) -> "Jet":
        c = np.zeros(space.size)
        c[0] = value
        return cls(space, c)

    @property
    def value(self) -> float:
        return float(self.coeffs[0])

    def is_constant(self) -> bool:
        return not self.coeffs[1:].any()

    def __repr__(self):
        nz = int(np.count_nonzero(self.coeffs))
        return f"Jet(value={self.value!r}, nonzero={nz}, space={self.space!r})"

    # coefficient access -----------------------------------------------------------

    def coefficient(self, orders: Sequence[int]) -> float:
        return float(self.coeffs[self.space.position(orders)])

    def partial(self, orders: Sequence[int]) -> float:
        """Mixed partial derivative with the given per-variable orders."""
        i = self.space.position(orders)
        return float(self.coeffs[i] * self.space.factorials[i])

    def partial_unit(self, *variables: int) -> float:
        """Partial derivative w.r.t. the listed variables (repeats allowed)."""
        orders = [0] * self.space.nvars
        for v in variables:
            orders[v] += 1
        return self.partial(orders)

    def diff(self, var: int) -> "Jet":
        """d/d(var) in the same space; top-degree coefficients become 0 (untracked)."""
        dst, src, fac = self.space.diff_table(var)
        out = np.zeros(self.space.size)
        out[dst] = self.coeffs[src] * fac
        return Jet(self.space, out)

    def section(self, target: JetSpace, keep: Sequence[int],
                orders: Mapping[int, int] | None = None) -> "Jet":
        """Partial derivative in the non-kept variables, as a jet in the kept ones.

        ``orders`` gives the derivative order for each dropped variable
        (default 0). The target caps must fit inside this space's caps.
        """
        fixed = tuple(sorted((orders or {}).items()))
        src, scale = self.space.section_table(target, tuple(keep), fixed)
        return Jet(target, self.coeffs[src] * scale)

    # arithmetic -------------------------------------------------------------------

    def _coerce(self, other) -> "Jet | None":
        if isinstance(other, Jet):
            if other.space is not self.space and other.space.groups != self.space.groups:
                raise JetError(f"jet caps differ: {self.space!r} vs {other.space!r}")
            return other
        if isinstance(other, Scalar):
            return None
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if o is None:
            c = self.coeffs.copy()
            c[0] += other
            return Jet(self.space, c)
        return Jet(self.space, self.coeffs + o.coeffs)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.space, -self.coeffs)

    def __pos__(self):
        return self

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if o is None:
            c = self.coeffs.copy()
            c[0] -= other
            return Jet(self.space, c)
        return Jet(self.space, self.coeffs - o.coeffs)

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if o is None:
            return Jet(self.space, self.coeffs * other)
        if o.is_constant():
            return Jet(self.space, self.coeffs * o.coeffs[0])
        if self.is_constant():
            return Jet(self.space, o.coeffs * self.coeffs[0])
        return Jet(self.space, _backend.mul(self.coeffs, o.coeffs, self.space.mul_table))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if o is None:
            if other == 0:
                raise JetError("jet division singular")
            return Jet(self.space, self.coeffs / other)
        return self * reciprocal(o)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, p):
        if isinstance(p, (bool, np.bool_)) or not isinstance(p, (int, np.integer)):
            raise JetError("jets support integer powers only")
        return pow_int(self, int(p))


def seed_variable(index: int, value: float, space: JetSpace) -> Jet:
    """The jet of the coordinate function ``t -> t[index]`` at ``value``."""
    if not 0 <= index < space.nvars:
        raise JetError(f"variable index {index} out of range for {space.nvars} variables")
    if space.cap_of(index) < 1:
        raise JetError("variable not differentiable under caps")
    c = np.zeros(space.size)
    c[0] = value
    unit = [0] * space.nvars
    unit[index] = 1
    c[space.position(unit)] = 1.0
    return Jet(space, c)


def seed_all(values: Sequence[float], space: JetSpace, offset: int = 0) -> list[Jet]:
    return [seed_variable(offset + i, float(v), space) for i, v in enumerate(values)]


def compose(taylor: Sequence[float], a: Jet) -> Jet:
    """Evaluate sum_k taylor[k] * (a - a(0))**k: a univariate germ composed with ``a``."""
    h = Jet(a.space, np.concatenate(([0.0], a.coeffs[1:])))
    top = min(len(taylor) - 1, a.space.max_order)
    acc = Jet.constant(float(taylor[top]), a.space)
    for k in range(top - 1, -1, -1):
        acc = acc * h + float(taylor[k])
    return acc


def _taylor(a: Jet, first: float, ratio) -> list[float]:
    out = [first]
    for k in range(1, a.space.max_order + 1):
        out.append(out[-1] * ratio(k))
    return out


def reciprocal(a: Jet) -> Jet:
    a0 = a.value
    if a0 == 0.0:
        raise JetError("jet division singular")
    if a.is_constant():
        return Jet.constant(1.0 / a0, a.space)
    return compose(_taylor(a, 1.0 / a0, lambda k: -1.0 / a0), a)


def sqrt(a):
    if not isinstance(a, Jet):
        if a <= 0:
            raise JetError("jet domain error: sqrt of non-positive value")
        return math.sqrt(a)
    a0 = a.value
    if a0 <= 0.0:
        raise JetError("jet domain error: sqrt of non-positive constant term")
    if a.is_constant():
        return Jet.constant(math.sqrt(a0), a.space)
    return compose(_taylor(a, math.sqrt(a0), lambda k: (1.5 - k) / (k * a0)), a)


def exp(a):
    if not isinstance(a, Jet):
        return math.exp(a)
    e = math.exp(a.value)
    if a.is_constant():
        return Jet.constant(e, a.space)
    return compose(_taylor(a, e, lambda k: 1.0 / k), a)


def log(a):
    if not isinstance(a, Jet):
        if a <= 0:
            raise JetError("jet domain error: log of non-positive value")
        return math.log(a)
    a0 = a.value
    if a0 <= 0.0:
        raise JetError("jet domain error: log of non-positive constant term")
    if a.is_constant():
        return Jet.constant(math.log(a0), a.space)
    coeffs = [math.log(a0)] + [(-1.0) ** (k + 1) / (k * a0 ** k) for k in range(1, a.space.max_order + 1)]
    return compose(coeffs, a)


def neg(a):
    return -a


def pow_int(a: Jet, p: int) -> Jet:
    if p < 0:
        return pow_int(reciprocal(a), -p)
    result = Jet.constant(1.0, a.space)
    base = a
    while p:
        if p & 1:
            result = result * base
        p >>= 1
        if p:
            base = base * base
    return result


def jet_sum(terms: Iterable[Jet]) -> Jet:
    terms = list(terms)
    if not terms:
        raise JetError("empty jet sum")
    return Jet(terms[0].space, np.sum([t.coeffs for t in terms], axis=0))


def jet_arith(a: Jet, b: Jet, op: str) -> Jet:
    """Binary jet operation by name: add, sub, mul or div."""
    try:
        fn = {"add": Jet.__add__, "sub": Jet.__sub__, "mul": Jet.__mul__, "div": Jet.__truediv__}[op]
    except KeyError:
        raise JetError(f"unknown jet operation {op!r}") from None
    return fn(a, b)


def jet_fn(a: Jet, fn: str, p: int | None = None) -> Jet:
    """Unary jet function by name: sqrt, exp, log, neg or pow_int (with ``p``)."""
    if fn == "pow_int":
        if p is None:
            raise JetError("pow_int needs an integer exponent")
        return pow_int(a, p)
    table = {"sqrt": sqrt, "exp": exp, "log": log, "neg": neg}
    if fn not in table:
        raise JetError(f"unknown jet function {fn!r}")
    return table[fn](a)
