"""Composable scalar fields with exact jet evaluation.

Every geometric quantity the verifier handles — Lagrangians, anchor entries,
connection coefficients, derived objects like "the (a,b) entry of the inverse
fiber Hessian composed with the dual coordinate change" — is represented as a
:class:`Field`: a lazy scalar function on a named coordinate :class:`Space`
that can produce a truncated Taylor jet at any point.

Derivatives are exact (forward jet propagation), never finite differences.
Differentiation is a *structural* operation: :func:`partial` returns a new
field whose jet is the order-shifted jet of its parent, and composition with
a bundle map (closed-form or Newton-solved) applies the chain rule through
second order using the map's Jacobian and second derivative.

Fields are immutable; all evaluation state (memoized jets, Newton solve
caches with warm starts) lives in an :class:`EvalSession`, so one field graph
can be evaluated deterministically and independently by concurrent sessions.
"""

from __future__ import annotations

import itertools
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dsl import Ast, Num, evaluate, free_symbols
from .jets import Jet2, JetOrderError, pushforward_jet
from .linalg import invert, newton_solve_multistart

__all__ = [
    "Space",
    "EvalSession",
    "Field",
    "ConstField",
    "CoordField",
    "ExprField",
    "LinCombField",
    "ProdField",
    "PartialField",
    "ComposedField",
    "FiberComponentField",
    "MatrixInverseBundle",
    "FieldMap",
    "ComponentwiseMap",
    "SolvedFiberMap",
    "f_add",
    "f_sub",
    "f_neg",
    "f_mul",
    "f_scale",
    "f_sum",
    "partial",
    "compose",
    "is_zero",
]


@dataclass(frozen=True)
class Space:
    """A named coordinate chart: an ordered tuple of coordinate names."""

    name: str
    coords: tuple[str, ...]

    @property
    def dim(self) -> int:
        return len(self.coords)

    def index(self, coord: str) -> int:
        return self.coords.index(coord)


#: process-unique serial numbers for fields, maps, and inverse bundles.
#: Session caches key on these instead of ``id()`` so that a temporary
#: object's reclaimed address can never alias a live object's cache entries.
_UIDS = itertools.count()


class EvalSession:
    """Evaluation state: memoized jets and per-map Newton solve caches.

    A session owns every piece of mutable state, so evaluating the same field
    graph in two separate sessions gives bitwise-identical results regardless
    of what else either session computed — the property that makes the
    verifier's reports independent of the thread count.
    """

    __slots__ = ("jets", "solves", "map_data")

    def __init__(self) -> None:
        self.jets: dict[tuple[int, bytes, int], Jet2] = {}
        self.solves: dict[int, "_SolveState"] = {}
        self.map_data: dict[tuple[int, bytes, str], object] = {}

    def clear_point_data(self) -> None:
        """Drop memoized jets/map tensors; keep Newton caches (warm starts)."""
        self.jets.clear()
        self.map_data.clear()

    def solve_state(self, fmap: "SolvedFiberMap") -> "_SolveState":
        state = self.solves.get(fmap.uid)
        if state is None:
            state = _SolveState()
            self.solves[fmap.uid] = state
        return state


class _SolveState:
    """Newton cache for one solved map inside one session."""

    __slots__ = ("solutions", "_points", "_sols", "_count", "_cursor")

    #: bounded scan window for warm starts (deterministic along a sample
    #: sequence, O(1) memory)
    WINDOW = 128

    def __init__(self) -> None:
        self.solutions: dict[bytes, np.ndarray] = {}
        self._points: np.ndarray | None = None
        self._sols: np.ndarray | None = None
        self._count = 0
        self._cursor = 0

    def lookup(self, key: bytes) -> np.ndarray | None:
        return self.solutions.get(key)

    def warm_seed(self, point: np.ndarray, dim: int) -> np.ndarray:
        """Solution of the nearest previously solved point (max-norm)."""
        if self._count == 0:
            return np.zeros(dim)
        pts = self._points[: self._count]
        nearest = int(np.abs(pts - point).max(axis=1).argmin())
        return self._sols[nearest].copy()

    def store(self, key: bytes, point: np.ndarray, solution: np.ndarray) -> None:
        self.solutions[key] = solution
        if self._points is None:
            self._points = np.empty((self.WINDOW, point.shape[0]))
            self._sols = np.empty((self.WINDOW, solution.shape[0]))
        self._points[self._cursor] = point
        self._sols[self._cursor] = solution
        self._cursor = (self._cursor + 1) % self.WINDOW
        self._count = min(self._count + 1, self.WINDOW)


# ---------------------------------------------------------------------- #
# fields


class Field(ABC):
    """A lazy scalar function on a coordinate space."""

    __slots__ = ("space", "max_order", "uid")

    space: Space
    max_order: int
    uid: int

    def __new__(cls, *args, **kwargs):
        obj = super().__new__(cls)
        obj.uid = next(_UIDS)
        return obj

    def jet(self, session: EvalSession, point: np.ndarray, order: int) -> Jet2:
        if order > self.max_order:
            raise JetOrderError(
                f"{self.describe()} supports derivatives up to order "
                f"{self.max_order}, asked for {order}"
            )
        key = (self.uid, point.tobytes(), order)
        cached = session.jets.get(key)
        if cached is None:
            cached = self._jet(session, point, order)
            session.jets[key] = cached
        return cached

    def value(self, session: EvalSession, point: np.ndarray) -> float:
        return self.jet(session, point, 0).value

    @abstractmethod
    def _jet(self, session: EvalSession, point: np.ndarray, order: int) -> Jet2:
        ...

    def describe(self) -> str:
        return type(self).__name__


class ConstField(Field):
    __slots__ = ("value_",)

    def __init__(self, space: Space, value: float) -> None:
        self.space = space
        self.value_ = float(value)
        self.max_order = 3

    def _jet(self, session, point, order):
        return Jet2.constant(self.value_, self.space.dim, order)

    def describe(self) -> str:
        return f"const({self.value_})"


class CoordField(Field):
    __slots__ = ("index",)

    def __init__(self, space: Space, index: int) -> None:
        self.space = space
        self.index = int(index)
        self.max_order = 3

    def _jet(self, session, point, order):
        return Jet2.variable(
            float(point[self.index]), self.index, self.space.dim, order
        )

    def describe(self) -> str:
        return f"coord({self.space.coords[self.index]})"


class ExprField(Field):
    """A parsed expression over a space's coordinates (exact to order 3)."""

    __slots__ = ("ast",)

    def __init__(self, space: Space, ast: Ast) -> None:
        extra = free_symbols(ast) - set(space.coords)
        if extra:
            raise ValueError(
                f"expression uses symbols {sorted(extra)} outside space "
                f"{space.name}{space.coords}"
            )
        self.space = space
        self.ast = ast
        self.max_order = 3

    def _jet(self, session, point, order):
        env = {
            name: Jet2.variable(float(point[k]), k, self.space.dim, order)
            for k, name in enumerate(self.space.coords)
        }
        return evaluate(self.ast, env)

    def describe(self) -> str:
        return f"expr on {self.space.name}"


class LinCombField(Field):
    __slots__ = ("terms", "constant")

    def __init__(
        self,
        space: Space,
        terms: Sequence[tuple[float, Field]],
        constant: float = 0.0,
    ) -> None:
        self.space = space
        self.terms = tuple((float(c), f) for c, f in terms)
        self.constant = float(constant)
        self.max_order = min(
            [f.max_order for _, f in self.terms], default=3
        )
        for _, f in self.terms:
            if f.space is not space and f.space != space:
                raise ValueError("linear combination across different spaces")

    def _jet(self, session, point, order):
        acc = Jet2.constant(self.constant, self.space.dim, order)
        for c, f in self.terms:
            term = f.jet(session, point, order)
            acc = acc + (term if c == 1.0 else term.scale(c))
        return acc


class ProdField(Field):
    __slots__ = ("factors",)

    def __init__(self, space: Space, factors: Sequence[Field]) -> None:
        if not factors:
            raise ValueError("empty product")
        self.space = space
        self.factors = tuple(factors)
        self.max_order = min(f.max_order for f in self.factors)

    def _jet(self, session, point, order):
        acc = self.factors[0].jet(session, point, order)
        for f in self.factors[1:]:
            acc = acc * f.jet(session, point, order)
        return acc


class PartialField(Field):
    """Partial derivative of a field along one of its coordinates.

    Order shift: the jet of ``∂f/∂q_k`` at order ``q`` reads off the
    (k-sliced) order-``q+1`` jet of ``f``.
    """

    __slots__ = ("parent", "index")

    def __init__(self, parent: Field, index: int) -> None:
        self.space = parent.space
        self.parent = parent
        self.index = int(index)
        self.max_order = parent.max_order - 1
        if self.max_order < 0:
            raise JetOrderError(
                f"cannot differentiate {parent.describe()} (order budget spent)"
            )

    def _jet(self, session, point, order):
        pj = self.parent.jet(session, point, order + 1)
        k = self.index
        if order == 0:
            return Jet2(pj.grad[k], dim=self.space.dim)
        if order == 1:
            return Jet2(pj.grad[k], pj.hess[k].copy())
        return Jet2(pj.grad[k], pj.hess[k].copy(), pj.third[k].copy())

    def describe(self) -> str:
        return f"d/d{self.space.coords[self.index]}[{self.parent.describe()}]"


# ---------------------------------------------------------------------- #
# maps between spaces


class FieldMap(ABC):
    """A smooth map between coordinate spaces, with derivatives to order 2."""

    __slots__ = ("source", "target", "uid")

    source: Space
    target: Space
    uid: int

    def __new__(cls, *args, **kwargs):
        obj = super().__new__(cls)
        obj.uid = next(_UIDS)
        return obj

    def image(self, session: EvalSession, point: np.ndarray) -> np.ndarray:
        key = (self.uid, point.tobytes(), "img")
        out = session.map_data.get(key)
        if out is None:
            out = self._image(session, point)
            session.map_data[key] = out
        return out  # type: ignore[return-value]

    def jacobian(self, session: EvalSession, point: np.ndarray) -> np.ndarray:
        key = (self.uid, point.tobytes(), "jac")
        out = session.map_data.get(key)
        if out is None:
            out = self._jacobian(session, point)
            session.map_data[key] = out
        return out  # type: ignore[return-value]

    def second(self, session: EvalSession, point: np.ndarray) -> np.ndarray:
        key = (self.uid, point.tobytes(), "sec")
        out = session.map_data.get(key)
        if out is None:
            out = self._second(session, point)
            session.map_data[key] = out
        return out  # type: ignore[return-value]

    @abstractmethod
    def _image(self, session, point) -> np.ndarray: ...

    @abstractmethod
    def _jacobian(self, session, point) -> np.ndarray: ...

    @abstractmethod
    def _second(self, session, point) -> np.ndarray: ...


class ComponentwiseMap(FieldMap):
    """Map whose target coordinates are explicit fields on the source."""

    __slots__ = ("components",)

    def __init__(
        self, source: Space, target: Space, components: Sequence[Field]
    ) -> None:
        if len(components) != target.dim:
            raise ValueError("one component field per target coordinate")
        self.source = source
        self.target = target
        self.components = tuple(components)

    def _image(self, session, point):
        return np.array(
            [f.value(session, point) for f in self.components], dtype=float
        )

    def _jacobian(self, session, point):
        return np.stack(
            [f.jet(session, point, 1).grad for f in self.components]
        )

    def _second(self, session, point):
        return np.stack(
            [f.jet(session, point, 2).hess for f in self.components]
        )


class SolvedFiberMap(FieldMap):
    """Fiber-coordinate change defined implicitly by a potential.

    The base coordinates (the first ``m``) pass through unchanged; the target
    fiber ``f`` solves ``∂(potential)/∂(target fiber) (x, f) = source fiber``
    by damped Newton iteration with a deterministic multi-start ladder and
    warm starts from the nearest previously solved point.  First and second
    derivatives of the solved fiber come from the implicit function theorem,
    powered by the potential's exact order-3 jet — no finite differences.
    """

    __slots__ = ("potential", "m", "r", "label", "tol")

    def __init__(
        self,
        source: Space,
        target: Space,
        potential: Field,
        m: int,
        r: int,
        label: str,
        tol: float = 1e-11,
    ) -> None:
        if potential.space != target:
            raise ValueError("potential must live on the target space")
        self.source = source
        self.target = target
        self.potential = potential
        self.m = m
        self.r = r
        self.label = label
        self.tol = tol

    def _solve(self, session: EvalSession, point: np.ndarray) -> np.ndarray:
        state = session.solve_state(self)
        key = point.tobytes()
        hit = state.lookup(key)
        if hit is not None:
            return hit
        x = point[: self.m]
        rhs = point[self.m :]

        def fun(fib: np.ndarray):
            q = np.concatenate([x, fib])
            j = self.potential.jet(session, q, 2)
            return j.grad[self.m :] - rhs, j.hess[self.m :, self.m :]

        seed = state.warm_seed(point, self.r)
        result = newton_solve_multistart(fun, seed, tol=self.tol)
        state.store(key, point, result.solution)
        return result.solution

    def _image(self, session, point):
        fib = self._solve(session, point)
        return np.concatenate([point[: self.m], fib])

    def _jacobian(self, session, point):
        q = self.image(session, point)
        m, r = self.m, self.r
        j = self.potential.jet(session, q, 2)
        fiber_hess = j.hess[m:, m:]
        inv = invert(fiber_hess)
        jac = np.zeros((m + r, m + r))
        jac[:m, :m] = np.eye(m)
        jac[m:, :m] = -inv @ j.hess[m:, :m]
        jac[m:, m:] = inv
        return jac

    def _second(self, session, point):
        q = self.image(session, point)
        m, r = self.m, self.r
        j = self.potential.jet(session, q, 3)
        inv = invert(j.hess[m:, m:])
        jac = self.jacobian(session, point)
        # total target tangent per source direction: dq/dsource
        tangents = np.zeros((m + r, m + r))
        tangents[:m, :m] = np.eye(m)
        tangents[m:, :] = jac[m:, :]
        # second derivatives of the solved fiber via the implicit function
        # theorem: fib2[a] = -inv[a,b] * tangents^T · third[fiber b] · tangents
        contracted = np.einsum(
            "bst,su,tv->buv", j.third[m:], tangents, tangents
        )
        fib2 = -np.einsum("ab,buv->auv", inv, contracted)
        second = np.zeros((m + r, m + r, m + r))
        second[m:] = fib2
        return second


class ComposedField(Field):
    """``inner ∘ map``: a target-space field pulled back to the source."""

    __slots__ = ("inner", "fmap")

    def __init__(self, inner: Field, fmap: FieldMap) -> None:
        if inner.space != fmap.target:
            raise ValueError(
                f"cannot compose field on {inner.space.name} with map into "
                f"{fmap.target.name}"
            )
        self.space = fmap.source
        self.inner = inner
        self.fmap = fmap
        self.max_order = min(2, inner.max_order)

    def _jet(self, session, point, order):
        image = self.fmap.image(session, point)
        outer = self.inner.jet(session, image, order)
        if order == 0:
            return Jet2(outer.value, dim=self.space.dim)
        jac = self.fmap.jacobian(session, point)
        second = self.fmap.second(session, point) if order >= 2 else None
        return pushforward_jet(outer, jac, second, order)

    def describe(self) -> str:
        return f"({self.inner.describe()} ∘ map->{self.fmap.target.name})"


class FiberComponentField(Field):
    """One target coordinate of a map, as a field on the source space."""

    __slots__ = ("fmap", "component")

    def __init__(self, fmap: FieldMap, component: int) -> None:
        self.space = fmap.source
        self.fmap = fmap
        self.component = int(component)
        self.max_order = 2

    def _jet(self, session, point, order):
        value = float(self.fmap.image(session, point)[self.component])
        if order == 0:
            return Jet2(value, dim=self.space.dim)
        grad = self.fmap.jacobian(session, point)[self.component].copy()
        if order == 1:
            return Jet2(value, grad)
        hess = self.fmap.second(session, point)[self.component].copy()
        return Jet2(value, grad, hess)

    def describe(self) -> str:
        return f"map-component[{self.fmap.target.coords[self.component]}]"


class MatrixInverseBundle:
    """All entries of the pointwise inverse of a square matrix of fields.

    The inversion happens once per point; entry fields read slices.  First
    and second derivatives use  d(M⁻¹) = −M⁻¹ (dM) M⁻¹  and its Leibniz
    expansion for the second order.
    """

    def __init__(self, space: Space, entries: Sequence[Sequence[Field]]):
        self.space = space
        self.uid = next(_UIDS)
        self.entries = tuple(tuple(row) for row in entries)
        self.n = len(self.entries)
        for row in self.entries:
            if len(row) != self.n:
                raise ValueError("inverse bundle needs a square matrix")
        self.max_order = min(
            2, min(f.max_order for row in self.entries for f in row)
        )

    def tensors(
        self, session: EvalSession, point: np.ndarray, order: int
    ) -> tuple[np.ndarray, np.ndarray | None, np.ndarray | None]:
        key = (self.uid, point.tobytes(), f"inv{order}")
        cached = session.map_data.get(key)
        if cached is not None:
            return cached  # type: ignore[return-value]
        n, dim = self.n, self.space.dim
        jets = [
            [self.entries[i][j].jet(session, point, order) for j in range(n)]
            for i in range(n)
        ]
        m0 = np.array([[jets[i][j].value for j in range(n)] for i in range(n)])
        inv = invert(m0)
        grad = None
        hess = None
        if order >= 1:
            dm = np.array(
                [[jets[i][j].grad for j in range(n)] for i in range(n)]
            )  # (n, n, dim)
            grad = -np.einsum("ia,abk,bj->ijk", inv, dm, inv)
        if order >= 2:
            d2m = np.array(
                [[jets[i][j].hess for j in range(n)] for i in range(n)]
            )  # (n, n, dim, dim)
            # ∂k∂l (M⁻¹) = M⁻¹ (∂kM M⁻¹ ∂lM + ∂lM M⁻¹ ∂kM − ∂k∂lM) M⁻¹
            cross = np.einsum("abk,bc,cdl->adkl", dm, inv, dm)
            middle = cross + cross.transpose(0, 1, 3, 2) - d2m
            hess = np.einsum("ia,abkl,bj->ijkl", inv, middle, inv)
        out = (inv, grad, hess)
        session.map_data[key] = out
        return out

    def entry(self, i: int, j: int) -> Field:
        return _InverseEntryField(self, i, j)


class _InverseEntryField(Field):
    __slots__ = ("bundle", "i", "j")

    def __init__(self, bundle: MatrixInverseBundle, i: int, j: int) -> None:
        self.space = bundle.space
        self.bundle = bundle
        self.i = i
        self.j = j
        self.max_order = bundle.max_order

    def _jet(self, session, point, order):
        inv, grad, hess = self.bundle.tensors(session, point, order)
        if order == 0:
            return Jet2(inv[self.i, self.j], dim=self.space.dim)
        if order == 1:
            return Jet2(inv[self.i, self.j], grad[self.i, self.j].copy())
        return Jet2(
            inv[self.i, self.j],
            grad[self.i, self.j].copy(),
            hess[self.i, self.j].copy(),
        )

    def describe(self) -> str:
        return f"inverse-entry[{self.i},{self.j}]"


# ---------------------------------------------------------------------- #
# smart constructors (structural zero/one pruning keeps classical-mode
# field graphs small; pruning is done at build time, identically for every
# session, so it never affects determinism)


def is_zero(field: Field) -> bool:
    return isinstance(field, ConstField) and field.value_ == 0.0


def _is_one(field: Field) -> bool:
    return isinstance(field, ConstField) and field.value_ == 1.0


def f_add(a: Field, b: Field) -> Field:
    if is_zero(a):
        return b
    if is_zero(b):
        return a
    return LinCombField(a.space, [(1.0, a), (1.0, b)])


def f_sub(a: Field, b: Field) -> Field:
    if is_zero(b):
        return a
    if is_zero(a):
        return f_neg(b)
    return LinCombField(a.space, [(1.0, a), (-1.0, b)])


def f_neg(a: Field) -> Field:
    if is_zero(a):
        return a
    return LinCombField(a.space, [(-1.0, a)])


def f_scale(c: float, a: Field) -> Field:
    if c == 0.0 or is_zero(a):
        return ConstField(a.space, 0.0)
    if c == 1.0:
        return a
    return LinCombField(a.space, [(float(c), a)])


def f_mul(*factors: Field) -> Field:
    kept: list[Field] = []
    for f in factors:
        if is_zero(f):
            return ConstField(f.space, 0.0)
        if _is_one(f):
            continue
        kept.append(f)
    if not kept:
        return ConstField(factors[0].space, 1.0)
    if len(kept) == 1:
        return kept[0]
    return ProdField(kept[0].space, kept)


def f_sum(space: Space, fields: Sequence[Field]) -> Field:
    kept = [f for f in fields if not is_zero(f)]
    if not kept:
        return ConstField(space, 0.0)
    if len(kept) == 1:
        return kept[0]
    return LinCombField(space, [(1.0, f) for f in kept])


def partial(field: Field, index: int) -> Field:
    if isinstance(field, ConstField):
        return ConstField(field.space, 0.0)
    if isinstance(field, CoordField):
        return ConstField(field.space, 1.0 if field.index == index else 0.0)
    return PartialField(field, index)


def compose(inner: Field, fmap: FieldMap) -> Field:
    if isinstance(inner, ConstField):
        return ConstField(fmap.source, inner.value_)
    return ComposedField(inner, fmap)
