"""Truncated Taylor-jet arithmetic: values with gradients, Hessians, and an
optional third-order tensor.

A :class:`Jet2` carries the value of a scalar quantity together with its
gradient and Hessian with respect to a fixed tuple of ``dim`` active
coordinates.  Every arithmetic operation propagates whole derivative tensors
in a single forward pass, so second derivatives come out exact (to floating
point) without nesting first-order numbers.

Two invariants are maintained bitwise, not just numerically:

* the Hessian is exactly symmetric (the upper triangle is the stored data;
  the lower triangle is mirrored from it on construction), and
* the optional third-order tensor is exactly totally symmetric (every entry
  equals its sorted-index representative).

The third-order slot exists because a few internal constructions need one
derivative order beyond the public contract (for example, taking a gradient
of a quantity that is itself a second derivative).  Public entry points
produce and consume plain second-order jets; ``third`` is ``None`` there.

All tensors are ``numpy`` ``float64`` arrays.  Domain failures (``log`` of a
non-positive value, division by zero, fractional powers of non-positive
bases) raise :class:`JetDomainError` rather than producing NaNs, so callers
can report them per check instead of silently polluting residuals.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable, Sequence, Union

import numpy as np

__all__ = [
    "Jet2",
    "JetDomainError",
    "JetOrderError",
    "jet_exp",
    "jet_log",
    "jet_sin",
    "jet_cos",
    "jet_sqrt",
    "jet_pow",
    "compose_univariate",
    "pushforward_jet",
    "mirror_symmetric",
    "canonical_third",
]

Scalar = Union[int, float]


class JetDomainError(ArithmeticError):
    """A jet operation left the domain where its derivatives exist."""


class JetOrderError(RuntimeError):
    """A jet was asked for a derivative order it does not carry."""


def mirror_symmetric(h: np.ndarray) -> np.ndarray:
    """Return ``h`` forced to exact symmetry.

    Internal arithmetic preserves bitwise symmetry, so the common case is
    recognized with a cheap comparison and returned untouched.  Otherwise
    the symmetric average is computed (correcting any asymmetric
    floating-point noise) and the strict upper triangle is mirrored onto
    the lower one so the result is bitwise symmetric.
    """
    ht = h.T
    if np.array_equal(h, ht):
        return h
    hs = (h + ht) * 0.5
    upper = np.triu(hs)
    return upper + np.triu(hs, 1).T


@lru_cache(maxsize=64)
def _shared_zeros(dim: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read-only zero tensors shared by every constant jet of this dim.

    Jet arithmetic never writes into operand arrays (every operation
    allocates its result), so sharing is safe; the write lock turns any
    future violation of that rule into an immediate error.
    """
    grad = np.zeros(dim)
    grad.setflags(write=False)
    hess = np.zeros((dim, dim))
    hess.setflags(write=False)
    third = np.zeros((dim, dim, dim))
    third.setflags(write=False)
    return grad, hess, third


@lru_cache(maxsize=256)
def _shared_unit(dim: int, index: int) -> np.ndarray:
    """Read-only one-hot gradient shared by every variable jet."""
    grad = np.zeros(dim)
    grad[index] = 1.0
    grad.setflags(write=False)
    return grad


@lru_cache(maxsize=32)
def _sorted_index_map(n: int) -> np.ndarray:
    """Flat index map sending entry (i,j,k) to its sorted representative."""
    idx = np.empty(n * n * n, dtype=np.intp)
    pos = 0
    for i in range(n):
        for j in range(n):
            for k in range(n):
                a, b, c = sorted((i, j, k))
                idx[pos] = (a * n + b) * n + c
                pos += 1
    return idx


def canonical_third(t: np.ndarray) -> np.ndarray:
    """Return ``t`` forced to exact total symmetry.

    Every entry is replaced by its sorted-index representative, so
    equal-by-symmetry entries are bitwise identical and the operation is
    idempotent.  Inputs are mathematically symmetric already (all
    constructions in this module symmetrize explicitly); this canonical
    gather only removes addition-order noise between equivalent entries.
    """
    n = t.shape[0]
    flat = t.reshape(-1)[_sorted_index_map(n)]
    return flat.reshape((n, n, n))


def _sym_vec_mat(v: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Totally symmetric tensor with entries v_i m_jk + v_j m_ik + v_k m_ij."""
    vm = np.multiply.outer(v, m)          # [i, j, k] = v_i m_jk
    return vm + vm.transpose(1, 0, 2) + vm.transpose(2, 1, 0)


class Jet2:
    """Scalar value with gradient, Hessian, and optional third-order tensor.

    ``order`` is 0 (value only), 1 (+gradient), 2 (+Hessian) or 3 (+third
    tensor).  Arithmetic between jets of different orders truncates to the
    lower order; plain numbers act as constants of whatever order the other
    operand has.
    """

    __slots__ = ("value", "grad", "hess", "third", "dim")

    def __init__(
        self,
        value: float,
        grad: np.ndarray | None = None,
        hess: np.ndarray | None = None,
        third: np.ndarray | None = None,
        *,
        dim: int | None = None,
    ) -> None:
        self.value = float(value)
        if grad is None:
            if hess is not None or third is not None:
                raise ValueError("higher tensors require the lower ones")
            if dim is None:
                raise ValueError("order-0 jets still need an explicit dim")
            self.dim = int(dim)
            self.grad = None
            self.hess = None
            self.third = None
            return
        g = np.asarray(grad, dtype=float)
        self.dim = int(g.shape[0])
        self.grad = g
        if hess is None:
            if third is not None:
                raise ValueError("third tensor requires a Hessian")
            self.hess = None
            self.third = None
            return
        h = np.asarray(hess, dtype=float)
        if h.shape != (self.dim, self.dim):
            raise ValueError("Hessian shape mismatch")
        self.hess = mirror_symmetric(h)
        if third is None:
            self.third = None
            return
        t = np.asarray(third, dtype=float)
        if t.shape != (self.dim, self.dim, self.dim):
            raise ValueError("third-order tensor shape mismatch")
        self.third = canonical_third(t)

    # ------------------------------------------------------------------ #
    # constructors

    @classmethod
    def _raw(
        cls,
        value: float,
        grad: np.ndarray | None,
        hess: np.ndarray | None,
        third: np.ndarray | None,
        dim: int,
    ) -> "Jet2":
        """Internal constructor for arithmetic results.

        Skips validation and tensor normalization; the caller guarantees
        the tensors are already in canonical (bitwise-symmetric) form.
        Elementwise sums, scalings, and ``cross + cross.T`` combinations
        of canonical inputs stay canonical because float ``+`` and ``*``
        commute entrywise; genuinely new third-order tensors must be
        passed through :func:`canonical_third` first.
        """
        j = object.__new__(cls)
        j.value = value
        j.grad = grad
        j.hess = hess
        j.third = third
        j.dim = dim
        return j

    @staticmethod
    def constant(value: float, dim: int, order: int = 2) -> "Jet2":
        """Jet of a constant: zero derivatives of the requested order."""
        value = float(value)
        if order <= 0:
            return Jet2._raw(value, None, None, None, dim)
        zero_grad, zero_hess, zero_third = _shared_zeros(dim)
        if order == 1:
            return Jet2._raw(value, zero_grad, None, None, dim)
        if order == 2:
            return Jet2._raw(value, zero_grad, zero_hess, None, dim)
        return Jet2._raw(value, zero_grad, zero_hess, zero_third, dim)

    @staticmethod
    def variable(value: float, index: int, dim: int, order: int = 2) -> "Jet2":
        """Jet of the ``index``-th active coordinate at ``value``."""
        value = float(value)
        if order <= 0:
            return Jet2._raw(value, None, None, None, dim)
        grad = _shared_unit(dim, index)
        if order == 1:
            return Jet2._raw(value, grad, None, None, dim)
        _, zero_hess, zero_third = _shared_zeros(dim)
        if order == 2:
            return Jet2._raw(value, grad, zero_hess, None, dim)
        return Jet2._raw(value, grad, zero_hess, zero_third, dim)

    @staticmethod
    def seed_variables(values: Sequence[float], order: int = 2) -> list["Jet2"]:
        """One variable jet per entry of ``values``, sharing the coordinate tuple."""
        n = len(values)
        return [Jet2.variable(values[i], i, n, order) for i in range(n)]

    # ------------------------------------------------------------------ #
    # basic interrogation

    @property
    def order(self) -> int:
        if self.grad is None:
            return 0
        if self.hess is None:
            return 1
        if self.third is None:
            return 2
        return 3

    def truncated(self, order: int) -> "Jet2":
        """This jet with derivative tensors above ``order`` dropped."""
        if order >= self.order:
            return self
        if order <= 0:
            return Jet2._raw(self.value, None, None, None, self.dim)
        if order == 1:
            return Jet2._raw(self.value, self.grad, None, None, self.dim)
        return Jet2._raw(self.value, self.grad, self.hess, None, self.dim)

    def require(self, order: int) -> "Jet2":
        if self.order < order:
            raise JetOrderError(
                f"jet of order {self.order} asked for order {order}"
            )
        return self

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"Jet2(value={self.value!r}, order={self.order}, dim={self.dim})"

    # ------------------------------------------------------------------ #
    # arithmetic

    def _coerce(self, other: Union["Jet2", Scalar]) -> "Jet2":
        if isinstance(other, Jet2):
            return other
        if isinstance(other, (int, float)):
            return Jet2.constant(float(other), self.dim, self.order)
        return NotImplemented  # type: ignore[return-value]

    def __add__(self, other: Union["Jet2", Scalar]) -> "Jet2":
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        order = min(self.order, o.order)
        if order == 0:
            return Jet2._raw(self.value + o.value, None, None, None, self.dim)
        grad = self.grad + o.grad
        if order == 1:
            return Jet2._raw(self.value + o.value, grad, None, None, self.dim)
        hess = self.hess + o.hess
        if order == 2:
            return Jet2._raw(self.value + o.value, grad, hess, None, self.dim)
        return Jet2._raw(
            self.value + o.value, grad, hess, self.third + o.third, self.dim
        )

    __radd__ = __add__

    def __neg__(self) -> "Jet2":
        order = self.order
        if order == 0:
            return Jet2._raw(-self.value, None, None, None, self.dim)
        if order == 1:
            return Jet2._raw(-self.value, -self.grad, None, None, self.dim)
        if order == 2:
            return Jet2._raw(-self.value, -self.grad, -self.hess, None, self.dim)
        return Jet2._raw(
            -self.value, -self.grad, -self.hess, -self.third, self.dim
        )

    def __sub__(self, other: Union["Jet2", Scalar]) -> "Jet2":
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self.__add__(-o)

    def __rsub__(self, other: Scalar) -> "Jet2":
        return (-self).__add__(float(other))

    def __mul__(self, other: Union["Jet2", Scalar]) -> "Jet2":
        if isinstance(other, (int, float)):
            return self.scale(float(other))
        if not isinstance(other, Jet2):
            return NotImplemented
        a, b = self, other
        order = min(a.order, b.order)
        value = a.value * b.value
        if order == 0:
            return Jet2._raw(value, None, None, None, a.dim)
        grad = a.grad * b.value + b.grad * a.value
        if order == 1:
            return Jet2._raw(value, grad, None, None, a.dim)
        cross = np.outer(a.grad, b.grad)
        hess = a.hess * b.value + b.hess * a.value + cross + cross.T
        if order == 2:
            return Jet2._raw(value, grad, hess, None, a.dim)
        third = canonical_third(
            a.third * b.value
            + b.third * a.value
            + _sym_vec_mat(b.grad, a.hess)
            + _sym_vec_mat(a.grad, b.hess)
        )
        return Jet2._raw(value, grad, hess, third, a.dim)

    __rmul__ = __mul__

    def scale(self, c: float) -> "Jet2":
        order = self.order
        if order == 0:
            return Jet2._raw(c * self.value, None, None, None, self.dim)
        if order == 1:
            return Jet2._raw(c * self.value, c * self.grad, None, None, self.dim)
        if order == 2:
            return Jet2._raw(
                c * self.value, c * self.grad, c * self.hess, None, self.dim
            )
        return Jet2._raw(
            c * self.value,
            c * self.grad,
            c * self.hess,
            c * self.third,
            self.dim,
        )

    def __truediv__(self, other: Union["Jet2", Scalar]) -> "Jet2":
        if isinstance(other, (int, float)):
            if other == 0.0:
                raise JetDomainError("division by zero constant")
            return self.scale(1.0 / float(other))
        if not isinstance(other, Jet2):
            return NotImplemented
        return self.__mul__(_reciprocal(other))

    def __rtruediv__(self, other: Scalar) -> "Jet2":
        return _reciprocal(self).scale(float(other))

    def __pow__(self, other: Union["Jet2", Scalar]) -> "Jet2":
        return jet_pow(self, other)

    def __rpow__(self, other: Scalar) -> "Jet2":
        base = Jet2.constant(float(other), self.dim, self.order)
        return jet_pow(base, self)


# ---------------------------------------------------------------------- #
# univariate composition (Faà di Bruno through order 3)


def compose_univariate(derivs: Sequence[float], u: Jet2) -> Jet2:
    """Compose a univariate function (scalar derivatives at ``u.value``)
    with the jet ``u``.

    ``derivs`` holds ``(g, g', g'', g''')`` evaluated at ``u.value``; higher
    entries are ignored when ``u`` has lower order.
    """
    order = u.order
    g0 = float(derivs[0])
    if order == 0:
        return Jet2._raw(g0, None, None, None, u.dim)
    g1 = derivs[1]
    grad = g1 * u.grad
    if order == 1:
        return Jet2._raw(g0, grad, None, None, u.dim)
    g2 = derivs[2]
    outer1 = np.outer(u.grad, u.grad)
    hess = g1 * u.hess + g2 * outer1
    if order == 2:
        return Jet2._raw(g0, grad, hess, None, u.dim)
    g3 = derivs[3]
    third = canonical_third(
        g1 * u.third
        + g2 * _sym_vec_mat(u.grad, u.hess)
        + g3 * np.multiply.outer(outer1, u.grad)
    )
    return Jet2._raw(g0, grad, hess, third, u.dim)


def _reciprocal(u: Jet2) -> Jet2:
    if u.value == 0.0:
        raise JetDomainError("division by a jet with zero value")
    inv = 1.0 / u.value
    return compose_univariate(
        (inv, -inv * inv, 2.0 * inv ** 3, -6.0 * inv ** 4), u
    )


def jet_exp(u: Jet2) -> Jet2:
    e = math.exp(u.value)
    return compose_univariate((e, e, e, e), u)


def jet_log(u: Jet2) -> Jet2:
    if u.value <= 0.0:
        raise JetDomainError(f"log of non-positive value {u.value}")
    inv = 1.0 / u.value
    return compose_univariate(
        (math.log(u.value), inv, -inv * inv, 2.0 * inv ** 3), u
    )


def jet_sin(u: Jet2) -> Jet2:
    s, c = math.sin(u.value), math.cos(u.value)
    return compose_univariate((s, c, -s, -c), u)


def jet_cos(u: Jet2) -> Jet2:
    s, c = math.sin(u.value), math.cos(u.value)
    return compose_univariate((c, -s, -c, s), u)


def jet_sqrt(u: Jet2) -> Jet2:
    if u.value <= 0.0:
        raise JetDomainError(f"sqrt of non-positive value {u.value}")
    s = math.sqrt(u.value)
    return compose_univariate(
        (s, 0.5 / s, -0.25 / (s * u.value), 0.375 / (s * u.value * u.value)), u
    )


def _int_pow_derivs(u0: float, k: int, order: int) -> list[float]:
    """Derivatives of x**k at u0 for integer k, valid for any sign of u0."""
    out: list[float] = []
    coeff = 1.0
    for j in range(order + 1):
        e = k - j
        if j > 0:
            coeff *= float(k - (j - 1))
        if coeff == 0.0:
            out.append(0.0)
            continue
        if e < 0 and u0 == 0.0:
            raise JetDomainError(f"negative power of zero ({u0}**{e})")
        if u0 == 0.0:
            base = 1.0 if e == 0 else 0.0
        else:
            base = u0 ** e
        out.append(coeff * base)
    return out


def jet_pow(base: Jet2, exponent: Union[Jet2, Scalar]) -> Jet2:
    """``base ** exponent`` for jets.

    Constant integer exponents work for any base value (except negative
    powers of zero); other constant exponents and jet-valued exponents
    require a strictly positive base.
    """
    if isinstance(exponent, Jet2):
        if exponent.order == 0 or (
            exponent.grad is not None
            and not exponent.grad.any()
            and (exponent.hess is None or not exponent.hess.any())
            and (exponent.third is None or not exponent.third.any())
        ):
            return jet_pow(base, exponent.value).truncated(
                min(base.order, exponent.order)
            )
        if base.value <= 0.0:
            raise JetDomainError(
                "jet-valued exponent requires a positive base"
            )
        return jet_exp(exponent * jet_log(base))
    r = float(exponent)
    if r == float(int(r)) and abs(r) < 1e15:
        derivs = _int_pow_derivs(base.value, int(r), base.order)
        derivs += [0.0] * (4 - len(derivs))
        return compose_univariate(derivs, base)
    if base.value <= 0.0:
        raise JetDomainError(
            f"fractional power {r} of non-positive base {base.value}"
        )
    u0 = base.value
    g0 = u0 ** r
    return compose_univariate(
        (
            g0,
            r * u0 ** (r - 1.0),
            r * (r - 1.0) * u0 ** (r - 2.0),
            r * (r - 1.0) * (r - 2.0) * u0 ** (r - 3.0),
        ),
        base,
    )


# ---------------------------------------------------------------------- #
# multivariate composition (chain rule through order 2)


def pushforward_jet(
    outer: Jet2, jac: np.ndarray, second: np.ndarray | None, order: int
) -> Jet2:
    """Chain rule: jet of ``f ∘ phi`` from the jet of ``f`` at ``phi(q)``.

    ``jac`` is the Jacobian ``d phi / d q`` with shape (target_dim,
    source_dim); ``second`` its second derivative with shape (target_dim,
    source_dim, source_dim), required for order 2.  Composition beyond
    order 2 is deliberately unsupported: no engine formula needs it, and
    refusing keeps derivative demands explicit.
    """
    if order >= 3:
        raise JetOrderError("composition beyond second order is not supported")
    src = jac.shape[1]
    if order == 0:
        return Jet2(outer.value, dim=src)
    outer.require(order)
    grad = jac.T @ outer.grad
    if order == 1:
        return Jet2(outer.value, grad)
    if second is None:
        raise JetOrderError("order-2 composition needs map second derivatives")
    hess = jac.T @ outer.hess @ jac + np.einsum(
        "a,aij->ij", outer.grad, second
    )
    return Jet2(outer.value, grad, hess)


# dispatch table used by the expression evaluator
UNIVARIATE: dict[str, Callable[[Jet2], Jet2]] = {
    "exp": jet_exp,
    "log": jet_log,
    "sin": jet_sin,
    "cos": jet_cos,
    "sqrt": jet_sqrt,
}
