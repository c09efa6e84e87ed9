"""Constraints of degree at most two and forward-backward contraction.

Expressions are built from :class:`Var` handles with ``+``, ``-``, ``*`` and
:func:`sqr`, and are kept in a normalised sum-of-monomials tree: a sum node
over ``coef * x_i``, ``coef * sqr(x_i)`` and ``coef * x_i * x_j`` leaves.
Anything of higher degree is rejected when it is built.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _kernels as K
from . import _rounding as rnd
from .interval import IntervalBox

__all__ = [
    "Expr",
    "Var",
    "sqr",
    "Constraint",
    "ContractionOperator",
    "contract",
    "contract_single",
    "DimensionMismatch",
]


class DimensionMismatch(ValueError):
    pass


Monomial = tuple  # (), (i,), (i, i) or (i, j) with i < j


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    m = tuple(sorted(a + b))
    if len(m) > 2:
        raise ValueError("product exceeds degree two; only linear, quadratic and bilinear terms are allowed")
    return m


class Expr:
    """Polynomial of degree <= 2, stored as ``{monomial: coefficient}``."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, float] | None = None):
        self.terms = {m: float(c) for m, c in (terms or {}).items() if c != 0.0}

    @staticmethod
    def const(c: float) -> "Expr":
        return Expr({(): c})

    @staticmethod
    def lift(x) -> "Expr":
        return x if isinstance(x, Expr) else Expr.const(float(x))

    def __add__(self, other):
        other = Expr.lift(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0.0) + c
        return Expr(out)

    __radd__ = __add__

    def __neg__(self):
        return Expr({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-Expr.lift(other))

    def __rsub__(self, other):
        return Expr.lift(other) - self

    def __mul__(self, other):
        other = Expr.lift(other)
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                out[m] = out.get(m, 0.0) + c1 * c2
        return Expr(out)

    __rmul__ = __mul__

    @property
    def constant(self) -> float:
        return self.terms.get((), 0.0)

    @property
    def degree(self) -> int:
        return max((len(m) for m in self.terms), default=0)

    def variables(self) -> set[int]:
        return {i for m in self.terms for i in m}

    def evaluate(self, x) -> float:
        total = 0.0
        for m, c in self.terms.items():
            v = c
            for i in m:
                v *= x[i]
            total += v
        return total

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for m, c in sorted(self.terms.items(), key=lambda kv: (len(kv[0]), kv[0])):
            if not m:
                parts.append(f"{c:g}")
            elif len(m) == 1:
                parts.append(f"{c:g}*x{m[0]}")
            elif m[0] == m[1]:
                parts.append(f"{c:g}*sqr(x{m[0]})")
            else:
                parts.append(f"{c:g}*x{m[0]}*x{m[1]}")
        return " + ".join(parts)


def Var(i: int) -> Expr:
    return Expr({(int(i),): 1.0})


def sqr(e) -> Expr:
    e = Expr.lift(e)
    return e * e


@dataclass(frozen=True)
class Constraint:
    """``expr == rhs`` (within ``tol``), with ``expr`` free of a constant term.

    ``kind`` is ``"linear"``, ``"quadratic"`` (contains a square) or
    ``"bilinear"`` (contains a product of two distinct variables only).
    """

    expr: Expr
    rhs: float
    label: str = ""
    tol: float = 0.0

    @staticmethod
    def equation(lhs, rhs=0.0, label: str = "") -> "Constraint":
        e = Expr.lift(lhs) - Expr.lift(rhs)
        c = e.constant
        body = Expr({m: v for m, v in e.terms.items() if m})
        return Constraint(body, -c, label)

    @property
    def kind(self) -> str:
        monos = self.expr.terms.keys()
        if any(len(m) == 2 and m[0] == m[1] for m in monos):
            return "quadratic"
        if any(len(m) == 2 for m in monos):
            return "bilinear"
        return "linear"

    @property
    def is_trivial(self) -> bool:
        return not self.expr.terms

    def variables(self) -> set[int]:
        return self.expr.variables()

    def residual(self, x) -> float:
        return abs(self.expr.evaluate(x) - self.rhs)

    def key(self) -> tuple:
        """Canonical form used to drop exact duplicates (scale and sign free)."""
        items = sorted(self.expr.terms.items())
        lead = items[0][1]
        return tuple((m, c / lead) for m, c in items) + (self.rhs / lead,)

    def __str__(self):
        return f"{self.expr!r} = {self.rhs:g}"


def _flatten(constraints: Sequence[Constraint]):
    cstart = [0]
    kind, coef, vi, vj, rlo, rhi = [], [], [], [], [], []
    for c in constraints:
        for m, v in sorted(c.expr.terms.items()):
            if len(m) == 1:
                kind.append(K.LINEAR)
                vi.append(m[0])
                vj.append(m[0])
            elif m[0] == m[1]:
                kind.append(K.SQUARE)
                vi.append(m[0])
                vj.append(m[0])
            else:
                kind.append(K.BILINEAR)
                vi.append(m[0])
                vj.append(m[1])
            coef.append(v)
        cstart.append(len(kind))
        rlo.append(rnd.sub_down(c.rhs, c.tol))
        rhi.append(rnd.add_up(c.rhs, c.tol))
    return (
        np.asarray(cstart, dtype=np.int64),
        np.asarray(kind, dtype=np.int64),
        np.asarray(coef, dtype=float),
        np.asarray(vi, dtype=np.int64),
        np.asarray(vj, dtype=np.int64),
        np.asarray(rlo, dtype=float),
        np.asarray(rhi, dtype=float),
    )


@dataclass(frozen=True, eq=False)
class ContractionOperator:
    """Ordered forward-backward contractors swept to a (relaxed) fixed point."""

    constraints: tuple
    dim: int
    max_rounds: int = 10
    min_relative_reduction: float = 0.01
    _tables: tuple = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        for c in self.constraints:
            bad = [i for i in c.variables() if not 0 <= i < self.dim]
            if bad:
                raise DimensionMismatch(f"constraint {c} references variables {bad} outside dimension {self.dim}")
        cstart, kind, coef, vi, vj, rlo, rhi = _flatten(self.constraints)
        longest = int(np.max(np.diff(cstart))) if len(cstart) > 1 else 0
        object.__setattr__(self, "_tables", (cstart, kind, coef, vi, vj, rlo, rhi, longest))

    @classmethod
    def from_constraints(cls, constraints: Iterable[Constraint], dim: int, max_rounds: int = 10,
                         min_relative_reduction: float = 0.01) -> "ContractionOperator":
        return cls(tuple(constraints), dim, max_rounds, min_relative_reduction)

    def with_params(self, max_rounds: int | None = None,
                    min_relative_reduction: float | None = None) -> "ContractionOperator":
        return ContractionOperator(
            self.constraints,
            self.dim,
            self.max_rounds if max_rounds is None else max_rounds,
            self.min_relative_reduction if min_relative_reduction is None else min_relative_reduction,
        )

    def scratch(self) -> np.ndarray:
        return K.make_scratch(self._tables[7], self.dim)

    def contract_arrays(self, lo: np.ndarray, hi: np.ndarray, scratch: np.ndarray | None = None) -> bool:
        """In-place contraction of float arrays; returns False if proven empty."""
        cstart, kind, coef, vi, vj, rlo, rhi, _ = self._tables
        if scratch is None:
            scratch = self.scratch()
        ok, _ = K.contract_fixpoint(lo, hi, cstart, kind, coef, vi, vj, rlo, rhi, self.max_rounds,
                                    self.min_relative_reduction, scratch)
        return bool(ok)

    def revise_arrays(self, k: int, lo: np.ndarray, hi: np.ndarray) -> bool:
        cstart, kind, coef, vi, vj, rlo, rhi, longest = self._tables
        s = K.make_scratch(longest, self.dim)
        return bool(K.revise(k, lo, hi, cstart, kind, coef, vi, vj, rlo, rhi, s[0], s[1], s[2], s[3]))

    def residuals(self, x) -> np.ndarray:
        cstart, kind, coef, vi, vj, rlo, rhi, _ = self._tables
        x = np.ascontiguousarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionMismatch(f"point has shape {x.shape}, expected ({self.dim},)")
        out = np.empty(len(self.constraints))
        return K.residuals(x, cstart, kind, coef, vi, vj, rlo, rhi, out)

    def jacobian(self, x, step: float = 1e-6) -> np.ndarray:
        """Finite-difference Jacobian of the constraint left-hand sides at ``x``."""
        cstart, kind, coef, vi, vj, _, _, _ = self._tables
        x = np.ascontiguousarray(x, dtype=float)
        out = np.empty((len(self.constraints), self.dim))
        return K.fd_jacobian(x, step, cstart, kind, coef, vi, vj, out)


def _check_dim(dim: int, box: IntervalBox):
    if len(box) != dim:
        raise DimensionMismatch(f"box has {len(box)} components, operator expects {dim}")


def contract(op: ContractionOperator, box: IntervalBox) -> IntervalBox:
    """Shrink ``box`` without losing any point that satisfies every constraint."""
    _check_dim(op.dim, box)
    if box.is_empty:
        return box
    lo = np.array(box.lo)
    hi = np.array(box.hi)
    if not op.contract_arrays(lo, hi):
        return IntervalBox.empty(op.dim)
    return IntervalBox(lo, hi)


def contract_single(c: Constraint, box: IntervalBox) -> IntervalBox:
    """One forward-backward pass of a single constraint."""
    op = ContractionOperator((c,), len(box))
    if box.is_empty:
        return box
    lo = np.array(box.lo)
    hi = np.array(box.hi)
    if not op.revise_arrays(0, lo, hi):
        return IntervalBox.empty(len(box))
    return IntervalBox(lo, hi)
