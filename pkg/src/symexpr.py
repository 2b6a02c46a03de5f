"""Immutable expression DAG over the covariance symbols.

Nodes are hash-consed: building the same expression twice from the factory
functions yields the same object, so identity doubles as structural equality
and shared subterms are evaluated once per context.
"""

import logging
import threading
from collections.abc import Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any
from weakref import WeakValueDictionary

from src.model import CovMatrix
from src.quadext import QuadExtValue, RadicandMismatch, rational_sqrt

logger = logging.getLogger(__name__)


class EvaluationError(Exception):
    """Base class for failures while evaluating an expression at a model point."""
    pass


class DegenerateEvaluation(EvaluationError):
    """Raised when an expression divides by an exact zero at a model point."""
    pass


class InvalidModelPoint(EvaluationError):
    """Raised when a square root meets a negative value at a model point."""
    pass


class UnsupportedExpression(EvaluationError):
    """Raised for nested or incompatible radicals and unknown symbols."""
    pass


type Operand = SigmaExpr | Fraction | int


@dataclass(frozen=True, eq=False)
class SigmaExpr:
    degree: tuple[int, int] = field(init=False, repr=False, default=(0, 0))

    def __post_init__(self) -> None:
        pass

    @property
    def children(self) -> tuple["SigmaExpr", ...]:
        return ()

    def __add__(self, other: Operand) -> "SigmaExpr":
        return add(self, as_expr(other))

    def __radd__(self, other: Operand) -> "SigmaExpr":
        return add(as_expr(other), self)

    def __sub__(self, other: Operand) -> "SigmaExpr":
        return sub(self, as_expr(other))

    def __rsub__(self, other: Operand) -> "SigmaExpr":
        return sub(as_expr(other), self)

    def __mul__(self, other: Operand) -> "SigmaExpr":
        return mul(self, as_expr(other))

    def __rmul__(self, other: Operand) -> "SigmaExpr":
        return mul(as_expr(other), self)

    def __truediv__(self, other: Operand) -> "SigmaExpr":
        return div(self, as_expr(other))

    def __rtruediv__(self, other: Operand) -> "SigmaExpr":
        return div(as_expr(other), self)

    def __neg__(self) -> "SigmaExpr":
        return neg(self)

    def __str__(self) -> str:
        return pretty(self)


@dataclass(frozen=True, eq=False)
class Sym(SigmaExpr):
    i: int
    j: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "degree", (1, 0))


@dataclass(frozen=True, eq=False)
class Const(SigmaExpr):
    value: Fraction


@dataclass(frozen=True, eq=False)
class Binary(SigmaExpr):
    left: SigmaExpr
    right: SigmaExpr

    @property
    def children(self) -> tuple[SigmaExpr, ...]:
        return (self.left, self.right)


class Add(Binary):
    def __post_init__(self) -> None:
        (n1, d1), (n2, d2) = self.left.degree, self.right.degree
        object.__setattr__(self, "degree", (max(n1 + d2, n2 + d1), d1 + d2))


class Sub(Binary):
    def __post_init__(self) -> None:
        (n1, d1), (n2, d2) = self.left.degree, self.right.degree
        object.__setattr__(self, "degree", (max(n1 + d2, n2 + d1), d1 + d2))


class Mul(Binary):
    def __post_init__(self) -> None:
        (n1, d1), (n2, d2) = self.left.degree, self.right.degree
        object.__setattr__(self, "degree", (n1 + n2, d1 + d2))


class Div(Binary):
    def __post_init__(self) -> None:
        (n1, d1), (n2, d2) = self.left.degree, self.right.degree
        object.__setattr__(self, "degree", (n1 + d2, d1 + n2))


@dataclass(frozen=True, eq=False)
class Sqrt(SigmaExpr):
    arg: SigmaExpr

    def __post_init__(self) -> None:
        n, d = self.arg.degree
        object.__setattr__(self, "degree", ((n + 1) // 2, (d + 1) // 2))

    @property
    def children(self) -> tuple[SigmaExpr, ...]:
        return (self.arg,)


_INTERNED: "WeakValueDictionary[tuple, SigmaExpr]" = WeakValueDictionary()
_INTERN_LOCK = threading.Lock()


def _intern(key: tuple, build: type, *args: Any) -> SigmaExpr:
    with _INTERN_LOCK:
        node = _INTERNED.get(key)
        if node is None:
            node = build(*args)
            _INTERNED[key] = node
        return node


def sym(i: int, j: int) -> SigmaExpr:
    if i > j:
        i, j = j, i
    return _intern(("sym", i, j), Sym, i, j)


def const(value: Fraction | int) -> SigmaExpr:
    value = Fraction(value)
    return _intern(("const", value), Const, value)


ZERO = const(0)
ONE = const(1)


def as_expr(x: Operand) -> SigmaExpr:
    if isinstance(x, SigmaExpr):
        return x
    return const(x)


def _is_const(e: SigmaExpr, value: int | None = None) -> bool:
    return isinstance(e, Const) and (value is None or e.value == value)


def _binary(cls: type, a: SigmaExpr, b: SigmaExpr) -> SigmaExpr:
    return _intern((cls.__name__, id(a), id(b)), cls, a, b)


def add(a: SigmaExpr, b: SigmaExpr) -> SigmaExpr:
    if isinstance(a, Const) and isinstance(b, Const):
        return const(a.value + b.value)
    if _is_const(a, 0):
        return b
    if _is_const(b, 0):
        return a
    if is_negation(b):
        return sub(a, b.right)
    if is_negation(a):
        return sub(b, a.right)
    return _binary(Add, a, b)


def sub(a: SigmaExpr, b: SigmaExpr) -> SigmaExpr:
    if isinstance(a, Const) and isinstance(b, Const):
        return const(a.value - b.value)
    if _is_const(b, 0):
        return a
    if a is b:
        return ZERO
    if is_negation(b):
        return add(a, b.right)
    return _binary(Sub, a, b)


def neg(a: SigmaExpr) -> SigmaExpr:
    if isinstance(a, Const):
        return const(-a.value)
    if isinstance(a, Sub) and _is_const(a.left, 0):
        return a.right
    return _binary(Sub, ZERO, a)


def mul(a: SigmaExpr, b: SigmaExpr) -> SigmaExpr:
    if isinstance(a, Const) and isinstance(b, Const):
        return const(a.value * b.value)
    if _is_const(a, 0) or _is_const(b, 0):
        return ZERO
    if _is_const(a, 1):
        return b
    if _is_const(b, 1):
        return a
    if is_negation(a) or is_negation(b):
        return _signed(mul, a, b)
    return _binary(Mul, a, b)


def div(a: SigmaExpr, b: SigmaExpr) -> SigmaExpr:
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0:
        return const(a.value / b.value)
    if _is_const(b, 1):
        return a
    if _is_const(a, 0) and not _is_const(b, 0):
        return ZERO
    if is_negation(a) or is_negation(b):
        return _signed(div, a, b)
    return _binary(Div, a, b)


def sqrt(a: SigmaExpr) -> SigmaExpr:
    if isinstance(a, Const) and (root := rational_sqrt(a.value)) is not None:
        return const(root)
    return _intern(("Sqrt", id(a)), Sqrt, a)


def is_negation(e: SigmaExpr) -> bool:
    return isinstance(e, Sub) and _is_const(e.left, 0)


def _signed(op: Any, a: SigmaExpr, b: SigmaExpr) -> SigmaExpr:
    """Apply `op` to the magnitudes and put the sign in front."""
    flips = is_negation(a) != is_negation(b)
    a = a.right if is_negation(a) else a
    b = b.right if is_negation(b) else b
    out = op(a, b)
    return neg(out) if flips else out


@dataclass(frozen=True)
class Quadratic:
    """The equation a*x^2 + b*x + c = 0 with expression coefficients."""

    a: SigmaExpr
    b: SigmaExpr
    c: SigmaExpr

    def at(self, x: SigmaExpr) -> SigmaExpr:
        return self.a * x * x + self.b * x + self.c

    def discriminant(self) -> SigmaExpr:
        return self.b * self.b - 4 * self.a * self.c


@dataclass
class EvalContext:
    """Exact covariances of one sampled model plus a per-context memo."""

    sigma: CovMatrix
    seed: int | None = None
    memo: dict[SigmaExpr, QuadExtValue] = field(default_factory=dict)


def _apply(node: SigmaExpr, memo: dict[SigmaExpr, QuadExtValue], sigma: CovMatrix) -> QuadExtValue:
    try:
        match node:
            case Sym(i=i, j=j):
                if j >= sigma.size:
                    raise UnsupportedExpression(f"symbol σ{i},{j} is outside the model")
                return QuadExtValue(sigma[i, j])
            case Const(value=value):
                return QuadExtValue(value)
            case Add(left=a, right=b):
                return memo[a] + memo[b]
            case Sub(left=a, right=b):
                return memo[a] - memo[b]
            case Mul(left=a, right=b):
                return memo[a] * memo[b]
            case Div(left=a, right=b):
                return memo[a] / memo[b]
            case Sqrt(arg=a):
                x = memo[a]
                if not x.is_rational:
                    raise UnsupportedExpression("nested square roots are not supported")
                if x.u < 0:
                    raise InvalidModelPoint(f"square root of negative value {x.u}")
                return QuadExtValue.sqrt_of(x.u)
    except ZeroDivisionError as e:
        raise DegenerateEvaluation(str(e)) from e
    except RadicandMismatch as e:
        raise UnsupportedExpression(str(e)) from e
    raise UnsupportedExpression(f"unknown node {type(node).__name__}")


def evaluate(e: SigmaExpr, ctx: EvalContext) -> QuadExtValue:
    memo = ctx.memo
    if e in memo:
        return memo[e]
    stack = [e]
    while stack:
        node = stack[-1]
        if node in memo:
            stack.pop()
            continue
        pending = [c for c in node.children if c not in memo]
        if pending:
            stack.extend(pending)
            continue
        stack.pop()
        memo[node] = _apply(node, memo, ctx.sigma)
    return memo[e]


_OPS = {Add: "add", Sub: "sub", Mul: "mul", Div: "div"}
_BUILDERS = {"add": add, "sub": sub, "mul": mul, "div": div}


def to_document(e: SigmaExpr, labels: tuple[int, ...] | None = None) -> dict[str, Any]:
    match e:
        case Sym(i=i, j=j):
            if labels is not None:
                i, j = labels[i], labels[j]
            return {"op": "sym", "i": i, "j": j}
        case Const(value=value):
            return {"op": "const", "value": f"{value.numerator}/{value.denominator}"}
        case Sqrt(arg=a):
            return {"op": "sqrt", "arg": to_document(a, labels)}
        case Binary(left=a, right=b):
            return {
                "op": _OPS[type(e)],
                "left": to_document(a, labels),
                "right": to_document(b, labels),
            }
    raise UnsupportedExpression(f"unknown node {type(e).__name__}")


def from_document(data: Mapping[str, Any], index: Mapping[int, int] | None = None) -> SigmaExpr:
    try:
        op = data["op"]
        if op == "sym":
            i, j = int(data["i"]), int(data["j"])
            if index is not None:
                i, j = index[i], index[j]
            return sym(i, j)
        if op == "const":
            return const(Fraction(data["value"]))
        if op == "sqrt":
            return sqrt(from_document(data["arg"], index))
        build = _BUILDERS[op]
        return build(from_document(data["left"], index), from_document(data["right"], index))
    except (KeyError, TypeError, ValueError) as e:
        raise UnsupportedExpression(f"malformed expression document: {e!r}") from e


def _symbol_name(i: int, j: int) -> str:
    if i < 10 and j < 10:
        return f"σ{i}{j}"
    return f"σ[{i},{j}]"


_PREC_NEG, _PREC_SUM, _PREC_PRODUCT, _PREC_ATOM = 0, 1, 2, 3
_SYMBOLS = {Add: " + ", Sub: " - ", Mul: "*", Div: "/"}


def pretty(
    e: SigmaExpr,
    names: Mapping[SigmaExpr, str] | None = None,
    labels: tuple[int, ...] | None = None,
) -> str:
    """Infix rendering; nodes listed in `names` print as those names."""
    names = names or {}
    memo: dict[SigmaExpr, tuple[str, int]] = {}

    def render(node: SigmaExpr, top: bool = False) -> tuple[str, int]:
        if node in memo:
            return memo[node]
        if not top and node in names:
            out = (names[node], _PREC_ATOM)
        else:
            out = _render(node)
        memo[node] = out
        return out

    def wrap(node: SigmaExpr, threshold: int, strict: bool) -> str:
        text, prec = render(node)
        if prec < threshold or (strict and prec == threshold):
            return f"({text})"
        return text

    def _render(node: SigmaExpr) -> tuple[str, int]:
        match node:
            case Sym(i=i, j=j):
                if labels is not None:
                    i, j = sorted((labels[i], labels[j]))
                return _symbol_name(i, j), _PREC_ATOM
            case Const(value=value):
                if value < 0:
                    return str(value), _PREC_NEG
                return str(value), _PREC_ATOM if value.denominator == 1 else _PREC_PRODUCT
            case Sqrt(arg=a):
                return f"sqrt({render(a)[0]})", _PREC_ATOM
            case Sub() if is_negation(node):
                return f"-{wrap(node.right, _PREC_PRODUCT, False)}", _PREC_NEG
            case Binary(left=a, right=b):
                prec = _PREC_SUM if isinstance(node, (Add, Sub)) else _PREC_PRODUCT
                strict = isinstance(node, (Sub, Div))
                left = _PREC_NEG if prec == _PREC_SUM else prec
                return f"{wrap(a, left, False)}{_SYMBOLS[type(node)]}{wrap(b, prec, strict)}", prec
        raise UnsupportedExpression(f"unknown node {type(node).__name__}")

    return render(e, top=True)[0]
