"""Expression trees: parsing, evaluation, symbolic differentiation, limits.

The grammar (EBNF, whitespace-insensitive):

    expr   := term (("+"|"-") term)*
    term   := factor (("*"|"/") factor)*
    factor := "-" factor | base
    base   := atom ("^" factor)?
    atom   := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")"

Power is right-associative.  Unary minus binds tighter than "+"/"-"
and "*"/"/" but looser than "^", so ``-x^2`` parses as ``-(x^2)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Iterator, Mapping

__all__ = [
    "Expr", "Num", "Var", "Neg", "Bin", "Call",
    "ExprError", "ParseError", "UnknownFunctionError",
    "EvalError", "UnboundIdentifierError", "DomainError",
    "FUNCTIONS", "parse", "evaluate", "differentiate", "render",
    "identifiers", "fold_constants", "compile_fn",
    "RationalCoeffs", "LimitResult", "FINITE", "PLUS_INF", "MINUS_INF", "NO_FINITE_LIMIT",
    "rational_limit_at_infinity", "to_rational_coeffs",
    "AffineApprox2D", "linear_approx_2d",
]

FUNCTIONS = ("sin", "cos", "tan", "exp", "ln", "sqrt", "abs")

BINARY_OPS = ("+", "-", "*", "/", "^")


class ExprError(Exception):
    pass


class ParseError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class UnknownFunctionError(ParseError):
    pass


class EvalError(ExprError):
    pass


class UnboundIdentifierError(EvalError):
    def __init__(self, name: str):
        super().__init__(f"unbound identifier {name!r}")
        self.name = name


class DomainError(EvalError):
    def __init__(self, operation: str, value: float):
        super().__init__(f"domain error: {operation} at value {value!r}")
        self.operation = operation
        self.value = value


# ---------------------------------------------------------------------------
# AST nodes


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class Bin:
    op: str  # one of + - * / ^
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    fn: str  # one of FUNCTIONS
    arg: "Expr"


Expr = Num | Var | Neg | Bin | Call


def identifiers(e: Expr) -> set[str]:
    """All variable/parameter names appearing in the tree."""
    if isinstance(e, Num):
        return set()
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Neg):
        return identifiers(e.arg)
    if isinstance(e, Call):
        return identifiers(e.arg)
    return identifiers(e.left) | identifiers(e.right)


# ---------------------------------------------------------------------------
# Parser

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<sym>[-+*/^()]))"
)


def _tokenize(text: str) -> Iterator[tuple[str, str, int]]:
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.lastgroup is None:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            raise ParseError(f"unexpected character {stripped[0]!r}", n - len(stripped))
        kind = m.lastgroup
        yield kind, m.group(kind), m.start(kind)
        pos = m.end()


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = list(_tokenize(text))
        self.i = 0

    def peek(self) -> tuple[str, str, int] | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next(self) -> tuple[str, str, int] | None:
        tok = self.peek()
        if tok is not None:
            self.i += 1
        return tok

    def eof_offset(self) -> int:
        return len(self.text)

    def expect_sym(self, sym: str):
        tok = self.next()
        if tok is None:
            raise ParseError(f"expected {sym!r}, found end of input", self.eof_offset())
        kind, value, off = tok
        if kind != "sym" or value != sym:
            raise ParseError(f"expected {sym!r}, found {value!r}", off)

    def parse(self) -> Expr:
        e = self.expr()
        tok = self.peek()
        if tok is not None:
            raise ParseError(f"unexpected token {tok[1]!r}", tok[2])
        return e

    def expr(self) -> Expr:
        e = self.term()
        while True:
            tok = self.peek()
            if tok and tok[0] == "sym" and tok[1] in "+-":
                self.next()
                e = Bin(tok[1], e, self.term())
            else:
                return e

    def term(self) -> Expr:
        e = self.factor()
        while True:
            tok = self.peek()
            if tok and tok[0] == "sym" and tok[1] in "*/":
                self.next()
                e = Bin(tok[1], e, self.factor())
            else:
                return e

    def factor(self) -> Expr:
        tok = self.peek()
        if tok and tok[0] == "sym" and tok[1] == "-":
            self.next()
            return Neg(self.factor())
        return self.base()

    def base(self) -> Expr:
        e = self.atom()
        tok = self.peek()
        if tok and tok[0] == "sym" and tok[1] == "^":
            self.next()
            e = Bin("^", e, self.factor())  # right-associative
        return e

    def atom(self) -> Expr:
        tok = self.next()
        if tok is None:
            raise ParseError("expected a value, found end of input", self.eof_offset())
        kind, value, off = tok
        if kind == "num":
            return Num(float(value))
        if kind == "ident":
            nxt = self.peek()
            if nxt and nxt[0] == "sym" and nxt[1] == "(":
                if value not in FUNCTIONS:
                    raise UnknownFunctionError(f"unknown function {value!r}", off)
                self.next()
                arg = self.expr()
                self.expect_sym(")")
                return Call(value, arg)
            return Var(value)
        if kind == "sym" and value == "(":
            e = self.expr()
            self.expect_sym(")")
            return e
        raise ParseError(f"unexpected token {value!r}", off)


def parse(text: str) -> Expr:
    """Parse ``text`` into an expression tree.

    Raises ParseError (with the byte offset of the problem) on malformed
    input and UnknownFunctionError for calls outside the allowed set.
    """
    if not text.strip():
        raise ParseError("empty expression", 0)
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Evaluation


def evaluate(e: Expr, env: Mapping[str, float]) -> float:
    """Evaluate ``e`` with every identifier bound in ``env``."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        try:
            return float(env[e.name])
        except KeyError:
            raise UnboundIdentifierError(e.name) from None
    if isinstance(e, Neg):
        return -evaluate(e.arg, env)
    if isinstance(e, Call):
        v = evaluate(e.arg, env)
        return _apply_function(e.fn, v)
    left = evaluate(e.left, env)
    right = evaluate(e.right, env)
    if e.op == "+":
        return left + right
    if e.op == "-":
        return left - right
    if e.op == "*":
        return left * right
    if e.op == "/":
        if right == 0.0:
            raise DomainError("division by zero", left)
        return left / right
    # power
    if left < 0.0 and right != round(right):
        raise DomainError("negative base to non-integer power", left)
    if left == 0.0 and right < 0.0:
        raise DomainError("zero base to negative power", right)
    try:
        return left ** right
    except OverflowError:
        raise DomainError("power overflow", left) from None


def _apply_function(fn: str, v: float) -> float:
    if fn == "sin":
        return math.sin(v)
    if fn == "cos":
        return math.cos(v)
    if fn == "tan":
        return math.tan(v)
    if fn == "exp":
        try:
            return math.exp(v)
        except OverflowError:
            raise DomainError("exp overflow", v) from None
    if fn == "ln":
        if v <= 0.0:
            raise DomainError("ln of non-positive", v)
        return math.log(v)
    if fn == "sqrt":
        if v < 0.0:
            raise DomainError("sqrt of negative", v)
        return math.sqrt(v)
    if fn == "abs":
        return abs(v)
    raise EvalError(f"unknown function {fn!r}")


# ---------------------------------------------------------------------------
# Rendering (used for value-level round-trip checks and reports)

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def render(e: Expr) -> str:
    """Render to a string that re-parses to a value-equivalent tree."""
    return _render(e, 0)


def _render(e: Expr, parent_prec: int) -> str:
    if isinstance(e, Num):
        s = repr(e.value)
        return f"({s})" if e.value < 0 else s
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.fn}({_render(e.arg, 0)})"
    if isinstance(e, Neg):
        inner = _render(e.arg, _PREC["neg"])
        s = f"-{inner}"
        return f"({s})" if parent_prec > _PREC["neg"] else s
    prec = _PREC[e.op]
    # left operand of ^ needs parens at equal precedence (right-assoc);
    # right operands of - and / need them too (left-assoc)
    ls = _render(e.left, prec + 1 if e.op == "^" else prec)
    rs = _render(e.right, prec if e.op == "^" else prec + 1)
    s = f"{ls} {e.op} {rs}"
    return f"({s})" if parent_prec > prec else s


# ---------------------------------------------------------------------------
# Differentiation

_ZERO = Num(0.0)
_ONE = Num(1.0)


def _is_const(e: Expr) -> bool:
    return isinstance(e, Num)


def fold_constants(e: Expr) -> Expr:
    """Fold numeric subtrees; no other algebraic simplification."""
    if isinstance(e, (Num, Var)):
        return e
    if isinstance(e, Neg):
        a = fold_constants(e.arg)
        if isinstance(a, Num):
            return Num(-a.value)
        return Neg(a)
    if isinstance(e, Call):
        a = fold_constants(e.arg)
        if isinstance(a, Num):
            try:
                return Num(_apply_function(e.fn, a.value))
            except EvalError:
                pass
        return Call(e.fn, a)
    l = fold_constants(e.left)
    r = fold_constants(e.right)
    if isinstance(l, Num) and isinstance(r, Num):
        try:
            return Num(evaluate(Bin(e.op, l, r), {}))
        except EvalError:
            return Bin(e.op, l, r)
    # identity folds keep derivative trees small without restructuring
    if e.op == "+":
        if _is_zero(l):
            return r
        if _is_zero(r):
            return l
    elif e.op == "-":
        if _is_zero(r):
            return l
        if _is_zero(l):
            return Neg(r)
    elif e.op == "*":
        if _is_zero(l) or _is_zero(r):
            return _ZERO
        if _is_one(l):
            return r
        if _is_one(r):
            return l
    elif e.op == "/":
        if _is_zero(l) and not _is_zero(r):
            return _ZERO
        if _is_one(r):
            return l
    elif e.op == "^":
        if _is_one(r):
            return l
        if _is_zero(r):
            return _ONE
    return Bin(e.op, l, r)


def _is_zero(e: Expr) -> bool:
    return isinstance(e, Num) and e.value == 0.0


def _is_one(e: Expr) -> bool:
    return isinstance(e, Num) and e.value == 1.0


def differentiate(e: Expr, var: str) -> Expr:
    """Symbolic derivative with respect to ``var``.

    All other identifiers are treated as constants.  No simplification
    beyond constant folding is guaranteed; correctness is value-level.
    """
    return fold_constants(_diff(fold_constants(e), var))


def _diff(e: Expr, var: str) -> Expr:
    if isinstance(e, Num):
        return _ZERO
    if isinstance(e, Var):
        return _ONE if e.name == var else _ZERO
    if isinstance(e, Neg):
        return Neg(_diff(e.arg, var))
    if isinstance(e, Call):
        return Bin("*", _fn_derivative(e), _diff(e.arg, var))
    l, r = e.left, e.right
    dl, dr = _diff(l, var), _diff(r, var)
    if e.op == "+":
        return Bin("+", dl, dr)
    if e.op == "-":
        return Bin("-", dl, dr)
    if e.op == "*":
        return Bin("+", Bin("*", dl, r), Bin("*", l, dr))
    if e.op == "/":
        num = Bin("-", Bin("*", dl, r), Bin("*", l, dr))
        return Bin("/", num, Bin("^", r, Num(2.0)))
    # power: u^c -> c*u^(c-1)*u'; otherwise rewrite via exp(v*ln u)
    if _is_const(r):
        c = r.value
        return Bin("*", Bin("*", Num(c), Bin("^", l, Num(c - 1.0))), dl)
    rewritten = Call("exp", Bin("*", r, Call("ln", l)))
    return _diff(rewritten, var)


def _fn_derivative(call: Call) -> Expr:
    u = call.arg
    fn = call.fn
    if fn == "sin":
        return Call("cos", u)
    if fn == "cos":
        return Neg(Call("sin", u))
    if fn == "tan":
        return Bin("/", _ONE, Bin("^", Call("cos", u), Num(2.0)))
    if fn == "exp":
        return Call("exp", u)
    if fn == "ln":
        return Bin("/", _ONE, u)
    if fn == "sqrt":
        return Bin("/", _ONE, Bin("*", Num(2.0), Call("sqrt", u)))
    if fn == "abs":
        # valid away from u = 0
        return Bin("/", u, Call("abs", u))
    raise EvalError(f"no derivative rule for {fn!r}")


# ---------------------------------------------------------------------------
# Compilation to a plain Python callable (fast path for integrators/grids)

_FN_IMPL: dict[str, Callable[[float], float]] = {
    "sin": math.sin, "cos": math.cos, "tan": math.tan,
    "exp": math.exp, "ln": math.log, "sqrt": math.sqrt, "abs": abs,
}


def _emit(e: Expr, names: dict[str, str]) -> str:
    if isinstance(e, Num):
        return f"({e.value!r})"
    if isinstance(e, Var):
        try:
            return names[e.name]
        except KeyError:
            raise UnboundIdentifierError(e.name) from None
    if isinstance(e, Neg):
        return f"(-{_emit(e.arg, names)})"
    if isinstance(e, Call):
        return f"_{e.fn}({_emit(e.arg, names)})"
    op = "**" if e.op == "^" else e.op
    return f"({_emit(e.left, names)} {op} {_emit(e.right, names)})"


def compile_fn(e: Expr, arg_names: tuple[str, ...], params: Mapping[str, float] | None = None):
    """Compile to ``f(*args) -> float`` with parameters bound as constants.

    Math-domain problems surface as ValueError/ZeroDivisionError/OverflowError
    from the runtime rather than DomainError; callers on the fast path catch
    those.  Results agree exactly with :func:`evaluate` except that plain
    ``float.__pow__``/runtime semantics replace the explicit domain checks.
    """
    e = fold_constants(e)
    names = {n: f"_a{i}" for i, n in enumerate(arg_names)}
    if params:
        for k, v in params.items():
            if k not in names:
                names[k] = f"({float(v)!r})"
    src = f"def _compiled({', '.join(names[n] for n in arg_names)}):\n    return {_emit(e, names)}\n"
    glb = {f"_{k}": v for k, v in _FN_IMPL.items()}
    exec(compile(src, "<phaseport-expr>", "exec"), glb)
    return glb["_compiled"]


# ---------------------------------------------------------------------------
# Limits of rational functions at infinity

FINITE = "finite"
PLUS_INF = "plus_infinity"
MINUS_INF = "minus_infinity"
NO_FINITE_LIMIT = "no_finite_limit"


@dataclass(frozen=True)
class LimitResult:
    kind: str  # FINITE | PLUS_INF | MINUS_INF | NO_FINITE_LIMIT
    value: float | None = None

    @property
    def is_finite(self) -> bool:
        return self.kind == FINITE


@dataclass(frozen=True)
class RationalCoeffs:
    """p(x)/g(x) as coefficient lists by ascending power.

    ``num_low``/``den_low`` are the powers of the first coefficients, so
    Laurent parts (negative powers) are representable.
    """
    num: tuple[float, ...]
    den: tuple[float, ...]
    num_low: int = 0
    den_low: int = 0

    def __post_init__(self):
        if not self.den or all(c == 0.0 for c in self.den):
            raise ValueError("denominator is identically zero")


def _trimmed_degree(coeffs: tuple[float, ...], low: int) -> tuple[int, float]:
    """Highest power with nonzero coefficient and that coefficient."""
    for i in range(len(coeffs) - 1, -1, -1):
        if coeffs[i] != 0.0:
            return low + i, coeffs[i]
    return low, 0.0


def rational_limit_at_infinity(rc: RationalCoeffs, finite_only: bool = False) -> LimitResult:
    """Limit of p(x)/g(x) as x -> +infinity.

    Divide through by the highest power present: the result depends only on
    the degrees and leading coefficients.  When the degree of the numerator
    exceeds the denominator's the function blows up; with ``finite_only``
    those cases are reported as NO_FINITE_LIMIT instead of signed infinity.
    """
    # clearing negative powers multiplies both parts by the same power of x,
    # which is exactly what comparing shifted degrees does
    ndeg, nlead = _trimmed_degree(rc.num, rc.num_low)
    ddeg, dlead = _trimmed_degree(rc.den, rc.den_low)
    if dlead == 0.0:
        raise ValueError("denominator is identically zero")
    if nlead == 0.0:
        return LimitResult(FINITE, 0.0)
    if ndeg < ddeg:
        return LimitResult(FINITE, 0.0)
    if ndeg == ddeg:
        return LimitResult(FINITE, nlead / dlead)
    if finite_only:
        return LimitResult(NO_FINITE_LIMIT)
    return LimitResult(PLUS_INF if nlead * dlead > 0 else MINUS_INF)


def _poly_mul(p: list[float], q: list[float]) -> list[float]:
    out = [0.0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a == 0.0:
            continue
        for j, b in enumerate(q):
            out[i + j] += a * b
    return out


def _poly_add(p: list[float], q: list[float], sign: float = 1.0) -> list[float]:
    n = max(len(p), len(q))
    out = [0.0] * n
    for i, a in enumerate(p):
        out[i] += a
    for i, b in enumerate(q):
        out[i] += sign * b
    return out


def to_rational_coeffs(e: Expr, var: str, env: Mapping[str, float] | None = None) -> RationalCoeffs:
    """Convert a polynomial-ratio tree in ``var`` to coefficient form.

    Every other identifier must be bound in ``env``.  Rejects trees that are
    not ratios of polynomials in ``var`` (function calls of the variable,
    non-integer powers, and the like) with ExprError.
    """
    env = env or {}

    def go(node: Expr) -> tuple[list[float], list[float]]:  # (num, den)
        if isinstance(node, Num):
            return [node.value], [1.0]
        if isinstance(node, Var):
            if node.name == var:
                return [0.0, 1.0], [1.0]
            if node.name in env:
                return [float(env[node.name])], [1.0]
            raise UnboundIdentifierError(node.name)
        if isinstance(node, Neg):
            n, d = go(node.arg)
            return [-c for c in n], d
        if isinstance(node, Call):
            if var in identifiers(node):
                raise ExprError(f"not a rational function: {node.fn}() applied to the variable")
            return [evaluate(node, env)], [1.0]
        n1, d1 = go(node.left)
        if node.op == "^":
            if not isinstance(node.right, Num) or node.right.value != round(node.right.value):
                raise ExprError("not a rational function: non-integer power")
            k = int(node.right.value)
            if k < 0:
                n1, d1, k = d1, n1, -k
            num, den = [1.0], [1.0]
            for _ in range(k):
                num = _poly_mul(num, n1)
                den = _poly_mul(den, d1)
            return num, den
        n2, d2 = go(node.right)
        if node.op == "+":
            return _poly_add(_poly_mul(n1, d2), _poly_mul(n2, d1)), _poly_mul(d1, d2)
        if node.op == "-":
            return _poly_add(_poly_mul(n1, d2), _poly_mul(n2, d1), -1.0), _poly_mul(d1, d2)
        if node.op == "*":
            return _poly_mul(n1, n2), _poly_mul(d1, d2)
        if node.op == "/":
            return _poly_mul(n1, d2), _poly_mul(d1, n2)
        raise ExprError(f"unsupported operator {node.op!r}")

    num, den = go(fold_constants(e))
    return RationalCoeffs(tuple(num), tuple(den))


# ---------------------------------------------------------------------------
# Linear approximation of a function of two variables


@dataclass(frozen=True)
class AffineApprox2D:
    """f(x,y) ~= base + slope_x*(x - x0) + slope_y*(y - y0)."""
    base: float
    slope_x: float
    slope_y: float
    anchor: tuple[float, float]

    def __call__(self, x: float, y: float) -> float:
        x0, y0 = self.anchor
        return self.base + self.slope_x * (x - x0) + self.slope_y * (y - y0)


def linear_approx_2d(
    f: Expr,
    x_name: str,
    y_name: str,
    anchor: tuple[float, float],
    env: Mapping[str, float] | None = None,
) -> AffineApprox2D:
    """Tangent-plane approximation of ``f`` at ``anchor``.

    Slopes are the symbolic partial derivatives evaluated at the anchor;
    domain errors in f or its partials propagate.
    """
    env = dict(env or {})
    env[x_name], env[y_name] = anchor
    base = evaluate(f, env)
    sx = evaluate(differentiate(f, x_name), env)
    sy = evaluate(differentiate(f, y_name), env)
    return AffineApprox2D(base, sx, sy, (float(anchor[0]), float(anchor[1])))
