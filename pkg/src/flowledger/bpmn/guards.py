"""Boolean guard expressions attached to decision flows.

Grammar (loosest binding first)::

    or-expr   := and-expr (("||" | "or") and-expr)*
    and-expr  := cmp-expr (("&&" | "and") cmp-expr)*
    cmp-expr  := unary (("==" | "!=" | "<=" | ">=" | "<" | ">") unary)?
    unary     := ("!" | "not") unary | primary
    primary   := literal | path | "(" or-expr ")"
    path      := ident "." ident            # dataObjectName.metaKey
    literal   := number | string | "true" | "false"

Guards are evaluated against per-data-object metadata only; document bytes
never reach the evaluator. Syntax errors report 1-based byte offsets.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping, Union

from ..errors import GuardSyntax, MissingField, TypeMismatch


@dataclass(frozen=True)
class Lit:
    value: Union[bool, int, float, str]


@dataclass(frozen=True)
class Path:
    obj: str
    key: str


@dataclass(frozen=True)
class Cmp:
    op: str     # == != < <= > >=
    left: "GuardExpr"
    right: "GuardExpr"


@dataclass(frozen=True)
class Not:
    operand: "GuardExpr"


@dataclass(frozen=True)
class Bin:
    op: str     # "and" | "or"
    left: "GuardExpr"
    right: "GuardExpr"


GuardExpr = Union[Lit, Path, Cmp, Not, Bin]

_CMP_OPS = ("==", "!=", "<=", ">=", "<", ">")


class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0    # 0-based; reported offsets are pos + 1

    def error(self, message: str, at: int | None = None) -> GuardSyntax:
        offset = (self.pos if at is None else at) + 1
        return GuardSyntax(message, offset)

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self, probe: str) -> bool:
        self.skip_ws()
        return self.text.startswith(probe, self.pos)

    def take(self, probe: str) -> bool:
        if self.peek(probe):
            self.pos += len(probe)
            return True
        return False

    def peek_word(self, word: str) -> bool:
        """Match a keyword not glued to a following identifier character."""
        self.skip_ws()
        end = self.pos + len(word)
        if not self.text.startswith(word, self.pos):
            return False
        return end >= len(self.text) or not _is_ident_char(self.text[end])

    def take_word(self, word: str) -> bool:
        if self.peek_word(word):
            self.pos += len(word)
            return True
        return False

    def at_end(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text)


def _is_ident_start(c: str) -> bool:
    return c.isalpha() or c == "_"


def _is_ident_char(c: str) -> bool:
    return c.isalnum() or c == "_"


def parse_guard(text: str) -> GuardExpr:
    """Parse guard text into its AST; raises GuardSyntax with a byte offset."""
    lx = _Lexer(text)
    if lx.at_end():
        raise lx.error("empty guard expression")
    expr = _parse_or(lx)
    if not lx.at_end():
        raise lx.error("unexpected trailing input")
    return expr


def _parse_or(lx: _Lexer) -> GuardExpr:
    left = _parse_and(lx)
    while lx.take("||") or lx.take_word("or"):
        left = Bin("or", left, _parse_and(lx))
    return left


def _parse_and(lx: _Lexer) -> GuardExpr:
    left = _parse_cmp(lx)
    while lx.take("&&") or lx.take_word("and"):
        left = Bin("and", left, _parse_cmp(lx))
    return left


def _parse_cmp(lx: _Lexer) -> GuardExpr:
    left = _parse_unary(lx)
    for op in _CMP_OPS:
        if lx.take(op):
            return Cmp(op, left, _parse_unary(lx))
    return left


def _parse_unary(lx: _Lexer) -> GuardExpr:
    if (lx.peek("!") and not lx.peek("!=") and lx.take("!")) or lx.take_word("not"):
        return Not(_parse_unary(lx))
    return _parse_primary(lx)


def _parse_primary(lx: _Lexer) -> GuardExpr:
    lx.skip_ws()
    if lx.pos >= len(lx.text):
        raise lx.error("expected a value")
    c = lx.text[lx.pos]

    if lx.take("("):
        inner = _parse_or(lx)
        if not lx.take(")"):
            raise lx.error("expected ')'")
        return inner

    if c in "\"'":
        return Lit(_parse_string(lx, c))

    if c.isdigit() or (c == "-" and lx.pos + 1 < len(lx.text) and lx.text[lx.pos + 1].isdigit()):
        return Lit(_parse_number(lx))

    if lx.take_word("true"):
        return Lit(True)
    if lx.take_word("false"):
        return Lit(False)

    if _is_ident_start(c):
        first = _parse_ident(lx)
        if not lx.take("."):
            raise lx.error("expected '.' after data object name")
        lx.skip_ws()
        if lx.pos >= len(lx.text) or not _is_ident_start(lx.text[lx.pos]):
            raise lx.error("expected metadata key after '.'")
        return Path(first, _parse_ident(lx))

    raise lx.error(f"unexpected character {c!r}")


def _parse_ident(lx: _Lexer) -> str:
    start = lx.pos
    while lx.pos < len(lx.text) and _is_ident_char(lx.text[lx.pos]):
        lx.pos += 1
    return lx.text[start:lx.pos]


def _parse_number(lx: _Lexer) -> Union[int, float]:
    start = lx.pos
    if lx.text[lx.pos] == "-":
        lx.pos += 1
    while lx.pos < len(lx.text) and lx.text[lx.pos].isdigit():
        lx.pos += 1
    is_float = False
    if lx.pos < len(lx.text) and lx.text[lx.pos] == ".":
        if lx.pos + 1 < len(lx.text) and lx.text[lx.pos + 1].isdigit():
            is_float = True
            lx.pos += 1
            while lx.pos < len(lx.text) and lx.text[lx.pos].isdigit():
                lx.pos += 1
    raw = lx.text[start:lx.pos]
    return float(raw) if is_float else int(raw)


def _parse_string(lx: _Lexer, quote: str) -> str:
    opened_at = lx.pos
    lx.pos += 1
    out = []
    while lx.pos < len(lx.text):
        c = lx.text[lx.pos]
        if c == "\\":
            if lx.pos + 1 >= len(lx.text):
                raise lx.error("dangling escape in string")
            nxt = lx.text[lx.pos + 1]
            if nxt not in ('"', "'", "\\"):
                raise lx.error(f"unsupported escape \\{nxt}", at=lx.pos)
            out.append(nxt)
            lx.pos += 2
            continue
        if c == quote:
            lx.pos += 1
            return "".join(out)
        out.append(c)
        lx.pos += 1
    raise lx.error("unterminated string", at=opened_at)


# --- printing ----------------------------------------------------------------

_PRECEDENCE = {"or": 1, "and": 2, "cmp": 3, "not": 4, "atom": 5}


def print_guard(expr: GuardExpr) -> str:
    """Canonical text form; parse_guard(print_guard(e)) == e."""
    return _print(expr)


def _prec(expr: GuardExpr) -> int:
    if isinstance(expr, Bin):
        return _PRECEDENCE[expr.op]
    if isinstance(expr, Cmp):
        return _PRECEDENCE["cmp"]
    if isinstance(expr, Not):
        return _PRECEDENCE["not"]
    return _PRECEDENCE["atom"]


def _print(expr: GuardExpr) -> str:
    if isinstance(expr, Lit):
        v = expr.value
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, (int, float)):
            return repr(v)
        escaped = v.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(expr, Path):
        return f"{expr.obj}.{expr.key}"
    if isinstance(expr, Not):
        return "!" + _wrap(expr.operand, _PRECEDENCE["not"], strict=False)
    if isinstance(expr, Cmp):
        # comparisons do not chain, so comparison operands always need parens
        left = _wrap(expr.left, _PRECEDENCE["cmp"], strict=True)
        right = _wrap(expr.right, _PRECEDENCE["cmp"], strict=True)
        return f"{left} {expr.op} {right}"
    if isinstance(expr, Bin):
        symbol = "&&" if expr.op == "and" else "||"
        left = _wrap(expr.left, _prec(expr), strict=False)
        right = _wrap(expr.right, _prec(expr), strict=True)   # left-assoc
        return f"{left} {symbol} {right}"
    raise TypeError(f"not a guard expression: {expr!r}")


def _wrap(expr: GuardExpr, parent_prec: int, strict: bool) -> str:
    text = _print(expr)
    prec = _prec(expr)
    if prec < parent_prec or (strict and prec == parent_prec):
        return f"({text})"
    return text


def guard_to_json(expr: GuardExpr | None) -> str | None:
    return None if expr is None else print_guard(expr)


def guard_from_json(text: str | None) -> GuardExpr | None:
    return None if text is None else parse_guard(text)


# --- evaluation ---------------------------------------------------------------

# name -> (cid, metadata map); only metadata is readable by guards
DataContext = Mapping[str, tuple[str, Mapping[str, Any]]]


def eval_guard(expr: GuardExpr, ctx: DataContext) -> bool:
    result = _eval(expr, ctx)
    if not isinstance(result, bool):
        raise TypeMismatch(f"guard evaluated to non-boolean {result!r}")
    return result


def _eval(expr: GuardExpr, ctx: DataContext) -> Any:
    if isinstance(expr, Lit):
        return expr.value
    if isinstance(expr, Path):
        if expr.obj not in ctx:
            raise MissingField(f"no data object {expr.obj!r} in context")
        _, metadata = ctx[expr.obj]
        if expr.key not in metadata:
            raise MissingField(f"data object {expr.obj!r} has no metadata key {expr.key!r}")
        return metadata[expr.key]
    if isinstance(expr, Not):
        value = _eval(expr.operand, ctx)
        if not isinstance(value, bool):
            raise TypeMismatch(f"'!' applied to non-boolean {value!r}")
        return not value
    if isinstance(expr, Bin):
        left = _eval(expr.left, ctx)
        if not isinstance(left, bool):
            raise TypeMismatch(f"'{expr.op}' applied to non-boolean {left!r}")
        if expr.op == "and" and not left:
            return False
        if expr.op == "or" and left:
            return True
        right = _eval(expr.right, ctx)
        if not isinstance(right, bool):
            raise TypeMismatch(f"'{expr.op}' applied to non-boolean {right!r}")
        return right
    if isinstance(expr, Cmp):
        return _compare(expr.op, _eval(expr.left, ctx), _eval(expr.right, ctx))
    raise TypeError(f"not a guard expression: {expr!r}")


def _kind(value: Any) -> str:
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, (int, float)):
        return "number"
    if isinstance(value, str):
        return "string"
    return type(value).__name__


def _compare(op: str, left: Any, right: Any) -> bool:
    lk, rk = _kind(left), _kind(right)
    if lk != rk or lk not in ("boolean", "number", "string"):
        raise TypeMismatch(f"cannot compare {lk} with {rk}")
    if op == "==":
        return left == right
    if op == "!=":
        return left != right
    if lk == "boolean":
        raise TypeMismatch("booleans only support == and !=")
    if op == "<":
        return left < right
    if op == "<=":
        return left <= right
    if op == ">":
        return left > right
    if op == ">=":
        return left >= right
    raise TypeError(f"unknown comparison operator {op!r}")
