"""Boolean parity equations that define multi-dimensional modulation formats.

A format is described by a small text DSL: a header giving the format name,
the total number of label bits ``n`` and the number of information bits
``m``, followed by one parity equation per redundant position.  Expressions
are GF(2) arithmetic over the information bits with operators ``!``
(negation), ``&`` (product) and ``^`` (sum), with precedence ``!`` > ``&``
> ``^``.  Lines starting with ``#`` are comments.

Example::

    format toy
    bits 2
    info 1
    parity b2 = b1
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from importlib import resources

import numpy as np

__all__ = [
    "Const", "Var", "Not", "Xor", "And", "BoolExpr",
    "FormatSpec", "FormatParseError",
    "parse_format", "format_to_text", "expr_to_text",
    "eval_expr", "eval_expr_batch", "compute_parity", "compute_parity_batch",
    "is_affine", "expr_op_count", "collect_vars",
    "all_info_words", "load_format", "shipped_format_names",
    "recommended_lrp_count", "random_affine_expr",
]


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class Var:
    index: int  # 1-based information-bit position


@dataclass(frozen=True)
class Not:
    child: "BoolExpr"


@dataclass(frozen=True)
class Xor:
    left: "BoolExpr"
    right: "BoolExpr"


@dataclass(frozen=True)
class And:
    left: "BoolExpr"
    right: "BoolExpr"


BoolExpr = Const | Var | Not | Xor | And


@dataclass(frozen=True)
class FormatSpec:
    """A complete format definition: info bits 1..m, parity bits m+1..n."""

    name: str
    n: int
    m: int
    parity_defs: tuple[tuple[int, BoolExpr], ...]  # (target, expr), ascending target
    provenance: str = "reconstructed"  # "verbatim" | "reconstructed"


class FormatParseError(ValueError):
    """Raised for syntactic or semantic errors in a format definition."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", col {col}" if col is not None else "") + ")"
        super().__init__(message + loc)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def eval_expr(expr: BoolExpr, info_bits, counter=None) -> int:
    """Evaluate a GF(2) expression on one information word.

    ``counter``, when given, gets one ``log()`` tick per operator node
    (Not/Xor/And), matching the static cost from :func:`expr_op_count`.
    """
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Var):
        if not 1 <= expr.index <= len(info_bits):
            raise ValueError(f"bit index b{expr.index} out of range for m={len(info_bits)}")
        return int(info_bits[expr.index - 1])
    if counter is not None:
        counter.log()
    if isinstance(expr, Not):
        return 1 ^ eval_expr(expr.child, info_bits, counter)
    if isinstance(expr, Xor):
        return eval_expr(expr.left, info_bits, counter) ^ eval_expr(expr.right, info_bits, counter)
    if isinstance(expr, And):
        return eval_expr(expr.left, info_bits, counter) & eval_expr(expr.right, info_bits, counter)
    raise TypeError(f"not a BoolExpr node: {expr!r}")


def eval_expr_batch(expr: BoolExpr, bits: np.ndarray) -> np.ndarray:
    """Vectorized :func:`eval_expr` over ``bits`` of shape (..., m)."""
    if isinstance(expr, Const):
        return np.full(bits.shape[:-1], expr.value, dtype=np.uint8)
    if isinstance(expr, Var):
        if not 1 <= expr.index <= bits.shape[-1]:
            raise ValueError(f"bit index b{expr.index} out of range for m={bits.shape[-1]}")
        return bits[..., expr.index - 1]
    if isinstance(expr, Not):
        return eval_expr_batch(expr.child, bits) ^ 1
    if isinstance(expr, Xor):
        return eval_expr_batch(expr.left, bits) ^ eval_expr_batch(expr.right, bits)
    if isinstance(expr, And):
        return eval_expr_batch(expr.left, bits) & eval_expr_batch(expr.right, bits)
    raise TypeError(f"not a BoolExpr node: {expr!r}")


def compute_parity(spec: FormatSpec, info_bits) -> np.ndarray:
    """Extend an m-bit information word to the full n-bit label."""
    info_bits = np.asarray(info_bits, dtype=np.uint8)
    if info_bits.shape != (spec.m,):
        raise ValueError(f"expected {spec.m} information bits, got shape {info_bits.shape}")
    out = np.zeros(spec.n, dtype=np.uint8)
    out[: spec.m] = info_bits
    for target, expr in spec.parity_defs:
        out[target - 1] = eval_expr(expr, info_bits)
    return out


def compute_parity_batch(spec: FormatSpec, bits: np.ndarray) -> np.ndarray:
    """Vectorized :func:`compute_parity`; ``bits`` has shape (..., m)."""
    bits = np.asarray(bits, dtype=np.uint8)
    out = np.zeros(bits.shape[:-1] + (spec.n,), dtype=np.uint8)
    out[..., : spec.m] = bits
    for target, expr in spec.parity_defs:
        out[..., target - 1] = eval_expr_batch(expr, bits)
    return out


def collect_vars(expr: BoolExpr) -> frozenset[int]:
    """Set of 1-based bit indices referenced by an expression."""
    if isinstance(expr, Const):
        return frozenset()
    if isinstance(expr, Var):
        return frozenset((expr.index,))
    if isinstance(expr, Not):
        return collect_vars(expr.child)
    return collect_vars(expr.left) | collect_vars(expr.right)


def all_info_words(m: int) -> np.ndarray:
    """All 2^m information words in lexicographic order, shape (2^m, m)."""
    idx = np.arange(2 ** m, dtype=np.int64)
    return ((idx[:, None] >> np.arange(m - 1, -1, -1)) & 1).astype(np.uint8)


def is_affine(expr: BoolExpr, m: int) -> bool:
    """True iff the expression is affine over GF(2)^m.

    Checked by superposition on the full truth table:
    f(x^y) == f(x)^f(y)^f(0) for all pairs, which is equivalent to the
    triple condition f(x)^f(y)^f(z)^f(x^y^z) == 0.
    """
    if m > 8:
        raise ValueError("affinity test limited to m <= 8")
    table = eval_expr_batch(expr, all_info_words(m))
    idx = np.arange(2 ** m)
    pair = table[idx[:, None] ^ idx[None, :]]
    return bool(np.all(pair == (table[:, None] ^ table[None, :] ^ table[0])))


def expr_op_count(expr: BoolExpr) -> int:
    """Number of logical operator nodes (Not/Xor/And) in the expression."""
    if isinstance(expr, (Const, Var)):
        return 0
    if isinstance(expr, Not):
        return 1 + expr_op_count(expr.child)
    return 1 + expr_op_count(expr.left) + expr_op_count(expr.right)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_WORD_CHARS = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-"


def _tokenize_line(text: str, lineno: int):
    """Split one source line into (kind, value, col) tokens; strips comments."""
    tokens = []
    pos = 0
    while pos < len(text):
        ch = text[pos]
        if ch in " \t\r":
            pos += 1
            continue
        if ch == "#":
            break
        col = pos + 1
        if ch in "()!^&=":
            tokens.append(("sym", ch, col))
            pos += 1
        elif ch.isdigit():
            end = pos
            while end < len(text) and text[end].isdigit():
                end += 1
            tokens.append(("int", text[pos:end], col))
            pos = end
        elif ch.isalpha() or ch == "_":
            end = pos
            while end < len(text) and text[end] in _WORD_CHARS:
                end += 1
            tokens.append(("word", text[pos:end], col))
            pos = end
        else:
            raise FormatParseError(f"unexpected character {ch!r}", lineno, col)
    return tokens


class _ExprParser:
    """Recursive-descent parser for one parity expression."""

    def __init__(self, tokens, lineno, m, n):
        self.tokens = tokens
        self.pos = 0
        self.lineno = lineno
        self.m = m
        self.n = n

    def _peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def _error(self, msg, tok=None):
        col = tok[2] if tok is not None else (self.tokens[-1][2] + 1 if self.tokens else 1)
        raise FormatParseError(msg, self.lineno, col)

    def parse(self) -> BoolExpr:
        node = self._xor()
        if self._peek() is not None:
            self._error(f"unexpected token {self._peek()[1]!r}", self._peek())
        return node

    def _xor(self) -> BoolExpr:
        node = self._and()
        while (tok := self._peek()) is not None and tok[1] == "^":
            self.pos += 1
            node = Xor(node, self._and())
        return node

    def _and(self) -> BoolExpr:
        node = self._unary()
        while (tok := self._peek()) is not None and tok[1] == "&":
            self.pos += 1
            node = And(node, self._unary())
        return node

    def _unary(self) -> BoolExpr:
        tok = self._peek()
        if tok is None:
            self._error("expected a bit, constant, '!' or '('")
        kind, value, col = tok
        if value == "!":
            self.pos += 1
            return Not(self._unary())
        if value == "(":
            self.pos += 1
            node = self._xor()
            closing = self._peek()
            if closing is None or closing[1] != ")":
                self._error("expected ')'", closing or tok)
            self.pos += 1
            return node
        if kind == "int" and value in ("0", "1"):
            self.pos += 1
            return Const(int(value))
        if kind == "word" and value[0] == "b" and value[1:].isdigit():
            idx = int(value[1:])
            if idx < 1 or idx > self.n:
                self._error(f"undefined bit b{idx} (valid range b1..b{self.n})", tok)
            if idx > self.m:
                self._error(f"parity bit b{idx} may not appear in a parity expression", tok)
            self.pos += 1
            return Var(idx)
        self._error(f"expected a bit, constant, '!' or '(', got {value!r}", tok)


def parse_format(text: str) -> FormatSpec:
    """Parse a format-definition document into a :class:`FormatSpec`.

    Raises :class:`FormatParseError` with line/column information on syntax
    errors, references to undefined or parity bits, duplicate or missing
    parity targets.
    """
    lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        toks = _tokenize_line(raw, lineno)
        if toks:
            lines.append((lineno, toks))
    if not lines:
        raise FormatParseError("empty format definition")

    def expect_header(i, keyword):
        if i >= len(lines):
            raise FormatParseError(f"missing '{keyword}' line", lines[-1][0] + 1)
        lineno, toks = lines[i]
        if toks[0][1] != keyword:
            raise FormatParseError(f"expected '{keyword}', got {toks[0][1]!r}", lineno, toks[0][2])
        if len(toks) != 2:
            raise FormatParseError(f"'{keyword}' takes exactly one argument", lineno, toks[0][2])
        return lineno, toks[1]

    lineno, name_tok = expect_header(0, "format")
    if name_tok[0] != "word":
        raise FormatParseError("format name must be an identifier", lineno, name_tok[2])
    name = name_tok[1]

    lineno, n_tok = expect_header(1, "bits")
    if n_tok[0] != "int":
        raise FormatParseError("'bits' takes an integer", lineno, n_tok[2])
    n = int(n_tok[1])

    lineno, m_tok = expect_header(2, "info")
    if m_tok[0] != "int":
        raise FormatParseError("'info' takes an integer", lineno, m_tok[2])
    m = int(m_tok[1])

    if not 2 <= n <= 8:
        raise FormatParseError(f"bits must be in 2..8, got {n}", lineno)
    if not 1 <= m < n:
        raise FormatParseError(f"info must be in 1..bits-1, got {m}", lineno)

    next_i = 3
    provenance = "reconstructed"
    if next_i < len(lines) and lines[next_i][1][0][1] == "provenance":
        lineno, prov_tok = expect_header(next_i, "provenance")
        if prov_tok[1] not in ("verbatim", "reconstructed"):
            raise FormatParseError("provenance must be 'verbatim' or 'reconstructed'", lineno, prov_tok[2])
        provenance = prov_tok[1]
        next_i += 1

    defs: dict[int, BoolExpr] = {}
    for lineno, toks in lines[next_i:]:
        if toks[0][1] != "parity":
            raise FormatParseError(f"expected 'parity', got {toks[0][1]!r}", lineno, toks[0][2])
        if len(toks) < 4 or toks[2][1] != "=":
            raise FormatParseError("parity line must be 'parity bN = <expr>'", lineno, toks[0][2])
        kind, value, col = toks[1]
        if not (kind == "word" and value[0] == "b" and value[1:].isdigit()):
            raise FormatParseError(f"parity target must be a bit, got {value!r}", lineno, col)
        target = int(value[1:])
        if target <= m or target > n:
            raise FormatParseError(
                f"parity target b{target} must be a parity position (b{m + 1}..b{n})", lineno, col)
        if target in defs:
            raise FormatParseError(f"duplicate parity definition for b{target}", lineno, col)
        defs[target] = _ExprParser(toks[3:], lineno, m, n).parse()

    missing = [t for t in range(m + 1, n + 1) if t not in defs]
    if missing:
        raise FormatParseError("missing parity definition for " + ", ".join(f"b{t}" for t in missing))

    return FormatSpec(
        name=name, n=n, m=m,
        parity_defs=tuple(sorted(defs.items())),
        provenance=provenance,
    )


# ---------------------------------------------------------------------------
# Pretty printing
# ---------------------------------------------------------------------------

def expr_to_text(expr: BoolExpr) -> str:
    """Render an expression in DSL syntax; re-parsing it yields an equal AST."""
    return _render(expr, 0.0)


def _render(expr: BoolExpr, ctx: float) -> str:
    # Precedence levels: Xor 0, And 1, unary 2+. Right operands of binary
    # nodes use ctx level+0.5 so right-nested same-level trees keep parens.
    if isinstance(expr, Const):
        return str(expr.value)
    if isinstance(expr, Var):
        return f"b{expr.index}"
    if isinstance(expr, Not):
        return "!" + _render(expr.child, 2.0)
    if isinstance(expr, Xor):
        text = f"{_render(expr.left, 0.0)} ^ {_render(expr.right, 0.5)}"
        return f"({text})" if ctx > 0.0 else text
    if isinstance(expr, And):
        text = f"{_render(expr.left, 1.0)} & {_render(expr.right, 1.5)}"
        return f"({text})" if ctx > 1.0 else text
    raise TypeError(f"not a BoolExpr node: {expr!r}")


def format_to_text(spec: FormatSpec) -> str:
    """Render a FormatSpec as a DSL document (round-trips through parse)."""
    lines = [
        f"format {spec.name}",
        f"bits {spec.n}",
        f"info {spec.m}",
        f"provenance {spec.provenance}",
    ]
    lines += [f"parity b{t} = {expr_to_text(e)}" for t, e in spec.parity_defs]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Shipped format registry
# ---------------------------------------------------------------------------

_SHIPPED = {
    "pb4b8d": "pb4b8d.fmt",
    "pb5b8d": "pb5b8d.fmt",
    "pb6b8d": "pb6b8d.fmt",
    "pa7b8d": "pa7b8d.fmt",
}

# Operating points for the LRP demapper that give near-exhaustive quality
# on each shipped format.
_RECOMMENDED_LRPS = {"pb4b8d": 4, "pb5b8d": 4, "pb6b8d": 4, "pa7b8d": 3}


def shipped_format_names() -> tuple[str, ...]:
    return tuple(_SHIPPED)


def load_format(name_or_path: str) -> FormatSpec:
    """Load a shipped format by name, or parse a definition file by path."""
    key = name_or_path.lower()
    if key in _SHIPPED:
        text = resources.files("sp8d").joinpath("formats", _SHIPPED[key]).read_text("utf-8")
        return parse_format(text)
    with open(name_or_path, "r", encoding="utf-8") as fh:
        return parse_format(fh.read())


def recommended_lrp_count(spec: FormatSpec) -> int:
    """Default LRP count for a format (min(4, m) for unknown formats)."""
    return _RECOMMENDED_LRPS.get(spec.name.lower(), min(4, spec.m))


def random_affine_expr(rng: random.Random, m: int, depth: int = 4) -> BoolExpr:
    """Random expression over Const/Var/Not/Xor only (always affine)."""
    if depth <= 0 or rng.random() < 0.3:
        if rng.random() < 0.2:
            return Const(rng.randint(0, 1))
        return Var(rng.randint(1, m))
    if rng.random() < 0.35:
        return Not(random_affine_expr(rng, m, depth - 1))
    return Xor(random_affine_expr(rng, m, depth - 1), random_affine_expr(rng, m, depth - 1))
