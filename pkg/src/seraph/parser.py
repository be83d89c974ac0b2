"""Recursive-descent parser for Seraph queries and the Cypher subset they embed.

Tokens are produced on demand so that the parser can switch to raw reading
for stream URIs and datetimes, which are taken verbatim up to whitespace.
Seraph keywords are case-sensitive; Cypher keywords are not.
"""

from __future__ import annotations

import re
from typing import NamedTuple, Optional

from . import ast
from .ast import Direction
from .errors import SemanticError, SeraphSyntaxError, UnsupportedFeatureError
from .timeutil import TimeFormatError, parse_datetime, parse_duration
from .values import INT64_MAX, INT64_MIN

__all__ = ["parse_seraph", "parse_cypher_subset", "parse_duration", "parse_datetime"]


class Token(NamedTuple):
    kind: str  # WORD, QWORD (backquoted), INT, FLOAT, STRING, PUNCT, EOF
    text: str
    value: object
    line: int
    col: int
    pos: int


_PUNCT2 = ("<=", ">=", "<>", "..")
_PUNCT1 = set("()[]{},.:|*=<>+-/%$;")
_WORD = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUMBER = re.compile(r"\d+(?:\.\d+)?(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+")
_ESCAPES = {"\\": "\\", "'": "'", '"': '"', "n": "\n", "t": "\t", "r": "\r", "b": "\b", "f": "\f"}

# Cypher words that can never name a variable (compared upper-cased)
RESERVED = frozenset(
    """MATCH OPTIONAL WHERE RETURN WITH AS AND OR XOR NOT DISTINCT TRUE FALSE NULL IS
    UNION UNWIND CREATE MERGE DELETE DETACH SET REMOVE ORDER SKIP LIMIT""".split()
)
# Seraph words that end the embedded query; exact case
_INNER_TERMINATORS = ("CONSTRUCT", "EMIT")

_UNSUPPORTED_CLAUSES = {
    "OPTIONAL": "OPTIONAL MATCH", "UNION": "UNION", "UNWIND": "UNWIND", "MERGE": "MERGE",
    "DELETE": "DELETE", "DETACH": "DETACH DELETE", "SET": "SET", "REMOVE": "REMOVE",
    "ORDER": "ORDER BY", "SKIP": "SKIP", "LIMIT": "LIMIT", "CASE": "CASE", "CALL": "CALL",
    "FOREACH": "FOREACH", "LOAD": "LOAD CSV", "IN": "IN",
    "STARTS": "STARTS WITH", "ENDS": "ENDS WITH", "CONTAINS": "CONTAINS",
}
# words that may legitimately precede '(' without being a function call
_PAREN_KEYWORDS = frozenset("MATCH WHERE WITH RETURN CREATE AND OR XOR NOT DISTINCT COUNT".split())


class Lexer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def _advance(self, n: int) -> None:
        chunk = self.text[self.pos:self.pos + n]
        nl = chunk.count("\n")
        if nl:
            self.line += nl
            self.col = n - chunk.rfind("\n")
        else:
            self.col += n
        self.pos += n

    def error(self, msg: str, line=None, col=None):
        return SeraphSyntaxError(msg, line or self.line, col or self.col)

    def skip_space(self) -> None:
        text = self.text
        while self.pos < len(text):
            c = text[self.pos]
            if c in " \t\r\n\f":
                self._advance(1)
            elif text.startswith("//", self.pos):
                end = text.find("\n", self.pos)
                self._advance((len(text) if end < 0 else end) - self.pos)
            elif text.startswith("/*", self.pos):
                end = text.find("*/", self.pos + 2)
                if end < 0:
                    raise self.error("unterminated comment")
                self._advance(end + 2 - self.pos)
            else:
                break

    def next_token(self) -> Token:
        self.skip_space()
        text, pos, line, col = self.text, self.pos, self.line, self.col
        if pos >= len(text):
            return Token("EOF", "", None, line, col, pos)
        c = text[pos]
        m = _WORD.match(text, pos)
        if m:
            self._advance(m.end() - pos)
            return Token("WORD", m.group(), m.group(), line, col, pos)
        if c.isdigit():
            m = _NUMBER.match(text, pos)
            s = m.group()
            self._advance(len(s))
            if "." in s or "e" in s or "E" in s:
                return Token("FLOAT", s, float(s), line, col, pos)
            return Token("INT", s, int(s), line, col, pos)
        if c in "'\"":
            return self._string(c, line, col, pos)
        if c == "`":
            end = text.find("`", pos + 1)
            if end < 0:
                raise self.error("unterminated quoted name")
            name = text[pos + 1:end]
            self._advance(end + 1 - pos)
            return Token("QWORD", name, name, line, col, pos)
        for p in _PUNCT2:
            if text.startswith(p, pos):
                self._advance(2)
                return Token("PUNCT", p, p, line, col, pos)
        if c in _PUNCT1:
            self._advance(1)
            return Token("PUNCT", c, c, line, col, pos)
        raise self.error(f"unexpected character {c!r}")

    def _string(self, quote: str, line: int, col: int, pos: int) -> Token:
        text = self.text
        i = pos + 1
        out = []
        while True:
            if i >= len(text):
                raise self.error("unterminated string literal", line, col)
            c = text[i]
            if c == quote:
                break
            if c == "\\":
                nxt = text[i + 1:i + 2]
                if nxt in _ESCAPES:
                    out.append(_ESCAPES[nxt])
                    i += 2
                    continue
                if nxt == "u" and re.fullmatch(r"[0-9a-fA-F]{4}", text[i + 2:i + 6]):
                    out.append(chr(int(text[i + 2:i + 6], 16)))
                    i += 6
                    continue
                raise self.error(f"bad escape sequence \\{nxt}", line, col)
            out.append(c)
            i += 1
        self._advance(i + 1 - pos)
        s = "".join(out)
        return Token("STRING", text[pos:i + 1], s, line, col, pos)

    def read_raw(self) -> Token:
        """Everything up to the next whitespace, verbatim."""
        self.skip_space()
        line, col, pos = self.line, self.col, self.pos
        m = re.compile(r"\S+").match(self.text, pos)
        if not m:
            return Token("EOF", "", None, line, col, pos)
        self._advance(m.end() - pos)
        return Token("RAW", m.group(), m.group(), line, col, pos)


def _upper(tok: Token) -> str:
    return tok.text.upper() if tok.kind == "WORD" else ""


def check_supported(text: str) -> None:
    """Reject constructs outside the subset before grammar parsing.

    Running this first means an unsupported construct is reported by name
    even when it would also upset the grammar somewhere else.
    """
    lx = Lexer(text)
    prev: Optional[Token] = None
    toks: list[Token] = []
    try:
        while True:
            if prev is not None and prev.kind == "WORD" and prev.text in ("STREAM", "INTO"):
                tok = lx.read_raw()
            else:
                tok = lx.next_token()
            toks.append(tok)
            if tok.kind == "EOF":
                break
            prev = tok
    except SeraphSyntaxError:
        pass  # the real parse will report it
    for i, tok in enumerate(toks):
        if tok.kind != "WORD":
            continue
        before = toks[i - 1] if i else None
        after = toks[i + 1] if i + 1 < len(toks) else None
        if before is not None and before.kind == "PUNCT" and before.text in (":", ".", "|"):
            continue  # label, type or property key
        if after is not None and after.kind == "PUNCT" and after.text == ":" and before is not None \
                and before.kind == "PUNCT" and before.text in ("{", ","):
            continue  # map key
        up = tok.text.upper()
        if _variable_position(before, after):
            continue
        if up in _UNSUPPORTED_CLAUSES:
            if up == "OPTIONAL" and not (after and _upper(after) == "MATCH"):
                continue
            raise UnsupportedFeatureError(_UNSUPPORTED_CLAUSES[up], tok.line, tok.col)
        if after is not None and after.kind == "PUNCT" and after.text == "(" \
                and up not in _PAREN_KEYWORDS and tok.text not in _INNER_TERMINATORS:
            raise UnsupportedFeatureError(tok.text, tok.line, tok.col)


def _variable_position(before: Optional[Token], after: Optional[Token]) -> bool:
    """True when a word can only be a variable, e.g. ``(call:Event)`` or ``RETURN call``."""
    if before is not None and before.kind == "PUNCT" and before.text == "(":
        return after is None or after.kind != "PUNCT" or after.text != "("
    if after is None or after.kind == "EOF":
        return True
    if after.kind == "PUNCT":
        return after.text in (":", ".", ")", ",", "=", "}", "]")
    return after.kind == "WORD" and after.text.upper() == "AS"


class Parser:
    def __init__(self, text: str):
        self.lexer = Lexer(text)
        self.buf: list[Token] = []
        self.last: Optional[Token] = None

    # -- token plumbing

    def peek(self, k: int = 0) -> Token:
        while len(self.buf) <= k:
            self.buf.append(self.lexer.next_token())
        return self.buf[k]

    def advance(self) -> Token:
        tok = self.peek()
        self.buf.pop(0)
        self.last = tok
        return tok

    def raw(self, what: str) -> Token:
        assert not self.buf, "raw read with pending lookahead"
        tok = self.lexer.read_raw()
        if tok.kind == "EOF":
            raise self.error(f"expected {what}", tok)
        self.last = tok
        return tok

    def error(self, msg: str, tok: Optional[Token] = None) -> SeraphSyntaxError:
        tok = tok or self.peek()
        return SeraphSyntaxError(msg, tok.line, tok.col)

    def describe(self, tok: Token) -> str:
        return "end of input" if tok.kind == "EOF" else repr(tok.text)

    def at_punct(self, p: str, k: int = 0) -> bool:
        tok = self.peek(k)
        return tok.kind == "PUNCT" and tok.text == p

    def accept_punct(self, p: str) -> bool:
        if self.at_punct(p):
            self.advance()
            return True
        return False

    def expect_punct(self, p: str) -> Token:
        if not self.at_punct(p):
            raise self.error(f"expected {p!r}, found {self.describe(self.peek())}")
        return self.advance()

    def at_kw(self, word: str, k: int = 0) -> bool:
        """Case-insensitive Cypher keyword."""
        tok = self.peek(k)
        return tok.kind == "WORD" and tok.text.upper() == word

    def accept_kw(self, word: str) -> bool:
        if self.at_kw(word):
            self.advance()
            return True
        return False

    def expect_kw(self, word: str) -> Token:
        if not self.at_kw(word):
            raise self.error(f"expected {word}, found {self.describe(self.peek())}")
        return self.advance()

    def at_exact(self, word: str, k: int = 0) -> bool:
        """Case-sensitive Seraph keyword."""
        tok = self.peek(k)
        return tok.kind == "WORD" and tok.text == word

    def expect_exact(self, *words: str) -> Token:
        tok = self.peek()
        if tok.kind == "WORD" and tok.text in words:
            return self.advance()
        raise self.error(f"expected {' or '.join(words)}, found {self.describe(tok)}")

    def name(self, what: str = "name") -> str:
        """Label, type or property key: any word."""
        tok = self.peek()
        if tok.kind in ("WORD", "QWORD"):
            self.advance()
            return tok.text
        raise self.error(f"expected {what}, found {self.describe(tok)}")

    def is_variable_token(self, tok: Token) -> bool:
        if tok.kind == "QWORD":
            return True
        return tok.kind == "WORD" and tok.text.upper() not in RESERVED and tok.text not in _INNER_TERMINATORS

    def variable(self) -> str:
        tok = self.peek()
        if self.is_variable_token(tok):
            self.advance()
            return tok.text
        raise self.error(f"expected a variable, found {self.describe(tok)}")

    # -- Seraph wrapper

    def seraph_query(self) -> ast.SeraphQuery:
        self.expect_exact("REGISTER")
        self.expect_exact("QUERY")
        qid = self.variable()
        braced = self.accept_punct("{")
        self.expect_exact("FROM")
        self.expect_exact("STREAM")
        source = self.raw("a stream URI").text
        self.expect_exact("STARTING")
        self.expect_exact("FROM")
        start = self.time_instant()
        self.expect_exact("WITH")
        self.expect_exact("WINDOW")
        self.expect_exact("RANGE")
        window = self.range_spec(ast.TimeWindow, ast.EventWindow)
        inner = self.cypher_query(embedded=True)
        construct = None
        if self.at_exact("CONSTRUCT"):
            self.advance()
            self.expect_exact("CREATE")
            construct = ast.ConstructSpec(self.pattern_tuple())
            self.expect_kw("RETURN")
            self.expect_exact("GRAPH")
        self.expect_exact("EMIT")
        emit = self.emit_operator()
        self.expect_exact("EVERY")
        every = self.range_spec(ast.TimeCadence, ast.EventCadence)
        self.expect_exact("INTO")
        sink = self.raw("a destination URI").text
        # the opening brace is optional; a lone closing brace is tolerated
        if braced:
            self.expect_punct("}")
        else:
            self.accept_punct("}")
        if self.peek().kind != "EOF":
            raise self.error(f"unexpected {self.describe(self.peek())} after query")
        return ast.SeraphQuery(
            id=qid, source=source, start=start, window=window, inner=inner,
            emit=emit, every=every, sink=sink, construct=construct,
        )

    def time_instant(self):
        tok = self.raw("Earliest, Latest or an ISO-8601 datetime")
        if tok.text in ("Earliest", "EARLIEST"):
            return ast.StartKind.EARLIEST
        if tok.text in ("Latest", "LATEST"):
            return ast.StartKind.LATEST
        try:
            return parse_datetime(tok.text)
        except TimeFormatError as e:
            raise self.error(str(e), tok) from None

    def range_spec(self, time_cls, event_cls):
        tok = self.raw("a duration or event count")
        if tok.text.isdigit():
            n = int(tok.text)
            unit = self.expect_exact("Events", "EVENTS", "Event", "EVENT")
            if unit.text.upper() == "EVENT" and n != 1:
                raise self.error(f"'{n} {unit.text}' must be written '{n} Events'", tok)
            if n < 1:
                raise self.error("event count must be at least 1", tok)
            return event_cls(n)
        try:
            return time_cls(parse_duration(tok.text))
        except TimeFormatError as e:
            raise self.error(str(e), tok) from None

    def emit_operator(self) -> ast.EmitOperator:
        tok = self.peek()
        if self.at_exact("SNAPSHOT"):
            self.advance()
            return ast.EmitOperator.SNAPSHOT
        if self.at_exact("ON"):
            self.advance()
            if self.at_exact("ENTERING"):
                self.advance()
                return ast.EmitOperator.ON_ENTERING
            if self.at_exact("EXIT"):
                self.advance()
                return ast.EmitOperator.ON_EXIT
        raise self.error("unknown emit operator; expected SNAPSHOT, ON ENTERING or ON EXIT", tok)

    # -- Cypher

    def cypher_query(self, embedded: bool = False) -> ast.CypherQuery:
        clauses = []
        while True:
            tok = self.peek()
            if self.at_kw("MATCH"):
                self.advance()
                patterns = self.pattern_tuple()
                where = self.expression() if self.accept_kw("WHERE") else None
                clauses.append(ast.Match(patterns, where))
            elif self.at_kw("WITH"):
                self.advance()
                proj = self.projection()
                where = self.expression() if self.accept_kw("WHERE") else None
                clauses.append(ast.With(proj, where))
            elif self.at_kw("RETURN"):
                self.advance()
                ret = self.projection()
                break
            elif embedded and self.at_exact("CONSTRUCT") and clauses:
                ret = ast.Projection(star=True)  # bindings flow into CONSTRUCT
                break
            elif tok.kind == "WORD" and tok.text.upper() in _UNSUPPORTED_CLAUSES:
                raise UnsupportedFeatureError(_UNSUPPORTED_CLAUSES[tok.text.upper()], tok.line, tok.col)
            elif self.at_kw("CREATE"):
                raise UnsupportedFeatureError("CREATE outside CONSTRUCT", tok.line, tok.col)
            else:
                raise self.error(f"expected MATCH, WITH or RETURN, found {self.describe(tok)}")
        tok = self.peek()
        if tok.kind == "WORD" and tok.text.upper() in _UNSUPPORTED_CLAUSES:
            raise UnsupportedFeatureError(_UNSUPPORTED_CLAUSES[tok.text.upper()], tok.line, tok.col)
        if not embedded and tok.kind != "EOF":
            raise self.error(f"unexpected {self.describe(tok)} after RETURN")
        return ast.CypherQuery(tuple(clauses), ret)

    def projection(self) -> ast.Projection:
        distinct = self.accept_kw("DISTINCT")
        star = False
        items = []
        if self.accept_punct("*"):
            star = True
            if not self.accept_punct(","):
                return ast.Projection((), distinct, True)
        while True:
            expr = self.expression()
            alias = self.variable() if self.accept_kw("AS") else None
            items.append(ast.ReturnItem(expr, alias))
            if not self.accept_punct(","):
                break
        return ast.Projection(tuple(items), distinct, star)

    # -- patterns

    def pattern_tuple(self) -> tuple:
        patterns = [self.pattern()]
        while self.accept_punct(","):
            patterns.append(self.pattern())
        return tuple(patterns)

    def pattern(self) -> ast.Pattern:
        path_var = None
        if self.is_variable_token(self.peek()) and self.at_punct("=", 1):
            path_var = self.variable()
            self.advance()
        nodes = [self.node_pattern()]
        rels = []
        while self.at_punct("-") or (self.at_punct("<") and self.at_punct("-", 1)):
            rels.append(self.rel_pattern())
            nodes.append(self.node_pattern())
        return ast.Pattern(tuple(nodes), tuple(rels), path_var)

    def node_pattern(self) -> ast.NodePattern:
        self.expect_punct("(")
        var = self.variable() if self.is_variable_token(self.peek()) else None
        labels = []
        while self.accept_punct(":"):
            labels.append(self.name("a label"))
        props = self.map_items() if self.at_punct("{") else ()
        self.expect_punct(")")
        return ast.NodePattern(var, tuple(labels), props)

    def rel_pattern(self) -> ast.RelPattern:
        start = self.peek()
        left = self.accept_punct("<")
        self.expect_punct("-")
        var, types, hops, props = None, [], None, ()
        if self.accept_punct("["):
            if self.is_variable_token(self.peek()):
                var = self.variable()
            if self.accept_punct(":"):
                types.append(self.name("a relationship type"))
                while self.accept_punct("|"):
                    self.accept_punct(":")
                    types.append(self.name("a relationship type"))
            if self.at_punct("*"):
                hops = self.hops()
            if self.at_punct("{"):
                props = self.map_items()
            self.expect_punct("]")
        self.expect_punct("-")
        right = self.accept_punct(">")
        if left and right or not (left or right):
            direction = Direction.BOTH
        else:
            direction = Direction.LEFT if left else Direction.RIGHT
        if hops is not None and var is not None:
            raise UnsupportedFeatureError("named variable-length relationship", start.line, start.col)
        return ast.RelPattern(var, tuple(types), direction, props, hops)

    def hops(self) -> tuple:
        star = self.expect_punct("*")
        lo = hi = None
        if self.peek().kind == "INT":
            lo = self.advance().value
            if self.accept_punct(".."):
                hi = self.advance().value if self.peek().kind == "INT" else None
            else:
                hi = lo
        elif self.accept_punct(".."):
            if self.peek().kind != "INT":
                raise self.error("expected an upper bound after '..'")
            hi = self.advance().value
        lo = 1 if lo is None else lo
        if lo < 1:
            raise self.error("variable-length lower bound must be at least 1", star)
        if hi is not None and hi < lo:
            raise self.error(f"variable-length bounds {lo}..{hi} are empty", star)
        return (lo, hi)

    def map_items(self) -> tuple:
        self.expect_punct("{")
        items = []
        seen = set()
        if not self.at_punct("}"):
            while True:
                tok = self.peek()
                key = self.name("a property key")
                if key in seen:
                    raise self.error(f"duplicate key {key!r} in map", tok)
                seen.add(key)
                self.expect_punct(":")
                items.append((key, self.expression()))
                if not self.accept_punct(","):
                    break
        self.expect_punct("}")
        return tuple(items)

    # -- expressions, lowest precedence first

    def expression(self):
        return self.or_expr()

    def or_expr(self):
        left = self.xor_expr()
        while self.accept_kw("OR"):
            left = ast.BoolOp("OR", left, self.xor_expr())
        return left

    def xor_expr(self):
        left = self.and_expr()
        while self.accept_kw("XOR"):
            left = ast.BoolOp("XOR", left, self.and_expr())
        return left

    def and_expr(self):
        left = self.not_expr()
        while self.accept_kw("AND"):
            left = ast.BoolOp("AND", left, self.not_expr())
        return left

    def not_expr(self):
        if self.accept_kw("NOT"):
            return ast.Not(self.not_expr())
        return self.comparison()

    def comparison(self):
        left = self.additive()
        tok = self.peek()
        if tok.kind == "PUNCT" and tok.text in ("=", "<>", "<", "<=", ">", ">="):
            self.advance()
            left = ast.Compare(tok.text, left, self.additive())
        if self.at_kw("IS"):
            self.advance()
            negated = self.accept_kw("NOT")
            self.expect_kw("NULL")
            left = ast.IsNull(left, negated)
        tok = self.peek()
        if tok.kind == "PUNCT" and tok.text in ("=", "<>", "<", "<=", ">", ">="):
            raise self.error("chained comparisons are not supported")
        return left

    def additive(self):
        left = self.multiplicative()
        while self.at_punct("+") or self.at_punct("-"):
            op = self.advance().text
            left = ast.Arith(op, left, self.multiplicative())
        return left

    def multiplicative(self):
        left = self.unary()
        while self.at_punct("*") or self.at_punct("/"):
            op = self.advance().text
            left = ast.Arith(op, left, self.unary())
        return left

    def unary(self):
        if self.at_punct("-"):
            self.advance()
            if self.peek().kind in ("INT", "FLOAT"):
                tok = self.advance()
                return self.postfix(self.number(tok, -tok.value))
            return ast.Neg(self.unary())
        return self.postfix(self.atom())

    def number(self, tok: Token, value) -> ast.Literal:
        if isinstance(value, int) and not INT64_MIN <= value <= INT64_MAX:
            raise self.error("integer literal out of 64-bit range", tok)
        return ast.Literal(value)

    def postfix(self, expr):
        while True:
            if self.at_punct("."):
                self.advance()
                expr = ast.Prop(expr, self.name("a property key"))
            elif self.at_punct(":"):
                labels = []
                while self.accept_punct(":"):
                    labels.append(self.name("a label"))
                expr = ast.HasLabels(expr, tuple(labels))
            else:
                return expr

    def atom(self):
        tok = self.peek()
        if tok.kind in ("INT", "FLOAT"):
            self.advance()
            return self.number(tok, tok.value)
        if tok.kind == "STRING":
            self.advance()
            return ast.Literal(tok.value)
        if tok.kind == "WORD":
            up = tok.text.upper()
            if up == "TRUE":
                self.advance()
                return ast.Literal(True)
            if up == "FALSE":
                self.advance()
                return ast.Literal(False)
            if up == "NULL":
                self.advance()
                return ast.Literal(None)
            if up == "COUNT" and self.at_punct("(", 1):
                self.advance()
                self.advance()
                if self.accept_punct("*"):
                    self.expect_punct(")")
                    return ast.Count(None)
                distinct = self.accept_kw("DISTINCT")
                arg = self.expression()
                self.expect_punct(")")
                return ast.Count(arg, distinct)
            if self.at_punct("(", 1):
                if up in RESERVED:
                    raise self.error(f"unexpected {tok.text}", tok)
                raise UnsupportedFeatureError(tok.text, tok.line, tok.col)
        if self.is_variable_token(tok):
            return ast.Var(self.variable())
        if self.accept_punct("("):
            expr = self.expression()
            self.expect_punct(")")
            return expr
        if self.at_punct("["):
            self.advance()
            items = []
            if not self.at_punct("]"):
                items.append(self.expression())
                while self.accept_punct(","):
                    items.append(self.expression())
            self.expect_punct("]")
            return ast.ListLit(tuple(items))
        if self.at_punct("{"):
            return ast.MapLit(self.map_items())
        if self.at_punct("$"):
            raise UnsupportedFeatureError("query parameters", tok.line, tok.col)
        raise self.error(f"expected an expression, found {self.describe(tok)}")


# -- static checks -----------------------------------------------------------


def _walk(expr):
    yield expr
    for child in _children(expr):
        yield from _walk(child)


def _children(e):
    if isinstance(e, (ast.Prop, ast.HasLabels)):
        return (e.subject,)
    if isinstance(e, (ast.Not, ast.Neg, ast.IsNull)):
        return (e.operand,)
    if isinstance(e, (ast.BoolOp, ast.Compare, ast.Arith)):
        return (e.left, e.right)
    if isinstance(e, ast.ListLit):
        return e.items
    if isinstance(e, ast.MapLit):
        return tuple(v for _, v in e.items)
    if isinstance(e, ast.Count):
        return (e.arg,) if e.arg is not None else ()
    return ()


def contains_aggregate(expr) -> bool:
    return any(isinstance(x, ast.Count) for x in _walk(expr))


def free_variables(expr) -> set:
    return {x.name for x in _walk(expr) if isinstance(x, ast.Var)}


def column_name(item: ast.ReturnItem) -> str:
    from .printer import print_expr

    if item.alias:
        return item.alias
    if isinstance(item.expr, ast.Var):
        return item.expr.name
    return print_expr(item.expr)


def _check_expr(expr, scope: set, where: str, allow_aggregate: bool = False) -> None:
    missing = free_variables(expr) - scope
    if missing:
        raise SemanticError(f"variable {sorted(missing)[0]!r} is not defined ({where})", sorted(missing)[0])
    if not allow_aggregate and contains_aggregate(expr):
        raise SemanticError(f"aggregate function not allowed in {where}", "COUNT")
    if allow_aggregate and not isinstance(expr, ast.Count) and contains_aggregate(expr):
        raise SemanticError("aggregates are only supported as a whole return item", "COUNT")
    if isinstance(expr, ast.Count) and expr.arg is not None and contains_aggregate(expr.arg):
        raise SemanticError("nested aggregates are not allowed", "COUNT")


def projection_columns(proj: ast.Projection, scope: set, where: str) -> list:
    cols = sorted(scope) if proj.star else []
    has_agg = False
    for item in proj.items:
        _check_expr(item.expr, scope, where, allow_aggregate=True)
        has_agg |= isinstance(item.expr, ast.Count)
        if where == "WITH" and item.alias is None and not isinstance(item.expr, ast.Var):
            raise SemanticError("expressions in WITH must be aliased (use AS)", "WITH")
        cols.append(column_name(item))
    if proj.star and has_agg:
        raise SemanticError(f"{where} * cannot be combined with aggregates", where)
    if proj.star and not scope:
        raise SemanticError(f"{where} * needs at least one variable in scope", where)
    if len(set(cols)) != len(cols):
        dup = next(c for c in cols if cols.count(c) > 1)
        raise SemanticError(f"column {dup!r} is projected more than once", dup)
    return cols


def check_pattern_tuple(patterns, scope: set) -> set:
    inner = set(scope)
    for p in patterns:
        inner.update(p.variables())
    for p in patterns:
        maps = [n.props for n in p.nodes] + [r.props for r in p.rels]
        for items in maps:
            for _, e in items:
                _check_expr(e, inner, "pattern property map")
        if p.path_var and p.path_var in scope:
            raise SemanticError(f"path variable {p.path_var!r} is already bound", p.path_var)
    return inner


def check_query(q: ast.CypherQuery) -> list:
    """Validate scoping and aggregate placement; returns the output columns."""
    scope: set = set()
    for clause in q.clauses:
        if isinstance(clause, ast.Match):
            scope = check_pattern_tuple(clause.patterns, scope)
            if clause.where is not None:
                _check_expr(clause.where, scope, "WHERE")
        else:
            cols = projection_columns(clause.projection, scope, "WITH")
            scope = set(cols)
            if clause.where is not None:
                _check_expr(clause.where, scope, "WHERE")
    return projection_columns(q.ret, scope, "RETURN")


def check_construct(spec: ast.ConstructSpec, columns: list) -> None:
    bound = set(columns)
    for p in spec.patterns:
        if p.path_var:
            raise SemanticError("path variables are not allowed in CONSTRUCT", "CONSTRUCT")
        for n in p.nodes:
            if n.var is not None:
                if n.var not in bound:
                    raise SemanticError(f"CONSTRUCT uses {n.var!r}, which the query does not return", n.var)
                if n.labels or n.props:
                    raise SemanticError(f"CONSTRUCT cannot add labels or properties to bound node {n.var!r}", n.var)
            elif not n.labels and not n.props:
                raise SemanticError("anonymous CONSTRUCT nodes need labels or properties", "CONSTRUCT")
            for _, e in n.props:
                if free_variables(e) or contains_aggregate(e):
                    raise SemanticError("CONSTRUCT properties must be literals", "CONSTRUCT")
        for r in p.rels:
            if r.var is not None:
                raise SemanticError("CONSTRUCT relationships cannot be named", "CONSTRUCT")
            if len(r.types) != 1:
                raise SemanticError("each CONSTRUCT relationship needs exactly one type", "CONSTRUCT")
            if r.direction is Direction.BOTH:
                raise SemanticError("CONSTRUCT relationships need a direction", "CONSTRUCT")
            if r.hops is not None:
                raise SemanticError("CONSTRUCT relationships cannot be variable-length", "CONSTRUCT")
            for _, e in r.props:
                if free_variables(e) or contains_aggregate(e):
                    raise SemanticError("CONSTRUCT properties must be literals", "CONSTRUCT")


# -- entry points ------------------------------------------------------------


def _locate(text: str, e: SemanticError) -> SemanticError:
    """Attach the position of the last token spelling ``e.subject``."""
    line, col = 1, 1
    lx = Lexer(text)
    try:
        while True:
            tok = lx.next_token()
            if tok.kind == "EOF":
                break
            if e.subject is not None and tok.kind in ("WORD", "QWORD") and \
                    (tok.text == e.subject or tok.text.upper() == e.subject):
                line, col = tok.line, tok.col
    except SeraphSyntaxError:
        pass
    return SemanticError(e.message, e.subject, line, col)


def parse_cypher_subset(text: str) -> ast.CypherQuery:
    check_supported(text)
    q = Parser(text).cypher_query()
    try:
        check_query(q)
    except SemanticError as e:
        raise _locate(text, e) from None
    return q


def parse_seraph(text: str) -> ast.SeraphQuery:
    check_supported(text)
    q = Parser(text).seraph_query()
    try:
        columns = check_query(q.inner)
        if q.construct is not None:
            check_construct(q.construct, columns)
    except SemanticError as e:
        raise _locate(text, e) from None
    return q
