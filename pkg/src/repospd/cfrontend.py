"""Error-tolerant lexing and parsing of a C subset.

The parser is total: any token stream yields a tree.  Recognized statement
forms (declarations, assignments, calls, if/else, while, for, return, break,
continue, blocks) are parsed structurally; anything else degrades to an
OpaqueStmt covering its tokens.  One statement per source line is the
canonical granularity; sibling statements that share a line are collapsed
into a single OpaqueStmt.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

KEYWORDS = frozenset(
    """auto break case char const continue default do double else enum extern
    float for goto if inline int long register restrict return short signed
    sizeof static struct switch typedef union unsigned void volatile while""".split()
)

TYPE_KEYWORDS = frozenset(
    """void char short int long float double signed unsigned struct union enum
    const static register volatile extern auto inline restrict""".split()
)

STATEMENT_KINDS = frozenset(
    ["Decl", "ExprStmt", "Assign", "If", "While", "For", "Return", "Break", "Continue", "OpaqueStmt"]
)

ASSIGN_OPS = frozenset(["=", "+=", "-=", "*=", "/=", "%=", "&=", "^=", "|=", "<<=", ">>="])

_OPEN = {"(": ")", "[": "]", "{": "}"}
_CLOSE = {")", "]", "}"}
_MAX_DEPTH = 100


@dataclass(frozen=True)
class Token:
    kind: str  # identifier | keyword | number | string | punctuator | other
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
      (?P<ws>[ \t\r\f\v]+)
    | (?P<newline>\n)
    | (?P<line_comment>//[^\n]*)
    | (?P<block_comment>/\*.*?(?:\*/|\Z))
    | (?P<string>"(?:\\.|[^"\\\n])*"?)
    | (?P<char>'(?:\\.|[^'\\\n])*'?)
    | (?P<number>(?:0[xX][0-9a-fA-F]+|\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+)[uUlLfF]*)
    | (?P<ident>[A-Za-z_]\w*)
    | (?P<punct>>>=|<<=|\.\.\.|->|\+\+|--|<<|>>|<=|>=|==|!=|&&|\|\||\+=|-=|\*=|/=|%=|&=|\^=|\|=|[-+*/%=<>!&|^~?:;,.()\[\]{}])
    | (?P<other>.)
    """,
    re.VERBOSE | re.DOTALL,
)


def tokenize(text: str) -> list[Token]:
    """Lex C source.  Comments vanish; a preprocessor line (including any
    backslash continuations) becomes a single `other` token."""
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    seen_content = False  # non-whitespace emitted on the current line
    n = len(text)
    while pos < n:
        if text[pos] == "#" and not seen_content:
            start, start_line, start_col = pos, line, pos - line_start + 1
            while True:
                nl = text.find("\n", pos)
                if nl == -1:
                    pos = n
                    break
                if text[nl - 1] == "\\" and nl > start:
                    line += 1
                    pos = nl + 1
                    line_start = pos
                    continue
                pos = nl  # newline handled by the main loop
                break
            tokens.append(Token("other", text[start:pos], start_line, start_col))
            seen_content = True
            continue
        m = _TOKEN_RE.match(text, pos)
        group = m.lastgroup
        tok_text = m.group()
        pos = m.end()
        if group == "newline":
            line += 1
            line_start = pos
            seen_content = False
            continue
        if group == "ws":
            continue
        if group in ("line_comment", "block_comment"):
            if "\n" in tok_text:
                line += tok_text.count("\n")
                line_start = m.start() + tok_text.rindex("\n") + 1
                seen_content = False
            continue
        col = m.start() - line_start + 1
        if group == "ident":
            kind = "keyword" if tok_text in KEYWORDS else "identifier"
        elif group in ("string", "char"):
            kind = "string"
        elif group == "number":
            kind = "number"
        elif group == "punct":
            kind = "punctuator"
        else:
            kind = "other"
        tokens.append(Token(kind, tok_text, line, col))
        seen_content = True
        if "\n" in tok_text:  # unterminated string cannot, but keep the lexer honest
            line += tok_text.count("\n")
            line_start = m.start() + tok_text.rindex("\n") + 1
    return tokens


@dataclass
class AstNode:
    id: int
    kind: str
    children: list[int]
    line_span: tuple[int, int]
    file: str
    text: str = ""  # own header text: identifier name, literal text, operator, ...
    tokens: tuple[Token, ...] = ()  # statement header tokens (no nested statements)
    roles: dict[str, int] = field(default_factory=dict)  # e.g. cond/then/orelse/body


@dataclass
class Ast:
    nodes: dict[int, AstNode]
    root: int
    file: str
    warnings: list[str]

    def node(self, nid: int) -> AstNode:
        return self.nodes[nid]

    def children(self, nid: int) -> list[AstNode]:
        return [self.nodes[c] for c in self.nodes[nid].children]


@dataclass(frozen=True)
class FunctionDef:
    name: str
    params: tuple[str, ...]
    body: int  # Block node id
    file: str
    line_span: tuple[int, int]


def _span_of(tokens: list[Token], default: tuple[int, int] = (0, 0)) -> tuple[int, int]:
    if not tokens:
        return default
    return (tokens[0].line, tokens[-1].line)


class _Parser:
    """Single-pass recursive descent over the token list; never raises."""

    def __init__(self, tokens: list[Token], file: str):
        self.toks = tokens
        self.pos = 0
        self.file = file
        self.nodes: dict[int, AstNode] = {}
        self.next_id = 0
        self.warnings: list[str] = []
        self.depth = 0  # block nesting; past _MAX_DEPTH we go opaque

    # -- arena ------------------------------------------------------------
    def make(self, kind, children=(), span=(0, 0), text="", tokens=(), roles=None) -> int:
        nid = self.next_id
        self.next_id += 1
        self.nodes[nid] = AstNode(
            id=nid,
            kind=kind,
            children=list(children),
            line_span=span,
            file=self.file,
            text=text,
            tokens=tuple(tokens),
            roles=roles or {},
        )
        return nid

    # -- token helpers ------------------------------------------------------
    def cur(self) -> Token | None:
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def at(self, text: str) -> bool:
        t = self.cur()
        return t is not None and t.text == text

    def find_matching(self, open_idx: int) -> int:
        """Index of the closer matching toks[open_idx], or len(toks) if none."""
        depth = 0
        want = _OPEN[self.toks[open_idx].text]
        for k in range(open_idx, len(self.toks)):
            t = self.toks[k].text
            if t in _OPEN:
                depth += 1
            elif t in _CLOSE:
                depth -= 1
                if depth == 0 and t == want:
                    return k
                if depth < 0:
                    return len(self.toks)
        return len(self.toks)

    # -- top level ----------------------------------------------------------
    def parse_unit(self) -> Ast:
        children = []
        while self.pos < len(self.toks):
            before = self.pos
            nid = self.parse_top_level()
            if nid is not None:
                children.append(nid)
            if self.pos == before:  # guarantee progress on any input
                self.pos += 1
        span = _span_of(self.toks)
        root = self.make("TranslationUnit", children, span)
        ast = Ast(nodes=self.nodes, root=root, file=self.file, warnings=self.warnings)
        _prune_unreachable(ast)
        return ast

    def parse_top_level(self) -> int | None:
        start = self.pos
        # Scan ahead for the first ';' or '{' at bracket depth 0.
        depth = 0
        k = start
        brace = -1
        while k < len(self.toks):
            t = self.toks[k].text
            if t in ("(", "["):
                depth += 1
            elif t in (")", "]"):
                depth = max(0, depth - 1)
            elif depth == 0 and t == ";":
                break
            elif depth == 0 and t == "{":
                brace = k
                break
            elif depth == 0 and t == "}":
                break
            k += 1

        header = self.toks[start : brace if brace >= 0 else k]
        if brace >= 0 and self._function_name(header) is not None:
            return self.parse_function(header, brace)
        # Not a function: a global declaration, struct/union/enum definition,
        # or other top-level construct; consume as one opaque-ish node.
        end = self._consume_simple_end(start)
        toks = self.toks[start:end]
        self.pos = end
        if not toks:
            return None
        kind = "Decl" if toks[0].text in TYPE_KEYWORDS else "OpaqueStmt"
        return self.make(kind, span=_span_of(toks), text=normalize_tokens(toks), tokens=toks)

    @staticmethod
    def _function_name(header: list[Token]) -> str | None:
        """`<declarator tokens> name ( params )` -> name, else None."""
        if len(header) < 3 or header[-1].text != ")":
            return None
        depth = 0
        open_idx = -1
        for k in range(len(header) - 1, -1, -1):
            t = header[k].text
            if t == ")":
                depth += 1
            elif t == "(":
                depth -= 1
                if depth == 0:
                    open_idx = k
                    break
        if open_idx <= 0:
            return None
        name_tok = header[open_idx - 1]
        if name_tok.kind != "identifier":
            return None
        return name_tok.text

    def parse_function(self, header: list[Token], brace: int) -> int:
        name = self._function_name(header)
        # The param '(' is the one matching the trailing ')'.
        depth = 0
        param_open = -1
        for k in range(len(header) - 1, -1, -1):
            t = header[k].text
            if t == ")":
                depth += 1
            elif t == "(":
                depth -= 1
                if depth == 0:
                    param_open = k
                    break
        param_toks = header[param_open + 1 : -1]
        params = _param_names(param_toks)
        param_list = self.make(
            "ParamList",
            span=_span_of(param_toks, _span_of(header)),
            text=normalize_tokens(param_toks),
            tokens=param_toks,
        )
        self.pos = brace
        body = self.parse_block()
        span = (header[0].line, self.nodes[body].line_span[1])
        return self.make(
            "FunctionDef",
            [param_list, body],
            span,
            text=name,
            tokens=header,
            roles={"params": param_list, "body": body},
        )

    # -- statements -----------------------------------------------------------
    def parse_block(self) -> int:
        open_tok = self.cur()
        if self.depth >= _MAX_DEPTH:
            close = min(self.find_matching(self.pos) + 1, len(self.toks))
            toks = self.toks[self.pos : close]
            self.pos = close
            span = _span_of(toks)
            inner = self.make("OpaqueStmt", span=span, text=normalize_tokens(toks), tokens=toks)
            return self.make("Block", [inner], span)
        self.depth += 1
        try:
            self.pos += 1  # consume '{'
            stmts: list[int] = []
            last = open_tok.line
            while True:
                t = self.cur()
                if t is None:
                    self.warnings.append(
                        f"{self.file}: block at line {open_tok.line} closed at end of file"
                    )
                    break
                if t.text == "}":
                    last = t.line
                    self.pos += 1
                    break
                before = self.pos
                nid = self.parse_statement()
                if nid is not None:
                    stmts.append(nid)
                if self.pos == before:
                    self.pos += 1
            stmts = self._collapse_shared_lines(stmts)
            first = open_tok.line
            if stmts:
                last = max(last, self.nodes[stmts[-1]].line_span[1])
            return self.make("Block", stmts, (first, last))
        finally:
            self.depth -= 1

    def _collapse_shared_lines(self, stmts: list[int]) -> list[int]:
        """Merge runs of sibling statements that share a source line."""
        out: list[int] = []
        run: list[int] = []
        for nid in stmts:
            if run and self.nodes[nid].line_span[0] <= self.nodes[run[-1]].line_span[1]:
                run.append(nid)
                continue
            out.extend(self._flush_run(run))
            run = [nid]
        out.extend(self._flush_run(run))
        return out

    def _flush_run(self, run: list[int]) -> list[int]:
        if len(run) <= 1:
            return run
        toks: list[Token] = []
        for nid in run:
            toks.extend(self._all_tokens(nid))
        toks.sort(key=lambda t: (t.line, t.col))
        span = (self.nodes[run[0]].line_span[0], self.nodes[run[-1]].line_span[1])
        return [self.make("OpaqueStmt", span=span, text=normalize_tokens(toks), tokens=toks)]

    def _all_tokens(self, nid: int) -> list[Token]:
        node = self.nodes[nid]
        toks = list(node.tokens)
        for c in node.children:
            toks.extend(self._all_tokens(c))
        return toks

    def parse_statement(self) -> int | None:
        try:
            return self._statement()
        except Exception:  # pragma: no cover - totality backstop
            end = self._consume_simple_end(self.pos)
            toks = self.toks[self.pos : end]
            self.pos = end
            if not toks:
                return None
            return self.make("OpaqueStmt", span=_span_of(toks), text=normalize_tokens(toks), tokens=toks)

    def _statement(self) -> int | None:
        t = self.cur()
        if t is None:
            return None
        if t.text == "{":
            return self.parse_block()
        if t.text == ";":
            self.pos += 1
            return None
        if t.text == "if":
            return self.parse_if()
        if t.text == "while":
            return self.parse_while()
        if t.text == "for":
            return self.parse_for()
        if t.text in ("return", "break", "continue"):
            return self.parse_jump(t.text)
        if t.kind == "other" and t.text.startswith("#"):
            self.pos += 1
            return self.make("OpaqueStmt", span=(t.line, t.line), text=t.text, tokens=[t])
        return self.parse_simple()

    def _guard_header(self) -> list[Token] | None:
        """Consume `<kw> ( ... )`; return the header tokens or None on shape mismatch."""
        start = self.pos
        if not (self.pos + 1 < len(self.toks) and self.toks[self.pos + 1].text == "("):
            return None
        close = self.find_matching(self.pos + 1)
        if close >= len(self.toks):
            return None
        header = self.toks[start : close + 1]
        self.pos = close + 1
        return header

    def parse_if(self) -> int:
        start = self.pos
        header = self._guard_header()
        if header is None:
            return self._opaque_from(start)
        cond = _parse_expr(self, header[2:-1])
        then = self.parse_statement()
        children = ([] if cond is None else [cond]) + ([] if then is None else [then])
        roles = {}
        if cond is not None:
            roles["cond"] = cond
        if then is not None:
            roles["then"] = then
        if self.at("else"):
            self.pos += 1
            orelse = self.parse_statement()
            if orelse is not None:
                children.append(orelse)
                roles["orelse"] = orelse
        last = header[-1].line
        if children:
            last = max(last, max(self.nodes[c].line_span[1] for c in children))
        return self.make("If", children, (header[0].line, last), text=normalize_tokens(header), tokens=header, roles=roles)

    def parse_while(self) -> int:
        start = self.pos
        header = self._guard_header()
        if header is None:
            return self._opaque_from(start)
        cond = _parse_expr(self, header[2:-1])
        body = self.parse_statement()
        children = ([] if cond is None else [cond]) + ([] if body is None else [body])
        roles = {}
        if cond is not None:
            roles["cond"] = cond
        if body is not None:
            roles["body"] = body
        last = header[-1].line
        if children:
            last = max(last, max(self.nodes[c].line_span[1] for c in children))
        return self.make("While", children, (header[0].line, last), text=normalize_tokens(header), tokens=header, roles=roles)

    def parse_for(self) -> int:
        start = self.pos
        header = self._guard_header()
        if header is None:
            return self._opaque_from(start)
        inner = header[2:-1]
        segments = split_top(inner, ";")
        children = []
        roles = {}
        if len(segments) == 3:
            for role, seg in zip(("init", "cond", "post"), segments):
                expr = _parse_expr(self, strip_decl_prefix(seg)[1])
                if expr is not None:
                    children.append(expr)
                    roles[role] = expr
        body = self.parse_statement()
        if body is not None:
            children.append(body)
            roles["body"] = body
        last = header[-1].line
        if children:
            last = max(last, max(self.nodes[c].line_span[1] for c in children))
        return self.make("For", children, (header[0].line, last), text=normalize_tokens(header), tokens=header, roles=roles)

    def parse_jump(self, kw: str) -> int:
        start = self.pos
        end = self._consume_simple_end(start)
        toks = self.toks[start:end]
        self.pos = end
        kind = {"return": "Return", "break": "Break", "continue": "Continue"}[kw]
        children = []
        if kind == "Return" and len(toks) > 1:
            inner = toks[1:-1] if toks[-1].text == ";" else toks[1:]
            expr = _parse_expr(self, inner)
            if expr is not None:
                children.append(expr)
        return self.make(kind, children, _span_of(toks), text=normalize_tokens(toks), tokens=toks)

    def parse_simple(self) -> int:
        start = self.pos
        end = self._consume_simple_end(start)
        toks = self.toks[start:end]
        self.pos = end
        if not toks or (len(toks) == 1 and toks[0].text == ";"):
            return None
        span = _span_of(toks)
        body = toks[:-1] if toks[-1].text == ";" else toks

        if toks[0].text in TYPE_KEYWORDS:
            children = []
            for seg in declarators(body):
                split = split_assign(seg)
                if split is not None:
                    init = _parse_expr(self, split[2])
                    if init is not None:
                        children.append(init)
            return self.make("Decl", children, span, text=normalize_tokens(toks), tokens=toks)

        split = split_assign(body)
        if split is not None:
            lhs_toks, op, rhs_toks = split
            lhs = _parse_expr(self, lhs_toks)
            rhs = _parse_expr(self, rhs_toks)
            children = [c for c in (lhs, rhs) if c is not None]
            roles = {}
            if lhs is not None:
                roles["target"] = lhs
            if rhs is not None:
                roles["value"] = rhs
            return self.make("Assign", children, span, text=normalize_tokens(toks), tokens=toks, roles=roles)

        expr = _parse_expr(self, body)
        if expr is not None:
            return self.make("ExprStmt", [expr], span, text=normalize_tokens(toks), tokens=toks)
        return self.make("OpaqueStmt", span=span, text=normalize_tokens(toks), tokens=toks)

    def _opaque_from(self, start: int) -> int:
        if self.pos <= start:
            self.pos = start + 1
        end = self._consume_simple_end(self.pos)
        toks = self.toks[start:end]
        self.pos = end
        return self.make("OpaqueStmt", span=_span_of(toks), text=normalize_tokens(toks), tokens=toks)

    def _consume_simple_end(self, start: int) -> int:
        """End index (exclusive) of a simple statement starting at `start`.

        Stops after a ';' at depth 0, after a balanced '{...}' group (except
        for do-while, which continues to the trailing ';'), or before an
        unmatched '}'.
        """
        k = start
        depth = 0
        is_do = k < len(self.toks) and self.toks[k].text == "do"
        while k < len(self.toks):
            t = self.toks[k].text
            if t in _OPEN:
                depth += 1
            elif t in _CLOSE:
                if depth == 0:
                    return k  # unmatched closer: enclosing block ends here
                depth -= 1
                if t == "}" and depth == 0:
                    if is_do and k + 1 < len(self.toks) and self.toks[k + 1].text == "while":
                        k += 1
                        continue
                    return k + 1
            elif t == ";" and depth == 0:
                return k + 1
            k += 1
        return k


# -- small token utilities ----------------------------------------------------


def normalize_tokens(tokens) -> str:
    return " ".join(t.text for t in tokens)


def split_top(tokens: list[Token], sep: str) -> list[list[Token]]:
    out: list[list[Token]] = [[]]
    depth = 0
    for t in tokens:
        if t.text in _OPEN:
            depth += 1
        elif t.text in _CLOSE:
            depth = max(0, depth - 1)
        if depth == 0 and t.text == sep:
            out.append([])
        else:
            out[-1].append(t)
    return out


def strip_decl_prefix(tokens: list[Token]) -> tuple[bool, list[Token]]:
    """Drop leading type keywords (plus a struct/union/enum tag); report if any."""
    k = 0
    had = False
    while k < len(tokens) and tokens[k].text in TYPE_KEYWORDS:
        if tokens[k].text in ("struct", "union", "enum") and k + 1 < len(tokens):
            k += 1
        k += 1
        had = True
    return had, tokens[k:]


def declarators(body: list[Token]) -> list[list[Token]]:
    _, rest = strip_decl_prefix(body)
    return [seg for seg in split_top(rest, ",") if seg]


def split_assign(tokens: list[Token]) -> tuple[list[Token], str, list[Token]] | None:
    """Split at the leftmost top-level assignment operator, if any."""
    depth = 0
    for k, t in enumerate(tokens):
        if t.text in _OPEN:
            depth += 1
        elif t.text in _CLOSE:
            depth = max(0, depth - 1)
        elif depth == 0 and t.text in ASSIGN_OPS:
            return tokens[:k], t.text, tokens[k + 1 :]
    return None


def _param_names(tokens: list[Token]) -> tuple[str, ...]:
    names = []
    for seg in split_top(tokens, ","):
        idents = [t.text for t in seg if t.kind == "identifier"]
        if idents:
            names.append(idents[-1])
    return tuple(names)


# -- expression parsing ---------------------------------------------------------

_BINARY_LEVELS = [
    ["||"],
    ["&&"],
    ["|"],
    ["^"],
    ["&"],
    ["==", "!="],
    ["<", ">", "<=", ">="],
    ["<<", ">>"],
    ["+", "-"],
    ["*", "/", "%"],
]
_UNARY_OPS = frozenset(["!", "~", "-", "+", "*", "&", "++", "--"])


class _ExprFail(Exception):
    pass


class _ExprParser:
    def __init__(self, parser: _Parser, tokens: list[Token]):
        self.p = parser
        self.toks = tokens
        self.k = 0

    def peek(self) -> Token | None:
        return self.toks[self.k] if self.k < len(self.toks) else None

    def take(self) -> Token:
        if self.k >= len(self.toks):
            raise _ExprFail()
        t = self.toks[self.k]
        self.k += 1
        return t

    def parse(self) -> int:
        nid = self.binary(0)
        if self.k != len(self.toks):
            raise _ExprFail()
        return nid

    def binary(self, level: int) -> int:
        if level >= len(_BINARY_LEVELS):
            return self.unary()
        ops = _BINARY_LEVELS[level]
        left = self.binary(level + 1)
        while True:
            t = self.peek()
            if t is None or t.text not in ops:
                return left
            self.take()
            right = self.binary(level + 1)
            span = (self.p.nodes[left].line_span[0], self.p.nodes[right].line_span[1])
            left = self.p.make("BinOp", [left, right], span, text=t.text)

    def unary(self) -> int:
        t = self.peek()
        if t is not None and t.text in _UNARY_OPS:
            self.take()
            operand = self.unary()
            span = (t.line, self.p.nodes[operand].line_span[1])
            return self.p.make("UnaryOp", [operand], span, text=t.text)
        return self.postfix()

    def postfix(self) -> int:
        node = self.primary()
        while True:
            t = self.peek()
            if t is None:
                return node
            if t.text == "(":
                close = self._matching(self.k)
                args = split_top(self.toks[self.k + 1 : close], ",")
                arg_ids = []
                for seg in args:
                    if seg:
                        arg_ids.append(_ExprParser(self.p, seg).parse())
                callee = self.p.nodes[node].text if self.p.nodes[node].kind == "Ident" else ""
                span = (self.p.nodes[node].line_span[0], self.toks[close].line)
                node = self.p.make("Call", [node] + arg_ids, span, text=callee)
                self.k = close + 1
            elif t.text == "[":
                close = self._matching(self.k)
                idx = _ExprParser(self.p, self.toks[self.k + 1 : close]).parse()
                span = (self.p.nodes[node].line_span[0], self.toks[close].line)
                node = self.p.make("BinOp", [node, idx], span, text="[]")
                self.k = close + 1
            elif t.text in (".", "->"):
                self.take()
                fld = self.take()
                if fld.kind != "identifier":
                    raise _ExprFail()
                fld_id = self.p.make("Ident", span=(fld.line, fld.line), text=fld.text)
                span = (self.p.nodes[node].line_span[0], fld.line)
                node = self.p.make("BinOp", [node, fld_id], span, text=t.text)
            elif t.text in ("++", "--"):
                self.take()
                span = (self.p.nodes[node].line_span[0], t.line)
                node = self.p.make("UnaryOp", [node], span, text=t.text)
            else:
                return node

    def primary(self) -> int:
        t = self.take()
        if t.kind == "identifier":
            return self.p.make("Ident", span=(t.line, t.line), text=t.text)
        if t.kind in ("number", "string"):
            return self.p.make("Literal", span=(t.line, t.line), text=t.text)
        if t.text == "(":
            close = self._matching(self.k - 1)
            inner = _ExprParser(self.p, self.toks[self.k : close]).parse()
            self.k = close + 1
            return inner
        raise _ExprFail()

    def _matching(self, open_idx: int) -> int:
        depth = 0
        want = _OPEN[self.toks[open_idx].text]
        for k in range(open_idx, len(self.toks)):
            txt = self.toks[k].text
            if txt in _OPEN:
                depth += 1
            elif txt in _CLOSE:
                depth -= 1
                if depth == 0 and txt == want:
                    return k
                if depth < 0:
                    break
        raise _ExprFail()


def _parse_expr(parser: _Parser, tokens: list[Token]) -> int | None:
    """Best-effort expression parse; None means the caller flattens."""
    if not tokens:
        return None
    marker = parser.next_id
    try:
        return _ExprParser(parser, list(tokens)).parse()
    except _ExprFail:
        for nid in range(marker, parser.next_id):
            parser.nodes.pop(nid, None)
        parser.next_id = marker
        return None


def _prune_unreachable(ast: Ast) -> None:
    keep = set()
    stack = [ast.root]
    while stack:
        nid = stack.pop()
        if nid in keep:
            continue
        keep.add(nid)
        stack.extend(ast.nodes[nid].children)
    ast.nodes = {nid: n for nid, n in ast.nodes.items() if nid in keep}


# -- public API ---------------------------------------------------------------


def parse_unit(tokens: list[Token], file: str = "<mem>") -> Ast:
    """Parse a token list into a TranslationUnit tree.  Total: never raises."""
    return _Parser(tokens, file).parse_unit()


def parse_text(text: str, file: str = "<mem>") -> Ast:
    return parse_unit(tokenize(text), file)


def collect_functions(ast: Ast) -> list[FunctionDef]:
    """All top-level functions with bodies, in source order."""
    out = []
    for nid in ast.nodes[ast.root].children:
        node = ast.nodes[nid]
        if node.kind != "FunctionDef":
            continue
        params = _param_names(list(ast.nodes[node.roles["params"]].tokens))
        out.append(
            FunctionDef(
                name=node.text,
                params=params,
                body=node.roles["body"],
                file=ast.file,
                line_span=node.line_span,
            )
        )
    return out
