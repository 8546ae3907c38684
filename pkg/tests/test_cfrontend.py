"""Lexer and total-parser tests."""

import random

from hypothesis import given, settings
from hypothesis import strategies as st

from repospd.cfrontend import (
    STATEMENT_KINDS,
    collect_functions,
    parse_text,
    parse_unit,
    tokenize,
)
from repospd.randprog import random_function


def kinds(tokens):
    return [(t.kind, t.text) for t in tokens]


class TestTokenize:
    def test_declaration(self):
        assert kinds(tokenize("int a = 1;")) == [
            ("keyword", "int"),
            ("identifier", "a"),
            ("punctuator", "="),
            ("number", "1"),
            ("punctuator", ";"),
        ]

    def test_comment_elision(self):
        assert kinds(tokenize("/*x*/ y")) == [("identifier", "y")]
        assert kinds(tokenize("a // trailing\nb")) == [("identifier", "a"), ("identifier", "b")]

    def test_preprocessor_line(self):
        toks = tokenize("#include <stdio.h>")
        assert len(toks) == 1
        assert toks[0].kind == "other"
        assert toks[0].text == "#include <stdio.h>"

    def test_preprocessor_continuation(self):
        toks = tokenize("#define ADD(x) \\\n  ((x) + 1)\nint a;")
        assert toks[0].kind == "other"
        assert "((x) + 1)" in toks[0].text
        assert [t.text for t in toks[1:]] == ["int", "a", ";"]

    def test_string_atomic(self):
        toks = tokenize('f("a /* not a comment */ b", \'c\');')
        assert [t.text for t in toks] == ["f", "(", '"a /* not a comment */ b"', ",", "'c'", ")", ";"]

    def test_positions_one_based(self):
        toks = tokenize("a\n  b")
        assert (toks[0].line, toks[0].col) == (1, 1)
        assert (toks[1].line, toks[1].col) == (2, 3)

    def test_multichar_punctuators(self):
        assert [t.text for t in tokenize("a >>= b->c ++")] == ["a", ">>=", "b", "->", "c", "++"]

    @given(st.text(max_size=300))
    @settings(max_examples=200)
    def test_total_on_arbitrary_text(self, text):
        tokenize(text)


class TestParse:
    def test_minimal_function(self):
        ast = parse_text("int f(){return 0;}")
        (fn,) = collect_functions(ast)
        assert fn.name == "f"
        body = ast.node(fn.body)
        assert body.kind == "Block"
        (ret,) = ast.children(body.id)
        assert ret.kind == "Return"
        (lit,) = ast.children(ret.id)
        assert lit.kind == "Literal" and lit.text == "0"

    def test_opaque_fallback(self):
        ast = parse_text('int f(){ asm volatile("nop"); }')
        (fn,) = collect_functions(ast)
        (stmt,) = ast.children(fn.body)
        assert stmt.kind == "OpaqueStmt"

    def test_if_structure_against_hand_built_tree(self):
        # Hand-built expectation: f -> Block[If(cond=Ident x, then=Return x), Return 0]
        ast = parse_text("int f(int x) {\n    if (x)\n        return x;\n    return 0;\n}")
        (fn,) = collect_functions(ast)
        assert fn.params == ("x",)
        if_stmt, ret0 = ast.children(fn.body)
        assert if_stmt.kind == "If" and ret0.kind == "Return"
        cond = ast.node(if_stmt.roles["cond"])
        assert cond.kind == "Ident" and cond.text == "x"
        then = ast.node(if_stmt.roles["then"])
        assert then.kind == "Return"
        (then_val,) = ast.children(then.id)
        assert then_val.kind == "Ident" and then_val.text == "x"
        (ret0_val,) = ast.children(ret0.id)
        assert ret0_val.kind == "Literal" and ret0_val.text == "0"

    def test_else_and_loops(self):
        ast = parse_text(
            "int f(int x) {\n"
            "    while (x > 0) {\n"
            "        x = x - 1;\n"
            "    }\n"
            "    for (x = 0; x < 3; x++) {\n"
            "        sink(x);\n"
            "    }\n"
            "    if (x) {\n"
            "        sink(1);\n"
            "    } else {\n"
            "        sink(2);\n"
            "    }\n"
            "    return x;\n"
            "}"
        )
        (fn,) = collect_functions(ast)
        stmt_kinds = [n.kind for n in ast.children(fn.body)]
        assert stmt_kinds == ["While", "For", "If", "Return"]
        if_stmt = ast.children(fn.body)[2]
        assert "orelse" in if_stmt.roles

    def test_assignment_and_call_statements(self):
        ast = parse_text("int f() {\n    int a = 1;\n    a = a + 2;\n    use(a, 3);\n    return a;\n}")
        (fn,) = collect_functions(ast)
        stmt_kinds = [n.kind for n in ast.children(fn.body)]
        assert stmt_kinds == ["Decl", "Assign", "ExprStmt", "Return"]
        call_stmt = ast.children(fn.body)[2]
        (call,) = ast.children(call_stmt.id)
        assert call.kind == "Call" and call.text == "use"

    def test_same_line_siblings_collapse(self):
        ast = parse_text("int f() {\n    a = 1; b = 2;\n    return a;\n}")
        (fn,) = collect_functions(ast)
        stmt_kinds = [n.kind for n in ast.children(fn.body)]
        assert stmt_kinds == ["OpaqueStmt", "Return"]

    def test_unclosed_block_warns(self):
        ast = parse_text("int f() {\n    int a = 1;\n")
        assert ast.warnings
        assert len(collect_functions(ast)) == 1

    def test_determinism(self):
        src = random_function(random.Random(7), max_stmts=25)
        a1 = parse_text(src)
        a2 = parse_text(src)
        assert a1.root == a2.root
        assert {k: (n.kind, tuple(n.children), n.line_span, n.text) for k, n in a1.nodes.items()} == {
            k: (n.kind, tuple(n.children), n.line_span, n.text) for k, n in a2.nodes.items()
        }

    @given(st.text(max_size=300))
    @settings(max_examples=150)
    def test_total_on_arbitrary_text(self, text):
        parse_unit(tokenize(text))

    def test_total_on_token_permutations(self):
        base = tokenize("int f(int x) { if (x > 0) { return g(x); } while (x) x--; return 0; }")
        rng = random.Random(0)
        for _ in range(200):
            toks = list(base)
            rng.shuffle(toks)
            parse_unit(toks)


class TestCollectFunctions:
    def test_bodies_only(self):
        ast = parse_text("int f(void);\nint g() { return 1; }\nint h(int a) { return a; }")
        assert [fn.name for fn in collect_functions(ast)] == ["g", "h"]

    def test_empty_file(self):
        assert collect_functions(parse_text("")) == []

    def test_pointer_declarator(self):
        ast = parse_text("char *g(void) {\n    return 0;\n}")
        (fn,) = collect_functions(ast)
        assert fn.name == "g"

    def test_duplicates_ordered_by_line(self):
        ast = parse_text("int f() { return 1; }\nint f() { return 2; }")
        fns = collect_functions(ast)
        assert [fn.name for fn in fns] == ["f", "f"]
        assert fns[0].line_span[0] < fns[1].line_span[0]

    def test_static_and_struct_types(self):
        ast = parse_text("static struct foo *find_foo(int key) {\n    return 0;\n}")
        (fn,) = collect_functions(ast)
        assert fn.name == "find_foo"
        assert fn.params == ("key",)


def _statement_nodes(ast, root):
    out = []
    stack = [root]
    while stack:
        nid = stack.pop()
        node = ast.nodes[nid]
        if node.kind in STATEMENT_KINDS:
            out.append(nid)
        stack.extend(node.children)
    return out


def _own_lines(ast, nid, stmt_ids):
    node = ast.nodes[nid]
    lines = set(range(node.line_span[0], node.line_span[1] + 1))
    stack = list(node.children)
    while stack:
        cid = stack.pop()
        child = ast.nodes[cid]
        if cid in stmt_ids:
            lines -= set(range(child.line_span[0], child.line_span[1] + 1))
            continue
        stack.extend(child.children)
    return lines


class TestSpanCoverage:
    def test_each_statement_line_owned_once(self):
        # Canonical one-statement-per-line programs: the own-lines of the
        # statement nodes partition every line any statement spans.
        for seed in range(40):
            src = random_function(random.Random(seed), max_stmts=20)
            ast = parse_text(src)
            (fn,) = collect_functions(ast)
            stmt_ids = set(_statement_nodes(ast, fn.body))
            owners: dict[int, list[int]] = {}
            spanned = set()
            for nid in stmt_ids:
                node = ast.nodes[nid]
                spanned |= set(range(node.line_span[0], node.line_span[1] + 1))
                for line in _own_lines(ast, nid, stmt_ids):
                    owners.setdefault(line, []).append(nid)
            for line in spanned:
                assert len(owners.get(line, [])) == 1, (seed, line, src)
