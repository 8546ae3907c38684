"""Seeded random generators for property testing and the selftest suites.

Produces canonical subset-C functions (one statement per line, braces in a
fixed style), raw control-flow digraphs, and line-level mutations of
generated files.
"""

from __future__ import annotations

import random

_HELPERS = ("probe", "refresh", "consume")
_SINKS = ("sink", "emit")


class _FnGen:
    def __init__(self, rng: random.Random, max_stmts: int, name: str):
        self.rng = rng
        self.name = name
        self.budget = rng.randint(3, max_stmts)
        self.params = [f"p{k}" for k in range(rng.randint(0, 2))]
        self.vars = list(self.params)
        self.fresh = 0
        self.lines: list[str] = []
        self.loop_depth = 0

    def expr(self, depth: int = 0) -> str:
        r = self.rng.random()
        if not self.vars or (r < 0.25 and depth > 0):
            return str(self.rng.randint(0, 9))
        if r < 0.45:
            return self.rng.choice(self.vars)
        if r < 0.55:
            return f"{self.rng.choice(_HELPERS)}({self.rng.choice(self.vars)})"
        if depth >= 2:
            return self.rng.choice(self.vars)
        op = self.rng.choice(["+", "-", "*", "<", ">", "==", "&&"])
        return f"{self.expr(depth + 1)} {op} {self.expr(depth + 1)}"

    def emit(self, indent: int, text: str) -> None:
        self.lines.append("    " * indent + text)

    def new_var(self) -> str:
        name = f"v{self.fresh}"
        self.fresh += 1
        return name

    def stmt(self, indent: int) -> None:
        self.budget -= 1
        r = self.rng.random()
        if r < 0.22 or not self.vars:
            name = self.new_var()
            if self.rng.random() < 0.8:
                self.emit(indent, f"int {name} = {self.expr()};")
            else:
                self.emit(indent, f"int {name};")
            self.vars.append(name)
        elif r < 0.45:
            target = self.rng.choice(self.vars)
            form = self.rng.random()
            if form < 0.6:
                self.emit(indent, f"{target} = {self.expr()};")
            elif form < 0.8:
                self.emit(indent, f"{target} += {self.expr()};")
            else:
                self.emit(indent, f"{target}++;")
        elif r < 0.56:
            args = ", ".join(self.rng.choice(self.vars) for _ in range(self.rng.randint(1, 2)))
            self.emit(indent, f"{self.rng.choice(_SINKS)}({args});")
        elif r < 0.62:
            self.emit(indent, "goto done;")
        elif r < 0.68 and self.loop_depth > 0:
            self.emit(indent, self.rng.choice(["break;", "continue;"]))
        elif r < 0.73:
            self.emit(indent, f"return {self.expr()};")
        elif r < 0.86:
            self.emit(indent, f"if ({self.expr()}) {{")
            self.block(indent + 1)
            if self.rng.random() < 0.4:
                self.emit(indent, "} else {")
                self.block(indent + 1)
            self.emit(indent, "}")
        elif r < 0.95:
            self.emit(indent, f"while ({self.expr()}) {{")
            self.loop_depth += 1
            self.block(indent + 1)
            self.loop_depth -= 1
            self.emit(indent, "}")
        else:
            loop_var = self.rng.choice(self.vars)
            self.emit(indent, f"for ({loop_var} = 0; {loop_var} < {self.expr()}; {loop_var}++) {{")
            self.loop_depth += 1
            self.block(indent + 1)
            self.loop_depth -= 1
            self.emit(indent, "}")

    def block(self, indent: int) -> None:
        count = self.rng.randint(1, 3)
        for _ in range(count):
            if self.budget <= 0:
                break
            self.stmt(indent)
        if not self.lines or self.lines[-1].endswith("{"):
            self.emit(indent, f"{self.rng.choice(self.vars)} = 0;" if self.vars else "return 0;")

    def render(self) -> str:
        params = ", ".join(f"int {p}" for p in self.params) or "void"
        self.emit(0, f"int {self.name}({params}) {{")
        while self.budget > 0:
            self.stmt(1)
        self.emit(1, f"return {self.expr()};")
        self.emit(0, "}")
        return "\n".join(self.lines) + "\n"


def random_function(rng: random.Random, max_stmts: int = 30, name: str = "f") -> str:
    """One canonical-form subset-C function with nested control flow."""
    return _FnGen(rng, max_stmts, name).render()


def random_file(rng: random.Random, functions: int = 2, max_stmts: int = 12) -> str:
    parts = [random_function(rng, max_stmts, name=f"fn{k}") for k in range(functions)]
    return "\n".join(parts)


def random_cfg(rng: random.Random, max_nodes: int = 12) -> tuple[list[int], set[tuple[int, int]], int, int]:
    """A raw control-flow digraph (nodes, edges, entry, exit).

    Every node can reach the exit (extra node->exit edges are added where
    needed), mirroring the fallback the CFG builder applies.
    """
    n = rng.randint(2, max_nodes)
    nodes = list(range(n))
    entry, exit_ = 0, n - 1
    edges: set[tuple[int, int]] = set()
    for v in nodes[:-1]:
        edges.add((v, rng.randrange(1, n)))
    extra = rng.randint(0, 2 * n)
    for _ in range(extra):
        a, b = rng.randrange(n), rng.randrange(n)
        if a != exit_ and a != b:
            edges.add((a, b))

    def reaches_exit() -> set[int]:
        rev: dict[int, list[int]] = {v: [] for v in nodes}
        for a, b in edges:
            rev[b].append(a)
        seen = {exit_}
        stack = [exit_]
        while stack:
            for p in rev[stack.pop()]:
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
        return seen

    while True:
        ok = reaches_exit()
        trapped = [v for v in nodes if v not in ok]
        if not trapped:
            break
        edges.add((trapped[0], exit_))
    return nodes, edges, entry, exit_


def mutate_lines(rng: random.Random, lines: list[str], edits: int) -> list[str]:
    """Apply 1..edits random statement-level line edits (delete/insert/replace)."""
    out = list(lines)
    # Only touch simple statement lines so the result stays canonical.
    def candidates():
        return [
            k
            for k, text in enumerate(out)
            if text.strip().endswith(";") and not text.strip().startswith(("for", "while", "if", "return"))
        ]

    for _ in range(rng.randint(1, edits)):
        cand = candidates()
        if not cand:
            break
        k = rng.choice(cand)
        indent = out[k][: len(out[k]) - len(out[k].lstrip())]
        kind = rng.random()
        if kind < 0.34:
            del out[k]
        elif kind < 0.67:
            out.insert(k, f"{indent}int m{rng.randint(0, 99)} = {rng.randint(0, 9)};")
        else:
            out[k] = f"{indent}sink({rng.randint(0, 9)});"
    return out
