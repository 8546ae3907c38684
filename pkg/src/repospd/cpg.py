"""Per-function code property graphs.

A statement-granular CFG is wired over the parse tree, control dependence is
derived from post-dominator sets on the (reversed) CFG, and data dependence
from reaching definitions.  `assemble_cpg` combines statement nodes, their
expression subtrees, and synthetic Entry/Exit into one joint graph with AST,
CFG, CDG, and DDG edges.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .cfrontend import (
    ASSIGN_OPS,
    STATEMENT_KINDS,
    TYPE_KEYWORDS,
    Ast,
    FunctionDef,
    Token,
    collect_functions,
    declarators,
    split_assign,
    split_top,
)

ENTRY_ID = -1
EXIT_ID = -2

SEMANTIC_ETYPES = frozenset(["CFG", "CDG", "DDG", "CALL"])


@dataclass
class CpgNode:
    id: int
    kind: str  # AstNode kind, or Entry/Exit
    code: str
    line: int | None  # None for synthetic nodes
    file: str
    function: str
    version: str | None = None  # set by the merge stage


@dataclass(frozen=True)
class CpgEdge:
    src: int
    dst: int
    etype: str  # AST | CFG | CDG | DDG | CALL
    label: str | None = None  # variable (DDG) or callee (CALL)
    version: str | None = None


@dataclass
class Cpg:
    nodes: dict[int, CpgNode]
    edges: list[CpgEdge]
    entry: int
    exit: int
    function: str
    file: str
    stmts: list[int]  # statement node ids, source order
    defs: dict[int, frozenset[str]]
    uses: dict[int, frozenset[str]]
    calls: dict[int, tuple[str, ...]]  # statement id -> callee names
    ast_children: dict[int, tuple[int, ...]] = field(default_factory=dict)


# -- control flow -----------------------------------------------------------------


@dataclass
class StmtCfg:
    """CFG over parse-tree statement ids plus synthetic ENTRY_ID/EXIT_ID."""

    stmts: list[int]
    edges: set[tuple[int, int]]
    entry: int = ENTRY_ID
    exit: int = EXIT_ID


def statements_in(ast: Ast, root: int) -> list[int]:
    out = []

    def walk(nid: int) -> None:
        node = ast.nodes[nid]
        if node.kind in STATEMENT_KINDS:
            out.append(nid)
        for cid in node.children:
            child = ast.nodes[cid]
            if child.kind in STATEMENT_KINDS or child.kind == "Block":
                walk(cid)

    walk(root)
    return out


def build_cfg(ast: Ast, fn: FunctionDef) -> StmtCfg:
    """Intra-procedural CFG.

    Fallbacks keep the graph total: statements left without predecessors
    (e.g. code after a return) are wired from Entry, and any region that
    cannot reach Exit gets an explicit Exit edge.
    """
    edges: set[tuple[int, int]] = set()
    loop_stack: list[dict] = []

    def wire(nid: int, preds: list[int]) -> list[int]:
        node = ast.nodes[nid]
        kind = node.kind
        if kind == "Block":
            for cid in node.children:
                child = ast.nodes[cid]
                if child.kind in STATEMENT_KINDS or child.kind == "Block":
                    preds = wire(cid, preds)
            return preds
        for p in preds:
            edges.add((p, nid))
        if kind == "If":
            outs: list[int] = []
            then_id = node.roles.get("then")
            orelse_id = node.roles.get("orelse")
            outs.extend(wire(then_id, [nid]) if then_id is not None else [nid])
            outs.extend(wire(orelse_id, [nid]) if orelse_id is not None else [nid])
            return outs
        if kind in ("While", "For"):
            loop_stack.append({"header": nid, "breaks": []})
            body_id = node.roles.get("body")
            body_out = wire(body_id, [nid]) if body_id is not None else [nid]
            for b in body_out:
                edges.add((b, nid))
            ctx = loop_stack.pop()
            return [nid] + ctx["breaks"]
        if kind == "Return":
            edges.add((nid, EXIT_ID))
            return []
        if kind == "Break":
            if loop_stack:
                loop_stack[-1]["breaks"].append(nid)
            else:
                edges.add((nid, EXIT_ID))
            return []
        if kind == "Continue":
            edges.add((nid, loop_stack[-1]["header"] if loop_stack else EXIT_ID))
            return []
        return [nid]

    body_out = wire(fn.body, [ENTRY_ID])
    for p in body_out:
        edges.add((p, EXIT_ID))

    stmts = statements_in(ast, fn.body)
    _ensure_entry_reaches(stmts, edges)
    _ensure_exit_reached(stmts, edges)
    return StmtCfg(stmts=stmts, edges=edges)


def _ensure_entry_reaches(stmts: list[int], edges: set[tuple[int, int]]) -> None:
    while True:
        succs: dict[int, list[int]] = {}
        for a, b in edges:
            succs.setdefault(a, []).append(b)
        seen = {ENTRY_ID}
        stack = [ENTRY_ID]
        while stack:
            for s in succs.get(stack.pop(), []):
                if s not in seen:
                    seen.add(s)
                    stack.append(s)
        dead = [s for s in stmts if s not in seen]
        if not dead:
            return
        edges.add((ENTRY_ID, dead[0]))


def _ensure_exit_reached(stmts: list[int], edges: set[tuple[int, int]]) -> None:
    while True:
        preds: dict[int, list[int]] = {}
        for a, b in edges:
            preds.setdefault(b, []).append(a)
        seen = {EXIT_ID}
        stack = [EXIT_ID]
        while stack:
            for p in preds.get(stack.pop(), []):
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
        trapped = [s for s in stmts if s not in seen]
        if not trapped:
            return
        edges.add((trapped[0], EXIT_ID))


# -- control dependence -------------------------------------------------------------


def build_cdg(
    node_ids: list[int], cfg_edges: set[tuple[int, int]], exit_id: int
) -> set[tuple[int, int]]:
    """Control-dependence edges A -> B: B post-dominates some successor of A
    and does not strictly post-dominate A.

    Post-dominator sets are computed by iterative intersection over the
    reversed CFG, with nodes packed into integer bitmasks.  Loop headers come
    out dependent on themselves; callers that forbid self-edges drop them.
    """
    nodes = list(node_ids)
    idx = {v: i for i, v in enumerate(nodes)}
    n = len(nodes)
    succ: list[list[int]] = [[] for _ in range(n)]
    for a, b in cfg_edges:
        succ[idx[a]].append(idx[b])
    exit_i = idx[exit_id]
    full = (1 << n) - 1
    pdom = [full] * n
    pdom[exit_i] = 1 << exit_i
    changed = True
    while changed:
        changed = False
        for i in range(n):
            if i == exit_i:
                continue
            ss = succ[i]
            if ss:
                m = full
                for s in ss:
                    m &= pdom[s]
            else:
                m = 0
            m |= 1 << i
            if m != pdom[i]:
                pdom[i] = m
                changed = True

    out: set[tuple[int, int]] = set()
    for a, s in cfg_edges:
        ai, si = idx[a], idx[s]
        mask = pdom[si]
        while mask:
            low = mask & -mask
            bi = low.bit_length() - 1
            mask ^= low
            if bi == ai or not (pdom[ai] >> bi) & 1:
                out.add((a, nodes[bi]))
    return out


# -- data dependence -------------------------------------------------------------


def build_ddg(
    node_ids: list[int],
    cfg_edges: set[tuple[int, int]],
    defs: dict[int, frozenset[str]],
    uses: dict[int, frozenset[str]],
) -> set[tuple[int, int, str]]:
    """Def-use edges (d, u, var) from reaching definitions (worklist fixpoint)."""
    preds: dict[int, list[int]] = {v: [] for v in node_ids}
    succs: dict[int, list[int]] = {v: [] for v in node_ids}
    for a, b in cfg_edges:
        succs[a].append(b)
        preds[b].append(a)

    out_sets: dict[int, set[tuple[int, str]]] = {v: set() for v in node_ids}
    in_sets: dict[int, set[tuple[int, str]]] = {v: set() for v in node_ids}
    work = list(node_ids)
    in_work = set(work)
    while work:
        v = work.pop(0)
        in_work.discard(v)
        new_in: set[tuple[int, str]] = set()
        for p in preds[v]:
            new_in |= out_sets[p]
        in_sets[v] = new_in
        killed = defs.get(v, frozenset())
        new_out = {(v, var) for var in killed} | {
            (d, var) for (d, var) in new_in if var not in killed
        }
        if new_out != out_sets[v]:
            out_sets[v] = new_out
            for s in succs[v]:
                if s not in in_work:
                    in_work.add(s)
                    work.append(s)

    edges = set()
    for u in node_ids:
        used = uses.get(u, frozenset())
        if not used:
            continue
        for d, var in in_sets[u]:
            if var in used:
                edges.add((d, u, var))
    return edges


# -- defs / uses / calls from statement tokens ---------------------------------------


def _callee_positions(tokens: list[Token]) -> set[int]:
    return {
        k
        for k, t in enumerate(tokens)
        if t.kind == "identifier" and k + 1 < len(tokens) and tokens[k + 1].text == "("
    }


def _generic_analysis(tokens: list[Token]) -> tuple[set[str], set[str], list[str]]:
    """defs/uses/calls of an expression-level token run (handles assignment
    chains, compound assignment, and ++/--)."""
    defs: set[str] = set()
    uses: set[str] = set()
    calls: list[str] = []

    segments: list[list[Token]] = [[]]
    ops: list[str] = []
    depth = 0
    for t in tokens:
        if t.text in ("(", "[", "{"):
            depth += 1
        elif t.text in (")", "]", "}"):
            depth = max(0, depth - 1)
        if depth == 0 and t.text in ASSIGN_OPS:
            ops.append(t.text)
            segments.append([])
        else:
            segments[-1].append(t)

    for seg, op in zip(segments[:-1], ops):
        callee_at = _callee_positions(seg)
        target = None
        for k, t in enumerate(seg):
            if t.kind != "identifier":
                continue
            if k in callee_at:
                calls.append(t.text)
                continue
            if target is None:
                target = t.text
            else:
                uses.add(t.text)
        if target is not None:
            defs.add(target)
            if op != "=":
                uses.add(target)

    value = segments[-1]
    callee_at = _callee_positions(value)
    for k, t in enumerate(value):
        if t.kind != "identifier":
            continue
        if k in callee_at:
            calls.append(t.text)
        else:
            uses.add(t.text)

    for k, t in enumerate(tokens):
        if t.text in ("++", "--"):
            for nb in (k - 1, k + 1):
                if 0 <= nb < len(tokens) and tokens[nb].kind == "identifier":
                    defs.add(tokens[nb].text)
                    uses.add(tokens[nb].text)
                    break
    return defs, uses, calls


def _decl_analysis(tokens: list[Token]) -> tuple[set[str], set[str], list[str]]:
    defs: set[str] = set()
    uses: set[str] = set()
    calls: list[str] = []
    body = tokens[:-1] if tokens and tokens[-1].text == ";" else list(tokens)
    for seg in declarators(body):
        parts = split_assign(seg)
        decl_part, init_part = (parts[0], parts[2]) if parts else (seg, [])
        name = None
        for t in decl_part:
            if t.kind == "identifier":
                if name is None:
                    name = t.text
                else:
                    uses.add(t.text)
        if name is not None:
            defs.add(name)
        d2, u2, c2 = _generic_analysis(init_part)
        defs |= d2
        uses |= u2
        calls.extend(c2)
    return defs, uses, calls


def analyze_statement(ast: Ast, nid: int) -> tuple[frozenset[str], frozenset[str], tuple[str, ...]]:
    """(defs, uses, calls) of one statement node, from its header tokens."""
    node = ast.nodes[nid]
    toks = list(node.tokens)
    kind = node.kind
    if kind == "OpaqueStmt":
        # Conservative: everything is a use, nothing is a definition.
        idents = {t.text for t in toks if t.kind == "identifier"}
        calls = [toks[k].text for k in sorted(_callee_positions(toks))]
        return frozenset(), frozenset(idents), tuple(calls)
    if kind in ("Break", "Continue"):
        return frozenset(), frozenset(), ()
    if kind in ("If", "While"):
        inner = toks[2:-1] if len(toks) > 3 else []
        d, u, c = _generic_analysis(inner)
        return frozenset(d), frozenset(u), tuple(c)
    if kind == "For":
        inner = toks[2:-1] if len(toks) > 3 else []
        defs: set[str] = set()
        uses: set[str] = set()
        calls: list[str] = []
        for k, seg in enumerate(split_top(inner, ";")):
            if k == 0 and seg and seg[0].text in TYPE_KEYWORDS:
                d, u, c = _decl_analysis(seg)
            else:
                d, u, c = _generic_analysis(seg)
            defs |= d
            uses |= u
            calls.extend(c)
        return frozenset(defs), frozenset(uses), tuple(calls)
    if kind == "Return":
        d, u, c = _generic_analysis(toks[1:])
        return frozenset(d), frozenset(u), tuple(c)
    if kind == "Decl":
        d, u, c = _decl_analysis(toks)
        return frozenset(d), frozenset(u), tuple(c)
    # Assign / ExprStmt
    d, u, c = _generic_analysis(toks)
    return frozenset(d), frozenset(u), tuple(c)


# -- assembly -------------------------------------------------------------------


_STMT_SUBTREE_ROLES = ("then", "orelse", "body")


def _expr_children(ast: Ast, nid: int) -> list[int]:
    node = ast.nodes[nid]
    excluded = {node.roles[r] for r in _STMT_SUBTREE_ROLES if r in node.roles}
    return [c for c in node.children if c not in excluded]


def assemble_cpg(ast: Ast, fn: FunctionDef) -> Cpg:
    """Joint graph for one function: statements, their expression subtrees,
    Entry/Exit, and AST+CFG+CDG+DDG edges (self-edges dropped)."""
    cfg = build_cfg(ast, fn)

    nodes: dict[int, CpgNode] = {}
    edges: list[CpgEdge] = []
    ast_children: dict[int, tuple[int, ...]] = {}
    id_map: dict[int, int] = {}
    counter = 0

    def alloc(kind: str, code: str, line: int | None) -> int:
        nonlocal counter
        nid = counter
        counter += 1
        nodes[nid] = CpgNode(
            id=nid, kind=kind, code=code, line=line, file=fn.file, function=fn.name
        )
        return nid

    entry = alloc("Entry", "", None)
    exit_ = alloc("Exit", "", None)
    id_map[ENTRY_ID] = entry
    id_map[EXIT_ID] = exit_

    def copy_subtree(ast_id: int) -> int:
        node = ast.nodes[ast_id]
        cid = alloc(node.kind, node.text, node.line_span[0])
        kids = tuple(copy_subtree(c) for c in node.children)
        ast_children[cid] = kids
        for k in kids:
            edges.append(CpgEdge(src=cid, dst=k, etype="AST"))
        return cid

    defs: dict[int, frozenset[str]] = {entry: frozenset(fn.params)}
    uses: dict[int, frozenset[str]] = {entry: frozenset(), exit_: frozenset()}
    defs[exit_] = frozenset()
    calls: dict[int, tuple[str, ...]] = {}
    stmt_ids: list[int] = []

    for ast_id in cfg.stmts:
        node = ast.nodes[ast_id]
        sid = alloc(node.kind, node.text, node.line_span[0])
        id_map[ast_id] = sid
        stmt_ids.append(sid)
        kids = tuple(copy_subtree(c) for c in _expr_children(ast, ast_id))
        ast_children[sid] = kids
        for k in kids:
            edges.append(CpgEdge(src=sid, dst=k, etype="AST"))
        d, u, c = analyze_statement(ast, ast_id)
        defs[sid], uses[sid], calls[sid] = d, u, c

    cfg_ids = [ENTRY_ID, EXIT_ID] + cfg.stmts
    for a, b in sorted(cfg.edges):
        if a != b:
            edges.append(CpgEdge(src=id_map[a], dst=id_map[b], etype="CFG"))
    for a, b in sorted(build_cdg(cfg_ids, cfg.edges, EXIT_ID)):
        if a != b:
            edges.append(CpgEdge(src=id_map[a], dst=id_map[b], etype="CDG"))
    ddg_defs = {ast_id: defs[id_map[ast_id]] for ast_id in cfg_ids}
    ddg_uses = {ast_id: uses[id_map[ast_id]] for ast_id in cfg_ids}
    for a, b, var in sorted(build_ddg(cfg_ids, cfg.edges, ddg_defs, ddg_uses)):
        if a != b:
            edges.append(CpgEdge(src=id_map[a], dst=id_map[b], etype="DDG", label=var))

    return Cpg(
        nodes=nodes,
        edges=edges,
        entry=entry,
        exit=exit_,
        function=fn.name,
        file=fn.file,
        stmts=stmt_ids,
        defs=defs,
        uses=uses,
        calls=calls,
        ast_children=ast_children,
    )


def function_cpgs(ast: Ast) -> list[Cpg]:
    return [assemble_cpg(ast, fn) for fn in collect_functions(ast)]
