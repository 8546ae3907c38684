"""Two-branch feature extraction.

Graph branch: node embeddings (hashed token table + kind table, or externally
supplied vectors) pass through four role-masked graph-attention layers whose
outputs are concatenated, then one global attention layer over all edges, and
mean pooling.  Sequence branch: marker-tagged change-line tokens are
attention-pooled and mapped through a small feed-forward stack.

Everything is float64 torch so analytic gradients can be checked against
central finite differences at tight tolerance.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass

import torch

from .cfrontend import tokenize
from .ingest import ChangeSet
from .repodep import RepoCpg

log = logging.getLogger(__name__)

DTYPE = torch.float64

NODE_KINDS = (
    "Entry",
    "Exit",
    "TranslationUnit",
    "FunctionDef",
    "ParamList",
    "Block",
    "Decl",
    "ExprStmt",
    "Assign",
    "Call",
    "If",
    "While",
    "For",
    "Return",
    "Break",
    "Continue",
    "OpaqueStmt",
    "Ident",
    "Literal",
    "BinOp",
    "UnaryOp",
)
_KIND_ROW = {kind: k for k, kind in enumerate(NODE_KINDS)}

MARKERS = ("PRE", "POST")


def token_row(text: str, vocab_size: int) -> int:
    """Stable token hash: identical across runs and platforms."""
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % vocab_size


def kind_row(kind: str) -> int:
    return _KIND_ROW.get(kind, _KIND_ROW["OpaqueStmt"])


# -- parameters ---------------------------------------------------------------


@dataclass
class GatLayerParams:
    weights: list[torch.Tensor]  # per head: (d_in, d_head)
    attn: list[torch.Tensor]  # per head: (2 * d_head,)
    negative_slope: float = 0.2


@dataclass
class GraphBranchParams:
    token_table: torch.Tensor  # (vocab, d)
    kind_table: torch.Tensor  # (len(NODE_KINDS), d)
    subgraph_layers: list[GatLayerParams]  # four role masks, d -> d
    global_layer: GatLayerParams  # 4d -> d
    vocab_size: int
    dim: int


@dataclass
class SeqBranchParams:
    token_table: torch.Tensor  # (vocab, d)
    marker_table: torch.Tensor  # (2, d)
    attn_vector: torch.Tensor  # (d,)
    ff1_w: torch.Tensor  # (d, d)
    ff1_b: torch.Tensor  # (d,)
    ff2_w: torch.Tensor  # (d, d)
    ff2_b: torch.Tensor  # (d,)
    vocab_size: int
    dim: int


def _glorot(shape: tuple[int, ...], gen: torch.Generator) -> torch.Tensor:
    fan = sum(shape) if len(shape) > 1 else shape[0] * 2
    bound = (6.0 / fan) ** 0.5
    t = torch.empty(*shape, dtype=DTYPE)
    t.uniform_(-bound, bound, generator=gen)
    return t


def _gat_layer(d_in: int, d_out: int, heads: int, gen: torch.Generator) -> GatLayerParams:
    if d_out % heads:
        raise ValueError(f"output dim {d_out} not divisible by {heads} heads")
    d_head = d_out // heads
    return GatLayerParams(
        weights=[_glorot((d_in, d_head), gen) for _ in range(heads)],
        attn=[_glorot((2 * d_head,), gen) for _ in range(heads)],
    )


def init_graph_branch(dim: int, vocab_size: int, heads: int, gen: torch.Generator) -> GraphBranchParams:
    return GraphBranchParams(
        token_table=torch.empty(vocab_size, dim, dtype=DTYPE).normal_(0.0, 0.2, generator=gen),
        kind_table=torch.empty(len(NODE_KINDS), dim, dtype=DTYPE).normal_(0.0, 0.2, generator=gen),
        subgraph_layers=[_gat_layer(dim, dim, heads, gen) for _ in range(4)],
        global_layer=_gat_layer(4 * dim, dim, heads, gen),
        vocab_size=vocab_size,
        dim=dim,
    )


def init_seq_branch(dim: int, vocab_size: int, gen: torch.Generator) -> SeqBranchParams:
    return SeqBranchParams(
        token_table=torch.empty(vocab_size, dim, dtype=DTYPE).normal_(0.0, 0.2, generator=gen),
        marker_table=torch.empty(2, dim, dtype=DTYPE).normal_(0.0, 0.2, generator=gen),
        attn_vector=_glorot((dim,), gen),
        ff1_w=_glorot((dim, dim), gen),
        ff1_b=torch.zeros(dim, dtype=DTYPE),
        ff2_w=_glorot((dim, dim), gen),
        ff2_b=torch.zeros(dim, dtype=DTYPE),
        vocab_size=vocab_size,
        dim=dim,
    )


# -- edge roles ---------------------------------------------------------------


def edge_role_vector(edge) -> tuple[bool, bool, bool, bool]:
    """[pre_side, post_side, structural, semantic] for one edge."""
    version = edge.version or "common"
    pre_side = version in ("pre", "common")
    post_side = version in ("post", "common")
    structural = edge.etype == "AST"
    semantic = edge.etype in ("CFG", "CDG", "DDG", "CALL")
    if structural == semantic:
        raise ValueError(f"edge type {edge.etype} has no role class")
    if not (pre_side or post_side):
        raise ValueError(f"edge version {edge.version} has no side")
    return (pre_side, post_side, structural, semantic)


def subgraph_mask(g: RepoCpg, k: int) -> list:
    """Edge subset for role mask k: 1 pre-side, 2 post-side, 3 structural
    (AST), 4 semantic (CFG/CDG/DDG/CALL)."""
    if k not in (1, 2, 3, 4):
        raise ValueError(f"mask index out of range: {k}")
    out = []
    for e in g.edges:
        roles = edge_role_vector(e)
        if roles[k - 1]:
            out.append(e)
    return out


# -- graph branch -------------------------------------------------------------


def node_order(g: RepoCpg) -> list[int]:
    return sorted(g.nodes)


def init_node_embeddings(
    g: RepoCpg,
    params: GraphBranchParams,
    external: dict | None = None,
) -> torch.Tensor:
    """Initial node matrix, one row per node in `node_order`.

    Default: mean of the hashed token rows of the node's code plus a kind
    row.  External path: the sum of the two per-node vectors supplied in the
    sidecar mapping (node id -> [first, last])."""
    order = node_order(g)
    n = len(order)
    if external is not None:
        rows = []
        for nid in order:
            entry = external.get(nid, external.get(str(nid)))
            if entry is None:
                raise KeyError(f"embedding sidecar is missing node {nid}")
            first, last = entry
            rows.append(
                torch.as_tensor(first, dtype=DTYPE) + torch.as_tensor(last, dtype=DTYPE)
            )
        return torch.stack(rows) if rows else torch.zeros((0, params.dim), dtype=DTYPE)

    if n == 0:
        return torch.zeros((0, params.dim), dtype=DTYPE)
    positions = []
    token_rows = []
    counts = torch.zeros(n, dtype=DTYPE)
    kind_rows = []
    for pos, nid in enumerate(order):
        node = g.nodes[nid]
        kind_rows.append(kind_row(node.kind))
        toks = tokenize(node.code)
        counts[pos] = max(len(toks), 1)
        for t in toks:
            positions.append(pos)
            token_rows.append(token_row(t.text, params.vocab_size))
    acc = torch.zeros((n, params.dim), dtype=DTYPE)
    if positions:
        gathered = params.token_table[torch.tensor(token_rows, dtype=torch.long)]
        acc = acc.index_add(0, torch.tensor(positions, dtype=torch.long), gathered)
    mean = acc / counts.unsqueeze(1)
    return mean + params.kind_table[torch.tensor(kind_rows, dtype=torch.long)]


def gat_forward(
    H: torch.Tensor,
    edges: list,
    p: GatLayerParams,
    order: list[int] | None = None,
    return_attention: bool = False,
):
    """One multi-head graph-attention layer over the given edge subset.

    Edges are (src, dst) contributions aggregated at dst; every node gets a
    self-loop.  Per head: alpha = softmax_j LeakyReLU(a . [W h_i || W h_j]),
    h'_i = ReLU(sum_j alpha_ij W h_j); head outputs are concatenated."""
    if not torch.isfinite(H).all():
        raise ValueError("non-finite node features")
    n = H.shape[0]
    if n == 0:
        empty = H.new_zeros((0, sum(w.shape[1] for w in p.weights)))
        return (empty, []) if return_attention else empty
    pos = {nid: k for k, nid in enumerate(order)} if order is not None else None

    src_list = list(range(n))
    dst_list = list(range(n))
    for e in edges:
        s, d = (e.src, e.dst) if hasattr(e, "src") else e
        if pos is not None:
            s, d = pos[s], pos[d]
        src_list.append(s)
        dst_list.append(d)
    src = torch.tensor(src_list, dtype=torch.long)
    dst = torch.tensor(dst_list, dtype=torch.long)

    outs = []
    attentions = []
    for W, a in zip(p.weights, p.attn):
        wh = H @ W
        d_head = wh.shape[1]
        scores = torch.nn.functional.leaky_relu(
            torch.cat([wh[dst], wh[src]], dim=1) @ a, negative_slope=p.negative_slope
        )
        m = torch.full((n,), float("-inf"), dtype=H.dtype)
        m = m.scatter_reduce(0, dst, scores.detach(), reduce="amax")
        ex = torch.exp(scores - m[dst])
        denom = torch.zeros(n, dtype=H.dtype).index_add(0, dst, ex)
        alpha = ex / denom[dst]
        agg = torch.zeros((n, d_head), dtype=H.dtype).index_add(
            0, dst, alpha.unsqueeze(1) * wh[src]
        )
        outs.append(torch.relu(agg))
        attentions.append((src, dst, alpha))
    out = torch.cat(outs, dim=1)
    return (out, attentions) if return_attention else out


def encode_graph(g: RepoCpg, H0: torch.Tensor, p: GraphBranchParams) -> torch.Tensor:
    """Graph-branch feature: four role-masked attention layers concatenated,
    one global layer, mean pooling."""
    if H0.shape[0] == 0:
        log.warning("encoding an empty graph; feature vector is zero")
        return torch.zeros(p.dim, dtype=DTYPE)
    order = node_order(g)
    blocks = [
        gat_forward(H0, subgraph_mask(g, k), layer, order)
        for k, layer in zip((1, 2, 3, 4), p.subgraph_layers)
    ]
    h_cat = torch.cat(blocks, dim=1)
    h_global = gat_forward(h_cat, g.edges, p.global_layer, order)
    return h_global.mean(dim=0)


# -- sequence branch -----------------------------------------------------------


def extract_change_lines(cs: ChangeSet, max_tokens: int = 512) -> list[tuple[str, str]]:
    """Marker-tagged token sequence of the patch's changed lines only: per
    file, deleted lines (PRE) then added lines (POST); no paths, hunk
    positions, or line numbers.  Head-truncated to max_tokens."""
    seq: list[tuple[str, str]] = []
    for fc in cs.changes:
        for _, text in fc.deleted:
            for t in tokenize(text):
                seq.append(("PRE", t.text))
        for _, text in fc.added:
            for t in tokenize(text):
                seq.append(("POST", t.text))
    return seq[:max_tokens]


def encode_sequence(seq: list[tuple[str, str]], p: SeqBranchParams) -> torch.Tensor:
    """Sequence-branch feature: token+marker embeddings, attention pooling,
    two-layer feed-forward.  An empty sequence maps to the zero vector."""
    if not seq:
        return torch.zeros(p.dim, dtype=DTYPE)
    token_idx = torch.tensor([token_row(text, p.vocab_size) for _, text in seq], dtype=torch.long)
    marker_idx = torch.tensor([MARKERS.index(m) for m, _ in seq], dtype=torch.long)
    rows = p.token_table[token_idx] + p.marker_table[marker_idx]
    scores = rows @ p.attn_vector
    alpha = torch.softmax(scores, dim=0)
    pooled = alpha @ rows
    hidden = torch.relu(pooled @ p.ff1_w + p.ff1_b)
    return hidden @ p.ff2_w + p.ff2_b
