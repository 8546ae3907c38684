"""Command-line surface: index, build, train, predict, eval, selftest.

Exit codes: 0 success, 1 usage error, 2 data error.  Results are JSON on
stdout unless --out is given; diagnostics go to stderr (level set by the
REPOSPD_LOG environment variable: error, warn, info, or debug).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import random
import sys
import tempfile
from pathlib import Path

from .encoder import extract_change_lines
from .graphio import export_dot, parse_graph, serialize_graph
from .ingest import load_snapshot, resolve_change_set
from .pipeline import build_repocpg
from .repodep import index_repository, index_to_json
from .slicing import SliceConfig
from .trainer import (
    Sample,
    TrainConfig,
    evaluate,
    load_checkpoint,
    predict,
    save_checkpoint,
    split_corpus,
    train,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

_LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):  # exit 1, not argparse's default 2
        raise UsageError(message)


def _build_parser() -> _ArgumentParser:
    parser = _ArgumentParser(prog="repospd", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="index a snapshot's functions and calls")
    p.add_argument("--repo", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--version", default="pre", choices=("pre", "post"))
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("build", help="build the sliced merged graph for one patch")
    p.add_argument("--pre", required=True, type=Path)
    p.add_argument("--post", required=True, type=Path)
    p.add_argument("--changed", type=Path, help="newline-separated relative paths")
    p.add_argument("--slice-hops", type=int, default=1)
    p.add_argument("--no-ast-subtrees", action="store_true")
    p.add_argument("--dep-depth", type=int, default=1)
    p.add_argument("--id", default=None)
    p.add_argument("--out", type=Path)
    p.add_argument("--dot", type=Path)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("train", help="train on a JSONL corpus (8:1:1 split)")
    p.add_argument("--corpus", required=True, type=Path)
    p.add_argument("--config", type=Path, help="JSON file of training settings")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--schedule", choices=("prose", "eq6-literal"), default=None)
    p.add_argument("--select-metric", choices=("accuracy", "f1"), default=None)
    p.add_argument("--no-split", action="store_true", help="train on the full corpus")

    p = sub.add_parser("predict", help="classify one patch")
    p.add_argument("--ckpt", required=True, type=Path)
    p.add_argument("--graph", type=Path)
    p.add_argument("--pre", type=Path)
    p.add_argument("--post", type=Path)
    p.add_argument("--changed", type=Path)
    p.add_argument("--embeddings", type=Path, help="JSON sidecar: node id -> [first, last] vectors")
    p.add_argument("--out", type=Path)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a corpus")
    p.add_argument("--ckpt", required=True, type=Path)
    p.add_argument("--corpus", required=True, type=Path)
    p.add_argument("--by-tag", action="store_true")
    p.add_argument("--out", type=Path)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("selftest", help="run the oracle cross-check suites")
    p.add_argument("--seed", type=int, default=0)

    return parser


def _emit(payload: dict, out: Path | None) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _read_changed(path: Path | None) -> list[str] | None:
    if path is None:
        return None
    try:
        return [line.strip() for line in path.read_text().splitlines() if line.strip()]
    except OSError as exc:
        raise DataError(f"cannot read changed-path list: {exc}") from exc


def _slice_config(args) -> SliceConfig:
    return SliceConfig(hops=args.slice_hops, include_ast_subtrees=not args.no_ast_subtrees)


def _load_corpus(path: Path, cfg: TrainConfig) -> list[Sample]:
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read corpus: {exc}") from exc
    base = path.parent
    samples = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}:{lineno}: bad JSON: {exc}") from exc
        if rec.get("label") not in (0, 1):
            raise DataError(f"{path}:{lineno}: label must be 0 or 1")
        try:
            result = build_repocpg(
                base / rec["pre_root"],
                base / rec["post_root"],
                rec.get("changed_paths"),
                slice_cfg=cfg.slice,
            )
        except (OSError, KeyError, ValueError) as exc:
            raise DataError(f"{path}:{lineno}: cannot build sample: {exc}") from exc
        samples.append(
            Sample(
                id=rec.get("id", f"sample{lineno}"),
                graph=result.graph,
                seq=extract_change_lines(result.change_set, cfg.max_seq_tokens),
                label=rec["label"],
                tag=rec.get("tag"),
            )
        )
    if not samples:
        raise DataError(f"corpus {path} contains no records")
    return samples


def _cmd_index(args) -> int:
    try:
        snapshot = load_snapshot(args.repo, args.version)
    except OSError as exc:
        raise DataError(str(exc)) from exc
    index, callgraph = index_repository(snapshot)
    _emit(index_to_json(index, callgraph), args.out)
    return EXIT_OK


def _cmd_build(args) -> int:
    changed = _read_changed(args.changed)
    try:
        result = build_repocpg(
            args.pre, args.post, changed, slice_cfg=_slice_config(args), dep_depth=args.dep_depth
        )
    except (OSError, ValueError) as exc:
        raise DataError(str(exc)) from exc
    meta = {
        "id": args.id or f"{args.pre.name}..{args.post.name}",
        "pre_root": str(args.pre),
        "post_root": str(args.post),
        "changed_paths": changed,
        "slice": {"hops": args.slice_hops, "include_ast_subtrees": not args.no_ast_subtrees},
        "dep_depth": args.dep_depth,
    }
    text = serialize_graph(result.graph, meta)
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text)
    if args.dot is not None:
        args.dot.write_text(export_dot(result.graph))
    return EXIT_OK


def _train_config(args) -> TrainConfig:
    data = {}
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read config: {exc}") from exc
    try:
        cfg = TrainConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise DataError(f"bad training config: {exc}") from exc
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.schedule is not None:
        overrides["schedule"] = args.schedule
    if args.select_metric is not None:
        overrides["select_metric"] = args.select_metric
    if overrides:
        cfg = TrainConfig.from_dict({**cfg.to_dict(), **overrides})
    return cfg


def _cmd_train(args) -> int:
    cfg = _train_config(args)
    samples = _load_corpus(args.corpus, cfg)
    if args.no_split:
        train_part, valid_part, test_part = samples, [], []
    else:
        train_part, valid_part, test_part = split_corpus(samples, cfg.seed)
    if not train_part:
        raise DataError("corpus too small to train on after splitting")
    params, history = train(train_part, cfg, valid=valid_part or None)
    save_checkpoint(params, args.out)
    summary = {
        "config": cfg.to_dict(),
        "samples": {"train": len(train_part), "valid": len(valid_part), "test": len(test_part)},
        "history": [
            {k: rec[k] for k in ("epoch", "active_branch", "loss", "train_accuracy", "valid_score") if k in rec}
            for rec in history
        ],
    }
    if test_part:
        summary["test"] = evaluate(params, test_part).to_dict()
    _emit(summary, None)
    return EXIT_OK


def _predict_sample(params, sample) -> dict:
    from .trainer import graph_feature, seq_feature
    import torch

    with torch.no_grad():
        p, cls = predict(graph_feature(params, sample), seq_feature(params, sample), params.heads)
    return {"id": sample.id, "p": [float(p[0]), float(p[1])], "class": cls}


def _cmd_predict(args) -> int:
    try:
        params = load_checkpoint(args.ckpt)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot load checkpoint: {exc}") from exc
    cfg = params.config
    if args.graph is not None:
        try:
            graph, meta = parse_graph(args.graph.read_text())
        except (OSError, ValueError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot load graph: {exc}") from exc
        pre_root, post_root = meta.get("pre_root"), meta.get("post_root")
        if not pre_root or not post_root:
            raise DataError("graph document carries no snapshot roots; cannot derive the change sequence")
        try:
            pre = load_snapshot(pre_root, "pre")
            post = load_snapshot(post_root, "post")
        except OSError as exc:
            raise DataError(f"snapshot roots from graph meta not readable: {exc}") from exc
        cs = resolve_change_set(pre, post, meta.get("changed_paths"))
        sample = Sample(
            id=meta.get("id", "graph"),
            graph=graph,
            seq=extract_change_lines(cs, cfg.max_seq_tokens),
            label=0,
        )
    elif args.pre is not None and args.post is not None:
        try:
            result = build_repocpg(args.pre, args.post, _read_changed(args.changed), slice_cfg=cfg.slice)
        except (OSError, ValueError) as exc:
            raise DataError(str(exc)) from exc
        sample = Sample(
            id=f"{args.pre.name}..{args.post.name}",
            graph=result.graph,
            seq=extract_change_lines(result.change_set, cfg.max_seq_tokens),
            label=0,
        )
    else:
        raise UsageError("predict needs either --graph or both --pre and --post")
    if args.embeddings is not None:
        try:
            sample.embeddings = json.loads(args.embeddings.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read embedding sidecar: {exc}") from exc
    try:
        _emit(_predict_sample(params, sample), args.out)
    except KeyError as exc:
        raise DataError(f"embedding sidecar incomplete: {exc}") from exc
    return EXIT_OK


def _cmd_eval(args) -> int:
    try:
        params = load_checkpoint(args.ckpt)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot load checkpoint: {exc}") from exc
    samples = _load_corpus(args.corpus, params.config)
    report = evaluate(params, samples, by_tag=args.by_tag)
    _emit(report.to_dict(), args.out)
    return EXIT_OK


def _selftest_cdg(rng: random.Random) -> None:
    from .cpg import build_cdg
    from .oracles import cdg_by_path_enumeration
    from .randprog import random_cfg

    for _ in range(30):
        nodes, edges, _, exit_ = random_cfg(rng, max_nodes=10)
        got = build_cdg(nodes, edges, exit_)
        want = cdg_by_path_enumeration(nodes, edges, exit_)
        if got != want:
            raise AssertionError(f"control-dependence mismatch on {sorted(edges)}")


def _selftest_ddg(rng: random.Random) -> None:
    from .cfrontend import collect_functions, parse_text
    from .cpg import ENTRY_ID, EXIT_ID, analyze_statement, build_cfg, build_ddg
    from .oracles import naive_reaching_definitions
    from .randprog import random_function

    for _ in range(15):
        ast = parse_text(random_function(rng, max_stmts=20))
        (fn,) = collect_functions(ast)
        cfg = build_cfg(ast, fn)
        ids = [ENTRY_ID, EXIT_ID] + cfg.stmts
        defs = {ENTRY_ID: frozenset(fn.params), EXIT_ID: frozenset()}
        uses = {ENTRY_ID: frozenset(), EXIT_ID: frozenset()}
        for nid in cfg.stmts:
            d, u, _ = analyze_statement(ast, nid)
            defs[nid], uses[nid] = d, u
        got = build_ddg(ids, cfg.edges, defs, uses)
        want = naive_reaching_definitions(ids, cfg.edges, defs, uses)
        if got != want:
            raise AssertionError("reaching-definitions mismatch")


def _selftest_merge_and_slice(rng: random.Random) -> None:
    from .cfrontend import collect_functions, parse_text
    from .cpg import assemble_cpg
    from .ingest import FileChange, diff_lines
    from .merge import match_nodes, merge_graphs
    from .oracles import check_projection, check_slice_soundness
    from .pipeline import build_from_snapshots
    from .ingest import RepoSnapshot
    from .randprog import mutate_lines, random_function
    from .slicing import change_node_set, slice_nodes

    for _ in range(10):
        pre_src = random_function(rng, max_stmts=12)
        post_src = "\n".join(mutate_lines(rng, pre_src.splitlines(), edits=3)) + "\n"
        pre_ast, post_ast = parse_text(pre_src), parse_text(post_src)
        (pre_fn,), (post_fn,) = collect_functions(pre_ast), collect_functions(post_ast)
        pre_cpg, post_cpg = assemble_cpg(pre_ast, pre_fn), assemble_cpg(post_ast, post_fn)
        deleted, added, line_map = diff_lines(pre_src.splitlines(), post_src.splitlines())
        change = FileChange(path="a.c", deleted=deleted, added=added, line_map=line_map)
        merged = merge_graphs(pre_cpg, post_cpg, match_nodes(pre_cpg, post_cpg, change))
        check_projection(merged, pre_cpg, "pre")
        check_projection(merged, post_cpg, "post")

        pre_snap = RepoSnapshot(root=Path("<mem>"), version="pre", files={"a.c": pre_src.splitlines()})
        post_snap = RepoSnapshot(root=Path("<mem>"), version="post", files={"a.c": post_src.splitlines()})
        result = build_from_snapshots(pre_snap, post_snap)
        g = result.attached
        del_seeds, add_seeds = change_node_set(g)
        for direction, seeds, excluded in (("deleted", del_seeds, "post"), ("added", add_seeds, "pre")):
            retained = slice_nodes(g, direction, SliceConfig())
            check_slice_soundness(g, retained, seeds, 1, excluded)


def _selftest_gradients(seed: int) -> None:
    from .synthdata import make_corpus
    from .trainer import grad_check, init_params

    with tempfile.TemporaryDirectory() as tmp:
        corpus_path = make_corpus(tmp, n_pos=1, n_neg=1, seed=seed)
        cfg = TrainConfig(epochs=2, dim=8, vocab_size=64, heads=2, seed=seed)
        samples = _load_corpus(corpus_path, cfg)
        params = init_params(cfg)
        import torch

        gen = torch.Generator().manual_seed(seed + 1)
        with torch.no_grad():
            params.heads.w_g.normal_(0.0, 0.3, generator=gen)
            params.heads.w_s.normal_(0.0, 0.3, generator=gen)
        for sample in samples:
            err = grad_check(params, sample, coords_per_tensor=2)
            if err > 1e-4:
                raise AssertionError(f"gradient check error {err:.2e} exceeds 1e-4")


def _cmd_selftest(args) -> int:
    suites = [
        ("control-dependence vs path enumeration", lambda: _selftest_cdg(random.Random(args.seed))),
        ("reaching definitions vs naive fixpoint", lambda: _selftest_ddg(random.Random(args.seed + 1))),
        ("merge reconstruction and slice soundness", lambda: _selftest_merge_and_slice(random.Random(args.seed + 2))),
        ("analytic gradients vs finite differences", lambda: _selftest_gradients(args.seed)),
    ]
    failures = 0
    for name, fn in suites:
        try:
            fn()
        except AssertionError as exc:
            failures += 1
            sys.stdout.write(f"FAIL {name}: {exc}\n")
        else:
            sys.stdout.write(f"PASS {name}\n")
    return EXIT_OK if failures == 0 else EXIT_DATA


def run_command(argv: list[str]) -> int:
    level = _LOG_LEVELS.get(os.environ.get("REPOSPD_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    try:
        handler = {
            "index": _cmd_index,
            "build": _cmd_build,
            "train": _cmd_train,
            "predict": _cmd_predict,
            "eval": _cmd_eval,
            "selftest": _cmd_selftest,
        }[args.command]
        return handler(args)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except DataError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DATA


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))
