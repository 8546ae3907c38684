"""End-to-end graph construction for one patch: snapshot pair in, sliced
repository-level merged graph out."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .cpg import assemble_cpg
from .cfrontend import collect_functions
from .ingest import ChangeSet, RepoSnapshot, load_snapshot, resolve_change_set
from .merge import MergeCpg, combine_merges, merge_functions
from .repodep import FunctionIndex, RepoCpg, attach_dependencies, index_repository, resolve_call_sites
from .slicing import SliceConfig, finalize_repocpg


@dataclass
class BuildResult:
    graph: RepoCpg  # final sliced graph
    change_set: ChangeSet
    merged: MergeCpg  # pre-slice merged graph (changed files only)
    attached: RepoCpg  # merged graph with dependencies, before slicing


def build_merged(idx_pre: FunctionIndex, idx_post: FunctionIndex, change_set: ChangeSet) -> MergeCpg:
    """Merge the per-function CPGs of every changed file."""
    parts = []
    for fc in change_set.changes:
        pre_ast = idx_pre.asts.get(fc.path)
        post_ast = idx_post.asts.get(fc.path)
        pre_cpgs = (
            [assemble_cpg(pre_ast, fn) for fn in collect_functions(pre_ast)] if pre_ast else []
        )
        post_cpgs = (
            [assemble_cpg(post_ast, fn) for fn in collect_functions(post_ast)] if post_ast else []
        )
        parts.extend(merge_functions(pre_cpgs, post_cpgs, fc))
    return combine_merges(parts)


def build_from_snapshots(
    pre: RepoSnapshot,
    post: RepoSnapshot,
    changed_paths: list[str] | None = None,
    slice_cfg: SliceConfig = SliceConfig(),
    dep_depth: int = 1,
) -> BuildResult:
    change_set = resolve_change_set(pre, post, changed_paths)
    idx_pre, _ = index_repository(pre)
    idx_post, _ = index_repository(post)
    merged = build_merged(idx_pre, idx_post, change_set)
    resolved = resolve_call_sites(merged, idx_pre, idx_post)
    attached = attach_dependencies(merged, resolved, idx_pre, idx_post, dep_depth=dep_depth)
    graph = finalize_repocpg(attached, slice_cfg)
    return BuildResult(graph=graph, change_set=change_set, merged=merged, attached=attached)


def build_repocpg(
    pre_root: Path | str,
    post_root: Path | str,
    changed_paths: list[str] | None = None,
    slice_cfg: SliceConfig = SliceConfig(),
    dep_depth: int = 1,
) -> BuildResult:
    pre = load_snapshot(pre_root, "pre")
    post = load_snapshot(post_root, "post")
    return build_from_snapshots(pre, post, changed_paths, slice_cfg, dep_depth)
