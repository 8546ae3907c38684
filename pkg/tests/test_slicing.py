"""Slicing tests: seeds, version safety, soundness, monotonicity."""

import random
from pathlib import Path

import pytest

from conftest import helper_repo_files

from repospd.ingest import RepoSnapshot
from repospd.oracles import check_slice_soundness
from repospd.pipeline import build_from_snapshots
from repospd.randprog import mutate_lines, random_file
from repospd.slicing import SliceConfig, change_node_set, slice_nodes


def snap(files: dict[str, str], version: str) -> RepoSnapshot:
    return RepoSnapshot(root=Path("<mem>"), version=version, files={
        path: text.splitlines() for path, text in files.items()
    })


def build(pre_files, post_files, **kwargs):
    return build_from_snapshots(snap(pre_files, "pre"), snap(post_files, "post"), **kwargs)


class TestChangeNodeSet:
    def test_noop_patch_empty_seeds(self):
        files = {"a.c": "int f() {\n    return 0;\n}\n"}
        result = build(files, files)
        deleted, added = change_node_set(result.attached)
        assert deleted == set() and added == set()

    def test_deleted_and_added_call_statements(self):
        pre = {"a.c": "int f(int x) {\n    drop_refs(x);\n    return x;\n}\n"}
        post = {"a.c": "int f(int x) {\n    signal_pending(x);\n    return x;\n}\n"}
        result = build(pre, post)
        deleted, added = change_node_set(result.attached)
        g = result.attached
        assert {g.nodes[s].code for s in deleted} == {"drop_refs ( x ) ;"}
        assert {g.nodes[s].code for s in added} == {"signal_pending ( x ) ;"}

    def test_attached_nodes_excluded_from_seeds(self):
        pre_files, post_files = helper_repo_files()
        result = build(pre_files, post_files)
        deleted, added = change_node_set(result.attached)
        attached = result.attached.attached_ids()
        assert not (deleted | added) & attached


class TestSliceNodes:
    def test_empty_seeds_empty_slice(self):
        files = {"a.c": "int f() {\n    return 0;\n}\n"}
        result = build(files, files)
        assert slice_nodes(result.attached, "deleted", SliceConfig()) == set()

    def test_two_statement_dependence_closure(self):
        # use(a) is deleted; the defining statement joins through the DDG
        # edge.  Brute-force closure on this two-node graph: seeds plus every
        # statement one dependence edge away.
        pre = {"a.c": "int f() {\n    int a = 1;\n    use(a);\n    return 0;\n}\n"}
        post = {"a.c": "int f() {\n    int a = 1;\n    return 0;\n}\n"}
        result = build(pre, post)
        g = result.attached
        retained = slice_nodes(g, "deleted", SliceConfig(include_ast_subtrees=False))
        seeds, _ = change_node_set(g)
        closure = set(seeds)
        for e in g.edges:
            if e.etype in ("CDG", "DDG"):
                if e.src in seeds:
                    closure.add(e.dst)
                if e.dst in seeds:
                    closure.add(e.src)
        closure = {n for n in closure if g.nodes[n].version != "post" and n in set(g.stmts)}
        assert retained == closure
        codes = {g.nodes[n].code for n in retained}
        assert codes == {"use ( a ) ;", "int a = 1 ;"}

    def test_version_exclusion(self):
        pre = {"a.c": "int f(int x) {\n    old_check(x);\n    return x;\n}\n"}
        post = {"a.c": "int f(int x) {\n    new_check(x);\n    return x;\n}\n"}
        result = build(pre, post)
        g = result.attached
        deleted_slice = slice_nodes(g, "deleted", SliceConfig())
        added_slice = slice_nodes(g, "added", SliceConfig())
        assert all(g.nodes[n].version != "post" for n in deleted_slice)
        assert all(g.nodes[n].version != "pre" for n in added_slice)

    def test_bad_direction_rejected(self):
        files = {"a.c": "int f() {\n    return 0;\n}\n"}
        result = build(files, files)
        with pytest.raises(ValueError):
            slice_nodes(result.attached, "sideways", SliceConfig())

    def test_hops_validation(self):
        with pytest.raises(ValueError):
            SliceConfig(hops=0)


class TestFinalize:
    def test_additions_only_equals_added_slice(self):
        pre = {"a.c": "int f(int x) {\n    return x;\n}\n"}
        post = {"a.c": "int f(int x) {\n    check(x);\n    return x;\n}\n"}
        result = build(pre, post)
        g = result.attached
        cfg = SliceConfig()
        assert slice_nodes(g, "deleted", cfg) == set()
        assert set(result.graph.nodes) == slice_nodes(g, "added", cfg)

    def test_identical_snapshots_empty_graph(self):
        files = {"a.c": "int f() {\n    return 0;\n}\n"}
        result = build(files, files)
        assert result.graph.nodes == {} and result.graph.edges == []

    def test_union_consistency(self):
        pre_files, post_files = helper_repo_files()
        result = build(pre_files, post_files)
        g = result.attached
        cfg = SliceConfig()
        union = slice_nodes(g, "deleted", cfg) | slice_nodes(g, "added", cfg)
        final_ids = set(result.graph.nodes)
        assert final_ids <= union
        # Only isolated synthetic nodes may be dropped from the union.
        for n in union - final_ids:
            assert g.nodes[n].kind in ("Entry", "Exit")
        for e in result.graph.edges:
            assert e.src in final_ids and e.dst in final_ids

    def test_attachment_retained_via_call_edge(self):
        pre_files, post_files = helper_repo_files()
        result = build(pre_files, post_files)
        final = result.graph
        attached_fns = {att.key[1] for att in final.attachments}
        assert attached_fns == {"drop_entry_refs", "queue_unlock"}
        assert len(final.call_edges) == 2
        entries = {e.dst for e in final.call_edges}
        assert all(final.nodes[n].kind == "Entry" for n in entries)

    def test_no_ast_subtrees_flag(self):
        pre_files, post_files = helper_repo_files()
        result = build(pre_files, post_files, slice_cfg=SliceConfig(include_ast_subtrees=False))
        stmt_or_synth = set(result.graph.stmts) | {
            n for n, node in result.graph.nodes.items() if node.kind in ("Entry", "Exit")
        }
        assert set(result.graph.nodes) == stmt_or_synth


class TestSliceProperties:
    def _random_pair(self, rng):
        src = random_file(rng, functions=2, max_stmts=10)
        post_lines = mutate_lines(rng, src.splitlines(), edits=3)
        pre_files = {"a.c": src}
        post_files = {"a.c": "\n".join(post_lines) + "\n"}
        return pre_files, post_files

    def test_soundness_and_version_safety(self):
        rng = random.Random(4242)
        for _ in range(20):
            pre_files, post_files = self._random_pair(rng)
            result = build(pre_files, post_files)
            g = result.attached
            deleted, added = change_node_set(g)
            for direction, seeds, excluded in (
                ("deleted", deleted, "post"),
                ("added", added, "pre"),
            ):
                retained = slice_nodes(g, direction, SliceConfig())
                check_slice_soundness(g, retained, seeds, 1, excluded)

    def test_hop_monotonicity(self):
        rng = random.Random(777)
        for _ in range(15):
            pre_files, post_files = self._random_pair(rng)
            result = build(pre_files, post_files)
            g = result.attached
            for direction in ("deleted", "added"):
                prev: set[int] = set()
                for hops in (1, 2, 3):
                    cur = slice_nodes(g, direction, SliceConfig(hops=hops))
                    assert prev <= cur
                    prev = cur
