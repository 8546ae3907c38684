"""Snapshot loading and LCS line-diff tests."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from repospd.ingest import diff_lines, load_snapshot, resolve_change_set


def brute_lcs_matchings(a, b):
    """All maximum-length common-subsequence matchings, by exhaustive search.

    Independent oracle: enumerates every common subsequence of positions and
    keeps the longest ones.  Exponential; callers keep inputs tiny.
    """
    results = set()

    def rec(i, j, acc):
        if i >= len(a) or j >= len(b):
            results.add(tuple(acc))
            return
        rec(i + 1, j, acc)
        rec(i, j + 1, acc)
        if a[i] == b[j]:
            acc.append((i + 1, j + 1))
            rec(i + 1, j + 1, acc)
            acc.pop()

    rec(0, 0, [])
    best = max((len(r) for r in results), default=0)
    return {r for r in results if len(r) == best}


small_lines = st.lists(st.sampled_from(["a", "b", "c", "x"]), max_size=7)
lines = st.lists(st.text(alphabet="abc ", max_size=4), max_size=30)


class TestLoadSnapshot:
    def test_loads_c_file_lines(self, tmp_path):
        (tmp_path / "a.c").write_text("int x;\nint y;\nint z;\n")
        snap = load_snapshot(tmp_path, "pre")
        assert snap.files == {"a.c": ["int x;", "int y;", "int z;"]}
        assert snap.version == "pre"

    def test_empty_dir(self, tmp_path):
        snap = load_snapshot(tmp_path, "post")
        assert snap.files == {}

    def test_suffix_filter(self, tmp_path):
        (tmp_path / "a.c").write_text("int x;\n")
        (tmp_path / "README.md").write_text("hello\n")
        snap = load_snapshot(tmp_path, "pre")
        assert set(snap.files) == {"a.c"}

    def test_nested_and_header(self, tmp_path):
        (tmp_path / "sub").mkdir()
        (tmp_path / "sub" / "b.h").write_text("#define N 3\n")
        snap = load_snapshot(tmp_path, "pre")
        assert set(snap.files) == {"sub/b.h"}

    def test_unreadable_root(self, tmp_path):
        with pytest.raises(OSError):
            load_snapshot(tmp_path / "missing", "pre")

    def test_binary_file_skipped(self, tmp_path):
        (tmp_path / "blob.c").write_bytes(b"\xff\xfe\x00\x80bad")
        (tmp_path / "ok.c").write_text("int x;\n")
        snap = load_snapshot(tmp_path, "pre")
        assert set(snap.files) == {"ok.c"}


class TestDiffLines:
    def test_single_substitution(self):
        deleted, added, line_map = diff_lines(["a", "b"], ["a", "c"])
        assert deleted == [(2, "b")]
        assert added == [(2, "c")]
        assert line_map == [(1, 1)]

    def test_identity(self):
        deleted, added, line_map = diff_lines(["a", "b"], ["a", "b"])
        assert deleted == [] and added == []
        assert line_map == [(1, 1), (2, 2)]

    def test_unique_lcs_against_brute_force(self):
        pre, post = ["a", "b", "c"], ["b"]
        matchings = brute_lcs_matchings(pre, post)
        assert matchings == {((2, 1),)}  # "b" is the unique LCS
        deleted, added, line_map = diff_lines(pre, post)
        assert deleted == [(1, "a"), (3, "c")]
        assert added == []
        assert line_map == [(2, 1)]

    def test_prefers_earlier_pre_match(self):
        # Both "a" and "b" are length-1 LCS solutions; the earlier pre line wins.
        _, _, line_map = diff_lines(["a", "b"], ["b", "a"])
        assert line_map == [(1, 2)]

    @given(pre=lines, post=lines)
    @settings(max_examples=200)
    def test_conservation_and_monotonicity(self, pre, post):
        deleted, added, line_map = diff_lines(pre, post)
        assert len(line_map) + len(deleted) == len(pre)
        assert len(line_map) + len(added) == len(post)
        for (p0, q0), (p1, q1) in zip(line_map, line_map[1:]):
            assert p0 < p1 and q0 < q1
        assert {p for p, _ in line_map}.isdisjoint({p for p, _ in deleted})
        assert {q for _, q in line_map}.isdisjoint({q for q, _ in added})

    @given(pre=lines, post=lines)
    @settings(max_examples=200)
    def test_patch_round_trip(self, pre, post):
        deleted, added, line_map = diff_lines(pre, post)
        mapped = {q: pre[p - 1] for p, q in line_map}
        added_at = {q: text for q, text in added}
        rebuilt = [mapped[q] if q in mapped else added_at[q] for q in range(1, len(post) + 1)]
        assert rebuilt == post
        for p, q in line_map:
            assert pre[p - 1] == post[q - 1]

    @given(pre=small_lines, post=small_lines)
    @settings(max_examples=150)
    def test_optimal_length_and_symmetry(self, pre, post):
        matchings = brute_lcs_matchings(pre, post)
        best = len(next(iter(matchings))) if matchings else 0
        fwd = diff_lines(pre, post)
        rev = diff_lines(post, pre)
        assert len(fwd[2]) == best
        assert tuple(fwd[2]) in matchings
        # Swapping inputs swaps the deleted/added roles; the transpose is
        # exact whenever the LCS is unique (the earlier-pre tie-break is not
        # self-dual on ambiguous inputs).
        assert len(rev[2]) == len(fwd[2])
        assert len(rev[0]) == len(fwd[1]) and len(rev[1]) == len(fwd[0])
        if len(matchings) == 1:
            assert rev[2] == [(q, p) for p, q in fwd[2]]
            assert rev[0] == fwd[1] and rev[1] == fwd[0]


class TestResolveChangeSet:
    def _snaps(self, tmp_path, pre_files, post_files):
        pre_root = tmp_path / "pre"
        post_root = tmp_path / "post"
        for root, files in ((pre_root, pre_files), (post_root, post_files)):
            root.mkdir()
            for rel, text in files.items():
                p = root / rel
                p.parent.mkdir(parents=True, exist_ok=True)
                p.write_text(text)
        return load_snapshot(pre_root, "pre"), load_snapshot(post_root, "post")

    def test_identical_snapshots(self, tmp_path):
        pre, post = self._snaps(tmp_path, {"a.c": "int x;\n"}, {"a.c": "int x;\n"})
        assert resolve_change_set(pre, post).changes == []

    def test_single_line_change(self, tmp_path):
        pre, post = self._snaps(
            tmp_path,
            {"a.c": "int x;\nint y;\n", "b.c": "int k;\n"},
            {"a.c": "int x;\nint z;\n", "b.c": "int k;\n"},
        )
        cs = resolve_change_set(pre, post)
        assert [c.path for c in cs.changes] == ["a.c"]
        assert cs.changes[0].deleted == [(2, "int y;")]
        assert cs.changes[0].added == [(2, "int z;")]

    def test_pure_addition(self, tmp_path):
        pre, post = self._snaps(tmp_path, {}, {"new.c": "int a;\nint b;\n"})
        cs = resolve_change_set(pre, post)
        (change,) = cs.changes
        assert change.deleted == [] and change.line_map == []
        assert change.added == [(1, "int a;"), (2, "int b;")]

    def test_explicit_paths_validated(self, tmp_path):
        pre, post = self._snaps(tmp_path, {"a.c": "int x;\n"}, {"a.c": "int y;\n"})
        with pytest.raises(ValueError, match="ghost.c"):
            resolve_change_set(pre, post, ["ghost.c"])

    def test_explicit_unchanged_excluded(self, tmp_path):
        pre, post = self._snaps(
            tmp_path,
            {"a.c": "int x;\n", "b.c": "int k;\n"},
            {"a.c": "int y;\n", "b.c": "int k;\n"},
        )
        cs = resolve_change_set(pre, post, ["a.c", "b.c"])
        assert [c.path for c in cs.changes] == ["a.c"]
