"""Snapshot loading and line-level diffing for pre/post patch pairs.

A patch is represented by two materialized directory trees (the state of the
repository immediately before and after the commit).  Diffing is an exact
longest-common-subsequence over lines; the resulting line map drives both
graph merging and the sequence branch.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

SOURCE_SUFFIXES = (".c", ".h")


@dataclass(frozen=True)
class RepoSnapshot:
    """One version of a repository: relative path -> list of source lines."""

    root: Path
    version: str  # "pre" | "post"
    files: dict[str, list[str]]


@dataclass(frozen=True)
class FileChange:
    """Line-level diff of one file.

    `deleted` and `added` carry 1-based line numbers in the pre and post file
    respectively; `line_map` pairs unchanged lines and is strictly increasing
    in both coordinates.
    """

    path: str
    deleted: list[tuple[int, str]]
    added: list[tuple[int, str]]
    line_map: list[tuple[int, int]]


@dataclass(frozen=True)
class ChangeSet:
    changes: list[FileChange]
    pre: RepoSnapshot
    post: RepoSnapshot


def load_snapshot(root: Path | str, version: str) -> RepoSnapshot:
    """Load every `.c`/`.h` file under `root` into memory, split into lines.

    Non-source files are ignored; undecodable files are skipped with a
    warning rather than aborting the load.
    """
    root = Path(root)
    if not root.is_dir():
        raise OSError(f"snapshot root is not a readable directory: {root}")
    files: dict[str, list[str]] = {}
    for path in sorted(root.rglob("*")):
        if not path.is_file() or path.suffix not in SOURCE_SUFFIXES:
            continue
        try:
            text = path.read_text(encoding="utf-8")
        except UnicodeDecodeError:
            log.warning("skipping non-text file %s", path)
            continue
        files[path.relative_to(root).as_posix()] = text.splitlines()
    return RepoSnapshot(root=root, version=version, files=files)


def _lcs_suffix_table(a: list[int], b: list[int]) -> np.ndarray:
    """S[i, j] = length of the LCS of a[i:] and b[j:]."""
    n, m = len(a), len(b)
    table = np.zeros((n + 1, m + 1), dtype=np.int32)
    if m == 0:
        return table
    b_arr = np.asarray(b, dtype=np.int64)
    for i in range(n - 1, -1, -1):
        nxt = table[i + 1]
        # S[i, j] = max over k >= j of max(S[i+1, k], S[i+1, k+1] + eq(i, k))
        cand = np.maximum(nxt[:-1], nxt[1:] + (b_arr == a[i]))
        table[i, :m] = np.maximum.accumulate(cand[::-1])[::-1]
    return table


def diff_lines(
    pre_lines: list[str], post_lines: list[str]
) -> tuple[list[tuple[int, str]], list[tuple[int, str]], list[tuple[int, int]]]:
    """Exact LCS line diff.

    Returns (deleted, added, line_map).  When several LCS solutions exist, the
    walk below prefers matches that occur earlier in the pre file: at each
    ambiguity it advances the post cursor first, keeping the current pre line
    available for matching.
    """
    n, m = len(pre_lines), len(post_lines)
    # Trim the common prefix/suffix before the quadratic DP; real patches
    # share almost all lines.
    lo = 0
    while lo < n and lo < m and pre_lines[lo] == post_lines[lo]:
        lo += 1
    hi = 0
    while hi < n - lo and hi < m - lo and pre_lines[n - 1 - hi] == post_lines[m - 1 - hi]:
        hi += 1

    interned: dict[str, int] = {}
    a = [interned.setdefault(s, len(interned)) for s in pre_lines[lo : n - hi]]
    b = [interned.setdefault(s, len(interned)) for s in post_lines[lo : m - hi]]

    table = _lcs_suffix_table(a, b)
    line_map = [(k + 1, k + 1) for k in range(lo)]
    i = j = 0
    while i < len(a) and j < len(b):
        if a[i] == b[j] and table[i + 1, j + 1] + 1 == table[i, j]:
            line_map.append((lo + i + 1, lo + j + 1))
            i += 1
            j += 1
        elif table[i, j + 1] == table[i, j]:
            j += 1
        else:
            i += 1
    for k in range(hi):
        line_map.append((n - hi + k + 1, m - hi + k + 1))

    mapped_pre = {p for p, _ in line_map}
    mapped_post = {q for _, q in line_map}
    deleted = [(k + 1, pre_lines[k]) for k in range(n) if k + 1 not in mapped_pre]
    added = [(k + 1, post_lines[k]) for k in range(m) if k + 1 not in mapped_post]
    return deleted, added, line_map


def resolve_change_set(
    pre: RepoSnapshot,
    post: RepoSnapshot,
    changed_paths: list[str] | None = None,
) -> ChangeSet:
    """Diff the two snapshots into a ChangeSet.

    With no explicit path list, every path whose content differs between the
    snapshots (including paths present in only one) is diffed.  Explicitly
    listed paths must exist in at least one snapshot; listed paths with equal
    content are excluded.
    """
    if changed_paths is None:
        candidates = sorted(set(pre.files) | set(post.files))
    else:
        for path in changed_paths:
            if path not in pre.files and path not in post.files:
                raise ValueError(f"changed path not present in either snapshot: {path}")
        candidates = list(changed_paths)

    changes = []
    for path in candidates:
        pre_lines = pre.files.get(path, [])
        post_lines = post.files.get(path, [])
        if pre_lines == post_lines:
            continue
        deleted, added, line_map = diff_lines(pre_lines, post_lines)
        changes.append(FileChange(path=path, deleted=deleted, added=added, line_map=line_map))
    return ChangeSet(changes=changes, pre=pre, post=post)
