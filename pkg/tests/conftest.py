"""Shared fixtures: snapshot pairs and model-ready samples."""

from pathlib import Path

import pytest

from repospd.encoder import extract_change_lines
from repospd.ingest import RepoSnapshot
from repospd.pipeline import build_from_snapshots
from repospd.trainer import Sample


def mem_snapshot(files: dict[str, str], version: str) -> RepoSnapshot:
    return RepoSnapshot(
        root=Path("<mem>"),
        version=version,
        files={path: text.splitlines() for path, text in files.items()},
    )


def build_patch(pre_files: dict[str, str], post_files: dict[str, str], **kwargs):
    return build_from_snapshots(
        mem_snapshot(pre_files, "pre"), mem_snapshot(post_files, "post"), **kwargs
    )


def make_sample(sample_id, pre_files, post_files, label, tag=None, **kwargs) -> Sample:
    result = build_patch(pre_files, post_files, **kwargs)
    return Sample(
        id=sample_id,
        graph=result.graph,
        seq=extract_change_lines(result.change_set),
        label=label,
        tag=tag,
    )


def tiny_corpus() -> list[Sample]:
    """Four deterministic samples: two bounds-check additions calling a repo
    helper (positive), two variable renames (negative)."""
    helper = "int range_ok(int n) {\n    return n < 64;\n}\n"
    samples = []
    for k in range(2):
        pre = {
            "main.c": f"int handle_{k}(int len) {{\n    consume(len);\n    return len;\n}}\n",
            "util.c": helper,
        }
        post = {
            "main.c": (
                f"int handle_{k}(int len) {{\n"
                "    if (range_ok(len) == 0) {\n"
                "        return -1;\n"
                "    }\n"
                "    consume(len);\n"
                "    return len;\n"
                "}\n"
            ),
            "util.c": helper,
        }
        samples.append(make_sample(f"pos{k}", pre, post, 1, tag="bounds"))
    for k in range(2):
        pre = {"main.c": f"int render_{k}(int width) {{\n    int pad = width;\n    return pad;\n}}\n"}
        post = {"main.c": f"int render_{k}(int width) {{\n    int gap = width;\n    return gap;\n}}\n"}
        samples.append(make_sample(f"neg{k}", pre, post, 0, tag="rename"))
    return samples


def write_tree(root: Path, files: dict[str, str]) -> Path:
    root.mkdir(parents=True, exist_ok=True)
    for rel, text in files.items():
        path = root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    return root


@pytest.fixture
def snapshot_pair(tmp_path):
    def make(pre_files: dict[str, str], post_files: dict[str, str]):
        return (
            write_tree(tmp_path / "pre", pre_files),
            write_tree(tmp_path / "post", post_files),
        )

    return make


UTIL_C = (
    "int lookup_entry(int key) {\n"
    "    return key + 1;\n"
    "}\n"
    "\n"
    "int drop_entry_refs(int key) {\n"
    "    int n = release_ref(key);\n"
    "    return n;\n"
    "}\n"
    "\n"
    "int queue_unlock(int key) {\n"
    "    return release_ref(key);\n"
    "}\n"
    "\n"
    "int release_ref(int key) {\n"
    "    return key - 1;\n"
    "}\n"
)

MAIN_PRE = (
    "int request_wait(int key, int flags) {\n"
    "    int ret = lookup_entry(key);\n"
    "    if (flags) {\n"
    "        drop_entry_refs(key);\n"
    "        ret = 0;\n"
    "    }\n"
    "    return ret;\n"
    "}\n"
)

MAIN_POST = (
    "int request_wait(int key, int flags) {\n"
    "    int ret = lookup_entry(key);\n"
    "    if (flags) {\n"
    "        queue_unlock(key);\n"
    "        ret = 0;\n"
    "    }\n"
    "    return ret;\n"
    "}\n"
)


def helper_repo_files() -> tuple[dict[str, str], dict[str, str]]:
    """A changed function whose deleted/added lines call two repo-defined
    helpers; the helpers themselves call a third function (one level deeper)."""
    return (
        {"main.c": MAIN_PRE, "util.c": UTIL_C},
        {"main.c": MAIN_POST, "util.c": UTIL_C},
    )
