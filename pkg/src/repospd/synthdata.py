"""Synthetic labeled patch corpus.

Positive patches insert a size-validation guard whose check function lives
elsewhere in the repository (so the graph gains a repository-level callee
attachment); negative patches are cosmetic refactors (consistent variable
renames).  Surface details (names, literals, filler statements) vary per
sample under the seed.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

_VAR_POOL = ("len", "size", "count", "span", "width")
_AUX_POOL = ("cap", "limit", "budget", "quota")
_FILLERS = ("emit", "consume", "record")


def _write(root: Path, files: dict[str, str]) -> None:
    for rel, text in files.items():
        path = root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)


def _base_body(rng: random.Random, var: str, aux: str) -> list[str]:
    lines = [f"    int total = {var} + {aux};"]
    for _ in range(rng.randint(1, 3)):
        lines.append(f"    {rng.choice(_FILLERS)}(total);")
    if rng.random() < 0.5:
        lines.append(f"    total = total * {rng.randint(2, 5)};")
    lines.append("    return total;")
    return lines


def _positive_patch(rng: random.Random, k: int) -> tuple[dict[str, str], dict[str, str]]:
    var = rng.choice(_VAR_POOL)
    aux = rng.choice(_AUX_POOL)
    helper = f"size_gate_{k}"
    cap = rng.choice((1024, 2048, 4096, 8192))
    util = (
        f"int {helper}(int n) {{\n"
        f"    if (n > {cap}) {{\n"
        "        return 0;\n"
        "    }\n"
        "    return 1;\n"
        "}\n"
    )
    body = _base_body(rng, var, aux)
    fn = f"int process_{k}(int {var}, int {aux}) {{"
    pre_main = "\n".join([fn] + body + ["}"]) + "\n"
    guard = [
        f"    if ({helper}({var}) == 0) {{",
        "        return -1;",
        "    }",
    ]
    post_main = "\n".join([fn] + guard + body + ["}"]) + "\n"
    files = {"util.c": util}
    return {**files, "main.c": pre_main}, {**files, "main.c": post_main}


def _negative_patch(rng: random.Random, k: int) -> tuple[dict[str, str], dict[str, str]]:
    var = rng.choice(_VAR_POOL)
    aux = rng.choice(_AUX_POOL)
    old, new = f"total_{k}", f"acc_{k}"
    fn = f"int render_{k}(int {var}, int {aux}) {{"
    body = [f"    int NAME = {var} + {aux};"]
    for _ in range(rng.randint(1, 3)):
        body.append(f"    {rng.choice(_FILLERS)}(NAME);")
    body.append("    return NAME;")
    pre_main = "\n".join([fn] + [line.replace("NAME", old) for line in body] + ["}"]) + "\n"
    post_main = "\n".join([fn] + [line.replace("NAME", new) for line in body] + ["}"]) + "\n"
    return {"main.c": pre_main}, {"main.c": post_main}


def make_corpus(root: Path | str, n_pos: int = 20, n_neg: int = 20, seed: int = 0) -> Path:
    """Materialize the corpus under `root` and return the JSONL corpus file."""
    root = Path(root)
    rng = random.Random(seed)
    records = []
    for k in range(n_pos):
        pre_files, post_files = _positive_patch(rng, k)
        patch_dir = root / f"patch{k:03d}"
        _write(patch_dir / "pre", pre_files)
        _write(patch_dir / "post", post_files)
        records.append(
            {
                "id": f"patch{k:03d}",
                "label": 1,
                "pre_root": f"patch{k:03d}/pre",
                "post_root": f"patch{k:03d}/post",
                "tag": "size-check",
            }
        )
    for j in range(n_neg):
        k = n_pos + j
        pre_files, post_files = _negative_patch(rng, k)
        patch_dir = root / f"patch{k:03d}"
        _write(patch_dir / "pre", pre_files)
        _write(patch_dir / "post", post_files)
        records.append(
            {
                "id": f"patch{k:03d}",
                "label": 0,
                "pre_root": f"patch{k:03d}/pre",
                "post_root": f"patch{k:03d}/post",
                "tag": "refactor",
            }
        )
    corpus_path = root / "corpus.jsonl"
    with corpus_path.open("w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    return corpus_path
