"""Deterministic report writers (TSV / JSON / Markdown).

Every report embeds the tool version, a config hash, the seed/trials in
effect, and digests of the input files, so identical configurations produce
byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
import os

from . import __version__

FORMATS = ("tsv", "json", "markdown")
_EXT = {"tsv": "tsv", "json": "json", "markdown": "md"}


def config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, ensure_ascii=False, default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def input_digests(root: str | None) -> dict[str, str]:
    digests: dict[str, str] = {}
    if not root or not os.path.isdir(root):
        return digests
    for name in sorted(os.listdir(root)):
        path = os.path.join(root, name)
        if os.path.isfile(path):
            with open(path, "rb") as fh:
                digests[name] = hashlib.sha256(fh.read()).hexdigest()[:16]
    return digests


def build_meta(config: dict, project_root: str | None) -> dict:
    return {
        "tool_version": __version__,
        "config_hash": config_hash(config),
        "seed": config.get("seed"),
        "trials": config.get("trials"),
        "inputs": input_digests(project_root),
    }


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_report(
    out_dir: str,
    name: str,
    columns: list[str],
    rows: list[dict],
    fmt: str,
    meta: dict,
) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"{name}.{_EXT[fmt]}")
    if fmt == "json":
        body = json.dumps(
            {"meta": meta, "columns": columns, "rows": rows},
            indent=2,
            sort_keys=True,
            ensure_ascii=False,
            default=str,
        )
        content = body + "\n"
    elif fmt == "tsv":
        lines = [f"# {k}={json.dumps(v, sort_keys=True, default=str)}" for k, v in sorted(meta.items())]
        lines.append("\t".join(columns))
        for row in rows:
            lines.append("\t".join(_fmt(row.get(c, "")) for c in columns))
        content = "\n".join(lines) + "\n"
    else:
        lines = [f"**{k}**: `{json.dumps(v, sort_keys=True, default=str)}`" for k, v in sorted(meta.items())]
        lines.append("")
        lines.append("| " + " | ".join(columns) + " |")
        lines.append("|" + "|".join("---" for _ in columns) + "|")
        for row in rows:
            lines.append("| " + " | ".join(_fmt(row.get(c, "")) for c in columns) + " |")
        content = "\n".join(lines) + "\n"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(content)
    return path
