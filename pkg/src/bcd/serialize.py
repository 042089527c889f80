"""Stable JSON shapes shared by the CLI and the HTTP service.

Key order is part of the contract: tooling golden-files this output.
"""

from __future__ import annotations

import json

from .sim_index import InvertedIndex, MatchResult, SearchReport


def match_to_dict(match: MatchResult, idx: InvertedIndex) -> dict:
    record = idx.functions[match.function_id]
    return {
        "name": match.name,
        "source": match.source,
        "arch": record.arch_tag,
        "score": match.score,
        "matched_hashes": match.matched_hashes,
        "function_id": match.function_id,
    }


def search_report_to_objects(
    report: SearchReport, idx: InvertedIndex, top: int | None = None
) -> list[dict]:
    """One object per query function, in query order; skipped functions last."""
    objects = []
    for name, matches in report.results.items():
        if top is not None:
            matches = matches[:top]
        objects.append(
            {
                "function": name,
                "matches": [match_to_dict(m, idx) for m in matches],
            }
        )
    for name in report.skipped:
        objects.append({"function": name, "skipped": True})
    return objects


def dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), sort_keys=False)
