"""Rendering of cluster analyses: JSON report, text table, Graphviz DOT."""

from __future__ import annotations

import json
from importlib import resources

from .clusters import Analysis, ClusterPartition
from .graph import node_key, sort_nodes

VERSION = "topoclust-report/1"

# ColorBrewer Set3, 12 classes
PALETTE = (
    "#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3", "#fdb462",
    "#b3de69", "#fccde5", "#d9d9d9", "#bc80bd", "#ccebc5", "#ffed6f",
)


def load_schema() -> dict:
    return json.loads(resources.files("topoclust").joinpath("report.schema.json").read_text(encoding="utf-8"))


def partition_lists(sets) -> list[list[str]]:
    if isinstance(sets, ClusterPartition):
        sets = sets.as_sets()
    lists = [sort_nodes(s) for s in sets]
    return sorted(lists, key=lambda m: node_key(m[0]))


def format_partition(sets) -> str:
    return " ".join("{" + ",".join(m) + "}" for m in partition_lists(sets))


def build_report(a: Analysis, verification: dict | None = None) -> dict:
    g = a.graph
    report = {
        "version": VERSION,
        "nodes": len(g.nodes),
        "edges": len(g.edges),
        "condensation": [
            {"representative": rep, "members": sort_nodes(members)}
            for rep, members in a.condensation.expansion.items()
        ],
        "classification": [],
        "clusters": [
            {"id": k, "cr": c.cr, "members": sort_nodes(c.members), "kind": c.kind.value}
            for k, c in enumerate(a.partition, start=1)
        ],
    }
    for node in a.condensation.condensed.nodes:
        c = a.classification[node]
        entry = {"node": node, "label": c.label.value}
        if c.anchor is not None:
            entry["anchor"] = c.anchor
        report["classification"].append(entry)
    if verification is not None:
        report["verification"] = verification
    return report


def render_json(report: dict) -> str:
    return json.dumps(report, indent=2, ensure_ascii=False) + "\n"


def render_table(partition: ClusterPartition) -> str:
    """Table with one row per cluster: number, CR node, CF nodes."""
    header = ("Cluster no.", "CR node", "CF node")
    rows = [(str(k), c.cr, ", ".join(c.followers) or "-") for k, c in enumerate(partition, start=1)]
    widths = [max(len(r[i]) for r in [header, *rows]) for i in range(3)]

    def line(cells):
        return " | ".join(cell.ljust(w) for cell, w in zip(cells, widths)).rstrip()

    out = [line(header), "-+-".join("-" * w for w in widths)]
    out.extend(line(r) for r in rows)
    return "\n".join(out) + "\n"


def _quote(token: str) -> str:
    return '"' + token.replace("\\", "\\\\").replace('"', '\\"') + '"'


def render_dot(a: Analysis) -> str:
    """DOT digraph; nodes filled by cluster colour, CR nodes double-circled."""
    g = a.graph
    color = {}
    roots = set()
    for k, c in enumerate(a.partition):
        roots.add(c.cr)
        for t in c.members:
            color[t] = PALETTE[k % len(PALETTE)]
    lines = ["digraph topoclust {", "  node [shape=circle, style=filled];"]
    for t in g.nodes:
        attrs = [f'fillcolor="{color[t]}"']
        if t in roots:
            attrs.append("peripheries=2")
        lines.append(f"  {_quote(t)} [{', '.join(attrs)}];")
    for e in g.edges:
        attr = "" if e.weight == 1.0 else f' [label="{e.weight:g}"]'
        lines.append(f"  {_quote(e.source)} -> {_quote(e.target)}{attr};")
    lines.append("}")
    return "\n".join(lines) + "\n"
