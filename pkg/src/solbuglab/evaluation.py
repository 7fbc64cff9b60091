"""Scoring detection tools against a corpus manifest.

A tool is scored only on the bug kinds it claims and only on corpus entries
that exercise one of those kinds. Ratios with a zero denominator stay None
end to end; they are reported as null/n-a, never coerced to 0 or 1.
"""

import json
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from .corpus import CorpusManifest, EntryKind
from .detectors import DETECTABLE_BUG_IDS, detect_all
from .parser import parse_file
from .taxonomy import catalog_ids

CATALOG_SIZE = 49


@dataclass(frozen=True)
class ToolReport:
    """What a tool claims to find, and what it found where.

    findings pair a manifest-relative file path with a bug id.
    """
    tool_name: str
    claims: FrozenSet[str]
    findings: FrozenSet[Tuple[str, str]]


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def precision(self) -> Optional[float]:
        denom = self.tp + self.fp
        return None if denom == 0 else self.tp / denom

    def recall(self) -> Optional[float]:
        denom = self.tp + self.fn
        return None if denom == 0 else self.tp / denom

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


class ReportError(ValueError):
    """An external tool report failed validation."""


def coverage(claims: Iterable[str], warnings: Optional[List[str]] = None) -> float:
    """Share of the catalog the claims cover. Ids outside the catalog do not
    count and are reported through warnings when a list is given."""
    claimed = set(claims)
    known = claimed & catalog_ids()
    unknown = sorted(claimed - known)
    if unknown and warnings is not None:
        warnings.append("claims outside the catalog ignored: %s" % ", ".join(unknown))
    return len(known) / CATALOG_SIZE


def match(tool: ToolReport, manifest: CorpusManifest
          ) -> Tuple[Dict[str, ConfusionCounts], List[str]]:
    """Per-kind confusion counts over the manifest entries in the tool's
    scope. Findings on files the manifest does not list, or for kinds the
    tool does not claim, are excluded with a warning."""
    warnings: List[str] = []
    claims = tool.claims & catalog_ids()
    unknown_claims = sorted(tool.claims - claims)
    if unknown_claims:
        warnings.append("claims outside the catalog ignored: %s"
                        % ", ".join(unknown_claims))

    known_paths = {entry.path for entry in manifest.entries}
    usable: Dict[str, set] = {}
    for file_path, bug_id in sorted(tool.findings):
        if file_path not in known_paths:
            warnings.append("finding on file outside the corpus ignored: %s" % file_path)
        elif bug_id not in claims:
            warnings.append("finding for unclaimed kind ignored: %s on %s"
                            % (bug_id, file_path))
        else:
            usable.setdefault(file_path, set()).add(bug_id)

    counts = {bug_id: ConfusionCounts() for bug_id in sorted(claims)}
    for entry in manifest.entries:
        if not (entry.labels | entry.targets) & claims:
            continue
        reported = usable.get(entry.path, set())
        for bug_id in sorted(claims):
            expected = bug_id in entry.labels
            found = bug_id in reported
            if expected and found:
                counts[bug_id] += ConfusionCounts(tp=1)
            elif expected:
                counts[bug_id] += ConfusionCounts(fn=1)
            elif found:
                counts[bug_id] += ConfusionCounts(fp=1)
    return counts, warnings


def _macro(values: Sequence[Optional[float]]) -> Optional[float]:
    defined = [v for v in values if v is not None]
    return None if not defined else sum(defined) / len(defined)


@dataclass(frozen=True)
class SegmentMetrics:
    name: str
    per_kind: Tuple[Tuple[str, ConfusionCounts], ...]
    micro: ConfusionCounts

    def macro_precision(self) -> Optional[float]:
        return _macro([c.precision() for _, c in self.per_kind])

    def macro_recall(self) -> Optional[float]:
        return _macro([c.recall() for _, c in self.per_kind])


@dataclass(frozen=True)
class MetricsReport:
    tool_name: str
    coverage: float
    segments: Tuple[SegmentMetrics, ...]
    warnings: Tuple[str, ...]

    def segment(self, name: str) -> SegmentMetrics:
        for seg in self.segments:
            if seg.name == name:
                return seg
        raise KeyError(name)

    def to_json(self) -> str:
        doc = {
            "tool_name": self.tool_name,
            "coverage": self.coverage,
            "segments": [
                {
                    "name": seg.name,
                    "kinds": [
                        {"bug_id": bug_id, "tp": c.tp, "fp": c.fp, "fn": c.fn,
                         "precision": c.precision(), "recall": c.recall()}
                        for bug_id, c in seg.per_kind
                    ],
                    "micro": {"tp": seg.micro.tp, "fp": seg.micro.fp,
                              "fn": seg.micro.fn,
                              "precision": seg.micro.precision(),
                              "recall": seg.micro.recall()},
                    "macro": {"precision": seg.macro_precision(),
                              "recall": seg.macro_recall()},
                }
                for seg in self.segments
            ],
            "warnings": list(self.warnings),
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        def show(value: Optional[float]) -> str:
            return "n/a" if value is None else "%.3f" % value

        lines = ["tool: %s  coverage: %.4f" % (self.tool_name, self.coverage)]
        header = "%-12s %-8s %4s %4s %4s %10s %8s" % (
            "segment", "kind", "tp", "fp", "fn", "precision", "recall")
        lines.append(header)
        for seg in self.segments:
            for bug_id, c in seg.per_kind:
                lines.append("%-12s %-8s %4d %4d %4d %10s %8s" % (
                    seg.name, bug_id, c.tp, c.fp, c.fn,
                    show(c.precision()), show(c.recall())))
            c = seg.micro
            lines.append("%-12s %-8s %4d %4d %4d %10s %8s" % (
                seg.name, "micro", c.tp, c.fp, c.fn,
                show(c.precision()), show(c.recall())))
            lines.append("%-12s %-8s %4s %4s %4s %10s %8s" % (
                seg.name, "macro", "", "", "",
                show(seg.macro_precision()), show(seg.macro_recall())))
        for warning in self.warnings:
            lines.append("warning: %s" % warning)
        return "\n".join(lines) + "\n"


def _segment(name: str, tool: ToolReport, manifest: CorpusManifest,
             entries) -> SegmentMetrics:
    sub = CorpusManifest(schema_version=manifest.schema_version,
                         entries=tuple(entries), base_dir=manifest.base_dir)
    counts, _ = match(tool, sub)
    micro = ConfusionCounts()
    for c in counts.values():
        micro += c
    return SegmentMetrics(name=name,
                          per_kind=tuple(sorted(counts.items())),
                          micro=micro)


def evaluate(tool: ToolReport, manifest: CorpusManifest,
             split_crafted: bool = False) -> MetricsReport:
    """Score a tool report. With split_crafted, crafted entries are also
    scored apart from the rest, exposing detectors that only do well on
    straight-line examples."""
    warnings: List[str] = []
    cov = coverage(tool.claims, warnings)
    _, match_warnings = match(tool, manifest)
    warnings.extend(w for w in match_warnings if w not in warnings)

    segments = [_segment("all", tool, manifest, manifest.entries)]
    if split_crafted:
        plain = [e for e in manifest.entries if e.kind is not EntryKind.CRAFTED]
        crafted = [e for e in manifest.entries if e.kind is EntryKind.CRAFTED]
        segments.append(_segment("non-crafted", tool, manifest, plain))
        segments.append(_segment("crafted", tool, manifest, crafted))
    return MetricsReport(tool_name=tool.tool_name,
                         coverage=cov,
                         segments=tuple(segments),
                         warnings=tuple(warnings))


def self_report(manifest: CorpusManifest) -> ToolReport:
    """Run the built-in detectors over every corpus file and package the
    outcome as a tool report."""
    findings = set()
    for entry in manifest.entries:
        model = parse_file(manifest.resolve(entry))
        for finding in detect_all(model):
            findings.add((entry.path, finding.bug_id))
    return ToolReport(tool_name="self",
                      claims=frozenset(DETECTABLE_BUG_IDS),
                      findings=frozenset(findings))


def load_report(path: str) -> ToolReport:
    """Read an external tool report.

    Expected JSON: {"tool_name": ..., "claims": [...], "findings":
    [{"file": ..., "bug_id": ...}]}, plus an optional "id_map" translating
    the tool's native ids to catalog ids. Ids that stay unknown after
    mapping fail validation rather than silently vanishing.
    """
    with open(path, "r", encoding="utf-8") as handle:
        raw = json.load(handle)
    problems: List[str] = []
    tool_name = raw.get("tool_name")
    if not isinstance(tool_name, str) or not tool_name:
        problems.append("tool_name must be a non-empty string")
        tool_name = "<unnamed>"
    id_map = raw.get("id_map", {})
    if not isinstance(id_map, dict):
        problems.append("id_map must be an object")
        id_map = {}
    known = catalog_ids()

    def translate(bug_id, where: str) -> Optional[str]:
        if not isinstance(bug_id, str):
            problems.append("%s: bug id must be a string" % where)
            return None
        mapped = id_map.get(bug_id, bug_id)
        if mapped not in known:
            problems.append("%s: id %r is not in the catalog and has no mapping"
                            % (where, bug_id))
            return None
        return mapped

    claims = set()
    for bug_id in raw.get("claims", []):
        mapped = translate(bug_id, "claims")
        if mapped:
            claims.add(mapped)
    findings = set()
    for index, item in enumerate(raw.get("findings", [])):
        where = "finding %d" % index
        if not isinstance(item, dict) or not isinstance(item.get("file"), str):
            problems.append("%s: needs file and bug_id fields" % where)
            continue
        mapped = translate(item.get("bug_id"), where)
        if mapped:
            findings.add((item["file"], mapped))
    if problems:
        raise ReportError("tool report has %d problem(s):\n  %s"
                          % (len(problems), "\n  ".join(problems)))
    return ToolReport(tool_name=tool_name,
                      claims=frozenset(claims),
                      findings=frozenset(findings))
