"""Dependency-bearing markup tags and URL resolution.

A small rule table maps markup tags and their URL-carrying attributes to
edge kinds: a form submits to its action target, include/forward tags pull
other pages in, anchors link out, error-page declarations name a fallback
page.  The scanner applies those rules to raw page text and — for the two
rules a server component can emit through its output stream — to string
literals reassembled from write calls in ordinary classes.

Resolution normalizes each attribute value to an absolute URL path
(query string and fragment stripped, relative paths joined to the
containing page's directory) and looks it up in the URL mapping table.
"""

from __future__ import annotations

import json
import posixpath
import re
from bisect import bisect_right
from dataclasses import dataclass, replace

from webdeps.diagnostics import DiagnosticSink
from webdeps.config import UrlMappingTable
from webdeps.graph import (
    Analyzer,
    DependencyGraph,
    Provenance,
    Relationship,
    RelationshipKind,
    SourceLocation,
    unresolved_ref,
)
from webdeps.oo.extract import HOLE_MARKER, StringWriteSite


@dataclass(frozen=True)
class TagRule:
    """One scanning rule: this tag's attribute produces that edge kind."""

    tag: str
    attribute: str
    kind: RelationshipKind
    metadata: tuple[str, ...] = ()


#: The built-in rule table.  ``%@name`` selects the in-line directive form,
#: ``jsp:directive.name`` its element form; everything else is an element
#: name matched case-insensitively.
BUILTIN_RULES: tuple[TagRule, ...] = (
    TagRule("form", "action", RelationshipKind.FORWARDS_TO, metadata=("method",)),
    TagRule("jsp:include", "page", RelationshipKind.INCLUDES),
    TagRule("%@include", "file", RelationshipKind.INCLUDES),
    TagRule("jsp:directive.include", "file", RelationshipKind.INCLUDES),
    TagRule("jsp:forward", "page", RelationshipKind.FORWARDS_TO),
    TagRule("%@page", "errorPage", RelationshipKind.ERROR_PAGE),
    TagRule("jsp:directive.page", "errorPage", RelationshipKind.ERROR_PAGE),
    TagRule("a", "href", RelationshipKind.LINKS_TO),
    TagRule("c:redirect", "url", RelationshipKind.FORWARDS_TO),
    TagRule("c:url", "value", RelationshipKind.LINKS_TO),
)

#: Rules that also apply inside output-stream string literals: a server
#: component can emit a form or an anchor, and the container hands both to
#: the client exactly as a page would.
WRITE_SITE_TAGS = frozenset(("form", "a"))

_RULE_KINDS = {
    "Includes": RelationshipKind.INCLUDES,
    "ForwardsTo": RelationshipKind.FORWARDS_TO,
    "LinksTo": RelationshipKind.LINKS_TO,
    "ErrorPage": RelationshipKind.ERROR_PAGE,
    "Calls": RelationshipKind.CALLS,
}


def load_tag_rules(text: str) -> tuple[TagRule, ...]:
    """Parse an extra-rules file: a Json array of {tag, attribute, kind}."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"tag-rules file is not valid Json: {exc}") from exc
    if not isinstance(raw, list):
        raise ValueError("tag-rules file must be a Json array")
    rules = []
    for row in raw:
        if not isinstance(row, dict):
            raise ValueError("tag-rules entries must be objects")
        try:
            tag, attribute, kind = row["tag"], row["attribute"], row["kind"]
        except KeyError as exc:
            raise ValueError(f"tag-rules entry missing {exc}") from exc
        if kind not in _RULE_KINDS:
            raise ValueError(
                f"unknown edge kind {kind!r}; expected one of "
                f"{sorted(_RULE_KINDS)}"
            )
        rules.append(TagRule(str(tag), str(attribute), _RULE_KINDS[kind]))
    return tuple(rules)


@dataclass(frozen=True)
class TagHit:
    """One matched rule occurrence: the verbatim attribute value."""

    rule: TagRule
    value: str
    path: str
    line: int
    column: int
    container: str = ""  # entity id of the page/method the hit belongs to
    base_dir: str = ""   # web-root-relative directory for relative URLs
    metadata: tuple[tuple[str, str], ...] = ()


_COMMENT_SPANS = re.compile(r"<%--.*?(?:--%>|\Z)|<!--.*?(?:-->|\Z)", re.DOTALL)


def mask_comments(text: str) -> str:
    """Blank out commented regions, preserving length and line structure."""

    def blank(m: re.Match) -> str:
        return "".join("\n" if ch == "\n" else " " for ch in m.group(0))

    return _COMMENT_SPANS.sub(blank, text)


_ATTR_CHUNK = "(?:\"[^\"]*\"|'[^']*'|[^>\"'])*"


def _rule_pattern(rule: TagRule) -> re.Pattern:
    if rule.tag.startswith("%@"):
        name = re.escape(rule.tag[2:])
        body = rf"<%@\s*{name}\b(?P<attrs>.*?)%>"
    else:
        name = re.escape(rule.tag)
        body = rf"<\s*{name}\b(?P<attrs>{_ATTR_CHUNK})"
    return re.compile(body, re.IGNORECASE | re.DOTALL)


def _attr_pattern(name: str) -> re.Pattern:
    return re.compile(
        rf"\b{re.escape(name)}\s*=\s*(\"(?P<dq>[^\"]*)\"|'(?P<sq>[^']*)')",
        re.IGNORECASE,
    )


class _LineIndex:
    def __init__(self, text: str) -> None:
        self._starts = [0]
        start = 0
        while True:
            newline = text.find("\n", start)
            if newline < 0:
                break
            start = newline + 1
            self._starts.append(start)

    def locate(self, offset: int) -> tuple[int, int]:
        row = bisect_right(self._starts, offset) - 1
        return row + 1, offset - self._starts[row] + 1


def scan_markup(text: str, path: str,
                rules: tuple[TagRule, ...] = BUILTIN_RULES,
                ) -> list[TagHit]:
    """Find every rule occurrence in markup text.

    Tag and attribute names match case-insensitively and either quote
    style; commented-out regions never produce hits.  Hit positions point
    at the attribute value.  Container attribution is filled in by the
    caller, which knows what entity the text belongs to.
    """
    masked = mask_comments(text)
    index = _LineIndex(masked)
    hits: list[TagHit] = []
    for rule in rules:
        tag_pattern = _rule_pattern(rule)
        attr_pattern = _attr_pattern(rule.attribute)
        for tag_match in tag_pattern.finditer(masked):
            chunk = tag_match.group("attrs")
            attr_match = attr_pattern.search(chunk)
            if attr_match is None:
                continue
            value = attr_match.group("dq")
            if value is None:
                value = attr_match.group("sq")
            value_offset = (tag_match.start("attrs")
                            + attr_match.end() - len(value) - 1)
            line, column = index.locate(value_offset)
            metadata = []
            for extra in rule.metadata:
                extra_match = _attr_pattern(extra).search(chunk)
                if extra_match is not None:
                    extra_value = extra_match.group("dq")
                    if extra_value is None:
                        extra_value = extra_match.group("sq")
                    metadata.append((extra, extra_value))
            hits.append(
                TagHit(
                    rule=rule, value=value, path=path,
                    line=line, column=column, metadata=tuple(metadata),
                )
            )
    hits.sort(key=lambda hit: (hit.line, hit.column,
                               hit.rule.tag, hit.rule.attribute))
    return hits


def scan_write_sites(site: StringWriteSite,
                     rules: tuple[TagRule, ...] = BUILTIN_RULES,
                     ) -> list[TagHit]:
    """Apply the output-stream subset of the rules to one write site.

    Positions are expressed in the owning source file, mapped through the
    site's fragment layout; a value that overlaps a non-literal hole is
    kept verbatim (it still carries the marker) so resolution can report
    it as dynamic.
    """
    applicable = tuple(rule for rule in rules if rule.tag in WRITE_SITE_TAGS)
    text = site.text
    masked = mask_comments(text)
    hits: list[TagHit] = []
    for rule in applicable:
        tag_pattern = _rule_pattern(rule)
        attr_pattern = _attr_pattern(rule.attribute)
        for tag_match in tag_pattern.finditer(masked):
            chunk = tag_match.group("attrs")
            attr_match = attr_pattern.search(chunk)
            if attr_match is None:
                continue
            value = attr_match.group("dq")
            if value is None:
                value = attr_match.group("sq")
            value_offset = (tag_match.start("attrs")
                            + attr_match.end() - len(value) - 1)
            line, column, in_hole = site.position_of(value_offset)
            if in_hole:
                value = HOLE_MARKER + value
            metadata = []
            for extra in rule.metadata:
                extra_match = _attr_pattern(extra).search(chunk)
                if extra_match is not None:
                    extra_value = extra_match.group("dq")
                    if extra_value is None:
                        extra_value = extra_match.group("sq")
                    metadata.append((extra, extra_value))
            hits.append(
                TagHit(
                    rule=rule, value=value, path=site.path,
                    line=line, column=column, metadata=tuple(metadata),
                )
            )
    hits.sort(key=lambda hit: (hit.line, hit.column,
                               hit.rule.tag, hit.rule.attribute))
    return hits


_SCHEME = re.compile(r"^[A-Za-z][A-Za-z0-9+.-]*:")


def normalize_url(value: str, base_dir: str = "") -> str:
    """Canonical URL path for an attribute value.

    Fragments and query strings are dropped; values carrying a scheme
    (``http:``, ``mailto:`` ...) pass through untouched; absolute paths are
    normalized as-is; relative paths resolve against *base_dir* (the
    containing page's web-root-relative directory).  Idempotent.
    """
    trimmed = value.strip()
    for separator in ("#", "?"):
        cut = trimmed.find(separator)
        if cut >= 0:
            trimmed = trimmed[:cut]
    if not trimmed:
        return ""
    if _SCHEME.match(trimmed):
        return trimmed
    if trimmed.startswith("/"):
        return posixpath.normpath(trimmed)
    return posixpath.normpath(posixpath.join("/", base_dir, trimmed))


def resolve_hits(hits: list[TagHit], mapping: UrlMappingTable,
                 graph: DependencyGraph, sink: DiagnosticSink) -> None:
    """Turn hits into edges against the URL mapping table.

    Values containing expression-language markers are left to the
    expression analyzer; values assembled around a non-literal hole are
    dynamic and only produce a diagnostic.  A URL that maps to nothing
    becomes an edge to an unresolved placeholder, so the seal policy
    decides whether it survives.
    """
    for hit in hits:
        if "${" in hit.value or "#{" in hit.value:
            continue
        if HOLE_MARKER in hit.value or "<%" in hit.value:
            sink.warn(
                f"dynamic {hit.rule.tag} {hit.rule.attribute} value; "
                f"dependency unknown",
                hit.path, hit.line,
            )
            continue
        url = normalize_url(hit.value, hit.base_dir)
        if not url:
            continue
        note = f'{hit.rule.tag} {hit.rule.attribute}="{hit.value}"'
        for name, value in hit.metadata:
            note += f' {name}="{value}"'
        target = mapping.lookup(url) if url.startswith("/") else None
        evidence = Provenance(
            analyzer=Analyzer.TAGS,
            location=SourceLocation(hit.path, hit.line, hit.column),
            note=note,
        )
        if target is None:
            sink.warn(
                f"{hit.rule.tag} {hit.rule.attribute}={hit.value!r} does "
                f"not resolve to an analyzed file",
                hit.path, hit.line,
            )
            target = unresolved_ref(url)
            graph.add_relationship(
                Relationship(source=hit.container, target=target,
                             kind=hit.rule.kind, evidence=evidence,
                             target_hint=url)
            )
            continue
        graph.add_relationship(
            Relationship(source=hit.container, target=target,
                         kind=hit.rule.kind, evidence=evidence)
        )


def attribute_hits(hits: list[TagHit], container: str, base_dir: str
                   ) -> list[TagHit]:
    """Copies of *hits* bound to a container entity and its directory."""
    return [replace(hit, container=container, base_dir=base_dir)
            for hit in hits]
