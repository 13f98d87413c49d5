"""Frozen, versioned text formats: dhl-set v1, dhl-subtree v1, dhl-tree v1.

Emission is canonical (sorted, single spacing, no comments) so identical
values produce identical bytes; parsers ignore blank lines and '#' comments
and reject unknown versions.  Rationals read and print reduced as "p/q",
integers as "p".

The ``trees:`` header carries the branching numbers of implicit homogeneous
hosts, or the word "explicit" when the nodes belong to an explicit tree
shipped separately in the dhl-tree format; in the explicit case nodes are
validated when the document is bound to its tree.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .selections import Element, ProductSubset
from .subtrees import StrongSubtree, VectorStrongSubtree
from .trees import (
    ExplicitTree,
    ImplicitTree,
    Node,
    Tree,
    TreeError,
    node_text,
    parse_node,
)


class FormatError(ValueError):
    """Malformed or wrong-version input document."""


_RATIONAL_RE = re.compile(r"^-?\d+(/\d+)?$")


def parse_rational(text: str) -> Fraction:
    t = text.strip()
    if not _RATIONAL_RE.match(t):
        raise FormatError(f"not a rational: {text!r}")
    return Fraction(t)


def rational_text(value: Fraction) -> str:
    return str(value)


def _lines(text: str) -> list[str]:
    out = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].rstrip()
        if line.strip():
            out.append(line)
    return out


def _parse_trees_header(line: str) -> tuple[int, ...] | None:
    m = re.match(r"^trees:\s*(.+)$", line)
    if not m:
        raise FormatError(f"expected 'trees:' header, got {line!r}")
    body = m.group(1).strip()
    if body == "explicit":
        return None
    try:
        return tuple(int(tok) for tok in body.split())
    except ValueError:
        raise FormatError(f"bad trees header {line!r}") from None


def _trees_header(trees: tuple[int, ...] | None) -> str:
    if trees is None:
        return "trees: explicit"
    return "trees: " + " ".join(str(b) for b in trees)


def _compact_ok(trees: tuple[int, ...] | None) -> bool:
    return trees is not None and all(b <= 10 for b in trees)


def element_text(el: Element) -> str:
    return "(" + "|".join(node_text(t) for t in el) + ")"


def parse_element(text: str, arity: int, compact_ok: bool) -> Element:
    t = text.strip()
    if not (t.startswith("(") and t.endswith(")")):
        raise FormatError(f"bad element {text!r}")
    parts = t[1:-1].split("|")
    if len(parts) != arity:
        raise FormatError(f"element {text!r} has arity {len(parts)}, expected {arity}")
    try:
        return tuple(parse_node(p, compact_ok) for p in parts)
    except TreeError as exc:
        raise FormatError(str(exc)) from None


@dataclass(frozen=True)
class SetFile:
    """A dhl-set document: elements of a level product, sparse by level."""

    trees: tuple[int, ...] | None
    height: int
    levels: tuple[tuple[int, tuple[Element, ...]], ...]  # (level, sorted elements)

    @property
    def arity(self) -> int:
        if self.trees is not None:
            return len(self.trees)
        return 1

    def present_levels(self) -> tuple[int, ...]:
        return tuple(m for m, _ in self.levels)

    def elements_at(self, m: int) -> tuple[Element, ...]:
        for lv, els in self.levels:
            if lv == m:
                return els
        return ()

    def all_elements(self):
        for _, els in self.levels:
            yield from els


def emit_set(doc: SetFile) -> str:
    out = ["dhl-set v1", _trees_header(doc.trees), f"height: {doc.height}"]
    for m, els in doc.levels:
        out.append(f"level {m}:" + "".join(" " + element_text(e) for e in els))
    return "\n".join(out) + "\n"


def parse_set(text: str) -> SetFile:
    lines = _lines(text)
    if not lines or lines[0].strip() != "dhl-set v1":
        raise FormatError("expected 'dhl-set v1' header")
    if len(lines) < 3:
        raise FormatError("truncated set document")
    trees = _parse_trees_header(lines[1])
    m = re.match(r"^height:\s*(\d+)$", lines[2])
    if not m:
        raise FormatError(f"expected 'height:' header, got {lines[2]!r}")
    height = int(m.group(1))
    arity = len(trees) if trees is not None else 1
    compact = _compact_ok(trees)
    levels: list[tuple[int, tuple[Element, ...]]] = []
    seen: set[int] = set()
    for line in lines[3:]:
        lm = re.match(r"^level (\d+):(.*)$", line)
        if not lm:
            raise FormatError(f"bad set line {line!r}")
        lv = int(lm.group(1))
        if lv in seen:
            raise FormatError(f"duplicate level {lv}")
        if not 0 <= lv < height:
            raise FormatError(f"level {lv} out of range")
        seen.add(lv)
        toks = lm.group(2).split()
        els = tuple(sorted(parse_element(tok, arity, compact) for tok in toks))
        for el in els:
            if any(len(t) != lv for t in el):
                raise FormatError(f"element {element_text(el)} not on level {lv}")
        levels.append((lv, els))
    levels.sort()
    return SetFile(trees, height, tuple(levels))


def set_file_from_product(ps: ProductSubset) -> SetFile:
    trees: tuple[int, ...] | None
    if all(isinstance(h, ImplicitTree) for h in ps.hosts):
        trees = tuple(h.b for h in ps.hosts)  # type: ignore[union-attr]
    else:
        trees = None
    levels = tuple(
        (m, tuple(sorted(ps.levels[m])))
        for m in range(ps.height)
        if ps.levels[m]
    )
    return SetFile(trees, ps.height, levels)


def product_from_set_file(doc: SetFile, hosts: tuple[Tree, ...] | None = None) -> ProductSubset:
    if hosts is None:
        if doc.trees is None:
            raise FormatError("explicit-host set needs its tree supplied")
        hosts = tuple(ImplicitTree(b) for b in doc.trees)
    try:
        return ProductSubset.create(hosts, doc.height, doc.all_elements())
    except TreeError as exc:
        raise FormatError(str(exc)) from None


@dataclass(frozen=True)
class SubtreeFile:
    trees: tuple[int, ...] | None
    levelset: tuple[int, ...]
    nodes: tuple[tuple[tuple[Node, ...], ...], ...]  # [tree][level] -> sorted nodes


def emit_subtree(doc: SubtreeFile) -> str:
    out = ["dhl-subtree v1", _trees_header(doc.trees)]
    out.append("levelset: " + " ".join(str(l) for l in doc.levelset))
    for i, layers in enumerate(doc.nodes):
        for j, layer in enumerate(layers):
            out.append(
                f"tree {i} level {j}:" + "".join(" " + node_text(t) for t in layer)
            )
    return "\n".join(out) + "\n"


def parse_subtree(text: str) -> SubtreeFile:
    lines = _lines(text)
    if not lines or lines[0].strip() != "dhl-subtree v1":
        raise FormatError("expected 'dhl-subtree v1' header")
    if len(lines) < 3:
        raise FormatError("truncated subtree document")
    trees = _parse_trees_header(lines[1])
    m = re.match(r"^levelset:\s*(.*)$", lines[2])
    if not m:
        raise FormatError(f"expected 'levelset:' header, got {lines[2]!r}")
    try:
        levelset = tuple(int(tok) for tok in m.group(1).split())
    except ValueError:
        raise FormatError("bad levelset") from None
    if not levelset:
        raise FormatError("empty levelset")
    compact = _compact_ok(trees)
    arity = len(trees) if trees is not None else 1
    layers: dict[tuple[int, int], tuple[Node, ...]] = {}
    for line in lines[3:]:
        lm = re.match(r"^tree (\d+) level (\d+):(.*)$", line)
        if not lm:
            raise FormatError(f"bad subtree line {line!r}")
        i, j = int(lm.group(1)), int(lm.group(2))
        if i >= arity or j >= len(levelset):
            raise FormatError(f"tree/level index out of range in {line!r}")
        if (i, j) in layers:
            raise FormatError(f"duplicate layer in {line!r}")
        toks = lm.group(3).split()
        try:
            layer = tuple(sorted(parse_node(tok, compact) for tok in toks))
        except TreeError as exc:
            raise FormatError(str(exc)) from None
        layers[(i, j)] = layer
    nodes = []
    for i in range(arity):
        per = []
        for j in range(len(levelset)):
            if (i, j) not in layers:
                raise FormatError(f"missing layer tree {i} level {j}")
            per.append(layers[(i, j)])
        nodes.append(tuple(per))
    return SubtreeFile(trees, levelset, tuple(nodes))


def subtree_file_from_vector(vs: VectorStrongSubtree) -> SubtreeFile:
    trees: tuple[int, ...] | None
    if all(isinstance(t.host, ImplicitTree) for t in vs.trees):
        trees = tuple(t.host.b for t in vs.trees)  # type: ignore[union-attr]
    else:
        trees = None
    return SubtreeFile(trees, vs.levels, tuple(t.nodes for t in vs.trees))


def vector_from_subtree_file(
    doc: SubtreeFile, hosts: tuple[Tree, ...] | None = None
) -> VectorStrongSubtree:
    if hosts is None:
        if doc.trees is None:
            raise FormatError("explicit-host subtree needs its tree supplied")
        hosts = tuple(ImplicitTree(b) for b in doc.trees)
    if len(hosts) != len(doc.nodes):
        raise FormatError("host count does not match document")
    return VectorStrongSubtree(
        tuple(
            StrongSubtree(host, doc.levelset, layers)
            for host, layers in zip(hosts, doc.nodes)
        )
    )


def emit_tree(tree: ExplicitTree) -> str:
    out = ["dhl-tree v1", f"height: {tree.height}"]
    for n, row in enumerate(tree.counts):
        out.append(f"level {n}:" + "".join(" " + str(c) for c in row))
    return "\n".join(out) + "\n"


def parse_tree(text: str) -> ExplicitTree:
    lines = _lines(text)
    if not lines or lines[0].strip() != "dhl-tree v1":
        raise FormatError("expected 'dhl-tree v1' header")
    if len(lines) < 2:
        raise FormatError("truncated tree document")
    m = re.match(r"^height:\s*(\d+)$", lines[1])
    if not m:
        raise FormatError(f"expected 'height:' header, got {lines[1]!r}")
    height = int(m.group(1))
    rows: dict[int, tuple[int, ...]] = {}
    for line in lines[2:]:
        lm = re.match(r"^level (\d+):(.*)$", line)
        if not lm:
            raise FormatError(f"bad tree line {line!r}")
        lv = int(lm.group(1))
        if lv in rows:
            raise FormatError(f"duplicate level {lv}")
        if not 0 <= lv < height:
            raise FormatError(f"level {lv} out of range")
        try:
            rows[lv] = tuple(int(tok) for tok in lm.group(2).split())
        except ValueError:
            raise FormatError(f"bad child count in {line!r}") from None
    if sorted(rows) != list(range(height)):
        raise FormatError("tree document must list every level once")
    try:
        return ExplicitTree([rows[n] for n in range(height)])
    except TreeError as exc:
        raise FormatError(str(exc)) from None
