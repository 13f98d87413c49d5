"""Command-line surface.

Exit codes: 0 success or witness, 1 certified-none, 2 resource-bounded
unknown, 64 usage error, 65 malformed input.  Output is deterministic byte
for byte given identical inputs and flags; wall-clock numbers are never
printed.  Env vars DHL_NODE_BUDGET and DHL_TIME_BUDGET_MS override the
default resource budgets; --threads is accepted as a sharding hint and does
not affect results.
"""

from __future__ import annotations

import argparse
import os
import random
import re
import sys
from fractions import Fraction
from pathlib import Path

from .budget import Budget, BudgetExceeded
from .counterexamples import (
    baire_example,
    cantor_example,
    check_checkpoint_sizes,
    check_perfect,
    verify_no_height2,
)
from .fans import enumerate_fans, theta
from .formats import (
    FormatError,
    SetFile,
    element_text,
    emit_set,
    emit_subtree,
    emit_tree,
    parse_element,
    parse_rational,
    parse_set,
    parse_subtree,
    parse_tree,
    product_from_set_file,
    set_file_from_product,
    subtree_file_from_vector,
    vector_from_subtree_file,
)
from .search import (
    EXHAUSTED,
    UNKNOWN,
    WITNESS,
    Coloring,
    avoidance_extremal,
    dhl_number,
    dhl_witness_search,
    extract_1d,
    hl_search,
)
from .selections import (
    LevelSelection,
    ProductSubset,
    fubini_majority,
    fw_density,
    is_strongly_correlated,
    correlated_set,
    refine_selection,
    section_selection,
)
from .subtrees import (
    VectorStrongSubtree,
    canonical_isomorphism,
    is_vector_strong_subtree_of,
    validate_vector_strong,
)
from .trees import ImplicitTree, LevelSubset, Node, TreeError, node_text, parse_node

EXIT_OK = 0
EXIT_NONE = 1
EXIT_UNKNOWN = 2
EXIT_USAGE = 64
EXIT_DATA = 65


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # noqa: D102 - argparse hook
        raise _UsageError(message)


def _rational(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except FormatError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}") from None


def _budget(args) -> Budget:
    max_nodes = args.max_nodes
    if max_nodes is None:
        max_nodes = int(os.environ.get("DHL_NODE_BUDGET", "5000000"))
    ms = args.time_limit_ms
    if ms is None:
        env = os.environ.get("DHL_TIME_BUDGET_MS")
        ms = int(env) if env else None
    return Budget(max_nodes=max_nodes, max_seconds=ms / 1000 if ms else None)


def _print_subtree(vs: VectorStrongSubtree) -> None:
    sys.stdout.write(emit_subtree(subtree_file_from_vector(vs)))


def _outcome_exit(outcome) -> int:
    if outcome.status == WITNESS:
        return EXIT_OK
    if outcome.status == EXHAUSTED:
        return EXIT_NONE
    return EXIT_UNKNOWN


# ---------------------------------------------------------------- fans

def _cmd_fans_count(args) -> int:
    print(f"theta {theta(args.b, args.n)}")
    return EXIT_OK


def _cmd_fans_enum(args) -> int:
    count = 0
    for fan in enumerate_fans(args.b, args.n, _budget(args)):
        if count:
            print()
        sys.stdout.write(emit_subtree(subtree_file_from_vector(fan)))
        count += 1
    print(f"count {count}")
    return EXIT_OK


# ---------------------------------------------------------------- subtree

def _load_vector(args, path: str) -> VectorStrongSubtree:
    doc = parse_subtree(_read(path))
    hosts = None
    if doc.trees is None:
        if not getattr(args, "tree", None):
            raise FormatError("explicit-host subtree needs --tree")
        hosts = (parse_tree(_read(args.tree)),) * len(doc.nodes)
    return vector_from_subtree_file(doc, hosts)


def _cmd_subtree_validate(args) -> int:
    vs = _load_vector(args, args.infile)
    violations = validate_vector_strong(vs)
    if not violations:
        print("ok")
        return EXIT_OK
    for coord, v in violations:
        where = "-" if coord is None else str(coord)
        node = node_text(v.node) if v.node is not None else "-"
        print(f"violation ({v.condition}) tree {where} node {node}: {v.detail}")
    return EXIT_NONE


def _cmd_subtree_enum(args) -> int:
    from .subtrees import enumerate_strong

    if args.tree:
        hosts = (parse_tree(_read(args.tree)),)
        n = args.max_level if args.max_level is not None else hosts[0].height
    else:
        if not args.b:
            raise _UsageError("need --b or --tree")
        hosts = args.b
        if args.max_level is None:
            raise _UsageError("need --max-level with --b")
        n = args.max_level
    count = 0
    for vs in enumerate_strong(hosts, n, args.height, _budget(args)):
        if count:
            print()
        sys.stdout.write(emit_subtree(subtree_file_from_vector(vs)))
        count += 1
    print(f"count {count}")
    return EXIT_OK


def _cmd_iso(args) -> int:
    a = _load_vector(args, args.a)
    b = _load_vector(args, args.b)
    if a.d != b.d:
        raise FormatError("coordinate count mismatch")
    for i, (x, y) in enumerate(zip(a.trees, b.trees)):
        cm = canonical_isomorphism(x, y)
        for layer in x.nodes:
            for t in layer:
                print(f"tree {i}: {node_text(t)} -> {node_text(cm.apply(t))}")
    return EXIT_OK


# ---------------------------------------------------------------- selections

def _load_selection(args) -> tuple[LevelSelection, ProductSubset]:
    doc = parse_set(_read(args.set))
    if doc.trees is None:
        raise FormatError("selection commands need homogeneous hosts")
    if len(doc.trees) < 2:
        raise FormatError("selection commands need at least two coordinates")
    ps = product_from_set_file(doc)
    return section_selection(ps, len(doc.trees) - 1), ps


def _load_nested_subtree(args, selection: LevelSelection) -> VectorStrongSubtree:
    doc = parse_subtree(_read(args.subtree))
    vs = vector_from_subtree_file(doc)
    if validate_vector_strong(vs):
        raise FormatError("subtree file does not describe a valid subtree")
    if not is_vector_strong_subtree_of(vs, selection.source):
        raise FormatError("subtree does not nest in the selection source")
    return vs


def _cmd_correlate_check(args) -> int:
    d, ps = _load_selection(args)
    r = _load_nested_subtree(args, d)
    w = parse_node(args.w, compact_ok=d.target.b <= 10)
    res = is_strongly_correlated(d, r, w, args.theta)
    if res.ok:
        print("correlated")
        return EXIT_OK
    if res.reason == "C1":
        print("not-correlated C1")
    else:
        print(f"not-correlated fan direction {res.direction} density {res.density}")
        _print_subtree(res.fan)
    return EXIT_NONE


def _cmd_correlate_set(args) -> int:
    d, ps = _load_selection(args)
    r = _load_nested_subtree(args, d)
    g = correlated_set(d, r, args.theta)
    print(f"level {g.level}:" + "".join(" " + node_text(t) for t in g.nodes))
    print(f"size {len(g.nodes)}")
    return EXIT_OK


def _cmd_fubini(args) -> int:
    d, ps = _load_selection(args)
    c = fubini_majority(d, args.eta, args.level)
    print(f"level {c.level}:" + "".join(" " + node_text(t) for t in c.nodes))
    from .trees import density

    print(f"dens {density(c)}")
    return EXIT_OK


def _cmd_refine(args) -> int:
    d, ps = _load_selection(args)
    r = _load_nested_subtree(args, d)
    out = refine_selection(d, r)
    print("levels: " + " ".join(str(l) for l in out.target_levels))
    for j in range(out.height):
        for el in sorted(out.source.level_product(j)):
            ws = sorted(out.section(el))
            print(
                f"D{element_text(el)} ="
                + "".join(" " + node_text(w) for w in ws)
            )
    return EXIT_OK


# ---------------------------------------------------------------- coloring

def parse_coloring(text: str) -> Coloring:
    from .formats import _lines, _parse_trees_header  # shared helpers

    lines = _lines(text)
    if not lines or lines[0].strip() != "dhl-coloring v1":
        raise FormatError("expected 'dhl-coloring v1' header")
    trees = _parse_trees_header(lines[1])
    if trees is None:
        raise FormatError("colorings need homogeneous hosts")
    m = re.match(r"^height:\s*(\d+)$", lines[2])
    if not m:
        raise FormatError("expected 'height:' header")
    height = int(m.group(1))
    cm = re.match(r"^colors:\s*(\d+)$", lines[3])
    if not cm:
        raise FormatError("expected 'colors:' header")
    num_colors = int(cm.group(1))
    compact = all(b <= 10 for b in trees)
    colors = {}
    for line in lines[4:]:
        lm = re.match(r"^level (\d+):(.*)$", line)
        if not lm:
            raise FormatError(f"bad coloring line {line!r}")
        for tok in lm.group(2).split():
            em = re.match(r"^(\(.*\))=(\d+)$", tok)
            if not em:
                raise FormatError(f"bad colored element {tok!r}")
            el = parse_element(em.group(1), len(trees), compact)
            colors[el] = int(em.group(2))
    try:
        return Coloring.create(trees, height, colors, num_colors)
    except TreeError as exc:
        raise FormatError(str(exc)) from None


def emit_coloring(coloring: Coloring) -> str:
    bs = tuple(h.b for h in coloring.hosts)  # type: ignore[union-attr]
    out = [
        "dhl-coloring v1",
        "trees: " + " ".join(str(b) for b in bs),
        f"height: {coloring.height}",
        f"colors: {coloring.num_colors}",
    ]
    import itertools

    for m in range(coloring.height):
        toks = []
        for el in itertools.product(*(h.level_nodes(m) for h in coloring.hosts)):
            toks.append(f"{element_text(el)}={coloring.colors[el]}")
        out.append(f"level {m}: " + " ".join(toks))
    return "\n".join(out) + "\n"


def _random_coloring(bs, height: int, num_colors: int, seed: int) -> Coloring:
    import itertools

    rng = random.Random(seed)
    hosts = tuple(ImplicitTree(b) for b in bs)
    colors = {}
    for m in range(height):
        for el in itertools.product(*(h.level_nodes(m) for h in hosts)):
            colors[el] = rng.randrange(num_colors)
    return Coloring.create(bs, height, colors, num_colors)


def _cmd_hl_search(args) -> int:
    if args.coloring:
        coloring = parse_coloring(_read(args.coloring))
    else:
        if not args.b or args.n is None or args.colors is None:
            raise _UsageError("need --coloring or (--b, --n, --colors)")
        coloring = _random_coloring(args.b, args.n, args.colors, args.seed)
    outcome = hl_search(coloring, args.k, _budget(args))
    print(outcome.status)
    print(f"expanded {outcome.nodes_expanded}")
    if outcome.witness is not None:
        _print_subtree(outcome.witness)
    return _outcome_exit(outcome)


# ---------------------------------------------------------------- dhl

def _cmd_dhl_search(args) -> int:
    doc = parse_set(_read(args.set))
    hosts = None
    if doc.trees is None:
        if not args.tree:
            raise FormatError("explicit-host set needs --tree")
        hosts = (parse_tree(_read(args.tree)),)
    ps = product_from_set_file(doc, hosts)
    outcome = dhl_witness_search(ps, args.k, _budget(args))
    print(outcome.status)
    print(f"expanded {outcome.nodes_expanded}")
    if outcome.witness is not None:
        _print_subtree(outcome.witness)
    return _outcome_exit(outcome)


def _cmd_dhl_extremal(args) -> int:
    result = avoidance_extremal(
        args.b, args.n, args.k, _budget(args), use_symmetry=not args.no_symmetry
    )
    print(f"f {result.value}")
    print("witness:")
    sys.stdout.write(emit_set(set_file_from_product(result.witness)))
    return EXIT_OK


def _cmd_dhl_number(args) -> int:
    result = dhl_number(args.epsilon, args.k, args.b, args.budget_n, _budget(args))
    for n, f in result.table:
        print(f"f({n}) {f}")
    if result.status == "exact":
        print(f"N {result.value}")
        return EXIT_OK
    print(f"N >= {result.value}")
    return EXIT_UNKNOWN


# ---------------------------------------------------------------- extract1d

def _cmd_extract1d(args) -> int:
    doc = parse_set(_read(args.set))
    if doc.trees is None or len(doc.trees) != 1:
        raise FormatError("extract1d needs a one-coordinate homogeneous set")
    host = ImplicitTree(doc.trees[0])
    levels = [
        LevelSubset.create(host, m, (el[0] for el in els))
        for m, els in doc.levels
    ]
    outcome = extract_1d(levels, args.epsilon, args.height, args.w_min, _budget(args))
    print(f"threshold {outcome.detail['threshold']}")
    print(f"window {outcome.detail['window']}")
    for stage in outcome.detail["stages"]:
        thr = stage["threshold"] if stage["threshold"] is not None else "-"
        print(
            f"stage {stage['stage']} level {stage['level']} threshold {thr}"
            f" active {stage['active_after']}"
        )
    if outcome.status == WITNESS:
        print("witness:")
        _print_subtree(outcome.witness)
        return EXIT_OK
    print(
        f"exhausted-none stage {outcome.detail['failed_stage']}"
        f" threshold {outcome.detail['failed_threshold']}"
    )
    return EXIT_NONE


# ---------------------------------------------------------------- cex

def _write_instance(args, instance) -> None:
    if args.out_tree:
        Path(args.out_tree).write_text(emit_tree(instance.tree))
    if args.out_set:
        elements = [(t,) for t in sorted(instance.nodes)]
        levels = sorted({len(t) for t in instance.nodes})
        doc = SetFile(
            None,
            instance.tree.height,
            tuple(
                (m, tuple(sorted((t,) for t in instance.nodes if len(t) == m)))
                for m in levels
            ),
        )
        Path(args.out_set).write_text(emit_set(doc))


def _print_density_checks(instance) -> None:
    for level, bound, actual, ok in instance.check_density_bounds():
        print(f"dens level {level}: {actual} >= {bound} {'ok' if ok else 'FAIL'}")


def _cmd_cex_baire(args) -> int:
    instance = baire_example(args.epsilon, args.depth)
    print("l: " + " ".join(str(l) for l in instance.params["l"]))
    _print_density_checks(instance)
    _write_instance(args, instance)
    return EXIT_OK


def _cmd_cex_cantor(args) -> int:
    instance = cantor_example(args.stages)
    print("l: " + " ".join(str(l) for l in instance.params["l"]))
    print("M: " + " ".join(str(m) for m in instance.params["M"]))
    print(f"sizes {'ok' if check_checkpoint_sizes(instance) else 'FAIL'}")
    _print_density_checks(instance)
    checked, passed = check_perfect(instance)
    print(f"perfect {passed}/{checked}")
    _write_instance(args, instance)
    return EXIT_OK


def _cmd_cex_verify(args) -> int:
    tree = parse_tree(_read(args.tree))
    doc = parse_set(_read(args.set))
    if doc.trees is not None and len(doc.trees) != 1:
        raise FormatError("cex verify needs a one-coordinate set")
    hosts = (tree,)
    ps = product_from_set_file(doc, hosts)
    nodes = frozenset(el[0] for el in ps.elements())
    cert = verify_no_height2(tree, nodes)
    if cert.certified:
        print(f"certified-none height-2 depth {cert.depth}")
        return EXIT_NONE
    print("witness")
    from .subtrees import wrap

    _print_subtree(wrap(cert.witness))
    return EXIT_OK


# ---------------------------------------------------------------- fw

def _cmd_fw(args) -> int:
    doc = parse_set(_read(args.set))
    if doc.trees is not None and len(doc.trees) != 1:
        raise FormatError("fw needs a one-coordinate set")
    nodes = [el[0] for el in doc.all_elements()]
    for report in fw_density(nodes, args.b, args.n_max):
        print(
            f"n {report.level} dbar {report.level_density}"
            f" dstar {report.initial_density} fw {report.chain_average}"
        )
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> _Parser:
    p = _Parser(prog="dhl", description=__doc__)
    p.add_argument("--max-nodes", type=int, default=None)
    p.add_argument("--time-limit-ms", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    sub = p.add_subparsers(dest="command", required=True)

    fans = sub.add_parser("fans").add_subparsers(dest="sub", required=True)
    fc = fans.add_parser("count")
    fc.add_argument("--b", type=int, nargs="+", required=True)
    fc.add_argument("--n", type=int, required=True)
    fc.set_defaults(func=_cmd_fans_count)
    fe = fans.add_parser("enum")
    fe.add_argument("--b", type=int, nargs="+", required=True)
    fe.add_argument("--n", type=int, required=True)
    fe.set_defaults(func=_cmd_fans_enum)

    st = sub.add_parser("subtree").add_subparsers(dest="sub", required=True)
    sv = st.add_parser("validate")
    sv.add_argument("--in", dest="infile", required=True)
    sv.add_argument("--tree")
    sv.set_defaults(func=_cmd_subtree_validate)
    se = st.add_parser("enum")
    se.add_argument("--b", type=int, nargs="+")
    se.add_argument("--tree")
    se.add_argument("--max-level", type=int)
    se.add_argument("--height", type=int, required=True)
    se.set_defaults(func=_cmd_subtree_enum)

    iso = sub.add_parser("iso")
    iso.add_argument("--a", required=True)
    iso.add_argument("--b", required=True)
    iso.add_argument("--tree")
    iso.set_defaults(func=_cmd_iso)

    corr = sub.add_parser("correlate").add_subparsers(dest="sub", required=True)
    cc = corr.add_parser("check")
    cc.add_argument("--set", required=True)
    cc.add_argument("--subtree", required=True)
    cc.add_argument("--w", required=True)
    cc.add_argument("--theta", type=_rational, required=True)
    cc.set_defaults(func=_cmd_correlate_check)
    cs = corr.add_parser("set")
    cs.add_argument("--set", required=True)
    cs.add_argument("--subtree", required=True)
    cs.add_argument("--theta", type=_rational, required=True)
    cs.set_defaults(func=_cmd_correlate_set)

    fub = sub.add_parser("fubini")
    fub.add_argument("--set", required=True)
    fub.add_argument("--eta", type=_rational, required=True)
    fub.add_argument("--level", type=int, required=True)
    fub.set_defaults(func=_cmd_fubini)

    ref = sub.add_parser("refine")
    ref.add_argument("--set", required=True)
    ref.add_argument("--subtree", required=True)
    ref.set_defaults(func=_cmd_refine)

    hl = sub.add_parser("hl").add_subparsers(dest="sub", required=True)
    hs = hl.add_parser("search")
    hs.add_argument("--coloring")
    hs.add_argument("--b", type=int, nargs="+")
    hs.add_argument("--n", type=int)
    hs.add_argument("--colors", type=int)
    hs.add_argument("--seed", type=int, default=0)
    hs.add_argument("--k", type=int, required=True)
    hs.set_defaults(func=_cmd_hl_search)

    dhl = sub.add_parser("dhl").add_subparsers(dest="sub", required=True)
    ds = dhl.add_parser("search")
    ds.add_argument("--set", required=True)
    ds.add_argument("--tree")
    ds.add_argument("--k", type=int, required=True)
    ds.set_defaults(func=_cmd_dhl_search)
    de = dhl.add_parser("extremal")
    de.add_argument("--b", type=int, nargs="+", required=True)
    de.add_argument("--n", type=int, required=True)
    de.add_argument("--k", type=int, required=True)
    de.add_argument("--no-symmetry", action="store_true")
    de.set_defaults(func=_cmd_dhl_extremal)
    dn = dhl.add_parser("number")
    dn.add_argument("--b", type=int, nargs="+", required=True)
    dn.add_argument("--k", type=int, required=True)
    dn.add_argument("--epsilon", type=_rational, required=True)
    dn.add_argument("--budget-n", type=int, required=True)
    dn.set_defaults(func=_cmd_dhl_number)

    ex = sub.add_parser("extract1d")
    ex.add_argument("--set", required=True)
    ex.add_argument("--epsilon", type=_rational, required=True)
    ex.add_argument("--height", type=int, required=True)
    ex.add_argument("--w-min", type=int, default=1)
    ex.set_defaults(func=_cmd_extract1d)

    cex = sub.add_parser("cex").add_subparsers(dest="sub", required=True)
    cb = cex.add_parser("baire")
    cb.add_argument("--epsilon", type=_rational, required=True)
    cb.add_argument("--depth", type=int, required=True)
    cb.add_argument("--out-tree")
    cb.add_argument("--out-set")
    cb.set_defaults(func=_cmd_cex_baire)
    cn = cex.add_parser("cantor")
    cn.add_argument("--stages", type=int, required=True)
    cn.add_argument("--out-tree")
    cn.add_argument("--out-set")
    cn.set_defaults(func=_cmd_cex_cantor)
    cv = cex.add_parser("verify")
    cv.add_argument("--tree", required=True)
    cv.add_argument("--set", required=True)
    cv.set_defaults(func=_cmd_cex_verify)

    fw = sub.add_parser("fw")
    fw.add_argument("--b", type=int, required=True)
    fw.add_argument("--set", required=True)
    fw.add_argument("--n-max", type=int, required=True)
    fw.set_defaults(func=_cmd_fw)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FormatError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TreeError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except BudgetExceeded as exc:
        print("resource-bounded-unknown", file=sys.stderr)
        return EXIT_UNKNOWN


if __name__ == "__main__":
    sys.exit(main())
