"""Command line front end: build, verify, export, stats.

    polylift build yannakakis --graph p3.json -o ef.json
    polylift verify sandwich --graph p3.json --ef ef.json
    polylift export lp --ef ef.json -o ef.lp
    polylift stats --ef ef.json

Exit codes: 0 on success (and on passing verification), 1 when a
verification report fails, 2 for malformed inputs or bad usage.
"""

from __future__ import annotations

import argparse
import json
import sys

from .formulation import (
    Formulation,
    formulation_from_json,
    formulation_from_lp,
    formulation_to_json,
    formulation_to_lp,
    size_metrics,
)
from .graphs import Graph, Poset, graph_from_text
from .protocol import ProtocolTree, compile_tree, protocol_from_json, protocol_to_json
from .yannakakis import build_stab_qstab_ef
from .decomposition import (
    build_general_tree,
    build_threshold_tree,
    compile_decomposition,
    decomposition_census,
)
from .special import (
    MinUpDownInstance,
    clawfree_full_ef,
    clawfree_reduced_ef,
    comparability_full_ef,
    comparability_reduced_ef,
    mud_ef,
)
from .unambiguous import RectanglePartition, compile_unambiguous
from .verify import (
    PolytopePair,
    Report,
    check_sandwich,
    projections_agree,
    slack_matrix,
    stab_qstab_pair,
    verify_partition,
)

__all__ = ["main", "dispatch"]


class InputError(ValueError):
    """Unreadable or malformed input file; maps to exit code 2."""


def _read_text(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return handle.read()
    except OSError as exc:
        raise InputError("cannot read %s: %s" % (path, exc.strerror)) from exc


def _read_json(path: str) -> dict:
    text = _read_text(path)
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError("%s is not valid JSON: %s" % (path, exc)) from exc
    if not isinstance(obj, dict):
        raise InputError("%s: expected a JSON object at top level" % path)
    return obj


def _load_graph(path: str) -> Graph:
    try:
        return graph_from_text(_read_text(path))
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError("bad graph file %s: %s" % (path, exc)) from exc


def _load_poset(path: str) -> Poset:
    try:
        return Poset.from_json(_read_json(path))
    except InputError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError("bad poset file %s: %s" % (path, exc)) from exc


def _load_formulation(path: str) -> Formulation:
    text = _read_text(path)
    try:
        if text.lstrip().startswith("{"):
            return formulation_from_json(json.loads(text))
        return formulation_from_lp(text)
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError("bad formulation file %s: %s" % (path, exc)) from exc


def _load_pair(path: str) -> PolytopePair:
    try:
        return PolytopePair.from_json(_read_json(path))
    except InputError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError("bad pair file %s: %s" % (path, exc)) from exc


def _load_partition(path: str) -> RectanglePartition:
    try:
        return RectanglePartition.from_json(_read_json(path))
    except InputError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError("bad partition file %s: %s" % (path, exc)) from exc


def _load_tree(path: str) -> ProtocolTree:
    try:
        return protocol_from_json(_read_json(path))
    except InputError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError("bad protocol file %s: %s" % (path, exc)) from exc


def _dump(obj: dict) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8") as handle:
            handle.write(text)
    except OSError as exc:
        raise InputError("cannot write %s: %s" % (out, exc.strerror)) from exc


def _write_formulation(form: Formulation, out: str | None) -> None:
    _emit(_dump(formulation_to_json(form)), out)
    if out is not None:
        m = size_metrics(form)
        print(
            "wrote %s: %d variables, %d inequalities, %d equations"
            % (out, m.num_variables, m.num_inequalities, m.num_equations)
        )


def _write_report(report: Report, out: str | None) -> int:
    if out is not None:
        _emit(_dump(report.to_json()), out)
    status = "PASS" if report.passed else "FAIL"
    print("%s: %s" % (report.name, status))
    for failure in report.failures[:5]:
        print("  %s" % (failure,))
    return 0 if report.passed else 1


def _parse_order(spec: str | None, graph: Graph) -> list[int] | None:
    if spec is None:
        return None
    by_name = {name: i for i, name in enumerate(graph.names)}
    order: list[int] = []
    for item in spec.split(","):
        item = item.strip()
        if item in by_name:
            order.append(by_name[item])
        elif item.isdigit():
            order.append(int(item))
        else:
            raise InputError("unknown vertex %r in --order" % item)
    return order


# ----------------------------------------------------------------------
# subcommand bodies


def _cmd_build(args: argparse.Namespace) -> int:
    kind = args.builder
    if kind == "yannakakis":
        graph = _load_graph(args.graph)
        order = _parse_order(args.order, graph)
        tree, form, census = build_stab_qstab_ef(graph, order, balanced=args.balanced)
        if args.tree_out:
            _emit(_dump(protocol_to_json(tree)), args.tree_out)
        if args.census_out:
            _emit(_dump(census), args.census_out)
        else:
            print(_dump(census), end="")
    elif kind == "direct":
        graph = _load_graph(args.graph)
        tree = build_general_tree(graph, c=args.leaf_size)
        form = compile_decomposition(graph, tree)
    elif kind == "threshold":
        graph = _load_graph(args.graph)
        pattern = _load_graph(args.pattern)
        tree = build_threshold_tree(graph, pattern)
        form = compile_decomposition(graph, tree)
    elif kind == "minupdown":
        inst = MinUpDownInstance(args.T, min_down=args.ell, min_up=args.L)
        form = mud_ef(inst)
    elif kind == "clawfree":
        graph = _load_graph(args.graph)
        build = clawfree_reduced_ef if args.reduced else clawfree_full_ef
        form = build(graph, t=args.t)
    elif kind == "comparability":
        poset = _load_poset(args.poset)
        build = comparability_reduced_ef if args.reduced else comparability_full_ef
        form = build(poset)
    elif kind == "from-protocol":
        tree = _load_tree(args.tree)
        form = compile_tree(tree, balanced=args.balanced)
    elif kind == "from-rectangles":
        partition = _load_partition(args.partition)
        pair = _load_pair(args.pair)
        form = compile_unambiguous(
            partition, pair=pair, prune=args.prune, balanced=args.balanced
        )
    else:  # pragma: no cover - argparse restricts choices
        raise InputError("unknown builder %r" % kind)
    _write_formulation(form, args.output)
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    kind = args.check
    if kind == "sandwich":
        graph = _load_graph(args.graph)
        form = _load_formulation(args.ef)
        report = check_sandwich(graph, form, seed=args.seed)
    elif kind == "partition":
        partition = _load_partition(args.partition)
        if (args.pair is None) == (args.graph is None):
            raise InputError("verify partition needs exactly one of --pair/--graph")
        pair = _load_pair(args.pair) if args.pair else stab_qstab_pair(_load_graph(args.graph))
        report = verify_partition(partition, slack_matrix(pair))
    elif kind == "equality":
        first = _load_formulation(args.ef)
        second = _load_formulation(args.other)
        report = projections_agree(
            first, second, directions=args.directions, seed=args.seed, exact=args.exact
        )
    else:  # pragma: no cover - argparse restricts choices
        raise InputError("unknown check %r" % kind)
    return _write_report(report, args.output)


def _cmd_export(args: argparse.Namespace) -> int:
    form = _load_formulation(args.ef)
    if args.format == "json":
        _emit(_dump(formulation_to_json(form)), args.output)
    else:
        _emit(formulation_to_lp(form), args.output)
    return 0


def _tree_census(tree: ProtocolTree) -> dict:
    def walk(node: ProtocolTree, depth: int) -> tuple[int, int, int]:
        if node.is_leaf:
            return 1, 1, depth
        total, leaves, height = 1, 0, depth
        for _, child in node.children:
            t, l, h = walk(child, depth + 1)
            total += t
            leaves += l
            height = max(height, h)
        return total, leaves, height

    nodes, leaves, height = walk(tree, 0)
    return {"nodes": nodes, "leaves": leaves, "height": height}


def _cmd_stats(args: argparse.Namespace) -> int:
    out: dict = {}
    if args.ef is None and args.tree is None and args.graph is None:
        raise InputError("stats needs at least one of --ef/--tree/--graph")
    if args.ef is not None:
        form = _load_formulation(args.ef)
        out["size"] = dict(
            size_metrics(form).as_dict(),
            original_variables=len(form.original_vars),
            auxiliary_variables=len(form.aux_vars),
        )
    if args.tree is not None:
        out["protocol"] = _tree_census(_load_tree(args.tree))
    if args.graph is not None:
        # decomposition census for the direct builder on this graph
        graph = _load_graph(args.graph)
        out["decomposition"] = decomposition_census(
            build_general_tree(graph, c=args.leaf_size)
        )
    sys.stdout.write(_dump(out))
    return 0


# ----------------------------------------------------------------------
# argument wiring


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polylift",
        description="Build, verify, and export extended formulations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    build = sub.add_parser("build", help="construct a formulation and write it as JSON")
    bsub = build.add_subparsers(dest="builder", required=True)

    def builder(name: str, **kwargs) -> argparse.ArgumentParser:
        p = bsub.add_parser(name, **kwargs)
        p.add_argument("-o", "--output", help="output path (default: stdout)")
        p.set_defaults(func=_cmd_build)
        return p

    p = builder("yannakakis", help="clique vs stable set protocol formulation")
    p.add_argument("--graph", required=True)
    p.add_argument("--order", help="comma-separated vertex order for the protocol")
    p.add_argument("--balanced", action="store_true", help="balance union folds")
    p.add_argument("--tree-out", help="also write the protocol tree as JSON")
    p.add_argument("--census-out", help="write the leaf census here instead of stdout")

    p = builder("direct", help="decomposition-based formulation for any graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--leaf-size", type=int, default=2, help="stop splitting at this size")

    p = builder("threshold", help="pattern-avoiding decomposition formulation")
    p.add_argument("--graph", required=True)
    p.add_argument("--pattern", required=True, help="forbidden induced subgraph, as a graph file")

    p = builder("minupdown", help="min-up/min-down schedule polytope")
    p.add_argument("--T", type=int, required=True, help="number of periods")
    p.add_argument("--L", type=int, required=True, help="minimum on-block length")
    p.add_argument("--ell", type=int, required=True, help="minimum off-block length")

    p = builder("clawfree", help="star-free stable set formulation")
    p.add_argument("--graph", required=True)
    p.add_argument("--t", type=int, default=3, help="forbidden star size")
    p.add_argument("--reduced", action="store_true", help="substitute out the linked copies")

    p = builder("comparability", help="antichain formulation from a poset")
    p.add_argument("--poset", required=True)
    p.add_argument("--reduced", action="store_true", help="substitute out the linked copies")

    p = builder("from-protocol", help="compile a protocol tree file")
    p.add_argument("--tree", required=True)
    p.add_argument("--balanced", action="store_true", help="balance union folds")

    p = builder("from-rectangles", help="compile a rectangle partition")
    p.add_argument("--partition", required=True)
    p.add_argument("--pair", required=True, help="polytope pair supplying leaf rows")
    p.add_argument("--prune", action="store_true", help="drop redundant no-send branches")
    p.add_argument("--balanced", action="store_true", help="balance union folds")

    verify = sub.add_parser("verify", help="run a verification and report pass/fail")
    vsub = verify.add_subparsers(dest="check", required=True)

    def checker(name: str, **kwargs) -> argparse.ArgumentParser:
        p = vsub.add_parser(name, **kwargs)
        p.add_argument("-o", "--output", help="write the report JSON here")
        p.add_argument("--seed", type=int, default=0, help="seed for sampled directions")
        p.set_defaults(func=_cmd_verify)
        return p

    p = checker("sandwich", help="stable sets feasible, clique maxima at most 1")
    p.add_argument("--graph", required=True)
    p.add_argument("--ef", required=True)

    p = checker("partition", help="rectangles disjoint, covering, monochromatic")
    p.add_argument("--partition", required=True)
    p.add_argument("--pair", help="polytope pair whose slack matrix is checked")
    p.add_argument("--graph", help="use this graph's clique/stable-set pair instead")

    p = checker("equality", help="projections agree in sampled directions")
    p.add_argument("--ef", required=True)
    p.add_argument("--other", required=True)
    p.add_argument("--directions", type=int, default=200)
    p.add_argument("--exact", action="store_true", help="also decide equality by elimination")

    export = sub.add_parser("export", help="re-serialize a formulation")
    export.add_argument("format", choices=["json", "lp"])
    export.add_argument("--ef", required=True)
    export.add_argument("-o", "--output", help="output path (default: stdout)")
    export.set_defaults(func=_cmd_export)

    stats = sub.add_parser("stats", help="print size metrics and tree censuses")
    stats.add_argument("--ef", help="formulation file")
    stats.add_argument("--tree", help="protocol tree file")
    stats.add_argument("--graph", help="graph file; prints its decomposition census")
    stats.add_argument("--leaf-size", type=int, default=2)
    stats.set_defaults(func=_cmd_stats)

    return parser


def dispatch(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except ValueError as exc:
        # domain validation failures (bad poset, pattern present, ...) are
        # input problems from the shell's point of view
        print("error: %s" % exc, file=sys.stderr)
        return 2


def main(argv: list[str] | None = None) -> int:
    return dispatch(argv)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
