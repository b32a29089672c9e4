"""Command-line front end.

Every subcommand prints one report on stdout: a human-readable listing by
default, or a single JSON line with ``--format jsonl``. Diagnostics and
timing go to stderr. Exit codes: 0 true or done, 1 false, 2 input error,
3 budget exceeded.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import random
import sys
import time
from collections.abc import Callable, Sequence
from typing import Any

from . import bits, io
from .cert import certificate_to_json, certify_membership, verify_certificate
from .config import Budget, budget_override, get_budget
from .cover import (
    Cover,
    components,
    is_complete_sequence,
    is_left_open_partition,
    is_normal_cover,
    find_unexhausted,
    refines,
    star_cover,
)
from .errors import BudgetExceeded, LfcoverError, NotInLambda, NotNormal
from .gamederive import (
    chain_tree,
    cover_refining_subtree,
    decomposition_tree,
    game_successors,
    is_partition_complete,
    k_derivative,
    k_rank,
    make_strategy,
    perverse_product,
    play_game,
    standard_perversities,
)
from .gamederive.perverse import explore, successors_vary_one_coordinate
from .gamederive.scattered import BUILTIN as BUILTIN_CLASSES
from .preunif import (
    derivative,
    lambda_coreflection,
    is_supercomplete,
    membership,
    metric_fine_membership,
    preunif_to_json,
    product_preuniformity,
)
from .prodcomb import (
    dense_union_check,
    disjoint_support_intersection,
    extension_refinement_check,
    finite_blocker,
    inclusion_lemma_check,
    normal_cover_certificate,
    realize,
    support,
)
from .space import ProductSpace, is_regular, product, space_to_json

EXIT_TRUE, EXIT_FALSE, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3


class Context:
    """Per-invocation state: inputs read, files written, flags."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.inputs: dict[str, str] = {}
        self.files: list[str] = []
        self._out = None

    def note(self, loaded: io.Loaded) -> None:
        self.inputs[str(loaded.path.name)] = loaded.hash

    def space(self, path):
        s, f = io.load_space(path)
        self.note(f)
        return s

    def cover(self, path, space=None) -> Cover:
        c, f = io.load_cover(path, space)
        self.note(f)
        return c

    def preunif(self, path):
        m, f = io.load_preunif(path)
        self.note(f)
        return m

    def write(self, name: str, obj: Any) -> None:
        if self._out is None:
            self._out = io.out_dir(self.args.out)
        self.files.append(io.write_json(self._out, name, obj))


def _fam(fam) -> list[str]:
    return [bits.fmt(e) for e in fam]


# -- space -----------------------------------------------------------------


def cmd_space_check(ctx: Context):
    s = ctx.space(ctx.args.file)
    return True, {
        "points": s.n,
        "neighbourhoods": _fam(s.neighbourhoods),
        "regular": is_regular(s),
        "components": _fam(components(s)),
    }


def cmd_space_product(ctx: Context):
    p = product([ctx.space(f) for f in ctx.args.files])
    ctx.write("product.json", space_to_json(p))
    return True, {"points": p.n, "factors": [f.n for f in p.factors]}


# -- cover -----------------------------------------------------------------


def cmd_cover_refines(ctx: Context):
    u = ctx.cover(ctx.args.u)
    v = ctx.cover(ctx.args.v)
    ok = refines(u, v)
    return ok, {"refines": ok}


def cmd_cover_star(ctx: Context):
    u = ctx.cover(ctx.args.u)
    return True, {"star": _fam(star_cover(u).elements)}


def cmd_cover_normal(ctx: Context):
    u = ctx.cover(ctx.args.u)
    verdict = is_normal_cover(u.space, u, ctx.args.method)
    out = {"normal": verdict.result, "method": verdict.method}
    if verdict.result:
        out["cycle"] = [_fam(c) for c in verdict.cycle]
        out["tail"] = [_fam(c) for c in verdict.tail]
    return verdict.result, out


def cmd_cover_exhaustive(ctx: Context):
    u = ctx.cover(ctx.args.u)
    bad = find_unexhausted(u.space, u)
    out: dict = {"exhaustive": bad is None}
    if bad is not None:
        out["unexhausted"] = bits.fmt(bad)
    return bad is None, out


def cmd_cover_leftopen(ctx: Context):
    u = ctx.cover(ctx.args.u)
    ok, order = is_left_open_partition(u.space, u, ctx.args.search)
    return ok, {"left_open": ok, "order": _fam(order)}


def cmd_cover_complete(ctx: Context):
    covers = [ctx.cover(f) for f in ctx.args.covers]
    space = covers[0].space
    if any(c.space != space for c in covers):
        raise ValueError("covers live on different spaces")
    ok, bad = is_complete_sequence(space, covers)
    out: dict = {"complete": ok}
    if bad is not None:
        out["failing_choice"] = _fam(bad)
    return ok, out


# -- preunif ---------------------------------------------------------------


def cmd_preunif_member(ctx: Context):
    mu = ctx.preunif(ctx.args.mu)
    v = ctx.cover(ctx.args.v, mu.space)
    m = membership(mu, v)
    return m.result, {"member": m.result, "witness": list(m.witness)}


def cmd_preunif_derive(ctx: Context):
    mu = ctx.preunif(ctx.args.mu)
    nu = ctx.preunif(ctx.args.nu) if ctx.args.nu else mu
    d = derivative(mu, nu, minimal=ctx.args.minimal)
    return True, {"mode": d.mode, "basis": [_fam(b) for b in d.basis]}


def cmd_preunif_lambda(ctx: Context):
    mu = ctx.preunif(ctx.args.mu)
    lam, trace = lambda_coreflection(mu, fast=ctx.args.fast)
    out: dict = {
        "mode": lam.mode,
        "fixed_stage": trace.fixed_stage,
        "basis": [_fam(b) for b in lam.basis],
    }
    if ctx.args.trace:
        ctx.write("trace.json", io.trace_to_json(trace))
        for k, cert in enumerate(trace.certificates()):
            ctx.write(f"certificate-{k}.json", certificate_to_json(cert))
    return True, out


def cmd_preunif_supercomplete(ctx: Context):
    mu = ctx.preunif(ctx.args.mu)
    ok, missing = is_supercomplete(mu.space, mu, ctx.args.method)
    out: dict = {"supercomplete": ok}
    if missing is not None:
        out["missing"] = _fam(missing)
    return ok, out


def cmd_preunif_metricfine(ctx: Context):
    mu = ctx.preunif(ctx.args.mu)
    v = ctx.cover(ctx.args.v, mu.space)
    m = metric_fine_membership(mu, v, ctx.args.method)
    return m.result, {
        "metric_fine": m.result,
        "closed_cover": _fam(m.closed_cover),
        "choices": [list(c) for c in m.choices],
    }


def cmd_preunif_product(ctx: Context):
    mus = [ctx.preunif(f) for f in ctx.args.files]
    p = product_preuniformity([(m.space, m) for m in mus])
    ctx.write("product-preuniformity.json", preunif_to_json(p))
    return True, {"points": p.space.n, "mode": p.mode, "basis_size": len(p.basis)}


# -- cert ------------------------------------------------------------------


def cmd_cert_verify(ctx: Context):
    cert, f = io.load_certificate(ctx.args.file)
    ctx.note(f)
    v = verify_certificate(cert)
    out: dict = {"valid": v.ok, "nodes": len(cert.tree.nodes), "depth": cert.tree.depth()}
    if not v.ok:
        out["node"] = v.node
        out["reason"] = v.reason
    return v.ok, out


def cmd_cert_make(ctx: Context):
    mu = ctx.preunif(ctx.args.mu)
    v = ctx.cover(ctx.args.v, mu.space)
    try:
        cert = certify_membership(mu, v)
    except NotInLambda as exc:
        return False, {"certified": False, "reason": str(exc)}
    ctx.write("certificate.json", certificate_to_json(cert))
    return True, {
        "certified": True,
        "nodes": len(cert.tree.nodes),
        "depth": cert.tree.depth(),
        "ends": _fam(cert.ends().elements),
    }


# -- perverse --------------------------------------------------------------


def cmd_perverse_gen(ctx: Context):
    ps = standard_perversities(ctx.args.n)
    return True, {"perversities": [str(p) for p in ps]}


def cmd_perverse_product(ctx: Context):
    lengths = ctx.args.chains
    trees = [chain_tree(n) for n in lengths]
    ps = standard_perversities(ctx.args.n)
    t = perverse_product(trees, ps, ctx.args.depth + 1)
    nodes = explore(t, ctx.args.depth)
    return True, {
        "nodes": [
            {"path": list(path), "factors": list(node.factors), "levels": list(node.level_vector)}
            for path, node in nodes
        ],
        "one_coordinate": successors_vary_one_coordinate(t, ctx.args.depth),
    }


# -- derive ----------------------------------------------------------------


def _kclass(name: str):
    try:
        return BUILTIN_CLASSES[name]
    except KeyError:
        raise ValueError(f"--class must be one of {sorted(BUILTIN_CLASSES)}") from None


def cmd_derive_kderiv(ctx: Context):
    s = ctx.space(ctx.args.file)
    sub = s.carrier if ctx.args.subset is None else bits.mask_of(ctx.args.subset)
    d = k_derivative(s, _kclass(ctx.args.k), sub)
    return True, {"derivative": bits.fmt(d)}


def cmd_derive_ktree(ctx: Context):
    s = ctx.space(ctx.args.file)
    tree = decomposition_tree(s, _kclass(ctx.args.k), ctx.args.depth, ctx.args.convention)
    nodes = [{"id": n.id, "parent": n.parent, "label": bits.members(n.label)} for n in tree.nodes]
    if ctx.args.trace:
        ctx.write("ktree.json", {"nodes": nodes})
    return True, {"nodes": [f"{n.id}<-{n.parent}: {bits.fmt(n.label)}" for n in tree.nodes]}


def cmd_derive_rank(ctx: Context):
    s = ctx.space(ctx.args.file)
    k = _kclass(ctx.args.k)
    try:
        r = k_rank(s, k)
    except LfcoverError as exc:
        return False, {"scattered": False, "reason": str(exc)}
    return True, {"scattered": True, "rank": r}


# -- game ------------------------------------------------------------------


def _strategy(ctx: Context, space):
    return make_strategy(space, ctx.args.strategy)


def cmd_game_play(ctx: Context):
    s = ctx.space(ctx.args.file)
    strat = _strategy(ctx, s)
    rng = random.Random(ctx.args.seed)

    def player_one(_round: int, prev: int) -> int:
        pts = bits.members(prev)
        pick = [p for p in pts if rng.random() < 0.5] or [rng.choice(pts)]
        return bits.mask_of(pick)

    g = play_game(s, strat, player_one, ctx.args.rounds)
    return g.winner == "II", {
        "winner": g.winner,
        "cluster": bits.fmt(g.cluster),
        "moves": [f"{m.round}: I {bits.fmt(m.chosen_by_one)} / II {bits.fmt(m.answer)}" for m in g.transcript],
    }


def cmd_game_tree(ctx: Context):
    s = ctx.space(ctx.args.file)
    strat = _strategy(ctx, s)
    levels = [[s.carrier]]
    for _ in range(ctx.args.depth):
        levels.append([c for x in levels[-1] for c in game_successors(strat, x)])
    return True, {"levels": [_fam(lv) for lv in levels]}


def cmd_game_refine_subtree(ctx: Context):
    s = ctx.space(ctx.args.file)
    g = ctx.cover(ctx.args.cover, s)
    res = cover_refining_subtree(s, _strategy(ctx, s), g, ctx.args.mode)
    ok = res.refines_directed if ctx.args.mode == "directed" else res.refines_cover
    return ok, {
        "nodes": len(res.tree.nodes),
        "ends": _fam(n.label for n in res.tree.leaves()),
        "refines_cover": res.refines_cover,
        "refines_directed": res.refines_directed,
        "deficits": [f"{nid}: {bits.fmt(m)}" for nid, m in res.deficits],
    }


def cmd_game_partition_complete(ctx: Context):
    s = ctx.space(ctx.args.file)
    w = is_partition_complete(s)
    return w.validated, {
        "partition_complete": w.validated,
        "exhaustive_cover": _fam(w.exhaustive_cover),
        "left_open_partition": _fam(w.left_open_partition),
    }


# -- prodcomb --------------------------------------------------------------


def _product(ctx: Context) -> ProductSpace:
    p = ctx.space(ctx.args.product)
    if not isinstance(p, ProductSpace):
        raise ValueError("expected a product space file")
    return p


def _basic(ctx: Context, path, p):
    sets, f = io.load_basic_sets(path, p)
    ctx.note(f)
    return sets


def cmd_prodcomb_support(ctx: Context):
    p = _product(ctx)
    sets = _basic(ctx, ctx.args.sets, p)
    return True, {
        "sets": [
            {"support": list(support(b)), "points": bits.fmt(realize(b)), "str": str(b)} for b in sets
        ]
    }


def cmd_prodcomb_blocker(ctx: Context):
    p = _product(ctx)
    r = bits.mask_of(ctx.args.region)
    b = finite_blocker(p, r)
    return True, {"blocker": list(b.indices), "maximal_boxes": len(b.boxes)}


def cmd_prodcomb_intersect(ctx: Context):
    p = _product(ctx)
    b1 = _basic(ctx, ctx.args.first, p)[0]
    b2 = _basic(ctx, ctx.args.second, p)[0]
    v = disjoint_support_intersection(b1, b2)
    return v.nonempty, {"nonempty": v.nonempty, "shared": list(v.shared), "direct": v.brute_force}


def cmd_prodcomb_dense(ctx: Context):
    p = _product(ctx)
    sets = _basic(ctx, ctx.args.sets, p)
    v = dense_union_check(sets)
    return v.dense, {"dense": v.dense, "closure": bits.fmt(v.closure), "applicable": v.applicable}


def cmd_prodcomb_inclusion(ctx: Context):
    p = _product(ctx)
    sets = _basic(ctx, ctx.args.sets, p)
    v = inclusion_lemma_check(
        p, bits.mask_of(ctx.args.g), bits.mask_of(ctx.args.r), ctx.args.e, sets
    )
    return v.included, {"included": v.included, "applicable": v.applicable}


def cmd_prodcomb_extension_check(ctx: Context):
    r = ctx.cover(ctx.args.r)
    v1 = ctx.cover(ctx.args.v1, r.space)
    v = ctx.cover(ctx.args.v, r.space)
    c = extension_refinement_check(r.space, r.elements, v1.elements, v.elements)
    return bool(c), {"star_refines": c.star_refines, "directed_refines": c.directed_refines}


def cmd_prodcomb_normal_cert(ctx: Context):
    mus = [ctx.preunif(f) for f in ctx.args.factors]
    factors = [(m.space, m) for m in mus]
    v = ctx.cover(ctx.args.cover)
    if v.space != product([s for s, _ in factors]):
        raise ValueError("cover does not live on the product of the factor spaces")
    try:
        res = normal_cover_certificate(factors, v, ctx.args.strategy)
    except NotNormal as exc:
        return False, {"certified": False, "reason": str(exc)}
    ctx.write("normal-certificate.json", certificate_to_json(res.certificate))
    ctx.write("normal-certificate-directed.json", certificate_to_json(res.directed_certificate))
    out = {
        "certified": True,
        "regular_cover": _fam(res.regular_cover),
        "basic_cover": _fam(res.basic_cover),
        "blocker": list(res.blocker),
        "end_star_sizes": list(res.end_star_sizes),
        "nodes": len(res.certificate.tree.nodes),
        "added_covers": res.added_covers,
        "coverage_deficits": res.coverage_deficits,
    }
    if ctx.args.trace:
        ctx.write("extended-preuniformity.json", preunif_to_json(res.preuniformity))
    return True, out


# -- parser ----------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="seed for randomized steps")
    p.add_argument(
        "--budget",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help=f"override a budget field ({', '.join(f.name for f in dataclasses.fields(Budget))})",
    )
    p.add_argument("--format", choices=("human", "jsonl"), default="human")
    p.add_argument("--trace", action="store_true", help="also write intermediate artifacts")
    p.add_argument("--out", default=None, help=f"output directory (else ${io.OUT_DIR_ENV} or ./lfcover-out)")
    return p


COMMANDS: dict[tuple[str, str], Callable[[Context], tuple[bool, dict]]] = {}


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="lfcover", description="Finite covers, pre-uniformities and certificates.")
    groups = parser.add_subparsers(dest="group", required=True)

    def group(name: str, help: str):
        g = groups.add_parser(name, help=help)
        return g.add_subparsers(dest="command", required=True)

    def command(sub, gname: str, name: str, fn, help: str):
        p = sub.add_parser(name, parents=[common], help=help)
        p.set_defaults(handler=fn, command_name=f"{gname} {name}")
        COMMANDS[(gname, name)] = fn
        return p

    g = group("space", "finite spaces")
    command(g, "space", "check", cmd_space_check, "validate a space file").add_argument("file")
    command(g, "space", "product", cmd_space_product, "write the product of spaces").add_argument("files", nargs="+")

    g = group("cover", "covers")
    p = command(g, "cover", "refines", cmd_cover_refines, "does U refine V")
    p.add_argument("u")
    p.add_argument("v")
    command(g, "cover", "star", cmd_cover_star, "star cover").add_argument("u")
    p = command(g, "cover", "normal", cmd_cover_normal, "is an open cover normal")
    p.add_argument("u")
    p.add_argument("--method", choices=("auto", "fixpoint", "components"), default="auto")
    command(g, "cover", "exhaustive", cmd_cover_exhaustive, "is a cover exhaustive").add_argument("u")
    p = command(g, "cover", "leftopen", cmd_cover_leftopen, "is a partition left-open")
    p.add_argument("u")
    p.add_argument("--search", choices=("greedy", "backtrack"), default="greedy")
    p = command(g, "cover", "complete", cmd_cover_complete, "is a cover sequence complete")
    p.add_argument("covers", nargs="+")

    g = group("preunif", "pre-uniformities")
    p = command(g, "preunif", "member", cmd_preunif_member, "membership with witness")
    p.add_argument("mu")
    p.add_argument("v")
    p = command(g, "preunif", "derive", cmd_preunif_derive, "local-meet derivative")
    p.add_argument("mu")
    p.add_argument("nu", nargs="?")
    p.add_argument("--minimal", action="store_true")
    p = command(g, "preunif", "lambda", cmd_preunif_lambda, "locally fine coreflection")
    p.add_argument("mu")
    p.add_argument("--fast", action="store_true", help="iterate with the current stage on both sides")
    p = command(g, "preunif", "supercomplete", cmd_preunif_supercomplete, "contains every open cover")
    p.add_argument("mu")
    p.add_argument("--method", choices=("auto", "enumerate", "neighbourhoods"), default="auto")
    p = command(g, "preunif", "metricfine", cmd_preunif_metricfine, "metric-fine membership")
    p.add_argument("mu")
    p.add_argument("v")
    p.add_argument("--method", choices=("auto", "enumerate", "closures"), default="auto")
    p = command(g, "preunif", "product", cmd_preunif_product, "product pre-uniformity")
    p.add_argument("files", nargs="+")

    g = group("cert", "certificates")
    command(g, "cert", "verify", cmd_cert_verify, "verify a certificate").add_argument("file")
    p = command(g, "cert", "make", cmd_cert_make, "certify λ-membership")
    p.add_argument("mu")
    p.add_argument("v")

    g = group("perverse", "perversities")
    p = command(g, "perverse", "gen", cmd_perverse_gen, "standard perversities")
    p.add_argument("-n", type=int, required=True)
    p = command(g, "perverse", "product", cmd_perverse_product, "perverse product of chains")
    p.add_argument("--chains", type=lambda s: [int(x) for x in s.split(",")], required=True, help="e.g. 3,3")
    p.add_argument("-n", type=int, default=20, help="number of standard perversities to use")
    p.add_argument("--depth", type=int, default=3)

    g = group("derive", "K-derivatives")
    for name, fn, help in (
        ("kderiv", cmd_derive_kderiv, "K-derivative"),
        ("ktree", cmd_derive_ktree, "decomposition tree"),
        ("rank", cmd_derive_rank, "K-rank"),
    ):
        p = command(g, "derive", name, fn, help)
        p.add_argument("file")
        p.add_argument("--class", dest="k", default="singletons")
        if name == "kderiv":
            p.add_argument("--subset", type=lambda s: [int(x) for x in s.split(",") if x], default=None)
        if name == "ktree":
            p.add_argument("--depth", type=int, default=16)
            p.add_argument("--convention", choices=("relative", "ambient"), default="relative")

    g = group("game", "the exhaustive-cover game")
    strategies = ("minimal", "minimal-open")
    p = command(g, "game", "play", cmd_game_play, "referee a game against random moves")
    p.add_argument("file")
    p.add_argument("--strategy", choices=strategies, default="minimal")
    p.add_argument("--rounds", type=int, default=5)
    p = command(g, "game", "tree", cmd_game_tree, "game tree levels")
    p.add_argument("file")
    p.add_argument("--strategy", choices=strategies, default="minimal")
    p.add_argument("--depth", type=int, default=2)
    p = command(g, "game", "refine-subtree", cmd_game_refine_subtree, "subtree refining a cover")
    p.add_argument("file")
    p.add_argument("cover")
    p.add_argument("--strategy", choices=strategies, default="minimal")
    p.add_argument("--mode", choices=("directed", "cover"), default="directed")
    command(g, "game", "partition-complete", cmd_game_partition_complete, "partition-completeness witness").add_argument(
        "file"
    )

    g = group("prodcomb", "basic sets and products")
    p = command(g, "prodcomb", "support", cmd_prodcomb_support, "supports of basic sets")
    p.add_argument("product")
    p.add_argument("sets")
    p = command(g, "prodcomb", "blocker", cmd_prodcomb_blocker, "finite blocker of a regular open set")
    p.add_argument("product")
    p.add_argument("--region", type=lambda s: [int(x) for x in s.split(",") if x], required=True)
    p = command(g, "prodcomb", "intersect", cmd_prodcomb_intersect, "intersection via shared support")
    p.add_argument("product")
    p.add_argument("first")
    p.add_argument("second")
    p = command(g, "prodcomb", "dense", cmd_prodcomb_dense, "density of a union of basic sets")
    p.add_argument("product")
    p.add_argument("sets")
    p = command(g, "prodcomb", "inclusion", cmd_prodcomb_inclusion, "inclusion from projected witnesses")
    p.add_argument("product")
    p.add_argument("sets")
    ints = lambda s: [int(x) for x in s.split(",") if x]  # noqa: E731
    p.add_argument("--g", type=ints, required=True)
    p.add_argument("--r", type=ints, required=True)
    p.add_argument("--e", type=ints, default=[])
    p = command(g, "prodcomb", "extension-check", cmd_prodcomb_extension_check, "regular-open extension refinement")
    p.add_argument("r")
    p.add_argument("v1")
    p.add_argument("v")
    p = command(g, "prodcomb", "normal-cert", cmd_prodcomb_normal_cert, "certify a normal cover of a product")
    p.add_argument("cover")
    p.add_argument("factors", nargs="+")
    p.add_argument("--strategy", choices=strategies, default="minimal")
    return parser


def _budget_changes(items: Sequence[str]) -> dict[str, int]:
    names = {f.name for f in dataclasses.fields(Budget)}
    out = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or key not in names:
            raise argparse.ArgumentTypeError(f"--budget {item!r}: expected KEY=VALUE with KEY in {sorted(names)}")
        try:
            out[key] = int(value)
        except ValueError:
            raise argparse.ArgumentTypeError(f"--budget {item!r}: value must be an integer") from None
    return out


def _render_human(report: dict) -> str:
    lines = [f"command: {report['command']}", f"verdict: {'true' if report['verdict'] else 'false'}"]
    for name, h in report["inputs"].items():
        lines.append(f"input {name}: {h}")
    for key, value in report["result"].items():
        if isinstance(value, list) and value and all(isinstance(x, (str, dict, list)) for x in value):
            lines.append(f"{key}:")
            for x in value:
                lines.append(f"  {x if isinstance(x, str) else json.dumps(x, sort_keys=True)}")
        else:
            lines.append(f"{key}: {json.dumps(value, sort_keys=True) if not isinstance(value, str) else value}")
    for f in report["files"]:
        lines.append(f"wrote: {f}")
    return "\n".join(lines)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        changes = _budget_changes(args.budget)
    except argparse.ArgumentTypeError as exc:
        print(f"lfcover: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    ctx = Context(args)
    start = time.perf_counter()
    try:
        with budget_override(**changes):
            verdict, result = args.handler(ctx)
            budget = dataclasses.asdict(get_budget())
    except BudgetExceeded as exc:
        print(f"lfcover: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (LfcoverError, ValueError, OverflowError) as exc:
        print(f"lfcover: input error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    elapsed = time.perf_counter() - start
    report = {
        "command": args.command_name,
        "inputs": ctx.inputs,
        "seed": args.seed,
        "budget": budget,
        "verdict": bool(verdict),
        "result": result,
        "files": ctx.files,
    }
    if args.format == "jsonl":
        print(io.dumps(report))
    else:
        print(_render_human(report))
    print(f"lfcover: {args.command_name} finished in {elapsed:.3f}s", file=sys.stderr)
    return EXIT_TRUE if verdict else EXIT_FALSE


if __name__ == "__main__":
    sys.exit(main())
