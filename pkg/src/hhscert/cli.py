"""Command line driver.

    hhscert zoo build grid --n 10 -o grid.json
    hhscert audit grid.json
    hhscert certify --model f2.json --word "s t s t"
    hhscert hqc grid.json --subset axes

Every command prints (or writes with --out) one report document, see
``hhscert.report``.  Exit status: 0 verified, 1 falsified with a witness,
2 partial (budget or window truncation), 3 malformed input.

Model files written by ``zoo build`` hold the builder recipe; the tables
are rebuilt on load, which keeps files small for the large product
windows.  ``--tables`` additionally embeds the full tabulation, and a file
with tables but no recipe (a custom model) is loaded from the tables.
``--geometry-only`` writes a product-family recipe with no window at all:
``certify`` and ``inject-verify`` read only the closed-form geometry, so
they accept it for any N, while the window commands refuse it.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import amalgam as AM
from . import audit as AU
from . import convexity as CV
from . import zoo
from .model import ModelError, model_from_json, model_to_json
from .report import dumps, error_report, make_report

MODEL_FILE = "hhscert-model"
BUDGET_ENV = "HHSCERT_BUDGET"
DEFAULT_BUDGET = 200_000
FORMATS = ("json", "compact")


class InputError(ValueError):
    """Malformed command line or input file (exit status 3)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


@dataclass
class RunConfig:
    command: str
    model_path: str | None = None
    args: dict = field(default_factory=dict)
    budget: int = DEFAULT_BUDGET
    out: str | None = None
    format: str = "json"

    def __post_init__(self):
        if self.format not in FORMATS:
            raise InputError(f"unknown report format {self.format!r}")
        if self.budget <= 0:
            raise InputError("budgets must be positive")
        if self.model_path is not None and not Path(self.model_path).is_file():
            raise InputError(f"model file {self.model_path} does not exist")


# ----------------------------------------------------------------- model files

def write_model_file(bundle: zoo.ZooBundle, path: str, tables: bool = False) -> dict:
    doc = {"format": MODEL_FILE, "version": 1,
           "recipe": {"family": bundle.family, **bundle.params}}
    if tables:
        doc["tables"] = json.loads(model_to_json(bundle.model))
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")
    return doc["recipe"]


def load_model_file(path: str):
    """Returns (bundle or None, model)."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read model file {path}: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FILE:
        raise InputError(f"{path} is not a model file")
    rec = doc.get("recipe")
    if rec and rec.get("geometry_only"):
        raise InputError(f"{path} holds only the closed-form geometry; this command needs a window "
                         "(rebuild it without --geometry-only)")
    if rec:
        try:
            b = zoo.build(rec["family"], int(rec["n"]), int(rec.get("N", 1)), rec.get("nD"))
        except (KeyError, ValueError) as exc:
            raise InputError(f"bad recipe in {path}: {exc}") from None
        return b, b.model
    if "tables" in doc:
        try:
            return None, model_from_json(json.dumps(doc["tables"]))
        except ModelError as exc:
            raise InputError(str(exc)) from None
    raise InputError(f"{path} has neither a recipe nor tables")


# ----------------------------------------------------------------- subsets

def _parse_labels(text: str, m) -> list[int]:
    try:
        labels = json.loads(text)
        return [m.ambient.point(tuple(lab) if isinstance(lab, list) else (lab,)) for lab in labels]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad vertex list: {exc}") from None


def resolve_subset(bundle, m, name=None, vertices=None, orbit=None, radius=None, label="") -> CV.SubsetSpec:
    """A subset from a bundle name, an explicit label list, or a generator orbit."""
    if sum(x is not None for x in (name, vertices, orbit)) != 1:
        raise InputError("give exactly one of --subset, --vertices, --orbit")
    if name is not None:
        if bundle is None:
            raise InputError("named subsets need a zoo model file")
        try:
            return bundle.subset(name)
        except KeyError as exc:
            raise InputError(exc.args[0]) from None
    if vertices is not None:
        return CV.SubsetSpec(m, _parse_labels(vertices, m), CV.ARBITRARY, label or "vertices")
    if bundle is None or bundle.group is None:
        raise InputError("orbits need a model with a group action")
    gens = [g for g in orbit.replace(",", " ").split() if g]
    G = bundle.group
    unknown = [g for g in gens if g not in G.generators]
    if unknown:
        raise InputError(f"unknown generators {unknown}; known: {sorted(G.generators)}")
    from .action import orbit_ball

    r = int(radius) if radius is not None else CV.window_radius(m)
    pts = []
    for g in orbit_ball(G, r, gens):
        p = _point_of(bundle, g)
        if p is not None:
            pts.append(p)
    base = _point_of(bundle, G.identity)
    return CV.SubsetSpec(m, pts, CV.SUBGROUP, label or f"<{','.join(gens)}>", base)


def _point_of(bundle, g):
    m = bundle.model
    if bundle.family.startswith("f2xdxd"):
        from .zoo import f2xdxd

        return f2xdxd.point_of(bundle.index, m.ambient, g)
    if bundle.family in ("grid", "parallel_lines"):
        n = (m.ambient.shape[0] - 1) // 2
        if max(abs(g[0]), abs(g[1])) > n:
            return None
        return int(m.ambient.point(g))
    F = m.ambient.factors[0]
    return F.index.get(g)


def _subset_args(p):
    p.add_argument("--subset", help="named subset of a zoo model")
    p.add_argument("--vertices", help="JSON list of ambient labels")
    p.add_argument("--orbit", help="generators (space or comma separated) of an orbit ball")
    p.add_argument("--radius", type=int, help="word radius of the orbit ball")


def _pair_args(p):
    for side in ("A", "B"):
        p.add_argument(f"--{side}", dest=side, default=side, help=f"named subset used as {side}")


# ----------------------------------------------------------------- commands

def _status(ok: bool, partial: bool = False) -> str:
    if partial:
        return "partial"
    return "pass" if ok else "fail"


def _geometry_only_build(a):
    if zoo.canonical(a.family) != "f2xdxd":
        raise InputError("--geometry-only is for the f2xdxd family")
    try:
        d = zoo.product_amalgam(a.N)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    recipe = {"family": "f2xdxd", "N": a.N, "geometry_only": True}
    if a.output:
        doc = {"format": MODEL_FILE, "version": 1, "recipe": recipe}
        Path(a.output).write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")
    return "pass", {"recipe": recipe, "written": a.output, "E": d.E, "M": d.M}


def cmd_zoo_build(a, cfg):
    try:
        if a.geometry_only:
            return _geometry_only_build(a)
        if a.n is None:
            raise InputError("--n is required unless --geometry-only is given")
        b = zoo.build(a.family, a.n, a.N, a.nD)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    recipe = write_model_file(b, a.output, a.tables) if a.output else {"family": b.family, **b.params}
    m = b.model
    res = {"recipe": recipe, "written": a.output, "ambient_points": len(m.ambient),
           "domains": len(m.domains), "declared_E": m.E, "subsets": {k: len(v) for k, v in b.subsets.items()},
           "meta": m.meta}
    return "pass", res


def cmd_audit(a, cfg):
    _, m = load_model_file(a.model)
    rep = AU.audit(m, a.E)
    ok = rep.passed
    res = rep.to_dict()
    res["audited_E"] = AU.audited_E(rep)
    return _status(ok, not rep.exact), res


def _amalgam(bundle, a):
    if bundle is None or bundle.amalgam is None:
        raise InputError("this command needs a product-family zoo model")
    d = bundle.amalgam
    if getattr(a, "M", None) is not None:
        from dataclasses import replace

        d = replace(d, M=a.M)
    return d


def _amalgam_of_file(a):
    """Amalgam data for certify and inject-verify; geometry-only files are enough."""
    try:
        rec = json.loads(Path(a.model).read_text()).get("recipe") or {}
    except (OSError, json.JSONDecodeError, AttributeError):
        rec = {}
    if rec.get("geometry_only"):
        try:
            d = zoo.product_amalgam(int(rec["N"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad recipe in {a.model}: {exc}") from None
        bundle = zoo.ZooBundle("f2xdxd", rec, None, amalgam=d)
    else:
        bundle, _ = load_model_file(a.model)
    return _amalgam(bundle, a)


def cmd_certify(a, cfg):
    d = _amalgam_of_file(a)
    try:
        res = AM.certify_nontrivial(d, a.word)
    except (AM.AmalgamError, ValueError) as exc:
        raise InputError(str(exc)) from None
    st = {AM.CERTIFIED: "pass", AM.TRIVIAL: "pass", AM.EVALUATED: "pass", AM.FAILED: "fail"}.get(res.status, "partial")
    out = res.to_dict()
    if res.status == AM.FAILED and res.hypotheses is not None:
        out["failing_hypotheses"] = res.hypotheses.failing()
    return st, out


def cmd_inject(a, cfg):
    d = _amalgam_of_file(a)
    rep = AM.verify_injectivity(d, a.syllables, a.exp)
    st = {"PASS": "pass", "FAIL": "fail"}.get(rep.status, "fail")
    out = rep.to_dict()
    if rep.status == "REFUSED":
        out["failing_hypotheses"] = rep.hypotheses.failing()
    return st, out


def _subset_from(a, bundle, m):
    return resolve_subset(bundle, m, a.subset, a.vertices, a.orbit, a.radius)


def cmd_hqc(a, cfg):
    bundle, m = load_model_file(a.model)
    s = _subset_from(a, bundle, m)
    t = CV.hqc_check(s, a.R)
    res = {"subset": s.label, "size": len(s), "kappa": t.to_dict()}
    if a.paths:
        lam = [Fraction(x) for x in a.lam]
        pt = CV.hqc_via_paths(s, lam, cfg.budget)
        res["Lambda"] = pt.to_dict()
        return _status(t.passed and pt.passed, not pt.extra["complete"]), res
    return _status(t.passed), res


def cmd_fill(a, cfg):
    bundle, m = load_model_file(a.model)
    A = resolve_subset(bundle, m, name=a.A)
    B = resolve_subset(bundle, m, name=a.B)
    res = CV.fill_all_squares(A, B)
    return _status(res["bounded"]), res


def cmd_no_drift(a, cfg):
    bundle, m = load_model_file(a.model)
    d = _amalgam(bundle, a)
    res = CV.no_drift_check(d, bundle.subset("A"), bundle.subset("B"))
    return _status(res["bounded"]), res


def cmd_dichotomy(a, cfg):
    bundle, m = load_model_file(a.model)
    s = _subset_from(a, bundle, m)
    rep = CV.orth_dichotomy(s, a.theta)
    return _status(rep.passed), {"subset": s.label, "size": len(s), **rep.to_dict()}


def cmd_hull(a, cfg):
    bundle, m = load_model_file(a.model)
    s = _subset_from(a, bundle, m)
    if len(m.ambient) > 5000:
        raise InputError("hull enumerates hierarchy paths; use a window with at most 5000 points")
    h, complete = CV.hull(s, Fraction(a.lam), a.iterations, cfg.budget)
    t = CV.hqc_check(h, a.R)
    res = {"subset": s.label, "size": len(s), "hull_size": len(h), "complete": complete,
           "hull": h.labels(),
           "contains_input": bool(np.isin(s.members, h.members).all()), "kappa": t.to_dict()}
    return _status(t.passed and res["contains_input"], not complete), res


def cmd_combined(a, cfg):
    bundle, m = load_model_file(a.model)
    d = _amalgam(bundle, a)
    res = CV.combined_amalgam_convexity(d, bundle.subset("A"), bundle.subset("B"), bundle.subset("AB"), a.R)
    ok = res["hqc_theorem"]["consistent"] and res["strong_theorem"]["consistent"]
    return _status(ok), res


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hhscert", description="Certify hierarchical structure, amalgams and convexity on finite windows.")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--format", choices=FORMATS, default="json", help="indented json or one-line compact")
    # the same two options are accepted after the subcommand; SUPPRESS keeps
    # an absent late option from overwriting an early one
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    common.add_argument("--format", choices=FORMATS, default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    zp = sub.add_parser("zoo", help="shipped models")
    zsub = zp.add_subparsers(dest="zoo_command", required=True, parser_class=_Parser)
    b = zsub.add_parser("build", parents=[common], help="build a zoo model and write its model file")
    b.add_argument("family")
    b.add_argument("--n", type=int, help="window radius (required unless --geometry-only)")
    b.add_argument("--N", type=int, default=1, help="twist exponent of the product family")
    b.add_argument("--nD", type=int, default=None, help="dihedral half-width (product family)")
    b.add_argument("-o", "--output")
    b.add_argument("--tables", action="store_true", help="embed the full tabulation")
    b.add_argument("--geometry-only", action="store_true",
                   help="product family: write the closed-form recipe only (for certify, inject-verify)")
    b.set_defaults(func=cmd_zoo_build, needs_model=False)

    def with_model(name, func, help_):
        q = sub.add_parser(name, parents=[common], help=help_)
        q.add_argument("model", nargs="?", help="model file written by zoo build")
        q.add_argument("--model", dest="model_opt", metavar="FILE", help="the model file, as an option")
        q.set_defaults(func=func, needs_model=True)
        return q

    q = with_model("audit", cmd_audit, "check every axiom and report minimal constants")
    q.add_argument("--E", type=int, default=None)
    q = with_model("certify", cmd_certify, "certify a word of the amalgam nontrivial")
    q.add_argument("--word", required=True)
    q.add_argument("--M", type=int, default=None)
    q = with_model("inject-verify", cmd_inject, "compare normal forms with evaluation on all short words")
    q.add_argument("--syllables", type=int, default=4)
    q.add_argument("--exp", type=int, default=2)
    q.add_argument("--M", type=int, default=None)
    q = with_model("hqc", cmd_hqc, "realisation gauge kappa, optionally the path gauge Lambda")
    _subset_args(q)
    q.add_argument("--R", type=int, nargs="+", default=[0, 1])
    q.add_argument("--paths", action="store_true", help="also enumerate hierarchy paths")
    q.add_argument("--lam", nargs="+", default=["1"])
    q = with_model("fill-squares", cmd_fill, "fill-all-squares constant of two subsets")
    _pair_args(q)
    q = with_model("no-drift", cmd_no_drift, "no drift in the orthogonals for the amalgam pair")
    q = with_model("dichotomy", cmd_dichotomy, "orthogonal projection dichotomy constant")
    _subset_args(q)
    q.add_argument("--theta", type=int, nargs="*", default=None)
    q = with_model("hull", cmd_hull, "hierarchy path hull of a subset")
    _subset_args(q)
    q.add_argument("--lam", default="1")
    q.add_argument("--iterations", type=int, default=1)
    q.add_argument("--R", type=int, nargs="+", default=[0, 1])
    q = with_model("combined", cmd_combined, "both combination theorems on the amalgam orbit ball")
    q.add_argument("--R", type=int, nargs="+", default=[0, 1])
    return p


def _scan(argv: list[str]) -> tuple[str, dict]:
    """Subcommand name and the --out/--format values, read without the parser.

    Used so that a malformed command line still gets its report written
    where and how it was asked for.
    """
    words, opts, key = [], {}, None
    for tok in argv:
        if key:
            opts[key], key = tok, None
        elif tok in ("--out", "--format"):
            key = tok[2:]
        elif not tok.startswith("-"):
            words.append(tok)
    name = " ".join(words[:2]) if words[:1] == ["zoo"] else (words[0] if words else "")
    return name, opts


def run(argv=None) -> tuple[int, dict]:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    command, early = _scan(argv)
    try:
        a = parser.parse_args(argv)
        if getattr(a, "needs_model", False):
            if a.model and a.model_opt and a.model != a.model_opt:
                raise InputError("two different model files given")
            a.model = a.model or a.model_opt
            if not a.model:
                raise InputError("a model file is required")
            del a.model_opt
        try:
            budget = int(os.environ.get(BUDGET_ENV, DEFAULT_BUDGET))
        except ValueError:
            raise InputError(f"{BUDGET_ENV} must be an integer") from None
        cfg = RunConfig(a.command, getattr(a, "model", None), vars(a), budget, a.out, a.format)
        status, result = a.func(a, cfg)
        inputs = {k: v for k, v in sorted(vars(a).items()) if k not in ("func", "needs_model", "out", "format")}
        rep = make_report(command, inputs, status, result)
    except (InputError, ModelError) as exc:
        rep = error_report(command, {"argv": argv}, str(exc))
        a = argparse.Namespace(out=early.get("out"), format=early.get("format", "json"))
    out = a.out
    text = dumps(rep, compact=a.format == "compact")
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    return rep["exit_code"], rep


def main(argv=None) -> int:
    code, _ = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
