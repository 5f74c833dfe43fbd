"""Scenario runner.

A scenario is a single YAML document naming a catalog model (or defining
one inline) and an ordered list of checks with parameters and tolerances.
Reports come in two formats: text (with residual tables and wall-clock
times) and structured JSON (schema 1, byte-deterministic for a fixed
seed; timing is text-only so that structured reports stay reproducible).

Exit codes: 0 scenario passed, 1 at least one check failed, 2 usage or
parse error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import algebra, algebroid, cartan, development, geometry, models, transport
SCHEMA_VERSION = 1


class ScenarioError(ValueError):
    pass


@dataclass
class CheckResult:
    name: str
    verdict: bool
    max_residual: float
    witnesses: dict = field(default_factory=dict)
    wall_clock: float = 0.0

    def structured(self) -> dict:
        return {
            "name": self.name,
            "verdict": "pass" if self.verdict else "fail",
            "max_residual": self.max_residual,
            "witnesses": self.witnesses,
        }


@dataclass
class Report:
    scenario: str
    seed: int
    checks: list[CheckResult]

    @property
    def verdict(self) -> bool:
        return all(c.verdict for c in self.checks)

    def structured(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "scenario": self.scenario,
            "seed": self.seed,
            "verdict": "pass" if self.verdict else "fail",
            "checks": [c.structured() for c in self.checks],
        }

    def to_json(self) -> str:
        return json.dumps(self.structured(), indent=2, sort_keys=False) + "\n"

    def to_text(self) -> str:
        lines = [f"scenario: {self.scenario}   seed: {self.seed}"]
        lines.append("-" * 72)
        for c in self.checks:
            word = "pass" if c.verdict else "FAIL"
            lines.append(f"{c.name:<34} {word:<5} residual {c.max_residual:.3e}"
                         f"   [{c.wall_clock:.2f}s]")
            for k, v in c.witnesses.items():
                if isinstance(v, list) and v and isinstance(v[0], dict):
                    lines.append(f"    {k}:")
                    lines.extend(f"      - {item}" for item in v)
                else:
                    lines.append(f"    {k}: {v}")
        lines.append("-" * 72)
        lines.append(f"verdict: {'pass' if self.verdict else 'FAIL'}")
        return "\n".join(lines) + "\n"


def report_from_structured(doc: dict) -> Report:
    if doc.get("schema") != SCHEMA_VERSION:
        raise ScenarioError(f"unsupported report schema {doc.get('schema')!r}")
    checks = [CheckResult(c["name"], c["verdict"] == "pass", c["max_residual"],
                          c.get("witnesses", {})) for c in doc["checks"]]
    return Report(doc["scenario"], doc["seed"], checks)


# -- scenario model resolution -------------------------------------------------

def _build_inline_action(block: dict):
    alg = algebra.LieAlgebra(np.asarray(block["algebra"]["structure_constants"], dtype=float))
    chart = geometry.Chart(tuple(block["chart"]["lower"]), tuple(block["chart"]["upper"]))
    fam = block["action"]["family"]
    if fam == "translation":
        action = lambda xi, m: np.asarray(xi, dtype=object)
    elif fam == "linear":
        gens = [np.asarray(g, dtype=float) for g in block["action"]["generators"]]
        def action(xi, m, _g=gens):
            mat = sum(x * g.astype(object) for x, g in zip(xi, _g))
            return mat @ np.asarray(m, dtype=object)
    elif fam == "exponential_line":
        action = models.scaling_action
    else:
        raise ScenarioError(f"unknown action family {fam!r}")
    return algebroid.make_action_algebroid(alg, action, chart)


def resolve_model(spec) -> tuple[str, object]:
    if isinstance(spec, str):
        try:
            return spec, models.load_model(spec)
        except KeyError as e:
            raise ScenarioError(str(e)) from None
    if isinstance(spec, dict) and "action_algebroid" in spec:
        return "inline-action-algebroid", _build_inline_action(spec["action_algebroid"])
    if isinstance(spec, dict) and "metric" in spec:
        metric = geometry.metric_by_name(spec["metric"])
        return f"riemannian:{spec['metric']}", models.build_riemannian_cartan(metric)
    raise ScenarioError("model must be a catalog name, an action_algebroid "
                        "block, or a metric block")


def _chart_of_model(model):
    if isinstance(model, models.CircleCounterexample):
        return model.cover.chart
    if isinstance(model, models.FlatTorus):
        return model.cover.chart
    if isinstance(model, models.RiemannianModel):
        return model.rc.chart
    if isinstance(model, algebroid.ActionAlgebroid):
        return model.chart
    if isinstance(model, models.RiemannianCartanChart):
        return model.chart
    raise ScenarioError(f"no algebroid chart for model of type {type(model).__name__}")


# -- check registry -------------------------------------------------------------

def _expect(params, default="pass"):
    return params.get("expect", default)


def _verdict_against_expect(passed: bool, expect: str) -> bool:
    if expect == "pass":
        return passed
    if expect == "fail":
        return not passed
    raise ScenarioError(f"expect must be pass or fail, got {expect!r}")


def check_is_cartan(model, params, ctx):
    chart = _chart_of_model(model)
    rep = cartan.is_cartan(chart, samples=params.get("samples", 50),
                           tol=params.get("tol", 1e-7) * ctx["tol_scale"],
                           seed=ctx["seed"])
    verdict = _verdict_against_expect(rep.verdict, _expect(params))
    return CheckResult("is_cartan", verdict, rep.max_residual,
                       {"samples": len(rep.per_point)})


def check_is_flat(model, params, ctx):
    chart = _chart_of_model(model)
    rep = cartan.is_flat(chart, samples=params.get("samples", 50),
                         tol=params.get("tol", 1e-7) * ctx["tol_scale"],
                         seed=ctx["seed"])
    verdict = _verdict_against_expect(rep.verdict, _expect(params))
    return CheckResult("is_flat", verdict, rep.max_residual,
                       {"samples": len(rep.per_point)})


def check_monodromy(model, params, ctx):
    if isinstance(model, models.CircleCounterexample):
        loop_list = [model.generator_loop]
        glued = model.glued
    elif isinstance(model, models.FlatTorus):
        loop_list = list(model.loops)
        glued = model.glued
    else:
        raise ScenarioError("monodromy check requires a glued catalog model")
    eigs = []
    worst = 0.0
    auto_res = 0.0
    for loop in loop_list:
        M = transport.monodromy(glued, loop)
        eigs.extend(sorted(np.abs(np.linalg.eigvals(M.matrix)).tolist()))
        auto_res = max(auto_res, algebra.is_automorphism(M.source, M).residual)
    expect_eigs = params.get("expect_eigenvalues")
    rtol = params.get("rtol", 1e-6) * ctx["tol_scale"]
    verdict = True
    if expect_eigs is not None:
        got = np.sort(np.asarray(eigs))
        want = np.sort(np.asarray(expect_eigs, dtype=float))
        worst = float(np.max(np.abs(got - want) / np.maximum(1.0, np.abs(want))))
        verdict = worst <= rtol
    verdict = verdict and auto_res <= params.get("automorphism_tol", 1e-6)
    return CheckResult("monodromy", verdict, worst,
                       {"eigenvalues": eigs, "automorphism_residual": auto_res})


def check_geodesic_escape(model, params, ctx):
    chart = _chart_of_model(model)
    res = transport.geodesic(chart, np.asarray(params["point"], dtype=float),
                             np.asarray(params["fiber"], dtype=float),
                             span=tuple(params.get("span", (0.0, 1.0))))
    t_star = params.get("expect_t_star")
    tol = params.get("tol", 1e-3) * ctx["tol_scale"]
    if t_star is not None:
        worst = abs(res.t_end - t_star)
        verdict = res.certified_incomplete and worst <= tol
    else:
        worst = 0.0
        verdict = res.status == params.get("expect_status", "completed")
    return CheckResult("geodesic_escape", verdict, worst,
                       {"status": res.status, "t_end": res.t_end})


def check_completeness(model, params, ctx):
    chart = _chart_of_model(model)
    seeds = [(np.asarray(s["point"], dtype=float), np.asarray(s["fiber"], dtype=float))
             for s in params["seeds"]]
    verdicts = transport.completeness_probe(chart, seeds,
                                            horizon=params.get("horizon", 100.0))
    expect = params.get("expect", "no-blowup-within-horizon")
    ok = all(v.verdict == expect for v in verdicts)
    return CheckResult("completeness", ok, 0.0,
                       {"verdicts": [v.verdict for v in verdicts],
                        "t_star": [v.t_star for v in verdicts]})


def check_scalar_form_fit(model, params, ctx):
    if not isinstance(model, (models.RiemannianModel, models.RiemannianCartanChart)):
        raise ScenarioError("scalar_form_fit requires a riemannian model")
    rc = model.rc if isinstance(model, models.RiemannianModel) else model
    rng = np.random.default_rng(ctx["seed"])
    pts = rc.metric.chart.sample_points(rng, params.get("points", 20))
    fits = [geometry.scalar_form_fit(rc.lc, rc.metric, m) for m in pts]
    svals = [f.s for f in fits]
    spread = max(svals) - min(svals)
    resid = max(f.residual for f in fits)
    verdict = True
    if "expect_abs_s" in params:
        verdict = abs(abs(np.mean(svals)) - params["expect_abs_s"]) <= \
            params.get("tol", 1e-6) * ctx["tol_scale"]
    verdict = verdict and spread <= params.get("spread_tol", 1e-6) * ctx["tol_scale"]
    return CheckResult("scalar_form_fit", verdict, max(spread, resid),
                       {"s_mean": float(np.mean(svals)), "spread": spread})


def check_classify(model, params, ctx):
    if not isinstance(model, models.RiemannianModel):
        raise ScenarioError("classify requires a riemannian catalog model")
    cls = models.classify_constant_curvature(model.rc, model.m0,
                                             tol=params.get("tol", 1e-6) * ctx["tol_scale"])
    verdict = cls.tag == params.get("expect_tag", cls.tag)
    return CheckResult("classify", verdict, cls.structure_residual,
                       {"tag": cls.tag, "s": cls.s, "model_algebra": cls.model_algebra,
                        "torsion_form": cls.torsion_form})


def check_invariant_metric(model, params, ctx):
    chart = _chart_of_model(model)
    name = params.get("metric", "model")
    if name == "model":
        if not isinstance(model, models.RiemannianModel):
            raise ScenarioError("metric: model requires a riemannian model")
        sigma = model.metric
    else:
        base = chart.base
        metric = geometry.metric_by_name(name)
        sigma = geometry.SmoothField(base, metric.shape,
                                     metric.fn, name=metric.name)
    rng = np.random.default_rng(ctx["seed"])
    rep = transport.invariant_metric_check(
        chart, sigma, tol=params.get("tol", 1e-7) * ctx["tol_scale"],
        samples=chart.base.sample_points(rng, params.get("samples", 10)))
    verdict = _verdict_against_expect(rep.verdict, _expect(params))
    return CheckResult("invariant_metric", verdict, rep.max_residual, {})


def check_compactness_probe(model, params, ctx):
    if isinstance(model, models.CircleCounterexample):
        M = transport.monodromy(model.glued, model.generator_loop)
        maps = [M]
    elif isinstance(model, models.FlatTorus):
        maps = [transport.monodromy(model.glued, lp) for lp in model.loops]
    else:
        raise ScenarioError("compactness probe requires a glued catalog model")
    rep = transport.monodromy_compactness_probe(maps)
    expect = params.get("expect", "consistent-with-compact-closure")
    witness = list(rep.witness_word) if rep.witness_word else None
    verdict = rep.verdict == expect
    if verdict and expect == "unbounded" and "expect_witness_length" in params:
        verdict = witness is not None and len(witness) == params["expect_witness_length"]
    return CheckResult("compactness_probe", verdict, rep.max_modulus_deviation,
                       {"verdict": rep.verdict, "witness_word": witness})


def check_reconstruct(model, params, ctx):
    if isinstance(model, models.CircleCounterexample):
        glued, homog, spec = model.glued, model.homog, model.atlas_spec
        loop_twists = [(model.generator_loop, model.deck.twist.matrix)]
    elif isinstance(model, models.FlatTorus):
        glued, homog, spec = model.glued, model.homog, model.atlas_spec
        loop_twists = list(zip(model.loops, (d.twist.matrix for d in model.decks)))
    else:
        raise ScenarioError("reconstruct requires a glued catalog model")

    def mono_residual():
        worst = 0.0
        for loop, twist in loop_twists:
            M = transport.monodromy(glued, loop).matrix
            scale = max(1.0, float(np.max(np.abs(twist))))
            worst = max(worst, float(np.max(np.abs(M - twist))) / scale)
        return worst

    atlas = development.reconstruct_atlas(glued, homog, spec,
                                          monodromy_check=mono_residual)
    worst = max((t.residual for t in atlas.transitions), default=0.0)
    verdict = atlas.passed
    if atlas.monodromy_residual is not None:
        verdict = verdict and atlas.monodromy_residual <= \
            params.get("monodromy_rtol", 1e-6) * ctx["tol_scale"]
    mult = params.get("expect_multiplier")
    witnesses = {
        "jacobian_min_abs_det": atlas.jacobian_min_abs_det,
        "monodromy_vs_twist": atlas.monodromy_residual,
        "transitions": [
            {"from": t.i, "to": t.j, "residual": t.residual,
             "multiplier": t.affine_matrix.tolist(),
             "offset": t.affine_offset.tolist()} for t in atlas.transitions],
    }
    if mult is not None:
        fitted = max(float(np.max(np.abs(t.affine_matrix))) for t in atlas.transitions)
        rel = abs(fitted - mult) / abs(mult)
        verdict = verdict and rel <= params.get("rtol", 1e-6) * ctx["tol_scale"]
        witnesses["fitted_multiplier"] = fitted
    return CheckResult("reconstruct", verdict, worst, witnesses)


def check_equivariance_diagram(model, params, ctx):
    rng = np.random.default_rng(ctx["seed"])
    tol = params.get("tol", 1e-5) * ctx["tol_scale"]
    if isinstance(model, models.CircleCounterexample):
        A, H, E = model.cover, model.homog, model.deck
        pts = rng.uniform(-0.5, 1.5, (params.get("samples", 6), 1))
        m0 = np.zeros(1)
    elif isinstance(model, models.FlatTorus):
        A, H, E = model.cover, model.homog, model.decks[0]
        pts = rng.uniform(-0.5, 0.5, (params.get("samples", 6), 2))
        m0 = np.zeros(2)
    else:
        raise ScenarioError("equivariance diagram requires a glued catalog model")
    rep = development.equivariance_diagram_check(A, H, E, m0, pts, tol=tol)
    return CheckResult("equivariance_diagram", rep.verdict, rep.max_residual, {})


def check_dual_pair(model, params, ctx):
    if not isinstance(model, models.LocalLieGroupModel):
        raise ScenarioError("dual_pair requires a local-Lie-group catalog model")
    rep = models.check_dual_pair(model.pair, tol=params.get("tol", 1e-8) * ctx["tol_scale"],
                                 seed=ctx["seed"])
    verdict = _verdict_against_expect(rep.verdict, _expect(params))
    return CheckResult("dual_pair", verdict, rep.max_residual, {})


def check_local_lie_group(model, params, ctx):
    rep = models.local_lie_group_check(model.pair,
                                       tol=params.get("tol", 1e-7) * ctx["tol_scale"],
                                       seed=ctx["seed"])
    return CheckResult("local_lie_group", rep.passed,
                       max(rep.flat_residual, rep.flat_bar_residual,
                           rep.parallel_torsion_residual),
                       {"jacobi_residual": rep.jacobi_residual})


def check_obstruction_form(model, params, ctx):
    rng = np.random.default_rng(ctx["seed"])
    pts = model.pair.chart.sample_points(rng, params.get("samples", 5))
    dw = 0.0
    wmax = 0.0
    for m in pts:
        ob = models.obstruction_form(model.pair, m)
        dw = max(dw, ob.dw_residual)
        wmax = max(wmax, float(np.max(np.abs(ob.w))))
    verdict = dw <= params.get("dw_tol", 1e-7) * ctx["tol_scale"]
    if params.get("expect_zero", False):
        verdict = verdict and wmax <= params.get("zero_tol", 1e-9) * ctx["tol_scale"]
    else:
        verdict = verdict and wmax > params.get("zero_tol", 1e-9)
    return CheckResult("obstruction_form", verdict, dw,
                       {"max_abs_w": wmax, "dw_residual": dw})


def check_cocycle(model, params, ctx):
    entries = {}
    for e in params["entries"]:
        key = (int(e["i"]), int(e["j"]))
        entries[key] = algebroid.AffineCocycleEntry(
            np.asarray(e["A"], dtype=float), np.asarray(e["b"], dtype=float),
            np.asarray(e["M"], dtype=float))
    rep = algebroid.check_cocycle(entries, tol=params.get("tol", 1e-9) * ctx["tol_scale"])
    verdict = _verdict_against_expect(rep.passed, _expect(params))
    return CheckResult("cocycle", verdict,
                       max(rep.identity_residual, rep.composition_residual),
                       {"failures": list(rep.failures)})


CHECKS = {
    "is_cartan": check_is_cartan,
    "is_flat": check_is_flat,
    "monodromy": check_monodromy,
    "geodesic_escape": check_geodesic_escape,
    "completeness": check_completeness,
    "scalar_form_fit": check_scalar_form_fit,
    "classify": check_classify,
    "invariant_metric": check_invariant_metric,
    "compactness_probe": check_compactness_probe,
    "reconstruct": check_reconstruct,
    "equivariance_diagram": check_equivariance_diagram,
    "dual_pair": check_dual_pair,
    "local_lie_group": check_local_lie_group,
    "obstruction_form": check_obstruction_form,
    "cocycle": check_cocycle,
}


def run_scenario(doc: dict, seed: int | None = None, tol_scale: float = 1.0) -> Report:
    if not isinstance(doc, dict) or "name" not in doc:
        raise ScenarioError("scenario must be a mapping with a 'name' field")
    name = doc["name"]
    seed = int(doc.get("seed", 42) if seed is None else seed)
    if tol_scale <= 0:
        raise ScenarioError("tolerance scale must be positive")
    model_name, model = resolve_model(doc.get("model"))
    ctx = {"seed": seed, "tol_scale": tol_scale}
    results = []
    for item in doc.get("checks", []) or []:
        if "op" not in item:
            raise ScenarioError("each check needs an 'op' field")
        op = item["op"]
        if op not in CHECKS:
            raise ScenarioError(f"unknown check op {op!r}; known: {sorted(CHECKS)}")
        params = {k: v for k, v in item.items() if k != "op"}
        for key, val in params.items():
            if (key == "tol" or key.endswith("_tol") or key == "rtol") and \
                    isinstance(val, (int, float)) and val <= 0:
                raise ScenarioError(f"tolerance {key} of check {op!r} must be positive")
        t0 = time.perf_counter()
        res = CHECKS[op](model, params, ctx)
        res.wall_clock = time.perf_counter() - t0
        results.append(res)
    return Report(name, seed, results)


def load_scenario_file(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ScenarioError(f"cannot read scenario file: {e}") from None
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        loc = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ScenarioError(f"scenario parse error{loc}: {e}") from None


def bundled_scenarios() -> dict[str, str]:
    out = {}
    pkg = resources.files("cartanlab") / "scenarios"
    for entry in sorted(pkg.iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".yaml"):
            out[entry.name[:-5]] = str(entry)
    return out


def list_examples() -> str:
    lines = ["catalog models:"]
    for name in sorted(models.CATALOG):
        lines.append(f"  {name}")
    lines.append("bundled scenarios:")
    for name, path in bundled_scenarios().items():
        lines.append(f"  {name}  ({path})")
    lines.append('metric families: euclidean(n), sphere(n), hyperbolic(n)')
    return "\n".join(lines) + "\n"


def export_report(report: Report, fmt: str) -> str:
    if fmt == "json":
        return report.to_json()
    if fmt == "text":
        return report.to_text()
    raise ScenarioError(f"unknown format {fmt!r}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="cartanlab",
                                     description="scenario runner for algebroid "
                                                 "connection certification")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a scenario file")
    p_run.add_argument("file")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--format", choices=["text", "json"], default="text")
    p_run.add_argument("--tol-scale", type=float, default=1.0)
    p_run.add_argument("--out", default=None, help="also write the report here")
    sub.add_parser("list-examples", help="list catalog models and scenarios")
    p_exp = sub.add_parser("export", help="re-render a structured report")
    p_exp.add_argument("report")
    p_exp.add_argument("--format", choices=["text", "json"], default="text")
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0

    if args.command == "list-examples":
        sys.stdout.write(list_examples())
        return 0

    if args.command == "export":
        try:
            doc = json.loads(Path(args.report).read_text())
            report = report_from_structured(doc)
            sys.stdout.write(export_report(report, args.format))
        except (OSError, json.JSONDecodeError, ScenarioError, KeyError) as e:
            sys.stderr.write(f"error: {e}\n")
            return 2
        return 0

    try:
        doc = load_scenario_file(args.file)
        report = run_scenario(doc, seed=args.seed, tol_scale=args.tol_scale)
    except ScenarioError as e:
        sys.stderr.write(f"error: {e}\n")
        return 2
    out_text = export_report(report, args.format)
    sys.stdout.write(out_text)
    if args.out:
        Path(args.out).write_text(report.to_json())
    return 0 if report.verdict else 1


if __name__ == "__main__":
    sys.exit(main())
