"""Command-line driver: ``calreg run|sweep|validate --config cfg.json``.

Every mode writes ``trace.csv`` and ``report.csv`` into the output directory;
``sweep`` writes ``sweep.csv`` with one summary row per parameter cell.
Outputs depend only on the config and seed.
"""
from __future__ import annotations

import argparse
import csv
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import characterization as ch
from . import lowerbound as lb
from . import properties
from . import uniform as un
from .config import ConfigError, ExperimentConfig, load_config
from .errors import ContractViolation
from .instances import InstanceSpec, random_fields, random_kernel, random_regularity_instance, substream, two_point_instance, notion_weights
from .regularity import TRACE_FIELDS, DistinguisherFamily, WeightFamily, run_regularity, trace_rows, update_cap

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_CONTRACT = 0, 1, 2, 3


@dataclass
class ModeOutput:
    trace: list[dict] = field(default_factory=list)
    trace_fields: tuple[str, ...] = TRACE_FIELDS
    report: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.get("passed", True) for r in self.report)


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, rows: list[dict], columns) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])


# -- modes ----------------------------------------------------------------------


def _regularity_instance(cfg: ExperimentConfig):
    if cfg.instance == "two_point":
        inst = two_point_instance(cfg.eps)
        inst.selection = cfg.selection
        inst.exact = cfg.exact
        inst.strict_bits = cfg.strict_bits
        return inst
    spec = InstanceSpec(N=cfg.N, L=cfg.L, eps=cfg.eps, n_fields=cfg.n_fields, notions=tuple(cfg.notions))
    return random_regularity_instance(spec, cfg.seed, cfg.selection, cfg.exact, cfg.strict_bits)


def run_nonuniform(cfg: ExperimentConfig) -> ModeOutput:
    inst = _regularity_instance(cfg)
    res = run_regularity(inst)
    cap = update_cap(inst.L, inst.eps)
    row = {
        "instance": cfg.instance, "N": inst.N, "L": inst.L, "eps": inst.eps, "seed": cfg.seed,
        "updates": res.updates, "cap": cap, "witness_F": res.witness_F, "witness_R": res.witness_R,
        "complexity": res.complexity, "h_drift": res.h_drift,
        "passed": res.updates <= cap and max(res.witness_F, res.witness_R) <= inst.eps + 1e-9,
    }
    return ModeOutput(trace_rows(res), TRACE_FIELDS, [row], {k: row[k] for k in ("updates", "cap", "witness_F", "witness_R", "passed")})


def _uniform_oracles(cfg, F, R, N, L):
    if cfg.oracle_A == "erm_distinguisher":
        A = un.erm_distinguisher(F, un.hoeffding_m(cfg.eps / 2, cfg.delta, 2 * len(F)))
    elif cfg.oracle_A == "exact_max_violation":
        A = un.exact_max_violation()
    else:
        A = un.zero_distinguisher(N, L)
    if cfg.oracle_B == "erm_calibration":
        B = un.erm_calibration_oracle(R, un.hoeffding_m(cfg.eps / 2, cfg.delta, len(R)))
    else:
        B = un.zero_calibration()
    return A, B


UNIFORM_TRACE = ("trial",) + TRACE_FIELDS


def run_uniform(cfg: ExperimentConfig) -> ModeOutput:
    out = ModeOutput(trace_fields=UNIFORM_TRACE)
    for t in range(cfg.trials):
        seed = cfg.seed * 100_003 + t
        rng = substream(seed, "instance")
        g = random_kernel(rng, cfg.N, cfg.L, 0.5, 0.25)
        mu = np.full(cfg.N, 1 / cfg.N)
        F = DistinguisherFamily(random_fields(rng, g, max(cfg.n_fields, 1)))
        R = WeightFamily(notion_weights(cfg.notions, cfg.eps), L=cfg.L)
        A, B = _uniform_oracles(cfg, F, R, cfg.N, cfg.L)
        res = un.run_uniform_regularity(un.UniformInstance(mu, g, A, B, cfg.eps, cfg.delta, seed=seed))
        vf, vr = un.true_violations(res.s, g, mu, F, R)
        out.trace += [dict(trial=t, **r) for r in trace_rows(res)]
        out.report.append({
            "trial": t, "updates": res.updates, "kappa_cap": un.kappa_cap(cfg.L, cfg.eps), "success": res.success,
            "true_F": vf, "true_R": vr, "passed": bool(res.success and vf <= cfg.eps and vr <= cfg.eps),
        })
    rate = float(np.mean([r["passed"] for r in out.report]))
    out.summary = {"trials": cfg.trials, "pass_rate": rate, "mean_updates": float(np.mean([r["updates"] for r in out.report]))}
    return out


def desk_hypothesis_class(rng, g_star, size: int) -> ch.HypothesisClass:
    """Random kernels, noisy copies of ``g*`` and the uniform kernel."""
    N, L = g_star.shape
    members = [np.full((N, L), 1 / L)]
    while len(members) < size:
        if len(members) % 2:
            members.append(0.7 * g_star + 0.3 * random_kernel(rng, N, L))
        else:
            members.append(random_kernel(rng, N, L))
    return ch.HypothesisClass(members[:size])


CHAR_TRACE = ("instance",) + TRACE_FIELDS


def run_characterize(cfg: ExperimentConfig) -> ModeOutput:
    out = ModeOutput(trace_fields=CHAR_TRACE)
    Phi = ch.NotionSet.builtins(cfg.eps, cfg.notions)
    for i in range(cfg.trials):
        rng = substream(cfg.seed * 100_003 + i, "characterize")
        g = random_kernel(rng, cfg.N, cfg.L, 0.5, 0.25)
        mu = np.full(cfg.N, 1 / cfg.N)
        G = desk_hypothesis_class(rng, g, cfg.hypothesis_size)
        F = ch.converse_fields(G, Phi, cfg.eps) + random_fields(rng, g, cfg.n_fields)
        res = ch.build_universal_simulator(g, F, Phi, cfg.eps, mu, cfg.selection, cfg.strict_bits)
        out.trace += [dict(instance=i, **r) for r in trace_rows(res)]
        fwd = ch.verify_forward(res.s, g, Phi, cfg.eps, mu)
        omni = ch.omnipredictor_check(res.s, g, G, Phi, cfg.eps, mu)
        for n in Phi:
            L = cfg.L
            gap = ch.scaled_gap(n, res.s, g, mu)
            conv = ch.verify_converse(res.s, g, G, n, cfg.eps, mu)
            out.report.append({
                "instance": i, "notion": n.name, "forward_slack": fwd[n.name], "omnipredictor_slack": omni[n.name],
                "converse_premise": conv.premise_ok, "converse_slack": conv.slack, "gap_minus_divergence": gap,
                "divergence": n.scale_for(L) * ch.divergence(n, g, n.transform(res.s), mu),
                "passed": fwd[n.name] >= -1e-9 and omni[n.name] >= -1e-9 and (not conv.premise_ok or conv.slack >= -1e-9),
            })
    out.summary = {"instances": cfg.trials, "min_forward": min(r["forward_slack"] for r in out.report),
                   "min_omnipredictor": min(r["omnipredictor_slack"] for r in out.report),
                   "passed": out.passed}
    return out


def run_lowerbound(cfg: ExperimentConfig) -> ModeOutput:
    rng = substream(cfg.seed, "lowerbound")
    design = lb.build_design(cfg.design_n, cfg.alpha, cfg.design_m, rng)
    inst = lb.build_lb_instance(design, rng)
    audit = design.audit()
    stress = lb.stress_test(inst, cfg.stress_size, rng)
    count = lb.counting_sweep(inst, tuple(cfg.lb_sizes), seed=cfg.seed)
    rows = [{"check": f"design_{k}", "value": float(v), "bound": 1.0, "passed": v} for k, v in sorted(audit.items())]
    rows.append({"check": "design_m", "value": float(design.m), "bound": float(cfg.design_m), "passed": design.m >= cfg.design_m})
    slack = lb.verify_entropy_bound(inst)
    rows.append({"check": "entropy_bound_slack", "value": slack, "bound": 0.0, "passed": slack >= -1e-12})
    chain = float(lb.pairwise_chain_slack(inst).min())
    rows.append({"check": "pairwise_chain_slack", "value": chain, "bound": 0.0, "passed": chain >= -1e-12})
    rows.append({"check": "stress_counterexamples", "value": float(stress.counterexamples), "bound": 0.0,
                 "passed": stress.counterexamples == 0})
    rows.append({"check": "stress_non_vacuous", "value": float(stress.non_vacuous), "bound": 1.0, "passed": stress.non_vacuous >= 1})
    rows.append({"check": "stress_route_disagreements", "value": float(stress.route_disagreements), "bound": 0.0,
                 "passed": stress.route_disagreements == 0})
    for k, fr in zip(count.sizes, count.fractions):
        rows.append({"check": f"counting_fraction_{k}", "value": fr, "bound": 1.0, "passed": True})
    rows.append({"check": "counting_strictly_decreasing", "value": count.log_slope, "bound": 0.0,
                 "passed": count.strictly_decreasing})
    out = ModeOutput(trace_fields=("set_index", "eta", "members"))
    out.trace = [{"set_index": i, "eta": int(inst.eta[i]), "members": " ".join(map(str, s))}
                 for i, s in enumerate(design.to_lists())]
    out.report = rows
    out.summary = {"design_m": design.m, "entropy_slack": slack, "counterexamples": stress.counterexamples,
                   "passed": out.passed}
    return out


def run_properties(cfg: ExperimentConfig) -> ModeOutput:
    rows = properties.run_all(cfg.seed, cfg.quick)
    out = ModeOutput(trace_fields=("suite", "check", "cases"))
    out.trace = [{"suite": r.suite, "check": r.check, "cases": r.cases} for r in rows]
    out.report = [dict(r.__dict__) for r in rows]
    out.summary = {"checks": len(rows), "failed": sum(not r.passed for r in rows), "passed": out.passed}
    return out


RUNNERS = {
    "nonuniform": run_nonuniform,
    "uniform": run_uniform,
    "characterize": run_characterize,
    "lowerbound": run_lowerbound,
    "properties": run_properties,
}


def execute(cfg: ExperimentConfig) -> ModeOutput:
    return RUNNERS[cfg.mode](cfg)


def emit(out: ModeOutput, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(out_dir / "trace.csv", out.trace, out.trace_fields)
    cols = list(out.report[0].keys()) if out.report else ["passed"]
    write_csv(out_dir / "report.csv", out.report, cols)


def threads() -> int:
    try:
        return max(1, int(os.environ.get("CALREG_THREADS", "1")))
    except ValueError:
        return 1


def sweep(cfg: ExperimentConfig, out_dir: Path) -> tuple[list[dict], bool]:
    cells = cfg.cells()
    with ThreadPoolExecutor(max_workers=threads()) as pool:
        outs = list(pool.map(lambda c: execute(c[1]), cells))
    keys = sorted(cfg.sweep)
    rows = []
    for (params, _), out in zip(cells, outs):
        rows.append({**{k: params.get(k, "") for k in keys}, **out.summary})
    out_dir.mkdir(parents=True, exist_ok=True)
    cols = keys + [k for k in outs[0].summary if k not in keys]
    write_csv(out_dir / "sweep.csv", rows, cols)
    return rows, all(o.passed for o in outs)


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.mode is not None:
        changes["mode"] = args.mode
    if args.out_dir is not None:
        changes["out_dir"] = args.out_dir
    if args.strict_bits:
        changes["strict_bits"] = True
    return replace(cfg, **changes).validate()


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="calreg", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("run", "sweep", "validate"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON config; defaults apply when omitted")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out-dir")
        sp.add_argument("--mode", choices=sorted(RUNNERS))
        sp.add_argument("--strict-bits", action="store_true", help="track the fixed-point dual iterate")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig().validate()
        cfg = _apply_overrides(cfg, args)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "validate":
        print(cfg.to_json(), end="")
        return EXIT_OK
    out_dir = Path(cfg.out_dir)
    try:
        if args.command == "sweep":
            rows, ok = sweep(cfg, out_dir)
            for r in rows:
                print(", ".join(f"{k}={_fmt(v)}" for k, v in r.items()))
        else:
            out = execute(cfg)
            emit(out, out_dir)
            ok = out.passed
            print(", ".join(f"{k}={_fmt(v)}" for k, v in out.summary.items()))
    except ContractViolation as exc:
        print(f"contract failure: {exc.invariant}: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    return EXIT_OK if ok else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
