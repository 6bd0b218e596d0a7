"""Command-line pipeline: generate -> quantify -> analyze -> simulate / mitigate / validate.

Every command writes a run manifest next to its outputs; ``rerun`` replays a
manifest and, with ``--check``, verifies the outputs came out byte-identical.
Exit codes: 0 success, 2 validation error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import contextlib
import hashlib
import json
import logging
import os
import platform
import sys
import time
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .cascades import CascadeError, CascadeSet, load_cascades, save_cascades, take_prefix
from .experiments import derive_seed, efficiency_ratio, mean_distribution, mitigation_comparison, repeat_lambda
from .network import (
    DEFAULT_EPSILON,
    all_link_indices,
    build_network,
    key_component_report,
    key_link_report,
    layered_subgraph,
    propagation_capacity_network,
    strengths,
)
from .persist import (
    PersistError,
    dump_json,
    load_matrix,
    load_quantification,
    save_quantification,
    write_network,
    write_rows,
)
from .quantify import quantify
from .sample_size import SampleSizeError, find_M_min, find_Mu_min, link_count_curve, propagation_capacity_original
from .simulate import MitigationPlan, SimConfig, apply_mitigation, run_simulation
from .stats import ccdf_table, compare_distributions, estimate_lambda, initial_distribution, normalize_weights, outage_distribution, similarity
from .synthetic import GroundTruthSpec, generate, load_ground_truth, make_ground_truth, save_ground_truth

log = logging.getLogger("cascade_interaction")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3


class _Run:
    """Collects what a command read, wrote and how long it took."""

    def __init__(self, command: str, argv: Sequence[str], manifest_path: Path):
        self.command = command
        self.argv = list(argv)
        self.manifest_path = manifest_path
        self.inputs: list[str] = []
        self.outputs: list[Path] = []
        self.seeds: dict[str, int] = {}
        self.timings: dict[str, float] = {}
        self.config: dict = {}
        self._t0 = time.perf_counter()

    def output(self, path: Path) -> Path:
        self.outputs.append(Path(path))
        return Path(path)

    @contextlib.contextmanager
    def timed(self, key: str):
        t = time.perf_counter()
        yield
        self.timings[key] = time.perf_counter() - t

    def write(self) -> None:
        self.timings["wall"] = time.perf_counter() - self._t0
        doc = {
            "command": self.command,
            "argv": self.argv,
            "cwd": os.getcwd(),
            "config": self.config,
            "seeds": self.seeds,
            "inputs": self.inputs,
            "outputs": {str(p): _sha256(p) for p in self.outputs if p.exists()},
            "timings": self.timings,
            "version": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        }
        self.manifest_path.parent.mkdir(parents=True, exist_ok=True)
        self.manifest_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _out_dir(path: str) -> Path:
    d = Path(path)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _load(args) -> CascadeSet:
    return load_cascades(args.cascades, args.format, n_components=args.n_components, dedupe=args.dedupe == "first")


def _distribution_rows(dist) -> list[tuple[int, float]]:
    return sorted(dist.probabilities.items())


# --------------------------------------------------------------------- commands


def cmd_generate(args, run: _Run) -> dict:
    spec = GroundTruthSpec(
        kind=args.kind,
        n=args.n,
        b_range=tuple(args.b_range),
        tau_range=tuple(args.tau_range),
        density=args.density,
        preferential=args.preferential,
        log_uniform=args.log_uniform,
        seed=args.truth_seed,
    )
    gt = make_ground_truth(spec)
    run.seeds.update(truth=args.truth_seed, cascades=args.seed)
    with run.timed("t_generate"):
        cs = generate(gt, args.count, seed=args.seed, streams=args.streams)
    run.timings["t1_per_cascade"] = run.timings["t_generate"] / args.count
    save_cascades(cs, run.output(Path(args.out)))
    if args.truth:
        save_ground_truth(gt, run.output(Path(args.truth)))
    return {"M": cs.M, "n_components": cs.n_components, "n_true_links": gt.matrix.n_links, "lambda": estimate_lambda(cs)}


def cmd_quantify(args, run: _Run) -> dict:
    cs = _load(args)
    run.inputs.append(args.cascades)
    if args.prefix:
        cs = take_prefix(cs, args.prefix)
    with run.timed("T_quantify"):
        q = quantify(cs)
    out = _out_dir(args.out)
    save_quantification(out, q)
    for name in ("A.csv", "A_prime.csv", "B.csv", "tau.csv", "N.csv", "N0.csv", "f0.csv", "header.json"):
        run.output(out / name)
    report = {
        "n": q.matrix.n,
        "M_u": q.matrix.M_u,
        "n_links": q.matrix.n_links,
        "sparsity": q.matrix.sparsity,
        "r_id": q.r_id,
        "lambda": estimate_lambda(cs),
        "pc_original": propagation_capacity_original(cs),
    }
    dump_json(run.output(out / "quantify_report.json"), report)
    return report


def cmd_analyze(args, run: _Run) -> dict:
    q = load_quantification(args.quant)
    run.inputs.append(args.quant)
    names = None
    if args.names:
        names = json.loads(Path(args.names).read_text(encoding="utf-8"))
        run.inputs.append(args.names)
    with run.timed("t_link_indices"):
        net = all_link_indices(build_network(q.matrix), q.counts, mode=args.mode)
    out = _out_dir(args.out)
    write_network(run.output(out / "network.csv"), net)
    if net.n_links == 0:
        report = {"n_links": 0, "key_links": None, "key_components": None}
        dump_json(run.output(out / "analysis.json"), report)
        return report
    links = key_link_report(net, args.eps_link, names)
    dump_json(run.output(out / "key_links.json"), links)
    s_out, s_in = strengths(net)
    comps = key_component_report(net, args.eps_comp, names) if s_out.max() > 0 else None
    dump_json(run.output(out / "key_components.json"), comps)
    write_rows(run.output(out / "strengths.csv"), ("i", "s_out", "s_in"), ((k, s_out[k], s_in[k]) for k in range(net.n)))
    # absent entries of B count as zero-weight links
    n_zero = net.n * (net.n - 1) - net.n_links
    write_rows(run.output(out / "ccdf_link_weight.csv"), ("value", "ccd_probability"), ccdf_table(net.weights, n_zero=n_zero))
    write_rows(run.output(out / "ccdf_out_strength.csv"), ("value", "ccd_probability"), ccdf_table(s_out))
    write_rows(run.output(out / "ccdf_in_strength.csv"), ("value", "ccd_probability"), ccdf_table(s_in))
    gen0 = all_link_indices(build_network(q.matrix), q.counts, mode="gen0")
    report = {
        "n_links": net.n_links,
        "n_key_links": links["n_key_links"],
        "key_link_percent": links["key_link_percent"],
        "n_key_components": comps["n_key_components"] if comps else 0,
        "key_component_percent": comps["key_component_percent"] if comps else None,
        "pc_network": propagation_capacity_network(gen0.weights, q.matrix.M_u),
        # vertices whose parent was picked by the max-flow tie rule, summed over links
        "tie_rule_invocations": sum(layered_subgraph(net, link[:2]).tie_breaks for link in net.links),
    }
    dump_json(run.output(out / "analysis.json"), report)
    return report


def _simulate_outputs(run: _Run, cs: CascadeSet, out: Path, discarded: int) -> dict:
    save_cascades(cs, run.output(out))
    stem = out.with_suffix("")
    total = outage_distribution(cs)
    initial = initial_distribution(cs)
    write_rows(run.output(Path(f"{stem}.distribution.csv")), ("total", "probability"), _distribution_rows(total))
    write_rows(run.output(Path(f"{stem}.initial_distribution.csv")), ("total", "probability"), _distribution_rows(initial))
    write_rows(run.output(Path(f"{stem}.ccdf.csv")), ("value", "ccd_probability"), ccdf_table(total.samples()))
    stats = {"M": cs.M, "discarded_empty": discarded, "lambda": estimate_lambda(cs), "mean_total": total.mean()}
    dump_json(run.output(Path(f"{stem}.stats.json")), stats)
    return stats


def cmd_simulate(args, run: _Run) -> dict:
    matrix = load_matrix(args.matrix, args.tau)
    run.inputs += [args.matrix, args.tau]
    if args.plan:
        plan = MitigationPlan.from_json(json.loads(Path(args.plan).read_text(encoding="utf-8")))
        if args.weaken is not None:
            plan = MitigationPlan(plan.links, args.weaken)
        matrix = apply_mitigation(matrix, plan)
        run.inputs.append(args.plan)
    cfg = SimConfig(args.count, args.seed, args.streams, args.workers, args.tau_mode == "nonempty")
    run.seeds["simulate"] = args.seed
    with run.timed("T2_simulate"):
        sim = run_simulation(matrix, cfg)
    run.timings["t2_per_cascade"] = run.timings["T2_simulate"] / args.count
    return _simulate_outputs(run, sim.cascades, Path(args.out), sim.discarded)


def cmd_mitigate(args, run: _Run) -> dict:
    q = load_quantification(args.quant)
    run.inputs.append(args.quant)
    run.seeds["mitigate"] = args.seed
    out = _out_dir(args.out)
    if args.plan:
        plan = MitigationPlan.from_json(json.loads(Path(args.plan).read_text(encoding="utf-8")))
        run.inputs.append(args.plan)
        plan = MitigationPlan(plan.links, args.weaken)
        lams, sets = repeat_lambda(apply_mitigation(q.matrix, plan), args.count, args.reps, derive_seed(args.seed, 1), args.streams, args.workers)
        arr = np.array(lams)
        report = {
            "weaken": args.weaken,
            "plan": plan.to_json(),
            "lambda": {"mean": float(arr.mean()), "std": float(arr.std(ddof=1)) if arr.size > 1 else 0.0, "values": lams},
            "distribution": mean_distribution(sets),
        }
    else:
        report = mitigation_comparison(
            q,
            count=args.count,
            reps=args.reps,
            seed=args.seed,
            epsilon=args.eps_link,
            weaken=args.weaken,
            n_random=args.random,
            streams=args.streams,
            workers=args.workers,
        )
        dump_json(run.output(out / "key_link_plan.json"), {"links": report["key_links"], "weaken": args.weaken})
        rows = [
            ("intentional", report["intentional"]["weakened_weight"]["mean"], report["intentional"]["weakened_weight"]["std"],
             report["intentional"]["lambda"]["mean"], report["intentional"]["lambda"]["std"]),
            ("random", report["random"]["weakened_weight"]["mean"], report["random"]["weakened_weight"]["std"],
             report["random"]["lambda"]["mean"], report["random"]["lambda"]["std"]),
        ]
        write_rows(run.output(out / "mitigation_summary.csv"), ("strategy", "weight_mean", "weight_std", "lambda_mean", "lambda_std"), rows)
    dump_json(run.output(out / "mitigation_report.json"), report)
    return {k: v for k, v in report.items() if k in ("n_weakened", "weaken", "lambda")} | {
        k: report[k]["lambda"]["mean"] for k in ("baseline", "intentional", "random") if k in report
    }


def cmd_validate(args, run: _Run) -> dict:
    ori = load_cascades(args.original)
    sim = load_cascades(args.simulated)
    run.inputs += [args.original, args.simulated]
    out = _out_dir(args.out)
    q_ori, q_sim = quantify(ori), quantify(sim)
    w_ori = all_link_indices(build_network(q_ori.matrix), q_ori.counts).weight_map()
    w_sim = all_link_indices(build_network(q_sim.matrix), q_sim.counts).weight_map()
    w_sim = normalize_weights(w_sim, sim.M, ori.M)
    sim_report = similarity(w_ori, w_sim)
    comparison = compare_distributions(outage_distribution(ori), outage_distribution(sim))
    write_rows(
        run.output(out / "distribution_comparison.csv"),
        ("total", "p_original", "p_simulated", "std_error", "z", "agrees"),
        ((r["total"], r["p_original"], r["p_simulated"], r["std_error"], r["z"], int(r["agrees"])) for r in comparison),
    )
    report = {
        "M_original": ori.M,
        "M_simulated": sim.M,
        "lambda_original": estimate_lambda(ori),
        "lambda_simulated": estimate_lambda(sim),
        "similarity": sim_report.as_dict(),
        "bins_checked": len(comparison),
        "bins_agreeing": sum(r["agrees"] for r in comparison),
    }
    dump_json(run.output(out / "validation.json"), report)
    return report


def cmd_samplesize(args, run: _Run) -> dict:
    cs = _load(args)
    run.inputs.append(args.cascades)
    out = _out_dir(args.out)
    report: dict = {}
    if not args.skip_curve:
        grid = args.grid if args.grid else None
        curve = link_count_curve(cs, grid)
        write_rows(run.output(out / "link_count_curve.csv"), ("M", "card_L", "sigma"), curve.rows())
        try:
            report["M_min"] = find_M_min(curve, args.theta)
        except SampleSizeError as exc:
            report["M_min"] = None
            report["M_min_error"] = str(exc)
        report["grid"] = list(curve.grid)
        report["card_L_final"] = curve.counts[-1]
        report["card_L_max"] = max(curve.counts)
    trace = find_Mu_min(cs, args.eps_pc, args.dm1, args.dm2, args.mu0)
    write_rows(
        run.output(out / "mu_trace.csv"),
        ("M_u", "PC_ori", "PC_G", "delta_PC", "r_id", "satisfied"),
        ((p.M_u, p.pc_original, p.pc_network, p.delta, p.r_id, int(p.satisfied)) for p in trace.visited),
    )
    report.update({
        "M_u_min": trace.result,
        "eps_pc": args.eps_pc,
        "dM1": args.dm1,
        "dM2": args.dm2,
        "M_u0": args.mu0,
        "dM1_iterations": trace.n_ascents,
        "dM2_iterations": trace.n_descents,
        "M_un": trace.M_un,
        "hit_floor": trace.hit_floor,
    })
    dump_json(run.output(out / "samplesize.json"), report)
    return report


def cmd_benchmark(args, run: _Run) -> dict:
    gt = load_ground_truth(args.truth) if args.truth else make_ground_truth(GroundTruthSpec(kind="random-sparse", n=args.n, density=args.density, b_range=(0.05, 0.3), tau_range=(1e-3, 1e-3), seed=args.seed))
    run.seeds["benchmark"] = args.seed
    with run.timed("T1_generate"):
        originals = generate(gt, args.m_u, seed=derive_seed(args.seed, 0))
    t1 = args.t1 if args.t1 is not None else run.timings["T1_generate"] / args.m_u
    with run.timed("T_quantify"):
        q = quantify(originals)
    with run.timed("T2_simulate"):
        run_simulation(q.matrix, SimConfig(args.count, derive_seed(args.seed, 1), tau_given_nonempty=True))
    t2 = run.timings["T2_simulate"] / args.count
    T = run.timings["T_quantify"]
    ratios = {str(N): efficiency_ratio(N, args.count, args.m_u, t1, T, t2) for N in args.sets}
    run.timings.update(t1=t1, t2=t2, T=T)
    report = {
        "n": gt.matrix.n,
        "n_links": q.matrix.n_links,
        "cascades_per_second": 1.0 / t2,
        "t1": t1,
        "t2": t2,
        "T": T,
        "R": ratios,
        "R_limit": t1 / t2,
    }
    run.config["R"] = ratios
    # timings are machine-dependent: the report goes to stdout and the manifest only
    return report


def cmd_rerun(args) -> int:
    manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    before = manifest.get("outputs", {})
    cwd = os.getcwd()
    try:
        os.chdir(manifest["cwd"])
        code = main(manifest["argv"])
        if code != EXIT_OK or not args.check:
            return code
        mismatched = [p for p, digest in before.items() if not Path(p).exists() or _sha256(Path(p)) != digest]
    finally:
        os.chdir(cwd)
    if mismatched:
        print(json.dumps({"reproduced": False, "mismatched": mismatched}, indent=2))
        return 1
    print(json.dumps({"reproduced": True, "outputs": len(before)}, indent=2))
    return EXIT_OK


# ----------------------------------------------------------------------- parser


def _add_input(p: argparse.ArgumentParser) -> None:
    p.add_argument("--cascades", required=True, help="cascade file (.json or .csv)")
    p.add_argument("--format", choices=("json", "csv"), help="override format detection")
    p.add_argument("--n-components", type=int, help="component count for CSV files without metadata")
    p.add_argument("--dedupe", choices=("none", "first"), default="none", help="repeated component policy")


def _add_sim(p: argparse.ArgumentParser, count_default: int = 41000) -> None:
    p.add_argument("--count", type=int, default=count_default, help="cascades per simulated set")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--streams", type=int, default=1, help="independent RNG streams")
    p.add_argument("--workers", type=int, default=1, help="processes; output does not depend on it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cascade-interaction", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--manifest", help="manifest path (default: next to the outputs)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="draw original cascades from a synthetic ground truth")
    p.add_argument("--kind", choices=("chain", "tree", "random-sparse"), default="tree")
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--b-range", type=float, nargs=2, default=(0.2, 0.8))
    p.add_argument("--tau-range", type=float, nargs=2, default=(0.01, 0.01))
    p.add_argument("--density", type=float, default=0.05)
    p.add_argument("--preferential", type=float, default=0.0)
    p.add_argument("--log-uniform", action="store_true", help="draw b and tau log-uniformly in their ranges")
    p.add_argument("--truth-seed", type=int, default=0)
    p.add_argument("--truth", help="write the ground truth JSON here")
    p.add_argument("--out", required=True)
    _add_sim(p, 10000)

    p = sub.add_parser("quantify", help="estimate A, A', B and tau from cascades")
    _add_input(p)
    p.add_argument("--prefix", type=int, help="use only the first M_u cascades")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("analyze", help="link indices, key links and key components")
    p.add_argument("--quant", required=True, help="directory written by quantify")
    p.add_argument("--eps-link", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--eps-comp", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--mode", choices=("total", "gen0"), default="total")
    p.add_argument("--names", help="JSON list of component labels")
    p.add_argument("--out", required=True)

    p = sub.add_parser("simulate", help="simulate cascades with the interaction model")
    p.add_argument("--matrix", required=True, help="B triplet CSV")
    p.add_argument("--tau", required=True, help="tau vector CSV")
    p.add_argument("--plan", help="mitigation plan JSON applied before simulating")
    p.add_argument("--weaken", type=float, help="override the plan's weaken factor")
    p.add_argument(
        "--tau-mode",
        choices=("nonempty", "bernoulli"),
        default="nonempty",
        help="nonempty: tau are generation-0 rates among nonempty cascades (quantify output); "
        "bernoulli: tau are raw per-draw failure probabilities",
    )
    p.add_argument("--out", required=True, help="cascade output file")
    _add_sim(p)

    p = sub.add_parser("mitigate", help="compare intentional and random link weakening")
    p.add_argument("--quant", required=True)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--key-links", action="store_true", help="intentional vs random of equal size (default)")
    group.add_argument("--plan", help="evaluate a fixed plan JSON")
    p.add_argument("--random", type=int, help="number of random links (default: number of key links)")
    p.add_argument("--eps-link", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--weaken", type=float, default=0.9)
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--out", required=True)
    _add_sim(p)

    p = sub.add_parser("validate", help="compare original and simulated cascades")
    p.add_argument("--original", required=True)
    p.add_argument("--simulated", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("samplesize", help="link saturation curve and M_u search")
    _add_input(p)
    p.add_argument("--grid", type=int, nargs="+", help="cascade counts (default: doubling then linear)")
    p.add_argument("--theta", type=float, default=0.01)
    p.add_argument("--skip-curve", action="store_true")
    p.add_argument("--eps-pc", type=float, default=0.01)
    p.add_argument("--dm1", type=int, default=1000)
    p.add_argument("--dm2", type=int, default=100)
    p.add_argument("--mu0", type=int, default=100)
    p.add_argument("--out", required=True)

    p = sub.add_parser("benchmark", help="throughput and efficiency ratio")
    p.add_argument("--truth", help="ground truth JSON (default: random-sparse system)")
    p.add_argument("--n", type=int, default=186)
    p.add_argument("--density", type=float, default=0.012)
    p.add_argument("--m-u", type=int, default=2000)
    p.add_argument("--count", type=int, default=5000)
    p.add_argument("--t1", type=float, help="seconds per cascade of the detailed model (default: measured)")
    p.add_argument("--sets", type=int, nargs="+", default=[1, 10, 100, 1000])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="directory for the manifest")

    p = sub.add_parser("rerun", help="replay a manifest")
    p.add_argument("manifest")
    p.add_argument("--check", action="store_true", help="fail unless outputs are byte-identical")
    return parser


COMMANDS = {
    "generate": cmd_generate,
    "quantify": cmd_quantify,
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "mitigate": cmd_mitigate,
    "validate": cmd_validate,
    "samplesize": cmd_samplesize,
    "benchmark": cmd_benchmark,
}


def _manifest_path(args) -> Path:
    if args.manifest:
        return Path(args.manifest)
    out = Path(args.out)
    if out.suffix and not out.is_dir():
        return Path(f"{out.with_suffix('')}.manifest.json")
    return out / "manifest.json"


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "rerun":
        return cmd_rerun(args)
    run = _Run(args.command, argv, _manifest_path(args))
    run.config = {k: v for k, v in vars(args).items() if k not in ("verbose",)}
    try:
        summary = COMMANDS[args.command](args, run)
        run.write()
    except (CascadeError, PersistError, SampleSizeError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(json.dumps(summary, indent=2, sort_keys=True, default=float))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
