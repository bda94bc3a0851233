"""Command-line surface: reproducible certification workflows with stable
file formats.

One command produces one output document, written atomically; identical
configurations (including seeds) produce byte-identical files.  All angles
are radians unless --degrees is given, which converts at parse time only.

Exit codes: 0 success, 2 precondition violation, 3 uncertifiable (bounds
computed but vacuous), 4 enumeration cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import feasibility as feas
from . import oracle, rl, serialize
from .fejer import fejer_kernel, filtered_distribution, success_probability
from .instance import (
    DEFAULT_ENUMERATION_CAP,
    CapExceededError,
    GapScope,
    format_string,
    index_string,
    load_instance_file,
    phase_gap,
)
from .mixer import (
    Envelope,
    MixerConvention,
    envelope_mass,
    external_envelope,
    mixer_envelope,
    uniform_envelope,
)
from .planner import build_certificate, cmin_curve

EXIT_OK = 0
EXIT_PRECONDITION = 2
EXIT_UNCERTIFIABLE = 3
EXIT_CAP = 4

BOUND_SLACK = 1e-9


def _float_list(text: str) -> list:
    text = text.strip()
    if not text:
        return []
    return [float(part) for part in text.split(",")]


def _grid(text: str) -> list:
    """Either a comma list of values or 'start:stop:count' for a linspace."""
    if ":" in text:
        start, stop, count = text.split(":")
        return [float(v) for v in np.linspace(float(start), float(stop), int(count))]
    return _float_list(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fejercert",
        description="Certification toolkit for Fejér-filtered sampling on block one-hot spaces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--output", "-o", required=True, help="output document path")
        p.add_argument("--cap", type=int, default=DEFAULT_ENUMERATION_CAP,
                       help="enumeration cap on n**m (default %(default)s)")
        p.add_argument("--degrees", action="store_true",
                       help="interpret angle arguments in degrees")

    certify = sub.add_parser("certify", help="end-to-end success certificate for an instance")
    add_common(certify)
    certify.add_argument("--instance", required=True)
    certify.add_argument("--gamma", type=float, required=True, help="base cost angle")
    certify.add_argument("--order", "-p", type=int, required=True, help="filter order p")
    certify.add_argument("--betas", type=_float_list, default=None,
                         help="comma-separated mixer angles (one per layer)")
    certify.add_argument("--envelope", default=None,
                         help="JSON array with an external diagonal envelope")
    certify.add_argument("--law-output", default=None,
                         help="also write the exact filtered law as CSV")
    certify.add_argument("--epsilon", type=float, default=0.1)
    certify.add_argument("--eta", type=float, default=0.5)
    certify.add_argument("--scope", choices=["all", "feasible"], default="all")
    certify.add_argument("--convention", choices=["adjacency", "normalized"], default="adjacency")

    plan = sub.add_parser("plan", help="certificate arithmetic from given (p, C_beta, delta)")
    add_common(plan)
    plan.add_argument("--order", "-p", type=int, required=True)
    plan.add_argument("--c-beta", type=float, required=True)
    plan.add_argument("--delta", type=float, required=True)
    plan.add_argument("--epsilon", type=float, default=0.1)
    plan.add_argument("--eta", type=float, default=0.5)

    curves = sub.add_parser("curves", help="C_min certification curves as CSV")
    add_common(curves)
    curves.add_argument("--deltas", type=_grid, required=True,
                        help="comma list or start:stop:count grid of phase gaps")
    curves.add_argument("--orders", type=_float_list, required=True,
                        help="comma-separated filter orders")
    curves.add_argument("--epsilon", type=float, default=0.1)

    envelope = sub.add_parser("envelope", help="mixer envelope of an instance")
    add_common(envelope)
    envelope.add_argument("--instance", required=True)
    envelope.add_argument("--betas", type=_float_list, default=[])
    envelope.add_argument("--v0", default=None, help="JSON array with an external initial diagonal")
    envelope.add_argument("--convention", choices=["adjacency", "normalized"], default="adjacency")
    envelope.add_argument("--format", choices=["json", "csv"], default="json")

    feasibility = sub.add_parser("feasibility", help="level sets, connectivity, and feasibility bounds")
    add_common(feasibility)
    feasibility.add_argument("--instance", required=True)
    feasibility.add_argument("--gamma", type=float, required=True)
    feasibility.add_argument("--search-order", type=int, default=2)
    feasibility.add_argument("--budget", type=int, default=200, help="angle-search evaluations")
    feasibility.add_argument("--seed", type=int, default=0)
    feasibility.add_argument("--no-search", action="store_true")

    rl_cmd = sub.add_parser("rl", help="dither-averaged filtering report")
    add_common(rl_cmd)
    rl_cmd.add_argument("--instance", required=True)
    rl_cmd.add_argument("--gamma", type=float, required=True)
    rl_cmd.add_argument("--order", "-p", type=int, required=True)
    rl_cmd.add_argument("--half-width", type=float, required=True, help="dither window half-width")
    rl_cmd.add_argument("--samples", type=int, default=200)
    rl_cmd.add_argument("--seed", type=int, default=0)
    rl_cmd.add_argument("--pooled", action="store_true",
                        help="normalize after averaging (no bound asserted)")
    rl_cmd.add_argument("--law-output", default=None, help="also write the averaged law as CSV")

    simulate = sub.add_parser("simulate", help="coherent statevector run")
    add_common(simulate)
    simulate.add_argument("--instance", required=True)
    simulate.add_argument("--gammas", type=_float_list, required=True)
    simulate.add_argument("--betas", type=_float_list, required=True)
    simulate.add_argument("--convention", choices=["adjacency", "normalized"], default="adjacency")
    simulate.add_argument("--shots", type=int, default=None)
    simulate.add_argument("--seed", type=int, default=0)

    return parser


def _to_radians(args: argparse.Namespace) -> None:
    if not getattr(args, "degrees", False):
        return
    for name in ("gamma", "delta", "half_width"):
        if getattr(args, name, None) is not None:
            setattr(args, name, math.radians(getattr(args, name)))
    for name in ("betas", "gammas", "deltas"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(args, name, [math.radians(v) for v in value])


def _load_diagonal(path: str, size: int) -> Envelope:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, list) or len(data) != size:
        raise ValueError(f"external diagonal must be a JSON array of length {size}")
    return external_envelope(data)


def _convention(name: str) -> MixerConvention:
    return MixerConvention(name)


# ---------------------------------------------------------------------------
# Command handlers
# ---------------------------------------------------------------------------

def _cmd_certify(args: argparse.Namespace) -> int:
    inst = load_instance_file(args.instance, cap=args.cap)
    scope = GapScope.ALL_STRINGS if args.scope == "all" else GapScope.FEASIBLE_ONLY
    if args.order < 0:
        raise ValueError("order must be nonnegative")

    if args.envelope is not None:
        if args.betas:
            raise ValueError("--envelope and --betas are mutually exclusive")
        env = _load_diagonal(args.envelope, inst.size)
        source = "external"
    else:
        betas = args.betas if args.betas is not None else []
        if betas and len(betas) != args.order:
            raise ValueError("need exactly one beta per layer")
        env = mixer_envelope(inst, uniform_envelope(inst.n, inst.m), betas,
                             convention=_convention(args.convention))
        source = "reference_uniform"

    pm = phase_gap(inst, args.gamma, scope)
    c_beta = envelope_mass(env, pm.omega_star)

    law = filtered_distribution(env, pm, args.order)
    q0_exact = success_probability(law, pm.omega_star)

    if pm.collided:
        status = "uncertifiable"
        delta = 0.0
    else:
        status = "certified"
        delta = pm.delta

    cert = build_certificate(
        args.order, c_beta, delta, args.epsilon, eta=args.eta,
        q0_exact=q0_exact, status=status,
    )
    bound_ok = q0_exact >= cert.q0_bound - BOUND_SLACK
    if status == "certified" and not bound_ok:
        # Reachable only under the feasible-only gap scope, when an
        # out-of-scope string sits inside the gap; the bound is then vacuous
        # for this configuration and the certificate says so explicitly.
        status = "uncertifiable"

    document = {
        "command": "certify",
        "status": status,
        "p": cert.p,
        "gamma": args.gamma,
        "c_beta": cert.c_beta,
        "delta": cert.delta,
        "x": cert.x,
        "q0_bound": cert.q0_bound,
        "q0_simple": cert.q0_simple,
        "q0_exact": q0_exact,
        "bound_satisfied": bound_ok,
        "shots": cert.shots,
        "depth_for_target": cert.depth_for_target,
        "regime": cert.regime.value,
        "epsilon": cert.epsilon,
        "eta": cert.eta,
        "gap_scope": pm.gap_scope.value,
        "collisions": [format_string(index_string(i, inst.n, inst.m)) for i in pm.colliding]
        or None,
        "envelope_source": source,
        "seed": None,
    }
    serialize.atomic_write_text(args.output, serialize.dumps_json(document))
    if args.law_output is not None:
        weights = fejer_kernel(args.order, pm.theta - pm.theta_star)
        serialize.atomic_write_text(
            args.law_output,
            serialize.filtered_law_csv(law.probs, pm.theta, weights, inst.n, inst.m),
        )
    return EXIT_UNCERTIFIABLE if status == "uncertifiable" else EXIT_OK


def _cmd_plan(args: argparse.Namespace) -> int:
    cert = build_certificate(args.order, args.c_beta, args.delta, args.epsilon, eta=args.eta)
    document = {
        "command": "plan",
        "status": cert.status,
        "p": cert.p,
        "gamma": None,
        "c_beta": cert.c_beta,
        "delta": cert.delta,
        "x": cert.x,
        "q0_bound": cert.q0_bound,
        "q0_simple": cert.q0_simple,
        "q0_exact": None,
        "bound_satisfied": None,
        "shots": cert.shots,
        "depth_for_target": cert.depth_for_target,
        "regime": cert.regime.value,
        "epsilon": cert.epsilon,
        "eta": cert.eta,
        "gap_scope": None,
        "collisions": None,
        "envelope_source": None,
        "seed": None,
    }
    serialize.atomic_write_text(args.output, serialize.dumps_json(document))
    return EXIT_OK


def _cmd_curves(args: argparse.Namespace) -> int:
    if not args.deltas:
        raise ValueError("delta grid is empty")
    if not args.orders:
        raise ValueError("order list is empty")
    orders = sorted(int(p) for p in args.orders)
    deltas = sorted(args.deltas)
    rows = []
    for p in orders:
        values = cmin_curve(deltas, args.epsilon, p)
        rows.extend((d, p, args.epsilon, c) for d, c in zip(deltas, values))
    serialize.atomic_write_text(args.output, serialize.curves_csv(rows))
    return EXIT_OK


def _cmd_envelope(args: argparse.Namespace) -> int:
    inst = load_instance_file(args.instance, cap=args.cap)
    v0 = (
        _load_diagonal(args.v0, inst.size)
        if args.v0 is not None
        else uniform_envelope(inst.n, inst.m)
    )
    env = mixer_envelope(inst, v0, args.betas, convention=_convention(args.convention))
    if args.format == "json":
        text = serialize.dumps_json(list(env.probs))
    else:
        text = serialize.envelope_csv(env.probs, inst.n, inst.m)
    serialize.atomic_write_text(args.output, text)
    return EXIT_OK


def _cmd_feasibility(args: argparse.Namespace) -> int:
    inst = load_instance_file(args.instance, cap=args.cap)
    ls = feas.level_sets(inst)
    graph = feas.level_graph(ls, inst.n, inst.m)
    sep = feas.delta_feasible(args.gamma, ls)
    c_f = float(ls.levels[0].size) / inst.size if 0 in ls.levels else 0.0

    if sep.delta > 0.0 and c_f > 0.0:
        bounds = {
            f"p{p}": feas.feasibility_bound(p, c_f, sep.delta)._asdict() for p in (1, 2)
        }
    else:
        bounds = None

    search = None
    if not args.no_search:
        result = feas.feasibility_angle_search(inst, args.search_order, args.budget, args.seed)
        search = {
            "gammas": list(result.gammas),
            "betas": list(result.betas),
            "pi_f": result.pi_f,
            "evaluations": result.evaluations,
            "seed": result.seed,
        }

    document = {
        "command": "feasibility",
        "gamma": args.gamma,
        "levels": {str(t): size for t, size in ls.histogram().items()},
        "graph": {
            "vertices": list(graph.vertices),
            "edges": [list(edge) for edge in graph.edges],
        },
        "connected": feas.graph_connected(graph),
        "delta_f": sep.delta,
        "aliasing": sep.aliasing,
        "collided": sep.collided,
        "c_f": c_f,
        "bounds": bounds,
        "search": search,
        "seed": args.seed,
    }
    serialize.atomic_write_text(args.output, serialize.dumps_json(document))
    return EXIT_UNCERTIFIABLE if sep.collided else EXIT_OK


def _cmd_rl(args: argparse.Namespace) -> int:
    inst = load_instance_file(args.instance, cap=args.cap)
    window = rl.DitherWindow(half_width=args.half_width)
    env = uniform_envelope(inst.n, inst.m)
    omega = inst.optimal_indices()
    gap = rl.energy_gap(inst)
    c_beta = envelope_mass(env, omega)
    mbar = rl.averaged_offpeak_bound(args.order, args.half_width, gap)
    bound = rl.rl_success_bound(args.order, c_beta, mbar.exact)
    law = rl.rl_filtered_distribution(
        env, inst, args.gamma, window, args.order,
        samples=args.samples, seed=args.seed, pooled=args.pooled, subset=omega,
    )
    document = {
        "command": "rl",
        "gamma": args.gamma,
        "order": args.order,
        "half_width": args.half_width,
        "samples": args.samples,
        "seed": args.seed,
        "pooled": args.pooled,
        "g": gap,
        "mbar_exact": mbar.exact,
        "mbar_log": mbar.log_form,
        "bound": bound,
        # subset and total masses are summed in different orders, so the
        # ratio can exceed 1 by an ulp
        "success_mass": min(1.0, max(0.0, law.subset_mass)),
        "success_stderr": law.subset_stderr,
    }
    serialize.atomic_write_text(args.output, serialize.dumps_json(document))
    if args.law_output is not None:
        serialize.atomic_write_text(
            args.law_output, serialize.rl_law_csv(law.probs, law.stderr, inst.n, inst.m)
        )
    return EXIT_OK


def _cmd_simulate(args: argparse.Namespace) -> int:
    inst = load_instance_file(args.instance, cap=args.cap)
    state = oracle.simulate(
        inst, args.gammas, args.betas,
        convention=_convention(args.convention), cap=args.cap,
    )
    omega = inst.optimal_indices()
    feasible = inst.feasible_indices()
    document = {
        "command": "simulate",
        "gammas": args.gammas,
        "betas": args.betas,
        "convention": args.convention,
        "success_probability": oracle.projector_mass(state, omega),
        "feasibility_probability": oracle.projector_mass(state, feasible),
        "seed": args.seed if args.shots else None,
        "shots": args.shots,
    }
    if args.shots:
        report = oracle.sample_shots(state.probabilities(), args.shots, args.seed, omega)
        document["counts"] = {
            format_string(index_string(i, inst.n, inst.m)): int(c)
            for i, c in enumerate(report.counts)
            if c > 0
        }
        document["success_frequency"] = report.frequency
        document["success_ci"] = [report.ci_low, report.ci_high]
    serialize.atomic_write_text(args.output, serialize.dumps_json(document))
    return EXIT_OK


_HANDLERS = {
    "certify": _cmd_certify,
    "plan": _cmd_plan,
    "curves": _cmd_curves,
    "envelope": _cmd_envelope,
    "feasibility": _cmd_feasibility,
    "rl": _cmd_rl,
    "simulate": _cmd_simulate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _to_radians(args)
    try:
        return _HANDLERS[args.command](args)
    except CapExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
