"""Command-line entry point: each subcommand writes CSV/JSON data plus a manifest.

Exit codes: 0 success, 2 usage or precondition failure, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, thermo
from .errors import DomainError, NonMonotone, NoConvergence, PorousDynamicsError, TrivialDynamics
from .fields import grid_csv

FORMAT = "porous-dynamics/1"
EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _write(out: Path, name: str, text: str) -> str:
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text, encoding="utf-8", newline="\n")
    return name


def _manifest(args: argparse.Namespace, outputs: list[str], extra: dict | None = None) -> str:
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out")}
    doc = {
        "format": FORMAT,
        "version": __version__,
        "subcommand": args.command,
        "config": config,
        "outputs": outputs,
    }
    if extra:
        doc["results"] = extra
    return _write(Path(args.out), "manifest.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")


def cmd_coexistence(args) -> int:
    if not 0 < args.tmin < args.tmax < 1:
        raise UsageError(f"need 0 < tmin < tmax < 1 (open interval below T = 1), got [{args.tmin}, {args.tmax}]")
    if args.tmin <= args.cutoff:
        raise UsageError(f"tmin={args.tmin} must exceed the low-temperature cutoff {args.cutoff}")
    if args.steps < 2:
        raise UsageError("--steps must be at least 2")
    rows = thermo.coexistence_table(args.tmin, args.tmax, args.steps, t_min=args.cutoff)
    name = _write(Path(args.out), "coexistence.csv", thermo.coexistence_csv(rows))
    _manifest(args, [name])
    return EXIT_OK


def _process(args):
    from .dynamics1 import ProcessSpec
    from .thermo import GasSpec

    gas = GasSpec(n=args.n)
    if args.process == "isentropic":
        if args.sigma0 is None:
            raise UsageError("--sigma0 is required for the isentropic process")
        return ProcessSpec.isentropic(args.sigma0, gas)
    if args.eta0 is None:
        raise UsageError("--eta0 is required for the isenthalpic process")
    return ProcessSpec.isenthalpic(args.eta0, gas)


def cmd_phase_map(args) -> int:
    from .dynamics1 import Dyn1Constants, check_invertibility, phase_map

    spec = _process(args)
    report = check_invertibility(spec)
    if not report.ok:
        raise UsageError(report.diagnostic())
    consts = Dyn1Constants(C1=args.c1, C2=args.c2, alpha0=args.alpha0, rho_ref=args.rho_ref)
    t = np.linspace(args.tmin, args.tmax, args.nt)
    x = np.linspace(args.xmin, args.xmax, args.nx)
    pm = phase_map(spec, consts, t, x, rho_interval=(args.rho_lo, args.rho_hi), t_min=args.cutoff)
    name = _write(Path(args.out), "phase_map.csv", pm.to_csv())
    _manifest(args, [name], {"invertibility": report.diagnostic()})
    return EXIT_OK


def cmd_second_order(args) -> int:
    from .dynamics1 import ProcessSpec
    from .dynamics2 import Dyn2Spec, power_law_from_process, solution_field
    from .thermo import GasSpec

    q, alpha = args.q, args.alpha
    if args.process is not None:
        gas = GasSpec(n=args.n)
        level = args.sigma0 if args.process == "isentropic" else args.eta0
        if level is None:
            raise UsageError(f"--{'sigma0' if args.process == 'isentropic' else 'eta0'} is required")
        proc = ProcessSpec.isentropic(level, gas) if args.process == "isentropic" else ProcessSpec.isenthalpic(level, gas)
        q, alpha = power_law_from_process(proc)
    spec = Dyn2Spec(q=q, alpha=alpha, branch=args.branch, C1=args.c1, C2=args.c2)
    field = solution_field(spec)
    x = np.linspace(args.xmin, args.xmax, args.nx)
    singular = field.validity.singular_locus is not None
    cols = {"t": [], "x": [], "rho": [], "valid": [], "singular_locus": []}
    for t in args.times:
        rho, ok = field.profile(t, x)
        cols["t"].extend([t] * x.size)
        cols["x"].extend(x)
        cols["rho"].extend(rho)
        cols["valid"].extend(ok)
        cols["singular_locus"].extend([-spec.C1 if singular else ""] * x.size)
    text = grid_csv(list(cols), list(cols.values()))
    name = _write(Path(args.out), "profiles.csv", text)
    _manifest(args, [name], {"q": q, "alpha": alpha, "b1": spec.b1, "validity": field.validity.as_dict()})
    return EXIT_OK


def cmd_attractor(args) -> int:
    from .attractor import AttractorParams, Perturbation, attractor_domain, decay_experiment
    from .dynamics2 import Dyn2Spec, branch_b1, solution_field

    alpha = args.alpha if args.alpha is not None else 2.0 / args.n + 1.0
    params = AttractorParams(q=args.q, alpha=alpha, b1=branch_b1(args.branch, alpha), n=args.n, c1=args.c1, c2=args.c2)
    y0 = np.linspace(args.y0_min, args.y0_max, args.ny0)
    y1 = np.linspace(args.y1_min, args.y1_max, args.ny1)
    outputs, counts = [], {}
    for y2 in args.y2:
        mask = attractor_domain(params, y2, y0, y1)
        outputs.append(_write(Path(args.out), mask.filename, mask.to_csv()))
        counts[f"{y2:g}"] = {str(c): int(np.count_nonzero(mask.codes == c)) for c in (0, 1, 2)}
    results = {"mask_counts": counts}
    if args.decay:
        base = solution_field(Dyn2Spec(q=args.q, alpha=alpha, branch="wave", C1=args.wave_c1, C2=args.wave_c2))
        res = decay_experiment(
            params, base, Perturbation(args.amplitude), args.xmin, args.xmax, args.N, args.t_end
        )
        outputs.append(_write(Path(args.out), "decay.csv", res.to_csv()))
        results["decay"] = {
            "label": res.label,
            "ratio": res.ratio,
            "monotone": res.monotone,
            "exit_time": res.exit_time,
            "exit_x": res.exit_x,
        }
    _manifest(args, outputs, results)
    return EXIT_OK


def bracket_suite(seed: int = 0, samples: int = 100) -> list[dict]:
    """Every shipped (process, branch) pairing run through the bracket check."""
    import sympy as sp

    from .attractor import AttractorParams, dynamics_pair, exact_bracket_coefficients, regular_a_function
    from .dynamics1 import ProcessSpec, isenthalpic_threshold, isentropic_threshold
    from .dynamics2 import branch_b1
    from .jets import first_order_pair, verify_dynamics
    from .thermo import GasSpec

    cases = []
    for n in (3, 4, 5):
        gas = GasSpec(n=n)
        sigma0 = 4.0 * n / 3.0 * float(np.log(1.2 * isentropic_threshold(n)))
        for spec in (ProcessSpec.isentropic(sigma0, gas), ProcessSpec.isenthalpic(1.2 * isenthalpic_threshold(n), gas)):
            phi, F = first_order_pair(lambda r, s=spec: sp.sympify(s.A_formula(r)), 0.7, 0.3)
            rep = verify_dynamics(phi, F, samples=samples, seed=seed, y0_range=(0.1, 2.9))
            cases.append({"case": f"first-order/{spec.kind}/n={n}", **rep.as_dict()})
    for alpha in (5.0 / 3.0, 1.0, 1.4, -1.0 / 3.0):
        for branch in ("wave", "blowup"):
            p = AttractorParams(q=1.0, alpha=alpha, b1=branch_b1(branch, alpha))
            phi, F = dynamics_pair(p)
            rep = verify_dynamics(phi, F, regular_a_function(p), 0.0, samples=samples, seed=seed)
            cases.append({"case": f"second-order/{branch}/alpha={alpha:.6g}/on-surface", **rep.as_dict()})
            a, b = exact_bracket_coefficients(p)
            rep = verify_dynamics(phi, F, a, b, samples=samples, seed=seed, on_surface=False)
            cases.append({"case": f"second-order/{branch}/alpha={alpha:.6g}/identity", **rep.as_dict()})
    return cases


def cmd_verify(args) -> int:
    if args.suite == "brackets":
        cases = bracket_suite(args.seed, args.samples)
        report = {"suite": "brackets", "pass": all(c["pass"] for c in cases), "cases": cases}
    else:
        from .pde_oracle import load_descriptor, run_descriptor

        desc = load_descriptor(args.descriptor) if args.descriptor else {}
        for key in ("field", "alpha", "q", "C1", "C2", "x_lo", "x_hi", "t_end", "N"):
            val = getattr(args, key.lower(), None)
            if val is not None:
                desc[key] = val
        rep = run_descriptor(desc)
        order = rep["residual_order"]
        rep["pass"] = rep["verdict"] == "exact to round-off" or (order is not None and 1.9 <= order <= 2.1)
        report = {"suite": "pde", **rep}
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    name = _write(Path(args.out), "verify.json", text)
    _manifest(args, [name], {"pass": report["pass"]})
    sys.stdout.write(text)
    return EXIT_OK if report["pass"] else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="porous-dynamics", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default="out", help="output directory")
        return p

    p = common(sub.add_parser("coexistence", help="coexistence curve table"))
    p.add_argument("--tmin", type=float, default=0.85)
    p.add_argument("--tmax", type=float, default=0.99)
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--cutoff", type=float, default=thermo.COEXISTENCE_T_MIN, help="lowest supported T")
    p.set_defaults(func=cmd_coexistence)

    p = common(sub.add_parser("phase-map", help="phase labels of the first-order solution on a (t, x) grid"))
    p.add_argument("--process", choices=("isentropic", "isenthalpic"), required=True)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--sigma0", type=float)
    p.add_argument("--eta0", type=float)
    p.add_argument("--c1", type=float, default=1.0)
    p.add_argument("--c2", type=float, default=0.0)
    p.add_argument("--alpha0", type=float, default=0.0)
    p.add_argument("--rho-ref", type=float, default=1.0)
    p.add_argument("--rho-lo", type=float, default=0.05)
    p.add_argument("--rho-hi", type=float, default=2.95)
    p.add_argument("--tmin", type=float, default=0.0)
    p.add_argument("--tmax", type=float, default=1.0)
    p.add_argument("--nt", type=int, default=200)
    p.add_argument("--xmin", type=float, default=-0.25)
    p.add_argument("--xmax", type=float, default=2.0)
    p.add_argument("--nx", type=int, default=200)
    p.add_argument("--cutoff", type=float, default=thermo.COEXISTENCE_T_MIN)
    p.set_defaults(func=cmd_phase_map)

    p = common(sub.add_parser("second-order", help="density profiles of the second-order families"))
    p.add_argument("--branch", choices=("wave", "blowup", "trivial"), default="blowup")
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--process", choices=("isentropic", "isenthalpic"), help="derive q, alpha from an ideal gas")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--sigma0", type=float)
    p.add_argument("--eta0", type=float)
    p.add_argument("--c1", type=float, default=0.0)
    p.add_argument("--c2", type=float, default=1.0)
    p.add_argument("--times", type=_floats, default=[0.5, 0.85, 0.999])
    p.add_argument("--xmin", type=float, default=-1.0)
    p.add_argument("--xmax", type=float, default=1.0)
    p.add_argument("--nx", type=int, default=201)
    p.set_defaults(func=cmd_second_order)

    p = common(sub.add_parser("attractor", help="attractor-domain masks (and optional decay run)"))
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--n", type=float, default=3.0)
    p.add_argument("--alpha", type=float, help="defaults to 2/n + 1")
    p.add_argument("--branch", choices=("wave", "blowup"), default="wave")
    p.add_argument("--c1", type=float, default=-1.0)
    p.add_argument("--c2", type=float, default=1.0)
    p.add_argument("--y2", type=_floats, default=[0.5, 1.0, 2.0])
    p.add_argument("--y0-min", type=float, default=0.05)
    p.add_argument("--y0-max", type=float, default=3.0)
    p.add_argument("--ny0", type=int, default=200)
    p.add_argument("--y1-min", type=float, default=-3.0)
    p.add_argument("--y1-max", type=float, default=3.0)
    p.add_argument("--ny1", type=int, default=200)
    p.add_argument("--decay", action="store_true", help="also run the decay experiment on a travelling wave")
    p.add_argument("--wave-c1", type=float, default=0.2)
    p.add_argument("--wave-c2", type=float, default=0.9)
    p.add_argument("--amplitude", type=float, default=-1e-2)
    p.add_argument("--xmin", type=float, default=0.0)
    p.add_argument("--xmax", type=float, default=2.0)
    p.add_argument("--N", type=int, default=256)
    p.add_argument("--t-end", type=float, default=2.0)
    p.set_defaults(func=cmd_attractor)

    p = common(sub.add_parser("verify", help="bracket or PDE-oracle verification report"))
    p.add_argument("--suite", choices=("brackets", "pde"), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--descriptor", help="JSON run descriptor for the pde suite")
    p.add_argument("--field", choices=("trwave", "blowup"))
    p.add_argument("--alpha", type=float)
    p.add_argument("--q", type=float)
    p.add_argument("--c1", dest="c1", type=float)
    p.add_argument("--c2", dest="c2", type=float)
    p.add_argument("--x-lo", dest="x_lo", type=float)
    p.add_argument("--x-hi", dest="x_hi", type=float)
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--N", dest="n", type=int)
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, DomainError, NonMonotone, TrivialDynamics) as exc:
        print(f"porous-dynamics {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NoConvergence, PorousDynamicsError, ArithmeticError, FloatingPointError) as exc:
        print(f"porous-dynamics {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
