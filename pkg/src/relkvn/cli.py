"""Command-line harness: verification suites, simulations, series checks.

One executable, four subcommands sharing a single scenario schema::

    relkvn verify-algebra [--scenario FILE] [--mutate K] ...
    relkvn series-check --identity c1-momentum --order 6 ...
    relkvn evolve --scenario FILE [--out DIR]
    relkvn boost --scenario FILE [--out DIR]

Scenario files are JSON; all physical quantities are in c = 1 natural
units.  Unknown keys are rejected before any computation.  Exit codes:
0 pass, 1 check failure, 2 config error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import flow, generators, series
from .errors import ConfigError, RelkvnError, UnknownIdentity
from .generators import CONVENTION_NOTES, ForceFieldSym
from .operators import MOMENTUM, VELOCITY
from .reports import CheckResult, RunReport
from .scalars import equal_numeric, parse_scalar

DEFAULT_SCENARIO = {
    "mass": 1.0,
    "seed": 20260810,
    "tolerance": 1e-9,
    "probe_points": 100,
    "field": {"phi": "0", "A": ["0", "0", "0"], "params": {}},
    "state": {
        "representation": "velocity",
        "dimensions": 1,
        "center_r": [0.0],
        "center_q": [0.0],
        "width_r": [1.0],
        "width_q": [0.1],
        "snapshot": None,
    },
    "grid": {
        "r": [[-8.0, 8.0, 512]],
        "q": [[-0.999, 0.999, 511]],
    },
    "evolution": {"dt": 1e-3, "t_end": 2.0, "snapshots": 2},
    "boosts": [{"axis": 1, "rapidity": 0.2, "ds": 1e-3}],
    "series": {"order": 6, "rapidity": 0.5},
    "output": {"directory": None, "snapshot_format": "binary"},
}


def _merge(default, user, path=""):
    if isinstance(default, dict):
        if not isinstance(user, dict):
            raise ConfigError(f"{path or 'scenario'}: expected an object")
        unknown = set(user) - set(default)
        if unknown:
            raise ConfigError(f"unknown scenario key(s) {sorted(unknown)} at {path or 'top level'}")
        out = {}
        for key, dval in default.items():
            if key in user:
                out[key] = _merge(dval, user[key], f"{path}.{key}".lstrip("."))
            else:
                out[key] = copy.deepcopy(dval)
        return out
    # lists and scalars replace wholesale
    return copy.deepcopy(user)


def load_scenario(path: str | None, overrides: dict | None = None) -> dict:
    user = {}
    if path is not None:
        try:
            user = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"scenario file not found: {path}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"scenario file {path} is not valid JSON: {exc}")
    cfg = _merge(DEFAULT_SCENARIO, user)
    for key, value in (overrides or {}).items():
        if value is not None:
            node = cfg
            *parents, leaf = key.split(".")
            for p in parents:
                node = node[p]
            node[leaf] = value
    _validate(cfg)
    return cfg


def _validate(cfg: dict) -> None:
    if not (isinstance(cfg["mass"], (int, float)) and cfg["mass"] > 0):
        raise ConfigError("mass must be a positive number")
    if not (isinstance(cfg["tolerance"], (int, float)) and cfg["tolerance"] > 0):
        raise ConfigError("tolerance must be positive")
    if not (isinstance(cfg["probe_points"], int) and cfg["probe_points"] >= 1):
        raise ConfigError("probe_points must be a positive integer")
    st = cfg["state"]
    if st["representation"] not in (VELOCITY, MOMENTUM):
        raise ConfigError(f"state.representation must be velocity or momentum")
    d = st["dimensions"]
    if d not in (1, 2, 3):
        raise ConfigError("state.dimensions must be 1, 2, or 3")
    for key in ("center_r", "center_q", "width_r", "width_q"):
        if len(st[key]) != d:
            raise ConfigError(f"state.{key} must have {d} entries")
    for block in ("r", "q"):
        axes = cfg["grid"][block]
        if len(axes) != d:
            raise ConfigError(f"grid.{block} must list {d} axes")
        for ax in axes:
            if len(ax) != 3:
                raise ConfigError("grid axes are [min, max, points] triples")
    ev = cfg["evolution"]
    if ev["dt"] <= 0 or ev["t_end"] < 0 or ev["snapshots"] < 1:
        raise ConfigError("evolution needs dt > 0, t_end >= 0, snapshots >= 1")
    for b in cfg["boosts"]:
        unknown = set(b) - {"axis", "rapidity", "ds"}
        if unknown:
            raise ConfigError(f"unknown boost key(s) {sorted(unknown)}")
        if not 1 <= b.get("axis", 1) <= d:
            raise ConfigError("boost axis outside state dimensions")


def scenario_field(cfg: dict) -> ForceFieldSym:
    fcfg = cfg["field"]
    try:
        phi = parse_scalar(fcfg["phi"])
        A = tuple(parse_scalar(a) for a in fcfg["A"])
    except ValueError as exc:
        raise ConfigError(f"bad field expression: {exc}")
    field = ForceFieldSym(phi, A)
    params = fcfg.get("params", {})
    if params:
        field = field.subs_params(params)
    return field


def scenario_grid(cfg: dict) -> flow.PhaseGrid:
    mk = lambda ax: flow.AxisSpec(float(ax[0]), float(ax[1]), int(ax[2]))
    try:
        return flow.PhaseGrid(
            representation=cfg["state"]["representation"],
            raxes=tuple(mk(ax) for ax in cfg["grid"]["r"]),
            qaxes=tuple(mk(ax) for ax in cfg["grid"]["q"]),
        )
    except ValueError as exc:
        raise ConfigError(str(exc))


def scenario_state(cfg: dict) -> flow.PhaseSpaceState:
    st = cfg["state"]
    if st["snapshot"]:
        state = flow.read_state(st["snapshot"])
        if state.representation != st["representation"]:
            raise ConfigError(
                f"snapshot is {state.representation}-representation, scenario says "
                f"{st['representation']}"
            )
        return state
    grid = scenario_grid(cfg)
    return flow.gaussian_state(
        grid, st["center_r"], st["center_q"], st["width_r"], st["width_q"]
    )


# -- subcommands ---------------------------------------------------------------


def cmd_verify_algebra(cfg: dict, mutate: str | None = None) -> RunReport:
    report = RunReport(command="verify-algebra", config={"scenario": cfg, "mutate": mutate})
    t0 = time.perf_counter()
    m0 = cfg["mass"]
    seed = cfg["seed"]
    tol = cfg["tolerance"]
    trials = cfg["probe_points"]
    field = scenario_field(cfg)

    vel = generators.build_free_generators(m0)
    if mutate:
        vel = generators.mutate_generator_set(vel, mutate)
        report.notes.append(f"negative control: generator family {mutate} mutated")
    report.extend(
        generators.verify_poincare_closure(vel, trials, tol, seed, t_values=(0.0, 1.7))
    )
    report.extend(generators.verify_hermiticity(vel, max(trials // 2, 10), tol, seed))

    mom = generators.build_momentum_generators(m0)
    report.extend(
        generators.verify_poincare_closure(mom, trials, tol, seed, t_values=(0.0, 1.7))
    )
    report.extend(generators.verify_hermiticity(mom, max(trials // 2, 10), tol, seed))

    # Poisson correspondence of the free momentum Liouvillian
    H = generators.poisson_correspondence(mom.liouvillian, trials=max(trials // 2, 10), tol=tol, seed=seed)
    if H is None:
        report.checks.append(
            CheckResult("poisson:free-liouvillian", float("inf"), False,
                        detail="no generating Hamiltonian found")
        )
    else:
        target = generators.free_hamiltonian(m0) - float(m0)
        pr = equal_numeric(H, target, max(trials // 2, 10), tol, seed)
        report.checks.append(
            CheckResult(
                "poisson:free-liouvillian",
                pr.max_residual,
                pr.equal,
                lhs="reconstructed H (anchored at x=0, p=0)",
                rhs="sqrt(p^2+m0^2) - m0",
                probes=pr.trials,
            )
        )

    if not field.is_zero:
        report.extend(generators.verify_force_equation(m0, field, trials, tol, seed))
        report.extend(generators.verify_euler_lagrange(m0, field, trials, tol, seed))
        report.extend(
            generators.verify_canonical_momentum_brackets(
                m0, field, max(trials // 2, 10), tol, seed
            )
        )
        report.extend(
            generators.verify_momentum_interacting(m0, field, max(trials // 2, 10), tol, seed)
        )
        if not field.has_vector_potential:
            L2 = generators.momentum_liouvillian_simplified(m0, field)
            H2 = generators.poisson_correspondence(L2, trials=max(trials // 2, 10), tol=tol, seed=seed)
            if H2 is None:
                report.checks.append(
                    CheckResult("poisson:interacting-liouvillian", float("inf"), False,
                                detail="no generating Hamiltonian found")
                )
            else:
                target = generators.free_hamiltonian(m0) - float(m0) + field.phi
                pr = equal_numeric(H2, target, max(trials // 2, 10), tol, seed)
                report.checks.append(
                    CheckResult(
                        "poisson:interacting-liouvillian",
                        pr.max_residual,
                        pr.equal,
                        rhs="sqrt(p^2+m0^2) + phi - anchor",
                        probes=pr.trials,
                    )
                )
    report.notes.extend(CONVENTION_NOTES)
    report.wall_time_s = time.perf_counter() - t0
    return report


IDENTITY_RUNNERS = {
    "c1-momentum": lambda cfg, order, trials, tol, seed: series.verify_c1_on_velocity(
        cfg["mass"], order, trials, tol, seed
    ),
    "c1-lambda": lambda cfg, order, trials, tol, seed: series.verify_c1_on_lambda(
        cfg["mass"], order, trials, tol, seed
    ),
    "c2": lambda cfg, order, trials, tol, seed: series.verify_c2(
        _c2_field(cfg), trials, tol, seed
    ),
    "boost-velocity": lambda cfg, order, trials, tol, seed: series.verify_boost_closed_forms(
        "velocity", cfg["series"]["rapidity"], order, trials, tol, seed, cfg["mass"]
    ),
    "boost-4vector": lambda cfg, order, trials, tol, seed: series.verify_boost_closed_forms(
        "energy-momentum", cfg["series"]["rapidity"], order, trials, tol, seed, cfg["mass"]
    ),
    "boost-position": lambda cfg, order, trials, tol, seed: series.verify_boost_closed_forms(
        "position", cfg["series"]["rapidity"], order, trials, tol, seed, cfg["mass"]
    ),
    "canonical-map": lambda cfg, order, trials, tol, seed: series.verify_canonical_map(
        cfg["mass"], _c2_field(cfg), order, trials, tol, seed
    ),
}


def _c2_field(cfg: dict) -> ForceFieldSym:
    field = scenario_field(cfg)
    if field.has_vector_potential:
        return field
    # the vector-potential identities need a nonzero A; standard example
    return ForceFieldSym.from_expressions(
        field.phi, (parse_scalar("-1.5*x2"), parse_scalar("0"), parse_scalar("0"))
    )


def cmd_series_check(cfg: dict, identity: str, order: int | None = None) -> RunReport:
    if identity not in IDENTITY_RUNNERS:
        raise UnknownIdentity(
            f"unknown identity {identity!r}; choose from {sorted(IDENTITY_RUNNERS)}"
        )
    order = order if order is not None else cfg["series"]["order"]
    report = RunReport(
        command="series-check",
        config={"scenario": cfg, "identity": identity, "order": order},
    )
    t0 = time.perf_counter()
    trials = max(cfg["probe_points"] // 2, 10)
    report.extend(
        IDENTITY_RUNNERS[identity](cfg, order, trials, cfg["tolerance"], cfg["seed"])
    )
    report.wall_time_s = time.perf_counter() - t0
    return report


def cmd_evolve(cfg: dict, out_dir: Path | None) -> RunReport:
    report = RunReport(command="evolve", config={"scenario": cfg})
    t0 = time.perf_counter()
    state = scenario_state(cfg)
    field = scenario_field(cfg)
    m0 = cfg["mass"]
    ev = cfg["evolution"]
    numeric = flow.compile_field(field, state.grid.dims)
    d = state.grid.dims

    rows = []
    norm0 = state.norm_squared()
    drift_cap = 1e-6  # per unit time, at default resolution

    def observables(s):
        from . import operators as op

        row = [s.time]
        for i in range(1, 4):
            row.append(
                flow.expectation(s, op.position(i, s.representation)).real if i <= d else 0.0
            )
        for i in range(1, 4):
            if i <= d:
                o = op.velocity(i) if s.representation == VELOCITY else op.momentum(i)
                row.append(flow.expectation(s, o).real)
            else:
                row.append(0.0)
        return row

    rows.append(observables(state))
    artifacts = []
    snapshots = [state]
    n = ev["snapshots"]
    for k in range(1, n + 1):
        t_k = ev["t_end"] * k / n
        evolved = flow.evolve_state(state, m0, numeric, t_k, ev["dt"])
        snapshots.append(evolved)
        rows.append(observables(evolved))
        drift = abs(evolved.norm_squared() - norm0)
        allowed = drift_cap * max(t_k, ev["dt"])
        report.checks.append(
            CheckResult(
                check_id=f"evolve:norm-drift@t={t_k:g}",
                residual=drift,
                passed=bool(drift <= allowed),
                detail=f"allowed {allowed:.1e}",
            )
        )
        if "mass_loss" in evolved.meta:
            report.checks.append(
                CheckResult(
                    check_id=f"evolve:mass-loss@t={t_k:g}",
                    residual=evolved.meta["mass_loss"],
                    passed=True,
                    informational=True,
                    detail=f"fraction outside {evolved.meta['fraction_outside']:.2%}",
                )
            )
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        fmt = cfg["output"]["snapshot_format"]
        for k, snap in enumerate(snapshots):
            p = out_dir / f"state_{k:03d}.kvn"
            flow.write_state(p, snap, fmt)
            artifacts.append(str(p))
        qcols = "v1,v2,v3" if state.representation == VELOCITY else "p1,p2,p3"
        csv = out_dir / "expectations.csv"
        with open(csv, "w") as fh:
            fh.write(f"t,x1,x2,x3,{qcols}\n")
            for row in rows:
                fh.write(",".join(f"{x:.12e}" for x in row) + "\n")
        artifacts.append(str(csv))
    report.artifacts = artifacts
    report.wall_time_s = time.perf_counter() - t0
    return report


def cmd_boost(cfg: dict, out_dir: Path | None) -> RunReport:
    report = RunReport(command="boost", config={"scenario": cfg})
    t0 = time.perf_counter()
    state = scenario_state(cfg)
    if state.representation != VELOCITY:
        raise ConfigError("boost requires a velocity-representation state")
    d = state.grid.dims
    peak0 = flow.density_centroid(state)[d:]
    boosted = state
    expected = np.array(peak0)
    for b in cfg["boosts"]:
        boosted = flow.boost_state(boosted, b["axis"], b["rapidity"], b.get("ds", 1e-3))
        expected = flow.add_boost_velocity(expected, b["axis"], b["rapidity"])
    peak = flow.density_centroid(boosted)[d:]
    steps = np.array([ax.step for ax in state.grid.qaxes])
    cells = float(np.max(np.abs(peak - expected) / steps))
    report.checks.append(
        CheckResult(
            check_id="boost:peak-velocity-addition",
            residual=cells,
            passed=bool(cells <= 2.0),
            lhs=f"density centroid {np.round(peak, 6).tolist()}",
            rhs=f"velocity-addition law {np.round(expected, 6).tolist()}",
            detail="residual in grid cells (allowed 2)",
        )
    )
    drift = abs(boosted.norm_squared() - state.norm_squared())
    report.checks.append(
        CheckResult(
            check_id="boost:norm-drift",
            residual=drift,
            passed=bool(drift <= 1e-5),
        )
    )
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        p = out_dir / "state_boosted.kvn"
        flow.write_state(p, boosted, cfg["output"]["snapshot_format"])
        report.artifacts.append(str(p))
    report.wall_time_s = time.perf_counter() - t0
    return report


# -- entry point --------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relkvn",
        description="Operational classical relativistic dynamics: "
        "algebra verification and KvN phase-space simulation (c = 1 units).",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--scenario", help="JSON scenario file")
        p.add_argument("--seed", type=int, help="override scenario seed")
        p.add_argument("--tol", type=float, help="override scenario tolerance")
        p.add_argument("--out", help="directory for report and artifacts")
        p.add_argument(
            "--format", choices=("text", "machine"), default="text",
            help="stdout format (machine = report JSON)",
        )

    p = sub.add_parser("verify-algebra", help="Poincare closure and dynamics identities")
    common(p)
    p.add_argument(
        "--mutate", choices=("K", "J", "L", "lam_r"),
        help="negative control: corrupt a generator family",
    )

    p = sub.add_parser("series-check", help="BCH / canonical-transformation identities")
    common(p)
    p.add_argument(
        "--identity", required=True,
        help=f"one of {', '.join(sorted(IDENTITY_RUNNERS))}",
    )
    p.add_argument("--order", type=int, help="series truncation order")

    p = sub.add_parser("evolve", help="KvN state evolution with snapshots and CSV")
    common(p)

    p = sub.add_parser("boost", help="finite boost of a velocity-representation state")
    common(p)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_scenario(
            args.scenario,
            overrides={"seed": args.seed, "tolerance": args.tol},
        )
        out_dir = None
        if args.out:
            out_dir = Path(args.out)
        elif cfg["output"]["directory"]:
            out_dir = Path(cfg["output"]["directory"])
        if args.subcommand == "verify-algebra":
            report = cmd_verify_algebra(cfg, mutate=args.mutate)
        elif args.subcommand == "series-check":
            report = cmd_series_check(cfg, args.identity, args.order)
        elif args.subcommand == "evolve":
            report = cmd_evolve(cfg, out_dir)
        elif args.subcommand == "boost":
            report = cmd_boost(cfg, out_dir)
        else:  # pragma: no cover
            raise ConfigError(f"unknown subcommand {args.subcommand}")
    except (ConfigError, UnknownIdentity) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except RelkvnError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3

    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.json").write_text(report.to_json())
    print(report.to_json() if args.format == "machine" else report.render_text())
    return 0 if report.all_passed else 1


if __name__ == "__main__":
    sys.exit(main())
