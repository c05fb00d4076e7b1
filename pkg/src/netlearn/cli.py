"""Command line entry point: ``netlearn <command> --config cfg.json --out DIR``.

Exit status: 0 success, 1 bad configuration, 2 solver budget exceeded,
3 internal invariant breach.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import platform
import sys
from importlib import resources
from pathlib import Path

import numpy as np
import scipy

from . import __version__, asymptotics, kernels, network
from .errors import InputError, InvariantError, NetlearnError
from .game import (DEFAULT_BUDGET, GameParams, enumerate_equilibria, params_for,
                   payoff, payoff_curve, propagate, round_bound, solve_equilibrium)
from .learning import (Tolerances, classify, classify_multi, learning_score, markov_bounds,
                       network_free_bounds)
from .montecarlo import SimulationConfig, estimate_learning

log = logging.getLogger("netlearn")

SOLVER_METHODS = ("bottom", "top", "extremal", "enumerate")
NETWORK_GENERATORS = {
    "isolated": network.isolated,
    "complete": network.complete,
    "binomial_root_to_leaf": lambda n: network.binomial_tree(n, root_to_leaf=True),
    "binomial_leaf_to_root": lambda n: network.binomial_tree(n, root_to_leaf=False),
    "four_agent_copies": lambda n: network.make_society("four_agent_copies", [n]).largest,
}


# ---------------------------------------------------------------- config

class Context:
    """Parsed configuration plus command line overrides."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.raw = b""
        self.cfg: dict = {}
        self.base = Path.cwd()
        if args.config:
            path = Path(args.config)
            try:
                self.raw = path.read_bytes()
            except OSError as exc:
                raise InputError(f"cannot read config {path}: {exc.strerror}") from None
            try:
                self.cfg = json.loads(self.raw)
            except json.JSONDecodeError as exc:
                raise InputError(f"config {path} is not valid JSON: {exc}") from None
            if not isinstance(self.cfg, dict):
                raise InputError("config must be a JSON object")
            self.base = path.resolve().parent
        self.out = Path(args.out)

    def section(self, name: str, required: bool = False) -> dict:
        value = self.cfg.get(name)
        if value is None:
            if required:
                raise InputError(f"config needs a {name!r} section")
            return {}
        if not isinstance(value, dict):
            raise InputError(f"config section {name!r} must be an object")
        return value

    def _resolve(self, p: str) -> Path:
        path = Path(p)
        path = path if path.is_absolute() else self.base / path
        if not path.exists():
            raise InputError(f"referenced file {path} does not exist")
        return path

    def network(self) -> network.DirectedNetwork:
        if "society" in self.cfg:
            raise InputError("this command takes a 'network', not a 'society'")
        sec = self.section("network", required=True)
        try:
            if "file" in sec:
                return network.load_network(self._resolve(sec["file"]))
            if "generator" in sec:
                gen = NETWORK_GENERATORS.get(sec["generator"])
                if gen is None:
                    raise InputError(f"unknown network generator {sec['generator']!r}; "
                                     f"choose from {sorted(NETWORK_GENERATORS)}")
                return gen(int(sec["n"]))
            return network.DirectedNetwork.from_dict(sec)
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed network section: {exc}") from None

    def society(self) -> network.Society:
        if "network" in self.cfg:
            raise InputError("this command takes a 'society', not a 'network'")
        sec = self.section("society", required=True)
        try:
            if "file" in sec:
                return network.load_society(self._resolve(sec["file"]), sec.get("kind", "custom"))
            if "networks" in sec:
                nets = tuple(network.DirectedNetwork.from_dict(d) for d in sec["networks"])
                return network.Society(nets, sec.get("kind", "custom"))
            return network.make_society(sec["kind"], sec["sizes"])
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed society section: {exc}") from None

    def params(self, sizes=None):
        """GameParams, or a per-population mapping when ``psi_by_n`` is given."""
        sec = self.section("params", required=True)
        base = GameParams.from_dict(sec)
        overrides = sec.get("psi_by_n") or {}
        if not isinstance(overrides, dict):
            raise InputError("psi_by_n must map population sizes to psi values")
        try:
            overrides = {int(k): float(v) for k, v in overrides.items()}
        except ValueError as exc:
            raise InputError(f"bad psi_by_n entry: {exc}") from None
        if sizes is None:
            return base
        return {n: base.with_psi(overrides.get(n, base.psi)) for n in sizes}

    def net_params(self, net) -> GameParams:
        return self.params([net.n])[net.n]

    def tolerances(self) -> Tolerances:
        sec = self.section("tolerances", required=True)
        try:
            return Tolerances(float(sec["eps"]), float(sec["epsbar"]), float(sec["delta"]))
        except KeyError as exc:
            raise InputError(f"tolerances missing {exc}") from None

    def solver(self) -> tuple[str, int]:
        sec = self.section("solver")
        method = sec.get("method", "extremal")
        if method not in SOLVER_METHODS:
            raise InputError(f"solver method must be one of {SOLVER_METHODS}, got {method!r}")
        return method, int(sec.get("budget", DEFAULT_BUDGET))

    def proxy(self) -> asymptotics.DivergenceProxy:
        sec = self.section("proxy")
        c = float(sec.get("c", 2.0))
        if not c > 0:
            raise InputError("proxy constant c must be positive")
        return asymptotics.DivergenceProxy(c)

    def simulation(self) -> tuple[SimulationConfig, bool]:
        sec = self.section("montecarlo")
        a = self.args
        trials = a.trials if a.trials is not None else sec.get("trials", 100_000)
        seed = a.seed if a.seed is not None else sec.get("seed", 0)
        threads = a.threads if a.threads is not None else sec.get("threads")
        cfg = SimulationConfig(int(trials), int(seed), float(sec.get("confidence_z", 3.0)),
                               None if threads is None else int(threads))
        return cfg, bool(sec.get("trace", False))


# ---------------------------------------------------------------- output helpers

def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])


def write_manifest(ctx: Context, command: str, outputs: list[str], extra=None) -> None:
    a = ctx.args
    manifest = {
        "command": command,
        "config_path": str(a.config) if a.config else None,
        "config_sha256": hashlib.sha256(ctx.raw).hexdigest(),
        "overrides": {"seed": a.seed, "trials": a.trials, "threads": a.threads},
        "env": {"NETLEARN_THREADS": os.environ.get("NETLEARN_THREADS"),
                "NETLEARN_BACKEND": os.environ.get("NETLEARN_BACKEND")},
        "backend": kernels.BACKEND,
        "versions": {"netlearn": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "outputs": sorted(outputs),
    }
    manifest.update(extra or {})
    _write_json(ctx.out / "manifest.json", manifest)


def _solve(params, net, method: str, budget: int):
    if method == "enumerate":
        return enumerate_equilibria(params, net, budget)
    if method == "extremal":
        low = solve_equilibrium(params, net, "bottom")
        high = solve_equilibrium(params, net, "top")
        return [low] if high.exits == low.exits else [low, high]
    return [solve_equilibrium(params, net, method)]


# ---------------------------------------------------------------- commands

def cmd_solve(ctx: Context) -> list[str]:
    net = ctx.network()
    params = ctx.net_params(net)
    method, budget = ctx.solver()
    eqs = _solve(params, net, method, budget)
    _write_json(ctx.out / "equilibria.json", {
        "n": net.n, "params": params.to_dict(), "round_bound": round_bound(params),
        "equilibria": [eq.to_dict() for eq in eqs],
    })
    rows = []
    for e, eq in enumerate(eqs):
        for i in net.agents:
            values = payoff_curve(params, net, i, eq.exits)
            for l, v in enumerate(values):
                rows.append((e, i, l, v))
    _write_csv(ctx.out / "payoff_tables.csv", ["equilibrium", "agent", "exit_round", "payoff"], rows)
    for eq in eqs:
        print(f"{eq.method}: profile {list(eq.exits)} counts {list(eq.counts)}")
    return ["equilibria.json", "payoff_tables.csv"]


def cmd_learn(ctx: Context) -> list[str]:
    net = ctx.network()
    params = ctx.net_params(net)
    tol = ctx.tolerances()
    method, budget = ctx.solver()
    eqs = _solve(params, net, method, budget)
    verdict = classify_multi(params, net, tol, eqs)
    per_eq = []
    for eq in eqs:
        s = learning_score(params, eq.counts, tol.eps)
        per_eq.append({"profile": list(eq.exits), "counts": list(eq.counts),
                       **classify(s, tol).to_dict(),
                       "failure_probability_bounds": list(markov_bounds(s, tol.epsbar))})
    _write_json(ctx.out / "verdicts.json", {
        "tolerances": {"eps": tol.eps, "epsbar": tol.epsbar, "delta": tol.delta},
        "verdict": verdict.to_dict(),
        "per_equilibrium": per_eq,
        "network_free": network_free_bounds(params, net.n, tol).to_dict(),
    })
    print(f"{verdict.verdict.value} (score {verdict.score:.12g})")
    return ["verdicts.json"]


def _society_equilibria(params, society, start="bottom"):
    return {g.n: solve_equilibrium(params_for(params, g.n), g, start) for g in society}


def cmd_rates(ctx: Context) -> list[str]:
    society = ctx.society()
    params = ctx.params(society.sizes)
    tol = ctx.tolerances()
    sec = ctx.section("rates")
    eqs = _society_equilibria(params, society)
    counts = {n: eq.counts for n, eq in eqs.items()}
    f = None
    if "f_linear" in sec:
        c = float(sec["f_linear"])
        f = lambda n: c * n  # noqa: E731
    rows = asymptotics.rates_table(params, counts, tol.eps, tol.epsbar, f)
    asymptotics.write_rates_csv(rows, ctx.out / "rates.csv")
    ns = [r["n"] for r in rows]
    deltas = [r["delta_exact"] for r in rows]
    summary = {"rows": rows}
    if len(ns) >= 2 and all(d > 0 for d in deltas):
        summary["loglog_exponent"] = asymptotics.fit_loglog_exponent(ns, deltas)
        summary["log_slope"] = asymptotics.fit_log_slope(ns, deltas)
    _write_json(ctx.out / "rates.json", summary)
    for r in rows:
        print(f"n={r['n']:<6d} delta_exact={r['delta_exact']:.6e}")
    return ["rates.csv", "rates.json"]


def cmd_mc(ctx: Context) -> list[str]:
    net = ctx.network()
    params = ctx.net_params(net)
    tol = ctx.tolerances()
    sim, trace = ctx.simulation()
    eq = solve_equilibrium(params, net, "bottom")
    outputs = ["mc_report.json"]
    trace_path = None
    if trace:
        trace_path = ctx.out / "mc_trace.csv"
        outputs.append("mc_trace.csv")
    report = estimate_learning(params, net, eq, tol, sim, trace_path)
    s = learning_score(params, eq.counts, tol.eps)
    data = report.to_dict()
    data["analytic"] = {"score": s, **classify(s, tol).to_dict(),
                        "failure_probability_bounds": list(markov_bounds(s, tol.epsbar))}
    _write_json(ctx.out / "mc_report.json", data)
    print(f"p_hat={report.p_hat:.6g} +/- {report.ci_halfwidth:.3g} over {report.trials} trials")
    ctx.manifest_extra = {"seed": sim.master_seed, "trials": sim.trials,
                          "threads": sim.resolved_threads()}
    return outputs


def cmd_society(ctx: Context) -> list[str]:
    society = ctx.society()
    params = ctx.params(society.sizes)
    proxy = ctx.proxy()
    ei = asymptotics.equilibrium_informed(society, params, proxy)
    si = asymptotics.socially_informed(society, params, proxy)
    rows = [(i, bool(ei.informed[i - 1]), int(ei.counts[-1][i - 1]), bool(si.informed[i - 1]),
             "" if si.radius[i - 1] is None else si.radius[i - 1],
             "" if si.since[i - 1] is None else si.since[i - 1])
            for i in society.largest.agents]
    _write_csv(ctx.out / "society.csv",
               ["agent", "equilibrium_informed", "count", "socially_informed", "radius", "from_n"], rows)
    _write_json(ctx.out / "society.json", {
        "sizes": society.sizes, "proxy": proxy.describe(),
        "equilibrium_informed_fraction_by_n": dict(zip(map(str, ei.ns), ei.fractions)),
        "socially_informed_fraction": si.fraction,
    })
    print(f"equilibrium informed: {ei.fraction:.3f}  socially informed: {si.fraction:.3f}")
    return ["society.csv", "society.json"]


# ---------------------------------------------------------------- worked examples

def _fmt(v: float) -> str:
    return f"{round(v, 12) + 0.0:.12f}"


def payoff_matrix_text() -> str:
    """Payoffs of agents 1 and 3 on the four-agent graph, agents 2 and 4 exiting at once."""
    params = GameParams(0.5, 0.5, 1.0, 1.0, 1.0)
    net = network.four_agent()
    lines = ["agent1\\agent3\t0\t1"]
    for l1 in range(3):
        cells = []
        for l3 in range(2):
            profile = (l1, 0, l3, 0)
            prop = propagate(net, profile)
            cells.append(f"{_fmt(payoff(params, 1, profile, prop))},"
                         f"{_fmt(payoff(params, 3, profile, prop))}")
        lines.append("\t".join([str(l1)] + cells))
    return "\n".join(lines) + "\n"


def golden_payoff_matrix() -> str:
    return resources.files("netlearn").joinpath("golden/payoff_matrix.txt").read_text()


def _society_summary(society, params, tol, layers=None):
    eqs = _society_equilibria(params, society)
    counts = {n: eq.counts for n, eq in eqs.items()}
    rate = asymptotics.rate_bound_from_counts(params, counts, tol.eps, tol.epsbar)
    out = {
        "sizes": society.sizes,
        "profiles": {str(n): list(eq.exits) for n, eq in eqs.items()},
        "counts": {str(n): list(c) for n, c in counts.items()},
        "delta_exact": [float(d) for d in rate.deltas],
        "verdicts": {str(n): classify(learning_score(params_for(params, n), c, tol.eps),
                                      tol).verdict.value for n, c in counts.items()},
    }
    if all(d > 0 for d in rate.deltas) and len(rate.ns) >= 2:
        out["loglog_exponent"] = asymptotics.fit_loglog_exponent(rate.ns, rate.deltas)
    if layers is not None:
        out["layered_rate"] = asymptotics.layered_rate(params, layers, tol.eps, society.sizes).tolist()
    return out, eqs


def _binomial_psi(kind: str, rho: float, rhobar: float, m: int) -> float:
    """Half of the largest psi for which every agent waits as long as possible."""
    if kind == "binomial_root_to_leaf":
        limit = 2 / (rho + (m - 1) * rhobar) - 1 / (rho + m * rhobar)
    else:
        limit = 2 / (rho + 2 ** (m - 1) * rhobar) - 1 / (rho + 2**m * rhobar)
    return 0.5 * limit


def run_examples(out: Path) -> tuple[list[str], dict]:
    outputs = []
    text = payoff_matrix_text()
    (out / "payoff_matrix.txt").write_text(text)
    outputs.append("payoff_matrix.txt")
    if text != golden_payoff_matrix():
        raise InvariantError("payoff matrix differs from the golden file")

    four = GameParams(0.5, 0.5, 1.0)
    eq = solve_equilibrium(four, network.four_agent())
    results = {"four_agent": {"equilibrium": eq.to_dict(), "round_bound": round_bound(four)}}

    tol = Tolerances(1.0, 0.1, 0.1)
    ones = GameParams(1.0, 1.0, 1.0)
    results["isolated"], _ = _society_summary(network.make_society("isolated", [4, 8, 16, 32]),
                                              ones, tol)
    comp = GameParams(0.5, 0.5, 1.02)
    sizes = [4, 8, 16, 32, 64, 128, 256]
    results["complete"], _ = _society_summary(network.make_society("complete", sizes), comp, tol)
    order = asymptotics.rate_order(comp, 1.0, 0.1, lambda n: 0.5 * n, sizes)
    results["linear_count"] = {"sizes": sizes, "minilower": order.deltas.tolist(),
                               "envelope": order.envelope.tolist()}

    depths = [3, 4, 5, 6]
    for kind, layers in (("binomial_root_to_leaf", None),
                         ("binomial_leaf_to_root", asymptotics.binomial_leaf_to_root_layers())):
        bsizes = [2**m - 1 for m in depths]
        soc = network.make_society(kind, bsizes)
        plain, _ = _society_summary(soc, ones, tol)
        tuned = {n: GameParams(1.0, 1.0, _binomial_psi(kind, 1.0, 1.0, m))
                 for n, m in zip(bsizes, depths)}
        sensitive, _ = _society_summary(soc, tuned, tol, layers)
        sensitive["psi_by_n"] = {str(n): p.psi for n, p in tuned.items()}
        results[kind] = {"insensitive": plain, "sensitive": sensitive}
    check = asymptotics.binomial_monotonicity_check(ones, tol.eps, depths[-1])
    results["binomial_root_to_leaf"]["sensitive"]["h_increasing"] = check.increasing
    results["binomial_root_to_leaf"]["sensitive"]["eps_condition"] = check.condition_holds

    _write_json(out / "examples.json", results)
    outputs.append("examples.json")
    rows = asymptotics.rates_table(comp, {n: [n] * n for n in sizes}, 1.0, 0.1)
    asymptotics.write_rates_csv(rows, out / "complete_rates.csv")
    outputs.append("complete_rates.csv")
    return outputs, results


def cmd_examples(ctx: Context) -> list[str]:
    outputs, _ = run_examples(ctx.out)
    print((ctx.out / "payoff_matrix.txt").read_text(), end="")
    return outputs


COMMANDS = {
    "solve": (cmd_solve, "equilibria and payoff tables for one network"),
    "learn": (cmd_learn, "finite population learning verdicts"),
    "rates": (cmd_rates, "learning-rate sequences along a society"),
    "mc": (cmd_mc, "Monte Carlo estimate of the learning failure probability"),
    "society": (cmd_society, "equilibrium-informed and socially-informed agents"),
    "paper-examples": (cmd_examples, "reproduce the worked examples and golden outputs"),
}


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON experiment configuration")
    common.add_argument("--out", metavar="DIR", default="netlearn-out", help="output directory")
    common.add_argument("--seed", type=_u64, metavar="U64", help="Monte Carlo master seed")
    common.add_argument("--trials", type=_positive, metavar="N", help="Monte Carlo trials")
    common.add_argument("--threads", type=_positive, metavar="N",
                        help="worker threads (default: $NETLEARN_THREADS or 1)")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="netlearn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    func = COMMANDS[args.command][0]
    try:
        ctx = Context(args)
        if args.command != "paper-examples" and not args.config:
            raise InputError(f"{args.command} needs --config")
        ctx.out.mkdir(parents=True, exist_ok=True)
        ctx.manifest_extra = {}
        outputs = func(ctx)
        write_manifest(ctx, args.command, outputs, ctx.manifest_extra)
    except NetlearnError as exc:
        print(f"netlearn: error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
