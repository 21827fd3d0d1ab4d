"""Command-line interface: ``planarqec <command> [options]``.

Every command accepts ``--config FILE`` (JSON). Its keys, spelled like the
long options with dashes or underscores, become defaults that explicit flags
override. Exit status: 0 on success, 1 on usage errors, 2 on runtime errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

from planarqec import harness
from planarqec.circuits import Circuit, connectivity_graph, direction_map, verify_measures_stabilizers
from planarqec.codes import BudgetExhaustedError, CssCode, generate_hgp_code, toric_code
from planarqec.decoder import DecoderConfig, decode_history
from planarqec.layout import grid_positions, planar_decomposition
from planarqec.noise_sim import NoiseModel, simulate_batch

log = logging.getLogger("planarqec")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _floats(text: str) -> list[float]:
    return [float(x) for x in str(text).replace(",", " ").split()]


def _ints(text: str) -> list[int]:
    out = []
    for part in str(text).replace(",", " ").split():
        if "-" in part[1:]:
            a, b = part.split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return out


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _decoder_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("decoder")
    d = DecoderConfig()
    g.add_argument("--alpha", type=float, default=d.alpha, help="min-sum normalization")
    g.add_argument("--clamp", type=float, default=d.clamp, help="message magnitude bound")
    g.add_argument("--patience", type=int, default=d.patience)
    g.add_argument("--max-iters", type=int, default=d.max_iters)
    g.add_argument("--alternation-cap", type=int, default=d.alternation_cap)
    g.add_argument("--syndrome-mode", choices=("difference", "raw"), default=d.syndrome_mode)
    g.add_argument("--correction-mode", choices=("tracked", "applied"), default=d.correction_mode)
    g.add_argument("--prior", type=float, default=None, help="fixed BP prior (default 1-(1-p)^depth)")


def _decoder_config(a) -> DecoderConfig:
    return DecoderConfig(
        alpha=a.alpha, clamp=a.clamp, patience=a.patience, max_iters=a.max_iters,
        alternation_cap=a.alternation_cap, syndrome_mode=a.syndrome_mode,
        correction_mode=a.correction_mode, prior=a.prior,
    )


# ----------------------------------------------------------------- commands


def cmd_generate_code(a) -> int:
    if a.toric is not None:
        code = toric_code(a.toric)
    elif a.s is not None:
        code = generate_hgp_code(a.s, seed=a.seed, girth_min=a.girth_min, samples=a.samples)
    else:
        raise UsageError("generate-code: one of --s or --toric is required")
    text = json.dumps(code.to_dict())
    _emit(text, a.out)
    log.info("code n=%d k=%d r_x=%d r_z=%d", code.n, code.k, code.r_x, code.r_z)
    if a.out:
        print(f"n={code.n} k={code.k} -> {a.out}")
    return 0


def cmd_build_circuit(a) -> int:
    code = CssCode.load(a.code)
    if a.kind == "coloration":
        from planarqec.circuits import coloration_circuit

        c = coloration_circuit(code, a.basis)
        check = verify_measures_stabilizers(c, code)
        if not check:
            raise RuntimeError(f"circuit fails verification: {check.message}")
    else:
        c = harness.build_circuit(code, "cardinal", seed=a.seed)
    _emit(json.dumps(c.to_dict()), a.out)
    if a.out:
        print(f"{a.kind} circuit depth={c.depth} qubits={c.n_qubits} -> {a.out}")
    return 0


def cmd_layout(a) -> int:
    code = CssCode.load(a.code)
    c = Circuit.load(a.circuit) if a.circuit else harness.build_circuit(code, "cardinal", seed=a.seed)
    g = connectivity_graph(c)
    pos = grid_positions(code)
    dirs = None
    if a.strategy == "directional":
        from planarqec.layout import assign_directions, cardinal_orderings

        o1, o2 = cardinal_orderings(code, seed=a.seed)
        dirs = direction_map(code, assign_directions(code, o1, o2))
    layers = planar_decomposition(g, a.strategy, seed=a.seed, positions=pos, direction_of=dirs)
    report = {
        "strategy": layers.strategy,
        "max_degree": layers.max_degree,
        "bound": layers.bound,
        "num_layers": layers.num_layers,
        "planar": list(layers.planar),
        "positions": {str(k): list(v) for k, v in pos.items()},
        "layers": [[list(map(int, e)) for e in layer] for layer in layers.layers],
    }
    _emit(json.dumps(report), a.out)
    print(f"{layers.num_layers} planar layers (bound {layers.bound}, max degree {layers.max_degree})",
          file=sys.stderr if not a.out else sys.stdout)
    return 0


def cmd_simulate(a) -> int:
    code = CssCode.load(a.code)
    c = Circuit.load(a.circuit)
    dcfg = _decoder_config(a)
    nm = NoiseModel(a.p)
    rows = []
    for lo in range(0, a.trials, a.batch):
        size = min(a.batch, a.trials - lo)
        b = simulate_batch(c, code, nm, a.rounds, a.seed, size, start=lo)
        for i in range(size):
            failed = decode_history(code, b.record(i), a.p, dcfg, depth=c.depth).failed
            rows.append({
                "trial": lo + i, "seed": a.seed, "p": a.p, "rounds": a.rounds,
                "failed": failed, "failure_round_bucket": a.rounds if failed else "",
            })
    header = {"command": "simulate", "code": a.code, "circuit": a.circuit, "p": a.p, "rounds": a.rounds,
              "trials": a.trials, "seed": a.seed, "decoder": dcfg.to_dict()}
    cols = ("trial", "seed", "p", "rounds", "failed", "failure_round_bucket")
    text = harness.format_results(header, rows, cols)
    _emit(text, a.out)
    failures = sum(r["failed"] for r in rows)
    print(f"failures {failures}/{a.trials}", file=sys.stderr if not a.out else sys.stdout)
    return 0


def _experiment_config(a, p) -> harness.ExperimentConfig:
    return harness.ExperimentConfig(
        p=tuple(p), trials=a.trials, rounds=getattr(a, "rounds", 10), seed=a.seed, code_file=a.code,
        decoder=_decoder_config(a), batch=a.batch, workers=a.workers,
    )


def cmd_rounds_sweep(a) -> int:
    cfg = _experiment_config(a, [a.p])
    code = CssCode.load(a.code)
    c = Circuit.load(a.circuit)
    sweep = harness.failure_rate_vs_rounds(cfg, _ints(a.rounds_list), a.tail_from, code=code, circuit=c)
    cols = ("rounds",) + harness.RESULT_COLUMNS
    header = cfg.to_dict() | {"command": "rounds-sweep", "rounds_list": a.rounds_list, "tail_from": a.tail_from}
    _emit(harness.format_results(header, sweep.rows, cols), a.out)
    msg = (f"tail slope {sweep.slope:.4g} +- {sweep.slope_stderr:.2g} per round; "
           f"increments consistent within 3 sigma: {sweep.increments_consistent}")
    print(msg, file=sys.stderr if not a.out else sys.stdout)
    return 0


def cmd_run(a) -> int:
    fields = {"p": tuple(_floats(a.p)), "trials": a.trials, "rounds": a.rounds, "seed": a.seed,
              "circuit": a.circuit, "ordering_seed": a.ordering_seed, "decoder": _decoder_config(a),
              "batch": a.batch, "workers": a.workers, "out": a.out}
    if a.code:
        fields["code_file"] = a.code
    elif a.toric is not None:
        fields["toric_d"] = a.toric
    elif a.s is not None:
        fields.update(s=a.s, code_seed=a.code_seed, samples=a.samples, girth_min=a.girth_min)
    else:
        raise UsageError("run: one of --code, --s or --toric is required")
    cfg = harness.ExperimentConfig(**fields)
    rows = harness.run_experiment(cfg)
    if not a.out:
        sys.stdout.write(harness.format_results(cfg, rows))
    return 0


def cmd_fit(a) -> int:
    rows = []
    for path in a.inputs:
        rows.extend(harness.read_results(path)[1])
    fit = harness.fit_threshold(rows)
    _emit(json.dumps(fit.to_dict(), indent=2), a.out)
    if a.out:
        print(f"p_t={fit.p_t:.4g} c1={fit.c1:.3g} c2={fit.c2:.3g} c3={fit.c3:.3g}")
    return 0


def cmd_table(a) -> int:
    oc = harness.OverheadConfig(
        targets=tuple(_floats(a.targets)), p=a.p, a=a.a, pt_surface=a.pt_surface, c1=a.c1, c2=a.c2,
        c3=a.c3, pt_hgp=a.pt_hgp, hgp_qubits_per_logical=a.qubits_per_logical,
        surface_k_factor=a.surface_k_factor,
    )
    rows = harness.overhead_table(oc)
    if a.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["target", "k", "d", "surface_qubits", "s", "hgp_qubits", "ratio"])
        for r in rows:
            w.writerow([r.target, r.k, r.d, r.surface_qubits, r.s, r.hgp_qubits, f"{r.ratio:.2f}"])
        text = buf.getvalue()
    else:
        text = harness.format_table(rows)
    _emit(text, a.out)
    return 0


# ------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON file of option defaults")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="planarqec", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("generate-code", parents=[common], help="sample an HGP code (or a toric code)")
    p.add_argument("--s", type=int, help="size parameter: 4s bits and 3s checks per seed graph")
    p.add_argument("--toric", type=int, metavar="D", help="toric code of distance D instead")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=1)
    p.add_argument("--girth-min", type=int, default=8)
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate_code)

    p = sub.add_parser("build-circuit", parents=[common], help="synthesize and verify an extraction circuit")
    p.add_argument("--code", required=True)
    p.add_argument("--kind", choices=("cardinal", "coloration"), default="cardinal")
    p.add_argument("--basis", choices=("both", "X", "Z"), default="both", help="coloration circuits only")
    p.add_argument("--seed", type=int, default=0, help="ordering search seed")
    p.add_argument("--out")
    p.set_defaults(func=cmd_build_circuit)

    p = sub.add_parser("layout", parents=[common], help="grid positions and planar layers")
    p.add_argument("--code", required=True)
    p.add_argument("--circuit")
    p.add_argument("--strategy", choices=("two_factor", "directional", "greedy"), default="two_factor")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_layout)

    def sim_args(p, rounds=True):
        p.add_argument("--code", required=True)
        p.add_argument("--circuit", required=True)
        p.add_argument("--p", type=float, required=True)
        if rounds:
            p.add_argument("--rounds", type=int, default=10)
        p.add_argument("--trials", type=int, default=1000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--batch", type=int, default=2000)
        p.add_argument("--out")
        _decoder_args(p)

    p = sub.add_parser("simulate", parents=[common], help="per-trial outcomes of noisy extraction + decoding")
    sim_args(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("rounds-sweep", parents=[common], help="failure probability against number of rounds")
    sim_args(p, rounds=False)
    p.add_argument("--rounds-list", default="2-12", help="e.g. '2-12' or '2,4,6'")
    p.add_argument("--tail-from", type=int, default=6)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_rounds_sweep)

    p = sub.add_parser("run", parents=[common], help="aggregated experiment over several p values")
    p.add_argument("--code", help="code file (else --s or --toric)")
    p.add_argument("--s", type=int)
    p.add_argument("--toric", type=int, metavar="D")
    p.add_argument("--code-seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=1)
    p.add_argument("--girth-min", type=int, default=8)
    p.add_argument("--circuit", choices=("cardinal", "coloration"), default="cardinal")
    p.add_argument("--ordering-seed", type=int, default=0)
    p.add_argument("--p", default="1e-3", help="comma-separated physical rates")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--rounds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--batch", type=int, default=2000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    _decoder_args(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("fit", parents=[common], help="fit the threshold model to result CSVs")
    p.add_argument("inputs", nargs="+", metavar="CSV")
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit)

    oc = harness.OverheadConfig()
    p = sub.add_parser("table", parents=[common], help="qubit overhead: HGP vs surface code")
    p.add_argument("--targets", default=",".join(f"{t:g}" for t in oc.targets))
    p.add_argument("--p", type=float, default=oc.p)
    p.add_argument("--a", type=float, default=oc.a)
    p.add_argument("--pt-surface", type=float, default=oc.pt_surface)
    p.add_argument("--c1", type=float, default=oc.c1)
    p.add_argument("--c2", type=float, default=oc.c2)
    p.add_argument("--c3", type=float, default=oc.c3)
    p.add_argument("--pt-hgp", type=float, default=oc.pt_hgp)
    p.add_argument("--qubits-per-logical", type=int, default=oc.hgp_qubits_per_logical)
    p.add_argument("--surface-k-factor", type=float, default=oc.surface_k_factor)
    p.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    p.add_argument("--out")
    p.set_defaults(func=cmd_table)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    """Install defaults from ``--config`` on the chosen subcommand parser."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        data = json.loads(Path(known.config).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot read config {known.config}: {e}") from e
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    command = next((t for t in rest if not t.startswith("-")), None)
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    if command not in sub.choices:
        return  # the main parse reports the problem
    sp = sub.choices[command]
    # a per-command section overrides shared keys
    section = data.get(command, {})
    flat = {k: v for k, v in data.items() if not isinstance(v, dict) or k not in sub.choices}
    flat.update(section if isinstance(section, dict) else {})
    dests = {a.dest: a for a in sp._actions}
    defaults = {}
    for key, value in flat.items():
        dest = key.replace("-", "_")
        if dest not in dests or dest in ("help", "config", "func"):
            raise UsageError(f"config key {key!r} is not an option of {command}")
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        action = dests[dest]
        if action.type is not None and value is not None and not isinstance(value, bool):
            value = action.type(value)
        defaults[dest] = value
        action.required = False
    sp.set_defaults(**defaults)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except UsageError as e:
        print(str(e), file=sys.stderr)
        return 1
    except SystemExit as e:  # --help
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        print(str(e), file=sys.stderr)
        return 1
    except (ValueError, RuntimeError, OSError, KeyError, BudgetExhaustedError, json.JSONDecodeError) as e:
        print(f"planarqec {args.command}: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
