"""Command line benchmark harness.

Subcommands
-----------
invert  run one or more solvers on a spectrogram and write traces,
        reconstructions and a comparison plot
sweep   grid search over AGLA's (alpha, beta, gamma)
chain   run solvers back to back, e.g. ``raar:300 agla:700``

Exit codes: 0 ok, 1 configuration error, 2 I/O error, 3 every run diverged.
"""

from __future__ import annotations

import argparse
import itertools
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .algo import Algorithm, AlgoConfig, DivergedError, RunTrace, run_chain
from .frame import GaborSystem, analyze, nuttall_window
from .metric import ssnr
from .sigio import (
    Signal,
    SignalFormatError,
    TraceFile,
    TraceParseError,
    format_float,
    parse_gen,
    read_wav,
    write_plot_svg,
    write_trace_csv,
    write_wav,
)

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_DIVERGED = 0, 1, 2, 3

PARAM_KEYS = {"alpha": "alpha", "beta": "beta", "gamma": "gamma",
              "lambda": "lam", "lam": "lam", "rho": "rho"}
DEFAULT_ALGS = ("gla", "fgla", "agla", "raar", "dm")
TABLE1_ALPHAS = (0.99, 1.0, 1.1)
TABLE1_BETAS = (0.95, 0.99, 1.0, 1.1)
TABLE1_GAMMAS = (0.95, 1.1, 1.2)


class ConfigError(ValueError):
    pass


@dataclass
class BenchSpec:
    input: Optional[str] = None
    gen: Optional[str] = None
    hop: int = 32
    bins: int = 256
    winlen: int = 256
    algs: list = field(default_factory=list)
    iters: int = 1000
    init: str = "zero"
    seed: int = 0
    out: Path = Path("out")
    elser_sign: bool = False
    timing: bool = True
    jobs: int = 1


@dataclass
class Problem:
    """Padded signal, frame and magnitude target shared by all runs."""

    signal: Signal
    original_len: int
    frame: GaborSystem
    target: np.ndarray
    truth: np.ndarray


# ---------------------------------------------------------------- parsing


def _parse_params(text: str) -> dict:
    params = {}
    for item in filter(None, text.split(",")):
        key, sep, value = item.partition("=")
        if not sep or key.strip() not in PARAM_KEYS:
            raise ConfigError(f"bad parameter {item!r}; known keys: {sorted(PARAM_KEYS)}")
        try:
            params[PARAM_KEYS[key.strip()]] = float(value)
        except ValueError:
            raise ConfigError(f"parameter {key} needs a number, got {value!r}") from None
    return params


def _kind(name: str, elser_sign: bool) -> Algorithm:
    try:
        kind = Algorithm(name.strip().lower())
    except ValueError:
        names = [a.value for a in Algorithm]
        raise ConfigError(f"unknown algorithm {name!r}; choose from {names}") from None
    if elser_sign and kind is Algorithm.DM:
        kind = Algorithm.DM_ELSER
    return kind


def parse_alg(text: str, spec: BenchSpec) -> AlgoConfig:
    """``name[:k=v,...]`` to an :class:`AlgoConfig`."""
    name, _, params = text.partition(":")
    try:
        return AlgoConfig(
            kind=_kind(name, spec.elser_sign),
            n_iter=spec.iters,
            init="zero" if spec.init == "truth" else spec.init,
            seed=spec.seed,
            **_parse_params(params),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{text}: {exc}") from None


def parse_stage(text: str, spec: BenchSpec) -> tuple[AlgoConfig, int]:
    """``name:budget[:k=v,...]`` to a chain stage."""
    parts = text.split(":", 2)
    if len(parts) < 2:
        raise ConfigError(f"stage must be name:budget[:k=v,...], got {text!r}")
    try:
        budget = int(parts[1])
    except ValueError:
        raise ConfigError(f"stage budget must be an integer, got {parts[1]!r}") from None
    if budget <= 0:
        raise ConfigError(f"stage {text!r} has a non-positive budget")
    rest = parts[0] + (":" + parts[2] if len(parts) == 3 else "")
    cfg = parse_alg(rest, replace(spec, iters=budget))
    return cfg, budget


def _floats(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected comma separated numbers, got {text!r}") from None
    if not vals:
        raise ConfigError("empty parameter list")
    return vals


# ---------------------------------------------------------------- setup


def valid_length(n: int, hop: int, bins: int) -> int:
    """Smallest multiple of lcm(hop, bins) that holds ``n`` samples."""
    step = math.lcm(hop, bins)
    return max(step, -(-n // step) * step)


def load_problem(spec: BenchSpec) -> Problem:
    if (spec.input is None) == (spec.gen is None):
        raise ConfigError("give exactly one of --input or --gen")
    if spec.input is not None:
        sig = read_wav(spec.input)
    else:
        try:
            sig = parse_gen(spec.gen)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if spec.winlen < 2:
        raise ConfigError("--winlen must be at least 2")
    L = valid_length(len(sig), spec.hop, spec.bins)
    x = np.zeros(L, dtype=complex)
    x[: len(sig)] = sig.samples
    try:
        frame = GaborSystem(nuttall_window(spec.winlen), spec.hop, spec.bins, L)
        frame.dual_window
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    truth = analyze(x, frame)
    target = np.abs(truth)
    if not np.any(target > 0):
        raise ConfigError("input signal is silent; magnitude target is all zero")
    return Problem(Signal(x, sig.sample_rate, sig.name), len(sig), frame, target, truth)


def trace_header(spec: BenchSpec, prob: Problem, label: str, kind: str, params: dict,
                 iters: int) -> dict:
    return {
        "label": label,
        "algorithm": kind,
        "params": ",".join(f"{k}={v!r}" for k, v in params.items()),
        "signal": prob.signal.name,
        "sample_rate": prob.signal.sample_rate,
        "original_len": prob.original_len,
        "signal_len": prob.frame.signal_len,
        "hop": prob.frame.hop,
        "bins": prob.frame.n_channels,
        "winlen": prob.frame.window.size,
        "window": "nuttall",
        "init": spec.init,
        "seed": spec.seed,
        "iters": iters,
        "timing": "on" if spec.timing else "off",
    }


def _labels(names: Sequence[str]) -> list[str]:
    seen = {}
    out = []
    for n in names:
        seen[n] = seen.get(n, 0) + 1
        out.append(n if seen[n] == 1 else f"{n}_{seen[n]}")
    return out


# ---------------------------------------------------------------- running


@dataclass
class Outcome:
    label: str
    trace: Optional[RunTrace] = None
    error: Optional[str] = None
    recon_ssnr: float = math.nan


def _execute(jobs: int, fn, items):
    if jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, items))
    return [fn(it) for it in items]


def _run_one(prob: Problem, spec: BenchSpec, label: str, stages) -> Outcome:
    c0 = prob.truth if spec.init == "truth" else None
    try:
        tr = run_chain(stages, prob.frame, prob.target, c0, timing=spec.timing)
    except DivergedError as exc:
        return Outcome(label, error=str(exc))
    recon = ssnr(analyze(tr.signal, prob.frame), prob.target)
    return Outcome(label, tr, recon_ssnr=recon)


def _write_outputs(spec: BenchSpec, prob: Problem, outcomes, headers) -> int:
    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for oc, header in zip(outcomes, headers):
        if oc.trace is None:
            (out / f"{oc.label}.diverged.txt").write_text(oc.error + "\n")
            continue
        tf = TraceFile.from_run(oc.trace, header)
        write_trace_csv(out / f"{oc.label}.trace.csv", tf)
        samples = np.real(oc.trace.signal[: prob.original_len])
        write_wav(out / f"{oc.label}.wav", Signal(samples, prob.signal.sample_rate), "float32")
        files.append(tf)
    if files:
        write_plot_svg(out / "compare.svg", files, f"SSNR, {prob.signal.name}")
    _print_table(outcomes)
    return EXIT_OK if files else EXIT_DIVERGED


def _print_table(outcomes) -> None:
    width = max([14] + [len(oc.label) + 2 for oc in outcomes])
    print(f"{'run':<{width}}{'final SSNR':>12}{'recon SSNR':>12}{'projections':>13}{'time [s]':>10}")
    for oc in outcomes:
        if oc.trace is None:
            print(f"{oc.label:<{width}}  DIVERGED: {oc.error}")
            continue
        tr = oc.trace
        secs = tr.elapsed_ns[-1] / 1e9
        print(f"{oc.label:<{width}}{_db(tr.final_ssnr):>12}{_db(oc.recon_ssnr):>12}"
              f"{tr.total_proj_count:>13}{secs:>10.2f}")


def _db(v: float) -> str:
    return f"{v:.4f}" if math.isfinite(v) else format_float(v)


def cmd_invert(spec: BenchSpec) -> int:
    prob = load_problem(spec)
    raw = spec.algs or list(DEFAULT_ALGS)
    cfgs = [parse_alg(a, spec) for a in raw]
    labels = _labels([c.kind.value for c in cfgs])
    outcomes = _execute(
        spec.jobs,
        lambda job: _run_one(prob, spec, job[0], [(job[1], job[1].n_iter)]),
        list(zip(labels, cfgs)),
    )
    headers = [trace_header(spec, prob, lab, c.kind.value, c.params(), c.n_iter)
               for lab, c in zip(labels, cfgs)]
    return _write_outputs(spec, prob, outcomes, headers)


def cmd_chain(stage_specs: Sequence[str], spec: BenchSpec, iters_given: bool = False) -> int:
    tokens = [t for t in stage_specs if t.strip() != "+"]
    if not tokens:
        raise ConfigError("chain needs at least one stage")
    stages = [parse_stage(t, spec) for t in tokens]
    total = sum(b for _, b in stages)
    if iters_given and total != spec.iters:
        raise ConfigError(f"stage budgets sum to {total}, but --iters is {spec.iters}")
    prob = load_problem(spec)
    label = "__".join(f"{c.kind.value}{b}" for c, b in stages)
    params = {}
    for i, (c, b) in enumerate(stages):
        params[f"stage{i}"] = f"{c.kind.value}:{b}"
        params.update({f"stage{i}.{k}": v for k, v in c.params().items()})
    header = trace_header(spec, prob, label, "chain", params, total)
    outcome = _run_one(prob, spec, label, stages)
    return _write_outputs(spec, prob, [outcome], [header])


def cmd_sweep(spec: BenchSpec, alphas, betas, gammas, top: int = 5) -> int:
    """AGLA over the (alpha, beta, gamma) grid; diverged cells read ``nan``."""
    prob = load_problem(spec)
    cells = list(itertools.product(alphas, betas, gammas))
    if not cells:
        raise ConfigError("empty sweep grid")

    def one(cell):
        a, b, g = cell
        cfg = AlgoConfig(Algorithm.AGLA, alpha=a, beta=b, gamma=g, n_iter=spec.iters,
                         init="zero" if spec.init == "truth" else spec.init, seed=spec.seed)
        return _run_one(prob, spec, f"agla_a{a:g}_b{b:g}_g{g:g}", [(cfg, cfg.n_iter)])

    outcomes = _execute(spec.jobs, one, cells)
    values = {cell: (oc.trace.final_ssnr if oc.trace is not None else math.nan)
              for cell, oc in zip(cells, outcomes)}
    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(out / "sweep.csv", values, alphas, betas, gammas,
                    {"signal": prob.signal.name, "iters": spec.iters, "init": spec.init})

    ranked = sorted(
        (i for i, oc in enumerate(outcomes) if oc.trace is not None and not math.isnan(oc.trace.final_ssnr)),
        key=lambda i: (-outcomes[i].trace.final_ssnr, i),
    )
    for i in range(len(cells)):
        a, b, g = cells[i]
        mark = _db(values[cells[i]])
        print(f"alpha={a:g} beta={b:g} gamma={g:g}: {mark}")
    if not ranked:
        return EXIT_DIVERGED
    best = []
    for i in ranked[:top]:
        a, b, g = cells[i]
        params = {"alpha": a, "beta": b, "gamma": g}
        header = trace_header(spec, prob, f"a={a:g} b={b:g} g={g:g}", "agla", params, spec.iters)
        best.append(TraceFile.from_run(outcomes[i].trace, header))
    write_trace_csv(out / "sweep_best.trace.csv", best[0])
    x_from = 100 if spec.iters > 100 else None
    write_plot_svg(out / "sweep_top.svg", best, f"AGLA, best {len(best)} parameter choices",
                   x_from=x_from)
    return EXIT_OK


def write_sweep_csv(path, values: dict, alphas, betas, gammas, meta: dict) -> None:
    """Final SSNR table: one block per alpha, rows beta, columns gamma."""
    lines = [f"# {k}: {v}" for k, v in meta.items()]
    for a in alphas:
        lines.append(f"alpha={a!r}")
        lines.append("beta\\gamma," + ",".join(repr(g) for g in gammas))
        for b in betas:
            lines.append(repr(b) + "," + ",".join(format_float(values[(a, b, g)]) for g in gammas))
        lines.append("")
    Path(path).write_text("\n".join(lines))


def read_sweep_csv(path) -> dict:
    """Inverse of :func:`write_sweep_csv`: ``{(alpha, beta, gamma): ssnr}``."""
    values = {}
    alpha = None
    gammas = []
    for line in Path(path).read_text().splitlines():
        if not line or line.startswith("#"):
            continue
        if line.startswith("alpha="):
            alpha = float(line.split("=", 1)[1])
        elif line.startswith("beta\\gamma"):
            gammas = [float(v) for v in line.split(",")[1:]]
        else:
            head, *cols = line.split(",")
            for g, v in zip(gammas, cols):
                values[(alpha, float(head), g)] = float(v)
    return values


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--input", help="mono PCM16/float32 WAV file")
    src.add_argument("--gen", help="synthetic signal kind:length[:seed]")
    common.add_argument("--hop", type=int, default=32)
    common.add_argument("--bins", type=int, default=256, help="FFT bins / channels")
    common.add_argument("--winlen", type=int, default=256, help="Nuttall window length")
    common.add_argument("--iters", type=int, default=None, help="iterations (default 1000)")
    common.add_argument("--init", choices=("zero", "random", "truth"), default="zero",
                        help="initial phase; 'truth' uses the signal's own phase")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", type=Path, default=Path("out"))
    common.add_argument("--elser-sign", action="store_true",
                        help="use the sign-flipped difference map for 'dm'")
    common.add_argument("--no-timing", action="store_true",
                        help="write zeros in elapsed_ns (byte-reproducible traces)")
    common.add_argument("--jobs", type=int, default=1, help="concurrent runs")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="aglakit", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    inv = sub.add_parser("invert", parents=[common], help="run solvers on one spectrogram")
    inv.add_argument("--alg", action="append", default=[],
                     help="name[:k=v,...], repeatable (default: gla fgla agla raar dm)")
    sw = sub.add_parser("sweep", parents=[common], help="AGLA parameter grid")
    sw.add_argument("--alphas", default=",".join(map(str, TABLE1_ALPHAS)))
    sw.add_argument("--betas", default=",".join(map(str, TABLE1_BETAS)))
    sw.add_argument("--gammas", default=",".join(map(str, TABLE1_GAMMAS)))
    sw.add_argument("--top", type=int, default=5, help="trajectories in sweep_top.svg")
    ch = sub.add_parser("chain", parents=[common], help="run solvers back to back")
    ch.add_argument("stages", nargs="+", help="name:budget[:k=v,...]; '+' separators allowed")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    spec = BenchSpec(
        input=args.input, gen=args.gen, hop=args.hop, bins=args.bins, winlen=args.winlen,
        algs=list(getattr(args, "alg", [])), iters=1000 if args.iters is None else args.iters, init=args.init,
        seed=args.seed, out=args.out, elser_sign=args.elser_sign,
        timing=not args.no_timing, jobs=max(1, args.jobs),
    )
    try:
        if spec.iters < 1:
            raise ConfigError("--iters must be positive")
        if args.command == "invert":
            return cmd_invert(spec)
        if args.command == "sweep":
            return cmd_sweep(spec, _floats(args.alphas), _floats(args.betas),
                             _floats(args.gammas), args.top)
        return cmd_chain(args.stages, spec, iters_given=args.iters is not None)
    except (SignalFormatError, TraceParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
