"""Command-line front end.

Subcommands::

    sweep      error curves over an alpha grid and a set of slice counts
    gram       coherent vs compressed Gram matrices
    run        one receiver run with diagnostics
    multimode  joint vs per-mode measurement of the 4-mode codewords

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from .coherent import CoherentEnsemble, TransferChannel, coherent_overlap, gram_matrix
from .compression import (
    DEFAULT_CODEBOOK,
    BetaGuardError,
    codeword_gram,
    compose_multimode,
    run_alphabet,
    simulate_pure_kets,
)
from .discrimination import (
    ConvergenceError,
    helstrom_bound,
    homodyne_error,
    per_mode_error,
    povm_optimize,
    receiver_error,
)
from .linalg import LinalgError, density_residuals

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
ALPHABETS = ("bpsk", "3ask", "multimode")
FORMATS = ("csv", "jsonl")
SWEEP_COLUMNS = ("alpha", "n", "channel", "receiver_error", "helstrom_bound", "homodyne_error", "skipped")


class ConfigError(ValueError):
    pass


@dataclass
class SweepConfig:
    alphabet: str = "bpsk"
    channel: str = "exact-pure"
    slice_counts: list = field(default_factory=lambda: [2, 10, 30, 100])
    alpha_min: float = 0.0
    alpha_max: float = 1.5
    alpha_steps: int = 16
    priors: list | None = None
    output: str | None = None
    format: str = "csv"

    def validate(self) -> "SweepConfig":
        if self.alphabet not in ALPHABETS:
            raise ConfigError(f"alphabet: expected one of {ALPHABETS}, got {self.alphabet!r}")
        try:
            self.channel = TransferChannel.parse(self.channel).value
        except ValueError as exc:
            raise ConfigError(f"channel: {exc}") from None
        try:
            self.slice_counts = [int(n) for n in self.slice_counts]
        except (TypeError, ValueError):
            raise ConfigError(f"slice_counts: not a list of integers: {self.slice_counts!r}") from None
        if not self.slice_counts or min(self.slice_counts) < 1:
            raise ConfigError("slice_counts: need at least one count, all >= 1")
        if not (self.alpha_min >= 0):
            raise ConfigError(f"alpha_min: must be >= 0, got {self.alpha_min}")
        if not (self.alpha_max >= self.alpha_min):
            raise ConfigError(f"alpha_max: must be >= alpha_min, got {self.alpha_max}")
        if int(self.alpha_steps) != self.alpha_steps or self.alpha_steps < 2:
            raise ConfigError(f"alpha_steps: must be an integer >= 2, got {self.alpha_steps}")
        self.alpha_steps = int(self.alpha_steps)
        if self.format not in FORMATS:
            raise ConfigError(f"format: expected one of {FORMATS}, got {self.format!r}")
        if self.priors is not None:
            k = {"bpsk": 2, "3ask": 3, "multimode": len(DEFAULT_CODEBOOK)}[self.alphabet]
            p = [float(v) for v in self.priors]
            if len(p) != k or min(p) < 0 or abs(sum(p) - 1) > 1e-12:
                raise ConfigError(f"priors: need {k} nonnegative values summing to 1, got {self.priors}")
            if self.alphabet == "multimode":
                raise ConfigError("priors: the multimode demo uses equal priors")
            self.priors = p
        return self

    @property
    def alpha_grid(self) -> np.ndarray:
        return np.linspace(self.alpha_min, self.alpha_max, self.alpha_steps)


def load_config(path: str | None, overrides: dict) -> SweepConfig:
    values = {}
    if path:
        try:
            with open(path) as fh:
                values = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"config: cannot read {path}: {exc}") from None
        if not isinstance(values, dict):
            raise ConfigError("config: top level must be a JSON object")
        if "n" in values and "slice_counts" not in values:
            values["slice_counts"] = values.pop("n")
        known = {f.name for f in dataclasses.fields(SweepConfig)}
        unknown = set(values) - known
        if unknown:
            raise ConfigError(f"config: unknown field(s) {sorted(unknown)}")
    values.update({k: v for k, v in overrides.items() if v is not None})
    return SweepConfig(**values).validate()


# -- computations --------------------------------------------------------------

def multimode_errors(alpha: float, n: int, channel, codebook=DEFAULT_CODEBOOK) -> dict:
    mode = run_alphabet("bpsk", alpha, n, channel)
    runs = [mode] * len(codebook[0])
    prob = compose_multimode(runs, codebook)
    res = povm_optimize(prob)
    if not res.converged:
        raise ConvergenceError(f"joint POVM did not converge in {res.iterations} iterations")
    return {
        "joint_error": res.error_prob,
        "per_mode_error": per_mode_error(runs, codebook),
        "helstrom_bound": helstrom_bound("multimode", alpha, codebook=codebook),
        "homodyne_error": homodyne_error("multimode", alpha, codebook=codebook),
        "povm_iterations": res.iterations,
    }


def sweep_rows(cfg: SweepConfig):
    """Rows in (alpha, n) order; cells violating the slice-amplitude guard are flagged."""
    for alpha in cfg.alpha_grid:
        alpha = float(alpha)
        bound = float(helstrom_bound(cfg.alphabet, alpha, cfg.priors))
        homo = float(homodyne_error(cfg.alphabet, alpha, cfg.priors))
        for n in sorted(cfg.slice_counts):
            row = {"alpha": alpha, "n": n, "channel": cfg.channel, "receiver_error": None,
                   "helstrom_bound": bound, "homodyne_error": homo, "skipped": False}
            try:
                if cfg.alphabet == "multimode":
                    row["receiver_error"] = multimode_errors(alpha, n, cfg.channel)["joint_error"]
                else:
                    run = run_alphabet(cfg.alphabet, alpha, n, cfg.channel, cfg.priors)
                    row["receiver_error"] = float(receiver_error(run))
            except BetaGuardError as exc:
                log.info("skipping alpha=%s n=%s: %s", alpha, n, exc)
                row["skipped"] = True
            yield row


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_rows(rows, fmt: str, out) -> None:
    if fmt == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in SWEEP_COLUMNS])
    else:
        for r in rows:
            out.write(json.dumps({c: r[c] for c in SWEEP_COLUMNS}) + "\n")


def _real_matrix(m) -> list:
    m = np.asarray(m)
    if np.max(np.abs(m.imag)) > 1e-15:
        return [[[float(v.real), float(v.imag)] for v in row] for row in m]
    return [[float(v) for v in row] for row in m.real]


def gram_report(alphabet: str, alpha: float, n: int) -> dict:
    if alphabet == "multimode":
        kets, leak = simulate_pure_kets("bpsk", alpha, n)
        compressed = codeword_gram(DEFAULT_CODEBOOK, np.vdot(kets[0], kets[1]))
        coherent = codeword_gram(DEFAULT_CODEBOOK, coherent_overlap(-alpha, alpha))
    else:
        kets, leak = simulate_pure_kets(alphabet, alpha, n)
        compressed = np.array([[np.vdot(a, b) for b in kets] for a in kets])
        amps = (-alpha, alpha) if alphabet == "bpsk" else (-alpha, 0.0, alpha)
        if alpha > 0:
            coherent = gram_matrix(CoherentEnsemble(amps))
        else:
            coherent = np.ones((len(amps), len(amps)), dtype=complex)
    return {
        "alphabet": alphabet,
        "alpha": alpha,
        "n": n,
        "coherent_gram": _real_matrix(coherent),
        "compressed_gram": _real_matrix(compressed),
        "max_deviation": float(np.max(np.abs(compressed - coherent))),
        "slice_leakage": leak,
    }


def run_report(alphabet: str, alpha: float, n: int, channel, priors=None) -> dict:
    run = run_alphabet(alphabet, alpha, n, channel, priors)
    residuals = [density_residuals(s) for s in run.states]
    return {
        "alphabet": alphabet,
        "alpha": alpha,
        "n": n,
        "channel": run.channel.value,
        "receiver_error": receiver_error(run),
        "helstrom_bound": helstrom_bound(alphabet, alpha, priors),
        "homodyne_error": homodyne_error(alphabet, alpha, priors),
        "max_contract_residual": run.max_contract_residual,
        "max_unitarity_residual": run.max_unitarity_residual,
        "max_trace_error": run.max_trace_error,
        "min_state_eigenvalue": min(r["min_eig"] for r in residuals),
        "purities": [float(np.trace(s @ s).real) for s in run.states],
    }


# -- argument handling ---------------------------------------------------------

def _int_list(text: str) -> list:
    try:
        return [int(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of integers: {text!r}") from None


def _float_list(text: str) -> list:
    try:
        return [float(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coherent-receiver", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sw = sub.add_parser("sweep", help="error curves over an alpha grid")
    sw.add_argument("--config", help="JSON file with SweepConfig fields; flags override it")
    sw.add_argument("--alphabet", choices=ALPHABETS)
    sw.add_argument("--channel")
    sw.add_argument("--n", dest="slice_counts", type=_int_list, help="slice counts, e.g. '2,10,30,100'")
    sw.add_argument("--alpha-min", type=float)
    sw.add_argument("--alpha-max", type=float)
    sw.add_argument("--alpha-steps", type=int)
    sw.add_argument("--priors", type=_float_list)
    sw.add_argument("--output", help="output path (default stdout)")
    sw.add_argument("--format", choices=FORMATS)

    for name, help_text in (("gram", "coherent vs compressed Gram matrices"),
                            ("run", "single receiver run with diagnostics"),
                            ("multimode", "4-mode codeword demo")):
        p = sub.add_parser(name, help=help_text)
        if name != "multimode":
            p.add_argument("--alphabet", choices=ALPHABETS if name == "gram" else ALPHABETS[:2], default="bpsk")
        p.add_argument("--alpha", type=float, required=True)
        p.add_argument("--n", type=int, required=True)
        if name != "gram":
            p.add_argument("--channel", default="exact-pure")
        if name == "run":
            p.add_argument("--priors", type=_float_list)
        p.add_argument("--output")
    return parser


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _check_point(args) -> None:
    if not (args.alpha >= 0) or math.isinf(args.alpha):
        raise ConfigError(f"alpha: must be a finite number >= 0, got {args.alpha}")
    if args.n < 1:
        raise ConfigError(f"n: must be >= 1, got {args.n}")
    if getattr(args, "channel", None) is not None:
        try:
            args.channel = TransferChannel.parse(args.channel).value
        except ValueError as exc:
            raise ConfigError(f"channel: {exc}") from None


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "sweep":
            overrides = {k: getattr(args, k) for k in ("alphabet", "channel", "slice_counts", "alpha_min",
                                                       "alpha_max", "alpha_steps", "priors", "output", "format")}
            cfg = load_config(args.config, overrides)
            buf = io.StringIO()
            write_rows(sweep_rows(cfg), cfg.format, buf)
            _emit(buf.getvalue(), cfg.output)
            return EXIT_OK
        _check_point(args)
        if args.command == "gram":
            record = gram_report(args.alphabet, args.alpha, args.n)
        elif args.command == "run":
            record = run_report(args.alphabet, args.alpha, args.n, args.channel, args.priors)
        else:
            record = {"alpha": args.alpha, "n": args.n, "channel": args.channel,
                      **multimode_errors(args.alpha, args.n, args.channel)}
        _emit(json.dumps(record, indent=2) + "\n", args.output)
        return EXIT_OK
    except (ConfigError, BetaGuardError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, LinalgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
