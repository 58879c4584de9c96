"""Error-vs-amplitude curves for both alphabets and both lossy transfer channels.

Writes one CSV per (alphabet, channel) panel into the output directory, using
the same row format as ``coherent-receiver sweep``.

    python3 scripts/error_curves.py --out results/ --alpha-steps 31
"""

import argparse
import pathlib
import time

from coherent_receiver.cli import SweepConfig, sweep_rows, write_rows

PANELS = [("bpsk", "ideal-swap"), ("bpsk", "stirap"), ("3ask", "ideal-swap"), ("3ask", "stirap")]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results", help="output directory")
    ap.add_argument("--alpha-max", type=float, default=1.5)
    ap.add_argument("--alpha-steps", type=int, default=31)
    ap.add_argument("--n", type=int, nargs="+", default=[2, 10, 30, 100])
    args = ap.parse_args()

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for alphabet, channel in PANELS:
        cfg = SweepConfig(alphabet=alphabet, channel=channel, slice_counts=args.n,
                          alpha_max=args.alpha_max, alpha_steps=args.alpha_steps).validate()
        path = out / f"{alphabet}_{channel}.csv"
        t0 = time.perf_counter()
        with open(path, "w", newline="") as fh:
            write_rows(sweep_rows(cfg), "csv", fh)
        print(f"{path}  ({time.perf_counter() - t0:.1f}s)")


if __name__ == "__main__":
    main()
