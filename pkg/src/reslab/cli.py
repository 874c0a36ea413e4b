"""Command-line interface: zones, sweep, detect, nf-decay.

Exit codes: 0 success, 2 config/data error, 3 numerical failure (small
divisor, fixed-point non-convergence, bad zone), 4 insufficient drift.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ._backend import backend_name
from .detector import InsufficientDriftError, NotInZoneError
from .dynamics import FixedPointError
from .harness import (ConfigError, load_config, run_detect, run_nf_decay,
                      run_sweep, run_zones)
from .normalform import SmallDivisorError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_NO_DRIFT = 4

_COMMANDS = {
    "zones": run_zones,
    "sweep": run_sweep,
    "detect": run_detect,
    "nf-decay": run_nf_decay,
}

_PLOT_SCRIPT = """\
# Auto-generated plotting helper; requires matplotlib (not a dependency of
# the library itself).
import sys
import matplotlib.pyplot as plt
import numpy as np

path = sys.argv[1] if len(sys.argv) > 1 else "{csv}"
data = np.genfromtxt(path, delimiter=",", names=True, dtype=None, encoding="utf-8")
names = data.dtype.names
fig, ax = plt.subplots()
if "epsilon" in names and "median_exit" in names:
    ax.loglog(data["epsilon"], data["median_exit"], "o-")
    ax.set_xlabel("epsilon"); ax.set_ylabel("median exit time")
elif "epsilon" in names and "nonresonant_sup" in names:
    ax.loglog(data["epsilon"], data["nonresonant_sup"], "o-")
    ax.set_xlabel("epsilon"); ax.set_ylabel("remainder sup")
else:
    ax.scatter(data[names[0]], data[names[1]], s=4)
    ax.set_xlabel(names[0]); ax.set_ylabel(names[1])
fig.savefig("plot.png", dpi=150)
print("wrote plot.png")
"""

_PLOT_TARGET = {
    "zones": "zones.csv",
    "sweep": "summary.csv",
    "detect": "witness.json",
    "nf-decay": "decay.csv",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reslab",
        description="Resonance-zone maps, stability sweeps, double-resonance "
                    "detection and normal-form decay studies.",
    )
    parser.add_argument("--version", action="store_true",
                        help="print version and backend, then exit")
    sub = parser.add_subparsers(dest="command")
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="TOML run configuration")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=0, help="base RNG seed")
        p.add_argument("--threads", type=int, default=1, help="worker pool size")
        p.add_argument("--emit-plot-script", action="store_true",
                       help="also write a standalone matplotlib script")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.version:
        from . import __version__
        print(f"reslab {__version__} (backend: {backend_name()})")
        return EXIT_OK
    if args.command is None:
        parser.print_help()
        return EXIT_CONFIG
    out_dir = Path(args.out)
    base_dir = Path(args.config).resolve().parent
    try:
        cfg = load_config(args.config)
        outputs = _COMMANDS[args.command](cfg, out_dir, seed=args.seed,
                                          threads=args.threads,
                                          base_dir=base_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InsufficientDriftError as exc:
        print(f"detect: {exc}", file=sys.stderr)
        return EXIT_NO_DRIFT
    except (SmallDivisorError, FixedPointError, NotInZoneError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        # Domain errors from library layers (e.g. rational-search hypothesis).
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if args.emit_plot_script:
        script = out_dir / f"plot_{args.command.replace('-', '_')}.py"
        script.write_text(
            _PLOT_SCRIPT.format(csv=str(out_dir / _PLOT_TARGET[args.command])),
            encoding="utf-8")
        print(f"wrote {script}")
    for key, val in sorted(outputs.items()):
        print(f"{key}: {val}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
