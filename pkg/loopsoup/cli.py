# coding: utf-8
#
# This code is part of loopsoup.
#
# Copyright (c) 2026, The loopsoup developers
#
# This code is licensed under the MIT License. The copyright notice in the
# LICENSE file in the root directory and this permission notice shall
# be included in all copies or substantial portions of the Software.

"""Command line interface.

Every command writes plot-ready CSV rows. Experiment runs additionally write a
JSON manifest next to the CSV file holding the fully resolved configuration.

Exit status is 0 on success, 2 for invalid input and 3 for numerical failures.
"""

import io
import csv
import sys
import json
import time
import logging
import argparse
from dataclasses import dataclass, asdict, fields
from datetime import datetime, timezone
from pathlib import Path
from typing import List, Optional, Sequence, Union
import numpy as np
from .exact import (
    conformal_radius,
    n_point_function,
    parity_constrained_mass,
    total_loop_mass,
    winding_n_point_function,
)
from .experiments import CATALOG, get_experiment, parse_faces
from .fields import (
    cutoff_winding_field,
    occupation_field,
    spin_field,
    winding_field,
    write_field_csv,
)
from .lattice import build_domain
from .sampler import sample_loop_soup
from .utils import (
    ConfigurationError,
    LoopSoupError,
    NumericalError,
    ParameterError,
    format_duration,
)

__all__ = ["ExperimentConfig", "run", "list_experiments", "main"]

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _floats(values) -> Optional[List[float]]:
    if values is None:
        return None
    if np.isscalar(values):
        return [float(values)]
    return [float(v) for v in values]


@dataclass
class ExperimentConfig:
    """Resolved configuration of an experiment run.

    Attributes
    ----------
    experiment : str
        Name of a catalog entry.
    domain : str or dict, optional
        Domain descriptor, see ``loopsoup.lattice.build_domain``.
    mesh : float, optional
        Mesh size, overrides the descriptor.
    lam : list of float, optional
        Soup intensities.
    kappa : float, optional
        Killing rate of the massive walk.
    beta, alpha : float
        Winding angle and Sobolev exponent.
    delta : list of float, optional
        Diameter cutoffs.
    r : list of float, optional
        Radii (boundary perturbation ratios or triple radii).
    meshes : list of float, optional
        Mesh sizes of scaling fits.
    faces : list of str, optional
        Marked faces ``"i,j"`` or a single rectangle ``"WxH"``.
    n_samples : int, optional
        Number of replicas. Each experiment has its own default.
    seed : int
    threads : int
        Worker count, results do not depend on it.
    out : str, optional
        Path of the CSV file. The manifest is written next to it.
    """

    experiment: str = ""
    domain: Optional[Union[str, dict]] = None
    mesh: Optional[float] = None
    lam: Optional[List[float]] = None
    kappa: Optional[float] = None
    beta: float = np.pi
    alpha: float = 2.0
    delta: Optional[List[float]] = None
    r: Optional[List[float]] = None
    meshes: Optional[List[float]] = None
    faces: Optional[List[str]] = None
    n_samples: Optional[int] = None
    seed: int = 0
    threads: int = 1
    out: Optional[str] = None

    def __post_init__(self):
        self.lam = _floats(self.lam)
        self.delta = _floats(self.delta)
        self.r = _floats(self.r)
        self.meshes = _floats(self.meshes)
        if self.faces is not None:
            self.faces = [
                f if isinstance(f, str) else f"{f[0]},{f[1]}" for f in self.faces
            ]
        if self.experiment and self.experiment not in CATALOG:
            raise ConfigurationError(
                f"unknown experiment '{self.experiment}'",
                f"available: {', '.join(CATALOG)}",
            )
        if self.mesh is not None and not self.mesh > 0:
            raise ParameterError(f"mesh must be positive, got {self.mesh}")
        if self.meshes and min(self.meshes) <= 0:
            raise ParameterError("meshes must be positive")
        if self.lam and (np.any(np.isnan(self.lam)) or min(self.lam) < 0):
            raise ParameterError(
                f"intensity lambda must be non-negative, got {self.lam}"
            )
        if self.kappa is not None and (np.isnan(self.kappa) or self.kappa < 0):
            raise ParameterError(f"kappa must be non-negative, got {self.kappa}")
        if not 0 <= self.beta <= np.pi:
            raise ParameterError(f"beta must lie in [0, pi], got {self.beta}")
        if not self.alpha > 0:
            raise ParameterError(f"alpha must be positive, got {self.alpha}")
        if self.delta and min(self.delta) <= 0:
            raise ParameterError("cutoffs delta must be positive")
        if self.r and not all(0 < r < 1 for r in self.r):
            raise ParameterError(f"radii r must lie in (0, 1), got {self.r}")
        if self.n_samples is not None and self.n_samples < 1:
            raise ParameterError(f"n_samples must be positive, got {self.n_samples}")
        if self.threads < 1:
            raise ParameterError(f"threads must be positive, got {self.threads}")
        self.seed = int(self.seed)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigurationError(
                f"unknown configuration keys {sorted(unknown)}",
                f"allowed: {sorted(names)}",
            )
        return cls(**data)

    @classmethod
    def from_file(cls, file: Union[str, Path], **overrides) -> "ExperimentConfig":
        """Reads a JSON configuration; non-``None`` overrides win over the file."""
        try:
            with open(file, "r") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"cannot read config '{file}': {e}") from None
        if not isinstance(data, dict):
            raise ConfigurationError("config file must hold a JSON object")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(data)

    def todict(self) -> dict:
        return asdict(self)


# =========================================================================
# Output
# =========================================================================


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def rows_to_csv(rows: Sequence[dict]) -> str:
    """CSV text of result rows; columns appear in order of first use."""
    header = list()
    for row in rows:
        for key in row:
            if key not in header:
                header.append(key)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(row.get(key)) for key in header])
    return buffer.getvalue()


def _version() -> str:
    from . import __version__

    return __version__


def _emit(rows: Sequence[dict], out: Optional[str]) -> None:
    text = rows_to_csv(rows)
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)


def run(config: ExperimentConfig) -> int:
    """Runs a catalog experiment and writes its CSV and JSON manifest.

    Returns
    -------
    status : int
        0 on success, 2 on validation failures and 3 on numerical failures.
    """
    start = time.perf_counter()
    try:
        experiment = get_experiment(config.experiment)
        logger.info("Running %s (%s)", experiment.name, experiment.key)
        rows = experiment(config)
    except ConfigurationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as e:
        print(f"numerical error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    elapsed = time.perf_counter() - start
    out = config.out or str(Path("results") / f"{experiment.name}.csv")
    _emit(rows, out)
    manifest = {
        "experiment": experiment.todict(),
        "config": config.todict(),
        "version": _version(),
        "created": datetime.now(timezone.utc).isoformat(),
        "elapsed": elapsed,
        "rows": len(rows),
        "csv": out,
        "field_injection": "faces to primal vertices by averaging incident faces",
    }
    if out != "-":
        text = json.dumps(manifest, indent=2, default=str)
        Path(out).with_suffix(".json").write_text(text)
    took = format_duration(elapsed)
    logger.info("%s finished in %s (%d rows)", experiment.name, took, len(rows))
    return EXIT_OK


def list_experiments(as_json: bool = False) -> str:
    """Catalog of the experiments with the statement each one checks."""
    if as_json:
        return json.dumps([e.todict() for e in CATALOG.values()], indent=2)
    width = max(len(e.name) for e in CATALOG.values())
    lines = list()
    for e in CATALOG.values():
        lines.append(f"{e.key:<4} {e.name:<{width}}  {e.summary}")
        lines.append(f"{'':<4} {'':<{width}}  checks: {e.anchor}")
    return "\n".join(lines)


# =========================================================================
# Commands
# =========================================================================


def _cmd_list(args) -> int:
    print(list_experiments(args.json))
    return EXIT_OK


def _cmd_exact_npoint(args) -> int:
    domain = build_domain(args.domain, args.mesh)
    faces = parse_faces(args.faces)
    kappa = args.kappa or 0.0
    rows = list()
    for lam in args.lam or [0.5]:
        if args.beta is None or args.beta == np.pi:
            value = n_point_function(domain, faces, lam, kappa, num_jobs=args.threads)
        else:
            value = winding_n_point_function(domain, faces, args.beta, lam, kappa)
        rows.append({
            "experiment": "exact-npoint", "domain": args.domain, "mesh": domain.mesh,
            "faces": ";".join(f"{i},{j}" for i, j in faces), "lam": lam, "kappa": kappa,
            "beta": np.pi if args.beta is None else args.beta, "value": value,
        })
    _emit(rows, args.out)
    return EXIT_OK


def _cmd_exact_mass(args) -> int:
    domain = build_domain(args.domain, args.mesh)
    faces = parse_faces(args.faces)
    kappa = args.kappa or 0.0
    if args.rule == "total":
        mass = total_loop_mass(domain, kappa)
    else:
        pattern = [int(c) for c in args.pattern] if args.pattern else None
        mass = parity_constrained_mass(
            domain, faces, args.rule, kappa, pattern, num_jobs=args.threads
        )
    row = {
        "experiment": "exact-mass", "domain": args.domain, "mesh": domain.mesh,
        "faces": ";".join(f"{i},{j}" for i, j in faces), "rule": args.rule,
        "pattern": args.pattern or "", "kappa": kappa, "value": mass.value,
    }
    _emit([row], args.out)
    return EXIT_OK


def _cmd_conformal_radius(args) -> int:
    rows = list()
    for text in args.point:
        try:
            x, y = (float(v) for v in text.split(","))
        except ValueError:
            raise ParameterError(
                f"invalid point '{text}'", "use the form 'x,y'"
            ) from None
        value = conformal_radius(args.domain, (x, y))
        rows.append({
            "experiment": "conformal-radius", "domain": args.domain,
            "x": x, "y": y, "value": value,
        })
    _emit(rows, args.out)
    return EXIT_OK


def _cmd_sample(args) -> int:
    domain = build_domain(args.domain, args.mesh)
    lam = (args.lam or [0.5])[0]
    kappa = args.kappa or 0.0
    soup = sample_loop_soup(domain, lam, kappa, args.seed, args.replica, args.threads)
    logger.info("Sampled %d loops", len(soup))
    if args.out:
        soup.dump(args.out)
    elif not args.field:
        for loop in soup.loops:
            print(json.dumps(loop.todict()))
    if args.field:
        if args.field == "winding":
            fld = winding_field(soup)
        elif args.field == "spin":
            fld = spin_field(soup)
        elif args.field == "cutoff":
            delta = (args.delta or [0.0])[0]
            beta = np.pi if args.beta is None else args.beta
            fld = cutoff_winding_field(soup, beta, delta)
        else:
            fld = occupation_field(soup, args.seed, args.replica)
        write_field_csv(fld, args.field_out or sys.stdout)
    return EXIT_OK


def _config_from_args(args) -> ExperimentConfig:
    overrides = dict(
        experiment=getattr(args, "name", None),
        domain=args.domain,
        mesh=args.mesh,
        lam=args.lam,
        kappa=args.kappa,
        beta=args.beta,
        alpha=args.alpha,
        delta=args.delta,
        r=args.r,
        meshes=args.meshes,
        faces=args.faces,
        n_samples=args.n,
        seed=args.seed,
        threads=args.threads,
        out=args.out,
    )
    if args.config:
        return ExperimentConfig.from_file(args.config, **overrides)
    return ExperimentConfig(**{k: v for k, v in overrides.items() if v is not None})


def _cmd_experiment(args) -> int:
    return run(_config_from_args(args))


def _cmd_run(args) -> int:
    if not args.config:
        raise ConfigurationError("run needs --config", "pass a JSON configuration file")
    return run(_config_from_args(args))


def _add_common(parser: argparse.ArgumentParser, defaults: bool = False) -> None:
    parser.add_argument("--domain", type=str, help="e.g. square:8, box:3, disk:1")
    parser.add_argument("--mesh", type=float, help="mesh size a")
    parser.add_argument("--lambda", dest="lam", type=float, nargs="+", help="intensity")
    parser.add_argument("--kappa", type=float, help="killing rate kappa")
    parser.add_argument("--beta", type=float, help="winding angle in [0, pi]")
    parser.add_argument("--alpha", type=float, help="Sobolev exponent")
    parser.add_argument("--delta", type=float, nargs="+", help="diameter cutoffs")
    parser.add_argument("--r", type=float, nargs="+", help="radii in (0, 1)")
    parser.add_argument("--meshes", type=float, nargs="+", help="meshes of a fit")
    parser.add_argument("--faces", type=str, nargs="+", help="faces 'i,j' or 'WxH'")
    parser.add_argument("--n", type=int, help="number of samples")
    seed, threads = (0, 1) if defaults else (None, None)
    parser.add_argument("--seed", type=int, default=seed, help="base seed")
    parser.add_argument("--threads", type=int, default=threads, help="worker threads")
    parser.add_argument("--out", type=str, help="output file ('-' for stdout)")
    parser.add_argument("--config", type=str, help="JSON configuration, flags win")


def build_parser() -> argparse.ArgumentParser:
    lines = [f"  {e.name:<13}{e.summary}" for e in CATALOG.values()]
    epilog = "experiments:\n" + "\n".join(lines)
    parser = argparse.ArgumentParser(
        prog="loopsoup",
        description="Random walk loop soups and their exact lattice correlations.",
        epilog=epilog,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("--version", action="version", version=f"%(prog)s {_version()}")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("list", help="list the experiments")
    p.add_argument("--json", action="store_true", help="machine readable catalog")
    p.set_defaults(func=_cmd_list)

    p = sub.add_parser("exact-npoint", help="exact spin or winding correlation")
    _add_common(p, defaults=True)
    p.set_defaults(func=_cmd_exact_npoint, domain="square:8")

    p = sub.add_parser("exact-mass", help="exact loop masses")
    _add_common(p, defaults=True)
    p.add_argument("--rule", choices=["total", "sum-odd", "pattern"], default="sum-odd")
    p.add_argument("--pattern", type=str, help="parity bits, one per face, e.g. 101")
    p.set_defaults(func=_cmd_exact_mass, domain="square:8")

    p = sub.add_parser("conformal-radius", help="conformal radius of a disk or square")
    p.add_argument("--domain", choices=["disk", "square"], default="disk")
    p.add_argument("--point", type=str, nargs="+", required=True, help="points 'x,y'")
    p.add_argument("--out", type=str)
    p.set_defaults(func=_cmd_conformal_radius)

    p = sub.add_parser("sample", help="sample a loop soup and export it")
    _add_common(p, defaults=True)
    p.add_argument("--replica", type=int, default=0)
    p.add_argument("--field", choices=["winding", "spin", "cutoff", "occupation"])
    p.add_argument("--field-out", type=str, help="CSV file of the field")
    p.set_defaults(func=_cmd_sample, domain="square:16")

    p = sub.add_parser("experiment", help="run a catalog experiment")
    p.add_argument("name", choices=list(CATALOG))
    _add_common(p)
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("run", help="run an experiment from a JSON configuration")
    _add_common(p)
    p.set_defaults(func=_cmd_run)
    return parser


def main(argv: Sequence[str] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verbose:
        level = logging.DEBUG if args.verbose > 1 else logging.INFO
        logging.getLogger("loopsoup").setLevel(level)
    if getattr(args, "func", None) is None:
        parser.print_help()
        return EXIT_OK
    try:
        return args.func(args)
    except ConfigurationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as e:
        print(f"numerical error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except LoopSoupError as e:  # pragma: no cover
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
