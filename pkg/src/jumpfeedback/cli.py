"""Command-line front end: ``jumpfeedback --config exp.cfg --out result.csv``.

Exit codes: 0 success, 2 configuration error, 3 numerical non-convergence
(outputs are still written).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._backend import BACKEND
from .config import ConfigError, ExperimentSpec, parse_config
from .dynamics import IntegrationError, rng_metadata
from .experiments import RUNNERS, ExperimentResult

log = logging.getLogger("jumpfeedback")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICS = 0, 2, 3


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def sidecar_path(out: Path) -> Path:
    return out.with_name(out.name + ".json")


def provenance(spec: ExperimentSpec) -> dict:
    return {
        "spec": spec.to_dict(),
        "config_document": spec.to_document(),
        "version": __version__,
        "backend": BACKEND,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "rng": rng_metadata(spec.seed),
    }


def read_config(path: str) -> ExperimentSpec:
    """Load a config document, or the ``config_document`` of a JSON sidecar."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        try:
            text = json.loads(text)["config_document"]
        except (json.JSONDecodeError, KeyError, TypeError):
            raise ConfigError(f"{path} is JSON but not a result sidecar") from None
    return parse_config(text)


def emit(spec: ExperimentSpec, result: ExperimentResult, out: Path) -> list[Path]:
    out.parent.mkdir(parents=True, exist_ok=True)
    prov = provenance(spec) | {"converged": result.converged, "metadata": result.metadata}
    if result.document is not None:
        out.write_text(json.dumps(result.document | {"provenance": prov}, indent=2))
        return [out]
    write_csv(out, result.header, result.rows)
    side = sidecar_path(out)
    side.write_text(json.dumps(prov, indent=2, default=_fmt))
    written = [out, side]
    if spec.command == "dark-basis":
        from .spin_structure import build_coupled_basis

        basis_file = out.with_name(out.stem + ".basis.json")
        basis_file.write_text(build_coupled_basis(spec.N).to_json())
        written.append(basis_file)
    return written


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jumpfeedback", description=__doc__.splitlines()[0])
    p.add_argument("--config", required=True, help="experiment document or result sidecar (.json)")
    p.add_argument("--out", help="output path (overrides `out` in the config)")
    p.add_argument("--seed", type=int, help="override the RNG seed")
    p.add_argument("--threads", type=int, help="worker threads for grids and ensembles")
    p.add_argument("--quiet", action="store_true", help="only report errors")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        spec = read_config(args.config)
        changes = {}
        if args.seed is not None:
            if args.seed < 0 or args.seed >= 2**64:
                raise ConfigError("seed must be an unsigned 64-bit integer", "seed")
            changes["seed"] = args.seed
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("must be at least 1", "threads")
            changes["threads"] = args.threads
        if args.out:
            changes["out"] = args.out
        spec = dataclasses.replace(spec, **changes)
        if not spec.out:
            raise ConfigError("no output path; pass --out or set `out`", "out")
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    log.info("running %s (N=%d, backend=%s)", spec.command, spec.N, BACKEND)
    try:
        result = RUNNERS[spec.command](spec)
    except IntegrationError as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        return EXIT_NUMERICS
    for path in emit(spec, result, Path(spec.out)):
        log.info("wrote %s", path)
    if not result.converged:
        print("warning: some points did not converge (see sidecar)", file=sys.stderr)
        return EXIT_NUMERICS
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
