"""Command-line entry point ``corner-lab``.

Exit codes: 0 success, 2 invalid input, 3 a verified property failed.
Every option can also be given through an environment variable named
``CORNER_LAB_<OPTION>``.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from . import io as cio
from .config import RunConfig, parse_config
from .driver import (
    INSTANCE_KINDS,
    Trajectory,
    brute_force_max_corner_free,
    generate_instance,
    run_many,
)
from .errors import CornerLabError, ParseError, PropertyViolation, TooLarge, ValidationError
from .fourier import max_character, uniformity_norm, wht
from .gf2 import SubsetOfH, full_space
from .increment import GvnParams, density_increment, verify_increment
from .norms import SYSTEMS, balanced_function, box_norms, lattice_of, s_counts
from .uniformize import joint_partition

EXIT_INVALID = 2
EXIT_PROPERTY = 3


def _env(name: str) -> str:
    return f"CORNER_LAB_{name.upper()}"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=not text.endswith("\n"))


def _read_config(path: str):
    return cio.config_from_json(Path(path).read_text())


def _run_config(path: str | None) -> RunConfig:
    return parse_config(Path(path).read_text()) if path else RunConfig()


@click.group()
def main():
    """Experiments with corners over F_2^n."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              envvar=_env("config"), help="Run configuration JSON (defaults when omitted).")
@click.option("--seed", type=int, envvar=_env("seed"), help="Override the configured seed.")
@click.option("--max-steps", type=int, envvar=_env("max_steps"), help="Override the step cap.")
@click.option("--runs", type=int, default=1, show_default=True, envvar=_env("runs"),
              help="Number of consecutive seeds to run.")
@click.option("--jobs", type=int, default=1, show_default=True, envvar=_env("jobs"),
              help="Worker processes for multiple runs.")
@click.option("--out", type=click.Path(dir_okay=False), envvar=_env("out"),
              help="Trajectory JSON path (stdout when omitted).")
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), envvar=_env("csv"),
              help="Summary CSV path.")
def run(config_path, seed, max_steps, runs, jobs, out, csv_path):
    """Run the iteration on generated instances."""
    cfg = _run_config(config_path)
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    if max_steps is not None:
        cfg = replace(cfg, max_steps=max_steps)
    if runs < 1 or jobs < 1:
        raise ValidationError(["--runs and --jobs must be positive"])
    instances = [generate_instance(cfg.kind, cfg.n, cfg.seed + i, cfg.p) for i in range(runs)]
    trajs = run_many(instances, cfg.params(), jobs=jobs)
    text = trajs[0] if runs == 1 else "[\n" + ",\n".join(t.rstrip("\n") for t in trajs) + "\n]\n"
    _emit(text, out)
    if csv_path:
        rows = []
        for i, t in enumerate(trajs):
            body = Trajectory.from_json(t).to_csv().splitlines()
            if i == 0:
                rows.append("seed," + body[0])
            rows += [f"{cfg.seed + i},{line}" for line in body[1:]]
        Path(csv_path).write_text("\n".join(rows) + "\n")


@main.command()
@click.option("--kind", type=click.Choice(INSTANCE_KINDS), default="random", show_default=True,
              envvar=_env("kind"))
@click.option("--n", type=int, default=5, show_default=True, envvar=_env("n"))
@click.option("--seed", type=int, default=0, show_default=True, envvar=_env("seed"))
@click.option("--p", type=float, default=0.9, show_default=True, envvar=_env("p"))
@click.option("--out", type=click.Path(dir_okay=False), envvar=_env("out"))
def generate(kind, n, seed, p, out):
    """Write a generated configuration as JSON."""
    _emit(cio.config_to_json(generate_instance(kind, n, seed, p)) + "\n", out)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False),
              envvar=_env("config"), help="Configuration JSON {n, H, X, Y, D, A}.")
@click.option("--max-dim-cubic", type=int, default=9, show_default=True, envvar=_env("max_dim_cubic"))
@click.option("--out", type=click.Path(dir_okay=False), envvar=_env("out"))
def norms(config_path, max_dim_cubic, out):
    """Densities, uniformity norms, box norms and lattice counts."""
    v = _read_config(config_path).local()
    L = lattice_of(v)
    f = balanced_function(v.A, L)
    bn = box_norms(f, L)
    rec = {
        "delta": int(v.A.sum()) / L.size,
        "delta_X": L.dX, "delta_Y": L.dY, "delta_D": L.dD,
        "uni_X": uniformity_norm(v.X), "uni_Y": uniformity_norm(v.Y), "uni_D": uniformity_norm(v.D),
        **{f"box_{s}": bn[s] for s in SYSTEMS},
        "s_counts": s_counts(L, allow_large=v.k <= max_dim_cubic)._asdict(),
    }
    _emit(json.dumps(rec, indent=1) + "\n", out)


def _gvn_from(config_path: str | None) -> GvnParams:
    return _run_config(config_path).params().gvn


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False),
              envvar=_env("config"), help="Configuration JSON {n, H, X, Y, D, A}.")
@click.option("--params", "params_path", type=click.Path(exists=True, dir_okay=False),
              envvar=_env("params"), help="Run configuration JSON supplying the constants.")
@click.option("--out", type=click.Path(dir_okay=False), envvar=_env("out"))
def increment(config_path, params_path, out):
    """Search for a density increment and report the chosen sublattice."""
    v = _read_config(config_path).local()
    p = _gvn_from(params_path)
    res = density_increment(v, p)
    bad = verify_increment(v, res, p.kappa_prime)
    if bad:
        raise PropertyViolation("; ".join(bad))
    idx = np.arange(v.N)
    rec = {
        "route": res.route, "system": res.system, "whole": list(res.whole),
        "delta_before": float(res.delta_before), "delta_after": float(res.delta_after),
        "X": idx[res.X].tolist(), "Y": idx[res.Y].tolist(), "D": idx[res.D].tolist(),
        "attempts": [list(a) for a in res.attempts],
        "diagnostics": cio.plain(res.diagnostics),
    }
    _emit(json.dumps(rec, indent=1) + "\n", out)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False),
              envvar=_env("config"), help="Configuration JSON; its X, Y, D are partitioned.")
@click.option("--t", "t", type=float, default=0.5, show_default=True, envvar=_env("t"))
@click.option("--u", "u", type=float, default=0.45, show_default=True, envvar=_env("u"))
@click.option("--out", type=click.Path(dir_okay=False), envvar=_env("out"))
@click.option("--trace", "trace_path", type=click.Path(dir_okay=False), envvar=_env("trace"))
def uniformize(config_path, t, u, out, trace_path):
    """Joint partition of H x H making X, Y and D uniform on each cell."""
    v = _read_config(config_path).local()
    H = full_space(v.k)
    P = joint_partition(SubsetOfH(H, v.X), SubsetOfH(H, v.Y), SubsetOfH(H, v.D), t, u)
    rec = {
        "status": P.status, "m": list(P.m),
        "cells": [{"V1": cio.subspace_to_dict(c.V1), "V2": cio.subspace_to_dict(c.V2),
                   "label": c.label, "uniformity": list(c.uniformity)} for c in P.cells],
    }
    _emit(json.dumps(rec, indent=1) + "\n", out)
    if trace_path:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["round", "index", "S_1", "S_2", "S_3", "nonuniform_mass"])
        for r in P.trace.rounds:
            w.writerow([r["round"], r["index"], *map(repr, r["S"]), repr(r["nonuniform_mass"])])
        Path(trace_path).write_text(buf.getvalue())


@main.command()
@click.option("--n", type=int, required=True, envvar=_env("n"))
def brute(n):
    """Exact size of the largest corner-free subset of F_2^n x F_2^n."""
    size, witness = brute_force_max_corner_free(n)
    click.echo(json.dumps({"n": n, "size": size, "witness": witness}))


@main.command()
@click.option("--set", "set_path", required=True, type=click.Path(exists=True, dir_okay=False),
              envvar=_env("set"), help="Set file: header n=<dim>, one hex code per line.")
@click.option("--out", type=click.Path(dir_okay=False), envvar=_env("out"))
def spectrum(set_path, out):
    """Walsh-Hadamard coefficients of a set as CSV (xi, coefficient)."""
    n, elems = cio.set_from_text(Path(set_path).read_text())
    X = SubsetOfH.from_elements(full_space(n), elems)
    coeffs = wht(X)
    best = max_character(X)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["xi", "coefficient"])
    w.writerows([i, int(c)] for i, c in enumerate(coeffs))
    _emit(buf.getvalue(), out)
    click.echo(f"# uniformity {best.value!r} at xi={best.xi}", err=True)


def cli(argv=None) -> int:
    """Run the command group and map failures to exit codes."""
    try:
        main.main(args=argv, prog_name="corner-lab", standalone_mode=False)
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.ClickException as e:
        e.show()
        return EXIT_INVALID
    except click.exceptions.Abort:
        return EXIT_INVALID
    except PropertyViolation as e:
        click.echo(f"property violation: {e}", err=True)
        return EXIT_PROPERTY
    except (ValidationError, ParseError, TooLarge, ValueError, CornerLabError) as e:
        click.echo(f"invalid input: {e}", err=True)
        return EXIT_INVALID
    return 0


def entry() -> None:
    sys.exit(cli())


if __name__ == "__main__":
    entry()
