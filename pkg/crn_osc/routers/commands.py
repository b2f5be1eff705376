# crn_osc/routers/commands.py

import functools
import json
import logging
from pathlib import Path
from typing import List, Optional

import click
import numpy as np

from crn_osc.config import config, setup_logging
from crn_osc.errors import CrnOscError, InvalidNetworkError
from crn_osc.models.kinetics import KineticsClass, KineticsSpec
from crn_osc.models.network import CanonicalKey, Crn, EnumSpec
from crn_osc.models.orbit import IntegratorConfig
from crn_osc.models.records import RunRecord
from crn_osc.services.canon import canonical_key, core_key, crn_from_key, normal_form
from crn_osc.services.crn_model import fully_open_extension
from crn_osc.services.dynamics import classify, integrate, locate_orbit
from crn_osc.services.enumeration import count_crns, enumerate_crns
from crn_osc.services.floquet import certify
from crn_osc.services.hopf import hopf_screen
from crn_osc.services.inherit import any_motif_frequency, census_fraction, closure_step, motif_census
from crn_osc.services.kinetics import VectorField
from crn_osc.services.storage import StorageService
from crn_osc.services.workbench import (
    search_oscillation,
    sensitivity_experiment,
    table1,
    verify_appendix_b,
    xivset_field,
)
from crn_osc.utils.helpers import Timer, parse_cell, rng_stream

logger = logging.getLogger(__name__)

KINETICS = click.Choice([c.value for c in KineticsClass])


def _handle_errors(command):
    """Report workbench failures as a non-zero exit instead of a traceback."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except CrnOscError as e:
            logger.error("%s failed: %s", command.__name__, e)
            raise click.ClickException(f"{type(e).__name__}: {e}") from e

    return wrapper


def _record(ctx: click.Context, command: str, timer: Timer, inputs: dict, outputs: dict) -> Path:
    storage: StorageService = ctx.obj["storage"]
    record = RunRecord(
        command=command,
        config={"seed": ctx.obj["seed"], "threads": ctx.obj["threads"],
                **json.loads(config.model_dump_json(exclude={"BASE_DIR", "STORAGE_DIR", "KEYS_DIR",
                                                             "RECORDS_DIR", "TRAJECTORIES_DIR"}))},
        inputs=inputs,
        outputs=outputs,
        wall_time=timer.elapsed,
    )
    return storage.save_record(record, storage.record_path(f"run_{command}"))


def _load_networks(path: Path) -> List[Crn]:
    """Key file or network stanzas."""
    try:
        return [crn_from_key(k) for k in StorageService.read_key_file(path)]
    except (ValueError, InvalidNetworkError):
        networks = StorageService.read_crn_file(path)
        if not networks:
            raise InvalidNetworkError(f"no networks in {path}")
        return networks


def _cell_option(ctx, param, value):
    if value is None:
        return None
    try:
        return parse_cell(value)
    except ValueError as e:
        raise click.BadParameter(str(e)) from e


def _seed_point(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError as e:
        raise click.BadParameter(f"expected comma-separated numbers, got '{text}'") from e


@click.group()
@click.option("--seed", type=int, default=None, help="Run seed (config default if omitted).")
@click.option("--threads", type=int, default=None, help="Worker processes.")
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Storage root for keys and records.")
@click.option("--log-level", default=None, help="Logging level.")
@click.pass_context
def cli(ctx: click.Context, seed: Optional[int], threads: Optional[int], out: Optional[str],
        log_level: Optional[str]):
    """Oscillation census workbench for small chemical reaction networks."""
    setup_logging(log_level)
    ctx.ensure_object(dict)
    ctx.obj["seed"] = config.DEFAULT_SEED if seed is None else seed
    ctx.obj["threads"] = threads or config.THREADS
    ctx.obj["storage"] = StorageService(Path(out) if out else None)


@cli.command("enumerate")
@click.option("--species", "k", type=click.IntRange(min=1), required=True, help="Species count K.")
@click.option("--reactions", "l", type=click.IntRange(min=0), required=True, help="Non-flow reaction count L.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="Key file (default: crns_K_L.txt in the keys directory).")
@click.option("--emit-crns", type=click.Path(dir_okay=False), default=None,
              help="Also write the fully open networks, one stanza each, in key order.")
@click.option("--ceiling", type=click.IntRange(min=1), default=None,
              help="Largest labelled-subset count to enumerate (config default if omitted).")
@click.option("--count-only", is_flag=True)
@click.option("--override", is_flag=True, help="Ignore the resource ceiling.")
@click.pass_context
@_handle_errors
def enumerate_command(ctx, k, l, out_path, emit_crns, ceiling, count_only, override):
    """Nonisomorphic (k,l) CRNs."""
    if count_only and emit_crns:
        raise click.UsageError("--emit-crns needs the networks; drop --count-only")
    spec = EnumSpec(k=k, l=l)
    storage: StorageService = ctx.obj["storage"]
    threads = ctx.obj["threads"]
    path = None
    with Timer() as timer:
        if count_only:
            count = count_crns(spec, threads=threads, ceiling=ceiling, override=override)
        else:
            pairs = sorted(enumerate_crns(spec, threads=threads, ceiling=ceiling, override=override),
                           key=lambda pair: pair[1].hex)
            path = Path(out_path) if out_path else storage.keys_dir / f"crns_{k}_{l}.txt"
            count = storage.write_key_file([key for _, key in pairs], path)
            if emit_crns:
                storage.write_crn_file([fully_open_extension(core) for core, _ in pairs], Path(emit_crns))
    click.echo(f"({k},{l}): {count}")
    _record(ctx, "enumerate", timer, {"species": k, "reactions": l, "ceiling": ceiling},
            {"count": count, "keys": str(path) if path else None, "crns": emit_crns})


@cli.command("inherit-closure")
@click.option("--seeds", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--target", required=True, callback=_cell_option, help="K,L")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="Closure report JSON (default: the records directory).")
@click.pass_context
@_handle_errors
def inherit_closure_command(ctx, seeds, target, out_path):
    """Inheritors of oscillation in a target cell."""
    k, l = target
    storage: StorageService = ctx.obj["storage"]
    keys = [core_key(normal_form(c)) for c in _load_networks(Path(seeds))]
    with Timer() as timer:
        result = closure_step([x for x in keys if x.shape == (k, l - 1)],
                              [x for x in keys if x.shape == (k - 1, l)], (k, l), ctx.obj["threads"])
    path = Path(out_path) if out_path else storage.record_path(f"closure_{k}_{l}")
    storage.save_record(result, path)
    storage.write_key_file([CanonicalKey.from_hex(h) for h in result.inheritor_keys],
                           storage.keys_dir / f"inheritors_{k}_{l}.txt")
    click.echo(f"({k},{l}): {result.count} inheritors")
    _record(ctx, "inherit-closure", timer, {"seeds": seeds, "target": [k, l]},
            {"count": result.count, "report": str(path)})


def _network_and_field(crn_path: Optional[str], spec_path: Optional[str], xivset: Optional[float]):
    if xivset is not None:
        vf = xivset_field(xivset)
        return vf.crn, vf
    if not crn_path:
        raise click.UsageError("give --crn or --xivset")
    crn = _load_networks(Path(crn_path))[0]
    if not spec_path:
        return crn, None
    spec = KineticsSpec.model_validate_json(Path(spec_path).read_text(encoding="utf-8"))
    return crn, VectorField(crn, spec)


@cli.command("simulate")
@click.option("--crn", "crn_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--spec", "spec_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--xivset", type=float, default=None, help="Simulate the Hopf test family at this k.")
@click.option("--x0", default=None, help="Initial point, comma separated.")
@click.option("--kinetics", type=KINETICS, default=KineticsClass.MASS_ACTION.value)
@click.option("--samples", type=int, default=100)
@click.option("--rtol", type=float, default=None)
@click.option("--trajectory", is_flag=True, help="Write the trajectory as CSV.")
@click.pass_context
@_handle_errors
def simulate_command(ctx, crn_path, spec_path, xivset, x0, kinetics, samples, rtol, trajectory):
    """Integrate one parameter set, or search random draws for oscillation."""
    storage: StorageService = ctx.obj["storage"]
    cfg = IntegratorConfig.screening(**({"rtol": rtol} if rtol else {}))
    crn, vf = _network_and_field(crn_path, spec_path, xivset)
    with Timer() as timer:
        if vf is not None:
            start = _seed_point(x0) if x0 else np.full(vf.dim, 1.2)
            traj = integrate(vf, start, cfg)
            label = classify(traj)
            outputs = {"class": label.value, "status": traj.status.value, "steps": traj.n_steps,
                       "final_state": traj.final_state.tolist()}
            if trajectory:
                outputs["trajectory"] = str(storage.write_trajectory(traj.times, traj.states, "simulate"))
        else:
            result = search_oscillation(crn, KineticsClass(kinetics), samples, ctx.obj["seed"], cfg=cfg)
            storage.save_record(result, storage.record_path("search"))
            outputs = {"first_candidate": result.first_candidate, "draws": result.draws,
                       "verdict": result.orbit.verdict.value if result.orbit else None}
    click.echo(json.dumps(outputs, indent=2))
    _record(ctx, "simulate", timer, {"crn": crn_path, "spec": spec_path, "xivset": xivset}, outputs)


@cli.command("certify")
@click.option("--crn", "crn_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--spec", "spec_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--xivset", type=float, default=None)
@click.option("--seed-point", default=None, help="Point near the orbit, comma separated.")
@click.option("--rtol", type=float, default=None)
@click.pass_context
@_handle_errors
def certify_command(ctx, crn_path, spec_path, xivset, seed_point, rtol):
    """Locate a periodic orbit and classify it by its Floquet multipliers."""
    storage: StorageService = ctx.obj["storage"]
    crn, vf = _network_and_field(crn_path, spec_path, xivset)
    if vf is None:
        raise click.UsageError("certify needs --spec with --crn")
    cfg = IntegratorConfig.certification(**({"rtol": rtol} if rtol else {}))
    with Timer() as timer:
        start = _seed_point(seed_point) if seed_point else np.full(vf.dim, 1.2)
        tail = integrate(vf, start, cfg.model_copy(update={"stop_at_equilibrium": False,
                                                           "max_time": min(cfg.max_time, 600.0)}))
        orbit = locate_orbit(vf, tail.final_state, cfg)
        record = certify(vf, orbit, cfg=cfg).model_copy(update={
            "network_key": canonical_key(crn).hex, "kinetics": vf.spec, "seed": ctx.obj["seed"]})
    path = storage.save_record(record, storage.record_path("orbit"))
    click.echo(f"{record.verdict.value}: T={record.period:.8g}, reduced |mu| = "
               f"{np.round(np.abs(record.reduced), 8).tolist()}")
    _record(ctx, "certify", timer, {"crn": crn_path, "spec": spec_path, "xivset": xivset},
            {"verdict": record.verdict.value, "orbit": str(path)})


@cli.command("hopf-screen")
@click.option("--crn", "crn_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--kinetics", type=KINETICS, default=KineticsClass.MASS_ACTION.value)
@click.option("--samples", type=int, default=1000)
@click.pass_context
@_handle_errors
def hopf_screen_command(ctx, crn_path, kinetics, samples):
    """Screen networks for Jacobians with eigenvalues near the imaginary axis."""
    networks = _load_networks(Path(crn_path))
    with Timer() as timer:
        results = {canonical_key(c).hex: hopf_screen(c, KineticsClass(kinetics), samples,
                                                     rng_stream(ctx.obj["seed"], i))
                   for i, c in enumerate(networks)}
    for key, positive in results.items():
        click.echo(f"{key} {'positive' if positive else 'negative'}")
    _record(ctx, "hopf-screen", timer, {"crn": crn_path, "samples": samples}, {"screen": results})


@cli.command("motif-freq")
@click.option("--motif", "motif_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--population", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--cells", default=None, help="Cells as 'K,L;K,L' instead of a population file.")
@click.pass_context
@_handle_errors
def motif_freq_command(ctx, motif_path, population, cells):
    """Share of networks containing any of the motifs as an induced subnetwork."""
    motifs = _load_networks(Path(motif_path))
    with Timer() as timer:
        if population:
            networks = _load_networks(Path(population))
            fraction = any_motif_frequency(motifs, networks)
            outputs = {"fraction": fraction, "population": len(networks)}
        elif cells:
            census = motif_census(motifs, [_cell_option(ctx, None, c) for c in cells.split(";")],
                                  ctx.obj["threads"])
            fraction = census_fraction(census)
            outputs = {"fraction": fraction, "cells": {f"{k},{l}": list(v) for (k, l), v in census.items()}}
        else:
            raise click.UsageError("give --population or --cells")
    click.echo(f"{fraction:.4f}")
    _record(ctx, "motif-freq", timer, {"motif": motif_path, "population": population, "cells": cells}, outputs)


@cli.command("table1")
@click.option("--max-k", type=int, default=4)
@click.option("--max-l", type=int, default=4)
@click.option("--budget", type=int, default=0, help="Draws per network for simulation bounds.")
@click.option("--inherit-max", type=int, default=6, help="Run closure for cells with k+l up to this.")
@click.pass_context
@_handle_errors
def table1_command(ctx, max_k, max_l, budget, inherit_max):
    """Census table: totals, inheritance counts and simulation lower bounds."""
    storage: StorageService = ctx.obj["storage"]
    with Timer() as timer:
        cells = table1(max_k, max_l, budget, ctx.obj["seed"], inherit_max=inherit_max,
                       threads=ctx.obj["threads"])
    path = storage.records_dir / "table1.csv"
    storage.write_table([c.as_row() for c in cells], path)
    for c in cells:
        marker = ">=" if c.partial else ""
        click.echo(f"({c.k},{c.l}) {c.total:>9} | ma {marker}{c.ma_sppo_lower} ({c.ma_by_inheritance}) "
                   f"| pl {marker}{c.pl_sppo_lower} ({c.pl_by_inheritance})")
    _record(ctx, "table1", timer, {"max_k": max_k, "max_l": max_l, "budget": budget},
            {"table": str(path)})


@cli.command("verify-appendix-b")
@click.option("--samples", type=int, default=100)
@click.pass_context
@_handle_errors
def verify_appendix_b_command(ctx, samples):
    """(2,1) classification and Hopf-family checks; exit code 1 on any failure."""
    with Timer() as timer:
        report = verify_appendix_b(ctx.obj["seed"], samples)
    for check in report.checks:
        click.echo(f"[{'PASS' if check.passed else 'FAIL'}] {check.name} {check.detail}")
    _record(ctx, "verify-appendix-b", timer, {"samples": samples},
            {"passed": report.passed, "failures": [c.name for c in report.failures()]})
    if not report.passed:
        ctx.exit(1)


@cli.command("sensitivity")
@click.option("--population", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--ladder", default="100,1000,10000")
@click.option("--kinetics", type=KINETICS, default=KineticsClass.MASS_ACTION.value)
@click.pass_context
@_handle_errors
def sensitivity_command(ctx, population, ladder, kinetics):
    """Detection fraction of known oscillators against the number of draws."""
    storage: StorageService = ctx.obj["storage"]
    networks = _load_networks(Path(population))
    rungs = [int(v) for v in ladder.split(",")]
    with Timer() as timer:
        rows = sensitivity_experiment(networks, rungs, KineticsClass(kinetics), ctx.obj["seed"])
    table = [{"samples": r.samples, "detected": r.detected, "total": r.total, "fraction": r.fraction}
             for r in rows]
    storage.write_table(table, storage.records_dir / "sensitivity.csv")
    for r in rows:
        click.echo(f"{r.samples:>7} {r.detected}/{r.total} ({r.fraction:.1%})")
    click.echo("Counts depend on the sampling ranges and are not expected to match published values.")
    _record(ctx, "sensitivity", timer, {"population": population, "ladder": rungs}, {"rows": table})
