# crn_osc/services/workbench.py

import logging
import math
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import root

from crn_osc.config import config
from crn_osc.errors import (
    CrnOscError,
    IntegrationError,
    KineticsDomainError,
    NotPeriodicError,
)
from crn_osc.models.kinetics import KineticsClass, KineticsSpec, SamplingRanges
from crn_osc.models.network import Crn, EnumSpec
from crn_osc.models.orbit import IntegratorConfig, OrbitRecord, TrajectoryClass, Verdict
from crn_osc.models.records import AppendixBReport, SearchResult, SensitivityRow, TableCell
from crn_osc.services.canon import canonical_key, core_key, crn_from_key, key_from_hex
from crn_osc.services.crn_model import flow_reactions, fully_open_extension
from crn_osc.services.dynamics import classify, finite_difference_jacobian, integrate, locate_orbit
from crn_osc.services.enumeration import burnside_count, count_crns, enumerate_crns, n_nonflow_reactions
from crn_osc.services.floquet import certify, eig
from crn_osc.services.hopf import hopf_frequency, hopf_screen, lyapunov_coefficient, transversality
from crn_osc.services.inherit import closure_chain
from crn_osc.services.kinetics import VectorField, mass_action_spec, sample_initial, sample_params
from crn_osc.utils.helpers import rng_stream

logger = logging.getLogger(__name__)

X, Y, ZERO = (1, 0), (0, 1), (0, 0)

# Non-flow reaction of each fully open (2,1) network; the rest are the four flows.
TWO_SPECIES_REACTIONS: Dict[str, Tuple[Tuple[int, int], Tuple[int, int]]] = {
    "i": (ZERO, (2, 0)),
    "ii": (ZERO, (1, 1)),
    "iii": (X, Y),
    "iv": (X, (0, 2)),
    "v": (X, (1, 1)),
    "vi": ((2, 0), ZERO),
    "vii": ((2, 0), X),
    "viii": ((2, 0), Y),
    "ix": ((2, 0), (0, 2)),
    "x": ((2, 0), (1, 1)),
    "xi": ((1, 1), X),
    "xii": ((1, 1), ZERO),
    "xiii": (X, (2, 0)),
    "xiv": ((1, 1), (0, 2)),
}

POWER_LAW_ATOMS: Tuple[Crn, ...] = (Crn.from_pairs(2, [((1, 1), (0, 2))]),)

_XZ, _2Y, _YZ = (1, 0, 1), (0, 2, 0), (0, 1, 1)
MASS_ACTION_ATOMS: Tuple[Crn, ...] = (
    Crn.from_pairs(3, [(_XZ, _2Y), (_2Y, _YZ)]),
    Crn.from_pairs(3, [(_XZ, _2Y), (_YZ, (0, 0, 2))]),
    Crn.from_pairs(3, [(_XZ, (0, 1, 0)), (_YZ, (0, 0, 2))]),
    Crn.from_pairs(3, [(_XZ, _2Y), (_2Y, (0, 0, 2))]),
    Crn.from_pairs(3, [(_XZ, (0, 0, 0)), (_YZ, (0, 0, 2))]),
)


# The stable cycle born at k = 0 survives up to about k = 0.085. Past that,
# every start settles on the second equilibrium near (2.49, 0.468).
XIVSET_CYCLE_K: Tuple[float, ...] = (0.05, 0.08)
XIVSET_NO_CYCLE_K: float = 0.1

# -- the (2,1) networks -------------------------------------------------------

def two_species_network(name: str) -> Crn:
    """Fully open (2,1) network, reactions ordered [non-flow, X->0, 0->X, Y->0, 0->Y]."""
    source, target = TWO_SPECIES_REACTIONS[name]
    core = Crn.from_pairs(2, [(source, target)])
    return core.with_reactions(flow_reactions(2))


def two_species_spec(crn: Crn, a: float, b: float, c: float, d: float, gamma: float) -> KineticsSpec:
    """Mass action with inflows a, c, outflows b, d and non-flow constant gamma."""
    return mass_action_spec(crn, (gamma, b, a, d, c))


def xivset_network() -> Crn:
    return two_species_network("xiv")


def xivset_spec(k: float) -> KineticsSpec:
    """
    Physical power law on fully open X+Y -> 2Y:
    x' = 3/2 - x/2 - x y^3,  y' = (1/2 - k) - (3/2 - k) y + x y^3.
    Equilibrium (1, 1) for every k < 1/2; Hopf point at k = 0.
    """
    if not k < 0.5:
        raise KineticsDomainError("the family needs k < 1/2")
    return KineticsSpec(
        kinetics_class=KineticsClass.PHYSICAL_POWER_LAW,
        rate_constants=(1.0, 0.5, 1.5, 1.5 - k, 0.5 - k),
        exponents=((1.0, 3.0), (1.0, 0.0), (0.0, 0.0), (0.0, 1.0), (0.0, 0.0)),
    )


def xivset_field(k: float) -> VectorField:
    return VectorField(xivset_network(), xivset_spec(k))


def xivset_jacobian(k: float) -> np.ndarray:
    return np.array([[-1.5, -3.0], [1.0, 1.5 + k]])


def xivset_eigenvalues(k: float) -> np.ndarray:
    """(k +- sqrt(k^2 + 6k - 3)) / 2"""
    root_disc = np.sqrt(complex(k * k + 6 * k - 3))
    return np.array([(k - root_disc) / 2, (k + root_disc) / 2])


# -- oscillation search -------------------------------------------------------

def search_oscillation(crn: Crn, kinetics_class: KineticsClass, samples: int, seed: int,
                       stream: int = 0, ranges: Optional[SamplingRanges] = None,
                       cfg: Optional[IntegratorConfig] = None, locate: bool = True,
                       stop_at_first: bool = True) -> SearchResult:
    """
    Random-parameter simulation search on the fully open extension of crn.

    Draw i uses generator rng_stream(seed, stream, i), so a longer search
    repeats every draw of a shorter one.

    Args:
        crn: network (extended by all flows before simulating)
        kinetics_class: kinetics of the draws
        samples: number of draws
        seed, stream: run seed and network index
        locate: try to locate and certify an orbit from the first candidate
        stop_at_first: end the search at the first candidate

    Returns:
        SearchResult: per-class counts, first candidate index and orbit
    """
    cfg = cfg or IntegratorConfig.screening()
    network = fully_open_extension(crn)
    result = SearchResult(network_key=canonical_key(network).hex)
    counts: Dict[TrajectoryClass, int] = {}
    for i in range(samples):
        rng = rng_stream(seed, stream, i)
        spec = sample_params(network, kinetics_class, rng, ranges, seed=seed, stream=i)
        x0 = sample_initial(network.n_species, rng, ranges)
        try:
            vf = VectorField(network, spec)
            label = classify(integrate(vf, x0, cfg))
        except (IntegrationError, KineticsDomainError) as e:
            logger.debug("Draw %d failed: %s", i, e)
            label = TrajectoryClass.UNDETERMINED
        counts[label] = counts.get(label, 0) + 1
        result.draws = i + 1

        if label != TrajectoryClass.OSCILLATORY_CANDIDATE or result.first_candidate is not None:
            continue
        result.first_candidate = i
        logger.info("Candidate at draw %d for %s", i, result.network_key)
        if locate:
            result.orbit = _certified_orbit(vf, x0, cfg, network_key=result.network_key,
                                            kinetics=spec, seed=seed)
        if stop_at_first:
            break
    result.classes = counts
    return result


def _certified_orbit(vf, x0, screen_cfg: IntegratorConfig, **provenance) -> Optional[OrbitRecord]:
    cert_cfg = IntegratorConfig.certification(max_time=screen_cfg.max_time, max_steps=screen_cfg.max_steps)
    try:
        traj = integrate(vf, x0, cert_cfg.model_copy(update={"stop_at_equilibrium": False}))
        orbit = locate_orbit(vf, traj.final_state, cert_cfg)
        return certify(vf, orbit, cfg=cert_cfg).model_copy(update=provenance)
    except CrnOscError as e:
        logger.info("Candidate not confirmed: %s", e)
        return None


def sensitivity_experiment(networks: Sequence[Crn], sample_ladder: Sequence[int] = (100, 1000, 10000),
                           kinetics_class: KineticsClass = KineticsClass.MASS_ACTION,
                           seed: Optional[int] = None, ranges: Optional[SamplingRanges] = None,
                           cfg: Optional[IntegratorConfig] = None) -> List[SensitivityRow]:
    """
    Fraction of networks with an oscillatory candidate within each draw budget.

    Each network is searched once up to the largest budget; the index of its
    first candidate decides every rung, so fractions never decrease.
    """
    if not networks:
        return []
    seed = config.DEFAULT_SEED if seed is None else seed
    ladder = sorted(sample_ladder)
    first_hits: List[Optional[int]] = []
    for idx, crn in enumerate(networks):
        res = search_oscillation(crn, kinetics_class, ladder[-1], seed, stream=idx,
                                 ranges=ranges, cfg=cfg, locate=False)
        first_hits.append(res.first_candidate)
    rows = [SensitivityRow(samples=n, detected=sum(1 for h in first_hits if h is not None and h < n),
                           total=len(networks))
            for n in ladder]
    for row in rows:
        logger.info("Sensitivity %d draws: %d of %d", row.samples, row.detected, row.total)
    return rows


# -- census table ---------------------------------------------------------------

def _cells(max_k: int, max_l: int) -> List[Tuple[int, int]]:
    return [(k, l) for k in range(2, max_k + 1) for l in range(1, max_l + 1)]


def _inheritance_columns(max_k: int, max_l: int, inherit_max: int, threads: Optional[int]):
    """Inheritor key sets per cell for both kinetics classes."""
    grid = sorted(_cells(max_k, max_l), key=lambda c: (c[0] + c[1], c[0]))
    pl_targets = [c for c in grid if c != (2, 1) and sum(c) <= inherit_max]
    ma_targets = [c for c in grid if c[0] >= 3 and c[1] >= 2 and c != (3, 2) and sum(c) <= inherit_max]
    pl = closure_chain(POWER_LAW_ATOMS, (2, 1), pl_targets, threads)
    ma = closure_chain(MASS_ACTION_ATOMS, (3, 2), ma_targets, threads)
    pl_keys = {cell: set(r.inheritor_keys) for cell, r in pl.items()}
    ma_keys = {cell: set(r.inheritor_keys) for cell, r in ma.items()}
    pl_atoms = {(2, 1): {core_key(a).hex for a in POWER_LAW_ATOMS}}
    ma_atoms = {(3, 2): {core_key(a).hex for a in MASS_ACTION_ATOMS}}
    return pl_keys, ma_keys, pl_atoms, ma_atoms


def table1(max_k: int = 4, max_l: int = 4, budget: int = 0, seed: Optional[int] = None,
           inherit_max: int = 6, exact_limit: int = 2_000_000, threads: Optional[int] = None,
           cfg: Optional[IntegratorConfig] = None) -> List[TableCell]:
    """
    Census table of (k,l) cells.

    Args:
        max_k, max_l: grid extent (k from 2, l from 1)
        budget: draws per non-inherited network in cells with k + l <= 6; 0 skips simulation
        seed: run seed for the draws
        inherit_max: closure is run for cells with k + l <= inherit_max
        exact_limit: cells with more labelled subsets are totalled by orbit counting
        threads: worker processes for enumeration and closure

    Returns:
        List[TableCell]: one cell per (k,l), partial when a column was not computed
    """
    seed = config.DEFAULT_SEED if seed is None else seed
    pl_keys, ma_keys, pl_atoms, ma_atoms = _inheritance_columns(max_k, max_l, inherit_max, threads)

    cells = []
    for k, l in _cells(max_k, max_l):
        provenance = {}
        if math.comb(n_nonflow_reactions(k), l) <= exact_limit:
            total = count_crns(EnumSpec(k=k, l=l), threads=threads)
            provenance["total"] = "enumeration"
        else:
            total = burnside_count(k, l)
            provenance["total"] = "orbit_count"

        inherited = {"pl": pl_keys.get((k, l), set()), "ma": ma_keys.get((k, l), set())}
        known = {"pl": inherited["pl"] | pl_atoms.get((k, l), set()),
                 "ma": inherited["ma"] | ma_atoms.get((k, l), set())}
        partial = k + l > inherit_max
        provenance["inheritance"] = "closure" if not partial else "not_computed"

        if budget and k + l <= 6:
            for tag, kinetics_class in (("ma", KineticsClass.MASS_ACTION), ("pl", KineticsClass.PHYSICAL_POWER_LAW)):
                known[tag] |= _simulate_cell(k, l, known[tag], kinetics_class, budget, seed, threads, cfg)
            provenance["simulation"] = f"budget={budget}"
        elif k + l <= 6:
            partial = True

        cells.append(TableCell(
            k=k, l=l, total=total,
            ma_sppo_lower=len(known["ma"]), ma_by_inheritance=len(inherited["ma"]),
            pl_sppo_lower=len(known["pl"]), pl_by_inheritance=len(inherited["pl"]),
            partial=partial, provenance=provenance,
        ))
        logger.info("Cell (%d,%d): total=%d ma>=%d pl>=%d", k, l, total, len(known["ma"]), len(known["pl"]))
    return cells


def _simulate_cell(k: int, l: int, skip: Iterable[str], kinetics_class: KineticsClass, budget: int,
                   seed: int, threads: Optional[int], cfg: Optional[IntegratorConfig]) -> set:
    """Keys of non-skipped networks in the cell with a certified SPPO."""
    skip = set(skip)
    found = set()
    for idx, (core, key) in enumerate(enumerate_crns(EnumSpec(k=k, l=l), threads=threads)):
        if key.hex in skip:
            continue
        if not hopf_screen(fully_open_extension(core), kinetics_class, 100, rng_stream(seed, idx)):
            continue
        res = search_oscillation(core, kinetics_class, budget, seed, stream=idx, cfg=cfg)
        if res.orbit is not None and res.orbit.verdict == Verdict.SPPO:
            found.add(key.hex)
    return found


# -- (2,1) classification checks ---------------------------------------------

def _draw_rates(rng: np.random.Generator, ranges: SamplingRanges) -> Dict[str, float]:
    return {name: float(rng.uniform(*ranges.rates)) for name in ("a", "b", "c", "d", "gamma")}


def _check_enumeration(report: AppendixBReport) -> None:
    expected = {core_key(Crn.from_pairs(2, [pair])).hex for pair in TWO_SPECIES_REACTIONS.values()}
    found = {key.hex for _, key in enumerate_crns(EnumSpec(k=2, l=1))}
    report.add("enumeration", found == expected and len(expected) == 14,
               f"{len(found)} classes, {len(expected & found)} listed")


def _check_convergent_cases(report: AppendixBReport, seed: int, samples: int,
                            ranges: SamplingRanges, cfg: IntegratorConfig) -> None:
    for idx, name in enumerate(list(TWO_SPECIES_REACTIONS)[:12]):
        crn = two_species_network(name)
        bad_class = bad_trace = 0
        for i in range(samples):
            rng = rng_stream(seed, 1, idx, i)
            vf = VectorField(crn, two_species_spec(crn, **_draw_rates(rng, ranges)))
            if np.trace(vf.jacobian(sample_initial(2, rng, ranges))) >= 0:
                bad_trace += 1
            if classify(integrate(vf, sample_initial(2, rng, ranges), cfg)) != TrajectoryClass.CONVERGED:
                bad_class += 1
        report.add(f"convergence_{name}", bad_class == 0 and bad_trace == 0,
                   f"{bad_class} non-convergent runs, {bad_trace} nonnegative traces")


def _check_autocatalysis(report: AppendixBReport, seed: int, samples: int,
                         ranges: SamplingRanges, cfg: IntegratorConfig) -> None:
    crn = two_species_network("xiii")
    failures = []
    for i in range(samples):
        rng = rng_stream(seed, 2, i)
        rates = _draw_rates(rng, ranges)
        while abs(rates["b"] - rates["gamma"]) < 0.5:
            rates = _draw_rates(rng, ranges)
        vf = VectorField(crn, two_species_spec(crn, **rates))
        traj = integrate(vf, sample_initial(2, rng, ranges), cfg)
        label = classify(traj)
        if rates["b"] > rates["gamma"]:
            eq = np.array([rates["a"] / (rates["b"] - rates["gamma"]), rates["c"] / rates["d"]])
            if label != TrajectoryClass.CONVERGED or not np.allclose(traj.final_state, eq, rtol=1e-3):
                failures.append(i)
        elif label != TrajectoryClass.UNBOUNDED:
            failures.append(i)
    report.add("dichotomy_xiii", not failures, f"failed draws: {failures[:10]}")


def xiv_equilibrium(a: float, b: float, c: float, d: float, gamma: float = 1.0) -> np.ndarray:
    """Closed-form positive equilibrium of mass-action fully open X+Y -> 2Y."""
    s = a + c + b * d / gamma
    theta = math.sqrt(s * s - 4 * a * b * d / gamma)
    return np.array([(s - theta) / (2 * b), (a + c - b * d / gamma + theta) / (2 * d)])


def _check_xiv_mass_action(report: AppendixBReport, seed: int, samples: int,
                           ranges: SamplingRanges, cfg: IntegratorConfig) -> None:
    crn = two_species_network("xiv")
    eq_fail, dulac_fail, box_fail = [], [], []
    for i in range(samples):
        rng = rng_stream(seed, 3, i)
        r = _draw_rates(rng, ranges)
        vf = VectorField(crn, two_species_spec(crn, **r))
        eq = xiv_equilibrium(r["a"], r["b"], r["c"], r["d"], r["gamma"])
        traj = integrate(vf, sample_initial(2, rng, ranges), cfg)
        solved = root(vf.field, traj.final_state, jac=vf.jacobian)
        if not (solved.success and np.allclose(solved.x, eq, rtol=1e-6)
                and np.allclose(traj.final_state, eq, rtol=1e-3)):
            eq_fail.append(i)

        def dulac(p):
            return vf.field(p) / p[1]

        point = sample_initial(2, rng, ranges)
        if np.trace(finite_difference_jacobian(dulac, point)) >= 0:
            dulac_fail.append(i)
        bound = (r["b"] + r["d"]) * (r["a"] + r["c"]) / (r["b"] * r["d"])
        if traj.final_state.sum() > bound * (1 + 1e-6):
            box_fail.append(i)
    report.add("equilibrium_xiv", not eq_fail, f"failed draws: {eq_fail[:10]}")
    report.add("dulac_xiv", not dulac_fail, f"failed draws: {dulac_fail[:10]}")
    report.add("triangle_xiv", not box_fail, f"failed draws: {box_fail[:10]}")


def _check_hopf(report: AppendixBReport, seed: int, cfg: IntegratorConfig) -> None:
    J0 = xivset_jacobian(0.0)
    omega = hopf_frequency(J0)
    report.add("hopf_frequency", abs(omega - math.sqrt(3) / 2) < 1e-8, f"omega={omega:.10f}")

    numeric = eig(VectorField(xivset_network(), xivset_spec(0.0)).jacobian(np.ones(2)))
    analytic = xivset_eigenvalues(0.0)
    report.add("hopf_eigenvalues", np.allclose(np.sort_complex(numeric), np.sort_complex(analytic), atol=1e-6),
               f"{numeric.tolist()}")

    slope = transversality(xivset_jacobian, 0.0)
    report.add("transversality", abs(slope - 0.5) < 1e-6, f"dRe/dk={slope:.8f}")

    coefficient = lyapunov_coefficient(xivset_field(0.0), np.ones(2), J0)
    report.add("lyapunov", abs(coefficient + 0.125) < 1e-3, f"l1={coefficient:.6f}")

    for k in XIVSET_CYCLE_K:
        orbit = xivset_orbit(k, cfg)
        ok = orbit is not None and orbit.verdict == Verdict.SPPO
        report.add(f"sppo_k={k}", ok, orbit.verdict.value if orbit is not None else "no orbit")

    k = XIVSET_NO_CYCLE_K
    traj = integrate(xivset_field(k), np.array([1.2, 1.2]), IntegratorConfig.screening())
    label = classify(traj)
    orbit = xivset_orbit(k, cfg)
    report.add(f"no_cycle_k={k}", orbit is None and label == TrajectoryClass.CONVERGED,
               f"{label.value} at {np.round(traj.final_state, 6).tolist()}")


def xivset_orbit(k: float, cfg: Optional[IntegratorConfig] = None,
                 start=(1.2, 1.2)) -> Optional[OrbitRecord]:
    """Certified limit cycle of the family at k, from a simulation tail."""
    cfg = cfg or IntegratorConfig.certification()
    vf = xivset_field(k)
    transient = cfg.model_copy(update={"stop_at_equilibrium": False, "max_time": min(cfg.max_time, 600.0)})
    traj = integrate(vf, np.asarray(start, dtype=float), transient)
    try:
        orbit = locate_orbit(vf, traj.final_state, cfg)
    except NotPeriodicError as e:
        logger.warning("No orbit at k=%g: %s", k, e)
        return None
    return certify(vf, orbit, cfg=cfg).model_copy(update={"network_key": canonical_key(vf.crn).hex,
                                                          "kinetics": vf.spec})


def verify_appendix_b(seed: Optional[int] = None, samples: int = 100,
                      ranges: Optional[SamplingRanges] = None,
                      cfg: Optional[IntegratorConfig] = None) -> AppendixBReport:
    """
    Checks of the (2,1) classification and the Hopf family.

    Sub-checks: enumeration of the 14 networks; convergence and negative
    Jacobian trace for cases i-xii; the xiii dichotomy; closed-form equilibrium,
    Dulac trace and triangle bound for xiv under mass action; Hopf frequency,
    eigenvalues, transversality, Lyapunov coefficient, SPPOs while the cycle
    exists and convergence to the second equilibrium once it is gone.
    """
    seed = config.DEFAULT_SEED if seed is None else seed
    ranges = ranges or SamplingRanges(rates=(0.1, 10.0))
    cfg = cfg or IntegratorConfig.screening()
    report = AppendixBReport()
    _check_enumeration(report)
    _check_convergent_cases(report, seed, samples, ranges, cfg)
    _check_autocatalysis(report, seed, samples, ranges, cfg)
    _check_xiv_mass_action(report, seed, samples, ranges, cfg)
    _check_hopf(report, seed, IntegratorConfig.certification())
    for failure in report.failures():
        logger.error("Check %s failed: %s", failure.name, failure.detail)
    logger.info("Two-species checks: %d of %d passed", len(report.checks) - len(report.failures()),
                len(report.checks))
    return report


def decode_population(keys: Iterable[str]) -> List[Crn]:
    return [crn_from_key(key_from_hex(k)) for k in keys]
