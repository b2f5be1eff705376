# crn_osc/services/inherit.py

import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from crn_osc.config import config
from crn_osc.errors import (
    EpsilonSearchError,
    IntegrationError,
    KineticsDomainError,
    NotPeriodicError,
    TransformationError,
)
from crn_osc.models.inheritance import (
    AddAllFlows,
    AddDependentReaction,
    AddSpeciesWithFlow,
    AddTrivialSpecies,
    AtomSet,
    ClosureReport,
    EpsilonSearchResult,
    Transformation,
)
from crn_osc.models.kinetics import KineticsClass, KineticsSpec
from crn_osc.models.network import CanonicalKey, Crn, EnumSpec, Reaction
from crn_osc.models.orbit import IntegratorConfig, OrbitRecord
from crn_osc.services.canon import contains_induced, core_key, crn_from_key, key_from_hex, normal_form
from crn_osc.services.crn_model import flow_reactions, in_span, stoich_matrices
from crn_osc.services.dynamics import hausdorff_distance, locate_orbit, sample_orbit
from crn_osc.services.enumeration import (
    burnside_count,
    burnside_count_containing,
    enumerate_crns,
    motif_occurrences,
    reaction_catalog,
)
from crn_osc.services.floquet import certify
from crn_osc.services.kinetics import append_reactions, species_extension, validate_spec
from crn_osc.services.storage import KeyStore

logger = logging.getLogger(__name__)

KeyLike = Union[str, CanonicalKey, Crn]


# -- transformations ----------------------------------------------------------

def _check_epsilon(epsilon: float) -> None:
    if not epsilon > 0:
        raise TransformationError(f"epsilon must be positive, got {epsilon}")


def _checked(crn_builder: Callable[[], Crn]) -> Crn:
    try:
        return crn_builder()
    except ValueError as e:
        raise TransformationError(f"extended network is invalid: {e}") from e


def _add_dependent_reaction(t: AddDependentReaction, crn: Crn, spec: KineticsSpec):
    _check_epsilon(t.epsilon)
    n = crn.n_species
    if len(t.source) != n or len(t.target) != n:
        raise TransformationError(f"reaction must have {n} species")
    rxn = _checked(lambda: Reaction.of(t.source, t.target))
    if rxn in crn.reactions:
        raise TransformationError("reaction already present")
    if not in_span(stoich_matrices(crn), rxn.vector):
        raise TransformationError(f"reaction vector {rxn.vector} is not in the stoichiometric subspace")

    exponents = t.exponents if t.exponents is not None else tuple(float(a) for a in t.source)
    if spec.kinetics_class == KineticsClass.MASS_ACTION and tuple(exponents) != tuple(float(a) for a in t.source):
        raise TransformationError("mass action fixes the exponents of the new reaction")
    new_crn = _checked(lambda: crn.with_reactions([rxn]))
    return new_crn, append_reactions(spec, [t.epsilon], [exponents])


def _add_all_flows(t: AddAllFlows, crn: Crn, spec: KineticsSpec):
    _check_epsilon(t.epsilon)
    n = crn.n_species
    anchor = np.asarray(t.anchor, dtype=float)
    if anchor.shape != (n,) or np.any(anchor <= 0):
        raise TransformationError("anchor must be a positive point of the species space")

    K = list(spec.rate_constants)
    M = [list(row) for row in spec.exponents]
    position = {rxn: j for j, rxn in enumerate(crn.reactions)}
    new_rxns, new_K, new_M = [], [], []
    for rxn in flow_reactions(n):
        outflow = rxn.target.is_zero
        i = (rxn.source if outflow else rxn.target).stoich.index(1)
        rate = t.epsilon if outflow else t.epsilon * anchor[i]
        row = [0.0] * n
        if outflow:
            row[i] = 1.0
        if rxn in position:
            j = position[rxn]
            if [float(a) for a in M[j]] != row:
                raise TransformationError(f"flow reaction on species {i} has non-mass-action exponents")
            K[j] += rate
        else:
            new_rxns.append(rxn)
            new_K.append(rate)
            new_M.append(row)

    merged = spec.model_copy(update={"rate_constants": tuple(K)})
    new_crn = _checked(lambda: crn.with_reactions(new_rxns))
    return new_crn, append_reactions(merged, new_K, new_M)


def _extend_species(crn: Crn, left: Sequence[int], right: Sequence[int]) -> List[Reaction]:
    if len(left) != crn.n_reactions or len(right) != crn.n_reactions:
        raise TransformationError(f"need one stoichiometry per reaction ({crn.n_reactions})")
    if any(a < 0 for a in left) or any(b < 0 for b in right):
        raise TransformationError("stoichiometries must be nonnegative")
    return [_checked(lambda: Reaction(source=r.source.extended([a]), target=r.target.extended([b])))
            for r, a, b in zip(crn.reactions, left, right)]


def _add_trivial_species(t: AddTrivialSpecies, crn: Crn, spec: KineticsSpec):
    reactions = _extend_species(crn, t.stoichiometry, t.stoichiometry)
    new_crn = _checked(lambda: Crn(n_species=crn.n_species + 1, reactions=tuple(reactions)))
    new_spec = species_extension(spec, [[float(a)] for a in t.stoichiometry])
    return new_crn, new_spec


def _add_species_with_flow(t: AddSpeciesWithFlow, crn: Crn, spec: KineticsSpec):
    _check_epsilon(t.epsilon)
    n = crn.n_species + 1
    reactions = _extend_species(crn, t.left, t.right)
    relax = [rxn for rxn in flow_reactions(n) if rxn.source.stoich[-1] or rxn.target.stoich[-1]]
    new_crn = _checked(lambda: Crn(n_species=n, reactions=tuple(reactions + relax)))
    extended = species_extension(spec, [[float(a)] for a in t.left])
    unit = [0.0] * (n - 1) + [1.0]
    new_spec = append_reactions(extended, [1.0 / t.epsilon, 1.0 / t.epsilon], [unit, [0.0] * n])
    return new_crn, new_spec


_APPLIERS = {
    "dependent_reaction": _add_dependent_reaction,
    "all_flows": _add_all_flows,
    "trivial_species": _add_trivial_species,
    "species_with_flow": _add_species_with_flow,
}


def apply(t: Transformation, crn: Crn, spec: KineticsSpec) -> Tuple[Crn, KineticsSpec]:
    """
    Extend a network and its kinetics by one inheritance transformation.

    Args:
        t: the transformation and its payload
        crn: network being extended
        spec: kinetics of crn

    Returns:
        Tuple[Crn, KineticsSpec]: extended network and kinetics; new reactions
        are appended after the existing ones, a new species is the last one

    Raises:
        TransformationError: nonpositive epsilon, span violation, duplicate
            reaction or a flow reaction that cannot be merged
    """
    new_crn, new_spec = _APPLIERS[t.kind](t, crn, spec)
    try:
        validate_spec(new_crn, new_spec)
    except KineticsDomainError as e:
        raise TransformationError(f"extended kinetics are invalid: {e}") from e
    logger.debug("Applied %s: %d species, %d reactions", t.kind, new_crn.n_species, new_crn.n_reactions)
    return new_crn, new_spec


# -- epsilon search -----------------------------------------------------------

def epsilon_search(family: Callable[[float], object], orbit: OrbitRecord,
                   eps_grid: Optional[Sequence[float]] = None,
                   lift: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                   cfg: Optional[IntegratorConfig] = None,
                   base_field=None) -> EpsilonSearchResult:
    """
    Follow an orbit into an epsilon-family of extended systems.

    The grid is walked from the largest epsilon down, each Newton solve seeded
    with the previous success (the lifted original orbit at first).

    Args:
        family: epsilon -> vector field of the extended system
        orbit: certified orbit of the unextended system
        eps_grid: epsilons to try, config default if omitted
        lift: embeds points of the original system into the extended one
        base_field: original field, used to sample the reference orbit for distances

    Raises:
        EpsilonSearchError: no epsilon in the grid gave a certified orbit
    """
    grid = sorted(eps_grid or config.EPS_GRID, reverse=True)
    lift = lift or (lambda p: np.asarray(p, dtype=float))
    cfg = cfg or IntegratorConfig.certification()

    reference = None
    if base_field is not None:
        _, samples = sample_orbit(base_field, orbit.point_array, orbit.period, 200, cfg)
        reference = np.array([lift(p) for p in samples])

    seed, period = lift(orbit.point_array), orbit.period
    best: Optional[Tuple[float, OrbitRecord]] = None
    distances: Dict[float, float] = {}
    failures: Dict[float, str] = {}
    for eps in grid:
        vf = family(eps)
        try:
            located = locate_orbit(vf, seed, cfg, period_guess=period)
            record = certify(vf, located, cfg=cfg)
        except (NotPeriodicError, IntegrationError, KineticsDomainError) as e:
            failures[eps] = str(e)
            logger.info("eps=%g: %s", eps, e)
            continue
        if not record.is_certified:
            failures[eps] = record.verdict.value
            logger.info("eps=%g: verdict %s", eps, record.verdict.value)
            continue
        if reference is not None:
            _, samples = sample_orbit(vf, record.point_array, record.period, 200, cfg)
            distances[eps] = hausdorff_distance(reference, samples)
        seed, period = record.point_array, record.period
        best = (eps, record)
        logger.info("eps=%g: %s, T=%.6g", eps, record.verdict.value, record.period)

    if best is None:
        raise EpsilonSearchError(f"no epsilon in {grid} produced a certified orbit")
    return EpsilonSearchResult(epsilon=best[0], orbit=best[1], distances=distances, failures=failures)


# -- closure ------------------------------------------------------------------

def _as_crn(item: KeyLike) -> Crn:
    if isinstance(item, Crn):
        return normal_form(item)
    if isinstance(item, CanonicalKey):
        return crn_from_key(item)
    return crn_from_key(key_from_hex(item))


def _add_reaction_inheritors(core: Crn) -> List[CanonicalKey]:
    present = {(r.source.stoich, r.target.stoich) for r in core.reactions}
    return [core_key(core.with_reactions([Reaction.of(s, t)]))
            for s, t in reaction_catalog(core.n_species) if (s, t) not in present]


def _add_species_inheritors(core: Crn) -> List[CanonicalKey]:
    """Insert a new last species into every reaction, keeping both sides of order <= 2."""
    options = [[(a, b) for a in range(3 - r.source.order) for b in range(3 - r.target.order)]
               for r in core.reactions]
    keys = []
    for choice in itertools.product(*options):
        reactions = [Reaction(source=r.source.extended([a]), target=r.target.extended([b]))
                     for r, (a, b) in zip(core.reactions, choice)]
        keys.append(core_key(Crn(n_species=core.n_species + 1, reactions=tuple(reactions))))
    return keys


def _inheritors(job: Tuple[str, bytes]) -> List[bytes]:
    kind, data = job
    core = crn_from_key(CanonicalKey(data=data))
    keys = _add_reaction_inheritors(core) if kind == "reaction" else _add_species_inheritors(core)
    return [k.data for k in keys]


def closure_step(seeds_k_lminus1: Iterable[KeyLike], seeds_kminus1_l: Iterable[KeyLike],
                 target: Tuple[int, int], threads: Optional[int] = None) -> ClosureReport:
    """
    (k,l) cores inheriting oscillation from (k,l-1) and (k-1,l) seeds.

    Every absent catalog reaction is added to each (k,l-1) seed; a new species
    is inserted into each (k-1,l) seed in every bimolecular way. Results are
    merged up to isomorphism.
    """
    k, l = target
    jobs: List[Tuple[str, bytes]] = []
    for kind, seeds, shape in (("reaction", seeds_k_lminus1, (k, l - 1)),
                               ("species", seeds_kminus1_l, (k - 1, l))):
        cores = sorted((core_key(_as_crn(s)) for s in seeds), key=lambda key: key.data)
        for key in cores:
            if key.shape != shape:
                raise ValueError(f"seed {key.hex} has shape {key.shape}, expected {shape}")
            jobs.append((kind, key.data))

    threads = threads or config.THREADS
    logger.info("Closure into (%d,%d) from %d seeds", k, l, len(jobs))
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_inheritors, jobs))
    else:
        results = [_inheritors(job) for job in jobs]

    store = KeyStore()
    provenance: Dict[str, str] = {}
    for (_, seed_data), produced in zip(jobs, results):
        seed_hex = CanonicalKey(data=seed_data).hex
        for data in produced:
            key = CanonicalKey(data=data)
            if store.insert(key):
                provenance[key.hex] = seed_hex
    inheritors = tuple(key.hex for key in store.sorted_keys())
    logger.info("Closure into (%d,%d): %d inheritors", k, l, len(inheritors))
    return ClosureReport(target=target, inheritor_keys=inheritors, provenance=provenance)


def closure_chain(seed_keys: Iterable[KeyLike], seed_cell: Tuple[int, int],
                  target_cells: Sequence[Tuple[int, int]], threads: Optional[int] = None
                  ) -> Dict[Tuple[int, int], ClosureReport]:
    """Closure steps in order, each fed by the cells already known."""
    known: Dict[Tuple[int, int], Tuple[str, ...]] = {
        seed_cell: tuple(sorted(core_key(_as_crn(s)).hex for s in seed_keys))
    }
    reports = {}
    for k, l in target_cells:
        report = closure_step(known.get((k, l - 1), ()), known.get((k - 1, l), ()), (k, l), threads)
        reports[(k, l)] = report
        known[(k, l)] = report.inheritor_keys
    return reports


# -- atoms and motifs ---------------------------------------------------------

def minimal_atoms(oscillatory_keys: Iterable[KeyLike],
                  kinetics_class: KineticsClass = KineticsClass.MASS_ACTION) -> AtomSet:
    """Members with no other member as an induced subnetwork."""
    catalog = {}
    for item in oscillatory_keys:
        core = _as_crn(item)
        catalog[core_key(core)] = core
    ordered = sorted(catalog.items(), key=lambda kv: (kv[0].shape, kv[0].data))
    atoms = []
    for key, core in ordered:
        if not any(other_key != key and contains_induced(core, other)
                   for other_key, other in ordered):
            atoms.append(key.hex)
    logger.info("%d atoms among %d oscillatory networks", len(atoms), len(ordered))
    return AtomSet(kinetics_class=kinetics_class, keys=tuple(atoms))


def motif_frequency(motif: Crn, population: Iterable[KeyLike]) -> float:
    """Share of the population containing the motif as an induced subnetwork."""
    return any_motif_frequency([motif], population)


def any_motif_frequency(motifs: Sequence[Crn], population: Iterable[KeyLike]) -> float:
    hits = total = 0
    for item in population:
        total += 1
        core = _as_crn(item)
        if any(contains_induced(core, m) for m in motifs):
            hits += 1
    if total == 0:
        return 0.0
    return hits / total


def motif_census(motifs: Sequence[Crn], cells: Iterable[Tuple[int, int]],
                 threads: Optional[int] = None) -> Dict[Tuple[int, int], Tuple[int, int]]:
    """
    Per-cell (containing, total) counts for networks containing any motif.

    One- and two-reaction motifs are counted exactly by orbit counting over
    their occurrence sets; larger motifs fall back to streaming enumeration.
    """
    census = {}
    for k, l in cells:
        occurrences = [motif_occurrences(m, k) for m in motifs]
        if all(o is not None for o in occurrences):
            singles = set().union(*(o[0] for o in occurrences))
            pairs = set().union(*(o[1] for o in occurrences))
            hits = burnside_count_containing(k, l, singles, pairs)
            total = burnside_count(k, l)
        else:
            hits = total = 0
            for core, _ in enumerate_crns(EnumSpec(k=k, l=l), threads=threads):
                total += 1
                if any(contains_induced(core, m) for m in motifs):
                    hits += 1
        census[(k, l)] = (hits, total)
        logger.info("Motif census (%d,%d): %d of %d", k, l, hits, total)
    return census


def census_fraction(census: Dict[Tuple[int, int], Tuple[int, int]]) -> float:
    hits = sum(h for h, _ in census.values())
    total = sum(t for _, t in census.values())
    return hits / total if total else 0.0
