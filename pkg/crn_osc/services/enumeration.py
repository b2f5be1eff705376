# crn_osc/services/enumeration.py

import itertools
import logging
import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Set, Tuple

import numpy as np

from crn_osc.config import config
from crn_osc.errors import DuplicateKeyError, ResourceGuardError
from crn_osc.models.network import CanonicalKey, Crn, EnumSpec
from crn_osc.services.canon import core_key, normal_form
from crn_osc.services.storage import KeyStore

logger = logging.getLogger(__name__)

Stoich = Tuple[int, ...]
Subset = Tuple[int, ...]


def n_complexes(k: int) -> int:
    """Complexes of order at most two on k species: C(k+2, 2)."""
    if k < 1:
        raise ValueError("k must be at least 1")
    return math.comb(k + 2, 2)


def n_nonflow_reactions(k: int) -> int:
    nc = n_complexes(k)
    return nc * (nc - 1) - 2 * k


@lru_cache(maxsize=None)
def complex_catalog(k: int) -> Tuple[Stoich, ...]:
    """All complexes of order <= 2, lexicographic in the stoichiometry vector."""
    return tuple(c for c in itertools.product(range(3), repeat=k) if sum(c) <= 2)


def _is_flow_pair(s: Stoich, t: Stoich) -> bool:
    return (sum(s) == 0 and sum(t) == 1) or (sum(t) == 0 and sum(s) == 1)


@lru_cache(maxsize=None)
def reaction_catalog(k: int) -> Tuple[Tuple[Stoich, Stoich], ...]:
    """Non-flow reactions ordered by (source index, target index)."""
    comps = complex_catalog(k)
    return tuple((s, t) for s in comps for t in comps if s != t and not _is_flow_pair(s, t))


@lru_cache(maxsize=None)
def reaction_index(k: int) -> Dict[Tuple[Stoich, Stoich], int]:
    return {rxn: j for j, rxn in enumerate(reaction_catalog(k))}


def _permute(stoich: Stoich, p: Sequence[int]) -> Stoich:
    out = [0] * len(stoich)
    for i, a in enumerate(stoich):
        out[p[i]] = a
    return tuple(out)


@lru_cache(maxsize=None)
def permutation_tables(k: int) -> Tuple[Tuple[int, ...], ...]:
    """Action of every species permutation on reaction indices, identity first."""
    catalog = reaction_catalog(k)
    index = reaction_index(k)
    tables = []
    for p in itertools.permutations(range(k)):
        tables.append(tuple(index[(_permute(s, p), _permute(t, p))] for s, t in catalog))
    return tuple(tables)


def _is_minimal(subset: Subset, tables: Sequence[Tuple[int, ...]]) -> bool:
    """Lexicographically least sorted image in its species-permutation orbit."""
    as_list = list(subset)
    for table in tables:
        if sorted(table[i] for i in subset) < as_list:
            return False
    return True


def orbit_sizes(subset: Subset, k: int) -> int:
    """Size of the species-permutation orbit of a labelled reaction subset."""
    return len({tuple(sorted(table[i] for i in subset)) for table in permutation_tables(k)})


def core_from_subset(k: int, subset: Iterable[int]) -> Crn:
    catalog = reaction_catalog(k)
    return Crn.from_pairs(k, [catalog[j] for j in subset])


def subset_from_core(core: Crn) -> Subset:
    index = reaction_index(core.n_species)
    return tuple(sorted(index[(r.source.stoich, r.target.stoich)] for r in core.reactions))


def _scan_first(k: int, l: int, first: int, collect: bool) -> Tuple[int, List[Subset]]:
    """Orderly representatives whose smallest reaction index is `first`."""
    tables = permutation_tables(k)[1:]
    n_r = n_nonflow_reactions(k)
    count, reps = 0, []
    for rest in itertools.combinations(range(first + 1, n_r), l - 1):
        subset = (first,) + rest
        if _is_minimal(subset, tables):
            count += 1
            if collect:
                reps.append(subset)
    return count, reps


def check_resource_guard(spec: EnumSpec, ceiling: Optional[int] = None, override: bool = False) -> int:
    """
    Raises:
        ResourceGuardError: labelled count exceeds the ceiling without override
    """
    if spec.k > config.MAX_ENUM_SPECIES:
        raise ResourceGuardError(f"k={spec.k} exceeds MAX_ENUM_SPECIES={config.MAX_ENUM_SPECIES}")
    n_r = n_nonflow_reactions(spec.k)
    if spec.l > n_r:
        raise ResourceGuardError(f"l={spec.l} exceeds the {n_r} available non-flow reactions")
    labelled = math.comb(n_r, spec.l)
    ceiling = config.ENUM_CEILING if ceiling is None else ceiling
    if labelled > ceiling and not override:
        raise ResourceGuardError(
            f"({spec.k},{spec.l}) has {labelled} labelled subsets, above ceiling {ceiling}"
        )
    return labelled


def _representatives(spec: EnumSpec, collect: bool, threads: int) -> Iterator[Tuple[int, List[Subset]]]:
    k, l = spec.k, spec.l
    if l == 0:
        yield 1, [()]
        return
    firsts = range(n_nonflow_reactions(k) - l + 1)
    if threads <= 1:
        for first in firsts:
            yield _scan_first(k, l, first, collect)
        return
    with ProcessPoolExecutor(max_workers=threads) as pool:
        jobs = [pool.submit(_scan_first, k, l, first, collect) for first in firsts]
        for job in jobs:
            yield job.result()


def count_crns(spec: EnumSpec, threads: Optional[int] = None, ceiling: Optional[int] = None,
               override: bool = False) -> int:
    """Number of isomorphism classes in a (k,l) cell."""
    check_resource_guard(spec, ceiling, override)
    threads = threads or config.THREADS
    total = sum(count for count, _ in _representatives(spec, False, threads))
    logger.info("(%d,%d): %d classes", spec.k, spec.l, total)
    return total


def enumerate_crns(spec: EnumSpec, threads: Optional[int] = None, ceiling: Optional[int] = None,
                   override: bool = False, store: Optional[KeyStore] = None
                   ) -> Iterator[Tuple[Crn, CanonicalKey]]:
    """
    Stream one non-flow core per isomorphism class with its canonical key.

    Raises:
        ResourceGuardError: cell too large for the configured ceiling
        DuplicateKeyError: two representatives share a key
    """
    check_resource_guard(spec, ceiling, override)
    threads = threads or config.THREADS
    store = store if store is not None else KeyStore()
    emitted = 0
    for _, reps in _representatives(spec, True, threads):
        for subset in reps:
            core = core_from_subset(spec.k, subset)
            key = core_key(core)
            if not store.insert(key):
                raise DuplicateKeyError(f"subset {subset} of ({spec.k},{spec.l}) repeats key {key.hex}")
            emitted += 1
            yield core, key
    logger.info("(%d,%d): emitted %d classes", spec.k, spec.l, emitted)


# -- orbit counting -----------------------------------------------------------

def _cycles(table: Sequence[int]) -> List[Tuple[int, ...]]:
    seen, cycles = set(), []
    for start in range(len(table)):
        if start in seen:
            continue
        cycle, j = [], start
        while j not in seen:
            seen.add(j)
            cycle.append(j)
            j = table[j]
        cycles.append(tuple(cycle))
    return cycles


def _unions_of_size(lengths: Iterable[int], l: int) -> int:
    """Coefficient of t^l in prod(1 + t^len)."""
    coeffs = [1] + [0] * l
    for c in lengths:
        for d in range(l, c - 1, -1):
            coeffs[d] += coeffs[d - c]
    return coeffs[l]


def burnside_count(k: int, l: int) -> int:
    """Orbits of l-subsets of non-flow reactions under species permutations."""
    tables = permutation_tables(k)
    fixed = sum(_unions_of_size((len(c) for c in _cycles(t)), l) for t in tables)
    return fixed // len(tables)


def _count_independent(weights: np.ndarray, adj: np.ndarray, l: int) -> int:
    """Sets of pairwise non-adjacent items whose weights sum to exactly l."""

    def rec(start: int, remaining: int, allowed: np.ndarray) -> int:
        if remaining == 0:
            return 1
        idx = np.nonzero(allowed[start:])[0] + start
        if remaining == 1:
            return int(np.count_nonzero(weights[idx] == 1))
        if remaining == 2:
            ones = idx[weights[idx] == 1]
            a = len(ones)
            edges = int(np.triu(adj[np.ix_(ones, ones)], 1).sum()) if a > 1 else 0
            return int(np.count_nonzero(weights[idx] == 2)) + a * (a - 1) // 2 - edges
        total = 0
        for i in idx:
            if weights[i] <= remaining:
                total += rec(int(i) + 1, remaining - int(weights[i]), allowed & ~adj[i])
        return total

    return rec(0, l, np.ones(len(weights), dtype=bool))


def burnside_count_containing(k: int, l: int, reactions: Iterable[int] = (),
                              pairs: Iterable[Iterable[int]] = ()) -> int:
    """
    Orbits of l-subsets containing at least one of the given reactions or
    both members of at least one given pair.

    Both collections must be invariant under species permutations. For each
    group element, fixed subsets are unions of cycles; those avoiding every
    occurrence are counted over the cycles free of occurrences.
    """
    singles: Set[int] = set(reactions)
    pair_set: Set[FrozenSet[int]] = {frozenset(p) for p in pairs}
    tables = permutation_tables(k)
    for table in tables:
        if {table[j] for j in singles} != singles or \
                {frozenset(table[j] for j in p) for p in pair_set} != pair_set:
            raise ValueError("occurrence sets are not invariant under species permutations")

    nbrs: Dict[int, Set[int]] = defaultdict(set)
    for p in pair_set:
        a, b = tuple(p)
        nbrs[a].add(b)
        nbrs[b].add(a)

    total = 0
    for table in tables:
        cycles = _cycles(table)
        fixed = _unions_of_size((len(c) for c in cycles), l)
        clean = [c for c in cycles
                 if not singles.intersection(c)
                 and not any(b in nbrs[a] for a, b in itertools.combinations(c, 2))]
        if not pair_set:
            total += fixed - _unions_of_size((len(c) for c in clean), l)
            continue
        owner = {j: idx for idx, c in enumerate(clean) for j in c}
        adj = np.zeros((len(clean), len(clean)), dtype=bool)
        for idx, c in enumerate(clean):
            for j in c:
                for other in nbrs[j]:
                    if other in owner:
                        adj[idx, owner[other]] = True
        weights = np.array([len(c) for c in clean], dtype=np.int64)
        total += fixed - _count_independent(weights, adj, l)
    return total // len(tables)


def motif_occurrences(motif: Crn, k: int) -> Optional[Tuple[Set[int], Set[FrozenSet[int]]]]:
    """
    Reaction indices (one-reaction motif) or index pairs (two-reaction motif)
    of the k-species catalog whose restriction to some injective placement of
    the motif's species reproduces the motif. None for larger motifs.
    """
    core = normal_form(motif)
    mm = core.n_reactions
    if mm not in (1, 2):
        return None
    singles: Set[int] = set()
    pair_set: Set[FrozenSet[int]] = set()
    if core.n_species > k:
        return singles, pair_set
    catalog = reaction_catalog(k)
    wanted = [(r.source.stoich, r.target.stoich) for r in core.reactions]
    for alpha in itertools.permutations(range(k), core.n_species):
        hits: List[List[int]] = [[] for _ in wanted]
        for j, (s, t) in enumerate(catalog):
            restricted = (tuple(s[a] for a in alpha), tuple(t[a] for a in alpha))
            for w, target in enumerate(wanted):
                if restricted == target:
                    hits[w].append(j)
        if mm == 1:
            singles.update(hits[0])
        else:
            pair_set.update(frozenset((a, b)) for a in hits[0] for b in hits[1] if a != b)
    return singles, pair_set


# -- two-species census -------------------------------------------------------

def _popcount16() -> np.ndarray:
    bits = np.arange(1 << 16, dtype=np.uint32)
    counts = np.zeros(1 << 16, dtype=np.int64)
    for b in range(16):
        counts += ((bits >> np.uint32(b)) & np.uint32(1)).astype(np.int64)
    return counts


def two_species_census(chunk_bits: int = 22) -> Dict[int, Tuple[int, int]]:
    """
    Per-l class counts on two species: (exhaustive, Burnside).

    The exhaustive side scans every bitmask over the 26 non-flow reactions
    and keeps a mask iff it is not larger than its species-swapped image.
    """
    n_r = n_nonflow_reactions(2)
    swap = permutation_tables(2)[1]
    pop = _popcount16()
    counts = np.zeros(n_r + 1, dtype=np.int64)
    chunk = 1 << chunk_bits
    for start in range(0, 1 << n_r, chunk):
        masks = np.arange(start, start + chunk, dtype=np.uint32)
        swapped = np.zeros_like(masks)
        for i in range(n_r):
            swapped |= ((masks >> np.uint32(i)) & np.uint32(1)) << np.uint32(swap[i])
        keep = masks <= swapped
        weight = pop[masks & np.uint32(0xFFFF)] + pop[masks >> np.uint32(16)]
        counts += np.bincount(weight[keep], minlength=n_r + 1)
    census = {l: (int(counts[l]), burnside_count(2, l)) for l in range(1, n_r + 1)}
    logger.info("Two-species census: %d classes", sum(e for e, _ in census.values()))
    return census


def count_all_2species(exhaustive: bool = True) -> int:
    """
    Total (2,l) classes for l = 1..26.

    Raises:
        RuntimeError: Burnside and exhaustive counts disagree
    """
    if not exhaustive:
        return sum(burnside_count(2, l) for l in range(1, n_nonflow_reactions(2) + 1))
    census = two_species_census()
    for l, (scanned, oracle) in census.items():
        if scanned != oracle:
            raise RuntimeError(f"l={l}: exhaustive count {scanned} != Burnside count {oracle}")
    return sum(scanned for scanned, _ in census.values())
