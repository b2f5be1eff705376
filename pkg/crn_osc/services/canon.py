# crn_osc/services/canon.py

import itertools
import logging
from collections import Counter
from typing import List, Optional, Sequence, Tuple

from crn_osc.errors import InvalidNetworkError
from crn_osc.models.network import CanonicalKey, Crn, PnGraph
from crn_osc.services.crn_model import is_fully_open, strip_flows

logger = logging.getLogger(__name__)

Matrix = List[List[int]]


def pn_graph(crn: Crn) -> PnGraph:
    """
    Petri-net graph of a network.

    Args:
        crn: network

    Returns:
        PnGraph: species vertices first, then one vertex per reaction
    """
    n = crn.n_species
    arcs = []
    for j, rxn in enumerate(crn.reactions):
        for i, a in enumerate(rxn.source.stoich):
            if a:
                arcs.append((i, n + j, a))
        for i, b in enumerate(rxn.target.stoich):
            if b:
                arcs.append((n + j, i, b))
    return PnGraph(n_species=n, n_reactions=crn.n_reactions, arcs=tuple(sorted(arcs)))


def graph_from_matrices(L: Matrix, R: Matrix, n: int, m: int) -> PnGraph:
    arcs = []
    for i in range(n):
        for j in range(m):
            if L[i][j]:
                arcs.append((i, n + j, L[i][j]))
            if R[i][j]:
                arcs.append((n + j, i, R[i][j]))
    return PnGraph(n_species=n, n_reactions=m, arcs=tuple(sorted(arcs)))


class _Refiner:
    """
    Colour refinement and individualisation on the (L, R) weight matrices.

    Species and reaction colours live in separate spaces, so the vertex class
    is part of every colour. New colours are ranks of sorted signatures, which
    keeps them independent of the input vertex order.
    """

    def __init__(self, L: Matrix, R: Matrix, n: int, m: int):
        self.n, self.m = n, m
        self.L, self.R = L, R
        self.species_nbrs = [[(j, L[i][j], R[i][j]) for j in range(m) if L[i][j] or R[i][j]]
                             for i in range(n)]
        self.reaction_nbrs = [[(i, L[i][j], R[i][j]) for i in range(n) if L[i][j] or R[i][j]]
                              for j in range(m)]

    @staticmethod
    def _rank(keys: Sequence) -> List[int]:
        order = sorted(set(keys))
        index = {k: c for c, k in enumerate(order)}
        return [index[k] for k in keys]

    def refine(self, sc: List[int], rc: List[int]) -> Tuple[List[int], List[int]]:
        while True:
            s_sig = [(sc[i], tuple(sorted((l, r, rc[j]) for j, l, r in self.species_nbrs[i])))
                     for i in range(self.n)]
            r_sig = [(rc[j], tuple(sorted((l, r, sc[i]) for i, l, r in self.reaction_nbrs[j])))
                     for j in range(self.m)]
            new_sc, new_rc = self._rank(s_sig), self._rank(r_sig)
            if len(set(new_sc)) == len(set(sc)) and len(set(new_rc)) == len(set(rc)):
                return new_sc, new_rc
            sc, rc = new_sc, new_rc

    def initial(self) -> Tuple[List[int], List[int]]:
        return self.refine([0] * self.n, [0] * self.m)

    def certificate(self, sc: List[int], rc: List[int]) -> Tuple[int, ...]:
        s_order = sorted(range(self.n), key=lambda i: sc[i])
        r_order = sorted(range(self.m), key=lambda j: rc[j])
        flat = [self.L[i][j] for i in s_order for j in r_order]
        flat += [self.R[i][j] for i in s_order for j in r_order]
        return tuple(flat)

    def search(self, sc: List[int], rc: List[int]) -> Tuple[int, ...]:
        """Minimal certificate over all individualisation paths."""
        cell = self._target_cell(sc, rc)
        if cell is None:
            return self.certificate(sc, rc)
        kind, members = cell
        best: Optional[Tuple[int, ...]] = None
        for v in members:
            if kind == "species":
                nsc = [2 * c + (1 if (c == sc[v] and u != v) else 0) for u, c in enumerate(sc)]
                nrc = [2 * c for c in rc]
            else:
                nsc = [2 * c for c in sc]
                nrc = [2 * c + (1 if (c == rc[v] and u != v) else 0) for u, c in enumerate(rc)]
            cert = self.search(*self.refine(nsc, nrc))
            if best is None or cert < best:
                best = cert
        return best

    def _target_cell(self, sc: List[int], rc: List[int]):
        for kind, colours in (("species", sc), ("reaction", rc)):
            counts = Counter(colours)
            shared = sorted(c for c, k in counts.items() if k > 1)
            if shared:
                return kind, [v for v, c in enumerate(colours) if c == shared[0]]
        return None


def _certificate_bytes(n: int, m: int, cert: Tuple[int, ...]) -> bytes:
    if n > 255 or m > 255 or any(w > 255 for w in cert):
        raise InvalidNetworkError("network too large for the key encoding")
    return bytes([n, m]) + bytes(cert)


def graph_key(graph: PnGraph) -> CanonicalKey:
    """Canonical key of an arbitrary PN graph (no flow stripping)."""
    L, R = graph.weight_matrices()
    n, m = graph.n_species, graph.n_reactions
    refiner = _Refiner(L, R, n, m)
    cert = refiner.search(*refiner.initial())
    return CanonicalKey(data=_certificate_bytes(n, m, cert))


def normal_form(crn: Crn) -> Crn:
    """Fully open networks are identified by their non-flow core."""
    return strip_flows(crn) if is_fully_open(crn) else crn


def canonical_key(crn: Crn) -> CanonicalKey:
    return graph_key(pn_graph(normal_form(crn)))


def core_key(core: Crn) -> CanonicalKey:
    """Key of a non-flow core as given, without the fully-open check."""
    return graph_key(pn_graph(core))


def crn_from_key(key: CanonicalKey) -> Crn:
    """
    Decode a key back into a network in canonical labelling.

    Raises:
        InvalidNetworkError: the keyed graph is not a valid network
    """
    data = key.data
    if len(data) < 2:
        raise InvalidNetworkError("key too short")
    n, m = data[0], data[1]
    if len(data) != 2 + 2 * n * m:
        raise InvalidNetworkError(f"key length {len(data)} does not match shape ({n},{m})")
    L = data[2:2 + n * m]
    R = data[2 + n * m:]
    pairs = []
    for j in range(m):
        src = tuple(L[i * m + j] for i in range(n))
        tgt = tuple(R[i * m + j] for i in range(n))
        pairs.append((src, tgt))
    try:
        return Crn.from_pairs(n, pairs)
    except ValueError as e:
        raise InvalidNetworkError(f"key does not describe a network: {e}") from e


def key_to_hex(key: CanonicalKey) -> str:
    return key.hex


def key_from_hex(text: str) -> CanonicalKey:
    try:
        return CanonicalKey.from_hex(text)
    except ValueError as e:
        raise InvalidNetworkError(f"invalid hex key '{text.strip()}'") from e


# -- induced subnetworks ------------------------------------------------------

def _reaction_profile(src: Tuple[int, ...], tgt: Tuple[int, ...]) -> Tuple:
    """Species-relabelling invariant of a restricted reaction vertex."""
    return tuple(sorted((a, b) for a, b in zip(src, tgt) if a or b))


def _restricted_key(sources, targets, n: int) -> CanonicalKey:
    m = len(sources)
    L = [[sources[j][i] for j in range(m)] for i in range(n)]
    R = [[targets[j][i] for j in range(m)] for i in range(n)]
    return graph_key(graph_from_matrices(L, R, n, m))


def contains_induced(big: Crn, small: Crn) -> bool:
    """
    True iff PN(small) is isomorphic to a vertex-induced subgraph of PN(big).

    Both networks are compared in normal form. Species subsets are tried
    exhaustively; reaction subsets are restricted to reactions whose weight
    profile on the chosen species matches some reaction of small.
    """
    big, small = normal_form(big), normal_form(small)
    ns, ms = small.n_species, small.n_reactions
    nb, mb = big.n_species, big.n_reactions
    if ns > nb or ms > mb:
        return False

    target = core_key(small)
    wanted = Counter(_reaction_profile(r.source.stoich, r.target.stoich) for r in small.reactions)

    for alpha in itertools.combinations(range(nb), ns):
        restricted = [(rxn.source.restricted(alpha), rxn.target.restricted(alpha))
                      for rxn in big.reactions]
        by_profile = {}
        for j, (s, t) in enumerate(restricted):
            by_profile.setdefault(_reaction_profile(s, t), []).append(j)
        if any(len(by_profile.get(p, ())) < k for p, k in wanted.items()):
            continue
        choices = [itertools.combinations(by_profile[p], k) for p, k in wanted.items()]
        for picked in itertools.product(*choices):
            beta = [j for group in picked for j in group]
            key = _restricted_key([restricted[j][0] for j in beta],
                                  [restricted[j][1] for j in beta], ns)
            if key == target:
                return True
    return False
