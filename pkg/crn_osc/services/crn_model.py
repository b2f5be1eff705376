# crn_osc/services/crn_model.py

import logging
import re
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy

from crn_osc.errors import InvalidNetworkError, TrivialSubspaceError
from crn_osc.models.network import (
    BasisFactorization,
    Complex,
    Crn,
    Reaction,
    StoichMatrices,
)

logger = logging.getLogger(__name__)

LETTER_SPECIES = ("X", "Y", "Z", "W", "V", "U")
HEADER_PATTERN = re.compile(r"^#\s*n_species\s*=\s*(\d+)\s*$")
TERM_PATTERN = re.compile(r"^(\d*)\s*([A-Za-z]\w*)$")


def stoich_matrices(crn: Crn) -> StoichMatrices:
    """
    Build Gamma_l, Gamma_r and Gamma for a network.

    Args:
        crn: network to describe

    Returns:
        StoichMatrices: integer matrices, rank computed over the rationals
    """
    n, m = crn.n_species, crn.n_reactions
    gamma_l = np.zeros((n, m), dtype=np.int64)
    gamma_r = np.zeros((n, m), dtype=np.int64)
    for j, rxn in enumerate(crn.reactions):
        gamma_l[:, j] = rxn.source.stoich
        gamma_r[:, j] = rxn.target.stoich
    gamma = gamma_r - gamma_l
    rank_r = sympy.Matrix(gamma.tolist()).rank() if m else 0
    return StoichMatrices(gamma_l=gamma_l, gamma_r=gamma_r, gamma=gamma, rank_r=int(rank_r))


def basis_factorization(sm: StoichMatrices) -> BasisFactorization:
    """
    Factor Gamma = Gamma0 Q with Gamma0 the leftmost pivot columns of Gamma.

    Raises:
        TrivialSubspaceError: rank of Gamma is zero
    """
    if sm.rank_r == 0:
        raise TrivialSubspaceError("trivial stoichiometric subspace")
    G = sympy.Matrix(sm.gamma.tolist())
    rref, pivots = G.rref()
    gamma0 = G.extract(list(range(sm.n)), list(pivots))
    # rref rows past the rank are zero; the nonzero rows express every column in the pivot basis
    q = rref.extract(list(range(len(pivots))), list(range(sm.m)))
    return BasisFactorization(gamma0=gamma0, q=q, pivots=tuple(int(p) for p in pivots))


def left_null_space(sm: StoichMatrices) -> List[Tuple[sympy.Rational, ...]]:
    """Rational basis of {u : u^T Gamma = 0}, i.e. the linear first integrals."""
    if sm.m == 0:
        return [tuple(sympy.Integer(int(i == j)) for j in range(sm.n)) for i in range(sm.n)]
    G = sympy.Matrix(sm.gamma.tolist())
    return [tuple(v) for v in G.T.nullspace()]


def in_span(sm: StoichMatrices, v: Sequence[int]) -> bool:
    if len(v) != sm.n:
        raise InvalidNetworkError(f"vector has length {len(v)}, expected {sm.n}")
    if sm.m == 0:
        return all(a == 0 for a in v)
    G = sympy.Matrix(sm.gamma.tolist())
    return G.row_join(sympy.Matrix(list(v))).rank() == sm.rank_r


def is_flow_reaction(rxn: Reaction) -> bool:
    return rxn.is_flow


def is_bimolecular(crn: Crn) -> bool:
    return all(rxn.is_at_most_bimolecular for rxn in crn.reactions)


def flow_reactions(n: int) -> List[Reaction]:
    """X_i -> 0 then 0 -> X_i for every species, in species order."""
    zero = Complex.zero(n)
    out = []
    for i in range(n):
        unit = Complex.unit(n, i)
        out.append(Reaction(source=unit, target=zero))
        out.append(Reaction(source=zero, target=unit))
    return out


def is_fully_open(crn: Crn) -> bool:
    present = set(crn.reactions)
    return all(rxn in present for rxn in flow_reactions(crn.n_species))


def fully_open_extension(crn: Crn) -> Crn:
    present = set(crn.reactions)
    missing = [rxn for rxn in flow_reactions(crn.n_species) if rxn not in present]
    if not missing:
        return crn
    return crn.with_reactions(missing)


def strip_flows(crn: Crn) -> Crn:
    """Non-flow core of a network."""
    return Crn(n_species=crn.n_species,
               reactions=tuple(rxn for rxn in crn.reactions if not rxn.is_flow))


def induced_subnetwork(crn: Crn, species: Sequence[int], reactions: Sequence[int]) -> Tuple[
        Tuple[Tuple[int, ...], ...], Tuple[Tuple[int, ...], ...]]:
    """
    Restriction of the PN graph to species alpha and reactions beta.

    Returned as (sources, targets): one restricted stoichiometry tuple per
    reaction in beta. A restricted reaction may have equal source and target,
    so this stays at the graph level rather than building a Crn.
    """
    n, m = crn.n_species, crn.n_reactions
    if any(i < 0 or i >= n for i in species) or any(j < 0 or j >= m for j in reactions):
        raise IndexError("species or reaction index out of range")
    sources = tuple(crn.reactions[j].source.restricted(species) for j in reactions)
    targets = tuple(crn.reactions[j].target.restricted(species) for j in reactions)
    return sources, targets


# -- text format -------------------------------------------------------------

def _species_names(n: int) -> List[str]:
    return [f"X{i + 1}" for i in range(n)]


def _format_complex(stoich: Sequence[int], names: Sequence[str]) -> str:
    terms = []
    for a, name in zip(stoich, names):
        if a == 1:
            terms.append(name)
        elif a > 1:
            terms.append(f"{a} {name}")
    return " + ".join(terms) if terms else "0"


def format_crn(crn: Crn, names: Optional[Sequence[str]] = None) -> str:
    """One reaction per line, preceded by a species-count header line."""
    names = list(names) if names else _species_names(crn.n_species)
    lines = [f"# n_species = {crn.n_species}"]
    for rxn in crn.reactions:
        lines.append(f"{_format_complex(rxn.source.stoich, names)} -> "
                     f"{_format_complex(rxn.target.stoich, names)}")
    return "\n".join(lines) + "\n"


def _parse_complex(text: str, index_of) -> Dict[int, int]:
    text = text.strip()
    if text == "0":
        return {}
    counts: Dict[int, int] = {}
    for raw in text.split("+"):
        term = raw.strip()
        match = TERM_PATTERN.match(term)
        if not match:
            raise InvalidNetworkError(f"cannot parse term '{term}'")
        coeff = int(match.group(1)) if match.group(1) else 1
        idx = index_of(match.group(2))
        counts[idx] = counts.get(idx, 0) + coeff
    return counts


def parse_crn(text: str, n_species: Optional[int] = None) -> Crn:
    """
    Parse the line-oriented network format.

    Species are X1..Xn (mapped by index) or single letters, mapped in the
    order X, Y, Z, W, V, U. A '# n_species = k' line fixes the species count;
    otherwise it is the largest index seen. '<->' yields two reactions.

    Raises:
        InvalidNetworkError: malformed line, unknown token or invalid network
    """
    header_n = None
    parsed: List[Tuple[Dict[int, int], Dict[int, int]]] = []
    seen_max = -1

    def index_of(token: str) -> int:
        nonlocal seen_max
        if re.fullmatch(r"X\d+", token):
            idx = int(token[1:]) - 1
            if idx < 0:
                raise InvalidNetworkError(f"species index must start at 1: '{token}'")
        elif token in LETTER_SPECIES:
            idx = LETTER_SPECIES.index(token)
        else:
            raise InvalidNetworkError(f"unknown species token '{token}'")
        seen_max = max(seen_max, idx)
        return idx

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        header = HEADER_PATTERN.match(line)
        if header:
            header_n = int(header.group(1))
            continue
        if line.startswith("#"):
            continue
        if "<->" in line:
            left, right = line.split("<->", 1)
            src, tgt = _parse_complex(left, index_of), _parse_complex(right, index_of)
            parsed.append((src, tgt))
            parsed.append((tgt, src))
        elif "->" in line:
            left, right = line.split("->", 1)
            parsed.append((_parse_complex(left, index_of), _parse_complex(right, index_of)))
        else:
            raise InvalidNetworkError(f"line {lineno}: no reaction arrow in '{line}'")

    n = n_species or header_n or (seen_max + 1)
    if n <= 0:
        raise InvalidNetworkError("network has no species")
    if seen_max >= n:
        raise InvalidNetworkError(f"species index {seen_max + 1} exceeds species count {n}")

    def dense(counts: Dict[int, int]) -> Tuple[int, ...]:
        return tuple(counts.get(i, 0) for i in range(n))

    try:
        return Crn.from_pairs(n, [(dense(s), dense(t)) for s, t in parsed])
    except ValueError as e:
        raise InvalidNetworkError(str(e)) from e


def parse_crn_stanzas(text: str) -> List[Crn]:
    """Split a multi-network file on its '# n_species' header lines."""
    stanzas: List[List[str]] = []
    for line in text.splitlines():
        if HEADER_PATTERN.match(line.strip()) or not stanzas:
            stanzas.append([])
        stanzas[-1].append(line)
    return [parse_crn("\n".join(s)) for s in stanzas
            if any("->" in l or HEADER_PATTERN.match(l.strip()) for l in s)]
