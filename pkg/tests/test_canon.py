# tests/test_canon.py

import pytest

from crn_osc.errors import InvalidNetworkError
from crn_osc.models.network import CanonicalKey, Crn
from crn_osc.services.canon import (
    canonical_key,
    contains_induced,
    crn_from_key,
    key_from_hex,
    pn_graph,
)
from crn_osc.services.crn_model import fully_open_extension, parse_crn
from crn_osc.services.workbench import MASS_ACTION_ATOMS


def relabel(crn: Crn, species_perm, reaction_perm) -> Crn:
    def move(stoich):
        out = [0] * len(stoich)
        for i, a in enumerate(stoich):
            out[species_perm[i]] = a
        return tuple(out)

    pairs = [(move(crn.reactions[j].source.stoich), move(crn.reactions[j].target.stoich))
             for j in reaction_perm]
    return Crn.from_pairs(crn.n_species, pairs)


def test_pn_graph_arcs():
    graph = pn_graph(parse_crn("X + Y -> 2Y"))
    assert graph.n_vertices == 3
    assert set(graph.arcs) == {(0, 2, 1), (1, 2, 1), (2, 1, 2)}


def test_key_ignores_labelling(rng):
    crn = parse_crn("X + Z -> 2Y\n2Y -> Y + Z\n0 -> X\nZ -> 2X")
    key = canonical_key(crn)
    for _ in range(10):
        perm_s = rng.permutation(crn.n_species).tolist()
        perm_r = rng.permutation(crn.n_reactions).tolist()
        assert canonical_key(relabel(crn, perm_s, perm_r)) == key


def test_key_separates_networks():
    assert canonical_key(parse_crn("X -> Y")) != canonical_key(parse_crn("X -> 2Y"))
    assert canonical_key(parse_crn("X + Y -> 2Y")) != canonical_key(parse_crn("2X -> X + Y"))


def test_fully_open_network_keyed_by_core():
    core = parse_crn("X + Y -> 2Y")
    assert canonical_key(fully_open_extension(core)) == canonical_key(core)


def test_key_decodes_to_isomorphic_network():
    crn = parse_crn("X + Z -> 2Y\n2Y -> Y + Z")
    key = canonical_key(crn)
    decoded = crn_from_key(key)
    assert decoded.n_species == 3 and decoded.n_reactions == 2
    assert canonical_key(decoded) == key
    assert key.shape == (3, 2)
    assert CanonicalKey.from_hex(key.hex) == key


def test_malformed_keys():
    with pytest.raises(InvalidNetworkError):
        key_from_hex("zz")
    with pytest.raises(InvalidNetworkError):
        crn_from_key(CanonicalKey(data=bytes([2, 1, 1])))


def test_contains_induced():
    atom = parse_crn("X + Y -> 2Y")
    assert contains_induced(parse_crn("X + Y -> 2Y\n2Y -> X"), atom)
    assert contains_induced(fully_open_extension(parse_crn("X + Y -> 2Y\n0 -> 2X")), atom)
    assert not contains_induced(parse_crn("X -> Y\nY -> X"), atom)
    assert not contains_induced(atom, parse_crn("X + Y -> 2Y\n2Y -> X"))


def test_contains_induced_three_species():
    atom = MASS_ACTION_ATOMS[0]
    bigger = atom.with_reactions(Crn.from_pairs(3, [((0, 0, 0), (0, 0, 2))]).reactions)
    assert contains_induced(bigger, atom)
    assert contains_induced(relabel(bigger, [2, 0, 1], [2, 1, 0]), atom)
    assert not contains_induced(MASS_ACTION_ATOMS[1], atom)
