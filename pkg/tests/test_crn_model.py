# tests/test_crn_model.py

import pytest
import sympy
from numpy.testing import assert_array_equal
from pydantic import ValidationError

from crn_osc.errors import InvalidNetworkError, TrivialSubspaceError
from crn_osc.models.network import Complex, Crn, Reaction
from crn_osc.services.crn_model import (
    basis_factorization,
    format_crn,
    fully_open_extension,
    in_span,
    induced_subnetwork,
    is_bimolecular,
    is_fully_open,
    left_null_space,
    parse_crn,
    parse_crn_stanzas,
    stoich_matrices,
    strip_flows,
)


def test_parse_letter_species():
    crn = parse_crn("X + Y -> 2Y")
    assert crn.n_species == 2
    assert crn.reactions == (Reaction.of((1, 1), (0, 2)),)


def test_parse_indexed_species_and_reversible_shorthand():
    crn = parse_crn("X1 <-> X2\n0 -> 2 X3")
    assert crn.n_species == 3
    assert crn.reactions == (
        Reaction.of((1, 0, 0), (0, 1, 0)),
        Reaction.of((0, 1, 0), (1, 0, 0)),
        Reaction.of((0, 0, 0), (0, 0, 2)),
    )


def test_header_keeps_isolated_species():
    crn = parse_crn("# n_species = 3\nX -> Y\n")
    assert crn.n_species == 3
    assert parse_crn(format_crn(crn)) == crn


def test_stanzas_split_on_header():
    text = format_crn(parse_crn("X + Y -> 2Y")) + format_crn(parse_crn("X -> Y\nY -> 0"))
    crns = parse_crn_stanzas(text)
    assert [c.n_reactions for c in crns] == [1, 2]


@pytest.mark.parametrize("text", ["X -> Q", "X => Y", "X -> Y\nX -> Y", "X -> X", "X1 -> X2"])
def test_malformed_text_rejected(text):
    with pytest.raises(InvalidNetworkError):
        parse_crn(text, n_species=1 if text == "X1 -> X2" else None)


def test_model_validation():
    with pytest.raises(ValidationError):
        Complex(stoich=(1, -1))
    with pytest.raises(ValidationError):
        Reaction.of((1, 0), (1, 0))
    with pytest.raises(ValidationError):
        Crn(n_species=2, reactions=(Reaction.of((1,), (0,)),))


def test_stoich_matrices():
    sm = stoich_matrices(parse_crn("X + Y -> 2Y\nY -> 0"))
    assert_array_equal(sm.gamma_l, [[1, 0], [1, 1]])
    assert_array_equal(sm.gamma_r, [[0, 0], [2, 0]])
    assert_array_equal(sm.gamma, [[-1, 0], [1, -1]])
    assert sm.rank_r == 2


def test_basis_factorization_is_exact():
    sm = stoich_matrices(parse_crn("X -> Y\nY -> X\n2X -> 2Y"))
    bf = basis_factorization(sm)
    assert bf.rank == 1
    assert bf.pivots == (0,)
    assert bf.gamma0 * bf.q == sympy.Matrix(sm.gamma.tolist())


def test_rebased_factorization():
    sm = stoich_matrices(parse_crn("X + Y -> 2Y\nY -> 0\n0 -> X"))
    bf = basis_factorization(sm)
    rebased = bf.rebased([[2, 1], [1, 1]])
    assert rebased.gamma0 * rebased.q == sympy.Matrix(sm.gamma.tolist())
    with pytest.raises(ValueError):
        bf.rebased([[1, 1], [1, 1]])


def test_trivial_subspace():
    with pytest.raises(TrivialSubspaceError):
        basis_factorization(stoich_matrices(Crn(n_species=2)))


def test_left_null_space_gives_conservation_law():
    sm = stoich_matrices(parse_crn("X <-> Y"))
    (u,) = left_null_space(sm)
    assert sympy.Matrix([list(u)]) * sympy.Matrix(sm.gamma.tolist()) == sympy.zeros(1, 2)


def test_in_span():
    sm = stoich_matrices(parse_crn("X -> Y"))
    assert in_span(sm, (1, -1))
    assert not in_span(sm, (1, 0))
    with pytest.raises(InvalidNetworkError):
        in_span(sm, (1, 0, 0))


def test_fully_open_extension_and_strip():
    core = parse_crn("X + Y -> 2Y")
    opened = fully_open_extension(core)
    assert opened.n_reactions == 5
    assert is_fully_open(opened)
    assert not is_fully_open(core)
    assert fully_open_extension(opened) is opened
    assert strip_flows(opened) == core


def test_bimolecular():
    assert is_bimolecular(parse_crn("X + Y -> 2Y"))
    assert not is_bimolecular(parse_crn("3X -> Y"))


def test_induced_subnetwork():
    crn = parse_crn("X + Y -> 2Y\nY -> Z")
    sources, targets = induced_subnetwork(crn, [1], [0, 1])
    assert sources == ((1,), (1,))
    assert targets == ((2,), (0,))
    with pytest.raises(IndexError):
        induced_subnetwork(crn, [3], [0])
