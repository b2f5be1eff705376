# tests/test_inherit.py

import numpy as np
import pytest
from numpy.testing import assert_allclose

from crn_osc.errors import EpsilonSearchError, TransformationError
from crn_osc.models.inheritance import (
    AddAllFlows,
    AddDependentReaction,
    AddSpeciesWithFlow,
    AddTrivialSpecies,
    TransformationStep,
)
from crn_osc.models.kinetics import KineticsClass
from crn_osc.models.network import EnumSpec
from crn_osc.models.orbit import Verdict
from crn_osc.services.canon import canonical_key, contains_induced, core_key, crn_from_key, key_from_hex
from crn_osc.services.crn_model import parse_crn, stoich_matrices
from crn_osc.services.dynamics import CallableField, locate_orbit
from crn_osc.services.enumeration import enumerate_crns
from crn_osc.services.floquet import certify, reduced_multipliers
from crn_osc.services.inherit import (
    any_motif_frequency,
    apply,
    census_fraction,
    closure_chain,
    closure_step,
    epsilon_search,
    minimal_atoms,
    motif_census,
    motif_frequency,
)
from crn_osc.services.kinetics import VectorField, mass_action_spec
from crn_osc.services.workbench import (
    MASS_ACTION_ATOMS,
    POWER_LAW_ATOMS,
    XIVSET_CYCLE_K,
    xivset_field,
    xivset_network,
    xivset_spec,
)

AUTOCATALYSIS = POWER_LAW_ATOMS[0]
CATALYST = AddTrivialSpecies(stoichiometry=(1, 0, 0, 0, 0))
K = XIVSET_CYCLE_K[0]


# -- transformations ----------------------------------------------------------

def test_dependent_reaction_appended():
    crn, spec = apply(AddDependentReaction(source=(0, 2), target=(1, 1), epsilon=1e-3),
                      xivset_network(), xivset_spec(K))
    assert crn.n_reactions == 6
    assert crn.reactions[-1].vector == (1, -1)
    assert spec.rate_constants[-1] == 1e-3
    assert spec.exponents[-1] == (0.0, 2.0)


def test_dependent_reaction_rejections():
    closed = parse_crn("X -> Y")
    spec = mass_action_spec(closed, [1.0])
    with pytest.raises(TransformationError):
        apply(AddDependentReaction(source=(1, 0), target=(0, 0), epsilon=0.1), closed, spec)
    with pytest.raises(TransformationError):
        apply(AddDependentReaction(source=(0, 1), target=(1, 0), epsilon=0.0), closed, spec)
    with pytest.raises(TransformationError):
        apply(AddDependentReaction(source=(1, 0), target=(0, 1), epsilon=0.1), closed, spec)
    with pytest.raises(TransformationError):
        apply(AddDependentReaction(source=(0, 1), target=(1, 0), epsilon=0.1, exponents=(0.0, 2.0)),
              closed, spec)


def test_all_flows_added_to_closed_network():
    core = parse_crn("X + Y -> 2Y")
    crn, spec = apply(AddAllFlows(epsilon=0.1, anchor=(2.0, 3.0)), core, mass_action_spec(core, [1.0]))
    assert crn.n_reactions == 5
    assert spec.rate_constants == pytest.approx((1.0, 0.1, 0.2, 0.1, 0.3))
    assert spec.kinetics_class == KineticsClass.MASS_ACTION


def test_all_flows_merged_into_existing_flows():
    base = xivset_spec(K)
    crn, spec = apply(AddAllFlows(epsilon=0.01, anchor=(2.0, 1.0)), xivset_network(), base)
    assert crn == xivset_network()
    expected = np.array(base.rate_constants) + [0.0, 0.01, 0.02, 0.01, 0.01]
    assert_allclose(spec.rate_constants, expected)
    with pytest.raises(TransformationError):
        apply(AddAllFlows(epsilon=0.01, anchor=(0.0, 1.0)), xivset_network(), base)


def test_trivial_species_keeps_dynamics_at_unit_level():
    crn, spec = apply(CATALYST, xivset_network(), xivset_spec(K))
    assert crn.n_species == 3
    assert stoich_matrices(crn).rank_r == 2
    x = np.array([0.8, 1.4])
    extended = VectorField(crn, spec).field(CATALYST.lift(x))
    assert_allclose(extended[:2], xivset_field(K).field(x))
    assert extended[2] == 0.0


def test_species_with_flow_relaxation():
    t = AddSpeciesWithFlow(left=(1, 0, 0, 0, 0), right=(0, 0, 0, 0, 0), epsilon=0.01)
    crn, spec = apply(t, xivset_network(), xivset_spec(K))
    assert crn.n_species == 3 and crn.n_reactions == 7
    assert spec.rate_constants[-2:] == (100.0, 100.0)
    x = np.array([0.8, 1.4])
    extended = VectorField(crn, spec).field(t.lift(x))
    assert_allclose(extended[:2], xivset_field(K).field(x))
    with pytest.raises(ValueError):
        AddSpeciesWithFlow(left=(1, 0), right=(0,), epsilon=0.01)


def test_transformation_parsed_from_json():
    step = TransformationStep.model_validate_json(
        '{"transformation": {"kind": "all_flows", "epsilon": 0.01, "anchor": [1.0, 1.0]}}')
    assert isinstance(step.transformation, AddAllFlows)


# -- persistence of the stable orbit --------------------------------------------

def _family(t_of_eps, crn, spec):
    return lambda eps: VectorField(*apply(t_of_eps(eps), crn, spec))


def test_reverse_reaction_keeps_orbit(xivset_sppo):
    family = _family(lambda eps: AddDependentReaction(source=(0, 2), target=(1, 1), epsilon=eps),
                     xivset_network(), xivset_spec(K))
    result = epsilon_search(family, xivset_sppo, eps_grid=(1e-3,), base_field=xivset_field(K))
    assert result.epsilon == 1e-3
    assert result.orbit.verdict == Verdict.SPPO
    assert result.distances[1e-3] < 0.05


def test_catalyst_species_keeps_orbit(xivset_sppo):
    crn, spec = apply(CATALYST, xivset_network(), xivset_spec(K))
    vf = VectorField(crn, spec)
    orbit = certify(vf, locate_orbit(vf, CATALYST.lift(xivset_sppo.point_array),
                                     period_guess=xivset_sppo.period))
    assert orbit.verdict == Verdict.SPPO
    assert orbit.period == pytest.approx(xivset_sppo.period, rel=1e-6)
    assert_allclose(np.sort_complex(orbit.reduced), np.sort_complex(xivset_sppo.reduced), atol=1e-6)
    # one unit multiplier per conservation law plus the trivial one
    assert np.sum(np.abs(orbit.full - 1.0) < 1e-4) == 2
    assert orbit.point[2] == pytest.approx(1.0, abs=1e-8)


def test_reduced_multipliers_reject_anchor_outside_class(xivset_sppo):
    crn, spec = apply(CATALYST, xivset_network(), xivset_spec(K))
    vf = VectorField(crn, spec)
    orbit = locate_orbit(vf, CATALYST.lift(xivset_sppo.point_array), period_guess=xivset_sppo.period)
    with pytest.raises(ValueError):
        reduced_multipliers(vf, orbit, x0_anchor=orbit.point_array + [0.0, 0.0, 0.5])


def test_species_with_flow_keeps_orbit(xivset_sppo):
    def transform(eps):
        return AddSpeciesWithFlow(left=(1, 0, 0, 0, 0), right=(0, 0, 0, 0, 0), epsilon=eps)

    result = epsilon_search(_family(transform, xivset_network(), xivset_spec(K)), xivset_sppo,
                            eps_grid=(1e-2, 1e-3), lift=transform(1.0).lift, base_field=xivset_field(K))
    assert result.epsilon <= 1e-2
    assert result.orbit.verdict == Verdict.SPPO
    assert all(d < 0.1 for d in result.distances.values())


def test_all_flows_on_rank_deficient_core(xivset_sppo):
    crn, spec = apply(CATALYST, xivset_network(), xivset_spec(K))
    anchor = tuple(CATALYST.lift(xivset_sppo.point_array))
    result = epsilon_search(_family(lambda eps: AddAllFlows(epsilon=eps, anchor=anchor), crn, spec),
                            xivset_sppo, eps_grid=(1e-2, 1e-3), lift=CATALYST.lift,
                            base_field=xivset_field(K))
    orbit = result.orbit
    assert orbit.verdict == Verdict.SPPO
    assert len(orbit.reduced) == 3
    extra = np.exp(-result.epsilon * orbit.period)
    assert np.min(np.abs(orbit.reduced - extra)) < 1e-4


def test_epsilon_search_reports_failure(xivset_sppo):
    def family(eps):
        return CallableField(lambda x: -x, 2, lambda x: -np.eye(2))

    with pytest.raises(EpsilonSearchError):
        epsilon_search(family, xivset_sppo, eps_grid=(1e-2,))


# -- closure --------------------------------------------------------------------

def test_power_law_closure_counts():
    reports = closure_chain(POWER_LAW_ATOMS, (2, 1), [(2, 2), (3, 1), (2, 3), (3, 2)])
    assert {cell: r.count for cell, r in reports.items()} == {(2, 2): 25, (3, 1): 1, (2, 3): 289, (3, 2): 82}
    for key_hex, seed_hex in reports[(2, 2)].provenance.items():
        assert seed_hex == core_key(AUTOCATALYSIS).hex
        assert key_hex in reports[(2, 2)].inheritor_keys


def test_mass_action_closure_counts():
    reports = closure_chain(MASS_ACTION_ATOMS, (3, 2), [(4, 2), (3, 3)])
    assert reports[(4, 2)].count == 8
    assert reports[(3, 3)].count == 401


def test_closure_inheritors_contain_seed():
    report = closure_step([AUTOCATALYSIS], [], (2, 2))
    for key_hex in report.inheritor_keys:
        assert contains_induced(crn_from_key(key_from_hex(key_hex)), AUTOCATALYSIS)


def test_closure_parallel_matches_serial():
    seeds = closure_step([AUTOCATALYSIS], [], (2, 2), threads=1).inheritor_keys
    serial = closure_step(seeds, [], (2, 3), threads=1)
    parallel = closure_step(seeds, [], (2, 3), threads=2)
    assert parallel.inheritor_keys == serial.inheritor_keys
    assert parallel.provenance == serial.provenance


def test_closure_rejects_misplaced_seed():
    with pytest.raises(ValueError):
        closure_step([AUTOCATALYSIS], [], (3, 3))


# -- atoms and motifs -----------------------------------------------------------

def test_minimal_atoms_recovers_seeds():
    inheritors = closure_step([], MASS_ACTION_ATOMS, (4, 2)).inheritor_keys
    atoms = minimal_atoms(list(MASS_ACTION_ATOMS) + list(inheritors))
    assert set(atoms.keys) == {core_key(a).hex for a in MASS_ACTION_ATOMS}
    assert atoms.kinetics_class == KineticsClass.MASS_ACTION


def test_motif_frequency_on_small_cell():
    population = [key for _, key in enumerate_crns(EnumSpec(k=2, l=1))]
    assert motif_frequency(AUTOCATALYSIS, population) == pytest.approx(1 / 14)
    assert any_motif_frequency([AUTOCATALYSIS, parse_crn("X -> Y")], population) == pytest.approx(2 / 14)
    assert motif_frequency(AUTOCATALYSIS, []) == 0.0


def test_motif_census_exact_path_matches_streaming():
    census = motif_census([AUTOCATALYSIS], [(2, 2), (3, 1)])
    cores = [core for core, _ in enumerate_crns(EnumSpec(k=2, l=2))]
    streamed = sum(contains_induced(core, AUTOCATALYSIS) for core in cores)
    assert census[(2, 2)] == (streamed, 169)
    assert census[(2, 2)][0] == 25
    assert census[(3, 1)] == (1, 19)


@pytest.mark.slow
def test_motif_census_streaming_for_larger_motifs():
    triangle = parse_crn("X -> Y\nY -> Z\nZ -> X")
    census = motif_census([triangle], [(3, 3)])
    assert census[(3, 3)][1] == 16135
    assert census[(3, 3)][0] >= 1


def test_autocatalysis_share_of_two_species_networks():
    census = motif_census([AUTOCATALYSIS], [(2, l) for l in range(1, 27)])
    assert census_fraction(census) == pytest.approx(0.75, abs=0.01)


TABLE_CELLS = [(k, l) for k in range(2, 5) for l in range(1, 5)]


@pytest.mark.parametrize("motifs, share", [
    ([AUTOCATALYSIS], 0.2215),
    (list(MASS_ACTION_ATOMS), 0.0511),
])
def test_motif_share_over_table_cells(motifs, share):
    census = motif_census(motifs, TABLE_CELLS)
    assert census_fraction(census) == pytest.approx(share, abs=5e-4)


def test_key_of_fully_open_network_matches_core():
    assert canonical_key(xivset_network()) == core_key(AUTOCATALYSIS)
