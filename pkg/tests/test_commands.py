# tests/test_commands.py

import json
import sys

import pytest
from click.testing import CliRunner

from crn_osc.config import config
from crn_osc.main import main
from crn_osc.routers.commands import cli
from crn_osc.services.canon import canonical_key, core_key, normal_form
from crn_osc.services.crn_model import is_fully_open
from crn_osc.services.storage import StorageService
from crn_osc.services.workbench import two_species_network


@pytest.fixture
def run(tmp_path):
    runner = CliRunner()

    def invoke(*args):
        return runner.invoke(cli, ["--out", str(tmp_path / "out"), "--log-level", "WARNING", *args])

    return invoke


@pytest.fixture
def atom_file(tmp_path):
    path = tmp_path / "atom.crn"
    path.write_text("X + Y -> 2Y\n", encoding="utf-8")
    return path


def test_enumerate_count_only(run):
    result = run("enumerate", "--species", "2", "--reactions", "1", "--count-only")
    assert result.exit_code == 0, result.output
    assert "(2,1): 14" in result.output


def test_enumerate_writes_key_file(run, tmp_path):
    result = run("enumerate", "--species", "2", "--reactions", "1")
    assert result.exit_code == 0, result.output
    lines = (tmp_path / "out" / "keys" / "crns_2_1.txt").read_text().splitlines()
    assert len(lines) == 14
    assert list((tmp_path / "out" / "records").glob("run_enumerate*.json"))


def test_enumerate_emits_fully_open_networks(run, tmp_path):
    keys, crns = tmp_path / "keys.txt", tmp_path / "crns.txt"
    result = run("enumerate", "--species", "2", "--reactions", "1", "--out", str(keys), "--emit-crns", str(crns))
    assert result.exit_code == 0, result.output
    networks = StorageService.read_crn_file(crns)
    assert len(networks) == 14
    assert all(is_fully_open(n) for n in networks)
    assert [canonical_key(n).hex for n in networks] == keys.read_text().splitlines()


def test_enumerate_emit_needs_networks(run, tmp_path):
    result = run("enumerate", "--species", "2", "--reactions", "1", "--count-only",
                 "--emit-crns", str(tmp_path / "crns.txt"))
    assert result.exit_code == 2


def test_enumerate_ceiling(run):
    result = run("enumerate", "--species", "2", "--reactions", "2", "--ceiling", "10")
    assert result.exit_code != 0
    assert "ResourceGuardError" in result.output
    result = run("enumerate", "--species", "2", "--reactions", "2", "--ceiling", "10", "--override", "--count-only")
    assert result.exit_code == 0, result.output
    assert "(2,2): 169" in result.output


def test_enumerate_resource_guard(run):
    result = run("enumerate", "--species", "7", "--reactions", "1")
    assert result.exit_code != 0
    assert "ResourceGuardError" in result.output


def test_enumerate_rejects_bad_sizes(run):
    assert run("enumerate", "--species", "0", "--reactions", "1").exit_code == 2
    assert run("enumerate", "--species", "two", "--reactions", "1").exit_code == 2
    assert run("enumerate", "--species", "2").exit_code == 2


def test_inherit_closure_from_key_file(run, tmp_path):
    seeds = tmp_path / "seeds.txt"
    seeds.write_text(core_key(normal_form(two_species_network("xiv"))).hex + "\n", encoding="utf-8")
    result = run("inherit-closure", "--seeds", str(seeds), "--target", "2,2")
    assert result.exit_code == 0, result.output
    assert "(2,2): 25 inheritors" in result.output
    inheritors = (tmp_path / "out" / "keys" / "inheritors_2_2.txt").read_text().splitlines()
    assert len(inheritors) == 25


def test_inherit_closure_from_network_file(run, atom_file):
    result = run("inherit-closure", "--seeds", str(atom_file), "--target", "3,1")
    assert result.exit_code == 0, result.output
    assert "(3,1): 1 inheritors" in result.output


def test_inherit_closure_report_path(run, tmp_path, atom_file):
    report = tmp_path / "report.json"
    result = run("inherit-closure", "--seeds", str(atom_file), "--target", "3,1", "--out", str(report))
    assert result.exit_code == 0, result.output
    payload = json.loads(report.read_text(encoding="utf-8"))
    assert payload["target"] == [3, 1]
    assert len(payload["inheritor_keys"]) == 1
    assert set(payload["provenance"]) == set(payload["inheritor_keys"])


def test_inherit_closure_rejects_malformed_target(run, atom_file):
    result = run("inherit-closure", "--seeds", str(atom_file), "--target", "two")
    assert result.exit_code == 2
    assert "expected 'K,L'" in result.output



def test_certify_hopf_family(run):
    result = run("certify", "--xivset", "0.05")
    assert result.exit_code == 0, result.output
    assert result.output.startswith("SPPO")


def test_certify_past_the_cycle_reports_no_orbit(run):
    result = run("certify", "--xivset", "0.1")
    assert result.exit_code == 1
    assert "NotPeriodicError" in result.output


def test_certify_needs_kinetics(run, atom_file):
    result = run("certify", "--crn", str(atom_file))
    assert result.exit_code == 2


def test_simulate_search_without_candidate(run, tmp_path):
    crn = tmp_path / "r_i.crn"
    crn.write_text("0 -> 2X\nX -> 0\n0 -> X\nY -> 0\n0 -> Y\n", encoding="utf-8")
    result = run("simulate", "--crn", str(crn), "--samples", "5")
    assert result.exit_code == 0, result.output
    outputs = json.loads(result.output)
    assert outputs["draws"] == 5
    assert outputs["first_candidate"] is None


def test_simulate_single_point(run):
    result = run("simulate", "--xivset", "0.05", "--x0", "1.2,1.2", "--trajectory")
    assert result.exit_code == 0, result.output
    outputs = json.loads(result.output)
    assert outputs["class"] == "oscillatory_candidate"
    assert outputs["trajectory"].endswith(".csv")


def test_simulate_bad_point(run):
    result = run("simulate", "--xivset", "0.05", "--x0", "1.5;0.5")
    assert result.exit_code == 2


def test_motif_frequency_over_cell(run, atom_file):
    result = run("motif-freq", "--motif", str(atom_file), "--cells", "2,1")
    assert result.exit_code == 0, result.output
    assert result.output.strip() == "0.0714"


def test_motif_frequency_needs_population(run, atom_file):
    result = run("motif-freq", "--motif", str(atom_file))
    assert result.exit_code == 2


@pytest.mark.slow
def test_verify_appendix_b_command(run):
    result = run("verify-appendix-b", "--samples", "20")
    assert result.exit_code == 0, result.output
    assert "[FAIL]" not in result.output


def test_console_entry_point(monkeypatch, tmp_path, capsys):
    monkeypatch.setattr(type(config), "ensure_directories_exist", lambda self: None)
    monkeypatch.setattr(sys, "argv", ["crn-osc", "--out", str(tmp_path / "out"), "--log-level", "WARNING",
                                      "enumerate", "--species", "2", "--reactions", "1", "--count-only"])
    with pytest.raises(SystemExit) as exit_info:
        main()
    assert exit_info.value.code == 0
    assert "(2,1): 14" in capsys.readouterr().out
