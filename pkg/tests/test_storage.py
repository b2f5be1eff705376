# tests/test_storage.py

import csv

import numpy as np

from crn_osc.models.network import CanonicalKey
from crn_osc.models.orbit import OrbitRecord, Verdict
from crn_osc.models.records import RunRecord
from crn_osc.services.canon import canonical_key
from crn_osc.services.crn_model import parse_crn
from crn_osc.services.storage import KeyStore, StorageService


def test_directories_created(storage):
    for directory in (storage.keys_dir, storage.records_dir, storage.trajectories_dir):
        assert directory.is_dir()


def test_key_store_insert_if_absent():
    store = KeyStore()
    key = CanonicalKey(data=b"\x02\x01\x01\x01\x00\x02")
    assert store.insert(key)
    assert not store.insert(key)
    assert key in store
    assert len(store) == 1


def test_key_file_sorted_and_deduplicated(storage):
    keys = [canonical_key(parse_crn(text)) for text in ("X + Y -> 2Y", "X -> Y", "X + Y -> 2Y")]
    path = storage.keys_dir / "keys.txt"
    assert storage.write_key_file(keys, path) == 2
    lines = path.read_text().splitlines()
    assert lines == sorted(lines)
    assert set(storage.read_key_file(path)) == set(keys)


def test_network_file_round_trip(storage):
    crns = [parse_crn("# n_species = 3\nX + Y -> 2Y"), parse_crn("X <-> Y\nY -> 0")]
    path = storage.root / "networks.crn"
    storage.write_crn_file(crns, path)
    assert storage.read_crn_file(path) == crns


def test_records_are_deterministic(storage):
    orbit = OrbitRecord(point=(1.0, 2.0), period=7.25, reduced_multipliers=((1.0, 0.0), (0.4, 0.0)),
                        verdict=Verdict.SPPO, residuals={"liouville": 1e-9})
    first = storage.save_record(orbit, storage.record_path("a"))
    second = storage.save_record(orbit, storage.record_path("b"))
    assert first.read_bytes() == second.read_bytes()
    assert storage.load_record(first, OrbitRecord) == orbit


def test_run_record_carries_version(storage):
    path = storage.save_record(RunRecord(command="enumerate", inputs={"cell": [2, 1]}),
                               storage.record_path("run"))
    loaded = storage.load_record(path, RunRecord)
    assert loaded.command == "enumerate"
    assert loaded.version


def test_table_has_schema_column(storage):
    path = storage.records_dir / "table.csv"
    storage.write_table([{"k": 2, "l": 1, "total": 14}], path)
    with path.open() as f:
        rows = list(csv.DictReader(f))
    assert rows == [{"schema_version": "1", "k": "2", "l": "1", "total": "14"}]


def test_trajectory_csv(storage):
    times = np.linspace(0.0, 1.0, 3)
    states = np.column_stack([times, 2 * times])
    path = storage.write_trajectory(times, states, "run")
    lines = path.read_text().splitlines()
    assert lines[0] == "t,x1,x2"
    assert len(lines) == 4


def test_default_root_comes_from_config(monkeypatch, tmp_path):
    from crn_osc.config import config
    monkeypatch.setattr(config, "STORAGE_DIR", tmp_path / "s")
    monkeypatch.setattr(config, "KEYS_DIR", tmp_path / "s" / "keys")
    monkeypatch.setattr(config, "RECORDS_DIR", tmp_path / "s" / "records")
    monkeypatch.setattr(config, "TRAJECTORIES_DIR", tmp_path / "s" / "trajectories")
    service = StorageService()
    assert service.keys_dir == tmp_path / "s" / "keys"
    assert service.keys_dir.is_dir()
