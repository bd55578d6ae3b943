import json
import subprocess
import sys

import pytest

from biochain.cli import EXIT_CONFIG, EXIT_INTEGRITY, EXIT_NOT_ENROLLED, EXIT_OK, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def template(tmp_path):
    p = tmp_path / "t.bin"
    p.write_bytes(bytes(range(1, 61)))
    return p


@pytest.mark.parametrize("scheme", ["full_on_chain", "data_hashing", "merkle_anchor"])
def test_enroll_verify_remove(capsys, tmp_path, template, scheme):
    store = str(tmp_path / "store")
    code, out, _ = run(capsys, "enroll", "--user", "7", "--template", str(template), "--scheme", scheme,
                       "--store-dir", store)
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["gas"] > 0 and doc["deploy"]["gas"] == 498274
    code, out, _ = run(capsys, "verify", "--user", "7", "--store-dir", store)
    assert code == EXIT_OK
    assert json.loads(out)["template_sha3"] == doc["template_sha3"]
    assert json.loads(out)["integrity"] == "ok"
    assert run(capsys, "remove", "--user", "7", "--store-dir", store)[0] == EXIT_OK
    code, _, err = run(capsys, "remove", "--user", "7", "--store-dir", store)
    assert code == EXIT_NOT_ENROLLED and "not enrolled" in err
    assert (tmp_path / "store" / "chain.json").exists() and (tmp_path / "store" / "config.txt").exists()


@pytest.mark.parametrize("scheme", ["data_hashing", "merkle_anchor"])
def test_tamper_exit_code(capsys, tmp_path, template, scheme):
    store = tmp_path / "store"
    run(capsys, "enroll", "--user", "1", "--template", str(template), "--scheme", scheme, "--store-dir", str(store))
    (blob,) = (store / "offchain").glob("*.bin")
    data = bytearray(blob.read_bytes())
    data[3] ^= 0x10
    blob.write_bytes(bytes(data))
    code, _, err = run(capsys, "verify", "--user", "1", "--store-dir", str(store))
    assert code == EXIT_INTEGRITY and "integrity" in err


def test_scheme_conflict_is_config_error(capsys, tmp_path, template):
    store = str(tmp_path / "s")
    run(capsys, "enroll", "--user", "1", "--template", str(template), "--store-dir", store)
    code = run(capsys, "enroll", "--user", "2", "--template", str(template), "--scheme", "merkle_anchor",
               "--store-dir", store)[0]
    assert code == EXIT_CONFIG


def test_bad_config_reports_line(capsys, tmp_path):
    cfg = tmp_path / "bad.txt"
    cfg.write_text("sload = 200\nnonsense\n")
    code, _, err = run(capsys, "project", "--config", str(cfg))
    assert code == EXIT_CONFIG and "bad.txt:2:" in err


def test_costs_gas_price(capsys):
    code, out, _ = run(capsys, "costs", "--gas-price", "5")
    assert code == EXIT_OK
    row = next(line for line in out.splitlines() if "write_1kb" in line)
    assert row.split(",")[6] == "0.4480"


def test_costs_writes_both_formats(capsys, tmp_path):
    out = tmp_path / "costs.csv"
    assert run(capsys, "costs", "--out", str(out), "--n-templates", "1000000")[0] == EXIT_OK
    doc = json.loads((tmp_path / "costs.json").read_text())
    assert len(doc["projections"]) == 9
    assert "scheme,op,n,gas,eth,usd,modality" in out.read_text()


def test_project_json(capsys):
    code, out, _ = run(capsys, "project", "--n-templates", "1000000", "--format", "json")
    rows = json.loads(out)
    hashing = [r for r in rows if r["scheme"] == "data_hashing"]
    assert all(abs(float(r["usd"]) - 12200) / 12200 <= 0.10 for r in hashing)


def test_negative_price_rejected(capsys):
    with pytest.raises(SystemExit):
        main(["costs", "--gas-price", "-1"])


def test_sweep_deterministic(capsys, tmp_path):
    args = ["sweep", "--modality", "face", "--users", "6", "--samples", "4", "--sizes", "10,100,4096", "--seed", "3"]
    a = run(capsys, *args)[1]
    b = run(capsys, *args)[1]
    assert a == b and a.splitlines()[0] == "size,eer_percent,seed"
    assert [line.split(",")[0] for line in a.splitlines()[1:]] == ["10", "100", "4096"]


def test_sweep_from_dataset_file(capsys, tmp_path):
    from biochain.biometrics import generate_synthetic, save_dataset
    p = tmp_path / "g.npz"
    save_dataset(generate_synthetic("signature_global", 8, 7, separation=2.0, seed=1), p)
    code, out, _ = run(capsys, "sweep", "--dataset", str(p), "--sizes", "1,2", "--format", "json")
    assert code == EXIT_OK and [r["size"] for r in json.loads(out)] == [1, 2]


def test_console_script_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "biochain.cli", "project", "--n-templates", "1"],
                         capture_output=True, text=True, check=True)
    assert out.stdout.startswith("scheme,op,n,gas,eth,usd,modality")


def test_batched_merkle_store(capsys, tmp_path, template):
    store = str(tmp_path / "b")
    base = ["--store-dir", store]
    code, out, _ = run(capsys, "enroll", "--user", "1", "--template", str(template), "--scheme", "merkle_anchor",
                       "--batch", "3", *base)
    assert code == EXIT_OK and json.loads(out)["receipt"] is None
    # not anchored yet, so it cannot be verified
    assert run(capsys, "verify", "--user", "1", *base)[0] == EXIT_INTEGRITY
    code, out, _ = run(capsys, "flush", *base)
    assert code == EXIT_OK and json.loads(out)["gas"] > 0
    assert run(capsys, "verify", "--user", "1", *base)[0] == EXIT_OK


def test_occupied_store_prices_overwrite_as_reset(capsys, tmp_path, template):
    gas = {}
    for mode in ("fresh", "occupied"):
        store = str(tmp_path / mode)
        flags = ["--occupied"] if mode == "occupied" else []
        run(capsys, "enroll", "--user", "1", "--template", str(template), "--scheme", "full_on_chain",
            "--store-dir", store, *flags)
        code, out, _ = run(capsys, "enroll", "--user", "1", "--template", str(template), "--store-dir", store)
        gas[mode] = json.loads(out)["gas"]
    assert gas["occupied"] < gas["fresh"]
