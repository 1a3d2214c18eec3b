import json
import subprocess
import sys

import pytest

from bellforge import catalog, proof
from bellforge.cli import main
from bellforge.expr import BellExpression, Party, builtin, gen_ikk

FLIPPED = BellExpression.from_coeffs([[1, 1], [1, 1]], [-1, 0], [-1, 0])


@pytest.fixture
def cat(tmp_path):
    path = tmp_path / "cat.json"
    entries = [catalog.CatalogEntry(n, builtin(n), "builtin") for n in ("I2222", "I3322_SYM", "I5322")]
    entries.append(catalog.CatalogEntry("FLIPPED", FLIPPED, "sign of the x2 y2 term flipped"))
    catalog.save(path, entries)
    return path


def test_gen_writes_family_member(tmp_path, capsys):
    out = tmp_path / "g.json"
    assert main(["gen", "--k", "3", "--out", str(out)]) == 0
    (entry,) = catalog.load(out)
    assert entry.name == "I33" and entry.expr == gen_ikk(3)
    assert main(["gen", "--k", "1"]) == 2
    assert "at least 2" in capsys.readouterr().err


def test_gen_then_verify(tmp_path, capsys):
    out = tmp_path / "g.json"
    main(["gen", "--k", "2", "--out", str(out)])
    capsys.readouterr()
    assert main(["verify", "--catalog", str(out), "--name", "I22"]) == 0
    assert "valid, local bound 0" in capsys.readouterr().out


def test_verify(cat, capsys):
    assert main(["verify", "--catalog", str(cat), "--name", "I5322"]) == 0
    assert "max 0" in capsys.readouterr().out
    assert main(["verify", "--catalog", str(cat), "--name", "FLIPPED"]) == 1
    assert "max 2 at (A,A|B,B)" in capsys.readouterr().out
    assert main(["verify", "--catalog", str(cat), "--name", "missing"]) == 2
    assert main(["verify", "--catalog", str(cat.parent / "nope.json"), "--name", "I2222"]) == 2


def test_prove(cat, tmp_path, capsys):
    out = tmp_path / "p.json"
    assert main(["prove", "--catalog", str(cat), "--name", "I2222", "--out", str(out)]) == 0
    assert "depth 1, 2 leaves" in capsys.readouterr().out
    assert proof.verify(builtin("I2222"), proof.loads(out.read_text()))

    assert main(["prove", "--catalog", str(cat), "--name", "I5322", "--out", str(out)]) == 0
    assert "root split x4 on pivot [0:1, 2:-1]" in capsys.readouterr().out
    cert = proof.loads(out.read_text())
    assert (cert.party, cert.index) == (Party.X, 3)

    assert main(["prove", "--catalog", str(cat), "--name", "FLIPPED", "--out", str(out)]) == 3
    assert main(["prove", "--catalog", str(cat), "--name", "missing", "--out", str(out)]) == 2


def test_table_is_deterministic(cat, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"restarts": 6, "seed": 2}))
    small = tmp_path / "small.json"
    catalog.save(small, [e for e in catalog.load(cat) if e.name in ("I2222", "I3322_SYM")])
    a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
    assert main(["table", "--catalog", str(small), "--config", str(cfg), "--out", str(a)]) == 0
    assert main(["table", "--catalog", str(small), "--config", str(cfg), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0].split("\t") == ["Name", "Q", "theta_max/pi", "lambda_max", "Q_a", "theta_a/pi", "lambda_a"]
    assert lines[1].split("\t")[:4] == ["I2222", "0.2071", "0.2500", "0.7071"]
    assert lines[2].split("\t")[:4] == ["I3322_SYM", "0.2500", "0.2500", "0.8000"]


def test_table_edge_cases(tmp_path):
    empty = tmp_path / "empty.json"
    empty.write_text("[]")
    out = tmp_path / "t.tsv"
    assert main(["table", "--catalog", str(empty), "--out", str(out), "--no-alternatives"]) == 0
    assert out.read_text() == "Name\tQ\ttheta_max/pi\tlambda_max\n"
    bad = tmp_path / "bad.json"
    bad.write_text('{"restarts": 0}')
    assert main(["table", "--catalog", str(empty), "--config", str(bad), "--out", str(out)]) == 2
    assert main(["table", "--catalog", str(empty), "--config", str(tmp_path / "none.json")]) == 2


def test_check(capsys):
    assert main(["check", "--suite", "REARRANGE", "--trials", "2000", "--seed", "1"]) == 0
    assert "2000 passed, 0 failed" in capsys.readouterr().out
    assert main(["check", "--suite", "lhv_chain", "--trials", "200", "--seed", "1"]) == 0
    assert main(["check", "--suite", "QUANTUM_SANITY", "--trials", "50", "--seed", "1"]) == 0
    assert main(["check", "--suite", "REARRANGE", "--trials", "0", "--seed", "1"]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["check", "--suite", "NOPE"])
    assert exc.value.code == 2


def test_module_entry_point():
    done = subprocess.run([sys.executable, "-m", "bellforge", "gen", "--k", "2"], capture_output=True, text=True)
    assert done.returncode == 0
    assert json.loads(done.stdout)[0]["name"] == "I22"
