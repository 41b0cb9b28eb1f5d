import csv
import subprocess
import sys

import pytest

from waveprecond import cli

SMALL = {
    "condnum": ["--set", "n_min=3", "--set", "n_max=5", "--set", "operators=L1,L3"],
    "solve": ["--set", "n=3", "--set", "operator=L3"],
    "circuit-audit": ["--set", "n_min=2", "--set", "n_max=4", "--set", "max_d=2",
                      "--set", "max_n_max=3", "--set", "comp_n=3"],
    "polyinv": ["--set", "c_values=4", "--set", "eps_values=1e-2,1e-3"],
    "direct-probe": ["--set", "n_min=3", "--set", "n_max=5"],
}


def run(command, out, *extra):
    return cli.main([command, "--out", str(out), *SMALL.get(command, []), *extra])


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# manifest-sha256: ")
    return list(csv.DictReader(lines[1:]))


@pytest.mark.parametrize("command", sorted(SMALL))
def test_every_command_runs(command, tmp_path):
    assert run(command, tmp_path) == 0
    files = sorted(tmp_path.iterdir())
    assert (tmp_path / "manifest.resolved.txt").exists()
    digests = set()
    for f in files:
        first = f.read_text().splitlines()[0]
        assert "manifest-sha256:" in first
        digests.add(first.split("manifest-sha256:")[1].strip(" ->"))
    assert len(digests) == 1


def test_condnum_rows(tmp_path):
    run("condnum", tmp_path)
    rows = read_csv(tmp_path / "condnum.csv")
    assert len(rows) == 2 * 3
    assert (tmp_path / "condnum.svg").read_text().lstrip().startswith("<")


def test_solve_report(tmp_path):
    assert run("solve", tmp_path) == 0
    rows = read_csv(tmp_path / "solve.csv")
    assert [r["observable"] for r in rows] == ["identity", "grid_cos", "nearest_neighbor"]
    for r in rows:
        assert float(r["abs_error"]) <= 1e-6
        assert r["operator"] == "L3"


def test_identity_solve(tmp_path):
    assert cli.main(["solve", "--out", str(tmp_path), "--set", "operator=identity", "--set", "n=3",
                     "--set", "observables=identity"]) == 0
    row = read_csv(tmp_path / "solve.csv")[0]
    assert float(row["quantum_value"]) == pytest.approx(1, abs=1e-10)


def test_deterministic_output(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run("direct-probe", a, "--seed", "3")
    run("direct-probe", b, "--seed", "3")
    for f in a.iterdir():
        assert f.read_bytes() == (b / f.name).read_bytes()


def test_seed_changes_hash(tmp_path):
    run("direct-probe", tmp_path / "a", "--seed", "1")
    run("direct-probe", tmp_path / "b", "--seed", "2")
    h = [(tmp_path / d / "direct_probe.csv").read_text().splitlines()[0] for d in "ab"]
    assert h[0] != h[1]
    assert "seed = 2" in (tmp_path / "b" / "manifest.resolved.txt").read_text()


def test_unknown_key_rejected(tmp_path, capsys):
    assert cli.main(["condnum", "--out", str(tmp_path), "--set", "colour=red"]) == cli.EXIT_INVALID
    assert "colour" in capsys.readouterr().err


def test_bad_value_rejected(tmp_path):
    assert cli.main(["solve", "--out", str(tmp_path), "--set", "n=three"]) == cli.EXIT_INVALID


def test_singular_refused(tmp_path):
    base = ["solve", "--out", str(tmp_path), "--set", "operator=L1", "--set", "n=3"]
    assert cli.main(base + ["--set", "kernel_policy=none"]) == cli.EXIT_INVALID
    assert cli.main(base + ["--set", "rhs=gaussian_samples"]) == cli.EXIT_INVALID
    assert cli.main(base) == 0


def test_manifest_file(tmp_path):
    m = tmp_path / "run.manifest"
    m.write_text("# probe settings\nn_min = 3\nn_max = 4  # small\n")
    assert cli.main(["direct-probe", "--manifest", str(m), "--out", str(tmp_path / "o")]) == 0
    text = (tmp_path / "o" / "manifest.resolved.txt").read_text()
    assert "n_max = 4" in text and "wavelet = db3" in text
    assert len(read_csv(tmp_path / "o" / "direct_probe.csv")) == 2


def test_manifest_parse_errors():
    with pytest.raises(cli.InvalidInput):
        cli.parse_manifest("a = 1\na = 2\n")
    with pytest.raises(cli.InvalidInput):
        cli.parse_manifest("just words\n")


def test_missing_manifest(tmp_path):
    assert cli.main(["condnum", "--manifest", str(tmp_path / "nope"), "--out", str(tmp_path)]) == cli.EXIT_INVALID


def test_hash_is_order_independent():
    _, r1 = cli.resolve("polyinv", {"c_values": "4", "eps_values": "1e-2"})
    _, r2 = cli.resolve("polyinv", {"eps_values": "1e-2", "c_values": "4"})
    assert cli.manifest_hash("polyinv", r1) == cli.manifest_hash("polyinv", r2)


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "waveprecond", "polyinv", "--out", str(tmp_path),
                           "--set", "c_values=2", "--set", "eps_values=1e-2"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert (tmp_path / "polyinv_summary.csv").exists()
