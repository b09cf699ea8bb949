import json

import pytest

from czlab.cli import build_parser, main


def run(*argv):
    return main([str(a) for a in argv])


@pytest.mark.parametrize("what", ["cantor", "halfplane", "lipschitz", "section5"])
def test_generate(tmp_path, what):
    assert run("generate", what, "--out", tmp_path, "--stage", 2, "--N", 2) == 0
    assert any(tmp_path.glob("*.csv"))


@pytest.mark.parametrize("variant", ["function", "measure", "adregular"])
def test_decompose(tmp_path, variant, capsys):
    assert run("decompose", "--variant", variant, "--out", tmp_path, "--seed", 2) == 0
    out = capsys.readouterr().out
    assert "PASS cc4" in out
    data = json.loads((tmp_path / "decomposition.json").read_text())
    assert data["passed"] is True


def test_decompose_from_scenario_dir(tmp_path):
    scen = tmp_path / "scen"
    assert run("generate", "lipschitz", "--out", scen, "--seed", 5) == 0
    assert run("decompose", "--scenario", scen, "--out", tmp_path / "dec", "--p", 2) == 0


def test_decompose_inadmissible_level(tmp_path, capsys):
    assert run("decompose", "--lambda", 1e-6, "--out", tmp_path) == 2
    assert "admissible" in capsys.readouterr().err


def test_norm(tmp_path, capsys):
    assert run("norm", "--stage", 2, "--out", tmp_path, "--sequential") == 0
    assert "norm = 1.153" in capsys.readouterr().out
    assert json.loads((tmp_path / "norm.json").read_text())["value"] > 0


def test_norm_from_csv(tmp_path):
    assert run("generate", "cantor", "--stage", 2, "--out", tmp_path) == 0
    assert run("norm", "--measure", tmp_path / "cantor.csv", "--kernel", "cmpt:2",
               "--out", tmp_path / "n", "--threads", 1) == 0


def test_weaktype(tmp_path):
    assert run("weaktype", "--p", 2, "--out", tmp_path, "--eps", "0.1,0.05") == 0
    assert (tmp_path / "weak_type_scan.csv").exists()


def test_maximal(tmp_path):
    assert run("maximal", "--q", 1.5, "--out", tmp_path) == 0


@pytest.mark.parametrize("name,extra", [("section5-growth", ["--stages", "2-4"]),
                                        ("section5-scaling", ["--stage", 2]),
                                        ("section5-cross", ["--stage", 3])])
def test_experiment(tmp_path, name, extra, capsys):
    assert run("experiment", name, "--out", tmp_path, *extra) == 0
    assert capsys.readouterr().out.strip().endswith("PASS")


def test_bad_kernel(tmp_path):
    assert run("norm", "--kernel", "bogus", "--out", tmp_path) == 2


def test_parser_requires_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])
