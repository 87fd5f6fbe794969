import json
from importlib import resources
from fractions import Fraction

import pytest

from ahmd import cli, io
from ahmd.errors import InvariantError, ValidationError


def model():
    return json.loads(resources.files("ahmd").joinpath("data", "ah_model.json").read_text())


# loading

def test_goodearl_stanza():
    desc = io.from_dict({"generator": {"goodearl": {"m": [4, 4, 4]}}})
    assert [b.matrix_size for (b,) in desc.system.stages] == [1, 4, 16, 64]


def test_empty_stages_rejected():
    with pytest.raises(ValidationError):
        io.from_dict({"complexes": {}, "stages": [], "maps": []})


def test_non_unital_map_rejected():
    data = model()
    data["stages"][1][0]["size"] = 3
    with pytest.raises(ValidationError, match="unitality"):
        io.from_dict(data)


def test_errors_are_positional():
    data = model()
    data["maps"][0]["legs"][2]["map"] = [0, 2, 1]
    with pytest.raises(ValidationError, match=r"maps\[0\]\.legs\[2\]"):
        io.from_dict(data)


def test_parse_error_position():
    with pytest.raises(ValidationError, match="line 2"):
        io.loads('{\n  "stages": [,]\n}')


def test_number_forms():
    assert io.parse_number("3/8", "x") == Fraction(3, 8)
    assert io.parse_number(0.1, "x") == Fraction(1, 10)
    assert io.parse_number(4, "x") == 4
    with pytest.raises(ValidationError):
        io.parse_number("one", "x")


@pytest.mark.parametrize("name", ["goodearl", "ah_model"])
def test_round_trip(name):
    desc = io.load(f"bundled:{name}")
    again = io.loads(io.dumps(desc))
    assert io.to_dict(again) == io.to_dict(desc)
    assert again.system == desc.system
    assert again.covers == desc.covers
    assert again.families == desc.families


def test_generator_matches_bundled_file():
    desc = io.from_dict(io.goodearl_description([4, 4, 4]))
    assert io.to_dict(desc) == io.to_dict(io.load("bundled:goodearl"))


# commands

def test_dim_cover_on_trivial_cover():
    data = {"complexes": {"X": {"cycle": 4}}, "stages": [[{"space": "X", "size": 1}]], "maps": [],
            "covers": {"whole": {"stage": 0, "blocks": [[{"all": True}]]}}}
    rep = cli.run("dim-cover", io.from_dict(data))
    (res,) = rep["results"]
    assert res["value"] == 0 and res["exact"] is True


def test_ocap_goodearl_point():
    rep = cli.run("ocap", io.load("bundled:goodearl"), cli.Config(cover="z"))
    (res,) = rep["results"]
    assert res["limit_estimate"] == "27/64"
    assert res["stages"][-1] == 3


def test_mean_dim_identity_system_is_constant():
    data = {"complexes": {"P": {"path": 4}},
            "stages": [[{"space": "P", "size": 1}]] * 3,
            "maps": [{"legs": [{"source": 0, "target": 0, "map": [0, 1, 2, 3]}]}] * 2,
            "covers": {"halves": {"stage": 0, "blocks": [[{"star": [0, 1]}, {"star": [2, 3]}]]}}}
    (res,) = cli.run("mean-dim", io.from_dict(data))["results"]
    assert len(set(map(str, res["values"]))) == 1


@pytest.mark.parametrize("cmd", cli.COMMANDS)
def test_every_command_on_the_model(cmd):
    rep = cli.run(cmd, io.load("bundled:ah_model"))
    assert rep["command"] == cmd
    if cmd == "report-all":
        assert set(rep["results"]) == set(cli.COMMANDS[:-1])


def test_report_is_deterministic():
    desc = io.load("bundled:ah_model")
    a = cli.report_json(cli.run("report-all", desc))
    b = cli.report_json(cli.run("report-all", io.load("bundled:ah_model")))
    assert a == b
    assert json.loads(a)["wall_time"] is None


def test_bad_config():
    with pytest.raises(ValidationError):
        cli.run("dim-cover", io.load("bundled:ah_model"), cli.Config(budget=0))
    with pytest.raises(ValidationError):
        cli.run("dim-cover", io.load("bundled:ah_model"), cli.Config(cover="missing"))


# entry point

def test_main_writes_json_and_csv(tmp_path, capsys):
    out, table = tmp_path / "r.json", tmp_path / "r.csv"
    code = cli.main(["ocap", "--system", "bundled:goodearl", "--cover", "z",
                     "--out", str(out), "--csv", str(table)])
    assert code == 0
    assert json.loads(out.read_text())["results"][0]["limit_estimate"] == "27/64"
    lines = table.read_text().splitlines()
    assert lines[0] == "command,series,stage,block,value,exact"
    assert lines[-1] == "ocap,z,3,0,27/64,True"


def test_main_validation_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"stages": []}')
    assert cli.main(["dim-cover", "--system", str(bad)]) == 2
    assert "error" in capsys.readouterr().err
    assert cli.main(["dim-cover", "--system", str(tmp_path / "missing.json")]) == 2


def test_main_invariant_exit_code(monkeypatch, capsys):
    def broken(desc, cfg):
        raise InvariantError("synthetic")
    monkeypatch.setitem(cli.HANDLERS, "nerve", broken)
    assert cli.main(["nerve", "--system", "bundled:ah_model"]) == 3
    assert "invariant" in capsys.readouterr().err


def test_goodearl_generator(tmp_path):
    out = tmp_path / "g.json"
    assert cli.main(["goodearl", "--m", "3", "2", "--out", str(out)]) == 0
    desc = io.load(str(out))
    assert [b.matrix_size for (b,) in desc.system.stages] == [1, 3, 6]


def test_threads_env_does_not_change_output(monkeypatch):
    desc = io.load("bundled:ah_model")
    monkeypatch.setenv("AHMD_THREADS", "1")
    one = cli.report_json(cli.run("dim-cover", desc))
    monkeypatch.setenv("AHMD_THREADS", "4")
    assert cli.report_json(cli.run("dim-cover", desc)) == one
