import io
import json
from fractions import Fraction

import pytest

from logvoa.cli import ConfigError, RunConfig, SingularCache, load_config, main, parse_config
from logvoa.fock import ModuleVector, OmegaSpec

SMALL = ["--set", "grid_sizes=1,2", "--set", "grid_lambdas=0,1", "--set", "grid_nus=0,1/2",
         "--set", "truncation=3", "--set", "sample_level=1"]


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), stdout=out)
    records = [json.loads(line) for line in out.getvalue().splitlines()]
    return code, records


def checks(records):
    return [r for r in records if r["check"] != "summary"]


def strip_time(records):
    return [{k: v for k, v in r.items() if k != "wall_time_s"} for r in records]


# ---------------------------------------------------------------- config

def test_parse_config_keys_and_comments():
    cfg = parse_config("a = 1/2   # comment\nlambda=-2\n\njordan_sizes = 1,3,3\n")
    assert cfg.a == Fraction(1, 2) and cfg.lam == -2 and cfg.jordan_sizes == (1, 3, 3)


@pytest.mark.parametrize("text,where", [
    ("a = 1\nbogus = 3\n", "cfg:2"), ("lambda = x\n", "cfg:1"), ("just words\n", "cfg:1"),
])
def test_parse_config_errors_name_line(text, where):
    with pytest.raises(ConfigError, match=where):
        parse_config(text, "cfg")


def test_validation_errors(tmp_path):
    with pytest.raises(ConfigError, match="truncation"):
        load_config(None, ["truncation=0"])
    with pytest.raises(ConfigError, match="jordan_sizes"):
        load_config(None, ["jordan_sizes=2,0,1"])
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")
    with pytest.raises(ConfigError):
        load_config(None, ["novalue"])


def test_config_file_and_override(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("a = 1/3\nm = 2\n")
    cfg = load_config(path, ["m=1"])
    assert cfg.a == Fraction(1, 3) and cfg.m == 1
    assert RunConfig().echo()["lambda"] == "0"


def test_exit_code_two_on_config_error(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("weight_bound = 3\nsurprise = 1\n")
    assert main(["character", "--config", str(path)], stdout=io.StringIO()) == 2
    assert main(["no-such-command"], stdout=io.StringIO()) == 2


# ---------------------------------------------------------------- commands

def test_verify_intertwiner_small_grid_passes():
    code, recs = run("verify-intertwiner", *SMALL)
    assert code == 0
    names = {r["check"] for r in checks(recs)}
    assert names == {"h_bracket", "L_minus1", "f_map_equivariant", "depth"}
    assert all(r["result"] == "pass" for r in checks(recs))
    summary = recs[-1]
    assert summary["check"] == "summary" and summary["failed"] == 0 and summary["passed"] > 0
    assert summary["config"]["truncation"] == 3 and "version" in summary


def test_verify_intertwiner_tiny_window():
    code, recs = run("verify-intertwiner", *SMALL, "--set", "truncation=1")
    assert code == 0


def test_corrupted_T_fails_with_witness():
    code, recs = run("verify-intertwiner", *SMALL, "--set", "corrupt_t=true")
    assert code == 1
    failed = [r for r in checks(recs) if r["result"] == "fail"]
    assert failed and all(r.get("witness") for r in failed)


def test_reports_are_deterministic():
    _, first = run("verify-intertwiner", *SMALL, "--set", "random_samples=2", "--set", "seed=7")
    _, second = run("verify-intertwiner", *SMALL, "--set", "random_samples=2", "--set", "seed=7")
    assert strip_time(first) == strip_time(second)


def test_structure_command_writes_diagram(tmp_path):
    out = tmp_path / "wedge.tgf"
    code, recs = run("structure", "--set", "jordan_sizes=2,2,2", "--set", "weight_bound=4",
                     "--out", str(out))
    assert code == 0
    text = out.read_text()
    assert "#" in text and "singular[m=1]" in text
    code, recs = run("structure", "--set", "jordan_sizes=3,3,3", "--set", "weight_bound=4")
    assert code == 0
    code, recs = run("structure", "--set", "jordan_sizes=2,2,2", "--set", "weight_bound=0",
                     "--out", str(out))
    assert code == 0
    nodes = out.read_text().split("#")[0].strip().splitlines()
    assert len(nodes) == 2


def test_character_command():
    code, recs = run("character", "--set", "a=1/2", "--set", "lambda=1/2", "--set", "weight_bound=10")
    assert code == 0
    code, recs = run("character", "--set", "weight_bound=0")
    assert code == 0


def test_hidden_fusion_mock_commands():
    code, recs = run("hidden", "--set", "m=0", "--set", "n=0", "--set", "truncation=6")
    assert code == 0
    assert any(r["check"].startswith("hidden") for r in checks(recs))
    code, recs = run("fusion", "--set", "m=1", "--set", "n=1", "--set", "weight_bound=6")
    assert code == 0
    code, recs = run("mock", "--set", "lambda=1", "--set", "nu=1", "--set", "log_cutoff=5")
    assert code == 0
    assert any("1/24" in json.dumps(r) for r in checks(recs))
    code, _ = run("mock", "--set", "lambda=1", "--set", "nu=0")
    assert code == 2


# ---------------------------------------------------------------- cache

def test_singular_cache_roundtrip_and_reuse(tmp_path):
    path = tmp_path / "cache.txt"
    one = ["--set", f"cache_path={path}", "--set", "weight_bound=4", "--set", "jordan_sizes=1,1,1"]
    code, recs = run("singular", *one)
    assert code == 0
    assert [r["dimension"] for r in checks(recs)] == [1, 1, 0, 0, 1]
    assert not any(r["cached"] for r in checks(recs))
    # with a nilpotent 2-block only the bottom leg stays singular above level 0:
    # L(1) h(-1) w_2 = h(0) w_2 = w_1
    code, two = run("singular", "--set", f"cache_path={path}", "--set", "weight_bound=4")
    assert [r["dimension"] for r in checks(two)] == [2, 1, 0, 0, 1]
    code, again = run("singular", *one)
    assert code == 0 and all(r["cached"] for r in checks(again))
    assert [r["vectors"] for r in checks(again)] == [r["vectors"] for r in checks(recs)]


def test_corrupt_cache_entry_is_recomputed(tmp_path, capsys):
    path = tmp_path / "cache.txt"
    om = OmegaSpec(0, (2,))
    cache = SingularCache(path)
    good, hit = cache.get(4, om, 0)
    assert not hit and len(good) == 1
    cache.save()
    text = path.read_text()
    # flip a coefficient so L(1) no longer kills the stored vector
    tampered = text.replace("| 1 | 1\n", "| 1 | 5\n", 1)
    assert tampered != text
    path.write_text(tampered)
    fresh = SingularCache(path)
    again, hit = fresh.get(4, om, 0)
    assert not hit and fresh.rejected == 1
    assert [v.vector for v in again] == [v.vector for v in good]
    fresh.save()
    assert SingularCache(path).get(4, om, 0)[1]


def test_garbled_cache_file_is_ignored(tmp_path):
    path = tmp_path / "cache.txt"
    path.write_text("[a=0 omega=0:1 weight=1 order=1]\nnot a vector line\n[end]\n")
    cache = SingularCache(path)
    found, hit = cache.get(1, OmegaSpec(0, (1,)), 0)
    assert not hit and [v.vector for v in found] == [ModuleVector.basis_vector((1,))]
