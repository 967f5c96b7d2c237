import json

import pytest

from gtprob.cli import main
from gtprob.config import (
    ConfigError,
    DetectConfig,
    GenCorpusConfig,
    VerifyConfig,
    WllnPlayConfig,
    derive_seed,
    dump_config,
    parse_config,
)
from gtprob.paths import load_path_csv


# ---------------------------------------------------------------- config

@pytest.mark.parametrize("cls", [GenCorpusConfig, DetectConfig, VerifyConfig, WllnPlayConfig])
def test_config_round_trip(cls):
    text = dump_config(cls())
    assert dump_config(parse_config(text, cls)) == text


def test_config_parsing():
    cfg = parse_config("# comment\n\nkind = \"constant\"\nlevels = [1, 2.5]\nstep_scale = 1\n", GenCorpusConfig)
    assert cfg.kind == "constant" and cfg.levels == [1, 2.5] and cfg.step_scale == 1.0


@pytest.mark.parametrize("text,line", [
    ("kind = \"walk\"\nbogus = 1\n", 2),
    ("n_paths = 1\nn_paths = 2\n", 2),
    ("n_paths 3\n", 1),
    ("n_paths = [\n", 1),
])
def test_config_errors_carry_line(text, line):
    with pytest.raises(ConfigError, match=f"line {line}"):
        parse_config(text, GenCorpusConfig)


def test_config_type_errors():
    with pytest.raises(ConfigError):
        parse_config("n_paths = 1.5\n", GenCorpusConfig)
    with pytest.raises(ConfigError):
        parse_config("write_traces = 1\n", DetectConfig)


def test_derive_seed():
    assert derive_seed(7, 3) == derive_seed(7, 3)
    assert derive_seed(7, 3) != derive_seed(7, 4)
    assert 0 <= derive_seed(0, 0) < 2 ** 64
    with pytest.raises(ConfigError):
        derive_seed(-1, 0)


# ------------------------------------------------------------------- cli

def _cfg(tmp_path, name, text):
    f = tmp_path / name
    f.write_text(text)
    return str(f)


def test_gen_corpus_is_reproducible(tmp_path):
    cfg = _cfg(tmp_path, "g.txt", "n_paths = 5\nn_steps = 20\n")
    assert main(["gen-corpus", "--config", cfg, "--seed", "11", "--out", str(tmp_path / "a")]) == 0
    assert main(["gen-corpus", "--config", cfg, "--seed", "11", "--out", str(tmp_path / "b")]) == 0
    ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
    mb = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert ma["content_hash"] == mb["content_hash"] and len(ma["items"]) == 5
    for item in ma["items"]:
        assert (tmp_path / "a" / item["file"]).read_bytes() == (tmp_path / "b" / item["file"]).read_bytes()
        assert item["seed"] == derive_seed(11, item["index"])
    p = load_path_csv((tmp_path / "a" / ma["items"][0]["file"]).read_text())
    assert len(p.times) == 21
    assert main(["gen-corpus", "--config", cfg, "--seed", "12", "--out", str(tmp_path / "c")]) == 0
    assert json.loads((tmp_path / "c" / "manifest.json").read_text())["content_hash"] != ma["content_hash"]


def test_detect_alarm_on_violation_corpus(tmp_path):
    g = _cfg(tmp_path, "g.txt", "kind = \"violation\"\na = 0\nb_grid = [0]\nD_grid = [1]\n")
    assert main(["gen-corpus", "--config", g, "--out", str(tmp_path / "corpus")]) == 0
    d = _cfg(tmp_path, "d.txt", f"corpus = {json.dumps(str(tmp_path / 'corpus'))}\na_grid = [0, 1]\nD_grid = [0.5, 1]\n")
    assert main(["detect", "--config", d, "--out", str(tmp_path / "det")]) == 2
    agg = json.loads((tmp_path / "det" / "aggregate.json").read_text())
    assert agg["alarm"] and agg["n_alarms"] == 1 and agg["factor"]["max"] >= 1000


def test_detect_quiet_on_constant_corpus(tmp_path):
    g = _cfg(tmp_path, "g.txt", "kind = \"constant\"\nlevels = [0, 1, -2]\nn_steps = 4\n")
    main(["gen-corpus", "--config", g, "--out", str(tmp_path / "corpus")])
    d = _cfg(tmp_path, "d.txt", f"corpus = {json.dumps(str(tmp_path / 'corpus'))}\nwrite_traces = true\n")
    assert main(["detect", "--config", d, "--out", str(tmp_path / "det")]) == 0
    agg = json.loads((tmp_path / "det" / "aggregate.json").read_text())
    assert agg["factor"]["max"] == 1.0 and not agg["alarm"]
    assert (tmp_path / "det" / "traces" / "path_00000.csv").is_file()


def test_detect_increase_on_cycle_corpus(tmp_path):
    g = _cfg(tmp_path, "g.txt", "kind = \"cycle\"\nn_paths = 3\nepsilon_exponent = 4\n")
    main(["gen-corpus", "--config", g, "--out", str(tmp_path / "corpus")])
    d = _cfg(tmp_path, "d.txt", f"corpus = {json.dumps(str(tmp_path / 'corpus'))}\ndetector = \"increase\"\n")
    assert main(["detect", "--config", d, "--out", str(tmp_path / "det")]) in (0, 2)
    rep = json.loads((tmp_path / "det" / "reports" / "path_00000.json").read_text())
    assert rep["branch"] in ("first", "second") and "factors" in rep


def test_missing_corpus_writes_nothing(tmp_path, capsys):
    d = _cfg(tmp_path, "d.txt", f"corpus = {json.dumps(str(tmp_path / 'nope'))}\n")
    out = tmp_path / "det"
    assert main(["detect", "--config", d, "--out", str(out)]) == 1
    assert not out.exists()
    assert "missing corpus manifest" in capsys.readouterr().err


def test_bad_config_and_seed(tmp_path):
    bad = _cfg(tmp_path, "bad.txt", "nonsense = 1\n")
    assert main(["gen-corpus", "--config", bad, "--out", str(tmp_path / "x")]) == 1
    assert main(["gen-corpus", "--seed", "-3", "--out", str(tmp_path / "x")]) == 1
    assert not (tmp_path / "x").exists()


def test_verify_suites(tmp_path):
    v = _cfg(tmp_path, "v.txt", "suites = [\"wlln_tightness\", \"layers\", \"coherence\"]\nn_samples = 50\n")
    assert main(["verify", "--config", v, "--out", str(tmp_path / "v1")]) == 0
    assert main(["verify", "--config", v, "--out", str(tmp_path / "v2")]) == 0
    a = (tmp_path / "v1" / "verify.json").read_bytes()
    assert a == (tmp_path / "v2" / "verify.json").read_bytes()
    doc = json.loads(a)
    assert doc["passed"] and doc["suites"]["wlln_tightness"]["worst_slack"] == 0
    unknown = _cfg(tmp_path, "u.txt", "suites = [\"nope\"]\n")
    assert main(["verify", "--config", unknown, "--out", str(tmp_path / "v3")]) == 1


def test_wlln_play(tmp_path):
    w = _cfg(tmp_path, "w.txt", "c = 1\nN = 4\nreality = \"fixed\"\nmoves = [1, 1, 1, 1]\n")
    assert main(["wlln-play", "--config", w, "--out", str(tmp_path / "w")]) == 0
    summary = json.loads((tmp_path / "w" / "summary.json").read_text())
    assert summary["games"][0]["final"] == 4.0 == summary["games"][0]["bound"]
    lines = (tmp_path / "w" / "game_0000.csv").read_text().splitlines()
    assert lines[0] == "n,s,x,K" and lines[-1] == "4,1.5,1.0,4.0"
    bad = _cfg(tmp_path, "b.txt", "c = 1\nN = 2\nreality = \"fixed\"\nmoves = [1, 3]\n")
    assert main(["wlln-play", "--config", bad, "--out", str(tmp_path / "b")]) == 1
    assert not (tmp_path / "b").exists()


def test_wlln_play_random_reproducible(tmp_path):
    w = _cfg(tmp_path, "w.txt", "N = 50\nn_games = 3\nreality = \"random\"\n")
    main(["wlln-play", "--config", w, "--seed", "5", "--out", str(tmp_path / "a")])
    main(["wlln-play", "--config", w, "--seed", "5", "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "summary.json").read_bytes() == (tmp_path / "b" / "summary.json").read_bytes()
    for g in json.loads((tmp_path / "a" / "summary.json").read_text())["games"]:
        assert g["final"] >= g["bound"] * (1 - 1e-9) and g["min_capital"] >= 0
