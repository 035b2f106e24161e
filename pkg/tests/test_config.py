import pytest

from decopt.config import ConfigError, apply_overrides, dump_config, load_comparison, load_config, parse_overrides
from decopt.simulator import ExperimentConfig


def write(tmp_path, text, name="c.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_load_with_overrides(tmp_path):
    path = write(tmp_path, "[graph]\nn = 7\n[algorithm]\nname = gt-svrg\nT = 5\n[seeds]\nmaster = 3\n")
    cfg = load_config(path, {"schedule.alpha": "0.5"})
    assert cfg.graph.n == 7 and cfg.algorithm.T == 5 and cfg.seed == 3
    assert cfg.schedule.alpha == 0.5


def test_dump_round_trip(tmp_path):
    cfg = apply_overrides(ExperimentConfig(), {"objective.normalize": "false", "schedule.alpha": "0.1", "seeds.master": "4"})
    assert load_config(write(tmp_path, dump_config(cfg))) == cfg


@pytest.mark.parametrize(
    "text",
    [
        "[nonsense]\nx = 1\n",
        "[graph]\ncolour = red\n",
        "[graph]\nn = many\n",
        "[algorithm]\nname = adam\n",
        "[seeds]\nother = 1\n",
        "[variant x]\nschedule.alpha = 1\n",
        "[graph\n",
    ],
)
def test_schema_violations(tmp_path, text):
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, text))


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "nope.cfg")


def test_parse_overrides():
    assert parse_overrides(["a.b=1", "c.d = x"]) == {"a.b": "1", "c.d": "x"}
    with pytest.raises(ConfigError):
        parse_overrides(["nodot=1"])


def test_comparison_variants_in_order(tmp_path):
    text = "[budget]\nrounds = 5\n[variant b]\nalgorithm.name = dsgd\n[variant a]\nalgorithm.name = gt-dsgd\n"
    out = load_comparison(write(tmp_path, text), {"graph.n": "4"})
    assert list(out) == ["b", "a"]
    assert out["a"].algorithm.name == "gt-dsgd" and out["a"].graph.n == 4 and out["b"].budget.rounds == 5
    with pytest.raises(ConfigError):
        load_comparison(write(tmp_path, "[graph]\nn = 3\n", "empty.cfg"))
