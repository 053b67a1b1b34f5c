import json
import os

import numpy as np
import pytest

import results_writer_helper
from channel_file_helper import ChannelFileHelper
from channel_models import EmpiricalChannel, compute_stats
from entanglement import sweep_entanglement
from results_writer_helper import (CHANNEL_STATS_COLUMNS, ENTANGLEMENT_COLUMNS, ResultsWriterHelper,
                                   atomic_write_text, channel_stats_row, entanglement_row, format_value,
                                   read_config_echo)
from run_config_loader import RunConfig
from simulation_errors import DomainError

ECHO = '{"command":"ent-sweep"}'


def test_format_value():
    assert format_value(True) == "true"
    assert format_value(np.int64(4)) == "4"
    assert format_value(1 / 3) == "0.333333333333"
    assert format_value(np.float64(2.0)) == "2"
    assert format_value(None) == ""
    assert format_value("lognormal(3,1)") == "lognormal(3,1)"


def test_csv_starts_with_config_echo():
    text = ResultsWriterHelper(ECHO, verbose=False).render_csv(["a", "b"], [[1, 0.5], [2, 0.25]])
    assert text.splitlines() == ["# config: " + ECHO, "a,b", "1,0.5", "2,0.25"]


def test_row_width_is_checked():
    with pytest.raises(ValueError):
        ResultsWriterHelper(ECHO, verbose=False).render_csv(["a", "b"], [[1]])


def test_writer_needs_echo():
    with pytest.raises(ValueError):
        ResultsWriterHelper("")


def test_write_rows_creates_directories(tmp_path):
    path = ResultsWriterHelper(ECHO, verbose=False).write_rows(tmp_path / "deep" / "out.csv", ["a"], [[1]])
    assert path.read_text(encoding="utf-8").endswith("a\n1\n")
    assert read_config_echo(path) == ECHO
    assert sorted(p.name for p in path.parent.iterdir()) == ["out.csv"]


def test_failed_write_keeps_previous_file(tmp_path, monkeypatch):
    target = tmp_path / "out.csv"
    target.write_text("old\n", encoding="utf-8")

    def broken_replace(src, dst):
        raise OSError("disk full")

    monkeypatch.setattr(results_writer_helper.os, "replace", broken_replace)
    with pytest.raises(OSError):
        atomic_write_text(target, "new\n")
    assert target.read_text(encoding="utf-8") == "old\n"
    assert os.listdir(tmp_path) == ["out.csv"]


def test_echo_reparses_to_the_same_config(tmp_path):
    config = RunConfig.resolve({"command": "ent-sweep", "channel": {"model": "deterministic", "T": 0.4},
                                "source": {"Vs": [2, 4]}})
    path = ResultsWriterHelper(config.to_json(), verbose=False).write_rows(tmp_path / "r.csv", ["a"], [])
    assert RunConfig.from_json(read_config_echo(path)) == config


def test_missing_echo_detected(tmp_path):
    path = tmp_path / "plain.csv"
    path.write_text("a,b\n", encoding="utf-8")
    with pytest.raises(ValueError):
        read_config_echo(path)


def test_diagnostics_embed_config(tmp_path):
    path = ResultsWriterHelper(ECHO, verbose=False).write_json(tmp_path / "d.json", {"rows": np.int64(3),
                                                                                     "T": np.array([0.5])})
    document = json.loads(path.read_text(encoding="utf-8"))
    assert document == {"config": {"command": "ent-sweep"}, "rows": 3, "T": [0.5]}


def test_result_rows_match_columns():
    stats = compute_stats([0.25, 1.0], 0.03)
    results = sweep_entanglement([3.0], [2], stats=stats)
    row = entanglement_row(results[0])
    assert len(row) == len(ENTANGLEMENT_COLUMNS)
    assert row[:3] == ["stats", 2, 3.0]
    stats_row = channel_stats_row("two-point", stats, [0.25, 1.0])
    assert len(stats_row) == len(CHANNEL_STATS_COLUMNS)
    assert stats_row[-2:] == pytest.approx([0.0, 6.0206], abs=1e-4)


def test_parse_plain_channel_file():
    channel = ChannelFileHelper(verbose=False).parse("# ensemble\n0.5\n\n0.25\n# trailing\n1.0\n", label="run")
    np.testing.assert_allclose(channel.samples, [0.5, 0.25, 1.0])
    assert channel.label == "run"
    assert channel.eps_A == 0.03


def test_parse_multi_column_channel_file():
    channel = ChannelFileHelper(eps_A=0.01, verbose=False).parse("T1,T2\n0.5,0.4\n0.3,0.2\n")
    assert channel.samples.shape == (2, 2)
    assert channel.n_columns == 2
    assert channel.eps_A == 0.01


def test_single_column_csv_is_flattened():
    channel = ChannelFileHelper(verbose=False).parse("T1\n0.5\n0.6\n")
    assert channel.samples.shape == (2,)


@pytest.mark.parametrize("text", ["", "# only comments\n", "T1,T3\n0.5,0.5\n", "T1,T2\n0.5\n", "0.5\n1.2\n",
                                  "0.0\n0.5\n", "T1\n"])
def test_malformed_channel_files(text):
    with pytest.raises(DomainError):
        ChannelFileHelper(verbose=False).parse(text)


def test_channel_file_write_then_read(tmp_path):
    helper = ChannelFileHelper(verbose=False)
    original = EmpiricalChannel(np.array([0.125, 0.5, 0.75]), label="x")
    path = helper.write(original, tmp_path / "ensemble.txt", comments=["config: {}"])
    assert path.read_text(encoding="utf-8").startswith("# config: {}\n0.125\n")
    again = helper.read(path, eps_A=0.0)
    np.testing.assert_array_equal(again.samples, original.samples)
    assert again.label == "ensemble"
    assert again.eps_A == 0.0


def test_multi_column_render():
    channel = EmpiricalChannel(np.array([[0.5, 0.25], [1.0, 0.75]]))
    assert ChannelFileHelper(verbose=False).render(channel) == "T1,T2\n0.5,0.25\n1,0.75\n"
