import csv
import json

import pytest

from a429ids import bus, evaluation as ev
from a429ids.bus import ReceiverLoad, TransmitterProfile
from a429ids.cli import main


@pytest.fixture(scope="module")
def scenario_path(tmp_path_factory):
    guarded = ev.BusSetup(tx=TransmitterProfile(), loads=(ReceiverLoad(cutoff_freq=1.2e6),))
    rogue = ev.BusSetup(
        tx=TransmitterProfile(
            hi_volts=10.4, lo_volts=-10.4, rise_time=1.85e-6, fall_time=1.85e-6
        ),
        loads=(ReceiverLoad(cutoff_freq=1.2e6),),
    )
    scenario = ev.Scenario(
        guarded=guarded, rogues=(rogue,), attack_kind="tx_switch",
        words_per_device=500, seed=70,
    )
    path = tmp_path_factory.mktemp("cli") / "scenario.json"
    ev.save_scenario(scenario, path)
    return path


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    return tmp_path_factory.mktemp("cli-out")


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_synth_writes_valid_trace(scenario_path, work):
    out = work / "train.bin"
    status = main([
        "synth", "--scenario", str(scenario_path), "--out", str(out), "--words", "40",
    ])
    assert status == 0
    trace = bus.read_trace(out)
    assert len(trace.word_starts) == 40
    assert trace.sample_rate == 5e6


def test_segment_command(scenario_path, work):
    out = work / "segments.csv"
    assert main(["segment", "--trace", str(work / "train.bin"), "--out", str(out)]) == 0
    rows = _read_csv(out)
    assert rows[0] == ["word_index", "segment_index", "segment_type", "start_index", "length"]
    assert len(rows) - 1 == 40 * 127


def test_features_command(scenario_path, work):
    out = work / "features.csv"
    assert main([
        "features", "--trace", str(work / "train.bin"),
        "--feature-set", "generic", "--out", str(out),
    ]) == 0
    rows = _read_csv(out)
    assert len(rows) - 1 == 40 * 127
    assert len(rows[1]) == 4 + 8  # metadata columns + 8 generic features


def test_train_and_run_roundtrip(scenario_path, work):
    model = work / "model.json"
    assert main([
        "train", "--trace", str(work / "train.bin"),
        "--feature-set", "generic", "--t-votes", "100", "--out", str(model),
    ]) == 0
    assert json.loads(model.read_text())["feature_set"] == "generic"

    # the detector run on its own training trace must stay silent
    run_out = work / "run_normal.csv"
    assert main([
        "run", "--model", str(model), "--trace", str(work / "train.bin"),
        "--t-suspicion", "20", "--out", str(run_out),
    ]) == 0
    rows = _read_csv(run_out)
    assert rows[0] == ["word_index", "normal_votes", "label", "counter_value", "alarmed"]
    assert len(rows) - 1 == 40
    assert all(row[4] == "false" for row in rows[1:])

    # a rogue trace must trip the counter
    rogue_trace = work / "rogue.bin"
    assert main([
        "synth", "--scenario", str(scenario_path), "--device", "rogue:0",
        "--out", str(rogue_trace), "--words", "40", "--seed", "3",
    ]) == 0
    run_rogue = work / "run_rogue.csv"
    assert main([
        "run", "--model", str(model), "--trace", str(rogue_trace),
        "--t-suspicion", "20", "--out", str(run_rogue),
    ]) == 0
    rows = _read_csv(run_rogue)
    assert rows[-1][4] == "true"


def test_eval_command(scenario_path, work):
    out = work / "report.json"
    status = main([
        "eval", "--scenario", str(scenario_path), "--feature-set", "generic",
        "--reps", "50", "--max-t-suspicion", "10", "--out", str(out),
    ])
    assert status == 0
    report = json.loads(out.read_text())
    assert report["eer"] == 0.0
    assert (work / "report_curves.csv").exists()
    assert (work / "report_counter_far.csv").exists()
    assert (work / "report_detection_time.csv").exists()
    rows = _read_csv(work / "report_curves.csv")
    assert len(rows) - 1 == 128


def test_markov_point_query(capsys):
    assert main([
        "markov", "--p", "0.6", "--t", "100", "--target", "0.99999", "--rate", "610",
    ]) == 0
    out = capsys.readouterr().out
    assert "1179 words" in out
    assert "1.93" in out  # about two seconds at 610 words/s


def test_markov_sweep(work):
    base = work / "markov.csv"
    assert main([
        "markov", "--p", "0.4", "--t", "12", "--out", str(base), "--p-list", "0.2,0.4",
    ]) == 0
    far_rows = _read_csv(work / "markov_flight_far.csv")
    assert len(far_rows) - 1 == 2 * 12
    time_rows = _read_csv(work / "markov_detect_time.csv")
    assert time_rows[0] == ["t_suspicion", "p", "seconds_to_target"]


def test_exit_codes(scenario_path, work, tmp_path):
    # missing scenario file -> config error
    assert main(["synth", "--scenario", "/nope.json", "--out", str(work / "x.bin")]) == 2
    # bad scenario content -> config error
    bad = tmp_path / "bad.json"
    bad.write_text('{"whatever": 1}')
    assert main(["synth", "--scenario", str(bad), "--out", str(work / "x.bin")]) == 2
    # corrupt trace file -> runtime error
    garbage = tmp_path / "garbage.bin"
    garbage.write_bytes(b"junk\x00\x01")
    assert main(["segment", "--trace", str(garbage), "--out", str(work / "y.csv")]) == 1
    # bad device spec -> config error
    assert main([
        "synth", "--scenario", str(scenario_path), "--device", "rogue:9",
        "--out", str(work / "x.bin"),
    ]) == 2
    # unknown feature set -> argparse rejects with SystemExit(2)
    with pytest.raises(SystemExit) as exc:
        main(["features", "--trace", str(work / "train.bin"),
              "--feature-set", "wavelet", "--out", str(work / "z.csv")])
    assert exc.value.code == 2
