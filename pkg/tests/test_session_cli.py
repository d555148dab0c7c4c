import json
import subprocess
import sys
from pathlib import Path

import pytest

from evtrial.core import OutcomePair
from evtrial.design import DesignAlternative
from evtrial.futility import FutilityConfig
from evtrial.session import (
    BatchFormatError,
    StateError,
    load_session,
    parse_batch_csv,
    save_session,
    session_new,
    session_summary,
    session_to_dict,
    session_update,
    session_update_batch,
)


def run_cli(*args, check=True):
    proc = subprocess.run(
        [sys.executable, "-m", "evtrial.cli", *args],
        capture_output=True,
        text=True,
    )
    if check and proc.returncode != 0:
        raise AssertionError(f"cli failed ({proc.returncode}): {proc.stderr}")
    return proc


def batch_csv(pairs, start=1):
    lines = ["pair_index,x_treatment,x_control"]
    for i, (x_t, x_c) in enumerate(pairs, start=start):
        lines.append(f"{i},{x_t},{x_c}")
    return "\n".join(lines) + "\n"


class TestSessionCore:
    def test_terminal_on_threshold(self):
        sess = session_new("t", DesignAlternative(0.45, 0.30, alpha=0.5), lam=0.5)
        # wealth 1.5^2 = 2.25 >= 1/0.5 at the second win
        sess, decision, consumed = session_update_batch(
            sess, [OutcomePair(1, 0)] * 5
        )
        assert decision == "reject_efficacy"
        assert consumed == 2
        assert sess.n == 2
        with pytest.raises(StateError):
            session_update(sess, OutcomePair(1, 0))

    def test_empty_batch_is_noop(self):
        sess = session_new("t", DesignAlternative(0.45, 0.30))
        sess2, decision, consumed = session_update_batch(sess, [])
        assert consumed == 0 and decision == "continue"
        assert sess2.decisions == ()

    def test_direction_lower_orientation(self):
        sess = session_new(
            "t", DesignAlternative(0.229, 0.257, direction="treatment_lower")
        )
        # a control event with no treatment event is favorable under "lower"
        sess, _ = session_update(sess, OutcomePair(0, 1))
        assert sess.efficacy.log_wealth > 0

    def test_futility_signal_terminates(self):
        sess = session_new(
            "t",
            DesignAlternative(0.45, 0.30),
            futility_config=FutilityConfig(0.1, 0.1, 0.5),
        )
        sess, decision, _ = session_update_batch(sess, [OutcomePair(0, 0)] * 100)
        assert decision in ("signal_futility_recip", "signal_futility_cs")
        assert sess.terminal == decision

    def test_replay_determinism(self, tmp_path):
        sess = session_new(
            "r",
            DesignAlternative(0.45, 0.30),
            futility_config=FutilityConfig(0.1, 0.1),
        )
        import numpy as np

        rng = np.random.default_rng(8)
        pairs = [
            OutcomePair(int(a), int(b))
            for a, b in zip(rng.random(80) < 0.45, rng.random(80) < 0.30)
        ]
        sess, _, _ = session_update_batch(sess, pairs)
        path = tmp_path / "s.json"
        save_session(sess, str(path))
        replayed = load_session(str(path))
        assert session_summary(replayed) == session_summary(sess)
        assert replayed.efficacy.log_wealth == sess.efficacy.log_wealth
        assert replayed.cs.sup_lo.tolist() == sess.cs.sup_lo.tolist()

    def test_session_document_schema(self, tmp_path):
        jsonschema = pytest.importorskip("jsonschema")
        import evtrial

        schema = json.loads(
            (Path(evtrial.__file__).parent / "schemas" / "session.schema.json").read_text()
        )
        sess = session_new("s", DesignAlternative(0.45, 0.30))
        sess, _, _ = session_update_batch(sess, [OutcomePair(1, 0), OutcomePair(0, 1)])
        jsonschema.validate(session_to_dict(sess), schema)


class TestBatchCsv:
    def test_round_trip(self):
        pairs = parse_batch_csv(batch_csv([(1, 0), (0, 1)]), start_index=1)
        assert [p.increment for p in pairs] == [1, -1]

    def test_missing_header(self):
        with pytest.raises(BatchFormatError):
            parse_batch_csv("1,1,0\n", start_index=1)

    def test_index_gap(self):
        text = "pair_index,x_treatment,x_control\n1,1,0\n3,0,1\n"
        with pytest.raises(BatchFormatError):
            parse_batch_csv(text, start_index=1)

    def test_index_overlap(self):
        with pytest.raises(BatchFormatError):
            parse_batch_csv(batch_csv([(1, 0)]), start_index=5)

    def test_bad_outcome_value(self):
        with pytest.raises(BatchFormatError):
            parse_batch_csv("pair_index,x_treatment,x_control\n1,2,0\n", start_index=1)


class TestCliDesign:
    def test_design_numbers(self):
        proc = run_cli("design", "--pt", "0.45", "--pc", "0.30", "--alpha", "0.025")
        doc = json.loads(proc.stdout)
        assert doc["lambda_star"] == pytest.approx(0.3125, abs=1e-9)
        assert doc["growth_rate"] == pytest.approx(0.0238, abs=1e-4)
        assert doc["expected_pairs"] == pytest.approx(155, abs=0.5)

    def test_design_null_warns(self):
        proc = run_cli("design", "--pt", "0.3", "--pc", "0.3")
        doc = json.loads(proc.stdout)
        assert doc["lambda_star"] == 0.0
        assert "no power" in doc["warning"]

    def test_design_validation_exit_2(self):
        proc = run_cli("design", "--pt", "1.2", "--pc", "0.3", check=False)
        assert proc.returncode == 2


class TestCliMonitor:
    def test_create_update_reject(self, tmp_path):
        session = tmp_path / "sess.json"
        batch = tmp_path / "batch.csv"
        batch.write_text(batch_csv([(1, 0)] * 30))
        proc = run_cli(
            "monitor", "--session", str(session), "--create",
            "--pt", "0.45", "--pc", "0.30", "--alpha", "0.025",
            "--batch", str(batch),
        )
        doc = json.loads(proc.stdout)
        assert doc["decision"] == "reject_efficacy"
        # wealth crosses 40 at the 14th straight win: 1.3125^14 > 40
        assert doc["n"] == 14

    def test_schema_violation_exit_3_session_untouched(self, tmp_path):
        session = tmp_path / "sess.json"
        run_cli("monitor", "--session", str(session), "--create")
        before = session.read_text()
        bad = tmp_path / "bad.csv"
        bad.write_text("pair_index,x_treatment,x_control\n7,1,0\n")
        proc = run_cli("monitor", "--session", str(session), "--batch", str(bad), check=False)
        assert proc.returncode == 3
        assert session.read_text() == before

    def test_continue_and_resume(self, tmp_path):
        session = tmp_path / "sess.json"
        b1 = tmp_path / "b1.csv"
        b1.write_text(batch_csv([(1, 1), (0, 0)]))
        run_cli("monitor", "--session", str(session), "--create", "--batch", str(b1))
        b2 = tmp_path / "b2.csv"
        b2.write_text(batch_csv([(1, 0)], start=3))
        proc = run_cli("monitor", "--session", str(session), "--batch", str(b2))
        doc = json.loads(proc.stdout)
        assert doc["n"] == 3
        assert doc["decision"] == "continue"


class TestCliSimulateCalibrate:
    def test_simulate_byte_identical(self, tmp_path):
        config = tmp_path / "c.json"
        config.write_text(json.dumps({
            "p_c": 0.3, "p_t_alt": 0.45, "reps": 400, "calibration_reps": 400,
            "rules": ["evalue", "gs"],
        }))
        a = run_cli("simulate", "--config", str(config), "--seed", "17")
        b = run_cli("simulate", "--config", str(config), "--seed", "17")
        assert a.stdout == b.stdout

    def test_simulate_requires_seed(self, tmp_path):
        config = tmp_path / "c.json"
        config.write_text(json.dumps({"p_c": 0.3, "p_t_alt": 0.45, "reps": 100}))
        proc = run_cli("simulate", "--config", str(config), check=False)
        assert proc.returncode == 2

    def test_simulate_csv_output(self, tmp_path):
        config = tmp_path / "c.json"
        out_csv = tmp_path / "out.csv"
        config.write_text(json.dumps({
            "p_c": 0.3, "p_t_alt": 0.45, "reps": 200, "calibration_reps": 200,
            "rules": ["naive_p"],
        }))
        run_cli("simulate", "--config", str(config), "--seed", "1",
                "--out-csv", str(out_csv))
        assert out_csv.read_text().startswith(
            "rule,null_rej,alt_rej,avg_n_null,avg_n_alt,se_null,se_alt"
        )

    def test_calibrate_requires_seed(self):
        proc = run_cli("calibrate", "--rule", "gs", check=False)
        assert proc.returncode == 2

    def test_calibrate_output_schema(self):
        jsonschema = pytest.importorskip("jsonschema")
        import evtrial

        proc = run_cli("calibrate", "--rule", "gs", "--looks", "10",
                       "--n-max", "100", "--reps", "2000", "--seed", "5")
        doc = json.loads(proc.stdout)
        schema = json.loads(
            (Path(evtrial.__file__).parent / "schemas" / "calibration.schema.json").read_text()
        )
        jsonschema.validate(doc, schema)


class TestCliPlatformHybrid:
    def test_platform_novick_no_rejections(self):
        proc = run_cli("platform", "--data", "novick", "--fdr", "0.05")
        doc = json.loads(proc.stdout)
        for row in doc["looks"]:
            assert row["ebh_rejections"] == []

    def test_platform_snapshot_schema(self):
        jsonschema = pytest.importorskip("jsonschema")
        import evtrial

        proc = run_cli("platform", "--data", "novick")
        doc = json.loads(proc.stdout)
        schema = json.loads(
            (Path(evtrial.__file__).parent / "schemas" / "platform_snapshot.schema.json").read_text()
        )
        jsonschema.validate(doc["final"], schema)

    def test_platform_export_matches_bundled(self, tmp_path):
        out = tmp_path / "novick.csv"
        run_cli("platform", "--data", "novick", "--export-csv", str(out))
        text = out.read_text()
        assert text.startswith("index,arm,outcome")
        proc = run_cli("platform", "--data", str(out))
        doc = json.loads(proc.stdout)
        assert doc["final"]["ebh_rejections"] == []

    def test_hybrid_demo(self):
        proc = run_cli("hybrid", "--stream", "demo")
        doc = json.loads(proc.stdout)
        assert len(doc["rows"]) == 20
        assert doc["rows"][0]["z"] == pytest.approx(1.952, abs=0.001)
        assert doc["rows"][4]["e_reject"] is True
        assert doc["rows"][4]["gs_reject"] is False
