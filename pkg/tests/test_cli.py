"""End-to-end command line flows on temporary directories."""

import json

import numpy as np
import pytest

from fgcluster import __version__
from fgcluster.cli import main
from fgcluster.instance import load_instance

from test_constraints import TOY_DUMP


def _synth(tmp_path, name="inst.json", extra=()):
    out = tmp_path / name
    rc = main(["synth", "--seed", "7", "--out", str(out),
               "--separation", "4.0", *extra])
    assert rc == 0
    return out


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.strip() == __version__


def test_toy_dump_matches_worked_example(capsys):
    assert main(["toy", "--dump"]) == 0
    assert capsys.readouterr().out == TOY_DUMP


def test_toy_out_writes_loadable_instance(tmp_path, capsys):
    assert main(["toy", "--out", str(tmp_path)]) == 0
    inst = load_instance(tmp_path / "toy.json")
    assert inst.n_sp_total == 5
    text = (tmp_path / "toy.constraints.txt").read_text()
    assert text == TOY_DUMP


def test_synth_then_validate(tmp_path, capsys):
    path = _synth(tmp_path)
    assert main(["validate", str(path)]) == 0
    out = capsys.readouterr().out
    assert "ok" in out


def test_validate_flags_corrupt_sidecar(tmp_path, capsys):
    path = _synth(tmp_path)
    sidecar = tmp_path / "inst.sp_positions.fgcm"
    sidecar.write_bytes(sidecar.read_bytes()[:-4])
    assert main(["validate", str(path)]) == 1
    assert "INVALID" in capsys.readouterr().out


def test_solve_writes_results(tmp_path, capsys):
    path = _synth(tmp_path)
    assert main(["solve", str(path)]) == 0
    results = json.loads((tmp_path / "inst.results.json").read_text())
    assert results["format_version"] == 1
    assert results["tool_version"] == __version__
    assert results["solution"]["status"] == "optimal"
    assert results["solution"]["objective"] == pytest.approx(
        results["solution"]["objective"])
    inst = load_instance(path)
    assert len(results["selected_boxes"]) == inst.n_frames
    assert len(results["masks"]) == inst.n_frames
    v = np.asarray(results["solution"]["v"])
    assert v.shape == (inst.n_sp_total + inst.m_box_total,)
    assert "residual_trace" in results


def test_solve_then_eval(tmp_path, capsys):
    path = _synth(tmp_path)
    assert main(["solve", str(path)]) == 0
    results = tmp_path / "inst.results.json"
    report_path = tmp_path / "report.json"
    assert main(["eval", str(results), str(path),
                 "--out", str(report_path)]) == 0
    report = json.loads(report_path.read_text())
    agg = report["aggregates"]
    assert agg["mean_iou_mask"] is not None
    assert 0.0 <= agg["mean_iou_mask"] <= 1.0


def test_eval_prints_to_stdout_by_default(tmp_path, capsys):
    path = _synth(tmp_path)
    main(["solve", str(path)])
    capsys.readouterr()
    assert main(["eval", str(tmp_path / "inst.results.json"), str(path)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert "aggregates" in report


def test_solve_records_ablation_and_config(tmp_path, capsys):
    path = _synth(tmp_path)
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps({"hyper": {"kappa": 2.5}, "mask_in_box": True}))
    assert main(["solve", str(path), "--config", str(cfg),
                 "--ablate", "seg-only"]) == 0
    results = json.loads((tmp_path / "inst.results.json").read_text())
    assert results["config"]["ablate"] == "seg-only"
    assert results["config"]["mask_in_box"] is True
    # the ablation zeroes the histogram weight even though the config set it
    assert results["config"]["hyper"]["kappa"] == 0.0
    assert results["config"]["hyper"]["lambda"] == 0.0


def test_solver_flags_reach_results(tmp_path):
    path = _synth(tmp_path)
    assert main(["solve", str(path), "--seed", "9",
                 "--max-iter", "5000"]) == 0
    results = json.loads((tmp_path / "inst.results.json").read_text())
    assert results["config"]["solver"]["seed"] == 9
    assert results["config"]["solver"]["max_iter"] == 5000


def test_synth_spec_file_and_flag_overrides(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"n_frames": 3, "separation": 4.0}))
    out = tmp_path / "multi.json"
    assert main(["synth", "--spec", str(spec), "--seed", "2",
                 "--out", str(out), "--frames", "2"]) == 0
    inst = load_instance(out)
    assert inst.n_frames == 2


def test_missing_instance_reports_error(tmp_path, capsys):
    assert main(["validate", str(tmp_path / "nope.json")]) == 1
    assert "INVALID" in capsys.readouterr().out
