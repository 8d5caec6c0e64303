import json
import math
import subprocess
import sys

import numpy as np
import pytest
from PIL import Image

from scaleaug.cli import main
from scaleaug.policy import search_space_cardinality, serialize_policy, searched_policy
from test_dataset import make_dataset


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def stats_doc(after_small=0.2):
    return {"losses": {"small": 0, "middle": 0, "large": 3},
            "ap_before": {"small": 0.4, "middle": 0.4, "large": 0.4},
            "ap_after": {"small": after_small, "middle": 0.4, "large": 0.4}}


def test_space_size(capsys):
    code, out, _ = run(capsys, "space-size")
    assert code == 0 and int(out) == search_space_cardinality() == 1296 * 62208 ** 5 * 1000


def test_metric(capsys, tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps(stats_doc()))
    code, out, _ = run(capsys, "metric", "--stats", str(p))
    assert code == 0
    assert json.loads(out)["value"] == pytest.approx(2 * math.sqrt(2))
    p.write_text(json.dumps({"losses": {}}))
    code, _, err = run(capsys, "metric", "--stats", str(p))
    assert code == 2 and "losses.small" in err


def test_metric_missing_file(capsys, tmp_path):
    assert run(capsys, "metric", "--stats", str(tmp_path / "nope.json"))[0] == 2


@pytest.mark.parametrize("text", ["x,y\n1,1\n2,3\n3,2\n4,4\n", '{"xs": [1,2,3,4], "ys": [1,3,2,4]}',
                                  "[[1,1],[2,3],[3,2],[4,4]]"])
def test_pearson(capsys, tmp_path, text):
    p = tmp_path / "pairs"
    p.write_text(text)
    code, out, _ = run(capsys, "pearson", "--pairs", str(p))
    assert code == 0 and float(out) == pytest.approx(0.8, abs=1e-9)


def test_pearson_constant_is_data_error(capsys, tmp_path):
    p = tmp_path / "pairs.csv"
    p.write_text("1,1\n1,2\n1,3\n")
    assert run(capsys, "pearson", "--pairs", str(p))[0] == 2


def test_gaussmap(capsys, tmp_path):
    png = tmp_path / "g.png"
    code, out, _ = run(capsys, "gaussmap", "--box", "40.5,50.5,20,10", "--image", "100,80", "--ratio", "1.0",
                       "--out", str(png))
    assert code == 0
    info = json.loads(out)
    assert info["area"] == pytest.approx(200, rel=0.02)
    with Image.open(png) as im:
        a = np.asarray(im)
    assert a.shape == (100, 80) and a.max() == 255


def test_gaussmap_bad_args(capsys, tmp_path):
    assert run(capsys, "gaussmap", "--box", "1,2,3", "--image", "10,10", "--ratio", "1",
               "--out", str(tmp_path / "x.png"))[0] == 1
    assert run(capsys, "gaussmap", "--box", "5,5,0,3", "--image", "10,10", "--ratio", "1",
               "--out", str(tmp_path / "x.png"))[0] == 2


def test_policy_searched_and_validate(capsys, tmp_path):
    code, out, _ = run(capsys, "policy", "searched")
    assert code == 0 and out == serialize_policy(searched_policy())
    p = tmp_path / "p.json"
    p.write_text(out)
    code, out, _ = run(capsys, "policy", "validate", str(p))
    info = json.loads(out)
    assert code == 0 and info["valid"] and info["p_original"] == pytest.approx(0.4)
    p.write_text('{"zoom_in": 3}')
    code, _, err = run(capsys, "policy", "validate", str(p))
    assert code == 2 and err


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as e:
        main([])
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        main(["metric"])
    assert e.value.code == 1
    assert run(capsys, "search")[0] == 1


def test_apply(capsys, tmp_path):
    ann, imgs = make_dataset(tmp_path / "in", n=3)
    pol = tmp_path / "pol.json"
    pol.write_text(serialize_policy(searched_policy()))
    code, out, _ = run(capsys, "apply", "--policy", str(pol), "--annotations", str(ann), "--images", str(imgs),
                       "--out", str(tmp_path / "out"), "--seed", "3")
    rep = json.loads(out)
    assert code == 0 and rep["images_processed"] == 3
    assert json.loads((tmp_path / "out/report.json").read_text()) == rep
    ann.write_text('{"images": [], "annotations": [{"image_id": 1, "bbox": [0,0,1,1]}]}')
    assert run(capsys, "apply", "--policy", str(pol), "--annotations", str(ann), "--images", str(imgs),
               "--out", str(tmp_path / "out2"))[0] == 2


def test_search_surrogate(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"population_size": 10, "top_k": 3, "iterations": 3, "seed": 1}))
    log, best = tmp_path / "log.jsonl", tmp_path / "best.json"
    code, out, _ = run(capsys, "search", "--config", str(cfg), "--surrogate-target-seed", "4",
                       "--out", str(log), "--best-policy", str(best))
    info = json.loads(out)
    assert code == 0 and info["evaluations"] == 30
    assert len(log.read_text().splitlines()) == 30
    assert json.loads(best.read_text())


def test_search_external_evaluator_errors(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"population_size": 4, "top_k": 2, "iterations": 2}))
    code, _, err = run(capsys, "search", "--config", str(cfg), "--evaluator-cmd", "false {policy} {stats}")
    assert code == 3 and "aborted" in err


def test_search_external_evaluator_ok(capsys, tmp_path):
    script = tmp_path / "ev.py"
    script.write_text("import json, sys\njson.dump(" + repr(stats_doc(0.3)) + ", open(sys.argv[2], 'w'))\n")
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"population_size": 4, "top_k": 2, "iterations": 2}))
    code, out, _ = run(capsys, "search", "--config", str(cfg),
                       "--evaluator-cmd", f"{sys.executable} {script} {{policy}} {{stats}}")
    assert code == 0 and json.loads(out)["evaluations"] == 8


def test_console_script_entry():
    r = subprocess.run([sys.executable, "-m", "scaleaug.cli", "space-size", "--verbose"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "1.2074e+30" in r.stdout
