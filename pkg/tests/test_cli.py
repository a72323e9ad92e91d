import csv
import json
import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from coverplan.cli import main
from coverplan.geometry import EnvironmentMap, load_map, rectangle, save_map
from coverplan.imaging import GrayImage, write_pgm
from coverplan.trajectory import load_trajectory


@pytest.fixture
def room(tmp_path):
    path = tmp_path / "room.json"
    save_map(EnvironmentMap(rectangle(0, 0, 10, 8), (rectangle(4, 3, 6, 5),), 1.0), path)
    return path


@pytest.mark.parametrize("algo", ["tsp", "mst-square", "mst-hex"])
def test_plan_then_score(tmp_path, room, algo, capsys):
    out = tmp_path / "traj.json"
    assert main(["plan", "--algo", algo, "--map", str(room), "--out", str(out)]) == 0
    traj = load_trajectory(out)
    assert traj.closed and traj.meta["plan_time_s"] >= 0
    capsys.readouterr()
    assert main(["score", "--traj", str(out), "--map", str(room)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert 0 <= report["uar_percent"] <= 100
    assert report["path_length"] > 0


def test_plan_ocp_small(tmp_path, room):
    out = tmp_path / "ocp.json"
    argv = ["plan", "--algo", "ocp", "--map", str(room), "--out", str(out), "--N", "40", "--M", "40", "--max-iters", "20"]
    assert main(argv) == 0
    traj = load_trajectory(out)
    assert len(traj.points) == 41 and traj.timestamps is not None


def test_unknown_algorithm_is_invalid_input(tmp_path, room):
    with pytest.raises(SystemExit) as exc:
        main(["plan", "--algo", "dfs", "--map", str(room), "--out", str(tmp_path / "x.json")])
    assert exc.value.code == 1


def test_missing_and_malformed_inputs(tmp_path, room):
    assert main(["plan", "--algo", "tsp", "--map", str(tmp_path / "nope.json"), "--out", str(tmp_path / "x.json")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text('{"boundary": [[0, 0], [1, 0]]}')
    assert main(["plan", "--algo", "tsp", "--map", str(bad), "--out", str(tmp_path / "x.json")]) == 1
    assert main(["score", "--traj", str(bad), "--map", str(room)]) == 1


def test_planner_failure_exit_code(tmp_path):
    tiny = tmp_path / "tiny.json"
    save_map(EnvironmentMap(rectangle(0, 0, 1, 1), (), 1.0), tiny)
    assert main(["plan", "--algo", "mst-square", "--map", str(tiny), "--out", str(tmp_path / "x.json")]) == 2


def test_genmap_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["genmap", "--seed", "7", "--out", str(a)]) == 0
    assert main(["genmap", "--seed", "7", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert 2 <= len(load_map(a).obstacles) <= 4


def test_bench_writes_tables(tmp_path):
    config = tmp_path / "bench.json"
    config.write_text(json.dumps({"domain_size": 10.0, "obstacle_count_range": [1, 1], "obstacle_scale": 1.5}))
    out_dir = tmp_path / "out"
    argv = ["bench", "--config", str(config), "--samples", "1", "--algos", "tsp,mst-square", "--out-dir", str(out_dir)]
    assert main(argv) == 0
    rows = list(csv.DictReader((out_dir / "bench.csv").open()))
    assert [r["algorithm"] for r in rows] == ["tsp", "mst-square"]
    assert (out_dir / "summary.csv").exists()


def test_bench_rejects_bad_config(tmp_path):
    assert main(["bench", "--algos", "tsp,dfs", "--out-dir", str(tmp_path)]) == 1
    config = tmp_path / "bad.json"
    config.write_text('{"no_such_field": 3}')
    assert main(["bench", "--config", str(config), "--out-dir", str(tmp_path)]) == 1


def test_extract_rectangle(tmp_path):
    px = np.full((60, 80), 255, dtype=np.uint8)
    px[10:50, 20:70] = 0
    image = tmp_path / "map.pgm"
    write_pgm(GrayImage(px), image)
    out = tmp_path / "map.json"
    assert main(["extract", "--image", str(image), "--out", str(out), "--scale", "0.5"]) == 0
    assert load_map(out).boundary.area == pytest.approx(25 * 20, rel=0.02)


def test_extract_rejects_non_pgm(tmp_path):
    image = tmp_path / "map.png"
    image.write_bytes(b"\x89PNG\r\n\x1a\n")
    assert main(["extract", "--image", str(image), "--out", str(tmp_path / "m.json")]) == 1


def test_render_svg(tmp_path, room):
    traj = tmp_path / "traj.json"
    assert main(["plan", "--algo", "mst-square", "--map", str(room), "--out", str(traj)]) == 0
    svg = tmp_path / "room.svg"
    assert main(["render", "--map", str(room), "--traj", str(traj), "--out", str(svg), "--swath"]) == 0
    assert ET.parse(svg).getroot().tag.endswith("svg")
    assert main(["render", "--map", str(room), "--out", str(tmp_path / "no" / "x.svg")]) == 1


def test_module_entry_point(room, tmp_path):
    out = tmp_path / "t.json"
    proc = subprocess.run(
        [sys.executable, "-m", "coverplan", "plan", "--algo", "tsp", "--map", str(room), "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert out.exists()
