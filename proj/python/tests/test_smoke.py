import json
import math

import numpy as np
import pytest

import geodet


def test_ply_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    pos = rng.uniform(-2, 2, size=(50, 3)).astype(np.float32).astype(np.float64)
    col = rng.integers(0, 256, size=(50, 3)) / 255.0
    path = tmp_path / "c.ply"
    geodet.write_ply(str(path), pos, col)
    p2, c2 = geodet.read_ply(str(path))
    assert np.array_equal(p2, pos)
    assert np.array_equal(c2, col)


def test_missing_file_raises_io_error(tmp_path):
    with pytest.raises(geodet.IoError):
        geodet.read_ply(str(tmp_path / "nope.ply"))


def test_truncated_ply_is_parse_error(tmp_path):
    path = tmp_path / "t.ply"
    path.write_bytes(b"ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\n"
                     b"property float y\nproperty float z\nend_header\n0 0 0\n")
    with pytest.raises(geodet.ParseError):
        geodet.read_ply(str(path))


def test_geometry_weights_match_numpy():
    rng = np.random.default_rng(5)
    pos = rng.normal(size=(40, 3))
    out = geodet.geometry_weights(pos, alpha=2.0)
    d = np.linalg.norm(pos - pos.mean(axis=0), axis=1)
    dn = (d - d.min()) / (d.max() - d.min())
    assert np.allclose(out["weights"], np.exp(-2.0 * dn), atol=1e-12)


def test_bad_alpha_is_config_error():
    with pytest.raises(geodet.ConfigError):
        geodet.geometry_weights(np.zeros((2, 3)), alpha=0.0)


def test_gating_and_scatter():
    coeff = geodet.gating_coefficients(np.full(4, 0.1))
    assert np.allclose(coeff, 1.0 / (1.0 + math.exp(-0.1)))
    feats = np.array([[1.0, -1.0], [3.0, 2.0], [5.0, 0.0]])
    labels = [7, 7, 2]
    mean = geodet.scatter_mean(labels, feats)
    vals, arg = geodet.scatter_max(labels, feats)
    assert np.allclose(mean, [[2.0, 0.5], [5.0, 0.0]])
    assert np.allclose(vals, [[3.0, 2.0], [5.0, 0.0]])
    assert arg.tolist() == [[1, 1], [2, 2]]


def test_voxel_clusters():
    pos = np.array([[0.99, 0, 0], [1.01, 0, 0], [0.5, 0.2, 0.1]])
    assert geodet.cluster_voxel_grid(pos, 1.0) == [0, 1, 0]


def test_iou_and_diou():
    one = np.ones(3)
    assert geodet.iou_3d(np.zeros(3), one, np.array([0.5, 0, 0]), one) == pytest.approx(1.0 / 3.0, abs=1e-12)
    assert geodet.diou_loss(np.zeros(3), one, np.zeros(3), one) == pytest.approx(0.0, abs=1e-12)


def test_assignment_and_ap():
    cost = np.array([[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]])
    assert geodet.solve_assignment(cost) == [(0, 1), (1, 0), (2, 2)]
    assert geodet.average_precision([True, False, True], 2) == pytest.approx(0.5 + 0.5 * (2.0 / 3.0))


def test_end_to_end_tiny_run(tmp_path):
    names = geodet.generate_suite(str(tmp_path), scenes=2, seed=11, points_per_object=60, clutter_density=0.3)
    assert names == ["scene_000", "scene_001"]
    out = geodet.train_and_evaluate(str(tmp_path), epochs=3, channels=8, hidden=8, layers=1, voxel_size=0.5)
    assert len(out["loss_trace"]) == 3
    assert all(math.isfinite(v) for v in out["loss_trace"])
    report = json.loads(out["report"])
    assert "mAP25" in report and "mAP50" in report
    gt = (tmp_path / "gt.json").read_text()
    assert json.loads(geodet.evaluate(out["detections"], gt)) == report


def test_unknown_option_rejected(tmp_path):
    geodet.generate_suite(str(tmp_path), scenes=1, seed=1)
    with pytest.raises(geodet.ConfigError):
        geodet.train_and_evaluate(str(tmp_path), epochs=1, momentum=0.9)
