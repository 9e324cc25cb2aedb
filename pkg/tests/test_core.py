import csv

import numpy as np
import pytest

from shapealign.core import (
    Configuration,
    SimilarityTransform,
    apply_similarity,
    centroid,
    compose,
    euler_from_rotation,
    is_rotation_matrix,
    random_rotation,
    read_configuration_csv,
    rotation_from_euler,
    write_configuration_csv,
)
from shapealign.datasets import rat_csv_path


def elementary_product(t12, t13, t23):
    # hand-built elementary rotations, multiplied directly
    rz = np.array(
        [[np.cos(t12), -np.sin(t12), 0], [np.sin(t12), np.cos(t12), 0], [0, 0, 1]]
    )
    ry = np.array(
        [[np.cos(t13), 0, np.sin(t13)], [0, 1, 0], [-np.sin(t13), 0, np.cos(t13)]]
    )
    rx = np.array(
        [[1, 0, 0], [0, np.cos(t23), -np.sin(t23)], [0, np.sin(t23), np.cos(t23)]]
    )
    return rz @ ry @ rx


class TestRotationFromEuler:
    def test_identity_2d(self):
        assert np.allclose(rotation_from_euler(0.0), np.eye(2))

    def test_quarter_turn_2d(self):
        expected = np.array([[0.0, -1.0], [1.0, 0.0]])
        assert np.allclose(rotation_from_euler(np.pi / 2), expected, atol=1e-15)

    def test_matches_elementary_product_3d(self):
        got = rotation_from_euler((0.3, 0.2, 0.1))
        want = elementary_product(0.3, 0.2, 0.1)
        assert np.allclose(got, want, atol=1e-14)
        assert is_rotation_matrix(got)

    def test_random_angles_give_valid_rotations(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            t12, t23 = rng.uniform(-np.pi, np.pi, 2)
            t13 = rng.uniform(-np.pi / 2 + 1e-6, np.pi / 2 - 1e-6)
            assert is_rotation_matrix(rotation_from_euler((t12, t13, t23)))

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            rotation_from_euler(np.nan)
        with pytest.raises(ValueError):
            rotation_from_euler((0.1, np.inf, 0.2))

    def test_rejects_gimbal_pitch(self):
        with pytest.raises(ValueError):
            rotation_from_euler((0.1, np.pi / 2, 0.2))

    def test_euler_roundtrip(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            rot = random_rotation(3, rng)
            if abs(rot[2, 0]) > 1 - 1e-6:
                continue
            assert np.allclose(rotation_from_euler(euler_from_rotation(rot)), rot, atol=1e-10)
        rot2 = random_rotation(2, rng)
        assert np.allclose(rotation_from_euler(euler_from_rotation(rot2)[0]), rot2, atol=1e-12)


class TestApplySimilarity:
    def test_identity(self):
        cfg = Configuration("c", [[1.0, 2.0], [3.0, 4.0]], seq=[1, 5])
        out = apply_similarity(cfg, SimilarityTransform.identity(2))
        assert np.allclose(out.points, cfg.points)
        assert np.array_equal(out.seq, cfg.seq)

    def test_pure_scaling(self):
        cfg = Configuration("c", [[1.0, 1.0, 1.0]])
        t = SimilarityTransform(np.eye(3), np.zeros(3), 2.0)
        assert np.allclose(apply_similarity(cfg, t).points, [[2.0, 2.0, 2.0]])

    def test_rotation_plus_translation(self):
        cfg = Configuration("c", [[1.0, 0.0]])
        t = SimilarityTransform(rotation_from_euler(np.pi / 2), [1.0, 0.0], 1.0)
        assert np.allclose(apply_similarity(cfg, t).points, [[1.0, 1.0]], atol=1e-15)

    def test_dimension_mismatch(self):
        cfg = Configuration("c", [[1.0, 0.0]])
        with pytest.raises(ValueError):
            apply_similarity(cfg, SimilarityTransform.identity(3))

    def test_group_action_composition(self):
        rng = np.random.default_rng(3)
        for dim in (2, 3):
            cfg = Configuration("c", rng.standard_normal((6, dim)))
            for _ in range(20):
                t1 = SimilarityTransform(
                    random_rotation(dim, rng), rng.standard_normal(dim), rng.uniform(0.2, 3.0)
                )
                t2 = SimilarityTransform(
                    random_rotation(dim, rng), rng.standard_normal(dim), rng.uniform(0.2, 3.0)
                )
                via_two = apply_similarity(apply_similarity(cfg, t1), t2)
                via_one = apply_similarity(cfg, compose(t2, t1))
                assert np.allclose(via_two.points, via_one.points, atol=1e-10)

    def test_centroid_equivariance(self):
        rng = np.random.default_rng(5)
        cfg = Configuration("c", rng.standard_normal((7, 3)))
        t = SimilarityTransform(random_rotation(3, rng), [1.0, -2.0, 0.5], 1.7)
        lhs = centroid(apply_similarity(cfg, t))
        rhs = t.scale * t.rotation @ centroid(cfg) + t.translation
        assert np.allclose(lhs, rhs, atol=1e-10)


class TestCentroid:
    def test_single_point(self):
        assert np.allclose(centroid(Configuration("c", [[2.0, 3.0]])), [2.0, 3.0])

    def test_midpoint(self):
        cfg = Configuration("c", [[0.0, 0.0], [2.0, 0.0]])
        assert np.allclose(centroid(cfg), [1.0, 0.0])

    def test_empty_raises(self):
        cfg = Configuration("c", np.empty((0, 2)))
        with pytest.raises(ValueError):
            centroid(cfg)

    def test_rat_t1_against_plain_csv_average(self):
        # independent oracle: read the bundled file with the csv module
        with open(rat_csv_path(1), newline="") as fh:
            rows = list(csv.reader(fh))[1:]
        pts = np.array([[float(r[3]), float(r[4])] for r in rows])
        assert pts.shape == (8, 2)
        cfg = read_configuration_csv(rat_csv_path(1))
        assert np.allclose(centroid(cfg), pts.sum(axis=0) / 8.0, atol=1e-12)


class TestConfigurationValidation:
    def test_seq_must_increase(self):
        with pytest.raises(ValueError):
            Configuration("c", [[0.0, 0.0], [1.0, 1.0]], seq=[2, 1])

    def test_group_values(self):
        with pytest.raises(ValueError):
            Configuration("c", [[0.0, 0.0]], group=[2])

    def test_points_immutable(self):
        cfg = Configuration("c", [[0.0, 1.0]])
        with pytest.raises(ValueError):
            cfg.points[0, 0] = 5.0

    def test_rejects_bad_dim(self):
        with pytest.raises(ValueError):
            Configuration("c", np.zeros((3, 4)))


class TestConfigurationCsv:
    def test_roundtrip_exact(self, tmp_path):
        rng = np.random.default_rng(9)
        cfg = Configuration(
            "abc", rng.standard_normal((5, 3)) * 13.7, seq=[1, 4, 6, 7, 9], group=[0, 1, 1, 0, 1]
        )
        path = tmp_path / "cfg.csv"
        write_configuration_csv(cfg, path)
        back = read_configuration_csv(path)
        assert back.id == cfg.id
        assert np.array_equal(back.points, cfg.points)
        assert np.array_equal(back.seq, cfg.seq)
        assert np.array_equal(back.group, cfg.group)

    def test_missing_optional_columns(self, tmp_path):
        cfg = Configuration("q", [[0.5, 1.5]])
        path = tmp_path / "cfg.csv"
        write_configuration_csv(cfg, path)
        back = read_configuration_csv(path)
        assert back.seq is None and back.group is None

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n")
        with pytest.raises(ValueError):
            read_configuration_csv(path)

    def test_mixed_ids_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("id,seq,group,x,y\nA,,,0,0\nB,,,1,1\n")
        with pytest.raises(ValueError):
            read_configuration_csv(path)
