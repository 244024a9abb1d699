import numpy as np
import pytest

from lanekit.geometry import build_custom_grid, build_uniform_grid
from lanekit.io import PredictionFrame
from lanekit.metrics import evaluate
from lanekit.nms import Keypoint, ProposalSet
from lanekit.pipeline import infer_nms_thresholds, run_pipeline
from lanekit.synthetic import SceneSpec, generate_scene


def grid12():
    return build_uniform_grid(rows=12, cols=32, y_range=(3.0, 58.0), x_range=(-8.0, 8.0))


def chain_frame(xs, ys, adjacency):
    kps = tuple(Keypoint(grid_index=(i, 0), x=float(x), y=float(y), fg_score=0.9)
                for i, (x, y) in enumerate(zip(xs, ys)))
    return PredictionFrame(frame_id="t", keypoints=ProposalSet(kps, repeats_n=1),
                           adjacency=adjacency)


class TestInferThresholds:
    def test_uniform_grid_proposals(self):
        grid = grid12()
        _, frame = generate_scene(SceneSpec(seed=0, lane_count=3), grid)
        tx, ty = infer_nms_thresholds(frame.keypoints)
        spacing = grid.positions[0, 1, 0] - grid.positions[0, 0, 0]
        assert tx == pytest.approx(2.0 * spacing)
        assert ty == pytest.approx(0.5 * grid.row_spacing.min())

    def test_single_row_falls_back(self):
        kps = (Keypoint(grid_index=(0, 0), x=0.0, y=5.0, fg_score=0.9),
               Keypoint(grid_index=(0, 1), x=3.0, y=5.0, fg_score=0.9))
        tx, ty = infer_nms_thresholds(ProposalSet(kps, repeats_n=1))
        assert tx == pytest.approx(6.0)
        assert ty == pytest.approx(1.0)


class TestRunPipeline:
    def test_noiseless_closure_perfect_f1(self):
        grid = grid12()
        for seed in range(8):
            lanes = 2 + seed % 3
            gt, frame = generate_scene(SceneSpec(seed=seed, lane_count=lanes), grid)
            result = run_pipeline(frame)
            assert len(result.lanes) == lanes
            for report in evaluate(list(result.lanes), gt):
                assert report.f1 == 1.0
                assert report.x_err_near == pytest.approx(0.0, abs=1e-9)

    def test_closure_on_custom_grid(self):
        grid = build_custom_grid(rows=14, cols=24)
        gt, frame = generate_scene(SceneSpec(seed=5, lane_count=3), grid)
        result = run_pipeline(frame)
        assert len(result.lanes) == 3
        for report in evaluate(list(result.lanes), gt):
            assert report.f1 == 1.0

    def test_nms_collapses_duplicate_proposals(self):
        grid = grid12()
        _, frame = generate_scene(SceneSpec(seed=2, lane_count=3,
                                            proposals_per_target=4), grid)
        result = run_pipeline(frame)
        assert len(result.kept) == 3 * grid.rows
        assert np.all(np.diff(result.kept_indices) > 0)

    def test_kept_set_matches_indices(self):
        grid = grid12()
        _, frame = generate_scene(SceneSpec(seed=3, lane_count=2, sigma_x=0.1), grid)
        result = run_pipeline(frame)
        for idx, kp in zip(result.kept_indices, result.kept):
            assert frame.keypoints[idx] is kp

    def test_min_lane_points_filters_short_chains(self):
        adjacency = np.zeros((5, 5))
        adjacency[0, 1] = 1.0                    # 2-point chain
        adjacency[2, 3] = adjacency[3, 4] = 1.0  # 3-point chain
        frame = chain_frame([0, 0, 4, 4, 4], [5, 10, 5, 10, 15], adjacency)
        short = run_pipeline(frame, thresh_x=1.0, thresh_y=1.0, min_lane_points=3)
        assert len(short.lanes) == 1
        assert len(short.lanes[0].path) == 3
        both = run_pipeline(frame, thresh_x=1.0, thresh_y=1.0, min_lane_points=2)
        assert len(both.lanes) == 2

    def test_explicit_thresholds_override_inference(self):
        grid = grid12()
        _, frame = generate_scene(SceneSpec(seed=4, lane_count=2), grid)
        wide = run_pipeline(frame, thresh_x=50.0, thresh_y=0.1)
        auto = run_pipeline(frame)
        assert len(wide.kept) < len(auto.kept)

    def test_survives_dropout_smoke(self):
        grid = grid12()
        gt, frame = generate_scene(SceneSpec(seed=6, lane_count=3, dropout_p=0.2,
                                             sigma_x=0.05), grid)
        result = run_pipeline(frame)
        assert len(result.lanes) >= 3
        report = evaluate(list(result.lanes), gt, thresholds=(1.5,))[0]
        assert report.recall > 0.5
