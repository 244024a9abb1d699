"""BEV anchor lattices and ground-plane <-> image projection.

COORDINATE CONVENTIONS
======================
Ego / BEV frame (right-handed):
  - Origin: on the ground under the ego vehicle
  - x: lateral, positive to the right, 0 at the vehicle midline
  - y: longitudinal, positive forward
  - z: up; the flat-ground assumption places lanes at z = ground_height

Camera frame (standard computer vision):
  - x: right in the image, y: down, z: forward along the optical axis

Image frame:
  - (u, v) pixels, origin at the top-left, u right, v down

A ``CameraModel`` holds the 3x3 intrinsic matrix and the 4x4 rigid transform
taking ego-frame points to camera-frame points.  Projection of a BEV anchor
``(x, y)`` at height ``z`` is::

    p_cam = extrinsic @ [x, y, z, 1]
    [u, v, 1] ~ intrinsic @ p_cam[:3]        (perspective division by depth)

Anchor grids come in two flavors:

* ``build_uniform_grid``   -- equal spacing on both axes.
* ``build_custom_grid``    -- row spacing grows linearly from near to far and
  the lateral span widens from half-width near the vehicle to full width at
  the farthest row.  Projected into the image this packs sample points more
  densely close to the vehicle, where a uniform lattice is sparsest.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NoGroundIntersection

# Camera-frame depths at or below this are treated as behind the camera.
MIN_DEPTH_M = 1e-6


@dataclass(frozen=True, eq=False)
class CameraModel:
    """Pinhole camera: intrinsics, ego->camera extrinsics, image size (h, w)."""

    intrinsic: np.ndarray
    extrinsic: np.ndarray
    image_size: tuple[int, int]

    def __post_init__(self):
        K = np.asarray(self.intrinsic, dtype=float)
        E = np.asarray(self.extrinsic, dtype=float)
        if K.shape != (3, 3):
            raise ValueError(f"intrinsic must be 3x3, got {K.shape}")
        if E.shape != (4, 4):
            raise ValueError(f"extrinsic must be 4x4, got {E.shape}")
        if not np.allclose(K[np.tril_indices(3, -1)], 0.0):
            raise ValueError("intrinsic must be upper-triangular")
        if K[0, 0] <= 0 or K[1, 1] <= 0:
            raise ValueError("focal lengths must be positive")
        R = E[:3, :3]
        if not np.allclose(R @ R.T, np.eye(3), atol=1e-6):
            raise ValueError("extrinsic rotation block is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > 1e-6:
            raise ValueError("extrinsic rotation block must have det +1")
        object.__setattr__(self, "intrinsic", K)
        object.__setattr__(self, "extrinsic", E)
        object.__setattr__(self, "image_size", (int(self.image_size[0]), int(self.image_size[1])))

    @property
    def rotation(self):
        return self.extrinsic[:3, :3]

    @property
    def translation(self):
        return self.extrinsic[:3, 3]

    @property
    def center_ego(self):
        """Camera optical center expressed in the ego frame."""
        return -self.rotation.T @ self.translation


# Axis permutation taking ego (x right, y forward, z up) to camera
# (x right, y down, z forward) for a camera looking straight ahead.
_EGO_TO_CAM_AXES = np.array([[1.0, 0.0, 0.0],
                             [0.0, 0.0, -1.0],
                             [0.0, 1.0, 0.0]])


def make_forward_camera(height=1.5, pitch_deg=5.0, yaw_deg=0.0,
                        focal=1000.0, image_size=(960, 1280),
                        principal=None):
    """Builds a forward-looking camera ``height`` meters above the ground.

    ``pitch_deg`` tilts the optical axis down, ``yaw_deg`` turns it to the
    right.  The principal point defaults to the image center.
    """
    h_px, w_px = image_size
    if principal is None:
        principal = (w_px / 2.0, h_px / 2.0)
    cx, cy = principal
    K = np.array([[focal, 0.0, cx], [0.0, focal, cy], [0.0, 0.0, 1.0]])

    pitch = np.deg2rad(pitch_deg)
    yaw = np.deg2rad(yaw_deg)
    # Yaw about ego z, then the axis swap, then pitch about camera x.
    rot_yaw = np.array([[np.cos(yaw), np.sin(yaw), 0.0],
                        [-np.sin(yaw), np.cos(yaw), 0.0],
                        [0.0, 0.0, 1.0]])
    rot_pitch = np.array([[1.0, 0.0, 0.0],
                          [0.0, np.cos(pitch), -np.sin(pitch)],
                          [0.0, np.sin(pitch), np.cos(pitch)]])
    R = rot_pitch @ _EGO_TO_CAM_AXES @ rot_yaw
    center = np.array([0.0, 0.0, height])
    E = np.eye(4)
    E[:3, :3] = R
    E[:3, 3] = -R @ center
    return CameraModel(intrinsic=K, extrinsic=E, image_size=(h_px, w_px))


@dataclass(frozen=True, eq=False)
class AnchorGrid:
    """Lattice of BEV anchor positions.

    ``positions`` is (rows, cols, 2) with ``[..., 0]`` the lateral x and
    ``[..., 1]`` the longitudinal y, in meters.  ``row_spacing`` holds the
    per-row longitudinal gap (constant in uniform mode, strictly increasing
    in custom mode).
    """

    rows: int
    cols: int
    positions: np.ndarray
    row_spacing: np.ndarray
    mode: str

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        spacing = np.asarray(self.row_spacing, dtype=float)
        if pos.shape != (self.rows, self.cols, 2):
            raise ValueError(f"positions must be ({self.rows}, {self.cols}, 2), got {pos.shape}")
        if spacing.shape != (self.rows,):
            raise ValueError(f"row_spacing must have length {self.rows}, got {spacing.shape}")
        row_y = pos[:, 0, 1]
        if not np.all(np.diff(row_y) > 0):
            raise ValueError("longitudinal coordinates must strictly increase with row index")
        if self.mode not in ("uniform", "custom"):
            raise ValueError(f"unknown grid mode {self.mode!r}")
        if self.mode == "custom" and not np.all(np.diff(spacing) > 0):
            raise ValueError("custom-mode row spacing must be strictly increasing")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "row_spacing", spacing)

    @property
    def row_y(self):
        """Longitudinal coordinate of each row (shared by all its columns)."""
        return self.positions[:, 0, 1]

    def lateral_spacing(self, row):
        """Gap between adjacent columns of one row."""
        xs = self.positions[row, :, 0]
        return float(xs[1] - xs[0])


def build_uniform_grid(rows, cols, y_range, x_range):
    """Evenly spaced lattice whose corners coincide with the range bounds."""
    if rows < 2 or cols < 2:
        raise ValueError("uniform grid needs rows >= 2 and cols >= 2")
    y_min, y_max = float(y_range[0]), float(y_range[1])
    x_min, x_max = float(x_range[0]), float(x_range[1])
    if not (y_max > y_min) or not (x_max > x_min):
        raise ValueError("degenerate grid range")
    ys = np.linspace(y_min, y_max, rows)
    xs = np.linspace(x_min, x_max, cols)
    positions = np.empty((rows, cols, 2))
    positions[..., 0] = xs[np.newaxis, :]
    positions[..., 1] = ys[:, np.newaxis]
    spacing = np.full(rows, (y_max - y_min) / (rows - 1))
    return AnchorGrid(rows=rows, cols=cols, positions=positions,
                      row_spacing=spacing, mode="uniform")


def build_custom_grid(rows, cols, spacing_near=0.5, spacing_far=1.5,
                      width=20.0, normalize_to_range=None, y_origin=3.0):
    """Near-dense lattice: row gaps grow linearly from ``spacing_near`` to
    ``spacing_far`` and the lateral span widens from [W/4, 3W/4] at the first
    row to [0, W] at the last (re-centered so the midline is x = 0).

    Row i sits at the prefix sum of the gaps measured from ``y_origin``.
    With ``normalize_to_range=(y_min, y_max)`` all gaps are rescaled by one
    factor so that prefix sum spans exactly ``y_max - y_min`` starting at
    ``y_min``.
    """
    if rows < 2:
        raise ValueError("custom grid needs rows >= 2")
    if cols < 2:
        raise ValueError("custom grid needs cols >= 2")
    if not spacing_near < spacing_far:
        raise ValueError("spacing_near must be smaller than spacing_far")
    if width <= 0:
        raise ValueError("width must be positive")

    spacing = spacing_near + np.arange(rows) * ((spacing_far - spacing_near) / (rows - 1))
    origin = float(y_origin)
    if normalize_to_range is not None:
        y_min, y_max = float(normalize_to_range[0]), float(normalize_to_range[1])
        if not y_max > y_min:
            raise ValueError("degenerate normalize_to_range")
        spacing = spacing * ((y_max - y_min) / spacing.sum())
        origin = y_min
    ys = origin + np.cumsum(spacing)

    frac = np.arange(rows) / (rows - 1)
    x_start = (width / 4.0) * (1.0 - frac)
    x_end = width * 0.75 * (1.0 - frac) + width * frac
    positions = np.empty((rows, cols, 2))
    col_frac = np.arange(cols) / (cols - 1)
    positions[..., 0] = (x_start[:, np.newaxis]
                         + col_frac[np.newaxis, :] * (x_end - x_start)[:, np.newaxis]
                         - width / 2.0)
    positions[..., 1] = ys[:, np.newaxis]
    return AnchorGrid(rows=rows, cols=cols, positions=positions,
                      row_spacing=spacing, mode="custom")


@dataclass(frozen=True, eq=False)
class ProjectionMap:
    """Sub-pixel image coordinates of every grid cell plus a validity mask.

    A cell is invalid exactly when its ground point is behind the camera or
    projects outside the image.
    """

    pixel_coords: np.ndarray
    valid: np.ndarray


def project_points(points_ego, camera):
    """Projects (N, 3) ego-frame points; returns ((N, 2) pixels, (N,) depths)."""
    pts = np.asarray(points_ego, dtype=float)
    homog = np.concatenate([pts, np.ones((len(pts), 1))], axis=1)
    cam = homog @ camera.extrinsic.T
    depth = cam[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        uvw = cam[:, :3] @ camera.intrinsic.T
        uv = uvw[:, :2] / depth[:, np.newaxis]
    return uv, depth


def project_grid_to_image(grid, camera, ground_height=0.0):
    """Maps every anchor to image pixels assuming it lies at ``ground_height``."""
    flat = grid.positions.reshape(-1, 2)
    pts = np.column_stack([flat, np.full(len(flat), float(ground_height))])
    uv, depth = project_points(pts, camera)
    h_px, w_px = camera.image_size
    in_front = depth > MIN_DEPTH_M
    inside = (np.isfinite(uv).all(axis=1)
              & (uv[:, 0] >= 0.0) & (uv[:, 0] <= w_px - 1.0)
              & (uv[:, 1] >= 0.0) & (uv[:, 1] <= h_px - 1.0))
    valid = in_front & inside
    uv = np.where(valid[:, np.newaxis], uv, 0.0)
    return ProjectionMap(pixel_coords=uv.reshape(grid.rows, grid.cols, 2),
                         valid=valid.reshape(grid.rows, grid.cols))


def unproject_pixel_to_ground(camera, pixel, ground_height=0.0):
    """Intersects the viewing ray of ``pixel`` with the plane z = ground_height.

    Returns the (x, y, z) ego-frame point.  Raises ``NoGroundIntersection``
    when the ray is parallel to the plane or hits it behind the camera.
    """
    u, v = float(pixel[0]), float(pixel[1])
    dir_cam = np.linalg.solve(camera.intrinsic, np.array([u, v, 1.0]))
    dir_ego = camera.rotation.T @ dir_cam
    center = camera.center_ego
    if abs(dir_ego[2]) < 1e-12:
        raise NoGroundIntersection(f"ray through pixel ({u}, {v}) is parallel to the ground plane")
    # dir_cam has unit z, so the ray parameter equals camera-frame depth.
    s = (float(ground_height) - center[2]) / dir_ego[2]
    if s <= MIN_DEPTH_M:
        raise NoGroundIntersection(f"ray through pixel ({u}, {v}) meets the ground behind the camera")
    return center + s * dir_ego


def bilinear_sample(feature_map, pmap):
    """Samples (H', W', C) features at the projection map's pixel coordinates.

    Invalid cells and coordinates outside the feature map yield zero vectors;
    interior samples are convex combinations of the 4 surrounding pixels.
    """
    fmap = np.asarray(feature_map, dtype=float)
    if fmap.ndim != 3:
        raise ValueError(f"feature map must be (H, W, C), got shape {fmap.shape}")
    h_f, w_f, _ = fmap.shape
    uv = pmap.pixel_coords.reshape(-1, 2)
    if not np.all(np.isfinite(uv)):
        raise ValueError("pixel coordinates must be finite")
    u, v = uv[:, 0], uv[:, 1]

    usable = (pmap.valid.reshape(-1)
              & (u >= 0.0) & (u <= w_f - 1.0) & (v >= 0.0) & (v <= h_f - 1.0))
    u = np.where(usable, u, 0.0)
    v = np.where(usable, v, 0.0)

    x0 = np.floor(u).astype(int)
    y0 = np.floor(v).astype(int)
    x1 = np.minimum(x0 + 1, w_f - 1)
    y1 = np.minimum(y0 + 1, h_f - 1)
    wx = u - x0
    wy = v - y0

    out = (fmap[y0, x0] * ((1 - wy) * (1 - wx))[:, np.newaxis]
           + fmap[y0, x1] * ((1 - wy) * wx)[:, np.newaxis]
           + fmap[y1, x0] * (wy * (1 - wx))[:, np.newaxis]
           + fmap[y1, x1] * (wy * wx)[:, np.newaxis])
    out[~usable] = 0.0
    return out.reshape(pmap.valid.shape + (fmap.shape[2],))
