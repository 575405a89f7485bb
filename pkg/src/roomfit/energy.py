"""Differentiable scene arrangement energy: collision + relation + observation.

The total objective is a scalar function of every object's pose parameters
(7 per object, ordered dlon, dlat, dist, sx, sy, sz, theta). Gradients are
exact forward-mode dual-number derivatives of the implemented expressions;
at kinks (axis switches, min/max ties, abs at zero) the selected branch's
one-sided derivative is returned.

Energy structure:

* collision: summed box-pair penetration (separating axes), footprint
  corners outside the room polygon weighted by in-room likelihood, and
  floor/ceiling penetration.
* relation: rotation-bin residuals, attachment gaps (object-object and
  object-wall), floor/ceiling attachment distances, and depth-order
  violations; every term is multiplied by the probability its label holds.
* observation: 1 - IoU between the projected box and its detection, plus
  L1 distances from the current to the initial pose parameters.

Object pairs are counted once (unordered) by default;
``EnergyConfig.pair_double_count`` restores the directed double sum, and
``EnergyConfig.dedupe_axes=False`` keeps one full axis triple per box
including the shared vertical axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from . import dual as fd
from .angles import wrap_pi
from .collision import AXIS_DEDUPE_TOL, GAP_EPS
from .dual import Dual
from .polygon import points_in_polygon
from .relations import BIN_WIDTH, RelationSet, label_probability
from .scene import CORNER_SIGNS, Scene

ATTACH_SNAP = 1e-6
MIN_EXTENT = 1e-12

TERM_KEYS = (
    "oc", "wc", "fc", "cc",
    "rr", "oa", "fa", "ca", "rd",
    "bp", "delta", "dist", "size", "theta",
)
COLLISION_KEYS = ("oc", "wc", "fc", "cc")
RELATION_KEYS = ("rr", "oa", "fa", "ca", "rd")
OBSERVATION_KEYS = ("bp", "delta", "dist", "size", "theta")


@dataclass(frozen=True)
class TermWeights:
    """Multipliers for each energy term. Defaults are the reference preset."""

    oc: float = 1.0
    wc: float = 1.0
    fc: float = 1.0
    cc: float = 1.0
    rr: float = 0.1
    oa: float = 1.0
    fa: float = 1.0
    ca: float = 1.0
    rd: float = 0.01
    delta: float = 0.0001
    dist: float = 0.01
    size: float = 1.0
    theta: float = 0.001
    bp: float = 10.0

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"weight {f.name} must be non-negative")

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @staticmethod
    def from_dict(d: dict) -> "TermWeights":
        known = {f.name for f in fields(TermWeights)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown weight names: {sorted(unknown)}")
        return TermWeights(**d)

    @staticmethod
    def preset(name: str) -> "TermWeights":
        try:
            return WEIGHT_PRESETS[name]
        except KeyError:
            raise KeyError(
                f"unknown preset {name!r}; available: {sorted(WEIGHT_PRESETS)}"
            ) from None


WEIGHT_PRESETS = {
    "paper-igibson": TermWeights(),
    "paper-structured3d": TermWeights(
        oc=0.0157, wc=0.2625, fc=0.3182, cc=0.2036,
        rr=0.1, oa=1.0, fa=1.0, ca=1.0, rd=0.0040,
        delta=0.0001, dist=0.1404, size=6.0502, theta=0.0003, bp=0.2895,
    ),
}

# Gradient-descent learning rate tuned alongside the structured3d preset.
STRUCTURED3D_LEARNING_RATE = 0.0124


@dataclass(frozen=True)
class EnergyConfig:
    """Structural options for the energy sums."""

    pair_double_count: bool = False
    dedupe_axes: bool = True


@dataclass(frozen=True)
class EnergyReport:
    """Scalar energies, per-object weighted contributions, and the gradient."""

    total: float
    collision: float
    relation: float
    observation: float
    per_object: dict
    gradient: np.ndarray

    def term_total(self, key: str) -> float:
        return float(self.per_object[key].sum())

    def worst_object(self) -> tuple[str, int]:
        """(term, object index) of the largest or first non-finite entry."""
        for key in TERM_KEYS:
            vals = self.per_object[key]
            bad = np.flatnonzero(~np.isfinite(vals))
            if bad.size:
                return key, int(bad[0])
        best_key, best_idx, best_val = TERM_KEYS[0], 0, -np.inf
        for key in TERM_KEYS:
            vals = self.per_object[key]
            if vals.size and vals.max() > best_val:
                best_key, best_idx, best_val = key, int(vals.argmax()), float(vals.max())
        return best_key, best_idx


def _snap_relu(x: Dual, eps: float = GAP_EPS) -> Dual:
    return fd.where(x.val > eps, x, Dual.constant(np.zeros_like(x.val), x.width))


def _snapped_abs(x: Dual, eps: float) -> Dual:
    a = x.abs()
    return fd.where(a.val > eps, a, Dual.constant(np.zeros_like(a.val), a.width))


def _wrap_values(x: Dual) -> Dual:
    return x + (wrap_pi(x.val) - x.val)


def _lift(x: Dual, block: int, width: int) -> Dual:
    """Embed a narrow dual into a wider tangent space at the given block."""
    tan = np.zeros(x.val.shape + (width,))
    tan[..., block : block + x.width] = x.tan
    return Dual(x.val, tan)


class EnergyProblem:
    """Precompiled energy evaluator for one scene + relation set + weights."""

    def __init__(
        self,
        scene: Scene,
        relations: RelationSet | None,
        weights: TermWeights,
        config: EnergyConfig = EnergyConfig(),
    ):
        if relations is not None:
            relations.check_covers(scene)
        self.scene = scene
        self.relations = relations
        self.weights = weights
        self.config = config

        objs = scene.objects
        self.n = n = len(objs)
        self.det_lon = np.array([o.detection.center.lon for o in objs])
        self.det_lat = np.array([o.detection.center.lat for o in objs])
        self.init_params = (
            np.concatenate([o.initial_pose.as_vector() for o in objs])
            if n
            else np.zeros(0)
        )
        self.in_room = np.array([o.in_room_likelihood for o in objs])

        # Detection rectangles in (lon, lat) space, latitudes pre-clamped.
        half_pi = math.pi / 2
        dv = np.array([o.detection.vfov for o in objs])
        self.det_hfov = np.array([o.detection.hfov for o in objs])
        self.det_lat_lo = np.maximum(self.det_lat - dv / 2.0, -half_pi)
        self.det_lat_hi = np.minimum(self.det_lat + dv / 2.0, half_pi)
        self.det_area = self.det_hfov * (self.det_lat_hi - self.det_lat_lo)

        poly = scene.layout.polygon_array()
        self.edges_p0 = poly
        self.edges_p1 = np.roll(poly, -1, axis=0)
        self.floor_y = scene.layout.floor_y
        self.ceiling_y = scene.layout.ceiling_y

        walls = scene.walls
        self.wall_centers = np.array([w.center for w in walls])
        self.wall_halves = np.array([np.asarray(w.size) / 2.0 for w in walls])
        self.wall_yaws = np.array([w.yaw for w in walls])

        ii, jj = np.triu_indices(n, k=1)
        self.pair_i, self.pair_j = ii, jj
        m = len(ii)
        oi, wk = np.meshgrid(np.arange(n), np.arange(len(walls)), indexing="ij")
        self.ow_obj = oi.ravel()
        self.ow_wall = wk.ravel()
        cols = n + self.ow_wall

        if relations is not None:
            self.pair_bins = relations.rot_bin[ii, jj].astype(float)
            self.pair_rot_prob = relations.rot_conf[ii, jj]
            self.pair_attach_prob = label_probability(
                relations.attach[ii, jj], relations.attach_conf[ii, jj]
            )
            self.pair_farther = relations.farther[ii, jj]
            # Either order assertion is informative; weight violations by the
            # confidence of the stated order, not by P(farther).
            self.pair_farther_prob = relations.farther_conf[ii, jj]
            self.ow_bins = relations.rot_bin[self.ow_obj, cols].astype(float)
            self.ow_rot_prob = relations.rot_conf[self.ow_obj, cols]
            self.ow_attach_prob = label_probability(
                relations.attach[self.ow_obj, cols],
                relations.attach_conf[self.ow_obj, cols],
            )
            self.fa_prob = label_probability(relations.attach_floor, relations.floor_conf)
            self.ca_prob = label_probability(
                relations.attach_ceiling, relations.ceiling_conf
            )
        else:
            # No labels: relation terms vanish, the pair collision term stays.
            self.pair_bins = np.zeros(m)
            self.pair_rot_prob = np.zeros(m)
            self.pair_attach_prob = np.zeros(m)
            self.pair_farther = np.zeros(m, dtype=bool)
            self.pair_farther_prob = np.zeros(m)
            self.ow_bins = np.zeros(len(self.ow_obj))
            self.ow_rot_prob = np.zeros(len(self.ow_obj))
            self.ow_attach_prob = np.zeros(len(self.ow_obj))
            self.fa_prob = np.zeros(n)
            self.ca_prob = np.zeros(n)

    # ------------------------------------------------------------------
    def evaluate(self, params: np.ndarray) -> EnergyReport:
        n = self.n
        per_object = {key: np.zeros(n) for key in TERM_KEYS}
        gradient = np.zeros(7 * n)
        if n == 0:
            return EnergyReport(0.0, 0.0, 0.0, 0.0, per_object, gradient)

        grad_matrix = gradient.reshape(n, 7)
        w = self.weights
        pair_factor = 2.0 if self.config.pair_double_count else 1.0

        p = Dual.seeded(
            params.reshape(n, 7), np.broadcast_to(np.arange(7), (n, 7)), 7
        )
        lon = p[:, 0] + self.det_lon
        lat = p[:, 1] + self.det_lat
        dist = p[:, 2]
        half = p[:, 3:6] * 0.5
        yaw = p[:, 6] + lon

        sinlon, coslon = lon.sin(), lon.cos()
        sinlat, coslat = lat.sin(), lat.cos()
        direction = fd.stack([coslat * sinlon, sinlat, coslat * coslon], axis=-1)
        center = direction * dist.reshape(n, 1)
        sinw, cosw = yaw.sin(), yaw.cos()

        signs = CORNER_SIGNS  # (8, 3)
        ox = half[:, 0].reshape(n, 1) * signs[:, 0]
        oy = half[:, 1].reshape(n, 1) * signs[:, 1]
        oz = half[:, 2].reshape(n, 1) * signs[:, 2]
        cw, sw = cosw.reshape(n, 1), sinw.reshape(n, 1)
        corners = fd.stack(
            [
                center[:, 0].reshape(n, 1) + ox * cw + oz * sw,
                center[:, 1].reshape(n, 1) + oy,
                center[:, 2].reshape(n, 1) - ox * sw + oz * cw,
            ],
            axis=-1,
        )  # (n, 8, 3)

        # --- per-object collision terms -------------------------------
        bottom = center[:, 1] - half[:, 1]
        top = center[:, 1] + half[:, 1]
        e_fc = _snap_relu(self.floor_y - bottom) * w.fc
        e_cc = _snap_relu(top - self.ceiling_y) * w.cc
        e_wc = self._wall_term(corners) * (w.wc * self.in_room)

        # --- observation terms ----------------------------------------
        init = self.init_params.reshape(n, 7)
        e_delta = (p[:, 0] - init[:, 0]).abs() + (p[:, 1] - init[:, 1]).abs()
        e_dist = (p[:, 2] - init[:, 2]).abs()
        e_size = (p[:, 3:6] - init[:, 3:6]).abs().sum(axis=1)
        e_theta = _wrap_values(p[:, 6] - init[:, 6]).abs()
        e_bp = self._projection_term(corners, lon, lat)
        e_delta = e_delta * w.delta
        e_dist = e_dist * w.dist
        e_size = e_size * w.size
        e_theta = e_theta * w.theta
        e_bp = e_bp * w.bp

        for key, term in (
            ("fc", e_fc), ("cc", e_cc), ("wc", e_wc),
            ("bp", e_bp), ("delta", e_delta), ("dist", e_dist),
            ("size", e_size), ("theta", e_theta),
        ):
            per_object[key] += term.val
            grad_matrix += term.tan

        # --- attachment terms anchored on objects only ----------------
        d_floor = _snapped_abs(bottom - self.floor_y, ATTACH_SNAP)
        d_ceil = _snapped_abs(self.ceiling_y - top, ATTACH_SNAP)
        e_fa = d_floor * (w.fa * self.fa_prob)
        e_ca = d_ceil * (w.ca * self.ca_prob)
        per_object["fa"] += e_fa.val
        per_object["ca"] += e_ca.val
        grad_matrix += e_fa.tan + e_ca.tan

        self._object_pair_terms(p, center, yaw, per_object, grad_matrix, pair_factor)
        if self.relations is not None:
            self._object_wall_terms(center, yaw, p, per_object, grad_matrix)

        collision = float(sum(per_object[k].sum() for k in COLLISION_KEYS))
        relation = float(sum(per_object[k].sum() for k in RELATION_KEYS))
        observation = float(sum(per_object[k].sum() for k in OBSERVATION_KEYS))
        return EnergyReport(
            total=collision + relation + observation,
            collision=collision,
            relation=relation,
            observation=observation,
            per_object=per_object,
            gradient=gradient,
        )

    # ------------------------------------------------------------------
    def _wall_term(self, corners: Dual) -> Dual:
        """Sum of footprint-corner distances to the polygon, outside corners only."""
        n = self.n
        pts = fd.stack([corners[:, :, 0], corners[:, :, 2]], axis=-1)  # (n, 8, 2)
        flat = pts.val.reshape(-1, 2)
        outside = (~points_in_polygon(flat, self.edges_p0)).reshape(n, 8)

        best = None
        for p0, p1 in zip(self.edges_p0, self.edges_p1):
            d = p1 - p0
            denom = float(d @ d)
            rel = pts - p0
            t = (rel[:, :, 0] * d[0] + rel[:, :, 1] * d[1]) * (1.0 / denom)
            t = fd.where(t.val < 0.0, Dual.constant(np.zeros_like(t.val), t.width), t)
            t = fd.where(t.val > 1.0, Dual.constant(np.ones_like(t.val), t.width), t)
            dx = rel[:, :, 0] - t * d[0]
            dz = rel[:, :, 1] - t * d[1]
            sq = dx * dx + dz * dz
            edge_dist = fd.maximum(sq, MIN_EXTENT).sqrt()
            best = edge_dist if best is None else fd.minimum(best, edge_dist)
        return (best * outside.astype(float)).sum(axis=1)

    # ------------------------------------------------------------------
    def _projection_term(self, corners: Dual, lon: Dual, lat: Dual) -> Dual:
        """1 - IoU between the projected box rectangle and the detection."""
        n = self.n
        half_pi = math.pi / 2
        sl, cl = lon.sin().reshape(n, 1), lon.cos().reshape(n, 1)
        sb, cb = lat.sin().reshape(n, 1), lat.cos().reshape(n, 1)
        x, y, z = corners[:, :, 0], corners[:, :, 1], corners[:, :, 2]
        x1 = x * cl - z * sl
        z1 = x * sl + z * cl
        y2 = y * cb - z1 * sb
        z2 = y * sb + z1 * cb

        behind = np.any(z2.val <= 0.0, axis=1)
        z_safe = fd.where(z2.val <= 0.0, Dual.constant(np.ones_like(z2.val), z2.width), z2)
        u = x1 / z_safe
        v = y2 / z_safe
        u_lo, u_hi = u.min(axis=1), u.max(axis=1)
        v_lo, v_hi = v.min(axis=1), v.max(axis=1)

        proj_lon = lon + ((u_lo + u_hi) * 0.5).arctan()
        proj_lat = lat + ((v_lo + v_hi) * 0.5).arctan()
        hfov = ((u_hi - u_lo) * 0.5).arctan() * 2.0
        vfov = ((v_hi - v_lo) * 0.5).arctan() * 2.0

        lat_lo = proj_lat - vfov * 0.5
        lat_hi = proj_lat + vfov * 0.5
        lat_lo = fd.where(lat_lo.val < -half_pi, Dual.constant(np.full(n, -half_pi), 7), lat_lo)
        lat_hi = fd.where(lat_hi.val > half_pi, Dual.constant(np.full(n, half_pi), 7), lat_hi)

        # Align the fixed detection rectangle with the projected one in
        # unwrapped longitude before intersecting.
        shift = np.round((proj_lon.val - self.det_lon) / (2 * math.pi)) * 2 * math.pi
        det_lon = self.det_lon + shift
        lon_lo = proj_lon - hfov * 0.5
        lon_hi = proj_lon + hfov * 0.5

        inter_h = fd.minimum(lon_hi, det_lon + self.det_hfov / 2.0) - fd.maximum(
            lon_lo, det_lon - self.det_hfov / 2.0
        )
        inter_v = fd.minimum(lat_hi, self.det_lat_hi) - fd.maximum(lat_lo, self.det_lat_lo)
        inter = fd.relu(inter_h) * fd.relu(inter_v)
        area = hfov * (lat_hi - lat_lo)
        union = area + self.det_area - inter
        iou = inter / union
        one = Dual.constant(np.ones(n), 7)
        return fd.where(behind, one, one - iou)

    # ------------------------------------------------------------------
    def _gap_terms(self, pc_i, ext_i, pc_j, ext_j):
        """Signed per-axis gaps (positive = separated) and the collision mask."""
        offset = pc_i - pc_j
        reach = ext_i + ext_j
        t1 = offset + reach
        t2 = offset - reach
        magnitude = fd.minimum(t1.abs(), t2.abs())
        magnitude = fd.where(
            magnitude.val <= GAP_EPS,
            Dual.constant(np.zeros_like(magnitude.val), magnitude.width),
            magnitude,
        )
        separated = (t2.val > 0.0) | (t1.val < 0.0)
        gaps = fd.where(separated, magnitude, -magnitude)
        colliding = np.all(gaps.val < 0.0, axis=-1)
        return gaps, colliding

    @staticmethod
    def _extent(axes: Dual, box_axes: Dual, halves: Dual) -> Dual:
        """Projection half-length of a box onto each axis (m, n_axes)."""
        m, n_axes = axes.val.shape[0], axes.val.shape[1]
        dots = (
            axes.reshape(m, n_axes, 1, 3) * box_axes.reshape(m, 1, 3, 3)
        ).sum(axis=-1).abs()  # (m, n_axes, 3)
        return (dots * halves.reshape(m, 1, 3)).sum(axis=-1)

    def _axis_weights(self, yaw_i: np.ndarray, yaw_j: np.ndarray) -> np.ndarray:
        """Per-axis multipliers for the [x_i, z_i, y, x_j, z_j] candidate set."""
        m = len(yaw_i)
        weights = np.ones((m, 5))
        if self.config.dedupe_axes:
            rel = yaw_j - yaw_i
            aligned = np.minimum(
                np.abs(np.cos(rel)), np.abs(np.sin(rel))
            ) < math.sqrt(2 * AXIS_DEDUPE_TOL)
            # When yaws agree mod 90 deg the second box's horizontals repeat
            # the first box's; drop them.
            weights[aligned, 3] = 0.0
            weights[aligned, 4] = 0.0
        else:
            weights[:, 2] = 2.0  # both boxes contribute a vertical axis
        return weights

    @staticmethod
    def _pair_axes(cosw: Dual, sinw: Dual) -> Dual:
        """Horizontal face normals (m, 2, 3) for boxes with given yaws."""
        m = cosw.val.shape[0]
        zero = Dual.constant(np.zeros(m), cosw.width)
        ax = fd.stack([cosw, zero, -sinw], axis=-1)
        az = fd.stack([sinw, zero, cosw], axis=-1)
        return fd.stack([ax, az], axis=1)

    def _object_pair_terms(self, p, center, yaw, per_object, grad_matrix, pair_factor):
        w = self.weights
        ii, jj = self.pair_i, self.pair_j
        m = len(ii)
        if m == 0:
            return

        def wide(x: Dual, sel, block) -> Dual:
            return _lift(Dual(x.val[sel], x.tan[sel]), block, 14)

        half = p[:, 3:6] * 0.5
        yaw_i, yaw_j = wide(yaw, ii, 0), wide(yaw, jj, 7)
        center_i, center_j = wide(center, ii, 0), wide(center, jj, 7)
        half_i, half_j = wide(half, ii, 0), wide(half, jj, 7)
        dist_i, dist_j = wide(p[:, 2], ii, 0), wide(p[:, 2], jj, 7)

        axes_i = self._pair_axes(yaw_i.cos(), yaw_i.sin())  # (m, 2, 3)
        axes_j = self._pair_axes(yaw_j.cos(), yaw_j.sin())
        y_axis = Dual.constant(np.broadcast_to([0.0, 1.0, 0.0], (m, 1, 3)).copy(), 14)
        axes = fd.stack(
            [axes_i[:, 0], axes_i[:, 1], y_axis[:, 0], axes_j[:, 0], axes_j[:, 1]],
            axis=1,
        )  # (m, 5, 3)

        frame_i = fd.stack([axes_i[:, 0], y_axis[:, 0], axes_i[:, 1]], axis=1)
        frame_j = fd.stack([axes_j[:, 0], y_axis[:, 0], axes_j[:, 1]], axis=1)

        pc_i = (axes * center_i.reshape(m, 1, 3)).sum(axis=-1)
        pc_j = (axes * center_j.reshape(m, 1, 3)).sum(axis=-1)
        ext_i = self._extent(axes, frame_i, half_i)
        ext_j = self._extent(axes, frame_j, half_j)
        gaps, colliding = self._gap_terms(pc_i, ext_i, pc_j, ext_j)

        axis_w = self._axis_weights(yaw.val[ii], yaw.val[jj])
        overlap = ((-gaps) * axis_w).sum(axis=1)
        gap_sum = (fd.relu(gaps) * axis_w).sum(axis=1)
        zero = Dual.constant(np.zeros(m), 14)
        e_oc = fd.where(colliding, overlap, zero) * (w.oc * pair_factor)
        e_oa = fd.where(colliding, zero, gap_sum) * (
            w.oa * pair_factor * self.pair_attach_prob
        )

        rel = _wrap_values(yaw_j - yaw_i - self.pair_bins * BIN_WIDTH)
        e_rr = rel.abs() * (w.rr * pair_factor * self.pair_rot_prob)

        depth_gap = dist_i - dist_j
        violated = np.where(self.pair_farther, depth_gap.val < 0.0, depth_gap.val > 0.0)
        e_rd = fd.where(violated, depth_gap.abs(), zero) * (
            w.rd * pair_factor * self.pair_farther_prob
        )

        total = e_oc + e_oa + e_rr + e_rd
        np.add.at(grad_matrix, ii, total.tan[:, :7])
        np.add.at(grad_matrix, jj, total.tan[:, 7:])
        for key, term in (("oc", e_oc), ("oa", e_oa), ("rr", e_rr), ("rd", e_rd)):
            np.add.at(per_object[key], ii, term.val * 0.5)
            np.add.at(per_object[key], jj, term.val * 0.5)

    def _object_wall_terms(self, center, yaw, p, per_object, grad_matrix):
        w = self.weights
        n_walls = len(self.wall_yaws)
        if n_walls == 0 or self.n == 0:
            return
        oi, wk = self.ow_obj, self.ow_wall
        m = len(oi)

        half = p[:, 3:6] * 0.5
        yaw_o = Dual(yaw.val[oi], yaw.tan[oi])
        center_o = Dual(center.val[oi], center.tan[oi])
        half_o = Dual(half.val[oi], half.tan[oi])
        axes_o = self._pair_axes(yaw_o.cos(), yaw_o.sin())  # (m, 2, 3)
        y_axis = Dual.constant(np.broadcast_to([0.0, 1.0, 0.0], (m, 1, 3)).copy(), 7)

        wyaw = self.wall_yaws[wk]
        cww, sww = np.cos(wyaw), np.sin(wyaw)
        wall_ax = np.stack([cww, np.zeros(m), -sww], axis=-1)
        wall_az = np.stack([sww, np.zeros(m), cww], axis=-1)
        axes_wall = Dual.constant(np.stack([wall_ax, wall_az], axis=1), 7)

        axes = fd.stack(
            [axes_o[:, 0], axes_o[:, 1], y_axis[:, 0], axes_wall[:, 0], axes_wall[:, 1]],
            axis=1,
        )
        frame_o = fd.stack([axes_o[:, 0], y_axis[:, 0], axes_o[:, 1]], axis=1)
        frame_w = Dual.constant(
            np.stack([wall_ax, np.broadcast_to([0.0, 1.0, 0.0], (m, 3)).copy(), wall_az], axis=1),
            7,
        )
        wall_center = Dual.constant(self.wall_centers[wk], 7)
        wall_half = Dual.constant(self.wall_halves[wk], 7)

        pc_o = (axes * center_o.reshape(m, 1, 3)).sum(axis=-1)
        pc_w = (axes * wall_center.reshape(m, 1, 3)).sum(axis=-1)
        ext_o = self._extent(axes, frame_o, half_o)
        ext_w = self._extent(axes, frame_w, wall_half)
        gaps, colliding = self._gap_terms(pc_o, ext_o, pc_w, ext_w)

        axis_w = self._axis_weights(yaw.val[oi], wyaw)
        gap_sum = (fd.relu(gaps) * axis_w).sum(axis=1)
        zero = Dual.constant(np.zeros(m), 7)
        e_oa = fd.where(colliding, zero, gap_sum) * (w.oa * self.ow_attach_prob)

        rel = _wrap_values((-yaw_o) + (wyaw - self.ow_bins * BIN_WIDTH))
        e_rr = rel.abs() * (w.rr * self.ow_rot_prob)

        total = e_oa + e_rr
        np.add.at(grad_matrix, oi, total.tan)
        np.add.at(per_object["oa"], oi, e_oa.val)
        np.add.at(per_object["rr"], oi, e_rr.val)


def total_energy(
    scene: Scene,
    relations: RelationSet,
    weights: TermWeights = TermWeights(),
    config: EnergyConfig = EnergyConfig(),
) -> EnergyReport:
    """Full energy report (terms, per-object breakdown, gradient) for a scene."""
    problem = EnergyProblem(scene, relations, weights, config)
    return problem.evaluate(scene.pose_vector())


def gradient(
    scene: Scene,
    relations: RelationSet,
    weights: TermWeights = TermWeights(),
    config: EnergyConfig = EnergyConfig(),
) -> np.ndarray:
    """Flat derivative of the total energy over all pose parameters."""
    return total_energy(scene, relations, weights, config).gradient


def collision_energy(
    scene: Scene,
    weights: TermWeights = TermWeights(),
    config: EnergyConfig = EnergyConfig(),
) -> float:
    """Scene collision energy (object pairs + walls + floor/ceiling)."""
    problem = EnergyProblem(scene, None, weights, config)
    report = problem.evaluate(scene.pose_vector())
    return report.collision


def relation_energy(
    scene: Scene,
    relations: RelationSet,
    weights: TermWeights = TermWeights(),
    config: EnergyConfig = EnergyConfig(),
) -> float:
    """Relation conformity energy under the given labels."""
    return total_energy(scene, relations, weights, config).relation


def observation_energy(scene: Scene, weights: TermWeights = TermWeights()) -> float:
    """Consistency with detections and initial pose estimates."""
    problem = EnergyProblem(scene, None, weights, EnergyConfig())
    return problem.evaluate(scene.pose_vector()).observation
