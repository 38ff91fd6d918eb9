"""Rotation representations, heading-frame transforms, tree forward kinematics,
look-at inverse kinematics for the neck joint, and PD control."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateInputError,
    DegenerateSideError,
    DegenerateTargetError,
    RoomshiftError,
)

IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])


# ---------------------------------------------------------------------------
# quaternions (w, x, y, z), canonical sign w >= 0
# ---------------------------------------------------------------------------

def quat_normalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    n = np.linalg.norm(q)
    if n < 1e-12:
        raise DegenerateInputError("zero-norm quaternion")
    q = q / n
    if q[0] < 0:
        q = -q
    return q


def quat_mul(a, b) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_conj(q) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotate(q, v) -> np.ndarray:
    """Rotate vector v by quaternion q."""
    u = np.asarray(q[1:], dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    t = 2.0 * np.cross(u, v)
    return v + q[0] * t + np.cross(u, t)


def quat_from_axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    n = np.linalg.norm(axis)
    if n < 1e-12:
        raise DegenerateInputError("zero rotation axis")
    half = 0.5 * angle
    q = np.concatenate(([math.cos(half)], math.sin(half) * axis / n))
    if q[0] < 0:
        q = -q
    return q


def quat_from_yaw(yaw: float) -> np.ndarray:
    return np.array([math.cos(0.5 * yaw), 0.0, 0.0, math.sin(0.5 * yaw)])


def quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def matrix_to_quat(m) -> np.ndarray:
    """Shepperd's method; returns the canonical (w >= 0) quaternion."""
    m = np.asarray(m, dtype=np.float64)
    t = np.trace(m)
    if t > 0:
        s = math.sqrt(t + 1.0) * 2
        q = np.array(
            [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
        )
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2
        q = np.array(
            [(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s]
        )
    elif m[1, 1] > m[2, 2]:
        s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2
        q = np.array(
            [(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s]
        )
    else:
        s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2
        q = np.array(
            [(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s]
        )
    return quat_normalize(q)


def expmap_to_quat(v) -> np.ndarray:
    """Exponential-map 3-vector (axis * angle) to quaternion."""
    v = np.asarray(v, dtype=np.float64)
    angle = np.linalg.norm(v)
    if angle < 1e-12:
        return IDENTITY_QUAT.copy()
    return quat_from_axis_angle(v / angle, angle)


def quat_to_expmap(q) -> np.ndarray:
    q = quat_normalize(q)
    w = min(1.0, max(-1.0, float(q[0])))
    angle = 2.0 * math.acos(w)
    s = math.sqrt(max(0.0, 1.0 - w * w))
    if s < 1e-12:
        return np.zeros(3)
    return angle * np.asarray(q[1:]) / s


def yaw_of(q) -> float:
    """Yaw of the rotated x-axis, projected to the horizontal plane."""
    f = quat_rotate(q, np.array([1.0, 0.0, 0.0]))
    if math.hypot(f[0], f[1]) < 1e-9:
        # forward is vertical; fall back to the rotated y-axis (side) direction
        s = quat_rotate(q, np.array([0.0, 1.0, 0.0]))
        return math.atan2(-s[0], s[1])
    return math.atan2(f[1], f[0])


# ---------------------------------------------------------------------------
# 6-D normal-tangent rotation representation
# ---------------------------------------------------------------------------

def to_6d(q) -> np.ndarray:
    """First two columns of the rotation matrix, stacked as 6 scalars."""
    m = quat_to_matrix(q)
    return np.concatenate([m[:, 0], m[:, 1]])


def from_6d(v) -> np.ndarray:
    """Gram-Schmidt the two columns and complete with the cross product."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (6,):
        raise DegenerateInputError(f"6-D rotation must have shape (6,), got {v.shape}")
    a, b = v[:3], v[3:]
    na = np.linalg.norm(a)
    if na < 1e-8:
        raise DegenerateInputError("first 6-D column is (near) zero")
    c0 = a / na
    b_orth = b - np.dot(c0, b) * c0
    nb = np.linalg.norm(b_orth)
    if nb < 1e-8:
        raise DegenerateInputError("6-D columns are (near) parallel")
    c1 = b_orth / nb
    c2 = np.cross(c0, c1)
    return matrix_to_quat(np.stack([c0, c1, c2], axis=1))


# ---------------------------------------------------------------------------
# rigid transforms and the heading frame
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Transform:
    """Rigid map p -> R p + t."""

    rotation: np.ndarray  # quaternion
    translation: np.ndarray  # (3,)

    def apply(self, p) -> np.ndarray:
        return quat_rotate(self.rotation, p) + self.translation

    def apply_vector(self, v) -> np.ndarray:
        return quat_rotate(self.rotation, v)

    def apply_rotation(self, q) -> np.ndarray:
        return quat_normalize(quat_mul(self.rotation, q))

    def inverse(self) -> "Transform":
        rinv = quat_conj(self.rotation)
        return Transform(rotation=rinv, translation=-quat_rotate(rinv, self.translation))

    @staticmethod
    def identity() -> "Transform":
        return Transform(rotation=IDENTITY_QUAT.copy(), translation=np.zeros(3))


def heading_frame(root_pos, root_rot) -> Transform:
    """World-to-local transform of the yaw-only frame at the root's horizontal
    position: local x is the root's heading, local z is world-up."""
    root_pos = np.asarray(root_pos, dtype=np.float64)
    yaw = yaw_of(root_rot)
    q_inv = quat_conj(quat_from_yaw(yaw))
    origin = np.array([root_pos[0], root_pos[1], 0.0])
    return Transform(rotation=q_inv, translation=-quat_rotate(q_inv, origin))


# ---------------------------------------------------------------------------
# body model and forward kinematics
# ---------------------------------------------------------------------------

JOINT_DOF = {"free": 0, "spherical": 3, "revolute": 1, "fixed": 0}


@dataclass(frozen=True)
class BodyModel:
    """Tree of links; link i attaches to parents[i] via joint i (root joint is 'free')."""

    link_names: tuple
    parents: tuple
    offsets: np.ndarray  # (L, 3)
    joint_types: tuple
    joint_axes: np.ndarray  # (L, 3), used by revolute joints
    head_index: int
    hand_indices: tuple
    ee_indices: tuple
    camera_offset: np.ndarray = field(default_factory=lambda: np.array([0.103, 0.0, 0.175]))

    def __post_init__(self):
        if self.parents[0] != -1 or self.joint_types[0] != "free":
            raise RoomshiftError("link 0 must be the free root")
        for i, p in enumerate(self.parents[1:], start=1):
            if not 0 <= p < i:
                raise RoomshiftError(f"link {i} parent {p} must precede it (tree order)")
        for t in self.joint_types:
            if t not in JOINT_DOF:
                raise RoomshiftError(f"unknown joint type {t!r}")

    @property
    def n_links(self) -> int:
        return len(self.link_names)

    @property
    def neck_joint_index(self) -> int:
        return self.head_index

    @property
    def rotating_joints(self) -> list:
        """Link indices whose joints carry a rotation (spherical or revolute)."""
        return [i for i in range(1, self.n_links) if self.joint_types[i] in ("spherical", "revolute")]

    @property
    def n_joint_dof(self) -> int:
        return sum(JOINT_DOF[t] for t in self.joint_types)


def forward_kinematics(model: BodyModel, root_pos, root_rot, joint_rotations):
    """Chain poses down the tree.

    joint_rotations: one quaternion per non-root link (fixed joints must get
    the identity). Returns (positions (L, 3), rotations (L, 4)).
    """
    if len(joint_rotations) != model.n_links - 1:
        raise RoomshiftError(
            f"expected {model.n_links - 1} joint rotations, got {len(joint_rotations)}"
        )
    positions = np.zeros((model.n_links, 3))
    rotations = np.zeros((model.n_links, 4))
    positions[0] = np.asarray(root_pos, dtype=np.float64)
    rotations[0] = quat_normalize(root_rot)
    for i in range(1, model.n_links):
        p = model.parents[i]
        positions[i] = positions[p] + quat_rotate(rotations[p], model.offsets[i])
        q = joint_rotations[i - 1]
        if model.joint_types[i] == "fixed":
            q = IDENTITY_QUAT
        rotations[i] = quat_normalize(quat_mul(rotations[p], q))
    return positions, rotations


def camera_pose(model: BodyModel, positions, rotations):
    """Camera position and forward direction (head-frame +x) in world."""
    h = model.head_index
    pos = positions[h] + quat_rotate(rotations[h], model.camera_offset)
    forward = quat_rotate(rotations[h], np.array([1.0, 0.0, 0.0]))
    return pos, forward


NECK_YAW_LIMIT = math.pi / 2
NECK_PITCH_LIMIT = math.pi / 4


def _euler_zyx(m):
    # R = Rz(yaw) @ Ry(pitch) @ Rx(roll)
    pitch = -math.asin(min(1.0, max(-1.0, m[2, 0])))
    if abs(m[2, 0]) > 1.0 - 1e-9:
        yaw = math.atan2(-m[0, 1], m[1, 1])
        roll = 0.0
    else:
        yaw = math.atan2(m[1, 0], m[0, 0])
        roll = math.atan2(m[2, 1], m[2, 2])
    return yaw, pitch, roll


def _from_euler_zyx(yaw, pitch, roll):
    qz = quat_from_yaw(yaw)
    qy = quat_from_axis_angle([0, 1, 0], pitch)
    qx = quat_from_axis_angle([1, 0, 0], roll)
    return quat_normalize(quat_mul(quat_mul(qz, qy), qx))


def look_at_neck(model: BodyModel, positions, rotations, object_center, torso_up):
    """Neck joint rotation that points the camera forward axis at object_center.

    The target head frame is built from forward = camera -> object, side =
    normalize(torso_up x forward), up = forward x side; the neck rotation is
    parent_rotation^T * target, clamped to +-90 deg yaw and +-45 deg pitch
    relative to the parent.
    """
    object_center = np.asarray(object_center, dtype=np.float64)
    cam_pos, _ = camera_pose(model, positions, rotations)
    to_obj = object_center - cam_pos
    dist = np.linalg.norm(to_obj)
    if dist < 1e-3:
        raise DegenerateTargetError("object center coincides with the camera position")
    forward = to_obj / dist
    torso_up = np.asarray(torso_up, dtype=np.float64)
    nu = np.linalg.norm(torso_up)
    if nu < 1e-9:
        raise DegenerateSideError("zero torso-up vector")
    side = np.cross(torso_up / nu, forward)
    ns = np.linalg.norm(side)
    if ns < 1e-6:
        raise DegenerateSideError("camera view is parallel to the torso-up direction")
    side = side / ns
    up = np.cross(forward, side)
    target = matrix_to_quat(np.stack([forward, side, up], axis=1))
    parent = model.parents[model.head_index]
    neck = quat_normalize(quat_mul(quat_conj(rotations[parent]), target))
    yaw, pitch, roll = _euler_zyx(quat_to_matrix(neck))
    yaw = min(NECK_YAW_LIMIT, max(-NECK_YAW_LIMIT, yaw))
    pitch = min(NECK_PITCH_LIMIT, max(-NECK_PITCH_LIMIT, pitch))
    return _from_euler_zyx(yaw, pitch, roll)


def mix_action(a_tch, a_ar, w_ar: float, neck_slice) -> np.ndarray:
    """Blend the look-at target into the teacher action on the neck coordinates only."""
    a_tch = np.asarray(a_tch, dtype=np.float64)
    a_ar = np.asarray(a_ar, dtype=np.float64)
    idx = np.arange(a_tch.shape[-1])[neck_slice]
    if len(idx) != len(a_ar):
        raise RoomshiftError(f"neck slice selects {len(idx)} dims, target has {len(a_ar)}")
    out = a_tch.copy()
    out[..., idx] = (1.0 - w_ar) * a_tch[..., idx] + w_ar * a_ar
    return out


def pd_control(q_target, q, q_dot, kp, kd) -> np.ndarray:
    """Elementwise kp*(q_target - q) - kd*q_dot."""
    q_target = np.asarray(q_target, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    q_dot = np.asarray(q_dot, dtype=np.float64)
    if not (q_target.shape == q.shape == q_dot.shape):
        raise RoomshiftError(
            f"pd_control dimension mismatch: {q_target.shape}, {q.shape}, {q_dot.shape}"
        )
    return kp * (q_target - q) - kd * q_dot


# ---------------------------------------------------------------------------
# bundled models and the text config format
# ---------------------------------------------------------------------------

def desk_body_model() -> BodyModel:
    """Reduced planar-sim body: root, torso, head on a spherical neck, and a
    hand at the end of a revolute arm."""
    return BodyModel(
        link_names=("root", "torso", "head", "arm", "hand"),
        parents=(-1, 0, 1, 1, 3),
        offsets=np.array(
            [
                [0.0, 0.0, 0.0],
                [0.0, 0.0, 0.15],
                [0.0, 0.0, 0.40],
                [0.0, 0.0, 0.05],
                [0.85, 0.0, 0.0],
            ]
        ),
        joint_types=("free", "revolute", "spherical", "revolute", "fixed"),
        joint_axes=np.array(
            [[0, 0, 0], [0, 1, 0], [0, 0, 0], [0, 1, 0], [0, 0, 0]], dtype=np.float64
        ),
        head_index=2,
        hand_indices=(4,),
        ee_indices=(4, 2),
    )


_CANONICAL_LINKS = [
    # name, parent, offset, joint type, axis
    ("pelvis", -1, (0.0, 0.0, 0.0), "free", (0, 0, 0)),
    ("torso", 0, (0.0, 0.0, 0.24), "spherical", (0, 0, 0)),
    ("head", 1, (0.0, 0.0, 0.22), "spherical", (0, 0, 0)),
    ("right_upper_arm", 1, (0.02, -0.18, 0.16), "spherical", (0, 0, 0)),
    ("right_lower_arm", 3, (0.0, 0.0, -0.27), "revolute", (0, 1, 0)),
    ("right_hand", 4, (0.0, 0.0, -0.26), "fixed", (0, 0, 0)),
    ("left_upper_arm", 1, (0.02, 0.18, 0.16), "spherical", (0, 0, 0)),
    ("left_lower_arm", 6, (0.0, 0.0, -0.27), "revolute", (0, 1, 0)),
    ("left_hand", 7, (0.0, 0.0, -0.26), "fixed", (0, 0, 0)),
    ("right_thigh", 0, (0.0, -0.09, -0.05), "spherical", (0, 0, 0)),
    ("right_shin", 9, (0.0, 0.0, -0.42), "revolute", (0, 1, 0)),
    ("right_foot", 10, (0.0, 0.0, -0.41), "spherical", (0, 0, 0)),
    ("left_thigh", 0, (0.0, 0.09, -0.05), "spherical", (0, 0, 0)),
    ("left_shin", 12, (0.0, 0.0, -0.42), "revolute", (0, 1, 0)),
    ("left_foot", 13, (0.0, 0.0, -0.41), "spherical", (0, 0, 0)),
]


def canonical_body_model() -> BodyModel:
    """15-body humanoid layout (12 rotating joints, 28 DoF); used for
    dimension contracts, not simulation."""
    names, parents, offsets, types, axes = zip(
        *[(n, p, o, t, a) for n, p, o, t, a in _CANONICAL_LINKS]
    )
    return BodyModel(
        link_names=tuple(names),
        parents=tuple(parents),
        offsets=np.array(offsets, dtype=np.float64),
        joint_types=tuple(types),
        joint_axes=np.array(axes, dtype=np.float64),
        head_index=2,
        hand_indices=(5, 8),
        ee_indices=(5, 8, 11, 14, 2),
    )


def save_body_model(model: BodyModel, path) -> None:
    with open(path, "w") as f:
        for i in range(model.n_links):
            parent = "-" if model.parents[i] < 0 else model.link_names[model.parents[i]]
            ox, oy, oz = model.offsets[i]
            ax, ay, az = model.joint_axes[i]
            f.write(
                f"link {model.link_names[i]} {parent} {ox!r} {oy!r} {oz!r} "
                f"{model.joint_types[i]} {ax!r} {ay!r} {az!r}\n"
            )
        f.write(f"head {model.link_names[model.head_index]}\n")
        f.write("hands " + " ".join(model.link_names[i] for i in model.hand_indices) + "\n")
        f.write("ee " + " ".join(model.link_names[i] for i in model.ee_indices) + "\n")
        cx, cy, cz = model.camera_offset
        f.write(f"camera {cx!r} {cy!r} {cz!r}\n")


def load_body_model(path) -> BodyModel:
    names, parents, offsets, types, axes = [], [], [], [], []
    head = hands = ee = None
    camera = np.array([0.103, 0.0, 0.175])
    with open(path) as f:
        for line in f:
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            kind = parts[0]
            if kind == "link":
                names.append(parts[1])
                parents.append(-1 if parts[2] == "-" else names.index(parts[2]))
                offsets.append([float(v) for v in parts[3:6]])
                types.append(parts[6])
                axes.append([float(v) for v in parts[7:10]])
            elif kind == "head":
                head = parts[1]
            elif kind == "hands":
                hands = parts[1:]
            elif kind == "ee":
                ee = parts[1:]
            elif kind == "camera":
                camera = np.array([float(v) for v in parts[1:4]])
            else:
                raise RoomshiftError(f"unknown body config line: {line!r}")
    if head is None or hands is None or ee is None:
        raise RoomshiftError("body config must declare head, hands, and ee lines")
    return BodyModel(
        link_names=tuple(names),
        parents=tuple(parents),
        offsets=np.array(offsets, dtype=np.float64),
        joint_types=tuple(types),
        joint_axes=np.array(axes, dtype=np.float64),
        head_index=names.index(head),
        hand_indices=tuple(names.index(h) for h in hands),
        ee_indices=tuple(names.index(e) for e in ee),
        camera_offset=camera,
    )
