"""15-joint Kinect skeleton: joint order, body-part partition, bones."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

JOINT_NAMES = (
    "head", "neck", "torso",
    "left_shoulder", "left_elbow", "left_hand",
    "right_shoulder", "right_elbow", "right_hand",
    "left_hip", "left_knee", "left_foot",
    "right_hip", "right_knee", "right_foot",
)
JOINT = {name: i for i, name in enumerate(JOINT_NAMES)}
N_JOINTS = len(JOINT_NAMES)
POSE_DIM = 3 * N_JOINTS

PART_NAMES = ("trunk", "left_arm", "right_arm", "left_leg", "right_leg")

# Canonical T-pose, pelvis (hip midpoint) at the origin, facing +z.  The
# character's right side is -x.
TPOSE = np.array([
    [0.00, 0.75, 0.0],   # head
    [0.00, 0.55, 0.0],   # neck
    [0.00, 0.25, 0.0],   # torso
    [0.20, 0.50, 0.0],   # left shoulder
    [0.48, 0.50, 0.0],   # left elbow
    [0.74, 0.50, 0.0],   # left hand
    [-0.20, 0.50, 0.0],  # right shoulder
    [-0.48, 0.50, 0.0],  # right elbow
    [-0.74, 0.50, 0.0],  # right hand
    [0.10, 0.00, 0.0],   # left hip
    [0.10, -0.45, 0.0],  # left knee
    [0.10, -0.88, 0.0],  # left foot
    [-0.10, 0.00, 0.0],  # right hip
    [-0.10, -0.45, 0.0],  # right knee
    [-0.10, -0.88, 0.0],  # right foot
])

BONES = (
    ("neck", "head"),
    ("torso", "neck"),
    ("neck", "left_shoulder"),
    ("left_shoulder", "left_elbow"),
    ("left_elbow", "left_hand"),
    ("neck", "right_shoulder"),
    ("right_shoulder", "right_elbow"),
    ("right_elbow", "right_hand"),
    ("torso", "left_hip"),
    ("left_hip", "left_knee"),
    ("left_knee", "left_foot"),
    ("torso", "right_hip"),
    ("right_hip", "right_knee"),
    ("right_knee", "right_foot"),
)


def as_joints(pose) -> np.ndarray:
    """View a flat 45-vector (or ``(..., 45)`` array) as ``(..., 15, 3)``."""
    pose = np.asarray(pose, dtype=np.float64)
    if pose.shape[-1] != POSE_DIM:
        raise ValueError(f"pose must have {POSE_DIM} coordinates, got {pose.shape[-1]}")
    return pose.reshape(pose.shape[:-1] + (N_JOINTS, 3))


@dataclass(frozen=True)
class PartitionSpec:
    """Maps each joint to one of the five body parts (0-based, in ``names`` order)."""

    part_of: tuple[int, ...]
    names: tuple[str, ...] = PART_NAMES

    def __post_init__(self):
        if len(self.part_of) != N_JOINTS:
            raise ValueError(f"partition must cover {N_JOINTS} joints")
        n = len(self.names)
        for p in range(n):
            if p not in self.part_of:
                raise ValueError(f"part {self.names[p]!r} has no joints")
        if any(not 0 <= p < n for p in self.part_of):
            raise ValueError("joint assigned to an unknown part")

    @property
    def n_parts(self) -> int:
        return len(self.names)

    def joints(self, part: int) -> list[int]:
        return [j for j in range(N_JOINTS) if self.part_of[j] == part]

    def coords(self, part: int) -> np.ndarray:
        """Flat coordinate indices of ``part``, ascending joint order."""
        return np.array([3 * j + k for j in self.joints(part) for k in range(3)], dtype=np.intp)

    def dims(self) -> list[int]:
        return [3 * len(self.joints(p)) for p in range(self.n_parts)]

    def permutation(self) -> np.ndarray:
        """Coordinate order produced by concatenating the parts in part order."""
        return np.concatenate([self.coords(p) for p in range(self.n_parts)])

    def reorder(self, order) -> "PartitionSpec":
        """Same joint membership, parts listed in ``order`` (old indices)."""
        order = list(order)
        new_index = {old: new for new, old in enumerate(order)}
        return PartitionSpec(tuple(new_index[p] for p in self.part_of),
                             tuple(self.names[p] for p in order))


_JOINT_PART = {
    "head": "trunk", "neck": "trunk", "torso": "trunk",
    "left_shoulder": "left_arm", "left_elbow": "left_arm", "left_hand": "left_arm",
    "right_shoulder": "right_arm", "right_elbow": "right_arm", "right_hand": "right_arm",
    "left_hip": "left_leg", "left_knee": "left_leg", "left_foot": "left_leg",
    "right_hip": "right_leg", "right_knee": "right_leg", "right_foot": "right_leg",
}
DEFAULT_PARTITION = PartitionSpec(tuple(PART_NAMES.index(_JOINT_PART[j]) for j in JOINT_NAMES))


def partition_pose(pose, spec: PartitionSpec = DEFAULT_PARTITION) -> list[np.ndarray]:
    pose = np.asarray(pose, dtype=np.float64)
    return [pose[..., spec.coords(p)] for p in range(spec.n_parts)]


def assemble_pose(parts, spec: PartitionSpec = DEFAULT_PARTITION) -> np.ndarray:
    """Inverse of ``partition_pose``."""
    flat = np.concatenate(parts, axis=-1)
    pose = np.empty_like(flat)
    pose[..., spec.permutation()] = flat
    return pose


@dataclass(frozen=True)
class ReferenceSkeleton:
    bones: tuple[tuple[int, int], ...]
    ref_lengths: tuple[float, ...]

    def __post_init__(self):
        if len(self.bones) != len(self.ref_lengths):
            raise ValueError("one reference length per bone")
        if any(length <= 0 for length in self.ref_lengths):
            raise ValueError("reference bone lengths must be positive")
        if not _is_spanning_tree(self.bones):
            raise ValueError("bones must form a tree over all joints")

    @property
    def parents(self) -> np.ndarray:
        return np.array([b[0] for b in self.bones], dtype=np.intp)

    @property
    def children(self) -> np.ndarray:
        return np.array([b[1] for b in self.bones], dtype=np.intp)

    @classmethod
    def from_pose(cls, pose, bones=BONES) -> "ReferenceSkeleton":
        idx = tuple((JOINT[a], JOINT[b]) for a, b in bones)
        joints = as_joints(pose)
        lengths = tuple(float(np.linalg.norm(joints[c] - joints[p])) for p, c in idx)
        return cls(idx, lengths)


def _is_spanning_tree(bones) -> bool:
    if len(bones) != N_JOINTS - 1:
        return False
    root = list(range(N_JOINTS))

    def find(i):
        while root[i] != i:
            root[i] = root[root[i]]
            i = root[i]
        return i

    for a, b in bones:
        ra, rb = find(a), find(b)
        if ra == rb:
            return False
        root[ra] = rb
    return True


DEFAULT_SKELETON = ReferenceSkeleton.from_pose(TPOSE.reshape(-1))


def bone_lengths(pose, skeleton: ReferenceSkeleton = DEFAULT_SKELETON) -> np.ndarray:
    """Bone lengths of a pose; works on ``(..., 45)`` arrays."""
    joints = as_joints(pose)
    diff = joints[..., skeleton.children, :] - joints[..., skeleton.parents, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))
