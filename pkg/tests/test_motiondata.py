import io
import warnings

import numpy as np
import pytest
import hypothesis.strategies as st
from hypothesis import given, settings

from reactmotion.motiondata import (
    DEFAULT_PARTITION,
    DEFAULT_SKELETON,
    JOINT,
    POSE_DIM,
    TPOSE,
    ClipError,
    InteractionClip,
    PartitionSpec,
    ReferenceSkeleton,
    SBUParseError,
    assemble_pose,
    bone_lengths,
    dumps_clip,
    format_sbu_clip,
    load_dataset,
    load_sbu_directory,
    loads_clip,
    make_synthetic_dataset,
    normalize_interaction,
    parse_sbu_clip,
    partition_pose,
    save_dataset,
    split_loso,
    window_clip,
)
from reactmotion.motiondata.synthetic import A_TEMPLATE, B_TEMPLATE


def yaw(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])


def random_clip(seed, frames=6, label=1, subjects=("s01", "s02")):
    """T-pose pair under a random yaw and offset, jittered per frame."""
    rng = np.random.default_rng(seed)
    R, t = yaw(rng.uniform(-np.pi, np.pi)), rng.normal(size=3) * 2
    base = TPOSE @ R.T + t
    a = base[None] + 0.05 * rng.normal(size=(frames, 15, 3))
    b = (base + R @ np.array([0, 0, 1.2]))[None] + 0.05 * rng.normal(size=(frames, 15, 3))
    return InteractionClip(a.reshape(frames, -1), b.reshape(frames, -1), label=label, subjects=subjects)


def pairwise(motion):
    j = motion.reshape(len(motion), 15, 3)
    return np.linalg.norm(j[:, :, None] - j[:, None], axis=-1)


# ---------------------------------------------------------------- clip container

def test_clip_rejects_bad_shapes_and_labels():
    ok = np.zeros((3, POSE_DIM))
    with pytest.raises(ClipError):
        InteractionClip(ok, np.zeros((4, POSE_DIM)), 1)
    with pytest.raises(ClipError):
        InteractionClip(np.zeros((3, 44)), np.zeros((3, 44)), 1)
    with pytest.raises(ClipError):
        InteractionClip(ok, ok, 0)
    with pytest.raises(ClipError):
        InteractionClip(ok[:1], ok[:1], 1)
    bad = ok.copy()
    bad[0, 0] = np.nan
    with pytest.raises(ClipError):
        InteractionClip(bad, ok, 1)


def test_canonical_document_round_trip(tmp_path):
    clip = random_clip(0)
    back = loads_clip(dumps_clip(clip))
    assert back.motion_a.tobytes() == clip.motion_a.tobytes()
    assert back.motion_b.tobytes() == clip.motion_b.tobytes()
    assert (back.label, back.subjects) == (clip.label, clip.subjects)
    save_dataset(tmp_path, [clip, random_clip(1)])
    (tmp_path / "config.json").write_text('{"not": "a clip"}')
    assert len(load_dataset(tmp_path)) == 2


def test_canonical_document_rejects_other_formats():
    with pytest.raises(ClipError):
        loads_clip('{"format": "other"}')
    with pytest.raises(ClipError):
        loads_clip("{not json")


# ---------------------------------------------------------------- SBU text

def test_parse_two_lines_exactly():
    rows = np.arange(2 * 90, dtype=float).reshape(2, 90) / 7.0
    text = "\n".join(",".join([str(i + 1)] + [repr(float(v)) for v in r]) for i, r in enumerate(rows))
    clip = parse_sbu_clip(text, label=3, subjects=("s01", "s02"))
    assert len(clip) == 2
    np.testing.assert_array_equal(clip.motion_a, rows[:, :45])
    np.testing.assert_array_equal(clip.motion_b, rows[:, 45:])


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**16))
def test_sbu_format_parse_round_trip(seed):
    clip = random_clip(seed)
    back = parse_sbu_clip(io.StringIO(format_sbu_clip(clip)), clip.label, clip.subjects)
    assert back.motion_a.tobytes() == clip.motion_a.tobytes()
    assert back.motion_b.tobytes() == clip.motion_b.tobytes()


def test_parse_errors_name_the_line():
    good = ",".join(["1"] + ["0.0"] * 90)
    with pytest.raises(SBUParseError, match="line 2"):
        parse_sbu_clip(good + "\n" + ",".join(["2"] + ["0.0"] * 89), 1)
    with pytest.raises(SBUParseError, match="line 2"):
        parse_sbu_clip(good + "\n" + ",".join(["2"] + ["x"] * 90), 1)
    with pytest.raises(SBUParseError, match="line 2"):
        parse_sbu_clip(good + "\n" + good, 1)
    with pytest.raises(SBUParseError):
        parse_sbu_clip("\n\n", 1)


def test_prescale_is_per_joint_affine():
    clip = random_clip(3)
    scaled = parse_sbu_clip(format_sbu_clip(clip), 1, prescale=([2, 3, 4], [1, 0, -1]))
    expect = clip.motion_a.reshape(-1, 15, 3) * [2, 3, 4] + [1, 0, -1]
    np.testing.assert_allclose(scaled.motion_a, expect.reshape(len(clip), -1))


def test_sbu_directory_import(tmp_path):
    for cat, pair, label in (("04", "s01s02", 2), ("pushing", "s03s04", 2), ("01", "s01s02", None)):
        take = tmp_path / cat / pair / "001"
        take.mkdir(parents=True, exist_ok=True)
        (take / "skeleton_pos.txt").write_text(format_sbu_clip(random_clip(1, frames=50)))
    clips = load_sbu_directory(tmp_path)
    # approaching is excluded; 50 frames give 3 windows per take
    assert len(clips) == 6
    assert {c.label for c in clips} == {2}
    assert {c.subjects for c in clips} == {("s01", "s02"), ("s03", "s04")}


# ---------------------------------------------------------------- normalization

def test_pure_translation_case():
    a = np.repeat((TPOSE + [1.0, 2.0, 3.0]).reshape(1, -1), 3, axis=0)
    pelvis = 0.5 * (TPOSE[JOINT["left_hip"]] + TPOSE[JOINT["right_hip"]])
    _, tr = normalize_interaction(InteractionClip(a, a.copy(), 1))
    np.testing.assert_allclose(tr.rotation, np.eye(3), atol=1e-12)
    np.testing.assert_allclose(tr.translation, -(pelvis + [1.0, 2.0, 3.0]), atol=1e-12)


def test_normalized_frame_is_canonical():
    clip, _ = normalize_interaction(random_clip(4))
    j = clip.motion_a[0].reshape(15, 3)
    lh, rh = j[JOINT["left_hip"]], j[JOINT["right_hip"]]
    np.testing.assert_allclose(0.5 * (lh + rh), 0.0, atol=1e-12)
    facing = np.cross([0, 1, 0], rh - lh)
    facing[1] = 0
    np.testing.assert_allclose(facing / np.linalg.norm(facing), [0, 0, 1], atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_normalization_is_rigid_and_idempotent(seed):
    clip = random_clip(seed)
    once, tr = normalize_interaction(clip)
    R = tr.rotation
    np.testing.assert_allclose(R @ R.T, np.eye(3), atol=1e-12)
    assert np.linalg.det(R) == pytest.approx(1.0)
    for before, after in ((clip.motion_a, once.motion_a), (clip.motion_b, once.motion_b)):
        np.testing.assert_allclose(pairwise(after), pairwise(before), atol=1e-9)
    twice, tr2 = normalize_interaction(once)
    np.testing.assert_allclose(twice.motion_a, once.motion_a, atol=1e-9)
    np.testing.assert_allclose(twice.motion_b, once.motion_b, atol=1e-9)
    np.testing.assert_allclose(tr2.rotation, np.eye(3), atol=1e-9)


def test_degenerate_facing_raises():
    a = np.repeat(TPOSE.reshape(1, -1), 2, axis=0)
    a[:, 3 * JOINT["right_hip"]:3 * JOINT["right_hip"] + 3] = a[0, 3 * JOINT["left_hip"]:3 * JOINT["left_hip"] + 3]
    with pytest.raises(ClipError):
        normalize_interaction(InteractionClip(a, a.copy(), 1))


# ---------------------------------------------------------------- windowing

def _ramp_clip(frames):
    m = np.arange(frames, dtype=float)[:, None] * np.ones(POSE_DIM)
    return InteractionClip(m, -m, label=2)


def test_window_counts():
    assert len(window_clip(_ramp_clip(100), 40, 5)) == (100 - 40) // 5 + 1 == 13
    one = window_clip(_ramp_clip(40), 40, 5)
    assert len(one) == 1 and np.array_equal(one[0].motion_a, _ramp_clip(40).motion_a)
    assert window_clip(_ramp_clip(39), 40, 5) == []


@given(frames=st.integers(2, 80), size=st.integers(2, 40), stride=st.integers(1, 10))
def test_window_offsets(frames, size, stride):
    wins = window_clip(_ramp_clip(frames), size, stride)
    assert [int(w.motion_a[0, 0]) for w in wins] == list(range(0, frames - size + 1, stride))
    assert all(len(w) == size and w.label == 2 for w in wins)
    assert all(np.array_equal(w.motion_b, -w.motion_a) for w in wins)


# ---------------------------------------------------------------- partition and bones

def test_default_partition_shapes():
    parts = partition_pose(np.zeros(POSE_DIM))
    assert [p.shape for p in parts] == [(9,)] * 5
    assert all(not p.any() for p in parts)


@given(seed=st.integers(0, 2**16), order=st.permutations(range(5)))
def test_partition_reassembly_is_identity(seed, order):
    pose = np.random.default_rng(seed).normal(size=(3, POSE_DIM))
    spec = DEFAULT_PARTITION.reorder(order)
    assert np.array_equal(assemble_pose(partition_pose(pose, spec), spec), pose)
    for p, vec in enumerate(partition_pose(pose, spec)):
        cols = [3 * j + k for j in range(15) if spec.part_of[j] == p for k in range(3)]
        assert np.array_equal(vec, pose[:, cols])


def test_partition_spec_validation():
    with pytest.raises(ValueError):
        PartitionSpec((0,) * 15)
    with pytest.raises(ValueError):
        PartitionSpec((0, 1, 2, 3) * 3 + (0, 1, 2))


def test_bone_lengths_examples():
    pose = np.zeros((15, 3))
    pose[JOINT["head"]] = [0, 1, 0]
    lengths = bone_lengths(pose.reshape(-1))
    bones = list(zip(DEFAULT_SKELETON.parents, DEFAULT_SKELETON.children))
    k = bones.index((JOINT["head"], JOINT["neck"])) if (JOINT["head"], JOINT["neck"]) in bones \
        else bones.index((JOINT["neck"], JOINT["head"]))
    assert lengths[k] == 1.0
    assert lengths.shape == (14,)
    assert np.count_nonzero(lengths) == 1


@given(seed=st.integers(0, 2**16))
def test_bone_lengths_match_direct_distances(seed):
    pose = np.random.default_rng(seed).normal(size=POSE_DIM)
    j = pose.reshape(15, 3)
    expect = [np.sqrt(sum((j[c][k] - j[p][k]) ** 2 for k in range(3)))
              for p, c in DEFAULT_SKELETON.bones]
    np.testing.assert_allclose(bone_lengths(pose), expect, rtol=1e-12)


def test_reference_skeleton_is_a_tree():
    assert len(DEFAULT_SKELETON.bones) == 14
    assert all(length > 0 for length in DEFAULT_SKELETON.ref_lengths)
    bones = list(DEFAULT_SKELETON.bones)
    with pytest.raises(ValueError):
        ReferenceSkeleton(tuple(bones[:-1] + [bones[0]]), DEFAULT_SKELETON.ref_lengths)
    with pytest.raises(ValueError):
        ReferenceSkeleton(DEFAULT_SKELETON.bones, (0.0,) * 14)


# ---------------------------------------------------------------- synthetic data

def test_synthetic_determinism():
    for noise in (0.0, 0.01):
        d1 = make_synthetic_dataset(clips_per_class=3, noise=noise, seed=7)
        d2 = make_synthetic_dataset(clips_per_class=3, noise=noise, seed=7)
        for c1, c2 in zip(d1, d2):
            assert c1.motion_b.tobytes() == c2.motion_b.tobytes()


def test_synthetic_zero_phase_is_template():
    clip = make_synthetic_dataset(clips_per_class=1)[0]
    assert clip.label == 1
    np.testing.assert_array_equal(clip.motion_b[0], B_TEMPLATE.reshape(-1))
    np.testing.assert_array_equal(clip.motion_a[0], A_TEMPLATE.reshape(-1))


@pytest.mark.parametrize("length", [10, 23, 40])
def test_synthetic_matches_generating_formula(length):
    for clip in make_synthetic_dataset(clips_per_class=2, length=length):
        for t in range(length):
            a = A_TEMPLATE.copy()
            b = B_TEMPLATE.copy()
            lead = 0.5 * np.sin(np.pi * t / length)
            follow = max(np.sin(np.pi * (t - 3) / length), 0.0)
            if clip.label == 1:
                a[JOINT["right_hand"], 2] += lead
                b[:, 2] -= 0.4 * follow
            else:
                for name in ("right_elbow", "right_hand"):
                    a[JOINT[name], 1] += lead
                    b[JOINT[name], 1] += 0.5 * follow
            np.testing.assert_array_equal(clip.motion_a[t], a.reshape(-1))
            np.testing.assert_array_equal(clip.motion_b[t], b.reshape(-1))


def test_synthetic_noise_level():
    clean = make_synthetic_dataset(clips_per_class=4)
    noisy = make_synthetic_dataset(clips_per_class=4, noise=0.01, seed=1)
    resid = np.concatenate([(n.motion_b - c.motion_b).ravel() for n, c in zip(noisy, clean)])
    assert abs(resid.std() - 0.01) < 0.001


def test_synthetic_rejects_short_clips():
    with pytest.raises(ValueError):
        make_synthetic_dataset(length=9)


# ---------------------------------------------------------------- LOSO

def test_loso_errors_and_degenerate_fold():
    clips = make_synthetic_dataset(clips_per_class=2, n_pairs=1)
    with pytest.raises(ClipError):
        split_loso(clips, "s99")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        train, test = split_loso(clips, "s01")
    assert train == [] and len(test) == len(clips) and caught


@given(n_pairs=st.integers(1, 5), per_class=st.integers(1, 5))
@settings(deadline=None)
def test_loso_folds_are_disjoint_and_exhaustive(n_pairs, per_class):
    clips = make_synthetic_dataset(clips_per_class=per_class, length=10, n_pairs=n_pairs)
    subjects = sorted({s for c in clips for s in c.subjects})
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for s in subjects:
            train, test = split_loso(clips, s)
            ids_train, ids_test = {id(c) for c in train}, {id(c) for c in test}
            assert not ids_train & ids_test
            assert ids_train | ids_test == {id(c) for c in clips}
            assert all(s in c.subjects for c in test) and all(s not in c.subjects for c in train)
