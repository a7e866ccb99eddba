import numpy as np
import pytest

from hybridpose.angles import PoseAngles, euler_to_rotation, rotation_to_euler
from hybridpose.data import (
    ANNOTATION_HEADER,
    AnnotationRecord,
    ParseError,
    PREDICTIONS_HEADER,
    filter_range,
    format_annotation_csv,
    format_biwi_pose,
    format_predictions_csv,
    parse_annotation_csv,
    parse_biwi_pose,
)

IDENTITY_POSE = "1 0 0\n0 1 0\n0 0 1\n\n0 0 0\n"


def test_parse_identity_pose():
    rotation, translation = parse_biwi_pose(IDENTITY_POSE)
    assert (rotation == np.eye(3)).all()
    assert (translation == np.zeros(3)).all()
    assert rotation_to_euler(rotation) == PoseAngles(0.0, 0.0, 0.0)


def test_pose_text_roundtrip_recovers_angles():
    rng = np.random.default_rng(0)
    for _ in range(100):
        pose = PoseAngles(rng.uniform(-75, 75), rng.uniform(-60, 60), rng.uniform(-50, 50))
        rotation = euler_to_rotation(pose)
        text = format_biwi_pose(rotation, translation=(10.0, -3.5, 250.0))
        parsed, translation = parse_biwi_pose(text)
        assert (parsed == rotation).all()
        assert (translation == np.array([10.0, -3.5, 250.0])).all()
        got = rotation_to_euler(parsed)
        assert abs(got.yaw - pose.yaw) < 1e-6
        assert abs(got.pitch - pose.pitch) < 1e-6
        assert abs(got.roll - pose.roll) < 1e-6


def test_pose_blank_line_is_optional():
    rotation, translation = parse_biwi_pose("1 0 0\n0 1 0\n0 0 1\n5 6 7\n")
    assert (rotation == np.eye(3)).all()
    assert (translation == np.array([5.0, 6.0, 7.0])).all()


def test_pose_parse_errors_carry_line_numbers():
    with pytest.raises(ParseError, match="line 2") as info:
        parse_biwi_pose("1 0 0\n0 1\n0 0 1\n0 0 0\n")
    assert info.value.line == 2
    with pytest.raises(ParseError, match="line 3"):
        parse_biwi_pose("1 0 0\n0 1 0\n0 x 1\n0 0 0\n")
    with pytest.raises(ParseError, match="4 .*lines|expected"):
        parse_biwi_pose("1 0 0\n0 1 0\n")
    with pytest.raises(ParseError, match="line"):
        parse_biwi_pose("1 0 0\n0 1 0\n0 0 1\n0 0 0\n1 2 3\n")


def test_pose_rejects_non_orthonormal_matrix():
    text = "1.1 0 0\n0 1 0\n0 0 1\n0 0 0\n"
    with pytest.raises(ParseError, match="line 1"):
        parse_biwi_pose(text)
    # reflection: valid orthogonal matrix but determinant -1
    with pytest.raises(ParseError, match="line 1"):
        parse_biwi_pose("1 0 0\n0 1 0\n0 0 -1\n0 0 0\n")


def test_annotation_csv_roundtrip():
    records = [
        AnnotationRecord("a", PoseAngles(1.5, -2.25, 0.0)),
        AnnotationRecord("b", PoseAngles(-10.0, 3.0, 99.0)),
    ]
    text = format_annotation_csv(records)
    assert text.splitlines()[0] == ANNOTATION_HEADER
    parsed = parse_annotation_csv(text)
    assert len(parsed) == 2
    assert parsed[0].sample_id == "a"
    assert parsed[0].pose == records[0].pose
    assert parsed[1].pose == records[1].pose


def test_annotation_csv_errors():
    with pytest.raises(ParseError, match="line 1"):
        parse_annotation_csv("wrong,header,row,here\na,1,2,3\n")
    with pytest.raises(ParseError, match="line 2"):
        parse_annotation_csv(f"{ANNOTATION_HEADER}\na,1,2\n")
    with pytest.raises(ParseError, match="line 3"):
        parse_annotation_csv(f"{ANNOTATION_HEADER}\na,1,2,3\nb,1,x,3\n")
    with pytest.raises(ParseError, match="duplicate"):
        parse_annotation_csv(f"{ANNOTATION_HEADER}\na,1,2,3\na,4,5,6\n")
    with pytest.raises(ParseError, match="empty id"):
        parse_annotation_csv(f"{ANNOTATION_HEADER}\n,1,2,3\n")
    # header-only file is an empty record set, not an error
    assert parse_annotation_csv(f"{ANNOTATION_HEADER}\n") == []
    with pytest.raises(ParseError, match="line 1"):
        parse_annotation_csv("")


def test_filter_range_is_inclusive():
    records = [
        AnnotationRecord("in", PoseAngles(99.0, -99.0, 0.0)),
        AnnotationRecord("out", PoseAngles(99.001, 0.0, 0.0)),
        AnnotationRecord("also_out", PoseAngles(0.0, 0.0, -100.0)),
    ]
    kept, dropped = filter_range(records)
    assert [r.sample_id for r in kept] == ["in"]
    assert dropped == 2
    kept, dropped = filter_range(records, limit=100.0)
    assert len(kept) == 3 and dropped == 0
    with pytest.raises(ValueError, match="limit"):
        filter_range(records, limit=-1.0)


def test_predictions_csv_layout():
    text = format_predictions_csv(
        ["s1", "s2"],
        [PoseAngles(1.0, 2.0, 3.0), PoseAngles(-1.0, 0.5, 0.0)],
        [PoseAngles(1.1, 2.2, 3.3), PoseAngles(-0.9, 0.4, 0.1)],
    )
    lines = text.splitlines()
    assert lines[0] == PREDICTIONS_HEADER
    assert len(lines) == 3
    assert lines[1].startswith("s1,1")
    with pytest.raises(ValueError, match="length"):
        format_predictions_csv(["s1"], [PoseAngles(0, 0, 0)], [])
