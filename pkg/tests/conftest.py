import pytest

from evalaudit.records import Dataset, EvaluationRecord, GroupLabel, Provenance


def make_record(
    rid="r1",
    comment="solid shift overall",
    score=2,
    student="M",
    assessor="F",
    **kwargs,
):
    return EvaluationRecord(
        id=rid,
        comment=comment,
        global_score=score,
        student_gender=GroupLabel.parse(student),
        assessor_gender=GroupLabel.parse(assessor),
        **kwargs,
    )


def make_dataset(records, source="test"):
    return Dataset(records=tuple(records), provenance=Provenance(source=source, loaded_at=""))


@pytest.fixture
def tiny_dataset():
    return make_dataset(
        [
            make_record("a", "good differential, interested, team player", 1, "M", "M"),
            make_record("b", "great job keeping up with your patients", 2, "F", "M"),
            make_record("c", "came off as arrogant to multiple residents", 0, "M", "F"),
            make_record("d", "a very thorough historian", 3, "F", "F"),
        ]
    )
