import random
from dataclasses import replace
from datetime import datetime, timedelta

import pytest

from conftest import make_record, ticking_clock
from sketchvc.analytics import (
    DocDensityReport,
    EventSpan,
    concept_pyramid,
    icd,
    render_pyramid,
    stroke_distribution,
)
from sketchvc.errors import EmptyInput, EmptyRepo, SchemaViolation
from sketchvc.repo import Repository, replay_session
from sketchvc.sessions import ConceptSwitch, SessionLog, StrokeAdded
from sketchvc.strokes import StrokeCategory
from sketchvc.synth import MANUAL_BASELINE_SHAPE, TRACKED_SESSION_SHAPE, gen_session


def fresh_repo(tmp_path, name="r"):
    return Repository.init(tmp_path / name, author_name="ada", clock=ticking_clock())


def events(kind, n):
    return [EventSpan(kind=kind, label=f"{kind}-{i}") for i in range(n)]


# --- concept pyramid --------------------------------------------------------

def test_single_branch_pyramid(tmp_path):
    repo = fresh_repo(tmp_path)
    for i in range(5):
        repo.add_stroke(make_record(random.Random(i)))
        repo.commit(f"v{i}")
    pyramid = concept_pyramid(repo)
    assert pyramid.width == 1
    assert pyramid.avg_height == 5.0
    assert pyramid.total_commits == 5
    assert pyramid.heights == {"main": 5}
    assert pyramid.intermediate_stages == 4


def test_tracked_session_pyramid(tmp_path):
    repo = fresh_repo(tmp_path)
    replay_session(repo, gen_session(TRACKED_SESSION_SHAPE, seed=1))
    pyramid = concept_pyramid(repo)
    assert pyramid.width == 13
    assert pyramid.total_commits == 45
    assert pyramid.avg_height == pytest.approx(3.46, abs=0.01)
    assert sorted(pyramid.heights.values(), reverse=True) == sorted(TRACKED_SESSION_SHAPE, reverse=True)


def test_manual_baseline_pyramid(tmp_path):
    repo = fresh_repo(tmp_path)
    replay_session(repo, gen_session(MANUAL_BASELINE_SHAPE, seed=2))
    pyramid = concept_pyramid(repo)
    assert pyramid.width == 5
    assert pyramid.total_commits == 5
    assert pyramid.avg_height == 1.0
    assert pyramid.intermediate_stages == 0


def test_pyramid_empty_repo(tmp_path):
    with pytest.raises(EmptyRepo):
        concept_pyramid(fresh_repo(tmp_path))


def test_pyramid_consistency_when_extending_a_tip(tmp_path):
    repo = fresh_repo(tmp_path)
    replay_session(repo, gen_session([3, 2], seed=5))
    before = concept_pyramid(repo)
    tip = repo.branches()["main"]
    repo.checkout(tip)
    repo.add_stroke(make_record(random.Random(77)))
    repo.commit("extend")
    after = concept_pyramid(repo)
    assert after.total_commits == before.total_commits + 1
    assert after.heights["main"] == before.heights["main"] + 1
    assert after.width == before.width
    assert after.intermediate_stages == after.total_commits - after.width


def test_render_pyramid_mentions_every_branch(tmp_path):
    repo = fresh_repo(tmp_path)
    replay_session(repo, gen_session([2, 1], seed=8))
    text = render_pyramid(concept_pyramid(repo))
    assert "main" in text and "branch-1" in text
    assert "width=2" in text


# --- information content density ----------------------------------------------

def test_icd_canonical_ratio():
    text = " ".join(f"w{i}" for i in range(400))
    report = icd(text, events("specific_mapping", 18))
    assert report.word_count == 400
    assert report.specific_events == 18
    assert report.density == 0.045
    assert "0.046" in report.notes and "0.012" in report.notes


def test_icd_zero_events():
    report = icd("some words here", [])
    assert report.density == 0.0
    assert report.temporal_markers == 0


def test_icd_long_sparse_summary():
    text = " ".join(f"w{i}" for i in range(3000))
    report = icd(text, events("specific_mapping", 7) + events("temporal_marker", 3))
    assert report.density == pytest.approx(7 / 3000)
    assert report.density == pytest.approx(0.002333, abs=1e-6)
    assert report.temporal_markers == 3


def test_icd_homogeneity_under_duplication():
    text = " ".join(f"w{i}" for i in range(50))
    spans = events("specific_mapping", 4)
    single = icd(text, spans)
    doubled = icd(text + " " + text, spans + spans)
    assert doubled.density == single.density


def test_icd_empty_text():
    with pytest.raises(EmptyInput):
        icd("   ", [])


def test_event_span_kind_validated():
    with pytest.raises(SchemaViolation):
        EventSpan(kind="vague_feeling")


# --- stroke distribution ---------------------------------------------------------

def session_from_counts(counts_per_concept):
    """Build a SessionLog with exact per-concept category counts."""
    base = make_record(random.Random(0), t_offsets_ms=None)
    cursor = datetime(2026, 1, 1)
    evts = []
    for cid, counts in enumerate(counts_per_concept):
        cursor += timedelta(seconds=5)
        evts.append(ConceptSwitch(concept_id=cid, timestamp=cursor))
        for cat, n in counts.items():
            for _ in range(n):
                cursor += timedelta(seconds=1)
                record = replace(base, category=StrokeCategory(cat), timestamp=cursor)
                evts.append(StrokeAdded(record=record, concept_id=cid))
    return SessionLog(author="fixture", started_at=datetime(2026, 1, 1), events=tuple(evts))


OBSERVED_MIX = {
    "defining": 381,
    "shading": 250,
    "detailing": 213,
    "constraining": 60,
    "shadow": 56,
    "annotation": 40,
}


def test_distribution_single_category():
    log = session_from_counts([{"defining": 7}])
    report = stroke_distribution(log)
    assert report.per_concept_percent[0]["defining"] == 100.0
    assert report.per_concept_percent[0]["shading"] == 0.0
    assert report.aggregate_mean["defining"] == 100.0


def test_distribution_reproduces_observed_means():
    log = session_from_counts([OBSERVED_MIX, OBSERVED_MIX])
    report = stroke_distribution(log)
    assert report.aggregate_mean["defining"] == pytest.approx(38.1, abs=1e-9)
    assert report.aggregate_mean["shading"] == pytest.approx(25.0, abs=1e-9)
    assert report.aggregate_mean["detailing"] == pytest.approx(21.3, abs=1e-9)
    assert report.aggregate_std["defining"] == 0.0


def test_distribution_percentages_sum_to_100():
    log = session_from_counts([OBSERVED_MIX, {"defining": 3, "annotation": 1}])
    report = stroke_distribution(log)
    for cid, row in report.per_concept_percent.items():
        assert sum(row.values()) == pytest.approx(100.0, abs=1e-6)
    assert sum(report.time_share.values()) == pytest.approx(1.0)


def test_distribution_permutation_invariance():
    mix_a = {"defining": 4, "shading": 2}
    mix_b = {"detailing": 3, "annotation": 3}
    fwd = stroke_distribution(session_from_counts([mix_a, mix_b]))
    rev = stroke_distribution(session_from_counts([mix_b, mix_a]))
    assert fwd.per_concept_percent[0] == rev.per_concept_percent[1]
    assert fwd.per_concept_percent[1] == rev.per_concept_percent[0]
    assert fwd.aggregate_mean == rev.aggregate_mean
    assert fwd.aggregate_std == rev.aggregate_std


def test_distribution_requires_strokes():
    log = SessionLog(author="x", started_at=datetime(2026, 1, 1), events=())
    with pytest.raises(EmptyInput):
        stroke_distribution(log)


def test_report_serialization_roundtrip():
    report = DocDensityReport(word_count=10, specific_events=2, temporal_markers=1, density=0.2)
    obj = report.to_dict()
    assert obj["density"] == 0.2 and "notes" in obj


def test_csv_exports(tmp_path):
    from sketchvc.analytics import density_to_csv, distribution_to_csv, pyramid_to_csv

    repo = fresh_repo(tmp_path)
    replay_session(repo, gen_session([2, 1], seed=4))
    pyramid_csv = pyramid_to_csv(concept_pyramid(repo))
    assert pyramid_csv.startswith("branch,height\n")
    assert "_width,2" in pyramid_csv

    report = icd("alpha beta gamma delta", events("specific_mapping", 2))
    assert density_to_csv(report).splitlines()[1] == "4,2,0,0.5"

    dist = stroke_distribution(session_from_counts([{"defining": 3, "shading": 1}]))
    lines = distribution_to_csv(dist).splitlines()
    assert lines[0].startswith("concept,constraining,defining,")
    assert len(lines) == 4  # header, one concept, mean, std
