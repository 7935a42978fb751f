import os

import pytest

import fuzzer
from fuzzer import CSV_COLUMNS, FuzzJob, plan_jobs, run_campaign, run_job, summarize
from models import InputError, InternalInvariantError, PreconditionError
from utils import derive_seed

def test_plan_is_deterministic():
    first = plan_jobs('multigraph', (2, 5), (3, 12), 20, base_seed=7)
    assert first == plan_jobs('multigraph', (2, 5), (3, 12), 20, base_seed=7)
    assert [j.seed for j in first] == [derive_seed(7, k) for k in range(20)]
    for job in first:
        assert 2 <= job.n <= 5
        assert job.n < job.m <= 12

def test_plan_validation():
    with pytest.raises(InputError):
        plan_jobs('graph', (2, 3), (3, 6), 1)
    with pytest.raises(InputError):
        plan_jobs('multigraph', (2, 3), (3, 6), 1, case='case1')
    with pytest.raises(InputError):
        plan_jobs('threevalue', (2, 3), (3, 6), 1, case='case9')
    with pytest.raises(InputError):
        plan_jobs('additive', (2, 3), (3, 6), 1, zero_c=True)
    with pytest.raises(PreconditionError):
        plan_jobs('additive', (2, 8), (3, 12), 1)
    with pytest.raises(PreconditionError):
        plan_jobs('threevalue', (4, 5), (2, 4), 1)

def test_job_algorithm():
    assert FuzzJob(0, 1, 'additive', 2, 3).algorithm == 'few-agents'
    assert FuzzJob(0, 1, 'threevalue', 2, 3).algorithm == 'three-values'

def test_run_job_row():
    job = plan_jobs('threevalue', (3, 3), (6, 6), 1, case='case3')[0]
    row = run_job(job)
    assert row.passed
    assert row.case == 'case3'
    assert row.algo == 'three-values'
    assert row.iterations >= 1
    csv_row = row.to_csv_row()
    assert list(csv_row) == list(CSV_COLUMNS)
    assert csv_row['pass'] == 'true'

def test_campaign_rows_in_order():
    jobs = plan_jobs('additive', (2, 4), (3, 8), 8)
    rows = run_campaign(jobs)
    assert [r.seed for r in rows] == [j.seed for j in jobs]
    summary = summarize(rows)
    assert summary.total == 8
    assert summary.all_passed
    assert summary.crashes == 0

def test_campaign_rejects_zero_workers():
    with pytest.raises(InputError):
        run_campaign([], workers=0)

def test_crash_writes_artifact(monkeypatch, tmp_path, memory_sink):
    def broken(*args, **kwargs):
        raise InternalInvariantError("iteration limit exceeded")
    monkeypatch.setattr(fuzzer, 'allocate', broken)
    job = plan_jobs('multigraph', (2, 3), (3, 6), 1, crash_dir=str(tmp_path))[0]
    row = run_job(job)
    assert row.crashed
    assert not row.passed
    assert 'InternalInvariantError' in row.error
    assert os.path.exists(os.path.join(row.crash_dir, 'instance.json'))
    assert 'fuzz job crashed' in memory_sink.messages('error')
    assert summarize([row]).crashes == 1

def test_uncertified_result_is_a_failure(monkeypatch):
    real = fuzzer.allocate

    def incomplete(*args, **kwargs):
        result = real(*args, **kwargs)
        result.certificate.complete = False
        return result
    monkeypatch.setattr(fuzzer, 'allocate', incomplete)
    row = run_job(plan_jobs('multigraph', (2, 3), (4, 6), 1)[0])
    assert not row.passed
    assert not row.crashed
    assert row.error.startswith('certificate failed')

@pytest.mark.parametrize("family,options", [
    ('additive', {}),
    ('multigraph', {}),
    ('threevalue', {'case': 'case1'}),
    ('threevalue', {'case': 'case2'}),
    ('threevalue', {'case': 'case3'}),
    ('threevalue', {'zero_c': True}),
])
def test_small_campaigns_pass(family, options):
    rows = run_campaign(plan_jobs(family, (2, 4), (3, 9), 12, base_seed=1, **options))
    failures = [r.to_dict() for r in rows if not r.passed]
    assert not failures

@pytest.mark.slow
@pytest.mark.parametrize("family,options", [
    ('additive', {}),
    ('multigraph', {}),
    ('threevalue', {'case': 'case1'}),
    ('threevalue', {'case': 'case2'}),
    ('threevalue', {'case': 'case3'}),
    ('threevalue', {'zero_c': True}),
])
def test_desk_scale_campaigns(family, options):
    rows = run_campaign(plan_jobs(family, (2, 5), (3, 12), 1000, **options), workers=4)
    assert summarize(rows).all_passed
