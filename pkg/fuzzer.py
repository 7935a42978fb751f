"""
Deterministic fuzz campaigns: generate, allocate and certify many seeded instances, in parallel if asked
"""
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Dict, List, Optional, Tuple

from allocators import MAX_FEW_AGENTS, allocate
from generators import GenSpec, generate
from logger import LogHub, RunLogger, get_run_logger, set_hub
from models import (
    EngineLimits, InputError, InstanceKind, PreconditionError, RunTrace, ThreeValueCase
)
from repository import ArtifactRepository
from utils import derive_seed, format_value

CSV_COLUMNS = ('seed', 'family', 'case', 'n', 'm', 'algo', 'iterations', 'alpha', 'pass')

FAMILY_ALGORITHMS = {
    InstanceKind.ADDITIVE.value: 'few-agents',
    InstanceKind.MULTIGRAPH.value: 'multigraph',
    InstanceKind.THREE_VALUE.value: 'three-values',
}

@dataclass(frozen=True)
class FuzzJob:
    """One seeded run; plain fields only so it pickles into worker processes"""
    index: int
    seed: int
    family: str
    n: int
    m: int
    case: Optional[str] = None
    zero_c: bool = False
    grid: int = 100
    debug: bool = False
    crash_dir: Optional[str] = None

    @property
    def algorithm(self) -> str:
        return FAMILY_ALGORITHMS[self.family]

    def gen_spec(self) -> GenSpec:
        return GenSpec(seed=self.seed, family=self.family, n=self.n, m=self.m,
                       grid=self.grid, case=self.case, zero_c=self.zero_c)

@dataclass
class FuzzRow:
    seed: int
    family: str
    case: Optional[str]
    n: int
    m: int
    algo: str
    iterations: int
    alpha: str
    passed: bool
    error: Optional[str] = None
    crashed: bool = False
    crash_dir: Optional[str] = None

    def to_csv_row(self) -> Dict:
        return {
            'seed': self.seed,
            'family': self.family,
            'case': self.case or '',
            'n': self.n,
            'm': self.m,
            'algo': self.algo,
            'iterations': self.iterations,
            'alpha': self.alpha,
            'pass': 'true' if self.passed else 'false'
        }

    def to_dict(self) -> Dict:
        return asdict(self)

@dataclass
class CampaignSummary:
    total: int
    passed: int
    failed: int
    crashes: int

    @property
    def all_passed(self) -> bool:
        return self.total == self.passed

    def to_dict(self) -> Dict:
        return {**asdict(self), 'all_passed': self.all_passed}

# ========== PLANNING ==========

def _check_range(name: str, bounds: Tuple[int, int]):
    low, high = bounds
    if low < 1 or high < low:
        raise InputError(f"invalid {name} range {low}..{high}")

def plan_jobs(family: str, n_range: Tuple[int, int], m_range: Tuple[int, int], count: int,
              base_seed: int = 0, case: Optional[str] = None, zero_c: bool = False,
              grid: int = 100, debug: bool = False, crash_dir: Optional[str] = None) -> List[FuzzJob]:
    """Job k gets seed derive_seed(base_seed, k); its n and m are drawn from that seed"""
    if family not in FAMILY_ALGORITHMS:
        raise InputError(f"unknown family '{family}', expected one of {sorted(FAMILY_ALGORITHMS)}")
    if case is not None:
        if family != InstanceKind.THREE_VALUE.value:
            raise InputError("a case only applies to the threevalue family")
        try:
            ThreeValueCase(case)
        except ValueError:
            raise InputError(f"unknown case '{case}'") from None
    if zero_c and family != InstanceKind.THREE_VALUE.value:
        raise InputError("zero c only applies to the threevalue family")
    _check_range('n', n_range)
    _check_range('m', m_range)
    if count < 0:
        raise InputError("seed count must be non-negative")

    n_low, n_high = n_range
    m_low, m_high = m_range
    if family == InstanceKind.MULTIGRAPH.value and n_low < 2:
        raise PreconditionError("multigraph fuzzing needs at least two agents")
    if family == InstanceKind.ADDITIVE.value and n_high > MAX_FEW_AGENTS:
        raise PreconditionError(f"additive fuzzing runs the few-agents algorithm, n must be at most {MAX_FEW_AGENTS}")
    if m_high <= n_low:
        raise PreconditionError(f"m range {m_low}..{m_high} leaves no m > n for n >= {n_low}")

    jobs = []
    for k in range(count):
        seed = derive_seed(base_seed, k)
        rng = random.Random(seed)
        n = rng.randint(n_low, min(n_high, m_high - 1))
        m = rng.randint(max(m_low, n + 1), m_high)
        jobs.append(FuzzJob(k, seed, family, n, m, case, zero_c, grid, debug, crash_dir))
    return jobs

# ========== RUNNING ==========

def _iteration_limit(algo: str, case: Optional[ThreeValueCase], n: int, m: int) -> int:
    if algo == 'three-values' and case == ThreeValueCase.CASE3:
        return EngineLimits.for_three_value(n, m).max_iterations
    return EngineLimits.for_property_preserving(n, m).max_iterations

def run_job(job: FuzzJob, logger: Optional[RunLogger] = None) -> FuzzRow:
    """Generate, allocate and certify one instance; internal failures leave a crash artifact"""
    logger = logger or get_run_logger('fuzzer')
    row = FuzzRow(job.seed, job.family, job.case, job.n, job.m, job.algorithm, 0, '', False)
    instance = None
    trace = RunTrace()
    try:
        instance = generate(job.gen_spec())
        result = allocate(job.algorithm, instance, debug=job.debug, logger=logger, trace=trace)
        row.case = result.case.value if result.case else job.case
        row.iterations = result.iterations
        row.alpha = format_value(result.certificate.alpha.alpha)
        row.passed = result.passed
        limit = _iteration_limit(job.algorithm, result.case, job.n, job.m)
        if row.iterations > limit:
            row.passed = False
            row.error = f"{row.iterations} iterations exceed the bound {limit}"
        elif not row.passed:
            row.error = f"certificate failed with alpha {row.alpha}"
    except InputError as e:
        row.error = f"{type(e).__name__}: {e}"
    except Exception as e:
        row.error = f"{type(e).__name__}: {e}"
        row.crashed = True
        logger.error("fuzz job crashed", {'seed': job.seed, 'family': job.family, 'error': str(e)}, exc_info=True)
        if job.crash_dir:
            repository = ArtifactRepository(job.crash_dir)
            row.crash_dir = repository.write_crash(instance, trace, e, {
                'seed': job.seed, 'job': asdict(job), 'gen_spec': job.gen_spec().to_dict()})
    if not row.passed and row.error and not row.crashed:
        logger.warning("fuzz job failed", {'seed': job.seed, 'error': row.error})
    return row

def _init_worker(verbose: bool):
    # a forked child inherits the parent's hub without its worker thread
    set_hub(LogHub(synchronous=True, verbose=verbose))

def run_campaign(jobs: List[FuzzJob], workers: int = 1, logger: Optional[RunLogger] = None,
                 on_row: Optional[Callable[[FuzzRow], None]] = None, verbose: bool = False) -> List[FuzzRow]:
    """Rows come back in job order whatever the worker count"""
    logger = logger or get_run_logger('fuzzer')
    if workers < 1:
        raise InputError("workers must be at least 1")
    logger.info("fuzz campaign started", {'jobs': len(jobs), 'workers': workers})

    rows: List[FuzzRow] = []
    if workers == 1 or len(jobs) <= 1:
        for job in jobs:
            row = run_job(job, logger)
            rows.append(row)
            if on_row:
                on_row(row)
    else:
        chunksize = max(1, len(jobs) // (workers * 8))
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(verbose,)) as executor:
            for row in executor.map(run_job, jobs, chunksize=chunksize):
                rows.append(row)
                if on_row:
                    on_row(row)

    summary = summarize(rows)
    logger.info("fuzz campaign finished", summary.to_dict())
    return rows

def summarize(rows: List[FuzzRow]) -> CampaignSummary:
    passed = sum(1 for r in rows if r.passed)
    crashes = sum(1 for r in rows if r.crashed)
    return CampaignSummary(len(rows), passed, len(rows) - passed, crashes)

